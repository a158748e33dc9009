use crate::data::record::GameRecord;
use crate::error::{Error, Result};

/// Image-complexity predictors of one game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexityMeasures {
    pub n_objects: usize,
    /// Objects sharing the target's category, the target included.
    pub n_same_category: usize,
    /// Target area divided by image area.
    pub target_area_ratio: f64,
}

pub fn complexity_measures(game: &GameRecord) -> Result<ComplexityMeasures> {
    let target = game.target().ok_or_else(|| Error::Integrity {
        game_id: game.game_id,
        message: "target missing".into(),
    })?;
    let n_same_category = game.objects.iter().filter(|o| o.category_id == target.category_id).count();
    let image_area = game.image.width as f64 * game.image.height as f64;
    Ok(ComplexityMeasures {
        n_objects: game.objects.len(),
        n_same_category,
        target_area_ratio: target.area / image_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::record::{BBox, ImageInfo, ObjectInfo, Status};

    fn game(cats: &[usize], target_area: f64) -> GameRecord {
        GameRecord {
            game_id: 1,
            image: ImageInfo { id: 1, width: 100, height: 100 },
            objects: cats
                .iter()
                .enumerate()
                .map(|(i, &c)| ObjectInfo {
                    id: i as i64,
                    category: format!("c{c}"),
                    category_id: c,
                    bbox: BBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 },
                    area: if i == 0 { target_area } else { 50.0 },
                })
                .collect(),
            qas: vec![],
            target_id: 0,
            status: Status::Success,
        }
    }

    #[test]
    fn examples() {
        let m = complexity_measures(&game(&[18, 1, 2, 3, 4], 2000.0)).unwrap();
        assert_eq!(m, ComplexityMeasures { n_objects: 5, n_same_category: 1, target_area_ratio: 0.2 });
        let m = complexity_measures(&game(&[5, 5, 5, 5], 600.0)).unwrap();
        assert_eq!(m.n_same_category, 4);
        let m = complexity_measures(&game(&[5, 6, 7], 10_000.0)).unwrap();
        assert_eq!(m.target_area_ratio, 1.0);
    }
}
