//! Deterministic synthetic GuessWhat?! world.
//!
//! Images are 100x100 canvases holding 3..=8 axis-aligned boxes drawn from a
//! small category set. Answers to the three template questions are computed
//! exactly from geometry, and a rule questioner produces human-style
//! dialogues that always pin down the target.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::features::FeatureTable;
use crate::data::record::{Answer, BBox, GameRecord, ImageInfo, ObjectInfo, QaPair, Status, MIN_TARGET_AREA};
use crate::data::vocab::tokenize;
use crate::error::{Error, Result};

pub const CATEGORY_NAMES: [&str; 20] = [
    "ball", "dog", "cat", "car", "cup", "book", "chair", "bird", "clock", "vase", "bottle", "kite", "horse", "sheep",
    "bus", "boat", "bench", "pizza", "laptop", "bowl",
];

pub const LEFT_QUESTION: &str = "is it on the left ?";
pub const TOP_QUESTION: &str = "is it at the top ?";

pub fn category_question(category: &str) -> String {
    format!("is it a {category} ?")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyConfig {
    pub n_categories: usize,
    pub min_objects: usize,
    pub max_objects: usize,
    pub image_size: u32,
    pub feature_dim: usize,
    /// Box side lengths are drawn uniformly from this inclusive range.
    pub min_side: u32,
    pub max_side: u32,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n_categories: 10,
            min_objects: 3,
            max_objects: 8,
            image_size: 100,
            feature_dim: 32,
            min_side: 12,
            max_side: 40,
        }
    }
}

impl ToyConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(format!("toy world config: {m}")));
        if self.n_categories == 0 || self.n_categories > CATEGORY_NAMES.len() {
            return bad(&format!("n_categories must be in 1..={}", CATEGORY_NAMES.len()));
        }
        if self.min_objects < 3 || self.min_objects > self.max_objects || self.max_objects > 20 {
            return bad("objects per image must satisfy 3 <= min <= max <= 20");
        }
        if self.min_side == 0 || self.min_side > self.max_side || self.max_side > self.image_size {
            return bad("box sides must satisfy 0 < min_side <= max_side <= image_size");
        }
        if (self.max_side as f64).powi(2) <= MIN_TARGET_AREA {
            return bad("max_side too small for any target to exceed the area threshold");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive");
        }
        Ok(())
    }

    /// Category ids are 1-based, as in MS-COCO.
    pub fn category_name(&self, category_id: usize) -> &'static str {
        CATEGORY_NAMES[category_id - 1]
    }

    pub fn num_category_ids(&self) -> usize {
        self.n_categories + 1
    }
}

fn is_left(o: &ObjectInfo, image: &ImageInfo) -> bool {
    o.bbox.center().0 < image.width as f64 / 2.0
}

fn is_top(o: &ObjectInfo, image: &ImageInfo) -> bool {
    o.bbox.center().1 < image.height as f64 / 2.0
}

/// Exact answer to a template question about `target`; anything that is not
/// a template question is not applicable.
pub fn geometric_answer(question: &str, target: &ObjectInfo, image: &ImageInfo) -> Answer {
    let toks = tokenize(question);
    let toks: Vec<&str> = toks.iter().map(String::as_str).collect();
    let yes_no = |b: bool| if b { Answer::Yes } else { Answer::No };
    match toks.as_slice() {
        ["is", "it", "a", cat, "?"] if CATEGORY_NAMES.contains(cat) => yes_no(*cat == target.category),
        ["is", "it", "on", "the", "left", "?"] => yes_no(is_left(target, image)),
        ["is", "it", "at", "the", "top", "?"] => yes_no(is_top(target, image)),
        _ => Answer::NA,
    }
}

/// Objects consistent with every answered template question.
pub fn consistent_candidates<'a>(game: &'a GameRecord, qas: &[QaPair]) -> Vec<&'a ObjectInfo> {
    game.objects
        .iter()
        .filter(|o| qas.iter().all(|qa| geometric_answer(&qa.question, o, &game.image) == qa.answer))
        .collect()
}

/// Rule questioner: category questions in ascending category id until a Yes
/// (or a single candidate remains), then left/right and top/bottom questions
/// only while they still split the candidates.
pub fn script_dialogue(objects: &[ObjectInfo], target: &ObjectInfo, image: &ImageInfo) -> Vec<QaPair> {
    let mut qas = Vec::new();
    let mut cands: Vec<&ObjectInfo> = objects.iter().collect();
    let mut cats: Vec<(usize, &str)> = objects.iter().map(|o| (o.category_id, o.category.as_str())).collect();
    cats.sort_unstable();
    cats.dedup();
    for (cid, name) in cats {
        if cands.len() <= 1 {
            break;
        }
        let answer = if target.category_id == cid { Answer::Yes } else { Answer::No };
        qas.push(QaPair {
            question: category_question(name),
            answer,
        });
        cands.retain(|o| (o.category_id == cid) == (answer == Answer::Yes));
        if answer == Answer::Yes {
            break;
        }
    }
    let splits = |cands: &[&ObjectInfo], f: &dyn Fn(&ObjectInfo) -> bool| {
        cands.iter().any(|o| f(o)) && cands.iter().any(|o| !f(o))
    };
    let left = |o: &ObjectInfo| is_left(o, image);
    if cands.len() > 1 && splits(&cands, &left) {
        let a = is_left(target, image);
        qas.push(QaPair {
            question: LEFT_QUESTION.into(),
            answer: if a { Answer::Yes } else { Answer::No },
        });
        cands.retain(|o| is_left(o, image) == a);
    }
    let top = |o: &ObjectInfo| is_top(o, image);
    if cands.len() > 1 && splits(&cands, &top) {
        let a = is_top(target, image);
        qas.push(QaPair {
            question: TOP_QUESTION.into(),
            answer: if a { Answer::Yes } else { Answer::No },
        });
    }
    qas
}

/// Generated world: games (with scripted dialogues) and image features.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyWorld {
    pub games: Vec<GameRecord>,
    pub features: FeatureTable,
    pub config: ToyConfig,
}

fn signature(o: &ObjectInfo, image: &ImageInfo) -> (usize, bool, bool) {
    (o.category_id, is_left(o, image), is_top(o, image))
}

fn sample_layout(rng: &mut ChaCha8Rng, cfg: &ToyConfig, image: &ImageInfo, first_id: i64) -> Vec<ObjectInfo> {
    let n = rng.random_range(cfg.min_objects..=cfg.max_objects);
    (0..n)
        .map(|k| {
            let cid = rng.random_range(1..=cfg.n_categories);
            let w = rng.random_range(cfg.min_side..=cfg.max_side);
            let h = rng.random_range(cfg.min_side..=cfg.max_side);
            let x = rng.random_range(0..=image.width - w);
            let y = rng.random_range(0..=image.height - h);
            ObjectInfo {
                id: first_id + k as i64,
                category: cfg.category_name(cid).to_string(),
                category_id: cid,
                bbox: BBox {
                    x: x as f64,
                    y: y as f64,
                    w: w as f64,
                    h: h as f64,
                },
                area: (w * h) as f64,
            }
        })
        .collect()
}

/// Raw descriptor: per-category counts, mean normalized center, mean
/// normalized size.
fn raw_descriptor(objects: &[ObjectInfo], image: &ImageInfo, n_categories: usize) -> Vec<f64> {
    let mut raw = vec![0.0; n_categories + 4];
    let (wi, hi) = (image.width as f64, image.height as f64);
    for o in objects {
        raw[o.category_id - 1] += 1.0;
        let (cx, cy) = o.bbox.center();
        raw[n_categories] += 2.0 * cx / wi - 1.0;
        raw[n_categories + 1] += 2.0 * cy / hi - 1.0;
        raw[n_categories + 2] += o.bbox.w / wi;
        raw[n_categories + 3] += o.bbox.h / hi;
    }
    let n = objects.len() as f64;
    for v in &mut raw[n_categories..] {
        *v /= n;
    }
    raw
}

const MAX_LAYOUT_ATTEMPTS: usize = 10_000;

/// Generates `n_games` games (one per image) as a pure function of
/// `(seed, config)`.
pub fn toyworld_generate(seed: u64, n_games: usize, config: &ToyConfig) -> Result<ToyWorld> {
    config.validate()?;
    if n_games == 0 {
        return Err(Error::Argument("toy world needs at least one game".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw_dim = config.n_categories + 4;
    let scale = (1.0 / raw_dim as f64).sqrt();
    let projection: Vec<f64> = (0..config.feature_dim * raw_dim)
        .map(|_| rng.random_range(-1.0..1.0) * scale * 3f64.sqrt())
        .collect();

    let mut games = Vec::with_capacity(n_games);
    let mut features = FeatureTable::new(config.feature_dim);
    for gi in 0..n_games {
        let game_id = gi as i64 + 1;
        let image = ImageInfo {
            id: game_id,
            width: config.image_size,
            height: config.image_size,
        };
        let first_id = game_id * 100;
        let mut chosen = None;
        for _ in 0..MAX_LAYOUT_ATTEMPTS {
            let objects = sample_layout(&mut rng, config, &image, first_id);
            let mut eligible: Vec<usize> = (0..objects.len())
                .filter(|&i| {
                    let sig = signature(&objects[i], &image);
                    objects[i].area > MIN_TARGET_AREA
                        && objects.iter().filter(|o| signature(o, &image) == sig).count() == 1
                })
                .collect();
            if eligible.is_empty() {
                continue;
            }
            eligible.shuffle(&mut rng);
            chosen = Some((objects, eligible[0]));
            break;
        }
        let (objects, t) = chosen.ok_or_else(|| {
            Error::Argument("toy world config admits no image with an identifiable target".into())
        })?;
        let target = objects[t].clone();
        let qas = script_dialogue(&objects, &target, &image);
        let raw = raw_descriptor(&objects, &image, config.n_categories);
        let feat: Vec<f32> = (0..config.feature_dim)
            .map(|r| {
                let row = &projection[r * raw_dim..(r + 1) * raw_dim];
                row.iter().zip(&raw).map(|(a, b)| a * b).sum::<f64>() as f32
            })
            .collect();
        features.insert(image.id, feat)?;
        games.push(GameRecord {
            game_id,
            image,
            objects,
            qas,
            target_id: target.id,
            status: Status::Success,
        });
    }
    Ok(ToyWorld {
        games,
        features,
        config: config.clone(),
    })
}

/// Upper bound on scripted dialogue length for a game: one question per
/// distinct category plus the two spatial questions.
pub fn script_length_bound(game: &GameRecord) -> usize {
    let mut cats: Vec<usize> = game.objects.iter().map(|o| o.category_id).collect();
    cats.sort_unstable();
    cats.dedup();
    cats.len() + 2
}
