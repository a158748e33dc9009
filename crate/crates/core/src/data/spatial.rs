use crate::data::record::BBox;
use crate::error::{Error, Result};

/// Normalized box descriptor
/// `[x_min, y_min, x_max, y_max, x_center, y_center, w_box, h_box]`,
/// coordinates mapped to [-1, 1] and extents to (0, 2].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialVec(pub [f64; 8]);

impl SpatialVec {
    pub fn as_array(&self) -> &[f64; 8] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        let v = &self.0;
        v[0] <= v[2]
            && v[1] <= v[3]
            && v[..6].iter().all(|c| (-1.0..=1.0).contains(c))
            && v[6] > 0.0
            && v[6] <= 2.0
            && v[7] > 0.0
            && v[7] <= 2.0
    }
}

/// Encodes a pixel bounding box relative to a `width x height` image.
/// Coordinates that stray outside the image (rounding in source data) are
/// clamped to the image edge.
pub fn encode_spatial(bbox: &BBox, width: f64, height: f64) -> Result<SpatialVec> {
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::Argument(format!("image extent must be positive, got {width}x{height}")));
    }
    let nx = |v: f64| (2.0 * v / width - 1.0).clamp(-1.0, 1.0);
    let ny = |v: f64| (2.0 * v / height - 1.0).clamp(-1.0, 1.0);
    let (x_min, x_max) = (nx(bbox.x), nx(bbox.x + bbox.w));
    let (y_min, y_max) = (ny(bbox.y), ny(bbox.y + bbox.h));
    let w_box = (2.0 * bbox.w / width).clamp(f64::MIN_POSITIVE, 2.0);
    let h_box = (2.0 * bbox.h / height).clamp(f64::MIN_POSITIVE, 2.0);
    Ok(SpatialVec([
        x_min,
        y_min,
        x_max,
        y_max,
        (x_min + x_max) / 2.0,
        (y_min + y_max) / 2.0,
        w_box,
        h_box,
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox { x, y, w, h }
    }

    fn close(a: &SpatialVec, b: [f64; 8]) -> bool {
        a.0.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn reference_encodings() {
        let s = encode_spatial(&bb(25.0, 25.0, 50.0, 50.0), 100.0, 100.0).unwrap();
        assert!(close(&s, [-0.5, -0.5, 0.5, 0.5, 0.0, 0.0, 1.0, 1.0]));
        let s = encode_spatial(&bb(0.0, 0.0, 640.0, 480.0), 640.0, 480.0).unwrap();
        assert!(close(&s, [-1.0, -1.0, 1.0, 1.0, 0.0, 0.0, 2.0, 2.0]));
        let s = encode_spatial(&bb(0.0, 0.0, 1.0, 1.0), 100.0, 100.0).unwrap();
        assert!(close(&s, [-1.0, -1.0, -0.98, -0.98, -0.99, -0.99, 0.02, 0.02]));
    }

    #[test]
    fn rejects_empty_image() {
        assert!(encode_spatial(&bb(0.0, 0.0, 1.0, 1.0), 0.0, 10.0).is_err());
        assert!(encode_spatial(&bb(0.0, 0.0, 1.0, 1.0), 10.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn in_bounds_boxes_are_valid(
            w_img in 1u32..2000, h_img in 1u32..2000,
            fx in 0.0f64..1.0, fy in 0.0f64..1.0, fw in 0.001f64..1.0, fh in 0.001f64..1.0,
        ) {
            let (wi, hi) = (w_img as f64, h_img as f64);
            let x = fx * wi;
            let y = fy * hi;
            let w = (fw * (wi - x)).max(1e-6);
            let h = (fh * (hi - y)).max(1e-6);
            let s = encode_spatial(&bb(x, y, w, h), wi, hi).unwrap();
            prop_assert!(s.is_valid(), "{:?}", s);
        }
    }
}
