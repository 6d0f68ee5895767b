//! Box geometry, feature lattices, and annotation/detection records.
//!
//! Coordinate convention: boxes are continuous axis-aligned rectangles in
//! image coordinates. An n×n "pixel box" spans n units, and pixel (r, c)
//! occupies the unit square [c, c+1) × [r, r+1). Whether a ground-truth box
//! includes or excludes its right/bottom edge is not defined by the source
//! data; the continuous-rectangle reading here is a documented choice. Raster
//! *values*, by contrast, are addressed by rounding a coordinate to the
//! nearest integer index (see [`crate::noco::noco_lookup`]).

use serde::{Deserialize, Serialize};

/// A sub-pixel point in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned bounding box with corners (x0, y0) and (x1, y1), x0 <= x1, y0 <= y1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1, "corners out of order");
        BBox { x0, y0, x1, y1 }
    }

    /// Box centered at (cx, cy) with the given width and height.
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Self {
        BBox::new(
            cx - width / 2.0,
            cy - height / 2.0,
            cx + width / 2.0,
            cy + height / 2.0,
        )
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// Closed-rectangle point containment on the left/top edge, open on the
    /// right/bottom. Keeps a point on the shared edge of two abutting boxes
    /// in exactly one of them.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    /// Intersection rectangle, or `None` when the boxes do not overlap.
    pub fn intersect(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        if x0 < x1 && y0 < y1 {
            Some(BBox::new(x0, y0, x1, y1))
        } else {
            None
        }
    }

    /// Clip to another rectangle; `None` when the clipped box is empty.
    pub fn clip(&self, other: &BBox) -> Option<BBox> {
        self.intersect(other)
    }
}

/// Intersection-over-union of two boxes in continuous coordinates.
///
/// Returns 0 for disjoint boxes and, by convention, 0 when both boxes are
/// degenerate (zero area).
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = match a.intersect(b) {
        Some(r) => r.area(),
        None => 0.0,
    };
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    inter / union
}

/// A ground-truth target: its box and, optionally, an annotated centroid
/// (the pixel of highest signal-to-clutter ratio, which need not be the
/// geometric box center).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtTarget {
    pub bbox: BBox,
    pub centroid: Option<Point>,
}

impl GtTarget {
    pub fn new(bbox: BBox) -> Self {
        GtTarget {
            bbox,
            centroid: None,
        }
    }

    pub fn with_centroid(bbox: BBox, centroid: Point) -> Self {
        GtTarget {
            bbox,
            centroid: Some(centroid),
        }
    }

    /// The annotated centroid, defaulting to the box center.
    pub fn centroid_or_center(&self) -> Point {
        self.centroid.unwrap_or_else(|| self.bbox.center())
    }
}

/// A scored prediction for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    /// Confidence in [0, 1].
    pub score: f64,
    pub image_id: String,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64, image_id: impl Into<String>) -> Self {
        Detection {
            bbox,
            score,
            image_id: image_id.into(),
        }
    }
}

/// Grid dimensions (rows, cols) of the feature lattice for a stride.
pub fn lattice_dims(stride: u32, img_h: usize, img_w: usize) -> (usize, usize) {
    let s = stride as usize;
    (img_h.div_ceil(s), img_w.div_ceil(s))
}

/// Feature points of a stride-s prediction grid, in row-major order.
///
/// Points sit at cell centers ((j+0.5)*s, (i+0.5)*s); the grid covers the
/// whole image with ceil(H/s) * ceil(W/s) points.
pub fn feature_lattice(stride: u32, img_h: usize, img_w: usize) -> Vec<Point> {
    let (rows, cols) = lattice_dims(stride, img_h, img_w);
    let s = stride as f64;
    let mut points = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            points.push(Point::new((j as f64 + 0.5) * s, (i as f64 + 0.5) * s));
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pixel-set counting oracle for integer-aligned boxes: pixel (r, c) is
    /// inside iff x0 <= c < x1 and y0 <= r < y1.
    fn pixel_iou_oracle(a: &BBox, b: &BBox) -> f64 {
        let count = |bx: &BBox| (bx.x1 - bx.x0) as i64 * (bx.y1 - bx.y0) as i64;
        let inter_x = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0) as i64;
        let inter_y = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0) as i64;
        let inter = inter_x * inter_y;
        let union = count(a) + count(b) - inter;
        if union == 0 {
            return 0.0;
        }
        inter as f64 / union as f64
    }

    #[test]
    fn iou_one_pixel_diagonal_shift() {
        let a = BBox::new(0.0, 0.0, 3.0, 3.0);
        let b = BBox::new(1.0, 1.0, 4.0, 4.0);
        let expected = 4.0 / 14.0;
        assert!((iou(&a, &b) - expected).abs() < 1e-12);
        assert!((iou(&a, &b) - pixel_iou_oracle(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn iou_identity() {
        let a = BBox::new(2.0, 3.0, 7.0, 9.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_three_pixel_diagonal_shift_is_disjoint() {
        let a = BBox::new(0.0, 0.0, 3.0, 3.0);
        let b = BBox::new(3.0, 3.0, 6.0, 6.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_degenerate_boxes() {
        let a = BBox::new(1.0, 1.0, 1.0, 1.0);
        let b = BBox::new(1.0, 1.0, 1.0, 4.0);
        assert_eq!(iou(&a, &b), 0.0);
        assert_eq!(iou(&a, &a), 0.0);
    }

    #[test]
    fn lattice_stride8_16x16() {
        let pts = feature_lattice(8, 16, 16);
        assert_eq!(pts.len(), 4);
        let expect = [(4.0, 4.0), (12.0, 4.0), (4.0, 12.0), (12.0, 12.0)];
        for (x, y) in expect {
            assert!(pts.iter().any(|p| p.x == x && p.y == y));
        }
    }

    #[test]
    fn lattice_stride1_2x2() {
        let pts = feature_lattice(1, 2, 2);
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert_eq!(p.x.fract(), 0.5);
            assert_eq!(p.y.fract(), 0.5);
        }
    }

    #[test]
    fn lattice_stride8_800x1024() {
        let (rows, cols) = lattice_dims(8, 800, 1024);
        assert_eq!((rows, cols), (100, 128));
        assert_eq!(feature_lattice(8, 800, 1024).len(), 100 * 128);
    }

    fn int_box() -> impl Strategy<Value = BBox> {
        (0i64..40, 0i64..40, 1i64..12, 1i64..12).prop_map(|(x, y, w, h)| {
            BBox::new(x as f64, y as f64, (x + w) as f64, (y + h) as f64)
        })
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in int_box(), b in int_box()) {
            let ab = iou(&a, &b);
            let ba = iou(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(iou(&a, &a), 1.0);
        }

        #[test]
        fn iou_matches_pixel_oracle(a in int_box(), b in int_box()) {
            prop_assert!((iou(&a, &b) - pixel_iou_oracle(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn lattice_count(stride in 1u32..16, h in 1usize..200, w in 1usize..200) {
            let s = stride as usize;
            prop_assert_eq!(feature_lattice(stride, h, w).len(), h.div_ceil(s) * w.div_ceil(s));
        }
    }
}
