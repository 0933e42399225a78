//! Software rasterizer for the synthetic stimuli: filled, hard-edged shapes on
//! a black canvas.
//!
//! Every shape occupies a bounding square of `side` pixels whose top-left pixel
//! is `(cx - side / 2, cy - side / 2)`. Membership is decided at pixel centres;
//! circle, square, triangle and plus use exact integer arithmetic, the star
//! uses an even-odd polygon test.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{cell_center, Cell, Color, ImageGeometry, Shape, Size};

/// Ratio of the star's inner to outer radius.
pub const STAR_INNER_RATIO: f64 = 0.5;

/// One drawable object of a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: Shape,
    pub color: Color,
    pub size: Size,
    pub cell: Cell,
}

/// Full description of one synthetic scene.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub target: SceneObject,
    pub distractors: Vec<SceneObject>,
    pub geom: ImageGeometry,
}

impl StimulusSpec {
    pub fn single(target: SceneObject) -> StimulusSpec {
        StimulusSpec {
            target,
            distractors: Vec::new(),
            geom: ImageGeometry::synthetic(),
        }
    }

    pub fn objects(&self) -> impl Iterator<Item = &SceneObject> {
        core::iter::once(&self.target).chain(self.distractors.iter())
    }

    /// Returns the first cell shared by two objects, if any.
    pub fn overlapping_cell(&self) -> Option<Cell> {
        let mut seen = [false; 81];
        for o in self.objects() {
            let i = o.cell.index();
            if seen[i] {
                return Some(o.cell);
            }
            seen[i] = true;
        }
        None
    }
}

/// Row-major 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Image {
    /// A black canvas.
    pub fn black(geom: ImageGeometry) -> Image {
        Image {
            width: geom.width,
            height: geom.height,
            pixels: vec![0; geom.width as usize * geom.height as usize * 3],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Number of pixels exactly equal to `rgb`.
    pub fn count_color(&self, rgb: [u8; 3]) -> usize {
        self.pixels.chunks_exact(3).filter(|p| *p == rgb).count()
    }
}

/// Width of each bar of a plus of the given side: `side / 3`, bumped by one
/// when needed so the bar can be centred exactly in the bounding square.
pub fn plus_bar_width(side: u32) -> u32 {
    let w = side / 3;
    if (side - w) % 2 == 1 {
        w + 1
    } else {
        w
    }
}

fn star_vertices(side: u32) -> [(f64, f64); 10] {
    let c = f64::from(side) / 2.0;
    let outer = c;
    let inner = outer * STAR_INNER_RATIO;
    let mut v = [(0.0, 0.0); 10];
    for (k, p) in v.iter_mut().enumerate() {
        let theta = -core::f64::consts::FRAC_PI_2 + k as f64 * core::f64::consts::PI / 5.0;
        let r = if k % 2 == 0 { outer } else { inner };
        *p = (c + r * libm::cos(theta), c + r * libm::sin(theta));
    }
    v
}

fn inside_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Pixel mask of a shape inside its `side`×`side` bounding square, row-major.
pub fn shape_mask(kind: Shape, side: u32) -> Vec<bool> {
    let s = i64::from(side);
    let n = side as usize;
    let mut mask = vec![false; n * n];
    let bar = i64::from(plus_bar_width(side));
    let bar_lo = (s - bar) / 2;
    let star = (kind == Shape::Star).then(|| star_vertices(side));
    for j in 0..s {
        for i in 0..s {
            // doubled coordinates of the pixel centre relative to the box centre
            let dx2 = 2 * i + 1 - s;
            let dy2 = 2 * j + 1 - s;
            let on = match kind {
                Shape::Square => true,
                Shape::Circle => dx2 * dx2 + dy2 * dy2 <= s * s,
                // apex at the top-centre, base on the bottom edge
                Shape::Triangle => 2 * dx2.abs() <= 2 * j + 1,
                Shape::Plus => {
                    let in_band = |v: i64| v >= bar_lo && v < bar_lo + bar;
                    in_band(i) || in_band(j)
                }
                Shape::Star => {
                    inside_polygon(star.as_ref().unwrap(), i as f64 + 0.5, j as f64 + 0.5)
                }
            };
            mask[j as usize * n + i as usize] = on;
        }
    }
    mask
}

/// Draws a filled shape centred on `center` into `target`.
pub fn rasterize_shape(
    kind: Shape,
    side: u32,
    center: (u32, u32),
    color: Color,
    target: &mut Image,
) -> Result<(), Error> {
    let (cx, cy) = center;
    let half = side / 2;
    let out = Error::ShapeOutOfBounds { side, x: cx, y: cy };
    if side == 0 || cx < half || cy < half {
        return Err(out);
    }
    let (left, top) = (cx - half, cy - half);
    if left + side > target.width || top + side > target.height {
        return Err(out);
    }
    let rgb = color.rgb();
    let mask = shape_mask(kind, side);
    for (k, on) in mask.iter().enumerate() {
        if *on {
            let (i, j) = ((k as u32) % side, (k as u32) / side);
            target.put(left + i, top + j, rgb);
        }
    }
    Ok(())
}

/// Renders every object of the scene, each centred on its cell anchor.
pub fn render_scene(spec: &StimulusSpec) -> Result<Image, Error> {
    if let Some(cell) = spec.overlapping_cell() {
        return Err(Error::OverlappingCells {
            row: cell.row,
            col: cell.col,
        });
    }
    let mut img = Image::black(spec.geom);
    for o in spec.objects() {
        let center = cell_center(o.cell, spec.geom);
        rasterize_shape(o.shape, o.size.side_px(), center, o.color, &mut img)?;
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cell_of_pixel;

    fn count(kind: Shape, side: u32) -> usize {
        shape_mask(kind, side).iter().filter(|b| **b).count()
    }

    /// Independent circle oracle: float distance test per pixel centre.
    fn circle_oracle(side: u32) -> usize {
        let r = f64::from(side) / 2.0;
        let mut n = 0;
        for j in 0..side {
            for i in 0..side {
                let dx = f64::from(i) + 0.5 - r;
                let dy = f64::from(j) + 0.5 - r;
                if dx * dx + dy * dy <= r * r {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn square_area() {
        assert_eq!(count(Shape::Square, 64), 4096);
    }

    #[test]
    fn plus_inclusion_exclusion() {
        assert_eq!(plus_bar_width(63), 21);
        assert_eq!(count(Shape::Plus, 63), 2 * 63 * 21 - 21 * 21);
        let w = plus_bar_width(64) as usize;
        assert_eq!(count(Shape::Plus, 64), 2 * 64 * w - w * w);
    }

    #[test]
    fn circle_matches_oracle_and_area() {
        for side in [32, 63, 64] {
            assert_eq!(count(Shape::Circle, side), circle_oracle(side));
        }
        // frozen from circle_oracle(64)
        assert_eq!(count(Shape::Circle, 64), 3228);
        let area = core::f64::consts::PI * 32.0 * 32.0;
        assert!((3228.0 - area).abs() / area < 0.03);
    }

    #[test]
    fn triangle_is_half_the_square() {
        let n = count(Shape::Triangle, 64) as f64;
        assert!((n - 2048.0).abs() / 2048.0 < 0.03, "{n}");
    }

    #[test]
    fn star_is_nonempty_and_symmetric_left_right() {
        let side = 64;
        let m = shape_mask(Shape::Star, side);
        assert!(m.iter().filter(|b| **b).count() > 500);
        let n = side as usize;
        for j in 0..n {
            for i in 0..n {
                assert_eq!(m[j * n + i], m[j * n + (n - 1 - i)], "({i},{j})");
            }
        }
    }

    #[test]
    fn square_and_plus_rotation_invariant() {
        for kind in [Shape::Square, Shape::Plus] {
            for side in [32, 63, 64] {
                let n = side as usize;
                let m = shape_mask(kind, side);
                for j in 0..n {
                    for i in 0..n {
                        // 90° rotation about the box centre
                        assert_eq!(m[j * n + i], m[i * n + (n - 1 - j)], "{kind:?} {side}");
                    }
                }
            }
        }
    }

    #[test]
    fn red_square_at_center() {
        let spec = StimulusSpec::single(SceneObject {
            shape: Shape::Square,
            color: Color::Red,
            size: Size::Regular,
            cell: Cell { row: 4, col: 4 },
        });
        let img = render_scene(&spec).unwrap();
        assert_eq!(img.count_color([255, 0, 0]), 4096);
        assert_eq!(img.count_color([0, 0, 0]), 672 * 672 - 4096);
        assert_eq!(render_scene(&spec).unwrap(), img);
    }

    #[test]
    fn small_white_circle_stays_in_its_cell() {
        let cell = Cell { row: 0, col: 0 };
        let spec = StimulusSpec::single(SceneObject {
            shape: Shape::Circle,
            color: Color::White,
            size: Size::Small,
            cell,
        });
        let img = render_scene(&spec).unwrap();
        for y in 0..img.height {
            for x in 0..img.width {
                if img.pixel(x, y) != [0, 0, 0] {
                    assert_eq!(cell_of_pixel(x, y, spec.geom).unwrap(), cell);
                }
            }
        }
    }

    #[test]
    fn overlapping_cells_rejected() {
        let o = SceneObject {
            shape: Shape::Plus,
            color: Color::Red,
            size: Size::Small,
            cell: Cell { row: 2, col: 2 },
        };
        let spec = StimulusSpec {
            target: o,
            distractors: vec![SceneObject {
                color: Color::Blue,
                ..o
            }],
            geom: ImageGeometry::synthetic(),
        };
        assert_eq!(
            render_scene(&spec),
            Err(Error::OverlappingCells { row: 2, col: 2 })
        );
    }

    #[test]
    fn shape_out_of_bounds() {
        let mut img = Image::black(ImageGeometry::new(40, 40).unwrap());
        assert!(rasterize_shape(Shape::Square, 32, (10, 20), Color::Red, &mut img).is_err());
        assert!(rasterize_shape(Shape::Square, 32, (30, 20), Color::Red, &mut img).is_err());
        assert!(rasterize_shape(Shape::Square, 32, (20, 20), Color::Red, &mut img).is_ok());
    }
}
