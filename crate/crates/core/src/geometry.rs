//! Grid geometry: position labels, the 3×3 region grid, the 9×9 cell grid and
//! the mappings between pixels, cells, regions and labels.
//!
//! All assignments are floor based with clamping at the last index, so a
//! coordinate lying exactly on an interior boundary belongs to the band with
//! the higher index.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Number of cells along each axis of the fine grid.
pub const GRID_CELLS: u32 = 9;
/// Number of regions along each axis of the coarse grid.
pub const GRID_REGIONS: u32 = 3;
/// Side of the synthetic canvas in pixels.
pub const SYNTH_CANVAS: u32 = 672;

/// One of the nine answer labels of the absolute-position task.
///
/// Declaration order is the canonical row-major order used for every
/// tie-break in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PositionLabel {
    #[serde(rename = "top left")]
    TopLeft,
    #[serde(rename = "top center")]
    TopCenter,
    #[serde(rename = "top right")]
    TopRight,
    #[serde(rename = "center left")]
    CenterLeft,
    #[serde(rename = "center")]
    Center,
    #[serde(rename = "center right")]
    CenterRight,
    #[serde(rename = "bottom left")]
    BottomLeft,
    #[serde(rename = "bottom center")]
    BottomCenter,
    #[serde(rename = "bottom right")]
    BottomRight,
}

impl PositionLabel {
    pub const ALL: [PositionLabel; 9] = [
        PositionLabel::TopLeft,
        PositionLabel::TopCenter,
        PositionLabel::TopRight,
        PositionLabel::CenterLeft,
        PositionLabel::Center,
        PositionLabel::CenterRight,
        PositionLabel::BottomLeft,
        PositionLabel::BottomCenter,
        PositionLabel::BottomRight,
    ];

    /// Position in canonical order, 0..9.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<PositionLabel> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PositionLabel::TopLeft => "top left",
            PositionLabel::TopCenter => "top center",
            PositionLabel::TopRight => "top right",
            PositionLabel::CenterLeft => "center left",
            PositionLabel::Center => "center",
            PositionLabel::CenterRight => "center right",
            PositionLabel::BottomLeft => "bottom left",
            PositionLabel::BottomCenter => "bottom center",
            PositionLabel::BottomRight => "bottom right",
        }
    }

    pub fn region(self) -> Region {
        let i = self.index() as u8;
        Region {
            row: i / 3,
            col: i % 3,
        }
    }
}

impl fmt::Display for PositionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PositionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PositionLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or(Error::UnknownLabel)
    }
}

/// A cell of the 3×3 region grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Region {
    pub row: u8,
    pub col: u8,
}

impl Region {
    pub fn new(row: u8, col: u8) -> Result<Region, Error> {
        if u32::from(row) >= GRID_REGIONS || u32::from(col) >= GRID_REGIONS {
            return Err(Error::OutOfBounds);
        }
        Ok(Region { row, col })
    }

    pub fn label(self) -> PositionLabel {
        PositionLabel::ALL[self.index()]
    }

    /// Row-major index, 0..9.
    pub fn index(self) -> usize {
        usize::from(self.row) * 3 + usize::from(self.col)
    }

    pub fn all() -> impl Iterator<Item = Region> {
        PositionLabel::ALL.iter().map(|l| l.region())
    }
}

/// A cell of the 9×9 placement grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: u8,
    pub col: u8,
}

impl Cell {
    pub fn new(row: u8, col: u8) -> Result<Cell, Error> {
        if u32::from(row) >= GRID_CELLS || u32::from(col) >= GRID_CELLS {
            return Err(Error::OutOfBounds);
        }
        Ok(Cell { row, col })
    }

    /// Row-major index, 0..81.
    pub fn index(self) -> usize {
        usize::from(self.row) * 9 + usize::from(self.col)
    }

    pub fn from_index(index: usize) -> Option<Cell> {
        (index < 81).then_some(Cell {
            row: (index / 9) as u8,
            col: (index % 9) as u8,
        })
    }

    /// All 81 cells in row-major order.
    pub fn all() -> impl Iterator<Item = Cell> {
        (0..81).map(|i| Cell::from_index(i).unwrap())
    }

    pub fn region(self) -> Region {
        region_of_cell(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Cyan,
    Magenta,
    Yellow,
    White,
}

impl Color {
    /// The six target colors of the evaluation set and of the colored plusses.
    pub const CHROMATIC: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Cyan,
        Color::Magenta,
        Color::Yellow,
    ];

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Red => [255, 0, 0],
            Color::Green => [0, 255, 0],
            Color::Blue => [0, 0, 255],
            Color::Cyan => [0, 255, 255],
            Color::Magenta => [255, 0, 255],
            Color::Yellow => [255, 255, 0],
            Color::White => [255, 255, 255],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Cyan => "cyan",
            Color::Magenta => "magenta",
            Color::Yellow => "yellow",
            Color::White => "white",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Triangle,
    Square,
    Star,
    Plus,
}

impl Shape {
    /// Shapes of the evaluation set; also the white shapes of the training set.
    pub const BASIC: [Shape; 4] = [Shape::Circle, Shape::Triangle, Shape::Square, Shape::Star];

    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Triangle => "triangle",
            Shape::Square => "square",
            Shape::Star => "star",
            Shape::Plus => "plus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Regular,
    Small,
}

impl Size {
    pub const ALL: [Size; 2] = [Size::Regular, Size::Small];

    /// Side of the object's bounding square on the 672 px canvas.
    pub fn side_px(self) -> u32 {
        match self {
            Size::Regular => 64,
            Size::Small => 32,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Size::Regular => "regular",
            Size::Small => "small",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageGeometry {
    pub width: u32,
    pub height: u32,
}

impl ImageGeometry {
    pub fn new(width: u32, height: u32) -> Result<ImageGeometry, Error> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        Ok(ImageGeometry { width, height })
    }

    /// The square synthetic canvas.
    pub fn synthetic() -> ImageGeometry {
        ImageGeometry {
            width: SYNTH_CANVAS,
            height: SYNTH_CANVAS,
        }
    }
}

fn band_of_pixel(v: u32, extent: u32, bands: u32) -> u32 {
    let b = (u64::from(v) * u64::from(bands) / u64::from(extent)) as u32;
    b.min(bands - 1)
}

fn band_of_coord(v: f64, extent: u32, bands: u32) -> u32 {
    let extent = f64::from(extent);
    let scaled = v * f64::from(bands) / extent;
    let b = libm::floor(scaled);
    if b <= 0.0 {
        0
    } else {
        (b as u32).min(bands - 1)
    }
}

/// Cell containing the integer pixel `(x, y)`.
pub fn cell_of_pixel(x: u32, y: u32, geom: ImageGeometry) -> Result<Cell, Error> {
    if x >= geom.width || y >= geom.height {
        return Err(Error::OutOfBounds);
    }
    Ok(Cell {
        row: band_of_pixel(y, geom.height, GRID_CELLS) as u8,
        col: band_of_pixel(x, geom.width, GRID_CELLS) as u8,
    })
}

fn check_point(x: f64, y: f64, geom: ImageGeometry) -> Result<(), Error> {
    let inside = |v: f64, extent: u32| v.is_finite() && v >= 0.0 && v <= f64::from(extent);
    if inside(x, geom.width) && inside(y, geom.height) {
        Ok(())
    } else {
        Err(Error::OutOfBounds)
    }
}

/// Region containing a real-valued point. The far image edges are accepted
/// and clamp into the last region (a bbox centre can sit on the edge only for
/// degenerate boxes).
pub fn region_of_point(x: f64, y: f64, geom: ImageGeometry) -> Result<Region, Error> {
    check_point(x, y, geom)?;
    Ok(Region {
        row: band_of_coord(y, geom.height, GRID_REGIONS) as u8,
        col: band_of_coord(x, geom.width, GRID_REGIONS) as u8,
    })
}

/// Cell containing a real-valued point; used to place COCO targets on the
/// fine grid.
pub fn cell_of_point(x: f64, y: f64, geom: ImageGeometry) -> Result<Cell, Error> {
    check_point(x, y, geom)?;
    Ok(Cell {
        row: band_of_coord(y, geom.height, GRID_CELLS) as u8,
        col: band_of_coord(x, geom.width, GRID_CELLS) as u8,
    })
}

pub fn region_of_cell(c: Cell) -> Region {
    Region {
        row: c.row / 3,
        col: c.col / 3,
    }
}

/// Pixel anchor of a cell: `round((col + 0.5) * width / 9)`, rounded half up.
pub fn cell_center(c: Cell, geom: ImageGeometry) -> (u32, u32) {
    let anchor = |i: u8, extent: u32| -> u32 {
        let num = (2 * u64::from(i) + 1) * u64::from(extent);
        let den = 2 * u64::from(GRID_CELLS);
        ((num + den / 2) / den) as u32
    };
    (anchor(c.col, geom.width), anchor(c.row, geom.height))
}
