use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelKind {
    /// Raw 0..=255 intensities, not yet quantized.
    Grayscale,
    /// 1 = black foreground, 0 = white background.
    Binary,
    /// Color codes 01..=04, 00 = background.
    Palette,
}

pub const BACKGROUND: u8 = 0;
pub const BLACK: u8 = 1;
const PALETTE_MAX: u8 = 4;

/// Name of a palette color code.
pub fn palette_name(code: u8) -> Option<&'static str> {
    match code {
        0 => Some("background"),
        1 => Some("red"),
        2 => Some("green"),
        3 => Some("blue"),
        4 => Some("yellow"),
        _ => None,
    }
}

/// Row-major raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
    kind: PixelKind,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, cells: Vec<u8>, kind: PixelKind) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedImage(format!("{width}x{height} grid")));
        }
        if cells.len() != width * height {
            return Err(Error::MalformedImage(format!(
                "{width}x{height} grid needs {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        let limit = match kind {
            PixelKind::Grayscale => u8::MAX,
            PixelKind::Binary => BLACK,
            PixelKind::Palette => PALETTE_MAX,
        };
        if let Some(bad) = cells.iter().find(|c| **c > limit) {
            return Err(Error::MalformedImage(format!(
                "code {bad} outside the {kind:?} range"
            )));
        }
        Ok(Self {
            width,
            height,
            cells,
            kind,
        })
    }

    /// Binary grid from text rows: `#` is black, anything else white.
    pub fn from_rows(rows: &[&str]) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.chars().count());
        if rows.iter().any(|r| r.chars().count() != width) {
            return Err(Error::MalformedImage("ragged rows".into()));
        }
        let cells = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| u8::from(c == '#')))
            .collect();
        Self::new(width, rows.len(), cells, PixelKind::Binary)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn kind(&self) -> PixelKind {
        self.kind
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, col: usize, row: usize) -> Option<u8> {
        (col < self.width && row < self.height).then(|| self.cells[row * self.width + col])
    }

    /// Number of non-background cells of a quantized or palette grid.
    pub fn foreground_count(&self) -> usize {
        self.cells.iter().filter(|c| **c != BACKGROUND).count()
    }

    /// Left-right mirror image.
    pub fn mirrored(&self) -> Self {
        let cells = self
            .cells
            .chunks(self.width)
            .flat_map(|row| row.iter().rev().copied())
            .collect();
        Self {
            cells,
            ..self.clone()
        }
    }

    /// Binary grid: cells strictly below `threshold` become black. Binary and
    /// palette grids pass through unchanged.
    pub fn quantize(&self, threshold: u8) -> Self {
        match self.kind {
            PixelKind::Grayscale => Self {
                cells: self
                    .cells
                    .iter()
                    .map(|c| if *c < threshold { BLACK } else { BACKGROUND })
                    .collect(),
                kind: PixelKind::Binary,
                ..self.clone()
            },
            PixelKind::Binary | PixelKind::Palette => self.clone(),
        }
    }
}

pub fn quantize(grid: &PixelGrid, threshold: u8) -> PixelGrid {
    grid.quantize(threshold)
}

impl fmt::Display for PixelGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|c| format!("{c:02}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Parses ASCII PGM ("P2"). Comments start with `#` and run to end of line.
pub fn parse_pgm(text: &str) -> Result<PixelGrid> {
    let mut tokens = text
        .lines()
        .flat_map(|l| l.split('#').next().unwrap_or("").split_whitespace());
    match tokens.next() {
        Some("P2") => {}
        Some(magic) if magic.starts_with('P') => {
            return Err(Error::UnsupportedFormat(magic.to_string()))
        }
        _ => return Err(Error::MalformedImage("missing P2 header".into())),
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = tokens
            .next()
            .ok_or_else(|| Error::MalformedImage(format!("truncated before {what}")))?;
        t.parse()
            .map_err(|_| Error::MalformedImage(format!("bad {what} `{t}`")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval}")));
    }
    let mut cells = Vec::with_capacity(width * height);
    for i in 0..width * height {
        let v = number(&format!("pixel {i}"))?;
        if v > maxval {
            return Err(Error::MalformedImage(format!(
                "pixel {i} value {v} exceeds maxval {maxval}"
            )));
        }
        cells.push(v as u8);
    }
    if tokens.next().is_some() {
        return Err(Error::MalformedImage("trailing data after pixels".into()));
    }
    PixelGrid::new(width, height, cells, PixelKind::Grayscale)
}

/// Parses a palette grid: one row per line, two-digit codes separated by
/// single spaces, "00" for background.
pub fn parse_palette(text: &str) -> Result<PixelGrid> {
    let mut width = None;
    let mut height = 0;
    let mut cells = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let row: Vec<u8> = line
            .trim_end()
            .split(' ')
            .map(|t| match (t.len(), t.parse::<u8>()) {
                (2, Ok(code)) if code <= PALETTE_MAX => Ok(code),
                _ => Err(Error::MalformedImage(format!(
                    "line {}: bad color code `{t}`",
                    i + 1
                ))),
            })
            .collect::<Result<_>>()?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(Error::MalformedImage(format!(
                "line {}: row width differs",
                i + 1
            )));
        }
        cells.extend(row);
        height += 1;
    }
    PixelGrid::new(width.unwrap_or(0), height, cells, PixelKind::Palette)
}

pub fn parse_grid(text: &str) -> Result<PixelGrid> {
    match text.split_whitespace().next() {
        Some(t) if t.starts_with('P') => parse_pgm(text),
        _ => parse_palette(text),
    }
}

/// Reads a PGM or palette-grid file.
pub fn load_grid(path: impl AsRef<Path>) -> Result<PixelGrid> {
    let bytes = fs::read(path)?;
    let text =
        String::from_utf8(bytes).map_err(|_| Error::UnsupportedFormat("binary file".into()))?;
    parse_grid(&text)
}
