//! Fixed 112-entry color palette and region mean color.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of palette entries.
pub const PALETTE_SIZE: usize = 112;

const HUES: usize = 7;
const SATURATIONS: [f64; 3] = [1.0 / 3.0, 2.0 / 3.0, 1.0];
const VALUES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ColorRGB {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ColorRGB {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        for v in [r, g, b] {
            if !(0.0..=255.0).contains(&v) {
                return Err(Error::ColorRange(v));
            }
        }
        Ok(Self { r, g, b })
    }

    pub const fn from_u8(r: u8, g: u8, b: u8) -> Self {
        Self {
            r: r as f64,
            g: g as f64,
            b: b as f64,
        }
    }

    pub fn distance(&self, o: &ColorRGB) -> f64 {
        ((self.r - o.r).powi(2) + (self.g - o.g).powi(2) + (self.b - o.b).powi(2)).sqrt()
    }

    /// Luma in `[0, 255]`.
    pub fn gray(&self) -> f64 {
        0.299 * self.r + 0.587 * self.g + 0.114 * self.b
    }
}

impl TryFrom<[f64; 3]> for ColorRGB {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<ColorRGB> for [f64; 3] {
    fn from(c: ColorRGB) -> Self {
        [c.r, c.g, c.b]
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> ColorRGB {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    ColorRGB {
        r: ((r + m) * 255.0).clamp(0.0, 255.0),
        g: ((g + m) * 255.0).clamp(0.0, 255.0),
        b: ((b + m) * 255.0).clamp(0.0, 255.0),
    }
}

/// The palette: 7 hues × 4 saturation bins × 4 value bins.
///
/// The zero-saturation bin would collapse to four repeated grays, so its 28
/// slots hold an evenly spaced gray ramp from black to white instead. The
/// remaining 84 entries are the chromatic HSV bin representatives.
pub fn palette() -> &'static [ColorRGB; PALETTE_SIZE] {
    static PALETTE: OnceLock<[ColorRGB; PALETTE_SIZE]> = OnceLock::new();
    PALETTE.get_or_init(|| {
        let mut out = [ColorRGB::default(); PALETTE_SIZE];
        let grays = HUES * VALUES.len();
        for (i, slot) in out.iter_mut().take(grays).enumerate() {
            let level = i as f64 / (grays - 1) as f64 * 255.0;
            *slot = ColorRGB {
                r: level,
                g: level,
                b: level,
            };
        }
        let mut i = grays;
        for &s in &SATURATIONS {
            for &v in &VALUES {
                for h in 0..HUES {
                    out[i] = hsv_to_rgb(h as f64 * 360.0 / HUES as f64, s, v);
                    i += 1;
                }
            }
        }
        out
    })
}

/// Index of the nearest palette entry (Euclidean RGB; ties to lowest index).
pub fn snap_index(c: &ColorRGB) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, p) in palette().iter().enumerate() {
        let d = (p.r - c.r).powi(2) + (p.g - c.g).powi(2) + (p.b - c.b).powi(2);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

pub fn snap(c: &ColorRGB) -> ColorRGB {
    palette()[snap_index(c)]
}

/// Per-channel mean of the palette-snapped pixel colors.
pub fn mean_color(pixels: &[ColorRGB]) -> Result<ColorRGB> {
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let (mut r, mut g, mut b) = (0.0, 0.0, 0.0);
    for p in pixels {
        let q = snap(p);
        r += q.r;
        g += q.g;
        b += q.b;
    }
    let n = pixels.len() as f64;
    Ok(ColorRGB {
        r: (r / n).clamp(0.0, 255.0),
        g: (g / n).clamp(0.0, 255.0),
        b: (b / n).clamp(0.0, 255.0),
    })
}
