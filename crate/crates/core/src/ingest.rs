//! Raster images and the synthetic-scene segmenter.
//!
//! Segmentation quantizes every pixel to the color palette, labels
//! 4-connected components of equal palette index, treats components of the
//! modal border color as background, drops components under the minimum
//! area, and traces each remaining component's outer boundary.

use std::collections::HashMap;
use std::io::Cursor;

use crate::error::{Error, Result};
use crate::features::color::snap_index;
use crate::features::{gabor_texture, mean_color, ColorRGB, GrayImage};
use crate::geometry::{point_segment_distance, Contour, Vec2};
use crate::model::{overlap_kind, Overlap, Region, SegmentedImage};

/// Default minimum component area in pixels.
pub const DEFAULT_MIN_AREA: usize = 50;
/// Default polyline simplification tolerance in pixels.
pub const DEFAULT_SIMPLIFY_TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    /// Row-major.
    pub pixels: Vec<ColorRGB>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, pixels: Vec<ColorRGB>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "raster {width}x{height} with {} pixels",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: ColorRGB) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn get(&self, x: usize, y: usize) -> ColorRGB {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: ColorRGB) {
        self.pixels[y * self.width + x] = c;
    }

    pub fn gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.pixels.iter().map(|c| c.gray()).collect(),
        }
    }

    /// Decodes PNG or binary/ASCII PPM bytes.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes).map_err(|e| Error::Decode(e.to_string()))?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        let pixels = rgb
            .pixels()
            .map(|p| ColorRGB::from_u8(p[0], p[1], p[2]))
            .collect();
        Self::new(w as usize, h as usize, pixels)
    }

    fn to_rgb8(&self) -> image::RgbImage {
        let mut out = image::RgbImage::new(self.width as u32, self.height as u32);
        for (i, p) in out.pixels_mut().enumerate() {
            let c = self.pixels[i];
            *p = image::Rgb([c.r.round() as u8, c.g.round() as u8, c.b.round() as u8]);
        }
        out
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        self.to_rgb8()
            .write_to(&mut buf, image::ImageFormat::Png)
            .map_err(|e| Error::Decode(e.to_string()))?;
        Ok(buf.into_inner())
    }

    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for c in &self.pixels {
            out.extend([c.r.round() as u8, c.g.round() as u8, c.b.round() as u8]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    pub min_area: usize,
    pub simplify_tolerance: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            min_area: DEFAULT_MIN_AREA,
            simplify_tolerance: DEFAULT_SIMPLIFY_TOLERANCE,
        }
    }
}

/// A labelled connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub palette_index: usize,
    pub pixels: Vec<(usize, usize)>,
}

/// 4-connected components of equal palette index, in raster order of their
/// first pixel.
pub fn connected_components(img: &RasterImage) -> (Vec<usize>, Vec<Component>) {
    let (w, h) = (img.width, img.height);
    let mut cache: HashMap<[u64; 3], usize> = HashMap::new();
    let quant: Vec<usize> = img
        .pixels
        .iter()
        .map(|c| {
            *cache
                .entry([c.r.to_bits(), c.g.to_bits(), c.b.to_bits()])
                .or_insert_with(|| snap_index(c))
        })
        .collect();
    let mut label = vec![usize::MAX; w * h];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let q = quant[start];
        let mut pixels = Vec::new();
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            pixels.push((x, y));
            let mut visit = |j: usize| {
                if label[j] == usize::MAX && quant[j] == q {
                    label[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        pixels.sort_by_key(|&(x, y)| (y, x));
        comps.push(Component {
            palette_index: q,
            pixels,
        });
    }
    (label, comps)
}

/// Modal palette index among border pixels (ties to the lowest index).
fn background_index(img: &RasterImage) -> usize {
    let (w, h) = (img.width, img.height);
    let mut counts: HashMap<usize, usize> = HashMap::new();
    let mut add = |x: usize, y: usize| *counts.entry(snap_index(&img.get(x, y))).or_default() += 1;
    for x in 0..w {
        add(x, 0);
        if h > 1 {
            add(x, h - 1);
        }
    }
    for y in 1..h.saturating_sub(1) {
        add(0, y);
        if w > 1 {
            add(w - 1, y);
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

const DIRS: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Moore-neighbour tracing of the outer boundary of a pixel set, as pixel
/// centers. `inside` must be true exactly for the set's pixels.
pub fn trace_boundary(
    start: (usize, usize),
    inside: &dyn Fn(isize, isize) -> bool,
    max_steps: usize,
) -> Vec<(isize, isize)> {
    let start = (start.0 as isize, start.1 as isize);
    let mut out = vec![start];
    // Start is the first pixel in raster order, so its west neighbour is outside.
    let mut p = start;
    let mut back = 4usize;
    let mut first_move: Option<(isize, isize)> = None;
    for _ in 0..max_steps {
        let mut next = None;
        for i in 1..=8 {
            let d = (back + i) % 8;
            let q = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
            if inside(q.0, q.1) {
                next = Some((d, q));
                break;
            }
        }
        let Some((d, q)) = next else {
            break;
        };
        if p == start {
            match first_move {
                None => first_move = Some(q),
                Some(f) if f == q => break,
                _ => {}
            }
        }
        let b = (p.0 + DIRS[(d + 7) % 8].0, p.1 + DIRS[(d + 7) % 8].1);
        let rel = (b.0 - q.0, b.1 - q.1);
        back = DIRS.iter().position(|&v| v == rel).unwrap_or(4);
        p = q;
        out.push(q);
    }
    if out.len() > 1 && out.last() == Some(&start) {
        out.pop();
    }
    out
}

/// Removes immediate back-tracks (`a, b, a`), which come from one-pixel-wide
/// spurs.
fn remove_spurs(mut pts: Vec<(isize, isize)>) -> Vec<(isize, isize)> {
    loop {
        let n = pts.len();
        if n < 3 {
            return pts;
        }
        let mut changed = false;
        let mut out: Vec<(isize, isize)> = Vec::with_capacity(n);
        for p in pts.iter().copied() {
            if out.len() >= 2 && out[out.len() - 2] == p {
                out.pop();
                changed = true;
            } else if out.last() != Some(&p) {
                out.push(p);
            }
        }
        // wrap-around back-tracks
        while out.len() >= 3 {
            let k = out.len();
            if out[k - 1] == out[1] {
                out.remove(0);
                out.pop();
                changed = true;
            } else if out[k - 2] == out[0] {
                out.pop();
                changed = true;
            } else {
                break;
            }
        }
        pts = out;
        if !changed {
            return pts;
        }
    }
}

fn douglas_peucker(pts: &[Vec2], tol: f64, out: &mut Vec<Vec2>) {
    // pts includes both endpoints; emits all but the last
    if pts.len() <= 2 {
        out.push(pts[0]);
        return;
    }
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let (idx, dmax) = pts[1..pts.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, &p)| (i + 1, point_segment_distance(p, a, b)))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if dmax > tol {
        douglas_peucker(&pts[..=idx], tol, out);
        douglas_peucker(&pts[idx..], tol, out);
    } else {
        out.push(a);
    }
}

/// Douglas–Peucker simplification of a closed polyline.
pub fn simplify_closed(pts: &[Vec2], tol: f64) -> Vec<Vec2> {
    if pts.len() < 4 {
        return pts.to_vec();
    }
    let far = (1..pts.len())
        .max_by(|&i, &j| pts[0].distance(pts[i]).total_cmp(&pts[0].distance(pts[j])))
        .unwrap_or(1);
    let first: Vec<Vec2> = pts[..=far].to_vec();
    let mut second: Vec<Vec2> = pts[far..].to_vec();
    second.push(pts[0]);
    let mut out = Vec::new();
    douglas_peucker(&first, tol, &mut out);
    douglas_peucker(&second, tol, &mut out);
    out
}

/// Outer contour of a component's pixel set.
pub fn component_contour(pixels: &[(usize, usize)], width: usize, height: usize, tol: f64) -> Result<Contour> {
    let set: std::collections::HashSet<(usize, usize)> = pixels.iter().copied().collect();
    let inside = |x: isize, y: isize| {
        x >= 0
            && y >= 0
            && (x as usize) < width
            && (y as usize) < height
            && set.contains(&(x as usize, y as usize))
    };
    let start = *pixels
        .iter()
        .min_by_key(|&&(x, y)| (y, x))
        .ok_or(Error::EmptyRegion)?;
    let traced = remove_spurs(trace_boundary(start, &inside, 8 * pixels.len() + 16));
    let pts: Vec<Vec2> = traced
        .iter()
        .map(|&(x, y)| Vec2::new(x as f64, y as f64))
        .collect();
    Contour::new(simplify_closed(&pts, tol))
}

/// Region with contour, mean color and Gabor texture of its pixels.
pub fn extract_region_features(
    contour: Contour,
    pixels: &[(usize, usize)],
    raster: &RasterImage,
    gray: &GrayImage,
) -> Result<Region> {
    let colors: Vec<ColorRGB> = pixels.iter().map(|&(x, y)| raster.get(x, y)).collect();
    let color = mean_color(&colors)?;
    let texture = gabor_texture(gray, pixels)?.texture;
    Region::new(contour, color, Some(texture))
}

/// Segments a flat-colored synthetic raster into regions.
pub fn segment_synthetic(id: &str, img: &RasterImage, cfg: &SegmentConfig) -> Result<SegmentedImage> {
    let bg = background_index(img);
    let (_, comps) = connected_components(img);
    let gray = img.gray();
    let mut regions: Vec<(usize, Region)> = Vec::new();
    for comp in comps {
        if comp.palette_index == bg || comp.pixels.len() < cfg.min_area {
            continue;
        }
        let contour = match component_contour(&comp.pixels, img.width, img.height, cfg.simplify_tolerance) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("{id}: dropping component of {} px: {e}", comp.pixels.len());
                continue;
            }
        };
        match extract_region_features(contour, &comp.pixels, img, &gray) {
            Ok(r) => regions.push((comp.pixels.len(), r)),
            Err(e) => log::warn!("{id}: dropping component of {} px: {e}", comp.pixels.len()),
        }
    }
    // Traced outlines of adjacent components can cross slightly; keep the
    // larger region of any partially overlapping pair.
    let mut keep = vec![true; regions.len()];
    for i in 0..regions.len() {
        for j in (i + 1)..regions.len() {
            if keep[i]
                && keep[j]
                && overlap_kind(regions[i].1.contour(), regions[j].1.contour()) == Overlap::Partial
            {
                let drop = if regions[i].0 >= regions[j].0 { j } else { i };
                log::warn!("{id}: dropping region overlapping a larger one");
                keep[drop] = false;
            }
        }
    }
    let regions: Vec<Region> = regions
        .into_iter()
        .zip(keep)
        .filter_map(|((_, r), k)| k.then_some(r))
        .collect();
    if regions.is_empty() {
        return Err(Error::NoForeground);
    }
    SegmentedImage::new(id, regions, Some("raster".into()))
}
