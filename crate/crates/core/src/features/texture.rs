//! Gabor filter bank texture features.
//!
//! The bank has 4 scales (wavelength 4, 8, 16, 32 px, Gaussian width
//! `0.56·λ`) and 6 orientations (multiples of 30°). Each kernel is made
//! exactly zero-mean so flat regions give no response. Pixels outside the
//! region mask are filled with the region's mean intensity before filtering,
//! so the vector depends on region content only.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TEXTURE_LEN: usize = 24;
pub const WAVELENGTHS: [f64; 4] = [4.0, 8.0, 16.0, 32.0];
pub const ORIENTATIONS: usize = 6;
const SIGMA_RATIO: f64 = 0.56;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TextureVec([f64; TEXTURE_LEN]);

impl TextureVec {
    pub const ZERO: TextureVec = TextureVec([0.0; TEXTURE_LEN]);

    pub fn new(values: &[f64]) -> Result<Self> {
        let arr: [f64; TEXTURE_LEN] = values
            .try_into()
            .map_err(|_| Error::TextureLength(values.len()))?;
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite texture component".into()));
        }
        Ok(Self(arr))
    }

    pub fn values(&self) -> &[f64; TEXTURE_LEN] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for TextureVec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<TextureVec> for Vec<f64> {
    fn from(t: TextureVec) -> Self {
        t.0.to_vec()
    }
}

/// Row-major gray-level image, intensities in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "gray image {width}x{height} with {} samples",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Output of [`gabor_texture`].
#[derive(Debug, Clone, PartialEq)]
pub struct TextureResult {
    pub texture: TextureVec,
    /// Set when the region is smaller than the smallest filter support; the
    /// texture is then the zero vector.
    pub too_small: bool,
}

fn half_width(lambda: f64) -> usize {
    (3.0 * SIGMA_RATIO * lambda).ceil() as usize
}

/// Pixel count of the smallest filter's support.
pub fn min_region_area() -> usize {
    let h = half_width(WAVELENGTHS[0]);
    (2 * h + 1).pow(2)
}

/// Sampled complex Gabor kernel, zero-mean, as `(dx, dy, value)` taps.
pub(crate) fn gabor_kernel(lambda: f64, orientation: usize) -> Vec<(isize, isize, Complex64)> {
    let sigma = SIGMA_RATIO * lambda;
    let theta = orientation as f64 * PI / ORIENTATIONS as f64;
    let (u, v) = (theta.cos() / lambda, theta.sin() / lambda);
    let h = half_width(lambda) as isize;
    let norm = 1.0 / (2.0 * PI * sigma * sigma);
    let mut taps = Vec::with_capacity(((2 * h + 1) * (2 * h + 1)) as usize);
    let mut gsum = 0.0;
    let mut hsum = Complex64::new(0.0, 0.0);
    for dy in -h..=h {
        for dx in -h..=h {
            let (x, y) = (dx as f64, dy as f64);
            let g = norm * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
            let w = Complex64::from_polar(g, 2.0 * PI * (u * x + v * y));
            gsum += g;
            hsum += w;
            taps.push((dx, dy, w));
        }
    }
    // subtract a scaled Gaussian to cancel the DC response
    let k = hsum / gsum;
    for t in taps.iter_mut() {
        let (x, y) = (t.0 as f64, t.1 as f64);
        let g = norm * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
        t.2 -= k * g;
    }
    taps
}

/// Mean Gabor magnitude response over the masked pixels, one value per
/// (scale, orientation) pair, indexed `scale·6 + orientation`.
pub fn gabor_texture(img: &GrayImage, pixels: &[(usize, usize)]) -> Result<TextureResult> {
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if pixels.iter().any(|&(x, y)| x >= img.width || y >= img.height) {
        return Err(Error::InvalidParameter("region pixel outside image".into()));
    }
    if pixels.len() < min_region_area() {
        log::warn!(
            "region of {} px is below the {} px filter support; texture set to zero",
            pixels.len(),
            min_region_area()
        );
        return Ok(TextureResult {
            texture: TextureVec::ZERO,
            too_small: true,
        });
    }

    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    let mut mean = 0.0;
    for &(x, y) in pixels {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
        mean += img.get(x, y);
    }
    mean /= pixels.len() as f64;

    // Patch: bounding box plus the largest kernel radius on every side, so
    // circular convolution never wraps masked pixels onto each other.
    let pad = half_width(WAVELENGTHS[WAVELENGTHS.len() - 1]);
    let pw = x1 - x0 + 1 + 2 * pad;
    let ph = y1 - y0 + 1 + 2 * pad;
    let mut patch = vec![Complex64::new(mean, 0.0); pw * ph];
    for &(x, y) in pixels {
        patch[(y - y0 + pad) * pw + (x - x0 + pad)] = Complex64::new(img.get(x, y), 0.0);
    }

    let mut planner = FftPlanner::new();
    fft2(&mut patch, pw, ph, &mut planner, false);

    let mut out = [0.0; TEXTURE_LEN];
    let mut kbuf = vec![Complex64::new(0.0, 0.0); pw * ph];
    for (si, &lambda) in WAVELENGTHS.iter().enumerate() {
        for o in 0..ORIENTATIONS {
            kbuf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (dx, dy, w) in gabor_kernel(lambda, o) {
                let ix = dx.rem_euclid(pw as isize) as usize;
                let iy = dy.rem_euclid(ph as isize) as usize;
                kbuf[iy * pw + ix] = w;
            }
            fft2(&mut kbuf, pw, ph, &mut planner, false);
            for (k, p) in kbuf.iter_mut().zip(&patch) {
                *k *= p;
            }
            fft2(&mut kbuf, pw, ph, &mut planner, true);
            let scale = 1.0 / (pw * ph) as f64;
            let sum: f64 = pixels
                .iter()
                .map(|&(x, y)| kbuf[(y - y0 + pad) * pw + (x - x0 + pad)].norm() * scale)
                .sum();
            out[si * ORIENTATIONS + o] = sum / pixels.len() as f64;
        }
    }
    Ok(TextureResult {
        texture: TextureVec(out),
        too_small: false,
    })
}

fn fft2(buf: &mut [Complex64], w: usize, h: usize, planner: &mut FftPlanner<f64>, inverse: bool) {
    let row = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    row.process(buf);
    let col = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    let mut tmp = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            tmp[y] = buf[y * w + x];
        }
        col.process(&mut tmp);
        for y in 0..h {
            buf[y * w + x] = tmp[y];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_pixels(x0: usize, y0: usize, side: usize) -> Vec<(usize, usize)> {
        (y0..y0 + side)
            .flat_map(|y| (x0..x0 + side).map(move |x| (x, y)))
            .collect()
    }

    fn stripes(w: usize, h: usize, period: f64, angle: f64) -> GrayImage {
        let (c, s) = (angle.cos(), angle.sin());
        let data = (0..h)
            .flat_map(|y| {
                (0..w).map(move |x| {
                    128.0 + 100.0 * (2.0 * PI * (x as f64 * c + y as f64 * s) / period).sin()
                })
            })
            .collect();
        GrayImage::new(w, h, data).unwrap()
    }

    #[test]
    fn kernels_are_zero_mean() {
        for &l in &WAVELENGTHS {
            for o in 0..ORIENTATIONS {
                let s: Complex64 = gabor_kernel(l, o).iter().map(|t| t.2).sum();
                assert!(s.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_region_is_near_zero() {
        let img = GrayImage::new(64, 64, vec![90.0; 64 * 64]).unwrap();
        let r = gabor_texture(&img, &square_pixels(10, 10, 40)).unwrap();
        assert!(!r.too_small);
        assert!(r.texture.values().iter().all(|v| v.abs() < 1e-9));
    }

    /// Direct spatial convolution with clamp-free mean fill, evaluated at a
    /// handful of pixels, against the FFT route.
    #[test]
    fn matches_direct_convolution() {
        let img = stripes(60, 60, 8.0, 0.3);
        let px = square_pixels(5, 7, 30);
        let got = gabor_texture(&img, &px).unwrap();
        let mean = px.iter().map(|&(x, y)| img.get(x, y)).sum::<f64>() / px.len() as f64;
        let inside = |x: isize, y: isize| (5..35).contains(&x) && (7..37).contains(&y);
        for (si, &l) in WAVELENGTHS.iter().enumerate().take(2) {
            for o in [0, 3] {
                let k = gabor_kernel(l, o);
                let mut acc = 0.0;
                for &(x, y) in &px {
                    let mut z = Complex64::new(0.0, 0.0);
                    for &(dx, dy, w) in &k {
                        let (sx, sy) = (x as isize - dx, y as isize - dy);
                        let v = if inside(sx, sy) {
                            img.get(sx as usize, sy as usize)
                        } else {
                            mean
                        };
                        z += w * v;
                    }
                    acc += z.norm();
                }
                let want = acc / px.len() as f64;
                let have = got.texture.values()[si * ORIENTATIONS + o];
                assert!((want - have).abs() < 1e-6 * want.max(1.0), "{want} vs {have}");
            }
        }
    }

    #[test]
    fn translation_invariant() {
        let img = stripes(120, 120, 8.0, 0.0);
        let a = gabor_texture(&img, &square_pixels(10, 10, 40)).unwrap().texture;
        let b = gabor_texture(&img, &square_pixels(58, 42, 40)).unwrap().texture;
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 0.05 * x.abs().max(1e-9), "{x} vs {y}");
        }
    }

    #[test]
    fn responds_to_matching_frequency_and_orientation() {
        let img = stripes(80, 80, 8.0, 0.0);
        let t = gabor_texture(&img, &square_pixels(0, 0, 80)).unwrap().texture;
        let v = t.values();
        let best = (0..TEXTURE_LEN).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        assert_eq!(best, ORIENTATIONS, "scale 8, orientation 0");
    }

    #[test]
    fn small_region_flagged() {
        let img = stripes(40, 40, 8.0, 0.0);
        let r = gabor_texture(&img, &square_pixels(0, 0, 10)).unwrap();
        assert!(r.too_small);
        assert_eq!(r.texture, TextureVec::ZERO);
        assert_eq!(min_region_area(), 225);
    }

    #[test]
    fn texture_length_checked() {
        assert!(matches!(TextureVec::new(&[0.0; 23]), Err(Error::TextureLength(23))));
        assert!(TextureVec::new(&[0.0; 24]).is_ok());
    }
}
