//! Fourier shape descriptors, invariant shape similarity and orientation
//! recovery by cross-correlation.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{resample_points, Contour, Vec2};

/// Uniform boundary samples per contour.
pub const DEFAULT_NB: usize = 128;
/// Retained harmonics on each side of DC.
pub const DEFAULT_NC: usize = 16;

/// Truncated spectrum of the complex boundary signal, indices `-nc..=nc`.
///
/// Coefficients are normalized by the sample count so the DC term is the mean
/// boundary point and `|Z(1)|` is the radius for a circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct FourierDescriptor {
    coeffs: Vec<Complex64>,
}

impl FourierDescriptor {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 3 || coeffs.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "descriptor length must be 2*nc+1 with nc >= 1, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn nc(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// Coefficient for harmonic `k` in `-nc..=nc`.
    pub fn get(&self, k: isize) -> Complex64 {
        self.coeffs[(k + self.nc() as isize) as usize]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn harmonics(&self) -> impl Iterator<Item = (isize, Complex64)> + '_ {
        let nc = self.nc() as isize;
        (-nc..=nc).filter(|&k| k != 0).map(move |k| (k, self.get(k)))
    }

    /// Energy outside the DC term.
    pub fn energy(&self) -> f64 {
        self.harmonics().map(|(_, z)| z.norm_sqr()).sum()
    }
}

impl TryFrom<Vec<[f64; 2]>> for FourierDescriptor {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::from_coeffs(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<FourierDescriptor> for Vec<[f64; 2]> {
    fn from(d: FourierDescriptor) -> Self {
        d.coeffs.iter().map(|z| [z.re, z.im]).collect()
    }
}

fn spectrum(points: &[Vec2], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let n = points.len();
    let mut buf: Vec<Complex64> = points.iter().map(|p| Complex64::new(p.x, p.y)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= inv);
    buf
}

fn truncate(spec: &[Complex64], nc: usize) -> Vec<Complex64> {
    let n = spec.len() as isize;
    (-(nc as isize)..=nc as isize)
        .map(|k| spec[k.rem_euclid(n) as usize])
        .collect()
}

/// Descriptor with the default boundary sampling.
pub fn fourier_descriptor(c: &Contour, nc: usize) -> Result<FourierDescriptor> {
    fourier_descriptor_with(c, DEFAULT_NB, nc)
}

/// Two-pass descriptor: the uniformly sampled boundary is low-passed to
/// `2·nc+1` harmonics, evaluated densely (`4·nb` points), resampled uniformly
/// by arc length along that smooth curve and transformed again.
pub fn fourier_descriptor_with(c: &Contour, nb: usize, nc: usize) -> Result<FourierDescriptor> {
    if nc == 0 {
        return Err(Error::InvalidParameter("nc must be positive".into()));
    }
    if nb < 2 * nc + 2 {
        return Err(Error::TooFewPoints {
            need: 2 * nc + 2,
            got: nb,
        });
    }
    let mut planner = FftPlanner::new();
    let first = resample_points(c.points(), nb)?;
    let low = truncate(&spectrum(&first, &mut planner), nc);

    let n_dense = 4 * nb;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_dense];
    for (i, z) in low.iter().enumerate() {
        let k = i as isize - nc as isize;
        buf[k.rem_euclid(n_dense as isize) as usize] = *z;
    }
    planner.plan_fft_inverse(n_dense).process(&mut buf);
    let dense: Vec<Vec2> = buf.iter().map(|z| Vec2::new(z.re, z.im)).collect();
    let unif = resample_points(&dense, nb)?;
    FourierDescriptor::from_coeffs(truncate(&spectrum(&unif, &mut planner), nc))
}

/// Invariant shape similarity in `[0, 1]`.
///
/// DC is dropped (translation), magnitudes are divided by `|Z(1)|` (scale)
/// and phases are discarded (rotation and starting point); the result is the
/// cosine between the two magnitude vectors.
pub fn sim_ss(a: &FourierDescriptor, b: &FourierDescriptor) -> Result<f64> {
    if a.coeffs.len() != b.coeffs.len() {
        return Err(Error::DescriptorMismatch(a.coeffs.len(), b.coeffs.len()));
    }
    let na = normalized_magnitudes(a)?;
    let nb = normalized_magnitudes(b)?;
    let dot: f64 = na.iter().zip(&nb).map(|(x, y)| x * y).sum();
    let ea: f64 = na.iter().map(|x| x * x).sum();
    let eb: f64 = nb.iter().map(|x| x * x).sum();
    Ok((dot / (ea * eb).sqrt()).clamp(0.0, 1.0))
}

fn normalized_magnitudes(d: &FourierDescriptor) -> Result<Vec<f64>> {
    let mags: Vec<f64> = d.harmonics().map(|(_, z)| z.norm()).collect();
    let total: f64 = mags.iter().map(|m| m * m).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroEnergy);
    }
    let first = d.get(1).norm();
    let scale = if first > 0.0 { first } else { total.sqrt() };
    Ok(mags.into_iter().map(|m| m / scale).collect())
}

/// Thresholds controlling orientation recovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationConfig {
    /// Secondary maxima within this fraction of the global maximum count as
    /// symmetric orientations.
    pub symmetry_maxima_threshold: f64,
    /// Profiles with `min / max` at or above this are circularly symmetric.
    pub circular_symmetry_threshold: f64,
}

impl Default for OrientationConfig {
    fn default() -> Self {
        Self {
            symmetry_maxima_threshold: 0.10,
            circular_symmetry_threshold: 0.99,
        }
    }
}

/// Orientations (radians) under which a reference shape best aligns with a
/// region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientationInfo {
    pub phases: Vec<f64>,
    pub is_circularly_symmetric: bool,
}

/// Cross-correlation of the two spectra over every starting-point shift.
///
/// For a shift `f` (fraction of the perimeter) the correlation is
/// `G(f) = Σ_{k≠0} Z_r(k)·conj(Z_b(k))·e^{-j2πkf}`. If the region is the shape
/// rotated by `θ`, `|G|` peaks at the true shift and `arg G = θ` there.
pub fn orientation_info(
    region: &FourierDescriptor,
    shape: &FourierDescriptor,
    cfg: &OrientationConfig,
) -> OrientationInfo {
    let nc = region.nc().min(shape.nc()) as isize;
    // (k, Z_r(k)·conj(Z_b(k)), Z_r(-k)·conj(Z_b(-k))) for k = 1..=nc
    let prod: Vec<(Complex64, Complex64)> = (1..=nc)
        .map(|k| (region.get(k) * shape.get(k).conj(), region.get(-k) * shape.get(-k).conj()))
        .collect();
    let corr = |f: f64| -> Complex64 {
        let w = Complex64::from_polar(1.0, -2.0 * PI * f);
        let mut wk = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for &(pos, neg) in &prod {
            wk *= w;
            acc += pos * wk + neg * wk.conj();
        }
        acc
    };

    let grid = (32 * nc.max(1) as usize).max(256);
    let profile: Vec<f64> = (0..grid).map(|i| corr(i as f64 / grid as f64).norm()).collect();
    let max = profile.iter().cloned().fold(0.0, f64::max);
    let min = profile.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return OrientationInfo {
            phases: vec![0.0],
            is_circularly_symmetric: true,
        };
    }
    let symmetric = min / max >= cfg.circular_symmetry_threshold;

    let step = 1.0 / grid as f64;
    let refine = |i: usize| -> f64 {
        // golden-section search for the peak around grid point i
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (i as f64 * step - step, i as f64 * step + step);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (corr(c).norm(), corr(d).norm());
        for _ in 0..40 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = corr(c).norm();
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = corr(d).norm();
            }
        }
        (a + b) / 2.0
    };

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    if symmetric {
        let i = argmax(&profile);
        let f = refine(i);
        peaks.push((corr(f).norm(), corr(f).arg()));
    } else {
        let floor = (1.0 - cfg.symmetry_maxima_threshold) * max;
        for i in 0..grid {
            let prev = profile[(i + grid - 1) % grid];
            let next = profile[(i + 1) % grid];
            let v = profile[i];
            if v >= floor && v > prev && v >= next {
                let f = refine(i);
                let z = corr(f);
                peaks.push((z.norm(), z.arg()));
            }
        }
        if peaks.is_empty() {
            let f = refine(argmax(&profile));
            let z = corr(f);
            peaks.push((z.norm(), z.arg()));
        }
    }
    // strongest first; drop near-duplicate orientations
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut phases: Vec<f64> = Vec::new();
    for (_, p) in peaks {
        let dup = phases.iter().any(|q| {
            let d = (p - q).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d) < 1e-3
        });
        if !dup {
            phases.push(p);
        }
    }
    OrientationInfo {
        phases,
        is_circularly_symmetric: symmetric,
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
