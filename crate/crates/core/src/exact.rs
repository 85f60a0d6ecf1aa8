//! Exact recognition of a description in a segmented image, and subsumption
//! between descriptions.
//!
//! A description is recognized when one similarity transform maps every
//! component contour onto a distinct region contour. Any such transform is
//! fixed by where two component centroids land, so the search tries every
//! ordered pair of region centroids as the image of an anchor pair of
//! components, then verifies the remaining components.

use crate::error::{Error, Result};
use crate::features::{orientation_info, sim_ss, OrientationConfig};
use crate::geometry::{Contour, Transform, Vec2};
use crate::model::{prototypical_image, CompositeDescription, SegmentedImage};

/// Contour tolerance as a fraction of component size.
pub const DEFAULT_EPS: f64 = 0.02;
/// Minimum invariant shape similarity before a single-shape alignment is
/// attempted.
pub const SHAPE_PREFILTER: f64 = 0.98;
const MATCH_SAMPLES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactMatch {
    /// `mapping[k]` is the region matched by component `k`.
    pub mapping: Vec<usize>,
    /// Global transform from description coordinates to image coordinates.
    pub transform: Transform,
}

/// Work counters of one recognition call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecognizeStats {
    pub transform_solves: usize,
    pub contour_matches: usize,
}

/// The similarity transform taking `p1 ↦ v1` and `p2 ↦ v2`.
pub fn solve_two_point_transform(p1: Vec2, p2: Vec2, v1: Vec2, v2: Vec2) -> Result<Transform> {
    let dp = p2 - p1;
    let dv = v2 - v1;
    let tiny = |d: Vec2, a: Vec2, b: Vec2| d.norm() <= 1e-12 * (1.0 + a.norm().max(b.norm()));
    if tiny(dp, p1, p2) || tiny(dv, v1, v2) {
        return Err(Error::DegenerateAnchor);
    }
    let s = dv.norm() / dp.norm();
    let theta = crate::geometry::wrap_angle(dv.angle() - dp.angle());
    let t = v1 - p1.rotate(theta) * s;
    Transform::new(t.x, t.y, theta, s)
}

fn directed_mean(samples: &[Vec2], target: &Contour) -> f64 {
    samples.iter().map(|&p| target.boundary_distance(p)).sum::<f64>() / samples.len() as f64
}

/// Whether two contours coincide within `eps·size(a)`.
///
/// The distance is the larger of the two directed mean closest-point
/// distances between uniform boundary samples of one contour and the
/// polyline of the other; it does not depend on where either traversal
/// starts.
pub fn contour_match(a: &Contour, b: &Contour, eps: f64) -> bool {
    contour_distance(a, b)
        .map(|(d, size)| d <= eps * size)
        .unwrap_or(false)
}

/// Symmetric mean boundary distance and `size(a)`.
pub fn contour_distance(a: &Contour, b: &Contour) -> Result<(f64, f64)> {
    let size = a.size()?;
    let sa = a.resample_uniform(MATCH_SAMPLES)?;
    let sb = b.resample_uniform(MATCH_SAMPLES)?;
    let d = directed_mean(sa.points(), b).max(directed_mean(sb.points(), a));
    Ok((d, size))
}

/// Recognition on shape alone.
pub fn recognize_exact(c: &CompositeDescription, img: &SegmentedImage, eps: f64) -> Option<ExactMatch> {
    recognize_exact_with_stats(c, img, eps).0
}

pub fn recognize_exact_with_stats(
    c: &CompositeDescription,
    img: &SegmentedImage,
    eps: f64,
) -> (Option<ExactMatch>, RecognizeStats) {
    let mut stats = RecognizeStats::default();
    let m = recognize_with(c, img, eps, &|_, _| true, &mut stats);
    (m, stats)
}

/// Whether `c` subsumes `d`: `c` is recognized in the prototypical image of
/// `d`, with each matched component's color and texture either unspecified
/// in `c` or equal to the matched component of `d`.
pub fn subsumes(c: &CompositeDescription, d: &CompositeDescription, eps: f64) -> Result<bool> {
    let img = prototypical_image(d)?;
    Ok(subsumes_in(c, d, &img, eps))
}

/// [`subsumes`] with the prototypical image of `d` already built.
pub fn subsumes_in(c: &CompositeDescription, d: &CompositeDescription, proto_d: &SegmentedImage, eps: f64) -> bool {
    let compatible = |k: usize, j: usize| {
        let ck = &c.components[k];
        let dj = &d.components[j];
        let color_ok = match (&ck.color, &dj.color) {
            (None, _) => true,
            (Some(a), Some(b)) => a.distance(b) <= 1e-6,
            (Some(_), None) => false,
        };
        let texture_ok = match (&ck.texture, &dj.texture) {
            (None, _) => true,
            (Some(a), Some(b)) => a
                .values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| (x - y).abs() <= 1e-6 * (1.0 + x.abs())),
            (Some(_), None) => false,
        };
        color_ok && texture_ok
    };
    let mut stats = RecognizeStats::default();
    recognize_with(c, proto_d, eps, &compatible, &mut stats).is_some()
}

/// Search state for one candidate global transform.
struct Verifier<'a> {
    c: &'a CompositeDescription,
    img: &'a SegmentedImage,
    eps: f64,
    compatible: &'a dyn Fn(usize, usize) -> bool,
    tau: Transform,
    /// Memo of contour checks, indexed `k·m + j`.
    memo: Vec<Option<bool>>,
}

impl Verifier<'_> {
    fn contour_ok(&mut self, k: usize, j: usize, stats: &mut RecognizeStats) -> bool {
        let m = self.img.len();
        if let Some(v) = self.memo[k * m + j] {
            return v;
        }
        stats.contour_matches += 1;
        let comp = &self.c.components[k];
        let placed = self.tau.compose(&comp.transform).apply(comp.shape.contour());
        let ok = contour_match(&placed, self.img.regions()[j].contour(), self.eps);
        self.memo[k * m + j] = Some(ok);
        ok
    }

    /// Region candidates per component: compatible regions whose centroid
    /// lies near the predicted one.
    fn candidates(&self, fixed: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let n = self.c.len();
        (0..n)
            .map(|k| {
                if let Some(&(_, j)) = fixed.iter().find(|(kk, _)| *kk == k) {
                    return if (self.compatible)(k, j) { vec![j] } else { vec![] };
                }
                let comp = &self.c.components[k];
                let predicted = self.tau.apply_point(comp.centroid());
                let tol = 2.0 * self.eps * comp.size() * self.tau.s;
                self.img
                    .regions()
                    .iter()
                    .enumerate()
                    .filter(|(j, r)| r.centroid().distance(predicted) <= tol && (self.compatible)(k, *j))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    }

    fn assign(
        &mut self,
        cands: &[Vec<usize>],
        k: usize,
        used: &mut Vec<bool>,
        mapping: &mut Vec<usize>,
        stats: &mut RecognizeStats,
    ) -> bool {
        if k == cands.len() {
            return true;
        }
        for &j in &cands[k] {
            if used[j] || !self.contour_ok(k, j, stats) {
                continue;
            }
            used[j] = true;
            mapping.push(j);
            if self.assign(cands, k + 1, used, mapping, stats) {
                return true;
            }
            mapping.pop();
            used[j] = false;
        }
        false
    }

    fn run(&mut self, fixed: &[(usize, usize)], stats: &mut RecognizeStats) -> Option<Vec<usize>> {
        let cands = self.candidates(fixed);
        if cands.iter().any(|c| c.is_empty()) {
            return None;
        }
        let mut used = vec![false; self.img.len()];
        let mut mapping = Vec::with_capacity(self.c.len());
        self.assign(&cands, 0, &mut used, &mut mapping, stats)
            .then_some(mapping)
    }
}

fn recognize_with(
    c: &CompositeDescription,
    img: &SegmentedImage,
    eps: f64,
    compatible: &dyn Fn(usize, usize) -> bool,
    stats: &mut RecognizeStats,
) -> Option<ExactMatch> {
    let n = c.len();
    let m = img.len();
    if n == 0 || n > m {
        return None;
    }
    let verify = |tau: Transform, fixed: &[(usize, usize)], stats: &mut RecognizeStats| {
        let mut v = Verifier {
            c,
            img,
            eps,
            compatible,
            tau,
            memo: vec![None; n * m],
        };
        v.run(fixed, stats).map(|mapping| ExactMatch {
            mapping,
            transform: tau,
        })
    };

    let anchors = anchor_pair(c);
    let Some((a, b)) = anchors else {
        // One component, or every centroid stacked on the same point: align
        // the first component on its own and verify the rest.
        for (j, tau) in single_shape_transforms(c, img, 0) {
            if let Some(found) = verify(tau, &[(0, j)], stats) {
                return Some(found);
            }
        }
        return None;
    };
    let (pa, pb) = (c.components[a].centroid(), c.components[b].centroid());
    let regions = img.regions();
    for i in 0..m {
        for h in 0..m {
            if i == h {
                continue;
            }
            stats.transform_solves += 1;
            let Ok(tau) = solve_two_point_transform(pa, pb, regions[i].centroid(), regions[h].centroid())
            else {
                continue;
            };
            if let Some(found) = verify(tau, &[(a, i), (b, h)], stats) {
                return Some(found);
            }
        }
    }
    None
}

/// First pair of components with distinct centroids.
fn anchor_pair(c: &CompositeDescription) -> Option<(usize, usize)> {
    let n = c.len();
    let scale = c
        .components
        .iter()
        .map(|k| k.size())
        .fold(0.0, f64::max);
    for a in 0..n {
        for b in (a + 1)..n {
            if c.components[a].centroid().distance(c.components[b].centroid()) > 1e-9 * scale {
                return Some((a, b));
            }
        }
    }
    None
}

/// Candidate global transforms placing component `k` on each region whose
/// invariant shape similarity passes the prefilter: the scale comes from the
/// size ratio, the rotation from each correlation maximum, and the
/// translation from the centroids.
fn single_shape_transforms(
    c: &CompositeDescription,
    img: &SegmentedImage,
    k: usize,
) -> Vec<(usize, Transform)> {
    let comp = &c.components[k];
    let shape = &comp.shape;
    let cfg = OrientationConfig::default();
    let inv = comp.transform.inverse();
    let mut out = Vec::new();
    for (j, r) in img.regions().iter().enumerate() {
        match sim_ss(shape.descriptor(), r.descriptor()) {
            Ok(s) if s >= SHAPE_PREFILTER => {}
            _ => continue,
        }
        let scale = r.size() / shape.size();
        let info = orientation_info(r.descriptor(), shape.descriptor(), &cfg);
        for &theta in &info.phases {
            let t = r.centroid() - shape.centroid().rotate(theta) * scale;
            let Ok(direct) = Transform::new(t.x, t.y, theta, scale) else {
                continue;
            };
            out.push((j, direct.compose(&inv)));
        }
    }
    out
}
