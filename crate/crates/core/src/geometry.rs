//! Planar primitives: points, similarity transforms and closed contours.
//!
//! Contours are simple closed polylines. On construction they are normalized to
//! counter-clockwise traversal (positive signed area) and rotated so the first
//! vertex is the one with the lowest `y`, ties broken by lowest `x`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of uniform boundary samples used for [`Contour::size`].
pub const SIZE_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Direction angle in radians, in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle in radians into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Circular distance between two angles given in degrees, in `[0, 180]`.
pub fn circular_diff_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Similarity transform `p ↦ s·R(theta)·p + (tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub tx: f64,
    pub ty: f64,
    pub theta: f64,
    pub s: f64,
}

impl Default for Transform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        tx: 0.0,
        ty: 0.0,
        theta: 0.0,
        s: 1.0,
    };

    pub fn new(tx: f64, ty: f64, theta: f64, s: f64) -> Result<Self> {
        let t = Transform { tx, ty, theta, s };
        t.validate()?;
        Ok(t)
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Transform {
            tx,
            ty,
            ..Self::IDENTITY
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tx.is_finite() && self.ty.is_finite() && self.theta.is_finite()) {
            return Err(Error::InvalidTransform("non-finite component".into()));
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::InvalidTransform(format!(
                "scale must be positive, got {}",
                self.s
            )));
        }
        Ok(())
    }

    pub fn offset(&self) -> Vec2 {
        Vec2::new(self.tx, self.ty)
    }

    pub fn apply_point(&self, p: Vec2) -> Vec2 {
        p.rotate(self.theta) * self.s + self.offset()
    }

    /// Pointwise image of a contour. Point order is preserved.
    pub fn apply(&self, c: &Contour) -> Contour {
        Contour {
            points: c.points.iter().map(|&p| self.apply_point(p)).collect(),
        }
    }

    /// `self ∘ inner`: apply `inner` first, then `self`.
    pub fn compose(&self, inner: &Transform) -> Transform {
        let t = self.apply_point(inner.offset());
        Transform {
            tx: t.x,
            ty: t.y,
            theta: wrap_angle(self.theta + inner.theta),
            s: self.s * inner.s,
        }
    }

    pub fn inverse(&self) -> Transform {
        let theta = -self.theta;
        let s = 1.0 / self.s;
        let t = (-self.offset()).rotate(theta) * s;
        Transform {
            tx: t.x,
            ty: t.y,
            theta: wrap_angle(theta),
            s,
        }
    }

    /// Largest displacement between the two transforms over a disc of the
    /// given radius around the origin; a cheap equivalence measure.
    pub fn max_deviation(&self, other: &Transform, radius: f64) -> f64 {
        (0..8)
            .map(|i| {
                let p = Vec2::new(radius, 0.0).rotate(i as f64 * PI / 4.0);
                self.apply_point(p).distance(other.apply_point(p))
            })
            .chain(std::iter::once(
                self.apply_point(Vec2::ZERO).distance(other.apply_point(Vec2::ZERO)),
            ))
            .fold(0.0, f64::max)
    }
}

fn start_index(pts: &[Vec2]) -> usize {
    pts.iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// A simple closed polyline; the last point connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Vec2>,
}

impl Contour {
    /// Validates and normalizes a closed polyline.
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidContour("non-finite coordinate".into()));
        }
        let mut pts = dedup_closed(points);
        if pts.len() < 3 {
            return Err(Error::InvalidContour(format!(
                "need at least 3 distinct points, got {}",
                pts.len()
            )));
        }
        let area = signed_area(&pts);
        if area.abs() <= f64::EPSILON * bbox_diag(&pts).powi(2) {
            return Err(Error::DegenerateContour);
        }
        if area < 0.0 {
            pts.reverse();
        }
        let start = start_index(&pts);
        pts.rotate_left(start);
        let c = Contour { points: pts };
        if let Some((i, j)) = c.self_intersection() {
            return Err(Error::InvalidContour(format!(
                "self-intersecting (edges {i} and {j})"
            )));
        }
        Ok(c)
    }

    /// Same polygon, starting at the lowest (then leftmost) vertex as
    /// [`Contour::new`] does.
    pub fn canonical(&self) -> Contour {
        let mut points = self.points.clone();
        let start = start_index(&points);
        points.rotate_left(start);
        Contour { points }
    }

    pub fn from_xy(points: &[[f64; 2]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Vec2::new(p[0], p[1])).collect())
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_xy(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.points)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    /// Area centroid from first-order polygon moments.
    pub fn centroid(&self) -> Result<Vec2> {
        // Shift to the first vertex to keep the moment sums well conditioned.
        let o = self.points[0];
        let mut a2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (p, q) in self.edges() {
            let (p, q) = (p - o, q - o);
            let w = p.cross(q);
            a2 += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        if a2.abs() <= f64::EPSILON * bbox_diag(&self.points).powi(2) {
            return Err(Error::DegenerateContour);
        }
        Ok(Vec2::new(cx / (3.0 * a2), cy / (3.0 * a2)) + o)
    }

    /// Mean distance from the centroid to uniformly resampled boundary points.
    pub fn size(&self) -> Result<f64> {
        let c = self.centroid()?;
        let samples = resample_points(&self.points, SIZE_SAMPLES)?;
        Ok(samples.iter().map(|p| p.distance(c)).sum::<f64>() / samples.len() as f64)
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        bbox(&self.points)
    }

    /// Even-odd point containment; boundary points may go either way.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the nearest point of the boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, d: Vec2) -> Contour {
        Contour {
            points: self.points.iter().map(|&p| p + d).collect(),
        }
    }

    /// Returns the first pair of intersecting edges, if the polyline is not simple.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.points.len();
        let seg = |i: usize| (self.points[i], self.points[(i + 1) % n]);
        for i in 0..n {
            let (a, b) = seg(i);
            // Adjacent edge folding back onto this one.
            let (_, c) = seg((i + 1) % n);
            let u = b - a;
            let v = c - b;
            if u.cross(v).abs() <= 1e-12 * u.norm() * v.norm() && u.dot(v) < 0.0 {
                return Some((i, (i + 1) % n));
            }
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = seg(j);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// `n` points equally spaced by arc length, starting at the first vertex.
    pub fn resample_uniform(&self, n: usize) -> Result<Contour> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "resample count must be at least 3, got {n}"
            )));
        }
        Ok(Contour {
            points: resample_points(&self.points, n)?,
        })
    }
}

fn dedup_closed(points: Vec<Vec2>) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

pub(crate) fn signed_area(points: &[Vec2]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let o = points[0];
    (0..n)
        .map(|i| (points[i] - o).cross(points[(i + 1) % n] - o))
        .sum::<f64>()
        / 2.0
}

fn bbox(points: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

fn bbox_diag(points: &[Vec2]) -> f64 {
    let (lo, hi) = bbox(points);
    lo.distance(hi)
}

pub(crate) fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub(crate) fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    if a.x.max(b.x) < c.x.min(d.x)
        || c.x.max(d.x) < a.x.min(b.x)
        || a.y.max(b.y) < c.y.min(d.y)
        || c.y.max(d.y) < a.y.min(b.y)
    {
        return false;
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub(crate) fn resample_points(points: &[Vec2], n: usize) -> Result<Vec<Vec2>> {
    let m = points.len();
    let lengths: Vec<f64> = (0..m)
        .map(|i| points[i].distance(points[(i + 1) % m]))
        .collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateContour);
    }
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut edge = 0;
    let mut edge_start = 0.0;
    for k in 0..n {
        let target = k as f64 * step;
        while edge < m - 1 && edge_start + lengths[edge] < target {
            edge_start += lengths[edge];
            edge += 1;
        }
        let a = points[edge];
        let b = points[(edge + 1) % m];
        let t = if lengths[edge] > 0.0 {
            ((target - edge_start) / lengths[edge]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(a + (b - a) * t);
    }
    Ok(out)
}

/// Area of the intersection of the interiors of two simple polygons.
///
/// Both polygons are triangulated by ear clipping and the convex pieces are
/// clipped pairwise; the pieces partition each polygon so the areas add up.
pub fn intersection_area(a: &Contour, b: &Contour) -> f64 {
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    if ahi.x <= blo.x || bhi.x <= alo.x || ahi.y <= blo.y || bhi.y <= alo.y {
        return 0.0;
    }
    let ta = triangulate(a.points());
    let tb = triangulate(b.points());
    intersection_area_tris(&ta, &tb)
}

pub(crate) type Triangle = [Vec2; 3];

pub(crate) fn intersection_area_tris(ta: &[Triangle], tb: &[Triangle]) -> f64 {
    let boxes_b: Vec<(Vec2, Vec2)> = tb.iter().map(|t| bbox(t)).collect();
    let mut total = 0.0;
    for t in ta {
        let (lo, hi) = bbox(t);
        for (u, (ulo, uhi)) in tb.iter().zip(&boxes_b) {
            if hi.x <= ulo.x || uhi.x <= lo.x || hi.y <= ulo.y || uhi.y <= lo.y {
                continue;
            }
            total += convex_clip_area(t, u);
        }
    }
    total
}

/// Whether two simple polygons share a positive-area interior region.
/// Touching boundaries do not count.
pub fn interiors_overlap(a: &Contour, b: &Contour) -> bool {
    let area = intersection_area(a, b);
    area > 1e-9 * a.area().min(b.area())
}

/// Ear-clipping triangulation of a counter-clockwise simple polygon.
pub(crate) fn triangulate(points: &[Vec2]) -> Vec<Triangle> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let mut tris = Vec::with_capacity(points.len().saturating_sub(2));
    let scale = bbox_diag(points).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale * scale;
    let mut i = 0;
    let mut since_last = 0;
    while idx.len() > 3 {
        let n = idx.len();
        let (ip, ic, inx) = (idx[(i + n - 1) % n], idx[i % n], idx[(i + 1) % n]);
        let (p, c, q) = (points[ip], points[ic], points[inx]);
        let turn = orient(p, c, q);
        let mut clip = false;
        if turn.abs() <= tol {
            // Collinear or folded vertex: drop it without emitting a triangle.
            idx.remove(i % n);
            since_last = 0;
            continue;
        }
        if turn > 0.0 {
            clip = idx.iter().all(|&k| {
                if k == ip || k == ic || k == inx {
                    return true;
                }
                let r = points[k];
                !(orient(p, c, r) >= -tol && orient(c, q, r) >= -tol && orient(q, p, r) >= -tol)
            });
        }
        if clip {
            tris.push([p, c, q]);
            idx.remove(i % n);
            since_last = 0;
        } else {
            i = (i + 1) % n;
            since_last += 1;
            if since_last > n {
                // Numerically stuck: clip the most convex vertex.
                let best = (0..n)
                    .max_by(|&x, &y| {
                        let tx = orient(
                            points[idx[(x + n - 1) % n]],
                            points[idx[x]],
                            points[idx[(x + 1) % n]],
                        );
                        let ty = orient(
                            points[idx[(y + n - 1) % n]],
                            points[idx[y]],
                            points[idx[(y + 1) % n]],
                        );
                        tx.total_cmp(&ty)
                    })
                    .unwrap_or(0);
                let t = [
                    points[idx[(best + n - 1) % n]],
                    points[idx[best]],
                    points[idx[(best + 1) % n]],
                ];
                if orient(t[0], t[1], t[2]) > 0.0 {
                    tris.push(t);
                }
                idx.remove(best);
                since_last = 0;
            }
        }
        if !idx.is_empty() {
            i %= idx.len();
        }
    }
    if idx.len() == 3 {
        let t = [points[idx[0]], points[idx[1]], points[idx[2]]];
        if orient(t[0], t[1], t[2]) > tol {
            tris.push(t);
        }
    }
    tris
}

/// Area of the intersection of two counter-clockwise convex polygons
/// (Sutherland–Hodgman).
fn convex_clip_area(subject: &[Vec2], clip: &[Vec2]) -> f64 {
    let mut poly: Vec<Vec2> = subject.to_vec();
    let m = clip.len();
    for e in 0..m {
        if poly.is_empty() {
            return 0.0;
        }
        let a = clip[e];
        let b = clip[(e + 1) % m];
        let input = std::mem::take(&mut poly);
        let k = input.len();
        for i in 0..k {
            let cur = input[i];
            let prev = input[(i + k - 1) % k];
            let cin = orient(a, b, cur) >= 0.0;
            let pin = orient(a, b, prev) >= 0.0;
            if cin {
                if !pin {
                    poly.push(line_intersection(prev, cur, a, b));
                }
                poly.push(cur);
            } else if pin {
                poly.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    signed_area(&poly).max(0.0)
}

fn line_intersection(p: Vec2, q: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let r = q - p;
    let s = b - a;
    let denom = r.cross(s);
    if denom == 0.0 {
        return p;
    }
    let t = (a - p).cross(s) / denom;
    p + r * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn square(x0: f64, y0: f64, side: f64) -> Contour {
        Contour::from_xy(&[
            [x0, y0],
            [x0 + side, y0],
            [x0 + side, y0 + side],
            [x0, y0 + side],
        ])
        .unwrap()
    }

    fn circle(r: f64, n: usize) -> Contour {
        Contour::new(
            (0..n)
                .map(|i| Vec2::new(r, 0.0).rotate(2.0 * PI * i as f64 / n as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_transform_keeps_contour() {
        let c = square(0.0, 0.0, 1.0);
        assert_eq!(Transform::IDENTITY.apply(&c), c);
    }

    #[test]
    fn pure_scaling_doubles_corners() {
        let c = square(0.0, 0.0, 1.0);
        let t = Transform::new(0.0, 0.0, 0.0, 2.0).unwrap();
        let out = t.apply(&c);
        for (p, q) in c.points().iter().zip(out.points()) {
            assert_eq!(*q, *p * 2.0);
        }
    }

    #[test]
    fn rotate_scale_translate_point() {
        let t = Transform::new(2.0, 2.0, FRAC_PI_2, 2.0).unwrap();
        let p = t.apply_point(Vec2::new(1.0, 0.0));
        assert!((p.x - 2.0).abs() < 1e-12 && (p.y - 4.0).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn compose_identity_translation_and_scale() {
        let t = Transform::new(1.0, -2.0, 0.3, 1.5).unwrap();
        assert_eq!(t.compose(&Transform::IDENTITY), t);
        let a = Transform::translation(1.0, 2.0);
        let b = Transform::translation(-3.0, 5.0);
        let ab = a.compose(&b);
        assert_eq!((ab.tx, ab.ty), (-2.0, 7.0));
        let s2 = Transform::new(0.0, 0.0, 0.0, 2.0).unwrap();
        let s3 = Transform::new(0.0, 0.0, 0.0, 3.0).unwrap();
        assert_eq!(s2.compose(&s3).s, 6.0);
    }

    #[test]
    fn scale_must_be_positive() {
        assert!(Transform::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(Transform::new(0.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn centroid_examples() {
        let c = square(0.0, 0.0, 1.0).centroid().unwrap();
        assert!((c.x - 0.5).abs() < 1e-12 && (c.y - 0.5).abs() < 1e-12);
        let tri = Contour::from_xy(&[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]).unwrap();
        let c = tri.centroid().unwrap();
        assert!((c.x - 1.0).abs() < 1e-12 && (c.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_contours_rejected() {
        assert!(Contour::from_xy(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(matches!(
            Contour::from_xy(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
            Err(Error::DegenerateContour)
        ));
        // bow tie
        assert!(Contour::from_xy(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn normalization_is_ccw_with_canonical_start() {
        let cw = Contour::from_xy(&[[1.0, 1.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(cw.signed_area() > 0.0);
        assert_eq!(cw.points()[0], Vec2::new(0.0, 0.0));
        let again = Contour::new(cw.points().to_vec()).unwrap();
        assert_eq!(again, cw);
    }

    #[test]
    fn circle_size_is_radius() {
        let c = circle(10.0, 256);
        assert!((c.size().unwrap() - 10.0).abs() < 0.01);
    }

    #[test]
    fn square_size_matches_boundary_integral() {
        // Oracle: dense midpoint-rule integration of the distance along one
        // half-edge of a side-2 square (the other seven half-edges are congruent).
        let n = 200_000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64;
                (1.0 + x * x).sqrt()
            })
            .sum::<f64>()
            / n as f64;
        let s = square(-1.0, -1.0, 2.0).size().unwrap();
        assert!((s - oracle).abs() < 1e-4, "{s} vs {oracle}");
    }

    #[test]
    fn resample_square_hits_corners() {
        let c = square(0.0, 0.0, 4.0);
        let r = c.resample_uniform(16).unwrap();
        for corner in c.points() {
            let d = r
                .points()
                .iter()
                .map(|p| p.distance(*corner))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1.0 + 1e-9);
        }
    }

    #[test]
    fn resample_arc_step_is_constant() {
        let c = Contour::from_xy(&[[0.0, 0.0], [5.0, 0.0], [7.0, 3.0], [1.0, 4.0]]).unwrap();
        let n = 100;
        let r = c.resample_uniform(n).unwrap();
        let step = c.perimeter() / n as f64;
        // consecutive samples on the same edge are exactly one step apart
        let same_edge_steps: Vec<f64> = r
            .points()
            .windows(2)
            .map(|w| w[0].distance(w[1]))
            .filter(|d| (d - step).abs() < step * 0.2)
            .collect();
        assert!(same_edge_steps.len() > n / 2);
        assert!(same_edge_steps
            .iter()
            .filter(|d| (**d - step).abs() / step < 1e-6)
            .count()
            > n / 2);
    }

    #[test]
    fn resampled_circle_stays_on_circle() {
        let c = circle(20.0, 64);
        let r = c.resample_uniform(128).unwrap();
        for p in r.points() {
            assert!((p.norm() - 20.0).abs() < 0.005 * 20.0);
        }
    }

    #[test]
    fn overlap_cases() {
        let a = square(0.0, 0.0, 1.0);
        assert!(!interiors_overlap(&a, &square(3.0, 0.0, 1.0)));
        assert!(interiors_overlap(&a, &square(0.0, 0.0, 1.0)));
        assert!(!interiors_overlap(&a, &square(1.0, 0.0, 1.0)));
        assert!(!interiors_overlap(&a, &square(1.0, 1.0, 1.0)));
        assert!(interiors_overlap(&a, &square(0.5, 0.5, 1.0)));
        // nested
        assert!(interiors_overlap(&square(-5.0, -5.0, 10.0), &a));
    }

    #[test]
    fn triangulation_covers_nonconvex_polygon() {
        // L shape, area 3
        let l = Contour::from_xy(&[
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ])
        .unwrap();
        let tris = triangulate(l.points());
        let total: f64 = tris.iter().map(|t| signed_area(t)).sum();
        assert!((total - 3.0).abs() < 1e-12);
        assert!((intersection_area(&l, &l) - 3.0).abs() < 1e-9);
        // square in the notch touches but does not overlap
        assert!(!interiors_overlap(&l, &square(1.0, 1.0, 1.0)));
    }
}
