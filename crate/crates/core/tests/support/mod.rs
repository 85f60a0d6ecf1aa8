//! Random instance generators and brute-force reference implementations
//! shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shapedl::approx::TextureStats;
use shapedl::config::MatchConfig;
use shapedl::eval::Ranking;
use shapedl::features::{orientation_info, phi, sim_ss, ColorRGB, TextureVec, TEXTURE_LEN};
use shapedl::geometry::{Contour, Transform, Vec2};
use shapedl::model::{BasicShape, CompositeDescription, Region, SegmentedImage, ShapeComponent};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const COLORS: [ColorRGB; 4] = [
    ColorRGB::from_u8(220, 30, 30),
    ColorRGB::from_u8(30, 160, 60),
    ColorRGB::from_u8(40, 60, 210),
    ColorRGB::from_u8(230, 200, 40),
];

fn wrap_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    a
}

/// Star-shaped polygon with jittered angles and radii in [0.6, 1.4]; almost
/// surely without rotational symmetry.
pub fn random_polygon(rng: &mut ChaCha8Rng, id: &str) -> BasicShape {
    let n = rng.gen_range(5..=9);
    let step = 2.0 * PI / n as f64;
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let t = i as f64 * step + rng.gen_range(-0.3..0.3) * step;
            let r = rng.gen_range(0.6..1.4);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    BasicShape::new(id, Contour::from_xy(&pts).unwrap()).unwrap()
}

pub fn shape_pool(rng: &mut ChaCha8Rng, count: usize) -> Vec<Arc<BasicShape>> {
    (0..count)
        .map(|i| Arc::new(random_polygon(rng, &format!("p{i}"))))
        .collect()
}

fn radius(c: &Contour) -> f64 {
    let o = c.centroid().unwrap();
    c.points().iter().map(|p| p.distance(o)).fold(0.0, f64::max)
}

fn clear_of(c: &Contour, others: &[Contour], gap: f64) -> bool {
    let (o, r) = (c.centroid().unwrap(), radius(c));
    others
        .iter()
        .all(|d| o.distance(d.centroid().unwrap()) > (r + radius(d)) * gap)
}

/// Components with random poses whose bounding circles keep apart.
pub fn random_components(
    rng: &mut ChaCha8Rng,
    n: usize,
    pool: &[Arc<BasicShape>],
    colored: bool,
    spread: f64,
) -> Vec<ShapeComponent> {
    let mut comps: Vec<ShapeComponent> = Vec::new();
    let mut placed: Vec<Contour> = Vec::new();
    while comps.len() < n {
        let shape = pool.choose(rng).unwrap().clone();
        let t = Transform::new(
            rng.gen_range(-spread..spread),
            rng.gen_range(-spread..spread),
            rng.gen_range(-PI..PI),
            rng.gen_range(0.8..2.0),
        )
        .unwrap();
        let color = (colored && rng.gen_bool(0.8)).then(|| *COLORS.choose(rng).unwrap());
        let comp = ShapeComponent::new(shape, t, color, None).unwrap();
        let contour = comp.contour();
        if clear_of(&contour, &placed, 1.15) {
            placed.push(contour);
            comps.push(comp);
        }
    }
    comps
}

pub fn random_description(
    rng: &mut ChaCha8Rng,
    id: &str,
    n: usize,
    pool: &[Arc<BasicShape>],
    colored: bool,
) -> CompositeDescription {
    let spread = 6.0 + 4.0 * n as f64;
    CompositeDescription::new(id, random_components(rng, n, pool, colored, spread)).unwrap()
}

pub fn random_similarity(rng: &mut ChaCha8Rng) -> Transform {
    Transform::new(
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-PI..PI),
        rng.gen_range(0.5..3.0),
    )
    .unwrap()
}

pub fn random_texture(rng: &mut ChaCha8Rng) -> TextureVec {
    let v: Vec<f64> = (0..TEXTURE_LEN).map(|_| rng.gen_range(0.0..5.0)).collect();
    TextureVec::new(&v).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturb {
    Move,
    Rotate,
    Scale,
    Replace,
}

/// Regions of `c` placed by `tau`, optionally with one component disturbed,
/// plus `extra` distractors. `None` when the random placement overlaps.
#[allow(clippy::too_many_arguments)]
pub fn scene(
    rng: &mut ChaCha8Rng,
    id: &str,
    c: &CompositeDescription,
    tau: &Transform,
    perturb: Option<Perturb>,
    extra: usize,
    pool: &[Arc<BasicShape>],
    textured: bool,
) -> Option<SegmentedImage> {
    let victim = rng.gen_range(0..c.len());
    let mut contours = Vec::new();
    let mut colors = Vec::new();
    for (k, comp) in c.components.iter().enumerate() {
        let mut t = tau.compose(&comp.transform);
        let mut shape = comp.shape.clone();
        if Some(k) == Some(victim) {
            match perturb {
                Some(Perturb::Move) => {
                    let d = Vec2::new(1.0, 0.0).rotate(rng.gen_range(-PI..PI)) * (0.8 * comp.size() * tau.s);
                    t = Transform::translation(d.x, d.y).compose(&t);
                }
                Some(Perturb::Rotate) => {
                    let o = t.apply_point(shape.centroid());
                    let spin = Transform::new(0.0, 0.0, rng.gen_range(0.6..1.2) * rng.gen_range(-1.0f64..1.0).signum(), 1.0)
                        .unwrap();
                    t = Transform::translation(o.x, o.y)
                        .compose(&spin)
                        .compose(&Transform::translation(-o.x, -o.y))
                        .compose(&t);
                }
                Some(Perturb::Scale) => {
                    let o = t.apply_point(shape.centroid());
                    let grow = Transform::new(0.0, 0.0, 0.0, 1.5).unwrap();
                    t = Transform::translation(o.x, o.y)
                        .compose(&grow)
                        .compose(&Transform::translation(-o.x, -o.y))
                        .compose(&t);
                }
                Some(Perturb::Replace) => {
                    let others: Vec<&Arc<BasicShape>> = pool.iter().filter(|s| s.id() != shape.id()).collect();
                    if let Some(s) = others.choose(rng) {
                        shape = (*s).clone();
                    }
                }
                None => {}
            }
        }
        contours.push(t.apply(shape.contour()));
        colors.push(comp.color.unwrap_or(*COLORS.choose(rng).unwrap()));
    }
    for i in 0..contours.len() {
        let others: Vec<Contour> = contours
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, c)| c.clone())
            .collect();
        if !clear_of(&contours[i], &others, 1.02) {
            return None;
        }
    }
    let (lo, hi) = contours
        .iter()
        .map(|c| c.bbox())
        .fold((Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN)), |(a, b), (l, h)| {
            (Vec2::new(a.x.min(l.x), a.y.min(l.y)), Vec2::new(b.x.max(h.x), b.y.max(h.y)))
        });
    let pad = (hi.x - lo.x).max(hi.y - lo.y) * 0.5 + 10.0;
    let mut tries = 0;
    let mut added = 0;
    while added < extra && tries < 200 {
        tries += 1;
        let t = Transform::new(
            rng.gen_range(lo.x - pad..hi.x + pad),
            rng.gen_range(lo.y - pad..hi.y + pad),
            rng.gen_range(-PI..PI),
            tau.s * rng.gen_range(0.8..2.0),
        )
        .unwrap();
        let contour = t.apply(pool.choose(rng).unwrap().contour());
        if clear_of(&contour, &contours, 1.1) {
            contours.push(contour);
            colors.push(*COLORS.choose(rng).unwrap());
            added += 1;
        }
    }
    // shuffle so region order carries no information
    let mut order: Vec<usize> = (0..contours.len()).collect();
    order.shuffle(rng);
    let regions = order
        .into_iter()
        .map(|i| {
            let tex = textured.then(|| random_texture(rng));
            Region::new(contours[i].clone(), colors[i], tex).unwrap()
        })
        .collect();
    SegmentedImage::new(id, regions, None).ok()
}

pub fn injective_mappings(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for j in 0..m {
            if !cur.contains(&j) {
                cur.push(j);
                go(n, m, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    if n <= m {
        go(n, m, &mut Vec::new(), &mut out);
    }
    out
}

// ---- contour distance, computed independently of the library ----

fn arc_samples(c: &Contour, count: usize) -> Vec<Vec2> {
    let pts = c.points();
    let n = pts.len();
    let lens: Vec<f64> = (0..n).map(|i| pts[i].distance(pts[(i + 1) % n])).collect();
    let total: f64 = lens.iter().sum();
    let mut out = Vec::with_capacity(count);
    let mut edge = 0;
    let mut start = 0.0;
    for s in 0..count {
        let target = total * s as f64 / count as f64;
        while edge < n - 1 && start + lens[edge] < target {
            start += lens[edge];
            edge += 1;
        }
        let f = if lens[edge] > 0.0 { (target - start) / lens[edge] } else { 0.0 };
        let (a, b) = (pts[edge], pts[(edge + 1) % n]);
        out.push(Vec2::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)));
    }
    out
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = Vec2::new(b.x - a.x, b.y - a.y);
    let len2 = ab.x * ab.x + ab.y * ab.y;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.distance(Vec2::new(a.x + t * ab.x, a.y + t * ab.y))
}

fn polyline_distance(p: Vec2, c: &Contour) -> f64 {
    let pts = c.points();
    let n = pts.len();
    (0..n)
        .map(|i| segment_distance(p, pts[i], pts[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

pub fn oracle_contour_distance(a: &Contour, b: &Contour, samples: usize) -> f64 {
    let mean = |from: &Contour, to: &Contour| {
        let s = arc_samples(from, samples);
        s.iter().map(|&p| polyline_distance(p, to)).sum::<f64>() / s.len() as f64
    };
    mean(a, b).max(mean(b, a))
}

fn mean_radius(c: &Contour) -> f64 {
    let o = c.centroid().unwrap();
    let s = arc_samples(c, 512);
    s.iter().map(|p| p.distance(o)).sum::<f64>() / s.len() as f64
}

/// Least-squares similarity taking points `p` to points `v`.
pub fn procrustes(p: &[Vec2], v: &[Vec2]) -> Option<Transform> {
    let n = p.len() as f64;
    let pc = p.iter().fold(Vec2::new(0.0, 0.0), |a, b| a + *b) * (1.0 / n);
    let vc = v.iter().fold(Vec2::new(0.0, 0.0), |a, b| a + *b) * (1.0 / n);
    let (mut re, mut im, mut den) = (0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(v) {
        let (x, y) = (*a - pc, *b - vc);
        // y * conj(x)
        re += y.x * x.x + y.y * x.y;
        im += y.y * x.x - y.x * x.y;
        den += x.x * x.x + x.y * x.y;
    }
    if den <= 1e-18 {
        return None;
    }
    let (ar, ai) = (re / den, im / den);
    let s = (ar * ar + ai * ai).sqrt();
    if s <= 1e-12 {
        return None;
    }
    let theta = ai.atan2(ar);
    let t = vc - pc.rotate(theta) * s;
    Transform::new(t.x, t.y, theta, s).ok()
}

fn placed_contour(tau: &Transform, comp: &ShapeComponent) -> Contour {
    tau.compose(&comp.transform).apply(comp.shape.contour())
}

fn contour_ok(placed: &Contour, target: &Contour, eps: f64) -> bool {
    oracle_contour_distance(placed, target, 256) <= eps * mean_radius(placed)
}

/// Best rotation of a single component onto a region by grid search plus
/// local refinement; returns whether the contours then match.
fn single_alignment(comp: &ShapeComponent, region: &Region, eps: f64) -> bool {
    let base = comp.contour();
    let o = base.centroid().unwrap();
    let scale = mean_radius(region.contour()) / mean_radius(&base);
    let target = region.centroid();
    let place = |theta: f64| {
        let t = Transform::new(0.0, 0.0, theta, scale).unwrap();
        let off = target - t.apply_point(o);
        Transform::new(off.x, off.y, theta, scale).unwrap().apply(&base)
    };
    let mut grid: Vec<(f64, f64)> = (0..720)
        .map(|i| {
            let th = -PI + 2.0 * PI * i as f64 / 720.0;
            (oracle_contour_distance(&place(th), region.contour(), 48), th)
        })
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    grid.iter().take(4).any(|&(_, th0)| {
        let (mut lo, mut hi) = (th0 - 0.01, th0 + 0.01);
        for _ in 0..40 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if oracle_contour_distance(&place(a), region.contour(), 96)
                < oracle_contour_distance(&place(b), region.contour(), 96)
            {
                hi = b;
            } else {
                lo = a;
            }
        }
        contour_ok(&place(0.5 * (lo + hi)), region.contour(), eps)
    })
}

/// Exhaustive exact recognition: some injective mapping admits one
/// similarity transform (fitted to the centroids) under which every
/// component contour matches its region.
pub fn exact_oracle(c: &CompositeDescription, img: &SegmentedImage, eps: f64) -> Option<Vec<usize>> {
    let n = c.len();
    let regions = img.regions();
    for j in injective_mappings(n, regions.len()) {
        let ok = if n == 1 {
            single_alignment(&c.components[0], &regions[j[0]], eps)
        } else {
            let p: Vec<Vec2> = c.components.iter().map(|k| k.centroid()).collect();
            let v: Vec<Vec2> = j.iter().map(|&x| regions[x].centroid()).collect();
            match procrustes(&p, &v) {
                None => false,
                Some(tau) => c
                    .components
                    .iter()
                    .zip(&j)
                    .all(|(comp, &x)| contour_ok(&placed_contour(&tau, comp), regions[x].contour(), eps)),
            }
        };
        if ok {
            return Some(j);
        }
    }
    None
}

/// Whether every component, placed by `tau`, matches its mapped region.
pub fn mapping_valid(c: &CompositeDescription, img: &SegmentedImage, j: &[usize], tau: &Transform, eps: f64) -> bool {
    c.components
        .iter()
        .zip(j)
        .all(|(comp, &x)| contour_ok(&placed_contour(tau, comp), img.regions()[x].contour(), eps * 1.5))
}

// ---- weighted similarity, computed mapping by mapping ----

fn angle_deg(v: Vec2) -> f64 {
    v.y.atan2(v.x).to_degrees()
}

fn usable(v: Vec2, scale: f64) -> bool {
    v.norm() > 1e-12 * scale.max(1.0)
}

/// Six group similarities and weighted score of one mapping.
pub fn oracle_score(
    c: &CompositeDescription,
    img: &SegmentedImage,
    j: &[usize],
    cfg: &MatchConfig,
    stats: &TextureStats,
) -> (f64, [f64; 6]) {
    let n = c.len();
    let p: Vec<Vec2> = c.components.iter().map(|k| k.centroid()).collect();
    let v: Vec<Vec2> = j.iter().map(|&x| img.regions()[x].centroid()).collect();

    let mut spatial: f64 = 0.0;
    for k in 0..n {
        for i in 0..n {
            for h in (i + 1)..n {
                if i == k || h == k {
                    continue;
                }
                let (u, w) = (p[i] - p[k], p[h] - p[k]);
                let (u2, w2) = (v[i] - v[k], v[h] - v[k]);
                let sp = p[k].norm() + u.norm() + w.norm();
                let sv = v[k].norm() + u2.norm() + w2.norm();
                if !(usable(u, sp) && usable(w, sp) && usable(u2, sv) && usable(w2, sv)) {
                    continue;
                }
                let a = wrap_deg(angle_deg(w) - angle_deg(u));
                let b = wrap_deg(angle_deg(w2) - angle_deg(u2));
                spatial = spatial.max(wrap_deg(a - b).abs());
            }
        }
    }

    let mut rotation: f64 = 0.0;
    if n >= 2 {
        for k in 0..n {
            let region = &img.regions()[j[k]];
            let info = orientation_info(
                region.descriptor(),
                c.components[k].shape.descriptor(),
                &cfg.sensitivity.orientation(),
            );
            if info.is_circularly_symmetric {
                continue;
            }
            let theta = c.components[k].transform.theta.to_degrees();
            let pairs: Vec<(f64, f64)> = (0..n)
                .filter(|&i| i != k)
                .filter(|&i| {
                    let (u, w) = (p[i] - p[k], v[i] - v[k]);
                    usable(u, p[k].norm() + u.norm()) && usable(w, v[k].norm() + w.norm())
                })
                .map(|i| (angle_deg(p[i] - p[k]), angle_deg(v[i] - v[k])))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            let mut best = f64::INFINITY;
            for phase in &info.phases {
                let ph = phase.to_degrees();
                let worst = pairs
                    .iter()
                    .map(|&(a, b)| wrap_deg((a - theta) - (b - ph)).abs())
                    .fold(0.0, f64::max);
                best = best.min(worst);
            }
            if best.is_finite() {
                rotation = rotation.max(best);
            }
        }
    }

    let mut scale: f64 = 0.0;
    for k in 0..n {
        let cs = c.components[k].size();
        let rs = img.regions()[j[k]].size();
        for i in 0..n {
            if i == k {
                continue;
            }
            let d = p[k].distance(p[i]);
            let big = v[k].distance(v[i]);
            if !(d > 1e-12 * cs && big > 1e-12 * rs) {
                continue;
            }
            let (a, b) = (rs / big, cs / d);
            scale = scale.max((1.0 - a.min(b) / a.max(b)).abs());
        }
    }

    let (mut shape, mut color, mut texture): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (k, &x) in j.iter().enumerate() {
        let comp = &c.components[k];
        let r = &img.regions()[x];
        let s = sim_ss(comp.shape.descriptor(), r.descriptor()).unwrap_or(0.0);
        shape = shape.max((1.0 - s).max(0.0));
        if let Some(col) = comp.color {
            let d = ((col.r - r.color.r).powi(2) + (col.g - r.color.g).powi(2) + (col.b - r.color.b).powi(2)).sqrt();
            color = color.max(d);
        }
        if let (Some(a), Some(b)) = (&comp.texture, &r.texture) {
            let d: f64 = a
                .values()
                .iter()
                .zip(b.values())
                .zip(&stats.std)
                .map(|((x, y), s)| (x - y).abs() / s)
                .sum::<f64>()
                / TEXTURE_LEN as f64;
            texture = texture.max(d);
        }
    }

    let s = &cfg.sensitivity;
    let f = |x: f64, sens: shapedl::config::Sensitivity| phi(x, sens.fx, sens.fy).unwrap();
    let sims = [
        f(spatial, s.spatial),
        f(shape, s.shape),
        f(color, s.color),
        f(rotation, s.rotation),
        f(scale, s.scale),
        f(texture, s.texture),
    ];
    let w = cfg.weights.as_array();
    let score = (0..6).map(|i| w[i] * sims[i]).sum::<f64>().clamp(0.0, 1.0);
    (score, sims)
}

/// Best admissible mapping over all injective mappings; ties to the
/// lexicographically smallest.
pub fn approx_oracle(
    c: &CompositeDescription,
    img: &SegmentedImage,
    cfg: &MatchConfig,
    stats: &TextureStats,
) -> Option<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for j in injective_mappings(c.len(), img.len()) {
        let (score, sims) = oracle_score(c, img, &j, cfg, stats);
        if sims[0] < cfg.sensitivity.spatial_similarity_threshold
            || score < cfg.sensitivity.global_similarity_threshold
        {
            continue;
        }
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, j));
        }
    }
    best
}

// ---- ranking pairs ----

/// S+, S− and S+max by enumerating every pair of user-ranked images.
pub fn pair_oracle(sys: &Ranking, usr: &Ranking) -> (usize, usize, usize) {
    let ids: Vec<&String> = usr.ranked().collect();
    let sys_tier = |id: &str| sys.tier_of(id).unwrap_or(usize::MAX);
    let (mut plus, mut minus, mut max) = (0, 0, 0);
    for a in &ids {
        for b in &ids {
            let (ua, ub) = (usr.tier_of(a).unwrap(), usr.tier_of(b).unwrap());
            if ua >= ub {
                continue;
            }
            max += 1;
            let (sa, sb) = (sys_tier(a), sys_tier(b));
            if sa < sb {
                plus += 1;
            } else if sa > sb {
                minus += 1;
            }
        }
    }
    (plus, minus, max)
}

pub fn rnorm_oracle(sys: &Ranking, usr: &Ranking) -> Option<f64> {
    let (plus, minus, max) = pair_oracle(sys, usr);
    (max > 0).then(|| 0.5 * (1.0 + (plus as f64 - minus as f64) / max as f64))
}

/// Random tiers over `universe`; each image unranked with probability
/// `drop`.
pub fn random_ranking(rng: &mut ChaCha8Rng, universe: &[String], drop: f64) -> Ranking {
    let tiers = rng.gen_range(1..=5);
    let mut out: Vec<BTreeSet<String>> = vec![BTreeSet::new(); tiers];
    for id in universe {
        if rng.gen_bool(drop) {
            continue;
        }
        out[rng.gen_range(0..tiers)].insert(id.clone());
    }
    Ranking::new(out).unwrap()
}
