//! Approximate recognition: fuzzy scoring of component-to-region mappings by
//! six weighted feature similarities, and ranked retrieval.
//!
//! For a mapping `j` the pose differences are
//! - spatial: largest change of the angle subtended at a component centroid
//!   by two other components (degrees),
//! - rotation: largest change of the angle between a component's reference
//!   direction and the direction to another component (degrees), taking the
//!   best of the region's symmetric orientations,
//! - scale: largest relative change of `size / centroid distance`,
//!
//! and the per-pair feature distances are `1 - sim_ss` for shape, RGB
//! distance for color and standardized mean absolute difference for texture.
//! Each feature keeps the worst value over all components and is mapped
//! through Φ; the score is the weighted sum of the six similarities.
//!
//! Every group value is a maximum over terms involving assigned components,
//! so the score of a partial mapping bounds the score of all its extensions.
//! The search uses that bound to find the exact best mapping.

use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use crate::config::{MatchConfig, SensitivityConfig};
use crate::features::{orientation_info, sim_ss, OrientationInfo, TextureVec, TEXTURE_LEN};
use crate::geometry::{circular_diff_deg, Vec2};
use crate::model::{CompositeDescription, SegmentedImage};

/// Upper bound on enumerated candidate mappings.
pub const MAX_CANDIDATE_MAPPINGS: usize = 10_000;
/// Regions kept per component when none passes the descriptor threshold.
pub const RELAXED_CANDIDATES: usize = 3;

/// Per-component standard deviations used to standardize texture
/// differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureStats {
    pub std: Vec<f64>,
}

impl Default for TextureStats {
    fn default() -> Self {
        Self {
            std: vec![1.0; TEXTURE_LEN],
        }
    }
}

impl TextureStats {
    /// Population standard deviation of each component over all region
    /// textures; components without spread fall back to 1.
    pub fn from_images<'a>(images: impl IntoIterator<Item = &'a SegmentedImage>) -> Self {
        let mut n = 0usize;
        let mut sum = [0.0; TEXTURE_LEN];
        let mut sq = [0.0; TEXTURE_LEN];
        for img in images {
            for r in img.regions() {
                if let Some(t) = &r.texture {
                    n += 1;
                    for (i, v) in t.values().iter().enumerate() {
                        sum[i] += v;
                        sq[i] += v * v;
                    }
                }
            }
        }
        if n == 0 {
            return Self::default();
        }
        let std = (0..TEXTURE_LEN)
            .map(|i| {
                let mean = sum[i] / n as f64;
                let var = (sq[i] / n as f64 - mean * mean).max(0.0);
                let s = var.sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { std }
    }

    pub fn difference(&self, a: &TextureVec, b: &TextureVec) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .zip(&self.std)
            .map(|((x, y), s)| (x - y).abs() / s)
            .sum::<f64>()
            / TEXTURE_LEN as f64
    }
}

/// The six group similarities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub spatial: f64,
    pub shape: f64,
    pub color: f64,
    pub rotation: f64,
    pub scale: f64,
    pub texture: f64,
}

impl Breakdown {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.spatial,
            self.shape,
            self.color,
            self.rotation,
            self.scale,
            self.texture,
        ]
    }
}

/// Worst-of-group distances before Φ. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Deltas {
    pub spatial: f64,
    pub rotation: f64,
    pub scale: f64,
    pub shape: f64,
    pub color: f64,
    pub texture: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub mapping: Vec<usize>,
    pub score: f64,
    pub breakdown: Breakdown,
    pub deltas: Deltas,
}

/// Per-image cache of pairwise component/region quantities.
struct PairTable<'a> {
    c: &'a CompositeDescription,
    img: &'a SegmentedImage,
    cfg: &'a SensitivityConfig,
    m: usize,
    sim: Vec<f64>,
    color: Vec<f64>,
    texture: Vec<f64>,
    orient: Vec<OnceCell<OrientationInfo>>,
}

impl<'a> PairTable<'a> {
    fn new(
        c: &'a CompositeDescription,
        img: &'a SegmentedImage,
        cfg: &'a SensitivityConfig,
        stats: &TextureStats,
    ) -> Self {
        let n = c.len();
        let m = img.len();
        let mut sim = Vec::with_capacity(n * m);
        let mut color = Vec::with_capacity(n * m);
        let mut texture = Vec::with_capacity(n * m);
        for comp in &c.components {
            for r in img.regions() {
                sim.push(sim_ss(comp.shape.descriptor(), r.descriptor()).unwrap_or(0.0));
                color.push(comp.color.map_or(0.0, |col| col.distance(&r.color)));
                texture.push(match (&comp.texture, &r.texture) {
                    (Some(a), Some(b)) => stats.difference(a, b),
                    _ => 0.0,
                });
            }
        }
        Self {
            c,
            img,
            cfg,
            m,
            sim,
            color,
            texture,
            orient: (0..n * m).map(|_| OnceCell::new()).collect(),
        }
    }

    fn sim(&self, k: usize, j: usize) -> f64 {
        self.sim[k * self.m + j]
    }

    fn orientation(&self, k: usize, j: usize) -> &OrientationInfo {
        self.orient[k * self.m + j].get_or_init(|| {
            orientation_info(
                self.img.regions()[j].descriptor(),
                self.c.components[k].shape.descriptor(),
                &self.cfg.orientation(),
            )
        })
    }

    fn p(&self, k: usize) -> Vec2 {
        self.c.components[k].centroid()
    }

    fn v(&self, j: usize) -> Vec2 {
        self.img.regions()[j].centroid()
    }

    /// Deltas over the components assigned in `mapping` (a prefix of the
    /// component list).
    fn deltas(&self, mapping: &[usize]) -> Deltas {
        let mut d = Deltas {
            spatial: spatial(self, mapping),
            rotation: rotation(self, mapping),
            scale: scale(self, mapping),
            ..Deltas::default()
        };
        for (k, &j) in mapping.iter().enumerate() {
            let idx = k * self.m + j;
            d.shape = d.shape.max((1.0 - self.sim[idx]).max(0.0));
            d.color = d.color.max(self.color[idx]);
            d.texture = d.texture.max(self.texture[idx]);
        }
        d
    }

    fn evaluate(&self, mapping: &[usize], weights: &crate::config::Weights) -> MatchResult {
        let deltas = self.deltas(mapping);
        let cfg = self.cfg;
        let breakdown = Breakdown {
            spatial: cfg.spatial.sim(deltas.spatial),
            shape: cfg.shape.sim(deltas.shape),
            color: cfg.color.sim(deltas.color),
            rotation: cfg.rotation.sim(deltas.rotation),
            scale: cfg.scale.sim(deltas.scale),
            texture: cfg.texture.sim(deltas.texture),
        };
        let score = weights
            .as_array()
            .iter()
            .zip(breakdown.as_array())
            .map(|(w, s)| w * s)
            .sum::<f64>()
            .clamp(0.0, 1.0);
        MatchResult {
            mapping: mapping.to_vec(),
            score,
            breakdown,
            deltas,
        }
    }
}

fn nonzero(v: Vec2, scale: f64) -> bool {
    v.norm() > 1e-12 * scale.max(1.0)
}

fn signed_angle_deg(u: Vec2, w: Vec2) -> f64 {
    u.cross(w).atan2(u.dot(w)).to_degrees()
}

fn spatial(t: &PairTable, mapping: &[usize]) -> f64 {
    let n = mapping.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let (pk, vk) = (t.p(k), t.v(mapping[k]));
        for i in 0..n {
            for h in (i + 1)..n {
                if i == k || h == k {
                    continue;
                }
                let (u, w) = (t.p(i) - pk, t.p(h) - pk);
                let (u2, w2) = (t.v(mapping[i]) - vk, t.v(mapping[h]) - vk);
                let scale_p = pk.norm() + u.norm() + w.norm();
                let scale_v = vk.norm() + u2.norm() + w2.norm();
                if !(nonzero(u, scale_p) && nonzero(w, scale_p) && nonzero(u2, scale_v) && nonzero(w2, scale_v)) {
                    continue;
                }
                let diff = circular_diff_deg(signed_angle_deg(u, w), signed_angle_deg(u2, w2));
                worst = worst.max(diff);
            }
        }
    }
    worst
}

fn rotation(t: &PairTable, mapping: &[usize]) -> f64 {
    let n = mapping.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        if n < 2 {
            break;
        }
        let info = t.orientation(k, mapping[k]);
        if info.is_circularly_symmetric {
            continue;
        }
        let (pk, vk) = (t.p(k), t.v(mapping[k]));
        let theta_k = t.c.components[k].transform.theta;
        let partners: Vec<(f64, f64)> = (0..n)
            .filter(|&i| i != k)
            .filter_map(|i| {
                let u = t.p(i) - pk;
                let w = t.v(mapping[i]) - vk;
                (nonzero(u, pk.norm() + u.norm()) && nonzero(w, vk.norm() + w.norm()))
                    .then(|| (u.angle(), w.angle()))
            })
            .collect();
        if partners.is_empty() {
            continue;
        }
        let best = info
            .phases
            .iter()
            .map(|&phase| {
                partners
                    .iter()
                    .map(|&(a_desc, a_img)| {
                        circular_diff_deg((a_desc - theta_k).to_degrees(), (a_img - phase).to_degrees())
                    })
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            worst = worst.max(best);
        }
    }
    worst
}

fn scale(t: &PairTable, mapping: &[usize]) -> f64 {
    let n = mapping.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let comp_size = t.c.components[k].size();
        let region_size = t.img.regions()[mapping[k]].size();
        for i in 0..n {
            if i == k {
                continue;
            }
            let d = t.p(k).distance(t.p(i));
            let big_d = t.v(mapping[k]).distance(t.v(mapping[i]));
            if !(d > 1e-12 * comp_size && big_d > 1e-12 * region_size) {
                continue;
            }
            let (a, b) = (region_size / big_d, comp_size / d);
            worst = worst.max((1.0 - a.min(b) / a.max(b)).abs());
        }
    }
    worst
}

fn check_mapping(c: &CompositeDescription, img: &SegmentedImage, j: &[usize]) {
    assert_eq!(j.len(), c.len(), "mapping must cover every component");
    for (a, &x) in j.iter().enumerate() {
        assert!(x < img.len(), "region index out of range");
        assert!(!j[..a].contains(&x), "mapping must be injective");
    }
}

/// Largest change of subtended angle, in degrees; 0 for two or fewer
/// components.
pub fn delta_spatial(c: &CompositeDescription, img: &SegmentedImage, j: &[usize]) -> f64 {
    check_mapping(c, img, j);
    let cfg = SensitivityConfig::default();
    spatial(&PairTable::new(c, img, &cfg, &TextureStats::default()), j)
}

/// Largest change of relative orientation, in degrees; 0 for a single
/// component.
pub fn delta_rotation(
    c: &CompositeDescription,
    img: &SegmentedImage,
    j: &[usize],
    cfg: &SensitivityConfig,
) -> f64 {
    check_mapping(c, img, j);
    rotation(&PairTable::new(c, img, cfg, &TextureStats::default()), j)
}

/// Largest relative change of size over centroid distance; 0 for a single
/// component.
pub fn delta_scale(c: &CompositeDescription, img: &SegmentedImage, j: &[usize]) -> f64 {
    check_mapping(c, img, j);
    let cfg = SensitivityConfig::default();
    scale(&PairTable::new(c, img, &cfg, &TextureStats::default()), j)
}

/// Scores one mapping, without thresholds.
pub fn score_mapping(
    c: &CompositeDescription,
    img: &SegmentedImage,
    j: &[usize],
    cfg: &MatchConfig,
    stats: &TextureStats,
) -> MatchResult {
    check_mapping(c, img, j);
    PairTable::new(c, img, &cfg.sensitivity, stats).evaluate(j, &cfg.weights)
}

/// The six group similarities of one mapping.
pub fn group_feature_sims(
    c: &CompositeDescription,
    img: &SegmentedImage,
    j: &[usize],
    cfg: &MatchConfig,
    stats: &TextureStats,
) -> Breakdown {
    score_mapping(c, img, j, cfg, stats).breakdown
}

/// Injective mappings over per-component candidate regions, in
/// lexicographic order, at most [`MAX_CANDIDATE_MAPPINGS`].
///
/// Candidates of a component are the regions whose invariant shape
/// similarity reaches the descriptor threshold, or the best
/// [`RELAXED_CANDIDATES`] regions when none does.
pub fn candidate_mappings(
    c: &CompositeDescription,
    img: &SegmentedImage,
    cfg: &SensitivityConfig,
) -> Vec<Vec<usize>> {
    let t = PairTable::new(c, img, cfg, &TextureStats::default());
    candidates_from(&t)
}

fn candidates_from(t: &PairTable) -> Vec<Vec<usize>> {
    let n = t.c.len();
    let m = t.m;
    if n > m {
        return Vec::new();
    }
    let sets: Vec<Vec<usize>> = (0..n)
        .map(|k| {
            let strict: Vec<usize> = (0..m)
                .filter(|&j| t.sim(k, j) >= t.cfg.fourier_descriptors_threshold)
                .collect();
            if !strict.is_empty() {
                return strict;
            }
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| t.sim(k, b).total_cmp(&t.sim(k, a)).then(a.cmp(&b)));
            order.truncate(RELAXED_CANDIDATES.max(1));
            order.sort_unstable();
            order
        })
        .collect();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; m];
    enumerate(&sets, &mut current, &mut used, &mut out);
    out
}

fn enumerate(sets: &[Vec<usize>], current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
    if out.len() >= MAX_CANDIDATE_MAPPINGS {
        return;
    }
    let k = current.len();
    if k == sets.len() {
        out.push(current.clone());
        return;
    }
    for &j in &sets[k] {
        if used[j] {
            continue;
        }
        used[j] = true;
        current.push(j);
        enumerate(sets, current, used, out);
        current.pop();
        used[j] = false;
        if out.len() >= MAX_CANDIDATE_MAPPINGS {
            return;
        }
    }
}

struct Search<'a, 'b> {
    table: &'b PairTable<'a>,
    cfg: &'b MatchConfig,
    best: Option<MatchResult>,
}

impl Search<'_, '_> {
    fn admissible(&self, r: &MatchResult) -> bool {
        let s = &self.cfg.sensitivity;
        r.breakdown.spatial >= s.spatial_similarity_threshold && r.score >= s.global_similarity_threshold
    }

    fn offer(&mut self, r: MatchResult) {
        if !self.admissible(&r) {
            return;
        }
        let better = match &self.best {
            None => true,
            Some(b) => r.score > b.score || (r.score == b.score && r.mapping < b.mapping),
        };
        if better {
            self.best = Some(r);
        }
    }

    fn dfs(&mut self, prefix: &mut Vec<usize>, used: &mut [bool]) {
        let n = self.table.c.len();
        if !prefix.is_empty() {
            let partial = self.table.evaluate(prefix, &self.cfg.weights);
            if !self.admissible(&partial) {
                return;
            }
            if let Some(b) = &self.best {
                if partial.score < b.score {
                    return;
                }
            }
            if prefix.len() == n {
                self.offer(partial);
                return;
            }
        }
        for j in 0..self.table.m {
            if used[j] {
                continue;
            }
            used[j] = true;
            prefix.push(j);
            self.dfs(prefix, used);
            prefix.pop();
            used[j] = false;
        }
    }
}

/// Best mapping of `c` into `img` by weighted score, if it reaches the
/// global threshold. Mappings whose spatial similarity falls below the
/// spatial threshold are discarded; ties go to the lexicographically
/// smallest mapping.
///
/// Candidate mappings give an initial best; a depth-first pass over all
/// injective mappings, pruned by the partial-score bound, then guarantees
/// the result is optimal over every mapping.
pub fn recognize_approx(
    c: &CompositeDescription,
    img: &SegmentedImage,
    cfg: &MatchConfig,
    stats: &TextureStats,
) -> Option<MatchResult> {
    if c.len() > img.len() {
        return None;
    }
    let table = PairTable::new(c, img, &cfg.sensitivity, stats);
    let mut search = Search {
        table: &table,
        cfg,
        best: None,
    };
    for mapping in candidates_from(&table) {
        let r = table.evaluate(&mapping, &cfg.weights);
        search.offer(r);
    }
    let mut prefix = Vec::with_capacity(c.len());
    let mut used = vec![false; img.len()];
    search.dfs(&mut prefix, &mut used);
    search.best
}

/// Images whose best mapping reaches the global threshold, by descending
/// score and then image id.
pub fn retrieve<'a>(
    c: &CompositeDescription,
    images: impl IntoIterator<Item = &'a SegmentedImage>,
    cfg: &MatchConfig,
    stats: &TextureStats,
) -> Vec<(String, MatchResult)> {
    let mut out: Vec<(String, MatchResult)> = images
        .into_iter()
        .filter_map(|img| recognize_approx(c, img, cfg, stats).map(|r| (img.id.clone(), r)))
        .collect();
    sort_ranked(&mut out);
    out
}

pub(crate) fn sort_ranked(v: &mut [(String, MatchResult)]) {
    v.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then_with(|| a.0.cmp(&b.0)));
}
