//! Ranking merge, normalized recall (R_norm) and the retrieval experiment
//! runner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::approx::{retrieve, MatchResult, TextureStats};
use crate::config::MatchConfig;
use crate::error::{Error, Result};
use crate::model::{CompositeDescription, SegmentedImage};

/// Scores closer than this share a system tier.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// Tiers of image ids, best first. Images in no tier are unranked.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct Ranking {
    tiers: Vec<BTreeSet<String>>,
}

impl TryFrom<Vec<Vec<String>>> for Ranking {
    type Error = Error;

    fn try_from(tiers: Vec<Vec<String>>) -> Result<Self> {
        Ranking::new(tiers)
    }
}

impl From<Ranking> for Vec<Vec<String>> {
    fn from(r: Ranking) -> Self {
        r.tiers.into_iter().map(|t| t.into_iter().collect()).collect()
    }
}

impl Ranking {
    /// Rejects an image listed twice. Empty tiers are kept so tier numbers
    /// stay as given, except at the end.
    pub fn new<I, T, S>(tiers: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for tier in tiers {
            let mut set = BTreeSet::new();
            for id in tier {
                let id = id.into();
                if !seen.insert(id.clone()) {
                    return Err(Error::InvalidParameter(format!("image `{id}` ranked twice")));
                }
                set.insert(id);
            }
            out.push(set);
        }
        while out.last().is_some_and(BTreeSet::is_empty) {
            out.pop();
        }
        Ok(Ranking { tiers: out })
    }

    pub fn tiers(&self) -> &[BTreeSet<String>] {
        &self.tiers
    }

    /// 1-based tier of `id`.
    pub fn tier_of(&self, id: &str) -> Option<usize> {
        self.tiers.iter().position(|t| t.contains(id)).map(|i| i + 1)
    }

    pub fn ranked(&self) -> impl Iterator<Item = &String> {
        self.tiers.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.tiers.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reversed(&self) -> Ranking {
        let mut tiers: Vec<_> = self.tiers.iter().filter(|t| !t.is_empty()).cloned().collect();
        tiers.reverse();
        Ranking { tiers }
    }

    /// Score-ordered tiers from retrieval output (best first). Consecutive
    /// scores within [`TIE_TOLERANCE`] of a tier's first score share it.
    pub fn from_scores(scored: &[(String, f64)]) -> Ranking {
        let mut sorted: Vec<&(String, f64)> = scored.iter().collect();
        sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tiers: Vec<BTreeSet<String>> = Vec::new();
        let mut head = f64::NAN;
        for (id, s) in sorted {
            if tiers.is_empty() || (head - s).abs() >= TIE_TOLERANCE {
                tiers.push(BTreeSet::new());
                head = *s;
            }
            tiers.last_mut().expect("tier").insert(id.clone());
        }
        Ranking { tiers }
    }
}

/// Final tier of each image is its worst tier across judges; an image some
/// judge left unranked is withdrawn.
pub fn merge_user_rankings(rankings: &[Ranking]) -> Ranking {
    let Some((first, rest)) = rankings.split_first() else {
        return Ranking::default();
    };
    let mut tiers: Vec<BTreeSet<String>> = Vec::new();
    for id in first.ranked() {
        let mut worst = first.tier_of(id).expect("ranked");
        let mut kept = true;
        for r in rest {
            match r.tier_of(id) {
                Some(t) => worst = worst.max(t),
                None => {
                    kept = false;
                    break;
                }
            }
        }
        if kept {
            if tiers.len() < worst {
                tiers.resize(worst, BTreeSet::new());
            }
            tiers[worst - 1].insert(id.clone());
        }
    }
    Ranking { tiers }
}

/// Pair counts behind R_norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub agree: usize,
    pub oppose: usize,
    pub max: usize,
}

/// Counts user strict-preference pairs and how the system orders them.
/// Images the user left unranked are ignored; images the system left
/// unranked share an implicit last system tier.
pub fn pair_counts(sys: &Ranking, usr: &Ranking) -> PairCounts {
    let sys_last = sys.tiers.len() + 1;
    let entries: Vec<(usize, usize)> = usr
        .tiers
        .iter()
        .enumerate()
        .flat_map(|(t, ids)| ids.iter().map(move |id| (t, id)))
        .map(|(t, id)| (t, sys.tier_of(id).unwrap_or(sys_last)))
        .collect();
    // Sweep user tiers in order; for each image, compare with all images in
    // strictly better user tiers via a histogram of their system tiers.
    let mut hist = vec![0usize; sys_last + 1];
    let mut prefix_better = 0usize;
    let mut counts = PairCounts {
        agree: 0,
        oppose: 0,
        max: 0,
    };
    let mut i = 0;
    while i < entries.len() {
        let tier = entries[i].0;
        let mut j = i;
        while j < entries.len() && entries[j].0 == tier {
            j += 1;
        }
        for &(_, s) in &entries[i..j] {
            counts.max += prefix_better;
            // better-by-user images the system put ahead: system tier < s
            counts.agree += hist[..s].iter().sum::<usize>();
            counts.oppose += hist[s + 1..].iter().sum::<usize>();
        }
        for &(_, s) in &entries[i..j] {
            hist[s] += 1;
        }
        prefix_better += j - i;
        i = j;
    }
    counts
}

/// Normalized recall of `sys` against the user ranking `usr`.
pub fn rnorm(sys: &Ranking, usr: &Ranking) -> Result<f64> {
    let c = pair_counts(sys, usr);
    if c.max == 0 {
        return Err(Error::NoPreferencePairs);
    }
    Ok(0.5 * (1.0 + (c.agree as f64 - c.oppose as f64) / c.max as f64))
}

/// Gold rankings by query id, from `{query: [[tier 1 ids], ...]}`.
pub fn parse_gold(json: &[u8]) -> Result<BTreeMap<String, Ranking>> {
    serde_json::from_slice(json).map_err(|e| Error::Parse(format!("gold rankings: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub query: String,
    /// First gold tier-1 image, the image the query was drawn from.
    pub image: String,
    pub rnorm: f64,
    pub retrieved: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub queries: Vec<QueryReport>,
    pub mean_rnorm: Option<f64>,
    pub skipped: Vec<String>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Aligned table: query, image, R_norm, then the average.
    pub fn to_table(&self) -> String {
        let qw = self
            .queries
            .iter()
            .map(|q| q.query.len())
            .chain(["query".len(), "average".len()])
            .max()
            .unwrap_or(0);
        let iw = self
            .queries
            .iter()
            .map(|q| q.image.len())
            .chain(["image".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{:<qw$}  {:<iw$}  {:>6}", "query", "image", "R_norm");
        for q in &self.queries {
            let _ = writeln!(out, "{:<qw$}  {:<iw$}  {:>6.4}", q.query, q.image, q.rnorm);
        }
        match self.mean_rnorm {
            Some(m) => {
                let _ = writeln!(out, "{:<qw$}  {:<iw$}  {:>6.4}", "average", "", m);
            }
            None => {
                let _ = writeln!(out, "{:<qw$}  {:<iw$}  {:>6}", "average", "", "-");
            }
        }
        for s in &self.skipped {
            let _ = writeln!(out, "skipped: {s}");
        }
        out
    }
}

/// System ranking for one query: above-threshold results, ties grouped.
pub fn system_ranking(results: &[(String, MatchResult)]) -> Ranking {
    let scored: Vec<(String, f64)> = results.iter().map(|(id, r)| (id.clone(), r.score)).collect();
    Ranking::from_scores(&scored)
}

/// Retrieves every query against `images` and scores the result against the
/// gold ranking. Queries without gold, or whose gold states no preference,
/// are skipped with a warning.
pub fn run_experiment<'a>(
    queries: &[CompositeDescription],
    images: impl IntoIterator<Item = &'a SegmentedImage> + Clone,
    gold: &BTreeMap<String, Ranking>,
    cfg: &MatchConfig,
    stats: &TextureStats,
) -> ExperimentReport {
    let mut report = ExperimentReport::default();
    for q in queries {
        let Some(usr) = gold.get(&q.id) else {
            log::warn!("no gold ranking for query `{}`; skipped", q.id);
            report.skipped.push(q.id.clone());
            continue;
        };
        let results = retrieve(q, images.clone(), cfg, stats);
        let sys = system_ranking(&results);
        match rnorm(&sys, usr) {
            Ok(v) => report.queries.push(QueryReport {
                query: q.id.clone(),
                image: usr.tiers.first().and_then(|t| t.first()).cloned().unwrap_or_default(),
                rnorm: v,
                retrieved: results.len(),
            }),
            Err(e) => {
                log::warn!("query `{}`: {e}; skipped", q.id);
                report.skipped.push(q.id.clone());
            }
        }
    }
    if !report.queries.is_empty() {
        report.mean_rnorm =
            Some(report.queries.iter().map(|q| q.rnorm).sum::<f64>() / report.queries.len() as f64);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(tiers: &[&[&str]]) -> Ranking {
        Ranking::new(tiers.iter().map(|t| t.iter().copied())).unwrap()
    }

    #[test]
    fn table_one_merge() {
        let judges = [
            r(&[&["1"], &["44", "88"], &["2", "3", "68", "80"], &["26"], &["24"]]),
            r(&[&["1"], &["44", "88"], &["3", "68", "80"], &["2", "26"]]),
            r(&[&["1"], &["44", "88"], &["3", "68", "80"], &["2", "26"]]),
            r(&[&["1"], &["44", "88"], &["2", "3", "68", "80"], &["26"], &["24"]]),
            r(&[&["1"], &["44", "88"], &["2", "3", "68", "80"], &["24", "26"]]),
        ];
        let merged = merge_user_rankings(&judges);
        assert_eq!(merged.tier_of("2"), Some(4));
        assert_eq!(merged.tier_of("24"), None);
        assert_eq!(merged, r(&[&["1"], &["44", "88"], &["3", "68", "80"], &["2", "26"]]));
    }

    #[test]
    fn rnorm_extremes_and_ties() {
        let usr = r(&[&["a"], &["b", "c"], &["d"]]);
        assert_eq!(rnorm(&usr, &usr).unwrap(), 1.0);
        assert_eq!(rnorm(&usr.reversed(), &usr).unwrap(), 0.0);
        // all tied in the system: nothing agrees or opposes
        assert_eq!(rnorm(&r(&[&["a", "b", "c", "d"]]), &usr).unwrap(), 0.5);
        // system-unranked images sit in an implicit last tier
        assert_eq!(rnorm(&r(&[&["a"]]), &usr).unwrap(), 0.5 * (1.0 + 3.0 / 5.0));
        assert!(matches!(rnorm(&usr, &r(&[&["a", "b"]])), Err(Error::NoPreferencePairs)));
        assert!(Ranking::new([["a"], ["a"]]).is_err());
    }

    #[test]
    fn system_ties_group_within_tolerance() {
        let s = Ranking::from_scores(&[
            ("x".into(), 0.9),
            ("y".into(), 0.9 + 5e-7),
            ("z".into(), 0.8),
        ]);
        assert_eq!(s, r(&[&["x", "y"], &["z"]]));
    }

    #[test]
    fn gold_file_and_table() {
        let gold = parse_gold(br#"{"q1": [["a"], ["b", "c"]]}"#).unwrap();
        assert_eq!(gold["q1"].tier_of("c"), Some(2));
        assert!(parse_gold(br#"{"q1": [["a"], ["a"]]}"#).is_err());
        let report = ExperimentReport {
            queries: vec![QueryReport {
                query: "q1".into(),
                image: "a".into(),
                rnorm: 0.875,
                retrieved: 3,
            }],
            mean_rnorm: Some(0.875),
            skipped: vec![],
        };
        let table = report.to_table();
        assert!(table.contains("q1       a      0.8750"), "{table}");
        assert!(table.lines().last().unwrap().starts_with("average"));
    }

    #[test]
    fn empty_query_set_gives_empty_report() {
        let rep = run_experiment(&[], std::iter::empty(), &BTreeMap::new(), &MatchConfig::default(), &TextureStats::default());
        assert_eq!(rep, ExperimentReport::default());
    }
}
