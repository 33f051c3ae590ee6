//! Conflict, distortion, rank-displacement and timing measurements.
//!
//! Every report renders as tab-separated lines so runs can be diffed.
//! Distortion and displacement stand in for downstream retrieval quality,
//! which needs a trained generative model and is not measured here.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::alloc::CandidateProvider;
use crate::assign::{AssignReport, Strategy};
use crate::error::{Error, Result};
use crate::quantizer::reconstruct;
use crate::types::{sq_dist, EmbeddingSet, SemanticId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictStats {
    pub n: usize,
    /// Embeddings whose id is shared with at least one other embedding.
    pub conflicting: usize,
    /// Number of ids shared by two or more embeddings.
    pub groups: usize,
    pub proportion: f64,
}

impl ConflictStats {
    pub fn to_tsv(&self) -> String {
        format!(
            "n\tconflicting\tgroups\tproportion\n{}\t{}\t{}\t{:.6}\n",
            self.n, self.conflicting, self.groups, self.proportion
        )
    }
}

/// Groups the semantic ids of a report (suffixes ignored) by equality.
pub fn conflict_stats(report: &AssignReport) -> ConflictStats {
    conflict_stats_of(report.assignments.iter().flatten().map(|a| &a.id))
}

pub fn conflict_stats_of<'a>(ids: impl IntoIterator<Item = &'a SemanticId>) -> ConflictStats {
    let mut counts: HashMap<&SemanticId, usize> = HashMap::new();
    let mut n = 0;
    for id in ids {
        *counts.entry(id).or_default() += 1;
        n += 1;
    }
    let (conflicting, groups) = counts
        .values()
        .filter(|&&c| c > 1)
        .fold((0, 0), |(m, g), &c| (m + c, g + 1));
    ConflictStats {
        n,
        conflicting,
        groups,
        proportion: if n == 0 {
            0.0
        } else {
            conflicting as f64 / n as f64
        },
    }
}

/// Error between an embedding and its id: reconstruction error for stacks,
/// sum of node-centroid distances along the path for trees.
pub fn id_distortion(provider: CandidateProvider<'_>, e: &[f32], id: &SemanticId) -> Result<f64> {
    match provider {
        CandidateProvider::Rq(stack) => {
            let rec = reconstruct(id, stack)?;
            Ok(sq_dist(e, &rec).sqrt())
        }
        CandidateProvider::Hc(tree) => Ok(tree
            .path_centroids(id)?
            .into_iter()
            .map(|c| sq_dist(e, c).sqrt())
            .sum()),
    }
}

/// Per-row distortion of a report; `None` where no id was granted.
pub fn per_embedding_distortion(
    set: &EmbeddingSet,
    provider: CandidateProvider<'_>,
    report: &AssignReport,
) -> Result<Vec<Option<f64>>> {
    check_aligned(set, report)?;
    set.iter()
        .zip(&report.assignments)
        .map(|((_, e), a)| {
            a.as_ref()
                .map(|a| id_distortion(provider, e, &a.id))
                .transpose()
        })
        .collect()
}

fn check_aligned(set: &EmbeddingSet, report: &AssignReport) -> Result<()> {
    if set.keys() != report.keys.as_slice() {
        return Err(Error::InvalidConfig(format!(
            "{} report keys do not match the embedding set",
            report.strategy()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyDistortion {
    pub label: String,
    pub count: usize,
    pub total: f64,
    pub mean: f64,
    /// `total / greedy total` over the same rows.
    pub overhead_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub greedy: StrategyDistortion,
    pub strategies: Vec<StrategyDistortion>,
}

impl DistortionReport {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("strategy\tcount\ttotal\tmean\toverhead_ratio\n");
        for d in std::iter::once(&self.greedy).chain(&self.strategies) {
            let _ = writeln!(
                s,
                "{}\t{}\t{:.6}\t{:.6}\t{:.3}",
                d.label, d.count, d.total, d.mean, d.overhead_ratio
            );
        }
        s
    }

    pub fn get(&self, label: &str) -> Option<&StrategyDistortion> {
        std::iter::once(&self.greedy)
            .chain(&self.strategies)
            .find(|d| d.label == label)
    }
}

fn summarize(label: String, values: &[f64], baseline: f64) -> StrategyDistortion {
    let total: f64 = values.iter().sum();
    let count = values.len();
    StrategyDistortion {
        label,
        count,
        total,
        mean: if count == 0 {
            0.0
        } else {
            total / count as f64
        },
        overhead_ratio: if total == baseline {
            1.0
        } else if baseline == 0.0 {
            f64::INFINITY
        } else {
            total / baseline
        },
    }
}

/// Distortion of each report against the greedy ids of the same index.
///
/// Labels are taken from `labels` when given, else from the strategy name.
pub fn distortion_report(
    set: &EmbeddingSet,
    provider: CandidateProvider<'_>,
    reports: &[&AssignReport],
    labels: Option<&[String]>,
) -> Result<DistortionReport> {
    let greedy: Vec<f64> = set
        .iter()
        .map(|(_, e)| {
            let g = provider.greedy(e);
            id_distortion(provider, e, &g.id)
        })
        .collect::<Result<_>>()?;
    let greedy_total: f64 = greedy.iter().sum();
    let mut strategies = Vec::with_capacity(reports.len());
    for (i, rep) in reports.iter().enumerate() {
        let per = per_embedding_distortion(set, provider, rep)?;
        let mut values = Vec::with_capacity(per.len());
        let mut baseline = Vec::with_capacity(per.len());
        for (v, g) in per.iter().zip(&greedy) {
            if let Some(v) = v {
                values.push(*v);
                baseline.push(*g);
            }
        }
        let label = labels
            .and_then(|l| l.get(i).cloned())
            .unwrap_or_else(|| rep.strategy().name().to_string());
        strategies.push(summarize(label, &values, baseline.iter().sum()));
    }
    Ok(DistortionReport {
        greedy: summarize("greedy-baseline".into(), &greedy, greedy_total),
        strategies,
    })
}

/// Counts of chosen candidate ranks, one row per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankHistogram {
    /// `levels[l][r]` counts embeddings that took rank `r + 1` at level `l + 1`.
    pub levels: Vec<Vec<u64>>,
}

impl RankHistogram {
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("level\trank\tcount\n");
        for (l, row) in self.levels.iter().enumerate() {
            for (r, c) in row.iter().enumerate() {
                let _ = writeln!(s, "{}\t{}\t{}", l + 1, r + 1, c);
            }
        }
        s
    }

    /// Share of rank-1 choices at each level.
    pub fn rank1_share(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    1.0
                } else {
                    row.first().copied().unwrap_or(0) as f64 / total as f64
                }
            })
            .collect()
    }
}

pub fn rank_displacement(report: &AssignReport) -> RankHistogram {
    let mut levels: Vec<Vec<u64>> = Vec::new();
    for a in report.assignments.iter().flatten() {
        if levels.len() < a.ranks.len() {
            levels.resize(a.ranks.len(), Vec::new());
        }
        for (row, &r) in levels.iter_mut().zip(&a.ranks) {
            let r = r as usize;
            if row.len() < r {
                row.resize(r, 0);
            }
            row[r - 1] += 1;
        }
    }
    RankHistogram { levels }
}

/// Size of the token space an id map draws from: the product of per-level
/// sizes, times `max suffix + 1` for the suffix baseline.
pub fn search_space(level_sizes: &[usize], report: &AssignReport) -> u128 {
    let base = level_sizes
        .iter()
        .fold(1u128, |acc, &s| acc.saturating_mul(s as u128));
    match report.strategy() {
        Strategy::Suffix => {
            let max = report
                .assignments
                .iter()
                .flatten()
                .filter_map(|a| a.suffix)
                .max()
                .unwrap_or(0);
            base.saturating_mul(max as u128 + 1)
        }
        _ => base,
    }
}

/// Wall-clock seconds per named phase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    pub phases: Vec<(String, Duration)>,
}

impl TimingReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, phase: impl Into<String>, d: Duration) {
        self.phases.push((phase.into(), d));
    }

    /// Runs `f`, records its duration under `phase` and passes its result through.
    pub fn time<T>(&mut self, phase: impl Into<String>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.record(phase, start.elapsed());
        out
    }

    pub fn seconds(&self, phase: &str) -> Option<f64> {
        self.phases
            .iter()
            .find(|(p, _)| p == phase)
            .map(|(_, d)| d.as_secs_f64())
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("phase\tseconds\n");
        for (p, d) in &self.phases {
            let _ = writeln!(s, "{p}\t{:.6}", d.as_secs_f64());
        }
        s
    }
}

/// Builds a timing report from phase durations.
pub fn timing_report<S: Into<String>>(
    phases: impl IntoIterator<Item = (S, Duration)>,
) -> TimingReport {
    TimingReport {
        phases: phases.into_iter().map(|(p, d)| (p.into(), d)).collect(),
    }
}
