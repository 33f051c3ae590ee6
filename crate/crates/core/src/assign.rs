//! Identifier assignment: greedy, conflict-suffix, exhaustive candidate
//! matching (ECM) and recursive residual searching (RRS).
//!
//! Embeddings are processed in ingestion order against a single
//! [`UsedIdRegistry`]; an embedding processed earlier keeps the better id.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::alloc::{greedy_chain, rq_candidate_set, CandidateProvider};
use crate::error::{Error, Result};
use crate::types::{CandidateSet, EmbeddingSet, SemanticId, UsedIdRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Greedy,
    Suffix,
    Ecm,
    Rrs,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Suffix => "suffix",
            Strategy::Ecm => "ecm",
            Strategy::Rrs => "rrs",
        }
    }

    /// Whether the strategy guarantees pairwise-distinct output.
    pub fn is_unique(&self) -> bool {
        !matches!(self, Strategy::Greedy)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "suffix" => Ok(Strategy::Suffix),
            "ecm" => Ok(Strategy::Ecm),
            "rrs" => Ok(Strategy::Rrs),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Order in which ECM tries its candidate combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingStrategy {
    /// Descending negative sum of residual norms.
    ResidualScore,
    /// Odometer order over candidate ranks, last level fastest.
    CombinationOrder,
    /// Seeded shuffle.
    Random(u64),
}

impl fmt::Display for RankingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankingStrategy::ResidualScore => f.write_str("score"),
            RankingStrategy::CombinationOrder => f.write_str("order"),
            RankingStrategy::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnExhausted {
    Fail,
    /// Double every `k_l` (capped at the level limit) and retry.
    WidenK,
}

impl fmt::Display for OnExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OnExhausted::Fail => "fail",
            OnExhausted::WidenK => "widen",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignConfig {
    pub strategy: Strategy,
    pub kvec: Vec<usize>,
    pub ranking: RankingStrategy,
    pub on_exhausted: OnExhausted,
}

impl AssignConfig {
    pub fn new(strategy: Strategy, kvec: Vec<usize>) -> Self {
        Self {
            strategy,
            kvec,
            ranking: RankingStrategy::ResidualScore,
            on_exhausted: OnExhausted::Fail,
        }
    }

    pub fn with_ranking(mut self, ranking: RankingStrategy) -> Self {
        self.ranking = ranking;
        self
    }

    pub fn with_on_exhausted(mut self, on_exhausted: OnExhausted) -> Self {
        self.on_exhausted = on_exhausted;
        self
    }
}

/// The id granted to one embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub id: SemanticId,
    /// Conflict index, only for the suffix baseline.
    pub suffix: Option<u32>,
    /// One-based candidate rank chosen at each level.
    pub ranks: Vec<u32>,
    /// Negative sum of the per-level distances of the chosen candidates.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignReport {
    pub config: AssignConfig,
    pub keys: Vec<String>,
    /// Aligned with `keys`; `None` marks an embedding whose candidates were exhausted.
    pub assignments: Vec<Option<Assignment>>,
    /// Row positions without an id.
    pub failures: Vec<usize>,
    /// Number of top-k doublings performed under [`OnExhausted::WidenK`].
    pub widenings: usize,
    pub duration: Duration,
}

impl AssignReport {
    pub fn strategy(&self) -> Strategy {
        self.config.strategy
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn id(&self, i: usize) -> Option<&SemanticId> {
        self.assignments[i].as_ref().map(|a| &a.id)
    }

    /// `true` when no two rows share an id (suffix included when present).
    pub fn is_injective(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.assignments
            .iter()
            .flatten()
            .all(|a| seen.insert((&a.id, a.suffix)))
    }
}

/// Eq. score: negative sum of per-level residual norms.
pub fn score_candidate(norms: &[f64]) -> f64 {
    -norms.iter().sum::<f64>()
}

/// One fully specified token combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    pub id: SemanticId,
    /// One-based per-level candidate ranks.
    pub ranks: Vec<u32>,
    pub norms: Vec<f64>,
    pub score: f64,
}

/// All combinations of a candidate set in odometer order (last level fastest).
pub fn combinations(set: &CandidateSet) -> Vec<Combination> {
    let kvec = set.kvec();
    let total: usize = kvec.iter().product();
    let levels = kvec.len();
    let mut out = Vec::with_capacity(total);
    if total == 0 {
        return out;
    }
    let mut ranks = vec![0usize; levels];
    loop {
        let tokens = ranks
            .iter()
            .zip(&set.levels)
            .map(|(&r, c)| c.indices[r])
            .collect();
        let norms: Vec<f64> = ranks
            .iter()
            .zip(&set.levels)
            .map(|(&r, c)| c.distances[r])
            .collect();
        out.push(Combination {
            id: SemanticId::new(tokens),
            ranks: ranks.iter().map(|&r| r as u32 + 1).collect(),
            score: score_candidate(&norms),
            norms,
        });
        let mut l = levels;
        loop {
            if l == 0 {
                return out;
            }
            l -= 1;
            ranks[l] += 1;
            if ranks[l] < kvec[l] {
                break;
            }
            ranks[l] = 0;
        }
    }
}

/// Reorders odometer-ordered combinations according to `ranking`.
///
/// `rng` is consumed only by [`RankingStrategy::Random`].
pub fn rank_combinations(
    combos: &mut [Combination],
    ranking: RankingStrategy,
    rng: &mut ChaCha8Rng,
) {
    match ranking {
        RankingStrategy::ResidualScore => combos.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.ranks.cmp(&b.ranks))
        }),
        RankingStrategy::CombinationOrder => {}
        RankingStrategy::Random(_) => combos.shuffle(rng),
    }
}

/// Enumerates and ranks every combination of a per-level candidate set.
pub fn enumerate_ecm_candidates(
    set: &CandidateSet,
    ranking: RankingStrategy,
    rng: &mut ChaCha8Rng,
) -> Vec<Combination> {
    let mut combos = combinations(set);
    rank_combinations(&mut combos, ranking, rng);
    combos
}

/// Unranked ECM candidate pool for one query, in odometer order.
///
/// Stacks use per-level lists computed against the greedy residual chain.
/// Trees expand the `k_l` nearest children of every candidate node,
/// scored by node-centroid distances to the query.
pub fn ecm_pool(
    provider: CandidateProvider<'_>,
    query: &[f32],
    kvec: &[usize],
) -> Result<Vec<Combination>> {
    match provider {
        CandidateProvider::Rq(stack) => {
            let chain = greedy_chain(query, stack);
            Ok(combinations(&rq_candidate_set(&chain, stack, kvec)?))
        }
        CandidateProvider::Hc(_) => {
            fn walk(
                provider: CandidateProvider<'_>,
                query: &[f32],
                kvec: &[usize],
                prefix: &mut Vec<u32>,
                ranks: &mut Vec<u32>,
                norms: &mut Vec<f64>,
                out: &mut Vec<Combination>,
            ) -> Result<()> {
                let level = prefix.len();
                if level == kvec.len() {
                    out.push(Combination {
                        id: SemanticId::new(prefix.clone()),
                        ranks: ranks.clone(),
                        score: score_candidate(norms),
                        norms: norms.clone(),
                    });
                    return Ok(());
                }
                let cands = provider.expand(prefix, query, level, kvec[level])?;
                for r in 0..cands.len() {
                    prefix.push(cands.indices[r]);
                    ranks.push(r as u32 + 1);
                    norms.push(cands.distances[r]);
                    walk(provider, query, kvec, prefix, ranks, norms, out)?;
                    prefix.pop();
                    ranks.pop();
                    norms.pop();
                }
                Ok(())
            }
            let mut out = Vec::new();
            walk(
                provider,
                query,
                kvec,
                &mut Vec::new(),
                &mut Vec::new(),
                &mut Vec::new(),
                &mut out,
            )?;
            Ok(out)
        }
    }
}

/// Depth-first search state for one RRS query.
struct Dfs<'a> {
    provider: CandidateProvider<'a>,
    registry: &'a UsedIdRegistry,
    kvec: &'a [usize],
    prefix: Vec<u32>,
    ranks: Vec<u32>,
    norms: Vec<f64>,
}

impl Dfs<'_> {
    /// Returns `true` with the state holding the first free leaf.
    fn search(&mut self, x: &[f32]) -> Result<bool> {
        let level = self.prefix.len();
        if level == self.kvec.len() {
            return Ok(!self.registry.contains_tokens(&self.prefix));
        }
        let cands = self
            .provider
            .expand(&self.prefix, x, level, self.kvec[level])?;
        for r in 0..cands.len() {
            self.prefix.push(cands.indices[r]);
            self.ranks.push(r as u32 + 1);
            self.norms.push(cands.distances[r]);
            if self.search(cands.residual(r))? {
                return Ok(true);
            }
            self.prefix.pop();
            self.ranks.pop();
            self.norms.pop();
        }
        Ok(false)
    }
}

/// First free leaf of the RRS depth-first search, or `None` when every
/// leaf under `kvec` is taken.
pub fn rrs_search(
    provider: CandidateProvider<'_>,
    registry: &UsedIdRegistry,
    query: &[f32],
    kvec: &[usize],
) -> Result<Option<Assignment>> {
    let mut dfs = Dfs {
        provider,
        registry,
        kvec,
        prefix: Vec::with_capacity(kvec.len()),
        ranks: Vec::with_capacity(kvec.len()),
        norms: Vec::with_capacity(kvec.len()),
    };
    if dfs.search(query)? {
        Ok(Some(Assignment {
            score: score_candidate(&dfs.norms),
            id: SemanticId::new(dfs.prefix),
            suffix: None,
            ranks: dfs.ranks,
        }))
    } else {
        Ok(None)
    }
}

fn check_dim(set: &EmbeddingSet, provider: &CandidateProvider<'_>) -> Result<()> {
    if set.dim() != provider.dim() {
        return Err(Error::DimensionMismatch {
            location: "embeddings vs index".into(),
            expected: provider.dim(),
            found: set.dim(),
        });
    }
    Ok(())
}

fn greedy_assignment(provider: &CandidateProvider<'_>, query: &[f32]) -> Assignment {
    let g = provider.greedy(query);
    Assignment {
        score: score_candidate(&g.distances),
        ranks: vec![1; g.id.len()],
        id: g.id,
        suffix: None,
    }
}

fn widen(kvec: &[usize], provider: &CandidateProvider<'_>) -> Vec<usize> {
    kvec.iter()
        .enumerate()
        .map(|(l, &k)| (k * 2).min(provider.level_limit(l)))
        .collect()
}

/// Runs any strategy against a possibly pre-seeded registry.
///
/// Returns [`Error::ExhaustedCandidates`] naming the first key left without
/// an id; the error carries the partial report.
pub fn assign(
    set: &EmbeddingSet,
    provider: CandidateProvider<'_>,
    cfg: &AssignConfig,
    registry: &mut UsedIdRegistry,
) -> Result<AssignReport> {
    check_dim(set, &provider)?;
    let mut report = AssignReport {
        config: cfg.clone(),
        keys: set.keys().to_vec(),
        assignments: Vec::with_capacity(set.len()),
        failures: Vec::new(),
        widenings: 0,
        duration: Duration::ZERO,
    };
    let start = Instant::now();
    match cfg.strategy {
        Strategy::Greedy => {
            for (_, e) in set.iter() {
                report
                    .assignments
                    .push(Some(greedy_assignment(&provider, e)));
            }
        }
        Strategy::Suffix => {
            for (_, e) in set.iter() {
                let mut a = greedy_assignment(&provider, e);
                a.suffix = Some(registry.next_suffix(&a.id));
                report.assignments.push(Some(a));
            }
        }
        Strategy::Ecm | Strategy::Rrs => {
            provider.validate_kvec(&cfg.kvec)?;
            let needed = set.len() as u128 + registry.len() as u128;
            if needed > provider.capacity() {
                return Err(Error::CapacityExceeded {
                    n: needed,
                    capacity: provider.capacity(),
                });
            }
            let seed = match cfg.ranking {
                RankingStrategy::Random(seed) => seed,
                _ => 0,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (i, (_, e)) in set.iter().enumerate() {
                let mut kvec = cfg.kvec.clone();
                let granted = loop {
                    let found = match cfg.strategy {
                        Strategy::Ecm => {
                            ecm_grant(provider, registry, e, &kvec, cfg.ranking, &mut rng)?
                        }
                        _ => rrs_search(provider, registry, e, &kvec)?,
                    };
                    if found.is_some() || cfg.on_exhausted == OnExhausted::Fail {
                        break found;
                    }
                    let wider = widen(&kvec, &provider);
                    if wider == kvec {
                        break None;
                    }
                    kvec = wider;
                    report.widenings += 1;
                };
                match granted {
                    Some(a) => {
                        let fresh = registry.insert(a.id.clone());
                        debug_assert!(fresh, "granted id was already registered");
                        report.assignments.push(Some(a));
                    }
                    None => {
                        report.failures.push(i);
                        report.assignments.push(None);
                    }
                }
            }
        }
    }
    report.duration = start.elapsed();
    if let Some(&first) = report.failures.first() {
        return Err(Error::ExhaustedCandidates {
            key: report.keys[first].clone(),
            report: Box::new(report),
        });
    }
    Ok(report)
}

fn ecm_grant(
    provider: CandidateProvider<'_>,
    registry: &UsedIdRegistry,
    query: &[f32],
    kvec: &[usize],
    ranking: RankingStrategy,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Assignment>> {
    // The greedy id heads both deterministic orders, so a free greedy id
    // is the answer without enumerating the pool.
    if !matches!(ranking, RankingStrategy::Random(_)) {
        let g = greedy_assignment(&provider, query);
        if !registry.contains(&g.id) {
            return Ok(Some(g));
        }
    }
    let mut pool = ecm_pool(provider, query, kvec)?;
    rank_combinations(&mut pool, ranking, rng);
    Ok(pool
        .into_iter()
        .find(|c| !registry.contains(&c.id))
        .map(|c| Assignment {
            id: c.id,
            suffix: None,
            ranks: c.ranks,
            score: c.score,
        }))
}

/// Nearest-centroid ids; conflicts are kept.
pub fn assign_greedy(set: &EmbeddingSet, provider: CandidateProvider<'_>) -> Result<AssignReport> {
    assign(
        set,
        provider,
        &AssignConfig::new(Strategy::Greedy, vec![1; provider.num_levels()]),
        &mut UsedIdRegistry::new(),
    )
}

/// Greedy prefix plus zero-based occurrence index.
pub fn assign_suffix(set: &EmbeddingSet, provider: CandidateProvider<'_>) -> Result<AssignReport> {
    assign(
        set,
        provider,
        &AssignConfig::new(Strategy::Suffix, vec![1; provider.num_levels()]),
        &mut UsedIdRegistry::new(),
    )
}

pub fn assign_ecm(
    set: &EmbeddingSet,
    provider: CandidateProvider<'_>,
    cfg: &AssignConfig,
) -> Result<AssignReport> {
    let cfg = AssignConfig {
        strategy: Strategy::Ecm,
        ..cfg.clone()
    };
    assign(set, provider, &cfg, &mut UsedIdRegistry::new())
}

pub fn assign_rrs(
    set: &EmbeddingSet,
    provider: CandidateProvider<'_>,
    cfg: &AssignConfig,
) -> Result<AssignReport> {
    let cfg = AssignConfig {
        strategy: Strategy::Rrs,
        ..cfg.clone()
    };
    assign(set, provider, &cfg, &mut UsedIdRegistry::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Candidates, CodebookStack};

    fn id(t: &[u32]) -> SemanticId {
        SemanticId::new(t.to_vec())
    }

    fn dup_pair_l2() -> (EmbeddingSet, CodebookStack) {
        let stack = CodebookStack::from_rows(&[
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.0, 0.0], vec![0.5, 0.0]],
        ])
        .unwrap();
        let set = EmbeddingSet::from_vectors(2, vec![vec![0.6, 0.0], vec![0.6, 0.0]]).unwrap();
        (set, stack)
    }

    fn dup_pair_l1() -> (EmbeddingSet, CodebookStack) {
        let stack = CodebookStack::from_rows(&[vec![vec![0.0, 0.0], vec![2.0, 0.0]]]).unwrap();
        let set = EmbeddingSet::from_vectors(2, vec![vec![0.1, 0.0], vec![0.1, 0.0]]).unwrap();
        (set, stack)
    }

    #[test]
    fn score_arithmetic() {
        assert!((score_candidate(&[0.1, 0.2, 0.3]) + 0.6).abs() < 1e-12);
        assert_eq!(score_candidate(&[0.0, 0.0]), 0.0);
        assert_eq!(score_candidate(&[1.0]), -1.0);
    }

    fn level(distances: &[f64]) -> Candidates {
        Candidates {
            indices: (0..distances.len() as u32).collect(),
            distances: distances.to_vec(),
            residuals: vec![0.0; distances.len()],
            dim: 1,
        }
    }

    #[test]
    fn enumeration_counts_and_scores() {
        let set = CandidateSet {
            levels: vec![level(&[0.4, 0.6]), level(&[0.4, 0.9])],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ranked = enumerate_ecm_candidates(&set, RankingStrategy::ResidualScore, &mut rng);
        assert_eq!(ranked.len(), 4);
        let scores: Vec<f64> = ranked.iter().map(|c| c.score).collect();
        for (s, want) in scores.iter().zip([-0.8, -1.0, -1.3, -1.5]) {
            assert!((s - want).abs() < 1e-12, "{scores:?}");
        }
        assert_eq!(ranked[1].ranks, vec![2, 1]);

        let order = enumerate_ecm_candidates(&set, RankingStrategy::CombinationOrder, &mut rng);
        let ranks: Vec<Vec<u32>> = order.iter().map(|c| c.ranks.clone()).collect();
        assert_eq!(ranks, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);

        let single = CandidateSet {
            levels: vec![level(&[0.1]), level(&[0.2]), level(&[0.3])],
        };
        let only = enumerate_ecm_candidates(&single, RankingStrategy::ResidualScore, &mut rng);
        assert_eq!(only.len(), 1);
        assert_eq!(only[0].id, id(&[0, 0, 0]));
    }

    #[test]
    fn random_ranking_is_seeded() {
        let set = CandidateSet {
            levels: vec![level(&[0.1, 0.2, 0.3]), level(&[0.1, 0.2, 0.3])],
        };
        let a = enumerate_ecm_candidates(
            &set,
            RankingStrategy::Random(7),
            &mut ChaCha8Rng::seed_from_u64(7),
        );
        let b = enumerate_ecm_candidates(
            &set,
            RankingStrategy::Random(7),
            &mut ChaCha8Rng::seed_from_u64(7),
        );
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
    }

    #[test]
    fn duplicates_collide_under_greedy() {
        let (set, stack) = dup_pair_l1();
        let rep = assign_greedy(&set, (&stack).into()).unwrap();
        assert_eq!(rep.id(0), rep.id(1));
        assert!(!rep.is_injective());
    }

    #[test]
    fn suffix_counts_occurrences() {
        let (_, stack) = dup_pair_l2();
        let set = EmbeddingSet::from_vectors(2, vec![vec![0.6, 0.0]; 3]).unwrap();
        let rep = assign_suffix(&set, (&stack).into()).unwrap();
        let got: Vec<(SemanticId, Option<u32>)> = rep
            .assignments
            .iter()
            .flatten()
            .map(|a| (a.id.clone(), a.suffix))
            .collect();
        let p = id(&[1, 0]);
        assert_eq!(
            got,
            vec![(p.clone(), Some(0)), (p.clone(), Some(1)), (p, Some(2))]
        );
        assert!(rep.is_injective());
    }

    #[test]
    fn ecm_single_level_duplicate() {
        let (set, stack) = dup_pair_l1();
        let cfg = AssignConfig::new(Strategy::Ecm, vec![2]);
        let rep = assign_ecm(&set, (&stack).into(), &cfg).unwrap();
        assert_eq!(rep.id(0), Some(&id(&[0])));
        assert_eq!(rep.id(1), Some(&id(&[1])));
        let rrs = assign_rrs(&set, (&stack).into(), &cfg).unwrap();
        assert_eq!(rrs.assignments, rep.assignments);
    }

    #[test]
    fn ecm_and_rrs_differ_on_two_level_duplicate() {
        let (set, stack) = dup_pair_l2();
        let cfg = AssignConfig::new(Strategy::Ecm, vec![2, 2]);
        let ecm = assign_ecm(&set, (&stack).into(), &cfg).unwrap();
        assert_eq!(ecm.id(0), Some(&id(&[1, 0])));
        assert_eq!(ecm.id(1), Some(&id(&[0, 0])));
        let a = ecm.assignments[1].as_ref().unwrap();
        assert_eq!(a.ranks, vec![2, 1]);
        assert!((a.score + 1.0).abs() < 1e-6);

        let rrs = assign_rrs(&set, (&stack).into(), &cfg).unwrap();
        assert_eq!(rrs.id(0), Some(&id(&[1, 0])));
        assert_eq!(rrs.id(1), Some(&id(&[1, 1])));
        assert_eq!(rrs.assignments[1].as_ref().unwrap().ranks, vec![1, 2]);
    }

    #[test]
    fn exhaustion_fails_or_widens() {
        let stack =
            CodebookStack::from_rows(&[vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]]).unwrap();
        let set = EmbeddingSet::from_vectors(1, vec![vec![0.0]; 3]).unwrap();
        let cfg = AssignConfig::new(Strategy::Ecm, vec![2]);
        match assign_ecm(&set, (&stack).into(), &cfg) {
            Err(Error::ExhaustedCandidates { key, report }) => {
                assert_eq!(key, "e2");
                assert_eq!(report.failures, vec![2]);
                assert_eq!(report.id(1), Some(&id(&[1])));
            }
            other => panic!("unexpected {other:?}"),
        }
        for strategy in [Strategy::Ecm, Strategy::Rrs] {
            let cfg = AssignConfig::new(strategy, vec![1]).with_on_exhausted(OnExhausted::WidenK);
            let mut reg = UsedIdRegistry::new();
            let rep = assign(&set, (&stack).into(), &cfg, &mut reg).unwrap();
            assert_eq!(rep.id(2), Some(&id(&[2])));
            assert_eq!(rep.assignments[2].as_ref().unwrap().ranks, vec![3]);
            assert_eq!(rep.widenings, 1 + 2);
        }
    }

    #[test]
    fn capacity_and_kvec_are_checked() {
        let stack = CodebookStack::from_rows(&[vec![vec![0.0], vec![1.0]]]).unwrap();
        let set = EmbeddingSet::from_vectors(1, vec![vec![0.0]; 3]).unwrap();
        assert!(matches!(
            assign_rrs(
                &set,
                (&stack).into(),
                &AssignConfig::new(Strategy::Rrs, vec![2])
            ),
            Err(Error::CapacityExceeded { n: 3, capacity: 2 })
        ));
        let one = EmbeddingSet::from_vectors(1, vec![vec![0.0]]).unwrap();
        assert!(matches!(
            assign_rrs(
                &one,
                (&stack).into(),
                &AssignConfig::new(Strategy::Rrs, vec![3])
            ),
            Err(Error::InvalidConfig(_))
        ));
        let wrong_dim = EmbeddingSet::from_vectors(2, vec![vec![0.0, 0.0]]).unwrap();
        assert!(assign_greedy(&wrong_dim, (&stack).into()).is_err());
    }

    #[test]
    fn prior_registry_is_respected() {
        let (set, stack) = dup_pair_l1();
        let one = EmbeddingSet::from_vectors(2, vec![set.vector(0).to_vec()]).unwrap();
        let mut reg = UsedIdRegistry::new();
        reg.insert(id(&[0]));
        let rep = assign(
            &one,
            (&stack).into(),
            &AssignConfig::new(Strategy::Rrs, vec![2]),
            &mut reg,
        )
        .unwrap();
        assert_eq!(rep.id(0), Some(&id(&[1])));
        assert_eq!(reg.len(), 2);
    }
}
