//! The synthesis main loop: elite-set maintenance, operator dispatch,
//! roulette-wheel parent selection, offspring generation, evaluation, and
//! run accounting.
//!
//! Determinism contract: every offspring draws from its own RNG stream
//! derived from (root seed, evaluation index), and each batch is generated
//! from the elite-set snapshot at the batch start. Evaluation scheduling
//! therefore never affects the result; elite insertion is serialized in
//! evaluation-index order.

use rand::Rng;
use thiserror::Error;

use crate::config::RunConfig;
use crate::eval::Evaluator;
use crate::genops::{mix_netlists, prune_netlist, MixBias, PruneRate};
use crate::graph::netlist_to_graph;
use crate::netlist::Netlist;
use crate::normalize::normalize;
use crate::reward;
use crate::rng::stream;
use crate::sampler::{check, sample_random_netlist};

/// Which generator produced a netlist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Random,
    Crossover,
    Mutation,
    Pruning,
}

impl Origin {
    pub const ALL: [Origin; 4] = [
        Origin::Random,
        Origin::Crossover,
        Origin::Mutation,
        Origin::Pruning,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::Random => "random",
            Origin::Crossover => "crossover",
            Origin::Mutation => "mutation",
            Origin::Pruning => "pruning",
        }
    }

    fn slot(&self) -> usize {
        match self {
            Origin::Random => 0,
            Origin::Crossover => 1,
            Origin::Mutation => 2,
            Origin::Pruning => 3,
        }
    }
}

/// Elite-set size policy: a fixed capacity or a ratio of evaluations so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElitePolicy {
    Fixed(usize),
    Relative(f64),
}

#[derive(Debug, Clone)]
pub struct EliteEntry {
    pub netlist: Netlist,
    pub serialized: String,
    /// Canonical rendering of the measurement vector the candidate scored.
    pub signature: String,
    pub reward: f64,
    pub origin: Origin,
    pub eval_index: usize,
}

/// Reward-sorted bounded archive of the best netlists found.
///
/// Entries are deduplicated by behavioral signature: the archive keeps one
/// netlist per distinct measurement vector, and a new candidate replaces
/// the incumbent with its signature. Byte-identical netlists always share
/// a signature, so redundant variants of one solution are never stored;
/// deduplicating the behavior (rather than only the bytes) also stops a
/// single circuit family from flooding every slot with junk-line variants
/// of itself, which would starve the parent pool of diversity.
#[derive(Debug, Clone)]
pub struct EliteSet {
    policy: ElitePolicy,
    entries: Vec<EliteEntry>,
}

impl EliteSet {
    pub fn new(policy: ElitePolicy) -> Self {
        Self {
            policy,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EliteEntry] {
        &self.entries
    }

    /// Capacity given the number of evaluations so far.
    pub fn bound(&self, evals: usize) -> usize {
        match self.policy {
            ElitePolicy::Fixed(zeta) => zeta,
            ElitePolicy::Relative(eta) => ((evals as f64 * eta).floor() as usize).max(2),
        }
    }

    /// Whether the genetic operators may draw parents yet.
    pub fn operators_available(&self, evals: usize) -> bool {
        if self.entries.is_empty() {
            return false;
        }
        match self.policy {
            ElitePolicy::Fixed(zeta) => evals >= zeta,
            ElitePolicy::Relative(eta) => evals as f64 * eta >= 2.0,
        }
    }

    /// True if `a` ranks before `b`: higher reward first, ties broken by
    /// later evaluation index. Ranking ties newest-first matters on
    /// plateaued landscapes: a full set of equal-reward entries must keep
    /// admitting fresh variants (evicting the oldest) or the parent pool
    /// fossilizes and the search stalls.
    fn ranks_before(a: (f64, usize), b: (f64, usize)) -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 > b.1)
    }

    /// Insert an entry, keeping the set sorted, deduplicated, and within
    /// its bound. Returns true if the entry was added.
    pub fn insert(&mut self, entry: EliteEntry, evals: usize) -> bool {
        if let Some(pos) = self
            .entries
            .iter()
            .position(|e| e.signature == entry.signature)
        {
            // same behavior: the newest representative takes the slot
            self.entries.remove(pos);
        }
        let key = (entry.reward, entry.eval_index);
        let pos = self
            .entries
            .partition_point(|e| Self::ranks_before((e.reward, e.eval_index), key));
        self.entries.insert(pos, entry);
        let bound = self.bound(evals);
        while self.entries.len() > bound {
            self.entries.pop();
        }
        // truncation drops from the tail, so the entry survived iff its
        // position is still inside the set
        pos < self.entries.len()
    }

    /// Number of current entries per origin, in [`Origin::ALL`] order.
    pub fn origin_counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for e in &self.entries {
            counts[e.origin.slot()] += 1;
        }
        counts
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("cannot select from an empty elite set")]
    EmptyEliteSet,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("evaluator unavailable: {0}")]
    EvaluatorUnavailable(String),
}

/// Rank weights (m, m-1, ..., 1) aligned with reward-descending order.
pub fn rank_weights(m: usize) -> Vec<f64> {
    (0..m).map(|i| (m - i) as f64).collect()
}

/// Draw `n` indices independently with replacement, with probability
/// proportional to the given positive weights.
pub fn roulette_select<R: Rng>(
    weights: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>, EngineError> {
    if weights.is_empty() {
        return Err(EngineError::EmptyEliteSet);
    }
    let total: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut r = rng.gen::<f64>() * total;
        let mut chosen = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            r -= w;
            if r < 0.0 {
                chosen = i;
                break;
            }
        }
        out.push(chosen);
    }
    Ok(out)
}

fn select_parent<'a, R: Rng>(
    elite: &'a EliteSet,
    rng: &mut R,
) -> Result<&'a EliteEntry, EngineError> {
    let weights = rank_weights(elite.len());
    let idx = roulette_select(&weights, 1, rng)?[0];
    Ok(&elite.entries()[idx])
}

fn passes_after_checks(n: &Netlist, cfg: &RunConfig) -> bool {
    if cfg.checks_after.is_empty() {
        return true;
    }
    let g = netlist_to_graph(n);
    cfg.checks_after
        .iter()
        .all(|k| check(*k, &g, &n.ports))
}

const GENERATE_ATTEMPTS: usize = 100;

/// Produce one offspring netlist. Until the elite set is available every
/// offspring is a fresh random sample; afterwards crossover, mutation, and
/// pruning are drawn with equal probability. Empty offspring fall back to a
/// random sample, and candidates failing the configured after-generation
/// checks are regenerated.
pub fn generate_offspring<R: Rng>(
    elite: &EliteSet,
    evals: usize,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<(Netlist, Origin), EngineError> {
    let task = &cfg.task;
    let sample = |rng: &mut R| -> Result<Netlist, EngineError> {
        sample_random_netlist(&task.sampler, &task.registry, rng)
            .map_err(|e| EngineError::Config(e.to_string()))
    };

    let mut last_err = None;
    for _ in 0..GENERATE_ATTEMPTS {
        let generated: Result<(Netlist, Origin), EngineError> = (|| {
            if !elite.operators_available(evals) {
                return Ok((sample(rng)?, Origin::Random));
            }
            let strategy = rng.gen_range(0..3);
            let (candidate, origin) = match strategy {
                0 => {
                    let weights = rank_weights(elite.len());
                    let idx = roulette_select(&weights, 2, rng)?;
                    let a = &elite.entries()[idx[0]];
                    let b = &elite.entries()[idx[1]];
                    (
                        mix_netlists(&a.netlist, &b.netlist, MixBias::Uniform, rng),
                        Origin::Crossover,
                    )
                }
                1 => {
                    let parent = select_parent(elite, rng)?.netlist.clone();
                    let random = sample(rng)?;
                    // the elite is the favored second parent
                    (
                        mix_netlists(
                            &random,
                            &parent,
                            MixBias::TowardSecond { alpha: cfg.alpha },
                            rng,
                        ),
                        Origin::Mutation,
                    )
                }
                _ => {
                    let parent = select_parent(elite, rng)?.netlist.clone();
                    (
                        prune_netlist(
                            &parent,
                            &task.registry,
                            task.sampler.force_bulk,
                            PruneRate::new(cfg.beta),
                            cfg.normalize,
                            rng,
                        ),
                        Origin::Pruning,
                    )
                }
            };
            if candidate.is_empty() {
                return Ok((sample(rng)?, Origin::Random));
            }
            Ok((candidate, origin))
        })();

        match generated {
            Ok((candidate, origin)) => {
                let candidate = if cfg.normalize {
                    normalize(&candidate, &task.registry)
                } else {
                    candidate
                };
                if passes_after_checks(&candidate, cfg) {
                    return Ok((candidate, origin));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    // final fallback: an unchecked random sample
    match sample(rng) {
        Ok(n) => Ok((n, Origin::Random)),
        Err(e) => Err(last_err.unwrap_or(EngineError::Config(e.to_string()))),
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub eval_index: usize,
    pub origin: Origin,
    pub reward: f64,
    pub netlist_len: usize,
    pub elapsed_ms: u64,
    /// Serialized candidate, kept for replay-style analyses. Not written to
    /// the CSV log.
    pub netlist: String,
    /// Behavioral signature of the candidate's measurements.
    pub signature: String,
}

/// Elite-set composition after a batch, for the per-origin time series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliteSnapshot {
    pub eval_index: usize,
    /// Counts in [`Origin::ALL`] order.
    pub counts: [usize; 4],
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub task: String,
    pub seed: u64,
    pub success: bool,
    pub evaluations: usize,
    pub budget: usize,
    pub best_reward: f64,
    pub best_netlist: String,
    pub records: Vec<EvalRecord>,
    pub elite_series: Vec<EliteSnapshot>,
}

/// Run the full synthesis loop with the task's own evaluator.
pub fn run_synthesis(cfg: &RunConfig) -> Result<RunReport, EngineError> {
    let evaluator = cfg
        .task
        .build_evaluator()
        .map_err(EngineError::Config)?;
    run_synthesis_with(cfg, evaluator.as_ref())
}

/// Run the full synthesis loop against a caller-provided evaluator.
pub fn run_synthesis_with(
    cfg: &RunConfig,
    evaluator: &dyn Evaluator,
) -> Result<RunReport, EngineError> {
    let mut elite = EliteSet::new(cfg.policy);
    let mut records: Vec<EvalRecord> = Vec::new();
    let mut elite_series: Vec<EliteSnapshot> = Vec::new();
    let mut evals = 0usize;
    let mut success = false;
    let mut best: Option<(f64, usize)> = None;

    let saturating: Vec<bool> = cfg.task.metrics.iter().map(|m| m.saturating).collect();
    debug_assert!(!saturating.is_empty(), "tasks must define metrics");

    while evals < cfg.budget && !success {
        let batch_size = cfg.batch.min(cfg.budget - evals);
        // generate the whole batch from the batch-start elite snapshot
        let mut batch: Vec<(Netlist, Origin)> = Vec::with_capacity(batch_size);
        for k in 0..batch_size {
            let mut rng = stream(cfg.seed, (evals + k) as u64);
            batch.push(generate_offspring(&elite, evals, cfg, &mut rng)?);
        }
        let netlists: Vec<Netlist> = batch.iter().map(|(n, _)| n.clone()).collect();
        let results = evaluator.evaluate_batch(&netlists);

        for (k, ((result, elapsed), (netlist, origin))) in
            results.into_iter().zip(batch).enumerate()
        {
            let eval_index = evals + k;
            let measurements = match result {
                Ok(m) => m,
                Err(crate::eval::EvalError::Unavailable(msg)) => {
                    return Err(EngineError::EvaluatorUnavailable(msg))
                }
                Err(e) => return Err(EngineError::Config(e.to_string())),
            };
            let report = reward::score(&measurements, &cfg.task.metrics)
                .map_err(|e| EngineError::Config(e.to_string()))?;
            let serialized = netlist.serialize();
            let signature = measurements.signature();
            records.push(EvalRecord {
                eval_index,
                origin,
                reward: report.aggregate,
                netlist_len: netlist.len(),
                elapsed_ms: if evaluator.wall_time_visible() {
                    elapsed
                } else {
                    0
                },
                netlist: serialized.clone(),
                signature: signature.clone(),
            });
            if best.map(|(r, _)| report.aggregate > r).unwrap_or(true) {
                best = Some((report.aggregate, eval_index));
            }
            elite.insert(
                EliteEntry {
                    netlist,
                    serialized,
                    signature,
                    reward: report.aggregate,
                    origin,
                    eval_index,
                },
                eval_index + 1,
            );
            if report.aggregate >= 1.0 {
                success = true;
                evals = eval_index + 1;
                break;
            }
        }
        if !success {
            evals += batch_size;
        }
        elite_series.push(EliteSnapshot {
            eval_index: evals,
            counts: elite.origin_counts(),
        });
    }

    // drop any records generated past the stopping evaluation
    records.truncate(evals);
    let (best_reward, best_index) = best.unwrap_or((-1.0, 0));
    let best_netlist = records
        .get(best_index)
        .map(|r| r.netlist.clone())
        .unwrap_or_default();
    Ok(RunReport {
        task: cfg.task.name.clone(),
        seed: cfg.seed,
        success,
        evaluations: evals,
        budget: cfg.budget,
        best_reward,
        best_netlist,
        records,
        elite_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::PortDecl;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn entry(reward: f64, eval_index: usize, signature: &str) -> EliteEntry {
        EliteEntry {
            netlist: Netlist::empty(PortDecl::default()),
            serialized: signature.to_string(),
            signature: signature.to_string(),
            reward,
            origin: Origin::Random,
            eval_index,
        }
    }

    #[test]
    fn roulette_probabilities_follow_ranks() {
        let weights = rank_weights(3);
        assert_eq!(weights, vec![3.0, 2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let idx = roulette_select(&weights, 1, &mut rng).unwrap()[0];
            counts[idx] += 1;
        }
        let expect = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        for i in 0..3 {
            let p = counts[i] as f64 / draws as f64;
            let sigma = (expect[i] * (1.0 - expect[i]) / draws as f64).sqrt();
            assert!(
                (p - expect[i]).abs() < 3.0 * sigma,
                "index {i}: p = {p}, expected {}",
                expect[i]
            );
        }
    }

    #[test]
    fn roulette_samples_with_replacement() {
        let weights = rank_weights(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut saw_repeat = false;
        for _ in 0..200 {
            let idx = roulette_select(&weights, 2, &mut rng).unwrap();
            if idx[0] == idx[1] {
                saw_repeat = true;
                break;
            }
        }
        assert!(saw_repeat);
    }

    #[test]
    fn roulette_on_empty_weights_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(matches!(
            roulette_select(&[], 1, &mut rng),
            Err(EngineError::EmptyEliteSet)
        ));
    }

    #[test]
    fn elite_set_sorts_dedups_and_bounds() {
        let mut elite = EliteSet::new(ElitePolicy::Fixed(2));
        elite.insert(entry(0.2, 0, "a"), 1);
        elite.insert(entry(0.8, 1, "b"), 2);
        // a candidate with a known signature replaces the incumbent
        assert!(elite.insert(entry(0.8, 2, "b"), 3));
        assert_eq!(elite.len(), 2);
        assert_eq!(elite.entries()[0].eval_index, 2);
        // overflow evicts the lowest reward
        elite.insert(entry(0.5, 3, "c"), 4);
        let rewards: Vec<f64> = elite.entries().iter().map(|e| e.reward).collect();
        assert_eq!(rewards, vec![0.8, 0.5]);
    }

    #[test]
    fn ties_rank_newer_evaluations_first() {
        let mut elite = EliteSet::new(ElitePolicy::Fixed(3));
        elite.insert(entry(0.5, 4, "x"), 5);
        elite.insert(entry(0.5, 1, "y"), 6);
        let order: Vec<usize> = elite.entries().iter().map(|e| e.eval_index).collect();
        assert_eq!(order, vec![4, 1]);
    }

    #[test]
    fn full_plateau_keeps_admitting_fresh_variants() {
        let mut elite = EliteSet::new(ElitePolicy::Fixed(2));
        assert!(elite.insert(entry(0.8, 0, "a"), 1));
        assert!(elite.insert(entry(0.8, 1, "b"), 2));
        // a third equal-reward circuit replaces the oldest one
        assert!(elite.insert(entry(0.8, 2, "c"), 3));
        let kept: Vec<&str> = elite
            .entries()
            .iter()
            .map(|e| e.serialized.as_str())
            .collect();
        assert_eq!(kept, vec!["c", "b"]);
    }

    #[test]
    fn relative_policy_bound_grows_with_evaluations() {
        let elite = EliteSet::new(ElitePolicy::Relative(0.01));
        assert_eq!(elite.bound(0), 2);
        assert_eq!(elite.bound(1000), 10);
        let mut elite = EliteSet::new(ElitePolicy::Relative(0.01));
        elite.insert(entry(0.5, 0, "a"), 1);
        assert!(!elite.operators_available(100));
        assert!(elite.operators_available(200));
    }

    #[test]
    fn fixed_policy_gate_opens_at_zeta_evaluations() {
        let mut elite = EliteSet::new(ElitePolicy::Fixed(30));
        elite.insert(entry(0.5, 0, "a"), 1);
        assert!(!elite.operators_available(29));
        assert!(elite.operators_available(30));
    }

    #[test]
    fn pruning_a_one_line_elite_falls_back_to_random() {
        use crate::config::{builtin_task, RunConfig};
        use crate::netlist::parse_netlist;
        let cfg = RunConfig::for_task(builtin_task("nand2_fixed").unwrap());
        let single =
            "X0 net_output_0 net_input_0 net_supply_0 net_supply_0 sky130_fd_pr__pfet_01v8 w=1.000 l=0.150";
        let netlist = parse_netlist(single, &cfg.task.registry, cfg.task.ports).unwrap();
        let mut elite = EliteSet::new(cfg.policy);
        elite.insert(
            EliteEntry {
                serialized: netlist.serialize(),
                signature: "s".to_string(),
                netlist,
                reward: 0.5,
                origin: Origin::Random,
                eval_index: 0,
            },
            1,
        );
        let mut randoms = 0;
        let mut operators = 0;
        for stream_id in 0..90u64 {
            let mut rng = crate::rng::stream(123, stream_id);
            let (n, origin) = generate_offspring(&elite, 64, &cfg, &mut rng).unwrap();
            assert!(!n.is_empty());
            match origin {
                Origin::Random => randoms += 1,
                _ => operators += 1,
            }
        }
        // the pruning third always empties a one-line parent and must be
        // replaced by a random sample
        assert!(randoms > 0);
        assert!(operators > 0);
    }
}
