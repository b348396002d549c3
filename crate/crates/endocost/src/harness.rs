//! Experiment harness: single runs, horizon sweeps with power-law slope
//! fits, topology sweeps with the computation-regret product, and result
//! emission (CSV + JSONL + optional per-run traces).
//!
//! The harness is concrete over `f64`; the math modules it drives stay
//! generic.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocators::{make_features, Allocator, EtaSchedule, Feedback, FeatureScheme};
use crate::environments::{Environment, EnvironmentSpec, VariationTracker};
use crate::error::{Error, Result};
use crate::graph::{
    build_full, build_generalized_wuxing, build_random_sparse, build_ring, build_star,
    build_wuxing, stats, InteractionGraph, TopologyStats,
};
use crate::payoff::{payoff, reward, Allocation, RewardMode, ValueVector};
use crate::regret::{truthfulness_gap, RegretLedger};

pub const DEFAULT_SEED_COUNT: usize = 16;
pub const GATED_BASE_STEP: f64 = 1.0;
pub const GATED_STEP_EXPONENT: f64 = -1.0 / 3.0;

/// RNG stream for gated feature noise, kept distinct from the environment's
/// stream so both can share one seed.
const FEATURE_STREAM: u64 = 1;

fn default_w_pos() -> f64 {
    1.0
}

fn default_w_neg() -> f64 {
    -1.0
}

/// Declarative graph description; the topology label doubles as the CSV
/// `topology` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    Full {
        n: usize,
        lambda: f64,
        #[serde(default = "default_w_pos")]
        w_coop: f64,
        #[serde(default = "default_w_neg")]
        w_comp: f64,
    },
    Wuxing {
        lambda: f64,
        #[serde(default = "default_w_pos")]
        w_sheng: f64,
        #[serde(default = "default_w_neg")]
        w_ke: f64,
    },
    GeneralizedWuxing {
        n: usize,
        lambda: f64,
        #[serde(default = "default_w_pos")]
        w_sheng: f64,
        #[serde(default = "default_w_neg")]
        w_ke: f64,
    },
    Ring {
        n: usize,
        lambda: f64,
        #[serde(default = "default_w_pos")]
        w: f64,
    },
    Star {
        n: usize,
        lambda: f64,
        #[serde(default = "default_w_pos")]
        w: f64,
    },
    RandomSparse {
        n: usize,
        m_target: usize,
        lambda: f64,
        seed: u64,
    },
}

impl GraphSpec {
    pub fn label(&self) -> &'static str {
        match self {
            GraphSpec::Full { .. } => "full",
            GraphSpec::Wuxing { .. } => "wuxing",
            GraphSpec::GeneralizedWuxing { .. } => "generalized-wuxing",
            GraphSpec::Ring { .. } => "ring",
            GraphSpec::Star { .. } => "star",
            GraphSpec::RandomSparse { .. } => "random-sparse",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            GraphSpec::Full { n, .. }
            | GraphSpec::GeneralizedWuxing { n, .. }
            | GraphSpec::Ring { n, .. }
            | GraphSpec::Star { n, .. }
            | GraphSpec::RandomSparse { n, .. } => n,
            GraphSpec::Wuxing { .. } => 5,
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            GraphSpec::Full { lambda, .. }
            | GraphSpec::Wuxing { lambda, .. }
            | GraphSpec::GeneralizedWuxing { lambda, .. }
            | GraphSpec::Ring { lambda, .. }
            | GraphSpec::Star { lambda, .. }
            | GraphSpec::RandomSparse { lambda, .. } => lambda,
        }
    }

    pub fn build(&self) -> Result<InteractionGraph<f64>> {
        match *self {
            GraphSpec::Full {
                n,
                lambda,
                w_coop,
                w_comp,
            } => build_full(n, w_coop, w_comp, lambda),
            GraphSpec::Wuxing {
                lambda,
                w_sheng,
                w_ke,
            } => build_wuxing(lambda, w_sheng, w_ke),
            GraphSpec::GeneralizedWuxing {
                n,
                lambda,
                w_sheng,
                w_ke,
            } => build_generalized_wuxing(n, lambda, w_sheng, w_ke),
            GraphSpec::Ring { n, lambda, w } => build_ring(n, lambda, w),
            GraphSpec::Star { n, lambda, w } => build_star(n, lambda, w),
            GraphSpec::RandomSparse {
                n,
                m_target,
                lambda,
                seed,
            } => build_random_sparse(n, m_target, lambda, seed),
        }
    }
}

/// Allocator choice plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AllocatorSpec {
    Uniform,
    Gated {
        #[serde(default = "default_base_step")]
        base_step: f64,
        #[serde(default = "default_step_exponent")]
        step_exponent: f64,
    },
    Competitive {
        /// Explicit learning rate; overrides the schedule.
        #[serde(default)]
        eta: Option<f64>,
        /// `sqrt(ln N / t)` instead of the fixed-horizon default.
        #[serde(default)]
        anytime: bool,
    },
}

fn default_base_step() -> f64 {
    GATED_BASE_STEP
}

fn default_step_exponent() -> f64 {
    GATED_STEP_EXPONENT
}

impl AllocatorSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AllocatorSpec::Uniform => "uniform",
            AllocatorSpec::Gated { .. } => "gated",
            AllocatorSpec::Competitive { .. } => "competitive",
        }
    }

    pub fn build(&self, n: usize, horizon: u64) -> Allocator<f64> {
        match *self {
            AllocatorSpec::Uniform => Allocator::uniform(n),
            AllocatorSpec::Gated {
                base_step,
                step_exponent,
            } => Allocator::gated(n, n, base_step, step_exponent),
            AllocatorSpec::Competitive { eta, anytime } => {
                let schedule = match (eta, anytime) {
                    (Some(e), _) => EtaSchedule::Explicit(e),
                    (None, true) => EtaSchedule::Anytime,
                    (None, false) => EtaSchedule::FixedHorizon { horizon },
                };
                Allocator::competitive(n, schedule)
            }
        }
    }
}

/// One experiment: a graph, an environment, an allocator, and the grid of
/// horizons and seeds to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub environment: EnvironmentSpec,
    pub allocator: AllocatorSpec,
    /// Sorted ascending.
    pub horizons: Vec<u64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub reward_mode: RewardMode,
    #[serde(default)]
    pub features: FeatureScheme,
    /// Additional allocators for the slope-separation sweep; the primary
    /// `allocator` is always included.
    #[serde(default)]
    pub allocators: Vec<AllocatorSpec>,
    /// Topology list for the topology sweep; must share `n` and `lambda`.
    #[serde(default)]
    pub topologies: Vec<GraphSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::Config("horizons must be nonempty".into()));
        }
        if !self.horizons.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "horizons must be sorted strictly ascending".into(),
            ));
        }
        if self.horizons[0] < 1 {
            return Err(Error::Config("horizons must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        let g = self.graph.build()?;
        // Environment parameter validation without running.
        Environment::<f64>::new(&self.environment, g.n(), self.horizons[0], 0)?;
        for topology in &self.topologies {
            let tg = topology.build()?;
            if tg.n() != g.n() || tg.lambda() != g.lambda() {
                return Err(Error::Config(format!(
                    "topology '{}' does not share n and lambda with the base graph",
                    topology.label()
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// All allocators this config covers (primary first, deduplicated).
    pub fn allocator_list(&self) -> Vec<AllocatorSpec> {
        let mut list = vec![self.allocator.clone()];
        for spec in &self.allocators {
            if !list.contains(spec) {
                list.push(spec.clone());
            }
        }
        list
    }
}

/// One round of a run, as dumped to trace files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    pub a: Vec<f64>,
    pub v: Vec<f64>,
    pub reward: Vec<f64>,
    pub payoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run_id: String,
    pub rounds: Vec<RoundRecord>,
    /// Total sup-norm variation of the value sequence.
    pub variation: f64,
}

/// One output row; `wall_seconds` is informational (the only
/// nondeterministic field).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub topology: String,
    pub n: usize,
    pub m_directed: usize,
    pub d_max: usize,
    pub kappa: usize,
    pub lambda: f64,
    pub allocator: String,
    pub environment: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub static_regret: f64,
    pub dynamic_regret: f64,
    pub truthfulness_gap: Option<f64>,
    pub cost_units: usize,
    pub cost_product: f64,
    pub wall_seconds: f64,
}

pub const CSV_HEADER: &str = "topology,n,m_directed,d_max,kappa,lambda,allocator,environment,T,seed,static_regret,dynamic_regret,truthfulness_gap,cost_units,cost_product,wall_seconds";

impl ResultRow {
    pub fn run_id(&self) -> String {
        format!(
            "{}-{}-{}-T{}-seed{}",
            self.topology, self.allocator, self.environment, self.horizon, self.seed
        )
    }

    pub fn csv_line(&self) -> String {
        let gap = match self.truthfulness_gap {
            Some(g) => format!("{g}"),
            None => "nan".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.topology,
            self.n,
            self.m_directed,
            self.d_max,
            self.kappa,
            self.lambda,
            self.allocator,
            self.environment,
            self.horizon,
            self.seed,
            self.static_regret,
            self.dynamic_regret,
            gap,
            self.cost_units,
            self.cost_product,
            self.wall_seconds
        )
    }
}

/// Abstract per-step work: one unit per module plus one per ordered edge.
pub fn per_step_cost_units(g: &InteractionGraph<f64>) -> usize {
    g.n() + g.m_directed()
}

/// `C_T = T * (n + m) * static_regret`, implemented literally.
pub fn cost_product(horizon: u64, cost_units: usize, static_regret: f64) -> f64 {
    horizon as f64 * cost_units as f64 * static_regret
}

/// Executes the four-step round protocol for `horizon` rounds: the allocator
/// commits `a_t`, the environment reveals `v_t`, payoff and rewards are
/// computed, and the allocator observes the feedback.
pub fn run_once(
    config: &ExperimentConfig,
    horizon: u64,
    seed: u64,
) -> Result<(RunTrace, ResultRow)> {
    let started = Instant::now();
    let graph = config.graph.build()?;
    let n = graph.n();
    let topo: TopologyStats = stats(&graph);
    let mut env = Environment::<f64>::new(&config.environment, n, horizon, seed)?;
    let mut allocator = config.allocator.build(n, horizon);
    let gated = matches!(config.allocator, AllocatorSpec::Gated { .. });
    let mut feature_rng = ChaCha8Rng::seed_from_u64(seed);
    feature_rng.set_stream(FEATURE_STREAM);

    let mut rounds = Vec::with_capacity(horizon as usize);
    let mut allocations = Vec::with_capacity(horizon as usize);
    let mut values = Vec::with_capacity(horizon as usize);
    let mut payoffs = Vec::with_capacity(horizon as usize);
    let mut tracker = VariationTracker::<f64>::new();
    let mut prev_value: Option<ValueVector<f64>> = None;

    for t in 1..=horizon {
        let v = env.next_value(t)?;
        let features = if gated {
            Some(make_features(&v, config.features, &mut feature_rng))
        } else {
            None
        };
        let a = allocator.allocate(features.as_deref())?;
        let p = payoff(&a, &v, &graph)?;
        let r = reward(&a, &v, &graph, config.reward_mode)?;
        allocator.observe(&Feedback {
            values: v.clone(),
            rewards: r.clone(),
            payoff: p,
            features,
        })?;
        if let Some(prev) = &prev_value {
            tracker.update(prev, &v)?;
        }
        rounds.push(RoundRecord {
            t,
            a: a.weights().to_vec(),
            v: v.values().to_vec(),
            reward: r.rewards,
            payoff: p,
        });
        allocations.push(a);
        payoffs.push(p);
        prev_value = Some(v.clone());
        values.push(v);
    }

    let ledger = RegretLedger::from_trace(&values, &payoffs, &graph)?;
    let gap = match truthfulness_gap(&allocations, &values, &graph, horizon as usize) {
        Ok(g) => Some(g.aggregate),
        Err(Error::TruthfulnessUndefined { .. }) => None,
        Err(e) => return Err(e),
    };
    if !ledger.static_regret.is_finite() || !ledger.dynamic_regret.is_finite() {
        return Err(Error::IncompleteTrace(format!(
            "non-finite regret: static {} dynamic {}",
            ledger.static_regret, ledger.dynamic_regret
        )));
    }

    let cost_units = per_step_cost_units(&graph);
    let row = ResultRow {
        topology: config.graph.label().to_string(),
        n,
        m_directed: topo.m_directed,
        d_max: topo.d_max,
        kappa: topo.kappa,
        lambda: graph.lambda(),
        allocator: config.allocator.label().to_string(),
        environment: config.environment.label().to_string(),
        horizon,
        seed,
        static_regret: ledger.static_regret,
        dynamic_regret: ledger.dynamic_regret,
        truthfulness_gap: gap,
        cost_units,
        cost_product: cost_product(horizon, cost_units, ledger.static_regret),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    let trace = RunTrace {
        run_id: row.run_id(),
        rounds,
        variation: tracker.total(),
    };
    Ok((trace, row))
}

/// Checks that every recorded payoff re-evaluates exactly from `(a_t, v_t)`.
pub fn verify_trace(trace: &RunTrace, graph: &InteractionGraph<f64>) -> Result<()> {
    for round in &trace.rounds {
        let a = Allocation::new(round.a.clone())?;
        let v = ValueVector::new(round.v.clone())?;
        let p = payoff(&a, &v, graph)?;
        if p != round.payoff {
            return Err(Error::IncompleteTrace(format!(
                "round {}: recorded payoff {} does not re-evaluate ({})",
                round.t, round.payoff, p
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: ResultRow,
    pub trace: Option<RunTrace>,
}

/// Expands `(config x horizon x seed)` jobs and runs them on a bounded
/// worker pool. Rows come back sorted regardless of completion order.
pub fn run_batch(
    configs: &[ExperimentConfig],
    workers: usize,
    keep_traces: bool,
) -> Result<Vec<RunOutcome>> {
    let mut jobs: Vec<(&ExperimentConfig, u64, u64)> = Vec::new();
    for config in configs {
        for &horizon in &config.horizons {
            for &seed in &config.seeds {
                jobs.push((config, horizon, seed));
            }
        }
    }
    let workers = workers.max(1).min(jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<Option<Result<RunOutcome>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= jobs.len() {
                    break;
                }
                let (config, horizon, seed) = jobs[index];
                let outcome = run_once(config, horizon, seed).map(|(trace, row)| RunOutcome {
                    row,
                    trace: keep_traces.then_some(trace),
                });
                outcomes.lock().expect("worker poisoned the queue")[index] = Some(outcome);
            });
        }
    });

    let mut results = Vec::with_capacity(jobs.len());
    for slot in outcomes.into_inner().expect("worker poisoned the queue") {
        results.push(slot.expect("every job ran")?);
    }
    results.sort_by(|a, b| {
        (
            &a.row.topology,
            &a.row.allocator,
            &a.row.environment,
            a.row.horizon,
            a.row.seed,
        )
            .cmp(&(
                &b.row.topology,
                &b.row.allocator,
                &b.row.environment,
                b.row.horizon,
                b.row.seed,
            ))
    });
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on `(ln T, ln regret)`. Callers should average
/// regret over seeds first; per-seed values can dip nonpositive at small
/// horizons, which is an error here.
pub fn slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 4 {
        return Err(Error::SlopeFit(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(t, r) in points {
        if t <= 0.0 || r <= 0.0 {
            return Err(Error::SlopeFit(format!(
                "nonpositive point (T={t}, regret={r}); average over seeds first"
            )));
        }
        xs.push(t.ln());
        ys.push(r.ln());
    }
    let n = points.len() as f64;
    let mean_x: f64 = xs.iter().sum::<f64>() / n;
    let mean_y: f64 = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::SlopeFit("all horizons identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let predicted = intercept + slope * x;
        ss_res += (y - predicted) * (y - predicted);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(SlopeFit {
        exponent: slope,
        coefficient: intercept.exp(),
        r_squared,
    })
}

/// Mean static regret per horizon (averaged over seeds), as slope-fit input.
pub fn mean_regret_by_horizon(rows: &[ResultRow]) -> Vec<(f64, f64)> {
    let mut horizons: Vec<u64> = rows.iter().map(|r| r.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    horizons
        .into_iter()
        .map(|h| {
            let group: Vec<f64> = rows
                .iter()
                .filter(|r| r.horizon == h)
                .map(|r| r.static_regret)
                .collect();
            (h as f64, group.iter().sum::<f64>() / group.len() as f64)
        })
        .collect()
}

/// Per-topology aggregate of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologyGroup {
    pub topology: String,
    pub runs: usize,
    pub mean_cost_product: f64,
    pub mean_static_regret: f64,
    /// True when the topology misses the per-vertex coop+comp requirement
    /// or is disconnected.
    pub constraint_violation: bool,
}

/// Runs the configured allocator over every topology in
/// `config.topologies` (plus the base graph) across all horizons and seeds.
pub fn topology_sweep(config: &ExperimentConfig, workers: usize) -> Result<SweepOutcome> {
    let mut specs = vec![config.graph.clone()];
    for t in &config.topologies {
        if !specs.contains(t) {
            specs.push(t.clone());
        }
    }
    let configs: Vec<ExperimentConfig> = specs
        .iter()
        .map(|spec| {
            let mut c = config.clone();
            c.graph = spec.clone();
            c.topologies = Vec::new();
            c
        })
        .collect();
    let outcomes = run_batch(&configs, workers, false)?;
    let rows: Vec<ResultRow> = outcomes.into_iter().map(|o| o.row).collect();
    let mut groups = Vec::with_capacity(specs.len());
    for spec in &specs {
        let graph = spec.build()?;
        let topo = stats(&graph);
        let group: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| r.topology == spec.label())
            .collect();
        let runs = group.len();
        let mean_cost_product =
            group.iter().map(|r| r.cost_product).sum::<f64>() / runs as f64;
        let mean_static_regret =
            group.iter().map(|r| r.static_regret).sum::<f64>() / runs as f64;
        groups.push(TopologyGroup {
            topology: spec.label().to_string(),
            runs,
            mean_cost_product,
            mean_static_regret,
            constraint_violation: !topo.has_coop_and_comp_per_vertex || !topo.connected,
        });
    }
    groups.sort_by(|a, b| {
        a.mean_cost_product
            .partial_cmp(&b.mean_cost_product)
            .expect("finite products")
    });
    Ok(SweepOutcome { rows, groups })
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<ResultRow>,
    pub groups: Vec<TopologyGroup>,
}

/// Writes `results.csv` and `results.jsonl` into `outdir`.
pub fn write_results(rows: &[ResultRow], outdir: &Path) -> Result<()> {
    fs::create_dir_all(outdir)?;
    let mut csv = String::with_capacity(rows.len() * 128);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    fs::write(outdir.join("results.csv"), csv)?;

    let mut jsonl = fs::File::create(outdir.join("results.jsonl"))?;
    for row in rows {
        serde_json::to_writer(&mut jsonl, row)?;
        jsonl.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes `traces/<run-id>.jsonl`, one round per line.
pub fn write_trace(trace: &RunTrace, outdir: &Path) -> Result<()> {
    let dir = outdir.join("traces");
    fs::create_dir_all(&dir)?;
    let mut file = fs::File::create(dir.join(format!("{}.jsonl", trace.run_id)))?;
    for round in &trace.rounds {
        serde_json::to_writer(&mut file, round)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

/// Truthfulness gap evaluated at several windows of one trace.
pub fn truthfulness_series(
    trace: &RunTrace,
    graph: &InteractionGraph<f64>,
    windows: &[usize],
) -> Result<Vec<(usize, Option<f64>)>> {
    let allocations: Vec<Allocation<f64>> = trace
        .rounds
        .iter()
        .map(|r| Allocation::new(r.a.clone()))
        .collect::<Result<_>>()?;
    let values: Vec<ValueVector<f64>> = trace
        .rounds
        .iter()
        .map(|r| ValueVector::new(r.v.clone()))
        .collect::<Result<_>>()?;
    let mut series = Vec::with_capacity(windows.len());
    for &window in windows {
        let gap = match truthfulness_gap(&allocations, &values, graph, window) {
            Ok(g) => Some(g.aggregate),
            Err(Error::TruthfulnessUndefined { .. }) => None,
            Err(e) => return Err(e),
        };
        series.push((window, gap));
    }
    Ok(series)
}
