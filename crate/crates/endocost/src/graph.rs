//! Interaction matrices and their topologies.
//!
//! An [`InteractionGraph`] holds the dense coupling matrix `W` (zero
//! diagonal, entries in `[-1, 1]` for assumption-valid graphs), the ordered
//! directed edge set `E = {(i, j) : W_ij != 0}`, and the coupling strength
//! `lambda`. Builders cover the topologies used by the experiment sweeps:
//! full, ring, star, random-sparse, Wuxing, and generalized Wuxing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense interaction matrix with its directed edge set.
///
/// Immutable after construction; safe to share across concurrent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph<S: Scalar> {
    n: usize,
    lambda: S,
    entries: Vec<S>,
    edges: Vec<(usize, usize)>,
}

impl<S: Scalar> InteractionGraph<S> {
    /// Builds a graph from a row-major `n * n` entry matrix.
    ///
    /// Entries are taken as-is (including a nonzero diagonal), so that
    /// [`validate_assumptions`] can report violations on arbitrary input.
    pub fn from_entries(n: usize, lambda: S, entries: Vec<S>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("module count {n} < 2")));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        if lambda < S::zero() || !lambda.is_finite() {
            return Err(Error::InvalidWeight(format!(
                "coupling strength must be finite and >= 0, got {lambda}"
            )));
        }
        if entries.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidWeight("non-finite matrix entry".into()));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if entries[i * n + j] != S::zero() {
                    edges.push((i, j));
                }
            }
        }
        // Row-major scan already yields lexicographic order.
        Ok(Self {
            n,
            lambda,
            entries,
            edges,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    pub fn weight(&self, i: usize, j: usize) -> S {
        self.entries[i * self.n + j]
    }

    /// Directed edges `(i, j)` with `W_ij != 0`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn m_directed(&self) -> usize {
        self.edges.len()
    }

    /// Undirected simple adjacency: `{i, j}` linked iff `W_ij != 0` or `W_ji != 0`.
    fn undirected_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.weight(i, j) != S::zero() || self.weight(j, i) != S::zero() {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    pub fn to_json(&self) -> GraphJson
    where
        S: Serialize,
    {
        GraphJson {
            n: self.n,
            lambda: self.lambda.to_f64_lossy(),
            entries: self.entries.iter().map(|w| w.to_f64_lossy()).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        InteractionGraph::from_entries(
            json.n,
            S::from_real(json.lambda),
            json.entries.iter().map(|w| S::from_real(*w)).collect(),
        )
    }
}

/// Wire form of a graph: `{n, lambda, entries}` with row-major entries.
/// serde_json renders f64 with shortest round-trip decimals, so IEEE-754
/// doubles survive a round trip bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub lambda: f64,
    pub entries: Vec<f64>,
}

/// Derived statistics of the underlying undirected simple graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyStats {
    pub m_directed: usize,
    pub m_undirected: usize,
    pub d_max: usize,
    /// Edge connectivity; 0 when disconnected.
    pub kappa: usize,
    pub has_coop_and_comp_per_vertex: bool,
    pub connected: bool,
}

/// Full graph: every off-diagonal entry nonzero, signs alternating with the
/// parity of `i + j` so every vertex carries both edge types.
pub fn build_full<S: Scalar>(
    n: usize,
    w_coop: S,
    w_comp: S,
    lambda: S,
) -> Result<InteractionGraph<S>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("full graph needs n >= 2, got {n}")));
    }
    if w_coop == S::zero() || w_comp == S::zero() {
        return Err(Error::InvalidWeight(
            "full graph weights must be nonzero".into(),
        ));
    }
    let mut entries = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                entries[i * n + j] = if (i + j) % 2 == 0 { w_coop } else { w_comp };
            }
        }
    }
    InteractionGraph::from_entries(n, lambda, entries)
}

/// Wuxing topology: five vertices, cooperative cycle `(i, i+1)` plus
/// competitive pentagram `(i, i+2)`.
pub fn build_wuxing<S: Scalar>(lambda: S, w_sheng: S, w_ke: S) -> Result<InteractionGraph<S>> {
    if w_sheng <= S::zero() {
        return Err(Error::InvalidWeight(format!(
            "cooperative weight must be > 0, got {w_sheng}"
        )));
    }
    if w_ke >= S::zero() {
        return Err(Error::InvalidWeight(format!(
            "competitive weight must be < 0, got {w_ke}"
        )));
    }
    build_generalized_wuxing(5, lambda, w_sheng, w_ke)
}

/// Generalized Wuxing on `n >= 5` vertices: cooperative edges `(i, i+1 mod n)`,
/// competitive edges `(i, i + floor(n/2) mod n)`.
pub fn build_generalized_wuxing<S: Scalar>(
    n: usize,
    lambda: S,
    w_sheng: S,
    w_ke: S,
) -> Result<InteractionGraph<S>> {
    if n < 5 {
        return Err(Error::InvalidSize(format!(
            "generalized Wuxing needs n >= 5, got {n}"
        )));
    }
    if w_sheng <= S::zero() {
        return Err(Error::InvalidWeight(format!(
            "cooperative weight must be > 0, got {w_sheng}"
        )));
    }
    if w_ke >= S::zero() {
        return Err(Error::InvalidWeight(format!(
            "competitive weight must be < 0, got {w_ke}"
        )));
    }
    let mut entries = vec![S::zero(); n * n];
    let half = n / 2;
    for i in 0..n {
        entries[i * n + (i + 1) % n] = w_sheng;
        entries[i * n + (i + half) % n] = w_ke;
    }
    InteractionGraph::from_entries(n, lambda, entries)
}

/// Bidirectional ring: `W_{i,i+1} = W_{i+1,i} = w`.
pub fn build_ring<S: Scalar>(n: usize, lambda: S, w: S) -> Result<InteractionGraph<S>> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    if w == S::zero() {
        return Err(Error::InvalidWeight("ring weight must be nonzero".into()));
    }
    let mut entries = vec![S::zero(); n * n];
    for i in 0..n {
        let j = (i + 1) % n;
        entries[i * n + j] = w;
        entries[j * n + i] = w;
    }
    InteractionGraph::from_entries(n, lambda, entries)
}

/// Bidirectional star with hub 0.
pub fn build_star<S: Scalar>(n: usize, lambda: S, w: S) -> Result<InteractionGraph<S>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("star needs n >= 2, got {n}")));
    }
    if w == S::zero() {
        return Err(Error::InvalidWeight("star weight must be nonzero".into()));
    }
    let mut entries = vec![S::zero(); n * n];
    for i in 1..n {
        entries[i] = w; // (0, i)
        entries[i * n] = w; // (i, 0)
    }
    InteractionGraph::from_entries(n, lambda, entries)
}

const RANDOM_SPARSE_MAX_RETRIES: usize = 1000;

/// Random sparse graph with `m_target` directed edges, resampled until the
/// underlying undirected graph is connected and every vertex has at least one
/// cooperative and one competitive incident edge.
pub fn build_random_sparse<S: Scalar>(
    n: usize,
    m_target: usize,
    lambda: S,
    seed: u64,
) -> Result<InteractionGraph<S>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!(
            "random sparse graph needs n >= 2, got {n}"
        )));
    }
    if m_target > n * (n - 1) {
        return Err(Error::InvalidSize(format!(
            "m_target {m_target} exceeds n(n-1) = {}",
            n * (n - 1)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_pairs: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                all_pairs.push((i, j));
            }
        }
    }
    for _ in 0..RANDOM_SPARSE_MAX_RETRIES {
        let mut pairs = all_pairs.clone();
        pairs.shuffle(&mut rng);
        pairs.truncate(m_target);
        let mut entries = vec![S::zero(); n * n];
        for &(i, j) in &pairs {
            let magnitude = rng.gen_range(0.3..=1.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            entries[i * n + j] = S::from_real(sign * magnitude);
        }
        let graph = InteractionGraph::from_entries(n, lambda, entries)?;
        let stats = stats(&graph);
        if stats.connected && stats.has_coop_and_comp_per_vertex {
            return Ok(graph);
        }
    }
    Err(Error::ConstructionFailed(format!(
        "random sparse graph (n={n}, m_target={m_target}, seed={seed}): retry budget of \
         {RANDOM_SPARSE_MAX_RETRIES} exhausted"
    )))
}

/// Topology statistics of the underlying undirected simple graph. Edge
/// connectivity is exact, via unit-capacity max-flow from vertex 0 to every
/// other vertex.
pub fn stats<S: Scalar>(graph: &InteractionGraph<S>) -> TopologyStats {
    let n = graph.n();
    let pairs = graph.undirected_pairs();
    let mut degree = vec![0usize; n];
    for &(i, j) in &pairs {
        degree[i] += 1;
        degree[j] += 1;
    }
    let d_max = degree.iter().copied().max().unwrap_or(0);
    let connected = is_connected(n, &pairs);
    let kappa = if connected {
        (1..n)
            .map(|t| max_flow_unit(n, &pairs, 0, t))
            .min()
            .unwrap_or(0)
    } else {
        0
    };
    let mut has_coop = vec![false; n];
    let mut has_comp = vec![false; n];
    for &(i, j) in graph.edges() {
        let w = graph.weight(i, j);
        if w > S::zero() {
            has_coop[i] = true;
            has_coop[j] = true;
        } else {
            has_comp[i] = true;
            has_comp[j] = true;
        }
    }
    let has_coop_and_comp_per_vertex = (0..n).all(|v| has_coop[v] && has_comp[v]);
    TopologyStats {
        m_directed: graph.m_directed(),
        m_undirected: pairs.len(),
        d_max,
        kappa,
        has_coop_and_comp_per_vertex,
        connected,
    }
}

fn is_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

/// Edmonds-Karp with unit capacities. Each undirected edge becomes a pair of
/// antiparallel arcs of capacity 1, which is the standard reduction for
/// undirected edge connectivity.
fn max_flow_unit(n: usize, pairs: &[(usize, usize)], source: usize, sink: usize) -> usize {
    // residual[v][k] = (to, capacity, index of reverse arc in residual[to])
    let mut residual: Vec<Vec<(usize, i32, usize)>> = vec![Vec::new(); n];
    for &(i, j) in pairs {
        let ri = residual[i].len();
        let rj = residual[j].len();
        residual[i].push((j, 1, rj));
        residual[j].push((i, 1, ri));
    }
    let mut flow = 0usize;
    loop {
        // BFS for an augmenting path.
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(source);
        let mut reached = false;
        'bfs: while let Some(v) = queue.pop_front() {
            for (k, &(to, cap, _)) in residual[v].iter().enumerate() {
                if cap > 0 && to != source && parent[to].is_none() {
                    parent[to] = Some((v, k));
                    if to == sink {
                        reached = true;
                        break 'bfs;
                    }
                    queue.push_back(to);
                }
            }
        }
        if !reached {
            return flow;
        }
        // Unit capacities: each augmenting path carries exactly 1.
        let mut v = sink;
        while v != source {
            let (u, k) = parent[v].expect("path must be complete");
            let rev = residual[u][k].2;
            residual[u][k].1 -= 1;
            residual[v][rev].1 += 1;
            v = u;
        }
        flow += 1;
    }
}

/// Report produced by [`validate_assumptions`]; report-only, never an error.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub violations: Vec<String>,
    /// `lambda * n`, the spectral-norm proxy for the coupling term.
    pub lambda_n: f64,
    pub spectral_ok: bool,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks zero diagonal, `|W_ij| <= 1`, and `lambda <= 1/(2n)`.
pub fn validate_assumptions<S: Scalar>(graph: &InteractionGraph<S>) -> AssumptionReport {
    let n = graph.n();
    let mut violations = Vec::new();
    for i in 0..n {
        if graph.weight(i, i) != S::zero() {
            violations.push(format!("nonzero diagonal at W[{i}][{i}] = {}", graph.weight(i, i)));
        }
    }
    for &(i, j) in graph.edges() {
        if graph.weight(i, j).abs() > S::one() {
            violations.push(format!(
                "weight magnitude exceeds 1 at W[{i}][{j}] = {}",
                graph.weight(i, j)
            ));
        }
    }
    let lambda = graph.lambda().to_f64_lossy();
    let bound = 1.0 / (2.0 * n as f64);
    if lambda > bound {
        violations.push(format!("lambda exceeds 1/(2N): {lambda} > {bound}"));
    }
    let lambda_n = lambda * n as f64;
    AssumptionReport {
        violations,
        lambda_n,
        spectral_ok: lambda_n <= 0.5,
    }
}
