//! Regret measurement: best-fixed and per-round optimal allocations via a
//! simplex-constrained quadratic solver, static and dynamic regret, and the
//! cost-truthfulness metric.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::payoff::{reward, Allocation, RewardMode, ValueVector};
use crate::scalar::Scalar;

pub const QP_TOLERANCE: f64 = 1e-10;
pub const QP_MAX_ITERATIONS: usize = 100_000;

/// Maximizes `lin . a + lambda a^T W a` over the probability simplex by
/// projected gradient ascent with step `1/L`, `L = 1 + lambda n`.
///
/// The coupling term can be indefinite on the simplex tangent space, so the
/// solver restarts from the uniform point and every vertex and keeps the best
/// stationary point found.
pub struct SimplexQp<'a, S: Scalar> {
    linear: Vec<S>,
    graph: &'a InteractionGraph<S>,
    tolerance: S,
    max_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct QpSolution<S: Scalar> {
    pub allocation: Allocation<S>,
    pub objective: S,
    pub kkt_residual: S,
    pub iterations: usize,
}

impl<'a, S: Scalar> SimplexQp<'a, S> {
    pub fn new(linear: Vec<S>, graph: &'a InteractionGraph<S>) -> Result<Self> {
        if linear.len() != graph.n() {
            return Err(Error::DimensionMismatch {
                expected: graph.n(),
                got: linear.len(),
            });
        }
        Ok(Self {
            linear,
            graph,
            tolerance: S::from_real(QP_TOLERANCE),
            max_iterations: QP_MAX_ITERATIONS,
        })
    }

    fn objective(&self, a: &[S]) -> S {
        let mut direct = S::zero();
        for (x, q) in a.iter().zip(&self.linear) {
            direct += *x * *q;
        }
        let mut coupled = S::zero();
        for &(i, j) in self.graph.edges() {
            coupled += self.graph.weight(i, j) * a[i] * a[j];
        }
        direct + self.graph.lambda() * coupled
    }

    fn gradient(&self, a: &[S]) -> Vec<S> {
        let mut grad = self.linear.clone();
        for &(i, j) in self.graph.edges() {
            let w = self.graph.lambda() * self.graph.weight(i, j);
            grad[i] += w * a[j];
            grad[j] += w * a[i];
        }
        grad
    }

    /// One projected gradient step plus the projected-gradient norm at `a`.
    fn pg_step(&self, a: &[S], step: S) -> (Vec<S>, S) {
        let grad = self.gradient(a);
        let moved: Vec<S> = a.iter().zip(&grad).map(|(x, g)| *x + step * *g).collect();
        let next = project_to_simplex(&moved);
        let mut norm_sq = S::zero();
        for (x, y) in a.iter().zip(&next) {
            let d = *x - *y;
            norm_sq += d * d;
        }
        (next, norm_sq.sqrt() / step)
    }

    /// Exact stationarity solve on the face spanned by the current active
    /// set: equal gradients across active coordinates, weights summing to
    /// one. Returns a candidate only if it lands in the nonnegative orthant;
    /// the caller re-verifies it with the projected-gradient test, so a
    /// wrong active-set guess is merely ignored.
    fn polish(&self, a: &[S]) -> Vec<Vec<S>> {
        let n = self.graph.n();
        let mut active: Vec<usize> = (0..n).filter(|&i| a[i] > S::zero()).collect();
        let grad = self.gradient(a);
        let mut candidates = Vec::new();
        // Shrink the face greedily: near-ties make the full-face system
        // singular (or its solution infeasible) while the optimum sits on a
        // sub-face, so drop the smallest-gradient coordinate and retry.
        while !active.is_empty() {
            if let Some(candidate) = self.face_stationary_point(&active) {
                candidates.push(candidate);
            }
            if active.len() == 1 {
                break;
            }
            let drop_pos = (0..active.len())
                .min_by(|&p, &q| {
                    grad[active[p]]
                        .partial_cmp(&grad[active[q]])
                        .expect("finite gradient")
                })
                .expect("nonempty active set");
            active.remove(drop_pos);
        }
        candidates
    }

    fn face_stationary_point(&self, active: &[usize]) -> Option<Vec<S>> {
        let n = self.graph.n();
        let k = active.len();
        if k == 1 {
            let mut vertex = vec![S::zero(); n];
            vertex[active[0]] = S::one();
            return Some(vertex);
        }
        let dim = k + 1;
        let mut m = vec![S::zero(); dim * dim];
        let mut b = vec![S::zero(); dim];
        for (r, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate() {
                m[r * dim + c] =
                    self.graph.lambda() * (self.graph.weight(i, j) + self.graph.weight(j, i));
            }
            m[r * dim + k] = -S::one();
            b[r] = -self.linear[i];
        }
        for c in 0..k {
            m[k * dim + c] = S::one();
        }
        b[k] = S::one();
        let x = solve_dense(&mut m, &mut b, dim)?;
        let mut candidate = vec![S::zero(); n];
        for (c, &i) in active.iter().enumerate() {
            if x[c] < S::zero() {
                return None;
            }
            candidate[i] = x[c];
        }
        Some(candidate)
    }

    /// Runs projected gradient ascent from one start; returns the final
    /// iterate and its projected-gradient norm. Near-degenerate instances
    /// make plain gradient steps crawl (the norm decays like 1/k), so once
    /// the active set settles the face is polished with an exact solve.
    fn ascend(&self, mut a: Vec<S>) -> (Vec<S>, S, usize, bool) {
        const POLISH_PERIOD: usize = 100;
        let n = self.graph.n();
        let step = S::one()
            / (S::one() + self.graph.lambda() * S::from_usize_exact(n));
        for iter in 0..self.max_iterations {
            let (next, pg_norm) = self.pg_step(&a, step);
            a = next;
            if pg_norm <= self.tolerance {
                return (a, pg_norm, iter + 1, true);
            }
            if (iter + 1) % POLISH_PERIOD == 0 {
                for candidate in self.polish(&a) {
                    let (_, candidate_norm) = self.pg_step(&candidate, step);
                    if candidate_norm <= self.tolerance
                        && self.objective(&candidate) >= self.objective(&a) - self.tolerance
                    {
                        return (candidate, candidate_norm, iter + 1, true);
                    }
                }
            }
        }
        // Last resort for stalls the greedy polish cannot reach (the
        // optimum's face extends outside the stalled active set): enumerate
        // every face. Any point passing the projected-gradient test is a
        // KKT point, and the global maximum is one of them, so picking the
        // best-objective passer is exact.
        const EXHAUSTIVE_FACE_LIMIT: usize = 15;
        if n <= EXHAUSTIVE_FACE_LIMIT {
            let mut best: Option<(Vec<S>, S, S)> = None;
            for mask in 1u32..(1u32 << n) {
                let active: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
                if let Some(candidate) = self.face_stationary_point(&active) {
                    let (_, norm) = self.pg_step(&candidate, step);
                    if norm <= self.tolerance {
                        let objective = self.objective(&candidate);
                        if best.as_ref().map_or(true, |(_, _, o)| objective > *o) {
                            best = Some((candidate, norm, objective));
                        }
                    }
                }
            }
            if let Some((candidate, norm, _)) = best {
                return (candidate, norm, self.max_iterations, true);
            }
        }
        let (_, pg_norm) = self.pg_step(&a, step);
        (a, pg_norm, self.max_iterations, false)
    }

    pub fn solve(&self) -> Result<QpSolution<S>> {
        let n = self.graph.n();
        let mut starts = Vec::with_capacity(n + 1);
        starts.push(vec![S::one() / S::from_usize_exact(n); n]);
        for k in 0..n {
            let mut vertex = vec![S::zero(); n];
            vertex[k] = S::one();
            starts.push(vertex);
        }
        let mut best: Option<QpSolution<S>> = None;
        for start in starts {
            let (a, pg_norm, iterations, converged) = self.ascend(start);
            if !converged {
                return Err(Error::SolverDidNotConverge {
                    grad_norm: pg_norm.to_f64_lossy(),
                    iterations,
                    last_iterate: a.iter().map(|x| x.to_f64_lossy()).collect(),
                });
            }
            let objective = self.objective(&a);
            if best.as_ref().map_or(true, |b| objective > b.objective) {
                best = Some(QpSolution {
                    allocation: Allocation::new(a)?,
                    objective,
                    kkt_residual: pg_norm,
                    iterations,
                });
            }
        }
        Ok(best.expect("at least one start"))
    }
}

/// In-place Gaussian elimination with partial pivoting; `None` on a
/// (near-)singular system.
fn solve_dense<S: Scalar>(m: &mut [S], b: &mut [S], dim: usize) -> Option<Vec<S>> {
    let tiny = S::from_real(1e-12);
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r1, &r2| {
                m[r1 * dim + col]
                    .abs()
                    .partial_cmp(&m[r2 * dim + col].abs())
                    .expect("finite entries")
            })
            .expect("nonempty range");
        if m[pivot_row * dim + col].abs() <= tiny {
            return None;
        }
        if pivot_row != col {
            for c in 0..dim {
                m.swap(col * dim + c, pivot_row * dim + c);
            }
            b.swap(col, pivot_row);
        }
        for row in (col + 1)..dim {
            let factor = m[row * dim + col] / m[col * dim + col];
            if factor == S::zero() {
                continue;
            }
            for c in col..dim {
                let delta = factor * m[col * dim + c];
                m[row * dim + c] -= delta;
            }
            let delta = factor * b[col];
            b[row] -= delta;
        }
    }
    let mut x = vec![S::zero(); dim];
    for row in (0..dim).rev() {
        let mut acc = b[row];
        for c in (row + 1)..dim {
            acc -= m[row * dim + c] * x[c];
        }
        x[row] = acc / m[row * dim + row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x)
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_to_simplex<S: Scalar>(point: &[S]) -> Vec<S> {
    let mut sorted: Vec<S> = point.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coordinates"));
    let mut cumulative = S::zero();
    let mut theta = S::zero();
    let mut support = 0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let k1 = S::from_usize_exact(k + 1);
        let candidate = (cumulative - S::one()) / k1;
        if u - candidate > S::zero() {
            theta = candidate;
            support = k + 1;
        }
    }
    debug_assert!(support >= 1);
    let _ = support;
    point
        .iter()
        .map(|&x| (x - theta).max(S::zero()))
        .collect()
}

/// Best fixed allocation in hindsight. Uses the mean-value reduction: the
/// cumulative payoff of a fixed `a` is `T * (a . v_mean + lambda a^T W a)`,
/// so a single QP solve suffices.
pub fn best_fixed<S: Scalar>(
    values: &[ValueVector<S>],
    graph: &InteractionGraph<S>,
) -> Result<QpSolution<S>> {
    if values.is_empty() {
        return Err(Error::IncompleteTrace("empty value sequence".into()));
    }
    let mean = mean_values(values, graph.n())?;
    SimplexQp::new(mean, graph)?.solve()
}

fn mean_values<S: Scalar>(values: &[ValueVector<S>], n: usize) -> Result<Vec<S>> {
    let mut mean = vec![S::zero(); n];
    for v in values {
        if v.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.n(),
            });
        }
        for (m, x) in mean.iter_mut().zip(v.values()) {
            *m += *x;
        }
    }
    let count = S::from_real(values.len() as f64);
    for m in mean.iter_mut() {
        *m /= count;
    }
    Ok(mean)
}

/// Per-round optimal allocation and payoff for a single value vector.
pub fn per_round_opt<S: Scalar>(
    value: &ValueVector<S>,
    graph: &InteractionGraph<S>,
) -> Result<(Allocation<S>, S)> {
    let solution = SimplexQp::new(value.values().to_vec(), graph)?.solve()?;
    Ok((solution.allocation, solution.objective))
}

/// Static regret: cumulative payoff gap to the best fixed allocation.
pub fn static_regret<S: Scalar>(
    values: &[ValueVector<S>],
    payoffs: &[S],
    graph: &InteractionGraph<S>,
) -> Result<S> {
    if values.len() != payoffs.len() || values.is_empty() {
        return Err(Error::IncompleteTrace(format!(
            "values ({}) and payoffs ({}) must be nonempty and equal-length",
            values.len(),
            payoffs.len()
        )));
    }
    let solution = best_fixed(values, graph)?;
    let horizon = S::from_real(values.len() as f64);
    let realized: S = payoffs.iter().copied().sum();
    Ok(horizon * solution.objective - realized)
}

/// Dynamic regret: cumulative gap to the per-round optimum. Solutions are
/// memoized per distinct value vector (bit-exact key).
pub fn dynamic_regret<S: Scalar>(
    values: &[ValueVector<S>],
    payoffs: &[S],
    graph: &InteractionGraph<S>,
) -> Result<S> {
    if values.len() != payoffs.len() || values.is_empty() {
        return Err(Error::IncompleteTrace(format!(
            "values ({}) and payoffs ({}) must be nonempty and equal-length",
            values.len(),
            payoffs.len()
        )));
    }
    let mut cache: HashMap<Vec<u64>, S> = HashMap::new();
    let mut best_total = S::zero();
    for v in values {
        let key: Vec<u64> = v
            .values()
            .iter()
            .map(|x| x.to_f64_lossy().to_bits())
            .collect();
        let opt = match cache.get(&key) {
            Some(&p) => p,
            None => {
                let (_, p) = per_round_opt(v, graph)?;
                cache.insert(key, p);
                p
            }
        };
        best_total += opt;
    }
    let realized: S = payoffs.iter().copied().sum();
    Ok(best_total - realized)
}

/// Cost-truthfulness gap over the first `window` rounds: the time-averaged
/// L1 distance between the allocation and the normalized marginal
/// contributions. Also reports the worst per-module time-average.
#[derive(Debug, Clone)]
pub struct TruthfulnessGap<S: Scalar> {
    /// `(1/T') sum_t sum_i |a_{t,i} - mu_i(t) / sum_j mu_j(t)|`.
    pub aggregate: S,
    /// Maximum over modules of the per-module time-averaged gap.
    pub per_module_max: S,
}

pub fn truthfulness_gap<S: Scalar>(
    allocations: &[Allocation<S>],
    values: &[ValueVector<S>],
    graph: &InteractionGraph<S>,
    window: usize,
) -> Result<TruthfulnessGap<S>> {
    if window == 0 || window > allocations.len() || allocations.len() != values.len() {
        return Err(Error::IncompleteTrace(format!(
            "window {window} incompatible with trace of {} rounds",
            allocations.len()
        )));
    }
    let n = graph.n();
    let mut per_module = vec![S::zero(); n];
    for (t, (a, v)) in allocations.iter().zip(values).take(window).enumerate() {
        let mu = reward(a, v, graph, RewardMode::OutEdge)?.rewards;
        let total: S = mu.iter().copied().sum();
        if total <= S::zero() {
            return Err(Error::TruthfulnessUndefined {
                round: (t + 1) as u64,
                total: total.to_f64_lossy(),
            });
        }
        for (acc, (ai, mi)) in per_module.iter_mut().zip(a.weights().iter().zip(&mu)) {
            *acc += (*ai - *mi / total).abs();
        }
    }
    let count = S::from_real(window as f64);
    let mut aggregate = S::zero();
    let mut per_module_max = S::zero();
    for acc in per_module.iter_mut() {
        *acc /= count;
        aggregate += *acc;
        per_module_max = per_module_max.max(*acc);
    }
    Ok(TruthfulnessGap {
        aggregate,
        per_module_max,
    })
}

/// Per-run regret summary; filled after the run completes.
#[derive(Debug, Clone)]
pub struct RegretLedger<S: Scalar> {
    pub realized_payoff: S,
    pub best_fixed_payoff: S,
    pub per_round_opt_payoff: S,
    pub static_regret: S,
    pub dynamic_regret: S,
}

impl<S: Scalar> RegretLedger<S> {
    pub fn from_trace(
        values: &[ValueVector<S>],
        payoffs: &[S],
        graph: &InteractionGraph<S>,
    ) -> Result<Self> {
        let realized: S = payoffs.iter().copied().sum();
        let static_r = static_regret(values, payoffs, graph)?;
        let dynamic_r = dynamic_regret(values, payoffs, graph)?;
        Ok(Self {
            realized_payoff: realized,
            best_fixed_payoff: realized + static_r,
            per_round_opt_payoff: realized + dynamic_r,
            static_regret: static_r,
            dynamic_regret: dynamic_r,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_wuxing, validate_assumptions, InteractionGraph};
    use crate::payoff::payoff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vals(v: &[f64]) -> ValueVector<f64> {
        ValueVector::new(v.to_vec()).unwrap()
    }

    /// Exhaustive simplex-grid maximizer; independent oracle for the QP.
    fn grid_best(linear: &[f64], graph: &InteractionGraph<f64>, resolution: usize) -> f64 {
        let n = linear.len();
        let mut best = f64::NEG_INFINITY;
        let mut point = vec![0usize; n];
        fn recurse(
            coord: usize,
            remaining: usize,
            point: &mut Vec<usize>,
            best: &mut f64,
            linear: &[f64],
            graph: &InteractionGraph<f64>,
            resolution: usize,
        ) {
            let n = point.len();
            if coord == n - 1 {
                point[coord] = remaining;
                let a: Vec<f64> = point.iter().map(|&k| k as f64 / resolution as f64).collect();
                let mut obj = 0.0;
                for (x, q) in a.iter().zip(linear) {
                    obj += x * q;
                }
                let mut coupled = 0.0;
                for &(i, j) in graph.edges() {
                    coupled += graph.weight(i, j) * a[i] * a[j];
                }
                obj += graph.lambda() * coupled;
                if obj > *best {
                    *best = obj;
                }
                return;
            }
            for k in 0..=remaining {
                point[coord] = k;
                recurse(coord + 1, remaining - k, point, best, linear, graph, resolution);
            }
        }
        recurse(0, resolution, &mut point, &mut best, linear, graph, resolution);
        best
    }

    #[test]
    fn projection_basics() {
        let p = project_to_simplex(&[1.5f64, 0.5]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.2f64, 0.2, 0.2]);
        for x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = project_to_simplex(&[-5.0f64, 0.0, 1.0]);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn linear_objective_picks_vertex() {
        let g = InteractionGraph::from_entries(3, 0.0, vec![0.0; 9]).unwrap();
        let sol = best_fixed(&[vals(&[1.0, 0.0, 0.0])], &g).unwrap();
        assert!((sol.allocation.weights()[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 1.0).abs() < 1e-9);

        let sol = best_fixed(&[vals(&[0.1, 0.9, 0.3])], &g).unwrap();
        assert!((sol.allocation.weights()[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_objective_returns_simplex_point() {
        let g = InteractionGraph::from_entries(3, 0.0, vec![0.0; 9]).unwrap();
        let (a, p) = per_round_opt(&vals(&[0.4, 0.4, 0.4]), &g).unwrap();
        let sum: f64 = a.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((p - 0.4).abs() < 1e-12);
    }

    #[test]
    fn per_round_opt_on_vertex_value() {
        let g = InteractionGraph::from_entries(3, 0.0, vec![0.0; 9]).unwrap();
        let (_, p) = per_round_opt(&vals(&[0.0, 1.0, 0.0]), &g).unwrap();
        assert!((p - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wuxing_best_fixed_matches_grid_oracle() {
        let g = build_wuxing(0.1, 1.0, -1.0).unwrap();
        let v = [0.6, 0.5, 0.5, 0.5, 0.5];
        let sol = best_fixed(&[vals(&v)], &g).unwrap();
        let oracle = grid_best(&v, &g, 200);
        assert!(
            (sol.objective - oracle).abs() < 1e-3,
            "solver {} vs grid {}",
            sol.objective,
            oracle
        );
        assert!(sol.objective >= oracle - 1e-9, "grid cannot beat solver");
    }

    #[test]
    fn random_small_instances_match_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let n = rng.gen_range(2..=3);
            let lambda = rng.gen_range(0.0..0.5 / n as f64);
            let mut entries = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        entries[i * n + j] = rng.gen_range(-1.0..1.0);
                    }
                }
            }
            let g = InteractionGraph::from_entries(n, lambda, entries).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let sol = SimplexQp::new(v.clone(), &g).unwrap().solve().unwrap();
            let oracle = grid_best(&v, &g, 500);
            assert!(
                (sol.objective - oracle).abs() < 1e-3,
                "n={n}: solver {} vs grid {oracle}",
                sol.objective
            );
            assert!(sol.kkt_residual <= 1e-8);
        }
    }

    #[test]
    fn kkt_active_gradients_are_equal() {
        // At the maximizer the exact gradient is constant across active
        // coordinates (simplex KKT).
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let lambda = rng.gen_range(0.0..0.5 / n as f64);
            let mut entries = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.7) {
                        entries[i * n + j] = rng.gen_range(-1.0..1.0);
                    }
                }
            }
            let g = InteractionGraph::from_entries(n, lambda, entries).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let qp = SimplexQp::new(v, &g).unwrap();
            let sol = qp.solve().unwrap();
            let grad = qp.gradient(sol.allocation.weights());
            let active: Vec<f64> = sol
                .allocation
                .weights()
                .iter()
                .zip(&grad)
                .filter(|(a, _)| **a > 1e-9)
                .map(|(_, g)| *g)
                .collect();
            let lo = active.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = active.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo <= 1e-6, "active gradient spread {}", hi - lo);
        }
    }

    #[test]
    fn optimal_play_has_negligible_static_regret() {
        let g = build_wuxing(0.05, 1.0, -1.0).unwrap();
        let v = vals(&[0.6, 0.5, 0.5, 0.5, 0.5]);
        let sol = best_fixed(&[v.clone()], &g).unwrap();
        let horizon = 200;
        let values = vec![v; horizon];
        let payoffs: Vec<f64> = values
            .iter()
            .map(|vt| payoff(&sol.allocation, vt, &g).unwrap())
            .collect();
        let r = static_regret(&values, &payoffs, &g).unwrap();
        assert!(r.abs() <= 1e-6 * horizon as f64);
    }

    #[test]
    fn dynamic_regret_dominates_static() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = build_wuxing(0.05, 1.0, -1.0).unwrap();
        for _ in 0..5 {
            let horizon = 40;
            let values: Vec<ValueVector<f64>> = (0..horizon)
                .map(|_| vals(&std::array::from_fn::<f64, 5, _>(|_| rng.gen_range(0.0..1.0))))
                .collect();
            let payoffs: Vec<f64> = values
                .iter()
                .map(|v| payoff(&Allocation::uniform(5), v, &g).unwrap())
                .collect();
            let s = static_regret(&values, &payoffs, &g).unwrap();
            let d = dynamic_regret(&values, &payoffs, &g).unwrap();
            assert!(d >= s - 1e-9);
            assert!(d >= -1e-9);
        }
    }

    #[test]
    fn truthfulness_zero_for_proportional_play() {
        // Feed the allocator's own normalized marginals back as the
        // allocation via fixed-point iteration, then check the gap vanishes.
        let g = build_wuxing(0.05, 1.0, -1.0).unwrap();
        let v = vals(&[0.6, 0.5, 0.5, 0.4, 0.5]);
        let mut a = Allocation::<f64>::uniform(5);
        for _ in 0..200 {
            let mu = reward(&a, &v, &g, RewardMode::OutEdge).unwrap().rewards;
            let total: f64 = mu.iter().sum();
            a = Allocation::new(mu.into_iter().map(|m| m / total).collect()).unwrap();
        }
        let gap = truthfulness_gap(&[a], &[v], &g, 1).unwrap();
        assert!(gap.aggregate < 1e-10, "gap = {}", gap.aggregate);
        assert!(gap.per_module_max <= gap.aggregate + 1e-15);
    }

    #[test]
    fn truthfulness_uniform_substitution() {
        let g = InteractionGraph::from_entries(2, 0.0, vec![0.0; 4]).unwrap();
        let gap = truthfulness_gap(
            &[Allocation::uniform(2)],
            &[vals(&[0.8, 0.2])],
            &g,
            1,
        )
        .unwrap();
        assert!((gap.aggregate - 0.6).abs() < 1e-12);
    }

    #[test]
    fn truthfulness_errors_on_nonpositive_total() {
        let g = InteractionGraph::from_entries(2, 0.0, vec![0.0; 4]).unwrap();
        let err = truthfulness_gap(
            &[Allocation::uniform(2)],
            &[vals(&[0.0, 0.0])],
            &g,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TruthfulnessUndefined { round: 1, .. }));
    }

    #[test]
    fn uniform_on_alternating_closed_form() {
        // lambda = 0, N = 2, single phase of e_1: static regret is exactly
        // T (1 - 1/N).
        let g = InteractionGraph::from_entries(2, 0.0, vec![0.0; 4]).unwrap();
        let horizon = 1000usize;
        let values: Vec<ValueVector<f64>> = (0..horizon).map(|_| vals(&[1.0, 0.0])).collect();
        let payoffs = vec![0.5f64; horizon];
        let r = static_regret(&values, &payoffs, &g).unwrap();
        assert!((r - 500.0).abs() <= 1e-9, "regret = {r}");
    }

    #[test]
    fn ledger_is_consistent() {
        let g = build_wuxing(0.05, 1.0, -1.0).unwrap();
        assert!(validate_assumptions(&g).passed());
        let values = vec![vals(&[0.7, 0.3, 0.5, 0.2, 0.9]); 30];
        let payoffs: Vec<f64> = values
            .iter()
            .map(|v| payoff(&Allocation::uniform(5), v, &g).unwrap())
            .collect();
        let ledger = RegretLedger::from_trace(&values, &payoffs, &g).unwrap();
        assert!(ledger.dynamic_regret >= ledger.static_regret - 1e-9);
        assert!(
            (ledger.best_fixed_payoff - ledger.realized_payoff - ledger.static_regret).abs()
                < 1e-9
        );
    }
}
