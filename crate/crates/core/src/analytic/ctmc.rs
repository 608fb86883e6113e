//! State-space enumeration, sparse generators, steady state and transient
//! solutions by uniformization.

use std::collections::{HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{LossModel, SystemState, TransitionKind};

/// Default cap on enumerated states.
pub const DEFAULT_STATE_LIMIT: usize = 5_000_000;

/// Largest chain solved with a dense LU factorisation; bigger chains use
/// Gauss-Seidel sweeps on the sparse generator.
pub const DENSE_SOLVE_LIMIT: usize = 3_000;

pub const DEFAULT_STEADY_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_TRANSIENT_EPSILON: f64 = 1e-9;

/// Reachable states of a model, densely indexed in lexicographic order.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<SystemState>,
    index: HashMap<SystemState, usize>,
}

impl StateSpace {
    /// All states reachable from the empty system.
    pub fn reachable(model: &LossModel, limit: usize) -> Result<Self> {
        let bound = feasible_state_count(model);
        if bound > limit as u128 {
            return Err(Error::StateSpaceTooLarge { size: bound, limit });
        }
        let start = model.empty_state();
        let mut seen: HashMap<SystemState, ()> = HashMap::new();
        seen.insert(start.clone(), ());
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for t in model.transitions(&s) {
                if t.target != s && !seen.contains_key(&t.target) {
                    seen.insert(t.target.clone(), ());
                    queue.push_back(t.target);
                }
            }
        }
        let mut states: Vec<SystemState> = seen.into_keys().collect();
        states.sort();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(StateSpace { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn index_of(&self, state: &[u32]) -> Option<usize> {
        self.index.get(&SystemState::new(state.to_vec())).copied()
    }

    pub fn state(&self, i: usize) -> &SystemState {
        &self.states[i]
    }

    /// Point mass on `state`.
    pub fn point_mass(&self, state: &[u32]) -> Option<Vec<f64>> {
        let i = self.index_of(state)?;
        let mut v = vec![0.0; self.len()];
        v[i] = 1.0;
        Some(v)
    }
}

/// Number of vectors within per-dimension caps whose occupancy fits the
/// capacity. Upper bound on any reachable state space of the model.
pub fn feasible_state_count(model: &LossModel) -> u128 {
    let cap = model.capacity() as usize;
    let mut ways = vec![0u128; cap + 1];
    ways[0] = 1;
    for d in model.dims() {
        let mut next = vec![0u128; cap + 1];
        for (used, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for n in 0..=d.max_sessions as usize {
                let c = used + n * d.demand_blocks as usize;
                if c > cap {
                    break;
                }
                next[c] += w;
            }
        }
        ways = next;
    }
    ways.iter().sum()
}

/// Rate matrix in compressed sparse row form; the diagonal is stored.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl GeneratorMatrix {
    /// Builds a generator from off-diagonal triplets. Duplicates are summed,
    /// diagonal entries are ignored and recomputed so rows sum to zero.
    pub fn from_rates(n: usize, rates: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, r) in rates {
            if i != j && r != 0.0 {
                rows[i].push((j, r));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = vec![0.0; n];
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.push((i, 0.0));
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, r) in row {
                match merged.last_mut() {
                    Some((lj, lr)) if *lj == j => *lr += r,
                    _ => merged.push((j, r)),
                }
            }
            let out: f64 = merged
                .iter()
                .filter(|&&(j, _)| j != i)
                .map(|&(_, r)| r)
                .sum();
            diag[i] = -out;
            for (j, r) in merged {
                cols.push(j);
                vals.push(if j == i { -out } else { r });
            }
            row_ptr.push(cols.len());
        }
        GeneratorMatrix {
            n,
            row_ptr,
            cols,
            vals,
            diag,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Entries of row `i` as `(column, rate)`, diagonal included.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// Row vector times matrix: `out = v Q`.
    pub fn left_mul(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (j, q) in self.row(i) {
                out[j] += vi * q;
            }
        }
    }

    /// `max_j |(v Q)_j|`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        let mut out = vec![0.0; self.n];
        self.left_mul(v, &mut out);
        out.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn transpose(&self) -> GeneratorMatrix {
        let triplets = (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)));
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n];
        for (i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for row in rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        GeneratorMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
            diag: self.diag.clone(),
        }
    }
}

/// Materialises the transition system of `model` as a generator over its
/// reachable states. Rejected arrivals are self-loops and leave no entry.
pub fn build_generator(model: &LossModel, limit: usize) -> Result<(StateSpace, GeneratorMatrix)> {
    let space = StateSpace::reachable(model, limit)?;
    let mut triplets = Vec::new();
    for (i, s) in space.states().iter().enumerate() {
        for t in model.transitions(s) {
            if t.kind == TransitionKind::ArrivalRejected {
                continue;
            }
            let j = space
                .index_of(&t.target)
                .expect("targets of reachable states are reachable");
            triplets.push((i, j, t.rate));
        }
    }
    let q = GeneratorMatrix::from_rates(space.len(), triplets);
    Ok((space, q))
}

/// Stationary distribution `pi Q = 0`, `sum pi = 1`.
pub fn steady_state(q: &GeneratorMatrix) -> Result<Vec<f64>> {
    steady_state_with_tolerance(q, DEFAULT_STEADY_TOLERANCE)
}

pub fn steady_state_with_tolerance(q: &GeneratorMatrix, tolerance: f64) -> Result<Vec<f64>> {
    let n = q.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty generator".into()));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut pi = if n <= DENSE_SOLVE_LIMIT {
        dense_solve(q, tolerance)?
    } else {
        gauss_seidel(q, tolerance)?
    };
    for p in &mut pi {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let residual = q.residual(&pi);
    if !residual.is_finite() || residual > tolerance {
        return Err(Error::NumericalFailure {
            message: "steady state residual above tolerance".into(),
            residual,
        });
    }
    Ok(pi)
}

// Q^T pi^T = 0 with the last balance equation replaced by normalisation.
fn dense_solve(q: &GeneratorMatrix, tolerance: f64) -> Result<Vec<f64>> {
    let n = q.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in q.row(i) {
            a[(j, i)] = v;
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu.solve(&b).ok_or_else(|| Error::NumericalFailure {
        message: "singular balance system".into(),
        residual: f64::INFINITY,
    })?;
    for _ in 0..3 {
        let r = &b - &a * &x;
        if r.amax() <= tolerance * 1e-3 {
            break;
        }
        match lu.solve(&r) {
            Some(d) => x += d,
            None => break,
        }
    }
    Ok(x.iter().copied().collect())
}

fn gauss_seidel(q: &GeneratorMatrix, tolerance: f64) -> Result<Vec<f64>> {
    let n = q.dim();
    let qt = q.transpose();
    let mut pi = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for sweep in 0..200_000 {
        for j in 0..n {
            let mut inflow = 0.0;
            for (i, v) in qt.row(j) {
                if i != j {
                    inflow += pi[i] * v;
                }
            }
            pi[j] = inflow / -q.diag[j];
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        if sweep % 10 == 9 {
            residual = q.residual(&pi);
            if residual <= tolerance * 0.1 {
                return Ok(pi);
            }
        }
    }
    Err(Error::NumericalFailure {
        message: "Gauss-Seidel did not converge".into(),
        residual,
    })
}

/// Transient distribution at time `t` (in the rate unit) by uniformization.
pub fn transient(q: &GeneratorMatrix, pi0: &[f64], t: f64) -> Vec<f64> {
    transient_with_epsilon(q, pi0, t, DEFAULT_TRANSIENT_EPSILON)
}

/// Uniformization with the Poisson series truncated once the accumulated
/// weight reaches `1 - epsilon`.
pub fn transient_with_epsilon(q: &GeneratorMatrix, pi0: &[f64], t: f64, epsilon: f64) -> Vec<f64> {
    assert_eq!(pi0.len(), q.dim(), "initial vector has the wrong length");
    assert!(t >= 0.0, "time must be non-negative");
    let rate = q.diag.iter().fold(0.0f64, |m, d| m.max(-d));
    if t == 0.0 || rate == 0.0 {
        return pi0.to_vec();
    }
    let lt = rate * t;
    let mut v = pi0.to_vec();
    let mut vq = vec![0.0; v.len()];
    let mut out = vec![0.0; v.len()];
    let mut log_w = -lt;
    let mut mass = 0.0;
    let max_terms = (lt + 50.0 * lt.sqrt() + 1000.0) as usize;
    for k in 0..=max_terms {
        if k > 0 {
            log_w += lt.ln() - (k as f64).ln();
            // v <- v (I + Q / rate)
            q.left_mul(&v, &mut vq);
            for (vi, d) in v.iter_mut().zip(&vq) {
                *vi += d / rate;
            }
        }
        let w = log_w.exp();
        if w > 0.0 {
            for (o, vi) in out.iter_mut().zip(&v) {
                *o += w * vi;
            }
            mass += w;
        }
        if mass >= 1.0 - epsilon && k as f64 >= lt {
            break;
        }
    }
    out
}

/// Long-run probability that an arrival of each class is rejected.
pub fn blocking_probabilities(model: &LossModel, space: &StateSpace, pi: &[f64]) -> Vec<f64> {
    (0..model.classes().len())
        .map(|class| {
            space
                .states()
                .iter()
                .zip(pi)
                .filter(|(s, _)| model.admit(s, class).kind == TransitionKind::ArrivalRejected)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}

/// Aggregates a state distribution by occupied blocks.
pub fn occupancy_distribution(model: &LossModel, space: &StateSpace, pi: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; model.capacity() as usize + 1];
    for (s, p) in space.states().iter().zip(pi) {
        q[model.occupied(s) as usize] += p;
    }
    q
}

/// Mean number of sessions per dimension.
pub fn mean_counts(space: &StateSpace, pi: &[f64]) -> Vec<f64> {
    let dims = space.states().first().map_or(0, |s| s.len());
    let mut m = vec![0.0; dims];
    for (s, p) in space.states().iter().zip(pi) {
        for (mi, &c) in m.iter_mut().zip(s.iter()) {
            *mi += p * f64::from(c);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Policy, TrafficClass};

    fn mm_c_c(lambda: f64, mu: f64, c: u32) -> LossModel {
        LossModel::new(
            Policy::Nc1,
            vec![TrafficClass::new("a", lambda, mu, 1, c)],
            c,
        )
        .unwrap()
    }

    #[test]
    fn birth_death_generator() {
        let m = mm_c_c(1.5, 1.0, 2);
        let (space, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(q.get(0, 1), 1.5);
        assert_eq!(q.get(1, 0), 1.0);
        assert_eq!(q.get(1, 2), 1.5);
        assert_eq!(q.get(2, 1), 2.0);
        assert_eq!(q.get(0, 2), 0.0);
        for i in 0..3 {
            let s: f64 = q.row(i).map(|(_, v)| v).sum();
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn steady_state_small_chains() {
        let m = mm_c_c(1.0, 1.0, 1);
        let (_, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        let pi = steady_state(&q).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-14 && (pi[1] - 0.5).abs() < 1e-14);

        let m = mm_c_c(1.0, 1.0, 2);
        let (_, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        let pi = steady_state(&q).unwrap();
        for (p, e) in pi.iter().zip([0.4, 0.4, 0.2]) {
            assert!((p - e).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_seidel_agrees_with_dense() {
        let m = mm_c_c(7.0, 1.0, 12);
        let (_, q) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        let a = dense_solve(&q, 1e-12).unwrap();
        let b = gauss_seidel(&q, 1e-12).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn transient_identity_and_pure_death() {
        let m =
            LossModel::new(Policy::Nc1, vec![TrafficClass::new("a", 0.0, 0.7, 1, 1)], 1).unwrap();
        // no arrivals: only the empty state is reachable from empty
        let (space, _) = build_generator(&m, DEFAULT_STATE_LIMIT).unwrap();
        assert_eq!(space.len(), 1);

        let q = GeneratorMatrix::from_rates(2, [(1, 0, 0.7)]);
        let pi0 = [0.0, 1.0];
        assert_eq!(transient(&q, &pi0, 0.0), pi0.to_vec());
        for t in [0.1, 1.0, 3.0, 10.0] {
            let p = transient(&q, &pi0, t);
            assert!((p[0] - (1.0 - (-0.7f64 * t).exp())).abs() < 1e-9);
        }
    }

    #[test]
    fn state_limit_is_enforced() {
        let m = mm_c_c(1.0, 1.0, 20);
        match StateSpace::reachable(&m, 10) {
            Err(Error::StateSpaceTooLarge { size, limit }) => {
                assert_eq!(size, 21);
                assert_eq!(limit, 10);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }
}
