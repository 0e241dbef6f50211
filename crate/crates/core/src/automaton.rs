//! Exact bits/symbol of a tANS automaton on an i.i.d. source.
//!
//! Encoding a symbol moves the automaton from a source state `x` to a
//! destination state `y` owned by that symbol. For destination `y`, reached
//! from the reduced value `i`, the sources form the contiguous range
//! `[i 2^b, (i+1) 2^b)` with `b = lg L - ⌊lg i⌋`, which is also the number of
//! bits emitted. The transition matrix `M[y][x] = p_{s(y)} [x ∈ range(y)]` is
//! column stochastic, and the mean cost is
//! `Σ_y b(y) p_{s(y)} Σ_{x ∈ range(y)} ρ_x` for its stationary distribution
//! `ρ`.
//!
//! `M` is never materialized: `M ρ` costs `O(L)` through prefix sums of `ρ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::probmodel::{compensated_sum, entropy, Probabilities};
use crate::tans::SpreadTable;

/// Power iteration stops once successive iterates differ by less than this.
pub const CONVERGENCE_TOL: f64 = 1e-13;
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Largest `L` for which the dense solver is tried after power iteration fails.
pub const DENSE_FALLBACK_MAX_STATES: u32 = 256;
/// Accepted `‖M ρ - ρ‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Source-state offsets `[lo, hi)` (relative to `L`) that reduce to `i`.
#[inline]
pub fn source_range(states: u32, i: u32) -> (usize, usize) {
    let nb = states.ilog2() - i.ilog2();
    (
        ((i << nb) - states) as usize,
        (((i + 1) << nb) - states) as usize,
    )
}

/// Bits emitted for reduced values `i = 1..2L`, index 0 unused.
pub fn bits_table(states: u32) -> Vec<u32> {
    let log_l = states.ilog2();
    std::iter::once(0)
        .chain((1..2 * states).map(|i| log_l - i.ilog2()))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct Destination {
    lo: usize,
    hi: usize,
    bits: u32,
    weight: f64,
}

/// Sparse transition structure of an automaton under a source distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AutomatonModel {
    states: u32,
    destinations: Vec<Destination>,
    /// Reduced value `i` leading into each state.
    reduced: Vec<u32>,
}

impl AutomatonModel {
    /// `real_p` is the actual source distribution, which in general differs
    /// from the one the spread was built for.
    pub fn build(spread: &SpreadTable, real_p: &Probabilities) -> Result<Self> {
        if real_p.len() != spread.alphabet() {
            return Err(Error::DimensionMismatch {
                expected: spread.alphabet(),
                actual: real_p.len(),
            });
        }
        let l = spread.states();
        let counts = spread.counts().counts();
        let mut rank = vec![0u32; counts.len()];
        let mut destinations = Vec::with_capacity(l as usize);
        let mut reduced = Vec::with_capacity(l as usize);
        for &s in spread.symbols() {
            let s = s as usize;
            let i = counts[s] + rank[s];
            rank[s] += 1;
            let (lo, hi) = source_range(l, i);
            reduced.push(i);
            destinations.push(Destination {
                lo,
                hi,
                bits: l.ilog2() - i.ilog2(),
                weight: real_p[s],
            });
        }
        Ok(Self {
            states: l,
            destinations,
            reduced,
        })
    }

    #[inline]
    pub fn states(&self) -> u32 {
        self.states
    }

    pub fn reduced_indices(&self) -> &[u32] {
        &self.reduced
    }

    /// `M ρ`.
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let cumulative = prefix_sums(rho);
        self.destinations
            .iter()
            .map(|d| d.weight * (cumulative[d.hi] - cumulative[d.lo]))
            .collect()
    }

    /// Column sums of `M`; all one for a valid model.
    pub fn column_sums(&self) -> Vec<f64> {
        let l = self.states as usize;
        let mut diff = vec![0.0; l + 1];
        for d in &self.destinations {
            diff[d.lo] += d.weight;
            diff[d.hi] -= d.weight;
        }
        let mut acc = 0.0;
        diff[..l]
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    }

    /// Dense `M`, row = destination, column = source.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let l = self.states as usize;
        self.destinations
            .iter()
            .map(|d| {
                let mut row = vec![0.0; l];
                row[d.lo..d.hi].iter_mut().for_each(|v| *v = d.weight);
                row
            })
            .collect()
    }

    /// Destinations of each source state, one per symbol with nonzero weight.
    fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states as usize];
        for (y, d) in self.destinations.iter().enumerate() {
            if d.weight > 0.0 {
                for succ in &mut out[d.lo..d.hi] {
                    succ.push(y);
                }
            }
        }
        out
    }
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for &x in v {
        acc += x;
        out.push(acc);
    }
    out
}

/// Probability of each state `L..2L` in the long run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryDistribution {
    rho: Vec<f64>,
    /// Power iterations used; zero when the dense solver produced `rho`.
    pub iterations: usize,
}

impl StationaryDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }

    /// `cumulative()[j] = Σ_{x < j} ρ_x`, with `L + 1` entries.
    pub fn cumulative(&self) -> Vec<f64> {
        prefix_sums(&self.rho)
    }
}

/// `ρ_x ∝ 1/x` over `x = L..2L`, the usual approximation of the stationary
/// distribution.
pub fn approximate_stationary(states: u32) -> Vec<f64> {
    let raw: Vec<f64> = (states..2 * states).map(|x| 1.0 / f64::from(x)).collect();
    let total = compensated_sum(raw.iter().copied());
    raw.into_iter().map(|v| v / total).collect()
}

/// Number of closed communicating classes of the transition graph.
fn closed_classes(successors: &[Vec<usize>]) -> usize {
    let n = successors.len();
    // Kosaraju: finishing order on the graph, then components on its reverse.
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((v, next)) = stack.last_mut() {
            if let Some(&w) = successors[*v].get(*next) {
                *next += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(*v);
                stack.pop();
            }
        }
    }
    let mut predecessors = vec![Vec::new(); n];
    for (v, succ) in successors.iter().enumerate() {
        for &w in succ {
            predecessors[w].push(v);
        }
    }
    let mut component = vec![usize::MAX; n];
    let mut count = 0;
    for &root in order.iter().rev() {
        if component[root] != usize::MAX {
            continue;
        }
        component[root] = count;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &predecessors[v] {
                if component[w] == usize::MAX {
                    component[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    let mut leaks = vec![false; count];
    for (v, succ) in successors.iter().enumerate() {
        if succ.iter().any(|&w| component[w] != component[v]) {
            leaks[component[v]] = true;
        }
    }
    leaks.iter().filter(|&&l| !l).count()
}

/// Solves `(M - I) ρ = 0, Σ ρ = 1` by Gaussian elimination.
fn dense_stationary(model: &AutomatonModel) -> Option<Vec<f64>> {
    let l = model.states as usize;
    let mut a = model.to_dense();
    for (j, row) in a.iter_mut().enumerate() {
        row[j] -= 1.0;
    }
    // the last equation is redundant; replace it by normalization
    a[l - 1].iter_mut().for_each(|v| *v = 1.0);
    let mut b = vec![0.0; l];
    b[l - 1] = 1.0;

    for col in 0..l {
        let pivot = (col..l).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (r, row) in lower.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (v, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *v -= f * pv;
                }
                b[col + 1 + r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; l];
    for r in (0..l).rev() {
        let s: f64 = (r + 1..l).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn normalize(v: &mut [f64]) {
    let total = compensated_sum(v.iter().copied());
    v.iter_mut().for_each(|x| *x /= total);
}

fn residual(model: &AutomatonModel, rho: &[f64]) -> f64 {
    model
        .apply(rho)
        .iter()
        .zip(rho)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Stationary distribution of the automaton.
///
/// Fails with [`Error::ReducibleChain`] when more than one closed class
/// exists (the distribution would not be unique), and with
/// [`Error::NonConvergence`] when power iteration stalls on a chain too large
/// for the dense fallback.
pub fn stationary(model: &AutomatonModel) -> Result<StationaryDistribution> {
    let l = model.states;
    if l == 1 {
        return Ok(StationaryDistribution {
            rho: vec![1.0],
            iterations: 0,
        });
    }
    let closed = closed_classes(&model.successors());
    if closed != 1 {
        return Err(Error::ReducibleChain {
            closed_classes: closed,
        });
    }

    let mut rho = approximate_stationary(l);
    let mut change = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mut next = model.apply(&rho);
        normalize(&mut next);
        change = next
            .iter()
            .zip(&rho)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rho = next;
        if change < CONVERGENCE_TOL {
            if residual(model, &rho) < RESIDUAL_TOL {
                return Ok(StationaryDistribution {
                    rho,
                    iterations: it,
                });
            }
            break;
        }
    }
    if l <= DENSE_FALLBACK_MAX_STATES {
        if let Some(mut rho) = dense_stationary(model) {
            rho.iter_mut().for_each(|v| *v = v.max(0.0));
            normalize(&mut rho);
            if residual(model, &rho) < RESIDUAL_TOL {
                return Ok(StationaryDistribution { rho, iterations: 0 });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        last_change: change,
    })
}

/// `Σ_y b(y) (M ρ)_y`: mean bits emitted per encoded symbol.
pub fn mean_bits_per_symbol(model: &AutomatonModel, rho: &StationaryDistribution) -> f64 {
    let cumulative = rho.cumulative();
    compensated_sum(
        model
            .destinations
            .iter()
            .map(|d| f64::from(d.bits) * d.weight * (cumulative[d.hi] - cumulative[d.lo])),
    )
}

/// Relative overhead `(bits/symbol - H(p)) / H(p)` of coding a `p` source
/// with the automaton of `spread`; zero for a zero-entropy source.
pub fn automaton_delta_h(p: &Probabilities, spread: &SpreadTable) -> Result<f64> {
    let model = AutomatonModel::build(spread, p)?;
    let rho = stationary(&model)?;
    let h = entropy(p);
    let bits = mean_bits_per_symbol(&model, &rho);
    if h == 0.0 {
        return Ok(bits);
    }
    Ok((bits - h) / h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probmodel::random_simplex;
    use crate::quantizer::{quantize_with_floor, CountVector};
    use crate::tans::{
        build_spread, spread_fast, spread_tuned_iterated, spread_tuned_sorted, SpreadKind,
    };
    use proptest::prelude::*;

    fn skewed() -> (CountVector, Probabilities) {
        (
            CountVector::new(vec![1, 3, 2, 10]).unwrap(),
            Probabilities::new(vec![0.04, 0.16, 0.16, 0.64]).unwrap(),
        )
    }

    #[test]
    fn bits_table_l16() {
        let t = bits_table(16);
        assert_eq!(t[1], 4);
        assert!(t[2..4].iter().all(|&b| b == 3));
        assert!(t[4..8].iter().all(|&b| b == 2));
        assert!(t[8..16].iter().all(|&b| b == 1));
        assert!(t[16..32].iter().all(|&b| b == 0));
        assert_eq!(t.len(), 32);
    }

    #[test]
    fn source_ranges_partition() {
        // ranges for i = c..2c tile [L, 2L) for any count c
        for c in 1..=16u32 {
            let mut covered = [0; 16];
            for i in c..2 * c {
                let (lo, hi) = source_range(16, i);
                covered[lo..hi].iter_mut().for_each(|v| *v += 1);
            }
            assert!(covered.iter().all(|&v| v == 1), "c={c}");
        }
    }

    #[test]
    fn skewed_model_is_stochastic() {
        let (c, p) = skewed();
        for spread in [
            spread_fast(&c).unwrap(),
            spread_tuned_sorted(&c, &p).unwrap(),
        ] {
            let m = AutomatonModel::build(&spread, &p).unwrap();
            for v in m.column_sums() {
                assert!((v - 1.0).abs() < 1e-12);
            }
            let dense = m.to_dense();
            for x in 0..16 {
                let col: f64 = dense.iter().map(|row| row[x]).sum();
                assert!((col - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn skewed_stationary_near_inverse_x() {
        let (c, p) = skewed();
        let spread = spread_tuned_sorted(&c, &p).unwrap();
        let m = AutomatonModel::build(&spread, &p).unwrap();
        let rho = stationary(&m).unwrap();
        assert!(residual(&m, rho.as_slice()) < RESIDUAL_TOL);
        let approx = approximate_stationary(16);
        let tv: f64 = rho
            .as_slice()
            .iter()
            .zip(&approx)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.1, "{tv}");

        let dense = dense_stationary(&m).unwrap();
        for (a, b) in dense.iter().zip(rho.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn skewed_mean_bits() {
        let (c, p) = skewed();
        let h = entropy(&p);
        let quant_dh = 0.016_515_829_381_978_41;
        let bits = |spread: &SpreadTable| {
            let m = AutomatonModel::build(spread, &p).unwrap();
            mean_bits_per_symbol(&m, &stationary(&m).unwrap())
        };
        let tuned = bits(&spread_tuned_sorted(&c, &p).unwrap());
        let fast = bits(&spread_fast(&c).unwrap());
        assert!(tuned >= h && tuned <= h + quant_dh, "{tuned}");
        assert!(fast > tuned);
        assert!(automaton_delta_h(&p, &spread_tuned_sorted(&c, &p).unwrap()).unwrap() < 0.0114);
        let iterated = bits(&spread_tuned_iterated(&c, &p, 2).unwrap());
        assert!(iterated >= h);
    }

    #[test]
    fn degenerate_chains() {
        let one = Probabilities::new(vec![1.0]).unwrap();
        let s = spread_fast(&CountVector::new(vec![16]).unwrap()).unwrap();
        let m = AutomatonModel::build(&s, &one).unwrap();
        assert_eq!(
            stationary(&m),
            Err(Error::ReducibleChain { closed_classes: 16 })
        );

        let s = spread_fast(&CountVector::new(vec![1]).unwrap()).unwrap();
        let m = AutomatonModel::build(&s, &one).unwrap();
        let rho = stationary(&m).unwrap();
        assert_eq!(mean_bits_per_symbol(&m, &rho), 0.0);
        assert_eq!(automaton_delta_h(&one, &s).unwrap(), 0.0);
    }

    #[test]
    fn dyadic_source_is_free() {
        let p = Probabilities::new(vec![0.5, 0.25, 0.125, 0.125]).unwrap();
        let c = CountVector::new(vec![8, 4, 2, 2]).unwrap();
        let s = spread_fast(&c).unwrap();
        assert!(automaton_delta_h(&p, &s).unwrap().abs() < 1e-10);
        // tuned spreads repeat with period 8 here and split the chain
        for kind in [SpreadKind::TunedSorted, SpreadKind::TunedBucketed] {
            let s = build_spread(kind, &c, &p).unwrap();
            assert_eq!(
                automaton_delta_h(&p, &s),
                Err(Error::ReducibleChain { closed_classes: 2 })
            );
        }
    }

    #[test]
    fn dimension_mismatch() {
        let (c, _) = skewed();
        let s = spread_fast(&c).unwrap();
        assert!(AutomatonModel::build(&s, &Probabilities::uniform(3).unwrap()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn stochastic_and_above_entropy(d in 2usize..32, log_l in 5u32..10, kind in 0usize..3, seed: u64) {
            let l = 1u32 << log_l;
            let p = random_simplex(d, seed).unwrap();
            let c = quantize_with_floor(&p, l, 1.0, 1).unwrap();
            let s = build_spread(SpreadKind::STANDARD[kind], &c, &p).unwrap();
            let m = AutomatonModel::build(&s, &p).unwrap();
            for v in m.column_sums() {
                prop_assert!((v - 1.0).abs() < 1e-12);
            }
            let rho = stationary(&m).unwrap();
            prop_assert!(residual(&m, rho.as_slice()) < RESIDUAL_TOL);
            prop_assert!(rho.as_slice().iter().all(|&v| v >= 0.0));
            prop_assert!((rho.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(mean_bits_per_symbol(&m, &rho) >= entropy(&p) - 1e-12);
        }
    }
}
