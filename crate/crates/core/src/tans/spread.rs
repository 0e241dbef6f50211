use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::automaton::{stationary, AutomatonModel};
use crate::error::{Error, Result};
use crate::probmodel::Probabilities;
use crate::quantizer::CountVector;

/// Symbol assignment over the states `L..2L` of a tANS automaton, stored at
/// offsets `0..L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpreadTable {
    counts: CountVector,
    symbols: Vec<u32>,
}

impl SpreadTable {
    /// Validates a symbol assignment against per-symbol counts.
    pub fn new(counts: CountVector, symbols: Vec<u32>) -> Result<Self> {
        check_counts(&counts)?;
        if symbols.len() != counts.total() as usize {
            return Err(Error::InvalidSpread(format!(
                "{} states for counts summing to {}",
                symbols.len(),
                counts.total()
            )));
        }
        let mut seen = vec![0u32; counts.len()];
        for &s in &symbols {
            let slot = seen
                .get_mut(s as usize)
                .ok_or_else(|| Error::InvalidSpread(format!("symbol {s} outside alphabet")))?;
            *slot += 1;
        }
        if seen != counts.counts() {
            return Err(Error::InvalidSpread(
                "symbol occurrences differ from counts".into(),
            ));
        }
        Ok(Self { counts, symbols })
    }

    /// Number of states `L`.
    #[inline]
    pub fn states(&self) -> u32 {
        self.counts.total()
    }

    #[inline]
    pub fn log_states(&self) -> u32 {
        self.states().ilog2()
    }

    #[inline]
    pub fn alphabet(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn counts(&self) -> &CountVector {
        &self.counts
    }

    /// `symbols()[x - L]` is the symbol of state `x`.
    #[inline]
    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }
}

fn check_counts(counts: &CountVector) -> Result<()> {
    let l = counts.total();
    if !l.is_power_of_two() {
        return Err(Error::InvalidSpread(format!(
            "state count {l} is not a power of two"
        )));
    }
    if let Some(s) = counts.counts().iter().position(|&c| c == 0) {
        return Err(Error::InvalidSpread(format!("symbol {s} has no states")));
    }
    Ok(())
}

fn check_probabilities(counts: &CountVector, p: &Probabilities) -> Result<()> {
    if p.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: counts.len(),
            actual: p.len(),
        });
    }
    Ok(())
}

/// The spread used by FSE: a cursor starting at 1 advances by
/// `L/2 + L/8 + 3` modulo `L`, dropping symbols in index order.
///
/// The step is odd, hence a full cycle, for every `L` except 2 and 8, which
/// are rejected.
pub fn spread_fast(counts: &CountVector) -> Result<SpreadTable> {
    check_counts(counts)?;
    let l = counts.total();
    let step = l / 2 + l / 8 + 3;
    if l > 1 && step % 2 == 0 {
        return Err(Error::InvalidSpread(format!(
            "step {step} does not cycle {l} states"
        )));
    }
    let mask = l - 1;
    let mut symbols = vec![0u32; l as usize];
    let mut pos = 1 & mask;
    for (s, &c) in counts.counts().iter().enumerate() {
        for _ in 0..c {
            pos = (pos + step) & mask;
            symbols[pos as usize] = s as u32;
        }
    }
    SpreadTable::new(counts.clone(), symbols)
}

/// `1 / ln(1 + 1/i)` for `i = 0..=max_index`; entry 0 is unused.
pub fn inverse_log_table(max_index: u32) -> Vec<f64> {
    let mut t = Vec::with_capacity(max_index as usize + 1);
    t.push(f64::INFINITY);
    t.extend((1..=max_index).map(|i| 1.0 / (1.0 / f64::from(i)).ln_1p()));
    t
}

/// Preferred state for the appearance of a symbol of probability `prob`
/// that is reached from reduced value `i`: `1 / (p ln(1 + 1/i))`.
///
/// From `Pr(x) ≈ lg(e) / x` the reduced value `i` occurs with probability
/// close to `lg(1 + 1/i)`; placing the appearance where `Pr(x)` matches
/// `p lg(1 + 1/i)` gives this position.
#[inline]
pub fn preferred_position(prob: f64, i: u32) -> f64 {
    1.0 / (prob * (1.0 / f64::from(i)).ln_1p())
}

/// `(position, symbol, i)` for every appearance.
fn preferred_pairs(counts: &CountVector, p: &Probabilities) -> Vec<(f64, u32, u32)> {
    let max_count = counts.counts().iter().copied().max().unwrap_or(1);
    let table = inverse_log_table(2 * max_count - 1);
    let mut pairs = Vec::with_capacity(counts.total() as usize);
    for (s, &c) in counts.counts().iter().enumerate() {
        let inv_p = 1.0 / p[s];
        for i in c..2 * c {
            pairs.push((table[i as usize] * inv_p, s as u32, i));
        }
    }
    pairs
}

/// Sorts every appearance by its preferred position and fills the states
/// in that order. Ties go by symbol index, then by `i`.
pub fn spread_tuned_sorted(counts: &CountVector, p: &Probabilities) -> Result<SpreadTable> {
    check_counts(counts)?;
    check_probabilities(counts, p)?;
    let mut pairs = preferred_pairs(counts, p);
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    SpreadTable::new(
        counts.clone(),
        pairs.into_iter().map(|(_, s, _)| s).collect(),
    )
}

/// Linear-time approximation of [`spread_tuned_sorted`]: rounded preferred
/// positions, clamped into `[L, 2L-1]`, are counting-sorted into `L`
/// buckets; appearances sharing a bucket keep symbol order.
pub fn spread_tuned_bucketed(counts: &CountVector, p: &Probabilities) -> Result<SpreadTable> {
    check_counts(counts)?;
    check_probabilities(counts, p)?;
    let l = counts.total() as usize;
    let pairs = preferred_pairs(counts, p);
    let bucket_of = |x: f64| -> usize {
        let r = x.round();
        if r.is_nan() || r < l as f64 {
            0
        } else {
            (r as usize).min(2 * l - 1) - l
        }
    };

    let mut starts = vec![0usize; l + 1];
    for &(x, _, _) in &pairs {
        starts[bucket_of(x) + 1] += 1;
    }
    for b in 0..l {
        starts[b + 1] += starts[b];
    }
    let mut symbols = vec![0u32; l];
    for &(x, s, _) in &pairs {
        let b = bucket_of(x);
        symbols[starts[b]] = s;
        starts[b] += 1;
    }
    SpreadTable::new(counts.clone(), symbols)
}

/// Refines [`spread_tuned_sorted`] `iterations` times. Each round computes
/// the stationary state distribution `ρ` of the current automaton and
/// re-spreads appearances by decreasing mass `p_s Σ_{x ∈ range(i)} ρ_x`
/// (ties by symbol, then `i`).
pub fn spread_tuned_iterated(
    counts: &CountVector,
    p: &Probabilities,
    iterations: u32,
) -> Result<SpreadTable> {
    if iterations == 0 {
        return Err(Error::InvalidArgument(
            "iterated spread needs at least one round".into(),
        ));
    }
    let mut spread = spread_tuned_sorted(counts, p)?;
    if counts.len() == 1 {
        return Ok(spread);
    }
    let l = counts.total();
    for _ in 0..iterations {
        let model = AutomatonModel::build(&spread, p)?;
        let rho = stationary(&model)?;
        let cumulative = rho.cumulative();
        let mut pairs = Vec::with_capacity(l as usize);
        for (s, &c) in counts.counts().iter().enumerate() {
            for i in c..2 * c {
                let (lo, hi) = crate::automaton::source_range(l, i);
                pairs.push((p[s] * (cumulative[hi] - cumulative[lo]), s as u32, i));
            }
        }
        pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        spread = SpreadTable::new(
            counts.clone(),
            pairs.into_iter().map(|(_, s, _)| s).collect(),
        )?;
    }
    Ok(spread)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadKind {
    Fast,
    TunedSorted,
    TunedBucketed,
    /// Tuned spread refined by this many stationary-distribution rounds.
    TunedIterated(u32),
}

impl SpreadKind {
    pub const STANDARD: [SpreadKind; 3] = [
        SpreadKind::Fast,
        SpreadKind::TunedSorted,
        SpreadKind::TunedBucketed,
    ];
}

impl fmt::Display for SpreadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpreadKind::Fast => f.write_str("fast"),
            SpreadKind::TunedSorted => f.write_str("tuned-sorted"),
            SpreadKind::TunedBucketed => f.write_str("tuned-bucketed"),
            SpreadKind::TunedIterated(n) => write!(f, "tuned-iterated-{n}"),
        }
    }
}

impl FromStr for SpreadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(SpreadKind::Fast),
            "tuned" | "tuned-sorted" => Ok(SpreadKind::TunedSorted),
            "tuned-bucketed" => Ok(SpreadKind::TunedBucketed),
            other => other
                .strip_prefix("tuned-iterated-")
                .and_then(|n| n.parse().ok())
                .filter(|&n: &u32| n >= 1)
                .map(SpreadKind::TunedIterated)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown spread kind {other:?}"))),
        }
    }
}

/// Builds a spread of the given kind; `p` is ignored by [`SpreadKind::Fast`].
pub fn build_spread(
    kind: SpreadKind,
    counts: &CountVector,
    p: &Probabilities,
) -> Result<SpreadTable> {
    match kind {
        SpreadKind::Fast => spread_fast(counts),
        SpreadKind::TunedSorted => spread_tuned_sorted(counts, p),
        SpreadKind::TunedBucketed => spread_tuned_bucketed(counts, p),
        SpreadKind::TunedIterated(n) => spread_tuned_iterated(counts, p, n),
    }
}
