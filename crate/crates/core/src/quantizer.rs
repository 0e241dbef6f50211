//! Pyramid-vector style quantization of distributions.
//!
//! A distribution `p` is approximated by a composition `Q` of `K` (naturals
//! summing to `K`). Deformation by a power `w` spends the fixed budget more
//! densely on low probabilities: the encoder quantizes `p^(1/w)` and the
//! decoder reconstructs `q_s ∝ Q_s^w + o_s`, where the offset `o` keeps
//! every reconstructed probability positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probmodel::{entropy, kl_divergence, Probabilities};

/// Default deformation power.
pub const DEFAULT_POWER: f64 = 1.2;
/// Default reconstruction offset.
pub const DEFAULT_OFFSET: f64 = 0.15;

/// Target denominators below this are floored in the adjustment penalty.
const TARGET_FLOOR: f64 = 1e-12;

/// Naturals summing to a fixed total.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u32>,
    total: u32,
}

impl CountVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidCounts("empty alphabet".into()));
        }
        let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        let total = u32::try_from(total)
            .map_err(|_| Error::InvalidCounts(format!("sum {total} overflows u32")))?;
        Ok(Self { counts, total })
    }

    /// Checks the counts against an expected total.
    pub fn with_total(counts: Vec<u32>, total: u32) -> Result<Self> {
        let v = Self::new(counts)?;
        if v.total != total {
            return Err(Error::InvalidCounts(format!(
                "counts sum to {}, expected {total}",
                v.total
            )));
        }
        Ok(v)
    }

    #[inline]
    pub fn total(&self) -> u32 {
        self.total
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.counts
    }
}

impl std::ops::Index<usize> for CountVector {
    type Output = u32;

    fn index(&self, s: usize) -> &u32 {
        &self.counts[s]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Offset {
    Uniform(f64),
    PerSymbol(Vec<f64>),
}

impl Offset {
    fn get(&self, s: usize) -> f64 {
        match self {
            Offset::Uniform(o) => *o,
            Offset::PerSymbol(v) => v[s],
        }
    }

    fn has_zero(&self) -> bool {
        match self {
            Offset::Uniform(o) => *o == 0.0,
            Offset::PerSymbol(v) => v.contains(&0.0),
        }
    }
}

/// Power and offset of the reconstruction `q_s ∝ Q_s^w + o_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformParams {
    pub power: f64,
    pub offset: Offset,
}

impl Default for DeformParams {
    fn default() -> Self {
        Self {
            power: DEFAULT_POWER,
            offset: Offset::Uniform(DEFAULT_OFFSET),
        }
    }
}

impl DeformParams {
    pub fn new(power: f64, offset: f64) -> Result<Self> {
        let params = Self {
            power,
            offset: Offset::Uniform(offset),
        };
        params.validate(None)?;
        Ok(params)
    }

    /// Plain `Q / K` reconstruction.
    pub fn identity() -> Self {
        Self {
            power: 1.0,
            offset: Offset::Uniform(0.0),
        }
    }

    fn validate(&self, alphabet: Option<usize>) -> Result<()> {
        check_power(self.power)?;
        let bad = |o: f64| !(o.is_finite() && o >= 0.0);
        match &self.offset {
            Offset::Uniform(o) if bad(*o) => Err(Error::InvalidArgument(format!(
                "offset {o} must be finite and >= 0"
            ))),
            Offset::PerSymbol(v) => {
                if let Some(d) = alphabet {
                    if v.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            actual: v.len(),
                        });
                    }
                }
                match v.iter().find(|&&o| bad(o)) {
                    Some(o) => Err(Error::InvalidArgument(format!(
                        "offset {o} must be finite and >= 0"
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Smallest count the quantizer may assign: reconstruction needs
    /// `Q_s > 0` wherever `o_s = 0`.
    pub fn min_count(&self) -> u32 {
        u32::from(self.offset.has_zero())
    }
}

fn check_power(power: f64) -> Result<()> {
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power {power} must be finite and > 0"
        )));
    }
    Ok(())
}

/// Quantizes `p` to counts summing to `total` after the `1/power` deformation.
///
/// Counts start at `round(K t_s)` for the deformed target `t`. While the sum
/// is off by `n`, the `n` cheapest coordinates (by the change of
/// `(Q_s - K t_s)^2 / (K t_s)`) move one unit toward the target sum, lowest
/// index first among equal costs. Counts never go below zero.
pub fn quantize(p: &Probabilities, total: u32, power: f64) -> Result<CountVector> {
    quantize_with_floor(p, total, power, 0)
}

/// [`quantize`] with every count held at or above `min_count`.
///
/// `min_count = 1` is the form a tANS table needs, where every symbol must
/// own at least one state.
pub fn quantize_with_floor(
    p: &Probabilities,
    total: u32,
    power: f64,
    min_count: u32,
) -> Result<CountVector> {
    if total == 0 {
        return Err(Error::InvalidArgument("total must be >= 1".into()));
    }
    check_power(power)?;
    let d = p.len();
    if u64::from(min_count) * d as u64 > u64::from(total) {
        return Err(Error::InvalidArgument(format!(
            "{d} symbols with at least {min_count} each exceed total {total}"
        )));
    }

    let targets = deformed_targets(p, power);
    let scale = f64::from(total);
    let pk: Vec<f64> = targets.iter().map(|&t| t * scale).collect();

    let mut counts: Vec<i64> = pk
        .iter()
        .map(|&x| (x.round_ties_even() as i64).max(i64::from(min_count)))
        .collect();
    let target = i64::from(total);
    let floor = i64::from(min_count);
    let mut sum: i64 = counts.iter().sum();

    let mut order: Vec<(f64, usize)> = Vec::with_capacity(d);
    while sum != target {
        let step: i64 = if target > sum { 1 } else { -1 };
        order.clear();
        order.extend(
            counts
                .iter()
                .zip(&pk)
                .enumerate()
                .filter_map(|(s, (&q, &x))| {
                    if q + step < floor {
                        return None;
                    }
                    let x = x.max(TARGET_FLOOR);
                    let (before, after) = (q as f64 - x, (q + step) as f64 - x);
                    Some(((after * after - before * before) / x, s))
                }),
        );
        if order.is_empty() {
            return Err(Error::Unadjustable {
                target: u64::from(total),
            });
        }
        let n = ((target - sum).unsigned_abs() as usize).min(order.len());
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, s) in &order[..n] {
            counts[s] += step;
        }
        sum = counts.iter().sum();
    }

    CountVector::with_total(counts.into_iter().map(|c| c as u32).collect(), total)
}

/// `p^(1/w)` renormalized to sum to one.
pub fn deformed_targets(p: &Probabilities, power: f64) -> Vec<f64> {
    let inv = 1.0 / power;
    let raised: Vec<f64> = if power == 1.0 {
        p.as_slice().to_vec()
    } else {
        p.as_slice().iter().map(|&v| v.powf(inv)).collect()
    };
    let norm = crate::probmodel::compensated_sum(raised.iter().copied());
    raised.into_iter().map(|v| v / norm).collect()
}

/// Decoder-side distribution `q_s = (Q_s^w + o_s) / Σ (Q^w + o)`.
pub fn reconstruct(counts: &CountVector, params: &DeformParams) -> Result<Probabilities> {
    params.validate(Some(counts.len()))?;
    let weights = counts
        .counts()
        .iter()
        .enumerate()
        .map(|(s, &q)| {
            let q = f64::from(q);
            let v = if params.power == 1.0 {
                q
            } else {
                q.powf(params.power)
            };
            let v = v + params.offset.get(s);
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::ZeroProbability { symbol: s })
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Probabilities::from_weights(&weights)
}

/// `ΔH / H` of coding a `p` source with the reconstruction of `counts`.
pub fn relative_loss(
    p: &Probabilities,
    counts: &CountVector,
    params: &DeformParams,
) -> Result<f64> {
    let q = reconstruct(counts, params)?;
    let h = entropy(p);
    if h == 0.0 {
        return Ok(0.0);
    }
    Ok(kl_divergence(p, &q)? / h)
}

/// Relative size increase `ΔH / H` caused by quantizing `p` to `total` and
/// reconstructing with `params`.
///
/// With a zero offset the counts are floored at one, otherwise the
/// reconstruction would assign zero probability to some symbols.
pub fn quantization_loss(p: &Probabilities, total: u32, params: &DeformParams) -> Result<f64> {
    let counts = quantize_with_floor(p, total, params.power, params.min_count())?;
    relative_loss(p, &counts, params)
}
