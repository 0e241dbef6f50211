//! Averaged experiments over random distributions, and the end-to-end
//! roundtrip check.
//!
//! Trials run in parallel. Each trial draws its distribution from a seed
//! derived from the master seed and the trial index, and per-trial results
//! are summed in index order, so the thread count never changes the output.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::automaton::{mean_bits_per_symbol, stationary, AutomatonModel};
use crate::error::{Error, Result};
use crate::header_codec::{
    header_cost_bits, stream_decode_header, stream_encode_header, MAX_STREAM_TOTAL,
};
use crate::probmodel::{
    compensated_sum, entropy, kl_divergence, mdl_penalty, random_simplex, Probabilities,
};
use crate::quantizer::{quantize_with_floor, reconstruct, DeformParams};
use crate::tans::{build_spread, decode, encode, SpreadKind, TansCoder};

/// Largest sum accepted by the benches.
pub const MAX_BENCH_SUM: u32 = 1 << 20;

pub const DEFAULT_ALPHABET: usize = 256;
pub const DEFAULT_STATES: u32 = 2048;
pub const DEFAULT_POWERS: [f64; 4] = [1.0, 1.1, 1.2, 1.3];
pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub alphabet: usize,
    /// tANS table size; used by [`bench_tans`] only.
    pub states: u32,
    pub sums: Vec<u32>,
    pub powers: Vec<f64>,
    pub offset: f64,
    pub trials: usize,
    pub seed: u64,
    /// Frame lengths for the description-length columns of [`bench_quant`].
    pub frames: Vec<u64>,
    pub spreads: Vec<SpreadKind>,
    /// Fixed distribution used by every trial instead of random draws.
    pub distribution: Option<Probabilities>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            alphabet: DEFAULT_ALPHABET,
            states: DEFAULT_STATES,
            sums: vec![DEFAULT_STATES],
            powers: DEFAULT_POWERS.to_vec(),
            offset: crate::quantizer::DEFAULT_OFFSET,
            trials: DEFAULT_TRIALS,
            seed: 0,
            frames: Vec::new(),
            spreads: SpreadKind::STANDARD.to_vec(),
            distribution: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.alphabet == 0 {
            return bad("alphabet must be >= 1".into());
        }
        if self.sums.is_empty() || self.powers.is_empty() {
            return bad("at least one sum and one power are required".into());
        }
        if let Some(&k) = self.sums.iter().find(|&&k| k == 0 || k > MAX_BENCH_SUM) {
            return bad(format!("sum {k} outside 1..={MAX_BENCH_SUM}"));
        }
        for &w in &self.powers {
            DeformParams::new(w, self.offset)?;
        }
        if let Some(p) = &self.distribution {
            if p.len() != self.alphabet {
                return Err(Error::DimensionMismatch {
                    expected: self.alphabet,
                    actual: p.len(),
                });
            }
        }
        Ok(())
    }

    fn validate_tans(&self) -> Result<()> {
        self.validate()?;
        if !self.states.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "states {} must be a power of two",
                self.states
            )));
        }
        if self.alphabet > self.states as usize {
            return Err(Error::InvalidArgument(format!(
                "alphabet {} exceeds states {}",
                self.alphabet, self.states
            )));
        }
        if let Some(&k) = self.sums.iter().find(|&&k| k > self.states) {
            return Err(Error::InvalidArgument(format!(
                "sum {k} exceeds states {}",
                self.states
            )));
        }
        if self.spreads.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one spread kind is required".into(),
            ));
        }
        Ok(())
    }

    fn source(&self, trial: usize) -> Result<Probabilities> {
        match &self.distribution {
            Some(p) => Ok(p.clone()),
            None => random_simplex(self.alphabet, trial_seed(self.seed, trial as u64)),
        }
    }
}

/// Seed of trial `trial`: the first output of stream `trial` of the ChaCha8
/// generator seeded with `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// One row of [`bench_quant`]: averages over `trials` sources.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantRow {
    pub alphabet: usize,
    pub sum: u32,
    pub power: f64,
    pub offset: f64,
    pub trials: usize,
    /// Mean `ΔH / H`.
    pub mean_delta_h: f64,
    /// Mean `ΔH` in bits/symbol.
    pub mean_kl_bits: f64,
    /// `lg n(D, K)`.
    pub header_bits_exact: f64,
    pub header_bits_estimate: f64,
    /// Mean size of the streamed header, empty when `K` exceeds the stream
    /// coder's limit.
    pub header_bits_stream: Option<f64>,
    pub frame_len: Option<u64>,
    /// `header_bits_exact + frame_len * mean_kl_bits`.
    pub mdl_bits: Option<f64>,
}

struct QuantTrial {
    relative: f64,
    kl: f64,
    stream_bits: Option<f64>,
}

fn quant_trial(p: &Probabilities, k: u32, params: &DeformParams) -> Result<QuantTrial> {
    let counts = quantize_with_floor(p, k, params.power, params.min_count())?;
    let q = reconstruct(&counts, params)?;
    let kl = kl_divergence(p, &q)?;
    let h = entropy(p);
    let stream_bits = if k <= MAX_STREAM_TOTAL {
        Some(stream_encode_header(&counts)?.payload_bits() as f64)
    } else {
        None
    };
    Ok(QuantTrial {
        relative: if h == 0.0 { 0.0 } else { kl / h },
        kl,
        stream_bits,
    })
}

/// Quantization loss and header size for every `(K, w)` of the config.
pub fn bench_quant(config: &BenchConfig) -> Result<Vec<QuantRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &k in &config.sums {
        let cost = header_cost_bits(config.alphabet, k)?;
        for &w in &config.powers {
            let params = DeformParams::new(w, config.offset)?;
            let trials = (0..config.trials)
                .into_par_iter()
                .map(|t| quant_trial(&config.source(t)?, k, &params))
                .collect::<Result<Vec<_>>>()?;
            let relative: Vec<f64> = trials.iter().map(|t| t.relative).collect();
            let kl: Vec<f64> = trials.iter().map(|t| t.kl).collect();
            let stream: Option<Vec<f64>> = trials.iter().map(|t| t.stream_bits).collect();
            let base = QuantRow {
                alphabet: config.alphabet,
                sum: k,
                power: w,
                offset: config.offset,
                trials: config.trials,
                mean_delta_h: mean(&relative),
                mean_kl_bits: mean(&kl),
                header_bits_exact: cost.exact,
                header_bits_estimate: cost.estimate,
                header_bits_stream: stream.map(|v| mean(&v)),
                frame_len: None,
                mdl_bits: None,
            };
            for &n in &config.frames {
                let mdl = mdl_penalty(cost.exact, n, base.mean_kl_bits)?;
                rows.push(QuantRow {
                    frame_len: Some(n),
                    mdl_bits: Some(mdl.total),
                    ..base.clone()
                });
            }
            if config.frames.is_empty() {
                rows.push(base);
            }
        }
    }
    Ok(rows)
}

/// One row of [`bench_tans`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TansRow {
    pub alphabet: usize,
    pub sum: u32,
    pub states: u32,
    pub power: f64,
    pub offset: f64,
    pub spread: String,
    /// Trials contributing to the mean.
    pub trials: usize,
    /// Trials dropped because the automaton has no unique stationary
    /// distribution.
    pub excluded: usize,
    /// Mean `ΔH / H` of the automaton on the true source.
    pub mean_delta_h: f64,
}

/// Relative overhead of the tANS automaton built from a quantized `p`, or
/// `None` when its chain is degenerate.
///
/// The header carries `quantize(p, K, w)`; the decoder reconstructs `q`,
/// requantizes it to `L` states and spreads them using `q`. The automaton is
/// then evaluated against the true `p`.
pub fn tans_trial(
    p: &Probabilities,
    sum: u32,
    states: u32,
    params: &DeformParams,
    kind: SpreadKind,
) -> Result<Option<f64>> {
    let counts = quantize_with_floor(p, sum, params.power, params.min_count())?;
    let q = reconstruct(&counts, params)?;
    let table = quantize_with_floor(&q, states, 1.0, 1)?;
    let spread = match build_spread(kind, &table, &q) {
        Err(Error::ReducibleChain { .. } | Error::NonConvergence { .. }) => return Ok(None),
        other => other?,
    };
    match crate::automaton::automaton_delta_h(p, &spread) {
        Ok(v) => Ok(Some(v)),
        Err(Error::ReducibleChain { .. } | Error::NonConvergence { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Automaton overhead for every `(K, w, spread kind)` of the config.
pub fn bench_tans(config: &BenchConfig) -> Result<Vec<TansRow>> {
    config.validate_tans()?;
    let mut rows = Vec::new();
    for &k in &config.sums {
        for &w in &config.powers {
            let params = DeformParams::new(w, config.offset)?;
            let per_trial = (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let p = config.source(t)?;
                    config
                        .spreads
                        .iter()
                        .map(|&kind| tans_trial(&p, k, config.states, &params, kind))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            for (j, kind) in config.spreads.iter().enumerate() {
                let used: Vec<f64> = per_trial.iter().filter_map(|t| t[j]).collect();
                rows.push(TansRow {
                    alphabet: config.alphabet,
                    sum: k,
                    states: config.states,
                    power: w,
                    offset: config.offset,
                    spread: kind.to_string(),
                    trials: used.len(),
                    excluded: config.trials - used.len(),
                    mean_delta_h: if used.is_empty() {
                        f64::NAN
                    } else {
                        mean(&used)
                    },
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundtripConfig {
    pub distribution: Probabilities,
    pub sum: u32,
    pub power: f64,
    pub offset: f64,
    pub states: u32,
    pub spread: SpreadKind,
    pub frames: u64,
    pub seed: u64,
    /// Header to decode in place of the freshly encoded one.
    pub header: Option<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundtripReport {
    pub alphabet: usize,
    pub sum: u32,
    pub states: u32,
    pub spread: String,
    pub frames: u64,
    pub entropy: f64,
    /// `ΔH` of the reconstructed distribution, bits/symbol.
    pub quant_kl_bits: f64,
    pub header_bytes: usize,
    pub header_bits: u64,
    pub header_bits_exact: f64,
    /// Stationary mean cost of the automaton; empty for a degenerate chain.
    pub analytic_bits_per_symbol: Option<f64>,
    pub empirical_bits_per_symbol: f64,
    pub payload_bits: u64,
    /// `header_bits + frames * (bits/symbol - entropy)`.
    pub mdl_bits: f64,
}

/// Quantizes, streams the header, decodes it, builds the automaton and
/// codes `frames` sampled symbols, checking every stage.
///
/// Returns the report and the encoded header. Corrupt headers give
/// [`Error::Decode`]; a stage that decodes but disagrees with its input gives
/// [`Error::VerificationMismatch`].
pub fn roundtrip(config: &RoundtripConfig) -> Result<(RoundtripReport, Vec<u8>)> {
    let p = &config.distribution;
    let d = p.len();
    let params = DeformParams::new(config.power, config.offset)?;
    if config.sum > MAX_STREAM_TOTAL {
        return Err(Error::InvalidArgument(format!(
            "sum {} exceeds {MAX_STREAM_TOTAL}",
            config.sum
        )));
    }
    if !config.states.is_power_of_two() || d > config.states as usize {
        return Err(Error::InvalidArgument(format!(
            "states {} must be a power of two >= alphabet {d}",
            config.states
        )));
    }

    let counts = quantize_with_floor(p, config.sum, config.power, params.min_count())?;
    let header = stream_encode_header(&counts)?.into_bytes();
    let wire = config.header.as_deref().unwrap_or(&header);
    let (decoded, used) = stream_decode_header(wire)?;
    if used != wire.len() {
        return Err(Error::Decode(format!(
            "{} trailing header bytes",
            wire.len() - used
        )));
    }
    if decoded != counts {
        return Err(Error::VerificationMismatch(
            "decoded header differs from the quantized counts".into(),
        ));
    }

    let q = reconstruct(&decoded, &params)?;
    let table = quantize_with_floor(&q, config.states, 1.0, 1)?;
    let spread = build_spread(config.spread, &table, &q)?;
    let coder = TansCoder::new(&spread);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sampler =
        WeightedIndex::new(p.as_slice()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let symbols: Vec<u32> = (0..config.frames)
        .map(|_| sampler.sample(&mut rng) as u32)
        .collect();
    let (bits, final_state) = encode(&coder, &symbols)?;
    let back = decode(&coder, &bits, final_state, symbols.len())?;
    if back != symbols {
        return Err(Error::VerificationMismatch(
            "decoded symbols differ from the input".into(),
        ));
    }

    let analytic = if d == 1 {
        Some(0.0)
    } else {
        let model = AutomatonModel::build(&spread, p)?;
        match stationary(&model) {
            Ok(rho) => Some(mean_bits_per_symbol(&model, &rho)),
            Err(Error::ReducibleChain { .. } | Error::NonConvergence { .. }) => None,
            Err(e) => return Err(e),
        }
    };
    let h = entropy(p);
    let empirical = if config.frames == 0 {
        0.0
    } else {
        bits.len_bits() as f64 / config.frames as f64
    };
    let header_bits = wire.len() as u64 * 8;
    let overhead = (analytic.unwrap_or(empirical) - h).max(0.0);

    let report = RoundtripReport {
        alphabet: d,
        sum: config.sum,
        states: config.states,
        spread: config.spread.to_string(),
        frames: config.frames,
        entropy: h,
        quant_kl_bits: kl_divergence(p, &q)?,
        header_bytes: wire.len(),
        header_bits,
        header_bits_exact: header_cost_bits(d, config.sum)?.exact,
        analytic_bits_per_symbol: analytic,
        empirical_bits_per_symbol: empirical,
        payload_bits: bits.len_bits(),
        mdl_bits: mdl_penalty(header_bits as f64, config.frames, overhead)?.total,
    };
    Ok((report, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> BenchConfig {
        BenchConfig {
            alphabet: 8,
            states: 64,
            sums: vec![32, 64],
            powers: vec![1.0, 1.2],
            trials,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|t| trial_seed(1, t)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), 100);
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
    }

    #[test]
    fn quant_uniform_pair_is_lossless() {
        let config = BenchConfig {
            alphabet: 2,
            sums: vec![2],
            powers: vec![1.0],
            offset: 0.0,
            trials: 1,
            distribution: Some(Probabilities::new(vec![0.5, 0.5]).unwrap()),
            ..Default::default()
        };
        let rows = bench_quant(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_delta_h, 0.0);
    }

    #[test]
    fn quant_rows_and_frames() {
        let mut config = small(20);
        assert_eq!(bench_quant(&config).unwrap().len(), 4);
        config.frames = vec![100, 1000];
        let rows = bench_quant(&config).unwrap();
        assert_eq!(rows.len(), 8);
        let r = &rows[1];
        assert_eq!(r.frame_len, Some(1000));
        assert!(
            (r.mdl_bits.unwrap() - (r.header_bits_exact + 1000.0 * r.mean_kl_bits)).abs() < 1e-9
        );
        assert!(r.header_bits_stream.unwrap() >= r.header_bits_exact);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let config = small(50);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        assert_eq!(
            one.install(|| bench_quant(&config)),
            four.install(|| bench_quant(&config))
        );
        assert_eq!(
            one.install(|| bench_tans(&config)),
            four.install(|| bench_tans(&config))
        );
    }

    #[test]
    fn tans_skewed_ordering() {
        let config = BenchConfig {
            alphabet: 4,
            states: 16,
            sums: vec![16],
            powers: vec![1.0],
            offset: 0.0,
            trials: 1,
            distribution: Some(Probabilities::new(vec![0.04, 0.16, 0.16, 0.64]).unwrap()),
            ..Default::default()
        };
        let rows = bench_tans(&config).unwrap();
        let get = |name: &str| rows.iter().find(|r| r.spread == name).unwrap().mean_delta_h;
        assert!(get("tuned-sorted") < get("fast"));
    }

    #[test]
    fn invalid_configs() {
        assert!(bench_quant(&small(0)).is_err());
        let mut c = small(1);
        c.sums = vec![128];
        assert!(bench_tans(&c).is_err());
        c.sums = vec![MAX_BENCH_SUM + 1];
        assert!(bench_quant(&c).is_err());
        let mut c = small(1);
        c.states = 48;
        assert!(bench_tans(&c).is_err());
    }

    fn skewed_roundtrip() -> RoundtripConfig {
        RoundtripConfig {
            distribution: Probabilities::new(vec![0.04, 0.16, 0.16, 0.64]).unwrap(),
            sum: 16,
            power: 1.0,
            offset: 0.0,
            states: 16,
            spread: SpreadKind::TunedSorted,
            frames: 20_000,
            seed: 3,
            header: None,
        }
    }

    #[test]
    fn roundtrip_skewed() {
        let (report, header) = roundtrip(&skewed_roundtrip()).unwrap();
        assert_eq!(report.header_bytes, header.len());
        let analytic = report.analytic_bits_per_symbol.unwrap();
        assert!((analytic - report.empirical_bits_per_symbol).abs() < 0.03);
        assert!(analytic >= report.entropy);
    }

    #[test]
    fn roundtrip_single_symbol() {
        let config = RoundtripConfig {
            distribution: Probabilities::new(vec![1.0]).unwrap(),
            states: 16,
            ..skewed_roundtrip()
        };
        let (report, _) = roundtrip(&config).unwrap();
        assert_eq!(report.payload_bits, 0);
        assert_eq!(report.analytic_bits_per_symbol, Some(0.0));
    }

    #[test]
    fn roundtrip_header_errors() {
        let (_, header) = roundtrip(&skewed_roundtrip()).unwrap();
        let mut config = skewed_roundtrip();
        config.header = Some(header[..header.len() - 1].to_vec());
        assert!(matches!(roundtrip(&config), Err(Error::Decode(_))));

        let other = Probabilities::new(vec![0.25; 4]).unwrap();
        let foreign =
            stream_encode_header(&quantize_with_floor(&other, 16, 1.0, 1).unwrap()).unwrap();
        config.header = Some(foreign.into_bytes());
        assert!(matches!(
            roundtrip(&config),
            Err(Error::VerificationMismatch(_))
        ));
    }
}
