//! C ABI for `ppvq`.
//!
//! Every function returns a [`PpvqStatus`]. On failure a message is kept per
//! thread and can be read with [`ppvq_last_error`]. Spreads and coders are
//! opaque handles released with their `_free` function. Functions writing
//! into caller buffers report the required length and return
//! `PPVQ_BUFFER_TOO_SMALL` when the buffer is short.
//!
//! Pointer arguments must be valid for the stated lengths; null is rejected
//! with `PPVQ_NULL_POINTER` wherever a pointer is required.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ppvq::automaton::automaton_delta_h;
use ppvq::header_codec::{header_cost_bits, stream_decode_header, stream_encode_header};
use ppvq::probmodel::{entropy, kl_divergence, Probabilities};
use ppvq::quantizer::{quantize_with_floor, reconstruct, CountVector, DeformParams};
use ppvq::tans::{build_spread, decode, encode, Bitstream, SpreadKind, SpreadTable, TansCoder};
use ppvq::Error;

pub const PPVQ_SPREAD_FAST: u32 = 0;
pub const PPVQ_SPREAD_TUNED_SORTED: u32 = 1;
pub const PPVQ_SPREAD_TUNED_BUCKETED: u32 = 2;
pub const PPVQ_SPREAD_TUNED_ITERATED: u32 = 3;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpvqStatus {
    PpvqOk = 0,
    PpvqNullPointer = 1,
    PpvqInvalidArgument = 2,
    PpvqInvalidDistribution = 3,
    PpvqDimensionMismatch = 4,
    PpvqInvalidCounts = 5,
    PpvqDecodeError = 6,
    PpvqVerificationMismatch = 7,
    PpvqReducibleChain = 8,
    PpvqNonConvergence = 9,
    PpvqBufferTooSmall = 10,
    PpvqPanic = 11,
}

use PpvqStatus::*;

/// Opaque symbol spread.
pub struct PpvqSpread(SpreadTable);

/// Opaque tANS coding tables.
pub struct PpvqCoder(TansCoder);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PpvqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidDistribution(_) | Error::ZeroProbability { .. } => {
                PpvqInvalidDistribution
            }
            Error::DimensionMismatch { .. } => PpvqDimensionMismatch,
            Error::InvalidCounts(_) | Error::InvalidSpread(_) => PpvqInvalidCounts,
            Error::Decode(_) => PpvqDecodeError,
            Error::VerificationMismatch(_) => PpvqVerificationMismatch,
            Error::ReducibleChain { .. } => PpvqReducibleChain,
            Error::NonConvergence { .. } => PpvqNonConvergence,
            _ => PpvqInvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> PpvqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PpvqOk
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PpvqPanic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(PpvqNullPointer, format!("{name} is null"))
}

fn too_small(needed: usize, capacity: usize) -> Failure {
    Failure(
        PpvqBufferTooSmall,
        format!("buffer holds {capacity}, need {needed}"),
    )
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn probabilities(p: *const f64, len: usize) -> Result<Probabilities, Failure> {
    Ok(Probabilities::new(input(p, len, "p")?.to_vec())?)
}

unsafe fn count_vector(counts: *const u32, len: usize) -> Result<CountVector, Failure> {
    Ok(CountVector::new(input(counts, len, "counts")?.to_vec())?)
}

/// Message of the last failed call on this thread, or null after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ppvq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Shannon entropy of `p[0..len]` in bits.
///
/// # Safety
/// `p` must point to `len` doubles and `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn ppvq_entropy(p: *const f64, len: usize, out: *mut f64) -> PpvqStatus {
    guard(|| {
        let v = entropy(&probabilities(p, len)?);
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// `KL(p || q)` in bits.
///
/// # Safety
/// `p` and `q` must point to `len` doubles and `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn ppvq_kl_divergence(
    p: *const f64,
    q: *const f64,
    len: usize,
    out: *mut f64,
) -> PpvqStatus {
    guard(|| {
        let v = kl_divergence(&probabilities(p, len)?, &probabilities(q, len)?)?;
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Quantizes `p` to `len` counts summing to `total`, each at least
/// `min_count`, with deformation power `power`.
///
/// # Safety
/// `p` must point to `len` doubles and `counts_out` to `len` integers.
#[no_mangle]
pub unsafe extern "C" fn ppvq_quantize(
    p: *const f64,
    len: usize,
    total: u32,
    power: f64,
    min_count: u32,
    counts_out: *mut u32,
) -> PpvqStatus {
    guard(|| {
        let counts = quantize_with_floor(&probabilities(p, len)?, total, power, min_count)?;
        output(counts_out, len, "counts_out")?.copy_from_slice(counts.counts());
        Ok(())
    })
}

/// Decoder-side distribution `q_s ∝ counts_s^power + offset`.
///
/// # Safety
/// `counts` must point to `len` integers and `q_out` to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ppvq_reconstruct(
    counts: *const u32,
    len: usize,
    power: f64,
    offset: f64,
    q_out: *mut f64,
) -> PpvqStatus {
    guard(|| {
        let q = reconstruct(
            &count_vector(counts, len)?,
            &DeformParams::new(power, offset)?,
        )?;
        output(q_out, len, "q_out")?.copy_from_slice(q.as_slice());
        Ok(())
    })
}

/// Exact `lg` of the number of count vectors of `alphabet` entries summing
/// to `total`, and its closed-form estimate.
///
/// # Safety
/// `exact` and `estimate` must each point to one double.
#[no_mangle]
pub unsafe extern "C" fn ppvq_header_cost_bits(
    alphabet: usize,
    total: u32,
    exact: *mut f64,
    estimate: *mut f64,
) -> PpvqStatus {
    guard(|| {
        let cost = header_cost_bits(alphabet, total)?;
        *out_ref(exact, "exact")? = cost.exact;
        *out_ref(estimate, "estimate")? = cost.estimate;
        Ok(())
    })
}

/// Encodes `counts` as a self-delimiting header. `*len_out` receives the
/// header length, also when `capacity` is too small.
///
/// # Safety
/// `counts` must point to `len` integers, `buf` to `capacity` bytes and
/// `len_out` to one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn ppvq_header_encode(
    counts: *const u32,
    len: usize,
    buf: *mut u8,
    capacity: usize,
    len_out: *mut usize,
) -> PpvqStatus {
    guard(|| {
        let header = stream_encode_header(&count_vector(counts, len)?)?;
        let bytes = header.as_bytes();
        *out_ref(len_out, "len_out")? = bytes.len();
        if bytes.len() > capacity {
            return Err(too_small(bytes.len(), capacity));
        }
        output(buf, bytes.len(), "buf")?.copy_from_slice(bytes);
        Ok(())
    })
}

/// Decodes a header from the start of `buf`. Writes the alphabet size to
/// `*alphabet_out` (also when `capacity` is too small), the counts to
/// `counts_out`, their sum to `*total_out` and the header length to
/// `*consumed_out`.
///
/// # Safety
/// `buf` must point to `len` bytes, `counts_out` to `capacity` integers and
/// the scalar outputs to one value each.
#[no_mangle]
pub unsafe extern "C" fn ppvq_header_decode(
    buf: *const u8,
    len: usize,
    counts_out: *mut u32,
    capacity: usize,
    alphabet_out: *mut usize,
    total_out: *mut u32,
    consumed_out: *mut usize,
) -> PpvqStatus {
    guard(|| {
        let (counts, used) = stream_decode_header(input(buf, len, "buf")?)?;
        *out_ref(alphabet_out, "alphabet_out")? = counts.len();
        if counts.len() > capacity {
            return Err(too_small(counts.len(), capacity));
        }
        output(counts_out, counts.len(), "counts_out")?.copy_from_slice(counts.counts());
        *out_ref(total_out, "total_out")? = counts.total();
        *out_ref(consumed_out, "consumed_out")? = used;
        Ok(())
    })
}

fn spread_kind(kind: u32, iterations: u32) -> Result<SpreadKind, Failure> {
    match kind {
        PPVQ_SPREAD_FAST => Ok(SpreadKind::Fast),
        PPVQ_SPREAD_TUNED_SORTED => Ok(SpreadKind::TunedSorted),
        PPVQ_SPREAD_TUNED_BUCKETED => Ok(SpreadKind::TunedBucketed),
        PPVQ_SPREAD_TUNED_ITERATED if iterations >= 1 => Ok(SpreadKind::TunedIterated(iterations)),
        _ => Err(Failure(
            PpvqInvalidArgument,
            format!("spread kind {kind} with {iterations} iterations"),
        )),
    }
}

/// Builds a spread of `kind` (a `PPVQ_SPREAD_*` constant) for `counts`,
/// whose sum must be a power of two. `p` may be null for the fast spread;
/// `iterations` is used by the iterated kind only.
///
/// # Safety
/// `counts` must point to `len` integers, `p` to `len` doubles or be null,
/// and `out` to one handle slot.
#[no_mangle]
pub unsafe extern "C" fn ppvq_spread_new(
    kind: u32,
    iterations: u32,
    counts: *const u32,
    p: *const f64,
    len: usize,
    out: *mut *mut PpvqSpread,
) -> PpvqStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let kind = spread_kind(kind, iterations)?;
        let counts = count_vector(counts, len)?;
        let p = match (kind, p.is_null()) {
            (SpreadKind::Fast, true) => Probabilities::uniform(len)?,
            (_, true) => return Err(null("p")),
            _ => probabilities(p, len)?,
        };
        let spread = build_spread(kind, &counts, &p)?;
        *slot = Box::into_raw(Box::new(PpvqSpread(spread)));
        Ok(())
    })
}

/// Releases a spread; null is ignored.
///
/// # Safety
/// `spread` must come from [`ppvq_spread_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ppvq_spread_free(spread: *mut PpvqSpread) {
    if !spread.is_null() {
        drop(Box::from_raw(spread));
    }
}

/// Number of states `L`, or 0 for a null handle.
///
/// # Safety
/// `spread` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ppvq_spread_states(spread: *const PpvqSpread) -> u32 {
    spread.as_ref().map_or(0, |s| s.0.states())
}

/// Copies the symbol of each state `L..2L` into `symbols_out`.
///
/// # Safety
/// `spread` must be a live handle and `symbols_out` point to `capacity`
/// integers.
#[no_mangle]
pub unsafe extern "C" fn ppvq_spread_symbols(
    spread: *const PpvqSpread,
    symbols_out: *mut u32,
    capacity: usize,
) -> PpvqStatus {
    guard(|| {
        let spread = spread.as_ref().ok_or_else(|| null("spread"))?;
        let symbols = spread.0.symbols();
        if symbols.len() > capacity {
            return Err(too_small(symbols.len(), capacity));
        }
        output(symbols_out, symbols.len(), "symbols_out")?.copy_from_slice(symbols);
        Ok(())
    })
}

/// Relative overhead `(bits/symbol - H(p)) / H(p)` of the spread's automaton
/// on an i.i.d. `p` source.
///
/// # Safety
/// `spread` must be a live handle, `p` point to `len` doubles and `out` to
/// one double.
#[no_mangle]
pub unsafe extern "C" fn ppvq_automaton_delta_h(
    spread: *const PpvqSpread,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> PpvqStatus {
    guard(|| {
        let spread = spread.as_ref().ok_or_else(|| null("spread"))?;
        let v = automaton_delta_h(&probabilities(p, len)?, &spread.0)?;
        *out_ref(out, "out")? = v;
        Ok(())
    })
}

/// Builds coding tables for a spread. The spread may be freed afterwards.
///
/// # Safety
/// `spread` must be a live handle and `out` point to one handle slot.
#[no_mangle]
pub unsafe extern "C" fn ppvq_coder_new(
    spread: *const PpvqSpread,
    out: *mut *mut PpvqCoder,
) -> PpvqStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        *slot = ptr::null_mut();
        let spread = spread.as_ref().ok_or_else(|| null("spread"))?;
        *slot = Box::into_raw(Box::new(PpvqCoder(TansCoder::new(&spread.0))));
        Ok(())
    })
}

/// Releases a coder; null is ignored.
///
/// # Safety
/// `coder` must come from [`ppvq_coder_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ppvq_coder_free(coder: *mut PpvqCoder) {
    if !coder.is_null() {
        drop(Box::from_raw(coder));
    }
}

/// Encodes `symbols[0..len]`. Writes the bit count to `*bits_out` (also when
/// `capacity` is too small; the buffer needs `(bits + 7) / 8` bytes) and the
/// final state, which the decoder starts from, to `*state_out`.
///
/// # Safety
/// `coder` must be a live handle, `symbols` point to `len` integers, `buf` to
/// `capacity` bytes and the scalar outputs to one value each.
#[no_mangle]
pub unsafe extern "C" fn ppvq_coder_encode(
    coder: *const PpvqCoder,
    symbols: *const u32,
    len: usize,
    buf: *mut u8,
    capacity: usize,
    bits_out: *mut u64,
    state_out: *mut u32,
) -> PpvqStatus {
    guard(|| {
        let coder = coder.as_ref().ok_or_else(|| null("coder"))?;
        let (bits, state) = encode(&coder.0, input(symbols, len, "symbols")?)?;
        *out_ref(bits_out, "bits_out")? = bits.len_bits();
        let bytes = bits.as_bytes();
        if bytes.len() > capacity {
            return Err(too_small(bytes.len(), capacity));
        }
        output(buf, bytes.len(), "buf")?.copy_from_slice(bytes);
        *out_ref(state_out, "state_out")? = state;
        Ok(())
    })
}

/// Decodes `len` symbols from `bits` bits of `buf`, starting at `state`.
/// Fails unless the whole stream is consumed.
///
/// # Safety
/// `coder` must be a live handle, `buf` point to `(bits + 7) / 8` bytes and
/// `symbols_out` to `len` integers.
#[no_mangle]
pub unsafe extern "C" fn ppvq_coder_decode(
    coder: *const PpvqCoder,
    buf: *const u8,
    bits: u64,
    state: u32,
    symbols_out: *mut u32,
    len: usize,
) -> PpvqStatus {
    guard(|| {
        let coder = coder.as_ref().ok_or_else(|| null("coder"))?;
        let n_bytes = usize::try_from(bits.div_ceil(8))
            .map_err(|_| Failure(PpvqInvalidArgument, format!("{bits} bits")))?;
        let stream = Bitstream::from_bytes(input(buf, n_bytes, "buf")?.to_vec(), bits)?;
        let symbols = decode(&coder.0, &stream, state, len)?;
        output(symbols_out, len, "symbols_out")?.copy_from_slice(&symbols);
        Ok(())
    })
}
