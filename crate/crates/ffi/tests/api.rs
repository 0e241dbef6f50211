use std::ffi::CStr;
use std::ptr;

use ppvq_ffi::*;
use PpvqStatus::*;

const P: [f64; 4] = [0.04, 0.16, 0.16, 0.64];
const LS: [u32; 4] = [1, 3, 2, 10];

fn last_error() -> String {
    let p = ppvq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn entropy_and_kl() {
    let mut h = 0.0;
    assert_eq!(unsafe { ppvq_entropy(P.as_ptr(), 4, &mut h) }, PpvqOk);
    assert!((h - 1.443_856_189_774_724_7).abs() < 1e-12);
    assert!(ppvq_last_error().is_null());

    let q: Vec<f64> = LS.iter().map(|&c| f64::from(c) / 16.0).collect();
    let mut kl = 0.0;
    assert_eq!(
        unsafe { ppvq_kl_divergence(P.as_ptr(), q.as_ptr(), 4, &mut kl) },
        PpvqOk
    );
    assert!((kl - 0.016_515_829_381_978_41).abs() < 1e-12);

    let bad = [0.5, 0.6];
    assert_eq!(
        unsafe { ppvq_entropy(bad.as_ptr(), 2, &mut h) },
        PpvqInvalidDistribution
    );
    assert!(last_error().contains("invalid distribution"));
    assert_eq!(
        unsafe { ppvq_entropy(ptr::null(), 2, &mut h) },
        PpvqNullPointer
    );
    assert_eq!(
        unsafe { ppvq_entropy(P.as_ptr(), 4, ptr::null_mut()) },
        PpvqNullPointer
    );
}

#[test]
fn quantize_and_reconstruct() {
    let mut counts = [0u32; 4];
    assert_eq!(
        unsafe { ppvq_quantize(P.as_ptr(), 4, 16, 1.0, 1, counts.as_mut_ptr()) },
        PpvqOk
    );
    assert_eq!(counts.iter().sum::<u32>(), 16);
    let mut q = [0.0; 4];
    assert_eq!(
        unsafe { ppvq_reconstruct(LS.as_ptr(), 4, 1.0, 0.0, q.as_mut_ptr()) },
        PpvqOk
    );
    assert_eq!(q, [1.0 / 16.0, 3.0 / 16.0, 2.0 / 16.0, 10.0 / 16.0]);
    let zero = [0u32, 16];
    assert_eq!(
        unsafe { ppvq_reconstruct(zero.as_ptr(), 2, 1.0, 0.0, q.as_mut_ptr()) },
        PpvqInvalidDistribution
    );
    assert_eq!(
        unsafe { ppvq_reconstruct(LS.as_ptr(), 4, -1.0, 0.0, q.as_mut_ptr()) },
        PpvqInvalidArgument
    );
}

#[test]
fn header_roundtrip() {
    let (mut exact, mut estimate) = (0.0, 0.0);
    assert_eq!(
        unsafe { ppvq_header_cost_bits(256, 2048, &mut exact, &mut estimate) },
        PpvqOk
    );
    assert!((exact - 1_151.096_016_607_976).abs() < 1e-9);

    let mut len = 0usize;
    assert_eq!(
        unsafe { ppvq_header_encode(LS.as_ptr(), 4, ptr::null_mut(), 0, &mut len) },
        PpvqBufferTooSmall
    );
    assert!(len > 0);
    let mut buf = vec![0u8; len];
    assert_eq!(
        unsafe { ppvq_header_encode(LS.as_ptr(), 4, buf.as_mut_ptr(), len, &mut len) },
        PpvqOk
    );

    let (mut d, mut total, mut used) = (0usize, 0u32, 0usize);
    let mut out = [0u32; 2];
    let status = unsafe {
        ppvq_header_decode(
            buf.as_ptr(),
            buf.len(),
            out.as_mut_ptr(),
            2,
            &mut d,
            &mut total,
            &mut used,
        )
    };
    assert_eq!((status, d), (PpvqBufferTooSmall, 4));
    let mut out = [0u32; 4];
    let status = unsafe {
        ppvq_header_decode(
            buf.as_ptr(),
            buf.len(),
            out.as_mut_ptr(),
            4,
            &mut d,
            &mut total,
            &mut used,
        )
    };
    assert_eq!(status, PpvqOk);
    assert_eq!((out, total, used), (LS, 16, buf.len()));

    let status = unsafe {
        ppvq_header_decode(
            buf.as_ptr(),
            buf.len() - 1,
            out.as_mut_ptr(),
            4,
            &mut d,
            &mut total,
            &mut used,
        )
    };
    assert_eq!(status, PpvqDecodeError);
    assert!(last_error().contains("decode"));
}

#[test]
fn spread_coder_lifecycle() {
    let mut spread: *mut PpvqSpread = ptr::null_mut();
    let status = unsafe {
        ppvq_spread_new(
            PPVQ_SPREAD_TUNED_SORTED,
            0,
            LS.as_ptr(),
            P.as_ptr(),
            4,
            &mut spread,
        )
    };
    assert_eq!(status, PpvqOk);
    assert_eq!(unsafe { ppvq_spread_states(spread) }, 16);
    let mut symbols = [0u32; 16];
    assert_eq!(
        unsafe { ppvq_spread_symbols(spread, symbols.as_mut_ptr(), 16) },
        PpvqOk
    );
    assert_eq!(symbols, [2, 3, 3, 3, 3, 1, 2, 3, 3, 3, 3, 1, 3, 3, 1, 0]);

    let mut dh = 0.0;
    assert_eq!(
        unsafe { ppvq_automaton_delta_h(spread, P.as_ptr(), 4, &mut dh) },
        PpvqOk
    );
    assert!(dh > 0.0 && dh < 0.0114);

    let mut coder: *mut PpvqCoder = ptr::null_mut();
    assert_eq!(unsafe { ppvq_coder_new(spread, &mut coder) }, PpvqOk);
    unsafe { ppvq_spread_free(spread) };

    let seq: Vec<u32> = (0..1000u32)
        .map(|i| [3, 3, 1, 3, 2, 0, 3, 1][i as usize % 8])
        .collect();
    let (mut bits, mut state) = (0u64, 0u32);
    let status = unsafe {
        ppvq_coder_encode(
            coder,
            seq.as_ptr(),
            seq.len(),
            ptr::null_mut(),
            0,
            &mut bits,
            &mut state,
        )
    };
    assert_eq!(status, PpvqBufferTooSmall);
    let mut buf = vec![0u8; bits.div_ceil(8) as usize];
    let status = unsafe {
        ppvq_coder_encode(
            coder,
            seq.as_ptr(),
            seq.len(),
            buf.as_mut_ptr(),
            buf.len(),
            &mut bits,
            &mut state,
        )
    };
    assert_eq!(status, PpvqOk);

    let mut back = vec![0u32; seq.len()];
    let status = unsafe {
        ppvq_coder_decode(
            coder,
            buf.as_ptr(),
            bits,
            state,
            back.as_mut_ptr(),
            back.len(),
        )
    };
    assert_eq!(status, PpvqOk);
    assert_eq!(back, seq);

    let status = unsafe {
        ppvq_coder_decode(
            coder,
            buf.as_ptr(),
            bits,
            state,
            back.as_mut_ptr(),
            back.len() - 1,
        )
    };
    assert_eq!(status, PpvqDecodeError);
    unsafe { ppvq_coder_free(coder) };
}

#[test]
fn spread_errors() {
    let mut spread: *mut PpvqSpread = ptr::null_mut();
    assert_eq!(
        unsafe { ppvq_spread_new(9, 0, LS.as_ptr(), P.as_ptr(), 4, &mut spread) },
        PpvqInvalidArgument
    );
    assert!(spread.is_null());
    assert_eq!(
        unsafe {
            ppvq_spread_new(
                PPVQ_SPREAD_TUNED_ITERATED,
                0,
                LS.as_ptr(),
                P.as_ptr(),
                4,
                &mut spread,
            )
        },
        PpvqInvalidArgument
    );
    assert_eq!(
        unsafe {
            ppvq_spread_new(
                PPVQ_SPREAD_TUNED_SORTED,
                0,
                LS.as_ptr(),
                ptr::null(),
                4,
                &mut spread,
            )
        },
        PpvqNullPointer
    );
    let odd = [1u32, 2, 3];
    assert_eq!(
        unsafe {
            ppvq_spread_new(
                PPVQ_SPREAD_FAST,
                0,
                odd.as_ptr(),
                ptr::null(),
                3,
                &mut spread,
            )
        },
        PpvqInvalidCounts
    );

    // single symbol: every state maps to itself
    let one = [16u32];
    let p = [1.0];
    assert_eq!(
        unsafe {
            ppvq_spread_new(
                PPVQ_SPREAD_FAST,
                0,
                one.as_ptr(),
                ptr::null(),
                1,
                &mut spread,
            )
        },
        PpvqOk
    );
    let mut dh = 0.0;
    assert_eq!(
        unsafe { ppvq_automaton_delta_h(spread, p.as_ptr(), 1, &mut dh) },
        PpvqReducibleChain
    );
    unsafe { ppvq_spread_free(spread) };
    unsafe { ppvq_spread_free(ptr::null_mut()) };
    unsafe { ppvq_coder_free(ptr::null_mut()) };
    assert_eq!(unsafe { ppvq_spread_states(ptr::null()) }, 0);
}
