mod common;

use common::{pt, rng, uniform_point};
use geocodes::grid::CELL_COUNT;
use geocodes::words::{self, FeistelPermutation, WordList, WordTriple};
use proptest::prelude::*;
use rand::Rng;
use std::sync::LazyLock;

const N: u64 = 45_000;

static LIST: LazyLock<WordList> = LazyLock::new(WordList::builtin);

/// Straight-line reference of the documented block cipher: 4 Feistel rounds
/// on 24-bit halves, then cycle walking below N^3.
fn reference_permute(x: u64) -> u64 {
    const KEYS: [u64; 4] = [
        0xA076_1D64_78BD_642F,
        0xE703_7ED1_A0B4_28DB,
        0x8EBC_6AF0_9C88_C6E3,
        0x5899_65CC_7537_4CC3,
    ];
    let mask = (1u64 << 24) - 1;
    let f = |h: u64, k: u64| {
        let mut v = (h ^ k).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        v ^= v >> 29;
        v = v.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        v ^= v >> 32;
        v & mask
    };
    let mut y = x;
    loop {
        let (mut l, mut r) = (y >> 24, y & mask);
        for k in KEYS {
            (l, r) = (r, l ^ f(r, k));
        }
        y = (l << 24) | r;
        if y < N * N * N {
            return y;
        }
    }
}

#[test]
fn permutation_matches_reference() {
    let perm = FeistelPermutation::new(N * N * N);
    assert_eq!(perm.block_bits(), 48);
    let mut r = rng(11);
    for _ in 0..10_000 {
        let x = r.random_range(0..CELL_COUNT);
        assert_eq!(perm.permute(x), reference_permute(x));
    }
}

#[test]
fn permutation_inverts_on_a_million_values() {
    let perm = FeistelPermutation::new(N * N * N);
    let mut r = rng(12);
    for _ in 0..1_000_000 {
        let x = r.random_range(0..CELL_COUNT);
        assert_eq!(perm.unpermute(perm.permute(x)), x);
    }
}

#[test]
fn triples_are_stable_across_runs() {
    let list = WordList::builtin();
    let t = words::encode(pt(28.6139, 77.2090), &list).unwrap();
    let cell = words::cell_index(pt(28.6139, 77.2090));
    let v = reference_permute(cell);
    let expected = WordTriple::new(
        format!("w{:05}", v / (N * N)),
        format!("w{:05}", (v / N) % N),
        format!("w{:05}", v % N),
    );
    assert_eq!(t, expected);
}

// Neighboring eleven-character cells should look unrelated.
#[test]
fn adjacent_cells_rarely_share_two_words() {
    let list = WordList::builtin();
    let mut r = rng(13);
    let trials = 20_000;
    let mut sharing = 0;
    for _ in 0..trials {
        let p = uniform_point(&mut r);
        let (lat, lng) = (p.lat().clamp(-89.9, 89.9), p.lng().clamp(-179.9, 179.9));
        let q = if r.random_bool(0.5) {
            pt(lat + 0.000025, lng)
        } else {
            pt(lat, lng + 0.00003125)
        };
        let a = words::encode(pt(lat, lng), &list).unwrap();
        let b = words::encode(q, &list).unwrap();
        if a.shared_words(&b) >= 2 {
            sharing += 1;
        }
    }
    let frac = sharing as f64 / trials as f64;
    assert!(frac <= 1e-3, "{frac}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decode_contains_encoded_point(lat in -90.0..=90.0f64, lng in -180.0..180.0f64) {
        let list = &*LIST;
        let p = pt(lat, lng);
        let t = words::encode(p, list).unwrap();
        prop_assert!(words::decode(&t, list).unwrap().contains(p));
        prop_assert_eq!(t.to_string().parse::<WordTriple>().unwrap(), t);
    }

    #[test]
    fn small_domains_are_bijective(domain in 2u64..2000) {
        let perm = FeistelPermutation::new(domain);
        let mut seen = vec![false; domain as usize];
        for x in 0..domain {
            let y = perm.permute(x);
            prop_assert!(!seen[y as usize]);
            seen[y as usize] = true;
            prop_assert_eq!(perm.unpermute(y), x);
        }
    }
}
