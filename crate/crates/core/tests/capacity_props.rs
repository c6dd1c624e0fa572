use geocodes::capacity::{
    distinct_word_arrangements, earth_cell_count, min_code_length, NamespaceSpec,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn spec(a: u64, p: u128) -> NamespaceSpec {
    NamespaceSpec::new(a, p).unwrap()
}

#[test]
fn exact_powers_are_the_boundary() {
    for a in [2u64, 20, 36] {
        for n in 1..=12u32 {
            let power = (a as u128).pow(n);
            assert_eq!(min_code_length(spec(a, power)), n, "a={a} n={n}");
            assert_eq!(min_code_length(spec(a, power + 1)), n + 1, "a={a} n={n}+");
        }
    }
}

fn count_arrangements(pool: &mut Vec<bool>, k: usize) -> u64 {
    if k == 0 {
        return 1;
    }
    let mut total = 0;
    for i in 0..pool.len() {
        if !pool[i] {
            pool[i] = true;
            total += count_arrangements(pool, k - 1);
            pool[i] = false;
        }
    }
    total
}

#[test]
fn arrangements_match_enumeration() {
    for size in 0..=8usize {
        for k in 0..=size {
            let expected = count_arrangements(&mut vec![false; size], k);
            assert_eq!(
                distinct_word_arrangements(size as u64, k as u64).unwrap(),
                BigUint::from(expected),
                "size={size} k={k}"
            );
        }
    }
}

proptest! {
    #[test]
    fn cell_count_decreases_with_side(a in 0.01..1.0e7f64, b in 0.01..1.0e7f64) {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(earth_cell_count(small).unwrap() >= earth_cell_count(large).unwrap());
    }

    #[test]
    fn min_length_is_minimal(a in 2u64..64, p in 1u128..1_000_000_000_000) {
        let n = min_code_length(spec(a, p));
        prop_assert!((a as u128).pow(n) >= p);
        prop_assert!(n == 1 || (a as u128).pow(n - 1) < p);
    }
}
