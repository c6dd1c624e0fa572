//! Namespace combinatorics for machine codes.
//!
//! Everything here is exact integer arithmetic except [`earth_cell_count`],
//! which divides the sphere's area by a cell area.
//!
//! ```
//! use geocodes::capacity::{self, NamespaceSpec};
//!
//! // 36 symbols, 300 million households
//! let spec = NamespaceSpec::new(36, 300_000_000).unwrap();
//! assert_eq!(capacity::min_code_length(spec), 6);
//! ```

use num_bigint::BigUint;
use thiserror::Error;

use crate::geo::EARTH_RADIUS_M;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CapacityError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(u64),
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("cannot arrange {k} words from a list of {list_size}")]
    InvalidK { list_size: u64, k: u64 },
    #[error("cell side must be a positive finite length, got {0}")]
    InvalidCellSide(String),
}

/// An alphabet size and the number of things that need distinct codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamespaceSpec {
    alphabet_size: u64,
    population: u128,
}

impl NamespaceSpec {
    pub fn new(alphabet_size: u64, population: u128) -> Result<Self, CapacityError> {
        if alphabet_size < 2 {
            return Err(CapacityError::AlphabetTooSmall(alphabet_size));
        }
        if population == 0 {
            return Err(CapacityError::EmptyPopulation);
        }
        Ok(NamespaceSpec {
            alphabet_size,
            population,
        })
    }

    pub fn alphabet_size(&self) -> u64 {
        self.alphabet_size
    }

    pub fn population(&self) -> u128 {
        self.population
    }
}

/// Smallest `n >= 1` with `alphabet_size^n >= population`.
pub fn min_code_length(spec: NamespaceSpec) -> u32 {
    let base = spec.alphabet_size as u128;
    let mut n = 1u32;
    let mut capacity = base;
    while capacity < spec.population {
        n += 1;
        capacity = match capacity.checked_mul(base) {
            Some(c) => c,
            // exceeds every u128 population
            None => break,
        };
    }
    n
}

/// Ordered arrangements of `k` distinct words from a list of `list_size`:
/// the falling factorial `list_size * (list_size - 1) * ... * (list_size - k + 1)`.
pub fn distinct_word_arrangements(list_size: u64, k: u64) -> Result<BigUint, CapacityError> {
    if k > list_size {
        return Err(CapacityError::InvalidK { list_size, k });
    }
    Ok(((list_size - k + 1)..=list_size).fold(BigUint::from(1u32), |acc, f| acc * f))
}

/// `floor(4 pi R^2 / side^2)`: square cells of `cell_side_m` needed to tile
/// the sphere's area.
pub fn earth_cell_count(cell_side_m: f64) -> Result<u128, CapacityError> {
    if !(cell_side_m.is_finite() && cell_side_m > 0.0) {
        return Err(CapacityError::InvalidCellSide(cell_side_m.to_string()));
    }
    let area = 4.0 * std::f64::consts::PI * EARTH_RADIUS_M * EARTH_RADIUS_M;
    Ok((area / (cell_side_m * cell_side_m)).floor() as u128)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(a: u64, p: u128) -> NamespaceSpec {
        NamespaceSpec::new(a, p).unwrap()
    }

    #[test]
    fn household_and_cell_lengths() {
        assert_eq!(min_code_length(spec(36, 300_000_000)), 6);
        assert_eq!(min_code_length(spec(36, 57_000_000_000_000)), 9);
    }

    #[test]
    fn degenerate_population_needs_one_character() {
        assert_eq!(min_code_length(spec(2, 1)), 1);
        assert_eq!(min_code_length(spec(2, 2)), 1);
        assert_eq!(min_code_length(spec(2, 3)), 2);
    }

    #[test]
    fn huge_population_does_not_overflow() {
        assert_eq!(min_code_length(spec(2, u128::MAX)), 128);
    }

    #[test]
    fn invalid_specs() {
        assert_eq!(
            NamespaceSpec::new(1, 5),
            Err(CapacityError::AlphabetTooSmall(1))
        );
        assert_eq!(
            NamespaceSpec::new(36, 0),
            Err(CapacityError::EmptyPopulation)
        );
    }

    #[test]
    fn arrangement_examples() {
        assert_eq!(
            distinct_word_arrangements(3, 3).unwrap(),
            BigUint::from(6u32)
        );
        assert_eq!(
            distinct_word_arrangements(77, 1).unwrap(),
            BigUint::from(77u32)
        );
        assert_eq!(
            distinct_word_arrangements(5, 0).unwrap(),
            BigUint::from(1u32)
        );
        assert_eq!(
            distinct_word_arrangements(3, 4),
            Err(CapacityError::InvalidK { list_size: 3, k: 4 })
        );
    }

    #[test]
    fn cell_counts() {
        let c = earth_cell_count(3.0).unwrap() as f64;
        assert!((c - 5.7e13).abs() / 5.7e13 < 0.02, "{c}");
        assert!(earth_cell_count(4.0e7).unwrap() <= 1);
        // 4*pi*R^2 = 5.1007e14 m^2, / 13.9^2 = 2.640e12
        let c = earth_cell_count(13.9).unwrap() as f64;
        assert!((c - 2.64e12).abs() / 2.64e12 < 0.005, "{c}");
        assert!(earth_cell_count(0.0).is_err());
        assert!(earth_cell_count(-3.0).is_err());
        assert!(earth_cell_count(f64::NAN).is_err());
    }
}
