mod common;

use common::{pt, rng, uniform_point};
use geocodes::geo::haversine_distance;
use geocodes::grid::{self, GridCode, ALPHABET, VALID_LENGTHS};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3000))]

    #[test]
    fn decode_contains_encoded_point(lat in -90.0..=90.0f64, lng in -180.0..180.0f64) {
        let p = pt(lat, lng);
        for len in VALID_LENGTHS {
            let code = grid::encode(p, len).unwrap();
            prop_assert!(grid::decode(&code).contains(p), "{code} {p:?}");
        }
    }

    #[test]
    fn parent_cells_strictly_contain_children(lat in -90.0..=90.0f64, lng in -180.0..180.0f64) {
        let code = grid::encode(pt(lat, lng), 10).unwrap();
        for len in [4, 6, 8, 10] {
            let child = grid::decode(&code.truncate(len).unwrap());
            let parent = grid::decode(&code.truncate(len - 2).unwrap());
            prop_assert!(parent.strictly_contains(&child));
        }
    }

    #[test]
    fn display_parses_back(lat in -90.0..=90.0f64, lng in -180.0..180.0f64, i in 0..VALID_LENGTHS.len()) {
        let code = grid::encode(pt(lat, lng), VALID_LENGTHS[i]).unwrap();
        prop_assert_eq!(code.to_string().parse::<GridCode>().unwrap(), code);
    }

    #[test]
    fn points_in_one_cell_share_its_prefix(
        lat in -89.0..89.0f64, lng in -180.0..180.0f64,
        k in 1usize..=5, fy in 0.001..0.999f64, fx in 0.001..0.999f64,
    ) {
        let anchor = grid::encode(pt(lat, lng), 2 * k).unwrap();
        let cell = grid::decode(&anchor);
        let inside = pt(
            cell.south + fy * (cell.north - cell.south),
            cell.west + fx * (cell.east - cell.west),
        );
        let code = grid::encode(inside, grid::MAX_LENGTH).unwrap();
        prop_assert!(grid::shared_prefix_length(&anchor, &code) >= 2 * k);
    }
}

// One substituted character at pair level k stays inside the level k-1 cell,
// so the centers move at most that cell's diagonal.
#[test]
fn single_substitution_moves_within_parent_cell() {
    let mut r = rng(7);
    for _ in 0..100 {
        let code = grid::encode(uniform_point(&mut r), grid::MAX_LENGTH).unwrap();
        let center = grid::decode(&code).center();
        for pos in 2..code.len() {
            let parent_len = if pos == 10 { 10 } else { pos / 2 * 2 };
            let bound = grid::decode(&code.truncate(parent_len).unwrap()).diagonal_m();
            for d in 0..ALPHABET.len() as u8 {
                if d == code.digits()[pos] {
                    continue;
                }
                let mut digits = code.digits().to_vec();
                digits[pos] = d;
                let Ok(edited) = GridCode::from_digits(&digits) else {
                    continue;
                };
                let moved = haversine_distance(center, grid::decode(&edited).center());
                assert!(
                    moved <= bound * (1.0 + 1e-9),
                    "{code} pos {pos}: {moved} > {bound}"
                );
            }
        }
    }
}

// First-pair edits are bounded only by the globe.
#[test]
fn first_pair_edits_can_cross_the_planet() {
    let code = grid::encode(pt(28.6139, 77.2090), 10).unwrap();
    let mut digits = code.digits().to_vec();
    digits[1] = 0;
    let edited = GridCode::from_digits(&digits).unwrap();
    let moved = haversine_distance(grid::decode(&code).center(), grid::decode(&edited).center());
    assert!(moved > 1.0e7);
}

#[test]
fn encoding_is_pure() {
    let mut r = rng(3);
    for _ in 0..1000 {
        let p = uniform_point(&mut r);
        let len = VALID_LENGTHS[r.random_range(0..VALID_LENGTHS.len())];
        assert_eq!(grid::encode(p, len).unwrap(), grid::encode(p, len).unwrap());
    }
}
