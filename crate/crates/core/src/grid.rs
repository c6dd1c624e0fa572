//! Hierarchical base-20 grid codes.
//!
//! The globe is split into 9 x 18 blocks of 20 x 20 degrees. Each further
//! character pair divides the current cell into a 20 x 20 sub-grid (latitude
//! digit first, then longitude digit), so pairs have cell sizes of 20, 1,
//! 0.05, 0.0025 and 0.000125 degrees. An optional eleventh character splits the
//! ten-character cell into 5 rows by 4 columns, numbered `row * 4 + col` from
//! the south-west.
//!
//! Encoding works on integer indices at the finest (eleven character)
//! resolution, so every coarser code is a truncation of the finest one and
//! decoding is exact.
//!
//! ```
//! use geocodes::{GeoPoint, grid};
//!
//! let delhi = GeoPoint::new(28.6139, 77.2090).unwrap();
//! let code = grid::encode(delhi, 10).unwrap();
//! assert_eq!(code.to_string(), "7JWVJ675+HJ");
//! assert!(grid::decode(&code).contains(delhi));
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geo::{CellBounds, GeoPoint};

/// The 20 code symbols; a symbol's position is its digit value.
pub const ALPHABET: &[u8; 20] = b"23456789CFGHJMPQRVWX";
/// Display-only separator, written after the eighth significant character.
pub const SEPARATOR: char = '+';
pub const SEPARATOR_POSITION: usize = 8;
pub const MAX_LENGTH: usize = 11;
/// Lengths accepted by [`encode`] and the parser.
pub const VALID_LENGTHS: [usize; 6] = [2, 4, 6, 8, 10, 11];

const PAIR_COUNT: usize = 5;
const BASE: i64 = 20;
const REFINE_ROWS: i64 = 5;
const REFINE_COLS: i64 = 4;
/// Finest latitude resolution is 1/40000 degree, longitude 1/32000 degree.
const LAT_UNITS_PER_DEG: i64 = 8_000 * REFINE_ROWS;
const LNG_UNITS_PER_DEG: i64 = 8_000 * REFINE_COLS;
const LAT_UNITS: i64 = 180 * LAT_UNITS_PER_DEG;
const LNG_UNITS: i64 = 360 * LNG_UNITS_PER_DEG;

/// Number of distinct eleven-character cells: `9 * 18 * 20^9`.
pub const CELL_COUNT: u64 = 9 * 18 * 20u64.pow(9);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("unsupported code length {0}; expected one of 2, 4, 6, 8, 10, 11")]
    InvalidLength(usize),
    #[error("invalid character {ch:?} at position {position}")]
    InvalidCharacter { ch: char, position: usize },
    #[error("character {ch:?} at position {position} is out of range for that position (max index {max})")]
    IndexOutOfRange { ch: char, position: usize, max: u8 },
    #[error("cell index {0} is out of range")]
    CellIndexOutOfRange(u64),
}

/// A validated grid code of 2 to 11 significant characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCode {
    digits: [u8; MAX_LENGTH],
    len: u8,
}

impl GridCode {
    /// Builds a code from digit values (0..20), checking length and the
    /// range of the first pair.
    pub fn from_digits(digits: &[u8]) -> Result<Self, GridError> {
        if !VALID_LENGTHS.contains(&digits.len()) {
            return Err(GridError::InvalidLength(digits.len()));
        }
        let mut out = [0u8; MAX_LENGTH];
        for (i, &d) in digits.iter().enumerate() {
            let max = max_digit(i);
            if d > max {
                let ch = ALPHABET.get(d as usize).map(|&c| c as char).unwrap_or('?');
                return Err(GridError::IndexOutOfRange {
                    ch,
                    position: i,
                    max,
                });
            }
            out[i] = d;
        }
        Ok(GridCode {
            digits: out,
            len: digits.len() as u8,
        })
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits[..self.len()]
    }

    /// Significant characters without the separator.
    pub fn significant(&self) -> String {
        self.digits()
            .iter()
            .map(|&d| ALPHABET[d as usize] as char)
            .collect()
    }

    /// The enclosing code of `len` characters.
    pub fn truncate(&self, len: usize) -> Result<GridCode, GridError> {
        if len > self.len() {
            return Err(GridError::InvalidLength(len));
        }
        GridCode::from_digits(&self.digits[..len])
    }

    /// Mixed-radix index of an eleven-character code, in code order.
    pub fn cell_index(&self) -> Option<u64> {
        if self.len() != MAX_LENGTH {
            return None;
        }
        let mut idx = 0u64;
        for (i, &d) in self.digits().iter().enumerate() {
            idx = idx * radix(i) + d as u64;
        }
        Some(idx)
    }

    /// Inverse of [`GridCode::cell_index`].
    pub fn from_cell_index(index: u64) -> Result<GridCode, GridError> {
        if index >= CELL_COUNT {
            return Err(GridError::CellIndexOutOfRange(index));
        }
        let mut digits = [0u8; MAX_LENGTH];
        let mut rest = index;
        for i in (0..MAX_LENGTH).rev() {
            let r = radix(i);
            digits[i] = (rest % r) as u8;
            rest /= r;
        }
        GridCode::from_digits(&digits)
    }
}

fn radix(position: usize) -> u64 {
    match position {
        0 => 9,
        1 => 18,
        _ => 20,
    }
}

fn max_digit(position: usize) -> u8 {
    radix(position) as u8 - 1
}

impl fmt::Display for GridCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &d) in self.digits().iter().enumerate() {
            if i == SEPARATOR_POSITION {
                write!(f, "{SEPARATOR}")?;
            }
            write!(f, "{}", ALPHABET[d as usize] as char)?;
        }
        if self.len() == SEPARATOR_POSITION {
            write!(f, "{SEPARATOR}")?;
        }
        Ok(())
    }
}

impl FromStr for GridCode {
    type Err = GridError;

    /// Parses a code case-insensitively. The `+` separator is ignored
    /// wherever it appears; error positions refer to the input string.
    fn from_str(s: &str) -> Result<Self, GridError> {
        let mut digits = Vec::with_capacity(MAX_LENGTH);
        for (position, ch) in s.chars().enumerate() {
            if ch == SEPARATOR {
                continue;
            }
            let upper = ch.to_ascii_uppercase();
            let d = ALPHABET
                .iter()
                .position(|&c| c as char == upper)
                .ok_or(GridError::InvalidCharacter { ch, position })?;
            let index = digits.len();
            if index < 2 && d as u8 > max_digit(index) {
                return Err(GridError::IndexOutOfRange {
                    ch,
                    position,
                    max: max_digit(index),
                });
            }
            digits.push(d as u8);
        }
        GridCode::from_digits(&digits)
    }
}

fn lat_edge(units: i64) -> f64 {
    units as f64 / LAT_UNITS_PER_DEG as f64 - 90.0
}

fn lng_edge(units: i64) -> f64 {
    units as f64 / LNG_UNITS_PER_DEG as f64 - 180.0
}

/// Index of the finest-resolution row or column containing `coord`, made
/// consistent with the float edges that [`decode`] reports.
fn finest_index(coord: f64, offset: f64, per_deg: i64, count: i64, edge: fn(i64) -> f64) -> i64 {
    let mut k = (((coord + offset) * per_deg as f64).floor() as i64).clamp(0, count - 1);
    while k > 0 && edge(k) > coord {
        k -= 1;
    }
    while k + 1 < count && edge(k + 1) <= coord {
        k += 1;
    }
    k
}

/// Encodes `p` into a code of `length` significant characters.
///
/// Latitude 90 falls into the northernmost row of cells.
pub fn encode(p: GeoPoint, length: usize) -> Result<GridCode, GridError> {
    if !VALID_LENGTHS.contains(&length) {
        return Err(GridError::InvalidLength(length));
    }
    let lat_k = finest_index(p.lat(), 90.0, LAT_UNITS_PER_DEG, LAT_UNITS, lat_edge);
    let lng_k = finest_index(p.lng(), 180.0, LNG_UNITS_PER_DEG, LNG_UNITS, lng_edge);

    let mut digits = [0u8; MAX_LENGTH];
    let lat_q = lat_k / REFINE_ROWS;
    let lng_q = lng_k / REFINE_COLS;
    for pair in 0..PAIR_COUNT {
        let div = BASE.pow((PAIR_COUNT - 1 - pair) as u32);
        digits[2 * pair] = ((lat_q / div) % BASE) as u8;
        digits[2 * pair + 1] = ((lng_q / div) % BASE) as u8;
    }
    let row = lat_k % REFINE_ROWS;
    let col = lng_k % REFINE_COLS;
    digits[10] = (row * REFINE_COLS + col) as u8;

    GridCode::from_digits(&digits[..length])
}

/// The exact rectangle denoted by `code`.
pub fn decode(code: &GridCode) -> CellBounds {
    let digits = code.digits();
    let pairs = digits.len().min(2 * PAIR_COUNT) / 2;

    let mut lat_lo = 0i64;
    let mut lng_lo = 0i64;
    let mut lat_span = LAT_UNITS;
    let mut lng_span = LNG_UNITS;
    for pair in 0..pairs {
        lat_span /= if pair == 0 { 9 } else { BASE };
        lng_span /= if pair == 0 { 18 } else { BASE };
        lat_lo += digits[2 * pair] as i64 * lat_span;
        lng_lo += digits[2 * pair + 1] as i64 * lng_span;
    }
    if digits.len() == MAX_LENGTH {
        let d = digits[10] as i64;
        lat_span /= REFINE_ROWS;
        lng_span /= REFINE_COLS;
        lat_lo += (d / REFINE_COLS) * lat_span;
        lng_lo += (d % REFINE_COLS) * lng_span;
    }

    CellBounds {
        south: lat_edge(lat_lo),
        west: lng_edge(lng_lo),
        north: lat_edge(lat_lo + lat_span),
        east: lng_edge(lng_lo + lng_span),
    }
}

/// Parses and decodes in one step.
pub fn decode_str(code: &str) -> Result<CellBounds, GridError> {
    Ok(decode(&code.parse()?))
}

/// Number of leading identical significant characters.
pub fn shared_prefix_length(a: &GridCode, b: &GridCode) -> usize {
    a.digits()
        .iter()
        .zip(b.digits())
        .take_while(|(x, y)| x == y)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lng: f64) -> GeoPoint {
        GeoPoint::new(lat, lng).unwrap()
    }

    #[test]
    fn delhi_golden_code() {
        // worked by hand: lat units 4744556, lng units 8230688
        let code = encode(pt(28.6139, 77.2090), 10).unwrap();
        assert_eq!(code.to_string(), "7JWVJ675+HJ");
        let code = encode(pt(28.6139, 77.2090), 11).unwrap();
        assert_eq!(code.to_string(), "7JWVJ675+HJ6");
    }

    #[test]
    fn south_west_corner_is_22() {
        assert_eq!(encode(pt(-90.0, -180.0), 2).unwrap().to_string(), "22");
        let b = decode_str("22").unwrap();
        assert_eq!(
            (b.south, b.west, b.north, b.east),
            (-90.0, -180.0, -70.0, -160.0)
        );
    }

    #[test]
    fn north_pole_and_antimeridian_encode() {
        let code = encode(pt(90.0, 179.999_999_9), 11).unwrap();
        assert_eq!(code.cell_index(), Some(CELL_COUNT - 1));
        assert!(decode(&code).contains(pt(90.0, 179.999_999_9)));
        let code = encode(pt(0.0, 180.0), 4).unwrap();
        assert_eq!(code.digits()[1], 0);
    }

    #[test]
    fn display_separator_placement() {
        let p = pt(28.6139, 77.2090);
        assert_eq!(encode(p, 8).unwrap().to_string(), "7JWVJ675+");
        assert_eq!(encode(p, 6).unwrap().to_string(), "7JWVJ6");
        assert_eq!("7JWVJ675+".parse::<GridCode>().unwrap().len(), 8);
    }

    #[test]
    fn rejects_unsupported_lengths() {
        for len in [0, 1, 3, 5, 7, 9, 12] {
            assert_eq!(
                encode(pt(0.0, 0.0), len),
                Err(GridError::InvalidLength(len))
            );
        }
        assert_eq!("7JW".parse::<GridCode>(), Err(GridError::InvalidLength(3)));
        assert_eq!(
            "7JWVJ675+HJ62".parse::<GridCode>(),
            Err(GridError::InvalidLength(12))
        );
    }

    #[test]
    fn parse_errors_report_position() {
        assert_eq!(
            "7JWVJ675+HA".parse::<GridCode>(),
            Err(GridError::InvalidCharacter {
                ch: 'A',
                position: 10
            })
        );
        // 'C' is index 8, fine; 'F' is index 9 which exceeds the latitude range
        assert!("C2".parse::<GridCode>().is_ok());
        assert_eq!(
            "F2".parse::<GridCode>(),
            Err(GridError::IndexOutOfRange {
                ch: 'F',
                position: 0,
                max: 8
            })
        );
        assert_eq!(
            "2W".parse::<GridCode>(),
            Err(GridError::IndexOutOfRange {
                ch: 'W',
                position: 1,
                max: 17
            })
        );
    }

    #[test]
    fn parse_is_case_insensitive() {
        let a: GridCode = "7jwvj675+hj".parse().unwrap();
        assert_eq!(a.to_string(), "7JWVJ675+HJ");
    }

    #[test]
    fn eleven_char_cell_size_at_equator() {
        let b = decode(&encode(pt(0.00001, 0.00001), 11).unwrap());
        // 0.000125/4 and 0.000125/5 degrees times 111,195 m per degree
        let per_deg = 111_195.08;
        assert!((b.width_m() - 0.000125 / 4.0 * per_deg).abs() < 1e-3);
        assert!((b.height_m() - 0.000125 / 5.0 * per_deg).abs() < 1e-3);
        assert!((b.width_m() - 3.47).abs() < 0.01);
        assert!((b.height_m() - 2.78).abs() < 0.01);
    }

    #[test]
    fn shared_prefix_examples() {
        let a: GridCode = "7JWVF23W+GQQ".parse().unwrap();
        let b: GridCode = "7JWVF36Q+P4".parse().unwrap();
        assert_eq!(shared_prefix_length(&a, &b), 5);
        assert_eq!(shared_prefix_length(&b, &b), 10);
    }

    #[test]
    fn cell_index_bijection_edges() {
        assert_eq!(encode(pt(-90.0, -180.0), 11).unwrap().cell_index(), Some(0));
        let last = GridCode::from_cell_index(CELL_COUNT - 1).unwrap();
        assert_eq!(last.to_string(), "CVXXXXXX+XXX");
        assert!(GridCode::from_cell_index(CELL_COUNT).is_err());
        assert_eq!(CELL_COUNT, 82_944_000_000_000);
    }
}
