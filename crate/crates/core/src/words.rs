//! Three-word codes for eleven-character grid cells.
//!
//! A point is quantized to its eleven-character grid cell, the cell's
//! mixed-radix index is scrambled with a keyed Feistel permutation over the
//! triple space `[0, N^3)`, and the result is written in base `N` as three
//! word indices. Decoding runs the same steps backwards. Triples whose
//! unscrambled value is not a real cell are rejected as out of range.
//!
//! The scrambling is deliberate: neighbouring cells get unrelated triples.
//!
//! ```
//! use geocodes::{GeoPoint, words::{self, WordList}};
//!
//! let list = WordList::builtin();
//! let p = GeoPoint::new(28.6139, 77.2090).unwrap();
//! let triple = words::encode(p, &list).unwrap();
//! let cell = words::decode(&triple, &list).unwrap();
//! assert!(cell.contains(p));
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::geo::{CellBounds, GeoPoint};
use crate::grid::{self, GridCode, CELL_COUNT};

/// Synthetic list `w00000` .. `w44999`.
const BUILTIN_WORDLIST: &str = include_str!("../data/wordlist.txt");

/// Round keys for the four Feistel rounds.
pub const ROUND_KEYS: [u64; 4] = [
    0xA076_1D64_78BD_642F,
    0xE703_7ED1_A0B4_28DB,
    0x8EBC_6AF0_9C88_C6E3,
    0x5899_65CC_7537_4CC3,
];
const MUL_1: u64 = 0x9E37_79B9_7F4A_7C15;
const MUL_2: u64 = 0xBF58_476D_1CE4_E5B9;

/// Largest list whose triple space still fits the 64-bit permutation.
pub const MAX_WORDLIST_SIZE: usize = 2_097_151;

#[derive(Debug, Error)]
pub enum WordError {
    #[error("wordlist has {size} words; at least {required} are needed to cover every cell")]
    WordlistTooSmall { size: usize, required: usize },
    #[error("wordlist has {size} words; at most {max} are supported")]
    WordlistTooLarge { size: usize, max: usize },
    #[error("wordlist line {line}: duplicate word {word:?}")]
    DuplicateWord { word: String, line: usize },
    #[error("wordlist line {line}: invalid word {word:?}")]
    InvalidWord { word: String, line: usize },
    #[error("unknown word {0:?}")]
    UnknownWord(String),
    #[error("triple {0} does not denote any cell")]
    OutOfRange(String),
    #[error("malformed word triple {0:?}: expected three words separated by '.'")]
    MalformedTriple(String),
    #[error("reading wordlist: {0}")]
    Io(#[from] std::io::Error),
}

/// An immutable, indexed word list. A word's index is its 0-based line number.
#[derive(Debug, Clone)]
pub struct WordList {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl WordList {
    /// Builds a list, rejecting duplicates and tokens that could not round-trip
    /// through the dotted display form.
    pub fn new<I, S>(words: I) -> Result<Self, WordError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = Vec::new();
        let mut index = HashMap::new();
        for (i, w) in words.into_iter().enumerate() {
            let w: String = w.into();
            let line = i + 1;
            let valid = !w.is_empty()
                && !w.contains('.')
                && !w.chars().any(char::is_whitespace)
                && w.to_lowercase() == w;
            if !valid {
                return Err(WordError::InvalidWord { word: w, line });
            }
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(WordError::DuplicateWord { word: w, line });
            }
            list.push(w);
        }
        if list.len() > MAX_WORDLIST_SIZE {
            return Err(WordError::WordlistTooLarge {
                size: list.len(),
                max: MAX_WORDLIST_SIZE,
            });
        }
        Ok(WordList { words: list, index })
    }

    /// Parses one word per line. A trailing newline is allowed.
    pub fn from_text(text: &str) -> Result<Self, WordError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return WordList::new(Vec::<String>::new());
        }
        WordList::new(body.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WordError> {
        WordList::from_text(&std::fs::read_to_string(path)?)
    }

    /// The shipped 45,000-word synthetic list.
    pub fn builtin() -> Self {
        WordList::from_text(BUILTIN_WORDLIST).expect("builtin wordlist is valid")
    }

    /// `w00000`, `w00001`, ... with `n` entries.
    pub fn synthetic(n: usize) -> Result<Self, WordError> {
        WordList::new((0..n).map(|i| format!("w{i:05}")))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn index_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    fn triple_space(&self) -> u64 {
        let n = self.len() as u64;
        n * n * n
    }

    fn check_capacity(&self) -> Result<(), WordError> {
        let n = self.len() as u64;
        if n.checked_mul(n)
            .and_then(|s| s.checked_mul(n))
            .unwrap_or(u64::MAX)
            < CELL_COUNT
        {
            return Err(WordError::WordlistTooSmall {
                size: self.len(),
                required: min_wordlist_size(),
            });
        }
        Ok(())
    }
}

/// Smallest list size `n` with `n^3 >= CELL_COUNT`.
pub fn min_wordlist_size() -> usize {
    let mut n = (CELL_COUNT as f64).cbrt() as u64;
    while n * n * n < CELL_COUNT {
        n += 1;
    }
    while n > 1 && (n - 1) * (n - 1) * (n - 1) >= CELL_COUNT {
        n -= 1;
    }
    n as usize
}

/// An ordered triple of words, displayed as `w1.w2.w3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordTriple {
    words: [String; 3],
}

impl WordTriple {
    pub fn new(w1: impl Into<String>, w2: impl Into<String>, w3: impl Into<String>) -> Self {
        WordTriple {
            words: [w1.into(), w2.into(), w3.into()],
        }
    }

    pub fn words(&self) -> &[String; 3] {
        &self.words
    }

    /// Number of positions holding the same word.
    pub fn shared_words(&self, other: &WordTriple) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .filter(|(a, b)| a == b)
            .count()
    }

    /// Copy with the word at `position` replaced.
    pub fn with_word(&self, position: usize, word: impl Into<String>) -> WordTriple {
        let mut t = self.clone();
        t.words[position] = word.into();
        t
    }
}

impl fmt::Display for WordTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.words[0], self.words[1], self.words[2])
    }
}

impl FromStr for WordTriple {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, WordError> {
        let parts: Vec<&str> = s.trim().split('.').collect();
        if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
            return Err(WordError::MalformedTriple(s.to_string()));
        }
        Ok(WordTriple::new(
            parts[0].to_lowercase(),
            parts[1].to_lowercase(),
            parts[2].to_lowercase(),
        ))
    }
}

/// Keyed permutation of `[0, domain)` built from a balanced Feistel network
/// with cycle walking.
#[derive(Debug, Clone, Copy)]
pub struct FeistelPermutation {
    domain: u64,
    half_bits: u32,
}

impl FeistelPermutation {
    /// `domain` must be at least 2 and below `2^64`.
    pub fn new(domain: u64) -> Self {
        assert!(
            domain >= 2,
            "permutation domain must hold at least two values"
        );
        let bits = 64 - (domain - 1).leading_zeros();
        let half_bits = bits.div_ceil(2).max(1);
        assert!(half_bits <= 32);
        FeistelPermutation { domain, half_bits }
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    /// Width in bits of the underlying block (twice the half width).
    pub fn block_bits(&self) -> u32 {
        2 * self.half_bits
    }

    fn mask(&self) -> u64 {
        (1u64 << self.half_bits) - 1
    }

    fn round(&self, half: u64, key: u64) -> u64 {
        let mut v = (half ^ key).wrapping_mul(MUL_1);
        v ^= v >> 29;
        v = v.wrapping_mul(MUL_2);
        v ^= v >> 32;
        v & self.mask()
    }

    fn encrypt_block(&self, x: u64) -> u64 {
        let mut left = x >> self.half_bits;
        let mut right = x & self.mask();
        for key in ROUND_KEYS {
            let next = left ^ self.round(right, key);
            left = right;
            right = next;
        }
        (left << self.half_bits) | right
    }

    fn decrypt_block(&self, x: u64) -> u64 {
        let mut left = x >> self.half_bits;
        let mut right = x & self.mask();
        for key in ROUND_KEYS.iter().rev() {
            let prev = right ^ self.round(left, *key);
            right = left;
            left = prev;
        }
        (left << self.half_bits) | right
    }

    pub fn permute(&self, x: u64) -> u64 {
        assert!(x < self.domain);
        let mut y = self.encrypt_block(x);
        while y >= self.domain {
            y = self.encrypt_block(y);
        }
        y
    }

    pub fn unpermute(&self, y: u64) -> u64 {
        assert!(y < self.domain);
        let mut x = self.decrypt_block(y);
        while x >= self.domain {
            x = self.decrypt_block(x);
        }
        x
    }
}

/// Mixed-radix index of the eleven-character cell containing `p`.
pub fn cell_index(p: GeoPoint) -> u64 {
    grid::encode(p, grid::MAX_LENGTH)
        .expect("eleven is a valid length")
        .cell_index()
        .expect("eleven-character code")
}

/// Triple for the cell with mixed-radix index `cell`.
pub fn encode_cell(cell: u64, list: &WordList) -> Result<WordTriple, WordError> {
    list.check_capacity()?;
    if cell >= CELL_COUNT {
        return Err(WordError::OutOfRange(cell.to_string()));
    }
    let n = list.len() as u64;
    let v = FeistelPermutation::new(list.triple_space()).permute(cell);
    let word = |i: u64| list.words[i as usize].clone();
    Ok(WordTriple::new(
        word(v / (n * n)),
        word((v / n) % n),
        word(v % n),
    ))
}

pub fn encode(p: GeoPoint, list: &WordList) -> Result<WordTriple, WordError> {
    encode_cell(cell_index(p), list)
}

/// Cell index denoted by `triple`.
pub fn decode_cell(triple: &WordTriple, list: &WordList) -> Result<u64, WordError> {
    list.check_capacity()?;
    let n = list.len() as u64;
    let mut v = 0u64;
    for w in triple.words() {
        let i = list
            .index_of(w)
            .ok_or_else(|| WordError::UnknownWord(w.clone()))?;
        v = v * n + i as u64;
    }
    let cell = FeistelPermutation::new(list.triple_space()).unpermute(v);
    if cell >= CELL_COUNT {
        return Err(WordError::OutOfRange(triple.to_string()));
    }
    Ok(cell)
}

pub fn decode(triple: &WordTriple, list: &WordList) -> Result<CellBounds, WordError> {
    let cell = decode_cell(triple, list)?;
    let code = GridCode::from_cell_index(cell).expect("cell index below CELL_COUNT");
    Ok(grid::decode(&code))
}
