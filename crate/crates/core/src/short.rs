//! Short-code registry: random or vanity codes bound to points through a
//! lookup table.
//!
//! Codes carry no geometry, so a code can only be resolved by asking the
//! registry that issued it. Allocation is deterministic for a given seed:
//! the `n`-th allocation draws from ChaCha stream `n` of that seed, so a
//! registry reloaded from disk continues exactly where it left off.
//!
//! The on-disk form is JSON Lines. The first line is a header with the
//! alphabet, code length and seed; each following line is one record,
//! ordered by code.
//!
//! ```
//! use geocodes::{GeoPoint, short::{Registry, RegistryConfig}};
//!
//! let mut reg = Registry::new(RegistryConfig::default().with_seed(42)).unwrap();
//! let p = GeoPoint::new(28.6139, 77.2090).unwrap();
//! let rec = reg.allocate_at(p, 0).unwrap();
//! assert_eq!(rec.code.len(), 6);
//! assert_eq!(reg.resolve(&rec.code).unwrap(), p);
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capacity::{self, NamespaceSpec};
use crate::geo::GeoPoint;

pub const DEFAULT_ALPHABET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
pub const DEFAULT_CODE_LENGTH: usize = 6;
/// Households the default namespace must cover.
pub const DEFAULT_POPULATION: u128 = 300_000_000;

/// Random draws before falling back to a scan for a free code.
const MAX_RANDOM_DRAWS: usize = 64;

#[derive(Debug, Error)]
pub enum ShortCodeError {
    #[error("all {0} codes of the configured length are in use")]
    NamespaceExhausted(u128),
    #[error("code {0} is already registered")]
    CodeTaken(String),
    #[error("malformed code {code:?}: {reason}")]
    MalformedCode { code: String, reason: String },
    #[error("code {0} is not registered")]
    NotFound(String),
    #[error("invalid registry configuration: {0}")]
    InvalidConfig(String),
    #[error("corrupt registry record on line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
    #[error("registry I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortCodeRecord {
    pub code: String,
    pub point: GeoPoint,
    /// Unix seconds.
    pub created: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryConfig {
    pub alphabet: String,
    pub code_length: usize,
    pub seed: u64,
    /// Size of the population the namespace must be able to cover.
    pub expected_population: u128,
}

impl Default for RegistryConfig {
    fn default() -> Self {
        RegistryConfig {
            alphabet: DEFAULT_ALPHABET.to_string(),
            code_length: DEFAULT_CODE_LENGTH,
            seed: 0,
            expected_population: DEFAULT_POPULATION,
        }
    }
}

impl RegistryConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_code_length(mut self, code_length: usize) -> Self {
        self.code_length = code_length;
        self
    }
}

/// A flat, global code namespace and its lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    alphabet: Vec<char>,
    code_length: usize,
    seed: u64,
    records: BTreeMap<String, ShortCodeRecord>,
    /// Live records whose code has exactly `code_length` characters.
    fixed_length_live: u128,
}

#[derive(Serialize, Deserialize)]
struct Header {
    alphabet: String,
    code_length: usize,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Line {
    code: String,
    lat: f64,
    lng: f64,
    created: u64,
}

fn validate_alphabet(alphabet: &str) -> Result<Vec<char>, ShortCodeError> {
    let chars: Vec<char> = alphabet.chars().collect();
    if chars.len() < 2 {
        return Err(ShortCodeError::InvalidConfig(
            "alphabet needs at least two symbols".into(),
        ));
    }
    for (i, c) in chars.iter().enumerate() {
        if !(c.is_ascii_uppercase() || c.is_ascii_digit()) {
            return Err(ShortCodeError::InvalidConfig(format!(
                "alphabet symbol {c:?} is not in [A-Z0-9]"
            )));
        }
        if chars[..i].contains(c) {
            return Err(ShortCodeError::InvalidConfig(format!(
                "alphabet symbol {c:?} repeats"
            )));
        }
    }
    Ok(chars)
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Registry {
    /// Creates an empty registry, checking that `code_length` is long enough
    /// for `expected_population`.
    pub fn new(config: RegistryConfig) -> Result<Self, ShortCodeError> {
        let alphabet = validate_alphabet(&config.alphabet)?;
        let spec = NamespaceSpec::new(alphabet.len() as u64, config.expected_population)
            .map_err(|e| ShortCodeError::InvalidConfig(e.to_string()))?;
        let min = capacity::min_code_length(spec) as usize;
        if config.code_length < min {
            return Err(ShortCodeError::InvalidConfig(format!(
                "code length {} is below the minimum {min} for a population of {}",
                config.code_length, config.expected_population
            )));
        }
        Ok(Registry {
            alphabet,
            code_length: config.code_length,
            seed: config.seed,
            records: BTreeMap::new(),
            fixed_length_live: 0,
        })
    }

    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn alphabet(&self) -> String {
        self.alphabet.iter().collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &ShortCodeRecord> {
        self.records.values()
    }

    /// Number of codes of the configured length; saturates at `u128::MAX`.
    pub fn namespace_size(&self) -> u128 {
        (self.alphabet.len() as u128)
            .checked_pow(self.code_length as u32)
            .unwrap_or(u128::MAX)
    }

    /// Allocates a random unused code, stamped with the current time.
    pub fn allocate(&mut self, p: GeoPoint) -> Result<ShortCodeRecord, ShortCodeError> {
        self.allocate_at(p, now_unix())
    }

    /// Allocates a random unused code with an explicit creation time.
    pub fn allocate_at(
        &mut self,
        p: GeoPoint,
        created: u64,
    ) -> Result<ShortCodeRecord, ShortCodeError> {
        let space = self.namespace_size();
        if self.fixed_length_live >= space {
            return Err(ShortCodeError::NamespaceExhausted(space));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.records.len() as u64);

        let mut code = String::new();
        let mut found = false;
        for _ in 0..MAX_RANDOM_DRAWS {
            code = self.random_code(&mut rng);
            if !self.records.contains_key(&code) {
                found = true;
                break;
            }
        }
        if !found {
            code = self
                .scan_free_from(&code)
                .ok_or(ShortCodeError::NamespaceExhausted(space))?;
        }
        Ok(self.insert(code, p, created))
    }

    fn random_code(&self, rng: &mut ChaCha8Rng) -> String {
        (0..self.code_length)
            .map(|_| self.alphabet[rng.random_range(0..self.alphabet.len())])
            .collect()
    }

    /// Next free code after `start` in namespace order, wrapping around.
    fn scan_free_from(&self, start: &str) -> Option<String> {
        let base = self.alphabet.len();
        let mut digits: Vec<usize> = start
            .chars()
            .map(|c| self.alphabet.iter().position(|&a| a == c).unwrap_or(0))
            .collect();
        let space = self.namespace_size();
        let mut steps = 0u128;
        while steps < space {
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < base {
                    break;
                }
                *d = 0;
            }
            let code: String = digits.iter().map(|&d| self.alphabet[d]).collect();
            if !self.records.contains_key(&code) {
                return Some(code);
            }
            steps += 1;
        }
        None
    }

    fn insert(&mut self, code: String, p: GeoPoint, created: u64) -> ShortCodeRecord {
        if code.chars().count() == self.code_length {
            self.fixed_length_live += 1;
        }
        let rec = ShortCodeRecord {
            code: code.clone(),
            point: p,
            created,
        };
        self.records.insert(code, rec.clone());
        rec
    }

    /// Uppercases `code` and checks it against the alphabet and the minimum length.
    pub fn canonicalize(&self, code: &str) -> Result<String, ShortCodeError> {
        let canonical = code.trim().to_ascii_uppercase();
        if canonical.chars().count() < self.code_length {
            return Err(ShortCodeError::MalformedCode {
                code: code.to_string(),
                reason: format!("shorter than {} characters", self.code_length),
            });
        }
        if let Some(bad) = canonical.chars().find(|c| !self.alphabet.contains(c)) {
            return Err(ShortCodeError::MalformedCode {
                code: code.to_string(),
                reason: format!("character {bad:?} is not in the alphabet"),
            });
        }
        Ok(canonical)
    }

    /// Registers exactly the requested code (case-insensitive).
    pub fn allocate_vanity(
        &mut self,
        p: GeoPoint,
        code: &str,
    ) -> Result<ShortCodeRecord, ShortCodeError> {
        self.allocate_vanity_at(p, code, now_unix())
    }

    pub fn allocate_vanity_at(
        &mut self,
        p: GeoPoint,
        code: &str,
        created: u64,
    ) -> Result<ShortCodeRecord, ShortCodeError> {
        let canonical = self.canonicalize(code)?;
        if self.records.contains_key(&canonical) {
            return Err(ShortCodeError::CodeTaken(canonical));
        }
        Ok(self.insert(canonical, p, created))
    }

    /// The registered point. Unknown codes fail without hinting at neighbours.
    pub fn resolve(&self, code: &str) -> Result<GeoPoint, ShortCodeError> {
        let canonical = code.trim().to_ascii_uppercase();
        self.records
            .get(&canonical)
            .map(|r| r.point)
            .ok_or(ShortCodeError::NotFound(canonical))
    }

    pub fn get(&self, code: &str) -> Option<&ShortCodeRecord> {
        self.records.get(&code.trim().to_ascii_uppercase())
    }

    /// Writes the JSON Lines form to `w`.
    pub fn write_to(&self, mut w: impl Write) -> Result<(), ShortCodeError> {
        let header = Header {
            alphabet: self.alphabet(),
            code_length: self.code_length,
            seed: self.seed,
        };
        writeln!(
            w,
            "{}",
            serde_json::to_string(&header).expect("header serializes")
        )?;
        for rec in self.records.values() {
            let line = Line {
                code: rec.code.clone(),
                lat: rec.point.lat(),
                lng: rec.point.lng(),
                created: rec.created,
            };
            writeln!(
                w,
                "{}",
                serde_json::to_string(&line).expect("record serializes")
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ShortCodeError> {
        let file = fs::File::create(path)?;
        self.write_to(BufWriter::new(file))
    }

    /// Parses the JSON Lines form. Errors name the 1-based line.
    pub fn from_jsonl(text: &str) -> Result<Self, ShortCodeError> {
        let corrupt = |line: usize, reason: String| ShortCodeError::CorruptRecord { line, reason };
        let body = text.strip_suffix('\n').unwrap_or(text);
        let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l));

        let (_, first) = lines.next().unwrap_or((1, ""));
        let header: Header =
            serde_json::from_str(first).map_err(|e| corrupt(1, format!("bad header: {e}")))?;
        let alphabet =
            validate_alphabet(&header.alphabet).map_err(|e| corrupt(1, e.to_string()))?;
        if header.code_length == 0 {
            return Err(corrupt(1, "code_length must be positive".into()));
        }
        let mut reg = Registry {
            alphabet,
            code_length: header.code_length,
            seed: header.seed,
            records: BTreeMap::new(),
            fixed_length_live: 0,
        };

        for (n, raw) in lines {
            let line: Line = serde_json::from_str(raw).map_err(|e| corrupt(n, e.to_string()))?;
            let point = GeoPoint::new(line.lat, line.lng).map_err(|e| corrupt(n, e.to_string()))?;
            let code = reg
                .canonicalize(&line.code)
                .map_err(|e| corrupt(n, e.to_string()))?;
            if code != line.code {
                return Err(corrupt(n, format!("code {:?} is not canonical", line.code)));
            }
            if reg.records.contains_key(&code) {
                return Err(corrupt(n, format!("duplicate code {code}")));
            }
            reg.insert(code, point, line.created);
        }
        Ok(reg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ShortCodeError> {
        Registry::from_jsonl(&fs::read_to_string(path)?)
    }
}
