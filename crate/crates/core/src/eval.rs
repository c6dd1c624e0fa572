//! Evaluation harness comparing the code families.
//!
//! Every run takes a master seed. Trial `i` draws from ChaCha stream `i` of
//! that seed, so trials can run in parallel and the reports are identical
//! from run to run. All displacements are great-circle distances from
//! [`haversine_distance`].
//!
//! Reports serialize to CSV whose first line is
//! `# seed=<n> scheme=<s> trials=<n>`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::geo::{destination, haversine_distance, midpoint, GeoPoint};
use crate::grid::{self, GridCode, ALPHABET};
use crate::robocode::RoadNetwork;
use crate::short::{Registry, RegistryConfig, ShortCodeError};
use crate::words::{self, WordList};

/// `Phi^-1(0.9)`: ten percent of GPS fixes fall within one tenth of the median.
const Z_90: f64 = 1.281_551_565_544_600_4;
/// `Phi^-1(0.75)`.
const Z_75: f64 = 0.674_489_750_196_081_7;

/// Pair distances probed by locality profiles, in meters. Bucket `k` spans
/// half a decade either side of `LOCALITY_DISTANCES_M[k]`.
pub const LOCALITY_DISTANCES_M: [f64; 7] = [10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7];

/// Robocode positions count as stable within this many meters on the same street.
pub const ROBO_STABLE_OFFSET_M: f64 = 25.0;

/// Minimum pairs for a distance bucket to enter the independence test.
const MIN_BUCKET_PAIRS: u64 = 20;
/// Minimum expected count per contingency cell after pooling.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("the registry has fewer than two records")]
    RegistryEmpty,
    #[error("no street is at least {0} m long")]
    NoEligibleStreet(f64),
    #[error(transparent)]
    Registry(#[from] ShortCodeError),
    #[error(transparent)]
    Words(#[from] words::WordError),
}

/// Per-trial generator: stream `index` of the master seed.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A point uniformly distributed over the sphere.
pub fn random_point(rng: &mut impl Rng) -> GeoPoint {
    let lat = (2.0 * rng.random::<f64>() - 1.0).asin().to_degrees();
    let lng = 360.0 * rng.random::<f64>() - 180.0;
    GeoPoint::new(lat.clamp(-90.0, 90.0), lng).expect("in range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorModelKind {
    Gps,
    MapMarking,
    Custom,
}

/// Radial location error `r ~ LogNormal(mu, sigma)` in meters, applied in a
/// uniformly random direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorModel {
    pub kind: ErrorModelKind,
    pub mu: f64,
    pub sigma: f64,
}

impl ErrorModel {
    /// Device GPS: median 50 m, 10% within 5 m.
    pub fn gps() -> Self {
        ErrorModel {
            kind: ErrorModelKind::Gps,
            mu: 50f64.ln(),
            sigma: (50f64.ln() - 5f64.ln()) / Z_90,
        }
    }

    /// Hand-marked map pins: 25% within 100 m, with `sigma` fixed at 1.
    pub fn map_marking() -> Self {
        ErrorModel {
            kind: ErrorModelKind::MapMarking,
            mu: 100f64.ln() + Z_75,
            sigma: 1.0,
        }
    }

    pub fn custom(mu: f64, sigma: f64) -> Self {
        ErrorModel {
            kind: ErrorModelKind::Custom,
            mu,
            sigma,
        }
    }

    /// Always zero displacement.
    pub fn zero() -> Self {
        ErrorModel::custom(f64::NEG_INFINITY, 0.0)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ErrorModelKind::Gps => "gps",
            ErrorModelKind::MapMarking => "map",
            ErrorModelKind::Custom => "custom",
        }
    }

    pub fn sample_radius(&self, rng: &mut impl Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (self.mu + self.sigma * z).exp()
    }

    /// Displaces `p` by one draw of the model.
    pub fn displace(&self, p: GeoPoint, rng: &mut impl Rng) -> GeoPoint {
        let r = self.sample_radius(rng);
        let bearing = 360.0 * rng.random::<f64>();
        destination(p, r, bearing)
    }
}

/// `p` displaced by one draw of `model`, deterministic per `seed`.
pub fn sample_error(model: &ErrorModel, p: GeoPoint, seed: u64) -> GeoPoint {
    model.displace(p, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Fraction of `n` displacements of `origin` whose great-circle length is at
/// most each threshold.
pub fn error_cdf(
    model: &ErrorModel,
    origin: GeoPoint,
    thresholds_m: &[f64],
    n: u64,
    seed: u64,
) -> Vec<f64> {
    let dists: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| haversine_distance(origin, model.displace(origin, &mut trial_rng(seed, i))))
        .collect();
    thresholds_m
        .iter()
        .map(|&t| dists.iter().filter(|&&d| d <= t).count() as f64 / n.max(1) as f64)
        .collect()
}

/// Nearest-rank summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Quantiles> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = |q: f64| v[((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Some(Quantiles {
            p50: rank(0.5),
            p90: rank(0.9),
            max: v[v.len() - 1],
        })
    }
}

fn csv_header(out: &mut String, seed: u64, scheme: &str, trials: u64) {
    writeln!(out, "# seed={seed} scheme={scheme} trials={trials}").unwrap();
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".to_string())
}

/// Which code family to perturb.
#[derive(Debug, Clone, Copy)]
pub enum PerturbScheme<'a> {
    /// Single-character substitutions in codes of `length` characters.
    Grid { length: usize, last_char_only: bool },
    /// Single-word substitutions.
    Words(&'a WordList),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub scheme: String,
    pub seed: u64,
    pub trials: u64,
    pub valid: u64,
    pub invalid: u64,
    /// Displacements of valid edits, in trial order.
    pub displacements_m: Vec<f64>,
    pub quantiles: Option<Quantiles>,
    /// `None` when there were no trials.
    pub invalid_fraction: Option<f64>,
    /// Share of valid edits landing more than 10,000 km away.
    pub over_10000km_fraction: Option<f64>,
}

impl PerturbationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_header(&mut out, self.seed, &self.scheme, self.trials);
        out.push_str("metric,value\n");
        let q = self.quantiles;
        let rows = [
            ("valid", self.valid.to_string()),
            ("invalid", self.invalid.to_string()),
            ("invalid_fraction", fmt_opt(self.invalid_fraction)),
            ("p50_m", fmt_opt(q.map(|q| q.p50))),
            ("p90_m", fmt_opt(q.map(|q| q.p90))),
            ("max_m", fmt_opt(q.map(|q| q.max))),
            ("over_10000km_fraction", fmt_opt(self.over_10000km_fraction)),
        ];
        for (k, v) in rows {
            writeln!(out, "{k},{v}").unwrap();
        }
        out
    }
}

/// Encodes random points, applies one minimal edit to each code, and
/// measures how far the edited code's cell center lies from the original.
pub fn perturbation_displacement(
    scheme: PerturbScheme<'_>,
    n_trials: u64,
    seed: u64,
) -> PerturbationReport {
    let outcomes: Vec<Option<f64>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let p = random_point(&mut rng);
            match scheme {
                PerturbScheme::Grid {
                    length,
                    last_char_only,
                } => perturb_grid(p, length, last_char_only, &mut rng),
                PerturbScheme::Words(list) => perturb_words(p, list, &mut rng),
            }
        })
        .collect();

    let displacements: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let valid = displacements.len() as u64;
    let name = match scheme {
        PerturbScheme::Grid { .. } => "grid",
        PerturbScheme::Words(_) => "word",
    };
    PerturbationReport {
        scheme: name.to_string(),
        seed,
        trials: n_trials,
        valid,
        invalid: n_trials - valid,
        quantiles: Quantiles::of(&displacements),
        invalid_fraction: (n_trials > 0).then(|| (n_trials - valid) as f64 / n_trials as f64),
        over_10000km_fraction: (valid > 0)
            .then(|| displacements.iter().filter(|&&d| d > 1e7).count() as f64 / valid as f64),
        displacements_m: displacements,
    }
}

fn perturb_grid(p: GeoPoint, length: usize, last_only: bool, rng: &mut ChaCha8Rng) -> Option<f64> {
    let code = grid::encode(p, length).expect("valid length");
    let pos = if last_only {
        length - 1
    } else {
        rng.random_range(0..length)
    };
    let old = code.digits()[pos];
    let mut new = rng.random_range(0..ALPHABET.len() as u8 - 1);
    if new >= old {
        new += 1;
    }
    let mut digits = code.digits().to_vec();
    digits[pos] = new;
    let edited = GridCode::from_digits(&digits).ok()?;
    let a = grid::decode(&code).center();
    let b = grid::decode(&edited).center();
    Some(haversine_distance(a, b))
}

fn perturb_words(p: GeoPoint, list: &WordList, rng: &mut ChaCha8Rng) -> Option<f64> {
    let triple = words::encode(p, list).expect("list covers every cell");
    let pos = rng.random_range(0..3);
    let old = list.index_of(&triple.words()[pos]).expect("encoded word") as usize;
    let mut new = rng.random_range(0..list.len() - 1);
    if new >= old {
        new += 1;
    }
    let edited = triple.with_word(pos, list.word(new).expect("in range"));
    let a = words::decode(&triple, list).expect("roundtrip").center();
    let b = words::decode(&edited, list).ok()?.center();
    Some(haversine_distance(a, b))
}

/// Result of a chi-squared test of independence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Chi-squared independence test on a rows x columns count table.
///
/// Empty rows are dropped and adjacent columns are pooled left to right until
/// every expected count is at least 5. With fewer than two rows or columns
/// left there is nothing to test and the p-value is 1.
pub fn chi_squared_independence(table: &[Vec<u64>]) -> ChiSquaredTest {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().sum::<u64>() > 0).collect();
    let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let cell = |r: &Vec<u64>, j: usize| r.get(j).copied().unwrap_or(0) as f64;
    let row_totals: Vec<f64> = rows.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let total: f64 = row_totals.iter().sum();
    let min_row = row_totals.iter().copied().fold(f64::INFINITY, f64::min);
    let none = ChiSquaredTest {
        statistic: 0.0,
        dof: 0,
        p_value: 1.0,
    };
    if rows.len() < 2 || width < 2 {
        return none;
    }

    // group columns so each group's total keeps every expected count >= 5
    let needed = MIN_EXPECTED * total / min_row;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current = Vec::new();
    let mut acc = 0.0;
    for j in 0..width {
        current.push(j);
        acc += rows.iter().map(|r| cell(r, j)).sum::<f64>();
        if acc >= needed {
            groups.push(std::mem::take(&mut current));
            acc = 0.0;
        }
    }
    if !current.is_empty() {
        match groups.last_mut() {
            Some(last) => last.extend(current),
            None => groups.push(current),
        }
    }
    if groups.len() < 2 {
        return none;
    }

    let pooled: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            groups
                .iter()
                .map(|g| g.iter().map(|&j| cell(r, j)).sum())
                .collect()
        })
        .collect();
    let col_totals: Vec<f64> = (0..groups.len())
        .map(|k| pooled.iter().map(|r| r[k]).sum())
        .collect();
    let mut statistic = 0.0;
    for (i, r) in pooled.iter().enumerate() {
        for (k, &observed) in r.iter().enumerate() {
            let expected = row_totals[i] * col_totals[k] / total;
            statistic += (observed - expected).powi(2) / expected;
        }
    }
    let dof = ((pooled.len() - 1) * (groups.len() - 1)) as u64;
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquaredTest {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    }
}

/// Which codes a locality profile compares.
#[derive(Debug, Clone, Copy)]
pub enum LocalityScheme<'a> {
    /// Shared prefix of eleven-character grid codes.
    Grid,
    /// Positions holding the same word.
    Words(&'a WordList),
    /// Matching positions of registered short codes, over pairs of registry
    /// records. Shared prefixes are too rare to test anything.
    Short(&'a Registry),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityBucket {
    pub distance_m: f64,
    pub lo_m: f64,
    pub hi_m: f64,
    pub pairs: u64,
    /// `counts[k]` = pairs with similarity `k`.
    pub counts: Vec<u64>,
    pub mean_similarity: Option<f64>,
}

impl LocalityBucket {
    /// Share of pairs with similarity of at least `k`.
    pub fn fraction_at_least(&self, k: usize) -> Option<f64> {
        (self.pairs > 0).then(|| self.counts.iter().skip(k).sum::<u64>() as f64 / self.pairs as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalityProfile {
    pub scheme: String,
    pub seed: u64,
    pub pairs: u64,
    pub buckets: Vec<LocalityBucket>,
    /// Independence of distance bucket and similarity, over buckets with
    /// at least 20 pairs.
    pub independence: ChiSquaredTest,
}

impl LocalityProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_header(&mut out, self.seed, &self.scheme, self.pairs);
        out.push_str("distance_m,pairs,mean_similarity\n");
        for b in &self.buckets {
            writeln!(
                out,
                "{},{},{}",
                b.distance_m,
                b.pairs,
                fmt_opt(b.mean_similarity)
            )
            .unwrap();
        }
        writeln!(
            out,
            "# chi2={} dof={} p={}",
            self.independence.statistic, self.independence.dof, self.independence.p_value
        )
        .unwrap();
        out
    }
}

fn bucket_edges(k: usize) -> (f64, f64) {
    let d = LOCALITY_DISTANCES_M[k];
    (d / 10f64.sqrt(), d * 10f64.sqrt())
}

fn bucket_of(d: f64) -> Option<usize> {
    (0..LOCALITY_DISTANCES_M.len()).find(|&k| {
        let (lo, hi) = bucket_edges(k);
        d >= lo && d < hi
    })
}

/// Mean code similarity of point pairs, bucketed by distance.
///
/// For grid and word codes `n_pairs` pairs are generated at each distance in
/// [`LOCALITY_DISTANCES_M`]. For short codes `n_pairs` random pairs of
/// registry records are drawn and bucketed by their actual distance.
pub fn locality_profile(
    scheme: LocalityScheme<'_>,
    n_pairs: u64,
    seed: u64,
) -> Result<LocalityProfile, HarnessError> {
    let n_buckets = LOCALITY_DISTANCES_M.len();
    let samples: Vec<(usize, usize)> = match scheme {
        LocalityScheme::Grid | LocalityScheme::Words(_) => {
            let total = n_pairs * n_buckets as u64;
            (0..total)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(seed, i);
                    let b = (i % n_buckets as u64) as usize;
                    let d = LOCALITY_DISTANCES_M[b];
                    let p = random_point(&mut rng);
                    let q = destination(p, d, 360.0 * rng.random::<f64>());
                    let sim = match scheme {
                        LocalityScheme::Words(list) => words::encode(p, list)
                            .expect("list covers every cell")
                            .shared_words(&words::encode(q, list).expect("list covers every cell")),
                        _ => grid::shared_prefix_length(
                            &grid::encode(p, grid::MAX_LENGTH).expect("valid length"),
                            &grid::encode(q, grid::MAX_LENGTH).expect("valid length"),
                        ),
                    };
                    (b, sim)
                })
                .collect()
        }
        LocalityScheme::Short(reg) => {
            let records: Vec<_> = reg.records().collect();
            if records.len() < 2 {
                return Err(HarnessError::RegistryEmpty);
            }
            (0..n_pairs)
                .into_par_iter()
                .filter_map(|i| {
                    let mut rng = trial_rng(seed, i);
                    let a = rng.random_range(0..records.len());
                    let mut b = rng.random_range(0..records.len() - 1);
                    if b >= a {
                        b += 1;
                    }
                    let (ra, rb) = (records[a], records[b]);
                    let d = haversine_distance(ra.point, rb.point);
                    let sim = ra
                        .code
                        .chars()
                        .zip(rb.code.chars())
                        .filter(|(x, y)| x == y)
                        .count();
                    bucket_of(d).map(|bucket| (bucket, sim))
                })
                .collect()
        }
    };

    let mut buckets: Vec<LocalityBucket> = (0..n_buckets)
        .map(|k| LocalityBucket {
            distance_m: LOCALITY_DISTANCES_M[k],
            lo_m: bucket_edges(k).0,
            hi_m: bucket_edges(k).1,
            pairs: 0,
            counts: Vec::new(),
            mean_similarity: None,
        })
        .collect();
    for (b, sim) in samples {
        let bucket = &mut buckets[b];
        if bucket.counts.len() <= sim {
            bucket.counts.resize(sim + 1, 0);
        }
        bucket.counts[sim] += 1;
        bucket.pairs += 1;
    }
    for b in &mut buckets {
        if b.pairs > 0 {
            let sum: u64 = b
                .counts
                .iter()
                .enumerate()
                .map(|(k, &c)| k as u64 * c)
                .sum();
            b.mean_similarity = Some(sum as f64 / b.pairs as f64);
        }
    }
    let table: Vec<Vec<u64>> = buckets
        .iter()
        .filter(|b| b.pairs >= MIN_BUCKET_PAIRS)
        .map(|b| b.counts.clone())
        .collect();
    let name = match scheme {
        LocalityScheme::Grid => "grid",
        LocalityScheme::Words(_) => "word",
        LocalityScheme::Short(_) => "short",
    };
    Ok(LocalityProfile {
        scheme: name.to_string(),
        seed,
        pairs: n_pairs,
        independence: chi_squared_independence(&table),
        buckets,
    })
}

/// Hamming distance between two equal-length codes.
pub fn hamming(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub seed: u64,
    pub pairs: u64,
    /// Hamming-distance histogram of pairs under 100 m apart.
    pub near: Vec<u64>,
    /// Hamming-distance histogram of pairs over 100 km apart.
    pub far: Vec<u64>,
    pub test: ChiSquaredTest,
}

impl IndependenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_header(&mut out, self.seed, "short", self.pairs);
        out.push_str("hamming,near,far\n");
        for k in 0..self.near.len().max(self.far.len()) {
            let n = self.near.get(k).copied().unwrap_or(0);
            let f = self.far.get(k).copied().unwrap_or(0);
            writeln!(out, "{k},{n},{f}").unwrap();
        }
        writeln!(
            out,
            "# chi2={} dof={} p={}",
            self.test.statistic, self.test.dof, self.test.p_value
        )
        .unwrap();
        out
    }
}

/// Registers `n_pairs` pairs of points under 100 m apart and `n_pairs` pairs
/// over 100 km apart in a fresh registry, then tests whether the code
/// Hamming distances depend on which group a pair came from.
pub fn short_code_independence(
    config: RegistryConfig,
    n_pairs: u64,
    seed: u64,
) -> Result<IndependenceReport, HarnessError> {
    let mut reg = Registry::new(config)?;
    let len = reg.code_length();
    let mut near = vec![0u64; len + 1];
    let mut far = vec![0u64; len + 1];
    for i in 0..n_pairs {
        let mut rng = trial_rng(seed, i);
        let a = random_point(&mut rng);
        let b = destination(a, 100.0 * rng.random::<f64>(), 360.0 * rng.random::<f64>());
        let c = random_point(&mut rng);
        let d = loop {
            let d = random_point(&mut rng);
            if haversine_distance(c, d) > 100_000.0 {
                break d;
            }
        };
        let ca = reg.allocate_at(a, 0)?.code;
        let cb = reg.allocate_at(b, 0)?.code;
        let cc = reg.allocate_at(c, 0)?.code;
        let cd = reg.allocate_at(d, 0)?.code;
        near[hamming(&ca, &cb)] += 1;
        far[hamming(&cc, &cd)] += 1;
    }
    let test = chi_squared_independence(&[near.clone(), far.clone()]);
    Ok(IndependenceReport {
        seed,
        pairs: n_pairs,
        near,
        far,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationSample {
    pub street: usize,
    pub offset_a_m: f64,
    pub offset_b_m: f64,
    pub error_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationReport {
    pub seed: u64,
    pub samples: Vec<InterpolationSample>,
    pub quantiles: Option<Quantiles>,
}

impl InterpolationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_header(&mut out, self.seed, "robo", self.samples.len() as u64);
        out.push_str("metric,value\n");
        let q = self.quantiles;
        writeln!(out, "p50_m,{}", fmt_opt(q.map(|q| q.p50))).unwrap();
        writeln!(out, "p90_m,{}", fmt_opt(q.map(|q| q.p90))).unwrap();
        writeln!(out, "max_m,{}", fmt_opt(q.map(|q| q.max))).unwrap();
        out
    }
}

/// Streets eligible for interpolation sampling.
pub const MIN_INTERPOLATION_STREET_M: f64 = 100.0;

/// Picks two houses A and B on one street, averages their code offsets and
/// measures how far the decoded average lies from the geographic midpoint of
/// A and B.
pub fn interpolation_error(
    net: &RoadNetwork,
    n_samples: u64,
    seed: u64,
) -> Result<InterpolationReport, HarnessError> {
    let eligible: Vec<usize> = net
        .streets()
        .iter()
        .filter(|s| s.length_m() >= MIN_INTERPOLATION_STREET_M)
        .map(|s| s.id)
        .collect();
    if eligible.is_empty() {
        return Err(HarnessError::NoEligibleStreet(MIN_INTERPOLATION_STREET_M));
    }
    let samples: Vec<InterpolationSample> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let street = &net.streets()[eligible[rng.random_range(0..eligible.len())]];
            let len = street.length_m();
            let oa = len * rng.random::<f64>();
            let ob = len * rng.random::<f64>();
            let a = street.point_at(oa);
            let b = street.point_at(ob);
            let ca = net.code_for(street.id, oa).offset_m as f64;
            let cb = net.code_for(street.id, ob).offset_m as f64;
            let guess = street.point_at((ca + cb) / 2.0);
            InterpolationSample {
                street: street.id,
                offset_a_m: oa,
                offset_b_m: ob,
                error_m: haversine_distance(guess, midpoint(a, b)),
            }
        })
        .collect();
    let errors: Vec<f64> = samples.iter().map(|s| s.error_m).collect();
    Ok(InterpolationReport {
        seed,
        quantiles: Quantiles::of(&errors),
        samples,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum StabilityScheme<'a> {
    Grid { length: usize },
    Words(&'a WordList),
    Robo(&'a RoadNetwork),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub scheme: String,
    pub model: String,
    pub seed: u64,
    pub trials: u64,
    pub stable: u64,
    pub fraction: Option<f64>,
}

impl StabilityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        csv_header(&mut out, self.seed, &self.scheme, self.trials);
        out.push_str("metric,value\n");
        writeln!(out, "model,{}", self.model).unwrap();
        writeln!(out, "stable,{}", self.stable).unwrap();
        writeln!(out, "fraction,{}", fmt_opt(self.fraction)).unwrap();
        out
    }
}

/// Share of trials where a point displaced by `model` still gets the same
/// code as the true point. Robocodes count as the same when the street
/// matches and the offsets differ by at most 25 m.
pub fn code_stability(
    scheme: StabilityScheme<'_>,
    model: &ErrorModel,
    n_trials: u64,
    seed: u64,
) -> StabilityReport {
    let stable = (0..n_trials)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = trial_rng(seed, i);
            match scheme {
                StabilityScheme::Grid { length } => {
                    let p = random_point(&mut rng);
                    let q = model.displace(p, &mut rng);
                    grid::encode(p, length).expect("valid length")
                        == grid::encode(q, length).expect("valid length")
                }
                StabilityScheme::Words(list) => {
                    let p = random_point(&mut rng);
                    let q = model.displace(p, &mut rng);
                    words::cell_index(p) == words::cell_index(q) && words::encode(p, list).is_ok()
                }
                StabilityScheme::Robo(net) => {
                    let streets = net.streets();
                    let s = &streets[rng.random_range(0..streets.len())];
                    let offset = s.length_m() * rng.random::<f64>();
                    let p = s.point_at(offset);
                    let q = model.displace(p, &mut rng);
                    let a = net.locate(p);
                    let b = net.locate(q);
                    a.street == b.street
                        && (net.code_for(a.street, a.offset_m).offset_m as f64
                            - net.code_for(b.street, b.offset_m).offset_m as f64)
                            .abs()
                            <= ROBO_STABLE_OFFSET_M
                }
            }
        })
        .count() as u64;
    let name = match scheme {
        StabilityScheme::Grid { .. } => "grid",
        StabilityScheme::Words(_) => "word",
        StabilityScheme::Robo(_) => "robo",
    };
    StabilityReport {
        scheme: name.to_string(),
        model: model.name().to_string(),
        seed,
        trials: n_trials,
        stable,
        fraction: (n_trials > 0).then(|| stable as f64 / n_trials as f64),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RebuildReport {
    pub streets_before: usize,
    pub renamed: usize,
    pub fraction: f64,
}

/// Rebuilds `net` with one more street and counts existing streets whose
/// display name changed.
pub fn rebuild_sensitivity(
    net: &RoadNetwork,
    new_street: crate::robocode::RoadFeature,
) -> Result<RebuildReport, crate::robocode::RobocodeError> {
    let rebuilt = net.with_street(new_street)?;
    let before = net.streets().len();
    let renamed = net
        .streets()
        .iter()
        .zip(rebuilt.streets())
        .filter(|(a, b)| a.display_name() != b.display_name())
        .count();
    Ok(RebuildReport {
        streets_before: before,
        renamed,
        fraction: renamed as f64 / before as f64,
    })
}
