#![allow(dead_code)]

use geocodes::geo::{destination, GeoPoint};
use geocodes::robocode::{CityConfig, RoadFeature, RoadNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn pt(lat: f64, lng: f64) -> GeoPoint {
    GeoPoint::new(lat, lng).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_point(rng: &mut impl Rng) -> GeoPoint {
    pt(
        rng.random_range(-90.0..=90.0),
        rng.random_range(-180.0..180.0),
    )
}

pub fn dhule() -> CityConfig {
    CityConfig::new("Dhule", "MhIn", pt(20.90, 74.77))
}

/// A straight street of `length_m` starting at `start` on `bearing`.
pub fn straight(name: Option<&str>, start: GeoPoint, bearing: f64, length_m: f64) -> RoadFeature {
    RoadFeature::new(name, vec![start, destination(start, length_m, bearing)])
}

/// One unnamed 1 km north-south street.
pub fn single_street_network() -> RoadNetwork {
    let start = pt(20.91, 74.78);
    RoadNetwork::build(vec![straight(None, start, 0.0, 1000.0)], dhule()).unwrap()
}

/// Semicircle of radius `r` around `c`, bulging north, as `n` segments.
pub fn semicircle(c: GeoPoint, r: f64, n: usize) -> RoadFeature {
    let coords = (0..=n)
        .map(|i| destination(c, r, 270.0 + 180.0 * i as f64 / n as f64))
        .collect();
    RoadFeature::new(Some("Arc"), coords)
}

/// Random network of short straight streets around Dhule.
pub fn random_network(n: usize, seed: u64) -> RoadNetwork {
    let mut r = rng(seed);
    let c = dhule().city_center;
    let features = (0..n)
        .map(|_| {
            let start = destination(c, r.random_range(0.0..8000.0), r.random_range(0.0..360.0));
            let mut coords = vec![start];
            for _ in 0..r.random_range(1..4) {
                let last = *coords.last().unwrap();
                coords.push(destination(
                    last,
                    r.random_range(50.0..600.0),
                    r.random_range(0.0..360.0),
                ));
            }
            RoadFeature::new(None, coords)
        })
        .collect();
    RoadNetwork::build(features, dhule()).unwrap()
}
