//! Spherical geodesy shared by every code family.
//!
//! All distances use a sphere of mean radius [`EARTH_RADIUS_M`]. Longitudes
//! are normalized once, when a [`GeoPoint`] is constructed, to the half-open
//! range `[-180, 180)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} is not a finite number")]
    LongitudeNotFinite(f64),
    #[error("bearing is undefined between identical points")]
    UndefinedBearing,
    #[error("invalid cell bounds: {0}")]
    InvalidBounds(String),
}

/// A WGS84 latitude/longitude pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lng: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lng: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self, GeoError> {
        GeoPoint::new(raw.lat, raw.lng)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint {
            lat: p.lat,
            lng: p.lng,
        }
    }
}

/// Wraps any finite longitude into `[-180, 180)`.
pub fn normalize_lng(lng: f64) -> f64 {
    if (-180.0..180.0).contains(&lng) {
        return lng;
    }
    let wrapped = (lng + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        -180.0
    } else {
        wrapped
    }
}

impl GeoPoint {
    /// Builds a point, rejecting latitudes outside `[-90, 90]` and wrapping the
    /// longitude into `[-180, 180)`.
    pub fn new(lat: f64, lng: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        if !lng.is_finite() {
            return Err(GeoError::LongitudeNotFinite(lng));
        }
        Ok(GeoPoint {
            lat,
            lng: normalize_lng(lng),
        })
    }

    /// Skips validation; callers guarantee `lat` in range and `lng` normalized.
    pub(crate) fn from_raw(lat: f64, lng: f64) -> Self {
        debug_assert!((-90.0..=90.0).contains(&lat) && (-180.0..180.0).contains(&lng));
        GeoPoint { lat, lng }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lng(&self) -> f64 {
        self.lng
    }

    /// Great-circle distance to `other` in meters.
    pub fn distance_to(&self, other: &GeoPoint) -> f64 {
        haversine_distance(*self, *other)
    }
}

/// Great-circle distance in meters between two points.
///
/// The result is exactly symmetric: the operands are put in a canonical order
/// before evaluation so that `d(a, b)` and `d(b, a)` share every rounding step.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (a, b) = if (a.lat, a.lng) <= (b.lat, b.lng) {
        (a, b)
    } else {
        (b, a)
    };
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = lat2 - lat1;
    let dlng = (b.lng - a.lng).to_radians();

    let s_lat = (dlat * 0.5).sin();
    let s_lng = (dlng * 0.5).sin();
    let h = s_lat * s_lat + lat1.cos() * lat2.cos() * s_lng * s_lng;
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * h.sqrt().atan2((1.0 - h).sqrt())
}

/// Forward azimuth from `a` to `b` in degrees, `0` = north, `90` = east.
pub fn initial_bearing(a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    if a == b {
        return Err(GeoError::UndefinedBearing);
    }
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlng = (b.lng - a.lng).to_radians();

    let y = dlng.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlng.cos();
    let deg = y.atan2(x).to_degrees().rem_euclid(360.0);
    Ok(if deg >= 360.0 { 0.0 } else { deg })
}

/// Point reached by travelling `distance_m` from `origin` along the great
/// circle with initial bearing `bearing_deg`.
pub fn destination(origin: GeoPoint, distance_m: f64, bearing_deg: f64) -> GeoPoint {
    if distance_m == 0.0 {
        return origin;
    }
    let delta = distance_m / EARTH_RADIUS_M;
    let theta = bearing_deg.to_radians();
    let lat1 = origin.lat.to_radians();
    let lng1 = origin.lng.to_radians();

    let sin_lat2 = lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * theta.cos();
    let lat2 = sin_lat2.clamp(-1.0, 1.0).asin();
    let y = theta.sin() * delta.sin() * lat1.cos();
    let x = delta.cos() - lat1.sin() * sin_lat2;
    let lng2 = lng1 + y.atan2(x);

    let lat = lat2.to_degrees().clamp(-90.0, 90.0);
    GeoPoint {
        lat,
        lng: normalize_lng(lng2.to_degrees()),
    }
}

/// Great-circle midpoint of `a` and `b`.
pub fn midpoint(a: GeoPoint, b: GeoPoint) -> GeoPoint {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let lng1 = a.lng.to_radians();
    let dlng = (b.lng - a.lng).to_radians();

    let bx = lat2.cos() * dlng.cos();
    let by = lat2.cos() * dlng.sin();
    let lat = (lat1.sin() + lat2.sin()).atan2(((lat1.cos() + bx).powi(2) + by * by).sqrt());
    let lng = lng1 + by.atan2(lat1.cos() + bx);
    GeoPoint {
        lat: lat.to_degrees().clamp(-90.0, 90.0),
        lng: normalize_lng(lng.to_degrees()),
    }
}

/// An axis-aligned latitude/longitude rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellBounds {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl CellBounds {
    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self, GeoError> {
        let ok = south < north
            && west < east
            && south >= -90.0
            && north <= 90.0
            && west >= -180.0
            && east <= 180.0;
        if !ok {
            return Err(GeoError::InvalidBounds(format!(
                "south={south} west={west} north={north} east={east}"
            )));
        }
        Ok(CellBounds {
            south,
            west,
            north,
            east,
        })
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: (self.south + self.north) / 2.0,
            lng: normalize_lng((self.west + self.east) / 2.0),
        }
    }

    /// Closed containment test. Longitude `-180` also matches an east edge of `180`.
    pub fn contains(&self, p: GeoPoint) -> bool {
        let lat_ok = p.lat >= self.south && p.lat <= self.north;
        let lng_ok =
            (p.lng >= self.west && p.lng <= self.east) || (self.east == 180.0 && p.lng == -180.0);
        lat_ok && lng_ok
    }

    /// Strict containment: `other` lies inside `self` and is not equal to it.
    pub fn strictly_contains(&self, other: &CellBounds) -> bool {
        other.south >= self.south
            && other.north <= self.north
            && other.west >= self.west
            && other.east <= self.east
            && other != self
    }

    pub fn south_west(&self) -> GeoPoint {
        GeoPoint {
            lat: self.south,
            lng: normalize_lng(self.west),
        }
    }

    pub fn north_east(&self) -> GeoPoint {
        GeoPoint {
            lat: self.north,
            lng: normalize_lng(self.east),
        }
    }

    /// East-west extent in meters, measured along the center parallel.
    pub fn width_m(&self) -> f64 {
        let lat = ((self.south + self.north) / 2.0).to_radians();
        (self.east - self.west).to_radians() * EARTH_RADIUS_M * lat.cos()
    }

    /// North-south extent in meters.
    pub fn height_m(&self) -> f64 {
        (self.north - self.south).to_radians() * EARTH_RADIUS_M
    }

    /// The longer of the two corner-to-corner great-circle distances.
    pub fn diagonal_m(&self) -> f64 {
        let sw = GeoPoint {
            lat: self.south,
            lng: self.west,
        };
        let ne = GeoPoint {
            lat: self.north,
            lng: self.east,
        };
        let nw = GeoPoint {
            lat: self.north,
            lng: self.west,
        };
        let se = GeoPoint {
            lat: self.south,
            lng: self.east,
        };
        haversine_distance(sw, ne).max(haversine_distance(nw, se))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lng: f64) -> GeoPoint {
        GeoPoint::new(lat, lng).unwrap()
    }

    #[test]
    fn longitude_wraps_to_half_open_range() {
        assert_eq!(pt(0.0, 180.0).lng(), -180.0);
        assert_eq!(pt(0.0, -180.0).lng(), -180.0);
        assert_eq!(pt(0.0, 190.0).lng(), -170.0);
        assert_eq!(pt(0.0, -540.0).lng(), -180.0);
        assert_eq!(pt(0.0, 179.5).lng(), 179.5);
    }

    #[test]
    fn rejects_bad_latitude() {
        assert!(matches!(
            GeoPoint::new(90.5, 0.0),
            Err(GeoError::LatitudeOutOfRange(_))
        ));
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(0.0, f64::INFINITY).is_err());
        assert!(GeoPoint::new(90.0, 0.0).is_ok());
    }

    #[test]
    fn distance_examples() {
        let delhi = pt(28.6139, 77.2090);
        assert_eq!(haversine_distance(delhi, delhi), 0.0);

        // one degree of arc: 2*pi*R/360
        let one_deg = 2.0 * std::f64::consts::PI * EARTH_RADIUS_M / 360.0;
        let d = haversine_distance(pt(0.0, 0.0), pt(0.0, 1.0));
        assert!((d - one_deg).abs() < 1e-6);
        assert!((d - 111_195.0).abs() < 1.0);

        let mumbai = pt(19.0760, 72.8777);
        let d = haversine_distance(delhi, mumbai);
        assert!((d - 1_153_000.0).abs() < 5_000.0, "{d}");
    }

    #[test]
    fn bearing_examples() {
        let o = pt(0.0, 0.0);
        assert_eq!(initial_bearing(o, pt(1.0, 0.0)).unwrap(), 0.0);
        assert!((initial_bearing(o, pt(0.0, 1.0)).unwrap() - 90.0).abs() < 1e-12);
        let b = initial_bearing(pt(28.61, 77.20), pt(28.61, 77.30)).unwrap();
        assert!((b - 90.0).abs() < 0.1, "{b}");
        assert_eq!(initial_bearing(o, o), Err(GeoError::UndefinedBearing));
    }

    #[test]
    fn destination_inverts_distance_and_bearing() {
        let o = pt(28.6, 77.2);
        let q = destination(o, 1_000.0, 45.0);
        assert!((haversine_distance(o, q) - 1_000.0).abs() < 1e-6);
        assert!((initial_bearing(o, q).unwrap() - 45.0).abs() < 1e-6);
        assert_eq!(destination(o, 0.0, 123.0), o);
    }

    #[test]
    fn midpoint_is_equidistant() {
        let a = pt(10.0, 20.0);
        let b = pt(11.0, 22.0);
        let m = midpoint(a, b);
        let da = haversine_distance(a, m);
        let db = haversine_distance(m, b);
        assert!((da - db).abs() < 1e-6);
        assert!((da + db - haversine_distance(a, b)).abs() < 1e-6);
    }

    #[test]
    fn bounds_validation_and_center() {
        assert!(CellBounds::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(CellBounds::new(0.0, 1.0, 1.0, 1.0).is_err());
        let b = CellBounds::new(-90.0, -180.0, -70.0, -160.0).unwrap();
        let c = b.center();
        assert_eq!((c.lat(), c.lng()), (-80.0, -170.0));
        assert!(b.contains(c));
        assert!(b.contains(b.south_west()));
    }
}
