//! Street-relative codes of the form `OFFSET.STREET.CITY.REGION`.
//!
//! A [`RoadNetwork`] is built from street polylines plus a city
//! configuration. Streets without a name get one derived from the compass
//! sector (as seen from the city center) and the street's distance rank in
//! that sector, e.g. `NE88`. A point is encoded by snapping it to the nearest
//! street and measuring, in whole meters, how far along the street it lies
//! from the street's south-west anchor.
//!
//! Geometry is handled in a local equirectangular frame centered on the city
//! center, so straight streets stay straight and offsets interpolate
//! linearly.
//!
//! ```
//! use geocodes::GeoPoint;
//! use geocodes::robocode::{CityConfig, RoadFeature, RoadNetwork};
//!
//! let center = GeoPoint::new(20.90, 74.77).unwrap();
//! let config = CityConfig::new("Dhule", "MhIn", center);
//! let street = RoadFeature::new(None, vec![
//!     GeoPoint::new(20.91, 74.78).unwrap(),
//!     GeoPoint::new(20.92, 74.78).unwrap(),
//! ]);
//! let net = RoadNetwork::build(vec![street], config).unwrap();
//! let code = net.encode(GeoPoint::new(20.91, 74.78).unwrap());
//! assert_eq!(code.to_string(), "0.NE1.Dhule.MhIn");
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geo::{haversine_distance, initial_bearing, normalize_lng, GeoPoint, EARTH_RADIUS_M};

/// Distances closer than this are treated as ties (broken by street id).
const TIE_EPSILON_M: f64 = 1e-6;
const MIN_INDEX_CELL_M: f64 = 200.0;
const MAX_INDEX_CELLS: usize = 1 << 22;

pub const SECTORS: [&str; 8] = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"];

#[derive(Debug, Error)]
pub enum RobocodeError {
    #[error("road input contains no streets")]
    EmptyInput,
    #[error("feature {feature}: {reason}")]
    MalformedGeometry { feature: usize, reason: String },
    #[error("feature {feature}: street name {name:?} may not contain '.'")]
    InvalidStreetName { feature: usize, name: String },
    #[error("invalid city config: {0}")]
    InvalidConfig(String),
    #[error("invalid road input: {0}")]
    InvalidInput(String),
    #[error("no street named {0:?} in this network")]
    UnknownStreet(String),
    #[error("{count} streets are named {name:?}; the code is ambiguous")]
    AmbiguousStreet { name: String, count: usize },
    #[error("offset {offset_m} m exceeds the length of street {street:?} ({length_m:.1} m)")]
    OffsetExceedsStreet {
        street: String,
        offset_m: u64,
        length_m: f64,
    },
    #[error("bad {field} field: {message}")]
    Parse {
        field: &'static str,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// City-level settings for a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityConfig {
    pub city_name: String,
    pub region_code: String,
    pub city_center: GeoPoint,
}

impl CityConfig {
    pub fn new(
        city_name: impl Into<String>,
        region_code: impl Into<String>,
        center: GeoPoint,
    ) -> Self {
        CityConfig {
            city_name: city_name.into(),
            region_code: region_code.into(),
            city_center: center,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, RobocodeError> {
        serde_json::from_str(text).map_err(|e| RobocodeError::InvalidConfig(e.to_string()))
    }

    fn validate(&self) -> Result<(), RobocodeError> {
        for (what, v) in [
            ("city_name", &self.city_name),
            ("region_code", &self.region_code),
        ] {
            if v.trim().is_empty() || v.contains('.') {
                return Err(RobocodeError::InvalidConfig(format!(
                    "{what} must be non-empty and free of '.', got {v:?}"
                )));
            }
        }
        Ok(())
    }
}

/// One input street: an optional name and a polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadFeature {
    pub name: Option<String>,
    pub coords: Vec<GeoPoint>,
}

impl RoadFeature {
    pub fn new(name: Option<&str>, coords: Vec<GeoPoint>) -> Self {
        RoadFeature {
            name: name.map(str::to_string),
            coords,
        }
    }
}

/// Reads a GeoJSON FeatureCollection of LineStrings (`[lng, lat]` order).
/// The `name` property, when a non-empty string, becomes the street name.
pub fn parse_geojson(text: &str) -> Result<Vec<RoadFeature>, RobocodeError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| RobocodeError::InvalidInput(e.to_string()))?;
    features_from_value(&root)
}

fn features_from_value(root: &Value) -> Result<Vec<RoadFeature>, RobocodeError> {
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(RobocodeError::InvalidInput(
            "expected a GeoJSON FeatureCollection".into(),
        ));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| RobocodeError::InvalidInput("missing \"features\" array".into()))?;

    let malformed = |feature: usize, reason: &str| RobocodeError::MalformedGeometry {
        feature,
        reason: reason.to_string(),
    };
    let mut out = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let geometry = f
            .get("geometry")
            .ok_or_else(|| malformed(i, "missing geometry"))?;
        if geometry.get("type").and_then(Value::as_str) != Some("LineString") {
            return Err(malformed(i, "geometry is not a LineString"));
        }
        let coords = geometry
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(i, "missing coordinates"))?;
        let mut points = Vec::with_capacity(coords.len());
        for c in coords {
            let pos = c
                .as_array()
                .ok_or_else(|| malformed(i, "position is not an array"))?;
            let (lng, lat) = match (
                pos.first().and_then(Value::as_f64),
                pos.get(1).and_then(Value::as_f64),
            ) {
                (Some(lng), Some(lat)) => (lng, lat),
                _ => return Err(malformed(i, "position needs numeric [lng, lat]")),
            };
            points.push(GeoPoint::new(lat, lng).map_err(|e| malformed(i, &e.to_string()))?);
        }
        let name = match f.get("properties").and_then(|p| p.get("name")) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if s.trim().is_empty() => None,
            Some(Value::String(s)) => Some(s.trim().to_string()),
            Some(_) => return Err(malformed(i, "\"name\" must be a string or null")),
        };
        out.push(RoadFeature {
            name,
            coords: points,
        });
    }
    Ok(out)
}

fn features_to_value(features: &[RoadFeature]) -> Value {
    let list: Vec<Value> = features
        .iter()
        .map(|f| {
            let coords: Vec<Value> = f.coords.iter().map(|p| json!([p.lng(), p.lat()])).collect();
            json!({
                "type": "Feature",
                "properties": { "name": f.name },
                "geometry": { "type": "LineString", "coordinates": coords },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": list })
}

/// Equirectangular projection around a fixed origin, in meters.
#[derive(Debug, Clone, Copy)]
struct LocalFrame {
    lat0: f64,
    lng0: f64,
    cos_lat0: f64,
}

impl LocalFrame {
    fn new(origin: GeoPoint) -> Self {
        LocalFrame {
            lat0: origin.lat(),
            lng0: origin.lng(),
            cos_lat0: origin.lat().to_radians().cos().max(1e-9),
        }
    }

    fn project(&self, p: GeoPoint) -> [f64; 2] {
        let dlng = normalize_lng(p.lng() - self.lng0);
        [
            dlng.to_radians() * EARTH_RADIUS_M * self.cos_lat0,
            (p.lat() - self.lat0).to_radians() * EARTH_RADIUS_M,
        ]
    }

    fn unproject(&self, xy: [f64; 2]) -> GeoPoint {
        let lat = (self.lat0 + (xy[1] / EARTH_RADIUS_M).to_degrees()).clamp(-90.0, 90.0);
        let lng = self.lng0 + (xy[0] / (EARTH_RADIUS_M * self.cos_lat0)).to_degrees();
        GeoPoint::from_raw(lat, normalize_lng(lng))
    }
}

/// Distance from `p` to segment `a`-`b` and the clamped segment parameter.
fn point_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).hypot(p[1] - q[1]), t)
}

/// A street with its measurement geometry.
#[derive(Debug, Clone)]
pub struct Street {
    pub id: usize,
    /// Input polyline, in input order.
    pub polyline: Vec<GeoPoint>,
    pub given_name: Option<String>,
    pub derived_name: Option<String>,
    /// Southernmost endpoint, westernmost on ties. Offsets start here.
    pub sw_anchor: GeoPoint,
    /// Polyline re-ordered to start at the anchor.
    measured: Vec<GeoPoint>,
    measured_xy: Vec<[f64; 2]>,
    /// Distance along the street to each measured vertex.
    cumulative: Vec<f64>,
}

impl Street {
    pub fn display_name(&self) -> &str {
        self.given_name
            .as_deref()
            .or(self.derived_name.as_deref())
            .expect("every street has a given or derived name")
    }

    pub fn length_m(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Vertices starting from the south-west anchor.
    pub fn measured_polyline(&self) -> &[GeoPoint] {
        &self.measured
    }

    fn segment_count(&self) -> usize {
        self.measured.len() - 1
    }

    /// Point `offset_m` meters along the street from the anchor, clamped to
    /// the street's ends.
    pub fn point_at(&self, offset_m: f64) -> GeoPoint {
        if offset_m <= 0.0 || self.segment_count() == 0 {
            return self.measured[0];
        }
        let length = self.length_m();
        if offset_m >= length {
            return *self.measured.last().unwrap();
        }
        // first vertex strictly beyond the offset
        let end = self.cumulative.partition_point(|&c| c <= offset_m);
        let seg = end.saturating_sub(1).min(self.segment_count() - 1);
        let seg_len = self.cumulative[seg + 1] - self.cumulative[seg];
        let t = if seg_len > 0.0 {
            (offset_m - self.cumulative[seg]) / seg_len
        } else {
            0.0
        };
        let a = self.measured[seg];
        let b = self.measured[seg + 1];
        let dlng = normalize_lng(b.lng() - a.lng());
        GeoPoint::from_raw(
            a.lat() + t * (b.lat() - a.lat()),
            normalize_lng(a.lng() + t * dlng),
        )
    }

    /// Length-weighted centroid of the polyline in the network frame.
    fn centroid_xy(&self) -> [f64; 2] {
        let total = self.length_m();
        if total == 0.0 {
            return self.measured_xy[0];
        }
        let mut c = [0.0, 0.0];
        for i in 0..self.segment_count() {
            let a = self.measured_xy[i];
            let b = self.measured_xy[i + 1];
            let w = self.cumulative[i + 1] - self.cumulative[i];
            c[0] += w * (a[0] + b[0]) / 2.0;
            c[1] += w * (a[1] + b[1]) / 2.0;
        }
        [c[0] / total, c[1] / total]
    }
}

/// Where a point snaps onto the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreetPosition {
    pub street: usize,
    /// Unrounded distance along the street from its anchor, in meters.
    pub offset_m: f64,
    /// Perpendicular distance from the query point to the street.
    pub distance_m: f64,
}

/// Uniform grid of cells, each listing the segments whose bounding box
/// overlaps it.
#[derive(Debug, Clone)]
struct SegmentGrid {
    min: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<(u32, u32)>>,
}

impl SegmentGrid {
    fn build(streets: &[Street]) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for s in streets {
            for p in &s.measured_xy {
                for k in 0..2 {
                    min[k] = min[k].min(p[k]);
                    max[k] = max[k].max(p[k]);
                }
            }
        }
        let mut lengths: Vec<f64> = streets.iter().map(Street::length_m).collect();
        lengths.sort_by(f64::total_cmp);
        let median = lengths[lengths.len() / 2];
        let mut cell = MIN_INDEX_CELL_M.max(median / 4.0);
        let dims = |cell: f64| {
            (
                ((max[0] - min[0]) / cell).floor() as usize + 1,
                ((max[1] - min[1]) / cell).floor() as usize + 1,
            )
        };
        let (mut nx, mut ny) = dims(cell);
        while nx.saturating_mul(ny) > MAX_INDEX_CELLS {
            cell *= 2.0;
            (nx, ny) = dims(cell);
        }

        let mut grid = SegmentGrid {
            min,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        };
        for s in streets {
            for seg in 0..s.segment_count() {
                let a = s.measured_xy[seg];
                let b = s.measured_xy[seg + 1];
                let (x0, y0) = grid.cell_of([a[0].min(b[0]), a[1].min(b[1])]);
                let (x1, y1) = grid.cell_of([a[0].max(b[0]), a[1].max(b[1])]);
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        grid.cells[y * nx + x].push((s.id as u32, seg as u32));
                    }
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let cx = ((p[0] - self.min[0]) / self.cell).floor();
        let cy = ((p[1] - self.min[1]) / self.cell).floor();
        (
            (cx.max(0.0) as usize).min(self.nx - 1),
            (cy.max(0.0) as usize).min(self.ny - 1),
        )
    }
}

/// Running best candidate; ties within [`TIE_EPSILON_M`] go to the lower id.
#[derive(Debug, Clone, Copy)]
struct Best {
    street: usize,
    seg: usize,
    t: f64,
    dist: f64,
}

fn better(candidate: &Best, current: &Option<Best>) -> bool {
    match current {
        None => true,
        Some(cur) => {
            if candidate.dist < cur.dist - TIE_EPSILON_M {
                true
            } else if candidate.dist <= cur.dist + TIE_EPSILON_M {
                candidate.street < cur.street
                    || (candidate.street == cur.street && candidate.dist < cur.dist)
            } else {
                false
            }
        }
    }
}

/// A parsed or generated street-relative code.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Robocode {
    pub offset_m: u64,
    pub unit_suffix: Option<char>,
    pub street_name: String,
    pub city: String,
    pub region: String,
}

impl fmt::Display for Robocode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.offset_m)?;
        if let Some(u) = self.unit_suffix {
            write!(f, "{u}")?;
        }
        write!(f, ".{}.{}.{}", self.street_name, self.city, self.region)
    }
}

impl FromStr for Robocode {
    type Err = RobocodeError;

    fn from_str(s: &str) -> Result<Self, RobocodeError> {
        parse_robocode(s)
    }
}

/// Splits `OFFSET[UNIT].STREET.CITY.REGION`, keeping the text fields verbatim.
pub fn parse_robocode(s: &str) -> Result<Robocode, RobocodeError> {
    let fields: Vec<&str> = s.split('.').collect();
    if fields.len() != 4 {
        return Err(RobocodeError::Parse {
            field: "code",
            message: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    let offset_field = fields[0];
    let digits_end = offset_field
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(offset_field.len());
    let (digits, rest) = offset_field.split_at(digits_end);
    if digits.is_empty() {
        return Err(RobocodeError::Parse {
            field: "offset",
            message: format!("{offset_field:?} does not start with a number"),
        });
    }
    let offset_m: u64 = digits.parse().map_err(|_| RobocodeError::Parse {
        field: "offset",
        message: format!("{digits:?} is too large"),
    })?;
    let mut rest_chars = rest.chars();
    let unit_suffix = match (rest_chars.next(), rest_chars.next()) {
        (None, _) => None,
        (Some(c), None) if c.is_ascii_alphabetic() => Some(c),
        _ => {
            return Err(RobocodeError::Parse {
                field: "offset",
                message: format!("suffix {rest:?} must be a single letter"),
            })
        }
    };
    for (field, value) in [
        ("street", fields[1]),
        ("city", fields[2]),
        ("region", fields[3]),
    ] {
        if value.is_empty() {
            return Err(RobocodeError::Parse {
                field,
                message: "field is empty".into(),
            });
        }
    }
    Ok(Robocode {
        offset_m,
        unit_suffix,
        street_name: fields[1].to_string(),
        city: fields[2].to_string(),
        region: fields[3].to_string(),
    })
}

/// An immutable street network with naming and a nearest-street index.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    config: CityConfig,
    features: Vec<RoadFeature>,
    streets: Vec<Street>,
    frame: LocalFrame,
    index: SegmentGrid,
    by_name: HashMap<String, Vec<usize>>,
}

impl RoadNetwork {
    /// Builds a network; street ids are the features' input positions.
    pub fn build(features: Vec<RoadFeature>, config: CityConfig) -> Result<Self, RobocodeError> {
        config.validate()?;
        if features.is_empty() {
            return Err(RobocodeError::EmptyInput);
        }
        let frame = LocalFrame::new(config.city_center);

        let mut streets = Vec::with_capacity(features.len());
        for (id, f) in features.iter().enumerate() {
            if f.coords.len() < 2 {
                return Err(RobocodeError::MalformedGeometry {
                    feature: id,
                    reason: format!("a street needs at least 2 points, found {}", f.coords.len()),
                });
            }
            let given_name = f.name.as_deref().map(str::trim).filter(|n| !n.is_empty());
            if let Some(name) = given_name {
                if name.contains('.') {
                    return Err(RobocodeError::InvalidStreetName {
                        feature: id,
                        name: name.to_string(),
                    });
                }
            }
            streets.push(make_street(id, f, given_name.map(str::to_string), &frame));
        }
        assign_derived_names(&mut streets, &config, &frame);

        let mut by_name: HashMap<String, Vec<usize>> = HashMap::new();
        for s in &streets {
            by_name
                .entry(s.display_name().to_string())
                .or_default()
                .push(s.id);
        }
        let index = SegmentGrid::build(&streets);
        Ok(RoadNetwork {
            config,
            features,
            streets,
            frame,
            index,
            by_name,
        })
    }

    pub fn config(&self) -> &CityConfig {
        &self.config
    }

    pub fn streets(&self) -> &[Street] {
        &self.streets
    }

    pub fn features(&self) -> &[RoadFeature] {
        &self.features
    }

    /// A new network with `feature` appended as the next street id.
    pub fn with_street(&self, feature: RoadFeature) -> Result<RoadNetwork, RobocodeError> {
        let mut features = self.features.clone();
        features.push(feature);
        RoadNetwork::build(features, self.config.clone())
    }

    /// The street a name refers to, if exactly one street carries it.
    pub fn street_by_name(&self, name: &str) -> Result<&Street, RobocodeError> {
        match self.by_name.get(name).map(Vec::as_slice) {
            None | Some([]) => Err(RobocodeError::UnknownStreet(name.to_string())),
            Some([id]) => Ok(&self.streets[*id]),
            Some(ids) => Err(RobocodeError::AmbiguousStreet {
                name: name.to_string(),
                count: ids.len(),
            }),
        }
    }

    fn consider(&self, q: [f64; 2], street: usize, seg: usize, best: &mut Option<Best>) {
        let s = &self.streets[street];
        let (dist, t) = point_segment(q, s.measured_xy[seg], s.measured_xy[seg + 1]);
        let cand = Best {
            street,
            seg,
            t,
            dist,
        };
        if better(&cand, best) {
            *best = Some(cand);
        }
    }

    fn position_from(&self, best: Best) -> StreetPosition {
        let s = &self.streets[best.street];
        let seg_len = s.cumulative[best.seg + 1] - s.cumulative[best.seg];
        StreetPosition {
            street: best.street,
            offset_m: (s.cumulative[best.seg] + best.t * seg_len).min(s.length_m()),
            distance_m: best.dist,
        }
    }

    /// Nearest street via the spatial index.
    pub fn locate(&self, p: GeoPoint) -> StreetPosition {
        let q = self.frame.project(p);
        let grid = &self.index;
        let clamped = [
            q[0].clamp(grid.min[0], grid.min[0] + grid.nx as f64 * grid.cell),
            q[1].clamp(grid.min[1], grid.min[1] + grid.ny as f64 * grid.cell),
        ];
        let (cx, cy) = grid.cell_of(clamped);
        let max_ring = grid.nx.max(grid.ny);
        let mut best: Option<Best> = None;

        for ring in 0..=max_ring {
            let lower_bound = ring.saturating_sub(1) as f64 * grid.cell;
            if let Some(b) = &best {
                if lower_bound > b.dist + TIE_EPSILON_M {
                    break;
                }
            }
            let (x0, x1) = (cx as i64 - ring as i64, cx as i64 + ring as i64);
            let (y0, y1) = (cy as i64 - ring as i64, cy as i64 + ring as i64);
            for y in y0..=y1 {
                if y < 0 || y >= grid.ny as i64 {
                    continue;
                }
                for x in x0..=x1 {
                    if x < 0 || x >= grid.nx as i64 {
                        continue;
                    }
                    let on_ring = y == y0 || y == y1 || x == x0 || x == x1;
                    if !on_ring {
                        continue;
                    }
                    for &(street, seg) in &grid.cells[y as usize * grid.nx + x as usize] {
                        self.consider(q, street as usize, seg as usize, &mut best);
                    }
                }
            }
        }
        self.position_from(best.expect("network has at least one segment"))
    }

    /// Nearest street by checking every segment. Used to validate the index.
    pub fn locate_exhaustive(&self, p: GeoPoint) -> StreetPosition {
        let q = self.frame.project(p);
        let mut best = None;
        for s in &self.streets {
            for seg in 0..s.segment_count() {
                self.consider(q, s.id, seg, &mut best);
            }
        }
        self.position_from(best.expect("network has at least one segment"))
    }

    /// Code for the nearest street position, offset floored to whole meters.
    pub fn encode(&self, p: GeoPoint) -> Robocode {
        let pos = self.locate(p);
        self.code_for(pos.street, pos.offset_m)
    }

    /// Code for an explicit position along a street.
    pub fn code_for(&self, street: usize, offset_m: f64) -> Robocode {
        let s = &self.streets[street];
        let offset = offset_m.clamp(0.0, s.length_m()).floor() as u64;
        Robocode {
            offset_m: offset,
            unit_suffix: None,
            street_name: s.display_name().to_string(),
            city: self.config.city_name.clone(),
            region: self.config.region_code.clone(),
        }
    }

    /// Point on the centerline of the code's street. The unit suffix and the
    /// city/region fields are not consulted.
    pub fn decode(&self, code: &Robocode) -> Result<GeoPoint, RobocodeError> {
        let street = self.street_by_name(&code.street_name)?;
        let length = street.length_m();
        if code.offset_m as f64 > length + 1.0 {
            return Err(RobocodeError::OffsetExceedsStreet {
                street: code.street_name.clone(),
                offset_m: code.offset_m,
                length_m: length,
            });
        }
        Ok(street.point_at(code.offset_m as f64))
    }

    /// Point at a fractional offset along the named street.
    pub fn point_on(&self, street_name: &str, offset_m: f64) -> Result<GeoPoint, RobocodeError> {
        let street = self.street_by_name(street_name)?;
        if offset_m > street.length_m() + 1.0 {
            return Err(RobocodeError::OffsetExceedsStreet {
                street: street_name.to_string(),
                offset_m: offset_m.ceil() as u64,
                length_m: street.length_m(),
            });
        }
        Ok(street.point_at(offset_m))
    }

    /// Serialized form: the city config and the input roads. Loading rebuilds
    /// the network, which is deterministic.
    pub fn to_json(&self) -> String {
        let doc = json!({
            "format": "geocodes-road-network",
            "version": 1,
            "config": self.config,
            "roads": features_to_value(&self.features),
        });
        serde_json::to_string(&doc).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RobocodeError> {
        let doc: Value =
            serde_json::from_str(text).map_err(|e| RobocodeError::InvalidInput(e.to_string()))?;
        if doc.get("format").and_then(Value::as_str) != Some("geocodes-road-network") {
            return Err(RobocodeError::InvalidInput(
                "not a road network file".into(),
            ));
        }
        let config: CityConfig = serde_json::from_value(doc["config"].clone())
            .map_err(|e| RobocodeError::InvalidConfig(e.to_string()))?;
        let features = features_from_value(&doc["roads"])?;
        RoadNetwork::build(features, config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RobocodeError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| RobocodeError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RobocodeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RobocodeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RoadNetwork::from_json(&text)
    }
}

fn make_street(
    id: usize,
    f: &RoadFeature,
    given_name: Option<String>,
    frame: &LocalFrame,
) -> Street {
    let first = f.coords[0];
    let last = *f.coords.last().unwrap();
    let anchor_is_last = (last.lat(), last.lng()) < (first.lat(), first.lng());
    let measured: Vec<GeoPoint> = if anchor_is_last {
        f.coords.iter().rev().copied().collect()
    } else {
        f.coords.clone()
    };
    let measured_xy: Vec<[f64; 2]> = measured.iter().map(|&p| frame.project(p)).collect();
    let mut cumulative = Vec::with_capacity(measured.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in measured_xy.windows(2) {
        total += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        cumulative.push(total);
    }
    Street {
        id,
        polyline: f.coords.clone(),
        given_name,
        derived_name: None,
        sw_anchor: measured[0],
        measured,
        measured_xy,
        cumulative,
    }
}

/// Index into [`SECTORS`] for a bearing in degrees.
pub fn compass_sector(bearing_deg: f64) -> usize {
    (((bearing_deg + 22.5).rem_euclid(360.0) / 45.0).floor() as usize) % 8
}

fn assign_derived_names(streets: &mut [Street], config: &CityConfig, frame: &LocalFrame) {
    let center = config.city_center;
    let mut sectors: BTreeMap<usize, Vec<(f64, f64, f64, usize)>> = BTreeMap::new();
    for s in streets.iter().filter(|s| s.given_name.is_none()) {
        let centroid = frame.unproject(s.centroid_xy());
        let sector = initial_bearing(center, centroid)
            .map(compass_sector)
            .unwrap_or(0);
        let dist = haversine_distance(center, centroid);
        sectors
            .entry(sector)
            .or_default()
            .push((dist, centroid.lng(), centroid.lat(), s.id));
    }
    for (sector, mut members) in sectors {
        members.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.total_cmp(&b.2))
                .then(a.3.cmp(&b.3))
        });
        for (rank, (_, _, _, id)) in members.into_iter().enumerate() {
            streets[id].derived_name = Some(format!("{}{}", SECTORS[sector], rank + 1));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::destination;

    fn pt(lat: f64, lng: f64) -> GeoPoint {
        GeoPoint::new(lat, lng).unwrap()
    }

    fn config() -> CityConfig {
        CityConfig::new("Dhule", "MhIn", pt(20.90, 74.77))
    }

    /// North-south street of `len` meters starting at `start`.
    fn ns_street(name: Option<&str>, start: GeoPoint, len: f64) -> RoadFeature {
        RoadFeature::new(name, vec![start, destination(start, len, 0.0)])
    }

    #[test]
    fn parse_printed_example() {
        let rc = parse_robocode("90C.NE88.Dhule.MhIn").unwrap();
        assert_eq!(
            rc,
            Robocode {
                offset_m: 90,
                unit_suffix: Some('C'),
                street_name: "NE88".into(),
                city: "Dhule".into(),
                region: "MhIn".into(),
            }
        );
        assert_eq!(rc.to_string(), "90C.NE88.Dhule.MhIn");
        let rc = parse_robocode("0.MainSt.Pune.MhIn").unwrap();
        assert_eq!((rc.offset_m, rc.unit_suffix), (0, None));
    }

    #[test]
    fn parse_errors_name_the_field() {
        let msg = parse_robocode("90.NE88.Dhule").unwrap_err().to_string();
        assert!(msg.contains("expected 4 fields"), "{msg}");
        assert!(matches!(
            parse_robocode("X.NE88.Dhule.MhIn"),
            Err(RobocodeError::Parse {
                field: "offset",
                ..
            })
        ));
        assert!(matches!(
            parse_robocode("90CD.NE88.Dhule.MhIn"),
            Err(RobocodeError::Parse {
                field: "offset",
                ..
            })
        ));
        assert!(matches!(
            parse_robocode("90..Dhule.MhIn"),
            Err(RobocodeError::Parse {
                field: "street",
                ..
            })
        ));
    }

    #[test]
    fn single_unnamed_street_to_the_northeast() {
        let start = destination(config().city_center, 2_000.0, 45.0);
        let net = RoadNetwork::build(vec![ns_street(None, start, 300.0)], config()).unwrap();
        assert_eq!(net.streets()[0].derived_name.as_deref(), Some("NE1"));
    }

    #[test]
    fn named_street_keeps_its_name() {
        let start = destination(config().city_center, 500.0, 200.0);
        let net = RoadNetwork::build(vec![ns_street(Some("Gandhi Road"), start, 300.0)], config())
            .unwrap();
        let s = &net.streets()[0];
        assert_eq!(s.derived_name, None);
        assert_eq!(s.display_name(), "Gandhi Road");
    }

    #[test]
    fn anchor_is_southernmost_endpoint() {
        let start = pt(20.91, 74.78);
        let end = destination(start, 500.0, 0.0);
        let net =
            RoadNetwork::build(vec![RoadFeature::new(None, vec![end, start])], config()).unwrap();
        assert_eq!(net.streets()[0].sw_anchor, start);
        // east-west street: the latitudes tie, west end wins
        let west = pt(20.91, 74.78);
        let east = pt(20.91, 74.79);
        let net =
            RoadNetwork::build(vec![RoadFeature::new(None, vec![east, west])], config()).unwrap();
        assert_eq!(net.streets()[0].sw_anchor, west);
    }

    #[test]
    fn offset_along_north_south_street() {
        let start = pt(20.91, 74.78);
        let net = RoadNetwork::build(vec![ns_street(None, start, 1_000.0)], config()).unwrap();
        let p = destination(start, 90.5, 0.0);
        let code = net.encode(p);
        assert_eq!(code.offset_m, 90);
        assert_eq!(net.encode(start).offset_m, 0);
        let back = net
            .decode(&parse_robocode(&code.to_string()).unwrap())
            .unwrap();
        assert!(haversine_distance(back, destination(start, 90.0, 0.0)) < 1e-3);
    }

    #[test]
    fn offset_zero_decodes_to_anchor_exactly() {
        let start = pt(20.91, 74.78);
        let net = RoadNetwork::build(vec![ns_street(None, start, 1_000.0)], config()).unwrap();
        let rc = parse_robocode("0.NE1.Dhule.MhIn").unwrap();
        assert_eq!(net.decode(&rc).unwrap(), net.streets()[0].sw_anchor);
    }

    #[test]
    fn equidistant_point_picks_lower_id() {
        let mid = pt(20.92, 74.78);
        let west = destination(mid, 50.0, 270.0);
        let east = destination(mid, 50.0, 90.0);
        let (w, e) = (
            ns_street(Some("West"), west, 300.0),
            ns_street(Some("East"), east, 300.0),
        );
        let net = RoadNetwork::build(vec![e.clone(), w.clone()], config()).unwrap();
        let q = destination(destination(mid, 100.0, 0.0), 0.0, 0.0);
        assert_eq!(net.encode(q).street_name, "East");
        let net = RoadNetwork::build(vec![w, e], config()).unwrap();
        assert_eq!(net.encode(q).street_name, "West");
    }

    #[test]
    fn decode_errors() {
        let start = pt(20.91, 74.78);
        let net = RoadNetwork::build(vec![ns_street(None, start, 1_000.0)], config()).unwrap();
        assert!(matches!(
            net.decode(&parse_robocode("10.NE9.Dhule.MhIn").unwrap()),
            Err(RobocodeError::UnknownStreet(_))
        ));
        match net.decode(&parse_robocode("1002.NE1.Dhule.MhIn").unwrap()) {
            Err(RobocodeError::OffsetExceedsStreet { length_m, .. }) => {
                assert!((length_m - 1_000.0).abs() < 1e-6)
            }
            other => panic!("unexpected {other:?}"),
        }
        // within the 1 m allowance
        assert!(net
            .decode(&parse_robocode("1000.NE1.Dhule.MhIn").unwrap())
            .is_ok());
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            RoadNetwork::build(vec![], config()),
            Err(RobocodeError::EmptyInput)
        ));
        let good = ns_street(None, pt(20.91, 74.78), 100.0);
        let bad = RoadFeature::new(None, vec![pt(20.0, 74.0)]);
        assert!(matches!(
            RoadNetwork::build(vec![good.clone(), bad], config()),
            Err(RobocodeError::MalformedGeometry { feature: 1, .. })
        ));
        let dotted = ns_street(Some("St. Mary Road"), pt(20.91, 74.78), 100.0);
        assert!(matches!(
            RoadNetwork::build(vec![dotted], config()),
            Err(RobocodeError::InvalidStreetName { feature: 0, .. })
        ));
        let mut cfg = config();
        cfg.city_name = "Dhu.le".into();
        assert!(matches!(
            RoadNetwork::build(vec![good], cfg),
            Err(RobocodeError::InvalidConfig(_))
        ));
    }

    #[test]
    fn geojson_parsing() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"name":"Gandhi Road"},
             "geometry":{"type":"LineString","coordinates":[[74.78,20.91],[74.78,20.92]]}},
            {"type":"Feature","properties":{"name":null},
             "geometry":{"type":"LineString","coordinates":[[74.79,20.91],[74.80,20.91,12.0]]}}
        ]}"#;
        let f = parse_geojson(text).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].name.as_deref(), Some("Gandhi Road"));
        assert_eq!(f[1].name, None);
        assert_eq!(f[0].coords[0], pt(20.91, 74.78));

        let one_point = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},
             "geometry":{"type":"LineString","coordinates":[[74.78,20.91]]}}]}"#;
        let err = RoadNetwork::build(parse_geojson(one_point).unwrap(), config()).unwrap_err();
        assert!(matches!(
            err,
            RobocodeError::MalformedGeometry { feature: 0, .. }
        ));

        let polygon = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},
             "geometry":{"type":"Point","coordinates":[74.78,20.91]}}]}"#;
        assert!(matches!(
            parse_geojson(polygon),
            Err(RobocodeError::MalformedGeometry { feature: 0, .. })
        ));
    }

    #[test]
    fn network_file_roundtrip_is_identical() {
        let f = vec![
            ns_street(None, pt(20.91, 74.78), 700.0),
            ns_street(Some("Gandhi Road"), pt(20.89, 74.76), 300.0),
        ];
        let net = RoadNetwork::build(f, config()).unwrap();
        let text = net.to_json();
        let again = RoadNetwork::from_json(&text).unwrap();
        assert_eq!(again.to_json(), text);
        let names: Vec<_> = again
            .streets()
            .iter()
            .map(|s| s.display_name().to_string())
            .collect();
        assert_eq!(names, vec!["NE1", "Gandhi Road"]);
    }

    #[test]
    fn sector_boundaries() {
        assert_eq!(SECTORS[compass_sector(0.0)], "N");
        assert_eq!(SECTORS[compass_sector(22.49)], "N");
        assert_eq!(SECTORS[compass_sector(22.5)], "NE");
        assert_eq!(SECTORS[compass_sector(359.0)], "N");
        assert_eq!(SECTORS[compass_sector(180.0)], "S");
        assert_eq!(SECTORS[compass_sector(300.0)], "NW");
    }
}
