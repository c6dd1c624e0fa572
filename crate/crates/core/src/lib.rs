//! Location codes: hierarchical grid codes, three-word codes, registered
//! short codes and street-relative robocodes, plus the harness that measures
//! how they behave under typos and location error.
//!
//! ```
//! use geocodes::{grid, GeoPoint};
//!
//! let delhi = GeoPoint::new(28.6139, 77.2090).unwrap();
//! assert_eq!(grid::encode(delhi, 10).unwrap().to_string(), "7JWVJ675+HJ");
//! ```

pub mod capacity;
pub mod eval;
pub mod geo;
pub mod grid;
pub mod robocode;
pub mod short;
pub mod words;

pub use geo::{
    destination, haversine_distance, initial_bearing, midpoint, CellBounds, GeoError, GeoPoint,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/geodesy.md")]
    mod geodesy {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/words.md")]
    mod words {}
    #[doc = include_str!("../../../book/src/short-codes.md")]
    mod short_codes {}
    #[doc = include_str!("../../../book/src/robocodes.md")]
    mod robocodes {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
