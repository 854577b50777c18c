//! Terrain readers and curve writers.

pub mod dted;
pub mod geojson;
pub mod kml;
pub mod portable;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::geodesy::GeodeticCoord;

pub use dted::{read_dted, read_dted_tile, write_dted, DtedError, DtedLevel, DtedTile};
pub use geojson::write_geojson;
pub use kml::write_kml;
pub use portable::{load_portable_grid, read_portable_grid, write_portable_grid, PortableError, PortableGrid};

/// Rendering style of a curve or point set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveStyle {
    /// Cone / terrain intersections (yellow).
    Terrain,
    /// Cone / ellipsoid intersections (red).
    Ellipsoid,
}

impl CurveStyle {
    pub fn id(self) -> &'static str {
        match self {
            CurveStyle::Terrain => "terrain",
            CurveStyle::Ellipsoid => "ellipsoid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPolyline {
    pub name: String,
    pub style: CurveStyle,
    pub points: Vec<GeodeticCoord<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub name: String,
    pub style: CurveStyle,
    pub points: Vec<GeodeticCoord<f64>>,
}

/// Everything written to one KML or GeoJSON file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveDocument {
    pub name: String,
    pub polylines: Vec<LabeledPolyline>,
    pub point_sets: Vec<PointSet>,
}

impl CurveDocument {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty() && self.point_sets.is_empty()
    }
}
