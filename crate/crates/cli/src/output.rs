//! Curve documents and output files.

use std::path::{Path, PathBuf};

use fdoa_locus::geodesy::{ecef_to_geodetic_or_meridian, GeodeticCoord};
use fdoa_locus::intersect::{CurveComponent, IntersectionCurve, Visibility};
use fdoa_locus::io::{write_geojson, write_kml, CurveDocument, CurveStyle, LabeledPolyline, PointSet};
use fdoa_locus::terrain::TerrainCurve;
use fdoa_locus::{Ellipsoid, Vec3};

use crate::config::OutputFormat;
use crate::CliError;

fn geodetic(points: &[Vec3<f64>], e: &Ellipsoid<f64>) -> Vec<GeodeticCoord<f64>> {
    points.iter().map(|&p| ecef_to_geodetic_or_meridian(p, e)).collect()
}

fn component_label(c: &CurveComponent<f64>) -> &'static str {
    let near = c.points.iter().any(|p| p.visibility == Visibility::NearVisible);
    let far = c.points.iter().any(|p| p.visibility == Visibility::FarOccluded);
    match (near, far) {
        (true, true) => "visible+occluded",
        (true, false) => "visible",
        _ => "occluded",
    }
}

/// One LineString per intersection component.
pub fn add_ellipsoid_curve(
    doc: &mut CurveDocument,
    curve: &IntersectionCurve<f64>,
    include_occluded: bool,
    e: &Ellipsoid<f64>,
) {
    for (k, c) in curve.components.iter().enumerate() {
        let label = component_label(c);
        if !include_occluded && label == "occluded" {
            continue;
        }
        doc.polylines.push(LabeledPolyline {
            name: format!("ellipsoid {k} ({label})"),
            style: CurveStyle::Ellipsoid,
            points: geodetic(&c.polyline(), e),
        });
    }
}

pub fn add_ellipsoid_points(doc: &mut CurveDocument, curve: &IntersectionCurve<f64>, e: &Ellipsoid<f64>) {
    if !curve.points_near.is_empty() {
        doc.point_sets.push(PointSet {
            name: "cone-ellipsoid intersections".into(),
            style: CurveStyle::Ellipsoid,
            points: geodetic(&curve.points_near, e),
        });
    }
}

pub fn add_terrain_curve(doc: &mut CurveDocument, t: &TerrainCurve) {
    for (k, run) in t.runs.iter().enumerate() {
        doc.polylines.push(LabeledPolyline {
            name: format!("terrain {k}"),
            style: CurveStyle::Terrain,
            points: t.points[run.clone()].iter().map(|p| p.geodetic).collect(),
        });
    }
    if !t.points.is_empty() {
        doc.point_sets.push(PointSet {
            name: "cone-terrain intersections".into(),
            style: CurveStyle::Terrain,
            points: t.points.iter().map(|p| p.geodetic).collect(),
        });
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Writes the document in each requested format; returns the paths written.
pub fn write_document(
    doc: &CurveDocument,
    out_dir: &Path,
    stem: &str,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for f in formats {
        let (ext, bytes) = match f {
            OutputFormat::Kml => ("kml", write_kml(doc)),
            OutputFormat::Geojson => ("geojson", write_geojson(doc)),
        };
        let path = out_dir.join(format!("{stem}.{ext}"));
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}
