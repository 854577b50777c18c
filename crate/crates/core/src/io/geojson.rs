//! GeoJSON (RFC 7946) output.

use serde_json::{json, Value};

use super::CurveDocument;
use crate::geodesy::GeodeticCoord;

fn position(p: &GeodeticCoord<f64>) -> Value {
    json!([p.lon, p.lat, p.h])
}

/// FeatureCollection with a LineString per polyline and a MultiPoint per
/// point set; positions are `[lon, lat, h]`.
pub fn write_geojson(doc: &CurveDocument) -> Vec<u8> {
    let mut features: Vec<Value> = Vec::new();
    for line in &doc.polylines {
        features.push(json!({
            "type": "Feature",
            "properties": { "name": line.name, "style": line.style.id() },
            "geometry": {
                "type": "LineString",
                "coordinates": line.points.iter().map(position).collect::<Vec<_>>(),
            },
        }));
    }
    for set in &doc.point_sets {
        features.push(json!({
            "type": "Feature",
            "properties": { "name": set.name, "style": set.style.id() },
            "geometry": {
                "type": "MultiPoint",
                "coordinates": set.points.iter().map(position).collect::<Vec<_>>(),
            },
        }));
    }
    let fc = json!({
        "type": "FeatureCollection",
        "name": doc.name,
        "features": features,
    });
    let mut out = serde_json::to_vec_pretty(&fc).expect("JSON values always serialise");
    out.push(b'\n');
    out
}
