//! KML 2.2 output.

use std::fmt::Write as _;

use super::{CurveDocument, CurveStyle};
use crate::geodesy::GeodeticCoord;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn coord(p: &GeodeticCoord<f64>) -> String {
    format!("{},{},{}", p.lon, p.lat, p.h)
}

fn style_block(out: &mut String, style: CurveStyle, color: &str) {
    let _ = write!(
        out,
        "    <Style id=\"{id}\">\n      <LineStyle><color>{color}</color><width>2</width></LineStyle>\n      \
         <IconStyle><color>{color}</color><scale>0.5</scale></IconStyle>\n    </Style>\n",
        id = style.id()
    );
}

/// KML document with one LineString per polyline and one multi-point
/// Placemark per point set. Altitudes are absolute (ellipsoid heights).
pub fn write_kml(doc: &CurveDocument) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n  <Document>\n");
    let _ = writeln!(out, "    <name>{}</name>", escape(&doc.name));
    // colours are aabbggrr
    style_block(&mut out, CurveStyle::Terrain, "ff00ffff");
    style_block(&mut out, CurveStyle::Ellipsoid, "ff0000ff");
    for line in &doc.polylines {
        let _ = writeln!(out, "    <Placemark>\n      <name>{}</name>", escape(&line.name));
        let _ = writeln!(out, "      <styleUrl>#{}</styleUrl>", line.style.id());
        out.push_str("      <LineString>\n        <altitudeMode>absolute</altitudeMode>\n        <coordinates>");
        let coords: Vec<String> = line.points.iter().map(coord).collect();
        out.push_str(&coords.join(" "));
        out.push_str("</coordinates>\n      </LineString>\n    </Placemark>\n");
    }
    for set in &doc.point_sets {
        let _ = writeln!(out, "    <Placemark>\n      <name>{}</name>", escape(&set.name));
        let _ = writeln!(out, "      <styleUrl>#{}</styleUrl>", set.style.id());
        out.push_str("      <MultiGeometry>\n");
        for p in &set.points {
            let _ = writeln!(
                out,
                "        <Point><altitudeMode>absolute</altitudeMode><coordinates>{}</coordinates></Point>",
                coord(p)
            );
        }
        out.push_str("      </MultiGeometry>\n    </Placemark>\n");
    }
    out.push_str("  </Document>\n</kml>\n");
    out.into_bytes()
}
