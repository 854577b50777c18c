//! Plain-text terrain grid.
//!
//! ```text
//! # comment
//! lat0 = -35
//! lon0 = 138.5
//! dlat = 0.000833333
//! dlon = 0.000833333
//! n_lat = 2
//! n_lon = 3
//! geoid_n = 0          # or: geoid_grid = companion.grid
//! 10 11 12
//! 13 -32767 15
//! ```
//!
//! Heights follow the header row by row, southern row first; `-32767`
//! marks a void. A grid carrying per-post undulations inline appends a
//! `[geoid]` line followed by the same number of values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::terrain::{Geoid, TerrainGrid};

pub const VOID_VALUE: f64 = -32767.0;
const GEOID_SECTION: &str = "[geoid]";
const REQUIRED_KEYS: [&str; 6] = ["lat0", "lon0", "dlat", "dlon", "n_lat", "n_lon"];

#[derive(Debug, Error)]
pub enum PortableError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("geoid grid {0} does not match the terrain grid layout")]
    GeoidMismatch(String),
    #[error("geoid grid reference {0:?} was not resolved")]
    UnresolvedGeoid(String),
}

impl PortableError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        PortableError::Parse {
            line,
            message: message.into(),
        }
    }

    /// Line number for parse errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            PortableError::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Parsed text grid. `geoid_ref` names a companion undulation grid that
/// still has to be loaded; until then `grid.geoid` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PortableGrid {
    pub grid: TerrainGrid,
    pub geoid_ref: Option<String>,
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a).trim()
}

/// Parses the text form.
pub fn read_portable_grid(text: &str) -> Result<PortableGrid, PortableError> {
    let mut header: Vec<(String, String, usize)> = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    let mut data_start = text.lines().count() + 1;
    while let Some(&(k, raw)) = lines.peek() {
        let line = strip_comment(raw);
        if line.is_empty() {
            lines.next();
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_string();
                if header.iter().any(|(h, _, _)| *h == key) {
                    return Err(PortableError::parse(k + 1, format!("duplicate key `{key}`")));
                }
                header.push((key, value.trim().to_string(), k + 1));
                lines.next();
            }
            None => {
                data_start = k + 1;
                break;
            }
        }
    }

    let get = |key: &str| header.iter().find(|(h, _, _)| h == key);
    for key in REQUIRED_KEYS {
        if get(key).is_none() {
            return Err(PortableError::parse(data_start, format!("missing header key `{key}`")));
        }
    }
    let float = |key: &str| -> Result<f64, PortableError> {
        let (_, v, line) = get(key).unwrap();
        v.parse()
            .map_err(|_| PortableError::parse(*line, format!("`{key}` expects a number, got {v:?}")))
    };
    let count = |key: &str| -> Result<usize, PortableError> {
        let (_, v, line) = get(key).unwrap();
        v.parse()
            .map_err(|_| PortableError::parse(*line, format!("`{key}` expects a count, got {v:?}")))
    };
    let (lat0, lon0, dlat, dlon) = (float("lat0")?, float("lon0")?, float("dlat")?, float("dlon")?);
    let (n_lat, n_lon) = (count("n_lat")?, count("n_lon")?);
    for (key, _, line) in &header {
        if !REQUIRED_KEYS.contains(&key.as_str()) && key != "geoid_n" && key != "geoid_grid" {
            return Err(PortableError::parse(*line, format!("unknown header key `{key}`")));
        }
    }
    let geoid_n = get("geoid_n").map(|_| float("geoid_n")).transpose()?;
    let geoid_ref = get("geoid_grid").map(|(_, v, _)| v.clone());
    if let (Some(_), Some((_, _, line))) = (geoid_n, get("geoid_grid")) {
        return Err(PortableError::parse(*line, "`geoid_n` and `geoid_grid` are mutually exclusive"));
    }

    let total = n_lat * n_lon;
    let mut heights = Vec::with_capacity(total);
    let mut geoid_values: Option<Vec<f64>> = None;
    let mut last_line = data_start;
    for (k, raw) in lines {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        last_line = k + 1;
        if line == GEOID_SECTION {
            if geoid_values.is_some() || geoid_n.is_some() || geoid_ref.is_some() {
                return Err(PortableError::parse(k + 1, "conflicting geoid specification"));
            }
            if heights.len() != total {
                return Err(PortableError::parse(
                    k + 1,
                    format!("expected {total} heights before {GEOID_SECTION}, found {}", heights.len()),
                ));
            }
            geoid_values = Some(Vec::with_capacity(total));
            continue;
        }
        for tok in line.split_ascii_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| PortableError::parse(k + 1, format!("invalid value {tok:?}")))?;
            match geoid_values.as_mut() {
                Some(g) => {
                    if !v.is_finite() {
                        return Err(PortableError::parse(k + 1, format!("non-finite undulation {tok:?}")));
                    }
                    g.push(v);
                }
                None => {
                    if heights.len() == total {
                        return Err(PortableError::parse(k + 1, format!("more than {total} heights")));
                    }
                    if !v.is_finite() {
                        return Err(PortableError::parse(k + 1, format!("non-finite height {tok:?}")));
                    }
                    heights.push((v != VOID_VALUE).then_some(v));
                }
            }
        }
    }
    if heights.len() != total {
        return Err(PortableError::parse(
            last_line,
            format!("expected {total} heights, found {}", heights.len()),
        ));
    }
    let geoid = match geoid_values {
        Some(g) if g.len() != total => {
            return Err(PortableError::parse(last_line, format!("expected {total} undulations, found {}", g.len())))
        }
        Some(g) => Geoid::Grid(g),
        None => Geoid::Constant(geoid_n.unwrap_or(0.0)),
    };
    let grid = TerrainGrid::new(lat0, lon0, dlat, dlon, n_lat, n_lon, heights, geoid)
        .map_err(|e| PortableError::parse(data_start, e.to_string()))?;
    Ok(PortableGrid { grid, geoid_ref })
}

fn write_header(out: &mut String, g: &TerrainGrid) {
    let _ = writeln!(out, "lat0 = {}", g.lat0);
    let _ = writeln!(out, "lon0 = {}", g.lon0);
    let _ = writeln!(out, "dlat = {}", g.dlat);
    let _ = writeln!(out, "dlon = {}", g.dlon);
    let _ = writeln!(out, "n_lat = {}", g.n_lat);
    let _ = writeln!(out, "n_lon = {}", g.n_lon);
}

fn write_rows(out: &mut String, g: &TerrainGrid, value: impl Fn(usize) -> f64) {
    for i in 0..g.n_lat {
        for j in 0..g.n_lon {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", value(g.index(i, j)));
        }
        out.push('\n');
    }
}

/// Text form of a grid; per-post undulations are written inline.
pub fn write_portable_grid(g: &TerrainGrid) -> String {
    let mut out = String::with_capacity(16 + g.heights.len() * 8);
    write_header(&mut out, g);
    if let Geoid::Constant(n) = g.geoid {
        let _ = writeln!(out, "geoid_n = {n}");
    }
    write_rows(&mut out, g, |k| g.heights[k].unwrap_or(VOID_VALUE));
    if let Geoid::Grid(v) = &g.geoid {
        out.push_str(GEOID_SECTION);
        out.push('\n');
        write_rows(&mut out, g, |k| v[k]);
    }
    out
}

/// Text form that references a companion undulation file instead of
/// writing the undulations inline.
pub fn write_portable_grid_with_geoid_ref(g: &TerrainGrid, geoid_ref: &str) -> String {
    let mut out = String::with_capacity(16 + g.heights.len() * 8);
    write_header(&mut out, g);
    let _ = writeln!(out, "geoid_grid = {geoid_ref}");
    write_rows(&mut out, g, |k| g.heights[k].unwrap_or(VOID_VALUE));
    out
}

/// Installs a companion grid's heights as the undulations of `p`.
pub fn attach_geoid(p: &mut PortableGrid, companion: &TerrainGrid) -> Result<(), PortableError> {
    let name = p.geoid_ref.clone().unwrap_or_default();
    let g = &p.grid;
    let same = companion.n_lat == g.n_lat
        && companion.n_lon == g.n_lon
        && (companion.lat0 - g.lat0).abs() < 1e-9
        && (companion.lon0 - g.lon0).abs() < 1e-9
        && (companion.dlat - g.dlat).abs() < 1e-12
        && (companion.dlon - g.dlon).abs() < 1e-12;
    if !same || companion.void_count() > 0 {
        return Err(PortableError::GeoidMismatch(name));
    }
    p.grid.geoid = Geoid::Grid(companion.heights.iter().map(|h| h.unwrap()).collect());
    p.geoid_ref = None;
    Ok(())
}

fn read_file(path: &Path) -> Result<String, PortableError> {
    std::fs::read_to_string(path).map_err(|source| PortableError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a grid file, loading any companion undulation grid relative to it.
pub fn load_portable_grid(path: &Path) -> Result<TerrainGrid, PortableError> {
    let mut p = read_portable_grid(&read_file(path)?)?;
    if let Some(r) = p.geoid_ref.clone() {
        let companion_path = path.parent().unwrap_or(Path::new(".")).join(&r);
        let companion = read_portable_grid(&read_file(&companion_path)?)?;
        attach_geoid(&mut p, &companion.grid)?;
    }
    Ok(p.grid)
}
