//! Synthetic terrain tiles for tests and demonstrations.

use serde::{Deserialize, Serialize};

use super::dted::DtedLevel;
use crate::geodesy::Ellipsoid;
use crate::terrain::{Geoid, TerrainGrid};

/// Tile geometry in tenths of an arc-second, so every tile is DTED-writable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSpec {
    pub lat0: i64,
    pub lon0: i64,
    pub lat_interval: u32,
    pub lon_interval: u32,
    pub n_lat: usize,
    pub n_lon: usize,
}

impl TileSpec {
    /// Square-interval tile of the given level centred on `(lat, lon)` with
    /// `half` posts either side of the centre post.
    pub fn centered(level: DtedLevel, lat: f64, lon: f64, half: usize) -> Self {
        let iv = level.lat_interval();
        let snap = |deg: f64| (deg * 36_000.0 / iv as f64).round() as i64 * iv as i64;
        Self {
            lat0: snap(lat) - (half as i64) * iv as i64,
            lon0: snap(lon) - (half as i64) * iv as i64,
            lat_interval: iv,
            lon_interval: iv,
            n_lat: 2 * half + 1,
            n_lon: 2 * half + 1,
        }
    }

    pub fn lat0_deg(&self) -> f64 {
        self.lat0 as f64 / 36_000.0
    }

    pub fn lon0_deg(&self) -> f64 {
        self.lon0 as f64 / 36_000.0
    }

    pub fn dlat(&self) -> f64 {
        self.lat_interval as f64 / 36_000.0
    }

    pub fn dlon(&self) -> f64 {
        self.lon_interval as f64 / 36_000.0
    }

    fn build(&self, height: impl Fn(usize, usize) -> Option<f64>) -> TerrainGrid {
        let heights = (0..self.n_lat)
            .flat_map(|i| (0..self.n_lon).map(move |j| (i, j)))
            .map(|(i, j)| height(i, j))
            .collect();
        TerrainGrid {
            lat0: self.lat0_deg(),
            lon0: self.lon0_deg(),
            dlat: self.dlat(),
            dlon: self.dlon(),
            n_lat: self.n_lat,
            n_lon: self.n_lon,
            heights,
            geoid: Geoid::default(),
        }
    }
}

/// Constant height everywhere (`h = 0` is the bare ellipsoid).
pub fn flat(spec: &TileSpec, h: f64) -> TerrainGrid {
    spec.build(|_, _| Some(h))
}

/// Constant height inside, zero on a rim `margin` posts wide.
pub fn plateau(spec: &TileSpec, h: f64, margin: usize) -> TerrainGrid {
    spec.build(|i, j| {
        let inside = i >= margin && j >= margin && i + margin < spec.n_lat && j + margin < spec.n_lon;
        Some(if inside { h } else { 0.0 })
    })
}

/// North–south ridge through the tile centre with a Gaussian east–west
/// profile; heights are whole metres.
pub fn ridge(spec: &TileSpec, peak: f64, half_width_m: f64, e: &Ellipsoid<f64>) -> TerrainGrid {
    let jc = (spec.n_lon - 1) as f64 / 2.0;
    let dlon = spec.dlon().to_radians();
    spec.build(|i, j| {
        let phi = (spec.lat0_deg() + i as f64 * spec.dlat()).to_radians();
        let m_per_post = dlon * e.prime_vertical_radius(phi) * phi.cos();
        let x = (j as f64 - jc) * m_per_post / half_width_m;
        Some((peak * (-x * x).exp()).round())
    })
}

/// Marks every `k`-th post (row-major, starting at `offset`) as void.
pub fn punch_voids(g: &mut TerrainGrid, k: usize, offset: usize) {
    if k == 0 {
        return;
    }
    for idx in (offset..g.heights.len()).step_by(k) {
        g.heights[idx] = None;
    }
}
