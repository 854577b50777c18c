//! Cone / terrain curve: each visible cone-ellipsoid point defines a ray
//! from the receiver; the terrain post nearest the receiver among those
//! close to that ray is taken as the terrain crossing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::{
    ecef_to_geodetic_or_meridian, geodetic_to_ecef, normalize_longitude, Ellipsoid, GeodeticCoord,
};
use crate::intersect::IntersectionCurve;
use crate::linalg::Vec3;

type V = Vec3<f64>;

/// Candidates farther than this multiple of the ellipsoid range are ignored.
pub const FAR_BOUND_FACTOR: f64 = 1.05;
/// Default threshold as a fraction of the largest metric post spacing.
pub const THRESHOLD_FACTOR: f64 = 0.75;
/// Receiver distances closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TerrainError {
    #[error("invalid terrain grid: {0}")]
    InvalidGrid(String),
    #[error("every post in the grid is void")]
    EmptyGrid,
    #[error("no terrain post within the threshold of the ray")]
    NoHit,
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("ray target coincides with the receiver")]
    DegenerateRay,
}

/// Geoid undulation `N` (geoid minus ellipsoid, m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geoid {
    Constant(f64),
    /// One value per post, same layout as the heights.
    Grid(Vec<f64>),
}

impl Default for Geoid {
    fn default() -> Self {
        Geoid::Constant(0.0)
    }
}

/// Angularly uniform grid of orthometric heights.
///
/// Posts are stored row-major with row 0 at the southern edge:
/// post `(i, j)` sits at `(lat0 + i·dlat, lon0 + j·dlon)`. `None` marks a void.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainGrid {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub n_lat: usize,
    pub n_lon: usize,
    pub heights: Vec<Option<f64>>,
    pub geoid: Geoid,
}

impl TerrainGrid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        lat0: f64,
        lon0: f64,
        dlat: f64,
        dlon: f64,
        n_lat: usize,
        n_lon: usize,
        heights: Vec<Option<f64>>,
        geoid: Geoid,
    ) -> Result<Self, TerrainError> {
        let g = Self {
            lat0,
            lon0,
            dlat,
            dlon,
            n_lat,
            n_lon,
            heights,
            geoid,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid filled with one height everywhere.
    pub fn uniform(lat0: f64, lon0: f64, dlat: f64, dlon: f64, n_lat: usize, n_lon: usize, h: f64) -> Self {
        Self {
            lat0,
            lon0,
            dlat,
            dlon,
            n_lat,
            n_lon,
            heights: vec![Some(h); n_lat * n_lon],
            geoid: Geoid::default(),
        }
    }

    pub fn validate(&self) -> Result<(), TerrainError> {
        let bad = |m: String| Err(TerrainError::InvalidGrid(m));
        if !(self.dlat > 0.0 && self.dlat.is_finite() && self.dlon > 0.0 && self.dlon.is_finite()) {
            return bad(format!("spacing must be positive, got dlat={} dlon={}", self.dlat, self.dlon));
        }
        if self.n_lat == 0 || self.n_lon == 0 {
            return bad("grid has no posts".into());
        }
        if self.heights.len() != self.n_lat * self.n_lon {
            return bad(format!(
                "expected {}×{} = {} heights, got {}",
                self.n_lat,
                self.n_lon,
                self.n_lat * self.n_lon,
                self.heights.len()
            ));
        }
        if !self.lat0.is_finite() || !self.lon0.is_finite() {
            return bad("origin must be finite".into());
        }
        if self.lat0 < -90.0 || self.lat_max() > 90.0 + 1e-9 {
            return bad(format!("latitude extent [{}, {}] leaves [-90, 90]", self.lat0, self.lat_max()));
        }
        if let Some(k) = self.heights.iter().position(|h| matches!(h, Some(v) if !v.is_finite())) {
            return bad(format!("non-finite height at post {k}"));
        }
        match &self.geoid {
            Geoid::Constant(n) if !n.is_finite() => bad("geoid undulation must be finite".into()),
            Geoid::Grid(v) if v.len() != self.heights.len() => {
                bad(format!("geoid grid has {} values, expected {}", v.len(), self.heights.len()))
            }
            Geoid::Grid(v) if v.iter().any(|x| !x.is_finite()) => bad("non-finite geoid value".into()),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_lon + j
    }

    pub fn height(&self, i: usize, j: usize) -> Option<f64> {
        self.heights[self.index(i, j)]
    }

    pub fn undulation(&self, i: usize, j: usize) -> f64 {
        match &self.geoid {
            Geoid::Constant(n) => *n,
            Geoid::Grid(v) => v[self.index(i, j)],
        }
    }

    pub fn post_lat(&self, i: usize) -> f64 {
        self.lat0 + i as f64 * self.dlat
    }

    pub fn post_lon(&self, j: usize) -> f64 {
        self.lon0 + j as f64 * self.dlon
    }

    pub fn lat_max(&self) -> f64 {
        self.post_lat(self.n_lat - 1)
    }

    pub fn lon_max(&self) -> f64 {
        self.post_lon(self.n_lon - 1)
    }

    /// Ellipsoid height `h = H + N` of a non-void post.
    pub fn ellipsoid_height(&self, i: usize, j: usize) -> Option<f64> {
        self.height(i, j).map(|h| h + self.undulation(i, j))
    }

    pub fn void_count(&self) -> usize {
        self.heights.iter().filter(|h| h.is_none()).count()
    }

    /// Largest post spacing in metres over the grid's latitude extent.
    pub fn max_post_spacing_m(&self, e: &Ellipsoid<f64>) -> f64 {
        // widest longitude spacing is at the latitude nearest the equator
        let lat_eq = 0f64.max(self.lat0).min(self.lat_max());
        let lat_pole = if self.lat0.abs() > self.lat_max().abs() {
            self.lat0
        } else {
            self.lat_max()
        };
        let phi = lat_eq.to_radians();
        let along_lon = self.dlon.to_radians() * e.prime_vertical_radius(phi) * phi.cos();
        let along_lat = self.dlat.to_radians() * e.meridian_radius(lat_pole.to_radians());
        along_lon.max(along_lat)
    }

    /// Fractional grid coordinates `(row, col)` of a geodetic location.
    fn grid_coords(&self, lat: f64, lon: f64) -> (f64, f64) {
        let dlon = normalize_longitude(lon - self.lon0);
        // keep eastward offsets past the antimeridian for grids that cross it
        let dlon = if dlon < -self.dlon && dlon + 360.0 <= self.lon_max() - self.lon0 + self.dlon {
            dlon + 360.0
        } else {
            dlon
        };
        ((lat - self.lat0) / self.dlat, dlon / self.dlon)
    }
}

/// One terrain post in ECEF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub position: V,
    /// Row-major grid index.
    pub index: usize,
}

/// Terrain posts in ECEF plus enough grid geometry for windowed lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct EcefPostSet {
    pub posts: Vec<Post>,
    grid: TerrainGrid,
    /// Grid index → position in `posts`.
    slot: Vec<Option<u32>>,
    h_min: f64,
    h_max: f64,
}

impl EcefPostSet {
    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn grid(&self) -> &TerrainGrid {
        &self.grid
    }

    /// Range of ellipsoid heights over non-void posts.
    pub fn height_range(&self) -> (f64, f64) {
        (self.h_min, self.h_max)
    }

    fn post_at(&self, index: usize) -> Option<&Post> {
        self.slot[index].map(|k| &self.posts[k as usize])
    }
}

/// Converts every non-void post to ECEF using `h = H + N`.
pub fn grid_to_ecef_posts(g: &TerrainGrid, e: &Ellipsoid<f64>) -> Result<EcefPostSet, TerrainError> {
    g.validate()?;
    let posts: Vec<Post> = (0..g.n_lat * g.n_lon)
        .into_par_iter()
        .filter_map(|idx| {
            let (i, j) = (idx / g.n_lon, idx % g.n_lon);
            let h = g.ellipsoid_height(i, j)?;
            let coord = GeodeticCoord {
                lat: g.post_lat(i),
                lon: normalize_longitude(g.post_lon(j)),
                h,
            };
            Some(Post {
                position: geodetic_to_ecef(&coord, e),
                index: idx,
            })
        })
        .collect();
    if posts.is_empty() {
        return Err(TerrainError::EmptyGrid);
    }
    let mut slot = vec![None; g.heights.len()];
    for (k, p) in posts.iter().enumerate() {
        slot[p.index] = Some(k as u32);
    }
    let (mut h_min, mut h_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &posts {
        let h = g.ellipsoid_height(p.index / g.n_lon, p.index % g.n_lon).unwrap();
        h_min = h_min.min(h);
        h_max = h_max.max(h);
    }
    Ok(EcefPostSet {
        posts,
        grid: g.clone(),
        slot,
        h_min,
        h_max,
    })
}

/// Perpendicular distance from `p` to the line `origin + t·dir` (`dir` unit).
#[inline]
pub fn point_line_distance(p: V, origin: V, dir: V) -> f64 {
    (p - origin).cross(dir).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Test every post. Slow; kept as the reference.
    GlobalScan,
    /// Test only posts in a geodetic corridor around the ray.
    #[default]
    GridWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainSearchConfig {
    /// Ray distance threshold `tr` (m).
    pub threshold: f64,
    pub strategy: SearchStrategy,
    /// Keep every candidate post index on each hit.
    pub collect_candidates: bool,
}

impl TerrainSearchConfig {
    pub fn new(threshold: f64, strategy: SearchStrategy) -> Result<Self, TerrainError> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(TerrainError::InvalidThreshold(threshold));
        }
        Ok(Self {
            threshold,
            strategy,
            collect_candidates: false,
        })
    }

    /// `tr = 0.75 ×` the largest metric post spacing of the grid.
    pub fn for_grid(g: &TerrainGrid, e: &Ellipsoid<f64>) -> Self {
        Self {
            threshold: THRESHOLD_FACTOR * g.max_post_spacing_m(e),
            strategy: SearchStrategy::default(),
            collect_candidates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainHit {
    pub post_index: usize,
    pub position: V,
    /// Distance from the receiver (m).
    pub range: f64,
    /// Distance from the ray (m).
    pub ray_distance: f64,
    /// All candidate post indices, sorted by range, when requested.
    pub candidates: Vec<usize>,
}

struct Candidate {
    index: usize,
    position: V,
    range: f64,
    ray_distance: f64,
}

fn test_post(q: &Post, receiver: V, dir: V, far: f64, tr: f64) -> Option<Candidate> {
    let d = q.position - receiver;
    if d.dot(dir) <= 0.0 {
        return None;
    }
    let range = d.norm();
    if range > far {
        return None;
    }
    let ray_distance = d.cross(dir).norm();
    (ray_distance <= tr).then_some(Candidate {
        index: q.index,
        position: q.position,
        range,
        ray_distance,
    })
}

/// Grid indices of posts that could lie within `tr` of the segment
/// `receiver → receiver + far·dir`, found by marching along the ray.
fn corridor_indices(posts: &EcefPostSet, receiver: V, dir: V, far: f64, tr: f64, e: &Ellipsoid<f64>) -> Vec<usize> {
    let g = &posts.grid;
    let band_lo = posts.h_min - 2.0 * tr;
    let band_hi = posts.h_max + 2.0 * tr;
    let step = tr;
    let pad_m = 2.0 * tr + step;
    let mut out = Vec::new();
    let mut s = 0.0f64;
    loop {
        let x = receiver + dir * s.min(far);
        let geo = ecef_to_geodetic_or_meridian(x, e);
        // height changes by at most one metre per metre along a straight ray
        let outside = if geo.h > band_hi {
            geo.h - band_hi
        } else if geo.h < band_lo {
            band_lo - geo.h
        } else {
            0.0
        };
        if outside == 0.0 {
            let phi = geo.lat.to_radians();
            let pad_lat = (pad_m / e.meridian_radius(phi)).to_degrees();
            let coslat = phi.cos().max(1e-9);
            let pad_lon = (pad_m / (e.prime_vertical_radius(phi) * coslat)).to_degrees().min(180.0);
            let (ri, cj) = g.grid_coords(geo.lat, geo.lon);
            let i0 = (ri - pad_lat / g.dlat).floor().max(0.0);
            let i1 = (ri + pad_lat / g.dlat).ceil().min(g.n_lat as f64 - 1.0);
            let j0 = (cj - pad_lon / g.dlon).floor().max(0.0);
            let j1 = (cj + pad_lon / g.dlon).ceil().min(g.n_lon as f64 - 1.0);
            if i0 <= i1 && j0 <= j1 {
                for i in i0 as usize..=i1 as usize {
                    for j in j0 as usize..=j1 as usize {
                        out.push(g.index(i, j));
                    }
                }
            }
        }
        if s >= far {
            break;
        }
        s += step.max(outside);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Maps one cone-ellipsoid point `p_i` onto the terrain.
///
/// Candidates are posts within `tr` of the ray from the receiver through
/// `p_i`, in front of the receiver and no farther than `1.05·|p_i − r|`.
/// The candidate nearest the receiver wins; near-ties go to the lowest index.
pub fn map_point_to_terrain(
    p_i: V,
    receiver: V,
    posts: &EcefPostSet,
    cfg: &TerrainSearchConfig,
    e: &Ellipsoid<f64>,
) -> Result<TerrainHit, TerrainError> {
    if !(cfg.threshold > 0.0 && cfg.threshold.is_finite()) {
        return Err(TerrainError::InvalidThreshold(cfg.threshold));
    }
    let span = p_i - receiver;
    let len = span.norm();
    let dir = span.normalized().ok_or(TerrainError::DegenerateRay)?;
    let far = FAR_BOUND_FACTOR * len;
    let tr = cfg.threshold;

    let mut cands: Vec<Candidate> = match cfg.strategy {
        SearchStrategy::GlobalScan => posts
            .posts
            .iter()
            .filter_map(|q| test_post(q, receiver, dir, far, tr))
            .collect(),
        SearchStrategy::GridWindow => corridor_indices(posts, receiver, dir, far, tr, e)
            .into_iter()
            .filter_map(|idx| posts.post_at(idx))
            .filter_map(|q| test_post(q, receiver, dir, far, tr))
            .collect(),
    };
    if cands.is_empty() {
        return Err(TerrainError::NoHit);
    }
    let best_range = cands.iter().map(|c| c.range).fold(f64::INFINITY, f64::min);
    let best = cands
        .iter()
        .filter(|c| c.range <= best_range + TIE_TOLERANCE)
        .min_by_key(|c| c.index)
        .unwrap();
    let mut hit = TerrainHit {
        post_index: best.index,
        position: best.position,
        range: best.range,
        ray_distance: best.ray_distance,
        candidates: Vec::new(),
    };
    if cfg.collect_candidates {
        cands.sort_by(|a, b| a.range.total_cmp(&b.range).then(a.index.cmp(&b.index)));
        hit.candidates = cands.iter().map(|c| c.index).collect();
    }
    Ok(hit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainPoint {
    pub geodetic: GeodeticCoord<f64>,
    pub ecef: V,
    /// Generator angle of the source ray (rad).
    pub eta: f64,
    /// Receiver → terrain post distance (m).
    pub range: f64,
    /// Receiver → ellipsoid point distance on the same ray (m).
    pub ellipsoid_range: f64,
    pub ray_distance: f64,
    pub post_index: usize,
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TerrainCurve {
    pub points: Vec<TerrainPoint>,
    /// Inclusive η intervals (rad) of consecutive rays with no terrain hit.
    pub gaps: Vec<(f64, f64)>,
    /// Index ranges into `points` of unbroken stretches, split at gaps and
    /// at breaks in the source curve.
    pub runs: Vec<std::ops::Range<usize>>,
}

impl TerrainCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn polylines(&self) -> Vec<Vec<V>> {
        self.runs
            .iter()
            .map(|r| self.points[r.clone()].iter().map(|p| p.ecef).collect())
            .collect()
    }
}

/// Maps every visible point of `curve` onto the terrain, in η order.
pub fn cone_terrain_curve(
    curve: &IntersectionCurve<f64>,
    receiver: V,
    posts: &EcefPostSet,
    cfg: &TerrainSearchConfig,
    e: &Ellipsoid<f64>,
) -> TerrainCurve {
    let pieces = curve.visible_pieces();
    let mut out = TerrainCurve::default();
    for (piece, _) in pieces {
        let mapped: Vec<Option<TerrainPoint>> = piece
            .par_iter()
            .map(|cp| {
                let hit = map_point_to_terrain(cp.point, receiver, posts, cfg, e).ok()?;
                Some(TerrainPoint {
                    geodetic: ecef_to_geodetic_or_meridian(hit.position, e),
                    ecef: hit.position,
                    eta: cp.eta,
                    range: hit.range,
                    ellipsoid_range: cp.point.distance(receiver),
                    ray_distance: hit.ray_distance,
                    post_index: hit.post_index,
                    candidates: hit.candidates,
                })
            })
            .collect();

        let mut open_gap: Option<(f64, f64)> = None;
        let mut run_start = out.points.len();
        for (cp, m) in piece.iter().zip(mapped) {
            match m {
                Some(p) => {
                    if let Some(g) = open_gap.take() {
                        out.gaps.push(g);
                    }
                    out.points.push(p);
                }
                None => {
                    if out.points.len() > run_start {
                        out.runs.push(run_start..out.points.len());
                    }
                    run_start = out.points.len();
                    open_gap = Some(open_gap.map_or((cp.eta, cp.eta), |(a, _)| (a, cp.eta)));
                }
            }
        }
        out.gaps.extend(open_gap);
        if out.points.len() > run_start {
            out.runs.push(run_start..out.points.len());
        }
    }
    out
}
