//! Cone / ellipsoid intersection by sweeping the cone's generator rays.
//!
//! Each generator `apex + s·dir, s ≥ 0` meets the ellipsoid where
//! `a_s s² + b_s s + c_s = 0`. Sweeping the generator angle `η` over
//! `[0, 2π)` gives an ordered sample of the intersection curve; the η
//! ordering is what makes connectivity decidable without general
//! surface/surface intersection machinery.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::DopplerCone;
use crate::geodesy::{EcefVec, Ellipsoid};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Default number of generator rays (0.5° steps in η).
pub const DEFAULT_SAMPLES: usize = 720;
pub const MIN_SAMPLES: usize = 16;

/// Relative size of the reduced discriminant below which a ray is tangent.
const TANGENT_TOLERANCE: f64 = 1e-12;

/// A gap this many times larger than both neighbouring gaps breaks a polyline.
const CONTINUITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntersectError {
    #[error("at least {MIN_SAMPLES} generator samples are required, got {0}")]
    TooFewSamples(usize),
}

/// Generator parametrization of the canonical cone `x²/d² + y²/d² − z² = 0`:
/// elevation `ζ` above the x–y plane, sweep angle `η` about the z-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayParam<T> {
    pub elevation: T,
}

impl<T: Real> RayParam<T> {
    /// `ζ = arctan(1/d)`.
    pub fn from_cone_parameter(d: T) -> Self {
        Self {
            elevation: (T::one() / d).atan(),
        }
    }

    /// `ζ = π/2 − ψ`; `ψ = π/2` gives the zero-shift plane (`ζ = 0`).
    pub fn from_semi_angle(psi: T) -> Self {
        Self {
            elevation: T::FRAC_PI_2() - psi,
        }
    }

    /// `(cos ζ cos η, cos ζ sin η, sin ζ)`.
    pub fn direction(&self, eta: T) -> Vec3<T> {
        let (sz, cz) = self.elevation.sin_cos();
        let (se, ce) = eta.sin_cos();
        Vec3::new(cz * ce, cz * se, sz)
    }
}

pub fn canonical_ray_direction<T: Real>(d: T, eta: T) -> Vec3<T> {
    RayParam::from_cone_parameter(d).direction(eta)
}

/// Maps a canonical-frame direction onto the rotated cone: `d_t = R·d_r`.
#[inline]
pub fn transform_ray<T: Real>(dir: Vec3<T>, rotation: &Mat3<T>) -> Vec3<T> {
    rotation.mul_vec(dir)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray<T> {
    pub origin: EcefVec<T>,
    /// Unit direction.
    pub dir: Vec3<T>,
}

impl<T: Real> Ray<T> {
    pub fn at(&self, s: T) -> EcefVec<T> {
        self.origin + self.dir * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootKind {
    /// Negative discriminant.
    Miss,
    /// Both roots behind the origin.
    Behind,
    /// Double root.
    Tangent,
    /// Origin inside the ellipsoid: one non-negative root.
    Inside,
    /// Entry and exit in front of the origin.
    Secant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    /// First surface crossing seen from the receiver.
    NearVisible,
    /// Exit point, shadowed by the earth itself.
    FarOccluded,
}

/// Result of one ray / ellipsoid solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit<T> {
    pub kind: RootKind,
    /// `D_s = b_s² − 4 a_s c_s`.
    pub discriminant: T,
    pub s_near: Option<T>,
    pub s_far: Option<T>,
    pub point_near: Option<EcefVec<T>>,
    pub point_far: Option<EcefVec<T>>,
}

impl<T: Real> RayHit<T> {
    fn empty(kind: RootKind, discriminant: T) -> Self {
        Self {
            kind,
            discriminant,
            s_near: None,
            s_far: None,
            point_near: None,
            point_far: None,
        }
    }

    /// Number of distinct non-negative roots.
    pub fn root_count(&self) -> usize {
        match self.kind {
            RootKind::Miss | RootKind::Behind => 0,
            RootKind::Tangent | RootKind::Inside => 1,
            RootKind::Secant => 2,
        }
    }

    /// Far point only when it is distinct from the near one.
    pub fn distinct_far(&self) -> Option<EcefVec<T>> {
        match self.kind {
            RootKind::Secant => self.point_far,
            _ => None,
        }
    }
}

/// Quadratic coefficients `(a_s, b_s, c_s)` of a ray against the ellipsoid.
pub fn ray_quadratic<T: Real>(ray: &Ray<T>, e: &Ellipsoid<T>) -> (T, T, T) {
    let q1 = T::one() / (e.a * e.a);
    let q3 = T::one() / (e.b * e.b);
    let (r, d) = (ray.origin, ray.dir);
    let two = T::lit(2.0);
    let a_s = q1 * (d.x * d.x + d.y * d.y) + q3 * d.z * d.z;
    let b_s = two * (q1 * (r.x * d.x + r.y * d.y) + q3 * r.z * d.z);
    let c_s = e.residual(r);
    (a_s, b_s, c_s)
}

/// Intersects a ray (`s ≥ 0`) with the ellipsoid using the cancellation-free
/// quadratic formula.
pub fn ray_ellipsoid<T: Real>(ray: &Ray<T>, e: &Ellipsoid<T>) -> RayHit<T> {
    let (a_s, b_s, c_s) = ray_quadratic(ray, e);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let disc = b_s * b_s - four * a_s * c_s;

    // reduced form s² + 2βs + γ = 0 to judge tangency on a relative scale
    let beta = b_s / (two * a_s);
    let gamma = c_s / a_s;
    let reduced = beta * beta - gamma;
    let scale = (beta * beta).max(gamma.abs());
    let tangent = reduced.abs() <= T::lit(TANGENT_TOLERANCE) * scale;

    if !tangent && reduced < T::zero() {
        return RayHit::empty(RootKind::Miss, disc);
    }

    let point = |s: T| Some(ray.at(s));
    if tangent {
        let s = -beta;
        if s < T::zero() {
            return RayHit::empty(RootKind::Behind, disc);
        }
        return RayHit {
            kind: RootKind::Tangent,
            discriminant: disc,
            s_near: Some(s),
            s_far: Some(s),
            point_near: point(s),
            point_far: point(s),
        };
    }

    let sign_b = if b_s >= T::zero() { T::one() } else { -T::one() };
    let q = -(b_s + sign_b * disc.max(T::zero()).sqrt()) / two;
    let (mut s1, mut s2) = if q == T::zero() {
        // b_s = 0 and c_s = 0: origin on the surface, direction tangent-free
        (T::zero(), T::zero())
    } else {
        (q / a_s, c_s / q)
    };
    if s1 > s2 {
        std::mem::swap(&mut s1, &mut s2);
    }
    if s2 < T::zero() {
        RayHit::empty(RootKind::Behind, disc)
    } else if s1 < T::zero() {
        RayHit {
            kind: RootKind::Inside,
            discriminant: disc,
            s_near: Some(s2),
            s_far: None,
            point_near: point(s2),
            point_far: None,
        }
    } else {
        RayHit {
            kind: RootKind::Secant,
            discriminant: disc,
            s_near: Some(s1),
            s_far: Some(s2),
            point_near: point(s1),
            point_far: point(s2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Empty,
    TangentPoint,
    SingleClosedCurve,
    /// Two (or more) disjoint curves.
    TwoCurves,
    OpenArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    ClosedCurve,
    OpenArc,
    TangentPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<T> {
    /// Generator sweep angle (rad).
    pub eta: T,
    /// Range along the generator (m).
    pub s: T,
    pub point: EcefVec<T>,
    pub visibility: Visibility,
}

/// One connected piece of the sampled intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveComponent<T> {
    pub kind: ComponentKind,
    pub points: Vec<CurvePoint<T>>,
}

impl<T: Real> CurveComponent<T> {
    pub fn is_closed(&self) -> bool {
        self.kind == ComponentKind::ClosedCurve
    }

    /// Vertices in drawing order; closed curves repeat the first point.
    pub fn polyline(&self) -> Vec<EcefVec<T>> {
        let mut v: Vec<_> = self.points.iter().map(|p| p.point).collect();
        if self.is_closed() && v.len() > 1 {
            v.push(v[0]);
        }
        v
    }

    pub fn arc_length(&self) -> T {
        polyline_length(&self.polyline())
    }
}

pub fn polyline_length<T: Real>(points: &[EcefVec<T>]) -> T {
    points
        .windows(2)
        .fold(T::zero(), |acc, w| acc + w[0].distance(w[1]))
}

/// Sampled cone / ellipsoid intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionCurve<T> {
    /// One entry per generator, ordered by η.
    pub samples: Vec<(T, RayHit<T>)>,
    /// Topology of the full (visible and occluded) intersection.
    pub topology: Topology,
    /// Topology of the visible, near-root part alone.
    pub visible_topology: Topology,
    pub components: Vec<CurveComponent<T>>,
    /// Visible intersection points in η order.
    pub points_near: Vec<EcefVec<T>>,
    /// Number of polyline splits caused by the continuity bound.
    pub continuity_breaks: usize,
}

impl<T: Real> IntersectionCurve<T> {
    /// Curve with no samples, used when no cone exists.
    pub fn empty() -> Self {
        Self {
            samples: Vec::new(),
            topology: Topology::Empty,
            visible_topology: Topology::Empty,
            components: Vec::new(),
            points_near: Vec::new(),
            continuity_breaks: 0,
        }
    }

    /// Every component as a polyline, occluded parts included.
    pub fn component_polylines(&self) -> Vec<Vec<EcefVec<T>>> {
        self.components.iter().map(|c| c.polyline()).collect()
    }

    /// Visible curve pieces as polylines (closed pieces repeat their first point).
    pub fn visible_polylines(&self) -> Vec<Vec<EcefVec<T>>> {
        self.visible_pieces()
            .into_iter()
            .map(|(pts, closed)| {
                let mut v: Vec<_> = pts.iter().map(|p| p.point).collect();
                if closed && v.len() > 1 {
                    v.push(v[0]);
                }
                v
            })
            .collect()
    }

    /// Visible points with their generator angle and range.
    pub fn visible_points(&self) -> Vec<CurvePoint<T>> {
        self.visible_pieces().into_iter().flat_map(|(p, _)| p).collect()
    }

    /// Connected visible pieces in η order, each flagged closed or open.
    pub fn visible_pieces(&self) -> Vec<(Vec<CurvePoint<T>>, bool)> {
        let near: Vec<Option<CurvePoint<T>>> = self
            .samples
            .iter()
            .map(|(eta, hit)| near_point(*eta, hit))
            .collect();
        split_runs(&near)
            .into_iter()
            .flat_map(|(run, closed)| split_at_breaks(run, closed).0)
            .collect()
    }

    /// Total arc length of every component (m).
    pub fn arc_length(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, c| acc + c.arc_length())
    }

    pub fn is_empty(&self) -> bool {
        self.topology == Topology::Empty
    }
}

fn near_point<T: Real>(eta: T, hit: &RayHit<T>) -> Option<CurvePoint<T>> {
    Some(CurvePoint {
        eta,
        s: hit.s_near?,
        point: hit.point_near?,
        visibility: Visibility::NearVisible,
    })
}

fn far_point<T: Real>(eta: T, hit: &RayHit<T>) -> Option<CurvePoint<T>> {
    Some(CurvePoint {
        eta,
        s: hit.s_far.filter(|_| hit.kind == RootKind::Secant)?,
        point: hit.distinct_far()?,
        visibility: Visibility::FarOccluded,
    })
}

/// Maximal cyclic runs of `Some`. Returns `(run, closed)`; a run is closed
/// when every slot is filled.
fn split_runs<P: Copy>(slots: &[Option<P>]) -> Vec<(Vec<P>, bool)> {
    let n = slots.len();
    if n == 0 {
        return Vec::new();
    }
    if slots.iter().all(Option::is_some) {
        return vec![(slots.iter().map(|p| p.unwrap()).collect(), true)];
    }
    // start just after an empty slot so no run wraps across the start
    let start = (0..n).find(|&k| slots[k].is_none()).map_or(0, |k| (k + 1) % n);
    let mut runs = Vec::new();
    let mut cur = Vec::new();
    for i in 0..n {
        match slots[(start + i) % n] {
            Some(p) => cur.push(p),
            None => {
                if !cur.is_empty() {
                    runs.push((std::mem::take(&mut cur), false));
                }
            }
        }
    }
    if !cur.is_empty() {
        runs.push((cur, false));
    }
    runs
}

type Pieces<T> = Vec<(Vec<CurvePoint<T>>, bool)>;

/// Splits a run where one gap dwarfs both of its neighbours.
/// Returns the pieces and the number of breaks found.
fn split_at_breaks<T: Real>(
    run: Vec<CurvePoint<T>>,
    closed: bool,
) -> (Pieces<T>, usize) {
    let n = run.len();
    if n < 3 {
        return (vec![(run, closed)], 0);
    }
    let gaps: Vec<T> = if closed {
        (0..n).map(|k| run[k].point.distance(run[(k + 1) % n].point)).collect()
    } else {
        run.windows(2).map(|w| w[0].point.distance(w[1].point)).collect()
    };
    let m = gaps.len();
    let factor = T::lit(CONTINUITY_FACTOR);
    let mut breaks: Vec<usize> = Vec::new();
    for k in 0..m {
        let (prev, next) = if closed {
            (gaps[(k + m - 1) % m], gaps[(k + 1) % m])
        } else if k == 0 || k + 1 == m {
            continue;
        } else {
            (gaps[k - 1], gaps[k + 1])
        };
        if gaps[k] > factor * prev.max(next) {
            breaks.push(k);
        }
    }
    if breaks.is_empty() {
        return (vec![(run, closed)], 0);
    }
    let count = breaks.len();
    let mut pieces = Vec::new();
    if closed {
        // rotate so the sequence starts right after the first break
        let first = breaks[0];
        let rotated: Vec<_> = (0..n).map(|i| run[(first + 1 + i) % n]).collect();
        let mut cur = Vec::new();
        for (i, p) in rotated.into_iter().enumerate() {
            cur.push(p);
            let orig_gap = (first + 1 + i) % n;
            if breaks.contains(&orig_gap) {
                pieces.push((std::mem::take(&mut cur), false));
            }
        }
        if !cur.is_empty() {
            pieces.push((cur, false));
        }
    } else {
        let mut cur = Vec::new();
        for (i, p) in run.into_iter().enumerate() {
            cur.push(p);
            if breaks.contains(&i) {
                pieces.push((std::mem::take(&mut cur), false));
            }
        }
        if !cur.is_empty() {
            pieces.push((cur, false));
        }
    }
    (pieces, count)
}

/// Solves every generator at `n_samples` uniform sweep angles.
pub fn sweep_generators<T: Real>(
    cone: &DopplerCone<T>,
    e: &Ellipsoid<T>,
    n_samples: usize,
) -> Vec<(T, RayHit<T>)> {
    let param = RayParam::from_semi_angle(cone.semi_angle);
    let step = T::lit(std::f64::consts::TAU) / T::lit(n_samples as f64);
    (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let eta = step * T::lit(k as f64);
            let dir = transform_ray(param.direction(eta), &cone.rotation);
            let ray = Ray {
                origin: cone.apex,
                dir,
            };
            (eta, ray_ellipsoid(&ray, e))
        })
        .collect()
}

/// Intersects a Doppler cone with the ellipsoid and classifies the result.
pub fn intersect_cone_ellipsoid<T: Real>(
    cone: &DopplerCone<T>,
    e: &Ellipsoid<T>,
    n_samples: usize,
) -> Result<IntersectionCurve<T>, IntersectError> {
    if n_samples < MIN_SAMPLES {
        return Err(IntersectError::TooFewSamples(n_samples));
    }
    let samples = sweep_generators(cone, e, n_samples);
    Ok(assemble(samples))
}

fn push_pieces<T: Real>(pts: Vec<CurvePoint<T>>, closed: bool, comps: &mut Vec<CurveComponent<T>>) -> usize {
    let (pieces, b) = split_at_breaks(pts, closed);
    for (p, c) in pieces {
        let kind = if c {
            ComponentKind::ClosedCurve
        } else {
            ComponentKind::OpenArc
        };
        comps.push(CurveComponent { kind, points: p });
    }
    b
}

fn assemble<T: Real>(samples: Vec<(T, RayHit<T>)>) -> IntersectionCurve<T> {
    let n = samples.len();
    let hit_at: Vec<Option<usize>> = (0..n)
        .map(|k| samples[k].1.point_near.map(|_| k))
        .collect();

    let mut components: Vec<CurveComponent<T>> = Vec::new();
    let mut breaks = 0usize;
    for (run, full) in split_runs(&hit_at) {
        let near: Vec<CurvePoint<T>> = run
            .iter()
            .filter_map(|&k| near_point(samples[k].0, &samples[k].1))
            .collect();
        let far_slots: Vec<Option<CurvePoint<T>>> = run
            .iter()
            .map(|&k| far_point(samples[k].0, &samples[k].1))
            .collect();

        if run.len() == 1 && samples[run[0]].1.kind == RootKind::Tangent {
            components.push(CurveComponent {
                kind: ComponentKind::TangentPoint,
                points: near,
            });
            continue;
        }

        if full {
            breaks += push_pieces(near, true, &mut components);
            for (far_run, far_full) in split_runs(&far_slots) {
                breaks += push_pieces(far_run, far_full, &mut components);
            }
        } else if far_slots.iter().all(Option::is_some) {
            // near arc and far arc meet at the unsampled grazing generators
            // at both ends of the run, forming one loop
            let (near_pieces, b1) = split_at_breaks(near, false);
            let far: Vec<_> = far_slots.into_iter().rev().flatten().collect();
            let (far_pieces, b2) = split_at_breaks(far, false);
            breaks += b1 + b2;
            if b1 + b2 == 0 {
                let mut loop_pts = near_pieces.into_iter().next().map(|p| p.0).unwrap_or_default();
                loop_pts.extend(far_pieces.into_iter().next().map(|p| p.0).unwrap_or_default());
                components.push(CurveComponent {
                    kind: ComponentKind::ClosedCurve,
                    points: loop_pts,
                });
            } else {
                for (p, _) in near_pieces.into_iter().chain(far_pieces) {
                    components.push(CurveComponent {
                        kind: ComponentKind::OpenArc,
                        points: p,
                    });
                }
            }
        } else {
            breaks += push_pieces(near, false, &mut components);
            for (far_run, _) in split_runs(&far_slots) {
                breaks += push_pieces(far_run, false, &mut components);
            }
        }
    }

    let topology = match components.len() {
        0 => Topology::Empty,
        1 => match components[0].kind {
            ComponentKind::ClosedCurve => Topology::SingleClosedCurve,
            ComponentKind::OpenArc => Topology::OpenArc,
            ComponentKind::TangentPoint => Topology::TangentPoint,
        },
        _ => Topology::TwoCurves,
    };

    let mut curve = IntersectionCurve {
        samples,
        topology,
        visible_topology: Topology::Empty,
        components,
        points_near: Vec::new(),
        continuity_breaks: breaks,
    };
    let pieces = curve.visible_pieces();
    curve.visible_topology = match pieces.as_slice() {
        [] => Topology::Empty,
        [(pts, true)] if pts.len() > 1 => Topology::SingleClosedCurve,
        [(pts, _)] if pts.len() == 1 && curve.samples.iter().any(|(_, h)| h.kind == RootKind::Tangent) => {
            Topology::TangentPoint
        }
        [_] => Topology::OpenArc,
        _ => Topology::TwoCurves,
    };
    curve.points_near = pieces.into_iter().flat_map(|(p, _)| p).map(|p| p.point).collect();
    curve
}
