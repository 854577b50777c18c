//! How modelling errors move the candidate-emitter curve: reference
//! frequency offsets, atmospheric refraction and relativistic Doppler.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{
    build_cone, semi_angle, ConeError, DopplerCone, DopplerMeasurement, Refraction, VehicleState,
    SPEED_OF_LIGHT,
};
use crate::geodesy::Ellipsoid;
use crate::intersect::{intersect_cone_ellipsoid, IntersectError, IntersectionCurve};
use crate::linalg::Vec3;

type V = Vec3<f64>;

/// Tropospheric refractive index.
pub const TROPOSPHERE_INDEX: f64 = 1.0003;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("refractive index must be finite and at least 1, got {0}")]
    InvalidIndex(f64),
    #[error("layer tops must be positive and strictly increasing")]
    LayerOrder,
    #[error("a layered atmosphere needs at least one layer")]
    NoLayers,
    #[error("speed {0} m/s is not below the speed of light")]
    Superluminal(f64),
    #[error("total internal reflection at altitude {altitude} m")]
    TotalInternalReflection { altitude: f64 },
    #[error("incidence must lie in [0, π/2), got {0} rad")]
    InvalidIncidence(f64),
    #[error("receiver height must be positive, got {0} m")]
    InvalidHeight(f64),
    #[error("curve shift needs two non-empty curves")]
    EmptyCurve,
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Intersect(#[from] IntersectError),
}

/// A horizontal slab from the previous layer's top (or the ground) to `top`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Upper altitude (m).
    pub top: f64,
    pub n: f64,
}

fn vacuum_index() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtmosphereModel {
    #[default]
    Vacuum,
    ConstantIndex { n: f64 },
    /// Stacked layers from the ground up; `n_above` applies over the top one.
    TwoLayer {
        layers: Vec<Layer>,
        #[serde(default = "vacuum_index")]
        n_above: f64,
    },
}

impl AtmosphereModel {
    pub fn troposphere() -> Self {
        AtmosphereModel::ConstantIndex { n: TROPOSPHERE_INDEX }
    }

    /// Troposphere to 20 km at 1.0003, stratosphere 20–50 km at 1.0.
    pub fn troposphere_stratosphere() -> Self {
        AtmosphereModel::TwoLayer {
            layers: vec![
                Layer {
                    top: 20_000.0,
                    n: TROPOSPHERE_INDEX,
                },
                Layer { top: 50_000.0, n: 1.0 },
            ],
            n_above: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let check_n = |n: f64| {
            if n.is_finite() && n >= 1.0 {
                Ok(())
            } else {
                Err(AnalysisError::InvalidIndex(n))
            }
        };
        match self {
            AtmosphereModel::Vacuum => Ok(()),
            AtmosphereModel::ConstantIndex { n } => check_n(*n),
            AtmosphereModel::TwoLayer { layers, n_above } => {
                if layers.is_empty() {
                    return Err(AnalysisError::NoLayers);
                }
                check_n(*n_above)?;
                let mut prev = 0.0;
                for l in layers {
                    check_n(l.n)?;
                    if !(l.top > prev && l.top.is_finite()) {
                        return Err(AnalysisError::LayerOrder);
                    }
                    prev = l.top;
                }
                Ok(())
            }
        }
    }

    /// Refractive index at altitude `h` (m).
    pub fn index_at(&self, h: f64) -> f64 {
        match self {
            AtmosphereModel::Vacuum => 1.0,
            AtmosphereModel::ConstantIndex { n } => *n,
            AtmosphereModel::TwoLayer { layers, n_above } => layers
                .iter()
                .find(|l| h <= l.top)
                .map_or(*n_above, |l| l.n),
        }
    }

    /// Refraction to apply to a receiver at altitude `h`; `None` in vacuum.
    pub fn refraction_at(&self, h: f64) -> Option<Refraction<f64>> {
        match self {
            AtmosphereModel::Vacuum => None,
            _ => Some(Refraction::new(self.index_at(h))),
        }
    }
}

/// Point-to-curve distances from curve A to curve B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveShift {
    pub min_shift: f64,
    pub max_shift: f64,
    /// Each point of A with its distance to B.
    pub per_point: Vec<(V, f64)>,
}

fn point_segment_distance(p: V, a: V, b: V) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    // endpoints checked directly so shared vertices give exactly zero
    p.distance(a + ab * t).min(p.distance(a)).min(p.distance(b))
}

fn point_curve_distance(p: V, b: &[Vec<V>]) -> f64 {
    b.iter()
        .map(|line| match line.len() {
            0 => f64::INFINITY,
            1 => p.distance(line[0]),
            _ => line
                .windows(2)
                .map(|w| point_segment_distance(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min),
        })
        .fold(f64::INFINITY, f64::min)
}

/// Shift between two curves given as sets of polylines (ECEF, m).
pub fn curve_shift(a: &[Vec<V>], b: &[Vec<V>]) -> Result<CurveShift, AnalysisError> {
    let pts: Vec<V> = a.iter().flatten().copied().collect();
    if pts.is_empty() || b.iter().all(Vec::is_empty) {
        return Err(AnalysisError::EmptyCurve);
    }
    let per_point: Vec<(V, f64)> = pts.par_iter().map(|&p| (p, point_curve_distance(p, b))).collect();
    let min_shift = per_point.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let max_shift = per_point.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(CurveShift {
        min_shift,
        max_shift,
        per_point,
    })
}

/// Cone and curve for one reference frequency. Infeasible measurements
/// leave `cone` empty and an empty curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Locus {
    pub f_reference: f64,
    pub cone: Option<DopplerCone<f64>>,
    pub curve: IntersectionCurve<f64>,
    pub infeasible: bool,
}

impl Locus {
    pub fn semi_angle_deg(&self) -> Option<f64> {
        self.cone.as_ref().map(|c| c.semi_angle_deg())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyOffsetResult {
    pub truth: Locus,
    pub nominal: Locus,
    /// From the true curve to the nominal one over all components;
    /// `None` when either is empty.
    pub shift: Option<CurveShift>,
}

/// Builds one locus, reporting an infeasible shift as an empty curve.
pub fn locus(
    vs: &VehicleState<f64>,
    m: &DopplerMeasurement<f64>,
    e: &Ellipsoid<f64>,
    refraction: Option<&Refraction<f64>>,
    n_samples: usize,
) -> Result<Locus, AnalysisError> {
    match build_cone(vs, m, e, refraction) {
        Ok(cone) => Ok(Locus {
            f_reference: m.f_reference,
            curve: intersect_cone_ellipsoid(&cone, e, n_samples)?,
            cone: Some(cone),
            infeasible: false,
        }),
        Err(ConeError::InfeasibleShift { .. }) => Ok(Locus {
            f_reference: m.f_reference,
            cone: None,
            curve: IntersectionCurve::empty(),
            infeasible: true,
        }),
        Err(err) => Err(err.into()),
    }
}

/// Curves under the true and the nominal reference frequency, and the
/// shift between them.
#[allow(clippy::too_many_arguments)]
pub fn frequency_offset_scenario(
    vs: &VehicleState<f64>,
    f_true: f64,
    f_nominal: f64,
    f_received: f64,
    e: &Ellipsoid<f64>,
    atmosphere: &AtmosphereModel,
    n_samples: usize,
) -> Result<FrequencyOffsetResult, AnalysisError> {
    atmosphere.validate()?;
    let h = crate::geodesy::ecef_to_geodetic_or_meridian(vs.position_ecef(e), e).h;
    let refraction = atmosphere.refraction_at(h);
    let truth = locus(vs, &DopplerMeasurement::new(f_received, f_true)?, e, refraction.as_ref(), n_samples)?;
    let nominal = locus(vs, &DopplerMeasurement::new(f_received, f_nominal)?, e, refraction.as_ref(), n_samples)?;
    // full curves, occlusion ignored, as a map-based comparison would see them
    let a = truth.curve.component_polylines();
    let b = nominal.curve.component_polylines();
    let shift = curve_shift(&a, &b).ok();
    Ok(FrequencyOffsetResult { truth, nominal, shift })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativisticFactor {
    /// `ς = v / c`.
    pub varsigma: f64,
    /// Lorentz factor `ρ = 1/√(1 − ς²)`.
    pub rho: f64,
    /// `ρ − 1`, evaluated without cancellation.
    pub rho_minus_one: f64,
}

pub fn lorentz_factor(v: f64) -> Result<RelativisticFactor, AnalysisError> {
    let s = v.abs() / SPEED_OF_LIGHT;
    if s.is_nan() || s >= 1.0 {
        return Err(AnalysisError::Superluminal(v));
    }
    let root = ((1.0 - s) * (1.0 + s)).sqrt();
    let rho_minus_one = s * s / (root * (1.0 + root));
    Ok(RelativisticFactor {
        varsigma: s,
        rho: 1.0 / root,
        rho_minus_one,
    })
}

/// Change in semi-angle (rad) when the measured shift is corrected for time
/// dilation, `δ → δ/ρ`, against the uncorrected cone.
pub fn relativistic_semi_angle_delta(
    vs: &VehicleState<f64>,
    m: &DopplerMeasurement<f64>,
) -> Result<f64, AnalysisError> {
    let factor = lorentz_factor(vs.speed)?;
    let c = SPEED_OF_LIGHT;
    let psi = semi_angle(m, vs.speed, c)?;
    let corrected = DopplerMeasurement::from_shift(m.f_reference, m.shift() / factor.rho)?;
    Ok(semi_angle(&corrected, vs.speed, c)? - psi)
}

/// Snell's law bookkeeping at one interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCrossing {
    pub altitude: f64,
    pub n_above: f64,
    pub n_below: f64,
    /// Angles from vertical (rad).
    pub theta_above: f64,
    pub theta_below: f64,
}

impl InterfaceCrossing {
    /// `|n₁ sin θ₁ − n₂ sin θ₂|`.
    pub fn invariant_error(&self) -> f64 {
        (self.n_above * self.theta_above.sin() - self.n_below * self.theta_below.sin()).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnellResult {
    /// Ground offset of the refracted ray from the straight one (m).
    pub displacement: f64,
    /// Horizontal distance of the straight ray's ground point (m).
    pub straight_offset: f64,
    pub trace: Vec<InterfaceCrossing>,
}

/// Traces a ray from a receiver at `receiver_height` down to flat ground
/// through the layered atmosphere and compares its ground point with the
/// unrefracted ray's.
pub fn snell_two_layer_displacement(
    incidence: f64,
    atmosphere: &AtmosphereModel,
    receiver_height: f64,
) -> Result<SnellResult, AnalysisError> {
    atmosphere.validate()?;
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&incidence) {
        return Err(AnalysisError::InvalidIncidence(incidence));
    }
    if !(receiver_height > 0.0 && receiver_height.is_finite()) {
        return Err(AnalysisError::InvalidHeight(receiver_height));
    }
    let interfaces: Vec<f64> = match atmosphere {
        AtmosphereModel::TwoLayer { layers, .. } => layers
            .iter()
            .rev()
            .map(|l| l.top)
            .filter(|&top| top < receiver_height)
            .collect(),
        _ => Vec::new(),
    };

    let tan0 = incidence.tan();
    let mut theta = incidence;
    let mut n = atmosphere.index_at(receiver_height);
    let mut top = receiver_height;
    let mut displacement = 0.0;
    let mut trace = Vec::new();
    for alt in interfaces.into_iter().chain(std::iter::once(0.0)) {
        displacement += (top - alt) * (theta.tan() - tan0);
        if alt == 0.0 {
            break;
        }
        // index just below the interface
        let n_below = atmosphere.index_at(alt);
        let theta_below = if n_below == n {
            theta
        } else {
            let s = n * theta.sin() / n_below;
            if s > 1.0 {
                return Err(AnalysisError::TotalInternalReflection { altitude: alt });
            }
            s.asin()
        };
        trace.push(InterfaceCrossing {
            altitude: alt,
            n_above: n,
            n_below,
            theta_above: theta,
            theta_below,
        });
        theta = theta_below;
        n = n_below;
        top = alt;
    }
    Ok(SnellResult {
        displacement: displacement.abs(),
        straight_offset: receiver_height * tan0,
        trace,
    })
}
