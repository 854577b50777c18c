//! The constant-Doppler ("FDOA") cone.
//!
//! A single Doppler measurement taken by a moving receiver constrains a
//! stationary emitter to a right circular half-cone: apex at the
//! receiver, axis along the velocity (or against it for a negative
//! shift), semi-angle `ψ` with `cos ψ = (|δ|/f0)·(c/|v|)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesy::{
    body_to_enu_direction, enu_to_ecef_delta, geodetic_to_ecef, Attitude, EcefVec, Ellipsoid,
    GeodeticCoord,
};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// WGS84 nominal earth rotation rate (rad/s).
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_0e-5;

/// Cosines this far above 1 are still accepted as exact (grazing) solutions.
const COS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("Doppler shift implies a closing speed above the receiver speed (cos psi = {cos_psi}); no cone exists")]
    InfeasibleShift { cos_psi: f64 },
    #[error("zero Doppler shift: locus is the plane normal to the velocity")]
    ZeroShift,
    #[error("cone semi-angle {0} rad is outside (0, pi/2]")]
    InvalidSemiAngle(f64),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(&'static str),
    #[error("invalid vehicle state: {0}")]
    InvalidVehicle(&'static str),
}

/// Received and reference carrier frequencies (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerMeasurement<T> {
    pub f_received: T,
    pub f_reference: T,
    /// `f_received − f_reference`, kept exact when built from a shift.
    shift: T,
}

impl<T: Real> DopplerMeasurement<T> {
    pub fn new(f_received: T, f_reference: T) -> Result<Self, ConeError> {
        let ok = |f: T| f.is_finite() && f > T::zero();
        if !ok(f_received) || !ok(f_reference) {
            return Err(ConeError::InvalidMeasurement("frequencies must be finite and positive"));
        }
        Ok(Self {
            f_received,
            f_reference,
            shift: f_received - f_reference,
        })
    }

    /// Measurement with the given reference frequency and shift.
    pub fn from_shift(f_reference: T, shift: T) -> Result<Self, ConeError> {
        if !shift.is_finite() {
            return Err(ConeError::InvalidMeasurement("shift must be finite"));
        }
        Ok(Self {
            shift,
            ..Self::new(f_reference + shift, f_reference)?
        })
    }

    /// `δ = f_received − f_reference`; positive while closing on the emitter.
    #[inline]
    pub fn shift(&self) -> T {
        self.shift
    }
}

/// Where the receiver's velocity direction comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VelocitySource<T> {
    /// Forward body axis, from the INS attitude.
    Attitude(Attitude<T>),
    /// Explicit ECEF velocity (m/s), e.g. GPS-derived.
    Ecef(Vec3<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState<T> {
    pub position: GeodeticCoord<T>,
    /// Speed over ground in the earth-fixed frame (m/s).
    pub speed: T,
    pub velocity: VelocitySource<T>,
}

impl<T: Real> VehicleState<T> {
    pub fn from_attitude(position: GeodeticCoord<T>, speed: T, attitude: Attitude<T>) -> Result<Self, ConeError> {
        if !(speed.is_finite() && speed > T::zero()) {
            return Err(ConeError::InvalidVehicle("speed must be positive"));
        }
        if !attitude.is_finite() {
            return Err(ConeError::InvalidVehicle("attitude must be finite"));
        }
        Ok(Self {
            position,
            speed,
            velocity: VelocitySource::Attitude(attitude),
        })
    }

    pub fn from_ecef_velocity(position: GeodeticCoord<T>, velocity: Vec3<T>) -> Result<Self, ConeError> {
        let speed = velocity.norm();
        if !(velocity.is_finite() && speed > T::zero()) {
            return Err(ConeError::InvalidVehicle("velocity must be finite and non-zero"));
        }
        Ok(Self {
            position,
            speed,
            velocity: VelocitySource::Ecef(velocity),
        })
    }

    /// Unit velocity direction in ECEF.
    pub fn velocity_dir(&self) -> Vec3<T> {
        match self.velocity {
            VelocitySource::Attitude(att) => {
                let enu = body_to_enu_direction(&att);
                let d = enu_to_ecef_delta(enu, &self.position);
                d / d.norm()
            }
            VelocitySource::Ecef(v) => v / v.norm(),
        }
    }

    pub fn position_ecef(&self, e: &Ellipsoid<T>) -> EcefVec<T> {
        geodetic_to_ecef(&self.position, e)
    }
}

/// How a refractive index modifies the propagation speed in the semi-angle formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefractionConvention {
    /// `cos ψ_air = n·cos ψ_vac` (effective speed `n·c`). Reproduces the
    /// published UAV refraction examples (30° → 29.973°).
    #[default]
    ScaleCosine,
    /// `cos ψ_air = cos ψ_vac / n`: the phase speed `c/n` substituted directly.
    PhaseSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refraction<T> {
    pub n: T,
    pub convention: RefractionConvention,
}

impl<T: Real> Refraction<T> {
    pub fn new(n: T) -> Self {
        Self {
            n,
            convention: RefractionConvention::default(),
        }
    }

    /// Propagation speed to use in place of `c` when computing `ψ`.
    pub fn effective_speed(&self) -> T {
        let c = T::lit(SPEED_OF_LIGHT);
        match self.convention {
            RefractionConvention::ScaleCosine => c * self.n,
            RefractionConvention::PhaseSpeed => c / self.n,
        }
    }
}

/// Earth angular velocity, along the ECEF z-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthRotation<T> {
    pub omega: Vec3<T>,
}

impl<T: Real> Default for EarthRotation<T> {
    fn default() -> Self {
        Self {
            omega: Vec3::new(T::zero(), T::zero(), T::lit(EARTH_ROTATION_RATE)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    /// Proper half-cone, `0 < ψ < π/2`.
    Cone,
    /// Zero-shift limit `ψ = π/2`: the plane through the apex normal to the axis.
    Plane,
}

/// Half-cone in ECEF: apex, unit axis, semi-angle, and the quadratic form
/// `M = R·diag(d⁻², d⁻², −1)·Rᵀ` whose zero set (with `(p−r)·axis ≥ 0`) is
/// the cone surface. The plane kind uses `M = axis·axisᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerCone<T> {
    pub apex: EcefVec<T>,
    pub axis: Vec3<T>,
    /// Semi-angle `ψ` (rad).
    pub semi_angle: T,
    pub kind: ConeKind,
    /// Rotation whose third column is `axis`.
    pub rotation: Mat3<T>,
    pub quad_form: Mat3<T>,
}

impl<T: Real> DopplerCone<T> {
    /// Cone from apex, axis (normalized here) and semi-angle in `(0, π/2]`.
    pub fn new(apex: EcefVec<T>, axis: Vec3<T>, semi_angle: T) -> Result<Self, ConeError> {
        let axis = axis
            .normalized()
            .ok_or(ConeError::InvalidVehicle("cone axis must be non-zero"))?;
        let half_pi = T::FRAC_PI_2();
        if !(semi_angle > T::zero() && semi_angle <= half_pi + T::lit(1e-15)) {
            return Err(ConeError::InvalidSemiAngle(semi_angle.to_f64_lossy()));
        }
        let rotation = rotation_from_axis(axis);
        let (kind, semi_angle, quad_form) = if (half_pi - semi_angle).abs() <= T::lit(1e-15) {
            (ConeKind::Plane, half_pi, Mat3::outer(axis, axis))
        } else {
            let d = semi_angle.tan();
            let inv_d2 = T::one() / (d * d);
            let lambda = Mat3::diagonal(Vec3::new(inv_d2, inv_d2, -T::one()));
            let m = rotation.mul_mat(&lambda).mul_mat(&rotation.transpose());
            (ConeKind::Cone, semi_angle, m)
        };
        Ok(Self {
            apex,
            axis,
            semi_angle,
            kind,
            rotation,
            quad_form,
        })
    }

    /// Cone parameter `d = tan ψ` (infinite for the plane kind).
    pub fn d(&self) -> T {
        match self.kind {
            ConeKind::Cone => self.semi_angle.tan(),
            ConeKind::Plane => T::infinity(),
        }
    }

    pub fn semi_angle_deg(&self) -> T {
        self.semi_angle.to_degrees()
    }

    /// Largest absolute eigenvalue of the quadratic form.
    pub fn max_eigenvalue(&self) -> T {
        match self.kind {
            ConeKind::Cone => {
                let d = self.d();
                (T::one() / (d * d)).max(T::one())
            }
            ConeKind::Plane => T::one(),
        }
    }

    /// `|(p−r)ᵀM(p−r)| / (‖p−r‖²·λ_max)`; zero on the (double) cone surface.
    pub fn normalized_residual(&self, p: EcefVec<T>) -> T {
        let v = p - self.apex;
        let n2 = v.norm_squared();
        if n2 == T::zero() {
            return T::zero();
        }
        self.quad_form.quadratic_form(v).abs() / (n2 * self.max_eigenvalue())
    }

    /// Signed projection of `p − apex` on the axis; non-negative on the half-cone.
    pub fn axial_offset(&self, p: EcefVec<T>) -> T {
        (p - self.apex).dot(self.axis)
    }
}

/// Semi-angle `ψ` (rad) from a measurement, receiver speed and effective
/// propagation speed. The sign of the shift only selects the axis
/// direction (see [`axis_direction`]); `ψ` uses `|δ|`.
pub fn semi_angle<T: Real>(m: &DopplerMeasurement<T>, speed: T, c_eff: T) -> Result<T, ConeError> {
    if !(speed.is_finite() && speed > T::zero()) {
        return Err(ConeError::InvalidVehicle("speed must be positive"));
    }
    let cos_psi = (m.shift().abs() / m.f_reference) * (c_eff / speed);
    if !cos_psi.is_finite() {
        return Err(ConeError::InvalidMeasurement("non-finite cosine"));
    }
    if cos_psi > T::one() + T::lit(COS_SLACK) {
        return Err(ConeError::InfeasibleShift {
            cos_psi: cos_psi.to_f64_lossy(),
        });
    }
    Ok(cos_psi.min(T::one()).acos())
}

/// Cone axis: the velocity direction for a positive shift, its reverse for a negative one.
pub fn axis_direction<T: Real>(velocity_dir: Vec3<T>, shift: T) -> Result<Vec3<T>, ConeError> {
    if shift > T::zero() {
        Ok(velocity_dir)
    } else if shift < T::zero() {
        Ok(-velocity_dir)
    } else {
        Err(ConeError::ZeroShift)
    }
}

/// Rotation `R` with third column equal to `axis` (direction cosines `(α, β, γ)`):
///
/// ```text
/// [ αγ/s  −β/s  α ]
/// [ βγ/s   α/s  β ]     s = √(α²+β²)
/// [ −s      0   γ ]
/// ```
///
/// On the z-axis (`s` below machine epsilon) the `θ = 0` limit is used,
/// which is the identity for `+z`.
pub fn rotation_from_axis<T: Real>(axis: Vec3<T>) -> Mat3<T> {
    let (al, be, ga) = (axis.x, axis.y, axis.z);
    let s = al.hypot(be);
    let z = T::zero();
    if s < T::epsilon() {
        // R(θ = 0, γ) with γ = ±1
        let g = if ga >= z { T::one() } else { -T::one() };
        return Mat3::from_rows([[g, z, z], [z, T::one(), z], [z, z, g]]);
    }
    Mat3::from_rows([
        [al * ga / s, -be / s, al],
        [be * ga / s, al / s, be],
        [-s, z, ga],
    ])
}

/// Builds the Doppler cone for a vehicle state and measurement.
///
/// `refraction` of `None` means vacuum propagation. A zero shift yields
/// the plane-kind locus rather than an error.
pub fn build_cone<T: Real>(
    vs: &VehicleState<T>,
    m: &DopplerMeasurement<T>,
    e: &Ellipsoid<T>,
    refraction: Option<&Refraction<T>>,
) -> Result<DopplerCone<T>, ConeError> {
    let c_eff = refraction.map_or_else(|| T::lit(SPEED_OF_LIGHT), Refraction::effective_speed);
    let psi = semi_angle(m, vs.speed, c_eff)?;
    let apex = vs.position_ecef(e);
    let vdir = vs.velocity_dir();
    match axis_direction(vdir, m.shift()) {
        Ok(axis) => DopplerCone::new(apex, axis, psi),
        Err(ConeError::ZeroShift) => DopplerCone::new(apex, vdir, T::FRAC_PI_2()),
        Err(err) => Err(err),
    }
}

/// Cone with an explicitly chosen semi-angle (degrees) along the velocity.
pub fn cone_with_semi_angle<T: Real>(
    vs: &VehicleState<T>,
    semi_angle_deg: T,
    e: &Ellipsoid<T>,
) -> Result<DopplerCone<T>, ConeError> {
    DopplerCone::new(vs.position_ecef(e), vs.velocity_dir(), semi_angle_deg.to_radians())
}

/// Frequency seen at the receiver for emitter–receiver separation `sep = p − r`
/// and coordinate rate of change `sep_rate = d(p − r)/dt` in ECEF.
///
/// With `with_rotation` the rotating-frame term `Ω × (p − r)` is added to
/// the relative velocity before projecting on the line of sight. That term
/// is perpendicular to `p − r`, so both settings agree to rounding.
pub fn doppler_frequency<T: Real>(
    sep_rate: Vec3<T>,
    sep: Vec3<T>,
    f0: T,
    with_rotation: bool,
    rotation: &EarthRotation<T>,
) -> T {
    let los = sep / sep.norm();
    let rel = if with_rotation {
        sep_rate + rotation.omega.cross(sep)
    } else {
        sep_rate
    };
    let shift = -f0 * rel.dot(los) / T::lit(SPEED_OF_LIGHT);
    f0 + shift
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const C: f64 = SPEED_OF_LIGHT;

    fn psi_deg(shift: f64, f0: f64, speed: f64, c_eff: f64) -> f64 {
        let m = DopplerMeasurement::from_shift(f0, shift).unwrap();
        semi_angle(&m, speed, c_eff).unwrap().to_degrees()
    }

    #[test]
    fn semi_angle_published_values() {
        assert_abs_diff_eq!(psi_deg(43.3, C, 50.0, C), 30.0, epsilon = 0.05);
        assert_abs_diff_eq!(psi_deg(2.615, C, 50.0, C), 87.0, epsilon = 0.05);
        assert_abs_diff_eq!(psi_deg(-43.3, C, 50.0, C), psi_deg(43.3, C, 50.0, C), epsilon = 0.0);
    }

    #[test]
    fn semi_angle_zero_at_full_closing_speed() {
        // exact for the chosen f0 = c: δ = speed
        assert_eq!(psi_deg(50.0, C, 50.0, C), 0.0);
        let m = DopplerMeasurement::from_shift(C, 50.0 * (1.0 + 1e-9)).unwrap();
        assert!(matches!(semi_angle(&m, 50.0, C), Err(ConeError::InfeasibleShift { .. })));
    }

    #[test]
    fn semi_angle_scale_invariance() {
        let a = psi_deg(21.0, 1.0e9, 40.0, C);
        let m = DopplerMeasurement::new(7.0 * (1.0e9 + 21.0), 7.0 * 1.0e9).unwrap();
        let b = semi_angle(&m, 40.0, C).unwrap().to_degrees();
        assert!((a - b).abs().to_radians() < 1e-12);
    }

    #[test]
    fn refraction_conventions() {
        let m = DopplerMeasurement::from_shift(C, 43.3).unwrap();
        let scale = semi_angle(&m, 50.0, Refraction::new(1.0003).effective_speed()).unwrap();
        assert_abs_diff_eq!(scale.to_degrees(), 29.973, epsilon = 0.005);
        let phase = Refraction {
            n: 1.0003,
            convention: RefractionConvention::PhaseSpeed,
        };
        let p = semi_angle(&m, 50.0, phase.effective_speed()).unwrap();
        assert!(p.to_degrees() > 30.0);
    }

    #[test]
    fn axis_follows_shift_sign() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(axis_direction(v, 10.0).unwrap(), v);
        assert_eq!(axis_direction(v, -10.0).unwrap(), -v);
        let w = Vec3::new(0.6, 0.8, 0.0);
        assert_eq!(axis_direction(w, -1.0).unwrap(), Vec3::new(-0.6, -0.8, 0.0));
        assert_eq!(axis_direction(w, 0.0), Err(ConeError::ZeroShift));
    }

    #[test]
    fn rotation_special_axes() {
        assert_eq!(rotation_from_axis(Vec3::<f64>::unit_z()), Mat3::identity());
        let r = rotation_from_axis(Vec3::<f64>::unit_x());
        assert_eq!(r.column(0), Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(r.column(1), Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(r.column(2), Vec3::new(1.0, 0.0, 0.0));
        let down = rotation_from_axis(Vec3::<f64>::new(0.0, 0.0, -1.0));
        assert_eq!(down.column(2), Vec3::new(0.0, 0.0, -1.0));
        assert_abs_diff_eq!(down.determinant(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_cone_quadratic_form() {
        let cone = DopplerCone::new(Vec3::zero(), Vec3::unit_z(), std::f64::consts::FRAC_PI_4).unwrap();
        let expect = Mat3::diagonal(Vec3::new(1.0, 1.0, -1.0));
        assert!(cone.quad_form.max_abs_diff(&expect) < 1e-15);
        assert_eq!(cone.kind, ConeKind::Cone);
        assert_abs_diff_eq!(cone.d(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_shift_builds_plane() {
        let pos = GeodeticCoord::new(10.0f64, 20.0, 1000.0).unwrap();
        let vs = VehicleState::from_attitude(pos, 50.0, Attitude::new(0.0, 0.0, 45.0)).unwrap();
        let m = DopplerMeasurement::new(1.0e9, 1.0e9).unwrap();
        let cone = build_cone(&vs, &m, &Ellipsoid::wgs84(), None).unwrap();
        assert_eq!(cone.kind, ConeKind::Plane);
        assert!(cone.d().is_infinite());
        // any point on the normal plane has zero residual
        let t = cone.axis.cross(Vec3::unit_z()).normalized().unwrap();
        assert!(cone.normalized_residual(cone.apex + t * 1234.0) < 1e-15);
    }

    #[test]
    fn build_cone_rejects_superluminal_shift() {
        let pos = GeodeticCoord::new(0.0, 0.0, 1000.0).unwrap();
        let vs = VehicleState::from_attitude(pos, 50.0, Attitude::default()).unwrap();
        let m = DopplerMeasurement::from_shift(C, 60.0).unwrap();
        assert!(matches!(
            build_cone(&vs, &m, &Ellipsoid::wgs84(), None),
            Err(ConeError::InfeasibleShift { .. })
        ));
    }

    #[test]
    fn negative_shift_reverses_axis() {
        let pos = GeodeticCoord::new(-34.6462, 138.833, 2000.0).unwrap();
        let vs = VehicleState::from_attitude(pos, 50.0, Attitude::new(0.0, -30.0, 190.0)).unwrap();
        let e = Ellipsoid::wgs84();
        let up = build_cone(&vs, &DopplerMeasurement::from_shift(C, 20.0).unwrap(), &e, None).unwrap();
        let down = build_cone(&vs, &DopplerMeasurement::from_shift(C, -20.0).unwrap(), &e, None).unwrap();
        assert_abs_diff_eq!((up.axis + down.axis).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(up.semi_angle, down.semi_angle, epsilon = 0.0);
    }

    #[test]
    fn explicit_ecef_velocity_matches_attitude() {
        let pos = GeodeticCoord::new(-34.6462, 138.833, 2000.0).unwrap();
        let att = VehicleState::from_attitude(pos, 50.0, Attitude::new(0.0, -30.0, 190.0)).unwrap();
        let v = att.velocity_dir() * 50.0;
        let ecef = VehicleState::from_ecef_velocity(pos, v).unwrap();
        assert_abs_diff_eq!((ecef.velocity_dir() - att.velocity_dir()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ecef.speed, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn radial_approach_gives_one_hz_per_metre_per_second() {
        let rot = EarthRotation::default();
        let sep = Vec3::new(1000.0, 0.0, 0.0);
        let rate = Vec3::new(-50.0, 0.0, 0.0);
        let f = doppler_frequency(rate, sep, C, false, &rot);
        assert_abs_diff_eq!(f - C, 50.0, epsilon = 1e-6);
    }

    #[test]
    fn transverse_motion_is_unshifted() {
        let rot = EarthRotation::default();
        let f = doppler_frequency(Vec3::new(0.0, 70.0, 0.0), Vec3::new(5000.0, 0.0, 0.0), 1.0e9, false, &rot);
        assert_eq!(f, 1.0e9);
    }

    #[test]
    fn invalid_inputs() {
        assert!(DopplerMeasurement::new(0.0, 1.0).is_err());
        assert!(DopplerMeasurement::new(1.0, f64::NAN).is_err());
        let pos = GeodeticCoord::new(0.0, 0.0, 0.0).unwrap();
        assert!(VehicleState::from_attitude(pos, 0.0, Attitude::default()).is_err());
        assert!(VehicleState::from_ecef_velocity(pos, Vec3::zero()).is_err());
        assert!(DopplerCone::new(Vec3::zero(), Vec3::unit_z(), 0.0).is_err());
        assert!(DopplerCone::new(Vec3::zero(), Vec3::zero(), 0.3).is_err());
    }
}
