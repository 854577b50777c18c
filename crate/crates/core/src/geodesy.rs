//! WGS84 ellipsoid and the coordinate frames used by the pipeline:
//! geodetic, ECEF, local ENU and vehicle body.
//!
//! Angles cross the public API in degrees; all trigonometry is done in
//! radians internally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Cartesian position or displacement in the earth-centered earth-fixed frame (m).
pub type EcefVec<T> = Vec3<T>;

/// Local east/north/up displacement (m); `x` = east, `y` = north, `z` = up.
pub type EnuVec<T> = Vec3<T>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesyError {
    #[error("invalid ellipsoid: {0}")]
    InvalidEllipsoid(&'static str),
    #[error("latitude {0} deg outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("non-finite geodetic coordinate")]
    NonFinite,
    /// The point is within 1 m of the polar axis, so longitude is not
    /// determined. Latitude and height are still well defined and are
    /// carried along so the caller can pick a longitude.
    #[error("point {distance_from_axis} m from the polar axis; longitude undefined")]
    AxisDegeneracy {
        distance_from_axis: f64,
        lat_deg: f64,
        h: f64,
    },
}

/// Reference ellipsoid of revolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid<T> {
    /// Semi-major axis (m).
    pub a: T,
    /// Semi-minor axis (m).
    pub b: T,
    /// Flattening.
    pub f: T,
    /// First eccentricity squared.
    pub e2: T,
}

impl<T: Real> Ellipsoid<T> {
    pub const WGS84_A: f64 = 6_378_137.0;
    pub const WGS84_INV_F: f64 = 298.257_223_563;

    /// WGS84 reference ellipsoid.
    pub fn wgs84() -> Self {
        let a = T::lit(Self::WGS84_A);
        let f = T::one() / T::lit(Self::WGS84_INV_F);
        Self::from_parts(a, f)
    }

    /// Ellipsoid from semi-major axis and flattening. Requires `a > 0`
    /// and `0 < f < 1` so that `a > b > 0`.
    pub fn new(a: T, f: T) -> Result<Self, GeodesyError> {
        if !(a.is_finite() && a > T::zero()) {
            return Err(GeodesyError::InvalidEllipsoid("semi-major axis must be positive"));
        }
        if !(f > T::zero() && f < T::one()) {
            return Err(GeodesyError::InvalidEllipsoid("flattening must lie in (0, 1)"));
        }
        Ok(Self::from_parts(a, f))
    }

    fn from_parts(a: T, f: T) -> Self {
        let two = T::lit(2.0);
        Self {
            a,
            b: a * (T::one() - f),
            f,
            e2: two * f - f * f,
        }
    }

    /// `x²/a² + y²/a² + z²/b² − 1`; zero on the surface.
    #[inline]
    pub fn residual(&self, p: EcefVec<T>) -> T {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        (p.x * p.x + p.y * p.y) / a2 + p.z * p.z / b2 - T::one()
    }

    /// Prime-vertical radius of curvature at geodetic latitude `lat` (rad).
    #[inline]
    pub fn prime_vertical_radius(&self, lat: T) -> T {
        let s = lat.sin();
        self.a / (T::one() - self.e2 * s * s).sqrt()
    }

    /// Meridional radius of curvature at geodetic latitude `lat` (rad).
    pub fn meridian_radius(&self, lat: T) -> T {
        let s = lat.sin();
        let w2 = T::one() - self.e2 * s * s;
        self.a * (T::one() - self.e2) / (w2 * w2.sqrt())
    }
}

/// Normalizes a longitude in degrees into (−180, 180].
pub fn normalize_longitude<T: Real>(lon_deg: T) -> T {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    if lon_deg > -half && lon_deg <= half {
        return lon_deg;
    }
    let mut l = lon_deg - full * ((lon_deg + half) / full).floor();
    if l <= -half {
        l = l + full;
    }
    if l > half {
        l = l - full;
    }
    l
}

/// Geodetic latitude/longitude (degrees) and ellipsoid height (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord<T> {
    pub lat: T,
    pub lon: T,
    pub h: T,
}

impl<T: Real> GeodeticCoord<T> {
    /// Validates latitude and normalizes longitude into (−180, 180].
    pub fn new(lat_deg: T, lon_deg: T, h: T) -> Result<Self, GeodesyError> {
        if !(lat_deg.is_finite() && lon_deg.is_finite() && h.is_finite()) {
            return Err(GeodesyError::NonFinite);
        }
        if lat_deg.abs() > T::lit(90.0) {
            return Err(GeodesyError::LatitudeOutOfRange(lat_deg.to_f64_lossy()));
        }
        Ok(Self {
            lat: lat_deg,
            lon: normalize_longitude(lon_deg),
            h,
        })
    }

    pub fn lat_rad(&self) -> T {
        self.lat.to_radians()
    }

    pub fn lon_rad(&self) -> T {
        self.lon.to_radians()
    }
}

/// Roll, pitch and yaw of the vehicle body with respect to local ENU (degrees).
///
/// Zero attitude has the body x-axis (forward) pointing north, y east and
/// z down. Yaw is measured clockwise from north, pitch is positive nose-up,
/// roll is positive right-wing-down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Attitude<T> {
    pub roll: T,
    pub pitch: T,
    pub yaw: T,
}

impl<T: Real> Attitude<T> {
    pub fn new(roll_deg: T, pitch_deg: T, yaw_deg: T) -> Self {
        Self {
            roll: roll_deg,
            pitch: pitch_deg,
            yaw: yaw_deg,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

/// Orthometric height `H`, geoid undulation `N` and ellipsoid height `h = H + N` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightTriple<T> {
    pub orthometric: T,
    pub undulation: T,
    pub ellipsoidal: T,
}

impl<T: Real> HeightTriple<T> {
    pub fn from_orthometric(orthometric: T, undulation: T) -> Self {
        Self {
            orthometric,
            undulation,
            ellipsoidal: orthometric_to_ellipsoid_height(orthometric, undulation),
        }
    }
}

#[inline]
pub fn orthometric_to_ellipsoid_height<T: Real>(orthometric: T, undulation: T) -> T {
    orthometric + undulation
}

/// Geodetic to ECEF.
pub fn geodetic_to_ecef<T: Real>(g: &GeodeticCoord<T>, e: &Ellipsoid<T>) -> EcefVec<T> {
    let (lat, lon) = (g.lat_rad(), g.lon_rad());
    let (sl, cl) = lat.sin_cos();
    let (so, co) = lon.sin_cos();
    let chi = (T::one() - e.e2 * sl * sl).sqrt();
    let n = e.a / chi;
    Vec3::new(
        (n + g.h) * cl * co,
        (n + g.h) * cl * so,
        (n * (T::one() - e.e2) + g.h) * sl,
    )
}

/// ECEF to geodetic using the single-pass parametric-latitude closed form
/// followed by one refinement of the parametric latitude.
///
/// Within 1 m of the polar axis the longitude is indeterminate and
/// [`GeodesyError::AxisDegeneracy`] is returned carrying latitude and
/// height; see [`ecef_to_geodetic_or_meridian`].
pub fn ecef_to_geodetic<T: Real>(
    p: EcefVec<T>,
    e: &Ellipsoid<T>,
) -> Result<GeodeticCoord<T>, GeodesyError> {
    if !p.is_finite() {
        return Err(GeodesyError::NonFinite);
    }
    let rho = p.x.hypot(p.y);
    let (lat, h) = latitude_and_height(rho, p.z, e);
    if rho < T::one() {
        return Err(GeodesyError::AxisDegeneracy {
            distance_from_axis: rho.to_f64_lossy(),
            lat_deg: lat.to_degrees().to_f64_lossy(),
            h: h.to_f64_lossy(),
        });
    }
    let lon = p.y.atan2(p.x);
    Ok(GeodeticCoord {
        lat: lat.to_degrees(),
        lon: normalize_longitude(lon.to_degrees()),
        h,
    })
}

/// As [`ecef_to_geodetic`] but assigns longitude 0 on the polar axis.
pub fn ecef_to_geodetic_or_meridian<T: Real>(p: EcefVec<T>, e: &Ellipsoid<T>) -> GeodeticCoord<T> {
    let rho = p.x.hypot(p.y);
    let (lat, h) = latitude_and_height(rho, p.z, e);
    let lon = if rho < T::one() {
        T::zero()
    } else {
        normalize_longitude(p.y.atan2(p.x).to_degrees())
    };
    GeodeticCoord {
        lat: lat.to_degrees(),
        lon,
        h,
    }
}

fn latitude_and_height<T: Real>(rho: T, z: T, e: &Ellipsoid<T>) -> (T, T) {
    let (a, f, e2) = (e.a, e.f, e.e2);
    let one_f = T::one() - f;
    let half_pi = T::FRAC_PI_2();

    let geodetic_from_parametric = |mu: T| -> T {
        let (sm, cm) = mu.sin_cos();
        let num = z * one_f + e2 * a * sm * sm * sm;
        let den = one_f * (rho - e2 * a * cm * cm * cm);
        if den <= T::zero() {
            // on (or numerically at) the polar axis
            if z >= T::zero() {
                half_pi
            } else {
                -half_pi
            }
        } else {
            (num / den).atan()
        }
    };

    let r = rho.hypot(z);
    let lat = if r == T::zero() {
        T::zero()
    } else {
        let mu0 = (z * (one_f + e2 * a / r)).atan2(rho);
        let lat0 = geodetic_from_parametric(mu0);
        // closed form alone is ~1.5e-6 m; one more pass brings it to ~1e-9 m
        let (s0, c0) = lat0.sin_cos();
        let mu1 = (one_f * s0).atan2(c0);
        geodetic_from_parametric(mu1)
    };
    let lat = lat.max(-half_pi).min(half_pi);
    let (sl, cl) = lat.sin_cos();
    let h = rho * cl + z * sl - a * (T::one() - e2 * sl * sl).sqrt();
    (lat, h)
}

/// Rotation taking ECEF displacements into the ENU frame at `origin`.
pub fn ecef_to_enu_matrix<T: Real>(origin: &GeodeticCoord<T>) -> Mat3<T> {
    let (sp, cp) = origin.lat_rad().sin_cos();
    let (sl, cl) = origin.lon_rad().sin_cos();
    Mat3::from_rows([
        [-sl, cl, T::zero()],
        [-sp * cl, -sp * sl, cp],
        [cp * cl, cp * sl, sp],
    ])
}

pub fn ecef_delta_to_enu<T: Real>(d: EcefVec<T>, origin: &GeodeticCoord<T>) -> EnuVec<T> {
    ecef_to_enu_matrix(origin).mul_vec(d)
}

pub fn enu_to_ecef_delta<T: Real>(d: EnuVec<T>, origin: &GeodeticCoord<T>) -> EcefVec<T> {
    ecef_to_enu_matrix(origin).transpose().mul_vec(d)
}

/// Rotation taking body-frame vectors into ENU.
///
/// Built as the aerospace yaw→pitch→roll sequence into NED followed by the
/// fixed NED→ENU axis swap, so it is orthonormal for every attitude.
pub fn body_to_enu_matrix<T: Real>(att: &Attitude<T>) -> Mat3<T> {
    let (sr, cr) = att.roll.to_radians().sin_cos();
    let (sp, cp) = att.pitch.to_radians().sin_cos();
    let (sy, cy) = att.yaw.to_radians().sin_cos();
    let z = T::zero();
    let o = T::one();

    // body -> NED: Rz(yaw) * Ry(pitch) * Rx(roll)
    let ned_from_body = Mat3::from_rows([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]);
    let enu_from_ned = Mat3::from_rows([[z, o, z], [o, z, z], [z, z, -o]]);
    let m = enu_from_ned.mul_mat(&ned_from_body);
    debug_assert!(m.orthogonality_error().to_f64_lossy() < 1e-5);
    m
}

/// ENU direction of the body x-axis (vehicle forward).
pub fn body_to_enu_direction<T: Real>(att: &Attitude<T>) -> EnuVec<T> {
    body_to_enu_matrix(att).column(0)
}

/// Compass heading (degrees clockwise from north, in [0, 360)) of an ENU vector.
pub fn heading_deg<T: Real>(v: EnuVec<T>) -> T {
    let h = v.x.atan2(v.y).to_degrees();
    if h < T::zero() {
        h + T::lit(360.0)
    } else {
        h
    }
}
