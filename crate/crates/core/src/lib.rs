//! Candidate emitter loci from a single Doppler-shift measurement.
//!
//! A Doppler shift measured on a moving receiver constrains the emitter to a
//! cone about the receiver's velocity. This crate builds that cone,
//! intersects it with the WGS84 ellipsoid and with gridded terrain, and
//! quantifies how modelling errors move the resulting curve.

pub mod cone;
pub mod error_analysis;
pub mod geodesy;
pub mod intersect;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod terrain;

pub use cone::{
    build_cone, cone_with_semi_angle, semi_angle, ConeError, ConeKind, DopplerCone,
    DopplerMeasurement, Refraction, RefractionConvention, VehicleState,
};
pub use geodesy::{Attitude, Ellipsoid, GeodeticCoord, GeodesyError};
pub use intersect::{intersect_cone_ellipsoid, IntersectionCurve, RayHit, Topology};
pub use linalg::{Mat3, Vec3};
pub use error_analysis::{
    curve_shift, frequency_offset_scenario, lorentz_factor, relativistic_semi_angle_delta,
    snell_two_layer_displacement, AtmosphereModel, CurveShift,
};
pub use scalar::Real;
pub use terrain::{
    cone_terrain_curve, grid_to_ecef_posts, map_point_to_terrain, EcefPostSet, TerrainCurve,
    TerrainGrid, TerrainSearchConfig,
};

pub type Vec3d = Vec3<f64>;
pub type Vec3f = Vec3<f32>;
pub type Mat3d = Mat3<f64>;
pub type Ellipsoid64 = Ellipsoid<f64>;
pub type GeodeticCoord64 = GeodeticCoord<f64>;
pub type DopplerCone64 = DopplerCone<f64>;
pub type DopplerCone32 = DopplerCone<f32>;
pub type VehicleState64 = VehicleState<f64>;
pub type IntersectionCurve64 = IntersectionCurve<f64>;
