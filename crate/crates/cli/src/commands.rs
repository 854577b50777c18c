use std::path::Path;

use fdoa_locus::cone::{build_cone, cone_with_semi_angle, ConeError, ConeKind, DopplerCone};
use fdoa_locus::error_analysis::curve_shift;
use fdoa_locus::geodesy::ecef_to_geodetic_or_meridian;
use fdoa_locus::intersect::{intersect_cone_ellipsoid, IntersectionCurve, Topology};
use fdoa_locus::io::dted::{read_dted, write_dted, DtedLevel};
use fdoa_locus::io::portable::{load_portable_grid, write_portable_grid};
use fdoa_locus::io::synth::{flat, plateau, punch_voids, ridge, TileSpec};
use fdoa_locus::io::CurveDocument;
use fdoa_locus::terrain::{
    cone_terrain_curve, grid_to_ecef_posts, Geoid, TerrainGrid, TerrainSearchConfig,
};
use fdoa_locus::{Ellipsoid, Vec3};
use serde_json::{json, Value};

use crate::config::{LoadedConfig, TerrainFormat};
use crate::output::{add_ellipsoid_curve, add_ellipsoid_points, add_terrain_curve, write_document, write_file};
use crate::report::Report;
use crate::{CliError, Common, GenTileArgs, TileFormat, TileKind};

fn vec_json(v: Vec3<f64>) -> Value {
    json!([v.x, v.y, v.z])
}

fn topology_name(t: Topology) -> &'static str {
    match t {
        Topology::Empty => "empty",
        Topology::TangentPoint => "tangent_point",
        Topology::SingleClosedCurve => "single_closed_curve",
        Topology::TwoCurves => "two_curves",
        Topology::OpenArc => "open_arc",
    }
}

fn cone_error(e: ConeError) -> CliError {
    match e {
        ConeError::InfeasibleShift { cos_psi } => CliError::Infeasible(format!(
            "cos ψ = {cos_psi} exceeds 1; no emitter direction produces this shift at this speed"
        )),
        other => CliError::Config(other.to_string()),
    }
}

fn make_cone(cfg: &LoadedConfig, semi_angle: Option<f64>, e: &Ellipsoid<f64>) -> Result<DopplerCone<f64>, CliError> {
    let c = &cfg.config;
    let vs = c.vehicle_state()?;
    match semi_angle.or(c.semi_angle_deg) {
        Some(deg) => cone_with_semi_angle(&vs, deg, e).map_err(cone_error),
        None => {
            let m = c.measurement()?.expect("validated: measurement or semi-angle present");
            build_cone(&vs, &m, e, c.refraction()?.as_ref()).map_err(cone_error)
        }
    }
}

fn samples(common: &Common, cfg: &LoadedConfig) -> usize {
    common.samples.unwrap_or(cfg.config.sweep.n_samples)
}

fn make_curve(
    common: &Common,
    cfg: &LoadedConfig,
    semi_angle: Option<f64>,
    e: &Ellipsoid<f64>,
) -> Result<(DopplerCone<f64>, IntersectionCurve<f64>), CliError> {
    let cone = make_cone(cfg, semi_angle, e)?;
    let curve = intersect_cone_ellipsoid(&cone, e, samples(common, cfg)).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((cone, curve))
}

fn cone_report(r: &mut Report, cone: &DopplerCone<f64>, e: &Ellipsoid<f64>) {
    let g = ecef_to_geodetic_or_meridian(cone.apex, e);
    r.add("apex_ecef_m", vec_json(cone.apex))
        .add("apex_geodetic", json!([g.lat, g.lon, g.h]))
        .add("axis", vec_json(cone.axis))
        .add("semi_angle_deg", cone.semi_angle_deg())
        .add("kind", if cone.kind == ConeKind::Plane { "plane" } else { "cone" })
        .add("d", if cone.d().is_finite() { json!(cone.d()) } else { Value::Null });
}

fn curve_report(r: &mut Report, curve: &IntersectionCurve<f64>) {
    r.add("topology", topology_name(curve.topology))
        .add("visible_topology", topology_name(curve.visible_topology))
        .add("components", curve.components.len())
        .add("visible_points", curve.points_near.len())
        .add("arc_length_m", curve.arc_length());
}

fn paths_json(paths: &[std::path::PathBuf]) -> Value {
    json!(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

pub fn cone(common: &Common, semi_angle: Option<f64>) -> Result<(), CliError> {
    let e = Ellipsoid::wgs84();
    let cfg = LoadedConfig::load(&common.config)?;
    let cone = make_cone(&cfg, semi_angle, &e)?;
    let mut r = Report::new();
    cone_report(&mut r, &cone, &e);
    r.print(common.json);
    Ok(())
}

pub fn intersect(common: &Common, semi_angle: Option<f64>) -> Result<(), CliError> {
    let e = Ellipsoid::wgs84();
    let cfg = LoadedConfig::load(&common.config)?;
    let (cone, curve) = make_curve(common, &cfg, semi_angle, &e)?;
    let stem = cfg.stem();
    let mut doc = CurveDocument::new(&stem);
    add_ellipsoid_curve(&mut doc, &curve, cfg.config.output.include_occluded, &e);
    let written = write_document(&doc, &common.out, &stem, &cfg.config.output.formats)?;

    let mut r = Report::new();
    r.add("semi_angle_deg", cone.semi_angle_deg());
    curve_report(&mut r, &curve);
    if curve.topology == Topology::Empty {
        r.add("message", "the cone does not meet the ellipsoid");
    }
    r.add("files", paths_json(&written));
    r.print(common.json);
    Ok(())
}

fn load_terrain(cfg: &LoadedConfig) -> Result<TerrainGrid, CliError> {
    let t = cfg
        .config
        .terrain
        .as_ref()
        .ok_or_else(|| CliError::Config("scenario has no terrain section".into()))?;
    let path = cfg.terrain_path().expect("terrain section present");
    let mut grid = match t.resolved_format() {
        TerrainFormat::Dted => {
            let bytes = std::fs::read(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            read_dted(&bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        }
        TerrainFormat::Portable => load_portable_grid(&path).map_err(|e| CliError::Io(e.to_string()))?,
    };
    if let Some(n) = t.geoid_n {
        grid.geoid = Geoid::Constant(n);
    }
    Ok(grid)
}

pub fn terrain(common: &Common, semi_angle: Option<f64>) -> Result<(), CliError> {
    let e = Ellipsoid::wgs84();
    let cfg = LoadedConfig::load(&common.config)?;
    let grid = load_terrain(&cfg)?;
    let (cone, curve) = make_curve(common, &cfg, semi_angle, &e)?;
    let posts = grid_to_ecef_posts(&grid, &e).map_err(|e| CliError::Io(format!("terrain: {e}")))?;
    let tc = cfg.config.terrain.as_ref().expect("terrain loaded");
    let mut search = TerrainSearchConfig::for_grid(&grid, &e);
    search.strategy = tc.strategy;
    if let Some(tr) = tc.threshold_m {
        search = TerrainSearchConfig::new(tr, tc.strategy).map_err(|e| CliError::Config(e.to_string()))?;
    }
    let tcurve = cone_terrain_curve(&curve, cone.apex, &posts, &search, &e);

    let stem = cfg.stem();
    let mut doc = CurveDocument::new(&stem);
    add_ellipsoid_curve(&mut doc, &curve, cfg.config.output.include_occluded, &e);
    add_ellipsoid_points(&mut doc, &curve, &e);
    add_terrain_curve(&mut doc, &tcurve);
    let written = write_document(&doc, &common.out, &stem, &cfg.config.output.formats)?;

    let reductions: Vec<f64> = tcurve.points.iter().map(|p| p.ellipsoid_range - p.range).collect();
    let mean = if reductions.is_empty() {
        Value::Null
    } else {
        json!(reductions.iter().sum::<f64>() / reductions.len() as f64)
    };
    let mut r = Report::new();
    r.add("semi_angle_deg", cone.semi_angle_deg());
    curve_report(&mut r, &curve);
    r.add("threshold_m", search.threshold)
        .add("terrain_points", tcurve.points.len())
        .add("gaps", tcurve.gaps.len())
        .add(
            "gap_eta_deg",
            json!(tcurve
                .gaps
                .iter()
                .map(|(a, b)| json!([a.to_degrees(), b.to_degrees()]))
                .collect::<Vec<_>>()),
        )
        .add("mean_range_reduction_m", mean)
        .add("max_range_reduction_m", reductions.iter().copied().reduce(f64::max).map_or(Value::Null, |v| json!(v)))
        .add("files", paths_json(&written));
    r.print(common.json);
    Ok(())
}

fn shift_polylines(curve: &IntersectionCurve<f64>, visible_only: bool) -> Vec<Vec<Vec3<f64>>> {
    if visible_only {
        curve.visible_polylines()
    } else {
        curve.component_polylines()
    }
}

pub fn shift(common: &Common, config_b: &Path, detail: bool, visible_only: bool) -> Result<(), CliError> {
    let e = Ellipsoid::wgs84();
    let cfg_a = LoadedConfig::load(&common.config)?;
    let cfg_b = LoadedConfig::load(config_b)?;
    let (cone_a, curve_a) = make_curve(common, &cfg_a, None, &e)?;
    let (cone_b, curve_b) = make_curve(common, &cfg_b, None, &e)?;

    let mut r = Report::new();
    r.add("semi_angle_a_deg", cone_a.semi_angle_deg())
        .add("semi_angle_b_deg", cone_b.semi_angle_deg())
        .add("visible_topology_a", topology_name(curve_a.visible_topology))
        .add("visible_topology_b", topology_name(curve_b.visible_topology))
        .add("curves", if visible_only { "visible" } else { "full" });
    match curve_shift(&shift_polylines(&curve_a, visible_only), &shift_polylines(&curve_b, visible_only)) {
        Ok(s) => {
            r.add("min_shift_m", s.min_shift)
                .add("max_shift_m", s.max_shift)
                .add("points", s.per_point.len());
            if detail {
                let path = common.out.join(format!("{}_shift.csv", cfg_a.stem()));
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Io(e.to_string());
                w.write_record(["index", "lat_deg", "lon_deg", "h_m", "distance_m"]).map_err(io)?;
                for (k, (p, d)) in s.per_point.iter().enumerate() {
                    let g = ecef_to_geodetic_or_meridian(*p, &e);
                    w.write_record([
                        k.to_string(),
                        g.lat.to_string(),
                        g.lon.to_string(),
                        g.h.to_string(),
                        d.to_string(),
                    ])
                    .map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                write_file(&path, &bytes)?;
                r.add("detail", path.display().to_string());
            }
        }
        Err(_) => {
            r.add("min_shift_m", Value::Null)
                .add("max_shift_m", Value::Null)
                .add("message", "at least one curve is empty; shift undefined");
        }
    }
    r.print(common.json);
    Ok(())
}

pub fn gen_tile(a: &GenTileArgs) -> Result<(), CliError> {
    let level = DtedLevel::from_number(a.level).expect("clap restricts the level");
    if !(-90.0..=90.0).contains(&a.lat) || !a.lon.is_finite() || !a.height.is_finite() {
        return Err(CliError::Config("tile centre or height out of range".into()));
    }
    let spec = TileSpec::centered(level, a.lat, a.lon, a.half);
    let e = Ellipsoid::wgs84();
    let mut grid = match a.kind {
        TileKind::Flat => flat(&spec, a.height),
        TileKind::Plateau => plateau(&spec, a.height, a.margin),
        TileKind::Ridge => ridge(&spec, a.height, a.width_m, &e),
    };
    punch_voids(&mut grid, a.voids, a.voids / 2);
    grid.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let format = a.format.unwrap_or_else(|| {
        match a.out.extension().and_then(|x| x.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("dt0" | "dt1" | "dt2" | "dted") => TileFormat::Dted,
            _ => TileFormat::Portable,
        }
    });
    let bytes = match format {
        TileFormat::Dted => write_dted(&grid, level).map_err(|e| CliError::Config(e.to_string()))?,
        TileFormat::Portable => write_portable_grid(&grid).into_bytes(),
    };
    write_file(&a.out, &bytes)?;
    let mut r = Report::new();
    r.add("file", a.out.display().to_string())
        .add("posts", json!([grid.n_lat, grid.n_lon]))
        .add("origin_deg", json!([grid.lat0, grid.lon0]))
        .add("spacing_deg", json!([grid.dlat, grid.dlon]))
        .add("voids", grid.void_count());
    r.print(false);
    Ok(())
}
