use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdoa_locus::geodesy::{geodetic_to_ecef, GeodeticCoord};
use fdoa_locus::{cone_with_semi_angle, Attitude, Ellipsoid, VehicleState};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdoa-locus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_cfg(cmd: &str, cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = fixture(cfg);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn json_report(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("report is JSON")
}

fn text_field(o: &Output, key: &str) -> String {
    let s = String::from_utf8_lossy(&o.stdout);
    s.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {s}"))
        .to_string()
}

fn geojson_lines(path: &Path) -> Vec<(String, Vec<[f64; 3]>)> {
    let v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    v["features"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["geometry"]["type"] == "LineString")
        .map(|f| {
            let pts = f["geometry"]["coordinates"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| {
                    let c = c.as_array().unwrap();
                    [c[0].as_f64().unwrap(), c[1].as_f64().unwrap(), c[2].as_f64().unwrap()]
                })
                .collect();
            (f["properties"]["name"].as_str().unwrap().to_string(), pts)
        })
        .collect()
}

#[test]
fn cone_json_and_text_agree() {
    let dir = tempfile::tempdir().unwrap();
    let j = json_report(&run_cfg("cone", "fig5.json", dir.path(), &["--json"]));
    let t = run_cfg("cone", "fig5.json", dir.path(), &[]);
    assert!(t.status.success());
    assert!((j["semi_angle_deg"].as_f64().unwrap() - 26.56).abs() < 1e-9);
    assert_eq!(text_field(&t, "semi_angle_deg").parse::<f64>().unwrap(), j["semi_angle_deg"].as_f64().unwrap());
    assert_eq!(text_field(&t, "kind"), "cone");
}

#[test]
fn semi_angle_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let j = json_report(&run_cfg("cone", "fig5.json", dir.path(), &["--json", "--semi-angle", "40"]));
    assert!((j["semi_angle_deg"].as_f64().unwrap() - 40.0).abs() < 1e-9);
}

#[test]
fn infeasible_measurement_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["uav_infeasible.json", "leos_ex2_infeasible.json"] {
        let o = run_cfg("intersect", cfg, dir.path(), &[]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
    }
}

#[test]
fn pole_writes_two_linestrings() {
    let dir = tempfile::tempdir().unwrap();
    let j = json_report(&run_cfg("intersect", "pole_two_curves.json", dir.path(), &["--json"]));
    assert_eq!(j["topology"], "two_curves");
    let kml = std::fs::read_to_string(dir.path().join("pole_two_curves.kml")).unwrap();
    let doc = roxmltree::Document::parse(&kml).unwrap();
    let lines = doc.descendants().filter(|n| n.has_tag_name("LineString")).count();
    assert_eq!(lines, 2);
    let names: Vec<_> = geojson_lines(&dir.path().join("pole_two_curves.geojson"))
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    assert!(names.iter().any(|n| n.contains("(visible)")));
    assert!(names.iter().any(|n| n.contains("(occluded)")));
}

#[test]
fn empty_intersection_is_success() {
    let dir = tempfile::tempdir().unwrap();
    let j = json_report(&run_cfg("intersect", "axis_away_empty.json", dir.path(), &["--json"]));
    assert_eq!(j["topology"], "empty");
    assert!(j["message"].is_string());
    let kml = std::fs::read_to_string(dir.path().join("axis_away_empty.kml")).unwrap();
    let doc = roxmltree::Document::parse(&kml).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("Placemark")).count(), 0);
    assert!(geojson_lines(&dir.path().join("axis_away_empty.geojson")).is_empty());
}

#[test]
fn fig5_points_lie_on_cone_and_ellipsoid() {
    let dir = tempfile::tempdir().unwrap();
    let j = json_report(&run_cfg("intersect", "fig5.json", dir.path(), &["--json"]));
    assert_eq!(j["visible_topology"], "single_closed_curve");
    let e = Ellipsoid::wgs84();
    let vs = VehicleState::from_attitude(
        GeodeticCoord::new(-34.6462, 138.833, 2000.0).unwrap(),
        50.0,
        Attitude::new(0.0, -30.0, 190.0),
    )
    .unwrap();
    let cone = cone_with_semi_angle(&vs, 26.56, &e).unwrap();
    let lines = geojson_lines(&dir.path().join("fig5.geojson"));
    assert!(!lines.is_empty());
    let mut n = 0;
    for (_, pts) in lines {
        for [lon, lat, h] in pts {
            let p = geodetic_to_ecef(&GeodeticCoord::new(lat, lon, h).unwrap(), &e);
            assert!(cone.normalized_residual(p) < 1e-9);
            assert!(h.abs() < 1e-6, "h = {h}");
            n += 1;
        }
    }
    assert!(n >= 720);
}

#[test]
fn flat_terrain_curve_matches_ellipsoid_curve() {
    let dir = tempfile::tempdir().unwrap();
    let j = json_report(&run_cfg("terrain", "flat_terrain.json", dir.path(), &["--json"]));
    let tr = j["threshold_m"].as_f64().unwrap();
    assert_eq!(j["gaps"], 0);
    assert_eq!(j["terrain_points"], j["visible_points"]);
    // Posts are discrete; the chosen post sits within the threshold of the ray,
    // so along the steep ray it is at most tr/sin(elevation) from the ellipsoid point.
    let max_red = j["max_range_reduction_m"].as_f64().unwrap();
    assert!(max_red.abs() < 2.0 * tr / 30f64.to_radians().sin(), "{max_red}");
}

#[test]
fn ridge_and_plateau_shorten_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let flat = json_report(&run_cfg("terrain", "flat_terrain.json", dir.path(), &["--json"]));
    let ridge = json_report(&run_cfg("terrain", "ridge_terrain.json", dir.path(), &["--json"]));
    let plateau = json_report(&run_cfg("terrain", "plateau_terrain.json", dir.path(), &["--json"]));
    let mean = |v: &Value| v["mean_range_reduction_m"].as_f64().unwrap();
    assert!(mean(&ridge) > mean(&flat) + 100.0);
    // 500 m plateau seen at 60 degrees below the horizon: about 500/sin(60°) shorter.
    assert!((mean(&plateau) - 500.0 / 60f64.to_radians().sin()).abs() < 100.0, "{}", mean(&plateau));
    let kml = std::fs::read_to_string(dir.path().join("ridge_terrain.kml")).unwrap();
    let doc = roxmltree::Document::parse(&kml).unwrap();
    assert!(doc
        .descendants()
        .any(|n| n.has_tag_name("styleUrl") && n.text() == Some("#terrain")));
}

#[test]
fn missing_terrain_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cfg("terrain", "missing_terrain.json", dir.path(), &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_configs_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    for text in [
        "{ not json",
        r#"{ "vehicle": { "lat": 0, "lon": 0, "h": 0, "speed": 1, "attitude": {} }, "bogus": 1, "semi_angle_deg": 10 }"#,
        r#"{ "vehicle": { "lat": 0, "lon": 0, "h": 0, "speed": 1, "attitude": {} } }"#,
        r#"{ "vehicle": { "lat": 0, "lon": 0, "h": 0 }, "semi_angle_deg": 10 }"#,
        r#"{ "vehicle": { "lat": 95, "lon": 0, "h": 0, "speed": 1, "attitude": {} }, "semi_angle_deg": 10 }"#,
        r#"{ "vehicle": { "lat": 0, "lon": 0, "h": 0, "speed": 1, "attitude": {} }, "semi_angle_deg": 10, "sweep": { "n_samples": 4 } }"#,
    ] {
        std::fs::write(&bad, text).unwrap();
        let o = run(&["intersect", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(4), "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(run(&["intersect"]).status.code(), Some(4));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn shift_of_identical_configs_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let b = fixture("fig5.json");
    let j = json_report(&run_cfg("shift", "fig5.json", dir.path(), &["--json", "--config-b", b.to_str().unwrap()]));
    assert_eq!(j["min_shift_m"].as_f64().unwrap(), 0.0);
    assert_eq!(j["max_shift_m"].as_f64().unwrap(), 0.0);
}

#[test]
fn refraction_shift_near_receiver_is_metres() {
    let dir = tempfile::tempdir().unwrap();
    let b = fixture("uav_ex4_air.json");
    let j = json_report(&run_cfg(
        "shift",
        "uav_ex4_vacuum.json",
        dir.path(),
        &["--json", "--samples", "3600", "--config-b", b.to_str().unwrap()],
    ));
    let min = j["min_shift_m"].as_f64().unwrap();
    assert!((1.0..=9.0).contains(&min), "{min}");
    assert!(j["max_shift_m"].as_f64().unwrap() > 100.0 * min);
}

#[test]
fn shift_detail_csv() {
    let dir = tempfile::tempdir().unwrap();
    let b = fixture("uav_ex5_air.json");
    let j = json_report(&run_cfg(
        "shift",
        "uav_ex5_vacuum.json",
        dir.path(),
        &["--json", "--detail", "--visible-only", "--config-b", b.to_str().unwrap()],
    ));
    assert_eq!(j["curves"], "visible");
    let text = std::fs::read_to_string(j["detail"].as_str().unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,lat_deg,lon_deg,h_m,distance_m"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len() as u64, j["points"].as_u64().unwrap());
    for r in rows {
        let cols: Vec<f64> = r.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 5);
        assert!(cols[4] >= j["min_shift_m"].as_f64().unwrap() - 1e-9);
    }
}

#[test]
fn gen_tile_round_trips_through_terrain() {
    let dir = tempfile::tempdir().unwrap();
    for (file, extra) in [("t.dt2", vec!["--level", "2"]), ("t.grd", vec!["--voids", "7"])] {
        let out = dir.path().join(file);
        let mut args = vec!["gen-tile", "--kind", "ridge", "--lat", "-34.6462", "--lon", "138.833", "--half", "30"];
        args.extend(extra);
        args.extend(["--height", "250", "--out", out.to_str().unwrap()]);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(text_field(&o, "posts"), "61 61");
        let cfg = dir.path().join(format!("{file}.json"));
        std::fs::write(
            &cfg,
            format!(
                r#"{{ "vehicle": {{ "lat": -34.6462, "lon": 138.833, "h": 2000, "speed": 50,
                     "attitude": {{ "pitch": -90 }} }}, "semi_angle_deg": 30,
                     "terrain": {{ "path": "{file}", "geoid_n": 0 }} }}"#
            ),
        )
        .unwrap();
        let o = run(&["terrain", "--json", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        let j = json_report(&o);
        assert!(j["terrain_points"].as_u64().unwrap() > 0);
    }
    let o = run(&["gen-tile", "--kind", "flat", "--lat", "0", "--lon", "0", "--level", "3", "--out", "x.grd"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cfg in ["fig5.json", "ridge_terrain.json"] {
        let cmd = if cfg.contains("terrain") { "terrain" } else { "intersect" };
        let oa = run_cfg(cmd, cfg, a.path(), &[]);
        let ob = run_cfg(cmd, cfg, b.path(), &[]);
        assert!(oa.status.success() && ob.status.success());
        let stem = cfg.trim_end_matches(".json");
        for ext in ["kml", "geojson"] {
            let fa = std::fs::read(a.path().join(format!("{stem}.{ext}"))).unwrap();
            let fb = std::fs::read(b.path().join(format!("{stem}.{ext}"))).unwrap();
            assert!(fa == fb, "{stem}.{ext} differs between runs");
        }
    }
}
