use std::time::Instant;

use fdoa_locus::cone::{axis_direction, doppler_frequency, EarthRotation};
use fdoa_locus::error_analysis::Layer;
use fdoa_locus::geodesy::{ecef_to_geodetic_or_meridian, geodetic_to_ecef};
use fdoa_locus::io::dted::DtedLevel;
use fdoa_locus::io::synth::{flat, ridge, TileSpec};
use fdoa_locus::io::{
    read_dted, read_portable_grid, write_dted, write_geojson, write_kml, write_portable_grid, CurveDocument,
    CurveStyle, LabeledPolyline, PointSet,
};
use fdoa_locus::*;
use proptest::prelude::*;
use serde_json::Value;

const C: f64 = 299_792_458.0;

fn lat() -> impl Strategy<Value = f64> {
    -90.0f64..=90.0
}

fn lon() -> impl Strategy<Value = f64> {
    -180.0f64..180.0
}

fn unit() -> impl Strategy<Value = Vec3<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter_map("non-zero", |(x, y, z)| Vec3::new(x, y, z).normalized())
}

fn level() -> impl Strategy<Value = DtedLevel> {
    prop_oneof![Just(DtedLevel::Level0), Just(DtedLevel::Level1), Just(DtedLevel::Level2)]
}

/// Random tile with voids at a legal DTED spacing.
fn tile() -> impl Strategy<Value = (DtedLevel, TerrainGrid)> {
    (level(), -80i64..80, -180i64..179, 2usize..25, 2usize..25, 0usize..6).prop_flat_map(
        |(lvl, la, lo, n_lat, n_lon, mult)| {
            let iv = lvl.lat_interval();
            let lon_iv = lvl.lon_intervals().nth(mult).unwrap();
            let spec = TileSpec {
                lat0: la * 36_000,
                lon0: lo * 36_000,
                lat_interval: iv,
                lon_interval: lon_iv,
                n_lat,
                n_lon,
            };
            let cells = proptest::collection::vec(proptest::option::weighted(0.9, -12_000i32..=32_766), n_lat * n_lon);
            cells.prop_map(move |h| {
                let mut g = flat(&spec, 0.0);
                g.heights = h.into_iter().map(|v| v.map(f64::from)).collect();
                (lvl, g)
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn geodetic_round_trip(la in lat(), lo in lon(), h in -100.0f64..500_000.0) {
        let e = Ellipsoid::wgs84();
        let g = GeodeticCoord::new(la, lo, h).unwrap();
        let p = geodetic_to_ecef(&g, &e);
        let back = ecef_to_geodetic_or_meridian(p, &e);
        prop_assert!(geodetic_to_ecef(&back, &e).distance(p) < 1e-6);
        prop_assert!((back.h - h).abs() < 1e-6);
    }

    #[test]
    fn single_precision_tracks_double(la in -80.0f64..80.0, lo in lon(), h in 0.0f64..10_000.0) {
        let e64 = Ellipsoid::<f64>::wgs84();
        let e32 = Ellipsoid::<f32>::wgs84();
        let p64 = geodetic_to_ecef(&GeodeticCoord::new(la, lo, h).unwrap(), &e64);
        let p32 = geodetic_to_ecef(&GeodeticCoord::new(la as f32, lo as f32, h as f32).unwrap(), &e32);
        prop_assert!(p32.cast::<f64>().distance(p64) < 5.0);
    }

    #[test]
    fn coriolis_term_does_not_change_frequency(
        r in unit(), rh in 6.4e6f64..7.5e6,
        p in unit(), ph in 6.35e6f64..6.4e6,
        v in unit(), speed in 0.0f64..8_000.0,
        f0 in 1.0e8f64..1.0e10,
    ) {
        let sep = p * ph - r * rh;
        prop_assume!(sep.norm() > 1.0);
        let rot = EarthRotation::default();
        let with = doppler_frequency(v * speed, sep, f0, true, &rot);
        let without = doppler_frequency(v * speed, sep, f0, false, &rot);
        // at most one unit in the last place of f0
        prop_assert!((with - without).abs() <= f0 * f64::EPSILON);
    }

    #[test]
    fn semi_angle_is_scale_invariant(shift in 0.1f64..49.0, k in 0.01f64..100.0) {
        let a = semi_angle(&DopplerMeasurement::from_shift(C, shift).unwrap(), 50.0, C).unwrap();
        let b = semi_angle(&DopplerMeasurement::from_shift(C * k, shift * k).unwrap(), 50.0, C).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn axis_flips_with_shift_sign(v in unit(), shift in 1e-3f64..1e4) {
        let pos = axis_direction(v, shift).unwrap();
        let neg = axis_direction(v, -shift).unwrap();
        prop_assert_eq!(pos, -neg);
    }

    #[test]
    fn dted_round_trip((lvl, g) in tile()) {
        let bytes = write_dted(&g, lvl).unwrap();
        prop_assert_eq!(read_dted(&bytes).unwrap(), g);
    }

    #[test]
    fn portable_round_trip((_, mut g) in tile(), frac in 0.0f64..1.0) {
        // non-integer heights too
        for h in g.heights.iter_mut().flatten() {
            *h += frac;
        }
        let text = write_portable_grid(&g);
        prop_assert_eq!(read_portable_grid(&text).unwrap().grid, g);
    }

    #[test]
    fn lorentz_factor_is_monotone(v in 0.0f64..2.9e8, dv in 1.0f64..1e6) {
        let a = lorentz_factor(v).unwrap();
        let b = lorentz_factor((v + dv).min(2.99e8)).unwrap();
        prop_assert!(b.rho_minus_one >= a.rho_minus_one);
        prop_assert!(a.rho_minus_one >= 0.0);
    }

    #[test]
    fn snell_displacement_vanishes_only_for_equal_indices(
        theta in 0.05f64..1.3,
        n_low in 1.0f64..1.001,
        n_high in 1.0f64..1.001,
        top in 5_000.0f64..40_000.0,
    ) {
        let atm = AtmosphereModel::TwoLayer {
            layers: vec![Layer { top, n: n_low }, Layer { top: 50_000.0, n: n_high }],
            n_above: n_high,
        };
        let r = snell_two_layer_displacement(theta, &atm, 200_000.0).unwrap();
        if n_low == n_high {
            prop_assert_eq!(r.displacement, 0.0);
        } else {
            prop_assert!(r.displacement.abs() > 0.0);
        }
        for x in &r.trace {
            prop_assert!(x.invariant_error() <= 1e-12);
        }
    }

    #[test]
    fn curve_shift_min_is_symmetric(
        a in proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4, -1e4f64..1e4), 2..30),
        b in proptest::collection::vec((-1e4f64..1e4, -1e4f64..1e4, -1e4f64..1e4), 2..30),
    ) {
        let line = |v: &[(f64, f64, f64)]| v.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect::<Vec<_>>();
        let (a, b) = (line(&a), line(&b));
        let longest = |l: &[Vec3<f64>]| l.windows(2).map(|w| w[0].distance(w[1])).fold(0.0, f64::max);
        let ab = curve_shift(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap();
        let ba = curve_shift(std::slice::from_ref(&b), std::slice::from_ref(&a)).unwrap();
        prop_assert!((ab.min_shift - ba.min_shift).abs() <= longest(&a).max(longest(&b)));
        prop_assert!(ab.max_shift >= ab.min_shift);
    }

    #[test]
    fn kml_and_geojson_parse_back(
        pts in proptest::collection::vec((lat(), lon(), -500.0f64..1e6), 1..40),
        name in "[a-zA-Z0-9 <>&\"']{0,12}",
    ) {
        let pts: Vec<_> = pts.into_iter().map(|(a, o, h)| GeodeticCoord::new(a, o, h).unwrap()).collect();
        let mut doc = CurveDocument::new(name.clone());
        doc.polylines.push(LabeledPolyline { name: name.clone(), style: CurveStyle::Ellipsoid, points: pts.clone() });
        doc.point_sets.push(PointSet { name, style: CurveStyle::Terrain, points: pts.clone() });

        let kml = String::from_utf8(write_kml(&doc)).unwrap();
        let xml = roxmltree::Document::parse(&kml).unwrap();
        let coords: Vec<&str> = xml
            .descendants()
            .filter(|n| n.has_tag_name("coordinates"))
            .filter_map(|n| n.text())
            .collect();
        let line: Vec<[f64; 3]> = coords[0]
            .split_whitespace()
            .map(|t| {
                let v: Vec<f64> = t.split(',').map(|x| x.parse().unwrap()).collect();
                [v[0], v[1], v[2]]
            })
            .collect();
        prop_assert_eq!(line.len(), pts.len());
        prop_assert_eq!(coords.len(), 1 + pts.len());
        for (c, p) in line.iter().zip(&pts) {
            prop_assert!((c[0] - p.lon).abs() < 1e-9 && (c[1] - p.lat).abs() < 1e-9);
        }

        let gj: Value = serde_json::from_slice(&write_geojson(&doc)).unwrap();
        let feats = gj["features"].as_array().unwrap();
        prop_assert_eq!(feats.len(), 2);
        for f in feats {
            let cs = f["geometry"]["coordinates"].as_array().unwrap();
            for (c, p) in cs.iter().zip(&pts) {
                prop_assert!((c[0].as_f64().unwrap() - p.lon).abs() < 1e-9);
                prop_assert!((c[1].as_f64().unwrap() - p.lat).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn relativistic_delta_scales_quadratically() {
    let state = |v: f64| {
        VehicleState::from_attitude(GeodeticCoord::new(0.0, 0.0, 200_000.0).unwrap(), v, Attitude::new(0.0, 0.0, 0.0))
            .unwrap()
    };
    // same cone angle at both speeds
    let m = |v: f64| DopplerMeasurement::from_shift(C, v * 45f64.to_radians().cos()).unwrap();
    let d1 = relativistic_semi_angle_delta(&state(7800.0), &m(7800.0)).unwrap();
    let d2 = relativistic_semi_angle_delta(&state(15600.0), &m(15600.0)).unwrap();
    let ratio = d2 / d1;
    assert!((ratio - 4.0).abs() <= 0.4, "{ratio}");
}

#[test]
fn portable_full_tile_round_trip_is_fast() {
    let spec = TileSpec::centered(DtedLevel::Level1, -34.5, 138.5, 600);
    let g = ridge(&spec, 700.0, 5_000.0, &Ellipsoid::wgs84());
    assert_eq!((g.n_lat, g.n_lon), (1201, 1201));
    let t0 = Instant::now();
    let text = write_portable_grid(&g);
    let back = read_portable_grid(&text).unwrap().grid;
    let elapsed = t0.elapsed().as_secs_f64();
    assert_eq!(back, g);
    assert!(elapsed < 1.0, "{elapsed} s");
}

#[test]
fn pipeline_from_vehicle_to_documents() {
    let e = Ellipsoid::wgs84();
    let vs = VehicleState::from_attitude(
        GeodeticCoord::new(-34.6462, 138.833, 2000.0).unwrap(),
        50.0,
        Attitude::new(0.0, -30.0, 190.0),
    )
    .unwrap();
    let m = DopplerMeasurement::new(C + 43.3, C).unwrap();
    let cone = build_cone(&vs, &m, &e, None).unwrap();
    let curve = intersect_cone_ellipsoid(&cone, &e, 720).unwrap();
    assert!(!curve.points_near.is_empty());

    let spec = TileSpec::centered(DtedLevel::Level1, -34.6462, 138.833, 80);
    let grid = read_dted(&write_dted(&ridge(&spec, 400.0, 1_500.0, &e), DtedLevel::Level1).unwrap()).unwrap();
    let posts = grid_to_ecef_posts(&grid, &e).unwrap();
    let cfg = TerrainSearchConfig::for_grid(&grid, &e);
    let terrain = cone_terrain_curve(&curve, cone.apex, &posts, &cfg, &e);
    assert!(!terrain.is_empty());
    for p in &terrain.points {
        assert!(p.range <= p.ellipsoid_range * 1.05);
        assert!(p.ray_distance <= cfg.threshold);
    }
    // the tile covers only part of the curve
    assert!(terrain.points.len() < curve.visible_points().len());
    assert!(!terrain.gaps.is_empty());

    let mut doc = CurveDocument::new("pipeline");
    for (k, line) in terrain.polylines().iter().enumerate() {
        doc.polylines.push(LabeledPolyline {
            name: format!("terrain {k}"),
            style: CurveStyle::Terrain,
            points: line.iter().map(|&p| ecef_to_geodetic_or_meridian(p, &e)).collect(),
        });
    }
    let kml = String::from_utf8(write_kml(&doc)).unwrap();
    let xml = roxmltree::Document::parse(&kml).unwrap();
    assert_eq!(xml.descendants().filter(|n| n.has_tag_name("LineString")).count(), terrain.runs.len());
}
