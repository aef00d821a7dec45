use furtouch::acoustic::{self, ArrayGeometry, PlaneSpec};
use furtouch::Vec3;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn focus_is_maximum_of_focal_plane(x in -0.02f64..0.02, y in -0.02f64..0.02, z in 0.10f64..0.30) {
        let geom = ArrayGeometry::default();
        let focus = Vec3::new(x, y, z);
        let sol = acoustic::solve_focus(&geom, &focus).unwrap();
        let at = acoustic::pressure_at(&geom, &sol, &focus).unwrap().norm();
        let grid = acoustic::field_grid(&geom, &sol, &PlaneSpec::horizontal(focus, 0.02), 41, 41).unwrap();
        for (i, v) in grid.values.iter().enumerate() {
            if i != 20 * 41 + 20 {
                prop_assert!(at > *v, "cell {i}: {v} >= {at}");
            }
        }
    }

    #[test]
    fn axial_peak_on_array_side_of_focus(z in 0.10f64..0.30) {
        // finite aperture pulls the on-axis maximum toward the array
        let geom = ArrayGeometry::default();
        let focus = Vec3::new(0.0, 0.0, z);
        let sol = acoustic::solve_focus(&geom, &focus).unwrap();
        let (best_z, _) = (0..=700)
            .map(|i| z - 0.05 + 0.07 * i as f64 / 700.0)
            .map(|zz| (zz, acoustic::pressure_at(&geom, &sol, &Vec3::new(0.0, 0.0, zz)).unwrap().norm()))
            .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        prop_assert!(best_z <= z + 1e-12 && best_z > z - 0.04, "z={z} best={best_z}");
    }

    #[test]
    fn pressure_linear_in_amplitude(s in 0.0f64..5.0, r in prop::array::uniform3(-0.1f64..0.1), z in 0.05f64..0.4) {
        let geom = ArrayGeometry::default();
        let sol = acoustic::solve_focus(&geom, &Vec3::new(0.0, 0.0, 0.2)).unwrap();
        let p = Vec3::new(r[0], r[1], z);
        let a = acoustic::pressure_at(&geom, &sol, &p).unwrap().norm();
        let b = acoustic::pressure_at(&geom, &sol.scaled(s), &p).unwrap().norm();
        prop_assert!((b - s * a).abs() <= 1e-12 * (s * a).max(1e-300));
    }

    #[test]
    fn single_element_decays_as_inverse_distance(dir in prop::array::uniform3(-1.0f64..1.0), d1 in 0.01f64..1.0, d2 in 0.01f64..1.0) {
        let dir = Vec3::from(dir);
        prop_assume!(dir.norm() > 0.1);
        let dir = dir.normalize();
        let geom = ArrayGeometry { positions: vec![Vec3::new(0.01, -0.02, 0.0)], ..ArrayGeometry::default() };
        let sol = acoustic::solve_focus(&geom, &Vec3::new(0.0, 0.0, 0.2)).unwrap();
        let at = |d: f64| acoustic::pressure_at(&geom, &sol, &(geom.positions[0] + dir * d)).unwrap().norm() * d;
        prop_assert!((at(d1) - at(d2)).abs() < 1e-12);
    }
}

#[test]
fn focus_on_transducer_is_degenerate() {
    let geom = ArrayGeometry::default();
    let on = geom.positions[17];
    assert!(matches!(
        acoustic::solve_focus(&geom, &on),
        Err(furtouch::Error::DegenerateDistance { index: 17, .. })
    ));
}

#[test]
fn field_grid_is_thread_count_independent() {
    let geom = ArrayGeometry::default();
    let focus = Vec3::new(0.005, 0.0, 0.15);
    let sol = acoustic::solve_focus(&geom, &focus).unwrap();
    let plane = PlaneSpec::vertical_xz(focus, 0.03);
    let a = acoustic::field_grid(&geom, &sol, &plane, 31, 31).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| acoustic::field_grid(&geom, &sol, &plane, 31, 31).unwrap());
    assert_eq!(a, b);
}
