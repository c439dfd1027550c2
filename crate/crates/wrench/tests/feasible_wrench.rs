use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ropeclimb_core::{Scenario, Vec3};
use ropeclimb_wrench::fwp::*;
use ropeclimb_wrench::polytope::directional_margin;

fn grid5(x: f64) -> Vec<Vec3> {
    GridSpec { x, y_min: -1.0, y_max: 6.0, ny: 5, z_min: -2.0, z_max: -10.0, nz: 5 }.points()
}

#[test]
fn membership_matches_force_lp_on_grid() {
    let s = Scenario::landing();
    let balance = -gravitational_wrench(&s);
    let mut feasible = 0;
    for p in grid5(1.5) {
        let c = contact_geometry(&p, &s);
        let by_h = build_fwp(&c).unwrap().facets.contains(&balance.to_vector());
        let by_lp = force_existence(&c, &balance, Limits::On).unwrap();
        assert_eq!(by_h, by_lp, "at {p:?}");
        feasible += by_h as usize;
    }
    // The grid straddles the anchors, so both verdicts occur.
    assert!(feasible > 0 && feasible < 25);
}

#[test]
fn random_wrenches_match_force_lp() {
    let s = Scenario::landing();
    let c = contact_geometry(&Vec3::new(1.5, 2.5, -6.5), &s);
    let fwp = build_fwp(&c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut inside = 0;
    for _ in 0..200 {
        let w = DVector::from_fn(6, |i, _| if i < 3 { rng.random_range(-400.0..600.0) } else { rng.random_range(-150.0..150.0) });
        if fwp.facets.max_violation(&w).abs() < 1e-6 {
            continue;
        }
        let by_h = fwp.facets.contains(&w);
        assert_eq!(by_h, force_existence(&c, &Wrench::from_vector(&w), Limits::On).unwrap(), "{w:?}");
        inside += by_h as usize;
    }
    assert!(inside > 0);
}

#[test]
fn margins_match_bisection_on_grid() {
    let s = Scenario::landing();
    let w0 = (-gravitational_wrench(&s)).to_vector();
    let dirs = [axis_direction(0, true), axis_direction(2, true), axis_direction(4, true)];
    for p in grid5(1.5) {
        let fwp = build_fwp(&contact_geometry(&p, &s)).unwrap();
        for v in &dirs {
            let m = directional_margin(&fwp.facets, &w0, v).unwrap();
            if !fwp.facets.contains(&w0) {
                assert_eq!(m.gamma, 0.0);
                continue;
            }
            let (mut lo, mut hi) = (0.0, 1e4);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if fwp.facets.contains(&(&w0 + v * mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // Bisection uses the closed-set tolerance, so allow for it.
            assert!((m.gamma - lo).abs() <= 1e-6 + 1e-7, "{p:?}: {} vs {lo}", m.gamma);
        }
    }
}

#[test]
fn vertical_margin_is_two_valued() {
    let s = Scenario::landing();
    let grid = GridSpec { x: 1.5, y_min: 0.0, y_max: 5.0, ny: 8, z_min: -2.0, z_max: -10.0, nz: 8 };
    let map = margin_heatmap(&grid, &axis_direction(2, true), &s).unwrap();
    let weight = s.mass * 9.81;
    for c in &map.cells {
        assert!(c.error.is_none());
        if c.feasible {
            assert!((c.gamma - weight).abs() <= 0.01 * weight, "{c:?}");
        } else {
            assert_eq!(c.gamma, 0.0);
        }
    }
    assert!(map.cells.iter().any(|c| c.feasible) && map.cells.iter().any(|c| !c.feasible));
}

#[test]
fn single_cell_grid_matches_direct_call() {
    let s = Scenario::landing().with_wall_inclination(0.2);
    let grid = GridSpec { x: 1.7, y_min: 2.5, y_max: 2.5, ny: 1, z_min: -5.0, z_max: -5.0, nz: 1 };
    let v = axis_direction(0, true);
    let map = margin_heatmap(&grid, &v, &s).unwrap();
    assert_eq!(map.cells.len(), 1);
    assert_eq!(map.cells[0].gamma, margin_at(&Vec3::new(1.7, 2.5, -5.0), &v, &s).unwrap().gamma);
}

#[test]
fn push_margin_shrinks_with_depth() {
    let s = Scenario::landing().with_wall_inclination(0.2);
    let v = axis_direction(0, true);
    let near = margin_at(&Vec3::new(1.7, 2.5, -4.0), &v, &s).unwrap().gamma;
    let far = margin_at(&Vec3::new(1.7, 2.5, -8.0), &v, &s).unwrap().gamma;
    assert!(near >= far);
}

#[test]
fn doubling_limits_scales_vertices() {
    let s = Scenario::landing();
    let p = Vec3::new(1.5, 2.0, -6.0);
    let c = contact_geometry(&p, &s);
    let c2 = ContactSet { f_leg_max: 2.0 * c.f_leg_max, f_r_max: 2.0 * c.f_r_max, ..c.clone() };
    let (a, b) = (build_fwp(&c).unwrap(), build_fwp(&c2).unwrap());
    assert_eq!(a.vertices.len(), b.vertices.len());
    for (x, y) in a.vertices.vertices.iter().zip(&b.vertices.vertices) {
        assert!((x * 2.0 - y).amax() <= 1e-9 * y.amax().max(1.0));
    }
    let w0 = (-gravitational_wrench(&s)).to_vector();
    for axis in 0..6 {
        for neg in [false, true] {
            let v = axis_direction(axis, neg);
            let ga = directional_margin(&a.facets, &w0, &v).unwrap().gamma;
            let gb = directional_margin(&b.facets, &w0, &v).unwrap().gamma;
            assert!(gb >= ga - 1e-9);
        }
    }
}

#[test]
fn mirrored_positions_have_mirrored_margins() {
    let s = Scenario::landing();
    let mid = 0.5 * (s.anchor_left.y + s.anchor_right.y);
    let (a, b) = (Vec3::new(1.5, mid - 1.2, -5.0), Vec3::new(1.5, mid + 1.2, -5.0));
    // Mirroring Y flips f_y, m_x and m_z.
    for (axis, flips) in [(0, false), (1, true), (2, false), (3, true), (4, false), (5, true)] {
        let ga = margin_at(&a, &axis_direction(axis, false), &s).unwrap().gamma;
        let gb = margin_at(&b, &axis_direction(axis, flips), &s).unwrap().gamma;
        assert!((ga - gb).abs() <= 1e-6 * ga.max(1.0), "axis {axis}: {ga} vs {gb}");
    }
}

#[test]
fn friction_never_shrinks_the_feasible_region() {
    let mut prev: Option<Vec<bool>> = None;
    for mu in [0.4, 0.6, 0.8] {
        let s = Scenario { mu, ..Scenario::landing() };
        let grid = GridSpec { x: 1.5, y_min: 0.0, y_max: 5.0, ny: 6, z_min: -2.0, z_max: -10.0, nz: 6 };
        let feasible: Vec<bool> = grid.points().iter().map(|p| feasibility(p, &s, Limits::Off).unwrap()).collect();
        if let Some(before) = &prev {
            assert!(before.iter().zip(&feasible).all(|(a, b)| !a || *b));
        }
        prev = Some(feasible);
    }
}

#[test]
fn limits_off_region_contains_limits_on_region() {
    let s = Scenario::landing();
    for p in grid5(1.5) {
        if feasibility(&p, &s, Limits::On).unwrap() {
            assert!(feasibility(&p, &s, Limits::Off).unwrap());
        }
    }
}
