//! Randomized invariant checks over the geometry kernels, the spectra,
//! the sweepout family, and the flow. Heavy invariants (eigensolves,
//! flow runs) use fixed seeded sample loops so the runtime is bounded;
//! cheap pointwise ones go through proptest.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use minsurf::ambient::AmbientSpace;
use minsurf::jacobi::{assemble_with, AssembleOptions};
use minsurf::mcf::{profile_distance, sphere_profile, FlowParams, FlowState};
use minsurf::mesh::{great_sphere_mesh, sphere_mesh};
use minsurf::sweepout::{build_optimal_foliation, build_two_param, TwoParamConfig};

const PI: f64 = std::f64::consts::PI;

/// Strictly ordered ellipsoid semiaxes with enough separation that the
/// quadric stays well conditioned.
fn semiaxes_strategy() -> impl Strategy<Value = [f64; 4]> {
    (0.8f64..2.0, 0.15f64..0.8, 0.15f64..0.8, 0.15f64..0.8).prop_map(|(d, g1, g2, g3)| {
        let c = d * (1.0 + g1);
        let b = c * (1.0 + g2);
        let a = b * (1.0 + g3);
        [a, b, c, d]
    })
}

fn space_strategy() -> impl Strategy<Value = AmbientSpace<f64>> {
    prop_oneof![
        Just(AmbientSpace::Euclidean3),
        (0.5f64..3.0).prop_map(|radius| AmbientSpace::RoundSphere3 { radius }),
        semiaxes_strategy().prop_map(|semiaxes| AmbientSpace::Ellipsoid4 { semiaxes }),
    ]
}

/// A point on the space, built from direction angles so it is always
/// exactly on the surface.
fn surface_point(space: &AmbientSpace<f64>, u: f64, v: f64, w: f64) -> [f64; 4] {
    let dir = [
        (u.cos() * v.cos()) * w.cos(),
        (u.sin() * v.cos()) * w.cos(),
        v.sin() * w.cos(),
        w.sin(),
    ];
    match *space {
        AmbientSpace::Euclidean3 => [dir[0], dir[1], dir[2], 0.0],
        AmbientSpace::RoundSphere3 { radius } => {
            [radius * dir[0], radius * dir[1], radius * dir[2], radius * dir[3]]
        }
        AmbientSpace::Ellipsoid4 { semiaxes } => [
            semiaxes[0] * dir[0],
            semiaxes[1] * dir[1],
            semiaxes[2] * dir[2],
            semiaxes[3] * dir[3],
        ],
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// The chart metric is symmetric positive definite wherever the
    /// chart is defined: Sylvester's criterion on the leading minors.
    #[test]
    fn metric_is_positive_definite(
        space in space_strategy(),
        u in -1.4f64..1.4,
        v in -1.2f64..1.2,
        w in -1.2f64..1.2,
    ) {
        let p = surface_point(&space, u, v, w);
        let chart = space.chart_index(p);
        let coords = space.chart_coords(chart, p);
        let g = space.metric_in_chart(chart, coords);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((g[i][j] - g[j][i]).abs() <= 1e-12 * (1.0 + g[i][j].abs()));
            }
        }
        let m1 = g[0][0];
        let m2 = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let m3 = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
            - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
            + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
        prop_assert!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0, "minors {m1} {m2} {m3}");
    }

    /// Geodesics are integrated with their speed as a first integral.
    #[test]
    fn geodesic_speed_is_conserved(
        space in space_strategy(),
        u in -1.4f64..1.4,
        v in -1.2f64..1.2,
        w in -1.2f64..1.2,
        c1 in -1.0f64..1.0,
        c2 in -1.0f64..1.0,
        c3 in -1.0f64..1.0,
        t in 0.2f64..1.5,
    ) {
        prop_assume!(c1.abs() + c2.abs() + c3.abs() > 0.1);
        let p = surface_point(&space, u, v, w);
        let frame = space.orthonormal_frame(p);
        let mut vel = [0.0; 4];
        for k in 0..4 {
            vel[k] = c1 * frame[0][k] + c2 * frame[1][k] + c3 * frame[2][k];
        }
        let speed0 = (c1 * c1 + c2 * c2 + c3 * c3).sqrt();
        let end = space.exp_map(p, vel, t, Some(1e-10)).unwrap();
        let speed1 = minsurf::ambient::vec4::norm(end.velocity);
        prop_assert!(
            (speed1 / speed0 - 1.0).abs() < 1e-6,
            "speed drifted from {speed0} to {speed1}"
        );
        // The endpoint stays on the surface.
        let defect = match space {
            AmbientSpace::Euclidean3 => end.point[3].abs(),
            _ => space.quadric_defect(end.point).abs(),
        };
        prop_assert!(defect < 1e-8, "left the surface by {defect}");
    }

    /// Retraction by excision strictly shrinks leaf area as the excised
    /// fraction grows (the nesting the two-parameter family relies on).
    #[test]
    fn excision_area_decreases_in_the_fraction(
        u in -0.9f64..-0.05,
        phi_lo in 0.05f64..0.9,
        gap in 0.05f64..0.5,
    ) {
        let phi_hi = (phi_lo + gap).min(0.98);
        prop_assume!(phi_hi > phi_lo);
        let space = AmbientSpace::RoundSphere3 { radius: 1.0 };
        let fol = build_optimal_foliation(&space, 2, 65).unwrap();
        let a_lo = fol.retracted_area(u, phi_lo);
        let a_hi = fol.retracted_area(u, phi_hi);
        prop_assert!(a_hi < a_lo, "area grew: {a_lo} -> {a_hi}");
    }
}

/// Chord-mesh area converges to the smooth area at second order in the
/// edge length: each refinement cuts the deficit by about four. Checked
/// over seeded random radii in both model spaces.
#[test]
fn mesh_area_converges_second_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let r: f64 = rng.gen_range(0.5..2.0);
        let exact = 4.0 * PI * r * r;
        let flat = AmbientSpace::Euclidean3;
        let errs: Vec<f64> = (2..5)
            .map(|level| (sphere_mesh([0.0; 3], r, level).area(&flat) - exact).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(
                w[1] < w[0] / 3.0,
                "refinement gained only {:.2}x at r = {r}",
                w[0] / w[1]
            );
        }
        // Same flat mesh read as a great sphere of the round three-sphere.
        let round = AmbientSpace::RoundSphere3 { radius: r };
        let errs: Vec<f64> = (2..5)
            .map(|level| (great_sphere_mesh(r, 3, level).area(&round) - exact).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0] / 3.0, "round refinement stalled at r = {r}");
        }
    }
}

/// Dilating a great sphere scales every stability eigenvalue by `1/s^2`.
#[test]
fn eigenvalues_scale_inverse_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..3 {
        let s: f64 = rng.gen_range(0.5..2.5);
        let space = AmbientSpace::RoundSphere3 { radius: s };
        let surf = great_sphere_mesh::<f64>(s, 3, 3);
        let opts = AssembleOptions { geodesic_certificate: true, ..AssembleOptions::default() };
        let op = assemble_with(&surf, &space, &opts).unwrap();
        let low = op.spectrum(1, None).unwrap().eigenvalues[0];
        let expect = -2.0 / (s * s);
        assert!(
            (low / expect - 1.0).abs() < 0.02,
            "lowest eigenvalue {low} vs {expect} at radius {s}"
        );
    }
}

/// The two-parameter area grid is exactly symmetric for arbitrary window
/// shapes, and its boundary row is the plain foliation.
#[test]
fn family_grid_symmetry_over_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let space = AmbientSpace::RoundSphere3 { radius: 1.0 };
    let fol = build_optimal_foliation(&space, 2, 65).unwrap();
    for _ in 0..4 {
        let cfg = TwoParamConfig {
            mu: rng.gen_range(0.15..0.5),
            tau_bar: rng.gen_range(0.01..0.1),
            grid_n: 33,
            ..TwoParamConfig::default()
        };
        let fam = build_two_param(&fol, &cfg).unwrap();
        let n = fam.grid_len();
        for i in 0..n {
            for j in 0..i {
                assert_eq!(
                    fam.area_at(i, j),
                    fam.area_at(j, i),
                    "asymmetric at ({i}, {j}) with mu = {}",
                    cfg.mu
                );
            }
        }
        for j in 0..n {
            let t = fam.param_grid[j];
            if (t + 1.0).abs() >= 2.0 * fam.eps {
                assert_eq!(fam.area_at(0, j), fol.slice_area(t));
            }
        }
    }
}

/// Disjoint flows stay disjoint: the mutual distance of two spheres
/// evolving in one state never drops below its starting value.
#[test]
fn disjoint_flows_avoid_each_other() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..2 {
        let r1: f64 = rng.gen_range(0.3..0.5);
        let r2: f64 = rng.gen_range(0.3..0.5);
        let gap: f64 = rng.gen_range(0.3..0.8);
        let c1 = -(r1 + 0.5 * gap);
        let c2 = r2 + 0.5 * gap;
        let mut params = FlowParams::<f64>::default();
        params.record_slices = false;
        let mut state = FlowState::new(
            vec![sphere_profile(c1, r1, 0.02), sphere_profile(c2, r2, 0.02)],
            params,
        )
        .unwrap();
        let d0 = {
            let c = state.components();
            profile_distance(c[0], c[1])
        };
        let mut last = d0;
        while !state.extinct {
            state.step().unwrap();
            let comps = state.components();
            if comps.len() < 2 {
                break;
            }
            let d = profile_distance(comps[0], comps[1]);
            assert!(
                d >= last - 1e-9,
                "distance shrank from {last:.6} to {d:.6} at t = {}",
                state.time
            );
            last = d;
        }
        assert!(last >= d0 - 1e-9, "final distance {last} below start {d0}");
    }
}
