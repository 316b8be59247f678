use approx::assert_abs_diff_eq;
use finsler_flow::geometry::*;
use finsler_flow::reference::*;
use finsler_flow::sphere_bundle::*;
use std::sync::Arc;
use std::time::Instant;

fn grid(n: usize, lo: f64, hi: f64, boundary: BoundaryMode, ntheta: usize) -> Arc<SphereBundleGrid> {
    Arc::new(SphereBundleGrid::new(GridSpec { nx1: n, nx2: n, bounds: [[lo, hi], [lo, hi]], boundary, ntheta }).unwrap())
}

#[test]
fn polar_extend_examples() {
    let g = grid(9, -1.0, 1.0, BoundaryMode::Pinned, 16);
    let ones = FieldOnSM::constant(g.clone(), 1.0);
    assert_abs_diff_eq!(ones.polar_extend(ChartPoint::new(0.1, 0.2), TangentVector::new(3.0, 4.0)).unwrap(), 5.0, epsilon = 1e-14);
    let e = FieldOnSM::sample(g.clone(), entry("euclidean").as_ref()).unwrap();
    for it in 0..16 {
        let y = g.direction(it).scaled(2.5);
        assert_abs_diff_eq!(e.polar_extend(g.point(3, 4), y).unwrap(), 2.5 * e.get(3, 4, it), epsilon = 1e-14);
    }
    let s = FieldOnSM::sample(g.clone(), entry("round_sphere").as_ref()).unwrap();
    assert_abs_diff_eq!(s.polar_extend(ChartPoint::new(0.0, 0.0), TangentVector::new(2.0, 0.0)).unwrap(), 4.0, epsilon = 1e-8);
    // homogeneity at an arbitrary point
    let x = ChartPoint::new(0.13, -0.41);
    let y = TangentVector::new(0.3, 0.77);
    let a = s.polar_extend(x, y).unwrap();
    for l in [0.5, 2.0, 7.0] {
        assert_abs_diff_eq!(s.polar_extend(x, y.scaled(l)).unwrap(), l * a, epsilon = 1e-13 * l);
    }
    assert!(s.polar_extend(ChartPoint::new(1.5, 0.0), y).is_err());
}

#[test]
fn theta_interpolation_converges_at_cubic_rate() {
    // round_sphere F is θ-independent at fixed x (zero interpolation error), so
    // the refinement check uses the θ-dependent randers field instead.
    let s = catalog("randers_flat", &params(&[("b", 0.5)])).unwrap();
    let err = |nt: usize| {
        let g = grid(9, -1.0, 1.0, BoundaryMode::Pinned, nt);
        let f = FieldOnSM::sample(g.clone(), s.as_ref()).unwrap();
        let x = g.point(4, 4);
        (0..97)
            .map(|k| {
                let th = 0.0123 + k as f64 * 0.0647;
                let y = TangentVector::from_angle(th);
                (f.polar_extend(x, y).unwrap() - eval_f(s.as_ref(), x, y).unwrap()).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(32), err(64));
    assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
}

#[test]
fn grid_jets_reproduce_sphere_curvature() {
    let g = grid(33, -1.0, 1.0, BoundaryMode::Pinned, 64);
    let phi = FieldOnSM::sample(g.clone(), entry("round_sphere").as_ref()).unwrap();
    let s = GridStructure::from_field(&phi).unwrap();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i1 in 0..33 {
        for i2 in 0..33 {
            if !g.is_interior(i1, i2) {
                continue;
            }
            for it in (0..64).step_by(5) {
                let r = ricci_scalar(&s, g.point(i1, i2), g.direction(it)).unwrap();
                worst = worst.max((r - 1.0).abs());
                count += 1;
            }
        }
    }
    let per = t0.elapsed().as_secs_f64() / count as f64;
    eprintln!("grid-FD worst |Ric-1| = {worst:e}, {:.2} µs per node", per * 1e6);
    assert!(worst < 5e-3);
    // jets are only available at nodes
    assert!(matches!(
        s.f2_jet(ChartPoint::new(0.01, 0.0), TangentVector::new(1.0, 0.0)),
        Err(finsler_flow::Error::OffGrid { .. })
    ));
    // but F can be evaluated anywhere
    let f = eval_f(&s, ChartPoint::new(0.01, 0.02), TangentVector::new(1.0, 0.0)).unwrap();
    let exact = eval_f(entry("round_sphere").as_ref(), ChartPoint::new(0.01, 0.02), TangentVector::new(1.0, 0.0)).unwrap();
    // cubic x-interpolation with Δx = 1/16
    assert!((f - exact).abs() < 1e-4, "{f} vs {exact}");
}

#[test]
fn grid_jets_of_finsler_field_match_analytic() {
    let s = catalog("conformal_randers", &params(&[("b", 0.3)])).unwrap();
    let g = grid(17, -0.5, 0.5, BoundaryMode::Pinned, 64);
    let phi = FieldOnSM::sample(g.clone(), s.as_ref()).unwrap();
    let gs = GridStructure::from_field(&phi).unwrap();
    for (i1, i2, it) in [(8, 8, 0), (5, 9, 13), (3, 12, 40)] {
        let x = g.point(i1, i2);
        let y = g.direction(it);
        let a = geometry_jet(s.as_ref(), x, y).unwrap();
        let b = geometry_jet(&gs, x, y).unwrap();
        assert_abs_diff_eq!(a.f, b.f, epsilon = 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.g[i][j] - b.g[i][j]).abs() < 1e-5);
            }
        }
        assert!((a.ricci - b.ricci).abs() < 5e-3, "{} vs {}", a.ricci, b.ricci);
        // C·y = 0 on the grid path
        for i in 0..2 {
            for j in 0..2 {
                let cy: f64 = (0..2).map(|k| b.cartan[i][j][k] * b.y.arr()[k]).sum();
                assert!(cy.abs() < 1e-6, "{cy}");
            }
        }
    }
}

#[test]
fn berwald_frame_examples() {
    let e = berwald_frame(entry("euclidean").as_ref(), ChartPoint::new(0.0, 0.0), TangentVector::new(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(e.e[0][0], 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(e.e[0][1], -1.0, epsilon = 1e-15);
    assert_eq!(e.e[1], [1.0, 0.0]);
    let s = berwald_frame(entry("round_sphere").as_ref(), ChartPoint::new(0.0, 0.0), TangentVector::new(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(s.e[0][1], -0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(s.e[1][0], 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(s.gram()[0][0], 1.0, epsilon = 1e-14);
    let r = catalog("conformal_randers", &params(&[("b", 0.4)])).unwrap();
    let f = berwald_frame(r.as_ref(), ChartPoint::new(0.3, -0.2), TangentVector::new(0.4, 1.1)).unwrap();
    let gram = f.gram();
    let dual = f.duality();
    for a in 0..2 {
        for b in 0..2 {
            assert_abs_diff_eq!(gram[a][b], if a == b { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }
    for a in 0..3 {
        for b in 0..3 {
            assert_abs_diff_eq!(dual[a][b], if a == b { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }
    // ê₃ is vertical; ê₁, ê₂ have y-parts −N^i_j u^j_a
    assert_eq!(&f.ehat[2][..2], &[0.0, 0.0]);
    for a in 0..2 {
        for i in 0..2 {
            let expect = -(f.nonlinear[i][0] * f.e[a][0] + f.nonlinear[i][1] * f.e[a][1]);
            assert_abs_diff_eq!(f.ehat[a][2 + i], expect, epsilon = 1e-15);
        }
    }
}

#[test]
fn ellipticity_monitor_examples() {
    let g = grid(33, -1.0, 1.0, BoundaryMode::Pinned, 16);
    let e = metric_field_spectral(&FieldOnSM::sample(g.clone(), entry("euclidean").as_ref()).unwrap());
    assert_abs_diff_eq!(ellipticity_monitor(&e), 1.0, epsilon = 1e-12);
    let s = metric_field_spectral(&FieldOnSM::sample(g.clone(), entry("round_sphere").as_ref()).unwrap());
    assert_abs_diff_eq!(ellipticity_monitor(&s), 4.0 / 9.0, epsilon = 1e-12);
    let via_jets = metric_field(&g, entry("round_sphere").as_ref()).unwrap();
    assert_abs_diff_eq!(ellipticity_monitor(&via_jets), 4.0 / 9.0, epsilon = 1e-12);
    let mut bad = e.clone();
    bad.g[123][0][0] = -1.0;
    assert!(ellipticity_monitor(&bad) < 0.0);
}

#[test]
fn integrability_examples() {
    let g = grid(9, -1.0, 1.0, BoundaryMode::Pinned, 64);
    let sphere = metric_field_spectral(&FieldOnSM::sample(g.clone(), entry("round_sphere").as_ref()).unwrap());
    assert!(integrability_residual(&sphere) < 1e-10);
    let randers = catalog("randers_flat", &params(&[("b", 0.5)])).unwrap();
    let r = integrability_residual(&metric_field_spectral(&FieldOnSM::sample(g.clone(), randers.as_ref()).unwrap()));
    assert!(r < 1e-6, "{r}");
    // g_11 = 1 + ½(y²)²/|y|², g_12 = 0, g_22 = 1: not the Hessian of anything
    let bad = MetricField {
        grid: g.clone(),
        g: (0..g.len())
            .map(|k| {
                let (_, _, it) = g.unflatten(k);
                let s = g.direction(it).y2;
                [[1.0 + 0.5 * s * s, 0.0], [0.0, 1.0]]
            })
            .collect(),
    };
    assert!(integrability_residual(&bad) >= 1e-2);
}
