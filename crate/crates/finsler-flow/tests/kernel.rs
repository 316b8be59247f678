use approx::assert_abs_diff_eq;
use finsler_flow::geometry::*;
use finsler_flow::reference::*;
use finsler_flow::Error;

fn p(x1: f64, x2: f64) -> ChartPoint {
    ChartPoint::new(x1, x2)
}

fn v(y1: f64, y2: f64) -> TangentVector {
    TangentVector::new(y1, y2)
}

fn max3(t: &Tensor3) -> f64 {
    t.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn eval_f_examples() {
    assert_abs_diff_eq!(eval_f(entry("euclidean").as_ref(), p(0.0, 0.0), v(3.0, 4.0)).unwrap(), 5.0, epsilon = 1e-14);
    let randers = catalog("randers_flat", &params(&[("b", 0.5)])).unwrap();
    assert_abs_diff_eq!(eval_f(randers.as_ref(), p(0.0, 0.0), v(1.0, 0.0)).unwrap(), 1.5, epsilon = 1e-14);
    assert_abs_diff_eq!(eval_f(entry("round_sphere").as_ref(), p(0.0, 0.0), v(1.0, 0.0)).unwrap(), 2.0, epsilon = 1e-14);
    assert_eq!(eval_f(entry("euclidean").as_ref(), p(0.0, 0.0), v(0.0, 0.0)), Err(Error::ZeroVector));
}

#[test]
fn metric_tensor_examples() {
    let g = metric_tensor(entry("euclidean").as_ref(), p(0.3, -2.0), v(0.2, 0.9)).unwrap();
    assert_eq!(g, [[1.0, 0.0], [0.0, 1.0]]);
    let g = metric_tensor(entry("round_sphere").as_ref(), p(0.0, 0.0), v(-0.3, 0.7)).unwrap();
    assert_abs_diff_eq!(g[0][0], 4.0, epsilon = 1e-13);
    assert_abs_diff_eq!(g[1][1], 4.0, epsilon = 1e-13);
    assert_abs_diff_eq!(g[0][1], 0.0, epsilon = 1e-13);
    let randers = catalog("randers_flat", &params(&[("b", 0.5)])).unwrap();
    let g = metric_tensor(randers.as_ref(), p(0.0, 0.0), v(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(g[0][0], 2.25, epsilon = 1e-13);
    assert_abs_diff_eq!(g[1][1], 1.5, epsilon = 1e-13);
    assert_abs_diff_eq!(g[0][1], 0.0, epsilon = 1e-13);
}

/// Central differences of F² as an oracle for g and of g for C.
#[test]
fn randers_cartan_matches_difference_oracle() {
    let s = catalog("randers_flat", &params(&[("b", 0.5)])).unwrap();
    let f2 = |y1: f64, y2: f64| s.f2(p(0.0, 0.0), v(y1, y2)).unwrap();
    // At y = (1, 0) the reflection y2 → −y2 forces C = 0, so probe off-axis too.
    assert!(max3(&cartan_tensor(s.as_ref(), p(0.0, 0.0), v(1.0, 0.0)).unwrap()) < 1e-13);
    let y0 = [0.6, 0.8];
    let h = 1e-3;
    let g_fd = |y1: f64, y2: f64| {
        let d11 = (f2(y1 + h, y2) - 2.0 * f2(y1, y2) + f2(y1 - h, y2)) / (h * h) / 2.0;
        let d22 = (f2(y1, y2 + h) - 2.0 * f2(y1, y2) + f2(y1, y2 - h)) / (h * h) / 2.0;
        let d12 = (f2(y1 + h, y2 + h) - f2(y1 + h, y2 - h) - f2(y1 - h, y2 + h) + f2(y1 - h, y2 - h)) / (8.0 * h * h);
        [[d11, d12], [d12, d22]]
    };
    assert_abs_diff_eq!(g_fd(1.0, 0.0)[0][0], 2.25, epsilon = 1e-5);
    let c = cartan_tensor(s.as_ref(), p(0.0, 0.0), v(y0[0], y0[1])).unwrap();
    let hc = 1e-2;
    for k in 0..2 {
        let (dp, dm) = if k == 0 {
            (g_fd(y0[0] + hc, y0[1]), g_fd(y0[0] - hc, y0[1]))
        } else {
            (g_fd(y0[0], y0[1] + hc), g_fd(y0[0], y0[1] - hc))
        };
        for i in 0..2 {
            for j in 0..2 {
                let fd = (dp[i][j] - dm[i][j]) / (2.0 * hc);
                assert!((c[i][j][k] - fd).abs() < 2e-3, "C[{i}][{j}][{k}] = {} vs {fd}", c[i][j][k]);
            }
        }
    }
    assert!(max3(&c) > 0.1);
    assert!(max3(&cartan_tensor(entry("round_sphere").as_ref(), p(0.4, 0.1), v(1.0, 2.0)).unwrap()) < 1e-13);
}

#[test]
fn spray_and_connection_examples() {
    let sphere = entry("round_sphere");
    let s = sphere.as_ref();
    let g = spray_coefficients(s, p(0.5, 0.0), v(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(g[0], -0.4, epsilon = 1e-13);
    assert_abs_diff_eq!(g[1], 0.0, epsilon = 1e-13);
    let g0 = spray_coefficients(s, p(0.0, 0.0), v(0.3, -1.0)).unwrap();
    assert_abs_diff_eq!(g0[0], 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(g0[1], 0.0, epsilon = 1e-14);
    let n = nonlinear_connection(s, p(0.5, 0.0), v(1.0, 0.0)).unwrap();
    // N^1_1 = ∂G^1/∂y^1 = γ^1_11 y^1
    assert_abs_diff_eq!(n[0][0], -0.8, epsilon = 1e-13);
    let n2 = nonlinear_connection(s, p(0.5, 0.0), v(2.0, 0.0)).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert_abs_diff_eq!(n2[i][j], 2.0 * n[i][j], epsilon = 1e-13);
        }
    }
    let gam = chern_connection(s, p(0.5, 0.0), v(1.0, 0.3)).unwrap();
    assert_abs_diff_eq!(gam[0][0][0], -0.8, epsilon = 1e-13);
    assert_abs_diff_eq!(gam[0][1][1], 0.8, epsilon = 1e-13);
    // conformal factor e^{2f}: Γ^2_12 = f_1 = −0.8, Γ^1_12 = f_2 = 0
    assert_abs_diff_eq!(gam[1][0][1], -0.8, epsilon = 1e-13);
    assert_abs_diff_eq!(gam[0][0][1], 0.0, epsilon = 1e-13);
    assert_abs_diff_eq!(gam[1][0][0], 0.0, epsilon = 1e-13);
    for st in [entry("euclidean"), catalog("randers_flat", &params(&[("b", 0.5)])).unwrap()] {
        let gam = chern_connection(st.as_ref(), p(0.2, 0.1), v(0.4, 1.0)).unwrap();
        assert_eq!(max3(&gam), 0.0);
        assert_eq!(spray_coefficients(st.as_ref(), p(1.0, 2.0), v(1.0, 1.0)).unwrap(), [0.0, 0.0]);
    }
}

#[test]
fn curvature_examples() {
    let e = geometry_jet(entry("euclidean").as_ref(), p(0.0, 0.0), v(1.0, 0.0)).unwrap();
    assert_eq!(e.ricci, 0.0);
    assert!(e.hh.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
    assert_eq!(e.reduced, [[0.0; 2]; 2]);
    for (x, y) in [((0.5, 0.0), (1.0, 0.0)), ((-0.3, 0.8), (0.2, -1.0)), ((2.0, 1.0), (1.0, 1.0))] {
        let j = geometry_jet(entry("round_sphere").as_ref(), p(x.0, x.1), v(y.0, y.1)).unwrap();
        assert_abs_diff_eq!(j.ricci, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(j.reduced[0][0] + j.reduced[1][1], 1.0, epsilon = 1e-12);
        let c = j.contracted_hh();
        for i in 0..2 {
            for k in 0..2 {
                assert_abs_diff_eq!(c[i][k], j.reduced[i][k], epsilon = 1e-10);
            }
        }
        // antisymmetry in (k, l)
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(j.hh[a][b][0][1], -j.hh[a][b][1][0], epsilon = 1e-12);
                assert_eq!(j.hh[a][b][0][0], 0.0);
            }
        }
    }
    let ros = catalog("rosenau", &params(&[("t0", -1.0)])).unwrap();
    let r = ricci_scalar(ros.as_ref(), p(0.0, 0.0), v(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(r, 0.656_517_642_7, epsilon = 1e-9);
}

#[test]
fn formal_christoffel_equals_chern_for_riemannian() {
    let j = geometry_jet(entry("round_sphere").as_ref(), p(0.3, -0.2), v(0.7, 0.2)).unwrap();
    for i in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                assert_abs_diff_eq!(j.formal[i][a][b], j.chern[i][a][b], epsilon = 1e-13);
            }
        }
    }
}

#[test]
fn finsler_contraction_identity_and_symmetry() {
    let s = catalog("conformal_randers", &params(&[("b", 0.4)])).unwrap();
    for (x, y) in [((0.3, -0.4), (1.0, 0.2)), ((-0.7, 0.1), (-0.3, 0.9)), ((0.0, 0.0), (1.0, 0.0))] {
        let j = geometry_jet(s.as_ref(), p(x.0, x.1), v(y.0, y.1)).unwrap();
        let c = j.contracted_hh();
        for i in 0..2 {
            for k in 0..2 {
                assert!((c[i][k] - j.reduced[i][k]).abs() < 1e-9, "{c:?} vs {:?}", j.reduced);
            }
        }
        for i in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    assert_abs_diff_eq!(j.chern[i][a][b], j.chern[i][b][a], epsilon = 1e-13);
                }
            }
        }
    }
}

#[test]
fn degenerate_metric_is_reported() {
    let s = catalog("randers_flat", &params(&[("b", 0.5)])).unwrap();
    let scaled = Scaled { inner: s, factor: 0.0 };
    assert!(matches!(metric_tensor(&scaled, p(0.0, 0.0), v(1.0, 0.0)), Err(Error::DegenerateMetric { .. })));
}

#[test]
fn affine_pullback_examples() {
    let e = entry("euclidean");
    let scaled = Pullback::new(e.clone(), AffineMap::scaling(2.0)).unwrap();
    assert_abs_diff_eq!(eval_f(&scaled, p(0.3, 0.1), v(1.0, 0.0)).unwrap(), 2.0, epsilon = 1e-14);
    let moved = Pullback::new(e, AffineMap::translation([1.0, -2.0])).unwrap();
    assert_abs_diff_eq!(eval_f(&moved, p(0.3, 0.1), v(3.0, 4.0)).unwrap(), 5.0, epsilon = 1e-14);
    let bad = AffineMap { a: [[1.0, 0.0], [0.0, -1.0]], b: [0.0; 2] };
    assert!(matches!(Pullback::new(entry("euclidean"), bad), Err(Error::DegeneratePullback { .. })));
}

#[test]
fn out_of_chart_on_pinned_domain() {
    let s = entry("torus_bump");
    // periodic entries wrap instead of failing
    let a = eval_f(s.as_ref(), p(0.5, 0.5), v(1.0, 0.0)).unwrap();
    let b = eval_f(s.as_ref(), p(0.5 + 2.0 * std::f64::consts::PI, 0.5), v(1.0, 0.0)).unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-12);
}
