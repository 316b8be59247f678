//! Randomized invariants of the curvature kernel over the catalog.
//!
//! Every property runs 64 cases from a fixed ChaCha seed, so failures
//! reproduce exactly; shrinking still applies.

use finsler_flow::geometry::*;
use finsler_flow::reference::*;
use finsler_flow::sphere_bundle::{integrability_residual, metric_field_spectral, symmetry_defect, FieldOnSM, GridSpec, SphereBundleGrid};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use std::f64::consts::TAU;
use std::sync::Arc;

const SEED: [u8; 32] = *b"finsler-flow invariants, fixed!!";
const CASES: u32 = 64;

fn runner() -> TestRunner {
    let cfg = Config { cases: CASES, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(cfg, TestRng::from_seed(RngAlgorithm::ChaCha, &SEED))
}

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>)
where
    S::Value: std::fmt::Debug,
{
    if let Err(e) = runner().run(&strategy, test) {
        panic!("{e}");
    }
}

#[derive(Debug, Clone)]
struct Case {
    name: &'static str,
    params: Vec<(&'static str, f64)>,
    x: [f64; 2],
    theta: f64,
    len: f64,
}

impl Case {
    fn structure(&self) -> SharedStructure {
        catalog(self.name, &params(&self.params)).unwrap()
    }
    fn x(&self) -> ChartPoint {
        ChartPoint::new(self.x[0], self.x[1])
    }
    fn y(&self) -> TangentVector {
        TangentVector::from_angle(self.theta).scaled(self.len)
    }
}

fn case() -> impl Strategy<Value = Case> {
    let entry = prop_oneof![
        Just(("euclidean", vec![])),
        (-0.6..0.6f64, -0.6..0.6f64).prop_map(|(b, b2)| ("randers_flat", vec![("b", b), ("b2", b2)])),
        Just(("round_sphere", vec![])),
        (-3.0..-0.2f64).prop_map(|t| ("rosenau", vec![("t0", t)])),
        (-0.5..0.5f64).prop_map(|e| ("torus_bump", vec![("eps", e)])),
        (0.2..0.9f64).prop_map(|r| ("round_torus", vec![("R", 2.0), ("r", r)])),
        (-0.8..0.8f64).prop_map(|b| ("conformal_randers", vec![("b", b)])),
    ];
    (entry, -1.2..1.2f64, -1.2..1.2f64, 0.0..TAU, 0.3..3.0f64)
        .prop_map(|((name, params), x1, x2, theta, len)| Case { name, params, x: [x1, x2], theta, len })
}

fn max_abs(m: &Mat2) -> f64 {
    m.iter().flatten().fold(0.0, |a: f64, v| a.max(v.abs()))
}

#[test]
fn f_is_homogeneous_and_g_is_scale_invariant() {
    run((case(), 0.05..20.0f64), |(c, l)| {
        let s = c.structure();
        let f = eval_f(s.as_ref(), c.x(), c.y()).unwrap();
        let fl = eval_f(s.as_ref(), c.x(), c.y().scaled(l)).unwrap();
        prop_assert!((fl - l * f).abs() <= 1e-12 * l * f, "{fl} vs {}", l * f);
        let g = metric_tensor(s.as_ref(), c.x(), c.y()).unwrap();
        let gl = metric_tensor(s.as_ref(), c.x(), c.y().scaled(l)).unwrap();
        let d = [[g[0][0] - gl[0][0], g[0][1] - gl[0][1]], [g[1][0] - gl[1][0], g[1][1] - gl[1][1]]];
        prop_assert!(max_abs(&d) <= 1e-10 * max_abs(&g));
        Ok(())
    });
}

#[test]
fn y_contractions_of_g_and_cartan() {
    run(case(), |c| {
        let j = geometry_jet(c.structure().as_ref(), c.x(), c.y()).unwrap();
        let y = c.y().arr();
        let f2 = j.f * j.f;
        let yy: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| y[a] * y[b] * j.g[a][b]).sum();
        prop_assert!((yy - f2).abs() <= 1e-10 * f2);
        // g_ij y^j = F ∂F/∂y^i, against a difference quotient of F
        let s = c.structure();
        let h = 1e-3 * c.len;
        for i in 0..2 {
            let at = |d: f64| {
                let mut z = y;
                z[i] += d * h;
                eval_f(s.as_ref(), c.x(), TangentVector::new(z[0], z[1])).unwrap()
            };
            let df = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
            let gy = j.g[i][0] * y[0] + j.g[i][1] * y[1];
            prop_assert!((gy - j.f * df).abs() <= 1e-7 * f2.max(1.0), "{gy} vs {}", j.f * df);
        }
        let scale = j.cartan.iter().flatten().flatten().fold(1.0, |a: f64, v| a.max(v.abs()));
        for a in 0..2 {
            for b in 0..2 {
                prop_assert!((y[0] * j.cartan[0][a][b] + y[1] * j.cartan[1][a][b]).abs() <= 1e-10 * scale * c.len);
            }
        }
        prop_assert!(symmetry_defect(&j.cartan) <= 1e-8 * scale);
        Ok(())
    });
}

#[test]
fn hh_contraction_agrees_with_reduced_curvature() {
    run(case(), |c| {
        let j = geometry_jet(c.structure().as_ref(), c.x(), c.y()).unwrap();
        let h = j.contracted_hh();
        let d = [[h[0][0] - j.reduced[0][0], h[0][1] - j.reduced[0][1]], [h[1][0] - j.reduced[1][0], h[1][1] - j.reduced[1][1]]];
        prop_assert!(max_abs(&d) <= 1e-6 * max_abs(&j.reduced).max(1.0), "{d:?}");
        // Ric is the trace of the (F²-normalized) reduced curvature
        let tr = j.reduced[0][0] + j.reduced[1][1];
        prop_assert!((tr - j.ricci).abs() <= 1e-9 * j.ricci.abs().max(1.0));
        Ok(())
    });
}

#[test]
fn riemannian_entries_have_no_cartan_and_chern_is_formal() {
    run(case().prop_filter("riemannian", |c| !c.name.contains("randers")), |c| {
        let j = geometry_jet(c.structure().as_ref(), c.x(), c.y()).unwrap();
        for (a, b) in j.cartan.iter().flatten().flatten().zip(j.chern.iter().flatten().flatten().zip(j.formal.iter().flatten().flatten())) {
            prop_assert!(a.abs() <= 1e-9);
            prop_assert!((b.0 - b.1).abs() <= 1e-9 * b.1.abs().max(1.0));
        }
        Ok(())
    });
}

#[test]
fn sampled_grids_are_integrable() {
    let grid = Arc::new(
        SphereBundleGrid::new(GridSpec { nx1: 9, nx2: 9, bounds: [[-1.0, 1.0]; 2], boundary: BoundaryMode::Pinned, ntheta: 64 }).unwrap(),
    );
    run(case(), |c| {
        let phi = FieldOnSM::sample(grid.clone(), c.structure().as_ref()).unwrap();
        let r = integrability_residual(&metric_field_spectral(&phi));
        prop_assert!(r <= 1e-6, "{} residual {r}", c.name);
        Ok(())
    });
}

#[test]
fn ricci_is_natural_under_dilation_and_translation() {
    run((case(), -0.3..0.3f64, -0.3..0.3f64), |(c, b1, b2)| {
        let s = c.structure();
        let direct = ricci_scalar(s.as_ref(), c.x(), c.y()).unwrap();
        let x = ChartPoint::new(0.5 * c.x[0], 0.5 * c.x[1]);
        let dilated = Pullback::new(s.clone(), AffineMap::scaling(2.0)).unwrap();
        let pulled = ricci_scalar(&dilated, x, c.y()).unwrap();
        prop_assert!((pulled - direct).abs() <= 1e-5 * direct.abs().max(1.0), "{pulled} vs {direct}");

        let shifted = Pullback::new(s.clone(), AffineMap::translation([b1, b2])).unwrap();
        let x = ChartPoint::new(c.x[0] - b1, c.x[1] - b2);
        let pulled = ricci_scalar(&shifted, x, c.y()).unwrap();
        prop_assert!((pulled - direct).abs() <= 1e-8 * direct.abs().max(1.0));
        Ok(())
    });
}

#[test]
fn ricci_is_scale_invariant_in_y() {
    run((case(), 0.05..20.0f64), |(c, l)| {
        let s = c.structure();
        let a = ricci_scalar(s.as_ref(), c.x(), c.y()).unwrap();
        let b = ricci_scalar(s.as_ref(), c.x(), c.y().scaled(l)).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
        Ok(())
    });
}
