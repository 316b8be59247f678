//! Curvature of every catalog entry at one point of SM.
//!
//! `cargo run --example geometry -- 0.3 -0.2 1 0.5` evaluates at x = (0.3, -0.2)
//! in direction y = (1, 0.5).
use finsler_flow::geometry::{geometry_jet, ChartPoint, TangentVector};
use finsler_flow::reference::{catalog, Params, CATALOG};

fn main() -> finsler_flow::Result<()> {
    let a: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let [x1, x2, y1, y2] = match a.as_slice() {
        [x1, x2, y1, y2] => [*x1, *x2, *y1, *y2],
        _ => [0.3, -0.2, 1.0, 0.5],
    };
    let (x, y) = (ChartPoint::new(x1, x2), TangentVector::new(y1, y2));
    println!("x = ({x1}, {x2}), y = ({y1}, {y2})\n");
    println!("{:<18} {:>10} {:>10} {:>10} {:>12} {:>12}", "entry", "F", "det g", "max|C|", "G^1", "Ric");
    for name in CATALOG.iter().filter(|n| **n != "grid_sampled") {
        let s = catalog(name, &Params::new())?;
        let j = geometry_jet(s.as_ref(), x, y)?;
        let det = j.g[0][0] * j.g[1][1] - j.g[0][1] * j.g[1][0];
        let c = j.cartan.iter().flatten().flatten().fold(0.0, |m: f64, v| m.max(v.abs()));
        println!("{:<18} {:>10.6} {:>10.6} {:>10.2e} {:>12.6} {:>12.6}", name, j.f, det, c, j.spray[0], j.ricci);
    }

    // the Ricci scalar of a Finsler metric depends on the direction
    let s = catalog("conformal_randers", &Params::new())?;
    println!("\nconformal_randers, Ric around the fiber at x:");
    for k in 0..8 {
        let th = k as f64 * std::f64::consts::TAU / 8.0;
        let j = geometry_jet(s.as_ref(), x, TangentVector::from_angle(th))?;
        println!("  theta = {th:.3}: Ric = {:.6}", j.ricci);
    }
    Ok(())
}
