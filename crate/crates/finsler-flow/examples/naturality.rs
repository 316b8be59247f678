//! Curvature is natural: pulling a structure back by a diffeomorphism pulls
//! its Ricci scalar back. Checked for affine maps on the analytic kernel.
use finsler_flow::deturck::pullback_affine;
use finsler_flow::geometry::{ricci_scalar, AffineMap, ChartPoint, TangentVector};
use finsler_flow::reference::{catalog, params};

fn main() -> finsler_flow::Result<()> {
    let (c, s) = (0.6f64.cos(), 0.6f64.sin());
    let maps = [
        ("dilation x -> 2x", AffineMap::scaling(2.0)),
        ("translation", AffineMap::translation([0.3, -0.1])),
        ("rotation + shift", AffineMap { a: [[c, -s], [s, c]], b: [0.2, 0.1] }),
    ];
    for (name, p) in [("rosenau", params(&[("t0", -1.0)])), ("conformal_randers", params(&[("b", 0.5)]))] {
        let f = catalog(name, &p)?;
        println!("{name}:");
        for (label, m) in &maps {
            let pb = pullback_affine(f.clone(), *m)?;
            let mut worst: f64 = 0.0;
            for k in 0..20 {
                let x = ChartPoint::new(-0.4 + 0.04 * k as f64, 0.3 - 0.02 * k as f64);
                let y = TangentVector::from_angle(0.3 * k as f64);
                let fx = m.apply(x.arr());
                let fy = m.push(y.arr());
                let direct = ricci_scalar(f.as_ref(), ChartPoint::new(fx[0], fx[1]), TangentVector::new(fy[0], fy[1]))?;
                worst = worst.max((ricci_scalar(&pb, x, y)? - direct).abs());
            }
            println!("  {label:<18} max |Ric(φ*F)(x, y) - Ric(F)(φx, dφ y)| = {worst:.2e}");
        }
    }
    Ok(())
}
