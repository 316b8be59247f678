//! Evolve the Rosenau metric under the Ricci flow and compare with the
//! closed-form family.
use finsler_flow::flow::{run_flow, RunConfig};
use finsler_flow::geometry::eval_f;
use finsler_flow::reference::{catalog, params};
use std::time::Instant;

fn main() -> finsler_flow::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(65);
    let cfg = RunConfig::from_toml(&format!(
        r#"
[structure]
name = "rosenau"
params = {{ t0 = -2.0 }}

[grid]
nx1 = {n}
nx2 = {n}
bounds = [[-3.0, 3.0], [-3.0, 3.0]]
boundary = "pinned"
ntheta = 64

[flow]
kind = "ricci"
integrator = "rk4"
dt = 1e-3
t_end = 0.1
snapshot_stride = 100
"#
    ))?;
    let start = Instant::now();
    let traj = run_flow(&cfg)?;
    let elapsed = start.elapsed();
    let last = traj.snapshots.last().expect("final snapshot");
    let exact = catalog("rosenau", &params(&[("t0", -1.9)]))?;
    let g = &last.phi.grid;
    let mut worst: f64 = 0.0;
    for k in 0..g.len() {
        let (i1, i2, it) = g.unflatten(k);
        if g.is_interior(i1, i2) {
            let f = eval_f(exact.as_ref(), g.point(i1, i2), g.direction(it))?;
            worst = worst.max((last.phi.values[k] - f).abs() / f);
        }
    }
    println!("t = {}, interior max relative error vs rosenau(-1.9): {worst:.3e}", last.t);
    println!("stop: {:?}", traj.stop);
    println!("wall time {:.1} s", elapsed.as_secs_f64());
    Ok(())
}
