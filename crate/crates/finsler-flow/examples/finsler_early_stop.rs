//! Genuinely Finsler data evolved node by node (no fiber projection). The
//! scheme is unstable for such data; the run ends early with a reason and a
//! final diagnostics record instead of producing an indefinite metric.
use finsler_flow::flow::{run_flow, RunConfig};

fn main() -> finsler_flow::Result<()> {
    let cfg = RunConfig::from_toml(
        r#"
[structure]
name = "conformal_randers"
params = { b = 0.2 }

[grid]
nx1 = 13
nx2 = 13
bounds = [[-0.5, 0.5], [-0.5, 0.5]]
boundary = "pinned"
ntheta = 32

[flow]
kind = "ricci"
dt = 1e-3
t_end = 0.5
snapshot_stride = 1
fiber_projection = "none"
"#,
    )?;
    let traj = run_flow(&cfg)?;
    for d in &traj.diagnostics {
        println!(
            "t = {:.4}: min eig g = {:+.4e}, integrability = {:.2e}, max |Ric| = {:.3e}",
            d.t, d.min_eig_g, d.integrability_residual, d.max_abs_ric
        );
    }
    match &traj.stop {
        Some(e) => println!("stopped at t = {}: {e}", traj.final_state.t),
        None => println!("reached t = {}", traj.final_state.t),
    }
    for e in &traj.events {
        println!("event [{}] t = {}: {}", e.kind, e.t, e.message);
    }
    Ok(())
}
