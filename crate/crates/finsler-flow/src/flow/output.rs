use super::{OutputFormat, Trajectory};
use crate::deturck::DiffeoFamily;
use crate::error::Result;
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Paths written by [`write_outputs`], in write order.
#[derive(Clone, Debug, Default)]
pub struct OutputFiles {
    pub paths: Vec<PathBuf>,
}

fn create(dir: &Path, name: &str, files: &mut OutputFiles) -> Result<BufWriter<File>> {
    let p = dir.join(name);
    let f = File::create(&p)?;
    files.paths.push(p);
    Ok(BufWriter::new(f))
}

/// Write snapshots, diagnostics and events (and the gauge diffeomorphisms,
/// when given) in every requested format. Numbers use the shortest
/// round-trip representation, so identical runs give identical bytes.
pub fn write_outputs(traj: &Trajectory, dir: &Path, formats: &[OutputFormat], diffeo: Option<&DiffeoFamily>) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let mut files = OutputFiles::default();
    for fmt in formats {
        match fmt {
            OutputFormat::Csv => write_csv(traj, dir, diffeo, &mut files)?,
            OutputFormat::Json => write_json(traj, dir, diffeo, &mut files)?,
        }
    }
    Ok(files)
}

fn write_csv(traj: &Trajectory, dir: &Path, diffeo: Option<&DiffeoFamily>, files: &mut OutputFiles) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "snapshots.csv", files)?);
    w.write_record(["t", "i1", "i2", "itheta", "x1", "x2", "theta", "F", "Ric"])?;
    for s in &traj.snapshots {
        let g = &s.phi.grid;
        let t = s.t.to_string();
        for k in 0..g.len() {
            let (i1, i2, it) = g.unflatten(k);
            let p = g.point(i1, i2);
            w.write_record(&[
                t.clone(),
                i1.to_string(),
                i2.to_string(),
                it.to_string(),
                p.x1.to_string(),
                p.x2.to_string(),
                g.theta(it).to_string(),
                s.phi.values[k].to_string(),
                s.ric[k].to_string(),
            ])?;
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(dir, "diagnostics.csv", files)?);
    for d in &traj.diagnostics {
        w.serialize(d)?;
    }
    if traj.diagnostics.is_empty() {
        w.write_record(["t", "min_eig_g", "integrability_residual", "max_abs_ric", "dt"])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(dir, "events.csv", files)?);
    w.write_record(["t", "kind", "message"])?;
    for e in &traj.events {
        w.write_record(&[e.t.to_string(), e.kind.clone(), e.message.clone()])?;
    }
    w.flush()?;
    if let Some(d) = diffeo {
        d.write_csv(create(dir, "diffeo.csv", files)?)?;
    }
    Ok(())
}

fn write_json(traj: &Trajectory, dir: &Path, diffeo: Option<&DiffeoFamily>, files: &mut OutputFiles) -> Result<()> {
    let grid = traj.snapshots.first().map(|s| s.phi.grid.spec.clone());
    let snaps: Vec<_> = traj.snapshots.iter().map(|s| json!({ "t": s.t, "F": s.phi.values, "Ric": s.ric })).collect();
    let mut doc = json!({
        "grid": grid,
        "layout": "index = (i1 * nx2 + i2) * ntheta + itheta",
        "snapshots": snaps,
        "diagnostics": traj.diagnostics,
        "events": traj.events,
    });
    if let Some(d) = diffeo {
        doc["diffeo"] = json!({ "times": d.times, "maps": d.maps, "jacobians": d.jac });
    }
    let mut w = create(dir, "run.json", files)?;
    serde_json::to_writer(&mut w, &doc).map_err(|e| crate::Error::Io(e.to_string()))?;
    w.flush()?;
    Ok(())
}
