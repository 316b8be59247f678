//! Command-line front end: `geom`, `flow` and `validate`.
//!
//! Exit codes: 0 ok, 1 validation failure, 2 usage or configuration error,
//! 3 degenerate geometry, 4 early stop of a flow.

use crate::deturck::integrate_diffeomorphisms;
use crate::error::Result;
use crate::flow::{run_flow, write_outputs, FlowKind, OutputFormat, RunConfig};
use crate::geometry::{geometry_jet, ChartPoint, GeometryJet, TangentVector};
use crate::reference::{catalog, Param, Params};
use crate::validate::{run_suite, Mutation, Suite};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "finsler-flow", version, about = "Finsler surface curvature and Ricci / Ricci-DeTurck flow")]
pub struct Cli {
    /// Output directory (overrides `output.directory` of a flow config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format: of stdout for `geom` and `validate`, of the files
    /// written by `flow` (overriding `output.formats`).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for node-parallel work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Kernel,
    Flows,
    Deturck,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    FlipCartan,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the full geometry (g, C, G, N, Γ, R, Ric) at one point.
    Geom {
        /// Catalog entry name.
        #[arg(long)]
        structure: String,
        /// Catalog parameter as key=value (repeatable).
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, Param)>,
        /// Chart point x1,x2.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        at: [f64; 2],
        /// Tangent vector y1,y2.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        dir: [f64; 2],
    },
    /// Run a flow described by a TOML config.
    Flow { config: PathBuf },
    /// Run validation suites and print one line per check.
    Validate {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Deliberately corrupt the kernel (demonstrates that checks can fail).
        #[arg(long, value_enum, hide = true)]
        mutate: Option<MutationArg>,
    },
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let v: Vec<&str> = s.split(',').collect();
    let [a, b] = v.as_slice() else { return Err(format!("expected two comma-separated numbers, got `{s}`")) };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([num(a)?, num(b)?])
}

fn parse_param(s: &str) -> std::result::Result<(String, Param), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = match v.trim().parse::<f64>() {
        Ok(x) => Param::Num(x),
        Err(_) => Param::Text(v.to_string()),
    };
    Ok((k.trim().to_string(), v))
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        // advisory; the global pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Geom { structure, params, at, dir } => cmd_geom(&mut out, structure, params, *at, *dir, cli.format),
        Command::Flow { config } => cmd_flow(&mut out, config, &cli),
        Command::Validate { suite, mutate } => cmd_validate(&mut out, *suite, *mutate, cli.format),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}


fn cmd_geom(
    out: &mut impl Write,
    name: &str,
    params: &[(String, Param)],
    at: [f64; 2],
    dir: [f64; 2],
    format: Option<Format>,
) -> Result<i32> {
    let p: Params = params.iter().cloned().collect();
    let s = catalog(name, &p)?;
    let j = geometry_jet(s.as_ref(), ChartPoint::new(at[0], at[1]), TangentVector::new(dir[0], dir[1]))?;
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            writeln!(out, "quantity,value")?;
            for (k, v) in geom_rows(&j) {
                writeln!(out, "{k},{v}")?;
            }
        }
        Format::Json => {
            let doc = json!({
                "structure": s.name(),
                "x": at,
                "y": dir,
                "F": j.f,
                "g": j.g,
                "cartan": j.cartan,
                "spray": j.spray,
                "nonlinear": j.nonlinear,
                "formal_christoffel": j.formal,
                "chern": j.chern,
                "hh_curvature": j.hh,
                "reduced_curvature": j.reduced,
                "ricci": j.ricci,
            });
            writeln!(out, "{doc}")?;
        }
    }
    Ok(0)
}

/// Flat (name, value) rows of a geometry jet; indices are 1-based.
pub fn geom_rows(j: &GeometryJet) -> Vec<(String, f64)> {
    let mut rows = vec![("F".to_string(), j.f)];
    let r = |n: usize| 1..=n;
    for a in r(2) {
        for b in r(2) {
            rows.push((format!("g_{a}{b}"), j.g[a - 1][b - 1]));
        }
    }
    for a in r(2) {
        for b in r(2) {
            for c in r(2) {
                rows.push((format!("C_{a}{b}{c}"), j.cartan[a - 1][b - 1][c - 1]));
            }
        }
    }
    for a in r(2) {
        rows.push((format!("G^{a}"), j.spray[a - 1]));
    }
    for a in r(2) {
        for b in r(2) {
            rows.push((format!("N^{a}_{b}"), j.nonlinear[a - 1][b - 1]));
        }
    }
    for (label, t) in [("gamma", &j.formal), ("Gamma", &j.chern)] {
        for a in r(2) {
            for b in r(2) {
                for c in r(2) {
                    rows.push((format!("{label}^{a}_{b}{c}"), t[a - 1][b - 1][c - 1]));
                }
            }
        }
    }
    for a in r(2) {
        for b in r(2) {
            for c in r(2) {
                for d in r(2) {
                    rows.push((format!("R_{a}^{b}_{c}{d}"), j.hh[a - 1][b - 1][c - 1][d - 1]));
                }
            }
        }
    }
    for a in r(2) {
        for b in r(2) {
            rows.push((format!("R^{a}_{b}"), j.reduced[a - 1][b - 1]));
        }
    }
    rows.push(("Ric".to_string(), j.ricci));
    rows
}

fn cmd_flow(out: &mut impl Write, path: &std::path::Path, cli: &Cli) -> Result<i32> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.formats = vec![match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }];
    }
    let mut traj = run_flow(&cfg)?;
    let mut stop = traj.stop.clone();
    let diffeo = if cfg.flow.kind == FlowKind::Deturck && !traj.xi_history.is_empty() {
        let grid = traj.final_state.phi.grid.clone();
        match integrate_diffeomorphisms(&traj.xi_history, &grid, cfg.flow.dt) {
            Ok(d) => Some(d),
            Err(e) => {
                traj.events.push(crate::flow::Event { t: traj.final_state.t, kind: "stop".into(), message: e.to_string() });
                stop.get_or_insert(e);
                None
            }
        }
    } else {
        None
    };
    let files = write_outputs(&traj, &cfg.output.directory, &cfg.output.formats, diffeo.as_ref())?;
    for p in &files.paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    match stop {
        Some(e) => {
            eprintln!("flow stopped at t = {}: {e}", traj.final_state.t);
            Ok(4)
        }
        None => Ok(0),
    }
}

fn cmd_validate(out: &mut impl Write, suite: SuiteArg, mutate: Option<MutationArg>, format: Option<Format>) -> Result<i32> {
    let suite = match suite {
        SuiteArg::Kernel => Suite::Kernel,
        SuiteArg::Flows => Suite::Flows,
        SuiteArg::Deturck => Suite::Deturck,
        SuiteArg::All => Suite::All,
    };
    let mutation = match mutate {
        Some(MutationArg::FlipCartan) => Mutation::FlipCartan,
        None => Mutation::None,
    };
    let report = run_suite(suite, mutation);
    match format.unwrap_or(Format::Csv) {
        Format::Csv => writeln!(out, "{report}")?,
        Format::Json => {
            let checks: Vec<_> = report
                .checks
                .iter()
                .map(|c| {
                    json!({
                        "criterion": c.criterion,
                        "name": c.name,
                        "passed": c.passed(),
                        "measured": c.measured,
                        "tolerance": c.tolerance,
                        "seconds": c.seconds,
                        "budget": c.budget,
                        "error": c.error,
                    })
                })
                .collect();
            writeln!(out, "{}", json!({ "passed": report.passed(), "checks": checks }))?;
        }
    }
    Ok(if report.passed() { 0 } else { 1 })
}
