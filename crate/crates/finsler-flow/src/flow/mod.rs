//! Method-of-lines integration of the Ricci flow ∂t F = −F·𝓡ic and of the
//! Ricci-DeTurck flow ∂t F² = −2F²𝓡ic − 𝓛_ξF² on the sphere-bundle grid.
//!
//! The evolved unknown is φ = F on the unit circles. Jets of F² at a node are
//! rebuilt at every stage from a fixed analytic base times exp(2w), with the
//! jets of w = ln(φ/φ_base) taken from lattice differences.

mod config;
mod output;

pub use config::{
    BoundaryData, FiberProjection, FlowKind, FlowSection, Integrator, OutputFormat, OutputSection, RunConfig,
    StructureSpec, Tolerances,
};
pub use output::{write_outputs, OutputFiles};

use crate::deturck::{complete_lift, deturck_xi, BackgroundStructure, DeTurckField};
use crate::error::{Error, Result};
use crate::geometry::{eval_f, inverse, max_eig, Pipeline, SharedStructure, StructureKind};
use crate::reference::{exact_solution, Params};
use crate::sphere_bundle::{
    ellipticity_monitor, integrability_residual, metric_field_spectral, FieldOnSM, MetricField, Sampler,
    SphereBundleGrid,
};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub phi: FieldOnSM,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub min_eig_g: f64,
    pub integrability_residual: f64,
    pub max_abs_ric: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub phi: FieldOnSM,
    pub ric: Vec<f64>,
}

/// Something worth reporting that did not stop the run, or the reason it stopped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub events: Vec<Event>,
    /// Why the run ended before `t_end`, if it did.
    pub stop: Option<Error>,
    /// Fiber-averaged ξ at every step start (DeTurck runs only).
    pub xi_history: Vec<(f64, Vec<[f64; 2]>)>,
    pub final_state: FlowState,
}

/// Result of one right-hand-side evaluation.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// ∂tφ at every node; on pinned boundary nodes, the rate of the
    /// boundary data (zero when frozen).
    pub dphi: Vec<f64>,
    /// 𝓡ic at every node; NaN where it was not evaluated.
    pub ric: Vec<f64>,
    pub xi: Option<DeTurckField>,
}

#[derive(Clone, Debug)]
enum Boundary {
    None,
    Frozen(Vec<f64>),
    Exact { name: String, params: Params },
}

/// A discretized flow: everything that stays fixed while φ evolves.
#[derive(Debug)]
pub struct FlowProblem {
    pub grid: Arc<SphereBundleGrid>,
    pub sampler: Arc<Sampler>,
    pub kind: FlowKind,
    pub integrator: Integrator,
    pub background: Option<BackgroundStructure>,
    /// Riemannian fiber treatment (see [`FiberProjection`]).
    pub projection: bool,
    pub degeneracy: f64,
    /// θ-nodes where the pipeline runs.
    pub eval_thetas: Vec<usize>,
    boundary: Boundary,
}

impl FlowProblem {
    /// Build the problem and its initial state from a validated config.
    pub fn from_config(cfg: &RunConfig) -> Result<(FlowProblem, FlowState)> {
        cfg.validate()?;
        let grid = Arc::new(SphereBundleGrid::new(cfg.grid.clone())?);
        let initial = cfg.structure.build()?;
        let h = cfg.background.as_ref().map(|b| b.build()).transpose()?;
        let riemannian = initial.is_riemannian() && h.as_ref().is_none_or(|h| h.is_riemannian());
        let projection = cfg.projection(riemannian);
        let nt = grid.ntheta();
        let eval_thetas: Vec<usize> = match (projection, cfg.flow.kind) {
            (false, _) => (0..nt).collect(),
            (true, FlowKind::Ricci) => vec![0],
            (true, FlowKind::Deturck) => (0..8).map(|k| k * nt / 8).collect(),
        };
        let sampler = match initial.kind() {
            StructureKind::Analytic => Sampler::new(grid.clone(), initial.clone(), true)?,
            StructureKind::GridSampled => Sampler::euclidean(grid.clone())?,
        };
        let phi = FieldOnSM::sample(grid.clone(), initial.as_ref())?;
        let boundary = if grid.periodic() {
            Boundary::None
        } else {
            // static families (Ricci-flat data) are held frozen: same data, no
            // rounding noise from differencing in time
            let static_data = matches!(cfg.structure.name.as_str(), "euclidean" | "randers_flat");
            let exact = !static_data && exact_solution(&cfg.structure.name, &cfg.structure.params, 0.0)?.is_some();
            match (cfg.flow.boundary_data, cfg.flow.kind) {
                (BoundaryData::Exact, _) | (BoundaryData::Auto, FlowKind::Ricci) if exact => {
                    Boundary::Exact { name: cfg.structure.name.clone(), params: cfg.structure.params.clone() }
                }
                _ => Boundary::Frozen(phi.values.clone()),
            }
        };
        let background = h.map(|h| BackgroundStructure::new(h, grid.clone(), eval_thetas.clone())).transpose()?;
        let problem = FlowProblem {
            grid,
            sampler: Arc::new(sampler),
            kind: cfg.flow.kind,
            integrator: cfg.flow.integrator,
            background,
            projection,
            degeneracy: cfg.tolerances.degeneracy,
            eval_thetas,
            boundary,
        };
        let mut state = FlowState { phi, t: 0.0 };
        problem.constrain(0.0, &mut state.phi.values)?;
        Ok((problem, state))
    }

    fn pinned(&self, i1: usize, i2: usize) -> bool {
        !matches!(self.boundary, Boundary::None) && self.grid.is_boundary(i1, i2)
    }

    /// ∂tφ of the exact boundary data at time `t`, by a fourth-order central
    /// difference in time. Feeding this to the integrator keeps intermediate
    /// stages consistent with the interior.
    fn boundary_rate(&self, t: f64, dphi: &mut [f64]) -> Result<()> {
        let Boundary::Exact { name, params } = &self.boundary else { return Ok(()) };
        let g = &self.grid;
        let d = 1e-3;
        let at = |tt: f64| {
            exact_solution(name, params, tt)
                .map_err(|e| Error::BlowUp { t, reason: e.to_string() })
                .map(|s| s.expect("exact data was checked at construction"))
        };
        let s = [at(t - 2.0 * d)?, at(t - d)?, at(t + d)?, at(t + 2.0 * d)?];
        let [n1, n2] = g.nx();
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                if !g.is_boundary(i1, i2) {
                    continue;
                }
                for it in 0..g.ntheta() {
                    let (x, y) = (g.point(i1, i2), g.direction(it));
                    let f = |k: usize| eval_f(s[k].as_ref(), x, y);
                    dphi[g.idx(i1, i2, it)] = (f(0)? - 8.0 * f(1)? + 8.0 * f(2)? - f(3)?) / (12.0 * d);
                }
            }
        }
        Ok(())
    }

    /// Impose the Dirichlet data at time `t` on pinned boundary nodes.
    pub fn constrain(&self, t: f64, phi: &mut [f64]) -> Result<()> {
        let g = &self.grid;
        let [n1, n2] = g.nx();
        let ring = (0..n1).flat_map(|i1| (0..n2).map(move |i2| (i1, i2))).filter(|&(a, b)| g.is_boundary(a, b));
        match &self.boundary {
            Boundary::None => {}
            Boundary::Frozen(v) => {
                for (i1, i2) in ring {
                    let k = g.idx(i1, i2, 0);
                    let nt = g.ntheta();
                    phi[k..k + nt].copy_from_slice(&v[k..k + nt]);
                }
            }
            Boundary::Exact { name, params } => {
                let s: SharedStructure = exact_solution(name, params, t)
                    .map_err(|e| Error::BlowUp { t, reason: e.to_string() })?
                    .expect("exact data was checked at construction");
                for (i1, i2) in ring {
                    for it in 0..g.ntheta() {
                        phi[g.idx(i1, i2, it)] = eval_f(s.as_ref(), g.point(i1, i2), g.direction(it))?;
                    }
                }
            }
        }
        Ok(())
    }

    /// ∂tφ (and 𝓡ic, ξ) for the field `phi` at time `t`. With `full`, 𝓡ic is
    /// also evaluated on pinned boundary nodes for reporting.
    pub fn evaluate(&self, phi: &[f64], t: f64, full: bool) -> Result<Evaluation> {
        let g = &*self.grid;
        let only = (self.eval_thetas.len() < g.ntheta()).then_some(&self.eval_thetas[..]);
        if let Some(k) = phi.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            let (a, b, c) = g.unflatten(k);
            return Err(Error::BlowUp { t, reason: format!("F = {} at node ({a}, {b}, {c})", phi[k]) });
        }
        let w = self.sampler.log_ratio_near(phi, only).map_err(|e| match e {
            Error::BlowUp { reason, .. } => Error::BlowUp { t, reason },
            e => e,
        })?;
        let m = self.eval_thetas.len();
        let nx2 = g.nx()[1];
        let deturck = self.kind == FlowKind::Deturck;
        // pass 1: pointwise geometry at the evaluation directions
        let point = |k: usize| -> Result<Option<NodeEval>> {
            let (xn, j) = (k / m, k % m);
            let (i1, i2) = (xn / nx2, xn % nx2);
            if self.pinned(i1, i2) && !full && !deturck {
                return Ok(None);
            }
            let it = self.eval_thetas[j];
            let y = g.direction(it);
            let jet = self.sampler.node_jet(&w, i1, i2, it)?;
            let p = Pipeline::with_threshold(&jet, y, self.degeneracy).map_err(|e| e.with_node([i1, i2, it]))?;
            let ric = p.ricci();
            let xi = match &self.background {
                Some(h) if deturck => deturck_xi(&p.metric_inverse(), &p.chern(), h.gamma(i1, i2, j)),
                _ => [0.0; 2],
            };
            Ok(Some(NodeEval { f2: p.f2, ric, xi, f2_x: p.fx, f2_y: p.fy }))
        };
        let evals = (0..g.n_xnodes() * m).into_par_iter().map(point).collect::<Result<Vec<_>>>()?;
        let xi_field = deturck.then(|| DeTurckField {
            grid: self.grid.clone(),
            thetas: self.eval_thetas.clone(),
            xi: evals.iter().map(|e| e.as_ref().map_or([0.0; 2], |e| e.xi)).collect(),
        });
        // pass 2: assemble q = ∂t F² at the evaluation directions, then ∂tφ
        let nt = g.ntheta();
        let per_x = (0..g.n_xnodes())
            .into_par_iter()
            .map(|xn| {
                let (i1, i2) = (xn / nx2, xn % nx2);
                let pinned = self.pinned(i1, i2);
                let here = &evals[xn * m..(xn + 1) * m];
                let mut dphi = vec![0.0; nt];
                let mut ric = vec![f64::NAN; nt];
                let base = g.idx(i1, i2, 0);
                if here.iter().any(|e| e.is_none()) {
                    return (dphi, ric);
                }
                let here: Vec<&NodeEval> = here.iter().map(|e| e.as_ref().unwrap()).collect();
                if self.projection && !deturck {
                    // Riemannian 2-D Ricci flow stays in its conformal class
                    let r = here[0].ric;
                    ric.fill(r);
                    if !pinned {
                        for it in 0..nt {
                            dphi[it] = -phi[base + it] * r;
                        }
                    }
                    return (dphi, ric);
                }
                let q: Vec<f64> = here
                    .iter()
                    .enumerate()
                    .map(|(j, e)| {
                        let mut q = -2.0 * e.f2 * e.ric;
                        if let Some(xf) = &xi_field {
                            let dxi = [xf.derivative(i1, i2, j, 0), xf.derivative(i1, i2, j, 1)];
                            let y = g.direction(self.eval_thetas[j]).arr();
                            q -= complete_lift(e.f2_x, e.f2_y, e.xi, dxi, y);
                        }
                        q
                    })
                    .collect();
                if self.projection {
                    let (a, b, c) = fit_quadratic(&q);
                    let rbar = here.iter().map(|e| e.ric).sum::<f64>() / m as f64;
                    ric.fill(rbar);
                    if !pinned {
                        for it in 0..nt {
                            let th = g.theta(it);
                            let qv = a + b * (2.0 * th).cos() + c * (2.0 * th).sin();
                            dphi[it] = qv / (2.0 * phi[base + it]);
                        }
                    }
                } else {
                    for it in 0..nt {
                        ric[it] = here[it].ric;
                        if !pinned {
                            dphi[it] = q[it] / (2.0 * phi[base + it]);
                        }
                    }
                }
                (dphi, ric)
            })
            .collect::<Vec<_>>();
        let mut dphi = Vec::with_capacity(g.len());
        let mut ric = Vec::with_capacity(g.len());
        for (d, r) in per_x {
            dphi.extend(d);
            ric.extend(r);
        }
        self.boundary_rate(t, &mut dphi)?;
        Ok(Evaluation { dphi, ric, xi: xi_field })
    }

    /// Substep count for `dt` from the current metric (auto mode).
    pub fn auto_substeps(&self, metric: &MetricField, dt: f64) -> u32 {
        let lam = metric.g.iter().map(|g| max_eig(&inverse(g))).fold(0.0, f64::max);
        let k2: f64 = self.grid.dx.iter().map(|d| 16.0 / 3.0 / (d * d)).sum();
        let rho = lam * k2;
        let limit = match self.integrator {
            Integrator::Rk4 => 2.78,
            Integrator::Euler => 2.0,
        };
        ((dt * rho / (0.9 * limit)).ceil() as u32).max(1)
    }

    /// Advance φ by `h` from `t`, given the stage-1 derivative `k1`.
    pub fn advance(&self, phi: &[f64], t: f64, h: f64, k1: &[f64]) -> Result<Vec<f64>> {
        let provider = |tt: f64, y: &[f64]| self.evaluate(y, tt, false).map(|e| e.dphi);
        let constrain = |tt: f64, y: &mut [f64]| self.constrain(tt, y);
        let out = match self.integrator {
            Integrator::Euler => euler_from(phi, t, h, k1, &constrain)?,
            Integrator::Rk4 => rk4_from(phi, t, h, k1, &provider, &constrain)?,
        };
        check_positive(&out, t + h, &self.grid)?;
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug)]
struct NodeEval {
    f2: f64,
    ric: f64,
    xi: [f64; 2],
    f2_x: [f64; 2],
    f2_y: [f64; 2],
}

/// Fit q(θ) ≈ A + B cos 2θ + C sin 2θ from 8 equally spaced samples.
fn fit_quadratic(q: &[f64]) -> (f64, f64, f64) {
    let n = q.len() as f64;
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    for (k, v) in q.iter().enumerate() {
        let th = 2.0 * PI * k as f64 / n;
        a += v;
        b += v * (2.0 * th).cos();
        c += v * (2.0 * th).sin();
    }
    (a / n, 2.0 * b / n, 2.0 * c / n)
}

fn check_positive(phi: &[f64], t: f64, grid: &SphereBundleGrid) -> Result<()> {
    if let Some(k) = phi.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        let (a, b, c) = grid.unflatten(k);
        return Err(Error::BlowUp { t, reason: format!("F = {} at node ({a}, {b}, {c})", phi[k]) });
    }
    Ok(())
}

type Rhs<'a> = dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + 'a;
type Constrain<'a> = dyn Fn(f64, &mut [f64]) -> Result<()> + 'a;

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

fn euler_from(y: &[f64], t: f64, h: f64, k1: &[f64], constrain: &Constrain) -> Result<Vec<f64>> {
    let mut out = axpy(y, h, k1);
    constrain(t + h, &mut out)?;
    Ok(out)
}

fn rk4_from(y: &[f64], t: f64, h: f64, k1: &[f64], f: &Rhs, constrain: &Constrain) -> Result<Vec<f64>> {
    let stage = |a: f64, k: &[f64], tt: f64| f(tt, &axpy(y, a, k));
    let k2 = stage(0.5 * h, k1, t + 0.5 * h)?;
    let k3 = stage(0.5 * h, &k2, t + 0.5 * h)?;
    let k4 = stage(h, &k3, t + h)?;
    let mut out: Vec<f64> = (0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    constrain(t + h, &mut out)?;
    Ok(out)
}

/// One explicit step of y' = f(t, y). Generic over the right-hand side, so
/// it serves scalar test problems as well as the field update.
pub fn step(y: &[f64], t: f64, dt: f64, integrator: Integrator, f: impl Fn(f64, &[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let k1 = f(t, y)?;
    let none = |_: f64, _: &mut [f64]| Ok(());
    let out = match integrator {
        Integrator::Euler => euler_from(y, t, dt, &k1, &none)?,
        Integrator::Rk4 => rk4_from(y, t, dt, &k1, &f, &none)?,
    };
    if let Some(v) = out.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::BlowUp { t: t + dt, reason: format!("value {v} after step") });
    }
    Ok(out)
}

/// Step a flow state by `dt` (one RK4 or Euler step, no substeps).
pub fn step_state(problem: &FlowProblem, state: &FlowState, dt: f64) -> Result<FlowState> {
    let k1 = problem.evaluate(&state.phi.values, state.t, false)?;
    let values = problem.advance(&state.phi.values, state.t, dt, &k1.dphi)?;
    Ok(FlowState { phi: FieldOnSM { grid: state.phi.grid.clone(), values }, t: state.t + dt })
}

/// −F·𝓡ic at every node.
pub fn ricci_rhs(problem: &FlowProblem, state: &FlowState) -> Result<FieldOnSM> {
    if problem.kind != FlowKind::Ricci {
        return Err(Error::InvalidParams("ricci_rhs needs a Ricci flow problem".into()));
    }
    let e = problem.evaluate(&state.phi.values, state.t, false)?;
    Ok(FieldOnSM { grid: problem.grid.clone(), values: e.dphi })
}

/// (−2F²𝓡ic − 𝓛_ξF²)/(2F) at every node.
pub fn deturck_step_rhs(problem: &FlowProblem, state: &FlowState) -> Result<FieldOnSM> {
    if problem.kind != FlowKind::Deturck {
        return Err(Error::InvalidParams("deturck_step_rhs needs a DeTurck flow problem".into()));
    }
    let e = problem.evaluate(&state.phi.values, state.t, false)?;
    Ok(FieldOnSM { grid: problem.grid.clone(), values: e.dphi })
}

/// Max over nodes and index triples of the Cartan-symmetry defect.
pub fn integrability_check(state: &FlowState) -> f64 {
    integrability_residual(&metric_field_spectral(&state.phi))
}

/// Advisory explicit-step bound 0.2·min(Δx², F²Δθ²)/max λ(g^{-1}).
pub fn stability_timestep(state: &FlowState) -> f64 {
    let grid = &state.phi.grid;
    let m = metric_field_spectral(&state.phi);
    let lam = m.g.iter().map(|g| max_eig(&inverse(g))).fold(0.0, f64::max);
    let dx2 = grid.dx.iter().fold(f64::INFINITY, |a, d| a.min(d * d));
    let f2min = state.phi.values.iter().fold(f64::INFINITY, |a, v| a.min(v * v));
    0.2 * dx2.min(f2min * grid.dtheta * grid.dtheta) / lam
}

fn diagnostics(metric: &MetricField, ric: &[f64], t: f64, dt: f64) -> DiagnosticsRecord {
    DiagnosticsRecord {
        t,
        min_eig_g: ellipticity_monitor(metric),
        integrability_residual: integrability_residual(metric),
        max_abs_ric: ric.iter().filter(|v| v.is_finite()).fold(0.0, |a, v| a.max(v.abs())),
        dt,
    }
}

/// Integrate the configured flow from t = 0 to `t_end`.
///
/// Configuration problems are returned as errors before any stepping. Once
/// stepping has begun, BlowUp, DegenerateMetric and LeftChart end the run
/// early: the partial trajectory is returned with `stop` set.
pub fn run_flow(cfg: &RunConfig) -> Result<Trajectory> {
    let (problem, state) = FlowProblem::from_config(cfg)?;
    Ok(run_problem(&problem, state, &cfg.flow, &cfg.tolerances))
}

pub fn run_problem(problem: &FlowProblem, mut state: FlowState, flow: &FlowSection, tol: &Tolerances) -> Trajectory {
    let nsteps = ((flow.t_end / flow.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut traj = Trajectory {
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        events: Vec::new(),
        stop: None,
        xi_history: Vec::new(),
        final_state: state.clone(),
    };
    let mut last_ric: Vec<f64> = Vec::new();
    let mut last_dt = 0.0;
    let mut alarmed = false;
    let result = (|| -> Result<()> {
        for n in 0..=nsteps {
            let t_n = if n == nsteps { flow.t_end } else { n as f64 * flow.dt };
            state.t = t_n;
            let snap = n % flow.snapshot_stride == 0 || n == nsteps;
            let metric = metric_field_spectral(&state.phi);
            let min_eig = ellipticity_monitor(&metric);
            if !(min_eig > tol.degeneracy) {
                return Err(Error::DegenerateMetric { min_eig, node: None });
            }
            let dt_n = if n == nsteps { 0.0 } else { (flow.t_end - t_n).min(flow.dt) };
            let nsub = match (n == nsteps, flow.substeps) {
                (true, _) => 1,
                (false, 0) => problem.auto_substeps(&metric, dt_n),
                (false, s) => s,
            };
            let h = dt_n / nsub as f64;
            let k1 = problem.evaluate(&state.phi.values, t_n, snap)?;
            last_ric.clone_from(&k1.ric);
            if let Some(xi) = &k1.xi {
                traj.xi_history.push((t_n, xi.base_average()));
            }
            if snap {
                let d = diagnostics(&metric, &k1.ric, t_n, if n == nsteps { last_dt } else { h });
                if d.integrability_residual > tol.integrability_alarm && !alarmed {
                    alarmed = true;
                    traj.events.push(Event {
                        t: t_n,
                        kind: "integrability_alarm".into(),
                        message: format!("residual {:e} exceeds {:e}", d.integrability_residual, tol.integrability_alarm),
                    });
                }
                traj.diagnostics.push(d);
                traj.snapshots.push(Snapshot { t: t_n, phi: state.phi.clone(), ric: k1.ric.clone() });
            }
            if n == nsteps {
                break;
            }
            let mut phi = problem.advance(&state.phi.values, t_n, h, &k1.dphi)?;
            for s in 1..nsub {
                let ts = t_n + s as f64 * h;
                let k = problem.evaluate(&phi, ts, false)?;
                phi = problem.advance(&phi, ts, h, &k.dphi)?;
            }
            state.phi.values = phi;
            last_dt = h;
        }
        Ok(())
    })();
    if let Err(e) = result {
        let metric = metric_field_spectral(&state.phi);
        traj.diagnostics.push(diagnostics(&metric, &last_ric, state.t, last_dt));
        traj.events.push(Event { t: state.t, kind: "stop".into(), message: e.to_string() });
        traj.stop = Some(e);
    }
    traj.final_state = state;
    traj
}
