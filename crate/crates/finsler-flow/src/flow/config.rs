use crate::error::{Error, Result};
use crate::geometry::{BoundaryMode, SharedStructure};
use crate::reference::{catalog, Params};
use crate::sphere_bundle::GridSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
}

impl StructureSpec {
    pub fn new(name: &str, params: Params) -> Self {
        StructureSpec { name: name.into(), params }
    }

    pub fn build(&self) -> Result<SharedStructure> {
        catalog(&self.name, &self.params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Ricci,
    Deturck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

/// How the fiber (θ) dependence of the update is treated.
///
/// `riemannian` keeps F² a quadratic form in y: the Ricci update uses one
/// sampled Ricci value per base point, the DeTurck update is fitted to the
/// {1, cos 2θ, sin 2θ} modes from 8 equally spaced directions. `none` evolves
/// every node independently. `auto` picks `riemannian` for Riemannian data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FiberProjection {
    #[default]
    Auto,
    None,
    Riemannian,
}

/// Dirichlet data on a pinned boundary: the known exact solution, or the
/// initial values held fixed. `auto` uses the exact solution when one exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryData {
    #[default]
    Auto,
    Exact,
    Frozen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub kind: FlowKind,
    #[serde(default)]
    pub integrator: Integrator,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Internal substeps per `dt`; 0 picks the count from a stability estimate.
    #[serde(default)]
    pub substeps: u32,
    #[serde(default)]
    pub fiber_projection: FiberProjection,
    #[serde(default)]
    pub boundary_data: BoundaryData,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: default_dir(), formats: default_formats() }
    }
}

fn default_degeneracy() -> f64 {
    crate::geometry::DEGENERACY
}

fn default_alarm() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_degeneracy")]
    pub degeneracy: f64,
    #[serde(default = "default_alarm")]
    pub integrability_alarm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { degeneracy: default_degeneracy(), integrability_alarm: default_alarm() }
    }
}

/// A complete run description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub structure: StructureSpec,
    pub grid: GridSpec,
    pub flow: FlowSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<StructureSpec>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks everything that can be checked without stepping, including
    /// that the structures can be built on the requested grid.
    pub fn validate(&self) -> Result<()> {
        let f = &self.flow;
        let bad = |m: String| Err(Error::Config(m));
        if !(f.dt > 0.0 && f.dt.is_finite()) {
            return bad(format!("flow.dt must be positive, got {}", f.dt));
        }
        if !(f.t_end > 0.0 && f.t_end.is_finite()) {
            return bad(format!("flow.t_end must be positive, got {}", f.t_end));
        }
        if f.snapshot_stride == 0 {
            return bad("flow.snapshot_stride must be ≥ 1".into());
        }
        if !(self.tolerances.degeneracy >= 0.0) || !(self.tolerances.integrability_alarm > 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats is empty".into());
        }
        match (f.kind, &self.background) {
            (FlowKind::Deturck, None) => return bad("a deturck flow needs a [background] structure".into()),
            (FlowKind::Ricci, Some(_)) => return bad("[background] is only meaningful for kind = \"deturck\"".into()),
            _ => {}
        }
        crate::sphere_bundle::SphereBundleGrid::new(self.grid.clone())?;
        let s = self.structure.build().map_err(config_error)?;
        let h = self.background.as_ref().map(|b| b.build()).transpose().map_err(config_error)?;
        let riemannian = s.is_riemannian() && h.as_ref().is_none_or(|h| h.is_riemannian());
        if f.fiber_projection == FiberProjection::Riemannian && !riemannian {
            return bad("fiber_projection = \"riemannian\" needs Riemannian structures".into());
        }
        if self.projection(riemannian) && f.kind == FlowKind::Deturck && !self.grid.ntheta.is_multiple_of(8) {
            return bad(format!("the Riemannian DeTurck update needs ntheta divisible by 8, got {}", self.grid.ntheta));
        }
        if self.grid.boundary == BoundaryMode::Periodic {
            let d = s.domain();
            let ok = d.boundary == BoundaryMode::Periodic && d.bounds == Some(self.grid.bounds) || x_independent(&self.structure.name);
            if !ok {
                return bad(format!("structure `{}` is not periodic on the grid bounds", self.structure.name));
            }
        }
        if f.boundary_data == BoundaryData::Exact && self.grid.boundary == BoundaryMode::Pinned {
            let known = crate::reference::exact_solution(&self.structure.name, &self.structure.params, 0.0)?;
            if known.is_none() || f.kind == FlowKind::Deturck {
                return bad(format!("no exact boundary data for a {:?} flow of `{}`", f.kind, self.structure.name));
            }
        }
        Ok(())
    }

    /// Whether the Riemannian fiber treatment is in effect.
    pub fn projection(&self, riemannian: bool) -> bool {
        match self.flow.fiber_projection {
            FiberProjection::None => false,
            FiberProjection::Riemannian => true,
            FiberProjection::Auto => riemannian,
        }
    }
}

fn x_independent(name: &str) -> bool {
    matches!(name, "euclidean" | "randers_flat")
}

/// Errors while building structures from a config are configuration errors.
fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidParams(m) => Error::Config(m),
        Error::UnknownEntry(n) => Error::Config(format!("unknown catalog entry `{n}`")),
        Error::InvalidTime(t) => Error::Config(format!("invalid time parameter {t}")),
        Error::Io(m) => Error::Config(m),
        e => e,
    }
}
