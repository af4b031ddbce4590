//! Run manifest: one TOML file describing geometry, motion, data, solver
//! settings, the experiment and where outputs go.
//!
//! ```toml
//! experiment = "nonlinear"
//! seed = 7
//!
//! [geometry]
//! r = 8.0
//! h = 0.5
//!
//! [data]
//! preset = "still"
//! amplitude = 1.0
//!
//! [solver]
//! k = 16
//! n_t = 16
//! ```
//!
//! Unknown keys are rejected. Relative file paths are resolved against the
//! manifest's directory.

use crate::error::{Error, Result};
use crate::forcing::Forcing;
use crate::geometry::BodySpec;
use crate::linear::{ExtensionCoupling, ExtensionLayer, LinearConfig};
use crate::motion::MotionConfig;
use crate::oseen::OseenConfig;
use crate::presets::Preset;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Basis,
    Linear,
    Invade,
    Oseen,
    Nonlinear,
    Uniqueness,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Basis,
        Experiment::Linear,
        Experiment::Invade,
        Experiment::Oseen,
        Experiment::Nonlinear,
        Experiment::Uniqueness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Basis => "basis",
            Experiment::Linear => "linear",
            Experiment::Invade => "invade",
            Experiment::Oseen => "oseen",
            Experiment::Nonlinear => "nonlinear",
            Experiment::Uniqueness => "uniqueness",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    /// Radius of the truncated domain.
    pub r: f64,
    pub h: f64,
    /// Body radius; the preset's when absent.
    pub body_radius: Option<f64>,
    /// Support radius of the boundary extension; the preset's when absent.
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub preset: String,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// TOML file holding a `Forcing`; replaces the preset forcing and is
    /// scaled by `amplitude`.
    pub forcing_file: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub k: usize,
    pub n_t: usize,
    #[serde(default = "default_eps")]
    pub eps_target: f64,
    #[serde(default = "default_eigen_tol")]
    pub eigen_tol: f64,
    /// Fixed-point tolerance.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Linearised convection of the extension in the linear runs.
    #[serde(default = "yes")]
    pub coupling: bool,
}

fn default_eps() -> f64 {
    0.25
}
fn default_eigen_tol() -> f64 {
    1e-8
}
fn default_tol() -> f64 {
    crate::nonlinear::picard::DEFAULT_TOL
}
fn default_max_iter() -> usize {
    crate::nonlinear::picard::DEFAULT_MAX_ITER
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvadeBlock {
    pub radii: Vec<f64>,
    pub window: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OseenBlock {
    pub r_bar: f64,
    pub box_n: Option<usize>,
    pub box_l: Option<f64>,
    pub image_factor: Option<usize>,
    pub filter: Option<f64>,
    pub n_out: Option<usize>,
    pub ray_samples: Option<usize>,
    pub periods: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Output directory; `--out` overrides it.
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub dumps: bool,
    #[serde(default = "yes")]
    pub plots: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: None, dumps: true, plots: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Checked against the subcommand when present.
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometryBlock,
    /// Replaces the preset motion.
    pub motion: Option<MotionConfig>,
    pub data: DataBlock,
    pub solver: SolverBlock,
    pub invade: Option<InvadeBlock>,
    pub oseen: Option<OseenBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Manifest(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunManifest {
    /// Parses and validates; relative paths are resolved against `base`.
    pub fn from_toml_str(s: &str, base: &Path) -> Result<Self> {
        let mut m: RunManifest = toml::from_str(s).map_err(|e| Error::Manifest(e.to_string()))?;
        if let Some(f) = &m.data.forcing_file {
            if f.is_relative() {
                m.data.forcing_file = Some(base.join(f));
            }
        }
        if let Some(d) = &m.output.dir {
            if d.is_relative() {
                m.output.dir = Some(base.join(d));
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        positive("geometry.r", self.geometry.r)?;
        positive("geometry.h", self.geometry.h)?;
        if let Some(b) = self.geometry.body_radius {
            positive("geometry.body_radius", b)?;
        }
        if let Some(r) = self.geometry.rho {
            positive("geometry.rho", r)?;
        }
        Preset::parse(&self.data.preset)?;
        if !self.data.amplitude.is_finite() {
            return Err(Error::Manifest("data.amplitude must be finite".into()));
        }
        if let Some(f) = &self.data.forcing_file {
            if !f.is_file() {
                return Err(Error::Manifest(format!("data.forcing_file {} does not exist", f.display())));
            }
        }
        if self.solver.n_t == 0 {
            return Err(Error::Manifest("solver.n_t must be at least 1".into()));
        }
        positive("solver.eps_target", self.solver.eps_target)?;
        positive("solver.eigen_tol", self.solver.eigen_tol)?;
        positive("solver.tol", self.solver.tol)?;
        if self.solver.max_iter == 0 {
            return Err(Error::Manifest("solver.max_iter must be at least 1".into()));
        }
        if let Some(m) = &self.motion {
            m.to_spec()?;
        }
        if let Some(o) = &self.oseen {
            positive("oseen.r_bar", o.r_bar)?;
        }
        Ok(())
    }

    pub fn preset(&self) -> Result<Preset> {
        Preset::parse(&self.data.preset)
    }

    pub fn forcing(&self) -> Result<Forcing> {
        match &self.data.forcing_file {
            Some(p) => {
                let s = std::fs::read_to_string(p)?;
                let f: Forcing = toml::from_str(&s)
                    .map_err(|e| Error::Manifest(format!("{}: {e}", p.display())))?;
                Ok(f.scaled(self.data.amplitude))
            }
            None => Ok(self.preset()?.forcing(self.data.amplitude)),
        }
    }

    /// Linear configuration; `seed` drives the eigensolver start block.
    pub fn linear_config(&self, seed: u64) -> Result<LinearConfig> {
        let p = self.preset()?;
        let g = &self.geometry;
        let s = &self.solver;
        let mut cfg = p.linear_config(g.r, g.h, s.k, s.n_t, self.data.amplitude);
        if let Some(b) = g.body_radius {
            cfg.body = BodySpec::sphere(b)?;
        }
        if let Some(rho) = g.rho {
            cfg.rho = rho;
        }
        if let Some(m) = &self.motion {
            cfg.motion = m.to_spec()?;
        }
        cfg.forcing = self.forcing()?;
        cfg.layer = ExtensionLayer::Auto { eps_target: s.eps_target };
        cfg.coupling = if s.coupling { ExtensionCoupling::On } else { ExtensionCoupling::Off };
        cfg.eigen.tol = s.eigen_tol;
        cfg.eigen.seed = seed;
        Ok(cfg)
    }

    pub fn oseen_config(&self, seed: u64) -> Result<OseenConfig> {
        let o = self.oseen.as_ref().ok_or_else(|| Error::Manifest("missing [oseen] block".into()))?;
        let mut c = OseenConfig::new(self.linear_config(seed)?, o.r_bar);
        c.box_n = o.box_n.unwrap_or(c.box_n);
        c.box_l = o.box_l.or(c.box_l);
        c.image_factor = o.image_factor.unwrap_or(c.image_factor);
        c.filter = o.filter.unwrap_or(c.filter);
        c.n_out = o.n_out.unwrap_or(c.n_out);
        c.ray_samples = o.ray_samples.unwrap_or(c.ray_samples);
        c.periods = o.periods.or(c.periods);
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }
}
