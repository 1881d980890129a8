use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::import::{import_ensemble, import_file, ImportedEnsemble};
use super::ExperimentError;
use crate::ensemble::{EnsembleFile, MetStructure};
use crate::optimizer::{Method, OptimizerConfig};
use crate::structure::{StructureCandidate, StructureSpec, SurfaceConfig};
use crate::threshold::{Channel, EvalConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Threshold,
    Optimize,
    Joint,
    Surface,
}

/// Inline ensemble or a path to an ensemble file (relative paths resolve
/// against the config file's directory).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleSource {
    Path(PathBuf),
    Inline(EnsembleFile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetVarSlot {
    pub b: Vec<u32>,
    pub d: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetChkSlot {
    pub d: Vec<u32>,
}

/// Allowed degrees without coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FixedStructure {
    Standard { rate: f64, lambda: Vec<u32>, rho: Vec<u32> },
    Met { rate: f64, m_e: usize, var_types: Vec<MetVarSlot>, chk_types: Vec<MetChkSlot> },
}

impl FixedStructure {
    pub fn candidate(&self) -> Result<(StructureCandidate, f64), ExperimentError> {
        match self {
            FixedStructure::Standard { rate, lambda, rho } => Ok((StructureCandidate::standard(lambda, rho), *rate)),
            FixedStructure::Met { rate, m_e, var_types, chk_types } => {
                let vars = var_types
                    .iter()
                    .map(|v| match v.b.as_slice() {
                        [0, 1] => Ok((false, v.d.clone())),
                        [1, 0] => Ok((true, v.d.clone())),
                        _ => Err(ExperimentError::Config(format!("received vector {:?} must be [0,1] or [1,0]", v.b))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let s = MetStructure { edge_classes: *m_e, var_types: vars, chk_types: chk_types.iter().map(|c| c.d.clone()).collect() };
                Ok((StructureCandidate::Met(s), *rate))
            }
        }
    }
}

/// Decoder and bisection overrides; unset fields keep the channel defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderSettings {
    pub max_iterations: Option<usize>,
    pub conv_tol: Option<f64>,
    pub bisect_tol: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub awgn_bound: Option<f64>,
    pub awgn_resolution: Option<u32>,
    pub awgn_err_tol: Option<f64>,
}

impl DecoderSettings {
    pub fn apply(&self, mut e: EvalConfig) -> EvalConfig {
        if let Some(l) = self.max_iterations {
            e.bec.max_iterations = l;
            e.awgn.max_iterations = l;
        }
        if let Some(x) = self.conv_tol {
            e.bec.conv_tol = x;
        }
        if let Some(x) = self.bisect_tol {
            e.bisect_tol = x;
        }
        if let Some(x) = self.lo {
            e.lo = x;
        }
        if let Some(x) = self.hi {
            e.hi = x;
        }
        if let Some(x) = self.awgn_bound {
            e.awgn.bound = x;
        }
        if let Some(x) = self.awgn_resolution {
            e.awgn.resolution = x;
        }
        if let Some(x) = self.awgn_err_tol {
            e.awgn.err_tol = x;
        }
        e
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn ar() -> Method {
    Method::Ar
}

/// One experiment, read from a JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default = "bec")]
    pub channel: Channel,
    #[serde(default)]
    pub ensemble: Option<EnsembleSource>,
    /// Re-solve a rounded imported ensemble onto the constraints before
    /// computing its threshold.
    #[serde(default = "yes")]
    pub project: bool,
    #[serde(default)]
    pub structure: Option<FixedStructure>,
    #[serde(default)]
    pub spec: Option<StructureSpec>,
    #[serde(default)]
    pub surface: Option<SurfaceConfig>,
    #[serde(default = "ar")]
    pub method: Method,
    /// Overrides on top of the inner optimizer defaults.
    #[serde(default)]
    pub optimizer: serde_json::Map<String, serde_json::Value>,
    #[serde(default = "ar")]
    pub outer_method: Method,
    /// Overrides on top of the outer optimizer defaults.
    #[serde(default)]
    pub outer: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub decoder: DecoderSettings,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Directory used to resolve relative ensemble paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn bec() -> Channel {
    Channel::Bec
}

fn overlay(base: OptimizerConfig, over: &serde_json::Map<String, serde_json::Value>) -> Result<OptimizerConfig, ExperimentError> {
    let mut v = serde_json::to_value(base).map_err(|e| ExperimentError::Config(e.to_string()))?;
    if let Some(obj) = v.as_object_mut() {
        for (k, x) in over {
            obj.insert(k.clone(), x.clone());
        }
    }
    serde_json::from_value(v).map_err(|e| ExperimentError::Config(format!("optimizer settings: {e}")))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig, ExperimentError> {
        overlay(OptimizerConfig::default(), &self.optimizer)
    }

    pub fn outer_config(&self) -> Result<OptimizerConfig, ExperimentError> {
        overlay(OptimizerConfig::outer(), &self.outer)
    }

    pub fn load_ensemble(&self) -> Result<Option<ImportedEnsemble>, ExperimentError> {
        match &self.ensemble {
            None => Ok(None),
            Some(EnsembleSource::Inline(f)) => import_file(f).map(Some),
            Some(EnsembleSource::Path(p)) => {
                let p = match &self.base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.clone(),
                };
                import_ensemble(&p).map(Some)
            }
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        let inner = self.optimizer_config()?;
        inner.validate(self.method).map_err(|e| ExperimentError::Config(e.to_string()))?;
        match self.kind {
            Kind::Threshold if self.ensemble.is_none() => fail("threshold needs an ensemble"),
            Kind::Optimize if self.ensemble.is_none() && self.structure.is_none() => {
                fail("optimize needs a structure or an ensemble")
            }
            Kind::Joint => {
                let Some(spec) = &self.spec else { return fail("joint needs a spec") };
                spec.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
                self.outer_config()?.validate(self.outer_method).map_err(|e| ExperimentError::Config(e.to_string()))
            }
            Kind::Surface if self.surface.is_none() => fail("surface needs a surface block"),
            Kind::Surface if self.spec.is_none() && self.structure.is_none() && self.ensemble.is_none() => {
                fail("surface needs a structure, an ensemble or a spec")
            }
            _ => Ok(()),
        }
    }
}
