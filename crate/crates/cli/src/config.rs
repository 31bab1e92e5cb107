use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use polycontract::geometry::BoxSet;
use polycontract::harness::TrueSystem;
use polycontract::linsolve::InputSet;
use polycontract::synthesis::SynthesisSettings;
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    /// Noise bound of the consistency set.
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    /// Noise half-width of the simulated system; `epsilon` when absent.
    #[serde(default)]
    pub true_noise: Option<f64>,
    #[serde(default = "defaults::lambda_w")]
    pub lambda_w: f64,
    /// Number of recorded transitions.
    #[serde(default = "defaults::records")]
    pub records: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::state_bound")]
    pub state_bound: f64,
    #[serde(default = "defaults::input_bound")]
    pub input_bound: f64,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub enlarge: EnlargeSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Per-atom shift bounds; the smallest admissible ones when absent.
    #[serde(default)]
    pub shift_bounds: Option<Vec<f64>>,
    #[serde(default)]
    pub paths: Paths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub n_v: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnlargeSpec {
    /// Uniform candidates drawn from the state set.
    pub candidates: usize,
    /// Evenly spaced search directions.
    #[serde(default)]
    pub directions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub samples: usize,
    pub trajectories: usize,
    pub steps: usize,
}

/// Input artifacts; each defaults to its file name in the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub consistency: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub enlarged: Option<PathBuf>,
}

mod defaults {
    pub fn epsilon() -> f64 {
        0.4
    }
    pub fn lambda_w() -> f64 {
        0.99
    }
    pub fn records() -> usize {
        30
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn state_bound() -> f64 {
        4.0
    }
    pub fn input_bound() -> f64 {
        2.0
    }
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self { n_v: 12, radius: 0.25 }
    }
}

impl Default for EnlargeSpec {
    fn default() -> Self {
        Self { candidates: 20, directions: 0 }
    }
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self { samples: 10_000, trajectories: 100, steps: 20 }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str(r#"{"schema": 1}"#).expect("defaults parse")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            bail!("unsupported config schema {} (expected {SCHEMA})", self.schema);
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            bail!("epsilon must be positive, got {}", self.epsilon);
        }
        if let Some(w) = self.true_noise {
            if !(w.is_finite() && w >= 0.0) {
                bail!("true_noise must be non-negative, got {w}");
            }
        }
        if !(self.lambda_w > 0.0 && self.lambda_w <= 1.0) {
            bail!("lambda_w must lie in (0, 1], got {}", self.lambda_w);
        }
        if self.records == 0 {
            bail!("records must be at least 1");
        }
        if self.initial.n_v < 3 {
            bail!("initial.n_v must be at least 3, got {}", self.initial.n_v);
        }
        if !(self.initial.radius > 0.0 && self.state_bound > 0.0 && self.input_bound > 0.0) {
            bail!("radius and set bounds must be positive");
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        polycontract::sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn system(&self) -> Result<TrueSystem> {
        let mut sys = TrueSystem::planar_example();
        sys.noise = self.true_noise.unwrap_or(self.epsilon);
        sys.state_set = BoxSet::cube(2, self.state_bound)?;
        sys.input_set = BoxSet::cube(1, self.input_bound)?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn settings(&self) -> Result<SynthesisSettings> {
        let sys = self.system()?;
        Ok(SynthesisSettings::new(
            self.lambda_w,
            BoxSet::cube(2, self.epsilon)?,
            InputSet::Box(sys.input_set),
            sys.state_set,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_example() {
        let cfg = RunConfig::default();
        assert_eq!((cfg.epsilon, cfg.records, cfg.enlarge.candidates), (0.4, 30, 20));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |edit: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            edit(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.records = 0));
        assert!(bad(|c| c.epsilon = 0.0));
        assert!(bad(|c| c.lambda_w = 1.5));
        assert!(bad(|c| c.initial.n_v = 2));
        assert!(bad(|c| c.schema = 2));
    }

    #[test]
    fn unknown_fields_are_errors() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"schema": 1, "epsilom": 0.1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"epsilon": 0.1}"#).is_err());
    }
}
