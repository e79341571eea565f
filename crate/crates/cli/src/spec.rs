//! Experiment files for `simulate`.
//!
//! ```toml
//! replications = 25
//! seed = 0
//! horizon = "2*sum_alpha"
//! variant = "allocate-first"
//!
//! [params]
//! k_c = 1.0
//! k_a = 0.45
//!
//! [schedule]
//! kind = "annealed"     # annealed | fixed | infinite
//! gamma0 = 1.0
//!
//! [instance]            # same keys as an instance file
//! alpha = 45
//! beta = 50
//! lambda = { blocks = [0.5, 0.8] }
//! generator = { kind = "random_regular", n = 50, d = 10, seed = 1 }
//!
//! [output]
//! dir = "results"
//! trace = false
//! ```
//!
//! `instance_file = "path"` may replace the `[instance]` table. Relative paths
//! are resolved against the directory of the experiment file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use storalloc::dynamics::{GammaSchedule, MoveVariant};
use storalloc::io::{load_instance, InstanceSpec};
use storalloc::{GameParams, Instance};

use crate::horizon::DEFAULT_HORIZON;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub instance: Option<InstanceSpec>,
    #[serde(default)]
    pub instance_file: Option<PathBuf>,
    pub params: GameParams,
    #[serde(default)]
    pub schedule: GammaSchedule,
    #[serde(default)]
    pub variant: MoveVariant,
    #[serde(default = "default_horizon")]
    pub horizon: String,
    #[serde(default = "one")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub trace: bool,
}

fn default_horizon() -> String {
    DEFAULT_HORIZON.to_string()
}

fn one() -> u64 {
    1
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut spec: ExperimentSpec =
            toml::from_str(&text).with_context(|| format!("parsing experiment file {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(f) = spec.instance_file.as_mut() {
            *f = base.join(&*f);
        }
        if let Some(d) = spec.output.dir.as_mut() {
            *d = base.join(&*d);
        }
        Ok(spec)
    }

    pub fn build_instance(&self) -> Result<Instance> {
        match (&self.instance, &self.instance_file) {
            (Some(spec), None) => Ok(spec.build()?),
            (None, Some(path)) => load_instance(path).with_context(|| format!("loading {}", path.display())),
            (Some(_), Some(_)) => bail!("give either [instance] or instance_file, not both"),
            (None, None) => bail!("missing [instance] table or instance_file"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        GameParams::new(self.params.k_c, self.params.k_a)?;
        self.schedule.validate()?;
        if self.replications == 0 {
            bail!("replications must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
replications = 25
seed = 0
horizon = "2*sum_alpha"
variant = "allocate-first"

[params]
k_c = 1.0
k_a = 0.45

[schedule]
kind = "annealed"
gamma0 = 1.0

[instance]
alpha = 45
beta = 50
lambda = { blocks = [0.5, 0.8] }
generator = { kind = "random_regular", n = 50, d = 10, seed = 1 }

[output]
dir = "results"
trace = false
"#;
        let spec: ExperimentSpec = toml::from_str(text).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.build_instance().unwrap().len(), 50);
        assert_eq!(spec.schedule, GammaSchedule::Annealed { gamma0: 1.0, increment: None });
    }

    #[test]
    fn defaults_and_errors() {
        let spec: ExperimentSpec = toml::from_str(
            "instance_file = \"x.toml\"\n[params]\nk_c = 1.0\nk_a = 0.0\n",
        )
        .unwrap();
        assert_eq!(spec.replications, 1);
        assert_eq!(spec.horizon, DEFAULT_HORIZON);
        assert_eq!(spec.variant, MoveVariant::AllocateFirst);
        assert!(toml::from_str::<ExperimentSpec>("reps = 3\n[params]\nk_c = 1.0\nk_a = 0.0\n").is_err());
        let zero: ExperimentSpec = toml::from_str("replications = 0\n[params]\nk_c = 1.0\nk_a = 0.0\n").unwrap();
        assert!(zero.validate().is_err());
    }
}
