//! Experiment configuration: a TOML file with a versioned `schema` key,
//! overlaid by command-line flags and then resolved to concrete values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use polygin::kernels::{KernelSpec, Variant};
use polygin::sampler::replicate_seeds;
use polygin::statistics::{DEFAULT_ANGLES, DEFAULT_RADIAL_NODES, DEFAULT_TOLERANCE};
use polygin::theory::TestFunction;

use crate::CliError;

pub const SCHEMA: &str = "polygin-experiment/1";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nr: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ntheta: Option<usize>,
    /// Bound on the relative gap between the grid and its refinement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Either an explicit `list` or `seed` plus `count` consecutive seeds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Sample CSV read by `stats` instead of drawing fresh samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    /// `variance` fails when the relative error against the prediction exceeds this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_relative_error: Option<f64>,
    /// `clt` fails when `|k3|` or `|k4|` exceeds this many standard errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Highest cumulant order reported by `stats`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub schema: String,
    #[serde(default)]
    pub spec: SpecConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn take<T: Clone>(dst: &mut Option<T>, src: &Option<T>) {
    if src.is_some() {
        dst.clone_from(src);
    }
}

impl ExperimentConfig {
    pub fn new() -> Self {
        Self { schema: SCHEMA.into(), ..Self::default() }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        if cfg.schema != SCHEMA {
            return Err(CliError::Usage(format!(
                "config {} has schema {:?}, expected {SCHEMA:?}",
                path.display(),
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    /// Values set in `flags` replace those in `self`.
    pub fn overlay(&mut self, flags: &ExperimentConfig) {
        take(&mut self.spec.n, &flags.spec.n);
        take(&mut self.spec.q, &flags.spec.q);
        take(&mut self.spec.variant, &flags.spec.variant);
        take(&mut self.g, &flags.g);
        take(&mut self.grid.nr, &flags.grid.nr);
        take(&mut self.grid.ntheta, &flags.grid.ntheta);
        take(&mut self.grid.tolerance, &flags.grid.tolerance);
        if flags.seeds.list.is_some() {
            self.seeds = flags.seeds.clone();
        } else if flags.seeds.seed.is_some() || flags.seeds.count.is_some() {
            self.seeds.list = None;
            take(&mut self.seeds.seed, &flags.seeds.seed);
            take(&mut self.seeds.count, &flags.seeds.count);
        }
        take(&mut self.output.path, &flags.output.path);
        take(&mut self.output.input, &flags.output.input);
        take(&mut self.verify.suite, &flags.verify.suite);
        take(&mut self.verify.max_relative_error, &flags.verify.max_relative_error);
        take(&mut self.verify.sigma, &flags.verify.sigma);
        take(&mut self.verify.k_max, &flags.verify.k_max);
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, CliError> {
        let n = self.spec.n.ok_or_else(|| CliError::Usage("missing --n".into()))?;
        let q = self.spec.q.ok_or_else(|| CliError::Usage("missing --q".into()))?;
        Ok(KernelSpec::new(n, q, self.spec.variant.unwrap_or(Variant::Full))?)
    }

    pub fn resolve_spec(&mut self) -> Result<KernelSpec, CliError> {
        let spec = self.kernel_spec()?;
        self.spec.variant = Some(spec.variant);
        Ok(spec)
    }

    pub fn resolve_g(&self) -> Result<TestFunction, CliError> {
        let src = self.g.as_deref().ok_or_else(|| CliError::Usage("missing --g".into()))?;
        Ok(TestFunction::parse(src)?)
    }

    pub fn resolve_grid(&mut self) -> Result<(usize, usize, f64), CliError> {
        let nr = *self.grid.nr.get_or_insert(DEFAULT_RADIAL_NODES);
        let ntheta = *self.grid.ntheta.get_or_insert(DEFAULT_ANGLES);
        let tol = *self.grid.tolerance.get_or_insert(DEFAULT_TOLERANCE);
        if !(tol > 0.0) {
            return Err(CliError::Usage(format!("grid tolerance must be positive, got {tol}")));
        }
        Ok((nr, ntheta, tol))
    }

    pub fn resolve_seeds(&mut self, default_count: usize) -> Result<Vec<u64>, CliError> {
        if let Some(list) = &self.seeds.list {
            if self.seeds.seed.is_some() || self.seeds.count.is_some() {
                return Err(CliError::Usage("give either a seed list or seed and count, not both".into()));
            }
            if list.is_empty() {
                return Err(CliError::Usage("seed list is empty".into()));
            }
            return Ok(list.clone());
        }
        let seed = *self.seeds.seed.get_or_insert(0);
        let count = *self.seeds.count.get_or_insert(default_count);
        if count == 0 {
            return Err(CliError::Usage("sample count must be positive".into()));
        }
        Ok(replicate_seeds(seed, count))
    }

    /// The output path, after checking that its directory exists.
    pub fn output_path(&self, required: bool) -> Result<Option<PathBuf>, CliError> {
        match &self.output.path {
            None if required => Err(CliError::Usage("missing --out".into())),
            None => Ok(None),
            Some(p) => {
                let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
                if !dir.is_dir() {
                    return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
                }
                Ok(Some(p.clone()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let mut file: ExperimentConfig = toml::from_str(
            r#"
            schema = "polygin-experiment/1"
            g = "re"
            [spec]
            n = 10
            q = 2
            variant = "pure"
            [seeds]
            list = [1, 2, 3]
            "#,
        )
        .unwrap();
        let mut flags = ExperimentConfig::default();
        flags.spec.n = Some(20);
        flags.seeds.seed = Some(9);
        file.overlay(&flags);
        let spec = file.resolve_spec().unwrap();
        assert_eq!((spec.n, spec.q, spec.variant), (20, 2, Variant::Pure));
        assert_eq!(file.resolve_seeds(5).unwrap(), vec![9, 10, 11, 12, 13]);
        assert_eq!(file.g.as_deref(), Some("re"));
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let mut cfg = ExperimentConfig::new();
        cfg.spec.n = Some(4);
        cfg.spec.q = Some(3);
        cfg.g = Some("bump(0.5, 0.2)*harm(1)".into());
        cfg.resolve_spec().unwrap();
        cfg.resolve_grid().unwrap();
        cfg.resolve_seeds(200).unwrap();
        let back: ExperimentConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn conflicting_seed_sources_are_rejected() {
        let mut cfg = ExperimentConfig::new();
        cfg.seeds = SeedConfig { seed: Some(1), count: None, list: Some(vec![4]) };
        assert!(matches!(cfg.resolve_seeds(10), Err(CliError::Usage(_))));
        cfg.seeds = SeedConfig { seed: None, count: Some(0), list: None };
        assert!(matches!(cfg.resolve_seeds(10), Err(CliError::Usage(_))));
    }
}
