use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::backends::{BackendConfig, BackendKind};
use crate::dataset::{Split, SplitRatios};
use crate::resources::PowerProfile;

fn default_n_bins() -> usize {
    10
}

/// Everything needed to reproduce a run. Contains no secrets: credentials are
/// referenced by environment variable name inside `backend`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_id: String,
    pub manifest_path: PathBuf,
    pub split: Split,
    /// Used only when the manifest leaves splits unassigned.
    #[serde(default)]
    pub split_ratios: SplitRatios,
    pub backend: BackendConfig,
    #[serde(default)]
    pub filter_artifact_paths: Vec<PathBuf>,
    #[serde(default = "PowerProfile::placeholder")]
    pub power_profile: PowerProfile,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_bins")]
    pub n_bins: usize,
}

impl RunConfig {
    pub fn new(
        run_id: impl Into<String>,
        manifest_path: impl Into<PathBuf>,
        split: Split,
        backend: BackendConfig,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            run_id: run_id.into(),
            manifest_path: manifest_path.into(),
            split,
            split_ratios: SplitRatios::default(),
            backend,
            filter_artifact_paths: Vec::new(),
            power_profile: PowerProfile::placeholder(),
            output_dir: output_dir.into(),
            seed: 0,
            n_bins: default_n_bins(),
        }
    }

    /// Load a TOML run config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest_path);
        fix(&mut self.output_dir);
        self.filter_artifact_paths.iter_mut().for_each(fix);
        if let Some(script) = self.backend.mock_script_path.as_mut() {
            fix(script);
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.run_id)
    }

    /// Static checks plus existence of every referenced input path.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let id_ok = !self.run_id.is_empty()
            && self
                .run_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !self.run_id.starts_with('.');
        if !id_ok {
            return Err(HarnessError::Config(format!(
                "run_id `{}` must be non-empty and use only letters, digits, `-`, `_` or `.`",
                self.run_id
            )));
        }
        if self.n_bins == 0 {
            return Err(HarnessError::Config("n_bins must be >= 1".into()));
        }
        self.split_ratios.validate()?;
        self.backend.validate()?;
        self.power_profile.validate()?;
        let mut required: Vec<&Path> = vec![&self.manifest_path];
        required.extend(self.filter_artifact_paths.iter().map(PathBuf::as_path));
        if self.backend.kind == BackendKind::Mock {
            required.extend(self.backend.mock_script_path.as_deref());
        }
        for path in required {
            if !path.exists() {
                return Err(HarnessError::Config(format!(
                    "referenced path {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    /// Copy with every input path made absolute, so the snapshot can be
    /// replayed from any working directory.
    pub(crate) fn absolutized(&self) -> Result<Self, HarnessError> {
        let abs = |p: &Path| std::fs::canonicalize(p).map_err(HarnessError::io(p));
        let mut out = self.clone();
        out.manifest_path = abs(&self.manifest_path)?;
        out.filter_artifact_paths = self
            .filter_artifact_paths
            .iter()
            .map(|p| abs(p))
            .collect::<Result<_, _>>()?;
        if let Some(script) = &self.backend.mock_script_path {
            out.backend.mock_script_path = Some(abs(script)?);
        }
        out.output_dir = abs(&self.output_dir)?;
        Ok(out)
    }
}
