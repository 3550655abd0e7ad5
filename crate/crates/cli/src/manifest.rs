//! Dataset manifest: the ordered pass list plus the intensity, prediction,
//! and optional ground-truth volumes, with an output directory.
//!
//! Relative paths are resolved against the manifest's own directory, so a
//! generated dataset stays relocatable.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use segrefine_core::volume::io::load_volume;
use segrefine_core::{PassStack, Volume3};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub passes: Vec<PathBuf>,
    pub intensity: PathBuf,
    pub prediction: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    pub output_dir: PathBuf,
}

/// All volumes of a manifest loaded and geometry-checked.
pub struct LoadedDataset {
    pub passes: PassStack,
    pub intensity: Volume3,
    pub prediction: Volume3,
    pub ground_truth: Option<Volume3>,
}

impl Manifest {
    /// Parses the manifest and verifies that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        for (field, p) in manifest.named_paths() {
            let resolved = resolve(&base, &p);
            if !resolved.exists() {
                bail!(
                    "manifest field {field}: file not found: {}",
                    resolved.display()
                );
            }
        }
        Ok(manifest)
    }

    fn named_paths(&self) -> Vec<(String, PathBuf)> {
        let mut out: Vec<(String, PathBuf)> = self
            .passes
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("passes[{i}]"), p.clone()))
            .collect();
        out.push(("intensity".to_string(), self.intensity.clone()));
        out.push(("prediction".to_string(), self.prediction.clone()));
        if let Some(gt) = &self.ground_truth {
            out.push(("ground_truth".to_string(), gt.clone()));
        }
        out
    }

    /// Output directory resolved against the manifest location.
    pub fn resolved_output_dir(&self, manifest_path: &Path) -> PathBuf {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        resolve(base, &self.output_dir)
    }

    /// Loads only the pass volumes.
    pub fn load_passes(&self, manifest_path: &Path) -> Result<PassStack> {
        if self.passes.is_empty() {
            bail!("manifest field passes: the pass list is empty");
        }
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut passes = Vec::with_capacity(self.passes.len());
        for (i, p) in self.passes.iter().enumerate() {
            let vol =
                load_volume(&resolve(base, p)).with_context(|| format!("loading passes[{i}]"))?;
            passes.push(vol);
        }
        Ok(PassStack::new(passes)?)
    }

    /// Loads every volume and checks that all share one geometry.
    pub fn load_all(&self, manifest_path: &Path) -> Result<LoadedDataset> {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let passes = self.load_passes(manifest_path)?;
        let intensity =
            load_volume(&resolve(base, &self.intensity)).context("loading intensity")?;
        let prediction =
            load_volume(&resolve(base, &self.prediction)).context("loading prediction")?;
        let ground_truth = match &self.ground_truth {
            Some(p) => Some(load_volume(&resolve(base, p)).context("loading ground_truth")?),
            None => None,
        };
        intensity.check_same_geometry(&passes.passes()[0], "intensity vs passes")?;
        intensity.check_same_geometry(&prediction, "intensity vs prediction")?;
        if let Some(gt) = &ground_truth {
            intensity.check_same_geometry(gt, "intensity vs ground_truth")?;
        }
        Ok(LoadedDataset {
            passes,
            intensity,
            prediction,
            ground_truth,
        })
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
