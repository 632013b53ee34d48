//! Dataset manifests: a JSON document next to the diagram files recording the
//! generating spec, one entry per PHD1 file, and split membership. Training
//! pairs are drawn on the fly and never stored.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{generate_dataset, split, DatasetSpec};
use crate::error::{Error, Result};
use crate::phase::{generator_version, PhaseDiagram};
use crate::phd;

pub const FORMAT: &str = "nniqs-manifest";
pub const VERSION: u32 = 1;
pub const FILE_NAME: &str = "manifest.json";

/// How diagrams are assigned to train, validation, and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SplitRule {
    /// Seeded split of all diagrams by the spec's train fraction; no test set.
    Random,
    /// Diagrams with `w/g` in `[lo, hi]` are split into train and validation;
    /// the rest form the test set.
    UnseenW { lo: f64, hi: f64 },
    /// Every diagram is a test diagram.
    TestOnly,
}

impl SplitRule {
    pub const UNSEEN_W_DEFAULT: SplitRule = SplitRule::UnseenW { lo: 0.5, hi: 1.3 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub file: String,
    pub n_sites: usize,
    pub w_over_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub generator: String,
    pub spec: DatasetSpec,
    pub split: SplitRule,
    pub diagrams: Vec<Entry>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn diagram_file_name(n_sites: usize, w_over_g: f64, index: usize) -> String {
    format!("d{index:03}_n{n_sites}_w{w_over_g:.4}.phd")
}

/// Applies `rule` to diagrams with the given `w/g` values.
pub fn assign(w_values: &[f64], spec: &DatasetSpec, rule: SplitRule) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    match rule {
        SplitRule::Random => {
            let (train, val) = split(w_values.len(), spec.train_fraction, spec.seed)?;
            Ok((train, val, Vec::new()))
        }
        SplitRule::TestOnly => Ok((Vec::new(), Vec::new(), (0..w_values.len()).collect())),
        SplitRule::UnseenW { lo, hi } => {
            if !(lo <= hi) {
                return Err(Error::invalid(format!("unseen-w window [{lo}, {hi}] is empty")));
            }
            let (inside, test): (Vec<usize>, Vec<usize>) =
                (0..w_values.len()).partition(|&i| (lo..=hi).contains(&w_values[i]));
            let (a, b) = split(inside.len(), spec.train_fraction, spec.seed)?;
            Ok((a.iter().map(|&k| inside[k]).collect(), b.iter().map(|&k| inside[k]).collect(), test))
        }
    }
}

impl Manifest {
    pub fn new(spec: DatasetSpec, rule: SplitRule, diagrams: &[PhaseDiagram]) -> Result<Self> {
        let ws: Vec<f64> = diagrams.iter().map(|d| d.params.w_over_g).collect();
        let (train, validation, test) = assign(&ws, &spec, rule)?;
        let entries = diagrams
            .iter()
            .enumerate()
            .map(|(i, d)| Entry {
                file: diagram_file_name(d.params.n_sites, d.params.w_over_g, i),
                n_sites: d.params.n_sites,
                w_over_g: d.params.w_over_g,
            })
            .collect();
        Ok(Manifest {
            format: FORMAT.into(),
            version: VERSION,
            generator: generator_version(),
            spec,
            split: rule,
            diagrams: entries,
            train,
            validation,
            test,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.format != FORMAT || m.version != VERSION {
            return Err(Error::Format(format!("unsupported manifest {} v{}", m.format, m.version)));
        }
        let n = m.diagrams.len();
        if let Some(&bad) = m.train.iter().chain(&m.validation).chain(&m.test).find(|&&i| i >= n) {
            return Err(Error::Format(format!("split index {bad} beyond {n} diagrams")));
        }
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::metrics::write_json(path, self)
    }

    /// Loads every listed diagram, resolving file names against `dir`.
    pub fn load_diagrams(&self, dir: impl AsRef<Path>) -> Result<Vec<PhaseDiagram>> {
        self.diagrams.iter().map(|e| phd::read(dir.as_ref().join(&e.file))).collect()
    }
}

/// Simulates the spec, writes the PHD1 files and the manifest into `dir`, and
/// returns the manifest path.
pub fn build(spec: &DatasetSpec, rule: SplitRule, dir: impl AsRef<Path>) -> Result<(PathBuf, Manifest)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let diagrams = generate_dataset(spec)?;
    let manifest = Manifest::new(spec.clone(), rule, &diagrams)?;
    for (entry, d) in manifest.diagrams.iter().zip(&diagrams) {
        phd::write(dir.join(&entry.file), d)?;
    }
    let path = dir.join(FILE_NAME);
    manifest.write(&path)?;
    Ok((path, manifest))
}
