use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{load_record, BreathingClass, MarkerRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub label: String,
    /// CSV path, relative to the manifest's directory unless absolute.
    pub path: PathBuf,
    #[serde(default)]
    pub breathing_class: BreathingClass,
}

/// The list of recordings in an experiment and per-cohort exclusions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, rename = "sequence")]
    pub sequences: Vec<SequenceEntry>,
    /// Cohort name ("all", "regular", "irregular") to excluded labels.
    #[serde(default)]
    pub exclusions: BTreeMap<String, Vec<String>>,
}

impl Manifest {
    /// Loads every listed record, applying the manifest's label and class.
    pub fn load_records(&self) -> Result<Vec<MarkerRecord>> {
        self.sequences
            .iter()
            .map(|s| Ok(load_record(&s.path)?.with_label(&s.label).with_class(s.breathing_class)))
            .collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let mut manifest: Manifest = toml::from_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for s in &mut manifest.sequences {
        if s.path.is_relative() {
            s.path = base.join(&s.path);
        }
    }
    if manifest.sequences.is_empty() {
        return Err(Error::Config(format!("manifest {} lists no sequences", path.display())));
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in &manifest.sequences {
        if !seen.insert(&s.label) {
            return Err(Error::Config(format!("duplicate sequence label {:?}", s.label)));
        }
    }
    for (cohort, labels) in &manifest.exclusions {
        if !matches!(cohort.as_str(), "all" | "regular" | "irregular") {
            return Err(Error::Config(format!("unknown cohort {cohort:?} in exclusions")));
        }
        if let Some(l) = labels.iter().find(|l| !seen.contains(l)) {
            return Err(Error::Config(format!("excluded sequence {l:?} is not in the manifest")));
        }
    }
    Ok(manifest)
}
