//! On-disk layout: a directory with `manifest.json` and one JSON model
//! record per sample. Plant families nest one such directory per node.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LpvModel, LpvSource, PlantLpvFamily};
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::lti::{ModelRecord, OperatingPoint, StateSpaceModel};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

/// Row-major sparsity masks, `1` for a structurally nonzero entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskRecord {
    #[serde(rename = "A")]
    pub a: Vec<Vec<u8>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<u8>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<u8>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub schema_version: u32,
    pub kind: String,
    pub wind: Vec<f64>,
    pub x_p: [f64; 2],
    pub models: Vec<String>,
    pub masks: MaskRecord,
    pub sparsity_mismatches: usize,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyManifest {
    pub schema_version: u32,
    pub kind: String,
    pub c_s: Vec<f64>,
    pub c_d: Vec<f64>,
    pub wind: Vec<f64>,
    /// Node directories, `c_s`-major.
    pub nodes: Vec<String>,
    pub fingerprint: String,
}

/// Either kind of persisted LPV artifact.
#[derive(Debug, Clone)]
pub enum LpvManifest {
    Model(LpvModel),
    Family(PlantLpvFamily),
}

const KIND_MODEL: &str = "lpv_model";
const KIND_FAMILY: &str = "plant_family";

pub(crate) fn fingerprint_samples(samples: &[(StateSpaceModel, OperatingPoint)]) -> String {
    let mut h = Sha256::new();
    for (m, op) in samples {
        let rec = ModelRecord::from_parts(m, op);
        h.update(serde_json::to_vec(&rec).expect("model records serialize"));
    }
    hex::encode(h.finalize())
}

fn mask_rows(mask: &[bool], cols: usize) -> Vec<Vec<u8>> {
    mask.chunks(cols.max(1))
        .map(|r| r.iter().map(|&b| b as u8).collect())
        .collect()
}

impl LpvModel {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        for (k, (m, op)) in self.samples().iter().enumerate() {
            let name = format!("model_{k:03}.json");
            ModelRecord::from_parts(m, op).write(&dir.join(&name))?;
            files.push(name);
        }
        let (n, m, _) = self.dims();
        let masks = self.masks();
        let manifest = ModelManifest {
            schema_version: SCHEMA_VERSION,
            kind: KIND_MODEL.into(),
            wind: self.wind_samples().to_vec(),
            x_p: self.plant(),
            models: files,
            masks: MaskRecord {
                a: mask_rows(&masks.a, n),
                b: mask_rows(&masks.b, m),
                c: mask_rows(&masks.c, n),
                d: mask_rows(&masks.d, m),
            },
            sparsity_mismatches: self.sparsity_mismatches(),
            fingerprint: LpvSource::fingerprint(self),
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        match load_lpv(dir)? {
            LpvManifest::Model(m) => Ok(m),
            LpvManifest::Family(_) => Err(Error::InvalidInput(format!(
                "{} holds a plant family, not a single LPV model",
                dir.display()
            ))),
        }
    }
}

impl PlantLpvFamily {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let ncd = self.cd_axis().len();
        let mut names = Vec::new();
        for (k, node) in self.nodes().iter().enumerate() {
            let name = format!("node_{:02}_{:02}", k / ncd, k % ncd);
            node.save(&dir.join(&name))?;
            names.push(name);
        }
        let manifest = FamilyManifest {
            schema_version: SCHEMA_VERSION,
            kind: KIND_FAMILY.into(),
            c_s: self.cs_axis().to_vec(),
            c_d: self.cd_axis().to_vec(),
            wind: self.nodes()[0].wind_samples().to_vec(),
            nodes: names,
            fingerprint: self.fingerprint().to_string(),
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        match load_lpv(dir)? {
            LpvManifest::Family(f) => Ok(f),
            LpvManifest::Model(_) => Err(Error::InvalidInput(format!(
                "{} holds a single LPV model, not a plant family",
                dir.display()
            ))),
        }
    }
}

fn check_version(path: &Path, v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::InvalidInput(format!(
            "{}: schema version {v}, expected {SCHEMA_VERSION}",
            path.display()
        )));
    }
    Ok(())
}

/// Loads whichever artifact `dir` holds, verifying its fingerprint.
pub fn load_lpv(dir: &Path) -> Result<LpvManifest> {
    let path = dir.join(MANIFEST_FILE);
    let raw: serde_json::Value = read_json(&path)?;
    match raw.get("kind").and_then(|k| k.as_str()) {
        Some(KIND_MODEL) => {
            let man: ModelManifest =
                serde_json::from_value(raw).map_err(|e| Error::json(&path, e))?;
            check_version(&path, man.schema_version)?;
            let samples = man
                .models
                .iter()
                .map(|f| ModelRecord::read(&dir.join(f))?.into_parts())
                .collect::<Result<Vec<_>>>()?;
            let model = LpvModel::build(samples)?;
            if LpvSource::fingerprint(&model) != man.fingerprint {
                return Err(Error::Build(format!(
                    "{}: model files do not match the manifest fingerprint",
                    dir.display()
                )));
            }
            Ok(LpvManifest::Model(model))
        }
        Some(KIND_FAMILY) => {
            let man: FamilyManifest =
                serde_json::from_value(raw).map_err(|e| Error::json(&path, e))?;
            check_version(&path, man.schema_version)?;
            let nodes = man
                .nodes
                .iter()
                .map(|n| LpvModel::load(&dir.join(n)))
                .collect::<Result<Vec<_>>>()?;
            let fam = PlantLpvFamily::new(man.c_s, man.c_d, nodes)?;
            if fam.fingerprint() != man.fingerprint {
                return Err(Error::Build(format!(
                    "{}: node models do not match the manifest fingerprint",
                    dir.display()
                )));
            }
            Ok(LpvManifest::Family(fam))
        }
        other => Err(Error::InvalidInput(format!(
            "{}: unknown manifest kind {other:?}",
            path.display()
        ))),
    }
}
