//! Experiment directory layout: a manifest with seed and config hash for
//! exact reruns, per-iteration subdirectories with checkpoints, the DPO
//! pairs, S and S^alpha, loss curves, and reports.

use crate::corpus::{jsonl, Dataset};
use crate::engine::checkpoint::Checkpoint;
use crate::engine::tokenizer::Tokenizer;
use crate::selftrain::run::IterationReport;
use crate::selftrain::PreferencePair;
use crate::training::CurvePoint;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub mode: String,
    pub created_unix: u64,
    pub command: Vec<String>,
}

#[derive(Debug)]
pub struct ExperimentStore {
    root: PathBuf,
    config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct PairLine {
    id: String,
    question: String,
    winning: String,
    losing: String,
}

#[derive(Serialize)]
struct DatasetMeta<'a> {
    config_hash: &'a str,
    kind: crate::corpus::DatasetKind,
    items: usize,
}

fn engine_to_io(e: crate::engine::model::EngineError) -> io::Error {
    io::Error::other(e.to_string())
}

impl ExperimentStore {
    /// Create the directory (if needed) and write the manifest. Refuses a
    /// directory whose existing manifest carries a different config hash.
    pub fn create(root: impl Into<PathBuf>, manifest: &Manifest) -> io::Result<ExperimentStore> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let manifest_path = root.join("manifest.json");
        if manifest_path.exists() {
            let existing: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
            if existing.config_hash != manifest.config_hash {
                return Err(io::Error::other(format!(
                    "run directory {} holds artifacts for config hash {}, refusing to mix with {}",
                    root.display(),
                    existing.config_hash,
                    manifest.config_hash
                )));
            }
        }
        fs::write(&manifest_path, serde_json::to_string_pretty(manifest)?)?;
        Ok(ExperimentStore {
            root,
            config_hash: manifest.config_hash.clone(),
        })
    }

    pub fn open(root: impl Into<PathBuf>) -> io::Result<(ExperimentStore, Manifest)> {
        let root = root.into();
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(root.join("manifest.json"))?)?;
        Ok((
            ExperimentStore {
                root,
                config_hash: manifest.config_hash.clone(),
            },
            manifest,
        ))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn iter_dir(&self, iteration: usize) -> PathBuf {
        self.root.join(format!("iter-{iteration:03}"))
    }

    fn ensure_iter(&self, iteration: usize) -> io::Result<PathBuf> {
        let dir = self.iter_dir(iteration);
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    pub fn save_checkpoint_root(
        &self,
        name: &str,
        ckpt: &Checkpoint,
        tokenizer: &Tokenizer,
    ) -> io::Result<()> {
        ckpt.save(tokenizer, self.root.join(format!("{name}.ckpt.json")))
            .map_err(engine_to_io)
    }

    pub fn save_iteration_checkpoint(
        &self,
        iteration: usize,
        name: &str,
        ckpt: &Checkpoint,
        tokenizer: &Tokenizer,
    ) -> io::Result<()> {
        let dir = self.ensure_iter(iteration)?;
        ckpt.save(tokenizer, dir.join(format!("checkpoint.{name}.json")))
            .map_err(engine_to_io)
    }

    pub fn save_pairs(&self, iteration: usize, pairs: &[PreferencePair]) -> io::Result<()> {
        let dir = self.ensure_iter(iteration)?;
        let mut out = String::new();
        for p in pairs {
            let line = PairLine {
                id: p.problem_id.clone(),
                question: p.question.clone(),
                winning: p.winning.text.clone(),
                losing: p.losing.text.clone(),
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        fs::write(dir.join("dpo_pairs.jsonl"), out)?;
        fs::write(
            dir.join("dpo_pairs.meta.json"),
            serde_json::to_string_pretty(&serde_json::json!({
                "config_hash": self.config_hash,
                "pairs": pairs.len(),
            }))?,
        )
    }

    pub fn load_pairs(path: impl AsRef<Path>) -> io::Result<Vec<(String, String, String, String)>> {
        let text = fs::read_to_string(path)?;
        let mut out = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let p: PairLine = serde_json::from_str(line)?;
            out.push((p.id, p.question, p.winning, p.losing));
        }
        Ok(out)
    }

    pub fn save_dataset(&self, iteration: usize, name: &str, ds: &Dataset) -> io::Result<()> {
        let dir = self.ensure_iter(iteration)?;
        jsonl::save_jsonl(ds, dir.join(format!("{name}.jsonl")))
            .map_err(|e| io::Error::other(e.to_string()))?;
        fs::write(
            dir.join(format!("{name}.meta.json")),
            serde_json::to_string_pretty(&DatasetMeta {
                config_hash: &self.config_hash,
                kind: ds.kind,
                items: ds.len(),
            })?,
        )
    }

    pub fn save_curve(&self, iteration: usize, name: &str, curve: &[CurvePoint]) -> io::Result<()> {
        let dir = self.ensure_iter(iteration)?;
        crate::training::write_curve_csv(curve, dir.join(format!("{name}.csv")))
    }

    pub fn save_report(&self, iteration: usize, report: &IterationReport) -> io::Result<()> {
        let dir = self.ensure_iter(iteration)?;
        fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(report)?,
        )
    }

    pub fn save_all_reports(&self, reports: &[IterationReport]) -> io::Result<()> {
        fs::write(
            self.root.join("reports.json"),
            serde_json::to_string_pretty(reports)?,
        )
    }

    pub fn load_all_reports(root: impl AsRef<Path>) -> io::Result<Vec<IterationReport>> {
        let text = fs::read_to_string(root.as_ref().join("reports.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(hash: &str) -> Manifest {
        Manifest {
            version: MANIFEST_VERSION,
            config_hash: hash.to_string(),
            seed: 7,
            mode: "dpo-st".into(),
            created_unix: 0,
            command: vec!["test".into()],
        }
    }

    #[test]
    fn create_open_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("run");
        ExperimentStore::create(&root, &manifest("abc")).unwrap();
        let (_, m) = ExperimentStore::open(&root).unwrap();
        assert_eq!(m.config_hash, "abc");
        assert_eq!(m.seed, 7);
    }

    #[test]
    fn refuses_mixed_config_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("run");
        ExperimentStore::create(&root, &manifest("abc")).unwrap();
        // same hash is fine (rerun)
        ExperimentStore::create(&root, &manifest("abc")).unwrap();
        let err = ExperimentStore::create(&root, &manifest("zzz")).unwrap_err();
        assert!(err.to_string().contains("refusing to mix"));
    }

    #[test]
    fn pairs_round_trip() {
        use crate::corpus::Rationale;
        let dir = tempfile::tempdir().unwrap();
        let store = ExperimentStore::create(dir.path().join("run"), &manifest("h")).unwrap();
        let pairs = vec![PreferencePair {
            problem_id: "p1".into(),
            question: "q".into(),
            winning: Rationale::parse("now 1+1=<<1+1=2>>2\n#### 2"),
            losing: Rationale::parse("now 1+1=<<1+1=3>>3\n#### 3"),
        }];
        store.save_pairs(1, &pairs).unwrap();
        let loaded =
            ExperimentStore::load_pairs(store.iter_dir(1).join("dpo_pairs.jsonl")).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].0, "p1");
        assert_eq!(loaded[0].2, pairs[0].winning.text);
    }
}
