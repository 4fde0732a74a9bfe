use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TopicError, TopicModel};
use crate::corpus::Vocabulary;

#[derive(Serialize, Deserialize)]
struct Manifest {
    k: usize,
    alpha: f64,
    eta: f64,
    vocab: Vocabulary,
    /// File name of the beta matrix, relative to the manifest.
    beta_file: String,
}

/// `lda.json` → `lda.beta.bin`.
pub fn beta_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("beta.bin")
}

impl TopicModel {
    /// Writes a JSON manifest to `path` and β as little-endian `f64`,
    /// row-major, to a sibling file.
    pub fn save(&self, path: &Path) -> Result<(), TopicError> {
        let beta_file = beta_path(path);
        let manifest = Manifest {
            k: self.k,
            alpha: self.alpha,
            eta: self.eta,
            vocab: self.vocab.clone(),
            beta_file: beta_file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| TopicError::Format(e.to_string()))?;
        fs::write(path, json).map_err(|e| TopicError::io(path, e))?;
        let bytes: Vec<u8> = self.beta.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&beta_file, bytes).map_err(|e| TopicError::io(&beta_file, e))
    }

    /// Reads a model written by [`TopicModel::save`]. Training assignments
    /// are not persisted.
    pub fn load(path: &Path) -> Result<Self, TopicError> {
        let text = fs::read_to_string(path).map_err(|e| TopicError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| TopicError::Format(e.to_string()))?;
        let beta_file = path.with_file_name(&m.beta_file);
        let bytes = fs::read(&beta_file).map_err(|e| TopicError::io(&beta_file, e))?;
        let expected = m.k * m.vocab.len() * 8;
        if bytes.len() != expected {
            return Err(TopicError::Format(format!(
                "beta file has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let beta = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(TopicModel {
            k: m.k,
            alpha: m.alpha,
            eta: m.eta,
            beta,
            vocab: m.vocab,
            assignments: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topics::{fit_gibbs, LdaConfig};

    #[test]
    fn save_load_round_trip() {
        let vocab = Vocabulary::build([["json", "value", "writer", "json"]], 20, 1).unwrap();
        let docs = vec![vec![4, 5, 4], vec![6, 6, 5]];
        let mut cfg = LdaConfig::with_topics(2);
        cfg.n_iterations = 10;
        let model = fit_gibbs(&docs, vocab, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lda.json");
        model.save(&path).unwrap();
        assert!(dir.path().join("lda.beta.bin").exists());
        let loaded = TopicModel::load(&path).unwrap();
        assert_eq!(loaded.beta(), model.beta());
        assert_eq!(loaded.vocab(), model.vocab());
        assert_eq!((loaded.k(), loaded.alpha(), loaded.eta()), (2, 25.0, 0.01));
        assert!(loaded.assignments().is_empty());
    }

    #[test]
    fn truncated_beta_is_rejected() {
        let vocab = Vocabulary::build([["a"]], 20, 1).unwrap();
        let model = fit_gibbs(&[vec![4]], vocab, &LdaConfig::with_topics(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        model.save(&path).unwrap();
        fs::write(beta_path(&path), [0u8; 3]).unwrap();
        assert!(matches!(TopicModel::load(&path), Err(TopicError::Format(_))));
    }
}
