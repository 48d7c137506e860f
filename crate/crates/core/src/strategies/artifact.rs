//! Versioned binary container for trained policies and model dumps.
//!
//! Layout: 8-byte magic, `u32` format version, `u32` header length, a JSON
//! header, `u64` parameter count, then the parameters as little-endian `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{ColumnValues, RawDataset};
use crate::error::{Error, Result};
use crate::models::{
    Classifier, DecisionTree, LogisticRegressionModel, RandomForestModel, TreeNode,
};
use crate::rl::{NetworkShape, QNetwork};

pub const MAGIC: &[u8; 8] = b"ALKITART";
pub const FORMAT_VERSION: u32 = 1;
/// Version of the state/action featurization a policy was trained against.
pub const FEATURE_SCHEMA: u32 = 1;

pub const KIND_POLICY: &str = "q-network";
pub const KIND_LOGISTIC: &str = "logistic-regression";
pub const KIND_FOREST: &str = "random-forest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub kind: String,
    /// `(out, in)` per layer, or an empty table for non-layered payloads.
    pub layers: Vec<[usize; 2]>,
    pub v_size: usize,
    pub feature_schema: u32,
    pub hyperparameters: serde_json::Value,
    pub corpus_hash: String,
}

/// Header plus flat parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactContainer {
    pub header: ArtifactHeader,
    pub params: Vec<f64>,
}

impl ArtifactContainer {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let mut out = Vec::with_capacity(24 + header.len() + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, at: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Compatibility("not an artifact file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Compatibility(format!(
                "artifact format version {version}, this build reads {FORMAT_VERSION}"
            )));
        }
        let header_len = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes")) as usize;
        let header: ArtifactHeader = serde_json::from_slice(cur.take(header_len)?)
            .map_err(|e| Error::Compatibility(format!("unreadable artifact header: {e}")))?;
        let count = u64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes")) as usize;
        let block = cur.take(count.checked_mul(8).ok_or_else(truncated)?)?;
        if cur.at != bytes.len() {
            return Err(Error::Compatibility("trailing bytes after parameter block".into()));
        }
        let params = block
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self { header, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn truncated() -> Error {
    Error::Compatibility("artifact truncated".into())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).ok_or_else(truncated)?;
        let slice = self.bytes.get(self.at..end).ok_or_else(truncated)?;
        self.at = end;
        Ok(slice)
    }
}

/// A trained Q-network together with what is needed to deploy it.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyArtifact {
    pub network: QNetwork,
    pub v_size: usize,
    pub feature_schema: u32,
    pub hyperparameters: serde_json::Value,
    pub corpus_hash: String,
}

impl PolicyArtifact {
    pub fn to_container(&self) -> ArtifactContainer {
        ArtifactContainer {
            header: ArtifactHeader {
                kind: KIND_POLICY.into(),
                layers: self
                    .network
                    .shape
                    .layers()
                    .iter()
                    .map(|&(o, i)| [o, i])
                    .collect(),
                v_size: self.v_size,
                feature_schema: self.feature_schema,
                hyperparameters: self.hyperparameters.clone(),
                corpus_hash: self.corpus_hash.clone(),
            },
            params: self.network.theta.clone(),
        }
    }

    /// Validates kind, schema and shapes against this build's architecture.
    pub fn from_container(c: ArtifactContainer) -> Result<Self> {
        let h = c.header;
        if h.kind != KIND_POLICY {
            return Err(Error::Compatibility(format!(
                "artifact holds '{}', expected '{KIND_POLICY}'",
                h.kind
            )));
        }
        if h.feature_schema != FEATURE_SCHEMA {
            return Err(Error::Compatibility(format!(
                "feature schema {} is not supported (expected {FEATURE_SCHEMA})",
                h.feature_schema
            )));
        }
        let shape = NetworkShape {
            state_dim: h.v_size,
            ..NetworkShape::default()
        };
        let expected: Vec<[usize; 2]> = shape.layers().iter().map(|&(o, i)| [o, i]).collect();
        if h.layers != expected {
            return Err(Error::Compatibility(format!(
                "layer table {:?} does not match the architecture {:?}",
                h.layers, expected
            )));
        }
        let network = QNetwork::from_params(shape, c.params)?;
        Ok(Self {
            network,
            v_size: h.v_size,
            feature_schema: h.feature_schema,
            hyperparameters: h.hyperparameters,
            corpus_hash: h.corpus_hash,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.to_container().to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_container(ArtifactContainer::from_bytes(bytes)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(ArtifactContainer::load(path)?)
    }
}

/// SHA-256 over dataset names, column contents and labels, as lowercase hex.
pub fn corpus_hash(corpus: &[RawDataset]) -> String {
    let mut h = Sha256::new();
    for d in corpus {
        h.update((d.name.len() as u64).to_le_bytes());
        h.update(d.name.as_bytes());
        h.update((d.n_rows() as u64).to_le_bytes());
        for col in &d.columns {
            h.update((col.name.len() as u64).to_le_bytes());
            h.update(col.name.as_bytes());
            match &col.values {
                ColumnValues::Numeric(v) => {
                    h.update([0u8]);
                    for x in v {
                        h.update(x.to_le_bytes());
                    }
                }
                ColumnValues::Categorical(v) => {
                    h.update([1u8]);
                    for s in v {
                        h.update((s.len() as u64).to_le_bytes());
                        h.update(s.as_bytes());
                    }
                }
            }
        }
        h.update(&d.labels);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Dumps a fitted classifier into the artifact container.
///
/// Logistic regression stores `[w.., b]`. A forest stores each tree as a
/// node count followed by 5 values per node: `(is_leaf, feature|count0,
/// threshold|count1, left, right)`.
pub fn dump_classifier(model: &Classifier) -> ArtifactContainer {
    match model {
        Classifier::Logistic(m) => {
            let mut params = m.weights.clone();
            params.push(m.bias);
            ArtifactContainer {
                header: ArtifactHeader {
                    kind: KIND_LOGISTIC.into(),
                    layers: vec![[1, m.weights.len()]],
                    v_size: 0,
                    feature_schema: FEATURE_SCHEMA,
                    hyperparameters: serde_json::json!({
                        "l2_strength": m.l2_strength,
                        "iterations": m.iterations,
                    }),
                    corpus_hash: String::new(),
                },
                params,
            }
        }
        Classifier::Forest(f) => {
            let mut params = Vec::new();
            for tree in &f.trees {
                params.push(tree.nodes.len() as f64);
                for node in &tree.nodes {
                    match *node {
                        TreeNode::Leaf { counts } => {
                            params.extend_from_slice(&[1.0, counts[0], counts[1], 0.0, 0.0])
                        }
                        TreeNode::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => params.extend_from_slice(&[
                            0.0,
                            feature as f64,
                            threshold,
                            left as f64,
                            right as f64,
                        ]),
                    }
                }
            }
            ArtifactContainer {
                header: ArtifactHeader {
                    kind: KIND_FOREST.into(),
                    layers: Vec::new(),
                    v_size: 0,
                    feature_schema: FEATURE_SCHEMA,
                    hyperparameters: serde_json::json!({
                        "tree_count": f.trees.len(),
                        "n_features": f.n_features,
                        "max_features": f.max_features,
                        "seed": f.seed,
                    }),
                    corpus_hash: String::new(),
                },
                params,
            }
        }
    }
}

/// Inverse of [`dump_classifier`] for prediction; forest bootstrap indices are not stored.
pub fn load_classifier(c: &ArtifactContainer) -> Result<Classifier> {
    let bad = |m: &str| Error::Compatibility(format!("malformed {} dump: {m}", c.header.kind));
    match c.header.kind.as_str() {
        KIND_LOGISTIC => {
            let d = match c.header.layers.as_slice() {
                [[1, d]] => *d,
                _ => return Err(bad("layer table")),
            };
            if c.params.len() != d + 1 {
                return Err(bad("parameter count"));
            }
            let hp = &c.header.hyperparameters;
            Ok(Classifier::Logistic(LogisticRegressionModel {
                weights: c.params[..d].to_vec(),
                bias: c.params[d],
                l2_strength: hp["l2_strength"].as_f64().unwrap_or(0.0),
                iterations: hp["iterations"].as_u64().unwrap_or(0) as usize,
            }))
        }
        KIND_FOREST => {
            let hp = &c.header.hyperparameters;
            let n_features = hp["n_features"].as_u64().ok_or_else(|| bad("n_features"))? as usize;
            let tree_count = hp["tree_count"].as_u64().ok_or_else(|| bad("tree_count"))? as usize;
            let mut trees = Vec::with_capacity(tree_count);
            let mut at = 0usize;
            for _ in 0..tree_count {
                let n = *c.params.get(at).ok_or_else(|| bad("truncated"))? as usize;
                at += 1;
                let block = c.params.get(at..at + 5 * n).ok_or_else(|| bad("truncated"))?;
                at += 5 * n;
                let nodes = block
                    .chunks_exact(5)
                    .map(|v| {
                        if v[0] == 1.0 {
                            TreeNode::Leaf { counts: [v[1], v[2]] }
                        } else {
                            TreeNode::Split {
                                feature: v[1] as usize,
                                threshold: v[2],
                                left: v[3] as usize,
                                right: v[4] as usize,
                            }
                        }
                    })
                    .collect();
                trees.push(DecisionTree { nodes });
            }
            if at != c.params.len() {
                return Err(bad("trailing parameters"));
            }
            Ok(Classifier::Forest(RandomForestModel {
                trees,
                bootstrap_indices: Vec::new(),
                n_features,
                n_train_rows: 0,
                max_features: hp["max_features"].as_u64().unwrap_or(0) as usize,
                seed: hp["seed"].as_u64().unwrap_or(0),
            }))
        }
        other => Err(Error::Compatibility(format!("unknown model dump kind '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::seed::rng_from_seed;

    fn artifact() -> PolicyArtifact {
        PolicyArtifact {
            network: QNetwork::init(NetworkShape::default(), &mut rng_from_seed(5)),
            v_size: 30,
            feature_schema: FEATURE_SCHEMA,
            hyperparameters: serde_json::json!({"gamma": 0.999}),
            corpus_hash: "abc".into(),
        }
    }

    #[test]
    fn bit_exact_round_trip() {
        let mut a = artifact();
        a.network.theta[3] = f64::MIN_POSITIVE;
        a.network.theta[4] = -0.0;
        let bytes = a.to_bytes().unwrap();
        let b = PolicyArtifact::from_bytes(&bytes).unwrap();
        for (x, y) in a.network.theta.iter().zip(&b.network.theta) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(b.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = artifact().to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(PolicyArtifact::from_bytes(&bad), Err(Error::Compatibility(_))));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(PolicyArtifact::from_bytes(&bad), Err(Error::Compatibility(_))));
        assert!(PolicyArtifact::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut short = artifact();
        short.network.theta.pop();
        short.network.shape.hidden2 = 5;
        let c = short.to_container();
        assert!(PolicyArtifact::from_container(c).is_err());
        let mut other_v = artifact().to_container();
        other_v.header.v_size = 20;
        assert!(PolicyArtifact::from_container(other_v).is_err());
    }

    #[test]
    fn corpus_hash_sensitivity() {
        let a = crate::synth::gaussian_blobs("a", 20, 2, 1.0, 0);
        let b = crate::synth::gaussian_blobs("a", 20, 2, 1.0, 1);
        assert_eq!(corpus_hash(std::slice::from_ref(&a)), corpus_hash(std::slice::from_ref(&a)));
        assert_ne!(corpus_hash(std::slice::from_ref(&a)), corpus_hash(&[b]));
        assert_eq!(corpus_hash(&[a]).len(), 64);
    }
}
