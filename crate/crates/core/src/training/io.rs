//! Snapshot files share the model archive layout under their own magic.
//! The JSON header lists the panel keys and snapshot iterations; tensors are
//! `validation_scores` `[n]`, then `snapshot{k}.holdout` and
//! `snapshot{k}.target` (each `[S, HORIZON]`) for every snapshot.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::Snapshot;
use crate::data::SeriesKey;
use crate::error::{Error, Result};
use crate::model::{decode_archive, encode_archive};
use crate::nn::Tensor;

pub const SNAPSHOT_MAGIC: &[u8; 6] = b"WVSNP1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    keys: Vec<SeriesKey>,
    iterations: Vec<u64>,
}

pub fn snapshots_to_bytes(keys: &[SeriesKey], snapshots: &[Snapshot]) -> Vec<u8> {
    let header = serde_json::to_string(&Header {
        keys: keys.to_vec(),
        iterations: snapshots.iter().map(|s| s.iteration).collect(),
    })
    .expect("header serializes");
    let scores = Tensor::from_vec(
        &[snapshots.len().max(1)],
        if snapshots.is_empty() {
            vec![f64::NAN]
        } else {
            snapshots.iter().map(|s| s.validation_score).collect()
        },
    )
    .expect("non-empty");
    let mut named = vec![("validation_scores".to_string(), &scores)];
    for (k, s) in snapshots.iter().enumerate() {
        named.push((format!("snapshot{k}.holdout"), &s.holdout_log));
        named.push((format!("snapshot{k}.target"), &s.target_log));
    }
    encode_archive(SNAPSHOT_MAGIC, &header, &named)
}

pub fn snapshots_from_bytes(bytes: &[u8], path: &str) -> Result<(Vec<SeriesKey>, Vec<Snapshot>)> {
    let fail = |message: String| Error::Format {
        path: path.to_string(),
        message,
    };
    let (header, tensors) = decode_archive(bytes, SNAPSHOT_MAGIC, path)?;
    let header: Header = serde_json::from_str(&header).map_err(|e| fail(format!("bad header: {e}")))?;
    let n = header.iterations.len();
    if tensors.len() != 1 + 2 * n {
        return Err(fail(format!("expected {} tensors, found {}", 1 + 2 * n, tensors.len())));
    }
    let mut it = tensors.into_iter();
    let (name, scores) = it.next().expect("checked length");
    if name != "validation_scores" || scores.len() != n.max(1) {
        return Err(fail("missing validation_scores".into()));
    }
    let shape = [header.keys.len(), crate::data::HORIZON];
    let mut snapshots = Vec::with_capacity(n);
    for (k, &iteration) in header.iterations.iter().enumerate() {
        let (hn, holdout_log) = it.next().expect("checked length");
        let (tn, target_log) = it.next().expect("checked length");
        if hn != format!("snapshot{k}.holdout") || tn != format!("snapshot{k}.target") {
            return Err(fail(format!("unexpected tensors `{hn}`, `{tn}` for snapshot {k}")));
        }
        if holdout_log.shape() != shape || target_log.shape() != shape {
            return Err(fail(format!("snapshot {k} is not {shape:?}")));
        }
        if snapshots.last().is_some_and(|s: &Snapshot| s.iteration >= iteration) {
            return Err(fail("snapshot iterations must increase".into()));
        }
        snapshots.push(Snapshot {
            iteration,
            holdout_log,
            target_log,
            validation_score: scores.data()[k],
        });
    }
    Ok((header.keys, snapshots))
}

pub fn save_snapshots(path: impl AsRef<Path>, keys: &[SeriesKey], snapshots: &[Snapshot]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, snapshots_to_bytes(keys, snapshots)).map_err(|e| Error::io(path, e))
}

pub fn load_snapshots(path: impl AsRef<Path>) -> Result<(Vec<SeriesKey>, Vec<Snapshot>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    snapshots_from_bytes(&bytes, &path.display().to_string())
}
