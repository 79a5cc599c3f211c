//! On-disk take layout.
//!
//! ```text
//! <take_dir>/
//!   calibration.txt          exo extrinsics
//!   ego_trajectory.txt       ego poses per second
//!   view_<id>.vdfs           one feature stream per view (ego is view 0)
//!   keysteps.tsv             keystep annotations
//!   keystep_embeddings.vdfs  embedding rows referenced by keysteps.tsv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use super::features::{read_feature_stream, write_feature_stream, FeatureStream};
use super::keysteps::{parse_keystep_annotations, KeystepSet};
use super::take::Take;
use super::text::{parse_calibration, parse_ego_trajectory, serialize_calibration, serialize_ego_trajectory};
use crate::{Error, Result};

pub const CALIBRATION_FILE: &str = "calibration.txt";
pub const TRAJECTORY_FILE: &str = "ego_trajectory.txt";
pub const KEYSTEP_FILE: &str = "keysteps.tsv";
pub const KEYSTEP_EMBEDDING_FILE: &str = "keystep_embeddings.vdfs";

pub fn stream_file_name(view: crate::ViewId) -> String {
    format!("view_{view}.vdfs")
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes via a temporary sibling and a rename so readers never observe a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("{}.tmp", path.extension().and_then(|e| e.to_str()).unwrap_or("")));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Resolves `file:row` references relative to `base`, caching loaded files.
pub fn load_keysteps(path: &Path) -> Result<KeystepSet> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let text = read_text(path)?;
    let mut cache: Vec<(String, Option<FeatureStream>)> = Vec::new();
    parse_keystep_annotations(&text, |file, row| {
        let idx = match cache.iter().position(|(f, _)| f == file) {
            Some(i) => i,
            None => {
                let loaded = read_bytes(&base.join(file)).ok().and_then(|b| read_feature_stream(&b).ok());
                cache.push((file.to_string(), loaded));
                cache.len() - 1
            }
        };
        cache[idx].1.as_ref().filter(|s| row < s.rows()).map(|s| s.row_f64(row))
    })
}

pub fn load_take_dir(dir: &Path) -> Result<Take> {
    let exo = parse_calibration(&read_text(&dir.join(CALIBRATION_FILE))?)?;
    let track = parse_ego_trajectory(&read_text(&dir.join(TRAJECTORY_FILE))?)?;
    let mut streams = Vec::new();
    let views = std::iter::once(crate::ViewId::EGO).chain(exo.iter().map(|c| c.view_id));
    for view in views {
        let path = dir.join(stream_file_name(view));
        let stream = read_feature_stream(&read_bytes(&path)?)?;
        if stream.view_id() != view {
            return Err(Error::invalid(None, format!("{} declares view {}", path.display(), stream.view_id())));
        }
        streams.push(stream);
    }
    let keysteps = load_keysteps(&dir.join(KEYSTEP_FILE))?;
    let take_id = dir.file_name().and_then(|n| n.to_str()).unwrap_or("take").to_string();
    Take::new(take_id, track, exo, streams, keysteps)
}

/// Writes every file of the take layout and returns the paths written.
pub fn write_take_dir(dir: &Path, take: &Take) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
        Ok(())
    };
    put(CALIBRATION_FILE.into(), serialize_calibration(&take.exo).into_bytes())?;
    put(TRAJECTORY_FILE.into(), serialize_ego_trajectory(&take.ego_track).into_bytes())?;
    for (view, stream) in &take.streams {
        put(stream_file_name(*view), write_feature_stream(stream))?;
    }
    let entries = take.keysteps.entries();
    if !entries.is_empty() {
        let rows: Vec<Vec<f64>> = entries.iter().map(|k| k.embedding.clone()).collect();
        let emb = FeatureStream::from_rows(crate::ViewId::EGO, &rows)?;
        put(KEYSTEP_EMBEDDING_FILE.into(), write_feature_stream(&emb))?;
    }
    let mut tsv = String::new();
    for (row, k) in entries.iter().enumerate() {
        tsv.push_str(&format!("{}\t{:?}\t{:?}\t{KEYSTEP_EMBEDDING_FILE}:{row}\n", k.id, k.start_s, k.end_s));
    }
    put(KEYSTEP_FILE.into(), tsv.into_bytes())?;
    Ok(written)
}
