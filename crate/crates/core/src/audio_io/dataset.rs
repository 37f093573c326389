//! Dataset manifests: one `audio.wav features.wnf` pair per line; relative
//! paths resolve against the manifest's directory, `#` starts a comment.

use std::fs;
use std::path::{Path, PathBuf};

use super::clip::FRAME_HOP;
use super::features::{read_features, write_features};
use super::synth::Example;
use super::wav::{read_wav, write_wav};
use crate::error::{Error, Result};

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<(PathBuf, PathBuf)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read manifest {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [wav, feats] = parts[..] else {
            return Err(Error::Data(format!(
                "{}:{}: expected `wav_path features_path`",
                path.display(),
                n + 1
            )));
        };
        out.push((base.join(wav), base.join(feats)));
    }
    if out.is_empty() {
        return Err(Error::Data(format!("manifest {} lists no clips", path.display())));
    }
    Ok(out)
}

/// Load every clip of a manifest; audio length must equal frames x hop.
pub fn load_dataset(path: impl AsRef<Path>, bands: usize) -> Result<Vec<Example>> {
    read_manifest(path)?
        .into_iter()
        .map(|(wav, feats)| {
            let audio = read_wav(&wav)?;
            let features = read_features(&feats, bands)?;
            if audio.len() != features.frames() * FRAME_HOP {
                return Err(Error::Data(format!(
                    "{}: {} samples but {} has {} frames",
                    wav.display(),
                    audio.len(),
                    feats.display(),
                    features.frames()
                )));
            }
            Ok(Example { audio, features })
        })
        .collect()
}

/// Write `clip_NNN.wav` / `clip_NNN.wnf` plus `manifest.txt` into `dir`;
/// returns the manifest path.
pub fn write_dataset(dir: impl AsRef<Path>, examples: &[Example]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for (i, ex) in examples.iter().enumerate() {
        let (wav, feats) = (format!("clip_{i:03}.wav"), format!("clip_{i:03}.wnf"));
        write_wav(dir.join(&wav), &ex.audio)?;
        write_features(dir.join(&feats), &ex.features)?;
        manifest.push_str(&format!("{wav} {feats}\n"));
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest)?;
    Ok(path)
}
