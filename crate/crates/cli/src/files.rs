//! MIDI file loading with per-file failure isolation: corpora in the wild
//! contain malformed files, so parse errors are recorded and skipped
//! rather than aborting a batch run.

use std::fs;
use std::path::{Path, PathBuf};

use stylerank::features::{extract_features, Feature};
use stylerank::midi::{extract_melody, parse_midi_with, segment_chords, Note, ParseOptions};
use stylerank::similarity::FileDistributions;

use crate::error::{usage, CliResult};

#[derive(Debug, Clone)]
pub struct LoadedFile {
    /// File stem, used as the file's id everywhere downstream.
    pub id: String,
    pub path: PathBuf,
    pub notes: Vec<Note>,
}

#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub files: Vec<LoadedFile>,
    pub failures: Vec<(PathBuf, String)>,
}

fn is_midi_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("mid" | "midi" | "smf")
    )
}

/// MIDI files directly inside `dir`, sorted by file name.
pub fn list_midi_dir(dir: &Path) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(usage(format!("{} is not a directory", dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_midi_path(p))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Parse a list of MIDI paths; failures are collected, not fatal. Ids are
/// file stems and must be unique.
pub fn load_paths(paths: &[PathBuf], options: &ParseOptions) -> CliResult<LoadOutcome> {
    let mut outcome = LoadOutcome::default();
    for path in paths {
        let id = match path.file_stem().and_then(|s| s.to_str()) {
            Some(stem) => stem.to_string(),
            None => {
                outcome.failures.push((path.clone(), "unreadable file name".into()));
                continue;
            }
        };
        let bytes = match fs::read(path) {
            Ok(bytes) => bytes,
            Err(e) => {
                outcome.failures.push((path.clone(), e.to_string()));
                continue;
            }
        };
        match parse_midi_with(&bytes, options) {
            Ok(notes) if notes.is_empty() => {
                outcome.failures.push((path.clone(), "no notes".into()));
            }
            Ok(notes) => outcome.files.push(LoadedFile { id, path: path.clone(), notes }),
            Err(e) => outcome.failures.push((path.clone(), e.to_string())),
        }
    }
    let mut seen = std::collections::BTreeMap::new();
    for file in &outcome.files {
        if let Some(previous) = seen.insert(file.id.clone(), file.path.clone()) {
            return Err(usage(format!(
                "duplicate file id `{}` ({} vs {})",
                file.id,
                previous.display(),
                file.path.display()
            )));
        }
    }
    Ok(outcome)
}

/// Load every MIDI file directly inside a directory.
pub fn load_dir(dir: &Path, options: &ParseOptions) -> CliResult<LoadOutcome> {
    let paths = list_midi_dir(dir)?;
    if paths.is_empty() {
        return Err(usage(format!("no MIDI files in {}", dir.display())));
    }
    load_paths(&paths, options)
}

/// Segment chords, extract the melody, and evaluate the feature set for
/// every loaded file.
pub fn to_distributions(files: &[LoadedFile], features: &[Feature]) -> Vec<FileDistributions> {
    files
        .iter()
        .map(|file| {
            let chords = segment_chords(&file.notes).expect("loaded files have notes");
            let melody = extract_melody(&chords);
            FileDistributions {
                id: file.id.clone(),
                features: extract_features(features, &chords, &melody),
            }
        })
        .collect()
}

/// Print collected per-file failures to stderr.
pub fn report_failures(failures: &[(PathBuf, String)]) {
    for (path, reason) in failures {
        eprintln!("skipped {}: {reason}", path.display());
    }
}

/// Write to `out` or stdout.
pub fn write_output(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, content)?;
        }
        None => print!("{content}"),
    }
    Ok(())
}
