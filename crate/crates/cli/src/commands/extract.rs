//! `extract`: one feature-distribution JSON document per input file.

use std::path::PathBuf;

use stylerank::features::distributions_to_json;
use stylerank::midi::notes_to_json;

use crate::config::RunConfig;
use crate::error::{usage, CliResult, Outcome};
use crate::files;

pub fn run(
    paths: &[PathBuf],
    dump_notes: bool,
    config: &RunConfig,
) -> CliResult<Outcome> {
    // Expand directories, keep explicit files as-is.
    let mut expanded: Vec<PathBuf> = Vec::new();
    for path in paths {
        if path.is_dir() {
            expanded.extend(files::list_midi_dir(path)?);
        } else {
            expanded.push(path.clone());
        }
    }
    if expanded.is_empty() {
        return Err(usage("no input files"));
    }

    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    let loaded = files::load_paths(&expanded, &config.parse_options)?;
    let dists = files::to_distributions(&loaded.files, &config.features);
    for (file, dist) in loaded.files.iter().zip(&dists) {
        let json = distributions_to_json(&dist.features);
        std::fs::write(out_dir.join(format!("{}.features.json", file.id)), json)?;
        if dump_notes {
            let notes = notes_to_json(&file.notes);
            std::fs::write(out_dir.join(format!("{}.notes.json", file.id)), notes)?;
        }
    }
    files::report_failures(&loaded.failures);
    eprintln!(
        "extracted {} feature set(s) from {} file(s) into {}",
        config.features.len(),
        loaded.files.len(),
        out_dir.display()
    );
    Ok(if loaded.failures.is_empty() { Outcome::Clean } else { Outcome::Partial })
}
