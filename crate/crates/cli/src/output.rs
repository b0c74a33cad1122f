use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anisotex_core::synth::anif::read_anif;
use anisotex_core::SampledField;
use anyhow::{Context, Result};

use crate::Usage;

/// Writes through a temporary sibling file and renames it into place, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

/// `out.csv` -> `out.json`.
pub fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

/// Appends a suffix to the file name: `run` + `.stats.csv` -> `run.stats.csv`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn read_field(path: &Path) -> Result<SampledField> {
    let file = File::open(path).map_err(|e| Usage(format!("cannot open {}: {e}", path.display())))?;
    read_anif(&mut BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn read_fields(paths: &[PathBuf]) -> Result<Vec<SampledField>> {
    paths.iter().map(|p| read_field(p)).collect()
}
