use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use unilearn::config::ExperimentConfig;

/// Where a subcommand's result goes.
#[derive(Debug, Clone)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    /// `-` selects stdout; no flag falls back to `default`.
    pub fn choose(flag: Option<&Path>, default: Option<PathBuf>) -> Sink {
        match flag {
            Some(p) if p == Path::new("-") => Sink::Stdout,
            Some(p) => Sink::File(p.to_path_buf()),
            None => default.map_or(Sink::Stdout, Sink::File),
        }
    }

    pub fn write(&self, body: &str) -> Result<()> {
        match self {
            Sink::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes())?;
                out.flush()?;
                Ok(())
            }
            Sink::File(path) => write_atomic(path, body),
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Comment header naming the subcommand and embedding the resolved config.
pub fn header(command: &str, config: Option<&ExperimentConfig>, extra: &[(&str, String)]) -> String {
    let mut out = format!("# unilearn {command}\n");
    for (k, v) in extra {
        out.push_str(&format!("# {k}={v}\n"));
    }
    if let Some(cfg) = config {
        out.push_str("# --- config ---\n");
        for line in cfg.to_text().lines() {
            if line.is_empty() {
                out.push_str("#\n");
            } else {
                out.push_str(&format!("# {line}\n"));
            }
        }
        out.push_str("# --- end config ---\n");
    }
    out
}
