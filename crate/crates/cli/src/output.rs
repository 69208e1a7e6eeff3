use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use skotrim_core::PlPath;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Serialize)]
struct PathJson<'a> {
    t: &'a [f64],
    value: &'a [f64],
}

pub fn path_bytes(p: &PlPath, format: Format) -> Result<Vec<u8>> {
    // -0.0 + 0.0 == +0.0: no "-0" in the output
    let p = &p.map_values(|v| v + 0.0);
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            p.write_csv(&mut buf)?;
            Ok(buf)
        }
        Format::Json => {
            let mut text = serde_json::to_string(&PathJson {
                t: p.times(),
                value: p.values(),
            })?;
            text.push('\n');
            Ok(text.into_bytes())
        }
    }
}

pub fn write_path(path: &Path, p: &PlPath, format: Format) -> Result<()> {
    write_atomic(path, &path_bytes(p, format)?)
}

/// `<prefix>.<name>.<ext>`, keeping any directory part of the prefix.
pub fn with_suffix(prefix: &Path, name: &str, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!(".{name}.{ext}"));
    PathBuf::from(s)
}

/// Long-format overlay data: one `series,t,value` row per breakpoint.
pub fn write_plot_data(path: &Path, series: &[(&str, &PlPath)]) -> Result<()> {
    let mut buf = String::from("series,t,value\n");
    for (name, p) in series {
        for (t, v) in p.points() {
            buf.push_str(&format!("{name},{t},{}\n", v + 0.0));
        }
    }
    write_atomic(path, buf.as_bytes())
}

pub fn read_path(path: &Path) -> Result<PlPath> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    PlPath::read_csv(std::io::BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}
