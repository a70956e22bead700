use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotStyle {
    Curve,
    Histogram,
}

#[derive(Debug, Serialize)]
struct PlotDescriptor<'a> {
    style: PlotStyle,
    data: &'a str,
    x_label: &'a str,
    y_label: &'a str,
    /// Reference curve to overlay, e.g. `exp` for `e^{-x}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<&'a str>,
}

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    threads: usize,
    started_unix: u64,
    runtime_ms: f64,
    files: Vec<FileEntry>,
}

/// Files written by one run, tracked for the manifest.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Artifacts {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, body: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: hex(body),
            bytes: body.len() as u64,
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> std::io::Result<()> {
        let mut body = String::with_capacity(64 * (rows.len() + 1));
        body.push_str(header);
        body.push('\n');
        for r in rows {
            body.push_str(r);
            body.push('\n');
        }
        self.write(name, body.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut body = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        body.push('\n');
        self.write(name, body.as_bytes())
    }

    /// Two-column `x y` text with a `#` header, plus a JSON descriptor.
    pub fn plot(
        &mut self,
        stem: &str,
        style: PlotStyle,
        labels: (&str, &str),
        reference: Option<&str>,
        points: &[(f64, f64)],
    ) -> std::io::Result<()> {
        let data = format!("{stem}.plot.txt");
        let mut body = format!("# {} {}\n", labels.0, labels.1);
        for (x, y) in points {
            body.push_str(&format!("{x:e} {y:e}\n"));
        }
        self.write(&data, body.as_bytes())?;
        let desc = PlotDescriptor {
            style,
            data: &data,
            x_label: labels.0,
            y_label: labels.1,
            reference,
        };
        self.json(&format!("{stem}.plot.json"), &desc)
    }

    pub fn finish(self, config: &RunConfig, threads: usize, started: SystemTime, runtime_ms: f64) -> std::io::Result<PathBuf> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            threads,
            started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            runtime_ms,
            files: self.files,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n")?;
        Ok(path)
    }
}
