//! Run artifacts: commented CSV tables, plain-text PGM snapshots, and a
//! digest manifest. Every writer is deterministic so identical runs give
//! identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::lattice::{Domain, SpinConfig};
use crate::Result;

/// Quote a CSV field per RFC 4180 when it contains a delimiter, quote, or
/// line break; numeric fields pass through untouched.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Collects output files for one run, hashing each as it is written.
pub struct OutputWriter {
    dir: PathBuf,
    echo: String,
    manifest: Vec<(String, String)>,
}

impl OutputWriter {
    pub fn new(dir: &Path, config: &ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        // the echoed config omits the output location so a run's bytes
        // depend only on (config, seed), not on where they land
        let mut c = config.clone();
        c.out = PathBuf::new();
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            echo: c.echo(),
            manifest: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        let digest = Sha256::digest(bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{:02x}", b).unwrap();
        }
        self.manifest.push((name.to_string(), hex));
        Ok(path)
    }

    /// CSV with the config echoed in '#' comment lines, then a header row
    /// and the records, CRLF-terminated.
    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf> {
        let mut out = String::new();
        for line in self.echo.clone().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push_str("\r\n");
        }
        out.push_str(&header.join(","));
        out.push_str("\r\n");
        for row in rows {
            let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            out.push_str(&fields.join(","));
            out.push_str("\r\n");
        }
        self.write_file(name, out.as_bytes())
    }

    /// Plain-text PGM, maxval 1, mapping spin -1 to 0 and +1 to 1. Rows are
    /// emitted north to south so snapshots read like figures.
    pub fn write_pgm(&mut self, name: &str, domain: &Domain, cfg: &SpinConfig) -> Result<PathBuf> {
        let b = domain.bounds();
        let mut out = format!("P2\n{} {}\n1\n", b.width(), b.height());
        for y in (b.y0..=b.y1).rev() {
            let mut row = Vec::with_capacity(b.width() as usize);
            for x in b.x0..=b.x1 {
                let v = match domain.index_of((x, y)) {
                    Some(i) => {
                        if cfg.get(i) > 0 {
                            "1"
                        } else {
                            "0"
                        }
                    }
                    None => "0",
                };
                row.push(v);
            }
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        self.write_file(name, out.as_bytes())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        self.write_file(name, text.as_bytes())
    }

    /// Writes `manifest.txt` listing every emitted file with its SHA-256
    /// digest, and returns the manifest body for inspection.
    pub fn finish(mut self) -> Result<String> {
        self.manifest.sort();
        let mut body = String::new();
        for (name, digest) in &self.manifest {
            body.push_str(digest);
            body.push_str("  ");
            body.push_str(name);
            body.push('\n');
        }
        std::fs::write(self.dir.join("manifest.txt"), body.as_bytes())?;
        Ok(body)
    }
}
