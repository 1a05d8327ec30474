use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

/// 17 significant digits, scientific notation.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Hash of everything that determines the output.
pub fn input_hash(command: &str, flags: &[(&str, String)], echo: &str) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for (k, v) in flags {
        h.update(format!("\n{k}={v}").as_bytes());
    }
    h.update(b"\n");
    h.update(echo.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub footer: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.header.push(line.into());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.header {
            out.push_str(&format!("# {l}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|&v| fmt(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for l in &self.footer {
            out.push_str(&format!("# {l}\n"));
        }
        out
    }
}

/// Writes to `path` through a sibling temporary file, or to stdout.
pub fn emit(path: Option<&Path>, content: &str) -> io::Result<()> {
    match path {
        None => io::stdout().lock().write_all(content.as_bytes()),
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| e.error)?;
            Ok(())
        }
    }
}
