//! Report formatting and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use predictorlab_core::sim::format_f64;
use predictorlab_core::Matrix;

/// Writes `name` inside `dir` by filling a temporary sibling and renaming
/// it into place, so readers never see a half-written file.
pub fn write_atomic(
    dir: &Path,
    name: &str,
    fill: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let result = (|| {
        let mut w = io::BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, dir.join(name))
}

/// Line-oriented `key = value` report.
#[derive(Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv(key, format_f64(value))
    }

    pub fn matrix(&mut self, key: &str, m: &Matrix) -> &mut Self {
        self.kv(key, matrix_text(m))
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.text, "# {text}");
        self
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn save(&self, dir: &Path, name: &str) -> io::Result<()> {
        write_atomic(dir, name, |w| w.write_all(self.text.as_bytes()))
    }
}

/// `[[a, b], [c, d]]` with full precision.
pub fn matrix_text(m: &Matrix) -> String {
    let rows: Vec<String> = m
        .to_rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|&v| format_f64(v)).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_lines() {
        let mut r = Report::new();
        r.kv("a", 1).num("b", 0.5);
        assert_eq!(r.as_str(), "a = 1\nb = 5.0000000000000000e-1\n");
    }

    #[test]
    fn matrix_layout() {
        let m = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert_eq!(matrix_text(&m), "[[1.0000000000000000e0, 0.0000000000000000e0]]");
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.txt", |w| w.write_all(b"hi")).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("x.txt")).unwrap(), "hi");
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn failed_fill_keeps_old_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.txt", |w| w.write_all(b"old")).unwrap();
        let r = write_atomic(dir.path(), "x.txt", |_| Err(io::Error::other("boom")));
        assert!(r.is_err());
        assert_eq!(fs::read_to_string(dir.path().join("x.txt")).unwrap(), "old");
    }
}
