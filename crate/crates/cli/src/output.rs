//! Atomic file output. Every file is written to a temporary sibling and renamed.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

/// Output directory, created on demand.
pub struct OutDir {
    root: PathBuf,
}

/// Round-trip formatting with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write_with<F>(&self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut NamedTempFile) -> Result<(), CliError>,
    {
        let mut tmp = NamedTempFile::new_in(&self.root)?;
        body(&mut tmp)?;
        tmp.as_file_mut().flush()?;
        let dest = self.path(name);
        tmp.persist(&dest).map_err(|e| CliError::Io(e.error))?;
        Ok(dest)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write_with(name, |f| {
            serde_json::to_writer_pretty(&mut *f, value).map_err(|e| CliError::Io(e.into()))?;
            writeln!(f)?;
            Ok(())
        })
    }

    /// CSV with a header and one row of numbers per record.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf, CliError> {
        self.write_with(name, |f| {
            writeln!(f, "{}", header.join(","))?;
            for row in rows {
                let line: Vec<String> = row.iter().map(|&x| num(x)).collect();
                writeln!(f, "{}", line.join(","))?;
            }
            Ok(())
        })
    }

    pub fn series(&self, name: &str, series: &deltactl::timebase::ComplexSeries) -> Result<PathBuf, CliError> {
        self.write_with(name, |f| Ok(series.write_csv(&mut *f)?))
    }
}
