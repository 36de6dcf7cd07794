use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, OrFailed, OrInvalid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A header plus string rows, written as delimited text.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).or_failed()?;
        for r in &self.rows {
            w.write_record(r).or_failed()?;
        }
        w.into_inner().map_err(|e| CliError::failed(anyhow::anyhow!("{e}")))
    }
}

/// Formats a float for tables; infinities and NaN are spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let bytes = fs::read(path)
        .or_invalid()
        .map_err(|e| e.context(format!("reading {}", path.display())))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// Output directory plus a record of every file read and written.
pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    primary: Option<(Vec<u8>, Vec<u8>)>,
}

impl Output {
    pub fn new(dir: &Path, format: Format) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .or_failed()
            .map_err(|e| e.context(format!("creating {}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            inputs: Vec::new(),
            outputs: Vec::new(),
            primary: None,
        })
    }

    /// Relative paths land inside the output directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.dir.join(path)
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let d = digest(path)?;
        if !self.inputs.iter().any(|i| i.path == d.path) {
            self.inputs.push(d);
        }
        Ok(())
    }

    pub fn write_bytes(&mut self, path: &Path, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.resolve(path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).or_failed()?;
        }
        let mut f = fs::File::create(&path)
            .or_failed()
            .map_err(|e| e.context(format!("writing {}", path.display())))?;
        f.write_all(bytes)
            .or_failed()
            .map_err(|e| e.context(format!("writing {}", path.display())))?;
        self.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, path: &Path, value: &T) -> CliResult<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(value).or_failed()?;
        bytes.push(b'\n');
        self.write_bytes(path, &bytes)?;
        Ok(bytes)
    }

    pub fn csv(&mut self, path: &Path, table: &Table) -> CliResult<Vec<u8>> {
        let bytes = table.to_csv()?;
        self.write_bytes(path, &bytes)?;
        Ok(bytes)
    }

    /// Writes `<stem>.json` and `<stem>.csv`; the one matching `--format` is echoed.
    pub fn report<T: Serialize + ?Sized>(
        &mut self,
        stem: &str,
        value: &T,
        table: &Table,
    ) -> CliResult<()> {
        let json = self.json(Path::new(&format!("{stem}.json")), value)?;
        let csv = self.csv(Path::new(&format!("{stem}.csv")), table)?;
        if self.primary.is_none() {
            self.primary = Some((json, csv));
        }
        Ok(())
    }

    pub fn stdout_payload(&self) -> Option<&[u8]> {
        self.primary.as_ref().map(|(j, c)| match self.format {
            Format::Json => j.as_slice(),
            Format::Csv => c.as_slice(),
        })
    }
}
