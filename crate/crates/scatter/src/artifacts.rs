//! CSV and JSON artifact files. Each file starts with a `# config_hash=`
//! line (JSON files carry a `config_hash` key instead).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;

use crate::error::{Result, ScatterError};

/// Where a task writes its files.
#[derive(Debug, Clone)]
pub struct ArtifactDir {
    pub dir: PathBuf,
    pub gzip: bool,
    pub config_hash: String,
}

impl ArtifactDir {
    pub fn create(dir: &Path, gzip: bool, config_hash: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| ScatterError::io(dir, e))?;
        Ok(ArtifactDir { dir: dir.to_path_buf(), gzip, config_hash: config_hash.to_string() })
    }

    /// Writes `rows` under `header` to `<stem>.csv` (or `.csv.gz`) and
    /// returns the file name.
    pub fn csv<R, I>(&self, stem: &str, header: &[&str], rows: I) -> Result<String>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = f64>,
    {
        let name = if self.gzip { format!("{stem}.csv.gz") } else { format!("{stem}.csv") };
        let path = self.dir.join(&name);
        let file = File::create(&path).map_err(|e| ScatterError::io(&path, e))?;
        let mut sink: Box<dyn Write> = if self.gzip {
            Box::new(GzEncoder::new(BufWriter::new(file), Compression::default()))
        } else {
            Box::new(BufWriter::new(file))
        };
        writeln!(sink, "# config_hash={}", self.config_hash).map_err(|e| ScatterError::io(&path, e))?;
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.into_iter().map(fmt_f64))?;
        }
        let mut sink = w.into_inner().map_err(|e| ScatterError::io(&path, e.into_error()))?;
        sink.flush().map_err(|e| ScatterError::io(&path, e))?;
        drop(sink);
        Ok(name)
    }

    /// Writes `{"config_hash": …, "data": value}` to `<stem>.json`.
    pub fn json<T: Serialize>(&self, stem: &str, value: &T) -> Result<String> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            config_hash: &'a str,
            data: &'a T,
        }
        let name = format!("{stem}.json");
        let path = self.dir.join(&name);
        let text = serde_json::to_string_pretty(&Wrapped { config_hash: &self.config_hash, data: value })?;
        std::fs::write(&path, text).map_err(|e| ScatterError::io(&path, e))?;
        Ok(name)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| ScatterError::io(&path, e))
    }
}

/// Shortest representation that round-trips.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
