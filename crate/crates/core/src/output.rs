//! CSV emission with a config-hash header line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

/// Fixed 17-significant-digit scientific notation; `inf`/`-inf`/`NaN` as is.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Hex SHA-256 of the given text.
pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A CSV writer whose first line is `# config_hash=<hash>`.
pub struct CsvOut<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvOut<W> {
    pub fn new(mut sink: W, config_hash: &str, header: &[&str]) -> Result<Self> {
        writeln!(sink, "# config_hash={config_hash}")?;
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<()> {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

impl CsvOut<BufWriter<File>> {
    pub fn create(path: &Path, config_hash: &str, header: &[&str]) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), config_hash, header)
    }
}
