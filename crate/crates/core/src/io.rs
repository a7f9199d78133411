//! Small file helpers shared by the dataset and model stores.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes `(index, name)` rows under a header line.
pub(crate) fn write_index_table(path: &Path, header: &str, names: &[String]) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| {
        writeln!(w, "index\t{header}")?;
        for (i, name) in names.iter().enumerate() {
            writeln!(w, "{i}\t{name}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub(crate) fn read_index_table(path: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for (lineno, line) in read_lines(path)?.into_iter().enumerate().skip(1) {
        let (idx, name) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(path, format!("line {}: expected index<TAB>name", lineno + 1)))?;
        if idx.parse::<usize>().ok() != Some(names.len()) {
            return Err(Error::format(path, format!("line {}: index {idx:?} out of sequence", lineno + 1)));
        }
        names.push(name.to_owned());
    }
    Ok(names)
}

pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
        .map(|lines| lines.into_iter().filter(|l| !l.is_empty()).collect())
}

pub(crate) fn parse_field<T: std::str::FromStr>(path: &Path, lineno: usize, raw: Option<&str>) -> Result<T> {
    raw.and_then(|r| r.parse().ok())
        .ok_or_else(|| Error::format(path, format!("line {lineno}: bad or missing field")))
}
