//! CSV output with a leading comment line.

use std::path::Path;

use crate::error::{Result, TemError};

/// Writes `header` and `rows` as CSV. A `comment`, if given, goes first and
/// must start with `#`.
pub fn write_csv<I, R>(path: &Path, comment: Option<&str>, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut buf = Vec::new();
    if let Some(c) = comment {
        if !c.starts_with('#') {
            return Err(TemError::Config(format!(
                "csv comment must start with '#': {c}"
            )));
        }
        buf.extend_from_slice(c.as_bytes());
        buf.push(b'\n');
    }
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let ser = |e: csv::Error| TemError::Serialize {
            path: path.into(),
            message: e.to_string(),
        };
        w.write_record(header).map_err(ser)?;
        for r in rows {
            w.write_record(r).map_err(ser)?;
        }
        w.flush().map_err(|e| TemError::io(path, e))?;
    }
    crate::diagram::write_bytes(path, &buf)
}
