use gflow_core::flow::{Dataset, FlowError};
use std::io::Read;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },
    #[error("expected a header line \"x,y\", found {found:?}")]
    Header { found: String },
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Dataset(#[from] FlowError),
}

/// Parse CSV text with header `x,y` and one sample per row.
pub fn parse_dataset<R: Read>(input: R) -> Result<Dataset, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(IngestError::Empty),
        Some(r) => r.map_err(|e| IngestError::Malformed { line: 1, msg: e.to_string() })?,
    };
    if header.iter().collect::<Vec<_>>() != ["x", "y"] {
        return Err(IngestError::Header { found: header.iter().collect::<Vec<_>>().join(",") });
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in records {
        let rec = rec.map_err(|e| IngestError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(IngestError::Malformed { line, msg: format!("expected 2 fields, found {}", rec.len()) });
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| IngestError::Malformed { line, msg: format!("{s:?} is not a number") })
        };
        xs.push(num(&rec[0])?);
        ys.push(num(&rec[1])?);
    }
    if xs.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(Dataset::new(xs, ys)?)
}

pub fn ingest_dataset(path: &Path) -> Result<Dataset, IngestError> {
    let file =
        std::fs::File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    parse_dataset(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_header_and_rows() {
        let ds = parse_dataset("x,y\n1,1\n2,0\n".as_bytes()).unwrap();
        assert_eq!((ds.xs(), ds.ys()), (&[1.0, 2.0][..], &[1.0, 0.0][..]));
        let ds = parse_dataset("x, y\n 1.5e0 , -2\n\n".as_bytes()).unwrap();
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn reports_bad_input() {
        let e = parse_dataset("1,2\n3,4\n".as_bytes()).unwrap_err();
        assert!(matches!(e, IngestError::Header { .. }));
        assert!(e.to_string().contains("x,y"));
        let e = parse_dataset("x,y\n1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(e, IngestError::Malformed { line: 2, .. }), "{e}");
        let e = parse_dataset("x,y\n1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, IngestError::Malformed { line: 3, .. }), "{e}");
        assert!(matches!(parse_dataset("".as_bytes()), Err(IngestError::Empty)));
        assert!(matches!(parse_dataset("x,y\n".as_bytes()), Err(IngestError::Empty)));
        assert!(matches!(parse_dataset("x,y\nnan,1\n".as_bytes()), Err(IngestError::Dataset(_))));
    }
}
