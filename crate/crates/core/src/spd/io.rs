//! Row-major matrix (de)serialization: JSON array-of-arrays and headerless CSV.

use super::SpdMatrix;
use crate::error::{Error, Result};

/// Serializes as a JSON array of rows. Numbers use the shortest repr that
/// round-trips exactly.
pub fn matrix_to_json(a: &SpdMatrix) -> String {
    serde_json::to_string(&a.to_rows()).expect("finite matrix serializes")
}

pub fn matrix_from_json(s: &str) -> Result<SpdMatrix> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    SpdMatrix::from_rows(&rows)
}

/// One row per line, 17 significant digits.
pub fn matrix_to_csv(a: &SpdMatrix) -> String {
    let mut out = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
        for row in a.to_rows() {
            w.write_record(row.iter().map(|x| format!("{x:.16e}")))
                .expect("in-memory write");
        }
        w.flush().expect("in-memory flush");
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

pub fn matrix_from_csv(s: &str) -> Result<SpdMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(s.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    SpdMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpdMatrix {
        SpdMatrix::from_rows(&[
            vec![2.0, 0.1 + 0.2, -1.0 / 3.0],
            vec![0.1 + 0.2, 1.5, 1e-7],
            vec![-1.0 / 3.0, 1e-7, 4.25],
        ])
        .unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let a = sample();
        let s = matrix_to_json(&a);
        assert_eq!(matrix_from_json(&s).unwrap(), a);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let a = sample();
        let s = matrix_to_csv(&a);
        assert!(s.lines().next().unwrap().starts_with("2.0000000000000000e0,"));
        assert_eq!(matrix_from_csv(&s).unwrap(), a);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(matrix_from_json("[[1, 2], [3]]").is_err());
        assert!(matrix_from_csv("1,0\n0,x\n").is_err());
        assert!(matrix_from_json("not json").is_err());
    }
}
