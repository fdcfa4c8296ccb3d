//! Measure serialization: CSV with header `location,weight` (ascending) and
//! JSON arrays of `[location, weight]` pairs. Both round-trip finite doubles
//! bit-exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::DiscreteMeasure;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Row {
    location: f64,
    weight: f64,
}

pub fn write_csv<W: Write>(mu: &DiscreteMeasure, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (location, weight) in mu.atoms() {
        w.serialize(Row { location, weight }).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(mu: &DiscreteMeasure) -> String {
    let mut buf = Vec::new();
    write_csv(mu, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn read_csv<R: Read>(input: R) -> Result<DiscreteMeasure> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["location", "weight"] {
        return Err(Error::Parse(format!("expected header location,weight, got {:?}", headers)));
    }
    let mut locs = Vec::new();
    let mut weights = Vec::new();
    for row in r.deserialize::<Row>() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        locs.push(row.location);
        weights.push(row.weight);
    }
    DiscreteMeasure::new(&locs, &weights)
}

pub fn to_json_string(mu: &DiscreteMeasure) -> String {
    serde_json::to_string(mu).expect("finite measure serializes")
}

pub fn from_json_str(s: &str) -> Result<DiscreteMeasure> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mu = DiscreteMeasure::new(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(to_csv_string(&mu), "location,weight\n0.0,0.5\n1.0,0.5\n");
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(read_csv("x,y\n1,1\n".as_bytes()).is_err());
    }

    #[test]
    fn awkward_values_round_trip() {
        let locs = [0.0, 1e-300, 0.1 + 0.2, 1.0 / 3.0, 123_456_789.123_456_79, 1e300];
        let w = [f64::MIN_POSITIVE, 0.2, 1.0 / 7.0, 0.3, 1e-17, 0.1];
        let mu = DiscreteMeasure::new(&locs, &w).unwrap();
        let back = read_csv(to_csv_string(&mu).as_bytes()).unwrap();
        assert_eq!(back, mu);
        let back = from_json_str(&to_json_string(&mu)).unwrap();
        assert_eq!(back, mu);
    }
}
