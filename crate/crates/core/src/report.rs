//! Output documents.
//!
//! JSON reports have the shape
//! `{ schema, schema_version, command, version, model, result, timing }`;
//! everything except `timing` is a deterministic function of the config.
//!
//! CSV tables start with a `# schema: bhcluster.<command>/<version>` comment
//! line followed by a header row. Floats use the shortest decimal string that
//! parses back to the same `f64`; absent optional values are empty fields.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ModelInstance;
use crate::SCHEMA_VERSION;

pub fn schema_name(command: &str) -> String {
    format!("bhcluster.{command}/{SCHEMA_VERSION}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub dims: Vec<usize>,
    pub periodic: bool,
    pub num_sites: usize,
    pub beta: f64,
    pub num_edges: usize,
}

impl ModelSummary {
    pub fn of(model: &ModelInstance) -> Self {
        ModelSummary {
            dims: model.lattice.dims().to_vec(),
            periodic: model.lattice.periodic(),
            num_sites: model.num_sites(),
            beta: model.beta,
            num_edges: model.couplings.interaction_edges(0.0).len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema: String,
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    pub model: ModelSummary,
    pub result: T,
    pub timing: Timing,
}

impl<T> Document<T> {
    pub fn new(command: &str, model: &ModelInstance, result: T, elapsed_seconds: f64) -> Self {
        Document {
            schema: schema_name(command),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            model: ModelSummary::of(model),
            result,
            timing: Timing { elapsed_seconds },
        }
    }
}

pub fn to_json<T: Serialize>(doc: &Document<T>) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc).map_err(|e| Error::Io(format!("json encode: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Parses a JSON report and checks its schema stamp.
pub fn parse_json<T: DeserializeOwned>(text: &str, command: &str) -> Result<Document<T>> {
    let doc: Document<T> = serde_json::from_str(text).map_err(|e| Error::Io(format!("json decode: {e}")))?;
    if doc.schema != schema_name(command) || doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Io(format!("unexpected schema `{}` (want `{}`)", doc.schema, schema_name(command))));
    }
    Ok(doc)
}

pub fn to_csv<R: Serialize>(command: &str, rows: &[R]) -> Result<String> {
    let mut out = format!("# schema: {}\n", schema_name(command)).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r).map_err(|e| Error::Io(format!("csv encode: {e}")))?;
        }
        w.flush()?;
    }
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

/// Parses a CSV table written by [`to_csv`], checking the schema line.
pub fn parse_csv<R: DeserializeOwned>(text: &str, command: &str) -> Result<Vec<R>> {
    let first = text.lines().next().unwrap_or_default();
    let want = format!("# schema: {}", schema_name(command));
    if first != want {
        return Err(Error::Io(format!("unexpected csv schema line `{first}` (want `{want}`)")));
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()
        .map_err(|e| Error::Io(format!("csv decode: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        k: usize,
        x: f64,
        y: Option<f64>,
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![
            Row { k: 1, x: 0.1, y: None },
            Row { k: 2, x: 1.0 / 3.0, y: Some(-2.5e-13) },
            Row { k: 3, x: std::f64::consts::PI * 1e20, y: Some(0.0) },
        ];
        let text = to_csv("demo", &rows).unwrap();
        assert!(text.starts_with("# schema: bhcluster.demo/1\nk,x,y\n1,0.1,\n"), "{text}");
        assert_eq!(parse_csv::<Row>(&text, "demo").unwrap(), rows);
        assert!(parse_csv::<Row>(&text, "other").is_err());
    }

    #[test]
    fn json_round_trip() {
        let model = ModelInstance::uniform(
            crate::Lattice::chain(2).unwrap(),
            &crate::CouplingSpec::FiniteRange { g: 0.3, cutoff: 1 },
            1.0,
            0.0,
            0.5,
        )
        .unwrap();
        let doc = Document::new("demo", &model, vec![1.0 / 7.0, 2.0], 0.25);
        let text = to_json(&doc).unwrap();
        let back: Document<Vec<f64>> = parse_json(&text, "demo").unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.model.num_edges, 1);
        assert!(parse_json::<Vec<f64>>(&text, "approx").is_err());
    }
}
