//! Dataset files: a JSON document `{"k": …, "counts": {"xyzz": {"++-+": 137, …}}}`
//! and a CSV table with header `setting,outcome,count`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use crate::dataset::CountsDataset;
use crate::error::{Error, Result};
use crate::pauli::{num_outcomes, Outcome, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Json,
    Csv,
}

impl DatasetFormat {
    /// Format implied by the file extension, if any.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(DatasetFormat::Json),
            "csv" => Some(DatasetFormat::Csv),
            _ => None,
        }
    }
}

/// Load a dataset; the format comes from the extension, falling back to
/// sniffing for a leading `{`.
pub fn load_dataset(path: &Path) -> Result<CountsDataset> {
    let text = std::fs::read_to_string(path)?;
    let format = DatasetFormat::from_path(path).unwrap_or(if text.trim_start().starts_with('{') {
        DatasetFormat::Json
    } else {
        DatasetFormat::Csv
    });
    parse_dataset(&text, format)
}

pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<CountsDataset> {
    match format {
        DatasetFormat::Json => parse_json(text),
        DatasetFormat::Csv => parse_csv(text),
    }
}

/// Save in the format implied by the extension (CSV when unknown).
pub fn save_dataset(data: &CountsDataset, path: &Path) -> Result<()> {
    let text = match DatasetFormat::from_path(path).unwrap_or(DatasetFormat::Csv) {
        DatasetFormat::Json => to_json(data),
        DatasetFormat::Csv => to_csv(data)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Map that keeps every entry, so duplicate keys can be reported.
struct Entries<V>(Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Entries<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V2<V>(std::marker::PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for V2<V> {
            type Value = Entries<V>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, V>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        deserializer.deserialize_map(V2(std::marker::PhantomData))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonDataset {
    k: usize,
    counts: Entries<Entries<serde_json::Number>>,
}

fn parse_count(raw: &str) -> Result<u64> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    match raw.parse::<i64>() {
        Ok(v) if v < 0 => Err(Error::InvalidDataset(format!("negative count {v}"))),
        _ => Err(Error::InvalidDataset(format!("count '{raw}' is not a non-negative integer"))),
    }
}

fn parse_setting(s: &str, k: usize) -> Result<Setting> {
    let setting: Setting = s.trim().parse()?;
    if setting.num_qubits() != k {
        return Err(Error::InvalidDataset(format!("setting '{s}' has {} qubits, expected {k}", setting.num_qubits())));
    }
    Ok(setting)
}

fn parse_outcome(s: &str, k: usize) -> Result<Outcome> {
    let outcome: Outcome = s.trim().parse()?;
    if outcome.signs().len() != k {
        return Err(Error::InvalidDataset(format!("outcome '{s}' has {} qubits, expected {k}", outcome.signs().len())));
    }
    Ok(outcome)
}

/// Accumulates cells, rejecting duplicates.
struct Builder {
    data: CountsDataset,
    seen: HashSet<(usize, usize)>,
}

impl Builder {
    fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDataset("k must be at least 1".into()));
        }
        Ok(Builder { data: CountsDataset::empty(k), seen: HashSet::new() })
    }

    fn touch(&mut self, setting: &Setting) -> Result<()> {
        if self.data.counts(setting).is_none() {
            self.data.insert(setting, vec![0; num_outcomes(self.data.num_qubits())])?;
        }
        Ok(())
    }

    fn add(&mut self, setting: &Setting, outcome: &Outcome, count: u64) -> Result<()> {
        if !self.seen.insert((setting.index(), outcome.index())) {
            return Err(Error::InvalidDataset(format!("duplicate cell ({setting}, {outcome})")));
        }
        self.data.add_cell(setting, outcome, count)
    }
}

fn parse_json(text: &str) -> Result<CountsDataset> {
    let doc: JsonDataset = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut b = Builder::new(doc.k)?;
    let mut settings_seen = HashSet::new();
    for (s, cells) in doc.counts.0 {
        let setting = parse_setting(&s, doc.k)?;
        if !settings_seen.insert(setting.index()) {
            return Err(Error::InvalidDataset(format!("duplicate setting '{s}'")));
        }
        b.touch(&setting)?;
        for (o, n) in cells.0 {
            let outcome = parse_outcome(&o, doc.k)?;
            b.add(&setting, &outcome, parse_count(&n.to_string())?)?;
        }
    }
    Ok(b.data)
}

fn parse_csv(text: &str) -> Result<CountsDataset> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["setting", "outcome", "count"] {
        return Err(Error::Parse(format!("expected header setting,outcome,count, got {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut builder: Option<Builder> = None;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse(format!("row {}: missing field", line + 2)));
        let s = field(0)?;
        let b = match &mut builder {
            Some(b) => b,
            None => builder.insert(Builder::new(s.chars().count())?),
        };
        let k = b.data.num_qubits();
        let with_row = |e: Error| Error::InvalidDataset(format!("row {}: {e}", line + 2));
        let setting = parse_setting(s, k).map_err(with_row)?;
        let outcome = parse_outcome(field(1)?, k).map_err(with_row)?;
        let count = parse_count(field(2)?).map_err(with_row)?;
        b.touch(&setting)?;
        b.add(&setting, &outcome, count).map_err(with_row)?;
    }
    builder.map(|b| b.data).ok_or_else(|| Error::InvalidDataset("no data rows".into()))
}

/// JSON text with settings and outcomes in canonical order.
pub fn to_json(data: &CountsDataset) -> String {
    let k = data.num_qubits();
    let mut counts = BTreeMap::new();
    for (s, c) in data.iter() {
        let cells: BTreeMap<String, u64> = c.iter().enumerate().map(|(i, &n)| (Outcome::from_index(k, i).to_string(), n)).collect();
        counts.insert(s.to_string(), cells);
    }
    let doc = serde_json::json!({ "k": k, "counts": counts });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

/// CSV text, one row per cell, canonical order.
pub fn to_csv(data: &CountsDataset) -> Result<String> {
    let k = data.num_qubits();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["setting", "outcome", "count"]).map_err(io)?;
    for (s, c) in data.iter() {
        for (i, n) in c.iter().enumerate() {
            w.write_record([s.to_string(), Outcome::from_index(k, i).to_string(), n.to_string()]).map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_basic() {
        let text = r#"{"k":1,"counts":{"x":{"+":4,"-":6},"y":{"+":5,"-":5},"z":{"+":10,"-":0}}}"#;
        let d = parse_json(text).unwrap();
        assert!(d.is_complete());
        assert_eq!(d.repetitions_all(), vec![10, 10, 10]);
        assert_eq!(parse_json(&to_json(&d)).unwrap(), d);
    }

    #[test]
    fn json_rejections() {
        let cases = [
            r#"{"k":1,"counts":{"x":{"+":-1}}}"#,
            r#"{"k":1,"counts":{"x":{"+":1.5}}}"#,
            r#"{"k":1,"counts":{"x":{"+":1,"+":2}}}"#,
            r#"{"k":1,"counts":{"x":{"+":1},"x":{"-":2}}}"#,
            r#"{"k":2,"counts":{"x":{"+":1}}}"#,
            r#"{"k":1,"counts":{"q":{"+":1}}}"#,
            r#"{"k":1,"counts":{"x":{"0":1}}}"#,
            r#"{"k":1,"counts":{"x":{"++":1}}}"#,
        ];
        for c in cases {
            assert!(parse_json(c).is_err(), "{c}");
        }
    }

    #[test]
    fn csv_basic_and_incomplete() {
        let text = "setting,outcome,count\nxx,++,3\nxx,--,2\nzz,+-,1\n";
        let d = parse_csv(text).unwrap();
        assert_eq!(d.num_qubits(), 2);
        assert_eq!(d.missing_settings(), 7);
        assert_eq!(d.counts(&"xx".parse().unwrap()).unwrap(), &[3, 0, 0, 2]);
        assert_eq!(parse_csv(&to_csv(&d).unwrap()).unwrap(), d);
    }

    #[test]
    fn csv_rejections() {
        let cases = [
            "setting,outcome,count\nx,+,1\nx,+,2\n",
            "setting,outcome,count\nx,+,-3\n",
            "setting,outcome,count\nx,+,1\nxy,++,2\n",
            "setting,outcome,count\nx,++,1\n",
            "setting,outcome\nx,+\n",
            "setting,outcome,count\n",
        ];
        for c in cases {
            assert!(parse_csv(c).is_err(), "{c}");
        }
    }

    #[test]
    fn unicode_minus_accepted() {
        let d = parse_csv("setting,outcome,count\nz,−,4\n").unwrap();
        assert_eq!(d.counts(&"z".parse().unwrap()).unwrap(), &[0, 4]);
    }
}
