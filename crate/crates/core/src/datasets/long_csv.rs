//! Generic long-format loader: `record_id,signal,timestamp,value` rows plus a
//! `record_id,label` file.

use std::collections::HashMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pipeline::{Observation, RawRecord};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LongCsvSchema {
    /// Fixed signal order. When `None`, signals are the sorted distinct names
    /// found in the data.
    pub signals: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LongCsvDataset {
    pub signal_names: Vec<String>,
    pub records: Vec<RawRecord>,
}

#[derive(Deserialize)]
struct Row {
    record_id: String,
    signal: String,
    timestamp: String,
    value: String,
}

#[derive(Deserialize)]
struct LabelRow {
    record_id: String,
    label: String,
}

fn parse_num(field: &str, what: &str, line: usize) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse { line, message: format!("unparseable {what} `{field}`") }),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes())
}

/// Records appear in label-file order, including records without any data
/// rows; each signal's observations are sorted by timestamp.
pub fn load_long_csv(data: &str, labels: &str, schema: &LongCsvSchema) -> Result<LongCsvDataset> {
    let mut label_of: HashMap<String, usize> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for (k, row) in reader(labels).deserialize::<LabelRow>().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let label: usize = row
            .label
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("label `{}` is not a class index", row.label) })?;
        if label_of.insert(row.record_id.clone(), label).is_some() {
            return Err(Error::Parse { line, message: format!("duplicate label for `{}`", row.record_id) });
        }
        order.push(row.record_id);
    }

    let mut rows = Vec::new();
    for (k, row) in reader(data).deserialize::<Row>().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let t = parse_num(&row.timestamp, "timestamp", line)?;
        let v = parse_num(&row.value, "value", line)?;
        rows.push((line, row.record_id, row.signal, t, v));
    }

    let names = match &schema.signals {
        Some(names) => names.clone(),
        None => {
            let mut names: Vec<String> = rows.iter().map(|r| r.2.clone()).collect();
            names.sort();
            names.dedup();
            names
        }
    };
    let signal_index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut by_record: HashMap<String, Vec<Vec<Observation>>> = HashMap::new();
    for (line, rid, signal, t, v) in rows {
        let &s = signal_index
            .get(signal.as_str())
            .ok_or_else(|| Error::Parse { line, message: format!("signal `{signal}` is not in the schema") })?;
        if !label_of.contains_key(&rid) {
            return Err(Error::Config(format!("label file has no entry for record `{rid}`")));
        }
        let entry = by_record.entry(rid).or_insert_with(|| vec![Vec::new(); names.len()]);
        entry[s].push(Observation::new(t, v));
    }

    let mut records = Vec::with_capacity(order.len());
    for rid in order {
        let label = label_of[&rid];
        let mut signals = by_record.remove(&rid).unwrap_or_else(|| vec![Vec::new(); names.len()]);
        for obs in &mut signals {
            obs.sort_by(|a, b| a.time.total_cmp(&b.time));
        }
        records.push(RawRecord::new(rid, label, signals)?);
    }
    Ok(LongCsvDataset { signal_names: names, records })
}

/// Serializes records to the long data format and the label format.
pub fn write_long_csv(signal_names: &[String], records: &[RawRecord]) -> Result<(String, String)> {
    let csv_err = |e: csv::Error| Error::Contract(format!("csv serialization: {e}"));
    let mut data = csv::Writer::from_writer(Vec::new());
    data.write_record(["record_id", "signal", "timestamp", "value"]).map_err(csv_err)?;
    let mut labels = csv::Writer::from_writer(Vec::new());
    labels.write_record(["record_id", "label"]).map_err(csv_err)?;
    for r in records {
        if r.num_signals() != signal_names.len() {
            return Err(Error::dim("write_long_csv", r.num_signals(), signal_names.len()));
        }
        labels.write_record([r.id.as_str(), &r.label.to_string()]).map_err(csv_err)?;
        for (name, obs) in signal_names.iter().zip(&r.signals) {
            for o in obs {
                data.write_record([r.id.as_str(), name, &o.time.to_string(), &o.value.to_string()])
                    .map_err(csv_err)?;
            }
        }
    }
    let finish = |w: csv::Writer<Vec<u8>>| -> Result<String> {
        let bytes = w.into_inner().map_err(|e| Error::Contract(format!("csv flush: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Contract(e.to_string()))
    };
    Ok((finish(data)?, finish(labels)?))
}
