//! PhysioNet/CinC Challenge 2012 (Set A) per-patient files and outcomes.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pipeline::{Observation, RawRecord};

/// The 37 temporal variables, in the order used for signal indices.
pub const PHYSIONET_SIGNALS: [&str; 37] = [
    "ALP", "ALT", "AST", "Albumin", "BUN", "Bilirubin", "Cholesterol", "Creatinine", "DiasABP", "FiO2", "GCS",
    "Glucose", "HCO3", "HCT", "HR", "K", "Lactate", "MAP", "MechVent", "Mg", "NIDiasABP", "NIMAP", "NISysABP",
    "Na", "PaCO2", "PaO2", "Platelets", "RespRate", "SaO2", "SysABP", "Temp", "TroponinI", "TroponinT", "Urine",
    "WBC", "Weight", "pH",
];

/// Published per-variable missing rates, aligned with [`PHYSIONET_SIGNALS`].
pub const PUBLISHED_MISSING_RATES: [f64; 37] = [
    0.9875, 0.9871, 0.9871, 0.9903, 0.9447, 0.9871, 0.9987, 0.9445, 0.5594, 0.8989, 0.7789, 0.9473, 0.9456,
    0.9303, 0.2218, 0.9417, 0.9752, 0.5647, 0.9042, 0.9464, 0.6203, 0.6255, 0.6199, 0.9453, 0.9303, 0.9303,
    0.9459, 0.7682, 0.977, 0.5592, 0.7259, 0.9984, 0.9912, 0.5355, 0.9496, 0.5741, 0.9272,
];

/// General descriptors recorded once at admission; excluded from the
/// signal set.
pub const STATIC_DESCRIPTORS: [&str; 5] = ["RecordID", "Age", "Gender", "Height", "ICUType"];

pub const EXPECTED_RECORDS: usize = 4000;
pub const EXPECTED_SURVIVORS: usize = 2526;

pub const SURVIVED: usize = 0;
pub const DIED: usize = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRecord {
    pub record: RawRecord,
    pub sentinel_dropped: usize,
    pub unknown_parameters: usize,
}

pub fn signal_names() -> Vec<String> {
    PHYSIONET_SIGNALS.iter().map(|s| s.to_string()).collect()
}

fn parse_time(field: &str) -> Option<f64> {
    let (h, m) = field.trim().split_once(':')?;
    let h: u32 = h.parse().ok()?;
    let m: u32 = m.parse().ok()?;
    if m >= 60 {
        return None;
    }
    Some(h as f64 + m as f64 / 60.0)
}

/// Parses one `Time,Parameter,Value` patient file. The record id comes from
/// the `RecordID` descriptor when present, else `fallback_id`. Labels are
/// attached later from the outcomes file.
pub fn parse_physionet_record(text: &str, fallback_id: &str) -> Result<ParsedRecord> {
    let index: HashMap<&str, usize> = PHYSIONET_SIGNALS.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "Time,Parameter,Value" => {}
        Some((n, other)) => {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("expected header `Time,Parameter,Value`, found `{}`", other.trim()),
            })
        }
        None => return Err(Error::Parse { line: 1, message: "empty record file".into() }),
    }
    let mut signals: Vec<Vec<Observation>> = vec![Vec::new(); PHYSIONET_SIGNALS.len()];
    let mut id = None;
    let (mut sentinel, mut unknown) = (0, 0);
    for (n, line) in lines {
        let bad = |message: String| Error::Parse { line: n + 1, message };
        let mut fields = line.trim().split(',');
        let (Some(time), Some(param), Some(value), None) = (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad(format!("expected 3 fields in `{}`", line.trim())));
        };
        let time = parse_time(time).ok_or_else(|| bad(format!("bad HH:MM time `{time}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad value `{}`", value.trim())))?;
        if !value.is_finite() {
            return Err(bad(format!("non-finite value `{value}`")));
        }
        let param = param.trim();
        if STATIC_DESCRIPTORS.contains(&param) {
            if param == "RecordID" {
                id = Some(format!("{}", value as i64));
            }
            continue;
        }
        let Some(&s) = index.get(param) else {
            unknown += 1;
            continue;
        };
        if value == -1.0 {
            sentinel += 1;
            continue;
        }
        signals[s].push(Observation::new(time, value));
    }
    for obs in &mut signals {
        obs.sort_by(|a, b| a.time.total_cmp(&b.time));
    }
    if unknown > 0 {
        warn!("record {}: skipped {unknown} rows with unknown parameters", id.as_deref().unwrap_or(fallback_id));
    }
    let record = RawRecord::new(id.unwrap_or_else(|| fallback_id.to_string()), 0, signals)?;
    Ok(ParsedRecord { record, sentinel_dropped: sentinel, unknown_parameters: unknown })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcomes {
    pub labels: BTreeMap<String, usize>,
    pub survived: usize,
    pub died: usize,
}

/// Parses `Outcomes-a`: `Survival == -1` (no recorded death) is labelled
/// [`SURVIVED`], anything else [`DIED`].
pub fn parse_outcomes(text: &str) -> Result<Outcomes> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { line: 1, message: format!("outcomes file lacks a `{name}` column") })
    };
    let (id_col, surv_col) = (col("RecordID")?, col("Survival")?);
    let mut out = Outcomes { labels: BTreeMap::new(), survived: 0, died: 0 };
    for (k, row) in reader.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let get = |c: usize| row.get(c).ok_or_else(|| Error::Parse { line, message: "short row".into() });
        let id = get(id_col)?.to_string();
        let survival: f64 = get(surv_col)?
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("bad Survival value `{}`", get(surv_col).unwrap_or("")) })?;
        let label = if survival == -1.0 { SURVIVED } else { DIED };
        if out.labels.insert(id.clone(), label).is_some() {
            return Err(Error::Parse { line, message: format!("duplicate RecordID {id}") });
        }
        if label == SURVIVED {
            out.survived += 1;
        } else {
            out.died += 1;
        }
    }
    Ok(out)
}

/// Compares cohort counts with the expected Set-A figures; mismatches are
/// returned as warnings, never errors.
pub fn validate_cohort(records: usize, survivors: usize) -> Vec<String> {
    let mut warnings = Vec::new();
    if records != EXPECTED_RECORDS {
        warnings.push(format!("cohort has {records} records, expected {EXPECTED_RECORDS}"));
    }
    if survivors != EXPECTED_SURVIVORS {
        warnings.push(format!("cohort has {survivors} survivors, expected {EXPECTED_SURVIVORS}"));
    }
    for w in &warnings {
        warn!("{w}");
    }
    warnings
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysionetCohort {
    pub records: Vec<RawRecord>,
    pub survivors: usize,
    pub excluded: Vec<String>,
    pub sentinel_dropped: usize,
    pub warnings: Vec<String>,
}

/// Loads every `*.txt` patient file in `dir` (sorted by file name) and
/// attaches outcome labels; records without an outcome are excluded.
pub fn load_physionet_dir(dir: &Path, outcomes_path: &Path, exec: Exec) -> Result<PhysionetCohort> {
    let outcomes_text = std::fs::read_to_string(outcomes_path).map_err(|e| Error::io(outcomes_path, e))?;
    let outcomes = parse_outcomes(&outcomes_text)?;
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let parsed = exec
        .map(&paths, |p| -> Result<ParsedRecord> {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            parse_physionet_record(&text, &stem).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", p.display()) },
                other => other,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(parsed.len());
    let mut excluded = Vec::new();
    let mut sentinel = 0;
    for mut p in parsed {
        sentinel += p.sentinel_dropped;
        match outcomes.labels.get(&p.record.id) {
            Some(&label) => {
                p.record.label = label;
                records.push(p.record);
            }
            None => {
                warn!("record {} has no outcome; excluded", p.record.id);
                excluded.push(p.record.id);
            }
        }
    }
    let survivors = records.iter().filter(|r| r.label == SURVIVED).count();
    let warnings = validate_cohort(records.len(), survivors);
    Ok(PhysionetCohort { records, survivors, excluded, sentinel_dropped: sentinel, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_conversion_and_descriptors() {
        let text = "Time,Parameter,Value\n00:00,RecordID,132539\n00:00,Age,54\n00:07,HR,88\n01:30,HR,92\n";
        let p = parse_physionet_record(text, "x").unwrap();
        assert_eq!(p.record.id, "132539");
        let hr = &p.record.signals[14];
        assert_eq!(hr.len(), 2);
        assert!((hr[0].time - 0.1167).abs() < 1e-4);
        assert_eq!(hr[0].value, 88.0);
        assert_eq!(hr[1], Observation::new(1.5, 92.0));
        assert_eq!(p.record.observation_count(), 2);
    }

    #[test]
    fn descriptor_only_record_is_empty() {
        let text = "Time,Parameter,Value\n00:00,RecordID,1\n00:00,Gender,0\n00:00,Height,-1\n00:00,ICUType,2\n";
        let p = parse_physionet_record(text, "x").unwrap();
        assert_eq!(p.record.num_signals(), 37);
        assert_eq!(p.record.observation_count(), 0);
    }

    #[test]
    fn sentinels_unknowns_and_errors() {
        let text = "Time,Parameter,Value\n00:00,Weight,-1\n00:10,Foo,3\n02:00,Weight,80\n";
        let p = parse_physionet_record(text, "fallback").unwrap();
        assert_eq!(p.record.id, "fallback");
        assert_eq!((p.sentinel_dropped, p.unknown_parameters), (1, 1));
        assert_eq!(p.record.signals[35], vec![Observation::new(2.0, 80.0)]);

        let err = parse_physionet_record("Time,Parameter,Value\n00:00,HR,1\nbad row\n", "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse_physionet_record("Time,Parameter,Value\n0x:00,HR,1\n", "x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_physionet_record("a,b,c\n", "x").is_err());
    }

    #[test]
    fn outcomes_labelling() {
        let text = "RecordID,SAPS-I,SOFA,Length_of_stay,Survival,In-hospital_death\n\
                    132539,6,1,5,-1,0\n132540,16,8,8,5,0\n132541,21,11,19,-1,0\n";
        let o = parse_outcomes(text).unwrap();
        assert_eq!(o.labels["132539"], SURVIVED);
        assert_eq!(o.labels["132540"], DIED);
        assert_eq!((o.survived, o.died), (2, 1));
        let dup = "RecordID,Survival\n1,-1\n1,3\n";
        assert!(matches!(parse_outcomes(dup), Err(Error::Parse { line: 3, .. })));
        assert!(parse_outcomes("RecordID,Other\n1,2\n").is_err());
    }

    #[test]
    fn cohort_validation_warns() {
        assert!(validate_cohort(EXPECTED_RECORDS, EXPECTED_SURVIVORS).is_empty());
        assert_eq!(validate_cohort(3999, 2500).len(), 2);
    }
}
