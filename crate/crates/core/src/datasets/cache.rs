//! On-disk cache of prepared feature tensors.
//!
//! A cache is a directory holding `manifest.toml` (grid, signal names,
//! normalization, split and cohort summary) and `features.bin`:
//!
//! ```text
//! magic "MFITFEAT" | version u32 | record count u32
//! per record: id (u32 len + utf8) | label u32 | fast block | slow block
//! block: steps u32 | signals u32 | step f64
//!        | value, mask, delta, last (steps*signals f64 each) | mean (signals f64)
//! sha256 of all preceding bytes (32 bytes)
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{
    DatasetSplit, FitFeatures, GridConfig, GriddedRecord, NormalizationStats, PreparedDataset,
    PreparedRecord,
};

pub const CACHE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const FEATURES_FILE: &str = "features.bin";
const MAGIC: &[u8; 8] = b"MFITFEAT";

/// Summary of the cohort a cache was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    /// Fraction of unobserved fast-grid cells per signal.
    pub missing_rates: Vec<f64>,
}

impl CohortManifest {
    pub fn from_dataset(ds: &PreparedDataset) -> Self {
        let m = ds.num_signals();
        let mut missing = vec![0usize; m];
        let mut cells = 0usize;
        for r in &ds.records {
            let g = &r.fast.grid;
            cells += g.steps;
            for (s, miss) in missing.iter_mut().enumerate() {
                *miss += g.steps - g.observed_count(s);
            }
        }
        CohortManifest {
            ids: ds.records.iter().map(|r| r.id.clone()).collect(),
            labels: ds.records.iter().map(|r| r.label).collect(),
            missing_rates: missing
                .iter()
                .map(|&n| if cells == 0 { 0.0 } else { n as f64 / cells as f64 })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheManifest {
    pub version: u32,
    pub classes: usize,
    pub record_count: usize,
    pub dropped_observations: usize,
    pub checksum: String,
    pub signal_names: Vec<String>,
    pub grid: GridConfig,
    pub stats: NormalizationStats,
    pub split: DatasetSplit,
    pub cohort: CohortManifest,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Contract(format!("{v} does not fit the cache format")))?;
        self.0.extend_from_slice(&v.to_le_bytes());
        Ok(())
    }

    fn f64s(&mut self, xs: impl IntoIterator<Item = f64>) {
        for x in xs {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }

    fn block(&mut self, f: &FitFeatures) -> Result<()> {
        self.u32(f.grid.steps)?;
        self.u32(f.grid.signals)?;
        self.f64s([f.grid.step]);
        self.f64s(f.grid.values.iter().copied());
        self.f64s(f.grid.mask.iter().map(|&m| if m { 1.0 } else { 0.0 }));
        self.f64s(f.delta.iter().copied());
        self.f64s(f.last.iter().copied());
        self.f64s(f.mean.iter().copied());
        Ok(())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Corruption(format!("features file truncated at byte {}", self.pos))),
        }
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Corruption("block size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn block(&mut self) -> Result<FitFeatures> {
        let steps = self.u32()?;
        let signals = self.u32()?;
        let step = self.f64s(1)?[0];
        let n = steps
            .checked_mul(signals)
            .ok_or_else(|| Error::Corruption("block size overflow".into()))?;
        let values = self.f64s(n)?;
        let mask = self
            .f64s(n)?
            .into_iter()
            .map(|m| match m {
                0.0 => Ok(false),
                1.0 => Ok(true),
                other => Err(Error::Corruption(format!("mask entry {other} is neither 0 nor 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let delta = self.f64s(n)?;
        let last = self.f64s(n)?;
        let mean = self.f64s(signals)?;
        Ok(FitFeatures {
            grid: GriddedRecord { step, steps, signals, values, mask },
            delta,
            last,
            mean,
        })
    }
}

fn encode(records: &[PreparedRecord]) -> Result<Vec<u8>> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    w.u32(records.len())?;
    for r in records {
        w.u32(r.id.len())?;
        w.0.extend_from_slice(r.id.as_bytes());
        w.u32(r.label)?;
        w.block(&r.fast)?;
        w.block(&r.slow)?;
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    Ok(w.0)
}

fn decode(bytes: &[u8], expected_checksum: &str) -> Result<Vec<PreparedRecord>> {
    if bytes.len() < MAGIC.len() + 8 + 32 {
        return Err(Error::Corruption("features file is too short".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != trailer {
        return Err(Error::Corruption("features checksum mismatch".into()));
    }
    if hex::encode(trailer) != expected_checksum {
        return Err(Error::Corruption("features file does not match the manifest checksum".into()));
    }
    let mut r = Reader { buf: body, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Corruption("bad magic in features file".into()));
    }
    let version = r.u32()? as u32;
    if version != CACHE_VERSION {
        return Err(Error::Version { found: version, expected: CACHE_VERSION });
    }
    let count = r.u32()?;
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len = r.u32()?;
        let id = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Corruption("record id is not utf-8".into()))?
            .to_string();
        let label = r.u32()?;
        let fast = r.block()?;
        let slow = r.block()?;
        records.push(PreparedRecord { id, label, fast, slow });
    }
    if r.pos != body.len() {
        return Err(Error::Corruption(format!("{} trailing bytes in features file", body.len() - r.pos)));
    }
    Ok(records)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes `ds` to the directory `dir`, creating it if needed. The features
/// file is renamed into place before the manifest, so a crash never leaves
/// a manifest pointing at a partial features file.
pub fn write_cache(dir: &Path, ds: &PreparedDataset) -> Result<CacheManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bytes = encode(&ds.records)?;
    let manifest = CacheManifest {
        version: CACHE_VERSION,
        classes: ds.classes,
        record_count: ds.records.len(),
        dropped_observations: ds.dropped_observations,
        checksum: hex::encode(&bytes[bytes.len() - 32..]),
        signal_names: ds.signal_names.clone(),
        grid: ds.grid.clone(),
        stats: ds.stats.clone(),
        split: ds.split.clone(),
        cohort: CohortManifest::from_dataset(ds),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Contract(format!("manifest serialization: {e}")))?;
    write_atomic(&dir.join(FEATURES_FILE), &bytes)?;
    write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<CacheManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    #[derive(Deserialize)]
    struct VersionOnly {
        version: u32,
    }
    let probe: VersionOnly = toml::from_str(&text)
        .map_err(|e| Error::Corruption(format!("{}: {e}", path.display())))?;
    if probe.version != CACHE_VERSION {
        return Err(Error::Version { found: probe.version, expected: CACHE_VERSION });
    }
    toml::from_str(&text).map_err(|e| Error::Corruption(format!("{}: {e}", path.display())))
}

pub fn read_cache(dir: &Path) -> Result<PreparedDataset> {
    let manifest = read_manifest(dir)?;
    let path = dir.join(FEATURES_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let records = decode(&bytes, &manifest.checksum)?;
    if records.len() != manifest.record_count {
        return Err(Error::Corruption(format!(
            "manifest lists {} records, features file holds {}",
            manifest.record_count,
            records.len()
        )));
    }
    let m = manifest.signal_names.len();
    if let Some(r) = records.iter().find(|r| r.fast.signals() != m || r.slow.signals() != m) {
        return Err(Error::Corruption(format!("record {} has the wrong signal count", r.id)));
    }
    Ok(PreparedDataset {
        signal_names: manifest.signal_names,
        classes: manifest.classes,
        grid: manifest.grid,
        stats: manifest.stats,
        split: manifest.split,
        records,
        dropped_observations: manifest.dropped_observations,
    })
}
