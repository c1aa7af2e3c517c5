//! Project records, their embedding vectors, and the files that carry them.

mod types;
pub mod vector_file;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer};

pub use types::{Agency, CoordinateType, EmbeddedPoint, PointKey, ProjectRecord};

use crate::error::{Error, Result};
use crate::EMBEDDING_DIM;

/// Records and vectors keyed by `(id, coordinate_type)`.
///
/// Every vector has a matching record. Iteration is in key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    records: BTreeMap<PointKey, ProjectRecord>,
    vectors: BTreeMap<PointKey, Vec<f32>>,
}

/// Per-agency record and project tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct AgencyCount {
    pub records: usize,
    pub projects: usize,
}

fn nullable_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    Ok(Option::<String>::deserialize(d)?.unwrap_or_default())
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    agency: Agency,
    coordinate_type: CoordinateType,
    #[serde(deserialize_with = "nullable_string")]
    title: String,
    #[serde(rename = "abstract", deserialize_with = "nullable_string")]
    abstract_text: String,
    #[serde(default)]
    fiscal_year: Option<i32>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads one JSON record object per line. Blank lines are skipped.
    pub fn load_records(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut corpus = Corpus::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message,
            };
            let raw: RawRecord =
                serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            if raw.id.is_empty() {
                return Err(parse_err("empty id".into()));
            }
            if !raw.coordinate_type.allowed_for(&raw.agency) {
                return Err(parse_err(format!(
                    "coordinate type {} is not valid for agency {}",
                    raw.coordinate_type, raw.agency
                )));
            }
            corpus.insert_record(ProjectRecord {
                id: raw.id,
                agency: raw.agency,
                coordinate_type: raw.coordinate_type,
                title: raw.title,
                abstract_text: raw.abstract_text,
                fiscal_year: raw.fiscal_year,
            })?;
        }
        Ok(corpus)
    }

    /// Writes the records back out in the line-delimited format, in key order.
    pub fn write_records(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for record in self.records.values() {
            serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Attaches every vector in an `XLDV` file.
    pub fn load_vectors(mut self, path: &Path) -> Result<Self> {
        let file = vector_file::read(path)?;
        if file.dim != EMBEDDING_DIM {
            return Err(Error::Dimension {
                expected: EMBEDDING_DIM,
                found: file.dim,
            });
        }
        let mut seen = BTreeSet::new();
        for (key, values) in file.entries {
            if !seen.insert(key.clone()) {
                return Err(Error::Format(format!("vector {key} appears twice")));
            }
            self.attach_vector(key, values)?;
        }
        Ok(self)
    }

    /// Writes all vectors in key order.
    pub fn write_vectors(&self, path: &Path) -> Result<()> {
        vector_file::write(
            path,
            EMBEDDING_DIM,
            self.vectors.iter().map(|(k, v)| (k, v.as_slice())),
        )
    }

    pub fn insert_record(&mut self, record: ProjectRecord) -> Result<()> {
        let key = record.key();
        if self.records.contains_key(&key) {
            return Err(Error::DuplicateKey(key));
        }
        self.records.insert(key, record);
        Ok(())
    }

    /// Binds a raw (not yet normalized) vector to an existing record.
    pub fn attach_vector(&mut self, key: PointKey, values: Vec<f32>) -> Result<()> {
        if values.len() != EMBEDDING_DIM {
            return Err(Error::Dimension {
                expected: EMBEDDING_DIM,
                found: values.len(),
            });
        }
        if !self.records.contains_key(&key) {
            return Err(Error::OrphanVector(key));
        }
        self.vectors.insert(key, values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn vector_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn records(&self) -> impl Iterator<Item = &ProjectRecord> {
        self.records.values()
    }

    pub fn record(&self, key: &PointKey) -> Option<&ProjectRecord> {
        self.records.get(key)
    }

    /// Raw stored vector.
    pub fn vector(&self, key: &PointKey) -> Option<&[f32]> {
        self.vectors.get(key).map(Vec::as_slice)
    }

    pub fn vectors(&self) -> impl Iterator<Item = (&PointKey, &[f32])> {
        self.vectors.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// The stored vector for `key`, normalized to unit length.
    pub fn embedded_point(&self, key: &PointKey) -> Result<EmbeddedPoint> {
        let values = self
            .vectors
            .get(key)
            .ok_or_else(|| Error::MissingRepresentation(key.clone()))?;
        let agency = self.records[key].agency.clone();
        EmbeddedPoint::new(key.clone(), agency, values)
    }

    /// Unit-normalized points for every vector whose key and agency pass `keep`.
    pub fn embedded_points<F>(&self, keep: F) -> Result<Vec<EmbeddedPoint>>
    where
        F: Fn(&PointKey, &Agency) -> bool,
    {
        self.vectors
            .iter()
            .filter(|(key, _)| keep(key, &self.records[*key].agency))
            .map(|(key, values)| {
                EmbeddedPoint::new(key.clone(), self.records[key].agency.clone(), values)
            })
            .collect()
    }

    /// Native-English points belonging to the agencies in `pool`.
    pub fn pool_points(&self, pool: &BTreeSet<Agency>) -> Result<Vec<EmbeddedPoint>> {
        self.embedded_points(|key, agency| {
            key.coordinate_type == CoordinateType::NativeEn && pool.contains(agency)
        })
    }

    /// Records and distinct projects per agency.
    pub fn agency_counts(&self) -> BTreeMap<Agency, AgencyCount> {
        let mut counts: BTreeMap<Agency, AgencyCount> = BTreeMap::new();
        let mut projects: BTreeSet<(&Agency, &str)> = BTreeSet::new();
        for record in self.records.values() {
            let entry = counts.entry(record.agency.clone()).or_default();
            entry.records += 1;
            if projects.insert((&record.agency, &record.id)) {
                entry.projects += 1;
            }
        }
        counts
    }

    /// Splits the corpus into one sub-corpus per agency.
    pub fn partition_by_agency(&self) -> BTreeMap<Agency, Corpus> {
        let mut parts: BTreeMap<Agency, Corpus> = BTreeMap::new();
        for (key, record) in &self.records {
            let part = parts.entry(record.agency.clone()).or_default();
            part.records.insert(key.clone(), record.clone());
            if let Some(v) = self.vectors.get(key) {
                part.vectors.insert(key.clone(), v.clone());
            }
        }
        parts
    }

    /// Ids having complete records and vectors for both coordinate types,
    /// ascending. Missing or incomplete sides drop the id (pairwise deletion).
    pub fn filter_complete_pairs(
        &self,
        left: CoordinateType,
        right: CoordinateType,
    ) -> Result<Vec<String>> {
        if left == right {
            return Err(Error::InvalidParameter(format!(
                "pair sides must differ, got {left} twice"
            )));
        }
        let usable = |key: &PointKey| {
            self.records
                .get(key)
                .is_some_and(ProjectRecord::is_complete)
                && self.vectors.contains_key(key)
        };
        // BTreeMap order is by id, so the output is already sorted.
        let ids = self
            .records
            .keys()
            .filter(|k| k.coordinate_type == left)
            .filter(|k| usable(k) && usable(&PointKey::new(k.id.clone(), right)))
            .map(|k| k.id.clone())
            .collect();
        Ok(ids)
    }
}
