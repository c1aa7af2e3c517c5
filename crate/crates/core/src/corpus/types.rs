use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::EMBEDDING_DIM;

/// Funding agency of a project. Agencies outside the four named ones are
/// carried verbatim under [`Agency::Other`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agency {
    Kakenhi,
    Nih,
    Nsf,
    Ukri,
    Other(String),
}

impl Agency {
    pub fn as_str(&self) -> &str {
        match self {
            Agency::Kakenhi => "KAKENHI",
            Agency::Nih => "NIH",
            Agency::Nsf => "NSF",
            Agency::Ukri => "UKRI",
            Agency::Other(name) => name,
        }
    }
}

impl fmt::Display for Agency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Agency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidParameter("empty agency".into()));
        }
        Ok(match s.to_ascii_uppercase().as_str() {
            "KAKENHI" => Agency::Kakenhi,
            "NIH" => Agency::Nih,
            "NSF" => Agency::Nsf,
            "UKRI" => Agency::Ukri,
            _ => Agency::Other(s.to_string()),
        })
    }
}

impl Serialize for Agency {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Agency {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which linguistic representation of a project a vector encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CoordinateType {
    /// Original Japanese text.
    NativeJa,
    /// Machine-translated English.
    MtEn,
    /// English written by the project's authors.
    AuthorEn,
    /// English from a natively English-language agency.
    NativeEn,
}

impl CoordinateType {
    pub const ALL: [CoordinateType; 4] = [
        CoordinateType::NativeJa,
        CoordinateType::MtEn,
        CoordinateType::AuthorEn,
        CoordinateType::NativeEn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CoordinateType::NativeJa => "NativeJa",
            CoordinateType::MtEn => "MtEn",
            CoordinateType::AuthorEn => "AuthorEn",
            CoordinateType::NativeEn => "NativeEn",
        }
    }

    /// Human-readable name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            CoordinateType::NativeJa => "Native Japanese",
            CoordinateType::MtEn => "MT English",
            CoordinateType::AuthorEn => "Author-written English",
            CoordinateType::NativeEn => "Native English",
        }
    }

    /// Whether a record of `agency` may carry this coordinate type.
    pub fn allowed_for(self, agency: &Agency) -> bool {
        match self {
            CoordinateType::NativeEn => *agency != Agency::Kakenhi,
            _ => *agency == Agency::Kakenhi,
        }
    }
}

impl fmt::Display for CoordinateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoordinateType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let folded: String = s
            .trim()
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        match folded.as_str() {
            "nativeja" => Ok(CoordinateType::NativeJa),
            "mten" => Ok(CoordinateType::MtEn),
            "authoren" => Ok(CoordinateType::AuthorEn),
            "nativeen" => Ok(CoordinateType::NativeEn),
            _ => Err(Error::InvalidParameter(format!(
                "unknown coordinate type {s:?}"
            ))),
        }
    }
}

impl Serialize for CoordinateType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CoordinateType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Identity of one representation: project id plus coordinate type.
///
/// Ordered by id first, so sorting keys groups the representations of a project.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointKey {
    pub id: String,
    pub coordinate_type: CoordinateType,
}

impl PointKey {
    pub fn new(id: impl Into<String>, coordinate_type: CoordinateType) -> Self {
        Self {
            id: id.into(),
            coordinate_type,
        }
    }

    /// Key as written in vector files: `id`, a NUL byte, then the coordinate type.
    pub fn encode(&self) -> String {
        format!("{}\0{}", self.id, self.coordinate_type)
    }

    pub fn decode(s: &str) -> Result<Self> {
        let (id, ct) = s
            .split_once('\0')
            .ok_or_else(|| Error::Format(format!("vector key {s:?} lacks a NUL separator")))?;
        let coordinate_type = ct
            .parse()
            .map_err(|_| Error::Format(format!("vector key has unknown coordinate type {ct:?}")))?;
        Ok(Self::new(id, coordinate_type))
    }
}

impl fmt::Display for PointKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.id, self.coordinate_type)
    }
}

/// One funded project's text in one coordinate type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub agency: Agency,
    pub coordinate_type: CoordinateType,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiscal_year: Option<i32>,
}

impl ProjectRecord {
    pub fn key(&self) -> PointKey {
        PointKey::new(self.id.clone(), self.coordinate_type)
    }

    /// Both title and abstract are present.
    pub fn is_complete(&self) -> bool {
        !self.title.trim().is_empty() && !self.abstract_text.trim().is_empty()
    }
}

/// A unit-norm embedding with the identity needed for filtered retrieval.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPoint {
    pub key: PointKey,
    pub agency: Agency,
    pub vector: Vec<f32>,
}

impl EmbeddedPoint {
    /// Normalizes `vector` and binds it to `key`.
    pub fn new(key: PointKey, agency: Agency, vector: &[f32]) -> Result<Self> {
        if vector.len() != EMBEDDING_DIM {
            return Err(Error::Dimension {
                expected: EMBEDDING_DIM,
                found: vector.len(),
            });
        }
        Ok(Self {
            key,
            agency,
            vector: crate::metrics::normalize(vector)?,
        })
    }
}
