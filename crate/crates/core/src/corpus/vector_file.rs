//! Binary vector file (`XLDV`).
//!
//! Little-endian layout:
//!
//! ```text
//! magic    4 bytes  "XLDV"
//! version  u32      1
//! dim      u32
//! count    u64
//! count x {
//!     key_len  u16
//!     key      key_len bytes, UTF-8 "id\0coordinate_type"
//!     values   dim x f32 (IEEE-754)
//! }
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::PointKey;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"XLDV";
pub const VERSION: u32 = 1;

/// Decoded contents of a vector file, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub dim: usize,
    pub entries: Vec<(PointKey, Vec<f32>)>,
}

/// Writes `entries` with dimension `dim`. Every entry is validated before the
/// file is created, so a refused write leaves nothing on disk.
pub fn write<'a, I>(path: &Path, dim: usize, entries: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a PointKey, &'a [f32])>,
{
    let entries: Vec<_> = entries.into_iter().collect();
    let dim32 = u32::try_from(dim)
        .map_err(|_| Error::InvalidParameter(format!("dimension {dim} does not fit in u32")))?;
    let mut encoded_keys = Vec::with_capacity(entries.len());
    for (key, values) in &entries {
        if values.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: values.len(),
            });
        }
        let encoded = key.encode();
        if encoded.len() > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "key {key} is longer than {} bytes",
                u16::MAX
            )));
        }
        encoded_keys.push(encoded);
    }

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&dim32.to_le_bytes())?;
    out.write_all(&(entries.len() as u64).to_le_bytes())?;
    for ((_, values), key) in entries.iter().zip(&encoded_keys) {
        out.write_all(&(key.len() as u16).to_le_bytes())?;
        out.write_all(key.as_bytes())?;
        for v in values.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => {
            Error::Format(format!("truncated vector file while reading {what}"))
        }
        _ => Error::Io(e),
    })
}

fn read_u16(r: &mut impl Read, what: &str) -> Result<u16> {
    let mut b = [0u8; 2];
    read_exact_or_truncated(r, &mut b, what)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read(path: &Path) -> Result<VectorFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected XLDV")));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported vector file version {version}"
        )));
    }
    let dim = read_u32(&mut r, "dimension")? as usize;
    let count = read_u64(&mut r, "count")?;

    let mut entries = Vec::with_capacity(count.min(1 << 20) as usize);
    let mut raw = vec![0u8; dim * 4];
    for i in 0..count {
        let key_len = read_u16(&mut r, "key length")? as usize;
        let mut key_bytes = vec![0u8; key_len];
        read_exact_or_truncated(&mut r, &mut key_bytes, "key")?;
        let key_str = String::from_utf8(key_bytes)
            .map_err(|_| Error::Format(format!("entry {i}: key is not UTF-8")))?;
        let key = PointKey::decode(&key_str)?;
        read_exact_or_truncated(&mut r, &mut raw, "vector components")?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        entries.push((key, values));
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after last vector".into()));
    }
    Ok(VectorFile { dim, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CoordinateType;

    #[test]
    fn header_layout_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.xldv");
        let key = PointKey::new("A", CoordinateType::NativeJa);
        write(&path, 2, [(&key, &[1.0f32, -2.5][..])]).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let mut expected = Vec::new();
        expected.extend_from_slice(b"XLDV");
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&10u16.to_le_bytes());
        expected.extend_from_slice(b"A\0NativeJa");
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.5f32).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn empty_file_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.xldv");
        write(&path, 384, std::iter::empty()).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 20);
        let vf = read(&path).unwrap();
        assert_eq!(vf.dim, 384);
        assert!(vf.entries.is_empty());
    }

    #[test]
    fn mixed_dimensions_refused_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.xldv");
        let a = PointKey::new("A", CoordinateType::NativeJa);
        let b = PointKey::new("B", CoordinateType::NativeJa);
        let err = write(&path, 3, [(&a, &[0.0f32; 3][..]), (&b, &[0.0f32; 2][..])]).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 3,
                found: 2
            }
        ));
        assert!(!path.exists());
    }

    #[test]
    fn truncation_and_garbage_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.xldv");
        let key = PointKey::new("A", CoordinateType::NativeJa);
        write(&path, 4, [(&key, &[1.0f32; 4][..])]).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read(&path), Err(Error::Format(_))));

        let mut extra = bytes.clone();
        extra.push(0);
        std::fs::write(&path, &extra).unwrap();
        assert!(matches!(read(&path), Err(Error::Format(_))));

        let mut bad = bytes;
        bad[0] = b'Y';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read(&path), Err(Error::Format(_))));
    }
}
