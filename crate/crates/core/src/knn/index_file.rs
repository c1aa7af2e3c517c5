//! Graph index file (`XLGI`).
//!
//! Stores only the graph; vectors come from the corpus vector file. Layout,
//! little-endian:
//!
//! ```text
//! magic       4 bytes  "XLGI"
//! version     u32      1
//! degree      u32
//! count       u64      number of points
//! build_seed  u64
//! key_digest  u64      FNV-1a over the sorted point keys
//! count x {
//!     len      u32
//!     links    len x u32 point indices, nearest first
//! }
//! ```
//!
//! Point indices refer to the points sorted by key.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::{prepare_points, GraphIndex};
use crate::corpus::EmbeddedPoint;
use crate::error::{Error, Result};
use crate::metrics::euclidean_unchecked;

pub const MAGIC: &[u8; 4] = b"XLGI";
pub const VERSION: u32 = 1;

/// Digest of point identities, used to detect an index paired with the wrong corpus.
pub fn key_digest(points: &[EmbeddedPoint]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in points {
        for b in p.key.encode().bytes().chain([0xff]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

pub fn write(index: &GraphIndex, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(index.degree() as u32).to_le_bytes())?;
    out.write_all(&(index.points().len() as u64).to_le_bytes())?;
    out.write_all(&index.build_seed().to_le_bytes())?;
    out.write_all(&key_digest(index.points()).to_le_bytes())?;
    for links in index.adjacency() {
        out.write_all(&(links.len() as u32).to_le_bytes())?;
        for &j in links {
            out.write_all(&j.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_bytes<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => {
            Error::Format(format!("truncated index file while reading {what}"))
        }
        _ => Error::Io(e),
    })?;
    Ok(b)
}

/// Loads a graph written by [`write`] and binds it to `points`, which must be
/// the same point set the graph was built over.
pub fn read(path: &Path, points: Vec<EmbeddedPoint>) -> Result<GraphIndex> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_bytes::<4>(&mut r, "magic")? != MAGIC {
        return Err(Error::Format("bad magic, expected XLGI".into()));
    }
    let version = u32::from_le_bytes(read_bytes(&mut r, "version")?);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported index version {version}"
        )));
    }
    let degree = u32::from_le_bytes(read_bytes(&mut r, "degree")?) as usize;
    let count = u64::from_le_bytes(read_bytes(&mut r, "count")?) as usize;
    let build_seed = u64::from_le_bytes(read_bytes(&mut r, "build seed")?);
    let digest = u64::from_le_bytes(read_bytes(&mut r, "key digest")?);

    let points = prepare_points(points)?;
    if points.len() != count {
        return Err(Error::Format(format!(
            "index covers {count} points but {} were supplied",
            points.len()
        )));
    }
    if key_digest(&points) != digest {
        return Err(Error::Format(
            "index was built over a different point set".into(),
        ));
    }

    let mut adjacency = Vec::with_capacity(count);
    for i in 0..count {
        let len = u32::from_le_bytes(read_bytes(&mut r, "adjacency length")?) as usize;
        if len > degree {
            return Err(Error::Format(format!(
                "point {i} has {len} links, degree is {degree}"
            )));
        }
        let mut links = Vec::with_capacity(len);
        for _ in 0..len {
            let j = u32::from_le_bytes(read_bytes(&mut r, "adjacency")?);
            if j as usize >= count || j as usize == i {
                return Err(Error::Format(format!("point {i} has invalid link {j}")));
            }
            links.push(j);
        }
        let dists: Vec<f64> = links
            .iter()
            .map(|&j| euclidean_unchecked(&points[i].vector, &points[j as usize].vector))
            .collect();
        if dists.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format(format!(
                "links of point {i} are not sorted by distance"
            )));
        }
        adjacency.push(links);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after adjacency".into()));
    }
    Ok(GraphIndex::assemble(points, adjacency, degree, build_seed))
}
