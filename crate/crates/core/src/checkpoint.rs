//! Binary checkpoints of a [`CounterStore`], so parts of a split can be
//! computed in separate runs and combined later.
//!
//! All integers are little-endian. Layout:
//!
//! ```text
//! magic        8 bytes  "SAWCKPT\0"
//! version      u32      1
//! n            u32
//! bound        u32
//! symmetry     u8       0 or 1
//! strategy     u8       0 none, 1 max-site, 2 subset-size
//! part_total   u32
//! part_count   u32, then part_count x u32 part indices
//! records      u64
//! per record:
//!   key_len    u8, then key_len x u32 site keys (cube encoding at `bound`)
//!   zcount, pcount, evec[0..3]   big integers
//!   orbit_size u8
//! big integer: sign u8 (0 non-negative, 1 negative), len u32, len magnitude bytes
//! ```
//!
//! Records are written in key order, so equal stores give equal files.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, Sign};
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::counters::{CounterStore, SplitSpec, SplitStrategy, SubsetRecord};
use crate::lattice::SiteKey;

pub const MAGIC: &[u8; 8] = b"SAWCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("store counters overflowed; refusing to checkpoint")]
    Overflowed,
}

fn bad(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::Format(msg.into())
}

/// Everything in a checkpoint except the records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub n: usize,
    pub bound: u32,
    pub symmetry: bool,
    pub strategy: SplitStrategy,
    pub part_total: usize,
    pub parts: Vec<usize>,
}

impl Header {
    pub fn of(store: &CounterStore) -> Header {
        Header {
            n: store.n(),
            bound: store.bound(),
            symmetry: store.symmetry(),
            strategy: store.strategy(),
            part_total: store.part_total(),
            parts: store.parts().to_vec(),
        }
    }

    /// Same run, possibly different parts.
    pub fn compatible(&self, o: &Header) -> bool {
        (self.n, self.bound, self.symmetry, self.strategy, self.part_total)
            == (o.n, o.bound, o.symmetry, o.strategy, o.part_total)
    }
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} bound={} symmetry={} split={} parts={:?}/{}",
            self.n, self.bound, self.symmetry, self.strategy, self.parts, self.part_total
        )
    }
}

/// Conventional file name for a store, e.g. `n9-sym-subset-size-p0of3.ckpt`.
pub fn file_name(store: &CounterStore) -> String {
    let parts: Vec<String> = store.parts().iter().map(|p| p.to_string()).collect();
    format!(
        "n{}-{}-{}-p{}of{}.ckpt",
        store.n(),
        if store.symmetry() { "sym" } else { "plain" },
        store.strategy(),
        parts.join("_"),
        store.part_total()
    )
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_big<W: Write>(w: &mut W, v: &BigInt) -> std::io::Result<()> {
    let (sign, mag) = v.to_bytes_le();
    let mag = if sign == Sign::NoSign { Vec::new() } else { mag };
    w.write_all(&[(sign == Sign::Minus) as u8])?;
    put_u32(w, mag.len() as u32)?;
    w.write_all(&mag)
}

pub fn write_to<W: Write>(mut w: W, store: &CounterStore) -> Result<(), CheckpointError> {
    if store.overflowed() {
        return Err(CheckpointError::Overflowed);
    }
    w.write_all(MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u32(&mut w, store.n() as u32)?;
    put_u32(&mut w, store.bound())?;
    w.write_all(&[store.symmetry() as u8, store.strategy().code()])?;
    put_u32(&mut w, store.part_total() as u32)?;
    put_u32(&mut w, store.parts().len() as u32)?;
    for &p in store.parts() {
        put_u32(&mut w, p as u32)?;
    }
    let records = store.sorted_records();
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for (key, r) in records {
        let sites = store.sites(key);
        w.write_all(&[sites.len() as u8])?;
        for s in sites {
            put_u32(&mut w, s.0)?;
        }
        put_big(&mut w, &BigInt::from(r.zcount))?;
        put_big(&mut w, &BigInt::from(r.pcount))?;
        for e in r.evec {
            put_big(&mut w, &BigInt::from(e))?;
        }
        w.write_all(&[r.orbit_size])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `store` to `path` atomically (temporary file, then rename).
pub fn write(path: &Path, store: &CounterStore) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("ckpt.tmp");
    write_to(BufWriter::new(File::create(&tmp)?), store)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Input<R> {
    r: R,
}

impl<R: Read> Input<R> {
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K], CheckpointError> {
        let mut b = [0u8; K];
        self.r.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => bad("truncated file"),
            _ => CheckpointError::Io(e),
        })?;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn big(&mut self) -> Result<BigInt, CheckpointError> {
        let sign = match self.u8()? {
            0 => Sign::Plus,
            1 => Sign::Minus,
            s => return Err(bad(format!("bad sign byte {s}"))),
        };
        let len = self.u32()? as usize;
        if len > 64 {
            return Err(bad(format!("integer of {len} bytes")));
        }
        let mut mag = vec![0u8; len];
        self.r.read_exact(&mut mag).map_err(|_| bad("truncated file"))?;
        Ok(BigInt::from_bytes_le(sign, &mag))
    }
}

pub fn read_from<R: Read>(r: R) -> Result<CounterStore, CheckpointError> {
    let mut inp = Input { r };
    if &inp.bytes::<8>()? != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = inp.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let n = inp.u32()? as usize;
    let bound = inp.u32()?;
    let symmetry = match inp.u8()? {
        0 => false,
        1 => true,
        s => return Err(bad(format!("bad symmetry flag {s}"))),
    };
    let code = inp.u8()?;
    let strategy = SplitStrategy::from_code(code).ok_or_else(|| bad(format!("bad split code {code}")))?;
    let part_total = inp.u32()? as usize;
    let count = inp.u32()? as usize;
    if count == 0 || count > part_total {
        return Err(bad(format!("{count} parts of {part_total}")));
    }
    let parts = (0..count).map(|_| inp.u32().map(|p| p as usize)).collect::<Result<Vec<_>, _>>()?;
    let first = SplitSpec::new(strategy, parts[0], part_total).map_err(|e| bad(e.to_string()))?;
    let mut store = CounterStore::new(n, bound, symmetry, first).map_err(|e| bad(e.to_string()))?;
    for &p in &parts {
        SplitSpec::new(strategy, p, part_total).map_err(|e| bad(e.to_string()))?;
    }
    store.set_parts(parts);

    let records = u64::from_le_bytes(inp.bytes()?);
    let codec = store.codec();
    for i in 0..records {
        let len = inp.u8()? as usize;
        if len == 0 || len > n {
            return Err(bad(format!("record {i}: key length {len}")));
        }
        let sites = (0..len).map(|_| inp.u32().map(SiteKey)).collect::<Result<Vec<_>, _>>()?;
        let key = codec.pack(&sites).ok_or_else(|| bad(format!("record {i}: invalid key {sites:?}")))?;
        let zcount = inp.big()?.to_u64().ok_or_else(|| bad(format!("record {i}: zcount out of range")))?;
        let pcount = inp.big()?.to_u64().ok_or_else(|| bad(format!("record {i}: pcount out of range")))?;
        let mut evec = [0i64; 3];
        for e in &mut evec {
            *e = inp.big()?.to_i64().ok_or_else(|| bad(format!("record {i}: evec out of range")))?;
        }
        let orbit_size = inp.u8()?;
        if orbit_size == 0 || 48 % orbit_size != 0 || (!symmetry && orbit_size != 1) {
            return Err(bad(format!("record {i}: orbit size {orbit_size}")));
        }
        let rec = SubsetRecord { zcount, pcount, evec, orbit_size };
        if store.records_mut().insert(key, rec).is_some() {
            return Err(bad(format!("record {i}: duplicate key")));
        }
    }
    let mut tail = [0u8; 1];
    if inp.r.read(&mut tail)? != 0 {
        return Err(bad("trailing bytes"));
    }
    Ok(store)
}

pub fn read(path: &Path) -> Result<CounterStore, CheckpointError> {
    read_from(BufReader::new(File::open(path)?))
}

/// `*.ckpt` files in `dir`, sorted by name.
pub fn list(dir: &Path) -> Result<Vec<PathBuf>, CheckpointError> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ckpt"))
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doubling::build_part;

    fn bytes(store: &CounterStore) -> Vec<u8> {
        let mut v = Vec::new();
        write_to(&mut v, store).unwrap();
        v
    }

    #[test]
    fn round_trip() {
        for symmetry in [false, true] {
            let split = SplitSpec::new(SplitStrategy::MaxSite, 1, 3).unwrap();
            let s = build_part(4, 4, symmetry, split, 1).unwrap();
            let b = bytes(&s);
            let back = read_from(b.as_slice()).unwrap();
            assert_eq!(Header::of(&back), Header::of(&s));
            assert_eq!(back.sorted_records(), s.sorted_records());
            assert_eq!(bytes(&back), b);
        }
    }

    #[test]
    fn header_layout() {
        let s = build_part(2, 2, true, SplitSpec::NONE, 1).unwrap();
        let b = bytes(&s);
        assert_eq!(&b[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), VERSION);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 2);
        assert_eq!(b[20], 1);
        assert_eq!(b[21], 0);
    }

    #[test]
    fn merged_parts_round_trip() {
        let a = build_part(3, 3, true, SplitSpec::new(SplitStrategy::SubsetSize, 0, 2).unwrap(), 1).unwrap();
        let b = build_part(3, 3, true, SplitSpec::new(SplitStrategy::SubsetSize, 1, 2).unwrap(), 1).unwrap();
        let m = a.merge(b).unwrap();
        let back = read_from(bytes(&m).as_slice()).unwrap();
        assert!(back.is_complete());
        assert_eq!(back.sorted_records(), m.sorted_records());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let s = build_part(3, 3, true, SplitSpec::NONE, 1).unwrap();
        let b = bytes(&s);
        assert!(read_from(&b[..b.len() - 1]).is_err());
        let mut extra = b.clone();
        extra.push(0);
        assert!(read_from(extra.as_slice()).is_err());
        let mut magic = b.clone();
        magic[0] = b'X';
        assert!(read_from(magic.as_slice()).is_err());
        let mut ver = b.clone();
        ver[8] = 9;
        assert!(matches!(read_from(ver.as_slice()), Err(CheckpointError::Version(9))));
    }

    #[test]
    fn file_write_and_list() {
        let dir = tempfile::tempdir().unwrap();
        let s = build_part(3, 3, true, SplitSpec::NONE, 1).unwrap();
        let path = dir.path().join(file_name(&s));
        write(&path, &s).unwrap();
        assert_eq!(list(dir.path()).unwrap(), vec![path.clone()]);
        assert_eq!(read(&path).unwrap().sorted_records(), s.sorted_records());
    }
}
