//! ANIF binary field files.
//!
//! Layout, all integers little-endian: magic `ANIF`, `u32` version, `u32` n,
//! `u32` byte length of a UTF-8 JSON [`FieldSpec`], the JSON itself, then
//! `n^2` `f64` values in row-major order.

use std::io::{Read, Write};

use crate::anisotropy::{FieldSpec, SampledField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ANIF";
pub const VERSION: u32 = 1;

pub fn write_anif(w: &mut impl Write, field: &SampledField) -> Result<()> {
    let json = serde_json::to_vec(&field.spec)?;
    let n = u32::try_from(field.n).map_err(|_| Error::Domain("grid too large for ANIF".into()))?;
    let mut buf = Vec::with_capacity(16 + json.len() + field.values.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_anif(r: &mut impl Read) -> Result<SampledField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("missing magic".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(r)? as usize;
    let len = read_u32(r)? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|e| Error::Format(format!("truncated spec: {e}")))?;
    let spec: FieldSpec = serde_json::from_slice(&json)?;
    if spec.grid_n != n {
        return Err(Error::Format(format!(
            "header n = {n} but spec grid_n = {}",
            spec.grid_n
        )));
    }
    let mut raw = vec![0u8; n * n * 8];
    r.read_exact(&mut raw)
        .map_err(|e| Error::Format(format!("truncated values: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after values".into()));
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SampledField::new(n, values, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> SampledField {
        let spec = FieldSpec::new(0.6, 0.4, 64, 7).unwrap();
        SampledField::from_fn(64, spec, |x, y| x * 3.0 - y).unwrap()
    }

    #[test]
    fn round_trip() {
        let f = field();
        let mut buf = Vec::new();
        write_anif(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], b"ANIF");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 64);
        let back = read_anif(&mut buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn corrupt_inputs() {
        let mut buf = Vec::new();
        write_anif(&mut buf, &field()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_anif(&mut bad.as_slice()), Err(Error::Format(_))));
        let short = &buf[..buf.len() - 3];
        assert!(matches!(read_anif(&mut &short[..]), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(read_anif(&mut long.as_slice()).is_err());
    }
}
