//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes   "PPOMBCK1"
//! count      u32       number of arrays
//! repeated `count` times:
//!   name_len u32
//!   name     name_len bytes of UTF-8
//!   len      u64       number of values
//!   values   len × f64 (IEEE-754 binary64, little-endian)
//! ```
//!
//! `f32` parameters widen to `f64` losslessly, so round trips are bit-exact
//! for both scalar types.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"PPOMBCK1";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    arrays: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<S: Scalar>(&mut self, name: impl Into<String>, values: &[S]) {
        let name = name.into();
        let values = values.iter().map(|v| v.f64()).collect();
        match self.arrays.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = values,
            None => self.arrays.push((name, values)),
        }
    }

    pub fn get<S: Scalar>(&self, name: &str) -> Result<Vec<S>> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.iter().map(|&x| S::of(x)).collect())
            .ok_or_else(|| Error::Checkpoint(format!("missing array {name:?}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.arrays.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        let count = u32::try_from(self.arrays.len())
            .map_err(|_| Error::Checkpoint("too many arrays".into()))?;
        out.write_all(&count.to_le_bytes())?;
        for (name, values) in &self.arrays {
            let name_len = u32::try_from(name.len())
                .map_err(|_| Error::Checkpoint("array name too long".into()))?;
            out.write_all(&name_len.to_le_bytes())?;
            out.write_all(name.as_bytes())?;
            out.write_all(&(values.len() as u64).to_le_bytes())?;
            for v in values {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let count = read_u32(&mut input)?;
        let mut arrays = Vec::new();
        for _ in 0..count {
            let name_len = read_u32(&mut input)? as usize;
            let mut name = vec![0u8; name_len];
            input.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Checkpoint("array name is not UTF-8".into()))?;
            let len = read_u64(&mut input)?;
            let mut values = Vec::new();
            for _ in 0..len {
                let mut b = [0u8; 8];
                input.read_exact(&mut b)?;
                values.push(f64::from_le_bytes(b));
            }
            arrays.push((name, values));
        }
        Ok(Self { arrays })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_bytes() {
        let mut ck = Checkpoint::new();
        ck.insert("w", &[1.0f64]);
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &1u32.to_le_bytes());
        assert_eq!(buf[16], b'w');
        assert_eq!(&buf[17..25], &1u64.to_le_bytes());
        assert_eq!(&buf[25..33], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 33);
    }

    #[test]
    fn truncated_input_fails() {
        let mut ck = Checkpoint::new();
        ck.insert("a", &[1.0f64, 2.0]);
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        assert!(Checkpoint::read_from(&buf[..buf.len() - 1]).is_err());
        assert!(Checkpoint::read_from(&b"NOTMAGIC"[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            a in prop::collection::vec(any::<f64>(), 0..50),
            b in prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 0..50),
        ) {
            let mut ck = Checkpoint::new();
            ck.insert("policy/mean", &a);
            ck.insert("log_std", &b);
            let mut buf = Vec::new();
            ck.write_to(&mut buf).unwrap();
            let back = Checkpoint::read_from(buf.as_slice()).unwrap();
            let a2: Vec<f64> = back.get("policy/mean").unwrap();
            let b2: Vec<f32> = back.get("log_std").unwrap();
            prop_assert_eq!(
                a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                a2.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
            prop_assert_eq!(
                b.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                b2.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
