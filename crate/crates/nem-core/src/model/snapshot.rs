//! Binary map snapshots: a header only, since couplings are a pure function
//! of the seed.
//!
//! Layout (little endian): magic `NEMMAP\0\0`, `u32` version, `u64` n,
//! `u64` d, `u32` coefficient count, coefficients as `f64`, `u64` seed.

use std::io::{Read, Write};

use super::{GaussianMap, MapOptions, MixtureXi, ModelError};

pub const MAGIC: &[u8; 8] = b"NEMMAP\0\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct MapHeader {
    pub n: usize,
    pub d: usize,
    pub xi: MixtureXi,
    pub seed: u64,
}

impl MapHeader {
    pub fn of(map: &GaussianMap) -> Self {
        Self { n: map.n(), d: map.d(), xi: map.xi().clone(), seed: map.seed() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + 8 * self.xi.coeffs().len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        out.extend_from_slice(&(self.xi.coeffs().len() as u32).to_le_bytes());
        for c in self.xi.coeffs() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, ModelError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf).map_err(|e| ModelError::Snapshot(e.to_string()))?;
        Self::from_bytes(&buf)
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, ModelError> {
        let err = |m: &str| ModelError::Snapshot(m.to_string());
        let mut pos = 0usize;
        let mut take = |len: usize| -> Result<&[u8], ModelError> {
            let s = b.get(pos..pos + len).ok_or_else(|| err("truncated header"))?;
            pos += len;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(err("bad magic"));
        }
        let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(ModelError::Snapshot(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let d = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let k = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut coeffs = Vec::with_capacity(k);
        for _ in 0..k {
            coeffs.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let seed = u64::from_le_bytes(take(8)?.try_into().unwrap());
        if pos != b.len() {
            return Err(err("trailing bytes after header"));
        }
        Ok(Self { n, d, xi: MixtureXi::new(coeffs)?, seed })
    }

    /// Regenerate the map described by this header.
    pub fn sample(&self, opts: MapOptions) -> Result<GaussianMap, ModelError> {
        GaussianMap::sample_with(&self.xi, self.n, self.d, self.seed, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip_regenerates_map() {
        let xi = MixtureXi::parse("1,0.5,0,1").unwrap();
        let map = GaussianMap::sample(&xi, 4, 6, 99).unwrap();
        let bytes = MapHeader::of(&map).to_bytes();
        let h = MapHeader::from_bytes(&bytes).unwrap();
        assert_eq!(h, MapHeader::of(&map));
        let again = h.sample(MapOptions::default()).unwrap();
        let x = vec![0.2; 6];
        assert_eq!(map.eval(&x).unwrap(), again.eval(&x).unwrap());
    }

    #[test]
    fn corrupt_headers_are_rejected() {
        let xi = MixtureXi::parse("1,1").unwrap();
        let mut bytes = MapHeader { n: 2, d: 3, xi, seed: 1 }.to_bytes();
        assert!(MapHeader::from_bytes(&bytes[..10]).is_err());
        bytes[0] = b'X';
        assert!(MapHeader::from_bytes(&bytes).is_err());
    }
}
