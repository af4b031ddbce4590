//! Binary dump of a periodic solution.
//!
//! Layout, little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `b"TPNSFELD"` |
//! | 4     | `u32` version |
//! | 8 x 5 | `f64` R, h, body radius, period, lambda |
//! | 8 x 5 | `u64` n (cells per side), n_t, k, face count, fluid-cell count |
//! | 8     | `u64` flags, bit 0 set when pressure samples follow |
//! | ...   | `u`: n_t x faces `f64` |
//! | ...   | `u_t`: n_t x faces `f64` |
//! | ...   | Galerkin coefficients: n_t x k `f64` |
//! | ...   | pressure: n_t x fluid cells `f64`, if flagged |
//! | 4     | `u32` CRC-32 of everything before it |

use crate::bytes::{put_f64s, Reader};
use crate::error::{Error, Result};
use crate::linear::PeriodicField;

const MAGIC: &[u8; 8] = b"TPNSFELD";
const VERSION: u32 = 1;
const MAX_VALUES: u64 = 1 << 28;
const HAS_PRESSURE: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub r: f64,
    pub h: f64,
    pub radius: f64,
    pub period: f64,
    pub lambda: f64,
    pub n: usize,
    pub n_t: usize,
    pub k: usize,
    pub n_faces: usize,
    pub n_fluid: usize,
    pub u: Vec<Vec<f64>>,
    pub u_t: Vec<Vec<f64>>,
    pub coeffs: Vec<Vec<f64>>,
    pub pressure: Option<Vec<Vec<f64>>>,
}

impl FieldDump {
    pub fn from_field(field: &PeriodicField, lambda: f64) -> Self {
        let dom = &field.basis.domain;
        let n_t = field.n_samples();
        FieldDump {
            r: dom.r,
            h: dom.grid.h,
            radius: dom.body.radius,
            period: field.tgrid.period,
            lambda,
            n: dom.grid.n,
            n_t,
            k: field.basis.k(),
            n_faces: dom.grid.n_faces(),
            n_fluid: dom.n_fluid(),
            u: (0..n_t).map(|i| field.u_full(i)).collect(),
            u_t: (0..n_t).map(|i| field.u_t_full(i)).collect(),
            coeffs: field.coeffs.clone(),
            pressure: field.pressure.clone(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let per = self.n_t * (2 * self.n_faces + self.k + if self.pressure.is_some() { self.n_fluid } else { 0 });
        let mut out = Vec::with_capacity(100 + 8 * per);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_f64s(&mut out, &[self.r, self.h, self.radius, self.period, self.lambda]);
        for v in [self.n, self.n_t, self.k, self.n_faces, self.n_fluid] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        let flags = if self.pressure.is_some() { HAS_PRESSURE } else { 0 };
        out.extend_from_slice(&flags.to_le_bytes());
        for block in [&self.u, &self.u_t, &self.coeffs].into_iter().chain(self.pressure.as_ref()) {
            for s in block {
                put_f64s(&mut out, s);
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Decode("field dump truncated".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
            return Err(Error::Decode("field dump checksum mismatch".into()));
        }
        let mut rd = Reader::new(body);
        if rd.take(8)? != MAGIC {
            return Err(Error::Decode("bad field dump magic".into()));
        }
        let version = rd.u32()?;
        if version != VERSION {
            return Err(Error::Decode(format!("unsupported field dump version {version}")));
        }
        let [r, h, radius, period, lambda] = [rd.f64()?, rd.f64()?, rd.f64()?, rd.f64()?, rd.f64()?];
        for (name, v) in [("R", r), ("h", h), ("radius", radius), ("period", period)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Decode(format!("{name} must be positive and finite")));
            }
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Decode("lambda must be finite and non-negative".into()));
        }
        let [n, n_t, k, n_faces, n_fluid] = [rd.u64()?, rd.u64()?, rd.u64()?, rd.u64()?, rd.u64()?];
        let flags = rd.u64()?;
        if flags & !HAS_PRESSURE != 0 {
            return Err(Error::Decode(format!("unknown flags {flags:#x}")));
        }
        if n == 0 || n > 1 << 9 {
            return Err(Error::Decode(format!("implausible grid size {n}")));
        }
        let overflow = || Error::Decode("size overflow".into());
        let p = if flags & HAS_PRESSURE != 0 { n_fluid } else { 0 };
        let per = n_faces
            .checked_mul(2)
            .and_then(|v| v.checked_add(k))
            .and_then(|v| v.checked_add(p))
            .ok_or_else(overflow)?;
        let total = n_t.checked_mul(per).filter(|&t| t <= MAX_VALUES).ok_or_else(|| Error::Decode("field dump too large".into()))?;
        if total * 8 != rd.remaining() as u64 {
            return Err(Error::Decode(format!("expected {} payload bytes, found {}", total * 8, rd.remaining())));
        }
        let (n_t, k, n_faces, n_fluid) = (n_t as usize, k as usize, n_faces as usize, n_fluid as usize);
        let mut block = |len: usize| (0..n_t).map(|_| rd.f64_vec(len)).collect::<Result<Vec<_>>>();
        let u = block(n_faces)?;
        let u_t = block(n_faces)?;
        let coeffs = block(k)?;
        let pressure = if flags & HAS_PRESSURE != 0 { Some(block(n_fluid)?) } else { None };
        rd.finish()?;
        Ok(FieldDump { r, h, radius, period, lambda, n: n as usize, n_t, k, n_faces, n_fluid, u, u_t, coeffs, pressure })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(pressure: bool) -> FieldDump {
        let (n_t, nf, k, nc) = (3, 5, 2, 4);
        let v = |len: usize, s: f64| (0..n_t).map(|i| (0..len).map(|j| s * (i * len + j) as f64).collect()).collect();
        FieldDump {
            r: 4.0,
            h: 0.5,
            radius: 1.0,
            period: 2.0,
            lambda: 0.5,
            n: 16,
            n_t,
            k,
            n_faces: nf,
            n_fluid: nc,
            u: v(nf, 1.0),
            u_t: v(nf, -0.5),
            coeffs: v(k, 0.25),
            pressure: pressure.then(|| v(nc, 2.0)),
        }
    }

    #[test]
    fn round_trips() {
        for p in [false, true] {
            let d = sample(p);
            let bytes = d.encode();
            assert_eq!(FieldDump::decode(&bytes).unwrap(), d);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample(true).encode();
        let mut bad = bytes.clone();
        bad[60] ^= 1;
        assert!(matches!(FieldDump::decode(&bad), Err(Error::Decode(_))));
        assert!(FieldDump::decode(&bytes[..bytes.len() - 9]).is_err());
        assert!(FieldDump::decode(&[]).is_err());
    }

    proptest! {
        #[test]
        fn decode_never_panics(data in prop::collection::vec(any::<u8>(), 0..256)) {
            let _ = FieldDump::decode(&data);
        }

        #[test]
        fn header_with_valid_crc_but_wrong_sizes_is_rejected(extra in 1usize..16) {
            let mut bytes = sample(false).encode();
            bytes.truncate(bytes.len() - 4);
            bytes.extend(std::iter::repeat_n(0u8, extra));
            let crc = crc32fast::hash(&bytes);
            bytes.extend_from_slice(&crc.to_le_bytes());
            prop_assert!(FieldDump::decode(&bytes).is_err());
        }
    }
}
