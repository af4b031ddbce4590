//! Binary persistence of a Stokes basis.
//!
//! Layout (little-endian): `b"TPNSBASE"`, `u32` version, `f64` R, `f64` h,
//! `u64` n, `f64` body radius, `u64` k, `u64` active-face count, `k`
//! eigenvalues, `k` residuals, `k` field vectors, then a `u32` CRC-32 of all
//! preceding bytes.

use super::eigen::StokesBasis;
use crate::bytes::{put_f64s, Reader};
use crate::error::{Error, Result};
use crate::geometry::{BodySpec, TruncatedDomain};
use crate::mac::Grid;
use std::sync::Arc;

const MAGIC: &[u8; 8] = b"TPNSBASE";
const VERSION: u32 = 1;
const MAX_VALUES: u64 = 1 << 28;

#[derive(Clone, Debug, PartialEq)]
pub struct BasisFile {
    pub r: f64,
    pub h: f64,
    pub n: usize,
    pub radius: f64,
    pub n_active: usize,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
}

impl BasisFile {
    pub fn from_basis(b: &StokesBasis) -> Self {
        let d = &b.domain;
        BasisFile {
            r: d.r,
            h: d.grid.h,
            n: d.grid.n,
            radius: d.body.radius,
            n_active: d.n_active(),
            eigenvalues: b.eigenvalues.clone(),
            residuals: b.residuals.clone(),
            fields: b.fields.clone(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let k = self.eigenvalues.len();
        let mut out = Vec::with_capacity(64 + 8 * k * (2 + self.n_active) + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.r.to_le_bytes());
        out.extend_from_slice(&self.h.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.radius.to_le_bytes());
        out.extend_from_slice(&(k as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_active as u64).to_le_bytes());
        put_f64s(&mut out, &self.eigenvalues);
        put_f64s(&mut out, &self.residuals);
        for f in &self.fields {
            put_f64s(&mut out, f);
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Decode("basis file truncated".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(Error::Decode("basis checksum mismatch".into()));
        }
        let mut rd = Reader::new(body);
        if rd.take(8)? != MAGIC {
            return Err(Error::Decode("bad basis magic".into()));
        }
        let version = rd.u32()?;
        if version != VERSION {
            return Err(Error::Decode(format!("unsupported basis version {version}")));
        }
        let r = rd.f64()?;
        let h = rd.f64()?;
        let n = rd.u64()?;
        let radius = rd.f64()?;
        let k = rd.u64()?;
        let n_active = rd.u64()?;
        for (name, v) in [("R", r), ("h", h), ("radius", radius)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Decode(format!("{name} must be positive and finite")));
            }
        }
        if n == 0 || n > 1 << 9 {
            return Err(Error::Decode(format!("implausible grid size {n}")));
        }
        let total = k
            .checked_mul(n_active.checked_add(2).ok_or_else(|| Error::Decode("size overflow".into()))?)
            .filter(|&t| t <= MAX_VALUES)
            .ok_or_else(|| Error::Decode("basis too large".into()))?;
        if total * 8 != rd.remaining() as u64 {
            return Err(Error::Decode(format!("expected {} payload bytes, found {}", total * 8, rd.remaining())));
        }
        let (k, n_active) = (k as usize, n_active as usize);
        let eigenvalues = rd.f64_vec(k)?;
        let residuals = rd.f64_vec(k)?;
        let fields = (0..k).map(|_| rd.f64_vec(n_active)).collect::<Result<Vec<_>>>()?;
        rd.finish()?;
        Ok(BasisFile { r, h, n: n as usize, radius, n_active, eigenvalues, residuals, fields })
    }

    /// Rebuilds the domain and checks it matches the stored layout.
    pub fn to_basis(&self) -> Result<StokesBasis> {
        let body = BodySpec::sphere(self.radius)?;
        let dom = TruncatedDomain::from_grid(body, self.r, Grid::new(self.n, self.h))?;
        if dom.n_active() != self.n_active {
            return Err(Error::Decode(format!(
                "stored basis has {} faces, rebuilt domain has {}",
                self.n_active,
                dom.n_active()
            )));
        }
        Ok(StokesBasis {
            domain: Arc::new(dom),
            eigenvalues: self.eigenvalues.clone(),
            fields: self.fields.clone(),
            residuals: self.residuals.clone(),
            iterations: 0,
        })
    }
}

pub fn save_basis(b: &StokesBasis, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, BasisFile::from_basis(b).encode())?;
    Ok(())
}

pub fn load_basis(path: &std::path::Path) -> Result<StokesBasis> {
    BasisFile::decode(&std::fs::read(path)?)?.to_basis()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_truncated_domain;
    use crate::stokes::{assemble_projector, solve_stokes_eigs, EigenOptions};

    #[test]
    fn round_trip_and_corruption() {
        let d = Arc::new(build_truncated_domain(BodySpec::sphere(1.0).unwrap(), 4.0, 0.5).unwrap());
        let p = assemble_projector(d).unwrap();
        let b = solve_stokes_eigs(&p, 3, EigenOptions::default()).unwrap();
        let bytes = BasisFile::from_basis(&b).encode();
        let back = BasisFile::decode(&bytes).unwrap().to_basis().unwrap();
        assert_eq!(back.eigenvalues, b.eigenvalues);
        assert_eq!(back.fields, b.fields);
        let mut bad = bytes.clone();
        bad[40] ^= 1;
        assert!(BasisFile::decode(&bad).is_err());
        assert!(BasisFile::decode(&bytes[..bytes.len() - 9]).is_err());
    }
}
