//! Fixed-layout binary checkpoints.
//!
//! Layout (little endian):
//!
//! ```text
//! magic  b"VMLCKPT\x01"
//! u32    n (points per axis)
//! f64    R, gamma, c_phi
//! u32    record count
//! record:
//!   u32  mode index
//!   u64  step
//!   f64  t, k[3]
//!   f64  f values as (re, im), 2 n^3 pairs, species + then -
//!   f64  E[3] and B[3] as (re, im)
//! ```

use std::path::Path;
use std::sync::Arc;

use vml_core::collision::CollisionParams;
use vml_core::mode::ModeState;
use vml_core::{TwoSpeciesField, VelocityGrid, C64};

use crate::error::{io_err, LabError, Result};

pub const MAGIC: [u8; 8] = *b"VMLCKPT\x01";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointHeader {
    pub n: u32,
    pub r: f64,
    pub gamma: f64,
    pub c_phi: f64,
}

impl CheckpointHeader {
    pub fn new(grid: &VelocityGrid, p: &CollisionParams) -> Self {
        Self {
            n: grid.points_per_axis() as u32,
            r: grid.half_width(),
            gamma: p.gamma(),
            c_phi: p.c_phi(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckpointRecord {
    pub mode: u32,
    pub step: u64,
    pub state: ModeState,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub records: Vec<CheckpointRecord>,
}

fn put_c(buf: &mut Vec<u8>, z: C64) {
    buf.extend_from_slice(&z.re.to_le_bytes());
    buf.extend_from_slice(&z.im.to_le_bytes());
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&self.header.n.to_le_bytes());
        for v in [self.header.r, self.header.gamma, self.header.c_phi] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for rec in &self.records {
            buf.extend_from_slice(&rec.mode.to_le_bytes());
            buf.extend_from_slice(&rec.step.to_le_bytes());
            let s = &rec.state;
            for v in [s.t, s.k[0], s.k[1], s.k[2]] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            for z in s.f.values() {
                put_c(&mut buf, *z);
            }
            for z in s.e.iter().chain(&s.b) {
                put_c(&mut buf, *z);
            }
        }
        buf
    }

    /// Parses a checkpoint; the grid is rebuilt from the header.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: &str| LabError::Checkpoint {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let n = r.u32().ok_or_else(|| bad("truncated header"))?;
        let hw = r.f64().ok_or_else(|| bad("truncated header"))?;
        let gamma = r.f64().ok_or_else(|| bad("truncated header"))?;
        let c_phi = r.f64().ok_or_else(|| bad("truncated header"))?;
        let count = r.u32().ok_or_else(|| bad("truncated header"))?;
        let grid: Arc<VelocityGrid> = VelocityGrid::shared(hw, n as usize)?;
        let len = 2 * grid.len();
        let mut records = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let trunc = || bad("truncated record");
            let mode = r.u32().ok_or_else(trunc)?;
            let step = r.u64().ok_or_else(trunc)?;
            let t = r.f64().ok_or_else(trunc)?;
            let k = [r.f64().ok_or_else(trunc)?, r.f64().ok_or_else(trunc)?, r.f64().ok_or_else(trunc)?];
            let mut values = Vec::with_capacity(len);
            for _ in 0..len {
                values.push(r.c64().ok_or_else(trunc)?);
            }
            let mut eb = [C64::new(0.0, 0.0); 6];
            for z in eb.iter_mut() {
                *z = r.c64().ok_or_else(trunc)?;
            }
            let f = TwoSpeciesField::from_values(&grid, values)?;
            let mut state = ModeState::new(k, f, [eb[0], eb[1], eb[2]], [eb[3], eb[4], eb[5]]);
            state.t = t;
            records.push(CheckpointRecord { mode, step, state });
        }
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Self {
            header: CheckpointHeader { n, r: hw, gamma, c_phi },
            records,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        Self::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let s = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }

    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn c64(&mut self) -> Option<C64> {
        Some(C64::new(self.f64()?, self.f64()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_round_trip() {
        let g = VelocityGrid::shared(7.0, 5).unwrap();
        let f = TwoSpeciesField::from_fn(&g, |_, x| C64::new(x[0].sin() / 3.0, x[1] * 1e-300));
        let mut s = ModeState::new([0.1, -0.2, 1.0 / 3.0], f, [C64::new(1.0 / 7.0, -0.0); 3], [C64::new(f64::MIN_POSITIVE, 2.0); 3]);
        s.t = 12.345;
        let ck = Checkpoint {
            header: CheckpointHeader::new(&g, &CollisionParams::coulomb()),
            records: vec![CheckpointRecord { mode: 3, step: 99, state: s.clone() }],
        };
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back.header, ck.header);
        let b = &back.records[0];
        assert_eq!((b.mode, b.step), (3, 99));
        assert_eq!(b.state.t.to_bits(), s.t.to_bits());
        assert_eq!(b.state.k, s.k);
        for (x, y) in b.state.f.values().iter().zip(s.f.values()) {
            assert_eq!((x.re.to_bits(), x.im.to_bits()), (y.re.to_bits(), y.im.to_bits()));
        }
        assert_eq!(b.state.e[0].im.to_bits(), (-0.0f64).to_bits());
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let g = VelocityGrid::shared(7.0, 3).unwrap();
        let ck = Checkpoint {
            header: CheckpointHeader::new(&g, &CollisionParams::coulomb()),
            records: vec![CheckpointRecord { mode: 0, step: 0, state: ModeState::zero(&g, [1.0, 0.0, 0.0]) }],
        };
        let mut bytes = ck.to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1], Path::new("x")).is_err());
        bytes[0] = b'X';
        assert!(Checkpoint::from_bytes(&bytes, Path::new("x")).is_err());
    }
}
