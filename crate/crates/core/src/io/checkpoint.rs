//! Binary checkpoints.
//!
//! Layout (little endian):
//!
//! ```text
//! magic      8 bytes  "LDCHKPT\0"
//! version    u32
//! dim, n     u32, u32
//! box_length f64
//! t, dt      f64, f64
//! step_count u64
//! flags      u32      bit 0: divergence-free tag
//! ncomp      u32
//! coeffs     ncomp * n^dim * (re f64, im f64)
//! sha256     32 bytes over everything above
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::SolverState;
use crate::spectral::field::SpectralField;
use crate::spectral::grid::Grid;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LDCHKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8 + 8 + 8 + 8 + 4 + 4;
const DIGEST_LEN: usize = 32;

pub fn checkpoint_save(state: &SolverState, sink: &mut impl Write) -> Result<()> {
    let u = &state.u;
    let g = u.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + u.components() * g.len() * 16 + DIGEST_LEN);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    buf.extend_from_slice(&g.box_length().to_le_bytes());
    buf.extend_from_slice(&state.t.to_le_bytes());
    buf.extend_from_slice(&state.dt.to_le_bytes());
    buf.extend_from_slice(&state.step_count.to_le_bytes());
    buf.extend_from_slice(&(u.is_divergence_free() as u32).to_le_bytes());
    buf.extend_from_slice(&(u.components() as u32).to_le_bytes());
    for comp in u.comps() {
        for c in comp {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.bytes[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn checkpoint_load(source: &mut impl Read) -> Result<SolverState> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(Error::Checkpoint("checksum mismatch: file is truncated".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checkpoint(
            "checksum mismatch: file is truncated or corrupted".into(),
        ));
    }

    let mut cur = Cursor { bytes: body, pos: 12 };
    let dim = cur.u32() as usize;
    let n = cur.u32() as usize;
    let box_length = cur.f64();
    let t = cur.f64();
    let dt = cur.f64();
    let step_count = cur.u64();
    let flags = cur.u32();
    let ncomp = cur.u32() as usize;
    let grid = Grid::new(dim, n, box_length)
        .map_err(|e| Error::Checkpoint(format!("bad grid metadata: {e}")))?;
    let expected = HEADER_LEN + ncomp * grid.len() * 16;
    if body.len() != expected {
        return Err(Error::Checkpoint(format!(
            "payload holds {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let comps = (0..ncomp)
        .map(|_| {
            (0..grid.len())
                .map(|_| {
                    let re = cur.f64();
                    let im = cur.f64();
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    Ok(SolverState {
        t,
        u: SpectralField::from_parts(&grid, comps, flags & 1 == 1),
        step_count,
        dt,
    })
}

/// Writes through a temporary file and renames it into place.
pub fn save_checkpoint_file(state: &SolverState, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(fs::File::create(&tmp)?);
        checkpoint_save(state, &mut f)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint_file(path: &Path) -> Result<SolverState> {
    let mut f = fs::File::open(path)?;
    checkpoint_load(&mut f)
}

/// Loads a checkpoint for resuming on `grid`; rejects a different grid.
pub fn load_for_resume(path: &Path, grid: &Grid) -> Result<SolverState> {
    let state = load_checkpoint_file(path)?;
    if !state.u.grid().same_shape(grid) {
        return Err(Error::Checkpoint(format!(
            "grid mismatch on resume: checkpoint has {:?}, config has {:?}",
            state.u.grid(),
            grid
        )));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::sample::random_hermitian;

    fn state() -> SolverState {
        let grid = Grid::new(3, 8, 3.0).unwrap();
        SolverState {
            t: 0.125,
            u: random_hermitian(&grid, 3, 5, true),
            step_count: 125,
            dt: 1e-3,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = state();
        let mut buf = Vec::new();
        checkpoint_save(&s, &mut buf).unwrap();
        let back = checkpoint_load(&mut buf.as_slice()).unwrap();
        assert!(back.bit_eq(&s));
        assert_eq!(back.u.grid().box_length(), 3.0);
    }

    #[test]
    fn truncation_and_corruption_are_detected() {
        let mut buf = Vec::new();
        checkpoint_save(&state(), &mut buf).unwrap();
        let short = &buf[..buf.len() - 100];
        let err = checkpoint_load(&mut &short[..]).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
        let mut flipped = buf.clone();
        flipped[200] ^= 1;
        assert!(checkpoint_load(&mut flipped.as_slice())
            .unwrap_err()
            .to_string()
            .contains("checksum"));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut buf = Vec::new();
        checkpoint_save(&state(), &mut buf).unwrap();
        buf[8] = 9;
        let err = checkpoint_load(&mut buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version 9"), "{err}");
    }

    #[test]
    fn resume_rejects_other_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        save_checkpoint_file(&state(), &path).unwrap();
        let other = Grid::new(3, 16, 3.0).unwrap();
        assert!(load_for_resume(&path, &other).is_err());
        let same = Grid::new(3, 8, 3.0).unwrap();
        assert!(load_for_resume(&path, &same).is_ok());
    }
}
