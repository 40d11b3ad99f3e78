//! Binary state snapshots.
//!
//! Layout, all little-endian: magic `ANSE`, `u32` version (1), `u32 nx`,
//! `u32 ny`, `f64` time, then the streamfunction as `(re, im)` pairs for
//! `k1 = 0..=nx/2` (outer) and `k2 = 1..ny` (inner), then the mean profile
//! for `k2 = 0..=ny`. Negative `k1` follow from Hermitian symmetry.

use std::fs;
use std::io::{self, Read};
use std::path::Path;

use hvns_core::flow::FlowState;
use hvns_core::spectral::{Dealias, Profile, ScalarSpectrum, SpectralGrid, YBasis};
use num_complex::Complex64;

pub const MAGIC: [u8; 4] = *b"ANSE";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub nx: u32,
    pub ny: u32,
    pub time: f64,
}

impl SnapshotHeader {
    fn payload_len(&self) -> usize {
        let (nx, ny) = (self.nx as usize, self.ny as usize);
        8 * (2 * (nx / 2 + 1) * ny.saturating_sub(1) + ny + 1)
    }
}

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn encode(s: &FlowState) -> Vec<u8> {
    let g = s.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let header = SnapshotHeader { version: VERSION, nx: nx as u32, ny: ny as u32, time: s.time() };
    let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&header.nx.to_le_bytes());
    out.extend_from_slice(&header.ny.to_le_bytes());
    out.extend_from_slice(&s.time().to_le_bytes());
    for k1 in 0..=(nx / 2) as i64 {
        for k2 in 1..ny {
            let c = s.psi().get(k1, k2);
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    for c in s.ubar().coeffs() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

fn parse_header(bytes: &[u8]) -> io::Result<SnapshotHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(invalid("snapshot shorter than its header"));
    }
    if bytes[..4] != MAGIC {
        return Err(invalid("not a snapshot (bad magic)"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let header = SnapshotHeader {
        version: u32_at(4),
        nx: u32_at(8),
        ny: u32_at(12),
        time: f64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")),
    };
    if header.version != VERSION {
        return Err(invalid(format!("unsupported snapshot version {}", header.version)));
    }
    Ok(header)
}

/// Decodes a snapshot onto a grid with the given dealiasing fraction.
pub fn decode(bytes: &[u8], dealias: Dealias) -> io::Result<FlowState> {
    let header = parse_header(bytes)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != header.payload_len() {
        return Err(invalid(format!("snapshot payload has {} bytes, expected {}", body.len(), header.payload_len())));
    }
    let (nx, ny) = (header.nx as usize, header.ny as usize);
    let grid = SpectralGrid::with_dealias(nx, ny, dealias).map_err(|e| invalid(e.to_string()))?;
    let mut vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut next = || vals.next().expect("length checked");
    let mut psi = ScalarSpectrum::zeros(grid, YBasis::SineY);
    for k1 in 0..=(nx / 2) as i64 {
        for k2 in 1..ny {
            let c = Complex64::new(next(), next());
            psi.set_mode(k1, k2, c);
        }
    }
    let ubar = Profile::from_coeffs(YBasis::CosineY, (0..=ny).map(|_| next()).collect());
    FlowState::new(psi, ubar, header.time).map_err(|e| invalid(e.to_string()))
}

pub fn write(path: &Path, s: &FlowState) -> io::Result<()> {
    fs::write(path, encode(s))
}

pub fn read(path: &Path, dealias: Dealias) -> io::Result<FlowState> {
    decode(&fs::read(path)?, dealias)
}

/// Reads and checks only the header.
pub fn read_header(path: &Path) -> io::Result<SnapshotHeader> {
    let mut buf = [0u8; HEADER_LEN];
    fs::File::open(path)?.read_exact(&mut buf).map_err(|_| invalid("snapshot shorter than its header"))?;
    parse_header(&buf)
}
