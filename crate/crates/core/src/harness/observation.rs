//! The adversary's record of what crossed the wire.
//!
//! File layout: an 8-byte header (`"GOBS"`, u32 LE version `1`), then one
//! record per offload request: the 8-byte little-endian batch id followed by
//! the request frame exactly as it was received.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use super::wire::{WireError, WireFrame, HEADER_LEN};

pub const OBS_MAGIC: [u8; 4] = *b"GOBS";
pub const OBS_VERSION: u32 = 1;

pub struct ObservationWriter {
    out: BufWriter<File>,
    records: u64,
}

impl ObservationWriter {
    /// Creates (truncates) the file and writes the header immediately.
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&OBS_MAGIC)?;
        out.write_all(&OBS_VERSION.to_le_bytes())?;
        out.flush()?;
        Ok(Self { out, records: 0 })
    }

    pub fn record(&mut self, batch_id: u64, frame_bytes: &[u8]) -> io::Result<()> {
        self.out.write_all(&batch_id.to_le_bytes())?;
        self.out.write_all(frame_bytes)?;
        self.out.flush()?;
        self.records += 1;
        Ok(())
    }

    pub fn records(&self) -> u64 {
        self.records
    }
}

/// One captured observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub batch_id: u64,
    pub frame: WireFrame,
    /// The frame bytes as stored.
    pub raw: Vec<u8>,
}

pub fn read_observations(path: &Path) -> Result<Vec<Observation>, WireError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || bytes[0..4] != OBS_MAGIC {
        return Err(WireError::BadMagic(bytes.get(0..4).and_then(|b| b.try_into().ok()).unwrap_or([0; 4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != OBS_VERSION {
        return Err(WireError::UnsupportedVersion(version as u8));
    }
    let mut pos = 8;
    let mut out = Vec::new();
    while pos < bytes.len() {
        if bytes.len() < pos + 8 + HEADER_LEN {
            return Err(WireError::LengthMismatch {
                expected: pos + 8 + HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let batch_id = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
        pos += 8;
        let header = super::wire::Header::decode(bytes[pos..pos + HEADER_LEN].try_into().unwrap())?;
        let end = pos + HEADER_LEN + header.payload_len();
        if end > bytes.len() {
            return Err(WireError::LengthMismatch {
                expected: end,
                actual: bytes.len(),
            });
        }
        let raw = bytes[pos..end].to_vec();
        out.push(Observation {
            batch_id,
            frame: WireFrame::decode(&raw)?,
            raw,
        });
        pos = end;
    }
    Ok(out)
}
