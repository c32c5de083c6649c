//! Binary framing between the trusted client and the untrusted server.
//!
//! Every frame is a fixed 27-byte little-endian header followed by a dense
//! row-major payload:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `"GELO"`                          |
//! | 4      | 1    | version (`1`)                           |
//! | 5      | 1    | message type                            |
//! | 6      | 1    | dtype (`0` = f32, `1` = f64)            |
//! | 7      | 4    | rows (u32)                              |
//! | 11     | 4    | cols (u32)                              |
//! | 15     | 8    | batch id (u64)                          |
//! | 23     | 4    | aux (u32): weight id or error code      |
//! | 27     | …    | `rows × cols × dtype size` payload bytes |

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::numerics::{Dtype, Matrix};

pub const MAGIC: [u8; 4] = *b"GELO";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 27;
/// Largest payload a peer will allocate for.
pub const MAX_ELEMENTS: usize = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MsgType {
    OffloadRequest = 1,
    OffloadResponse = 2,
    LoadWeights = 3,
    Ack = 4,
    Error = 5,
}

impl MsgType {
    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => Self::OffloadRequest,
            2 => Self::OffloadResponse,
            3 => Self::LoadWeights,
            4 => Self::Ack,
            5 => Self::Error,
            _ => return None,
        })
    }
}

/// Codes carried in the `aux` field of an `Error` frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCode {
    Malformed = 1,
    UnknownWeight = 2,
    ShapeMismatch = 3,
    UnexpectedMessage = 4,
    Other = 255,
}

impl ErrorCode {
    pub fn from_code(code: u32) -> Self {
        match code {
            1 => Self::Malformed,
            2 => Self::UnknownWeight,
            3 => Self::ShapeMismatch,
            4 => Self::UnexpectedMessage,
            _ => Self::Other,
        }
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown message type {0}")]
    UnknownMsgType(u8),
    #[error("unknown dtype {0}")]
    UnknownDtype(u8),
    #[error("payload of {rows}x{cols} exceeds the frame size limit")]
    TooLarge { rows: u32, cols: u32 },
    #[error("payload is {actual} bytes, header implies {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value in payload")]
    NonFinite,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parsed fixed-size header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub msg_type: MsgType,
    pub dtype: Dtype,
    pub rows: u32,
    pub cols: u32,
    pub batch_id: u64,
    pub aux: u32,
}

impl Header {
    pub fn payload_len(&self) -> usize {
        self.rows as usize * self.cols as usize * self.dtype.size()
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = self.msg_type as u8;
        out[6] = self.dtype.code();
        out[7..11].copy_from_slice(&self.rows.to_le_bytes());
        out[11..15].copy_from_slice(&self.cols.to_le_bytes());
        out[15..23].copy_from_slice(&self.batch_id.to_le_bytes());
        out[23..27].copy_from_slice(&self.aux.to_le_bytes());
        out
    }

    /// Decodes a header. On [`WireError::UnknownMsgType`] the payload length is
    /// still well defined, see [`Header::skippable_len`].
    pub fn decode(bytes: &[u8; HEADER_LEN]) -> Result<Self, WireError> {
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        if bytes[4] != VERSION {
            return Err(WireError::UnsupportedVersion(bytes[4]));
        }
        let dtype = Dtype::from_code(bytes[6]).ok_or(WireError::UnknownDtype(bytes[6]))?;
        let rows = u32::from_le_bytes(bytes[7..11].try_into().unwrap());
        let cols = u32::from_le_bytes(bytes[11..15].try_into().unwrap());
        if rows as usize * cols as usize > MAX_ELEMENTS {
            return Err(WireError::TooLarge { rows, cols });
        }
        let msg_type = MsgType::from_code(bytes[5]).ok_or(WireError::UnknownMsgType(bytes[5]))?;
        Ok(Self {
            msg_type,
            dtype,
            rows,
            cols,
            batch_id: u64::from_le_bytes(bytes[15..23].try_into().unwrap()),
            aux: u32::from_le_bytes(bytes[23..27].try_into().unwrap()),
        })
    }

    /// Payload size of a header whose only defect is its message type, so a
    /// reader can discard the payload and stay in sync.
    pub fn skippable_len(bytes: &[u8; HEADER_LEN]) -> Option<usize> {
        let dtype = Dtype::from_code(bytes[6])?;
        if bytes[0..4] != MAGIC || bytes[4] != VERSION {
            return None;
        }
        let rows = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
        (rows * cols <= MAX_ELEMENTS).then_some(rows * cols * dtype.size())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WireFrame {
    pub header: Header,
    pub payload: Vec<u8>,
}

impl WireFrame {
    /// Frame carrying `m`, narrowed to `dtype`.
    pub fn with_matrix(msg_type: MsgType, m: &Matrix, dtype: Dtype, batch_id: u64, aux: u32) -> Self {
        let (rows, cols) = m.shape();
        let mut payload = Vec::with_capacity(rows * cols * dtype.size());
        for i in 0..rows {
            for j in 0..cols {
                let v = m[(i, j)];
                match dtype {
                    Dtype::F32 => payload.extend_from_slice(&(v as f32).to_le_bytes()),
                    Dtype::F64 => payload.extend_from_slice(&v.to_le_bytes()),
                }
            }
        }
        Self {
            header: Header {
                msg_type,
                dtype,
                rows: rows as u32,
                cols: cols as u32,
                batch_id,
                aux,
            },
            payload,
        }
    }

    /// Payload-free control frame (`Ack`, `Error`).
    pub fn control(msg_type: MsgType, batch_id: u64, aux: u32) -> Self {
        Self {
            header: Header {
                msg_type,
                dtype: Dtype::F64,
                rows: 0,
                cols: 0,
                batch_id,
                aux,
            },
            payload: Vec::new(),
        }
    }

    pub fn error(code: ErrorCode, batch_id: u64) -> Self {
        Self::control(MsgType::Error, batch_id, code as u32)
    }

    pub fn msg_type(&self) -> MsgType {
        self.header.msg_type
    }

    /// Decodes the payload into an `f64` matrix.
    pub fn matrix(&self) -> Result<Matrix, WireError> {
        let h = &self.header;
        let expected = h.payload_len();
        if self.payload.len() != expected {
            return Err(WireError::LengthMismatch {
                expected,
                actual: self.payload.len(),
            });
        }
        let (rows, cols) = (h.rows as usize, h.cols as usize);
        let size = h.dtype.size();
        let mut m = Matrix::zeros(rows, cols);
        for (idx, chunk) in self.payload.chunks_exact(size).enumerate() {
            let v = match h.dtype {
                Dtype::F32 => f32::from_le_bytes(chunk.try_into().unwrap()) as f64,
                Dtype::F64 => f64::from_le_bytes(chunk.try_into().unwrap()),
            };
            if !v.is_finite() {
                return Err(WireError::NonFinite);
            }
            m[(idx / cols, idx % cols)] = v;
        }
        Ok(m)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.header.encode());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::LengthMismatch {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let header = Header::decode(bytes[..HEADER_LEN].try_into().unwrap())?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != header.payload_len() {
            return Err(WireError::LengthMismatch {
                expected: header.payload_len(),
                actual: payload.len(),
            });
        }
        Ok(Self {
            header,
            payload: payload.to_vec(),
        })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&self.header.encode())?;
        w.write_all(&self.payload)?;
        w.flush()
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, WireError> {
        let mut head = [0u8; HEADER_LEN];
        r.read_exact(&mut head)?;
        let header = Header::decode(&head)?;
        let mut payload = vec![0u8; header.payload_len()];
        r.read_exact(&mut payload)?;
        Ok(Self { header, payload })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, -2.0]);
        let frame = WireFrame::with_matrix(MsgType::OffloadRequest, &m, Dtype::F32, 0x0102, 7);
        let bytes = frame.encode();
        assert_eq!(&bytes[0..4], b"GELO");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 1);
        assert_eq!(bytes[6], 0);
        assert_eq!(&bytes[7..11], &[1, 0, 0, 0]);
        assert_eq!(&bytes[11..15], &[2, 0, 0, 0]);
        assert_eq!(&bytes[15..23], &[2, 1, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[23..27], &[7, 0, 0, 0]);
        assert_eq!(&bytes[27..31], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[31..35], &(-2.0f32).to_le_bytes());
        assert_eq!(bytes.len(), HEADER_LEN + 8);
    }

    #[test]
    fn rejects_unknown_fields() {
        let frame = WireFrame::control(MsgType::Ack, 0, 0);
        let mut bytes = frame.encode();
        bytes[5] = 9;
        assert!(matches!(WireFrame::decode(&bytes), Err(WireError::UnknownMsgType(9))));
        assert_eq!(Header::skippable_len(bytes[..HEADER_LEN].try_into().unwrap()), Some(0));
        bytes[5] = 4;
        bytes[6] = 3;
        assert!(matches!(WireFrame::decode(&bytes), Err(WireError::UnknownDtype(3))));
        bytes[6] = 1;
        bytes[4] = 2;
        assert!(matches!(WireFrame::decode(&bytes), Err(WireError::UnsupportedVersion(2))));
        bytes[0] = b'X';
        assert!(matches!(WireFrame::decode(&bytes), Err(WireError::BadMagic(_))));
    }

    #[test]
    fn length_checked() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let mut bytes = WireFrame::with_matrix(MsgType::LoadWeights, &m, Dtype::F64, 0, 0).encode();
        bytes.pop();
        assert!(matches!(WireFrame::decode(&bytes), Err(WireError::LengthMismatch { .. })));
    }

    #[test]
    fn oversized_header_rejected() {
        let mut h = WireFrame::control(MsgType::OffloadRequest, 0, 0).header;
        h.rows = u32::MAX;
        h.cols = u32::MAX;
        assert!(matches!(Header::decode(&h.encode()), Err(WireError::TooLarge { .. })));
    }
}
