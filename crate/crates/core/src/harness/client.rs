use std::io::{self, BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};

use super::wire::{ErrorCode, MsgType, WireError, WireFrame};
use crate::error::{GeloError, Result};
use crate::numerics::{Dtype, Matrix};

/// Blocking client for the untrusted server. One request in flight at a time.
pub struct OffloadClient {
    endpoint: String,
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    next_batch_id: u64,
}

impl OffloadClient {
    pub fn connect<A: ToSocketAddrs + ToString>(endpoint: A) -> Result<Self> {
        let name = endpoint.to_string();
        let transport = |source| GeloError::Transport {
            endpoint: name.clone(),
            source,
            partial: None,
        };
        let stream = TcpStream::connect(endpoint).map_err(transport)?;
        stream.set_nodelay(true).map_err(transport)?;
        let reader = BufReader::new(stream.try_clone().map_err(transport)?);
        Ok(Self {
            endpoint: name,
            reader,
            writer: BufWriter::new(stream),
            next_batch_id: 1,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn next_batch_id(&mut self) -> u64 {
        let id = self.next_batch_id;
        self.next_batch_id += 1;
        id
    }

    /// Sends a frame and waits for the reply.
    pub fn exchange(&mut self, frame: &WireFrame) -> Result<WireFrame> {
        frame.write_to(&mut self.writer).map_err(|e| self.transport(e))?;
        match WireFrame::read_from(&mut self.reader) {
            Ok(reply) => Ok(reply),
            Err(WireError::Io(e)) => Err(self.transport(e)),
            Err(e) => Err(e.into()),
        }
    }

    pub fn load_weights(&mut self, weight_id: u32, w: &Matrix, dtype: Dtype) -> Result<()> {
        let reply = self.exchange(&WireFrame::with_matrix(MsgType::LoadWeights, w, dtype, 0, weight_id))?;
        match reply.msg_type() {
            MsgType::Ack if reply.header.aux == weight_id => Ok(()),
            MsgType::Error => Err(GeloError::Remote {
                code: ErrorCode::from_code(reply.header.aux),
            }),
            _ => Err(GeloError::Remote {
                code: ErrorCode::UnexpectedMessage,
            }),
        }
    }

    /// Sends `u` for multiplication by the resident weight `weight_id`.
    /// Returns the product and the server-reported GEMM time in microseconds.
    pub fn offload(&mut self, batch_id: u64, weight_id: u32, u: &Matrix, dtype: Dtype) -> Result<(Matrix, u32)> {
        let request = WireFrame::with_matrix(MsgType::OffloadRequest, u, dtype, batch_id, weight_id);
        let reply = self.exchange(&request)?;
        match reply.msg_type() {
            MsgType::OffloadResponse if reply.header.batch_id == batch_id => {
                Ok((reply.matrix()?, reply.header.aux))
            }
            MsgType::Error => Err(GeloError::Remote {
                code: ErrorCode::from_code(reply.header.aux),
            }),
            _ => Err(GeloError::Remote {
                code: ErrorCode::UnexpectedMessage,
            }),
        }
    }

    fn transport(&self, source: io::Error) -> GeloError {
        GeloError::Transport {
            endpoint: self.endpoint.clone(),
            source,
            partial: None,
        }
    }
}
