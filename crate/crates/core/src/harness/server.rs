use std::collections::HashMap;
use std::convert::Infallible;
use std::io::{self, BufReader, BufWriter, ErrorKind, Read};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::time::Instant;

use super::observation::ObservationWriter;
use super::wire::{ErrorCode, Header, MsgType, WireError, WireFrame, HEADER_LEN};
use crate::numerics::Matrix;

#[derive(Clone, Debug, Default)]
pub struct ServerOptions {
    /// Log every offload request to this observation file.
    pub capture: Option<PathBuf>,
}

/// The untrusted accelerator: caches weights and multiplies whatever it is sent.
///
/// Connections are served one at a time, each request answered before the next
/// is read. Weights stay resident across connections.
pub struct UntrustedServer {
    listener: TcpListener,
    capture: Option<ObservationWriter>,
    weights: HashMap<u32, Matrix>,
}

impl UntrustedServer {
    pub fn bind<A: ToSocketAddrs>(addr: A, opts: &ServerOptions) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let capture = opts
            .capture
            .as_deref()
            .map(ObservationWriter::create)
            .transpose()?;
        Ok(Self {
            listener,
            capture,
            weights: HashMap::new(),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn serve_forever(mut self) -> io::Result<Infallible> {
        loop {
            let (stream, _) = self.listener.accept()?;
            self.handle_connection(stream)?;
        }
    }

    /// Serves exactly `count` connections, then returns.
    pub fn serve_connections(&mut self, count: usize) -> io::Result<()> {
        for _ in 0..count {
            let (stream, _) = self.listener.accept()?;
            self.handle_connection(stream)?;
        }
        Ok(())
    }

    fn handle_connection(&mut self, stream: TcpStream) -> io::Result<()> {
        stream.set_nodelay(true)?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = BufWriter::new(stream);
        loop {
            let mut head = [0u8; HEADER_LEN];
            match reader.read_exact(&mut head) {
                Ok(()) => {}
                Err(e) if matches!(e.kind(), ErrorKind::UnexpectedEof | ErrorKind::ConnectionReset) => {
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
            let reply = match Header::decode(&head) {
                Ok(header) => {
                    let mut payload = vec![0u8; header.payload_len()];
                    if let Err(e) = reader.read_exact(&mut payload) {
                        return if e.kind() == ErrorKind::UnexpectedEof { Ok(()) } else { Err(e) };
                    }
                    self.dispatch(WireFrame { header, payload }, &head)?
                }
                Err(WireError::UnknownMsgType(_)) => {
                    if let Some(len) = Header::skippable_len(&head) {
                        io::copy(&mut (&mut reader).take(len as u64), &mut io::sink())?;
                    }
                    WireFrame::error(ErrorCode::Malformed, 0)
                }
                Err(_) => WireFrame::error(ErrorCode::Malformed, 0),
            };
            if let Err(e) = reply.write_to(&mut writer) {
                return if e.kind() == ErrorKind::BrokenPipe { Ok(()) } else { Err(e) };
            }
        }
    }

    fn dispatch(&mut self, frame: WireFrame, head: &[u8; HEADER_LEN]) -> io::Result<WireFrame> {
        let batch_id = frame.header.batch_id;
        Ok(match frame.msg_type() {
            MsgType::LoadWeights => match frame.matrix() {
                Ok(w) => {
                    self.weights.insert(frame.header.aux, w);
                    WireFrame::control(MsgType::Ack, batch_id, frame.header.aux)
                }
                Err(_) => WireFrame::error(ErrorCode::Malformed, batch_id),
            },
            MsgType::OffloadRequest => {
                if let Some(capture) = self.capture.as_mut() {
                    let mut raw = Vec::with_capacity(HEADER_LEN + frame.payload.len());
                    raw.extend_from_slice(head);
                    raw.extend_from_slice(&frame.payload);
                    capture.record(batch_id, &raw)?;
                }
                self.offload(&frame)
            }
            _ => WireFrame::error(ErrorCode::UnexpectedMessage, batch_id),
        })
    }

    fn offload(&self, frame: &WireFrame) -> WireFrame {
        let batch_id = frame.header.batch_id;
        let Some(w) = self.weights.get(&frame.header.aux) else {
            return WireFrame::error(ErrorCode::UnknownWeight, batch_id);
        };
        let u = match frame.matrix() {
            Ok(u) => u,
            Err(_) => return WireFrame::error(ErrorCode::Malformed, batch_id),
        };
        if u.ncols() != w.nrows() {
            return WireFrame::error(ErrorCode::ShapeMismatch, batch_id);
        }
        let start = Instant::now();
        let y = &u * w;
        let micros = start.elapsed().as_micros().min(u32::MAX as u128) as u32;
        WireFrame::with_matrix(MsgType::OffloadResponse, &y, frame.header.dtype, batch_id, micros)
    }
}

/// Binds `endpoint` and serves until the process is stopped.
pub fn serve_untrusted(endpoint: &str, opts: &ServerOptions) -> io::Result<Infallible> {
    UntrustedServer::bind(endpoint, opts)?.serve_forever()
}
