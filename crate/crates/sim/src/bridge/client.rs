use std::collections::BTreeMap;
use std::io::{ErrorKind, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use flightcore::world::Aabb;

use super::protocol::{ConfigureRequest, Envelope, FrameDecoder, FrameError, Message};

/// Largest frame payload the client accepts.
pub const MAX_CLIENT_PAYLOAD: usize = 256 << 20;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("bridge I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad frame from server: {}", .0.reason)]
    Frame(FrameError),
    #[error("server rejected request {ref_id}: {reason}")]
    Rejected { ref_id: u64, reason: String },
    #[error("timed out waiting for the server")]
    Timeout,
    #[error("server closed the connection")]
    Closed,
    #[error("inconsistent point-cloud chunks: {0}")]
    Chunks(String),
}

/// Collects point-cloud chunks in any order.
#[derive(Debug, Default)]
pub struct ChunkAssembler {
    total: Option<u32>,
    parts: BTreeMap<u32, Vec<u8>>,
}

impl ChunkAssembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one chunk. Duplicates must be identical.
    pub fn add(&mut self, index: u32, total: u32, payload: Vec<u8>) -> Result<(), ClientError> {
        if index >= total {
            return Err(ClientError::Chunks(format!("index {index} >= total {total}")));
        }
        match self.total {
            Some(t) if t != total => {
                return Err(ClientError::Chunks(format!("total changed from {t} to {total}")))
            }
            _ => self.total = Some(total),
        }
        if let Some(prev) = self.parts.get(&index) {
            if *prev != payload {
                return Err(ClientError::Chunks(format!("conflicting copies of chunk {index}")));
            }
        }
        self.parts.insert(index, payload);
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.total.is_some_and(|t| self.parts.len() == t as usize)
    }

    /// Concatenated payload once every chunk has arrived.
    pub fn finish(self) -> Option<Vec<u8>> {
        if !self.is_complete() {
            return None;
        }
        Some(self.parts.into_values().flatten().collect())
    }
}

/// Minimal renderer-side client.
pub struct BridgeClient {
    stream: TcpStream,
    decoder: FrameDecoder,
    next_id: u64,
    /// Messages received while waiting for something else.
    backlog: Vec<Envelope>,
}

impl BridgeClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            stream,
            decoder: FrameDecoder::new(MAX_CLIENT_PAYLOAD),
            next_id: 1,
            backlog: Vec::new(),
        })
    }

    /// Sends `message` and returns the id it was given.
    pub fn send(&mut self, message: Message) -> Result<u64, ClientError> {
        let id = self.next_id;
        self.next_id += 1;
        self.stream.write_all(&Envelope::new(id, message).encode())?;
        Ok(id)
    }

    /// Writes raw bytes, e.g. deliberately malformed frames.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        self.stream.write_all(bytes)?;
        Ok(())
    }

    /// Next message from the server.
    pub fn recv(&mut self, timeout: Duration) -> Result<Envelope, ClientError> {
        if !self.backlog.is_empty() {
            return Ok(self.backlog.remove(0));
        }
        self.recv_wire(timeout)
    }

    fn recv_wire(&mut self, timeout: Duration) -> Result<Envelope, ClientError> {
        let deadline = Instant::now() + timeout;
        let mut buf = [0u8; 64 * 1024];
        loop {
            if let Some(frame) = self.decoder.next_frame() {
                return frame.map_err(ClientError::Frame);
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(ClientError::Timeout);
            }
            self.stream.set_read_timeout(Some(left))?;
            match self.stream.read(&mut buf) {
                Ok(0) => return Err(ClientError::Closed),
                Ok(n) => self.decoder.push(&buf[..n]),
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                    return Err(ClientError::Timeout)
                }
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Waits for the first message matching `pred`; others are kept for [`recv`](Self::recv).
    pub fn wait_for(
        &mut self,
        timeout: Duration,
        mut pred: impl FnMut(&Envelope) -> bool,
    ) -> Result<Envelope, ClientError> {
        if let Some(i) = self.backlog.iter().position(&mut pred) {
            return Ok(self.backlog.remove(i));
        }
        let deadline = Instant::now() + timeout;
        loop {
            let env = self.recv_wire(deadline.saturating_duration_since(Instant::now()))?;
            if pred(&env) {
                return Ok(env);
            }
            if !matches!(env.message, Message::StateUpdate { .. }) {
                self.backlog.push(env);
            }
        }
    }

    /// Waits for the Ack or Error answering request `id`.
    pub fn wait_reply(&mut self, id: u64, timeout: Duration) -> Result<(), ClientError> {
        let env = self.wait_for(timeout, |e| {
            matches!(e.message, Message::Ack { ref_id } | Message::Error { ref_id, .. } if ref_id == id)
        })?;
        match env.message {
            Message::Error { ref_id, reason } => Err(ClientError::Rejected { ref_id, reason }),
            _ => Ok(()),
        }
    }

    pub fn configure(&mut self, request: ConfigureRequest, timeout: Duration) -> Result<(), ClientError> {
        let id = self.send(Message::Configure(request))?;
        self.wait_reply(id, timeout)
    }

    /// Requests a point cloud and returns the reassembled PLY bytes.
    pub fn point_cloud(&mut self, bounds: Aabb, resolution: f64, timeout: Duration) -> Result<Vec<u8>, ClientError> {
        let id = self.send(Message::PointCloudRequest { bounds, resolution })?;
        let deadline = Instant::now() + timeout;
        let mut asm = ChunkAssembler::new();
        while !asm.is_complete() {
            let left = deadline.saturating_duration_since(Instant::now());
            let env = self.wait_for(left, |e| match e.message {
                Message::PointCloudChunk { ref_id, .. } | Message::Error { ref_id, .. } => ref_id == id,
                _ => false,
            })?;
            match env.message {
                Message::PointCloudChunk {
                    index, total, payload, ..
                } => asm.add(index, total, payload)?,
                Message::Error { ref_id, reason } => return Err(ClientError::Rejected { ref_id, reason }),
                _ => unreachable!(),
            }
        }
        Ok(asm.finish().unwrap_or_default())
    }
}
