use std::collections::VecDeque;
use std::io::{ErrorKind, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::Duration;

use flightcore::world::{Aabb, OccupancyCloud};

use super::protocol::{ConfigureRequest, Envelope, FrameDecoder, Message, Pose, PROTOCOL_VERSION};
use crate::error::SimError;
use crate::ply;

/// Depth of the per-connection state queue; the oldest update is dropped
/// when a new one arrives at a full queue.
pub const STATE_QUEUE_DEPTH: usize = 8;
/// Largest point-cloud chunk payload.
pub const CHUNK_SIZE: usize = 64 * 1024;
/// Largest request payload the server accepts.
pub const MAX_REQUEST_PAYLOAD: usize = 1 << 20;

const POLL: Duration = Duration::from_millis(50);

/// What the server asks of the simulation.
pub trait BridgeBackend: Send + Sync {
    /// Applies a new configuration. The error text is sent to the client.
    fn configure(&self, request: &ConfigureRequest) -> Result<(), String>;

    /// Occupancy cloud covering `bounds` at `resolution`.
    fn point_cloud(&self, bounds: &Aabb, resolution: f64) -> Result<OccupancyCloud, String>;
}

/// Counters over every connection the server has had.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BridgeStats {
    /// State updates offered to a connection queue.
    pub published: u64,
    /// State updates taken off a queue and written to the socket.
    pub delivered: u64,
    /// State updates evicted from a full queue or discarded on Configure.
    pub dropped: u64,
    /// State updates currently waiting in a queue.
    pub queued: u64,
    pub connections: u64,
}

#[derive(Default)]
struct Counters {
    published: AtomicU64,
    delivered: AtomicU64,
    dropped: AtomicU64,
    connections: AtomicU64,
}

#[derive(Default)]
struct Queues {
    replies: VecDeque<Vec<u8>>,
    /// Pending state updates; ids are assigned when written.
    states: VecDeque<(f64, Arc<Vec<Pose>>)>,
    closed: bool,
}

struct Conn {
    queues: Mutex<Queues>,
    ready: Condvar,
    next_id: AtomicU64,
    stream: TcpStream,
}

impl Conn {
    fn lock(&self) -> MutexGuard<'_, Queues> {
        self.queues.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn next_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    fn reply(&self, message: Message) {
        let bytes = Envelope::new(self.next_id(), message).encode();
        let mut q = self.lock();
        q.replies.push_back(bytes);
        drop(q);
        self.ready.notify_one();
    }

    fn close(&self) {
        self.lock().closed = true;
        self.ready.notify_all();
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

struct Inner {
    backend: Arc<dyn BridgeBackend>,
    conns: Mutex<Vec<Arc<Conn>>>,
    counters: Counters,
    stop: AtomicBool,
}

impl Inner {
    fn conns(&self) -> MutexGuard<'_, Vec<Arc<Conn>>> {
        self.conns.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// TCP server publishing vehicle states and answering client requests.
///
/// Each connection has a reader thread that handles requests in arrival
/// order and a writer thread that sends replies before queued states.
/// [`publish`](Self::publish) never blocks on a client.
pub struct BridgeServer {
    inner: Arc<Inner>,
    addr: SocketAddr,
    accept: Option<JoinHandle<()>>,
}

impl BridgeServer {
    pub fn bind(addr: impl ToSocketAddrs, backend: Arc<dyn BridgeBackend>) -> Result<Self, SimError> {
        let listener = TcpListener::bind(addr)
            .map_err(|e| SimError::Argument(format!("cannot bind bridge endpoint: {e}")))?;
        let local = listener
            .local_addr()
            .map_err(|e| SimError::Argument(format!("cannot read bridge address: {e}")))?;
        listener
            .set_nonblocking(true)
            .map_err(|e| SimError::Argument(format!("cannot configure bridge socket: {e}")))?;
        let inner = Arc::new(Inner {
            backend,
            conns: Mutex::new(Vec::new()),
            counters: Counters::default(),
            stop: AtomicBool::new(false),
        });
        let accept_inner = Arc::clone(&inner);
        let accept = std::thread::Builder::new()
            .name("bridge-accept".into())
            .spawn(move || accept_loop(listener, accept_inner))
            .map_err(|e| SimError::Argument(format!("cannot start bridge thread: {e}")))?;
        Ok(Self {
            inner,
            addr: local,
            accept: Some(accept),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn client_count(&self) -> usize {
        self.inner.conns().len()
    }

    /// Queues a state update for every connected client.
    pub fn publish(&self, sim_time: f64, poses: Vec<Pose>) {
        let poses = Arc::new(poses);
        let c = &self.inner.counters;
        for conn in self.inner.conns().iter() {
            let mut q = conn.lock();
            if q.closed {
                continue;
            }
            c.published.fetch_add(1, Ordering::Relaxed);
            if q.states.len() == STATE_QUEUE_DEPTH {
                q.states.pop_front();
                c.dropped.fetch_add(1, Ordering::Relaxed);
            }
            q.states.push_back((sim_time, Arc::clone(&poses)));
            drop(q);
            conn.ready.notify_one();
        }
    }

    pub fn stats(&self) -> BridgeStats {
        let conns = self.inner.conns();
        let locks: Vec<_> = conns.iter().map(|c| c.lock()).collect();
        let c = &self.inner.counters;
        BridgeStats {
            published: c.published.load(Ordering::Relaxed),
            delivered: c.delivered.load(Ordering::Relaxed),
            dropped: c.dropped.load(Ordering::Relaxed),
            queued: locks.iter().map(|q| q.states.len() as u64).sum(),
            connections: c.connections.load(Ordering::Relaxed),
        }
    }

    /// Stops accepting, closes every connection and joins the accept thread.
    pub fn shutdown(&mut self) {
        self.inner.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        for conn in self.inner.conns().drain(..) {
            conn.close();
        }
    }
}

impl Drop for BridgeServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn accept_loop(listener: TcpListener, inner: Arc<Inner>) {
    while !inner.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                if let Err(e) = start_connection(stream, &inner) {
                    eprintln!("bridge: dropping connection: {e}");
                }
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL / 5),
            Err(_) => std::thread::sleep(POLL),
        }
    }
}

fn start_connection(stream: TcpStream, inner: &Arc<Inner>) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(POLL))?;
    let conn = Arc::new(Conn {
        queues: Mutex::new(Queues::default()),
        ready: Condvar::new(),
        next_id: AtomicU64::new(0),
        stream: stream.try_clone()?,
    });
    conn.reply(Message::Hello {
        version: PROTOCOL_VERSION,
    });
    let writer_stream = stream.try_clone()?;
    inner.counters.connections.fetch_add(1, Ordering::Relaxed);
    inner.conns().push(Arc::clone(&conn));
    let (w_conn, w_inner) = (Arc::clone(&conn), Arc::clone(inner));
    std::thread::Builder::new()
        .name("bridge-writer".into())
        .spawn(move || write_loop(writer_stream, &w_conn, &w_inner))?;
    let (r_conn, r_inner) = (Arc::clone(&conn), Arc::clone(inner));
    std::thread::Builder::new()
        .name("bridge-reader".into())
        .spawn(move || {
            read_loop(stream, &r_conn, &r_inner);
            r_conn.close();
            let lost = std::mem::take(&mut r_conn.lock().states).len() as u64;
            r_inner.counters.dropped.fetch_add(lost, Ordering::Relaxed);
            r_inner.conns().retain(|c| !Arc::ptr_eq(c, &r_conn));
        })?;
    Ok(())
}

fn write_loop(mut stream: TcpStream, conn: &Conn, inner: &Inner) {
    let mut frame = Vec::new();
    loop {
        let mut q = conn.lock();
        while !q.closed && q.replies.is_empty() && q.states.is_empty() {
            q = conn.ready.wait(q).unwrap_or_else(|e| e.into_inner());
        }
        if q.closed {
            return;
        }
        frame.clear();
        if let Some(bytes) = q.replies.pop_front() {
            drop(q);
            frame.extend_from_slice(&bytes);
        } else if let Some((sim_time, poses)) = q.states.pop_front() {
            inner.counters.delivered.fetch_add(1, Ordering::Relaxed);
            drop(q);
            let msg = Message::StateUpdate {
                sim_time,
                poses: poses.as_ref().clone(),
            };
            Envelope::new(conn.next_id(), msg).encode_into(&mut frame);
        }
        if stream.write_all(&frame).is_err() {
            conn.close();
            return;
        }
    }
}

fn read_loop(mut stream: TcpStream, conn: &Conn, inner: &Inner) {
    let mut decoder = FrameDecoder::new(MAX_REQUEST_PAYLOAD);
    let mut buf = vec![0u8; 16 * 1024];
    while !inner.stop.load(Ordering::SeqCst) && !conn.lock().closed {
        match stream.read(&mut buf) {
            Ok(0) => return,
            Ok(n) => decoder.push(&buf[..n]),
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {
                continue
            }
            Err(_) => return,
        }
        while let Some(frame) = decoder.next_frame() {
            match frame {
                Ok(env) => handle(env, conn, inner),
                Err(e) => conn.reply(Message::Error {
                    ref_id: e.ref_id,
                    reason: e.reason,
                }),
            }
        }
    }
}

fn handle(env: Envelope, conn: &Conn, inner: &Inner) {
    let ref_id = env.id;
    let error = |reason: String| Message::Error { ref_id, reason };
    match env.message {
        Message::Hello { version } if version == PROTOCOL_VERSION => conn.reply(Message::Ack { ref_id }),
        Message::Hello { version } => conn.reply(error(format!(
            "unsupported protocol version {version}; server speaks {PROTOCOL_VERSION}"
        ))),
        Message::Configure(req) => match inner.backend.configure(&req) {
            Ok(()) => {
                let bytes = Envelope::new(conn.next_id(), Message::Ack { ref_id }).encode();
                let mut q = conn.lock();
                let stale = q.states.len() as u64;
                q.states.clear();
                inner.counters.dropped.fetch_add(stale, Ordering::Relaxed);
                q.replies.push_back(bytes);
                drop(q);
                conn.ready.notify_one();
            }
            Err(reason) => conn.reply(error(reason)),
        },
        Message::PointCloudRequest { bounds, resolution } => {
            match inner.backend.point_cloud(&bounds, resolution) {
                Ok(cloud) => {
                    let bytes = ply::encode(&cloud);
                    let total = bytes.len().div_ceil(CHUNK_SIZE).max(1) as u32;
                    for (index, part) in bytes.chunks(CHUNK_SIZE).enumerate() {
                        conn.reply(Message::PointCloudChunk {
                            ref_id,
                            index: index as u32,
                            total,
                            payload: part.to_vec(),
                        });
                    }
                }
                Err(reason) => conn.reply(error(reason)),
            }
        }
        other => conn.reply(error(format!("unexpected message tag {} from client", other.tag()))),
    }
}
