//! Wire format.
//!
//! A frame is a little-endian `u32` payload length, a one-byte message tag
//! and the payload. Every payload starts with the sender's `u64` message id,
//! which increases monotonically per connection. All numbers are
//! little-endian; `f64` values are IEEE-754 bits.
//!
//! | tag | message           | payload after the id                                   |
//! |-----|-------------------|--------------------------------------------------------|
//! | 0   | Hello             | `u16` protocol version                                 |
//! | 1   | StateUpdate       | `f64` sim time, `u32` count, count × (`u32` env, 3 `f64` position, 4 `f64` quaternion w x y z) |
//! | 2   | Configure         | UTF-8 `key=value` lines: `n_envs`, `dt`, `params_digest` (16 hex digits) |
//! | 3   | PointCloudRequest | 6 `f64` bounds (min xyz, max xyz), `f64` resolution   |
//! | 4   | PointCloudChunk   | `u64` ref id, `u32` index, `u32` total, chunk bytes    |
//! | 5   | Ack               | `u64` ref id                                           |
//! | 6   | Error             | `u64` ref id, UTF-8 reason                             |

use flightcore::world::Aabb;
use flightcore::{Quaternion, Vector3};

pub const PROTOCOL_VERSION: u16 = 1;
/// Frame prefix: length plus tag.
pub const HEADER_LEN: usize = 5;
/// Bytes of one pose inside a StateUpdate.
pub const POSE_LEN: usize = 4 + 7 * 8;
pub const FRAME_LENGTH_MISMATCH: &str = "frame length mismatch";

pub const TAG_HELLO: u8 = 0;
pub const TAG_STATE_UPDATE: u8 = 1;
pub const TAG_CONFIGURE: u8 = 2;
pub const TAG_POINT_CLOUD_REQUEST: u8 = 3;
pub const TAG_POINT_CLOUD_CHUNK: u8 = 4;
pub const TAG_ACK: u8 = 5;
pub const TAG_ERROR: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub env_id: u32,
    pub position: Vector3<f64>,
    pub orientation: Quaternion<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigureRequest {
    pub n_envs: usize,
    pub dt: f64,
    pub params_digest: u64,
}

impl ConfigureRequest {
    pub fn to_text(&self) -> String {
        format!(
            "n_envs={}\ndt={}\nparams_digest={:016x}\n",
            self.n_envs, self.dt, self.params_digest
        )
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let (mut n_envs, mut dt, mut digest) = (None, None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("configure line `{line}` has no `=`"))?;
            let (k, v) = (k.trim(), v.trim());
            let slot_err = || format!("bad configure value for `{k}`");
            match k {
                "n_envs" if n_envs.is_none() => n_envs = Some(v.parse::<usize>().map_err(|_| slot_err())?),
                "dt" if dt.is_none() => dt = Some(v.parse::<f64>().map_err(|_| slot_err())?),
                "params_digest" if digest.is_none() => {
                    if v.len() != 16 {
                        return Err(slot_err());
                    }
                    digest = Some(u64::from_str_radix(v, 16).map_err(|_| slot_err())?);
                }
                "n_envs" | "dt" | "params_digest" => return Err(format!("duplicate configure key `{k}`")),
                _ => return Err(format!("unknown configure key `{k}`")),
            }
        }
        let req = Self {
            n_envs: n_envs.ok_or("configure is missing n_envs")?,
            dt: dt.ok_or("configure is missing dt")?,
            params_digest: digest.ok_or("configure is missing params_digest")?,
        };
        if req.n_envs == 0 || req.n_envs > u32::MAX as usize {
            return Err("n_envs out of range".into());
        }
        if !(req.dt.is_finite() && req.dt > 0.0) {
            return Err("dt must be finite and > 0".into());
        }
        Ok(req)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello { version: u16 },
    StateUpdate { sim_time: f64, poses: Vec<Pose> },
    Configure(ConfigureRequest),
    PointCloudRequest { bounds: Aabb, resolution: f64 },
    PointCloudChunk { ref_id: u64, index: u32, total: u32, payload: Vec<u8> },
    Ack { ref_id: u64 },
    Error { ref_id: u64, reason: String },
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Hello { .. } => TAG_HELLO,
            Message::StateUpdate { .. } => TAG_STATE_UPDATE,
            Message::Configure(_) => TAG_CONFIGURE,
            Message::PointCloudRequest { .. } => TAG_POINT_CLOUD_REQUEST,
            Message::PointCloudChunk { .. } => TAG_POINT_CLOUD_CHUNK,
            Message::Ack { .. } => TAG_ACK,
            Message::Error { .. } => TAG_ERROR,
        }
    }
}

/// A message with its sender-assigned id.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub id: u64,
    pub message: Message,
}

impl Envelope {
    pub fn new(id: u64, message: Message) -> Self {
        Self { id, message }
    }

    /// Appends the complete frame to `out`.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(&[0; HEADER_LEN]);
        out[start + 4] = self.message.tag();
        out.extend_from_slice(&self.id.to_le_bytes());
        match &self.message {
            Message::Hello { version } => out.extend_from_slice(&version.to_le_bytes()),
            Message::StateUpdate { sim_time, poses } => {
                out.extend_from_slice(&sim_time.to_le_bytes());
                out.extend_from_slice(&(poses.len() as u32).to_le_bytes());
                out.reserve(poses.len() * POSE_LEN);
                for p in poses {
                    out.extend_from_slice(&p.env_id.to_le_bytes());
                    for v in p.position.iter() {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                    for v in [p.orientation.w, p.orientation.i, p.orientation.j, p.orientation.k] {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
            }
            Message::Configure(req) => out.extend_from_slice(req.to_text().as_bytes()),
            Message::PointCloudRequest { bounds, resolution } => {
                for v in bounds.min.iter().chain(bounds.max.iter()).chain([resolution]) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Message::PointCloudChunk {
                ref_id,
                index,
                total,
                payload,
            } => {
                out.extend_from_slice(&ref_id.to_le_bytes());
                out.extend_from_slice(&index.to_le_bytes());
                out.extend_from_slice(&total.to_le_bytes());
                out.extend_from_slice(payload);
            }
            Message::Ack { ref_id } => out.extend_from_slice(&ref_id.to_le_bytes()),
            Message::Error { ref_id, reason } => {
                out.extend_from_slice(&ref_id.to_le_bytes());
                out.extend_from_slice(reason.as_bytes());
            }
        }
        let len = (out.len() - start - HEADER_LEN) as u32;
        out[start..start + 4].copy_from_slice(&len.to_le_bytes());
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    /// Parses one frame body given its tag.
    pub fn decode(tag: u8, body: &[u8]) -> Result<Self, FrameError> {
        let mut r = Reader { buf: body };
        let id = r.u64().ok_or_else(FrameError::length)?;
        let bad = |reason: String| FrameError::new(id, reason);
        let message = match tag {
            TAG_HELLO => Message::Hello {
                version: r.u16().ok_or_else(|| FrameError::length_for(id))?,
            },
            TAG_STATE_UPDATE => {
                let sim_time = r.f64().ok_or_else(|| FrameError::length_for(id))?;
                let count = r.u32().ok_or_else(|| FrameError::length_for(id))? as usize;
                if r.buf.len() != count.saturating_mul(POSE_LEN) {
                    return Err(FrameError::length_for(id));
                }
                let poses = (0..count)
                    .map(|_| {
                        let env_id = r.u32().unwrap_or_default();
                        let mut v = [0.0; 7];
                        v.iter_mut().for_each(|x| *x = r.f64().unwrap_or_default());
                        Pose {
                            env_id,
                            position: Vector3::new(v[0], v[1], v[2]),
                            orientation: Quaternion::new(v[3], v[4], v[5], v[6]),
                        }
                    })
                    .collect();
                Message::StateUpdate { sim_time, poses }
            }
            TAG_CONFIGURE => {
                let text = std::str::from_utf8(r.rest()).map_err(|_| bad("configure text is not UTF-8".into()))?;
                Message::Configure(ConfigureRequest::parse(text).map_err(bad)?)
            }
            TAG_POINT_CLOUD_REQUEST => {
                let mut v = [0.0; 7];
                for x in &mut v {
                    *x = r.f64().ok_or_else(|| FrameError::length_for(id))?;
                }
                Message::PointCloudRequest {
                    bounds: Aabb::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5])),
                    resolution: v[6],
                }
            }
            TAG_POINT_CLOUD_CHUNK => {
                let (ref_id, index, total) = match (r.u64(), r.u32(), r.u32()) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(FrameError::length_for(id)),
                };
                if index >= total {
                    return Err(bad(format!("chunk index {index} out of range for total {total}")));
                }
                Message::PointCloudChunk {
                    ref_id,
                    index,
                    total,
                    payload: r.rest().to_vec(),
                }
            }
            TAG_ACK => Message::Ack {
                ref_id: r.u64().ok_or_else(|| FrameError::length_for(id))?,
            },
            TAG_ERROR => {
                let ref_id = r.u64().ok_or_else(|| FrameError::length_for(id))?;
                Message::Error {
                    ref_id,
                    reason: String::from_utf8_lossy(r.rest()).into_owned(),
                }
            }
            other => return Err(bad(format!("unknown message tag {other}"))),
        };
        if !r.buf.is_empty() {
            return Err(FrameError::length_for(id));
        }
        Ok(Envelope { id, message })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let (head, rest) = self.buf.split_first_chunk::<N>()?;
        self.buf = rest;
        Some(*head)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take().map(u16::from_le_bytes)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take().map(f64::from_le_bytes)
    }

    fn rest(&mut self) -> &'a [u8] {
        std::mem::take(&mut self.buf)
    }
}

/// A frame that could not be turned into a message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameError {
    /// Id of the offending message, or 0 when it could not be read.
    pub ref_id: u64,
    pub reason: String,
}

impl FrameError {
    fn new(ref_id: u64, reason: String) -> Self {
        Self { ref_id, reason }
    }

    fn length() -> Self {
        Self::length_for(0)
    }

    fn length_for(ref_id: u64) -> Self {
        Self::new(ref_id, FRAME_LENGTH_MISMATCH.into())
    }
}

/// Incremental frame splitter over a byte stream.
///
/// A length prefix above the limit cannot be trusted to find the next frame
/// boundary, so the buffered bytes are discarded and decoding restarts with
/// the next bytes pushed.
#[derive(Debug)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    max_payload: usize,
}

impl FrameDecoder {
    pub fn new(max_payload: usize) -> Self {
        Self {
            buf: Vec::new(),
            max_payload,
        }
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete frame, if any.
    pub fn next_frame(&mut self) -> Option<Result<Envelope, FrameError>> {
        let len = u32::from_le_bytes(*self.buf.first_chunk::<4>()?) as usize;
        if len > self.max_payload {
            self.buf.clear();
            return Some(Err(FrameError::length()));
        }
        if self.buf.len() < HEADER_LEN + len {
            return None;
        }
        let tag = self.buf[4];
        let out = Envelope::decode(tag, &self.buf[HEADER_LEN..HEADER_LEN + len]);
        self.buf.drain(..HEADER_LEN + len);
        Some(out)
    }
}
