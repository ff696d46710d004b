//! Framed coordinator/worker messages.
//!
//! Frame: `u8 tag | u32 payload length (LE) | payload`. Payloads use the same
//! little-endian conventions as the `LWDS` dataset file:
//!
//! | tag | message  | payload |
//! |-----|----------|---------|
//! | 1   | HELLO    | u32 worker id |
//! | 2   | ASSIGN   | see [`WorkerAssignment`] encoding below |
//! | 3   | RESULT   | u32 worker id, u64 count, u64 rows, count x (descriptor, f64 score, rows x f64) |
//! | 4   | SELECTED | u64 count, count x descriptor |
//! | 5   | DONE     | empty |
//! | 6   | ERROR    | u32 length + UTF-8 message |
//!
//! A descriptor is `u64 channel, u8 kernel, u8 dilation exponent, u8 level, u8 stat`.
//!
//! ASSIGN: `u32 worker id, u64 channel start, u64 channel end, u64 class count,
//! u64 rows, rows x u64 sample index, rows x u32 label`, then the config echo
//! `u8 variant (1=L1, 2=L2, 3=L1L2), u64 final features, u64 pool size,
//! u64 max train samples, u64 seed, u32 worker count, u8 normalize,
//! u64 alpha count, alphas x f64, u32 length + UTF-8 dataset path`.

use std::io::{ErrorKind, Read, Write};
use std::ops::Range;
use std::path::PathBuf;

use crate::distrib::{TrainConfig, WorkerAssignment};
use crate::error::{Error, Result};
use crate::io::bytes::{ByteReader, PutLe};
use crate::scattering::{FeatureDescriptor, Level, Stat, Variant};
use crate::selection::ScoredFeature;

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello { worker_id: u32 },
    Assign(WorkerAssignment),
    Result { worker_id: u32, features: Vec<ScoredFeature> },
    Selected(Vec<FeatureDescriptor>),
    Done,
    Error(String),
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Hello { .. } => 1,
            Message::Assign(_) => 2,
            Message::Result { .. } => 3,
            Message::Selected(_) => 4,
            Message::Done => 5,
            Message::Error(_) => 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "HELLO",
            Message::Assign(_) => "ASSIGN",
            Message::Result { .. } => "RESULT",
            Message::Selected(_) => "SELECTED",
            Message::Done => "DONE",
            Message::Error(_) => "ERROR",
        }
    }

    /// Full frame including tag and length.
    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut p = Vec::new();
        match self {
            Message::Hello { worker_id } => p.put_u32(*worker_id),
            Message::Assign(a) => put_assignment(&mut p, a),
            Message::Result { worker_id, features } => {
                p.put_u32(*worker_id);
                p.put_u64(features.len() as u64);
                let rows = features.first().map_or(0, |f| f.values.len());
                if features.iter().any(|f| f.values.len() != rows) {
                    return Err(Error::protocol("RESULT value columns differ in length"));
                }
                p.put_u64(rows as u64);
                for f in features {
                    put_descriptor(&mut p, &f.descriptor);
                    p.put_f64(f.f_score);
                    for &v in &f.values {
                        p.put_f64(v);
                    }
                }
            }
            Message::Selected(ds) => {
                p.put_u64(ds.len() as u64);
                for d in ds {
                    put_descriptor(&mut p, d);
                }
            }
            Message::Done => {}
            Message::Error(msg) => p.put_str(msg),
        }
        let len = u32::try_from(p.len())
            .map_err(|_| Error::protocol(format!("{} payload of {} bytes too large", self.name(), p.len())))?;
        let mut frame = Vec::with_capacity(5 + p.len());
        frame.push(self.tag());
        frame.put_u32(len);
        frame.extend_from_slice(&p);
        Ok(frame)
    }

    /// Any malformed payload is reported as a protocol error.
    pub fn decode(tag: u8, payload: &[u8]) -> Result<Self> {
        Self::decode_payload(tag, payload).map_err(|e| match e {
            Error::Protocol(_) => e,
            other => Error::protocol(format!("malformed {}: {other}", tag_name(tag))),
        })
    }

    fn decode_payload(tag: u8, payload: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(payload);
        let msg = match tag {
            1 => Message::Hello { worker_id: r.u32()? },
            2 => Message::Assign(get_assignment(&mut r)?),
            3 => {
                let worker_id = r.u32()?;
                let count = r.len()?;
                let rows = r.len()?;
                let mut features = Vec::with_capacity(count.min(r.remaining()));
                for _ in 0..count {
                    let descriptor = get_descriptor(&mut r)?;
                    let f_score = r.f64()?;
                    let mut values = Vec::with_capacity(rows.min(r.remaining() / 8));
                    for _ in 0..rows {
                        values.push(r.f64()?);
                    }
                    features.push(ScoredFeature {
                        descriptor,
                        f_score,
                        values,
                    });
                }
                Message::Result { worker_id, features }
            }
            4 => {
                let count = r.len()?;
                let mut ds = Vec::with_capacity(count.min(r.remaining()));
                for _ in 0..count {
                    ds.push(get_descriptor(&mut r)?);
                }
                Message::Selected(ds)
            }
            5 => Message::Done,
            6 => Message::Error(r.str()?),
            other => return Err(Error::protocol(format!("unknown message tag {other}"))),
        };
        r.finish()?;
        Ok(msg)
    }
}

fn tag_name(tag: u8) -> &'static str {
    match tag {
        1 => "HELLO",
        2 => "ASSIGN",
        3 => "RESULT",
        4 => "SELECTED",
        5 => "DONE",
        6 => "ERROR",
        _ => "frame",
    }
}

fn put_descriptor(p: &mut Vec<u8>, d: &FeatureDescriptor) {
    p.put_u64(d.channel as u64);
    p.put_u8(d.kernel);
    p.put_u8(d.dilation_exp);
    p.put_u8(d.level.into());
    p.put_u8(d.stat.index() as u8);
}

fn get_descriptor(r: &mut ByteReader<'_>) -> Result<FeatureDescriptor> {
    let channel = r.len()?;
    let kernel = r.u8()?;
    let dilation_exp = r.u8()?;
    let level = Level::try_from(r.u8()?).map_err(Error::protocol)?;
    let stat = Stat::from_index(r.u8()? as usize).ok_or_else(|| Error::protocol("bad stat code"))?;
    let d = FeatureDescriptor {
        channel,
        kernel,
        dilation_exp,
        level,
        stat,
    };
    d.validate().map_err(|e| Error::protocol(e.to_string()))?;
    Ok(d)
}

fn put_assignment(p: &mut Vec<u8>, a: &WorkerAssignment) {
    p.put_u32(a.worker_id);
    p.put_u64(a.channel_range.start as u64);
    p.put_u64(a.channel_range.end as u64);
    p.put_u64(a.n_classes as u64);
    p.put_u64(a.sample_indices.len() as u64);
    for &i in &a.sample_indices {
        p.put_u64(i as u64);
    }
    for &y in &a.labels {
        p.put_u32(y as u32);
    }
    let c = &a.config;
    p.put_u8(c.variant.code());
    p.put_u64(c.final_features as u64);
    p.put_u64(c.pool_size as u64);
    p.put_u64(c.max_train_samples as u64);
    p.put_u64(c.seed);
    p.put_u32(c.worker_count as u32);
    p.put_u8(c.normalize as u8);
    p.put_u64(c.alpha_grid.len() as u64);
    for &alpha in &c.alpha_grid {
        p.put_f64(alpha);
    }
    p.put_str(&c.dataset_path.to_string_lossy());
}

fn get_assignment(r: &mut ByteReader<'_>) -> Result<WorkerAssignment> {
    let worker_id = r.u32()?;
    let channel_range: Range<usize> = r.len()?..r.len()?;
    let n_classes = r.len()?;
    let rows = r.len()?;
    let mut sample_indices = Vec::with_capacity(rows.min(r.remaining() / 8));
    for _ in 0..rows {
        sample_indices.push(r.len()?);
    }
    let mut labels = Vec::with_capacity(rows.min(r.remaining() / 4));
    for _ in 0..rows {
        labels.push(r.u32()? as usize);
    }
    let variant = Variant::from_code(r.u8()?).ok_or_else(|| Error::protocol("bad variant code"))?;
    let final_features = r.len()?;
    let pool_size = r.len()?;
    let max_train_samples = r.len()?;
    let seed = r.u64()?;
    let worker_count = r.u32()? as usize;
    let normalize = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::protocol(format!("bad normalize flag {other}"))),
    };
    let n_alpha = r.len()?;
    let mut alpha_grid = Vec::with_capacity(n_alpha.min(r.remaining() / 8));
    for _ in 0..n_alpha {
        alpha_grid.push(r.f64()?);
    }
    let dataset_path = PathBuf::from(r.str()?);
    Ok(WorkerAssignment {
        worker_id,
        channel_range,
        sample_indices,
        labels,
        n_classes,
        config: TrainConfig {
            variant,
            final_features,
            pool_size,
            max_train_samples,
            seed,
            alpha_grid,
            dataset_path,
            worker_count,
            normalize,
        },
    })
}

pub fn write_message<W: Write + ?Sized>(w: &mut W, msg: &Message) -> Result<()> {
    w.write_all(&msg.encode()?)?;
    w.flush()?;
    Ok(())
}

pub fn read_message<R: Read + ?Sized>(r: &mut R) -> Result<Message> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::protocol("connection closed"),
        _ => Error::Io(e),
    })?;
    let len = u32::from_le_bytes([head[1], head[2], head[3], head[4]]) as usize;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::protocol("truncated frame"),
        _ => Error::Io(e),
    })?;
    Message::decode(head[0], &payload)
}
