//! `LWDS` version 1 dataset files.
//!
//! ```text
//! "LWDS" | u8 version=1 | u64 n | u64 C | u64 L | u64 K
//! K x (u32 byte length, UTF-8 class name)
//! n x u32 label index
//! n*C*L x f64 (sample-major, channel-major, time-minor)
//! ```
//! All integers and reals are little-endian. The dataset name is not stored.

use crate::error::{Error, Result};
use crate::io::bytes::{ByteReader, PutLe};
use crate::io::TimeSeriesDataset;

pub const MAGIC: &[u8; 4] = b"LWDS";
pub const VERSION: u8 = 1;

pub fn write_binary_dataset(ds: &TimeSeriesDataset) -> Result<Vec<u8>> {
    let labels = ds.require_labels()?;
    let names_len: usize = ds.class_names().iter().map(|s| 4 + s.len()).sum();
    let mut out = Vec::with_capacity(37 + names_len + 4 * labels.len() + 8 * ds.values().len());
    out.extend_from_slice(MAGIC);
    out.put_u8(VERSION);
    out.put_u64(ds.n_samples() as u64);
    out.put_u64(ds.n_channels() as u64);
    out.put_u64(ds.series_length() as u64);
    out.put_u64(ds.n_classes() as u64);
    for name in ds.class_names() {
        out.put_str(name);
    }
    for &y in labels {
        out.put_u32(y as u32);
    }
    for &v in ds.values() {
        out.put_f64(v);
    }
    Ok(out)
}

pub fn read_binary_dataset(bytes: &[u8]) -> Result<TimeSeriesDataset> {
    let mut r = ByteReader::new(bytes);
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    r.take(4)?;
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version.into()));
    }
    let n = r.len()?;
    let c = r.len()?;
    let l = r.len()?;
    let k = r.len()?;
    let total = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(l))
        .filter(|&v| v.checked_mul(8).is_some_and(|b| b <= r.remaining()))
        .ok_or_else(|| Error::Format(format!("truncated payload for {n}x{c}x{l} dataset")))?;
    let mut class_names = Vec::with_capacity(k.min(r.remaining()));
    for _ in 0..k {
        class_names.push(r.str()?);
    }
    let mut labels = Vec::with_capacity(n.min(r.remaining() / 4));
    for _ in 0..n {
        let y = r.u32()? as usize;
        if y >= k {
            return Err(Error::Format(format!("label index {y} >= class count {k}")));
        }
        labels.push(y);
    }
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        values.push(r.f64()?);
    }
    r.finish()?;
    TimeSeriesDataset::new("", (n, c, l), values, Some(labels), class_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_has_documented_length() {
        let ds = TimeSeriesDataset::new("m", (1, 1, 2), vec![0.5, -1.5], Some(vec![0]), vec!["x".into()])
            .unwrap();
        let bytes = write_binary_dataset(&ds).unwrap();
        // magic + version + four u64 + (u32 prefix + "x") + one label + two reals
        assert_eq!(bytes.len(), 4 + 1 + 32 + (4 + 1) + 4 + 16);
        let back = read_binary_dataset(&bytes).unwrap();
        assert_eq!(back.values(), ds.values());
        assert_eq!(back.labels(), ds.labels());
    }

    #[test]
    fn bad_magic_and_truncation() {
        let err = read_binary_dataset(b"XXXX\x01").unwrap_err();
        assert_eq!(err.to_string(), "bad magic");
        let ds = TimeSeriesDataset::new("m", (1, 1, 2), vec![0.5, -1.5], Some(vec![0]), vec!["x".into()])
            .unwrap();
        let bytes = write_binary_dataset(&ds).unwrap();
        for cut in [5, 20, 40, bytes.len() - 1] {
            let err = read_binary_dataset(&bytes[..cut]).unwrap_err();
            assert!(err.to_string().contains("truncated"), "{cut}: {err}");
        }
    }

    #[test]
    fn label_out_of_range() {
        let ds = TimeSeriesDataset::new("m", (1, 1, 2), vec![0.5, -1.5], Some(vec![0]), vec!["x".into()])
            .unwrap();
        let mut bytes = write_binary_dataset(&ds).unwrap();
        let label_at = 4 + 1 + 32 + 5;
        bytes[label_at] = 3;
        let err = read_binary_dataset(&bytes).unwrap_err();
        assert!(err.to_string().contains("label index 3"));
    }

    #[test]
    fn unlabelled_dataset_cannot_be_written() {
        let ds = TimeSeriesDataset::new("u", (1, 1, 2), vec![0.0, 1.0], None, vec![]).unwrap();
        assert!(matches!(write_binary_dataset(&ds), Err(Error::LabelsRequired)));
    }
}
