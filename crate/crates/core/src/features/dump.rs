//! Columnar feature dump: 16-byte header (magic, version, rows, cols, all
//! little-endian u32 after the magic) followed by row-major `f32` values.

use super::FeatureStream;
use crate::error::{Error, Result};

pub const DUMP_MAGIC: [u8; 4] = *b"FMPF";
pub const DUMP_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDump {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f32>,
}

pub fn encode_feature_dump(stream: &FeatureStream) -> Vec<u8> {
    let rows = stream.len();
    let mut out = Vec::with_capacity(16 + 4 * stream.data.len());
    out.extend_from_slice(&DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(stream.dim as u32).to_le_bytes());
    for v in &stream.data {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_feature_dump(bytes: &[u8]) -> Result<FeatureDump> {
    let bad = |msg: &str| Error::format(0, format!("feature dump: {msg}"));
    if bytes.len() < 16 {
        return Err(bad("truncated header"));
    }
    if bytes[..4] != DUMP_MAGIC {
        return Err(bad("bad magic"));
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let version = word(4);
    if version != DUMP_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("dimensions overflow"))?;
    let body = &bytes[16..];
    if body.len() != expected {
        return Err(bad(&format!(
            "body is {} bytes, header declares {expected}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(FeatureDump { rows, cols, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let s = FeatureStream::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        let bytes = encode_feature_dump(&s);
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(&bytes[..4], b"FMPF");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        let d = decode_feature_dump(&bytes).unwrap();
        assert_eq!((d.rows, d.cols), (2, 2));
        assert_eq!(d.values, vec![1.0, 2.0, 3.0, 4.5]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode_feature_dump(b"FMP").is_err());
        assert!(decode_feature_dump(b"XXXX\x01\0\0\0\0\0\0\0\0\0\0\0").is_err());
        let mut ok = encode_feature_dump(&FeatureStream::from_rows(&[vec![1.0]]).unwrap());
        ok.push(0);
        assert!(decode_feature_dump(&ok).is_err());
        let mut huge = b"FMPF\x01\0\0\0".to_vec();
        huge.extend_from_slice(&u32::MAX.to_le_bytes());
        huge.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_feature_dump(&huge).is_err());
    }
}
