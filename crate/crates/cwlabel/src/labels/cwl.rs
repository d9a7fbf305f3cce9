//! `.cwl` container: every packed label of one graph in a single file.
//!
//! Layout, all integers little-endian: the magic `CWL1`, `u16` label
//! budget, `u16` mask width, `u32` vertex count, then one record per
//! vertex in strictly ascending name order: `u16` name byte length, the
//! UTF-8 name, `u16` payload length in bits, and the payload bytes.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};

use super::{pack, packed_bit_len, unpack, Labeling, UnpackError};

const MAGIC: &[u8; 4] = b"CWL1";

#[derive(Debug, thiserror::Error)]
pub enum CwlError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a CWL1 file")]
    BadMagic,
    #[error("vertex name of {0} bytes does not fit the u16 length field")]
    NameTooLong(usize),
    #[error("label of vertex {vertex:?} packs to {bits} bits, over the u16 length field")]
    PayloadTooLong { vertex: String, bits: usize },
    #[error("{0} vertices do not fit the u32 count field")]
    TooManyVertices(usize),
    #[error("vertex name is not valid UTF-8")]
    BadName(#[source] std::string::FromUtf8Error),
    #[error("vertex names out of order: {prev:?} then {next:?}")]
    NamesOutOfOrder { prev: String, next: String },
    #[error("label of vertex {vertex:?} is malformed: {source}")]
    Label { vertex: String, source: UnpackError },
    #[error("label of vertex {vertex:?} disagrees with the file header")]
    HeaderMismatch { vertex: String },
    #[error("label of vertex {vertex:?} declares {stored} bits but holds {actual}")]
    BitLength { vertex: String, stored: u16, actual: usize },
    #[error("trailing data after the last record")]
    TrailingData,
}

pub fn write_cwl(labeling: &Labeling, mut out: impl Write) -> Result<(), CwlError> {
    let n = labeling.vertex_count();
    let n32 = u32::try_from(n).map_err(|_| CwlError::TooManyVertices(n))?;
    out.write_all(MAGIC)?;
    out.write_all(&labeling.k.to_le_bytes())?;
    out.write_all(&labeling.mask_width.to_le_bytes())?;
    out.write_all(&n32.to_le_bytes())?;
    for (name, label) in &labeling.labels {
        let name_len =
            u16::try_from(name.len()).map_err(|_| CwlError::NameTooLong(name.len()))?;
        let bits = packed_bit_len(label);
        let bits16 = u16::try_from(bits)
            .map_err(|_| CwlError::PayloadTooLong { vertex: name.clone(), bits })?;
        out.write_all(&name_len.to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&bits16.to_le_bytes())?;
        out.write_all(&pack(label))?;
    }
    Ok(())
}

fn read_array<const N: usize>(mut input: impl Read) -> Result<[u8; N], CwlError> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

/// Reads and fully validates a `.cwl` file: magic, name order, per-label
/// agreement with the file header, declared bit lengths, and absence of
/// trailing data.
pub fn read_cwl(mut input: impl Read) -> Result<Labeling, CwlError> {
    if read_array::<4>(&mut input)? != *MAGIC {
        return Err(CwlError::BadMagic);
    }
    let k = u16::from_le_bytes(read_array(&mut input)?);
    let mask_width = u16::from_le_bytes(read_array(&mut input)?);
    let n = u32::from_le_bytes(read_array(&mut input)?);
    let mut labels = BTreeMap::new();
    let mut prev: Option<String> = None;
    for _ in 0..n {
        let name_len = u16::from_le_bytes(read_array(&mut input)?) as usize;
        let mut name_buf = vec![0u8; name_len];
        input.read_exact(&mut name_buf)?;
        let name = String::from_utf8(name_buf).map_err(CwlError::BadName)?;
        if let Some(p) = prev {
            if p >= name {
                return Err(CwlError::NamesOutOfOrder { prev: p, next: name });
            }
        }
        let stored = u16::from_le_bytes(read_array(&mut input)?);
        let mut payload = vec![0u8; (stored as usize).div_ceil(8)];
        input.read_exact(&mut payload)?;
        let label = unpack(&payload)
            .map_err(|source| CwlError::Label { vertex: name.clone(), source })?;
        if label.k != k || label.mask.width() != mask_width {
            return Err(CwlError::HeaderMismatch { vertex: name });
        }
        let actual = packed_bit_len(&label);
        if actual != stored as usize {
            return Err(CwlError::BitLength { vertex: name, stored, actual });
        }
        prev = Some(name.clone());
        labels.insert(name, label);
    }
    if input.read(&mut [0u8])? != 0 {
        return Err(CwlError::TrailingData);
    }
    Ok(Labeling { k, mask_width, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kexpr::parse;
    use crate::labels::encode;
    use crate::testutil::REFERENCE7_KX;
    use crate::union_tree::UnionTree;

    fn reference_labeling() -> Labeling {
        let e = parse(REFERENCE7_KX).unwrap();
        encode(&UnionTree::from_kexpression(&e)).unwrap()
    }

    fn to_bytes(labeling: &Labeling) -> Vec<u8> {
        let mut buf = Vec::new();
        write_cwl(labeling, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip() {
        let labeling = reference_labeling();
        let buf = to_bytes(&labeling);
        assert_eq!(read_cwl(buf.as_slice()).unwrap(), labeling);
    }

    #[test]
    fn header_layout() {
        let buf = to_bytes(&reference_labeling());
        assert_eq!(&buf[..4], b"CWL1");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 3);
        assert_eq!(u16::from_le_bytes([buf[6], buf[7]]), 0);
        assert_eq!(u32::from_le_bytes([buf[8], buf[9], buf[10], buf[11]]), 7);
        // First record is vertex "a".
        assert_eq!(u16::from_le_bytes([buf[12], buf[13]]), 1);
        assert_eq!(buf[14], b'a');
    }

    #[test]
    fn writes_are_deterministic() {
        assert_eq!(to_bytes(&reference_labeling()), to_bytes(&reference_labeling()));
    }

    #[test]
    fn rejects_bad_magic() {
        let mut buf = to_bytes(&reference_labeling());
        buf[0] = b'X';
        assert!(matches!(read_cwl(buf.as_slice()), Err(CwlError::BadMagic)));
    }

    #[test]
    fn rejects_truncated_file() {
        let buf = to_bytes(&reference_labeling());
        let cut = &buf[..buf.len() - 1];
        assert!(matches!(read_cwl(cut), Err(CwlError::Io(_))));
    }

    #[test]
    fn rejects_trailing_data() {
        let mut buf = to_bytes(&reference_labeling());
        buf.push(0);
        assert!(matches!(read_cwl(buf.as_slice()), Err(CwlError::TrailingData)));
    }

    #[test]
    fn rejects_out_of_order_names() {
        let labeling = reference_labeling();
        let mut buf = Vec::new();
        buf.extend_from_slice(b"CWL1");
        buf.extend_from_slice(&labeling.k.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        for name in ["b", "a"] {
            let label = &labeling.labels[name];
            buf.extend_from_slice(&1u16.to_le_bytes());
            buf.push(name.as_bytes()[0]);
            buf.extend_from_slice(&(packed_bit_len(label) as u16).to_le_bytes());
            buf.extend_from_slice(&pack(label));
        }
        assert!(matches!(
            read_cwl(buf.as_slice()),
            Err(CwlError::NamesOutOfOrder { prev, next }) if prev == "b" && next == "a"
        ));
    }

    #[test]
    fn rejects_label_header_disagreement() {
        let labeling = reference_labeling();
        let mut buf = to_bytes(&labeling);
        // Bump the file-level k; every label still claims k = 3.
        buf[4] = 4;
        assert!(matches!(
            read_cwl(buf.as_slice()),
            Err(CwlError::HeaderMismatch { vertex }) if vertex == "a"
        ));
    }

    #[test]
    fn rejects_declared_bit_length_mismatch() {
        let labeling = reference_labeling();
        let mut buf = Vec::new();
        buf.extend_from_slice(b"CWL1");
        buf.extend_from_slice(&labeling.k.to_le_bytes());
        buf.extend_from_slice(&0u16.to_le_bytes());
        buf.extend_from_slice(&1u32.to_le_bytes());
        let label = &labeling.labels["a"];
        let bits = packed_bit_len(label);
        buf.extend_from_slice(&1u16.to_le_bytes());
        buf.push(b'a');
        // One bit short: same byte count, so the payload still unpacks.
        buf.extend_from_slice(&((bits - 1) as u16).to_le_bytes());
        buf.extend_from_slice(&pack(label));
        let stored_want = (bits - 1) as u16;
        assert!(matches!(
            read_cwl(buf.as_slice()),
            Err(CwlError::BitLength { vertex, stored, actual })
                if vertex == "a" && stored == stored_want && actual == bits
        ));
    }

    #[test]
    fn rejects_corrupt_payload() {
        let labeling = reference_labeling();
        let mut buf = to_bytes(&labeling);
        // Header is 12 bytes, then name length, "a", bit length: the first
        // payload byte sits at offset 17. Zeroing it makes k = 0.
        buf[17] = 0;
        assert!(matches!(
            read_cwl(buf.as_slice()),
            Err(CwlError::Label { source: UnpackError::ZeroWidth, .. })
        ));
    }

    #[test]
    fn rejects_oversized_name_on_write() {
        let mut labeling = reference_labeling();
        let label = labeling.labels["a"].clone();
        labeling.labels.insert("x".repeat(70_000), label);
        let err = write_cwl(&labeling, Vec::new()).unwrap_err();
        assert!(matches!(err, CwlError::NameTooLong(70_000)));
    }
}
