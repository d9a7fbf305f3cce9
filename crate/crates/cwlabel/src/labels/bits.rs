//! Packed wire format for labels.
//!
//! Bits are written LSB-first into each byte. Layout: an 8-bit label
//! budget `k`, a 16-bit mask width `w`, an 8-bit level count, then per
//! level a 4-bit rank (values 0 and 15 are reserved), `k` adjacency bits
//! (bit `λ-1` for label `λ`), and `rank - 1` checkpoint fields of
//! `ceil(log2 k)` bits each storing `value - 1`; then `w` mask bits and
//! zero padding up to the final byte boundary.

use super::{ceil_log2, Label, LabelBitSet, LevelRecord};
use crate::kexpr::{Mask, MAX_LABEL};

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum UnpackError {
    #[error("payload ends early: needed {needed} bits, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("label budget k = 0")]
    ZeroWidth,
    #[error("level {0} uses reserved rank value {1}")]
    BadRank(usize, u8),
    #[error("level {level} checkpoint {index} holds {value}, budget is k = {k}")]
    CheckpointValue { level: usize, index: usize, value: u16, k: u16 },
    #[error("{0} trailing byte(s) after the payload")]
    TrailingData(usize),
    #[error("padding bits in the final byte are not zero")]
    NonzeroPadding,
}

struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    fn new() -> BitWriter {
        BitWriter { bytes: Vec::new(), bit_len: 0 }
    }

    /// Appends the low `bits` bits of `value`, least significant first.
    fn write(&mut self, value: u64, bits: usize) {
        debug_assert!(bits <= 64);
        debug_assert!(bits == 64 || value >> bits == 0);
        for i in 0..bits {
            if self.bit_len.is_multiple_of(8) {
                self.bytes.push(0);
            }
            self.bytes[self.bit_len / 8] |= ((value >> i & 1) as u8) << (self.bit_len % 8);
            self.bit_len += 1;
        }
    }

    fn bit_len(&self) -> usize {
        self.bit_len
    }

    fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> BitReader<'a> {
        BitReader { bytes, pos: 0 }
    }

    fn read(&mut self, bits: usize) -> Result<u64, UnpackError> {
        let have = self.bytes.len() * 8;
        if self.pos + bits > have {
            return Err(UnpackError::Truncated { needed: self.pos + bits, have });
        }
        let mut out = 0u64;
        for i in 0..bits {
            let bit = self.bytes[self.pos / 8] >> (self.pos % 8) & 1;
            out |= (bit as u64) << i;
            self.pos += 1;
        }
        Ok(out)
    }

    fn pos(&self) -> usize {
        self.pos
    }
}

/// Exact packed size of a label in bits (padding excluded).
pub fn packed_bit_len(label: &Label) -> usize {
    let cw = ceil_log2(label.k);
    let levels: usize = label
        .levels
        .iter()
        .map(|r| 4 + label.k as usize + (r.rank as usize - 1) * cw)
        .sum();
    32 + levels + label.mask.width() as usize
}

/// Serializes a label. Panics on values the format cannot carry (rank
/// outside `1..=14`, checkpoint outside `1..=k`, more than 255 levels).
pub fn pack(label: &Label) -> Vec<u8> {
    assert!(label.k >= 1 && label.k <= MAX_LABEL);
    assert!(label.levels.len() <= u8::MAX as usize);
    let cw = ceil_log2(label.k);
    let mut w = BitWriter::new();
    w.write(label.k as u64, 8);
    w.write(label.mask.width() as u64, 16);
    w.write(label.levels.len() as u64, 8);
    for rec in &label.levels {
        assert!(rec.rank >= 1 && rec.rank <= 14, "rank {} unrepresentable", rec.rank);
        assert_eq!(rec.checkpoints.len(), rec.rank as usize - 1);
        w.write(rec.rank as u64, 4);
        for lambda in 1..=label.k {
            w.write(rec.adjacency.contains(lambda) as u64, 1);
        }
        for &cp in &rec.checkpoints {
            assert!(cp >= 1 && cp <= label.k, "checkpoint {cp} outside 1..={}", label.k);
            w.write((cp - 1) as u64, cw);
        }
    }
    for t in 1..=label.mask.width() {
        w.write(label.mask.bit(t) as u64, 1);
    }
    debug_assert_eq!(w.bit_len(), packed_bit_len(label));
    w.finish()
}

/// Deserializes a packed label, rejecting any malformed payload:
/// truncation, reserved field values, out-of-range checkpoints, trailing
/// bytes, and nonzero padding.
pub fn unpack(bytes: &[u8]) -> Result<Label, UnpackError> {
    let mut r = BitReader::new(bytes);
    let k = r.read(8)? as u16;
    if k == 0 {
        return Err(UnpackError::ZeroWidth);
    }
    let mask_width = r.read(16)? as u16;
    let level_count = r.read(8)? as usize;
    let cw = ceil_log2(k);
    let mut levels = Vec::with_capacity(level_count);
    for level in 0..level_count {
        let rank = r.read(4)? as u16;
        if rank == 0 || rank == 15 {
            return Err(UnpackError::BadRank(level, rank as u8));
        }
        let mut adjacency = LabelBitSet::empty();
        for lambda in 1..=k {
            if r.read(1)? == 1 {
                adjacency.insert(lambda);
            }
        }
        let mut checkpoints = Vec::with_capacity(rank as usize - 1);
        for index in 0..rank as usize - 1 {
            let field = r.read(cw)? as u16;
            if field >= k {
                return Err(UnpackError::CheckpointValue { level, index, value: field + 1, k });
            }
            checkpoints.push(field + 1);
        }
        levels.push(LevelRecord { rank, adjacency, checkpoints });
    }
    let mut mask = Mask::zeros(mask_width);
    for t in 1..=mask_width {
        if r.read(1)? == 1 {
            mask.set_bit(t);
        }
    }
    let used_bytes = r.pos().div_ceil(8);
    if bytes.len() > used_bytes {
        return Err(UnpackError::TrailingData(bytes.len() - used_bytes));
    }
    let mut pad = r.pos();
    while !pad.is_multiple_of(8) {
        if bytes[pad / 8] >> (pad % 8) & 1 == 1 {
            return Err(UnpackError::NonzeroPadding);
        }
        pad += 1;
    }
    Ok(Label { k, levels, mask })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Label {
        Label {
            k: 3,
            levels: vec![LevelRecord {
                rank: 1,
                adjacency: LabelBitSet::from_iter([1]),
                checkpoints: vec![],
            }],
            mask: Mask::zeros(0),
        }
    }

    #[test]
    fn golden_bytes() {
        // 8 bits k=3; 16 bits w=0; 8 bits L=1; 4 bits rank=1; 3 chat bits
        // 100; one pad bit.
        assert_eq!(pack(&minimal()), vec![3, 0, 0, 1, 17]);
        assert_eq!(packed_bit_len(&minimal()), 39);
    }

    #[test]
    fn round_trip_minimal() {
        let label = minimal();
        assert_eq!(unpack(&pack(&label)).unwrap(), label);
    }

    #[test]
    fn round_trip_multi_level_with_mask() {
        let label = Label {
            k: 5,
            levels: vec![
                LevelRecord {
                    rank: 3,
                    adjacency: LabelBitSet::from_iter([2, 5]),
                    checkpoints: vec![4, 1],
                },
                LevelRecord {
                    rank: 14,
                    adjacency: LabelBitSet::empty(),
                    checkpoints: vec![5; 13],
                },
            ],
            mask: Mask::from_bit_str("10110000011").unwrap(),
        };
        assert_eq!(unpack(&pack(&label)).unwrap(), label);
    }

    #[test]
    fn round_trip_wide_budget_crosses_bytes() {
        // k = 200 gives 8-bit checkpoint fields and a 200-bit chat block,
        // so every field straddles byte boundaries somewhere.
        let label = Label {
            k: 200,
            levels: vec![LevelRecord {
                rank: 3,
                adjacency: LabelBitSet::from_iter([1, 64, 65, 128, 200]),
                checkpoints: vec![200, 1],
            }],
            mask: Mask::zeros(0),
        };
        assert_eq!(unpack(&pack(&label)).unwrap(), label);
    }

    #[test]
    fn round_trip_unit_budget_has_empty_checkpoint_fields() {
        // ceil(log2 1) = 0: checkpoints occupy no bits and read back as 1.
        let label = Label {
            k: 1,
            levels: vec![LevelRecord {
                rank: 2,
                adjacency: LabelBitSet::empty(),
                checkpoints: vec![1],
            }],
            mask: Mask::zeros(0),
        };
        assert_eq!(unpack(&pack(&label)).unwrap(), label);
    }

    #[test]
    fn rejects_zero_budget() {
        assert_eq!(unpack(&[0, 0, 0, 0]), Err(UnpackError::ZeroWidth));
    }

    #[test]
    fn rejects_reserved_ranks() {
        // k=1, w=0, one level; rank field 0, then 15.
        assert_eq!(unpack(&[1, 0, 0, 1, 0]), Err(UnpackError::BadRank(0, 0)));
        assert_eq!(unpack(&[1, 0, 0, 1, 15]), Err(UnpackError::BadRank(0, 15)));
    }

    #[test]
    fn rejects_checkpoint_field_beyond_budget() {
        // k=3, rank 2, empty chat, checkpoint field 3 (value 4) with k=3.
        let bytes = vec![3, 0, 0, 1, 0b1000_0010, 0b0000_0001];
        assert_eq!(
            unpack(&bytes),
            Err(UnpackError::CheckpointValue { level: 0, index: 0, value: 4, k: 3 })
        );
    }

    #[test]
    fn rejects_truncation() {
        let mut bytes = pack(&minimal());
        bytes.pop();
        assert_eq!(unpack(&bytes), Err(UnpackError::Truncated { needed: 36, have: 32 }));
        assert!(matches!(unpack(&[]), Err(UnpackError::Truncated { .. })));
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = pack(&minimal());
        bytes.extend([0, 0]);
        assert_eq!(unpack(&bytes), Err(UnpackError::TrailingData(2)));
    }

    #[test]
    fn rejects_nonzero_padding() {
        let mut bytes = pack(&minimal());
        *bytes.last_mut().unwrap() |= 0b1000_0000;
        assert_eq!(unpack(&bytes), Err(UnpackError::NonzeroPadding));
    }

    #[test]
    fn zero_level_label_is_header_only() {
        let label = Label { k: 7, levels: vec![], mask: Mask::zeros(0) };
        let bytes = pack(&label);
        assert_eq!(bytes, vec![7, 0, 0, 0]);
        assert_eq!(unpack(&bytes).unwrap(), label);
    }
}
