//! Bit-string helpers. Bit strings are `Vec<bool>` and integers are packed
//! most-significant bit first.

pub type Bits = Vec<bool>;

/// Appends the low `width` bits of `value`, most significant first.
pub fn push_uint(out: &mut Bits, value: u64, width: u32) {
    debug_assert!(width == 64 || value >> width == 0, "{value} does not fit in {width} bits");
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

pub fn from_uint(value: u64, width: u32) -> Bits {
    let mut out = Vec::with_capacity(width as usize);
    push_uint(&mut out, value, width);
    out
}

/// Reads up to 64 bits as an unsigned integer, most significant first.
pub fn to_uint(bits: &[bool]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

/// Number of bits needed to write any value in `0..=max` (at least 1).
pub fn width_for(max: u64) -> u32 {
    (64 - max.leading_zeros()).max(1)
}

/// ⌈log₂ x⌉ for x ≥ 1.
pub fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1, "ceil_log2 of zero");
    64 - (x - 1).leading_zeros()
}

pub fn hamming(a: &[bool], b: &[bool]) -> usize {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Hex rendering with the bit string left-aligned and zero-padded to a nibble.
pub fn to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|c| {
            let mut v = 0u8;
            for (i, &b) in c.iter().enumerate() {
                if b {
                    v |= 8 >> i;
                }
            }
            char::from_digit(v as u32, 16).unwrap()
        })
        .collect()
}

/// Parses hex produced by [`to_hex`], keeping exactly `len` bits.
pub fn from_hex(hex: &str, len: usize) -> Option<Bits> {
    let mut out = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let v = c.to_digit(16)?;
        for i in (0..4).rev() {
            out.push((v >> i) & 1 == 1);
        }
    }
    if out.len() < len || out[len..].iter().any(|&b| b) {
        return None;
    }
    out.truncate(len);
    Some(out)
}

pub fn to_string01(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn from_str01(s: &str) -> Option<Bits> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logs_and_widths() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(4096), 12);
        assert_eq!(ceil_log2(4097), 13);
        assert_eq!(width_for(0), 1);
        assert_eq!(width_for(255), 8);
        assert_eq!(width_for(256), 9);
    }

    proptest! {
        #[test]
        fn uint_roundtrip(v in any::<u64>(), extra in 0u32..8) {
            let w = (width_for(v) + extra).min(64);
            prop_assert_eq!(to_uint(&from_uint(v, w)), v);
        }

        #[test]
        fn hex_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            prop_assert_eq!(from_hex(&to_hex(&bits), bits.len()), Some(bits.clone()));
        }
    }
}
