//! RFC-1071 style 16-bit one's-complement checksum.

/// One's-complement sum over big-endian 16-bit words, odd tail zero-padded.
pub fn ones_complement_sum(bytes: &[u8]) -> u16 {
    let mut acc: u64 = 0;
    let mut chunks = bytes.chunks_exact(2);
    for w in &mut chunks {
        acc += u16::from_be_bytes([w[0], w[1]]) as u64;
    }
    if let [tail] = chunks.remainder() {
        acc += (*tail as u64) << 8;
    }
    while acc >> 16 != 0 {
        acc = (acc >> 16) + (acc & 0xffff);
    }
    acc as u16
}

/// Checksum to place in a packet: complement of the one's-complement sum
/// computed with the checksum field zeroed.
pub fn compute_checksum(bytes: &[u8]) -> u16 {
    !ones_complement_sum(bytes)
}

/// A buffer with its checksum inserted sums to 0xFFFF.
pub fn verifies(bytes: &[u8]) -> bool {
    ones_complement_sum(bytes) == 0xffff
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent bit-serial reference: fold one byte at a time into a
    /// 32-bit accumulator, then reduce.
    fn reference_checksum(bytes: &[u8]) -> u16 {
        let mut sum: u32 = 0;
        for (i, b) in bytes.iter().enumerate() {
            let shifted = if i % 2 == 0 { (*b as u32) << 8 } else { *b as u32 };
            sum = sum.wrapping_add(shifted);
        }
        while sum >> 16 != 0 {
            sum = (sum >> 16) + (sum & 0xffff);
        }
        !(sum as u16)
    }

    #[test]
    fn all_zero_bytes_give_ffff() {
        assert_eq!(compute_checksum(&[0u8; 8]), 0xffff);
    }

    #[test]
    fn matches_reference_implementation() {
        let cases: [&[u8]; 5] = [
            &[0x00, 0x00, 0xff, 0xff],
            &[0x12, 0x34, 0x56, 0x78, 0x9a],
            &[0xff; 11],
            &[0x01],
            &[0xde, 0xad, 0xbe, 0xef, 0x00, 0x01, 0x02],
        ];
        for case in cases {
            assert_eq!(compute_checksum(case), reference_checksum(case));
        }
    }

    #[test]
    fn inserting_checksum_makes_sum_ffff() {
        // defining property over pseudo-random buffers; the checksum slot
        // must sit on a 16-bit boundary, as it does in every real header
        let mut state: u64 = 0x243f6a8885a308d3;
        for len in 1..64usize {
            let prefix = len * 2;
            let mut buf: Vec<u8> = (0..prefix)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 33) as u8
                })
                .collect();
            buf.extend_from_slice(&[0, 0]);
            let c = compute_checksum(&buf);
            let pos = buf.len() - 2;
            buf[pos..].copy_from_slice(&c.to_be_bytes());
            assert!(verifies(&buf));
        }
    }
}
