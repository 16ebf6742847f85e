//! Keccak-256 as used by the EVM: the original Keccak submission with
//! 0x01 domain padding, not the NIST SHA-3 variant (0x06). Rate 1088 bits,
//! capacity 512, 24 rounds of Keccak-f[1600].

const ROUNDS: usize = 24;
const RATE: usize = 136;

const ROUND_CONSTANTS: [u64; ROUNDS] = [
    0x0000000000000001,
    0x0000000000008082,
    0x800000000000808a,
    0x8000000080008000,
    0x000000000000808b,
    0x0000000080000001,
    0x8000000080008081,
    0x8000000000008009,
    0x000000000000008a,
    0x0000000000000088,
    0x0000000080008009,
    0x000000008000000a,
    0x000000008000808b,
    0x800000000000008b,
    0x8000000000008089,
    0x8000000000008003,
    0x8000000000008002,
    0x8000000000000080,
    0x000000000000800a,
    0x800000008000000a,
    0x8000000080008081,
    0x8000000000008080,
    0x0000000080000001,
    0x8000000080008008,
];

// Rotation amounts and lane destinations for the combined rho/pi step, in
// the order produced by following the pi permutation cycle starting from
// lane (1, 0). The state is indexed lane[x + 5*y].
const RHO: [u32; 24] = [
    1, 3, 6, 10, 15, 21, 28, 36, 45, 55, 2, 14, 27, 41, 56, 8, 25, 43, 62, 18, 39, 61, 20, 44,
];
const PI: [usize; 24] = [
    10, 7, 11, 17, 18, 3, 5, 16, 8, 21, 24, 4, 15, 23, 19, 13, 12, 2, 20, 14, 22, 9, 6, 1,
];

fn keccak_f(lanes: &mut [u64; 25]) {
    for &rc in &ROUND_CONSTANTS {
        // Theta: column parities folded back into every lane.
        let mut parity = [0u64; 5];
        for x in 0..5 {
            parity[x] =
                lanes[x] ^ lanes[x + 5] ^ lanes[x + 10] ^ lanes[x + 15] ^ lanes[x + 20];
        }
        for x in 0..5 {
            let d = parity[(x + 4) % 5] ^ parity[(x + 1) % 5].rotate_left(1);
            for y in 0..5 {
                lanes[x + 5 * y] ^= d;
            }
        }

        // Rho and pi: rotate each lane and move it along the pi cycle.
        let mut carried = lanes[1];
        for i in 0..24 {
            let next = lanes[PI[i]];
            lanes[PI[i]] = carried.rotate_left(RHO[i]);
            carried = next;
        }

        // Chi: nonlinear row mix.
        for y in 0..5 {
            let row = [
                lanes[5 * y],
                lanes[5 * y + 1],
                lanes[5 * y + 2],
                lanes[5 * y + 3],
                lanes[5 * y + 4],
            ];
            for x in 0..5 {
                lanes[5 * y + x] = row[x] ^ (!row[(x + 1) % 5] & row[(x + 2) % 5]);
            }
        }

        // Iota.
        lanes[0] ^= rc;
    }
}

fn absorb(lanes: &mut [u64; 25], block: &[u8]) {
    for (lane, chunk) in lanes.iter_mut().zip(block.chunks_exact(8)) {
        *lane ^= u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    }
}

/// Keccak-256 digest of `data`.
pub fn keccak256(data: &[u8]) -> [u8; 32] {
    let mut lanes = [0u64; 25];
    let mut blocks = data.chunks_exact(RATE);
    for block in blocks.by_ref() {
        absorb(&mut lanes, block);
        keccak_f(&mut lanes);
    }

    // Final block with multi-rate padding: 0x01 after the message, 0x80 in
    // the last byte of the rate (they coincide XORed when the message fills
    // the block up to its final byte).
    let tail = blocks.remainder();
    let mut last = [0u8; RATE];
    last[..tail.len()].copy_from_slice(tail);
    last[tail.len()] ^= 0x01;
    last[RATE - 1] ^= 0x80;
    absorb(&mut lanes, &last);
    keccak_f(&mut lanes);

    let mut out = [0u8; 32];
    for (chunk, lane) in out.chunks_exact_mut(8).zip(lanes.iter()) {
        chunk.copy_from_slice(&lane.to_le_bytes());
    }
    out
}
