//! Content-defined chunking with a buzhash rolling hash.
//!
//! The hash covers the last 48 bytes of the current chunk. A boundary is
//! placed after a byte when the chunk is at least `MIN_CHUNK` long and the
//! low 12 bits of the hash are all ones, or when the chunk reaches
//! `MAX_CHUNK`. The hash restarts at every boundary, so boundaries depend on
//! content alone.

pub const WINDOW: usize = 48;
pub const MIN_CHUNK: usize = 1024;
pub const MAX_CHUNK: usize = 16 * 1024;
pub const BOUNDARY_MASK: u32 = 0xFFF;

pub(crate) static TABLE: [u32; 256] = build_table();

const fn build_table() -> [u32; 256] {
    // splitmix64 over a fixed seed
    let mut table = [0u32; 256];
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut i = 0;
    while i < 256 {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        table[i] = (z >> 32) as u32;
        i += 1;
    }
    table
}

/// Exclusive end offsets of every chunk of `data`. Empty input has no chunks.
pub fn chunk_ends(data: &[u8]) -> Vec<usize> {
    let mut ends = Vec::with_capacity(data.len() / 4096 + 1);
    let mut start = 0;
    let mut hash: u32 = 0;
    for i in 0..data.len() {
        let len = i - start + 1;
        hash = hash.rotate_left(1) ^ TABLE[data[i] as usize];
        if len > WINDOW {
            let out = data[i - WINDOW];
            hash ^= TABLE[out as usize].rotate_left((WINDOW % 32) as u32);
        }
        if (len >= MIN_CHUNK && hash & BOUNDARY_MASK == BOUNDARY_MASK) || len == MAX_CHUNK {
            ends.push(i + 1);
            start = i + 1;
            hash = 0;
        }
    }
    if start < data.len() {
        ends.push(data.len());
    }
    ends
}

/// Split `data` into content-defined chunks.
pub fn chunks(data: &[u8]) -> impl Iterator<Item = &[u8]> {
    let ends = chunk_ends(data);
    let mut start = 0;
    ends.into_iter().map(move |end| {
        let c = &data[start..end];
        start = end;
        c
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<u8> {
        let mut v = vec![0; n];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut v);
        v
    }

    #[test]
    fn rolling_matches_reference() {
        for (n, seed) in [(0, 0), (1, 1), (5000, 2), (200_000, 3)] {
            let data = random(n, seed);
            assert_eq!(chunk_ends(&data), oracle::chunk_ends(&data), "n={n}");
        }
    }

    #[test]
    fn sizes_within_bounds() {
        let data = random(1 << 20, 7);
        let ends = chunk_ends(&data);
        let mut start = 0;
        for (k, &end) in ends.iter().enumerate() {
            let len = end - start;
            assert!(len <= MAX_CHUNK);
            if k + 1 < ends.len() {
                assert!(len >= MIN_CHUNK);
            }
            start = end;
        }
        assert_eq!(start, data.len());
        // average chunk ~ MIN + 4 KiB on random data
        let avg = data.len() / ends.len();
        assert!((2048..12288).contains(&avg), "avg {avg}");
    }

    #[test]
    fn constant_input_hits_max() {
        let data = vec![0u8; 40_000];
        let ends = chunk_ends(&data);
        assert!(ends.windows(2).all(|w| w[1] - w[0] <= MAX_CHUNK));
        assert_eq!(*ends.last().unwrap(), 40_000);
    }
}
