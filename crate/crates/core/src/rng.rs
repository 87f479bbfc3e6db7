//! Counter-based random streams.
//!
//! Every stream is a Philox4x32-10 block cipher keyed by the master seed and
//! evaluated on the counter `(block, stream_index)`. Two streams that differ in
//! their index therefore walk disjoint regions of the counter space, so their
//! outputs are independent no matter which thread creates or consumes them.

use rand_core::{impls, RngCore};

/// Name of the generator, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "philox4x32-10";

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// The Philox4x32 bijection with 10 rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = u64::from(PHILOX_M0) * u64::from(c[0]);
        let p1 = u64::from(PHILOX_M1) * u64::from(c[2]);
        c = [
            ((p1 >> 32) as u32) ^ c[1] ^ k[0],
            p1 as u32,
            ((p0 >> 32) as u32) ^ c[3] ^ k[1],
            p0 as u32,
        ];
    }
    c
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(key, stream_index)`.
///
/// Streams are plain values. Clone one to replay it; never share one mutably
/// between tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    key: u64,
    stream_index: u64,
    block: u64,
    spare: Option<u64>,
}

impl RngStream {
    /// The stream for task `index` under `master_seed`.
    pub fn new(master_seed: u64, index: u64) -> Self {
        Self {
            key: master_seed,
            stream_index: index,
            block: 0,
            spare: None,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.key
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// A child stream for `label`, independent of the parent and of every
    /// other label. Derivation does not advance the parent.
    pub fn derive(&self, label: u64) -> Self {
        let key = mix64(self.key ^ mix64(label.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        Self {
            key,
            stream_index: self.stream_index,
            block: 0,
            spare: None,
        }
    }

    #[inline]
    fn next_block(&mut self) -> [u32; 4] {
        let counter = [
            self.block as u32,
            (self.block >> 32) as u32,
            self.stream_index as u32,
            (self.stream_index >> 32) as u32,
        ];
        self.block = self.block.wrapping_add(1);
        philox4x32_10(counter, [self.key as u32, (self.key >> 32) as u32])
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        if let Some(x) = self.spare.take() {
            return x;
        }
        let b = self.next_block();
        self.spare = Some(u64::from(b[2]) | (u64::from(b[3]) << 32));
        u64::from(b[0]) | (u64::from(b[1]) << 32)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`, exact (Lemire's multiply-and-reject).
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below(0)");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }
}

/// The stream for `(master_seed, index)`; a pure function of its arguments.
pub fn substream(master_seed: u64, index: u64) -> RngStream {
    RngStream::new(master_seed, index)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        RngStream::next_u64(self)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors from the Random123 distribution.
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32_10([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn same_key_same_sequence() {
        let mut a = substream(42, 0);
        let mut b = substream(42, 0);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_index_differs() {
        let mut a = substream(42, 0);
        let mut b = substream(42, 1);
        let xs: Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
        assert!(xs.iter().zip(&ys).all(|(x, y)| x != y));
    }

    #[test]
    fn derive_leaves_parent_untouched() {
        let parent = substream(7, 3);
        let child = parent.derive(1);
        assert_ne!(child, parent);
        assert_eq!(parent.derive(1), child);
        assert_ne!(parent.derive(2), child);
        let mut p = parent.clone();
        let mut fresh = substream(7, 3);
        assert_eq!(p.next_u64(), fresh.next_u64());
    }

    #[test]
    fn below_stays_in_range_and_covers() {
        let mut s = substream(1, 1);
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            seen[s.next_below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn unit_interval() {
        let mut s = substream(9, 0);
        let mut sum = 0.0;
        for _ in 0..100_000 {
            let u = s.next_f64();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        assert!((sum / 100_000.0 - 0.5).abs() < 0.005);
    }
}
