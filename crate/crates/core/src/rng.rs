//! Counter-based randomness.
//!
//! Every consumer of randomness (plaintext draw, share split, one S-box
//! evaluation, fault activation, leakage noise) gets its own substream keyed
//! by `(master seed, consumer id)` and positioned by the trace index. Two
//! evaluations that open the same substream see the same bytes, which is how
//! the faulty run and its fault-free shadow share their masks.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Consumer ids. S-box and fault substreams are offset by `round * 16 + byte`.
pub mod consumer {
    pub const PLAINTEXT: u64 = 1;
    pub const KEY: u64 = 2;
    pub const STATE_SPLIT: u64 = 3;
    pub const KEY_SCHEDULE: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const PARTITION: u64 = 6;
    pub const SAMPLER: u64 = 7;
    pub const SBOX: u64 = 0x1000;
    pub const FAULT: u64 = 0x2000;

    pub const fn sbox(round: usize, byte: usize) -> u64 {
        SBOX + (round * 16 + byte) as u64
    }

    pub const fn fault(round: usize, byte: usize) -> u64 {
        FAULT + (round * 16 + byte) as u64
    }
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
enum Source {
    Stream(ChaCha8Rng),
    Zero,
}

/// Deterministic bit source with a small bit buffer so that narrow draws
/// (1, 2, 4 bits) do not waste a whole word each.
#[derive(Clone, Debug)]
pub struct Rng {
    source: Source,
    buf: u64,
    avail: u32,
}

impl Rng {
    pub fn substream(seed: u64, consumer: u64, index: u64) -> Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&consumer.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(index);
        Rng {
            source: Source::Stream(inner),
            buf: 0,
            avail: 0,
        }
    }

    /// A source that only ever yields zero. All masks vanish.
    pub fn zeros() -> Rng {
        Rng {
            source: Source::Zero,
            buf: 0,
            avail: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.source, Source::Zero)
    }

    fn word(&mut self) -> u64 {
        match &mut self.source {
            Source::Stream(s) => s.next_u64(),
            Source::Zero => 0,
        }
    }

    /// `width` fresh bits (1..=8) in the low end of a byte.
    #[inline]
    pub fn bits(&mut self, width: u8) -> u8 {
        let w = width as u32;
        debug_assert!((1..=8).contains(&w));
        if self.avail < w {
            self.buf = self.word();
            self.avail = 64;
        }
        let v = (self.buf & ((1u64 << w) - 1)) as u8;
        self.buf >>= w;
        self.avail -= w;
        v
    }

    #[inline]
    pub fn byte(&mut self) -> u8 {
        self.bits(8)
    }

    #[inline]
    pub fn nibble(&mut self) -> u8 {
        self.bits(4)
    }

    pub fn fill(&mut self, out: &mut [u8]) {
        for b in out {
            *b = self.byte();
        }
    }

    pub fn next_seed(&mut self) -> u64 {
        self.word()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.word() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.word() as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.fill(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_stream() {
        let mut a = Rng::substream(7, 3, 99);
        let mut b = Rng::substream(7, 3, 99);
        let xa: Vec<u8> = (0..64).map(|_| a.byte()).collect();
        let xb: Vec<u8> = (0..64).map(|_| b.byte()).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn streams_differ_by_index_consumer_and_seed() {
        let take = |mut r: Rng| (0..16).map(|_| r.byte()).collect::<Vec<_>>();
        let base = take(Rng::substream(1, 1, 1));
        assert_ne!(base, take(Rng::substream(1, 1, 2)));
        assert_ne!(base, take(Rng::substream(1, 2, 1)));
        assert_ne!(base, take(Rng::substream(2, 1, 1)));
    }

    #[test]
    fn zero_source() {
        let mut z = Rng::zeros();
        assert!((0..100).all(|_| z.byte() == 0 && z.bits(3) == 0));
    }

    #[test]
    fn narrow_draws_are_masked() {
        let mut r = Rng::substream(5, 5, 5);
        for w in 1..=8u8 {
            for _ in 0..200 {
                assert!((r.bits(w) as u16) < (1u16 << w));
            }
        }
    }

    #[test]
    fn unit_in_range() {
        let mut r = Rng::substream(0, 0, 0);
        for _ in 0..1000 {
            let u = r.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
