//! Boolean sharing and three-share masked multipliers.

use crate::fault::width_mask;
use crate::gf::raw::{mul4, scl_n4};
use crate::rng::Rng;
use crate::tap::Tap;

/// `N` shares whose XOR is the secret (masking order `N - 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shared<const N: usize>(pub [u8; N]);

pub type SharedByte = Shared<3>;

impl<const N: usize> Shared<N> {
    pub const ORDER: usize = N - 1;

    /// `N - 1` random shares followed by the correcting share.
    pub fn split(x: u8, rng: &mut Rng) -> Self {
        Self::split_width(x, 8, rng)
    }

    pub fn split_width(x: u8, width: u8, rng: &mut Rng) -> Self {
        assert!(N >= 2, "at least two shares");
        let mut s = [0u8; N];
        let mut last = x & width_mask(width);
        for v in s.iter_mut().take(N - 1) {
            *v = rng.bits(width);
            last ^= *v;
        }
        s[N - 1] = last;
        Shared(s)
    }

    pub fn combine(&self) -> u8 {
        self.0.iter().fold(0, |a, &b| a ^ b)
    }

    /// XOR with a fresh random vector whose shares sum to zero.
    pub fn remask(self, rng: &mut Rng) -> Self {
        self.remask_width(8, rng)
    }

    pub fn remask_width(self, width: u8, rng: &mut Rng) -> Self {
        let mut s = self.0;
        let mut acc = 0;
        for v in s.iter_mut().take(N - 1) {
            let m = rng.bits(width);
            *v ^= m;
            acc ^= m;
        }
        s[N - 1] ^= acc;
        Shared(s)
    }

    pub fn shares(&self) -> &[u8; N] {
        &self.0
    }
}

/// Cross products feeding each output share of a three-share multiplier.
/// Output share `i` never touches input share `i` of either operand.
pub const TI_TERMS: [[(usize, usize); 3]; 3] = [
    [(1, 1), (1, 2), (2, 1)],
    [(2, 2), (0, 2), (2, 0)],
    [(0, 0), (0, 1), (1, 0)],
];

const CROSS: [[&str; 3]; 3] = [
    ["x00", "x01", "x02"],
    ["x10", "x11", "x12"],
    ["x20", "x21", "x22"],
];

/// Field of a masked product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    /// Single bits; the product is AND.
    Gf2,
    Gf4,
    Gf16,
}

impl Field {
    pub const fn width(self) -> u8 {
        match self {
            Field::Gf2 => 1,
            Field::Gf4 => 2,
            Field::Gf16 => 4,
        }
    }
}

/// GF(2^4) product built from three GF(2^2) multipliers, each a node.
#[inline]
pub fn mul16_nodes(tap: &mut Tap, x: u8, y: u8) -> u8 {
    let (a, b) = (x >> 2, x & 3);
    let (c, d) = (y >> 2, y & 3);
    let hh = tap.wire("gf4m0", 2, mul4(a, c));
    let ll = tap.wire("gf4m1", 2, mul4(b, d));
    let e = scl_n4(tap.wire("gf4m2", 2, mul4(a ^ b, c ^ d)));
    tap.wire("out", 4, ((hh ^ e) << 2) | (ll ^ e))
}

#[inline]
fn product(tap: &mut Tap, field: Field, x: u8, y: u8) -> u8 {
    match field {
        Field::Gf2 => tap.wire("and", 1, x & y),
        Field::Gf4 => tap.wire("gf4m", 2, mul4(x, y)),
        Field::Gf16 => mul16_nodes(tap, x, y),
    }
}

/// Three-share product with ring remasking of the outputs.
pub fn masked_mul(
    field: Field,
    a: [u8; 3],
    b: [u8; 3],
    rng: &mut Rng,
    tap: &mut Tap,
) -> [u8; 3] {
    let w = field.width();
    let mut out = [0u8; 3];
    for (i, terms) in TI_TERMS.iter().enumerate() {
        for &(j, k) in terms {
            tap.enter(CROSS[j][k]);
            out[i] ^= product(tap, field, a[j], b[k]);
            tap.leave();
        }
    }
    let m = [rng.bits(w), rng.bits(w), rng.bits(w)];
    for i in 0..3 {
        out[i] ^= m[i] ^ m[(i + 1) % 3];
    }
    out
}

pub fn masked_gf16_mul(a: [u8; 3], b: [u8; 3], rng: &mut Rng, tap: &mut Tap) -> [u8; 3] {
    masked_mul(Field::Gf16, a, b, rng, tap)
}

/// Multiplication of a shared nibble by an unshared one, share by share.
pub fn masked_mul_single_share<const N: usize>(a: [u8; N], r: u8, tap: &mut Tap) -> [u8; N] {
    let mut out = [0u8; N];
    for i in 0..N {
        tap.enter_idx("s", i);
        out[i] = mul16_nodes(tap, a[i], r);
        tap.leave();
    }
    out
}

/// Register every share of a value under `name.s<i>`.
pub fn reg_shares<const N: usize>(tap: &mut Tap, name: &str, width: u8, v: [u8; N]) -> [u8; N] {
    tap.enter(name);
    let mut out = [0u8; N];
    for i in 0..N {
        out[i] = tap.reg_idx("s", i, width, v[i]);
    }
    tap.leave();
    out
}

pub fn wire_shares<const N: usize>(tap: &mut Tap, name: &str, width: u8, v: [u8; N]) -> [u8; N] {
    tap.enter(name);
    let mut out = [0u8; N];
    for i in 0..N {
        out[i] = tap.wire_idx("s", i, width, v[i]);
    }
    tap.leave();
    out
}

#[inline]
pub fn xor3(a: [u8; 3]) -> u8 {
    a[0] ^ a[1] ^ a[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::raw::mul16;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn chi2_p(counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        let e = n as f64 / counts.len() as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
    }

    #[test]
    fn split_combine() {
        for seed in 0..50 {
            let mut r = Rng::substream(seed, 0, 0);
            assert_eq!(SharedByte::split(0xAB, &mut r).combine(), 0xAB);
            assert_eq!(Shared::<2>::split(0x17, &mut r).combine(), 0x17);
        }
        assert_eq!(SharedByte::split(0x5C, &mut Rng::zeros()).0, [0, 0, 0x5C]);
        assert_eq!(SharedByte::ORDER, 2);
    }

    #[test]
    fn remask_preserves_value() {
        let mut r = Rng::substream(3, 0, 0);
        let s = SharedByte::split(0x42, &mut r);
        for _ in 0..100 {
            assert_eq!(s.remask(&mut r).combine(), 0x42);
        }
        assert_eq!(s.remask(&mut Rng::zeros()), s);
    }

    #[test]
    fn two_of_three_shares_uniform() {
        let mut r = Rng::substream(11, 0, 0);
        let mut c01 = vec![0u64; 65536];
        let mut c12 = vec![0u64; 65536];
        for _ in 0..1_000_000 {
            let s = SharedByte::split(0xAB, &mut r).0;
            c01[(s[0] as usize) << 8 | s[1] as usize] += 1;
            c12[(s[1] as usize) << 8 | s[2] as usize] += 1;
        }
        assert!(chi2_p(&c01) > 1e-3);
        assert!(chi2_p(&c12) > 1e-3);
    }

    #[test]
    fn remasked_marginals_uniform() {
        let mut r = Rng::substream(12, 0, 0);
        let fixed = Shared([0x11, 0x22, 0x33]);
        let mut c = [[0u64; 256]; 3];
        for _ in 0..1_000_000 {
            let s = fixed.remask(&mut r).0;
            for i in 0..3 {
                c[i][s[i] as usize] += 1;
            }
        }
        for ci in &c {
            assert!(chi2_p(ci) > 1e-3);
        }
    }

    #[test]
    fn non_completeness_is_structural() {
        for (i, terms) in TI_TERMS.iter().enumerate() {
            for &(j, k) in terms {
                assert!(j != i && k != i);
            }
        }
        let mut all: Vec<_> = TI_TERMS.iter().flatten().copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 9);
    }

    #[test]
    fn masked_products_exhaustive() {
        let mut r = Rng::substream(1, 2, 3);
        let mut t = Tap::off();
        for field in [Field::Gf2, Field::Gf4, Field::Gf16] {
            let w = field.width();
            let reference = |x: u8, y: u8| match field {
                Field::Gf2 => x & y,
                Field::Gf4 => mul4(x, y),
                Field::Gf16 => mul16(x, y),
            };
            for x in 0..(1u8 << w) {
                for y in 0..(1u8 << w) {
                    for _ in 0..20 {
                        let a = Shared::<3>::split_width(x, w, &mut r).0;
                        let b = Shared::<3>::split_width(y, w, &mut r).0;
                        let o = masked_mul(field, a, b, &mut r, &mut t);
                        assert_eq!(xor3(o), reference(x, y));
                    }
                }
            }
        }
    }

    #[test]
    fn masked_gf16_trivia() {
        let mut r = Rng::substream(4, 0, 0);
        let mut t = Tap::off();
        for v in 0..16 {
            let zero = Shared::<3>::split_width(0, 4, &mut r).0;
            let one = Shared::<3>::split_width(0xF, 4, &mut r).0;
            let b = Shared::<3>::split_width(v, 4, &mut r).0;
            assert_eq!(xor3(masked_gf16_mul(zero, b, &mut r, &mut t)), 0);
            assert_eq!(xor3(masked_gf16_mul(one, b, &mut r, &mut t)), v);
        }
    }

    #[test]
    fn single_share_product() {
        let mut r = Rng::substream(5, 0, 0);
        let mut t = Tap::off();
        for x in 0..16u8 {
            for y in 0..16u8 {
                let a = Shared::<3>::split_width(x, 4, &mut r).0;
                let o = masked_mul_single_share(a, y, &mut t);
                assert_eq!(xor3(o), mul16(x, y));
                if y == 0 {
                    assert_eq!(o, [0; 3]);
                }
                if y == 0xF {
                    assert_eq!(o, a);
                }
            }
        }
    }

    #[test]
    fn catalog_names() {
        let mut t = Tap::catalog();
        let mut r = Rng::zeros();
        t.within("d", |t| masked_gf16_mul([0; 3], [0; 3], &mut r, t));
        let ids: Vec<_> = t.into_catalog().into_iter().map(|n| n.id).collect();
        assert_eq!(ids.len(), 9 * 4);
        assert!(ids.contains(&"d.x01.gf4m0".to_string()));
        assert!(ids.contains(&"d.x22.out".to_string()));
    }
}
