//! Node-level GF(2^8) inverters shared by the S-box models.

use crate::gf::raw::{mul4, scl_n4, sq4, sq_scale16};
use crate::masking::{masked_gf16_mul, masked_mul, mul16_nodes, reg_shares, wire_shares, Field};
use crate::rng::Rng;
use crate::tap::Tap;

/// Unshared Canright inverter over four register stages starting at `first`.
pub fn inv8_single(tap: &mut Tap, x: u8, first: u8) -> u8 {
    let (hi, lo) = (x >> 4, x & 0xF);

    tap.set_stage(first);
    let c = tap.wire("c", 4, sq_scale16(hi ^ lo));
    let d = tap.within("d", |t| mul16_nodes(t, hi, lo));
    let yinv = tap.reg("yinv", 4, c ^ d);

    tap.set_stage(first + 1);
    let (a, b) = (yinv >> 2, yinv & 3);
    let c4 = scl_n4(sq4(a ^ b));
    let d4 = tap.wire("d4", 2, mul4(a, b));
    let e = tap.reg("e", 2, sq4(c4 ^ d4));

    tap.set_stage(first + 2);
    let p = tap.wire("p", 2, mul4(e, b));
    let q = tap.wire("q", 2, mul4(e, a));
    let y = tap.reg("y", 4, (p << 2) | q);

    tap.set_stage(first + 3);
    let zh = tap.within("z_hi", |t| mul16_nodes(t, y, lo));
    let zl = tap.within("z_lo", |t| mul16_nodes(t, y, hi));
    tap.reg("z", 8, (zh << 4) | zl)
}

/// Output of the shared inverter: the registered result and the GF(2^4)
/// inverse `y` it was built from.
pub struct MaskedInv {
    pub z: [u8; 3],
    pub y: [u8; 3],
}

/// Three-share Canright inverter over four register stages starting at
/// `first`. The final multipliers take `b_hi`, `b_lo` instead of the input
/// nibbles, which lets the random-space mapping ride on the same hardware.
pub fn inv8_masked(
    tap: &mut Tap,
    rng: &mut Rng,
    x: [u8; 3],
    b_hi: [u8; 3],
    b_lo: [u8; 3],
    first: u8,
) -> MaskedInv {
    let hi = x.map(|v| v >> 4);
    let lo = x.map(|v| v & 0xF);

    tap.set_stage(first);
    let sum = [hi[0] ^ lo[0], hi[1] ^ lo[1], hi[2] ^ lo[2]];
    let c = wire_shares(tap, "c", 4, sum.map(sq_scale16));
    let d = tap.within("d", |t| masked_gf16_mul(hi, lo, rng, t));
    let yinv = reg_shares(tap, "yinv", 4, [c[0] ^ d[0], c[1] ^ d[1], c[2] ^ d[2]]);

    tap.set_stage(first + 1);
    let a = yinv.map(|v| v >> 2);
    let b = yinv.map(|v| v & 3);
    let c4: [u8; 3] = std::array::from_fn(|i| scl_n4(sq4(a[i] ^ b[i])));
    let d4 = tap.within("d4", |t| masked_mul(Field::Gf4, a, b, rng, t));
    let e = reg_shares(tap, "e", 2, std::array::from_fn(|i| sq4(c4[i] ^ d4[i])));

    tap.set_stage(first + 2);
    let p = tap.within("p", |t| masked_mul(Field::Gf4, e, b, rng, t));
    let q = tap.within("q", |t| masked_mul(Field::Gf4, e, a, rng, t));
    let y = reg_shares(tap, "y", 4, std::array::from_fn(|i| (p[i] << 2) | q[i]));

    tap.set_stage(first + 3);
    let zh = tap.within("z_hi", |t| masked_gf16_mul(b_hi, y, rng, t));
    let zl = tap.within("z_lo", |t| masked_gf16_mul(b_lo, y, rng, t));
    let z = reg_shares(tap, "z", 8, std::array::from_fn(|i| (zh[i] << 4) | zl[i]));
    MaskedInv { z, y }
}
