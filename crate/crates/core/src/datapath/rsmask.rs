//! Random-space masked S-box and its infective variant.
//!
//! The state byte is held as two data shares plus the RS share `R`. Inside
//! the S-box the data is re-shared into three TI shares of `X = D0^D1^R` and
//! the inverter is steered so that it returns `X^-1 ^ R` instead of `X^-1`:
//!
//! ```text
//! z'_hi = (x_lo ^ [nu (x_hi^x_lo)^2 (x) r_hi] ^ [(x_lo (x) r_hi) (x) x_hi] (x) f) (x) y
//! z'_lo = (x_hi ^ [nu (x_hi^x_lo)^2 (x) r_lo] ^ [(x_hi (x) r_lo) (x) x_lo] (x) f) (x) y
//! ```
//!
//! `f` is the GF(2^4) unity for `X != 0` and zero for `X == 0`. For the zero
//! input the inverter is fed `R^-1` (from a separate unshared inverter on the
//! RS share), so its output is `R` in both branches.

use serde::{Deserialize, Serialize};

use crate::gf::raw::{mul16, mul256, sq_scale16, SQ16};
use crate::gf::{from_tower, output_linear, to_tower, AFFINE_CONST, NU};
use crate::masking::{
    masked_gf16_mul, masked_mul, masked_mul_single_share, reg_shares, wire_shares, Field,
};
use crate::rng::Rng;
use crate::tap::Tap;

use super::inverter::{inv8_masked, inv8_single};

pub const STAGES: u8 = 10;

/// Which RS-mask nibble multiplies into which output nibble of the mapping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// High output nibble uses `r_hi`, low uses `r_lo`.
    #[default]
    Straight,
    /// High output nibble uses `r_lo`, low uses `r_hi`.
    Crossed,
}

/// Two data shares and the RS share, all in the AES polynomial basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RsMaskState {
    pub data: [u8; 2],
    pub rs: u8,
}

impl RsMaskState {
    pub fn split(x: u8, rng: &mut Rng) -> RsMaskState {
        let d0 = rng.byte();
        let rs = rng.byte();
        RsMaskState {
            data: [d0, x ^ d0 ^ rs],
            rs,
        }
    }

    pub fn value(&self) -> u8 {
        self.data[0] ^ self.data[1] ^ self.rs
    }

    pub fn to_array(self) -> [u8; 3] {
        [self.data[0], self.data[1], self.rs]
    }

    pub fn from_array(a: [u8; 3]) -> RsMaskState {
        RsMaskState {
            data: [a[0], a[1]],
            rs: a[2],
        }
    }
}

/// Shared zero test. Returns `(f, f_bar)` as three-share nibbles: `f` is
/// `0xF` when `X != 0` and `0` otherwise. Occupies stages 2..=4.
pub fn compute_f(x: [u8; 3], rng: &mut Rng, tap: &mut Tap) -> ([u8; 3], [u8; 3]) {
    let bits: [[u8; 3]; 8] =
        std::array::from_fn(|k| [(x[0] >> k & 1) ^ 1, x[1] >> k & 1, x[2] >> k & 1]);

    tap.set_stage(2);
    let l1: [[u8; 3]; 4] = std::array::from_fn(|j| {
        tap.within_idx("l1a", j, |t| {
            let m = masked_mul(Field::Gf2, bits[2 * j], bits[2 * j + 1], rng, t);
            reg_shares(t, "q", 1, m)
        })
    });

    tap.set_stage(3);
    let l2: [[u8; 3]; 2] = std::array::from_fn(|j| {
        tap.within_idx("l2a", j, |t| {
            let m = masked_mul(Field::Gf2, l1[2 * j], l1[2 * j + 1], rng, t);
            reg_shares(t, "q", 1, m)
        })
    });

    tap.set_stage(4);
    let zero = tap.within("l3a0", |t| masked_mul(Field::Gf2, l2[0], l2[1], rng, t));
    let fbar = reg_shares(tap, "fbar", 4, zero.map(|b| b * 0xF));
    let f = wire_shares(tap, "f", 4, [fbar[0] ^ 0xF, fbar[1], fbar[2]]);
    (f, fbar)
}

/// Mapping terms `t_hi`, `t_lo` added to the inverter's final multiplier
/// inputs. Built from the original `X` shares, never from the main path.
/// Occupies stages 2..=5.
pub fn mapping_terms(
    x: [u8; 3],
    rt: u8,
    f: [u8; 3],
    pairing: Pairing,
    rng: &mut Rng,
    tap: &mut Tap,
) -> ([u8; 3], [u8; 3]) {
    let hi = x.map(|v| v >> 4);
    let lo = x.map(|v| v & 0xF);
    let (ra, rb) = match pairing {
        Pairing::Straight => (rt >> 4, rt & 0xF),
        Pairing::Crossed => (rt & 0xF, rt >> 4),
    };

    tap.set_stage(2);
    let sq: [u8; 3] = std::array::from_fn(|i| SQ16[(hi[i] ^ lo[i]) as usize]);
    let sq = wire_shares(tap, "sq", 4, sq);
    let nra = tap.wire("nu_r_hi", 4, mul16(NU.bits(), ra));
    let nrb = tap.wire("nu_r_lo", 4, mul16(NU.bits(), rb));
    let t1h = tap.within("t1_hi", |t| masked_mul_single_share(sq, nra, t));
    let t1h = reg_shares(tap, "t1_hi", 4, t1h);
    let t1l = tap.within("t1_lo", |t| masked_mul_single_share(sq, nrb, t));
    let t1l = reg_shares(tap, "t1_lo", 4, t1l);
    let uh = tap.within("u_hi", |t| masked_mul_single_share(lo, ra, t));
    let uh = reg_shares(tap, "u_hi", 4, uh);
    let ul = tap.within("u_lo", |t| masked_mul_single_share(hi, rb, t));
    let ul = reg_shares(tap, "u_lo", 4, ul);

    tap.set_stage(3);
    let vh = tap.within("v_hi", |t| masked_gf16_mul(uh, hi, rng, t));
    let vh = reg_shares(tap, "v_hi", 4, vh);
    let vl = tap.within("v_lo", |t| masked_gf16_mul(ul, lo, rng, t));
    let vl = reg_shares(tap, "v_lo", 4, vl);

    tap.set_stage(5);
    let wh = tap.within("w_hi", |t| masked_gf16_mul(vh, f, rng, t));
    let th = reg_shares(tap, "t_hi", 4, std::array::from_fn(|i| t1h[i] ^ wh[i]));
    let wl = tap.within("w_lo", |t| masked_gf16_mul(vl, f, rng, t));
    let tl = reg_shares(tap, "t_lo", 4, std::array::from_fn(|i| t1l[i] ^ wl[i]));
    (th, tl)
}

/// Internal values of one forward map evaluation.
pub struct ForwardMap {
    /// Shares of `X^-1 ^ R` (tower basis).
    pub z: [u8; 3],
    pub y: [u8; 3],
    pub xin: [u8; 3],
    pub f: [u8; 3],
}

/// Stages 2..=9: RS-path inverter, zero test, mapping and main inverter.
/// `x` holds tower-basis shares of `X`; `rt` is the tower-basis RS mask.
pub fn rs_forward_map(
    x: [u8; 3],
    rt: u8,
    pairing: Pairing,
    rng: &mut Rng,
    tap: &mut Tap,
) -> ForwardMap {
    let rinv = tap.within("rinv", |t| inv8_single(t, rt, 2));
    let (f, fbar) = tap.within("f", |t| compute_f(x, rng, t));
    let (th, tl) = tap.within("map", |t| mapping_terms(x, rt, f, pairing, rng, t));

    tap.set_stage(6);
    let xin = tap.within("inj", |t| {
        let ih = t.within("hi", |t| masked_mul_single_share(fbar, rinv >> 4, t));
        let il = t.within("lo", |t| masked_mul_single_share(fbar, rinv & 0xF, t));
        wire_shares(t, "xin", 8, std::array::from_fn(|i| x[i] ^ (ih[i] << 4) ^ il[i]))
    });
    let (bh, bl) = tap.within("map", |t| {
        let bh = reg_shares(t, "b_hi", 4, std::array::from_fn(|i| (xin[i] & 0xF) ^ th[i]));
        let bl = reg_shares(t, "b_lo", 4, std::array::from_fn(|i| (xin[i] >> 4) ^ tl[i]));
        (bh, bl)
    });
    let inv = tap.within("inv8", |t| inv8_masked(t, rng, xin, bh, bl, 6));
    ForwardMap {
        z: inv.z,
        y: inv.y,
        xin,
        f,
    }
}

fn input_stage(s: RsMaskState, rng: &mut Rng, tap: &mut Tap) -> ([u8; 3], u8) {
    tap.set_stage(1);
    tap.within("in", |t| {
        let d0 = to_tower(s.data[0]);
        let d1 = to_tower(s.data[1]);
        let rt = to_tower(s.rs);
        let m0 = rng.byte();
        let m1 = rng.byte();
        let x = reg_shares(t, "x", 8, [d0 ^ rt ^ m0, d1 ^ m1, m0 ^ m1]);
        let rt = t.reg("r", 8, rt);
        (x, rt)
    })
}

fn output_stage(z: [u8; 3], rt: u8, tap: &mut Tap) -> RsMaskState {
    tap.set_stage(10);
    tap.within("out", |t| RsMaskState {
        data: [
            t.reg("d0", 8, output_linear(z[0]) ^ AFFINE_CONST),
            t.reg("d1", 8, output_linear(z[1] ^ z[2])),
        ],
        rs: t.reg("r", 8, output_linear(rt)),
    })
}

pub fn sbox_rsmask(s: RsMaskState, pairing: Pairing, rng: &mut Rng, tap: &mut Tap) -> RsMaskState {
    let (x, rt) = input_stage(s, rng, tap);
    let m = rs_forward_map(x, rt, pairing, rng, tap);
    output_stage(m.z, rt, tap)
}

/// Output of the infective S-box: the state byte plus the two-share
/// infection bytes for the four rows of its column.
pub struct Infected {
    pub state: RsMaskState,
    pub infection: [[u8; 2]; 4],
}

pub fn sbox_infective(s: RsMaskState, rng: &mut Rng, tap: &mut Tap) -> Infected {
    let (x, rt) = input_stage(s, rng, tap);
    let m = rs_forward_map(x, rt, Pairing::Straight, rng, tap);

    tap.set_stage(9);
    let zr = tap.within("red", |t| {
        let hi = t.within("z_hi", |t| masked_gf16_mul(m.xin.map(|v| v & 0xF), m.y, rng, t));
        let lo = t.within("z_lo", |t| masked_gf16_mul(m.xin.map(|v| v >> 4), m.y, rng, t));
        let z: [u8; 3] = std::array::from_fn(|i| (hi[i] << 4) | lo[i]);
        reg_shares(t, "z", 8, z)
    });

    let state = output_stage(m.z, rt, tap);
    tap.set_stage(10);
    let infection = tap.within("inf", |t| {
        let fh = t.within("fr_hi", |t| masked_mul_single_share(m.f, rt >> 4, t));
        let fl = t.within("fr_lo", |t| masked_mul_single_share(m.f, rt & 0xF, t));
        let e: [u8; 3] = std::array::from_fn(|i| m.z[i] ^ zr[i] ^ (fh[i] << 4) ^ fl[i]);
        let e = reg_shares(t, "e", 8, e);
        std::array::from_fn(|j| {
            let r = rng.byte();
            t.within_idx("j", j, |t| {
                let p: [u8; 3] =
                    std::array::from_fn(|i| t.wire_idx("s", i, 8, from_tower(mul256(e[i], r))));
                [p[0], p[1] ^ p[2]]
            })
        })
    });
    Infected { state, infection }
}

/// `X^-1 ^ R` the way the mapping equations describe it, unshared, as an
/// oracle for the datapath.
pub fn forward_map_oracle(x: u8, rt: u8) -> u8 {
    let (xh, xl) = (x >> 4, x & 0xF);
    let (rh, rl) = (rt >> 4, rt & 0xF);
    if x == 0 {
        return rt;
    }
    let s = sq_scale16(xh ^ xl);
    let yinv = s ^ mul16(xh, xl);
    let y = crate::gf::raw::inv16(yinv);
    let th = mul16(s, rh) ^ mul16(mul16(xl, rh), xh);
    let tl = mul16(s, rl) ^ mul16(mul16(xh, rl), xl);
    (mul16(xl ^ th, y) << 4) | mul16(xh ^ tl, y)
}
