use crate::gf::{output_linear, to_tower, AFFINE_CONST};
use crate::masking::reg_shares;
use crate::rng::Rng;
use crate::tap::Tap;

use super::inverter::inv8_masked;

pub const STAGES: u8 = 6;

pub fn sbox_ti(x: [u8; 3], rng: &mut Rng, tap: &mut Tap) -> [u8; 3] {
    tap.set_stage(1);
    let xt = tap.within("in", |t| reg_shares(t, "x", 8, x.map(to_tower)));
    let inv = tap.within("inv8", |t| {
        inv8_masked(t, rng, xt, xt.map(|v| v & 0xF), xt.map(|v| v >> 4), 2)
    });
    tap.set_stage(6);
    let z = inv.z;
    let out = [
        output_linear(z[0]) ^ AFFINE_CONST,
        output_linear(z[1]),
        output_linear(z[2]),
    ];
    tap.within("out", |t| reg_shares(t, "y", 8, out))
}
