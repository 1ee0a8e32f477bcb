use crate::gf::{output_linear, to_tower, AFFINE_CONST};
use crate::tap::Tap;

use super::inverter::inv8_single;

pub const STAGES: u8 = 6;

pub fn sbox_unprotected(x: u8, tap: &mut Tap) -> u8 {
    tap.set_stage(1);
    let xt = tap.within("in", |t| t.reg("x", 8, to_tower(x)));
    let z = tap.within("inv8", |t| inv8_single(t, xt, 2));
    tap.set_stage(6);
    tap.within("out", |t| t.reg("y", 8, output_linear(z) ^ AFFINE_CONST))
}
