//! Built-in self checks run by `rsmask verify`.
//!
//! Reference values are computed in the AES polynomial basis by
//! exponentiation, never through the tower inverter.

use serde::Serialize;

use crate::aes::{encrypt_masked, encrypt_reference, expand_key, expand_key_plain, FaultPlan};
use crate::analysis::theorem_checks;
use crate::datapath::rsmask::{forward_map_oracle, rs_forward_map};
use crate::datapath::{eval, Model, Pairing, RsMaskState};
use crate::gf::{from_tower, gf256_mul_poly, raw, to_tower, AFFINE_CONST, INV_SBOX, SBOX};
use crate::rng::{consumer, Rng};
use crate::tap::Tap;

const MAX_DETAILS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: u64,
    pub failures: u64,
    pub details: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> SuiteResult {
        SuiteResult {
            name,
            checks: 0,
            failures: 0,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.details.len() < MAX_DETAILS {
                self.details.push(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }
}

fn inv_poly(x: u8) -> u8 {
    // x^254 by square and multiply
    let mut r = 1u8;
    let mut b = x;
    let mut e = 254u8;
    while e != 0 {
        if e & 1 == 1 {
            r = gf256_mul_poly(r, b);
        }
        b = gf256_mul_poly(b, b);
        e >>= 1;
    }
    r
}

fn sbox_poly(x: u8) -> u8 {
    let i = inv_poly(x);
    i ^ i.rotate_left(1) ^ i.rotate_left(2) ^ i.rotate_left(3) ^ i.rotate_left(4) ^ AFFINE_CONST
}

fn gf_tower() -> SuiteResult {
    let mut s = SuiteResult::new("gf-tower");
    for x in 0..=255u8 {
        let got = from_tower(raw::inv256(to_tower(x)));
        s.check(got == inv_poly(x), || format!("inverse of {x:02x}: {got:02x}"));
        s.check(from_tower(to_tower(x)) == x, || format!("basis round trip {x:02x}"));
    }
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            let got = from_tower(raw::mul256(to_tower(a), to_tower(b)));
            s.check(got == gf256_mul_poly(a, b), || format!("{a:02x}*{b:02x}: {got:02x}"));
        }
    }
    s
}

fn sbox_tables() -> SuiteResult {
    let mut s = SuiteResult::new("sbox-table");
    for x in 0..=255u8 {
        let want = sbox_poly(x);
        s.check(SBOX[x as usize] == want, || format!("S({x:02x}) = {:02x}, want {want:02x}", SBOX[x as usize]));
        s.check(INV_SBOX[want as usize] == x, || format!("InvS({want:02x}) != {x:02x}"));
    }
    s
}

fn sbox_models(base: u64, seeds: u64) -> SuiteResult {
    let mut s = SuiteResult::new("sbox-models");
    for model in Model::ALL {
        for seed in base..base + seeds {
            for x in 0..=255u8 {
                let mut rng = Rng::substream(seed, consumer::SAMPLER, x as u64);
                let input = model.split(x, &mut rng);
                let got = eval(model, input, &mut rng, &mut Tap::off()).value();
                s.check(got == sbox_poly(x), || format!("{model} seed {seed} x {x:02x}: {got:02x}"));
            }
        }
    }
    s
}

fn rs_mask_exhaustive(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new("rs-mask-exhaustive");
    let mut rng = Rng::substream(seed, consumer::SAMPLER, u64::MAX);
    for x in 0..=255u8 {
        for r in 0..=255u8 {
            let m = rng.byte();
            let st = RsMaskState::from_array([x ^ r ^ m, m, r]);
            let out = crate::datapath::rsmask::sbox_rsmask(st, Pairing::Straight, &mut rng, &mut Tap::off());
            s.check(out.value() == sbox_poly(x), || format!("x {x:02x} R {r:02x}: {:02x}", out.value()));
            let (tx, tr) = (to_tower(x), to_tower(r));
            let shares = [tx ^ m, m, 0];
            let fm = rs_forward_map(shares, tr, Pairing::Straight, &mut rng, &mut Tap::off());
            let z = fm.z[0] ^ fm.z[1] ^ fm.z[2];
            let want = raw::inv256(tx) ^ tr;
            s.check(z == want && forward_map_oracle(tx, tr) == want, || {
                format!("forward map x {x:02x} R {r:02x}: {z:02x}, want {want:02x}")
            });
        }
    }
    s
}

const FIPS_KEY: [u8; 16] = [
    0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f,
];
const FIPS_PT: [u8; 16] = [
    0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff,
];
const FIPS_CT: [u8; 16] = [
    0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30, 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a,
];
const FIPS_K10: [u8; 16] = [
    0x13, 0x11, 0x1d, 0x7f, 0xe3, 0x94, 0x4a, 0x17, 0xf3, 0x07, 0xa7, 0x8b, 0x4d, 0x2b, 0x30, 0xc5,
];

fn aes_vectors(base: u64, seeds: u64) -> SuiteResult {
    let mut s = SuiteResult::new("aes");
    let ct = encrypt_reference(&FIPS_PT, &FIPS_KEY);
    s.check(ct == FIPS_CT, || format!("reference ciphertext {}", hex::encode(ct)));
    s.check(expand_key_plain(&FIPS_KEY)[10] == FIPS_K10, || "last round key".into());
    for model in Model::ALL {
        for seed in base..base + seeds {
            let keys = expand_key(&FIPS_KEY, &mut Rng::substream(seed, consumer::KEY_SCHEDULE, 0));
            s.check(keys.combined()[10] == FIPS_K10, || format!("{model} masked schedule seed {seed}"));
            let e = encrypt_masked(&FIPS_PT, &keys, model, &FaultPlan::none(), seed, 0, None);
            s.check(e.ciphertext == FIPS_CT && !e.effective(), || {
                format!("{model} seed {seed}: {}", hex::encode(e.ciphertext))
            });
        }
    }
    s
}

fn masking_theorems() -> SuiteResult {
    let mut s = SuiteResult::new("masking-theorems");
    for item in theorem_checks().items {
        s.check(item.passed, || format!("{}: {}", item.name, item.detail));
    }
    s
}

/// Run every suite. The randomized suites sweep mask seeds
/// `base..base + seeds`.
pub fn run_all(base: u64, seeds: u64) -> Vec<SuiteResult> {
    vec![
        gf_tower(),
        sbox_tables(),
        sbox_models(base, seeds),
        rs_mask_exhaustive(base),
        aes_vectors(base, seeds),
        masking_theorems(),
    ]
}
