#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// GF(2^8) product by shift-and-add, written independently of the crate.
pub fn pmul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        let hi = a & 0x80;
        a <<= 1;
        if hi != 0 {
            a ^= 0x1B;
        }
        b >>= 1;
    }
    p
}

/// AES S-box from x^254 and the affine map written out bitwise.
pub fn sbox_oracle() -> [u8; 256] {
    let mut t = [0u8; 256];
    for (x, out) in t.iter_mut().enumerate() {
        let mut inv = 1u8;
        for _ in 0..254 {
            inv = pmul(inv, x as u8);
        }
        if x == 0 {
            inv = 0;
        }
        let mut s = 0u8;
        for i in 0..8 {
            let bit = (inv >> i) ^ (inv >> ((i + 4) % 8)) ^ (inv >> ((i + 5) % 8))
                ^ (inv >> ((i + 6) % 8)) ^ (inv >> ((i + 7) % 8)) ^ (0x63 >> i);
            s |= (bit & 1) << i;
        }
        *out = s;
    }
    t
}

pub fn inv_sbox_oracle() -> [u8; 256] {
    let s = sbox_oracle();
    let mut t = [0u8; 256];
    for (i, &v) in s.iter().enumerate() {
        t[v as usize] = i as u8;
    }
    t
}

/// Chi-square goodness of fit against the uniform distribution.
pub fn uniform_p(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}

/// Chi-square test that two samples come from the same distribution.
pub fn two_sample_p(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (ka, kb) = ((nb as f64 / na as f64).sqrt(), (na as f64 / nb as f64).sqrt());
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        stat += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
        dof += 1;
    }
    ChiSquared::new((dof - 1) as f64).unwrap().sf(stat)
}

pub fn hex16(s: &str) -> [u8; 16] {
    let mut out = [0u8; 16];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).unwrap();
    }
    out
}
