//! AES-128 with a pluggable S-box datapath.
//!
//! State bytes are indexed column-major as in FIPS-197 (`i = 4 * col + row`).
//! Masked states hold three shares per byte in the layout of
//! [`crate::datapath`]; linear layers act on every share, round keys are added
//! to shares 0 and 1 only.

use serde::{Deserialize, Serialize};

use crate::datapath::{eval, ti::sbox_ti, Model, DatapathError, SboxOut};
use crate::fault::FaultSpec;
use crate::gf::{SBOX, INV_SBOX};
use crate::rng::{consumer, Rng};
use crate::tap::{ArmedFault, Tap};

pub type Block = [u8; 16];

const RCON: [u8; 10] = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36];

#[inline]
pub const fn xtime(x: u8) -> u8 {
    (x << 1) ^ (((x >> 7) & 1) * 0x1B)
}

/// Position a byte moves to under ShiftRows.
#[inline]
pub const fn shift_rows_pos(i: usize) -> usize {
    let (col, row) = (i / 4, i % 4);
    ((col + 4 - row) % 4) * 4 + row
}

pub fn shift_rows(s: &Block) -> Block {
    let mut o = [0u8; 16];
    for (i, &v) in s.iter().enumerate() {
        o[shift_rows_pos(i)] = v;
    }
    o
}

pub fn inv_shift_rows(s: &Block) -> Block {
    let mut o = [0u8; 16];
    for i in 0..16 {
        o[i] = s[shift_rows_pos(i)];
    }
    o
}

pub fn mix_column(c: [u8; 4]) -> [u8; 4] {
    let t = c[0] ^ c[1] ^ c[2] ^ c[3];
    std::array::from_fn(|i| c[i] ^ t ^ xtime(c[i] ^ c[(i + 1) % 4]))
}

pub fn inv_mix_column(c: [u8; 4]) -> [u8; 4] {
    let u = xtime(xtime(c[0] ^ c[2]));
    let v = xtime(xtime(c[1] ^ c[3]));
    mix_column([c[0] ^ u, c[1] ^ v, c[2] ^ u, c[3] ^ v])
}

pub fn mix_columns(s: &Block) -> Block {
    let mut o = [0u8; 16];
    for c in 0..4 {
        let m = mix_column([s[4 * c], s[4 * c + 1], s[4 * c + 2], s[4 * c + 3]]);
        o[4 * c..4 * c + 4].copy_from_slice(&m);
    }
    o
}

pub fn inv_mix_columns(s: &Block) -> Block {
    let mut o = [0u8; 16];
    for c in 0..4 {
        let m = inv_mix_column([s[4 * c], s[4 * c + 1], s[4 * c + 2], s[4 * c + 3]]);
        o[4 * c..4 * c + 4].copy_from_slice(&m);
    }
    o
}

fn xor_block(a: &mut Block, b: &Block) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

/// Plain FIPS-197 key expansion.
pub fn expand_key_plain(key: &Block) -> [Block; 11] {
    let mut rk = [[0u8; 16]; 11];
    rk[0] = *key;
    for r in 1..11 {
        let prev = rk[r - 1];
        let mut t = [prev[13], prev[14], prev[15], prev[12]].map(|b| SBOX[b as usize]);
        t[0] ^= RCON[r - 1];
        for w in 0..4 {
            for j in 0..4 {
                t[j] ^= prev[4 * w + j];
                rk[r][4 * w + j] = t[j];
            }
        }
    }
    rk
}

pub fn encrypt_reference(pt: &Block, key: &Block) -> Block {
    encrypt_with_schedule(pt, &expand_key_plain(key))
}

pub fn encrypt_with_schedule(pt: &Block, rk: &[Block; 11]) -> Block {
    let mut s = *pt;
    xor_block(&mut s, &rk[0]);
    for r in 1..11 {
        s = s.map(|b| SBOX[b as usize]);
        s = shift_rows(&s);
        if r < 10 {
            s = mix_columns(&s);
        }
        xor_block(&mut s, &rk[r]);
    }
    s
}

pub fn decrypt_reference(ct: &Block, key: &Block) -> Block {
    let rk = expand_key_plain(key);
    let mut s = *ct;
    for r in (1..11).rev() {
        xor_block(&mut s, &rk[r]);
        if r < 10 {
            s = inv_mix_columns(&s);
        }
        s = inv_shift_rows(&s);
        s = s.map(|b| INV_SBOX[b as usize]);
    }
    xor_block(&mut s, &rk[0]);
    s
}

/// Round keys in two shares; the RS share of every key byte is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundKeys {
    pub shares: [[Block; 2]; 11],
}

impl RoundKeys {
    pub fn combined(&self) -> [Block; 11] {
        std::array::from_fn(|r| std::array::from_fn(|i| self.shares[r][0][i] ^ self.shares[r][1][i]))
    }
}

/// Key expansion on two shares. The S-box of the schedule runs through the
/// three-share TI datapath with a fresh third share.
pub fn expand_key(key: &Block, rng: &mut Rng) -> RoundKeys {
    let mut sh = [[[0u8; 16]; 2]; 11];
    for i in 0..16 {
        let m = rng.byte();
        sh[0][0][i] = m;
        sh[0][1][i] = key[i] ^ m;
    }
    let mut tap = Tap::off();
    for r in 1..11 {
        let prev = sh[r - 1];
        let mut t = [[0u8; 4]; 2];
        for (j, src) in [13usize, 14, 15, 12].into_iter().enumerate() {
            let m = rng.byte();
            let o = sbox_ti([prev[0][src], prev[1][src] ^ m, m], rng, &mut tap);
            t[0][j] = o[0];
            t[1][j] = o[1] ^ o[2];
        }
        t[0][0] ^= RCON[r - 1];
        for w in 0..4 {
            for j in 0..4 {
                for s in 0..2 {
                    t[s][j] ^= prev[s][4 * w + j];
                    sh[r][s][4 * w + j] = t[s][j];
                }
            }
        }
    }
    RoundKeys { shares: sh }
}

/// Faults resolved against a model and grouped by S-box position.
#[derive(Clone, Debug, Default)]
pub struct FaultPlan {
    at: Vec<Vec<ArmedFault>>,
}

impl FaultPlan {
    pub fn none() -> FaultPlan {
        FaultPlan { at: vec![Vec::new(); 11 * 16] }
    }

    pub fn new(model: Model, specs: &[FaultSpec]) -> Result<FaultPlan, DatapathError> {
        let mut plan = FaultPlan::none();
        for s in specs {
            let armed = model.arm(s)?;
            plan.at[s.round * 16 + s.byte].push(armed);
        }
        Ok(plan)
    }

    #[inline]
    pub fn faults(&self, round: usize, byte: usize) -> &[ArmedFault] {
        &self.at[round * 16 + byte]
    }

    pub fn is_empty(&self) -> bool {
        self.at.iter().all(|v| v.is_empty())
    }
}

/// Number of leakage samples per trace for a model: the initial state
/// register, then per round one sample per S-box stage and one for the
/// state register.
pub fn leakage_len(model: Model) -> usize {
    1 + 10 * (model.stages() as usize + 1)
}

/// Outcome of a faulty encryption paired with its fault-free shadow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encryption {
    pub ciphertext: Block,
    pub reference: Block,
    pub fired: bool,
    /// Final RS/third share of the faulty run (zero for the focused engine).
    pub third_share: Block,
}

impl Encryption {
    pub fn effective(&self) -> bool {
        self.ciphertext != self.reference
    }
}

type Shares = [[u8; 3]; 16];

fn state_hw(s: &Shares) -> u32 {
    s.iter().flatten().map(|b| b.count_ones()).sum()
}

fn linear_layer(s: &Shares, mix: bool) -> Shares {
    let mut out = [[0u8; 3]; 16];
    for share in 0..3 {
        let mut b: Block = std::array::from_fn(|i| s[i][share]);
        b = shift_rows(&b);
        if mix {
            b = mix_columns(&b);
        }
        for i in 0..16 {
            out[i][share] = b[i];
        }
    }
    out
}

fn add_infection(s: &mut Shares, pos: usize, inf: &Option<[[u8; 2]; 4]>) {
    if let Some(inf) = inf {
        let col = shift_rows_pos(pos) / 4;
        for (row, j) in inf.iter().enumerate() {
            s[4 * col + row][0] ^= j[0];
            s[4 * col + row][1] ^= j[1];
        }
    }
}

fn add_round_key(s: &mut Shares, k: &[Block; 2]) {
    for i in 0..16 {
        s[i][0] ^= k[0][i];
        s[i][1] ^= k[1][i];
    }
}

/// Full masked encryption of one trace. The faulty run and its fault-free
/// shadow consume identical randomness; S-boxes are evaluated twice only
/// where a fault is armed or the two states already differ. With `leakage`
/// the faulty run's register Hamming weights are written there (length
/// [`leakage_len`]).
pub fn encrypt_masked(
    pt: &Block,
    keys: &RoundKeys,
    model: Model,
    plan: &FaultPlan,
    seed: u64,
    trace: u64,
    mut leakage: Option<&mut [u32]>,
) -> Encryption {
    let stages = model.stages() as usize;
    let mut split = Rng::substream(seed, consumer::STATE_SPLIT, trace);
    let mut faulty: Shares = std::array::from_fn(|i| model.split(pt[i], &mut split));
    add_round_key(&mut faulty, &keys.shares[0]);
    let mut shadow = faulty;
    if let Some(l) = leakage.as_deref_mut() {
        l.fill(0);
        l[0] = state_hw(&faulty);
    }
    let mut fired = false;
    for r in 1..11 {
        let base = 1 + (r - 1) * (stages + 1);
        let mut f_out = [SboxOut { out: [0; 3], infection: None }; 16];
        let mut s_out = f_out;
        for b in 0..16 {
            let faults = plan.faults(r, b);
            let rng = Rng::substream(seed, consumer::sbox(r, b), trace);
            if faults.is_empty() && faulty[b] == shadow[b] {
                let mut tap = Tap::off();
                if let Some(l) = leakage.as_deref_mut() {
                    tap = tap.leakage(&mut l[base..base + stages]);
                }
                f_out[b] = eval(model, faulty[b], &mut rng.clone(), &mut tap);
                s_out[b] = f_out[b];
            } else {
                s_out[b] = eval(model, shadow[b], &mut rng.clone(), &mut Tap::off());
                let mut frng = Rng::substream(seed, consumer::fault(r, b), trace);
                let mut tap = Tap::with_faults(faults, &mut frng);
                if let Some(l) = leakage.as_deref_mut() {
                    tap = tap.leakage(&mut l[base..base + stages]);
                }
                f_out[b] = eval(model, faulty[b], &mut rng.clone(), &mut tap);
                fired |= tap.fired();
            }
        }
        let mix = r < 10;
        faulty = linear_layer(&f_out.map(|o| o.out), mix);
        shadow = linear_layer(&s_out.map(|o| o.out), mix);
        for b in 0..16 {
            add_infection(&mut faulty, b, &f_out[b].infection);
            add_infection(&mut shadow, b, &s_out[b].infection);
        }
        add_round_key(&mut faulty, &keys.shares[r]);
        add_round_key(&mut shadow, &keys.shares[r]);
        if let Some(l) = leakage.as_deref_mut() {
            l[base + stages] = state_hw(&faulty);
        }
    }
    let combine = |s: &Shares| -> Block { std::array::from_fn(|i| s[i][0] ^ s[i][1] ^ s[i][2]) };
    Encryption {
        ciphertext: combine(&faulty),
        reference: combine(&shadow),
        fired,
        third_share: std::array::from_fn(|i| faulty[i][2]),
    }
}

/// Fast path for fault campaigns: plain AES everywhere except at S-box
/// positions with armed faults, where the byte is freshly shared and run
/// through the masked datapath. Distributionally equivalent to
/// [`encrypt_masked`] for outputs and effectiveness.
pub fn encrypt_focused(
    pt: &Block,
    rk: &[Block; 11],
    model: Model,
    plan: &FaultPlan,
    seed: u64,
    trace: u64,
) -> Encryption {
    let mut faulty = *pt;
    xor_block(&mut faulty, &rk[0]);
    let mut shadow = faulty;
    let mut fired = false;
    for r in 1..11 {
        let mut infections = [None; 16];
        let mut fs = [0u8; 16];
        for b in 0..16 {
            let faults = plan.faults(r, b);
            if faults.is_empty() {
                fs[b] = SBOX[faulty[b] as usize];
                continue;
            }
            let mut rng = Rng::substream(seed, consumer::sbox(r, b), trace);
            let input = model.split(faulty[b], &mut rng);
            let mut frng = Rng::substream(seed, consumer::fault(r, b), trace);
            let mut tap = Tap::with_faults(faults, &mut frng);
            let out = eval(model, input, &mut rng, &mut tap);
            fired |= tap.fired();
            fs[b] = out.value();
            infections[b] = out.infection;
        }
        let mix = r < 10;
        faulty = shift_rows(&fs);
        shadow = shift_rows(&shadow.map(|v| SBOX[v as usize]));
        if mix {
            faulty = mix_columns(&faulty);
            shadow = mix_columns(&shadow);
        }
        for (b, inf) in infections.iter().enumerate() {
            if let Some(inf) = inf {
                let col = shift_rows_pos(b) / 4;
                for (row, j) in inf.iter().enumerate() {
                    faulty[4 * col + row] ^= j[0] ^ j[1];
                }
            }
        }
        xor_block(&mut faulty, &rk[r]);
        xor_block(&mut shadow, &rk[r]);
    }
    Encryption {
        ciphertext: faulty,
        reference: shadow,
        fired,
        third_share: [0; 16],
    }
}

/// One encryption as written to trace files, one JSON object per line.
/// Field order: index, plaintext, ciphertext, reference, effective, fired,
/// leakage (optional).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub index: u64,
    #[serde(with = "hex::serde")]
    pub plaintext: Block,
    #[serde(with = "hex::serde")]
    pub ciphertext: Block,
    #[serde(with = "hex::serde")]
    pub reference: Block,
    pub effective: bool,
    pub fired: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage: Option<Vec<u32>>,
}

impl TraceRecord {
    pub fn new(index: u64, plaintext: Block, e: &Encryption, leakage: Option<Vec<u32>>) -> TraceRecord {
        TraceRecord {
            index,
            plaintext,
            ciphertext: e.ciphertext,
            reference: e.reference,
            effective: e.effective(),
            fired: e.fired,
            leakage,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace record serializes")
    }
}

pub fn parse_block(s: &str) -> Result<Block, hex::FromHexError> {
    let mut out = [0u8; 16];
    hex::decode_to_slice(s.trim(), &mut out)?;
    Ok(out)
}

pub fn block_hex(b: &Block) -> String {
    hex::encode_upper(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_rows_inverse() {
        let b: Block = std::array::from_fn(|i| i as u8);
        assert_eq!(inv_shift_rows(&shift_rows(&b)), b);
        assert_eq!(inv_mix_columns(&mix_columns(&b)), b);
        assert_eq!(shift_rows(&b)[0..4], [0, 5, 10, 15]);
    }

    #[test]
    fn mix_column_vector() {
        assert_eq!(mix_column([0xDB, 0x13, 0x53, 0x45]), [0x8E, 0x4D, 0xA1, 0xBC]);
    }
}
