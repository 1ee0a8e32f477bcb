//! Simulated Hamming-weight leakage and Welch's t-test.

use std::ops::ControlFlow;
use std::sync::atomic::AtomicBool;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::aes::{encrypt_masked, expand_key, expand_key_plain, leakage_len, Block, FaultPlan};
use crate::datapath::Model;
use crate::gf::SBOX;
use crate::par::drive;
use crate::rng::{consumer, Rng};

/// TVLA detection threshold on |t|.
pub const T_THRESHOLD: f64 = 4.5;

/// Single-pass mean and variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    pub fn add(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Per-sample accumulators for one set of traces.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSet {
    acc: Vec<Welford>,
}

impl TraceSet {
    pub fn new(samples: usize) -> TraceSet {
        TraceSet {
            acc: vec![Welford::default(); samples],
        }
    }

    pub fn from_traces<'a>(traces: impl IntoIterator<Item = &'a [f64]>) -> TraceSet {
        let mut it = traces.into_iter().peekable();
        let len = it.peek().map_or(0, |t| t.len());
        let mut s = TraceSet::new(len);
        for t in it {
            s.add(t);
        }
        s
    }

    pub fn add(&mut self, trace: &[f64]) {
        assert_eq!(trace.len(), self.acc.len(), "trace length");
        for (a, &x) in self.acc.iter_mut().zip(trace) {
            a.add(x);
        }
    }

    pub fn merge(&mut self, o: &TraceSet) {
        for (a, b) in self.acc.iter_mut().zip(&o.acc) {
            a.merge(b);
        }
    }

    pub fn len(&self) -> u64 {
        self.acc.first().map_or(0, |a| a.n)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn samples(&self) -> usize {
        self.acc.len()
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LeakageError {
    #[error("set {set} has {n} traces, need at least 2")]
    TooFewTraces { set: char, n: u64 },
    #[error("trace sets have {a} and {b} samples")]
    Shape { a: usize, b: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TTestReport {
    pub t: Vec<f64>,
    pub max_abs_t: f64,
    pub n_a: u64,
    pub n_b: u64,
    /// Samples where both sets have zero variance; their t is reported as 0.
    pub degenerate: Vec<usize>,
    pub threshold: f64,
}

impl TTestReport {
    pub fn leaks(&self) -> bool {
        self.max_abs_t > self.threshold
    }
}

pub fn welch_t(a: &TraceSet, b: &TraceSet) -> Result<TTestReport, LeakageError> {
    if a.samples() != b.samples() {
        return Err(LeakageError::Shape {
            a: a.samples(),
            b: b.samples(),
        });
    }
    if a.len() < 2 {
        return Err(LeakageError::TooFewTraces { set: 'A', n: a.len() });
    }
    if b.len() < 2 {
        return Err(LeakageError::TooFewTraces { set: 'B', n: b.len() });
    }
    let mut t = Vec::with_capacity(a.samples());
    let mut degenerate = Vec::new();
    for (i, (x, y)) in a.acc.iter().zip(&b.acc).enumerate() {
        let se = x.variance() / x.n as f64 + y.variance() / y.n as f64;
        if se == 0.0 {
            degenerate.push(i);
            t.push(0.0);
        } else {
            t.push((x.mean - y.mean) / se.sqrt());
        }
    }
    let max_abs_t = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(TTestReport {
        t,
        max_abs_t,
        n_a: a.len(),
        n_b: b.len(),
        degenerate,
        threshold: T_THRESHOLD,
    })
}

/// How traces are split into the two sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Partition {
    /// One bit of the unmasked output of the S-box at `(round, byte)`.
    SboxOutputBit { round: usize, byte: usize, bit: u8 },
    /// A coin per trace picks the fixed plaintext (set A) or a random one.
    FixedVsRandom {
        #[serde(with = "hex::serde")]
        fixed: Block,
    },
}

impl Default for Partition {
    fn default() -> Self {
        Partition::SboxOutputBit {
            round: 1,
            byte: 0,
            bit: 0,
        }
    }
}

/// Unmasked output of the S-box at `(round, byte)`.
pub fn sbox_output(pt: &Block, rk: &[Block; 11], round: usize, byte: usize) -> u8 {
    let mut s = *pt;
    for i in 0..16 {
        s[i] ^= rk[0][i];
    }
    for r in 1..round {
        s = s.map(|b| SBOX[b as usize]);
        s = crate::aes::shift_rows(&s);
        s = crate::aes::mix_columns(&s);
        for i in 0..16 {
            s[i] ^= rk[r][i];
        }
    }
    SBOX[s[byte] as usize]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvlaParams {
    pub model: Model,
    #[serde(with = "hex::serde")]
    pub key: Block,
    pub traces: u64,
    pub sigma: f64,
    #[serde(default)]
    pub partition: Partition,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TvlaOutcome {
    pub report: TTestReport,
    pub traces: u64,
    pub truncated: bool,
}

/// Noisy leakage trace and set membership for one encryption.
pub fn leak_trace(p: &TvlaParams, keys: &crate::aes::RoundKeys, rk: &[Block; 11], i: u64) -> (Vec<f64>, bool) {
    let mut pt = [0u8; 16];
    Rng::substream(p.seed, consumer::PLAINTEXT, i).fill(&mut pt);
    let in_a = match &p.partition {
        Partition::SboxOutputBit { round, byte, bit } => {
            sbox_output(&pt, rk, *round, *byte) >> bit & 1 == 1
        }
        Partition::FixedVsRandom { fixed } => {
            let a = Rng::substream(p.seed, consumer::PARTITION, i).bits(1) == 1;
            if a {
                pt = *fixed;
            }
            a
        }
    };
    let mut hw = vec![0u32; leakage_len(p.model)];
    encrypt_masked(&pt, keys, p.model, &FaultPlan::none(), p.seed, i, Some(&mut hw));
    let mut noise = Rng::substream(p.seed, consumer::NOISE, i);
    let dist = Normal::new(0.0, p.sigma).expect("finite sigma");
    let trace = hw
        .iter()
        .map(|&h| h as f64 + if p.sigma > 0.0 { dist.sample(&mut noise) } else { 0.0 })
        .collect();
    (trace, in_a)
}

pub fn tvla_campaign(p: &TvlaParams, stop: Option<&AtomicBool>) -> Result<TvlaOutcome, LeakageError> {
    let keys = expand_key(&p.key, &mut Rng::substream(p.seed, consumer::KEY_SCHEDULE, 0));
    let rk = expand_key_plain(&p.key);
    let len = leakage_len(p.model);
    let mut a = TraceSet::new(len);
    let mut b = TraceSet::new(len);
    let (done, truncated) = drive(
        p.traces,
        stop,
        |i| leak_trace(p, &keys, &rk, i),
        |_, (trace, in_a)| {
            if in_a {
                a.add(&trace);
            } else {
                b.add(&trace);
            }
            ControlFlow::Continue(())
        },
    );
    Ok(TvlaOutcome {
        report: welch_t(&a, &b)?,
        traces: done,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[f64]]) -> TraceSet {
        TraceSet::from_traces(rows.iter().copied())
    }

    #[test]
    fn identical_sets_give_zero() {
        let a = set(&[&[1.0, 2.0], &[3.0, 5.0], &[2.0, 2.0]]);
        let r = welch_t(&a, &a.clone()).unwrap();
        assert!(r.t.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn zero_variance_is_flagged() {
        let a = set(&[&[0.0], &[0.0]]);
        let b = set(&[&[1.0], &[1.0]]);
        let r = welch_t(&a, &b).unwrap();
        assert_eq!(r.degenerate, vec![0]);
        assert_eq!(r.t, vec![0.0]);
    }

    #[test]
    fn swap_negates() {
        let a = set(&[&[1.0], &[2.0], &[4.0]]);
        let b = set(&[&[0.0], &[1.5], &[1.0], &[2.5]]);
        let ab = welch_t(&a, &b).unwrap();
        let ba = welch_t(&b, &a).unwrap();
        assert_eq!(ab.t[0], -ba.t[0]);
        let m = (7.0 / 3.0 - 5.0 / 4.0) / ((7.0f64 / 3.0 / 3.0) + (1.0833333333333333 / 4.0)).sqrt();
        assert!((ab.t[0] - m).abs() < 1e-12);
    }

    #[test]
    fn too_few() {
        let a = set(&[&[1.0]]);
        let b = set(&[&[1.0], &[2.0]]);
        assert!(matches!(welch_t(&a, &b), Err(LeakageError::TooFewTraces { set: 'A', .. })));
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.5).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.add(x));
        let mut l = Welford::default();
        let mut r = Welford::default();
        xs[..333].iter().for_each(|&x| l.add(x));
        xs[333..].iter().for_each(|&x| r.add(x));
        l.merge(&r);
        assert_eq!(l.n, all.n);
        assert!((l.mean - all.mean).abs() < 1e-12);
        assert!((l.variance() - all.variance()).abs() < 1e-9);
    }

    #[test]
    fn sbox_output_round_one() {
        let rk = expand_key_plain(&[0x2B; 16]);
        let pt = [0x11; 16];
        assert_eq!(sbox_output(&pt, &rk, 1, 3), SBOX[0x11 ^ 0x2B]);
    }
}
