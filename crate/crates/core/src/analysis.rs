//! Distributions, SEI key ranking, exact mutual information and brute-force
//! security checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::aes::{shift_rows_pos, Block};
use crate::gf::{gf256_mul_poly, INV_SBOX, SBOX};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("histogram is empty")]
    Empty,
    #[error("need at least {needed} samples, have {have}")]
    TooFewSamples { needed: u64, have: u64 },
    #[error("probability table has a negative entry at {0}")]
    NegativeEntry(usize),
    #[error("probability table sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("probability table must have {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; 256],
    n: u64,
}

impl Default for Histogram256 {
    fn default() -> Self {
        Histogram256 {
            counts: [0; 256],
            n: 0,
        }
    }
}

impl Histogram256 {
    pub fn new() -> Histogram256 {
        Histogram256::default()
    }

    pub fn from_counts(counts: [u64; 256]) -> Histogram256 {
        Histogram256 {
            n: counts.iter().sum(),
            counts,
        }
    }

    #[inline]
    pub fn add(&mut self, v: u8) {
        self.counts[v as usize] += 1;
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Histogram256) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
        self.n += other.n;
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn chi_square_uniform(&self) -> Result<ChiSquareResult, AnalysisError> {
        if self.n == 0 {
            return Err(AnalysisError::Empty);
        }
        Ok(chi_square_uniform(&self.counts))
    }
}

impl FromIterator<u8> for Histogram256 {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut h = Histogram256::new();
        for v in iter {
            h.add(v);
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of `counts` against the uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareResult {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let dof = counts.len() - 1;
    ChiSquareResult {
        statistic,
        dof,
        p_value: ChiSquared::new(dof as f64).expect("dof > 0").sf(statistic),
    }
}

/// Homogeneity test of two count vectors over the same bins.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareResult {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let ka = (nb as f64 / na as f64).sqrt();
    let kb = (na as f64 / nb as f64).sqrt();
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y > 0 {
            statistic += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
            bins += 1;
        }
    }
    let dof = bins.saturating_sub(1).max(1);
    ChiSquareResult {
        statistic,
        dof,
        p_value: ChiSquared::new(dof as f64).expect("dof > 0").sf(statistic),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeiResult {
    pub sei: f64,
    pub n: u64,
}

/// `sum (256 c_i - n)^2`; SEI is this over `(256 n)^2`. Exact, so equal
/// distributions produce equal scores and ties are real ties.
fn sei_numerator(counts: &[u64; 256], n: u64) -> u128 {
    counts
        .iter()
        .map(|&c| {
            let d = 256 * c as i128 - n as i128;
            (d * d) as u128
        })
        .sum()
}

fn sei_from_numerator(num: u128, n: u64) -> f64 {
    num as f64 / (256.0 * n as f64).powi(2)
}

/// Square Euclidean imbalance: `sum (c_i/n - 1/256)^2`.
pub fn sei(h: &Histogram256) -> Result<SeiResult, AnalysisError> {
    if h.n == 0 {
        return Err(AnalysisError::Empty);
    }
    Ok(SeiResult {
        sei: sei_from_numerator(sei_numerator(&h.counts, h.n), h.n),
        n: h.n,
    })
}

/// Key candidates sorted by descending score, ties broken by the lower key.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyRanking {
    pub n: u64,
    /// `(key, sei)` in rank order.
    pub scores: Vec<(u8, f64)>,
    #[serde(skip)]
    exact: Vec<u128>,
}

impl KeyRanking {
    fn from_hists(hists: &[[u64; 256]], n: u64) -> KeyRanking {
        let nums: Vec<u128> = hists.iter().map(|h| sei_numerator(h, n)).collect();
        let mut order: Vec<u8> = (0..=255).collect();
        order.sort_by(|&a, &b| nums[b as usize].cmp(&nums[a as usize]).then(a.cmp(&b)));
        KeyRanking {
            n,
            scores: order
                .iter()
                .map(|&k| (k, sei_from_numerator(nums[k as usize], n)))
                .collect(),
            exact: nums,
        }
    }

    /// 1-based rank of a candidate.
    pub fn rank_of(&self, key: u8) -> usize {
        self.scores.iter().position(|&(k, _)| k == key).expect("256 candidates") + 1
    }

    pub fn score_of(&self, key: u8) -> f64 {
        sei_from_numerator(self.exact[key as usize], self.n)
    }

    pub fn best(&self) -> u8 {
        self.scores[0].0
    }

    /// Highest score among all other candidates.
    pub fn max_other(&self, key: u8) -> f64 {
        self.scores
            .iter()
            .find(|&&(k, _)| k != key)
            .map(|&(_, s)| s)
            .expect("256 candidates")
    }

    /// True when the candidate strictly beats every other one.
    pub fn strictly_first(&self, key: u8) -> bool {
        let mine = self.exact[key as usize];
        self.exact
            .iter()
            .enumerate()
            .all(|(k, &v)| k == key as usize || v < mine)
    }

    pub fn all_tied(&self) -> bool {
        self.exact.iter().all(|&v| v == self.exact[0])
    }
}

/// How a key guess turns a ciphertext into the value whose bias is tested.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Target {
    /// `InvSbox(c[pos] ^ k)`: the input of a last-round S-box.
    SingleByte { pos: usize },
    /// Fault in the round-9 S-box at state byte `fault_byte`. The column it
    /// lands in is inverted through the last round and MixColumns; one key
    /// byte of the column (`guess`, 0..4) is guessed and the other three are
    /// taken from `known`. The value is the round-9 S-box output plus a
    /// constant.
    Column {
        fault_byte: usize,
        guess: usize,
        #[serde(with = "hex::serde")]
        known: Block,
    },
}

const INV_MC: [u8; 4] = [0x0E, 0x0B, 0x0D, 0x09];

impl Target {
    /// Column attack guessing the key byte on the faulted row.
    pub fn column(fault_byte: usize, last_round_key: Block) -> Target {
        Target::Column {
            fault_byte,
            guess: shift_rows_pos(fault_byte) % 4,
            known: last_round_key,
        }
    }

    /// Ciphertext position of the guessed key byte.
    pub fn key_position(&self) -> usize {
        match self {
            Target::SingleByte { pos } => *pos,
            Target::Column {
                fault_byte, guess, ..
            } => column_positions(*fault_byte)[*guess],
        }
    }

    /// Split a ciphertext into `(known part, guessed ciphertext byte, mul)`
    /// such that the value under guess `k` is `known ^ mul * InvSbox(c ^ k)`.
    #[inline]
    fn decompose(&self, ct: &Block) -> (u8, u8, u8) {
        match self {
            Target::SingleByte { pos } => (0, ct[*pos], 1),
            Target::Column {
                fault_byte,
                guess,
                known,
            } => {
                let row = shift_rows_pos(*fault_byte) % 4;
                let pos = column_positions(*fault_byte);
                let mut acc = 0u8;
                for i in 0..4 {
                    if i == *guess {
                        continue;
                    }
                    let u = INV_SBOX[(ct[pos[i]] ^ known[pos[i]]) as usize];
                    acc ^= gf256_mul_poly(INV_MC[(i + 4 - row) % 4], u);
                }
                (acc, ct[pos[*guess]], INV_MC[(*guess + 4 - row) % 4])
            }
        }
    }

    pub fn value(&self, ct: &Block, k: u8) -> u8 {
        let (known, c, m) = self.decompose(ct);
        known ^ gf256_mul_poly(m, INV_SBOX[(c ^ k) as usize])
    }
}

/// Ciphertext positions of the column hit by a round-9 fault at state byte
/// `fault_byte`, listed by row.
pub fn column_positions(fault_byte: usize) -> [usize; 4] {
    let col = shift_rows_pos(fault_byte) / 4;
    std::array::from_fn(|row| shift_rows_pos(4 * col + row))
}

fn mul_table(m: u8) -> [u8; 256] {
    std::array::from_fn(|v| gf256_mul_poly(m, INV_SBOX[v]))
}

/// Streaming per-candidate histograms for SIFA.
#[derive(Clone)]
pub struct SifaAccumulator {
    target: Target,
    table: [u8; 256],
    hists: Vec<[u64; 256]>,
    n: u64,
}

impl SifaAccumulator {
    pub fn new(target: Target) -> SifaAccumulator {
        let m = target.decompose(&[0; 16]).2;
        SifaAccumulator {
            target,
            table: mul_table(m),
            hists: vec![[0; 256]; 256],
            n: 0,
        }
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    #[inline]
    pub fn add(&mut self, ct: &Block) {
        let (known, c, _) = self.target.decompose(ct);
        for k in 0..256 {
            let v = known ^ self.table[(c ^ k as u8) as usize];
            self.hists[k][v as usize] += 1;
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &SifaAccumulator) {
        for (a, b) in self.hists.iter_mut().zip(&other.hists) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.n += other.n;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn histogram(&self, k: u8) -> Histogram256 {
        Histogram256::from_counts(self.hists[k as usize])
    }

    pub fn ranking(&self, min_samples: u64) -> Result<KeyRanking, AnalysisError> {
        if self.n < min_samples.max(1) {
            return Err(AnalysisError::TooFewSamples {
                needed: min_samples.max(1),
                have: self.n,
            });
        }
        Ok(KeyRanking::from_hists(&self.hists, self.n))
    }
}

/// SIFA ranking over ineffective ciphertexts.
pub fn sifa_rank(
    cts: &[Block],
    target: Target,
    min_samples: u64,
) -> Result<KeyRanking, AnalysisError> {
    let mut acc = SifaAccumulator::new(target);
    for c in cts {
        acc.add(c);
    }
    acc.ranking(min_samples)
}

/// Streaming per-candidate histograms of
/// `InvSbox(c ^ k) ^ InvSbox(c* ^ k)` at one ciphertext position.
#[derive(Clone)]
pub struct DiffAccumulator {
    pos: usize,
    hists: Vec<[u64; 256]>,
    n: u64,
}

impl DiffAccumulator {
    pub fn new(pos: usize) -> DiffAccumulator {
        DiffAccumulator {
            pos,
            hists: vec![[0; 256]; 256],
            n: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, correct: &Block, faulty: &Block) {
        let (c, f) = (correct[self.pos], faulty[self.pos]);
        for k in 0..256usize {
            let d = INV_SBOX[(c ^ k as u8) as usize] ^ INV_SBOX[(f ^ k as u8) as usize];
            self.hists[k][d as usize] += 1;
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &DiffAccumulator) {
        for (a, b) in self.hists.iter_mut().zip(&other.hists) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.n += other.n;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn ranking(&self, min_pairs: u64) -> Result<KeyRanking, AnalysisError> {
        if self.n < min_pairs.max(1) {
            return Err(AnalysisError::TooFewSamples {
                needed: min_pairs.max(1),
                have: self.n,
            });
        }
        Ok(KeyRanking::from_hists(&self.hists, self.n))
    }
}

/// Differential ranking over (correct, faulty) ciphertext pairs.
pub fn differential_rank(
    pairs: &[(Block, Block)],
    pos: usize,
    min_pairs: u64,
) -> Result<KeyRanking, AnalysisError> {
    let mut acc = DiffAccumulator::new(pos);
    for (c, f) in pairs {
        acc.add(c, f);
    }
    acc.ranking(min_pairs)
}

/// Absolute tolerance on the total mass of a probability table.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Mutual information in bits of a joint distribution given row-major as
/// `joint[x * 256 + z]`.
pub fn mutual_information_exact(joint: &[f64]) -> Result<f64, AnalysisError> {
    if joint.len() != 65536 {
        return Err(AnalysisError::Shape {
            expected: 65536,
            got: joint.len(),
        });
    }
    if let Some(i) = joint.iter().position(|&p| p < 0.0) {
        return Err(AnalysisError::NegativeEntry(i));
    }
    let total: f64 = joint.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(AnalysisError::NotNormalized(total));
    }
    let mut px = [0f64; 256];
    let mut pz = [0f64; 256];
    for x in 0..256 {
        for z in 0..256 {
            let p = joint[x * 256 + z];
            px[x] += p;
            pz[z] += p;
        }
    }
    let mut mi = 0.0;
    for x in 0..256 {
        for z in 0..256 {
            let p = joint[x * 256 + z];
            if p > 0.0 {
                mi += p * (p / (px[x] * pz[z])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

/// Upper edge of SEI for `n` uniform draws at the given tail probability.
pub fn uniform_sei_envelope(n: u64, tail: f64) -> f64 {
    let q = ChiSquared::new(255.0).expect("dof").inverse_cdf(1.0 - tail);
    q / (256.0 * n as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub items: Vec<CheckItem>,
    /// Mutual information `MI(X1; X2)` of the coupling for every key offset.
    pub coupling_mi: Vec<f64>,
    /// SEI of the difference distribution for every key offset.
    pub delta_sei: Vec<f64>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

/// Tolerance for "exactly zero" information.
pub const MI_ZERO: f64 = 1e-12;
/// Minimum information a biased mask must leak.
pub const MI_LEAK: f64 = 1e-3;

fn xor_mask_mi(px: &[f64; 256], pr: &[f64; 256]) -> f64 {
    let mut joint = vec![0f64; 65536];
    for x in 0..256 {
        for r in 0..256 {
            joint[x * 256 + (x ^ r)] += px[x] * pr[r];
        }
    }
    mutual_information_exact(&joint).expect("well-formed table")
}

/// A non-uniform secret: `P(x)` proportional to `x + 1`.
fn skewed_secret() -> [f64; 256] {
    let s: f64 = (1..=256).map(|v| v as f64).sum();
    std::array::from_fn(|x| (x + 1) as f64 / s)
}

/// Mask distributions used against the masking lemma.
pub fn biased_masks() -> Vec<(&'static str, [f64; 256])> {
    let mut half = [0f64; 256];
    half[..128].fill(1.0 / 128.0);
    let mut spike = [0.5 / 255.0; 256];
    spike[0] = 0.5;
    let sq: f64 = (1..=256).map(|v| (v * v) as f64).sum();
    let quad = std::array::from_fn(|r| ((r + 1) * (r + 1)) as f64 / sq);
    let mut zero = [0f64; 256];
    zero[0] = 1.0;
    vec![
        ("top bit stuck at 0", half),
        ("half the mass on 0", spike),
        ("quadratic ramp", quad),
        ("constant 0", zero),
    ]
}

/// Correct/faulty ciphertext-byte pairs of a last-round S-box whose input
/// bit 0 is stuck at 0, restricted to effective faults (odd inputs).
pub fn stuck_at_coupling() -> Vec<(u8, u8)> {
    (0..=255u8)
        .filter(|x| x & 1 == 1)
        .map(|x| (SBOX[x as usize], SBOX[(x & 0xFE) as usize]))
        .collect()
}

/// Exact brute-force checks of the masking lemma and of how a fault
/// coupling looks under every key hypothesis.
pub fn theorem_checks() -> TheoremReport {
    let mut items = Vec::new();
    let px = skewed_secret();

    let uniform = [1.0 / 256.0; 256];
    let mi = xor_mask_mi(&px, &uniform);
    items.push(CheckItem {
        name: "uniform mask hides the secret".into(),
        passed: mi < MI_ZERO,
        detail: format!("MI = {mi:.3e} bits"),
    });
    for (name, pr) in biased_masks() {
        let mi = xor_mask_mi(&px, &pr);
        let mut passed = mi >= MI_LEAK;
        let mut detail = format!("MI = {mi:.6} bits");
        if name == "constant 0" {
            let h = entropy_bits(&px);
            passed &= (mi - h).abs() < 1e-9;
            detail.push_str(&format!(", H(X) = {h:.6}"));
        }
        items.push(CheckItem {
            name: format!("biased mask leaks ({name})"),
            passed,
            detail,
        });
    }

    let pairs = stuck_at_coupling();
    let n = pairs.len() as u64;
    let w = 1.0 / pairs.len() as f64;
    let mut delta_sei = Vec::with_capacity(256);
    let mut coupling_mi = Vec::with_capacity(256);
    let mut deficit = Vec::with_capacity(256);
    for k in 0..=255u8 {
        let mut h = Histogram256::new();
        let mut joint = vec![0f64; 65536];
        for &(c1, c2) in &pairs {
            let x1 = INV_SBOX[(c1 ^ k) as usize];
            let x2 = INV_SBOX[(c2 ^ k) as usize];
            h.add(x1 ^ x2);
            joint[x1 as usize * 256 + x2 as usize] += w;
        }
        delta_sei.push(sei(&h).expect("non-empty").sei);
        let pd: Vec<f64> = h.counts().iter().map(|&c| c as f64 / n as f64).collect();
        deficit.push(8.0 - entropy_bits(&pd));
        coupling_mi.push(mutual_information_exact(&joint).expect("well-formed"));
    }
    let env = uniform_sei_envelope(n, 1e-3);
    let worst = (1..256).map(|k| delta_sei[k]).fold(0.0, f64::max);
    items.push(CheckItem {
        name: "difference uniform for every wrong key".into(),
        passed: worst <= env,
        detail: format!("max SEI over 255 wrong keys {worst:.5} <= envelope {env:.5} (n = {n})"),
    });
    items.push(CheckItem {
        name: "difference biased for the right key".into(),
        passed: delta_sei[0] > env,
        detail: format!("SEI {:.5}", delta_sei[0]),
    });
    let worst_def = (1..256).map(|k| deficit[k]).fold(0.0, f64::max);
    items.push(CheckItem {
        name: "difference entropy deficit peaks at the right key only".into(),
        passed: (1..256).all(|k| deficit[k] < deficit[0]),
        detail: format!(
            "deficit {:.4} bits at the right key, at most {worst_def:.4} elsewhere",
            deficit[0]
        ),
    });
    let spread = coupling_mi.iter().fold(0.0f64, |m, &v| m.max((v - coupling_mi[0]).abs()));
    items.push(CheckItem {
        name: "MI(X1; X2) is the same under every key guess".into(),
        passed: spread < 1e-9,
        detail: format!("MI = {:.6} bits, spread {spread:.1e}", coupling_mi[0]),
    });
    TheoremReport {
        items,
        coupling_mi,
        delta_sei,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sei_extremes() {
        let flat = Histogram256::from_counts([4; 256]);
        assert_eq!(sei(&flat).unwrap().sei, 0.0);
        let mut point = [0; 256];
        point[7] = 1000;
        let s = sei(&Histogram256::from_counts(point)).unwrap().sei;
        assert!((s - 255.0 / 256.0).abs() < 1e-15);
        assert_eq!(sei(&Histogram256::new()), Err(AnalysisError::Empty));
    }

    #[test]
    fn sei_is_permutation_invariant() {
        let h: Histogram256 = (0..5000u32).map(|i| (i * i % 251) as u8).collect();
        let g: Histogram256 = (0..5000u32).map(|i| (i * i % 251) as u8 ^ 0x3C).collect();
        assert_eq!(sei(&h).unwrap().sei, sei(&g).unwrap().sei);
    }

    #[test]
    fn column_positions_follow_shift_rows() {
        assert_eq!(column_positions(0), [0, 13, 10, 7]);
        assert_eq!(column_positions(5), [0, 13, 10, 7]);
        let t = Target::column(5, [0; 16]);
        assert_eq!(t.key_position(), 13);
    }

    #[test]
    fn mi_basics() {
        let mut ind = vec![1.0 / 65536.0; 65536];
        assert!(mutual_information_exact(&ind).unwrap().abs() < 1e-12);
        let mut id = vec![0.0; 65536];
        for x in 0..256 {
            id[x * 256 + x] = 1.0 / 256.0;
        }
        assert!((mutual_information_exact(&id).unwrap() - 8.0).abs() < 1e-12);
        ind[3] = -1.0;
        assert_eq!(mutual_information_exact(&ind), Err(AnalysisError::NegativeEntry(3)));
        assert!(matches!(
            mutual_information_exact(&[0.5; 65536]),
            Err(AnalysisError::NotNormalized(_))
        ));
    }

    #[test]
    fn theorem_report_passes() {
        let r = theorem_checks();
        for i in &r.items {
            assert!(i.passed, "{}: {}", i.name, i.detail);
        }
        assert_eq!(r.items.len(), 9);
    }
}
