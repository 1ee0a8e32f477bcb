//! Campaign configuration, deterministic runners and artifact rendering.
//!
//! Every runner walks trace indices in order and derives all randomness from
//! `(seed, consumer, index)`, so results do not depend on the worker count.

use std::fmt::{self, Write as _};
use std::ops::ControlFlow;
use std::sync::atomic::AtomicBool;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aes::{encrypt_focused, encrypt_masked, expand_key, expand_key_plain, shift_rows_pos, Block, Encryption, FaultPlan};
use crate::analysis::{column_positions, DiffAccumulator, Histogram256, KeyRanking, SifaAccumulator, Target};
use crate::datapath::{eval, DatapathError, Model};
use crate::fault::{FaultKind, FaultSpec};
use crate::leakage::{tvla_campaign, LeakageError, Partition, TTestReport, TvlaParams, T_THRESHOLD};
use crate::par::drive;
use crate::rng::{consumer, Rng};
use crate::tap::{ArmedFault, Tap};

pub const TOOL: &str = "rsmask";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed block or a fresh uniform draw.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlockPolicy {
    #[default]
    Random,
    Fixed(Block),
}

impl Serialize for BlockPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BlockPolicy::Random => s.serialize_str("random"),
            BlockPolicy::Fixed(b) => s.serialize_str(&hex::encode(b)),
        }
    }
}

impl<'de> Deserialize<'de> for BlockPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "random" {
            return Ok(BlockPolicy::Random);
        }
        let mut b = [0u8; 16];
        hex::decode_to_slice(&s, &mut b)
            .map_err(|e| serde::de::Error::custom(format!("expected \"random\" or 32 hex digits: {e}")))?;
        Ok(BlockPolicy::Fixed(b))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Plain AES except at faulted S-boxes.
    #[default]
    Focused,
    /// Every S-box through the masked datapath.
    Full,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// Undo the last round and InvMixColumns to reach the faulted byte;
    /// one key byte is guessed, the other three of the column are known.
    #[default]
    Column,
    /// InvSbox of one ciphertext byte.
    SingleByte,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Uniformity is accepted when the chi-square p-value exceeds this.
    #[serde(default = "default_chi_p")]
    pub chi_square_p: f64,
    #[serde(default = "default_t")]
    pub tvla_t: f64,
    /// Fewer analysed samples than this raises a warning.
    #[serde(default = "default_min_samples")]
    pub min_samples: u64,
}

fn default_chi_p() -> f64 {
    1e-3
}
fn default_t() -> f64 {
    T_THRESHOLD
}
fn default_min_samples() -> u64 {
    100
}
fn default_model() -> Model {
    Model::Ti
}
fn default_traces() -> u64 {
    10_000
}
fn default_sigma() -> f64 {
    1.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            chi_square_p: default_chi_p(),
            tvla_t: default_t(),
            min_samples: default_min_samples(),
        }
    }
}

/// JSON campaign description. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default = "default_model")]
    pub model: Model,
    /// Models compared by the infective command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<Model>>,
    #[serde(default)]
    pub key: BlockPolicy,
    #[serde(default)]
    pub plaintext: BlockPolicy,
    /// Faults to inject; omitted means the command's default fault.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faults: Option<Vec<FaultSpec>>,
    /// sifa: ineffective ciphertexts; infective: effective pairs per model;
    /// distribution: samples per histogram; tvla: traces.
    #[serde(default = "default_traces")]
    pub traces: u64,
    /// Cap on encryptions spent collecting `traces` samples
    /// (default 100 per requested sample).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_encryptions: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default)]
    pub target: TargetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub partition: Partition,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields default")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Datapath(#[from] DatapathError),
    #[error("{0}")]
    Invalid(String),
}

impl CampaignConfig {
    pub fn from_json(s: &str) -> Result<CampaignConfig, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn resolved_key(&self) -> Block {
        match self.key {
            BlockPolicy::Fixed(k) => k,
            BlockPolicy::Random => {
                let mut k = [0u8; 16];
                Rng::substream(self.seed, consumer::KEY, 0).fill(&mut k);
                k
            }
        }
    }

    pub fn plaintext(&self, trace: u64) -> Block {
        match self.plaintext {
            BlockPolicy::Fixed(p) => p,
            BlockPolicy::Random => {
                let mut p = [0u8; 16];
                Rng::substream(self.seed, consumer::PLAINTEXT, trace).fill(&mut p);
                p
            }
        }
    }

    pub fn encryption_cap(&self) -> u64 {
        self.max_encryptions.unwrap_or(self.traces.saturating_mul(100))
    }

    /// Checkpoints at or below `traces`, ending with `traces`.
    pub fn checkpoint_list(&self) -> Vec<u64> {
        let mut v: Vec<u64> = match &self.checkpoints {
            Some(c) => c.iter().copied().filter(|&n| n > 0 && n < self.traces).collect(),
            None => std::iter::successors(Some(250u64), |n| n.checked_mul(2))
                .take_while(|&n| n < self.traces)
                .collect(),
        };
        v.push(self.traces);
        v
    }

    fn faults_or(&self, default: Vec<FaultSpec>) -> Vec<FaultSpec> {
        self.faults.clone().unwrap_or(default)
    }

    fn check_common(&self) -> Result<(), ConfigError> {
        if self.traces == 0 {
            return Err(ConfigError::Invalid("traces must be positive".into()));
        }
        if let Some(c) = &self.checkpoints {
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::Invalid("checkpoints must be strictly increasing".into()));
            }
        }
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.chi_square_p) || t.tvla_t.is_nan() || t.tvla_t <= 0.0 {
            return Err(ConfigError::Invalid("thresholds out of range".into()));
        }
        Ok(())
    }
}

/// Default fault for SIFA and distribution runs: stuck-at-1 on a GF(2^2)
/// product of the main inverter, in the round-9 S-box at byte 0.
pub fn default_sifa_fault(model: Model) -> FaultSpec {
    FaultSpec::new(model.default_sifa_node(), FaultKind::StuckAt1, 9, 0)
}

/// Default fault for the differential comparison: a single bit flip on a
/// register between the mapping and the main inverter, round 9, byte 0.
pub fn default_differential_fault() -> FaultSpec {
    FaultSpec::new("map.b_hi.s0", FaultKind::BitFlip(1), 9, 0)
}

/// Generated file with a reproducibility header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub truncated: bool,
}

impl Provenance {
    pub fn new(cfg: &CampaignConfig, truncated: bool) -> Provenance {
        Provenance {
            tool: TOOL,
            version: VERSION,
            config_sha256: cfg.hash(),
            seed: cfg.seed,
            truncated,
        }
    }

    pub fn csv(&self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Artifact {
        let mut body = format!(
            "# {} {}\n# config-sha256 {}\n# seed {}\n",
            self.tool, self.version, self.config_sha256, self.seed
        );
        if self.truncated {
            body.push_str("# truncated\n");
        }
        body.push_str(header);
        body.push('\n');
        for r in rows {
            body.push_str(&r);
            body.push('\n');
        }
        Artifact {
            name: name.to_string(),
            body,
        }
    }

    pub fn json<T: Serialize>(&self, name: &str, summary: &T) -> Artifact {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            provenance: &'a Provenance,
            #[serde(flatten)]
            summary: &'a T,
        }
        let mut body = serde_json::to_string_pretty(&Wrapped {
            provenance: self,
            summary,
        })
        .expect("summary serializes");
        body.push('\n');
        Artifact {
            name: name.to_string(),
            body,
        }
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6e}")
}

fn histogram_rows(cols: &[&Histogram256]) -> Vec<String> {
    (0..256)
        .map(|v| {
            let mut r = v.to_string();
            for h in cols {
                write!(r, ",{}", h.counts()[v]).unwrap();
            }
            r
        })
        .collect()
}

fn ranking_rows(prefix: &str, r: &KeyRanking) -> Vec<String> {
    r.scores
        .iter()
        .enumerate()
        .map(|(i, (k, s))| format!("{prefix}{},{k},{}", i + 1, fmt_f(*s)))
        .collect()
}

/// Encryption source shared by the fault runners.
struct Oracle<'a> {
    cfg: &'a CampaignConfig,
    model: Model,
    plan: FaultPlan,
    rk: [Block; 11],
    masked: Option<crate::aes::RoundKeys>,
}

impl<'a> Oracle<'a> {
    fn new(cfg: &'a CampaignConfig, model: Model, specs: &[FaultSpec]) -> Result<Oracle<'a>, ConfigError> {
        let plan = FaultPlan::new(model, specs)?;
        let key = cfg.resolved_key();
        let masked = match cfg.engine {
            Engine::Full => Some(expand_key(&key, &mut Rng::substream(cfg.seed, consumer::KEY_SCHEDULE, 0))),
            Engine::Focused => None,
        };
        Ok(Oracle {
            cfg,
            model,
            plan,
            rk: expand_key_plain(&key),
            masked,
        })
    }

    fn encrypt(&self, i: u64) -> Encryption {
        let pt = self.cfg.plaintext(i);
        match &self.masked {
            Some(keys) => encrypt_masked(&pt, keys, self.model, &self.plan, self.cfg.seed, i, None),
            None => encrypt_focused(&pt, &self.rk, self.model, &self.plan, self.cfg.seed, i),
        }
    }
}

fn attack_target(cfg: &CampaignConfig, specs: &[FaultSpec], k10: Block) -> Target {
    let (round, byte) = specs.first().map_or((9, 0), |s| (s.round, s.byte));
    match (cfg.target, round) {
        (TargetKind::Column, _) => Target::column(byte, k10),
        (TargetKind::SingleByte, 10) => Target::SingleByte {
            pos: shift_rows_pos(byte),
        },
        (TargetKind::SingleByte, _) => Target::SingleByte {
            pos: column_positions(byte)[0],
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: u64,
    pub encryptions: u64,
    pub sei_correct: f64,
    pub sei_max_wrong: f64,
    pub rank: usize,
}

fn curve_point(r: &KeyRanking, key: u8, encryptions: u64) -> CurvePoint {
    CurvePoint {
        n: r.n,
        encryptions,
        sei_correct: r.score_of(key),
        sei_max_wrong: r.max_other(key),
        rank: if r.strictly_first(key) { 1 } else { r.rank_of(key).max(2) },
    }
}

/// Smallest checkpoint from which the true key stays strictly first.
fn sustained_from(curve: &[CurvePoint]) -> Option<u64> {
    let tail = curve.iter().rev().take_while(|p| p.rank == 1).count();
    (tail > 0).then(|| curve[curve.len() - tail].n)
}

#[derive(Clone, Debug, Serialize)]
pub struct SifaReport {
    pub model: Model,
    pub faults: Vec<FaultSpec>,
    pub key_position: usize,
    pub key_byte: u8,
    pub ineffective: u64,
    pub effective: u64,
    pub encryptions: u64,
    pub rank: Option<usize>,
    pub sustained_rank1_from: Option<u64>,
    pub all_keys_tied: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
    #[serde(skip)]
    pub ranking: Option<KeyRanking>,
    /// Target value under the true key for ineffective ciphertexts.
    #[serde(skip)]
    pub correct_hist: Histogram256,
    /// Target value under the true key for effective (faulty) ciphertexts.
    #[serde(skip)]
    pub faulty_hist: Histogram256,
    #[serde(skip)]
    pub truncated: bool,
}

pub fn run_sifa(cfg: &CampaignConfig, stop: Option<&AtomicBool>) -> Result<SifaReport, ConfigError> {
    cfg.check_common()?;
    let specs = cfg.faults_or(vec![default_sifa_fault(cfg.model)]);
    let oracle = Oracle::new(cfg, cfg.model, &specs)?;
    let target = attack_target(cfg, &specs, oracle.rk[10]);
    let kp = target.key_position();
    let key = oracle.rk[10][kp];
    let checkpoints = cfg.checkpoint_list();
    let mut acc = SifaAccumulator::new(target.clone());
    let mut correct_hist = Histogram256::new();
    let mut faulty_hist = Histogram256::new();
    let mut curve = Vec::new();
    let mut next_cp = 0;
    let (used, truncated) = drive(
        cfg.encryption_cap(),
        stop,
        |i| oracle.encrypt(i),
        |i, e| {
            if e.effective() {
                faulty_hist.add(target.value(&e.ciphertext, key));
                return ControlFlow::Continue(());
            }
            acc.add(&e.ciphertext);
            correct_hist.add(target.value(&e.ciphertext, key));
            if acc.n() == checkpoints[next_cp] {
                let r = acc.ranking(1).expect("nonempty");
                curve.push(curve_point(&r, key, i + 1));
                next_cp += 1;
                if next_cp == checkpoints.len() {
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        },
    );
    let mut warnings = Vec::new();
    if acc.n() < cfg.traces {
        warnings.push(format!(
            "collected {} of {} ineffective ciphertexts in {} encryptions",
            acc.n(),
            cfg.traces,
            used
        ));
    }
    if acc.n() < cfg.thresholds.min_samples {
        warnings.push(format!("only {} ineffective ciphertexts; ranking is unreliable", acc.n()));
    }
    let ranking = acc.ranking(1).ok();
    if let (Some(r), Some(last)) = (&ranking, curve.last()) {
        if last.n != r.n {
            curve.push(curve_point(r, key, used));
        }
    } else if let Some(r) = &ranking {
        curve.push(curve_point(r, key, used));
    }
    Ok(SifaReport {
        model: cfg.model,
        faults: specs,
        key_position: kp,
        key_byte: key,
        ineffective: acc.n(),
        effective: used - acc.n(),
        encryptions: used,
        rank: ranking.as_ref().map(|r| if r.strictly_first(key) { 1 } else { r.rank_of(key).max(2) }),
        sustained_rank1_from: sustained_from(&curve),
        all_keys_tied: ranking.as_ref().is_some_and(|r| r.all_tied()),
        warnings,
        curve,
        ranking,
        correct_hist,
        faulty_hist,
        truncated,
    })
}

impl SifaReport {
    pub fn artifacts(&self, cfg: &CampaignConfig) -> Vec<Artifact> {
        let p = Provenance::new(cfg, self.truncated);
        let mut out = vec![
            p.csv(
                "sei_curve.csv",
                "n,encryptions,sei_correct,sei_max_wrong,rank",
                self.curve.iter().map(|c| {
                    format!("{},{},{},{},{}", c.n, c.encryptions, fmt_f(c.sei_correct), fmt_f(c.sei_max_wrong), c.rank)
                }),
            ),
            p.csv(
                "histograms.csv",
                "value,ineffective_correct,effective_faulty",
                histogram_rows(&[&self.correct_hist, &self.faulty_hist]),
            ),
        ];
        if let Some(r) = &self.ranking {
            out.push(p.csv("key_ranking.csv", "rank,key,sei", ranking_rows("", r)));
        }
        out.push(p.json("summary.json", self));
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributionReport {
    pub model: Model,
    pub faults: Vec<FaultSpec>,
    pub evaluations: u64,
    pub faulty_n: u64,
    pub correct_n: u64,
    pub faulty_p: Option<f64>,
    pub correct_p: Option<f64>,
    pub faulty_uniform: Option<bool>,
    pub correct_uniform: Option<bool>,
    /// Faulty S-box outputs of effective evaluations.
    #[serde(skip)]
    pub faulty_hist: Histogram256,
    /// Correct S-box outputs of ineffective evaluations.
    #[serde(skip)]
    pub correct_hist: Histogram256,
    #[serde(skip)]
    pub truncated: bool,
}

/// One S-box evaluation with its fault-free shadow: (correct, faulty).
pub fn sample_sbox(model: Model, faults: &[ArmedFault], seed: u64, i: u64) -> (u8, u8) {
    let mut rng = Rng::substream(seed, consumer::SAMPLER, i);
    let x = rng.byte();
    let input = model.split(x, &mut rng);
    let correct = eval(model, input, &mut rng.clone(), &mut Tap::off()).value();
    let mut frng = Rng::substream(seed, consumer::FAULT, i);
    let mut tap = Tap::with_faults(faults, &mut frng);
    let faulty = eval(model, input, &mut rng, &mut tap).value();
    (correct, faulty)
}

/// S-box level histograms: collects `traces` samples for each of the two
/// histograms, or stops at the encryption cap.
pub fn run_distribution(cfg: &CampaignConfig, stop: Option<&AtomicBool>) -> Result<DistributionReport, ConfigError> {
    cfg.check_common()?;
    let specs = cfg.faults_or(vec![default_sifa_fault(cfg.model)]);
    let armed = specs.iter().map(|s| cfg.model.arm(s)).collect::<Result<Vec<_>, _>>()?;
    let n = cfg.traces;
    let mut faulty_hist = Histogram256::new();
    let mut correct_hist = Histogram256::new();
    let (used, truncated) = drive(
        cfg.encryption_cap(),
        stop,
        |i| sample_sbox(cfg.model, &armed, cfg.seed, i),
        |_, (c, f)| {
            if c != f {
                if faulty_hist.n() < n {
                    faulty_hist.add(f);
                }
            } else if correct_hist.n() < n {
                correct_hist.add(c);
            }
            if faulty_hist.n() == n && correct_hist.n() == n {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    );
    let p = |h: &Histogram256| h.chi_square_uniform().ok().map(|r| r.p_value);
    let (fp, cp) = (p(&faulty_hist), p(&correct_hist));
    let thr = cfg.thresholds.chi_square_p;
    Ok(DistributionReport {
        model: cfg.model,
        faults: specs,
        evaluations: used,
        faulty_n: faulty_hist.n(),
        correct_n: correct_hist.n(),
        faulty_p: fp,
        correct_p: cp,
        faulty_uniform: fp.map(|p| p > thr),
        correct_uniform: cp.map(|p| p > thr),
        faulty_hist,
        correct_hist,
        truncated,
    })
}

impl DistributionReport {
    pub fn artifacts(&self, cfg: &CampaignConfig) -> Vec<Artifact> {
        let p = Provenance::new(cfg, self.truncated);
        vec![
            p.csv(
                "histograms.csv",
                "value,effective_faulty,ineffective_correct",
                histogram_rows(&[&self.faulty_hist, &self.correct_hist]),
            ),
            p.json("summary.json", self),
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferentialRun {
    pub model: Model,
    pub key_position: usize,
    pub key_byte: u8,
    pub pairs: u64,
    pub encryptions: u64,
    pub rank: Option<usize>,
    pub recovered: bool,
    pub sustained_rank1_from: Option<u64>,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
    #[serde(skip)]
    pub ranking: Option<KeyRanking>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferentialReport {
    pub faults: Vec<FaultSpec>,
    pub runs: Vec<DifferentialRun>,
    #[serde(skip)]
    pub truncated: bool,
}

/// Differential key ranking over effective pairs for each compared model.
pub fn run_differential(cfg: &CampaignConfig, stop: Option<&AtomicBool>) -> Result<DifferentialReport, ConfigError> {
    cfg.check_common()?;
    let specs = cfg.faults_or(vec![default_differential_fault()]);
    let models = cfg.models.clone().unwrap_or(vec![Model::RsMask, Model::Infective]);
    let checkpoints = cfg.checkpoint_list();
    let oracles = models
        .iter()
        .map(|&m| Oracle::new(cfg, m, &specs))
        .collect::<Result<Vec<_>, _>>()?;
    let mut runs = Vec::new();
    let mut truncated = false;
    for oracle in &oracles {
        let byte = specs.first().map_or(0, |s| s.byte);
        let pos = column_positions(byte)[0];
        let key = oracle.rk[10][pos];
        let mut acc = DiffAccumulator::new(pos);
        let mut curve = Vec::new();
        let mut next_cp = 0;
        let (used, t) = drive(
            cfg.encryption_cap(),
            stop,
            |i| oracle.encrypt(i),
            |i, e| {
                if !e.effective() {
                    return ControlFlow::Continue(());
                }
                acc.add(&e.reference, &e.ciphertext);
                if acc.n() == checkpoints[next_cp] {
                    curve.push(curve_point(&acc.ranking(1).expect("nonempty"), key, i + 1));
                    next_cp += 1;
                    if next_cp == checkpoints.len() {
                        return ControlFlow::Break(());
                    }
                }
                ControlFlow::Continue(())
            },
        );
        truncated |= t;
        let ranking = acc.ranking(1).ok();
        if let Some(r) = &ranking {
            if curve.last().is_none_or(|c| c.n != r.n) {
                curve.push(curve_point(r, key, used));
            }
        }
        runs.push(DifferentialRun {
            model: oracle.model,
            key_position: pos,
            key_byte: key,
            pairs: acc.n(),
            encryptions: used,
            rank: curve.last().map(|c| c.rank),
            recovered: ranking.as_ref().is_some_and(|r| r.strictly_first(key)),
            sustained_rank1_from: sustained_from(&curve),
            curve,
            ranking,
        });
        if t {
            break;
        }
    }
    Ok(DifferentialReport {
        faults: specs,
        runs,
        truncated,
    })
}

impl DifferentialReport {
    pub fn artifacts(&self, cfg: &CampaignConfig) -> Vec<Artifact> {
        let p = Provenance::new(cfg, self.truncated);
        let curve = self.runs.iter().flat_map(|r| {
            r.curve.iter().map(move |c| {
                format!(
                    "{},{},{},{},{},{}",
                    r.model,
                    c.n,
                    c.encryptions,
                    fmt_f(c.sei_correct),
                    fmt_f(c.sei_max_wrong),
                    c.rank
                )
            })
        });
        let ranking = self.runs.iter().flat_map(|r| {
            r.ranking
                .as_ref()
                .map(|k| ranking_rows(&format!("{},", r.model), k))
                .unwrap_or_default()
        });
        vec![
            p.csv("differential_curve.csv", "model,n,encryptions,sei_correct,sei_max_wrong,rank", curve),
            p.csv("key_ranking.csv", "model,rank,key,sei", ranking),
            p.json("summary.json", self),
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TvlaReport {
    pub model: Model,
    pub sigma: f64,
    pub partition: Partition,
    pub traces: u64,
    pub max_abs_t: f64,
    pub threshold: f64,
    pub leakage_detected: bool,
    pub n_a: u64,
    pub n_b: u64,
    pub degenerate_samples: Vec<usize>,
    #[serde(skip)]
    pub t: Vec<f64>,
    #[serde(skip)]
    pub truncated: bool,
}

pub fn run_tvla(cfg: &CampaignConfig, stop: Option<&AtomicBool>) -> Result<TvlaReport, ConfigError> {
    cfg.check_common()?;
    if cfg.faults.as_ref().is_some_and(|f| !f.is_empty()) {
        return Err(ConfigError::Invalid("tvla runs fault-free; remove `faults`".into()));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(ConfigError::Invalid(format!("sigma {} must be finite and non-negative", cfg.sigma)));
    }
    if let Partition::SboxOutputBit { round, byte, bit } = cfg.partition {
        if !(1..=10).contains(&round) || byte >= 16 || bit >= 8 {
            return Err(ConfigError::Invalid("partition round/byte/bit out of range".into()));
        }
    }
    let params = TvlaParams {
        model: cfg.model,
        key: cfg.resolved_key(),
        traces: cfg.traces,
        sigma: cfg.sigma,
        partition: cfg.partition.clone(),
        seed: cfg.seed,
    };
    let out = tvla_campaign(&params, stop).map_err(|e: LeakageError| ConfigError::Invalid(e.to_string()))?;
    let TTestReport {
        t,
        max_abs_t,
        n_a,
        n_b,
        degenerate,
        ..
    } = out.report;
    Ok(TvlaReport {
        model: cfg.model,
        sigma: cfg.sigma,
        partition: cfg.partition.clone(),
        traces: out.traces,
        max_abs_t,
        threshold: cfg.thresholds.tvla_t,
        leakage_detected: max_abs_t > cfg.thresholds.tvla_t,
        n_a,
        n_b,
        degenerate_samples: degenerate,
        t,
        truncated: out.truncated,
    })
}

impl TvlaReport {
    pub fn artifacts(&self, cfg: &CampaignConfig) -> Vec<Artifact> {
        let p = Provenance::new(cfg, self.truncated);
        vec![
            p.csv(
                "t_values.csv",
                "sample,t",
                self.t.iter().enumerate().map(|(i, t)| format!("{i},{}", fmt_f(*t))),
            ),
            p.json("summary.json", self),
        ]
    }
}

/// Verification suites as artifacts.
pub fn verify_artifacts(cfg: &CampaignConfig, suites: &[crate::verify::SuiteResult]) -> Vec<Artifact> {
    let p = Provenance::new(cfg, false);
    vec![p.csv(
        "verify.csv",
        "suite,checks,failures,passed",
        suites
            .iter()
            .map(|s| format!("{},{},{},{}", s.name, s.checks, s.failures, s.passed())),
    )]
}

impl fmt::Display for Artifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.body)
    }
}
