//! Fault descriptions and their effect on a node value.

use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    #[serde(rename = "stuck-at-0")]
    StuckAt0,
    #[serde(rename = "stuck-at-1")]
    StuckAt1,
    #[serde(rename = "bit-flip")]
    BitFlip(u8),
    #[serde(rename = "random-replace")]
    RandomReplace,
}

fn default_probability() -> f64 {
    1.0
}

/// One fault: which node, what it does, and when it is active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub node: String,
    pub kind: FaultKind,
    /// AES round 1..=10 in which the S-box is hit.
    pub round: usize,
    /// State byte 0..16 (column-major, FIPS-197 order).
    pub byte: usize,
    /// Optional pipeline stage; when given it must match the node's stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<u8>,
    #[serde(default = "default_probability")]
    pub probability: f64,
}

impl FaultSpec {
    pub fn new(node: impl Into<String>, kind: FaultKind, round: usize, byte: usize) -> FaultSpec {
        FaultSpec {
            node: node.into(),
            kind,
            round,
            byte,
            stage: None,
            probability: 1.0,
        }
    }
}

#[inline]
pub const fn width_mask(width: u8) -> u8 {
    if width >= 8 {
        0xFF
    } else {
        (1u8 << width) - 1
    }
}

/// Value seen downstream of a faulted node of the given bit width.
#[inline]
pub fn apply(value: u8, kind: FaultKind, width: u8, rng: &mut Rng) -> u8 {
    let m = width_mask(width);
    match kind {
        FaultKind::StuckAt0 => 0,
        FaultKind::StuckAt1 => m,
        FaultKind::BitFlip(mask) => (value ^ mask) & m,
        FaultKind::RandomReplace => rng.bits(width),
    }
}
