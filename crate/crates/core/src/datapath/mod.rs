//! S-box datapath models evaluated node by node.
//!
//! Every model takes and returns three byte shares in the AES polynomial
//! basis, laid out the way the AES state stores them:
//!
//! | model       | share 0 | share 1 | share 2  |
//! |-------------|---------|---------|----------|
//! | unprotected | value   | 0       | 0        |
//! | ti          | share   | share   | share    |
//! | rs-mask     | data 0  | data 1  | RS share |
//! | infective   | data 0  | data 1  | RS share |
//!
//! so the logical byte is always the XOR of the three.

mod inverter;
pub mod rsmask;
pub mod ti;
pub mod unprotected;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::fault::FaultSpec;
use crate::masking::{xor3, Shared};
use crate::rng::Rng;
use crate::tap::{ArmedFault, NodeInfo, Tap};

pub use inverter::{inv8_masked, inv8_single, MaskedInv};
pub use rsmask::{Pairing, RsMaskState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Unprotected,
    Ti,
    RsMask,
    Infective,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Unprotected, Model::Ti, Model::RsMask, Model::Infective];

    pub fn name(self) -> &'static str {
        match self {
            Model::Unprotected => "unprotected",
            Model::Ti => "ti",
            Model::RsMask => "rs-mask",
            Model::Infective => "infective",
        }
    }

    /// Register stages traversed by one S-box evaluation.
    pub fn stages(self) -> u8 {
        match self {
            Model::Unprotected => unprotected::STAGES,
            Model::Ti => ti::STAGES,
            Model::RsMask | Model::Infective => rsmask::STAGES,
        }
    }

    /// Fresh sharing of a byte in this model's layout.
    pub fn split(self, x: u8, rng: &mut Rng) -> [u8; 3] {
        match self {
            Model::Unprotected => [x, 0, 0],
            Model::Ti => Shared::<3>::split(x, rng).0,
            Model::RsMask | Model::Infective => RsMaskState::split(x, rng).to_array(),
        }
    }

    /// Node most SIFA-style campaigns target: a GF(2^2) product inside the
    /// first GF(2^4) multiplier of the main inverter.
    pub fn default_sifa_node(self) -> &'static str {
        match self {
            Model::Unprotected => "inv8.d.gf4m0",
            _ => "inv8.d.x01.gf4m0",
        }
    }

    /// Every node, in visit order.
    pub fn catalog(self) -> &'static [NodeInfo] {
        static CATALOGS: OnceLock<Vec<Vec<NodeInfo>>> = OnceLock::new();
        let all = CATALOGS.get_or_init(|| {
            Model::ALL
                .iter()
                .map(|&m| {
                    let mut tap = Tap::catalog();
                    eval(m, [0; 3], &mut Rng::zeros(), &mut tap);
                    tap.into_catalog()
                })
                .collect()
        });
        &all[self as usize]
    }

    pub fn node(self, id: &str) -> Option<&'static NodeInfo> {
        static INDEX: OnceLock<Vec<HashMap<&'static str, usize>>> = OnceLock::new();
        let idx = INDEX.get_or_init(|| {
            Model::ALL
                .iter()
                .map(|&m| {
                    m.catalog()
                        .iter()
                        .enumerate()
                        .map(|(i, n)| (n.id.as_str(), i))
                        .collect()
                })
                .collect()
        });
        idx[self as usize].get(id).map(|&i| &self.catalog()[i])
    }

    /// Resolve a fault description against this model's catalog.
    pub fn arm(self, spec: &FaultSpec) -> Result<ArmedFault, DatapathError> {
        let node = self.node(&spec.node).ok_or_else(|| DatapathError::UnknownNode {
            model: self,
            node: spec.node.clone(),
        })?;
        if let Some(stage) = spec.stage {
            if stage != node.stage {
                return Err(DatapathError::StageMismatch {
                    node: spec.node.clone(),
                    expected: node.stage,
                    given: stage,
                });
            }
        }
        if !(1..=10).contains(&spec.round) || spec.byte >= 16 {
            return Err(DatapathError::Position {
                round: spec.round,
                byte: spec.byte,
            });
        }
        if !(0.0..=1.0).contains(&spec.probability) {
            return Err(DatapathError::Probability(spec.probability));
        }
        Ok(ArmedFault {
            node: node.index,
            kind: spec.kind,
            probability: spec.probability,
        })
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = DatapathError;
    fn from_str(s: &str) -> Result<Model, DatapathError> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DatapathError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DatapathError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("node `{node}` does not exist in model {model}")]
    UnknownNode { model: Model, node: String },
    #[error("node `{node}` sits in stage {expected}, fault asks for stage {given}")]
    StageMismatch { node: String, expected: u8, given: u8 },
    #[error("fault position round {round} byte {byte} is outside rounds 1..=10, bytes 0..16")]
    Position { round: usize, byte: usize },
    #[error("fault probability {0} is outside [0, 1]")]
    Probability(f64),
}

/// Result of one S-box evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SboxOut {
    pub out: [u8; 3],
    /// Two-share infection bytes for rows 0..4 of the column (infective only).
    pub infection: Option<[[u8; 2]; 4]>,
}

impl SboxOut {
    pub fn value(&self) -> u8 {
        xor3(self.out)
    }
}

pub fn eval(model: Model, input: [u8; 3], rng: &mut Rng, tap: &mut Tap) -> SboxOut {
    match model {
        Model::Unprotected => SboxOut {
            out: [unprotected::sbox_unprotected(xor3(input), tap), 0, 0],
            infection: None,
        },
        Model::Ti => SboxOut {
            out: ti::sbox_ti(input, rng, tap),
            infection: None,
        },
        Model::RsMask => SboxOut {
            out: rsmask::sbox_rsmask(RsMaskState::from_array(input), Pairing::Straight, rng, tap)
                .to_array(),
            infection: None,
        },
        Model::Infective => {
            let r = rsmask::sbox_infective(RsMaskState::from_array(input), rng, tap);
            SboxOut {
                out: r.state.to_array(),
                infection: Some(r.infection),
            }
        }
    }
}

/// Serializable catalog listing for one model.
#[derive(Serialize)]
pub struct CatalogDump<'a> {
    pub model: Model,
    pub stages: u8,
    pub nodes: &'a [NodeInfo],
}

pub fn catalog_json(models: &[Model]) -> String {
    let dumps: Vec<_> = models
        .iter()
        .map(|&m| CatalogDump {
            model: m,
            stages: m.stages(),
            nodes: m.catalog(),
        })
        .collect();
    serde_json::to_string_pretty(&dumps).expect("catalog serializes")
}
