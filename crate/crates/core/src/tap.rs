//! Node recorder threaded through every datapath evaluation.
//!
//! A model visits its nodes in a fixed order, so a node is identified at run
//! time by its visit index. Hierarchical names are only assembled when a
//! catalog is being built; ordinary evaluations pay for a counter increment
//! and a few branches per node.

use serde::Serialize;

use crate::fault::{apply, FaultKind};
use crate::rng::Rng;

/// Static description of one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NodeInfo {
    pub id: String,
    pub index: u32,
    pub width: u8,
    pub stage: u8,
    pub registered: bool,
}

/// A fault resolved against a model catalog.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmedFault {
    pub node: u32,
    pub kind: FaultKind,
    pub probability: f64,
}

#[derive(Default)]
struct CatalogBuilder {
    scope: Vec<String>,
    nodes: Vec<NodeInfo>,
}

pub struct Tap<'a> {
    next: u32,
    stage: u8,
    faults: &'a [ArmedFault],
    fault_rng: Option<&'a mut Rng>,
    leak: Option<&'a mut [u32]>,
    values: Option<&'a mut Vec<u8>>,
    catalog: Option<CatalogBuilder>,
    fired: bool,
}

impl<'a> Tap<'a> {
    /// A recorder that does nothing but count.
    pub fn off() -> Tap<'static> {
        Tap {
            next: 0,
            stage: 0,
            faults: &[],
            fault_rng: None,
            leak: None,
            values: None,
            catalog: None,
            fired: false,
        }
    }

    pub fn catalog() -> Tap<'static> {
        Tap {
            catalog: Some(CatalogBuilder::default()),
            ..Tap::off()
        }
    }

    pub fn with_faults(faults: &'a [ArmedFault], rng: &'a mut Rng) -> Tap<'a> {
        Tap {
            faults,
            fault_rng: Some(rng),
            ..Tap::off()
        }
    }

    /// Accumulate the Hamming weight of registered nodes per stage into
    /// `acc[stage - 1]`.
    pub fn leakage(mut self, acc: &'a mut [u32]) -> Tap<'a> {
        self.leak = Some(acc);
        self
    }

    /// Record every node value (post-fault) in visit order.
    pub fn values(mut self, out: &'a mut Vec<u8>) -> Tap<'a> {
        self.values = Some(out);
        self
    }

    pub fn fired(&self) -> bool {
        self.fired
    }

    pub fn visited(&self) -> u32 {
        self.next
    }

    pub fn into_catalog(self) -> Vec<NodeInfo> {
        self.catalog.map(|c| c.nodes).unwrap_or_default()
    }

    #[inline]
    pub fn set_stage(&mut self, stage: u8) {
        self.stage = stage;
    }

    #[inline]
    pub fn stage(&self) -> u8 {
        self.stage
    }

    #[inline]
    pub fn enter(&mut self, name: &str) {
        if let Some(c) = &mut self.catalog {
            c.scope.push(name.to_string());
        }
    }

    #[inline]
    pub fn enter_idx(&mut self, name: &str, i: usize) {
        if let Some(c) = &mut self.catalog {
            c.scope.push(format!("{name}{i}"));
        }
    }

    #[inline]
    pub fn leave(&mut self) {
        if let Some(c) = &mut self.catalog {
            c.scope.pop();
        }
    }

    #[inline]
    pub fn within<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        self.enter(name);
        let v = f(self);
        self.leave();
        v
    }

    #[inline]
    pub fn within_idx<T>(&mut self, name: &str, i: usize, f: impl FnOnce(&mut Self) -> T) -> T {
        self.enter_idx(name, i);
        let v = f(self);
        self.leave();
        v
    }

    /// Combinational node.
    #[inline]
    pub fn wire(&mut self, name: &str, width: u8, v: u8) -> u8 {
        self.node(name, width, false, v)
    }

    /// Register written at the current stage.
    #[inline]
    pub fn reg(&mut self, name: &str, width: u8, v: u8) -> u8 {
        self.node(name, width, true, v)
    }

    #[inline]
    pub fn reg_idx(&mut self, name: &str, i: usize, width: u8, v: u8) -> u8 {
        self.enter_idx(name, i);
        let v = self.node("", width, true, v);
        self.leave();
        v
    }

    #[inline]
    pub fn wire_idx(&mut self, name: &str, i: usize, width: u8, v: u8) -> u8 {
        self.enter_idx(name, i);
        let v = self.node("", width, false, v);
        self.leave();
        v
    }

    #[inline]
    fn node(&mut self, name: &str, width: u8, registered: bool, v: u8) -> u8 {
        let index = self.next;
        self.next += 1;
        let mut v = v;
        for f in self.faults {
            if f.node == index {
                let rng = self
                    .fault_rng
                    .as_deref_mut()
                    .expect("fault rng attached with faults");
                if f.probability >= 1.0 || rng.unit() < f.probability {
                    v = apply(v, f.kind, width, rng);
                    self.fired = true;
                }
            }
        }
        if registered {
            if let Some(acc) = self.leak.as_deref_mut() {
                acc[self.stage as usize - 1] += v.count_ones();
            }
        }
        if let Some(out) = self.values.as_deref_mut() {
            out.push(v);
        }
        if let Some(c) = &mut self.catalog {
            let mut id = c.scope.join(".");
            if !name.is_empty() {
                if !id.is_empty() {
                    id.push('.');
                }
                id.push_str(name);
            }
            c.nodes.push(NodeInfo {
                id,
                index,
                width,
                stage: self.stage,
                registered,
            });
        }
        v
    }
}
