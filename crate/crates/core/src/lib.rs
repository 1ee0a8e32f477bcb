//! Bit-level simulator for masked AES S-box datapaths.
//!
//! * [`gf`]: tower-field GF(2^8) arithmetic and basis changes
//! * [`masking`]: Boolean sharings and masked multipliers
//! * [`datapath`]: unprotected, TI, RS-Mask and infective S-box models with
//!   named, fault-addressable nodes
//! * [`aes`]: masked AES-128 with paired fault-free shadow runs
//! * [`fault`], [`tap`]: fault descriptions and the per-node evaluation hook
//! * [`analysis`]: SEI, SIFA and differential key ranking, chi-square, MI
//! * [`leakage`]: Hamming-weight traces and Welch's t-test
//! * [`campaign`], [`verify`]: configured runs, artifacts and self checks

pub mod fault;
pub mod gf;
pub mod masking;
pub mod rng;
pub mod tap;
pub mod datapath;
pub mod aes;
pub mod analysis;
pub mod leakage;
pub mod par;
pub mod verify;
pub mod campaign;
