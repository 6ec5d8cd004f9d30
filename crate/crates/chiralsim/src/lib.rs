//! Ro-vibrational quantum dynamics of planar asymmetric-top molecules.
//!
//! The crate models a rigid asymmetric top with one active vibrational mode
//! (two levels, `ν = 0, 1`) driven by microwave, infrared and static electric
//! fields. It provides:
//!
//! * rigid-rotor eigenstates with `J_{Ka,Kc}` labels and `D₂` symmetry
//!   classification ([`rotor`]),
//! * exact Wigner 3-j symbols and rank-1 D-matrix elements ([`angmom`]),
//! * Hermitian control Hamiltonians for each field, including Stark-dressed
//!   states and their perturbative couplings ([`rovib`]),
//! * symbolic selection-rule analysis deciding whether a field configuration
//!   can create an achiral or chiral coherent vibrational wavepacket
//!   ([`symmetry`]),
//! * spectral-graph controllability analysis with graphical commutators
//!   ([`graph`]),
//! * a norm-preserving propagator for multi-pulse schedules and the
//!   orientation-averaged elongation observable ([`prop`]).
//!
//! Internally all energies are expressed in units of the rotational constant
//! `B` and times in units of `t0 = ħ/B`; conversions from MHz, Debye and V/m
//! happen at the configuration boundary ([`units`]).

pub mod angmom;
pub mod config;
pub mod error;
pub mod graph;
pub mod presets;
pub mod prop;
pub mod rotor;
pub mod rovib;
pub mod symmetry;
pub mod units;

pub use error::{Error, Result};
