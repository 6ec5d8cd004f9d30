//! Scenario configuration.
//!
//! Scenarios are TOML files with explicit units in the key names
//! (`a_mhz`, `peak_v_per_m`, `width_t0`, ...), so the unit boundary is
//! auditable. Unknown keys are rejected. A parsed [`ScenarioConfig`]
//! validates every module precondition before any computation and builds
//! the runtime objects (basis, dipoles, static field, resolved pulses).
//!
//! Pulse carriers are resolved from named target transitions: the carrier
//! equals the energy gap of the target pair (plus an optional offset), and
//! a narrowband pulse keeps only the elements matching that gap. With a
//! static field present, gaps are taken between the field-dressed
//! energies, which is what a resonant experiment would lock to.

use serde::{Deserialize, Serialize};

use crate::angmom::Polarization;
use crate::error::{Error, Result};
use crate::prop::{Envelope, InitialState, PropagationOptions, PulseSpec, StateSelector};
use crate::rotor::RotationalConstants;
use crate::rovib::{
    build_basis, build_ir_hamiltonian, build_mw_hamiltonian, build_static_hamiltonian,
    field_dressed_states, ControlBlock, ControlHamiltonian, DipoleSet, IrMode, ModeKind,
    RoVibBasis, StaticField,
};
use crate::symmetry::{FieldSpec, InitialState as SymmetryInitial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub molecule: MoleculeConfig,
    pub basis: BasisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_field: Option<StaticFieldConfig>,
    pub initial: InitialConfig,
    #[serde(default)]
    pub pulses: Vec<PulseConfig>,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeConfig {
    pub a_mhz: f64,
    pub b_mhz: f64,
    pub c_mhz: f64,
    pub mu_a_debye: f64,
    pub mu_b_debye: f64,
    pub omega_over_b: f64,
    pub transition_dipole: TransitionDipoleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransitionDipoleConfig {
    OutOfPlane { mu_c_debye: f64 },
    InPlane { mu_a_debye: f64, mu_b_debye: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub j_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticFieldConfig {
    pub epsilon: f64,
    pub e0_v_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub nu: u8,
    pub state: String,
    pub m: i32,
    #[serde(default)]
    pub dressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub name: String,
    pub polarization: String,
    /// "rotational" (microwave) or "vibrational" (IR).
    pub block: String,
    /// "narrowband" keeps only elements resonant with the target gap;
    /// "broadband" keeps all dipole-allowed elements.
    #[serde(default = "default_filter")]
    pub filter: String,
    /// Target transition fixing carrier and (for narrowband) the filter.
    /// For vibrational pulses `from` names the ν=0 state and `to` the ν=1
    /// state regardless of transfer direction.
    pub target: TargetConfig,
    #[serde(default)]
    pub carrier_offset_over_b: f64,
    #[serde(default)]
    pub phase_rad: f64,
    pub peak_v_per_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeConfig>,
}

fn default_filter() -> String {
    "narrowband".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub from: String,
    #[serde(default)]
    pub from_m: i32,
    pub to: String,
    #[serde(default)]
    pub to_m: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeConfig {
    Gaussian { center_t0: f64, width_t0: f64 },
    FlatTop {
        start_t0: f64,
        rise_t0: f64,
        hold_t0: f64,
        fall_t0: f64,
    },
}

impl From<EnvelopeConfig> for Envelope {
    fn from(e: EnvelopeConfig) -> Envelope {
        match e {
            EnvelopeConfig::Gaussian { center_t0, width_t0 } => Envelope::Gaussian {
                center: center_t0,
                width: width_t0,
            },
            EnvelopeConfig::FlatTop {
                start_t0,
                rise_t0,
                hold_t0,
                fall_t0,
            } => Envelope::FlatTop {
                start: start_t0,
                rise: rise_t0,
                hold: hold_t0,
                fall: fall_t0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_t0: Option<f64>,
    #[serde(default)]
    pub rwa: bool,
    #[serde(default = "default_sample_dt")]
    pub sample_every_t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final_t0: Option<f64>,
}

fn default_sample_dt() -> f64 {
    0.25
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            dt_t0: None,
            rwa: false,
            sample_every_t0: default_sample_dt(),
            t_final_t0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default)]
    pub track: Vec<TrackConfig>,
}

fn default_out_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
}

fn parse_polarization(s: &str) -> Result<Polarization> {
    match s {
        "x" => Ok(Polarization::X),
        "y" => Ok(Polarization::Y),
        "z" => Ok(Polarization::Z),
        "sigma+" => Ok(Polarization::SigmaPlus),
        "sigma-" => Ok(Polarization::SigmaMinus),
        other => Err(Error::Config(format!("unknown polarization `{other}`"))),
    }
}

fn parse_block(s: &str) -> Result<ControlBlock> {
    match s {
        "rotational" => Ok(ControlBlock::Rotational),
        "vibrational" => Ok(ControlBlock::Vibrational),
        other => Err(Error::Config(format!("unknown block `{other}`"))),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        RotationalConstants::new(
            self.molecule.a_mhz,
            self.molecule.b_mhz,
            self.molecule.c_mhz,
        )?;
        if self.molecule.omega_over_b <= 0.0 {
            return Err(Error::Config("omega_over_b must be positive".into()));
        }
        if let Some(s) = &self.static_field {
            if s.epsilon < 0.0 || s.e0_v_per_m < 0.0 {
                return Err(Error::Config("static field must be nonnegative".into()));
            }
        }
        if self.initial.dressed && self.static_field.is_none() {
            return Err(Error::Config(
                "dressed initial state requires a static field".into(),
            ));
        }
        if self.propagation.sample_every_t0 <= 0.0 {
            return Err(Error::Config("sample_every_t0 must be positive".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.pulses {
            parse_polarization(&p.polarization)?;
            parse_block(&p.block)?;
            if p.filter != "narrowband" && p.filter != "broadband" {
                return Err(Error::Config(format!(
                    "pulse `{}`: unknown filter `{}`",
                    p.name, p.filter
                )));
            }
            if p.peak_v_per_m < 0.0 {
                return Err(Error::Config(format!(
                    "pulse `{}`: negative field",
                    p.name
                )));
            }
            if !names.insert(p.name.clone()) {
                return Err(Error::Config(format!("duplicate pulse name `{}`", p.name)));
            }
        }
        Ok(())
    }

    /// Build the runtime scenario: basis, dipoles, optional static field.
    pub fn build(&self) -> Result<Scenario> {
        let constants = RotationalConstants::new(
            self.molecule.a_mhz,
            self.molecule.b_mhz,
            self.molecule.c_mhz,
        )?;
        let basis = build_basis(constants, self.basis.j_max, self.molecule.omega_over_b)?;
        let transition = match self.molecule.transition_dipole {
            TransitionDipoleConfig::OutOfPlane { mu_c_debye } => {
                ModeKind::OutOfPlane { mu_c: mu_c_debye }
            }
            TransitionDipoleConfig::InPlane {
                mu_a_debye,
                mu_b_debye,
            } => ModeKind::InPlane {
                mu_a: mu_a_debye,
                mu_b: mu_b_debye,
            },
        };
        let dipoles = DipoleSet::new(
            self.molecule.mu_a_debye,
            self.molecule.mu_b_debye,
            transition,
        )?;
        let static_field = match &self.static_field {
            Some(s) => Some(build_static_hamiltonian(
                &basis,
                &dipoles,
                s.epsilon,
                s.e0_v_per_m,
            )?),
            None => None,
        };
        // validate the initial state
        let level = basis
            .find_level(&self.initial.state)
            .ok_or_else(|| Error::Config(format!("unknown level `{}`", self.initial.state)))?;
        if self.initial.nu > 1 {
            return Err(Error::Config("initial nu must be 0 or 1".into()));
        }
        basis
            .index_of(self.initial.nu, level, self.initial.m)
            .ok_or_else(|| {
                Error::Config(format!(
                    "initial M = {} invalid for {}",
                    self.initial.m, self.initial.state
                ))
            })?;
        Ok(Scenario {
            config: self.clone(),
            basis,
            dipoles,
            static_field,
        })
    }
}

/// Runtime objects built from a [`ScenarioConfig`].
pub struct Scenario {
    pub config: ScenarioConfig,
    pub basis: RoVibBasis,
    pub dipoles: DipoleSet,
    pub static_field: Option<StaticField>,
}

impl Scenario {
    /// Energies used to resolve carriers and narrowband filters: dressed
    /// when a static field is present, bare otherwise.
    fn resolution_energies(&self) -> Vec<f64> {
        match &self.static_field {
            Some(f) if f.epsilon != 0.0 => {
                let d = field_dressed_states(&self.basis, f);
                let mut e = Vec::with_capacity(self.basis.len());
                for nu in 0..2 {
                    for r in 0..self.basis.n_rot {
                        e.push(d.rot_energies[r] + nu as f64 * self.basis.omega);
                    }
                }
                e
            }
            _ => self.basis.energies.clone(),
        }
    }

    fn target_gap(&self, p: &PulseConfig, energies: &[f64]) -> Result<f64> {
        let block = parse_block(&p.block)?;
        let from_level = self.basis.find_level(&p.target.from).ok_or_else(|| {
            Error::Config(format!("pulse `{}`: unknown level `{}`", p.name, p.target.from))
        })?;
        let to_level = self.basis.find_level(&p.target.to).ok_or_else(|| {
            Error::Config(format!("pulse `{}`: unknown level `{}`", p.name, p.target.to))
        })?;
        let (from_nu, to_nu) = match block {
            ControlBlock::Rotational => (0, 0),
            ControlBlock::Vibrational => (0, 1),
            ControlBlock::Static => unreachable!(),
        };
        let fi = self
            .basis
            .index_of(from_nu, from_level, p.target.from_m)
            .ok_or_else(|| {
                Error::Config(format!(
                    "pulse `{}`: M = {} invalid for {}",
                    p.name, p.target.from_m, p.target.from
                ))
            })?;
        let ti = self
            .basis
            .index_of(to_nu, to_level, p.target.to_m)
            .ok_or_else(|| {
                Error::Config(format!(
                    "pulse `{}`: M = {} invalid for {}",
                    p.name, p.target.to_m, p.target.to
                ))
            })?;
        let gap = (energies[ti] - energies[fi]).abs();
        if gap < crate::rovib::RESONANCE_TOL {
            return Err(Error::Config(format!(
                "pulse `{}`: target transition has zero gap",
                p.name
            )));
        }
        Ok(gap)
    }

    fn control_for(&self, p: &PulseConfig) -> Result<ControlHamiltonian> {
        let pol = parse_polarization(&p.polarization)?;
        if matches!(pol, Polarization::SigmaPlus | Polarization::SigmaMinus) {
            return Err(Error::Config(format!(
                "pulse `{}`: physical pulses use linear polarizations (σ± are for \
                 graph analysis only)",
                p.name
            )));
        }
        match parse_block(&p.block)? {
            ControlBlock::Rotational => {
                build_mw_hamiltonian(&self.basis, &self.dipoles, pol, p.peak_v_per_m, None)
            }
            ControlBlock::Vibrational => build_ir_hamiltonian(
                &self.basis,
                &self.dipoles,
                pol,
                p.peak_v_per_m,
                IrMode::Broadband,
            ),
            ControlBlock::Static => unreachable!(),
        }
    }

    /// Resolve all pulses: carriers from target gaps (dressed-aware) and
    /// narrowband filters carried to the propagator.
    pub fn pulses(&self) -> Result<Vec<PulseSpec>> {
        let energies = self.resolution_energies();
        let mut out = Vec::new();
        for p in &self.config.pulses {
            let envelope = p.envelope.clone().ok_or_else(|| {
                Error::Config(format!("pulse `{}` has no envelope", p.name))
            })?;
            let gap = self.target_gap(p, &energies)?;
            let control = self.control_for(p)?;
            out.push(PulseSpec {
                name: p.name.clone(),
                envelope: envelope.into(),
                carrier: gap + p.carrier_offset_over_b,
                phase: p.phase_rad,
                control,
                filter: if p.filter == "narrowband" {
                    Some(gap)
                } else {
                    None
                },
            });
        }
        Ok(out)
    }

    pub fn initial_state(&self) -> InitialState {
        let level = self.basis.find_level(&self.config.initial.state).unwrap();
        let index = self
            .basis
            .index_of(self.config.initial.nu, level, self.config.initial.m)
            .unwrap();
        InitialState::Basis {
            index,
            dressed: self.config.initial.dressed,
        }
    }

    pub fn propagation_options(&self) -> PropagationOptions {
        PropagationOptions {
            dt: self.config.propagation.dt_t0,
            rwa: self.config.propagation.rwa,
            sample_dt: self.config.propagation.sample_every_t0,
        }
    }

    /// End of the run: configured value, or the last pulse window plus a
    /// short margin.
    pub fn t_final(&self, pulses: &[PulseSpec]) -> f64 {
        if let Some(t) = self.config.propagation.t_final_t0 {
            return t;
        }
        let end = pulses
            .iter()
            .map(|p| p.envelope.window().1)
            .fold(0.0, f64::max);
        end + 2.0
    }

    /// Field list for the symmetry analysis.
    pub fn symmetry_fields(&self) -> Result<Vec<FieldSpec>> {
        self.config
            .pulses
            .iter()
            .map(|p| {
                Ok(FieldSpec {
                    polarization: parse_polarization(&p.polarization)?,
                    block: parse_block(&p.block)?,
                })
            })
            .collect()
    }

    pub fn symmetry_initial(&self) -> SymmetryInitial {
        let level = self.basis.find_level(&self.config.initial.state).unwrap();
        let l = &self.basis.levels[level];
        SymmetryInitial {
            j: l.j,
            m: self.config.initial.m,
            irrep: l.irrep,
        }
    }

    /// Controls for the graph analysis (σ± allowed here).
    pub fn graph_controls(&self) -> Result<Vec<ControlHamiltonian>> {
        let mut out = Vec::new();
        for p in &self.config.pulses {
            let pol = parse_polarization(&p.polarization)?;
            let ctrl = match parse_block(&p.block)? {
                ControlBlock::Rotational => build_mw_hamiltonian(
                    &self.basis,
                    &self.dipoles,
                    pol,
                    p.peak_v_per_m,
                    None,
                )?,
                ControlBlock::Vibrational => {
                    let mode = if p.filter == "narrowband" {
                        IrMode::Narrowband {
                            from: &p.target.from,
                            to: &p.target.to,
                        }
                    } else {
                        IrMode::Broadband
                    };
                    build_ir_hamiltonian(&self.basis, &self.dipoles, pol, p.peak_v_per_m, mode)?
                }
                ControlBlock::Static => unreachable!(),
            };
            out.push(ctrl);
        }
        Ok(out)
    }

    /// Selectors for trajectory output: configured list, or every
    /// (ν, level) combination summed over M.
    pub fn selectors(&self) -> Vec<StateSelector> {
        if !self.config.output.track.is_empty() {
            return self
                .config
                .output
                .track
                .iter()
                .map(|t| StateSelector {
                    nu: t.nu,
                    level: t.state.clone(),
                    m: t.m,
                })
                .collect();
        }
        let mut out = Vec::new();
        for nu in 0..2u8 {
            for l in &self.basis.levels {
                out.push(StateSelector {
                    nu: Some(nu),
                    level: Some(l.label()),
                    m: None,
                });
            }
        }
        out
    }
}
