//! Cavity, material and feedback parameters.
//!
//! [`CavityConfig`] is the user-facing description in laboratory units (quality
//! factor, dB/cm, mode volume, ...). [`PhysicalParams`] holds the derived rates in
//! SI units that the integrator consumes; build it with
//! [`PhysicalParams::from_config`] so that every invariant is checked once.

use std::f64::consts::{LN_10, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const REDUCED_PLANCK: f64 = 1.054_571_817e-34;

/// Tolerance used when checking that a duration is an integer number of steps.
const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    pub wavelength_m: f64,
    pub loaded_q: f64,
    pub group_index: f64,
    pub silicon_index: f64,
    pub waveguide_loss_db_per_cm: f64,
    pub mode_volume_m3: f64,
    pub tpa_coefficient_m_per_w: f64,
    pub fca_cross_section_m2: f64,
    pub fcd_index_coefficient_m3: f64,
    pub thermo_optic_coefficient_per_k: f64,
    pub heat_capacity_j_per_m3_k: f64,
    pub thermal_volume_m3: f64,
    pub carrier_lifetime_s: f64,
    pub thermal_time_s: f64,
    pub feedback_delay_s: f64,
    pub feedback_phase_rad: f64,
    pub feedback_transmission: f64,
    /// Integration step; `None` selects [`default_time_step`].
    pub time_step_s: Option<f64>,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            wavelength_m: 1550e-9,
            loaded_q: 3.0e4,
            group_index: 4.2,
            silicon_index: 3.485,
            waveguide_loss_db_per_cm: 0.8,
            mode_volume_m3: 2.0e-18,
            tpa_coefficient_m_per_w: 0.79e-11,
            fca_cross_section_m2: 1.0e-21,
            fcd_index_coefficient_m3: -1.73e-27,
            thermo_optic_coefficient_per_k: 1.86e-4,
            heat_capacity_j_per_m3_k: 1.63e6,
            thermal_volume_m3: 6.0e-18,
            carrier_lifetime_s: 10e-9,
            thermal_time_s: 50e-9,
            feedback_delay_s: 0.5e-9,
            feedback_phase_rad: 0.0,
            feedback_transmission: 1.0,
            time_step_s: None,
        }
    }
}

/// 1 ps for carrier lifetimes of at least 1 ns, otherwise `min(1 ps, tau_fc / 10)`.
pub fn default_time_step(carrier_lifetime_s: f64) -> f64 {
    const ONE_PS: f64 = 1e-12;
    if carrier_lifetime_s >= 1e-9 {
        ONE_PS
    } else {
        ONE_PS.min(carrier_lifetime_s / 10.0)
    }
}

/// Derived cavity constants in SI units.
///
/// Sign convention: `pump_detuning` is `omega_0 - omega_pump`, so a positive value
/// places the laser on the red side of the cold resonance. The field equation is
/// `da/dt = [i(pump_detuning + 2 pi delta_nl) - gamma_tot/2] a + i mu1 E_in + i mu2 E_add`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Cold-cavity resonance, rad/s.
    pub resonance_frequency: f64,
    /// `omega_0 - omega_pump`, rad/s.
    pub pump_detuning: f64,
    /// Intrinsic energy decay rate including waveguide attenuation, 1/s.
    pub intrinsic_decay: f64,
    /// Energy decay rate into each bus waveguide, 1/s.
    pub coupling_decay_per_coupler: f64,
    /// Input-port coupling coefficient, 1/sqrt(s).
    pub input_coupling: f64,
    /// Add-port coupling coefficient, 1/sqrt(s).
    pub add_coupling: f64,
    /// Carrier generation per squared stored energy, m^-3 J^-2 s^-1.
    pub tpa_generation: f64,
    /// TPA loss rate per unit stored energy, 1/(J s).
    pub tpa_loss_per_energy: f64,
    pub fca_cross_section: f64,
    pub group_index: f64,
    /// dn/dN, m^3.
    pub fcd_index_coefficient: f64,
    /// dn/dT, 1/K.
    pub thermo_optic_coefficient: f64,
    pub silicon_index: f64,
    /// Temperature rise per absorbed joule, K/J.
    pub thermal_heating_efficiency: f64,
    pub carrier_lifetime: f64,
    pub thermal_time: f64,
    pub feedback_delay: f64,
    pub feedback_phase: f64,
    pub feedback_amplitude_transmission: f64,
    pub dt: f64,
}

impl PhysicalParams {
    /// Derives the SI rates from `cfg` at the given pump detuning and validates them.
    pub fn from_config(cfg: &CavityConfig, pump_detuning: f64) -> Result<Self> {
        let c = SPEED_OF_LIGHT;
        for (name, v) in [
            ("wavelength_m", cfg.wavelength_m),
            ("loaded_q", cfg.loaded_q),
            ("group_index", cfg.group_index),
            ("silicon_index", cfg.silicon_index),
            ("mode_volume_m3", cfg.mode_volume_m3),
            ("heat_capacity_j_per_m3_k", cfg.heat_capacity_j_per_m3_k),
            ("thermal_volume_m3", cfg.thermal_volume_m3),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        let omega0 = TAU * c / cfg.wavelength_m;
        let loaded_decay = omega0 / cfg.loaded_q;
        // dB/cm -> 1/m power attenuation
        let alpha = cfg.waveguide_loss_db_per_cm * 100.0 * LN_10 / 10.0;
        let intrinsic = alpha * c / cfg.group_index;
        if intrinsic >= loaded_decay {
            return Err(Error::param(
                "loaded_q",
                format!(
                    "intrinsic loss ({intrinsic:e} 1/s) exceeds the loaded linewidth ({loaded_decay:e} 1/s)"
                ),
            ));
        }
        let coupling = 0.5 * (loaded_decay - intrinsic);
        let ng2 = cfg.group_index * cfg.group_index;
        let v = cfg.mode_volume_m3;
        let tpa_loss = cfg.tpa_coefficient_m_per_w * c * c / (ng2 * v);
        let tpa_generation =
            cfg.tpa_coefficient_m_per_w * c * c / (2.0 * REDUCED_PLANCK * omega0 * ng2 * v * v);
        let dt = cfg
            .time_step_s
            .unwrap_or_else(|| default_time_step(cfg.carrier_lifetime_s));
        let params = Self {
            resonance_frequency: omega0,
            pump_detuning,
            intrinsic_decay: intrinsic,
            coupling_decay_per_coupler: coupling,
            input_coupling: coupling.sqrt(),
            add_coupling: coupling.sqrt(),
            tpa_generation,
            tpa_loss_per_energy: tpa_loss,
            fca_cross_section: cfg.fca_cross_section_m2,
            group_index: cfg.group_index,
            fcd_index_coefficient: cfg.fcd_index_coefficient_m3,
            thermo_optic_coefficient: cfg.thermo_optic_coefficient_per_k,
            silicon_index: cfg.silicon_index,
            thermal_heating_efficiency: 1.0
                / (cfg.heat_capacity_j_per_m3_k * cfg.thermal_volume_m3),
            carrier_lifetime: cfg.carrier_lifetime_s,
            thermal_time: cfg.thermal_time_s,
            feedback_delay: cfg.feedback_delay_s,
            feedback_phase: cfg.feedback_phase_rad,
            feedback_amplitude_transmission: cfg.feedback_transmission,
            dt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("resonance_frequency", self.resonance_frequency),
            ("intrinsic_decay", self.intrinsic_decay),
            (
                "coupling_decay_per_coupler",
                self.coupling_decay_per_coupler,
            ),
            ("carrier_lifetime", self.carrier_lifetime),
            ("thermal_time", self.thermal_time),
            ("dt", self.dt),
            ("silicon_index", self.silicon_index),
            ("group_index", self.group_index),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        let non_negative = [
            ("input_coupling", self.input_coupling),
            ("add_coupling", self.add_coupling),
            ("tpa_generation", self.tpa_generation),
            ("tpa_loss_per_energy", self.tpa_loss_per_energy),
            ("fca_cross_section", self.fca_cross_section),
            (
                "thermal_heating_efficiency",
                self.thermal_heating_efficiency,
            ),
            ("feedback_delay", self.feedback_delay),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(
                    name,
                    format!("must be non-negative and finite, got {v}"),
                ));
            }
        }
        for (name, v) in [
            ("pump_detuning", self.pump_detuning),
            ("feedback_phase", self.feedback_phase),
            ("fcd_index_coefficient", self.fcd_index_coefficient),
            ("thermo_optic_coefficient", self.thermo_optic_coefficient),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.feedback_amplitude_transmission) {
            return Err(Error::param(
                "feedback_amplitude_transmission",
                format!(
                    "must lie in [0, 1], got {}",
                    self.feedback_amplitude_transmission
                ),
            ));
        }
        let photon_lifetime = self.photon_lifetime();
        if self.dt > photon_lifetime / 10.0 * (1.0 + GRID_TOLERANCE) {
            return Err(Error::param(
                "dt",
                format!(
                    "{:e} s exceeds a tenth of the photon lifetime ({photon_lifetime:e} s)",
                    self.dt
                ),
            ));
        }
        if self.carrier_lifetime >= 100e-12
            && self.dt > self.carrier_lifetime / 10.0 * (1.0 + GRID_TOLERANCE)
        {
            return Err(Error::param(
                "dt",
                format!(
                    "{:e} s exceeds a tenth of the carrier lifetime ({:e} s)",
                    self.dt, self.carrier_lifetime
                ),
            ));
        }
        steps_in(self.feedback_delay, self.dt, "feedback_delay")?;
        Ok(())
    }

    /// Linear energy decay rate `gamma_i + 2 gamma_c`.
    pub fn linear_decay(&self) -> f64 {
        self.intrinsic_decay + 2.0 * self.coupling_decay_per_coupler
    }

    /// Energy lifetime of the cold loaded cavity, `1 / (gamma_i + 2 gamma_c)`.
    pub fn photon_lifetime(&self) -> f64 {
        1.0 / self.linear_decay()
    }

    pub fn delay_steps(&self) -> usize {
        // validated at construction
        steps_in(self.feedback_delay, self.dt, "feedback_delay").unwrap_or(0)
    }

    /// FCA loss rate per unit carrier density, m^3/s.
    pub fn fca_loss_per_carrier(&self) -> f64 {
        self.fca_cross_section * SPEED_OF_LIGHT / self.group_index
    }

    /// Copy with every nonlinear coupling removed (pure linear add-drop ring).
    pub fn linearized(&self) -> Self {
        Self {
            tpa_generation: 0.0,
            tpa_loss_per_energy: 0.0,
            fca_cross_section: 0.0,
            fcd_index_coefficient: 0.0,
            thermo_optic_coefficient: 0.0,
            thermal_heating_efficiency: 0.0,
            ..self.clone()
        }
    }

    pub fn with_detuning(&self, pump_detuning: f64) -> Self {
        Self {
            pump_detuning,
            ..self.clone()
        }
    }
}

/// Number of `dt` steps spanned by `duration`; errors unless it is an exact multiple.
pub fn steps_in(duration: f64, dt: f64, name: &'static str) -> Result<usize> {
    let ratio = duration / dt;
    let rounded = ratio.round();
    if !ratio.is_finite()
        || rounded < 0.0
        || (ratio - rounded).abs() > GRID_TOLERANCE * ratio.max(1.0)
    {
        return Err(Error::param(
            name,
            format!("{duration:e} s is not an integer multiple of dt = {dt:e} s"),
        ));
    }
    Ok(rounded as usize)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn ghz_to_rad_per_s(ghz: f64) -> f64 {
    TAU * ghz * 1e9
}
