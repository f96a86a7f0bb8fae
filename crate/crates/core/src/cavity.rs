//! Temporal coupled-mode model of the add-drop ring with free-carrier and thermal
//! dynamics.
//!
//! The modal amplitude `a` is energy normalized (`|a|^2` is the stored energy in J)
//! and the port fields are power normalized (`|E|^2` in W). Carriers are generated by
//! two-photon absorption and the temperature is driven by all absorbed power
//! (linear, TPA and FCA).

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CavityState {
    /// Modal amplitude, sqrt(J).
    pub amplitude: Complex64,
    /// Excess free-carrier density, m^-3.
    pub carrier_density: f64,
    /// Temperature rise above ambient, K.
    pub temperature_offset: f64,
}

impl CavityState {
    pub fn energy(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitude.re.is_finite()
            && self.amplitude.im.is_finite()
            && self.carrier_density.is_finite()
            && self.temperature_offset.is_finite()
    }

    fn offset(&self, rate: &StateRate, h: f64) -> Self {
        Self {
            amplitude: self.amplitude + rate.amplitude * h,
            carrier_density: self.carrier_density + rate.carrier_density * h,
            temperature_offset: self.temperature_offset + rate.temperature_offset * h,
        }
    }
}

/// Time derivative of a [`CavityState`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateRate {
    pub amplitude: Complex64,
    pub carrier_density: f64,
    pub temperature_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PortFields {
    pub input: Complex64,
    pub add: Complex64,
    pub through: Complex64,
    pub drop: Complex64,
}

impl PortFields {
    pub fn through_power(&self) -> f64 {
        self.through.norm_sqr()
    }

    pub fn drop_power(&self) -> f64 {
        self.drop.norm_sqr()
    }
}

/// Carrier and thermal parts of the nonlinear resonance shift, in Hz.
///
/// Free carriers lower the index (blue shift, positive); heating raises it (red
/// shift, negative).
pub fn detuning_components(state: &CavityState, params: &PhysicalParams) -> (f64, f64) {
    let scale = -params.resonance_frequency / params.silicon_index / TAU;
    (
        scale * params.fcd_index_coefficient * state.carrier_density,
        scale * params.thermo_optic_coefficient * state.temperature_offset,
    )
}

/// Instantaneous nonlinear detuning of the resonance, in Hz.
pub fn nonlinear_detuning(state: &CavityState, params: &PhysicalParams) -> f64 {
    let (carrier, thermal) = detuning_components(state, params);
    carrier + thermal
}

/// Rate constants of [`PhysicalParams`] folded into the form used by the
/// integrator's inner loop.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coefficients {
    linear_decay: f64,
    intrinsic_decay: f64,
    pump_detuning: f64,
    // rad/s per m^-3 and per K
    carrier_shift: f64,
    thermal_shift: f64,
    tpa_loss: f64,
    fca_loss: f64,
    generation: f64,
    carrier_decay: f64,
    thermal_decay: f64,
    heating: f64,
    input_coupling: f64,
    add_coupling: f64,
}

impl Coefficients {
    pub(crate) fn new(p: &PhysicalParams) -> Self {
        let scale = -p.resonance_frequency / p.silicon_index;
        Self {
            linear_decay: p.linear_decay(),
            intrinsic_decay: p.intrinsic_decay,
            pump_detuning: p.pump_detuning,
            carrier_shift: scale * p.fcd_index_coefficient,
            thermal_shift: scale * p.thermo_optic_coefficient,
            tpa_loss: p.tpa_loss_per_energy,
            fca_loss: p.fca_loss_per_carrier(),
            generation: p.tpa_generation,
            carrier_decay: 1.0 / p.carrier_lifetime,
            thermal_decay: 1.0 / p.thermal_time,
            heating: p.thermal_heating_efficiency,
            input_coupling: p.input_coupling,
            add_coupling: p.add_coupling,
        }
    }

    #[inline(always)]
    pub(crate) fn drive(&self, e_in: Complex64, e_add: Complex64) -> Complex64 {
        e_in * self.input_coupling + e_add * self.add_coupling
    }

    #[inline(always)]
    fn rate(&self, state: &CavityState, drive: Complex64) -> (StateRate, [f64; 4]) {
        let energy = state.amplitude.norm_sqr();
        let shift = self.carrier_shift * state.carrier_density
            + self.thermal_shift * state.temperature_offset;
        let tpa = self.tpa_loss * energy;
        let fca = self.fca_loss * state.carrier_density;
        let total = self.linear_decay + tpa + fca;
        let absorbed = (self.intrinsic_decay + tpa + fca) * energy;
        let r = StateRate {
            amplitude: Complex64::new(-0.5 * total, self.pump_detuning + shift) * state.amplitude
                + I * drive,
            carrier_density: -state.carrier_density * self.carrier_decay
                + self.generation * energy * energy,
            temperature_offset: -state.temperature_offset * self.thermal_decay
                + self.heating * absorbed,
        };
        (r, [shift, tpa, fca, absorbed])
    }

    #[inline(always)]
    pub(crate) fn detuning_hz(&self, state: &CavityState) -> f64 {
        (self.carrier_shift * state.carrier_density + self.thermal_shift * state.temperature_offset)
            * (1.0 / TAU)
    }

    /// Slope of the modal amplitude only.
    #[inline(always)]
    pub(crate) fn amplitude_rate(&self, state: &CavityState, drive: Complex64) -> Complex64 {
        self.rate(state, drive).0.amplitude
    }
}

/// Right-hand side of the three coupled cavity equations.
pub fn derivatives(
    state: &CavityState,
    e_in: Complex64,
    e_add: Complex64,
    params: &PhysicalParams,
) -> Result<StateRate> {
    if !state.is_finite() {
        return Err(Error::NonFinite { term: "state" });
    }
    let c = Coefficients::new(params);
    let (r, [shift, tpa, fca, absorbed]) = c.rate(state, c.drive(e_in, e_add));
    for (term, v) in [
        ("nonlinear detuning", shift),
        ("two-photon absorption", tpa),
        ("free-carrier absorption", fca),
        ("absorbed power", absorbed),
        ("modal amplitude (real)", r.amplitude.re),
        ("modal amplitude (imag)", r.amplitude.im),
        ("carrier density", r.carrier_density),
        ("temperature", r.temperature_offset),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite { term });
        }
    }
    Ok(r)
}

/// Result of one RK4 step together with the slope at the start of the step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepResult {
    pub state: CavityState,
    pub start_slope: Complex64,
}

#[inline]
pub(crate) fn rk4_with_slope(
    c: &Coefficients,
    state: &CavityState,
    e_in: Complex64,
    e_add: [Complex64; 3],
    h: f64,
) -> Option<StepResult> {
    let (k1, _) = c.rate(state, c.drive(e_in, e_add[0]));
    let mid_drive = c.drive(e_in, e_add[1]);
    let (k2, _) = c.rate(&state.offset(&k1, 0.5 * h), mid_drive);
    let (k3, _) = c.rate(&state.offset(&k2, 0.5 * h), mid_drive);
    let (k4, _) = c.rate(&state.offset(&k3, h), c.drive(e_in, e_add[2]));
    let w = h / 6.0;
    let next = CavityState {
        amplitude: state.amplitude
            + (k1.amplitude + (k2.amplitude + k3.amplitude) * 2.0 + k4.amplitude) * w,
        carrier_density: state.carrier_density
            + (k1.carrier_density
                + 2.0 * (k2.carrier_density + k3.carrier_density)
                + k4.carrier_density)
                * w,
        temperature_offset: state.temperature_offset
            + (k1.temperature_offset
                + 2.0 * (k2.temperature_offset + k3.temperature_offset)
                + k4.temperature_offset)
                * w,
    };
    next.is_finite().then_some(StepResult {
        state: next,
        start_slope: k1.amplitude,
    })
}

/// Builds the integration error for a step that produced non-finite values,
/// re-running the checked path to name the diverging term.
pub(crate) fn integration_failure(
    state: &CavityState,
    e_in: Complex64,
    e_add: [Complex64; 3],
    params: &PhysicalParams,
    t: f64,
) -> Error {
    let c = Coefficients::new(params);
    let source = derivatives(state, e_in, e_add[0], params)
        .err()
        .or_else(|| {
            let (k1, _) = c.rate(state, c.drive(e_in, e_add[0]));
            let probe = state.offset(&k1, params.dt);
            derivatives(&probe, e_in, e_add[2], params).err()
        })
        .unwrap_or(Error::NonFinite { term: "state" });
    Error::Integration {
        time_s: t,
        source: Box::new(source),
    }
}

/// Advances `state` by one step of `params.dt` with classical fourth-order
/// Runge-Kutta.
///
/// `e_in` is held constant over the step; `e_add` gives the add-port field at the
/// start, midpoint and end of the step. `t` is only used to label failures.
pub fn step_rk4(
    state: &CavityState,
    e_in: Complex64,
    e_add: [Complex64; 3],
    params: &PhysicalParams,
    t: f64,
) -> Result<CavityState> {
    rk4_with_slope(&Coefficients::new(params), state, e_in, e_add, params.dt)
        .map(|s| s.state)
        .ok_or_else(|| integration_failure(state, e_in, e_add, params, t))
}

/// Port fields for the symmetric add-drop ring: `E_t = E_in + i mu1 a`,
/// `E_d = E_add + i mu2 a`.
pub fn output_fields(
    state: &CavityState,
    e_in: Complex64,
    e_add: Complex64,
    params: &PhysicalParams,
) -> PortFields {
    PortFields {
        input: e_in,
        add: e_add,
        through: e_in + I * params.input_coupling * state.amplitude,
        drop: e_add + I * params.add_coupling * state.amplitude,
    }
}

/// Nonlinear detuning samples and their spread.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetuningTrace {
    pub samples: Vec<f64>,
}

impl DetuningTrace {
    pub fn new(samples: Vec<f64>) -> Self {
        Self { samples }
    }

    /// Population standard deviation in Hz; exactly zero for a constant trace.
    pub fn sigma(&self) -> f64 {
        population_std(&self.samples)
    }
}

pub(crate) fn population_std(xs: &[f64]) -> f64 {
    let Some(&first) = xs.first() else {
        return 0.0;
    };
    if xs.iter().all(|&x| x == first) {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}
