//! Closed-loop operation: the through port is routed back to the add port through
//! a delay line of `feedback_delay` seconds.
//!
//! The delay line stores, for every past step, the input field and the modal
//! amplitude and slope at both ends of the step. The delayed through field at the
//! RK4 midpoint is reconstructed with cubic Hermite interpolation, which keeps the
//! closed loop fourth-order accurate.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::{
    integration_failure, nonlinear_detuning, output_fields, rk4_with_slope, step_rk4, CavityState,
    Coefficients, DetuningTrace, PortFields,
};
use crate::error::{Error, Result};
use crate::params::PhysicalParams;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, Default)]
struct DelaySlot {
    input: Complex64,
    start: Complex64,
    start_slope: Complex64,
    end: Complex64,
    end_slope: Complex64,
}

/// Per-step output of [`FeedbackLoop::advance`], evaluated at the start of the step.
#[derive(Debug, Clone, Copy)]
pub struct LoopSample {
    pub fields: PortFields,
    pub detuning_hz: f64,
    pub state: CavityState,
}

/// Streaming integrator for the ring closed through its delay line.
#[derive(Debug, Clone)]
pub struct FeedbackLoop {
    params: PhysicalParams,
    coefficients: Coefficients,
    state: CavityState,
    delay: usize,
    slots: Vec<DelaySlot>,
    // slot index written by the current step
    cursor: usize,
    loop_gain: Complex64,
    step: usize,
    // inputs used at the last RK4 stage of the previous step
    prev_end: Option<(Complex64, Complex64)>,
}

impl FeedbackLoop {
    pub fn new(params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        let delay = params.delay_steps();
        let loop_gain = Complex64::from_polar(
            params.feedback_amplitude_transmission,
            params.feedback_phase,
        );
        if delay == 0 && loop_gain != Complex64::default() {
            return Err(Error::param(
                "feedback_delay",
                "a closed loop needs a delay of at least one step",
            ));
        }
        Ok(Self {
            params: params.clone(),
            coefficients: Coefficients::new(params),
            state: CavityState::default(),
            delay,
            slots: vec![DelaySlot::default(); delay + 1],
            cursor: 0,
            loop_gain,
            step: 0,
            prev_end: None,
        })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn state(&self) -> &CavityState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.params.dt
    }

    /// Add-port field at the start, midpoint and end of the current step.
    fn delayed_add(&self) -> [Complex64; 3] {
        if self.step < self.delay || self.loop_gain == Complex64::default() {
            return [Complex64::default(); 3];
        }
        // the slot after the cursor is `delay` steps old
        let next = self.cursor + 1;
        let s = &self.slots[if next == self.slots.len() { 0 } else { next }];
        let h = self.params.dt;
        let mid = (s.start + s.end) * 0.5 + (s.start_slope - s.end_slope) * (h / 8.0);
        let mu = I * self.params.input_coupling;
        [s.start, mid, s.end].map(|a| self.loop_gain * (s.input + mu * a))
    }

    /// Sets the right-end slope of the previous slot. The slope there equals the
    /// start slope of the current step unless an input jumped at the boundary.
    fn close_previous(
        &mut self,
        current: Option<(Complex64, Complex64, Complex64)>,
        t: f64,
    ) -> Result<()> {
        let Some((prev_in, prev_add)) = self.prev_end.take() else {
            return Ok(());
        };
        let end_slope = match current {
            Some((e_in, e_add, slope)) if e_in == prev_in && e_add == prev_add => slope,
            _ => {
                let slope = self
                    .coefficients
                    .amplitude_rate(&self.state, self.coefficients.drive(prev_in, prev_add));
                if !(slope.re.is_finite() && slope.im.is_finite()) {
                    return Err(integration_failure(
                        &self.state,
                        prev_in,
                        [prev_add; 3],
                        &self.params,
                        t,
                    ));
                }
                slope
            }
        };
        let prev = if self.cursor == 0 {
            self.slots.len() - 1
        } else {
            self.cursor - 1
        };
        self.slots[prev].end_slope = end_slope;
        Ok(())
    }

    /// Integrates one step with `e_in` held constant and returns the port fields at
    /// the start of the step.
    pub fn advance(&mut self, e_in: Complex64) -> Result<LoopSample> {
        let t = self.time();
        // With a one-step delay the previous slot is read right away, so its end
        // slope has to be closed before the delayed field is formed.
        if self.delay <= 1 {
            self.close_previous(None, t)?;
        }
        let e_add = self.delayed_add();
        let step = rk4_with_slope(&self.coefficients, &self.state, e_in, e_add, self.params.dt)
            .ok_or_else(|| integration_failure(&self.state, e_in, e_add, &self.params, t))?;
        if self.delay > 1 {
            self.close_previous(Some((e_in, e_add[0], step.start_slope)), t)?;
        }

        let sample = LoopSample {
            fields: output_fields(&self.state, e_in, e_add[0], &self.params),
            detuning_hz: self.coefficients.detuning_hz(&self.state),
            state: self.state,
        };

        self.slots[self.cursor] = DelaySlot {
            input: e_in,
            start: self.state.amplitude,
            start_slope: step.start_slope,
            end: step.state.amplitude,
            end_slope: step.start_slope,
        };
        self.prev_end = Some((e_in, e_add[2]));
        self.state = step.state;
        self.step += 1;
        self.cursor += 1;
        if self.cursor == self.slots.len() {
            self.cursor = 0;
        }
        Ok(sample)
    }
}

/// Sampled outputs of a closed- or open-loop run on the `dt` grid.
#[derive(Debug, Clone, Default)]
pub struct LoopRun {
    pub drop_power: Vec<f64>,
    pub through_power: Vec<f64>,
    pub add_power: Vec<f64>,
    pub trace: DetuningTrace,
}

impl LoopRun {
    fn with_capacity(n: usize) -> Self {
        Self {
            drop_power: Vec::with_capacity(n),
            through_power: Vec::with_capacity(n),
            add_power: Vec::with_capacity(n),
            trace: DetuningTrace::new(Vec::with_capacity(n)),
        }
    }

    fn push(&mut self, f: &PortFields, detuning: f64) {
        self.drop_power.push(f.drop_power());
        self.through_power.push(f.through_power());
        self.add_power.push(f.add.norm_sqr());
        self.trace.samples.push(detuning);
    }
}

/// Runs the closed loop over `input` (one complex field sample per `dt`), starting
/// from the empty cavity and an all-zero delay line.
pub fn run_with_feedback(input: &[Complex64], params: &PhysicalParams) -> Result<LoopRun> {
    let mut lp = FeedbackLoop::new(params)?;
    if input.len() < lp.delay {
        return Err(Error::Shape(format!(
            "input of {} samples is shorter than the feedback delay ({} samples)",
            input.len(),
            lp.delay
        )));
    }
    let mut out = LoopRun::with_capacity(input.len());
    for &e in input {
        let s = lp.advance(e)?;
        out.push(&s.fields, s.detuning_hz);
    }
    Ok(out)
}

/// Runs the ring with nothing injected at the add port.
pub fn run_open_loop(input: &[Complex64], params: &PhysicalParams) -> Result<LoopRun> {
    params.validate()?;
    let zero = Complex64::default();
    let mut state = CavityState::default();
    let mut out = LoopRun::with_capacity(input.len());
    for (n, &e) in input.iter().enumerate() {
        let f = output_fields(&state, e, zero, params);
        out.push(&f, nonlinear_detuning(&state, params));
        state = step_rk4(&state, e, [zero; 3], params, n as f64 * params.dt)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfPulsingConfig {
    /// Settling window in units of the thermal time.
    pub settle_thermal_times: f64,
    /// Observation window in units of the thermal time.
    pub observe_thermal_times: f64,
    pub depth_threshold: f64,
}

impl Default for SelfPulsingConfig {
    fn default() -> Self {
        Self {
            settle_thermal_times: 20.0,
            observe_thermal_times: 10.0,
            depth_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfPulsing {
    pub is_pulsing: bool,
    /// `(max - min) / mean` of the drop power over the observation window.
    pub oscillation_depth: f64,
}

/// Drives the closed loop with a constant power and checks whether the drop power
/// settles or keeps oscillating.
pub fn detect_self_pulsing(
    params: &PhysicalParams,
    power_w: f64,
    pump_detuning: f64,
    cfg: &SelfPulsingConfig,
) -> Result<SelfPulsing> {
    let params = params.with_detuning(pump_detuning);
    let mut lp = FeedbackLoop::new(&params)?;
    let field = Complex64::new(power_w.max(0.0).sqrt(), 0.0);
    let settle = (cfg.settle_thermal_times * params.thermal_time / params.dt).ceil() as usize;
    let observe =
        ((cfg.observe_thermal_times * params.thermal_time / params.dt).ceil() as usize).max(1);
    for _ in 0..settle {
        lp.advance(field)?;
    }
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for _ in 0..observe {
        let p = lp.advance(field)?.fields.drop_power();
        lo = lo.min(p);
        hi = hi.max(p);
        sum += p;
    }
    let mean = sum / observe as f64;
    let depth = if mean > 0.0 { (hi - lo) / mean } else { 0.0 };
    Ok(SelfPulsing {
        is_pulsing: depth > cfg.depth_threshold,
        oscillation_depth: depth,
    })
}
