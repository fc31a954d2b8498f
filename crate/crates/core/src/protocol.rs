//! Per-shot protocol layer: Alice's deterministic battery depletion, the
//! syndrome channel (optionally degraded to an information fraction f),
//! and Bob's decode-and-charge step.
//!
//! The charge pulse is analytic (pulse area pi/2 moves exactly the gap
//! energy and leaves Alice empty), so no state-vector simulation happens
//! here; a shot reduces to sampling one syndrome history and decoding it.
//! Partial information enters through the fitted percolation model
//! `P_eff(f) = 1/2 + (P_raw - 1/2) f^alpha`, not by physically dropping
//! syndromes.

use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::geometry::CodeGeometry;
use crate::noise::{sample_history, NoiseParams};
use crate::thermo::ThermoParams;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Two-level battery with gap `delta_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub charged: bool,
    pub gap: f64,
}

impl BatteryState {
    pub fn new(charged: bool, gap: f64) -> Result<Self> {
        if gap <= 0.0 {
            return Err(Error::invalid("gap", "battery gap must be positive"));
        }
        Ok(BatteryState { charged, gap })
    }

    pub fn energy(&self) -> f64 {
        if self.charged {
            self.gap
        } else {
            0.0
        }
    }
}

/// Alice's depletion stage. The pulse area is pinned to pi/2, which moves
/// exactly the gap energy out of her battery every shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeStage {
    pub pulse_area: f64,
    pub energy_moved: f64,
}

impl ChargeStage {
    pub fn new(delta_e: f64) -> Result<Self> {
        if delta_e <= 0.0 {
            return Err(Error::invalid("delta_e", "must be positive"));
        }
        Ok(ChargeStage { pulse_area: std::f64::consts::FRAC_PI_2, energy_moved: delta_e })
    }
}

/// Classical record of one completed shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotOutcome {
    /// Bob's inferred logical class matched the accumulated truth.
    pub success: bool,
    /// Energy Alice spent; identical across shots by construction.
    pub alice_spent: f64,
    /// Syndromes transmitted per round, M = 2L.
    pub syndromes_available: usize,
    pub rounds_used: usize,
    pub seed_index: u64,
}

/// Degraded classical channel carrying a fraction `f` of the syndrome
/// record, with the fitted percolation exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoChannel {
    pub fraction: f64,
    pub alpha: f64,
    /// Measured success probability at full information (f = 1).
    pub p_raw_full: f64,
}

impl InfoChannel {
    pub fn new(fraction: f64, alpha: f64, p_raw_full: f64) -> Result<Self> {
        let channel = InfoChannel { fraction, alpha, p_raw_full };
        channel.validate()?;
        Ok(channel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::invalid("fraction", "need 0 <= f <= 1"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(0.5..=1.0).contains(&self.p_raw_full) {
            return Err(Error::invalid("p_raw_full", "need 0.5 <= p_raw_full <= 1"));
        }
        Ok(())
    }
}

/// Success probability under partial information:
/// `1/2 + (p_raw_full - 1/2) f^alpha`, clamped to [1/2, 1].
pub fn effective_success(channel: &InfoChannel) -> Result<f64> {
    channel.validate()?;
    let raw = 0.5 + (channel.p_raw_full - 0.5) * channel.fraction.powf(channel.alpha);
    Ok(raw.clamp(0.5, 1.0))
}

/// Extractable energy of Bob's battery at success probability `p_succ`:
/// `max(0, (2 p_succ - 1) delta_e)`.
pub fn ergotropy_from_success(p_succ: f64, delta_e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_succ) {
        return Err(Error::invalid("p_succ", "need 0 <= p_succ <= 1"));
    }
    if delta_e <= 0.0 {
        return Err(Error::invalid("delta_e", "must be positive"));
    }
    Ok(((2.0 * p_succ - 1.0) * delta_e).max(0.0))
}

/// Reusable shot executor: one decoder per `(geometry, noise, rounds)`
/// configuration, cleared between shots.
pub struct ShotRunner<'a> {
    geom: &'a CodeGeometry,
    noise: NoiseParams,
    rounds: usize,
    delta_e: f64,
    decoder: Decoder,
}

impl<'a> ShotRunner<'a> {
    pub fn new(
        geom: &'a CodeGeometry,
        noise: NoiseParams,
        rounds: usize,
        params: &ThermoParams,
    ) -> Result<Self> {
        params.validate()?;
        let decoder = Decoder::new(geom, &noise, rounds)?;
        Ok(ShotRunner { geom, noise, rounds, delta_e: params.delta_e, decoder })
    }

    /// Execute one shot on the given random stream.
    pub fn run(&mut self, seed_index: u64, rng: &mut impl Rng) -> Result<ShotOutcome> {
        let (history, truth) = sample_history(self.geom, &self.noise, self.rounds, rng)?;
        let success = self.decoder.success(&history, &truth)?;
        Ok(ShotOutcome {
            success,
            alice_spent: self.delta_e,
            syndromes_available: 2 * self.geom.distance,
            rounds_used: self.rounds,
            seed_index,
        })
    }
}

/// One-off shot without a reusable runner.
pub fn run_shot(
    geom: &CodeGeometry,
    noise: &NoiseParams,
    rounds: usize,
    params: &ThermoParams,
    seed_index: u64,
    rng: &mut impl Rng,
) -> Result<ShotOutcome> {
    ShotRunner::new(geom, *noise, rounds, params)?.run(seed_index, rng)
}
