//! Thermodynamic bookkeeping: temperature mapping, operating and
//! infrastructure costs, net work, heat flow, entropy production, and the
//! derived horizon and critical-rate quantities.
//!
//! Conventions: the stabiliser coupling J and Boltzmann's constant are
//! both 1, every energy is in units of J, temperatures are reported as
//! k_B T, and entropies are in nats.

use crate::error::{Error, Result};
use crate::protocol::ergotropy_from_success;
use serde::{Deserialize, Serialize};

const LN_2: f64 = std::f64::consts::LN_2;

/// Fixed physical parameters of the energy accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    /// Stabiliser coupling J; the energy unit.
    pub coupling_j: f64,
    /// Battery gap.
    pub delta_e: f64,
    /// Measurement cost per stabiliser per round.
    pub epsilon_m: f64,
    /// Syndrome rounds per unit of separation.
    pub r0: f64,
    /// Boltzmann constant.
    pub boltzmann: f64,
}

/// Default calibration anchors: the `epsilon_m * r0` product is fixed
/// once by inverting the horizon formula at this target, then reused for
/// every other prediction.
pub const DEFAULT_DELTA_E: f64 = 146.5;
pub const CALIBRATION_TARGET_N_MAX: f64 = 78.0;
pub const CALIBRATION_DISTANCE: usize = 7;
pub const CALIBRATION_P: f64 = 0.005;

impl ThermoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("coupling_j", self.coupling_j),
            ("delta_e", self.delta_e),
            ("epsilon_m", self.epsilon_m),
            ("r0", self.r0),
            ("boltzmann", self.boltzmann),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {}", v)));
            }
        }
        Ok(())
    }
}

impl Default for ThermoParams {
    /// Defaults with `epsilon_m` calibrated so the horizon at perfect
    /// decoding, L = 7, p = 0.005 lands on N_max = 78.
    fn default() -> Self {
        let mut params = ThermoParams {
            coupling_j: 1.0,
            delta_e: DEFAULT_DELTA_E,
            epsilon_m: 1.0,
            r0: 1.0,
            boltzmann: 1.0,
        };
        let kbt = temperature_from_p(CALIBRATION_P).expect("calibration p in range");
        params.epsilon_m =
            calibrate_infrastructure(CALIBRATION_TARGET_N_MAX, 1.0, &params, CALIBRATION_DISTANCE, kbt)
                .expect("default calibration is well posed")
                / params.r0;
        params
    }
}

/// Full per-operating-point energy and entropy ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoLedger {
    pub p_succ: f64,
    /// k_B T in J.
    pub kbt: f64,
    /// Ergotropy of Bob's battery.
    pub e_b: f64,
    /// Erasure cost of the syndrome record, 2 M k_B T ln 2.
    pub w_ops: f64,
    /// Infrastructure cost, 2 L R_0 eps_m N^2.
    pub w_bulk: f64,
    /// e_b - w_ops - w_bulk.
    pub w_net: f64,
    /// Heat dumped to the bath: delta_e + w_ops + w_bulk - e_b.
    pub q_bath: f64,
    /// Binary entropy of the success probability, nats.
    pub ds_bob: f64,
    /// q_bath / kbt + ds_bob.
    pub ds_total: f64,
    /// Plug-in mutual information between true and decoded class, nats.
    pub mi_diag: f64,
    /// k_B T M ln 2 - e_b; reported only, may be negative.
    pub su_bound_margin: f64,
}

/// Map a physical flip rate to its effective temperature,
/// `k_B T = -4 J / ln p`.
pub fn temperature_from_p(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "temperature_from_p",
            message: format!("need 0 < p < 1, got {}", p),
        });
    }
    Ok(-4.0 / p.ln())
}

/// Erasure cost of the M = 2L syndrome bits per shot: `2 M k_B T ln 2`.
pub fn w_ops(distance: usize, kbt: f64) -> f64 {
    2.0 * (2 * distance) as f64 * kbt * LN_2
}

/// Infrastructure cost of moving syndome data across separation `n`:
/// `2 L r0 eps_m n^2`.
pub fn w_bulk(distance: usize, r0: f64, epsilon_m: f64, n: usize) -> f64 {
    2.0 * distance as f64 * r0 * epsilon_m * (n * n) as f64
}

fn binary_entropy_nats(p: f64) -> f64 {
    let mut h = 0.0;
    for q in [p, 1.0 - p] {
        if q > 0.0 {
            h -= q * q.ln();
        }
    }
    h
}

/// Assemble the ledger at one operating point.
pub fn ledger(
    p_succ: f64,
    p: f64,
    params: &ThermoParams,
    distance: usize,
    separation: usize,
    mi_estimate: f64,
) -> Result<ThermoLedger> {
    params.validate()?;
    if !(0.0..=1.0).contains(&p_succ) {
        return Err(Error::invalid("p_succ", "need 0 <= p_succ <= 1"));
    }
    let kbt = temperature_from_p(p)?;
    let e_b = ergotropy_from_success(p_succ, params.delta_e)?;
    let w_ops = w_ops(distance, kbt);
    let w_bulk = w_bulk(distance, params.r0, params.epsilon_m, separation);
    let q_bath = params.delta_e + w_ops + w_bulk - e_b;
    let ds_bob = binary_entropy_nats(p_succ);
    Ok(ThermoLedger {
        p_succ,
        kbt,
        e_b,
        w_ops,
        w_bulk,
        w_net: e_b - w_ops - w_bulk,
        q_bath,
        ds_bob,
        ds_total: q_bath / kbt + ds_bob,
        mi_diag: mi_estimate,
        su_bound_margin: kbt * (2 * distance) as f64 * LN_2 - e_b,
    })
}

/// Result of the horizon computation: either a finite break-even
/// separation or the statement that no separation is profitable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    BreakEven(f64),
    NeverProfitable,
}

impl Horizon {
    pub fn value(&self) -> Option<f64> {
        match self {
            Horizon::BreakEven(n) => Some(*n),
            Horizon::NeverProfitable => None,
        }
    }
}

/// Break-even separation
/// `N_max = sqrt(((2 p_succ - 1) delta_e - w_ops) / (2 L r0 eps_m))`.
pub fn horizon_n_max(p_succ: f64, params: &ThermoParams, distance: usize, kbt: f64) -> Result<Horizon> {
    params.validate()?;
    if !(0.0..=1.0).contains(&p_succ) {
        return Err(Error::invalid("p_succ", "need 0 <= p_succ <= 1"));
    }
    let numerator = (2.0 * p_succ - 1.0) * params.delta_e - w_ops(distance, kbt);
    if numerator <= 0.0 {
        return Ok(Horizon::NeverProfitable);
    }
    Ok(Horizon::BreakEven(
        (numerator / (2.0 * distance as f64 * params.r0 * params.epsilon_m)).sqrt(),
    ))
}

/// Invert the horizon formula: the `epsilon_m * r0` product that places
/// the break-even separation at `target_n_max`.
pub fn calibrate_infrastructure(
    target_n_max: f64,
    p_succ: f64,
    params: &ThermoParams,
    distance: usize,
    kbt: f64,
) -> Result<f64> {
    if !(target_n_max > 0.0) {
        return Err(Error::invalid("target_n_max", "must be positive"));
    }
    let numerator = (2.0 * p_succ - 1.0) * params.delta_e - w_ops(distance, kbt);
    if numerator <= 0.0 {
        return Err(Error::Domain {
            what: "calibrate_infrastructure",
            message: "ergotropy does not exceed the operating cost; no horizon exists".into(),
        });
    }
    Ok(numerator / (2.0 * distance as f64 * target_n_max * target_n_max))
}

/// Tolerance of the critical-rate bisection.
pub const CRITICAL_P_TOL: f64 = 1e-5;

/// Root of `(2 P_succ(p) - 1) delta_e - w_ops(p) - w_bulk = 0` over
/// `bracket`, found by bisection to 1e-5 absolute tolerance.
pub fn critical_p(
    params: &ThermoParams,
    distance: usize,
    separation: usize,
    p_succ_curve: &dyn Fn(f64) -> f64,
    bracket: (f64, f64),
) -> Result<f64> {
    params.validate()?;
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(Error::invalid("bracket", "need 0 < lo < hi < 1"));
    }
    let g = |p: f64| -> Result<f64> {
        let kbt = temperature_from_p(p)?;
        Ok((2.0 * p_succ_curve(p) - 1.0) * params.delta_e
            - w_ops(distance, kbt)
            - w_bulk(distance, params.r0, params.epsilon_m, separation))
    };
    let (g_lo, g_hi) = (g(lo)?, g(hi)?);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NoTransition(format!(
            "net-work balance has the same sign at both bracket ends [{}, {}]",
            lo, hi
        )));
    }
    while hi - lo > CRITICAL_P_TOL {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Plug-in mutual information (nats) of a 2x2 contingency table of
/// (true class, decoded class) counts.
pub fn mutual_information_plugin(counts: [[u64; 2]; 2]) -> Result<f64> {
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(Error::InsufficientData("empty contingency table".into()));
    }
    let n = total as f64;
    let row: Vec<f64> = (0..2).map(|i| (counts[i][0] + counts[i][1]) as f64 / n).collect();
    let col: Vec<f64> = (0..2).map(|j| (counts[0][j] + counts[1][j]) as f64 / n).collect();
    let mut mi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let pij = counts[i][j] as f64 / n;
            if pij > 0.0 {
                mi += pij * (pij / (row[i] * col[j])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}
