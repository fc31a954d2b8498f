//! Phenomenological noise sampling: per-round X flips on data edges plus
//! bit-flips on reported plaquette outcomes, with spacetime detection
//! events derived from consecutive-round differences.

use crate::error::{Error, Result};
use crate::geometry::CodeGeometry;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Physical noise parameters.
///
/// Draw order within one round is fixed: data edges in index order, then
/// (unless this is a perfect final round) measurement flips in plaquette
/// index order. Identical `(seed, geometry, noise, rounds)` therefore
/// reproduce the history bit for bit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseParams {
    /// X-error probability per data qubit per round.
    pub p: f64,
    /// Measurement bit-flip probability as a fraction of `p`.
    pub meas_factor: f64,
    /// Close the decoding problem with a noiseless final round.
    pub final_round_perfect: bool,
}

impl NoiseParams {
    pub fn new(p: f64) -> Result<Self> {
        Self::with_meas_factor(p, 0.1)
    }

    pub fn with_meas_factor(p: f64, meas_factor: f64) -> Result<Self> {
        let params = NoiseParams { p, meas_factor, final_round_perfect: true };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::invalid("p", "need 0 <= p < 0.5"));
        }
        if self.meas_factor < 0.0 || self.p * self.meas_factor >= 0.5 {
            return Err(Error::invalid("meas_factor", "need 0 <= p*meas_factor < 0.5"));
        }
        Ok(())
    }

    /// Measurement bit-flip probability `q_m = p * meas_factor`.
    pub fn meas_p(&self) -> f64 {
        self.p * self.meas_factor
    }
}

/// `R` rounds of reported plaquette outcomes plus the derived spacetime
/// detection events.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeHistory {
    pub rounds: usize,
    pub n_plaquettes: usize,
    /// Row-major `R x |P|` outcome bits.
    pub outcomes: Vec<u8>,
    /// `(plaquette, round)` coordinates where consecutive outcomes differ
    /// (round 0 is compared against the all-quiet reference).
    pub detections: Vec<(usize, usize)>,
}

impl SyndromeHistory {
    pub fn outcome(&self, plaquette: usize, round: usize) -> u8 {
        self.outcomes[round * self.n_plaquettes + plaquette]
    }

    /// One bitstring line per round, in fixed plaquette-index order.
    pub fn dump_lines(&self) -> Vec<String> {
        (0..self.rounds)
            .map(|r| {
                (0..self.n_plaquettes)
                    .map(|p| if self.outcome(p, r) == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }
}

/// Ground truth for one sampled history: the accumulated X-error frame at
/// the final round and its logical class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTruth {
    /// Per-edge accumulated X-error indicator (final frame).
    pub accumulated_x_errors: Vec<bool>,
    /// Parity of the accumulated frame on the row-0 logical-Z support.
    pub true_logical_flip: bool,
}

/// Plaquette syndrome of an X-error frame: entry `p` is the overlap parity
/// of the frame with the (truncated) support of check `B_p`.
pub fn syndrome_of_frame(geom: &CodeGeometry, x_errors: &[usize]) -> Result<Vec<u8>> {
    let mut syndrome = vec![0u8; geom.n_plaquettes()];
    for &e in x_errors {
        if e >= geom.n_edges() {
            return Err(Error::invalid("x_errors", format!("edge index {} out of range", e)));
        }
        for &p in &geom.edge_plaquettes[e] {
            syndrome[p] ^= 1;
        }
    }
    Ok(syndrome)
}

/// Sample one noisy syndrome history over `rounds` rounds.
///
/// Each round flips every data edge with probability `p`, recomputes the
/// plaquette syndrome of the accumulated frame, then flips each reported
/// outcome with probability `p * meas_factor` (skipped on the final round
/// when `final_round_perfect`).
pub fn sample_history(
    geom: &CodeGeometry,
    noise: &NoiseParams,
    rounds: usize,
    rng: &mut impl Rng,
) -> Result<(SyndromeHistory, ErrorTruth)> {
    noise.validate()?;
    if rounds == 0 {
        return Err(Error::invalid("rounds", "must be >= 1"));
    }
    let n_e = geom.n_edges();
    let n_p = geom.n_plaquettes();
    let q_m = noise.meas_p();

    let mut frame = vec![false; n_e];
    let mut syndrome = vec![0u8; n_p];
    let mut outcomes = vec![0u8; rounds * n_p];
    let mut detections = Vec::new();
    let mut prev = vec![0u8; n_p];

    for r in 0..rounds {
        for e in 0..n_e {
            if noise.p > 0.0 && rng.gen::<f64>() < noise.p {
                frame[e] = !frame[e];
                for &p in &geom.edge_plaquettes[e] {
                    syndrome[p] ^= 1;
                }
            }
        }
        let perfect = noise.final_round_perfect && r == rounds - 1;
        let row = &mut outcomes[r * n_p..(r + 1) * n_p];
        row.copy_from_slice(&syndrome);
        if !perfect && q_m > 0.0 {
            for bit in row.iter_mut() {
                if rng.gen::<f64>() < q_m {
                    *bit ^= 1;
                }
            }
        }
        for p in 0..n_p {
            if row[p] != prev[p] {
                detections.push((p, r));
            }
        }
        prev.copy_from_slice(row);
    }

    let flip = (0..geom.n_cols).fold(false, |acc, x| acc ^ frame[geom.h_edge(x, 0)]);
    Ok((
        SyndromeHistory { rounds, n_plaquettes: n_p, outcomes, detections },
        ErrorTruth { accumulated_x_errors: frame, true_logical_flip: flip },
    ))
}

/// Header + bitstring dump of a history, for cross-implementation diffing.
pub fn dump_history(
    geom: &CodeGeometry,
    noise: &NoiseParams,
    seed: u64,
    history: &SyndromeHistory,
) -> String {
    let mut out = format!(
        "# geometry N={} L={} p={} meas_factor={} final_round_perfect={} seed={} rounds={}\n",
        geom.n_cols, geom.distance, noise.p, noise.meas_factor, noise.final_round_perfect, seed, history.rounds
    );
    for line in history.dump_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out
}
