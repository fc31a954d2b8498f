//! Monte Carlo sweeps and fits behind each figure-style dataset:
//! suppression curves, threshold crossing, net-work sign change, the
//! separation horizon, temporal protection, the information threshold,
//! and the (p, f) phase diagram.
//!
//! Every sweep point draws from its own counter-based random stream, so
//! results are independent of worker-thread count and iteration order;
//! aggregation is a commutative count reduction.

use crate::decoder::Decoder;
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, CodeGeometry};
use crate::noise::{sample_history, NoiseParams};
use crate::protocol::{effective_success, ergotropy_from_success, InfoChannel};
use crate::rngstream::shot_rng;
use crate::stats::{fmt_sig9, lin_space, linear_fit, log_space, wilson_interval};
use crate::thermo::{
    critical_p, ledger, mutual_information_plugin, temperature_from_p, w_bulk, w_ops, ThermoParams,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Default percolation exponent of the information channel.
pub const DEFAULT_ALPHA: f64 = 2.7;
/// Default Monte Carlo shots per sweep point.
pub const DEFAULT_SHOTS: u32 = 8000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Suppression,
    ThresholdScan,
    Phasecut,
    Horizon,
    Temporal,
    InfoFraction,
    PhaseDiagram,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Suppression => "suppression",
            ExperimentKind::ThresholdScan => "threshold_scan",
            ExperimentKind::Phasecut => "phasecut",
            ExperimentKind::Horizon => "horizon",
            ExperimentKind::Temporal => "temporal",
            ExperimentKind::InfoFraction => "info_fraction",
            ExperimentKind::PhaseDiagram => "phase_diagram",
        }
    }
}

/// How many syndrome rounds a sweep point uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundsPolicy {
    Fixed(usize),
    /// R = round(r0 * N), at least 1.
    PerSeparation,
}

impl RoundsPolicy {
    pub fn rounds_for(&self, n: usize, r0: f64) -> usize {
        match self {
            RoundsPolicy::Fixed(r) => (*r).max(1),
            RoundsPolicy::PerSeparation => ((r0 * n as f64).round() as usize).max(1),
        }
    }
}

/// Full description of one sweep; everything a re-run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n_list: Vec<usize>,
    pub l_list: Vec<usize>,
    pub p_list: Vec<f64>,
    /// Information fractions (info_fraction / phase_diagram).
    pub f_list: Vec<f64>,
    /// Round counts swept by the temporal experiment.
    pub r_list: Vec<usize>,
    pub rounds: RoundsPolicy,
    pub shots: u32,
    pub master_seed: u64,
    pub alpha: f64,
    pub meas_factor: f64,
    pub thermo: ThermoParams,
}

impl ExperimentSpec {
    fn base(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            n_list: vec![40],
            l_list: vec![7],
            p_list: vec![0.005],
            f_list: Vec::new(),
            r_list: Vec::new(),
            rounds: RoundsPolicy::PerSeparation,
            shots: DEFAULT_SHOTS,
            master_seed: 0,
            alpha: DEFAULT_ALPHA,
            meas_factor: 0.1,
            thermo: ThermoParams::default(),
        }
    }

    /// Suppression curves: P_log versus distance at several error rates.
    pub fn suppression(master_seed: u64) -> Self {
        ExperimentSpec {
            n_list: vec![20],
            l_list: vec![3, 5, 7],
            p_list: vec![0.003, 0.005, 0.008, 0.015],
            rounds: RoundsPolicy::Fixed(20),
            master_seed,
            ..Self::base(ExperimentKind::Suppression)
        }
    }

    /// Crossing scan of P_log(p) curves across distances.
    pub fn threshold_scan(master_seed: u64) -> Self {
        ExperimentSpec {
            n_list: vec![20],
            l_list: vec![3, 5, 7],
            p_list: log_space(0.01, 0.08, 9),
            rounds: RoundsPolicy::Fixed(20),
            master_seed,
            ..Self::base(ExperimentKind::ThresholdScan)
        }
    }

    /// Net-work sweep in p at fixed geometry. The grid runs past the
    /// phase-diagram range so the sign change of w_net stays inside the
    /// sweep under phenomenological noise.
    pub fn phasecut(master_seed: u64) -> Self {
        ExperimentSpec {
            p_list: log_space(0.002, 0.035, 15),
            rounds: RoundsPolicy::Fixed(40),
            master_seed,
            ..Self::base(ExperimentKind::Phasecut)
        }
    }

    /// Net-work sweep in separation at fixed p, R = N.
    pub fn horizon(master_seed: u64) -> Self {
        ExperimentSpec {
            n_list: vec![10, 20, 30, 40, 50, 60, 70, 74, 78, 82, 90],
            master_seed,
            ..Self::base(ExperimentKind::Horizon)
        }
    }

    /// Ergotropy versus round count, with and without error correction.
    pub fn temporal(master_seed: u64) -> Self {
        ExperimentSpec {
            r_list: vec![1, 2, 3, 5, 8, 12, 16, 20, 25, 30, 35, 40, 50, 60, 70, 80],
            master_seed,
            ..Self::base(ExperimentKind::Temporal)
        }
    }

    /// Information-fraction sweep at fixed geometry and rate.
    pub fn info_fraction(master_seed: u64) -> Self {
        ExperimentSpec {
            f_list: lin_space(0.0, 1.0, 51),
            rounds: RoundsPolicy::Fixed(40),
            master_seed,
            ..Self::base(ExperimentKind::InfoFraction)
        }
    }

    /// (p, f) grid with simulated p axis and analytic f axis.
    pub fn phase_diagram(master_seed: u64) -> Self {
        ExperimentSpec {
            p_list: log_space(0.002, 0.020, 13),
            f_list: lin_space(0.0, 1.0, 51),
            rounds: RoundsPolicy::Fixed(40),
            master_seed,
            ..Self::base(ExperimentKind::PhaseDiagram)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::invalid("shots", "must be >= 1"));
        }
        if self.n_list.is_empty() || self.l_list.is_empty() || self.p_list.is_empty() {
            return Err(Error::invalid("ranges", "N, L, and p lists must be nonempty"));
        }
        if self.alpha <= 0.0 {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        self.thermo.validate()?;
        for &p in &self.p_list {
            NoiseParams::with_meas_factor(p, self.meas_factor)?;
        }
        match self.kind {
            ExperimentKind::Temporal if self.r_list.is_empty() => {
                Err(Error::invalid("r_list", "temporal sweep needs round counts"))
            }
            ExperimentKind::InfoFraction | ExperimentKind::PhaseDiagram if self.f_list.is_empty() => {
                Err(Error::invalid("f_list", "information sweep needs fractions"))
            }
            _ => Ok(()),
        }
    }
}

/// One named fit with parameters and standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub name: String,
    pub parameters: Vec<(String, f64)>,
    pub std_errors: Vec<(String, f64)>,
    pub residual_norm: f64,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }
}

/// Everything a sweep produces: a rectangular table, named fits, and the
/// metadata needed to regenerate it bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub fits: Vec<FitResult>,
    pub metadata: RunMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub spec: ExperimentSpec,
    pub master_seed: u64,
    pub version: String,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    pub fn fit(&self, name: &str) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.name == name)
    }

    /// Render the table; deterministic for a given spec + seed.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_sig9(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Write `<name>.json` (metadata + fits, first, for crash forensics)
    /// then `<name>.csv` into `out_dir`. Returns both paths.
    pub fn write(&self, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(out_dir)?;
        let name = self.metadata.spec.kind.name();
        let json_path = out_dir.join(format!("{}.json", name));
        let csv_path = out_dir.join(format!("{}.csv", name));
        let sidecar = serde_json::json!({
            "metadata": self.metadata,
            "fits": self.fits,
            "columns": self.header,
        });
        std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
        std::fs::write(&csv_path, self.to_csv())?;
        Ok((csv_path, json_path))
    }
}

/// Success estimate for one sweep point, with the class-agreement table
/// feeding the mutual-information diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub shots: u32,
    pub successes: u64,
    /// counts[true class][decoded class].
    pub counts: [[u64; 2]; 2],
    pub p_succ: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl PointEstimate {
    pub fn mi_nats(&self) -> f64 {
        mutual_information_plugin(self.counts).unwrap_or(0.0)
    }
}

/// Monte Carlo estimate of the decoding success probability at one sweep
/// point. Shots split over the worker pool; the count reduction is
/// commutative, so the result is thread-count independent.
pub fn estimate_point(
    geom: &CodeGeometry,
    noise: &NoiseParams,
    rounds: usize,
    shots: u32,
    master_seed: u64,
    point: u32,
) -> Result<PointEstimate> {
    Decoder::new(geom, noise, rounds)?;
    let counts = (0..shots)
        .into_par_iter()
        .map_init(
            || Decoder::new(geom, noise, rounds).expect("inputs validated above"),
            |decoder, shot| {
                let mut rng = shot_rng(master_seed, point, shot);
                let (history, truth) =
                    sample_history(geom, noise, rounds, &mut rng).expect("inputs validated above");
                let inferred = decoder
                    .decode(&history)
                    .expect("history came from this configuration")
                    .inferred_logical_flip;
                (truth.true_logical_flip as usize, inferred as usize)
            },
        )
        .fold(
            || [[0u64; 2]; 2],
            |mut acc, (t, d)| {
                acc[t][d] += 1;
                acc
            },
        )
        .reduce(
            || [[0u64; 2]; 2],
            |mut a, b| {
                for i in 0..2 {
                    for j in 0..2 {
                        a[i][j] += b[i][j];
                    }
                }
                a
            },
        );
    let successes = counts[0][0] + counts[1][1];
    let (wilson_low, wilson_high) = wilson_interval(successes, shots as u64);
    Ok(PointEstimate {
        shots,
        successes,
        counts,
        p_succ: successes as f64 / shots as f64,
        wilson_low,
        wilson_high,
    })
}

/// Spec-level convenience: estimate plus Wilson interval.
pub fn estimate_p_succ(
    geom: &CodeGeometry,
    noise: &NoiseParams,
    rounds: usize,
    shots: u32,
    master_seed: u64,
    point: u32,
) -> Result<(f64, (f64, f64))> {
    let e = estimate_point(geom, noise, rounds, shots, master_seed, point)?;
    Ok((e.p_succ, (e.wilson_low, e.wilson_high)))
}

fn finish(
    spec: &ExperimentSpec,
    header: &[&str],
    rows: Vec<Vec<f64>>,
    fits: Vec<FitResult>,
    started: std::time::Instant,
) -> ExperimentResult {
    ExperimentResult {
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
        fits,
        metadata: RunMetadata {
            spec: spec.clone(),
            master_seed: spec.master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    }
}

/// P_log versus distance at each error rate, with log-linear suppression
/// fits and the implied volume prefactor.
pub fn run_suppression(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let n = spec.n_list[0];
    let mut rows = Vec::new();
    let mut point = 0u32;
    // (p, l) -> p_log, retained for the fits below.
    let mut table: Vec<(f64, usize, f64)> = Vec::new();
    for &p in &spec.p_list {
        let noise = NoiseParams::with_meas_factor(p, spec.meas_factor)?;
        for &l in &spec.l_list {
            let geom = build_geometry(n, l)?;
            let rounds = spec.rounds.rounds_for(n, spec.thermo.r0);
            let est = estimate_point(&geom, &noise, rounds, spec.shots, spec.master_seed, point)?;
            point += 1;
            rows.push(vec![
                p,
                l as f64,
                n as f64,
                rounds as f64,
                spec.shots as f64,
                est.p_succ,
                est.wilson_low,
                est.wilson_high,
                1.0 - est.p_succ,
            ]);
            table.push((p, l, 1.0 - est.p_succ));
        }
    }
    let mut fits = Vec::new();
    let rounds = spec.rounds.rounds_for(n, spec.thermo.r0);
    let volume = (n * rounds) as f64;
    for &p in &spec.p_list {
        let pts: Vec<(f64, f64)> = table
            .iter()
            .filter(|&&(tp, _, plog)| tp == p && plog > 0.0)
            .map(|&(_, l, plog)| (l as f64, plog.ln()))
            .collect();
        if pts.len() >= 2 {
            let xs: Vec<f64> = pts.iter().map(|&(x, _)| x).collect();
            let ys: Vec<f64> = pts.iter().map(|&(_, y)| y).collect();
            let fit = linear_fit(&xs, &ys)?;
            fits.push(FitResult {
                name: format!("suppression_slope_p{}", fmt_sig9(p)),
                parameters: vec![
                    ("slope".into(), fit.slope),
                    ("prefactor_a".into(), fit.intercept.exp() / volume),
                ],
                std_errors: vec![("slope".into(), fit.slope_se)],
                residual_norm: fit.residual_norm,
            });
        }
    }
    for &l in &spec.l_list {
        let pts: Vec<(f64, f64)> = table
            .iter()
            .filter(|&&(_, tl, plog)| tl == l && plog > 0.0)
            .map(|&(p, _, plog)| (p.ln(), plog.ln()))
            .collect();
        if pts.len() >= 2 {
            let xs: Vec<f64> = pts.iter().map(|&(x, _)| x).collect();
            let ys: Vec<f64> = pts.iter().map(|&(_, y)| y).collect();
            let fit = linear_fit(&xs, &ys)?;
            fits.push(FitResult {
                name: format!("p_scaling_l{}", l),
                parameters: vec![("slope".into(), fit.slope)],
                std_errors: vec![("slope".into(), fit.slope_se)],
                residual_norm: fit.residual_norm,
            });
        }
    }
    Ok(finish(
        spec,
        &["p", "l", "n", "rounds", "shots", "p_succ", "wilson_low", "wilson_high", "p_log"],
        rows,
        fits,
        started,
    ))
}

/// Crossing estimate of P_log(p) curves across distances, from measured
/// curves. Exposed separately so synthetic curves can be fed directly.
pub fn crossing_from_curves(
    p_list: &[f64],
    curves: &[(usize, Vec<f64>)],
    shots: u32,
    master_seed: u64,
) -> Result<FitResult> {
    if curves.len() < 2 {
        return Err(Error::InsufficientData("need >= 2 distances".into()));
    }
    for (_, c) in curves {
        if c.len() != p_list.len() {
            return Err(Error::invalid("curves", "curve length does not match p grid"));
        }
    }
    let crossing = |curves: &[(usize, Vec<f64>)]| -> Option<f64> {
        // Power-law fits ln P_log ~ m ln p + b per distance (dropping the
        // saturated region near 1/2), crossed pairwise.
        let lines: Vec<Option<crate::stats::LinearFit>> = curves
            .iter()
            .map(|(_, c)| {
                let pts: Vec<(f64, f64)> = p_list
                    .iter()
                    .zip(c)
                    .filter(|&(_, &plog)| plog > 0.0 && plog < 0.45)
                    .map(|(&p, &plog)| (p.ln(), plog.ln()))
                    .collect();
                if pts.len() < 2 {
                    return None;
                }
                let xs: Vec<f64> = pts.iter().map(|&(x, _)| x).collect();
                let ys: Vec<f64> = pts.iter().map(|&(_, y)| y).collect();
                linear_fit(&xs, &ys).ok()
            })
            .collect();
        let (lo, hi) = (p_list[0].ln(), p_list[p_list.len() - 1].ln());
        let mut found = Vec::new();
        for a in 0..lines.len() {
            for b in (a + 1)..lines.len() {
                if let (Some(fa), Some(fb)) = (&lines[a], &lines[b]) {
                    if (fa.slope - fb.slope).abs() > 1e-9 {
                        let ln_p = (fb.intercept - fa.intercept) / (fa.slope - fb.slope);
                        if ln_p >= lo && ln_p <= hi {
                            found.push(ln_p.exp());
                        }
                    }
                }
            }
        }
        if found.is_empty() {
            None
        } else {
            Some(found.iter().sum::<f64>() / found.len() as f64)
        }
    };
    let p_th = crossing(curves).ok_or_else(|| {
        Error::NoTransition("no curve crossing inside the scanned p range".into())
    })?;
    // Bootstrap the binomial sampling noise of every curve point.
    let reps = 200u32;
    let mut samples = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        let mut rng = shot_rng(master_seed ^ 0x626f6f74, u32::MAX, rep);
        let resampled: Vec<(usize, Vec<f64>)> = curves
            .iter()
            .map(|(l, c)| {
                let jigged: Vec<f64> = c
                    .iter()
                    .map(|&plog| {
                        let mut hits = 0u32;
                        for _ in 0..shots.min(4000) {
                            if rng.gen::<f64>() < plog {
                                hits += 1;
                            }
                        }
                        hits as f64 / shots.min(4000) as f64
                    })
                    .collect();
                (*l, jigged)
            })
            .collect();
        if let Some(v) = crossing(&resampled) {
            samples.push(v);
        }
    }
    let se = if samples.len() > 1 {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (samples.len() - 1) as f64)
            .sqrt()
    } else {
        f64::NAN
    };
    Ok(FitResult {
        name: "p_th".into(),
        parameters: vec![("p_th".into(), p_th)],
        std_errors: vec![("p_th".into(), se)],
        residual_norm: 0.0,
    })
}

/// Measure P_log(p) for each distance and locate the curve crossing.
pub fn run_threshold_scan(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    if spec.l_list.len() < 2 {
        return Err(Error::InsufficientData("need >= 2 distances".into()));
    }
    let started = std::time::Instant::now();
    let n = spec.n_list[0];
    let mut rows = Vec::new();
    let mut curves: Vec<(usize, Vec<f64>)> =
        spec.l_list.iter().map(|&l| (l, Vec::new())).collect();
    let mut point = 0u32;
    for &p in &spec.p_list {
        let noise = NoiseParams::with_meas_factor(p, spec.meas_factor)?;
        for (li, &l) in spec.l_list.iter().enumerate() {
            let geom = build_geometry(n, l)?;
            let rounds = spec.rounds.rounds_for(n, spec.thermo.r0);
            let est = estimate_point(&geom, &noise, rounds, spec.shots, spec.master_seed, point)?;
            point += 1;
            rows.push(vec![
                p,
                l as f64,
                n as f64,
                rounds as f64,
                est.p_succ,
                est.wilson_low,
                est.wilson_high,
                1.0 - est.p_succ,
            ]);
            curves[li].1.push(1.0 - est.p_succ);
        }
    }
    let fit = crossing_from_curves(&spec.p_list, &curves, spec.shots, spec.master_seed)?;
    Ok(finish(
        spec,
        &["p", "l", "n", "rounds", "p_succ", "wilson_low", "wilson_high", "p_log"],
        rows,
        vec![fit],
        started,
    ))
}

/// Net work versus p at fixed geometry, plus the critical rate from the
/// interpolated success curve.
pub fn run_phasecut(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let (n, l) = (spec.n_list[0], spec.l_list[0]);
    let geom = build_geometry(n, l)?;
    let rounds = spec.rounds.rounds_for(n, spec.thermo.r0);
    let mut rows = Vec::new();
    let mut measured: Vec<(f64, f64)> = Vec::new();
    for (point, &p) in spec.p_list.iter().enumerate() {
        let noise = NoiseParams::with_meas_factor(p, spec.meas_factor)?;
        let est = estimate_point(&geom, &noise, rounds, spec.shots, spec.master_seed, point as u32)?;
        let led = ledger(est.p_succ, p, &spec.thermo, l, n, est.mi_nats())?;
        rows.push(vec![
            p,
            est.p_succ,
            est.wilson_low,
            est.wilson_high,
            led.kbt,
            led.e_b,
            led.w_ops,
            led.w_bulk,
            led.w_net,
            led.q_bath,
            led.ds_bob,
            led.ds_total,
            led.mi_diag,
            led.su_bound_margin,
        ]);
        measured.push((p, est.p_succ));
    }
    let curve = move |p: f64| -> f64 {
        // Piecewise-linear interpolation of the measured success curve,
        // clamped at the sweep ends.
        if p <= measured[0].0 {
            return measured[0].1;
        }
        for w in measured.windows(2) {
            if p <= w[1].0 {
                let t = (p - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        measured[measured.len() - 1].1
    };
    let bracket = (spec.p_list[0], spec.p_list[spec.p_list.len() - 1]);
    let mut fits = Vec::new();
    match critical_p(&spec.thermo, l, n, &curve, bracket) {
        Ok(p_c) => fits.push(FitResult {
            name: "p_c".into(),
            parameters: vec![("p_c".into(), p_c)],
            std_errors: vec![("p_c".into(), 0.0)],
            residual_norm: 0.0,
        }),
        Err(Error::NoTransition(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(finish(
        spec,
        &[
            "p", "p_succ", "wilson_low", "wilson_high", "kbt", "e_b", "w_ops", "w_bulk", "w_net",
            "q_bath", "ds_bob", "ds_total", "mi_diag", "su_bound_margin",
        ],
        rows,
        fits,
        started,
    ))
}

/// Net work versus separation with R = r0 N, the quadratic-cost exponent
/// fit, and the break-even separation.
pub fn run_horizon(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let l = spec.l_list[0];
    let p = spec.p_list[0];
    let noise = NoiseParams::with_meas_factor(p, spec.meas_factor)?;
    let mut rows = Vec::new();
    let mut net_points: Vec<(f64, f64)> = Vec::new();
    let mut bulk_points: Vec<(f64, f64)> = Vec::new();
    for (point, &n) in spec.n_list.iter().enumerate() {
        let geom = build_geometry(n, l)?;
        let rounds = spec.rounds.rounds_for(n, spec.thermo.r0);
        let est = estimate_point(&geom, &noise, rounds, spec.shots, spec.master_seed, point as u32)?;
        let led = ledger(est.p_succ, p, &spec.thermo, l, n, est.mi_nats())?;
        rows.push(vec![
            n as f64,
            rounds as f64,
            est.p_succ,
            est.wilson_low,
            est.wilson_high,
            led.e_b,
            led.w_ops,
            led.w_bulk,
            led.w_net,
        ]);
        net_points.push((n as f64, led.w_net));
        if n > 0 && led.w_bulk > 0.0 {
            bulk_points.push(((n as f64).ln(), led.w_bulk.ln()));
        }
    }
    let mut fits = Vec::new();
    if bulk_points.len() >= 2 {
        let xs: Vec<f64> = bulk_points.iter().map(|&(x, _)| x).collect();
        let ys: Vec<f64> = bulk_points.iter().map(|&(_, y)| y).collect();
        let fit = linear_fit(&xs, &ys)?;
        fits.push(FitResult {
            name: "w_bulk_exponent".into(),
            parameters: vec![("exponent".into(), fit.slope)],
            std_errors: vec![("exponent".into(), fit.slope_se)],
            residual_norm: fit.residual_norm,
        });
    }
    for w in net_points.windows(2) {
        if w[0].1 > 0.0 && w[1].1 <= 0.0 {
            let t = w[0].1 / (w[0].1 - w[1].1);
            let n_max = w[0].0 + t * (w[1].0 - w[0].0);
            fits.push(FitResult {
                name: "n_max".into(),
                parameters: vec![("n_max".into(), n_max)],
                std_errors: vec![("n_max".into(), 0.5 * (w[1].0 - w[0].0))],
                residual_norm: 0.0,
            });
            break;
        }
    }
    Ok(finish(
        spec,
        &["n", "rounds", "p_succ", "wilson_low", "wilson_high", "e_b", "w_ops", "w_bulk", "w_net"],
        rows,
        fits,
        started,
    ))
}

/// Ergotropy versus accumulated rounds, decoded and undecoded, plus the
/// recovered-energy area between the curves.
pub fn run_temporal(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let (n, l) = (spec.n_list[0], spec.l_list[0]);
    let p = spec.p_list[0];
    let geom = build_geometry(n, l)?;
    let noise = NoiseParams::with_meas_factor(p, spec.meas_factor)?;
    let delta_e = spec.thermo.delta_e;
    let mut rows = Vec::new();
    let mut area_points: Vec<(f64, f64)> = Vec::new();
    for (idx, &r) in spec.r_list.iter().enumerate() {
        let with_ec = estimate_point(&geom, &noise, r, spec.shots, spec.master_seed, idx as u32)?;
        // Undecoded reference: Bob applies no correction, so a shot
        // succeeds only when the accumulated reference-row parity stays
        // trivial. Only the reference-row edges matter for that parity.
        let no_ec_point = (spec.r_list.len() + idx) as u32;
        let trivial: u64 = (0..spec.shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = shot_rng(spec.master_seed, no_ec_point, shot);
                let mut parity = false;
                for _ in 0..r * n {
                    if rng.gen::<f64>() < p {
                        parity = !parity;
                    }
                }
                (!parity) as u64
            })
            .sum();
        let p_trivial = trivial as f64 / spec.shots as f64;
        let eb_ec = ergotropy_from_success(with_ec.p_succ, delta_e)?;
        let eb_no_ec = ergotropy_from_success(p_trivial, delta_e)?;
        rows.push(vec![
            r as f64,
            with_ec.p_succ,
            with_ec.wilson_low,
            with_ec.wilson_high,
            eb_ec,
            p_trivial,
            eb_no_ec,
        ]);
        area_points.push((r as f64, eb_ec - eb_no_ec));
    }
    let mut area = 0.0;
    for w in area_points.windows(2) {
        area += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    let fits = vec![FitResult {
        name: "recovered_area".into(),
        parameters: vec![("area".into(), area)],
        std_errors: vec![("area".into(), 0.0)],
        residual_norm: 0.0,
    }];
    Ok(finish(
        spec,
        &["rounds", "p_succ_ec", "wilson_low", "wilson_high", "e_b_ec", "p_trivial_no_ec", "e_b_no_ec"],
        rows,
        fits,
        started,
    ))
}

/// Net work as a function of information fraction at one measured
/// operating point: W_net(f) = E_B(f) - f W_ops - W_bulk.
fn net_work_of_f(
    f: f64,
    alpha: f64,
    p_raw: f64,
    delta_e: f64,
    w_ops_full: f64,
    w_bulk_fixed: f64,
) -> Result<(f64, f64, f64)> {
    let p_eff = effective_success(&InfoChannel::new(f, alpha, p_raw)?)?;
    let e_b = ergotropy_from_success(p_eff, delta_e)?;
    Ok((p_eff, e_b, e_b - f * w_ops_full - w_bulk_fixed))
}

/// Information-fraction sweep: measure full-information success once,
/// then fill the f axis with the percolation model.
pub fn run_info_fraction(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let (n, l) = (spec.n_list[0], spec.l_list[0]);
    let p = spec.p_list[0];
    let geom = build_geometry(n, l)?;
    let noise = NoiseParams::with_meas_factor(p, spec.meas_factor)?;
    let rounds = spec.rounds.rounds_for(n, spec.thermo.r0);
    let raw = estimate_point(&geom, &noise, rounds, spec.shots, spec.master_seed, 0)?;
    let p_raw = raw.p_succ.max(0.5);
    let kbt = temperature_from_p(p)?;
    let ops_full = w_ops(l, kbt);
    let bulk = w_bulk(l, spec.thermo.r0, spec.thermo.epsilon_m, n);
    let mut rows = Vec::new();
    for &f in &spec.f_list {
        let (p_eff, e_b, net) =
            net_work_of_f(f, spec.alpha, p_raw, spec.thermo.delta_e, ops_full, bulk)?;
        rows.push(vec![f, p_eff, e_b, f * ops_full, bulk, net]);
    }
    let mut fits = Vec::new();
    // Break-even fraction by bisection of the continuous model.
    let g = |f: f64| -> f64 {
        net_work_of_f(f, spec.alpha, p_raw, spec.thermo.delta_e, ops_full, bulk).unwrap().2
    };
    if g(0.0) < 0.0 && g(1.0) > 0.0 {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        fits.push(FitResult {
            name: "f_c".into(),
            parameters: vec![("f_c".into(), 0.5 * (lo + hi))],
            std_errors: vec![("f_c".into(), 0.0)],
            residual_norm: 0.0,
        });
    }
    // Onset exponent of E_B(f) on the upper range.
    let pts: Vec<(f64, f64)> = spec
        .f_list
        .iter()
        .filter(|&&f| (0.7..=1.0).contains(&f))
        .filter_map(|&f| {
            let e_b = net_work_of_f(f, spec.alpha, p_raw, spec.thermo.delta_e, ops_full, bulk)
                .unwrap()
                .1;
            (e_b > 0.0).then(|| (f.ln(), e_b.ln()))
        })
        .collect();
    if pts.len() >= 2 {
        let xs: Vec<f64> = pts.iter().map(|&(x, _)| x).collect();
        let ys: Vec<f64> = pts.iter().map(|&(_, y)| y).collect();
        let fit = linear_fit(&xs, &ys)?;
        fits.push(FitResult {
            name: "onset_exponent".into(),
            parameters: vec![("exponent".into(), fit.slope)],
            std_errors: vec![("exponent".into(), fit.slope_se)],
            residual_norm: fit.residual_norm,
        });
    }
    Ok(finish(
        spec,
        &["f", "p_eff", "e_b", "w_ops_f", "w_bulk", "w_net"],
        rows,
        fits,
        started,
    ))
}

/// (p, f) phase diagram: simulated p axis, analytic f axis, break-even
/// contour, and the profitable-area fraction.
pub fn run_phase_diagram(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let (n, l) = (spec.n_list[0], spec.l_list[0]);
    let geom = build_geometry(n, l)?;
    let rounds = spec.rounds.rounds_for(n, spec.thermo.r0);
    let bulk = w_bulk(l, spec.thermo.r0, spec.thermo.epsilon_m, n);
    let mut rows = Vec::new();
    let mut contour: Vec<(String, f64)> = Vec::new();
    let mut profitable = 0usize;
    let mut cells = 0usize;
    for (point, &p) in spec.p_list.iter().enumerate() {
        let noise = NoiseParams::with_meas_factor(p, spec.meas_factor)?;
        let raw = estimate_point(&geom, &noise, rounds, spec.shots, spec.master_seed, point as u32)?;
        let p_raw = raw.p_succ.max(0.5);
        let kbt = temperature_from_p(p)?;
        let ops_full = w_ops(l, kbt);
        for &f in &spec.f_list {
            let (p_eff, e_b, net) =
                net_work_of_f(f, spec.alpha, p_raw, spec.thermo.delta_e, ops_full, bulk)?;
            rows.push(vec![p, f, raw.p_succ, p_eff, e_b, net]);
            cells += 1;
            if net > 0.0 {
                profitable += 1;
            }
        }
        let g = |f: f64| -> f64 {
            net_work_of_f(f, spec.alpha, p_raw, spec.thermo.delta_e, ops_full, bulk).unwrap().2
        };
        let f_c = if g(0.0) < 0.0 && g(1.0) > 0.0 {
            let (mut lo, mut hi) = (0.0, 1.0);
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if g(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            f64::NAN
        };
        contour.push((format!("f_c@p={}", fmt_sig9(p)), f_c));
    }
    let fits = vec![
        FitResult {
            name: "f_c_contour".into(),
            parameters: contour,
            std_errors: Vec::new(),
            residual_norm: 0.0,
        },
        FitResult {
            name: "demon_area_fraction".into(),
            parameters: vec![("fraction".into(), profitable as f64 / cells as f64)],
            std_errors: Vec::new(),
            residual_norm: 0.0,
        },
    ];
    Ok(finish(
        spec,
        &["p", "f", "p_raw", "p_eff", "e_b", "w_net"],
        rows,
        fits,
        started,
    ))
}

/// Dispatch a spec to its runner.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    match spec.kind {
        ExperimentKind::Suppression => run_suppression(spec),
        ExperimentKind::ThresholdScan => run_threshold_scan(spec),
        ExperimentKind::Phasecut => run_phasecut(spec),
        ExperimentKind::Horizon => run_horizon(spec),
        ExperimentKind::Temporal => run_temporal(spec),
        ExperimentKind::InfoFraction => run_info_fraction(spec),
        ExperimentKind::PhaseDiagram => run_phase_diagram(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::EXHAUSTIVE_DEFECT_CAP;

    fn tiny_suppression() -> ExperimentSpec {
        let mut spec = ExperimentSpec::suppression(42);
        spec.n_list = vec![5];
        spec.l_list = vec![2, 3];
        spec.p_list = vec![0.02, 0.05];
        spec.rounds = RoundsPolicy::Fixed(3);
        spec.shots = 50;
        spec
    }

    #[test]
    fn estimate_is_deterministic_and_exact_at_p_zero() {
        let geom = build_geometry(5, 3).unwrap();
        let noise = NoiseParams::new(0.0).unwrap();
        let (p_succ, (lo, hi)) = estimate_p_succ(&geom, &noise, 4, 200, 9, 0).unwrap();
        assert_eq!(p_succ, 1.0);
        assert!(lo < 1.0 && hi == 1.0);
        let noise = NoiseParams::new(0.03).unwrap();
        let a = estimate_point(&geom, &noise, 4, 400, 11, 2).unwrap();
        let b = estimate_point(&geom, &noise, 4, 400, 11, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.successes, a.counts[0][0] + a.counts[1][1]);
        assert_eq!(a.shots as u64, a.counts.iter().flatten().sum::<u64>());
    }

    #[test]
    fn estimate_agrees_with_exhaustive_reference_within_interval() {
        let geom = build_geometry(4, 3).unwrap();
        let noise = NoiseParams::new(0.05).unwrap();
        let rounds = 3;
        let shots = 400u32;
        let est = estimate_point(&geom, &noise, rounds, shots, 17, 0).unwrap();
        let decoder = Decoder::new(&geom, &noise, rounds).unwrap();
        let mut reference_ok = 0u64;
        let mut counted = 0u64;
        for shot in 0..shots {
            let mut rng = shot_rng(17, 0, shot);
            let (hist, truth) = sample_history(&geom, &noise, rounds, &mut rng).unwrap();
            if hist.detections.len() > EXHAUSTIVE_DEFECT_CAP {
                continue;
            }
            let (_, flip) = decoder.exhaustive_decode(&hist).unwrap();
            counted += 1;
            if flip.unwrap_or(truth.true_logical_flip) == truth.true_logical_flip {
                reference_ok += 1;
            }
        }
        let (lo, hi) = wilson_interval(reference_ok, counted);
        assert!(est.p_succ >= lo - 0.05 && est.p_succ <= hi + 0.05);
    }

    #[test]
    fn suppression_rows_fits_and_golden_csv() {
        let spec = tiny_suppression();
        let result = run_suppression(&spec).unwrap();
        assert_eq!(result.rows.len(), 4);
        assert_eq!(result.header.len(), result.rows[0].len());
        let csv = result.to_csv();
        let golden = include_str!("../tests/golden/suppression_small.csv");
        assert_eq!(csv, golden, "regenerate tests/golden/suppression_small.csv if the format changed intentionally");
        // Bit-identical re-run from the same spec.
        let again = run_suppression(&spec).unwrap();
        assert_eq!(again.to_csv(), csv);
        assert_eq!(again.rows, result.rows);
    }

    #[test]
    fn sidecar_written_before_csv_and_round_trips() {
        let spec = tiny_suppression();
        let result = run_suppression(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (csv_path, json_path) = result.write(dir.path()).unwrap();
        assert!(csv_path.exists() && json_path.exists());
        let sidecar: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        let echoed: ExperimentSpec =
            serde_json::from_value(sidecar["metadata"]["spec"].clone()).unwrap();
        assert_eq!(echoed, spec);
        assert_eq!(std::fs::read_to_string(&csv_path).unwrap(), result.to_csv());
    }

    #[test]
    fn planted_threshold_crossing_is_recovered() {
        // Synthetic curves P_log = A (N R) (p / p_th)^((L+1)/2) cross at
        // exactly p_th; the finder should recover it tightly, and within
        // two standard errors in at least 90% of noisy repetitions.
        let p_th = 0.0137;
        let p_list = log_space(0.008, 0.024, 9);
        let a = 0.02;
        let curve = |l: usize, p: f64| -> f64 { (a * (p / p_th).powf((l + 1) as f64 / 2.0)).min(0.5) };
        let exact: Vec<(usize, Vec<f64>)> = [3usize, 5, 7]
            .iter()
            .map(|&l| (l, p_list.iter().map(|&p| curve(l, p)).collect()))
            .collect();
        let fit = crossing_from_curves(&p_list, &exact, 8000, 1).unwrap();
        let est = fit.parameter("p_th").unwrap();
        assert!((est - p_th).abs() < 5e-4, "{} vs {}", est, p_th);

        let mut hits = 0;
        let reps = 50;
        for rep in 0..reps {
            let mut rng = shot_rng(900 + rep, 0, 0);
            let shots = 8000u32;
            let noisy: Vec<(usize, Vec<f64>)> = exact
                .iter()
                .map(|(l, c)| {
                    let jig: Vec<f64> = c
                        .iter()
                        .map(|&v| {
                            let mut h = 0u32;
                            for _ in 0..shots / 4 {
                                if rng.gen::<f64>() < v {
                                    h += 1;
                                }
                            }
                            h as f64 / (shots / 4) as f64
                        })
                        .collect();
                    (*l, jig)
                })
                .collect();
            let fit = crossing_from_curves(&p_list, &noisy, shots / 4, 7 + rep).unwrap();
            let est = fit.parameter("p_th").unwrap();
            let se = fit.std_errors[0].1.max(1e-4);
            if (est - p_th).abs() <= 2.0 * se {
                hits += 1;
            }
        }
        assert!(hits * 10 >= reps * 9, "only {}/{} within 2 SE", hits, reps);
    }

    #[test]
    fn threshold_scan_needs_two_distances() {
        let mut spec = ExperimentSpec::threshold_scan(1);
        spec.l_list = vec![3];
        assert!(matches!(run_threshold_scan(&spec), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn info_fraction_closed_form_endpoints() {
        let mut spec = ExperimentSpec::info_fraction(3);
        spec.n_list = vec![6];
        spec.l_list = vec![3];
        spec.p_list = vec![0.004];
        spec.rounds = RoundsPolicy::Fixed(4);
        spec.shots = 300;
        spec.f_list = lin_space(0.0, 1.0, 21);
        let result = run_info_fraction(&spec).unwrap();
        let first = &result.rows[0];
        assert_eq!(first[0], 0.0);
        assert_eq!(first[2], 0.0);
        assert!(first[5] < 0.0);
        // Onset exponent is alpha by construction of the model.
        if let Some(fit) = result.fit("onset_exponent") {
            assert!((fit.parameter("exponent").unwrap() - spec.alpha).abs() < 1e-6);
        }
    }

    #[test]
    fn temporal_small_run_shapes() {
        let mut spec = ExperimentSpec::temporal(5);
        spec.n_list = vec![6];
        spec.l_list = vec![3];
        spec.p_list = vec![0.01];
        spec.r_list = vec![1, 3, 6];
        spec.shots = 300;
        let result = run_temporal(&spec).unwrap();
        assert_eq!(result.rows.len(), 3);
        // Undecoded trivial probability decays towards 1/2 with rounds.
        let p_triv: Vec<f64> = result.rows.iter().map(|r| r[5]).collect();
        assert!(p_triv[0] > p_triv[2]);
        assert!(result.fit("recovered_area").is_some());
    }

    #[test]
    fn phase_diagram_small_grid_accounts_cells() {
        let mut spec = ExperimentSpec::phase_diagram(8);
        spec.n_list = vec![6];
        spec.l_list = vec![3];
        spec.p_list = vec![0.004, 0.01];
        spec.f_list = lin_space(0.0, 1.0, 11);
        spec.rounds = RoundsPolicy::Fixed(4);
        spec.shots = 300;
        let result = run_phase_diagram(&spec).unwrap();
        assert_eq!(result.rows.len(), 22);
        let frac = result
            .fit("demon_area_fraction")
            .unwrap()
            .parameter("fraction")
            .unwrap();
        let recount =
            result.rows.iter().filter(|r| r[5] > 0.0).count() as f64 / result.rows.len() as f64;
        assert_eq!(frac, recount);
        assert_eq!(result.fit("f_c_contour").unwrap().parameters.len(), 2);
    }

    #[test]
    fn monotone_sanity_in_p_small() {
        let geom = build_geometry(5, 3).unwrap();
        let mut prev_lo = 1.1;
        for (i, p) in [0.01, 0.05, 0.12].iter().enumerate() {
            let noise = NoiseParams::new(*p).unwrap();
            let est = estimate_point(&geom, &noise, 4, 1500, 33, i as u32).unwrap();
            // Nonincreasing within interval slack.
            assert!(est.wilson_low <= prev_lo + 1e-12);
            prev_lo = est.wilson_low;
        }
    }
}
