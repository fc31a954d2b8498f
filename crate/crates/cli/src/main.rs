//! `topodemon`: run sweep experiments, single shots, and calibration from
//! the command line. Outputs are a JSON metadata sidecar (written first)
//! plus a CSV table per experiment; identical config and seed give
//! byte-identical CSV at any worker-thread count.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use topodemon_core::decoder::Decoder;
use topodemon_core::experiments::{
    run_experiment, ExperimentKind, ExperimentSpec, RoundsPolicy,
};
use topodemon_core::geometry::{build_geometry, logical_x, logical_z};
use topodemon_core::noise::{dump_history, sample_history, NoiseParams};
use topodemon_core::rngstream::shot_rng;
use topodemon_core::stats::fmt_sig9;
use topodemon_core::thermo::{
    calibrate_infrastructure, temperature_from_p, ThermoParams, CALIBRATION_DISTANCE,
    CALIBRATION_P, CALIBRATION_TARGET_N_MAX,
};

const DEFAULTS_NOTE: &str = "Defaults: delta_e = 146.5 J, shots = 8000, r0 = 1, alpha = 2.7, \
meas_factor = 0.1, epsilon_m = 1.54794437e-3 J (calibrated once from N_max = 78 at L = 7, \
p = 0.005), phase-diagram grid p in [0.002, 0.020] (13 log-spaced points) x f in [0, 1] \
(51 points).";

#[derive(Parser)]
#[command(name = "topodemon", version, about = "Strip-code demon simulator and sweep runner", after_help = DEFAULTS_NOTE)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// P_log versus distance at several error rates
    Suppression(SweepArgs),
    /// Crossing scan of P_log(p) across distances
    Threshold(SweepArgs),
    /// Net work versus p at fixed geometry
    Phasecut(SweepArgs),
    /// Net work versus separation with R = r0 N
    Horizon(SweepArgs),
    /// Ergotropy versus accumulated rounds, decoded and undecoded
    Temporal(SweepArgs),
    /// Information-fraction sweep at one operating point
    Info(SweepArgs),
    /// (p, f) phase diagram
    Phasediagram(SweepArgs),
    /// Decode one seeded shot and print the full trace
    Shot(ShotArgs),
    /// Print the lattice, stabilizers, and logical supports
    GeometryDump(GeomArgs),
    /// Invert the horizon formula for the epsilon_m * r0 product
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment spec; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo shots per sweep point
    #[arg(long)]
    shots: Option<u32>,
    /// Worker threads (0 = all cores); never affects outputs
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory
    #[arg(long, env = "TOPODEMON_OUT", default_value = "out")]
    out: PathBuf,
    /// Strip length (Alice-Bob separation)
    #[arg(long)]
    n: Option<usize>,
    /// Code distance (strip width)
    #[arg(long)]
    l: Option<usize>,
    /// Physical error rate per qubit per round
    #[arg(long)]
    p: Option<f64>,
    /// Fixed syndrome rounds (otherwise R = r0 * N where applicable)
    #[arg(long)]
    r: Option<usize>,
    /// Battery gap in J
    #[arg(long)]
    delta_e: Option<f64>,
    /// Measurement cost per stabilizer per round in J
    #[arg(long)]
    epsilon_m: Option<f64>,
    /// Syndrome rounds per unit separation
    #[arg(long)]
    r0: Option<f64>,
    /// Single information fraction (replaces the f grid)
    #[arg(long)]
    f: Option<f64>,
    /// Percolation exponent of the information channel
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct ShotArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    l: usize,
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    #[arg(long, default_value_t = 20)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GeomArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    l: usize,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Break-even separation the calibration targets
    #[arg(long, default_value_t = CALIBRATION_TARGET_N_MAX)]
    target_nmax: f64,
    #[arg(long, default_value_t = 146.5)]
    delta_e: f64,
    #[arg(long, default_value_t = CALIBRATION_DISTANCE)]
    l: usize,
    #[arg(long, default_value_t = CALIBRATION_P)]
    p: f64,
    /// Success probability assumed at calibration
    #[arg(long, default_value_t = 1.0)]
    p_succ: f64,
}

fn spec_for(kind: ExperimentKind, args: &SweepArgs) -> topodemon_core::Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut file_spec: ExperimentSpec = serde_json::from_str(&text)?;
            file_spec.kind = kind;
            file_spec
        }
        None => match kind {
            ExperimentKind::Suppression => ExperimentSpec::suppression(0),
            ExperimentKind::ThresholdScan => ExperimentSpec::threshold_scan(0),
            ExperimentKind::Phasecut => ExperimentSpec::phasecut(0),
            ExperimentKind::Horizon => ExperimentSpec::horizon(0),
            ExperimentKind::Temporal => ExperimentSpec::temporal(0),
            ExperimentKind::InfoFraction => ExperimentSpec::info_fraction(0),
            ExperimentKind::PhaseDiagram => ExperimentSpec::phase_diagram(0),
        },
    };
    if let Some(seed) = args.seed {
        spec.master_seed = seed;
    }
    if let Some(shots) = args.shots {
        spec.shots = shots;
    }
    if let Some(n) = args.n {
        spec.n_list = vec![n];
    }
    if let Some(l) = args.l {
        spec.l_list = vec![l];
    }
    if let Some(p) = args.p {
        spec.p_list = vec![p];
    }
    if let Some(r) = args.r {
        spec.rounds = RoundsPolicy::Fixed(r);
    }
    if let Some(delta_e) = args.delta_e {
        spec.thermo.delta_e = delta_e;
    }
    if let Some(epsilon_m) = args.epsilon_m {
        spec.thermo.epsilon_m = epsilon_m;
    }
    if let Some(r0) = args.r0 {
        spec.thermo.r0 = r0;
    }
    if let Some(f) = args.f {
        spec.f_list = vec![f];
    }
    if let Some(alpha) = args.alpha {
        spec.alpha = alpha;
    }
    spec.validate()?;
    Ok(spec)
}

fn run_sweep(kind: ExperimentKind, args: &SweepArgs) -> topodemon_core::Result<()> {
    if args.threads > 0 {
        // Ignore the error if a pool already exists (tests call in-process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global();
    }
    let spec = spec_for(kind, args)?;
    let result = run_experiment(&spec)?;
    let (csv_path, json_path) = result.write(&args.out)?;
    println!("wrote {}", json_path.display());
    println!("wrote {}", csv_path.display());
    for fit in &result.fits {
        let rendered: Vec<String> = fit
            .parameters
            .iter()
            .map(|(name, v)| format!("{}={}", name, fmt_sig9(*v)))
            .collect();
        println!("fit {}: {}", fit.name, rendered.join(" "));
    }
    Ok(())
}

fn run_shot_cmd(args: &ShotArgs) -> topodemon_core::Result<()> {
    let geom = build_geometry(args.n, args.l)?;
    let noise = NoiseParams::new(args.p)?;
    let mut rng = shot_rng(args.seed, 0, 0);
    let (history, truth) = sample_history(&geom, &noise, args.r, &mut rng)?;
    print!("{}", dump_history(&geom, &noise, args.seed, &history));
    let mut decoder = Decoder::new(&geom, &noise, args.r)?;
    let matching = decoder.decode(&history)?;
    println!("# detections {}", history.detections.len());
    for pair in &matching.pairs {
        println!("# match {:?}", pair);
    }
    println!("# total_weight {}", fmt_sig9(matching.total_weight));
    println!("# inferred_flip {}", matching.inferred_logical_flip);
    println!("# true_flip {}", truth.true_logical_flip);
    println!("# success {}", matching.inferred_logical_flip == truth.true_logical_flip);
    Ok(())
}

fn run_geometry_dump(args: &GeomArgs) -> topodemon_core::Result<()> {
    let geom = build_geometry(args.n, args.l)?;
    println!(
        "# strip n={} l={} edges={} vertices={} plaquettes={} euler={}",
        geom.n_cols,
        geom.distance,
        geom.n_edges(),
        geom.n_vertices(),
        geom.n_plaquettes(),
        geom.n_edges() as isize - geom.n_vertices() as isize - geom.n_plaquettes() as isize,
    );
    println!("# boundary_classes {:?}", geom.boundary_class);
    let z = logical_z(&geom, 0)?;
    let x = logical_x(&geom, 0)?;
    println!("# logical_z_row0 {:?}", z.support);
    println!("# logical_x_col0 {:?}", x.support);
    for (i, star) in geom.vertex_stabilizers.iter().enumerate() {
        println!("vertex {} {:?}", i, star);
    }
    for (i, plaq) in geom.plaquette_stabilizers.iter().enumerate() {
        println!("plaquette {} {:?}", i, plaq);
    }
    Ok(())
}

fn run_calibrate(args: &CalibrateArgs) -> topodemon_core::Result<()> {
    let params = ThermoParams {
        coupling_j: 1.0,
        delta_e: args.delta_e,
        epsilon_m: 1.0,
        r0: 1.0,
        boltzmann: 1.0,
    };
    let kbt = temperature_from_p(args.p)?;
    let product = calibrate_infrastructure(args.target_nmax, args.p_succ, &params, args.l, kbt)?;
    println!("epsilon_m*r0 = {}", fmt_sig9(product));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Suppression(a) => run_sweep(ExperimentKind::Suppression, a),
        Cmd::Threshold(a) => run_sweep(ExperimentKind::ThresholdScan, a),
        Cmd::Phasecut(a) => run_sweep(ExperimentKind::Phasecut, a),
        Cmd::Horizon(a) => run_sweep(ExperimentKind::Horizon, a),
        Cmd::Temporal(a) => run_sweep(ExperimentKind::Temporal, a),
        Cmd::Info(a) => run_sweep(ExperimentKind::InfoFraction, a),
        Cmd::Phasediagram(a) => run_sweep(ExperimentKind::PhaseDiagram, a),
        Cmd::Shot(a) => run_shot_cmd(a),
        Cmd::GeometryDump(a) => run_geometry_dump(a),
        Cmd::Calibrate(a) => run_calibrate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}
