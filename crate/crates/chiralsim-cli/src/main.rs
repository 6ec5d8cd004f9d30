//! Command-line front end: spectrum tables, selection-rule verdicts,
//! controllability certificates and driven-dynamics simulations, all from
//! TOML scenario files or named presets.
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 numerical
//! failure (norm drift or calibration).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use chiralsim::config::{Scenario, ScenarioConfig};
use chiralsim::graph::{
    build_graph, decide_controllability, replay_certificate, EdgeStatus, Verdict, AMP_TOL,
};
use chiralsim::presets;
use chiralsim::prop::{elongation, propagate, Trajectory};
use chiralsim::symmetry::{check_feasibility, orthogonality_check, FeasibilityVerdict};
use chiralsim::Error;

#[derive(Parser)]
#[command(
    name = "chiralsim",
    about = "Ro-vibrational dynamics of planar asymmetric tops: spectra, selection rules, \
             controllability graphs and driven simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset shipped with the library.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Rotational level table (CSV: J, Ka, Kc, M, energy_MHz, irrep).
    Spectrum(ScenarioArgs),
    /// Selection-rule verdict for the configured fields.
    CheckSymmetry(ScenarioArgs),
    /// Controllability certificate and edge-list CSV.
    Controllability(ScenarioArgs),
    /// Propagate the pulse schedule and write the trajectory CSV.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Override the protocol phase (radians).
        #[arg(long)]
        phase: Option<f64>,
        /// Re-run with a halved step and report observable differences.
        #[arg(long)]
        dt_halve: bool,
        /// Run N evenly spaced protocol phases over [0, 2π) in parallel and
        /// write a phase-scan summary instead of a single trajectory.
        #[arg(long)]
        scan_phase: Option<usize>,
        /// Also write each pulse's control-matrix elements to
        /// controls_<name>.csv (row, col, re, im, gap).
        #[arg(long)]
        dump_controls: bool,
    },
}

fn load_config(args: &ScenarioArgs) -> anyhow::Result<ScenarioConfig> {
    match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            Ok(ScenarioConfig::from_toml(&text)?)
        }
        (None, Some(name)) => Ok(presets::load(name)?),
        (None, None) => anyhow::bail!("one of --config or --preset is required"),
        _ => unreachable!("clap conflict"),
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

fn cmd_spectrum(args: &ScenarioArgs) -> anyhow::Result<()> {
    let scenario = load_config(args)?.build()?;
    let basis = &scenario.basis;
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("states.csv");
    let mut f = fs::File::create(&path)?;
    writeln!(f, "J,Ka,Kc,M,energy_MHz,irrep")?;
    let b_mhz = basis.constants.b_mhz;
    for s in basis.states.iter().filter(|s| s.nu == 0) {
        let l = &basis.levels[s.level];
        writeln!(
            f,
            "{},{},{},{},{},{}",
            l.j,
            l.ka,
            l.kc,
            s.m,
            fmt_f(l.energy * b_mhz),
            l.irrep
        )?;
    }
    println!(
        "{} rotational levels, {} states (J <= {}); table written to {}",
        basis.levels.len(),
        basis.n_rot,
        basis.jmax,
        path.display()
    );
    for l in &basis.levels {
        println!(
            "  {:>6}  {:>14.4} MHz  {}",
            l.label(),
            l.energy * b_mhz,
            l.irrep
        );
    }
    Ok(())
}

fn cmd_check_symmetry(args: &ScenarioArgs) -> anyhow::Result<()> {
    let scenario = load_config(args)?.build()?;
    let fields = scenario.symmetry_fields()?;
    let verdict = check_feasibility(
        &scenario.dipoles,
        &fields,
        scenario.static_field.as_ref().is_some_and(|f| f.epsilon > 0.0),
        scenario.symmetry_initial(),
        4,
    )?;
    let pols: Vec<_> = fields.iter().map(|f| f.polarization).collect();
    match &verdict {
        FeasibilityVerdict::Forbidden => {
            println!("verdict: forbidden");
            println!("no pathway pair up to order 4 reaches a common final state");
        }
        FeasibilityVerdict::AchiralAllowed(w) | FeasibilityVerdict::ChiralAllowed(w) => {
            let kind = if matches!(verdict, FeasibilityVerdict::ChiralAllowed(_)) {
                "chiral_allowed"
            } else {
                "achiral_allowed"
            };
            println!("verdict: {kind}");
            println!(
                "witness: gamma0 = {}, final state class (J = {}, M = {}, {}), orders (l = {}, l' = {})",
                w.gamma0,
                w.final_j,
                w.final_m,
                w.final_irrep,
                w.keep_path.len(),
                w.flip_path.len()
            );
            for (tag, path) in [("keep", &w.keep_path), ("flip", &w.flip_path)] {
                println!("  {tag} path:");
                for (i, s) in path.iter().enumerate() {
                    println!(
                        "    step {}: component {}{}, polarization {}, irrep {}, dM = {:+}, d_nu = {}",
                        i + 1,
                        s.component,
                        if s.is_static { " (static)" } else { "" },
                        s.polarization,
                        s.irrep,
                        s.delta_m,
                        u8::from(s.flips_nu)
                    );
                }
            }
            println!(
                "orthogonal polarization triple available: {}",
                orthogonality_check(&pols)
            );
        }
    }
    Ok(())
}

fn status_str(s: &EdgeStatus) -> String {
    match s {
        EdgeStatus::Coupled => "coupled".into(),
        EdgeStatus::Uncoupled { control } => format!("uncoupled(control={control})"),
        EdgeStatus::Decoupled { derived } => format!("decoupled(derived={derived})"),
    }
}

fn cmd_controllability(args: &ScenarioArgs) -> anyhow::Result<()> {
    let scenario = load_config(args)?.build()?;
    let controls = scenario.graph_controls()?;
    let graph = build_graph(
        &scenario.basis,
        &scenario.dipoles,
        &controls,
        AMP_TOL,
        scenario.static_field.as_ref(),
    );
    let cert = decide_controllability(&graph);
    replay_certificate(&graph, &cert).map_err(|e| anyhow::anyhow!("replay failed: {e}"))?;

    fs::create_dir_all(&args.out)?;
    let path = args.out.join("edges.csv");
    let mut f = fs::File::create(&path)?;
    writeln!(f, "node_from,node_to,control,gap,order,status")?;
    for (e, st) in graph.edges.iter().zip(cert.edge_statuses.iter()) {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            e.nodes.0 + 1,
            e.nodes.1 + 1,
            graph.controls[e.control].name,
            fmt_f(e.gap),
            e.order,
            status_str(st)
        )?;
    }

    println!(
        "graph: {} nodes, {} edges from {} controls (nodes numbered 1..{})",
        graph.n_nodes,
        graph.edges.len(),
        graph.controls.len(),
        graph.n_nodes
    );
    match &cert.verdict {
        Verdict::Controllable => println!("verdict: controllable"),
        Verdict::NotProven(reason) => println!("verdict: not_proven ({reason})"),
    }
    if let Some(g) = &cert.grant {
        println!(
            "rotational-subsystem grant active (x, y, z microwave controls {:?})",
            g.rotational_controls
        );
    }
    println!(
        "certificate: {} spanning edges, {} derived commutator controls; replay ok",
        cert.spanning.len(),
        cert.derived.len()
    );
    for m in &cert.spanning {
        let (a, b) = m.pair;
        println!(
            "  {:>3} <-> {:<3} [{}] {} via {:?}",
            a + 1,
            b + 1,
            if m.physical { "physical" } else { "derived" },
            format_args!("{} <-> {}", graph.node_labels[a], graph.node_labels[b]),
            m.justification
        );
    }
    println!("edge list written to {}", path.display());
    Ok(())
}

fn write_trajectory(
    path: &Path,
    scenario: &Scenario,
    traj: &Trajectory,
) -> anyhow::Result<()> {
    let selectors = scenario.selectors();
    let pops = chiralsim::prop::populations(traj, &selectors);
    let elo = elongation(traj, 1);
    let mut f = fs::File::create(path)?;
    let header: Vec<String> = selectors.iter().map(|s| format!("p_{}", s.label())).collect();
    writeln!(
        f,
        "t_over_t0,{},elongation_re,elongation_envelope",
        header.join(",")
    )?;
    for i in 0..traj.times.len() {
        let row: Vec<String> = pops.iter().map(|p| fmt_f(p[i])).collect();
        writeln!(
            f,
            "{},{},{},{}",
            fmt_f(traj.times[i]),
            row.join(","),
            fmt_f(elo.signal[i]),
            fmt_f(elo.amplitude[i])
        )?;
    }
    Ok(())
}

fn run_scenario(
    config: &ScenarioConfig,
    phase: Option<f64>,
    dt: Option<f64>,
) -> anyhow::Result<(Scenario, Trajectory)> {
    let mut config = config.clone();
    if let Some(phi) = phase {
        if config.pulses.is_empty() {
            anyhow::bail!("scenario has no pulses to apply --phase to");
        }
        let idx = config
            .pulses
            .iter()
            .position(|p| p.name == "mw2")
            .unwrap_or(config.pulses.len() - 1);
        config.pulses[idx].phase_rad = phi;
    }
    let scenario = config.build()?;
    let pulses = scenario.pulses()?;
    let t_final = scenario.t_final(&pulses);
    let mut opts = scenario.propagation_options();
    if let Some(dt) = dt {
        opts.dt = Some(dt);
    }
    let traj = propagate(
        &scenario.basis,
        scenario.static_field.as_ref(),
        &pulses,
        &scenario.initial_state(),
        t_final,
        &opts,
    )?;
    Ok((scenario, traj))
}

fn cmd_simulate(
    args: &ScenarioArgs,
    phase: Option<f64>,
    dt_halve: bool,
    scan_phase: Option<usize>,
    dump_controls: bool,
) -> anyhow::Result<()> {
    let config = load_config(args)?;
    fs::create_dir_all(&args.out)?;

    if let Some(n) = scan_phase {
        if n == 0 {
            anyhow::bail!("--scan-phase needs at least one point");
        }
        let results: Vec<(f64, f64, f64)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let (_, traj) = run_scenario(&config, Some(phi), None)
                    .unwrap_or_else(|e| panic!("phase {phi}: {e}"));
                let e = elongation(&traj, 1);
                let last = e.amplitude.len() - 1;
                (phi, e.amplitude[last], traj.norm_drift)
            })
            .collect();
        let path = args.out.join("phase_scan.csv");
        let mut f = fs::File::create(&path)?;
        writeln!(f, "phase_rad,final_envelope,norm_drift")?;
        for (phi, env, drift) in &results {
            writeln!(f, "{},{},{}", fmt_f(*phi), fmt_f(*env), fmt_f(*drift))?;
        }
        println!("phase scan over {n} points written to {}", path.display());
        return Ok(());
    }

    let (scenario, traj) = run_scenario(&config, phase, None)?;
    if dump_controls {
        for p in scenario.pulses()? {
            let path = args.out.join(format!("controls_{}.csv", p.name));
            fs::write(&path, p.control.to_csv(&scenario.basis.energies))?;
        }
    }
    let path = args.out.join("trajectory.csv");
    write_trajectory(&path, &scenario, &traj)?;
    let rep = presets::report(&scenario, &traj);
    println!(
        "propagated {} samples to t = {:.2} t0; norm drift {:.2e}",
        traj.times.len(),
        traj.times.last().unwrap(),
        rep.norm_drift
    );
    println!("max elongation envelope {:.4} (units of xi0)", rep.max_envelope);
    for cp in &rep.checkpoints {
        let pops: Vec<String> = cp
            .populations
            .iter()
            .filter(|(_, p)| *p > 5e-3)
            .map(|(l, p)| format!("{l}={p:.4}"))
            .collect();
        println!("  {} (t = {:.1}): {}", cp.label, cp.time, pops.join(" "));
    }
    println!("trajectory written to {}", path.display());

    if dt_halve {
        // convergence check: rerun with the automatic step halved
        let pulses = scenario.pulses()?;
        let max_carrier = pulses.iter().map(|p| p.carrier).fold(0.0, f64::max);
        let max_gap = pulses
            .iter()
            .flat_map(|p| p.control.elements.iter())
            .map(|e| (scenario.basis.energies[e.bra] - scenario.basis.energies[e.ket]).abs())
            .fold(0.0, f64::max);
        let base = 2.0 * std::f64::consts::PI / (20.0 * (max_carrier + max_gap).max(1.0));
        let (_, t2) = run_scenario(&config, phase, Some(base / 2.0))?;
        let selectors = scenario.selectors();
        let last = traj.times.len() - 1;
        let last2 = t2.times.len() - 1;
        let mut worst = 0.0f64;
        for s in &selectors {
            let d = (traj.population_at(s, last) - t2.population_at(s, last2)).abs();
            worst = worst.max(d);
        }
        println!("dt-halving check: max final-population difference {worst:.3e}");
    }
    Ok(())
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::NormDrift { .. }) | Some(Error::Calibration(_)) => 3,
        Some(_) => 2,
        // I/O, TOML syntax and argument errors are validation failures too
        None => 2,
    }
}

fn main() -> ExitCode {
    // die quietly when stdout is closed early (e.g. piping into `head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::CheckSymmetry(args) => cmd_check_symmetry(args),
        Command::Controllability(args) => cmd_controllability(args),
        Command::Simulate {
            scenario,
            phase,
            dt_halve,
            scan_phase,
            dump_controls,
        } => cmd_simulate(scenario, *phase, *dt_halve, *scan_phase, *dump_controls),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
