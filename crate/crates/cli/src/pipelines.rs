//! One function per subcommand. Each reads its JSON inputs through the
//! [`Run`], writes its outputs through it, and reports whether the
//! property it checks held.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use itertools::Itertools;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use cyclos::cech::{
    build_nerve, cocycle_class, cosheaf_colimit, cycle_values, glue_sections, pairing_cocycle,
    pairing_cocycle_unchecked, synth::class_drift, CechSystem, GlueOutcome, CECH_TOL,
};
use cyclos::chain::{Chain1, ChainComplex, ChainFile, ComplexFile};
use cyclos::coincide::{
    closed_part, coincidence_persistence, synth::matched_jitter, trial_invariance, CoincidenceWindow, SpikeTrain,
};
use cyclos::ght::{
    accumulate, argmax_peak, peak_persistence, saccade_invariance_audit, AccConfig, GazePath, Glimpse, ModelTable,
    Scene,
};
use cyclos::gridplace::{place_field_map, tour_invariance, GridCell, PlaceCellConfig, Rect, Trajectory2D};
use cyclos::hopf::{detect_limit_cycle, eigenvalue_crossing, integrate, HopfParams};
use cyclos::nav::{compose_moves, order_invariance_check, turn_counts, winding_vector, Move, Workspace};
use cyclos::persist::{compute_barcode, persistence_index, Barcode, Filtration, FiltrationStep};
use cyclos::phasecode::{torus_winding, unwrapped_change, winding_number, Oscillator, TorusPath};
use cyclos::pngsim::{
    find_resonant_cycles, replay_consolidate, simulate, test_reentry, CycleCandidate, DelayNetwork, NeuronId,
    SimOptions, StdpParams,
};

use crate::args::*;
use crate::run::{Run, Status};
use crate::svg::{emit_svg_barcode, SvgStyle};

/// Jittered copies drawn per trial before giving up on an edge-preserving one.
const JITTER_TRIES: usize = 1000;

/// Most moves `nav perm` will enumerate every ordering of.
const MAX_PERM_MOVES: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiltrationFile {
    pub steps: Vec<FiltrationStep>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub cells: Vec<GridCell>,
    pub place: PlaceCellConfig,
    pub oscillator: Oscillator,
    #[serde(default)]
    pub region: Option<Rect>,
    #[serde(default)]
    pub resolution: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TourPair {
    pub a: Trajectory2D,
    pub b: Trajectory2D,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhtGlimpses {
    pub table: ModelTable,
    pub config: AccConfig,
    pub glimpses: Vec<Glimpse>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhtScene {
    pub table: ModelTable,
    pub config: AccConfig,
    pub scene: Scene,
    pub paths: Vec<GazePath>,
}

pub fn execute(p: &Pipeline, run: &mut Run) -> Result<Status> {
    match p {
        Pipeline::Chain(ChainCmd::Verify { complex }) => chain_verify(run, complex),
        Pipeline::Chain(ChainCmd::Class { complex, chain }) => chain_class(run, complex, chain),
        Pipeline::Barcode(a) => barcode(run, a),
        Pipeline::Phase(PhaseCmd::Wind { phases, open, tol }) => phase_wind(run, phases, *open, *tol),
        Pipeline::Phase(PhaseCmd::Torus { freq_hz, gamma_hz, offset_rad, duration, samples, tol }) => {
            phase_torus(run, *freq_hz, *gamma_hz, *offset_rad, *duration, *samples, *tol)
        }
        Pipeline::Coincide(a) => coincide(run, a),
        Pipeline::Png(PngCmd::Simulate { network, stimuli, horizon_ms, jitter_ms, stdp }) => {
            png_simulate(run, network, stimuli, *horizon_ms, *jitter_ms, stdp.as_deref())
        }
        Pipeline::Png(PngCmd::Mine(m)) => {
            let (_, cycles) = png_mine(run, m)?;
            println!("cycles: {}", cycles.len());
            Ok(Status::Ok)
        }
        Pipeline::Png(PngCmd::Reentry { mine, periods }) => png_reentry(run, mine, *periods),
        Pipeline::Png(PngCmd::Replay { mine, rounds, gain, decay }) => png_replay(run, mine, *rounds, *gain, *decay),
        Pipeline::Grid(GridCmd::Field { config }) => grid_field(run, config),
        Pipeline::Grid(GridCmd::Tour { config, tours }) => grid_tour(run, config, tours),
        Pipeline::Nav(NavCmd::Wind { workspace, moves, tol }) => nav_wind(run, workspace, moves, *tol),
        Pipeline::Nav(NavCmd::Perm { workspace, moves, orderings, tol }) => {
            nav_perm(run, workspace, moves, orderings.as_deref(), *tol)
        }
        Pipeline::Ght(GhtCmd::Run { input }) => ght_run(run, input),
        Pipeline::Ght(GhtCmd::Audit { input, no_reregister }) => ght_audit(run, input, !no_reregister),
        Pipeline::Ght(GhtCmd::Persist { input, levels, svg }) => ght_persist(run, input, *levels, svg.as_deref()),
        Pipeline::Cech(CechCmd::Glue { system }) => cech_glue(run, system),
        Pipeline::Cech(CechCmd::Colimit { system }) => cech_colimit(run, system),
        Pipeline::Cech(CechCmd::Cocycle { system, unchecked, drift, drift_trials }) => {
            cech_cocycle(run, system, *unchecked, drift.as_deref(), *drift_trials)
        }
        Pipeline::Hopf(a) => hopf(run, a),
    }
}

fn write_barcode(run: &mut Run, b: &Barcode, svg: Option<&str>, cap: Option<f64>) -> Result<()> {
    run.write_json("barcode.json", b)?;
    run.write("barcode.csv", b.to_csv().as_bytes())?;
    if let Some(name) = svg {
        let style = SvgStyle { cap, ..SvgStyle::default() };
        run.write(name, emit_svg_barcode(b, &style).as_bytes())?;
    }
    Ok(())
}

fn chain_verify(run: &mut Run, path: &Path) -> Result<Status> {
    let file: ComplexFile = run.read_json(path)?;
    let x = ChainComplex::from_file(&file)?;
    let dd_zero = x.verify_dd_zero();
    let betti = [x.betti(0)?, x.betti(1)?];
    println!("dd_zero: {dd_zero}");
    println!("betti: {} {}", betti[0], betti[1]);
    run.write_json("report.json", &serde_json::json!({ "dd_zero": dd_zero, "betti": betti }))?;
    Ok(Status::from_check(dd_zero))
}

fn chain_class(run: &mut Run, complex: &Path, chain: &Path) -> Result<Status> {
    let x = ChainComplex::from_file(&run.read_json::<ComplexFile>(complex)?)?;
    let c = Chain1::from_file(&run.read_json::<ChainFile>(chain)?)?;
    let boundary = x.boundary1(&c)?;
    let projection = x.project_to_cycles(&c)?;
    let class = x.homology_class(&projection)?;
    println!("is_cycle: {}", boundary.is_zero());
    println!("class: {}", serde_json::to_string(&class)?);
    run.write_json(
        "report.json",
        &serde_json::json!({
            "is_cycle": boundary.is_zero(),
            "boundary": boundary.to_file(),
            "projection": projection.to_file(),
            "class": class,
        }),
    )?;
    Ok(Status::Ok)
}

fn barcode(run: &mut Run, a: &BarcodeArgs) -> Result<Status> {
    let file: FiltrationFile = run.read_json(&a.filtration)?;
    let mut f = Filtration::from_steps(&file.steps)?;
    if let Some(h) = file.horizon {
        f = f.with_horizon(h);
    }
    let b = compute_barcode(&f);
    println!("bars: {}", b.bars.len());
    write_barcode(run, &b, a.svg.as_deref(), a.cap)?;
    if let Some(t) = a.threshold {
        let index = persistence_index(&b, t, a.cap)?;
        println!("long bars: {} (total {})", index.long_bar_count, index.total_persistence);
        run.write_json("index.json", &index)?;
    }
    Ok(Status::Ok)
}

fn phase_wind(run: &mut Run, path: &Path, open: bool, tol: f64) -> Result<Status> {
    let phases: Vec<f64> = run.read_json(path)?;
    let report = if open {
        let change = unwrapped_change(&phases, tol)?;
        println!("unwrapped change: {change}");
        serde_json::json!({ "closed": false, "unwrapped_change": change })
    } else {
        let w = winding_number(&phases, true, tol)?;
        println!("winding: {w}");
        serde_json::json!({ "closed": true, "winding": w })
    };
    run.write_json("report.json", &report)?;
    Ok(Status::Ok)
}

fn phase_torus(
    run: &mut Run,
    freq_hz: f64,
    gamma_hz: f64,
    offset_rad: f64,
    duration: f64,
    samples: usize,
    tol: f64,
) -> Result<Status> {
    let theta = Oscillator::new(freq_hz, 0.0)?;
    let gamma = Oscillator::new(gamma_hz, offset_rad)?;
    let path = TorusPath::from_oscillators(&theta, &gamma, duration, samples);
    let (m, n) = torus_winding(&path, tol)?;
    println!("windings: {m} {n}");
    run.write_json("report.json", &serde_json::json!({ "theta_turns": m, "gamma_turns": n }))?;
    Ok(Status::Ok)
}

fn coincide(run: &mut Run, a: &CoincideArgs) -> Result<Status> {
    let train: SpikeTrain = run.read_json::<SpikeTrain>(&a.spikes)?.normalized()?;
    let osc = Oscillator::new(a.freq_hz, a.offset_rad)?;
    let w = CoincidenceWindow::new(a.delta_rad)?;
    let r = closed_part(&train, &osc, &w)?;
    println!("edges: {}", r.graph.edges().len());
    println!("class: {}", serde_json::to_string(&r.class)?);
    let mut status = Status::Ok;
    let mut report = serde_json::json!({
        "vertices": r.graph.vertices(),
        "edges": r.graph.edges(),
        "closed_part": r.closed_part.to_file(),
        "removed": r.removed.to_file(),
        "class": r.class,
    });
    if let Some(eps) = a.epsilon_rad {
        ensure!(a.trials >= 1, "--trials must be at least 1");
        let mut rng = run.rng("coincide.jitter");
        let mut trials = vec![train.clone()];
        for k in 1..a.trials {
            let t = matched_jitter(&mut rng, &train, eps, &osc, &w, JITTER_TRIES)?
                .with_context(|| format!("no edge-preserving jitter found for trial {k} within {JITTER_TRIES} draws"))?;
            trials.push(t);
        }
        let inv = trial_invariance(&trials, &osc, &w, eps)?;
        println!("trial invariant: {}", inv.invariant);
        status = Status::from_check(inv.invariant);
        report["trials"] = serde_json::to_value(&inv)?;
    }
    run.write_json("report.json", &report)?;
    if let Some(deltas) = &a.deltas {
        let b = coincidence_persistence(&train, &osc, deltas)?;
        write_barcode(run, &b, None, None)?;
    }
    Ok(status)
}

fn png_simulate(
    run: &mut Run,
    network: &Path,
    stimuli: &Path,
    horizon_ms: f64,
    jitter_ms: f64,
    stdp: Option<&[f64]>,
) -> Result<Status> {
    let net: DelayNetwork = run.read_json(network)?;
    let stim: Vec<(NeuronId, f64)> = run.read_json(stimuli)?;
    let stdp = match stdp {
        None => None,
        Some(&[a_plus, a_minus, tau_plus, tau_minus]) => Some(StdpParams::new(a_plus, a_minus, tau_plus, tau_minus)?),
        Some(v) => bail!("--stdp takes four values, got {}", v.len()),
    };
    let opts = SimOptions { horizon_ms, stdp, jitter_ms, seed: run.rng("png.jitter").next_u64() };
    let result = simulate(&net, &stim, &opts)?;
    println!("events: {}", result.log.len());
    run.write("spikes.csv", result.to_csv().as_bytes())?;
    run.write_json("weights.json", &result.weights)?;
    Ok(Status::Ok)
}

fn png_mine(run: &mut Run, m: &MineArgs) -> Result<(DelayNetwork, Vec<CycleCandidate>)> {
    let net: DelayNetwork = run.read_json(&m.network)?;
    let delta = m.delta_ms.unwrap_or(net.delta_ms);
    let cycles = find_resonant_cycles(&net, m.t_theta_ms, delta, m.tau_gain, m.max_len)?;
    run.write_json("cycles.json", &cycles)?;
    Ok((net, cycles))
}

fn png_reentry(run: &mut Run, m: &MineArgs, periods: usize) -> Result<Status> {
    let (net, cycles) = png_mine(run, m)?;
    let reports = cycles.iter().map(|c| test_reentry(&net, c, periods)).collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("reentrant: {passed}/{}", reports.len());
    run.write_json("reentry.json", &reports)?;
    Ok(Status::from_check(passed == reports.len()))
}

fn png_replay(run: &mut Run, m: &MineArgs, rounds: usize, gain: f64, decay: f64) -> Result<Status> {
    let (net, cycles) = png_mine(run, m)?;
    let consolidated = replay_consolidate(&net, &cycles, rounds, gain, decay)?;
    let delta = m.delta_ms.unwrap_or(net.delta_ms);
    let after = find_resonant_cycles(&consolidated, m.t_theta_ms, delta, m.tau_gain, m.max_len)?;
    let lost: Vec<&CycleCandidate> =
        cycles.iter().filter(|c| !after.iter().any(|a| a.synapses == c.synapses)).collect();
    println!("cycles kept: {}/{}", cycles.len() - lost.len(), cycles.len());
    run.write_json("network.json", &consolidated)?;
    run.write_json("replay.json", &serde_json::json!({ "before": cycles, "after": after, "lost": lost }))?;
    Ok(Status::from_check(lost.is_empty()))
}

fn grid_field(run: &mut Run, path: &Path) -> Result<Status> {
    let cfg: GridConfig = run.read_json(path)?;
    let region = cfg.region.context("grid field needs a region")?;
    let [nx, ny] = cfg.resolution.context("grid field needs a resolution")?;
    let field = place_field_map(&cfg.place, &cfg.cells, &cfg.oscillator, region, (nx, ny))?;
    let peaks: Vec<serde_json::Value> = field
        .peaks()
        .into_iter()
        .map(|(r, c)| serde_json::json!({ "cell": [r, c], "centre": field.centre(r, c), "value": field.raster.get(r, c) }))
        .collect();
    println!("peaks: {}", peaks.len());
    run.write("field.csv", field.raster.to_csv().as_bytes())?;
    run.write("field.pgm", &field.raster.to_pgm())?;
    run.write_json("peaks.json", &peaks)?;
    Ok(Status::Ok)
}

fn grid_tour(run: &mut Run, config: &Path, tours: &Path) -> Result<Status> {
    let cfg: GridConfig = run.read_json(config)?;
    let t: TourPair = run.read_json(tours)?;
    let report = tour_invariance(&cfg.place, &cfg.cells, &cfg.oscillator, &t.a, &t.b)?;
    println!("tours agree: {}", report.passed);
    run.write_json("report.json", &report)?;
    Ok(Status::from_check(report.passed))
}

fn nav_wind(run: &mut Run, workspace: &Path, moves: &Path, tol: f64) -> Result<Status> {
    let ws: Workspace = run.read_json(workspace)?;
    ws.validate()?;
    let moves: Vec<Move> = run.read_json(moves)?;
    let turns = moves.iter().map(|m| turn_counts(&m.path, &ws)).collect::<Result<Vec<_>, _>>()?;
    let path = compose_moves(&moves, &ws, tol)?;
    let w = winding_vector(&path, &ws, tol)?;
    println!("winding: {}", serde_json::to_string(&w)?);
    run.write_json("report.json", &serde_json::json!({ "move_turns": turns, "winding": w }))?;
    Ok(Status::Ok)
}

fn nav_perm(run: &mut Run, workspace: &Path, moves: &Path, orderings: Option<&Path>, tol: f64) -> Result<Status> {
    let ws: Workspace = run.read_json(workspace)?;
    ws.validate()?;
    let moves: Vec<Move> = run.read_json(moves)?;
    let orderings: Vec<Vec<usize>> = match orderings {
        Some(p) => run.read_json(p)?,
        None => {
            ensure!(moves.len() <= MAX_PERM_MOVES, "at most {MAX_PERM_MOVES} moves can be fully permuted");
            (0..moves.len()).permutations(moves.len()).collect()
        }
    };
    let report = order_invariance_check(&moves, &orderings, &ws, tol);
    run.write_json("report.json", &report)?;
    let reference = report.outcomes.iter().find_map(|o| o.winding.as_ref());
    match reference {
        None => eprintln!("no ordering formed a homing loop"),
        Some(first) => {
            for o in &report.outcomes {
                if let Some(w) = o.winding.as_ref().filter(|w| *w != first) {
                    eprintln!("ordering {:?}: winding {:?} differs from {:?}", o.ordering, w.0, first.0);
                }
            }
        }
    }
    println!("orderings agree: {}", report.passed);
    Ok(Status::from_check(report.passed))
}

fn ght_run(run: &mut Run, input: &Path) -> Result<Status> {
    let g: GhtGlimpses = run.read_json(input)?;
    let acc = accumulate(&g.glimpses, &g.table, &g.config)?;
    let peak = argmax_peak(&acc)?;
    println!("peak: {:?} value {}", peak.cell, peak.value);
    run.write("accumulator.csv", acc.grid.to_csv().as_bytes())?;
    run.write("accumulator.pgm", &acc.grid.to_pgm())?;
    run.write_json(
        "report.json",
        &serde_json::json!({ "peak": peak, "overflow": acc.overflow, "overflow_votes": acc.overflow_votes }),
    )?;
    Ok(Status::Ok)
}

fn ght_audit(run: &mut Run, input: &Path, reregister: bool) -> Result<Status> {
    let g: GhtScene = run.read_json(input)?;
    let report = saccade_invariance_audit(&g.scene, &g.paths, &g.table, &g.config, reregister)?;
    println!("peaks agree: {}", report.passed);
    run.write_json("report.json", &report)?;
    Ok(Status::from_check(report.passed))
}

fn ght_persist(run: &mut Run, input: &Path, levels: usize, svg: Option<&str>) -> Result<Status> {
    ensure!(levels >= 1, "--levels must be at least 1");
    let g: GhtGlimpses = run.read_json(input)?;
    let acc = accumulate(&g.glimpses, &g.table, &g.config)?;
    let max = acc.grid.max();
    ensure!(max > 0.0, "accumulator is empty");
    let thresholds: Vec<f64> = (0..levels).map(|k| max * (levels - k) as f64 / levels as f64).collect();
    let b = peak_persistence(&acc, &thresholds)?;
    println!("bars: {}", b.bars.len());
    write_barcode(run, &b, svg, None)?;
    Ok(Status::Ok)
}

fn cech_glue(run: &mut Run, path: &Path) -> Result<Status> {
    let sys: CechSystem = run.read_json(path)?;
    let outcome = glue_sections(&sys.sheaf, &sys.cover)?;
    match &outcome {
        GlueOutcome::Glued { .. } => println!("glued: true"),
        GlueOutcome::Obstructed { violations, .. } => println!("glued: false ({} overlaps disagree)", violations.len()),
    }
    run.write_json("report.json", &outcome)?;
    Ok(Status::Ok)
}

fn cech_colimit(run: &mut Run, path: &Path) -> Result<Status> {
    let sys: CechSystem = run.read_json(path)?;
    let outcome = cosheaf_colimit(&sys.cosheaf, &sys.cover)?;
    println!("plan: {}", outcome.plan().is_some());
    run.write_json("report.json", &outcome)?;
    Ok(Status::Ok)
}

fn cech_cocycle(run: &mut Run, path: &Path, unchecked: bool, drift: Option<&[f64]>, trials: usize) -> Result<Status> {
    let sys: CechSystem = run.read_json(path)?;
    let nerve = build_nerve(&sys.cover);
    let c = if unchecked {
        pairing_cocycle_unchecked(&sys.sheaf, &sys.cosheaf, &sys.pairing, &nerve)?
    } else {
        pairing_cocycle(&sys.sheaf, &sys.cosheaf, &sys.pairing, &nerve)?
    };
    let closed = c.max_coboundary() < CECH_TOL;
    let class = if closed { Some(cocycle_class(&c.omega, &nerve)?) } else { None };
    println!("max |δω|: {:e}", c.max_coboundary());
    println!("closed: {closed}");
    let mut report = serde_json::json!({
        "edges": nerve.edges,
        "triangles": nerve.triangles,
        "omega": c.omega,
        "coboundary": c.coboundary,
        "max_coboundary": c.max_coboundary(),
        "cycle_values": cycle_values(&c.omega, &nerve)?,
        "class": class,
    });
    if let Some(mags) = drift {
        let mut rng = run.rng("cech.drift");
        report["drift"] = serde_json::to_value(class_drift(&mut rng, &sys, mags, trials)?)?;
    }
    run.write_json("report.json", &report)?;
    Ok(Status::from_check(closed))
}

fn hopf(run: &mut Run, a: &HopfArgs) -> Result<Status> {
    let p = HopfParams::new(a.mu, a.omega0, a.a)?;
    let &[x, y] = a.x0.as_slice() else {
        bail!("--x0 takes two values, got {}", a.x0.len());
    };
    let traj = integrate(&p, [x, y], a.horizon, a.step)?;
    let cycle = detect_limit_cycle(&traj)?;
    let eigen = eigenvalue_crossing(a.omega0, &[a.mu]);
    println!("detected: {}", cycle.detected);
    if cycle.detected {
        println!("radius: {:.6}", cycle.radius);
    }
    run.write("trajectory.csv", traj.to_csv(a.stride).as_bytes())?;
    run.write_json("report.json", &serde_json::json!({ "params": p, "limit_cycle": cycle, "eigenvalues": eigen }))?;
    Ok(Status::Ok)
}

