//! Experiment implementations.
//!
//! Every experiment is deterministic given (config, seed): sweep points run
//! in a work pool but each point derives its own RNG stream from the master
//! seed and its index, so the schedule never affects the numbers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map};

use nhsim_core::circuit::{run, CircuitProgram, CircuitStep, PureState};
use nhsim_core::conditioning::{error_budget, verify_budget_bound};
use nhsim_core::gadgets::{build_svd_gadget, svd_gadget_error_bound, verify_gadget};
use nhsim_core::matrix::{
    distance_to_unitary, polar_decompose, svd, OperatorMatrix, C64,
};
use nhsim_core::purification::{dilate_circuit, polar_dilation};
use nhsim_core::stabilizer::{
    exact_dense_record, run_postselected_clifford, CliffordCircuit, CliffordStep,
};
use nhsim_core::trajectories::{
    amplitude_damping_model, effective_hamiltonian, estimate_order, generic_meter_model,
    kraus_set, sample_trajectory, step_kraus, unconditional_step_raw, OrderQuantity,
};
use nhsim_core::matrix_exp;

use crate::config::{EffectiveConfig, ExperimentParams};
use crate::report::{Outcome, Plot, Series, Table};

/// Failure classes the process exit code distinguishes.
#[derive(Debug)]
pub enum RunError {
    /// A library routine reported a numerical problem (ill-conditioning,
    /// overflow, precision floor, …).
    Numerical(String),
}

impl From<nhsim_core::Error> for RunError {
    fn from(e: nhsim_core::Error) -> Self {
        RunError::Numerical(e.to_string())
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Deterministic per-point seed stream (splitmix64 over the master seed and
/// the point index).
fn point_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ (index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` over point indices 0..n on a small work pool; results come back
/// in index order regardless of scheduling.
fn run_points<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|c| c.get())
        .unwrap_or(1)
        .min(n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                *slots[i].lock().unwrap() = Some(f(i));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().unwrap())
        .collect()
}

fn random_matrix(dim: usize, rng: &mut impl Rng) -> OperatorMatrix {
    let data = Array2::from_shape_fn((dim, dim), |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    OperatorMatrix::new(data).unwrap()
}

fn random_unitary(dim: usize, rng: &mut impl Rng) -> Result<OperatorMatrix> {
    Ok(polar_decompose(&random_matrix(dim, rng))?.q)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Dispatches an effective config to its experiment.
pub fn run_experiment(config: &EffectiveConfig) -> Result<Outcome> {
    match &config.params {
        ExperimentParams::GadgetSweep(p) => gadget_sweep(config.rng_seed, p),
        ExperimentParams::DistanceCheck(p) => distance_check(config.rng_seed, p),
        ExperimentParams::DilationEquivalence(p) => dilation_equivalence(config.rng_seed, p),
        ExperimentParams::TrotterOrder(p) => trotter_order(p),
        ExperimentParams::TrajectoryVsLindblad(p) => trajectory_vs_lindblad(config.rng_seed, p),
        ExperimentParams::StabilizerCrosscheck(p) => stabilizer_crosscheck(config.rng_seed, p),
        ExperimentParams::ConditioningAudit(p) => conditioning_audit(config.rng_seed, p),
    }
}

// ---------------------------------------------------------------------------
// gadget-sweep
// ---------------------------------------------------------------------------
fn gadget_sweep(seed: u64, p: &crate::config::GadgetSweepParams) -> Result<Outcome> {
    struct Point {
        min_delta: f64,
        delta: f64,
        r: usize,
        measured: f64,
        bound: f64,
        pass: bool,
    }
    let results: Vec<Result<Point>> = run_points(p.min_deltas.len(), |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, i as u64));
        let target = p.min_deltas[i];
        let (u, lambda1, lambdad, delta) = loop {
            let u = random_matrix(p.dim, &mut rng);
            let sd = svd(&u)?;
            let l1 = sd.singulars[0];
            let ld = sd.singulars[p.dim - 1];
            let d = 1.0 - ld / l1;
            if d >= target {
                break (u, l1, ld, d);
            }
        };
        let (gadget, budget) = build_svd_gadget(&u, p.epsilon, p.k)?;
        let a_sq = rng.gen_range(p.a_sq_min..1.0);
        let phase = C64::new(0.0, rng.gen_range(0.0..std::f64::consts::TAU)).exp();
        let a = C64::new(a_sq.sqrt(), 0.0);
        let b = phase * C64::new((1.0 - a_sq).sqrt(), 0.0);
        let measured = verify_gadget(&gadget, a, b)?;
        let (_, bound) = svd_gadget_error_bound(a_sq, lambda1, lambdad, budget.r)?;
        Ok(Point {
            min_delta: target,
            delta,
            r: budget.r,
            measured,
            bound,
            pass: measured <= p.epsilon && measured <= bound + 1e-12,
        })
    });
    let mut table = Table {
        name: "gadget_sweep".into(),
        header: ["min_delta", "delta", "r", "measured_failure", "bound", "pass"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let mut measured_series = Vec::new();
    let mut bound_series = Vec::new();
    let mut passed = true;
    for point in results {
        let point = point?;
        passed &= point.pass;
        measured_series.push((point.r as f64, log10_floor(point.measured)));
        bound_series.push((point.r as f64, log10_floor(point.bound)));
        table.rows.push(vec![
            fmt(point.min_delta),
            fmt(point.delta),
            point.r.to_string(),
            fmt(point.measured),
            fmt(point.bound),
            point.pass.to_string(),
        ]);
    }
    let mut metrics = Map::new();
    metrics.insert("points".into(), json!(table.rows.len()));
    metrics.insert("epsilon".into(), json!(p.epsilon));
    let plots = vec![Plot {
        name: "failure_vs_r".into(),
        title: "Postselection failure vs gadget repetitions".into(),
        x_label: "repetitions r".into(),
        y_label: "log10 failure probability".into(),
        series: vec![
            Series { label: "measured".into(), points: measured_series },
            Series { label: "analytic bound".into(), points: bound_series },
        ],
    }];
    Ok(Outcome { metrics, passed, tables: vec![table], plots })
}

fn log10_floor(v: f64) -> f64 {
    v.max(1e-300).log10()
}

// ---------------------------------------------------------------------------
// distance-check
// ---------------------------------------------------------------------------
fn distance_check(seed: u64, p: &crate::config::DistanceCheckParams) -> Result<Outcome> {
    let results: Vec<Result<(f64, f64)>> = run_points(p.num_matrices, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, i as u64));
        let u = random_matrix(p.dim, &mut rng);
        let formula = distance_to_unitary(&u)?.distance;
        let mut lo = 1e-3 * 4.0 / u.operator_norm();
        let mut hi = 4.0 / u.operator_norm();
        let mut best = f64::INFINITY;
        for _ in 0..p.refinements {
            let mut best_alpha = lo;
            for g in 0..p.grid_points {
                let alpha = lo + (hi - lo) * g as f64 / (p.grid_points - 1) as f64;
                let scaled = u.scale(C64::new(alpha, 0.0));
                let dist = scaled.sub(&polar_decompose(&scaled)?.q).operator_norm();
                if dist < best {
                    best = dist;
                    best_alpha = alpha;
                }
            }
            let step = (hi - lo) / (p.grid_points - 1) as f64;
            lo = (best_alpha - 2.0 * step).max(f64::MIN_POSITIVE);
            hi = best_alpha + 2.0 * step;
        }
        Ok((formula, best))
    });
    let mut table = Table {
        name: "distance_check".into(),
        header: ["case", "formula", "grid_minimum", "abs_diff", "pass"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let mut passed = true;
    let mut max_diff = 0.0f64;
    for (i, r) in results.into_iter().enumerate() {
        let (formula, grid) = r?;
        let diff = (formula - grid).abs();
        max_diff = max_diff.max(diff);
        let ok = diff <= p.tolerance;
        passed &= ok;
        table.rows.push(vec![
            i.to_string(),
            fmt(formula),
            fmt(grid),
            fmt(diff),
            ok.to_string(),
        ]);
    }
    let mut metrics = Map::new();
    metrics.insert("max_abs_diff".into(), json!(max_diff));
    metrics.insert("tolerance".into(), json!(p.tolerance));
    Ok(Outcome { metrics, passed, tables: vec![table], plots: Vec::new() })
}

// ---------------------------------------------------------------------------
// dilation-equivalence
// ---------------------------------------------------------------------------
fn dilation_equivalence(
    seed: u64,
    p: &crate::config::DilationEquivalenceParams,
) -> Result<Outcome> {
    struct Case {
        fidelity: f64,
        unitarity: f64,
        pass: bool,
    }
    let results: Vec<Result<Case>> = run_points(p.num_programs, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, i as u64));
        // Redraw on branches the direct simulation annihilates: those have
        // no conditioned output to compare against.
        for _attempt in 0..64 {
            let n = p.num_qubits;
            let n_steps = rng.gen_range(1..=p.max_steps);
            let mut steps = Vec::new();
            let mut nonunitary_ops = Vec::new();
            for _ in 0..n_steps {
                let span = rng.gen_range(1..=n.min(2));
                let mut targets: Vec<usize> = (0..n).collect();
                for j in (1..targets.len()).rev() {
                    targets.swap(j, rng.gen_range(0..=j));
                }
                targets.truncate(span);
                if rng.gen_bool(0.5) && nonunitary_ops.len() < p.max_nonunitary {
                    let op = random_matrix(1 << span, &mut rng);
                    nonunitary_ops.push(op.clone());
                    steps.push(CircuitStep::Nonunitary { op, targets });
                } else {
                    steps.push(CircuitStep::Unitary {
                        op: random_unitary(1 << span, &mut rng)?,
                        targets,
                    });
                }
            }
            let program = CircuitProgram::new(n, steps)?;
            let meters = nonunitary_ops.len();
            let mut unitarity = 0.0f64;
            for op in &nonunitary_ops {
                let g = polar_dilation(op)?;
                let resid = g
                    .unitary
                    .adjoint()
                    .matmul(&g.unitary)
                    .sub(&OperatorMatrix::identity(g.unitary.dim()))
                    .max_abs_entry();
                unitarity = unitarity.max(resid);
            }
            let dilated = dilate_circuit(&program)?;
            let raw = Array1::from_shape_fn(1 << n, |_| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let psi = PureState::from_unnormalized(n, raw).unwrap();
            let direct = match run(&program, &psi, 0) {
                Ok(o) => o,
                Err(_) => continue,
            };
            let mut amps = Array1::zeros(1 << (n + meters));
            for j in 0..(1 << n) {
                amps[j << meters] = psi.amplitudes()[j];
            }
            let full = PureState::new(n + meters, amps).unwrap();
            let lifted = run(&dilated, &full, 0)?;
            let mut ip = C64::new(0.0, 0.0);
            for j in 0..(1 << n) {
                ip += direct.state.amplitudes()[j].conj()
                    * lifted.state.amplitudes()[j << meters];
            }
            let fidelity = ip.norm();
            return Ok(Case {
                fidelity,
                unitarity,
                pass: fidelity >= p.fidelity_threshold && unitarity <= p.unitarity_tolerance,
            });
        }
        Err(RunError::Numerical(
            "could not draw a program with a surviving postselection branch".into(),
        ))
    });
    let mut table = Table {
        name: "dilation_equivalence".into(),
        header: ["case", "fidelity", "unitarity_residual", "pass"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let mut passed = true;
    let mut min_fid = 1.0f64;
    for (i, r) in results.into_iter().enumerate() {
        let case = r?;
        passed &= case.pass;
        min_fid = min_fid.min(case.fidelity);
        table.rows.push(vec![
            i.to_string(),
            fmt(case.fidelity),
            fmt(case.unitarity),
            case.pass.to_string(),
        ]);
    }
    let mut metrics = Map::new();
    metrics.insert("min_fidelity".into(), json!(min_fid));
    metrics.insert("fidelity_threshold".into(), json!(p.fidelity_threshold));
    Ok(Outcome { metrics, passed, tables: vec![table], plots: Vec::new() })
}

// ---------------------------------------------------------------------------
// trotter-order
// ---------------------------------------------------------------------------
fn trotter_order(p: &crate::config::TrotterOrderParams) -> Result<Outcome> {
    let mut slopes = Table {
        name: "trotter_slopes".into(),
        header: ["variant", "slope", "window_low", "window_high", "pass"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let mut errors = Table {
        name: "trotter_errors".into(),
        header: ["variant", "delta", "no_jump_error"].map(String::from).to_vec(),
        rows: Vec::new(),
    };
    let mut passed = true;
    let mut metrics = Map::new();
    let mut plot_series = Vec::new();
    for (variant, restricted, window) in [
        ("generic", false, p.generic_window),
        ("restricted", true, p.restricted_window),
    ] {
        let model = generic_meter_model(1e-3, restricted);
        let slope = estimate_order(&model, OrderQuantity::NoJumpError, &p.deltas)?;
        let ok = (window[0]..=window[1]).contains(&slope);
        passed &= ok;
        slopes.rows.push(vec![
            variant.into(),
            fmt(slope),
            fmt(window[0]),
            fmt(window[1]),
            ok.to_string(),
        ]);
        metrics.insert(format!("{variant}_slope"), json!(slope));
        let mut points = Vec::new();
        for &delta in &p.deltas {
            let mut m = model.clone();
            m.delta = delta;
            let c = step_kraus(&m, m.initial_level, m.initial_level)?;
            let ideal = matrix_exp(
                &effective_hamiltonian(&m, m.initial_level)?.scale(C64::new(0.0, -delta)),
            )?;
            let err = c.sub(&ideal).operator_norm();
            errors
                .rows
                .push(vec![variant.into(), fmt(delta), fmt(err)]);
            points.push((delta.max(1e-300).log10(), log10_floor(err)));
        }
        plot_series.push(Series { label: variant.into(), points });
    }
    let plots = vec![Plot {
        name: "trotter_order_fit".into(),
        title: "No-jump Trotter error vs timestep".into(),
        x_label: "log10 delta".into(),
        y_label: "log10 error".into(),
        series: plot_series,
    }];
    Ok(Outcome { metrics, passed, tables: vec![slopes, errors], plots })
}

// ---------------------------------------------------------------------------
// trajectory-vs-lindblad
// ---------------------------------------------------------------------------
fn trajectory_vs_lindblad(
    seed: u64,
    p: &crate::config::TrajectoryVsLindbladParams,
) -> Result<Outcome> {
    let model = amplitude_damping_model(p.kappa, p.delta);
    let t = p.delta * p.steps as f64;
    let target = (-p.kappa * t).exp();

    let kraus = kraus_set(&model)?;
    let mut rho =
        OperatorMatrix::from_real_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
    for _ in 0..p.steps {
        rho = unconditional_step_raw(&kraus, &rho);
    }
    let deterministic = rho.entry(1, 1).re;

    let samples: Vec<Result<f64>> = run_points(p.num_trajectories, |i| {
        let mut excited = Array1::zeros(2);
        excited[1] = C64::new(1.0, 0.0);
        let rec = sample_trajectory(&model, &excited, p.steps, point_seed(seed, i as u64))?;
        Ok(rec.final_state[1].norm_sqr())
    });
    let mut values = Vec::with_capacity(samples.len());
    for s in samples {
        values.push(s?);
    }
    let n = values.len() as f64;
    let mean: f64 = values.iter().sum::<f64>() / n;
    let var: f64 =
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();

    let det_ok = (deterministic - target).abs() <= p.tolerance;
    let mc_ok = (mean - deterministic).abs() <= 3.0 * se;
    let table = Table {
        name: "trajectory_vs_lindblad".into(),
        header: ["quantity", "value"].map(String::from).to_vec(),
        rows: vec![
            vec!["exact_exp_decay".into(), fmt(target)],
            vec!["deterministic_rho11".into(), fmt(deterministic)],
            vec!["trajectory_mean".into(), fmt(mean)],
            vec!["trajectory_standard_error".into(), fmt(se)],
        ],
    };
    // Running average for the plot (101 checkpoints).
    let mut running = Vec::new();
    let mut acc = 0.0;
    let stride = (values.len() / 100).max(1);
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if (i + 1) % stride == 0 || i + 1 == values.len() {
            running.push(((i + 1) as f64, acc / (i + 1) as f64));
        }
    }
    let reference: Vec<(f64, f64)> = running
        .iter()
        .map(|&(x, _)| (x, deterministic))
        .collect();
    let plots = vec![Plot {
        name: "trajectory_average".into(),
        title: "Running trajectory average of the excited population".into(),
        x_label: "trajectories".into(),
        y_label: "mean excited population".into(),
        series: vec![
            Series { label: "running mean".into(), points: running },
            Series { label: "unconditional map".into(), points: reference },
        ],
    }];
    let mut metrics = Map::new();
    metrics.insert("deterministic_rho11".into(), json!(deterministic));
    metrics.insert("trajectory_mean".into(), json!(mean));
    metrics.insert("standard_error".into(), json!(se));
    metrics.insert("exact_exp_decay".into(), json!(target));
    Ok(Outcome {
        metrics,
        passed: det_ok && mc_ok,
        tables: vec![table],
        plots,
    })
}

// ---------------------------------------------------------------------------
// stabilizer-crosscheck
// ---------------------------------------------------------------------------
fn stabilizer_crosscheck(
    seed: u64,
    p: &crate::config::StabilizerCrosscheckParams,
) -> Result<Outcome> {
    struct Case {
        qubits: usize,
        gates: usize,
        forces: usize,
        tableau: String,
        dense: String,
        agree: bool,
    }
    let results: Vec<Result<Case>> = run_points(p.num_circuits, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, i as u64));
        let n = rng.gen_range(1..=p.max_qubits);
        let gates = rng.gen_range(1..=p.max_gates);
        let forces = rng.gen_range(0..=p.max_forces);
        let mut steps = Vec::new();
        for _ in 0..gates {
            let kind = if n < 2 { rng.gen_range(0..2) } else { rng.gen_range(0..3) };
            match kind {
                0 => steps.push(CliffordStep::H(rng.gen_range(0..n))),
                1 => steps.push(CliffordStep::S(rng.gen_range(0..n))),
                _ => {
                    let c = rng.gen_range(0..n);
                    let mut t = rng.gen_range(0..n);
                    while t == c {
                        t = rng.gen_range(0..n);
                    }
                    steps.push(CliffordStep::Cnot(c, t));
                }
            }
        }
        for _ in 0..forces {
            let pos = rng.gen_range(0..=steps.len());
            steps.insert(
                pos,
                CliffordStep::Force(rng.gen_range(0..n), rng.gen_range(0..2)),
            );
        }
        let circuit = CliffordCircuit::new(n, steps)?;
        let dense = exact_dense_record(&circuit)?;
        let (tableau, agree) = match run_postselected_clifford(&circuit) {
            Ok((_, prob)) => (
                format!("2^-{}", prob.exponent),
                dense.equals_dyadic(prob),
            ),
            Err(_) => ("0".into(), dense.num == 0),
        };
        Ok(Case {
            qubits: n,
            gates,
            forces,
            tableau,
            dense: format!("{}/2^{}", dense.num, dense.denom_log2),
            agree,
        })
    });
    let mut table = Table {
        name: "stabilizer_crosscheck".into(),
        header: ["case", "qubits", "gates", "forces", "tableau_prob", "dense_prob", "agree"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    let mut passed = true;
    for (i, r) in results.into_iter().enumerate() {
        let case = r?;
        passed &= case.agree;
        table.rows.push(vec![
            i.to_string(),
            case.qubits.to_string(),
            case.gates.to_string(),
            case.forces.to_string(),
            case.tableau,
            case.dense,
            case.agree.to_string(),
        ]);
    }
    let mut metrics = Map::new();
    metrics.insert("circuits".into(), json!(table.rows.len()));
    Ok(Outcome { metrics, passed, tables: vec![table], plots: Vec::new() })
}

// ---------------------------------------------------------------------------
// conditioning-audit
// ---------------------------------------------------------------------------
fn conditioning_audit(seed: u64, p: &crate::config::ConditioningAuditParams) -> Result<Outcome> {
    let budget = error_budget(p.epsilon, p.q)?;
    let max_error = verify_budget_bound(&budget, p.trials as usize, seed)?;
    let passed = max_error <= p.epsilon;
    let table = Table {
        name: "conditioning_audit".into(),
        header: ["epsilon", "q", "epsilon_prime", "trials", "max_conditional_error"]
            .map(String::from)
            .to_vec(),
        rows: vec![vec![
            fmt(p.epsilon),
            p.q.to_string(),
            fmt(budget.epsilon_prime),
            p.trials.to_string(),
            fmt(max_error),
        ]],
    };
    let mut metrics = Map::new();
    metrics.insert("max_conditional_error".into(), json!(max_error));
    metrics.insert("epsilon".into(), json!(p.epsilon));
    metrics.insert("epsilon_prime".into(), json!(budget.epsilon_prime));
    Ok(Outcome { metrics, passed, tables: vec![table], plots: Vec::new() })
}
