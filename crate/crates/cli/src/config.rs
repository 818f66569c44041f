//! Experiment configuration: JSON files with strict schemas.
//!
//! A config file names one experiment kind, an optional RNG seed, and a
//! kind-specific parameter object. Unknown keys are rejected everywhere so a
//! misspelling cannot silently fall back to a default.

use serde::{Deserialize, Serialize};

/// The experiment kinds the runner knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GadgetSweep,
    DistanceCheck,
    DilationEquivalence,
    TrotterOrder,
    TrajectoryVsLindblad,
    StabilizerCrosscheck,
    ConditioningAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::GadgetSweep,
        ExperimentKind::DistanceCheck,
        ExperimentKind::DilationEquivalence,
        ExperimentKind::TrotterOrder,
        ExperimentKind::TrajectoryVsLindblad,
        ExperimentKind::StabilizerCrosscheck,
        ExperimentKind::ConditioningAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GadgetSweep => "gadget-sweep",
            ExperimentKind::DistanceCheck => "distance-check",
            ExperimentKind::DilationEquivalence => "dilation-equivalence",
            ExperimentKind::TrotterOrder => "trotter-order",
            ExperimentKind::TrajectoryVsLindblad => "trajectory-vs-lindblad",
            ExperimentKind::StabilizerCrosscheck => "stabilizer-crosscheck",
            ExperimentKind::ConditioningAudit => "conditioning-audit",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::GadgetSweep => {
                "postselection gadget failure vs repetitions over a sweep of \
                 non-unitarity targets"
            }
            ExperimentKind::DistanceCheck => {
                "closed-form distance to the unitary group vs a brute-force \
                 scaled-polar grid search"
            }
            ExperimentKind::DilationEquivalence => {
                "unitary-dilation circuits vs direct renormalized simulation \
                 on random programs"
            }
            ExperimentKind::TrotterOrder => {
                "fitted convergence order of the no-jump Trotter error, \
                 generic and restricted couplings"
            }
            ExperimentKind::TrajectoryVsLindblad => {
                "Monte Carlo trajectory average vs the deterministic \
                 unconditional map for amplitude damping"
            }
            ExperimentKind::StabilizerCrosscheck => {
                "postselected Clifford tableau probabilities vs an exact \
                 integer statevector oracle"
            }
            ExperimentKind::ConditioningAudit => {
                "adversarial audit of the conditional-probability error \
                 budget"
            }
        }
    }
}

/// Raw shape of a config file on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub rng_seed: Option<u64>,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

fn default_epsilon() -> f64 {
    1.0 / 1024.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GadgetSweepParams {
    /// Gate dimension; must be a power of two for the ancilla register.
    pub dim: usize,
    /// Target failure probability ε per gadget.
    pub epsilon: f64,
    /// Precision exponent k (soundness against amplitudes ≥ 2^{−k/2}).
    pub k: u32,
    /// Sweep points: minimum non-unitarity Δ = 1 − λd/λ1 of the drawn gate.
    pub min_deltas: Vec<f64>,
    /// Lower bound on the drawn |a|² (extremal-plane weight of the input).
    pub a_sq_min: f64,
}

impl Default for GadgetSweepParams {
    fn default() -> Self {
        Self {
            dim: 2,
            epsilon: default_epsilon(),
            k: 4,
            min_deltas: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            a_sq_min: 0.0625,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceCheckParams {
    pub num_matrices: usize,
    pub dim: usize,
    /// Agreement tolerance between the formula and the grid minimum.
    pub tolerance: f64,
    /// Grid points per refinement pass.
    pub grid_points: usize,
    pub refinements: usize,
}

impl Default for DistanceCheckParams {
    fn default() -> Self {
        Self {
            num_matrices: 20,
            dim: 4,
            tolerance: 1e-6,
            grid_points: 1000,
            refinements: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DilationEquivalenceParams {
    pub num_programs: usize,
    pub num_qubits: usize,
    pub max_steps: usize,
    pub max_nonunitary: usize,
    pub fidelity_threshold: f64,
    pub unitarity_tolerance: f64,
}

impl Default for DilationEquivalenceParams {
    fn default() -> Self {
        Self {
            num_programs: 25,
            num_qubits: 4,
            max_steps: 5,
            max_nonunitary: 3,
            fidelity_threshold: 1.0 - 1e-9,
            unitarity_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrotterOrderParams {
    pub deltas: Vec<f64>,
    /// Acceptance window for the generic-coupling slope.
    pub generic_window: [f64; 2],
    /// Acceptance window for the restricted-coupling slope.
    pub restricted_window: [f64; 2],
}

impl Default for TrotterOrderParams {
    fn default() -> Self {
        Self {
            deltas: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            generic_window: [1.35, 1.65],
            restricted_window: [1.85, 2.15],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryVsLindbladParams {
    pub kappa: f64,
    pub delta: f64,
    pub steps: usize,
    pub num_trajectories: usize,
    /// Allowed deviation of the deterministic map from e^{−κt}.
    pub tolerance: f64,
}

impl Default for TrajectoryVsLindbladParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            delta: 1e-3,
            steps: 1000,
            num_trajectories: 2000,
            tolerance: 2e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilizerCrosscheckParams {
    pub num_circuits: usize,
    pub max_qubits: usize,
    pub max_gates: usize,
    pub max_forces: usize,
}

impl Default for StabilizerCrosscheckParams {
    fn default() -> Self {
        Self {
            num_circuits: 100,
            max_qubits: 8,
            max_gates: 40,
            max_forces: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditioningAuditParams {
    pub epsilon: f64,
    pub q: u32,
    pub trials: u64,
}

impl Default for ConditioningAuditParams {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            q: 12,
            trials: 10_000,
        }
    }
}

/// A parsed and schema-checked configuration.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    GadgetSweep(GadgetSweepParams),
    DistanceCheck(DistanceCheckParams),
    DilationEquivalence(DilationEquivalenceParams),
    TrotterOrder(TrotterOrderParams),
    TrajectoryVsLindblad(TrajectoryVsLindbladParams),
    StabilizerCrosscheck(StabilizerCrosscheckParams),
    ConditioningAudit(ConditioningAuditParams),
}

/// The effective configuration a run executes: kind, resolved seed, resolved
/// parameters (defaults filled in). Serialized into every report so a report
/// is self-describing and replayable.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub experiment: ExperimentKind,
    pub rng_seed: u64,
    pub params: ExperimentParams,
}

fn parse_params<T: for<'de> Deserialize<'de>>(
    value: &serde_json::Value,
) -> Result<T, String> {
    serde_json::from_value(value.clone()).map_err(|e| format!("invalid params: {e}"))
}

fn check_positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), String> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(format!("epsilon must lie in (0, 1), got {epsilon}"))
    }
}

/// Resolves a raw config file into an effective configuration, applying the
/// seed override and validating every kind-specific invariant. This is the
/// whole of `validate`: no experiment code runs.
pub fn resolve(file: &ConfigFile, seed_override: Option<u64>) -> Result<EffectiveConfig, String> {
    let rng_seed = seed_override.or(file.rng_seed).unwrap_or(0);
    let params = match file.experiment {
        ExperimentKind::GadgetSweep => {
            let p: GadgetSweepParams = parse_params(&file.params)?;
            if !p.dim.is_power_of_two() || p.dim < 2 {
                return Err(format!(
                    "dimension error: gadget dim must be a power of two ≥ 2 \
                     (the ancilla register is a qubit count), got {}",
                    p.dim
                ));
            }
            check_epsilon(p.epsilon)?;
            if !(p.a_sq_min > 0.0 && p.a_sq_min < 1.0) {
                return Err(format!("a_sq_min must lie in (0, 1), got {}", p.a_sq_min));
            }
            for (i, d) in p.min_deltas.iter().enumerate() {
                if !(*d > 0.0 && *d < 1.0) {
                    return Err(format!(
                        "min_deltas[{i}] must lie in (0, 1), got {d}"
                    ));
                }
            }
            ExperimentParams::GadgetSweep(p)
        }
        ExperimentKind::DistanceCheck => {
            let p: DistanceCheckParams = parse_params(&file.params)?;
            if p.dim < 2 {
                return Err(format!("dimension error: dim must be ≥ 2, got {}", p.dim));
            }
            check_positive("tolerance", p.tolerance)?;
            if p.grid_points < 2 || p.refinements == 0 {
                return Err("grid_points must be ≥ 2 and refinements ≥ 1".into());
            }
            ExperimentParams::DistanceCheck(p)
        }
        ExperimentKind::DilationEquivalence => {
            let p: DilationEquivalenceParams = parse_params(&file.params)?;
            if p.num_qubits == 0 || p.num_qubits > 10 {
                return Err(format!(
                    "num_qubits must lie in 1..=10 (dense simulation), got {}",
                    p.num_qubits
                ));
            }
            if p.max_steps == 0 {
                return Err("max_steps must be ≥ 1".into());
            }
            ExperimentParams::DilationEquivalence(p)
        }
        ExperimentKind::TrotterOrder => {
            let p: TrotterOrderParams = parse_params(&file.params)?;
            if p.deltas.len() < 4 {
                return Err(format!(
                    "deltas needs at least 4 points for a slope fit, got {}",
                    p.deltas.len()
                ));
            }
            for (i, d) in p.deltas.iter().enumerate() {
                check_positive(&format!("deltas[{i}]"), *d)?;
            }
            ExperimentParams::TrotterOrder(p)
        }
        ExperimentKind::TrajectoryVsLindblad => {
            let p: TrajectoryVsLindbladParams = parse_params(&file.params)?;
            check_positive("kappa", p.kappa)?;
            check_positive("delta", p.delta)?;
            check_positive("tolerance", p.tolerance)?;
            if p.steps == 0 {
                return Err("steps must be ≥ 1".into());
            }
            ExperimentParams::TrajectoryVsLindblad(p)
        }
        ExperimentKind::StabilizerCrosscheck => {
            let p: StabilizerCrosscheckParams = parse_params(&file.params)?;
            if p.max_qubits == 0 || p.max_qubits > 16 {
                return Err(format!(
                    "max_qubits must lie in 1..=16 (the oracle is dense), got {}",
                    p.max_qubits
                ));
            }
            if p.max_gates == 0 {
                return Err("max_gates must be ≥ 1".into());
            }
            ExperimentParams::StabilizerCrosscheck(p)
        }
        ExperimentKind::ConditioningAudit => {
            let p: ConditioningAuditParams = parse_params(&file.params)?;
            check_epsilon(p.epsilon)?;
            if p.q == 0 || p.q > 60 {
                return Err(format!("q must lie in 1..=60, got {}", p.q));
            }
            if p.trials == 0 {
                return Err("trials must be ≥ 1".into());
            }
            ExperimentParams::ConditioningAudit(p)
        }
    };
    Ok(EffectiveConfig {
        experiment: file.experiment,
        rng_seed,
        params,
    })
}

/// Loads and parses a config file. Parse errors carry serde's line/column
/// plus the offending field name where applicable.
pub fn load(path: &std::path::Path) -> Result<ConfigFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}
