//! Trotterized quantum trajectories on a system ⊗ meter register.
//!
//! One timestep couples the system to a `d_B`-level meter through
//! `H = H_A + H_AB/√δ` with `H_A = Σ_j H_j ⊗ |j⟩⟨j|` and
//! `H_AB = Σ_{j≠k} L_jk ⊗ |j⟩⟨k|`, evolves for time `δ`, and measures the
//! meter. The no-jump branch reproduces the non-Hermitian effective
//! Hamiltonian `H_k − (i/2) Σ_j L_jk† L_jk` to `O(δ^{3/2})`, jump branches
//! carry amplitude `−i√δ·L`, and averaging over outcomes recovers the
//! Lindblad semigroup. [`estimate_order`] measures those convergence rates
//! numerically.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::DensityState;
use crate::error::{Error, Result};
use crate::expm::matrix_exp;
use crate::matrix::{embed, OperatorMatrix, C64};

/// One coupling term `op ⊗ |to⟩⟨from|` of the system–meter interaction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Jump {
    pub to: usize,
    pub from: usize,
    pub op: OperatorMatrix,
}

/// A Trotterized trajectory model: per-meter-level system Hamiltonians,
/// jump couplings, and the timestep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryModel {
    /// Meter dimension `d_B`.
    pub meter_levels: usize,
    /// `H_j` for each meter level `j`; all Hermitian, same dimension.
    #[serde(rename = "hamiltonians")]
    pub system_hamiltonians: Vec<OperatorMatrix>,
    /// Couplings `L_jk ⊗ |j⟩⟨k|` for `j ≠ k`. A pair may be given once
    /// (its adjoint partner is implied) or twice (checked for consistency).
    pub jumps: Vec<Jump>,
    /// Timestep `δ > 0`.
    pub delta: f64,
    /// Meter preparation/reset level.
    #[serde(default)]
    pub initial_level: usize,
}

impl TrajectoryModel {
    pub fn new(
        meter_levels: usize,
        system_hamiltonians: Vec<OperatorMatrix>,
        jumps: Vec<Jump>,
        delta: f64,
    ) -> Result<Self> {
        let model = Self {
            meter_levels,
            system_hamiltonians,
            jumps,
            delta,
            initial_level: 0,
        };
        model.validate()?;
        Ok(model)
    }

    /// System dimension `d_A`.
    pub fn system_dim(&self) -> usize {
        self.system_hamiltonians[0].dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.meter_levels == 0 {
            return Err(Error::InvalidArgument("meter needs at least one level".into()));
        }
        if self.system_hamiltonians.len() != self.meter_levels {
            return Err(Error::Dimension(format!(
                "{} system Hamiltonians for {} meter levels",
                self.system_hamiltonians.len(),
                self.meter_levels
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "timestep must be positive, got {}",
                self.delta
            )));
        }
        if self.initial_level >= self.meter_levels {
            return Err(Error::InvalidArgument(format!(
                "initial meter level {} out of range",
                self.initial_level
            )));
        }
        let d = self.system_hamiltonians[0].dim();
        for (j, h) in self.system_hamiltonians.iter().enumerate() {
            if h.dim() != d {
                return Err(Error::Dimension(format!(
                    "system Hamiltonian {j} has dimension {} ≠ {d}",
                    h.dim()
                )));
            }
            if !h.is_hermitian(1e-12) {
                return Err(Error::WellFormedness(format!(
                    "system Hamiltonian {j} is not Hermitian within 1e-12"
                )));
            }
        }
        for jump in &self.jumps {
            if jump.to == jump.from {
                return Err(Error::WellFormedness(
                    "jump couplings must connect distinct meter levels".into(),
                ));
            }
            if jump.to >= self.meter_levels || jump.from >= self.meter_levels {
                return Err(Error::InvalidArgument(format!(
                    "jump ({}, {}) outside the {}-level meter",
                    jump.to, jump.from, self.meter_levels
                )));
            }
            if jump.op.dim() != d {
                return Err(Error::Dimension(format!(
                    "jump ({}, {}) has dimension {} ≠ {d}",
                    jump.to,
                    jump.from,
                    jump.op.dim()
                )));
            }
        }
        // Hermiticity of H_AB: L_jk = L_kj† for every stated pair.
        self.coupling_table()?;
        Ok(())
    }

    /// Full table `L_jk` indexed `[j][k]`, with implied adjoint partners
    /// filled in; errors on an inconsistent explicit pair.
    fn coupling_table(&self) -> Result<Vec<Vec<Option<OperatorMatrix>>>> {
        let n = self.meter_levels;
        let mut table: Vec<Vec<Option<OperatorMatrix>>> = vec![vec![None; n]; n];
        for jump in &self.jumps {
            if table[jump.to][jump.from].is_some() {
                return Err(Error::WellFormedness(format!(
                    "duplicate jump coupling ({}, {})",
                    jump.to, jump.from
                )));
            }
            table[jump.to][jump.from] = Some(jump.op.clone());
        }
        for j in 0..n {
            for k in (j + 1)..n {
                match (table[j][k].clone(), table[k][j].clone()) {
                    (Some(a), Some(b)) => {
                        if a.sub(&b.adjoint()).max_abs_entry() > 1e-12 {
                            return Err(Error::WellFormedness(format!(
                                "couplings ({j},{k}) and ({k},{j}) are not adjoints \
                                 of each other"
                            )));
                        }
                    }
                    (Some(a), None) => table[k][j] = Some(a.adjoint()),
                    (None, Some(b)) => table[j][k] = Some(b.adjoint()),
                    (None, None) => {}
                }
            }
        }
        Ok(table)
    }
}

/// Assembles the full step generator `H = H_A + H_AB/√δ` on A ⊗ B
/// (system index major, meter index minor). Hermitian within 1e-12.
pub fn assemble(model: &TrajectoryModel) -> Result<OperatorMatrix> {
    model.validate()?;
    let d_a = model.system_dim();
    let d_b = model.meter_levels;
    let n = d_a * d_b;
    let mut h = Array2::zeros((n, n));
    for (j, hj) in model.system_hamiltonians.iter().enumerate() {
        for a in 0..d_a {
            for b in 0..d_a {
                h[(a * d_b + j, b * d_b + j)] = hj.entry(a, b);
            }
        }
    }
    let scale = C64::new(1.0 / model.delta.sqrt(), 0.0);
    let table = model.coupling_table()?;
    for (j, row) in table.iter().enumerate() {
        for (k, op) in row.iter().enumerate() {
            if let Some(op) = op {
                for a in 0..d_a {
                    for b in 0..d_a {
                        h[(a * d_b + j, b * d_b + k)] += scale * op.entry(a, b);
                    }
                }
            }
        }
    }
    let h = OperatorMatrix::new(h)?;
    if !h.is_hermitian(1e-12) {
        return Err(Error::WellFormedness(
            "assembled step generator is not Hermitian within 1e-12".into(),
        ));
    }
    Ok(h)
}

/// The one-step dilation unitary `e^{−iHδ}`.
pub fn step_unitary(model: &TrajectoryModel) -> Result<OperatorMatrix> {
    let h = assemble(model)?;
    matrix_exp(&h.scale(C64::new(0.0, -model.delta)))
}

fn meter_block(u: &OperatorMatrix, d_b: usize, k: usize, j: usize) -> OperatorMatrix {
    let d_a = u.dim() / d_b;
    let mut c = Array2::zeros((d_a, d_a));
    for a in 0..d_a {
        for b in 0..d_a {
            c[(a, b)] = u.entry(a * d_b + k, b * d_b + j);
        }
    }
    OperatorMatrix::new(c).expect("finite block")
}

/// The Kraus branch `⟨k| e^{−iHδ} |j⟩`: for `j = k` this is
/// `e^{−iδ H_eff^j} + O(δ^{3/2})`, for `j ≠ k` it is `−i√δ·L_kj + O(δ)`.
pub fn step_kraus(model: &TrajectoryModel, j: usize, k: usize) -> Result<OperatorMatrix> {
    if j >= model.meter_levels || k >= model.meter_levels {
        return Err(Error::InvalidArgument(format!(
            "meter levels ({j}, {k}) out of range"
        )));
    }
    let u = step_unitary(model)?;
    Ok(meter_block(&u, model.meter_levels, k, j))
}

/// All Kraus branches `{⟨k|U|j⟩}_k` for the configured initial level `j`,
/// sharing a single matrix exponential.
pub fn kraus_set(model: &TrajectoryModel) -> Result<Vec<OperatorMatrix>> {
    let u = step_unitary(model)?;
    Ok((0..model.meter_levels)
        .map(|k| meter_block(&u, model.meter_levels, k, model.initial_level))
        .collect())
}

/// The no-jump effective Hamiltonian at meter level `k`:
/// `H_k − (i/2) Σ_{j≠k} L_jk† L_jk`.
pub fn effective_hamiltonian(model: &TrajectoryModel, k: usize) -> Result<OperatorMatrix> {
    if k >= model.meter_levels {
        return Err(Error::InvalidArgument(format!("meter level {k} out of range")));
    }
    model.validate()?;
    let table = model.coupling_table()?;
    let mut acc = model.system_hamiltonians[k].clone();
    for (j, row) in table.iter().enumerate() {
        if j == k {
            continue;
        }
        if let Some(l_jk) = &row[k] {
            acc = acc.add(
                &l_jk
                    .adjoint()
                    .matmul(l_jk)
                    .scale(C64::new(0.0, -0.5)),
            );
        }
    }
    Ok(acc)
}

/// One unconditional (meter-averaged) step:
/// `ρ ↦ Tr_B[U(ρ⊗|j⟩⟨j|)U†] = Σ_k C_kj ρ C_kj†`. Trace preserving;
/// equals `ρ + δ·𝓛(ρ) + O(δ^{3/2})` for the Lindblad generator `𝓛`.
pub fn unconditional_step(model: &TrajectoryModel, rho: &DensityState) -> Result<DensityState> {
    let kraus = kraus_set(model)?;
    let next = unconditional_step_raw(&kraus, rho.matrix());
    DensityState::new(rho.num_qubits(), next)
}

/// The same map on a bare density matrix (no qubit-register constraint).
pub fn unconditional_step_raw(
    kraus: &[OperatorMatrix],
    rho: &OperatorMatrix,
) -> OperatorMatrix {
    let d = rho.dim();
    let mut acc = OperatorMatrix::zeros(d);
    for c in kraus {
        acc = acc.add(&c.matmul(rho).matmul(&c.adjoint()));
    }
    acc.hermitize()
}

/// The Lindblad generator `𝓛(ρ) = −i[H_j, ρ] + Σ_k L ρ L† − ½{L†L, ρ}`
/// of the configured initial level, for convergence cross-checks.
pub fn lindblad_generator(
    model: &TrajectoryModel,
    rho: &OperatorMatrix,
) -> Result<OperatorMatrix> {
    let table = model.coupling_table()?;
    let j0 = model.initial_level;
    let h = &model.system_hamiltonians[j0];
    let comm = h.matmul(rho).sub(&rho.matmul(h));
    let mut acc = comm.scale(C64::new(0.0, -1.0));
    for (k, row) in table.iter().enumerate() {
        if k == j0 {
            continue;
        }
        if let Some(l) = &row[j0] {
            let ldl = l.adjoint().matmul(l);
            acc = acc.add(&l.matmul(rho).matmul(&l.adjoint()));
            acc = acc.add(&ldl.matmul(rho).scale(C64::new(-0.5, 0.0)));
            acc = acc.add(&rho.matmul(&ldl).scale(C64::new(-0.5, 0.0)));
        }
    }
    Ok(acc)
}

/// One sampled trajectory: the measured meter levels, the product of Born
/// probabilities of that record, and the final normalized system state.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub outcomes: Vec<usize>,
    pub weight: f64,
    pub final_state: Array1<C64>,
}

fn check_normalized(psi0: &Array1<C64>, dim: usize) -> Result<()> {
    if psi0.len() != dim {
        return Err(Error::Dimension(format!(
            "state has length {} but the system dimension is {dim}",
            psi0.len()
        )));
    }
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "initial state norm² {norm} deviates from 1 by more than 1e-10"
        )));
    }
    Ok(())
}

/// Samples one trajectory of `steps` timesteps: each step evolves with the
/// dilation unitary, measures the meter by the Born rule, renormalizes, and
/// resets the meter to the configured initial level.
pub fn sample_trajectory(
    model: &TrajectoryModel,
    psi0: &Array1<C64>,
    steps: usize,
    rng_seed: u64,
) -> Result<TrajectoryRecord> {
    sample_trajectory_with_feedback(model, psi0, steps, rng_seed, |_, _| None)
}

/// Trajectory sampling with per-step feedback: after each measured outcome
/// the callback may return a replacement model for the following steps
/// (e.g. outcome-conditioned Hamiltonians). `None` keeps the current model.
pub fn sample_trajectory_with_feedback(
    model: &TrajectoryModel,
    psi0: &Array1<C64>,
    steps: usize,
    rng_seed: u64,
    mut feedback: impl FnMut(usize, &TrajectoryModel) -> Option<TrajectoryModel>,
) -> Result<TrajectoryRecord> {
    check_normalized(psi0, model.system_dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut current = model.clone();
    let mut kraus = kraus_set(&current)?;
    let mut psi = psi0.clone();
    let mut outcomes = Vec::with_capacity(steps);
    let mut weight = 1.0;
    for _ in 0..steps {
        let branches: Vec<Array1<C64>> = kraus.iter().map(|c| c.apply(&psi)).collect();
        let probs: Vec<f64> = branches
            .iter()
            .map(|v| v.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let total: f64 = probs.iter().sum();
        let mut x: f64 = rng.gen_range(0.0..total);
        let mut outcome = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            if x < p {
                outcome = k;
                break;
            }
            x -= p;
        }
        weight *= probs[outcome];
        let norm = probs[outcome].sqrt();
        psi = branches[outcome].mapv(|z| z / norm);
        outcomes.push(outcome);
        if let Some(next) = feedback(outcome, &current) {
            next.validate()?;
            if next.system_dim() != current.system_dim() {
                return Err(Error::Dimension(
                    "feedback changed the system dimension".into(),
                ));
            }
            current = next;
            kraus = kraus_set(&current)?;
        }
    }
    Ok(TrajectoryRecord {
        outcomes,
        weight,
        final_state: psi,
    })
}

/// Enumerates all measurement records of the given length with their Born
/// weights; branches lighter than 1e-14 are pruned. The surviving weights
/// sum to 1 within the pruning tolerance.
pub fn enumerate_records(
    model: &TrajectoryModel,
    psi0: &Array1<C64>,
    steps: usize,
) -> Result<Vec<TrajectoryRecord>> {
    check_normalized(psi0, model.system_dim())?;
    let kraus = kraus_set(model)?;
    let mut records = Vec::new();
    let mut stack: Vec<(Vec<usize>, f64, Array1<C64>)> =
        vec![(Vec::new(), 1.0, psi0.clone())];
    while let Some((outcomes, weight, psi)) = stack.pop() {
        if outcomes.len() == steps {
            records.push(TrajectoryRecord {
                outcomes,
                weight,
                final_state: psi,
            });
            continue;
        }
        for (k, c) in kraus.iter().enumerate() {
            let v = c.apply(&psi);
            let p: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            let w = weight * p;
            if w < 1e-14 {
                continue;
            }
            let norm = p.sqrt();
            let mut next = outcomes.clone();
            next.push(k);
            stack.push((next, w, v.mapv(|z| z / norm)));
        }
    }
    Ok(records)
}

/// Builds the locality-preserving model for a chain of qubit sites: one
/// meter qubit per jump, coupled as `L_j ⊗ σ⁺_j + L_j† ⊗ σ⁻_j`. The meter
/// levels of the resulting [`TrajectoryModel`] enumerate the meter-qubit
/// bitstrings; level 0 is the all-zeros reset state.
///
/// Each entry of `local_jumps` is `(site, L_site)` with `L_site` a 2×2
/// operator on that site; one meter qubit is assigned per entry, and two
/// entries naming the same site would share a meter, which is rejected.
pub fn build_local_coupling(
    h0: &OperatorMatrix,
    num_sites: usize,
    local_jumps: &[(usize, OperatorMatrix)],
    delta: f64,
) -> Result<TrajectoryModel> {
    let d_a = h0.dim();
    if d_a != 1 << num_sites {
        return Err(Error::Dimension(format!(
            "H0 has dimension {d_a}, expected 2^{num_sites}"
        )));
    }
    let mut seen = vec![false; num_sites];
    let mut embedded = Vec::with_capacity(local_jumps.len());
    for (site, l) in local_jumps {
        if *site >= num_sites {
            return Err(Error::InvalidArgument(format!(
                "jump site {site} outside the {num_sites}-site chain"
            )));
        }
        if l.dim() != 2 {
            return Err(Error::Dimension(format!(
                "local jump on site {site} must be 2×2, got {}",
                l.dim()
            )));
        }
        if seen[*site] {
            return Err(Error::WellFormedness(format!(
                "two jumps assigned to site {site}: overlapping meter assignment"
            )));
        }
        seen[*site] = true;
        embedded.push(embed(l, &[*site], num_sites)?);
    }
    let m = embedded.len();
    let d_b = 1 << m;
    // Meter-level pairs connected by σ⁺ on meter qubit j: level q (bit j
    // clear) → level p = q | bit. Meter qubit j is the j-th most significant
    // bit of the level index, matching the qubit convention elsewhere.
    let mut jumps = Vec::new();
    for (j, l_full) in embedded.iter().enumerate() {
        let bit = 1 << (m - 1 - j);
        for q in 0..d_b {
            if q & bit == 0 {
                jumps.push(Jump {
                    to: q | bit,
                    from: q,
                    op: l_full.clone(),
                });
            }
        }
    }
    TrajectoryModel::new(d_b, vec![h0.clone(); d_b], jumps, delta)
}

/// Which convergence error [`estimate_order`] fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderQuantity {
    /// `‖⟨j|e^{−iHδ}|j⟩ − e^{−iδ H_eff^j}‖` at the initial level.
    NoJumpError,
    /// `‖Φ_δ(ρ) − ρ − δ𝓛(ρ)‖_F` for a fixed generic test state.
    UnconditionalError,
}

/// Least-squares slope of `log(error)` versus `log(δ)` over the supplied
/// timesteps. Needs at least 4 values spanning ≥ 1.5 decades; errors at the
/// numerical floor (< 1e-13 at the smallest δ) raise a precision warning
/// instead of fitting noise.
pub fn estimate_order(
    model: &TrajectoryModel,
    quantity: OrderQuantity,
    deltas: &[f64],
) -> Result<f64> {
    if deltas.len() < 4 {
        return Err(Error::InvalidArgument(
            "order estimation needs at least 4 timestep values".into(),
        ));
    }
    let min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = deltas.iter().cloned().fold(0.0f64, f64::max);
    if !(min > 0.0) || max / min < 10f64.powf(1.5) {
        return Err(Error::InvalidArgument(
            "timestep values must be positive and span at least 1.5 decades".into(),
        ));
    }
    // Fixed generic test state for the unconditional variant.
    let d = model.system_dim();
    let rho_test = {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let g = Array2::from_shape_fn((d, d), |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let g = OperatorMatrix::new(g).unwrap();
        let p = g.matmul(&g.adjoint());
        let tr = p.trace().re;
        p.scale(C64::new(1.0 / tr, 0.0)).hermitize()
    };

    let mut points = Vec::with_capacity(deltas.len());
    let mut min_err = f64::INFINITY;
    for &delta in deltas {
        let mut m = model.clone();
        m.delta = delta;
        let err = match quantity {
            OrderQuantity::NoJumpError => {
                let c = step_kraus(&m, m.initial_level, m.initial_level)?;
                let h_eff = effective_hamiltonian(&m, m.initial_level)?;
                let ideal = matrix_exp(&h_eff.scale(C64::new(0.0, -delta)))?;
                c.sub(&ideal).operator_norm()
            }
            OrderQuantity::UnconditionalError => {
                let kraus = kraus_set(&m)?;
                let stepped = unconditional_step_raw(&kraus, &rho_test);
                let ideal = rho_test.add(&lindblad_generator(&m, &rho_test)?.scale(
                    C64::new(delta, 0.0),
                ));
                stepped.sub(&ideal).frobenius_norm()
            }
        };
        min_err = min_err.min(err);
        points.push((delta.ln(), err.max(1e-300).ln()));
    }
    if min_err < 1e-13 {
        return Err(Error::PrecisionFloor(format!(
            "convergence error {min_err:.3e} is at the numerical floor; \
             the slope fit would measure roundoff"
        )));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// A generic two-level-system model with a 3-level meter whose couplings
/// `L_01, L_02, L_12` are all active: the no-jump Trotter error carries the
/// full `O(δ^{3/2})` term. `restricted = true` drops the meter-excited
/// coupling `L_12`, which cancels the `δ^{3/2}` contribution and improves
/// the order to `O(δ²)`.
pub fn generic_meter_model(delta: f64, restricted: bool) -> TrajectoryModel {
    let h0 = OperatorMatrix::from_real_rows(&[vec![0.4, 0.3], vec![0.3, -0.2]]).unwrap();
    let h1 = OperatorMatrix::from_real_rows(&[vec![0.1, 0.0], vec![0.0, -0.1]]).unwrap();
    let h2 = OperatorMatrix::from_real_rows(&[vec![-0.3, 0.1], vec![0.1, 0.2]]).unwrap();
    let l10 = OperatorMatrix::from_rows(&[
        vec![C64::new(0.0, 0.0), C64::new(0.9, 0.0)],
        vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
    ])
    .unwrap();
    let l20 = OperatorMatrix::from_rows(&[
        vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        vec![C64::new(0.7, 0.2), C64::new(0.0, 0.0)],
    ])
    .unwrap();
    let mut jumps = vec![
        Jump { to: 1, from: 0, op: l10 },
        Jump { to: 2, from: 0, op: l20 },
    ];
    if !restricted {
        let l21 = OperatorMatrix::from_rows(&[
            vec![C64::new(0.5, 0.0), C64::new(0.3, -0.1)],
            vec![C64::new(0.3, 0.1), C64::new(-0.4, 0.0)],
        ])
        .unwrap();
        jumps.push(Jump { to: 2, from: 1, op: l21 });
    }
    TrajectoryModel::new(3, vec![h0, h1, h2], jumps, delta).unwrap()
}

/// Single-qubit amplitude damping at rate `κ`: `H_0 = 0`, `L = √κ σ⁻`,
/// two-level meter.
pub fn amplitude_damping_model(kappa: f64, delta: f64) -> TrajectoryModel {
    let h0 = OperatorMatrix::zeros(2);
    let sigma_minus = OperatorMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let l = sigma_minus.scale(C64::new(kappa.sqrt(), 0.0));
    TrajectoryModel::new(2, vec![h0.clone(), h0], vec![Jump { to: 1, from: 0, op: l }], delta)
        .unwrap()
}
