//! Dense statevector and density-matrix simulation of circuits that mix
//! unitary gates, renormalized non-unitary gates, projective measurement,
//! and postselection. This module is the brute-force oracle the gadget,
//! dilation, and stabilizer modules are all checked against.
//!
//! Conventions, used everywhere including serialization:
//! - qubit ordering: target index 0 is the most significant bit of the
//!   amplitude index;
//! - global phase: after every normalized step the first nonzero amplitude
//!   is made real positive.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{OperatorMatrix, ENTRY_ZERO_TOL};
use crate::nh::split_parts;

type C64 = Complex64;

/// A normalized pure state of `num_qubits` qubits.
#[derive(Debug, Clone)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Array1<C64>,
}

impl PureState {
    pub fn new(num_qubits: usize, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::Dimension(format!(
                "expected {} amplitudes for {num_qubits} qubits, got {}",
                1 << num_qubits,
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "state norm {norm} deviates from 1 by more than 1e-10"
            )));
        }
        Ok(Self { num_qubits, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = Array1::zeros(1 << num_qubits);
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { num_qubits, amplitudes }
    }

    /// Normalizes an unnormalized vector and applies the phase convention.
    pub fn from_unnormalized(num_qubits: usize, raw: Array1<C64>) -> Result<Self> {
        let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-150 {
            return Err(Error::WellFormedness(
                "renormalization of a zero-norm branch".into(),
            ));
        }
        let mut amplitudes = raw.mapv(|z| z / norm);
        fix_phase(&mut amplitudes);
        Ok(Self { num_qubits, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// The projector `|ψ⟩⟨ψ|` as a density state.
    pub fn density(&self) -> DensityState {
        let n = self.amplitudes.len();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityState {
            num_qubits: self.num_qubits,
            matrix: OperatorMatrix::new(m).expect("finite projector"),
        }
    }

    /// Probability that qubit `q` reads `bit`.
    pub fn bit_probability(&self, q: usize, bit: u8) -> f64 {
        let mask = 1usize << (self.num_qubits - 1 - q);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| ((i & mask != 0) as u8) == bit)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }
}

/// Phase convention: first amplitude with modulus above the zero threshold
/// is made real positive.
fn fix_phase(amplitudes: &mut Array1<C64>) {
    if let Some(z) = amplitudes.iter().find(|z| z.norm() > ENTRY_ZERO_TOL) {
        let phase = z / z.norm();
        let correction = phase.conj();
        amplitudes.mapv_inplace(|a| a * correction);
    }
}

/// A unit-trace density matrix of `num_qubits` qubits.
#[derive(Debug, Clone)]
pub struct DensityState {
    num_qubits: usize,
    matrix: OperatorMatrix,
}

impl DensityState {
    pub fn new(num_qubits: usize, matrix: OperatorMatrix) -> Result<Self> {
        if matrix.dim() != 1 << num_qubits {
            return Err(Error::Dimension(format!(
                "expected dim {} for {num_qubits} qubits, got {}",
                1 << num_qubits,
                matrix.dim()
            )));
        }
        if !matrix.is_hermitian(1e-10) {
            return Err(Error::InvalidArgument("density matrix not Hermitian".into()));
        }
        if (matrix.trace().re - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "density trace {} is not 1",
                matrix.trace().re
            )));
        }
        let (vals, _) = matrix.hermitize().eigh()?;
        if vals[0] < -1e-9 {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: vals[0] });
        }
        Ok(Self { num_qubits, matrix })
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1usize << num_qubits;
        Self {
            num_qubits,
            matrix: OperatorMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0)),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }
}

/// One program step. Serialized with the tag field `type` taking exactly
/// `unitary`, `nonunitary`, `measure`, or `postselect`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CircuitStep {
    Unitary {
        op: OperatorMatrix,
        targets: Vec<usize>,
    },
    Nonunitary {
        op: OperatorMatrix,
        targets: Vec<usize>,
    },
    Measure {
        targets: Vec<usize>,
    },
    Postselect {
        targets: Vec<usize>,
        outcome: Vec<u8>,
    },
}

/// An ordered list of steps over a fixed register.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitProgram {
    pub num_qubits: usize,
    pub steps: Vec<CircuitStep>,
}

impl CircuitProgram {
    pub fn new(num_qubits: usize, steps: Vec<CircuitStep>) -> Result<Self> {
        let p = Self { num_qubits, steps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (idx, step) in self.steps.iter().enumerate() {
            let (targets, op_dim, outcome_len) = match step {
                CircuitStep::Unitary { op, targets } | CircuitStep::Nonunitary { op, targets } => {
                    (targets, Some(op.dim()), None)
                }
                CircuitStep::Measure { targets } => (targets, None, None),
                CircuitStep::Postselect { targets, outcome } => {
                    (targets, None, Some(outcome.len()))
                }
            };
            let mut seen = vec![false; self.num_qubits];
            for &t in targets {
                if t >= self.num_qubits {
                    return Err(Error::WellFormedness(format!(
                        "step {idx}: target {t} out of range for {} qubits",
                        self.num_qubits
                    )));
                }
                if seen[t] {
                    return Err(Error::WellFormedness(format!(
                        "step {idx}: duplicate target {t}"
                    )));
                }
                seen[t] = true;
            }
            if let Some(d) = op_dim {
                if d != 1 << targets.len() {
                    return Err(Error::WellFormedness(format!(
                        "step {idx}: operator dim {d} does not match {} targets",
                        targets.len()
                    )));
                }
            }
            if let Some(l) = outcome_len {
                if l != targets.len() {
                    return Err(Error::WellFormedness(format!(
                        "step {idx}: outcome length {l} does not match {} targets",
                        targets.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Applies a `2^k`-dim operator to the target qubits of a raw amplitude
/// vector, without normalization.
pub(crate) fn apply_op_raw(
    op: &OperatorMatrix,
    targets: &[usize],
    psi: &Array1<C64>,
    num_qubits: usize,
) -> Array1<C64> {
    let k = targets.len();
    debug_assert_eq!(op.dim(), 1 << k);
    let bit_of = |q: usize| num_qubits - 1 - q;
    let masks: Vec<usize> = targets.iter().map(|&t| 1usize << bit_of(t)).collect();
    let len = psi.len();
    let mut out = Array1::zeros(len);
    for idx in 0..len {
        let mut sub_row = 0usize;
        for (pos, &mask) in masks.iter().enumerate() {
            if idx & mask != 0 {
                sub_row |= 1 << (k - 1 - pos);
            }
        }
        let mut acc = C64::new(0.0, 0.0);
        for sub_col in 0..(1usize << k) {
            let c = op.entry(sub_row, sub_col);
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let mut src = idx;
            for (pos, &mask) in masks.iter().enumerate() {
                src &= !mask;
                if sub_col >> (k - 1 - pos) & 1 == 1 {
                    src |= mask;
                }
            }
            acc += c * psi[src];
        }
        out[idx] = acc;
    }
    out
}

/// Applies an operator on targets and renormalizes; invariant under
/// rescaling of `op`.
pub fn apply_normalized(
    state: &PureState,
    op: &OperatorMatrix,
    targets: &[usize],
) -> Result<PureState> {
    let raw = apply_op_raw(op, targets, &state.amplitudes, state.num_qubits);
    PureState::from_unnormalized(state.num_qubits, raw)
}

/// `M ρ M†` on targets, without normalization.
fn conjugate_density_raw(
    op: &OperatorMatrix,
    targets: &[usize],
    rho: &OperatorMatrix,
    num_qubits: usize,
) -> OperatorMatrix {
    let n = rho.dim();
    // X = M ρ: act on columns; then M ρ M† = (M X†)†.
    let mut x = Array2::zeros((n, n));
    for j in 0..n {
        let col = rho.column(j);
        let new = apply_op_raw(op, targets, &col, num_qubits);
        for i in 0..n {
            x[(i, j)] = new[i];
        }
    }
    let mut y = Array2::zeros((n, n));
    for j in 0..n {
        let col = Array1::from_iter((0..n).map(|i| x[(j, i)].conj()));
        let new = apply_op_raw(op, targets, &col, num_qubits);
        for i in 0..n {
            y[(i, j)] = new[i];
        }
    }
    // result = Y†
    let mut r = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            r[(i, j)] = y[(j, i)].conj();
        }
    }
    OperatorMatrix::new(r).expect("finite density conjugation")
}

/// Trace-normalized action on a mixed state; also returns the
/// pre-normalization trace (the Born weight of the branch).
pub fn apply_normalized_density(
    rho: &DensityState,
    op: &OperatorMatrix,
    targets: &[usize],
) -> Result<(DensityState, f64)> {
    let raw = conjugate_density_raw(op, targets, rho.matrix(), rho.num_qubits);
    let weight = raw.trace().re;
    if weight <= 1e-300 {
        return Err(Error::WellFormedness(
            "trace-normalization of a zero-weight branch".into(),
        ));
    }
    let matrix = raw.scale(C64::new(1.0 / weight, 0.0)).hermitize();
    Ok((
        DensityState { num_qubits: rho.num_qubits, matrix },
        weight,
    ))
}

/// Projects qubit `q` onto `bit`; returns the outcome probability and the
/// unnormalized projected vector.
fn project_bit(
    psi: &Array1<C64>,
    num_qubits: usize,
    q: usize,
    bit: u8,
) -> (f64, Array1<C64>) {
    let mask = 1usize << (num_qubits - 1 - q);
    let mut out = psi.clone();
    let mut prob = 0.0;
    for (i, z) in out.iter_mut().enumerate() {
        if ((i & mask != 0) as u8) == bit {
            prob += z.norm_sqr();
        } else {
            *z = C64::new(0.0, 0.0);
        }
    }
    (prob, out)
}

/// Result of running a program: the conditional final state, the list of
/// measured/postselected bits in program order, and the product of their
/// Born weights.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: PureState,
    pub record: Vec<u8>,
    pub record_probability: f64,
}

/// Runs a program, sampling measurement outcomes with the seeded generator.
/// Deterministic given `rng_seed`.
pub fn run(program: &CircuitProgram, initial: &PureState, rng_seed: u64) -> Result<RunOutcome> {
    program.validate()?;
    if initial.num_qubits != program.num_qubits {
        return Err(Error::Dimension("initial state size mismatch".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = program.num_qubits;
    let mut psi = initial.amplitudes.clone();
    let mut record = Vec::new();
    let mut record_probability = 1.0;
    for step in &program.steps {
        match step {
            CircuitStep::Unitary { op, targets } | CircuitStep::Nonunitary { op, targets } => {
                let raw = apply_op_raw(op, targets, &psi, n);
                psi = PureState::from_unnormalized(n, raw)?.amplitudes;
            }
            CircuitStep::Measure { targets } => {
                for &q in targets {
                    let (p1, _) = project_bit(&psi, n, q, 1);
                    let bit = if rng.gen::<f64>() < p1 { 1 } else { 0 };
                    let (p, projected) = project_bit(&psi, n, q, bit);
                    psi = PureState::from_unnormalized(n, projected)?.amplitudes;
                    record.push(bit);
                    record_probability *= p;
                }
            }
            CircuitStep::Postselect { targets, outcome } => {
                for (&q, &bit) in targets.iter().zip(outcome) {
                    let (p, projected) = project_bit(&psi, n, q, bit);
                    if p <= 1e-300 {
                        return Err(Error::WellFormedness(format!(
                            "postselected outcome {bit} on qubit {q} has probability 0"
                        )));
                    }
                    psi = PureState::from_unnormalized(n, projected)?.amplitudes;
                    record.push(bit);
                    record_probability *= p;
                }
            }
        }
    }
    Ok(RunOutcome {
        state: PureState { num_qubits: n, amplitudes: psi },
        record,
        record_probability,
    })
}

/// All measurement branches of a program: `(record, weight, final state)`,
/// with zero-probability branches dropped.
pub fn enumerate_branches(
    program: &CircuitProgram,
    initial: &PureState,
) -> Result<Vec<(Vec<u8>, f64, PureState)>> {
    program.validate()?;
    let n = program.num_qubits;
    // Work queue of partial branches.
    let mut branches = vec![(initial.amplitudes.clone(), Vec::new(), 1.0f64)];
    for step in &program.steps {
        match step {
            CircuitStep::Unitary { op, targets } | CircuitStep::Nonunitary { op, targets } => {
                for (psi, _, _) in branches.iter_mut() {
                    let raw = apply_op_raw(op, targets, psi, n);
                    *psi = PureState::from_unnormalized(n, raw)?.amplitudes;
                }
            }
            CircuitStep::Measure { targets } => {
                for &q in targets {
                    let mut next = Vec::with_capacity(branches.len() * 2);
                    for (psi, rec, w) in branches.drain(..) {
                        for bit in [0u8, 1u8] {
                            let (p, projected) = project_bit(&psi, n, q, bit);
                            if p <= 1e-15 {
                                continue;
                            }
                            let normalized =
                                PureState::from_unnormalized(n, projected)?.amplitudes;
                            let mut rec2 = rec.clone();
                            rec2.push(bit);
                            next.push((normalized, rec2, w * p));
                        }
                    }
                    branches = next;
                }
            }
            CircuitStep::Postselect { targets, outcome } => {
                for (&q, &bit) in targets.iter().zip(outcome) {
                    let mut next = Vec::with_capacity(branches.len());
                    for (psi, rec, w) in branches.drain(..) {
                        let (p, projected) = project_bit(&psi, n, q, bit);
                        if p <= 1e-15 {
                            continue;
                        }
                        let normalized = PureState::from_unnormalized(n, projected)?.amplitudes;
                        let mut rec2 = rec.clone();
                        rec2.push(bit);
                        next.push((normalized, rec2, w * p));
                    }
                    branches = next;
                }
            }
        }
    }
    Ok(branches
        .into_iter()
        .map(|(psi, rec, w)| (rec, w, PureState { num_qubits: n, amplitudes: psi }))
        .collect())
}

/// Exact conditional probability `P(query | given)` over record positions,
/// computed by summing branch weights. `query` and `given` are lists of
/// `(record_index, bit)` constraints.
pub fn conditional_probability(
    program: &CircuitProgram,
    initial: &PureState,
    query: &[(usize, u8)],
    given: &[(usize, u8)],
) -> Result<f64> {
    let branches = enumerate_branches(program, initial)?;
    let matches = |rec: &[u8], constraints: &[(usize, u8)]| {
        constraints
            .iter()
            .all(|&(i, b)| rec.get(i).copied() == Some(b))
    };
    let mut p_given = 0.0;
    let mut p_both = 0.0;
    for (rec, w, _) in &branches {
        if matches(rec, given) {
            p_given += w;
            if matches(rec, query) {
                p_both += w;
            }
        }
    }
    if p_given <= 0.0 {
        return Err(Error::WellFormedness(
            "conditioning event has probability 0".into(),
        ));
    }
    Ok(p_both / p_given)
}

/// Integrates the normalized quadratic equation of motion for `ρ_t` under a
/// non-Hermitian generator, via classic 4-stage steps on the unnormalized
/// pair with per-step renormalization.
pub fn integrate_nonlinear_eom(
    h: &OperatorMatrix,
    rho0: &DensityState,
    t: f64,
    dt: f64,
) -> Result<DensityState> {
    if dt <= 0.0 || dt > t {
        return Err(Error::InvalidArgument("need 0 < dt ≤ t".into()));
    }
    if h.operator_norm() * dt > 0.1 + 1e-12 {
        return Err(Error::InvalidArgument(
            "‖H‖·dt exceeds 0.1; reduce the timestep".into(),
        ));
    }
    let hd = h.adjoint();
    let deriv = |rho: &OperatorMatrix| -> OperatorMatrix {
        // dρ̃/dt = −i(H ρ̃ − ρ̃ H†)
        h.matmul(rho).sub(&rho.matmul(&hd)).scale(C64::new(0.0, -1.0))
    };
    let steps = (t / dt).round() as usize;
    let dt = t / steps.max(1) as f64;
    let mut rho = rho0.matrix().clone();
    for _ in 0..steps {
        let k1 = deriv(&rho);
        let k2 = deriv(&rho.add(&k1.scale(C64::new(dt / 2.0, 0.0))));
        let k3 = deriv(&rho.add(&k2.scale(C64::new(dt / 2.0, 0.0))));
        let k4 = deriv(&rho.add(&k3.scale(C64::new(dt, 0.0))));
        let incr = k1
            .add(&k2.scale(C64::new(2.0, 0.0)))
            .add(&k3.scale(C64::new(2.0, 0.0)))
            .add(&k4)
            .scale(C64::new(dt / 6.0, 0.0));
        rho = rho.add(&incr);
        let tr = rho.trace();
        if !(tr.re > 1e-300) || tr.im.abs() > 1e-6 * tr.re.max(1e-300) {
            return Err(Error::Instability(format!(
                "trace drifted to {tr}; reduce dt"
            )));
        }
        rho = rho.scale(C64::new(1.0 / tr.re, 0.0)).hermitize();
    }
    Ok(DensityState { num_qubits: rho0.num_qubits, matrix: rho })
}

/// `d/dt Tr[ρ_t]` at `t = 0`: `−2 Tr[Γ ρ]` with `Γ` the anti-Hermitian
/// coefficient of `H`.
pub fn trace_decay_rate(h: &OperatorMatrix, rho: &OperatorMatrix) -> Result<f64> {
    let parts = split_parts(h)?;
    Ok(-2.0 * parts.gamma.matmul(rho).trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expm::matrix_exp;
    use approx::assert_abs_diff_eq;
    
    use rand_chacha::ChaCha8Rng;

    fn hadamard() -> OperatorMatrix {
        let s = 1.0 / 2f64.sqrt();
        OperatorMatrix::from_real_rows(&[vec![s, s], vec![s, -s]]).unwrap()
    }

    fn cnot() -> OperatorMatrix {
        OperatorMatrix::from_real_rows(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    fn exp_sz(t: f64) -> OperatorMatrix {
        OperatorMatrix::from_real_rows(&[vec![t.exp(), 0.0], vec![0.0, (-t).exp()]]).unwrap()
    }

    fn plus_state() -> PureState {
        let s = 1.0 / 2f64.sqrt();
        PureState::new(1, Array1::from_vec(vec![C64::new(s, 0.0), C64::new(s, 0.0)])).unwrap()
    }

    #[test]
    fn normalized_apply_examples() {
        // e^{σz}, |+⟩: amplitudes ∝ (e, 1/e).
        let out = apply_normalized(&plus_state(), &exp_sz(1.0), &[0]).unwrap();
        let ratio = out.amplitudes()[0] / out.amplitudes()[1];
        assert_abs_diff_eq!(ratio.re, (2.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(ratio.im, 0.0, epsilon = 1e-12);

        // Unitary op preserves norm (applies trivially).
        let out = apply_normalized(&plus_state(), &hadamard(), &[0]).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0].norm(), 1.0, epsilon = 1e-12);

        // Zero branch.
        let zero_proj =
            OperatorMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let one = PureState::basis(1, 1);
        assert!(matches!(
            apply_normalized(&one, &zero_proj, &[0]),
            Err(Error::WellFormedness(_))
        ));
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut raw = Array1::zeros(4);
        for z in raw.iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let state = PureState::from_unnormalized(2, raw).unwrap();
        let op = exp_sz(0.7);
        let base = apply_normalized(&state, &op, &[1]).unwrap();
        for c in [
            C64::new(2.0, 0.0),
            C64::new(0.0, 1.0),
            C64::from_polar(0.5, std::f64::consts::PI / 3.0),
        ] {
            let scaled = apply_normalized(&state, &op.scale(c), &[1]).unwrap();
            for (a, b) in base.amplitudes().iter().zip(scaled.amplitudes().iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn density_weights() {
        let mixed = DensityState::maximally_mixed(1);
        let zero_proj =
            OperatorMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let (out, w) = apply_normalized_density(&mixed, &zero_proj, &[0]).unwrap();
        assert_abs_diff_eq!(w, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.matrix().entry(0, 0).re, 1.0, epsilon = 1e-12);

        let (_, w) = apply_normalized_density(&mixed, &exp_sz(1.0), &[0]).unwrap();
        let expect = ((2.0f64).exp() + (-2.0f64).exp()) / 2.0;
        assert_abs_diff_eq!(w, expect, epsilon = 1e-10);

        // Unitary → weight 1.
        let (_, w) = apply_normalized_density(&mixed, &hadamard(), &[0]).unwrap();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn run_examples() {
        // Empty program.
        let p = CircuitProgram::new(1, vec![]).unwrap();
        let out = run(&p, &PureState::basis(1, 0), 1).unwrap();
        assert_abs_diff_eq!(out.record_probability, 1.0);
        assert!(out.record.is_empty());

        // H then postselect |1⟩ → probability 1/2.
        let p = CircuitProgram::new(
            1,
            vec![
                CircuitStep::Unitary { op: hadamard(), targets: vec![0] },
                CircuitStep::Postselect { targets: vec![0], outcome: vec![1] },
            ],
        )
        .unwrap();
        let out = run(&p, &PureState::basis(1, 0), 1).unwrap();
        assert_abs_diff_eq!(out.record_probability, 0.5, epsilon = 1e-12);
        assert_eq!(out.record, vec![1]);

        // Postselecting a probability-0 outcome fails.
        let p = CircuitProgram::new(
            1,
            vec![CircuitStep::Postselect { targets: vec![0], outcome: vec![1] }],
        )
        .unwrap();
        assert!(matches!(
            run(&p, &PureState::basis(1, 0), 1),
            Err(Error::WellFormedness(_))
        ));
    }

    #[test]
    fn branch_weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut raw = Array1::zeros(8);
        for z in raw.iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let state = PureState::from_unnormalized(3, raw).unwrap();
        let p = CircuitProgram::new(
            3,
            vec![
                CircuitStep::Unitary { op: hadamard(), targets: vec![1] },
                CircuitStep::Measure { targets: vec![0, 1, 2] },
            ],
        )
        .unwrap();
        let branches = enumerate_branches(&p, &state).unwrap();
        let total: f64 = branches.iter().map(|(_, w, _)| w).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn conditional_bell_pair() {
        let p = CircuitProgram::new(
            2,
            vec![
                CircuitStep::Unitary { op: hadamard(), targets: vec![0] },
                CircuitStep::Unitary { op: cnot(), targets: vec![0, 1] },
                CircuitStep::Measure { targets: vec![0, 1] },
            ],
        )
        .unwrap();
        let initial = PureState::basis(2, 0);
        // Condition first measured bit = 0, query second = 0 → 1.
        let p00 = conditional_probability(&p, &initial, &[(1, 0)], &[(0, 0)]).unwrap();
        assert_abs_diff_eq!(p00, 1.0, epsilon = 1e-12);
        // Unconditioned query equals the marginal 1/2.
        let marg = conditional_probability(&p, &initial, &[(1, 0)], &[]).unwrap();
        assert_abs_diff_eq!(marg, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pure_density_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut raw = Array1::zeros(4);
        for z in raw.iter_mut() {
            *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let state = PureState::from_unnormalized(2, raw).unwrap();
        let op = exp_sz(0.4);
        let pure_out = apply_normalized(&state, &op, &[0]).unwrap();
        let (dens_out, w) = apply_normalized_density(&state.density(), &op, &[0]).unwrap();
        let proj = pure_out.density();
        assert!(dens_out.matrix().sub(proj.matrix()).operator_norm() < 1e-10);
        // Weight equals the squared norm of the unnormalized pure branch.
        let raw = apply_op_raw(&op, &[0], state.amplitudes(), 2);
        let norm_sq: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(w, norm_sq, epsilon = 1e-12);
    }

    #[test]
    fn integrator_matches_exact_normalized_evolution() {
        // H = iσz: normalized evolution converges to |0⟩⟨0|.
        let h = OperatorMatrix::from_rows(&[
            vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
        ])
        .unwrap();
        let rho0 = plus_state().density();
        let t = 3.0;
        let out = integrate_nonlinear_eom(&h, &rho0, t, 0.01).unwrap();
        // Exact: e^{-iHt} ρ e^{iH†t} / trace.
        let u = matrix_exp(&h.scale(C64::new(0.0, -t))).unwrap();
        let raw = u.matmul(rho0.matrix()).matmul(&u.adjoint());
        let exact = raw.scale(C64::new(1.0 / raw.trace().re, 0.0));
        assert!(out.matrix().sub(&exact).operator_norm() < 1e-7);
        assert!(out.matrix().entry(0, 0).re > 0.99);

        // Hermitian H matches unitary evolution.
        let hh = OperatorMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, -1.0]]).unwrap();
        let out = integrate_nonlinear_eom(&hh, &rho0, 1.0, 0.01).unwrap();
        let u = matrix_exp(&hh.scale(C64::new(0.0, -1.0))).unwrap();
        let exact = u.matmul(rho0.matrix()).matmul(&u.adjoint());
        assert!(out.matrix().sub(&exact).operator_norm() < 1e-7);
    }

    #[test]
    fn imaginary_shift_leaves_trajectory_unchanged() {
        let h = OperatorMatrix::from_real_rows(&[vec![0.0, 2.0], vec![8.0, 0.0]]).unwrap();
        let shifted = h.add(&OperatorMatrix::identity(2).scale(C64::new(0.0, 0.9)));
        let rho0 = plus_state().density();
        let a = integrate_nonlinear_eom(&h, &rho0, 1.0, 0.001).unwrap();
        let b = integrate_nonlinear_eom(&shifted, &rho0, 1.0, 0.001).unwrap();
        // Difference is pure integrator truncation, O(dt⁴).
        assert!(a.matrix().sub(b.matrix()).operator_norm() < 1e-9);
    }

    #[test]
    fn trace_decay_examples() {
        let herm = OperatorMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, -1.0]]).unwrap();
        let rho = plus_state().density();
        assert_abs_diff_eq!(trace_decay_rate(&herm, rho.matrix()).unwrap(), 0.0, epsilon = 1e-14);

        // Γ = |1⟩⟨1|, ρ = |+⟩⟨+| → −1.
        let h = OperatorMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
        ])
        .unwrap();
        assert_abs_diff_eq!(trace_decay_rate(&h, rho.matrix()).unwrap(), -1.0, epsilon = 1e-14);

        // Finite-difference agreement.
        let h = OperatorMatrix::from_real_rows(&[vec![0.0, 2.0], vec![8.0, 0.0]]).unwrap();
        let rate = trace_decay_rate(&h, rho.matrix()).unwrap();
        let dt = 1e-6;
        let u = matrix_exp(&h.scale(C64::new(0.0, -dt))).unwrap();
        let tr1 = u.matmul(rho.matrix()).matmul(&u.adjoint()).trace().re;
        let fd = (tr1 - 1.0) / dt;
        assert_abs_diff_eq!(rate, fd, epsilon = 1e-4);
    }

    #[test]
    fn gamma_psd_implies_nonpositive_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            // H = H0 − iΓ with Γ = A†A ⪰ 0.
            let mut a = Array2::zeros((2, 2));
            for z in a.iter_mut() {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let a = OperatorMatrix::new(a).unwrap();
            let gamma = a.adjoint().matmul(&a);
            let mut h0 = Array2::zeros((2, 2));
            for z in h0.iter_mut() {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let h0 = OperatorMatrix::new(h0).unwrap().hermitize();
            let h = h0.sub(&gamma.scale(C64::new(0.0, 1.0)));
            let mut raw = Array1::zeros(2);
            for z in raw.iter_mut() {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let rho = PureState::from_unnormalized(1, raw).unwrap().density();
            assert!(trace_decay_rate(&h, rho.matrix()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn program_json_roundtrip() {
        let p = CircuitProgram::new(
            2,
            vec![
                CircuitStep::Unitary { op: hadamard(), targets: vec![0] },
                CircuitStep::Nonunitary { op: exp_sz(0.3), targets: vec![1] },
                CircuitStep::Measure { targets: vec![0] },
                CircuitStep::Postselect { targets: vec![1], outcome: vec![0] },
            ],
        )
        .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"unitary\""));
        assert!(s.contains("\"nonunitary\""));
        assert!(s.contains("\"measure\""));
        assert!(s.contains("\"postselect\""));
        let back: CircuitProgram = serde_json::from_str(&s).unwrap();
        back.validate().unwrap();
        assert_eq!(back.steps.len(), 4);
        // Identical behavior after the round trip.
        let initial = PureState::basis(2, 0);
        let a = run(&p, &initial, 7).unwrap();
        let b = run(&back, &initial, 7).unwrap();
        assert_eq!(a.record, b.record);
        assert_abs_diff_eq!(a.record_probability, b.record_probability);
    }

    #[test]
    fn program_validation_errors() {
        assert!(CircuitProgram::new(
            1,
            vec![CircuitStep::Measure { targets: vec![1] }]
        )
        .is_err());
        assert!(CircuitProgram::new(
            2,
            vec![CircuitStep::Unitary { op: hadamard(), targets: vec![0, 1] }]
        )
        .is_err());
        assert!(CircuitProgram::new(
            2,
            vec![CircuitStep::Measure { targets: vec![0, 0] }]
        )
        .is_err());
    }
}
