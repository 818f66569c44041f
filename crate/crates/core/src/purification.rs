//! Purification: dilating non-unitary operators and circuits into unitary
//! evolution on system ⊗ meter with postselection.
//!
//! The workhorse is [`polar_dilation`]: rescale the operator into a
//! contraction `K = αU`, polar-factor `K = QR`, and extend by one meter
//! qubit with the rotation `U_R = [[R, √(I−R²)],[√(I−R²), −R]]` so that the
//! meter-conditioned block `⟨0|·|0⟩` reproduces `αU`. [`dilate_circuit`]
//! applies this step-by-step to whole programs, [`two_meter_pt_dilation`]
//! and [`product_dilation`] build the structured similarity-transform
//! gadgets, and [`matchgate_induced`] gives the postselected single-qubit
//! map of a two-qubit matchgate.

use ndarray::Array2;

use crate::circuit::{CircuitProgram, CircuitStep};
use crate::error::{Error, Result};
use crate::matrix::{polar_decompose, OperatorMatrix, C64};

/// A unitary on system ⊗ meter whose meter-conditioned block equals a target
/// operator up to a positive scalar.
///
/// The meter qubits occupy the most significant bits of the combined index,
/// so `⟨outcome| unitary |init⟩` is the system-sized block at row offset
/// `outcome · dim_system` and column offset `init · dim_system`.
#[derive(Debug, Clone)]
pub struct DilationGadget {
    /// The dilated unitary on system ⊗ meter.
    pub unitary: OperatorMatrix,
    /// Number of meter qubits.
    pub meter_qubits: usize,
    /// Meter preparation bitstring.
    pub meter_init: Vec<u8>,
    /// Meter postselection bitstring.
    pub postselect_outcome: Vec<u8>,
    /// Positive scalar absorbed by the rescaling: the conditioned block
    /// equals `scalar · source`.
    pub scalar: f64,
}

fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize))
}

/// The meter-conditioned effective operator `C_s = ⟨outcome|U|init⟩`:
/// `C_s ρ C_s†` is the unnormalized conditioned map.
pub fn effective_operator(g: &DilationGadget) -> OperatorMatrix {
    let full = g.unitary.dim();
    let sys = full >> g.meter_qubits;
    let row0 = bits_to_index(&g.postselect_outcome) * sys;
    let col0 = bits_to_index(&g.meter_init) * sys;
    let mut c = Array2::zeros((sys, sys));
    for i in 0..sys {
        for j in 0..sys {
            c[(i, j)] = g.unitary.entry(row0 + i, col0 + j);
        }
    }
    OperatorMatrix::new(c).expect("finite block of a finite unitary")
}

/// `√(I − R²)` for a Hermitian contraction `R` (eigenvalues clamped into
/// `[0, 1]` against roundoff).
fn complement_root(r: &OperatorMatrix) -> Result<OperatorMatrix> {
    let (vals, vecs) = r.eigh()?;
    let n = r.dim();
    let mut d = Array2::zeros((n, n));
    for (j, &v) in vals.iter().enumerate() {
        let v = v.clamp(0.0, 1.0);
        // The square root turns an O(1e-15) defect of a saturated eigenvalue
        // into an O(1e-7) off-diagonal block; snap eigenvalues at the top of
        // the range so unitary inputs dilate to exactly block-diagonal form.
        let s = if v > 1.0 - 1e-12 {
            0.0
        } else {
            (1.0 - v * v).max(0.0).sqrt()
        };
        d[(j, j)] = C64::new(s, 0.0);
    }
    Ok(vecs
        .matmul(&OperatorMatrix::new(d)?)
        .matmul(&vecs.adjoint())
        .hermitize())
}

/// Assembles the one-meter rotation with conditioned block `⟨0|·|0⟩ = Q·R`:
/// `(I ⊗ Q)·U_R` with `U_R = [[R, √(I−R²)],[√(I−R²), −R]]` over the meter.
fn one_meter_unitary(q: &OperatorMatrix, r: &OperatorMatrix) -> Result<OperatorMatrix> {
    let s = complement_root(r)?;
    let n = r.dim();
    let qr = q.matmul(r);
    let qs = q.matmul(&s);
    let mut m = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = qr.entry(i, j);
            m[(i, n + j)] = qs.entry(i, j);
            m[(n + i, j)] = qs.entry(i, j);
            m[(n + i, n + j)] = -qr.entry(i, j);
        }
    }
    let u = OperatorMatrix::new(m)?;
    if !u.is_unitary(1e-10) {
        return Err(Error::Backend(
            "dilated rotation failed the unitarity check".into(),
        ));
    }
    Ok(u)
}

/// Dilates a nonzero operator into a unitary on system plus one meter qubit.
///
/// With `α = 1/λ_1` (inverse largest singular value) the rescaled `K = αU`
/// is a contraction; `K = QR` gives the gadget unitary `(I⊗Q)·U_R`, whose
/// `⟨0|·|0⟩` block is `QR = αU`. Postselecting the meter on `|0⟩` therefore
/// implements `U` up to the scalar `α`; the success probability on `|ψ⟩` is
/// `‖K|ψ⟩‖²`.
pub fn polar_dilation(u: &OperatorMatrix) -> Result<DilationGadget> {
    let lambda1 = u.operator_norm();
    if lambda1 <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let alpha = 1.0 / lambda1;
    let k = u.scale(C64::new(alpha, 0.0));
    let pf = polar_decompose(&k)?;
    let unitary = one_meter_unitary(&pf.q, &pf.r)?;
    Ok(DilationGadget {
        unitary,
        meter_qubits: 1,
        meter_init: vec![0],
        postselect_outcome: vec![0],
        scalar: alpha,
    })
}

/// Replaces every non-unitary step of a program by a polar dilation on a
/// fresh meter qubit (appended at the high end of the register) followed by
/// a postselection of that meter on `|0⟩`.
///
/// The output program contains only unitary, measurement, and postselection
/// steps; its conditioned output state equals the direct normalized
/// simulation of the input because the rescaling factors cancel under the
/// per-step renormalization.
pub fn dilate_circuit(program: &CircuitProgram) -> Result<CircuitProgram> {
    program.validate()?;
    let n = program.num_qubits;
    let meters = program
        .steps
        .iter()
        .filter(|s| matches!(s, CircuitStep::Nonunitary { .. }))
        .count();
    let mut steps = Vec::with_capacity(program.steps.len() + 2 * meters);
    let mut next_meter = n;
    for step in &program.steps {
        match step {
            CircuitStep::Nonunitary { op, targets } => {
                let lambda1 = op.operator_norm();
                if lambda1 <= 0.0 {
                    return Err(Error::ZeroMatrix);
                }
                let k = op.scale(C64::new(1.0 / lambda1, 0.0));
                let pf = polar_decompose(&k)?;
                let dilated = one_meter_unitary(&pf.q, &pf.r)?;
                let meter = next_meter;
                next_meter += 1;
                let mut dilated_targets = Vec::with_capacity(targets.len() + 1);
                dilated_targets.push(meter);
                dilated_targets.extend_from_slice(targets);
                steps.push(CircuitStep::Unitary {
                    op: dilated,
                    targets: dilated_targets,
                });
                steps.push(CircuitStep::Postselect {
                    targets: vec![meter],
                    outcome: vec![0],
                });
            }
            other => steps.push(other.clone()),
        }
    }
    CircuitProgram::new(n + meters, steps)
}

fn assert_positive_definite(s: &OperatorMatrix) -> Result<Vec<f64>> {
    if !s.is_hermitian(1e-10) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: f64::NAN,
        });
    }
    let (vals, _) = s.eigh()?;
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if vals[0] <= 1e-12 * scale.max(1.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: vals[0],
        });
    }
    Ok(vals)
}

/// Two-meter purification of a similarity transform `U = S U0 S^{−1}` with
/// `S` positive definite and `U0` unitary.
///
/// Meter 1 dilates `β S^{−1}` (applied first), meter 2 dilates `α S`
/// (applied after `U0`), with `α = 1/λ_max(S)` and `β = 1/λ_max(S^{−1})`.
/// The conditioned block satisfies `⟨00|V|00⟩ = αβ · S U0 S^{−1}`.
pub fn two_meter_pt_dilation(
    s: &OperatorMatrix,
    u0: &OperatorMatrix,
) -> Result<DilationGadget> {
    let vals = assert_positive_definite(s)?;
    if !u0.is_unitary(1e-10) {
        return Err(Error::InvalidArgument(
            "two-meter dilation requires a unitary core U0".into(),
        ));
    }
    if s.dim() != u0.dim() {
        return Err(Error::Dimension(format!(
            "S is {}×{0} but U0 is {1}×{1}",
            s.dim(),
            u0.dim()
        )));
    }
    let d = s.dim();
    let lam_max = vals[vals.len() - 1];
    let lam_min = vals[0];
    // λ_max(S^{−1}) = 1/λ_min(S).
    let alpha = 1.0 / lam_max;
    let beta = lam_min;
    let s_inv = s.inverse()?;
    // αS and βS^{−1} are positive contractions: Q = I, R = the operator.
    let v_s = one_meter_unitary(
        &OperatorMatrix::identity(d),
        &s.scale(C64::new(alpha, 0.0)).hermitize(),
    )?;
    let v_s_inv = one_meter_unitary(
        &OperatorMatrix::identity(d),
        &s_inv.scale(C64::new(beta, 0.0)).hermitize(),
    )?;
    // Full register ordering: meter2 (MSB) ⊗ meter1 ⊗ system.
    // V1 = I_{m2} ⊗ V_{S^{−1}} (meter1 ⊗ system).
    let mut v1 = Array2::zeros((4 * d, 4 * d));
    for a in 0..2 {
        for i in 0..2 * d {
            for j in 0..2 * d {
                v1[(a * 2 * d + i, a * 2 * d + j)] = v_s_inv.entry(i, j);
            }
        }
    }
    // V2 = V_S on (meter2, system), identity on meter1.
    let mut v2 = Array2::zeros((4 * d, 4 * d));
    for a in 0..2 {
        for b in 0..2 {
            for m in 0..2 {
                for i in 0..d {
                    for j in 0..d {
                        v2[((a * 2 + m) * d + i, (b * 2 + m) * d + j)] =
                            v_s.entry(a * d + i, b * d + j);
                    }
                }
            }
        }
    }
    // U0 on the system only.
    let mut mid = Array2::zeros((4 * d, 4 * d));
    for blk in 0..4 {
        for i in 0..d {
            for j in 0..d {
                mid[(blk * d + i, blk * d + j)] = u0.entry(i, j);
            }
        }
    }
    let unitary = OperatorMatrix::new(v2)?
        .matmul(&OperatorMatrix::new(mid)?)
        .matmul(&OperatorMatrix::new(v1)?);
    Ok(DilationGadget {
        unitary,
        meter_qubits: 2,
        meter_init: vec![0, 0],
        postselect_outcome: vec![0, 0],
        scalar: alpha * beta,
    })
}

/// Tensor-product purification of `S = ⊗_j S_j` with single-qubit positive
/// definite factors: one meter qubit per factor, each two-qubit gadget
/// supported only on its (meter, site) pair, composite scalar `Π_j α_j`.
pub fn product_dilation(s_factors: &[OperatorMatrix]) -> Result<DilationGadget> {
    if s_factors.is_empty() {
        return Err(Error::InvalidArgument(
            "product dilation needs at least one factor".into(),
        ));
    }
    let n = s_factors.len();
    let mut scalar = 1.0;
    let mut unitary = OperatorMatrix::identity(1 << (2 * n));
    for (j, s_j) in s_factors.iter().enumerate() {
        if s_j.dim() != 2 {
            return Err(Error::Dimension(format!(
                "factor {j} has dimension {}, expected single-qubit (2)",
                s_j.dim()
            )));
        }
        let vals = assert_positive_definite(s_j)?;
        let alpha_j = 1.0 / vals[vals.len() - 1];
        scalar *= alpha_j;
        let v_j = one_meter_unitary(
            &OperatorMatrix::identity(2),
            &s_j.scale(C64::new(alpha_j, 0.0)).hermitize(),
        )?;
        // Register layout: meters are qubits 0..n (most significant block,
        // in factor order), sites are qubits n..2n. Each factor acts only on
        // its own (meter, site) pair.
        let embedded = crate::matrix::embed(&v_j, &[j, n + j], 2 * n)?;
        unitary = embedded.matmul(&unitary);
    }
    Ok(DilationGadget {
        unitary,
        meter_qubits: n,
        meter_init: vec![0; n],
        postselect_outcome: vec![0; n],
        scalar,
    })
}

/// The postselected single-qubit map induced by a two-qubit matchgate
/// `U(F,G)` (`F` on the even-parity subspace, `G` on the odd): with the
/// ancilla prepared in `|+⟩` and postselected on `|0⟩`,
/// `⟨0|U(F,G)|+⟩ = (1/√2)·[[F11, F12],[G21, G22]]`.
///
/// A valid matchgate needs `det F = det G`; since the induced map only uses
/// the first row of `F` and the second row of `G`, the constraint is
/// enforced by adjusting the phase of the unused row of `F`. Inputs whose
/// determinant magnitudes differ beyond 1e-10 cannot be repaired by a phase
/// and are rejected.
pub fn matchgate_induced(f: &OperatorMatrix, g: &OperatorMatrix) -> Result<OperatorMatrix> {
    if f.dim() != 2 || g.dim() != 2 {
        return Err(Error::Dimension(
            "matchgate blocks must be 2×2".into(),
        ));
    }
    let det = |m: &OperatorMatrix| m.entry(0, 0) * m.entry(1, 1) - m.entry(0, 1) * m.entry(1, 0);
    let det_f = det(f);
    let det_g = det(g);
    if (det_f.norm() - det_g.norm()).abs() > 1e-10 || det_f.norm() < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "determinant mismatch |det F| = {} vs |det G| = {} cannot be fixed by a phase",
            det_f.norm(),
            det_g.norm()
        )));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    OperatorMatrix::from_rows(&[
        vec![f.entry(0, 0) * inv_sqrt2, f.entry(0, 1) * inv_sqrt2],
        vec![g.entry(1, 0) * inv_sqrt2, g.entry(1, 1) * inv_sqrt2],
    ])
}

/// Dense 4×4 matchgate `U(F,G)` with the phase of `F`'s unused (second) row
/// adjusted so `det F = det G`. Qubit 0 is the system, qubit 1 the ancilla.
pub fn matchgate_matrix(f: &OperatorMatrix, g: &OperatorMatrix) -> Result<OperatorMatrix> {
    let det = |m: &OperatorMatrix| m.entry(0, 0) * m.entry(1, 1) - m.entry(0, 1) * m.entry(1, 0);
    let det_f = det(f);
    let det_g = det(g);
    if (det_f.norm() - det_g.norm()).abs() > 1e-10 || det_f.norm() < 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "determinant mismatch |det F| = {} vs |det G| = {} cannot be fixed by a phase",
            det_f.norm(),
            det_g.norm()
        )));
    }
    let phase = det_g / det_f;
    let mut m = Array2::zeros((4, 4));
    // Even-parity subspace {|00⟩, |11⟩} carries F (second row phase-fixed).
    m[(0, 0)] = f.entry(0, 0);
    m[(0, 3)] = f.entry(0, 1);
    m[(3, 0)] = phase * f.entry(1, 0);
    m[(3, 3)] = phase * f.entry(1, 1);
    // Odd-parity subspace {|01⟩, |10⟩} carries G.
    m[(1, 1)] = g.entry(0, 0);
    m[(1, 2)] = g.entry(0, 1);
    m[(2, 1)] = g.entry(1, 0);
    m[(2, 2)] = g.entry(1, 1);
    OperatorMatrix::new(m)
}
