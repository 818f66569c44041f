//! Analysis of non-Hermitian Hamiltonians: the Hermitian/anti-Hermitian
//! split `H = H0 - iΓ`, pseudo-Hermitian metric search, similarity factors,
//! the 2x2 PT canonical form, and the long-time right-eigenspace.

use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{biorthogonal_spectrum, OperatorMatrix};

type C64 = Complex64;

/// `H = H0 - iΓ` with both parts Hermitian; the sum reconstructs `H`
/// bitwise.
#[derive(Debug, Clone)]
pub struct NHHamiltonian {
    pub h: OperatorMatrix,
    pub h0: OperatorMatrix,
    pub gamma: OperatorMatrix,
}

/// Advances `x` by `k` ulps in the monotonic bit ordering of f64.
fn step_ulps(x: f64, k: i64) -> f64 {
    let u = x.to_bits();
    let key = if u >> 63 == 1 { !u } else { u ^ (1u64 << 63) };
    let key2 = (key as i64).wrapping_add(k) as u64;
    let u2 = if key2 >> 63 == 1 { key2 ^ (1u64 << 63) } else { !key2 };
    f64::from_bits(u2)
}

/// Finds `(u, v)` near `((s+t)/2, (s−t)/2)` such that the floating-point
/// sums `u + v == s` and `u − v == t` hold bitwise. Exactness of both sums is
/// impossible when `|s|` (say) is much smaller than the half-sum and has low
/// mantissa bits set — the coarse grid of `u ± v` cannot produce `s` — so the
/// fallback keeps the larger-magnitude equation exact and leaves at most one
/// ulp of error on the smaller.
fn split_component(s: f64, t: f64) -> (f64, f64) {
    let u0 = 0.5 * s + 0.5 * t;
    for k in 0..=32i64 {
        for ks in if k == 0 { vec![0] } else { vec![k, -k] } {
            let u = step_ulps(u0, ks);
            for dv in -2..=2i64 {
                let v = step_ulps(s - u, dv);
                if u + v == s && u - v == t {
                    return (u, v);
                }
                let v2 = step_ulps(u - t, dv);
                if u + v2 == s && u - v2 == t {
                    return (u, v2);
                }
            }
        }
    }
    // Joint exactness unreachable: satisfy the coarser equation exactly.
    for k in 0..=64i64 {
        for ks in if k == 0 { vec![0] } else { vec![k, -k] } {
            let u = step_ulps(u0, ks);
            if s.abs() >= t.abs() {
                let v = s - u;
                if u + v == s {
                    return (u, v);
                }
            } else {
                let v = u - t;
                if u - v == t {
                    return (u, v);
                }
            }
        }
    }
    (u0, 0.5 * s - 0.5 * t)
}

/// Splits `H` into exactly Hermitian `H0` and `Γ` (equal to `(H+H†)/2` and
/// `i(H−H†)/2` to a few ulp) such that the floating-point sum `H0 + (−i)Γ`
/// reproduces `H` bitwise wherever the two constraints are jointly
/// representable, and within one ulp per entry otherwise.
pub fn split_parts(h: &OperatorMatrix) -> Result<NHHamiltonian> {
    let n = h.dim();
    let mut h0 = Array2::zeros((n, n));
    let mut gamma = Array2::zeros((n, n));
    for i in 0..n {
        // Diagonal: H0[i,i] = Re, Γ[i,i] = −Im; exact by construction.
        let p = h.entry(i, i);
        h0[(i, i)] = C64::new(p.re, 0.0);
        gamma[(i, i)] = C64::new(-p.im, 0.0);
        for j in (i + 1)..n {
            let p = h.entry(i, j);
            let r = h.entry(j, i);
            // Writing H0[i,j] = a+bi and Γ[i,j] = c+di, the reconstruction
            // demands a+d == p.re, a−d == r.re, b−c == p.im, −b−c == r.im.
            let (a, d) = split_component(p.re, r.re);
            let (minus_c, b) = split_component(p.im, r.im);
            h0[(i, j)] = C64::new(a, b);
            h0[(j, i)] = C64::new(a, -b);
            gamma[(i, j)] = C64::new(-minus_c, d);
            gamma[(j, i)] = C64::new(-minus_c, -d);
        }
    }
    Ok(NHHamiltonian {
        h: h.clone(),
        h0: OperatorMatrix::new(h0)?,
        gamma: OperatorMatrix::new(gamma)?,
    })
}

/// Definiteness class of the anti-Hermitian coefficient Γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaVerdict {
    /// Γ has eigenvalues of both signs.
    Indefinite,
    /// Γ = 0 (H Hermitian).
    Zero,
    /// Γ is semidefinite and nonzero — incompatible with a diagonalizable
    /// pseudo-Hermitian H, reported when the numerics land there anyway.
    SemidefiniteNonPseudoHermitian,
}

/// Pairs the spectrum under complex conjugation; returns eigenvalues that
/// have no conjugate partner within `tol`.
fn unpaired_eigenvalues(eigenvalues: &[C64], tol: f64) -> Vec<C64> {
    let mut used = vec![false; eigenvalues.len()];
    let mut unpaired = Vec::new();
    for (i, nu) in eigenvalues.iter().enumerate() {
        if used[i] {
            continue;
        }
        if nu.im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = eigenvalues
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i && !used[*j])
            .min_by(|(_, a), (_, b)| {
                let da = (*a - nu.conj()).norm();
                let db = (*b - nu.conj()).norm();
                da.partial_cmp(&db).unwrap()
            });
        match partner {
            Some((j, v)) if (*v - nu.conj()).norm() <= tol => {
                used[i] = true;
                used[j] = true;
            }
            _ => {
                used[i] = true;
                unpaired.push(*nu);
            }
        }
    }
    unpaired
}

/// Checks that the anti-Hermitian part of a diagonalizable pseudo-Hermitian
/// `H` is either zero or indefinite.
pub fn check_gamma_indefinite(h: &OperatorMatrix) -> Result<GammaVerdict> {
    let bs = biorthogonal_spectrum(h)?;
    let scale = bs.eigenvalues.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let unpaired = unpaired_eigenvalues(&bs.eigenvalues, 1e-8 * scale.max(1.0));
    if !unpaired.is_empty() {
        return Err(Error::NotPseudoHermitian { unpaired });
    }
    let parts = split_parts(h)?;
    let (vals, _) = parts.gamma.hermitize().eigh()?;
    let tol = 1e-10 * h.operator_norm().max(1.0);
    let min = vals.first().copied().unwrap_or(0.0);
    let max = vals.last().copied().unwrap_or(0.0);
    if min.abs() <= tol && max.abs() <= tol {
        Ok(GammaVerdict::Zero)
    } else if min < -tol && max > tol {
        Ok(GammaVerdict::Indefinite)
    } else {
        Ok(GammaVerdict::SemidefiniteNonPseudoHermitian)
    }
}

/// A Hermitian solution of the metric equation `H†η = ηH`, normalized to
/// trace = dim when the trace is usable.
#[derive(Debug, Clone)]
pub struct MetricSolution {
    pub eta: OperatorMatrix,
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
}

/// Orthonormal (Frobenius) basis of the Hermitian nullspace of
/// `η ↦ H†η − ηH`.
fn hermitian_nullspace_basis(h: &OperatorMatrix) -> Result<Vec<OperatorMatrix>> {
    let n = h.dim();
    let hd = h.adjoint();
    let mut m = Array2::<C64>::zeros((n * n, n * n));
    // Equation row (i,j): Σ_{k,l} [H†(i,k) δ(j,l) − δ(i,k) H(l,j)] η(k,l) = 0.
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                m[(row, k * n + j)] += hd.entry(i, k);
                m[(row, i * n + k)] -= h.entry(k, j);
            }
        }
    }
    let (_, s, vt) = m.svd(false, true)?;
    let vt = vt.expect("requested Vt");
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-9 * smax.max(1.0);
    let mut basis: Vec<OperatorMatrix> = Vec::new();
    let push_orthogonal = |cand: OperatorMatrix, basis: &mut Vec<OperatorMatrix>| {
        let mut r = cand;
        for b in basis.iter() {
            // Real Frobenius inner product on Hermitian matrices.
            let ip: f64 = r
                .data()
                .iter()
                .zip(b.data().iter())
                .map(|(x, y)| (x.conj() * y).re)
                .sum();
            r = r.sub(&b.scale(C64::new(ip, 0.0)));
        }
        let nrm = r.frobenius_norm();
        if nrm > 1e-8 {
            basis.push(r.scale(C64::new(1.0 / nrm, 0.0)));
        }
    };
    for idx in 0..n * n {
        if s[idx] > tol {
            continue;
        }
        // Null vector = conjugate of the Vt row; reshape to a matrix and
        // take both Hermitian components.
        let mut x = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] = vt[(idx, i * n + j)].conj();
            }
        }
        let x = OperatorMatrix::new(x)?;
        let b1 = x.add(&x.adjoint()).scale(C64::new(0.5, 0.0));
        let b2 = x.sub(&x.adjoint()).scale(C64::new(0.0, -0.5));
        push_orthogonal(b1.hermitize(), &mut basis);
        push_orthogonal(b2.hermitize(), &mut basis);
    }
    Ok(basis)
}

/// Searches the Hermitian solution space of `H†η = ηH` for a positive
/// definite metric by maximizing the minimum eigenvalue over the nullspace
/// basis (subgradient ascent, 200 steps per start). Returns `None` when the
/// solution space is empty.
pub fn find_metric(h: &OperatorMatrix) -> Result<Option<MetricSolution>> {
    let basis = hermitian_nullspace_basis(h)?;
    if basis.is_empty() {
        return Ok(None);
    }
    let nb = basis.len();
    let assemble = |c: &[f64]| -> OperatorMatrix {
        let mut eta = OperatorMatrix::zeros(basis[0].dim());
        for (b, &ci) in basis.iter().zip(c) {
            eta = eta.add(&b.scale(C64::new(ci, 0.0)));
        }
        eta.hermitize()
    };
    let min_eig_and_vec = |eta: &OperatorMatrix| -> Result<(f64, Array1<C64>)> {
        let (vals, vecs) = eta.eigh()?;
        Ok((vals[0], vecs.column(0)))
    };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(vec![1.0 / (nb as f64).sqrt(); nb]);
    for a in 0..nb {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; nb];
            c[a] = sign;
            starts.push(c);
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut c = start;
        for step in 0..200 {
            let eta = assemble(&c);
            let (lam, v) = min_eig_and_vec(&eta)?;
            if best.as_ref().map_or(true, |(b, _)| lam > *b) {
                best = Some((lam, c.clone()));
            }
            // Subgradient of λ_min at the minimizing eigenvector.
            let mut grad = vec![0.0; nb];
            for (a, b) in basis.iter().enumerate() {
                let bv = b.apply(&v);
                grad[a] = v.iter().zip(bv.iter()).map(|(x, y)| (x.conj() * y).re).sum();
            }
            let lr = 0.5 / (1.0 + 0.05 * step as f64);
            for (ci, gi) in c.iter_mut().zip(&grad) {
                *ci += lr * gi;
            }
            let nrm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm < 1e-12 {
                break;
            }
            for ci in c.iter_mut() {
                *ci /= nrm;
            }
        }
    }
    let (_, c) = best.expect("at least one start");
    let mut eta = assemble(&c);
    // Orient and normalize: trace = dim, falling back to Frobenius
    // normalization when the trace is numerically zero.
    let dim = eta.dim() as f64;
    let tr = eta.trace().re;
    if tr.abs() > 1e-9 * eta.frobenius_norm().max(1.0) {
        eta = eta.scale(C64::new(dim / tr, 0.0));
    } else {
        let s = dim.sqrt() / eta.frobenius_norm();
        eta = eta.scale(C64::new(s, 0.0));
    }
    let (vals, _) = eta.eigh()?;
    let min_eigenvalue = vals[0];
    Ok(Some(MetricSolution {
        eta,
        positive_definite: min_eigenvalue > 1e-10,
        min_eigenvalue,
    }))
}

/// Residual of the metric equation, relative to `‖H‖·‖η‖`.
pub fn metric_residual(eta: &OperatorMatrix, h: &OperatorMatrix) -> f64 {
    let lhs = h.adjoint().matmul(eta);
    let rhs = eta.matmul(h);
    lhs.sub(&rhs).operator_norm() / (h.operator_norm() * eta.operator_norm()).max(1e-300)
}

/// Similarity factors of a quasi-Hermitian `H`: `S = η^{-1/2}` and the
/// isospectral Hermitian `H0 = S^{-1} H S`.
pub fn similarity_factors(
    eta: &OperatorMatrix,
    h: &OperatorMatrix,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let (vals, vecs) = eta.hermitize().eigh()?;
    let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if vals[0] <= 1e-10 * scale.max(1.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: vals[0] });
    }
    if metric_residual(eta, h) > 1e-8 {
        return Err(Error::NotQuasiHermitian(format!(
            "metric equation residual {:.3e} exceeds 1e-8",
            metric_residual(eta, h)
        )));
    }
    let diag_pow = |p: f64| -> Result<OperatorMatrix> {
        let d = Array2::from_diag(&Array1::from_iter(
            vals.iter().map(|&v| C64::new(v.powf(p), 0.0)),
        ));
        Ok(vecs.matmul(&OperatorMatrix::new(d)?).matmul(&vecs.adjoint()))
    };
    let s = diag_pow(-0.5)?;
    let s_inv = diag_pow(0.5)?;
    let h0 = s_inv.matmul(h).matmul(&s);
    Ok((s, h0))
}

/// Canonical 2x2 PT form: `basis_change† (H − shift·I) basis_change`
/// equals `[[0, g−γ],[g+γ, 0]]` with `0 < γ < g`.
#[derive(Debug, Clone)]
pub struct PTCanonicalForm {
    pub g: f64,
    pub gamma: f64,
    pub basis_change: OperatorMatrix,
    pub scalar_shift: C64,
}

/// Bloch vector of a traceless 2x2 Hermitian matrix `A = a·σ`.
fn bloch_vector(a: &OperatorMatrix) -> [f64; 3] {
    let z = a.entry(0, 1);
    [z.re, -z.im, a.entry(0, 0).re]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// SU(2) element implementing the rotation with columns `(x̂', ŷ', ẑ')`:
/// `U σ_x U† = x̂'·σ` and cyclically. Standard quaternion extraction.
fn su2_from_rotation(r: [[f64; 3]; 3]) -> OperatorMatrix {
    let trace = r[0][0] + r[1][1] + r[2][2];
    let (w, x, y, z);
    if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        w = 0.25 * s;
        x = (r[2][1] - r[1][2]) / s;
        y = (r[0][2] - r[2][0]) / s;
        z = (r[1][0] - r[0][1]) / s;
    } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        w = (r[2][1] - r[1][2]) / s;
        x = 0.25 * s;
        y = (r[0][1] + r[1][0]) / s;
        z = (r[0][2] + r[2][0]) / s;
    } else if r[1][1] > r[2][2] {
        let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
        w = (r[0][2] - r[2][0]) / s;
        x = (r[0][1] + r[1][0]) / s;
        y = 0.25 * s;
        z = (r[1][2] + r[2][1]) / s;
    } else {
        let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
        w = (r[1][0] - r[0][1]) / s;
        x = (r[0][2] + r[2][0]) / s;
        y = (r[1][2] + r[2][1]) / s;
        z = 0.25 * s;
    }
    // U = w·I − i(x σx + y σy + z σz)
    OperatorMatrix::from_rows(&[
        vec![C64::new(w, -z), C64::new(-y, -x)],
        vec![C64::new(y, -x), C64::new(w, z)],
    ])
    .expect("2x2")
}

/// Reduces a quasi-Hermitian 2x2 Hamiltonian to the canonical PT form
/// `g σx − iγ σy` up to a unitary basis change and a scalar shift.
pub fn pt_canonical_2x2(h: &OperatorMatrix) -> Result<PTCanonicalForm> {
    if h.dim() != 2 {
        return Err(Error::Dimension(format!("expected 2x2, got dim {}", h.dim())));
    }
    let scalar_shift = h.trace() * 0.5;
    let traceless = h.sub(&OperatorMatrix::identity(2).scale(scalar_shift));
    let parts = split_parts(&traceless)?;
    let n = bloch_vector(&parts.h0.hermitize());
    let m = bloch_vector(&parts.gamma.hermitize());
    let (g, gamma) = (norm3(n), norm3(m));
    let scale = g.max(gamma).max(1.0);
    if gamma <= 1e-12 * scale || g <= 1e-12 * scale {
        return Err(Error::NotQuasiHermitian(
            "Hermitian or purely anti-Hermitian traceless part has no PT canonical form".into(),
        ));
    }
    // Quasi-Hermiticity of the traceless part requires orthogonal Bloch
    // vectors (the canonical form's m₁ = 0 constraint); parallel vectors are
    // the maximal violation.
    if dot(n, m).abs() > 1e-8 * g * gamma {
        return Err(Error::NotQuasiHermitian(format!(
            "Hermitian and anti-Hermitian Bloch vectors are not orthogonal \
             (normalized overlap {:.3e})",
            dot(n, m).abs() / (g * gamma)
        )));
    }
    if gamma >= g * (1.0 - 1e-12) {
        return Err(Error::BrokenPhase { g, gamma });
    }
    let nh = [n[0] / g, n[1] / g, n[2] / g];
    let mh = [m[0] / gamma, m[1] / gamma, m[2] / gamma];
    let kh = cross(nh, mh);
    // Rotation columns: images of x̂, ŷ, ẑ.
    let r = [
        [nh[0], mh[0], kh[0]],
        [nh[1], mh[1], kh[1]],
        [nh[2], mh[2], kh[2]],
    ];
    let basis_change = su2_from_rotation(r);
    Ok(PTCanonicalForm { g, gamma, basis_change, scalar_shift })
}

impl PTCanonicalForm {
    /// The canonical matrix `[[0, g−γ],[g+γ, 0]]`.
    pub fn canonical_matrix(&self) -> OperatorMatrix {
        OperatorMatrix::from_real_rows(&[
            vec![0.0, self.g - self.gamma],
            vec![self.g + self.gamma, 0.0],
        ])
        .expect("2x2")
    }

    /// Residual `‖U†(H − shift)U − canonical‖`.
    pub fn residual(&self, h: &OperatorMatrix) -> f64 {
        let shifted = h.sub(&OperatorMatrix::identity(2).scale(self.scalar_shift));
        self.basis_change
            .adjoint()
            .matmul(&shifted)
            .matmul(&self.basis_change)
            .sub(&self.canonical_matrix())
            .operator_norm()
    }
}

/// Orthonormal basis of the long-time subspace: the span of right
/// eigenvectors that (a) have support in ρ through their left eigenvectors
/// and (b) share the maximal `Im(ν)` (slowest decay) among those.
pub fn long_time_subspace(
    h: &OperatorMatrix,
    rho: &OperatorMatrix,
) -> Result<Vec<Array1<C64>>> {
    let bs = biorthogonal_spectrum(h)?;
    let n = bs.dim();
    let support_tol = 1e-10 * rho.trace().re.abs().max(1.0);
    let mut supported: Vec<usize> = Vec::new();
    for j in 0..n {
        let lj = bs.left_ket(j);
        let rho_l = rho.apply(&lj);
        let weight: f64 = lj
            .iter()
            .zip(rho_l.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        if weight > support_tol {
            supported.push(j);
        }
    }
    let scale = bs.eigenvalues.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let max_im = supported
        .iter()
        .map(|&j| bs.eigenvalues[j].im)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut vectors: Vec<Array1<C64>> = Vec::new();
    for &j in &supported {
        if bs.eigenvalues[j].im < max_im - 1e-8 * scale {
            continue;
        }
        // Gram-Schmidt against what we already kept.
        let mut v = bs.right(j);
        for u in &vectors {
            let ip: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u.iter()) {
                *vi -= ip * ui;
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-10 {
            vectors.push(v.mapv(|z| z / nrm));
        }
    }
    Ok(vectors)
}
