//! Dense complex operator matrices and the decompositions the rest of the
//! crate is built on: SVD, polar, biorthogonal spectra, and the
//! distance-to-unitarity quantities.
//!
//! All matrices are square, dense, and small (dimensions up to 2^12); values
//! are immutable after construction and safe to share across threads.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Threshold below which an entry counts as zero when picking phase/ordering
/// conventions.
pub(crate) const ENTRY_ZERO_TOL: f64 = 1e-12;

/// A dense square matrix of complex amplitudes. The universal carrier for
/// gates, Hamiltonians, Kraus operators, and metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    data: Array2<C64>,
}

impl OperatorMatrix {
    /// Wraps a square, finite matrix.
    pub fn new(data: Array2<C64>) -> Result<Self> {
        let (r, c) = data.dim();
        if r != c {
            return Err(Error::Dimension(format!("expected square matrix, got {r}x{c}")));
        }
        if r == 0 {
            return Err(Error::Dimension("dimension must be at least 1".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let mut a = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                a[(i, j)] = *z;
            }
        }
        Self::new(a)
    }

    /// Real-entried convenience constructor.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect::<Vec<_>>(),
        )
    }

    pub fn identity(dim: usize) -> Self {
        Self { data: Array2::eye(dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: Array2::zeros((dim, dim)) }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Qubit count when the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        let d = self.dim();
        if d.is_power_of_two() {
            Some(d.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = self.data[(j, i)].conj();
            }
        }
        Self { data: a }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self { data: self.data.dot(&other.data) }
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.data.dot(v)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { data: &self.data + &other.data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { data: &self.data - &other.data }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { data: self.data.mapv(|z| z * c) }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut a = Array2::zeros((n * m, n * m));
        for i in 0..n {
            for j in 0..n {
                let z = self.data[(i, j)];
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        a[(i * m + k, j * m + l)] = z * other.data[(k, l)];
                    }
                }
            }
        }
        Self { data: a }
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator (spectral) norm: the largest singular value.
    pub fn operator_norm(&self) -> f64 {
        singular_values(&self.data).first().copied().unwrap_or(0.0)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                if (self.data[(i, j)] - self.data[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.matmul(&self.adjoint());
        prod.sub(&Self::identity(self.dim())).operator_norm() <= tol
    }

    /// Enforces exact Hermiticity by symmetric averaging.
    pub fn hermitize(&self) -> Self {
        let n = self.dim();
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            a[(i, i)] = C64::new(self.data[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let z = (self.data[(i, j)] + self.data[(j, i)].conj()) * 0.5;
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        Self { data: a }
    }

    /// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues
    /// and a unitary whose columns are the eigenvectors.
    pub fn eigh(&self) -> Result<(Vec<f64>, OperatorMatrix)> {
        let (vals, vecs) = self.data.eigh(UPLO::Lower)?;
        // The backend reads the stated triangle of the memory layout it was
        // handed, which for a row-major complex matrix yields eigenvectors of
        // the transpose (the conjugate). Keep whichever orientation actually
        // reconstructs the input.
        let d = Array2::from_diag(&Array1::from_iter(
            vals.iter().map(|&v| C64::new(v, 0.0)),
        ));
        let d = OperatorMatrix { data: d };
        let cand = OperatorMatrix { data: vecs };
        let cand_conj = OperatorMatrix {
            data: cand.data.mapv(|z| z.conj()),
        };
        let residual = |v: &OperatorMatrix| {
            v.matmul(&d).matmul(&v.adjoint()).sub(self).max_abs_entry()
        };
        let vecs = if residual(&cand) <= residual(&cand_conj) {
            cand
        } else {
            cand_conj
        };
        Ok((vals.to_vec(), vecs))
    }

    /// Positive-semidefinite square root of a Hermitian PSD matrix. Small
    /// negative eigenvalues (numerical noise) are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<OperatorMatrix> {
        let (vals, vecs) = self.eigh()?;
        let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if vals.iter().any(|&v| v < -1e-9 * scale.max(1.0)) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: vals.iter().cloned().fold(f64::INFINITY, f64::min),
            });
        }
        let d = Array2::from_diag(&Array1::from_iter(
            vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)),
        ));
        Ok(vecs.matmul(&OperatorMatrix { data: d }).matmul(&vecs.adjoint()))
    }

    pub fn inverse(&self) -> Result<OperatorMatrix> {
        Ok(OperatorMatrix { data: self.data.inv()? })
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Array1<C64> {
        self.data.column(j).to_owned()
    }
}

fn singular_values(a: &Array2<C64>) -> Vec<f64> {
    // zgesvd never fails on finite input at these sizes.
    let (_, s, _) = a.svd(false, false).expect("svd of finite matrix");
    s.to_vec()
}

// Shared JSON encoding: nested arrays of [re, im] pairs, row-major.
impl Serialize for OperatorMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .data
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let cplx: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|p| C64::new(p[0], p[1])).collect())
            .collect();
        OperatorMatrix::from_rows(&cplx).map_err(D::Error::custom)
    }
}

/// SVD of an operator: `U = V diag(singulars) W†` with `V`, `W` unitary and
/// the singular values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SingularDecomposition {
    pub v: OperatorMatrix,
    pub singulars: Vec<f64>,
    pub w: OperatorMatrix,
}

impl SingularDecomposition {
    pub fn reconstruct(&self) -> OperatorMatrix {
        let d = Array2::from_diag(&Array1::from_iter(
            self.singulars.iter().map(|&s| C64::new(s, 0.0)),
        ));
        self.v.matmul(&OperatorMatrix { data: d }).matmul(&self.w.adjoint())
    }
}

/// Deterministic comparison key for a column: its first nonzero entry.
fn column_key(col: &Array1<C64>) -> (usize, f64, f64) {
    for (i, z) in col.iter().enumerate() {
        if z.norm() > ENTRY_ZERO_TOL {
            return (i, z.re, z.im);
        }
    }
    (col.len(), 0.0, 0.0)
}

pub fn svd(u: &OperatorMatrix) -> Result<SingularDecomposition> {
    let (v, s, wt) = u.data.svd(true, true)?;
    let v = v.expect("requested U factor");
    let wt = wt.expect("requested Vt factor");
    let n = u.dim();
    let mut order: Vec<usize> = (0..n).collect();
    // LAPACK returns nonincreasing singulars; break exact ties by the
    // lexicographic order of the V columns' first nonzero entries so gadget
    // construction is deterministic.
    let tie = 1e-14 * s.first().copied().unwrap_or(0.0).max(1.0);
    order.sort_by(|&a, &b| {
        if (s[a] - s[b]).abs() <= tie {
            let ka = column_key(&v.column(a).to_owned());
            let kb = column_key(&v.column(b).to_owned());
            ka.partial_cmp(&kb).unwrap()
        } else {
            s[b].partial_cmp(&s[a]).unwrap()
        }
    });
    let mut vm = Array2::zeros((n, n));
    let mut wm = Array2::zeros((n, n));
    let mut singulars = Vec::with_capacity(n);
    for (new, &old) in order.iter().enumerate() {
        singulars.push(s[old]);
        for i in 0..n {
            vm[(i, new)] = v[(i, old)];
            // W column = conjugate of Vt row.
            wm[(i, new)] = wt[(old, i)].conj();
        }
    }
    Ok(SingularDecomposition {
        v: OperatorMatrix { data: vm },
        singulars,
        w: OperatorMatrix { data: wm },
    })
}

/// Polar factors `K = Q R` with `Q` unitary and `R = (K†K)^{1/2}` PSD.
#[derive(Debug, Clone)]
pub struct PolarFactors {
    pub q: OperatorMatrix,
    pub r: OperatorMatrix,
}

/// Polar decomposition via the SVD: `Q = V W†`, `R = W Σ W†`. When `K` is
/// singular, `Q = V W†` is a valid unitary completion on the kernel of `R`.
pub fn polar_decompose(k: &OperatorMatrix) -> Result<PolarFactors> {
    let sd = svd(k)?;
    let q = sd.v.matmul(&sd.w.adjoint());
    let d = Array2::from_diag(&Array1::from_iter(
        sd.singulars.iter().map(|&s| C64::new(s, 0.0)),
    ));
    let r = sd
        .w
        .matmul(&OperatorMatrix { data: d })
        .matmul(&sd.w.adjoint())
        .hermitize();
    Ok(PolarFactors { q, r })
}

/// Biorthogonal spectral data of a diagonalizable operator:
/// `H = Σ_j ν_j |r_j⟩⟨l_j|` with `⟨l_i|r_j⟩ = δ_ij` and `⟨r_j|r_j⟩ = 1`.
///
/// Pairs are sorted by decay rate `γ_j = -Im(ν_j)` ascending (slowest decay
/// first), ties broken by ascending real part.
#[derive(Debug, Clone)]
pub struct BiorthogonalSpectrum {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors, as columns.
    pub rights: OperatorMatrix,
    /// Left eigenvectors as rows: `lefts = rights^{-1}`.
    pub lefts: OperatorMatrix,
}

impl BiorthogonalSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Decay rate of eigenpair `j`.
    pub fn gamma(&self, j: usize) -> f64 {
        -self.eigenvalues[j].im
    }

    /// Oscillation frequency of eigenpair `j`.
    pub fn h(&self, j: usize) -> f64 {
        self.eigenvalues[j].re
    }

    pub fn right(&self, j: usize) -> Array1<C64> {
        self.rights.column(j)
    }

    /// Left eigenvector `⟨l_j|` as a ket (conjugated row).
    pub fn left_ket(&self, j: usize) -> Array1<C64> {
        Array1::from_iter(self.lefts.data().row(j).iter().map(|z| z.conj()))
    }

    pub fn reconstruct(&self) -> OperatorMatrix {
        let n = self.dim();
        let d = Array2::from_diag(&Array1::from_iter(self.eigenvalues.iter().cloned()));
        self.rights
            .matmul(&OperatorMatrix { data: d })
            .matmul(&OperatorMatrix { data: self.lefts.data().clone() })
            .sub(&OperatorMatrix::zeros(n))
    }
}

pub const DEFAULT_EIGENVECTOR_COND_CAP: f64 = 1e8;

pub fn biorthogonal_spectrum(h: &OperatorMatrix) -> Result<BiorthogonalSpectrum> {
    biorthogonal_spectrum_with_cap(h, DEFAULT_EIGENVECTOR_COND_CAP)
}

pub fn biorthogonal_spectrum_with_cap(
    h: &OperatorMatrix,
    cond_cap: f64,
) -> Result<BiorthogonalSpectrum> {
    let (vals, vecs) = h.data.eig()?;
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ga = -vals[a].im;
        let gb = -vals[b].im;
        (ga, vals[a].re).partial_cmp(&(gb, vals[b].re)).unwrap()
    });
    let mut rights = Array2::zeros((n, n));
    let mut eigenvalues = Vec::with_capacity(n);
    for (new, &old) in order.iter().enumerate() {
        let col = vecs.column(old);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        // Phase fix: first nonzero entry real positive.
        let phase = col
            .iter()
            .find(|z| z.norm() > ENTRY_ZERO_TOL)
            .map(|z| z / z.norm())
            .unwrap_or_else(|| C64::new(1.0, 0.0));
        for i in 0..n {
            rights[(i, new)] = col[i] / (norm * phase);
        }
        eigenvalues.push(vals[old]);
    }
    // Condition number of the eigenvector matrix bounds the left-eigenvector
    // blow-up; beyond the cap we treat H as defective.
    let sv = singular_values(&rights);
    let cond = sv[0] / sv[n - 1].max(f64::MIN_POSITIVE);
    if cond > cond_cap {
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (eigenvalues[i] - eigenvalues[j]).norm();
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        return Err(Error::NonDiagonalizable {
            cond,
            cap: cond_cap,
            cluster: vec![eigenvalues[best.0], eigenvalues[best.1]],
        });
    }
    let rights = OperatorMatrix { data: rights };
    let lefts = rights.inverse()?;
    Ok(BiorthogonalSpectrum { eigenvalues, rights, lefts })
}

/// `Δ = 1 - λ_d/λ_1`: zero exactly when `U` is proportional to a unitary.
pub fn normalized_singular_radius(u: &OperatorMatrix) -> Result<f64> {
    let s = singular_values(&u.data);
    let l1 = s[0];
    if l1 <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(1.0 - s[s.len() - 1] / l1)
}

/// The minimum operator-norm distance between a positive rescaling of `U`
/// and the unitary group, with the minimizing scale and unitary.
#[derive(Debug, Clone)]
pub struct UnitaryDistance {
    /// `(λ_1 - λ_d)/(λ_1 + λ_d)`
    pub distance: f64,
    /// `α* = 2/(λ_1 + λ_d)`
    pub alpha_star: f64,
    /// The polar factor `V W†`, optimal among unitaries at every scale.
    pub nearest_unitary: OperatorMatrix,
}

pub fn distance_to_unitary(u: &OperatorMatrix) -> Result<UnitaryDistance> {
    let sd = svd(u)?;
    let l1 = sd.singulars[0];
    let ld = sd.singulars[sd.singulars.len() - 1];
    if l1 <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(UnitaryDistance {
        distance: (l1 - ld) / (l1 + ld),
        alpha_star: 2.0 / (l1 + ld),
        nearest_unitary: sd.v.matmul(&sd.w.adjoint()),
    })
}

/// Embeds a `2^k`-dimensional operator acting on the given qubit targets into
/// the full `2^n`-dimensional register. Target index 0 is the most
/// significant bit of the operator's own index.
pub fn embed(op: &OperatorMatrix, targets: &[usize], num_qubits: usize) -> Result<OperatorMatrix> {
    let k = targets.len();
    if op.dim() != 1 << k {
        return Err(Error::Dimension(format!(
            "operator dim {} does not match {} targets",
            op.dim(),
            k
        )));
    }
    let mut seen = vec![false; num_qubits];
    for &t in targets {
        if t >= num_qubits {
            return Err(Error::Dimension(format!("target {t} out of range for {num_qubits} qubits")));
        }
        if seen[t] {
            return Err(Error::Dimension(format!("duplicate target {t}")));
        }
        seen[t] = true;
    }
    let n = 1usize << num_qubits;
    let mut a = Array2::zeros((n, n));
    // Qubit q occupies bit (num_qubits - 1 - q) of the amplitude index.
    let bit_of = |q: usize| num_qubits - 1 - q;
    for row in 0..n {
        let mut sub_row = 0usize;
        for (pos, &t) in targets.iter().enumerate() {
            if row >> bit_of(t) & 1 == 1 {
                sub_row |= 1 << (k - 1 - pos);
            }
        }
        for sub_col in 0..(1 << k) {
            let z = op.entry(sub_row, sub_col);
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let mut col = row;
            for (pos, &t) in targets.iter().enumerate() {
                let b = bit_of(t);
                col &= !(1 << b);
                if sub_col >> (k - 1 - pos) & 1 == 1 {
                    col |= 1 << b;
                }
            }
            a[(row, col)] = z;
        }
    }
    OperatorMatrix::new(a)
}
