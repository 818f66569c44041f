//! Matrix exponential with two independent routes that cross-check each
//! other: the spectral form through the biorthogonal decomposition when the
//! generator is comfortably diagonalizable, and scaling-and-squaring with a
//! degree-13 Padé approximant otherwise.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{biorthogonal_spectrum, OperatorMatrix};

type C64 = Complex64;

/// `exp(A)`. Uses the spectral form `R e^{diag(ν)} R^{-1}` when the
/// eigenvector matrix is well conditioned, falling back to the Padé route for
/// defective or near-defective generators.
pub fn matrix_exp(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    match biorthogonal_spectrum(a) {
        Ok(bs) => {
            let n = a.dim();
            let mut d = Array2::zeros((n, n));
            for (j, nu) in bs.eigenvalues.iter().enumerate() {
                if nu.re > 700.0 {
                    return Err(Error::ExpOverflow { norm: nu.re });
                }
                d[(j, j)] = nu.exp();
            }
            Ok(bs
                .rights
                .matmul(&OperatorMatrix::new(d)?)
                .matmul(&OperatorMatrix::new(bs.lefts.data().clone())?))
        }
        Err(Error::NonDiagonalizable { .. }) => matrix_exp_pade(a),
        Err(e) => Err(e),
    }
}

// Padé-13 coefficients and the Higham scaling threshold.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 4.25;

/// 1-norm (max column sum), the norm the scaling heuristic is stated in.
fn one_norm(a: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Scaling-and-squaring Padé-13 exponential; independent of any
/// eigendecomposition.
pub fn matrix_exp_pade(a: &OperatorMatrix) -> Result<OperatorMatrix> {
    let norm = one_norm(a.data());
    if !norm.is_finite() || norm > 1e8 {
        return Err(Error::ExpOverflow { norm });
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scale = C64::new((0.5f64).powi(s as i32), 0.0);
    let m = a.scale(scale);

    let n = a.dim();
    let eye = OperatorMatrix::identity(n);
    let m2 = m.matmul(&m);
    let m4 = m2.matmul(&m2);
    let m6 = m4.matmul(&m2);

    let c = |k: usize| C64::new(PADE13[k], 0.0);
    // u = M (M6 (b13 M6 + b11 M4 + b9 M2) + b7 M6 + b5 M4 + b3 M2 + b1 I)
    let inner_u = m6
        .scale(c(13))
        .add(&m4.scale(c(11)))
        .add(&m2.scale(c(9)));
    let u = m.matmul(
        &m6.matmul(&inner_u)
            .add(&m6.scale(c(7)))
            .add(&m4.scale(c(5)))
            .add(&m2.scale(c(3)))
            .add(&eye.scale(c(1))),
    );
    // v = M6 (b12 M6 + b10 M4 + b8 M2) + b6 M6 + b4 M4 + b2 M2 + b0 I
    let inner_v = m6
        .scale(c(12))
        .add(&m4.scale(c(10)))
        .add(&m2.scale(c(8)));
    let v = m6
        .matmul(&inner_v)
        .add(&m6.scale(c(6)))
        .add(&m4.scale(c(4)))
        .add(&m2.scale(c(2)))
        .add(&eye.scale(c(0)));

    // exp(M) ≈ (v - u)^{-1} (v + u)
    let num = v.add(&u);
    let den = v.sub(&u);
    let mut result = den.inverse()?.matmul(&num);
    for _ in 0..s {
        result = result.matmul(&result);
    }
    Ok(result)
}
