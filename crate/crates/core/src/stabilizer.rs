//! Postselected stabilizer (Clifford) simulation.
//!
//! A binary-symplectic tableau tracks the stabilizer group of the state
//! through {H, S, CNOT} gates and *forced* computational-basis measurements.
//! Each forced outcome whose operator anticommutes with some stabilizer
//! contributes an exact factor 1/2 to the record probability; determined
//! outcomes contribute 1 when consistent and kill the record when not.
//! Probabilities are therefore exact powers of two and are kept as integer
//! exponents. An exact-integer dense statevector oracle is included for
//! cross-checking: with this gate set every amplitude is `(a+bi)/√2^h` with
//! integer `a, b`, so Born probabilities are dyadic rationals computed
//! without rounding.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{OperatorMatrix, C64};

// ---------------------------------------------------------------------------
// Pauli strings
// ---------------------------------------------------------------------------

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// A phased Pauli string. Internally stored in XZ form: the operator is
/// `i^p · Π_q X_q^{x_q} Z_q^{z_q}`; the letter Y corresponds to bits
/// `(x, z) = (1, 1)` with `Y = i·X·Z` absorbed into the phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    x: Vec<bool>,
    z: Vec<bool>,
    /// Power of i in XZ form, mod 4.
    phase_pow: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            x: vec![false; n],
            z: vec![false; n],
            phase_pow: 0,
        }
    }

    /// Builds `phase · letters` with `phase = i^{phase_i_power}`.
    pub fn from_letters(phase_i_power: u8, letters: &[Pauli]) -> Self {
        let mut s = Self::identity(letters.len());
        let mut pow = phase_i_power as u32 % 4;
        for (q, &l) in letters.iter().enumerate() {
            match l {
                Pauli::I => {}
                Pauli::X => s.x[q] = true,
                Pauli::Z => s.z[q] = true,
                Pauli::Y => {
                    s.x[q] = true;
                    s.z[q] = true;
                    pow += 1; // Y = i·XZ
                }
            }
        }
        s.phase_pow = (pow % 4) as u8;
        s
    }

    /// A single non-identity letter on qubit `q` of an `n`-qubit register.
    pub fn single(n: usize, q: usize, letter: Pauli) -> Self {
        let mut letters = vec![Pauli::I; n];
        letters[q] = letter;
        Self::from_letters(0, &letters)
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn letter(&self, q: usize) -> Pauli {
        match (self.x[q], self.z[q]) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.num_qubits()).map(|q| self.letter(q)).collect()
    }

    /// The phase in letter form: `i^k` with the per-Y factor removed, so the
    /// operator equals `phase() · Π letters`. Always one of ±1, ±i.
    pub fn phase(&self) -> C64 {
        let y_count = (0..self.num_qubits())
            .filter(|&q| self.x[q] && self.z[q])
            .count() as u32;
        i_power((self.phase_pow as u32 + 4 * y_count - y_count) % 4)
    }

    /// Product `self · other` with exact phase bookkeeping.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::Dimension(
                "Pauli strings act on different register sizes".into(),
            ));
        }
        let n = self.num_qubits();
        let mut out = Self::identity(n);
        // (i^p Π X^{x1}Z^{z1}) (i^q Π X^{x2}Z^{z2}): moving each X^{x2} left
        // past Z^{z1} on the same qubit picks up (−1)^{z1·x2}.
        let mut pow = (self.phase_pow + other.phase_pow) as u32;
        for q in 0..n {
            if self.z[q] && other.x[q] {
                pow += 2;
            }
            out.x[q] = self.x[q] ^ other.x[q];
            out.z[q] = self.z[q] ^ other.z[q];
        }
        out.phase_pow = (pow % 4) as u8;
        Ok(out)
    }

    /// True when the two strings commute.
    pub fn commutes_with(&self, other: &Self) -> bool {
        let mut sym = 0u32;
        for q in 0..self.num_qubits() {
            sym += (self.x[q] & other.z[q]) as u32 + (self.z[q] & other.x[q]) as u32;
        }
        sym % 2 == 0
    }

    /// In-place conjugation `σ ↦ UσU†` for U = H on qubit `q`:
    /// X ↔ Z (and Y ↦ −Y).
    pub fn conjugate_h(&mut self, q: usize) {
        if self.x[q] && self.z[q] {
            self.phase_pow = (self.phase_pow + 2) % 4;
        }
        std::mem::swap(&mut self.x[q], &mut self.z[q]);
    }

    /// Conjugation by S on qubit `q`: X ↦ Y, Y ↦ −X, Z ↦ Z. In XZ form
    /// `X^xZ^z ↦ i^x X^x Z^{x⊕z}`.
    pub fn conjugate_s(&mut self, q: usize) {
        if self.x[q] {
            self.phase_pow = (self.phase_pow + 1) % 4;
        }
        self.z[q] ^= self.x[q];
    }

    /// Conjugation by CNOT with control `c` and target `t`:
    /// X_c ↦ X_cX_t, Z_t ↦ Z_cZ_t; phase-free in XZ form.
    pub fn conjugate_cnot(&mut self, c: usize, t: usize) {
        self.x[t] ^= self.x[c];
        self.z[c] ^= self.z[t];
    }

    /// Dense matrix representation, for small cross-checks.
    pub fn to_matrix(&self) -> OperatorMatrix {
        let n = self.num_qubits();
        let dim = 1usize << n;
        let mut m = Array2::zeros((dim, dim));
        // Π X^x Z^z maps |j⟩ ↦ (−1)^{z·j} |j ⊕ x⟩ (qubit 0 = MSB).
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        for q in 0..n {
            let bit = 1 << (n - 1 - q);
            if self.x[q] {
                xmask |= bit;
            }
            if self.z[q] {
                zmask |= bit;
            }
        }
        let phase = i_power(self.phase_pow as u32);
        for j in 0..dim {
            let sign = if (j & zmask).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[(j ^ xmask, j)] = phase * C64::new(sign, 0.0);
        }
        OperatorMatrix::new(m).expect("finite Pauli matrix")
    }
}

fn i_power(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

// ---------------------------------------------------------------------------
// Circuits
// ---------------------------------------------------------------------------

/// One step of a postselected Clifford circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CliffordStep {
    H(usize),
    S(usize),
    Cnot(usize, usize),
    /// Forced computational-basis measurement of a qubit with the required
    /// outcome bit.
    Force(usize, u8),
}

/// A Clifford circuit with interleaved forced measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordCircuit {
    pub num_qubits: usize,
    pub steps: Vec<CliffordStep>,
}

impl CliffordCircuit {
    pub fn new(num_qubits: usize, steps: Vec<CliffordStep>) -> Result<Self> {
        let c = Self { num_qubits, steps };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        for step in &self.steps {
            let ok = match *step {
                CliffordStep::H(q) | CliffordStep::S(q) => q < self.num_qubits,
                CliffordStep::Cnot(c, t) => c < self.num_qubits && t < self.num_qubits && c != t,
                CliffordStep::Force(q, b) => q < self.num_qubits && b <= 1,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!(
                    "step {step:?} is out of range for {} qubits",
                    self.num_qubits
                )));
            }
        }
        Ok(())
    }

    /// Parses the one-gate-per-line text format:
    /// `H q`, `S q`, `CNOT c t`, `FORCE q b`. Blank lines and `#` comments
    /// are skipped; the register size is the largest index plus one.
    pub fn parse(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        let mut max_q = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.split_whitespace();
            let op = parts.next().unwrap();
            let mut args: Vec<usize> = Vec::new();
            for tok in parts {
                args.push(tok.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("expected an integer, got '{tok}'"),
                })?);
            }
            let step = match (op, args.as_slice()) {
                ("H", [q]) => CliffordStep::H(*q),
                ("S", [q]) => CliffordStep::S(*q),
                ("CNOT", [c, t]) => {
                    if c == t {
                        return Err(Error::Parse {
                            line,
                            message: "CNOT control and target coincide".into(),
                        });
                    }
                    CliffordStep::Cnot(*c, *t)
                }
                ("FORCE", [q, b]) => {
                    if *b > 1 {
                        return Err(Error::Parse {
                            line,
                            message: format!("FORCE outcome must be 0 or 1, got {b}"),
                        });
                    }
                    CliffordStep::Force(*q, *b as u8)
                }
                ("H" | "S", _) => {
                    return Err(Error::Parse {
                        line,
                        message: format!("{op} takes exactly one qubit argument"),
                    })
                }
                ("CNOT", _) => {
                    return Err(Error::Parse {
                        line,
                        message: "CNOT takes exactly two qubit arguments".into(),
                    })
                }
                ("FORCE", _) => {
                    return Err(Error::Parse {
                        line,
                        message: "FORCE takes a qubit and an outcome bit".into(),
                    })
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown operation '{op}'"),
                    })
                }
            };
            match step {
                CliffordStep::H(q) | CliffordStep::S(q) | CliffordStep::Force(q, _) => {
                    max_q = max_q.max(q)
                }
                CliffordStep::Cnot(c, t) => max_q = max_q.max(c).max(t),
            }
            steps.push(step);
        }
        if steps.is_empty() {
            return Err(Error::Parse {
                line: 0,
                message: "circuit text contains no steps".into(),
            });
        }
        Self::new(max_q + 1, steps)
    }
}

// ---------------------------------------------------------------------------
// Record probabilities
// ---------------------------------------------------------------------------

/// An exact dyadic record probability: either zero or `2^{−exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicProbability {
    pub zero: bool,
    pub exponent: u32,
}

impl DyadicProbability {
    pub fn one() -> Self {
        Self {
            zero: false,
            exponent: 0,
        }
    }

    pub fn zero() -> Self {
        Self {
            zero: true,
            exponent: 0,
        }
    }

    pub fn halve(&mut self) {
        if !self.zero {
            self.exponent += 1;
        }
    }

    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            (0.5f64).powi(self.exponent as i32)
        }
    }
}

// ---------------------------------------------------------------------------
// Tableau
// ---------------------------------------------------------------------------

/// Outcome classification of one forced measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcedOutcome {
    /// The measured operator anticommuted with a stabilizer; Born factor 1/2.
    Random,
    /// The outcome was already determined and agrees with the forced bit.
    Determined,
}

/// Binary-symplectic stabilizer tableau with destabilizers (rows `0..n`)
/// and stabilizers (rows `n..2n`), plus sign bits.
#[derive(Debug, Clone)]
pub struct StabilizerTableau {
    n: usize,
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    r: Vec<bool>,
}

impl StabilizerTableau {
    /// The all-zeros state: destabilizer `i` = X_i, stabilizer `i` = Z_i.
    pub fn new(n: usize) -> Self {
        let mut t = Self {
            n,
            x: vec![vec![false; n]; 2 * n],
            z: vec![vec![false; n]; 2 * n],
            r: vec![false; 2 * n],
        };
        for i in 0..n {
            t.x[i][i] = true;
            t.z[n + i][i] = true;
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Stabilizer generator `i` as a phased Pauli string (sign ±1).
    pub fn stabilizer(&self, i: usize) -> PauliString {
        self.row_pauli(self.n + i)
    }

    pub fn destabilizer(&self, i: usize) -> PauliString {
        self.row_pauli(i)
    }

    fn row_pauli(&self, row: usize) -> PauliString {
        // Row sign convention: operator = (−1)^r Π letters, i.e. the letter
        // phase is ±1; in XZ form each Y contributes i.
        let y_count = (0..self.n)
            .filter(|&q| self.x[row][q] && self.z[row][q])
            .count() as u32;
        let pow = (if self.r[row] { 2 } else { 0 }) + y_count;
        PauliString {
            x: self.x[row].clone(),
            z: self.z[row].clone(),
            phase_pow: (pow % 4) as u8,
        }
    }

    pub fn apply_h(&mut self, q: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][q] & self.z[i][q];
            let tmp = self.x[i][q];
            self.x[i][q] = self.z[i][q];
            self.z[i][q] = tmp;
        }
    }

    pub fn apply_s(&mut self, q: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][q] & self.z[i][q];
            self.z[i][q] ^= self.x[i][q];
        }
    }

    pub fn apply_cnot(&mut self, c: usize, t: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][c] & self.z[i][t] & (self.x[i][t] ^ self.z[i][c] ^ true);
            self.x[i][t] ^= self.x[i][c];
            self.z[i][c] ^= self.z[i][t];
        }
    }

    /// The exponent-of-i contribution when multiplying single-qubit letters
    /// in XZ row form (the standard tableau phase function).
    fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
        match (x1, z1) {
            (false, false) => 0,
            (true, true) => z2 as i32 - x2 as i32,
            (true, false) => (z2 as i32) * (2 * (x2 as i32) - 1),
            (false, true) => (x2 as i32) * (1 - 2 * (z2 as i32)),
        }
    }

    /// Row `h` ← row `h` · row `i` (stabilizer product with sign tracking).
    fn rowsum(&mut self, h: usize, i: usize) {
        let mut phase = 2 * (self.r[h] as i32) + 2 * (self.r[i] as i32);
        for q in 0..self.n {
            phase += Self::g(self.x[i][q], self.z[i][q], self.x[h][q], self.z[h][q]);
            self.x[h][q] ^= self.x[i][q];
            self.z[h][q] ^= self.z[i][q];
        }
        let phase = phase.rem_euclid(4);
        debug_assert!(phase % 2 == 0, "rowsum produced imaginary sign");
        self.r[h] = phase == 2;
    }

    /// Forces the Z-measurement of qubit `q` to outcome `b`. Returns whether
    /// the outcome was random (factor 1/2) or determined (factor 1); a
    /// determined-and-contradictory outcome is a well-formedness error.
    pub fn force_measure(&mut self, q: usize, b: u8) -> Result<ForcedOutcome> {
        if q >= self.n {
            return Err(Error::InvalidArgument(format!("qubit {q} out of range")));
        }
        if b > 1 {
            return Err(Error::InvalidArgument(format!("outcome must be 0 or 1, got {b}")));
        }
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&i| self.x[i][q]) {
            // Random outcome: update the group and force the sign. The
            // pivot's destabilizer partner (row p−n) anticommutes with the
            // pivot and is overwritten below, so it is skipped.
            for i in 0..2 * n {
                if i != p && i != p - n && self.x[i][q] {
                    self.rowsum(i, p);
                }
            }
            // The old stabilizer row becomes the new destabilizer.
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.r[p - n] = self.r[p];
            self.x[p] = vec![false; n];
            self.z[p] = vec![false; n];
            self.z[p][q] = true;
            self.r[p] = b == 1;
            Ok(ForcedOutcome::Random)
        } else {
            // Determined: accumulate the product of stabilizers indicated by
            // the destabilizer rows that anticommute with Z_q into a scratch
            // row and read off its sign.
            let mut sx = vec![false; n];
            let mut sz = vec![false; n];
            let mut phase = 0i32;
            for i in 0..n {
                if self.x[i][q] {
                    let row = i + n;
                    phase += 2 * (self.r[row] as i32);
                    for k in 0..n {
                        phase += Self::g(sx[k], sz[k], self.x[row][k], self.z[row][k]);
                        sx[k] ^= self.x[row][k];
                        sz[k] ^= self.z[row][k];
                    }
                }
            }
            let determined = if phase.rem_euclid(4) == 2 { 1u8 } else { 0u8 };
            if determined == b {
                Ok(ForcedOutcome::Determined)
            } else {
                Err(Error::WellFormedness(format!(
                    "postselection on qubit {q} = {b} has probability zero: the \
                     outcome is determined to be {determined}"
                )))
            }
        }
    }
}

/// Runs a postselected Clifford circuit from |0…0⟩. The record probability
/// is an exact power of two: one factor 1/2 per random forced outcome.
/// A contradictory forced outcome (probability-zero record) is an error.
pub fn run_postselected_clifford(
    circuit: &CliffordCircuit,
) -> Result<(StabilizerTableau, DyadicProbability)> {
    circuit.validate()?;
    let mut tableau = StabilizerTableau::new(circuit.num_qubits);
    let mut prob = DyadicProbability::one();
    for step in &circuit.steps {
        match *step {
            CliffordStep::H(q) => tableau.apply_h(q),
            CliffordStep::S(q) => tableau.apply_s(q),
            CliffordStep::Cnot(c, t) => tableau.apply_cnot(c, t),
            CliffordStep::Force(q, b) => {
                if tableau.force_measure(q, b)? == ForcedOutcome::Random {
                    prob.halve();
                }
            }
        }
    }
    Ok((tableau, prob))
}

/// Conditional probability of measuring `query_bits` (qubit, outcome) after
/// the circuit, given that every interleaved forced outcome succeeded.
/// Exact dyadic rational; a contradictory query yields zero (a contradictory
/// *record* is an error, as in [`run_postselected_clifford`]).
pub fn postselected_marginal(
    circuit: &CliffordCircuit,
    query_bits: &[(usize, u8)],
) -> Result<DyadicProbability> {
    let (tableau, _record) = run_postselected_clifford(circuit)?;
    let mut tableau = tableau;
    let mut prob = DyadicProbability::one();
    for &(q, b) in query_bits {
        match tableau.force_measure(q, b) {
            Ok(ForcedOutcome::Random) => prob.halve(),
            Ok(ForcedOutcome::Determined) => {}
            Err(Error::WellFormedness(_)) => return Ok(DyadicProbability::zero()),
            Err(e) => return Err(e),
        }
    }
    Ok(prob)
}

// ---------------------------------------------------------------------------
// Effective conjugation (Pauli branching under one postselected meter)
// ---------------------------------------------------------------------------

/// One branch of an effective conjugation: `weight · string`.
#[derive(Debug, Clone)]
pub struct WeightedPauli {
    pub weight: f64,
    pub string: PauliString,
}

fn conjugate_through(mut sigma: PauliString, gates: &[CliffordStep]) -> Result<PauliString> {
    for step in gates {
        match *step {
            CliffordStep::H(q) => sigma.conjugate_h(q),
            CliffordStep::S(q) => sigma.conjugate_s(q),
            CliffordStep::Cnot(c, t) => sigma.conjugate_cnot(c, t),
            CliffordStep::Force(..) => {
                return Err(Error::InvalidArgument(
                    "effective conjugation takes a measurement-free gate sequence".into(),
                ))
            }
        }
    }
    Ok(sigma)
}

/// Conjugates a system Pauli `σ` through the effective operator
/// `C = ⟨0|U|0⟩` of a circuit `U` on system ⊗ one meter qubit (the meter
/// prepared and postselected in |0⟩):
/// `CσC† = (1/2)(⟨0|σ₁|0⟩ + ⟨0|σ₂|0⟩)` with `σ₁ = U(σ⊗I)U†` and
/// `σ₂ = U(σ⊗Z)U†`. Branches whose meter letter is X or Y vanish; at most
/// two weighted system strings survive (an empty list is the zero operator).
pub fn effective_conjugation(
    gates: &[CliffordStep],
    meter: usize,
    sigma: &PauliString,
) -> Result<Vec<WeightedPauli>> {
    let n_total = sigma.num_qubits() + 1;
    if meter >= n_total {
        return Err(Error::InvalidArgument(format!(
            "meter qubit {meter} out of range for {n_total} qubits"
        )));
    }
    // Lift σ to system ⊗ meter: identity or Z on the meter wire.
    let lift = |meter_letter: Pauli| -> PauliString {
        let mut letters = Vec::with_capacity(n_total);
        let mut sys_iter = sigma.letters().into_iter();
        for q in 0..n_total {
            if q == meter {
                letters.push(meter_letter);
            } else {
                letters.push(sys_iter.next().unwrap());
            }
        }
        let mut s = PauliString::from_letters(0, &letters);
        // Carry σ's phase through.
        let pre = sigma.phase();
        let pow = match (pre.re, pre.im) {
            (re, _) if re > 0.5 => 0,
            (_, im) if im > 0.5 => 1,
            (re, _) if re < -0.5 => 2,
            _ => 3,
        };
        s.phase_pow = (s.phase_pow + pow) % 4;
        s
    };
    let mut out: Vec<WeightedPauli> = Vec::new();
    for meter_letter in [Pauli::I, Pauli::Z] {
        let conj = conjugate_through(lift(meter_letter), gates)?;
        match conj.letter(meter) {
            Pauli::X | Pauli::Y => continue, // ⟨0|X|0⟩ = ⟨0|Y|0⟩ = 0
            Pauli::I | Pauli::Z => {}        // ⟨0|I|0⟩ = ⟨0|Z|0⟩ = 1
        }
        // Strip the meter wire.
        let sys_letters: Vec<Pauli> = (0..n_total)
            .filter(|&q| q != meter)
            .map(|q| conj.letter(q))
            .collect();
        let phase = conj.phase();
        if phase.im.abs() > 0.5 {
            return Err(Error::WellFormedness(
                "Hermitian input produced an imaginary branch phase".into(),
            ));
        }
        let weight = 0.5 * phase.re;
        let string = PauliString::from_letters(0, &sys_letters);
        if let Some(existing) = out.iter_mut().find(|w| w.string == string) {
            existing.weight += weight;
            continue;
        }
        out.push(WeightedPauli { weight, string });
    }
    out.retain(|w| w.weight != 0.0);
    Ok(out)
}

/// The meter-averaged (unconditional) conjugation: tracing out the meter
/// keeps only `σ₁ = U(σ⊗I)U†`, and only when its meter letter is I — a
/// single Pauli term, never a branching sum.
pub fn unconditional_conjugation(
    gates: &[CliffordStep],
    meter: usize,
    sigma: &PauliString,
) -> Result<Option<WeightedPauli>> {
    let branches = effective_conjugation(gates, meter, sigma)?;
    // Recompute σ₁ directly to classify its meter letter.
    let n_total = sigma.num_qubits() + 1;
    let mut letters = Vec::with_capacity(n_total);
    let mut sys_iter = sigma.letters().into_iter();
    for q in 0..n_total {
        if q == meter {
            letters.push(Pauli::I);
        } else {
            letters.push(sys_iter.next().unwrap());
        }
    }
    let conj = conjugate_through(PauliString::from_letters(0, &letters), gates)?;
    if conj.letter(meter) != Pauli::I {
        return Ok(None); // Tr_B kills the term entirely.
    }
    let sys_letters: Vec<Pauli> = (0..n_total)
        .filter(|&q| q != meter)
        .map(|q| conj.letter(q))
        .collect();
    let phase = conj.phase();
    let _ = branches;
    Ok(Some(WeightedPauli {
        weight: phase.re * sigma.phase().re,
        string: PauliString::from_letters(0, &sys_letters),
    }))
}

// ---------------------------------------------------------------------------
// Exact dense oracle
// ---------------------------------------------------------------------------

/// Exact-integer statevector for {H, S, CNOT, FORCE} circuits: amplitudes
/// are `(re + i·im)/√2^{h}` with integer parts, so every probability is an
/// exactly-computed dyadic rational.
#[derive(Debug, Clone)]
pub struct ExactState {
    n: usize,
    /// Power of √2 in the common denominator.
    h: u32,
    re: Vec<i128>,
    im: Vec<i128>,
}

/// An exact dyadic rational `num / 2^{denom_log2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicFraction {
    pub num: i128,
    pub denom_log2: u32,
}

impl DyadicFraction {
    pub fn value(&self) -> f64 {
        self.num as f64 * (0.5f64).powi(self.denom_log2 as i32)
    }

    /// Exact equality with a power-of-two probability.
    pub fn equals_dyadic(&self, p: DyadicProbability) -> bool {
        if p.zero {
            return self.num == 0;
        }
        // num / 2^d == 2^{-e}  ⇔  num == 2^{d−e} (requires d ≥ e).
        self.denom_log2 >= p.exponent
            && self.num == 1i128 << (self.denom_log2 - p.exponent)
    }
}

impl ExactState {
    pub fn zero_state(n: usize) -> Self {
        let dim = 1usize << n;
        let mut re = vec![0i128; dim];
        re[0] = 1;
        Self {
            n,
            h: 0,
            re,
            im: vec![0i128; dim],
        }
    }

    fn bit(&self, q: usize) -> usize {
        1usize << (self.n - 1 - q)
    }

    pub fn apply(&mut self, step: CliffordStep) {
        match step {
            CliffordStep::H(q) => {
                let bit = self.bit(q);
                for i in 0..self.re.len() {
                    if i & bit == 0 {
                        let j = i | bit;
                        let (r0, r1) = (self.re[i], self.re[j]);
                        let (m0, m1) = (self.im[i], self.im[j]);
                        self.re[i] = r0 + r1;
                        self.im[i] = m0 + m1;
                        self.re[j] = r0 - r1;
                        self.im[j] = m0 - m1;
                    }
                }
                self.h += 1;
            }
            CliffordStep::S(q) => {
                let bit = self.bit(q);
                for i in 0..self.re.len() {
                    if i & bit != 0 {
                        let (r, m) = (self.re[i], self.im[i]);
                        self.re[i] = -m;
                        self.im[i] = r;
                    }
                }
            }
            CliffordStep::Cnot(c, t) => {
                let (cb, tb) = (self.bit(c), self.bit(t));
                for i in 0..self.re.len() {
                    if i & cb != 0 && i & tb == 0 {
                        let j = i | tb;
                        self.re.swap(i, j);
                        self.im.swap(i, j);
                    }
                }
            }
            CliffordStep::Force(q, b) => {
                let bit = self.bit(q);
                for i in 0..self.re.len() {
                    let set = (i & bit != 0) as u8;
                    if set != b {
                        self.re[i] = 0;
                        self.im[i] = 0;
                    }
                }
            }
        }
    }

    /// Squared norm as an exact dyadic fraction.
    pub fn norm_sq(&self) -> DyadicFraction {
        let num: i128 = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, m)| r * r + m * m)
            .sum();
        DyadicFraction {
            num,
            denom_log2: self.h,
        }
    }
}

/// Exact dense record probability of a postselected Clifford circuit: the
/// probability that every interleaved forced outcome occurs.
pub fn exact_dense_record(circuit: &CliffordCircuit) -> Result<DyadicFraction> {
    circuit.validate()?;
    let h_count = circuit
        .steps
        .iter()
        .filter(|s| matches!(s, CliffordStep::H(_)))
        .count();
    if h_count > 60 {
        return Err(Error::InvalidArgument(
            "exact dense oracle limited to 60 Hadamards (integer overflow guard)".into(),
        ));
    }
    let mut state = ExactState::zero_state(circuit.num_qubits);
    for &step in &circuit.steps {
        state.apply(step);
    }
    Ok(state.norm_sq())
}

/// Exact dense conditional probability of `query_bits` given the record,
/// as a pair (joint, record) of dyadic fractions sharing a denominator.
pub fn exact_dense_marginal(
    circuit: &CliffordCircuit,
    query_bits: &[(usize, u8)],
) -> Result<(DyadicFraction, DyadicFraction)> {
    let record = exact_dense_record(circuit)?;
    let mut with_query = circuit.clone();
    for &(q, b) in query_bits {
        with_query.steps.push(CliffordStep::Force(q, b));
    }
    let joint = exact_dense_record(&with_query)?;
    Ok((joint, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_circuit(
        rng: &mut ChaCha8Rng,
        n: usize,
        gates: usize,
        forces: usize,
    ) -> CliffordCircuit {
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
                CliffordStep::Force(rng.gen_range(0..n), rng.gen_range(0..2u8) as u8),
            );
        }
        CliffordCircuit::new(n, steps).unwrap()
    }

    #[test]
    fn pauli_algebra() {
        let x = PauliString::single(1, 0, Pauli::X);
        let z = PauliString::single(1, 0, Pauli::Z);
        let y = PauliString::single(1, 0, Pauli::Y);
        // XZ = −iY.
        let xz = x.mul(&z).unwrap();
        assert_eq!(xz.letter(0), Pauli::Y);
        assert!((xz.phase() - C64::new(0.0, -1.0)).norm() < 1e-15);
        // ZX = iY.
        let zx = z.mul(&x).unwrap();
        assert!((zx.phase() - C64::new(0.0, 1.0)).norm() < 1e-15);
        // Y² = I.
        let yy = y.mul(&y).unwrap();
        assert_eq!(yy.letter(0), Pauli::I);
        assert!((yy.phase() - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(!x.commutes_with(&z));
        assert!(x.commutes_with(&x));
        // Dense agreement: (XZ) matrix equals X·Z.
        let lhs = xz.to_matrix();
        let rhs = x.to_matrix().matmul(&z.to_matrix());
        assert!(lhs.sub(&rhs).max_abs_entry() < 1e-15);
    }

    #[test]
    fn pauli_conjugation_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=3usize);
            let letters: Vec<Pauli> = (0..n)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Pauli::I,
                    1 => Pauli::X,
                    2 => Pauli::Y,
                    _ => Pauli::Z,
                })
                .collect();
            let mut s = PauliString::from_letters(rng.gen_range(0..4u8), &letters);
            let dense_before = s.to_matrix();
            let (gate_mat, apply): (OperatorMatrix, Box<dyn Fn(&mut PauliString)>) =
                match rng.gen_range(0..3) {
                    0 => {
                        let q = rng.gen_range(0..n);
                        let h = OperatorMatrix::from_real_rows(&[
                            vec![1.0, 1.0],
                            vec![1.0, -1.0],
                        ])
                        .unwrap()
                        .scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
                        (
                            crate::matrix::embed(&h, &[q], n).unwrap(),
                            Box::new(move |p: &mut PauliString| p.conjugate_h(q)),
                        )
                    }
                    1 => {
                        let q = rng.gen_range(0..n);
                        let sg = OperatorMatrix::from_rows(&[
                            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                            vec![C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
                        ])
                        .unwrap();
                        (
                            crate::matrix::embed(&sg, &[q], n).unwrap(),
                            Box::new(move |p: &mut PauliString| p.conjugate_s(q)),
                        )
                    }
                    _ => {
                        if n < 2 {
                            continue;
                        }
                        let c = rng.gen_range(0..n);
                        let mut t = rng.gen_range(0..n);
                        while t == c {
                            t = rng.gen_range(0..n);
                        }
                        let cx = OperatorMatrix::from_real_rows(&[
                            vec![1.0, 0.0, 0.0, 0.0],
                            vec![0.0, 1.0, 0.0, 0.0],
                            vec![0.0, 0.0, 0.0, 1.0],
                            vec![0.0, 0.0, 1.0, 0.0],
                        ])
                        .unwrap();
                        (
                            crate::matrix::embed(&cx, &[c, t], n).unwrap(),
                            Box::new(move |p: &mut PauliString| p.conjugate_cnot(c, t)),
                        )
                    }
                };
            apply(&mut s);
            let expect = gate_mat.matmul(&dense_before).matmul(&gate_mat.adjoint());
            assert!(
                s.to_matrix().sub(&expect).max_abs_entry() < 1e-12,
                "conjugation mismatch"
            );
        }
    }

    #[test]
    fn forced_measurement_examples() {
        // Fresh |0⟩ forced to 0 → probability 1.
        let c = CliffordCircuit::new(1, vec![CliffordStep::Force(0, 0)]).unwrap();
        let (_, p) = run_postselected_clifford(&c).unwrap();
        assert_eq!(p, DyadicProbability::one());
        // Fresh |0⟩ forced to 1 → contradiction.
        let c = CliffordCircuit::new(1, vec![CliffordStep::Force(0, 1)]).unwrap();
        assert!(matches!(
            run_postselected_clifford(&c),
            Err(Error::WellFormedness(_))
        ));
        // H then force 1 → probability 1/2.
        let c = CliffordCircuit::new(
            1,
            vec![CliffordStep::H(0), CliffordStep::Force(0, 1)],
        )
        .unwrap();
        let (_, p) = run_postselected_clifford(&c).unwrap();
        assert_eq!(p.value(), 0.5);
        // Bell pair, force both qubits 0 → 1/2 (second determined).
        let c = CliffordCircuit::new(
            2,
            vec![
                CliffordStep::H(0),
                CliffordStep::Cnot(0, 1),
                CliffordStep::Force(0, 0),
                CliffordStep::Force(1, 0),
            ],
        )
        .unwrap();
        let (_, p) = run_postselected_clifford(&c).unwrap();
        assert_eq!(p.value(), 0.5);
        // Bell pair with contradictory second outcome → zero record.
        let c = CliffordCircuit::new(
            2,
            vec![
                CliffordStep::H(0),
                CliffordStep::Cnot(0, 1),
                CliffordStep::Force(0, 0),
                CliffordStep::Force(1, 1),
            ],
        )
        .unwrap();
        assert!(run_postselected_clifford(&c).is_err());
    }

    #[test]
    fn record_probability_counts_random_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(2..=5);
            let circuit = random_circuit(&mut rng, n, 15, 3);
            let mut tableau = StabilizerTableau::new(circuit.num_qubits);
            let mut random = 0u32;
            let mut contradictory = false;
            for step in &circuit.steps {
                match *step {
                    CliffordStep::H(q) => tableau.apply_h(q),
                    CliffordStep::S(q) => tableau.apply_s(q),
                    CliffordStep::Cnot(c, t) => tableau.apply_cnot(c, t),
                    CliffordStep::Force(q, b) => match tableau.force_measure(q, b) {
                        Ok(ForcedOutcome::Random) => random += 1,
                        Ok(ForcedOutcome::Determined) => {}
                        Err(_) => {
                            contradictory = true;
                            break;
                        }
                    },
                }
            }
            match run_postselected_clifford(&circuit) {
                Ok((_, p)) => {
                    assert!(!contradictory);
                    assert_eq!(p.exponent, random);
                }
                Err(_) => assert!(contradictory),
            }
        }
    }

    #[test]
    fn tableau_agrees_with_exact_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut zero_records = 0;
        for _ in 0..200 {
            let n = rng.gen_range(1..=8usize);
            let gates = rng.gen_range(1..=40usize);
            let forces = rng.gen_range(0..=4usize);
            let circuit = random_circuit(&mut rng, n, gates, forces);
            let dense = exact_dense_record(&circuit).unwrap();
            match run_postselected_clifford(&circuit) {
                Ok((_, p)) => assert!(
                    dense.equals_dyadic(p),
                    "dense {dense:?} vs tableau {p:?}"
                ),
                Err(_) => {
                    assert_eq!(dense.num, 0, "tableau claims zero but dense {dense:?}");
                    zero_records += 1;
                }
            }
        }
        // Sanity: both branches exercised.
        assert!(zero_records > 0 && zero_records < 200);
    }

    #[test]
    fn marginals_agree_with_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(321);
        let mut checked = 0;
        while checked < 60 {
            let n = rng.gen_range(2..=6usize);
            let gates = rng.gen_range(5..=30);
            let circuit = random_circuit(&mut rng, n, gates, 2);
            let queries: Vec<(usize, u8)> = (0..rng.gen_range(1..=2))
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..2u8)))
                .collect();
            let Ok(cond) = postselected_marginal(&circuit, &queries) else {
                continue; // zero record
            };
            let (joint, record) = exact_dense_marginal(&circuit, &queries).unwrap();
            assert!(record.num > 0);
            // cond == joint/record exactly: joint·2^e == record (or joint == 0).
            if cond.zero {
                assert_eq!(joint.num, 0);
            } else {
                assert_eq!(joint.num << cond.exponent, record.num);
            }
            checked += 1;
        }
    }

    #[test]
    fn ghz_marginal_is_deterministic() {
        // GHZ on 3 qubits; condition qubit 0 = 0 → qubit 2 = 0 with
        // probability 1.
        let circuit = CliffordCircuit::new(
            3,
            vec![
                CliffordStep::H(0),
                CliffordStep::Cnot(0, 1),
                CliffordStep::Cnot(1, 2),
                CliffordStep::Force(0, 0),
            ],
        )
        .unwrap();
        let p = postselected_marginal(&circuit, &[(2, 0)]).unwrap();
        assert_eq!(p, DyadicProbability::one());
        let p = postselected_marginal(&circuit, &[(2, 1)]).unwrap();
        assert!(p.zero);
    }

    #[test]
    fn effective_conjugation_cnot_examples() {
        // System qubit 0 is the CNOT control, meter qubit 1 the target:
        // C = ⟨0|U|0⟩ = |0⟩⟨0| on the system.
        let gates = [CliffordStep::Cnot(0, 1)];
        // CZC† = (Z+I)/2.
        let z = PauliString::single(1, 0, Pauli::Z);
        let branches = effective_conjugation(&gates, 1, &z).unwrap();
        assert_eq!(branches.len(), 2);
        let mut weights = std::collections::HashMap::new();
        for b in &branches {
            weights.insert(b.string.letter(0), b.weight);
        }
        assert_eq!(weights[&Pauli::Z], 0.5);
        assert_eq!(weights[&Pauli::I], 0.5);
        // Dense confirmation: |0⟩⟨0| Z |0⟩⟨0| = (Z+I)/2 · scaled... directly:
        let proj = OperatorMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let expect = proj.matmul(&z.to_matrix()).matmul(&proj);
        let mut got = OperatorMatrix::zeros(2);
        for b in &branches {
            got = got.add(&b.string.to_matrix().scale(C64::new(b.weight, 0.0)));
        }
        assert!(got.sub(&expect).max_abs_entry() < 1e-15);
        // CXC† = 0.
        let x = PauliString::single(1, 0, Pauli::X);
        assert!(effective_conjugation(&gates, 1, &x).unwrap().is_empty());
        // U = I: σ unchanged with weight 1.
        let branches = effective_conjugation(&[], 1, &x).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].weight, 1.0);
        assert_eq!(branches[0].string.letter(0), Pauli::X);
    }

    #[test]
    fn effective_conjugation_matches_dense_kraus() {
        // Random gate circuits on 2 system qubits + meter: CσC† from tableau
        // branching equals the dense computation with C = ⟨0|U|0⟩.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n_sys = 2;
        let n_tot = n_sys + 1;
        let meter = n_sys; // last qubit
        for _ in 0..60 {
            let gates: Vec<CliffordStep> = (0..rng.gen_range(1..=12))
                .map(|_| match rng.gen_range(0..3) {
                    0 => CliffordStep::H(rng.gen_range(0..n_tot)),
                    1 => CliffordStep::S(rng.gen_range(0..n_tot)),
                    _ => {
                        let c = rng.gen_range(0..n_tot);
                        let mut t = rng.gen_range(0..n_tot);
                        while t == c {
                            t = rng.gen_range(0..n_tot);
                        }
                        CliffordStep::Cnot(c, t)
                    }
                })
                .collect();
            let letters: Vec<Pauli> = (0..n_sys)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Pauli::I,
                    1 => Pauli::X,
                    2 => Pauli::Y,
                    _ => Pauli::Z,
                })
                .collect();
            let sigma = PauliString::from_letters(0, &letters);
            let branches = effective_conjugation(&gates, meter, &sigma).unwrap();
            assert!(branches.len() <= 2);
            // Dense: U as matrix, C = ⟨0_meter|U|0_meter⟩ (meter is LSB).
            let mut u = OperatorMatrix::identity(1 << n_tot);
            for g in &gates {
                let gm = match *g {
                    CliffordStep::H(q) => crate::matrix::embed(
                        &OperatorMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]])
                            .unwrap()
                            .scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
                        &[q],
                        n_tot,
                    )
                    .unwrap(),
                    CliffordStep::S(q) => crate::matrix::embed(
                        &OperatorMatrix::from_rows(&[
                            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                            vec![C64::new(0.0, 0.0), C64::new(0.0, 1.0)],
                        ])
                        .unwrap(),
                        &[q],
                        n_tot,
                    )
                    .unwrap(),
                    CliffordStep::Cnot(c, t) => crate::matrix::embed(
                        &OperatorMatrix::from_real_rows(&[
                            vec![1.0, 0.0, 0.0, 0.0],
                            vec![0.0, 1.0, 0.0, 0.0],
                            vec![0.0, 0.0, 0.0, 1.0],
                            vec![0.0, 0.0, 1.0, 0.0],
                        ])
                        .unwrap(),
                        &[c, t],
                        n_tot,
                    )
                    .unwrap(),
                    CliffordStep::Force(..) => unreachable!(),
                };
                u = gm.matmul(&u);
            }
            // Meter = last qubit = least-significant amplitude bit.
            let d_sys = 1 << n_sys;
            let mut c_mat = Array2::zeros((d_sys, d_sys));
            for i in 0..d_sys {
                for j in 0..d_sys {
                    c_mat[(i, j)] = u.entry(i << 1, j << 1);
                }
            }
            let c_mat = OperatorMatrix::new(c_mat).unwrap();
            let expect = c_mat
                .matmul(&sigma.to_matrix())
                .matmul(&c_mat.adjoint());
            let mut got = OperatorMatrix::zeros(d_sys);
            for b in &branches {
                got = got.add(&b.string.to_matrix().scale(C64::new(b.weight, 0.0)));
            }
            assert!(
                got.sub(&expect).max_abs_entry() < 1e-12,
                "branching mismatch"
            );
        }
    }

    #[test]
    fn unconditional_conjugation_never_branches() {
        // Averaging the meter gives a single Pauli term (or zero): compare
        // against (1/2)Σ_b ⟨b|U(σ⊗I)U†|b⟩ densely.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n_sys = 2;
        let n_tot = 3;
        for _ in 0..40 {
            let gates: Vec<CliffordStep> = (0..rng.gen_range(1..=10))
                .map(|_| match rng.gen_range(0..3) {
                    0 => CliffordStep::H(rng.gen_range(0..n_tot)),
                    1 => CliffordStep::S(rng.gen_range(0..n_tot)),
                    _ => {
                        let c = rng.gen_range(0..n_tot);
                        let mut t = rng.gen_range(0..n_tot);
                        while t == c {
                            t = rng.gen_range(0..n_tot);
                        }
                        CliffordStep::Cnot(c, t)
                    }
                })
                .collect();
            let letters: Vec<Pauli> = (0..n_sys)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Pauli::I,
                    1 => Pauli::X,
                    2 => Pauli::Y,
                    _ => Pauli::Z,
                })
                .collect();
            let sigma = PauliString::from_letters(0, &letters);
            let single = unconditional_conjugation(&gates, n_sys, &sigma).unwrap();
            // Dense partial trace over the meter (last qubit, LSB).
            let mut lifted = {
                let mut ls = letters.clone();
                ls.push(Pauli::I);
                PauliString::from_letters(0, &ls)
            };
            for g in &gates {
                match *g {
                    CliffordStep::H(q) => lifted.conjugate_h(q),
                    CliffordStep::S(q) => lifted.conjugate_s(q),
                    CliffordStep::Cnot(c, t) => lifted.conjugate_cnot(c, t),
                    CliffordStep::Force(..) => unreachable!(),
                }
            }
            let tau = lifted.to_matrix();
            let d_sys = 1 << n_sys;
            let mut traced = Array2::zeros((d_sys, d_sys));
            for i in 0..d_sys {
                for j in 0..d_sys {
                    traced[(i, j)] =
                        (tau.entry(i << 1, j << 1) + tau.entry((i << 1) | 1, (j << 1) | 1))
                            * C64::new(0.5, 0.0);
                }
            }
            let traced = OperatorMatrix::new(traced).unwrap();
            let got = match &single {
                Some(w) => w.string.to_matrix().scale(C64::new(w.weight, 0.0)),
                None => OperatorMatrix::zeros(d_sys),
            };
            assert!(got.sub(&traced).max_abs_entry() < 1e-12);
        }
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let text = "# bell pair\nH 0\nCNOT 0 1\nFORCE 0 0\nFORCE 1 0\n";
        let circuit = CliffordCircuit::parse(text).unwrap();
        assert_eq!(circuit.num_qubits, 2);
        assert_eq!(circuit.steps.len(), 4);
        let (_, p) = run_postselected_clifford(&circuit).unwrap();
        assert_eq!(p.value(), 0.5);

        for (bad, expect_line) in [
            ("H 0\nNOPE 1\n", 2),
            ("H\n", 1),
            ("CNOT 0 0\n", 1),
            ("FORCE 0 2\n", 1),
            ("H x\n", 1),
            ("H 0\nCNOT 1\n", 2),
        ] {
            match CliffordCircuit::parse(bad) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expect_line, "{bad:?}"),
                other => panic!("expected parse error for {bad:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn dense_oracle_is_exact_on_known_states() {
        // |+⟩ record probability after FORCE 1: exactly 1/2.
        let c = CliffordCircuit::parse("H 0\nFORCE 0 1\n").unwrap();
        let f = exact_dense_record(&c).unwrap();
        assert_eq!(f.num, 1 << (f.denom_log2 - 1));
        // GHZ record after forcing all three to 1: 1/2.
        let c =
            CliffordCircuit::parse("H 0\nCNOT 0 1\nCNOT 1 2\nFORCE 0 1\nFORCE 1 1\nFORCE 2 1\n")
                .unwrap();
        let f = exact_dense_record(&c).unwrap();
        assert!(f.equals_dyadic(DyadicProbability {
            zero: false,
            exponent: 1
        }));
    }
}
