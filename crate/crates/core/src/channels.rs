//! Completely positive maps `M_{d_in} → M_{d_out}`.
//!
//! A [`CPMap`] is stored by its Choi matrix
//! `X = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` (input index outer), so
//! `X[(i·d_out + k), (j·d_out + l)] = Φ(|i⟩⟨j|)[k, l]`. Complete positivity is
//! exactly `X ⪰ 0`. A Kraus form is derived lazily from the eigendecomposition
//! of `X` and cached; it only serves to speed up [`CPMap::apply`].
//!
//! The named families (CQ, QC, Hadamard, ...) remember how they were built in
//! [`Structure`], which is what the theorem checks key on.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matlin::{kron, ComplexMatrix, HermitianMatrix, MatrixJson, C64};
use crate::rng::{complex_normal, haar_isometry, rng_from_seed};

/// Largest Choi dimension `d_in·d_out` a tensor product may produce by default.
pub const DEFAULT_CHOI_DIM_CAP: usize = 4096;

/// Kraus operators are kept for Choi eigenvalues above this fraction of `‖X‖_∞`.
pub const KRAUS_CUTOFF: f64 = 1e-12;

/// Tolerance of the trace-preserving and unital predicates.
pub const PREDICATE_TOL: f64 = 1e-10;

// Above this Choi dimension the Kraus cache is only used if a constructor
// supplied it; the eigendecomposition is not worth it.
const LAZY_KRAUS_MAX_CHOI_DIM: usize = 256;

/// How a map was constructed. Structural, not detected: a general map whose
/// Choi matrix happens to be CQ-shaped is still `General`.
#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    General,
    Identity,
    Trace,
    /// `Φ(M) = Σ_k ⟨k|M|k⟩ R_k`.
    Cq {
        states: Vec<HermitianMatrix>,
    },
    /// `E(A) = Σ_k Tr(X_k A) |k⟩⟨k|`.
    Qc {
        effects: Vec<HermitianMatrix>,
    },
    /// `E(A) = Σ_k Tr(X_k A) R_k`.
    EntanglementBreaking {
        effects: Vec<HermitianMatrix>,
        states: Vec<HermitianMatrix>,
    },
    /// Entrywise product with `C`.
    Hadamard {
        c: HermitianMatrix,
    },
    Depolarizing {
        lambda: f64,
    },
}

impl Structure {
    pub fn family(&self) -> &'static str {
        match self {
            Structure::General => "general",
            Structure::Identity => "identity",
            Structure::Trace => "trace",
            Structure::Cq { .. } => "cq",
            Structure::Qc { .. } => "qc",
            Structure::EntanglementBreaking { .. } => "eb",
            Structure::Hadamard { .. } => "hadamard",
            Structure::Depolarizing { .. } => "depolarizing",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CPMap {
    d_in: usize,
    d_out: usize,
    choi: HermitianMatrix,
    structure: Structure,
    kraus: OnceLock<Vec<ComplexMatrix>>,
}

impl PartialEq for CPMap {
    fn eq(&self, other: &Self) -> bool {
        self.d_in == other.d_in && self.d_out == other.d_out && self.choi == other.choi
    }
}

impl Serialize for CPMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            d_in: usize,
            d_out: usize,
            family: &'static str,
            choi: &'a HermitianMatrix,
        }
        Wire { d_in: self.d_in, d_out: self.d_out, family: self.structure.family(), choi: &self.choi }.serialize(s)
    }
}

fn require_psd(m: &HermitianMatrix, what: &str) -> Result<()> {
    match m.psd_eigh() {
        Ok(_) => Ok(()),
        Err(Error::NotPsd { min_eigenvalue, .. }) => Err(Error::NotCompletelyPositive { min_eigenvalue }),
        Err(e) => Err(Error::Numerical(format!("{what}: {e}"))),
    }
}

/// `Σ_k vec(K_k) vec(K_k)*` with `vec(K)[(i·d_out + k)] = K[k, i]`.
fn choi_from_kraus(ops: &[ComplexMatrix], d_in: usize, d_out: usize) -> HermitianMatrix {
    let n = d_in * d_out;
    let mut x = ComplexMatrix::zeros(n, n);
    for op in ops {
        let v: Vec<C64> = (0..n).map(|r| op[(r % d_out, r / d_out)]).collect();
        for a in 0..n {
            if v[a] == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..n {
                x[(a, b)] += v[a] * v[b].conj();
            }
        }
    }
    HermitianMatrix::symmetrize(x).expect("square by construction")
}

impl CPMap {
    /// Wraps a Choi matrix after checking it is PSD (complete positivity).
    pub fn from_choi(x: HermitianMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidInput("map dimensions must be positive".into()));
        }
        if x.dim() != d_in * d_out {
            return Err(Error::Dimension(format!("Choi matrix of dim {} for d_in = {d_in}, d_out = {d_out}", x.dim())));
        }
        require_psd(&x, "Choi matrix")?;
        Ok(Self::raw(x, d_in, d_out, Structure::General))
    }

    fn raw(choi: HermitianMatrix, d_in: usize, d_out: usize, structure: Structure) -> Self {
        Self { d_in, d_out, choi, structure, kraus: OnceLock::new() }
    }

    fn with_kraus(mut self, ops: Vec<ComplexMatrix>) -> Self {
        self.kraus = OnceLock::from(ops);
        self
    }

    /// `Φ(A) = Σ_k K_k A K_k*`. All operators must share one `d_out × d_in` shape.
    pub fn from_kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidInput("no Kraus operators".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if ops.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return Err(Error::Dimension("Kraus operators differ in shape".into()));
        }
        let choi = choi_from_kraus(&ops, d_in, d_out);
        Ok(Self::raw(choi, d_in, d_out, Structure::General).with_kraus(ops))
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn is_cq(&self) -> bool {
        matches!(self.structure, Structure::Cq { .. })
    }

    /// The trace channel is the QC map with the single effect `I`.
    pub fn is_qc(&self) -> bool {
        matches!(self.structure, Structure::Qc { .. } | Structure::Trace)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.structure, Structure::Identity)
    }

    /// Kraus operators, computed from the Choi eigendecomposition on first use.
    pub fn kraus(&self) -> &[ComplexMatrix] {
        self.kraus.get_or_init(|| self.kraus_from_choi())
    }

    fn kraus_from_choi(&self) -> Vec<ComplexMatrix> {
        let e = self.choi.eigh().expect("Choi eigendecomposition");
        let cutoff = KRAUS_CUTOFF * e.spectral_radius();
        let mut ops = Vec::new();
        for (col, &lam) in e.values.iter().enumerate().rev() {
            if lam <= cutoff {
                continue;
            }
            let s = lam.sqrt();
            ops.push(ComplexMatrix::from_fn(self.d_out, self.d_in, |k, i| e.vectors[(i * self.d_out + k, col)] * s));
        }
        if ops.is_empty() {
            ops.push(ComplexMatrix::zeros(self.d_out, self.d_in));
        }
        ops
    }

    /// `C_{ij,kl} = Φ(|i⟩⟨j|)[k,l]`, the entry of `X` at `((i,k),(j,l))`.
    pub fn choi_coordinate(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.choi[(i * self.d_out + k, j * self.d_out + l)]
    }

    /// `‖X_Φ‖_2`, the Frobenius norm of the Choi matrix.
    pub fn choi_frobenius(&self) -> f64 {
        self.choi.as_matrix().frobenius_norm()
    }

    pub fn is_choi_entrywise_nonnegative(&self, tol: f64) -> bool {
        self.choi.as_matrix().data().iter().all(|z| z.re >= -tol && z.im.abs() <= tol)
    }

    fn check_input(&self, a: &ComplexMatrix) -> Result<()> {
        if a.rows() != self.d_in || a.cols() != self.d_in {
            return Err(Error::Dimension(format!(
                "input is {}x{}, map expects {}x{}",
                a.rows(),
                a.cols(),
                self.d_in,
                self.d_in
            )));
        }
        Ok(())
    }

    fn kraus_is_cheaper(&self) -> bool {
        let choi_cost = (self.d_in * self.d_out).pow(2);
        let rank = match self.kraus.get() {
            Some(k) => k.len(),
            None if self.d_in * self.d_out <= LAZY_KRAUS_MAX_CHOI_DIM => self.kraus().len(),
            None => return false,
        };
        rank * self.d_out * self.d_in * (self.d_in + self.d_out) < choi_cost
    }

    /// `Φ(A)`, by whichever of the Kraus sum or the Choi contraction is cheaper.
    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(a)?;
        Ok(if self.kraus_is_cheaper() { self.apply_kraus_unchecked(a) } else { self.apply_choi_unchecked(a) })
    }

    /// `Σ_k K_k A K_k*`.
    pub fn apply_kraus(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(a)?;
        Ok(self.apply_kraus_unchecked(a))
    }

    /// `Φ(A)[k,l] = Σ_ij A[i,j] X[(i,k),(j,l)]`.
    pub fn apply_choi(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_input(a)?;
        Ok(self.apply_choi_unchecked(a))
    }

    fn apply_kraus_unchecked(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.d_out, self.d_out);
        for k in self.kraus() {
            out = out.add(&k.matmul(a).matmul(&k.adjoint()));
        }
        out
    }

    fn apply_choi_unchecked(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let (di, dout) = (self.d_in, self.d_out);
        let x = self.choi.as_matrix();
        let mut out = vec![C64::new(0.0, 0.0); dout * dout];
        for i in 0..di {
            for j in 0..di {
                let aij = a[(i, j)];
                if aij == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..dout {
                    let row = i * dout + k;
                    for l in 0..dout {
                        out[k * dout + l] += aij * x[(row, j * dout + l)];
                    }
                }
            }
        }
        ComplexMatrix::new(dout, dout, out).expect("finite")
    }

    /// `Φ*(B)`, defined by `Tr(B Φ(A)) = Tr(Φ*(B) A)`.
    pub fn apply_adjoint(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.rows() != self.d_out || b.cols() != self.d_out {
            return Err(Error::Dimension(format!(
                "adjoint input is {}x{}, expected {}x{}",
                b.rows(),
                b.cols(),
                self.d_out,
                self.d_out
            )));
        }
        if self.kraus_is_cheaper() {
            let mut out = ComplexMatrix::zeros(self.d_in, self.d_in);
            for k in self.kraus() {
                out = out.add(&k.adjoint().matmul(b).matmul(k));
            }
            return Ok(out);
        }
        let (di, dout) = (self.d_in, self.d_out);
        let x = self.choi.as_matrix();
        // Φ*(B)[j,i] = Σ_kl B[l,k] X[(i,k),(j,l)]
        let mut out = ComplexMatrix::zeros(di, di);
        for i in 0..di {
            for j in 0..di {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dout {
                    let row = i * dout + k;
                    for l in 0..dout {
                        acc += b[(l, k)] * x[(row, j * dout + l)];
                    }
                }
                out[(j, i)] = acc;
            }
        }
        Ok(out)
    }

    /// `Φ(A)` for Hermitian `A`, returned exactly Hermitian.
    pub fn apply_herm(&self, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        HermitianMatrix::symmetrize(self.apply(a.as_matrix())?)
    }

    pub fn apply_adjoint_herm(&self, b: &HermitianMatrix) -> Result<HermitianMatrix> {
        HermitianMatrix::symmetrize(self.apply_adjoint(b.as_matrix())?)
    }

    /// `Tr_out X = I_{d_in}`.
    pub fn is_trace_preserving(&self) -> bool {
        let x = self.choi.as_matrix();
        (0..self.d_in).all(|i| {
            (0..self.d_in).all(|j| {
                let s: C64 = (0..self.d_out).map(|k| x[(i * self.d_out + k, j * self.d_out + k)]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                (s - target).norm() <= PREDICATE_TOL
            })
        })
    }

    /// `Φ(I) = Σ K K* = I_{d_out}`.
    pub fn is_unital(&self) -> bool {
        let phi_i = self.apply_choi_unchecked(&ComplexMatrix::identity(self.d_in));
        phi_i.sub(&ComplexMatrix::identity(self.d_out)).max_abs() <= PREDICATE_TOL
    }

    /// The map `Φ*: M_{d_out} → M_{d_in}`; its Choi matrix is the
    /// swapped-and-conjugated Choi matrix of `Φ`.
    pub fn adjoint(&self) -> CPMap {
        let (di, dout) = (self.d_in, self.d_out);
        let x = self.choi.as_matrix();
        let y = ComplexMatrix::from_fn(di * dout, di * dout, |r, c| {
            let (k, i) = (r / di, r % di);
            let (l, j) = (c / di, c % di);
            x[(i * dout + k, j * dout + l)].conj()
        });
        let structure = match &self.structure {
            Structure::Cq { states } => Structure::Qc { effects: states.clone() },
            Structure::Qc { effects } => Structure::Cq { states: effects.clone() },
            Structure::Trace => Structure::Cq { states: vec![HermitianMatrix::identity(di)] },
            Structure::EntanglementBreaking { effects, states } => {
                Structure::EntanglementBreaking { effects: states.clone(), states: effects.clone() }
            }
            Structure::Hadamard { c } => Structure::Hadamard { c: c.transpose() },
            s @ (Structure::Identity | Structure::Depolarizing { .. }) => s.clone(),
            Structure::General => Structure::General,
        };
        let mut out = CPMap::raw(HermitianMatrix::symmetrize_unchecked(y), dout, di, structure);
        if let Some(ops) = self.kraus.get() {
            out = out.with_kraus(ops.iter().map(ComplexMatrix::adjoint).collect());
        }
        out
    }

    /// `Φ̄`: every Kraus operator (equivalently the Choi matrix) conjugated entrywise.
    pub fn conjugate(&self) -> CPMap {
        let conj_all = |v: &[HermitianMatrix]| v.iter().map(HermitianMatrix::conj).collect::<Vec<_>>();
        let structure = match &self.structure {
            Structure::Cq { states } => Structure::Cq { states: conj_all(states) },
            Structure::Qc { effects } => Structure::Qc { effects: conj_all(effects) },
            Structure::EntanglementBreaking { effects, states } => {
                Structure::EntanglementBreaking { effects: conj_all(effects), states: conj_all(states) }
            }
            Structure::Hadamard { c } => Structure::Hadamard { c: c.conj() },
            s => s.clone(),
        };
        let mut out = CPMap::raw(self.choi.conj(), self.d_in, self.d_out, structure);
        if let Some(ops) = self.kraus.get() {
            out = out.with_kraus(ops.iter().map(ComplexMatrix::conj).collect());
        }
        out
    }

    /// `Φ ⊗ Ω` with the default Choi dimension cap.
    pub fn tensor(&self, other: &CPMap) -> Result<CPMap> {
        self.tensor_with_cap(other, DEFAULT_CHOI_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &CPMap, cap: usize) -> Result<CPMap> {
        let d_in = self.d_in * other.d_in;
        let d_out = self.d_out * other.d_out;
        if d_in * d_out > cap {
            return Err(Error::Resource(format!("tensor product Choi dimension {} exceeds cap {cap}", d_in * d_out)));
        }
        let layout = TensorLayout::new(self.d_in, other.d_in, self.d_out, other.d_out);
        let (x, y) = (self.choi.as_matrix(), other.choi.as_matrix());
        let n = d_in * d_out;
        let choi = ComplexMatrix::from_fn(n, n, |r, c| {
            let (ra, rb) = layout.source[r];
            let (ca, cb) = layout.source[c];
            x[(ra, ca)] * y[(rb, cb)]
        });
        let structure = match (&self.structure, &other.structure) {
            (Structure::Identity, Structure::Identity) => Structure::Identity,
            (Structure::Trace, Structure::Trace) => Structure::Trace,
            (s, Structure::Identity) if other.d_in == 1 => s.clone(),
            (Structure::Identity, s) if self.d_in == 1 => s.clone(),
            _ => Structure::General,
        };
        let mut out = CPMap::raw(HermitianMatrix::symmetrize_unchecked(choi), d_in, d_out, structure);
        if let (Some(ka), Some(kb)) = (self.kraus.get(), other.kraus.get()) {
            if ka.len() * kb.len() <= n {
                let ops = ka.iter().flat_map(|a| kb.iter().map(move |b| kron(a, b))).collect();
                out = out.with_kraus(ops);
            }
        }
        Ok(out)
    }
}

/// Index permutation that turns `X_Φ ⊗ X_Ω` (ordered `(i1,k1),(i2,k2)`) into the
/// canonical Choi ordering `(i1,i2),(k1,k2)` of `Φ ⊗ Ω`.
#[derive(Clone, Debug)]
pub struct TensorLayout {
    /// For each canonical index, the pair (row of `X_Φ`, row of `X_Ω`).
    pub source: Vec<(usize, usize)>,
}

impl TensorLayout {
    pub fn new(d_in: usize, n_in: usize, d_out: usize, n_out: usize) -> Self {
        let mut source = Vec::with_capacity(d_in * n_in * d_out * n_out);
        for i1 in 0..d_in {
            for i2 in 0..n_in {
                for k1 in 0..d_out {
                    for k2 in 0..n_out {
                        source.push((i1 * d_out + k1, i2 * n_out + k2));
                    }
                }
            }
        }
        Self { source }
    }
}

pub fn identity_map(d: usize) -> CPMap {
    let n = d * d;
    let mut x = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            x[(i * d + i, j * d + j)] = C64::new(1.0, 0.0);
        }
    }
    CPMap::raw(HermitianMatrix::symmetrize_unchecked(x), d, d, Structure::Identity)
        .with_kraus(vec![ComplexMatrix::identity(d)])
}

/// `T(A) = Tr A ∈ M_1`; its Choi matrix is `I_d`.
pub fn trace_channel(d: usize) -> CPMap {
    let ops = (0..d).map(|i| ComplexMatrix::unit(d, 0, i).submatrix(0, 0, 1, d)).collect();
    CPMap::raw(HermitianMatrix::identity(d), d, 1, Structure::Trace).with_kraus(ops)
}

fn check_family(ms: &[HermitianMatrix], what: &str) -> Result<usize> {
    let first = ms.first().ok_or_else(|| Error::InvalidInput(format!("empty {what} list")))?;
    let dim = first.dim();
    for (k, m) in ms.iter().enumerate() {
        if m.dim() != dim {
            return Err(Error::Dimension(format!("{what} {k} has dim {}, expected {dim}", m.dim())));
        }
        require_psd(m, what)?;
    }
    Ok(dim)
}

/// `E(A) = Σ_k Tr(X_k A) R_k`; Choi matrix `Σ_k X_kᵀ ⊗ R_k`.
pub fn eb_map(effects: Vec<HermitianMatrix>, states: Vec<HermitianMatrix>) -> Result<CPMap> {
    if effects.len() != states.len() {
        return Err(Error::InvalidInput(format!("{} effects but {} states", effects.len(), states.len())));
    }
    let d_in = check_family(&effects, "effect")?;
    let d_out = check_family(&states, "state")?;
    let choi = eb_choi(&effects, &states);
    Ok(CPMap::raw(choi, d_in, d_out, Structure::EntanglementBreaking { effects, states }))
}

fn eb_choi(effects: &[HermitianMatrix], states: &[HermitianMatrix]) -> HermitianMatrix {
    let (d_in, d_out) = (effects[0].dim(), states[0].dim());
    let mut x = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for (e, r) in effects.iter().zip(states) {
        x = x.add(&kron(&e.transpose().into_matrix(), r.as_matrix()));
    }
    HermitianMatrix::symmetrize_unchecked(x)
}

fn basis_projectors(d: usize) -> Vec<HermitianMatrix> {
    (0..d)
        .map(|k| {
            let mut diag = vec![0.0; d];
            diag[k] = 1.0;
            HermitianMatrix::from_diagonal(&diag)
        })
        .collect()
}

/// `Φ(M) = Σ_k ⟨k|M|k⟩ R_k`, input dimension `R.len()`.
pub fn cq_map(states: Vec<HermitianMatrix>) -> Result<CPMap> {
    let d_out = check_family(&states, "state")?;
    let d_in = states.len();
    let choi = eb_choi(&basis_projectors(d_in), &states);
    Ok(CPMap::raw(choi, d_in, d_out, Structure::Cq { states }))
}

/// `E(A) = Σ_k Tr(X_k A)|k⟩⟨k|` with one effect per output basis state.
pub fn qc_map(effects: Vec<HermitianMatrix>, d_out: usize) -> Result<CPMap> {
    if effects.len() != d_out {
        return Err(Error::InvalidInput(format!("{} effects for d_out = {d_out}", effects.len())));
    }
    let d_in = check_family(&effects, "effect")?;
    let choi = eb_choi(&effects, &basis_projectors(d_out));
    Ok(CPMap::raw(choi, d_in, d_out, Structure::Qc { effects }))
}

/// `H_C(A) = C ∘ A`; the `(i,j)` Choi block is `c_ij |i⟩⟨j|`.
pub fn hadamard_map(c: HermitianMatrix) -> Result<CPMap> {
    require_psd(&c, "Hadamard symbol")?;
    let d = c.dim();
    let mut x = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            x[(i * d + i, j * d + j)] = c[(i, j)];
        }
    }
    Ok(CPMap::raw(HermitianMatrix::symmetrize_unchecked(x), d, d, Structure::Hadamard { c }))
}

/// Lower end of the completely positive range of the depolarizing parameter.
pub fn depolarizing_lambda_min(d: usize) -> f64 {
    if d <= 1 {
        f64::NEG_INFINITY
    } else {
        -1.0 / ((d * d - 1) as f64)
    }
}

/// `λ ∈ [0, 1]`, where `λ = e^{-t}` parameterizes the depolarizing semigroup.
pub fn depolarizing_in_semigroup_regime(lambda: f64) -> bool {
    (0.0..=1.0).contains(&lambda)
}

/// `Δ_λ(A) = λA + (1-λ) Tr(A) I/d`, completely positive for
/// `-1/(d²-1) ≤ λ ≤ 1`.
pub fn depolarizing(d: usize, lambda: f64) -> Result<CPMap> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if !lambda.is_finite() || lambda > 1.0 + 1e-15 || lambda < depolarizing_lambda_min(d) - 1e-15 {
        let min_eig =
            if lambda > 1.0 { (1.0 - lambda) / d as f64 } else { lambda * d as f64 + (1.0 - lambda) / d as f64 };
        return Err(Error::NotCompletelyPositive { min_eigenvalue: min_eig });
    }
    let n = d * d;
    let mut x = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            x[(i * d + i, j * d + j)] += C64::new(lambda, 0.0);
        }
    }
    for r in 0..n {
        x[(r, r)] += C64::new((1.0 - lambda) / d as f64, 0.0);
    }
    Ok(CPMap::raw(HermitianMatrix::symmetrize_unchecked(x), d, d, Structure::Depolarizing { lambda }))
}

/// Trace-preserving map `A ↦ Tr_env(V A V*)` for a Haar-random isometry
/// `V: C^{d_in} → C^{d_out} ⊗ C^{env}`.
pub fn random_channel(d_in: usize, d_out: usize, env: usize, seed: u64) -> Result<CPMap> {
    if d_in == 0 || d_out == 0 || env == 0 {
        return Err(Error::InvalidInput("dimensions must be positive".into()));
    }
    if env * d_out < d_in {
        return Err(Error::InvalidInput(format!("no isometry from C^{d_in} into C^{d_out} ⊗ C^{env}")));
    }
    let mut rng = rng_from_seed(seed);
    let v = haar_isometry(d_out * env, d_in, &mut rng);
    let ops = (0..env).map(|e| ComplexMatrix::from_fn(d_out, d_in, |k, i| v[(k * env + e, i)])).collect();
    CPMap::from_kraus(ops)
}

/// CP map with `rank` Kraus operators of i.i.d. complex Gaussian entries.
pub fn random_cp(d_in: usize, d_out: usize, rank: usize, seed: u64) -> Result<CPMap> {
    if d_in == 0 || d_out == 0 || rank == 0 {
        return Err(Error::InvalidInput("dimensions and rank must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let ops = (0..rank).map(|_| ComplexMatrix::from_fn(d_out, d_in, |_, _| complex_normal(&mut rng))).collect();
    CPMap::from_kraus(ops)
}

/// [`random_cp`] with full Kraus rank `d_in·d_out`.
pub fn random_cp_full(d_in: usize, d_out: usize, seed: u64) -> Result<CPMap> {
    random_cp(d_in, d_out, d_in * d_out, seed)
}

/// Serializable channel description, the `--channel` file format. On the wire
/// the variant name sits in a `"kind"` field next to the parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(remote = "Self", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity {
        d: usize,
    },
    Trace {
        d: usize,
    },
    Depolarizing {
        d: usize,
        lambda: f64,
    },
    Hadamard {
        c_re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_im: Option<Vec<Vec<f64>>>,
    },
    Choi {
        d_in: usize,
        d_out: usize,
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
    Kraus {
        ops: Vec<MatrixJson>,
    },
    Cq {
        states: Vec<MatrixJson>,
    },
    Qc {
        effects: Vec<MatrixJson>,
    },
    Eb {
        effects: Vec<MatrixJson>,
        states: Vec<MatrixJson>,
    },
    Random {
        d_in: usize,
        d_out: usize,
        env: usize,
        seed: u64,
    },
    RandomCp {
        d_in: usize,
        d_out: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
        seed: u64,
    },
    Tensor {
        factors: Vec<ChannelSpec>,
    },
    Adjoint {
        of: Box<ChannelSpec>,
    },
    Conjugate {
        of: Box<ChannelSpec>,
    },
}

// The derive above (remote = Self) yields the externally tagged form
// `{"depolarizing": {...}}`; these impls move the tag into a "kind" field.
// Going through the external form keeps field paths in error messages,
// which serde's own internal tagging drops.
impl Serialize for ChannelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let external = ChannelSpec::serialize(self, serde_json::value::Serializer).map_err(S::Error::custom)?;
        let serde_json::Value::Object(outer) = external else {
            return Err(S::Error::custom("unexpected channel spec layout"));
        };
        let (kind, body) = outer.into_iter().next().ok_or_else(|| S::Error::custom("empty channel spec"))?;
        let mut flat = serde_json::Map::new();
        flat.insert("kind".into(), serde_json::Value::String(kind));
        if let serde_json::Value::Object(fields) = body {
            flat.extend(fields);
        }
        flat.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChannelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut obj = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
        let kind = match obj.remove("kind") {
            Some(serde_json::Value::String(k)) => k,
            Some(_) => return Err(D::Error::custom("field `kind` must be a string")),
            None => return Err(D::Error::missing_field("kind")),
        };
        let mut outer = serde_json::Map::new();
        outer.insert(kind.clone(), serde_json::Value::Object(obj));
        serde_path_to_error::deserialize(serde_json::Value::Object(outer))
            .map_err(|e| D::Error::custom(format!("{}: {}", e.path(), e.inner())))
            .map(|w: Wrapped| w.0)
    }
}

struct Wrapped(ChannelSpec);

impl<'de> Deserialize<'de> for Wrapped {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ChannelSpec::deserialize(d).map(Wrapped)
    }
}

fn herm_list(ms: &[MatrixJson], what: &str) -> Result<Vec<HermitianMatrix>> {
    ms.iter()
        .enumerate()
        .map(|(k, m)| {
            let cm = ComplexMatrix::try_from(m).map_err(|e| Error::Parse(format!("{what}[{k}]: {e}")))?;
            HermitianMatrix::from_matrix(cm, 1e-10).map_err(|e| Error::Parse(format!("{what}[{k}]: {e}")))
        })
        .collect()
}

impl ChannelSpec {
    /// Parses JSON; serde's line/column diagnostics are kept in the error.
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// Validates the parameters and constructs the map.
    pub fn build(&self) -> Result<CPMap> {
        match self {
            ChannelSpec::Identity { d } => {
                if *d == 0 {
                    return Err(Error::InvalidInput("identity: d must be positive".into()));
                }
                Ok(identity_map(*d))
            }
            ChannelSpec::Trace { d } => {
                if *d == 0 {
                    return Err(Error::InvalidInput("trace: d must be positive".into()));
                }
                Ok(trace_channel(*d))
            }
            ChannelSpec::Depolarizing { d, lambda } => depolarizing(*d, *lambda),
            ChannelSpec::Hadamard { c_re, c_im } => {
                let c = ComplexMatrix::from_re_im(c_re, c_im.as_deref())
                    .map_err(|e| Error::Parse(format!("hadamard.c: {e}")))?;
                hadamard_map(HermitianMatrix::from_matrix(c, 1e-10)?)
            }
            ChannelSpec::Choi { d_in, d_out, re, im } => {
                let x = ComplexMatrix::from_re_im(re, im.as_deref()).map_err(|e| Error::Parse(format!("choi: {e}")))?;
                CPMap::from_choi(HermitianMatrix::from_matrix(x, 1e-10)?, *d_in, *d_out)
            }
            ChannelSpec::Kraus { ops } => {
                let ops = ops
                    .iter()
                    .enumerate()
                    .map(|(k, m)| ComplexMatrix::try_from(m).map_err(|e| Error::Parse(format!("ops[{k}]: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                CPMap::from_kraus(ops)
            }
            ChannelSpec::Cq { states } => cq_map(herm_list(states, "states")?),
            ChannelSpec::Qc { effects } => {
                let effects = herm_list(effects, "effects")?;
                let d_out = effects.len();
                qc_map(effects, d_out)
            }
            ChannelSpec::Eb { effects, states } => eb_map(herm_list(effects, "effects")?, herm_list(states, "states")?),
            ChannelSpec::Random { d_in, d_out, env, seed } => random_channel(*d_in, *d_out, *env, *seed),
            ChannelSpec::RandomCp { d_in, d_out, rank, seed } => {
                random_cp(*d_in, *d_out, rank.unwrap_or(d_in * d_out), *seed)
            }
            ChannelSpec::Tensor { factors } => {
                let mut it = factors.iter();
                let first = it.next().ok_or_else(|| Error::InvalidInput("tensor: no factors".into()))?;
                let mut acc = first.build()?;
                for f in it {
                    acc = acc.tensor(&f.build()?)?;
                }
                Ok(acc)
            }
            ChannelSpec::Adjoint { of } => Ok(of.build()?.adjoint()),
            ChannelSpec::Conjugate { of } => Ok(of.build()?.conjugate()),
        }
    }

    /// Non-fatal remarks about the parameters (e.g. a depolarizing parameter
    /// outside the semigroup range `[0, 1]`).
    pub fn notes(&self) -> Vec<String> {
        match self {
            ChannelSpec::Depolarizing { lambda, .. } if !depolarizing_in_semigroup_regime(*lambda) => {
                vec![format!("lambda = {lambda} is completely positive but outside the semigroup range [0, 1]")]
            }
            ChannelSpec::Tensor { factors } => factors.iter().flat_map(ChannelSpec::notes).collect(),
            ChannelSpec::Adjoint { of } | ChannelSpec::Conjugate { of } => of.notes(),
            _ => Vec::new(),
        }
    }
}
