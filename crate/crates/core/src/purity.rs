//! Estimation of the output purity `‖Φ‖_{q→p} = sup_{A ⪰ 0} ‖Φ(A)‖_p / ‖A‖_q`.
//!
//! The restriction to PSD inputs is exact for CP maps. Every estimate is a
//! lower bound backed by a certificate: the returned maximizer reproduces the
//! value when pushed through the map again. Four strategies are available:
//!
//! - [`purity_analytic`]: closed forms (`p = 1`, `q = ∞`, identity, trace).
//! - [`purity_fixed_point`]: the Hölder-duality stationarity iteration.
//! - [`purity_gradient`]: projected gradient ascent on `A = GG*`.
//! - [`purity_oracle`]: random sampling plus randomized hill climbing.
//!
//! [`purity`] runs all applicable ones and keeps the best.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{identity_map, random_channel, random_cp_full, CPMap, Structure};
use crate::error::{Error, Result};
use crate::matlin::{
    herm_power, kron_herm, norm_from_values, power_from_eigh, schatten_norm_herm, ComplexMatrix, HermitianMatrix,
    NormParams, C64,
};
use crate::rng::{complex_normal, derive_seed, random_psd, rng_from_seed, uniform, Rng};

// Seed streams, one per consumer of the master seed.
const STREAM_FIXED_POINT: u64 = 1;
const STREAM_GRADIENT: u64 = 2;
const STREAM_ORACLE: u64 = 3;
const STREAM_ANCILLA: u64 = 4;

/// Restart values within this relative distance of the best count toward the
/// reported dispersion.
const DISPERSION_WINDOW: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    Gradient,
    FixedPoint,
    Analytic,
    /// Request-only: let [`purity`] choose. Estimates report the winner.
    Dispatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Samples for a direct [`purity_oracle`] call.
    pub oracle_samples: usize,
    /// Samples for the oracle member of the dispatcher.
    pub dispatch_oracle_samples: usize,
    /// Hill-climbing steps per oracle sample.
    pub oracle_steps: usize,
    /// Return closed forms without running the numerical methods.
    pub trust_analytic: bool,
    pub seed: u64,
}

impl Default for PurityConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iter: 500,
            tol: 1e-8,
            oracle_samples: 2000,
            dispatch_oracle_samples: 4,
            oracle_steps: 200,
            trust_analytic: true,
            seed: 0,
        }
    }
}

impl PurityConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same budgets, `factor` times the restarts.
    pub fn boosted(&self, factor: usize) -> Self {
        Self { restarts: self.restarts * factor, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityEstimate {
    /// `‖Φ(maximizer)‖_p`, a lower bound on `‖Φ‖_{q→p}`.
    pub value: f64,
    /// PSD input with `‖·‖_q = 1`.
    pub maximizer: HermitianMatrix,
    pub method: Method,
    pub restarts_used: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    /// Spread of the restart values that landed near the best one.
    pub dispersion: f64,
    pub params: NormParams,
}

impl PurityEstimate {
    /// Recomputes `‖Φ(A)‖_p / ‖A‖_q` from the stored maximizer.
    pub fn recheck(&self, phi: &CPMap) -> Result<f64> {
        ratio(phi, &self.maximizer, self.params)
    }
}

/// `‖Φ(A)‖_p / ‖A‖_q` for PSD `A ≠ 0`.
pub fn ratio(phi: &CPMap, a: &HermitianMatrix, params: NormParams) -> Result<f64> {
    let den = schatten_norm_herm(a, params.q())?;
    if den == 0.0 {
        return Err(Error::InvalidInput("zero input".into()));
    }
    Ok(schatten_norm_herm(&phi.apply_herm(a)?, params.p())? / den)
}

fn normalize_q(a: &HermitianMatrix, q: f64) -> Result<HermitianMatrix> {
    let n = schatten_norm_herm(a, q)?;
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Numerical("cannot normalize a zero input".into()));
    }
    Ok(a.scale(1.0 / n))
}

fn check_dims(phi: &CPMap, a: &HermitianMatrix) -> Result<()> {
    if a.dim() != phi.d_in() {
        return Err(Error::Dimension(format!("start point of dim {} for d_in = {}", a.dim(), phi.d_in())));
    }
    Ok(())
}

/// One restart's outcome.
#[derive(Clone, Debug)]
struct Run {
    value: f64,
    a: HermitianMatrix,
    iterations: usize,
    converged: bool,
}

/// Best run (ties to the lowest index) plus dispersion and aggregate counters.
fn merge(runs: Vec<Result<Run>>, method: Method, seed: u64, params: NormParams) -> Result<PurityEstimate> {
    let mut best: Option<Run> = None;
    let mut values = Vec::new();
    let mut iterations = 0;
    let mut last_err = None;
    let n = runs.len();
    for r in runs {
        match r {
            Ok(run) => {
                iterations += run.iterations;
                values.push(run.value);
                if best.as_ref().is_none_or(|b| run.value > b.value) {
                    best = Some(run);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or_else(|| Error::InvalidInput("no restarts".into()))),
    };
    Ok(PurityEstimate {
        value: best.value,
        dispersion: dispersion(&values, best.value),
        maximizer: best.a,
        method,
        restarts_used: n,
        iterations,
        converged: best.converged,
        seed,
        params,
    })
}

fn dispersion(values: &[f64], best: f64) -> f64 {
    let floor = best * (1.0 - DISPERSION_WINDOW);
    let low = values.iter().copied().filter(|&v| v >= floor).fold(best, f64::min);
    best - low
}

/// Starting point for restart `index`: rank cycles through `1..=d`, restart 0
/// of a fresh run is the normalized identity.
fn start_point(d: usize, q: f64, index: usize, seed: u64) -> Result<HermitianMatrix> {
    if index == 0 {
        return normalize_q(&HermitianMatrix::identity(d), q);
    }
    let mut rng = rng_from_seed(seed);
    let rank = 1 + (index - 1) % d;
    normalize_q(&random_psd(d, rank, &mut rng), q)
}

// ---------------------------------------------------------------------------
// analytic

/// Closed forms: `p = 1` gives `‖Φ*(I)‖_{q'}`; `q = ∞` gives `‖Φ(I)‖_p`; the
/// identity map gives 1 for `p ≥ q` (pure states) and `d^{1/p-1/q}` otherwise;
/// the trace channel gives `d^{1-1/q}`.
pub fn purity_analytic(phi: &CPMap, params: NormParams) -> Result<PurityEstimate> {
    let (q, p) = (params.q(), params.p());
    let d = phi.d_in();
    let maximizer = if p == 1.0 {
        let dual = phi.apply_adjoint_herm(&HermitianMatrix::identity(phi.d_out()))?;
        if q == 1.0 {
            dual.eigh()?.top_projector()
        } else if q.is_infinite() {
            HermitianMatrix::identity(d)
        } else {
            herm_power(&dual, params.q_conj() - 1.0)?
        }
    } else if q.is_infinite() {
        HermitianMatrix::identity(d)
    } else if phi.is_identity() {
        if p >= q {
            let mut diag = vec![0.0; d];
            diag[0] = 1.0;
            HermitianMatrix::from_diagonal(&diag)
        } else {
            HermitianMatrix::identity(d)
        }
    } else if matches!(phi.structure(), Structure::Trace) {
        HermitianMatrix::identity(d)
    } else {
        return Err(Error::NotApplicable("no closed form for this map and exponent pair".into()));
    };
    let maximizer = normalize_q(&maximizer, q)?;
    Ok(PurityEstimate {
        value: ratio(phi, &maximizer, params)?,
        maximizer,
        method: Method::Analytic,
        restarts_used: 0,
        iterations: 0,
        converged: true,
        seed: 0,
        dispersion: 0.0,
        params,
    })
}

/// The closed-form value without a certificate, or `None`.
pub fn analytic_value(phi: &CPMap, params: NormParams) -> Option<f64> {
    let (q, p) = (params.q(), params.p());
    let d = phi.d_in() as f64;
    if phi.is_identity() && p != 1.0 && q.is_finite() {
        return Some(if p >= q { 1.0 } else { d.powf(1.0 / p - 1.0 / q) });
    }
    if matches!(phi.structure(), Structure::Trace) {
        return Some(if q.is_infinite() { d } else { d.powf(1.0 - 1.0 / q) });
    }
    purity_analytic(phi, params).ok().map(|e| e.value)
}

// ---------------------------------------------------------------------------
// fixed point

/// `Φ*(Φ(A)^{p-1})`, or `Φ*(|w⟩⟨w|)` with `w` a top eigenvector of `Φ(A)`
/// when `p = ∞`. Up to a positive factor this is the gradient of `‖Φ(A)‖_p`.
fn dual_direction(phi: &CPMap, a: &HermitianMatrix, p: f64) -> Result<HermitianMatrix> {
    let out = phi.apply_herm(a)?;
    let e = out.eigh()?;
    let inner = if p.is_infinite() { e.top_projector() } else { power_from_eigh(&e, p - 1.0)? };
    phi.apply_adjoint_herm(&inner)
}

/// Maximizer of `Tr(GA)` over `‖A‖_q = 1`: `G^{q'-1}` normalized, the top
/// projector for `q = 1`, the support-free identity for `q = ∞`.
fn dual_maximizer(g: &HermitianMatrix, q: f64) -> Result<HermitianMatrix> {
    let a = if q == 1.0 {
        g.eigh()?.top_projector()
    } else if q.is_infinite() {
        HermitianMatrix::identity(g.dim())
    } else {
        let e = g.eigh()?;
        let mut e = e;
        for v in e.values.iter_mut() {
            *v = v.max(0.0);
        }
        power_from_eigh(&e, 1.0 / (q - 1.0))?
    };
    normalize_q(&a, q)
}

fn fixed_point_run(phi: &CPMap, params: NormParams, start: HermitianMatrix, tol: f64, max_iter: usize) -> Result<Run> {
    let (q, p) = (params.q(), params.p());
    let mut a = normalize_q(&start, q)?;
    let value = ratio(phi, &a, params)?;
    let mut best = Run { value, a: a.clone(), iterations: 0, converged: false };
    let mut stalled = 0;
    for it in 1..=max_iter {
        let g = dual_direction(phi, &a, p)?;
        if g.as_matrix().max_abs() == 0.0 {
            best.iterations = it;
            best.converged = true;
            break;
        }
        let next = dual_maximizer(&g, q)?;
        let step = next.as_matrix().sub(a.as_matrix()).frobenius_norm();
        let next_value = ratio(phi, &next, params)?;
        a = next;
        best.iterations = it;
        if next_value > best.value {
            stalled = if next_value - best.value <= 1e-15 * best.value { stalled + 1 } else { 0 };
            best.value = next_value;
            best.a = a.clone();
        } else {
            stalled += 1;
        }
        if step < tol {
            best.converged = true;
            break;
        }
        if stalled >= 5 {
            // no measurable progress: the value has converged even if A drifts
            // inside a flat set of maximizers
            best.converged = true;
            break;
        }
    }
    Ok(best)
}

/// Fixed-point iteration `A ← normalize_q[(Φ*(Φ(A)^{p-1}))^{1/(q-1)}]`
/// (top eigenprojector for `q = 1`) from `restarts` starting points. The
/// update is the Hölder-dual maximizer of the linearized objective, so by
/// convexity of `‖Φ(·)‖_p` the value never decreases; the best iterate is
/// still tracked.
pub fn purity_fixed_point(
    phi: &CPMap,
    params: NormParams,
    restarts: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<PurityEstimate> {
    fixed_point_with_starts(phi, params, restarts, tol, max_iter, seed, &[])
}

fn fixed_point_with_starts(
    phi: &CPMap,
    params: NormParams,
    restarts: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
    warm: &[HermitianMatrix],
) -> Result<PurityEstimate> {
    if params.p() == 1.0 {
        return Err(Error::UnsupportedMethod("fixed point needs p > 1; p = 1 has a closed form".into()));
    }
    for w in warm {
        check_dims(phi, w)?;
    }
    let total = warm.len() + restarts.max(1);
    let runs: Vec<Result<Run>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let start = if i < warm.len() {
                warm[i].clone()
            } else {
                start_point(phi.d_in(), params.q(), i - warm.len(), derive_seed(seed, STREAM_FIXED_POINT, i as u64))?
            };
            fixed_point_run(phi, params, start, tol, max_iter)
        })
        .collect();
    merge(runs, Method::FixedPoint, seed, params)
}

// ---------------------------------------------------------------------------
// gradient

/// `f(A) = ‖Φ(A)‖_p / ‖A‖_q` and its gradient with respect to Hermitian `A`
/// in the real inner product `Re Tr(XY)`:
/// `∇f = N^{1-p} Φ*(Φ(A)^{p-1}) / D - N D^{-2} ∇D` with `∇D = D^{1-q} A^{q-1}`
/// (`I` for `q = 1`). Needs finite `p > 1` and finite `q`.
pub fn objective_and_gradient(phi: &CPMap, params: NormParams, a: &HermitianMatrix) -> Result<(f64, HermitianMatrix)> {
    let (q, p) = (params.q(), params.p());
    if !(p > 1.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::UnsupportedMethod(format!(
            "analytic gradient needs finite p > 1 and finite q (q = {q}, p = {p})"
        )));
    }
    check_dims(phi, a)?;
    let out_e = phi.apply_herm(a)?.eigh()?;
    let n = norm_from_values(&out_e.values, p);
    let a_e = a.psd_eigh()?;
    let den = norm_from_values(&a_e.values, q);
    if n == 0.0 || den == 0.0 {
        return Err(Error::Numerical("objective undefined at a zero input or output".into()));
    }
    // scale by the norm before powering to keep the magnitudes near 1
    let mut scaled = out_e.clone();
    scaled.values.iter_mut().for_each(|v| *v = (*v / n).max(0.0));
    let grad_n = phi.apply_adjoint_herm(&power_from_eigh(&scaled, p - 1.0)?)?;
    let grad_d = if q == 1.0 {
        HermitianMatrix::identity(a.dim())
    } else {
        let mut s = a_e.clone();
        s.values.iter_mut().for_each(|v| *v /= den);
        power_from_eigh(&s, q - 1.0)?
    };
    let f = n / den;
    let grad = grad_n.scale(1.0 / den).add(&grad_d.scale(-f / den));
    Ok((f, grad))
}

fn g_objective(phi: &CPMap, params: NormParams, g: &ComplexMatrix) -> Result<f64> {
    ratio(phi, &HermitianMatrix::gram(g), params)
}

fn normalize_factor(g: &ComplexMatrix, q: f64) -> Result<ComplexMatrix> {
    let n = schatten_norm_herm(&HermitianMatrix::gram(g), q)?;
    if n == 0.0 {
        return Err(Error::Numerical("factor collapsed to zero".into()));
    }
    Ok(g.scale_real(1.0 / n.sqrt()))
}

fn gradient_run(phi: &CPMap, params: NormParams, start: ComplexMatrix, tol: f64, max_iter: usize) -> Result<Run> {
    let mut g = normalize_factor(&start, params.q())?;
    let mut f = g_objective(phi, params, &g)?;
    let mut eta = 0.1;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let a = HermitianMatrix::gram(&g);
        let (_, m) = objective_and_gradient(phi, params, &a)?;
        let grad = m.as_matrix().matmul(&g).scale_real(2.0);
        let gnorm2 = grad.frobenius_norm().powi(2);
        if gnorm2 == 0.0 || !gnorm2.is_finite() {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial = g.add(&grad.scale_real(eta));
            if let Ok(ft) = g_objective(phi, params, &trial) {
                if ft >= f + 1e-4 * eta * gnorm2 {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            eta *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            converged = true;
            break;
        };
        let gain = (ft - f) / f;
        g = normalize_factor(&trial, params.q())?;
        f = g_objective(phi, params, &g)?;
        eta *= 2.0;
        if gain < tol {
            converged = true;
            break;
        }
    }
    let a = normalize_q(&HermitianMatrix::gram(&g), params.q())?;
    Ok(Run { value: ratio(phi, &a, params)?, a, iterations, converged })
}

fn factor_of(a: &HermitianMatrix) -> Result<ComplexMatrix> {
    // A^{1/2} is a square factor with A = GG*
    Ok(herm_power(a, 0.5)?.into_matrix())
}

/// Projected gradient ascent on `f(G) = ‖Φ(GG*)‖_p / ‖GG*‖_q` with Armijo
/// backtracking; `G` is renormalized after every step (`f` is scale
/// invariant). Requires `p > 1`.
pub fn purity_gradient(
    phi: &CPMap,
    params: NormParams,
    restarts: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<PurityEstimate> {
    gradient_with_starts(phi, params, restarts, tol, max_iter, seed, &[])
}

fn gradient_with_starts(
    phi: &CPMap,
    params: NormParams,
    restarts: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
    warm: &[HermitianMatrix],
) -> Result<PurityEstimate> {
    if params.p() == 1.0 {
        return Err(Error::UnsupportedMethod("gradient needs p > 1; p = 1 has a closed form".into()));
    }
    if params.p().is_infinite() || params.q().is_infinite() {
        return Err(Error::UnsupportedMethod("gradient needs finite exponents".into()));
    }
    for w in warm {
        check_dims(phi, w)?;
    }
    let d = phi.d_in();
    let total = warm.len() + restarts.max(1);
    let runs: Vec<Result<Run>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let start = if i < warm.len() {
                factor_of(&warm[i])?
            } else {
                let mut rng = rng_from_seed(derive_seed(seed, STREAM_GRADIENT, i as u64));
                ComplexMatrix::from_fn(d, d, |_, _| complex_normal(&mut rng))
            };
            gradient_run(phi, params, start, tol, max_iter)
        })
        .collect();
    merge(runs, Method::Gradient, seed, params)
}

// ---------------------------------------------------------------------------
// oracle

fn trapezoid(d: usize, r: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, r, |i, j| if j <= i { complex_normal(rng) } else { C64::new(0.0, 0.0) })
}

fn hill_climb(phi: &CPMap, params: NormParams, mut g: ComplexMatrix, steps: usize, rng: &mut Rng) -> Result<Run> {
    let (d, r) = (g.rows(), g.cols());
    g = normalize_factor(&g, params.q())?;
    let mut f = g_objective(phi, params, &g)?;
    let mut sigma = 0.3;
    for _ in 0..steps {
        let dir = trapezoid(d, r, rng);
        let dn = dir.frobenius_norm();
        if dn == 0.0 {
            continue;
        }
        let dir = dir.scale_real(sigma * g.frobenius_norm() / dn);
        let eval = |t: f64| g_objective(phi, params, &g.add(&dir.scale_real(t))).unwrap_or(f64::NEG_INFINITY);
        let (fp, fm) = (eval(1.0), eval(-1.0));
        let (mut best_t, mut best_f) = (0.0, f);
        for (t, v) in [(1.0, fp), (-1.0, fm)] {
            if v > best_f {
                best_t = t;
                best_f = v;
            }
        }
        // vertex of the parabola through t = -1, 0, 1
        let curv = (fp + fm - 2.0 * f) / 2.0;
        if curv < 0.0 {
            let t = (-(fp - fm) / 2.0 / (2.0 * curv)).clamp(-4.0, 4.0);
            if eval(t) > best_f {
                best_t = t;
            }
        }
        if best_t != 0.0 {
            g = normalize_factor(&g.add(&dir.scale_real(best_t)), params.q())?;
            f = g_objective(phi, params, &g)?;
            sigma = (sigma * 1.5).min(1.0);
        } else {
            sigma = (sigma * 0.5).max(1e-9);
        }
    }
    let a = normalize_q(&HermitianMatrix::gram(&g), params.q())?;
    Ok(Run { value: ratio(phi, &a, params)?, a, iterations: steps, converged: false })
}

/// Best ratio over `samples` random inputs `A = GG*` (rank `1 + s mod d_in`
/// for sample `s`), each refined by `steps` of seeded hill climbing.
pub fn purity_oracle(phi: &CPMap, params: NormParams, samples: usize, seed: u64) -> Result<PurityEstimate> {
    oracle_with_steps(phi, params, samples, PurityConfig::default().oracle_steps, seed)
}

pub fn oracle_with_steps(
    phi: &CPMap,
    params: NormParams,
    samples: usize,
    steps: usize,
    seed: u64,
) -> Result<PurityEstimate> {
    let d = phi.d_in();
    let runs: Vec<Result<Run>> = (0..samples.max(1))
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_from_seed(derive_seed(seed, STREAM_ORACLE, s as u64));
            let g = trapezoid(d, 1 + s % d, &mut rng);
            hill_climb(phi, params, g, steps, &mut rng)
        })
        .collect();
    merge(runs, Method::Oracle, seed, params)
}

// ---------------------------------------------------------------------------
// dispatcher

/// Best of the applicable methods; the winner's certificate is kept and ties go
/// to the earlier method in the order analytic, fixed point, gradient, oracle.
pub fn purity(phi: &CPMap, params: NormParams, config: &PurityConfig) -> Result<PurityEstimate> {
    purity_with_starts(phi, params, config, &[])
}

/// [`purity`] with extra starting points tried before the random restarts.
pub fn purity_with_starts(
    phi: &CPMap,
    params: NormParams,
    config: &PurityConfig,
    warm: &[HermitianMatrix],
) -> Result<PurityEstimate> {
    let mut best: Option<PurityEstimate> = None;
    let mut consider = |r: Result<PurityEstimate>| -> Result<()> {
        match r {
            Ok(e) => {
                if best.as_ref().is_none_or(|b| e.value > b.value) {
                    best = Some(e);
                }
                Ok(())
            }
            Err(e @ Error::Resource(_)) => Err(e),
            Err(_) => Ok(()),
        }
    };
    let analytic = purity_analytic(phi, params);
    if config.trust_analytic {
        if let Ok(e) = analytic {
            return Ok(e);
        }
    } else {
        consider(analytic)?;
    }
    let seed = config.seed;
    consider(fixed_point_with_starts(phi, params, config.restarts, config.tol, config.max_iter, seed, warm))?;
    consider(gradient_with_starts(phi, params, config.restarts.div_ceil(4), config.tol, config.max_iter, seed, warm))?;
    if config.dispatch_oracle_samples > 0 {
        consider(oracle_with_steps(phi, params, config.dispatch_oracle_samples, config.oracle_steps, seed))?;
    }
    best.ok_or_else(|| Error::Numerical("every method failed".into()))
}

/// Runs the method a [`Method`] names; `Dispatch` goes to [`purity`].
pub fn purity_by_method(
    phi: &CPMap,
    params: NormParams,
    method: Method,
    config: &PurityConfig,
) -> Result<PurityEstimate> {
    match method {
        Method::Dispatch => purity(phi, params, config),
        Method::Analytic => purity_analytic(phi, params),
        Method::FixedPoint => {
            purity_fixed_point(phi, params, config.restarts, config.tol, config.max_iter, config.seed)
        }
        Method::Gradient => purity_gradient(phi, params, config.restarts, config.tol, config.max_iter, config.seed),
        Method::Oracle => oracle_with_steps(phi, params, config.oracle_samples, config.oracle_steps, config.seed),
    }
}

// ---------------------------------------------------------------------------
// tensor products and potential purity

/// `purity(Φ⊗Ω)` warm-started from `A_Φ ⊗ A_Ω`, so the result is at least the
/// product of the two component values.
pub fn tensor_purity(
    phi: &CPMap,
    omega: &CPMap,
    phi_est: &PurityEstimate,
    omega_est: &PurityEstimate,
    config: &PurityConfig,
) -> Result<(CPMap, PurityEstimate)> {
    let t = phi.tensor(omega)?;
    let warm = kron_herm(&phi_est.maximizer, &omega_est.maximizer);
    let est = purity_with_starts(&t, phi_est.params, config, &[warm])?;
    Ok((t, est))
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialEstimate {
    /// Best `purity(Φ⊗Ω) / purity(Ω)` found.
    pub value: f64,
    pub ancilla_dim: usize,
    pub ancilla_map: CPMap,
    /// Estimates of `Φ⊗Ω` and of `Ω` for the winning ancilla.
    pub component_estimates: (PurityEstimate, PurityEstimate),
    /// `purity(Φ)` on its own (the `n = 1` candidate).
    pub single: PurityEstimate,
    /// Largest ancilla dimension actually explored.
    pub max_n_attained: usize,
    /// Set when the tensor dimension cap stopped the search early.
    pub truncated: bool,
}

fn ancilla_candidates(phi: &CPMap, n: usize, per_n: usize, seed: u64) -> Result<Vec<CPMap>> {
    let mut out = vec![identity_map(n)];
    if n == phi.d_in() && n == phi.d_out() {
        out.push(phi.conjugate());
    }
    let mut k = 0u64;
    while out.len() < per_n.max(1) {
        let s = derive_seed(seed, STREAM_ANCILLA, (n as u64) << 32 | k);
        out.push(if k.is_multiple_of(2) { random_channel(n, n, n, s)? } else { random_cp_full(n, n, s)? });
        k += 1;
    }
    Ok(out)
}

/// Lower bound on the potential purity: the maximum over `n ≤ n_max` and
/// sampled ancillas `Ω: M_n → M_n` of `purity(Φ⊗Ω) / purity(Ω)`. The ancilla
/// `id_1` is always included, so the result is never below `purity(Φ)`.
///
/// The denominator is estimated with four times the restarts: an
/// underestimated `purity(Ω)` would inflate the ratio.
pub fn potential_lower(
    phi: &CPMap,
    params: NormParams,
    n_max: usize,
    omegas_per_n: usize,
    config: &PurityConfig,
) -> Result<PotentialEstimate> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let single = purity(phi, params, config)?;
    let id1 = identity_map(1);
    let id1_est = purity(&id1, params, config)?;
    let mut best = PotentialEstimate {
        value: single.value,
        ancilla_dim: 1,
        ancilla_map: id1,
        component_estimates: (single.clone(), id1_est),
        single: single.clone(),
        max_n_attained: 1,
        truncated: false,
    };
    let strong = config.boosted(4);
    for n in 2..=n_max {
        let cap = crate::channels::DEFAULT_CHOI_DIM_CAP;
        if phi.d_in() * n * phi.d_out() * n > cap {
            best.truncated = true;
            break;
        }
        for (idx, omega) in ancilla_candidates(phi, n, omegas_per_n, config.seed)?.into_iter().enumerate() {
            let sub = config.clone().with_seed(derive_seed(config.seed, STREAM_ANCILLA + 1, (n * 1000 + idx) as u64));
            let omega_est = purity(&omega, params, &strong.clone().with_seed(sub.seed))?;
            let (_, t_est) = tensor_purity(phi, &omega, &single, &omega_est, &sub)?;
            let r = t_est.value / omega_est.value;
            if r > best.value {
                best.value = r;
                best.ancilla_dim = n;
                best.ancilla_map = omega;
                best.component_estimates = (t_est, omega_est);
            }
        }
        best.max_n_attained = n;
    }
    Ok(best)
}

/// `purity(Φ^{⊗n})^{1/n}`, warm-started from `A^{⊗n}`.
pub fn regularized_estimate(phi: &CPMap, params: NormParams, n: usize, config: &PurityConfig) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let single = purity(phi, params, config)?;
    if n == 1 {
        return Ok(single.value);
    }
    let mut power = phi.clone();
    let mut warm = single.maximizer.clone();
    for _ in 1..n {
        power = power.tensor(phi)?;
        warm = kron_herm(&warm, &single.maximizer);
    }
    let est = purity_with_starts(&power, params, config, &[warm])?;
    Ok(est.value.powf(1.0 / n as f64))
}

/// Uniform draw in `[lo, hi)`; exposed for the verification batches.
pub fn uniform_in(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}
