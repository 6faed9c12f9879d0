//! Log-Sobolev constants of the depolarizing semigroup `Δ_λ`, `λ = e^{-t}`.
//!
//! Logarithms are natural throughout; the constants change with the base.
//! The closed forms degenerate at `d = 2` (numerator and denominator vanish),
//! so `d ≥ 3` is enforced rather than patched.

use serde::Serialize;

use crate::channels::depolarizing;
use crate::error::{Error, Result};
use crate::matlin::NormParams;
use crate::purity::PurityConfig;
use crate::verify::{power_equality, BoundReport, ClaimId, Verdict};

/// Largest `p` tried by [`check_hypercontractivity`].
pub const DEFAULT_P_CAP: f64 = 8.0;

/// Depolarizing parameters used by [`lsc_report`].
pub const LSC_LAMBDAS: [f64; 3] = [0.25, 0.5, 0.75];

fn check_d(d: usize) -> Result<()> {
    if d <= 2 {
        return Err(Error::Domain(format!(
            "log-Sobolev formulas need d >= 3; at d = {d} the numerator 1 - 2/d and log(d - 1) both vanish"
        )));
    }
    Ok(())
}

/// `α₂(L) = 2(1 - 2/d) / ln(d - 1)`.
pub fn lsc_single(d: usize) -> Result<f64> {
    check_d(d)?;
    let d = d as f64;
    Ok(2.0 * (1.0 - 2.0 / d) / (d - 1.0).ln())
}

/// Lower bound `(1 - 2/d) / (ln 3 · ln(d - 1) + 2(1 - 2/d))` on the constant of
/// the product semigroup.
pub fn lsc_product_bound(d: usize) -> Result<f64> {
    check_d(d)?;
    let d = d as f64;
    let a = 1.0 - 2.0 / d;
    Ok(a / (3f64.ln() * (d - 1.0).ln() + 2.0 * a))
}

/// Largest `p` for which the qubit hypercontractive equality is claimed:
/// `1 + (q - 1)/λ²`, capped.
pub fn hypercontractive_p(lambda: f64, q: f64, cap: f64) -> f64 {
    if lambda == 0.0 {
        return cap;
    }
    (1.0 + (q - 1.0) / (lambda * lambda)).min(cap)
}

/// Equality `‖Δ_λ^{⊗n}‖_{q→p} = ‖Δ_λ‖^n_{q→p}` for the qubit depolarizing map
/// with `q ≥ 2` and `p = min(requested, 1 + (q-1)/λ², cap)`.
pub fn check_hypercontractivity(
    lambda: f64,
    q: f64,
    p_requested: Option<f64>,
    n: usize,
    config: &PurityConfig,
) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("lambda = {lambda} outside [0, 1]")));
    }
    if q < 2.0 {
        return Err(Error::Domain(format!("q = {q} must be >= 2")));
    }
    let p_max = hypercontractive_p(lambda, q, DEFAULT_P_CAP);
    let p = p_requested.map_or(p_max, |r| r.min(p_max));
    let params = NormParams::new(q, p)?;
    power_equality(ClaimId::Hypercontractivity, &depolarizing(2, lambda)?, n, params, config)
}

#[derive(Clone, Debug, Serialize)]
pub struct LscReport {
    pub d: usize,
    pub alpha2_single: f64,
    pub alpha2_product_bound: f64,
    /// `(2 → 4)` two-copy equality for each `λ` in [`LSC_LAMBDAS`].
    pub multiplicativity_checks: Vec<BoundReport>,
    /// Choi matrix of every `Δ_λ` checked is entrywise nonnegative.
    pub choi_nonnegative: bool,
    /// All multiplicativity checks hold or are inconclusive, and the Choi
    /// precondition is met.
    pub sound: bool,
}

/// Both constants plus the two-copy `2 → 4` equality they rely on, which holds
/// for maps with entrywise nonnegative Choi matrices.
pub fn lsc_report(d: usize, config: &PurityConfig) -> Result<LscReport> {
    let alpha2_single = lsc_single(d)?;
    let alpha2_product_bound = lsc_product_bound(d)?;
    let params = NormParams::new(2.0, 4.0)?;
    let mut checks = Vec::new();
    let mut choi_nonnegative = true;
    for lambda in LSC_LAMBDAS {
        let map = depolarizing(d, lambda)?;
        choi_nonnegative &= map.is_choi_entrywise_nonnegative(1e-14);
        checks.push(power_equality(ClaimId::Knr, &map, 2, params, config)?);
    }
    let sound = choi_nonnegative && checks.iter().all(|r| r.verdict != Verdict::Violated);
    Ok(LscReport { d, alpha2_single, alpha2_product_bound, multiplicativity_checks: checks, choi_nonnegative, sound })
}
