//! Bivariate upper-tail dependence of the extended skew-normal.

use rayon::prelude::*;
use serde::Serialize;

use crate::corr::CorrelationMatrix;
use crate::error::{EsnError, Result};
use crate::esn::{esn_cdf_with, esn_joint_sf_with, marginal_params, EsnParams, UniEsnParams};
use crate::mvn::Tolerance;
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    #[serde(rename = "CASE_I")]
    CaseI,
    #[serde(rename = "CASE_IIA")]
    CaseIIa,
    #[serde(rename = "CASE_IIB")]
    CaseIIb,
    #[serde(rename = "CASE_III")]
    CaseIII,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::CaseI => "CASE_I",
            CaseLabel::CaseIIa => "CASE_IIA",
            CaseLabel::CaseIIb => "CASE_IIB",
            CaseLabel::CaseIII => "CASE_III",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TailCase {
    pub label: CaseLabel,
    /// 1-based index of the margin acting as j (1 for CASE_I).
    pub pivot_j: usize,
}

/// Slants and extensions of the two univariate margins.
pub fn bivariate_margins(omega: f64, alpha: [f64; 2], tau: f64) -> [UniEsnParams; 2] {
    let s = 1.0 - omega * omega;
    let d1 = (1.0 + alpha[1] * alpha[1] * s).sqrt();
    let d2 = (1.0 + alpha[0] * alpha[0] * s).sqrt();
    [
        UniEsnParams {
            slant: (alpha[0] + omega * alpha[1]) / d1,
            extension: tau / d1,
        },
        UniEsnParams {
            slant: (alpha[1] + omega * alpha[0]) / d2,
            extension: tau / d2,
        },
    ]
}

fn check_omega(omega: f64) -> Result<()> {
    if !(0.0..1.0).contains(&omega) {
        return Err(EsnError::Domain(format!("omega must lie in [0, 1), got {omega}")));
    }
    Ok(())
}

/// Case of the joint-tail expansion, from the signs of the marginal slants.
pub fn dispatch_case(omega: f64, alpha: [f64; 2]) -> Result<TailCase> {
    check_omega(omega)?;
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(EsnError::Domain("slant must be finite".into()));
    }
    let m = bivariate_margins(omega, alpha, 0.0);
    let s = [m[0].slant, m[1].slant];
    match (s[0] < 0.0, s[1] < 0.0) {
        (false, false) => Ok(TailCase {
            label: CaseLabel::CaseI,
            pivot_j: 1,
        }),
        (true, true) => {
            let j = if s[1] < s[0] { 1 } else { 0 };
            Ok(TailCase {
                label: CaseLabel::CaseIII,
                pivot_j: j + 1,
            })
        }
        (neg0, _) => {
            let j = if neg0 { 0 } else { 1 };
            let ab = m[j].alpha_bar();
            let edge = -alpha[j] / ab;
            let other = alpha[1 - j];
            let label = if other > edge {
                CaseLabel::CaseIIa
            } else if other < edge {
                CaseLabel::CaseIIb
            } else {
                return Err(EsnError::BoundaryCase(format!(
                    "alpha_{} = {other} equals -alpha_{}/alpha_bar = {edge}",
                    2 - j,
                    j + 1
                )));
            };
            Ok(TailCase { label, pivot_j: j + 1 })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailAsymptotics {
    pub case: TailCase,
    pub eta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha_bar: [f64; 2],
    pub marginal_slant: [f64; 2],
    pub marginal_extension: [f64; 2],
    /// Whether the quantile corner is the minimiser of the joint-tail exponent.
    pub corner_regime: bool,
    pub omega: f64,
    pub alpha: [f64; 2],
    pub tau: f64,
}

pub fn tail_asymptotics(omega: f64, alpha: [f64; 2], tau: f64) -> Result<TailAsymptotics> {
    let case = dispatch_case(omega, alpha)?;
    if !tau.is_finite() {
        return Err(EsnError::Domain("tau must be finite".into()));
    }
    let m = bivariate_margins(omega, alpha, tau);
    let ab = [m[0].alpha_bar(), m[1].alpha_bar()];
    let w = omega;
    let s = 1.0 - w * w;
    let j = case.pivot_j - 1;
    let o = 1 - j;
    let eta = match case.label {
        CaseLabel::CaseI => (1.0 + w) / 2.0,
        CaseLabel::CaseIIa => s * ab[j] * ab[j] / (s + (ab[j] - w).powi(2)),
        CaseLabel::CaseIIb => {
            1.0 / ((s + (ab[j] - w).powi(2)) / (s * ab[j] * ab[j]) + (alpha[o] + alpha[j] / ab[j]).powi(2))
        }
        CaseLabel::CaseIII => {
            s / ((alpha[o] * alpha[o] * s + 1.0) / (ab[o] * ab[o])
                + (alpha[j] * alpha[j] * s + 1.0) / (ab[j] * ab[j])
                + 2.0 * (alpha[0] * alpha[1] * s - w) / (ab[0] * ab[1]))
        }
    };
    let q = 1.0 + alpha[0] * alpha[0] + alpha[1] * alpha[1] + 2.0 * w * alpha[0] * alpha[1];
    let k = normal::cdf(tau / q.sqrt());
    // gradient of cᵀΩ̄⁻¹c + min(0, αᵀc)² at the scaled corner
    let c: Vec<f64> = (0..2).map(|i| if m[i].slant >= 0.0 { 1.0 } else { 1.0 / ab[i] }).collect();
    let lin = (alpha[0] * c[0] + alpha[1] * c[1]).min(0.0);
    let g0 = (c[0] - w * c[1]) / s + lin * alpha[0];
    let g1 = (c[1] - w * c[0]) / s + lin * alpha[1];
    Ok(TailAsymptotics {
        case,
        eta,
        k,
        alpha_bar: ab,
        marginal_slant: [m[0].slant, m[1].slant],
        marginal_extension: [m[0].extension, m[1].extension],
        corner_regime: g0 > 0.0 && g1 > 0.0,
        omega,
        alpha,
        tau,
    })
}

impl TailAsymptotics {
    fn margins(&self) -> [UniEsnParams; 2] {
        [0, 1].map(|i| UniEsnParams {
            slant: self.marginal_slant[i],
            extension: self.marginal_extension[i],
        })
    }

    /// Laplace approximation of P(X₁ > q₁, X₂ > q₂) at the upper-quantile corner.
    pub fn joint_tail_approx(&self, u: f64) -> Result<f64> {
        let m = self.margins();
        let q = [m[0].upper_quantile(u)?, m[1].upper_quantile(u)?];
        let w = self.omega;
        let s = 1.0 - w * w;
        let a = self.alpha;
        let z = a[0] * q[0] + a[1] * q[1] + self.tau;
        let lg = -(q[0] * q[0] - 2.0 * w * q[0] * q[1] + q[1] * q[1]) / (2.0 * s) + normal::log_cdf(z);
        let mills = normal::mills_inv(z);
        let r0 = (q[0] - w * q[1]) / s - a[0] * mills;
        let r1 = (q[1] - w * q[0]) / s - a[1] * mills;
        if r0 <= 0.0 || r1 <= 0.0 {
            return Ok(f64::NAN);
        }
        Ok(lg.exp() / (2.0 * std::f64::consts::PI * s.sqrt() * self.k * r0 * r1))
    }

    /// ℒ(1/u) such that χ(u) ≈ u^{1/η−1} ℒ(1/u). NaN outside the corner regime.
    pub fn slowly_varying(&self, u: f64) -> Result<f64> {
        check_u(u)?;
        Ok(self.joint_tail_approx(u)? / u.powf(1.0 / self.eta))
    }

    pub fn chi_asymptotic(&self, u: f64) -> Result<f64> {
        check_u(u)?;
        Ok(self.joint_tail_approx(u)? / u)
    }

    /// The closed-form ℒ displays, evaluated literally (leading term for CASE_I).
    pub fn printed_slowly_varying(&self, u: f64) -> f64 {
        let w = self.omega;
        let s = 1.0 - w * w;
        let eta = self.eta;
        let k = self.k;
        let tau = self.tau;
        let l4 = 4.0 * std::f64::consts::PI * (1.0 / u).ln();
        let j = self.case.pivot_j - 1;
        let o = 1 - j;
        let a = self.alpha;
        let ab = self.alpha_bar[j];
        let abo = self.alpha_bar[o];
        match self.case.label {
            CaseLabel::CaseI => (1.0 + w) * k.powf((1.0 - w) / (1.0 + w)) / ((1.0 - w) * l4.powf(w / (1.0 + w))),
            CaseLabel::CaseIIa => {
                ab * ab * s * k.powf(1.0 / eta - 1.0 / (ab * (1.0 + w))) / ((ab - w) * (1.0 - w * ab))
                    * l4.powf(1.0 / (2.0 * eta) - 1.0)
            }
            CaseLabel::CaseIIb => {
                (-tau * tau / 2.0).exp() * ab * ab * s / (a[o] - a[j] / ab) * k.powf(1.0 / eta - 1.0)
                    / ((ab - w) * (1.0 - w * ab + a[o] * a[j] * ab * s))
                    * l4.powf(1.0 / (2.0 * eta) - 1.5)
            }
            CaseLabel::CaseIII => {
                let bracket = (1.0 - w * abo / ab) / s + a[j] * (a[j] + a[o] * abo / ab);
                let num = ab.powi(3) * abo * s / bracket * (-tau * tau / 2.0).exp() * k.powf(1.0 / eta - 1.0);
                let den = ((1.0 + a[o] * a[o] * (1.0 - w)) * (ab - w * abo)
                    + a[0] * a[1] * s.powf(1.5) * (1.0 - w) * abo)
                    * (a[o] * ab + a[j] * abo);
                num / den * l4.powf(1.0 / (2.0 * eta) - 1.5)
            }
        }
    }

    pub fn printed_chi_asymptotic(&self, u: f64) -> f64 {
        u.powf(1.0 / self.eta - 1.0) * self.printed_slowly_varying(u)
    }
}

fn check_u(u: f64) -> Result<()> {
    if !(u > 0.0 && u <= 0.5) {
        return Err(EsnError::Domain(format!("u must lie in (0, 0.5], got {u}")));
    }
    Ok(())
}

fn check_biv(params: &EsnParams) -> Result<()> {
    if params.dim() != 2 {
        return Err(EsnError::Domain(format!("bivariate parameters required, got dimension {}", params.dim())));
    }
    Ok(())
}

/// P(X₁ > q₁, X₂ > q₂) with its error, by inclusion–exclusion and, when that
/// cancels, by the survival orthant directly at relative accuracy.
fn joint_survival(params: &EsnParams, m: &[UniEsnParams; 2], q: [f64; 2], abs: f64, seed: u64) -> Result<(f64, f64)> {
    let f12 = esn_cdf_with(&q, params, Tolerance::abs(abs), seed)?;
    let s1 = m[0].sf(q[0]);
    let s2 = m[1].sf(q[1]);
    let v = f12.value - 1.0 + s1 + s2;
    let err = f12.error_estimate + 4.0 * f64::EPSILON;
    if v > 1e4 * err {
        return Ok((v, err));
    }
    let direct = esn_joint_sf_with(&q, params, Tolerance::rel(1e-8, abs * 1e-3), seed)?;
    if direct.value <= 3.0 * direct.error_estimate {
        return Err(EsnError::AccuracyNotReached {
            value: direct.value,
            error_estimate: direct.error_estimate,
            points_used: direct.points_used,
        });
    }
    Ok((direct.value, direct.error_estimate))
}

/// χ(u) = P(F₁(X₁) > 1−u, F₂(X₂) > 1−u)/u with its error estimate.
pub fn chi_u_exact(params: &EsnParams, u: f64, target_abs_err: f64, seed: u64) -> Result<(f64, f64)> {
    check_biv(params)?;
    check_u(u)?;
    if !(1e-10..=1e-2).contains(&target_abs_err) {
        return Err(EsnError::Domain(format!(
            "target_abs_err must lie in [1e-10, 1e-2], got {target_abs_err:e}"
        )));
    }
    let m = margins_of(params)?;
    let q = [m[0].upper_quantile(u)?, m[1].upper_quantile(u)?];
    match joint_survival(params, &m, q, target_abs_err * u, seed) {
        Ok((v, e)) => Ok(((v / u).clamp(0.0, 1.0), e / u)),
        Err(EsnError::AccuracyNotReached {
            value,
            error_estimate,
            points_used,
        }) => Err(EsnError::AccuracyNotReached {
            value: value / u,
            error_estimate: error_estimate / u,
            points_used,
        }),
        Err(e) => Err(e),
    }
}

fn margins_of(params: &EsnParams) -> Result<[UniEsnParams; 2]> {
    let a = marginal_params(params, &[0])?.params.univariate().unwrap();
    let b = marginal_params(params, &[1])?.params.univariate().unwrap();
    Ok([a, b])
}

/// Bivariate parameters from (ω, α₁, α₂, τ).
pub fn bivariate_params(omega: f64, alpha: [f64; 2], tau: f64) -> Result<EsnParams> {
    EsnParams::new(CorrelationMatrix::bivariate(omega)?, alpha.to_vec(), tau)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiCurve {
    pub u_grid: Vec<f64>,
    pub chi_exact: Vec<f64>,
    pub chi_asymptotic: Vec<Option<f64>>,
    pub chi_printed: Vec<f64>,
    pub errors: Vec<f64>,
    /// Per-point failure messages; the matching chi_exact entry is the best available value.
    pub failures: Vec<Option<String>>,
}

/// χ(u) exact and asymptotic over a strictly decreasing grid.
pub fn chi_curve(omega: f64, alpha: [f64; 2], tau: f64, u_grid: &[f64], target_abs_err: f64, seed: u64) -> Result<ChiCurve> {
    if u_grid.is_empty() {
        return Err(EsnError::Domain("u grid is empty".into()));
    }
    for w in u_grid.windows(2) {
        if !(w[1] < w[0]) {
            return Err(EsnError::Domain("u grid must be strictly decreasing".into()));
        }
    }
    for &u in u_grid {
        check_u(u)?;
    }
    let params = bivariate_params(omega, alpha, tau)?;
    let asym = tail_asymptotics(omega, alpha, tau)?;
    let rows: Vec<(f64, f64, Option<f64>, f64, Option<String>)> = u_grid
        .par_iter()
        .enumerate()
        .map(|(i, &u)| {
            let (v, e, fail) = match chi_u_exact(&params, u, target_abs_err, seed.wrapping_add(i as u64)) {
                Ok((v, e)) => (v, e, None),
                Err(EsnError::AccuracyNotReached {
                    value, error_estimate, ..
                }) => (value.clamp(0.0, 1.0), error_estimate, Some("accuracy not reached".to_string())),
                Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
            };
            let a = asym.chi_asymptotic(u).ok().filter(|x| x.is_finite());
            (v, e, a, asym.printed_chi_asymptotic(u), fail)
        })
        .collect();
    let mut curve = ChiCurve {
        u_grid: u_grid.to_vec(),
        chi_exact: Vec::new(),
        chi_asymptotic: Vec::new(),
        chi_printed: Vec::new(),
        errors: Vec::new(),
        failures: Vec::new(),
    };
    for (v, e, a, p, f) in rows {
        curve.chi_exact.push(v);
        curve.errors.push(e);
        curve.chi_asymptotic.push(a);
        curve.chi_printed.push(p);
        curve.failures.push(f);
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    A,
    B,
    C,
    D,
}

/// P(X₂ ≥ x, X₁ ≥ t)/P(X₁ ≥ t), with t = x for (a), (b), xᾱ₂/ᾱ₁ for (c), x/ᾱ₁ for (d).
pub fn survival_ratio(params: &EsnParams, x: f64, scenario: Scenario, seed: u64) -> Result<(f64, f64)> {
    check_biv(params)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(EsnError::Domain(format!("threshold must be finite and non-negative, got {x}")));
    }
    let m = margins_of(params)?;
    let ab = [m[0].alpha_bar(), m[1].alpha_bar()];
    let t = match scenario {
        Scenario::A | Scenario::B => x,
        Scenario::C => x * ab[1] / ab[0],
        Scenario::D => x / ab[0],
    };
    let denom = m[0].sf(t);
    let (v, e) = joint_survival(params, &m, [t, x], 1e-12, seed)?;
    Ok(((v / denom).clamp(0.0, 1.0), e / denom))
}
