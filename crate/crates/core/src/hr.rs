//! Skewed Hüsler–Reiss max-stable model.
//!
//! Parameters are a symmetric matrix of dependence scales λ, skewness directions α° summing to
//! zero, and an extension τ. Each margin j carries a (d−1)-dimensional ESN law with correlation
//! Λ̄_j, slant α̃_j and extension τ̃_j; the stable tail dependence function is
//! L(z) = Σ_j z_j Φ_{d−1}(y_j; Λ̄_j, α̃_j, τ̃_j).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corr::CorrelationMatrix;
use crate::error::{EsnError, Result};
use crate::esn::{self, EsnParams, UniEsnParams};
use crate::mvn::Tolerance;
use crate::normal;
use crate::quad;

const SUM_TOL: f64 = 1e-12;
const SIMPLEX_TOL: f64 = 1e-12;

/// Raw model parameters. `lambda` holds the strict upper triangle in row order
/// (λ₁₂, λ₁₃, …, λ₂₃, …); `f64::INFINITY` marks pairwise independence (d = 2 only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrSkewParams {
    pub dim: usize,
    pub lambda: Vec<f64>,
    pub alpha_circ: Vec<f64>,
    pub tau: f64,
}

impl HrSkewParams {
    pub fn new(dim: usize, lambda: Vec<f64>, alpha_circ: Vec<f64>, tau: f64) -> Self {
        Self {
            dim,
            lambda,
            alpha_circ,
            tau,
        }
    }

    /// Bivariate model with the convention α° = (a, −a).
    pub fn bivariate(lambda: f64, a: f64, tau: f64) -> Self {
        Self::new(2, vec![lambda], vec![a, -a], tau)
    }

    /// λ_{ij}; zero on the diagonal.
    pub fn lambda_at(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // offset of row a in the packed upper triangle
        let row = a * (2 * self.dim - a - 1) / 2;
        self.lambda[row + b - a - 1]
    }

    pub fn lambda_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.lambda_at(i, j))
    }
}

/// Per-margin quantities of the limit. Indices are 0-based; `context` lists I_j in order.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedMarginJ {
    pub j: usize,
    pub context: Vec<usize>,
    pub corr_j: CorrelationMatrix,
    pub slant_j: Vec<f64>,
    pub ext_j: f64,
    /// c_{i|j} = t_j / t_i for i in `context`, so that z̃_i / z̃_j = (z_i / z_j) c_{i|j}.
    pub tilt_factors: Vec<f64>,
    /// ln t_j with t_j = Φ(τ̃_j / C_j) / Φ(τ / C_j).
    pub log_tilt: f64,
    #[serde(skip)]
    esn: Option<EsnParams>,
}

/// Checks the parameters and derives every margin; rejects α° that does not sum to zero.
pub fn validate(params: &HrSkewParams) -> Result<Vec<DerivedMarginJ>> {
    validate_with(params, false)
}

/// As [`validate`]; with `allow_invalid_alpha` the α° sum constraint is not enforced.
pub fn validate_with(params: &HrSkewParams, allow_invalid_alpha: bool) -> Result<Vec<DerivedMarginJ>> {
    let d = params.dim;
    if d < 2 {
        return Err(EsnError::Domain(format!("dimension must be at least 2, got {d}")));
    }
    if params.lambda.len() != d * (d - 1) / 2 {
        return Err(EsnError::Domain(format!(
            "dimension {d} needs {} lambda values, got {}",
            d * (d - 1) / 2,
            params.lambda.len()
        )));
    }
    if params.alpha_circ.len() != d {
        return Err(EsnError::Domain(format!(
            "alpha_circ has length {} but dimension is {d}",
            params.alpha_circ.len()
        )));
    }
    if !params.tau.is_finite() || params.alpha_circ.iter().any(|a| !a.is_finite()) {
        return Err(EsnError::Domain("alpha_circ and tau must be finite".into()));
    }
    for i in 0..d {
        for j in i + 1..d {
            let l = params.lambda_at(i, j);
            if l.is_nan() || l <= 0.0 {
                return Err(EsnError::InvalidLambda {
                    i: i + 1,
                    k: j + 1,
                    j: j + 1,
                    message: format!("lambda_{}{} = {l} must be positive", i + 1, j + 1),
                });
            }
            if l.is_infinite() && d > 2 {
                return Err(EsnError::InvalidLambda {
                    i: i + 1,
                    k: j + 1,
                    j: j + 1,
                    message: "infinite lambda is only supported for d = 2".into(),
                });
            }
        }
    }
    let residual: f64 = params.alpha_circ.iter().sum();
    if residual.abs() > SUM_TOL && !allow_invalid_alpha {
        return Err(EsnError::ConstraintViolation {
            message: "alpha_circ must sum to zero".into(),
            residual,
        });
    }
    (0..d).map(|j| derive_margin(params, j)).collect::<Result<Vec<_>>>().map(|mut m| {
        let logs: Vec<f64> = m.iter().map(|x| x.log_tilt).collect();
        for mj in &mut m {
            mj.tilt_factors = mj.context.iter().map(|&i| (logs[mj.j] - logs[i]).exp()).collect();
        }
        m
    })
}

fn derive_margin(params: &HrSkewParams, j: usize) -> Result<DerivedMarginJ> {
    let d = params.dim;
    let ctx: Vec<usize> = (0..d).filter(|&i| i != j).collect();
    let lam = |a: usize, b: usize| params.lambda_at(a, b);
    if lam(ctx[0], j).is_infinite() {
        // d = 2 independence: no ESN term is ever evaluated
        return Ok(DerivedMarginJ {
            j,
            context: ctx,
            corr_j: CorrelationMatrix::identity(1),
            slant_j: vec![0.0],
            ext_j: params.tau,
            tilt_factors: vec![1.0],
            log_tilt: 0.0,
            esn: None,
        });
    }
    let m = ctx.len();
    let mut bar = DMatrix::identity(m, m);
    for a in 0..m {
        for b in a + 1..m {
            let (i, k) = (ctx[a], ctx[b]);
            let v = (lam(i, j).powi(2) + lam(k, j).powi(2) - lam(i, k).powi(2)) / (2.0 * lam(i, j) * lam(k, j));
            if v.abs() > 1.0 + 1e-12 {
                return Err(EsnError::InvalidLambda {
                    i: i + 1,
                    k: k + 1,
                    j: j + 1,
                    message: format!("entry of the margin correlation is {v}, outside [-1, 1]"),
                });
            }
            bar[(a, b)] = v.clamp(-1.0, 1.0);
            bar[(b, a)] = bar[(a, b)];
        }
    }
    let corr = CorrelationMatrix::new(bar.clone()).map_err(|e| {
        let (mut ia, mut ib, mut big) = (0, 1.min(m - 1), -1.0);
        for a in 0..m {
            for b in a + 1..m {
                if bar[(a, b)].abs() > big {
                    big = bar[(a, b)].abs();
                    (ia, ib) = (a, b);
                }
            }
        }
        EsnError::InvalidLambda {
            i: ctx[ia] + 1,
            k: ctx[ib] + 1,
            j: j + 1,
            message: e.to_string(),
        }
    })?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let slant: Vec<f64> = ctx.iter().map(|&i| sqrt2 * params.alpha_circ[i] * lam(i, j)).collect();
    let ext = params.tau - sqrt2 * ctx.iter().map(|&i| params.alpha_circ[i] * lam(i, j).powi(2)).sum::<f64>();
    let esn = EsnParams::new(corr.clone(), slant.clone(), ext)?;
    let c = (1.0 + esn.quad_form()).sqrt();
    let log_tilt = normal::log_cdf(ext / c) - normal::log_cdf(params.tau / c);
    Ok(DerivedMarginJ {
        j,
        context: ctx,
        corr_j: corr,
        slant_j: slant,
        ext_j: ext,
        tilt_factors: Vec::new(),
        log_tilt,
        esn: Some(esn),
    })
}

/// Validated model with cached margins; cheap to share across threads.
#[derive(Debug, Clone, Serialize)]
pub struct HrModel {
    params: HrSkewParams,
    margins: Vec<DerivedMarginJ>,
    independent: bool,
}

/// Bivariate diagnostic: the identity χ = 2 − L(1, 1) next to the two printed closed-form
/// expressions, which are not reconciled with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiDiagnostic {
    pub chi: f64,
    pub printed_first: f64,
    pub printed_second: f64,
    pub printed_sum: f64,
    /// The two printed expressions agree to 1e-8.
    pub printed_agree: bool,
    /// The sum of the printed expressions equals χ to 1e-8.
    pub printed_sum_matches: bool,
}

/// Total mass and coordinate means of the angular density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexMoments {
    pub mass: f64,
    pub means: Vec<f64>,
}

impl HrModel {
    pub fn new(params: HrSkewParams) -> Result<Self> {
        Self::with_options(params, false)
    }

    pub fn with_options(params: HrSkewParams, allow_invalid_alpha: bool) -> Result<Self> {
        let margins = validate_with(&params, allow_invalid_alpha)?;
        let independent = params.dim == 2 && params.lambda[0].is_infinite();
        Ok(Self {
            params,
            margins,
            independent,
        })
    }

    pub fn params(&self) -> &HrSkewParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn margins(&self) -> &[DerivedMarginJ] {
        &self.margins
    }

    pub fn is_independent(&self) -> bool {
        self.independent
    }

    /// Stable tail dependence function L(z).
    pub fn stable_tail_l(&self, z: &[f64], target_abs_err: f64, seed: u64) -> Result<f64> {
        let d = self.dim();
        if z.len() != d {
            return Err(EsnError::Domain(format!("z has length {} but dimension is {d}", z.len())));
        }
        if z.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(EsnError::Domain("z must be non-negative".into()));
        }
        if z.iter().any(|v| v.is_infinite()) {
            return Ok(f64::INFINITY);
        }
        let total: f64 = z.iter().sum();
        if self.independent || total == 0.0 {
            return Ok(total);
        }
        let tol = Tolerance::abs((target_abs_err / (d as f64 * total)).max(1e-15));
        let mut sum = 0.0;
        for mj in &self.margins {
            let zj = z[mj.j];
            if zj == 0.0 {
                continue;
            }
            let y: Vec<f64> = mj
                .context
                .iter()
                .map(|&i| {
                    if z[i] == 0.0 {
                        f64::INFINITY
                    } else {
                        let l = self.params.lambda_at(i, mj.j);
                        let lr = (zj / z[i]).ln() - mj.log_tilt + self.margins[i].log_tilt;
                        l + lr / (2.0 * l)
                    }
                })
                .collect();
            let esn = mj.esn.as_ref().expect("finite lambda margin");
            let p = esn::esn_cdf_with(&y, esn, tol, seed.wrapping_add(mj.j as u64))?;
            sum += zj * p.value;
        }
        Ok(sum)
    }

    /// Pickands dependence function on the unit simplex.
    pub fn pickands_a(&self, t: &[f64], target_abs_err: f64, seed: u64) -> Result<f64> {
        check_simplex(t, self.dim(), false)?;
        let a = self.stable_tail_l(t, target_abs_err, seed)?;
        let lo = t.iter().copied().fold(0.0, f64::max);
        Ok(a.clamp(lo, 1.0))
    }

    /// Angular density at an interior simplex point.
    pub fn angular_density_h(&self, w: &[f64]) -> Result<f64> {
        check_simplex(w, self.dim(), true)?;
        let lw: Vec<f64> = w.iter().map(|v| v.ln()).collect();
        Ok(self.log_h_from_logs(&lw)?.exp())
    }

    fn log_h_from_logs(&self, lw: &[f64]) -> Result<f64> {
        if self.independent {
            return Err(EsnError::Domain(
                "the independence model has no angular density in the interior".into(),
            ));
        }
        let d = self.dim();
        let m1 = &self.margins[0];
        let mut y = Vec::with_capacity(d - 1);
        let mut log_den = (d as f64).ln() + (d - 1) as f64 * std::f64::consts::LN_2 + 2.0 * lw[0];
        for &i in &m1.context {
            let l = self.params.lambda_at(i, 0);
            let lr = lw[i] - lw[0] + self.margins[i].log_tilt - m1.log_tilt;
            y.push(l + lr / (2.0 * l));
            log_den += lw[i] + l.ln();
        }
        let esn = m1.esn.as_ref().expect("finite lambda margin");
        Ok(esn::esn_log_pdf(&y, esn)? - log_den)
    }

    /// χ = 2 − L(1, 1) with the printed closed forms alongside.
    pub fn chi_upper(&self) -> Result<ChiDiagnostic> {
        if self.dim() != 2 {
            return Err(EsnError::Domain("chi_upper needs a bivariate model".into()));
        }
        let chi = (2.0 - self.stable_tail_l(&[1.0, 1.0], 1e-12, 0)?).clamp(0.0, 1.0);
        let (first, second) = if self.independent {
            (0.0, 0.0)
        } else {
            let l = self.params.lambda[0];
            let (a1, a2, tau) = (self.params.alpha_circ[0], self.params.alpha_circ[1], self.params.tau);
            let s2 = std::f64::consts::SQRT_2;
            let p = normal::cdf((tau - s2 * l * l * a2) / (1.0 + 2.0 * l * l * a1));
            let q = normal::cdf((tau + s2 * l * l * a1) / (1.0 + 2.0 * l * l * a2));
            let first = printed_term(l + (p / q).ln() / (2.0 * l), -s2 * l * a2, tau + s2 * l * l * a2);
            let second = printed_term(l + (q / p).ln() / (2.0 * l), s2 * l * a1, tau - s2 * l * l * a1);
            (first, second)
        };
        Ok(ChiDiagnostic {
            chi,
            printed_first: first,
            printed_second: second,
            printed_sum: first + second,
            printed_agree: (first - second).abs() <= 1e-8,
            printed_sum_matches: (first + second - chi).abs() <= 1e-8,
        })
    }

    /// Limit distribution G(x) = exp(−L(e^{−x})).
    pub fn gev_cdf_g(&self, x: &[f64], target_abs_err: f64, seed: u64) -> Result<f64> {
        if x.iter().any(|v| v.is_nan()) {
            return Err(EsnError::Domain("x must not contain NaN".into()));
        }
        if x.contains(&f64::NEG_INFINITY) {
            return Ok(0.0);
        }
        let z: Vec<f64> = x.iter().map(|v| (-v).exp()).collect();
        Ok((-self.stable_tail_l(&z, target_abs_err, seed)?).exp())
    }

    /// Mass and means of the angular density over the simplex (d = 2 or 3).
    pub fn angular_moments(&self) -> Result<SimplexMoments> {
        match self.dim() {
            2 => self.moments_2(),
            3 => self.moments_3(),
            d => Err(EsnError::Domain(format!("simplex integration supports d = 2, 3, not {d}"))),
        }
    }

    fn moments_2(&self) -> Result<SimplexMoments> {
        // w = Φ(s) maps the open interval onto the real line
        let g = |s: f64, k: usize| -> f64 {
            let lw = [normal::log_cdf(s), normal::log_cdf(-s)];
            let h = self.log_h_from_logs(&lw).map(f64::exp).unwrap_or(f64::NAN);
            let weight = if k == 0 { 1.0 } else { lw[k - 1].exp() };
            h * weight * normal::pdf(s)
        };
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = quad::integrate(|s| g(s, k), f64::NEG_INFINITY, f64::INFINITY, 1e-10, 1e-9)?.value;
        }
        Ok(SimplexMoments {
            mass: out[0],
            means: vec![out[1], out[2]],
        })
    }

    fn moments_3(&self) -> Result<SimplexMoments> {
        // Duffy map w₁ = 1 − u, w₂ = u(1 − v), w₃ = uv with u = Φ(s), v = Φ(r), so every
        // edge and vertex of the simplex sits at infinity where adaptive panels can reach it
        let mut out = [0.0; 4];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut failure = None;
            let outer = |s: f64| {
                let (lu, l1u) = (normal::log_cdf(s), normal::log_cdf(-s));
                let inner = |r: f64| {
                    let lw = [l1u, lu + normal::log_cdf(-r), lu + normal::log_cdf(r)];
                    let weight = if k == 0 { 1.0 } else { lw[k - 1].exp() };
                    match self.log_h_from_logs(&lw) {
                        Ok(lh) => (lh + lu).exp() * weight * normal::pdf(r),
                        Err(_) => f64::NAN,
                    }
                };
                match quad::integrate(inner, f64::NEG_INFINITY, f64::INFINITY, 1e-12, 1e-10) {
                    Ok(q) => q.value * normal::pdf(s),
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            };
            let q = quad::integrate(outer, f64::NEG_INFINITY, f64::INFINITY, 1e-10, 1e-9);
            if let Some(e) = failure {
                return Err(e);
            }
            *slot = q?.value;
        }
        Ok(SimplexMoments {
            mass: out[0],
            means: out[1..].to_vec(),
        })
    }
}

fn printed_term(x: f64, slant: f64, ext: f64) -> f64 {
    match UniEsnParams::new(slant, ext) {
        Ok(u) if !x.is_nan() => u.sf(x),
        _ => f64::NAN,
    }
}

fn check_simplex(t: &[f64], d: usize, interior: bool) -> Result<()> {
    if t.len() != d {
        return Err(EsnError::Domain(format!("point has length {} but dimension is {d}", t.len())));
    }
    if t.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(EsnError::Domain("simplex point must be non-negative".into()));
    }
    let s: f64 = t.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(EsnError::Domain(format!("simplex point sums to {s}, not 1")));
    }
    if interior && t.contains(&0.0) {
        return Err(EsnError::Domain("angular density is defined in the simplex interior only".into()));
    }
    Ok(())
}

pub fn stable_tail_l(model: &HrModel, z: &[f64], target_abs_err: f64, seed: u64) -> Result<f64> {
    model.stable_tail_l(z, target_abs_err, seed)
}

pub fn pickands_a(model: &HrModel, t: &[f64], target_abs_err: f64, seed: u64) -> Result<f64> {
    model.pickands_a(t, target_abs_err, seed)
}

pub fn angular_density_h(model: &HrModel, w: &[f64]) -> Result<f64> {
    model.angular_density_h(w)
}

pub fn chi_upper(model: &HrModel) -> Result<ChiDiagnostic> {
    model.chi_upper()
}

pub fn gev_cdf_g(model: &HrModel, x: &[f64], target_abs_err: f64, seed: u64) -> Result<f64> {
    model.gev_cdf_g(x, target_abs_err, seed)
}
