//! Extended skew-normal distribution in correlation form.
//!
//! Density φ_d(x; Ω̄) Φ(αᵀx + τ) / Φ(τ/√(1+αᵀΩ̄α)). Probabilities go through
//! the hidden-truncation representation X = Z | U₀ > −τ̄ with corr(Z, U₀) = δ.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::corr::{cholesky_with_jitter, CorrelationMatrix};
use crate::error::{EsnError, Result};
use crate::mvn::{self, bvnd, CdfResult, Tolerance};
use crate::normal;
use crate::quad;
use crate::root;

const SAMPLE_CHUNK: usize = 4096;
const TAIL_SWITCH: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct EsnParams {
    corr: CorrelationMatrix,
    slant: Vec<f64>,
    extension: f64,
    quad_form: f64,
    normalizer: f64,
    log_normalizer: f64,
    delta: Vec<f64>,
    #[serde(skip)]
    chol: DMatrix<f64>,
}

impl EsnParams {
    pub fn new(corr: CorrelationMatrix, slant: Vec<f64>, extension: f64) -> Result<Self> {
        let d = corr.dim();
        if slant.len() != d {
            return Err(EsnError::Domain(format!("slant has length {} but dimension is {d}", slant.len())));
        }
        if slant.iter().any(|a| !a.is_finite()) || !extension.is_finite() {
            return Err(EsnError::Domain("slant and extension must be finite".into()));
        }
        let chol = corr.cholesky()?;
        let a = DVector::from_column_slice(&slant);
        let oa = corr.matrix() * &a;
        let quad_form = a.dot(&oa).max(0.0);
        let root = (1.0 + quad_form).sqrt();
        let tau_bar = extension / root;
        let delta: Vec<f64> = oa.iter().map(|v| v / root).collect();
        Ok(Self {
            corr,
            slant,
            extension,
            quad_form,
            normalizer: normal::cdf(tau_bar),
            log_normalizer: normal::log_cdf(tau_bar),
            delta,
            chol,
        })
    }

    pub fn dim(&self) -> usize {
        self.corr.dim()
    }
    pub fn corr(&self) -> &CorrelationMatrix {
        &self.corr
    }
    pub fn slant(&self) -> &[f64] {
        &self.slant
    }
    pub fn extension(&self) -> f64 {
        self.extension
    }
    pub fn quad_form(&self) -> f64 {
        self.quad_form
    }
    /// K = Φ(τ/√(1+Q)).
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }
    /// τ̄ = τ/√(1+Q); the latent variable is truncated to U₀ > −τ̄.
    pub fn latent_threshold(&self) -> f64 {
        self.extension / (1.0 + self.quad_form).sqrt()
    }

    /// The d = 1 parameters, when dim is 1.
    pub fn univariate(&self) -> Option<UniEsnParams> {
        (self.dim() == 1).then(|| UniEsnParams {
            slant: self.slant[0],
            extension: self.extension,
        })
    }

    /// Augmented (d+1) correlation with latent row `sign·δ`.
    fn augmented(&self, sign: f64) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::identity(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(self.corr.matrix());
        for i in 0..d {
            m[(i, d)] = sign * self.delta[i];
            m[(d, i)] = sign * self.delta[i];
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniEsnParams {
    pub slant: f64,
    pub extension: f64,
}

impl UniEsnParams {
    pub fn new(slant: f64, extension: f64) -> Result<Self> {
        if !slant.is_finite() || !extension.is_finite() {
            return Err(EsnError::Domain("slant and extension must be finite".into()));
        }
        Ok(Self { slant, extension })
    }

    /// ᾱ = √(1+α²).
    pub fn alpha_bar(&self) -> f64 {
        self.slant.hypot(1.0)
    }
    pub fn delta(&self) -> f64 {
        self.slant / self.alpha_bar()
    }
    pub fn latent_threshold(&self) -> f64 {
        self.extension / self.alpha_bar()
    }
    pub fn normalizer(&self) -> f64 {
        normal::cdf(self.latent_threshold())
    }
    pub fn log_normalizer(&self) -> f64 {
        normal::log_cdf(self.latent_threshold())
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        normal::log_pdf(x) + normal::log_cdf(self.slant * x + self.extension) - self.log_normalizer()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.log_cdf(x).exp()
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.log_sf(x).exp()
    }

    /// ln P(X ≤ x).
    pub fn log_cdf(&self, x: f64) -> f64 {
        self.log_tails(x).0
    }

    /// ln P(X > x), accurate far into the upper tail.
    pub fn log_sf(&self, x: f64) -> f64 {
        self.log_tails(x).1
    }

    fn log_tails(&self, x: f64) -> (f64, f64) {
        if x.is_nan() {
            return (f64::NAN, f64::NAN);
        }
        if x == f64::INFINITY {
            return (0.0, f64::NEG_INFINITY);
        }
        if x == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, 0.0);
        }
        if self.slant == 0.0 {
            return (normal::log_cdf(x), normal::log_cdf(-x));
        }
        let k = self.normalizer();
        let (f, s) = if k >= 1e-3 {
            let delta = self.delta();
            let tb = self.latent_threshold();
            let s = bvnd(x, -tb, delta) / k;
            let f = bvnd(-x, -tb, -delta) / k;
            (f.clamp(0.0, 1.0), s.clamp(0.0, 1.0))
        } else {
            let s = self.latent_sf(x).clamp(0.0, 1.0);
            (1.0 - s, s)
        };
        if s < TAIL_SWITCH {
            let ls = self.log_tail_quad(x, true);
            ((-ls.exp().min(1.0)).ln_1p(), ls)
        } else if f < TAIL_SWITCH {
            let lf = self.log_tail_quad(x, false);
            (lf, (-lf.exp().min(1.0)).ln_1p())
        } else {
            (f.ln(), s.ln())
        }
    }

    /// ln of ∫ over the tail beyond x of the density, scaled by its value at x.
    fn log_tail_quad(&self, x: f64, upper: bool) -> f64 {
        let h0 = self.log_pdf(x);
        if !h0.is_finite() {
            return f64::NEG_INFINITY;
        }
        let g = |s: f64| (self.log_pdf(s) - h0).exp();
        let r = if upper {
            quad::integrate(g, x, f64::INFINITY, 0.0, 1e-13)
        } else {
            quad::integrate(g, f64::NEG_INFINITY, x, 0.0, 1e-13)
        };
        match r {
            Ok(r) if r.value > 0.0 => h0 + r.value.ln(),
            _ => f64::NEG_INFINITY,
        }
    }

    /// P(X > x) by integrating over the truncated latent variable.
    fn latent_sf(&self, x: f64) -> f64 {
        let delta = self.delta();
        let s = (1.0 - delta * delta).sqrt();
        let lk = self.log_normalizer();
        let lo = -self.latent_threshold();
        let g = |t: f64| (normal::log_pdf(t) - lk + normal::log_cdf((delta * t - x) / s)).exp();
        let t0 = x / delta;
        let mut total = 0.0;
        if t0 > lo && t0.is_finite() {
            total += quad::integrate(g, lo, t0, 1e-300, 1e-12).map(|r| r.value).unwrap_or(f64::NAN);
            total += quad::integrate(g, t0, f64::INFINITY, 1e-300, 1e-12).map(|r| r.value).unwrap_or(f64::NAN);
        } else {
            total = quad::integrate(g, lo, f64::INFINITY, 1e-300, 1e-12).map(|r| r.value).unwrap_or(f64::NAN);
        }
        total
    }

    /// x with P(X > x) = u, solved in log scale so that tiny u keep relative accuracy.
    pub fn upper_quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(EsnError::Domain(format!("upper-tail probability must lie in (0,1), got {u}")));
        }
        let target = u.ln();
        let seed = self.seed_upper(u.min(0.5));
        let mut f = |x: f64| self.log_sf(x) - target;
        solve_monotone(&mut f, seed, 1e-14)
    }

    /// x with P(X ≤ p) = p.
    pub fn quantile(&self, p: f64, tol: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(EsnError::Domain(format!("probability must lie in (0,1), got {p}")));
        }
        if !(tol >= 1e-12) {
            return Err(EsnError::Domain(format!("tolerance must be at least 1e-12, got {tol}")));
        }
        if self.slant == 0.0 {
            return Ok(normal::quantile_unchecked(p));
        }
        let x = if p > 0.5 {
            self.upper_quantile(1.0 - p)?
        } else {
            let target = p.ln();
            let mirrored = UniEsnParams {
                slant: -self.slant,
                extension: self.extension,
            };
            let seed = -mirrored.seed_upper(p);
            let mut f = |x: f64| target - self.log_cdf(x);
            solve_monotone(&mut f, seed, 1e-14)?
        };
        let err = (self.cdf(x) - p).abs();
        if err > tol {
            return Err(EsnError::NoConvergence(format!(
                "quantile for p = {p} reached |F(x) - p| = {err:e}"
            )));
        }
        Ok(x)
    }

    /// Asymptotic upper-tail quantile: P(X > x) ≈ u for small u.
    pub fn quantile_seed(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 0.5) {
            return Err(EsnError::Domain(format!("quantile seed needs u in (0, 0.5), got {u}")));
        }
        Ok(self.seed_upper(u))
    }

    fn seed_upper(&self, u: f64) -> f64 {
        let big_l = -u.ln();
        let ell = (2.0 * big_l).sqrt();
        let c0 = (2.0 * std::f64::consts::PI.sqrt()).ln();
        // with zero slant the skewing factor Φ(τ) cancels K exactly
        let log_k = if self.slant == 0.0 { 0.0 } else { self.log_normalizer() };
        let x = ell - (c0 + 0.5 * big_l.ln() + log_k) / ell;
        if self.slant >= 0.0 {
            return x;
        }
        let a = self.slant;
        let t = self.extension;
        let ab2 = 1.0 + a * a;
        let ab = ab2.sqrt();
        let v = x / ab - a * t / ab2 - (c0 + a.abs().ln() + 0.5 * big_l.ln() + t * t / (2.0 * ab2)) / (ell * ab);
        if v.is_finite() {
            v
        } else {
            x
        }
    }
}

/// Root of a decreasing function using a bracket grown from `seed ± 2`.
fn solve_monotone<F: FnMut(f64) -> f64>(f: &mut F, seed: f64, xtol: f64) -> Result<f64> {
    let seed = if seed.is_finite() { seed } else { 0.0 };
    let (lo, hi, flo, fhi) = root::expand_bracket(f, seed - 2.0, seed + 2.0)?;
    root::brent(f, lo, hi, flo, fhi, xtol * seed.abs().max(1.0), 0.0)
}

pub fn esn_log_pdf(x: &[f64], params: &EsnParams) -> Result<f64> {
    if x.len() != params.dim() {
        return Err(EsnError::Domain(format!(
            "point has length {} but dimension is {}",
            x.len(),
            params.dim()
        )));
    }
    let lin: f64 = x.iter().zip(&params.slant).map(|(a, b)| a * b).sum::<f64>() + params.extension;
    Ok(mvn::log_pdf_with_factor(x, &params.chol) + normal::log_cdf(lin) - params.log_normalizer)
}

pub fn esn_pdf(x: &[f64], params: &EsnParams) -> Result<f64> {
    Ok(esn_log_pdf(x, params)?.exp())
}

/// P(X ≤ x).
pub fn esn_cdf(x: &[f64], params: &EsnParams, target_abs_err: f64, seed: u64) -> Result<CdfResult> {
    if !(1e-10..=1e-2).contains(&target_abs_err) {
        return Err(EsnError::Domain(format!(
            "target_abs_err must lie in [1e-10, 1e-2], got {target_abs_err:e}"
        )));
    }
    esn_cdf_with(x, params, Tolerance::abs(target_abs_err), seed)
}

pub(crate) fn esn_cdf_with(x: &[f64], params: &EsnParams, tol: Tolerance, seed: u64) -> Result<CdfResult> {
    if x.len() != params.dim() {
        return Err(EsnError::Domain(format!(
            "upper limit has length {} but dimension is {}",
            x.len(),
            params.dim()
        )));
    }
    if let Some(u) = params.univariate() {
        return Ok(CdfResult {
            value: u.cdf(x[0]),
            error_estimate: 1e-15,
            points_used: 0,
        });
    }
    if x.iter().all(|&v| v == f64::INFINITY) {
        return Ok(CdfResult {
            value: 1.0,
            error_estimate: 0.0,
            points_used: 0,
        });
    }
    let mut upper = x.to_vec();
    upper.push(params.latent_threshold());
    let k = params.normalizer;
    let inner = Tolerance {
        abs: tol.abs * k,
        ..tol
    };
    scale(mvn::orthant(&upper, &params.augmented(-1.0), inner, seed), k)
}

/// P(X > q) jointly in every coordinate.
pub fn esn_joint_sf(q: &[f64], params: &EsnParams, target_abs_err: f64, seed: u64) -> Result<CdfResult> {
    if !(1e-10..=1e-2).contains(&target_abs_err) {
        return Err(EsnError::Domain(format!(
            "target_abs_err must lie in [1e-10, 1e-2], got {target_abs_err:e}"
        )));
    }
    esn_joint_sf_with(q, params, Tolerance::abs(target_abs_err), seed)
}

pub(crate) fn esn_joint_sf_with(q: &[f64], params: &EsnParams, tol: Tolerance, seed: u64) -> Result<CdfResult> {
    if q.len() != params.dim() {
        return Err(EsnError::Domain(format!(
            "threshold has length {} but dimension is {}",
            q.len(),
            params.dim()
        )));
    }
    if let Some(u) = params.univariate() {
        return Ok(CdfResult {
            value: u.sf(q[0]),
            error_estimate: 1e-15,
            points_used: 0,
        });
    }
    let mut upper: Vec<f64> = q.iter().map(|v| -v).collect();
    upper.push(params.latent_threshold());
    let k = params.normalizer;
    let inner = Tolerance {
        abs: tol.abs * k,
        ..tol
    };
    scale(mvn::orthant(&upper, &params.augmented(1.0), inner, seed), k)
}

fn scale(r: Result<CdfResult>, k: f64) -> Result<CdfResult> {
    match r {
        Ok(c) => Ok(CdfResult {
            value: (c.value / k).clamp(0.0, 1.0),
            error_estimate: c.error_estimate / k,
            points_used: c.points_used,
        }),
        Err(EsnError::AccuracyNotReached {
            value,
            error_estimate,
            points_used,
        }) => Err(EsnError::AccuracyNotReached {
            value: (value / k).clamp(0.0, 1.0),
            error_estimate: error_estimate / k,
            points_used,
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginalMap {
    pub keep: Vec<usize>,
    pub params: EsnParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionalMap {
    pub given: Vec<usize>,
    pub rest: Vec<usize>,
    pub location: Vec<f64>,
    #[serde(serialize_with = "ser_rows")]
    pub scale_matrix: DMatrix<f64>,
    /// Slant of the standardised conditional, diag(Σ)^{1/2} α_Ī.
    pub slant: Vec<f64>,
    pub extension: f64,
    /// Slant acting on y − location in original units.
    pub raw_slant: Vec<f64>,
}

fn ser_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    rows.serialize(s)
}

impl ConditionalMap {
    /// Log density of X_Ī at y given the conditioning values.
    pub fn log_pdf(&self, y: &[f64]) -> Result<f64> {
        let k = self.rest.len();
        if y.len() != k {
            return Err(EsnError::Domain(format!("point has length {} but {} coordinates remain", y.len(), k)));
        }
        let l = cholesky_with_jitter(&self.scale_matrix)?;
        let c: Vec<f64> = y.iter().zip(&self.location).map(|(a, b)| a - b).collect();
        let lin: f64 = c.iter().zip(&self.raw_slant).map(|(a, b)| a * b).sum::<f64>() + self.extension;
        let a = DVector::from_column_slice(&self.raw_slant);
        let q = a.dot(&(&self.scale_matrix * &a)).max(0.0);
        Ok(mvn::log_pdf_with_factor(&c, &l) + normal::log_cdf(lin) - normal::log_cdf(self.extension / (1.0 + q).sqrt()))
    }
}

fn check_index_set(idx: &[usize], d: usize) -> Result<Vec<usize>> {
    if idx.is_empty() || idx.len() >= d {
        return Err(EsnError::Index(format!(
            "index set must be a non-empty strict subset of 0..{d}, got {idx:?}"
        )));
    }
    let mut seen = vec![false; d];
    for &i in idx {
        if i >= d || seen[i] {
            return Err(EsnError::Index(format!("invalid or repeated index {i} for dimension {d}")));
        }
        seen[i] = true;
    }
    Ok((0..d).filter(|&i| !seen[i]).collect())
}

struct Blocks {
    rest: Vec<usize>,
    /// Ω̄_II⁻¹ Ω̄_IĪ
    coef: DMatrix<f64>,
    /// Ω̄_ĪĪ − Ω̄_ĪI Ω̄_II⁻¹ Ω̄_IĪ
    schur: DMatrix<f64>,
}

fn blocks(corr: &CorrelationMatrix, idx: &[usize]) -> Result<Blocks> {
    let rest = check_index_set(idx, corr.dim())?;
    let m = corr.matrix();
    let pick = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| m[(r[i], c[j])]);
    let s_ii = pick(idx, idx);
    let s_ir = pick(idx, &rest);
    let s_rr = pick(&rest, &rest);
    let l = cholesky_with_jitter(&s_ii)?;
    let half = l.solve_lower_triangular(&s_ir).expect("factor has positive diagonal");
    let coef = l.transpose().solve_upper_triangular(&half).expect("factor has positive diagonal");
    let schur = &s_rr - s_ir.transpose() * &coef;
    Ok(Blocks { rest, coef, schur })
}

/// ESN parameters of the sub-vector X_keep.
pub fn marginal_params(params: &EsnParams, keep: &[usize]) -> Result<MarginalMap> {
    let b = blocks(&params.corr, keep)?;
    let a_keep = DVector::from_iterator(keep.len(), keep.iter().map(|&i| params.slant[i]));
    let a_rest = DVector::from_iterator(b.rest.len(), b.rest.iter().map(|&i| params.slant[i]));
    let den = (1.0 + a_rest.dot(&(&b.schur * &a_rest)).max(0.0)).sqrt();
    let slant = (a_keep + &b.coef * &a_rest) / den;
    let corr = params.corr.submatrix(keep);
    Ok(MarginalMap {
        keep: keep.to_vec(),
        params: EsnParams::new(corr, slant.iter().copied().collect(), params.extension / den)?,
    })
}

/// Distribution of X_rest given X_given = x_given.
pub fn conditional_params(params: &EsnParams, given: &[usize], x_given: &[f64]) -> Result<ConditionalMap> {
    if x_given.len() != given.len() {
        return Err(EsnError::Index(format!(
            "{} conditioning values for {} indices",
            x_given.len(),
            given.len()
        )));
    }
    let b = blocks(&params.corr, given)?;
    let x = DVector::from_column_slice(x_given);
    let a_given = DVector::from_iterator(given.len(), given.iter().map(|&i| params.slant[i]));
    let a_rest = DVector::from_iterator(b.rest.len(), b.rest.iter().map(|&i| params.slant[i]));
    let location = b.coef.transpose() * &x;
    let extension = a_rest.dot(&location) + a_given.dot(&x) + params.extension;
    let slant = (0..b.rest.len()).map(|i| b.schur[(i, i)].max(0.0).sqrt() * a_rest[i]).collect();
    if cholesky_with_jitter(&b.schur).is_err() {
        return Err(EsnError::SingularMatrix("conditional scale matrix is not positive definite".into()));
    }
    Ok(ConditionalMap {
        given: given.to_vec(),
        rest: b.rest,
        location: location.iter().copied().collect(),
        scale_matrix: b.schur,
        slant,
        extension,
        raw_slant: a_rest.iter().copied().collect(),
    })
}

/// Exact draws: truncated latent, then the conditional Gaussian.
/// Rows are produced in fixed-size chunks, each with its own stream, so the
/// output does not depend on the thread count.
pub fn esn_sample(params: &EsnParams, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(EsnError::Domain("sample size must be at least 1".into()));
    }
    let d = params.dim();
    let sampler = Sampler::new(params)?;
    let chunks = n.div_ceil(SAMPLE_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let rows = SAMPLE_CHUNK.min(n - c * SAMPLE_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut out = vec![0.0; rows * d];
            let mut eps = vec![0.0; d];
            for row in out.chunks_mut(d) {
                sampler.draw(&mut rng, &mut eps, row);
            }
            out
        })
        .collect();
    let flat: Vec<f64> = parts.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(n, d, &flat))
}

/// Precomputed factors for repeated draws.
pub(crate) struct Sampler {
    delta: Vec<f64>,
    l: DMatrix<f64>,
    tb: f64,
    log_k: f64,
}

impl Sampler {
    pub(crate) fn new(params: &EsnParams) -> Result<Self> {
        let delta = DVector::from_column_slice(&params.delta);
        let cond = params.corr.matrix() - &delta * delta.transpose();
        Ok(Self {
            l: cholesky_with_jitter(&cond)?,
            delta: params.delta.clone(),
            tb: params.latent_threshold(),
            log_k: params.log_normalizer,
        })
    }

    /// Writes one draw into `out`; `eps` is scratch of the same length.
    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, eps: &mut [f64], out: &mut [f64]) {
        let t = truncated_latent(rng, self.tb, self.log_k);
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut v = self.delta[i] * t;
            for (k, e) in eps.iter().enumerate().take(i + 1) {
                v += self.l[(i, k)] * e;
            }
            *o = v;
        }
    }
}

/// T ~ N(0,1) conditioned on T > −τ̄: rejection when the acceptance rate is at
/// least one half, otherwise −T = Φ⁻¹(U·Φ(τ̄)).
pub(crate) fn truncated_latent<R: Rng>(rng: &mut R, tb: f64, log_k: f64) -> f64 {
    if tb >= 0.0 {
        loop {
            let t: f64 = rng.sample(StandardNormal);
            if t > -tb {
                return t;
            }
        }
    }
    let u: f64 = rng.sample(Open01);
    -normal::quantile_from_log(u.ln() + log_k)
}

/// esn_quantile for univariate parameters.
pub fn esn_quantile(p: f64, params: &UniEsnParams, tol: f64) -> Result<f64> {
    params.quantile(p, tol)
}

pub fn quantile_seed(u: f64, params: &UniEsnParams) -> Result<f64> {
    params.quantile_seed(u)
}
