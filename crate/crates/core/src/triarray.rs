//! Triangular arrays of ESN vectors whose maxima converge to the skewed Hüsler–Reiss limit.
//!
//! Row n uses ω_{n;ij} = 1 − λ²_{ij}/ln n and α_{n;j} = α°_j √(ln n) with τ fixed.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corr::CorrelationMatrix;
use crate::error::{EsnError, Result};
use crate::esn::{self, EsnParams, Sampler};
use crate::hr::{HrModel, HrSkewParams};
use crate::normal;

/// Default cap on scalar normal draws per simulation.
pub const DEFAULT_MAX_DRAWS: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriArraySpec {
    pub hr: HrSkewParams,
    pub n: u64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_max_draws")]
    pub max_draws: u64,
}

fn default_max_draws() -> u64 {
    DEFAULT_MAX_DRAWS
}

impl TriArraySpec {
    pub fn new(hr: HrSkewParams, n: u64, replicates: usize, seed: u64) -> Self {
        Self {
            hr,
            n,
            replicates,
            seed,
            max_draws: DEFAULT_MAX_DRAWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormingConstants {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub ell_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub ks_margin: Vec<f64>,
    pub copula_sup: f64,
    pub n: u64,
    pub replicates: usize,
}

fn omega_matrix(hr: &HrSkewParams, ln_n: f64) -> DMatrix<f64> {
    DMatrix::from_fn(hr.dim, hr.dim, |i, j| {
        if i == j {
            return 1.0;
        }
        let l = hr.lambda_at(i, j);
        if l.is_infinite() {
            0.0
        } else {
            1.0 - l * l / ln_n
        }
    })
}

fn admissible(hr: &HrSkewParams, ln_n: f64) -> bool {
    let m = omega_matrix(hr, ln_n);
    if m.iter().any(|v| *v <= -1.0) {
        return false;
    }
    CorrelationMatrix::new(m).is_ok()
}

/// Smallest integer n ≥ 3 whose row matrix is a valid correlation matrix.
pub fn smallest_admissible_n(hr: &HrSkewParams) -> Option<u64> {
    let mut hi = 3f64.ln();
    while !admissible(hr, hi) {
        hi *= 2.0;
        if hi > 700.0 {
            return None;
        }
    }
    let mut lo = 3f64.ln();
    if admissible(hr, lo) {
        return Some(3);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if admissible(hr, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut n = hi.exp().floor().max(3.0) as u64;
    while !admissible(hr, (n as f64).ln()) {
        n += 1;
    }
    Some(n)
}

/// ESN parameters of row n of the canonical array.
pub fn build_params_n(hr: &HrSkewParams, n: u64) -> Result<EsnParams> {
    if n < 3 {
        return Err(EsnError::Domain(format!("row size must be at least 3, got {n}")));
    }
    if hr.lambda.len() != hr.dim * (hr.dim - 1) / 2 || hr.alpha_circ.len() != hr.dim {
        return Err(EsnError::Domain("lambda or alpha_circ has the wrong length".into()));
    }
    let ln_n = (n as f64).ln();
    build_params_at(hr, ln_n).map_err(|e| match e {
        EsnError::InvalidLambda { i, k, j, .. } => {
            let hint = smallest_admissible_n(hr)
                .map_or("no admissible n".to_string(), |m| format!("smallest admissible n is {m}"));
            EsnError::InvalidLambda {
                i,
                k,
                j,
                message: format!("row correlation at n = {n} is not positive semi-definite; {hint}"),
            }
        }
        other => other,
    })
}

/// Row parameters at a real-valued ln n.
pub fn build_params_at(hr: &HrSkewParams, ln_n: f64) -> Result<EsnParams> {
    if !admissible(hr, ln_n) {
        let (i, k) = worst_pair(hr);
        return Err(EsnError::InvalidLambda {
            i: i + 1,
            k: k + 1,
            j: k + 1,
            message: format!("row correlation at ln n = {ln_n} is not positive semi-definite"),
        });
    }
    let corr = CorrelationMatrix::new(omega_matrix(hr, ln_n))?;
    let slant = hr.alpha_circ.iter().map(|a| a * ln_n.sqrt()).collect();
    EsnParams::new(corr, slant, hr.tau)
}

fn worst_pair(hr: &HrSkewParams) -> (usize, usize) {
    let mut best = (0, 1, -1.0);
    for i in 0..hr.dim {
        for k in i + 1..hr.dim {
            let l = hr.lambda_at(i, k);
            if l.is_finite() && l > best.2 {
                best = (i, k, l);
            }
        }
    }
    (best.0, best.1)
}

/// Per-margin location and scale so that n(1 − F_j(a_j x + b_j)) → e^{−x}.
pub fn norming_constants(params_n: &EsnParams, n: u64) -> Result<NormingConstants> {
    if n < 2 {
        return Err(EsnError::Domain(format!("n must be at least 2, got {n}")));
    }
    let ln_n = (n as f64).ln();
    let ell = (2.0 * ln_n).sqrt();
    let d = params_n.dim();
    let mut b = Vec::with_capacity(d);
    for j in 0..d {
        let m = esn::marginal_params(params_n, &[j])?.params.univariate().expect("univariate margin");
        let (a, t) = (m.slant, m.extension);
        let abar = m.alpha_bar();
        let log_k = normal::log_cdf(t / abar);
        let tilt = normal::log_cdf(a * ell + t);
        let bj = if a >= 0.0 {
            ell - ((2.0 * std::f64::consts::PI.sqrt()).ln() + 0.5 * ln_n.ln() + log_k - tilt) / ell
        } else {
            let arg = abar * abar * ell + a * t;
            if arg <= 0.0 {
                return Err(EsnError::Domain(format!(
                    "margin {} norming undefined: ᾱ²ℓ + α*τ* = {arg} ≤ 0",
                    j + 1
                )));
            }
            ell - (normal::LN_SQRT_2PI + log_k - tilt) / ell - arg.ln() / ell
        };
        b.push(bj);
    }
    Ok(NormingConstants {
        a: vec![1.0 / ell; d],
        b,
        ell_n: ell,
    })
}

/// Replicates × d matrix of normalised componentwise maxima.
pub fn simulate_maxima(spec: &TriArraySpec) -> Result<DMatrix<f64>> {
    check_spec(spec)?;
    let params = build_params_n(&spec.hr, spec.n)?;
    let norm = norming_constants(&params, spec.n)?;
    let sampler = Sampler::new(&params)?;
    let d = params.dim();
    let rows: Vec<Vec<f64>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(r as u64);
            let mut max = vec![f64::NEG_INFINITY; d];
            let mut eps = vec![0.0; d];
            let mut x = vec![0.0; d];
            for _ in 0..spec.n {
                sampler.draw(&mut rng, &mut eps, &mut x);
                for (m, v) in max.iter_mut().zip(&x) {
                    if *v > *m {
                        *m = *v;
                    }
                }
            }
            max.iter().enumerate().map(|(j, m)| (m - norm.b[j]) / norm.a[j]).collect()
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(spec.replicates, d, &flat))
}

fn check_spec(spec: &TriArraySpec) -> Result<()> {
    if spec.n < 3 {
        return Err(EsnError::Domain(format!("n must be at least 3, got {}", spec.n)));
    }
    if spec.replicates == 0 {
        return Err(EsnError::Domain("replicates must be at least 1".into()));
    }
    let draws = (spec.n as u128) * (spec.replicates as u128) * (spec.hr.dim as u128 + 1);
    if draws > spec.max_draws as u128 {
        return Err(EsnError::Domain(format!(
            "simulation needs {draws} normal draws, above the cap of {}",
            spec.max_draws
        )));
    }
    Ok(())
}

pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Kolmogorov–Smirnov distance of a sample from the standard Gumbel law.
pub fn ks_gumbel(sample: &[f64]) -> f64 {
    let mut s: Vec<f64> = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = gumbel_cdf(x);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// Gumbel quantiles at probabilities 0.1, 0.3, 0.5, 0.7, 0.9.
pub fn comparison_grid() -> [f64; 5] {
    [0.1, 0.3, 0.5, 0.7, 0.9].map(|p: f64| -(-p.ln()).ln())
}

/// Distances between simulated normalised maxima and the limit.
pub fn convergence_report(spec: &TriArraySpec) -> Result<ConvergenceReport> {
    let sims = simulate_maxima(spec)?;
    report_from_maxima(spec, &sims)
}

/// Report for maxima already drawn by `simulate_maxima(spec)`.
pub fn report_from_maxima(spec: &TriArraySpec, sims: &DMatrix<f64>) -> Result<ConvergenceReport> {
    let model = HrModel::new(spec.hr.clone())?;
    let d = sims.ncols();
    let ks_margin = (0..d)
        .map(|j| ks_gumbel(&sims.column(j).iter().copied().collect::<Vec<_>>()))
        .collect();
    let grid = comparison_grid();
    let total = grid.len().pow(d as u32);
    let m = sims.nrows() as f64;
    let mut sup: f64 = 0.0;
    for idx in 0..total {
        let mut rem = idx;
        let x: Vec<f64> = (0..d)
            .map(|_| {
                let g = grid[rem % grid.len()];
                rem /= grid.len();
                g
            })
            .collect();
        let hits = sims.row_iter().filter(|r| r.iter().zip(&x).all(|(v, t)| v <= t)).count();
        let g = model.gev_cdf_g(&x, 1e-9, spec.seed)?;
        sup = sup.max((hits as f64 / m - g).abs());
    }
    Ok(ConvergenceReport {
        ks_margin,
        copula_sup: sup,
        n: spec.n,
        replicates: spec.replicates,
    })
}
