//! Multivariate normal density and orthant probabilities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corr::{CorrelationMatrix, JITTER};
use crate::error::{EsnError, Result};
use crate::normal::{self, LN_SQRT_2PI};
use crate::quad;

pub const DEFAULT_POINT_BUDGET: u64 = 1 << 22;
const SHIFTS: usize = 10;
const FIRST_BLOCK: u64 = 256;
const PRIMES: [u32; 50] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101,
    103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199,
    211, 223, 227, 229,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfResult {
    pub value: f64,
    pub error_estimate: f64,
    pub points_used: u64,
}

impl CdfResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            points_used: 0,
        }
    }
}

/// Stopping rule: done once error ≤ max(abs, rel·value).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub budget: u64,
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            budget: DEFAULT_POINT_BUDGET,
        }
    }

    pub fn rel(rel: f64, abs: f64) -> Self {
        Self {
            abs,
            rel,
            budget: DEFAULT_POINT_BUDGET,
        }
    }

    fn met(&self, value: f64, err: f64) -> bool {
        err <= self.abs.max(self.rel * value.abs())
    }
}

pub fn mvn_log_pdf(x: &[f64], corr: &CorrelationMatrix) -> Result<f64> {
    let d = corr.dim();
    if x.len() != d {
        return Err(EsnError::Domain(format!("point has length {} but dimension is {d}", x.len())));
    }
    let l = corr.cholesky()?;
    Ok(log_pdf_with_factor(x, &l))
}

pub(crate) fn log_pdf_with_factor(x: &[f64], l: &DMatrix<f64>) -> f64 {
    let d = x.len();
    let v = DVector::from_column_slice(x);
    let z = l.solve_lower_triangular(&v).expect("factor has positive diagonal");
    let log_det_half: f64 = (0..d).map(|i| l[(i, i)].ln()).sum();
    -0.5 * z.norm_squared() - log_det_half - d as f64 * LN_SQRT_2PI
}

pub fn mvn_pdf(x: &[f64], corr: &CorrelationMatrix) -> Result<f64> {
    Ok(mvn_log_pdf(x, corr)?.exp())
}

/// P(Z ≤ upper) for Z ~ N_d(0, corr).
pub fn mvn_cdf(upper: &[f64], corr: &CorrelationMatrix, target_abs_err: f64, seed: u64) -> Result<CdfResult> {
    if upper.len() != corr.dim() {
        return Err(EsnError::Domain(format!(
            "upper limit has length {} but dimension is {}",
            upper.len(),
            corr.dim()
        )));
    }
    if !(1e-10..=1e-2).contains(&target_abs_err) {
        return Err(EsnError::Domain(format!(
            "target_abs_err must lie in [1e-10, 1e-2], got {target_abs_err:e}"
        )));
    }
    orthant(upper, corr.matrix(), Tolerance::abs(target_abs_err), seed)
}

/// Lower orthant probability for a correlation-form matrix, any tolerance.
pub(crate) fn orthant(upper: &[f64], cov: &DMatrix<f64>, tol: Tolerance, seed: u64) -> Result<CdfResult> {
    if upper.iter().any(|b| b.is_nan()) {
        return Err(EsnError::Domain("upper limit contains NaN".into()));
    }
    if upper.iter().any(|&b| b == f64::NEG_INFINITY) {
        return Ok(CdfResult::exact(0.0));
    }
    let keep: Vec<usize> = (0..upper.len()).filter(|&i| upper[i] != f64::INFINITY).collect();
    let b: Vec<f64> = keep.iter().map(|&i| upper[i]).collect();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| cov[(keep[i], keep[j])]);
    match keep.len() {
        0 => Ok(CdfResult::exact(1.0)),
        1 => Ok(CdfResult::exact(normal::cdf(b[0]))),
        2 if tol.rel == 0.0 && tol.abs >= 1e-14 => {
            let v = bvnd(-b[0], -b[1], sub[(0, 1)]).clamp(0.0, 1.0);
            Ok(CdfResult {
                value: v,
                error_estimate: 1e-15,
                points_used: 0,
            })
        }
        2 => bivariate_sov(&b, sub[(0, 1)], tol),
        3 => trivariate(&b, &sub, tol),
        4 => quadrivariate(&b, &sub, tol),
        _ => lattice_sov(&b, &sub, tol, seed),
    }
}

/// Bivariate orthant by one-dimensional quadrature of the conditioned factor.
/// Keeps relative accuracy deep in the tails where the closed-form routine cancels.
fn bivariate_sov(b: &[f64], r: f64, tol: Tolerance) -> Result<CdfResult> {
    // integrate over the more restrictive coordinate
    let (b1, b2) = if b[0] <= b[1] { (b[0], b[1]) } else { (b[1], b[0]) };
    let s = (1.0 - r * r).max(JITTER).sqrt();
    let g = |y: f64| (normal::log_pdf(y) + normal::log_cdf((b2 - r * y) / s)).exp();
    let scale = normal::cdf(b1).min(normal::cdf(b2)).max(f64::MIN_POSITIVE);
    let res = quad::integrate(g, f64::NEG_INFINITY, b1, tol.abs.min(scale * 1e-3), tol.rel.max(1e-13))?;
    let value = res.value.clamp(0.0, 1.0);
    Ok(CdfResult {
        value,
        error_estimate: res.error,
        points_used: res.evaluations as u64,
    })
}

/// Trivariate orthant as a one-dimensional integral of bivariate conditionals
/// over the most restrictive coordinate.
fn trivariate(b: &[f64], cov: &DMatrix<f64>, tol: Tolerance) -> Result<CdfResult> {
    let k = (0..3).min_by(|&x, &y| b[x].total_cmp(&b[y])).unwrap();
    let (i, j) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let (rik, rjk, rij) = (cov[(i, k)], cov[(j, k)], cov[(i, j)]);
    let si = (1.0 - rik * rik).max(JITTER).sqrt();
    let sj = (1.0 - rjk * rjk).max(JITTER).sqrt();
    let r = ((rij - rik * rjk) / (si * sj)).clamp(-1.0, 1.0);
    let relative = tol.rel > 0.0 || tol.abs < 1e-14;
    let mut failed = None;
    let g = |t: f64| {
        let h = (b[i] - rik * t) / si;
        let kk = (b[j] - rjk * t) / sj;
        let mut v = bvnd(-h, -kk, r);
        if relative && v < 1e-2 {
            match bivariate_sov(&[h, kk], r, Tolerance::rel(1e-10, 0.0)) {
                Ok(c) => v = c.value,
                Err(e) => failed = Some(e),
            }
        }
        normal::pdf(t) * v
    };
    let (abs, rel) = if tol.rel > 0.0 {
        (tol.abs, tol.rel.min(1e-8))
    } else if relative {
        (tol.abs, 1e-10)
    } else {
        (1e-14, 1e-12)
    };
    let res = quad::integrate(g, f64::NEG_INFINITY, b[k], abs, rel)?;
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(CdfResult {
        value: res.value.clamp(0.0, 1.0),
        error_estimate: res.error + if relative { 1e-13 * res.value.abs() } else { 1e-15 },
        points_used: res.evaluations as u64,
    })
}

/// Four-variate orthant as a one-dimensional integral of trivariate conditionals
/// over the most restrictive coordinate.
fn quadrivariate(b: &[f64], cov: &DMatrix<f64>, tol: Tolerance) -> Result<CdfResult> {
    let k = (0..4).min_by(|&x, &y| b[x].total_cmp(&b[y])).unwrap();
    let rest: Vec<usize> = (0..4).filter(|&i| i != k).collect();
    let s: Vec<f64> = rest.iter().map(|&i| (1.0 - cov[(i, k)] * cov[(i, k)]).max(JITTER).sqrt()).collect();
    let cond = DMatrix::from_fn(3, 3, |a, c| {
        if a == c {
            return 1.0;
        }
        let (i, j) = (rest[a], rest[c]);
        ((cov[(i, j)] - cov[(i, k)] * cov[(j, k)]) / (s[a] * s[c])).clamp(-1.0, 1.0)
    });
    let relative = tol.rel > 0.0 || tol.abs < 1e-14;
    let inner_tol = if relative { Tolerance::rel(1e-10, 0.0) } else { tol };
    let mut failed = None;
    let mut inner_err = 0.0f64;
    let g = |t: f64| {
        let h: Vec<f64> = rest.iter().zip(&s).map(|(&i, si)| (b[i] - cov[(i, k)] * t) / si).collect();
        match trivariate(&h, &cond, inner_tol) {
            Ok(c) => {
                inner_err = inner_err.max(c.error_estimate);
                normal::pdf(t) * c.value
            }
            Err(e) => {
                failed.get_or_insert(e);
                0.0
            }
        }
    };
    let (abs, rel) = if tol.rel > 0.0 {
        (tol.abs, tol.rel.min(1e-8))
    } else if relative {
        (tol.abs, 1e-10)
    } else {
        (1e-13, 1e-11)
    };
    let res = quad::integrate(g, f64::NEG_INFINITY, b[k], abs, rel)?;
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(CdfResult {
        value: res.value.clamp(0.0, 1.0),
        error_estimate: res.error + inner_err * normal::cdf(b[k]),
        points_used: res.evaluations as u64,
    })
}

/// Variable-reordered Cholesky for the separation-of-variables integrand.
fn reorder(b: &[f64], cov: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = b.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut best = i;
        let mut best_p = f64::INFINITY;
        for j in i..n {
            let pj = perm[j];
            let mut var = cov[(pj, pj)];
            let mut mean = 0.0;
            for k in 0..i {
                var -= l[(j, k)] * l[(j, k)];
                mean += l[(j, k)] * y[k];
            }
            let s = var.max(JITTER).sqrt();
            let p = normal::cdf((b[pj] - mean) / s);
            if p < best_p {
                best_p = p;
                best = j;
            }
        }
        if best != i {
            perm.swap(i, best);
            for k in 0..i {
                let t = l[(i, k)];
                l[(i, k)] = l[(best, k)];
                l[(best, k)] = t;
            }
        }
        let pi = perm[i];
        let mut var = cov[(pi, pi)];
        for k in 0..i {
            var -= l[(i, k)] * l[(i, k)];
        }
        if var < -1e-8 {
            return Err(EsnError::SingularMatrix(format!(
                "negative conditional variance {var:e} at step {i}"
            )));
        }
        let lii = var.max(JITTER).sqrt();
        l[(i, i)] = lii;
        for j in i + 1..n {
            let pj = perm[j];
            let mut v = cov[(pj, pi)];
            for k in 0..i {
                v -= l[(j, k)] * l[(i, k)];
            }
            l[(j, i)] = v / lii;
        }
        let mut mean = 0.0;
        for k in 0..i {
            mean += l[(i, k)] * y[k];
        }
        let bt = (b[pi] - mean) / lii;
        let p = normal::cdf(bt);
        y[i] = if p > 1e-300 { -normal::pdf(bt) / p } else { bt };
    }
    let bp = perm.iter().map(|&p| b[p]).collect();
    Ok((bp, l))
}

struct SovIntegrand {
    b: Vec<f64>,
    l: DMatrix<f64>,
    e0: f64,
}

impl SovIntegrand {
    fn eval(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let n = self.b.len();
        let mut e = self.e0;
        let mut f = e;
        for i in 1..n {
            let u = w[i - 1] * e;
            if u <= 0.0 {
                return 0.0;
            }
            y[i - 1] = normal::quantile_unchecked(u.min(1.0 - 1e-17));
            let mut s = self.b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            e = normal::cdf(s / self.l[(i, i)]);
            f *= e;
            if f == 0.0 {
                return 0.0;
            }
        }
        f
    }
}

fn lattice_sov(b: &[f64], cov: &DMatrix<f64>, tol: Tolerance, seed: u64) -> Result<CdfResult> {
    let (bp, l) = reorder(b, cov)?;
    let n = bp.len();
    let e0 = normal::cdf(bp[0] / l[(0, 0)]);
    if e0 == 0.0 {
        return Ok(CdfResult::exact(0.0));
    }
    let integrand = SovIntegrand { b: bp, l, e0 };
    let dims = n - 1;
    if dims > PRIMES.len() {
        return Err(EsnError::Domain(format!("dimension {n} exceeds the supported maximum of 51")));
    }
    let gen: Vec<f64> = PRIMES[..dims].iter().map(|&p| (p as f64).sqrt().fract()).collect();
    let shifts: Vec<Vec<f64>> = (0..SHIFTS)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            (0..dims).map(|_| rng.random::<f64>()).collect()
        })
        .collect();
    let mut sums = vec![0.0f64; SHIFTS];
    let mut done: u64 = 0;
    let mut block = FIRST_BLOCK;
    loop {
        let start = done;
        let end = done + block;
        let partial: Vec<f64> = shifts
            .par_iter()
            .map(|shift| {
                let mut w = vec![0.0; dims];
                let mut y = vec![0.0; n];
                let mut acc = 0.0;
                let mut comp = 0.0;
                for j in start..end {
                    let jf = j as f64;
                    for k in 0..dims {
                        let x = (jf * gen[k] + shift[k]).fract();
                        w[k] = 1.0 - (2.0 * x - 1.0).abs();
                    }
                    let v = integrand.eval(&w, &mut y);
                    // Neumaier summation
                    let t = acc + v;
                    if acc.abs() >= v.abs() {
                        comp += (acc - t) + v;
                    } else {
                        comp += (v - t) + acc;
                    }
                    acc = t;
                }
                acc + comp
            })
            .collect();
        for (s, p) in sums.iter_mut().zip(partial) {
            *s += p;
        }
        done = end;
        let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
        let mean = means.iter().sum::<f64>() / SHIFTS as f64;
        let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (SHIFTS * (SHIFTS - 1)) as f64;
        let err = 3.0 * var.sqrt();
        let points = done * SHIFTS as u64;
        let value = mean.clamp(0.0, 1.0);
        if tol.met(mean, err) {
            return Ok(CdfResult {
                value,
                error_estimate: err,
                points_used: points,
            });
        }
        if 2 * points > tol.budget {
            return Err(EsnError::AccuracyNotReached {
                value,
                error_estimate: err,
                points_used: points,
            });
        }
        block = done;
    }
}

// Gauss–Legendre half-rules (weight, abscissa) used by the bivariate routine.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197),
];
const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];
const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

/// P(X > dh, Y > dk) for a standard bivariate normal with correlation r
/// (Drezner–Wesolowsky with Genz's refinements for |r| near 1).
pub fn bvnd(dh: f64, dk: f64, r: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let quad: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for &(w, x) in quad {
            for sgn in [1.0, -1.0] {
                let sn = (asr * (sgn * x + 1.0) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * two_pi) + normal::cdf(-h) * normal::cdf(-k);
    }
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a * (-(bs / a_s + hk) / 2.0).exp() * (1.0 - c * (bs - a_s) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp() * two_pi.sqrt() * normal::cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(w, x) in quad {
            for sgn in [1.0, -1.0] {
                let xs = (a * (sgn * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    bvn += a * w * asr.exp() * ((-hk * xs / (2.0 * (1.0 + rs).powi(2))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn + normal::cdf(-h.max(k))
    } else {
        bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += normal::cdf(k) - normal::cdf(h);
            } else {
                bvn += normal::cdf(-h) - normal::cdf(-k);
            }
        }
        bvn.max(0.0)
    }
}
