use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use esnx_core::esn::{esn_cdf, esn_pdf, marginal_params};
use esnx_core::hr::{HrModel, HrSkewParams};
use esnx_core::mvn::mvn_cdf;
use esnx_core::tail::{bivariate_params, chi_u_exact, dispatch_case, tail_asymptotics, CaseLabel};
use esnx_core::{normal, quad, CorrelationMatrix, EsnError, EsnParams, UniEsnParams};

fn corr_from_factor(d: usize, raw: &[f64]) -> CorrelationMatrix {
    let f = DMatrix::from_row_slice(d, d + 1, &raw[..d * (d + 1)]);
    let mut m = &f * f.transpose() + DMatrix::identity(d, d) * 0.05;
    let s: Vec<f64> = (0..d).map(|i| m[(i, i)].sqrt()).collect();
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] /= s[i] * s[j];
        }
    }
    for i in 0..d {
        m[(i, i)] = 1.0;
    }
    CorrelationMatrix::new(m).unwrap()
}

fn corr_strategy(d: usize) -> impl Strategy<Value = CorrelationMatrix> {
    prop::collection::vec(-1.0f64..1.0, d * (d + 1)).prop_map(move |raw| corr_from_factor(d, &raw))
}

fn permute(c: &CorrelationMatrix, p: &[usize]) -> CorrelationMatrix {
    let d = p.len();
    CorrelationMatrix::new(DMatrix::from_fn(d, d, |i, j| c.get(p[i], p[j]))).unwrap()
}

/// λ_ij as distances between random planar points, which keeps every Λ̄_j valid.
fn hr_strategy(d: usize) -> impl Strategy<Value = HrSkewParams> {
    (
        prop::collection::vec((-1.2f64..1.2, -1.2f64..1.2), d),
        prop::collection::vec(-3.0f64..3.0, d - 1),
        -3.0f64..3.0,
    )
        .prop_filter_map("distinct points", move |(pts, a, tau)| {
            let mut lam = Vec::new();
            for i in 0..d {
                for j in i + 1..d {
                    let l = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                    if l < 0.15 {
                        return None;
                    }
                    lam.push(l);
                }
            }
            let mut alpha = a.clone();
            alpha.push(-a.iter().sum::<f64>());
            Some(HrSkewParams::new(d, lam, alpha, tau))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mvn_cdf_bounded_and_monotone(c in corr_strategy(3), x in prop::collection::vec(-2.5f64..2.5, 3), k in 0usize..3, bump in 0.05f64..1.0) {
        let a = mvn_cdf(&x, &c, 1e-8, 1).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.value));
        let mut y = x.clone();
        y[k] += bump;
        let b = mvn_cdf(&y, &c, 1e-8, 1).unwrap();
        prop_assert!(b.value >= a.value - a.error_estimate - b.error_estimate);
    }

    #[test]
    fn mvn_orthant_permutation_invariant(c in corr_strategy(4), p in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let a = mvn_cdf(&[0.0; 4], &c, 1e-4, 3).unwrap();
        let b = mvn_cdf(&[0.0; 4], &permute(&c, &p), 1e-4, 3).unwrap();
        prop_assert!((a.value - b.value).abs() <= 3.0 * (a.error_estimate + b.error_estimate).max(1e-12));
    }

    #[test]
    fn mvn_univariate_and_arcsin(x in -8.0f64..8.0, w in -0.95f64..0.95) {
        let one = mvn_cdf(&[x], &CorrelationMatrix::identity(1), 1e-10, 0).unwrap();
        prop_assert!((one.value - normal::cdf(x)).abs() <= 1e-10);
        let two = mvn_cdf(&[0.0, 0.0], &CorrelationMatrix::bivariate(w).unwrap(), 1e-10, 0).unwrap();
        let want = 0.25 + w.asin() / (2.0 * std::f64::consts::PI);
        prop_assert!((two.value - want).abs() <= 3.0 * two.error_estimate.max(1e-15));
    }

    #[test]
    fn mvn_deterministic(c in corr_strategy(5), x in prop::collection::vec(-1.0f64..2.0, 5), seed in any::<u64>()) {
        prop_assert_eq!(mvn_cdf(&x, &c, 1e-3, seed).unwrap(), mvn_cdf(&x, &c, 1e-3, seed).unwrap());
    }

    #[test]
    fn esn_univariate_density_integrates_to_one(a in -6.0f64..6.0, t in -4.0f64..4.0) {
        let u = UniEsnParams::new(a, t).unwrap();
        let m = quad::integrate(|x| u.pdf(x), -12.0, 12.0, 1e-12, 1e-11).unwrap().value;
        prop_assert!((m - 1.0).abs() <= 1e-8, "{}", m);
    }

    #[test]
    fn esn_sign_flip(c in corr_strategy(2), a in prop::collection::vec(-4.0f64..4.0, 2), x in prop::collection::vec(-3.0f64..3.0, 2)) {
        let p = EsnParams::new(c.clone(), a.clone(), 0.0).unwrap();
        let q = EsnParams::new(c, a.iter().map(|v| -v).collect(), 0.0).unwrap();
        let nx: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert_eq!(esn_pdf(&x, &p).unwrap(), esn_pdf(&nx, &q).unwrap());
    }

    #[test]
    fn esn_marginal_closure(c in corr_strategy(4), a in prop::collection::vec(-3.0f64..3.0, 4), t in -2.0f64..2.0) {
        let p = EsnParams::new(c, a, t).unwrap();
        let once = marginal_params(&p, &[0, 2, 3]).unwrap().params;
        let twice = marginal_params(&once, &[1, 2]).unwrap().params;
        let direct = marginal_params(&p, &[2, 3]).unwrap().params;
        for i in 0..2 {
            prop_assert!((twice.slant()[i] - direct.slant()[i]).abs() < 1e-12);
            for j in 0..2 {
                prop_assert!((twice.corr().get(i, j) - direct.corr().get(i, j)).abs() < 1e-12);
            }
        }
        prop_assert!((twice.extension() - direct.extension()).abs() < 1e-12);
    }

    #[test]
    fn esn_latent_normaliser(c in corr_strategy(3), a in prop::collection::vec(-3.0f64..3.0, 3), t in -6.0f64..6.0) {
        let p = EsnParams::new(c, a, t).unwrap();
        prop_assert_eq!(normal::cdf(p.latent_threshold()), p.normalizer());
    }

    #[test]
    fn esn_cdf_monotone(c in corr_strategy(2), a in prop::collection::vec(-3.0f64..3.0, 2), t in -2.0f64..2.0,
                        x in prop::collection::vec(-2.0f64..2.0, 2), k in 0usize..2, bump in 0.01f64..1.0) {
        let p = EsnParams::new(c, a, t).unwrap();
        let lo = esn_cdf(&x, &p, 1e-9, 0).unwrap();
        let mut y = x.clone();
        y[k] += bump;
        let hi = esn_cdf(&y, &p, 1e-9, 0).unwrap();
        prop_assert!(hi.value >= lo.value - lo.error_estimate - hi.error_estimate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn esn_bivariate_density_integrates_to_one(c in corr_strategy(2), a in prop::collection::vec(-3.0f64..3.0, 2), t in -2.0f64..2.0) {
        let p = EsnParams::new(c, a, t).unwrap();
        let inner = |x: f64| quad::integrate(|y| esn_pdf(&[x, y], &p).unwrap(), -12.0, 12.0, 1e-13, 1e-11).unwrap().value;
        let m = quad::integrate(inner, -12.0, 12.0, 1e-11, 1e-10).unwrap().value;
        prop_assert!((m - 1.0).abs() <= 1e-8, "{}", m);
    }

    #[test]
    fn hr_trivariate_homogeneity(p in hr_strategy(3), z in prop::collection::vec(0.05f64..3.0, 3), c in prop::sample::select(vec![0.5, 2.0, 10.0])) {
        let m = HrModel::new(p).unwrap();
        let l = m.stable_tail_l(&z, 1e-10, 0).unwrap();
        let cz: Vec<f64> = z.iter().map(|v| v * c).collect();
        let lc = m.stable_tail_l(&cz, 1e-10, 0).unwrap();
        prop_assert!((lc - c * l).abs() <= 1e-10 * c * l);
        let max = z.iter().copied().fold(0.0, f64::max);
        let sum: f64 = z.iter().sum();
        prop_assert!(l >= max - 1e-9 && l <= sum + 1e-9, "{} not in [{}, {}]", l, max, sum);
    }

    #[test]
    fn hr_bivariate_mass_and_mean(p in hr_strategy(2)) {
        let mo = HrModel::new(p).unwrap().angular_moments().unwrap();
        prop_assert!((mo.mass - 1.0).abs() < 5e-3, "{:?}", mo);
        prop_assert!(mo.means.iter().all(|m| (m - 0.5).abs() < 5e-3), "{:?}", mo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn chi_bounded_and_decreasing(w in 0.0f64..0.9, a in prop::collection::vec(-3.0f64..3.0, 2), t in -3.0f64..3.0) {
        let p = bivariate_params(w, [a[0], a[1]], t).unwrap();
        let mut prev = f64::INFINITY;
        for u in [10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3] {
            let (chi, err) = chi_u_exact(&p, u, 1e-10, 0).unwrap();
            prop_assert!((-err..=1.0 + err).contains(&chi));
            prop_assert!(chi <= prev + err, "{} after {}", chi, prev);
            prev = chi;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn hr_bivariate_homogeneity_and_bounds(p in hr_strategy(2), z in prop::collection::vec(0.0f64..5.0, 2), c in prop::sample::select(vec![0.5, 2.0, 10.0])) {
        let m = HrModel::new(p).unwrap();
        let l = m.stable_tail_l(&z, 1e-10, 0).unwrap();
        let lc = m.stable_tail_l(&[c * z[0], c * z[1]], 1e-10, 0).unwrap();
        prop_assert!((lc - c * l).abs() <= 1e-10 * c * l.max(f64::MIN_POSITIVE));
        prop_assert!(l >= z[0].max(z[1]) - 1e-12 && l <= z[0] + z[1] + 1e-12);
    }

    #[test]
    fn hr_pickands_convex_and_bounded(p in hr_strategy(2)) {
        let m = HrModel::new(p).unwrap();
        let a: Vec<f64> = (0..=100)
            .map(|i| {
                let t = i as f64 / 100.0;
                m.stable_tail_l(&[t, 1.0 - t], 1e-12, 0).unwrap()
            })
            .collect();
        for (i, v) in a.iter().enumerate() {
            let t = i as f64 / 100.0;
            prop_assert!(*v >= t.max(1.0 - t) - 1e-12 && *v <= 1.0 + 1e-12);
        }
        for w in a.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
        let l11 = m.stable_tail_l(&[1.0, 1.0], 1e-12, 0).unwrap();
        let half = m.pickands_a(&[0.5, 0.5], 1e-12, 0).unwrap();
        prop_assert!(((2.0 - l11) - 2.0 * (1.0 - half)).abs() <= 1e-15);
    }

    #[test]
    fn hr_gev_monotone(p in hr_strategy(2), x in prop::collection::vec(-2.0f64..4.0, 2), k in 0usize..2, bump in 0.01f64..2.0) {
        let m = HrModel::new(p).unwrap();
        let g = m.gev_cdf_g(&x, 1e-12, 0).unwrap();
        let mut y = x.clone();
        y[k] += bump;
        prop_assert!(m.gev_cdf_g(&y, 1e-12, 0).unwrap() >= g - 1e-14);
    }
}

#[test]
fn case_one_eta_is_exact() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut seen = 0;
    while seen < 10 {
        let (w, a1, a2) = (0.0f64..0.9, 0.0f64..3.0, 0.0f64..3.0).new_tree(&mut runner).unwrap().current();
        let ta = tail_asymptotics(w, [a1, a2], 0.0).unwrap();
        if ta.case.label != CaseLabel::CaseI {
            continue;
        }
        assert_eq!(ta.eta, (1.0 + w) / 2.0);
        seen += 1;
    }
}

#[test]
fn dispatch_partitions_grid() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut counts = [0usize; 4];
    for _ in 0..10_000 {
        let (w, a1, a2) = (0.0f64..0.95, -5.0f64..5.0, -5.0f64..5.0).new_tree(&mut runner).unwrap().current();
        match dispatch_case(w, [a1, a2]) {
            Ok(c) => {
                let k = match c.label {
                    CaseLabel::CaseI => 0,
                    CaseLabel::CaseIIa => 1,
                    CaseLabel::CaseIIb => 2,
                    CaseLabel::CaseIII => 3,
                };
                counts[k] += 1;
            }
            Err(EsnError::BoundaryCase(_)) => panic!("random point on a boundary: {w} {a1} {a2}"),
            Err(e) => panic!("{e}"),
        }
    }
    assert_eq!(counts.iter().sum::<usize>(), 10_000);
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
}
