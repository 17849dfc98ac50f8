use esnx_core::esn::{conditional_params, esn_cdf, esn_pdf, esn_quantile, marginal_params, quantile_seed};
use esnx_core::{CorrelationMatrix, EsnParams, UniEsnParams};

// mpmath quadrature of φ(s)Φ(αs+τ)/K over (−∞, x], x = −3 + 0.6 i
const CDF_GRID: [(f64, f64, [f64; 11]); 9] = [
    (-3.0, -2.0, [5.1220851650718753e-3, 3.110492464271176e-2, 1.3632735062754531e-1, 4.3172979238083724e-1, 8.5906407471761356e-1, 9.957652425983335e-1, 9.9999316789764579e-1, 9.9999999958452805e-1, 9.9999999999999918e-1, 1.0, 1.0]),
    (-3.0, 0.0, [2.6997960632601891e-3, 1.6395071849191719e-2, 7.1860637949273183e-2, 2.3013473487075597e-1, 5.4558202365956992e-1, 8.9758361765043327e-1, 9.970757881594228e-1, 9.999953944273395e-1, 9.9999999972342158e-1, 9.9999999999999946e-1, 1.0]),
    (-3.0, 2.0, [1.8329665092365511e-3, 1.1131069500044755e-2, 4.8788182556755929e-2, 1.5624798807202146e-1, 3.7239366806785632e-1, 6.7741233439904621e-1, 9.3502471809412109e-1, 9.9824890610465697e-1, 9.9999731396274381e-1, 9.9999999984085474e-1, 9.9999999999999969e-1]),
    (0.0, -2.0, [1.3498980316300945e-3, 8.1975359245961314e-3, 3.59303191129258e-2, 1.1506967022170823e-1, 2.7425311775007355e-1, 5.0e-1, 7.257468822499263e-1, 8.8493032977829177e-1, 9.6406968088707418e-1, 9.9180246407540386e-1, 9.9865010196836991e-1]),
    (0.0, 0.0, [1.3498980316300945e-3, 8.1975359245961314e-3, 3.59303191129258e-2, 1.1506967022170823e-1, 2.7425311775007355e-1, 5.0e-1, 7.257468822499263e-1, 8.8493032977829177e-1, 9.6406968088707418e-1, 9.9180246407540386e-1, 9.9865010196836991e-1]),
    (0.0, 2.0, [1.3498980316300945e-3, 8.1975359245961314e-3, 3.59303191129258e-2, 1.1506967022170823e-1, 2.7425311775007355e-1, 5.0e-1, 7.257468822499263e-1, 8.8493032977829177e-1, 9.6406968088707418e-1, 9.9180246407540386e-1, 9.9865010196836991e-1]),
    (3.0, -2.0, [8.7936032056270264e-32, 4.9637417245144484e-23, 8.230663305461694e-16, 4.1547195199441828e-10, 6.8321023542123387e-6, 4.2347574016665026e-3, 1.4093592528238621e-1, 5.6827020761916276e-1, 8.6367264937245463e-1, 9.688950753572882e-1, 9.9487791483492812e-1]),
    (3.0, 0.0, [3.2642743096552352e-23, 5.4387233128617256e-16, 2.7657841785923495e-10, 4.6055726605003964e-6, 2.9242118405771855e-3, 1.0241638234956673e-1, 4.544179763404298e-1, 7.6986526512924403e-1, 9.2813936205072678e-1, 9.8360492815080826e-1, 9.9730020393673981e-1]),
    (3.0, 2.0, [3.1050868309461842e-16, 1.5914525696917075e-10, 2.6860372561879503e-6, 1.7510938953430295e-3, 6.4975281905878791e-2, 3.2258766560095379e-1, 6.2760633193214348e-1, 8.4375201192797854e-1, 9.5121181744324405e-1, 9.8886893049995523e-1, 9.9816703349076345e-1]),
];

// scipy dblquad of the bivariate density, ω=0.5, α=(1,−1), τ=1
const BIV_ORACLE: f64 = 0.366_440_102_929_256_4;

#[test]
fn univariate_cdf_grid() {
    for (a, t, row) in CDF_GRID {
        let p = UniEsnParams::new(a, t).unwrap();
        for (i, expected) in row.iter().enumerate() {
            let x = -3.0 + 0.6 * i as f64;
            let v = p.cdf(x);
            assert!((v - expected).abs() < 1e-8, "α={a} τ={t} x={x}: {v} vs {expected}");
            if *expected < 1e-6 && *expected > 0.0 {
                assert!((v / expected - 1.0).abs() < 1e-8, "relative, α={a} τ={t} x={x}");
            }
        }
    }
}

#[test]
fn univariate_cdf_example() {
    let p = EsnParams::new(CorrelationMatrix::identity(1), vec![2.0], -1.0).unwrap();
    let r = esn_cdf(&[0.5], &p, 1e-8, 0).unwrap();
    assert!((r.value - 0.231_125_457_927_239_02).abs() < 1e-8);
}

#[test]
fn upper_tail_relative_accuracy() {
    // mpmath quadrature oracles for P(X > x)
    let cases = [
        (4.0, 2.0, 1.0, 4.708_501_092_786_17e-5),
        (6.0, -2.0, 1.0, 6.087_085_653_719_570e-38),
        (5.0, 3.0, -4.0, 2.784_333_190_920_461e-6),
        (8.0, 0.5, 0.0, 1.244_160_839_584_919_3e-15),
        (3.0, -1.0, -10.0, 2.177_174_184_811_859_3e-30),
    ];
    for (x, a, t, expected) in cases {
        let v = UniEsnParams::new(a, t).unwrap().sf(x);
        assert!((v / expected - 1.0).abs() < 1e-9, "x={x} α={a} τ={t}: {v} vs {expected}");
    }
}

#[test]
fn quantile_round_trip() {
    for a in [-3.0, 0.0, 3.0] {
        for t in [-2.0, 0.0, 2.0] {
            let p = UniEsnParams::new(a, t).unwrap();
            for i in 1..=99 {
                let prob = i as f64 / 100.0;
                let x = esn_quantile(prob, &p, 1e-12).unwrap();
                assert!((p.cdf(x) - prob).abs() <= 1e-12, "α={a} τ={t} p={prob}");
            }
        }
    }
    assert_eq!(esn_quantile(0.5, &UniEsnParams::new(0.0, 0.0).unwrap(), 1e-12).unwrap(), 0.0);
}

#[test]
fn quantile_seed_examples() {
    // positive slant, τ = 0: K = Φ(0)
    let pos = UniEsnParams::new(0.5, 0.0).unwrap();
    let l = (1e4f64).ln();
    let ell = (2.0 * l).sqrt();
    let expected = ell - ((2.0 * std::f64::consts::PI.sqrt()).ln() + 0.5 * l.ln() + 0.5f64.ln()) / ell;
    assert!((quantile_seed(1e-4, &pos).unwrap() - expected).abs() < 1e-14);

    let g = UniEsnParams::new(0.0, 0.0).unwrap();
    let plain = ell - ((2.0 * std::f64::consts::PI.sqrt()).ln() + 0.5 * l.ln()) / ell;
    assert!((quantile_seed(1e-4, &g).unwrap() - plain).abs() < 1e-14);

    let exact = g.upper_quantile(1e-6).unwrap();
    assert!((quantile_seed(1e-6, &g).unwrap() / exact - 1.0).abs() <= 0.01);

    let neg = UniEsnParams::new(-1.0, 0.0).unwrap();
    let exact = neg.upper_quantile(1e-6).unwrap();
    assert!((quantile_seed(1e-6, &neg).unwrap() / exact - 1.0).abs() <= 0.02);

    let p = UniEsnParams::new(-2.0, 1.0).unwrap();
    let x = esn_quantile(1.0 - 1e-6, &p, 1e-12).unwrap();
    assert!((p.cdf(x) - (1.0 - 1e-6)).abs() <= 1e-12);
    assert!((quantile_seed(1e-6, &p).unwrap() / x - 1.0).abs() <= 0.02);
    assert!(quantile_seed(0.7, &p).is_err());
}

#[test]
fn bivariate_cdf_normal_reduction() {
    let corr = CorrelationMatrix::bivariate(0.5).unwrap();
    let p = EsnParams::new(corr.clone(), vec![0.0, 0.0], 0.0).unwrap();
    let r = esn_cdf(&[0.0, 0.0], &p, 1e-7, 3).unwrap();
    assert!((r.value - 1.0 / 3.0).abs() < 1e-7 + r.error_estimate);
    let all = esn_cdf(&[f64::INFINITY, f64::INFINITY], &p, 1e-7, 3).unwrap();
    assert_eq!(all.value, 1.0);
}

#[test]
fn bivariate_cdf_by_quadrature() {
    let corr = CorrelationMatrix::bivariate(0.5).unwrap();
    let p = EsnParams::new(corr, vec![1.0, -1.0], 1.0).unwrap();
    let r = esn_cdf(&[0.3, -0.2], &p, 1e-7, 9).unwrap();
    assert!((r.value - BIV_ORACLE).abs() < 3.0 * r.error_estimate + 1e-9, "{r:?}");
}

#[test]
fn marginal_by_quadrature() {
    let corr = CorrelationMatrix::from_upper(3, &[0.4, -0.3, 0.2]).unwrap();
    let p = EsnParams::new(corr, vec![1.2, -0.8, 0.5], 0.7).unwrap();
    let m = marginal_params(&p, &[0, 2]).unwrap();
    for pt in [[0.1, -0.4], [1.0, 0.5], [-1.2, 0.9]] {
        let joint = |y: f64| esn_pdf(&[pt[0], y, pt[1]], &p).unwrap();
        let mut integral = 0.0;
        // composite Simpson on [−12, 12]
        let n = 4000;
        let h = 24.0 / n as f64;
        for i in 0..=n {
            let y = -12.0 + h * i as f64;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * joint(y);
        }
        integral *= h / 3.0;
        let direct = esn_pdf(&pt, &m.params).unwrap();
        assert!((integral / direct - 1.0).abs() < 1e-7, "{pt:?}: {integral} vs {direct}");
    }
}

#[test]
fn chain_rule_factorization() {
    let corr = CorrelationMatrix::from_upper(3, &[0.4, -0.3, 0.2]).unwrap();
    let p = EsnParams::new(corr, vec![1.2, -0.8, 0.5], 0.7).unwrap();
    for k in 0..20 {
        let x = [(k as f64 * 0.37).sin() * 2.0, (k as f64 * 0.91).cos() * 1.5, ((k * k) as f64 * 0.13).sin()];
        for given in [vec![0], vec![1, 2], vec![2, 0]] {
            let xi: Vec<f64> = given.iter().map(|&i| x[i]).collect();
            let m = marginal_params(&p, &given).unwrap();
            let c = conditional_params(&p, &given, &xi).unwrap();
            let y: Vec<f64> = c.rest.iter().map(|&i| x[i]).collect();
            let lhs = esn_pdf(&x, &p).unwrap();
            let rhs = esn_pdf(&xi, &m.params).unwrap() * c.log_pdf(&y).unwrap().exp();
            assert!((lhs / rhs - 1.0).abs() < 1e-10, "x={x:?} given={given:?}");
        }
    }
}
