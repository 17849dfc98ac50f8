use serde_json::{json, Value};

use esnx_core::corr::CorrelationMatrix;
use esnx_core::esn::{self, EsnParams};
use esnx_core::hr::{HrModel, HrSkewParams};
use esnx_core::mvn;
use esnx_core::tail;
use esnx_core::triarray::{self, TriArraySpec};
use esnx_core::EsnError;

use crate::output::{self, num};
use crate::svg::{Figure, GridPanel, LinePanel, Series, TernaryPanel};
use crate::{
    ChiCurveArgs, CliError, EsnArgs, HrAngularArgs, HrChiArgs, HrChiFormsArgs, HrEvalArgs, HrPickandsArgs, MvnArgs,
    OutArgs, TailAsymArgs, TriarrayArgs,
};

/// Everything a command produced, before it is written out.
pub struct Outcome {
    command: &'static str,
    out: OutArgs,
    params: Value,
    result: Value,
    figure: Option<Figure>,
    csv: Option<String>,
    /// Reported after the outputs are written.
    deferred: Option<CliError>,
}

impl Outcome {
    fn new(command: &'static str, out: &OutArgs, params: impl serde::Serialize, result: Value) -> Self {
        Self {
            command,
            out: out.clone(),
            params: serde_json::to_value(params).expect("serializable"),
            result,
            figure: None,
            csv: None,
            deferred: None,
        }
    }

    fn figure(mut self, fig: Figure) -> Self {
        self.figure = Some(fig);
        self
    }

    fn csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

fn utc_stamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    let (days, rem) = (secs.div_euclid(86_400), secs.rem_euclid(86_400));
    // civil-from-days
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    format!("{y:04}{m:02}{d:02}T{:02}{:02}{:02}Z", rem / 3600, rem % 3600 / 60, rem % 60)
}

pub fn finish(o: Outcome) -> Result<Option<CliError>, CliError> {
    let mut result = o.result;
    if let Some(fig) = &o.figure {
        result["figure"] = serde_json::to_value(fig).expect("serializable");
    }
    let doc = output::document(o.command, o.out.seed, o.params, result);
    {
        use std::io::Write;
        let mut so = std::io::stdout().lock();
        // a closed pipe (e.g. `| head`) is not an error for us
        let _ = writeln!(so, "{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    }
    if let Some(dir) = &o.out.out {
        let label = o.out.label.clone().unwrap_or_else(utc_stamp);
        if label.is_empty() || label.contains(['/', '\\']) {
            return Err(CliError::Usage(format!("label {label:?} is not a valid file name part")));
        }
        let stem = format!("{}-{label}", o.command.replace(' ', "-"));
        for p in output::emit(dir, &stem, &o.out.format, &doc, o.figure.as_ref(), o.csv.as_deref())? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(o.deferred)
}

fn check_accuracy(a: f64) -> Result<(), CliError> {
    if (1e-10..=1e-2).contains(&a) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--accuracy must lie in [1e-10, 1e-2], got {a:e}")))
    }
}

fn corr_from(dim: usize, omega: &[f64]) -> Result<CorrelationMatrix, CliError> {
    if dim == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    if omega.is_empty() {
        return Ok(CorrelationMatrix::identity(dim));
    }
    let need = dim * (dim - 1) / 2;
    if omega.len() != need {
        return Err(CliError::Usage(format!(
            "--omega needs {need} upper-triangle entries for dimension {dim}, got {}",
            omega.len()
        )));
    }
    Ok(CorrelationMatrix::from_upper(dim, omega)?)
}

fn esn_params(p: &EsnArgs) -> Result<EsnParams, CliError> {
    let corr = corr_from(p.dim, &p.omega)?;
    let alpha = if p.alpha.len() == 1 && p.dim > 1 && p.alpha[0] == 0.0 {
        vec![0.0; p.dim]
    } else {
        p.alpha.clone()
    };
    if alpha.len() != p.dim {
        return Err(CliError::Usage(format!("--alpha needs {} entries, got {}", p.dim, alpha.len())));
    }
    Ok(EsnParams::new(corr, alpha, p.tau)?)
}

fn check_point(x: &[f64], dim: usize) -> Result<(), CliError> {
    if x.len() != dim {
        return Err(CliError::Usage(format!("--x needs {dim} entries, got {}", x.len())));
    }
    Ok(())
}

pub fn esn_pdf(p: &EsnArgs, x: &[f64], out: &OutArgs) -> Result<Outcome, CliError> {
    let params = esn_params(p)?;
    check_point(x, p.dim)?;
    let log = esn::esn_log_pdf(x, &params)?;
    Ok(Outcome::new("esn pdf", out, json!({"esn": p, "x": x}), json!({"value": log.exp(), "log_value": log}))
        .csv(format!("x,value\n\"{}\",{}\n", join(x), num(log.exp()))))
}

pub fn esn_cdf(p: &EsnArgs, x: &[f64], accuracy: f64, out: &OutArgs) -> Result<Outcome, CliError> {
    check_accuracy(accuracy)?;
    let params = esn_params(p)?;
    check_point(x, p.dim)?;
    let r = esn::esn_cdf(x, &params, accuracy, out.seed)?;
    Ok(
        Outcome::new("esn cdf", out, json!({"esn": p, "x": x, "accuracy": accuracy}), serde_json::to_value(r).unwrap())
            .csv(format!("x,value,error_estimate\n\"{}\",{},{}\n", join(x), num(r.value), num(r.error_estimate))),
    )
}

pub fn esn_quantile(p: &EsnArgs, prob: &[f64], accuracy: f64, out: &OutArgs) -> Result<Outcome, CliError> {
    check_accuracy(accuracy)?;
    let params = esn_params(p)?;
    let Some(u) = params.univariate() else {
        return Err(CliError::Usage("quantiles are univariate; use --dim 1".into()));
    };
    let xs = prob.iter().map(|&q| u.quantile(q, accuracy)).collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("p,x\n");
    for (q, x) in prob.iter().zip(&xs) {
        csv += &format!("{},{}\n", num(*q), num(*x));
    }
    Ok(Outcome::new("esn quantile", out, json!({"esn": p, "p": prob, "accuracy": accuracy}), json!({"p": prob, "x": xs})).csv(csv))
}

pub fn esn_sample(p: &EsnArgs, n: usize, out: &OutArgs) -> Result<Outcome, CliError> {
    let params = esn_params(p)?;
    let m = esn::esn_sample(&params, n, out.seed)?;
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut csv = (1..=p.dim).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",") + "\n";
    for r in &rows {
        csv += &r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
        csv.push('\n');
    }
    Ok(Outcome::new("esn sample", out, json!({"esn": p, "n": n}), json!({"samples": rows})).csv(csv))
}

fn join(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

pub fn mvn_pdf(p: &MvnArgs, out: &OutArgs) -> Result<Outcome, CliError> {
    let corr = corr_from(p.dim, &p.omega)?;
    check_point(&p.x, p.dim)?;
    let log = mvn::mvn_log_pdf(&p.x, &corr)?;
    Ok(Outcome::new("mvn pdf", out, p, json!({"value": log.exp(), "log_value": log}))
        .csv(format!("x,value\n\"{}\",{}\n", join(&p.x), num(log.exp()))))
}

pub fn mvn_cdf(p: &MvnArgs, accuracy: f64, out: &OutArgs) -> Result<Outcome, CliError> {
    check_accuracy(accuracy)?;
    let corr = corr_from(p.dim, &p.omega)?;
    check_point(&p.x, p.dim)?;
    let r = mvn::mvn_cdf(&p.x, &corr, accuracy, out.seed)?;
    Ok(
        Outcome::new("mvn cdf", out, json!({"mvn": p, "accuracy": accuracy}), serde_json::to_value(r).unwrap())
            .csv(format!("x,value,error_estimate\n\"{}\",{},{}\n", join(&p.x), num(r.value), num(r.error_estimate))),
    )
}

/// Strictly decreasing log-spaced grid from `hi` down to `lo`.
fn log_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn pair_label(a: &[f64]) -> String {
    format!("({})", a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
}

pub fn chi_curve(a: &ChiCurveArgs) -> Result<Outcome, CliError> {
    check_accuracy(a.accuracy)?;
    if a.alpha.is_empty() || a.alpha.len() % 2 != 0 {
        return Err(CliError::Usage("--alpha takes pairs α1,α2[,α1,α2…]".into()));
    }
    if a.tau.is_empty() {
        return Err(CliError::Usage("--tau needs at least one value".into()));
    }
    let grid = if a.u.is_empty() {
        if a.points == 0 || !(0.0 < a.u_min && a.u_min < a.u_max && a.u_max < 1.0) {
            return Err(CliError::Usage("need 0 < --u-min < --u-max < 1 and --points ≥ 1".into()));
        }
        log_grid(a.u_max, a.u_min, a.points)
    } else {
        let mut g = a.u.clone();
        g.sort_by(|x, y| y.total_cmp(x));
        g.dedup();
        g
    };
    let pairs: Vec<[f64; 2]> = a.alpha.chunks(2).map(|c| [c[0], c[1]]).collect();
    let mut panels = Vec::new();
    let mut curves = Vec::new();
    let mut failures = 0usize;
    for &tau in &a.tau {
        let mut series = Vec::new();
        for (k, al) in pairs.iter().enumerate() {
            let seed = a.out.seed.wrapping_add(1_000_003 * k as u64);
            let c = tail::chi_curve(a.omega, *al, tau, &grid, a.accuracy, seed)?;
            let asym = tail::tail_asymptotics(a.omega, *al, tau)?;
            failures += c.failures.iter().filter(|f| f.is_some()).count();
            let name = pair_label(al);
            series.push(Series {
                name: format!("alpha={name} exact"),
                x: grid.clone(),
                y: c.chi_exact.clone(),
            });
            series.push(Series {
                name: format!("alpha={name} asymptotic"),
                x: grid.clone(),
                y: c.chi_asymptotic.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            });
            series.push(Series {
                name: format!("alpha={name} printed"),
                x: grid.clone(),
                y: c.chi_printed.clone(),
            });
            let failed: Vec<Value> = c
                .failures
                .iter()
                .zip(&grid)
                .filter_map(|(f, u)| f.as_ref().map(|m| json!({"u": u, "message": m})))
                .collect();
            curves.push(json!({
                "alpha": al,
                "tau": tau,
                "case": asym.case.label.as_str(),
                "eta": asym.eta,
                "asymptotics": asym,
                "error_estimates": c.errors,
                "failures": failed,
            }));
        }
        panels.push(LinePanel {
            title: format!("omega={} tau={}", a.omega, tau),
            series,
        });
    }
    let fig = Figure::Lines {
        title: "chi(u): exact, asymptotic and printed".into(),
        x_label: "u".into(),
        y_label: "chi(u)".into(),
        log_x: true,
        log_y: true,
        panels,
    };
    let result = json!({"u": grid, "curves": curves, "failed_points": failures});
    Ok(Outcome::new("chi-curve", &a.out, a, result).figure(fig))
}

fn pair(v: &[f64], flag: &str) -> Result<[f64; 2], CliError> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(CliError::Usage(format!("{flag} needs exactly two values"))),
    }
}

pub fn tail_asym(a: &TailAsymArgs) -> Result<Outcome, CliError> {
    check_accuracy(a.accuracy)?;
    let al = pair(&a.alpha, "--alpha")?;
    let asym = tail::tail_asymptotics(a.omega, al, a.tau)?;
    let params = tail::bivariate_params(a.omega, al, a.tau)?;
    let mut rows = Vec::new();
    let (mut ex, mut asy, mut pr) = (Vec::new(), Vec::new(), Vec::new());
    let mut deferred = None;
    for (i, &u) in a.u.iter().enumerate() {
        let exact = tail::chi_u_exact(&params, u, a.accuracy, a.out.seed.wrapping_add(i as u64));
        let approx = asym.chi_asymptotic(u).ok();
        let printed = asym.printed_chi_asymptotic(u);
        let (value, err, failure) = match exact {
            Ok((v, e)) => (v, e, None),
            Err(e @ EsnError::AccuracyNotReached { .. }) => (f64::NAN, f64::NAN, Some(e.to_string())),
            Err(e) => {
                deferred.get_or_insert(CliError::Core(e.clone()));
                (f64::NAN, f64::NAN, Some(e.to_string()))
            }
        };
        let log_gap = approx.map(|x| (value.ln() - x.ln()).abs());
        rows.push(json!({
            "u": u, "chi_exact": value, "error_estimate": err, "chi_asymptotic": approx,
            "chi_printed": printed, "log_gap": log_gap, "failure": failure,
        }));
        ex.push(value);
        asy.push(approx.unwrap_or(f64::NAN));
        pr.push(printed);
    }
    let x = a.u.clone();
    let fig = Figure::Lines {
        title: format!("{} eta={}", asym.case.label.as_str(), asym.eta),
        x_label: "u".into(),
        y_label: "chi(u)".into(),
        log_x: true,
        log_y: true,
        panels: vec![LinePanel {
            title: format!("omega={} alpha={} tau={}", a.omega, pair_label(&al), a.tau),
            series: vec![
                Series { name: "exact".into(), x: x.clone(), y: ex },
                Series { name: "asymptotic".into(), x: x.clone(), y: asy },
                Series { name: "printed".into(), x, y: pr },
            ],
        }],
    };
    let mut o = Outcome::new("tail-asym", &a.out, a, json!({"asymptotics": asym, "points": rows})).figure(fig);
    o.deferred = deferred;
    Ok(o)
}

pub fn hr_pickands(a: &HrPickandsArgs) -> Result<Outcome, CliError> {
    check_accuracy(a.accuracy)?;
    if a.alpha_circ.len() != a.tau.len() {
        return Err(CliError::Usage("--alpha-circ and --tau must have the same length".into()));
    }
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let lambdas = if a.lambda.is_empty() {
        if a.lambda_count == 0 {
            return Err(CliError::Usage("--lambda-count must be at least 1".into()));
        }
        lin_grid(a.lambda_min, a.lambda_max, a.lambda_count)
    } else {
        a.lambda.clone()
    };
    let t = lin_grid(0.0, 1.0, a.points);
    let mut panels = Vec::new();
    for (&ac, &tau) in a.alpha_circ.iter().zip(&a.tau) {
        let mut series = Vec::new();
        for &lam in &lambdas {
            let m = HrModel::new(HrSkewParams::bivariate(lam, ac, tau))?;
            let y = t
                .iter()
                .map(|&ti| m.pickands_a(&[ti, 1.0 - ti], a.accuracy, a.out.seed))
                .collect::<Result<Vec<_>, _>>()?;
            series.push(Series {
                name: format!("lambda={}", lam),
                x: t.clone(),
                y,
            });
        }
        panels.push(LinePanel {
            title: format!("alpha={} tau={}", pair_label(&[ac, -ac]), tau),
            series,
        });
    }
    let fig = Figure::Lines {
        title: "Pickands dependence function".into(),
        x_label: "t".into(),
        y_label: "A(t)".into(),
        log_x: false,
        log_y: false,
        panels,
    };
    Ok(Outcome::new("hr pickands", &a.out, a, json!({"lambda": lambdas})).figure(fig))
}

pub fn hr_chi(a: &HrChiArgs) -> Result<Outcome, CliError> {
    if a.alpha_points == 0 || a.tau_points == 0 || a.lambda.is_empty() {
        return Err(CliError::Usage("grids and --lambda must be non-empty".into()));
    }
    let xs = lin_grid(a.alpha_min, a.alpha_max, a.alpha_points);
    let ys = lin_grid(a.tau_min, a.tau_max, a.tau_points);
    let mut panels = Vec::new();
    for &lam in &a.lambda {
        let mut z = Vec::with_capacity(ys.len());
        for &tau in &ys {
            let row = xs
                .iter()
                .map(|&ac| HrModel::new(HrSkewParams::bivariate(lam, ac, tau))?.chi_upper().map(|c| c.chi))
                .collect::<Result<Vec<_>, _>>()?;
            z.push(row);
        }
        panels.push(GridPanel {
            title: format!("lambda={}", lam),
            x: xs.clone(),
            y: ys.clone(),
            z,
        });
    }
    // χ should fall as λ grows at every (α°, τ)
    let mut order: Vec<usize> = (0..a.lambda.len()).collect();
    order.sort_by(|&i, &j| a.lambda[i].total_cmp(&a.lambda[j]));
    let (mut checked, mut violations) = (0usize, Vec::new());
    for w in order.windows(2) {
        let (p, q) = (&panels[w[0]], &panels[w[1]]);
        for iy in 0..ys.len() {
            for ix in 0..xs.len() {
                checked += 1;
                if q.z[iy][ix] > p.z[iy][ix] + 1e-12 {
                    violations.push(json!({
                        "alpha_circ": xs[ix], "tau": ys[iy],
                        "lambda": [a.lambda[w[0]], a.lambda[w[1]]],
                        "chi": [p.z[iy][ix], q.z[iy][ix]],
                    }));
                }
            }
        }
    }
    let spot = json!({
        "decreasing_in_lambda": violations.is_empty(),
        "comparisons": checked,
        "violations": violations,
    });
    let fig = Figure::Grid {
        title: "upper tail dependence chi".into(),
        x_label: "alpha".into(),
        y_label: "tau".into(),
        panels,
    };
    Ok(Outcome::new("hr chi", &a.out, a, json!({"monotonicity": spot})).figure(fig))
}

/// The six documented trivariate sets (α°, τ).
const ANGULAR_SETS: [([f64; 3], f64); 6] = [
    ([0.0, 0.0, 0.0], 0.0),
    ([0.0, 5.0, -5.0], 0.0),
    ([-5.0, 5.0, 0.0], 0.0),
    ([4.0, -7.0, 3.0], 3.0),
    ([6.0, 0.0, -6.0], 5.0),
    ([6.0, -3.0, 3.0], -5.0),
];

pub fn hr_angular(a: &HrAngularArgs) -> Result<Outcome, CliError> {
    if a.lambda.len() != 3 {
        return Err(CliError::Usage("--lambda needs λ12,λ13,λ23".into()));
    }
    if a.resolution < 3 {
        return Err(CliError::Usage("--resolution must be at least 3".into()));
    }
    let sets: Vec<([f64; 3], f64)> = if a.alpha_circ.is_empty() {
        ANGULAR_SETS.to_vec()
    } else {
        match a.alpha_circ[..] {
            [x, y, z] => vec![([x, y, z], a.tau)],
            _ => return Err(CliError::Usage("--alpha-circ needs three values".into())),
        }
    };
    let n = a.resolution;
    let mut points = Vec::new();
    for i in 1..n {
        for j in 1..n - i {
            let k = n - i - j;
            points.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
        }
    }
    let mut panels = Vec::new();
    let mut panel_meta = Vec::new();
    let mut deferred = None;
    for (alpha, tau) in sets {
        let params = HrSkewParams::new(3, a.lambda.clone(), alpha.to_vec(), tau);
        let model = match HrModel::with_options(params.clone(), a.allow_invalid_alpha) {
            Ok(m) => m,
            Err(e @ EsnError::ConstraintViolation { .. }) => {
                eprintln!("warning: skipping alpha={} tau={}: {e}", pair_label(&alpha), tau);
                panel_meta.push(json!({"alpha_circ": alpha, "tau": tau, "skipped": e.to_string()}));
                deferred.get_or_insert(CliError::Core(e));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let sum: f64 = alpha.iter().sum();
        let mut warning = None;
        if sum.abs() > 1e-12 {
            let msg = format!("alpha° sums to {} instead of 0; evaluated as requested", sum);
            eprintln!("warning: alpha={} tau={}: {msg}", pair_label(&alpha), tau);
            warning = Some(msg);
        }
        let values = points
            .iter()
            .map(|w| model.angular_density_h(w))
            .collect::<Result<Vec<_>, _>>()?;
        let moments = model.angular_moments().ok();
        panel_meta.push(json!({
            "alpha_circ": alpha, "tau": tau, "warning": warning,
            "mass": moments.as_ref().map(|m| m.mass), "means": moments.map(|m| m.means),
            "margins": model.margins(),
        }));
        panels.push(TernaryPanel {
            title: format!("alpha={} tau={}", pair_label(&alpha), tau),
            points: points.clone(),
            values,
        });
    }
    let fig = Figure::Ternary {
        title: format!("angular density, lambda={}", pair_label(&a.lambda)),
        panels,
    };
    let mut o = Outcome::new("hr angular", &a.out, a, json!({"panels": panel_meta})).figure(fig);
    o.deferred = deferred;
    Ok(o)
}

pub fn hr_chi_forms(a: &HrChiFormsArgs) -> Result<Outcome, CliError> {
    let mut rows = Vec::new();
    let mut csv = String::from(
        "set,lambda,alpha_circ,tau,chi,printed_first,printed_second,printed_sum,printed_agree,printed_sum_matches,classical_check\n",
    );
    let mut series: [Vec<f64>; 4] = Default::default();
    let mut flagged = 0usize;
    for &lam in &a.lambda {
        for &ac in &a.alpha_circ {
            for &tau in &a.tau {
                let m = HrModel::new(HrSkewParams::bivariate(lam, ac, tau))?;
                let c = m.chi_upper()?;
                // closed form 2Φ̄(λ) applies only when α° = 0 and τ = 0
                let classical = (ac == 0.0 && tau == 0.0)
                    .then(|| (c.chi - 2.0 * esnx_core::normal::sf(lam)).abs());
                if !c.printed_sum_matches || !c.printed_agree {
                    flagged += 1;
                }
                let set = rows.len() + 1;
                csv += &format!(
                    "{set},{},{},{},{},{},{},{},{},{},{}\n",
                    num(lam),
                    num(ac),
                    num(tau),
                    num(c.chi),
                    num(c.printed_first),
                    num(c.printed_second),
                    num(c.printed_sum),
                    c.printed_agree,
                    c.printed_sum_matches,
                    classical.map_or(String::new(), num)
                );
                for (s, v) in series.iter_mut().zip([c.chi, c.printed_first, c.printed_second, c.printed_sum]) {
                    s.push(v);
                }
                rows.push(json!({
                    "set": set, "lambda": lam, "alpha_circ": [ac, -ac], "tau": tau,
                    "diagnostic": c, "classical_abs_error": classical,
                }));
            }
        }
    }
    let x: Vec<f64> = (1..=rows.len()).map(|i| i as f64).collect();
    let names = ["chi = 2 - L(1,1)", "printed first", "printed second", "printed sum"];
    let fig = Figure::Lines {
        title: "chi against the printed closed forms".into(),
        x_label: "parameter set".into(),
        y_label: "value".into(),
        log_x: false,
        log_y: false,
        panels: vec![LinePanel {
            title: "per parameter set".into(),
            series: names
                .iter()
                .zip(series)
                .map(|(n, y)| Series { name: n.to_string(), x: x.clone(), y })
                .collect(),
        }],
    };
    let result = json!({"sets": rows, "flagged_disagreements": flagged});
    Ok(Outcome::new("hr chi-forms", &a.out, a, result).figure(fig).csv(csv))
}

fn dim_from(lambda: &[f64], alpha: &[f64]) -> Result<usize, CliError> {
    let d = alpha.len();
    if d < 2 || lambda.len() != d * (d - 1) / 2 {
        return Err(CliError::Usage(format!(
            "--alpha-circ has {d} entries, so --lambda needs {} upper-triangle values (got {})",
            d * d.saturating_sub(1) / 2,
            lambda.len()
        )));
    }
    Ok(d)
}

pub fn hr_eval(a: &HrEvalArgs) -> Result<Outcome, CliError> {
    check_accuracy(a.accuracy)?;
    let d = dim_from(&a.lambda, &a.alpha_circ)?;
    let model = HrModel::with_options(HrSkewParams::new(d, a.lambda.clone(), a.alpha_circ.clone(), a.tau), a.allow_invalid_alpha)?;
    let mut result = json!({"dim": d, "independent": model.is_independent(), "margins": model.margins()});
    let check = |v: &[f64], flag: &str| -> Result<(), CliError> {
        if v.len() != d {
            return Err(CliError::Usage(format!("{flag} needs {d} values, got {}", v.len())));
        }
        Ok(())
    };
    if !a.z.is_empty() {
        check(&a.z, "--z")?;
        result["L"] = json!(model.stable_tail_l(&a.z, a.accuracy, a.out.seed)?);
    }
    if !a.t.is_empty() {
        check(&a.t, "--t")?;
        result["A"] = json!(model.pickands_a(&a.t, a.accuracy, a.out.seed)?);
    }
    if !a.w.is_empty() {
        check(&a.w, "--w")?;
        result["h"] = json!(model.angular_density_h(&a.w)?);
    }
    if !a.x.is_empty() {
        check(&a.x, "--x")?;
        result["G"] = json!(model.gev_cdf_g(&a.x, a.accuracy, a.out.seed)?);
    }
    if d == 2 {
        result["chi"] = serde_json::to_value(model.chi_upper()?).unwrap();
    }
    if d <= 3 {
        result["moments"] = serde_json::to_value(model.angular_moments()?).unwrap();
    }
    Ok(Outcome::new("hr eval", &a.out, a, result))
}

pub fn triarray(a: &TriarrayArgs) -> Result<Outcome, CliError> {
    let d = dim_from(&a.lambda, &a.alpha_circ)?;
    let hr = HrSkewParams::new(d, a.lambda.clone(), a.alpha_circ.clone(), a.tau);
    let spec = TriArraySpec {
        max_draws: a.max_draws,
        ..TriArraySpec::new(hr.clone(), a.n, a.replicates, a.out.seed)
    };
    HrModel::new(hr.clone())?;
    let params_n = triarray::build_params_n(&hr, a.n)?;
    let norming = triarray::norming_constants(&params_n, a.n)?;
    let sims = triarray::simulate_maxima(&spec)?;
    let report = triarray::report_from_maxima(&spec, &sims)?;
    let m = sims.nrows();
    let probs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let gumbel: Vec<f64> = probs.iter().map(|p| -(-p.ln()).ln()).collect();
    let panels = (0..d)
        .map(|j| {
            let mut s: Vec<f64> = sims.column(j).iter().copied().collect();
            s.sort_by(f64::total_cmp);
            let ends = vec![gumbel[0], gumbel[m - 1]];
            LinePanel {
                title: format!("margin {}", j + 1),
                series: vec![
                    Series { name: "empirical".into(), x: gumbel.clone(), y: s },
                    Series { name: "identity".into(), x: ends.clone(), y: ends },
                ],
            }
        })
        .collect();
    let fig = Figure::Lines {
        title: format!("normalised maxima, n={} replicates={}", a.n, a.replicates),
        x_label: "Gumbel quantile".into(),
        y_label: "sample quantile".into(),
        log_x: false,
        log_y: false,
        panels,
    };
    let mut omega_upper = Vec::new();
    for i in 0..d {
        for k in i + 1..d {
            omega_upper.push(params_n.corr().get(i, k));
        }
    }
    let result = json!({
        "params_n": {"omega": omega_upper, "alpha": params_n.slant(), "tau": params_n.extension()},
        "norming": norming,
        "report": report,
    });
    Ok(Outcome::new("triarray", &a.out, a, result).figure(fig))
}
