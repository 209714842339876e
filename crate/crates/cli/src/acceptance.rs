//! The acceptance suite: twelve numbered criteria, each a deterministic
//! computation with a pass flag, metrics and an optional table.

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughinc::drivers::{analytic, sample_fbm, AnalyticPath, FbmMethod};
use roughinc::forms::{Affine, OneForm};
use roughinc::norms::{holder_seminorm, p_variation};
use roughinc::rdi::{rdi_fixed_point, RdiConfig, RdiMode};
use roughinc::rough::{
    chen_defect_all_triples, compose_controlled, lift_piecewise_linear, rde_solve, regrouping_defect, rough_integral,
    ControlledPath, RdeOptions, RoughPath,
};
use roughinc::selection::{certify_with_norm, measured_gamma_norm, select_path};
use roughinc::ydi::{bound_report, horizon_t0, representation_check, ydi_approximate, BoundInputs, YdiConfig};
use roughinc::young::{young_integral, young_ode_solve, SewLimit, YoungBudget};
use roughinc::{BuiltinMap, DyadicGrid, Path, PicardOptions, SetValuedMap, TimeSetMap};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{write_csv, write_json};

/// Result of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    /// One-line description of the decisive numbers.
    pub summary: String,
    pub metrics: Value,
    pub table: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

pub struct Criterion {
    pub id: &'static str,
    /// Name of the check, also used as the test id in the summary.
    pub test: &'static str,
    pub title: &'static str,
    pub budget_secs: f64,
    pub run: fn() -> CliResult<Outcome>,
}

/// A criterion after it ran.
#[derive(Debug, Clone)]
pub struct Record {
    pub id: String,
    pub test: String,
    pub title: String,
    pub budget_secs: f64,
    pub seconds: f64,
    pub outcome: Result<Outcome, String>,
}

impl Record {
    /// Numbers within tolerance, ignoring the time budget.
    pub fn numeric_pass(&self) -> bool {
        matches!(&self.outcome, Ok(o) if o.pass)
    }

    pub fn pass(&self) -> bool {
        self.numeric_pass() && self.seconds <= self.budget_secs
    }

    pub fn line(&self) -> String {
        let detail = match &self.outcome {
            Ok(o) => o.summary.clone(),
            Err(e) => format!("error: {e}"),
        };
        let slow = if self.numeric_pass() && !self.pass() { " [over time budget]" } else { "" };
        format!(
            "{:<4} {} {:<34} {:>7.2}s/{:<4} {}{}",
            self.id,
            if self.pass() { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.budget_secs,
            detail,
            slow
        )
    }
}

fn table(header: &[&str], rows: Vec<Vec<f64>>) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    Some((header.iter().map(|s| s.to_string()).collect(), rows))
}

fn grid(level: u32) -> CliResult<DyadicGrid> {
    Ok(DyadicGrid::new(1.0, level)?)
}

fn brute_force_pvar(points: &[Vec<f64>], p: f64) -> f64 {
    let n = points.len();
    let inner = n - 2;
    let mut best = 0.0f64;
    for mask in 0u32..(1 << inner) {
        let mut prev = 0;
        let mut sum = 0.0;
        for k in (1..=inner).filter(|k| mask >> (k - 1) & 1 == 1).chain([n - 1]) {
            let d: f64 = points[prev].iter().zip(&points[k]).map(|(a, b)| (a - b) * (a - b)).sum();
            sum += d.sqrt().powf(p);
            prev = k;
        }
        best = best.max(sum);
    }
    best.powf(1.0 / p)
}

fn pvar_oracle() -> CliResult<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = rng.gen_range(2..=12usize);
        let d = rng.gen_range(1..=3usize);
        let p = rng.gen_range(1.0..4.0);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let path = Path::new((0..n).map(|i| i as f64).collect(), d, points.concat())?;
        let dp = p_variation(&path, p)?;
        let bf = brute_force_pvar(&points, p);
        let rel = (dp - bf).abs() / bf.max(1.0);
        worst = worst.max(rel);
        rows.push(vec![k as f64, n as f64, d as f64, p, dp, bf, rel]);
    }
    Ok(Outcome {
        pass: worst <= 1e-12,
        summary: format!("200 paths, max relative gap {worst:.2e} (tol 1e-12)"),
        metrics: json!({ "paths": 200, "max_relative_gap": worst }),
        table: table(&["case", "points", "dim", "p", "dp", "enumeration", "relative_gap"], rows),
    })
}

fn young_accuracy() -> CliResult<Outcome> {
    let exact = 0.5 + 2f64.sin() / 4.0;
    let fine = grid(16)?;
    let x = analytic(AnalyticPath::Sine, fine)?;
    let y = Path::from_fn(fine, 1, |t| vec![t.cos()])?;
    let mut rows = Vec::new();
    let (mut plain_err, mut extra_err) = (Vec::new(), Vec::new());
    for m in 8..=16 {
        let (xm, ym) = (x.coarsen(m)?, y.coarsen(m)?);
        let plain = young_integral(&ym, &xm, &YoungBudget::new(1.0, 1.0))?.last()[0];
        let budget = YoungBudget { limit: SewLimit::Extrapolated, ..YoungBudget::new(1.0, 1.0) };
        let extra = young_integral(&ym, &xm, &budget)?.last()[0];
        plain_err.push((plain - exact).abs());
        extra_err.push((extra - exact).abs());
    }
    let mut min_ratio = f64::INFINITY;
    for (k, m) in (8..=16).enumerate() {
        let ratio = if k > 0 { plain_err[k - 1] / plain_err[k] } else { f64::NAN };
        if k > 0 {
            min_ratio = min_ratio.min(ratio);
        }
        rows.push(vec![m as f64, plain_err[k], ratio, extra_err[k]]);
    }
    let final_err = extra_err[8];
    Ok(Outcome {
        pass: final_err <= 1e-8 && min_ratio >= 1.8,
        summary: format!("error at level 16 {final_err:.2e} (tol 1e-8), min contraction {min_ratio:.3} (need 1.8)"),
        metrics: json!({ "exact": exact, "error_level_16": final_err, "min_contraction": min_ratio }),
        table: table(&["level", "plain_error", "contraction", "extrapolated_error"], rows),
    })
}

fn chen_relation() -> CliResult<Outcome> {
    let x = sample_fbm(0.4, 2, grid(10)?, 7, FbmMethod::Covariance)?;
    let rp = lift_piecewise_linear(&x, 0.4)?;
    let chen = chen_defect_all_triples(&rp);
    let (full, anti) = regrouping_defect(&rp);
    Ok(Outcome {
        pass: chen < 1e-12 && anti < 1e-14,
        summary: format!("Chen defect {chen:.2e} (tol 1e-12), antisymmetric regrouping {anti:.2e} (tol 1e-14)"),
        metrics: json!({ "chen_defect": chen, "regrouping_defect": full, "antisymmetric_regrouping_defect": anti }),
        table: None,
    })
}

/// Composite Simpson cumulative integral of `f` over `[0, 1]` at the
/// points `k / parts`.
fn simpson_cumulative(f: impl Fn(f64) -> f64, panels: usize, parts: usize) -> Vec<f64> {
    let h = 1.0 / (2 * panels) as f64;
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for k in 0..panels {
        let a = 2.0 * k as f64 * h;
        acc += h / 3.0 * (f(a) + 4.0 * f(a + h) + f(a + 2.0 * h));
        if (k + 1) % (panels / parts) == 0 {
            out.push(acc);
        }
    }
    out
}

fn rough_vs_quadrature() -> CliResult<Outcome> {
    let level = 14;
    let x = analytic(AnalyticPath::Circle, grid(level)?)?;
    let rp = lift_piecewise_linear(&x, 0.5)?;
    // g(x) = x (x) I: entry ((a * 2 + b) * 2 + j) is x_a when b == j.
    let mut matrix = vec![0.0; 8 * 2];
    for a in 0..2 {
        for b in 0..2 {
            matrix[((a * 2 + b) * 2 + b) * 2 + a] = 1.0;
        }
    }
    let g = Affine::linear(matrix, 8)?;
    let yc = compose_controlled(&g, &ControlledPath::of_driver(&rp), 1.0)?;
    let integral = rough_integral(&yc, &rp)?.integral.y;
    let value = |t: f64| [t.sin(), t.cos()];
    let deriv = |t: f64| [t.cos(), -t.sin()];
    let parts = 16;
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    let oracle: Vec<Vec<f64>> = (0..4)
        .map(|r| {
            let (a, b) = (r / 2, r % 2);
            simpson_cumulative(|t| value(t)[a] * deriv(t)[b], 1 << 15, parts)
        })
        .collect();
    for k in 0..=parts {
        let i = k << (level - 4);
        let mut row = vec![x.time(i)];
        for (r, o) in oracle.iter().enumerate() {
            let err = (integral.point(i)[r] - o[k]).abs();
            worst = worst.max(err);
            row.push(integral.point(i)[r]);
            row.push(o[k]);
        }
        rows.push(row);
    }
    Ok(Outcome {
        pass: worst <= 1e-6,
        summary: format!("max gap to Simpson quadrature {worst:.2e} (tol 1e-6)"),
        metrics: json!({ "max_error": worst, "level": level }),
        table: table(
            &["t", "xdx_11", "oracle_11", "xdx_12", "oracle_12", "xdx_21", "oracle_21", "xdx_22", "oracle_22"],
            rows,
        ),
    })
}

fn rde_closed_form() -> CliResult<Outcome> {
    let g = grid(14)?;
    let x = analytic(AnalyticPath::Sine, g)?;
    let rp = lift_piecewise_linear(&x, 0.5)?;
    let xi = 1.5;
    let sol = rde_solve(&OneForm::parse("linear")?, &rp, &[xi], None, &RdeOptions::default())?;
    let err = (0..g.len()).map(|i| (sol.solution.y.point(i)[0] - xi * g.time(i).sin().exp()).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        pass: err <= 1e-5,
        summary: format!("sup error {err:.2e} (tol 1e-5)"),
        metrics: json!({ "sup_error": err, "converged": sol.report.converged }),
        table: None,
    })
}

fn ydi_reduction() -> CliResult<Outcome> {
    let x = sample_fbm(0.8, 1, grid(12)?, 42, FbmMethod::Covariance)?;
    let xi = 1.0;
    let ode = young_ode_solve(&OneForm::parse("sine(scale=0.1)")?, &x, &[xi], &PicardOptions::default())?;
    let map = BuiltinMap::parse("singleton_sine(amp=0.1)")?;
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    let mut residual = 0.0f64;
    for m in 8..=12 {
        let sol = ydi_approximate(&map, &x, &[xi], m)?;
        let stride = 1usize << (12 - m);
        let err = (0..sol.z.len()).map(|i| (sol.z.point(i)[0] - ode.path.point(i * stride)[0]).abs()).fold(0.0, f64::max);
        residual = residual.max(sol.inclusion_residual);
        rows.push(vec![m as f64, err, sol.inclusion_residual]);
        errs.push(err);
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let last = errs[errs.len() - 1];
    Ok(Outcome {
        pass: last <= 1e-2 && monotone && residual == 0.0 && ode.report.converged,
        summary: format!("error at level 12 {last:.2e} (tol 1e-2), decreasing: {monotone}, inclusion residual {residual:e}"),
        metrics: json!({ "errors": errs, "monotone": monotone, "inclusion_residual": residual }),
        table: table(&["level", "sup_error", "inclusion_residual"], rows),
    })
}

fn ydi_bounds() -> CliResult<Outcome> {
    let raw = sample_fbm(0.8, 1, grid(12)?, 42, FbmMethod::Covariance)?;
    let x = raw.scaled(1.0 / holder_seminorm(&raw, 0.75)?);
    let map = BuiltinMap::parse("two_point(amp=0.05, offset=1, gamma_norm=0.1, sup_bound=0.1)")?;
    let cfg = YdiConfig {
        alpha: 0.75,
        beta: 0.625,
        gamma: 1.0,
        p: 2.0,
        q: 3.0,
        min_level: 0,
        max_level: 12,
        residual_tol: 1e-3,
        xi: vec![0.3],
    };
    cfg.validate()?;
    let meta = SetValuedMap::meta(&map);
    let inputs = BoundInputs { f_sup: meta.sup_bound, f_gamma: meta.gamma_norm, x_alpha: holder_seminorm(&x, 0.75)? };
    let t0 = horizon_t0(0.75, 0.625, 1.0, inputs.f_sup, inputs.f_gamma, inputs.x_alpha)?;
    let mut rows = Vec::new();
    let (mut all_pass, mut worst_defect) = (true, 0.0f64);
    for m in 0..=12 {
        let sol = ydi_approximate(&map, &x, &cfg.xi, m)?;
        let rep = bound_report(&sol, &cfg, &inputs, 1.0)?;
        let defect = (0..=m).map(|n| representation_check(&sol, &x, n)).collect::<Result<Vec<_>, _>>()?;
        let defect = defect.into_iter().fold(0.0, f64::max);
        worst_defect = worst_defect.max(defect);
        all_pass &= rep.pass();
        rows.push(vec![
            m as f64,
            rep.uniform_z.worst_margin,
            rep.oscillation.worst_margin,
            rep.pvar_bound.worst_margin,
            defect,
        ]);
    }
    Ok(Outcome {
        pass: (t0 - 1.0).abs() < 1e-12 && all_pass && worst_defect < 1e-12,
        summary: format!("T0 = {t0}, all three bounds hold at m <= 12: {all_pass}, representation defect {worst_defect:.2e}"),
        metrics: json!({ "t0": t0, "bounds_pass": all_pass, "representation_defect": worst_defect }),
        table: table(&["level", "uniform_margin", "oscillation_margin", "pvar_margin", "representation_defect"], rows),
    })
}

fn selection_certificate() -> CliResult<Outcome> {
    let gamma = 0.8;
    let map = BuiltinMap::parse("two_point(shape=weierstrass, gamma=0.8, terms=16, arg=time, offset=1)")?;
    let norm = measured_gamma_norm(&map, 12)?;
    let q = 1.5 / gamma;
    let xi = TimeSetMap::eval(&map, 0.0).project(&[0.0])?;
    let mut rows = Vec::new();
    let mut pass = true;
    let (mut worst_membership, mut worst_ratio) = (0.0f64, 0.0f64);
    for m in 8..=12 {
        let res = select_path(&map, &xi, m)?;
        let cert = certify_with_norm(&res, gamma, norm, q)?;
        pass &= res.membership_residual < 1e-10 && cert.q_variation <= cert.bound_rhs && cert.pass;
        worst_membership = worst_membership.max(res.membership_residual);
        worst_ratio = worst_ratio.max(cert.q_variation / cert.bound_rhs);
        let osc_margin = cert
            .oscillation_checks
            .iter()
            .map(|c| (c.increment_bound - c.increment).min(c.oscillation_bound - c.oscillation))
            .fold(f64::INFINITY, f64::min);
        rows.push(vec![m as f64, cert.q_variation, cert.bound_rhs, res.membership_residual, osc_margin]);
    }
    Ok(Outcome {
        pass,
        summary: format!(
            "measured norm {norm:.4}, max q-var/bound {worst_ratio:.3}, membership {worst_membership:e} (tol 1e-10)"
        ),
        metrics: json!({ "gamma_norm": norm, "q": q, "max_ratio": worst_ratio, "membership_residual": worst_membership }),
        table: table(&["level", "q_variation", "bound", "membership_residual", "oscillation_margin"], rows),
    })
}

const RDI_LEVEL: u32 = 10;
const CLOUD: &str = "two_point(amp=0.2, freq=0, phase=-1.5707963267948966, offset=2)";

fn rdi_setup() -> CliResult<(RoughPath, OneForm)> {
    let x = sample_fbm(0.45, 1, grid(RDI_LEVEL)?, 3, FbmMethod::Covariance)?;
    Ok((lift_piecewise_linear(&x, 0.45)?, OneForm::parse("rational(scale=0.1)")?))
}

fn rdi_config(mode: RdiMode) -> RdiConfig {
    RdiConfig { fp_tol: 1e-12, mode, ..RdiConfig::new(vec![0.5], 0.45, 0.2) }
}

fn rdi_lsc() -> CliResult<Outcome> {
    let (rp, g) = rdi_setup()?;
    let map = BuiltinMap::parse(CLOUD)?;
    let sol = rdi_fixed_point(&map, &g, &rp, &rdi_config(RdiMode::Lsc))?;
    let in_cloud = sol.velocity.data().iter().all(|v| v.abs() == 0.2);
    let pass = sol.certified
        && sol.fixed_point_residual < 1e-6
        && sol.inclusion_residual < 1e-6
        && sol.horizon >= 1.0 / 8.0
        && in_cloud;
    Ok(Outcome {
        pass,
        summary: format!(
            "T* = {}, residuals {:.2e} / {:.2e} (tol 1e-6), velocity in cloud: {in_cloud}",
            sol.horizon, sol.fixed_point_residual, sol.inclusion_residual
        ),
        metrics: json!({
            "T_star": sol.horizon,
            "fixed_point_residual": sol.fixed_point_residual,
            "inclusion_residual": sol.inclusion_residual,
            "iterations": sol.iterations,
            "certified": sol.certified,
            "velocity_in_cloud": in_cloud,
            "cone_jumps": sol.diagnostics.cone_jumps,
        }),
        table: table(
            &["t", "z", "w"],
            (0..sol.z.y.len()).step_by(16).map(|i| vec![sol.z.y.time(i), sol.z.y.point(i)[0], sol.velocity.point(i)[0]]).collect(),
        ),
    })
}

fn rdi_usc() -> CliResult<Outcome> {
    let (rp, g) = rdi_setup()?;
    let boxed = BuiltinMap::parse("box(amp=0, half_width=0.2)")?;
    let sol = rdi_fixed_point(&boxed, &g, &rp, &rdi_config(RdiMode::Usc))?;
    let zero = BuiltinMap::parse("singleton_sine(amp=0)")?;
    let flat = rdi_fixed_point(&zero, &g, &rp, &rdi_config(RdiMode::Usc))?;
    let reference = rde_solve(&g, &rp.head(flat.halvings)?, &[0.5], None, &RdeOptions::default())?;
    let gap = flat.z.y.sup_distance(&reference.solution.y)?;
    let pass = sol.certified && sol.fixed_point_residual < 1e-6 && sol.inclusion_residual < 1e-6 && gap <= 1e-10;
    Ok(Outcome {
        pass,
        summary: format!(
            "T* = {}, residuals {:.2e} / {:.2e} (tol 1e-6), gap to RDE with zero drift {gap:.2e} (tol 1e-10)",
            sol.horizon, sol.fixed_point_residual, sol.inclusion_residual
        ),
        metrics: json!({
            "T_star": sol.horizon,
            "fixed_point_residual": sol.fixed_point_residual,
            "inclusion_residual": sol.inclusion_residual,
            "iterations": sol.iterations,
            "certified": sol.certified,
            "rde_gap": gap,
        }),
        table: None,
    })
}

fn fbm_statistics() -> CliResult<Outcome> {
    let samples = 10_000u64;
    let g = grid(8)?;
    let batch = |hurst: f64| -> CliResult<Vec<f64>> {
        (0..samples).map(|s| Ok(sample_fbm(hurst, 1, g, s, FbmMethod::Covariance)?.last()[0])).collect()
    };
    let se = (2.0 / (samples as f64 - 1.0)).sqrt();
    let mut rows = Vec::new();
    let mut pass = true;
    let mut identical = true;
    for hurst in [0.45, 0.8] {
        let a = batch(hurst)?;
        let b = batch(hurst)?;
        identical &= a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits());
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let z = (var - 1.0) / se;
        pass &= z.abs() <= 3.0;
        rows.push(vec![hurst, var, se, z]);
    }
    Ok(Outcome {
        pass: pass && identical,
        summary: format!(
            "variances {:.4} / {:.4} (3 se = {:.4}), bit-identical reruns: {identical}",
            rows[0][1],
            rows[1][1],
            3.0 * se
        ),
        metrics: json!({ "samples": samples, "standard_error": se, "bit_identical": identical }),
        table: table(&["hurst", "variance", "standard_error", "z_score"], rows),
    })
}

/// Criteria 1 to 11; the twelfth compares two runs of the others.
pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: "C1", test: "pvar_oracle", title: "p-variation oracle", budget_secs: 5.0, run: pvar_oracle },
        Criterion { id: "C2", test: "young_accuracy", title: "Young integral accuracy", budget_secs: 5.0, run: young_accuracy },
        Criterion { id: "C3", test: "chen_relation", title: "Chen relation and regrouping", budget_secs: 10.0, run: chen_relation },
        Criterion { id: "C4", test: "rough_vs_quadrature", title: "rough integral vs quadrature", budget_secs: 10.0, run: rough_vs_quadrature },
        Criterion { id: "C5", test: "rde_closed_form", title: "RDE closed form", budget_secs: 10.0, run: rde_closed_form },
        Criterion { id: "C6", test: "ydi_reduction", title: "YDI singleton reduction", budget_secs: 60.0, run: ydi_reduction },
        Criterion { id: "C7", test: "ydi_bounds", title: "YDI small-horizon bounds", budget_secs: 60.0, run: ydi_bounds },
        Criterion { id: "C8", test: "selection_certificate", title: "selection q-variation bound", budget_secs: 30.0, run: selection_certificate },
        Criterion { id: "C9", test: "rdi_lsc", title: "RDI lower semicontinuous", budget_secs: 120.0, run: rdi_lsc },
        Criterion { id: "C10", test: "rdi_usc", title: "RDI convex upper semicontinuous", budget_secs: 120.0, run: rdi_usc },
        Criterion { id: "C11", test: "fbm_statistics", title: "fBm statistics", budget_secs: 60.0, run: fbm_statistics },
    ]
}

pub const DETERMINISM_ID: &str = "C12";

fn selected(id: &str, only: &[String]) -> bool {
    only.is_empty() || only.iter().any(|o| o.eq_ignore_ascii_case(id))
}

fn summary_entry(r: &Record) -> Value {
    json!({
        "id": r.id,
        "test": r.test,
        "title": r.title,
        "pass": r.numeric_pass(),
        "summary": match &r.outcome { Ok(o) => o.summary.clone(), Err(e) => format!("error: {e}") },
    })
}

/// Run the selected criteria and write `<out>/<id>/metrics.json`,
/// `<out>/<id>/table.csv` and `<out>/summary.json`. Timings stay out of
/// the artifacts so that reruns are byte-identical.
pub fn run_suite(out: &FsPath, only: &[String], mut report: impl FnMut(&Record)) -> CliResult<Vec<Record>> {
    fs::create_dir_all(out)?;
    let mut records = Vec::new();
    for c in criteria().into_iter().filter(|c| selected(c.id, only)) {
        let start = Instant::now();
        let outcome = (c.run)().map_err(|e| e.to_string());
        let record = Record {
            id: c.id.into(),
            test: c.test.into(),
            title: c.title.into(),
            budget_secs: c.budget_secs,
            seconds: start.elapsed().as_secs_f64(),
            outcome,
        };
        let dir = out.join(c.id.to_lowercase());
        if let Ok(o) = &record.outcome {
            write_json(&dir.join("metrics.json"), &json!({ "pass": o.pass, "metrics": o.metrics }))?;
            if let Some((header, rows)) = &o.table {
                write_csv(&dir.join("table.csv"), header, rows)?;
            }
        }
        report(&record);
        records.push(record);
    }
    let entries: Vec<Value> = records.iter().map(summary_entry).collect();
    write_json(&out.join("summary.json"), &json!({ "criteria": entries }))?;
    Ok(records)
}

fn collect_files(root: &FsPath, dir: &FsPath, acc: &mut Vec<PathBuf>) -> CliResult<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, acc)?;
        } else {
            acc.push(path.strip_prefix(root).expect("inside root").to_path_buf());
        }
    }
    Ok(())
}

/// Relative paths whose presence or bytes differ between two trees.
pub fn tree_differences(a: &FsPath, b: &FsPath) -> CliResult<Vec<PathBuf>> {
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    collect_files(a, a, &mut fa)?;
    collect_files(b, b, &mut fb)?;
    fa.sort();
    fb.sort();
    let mut diffs: Vec<PathBuf> = fa.iter().filter(|p| !fb.contains(p)).cloned().collect();
    diffs.extend(fb.iter().filter(|p| !fa.contains(p)).cloned());
    for p in fa.iter().filter(|p| fb.contains(p)) {
        if fs::read(a.join(p))? != fs::read(b.join(p))? {
            diffs.push(p.clone());
        }
    }
    diffs.sort();
    Ok(diffs)
}

/// Run the suite into `out`; when the determinism criterion is selected,
/// run it a second time into a scratch directory and compare the trees.
pub fn check(out: &FsPath, only: &[String], mut report: impl FnMut(&Record)) -> CliResult<Vec<Record>> {
    let mut records = run_suite(out, only, &mut report)?;
    if selected(DETERMINISM_ID, only) {
        let start = Instant::now();
        let scratch = std::env::temp_dir().join(format!("roughinc-check-{}", std::process::id()));
        if scratch.exists() {
            fs::remove_dir_all(&scratch)?;
        }
        let rerun = run_suite(&scratch, only, |_| {});
        let outcome = rerun.and_then(|_| tree_differences(out, &scratch)).map(|diffs| Outcome {
            pass: diffs.is_empty(),
            summary: if diffs.is_empty() {
                "second run produced a byte-identical artifact tree".into()
            } else {
                format!("{} files differ, first {}", diffs.len(), diffs[0].display())
            },
            metrics: json!({ "differing_files": diffs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>() }),
            table: None,
        });
        let _ = fs::remove_dir_all(&scratch);
        let record = Record {
            id: DETERMINISM_ID.into(),
            test: "determinism".into(),
            title: "determinism of check".into(),
            budget_secs: f64::INFINITY,
            seconds: start.elapsed().as_secs_f64(),
            outcome: outcome.map_err(|e| e.to_string()),
        };
        report(&record);
        records.push(record);
        let entries: Vec<Value> = records.iter().map(summary_entry).collect();
        write_json(&out.join("summary.json"), &json!({ "criteria": entries }))?;
    }
    Ok(records)
}

/// Exit status of a finished check.
pub fn verdict(records: &[Record]) -> CliResult<()> {
    let failed: Vec<&str> = records.iter().filter(|r| !r.pass()).map(|r| r.id.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotCertified(format!("failed criteria: {}", failed.join(", "))))
    }
}
