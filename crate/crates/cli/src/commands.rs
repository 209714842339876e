//! One runner per subcommand. Each writes its artifacts into `out` and
//! returns a short JSON status.

use std::path::Path as FsPath;

use roughinc::forms::OneForm;
use roughinc::norms::{holder_seminorm, NormReport};
use roughinc::rdi::rdi_fixed_point;
use roughinc::rough::{compose_controlled, lift_piecewise_linear, rough_integral, ControlledPath, RoughPath};
use roughinc::selection::{certify_with_norm, level_distance, measured_gamma_norm, select_path};
use roughinc::sets::Argument;
use roughinc::ydi::{bound_report, horizon_t0, ydi_solve, BoundCheck, BoundInputs, YdiConfig};
use roughinc::young::{young_integral, SewLimit, YoungBudget};
use roughinc::{BuiltinMap, Path, TimeSetMap};
use serde_json::{json, Value};

use crate::config::{DriverCommand, IntegrateCommand, NormsCommand, RdiCommand, SelectionCommand, YdiCommand};
use crate::error::{CliError, CliResult};
use crate::output::{write_csv, write_json, write_path};

fn not_certified(status: Value, what: &str) -> CliResult<Value> {
    if status["certified"].as_bool() == Some(true) {
        Ok(status)
    } else {
        Err(CliError::NotCertified(format!("{what}: certificate did not hold (see diagnostics.json)")))
    }
}

pub fn run_driver(cfg: &DriverCommand, out: &FsPath) -> CliResult<Value> {
    let x = cfg.driver.sample()?;
    write_path(&out.join("path.csv"), "x", &x)?;
    if let Some(alpha) = cfg.lift_alpha {
        let rp = lift_piecewise_linear(&x, alpha)?;
        write_csv(&out.join("rough.csv"), &RoughPath::table_header(x.dim()), &rp.to_table())?;
    }
    Ok(json!({ "command": "driver", "samples": x.len(), "dim": x.dim() }))
}

pub fn run_norms(cfg: &NormsCommand, out: &FsPath) -> CliResult<Value> {
    let x = crate::output::read_path(&cfg.input)?;
    let alpha = cfg.alpha.unwrap_or(0.5);
    let r = NormReport::compute(&x, cfg.p, alpha)?;
    let report = json!({
        "p": r.p,
        "alpha": r.alpha,
        "p_variation": r.p_variation,
        "holder_seminorm": r.holder_seminorm,
        "sup_norm": r.sup_norm,
        "pvar_norm": r.pvar_norm,
        "holder_norm": r.holder_norm,
    });
    write_json(&out.join("norms.json"), &report)?;
    Ok(json!({ "command": "norms", "p_variation": r.p_variation }))
}

pub fn run_integrate(cfg: &IntegrateCommand, out: &FsPath) -> CliResult<Value> {
    let x = cfg.driver.sample()?;
    let form = OneForm::parse(&cfg.form)?;
    if form.state_dim() != x.dim() || form.driver_dim() != x.dim() {
        return Err(CliError::Config(format!(
            "form maps R^{} to {}x{} matrices; the driver has dimension {}",
            form.state_dim(),
            form.state_dim(),
            form.driver_dim(),
            x.dim()
        )));
    }
    let (integral, extra) = match cfg.mode.as_str() {
        "young" => {
            let limit = match cfg.limit.as_deref() {
                None | Some("finest") => SewLimit::Finest,
                Some("extrapolated") => SewLimit::Extrapolated,
                Some(other) => return Err(CliError::Config(format!("unknown limit '{other}'"))),
            };
            let q = cfg.q.unwrap_or(1.0 / cfg.alpha);
            let budget = YoungBudget { limit, ..YoungBudget::new(q, cfg.alpha) };
            let data: Vec<f64> = (0..x.len()).flat_map(|i| form.eval(x.point(i))).collect();
            let y = Path::new(x.times().to_vec(), form.state_dim() * form.driver_dim(), data)?;
            let y = match x.grid() {
                Some(g) => Path::on_grid(g, y.dim(), y.data().to_vec())?,
                None => y,
            };
            (young_integral(&y, &x, &budget)?, json!({ "q": q, "alpha": cfg.alpha }))
        }
        "rough" => {
            let rp = lift_piecewise_linear(&x, cfg.alpha)?;
            let yc = compose_controlled(form.map(), &ControlledPath::of_driver(&rp), 1.0)?;
            let r = rough_integral(&yc, &rp)?;
            (r.integral.y, json!({ "alpha": cfg.alpha, "local_constant": r.local_constant }))
        }
        other => return Err(CliError::Config(format!("unknown integration mode '{other}'"))),
    };
    write_path(&out.join("integral.csv"), "i", &integral)?;
    let summary = json!({ "mode": cfg.mode, "final": integral.last(), "details": extra });
    write_json(&out.join("summary.json"), &summary)?;
    Ok(json!({ "command": "integrate", "final": integral.last() }))
}

fn check_json(c: &BoundCheck) -> Value {
    json!({
        "pass": c.pass,
        "worst_margin": c.worst_margin,
        "levels": c.levels.iter().map(|(n, l, r)| json!({ "level": n, "lhs": l, "rhs": r })).collect::<Vec<_>>(),
    })
}

pub fn run_ydi(cfg: &YdiCommand, out: &FsPath) -> CliResult<Value> {
    let x = cfg.driver.sample()?;
    let map = BuiltinMap::parse(&cfg.map)?;
    let e = &cfg.exponents;
    let max_level = cfg.max_level.unwrap_or(cfg.driver.level);
    let solver = YdiConfig {
        alpha: e.alpha,
        beta: e.beta,
        gamma: e.gamma,
        p: e.p,
        q: e.q,
        min_level: cfg.min_level,
        max_level,
        residual_tol: cfg.residual_tol,
        xi: cfg.xi.clone(),
    };
    let sol = ydi_solve(&map, &x, &solver)?;
    let meta = map.meta();
    let x_alpha = holder_seminorm(&x.coarsen(max_level)?, e.alpha)?;
    let inputs = BoundInputs { f_sup: meta.sup_bound, f_gamma: meta.gamma_norm, x_alpha };
    let t0 = horizon_t0(e.alpha, e.beta, e.gamma, inputs.f_sup, inputs.f_gamma, x_alpha)?;
    let horizon = cfg.driver.horizon;
    let bounds = (0..=sol.level)
        .map(|k| horizon / 2f64.powi(k as i32))
        .find(|s| *s <= t0)
        .map(|s| bound_report(&sol, &solver, &inputs, s))
        .transpose()?;
    write_path(&out.join("z.csv"), "z", &sol.z)?;
    write_path(&out.join("v.csv"), "v", &sol.v)?;
    let bound_json = match &bounds {
        Some(b) => json!({
            "horizon": b.horizon,
            "pass": b.pass(),
            "uniform_z": check_json(&b.uniform_z),
            "oscillation": check_json(&b.oscillation),
            "pvar_bound": check_json(&b.pvar_bound),
        }),
        None => Value::Null,
    };
    let diagnostics = json!({
        "level": sol.level,
        "windows": sol.windows,
        "inclusion_residual": sol.inclusion_residual,
        "endpoint_gap": sol.endpoint_gap,
        "pvar_v": sol.pvar_v,
        "cauchy_certificate": sol.certificates.last().map(|c| c.1),
        "certificates": sol.certificates.iter().map(|(m, c)| json!({ "level": m, "value": c })).collect::<Vec<_>>(),
        "certified": sol.certified,
        "t0": t0,
        "within_t0": sol.within_t0,
        "driver_holder": x_alpha,
        "bound_report": bound_json,
    });
    write_json(&out.join("diagnostics.json"), &diagnostics)?;
    not_certified(json!({ "command": "ydi", "level": sol.level, "certified": sol.certified }), "ydi")
}

pub fn run_selection(cfg: &SelectionCommand, out: &FsPath) -> CliResult<Value> {
    let map = BuiltinMap::parse(&cfg.map)?;
    if map.argument != Argument::Time {
        return Err(CliError::Config("selection needs a time map (arg=time)".into()));
    }
    let xi = match &cfg.xi {
        Some(v) => v.clone(),
        None => TimeSetMap::eval(&map, 0.0).project(&vec![0.0; map.value_dim])?,
    };
    let res = select_path(&map, &xi, cfg.level)?;
    let (gamma_norm, source) = match cfg.gamma_norm {
        Some(g) => (g, "configured"),
        None => (measured_gamma_norm(&map, cfg.level)?, "measured"),
    };
    let gamma = map.meta().gamma;
    let cert = certify_with_norm(&res, gamma, gamma_norm, cfg.q)?;
    let distance = if cfg.level > 0 { Some(level_distance(&select_path(&map, &xi, cfg.level - 1)?, &res)?) } else { None };
    write_path(&out.join("selection.csv"), "f", &res.f)?;
    let certificate = json!({
        "level": res.level,
        "q": cert.q,
        "gamma": gamma,
        "gamma_norm": gamma_norm,
        "gamma_norm_source": source,
        "q_variation": cert.q_variation,
        "bound_rhs": cert.bound_rhs,
        "membership_residual": cert.membership_residual,
        "endpoint_gap": res.endpoint_gap,
        "step_excess": res.step_excess,
        "previous_level_distance": distance,
        "oscillation_checks": cert.oscillation_checks.iter().map(|c| json!({
            "level": c.level,
            "increment": c.increment,
            "increment_bound": c.increment_bound,
            "oscillation": c.oscillation,
            "oscillation_bound": c.oscillation_bound,
            "pass": c.pass(),
        })).collect::<Vec<_>>(),
        "pass": cert.pass,
    });
    write_json(&out.join("certificate.json"), &certificate)?;
    not_certified(json!({ "command": "selection", "level": res.level, "certified": cert.pass }), "selection")
}

pub fn run_rdi(cfg: &RdiCommand, out: &FsPath) -> CliResult<Value> {
    let solver = cfg.solver_config()?;
    let x = cfg.driver.sample()?;
    let rp = lift_piecewise_linear(&x, cfg.alpha)?;
    let map = BuiltinMap::parse(&cfg.map)?;
    let form = OneForm::parse(&cfg.form)?;
    let sol = rdi_fixed_point(&map, &form, &rp, &solver)?;
    write_path(&out.join("z.csv"), "z", &sol.z.y)?;
    write_path(&out.join("zprime.csv"), "zp", &sol.z.y_prime)?;
    write_path(&out.join("drift.csv"), "x", &sol.drift)?;
    write_path(&out.join("velocity.csv"), "w", &sol.velocity)?;
    let d = &sol.diagnostics;
    let diagnostics = json!({
        "fixed_point_residual": sol.fixed_point_residual,
        "inclusion_residual": sol.inclusion_residual,
        "iterations": sol.iterations,
        "certified": sol.certified,
        "T_star": sol.horizon,
        "halvings": sol.halvings,
        "bnorm_margins": {
            "controlled_norm": d.controlled_norm,
            "controlled_margin": d.controlled_margin,
            "holder_norm": d.holder_norm,
            "holder_margin": d.holder_margin,
            "velocity_max": d.velocity_max,
            "velocity_margin": d.velocity_margin,
        },
        "cone_jumps": d.cone_jumps,
        "max_jump_rate": d.max_jump_rate,
        "start_ok": d.start_ok,
    });
    write_json(&out.join("diagnostics.json"), &diagnostics)?;
    not_certified(json!({ "command": "rdi", "T_star": sol.horizon, "certified": sol.certified }), "rdi")
}
