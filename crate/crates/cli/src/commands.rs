//! Command implementations. Each command validates its slice of the job
//! configuration, delegates to the core modules and assembles deterministic
//! JSON, CSV and console renderings.

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use sobspec_core::error::{Error as CoreError, SpectraError};
use sobspec_core::mollify::{verify_boundary_decay, verify_closure_convergence};
use sobspec_core::profiles::{self, SmoothFn};
use sobspec_core::sobolev::{
    hs_norm, make_exhaustion, periodization_audit, seminorm, smoothness_audit, Exhaustion, Grid,
    GridFunction, SobolevIndex,
};
use sobspec_core::spectra::{
    boundary_conditions, boundary_matrix, classify, continuous_witness, dirichlet_eigenvalues,
    inclusion_consistency, residual_witness_adjoint, scaled_determinant, spectrum_table,
    DomainVariant, SpectrumClass,
};
use sobspec_core::symbol::{
    ellipticity, hypoellipticity, FrequencyAuditSpec, OperatorSide, SymbolPoly,
};

use crate::config::{ConfigError, JobConfig};
use crate::output::{complex_value, fmt_c64_short, render_table, set_descriptor_value, sig12};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<sobspec_core::error::SymbolError> for CliError {
    fn from(e: sobspec_core::error::SymbolError) -> Self {
        CliError::Core(CoreError::Symbol(e))
    }
}

impl From<sobspec_core::error::SobolevError> for CliError {
    fn from(e: sobspec_core::error::SobolevError) -> Self {
        CliError::Core(CoreError::Sobolev(e))
    }
}

impl From<sobspec_core::error::MollifyError> for CliError {
    fn from(e: sobspec_core::error::MollifyError) -> Self {
        CliError::Core(CoreError::Mollify(e))
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        CliError::Core(CoreError::Spectra(e))
    }
}

/// Consistency alarms map to exit code 2 rather than 1.
pub fn is_alarm(e: &CliError) -> bool {
    matches!(
        e,
        CliError::Core(CoreError::Spectra(SpectraError::ConsistencyAlarm(_)))
    )
}

/// Rendered artifacts of one command run.
pub struct CommandOutput {
    pub json: Value,
    pub csv: Option<String>,
    pub pretty: String,
    /// True when a theorem-level check failed; maps to exit code 2.
    pub alarm: bool,
}

fn symbol_of(cfg: &JobConfig) -> Result<SymbolPoly, CliError> {
    Ok(SymbolPoly::new(cfg.coeffs.clone())?)
}

fn grid_of(cfg: &JobConfig) -> Result<Grid, CliError> {
    match cfg.window {
        Some((lo, hi)) => Ok(Grid::new(lo, hi, cfg.grid_samples)?),
        None => Ok(Grid::for_interval(
            cfg.interval,
            cfg.padding_fraction,
            cfg.grid_samples,
        )?),
    }
}

fn exhaustion_of(cfg: &JobConfig) -> Result<Exhaustion, CliError> {
    let grid = grid_of(cfg)?;
    Ok(make_exhaustion(
        &grid,
        cfg.interval,
        cfg.exhaustion_depth,
        cfg.closure_rule,
    )?)
}

fn profile_of(name: &str, interval: (f64, f64)) -> Result<SmoothFn, CliError> {
    match name {
        "gaussian" => Ok(SmoothFn::from_real_jet("gaussian", |x| {
            x.mul(x).scale(-std::f64::consts::PI).exp()
        })),
        other => profiles::by_name(other, interval).ok_or_else(|| {
            CliError::Config(ConfigError::Invalid {
                field: "function".into(),
                message: format!(
                    "unknown profile {other:?}; expected sin, one, x, gaussian or edge_singular"
                ),
            })
        }),
    }
}

fn class_label(c: SpectrumClass) -> &'static str {
    match c {
        SpectrumClass::Resolvent => "resolvent",
        SpectrumClass::Point => "point",
        SpectrumClass::Residual => "residual",
        SpectrumClass::Continuous => "continuous",
    }
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

pub fn run_classify(cfg: &JobConfig) -> Result<CommandOutput, CliError> {
    let sym = symbol_of(cfg)?;
    let mut results = Vec::new();
    let mut csv = String::from("lambda_re,lambda_im,variant,class,provenance,kernel_dimension\n");
    let mut pretty = String::new();
    for &lambda in &cfg.lambda_samples {
        for &variant in &cfg.variants {
            let cl = classify(&sym, lambda, variant, cfg.interval, cfg.rank_tol)?;
            let provenance = format!("{:?}", cl.provenance);
            results.push(json!({
                "lambda": complex_value(lambda),
                "variant": variant.label(),
                "class": class_label(cl.class),
                "provenance": provenance,
                "kernel_dimension": cl.kernel_dimension,
            }));
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                sig12(lambda.re),
                sig12(lambda.im),
                variant.label(),
                class_label(cl.class),
                provenance,
                cl.kernel_dimension.map_or(String::new(), |k| k.to_string()),
            ));
            pretty.push_str(&format!(
                "lambda = {:<12} {:<16} -> {:<11} [{}]\n",
                fmt_c64_short(lambda),
                variant.label(),
                class_label(cl.class),
                provenance,
            ));
        }
    }
    if pretty.is_empty() {
        pretty.push_str("no lambda samples configured\n");
    }
    Ok(CommandOutput {
        json: json!({
            "interval": [sig12(cfg.interval.0), sig12(cfg.interval.1)],
            "scale": sig12(cfg.scale),
            "results": results,
        }),
        csv: Some(csv),
        pretty,
        alarm: false,
    })
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

pub fn run_table(cfg: &JobConfig) -> Result<CommandOutput, CliError> {
    let sym = symbol_of(cfg)?;
    let table = spectrum_table(
        &sym,
        cfg.interval,
        cfg.scale,
        &cfg.lambda_samples,
        &cfg.variants,
        cfg.rank_tol,
    )?;

    // paired-table inclusion checks when both sides are classified
    let consistency = if !cfg.lambda_samples.is_empty()
        && table.column(DomainVariant::MinimalSupport).is_some()
    {
        let adjoint = spectrum_table(
            &sym,
            cfg.interval,
            cfg.scale,
            &cfg.lambda_samples,
            &[DomainVariant::AdjointCompact],
            cfg.rank_tol,
        )?;
        Some(inclusion_consistency(&table, &adjoint)?)
    } else {
        None
    };

    // keyed by variant: {variant: {sigma_p, sigma_r, sigma_c}}
    let mut columns = serde_json::Map::new();
    for c in &table.columns {
        columns.insert(
            c.variant.label().to_string(),
            json!({
                "sigma_p": set_descriptor_value(&c.sigma_p),
                "sigma_r": set_descriptor_value(&c.sigma_r),
                "sigma_c": set_descriptor_value(&c.sigma_c),
                "provenance": c.provenance_note,
            }),
        );
    }
    let variant_order: Vec<&str> = table.columns.iter().map(|c| c.variant.label()).collect();

    let mut csv = String::from("lambda_re,lambda_im");
    for c in &table.columns {
        csv.push(',');
        csv.push_str(c.variant.label());
    }
    csv.push('\n');
    for (i, lambda) in table.lambda_samples.iter().enumerate() {
        csv.push_str(&format!("{},{}", sig12(lambda.re), sig12(lambda.im)));
        for c in &table.columns {
            csv.push(',');
            csv.push_str(class_label(c.classes[i]));
        }
        csv.push('\n');
    }

    let mut pretty = render_table(&table);
    let mut alarm = false;
    if let Some(report) = &consistency {
        if report.pass {
            pretty.push_str("\ninclusion checks (i)-(iii) and closure-union: pass\n");
        } else {
            alarm = true;
            pretty.push_str("\ninclusion checks FAILED:\n");
            for v in &report.violations {
                pretty.push_str(&format!(
                    "  {} at lambda = {}\n",
                    v.rule,
                    fmt_c64_short(v.lambda)
                ));
            }
        }
    }

    let consistency_json = consistency.map(|r| {
        json!({
            "pass": r.pass,
            "violations": r
                .violations
                .iter()
                .map(|v| json!({"lambda": complex_value(v.lambda), "rule": v.rule}))
                .collect::<Vec<_>>(),
        })
    });

    Ok(CommandOutput {
        json: json!({
            "interval": [sig12(cfg.interval.0), sig12(cfg.interval.1)],
            "scale": sig12(cfg.scale),
            "lambda_sample_count": table.lambda_samples.len(),
            "variant_order": variant_order,
            "columns": columns,
            "consistency": consistency_json,
        }),
        csv: Some(csv),
        pretty,
        alarm,
    })
}

// ---------------------------------------------------------------------------
// eigen
// ---------------------------------------------------------------------------

pub fn run_eigen(cfg: &JobConfig) -> Result<CommandOutput, CliError> {
    let sym = symbol_of(cfg)?;
    let eigenvalues = dirichlet_eigenvalues(cfg.interval, cfg.eigen_n_max)?;
    let bcs = boundary_conditions(DomainVariant::DirichletGraph, sym.order())?;

    let det_at = |lambda: f64| -> Result<f64, CliError> {
        let bm = boundary_matrix(
            &sym,
            C64::new(lambda, 0.0),
            cfg.interval,
            &bcs,
            OperatorSide::Direct,
        )?;
        Ok(scaled_determinant(&bm)
            .map(|d| d.norm())
            .unwrap_or(f64::NAN))
    };

    let mut audits = Vec::new();
    let mut csv = String::from("lambda,abs_scaled_determinant,kind\n");
    let mut pretty = String::from("dirichlet eigenvalues and boundary determinant audit\n");
    for l in &eigenvalues {
        let d = det_at(*l)?;
        audits.push(json!({"lambda": sig12(*l), "abs_scaled_determinant": sig12(d)}));
        csv.push_str(&format!("{},{},eigenvalue\n", sig12(*l), sig12(d)));
        pretty.push_str(&format!("  lambda = {:>14.8}  |det| = {d:.3e}\n", l));
    }
    let mut midpoints = Vec::new();
    for pair in eigenvalues.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let d = det_at(mid)?;
        midpoints.push(json!({"lambda": sig12(mid), "abs_scaled_determinant": sig12(d)}));
        csv.push_str(&format!("{},{},midpoint\n", sig12(mid), sig12(d)));
        pretty.push_str(&format!("  midpoint {:>13.8}  |det| = {d:.3e}\n", mid));
    }

    Ok(CommandOutput {
        json: json!({
            "interval": [sig12(cfg.interval.0), sig12(cfg.interval.1)],
            "eigenvalues": eigenvalues.iter().map(|l| sig12(*l)).collect::<Vec<_>>(),
            "audits": audits,
            "midpoints": midpoints,
        }),
        csv: Some(csv),
        pretty,
        alarm: false,
    })
}

// ---------------------------------------------------------------------------
// closure-verify
// ---------------------------------------------------------------------------

pub fn run_closure_verify(cfg: &JobConfig) -> Result<CommandOutput, CliError> {
    let exh = exhaustion_of(cfg)?;
    let u = profile_of(&cfg.closure_function, cfg.interval)?;
    let k = cfg.closure_seminorm_index;
    let j_range = 1..=cfg.closure_j_max.min(cfg.exhaustion_depth);

    let mut convergence = Vec::new();
    let mut decay = Vec::new();
    let mut csv = String::from("s,j,seminorm_value\n");
    let mut pretty = String::new();
    let mut alarm = false;
    for &s in &cfg.closure_s_values {
        let report =
            verify_closure_convergence(&u, &exh, s, k, j_range.clone(), cfg.convergence_tol)?;
        for (j, v) in &report.entries {
            csv.push_str(&format!("{},{},{}\n", s, j, sig12(*v)));
        }
        pretty.push_str(&format!(
            "convergence s = {s}, k = {k}: {} (first index below {}: {})\n",
            if report.pass { "pass" } else { "FAIL" },
            report.tolerance,
            report
                .first_below
                .map_or("none".to_string(), |j| j.to_string()),
        ));
        alarm |= !report.pass;
        convergence.push(json!({
            "s": s,
            "seminorm_index": k,
            "tolerance": sig12(report.tolerance),
            "entries": report
                .entries
                .iter()
                .map(|(j, v)| json!({"j": j, "seminorm_value": sig12(*v)}))
                .collect::<Vec<_>>(),
            "first_below": report.first_below,
            "pass": report.pass,
        }));

        let d = verify_boundary_decay(
            &u,
            &exh,
            cfg.closure_derivative_order,
            cfg.closure_trace_order,
            s,
            k,
            j_range.clone(),
        )?;
        pretty.push_str(&format!(
            "boundary decay s = {s}: {} (crossover j0 = {})\n",
            if d.pass { "pass" } else { "FAIL" },
            d.crossover.map_or("none".to_string(), |j| j.to_string()),
        ));
        alarm |= !d.pass;
        decay.push(json!({
            "s": s,
            "derivative_order": d.derivative_order,
            "trace_order": d.trace_order,
            "fixed_index": d.fixed_index,
            "entries": d
                .entries
                .iter()
                .map(|(j, va, vb)| json!({
                    "j": j,
                    "lower_endpoint": sig12(*va),
                    "upper_endpoint": sig12(*vb),
                }))
                .collect::<Vec<_>>(),
            "crossover": d.crossover,
            "pass": d.pass,
        }));
    }

    Ok(CommandOutput {
        json: json!({
            "function": cfg.closure_function,
            "interval": [sig12(cfg.interval.0), sig12(cfg.interval.1)],
            "convergence": convergence,
            "boundary_decay": decay,
        }),
        csv: Some(csv),
        pretty,
        alarm,
    })
}

// ---------------------------------------------------------------------------
// witness
// ---------------------------------------------------------------------------

pub fn run_witness(cfg: &JobConfig) -> Result<CommandOutput, CliError> {
    let sym = symbol_of(cfg)?;
    let exh = exhaustion_of(cfg)?;
    let s = SobolevIndex::new(cfg.witness_s).map_err(|e| CliError::Core(CoreError::Sobolev(e)))?;
    let j_range = 1..=cfg.witness_j_max.min(cfg.exhaustion_depth);

    let mut reports = Vec::new();
    let mut csv = String::from("lambda_re,lambda_im,j,op_side,sol_side\n");
    let mut pretty = String::new();
    let mut alarm = false;
    for &lambda in &cfg.witness_lambda {
        let report = continuous_witness(
            &sym,
            lambda,
            &exh,
            s,
            cfg.witness_seminorm_index,
            j_range.clone(),
        )?;
        for row in &report.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                sig12(lambda.re),
                sig12(lambda.im),
                row.j,
                sig12(row.operator_side),
                sig12(row.solution_side),
            ));
        }
        pretty.push_str(&format!(
            "lambda = {:<10} root = {:<20} crossover = {:<4} verdict = {}\n",
            fmt_c64_short(lambda),
            fmt_c64_short(report.root),
            report
                .crossover
                .map_or("none".to_string(), |j| j.to_string()),
            if report.verdict { "pass" } else { "FAIL" },
        ));
        alarm |= !report.verdict;
        reports.push(json!({
            "lambda": complex_value(lambda),
            "root": complex_value(report.root),
            "seminorm_index": report.seminorm_index,
            "s": sig12(report.s),
            "floor": sig12(report.floor),
            "crossover": report.crossover,
            "verdict": report.verdict,
            "rows": report
                .rows
                .iter()
                .map(|r| json!({
                    "j": r.j,
                    "op_side": sig12(r.operator_side),
                    "sol_side": sig12(r.solution_side),
                }))
                .collect::<Vec<_>>(),
        }));
    }

    // annihilator residuals on the dual side, same lambda sweep
    let grid = grid_of(cfg)?;
    let (b, c) = cfg.interval;
    let length = c - b;
    let g_fns = [
        profiles::compact_bump(1.0, b + 0.45 * length, 0.18 * length),
        profiles::compact_bump(0.8, b + 0.55 * length, 0.15 * length),
    ];
    let gs: Vec<GridFunction> = g_fns
        .iter()
        .map(|f| GridFunction::from_fn(grid.clone(), |x| f.eval(x)))
        .collect();
    let mut residual_reports = Vec::new();
    for &lambda in &cfg.witness_lambda {
        let r = residual_witness_adjoint(
            &sym,
            lambda,
            cfg.interval,
            &gs,
            cfg.residual_tol,
            cfg.support_tol,
        )?;
        pretty.push_str(&format!(
            "annihilator lambda = {:<10} max residual = {:.3e} ({})\n",
            fmt_c64_short(lambda),
            r.residuals.iter().cloned().fold(0.0, f64::max),
            if r.pass { "pass" } else { "FAIL" },
        ));
        alarm |= !r.pass;
        residual_reports.push(json!({
            "lambda": complex_value(lambda),
            "root": complex_value(r.root),
            "residuals": r.residuals.iter().map(|v| sig12(*v)).collect::<Vec<_>>(),
            "tolerance": sig12(r.tolerance),
            "pass": r.pass,
        }));
    }

    Ok(CommandOutput {
        json: json!({
            "continuous": reports,
            "residual": residual_reports,
        }),
        csv: Some(csv),
        pretty,
        alarm,
    })
}

// ---------------------------------------------------------------------------
// norm
// ---------------------------------------------------------------------------

pub fn run_norm(cfg: &JobConfig) -> Result<CommandOutput, CliError> {
    let grid = grid_of(cfg)?;
    let exh = exhaustion_of(cfg)?;
    let f = profile_of(&cfg.norm_function, cfg.interval)?;
    let u = GridFunction::from_fn(grid.clone(), |x| f.eval(x));

    let mut warnings: Vec<String> = Vec::new();
    let edge = periodization_audit(&u, 1e-8);
    if !edge.ok() {
        warnings.push(format!(
            "window-edge magnitude {:.3e} exceeds periodization tolerance {:.1e}",
            edge.edge_magnitude, edge.tolerance
        ));
    }

    let mut norms = Vec::new();
    let mut seminorms = Vec::new();
    let mut csv = String::from("j,s,value\n");
    let mut pretty = format!("H^s norms of {:?}\n", cfg.norm_function);
    for &s in &cfg.norm_s_values {
        let idx = SobolevIndex::new(s).map_err(|e| CliError::Core(CoreError::Sobolev(e)))?;
        if let Some(audit) = smoothness_audit(&u, idx) {
            if !audit.ok() {
                warnings.push(format!(
                    "s = {s}: derivative spectrum not decaying (tail fraction {:.3e})",
                    audit.tail_fraction
                ));
            }
        }
        let value = hs_norm(&u, idx);
        norms.push(json!({"s": sig12(s), "value": sig12(value)}));
        csv.push_str(&format!("0,{},{}\n", sig12(s), sig12(value)));
        pretty.push_str(&format!("  s = {:>6}  ||u||_s = {:.9}\n", s, value));
        for j in 1..=exh.count() {
            let p = seminorm(&u, &exh, j, idx)?;
            seminorms.push(json!({"j": j, "s": sig12(s), "value": sig12(p)}));
            csv.push_str(&format!("{},{},{}\n", j, sig12(s), sig12(p)));
        }
    }
    for w in &warnings {
        pretty.push_str(&format!("warning: {w}\n"));
    }

    Ok(CommandOutput {
        json: json!({
            "function": cfg.norm_function,
            "window": [sig12(grid.window().0), sig12(grid.window().1)],
            "samples": grid.len(),
            "norms": norms,
            "seminorms": seminorms,
            "warnings": warnings,
        }),
        csv: Some(csv),
        pretty,
        alarm: false,
    })
}

// ---------------------------------------------------------------------------
// hypo
// ---------------------------------------------------------------------------

pub fn run_hypo(cfg: &JobConfig) -> Result<CommandOutput, CliError> {
    let sym = symbol_of(cfg)?;
    let e = ellipticity(&sym)?;
    let spec = FrequencyAuditSpec {
        xi_max: cfg.hypo_xi_max,
        samples: cfg.hypo_samples,
    };
    let h = hypoellipticity(&sym, &spec)?;

    let pretty = format!(
        "symbol order m = {}\n\
         ellipticity: {} (c = {:.6e}, C = {:.6e}, audit {})\n\
         hypoellipticity: {} (delta = {:.6}, fit residual = {:.3e}, ratio bound = {:.3e})\n\
         zero set: {}\n",
        cfg.order(),
        e.elliptic,
        e.lower_constant,
        e.threshold_radius,
        if e.audit_pass { "pass" } else { "FAIL" },
        h.hypoelliptic,
        h.delta,
        h.delta_fit_residual,
        h.derivative_ratio_bound,
        h.zero_set
            .iter()
            .map(|z| fmt_c64_short(*z))
            .collect::<Vec<_>>()
            .join(", "),
    );

    let mut csv = String::from("xi,d_p\n");
    for (xi, d) in &h.distance_audit {
        csv.push_str(&format!("{},{}\n", sig12(*xi), sig12(*d)));
    }

    Ok(CommandOutput {
        json: json!({
            "ellipticity": {
                "elliptic": e.elliptic,
                "lower_constant": sig12(e.lower_constant),
                "threshold_radius": sig12(e.threshold_radius),
                "audit_pass": e.audit_pass,
            },
            "hypoellipticity": {
                "hypoelliptic": h.hypoelliptic,
                "delta": sig12(h.delta),
                "delta_fit_residual": sig12(h.delta_fit_residual),
                "derivative_ratio_bound": sig12(h.derivative_ratio_bound),
                "zero_set": h.zero_set.iter().map(|z| complex_value(*z)).collect::<Vec<_>>(),
                "distance_audit": h
                    .distance_audit
                    .iter()
                    .map(|(xi, d)| json!([sig12(*xi), sig12(*d)]))
                    .collect::<Vec<_>>(),
            },
        }),
        csv: Some(csv),
        pretty,
        alarm: false,
    })
}
