//! Implementations of the four CLI verbs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fdr_control::bounds::{
    extreme_dependence_fdr, fdr_bi_linear, fdr_bound_dependence_linear, fdr_bound_sparsity,
    fdr_bound_tempered_aorc_bi, fdr_bound_truncated_bi, fdr_bound_truncated_dependence_adaptive,
    fdr_bound_truncated_dependence_det, BoundReport, EstimateMode, ExtremeVariant, SparsityRegime,
};
use fdr_control::corrections::{procedure_correction_sup, CorrectionMode};
use fdr_control::schedules::{
    bh_schedule, bonferroni_schedule, by_schedule, early_stop_corrected_schedule,
    truncated_bh_schedule,
};
use fdr_control::sim::{run_mc, Scenario, ScenarioModel};
use fdr_control::{step_down, step_up, PValueSet, RejectionResult};

use crate::procedure::{resolve, ProcedureId, ResolvedProcedure};
use crate::svg::{line_chart, Series};
use crate::{AnalyzeArgs, BoundsArgs, CliError, ProcedureArgs, SimulateArgs, SweepArgs};

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", out.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn emit_warnings(resolved: &ResolvedProcedure) {
    for w in &resolved.warnings {
        eprintln!("warning: {w}");
    }
}

fn run_procedure(
    resolved: &ResolvedProcedure,
    p: &PValueSet,
    mode: &str,
) -> Result<RejectionResult, CliError> {
    let schedule = resolved.schedule(p)?;
    if resolved.id == ProcedureId::W4 {
        for w in resolved.generator_spec(p.m())?.tempered_aorc_warnings() {
            eprintln!("warning: tempered-aorc feasibility: {w}");
        }
    }
    let result = match mode {
        "su" => step_up(p, &schedule)?,
        "sd" => step_down(p, &schedule)?,
        other => {
            return Err(CliError::Validation(format!(
                "unknown mode `{other}` (expected su or sd)"
            )))
        }
    };
    Ok(result)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.procedure)?;
    emit_warnings(&resolved);
    let values = crate::input::read_pvalues(&args.input, args.column.as_deref())?;
    let p = PValueSet::new(values)?;
    let result = run_procedure(&resolved, &p, &args.procedure.mode)?;

    ensure_out_dir(&args.out)?;
    let mut csv = String::from("index,pvalue,rejected,threshold\n");
    for (i, &value) in p.values().iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            i + 1,
            value,
            result.is_rejected(i),
            result.threshold()
        );
    }
    write_file(&args.out.join("rejections.csv"), &csv)?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "procedure: {} ({})",
        args.procedure.procedure,
        resolved.describe()
    );
    let _ = writeln!(
        summary,
        "mode: {}",
        if args.procedure.mode == "sd" {
            "step-down"
        } else {
            "step-up"
        }
    );
    let _ = writeln!(summary, "m: {}", p.m());
    let _ = writeln!(summary, "rejections: {}", result.r());
    let _ = writeln!(summary, "threshold: {}", result.threshold());
    let indices: Vec<String> = result
        .rejected()
        .iter()
        .map(|i| (i + 1).to_string())
        .collect();
    let _ = writeln!(summary, "rejected indices: {}", indices.join(" "));
    let _ = writeln!(summary, "bounds (worst case m0 = m):");
    for regime in ["independence", "dependence"] {
        if let Some(report) = guarantee_for(&resolved, regime, p.m(), p.m())? {
            let _ = writeln!(
                summary,
                "  {} [{}]: {} ({})",
                report.source,
                regime,
                report.value,
                if report.applicable {
                    "applicable"
                } else {
                    "not applicable"
                }
            );
        }
    }
    write_file(&args.out.join("summary.txt"), &summary)?;
    println!("R = {} at threshold {}", result.r(), result.threshold());
    Ok(())
}

pub fn sweep_k(args: &SweepArgs) -> Result<(), CliError> {
    let alpha = args.procedure.alpha;
    let values = crate::input::read_pvalues(&args.input, args.column.as_deref())?;
    let p = PValueSet::new(values)?;
    let m = p.m();
    let k_min = args.k_min.unwrap_or(1);
    let k_max = args.k_max.unwrap_or(m);
    if !(1 <= k_min && k_min <= k_max && k_max <= m) {
        return Err(CliError::Validation(format!(
            "invalid sweep range 1 <= {k_min} <= {k_max} <= {m}"
        )));
    }

    let r_bh = step_up(&p, &bh_schedule(m, alpha)?)?.r();
    let r_by = step_up(&p, &by_schedule(m, alpha)?)?.r();
    let r_bonf = step_up(&p, &bonferroni_schedule(m, alpha)?)?.r();

    let mut bh_points = Vec::new();
    let mut es_points = Vec::new();
    let mut csv = String::from("k,r_bh_k,r_es_k\n");
    for k in k_min..=k_max {
        let r_bh_k = step_up(&p, &truncated_bh_schedule(m, k, alpha)?)?.r();
        bh_points.push((k as f64, r_bh_k as f64));
        let r_es_k = if k < m {
            let r = step_up(&p, &early_stop_corrected_schedule(&p, k, k, alpha)?)?.r();
            es_points.push((k as f64, r as f64));
            r.to_string()
        } else {
            String::new()
        };
        let _ = writeln!(csv, "{k},{r_bh_k},{r_es_k}");
    }
    let _ = writeln!(csv, "BH,{r_bh},");
    let _ = writeln!(csv, "BY,{r_by},");
    let _ = writeln!(csv, "Bonferroni,{r_bonf},");

    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("sweep.csv"), &csv)?;

    if args.emit_svg {
        let const_line = |r: usize| vec![(k_min as f64, r as f64), (k_max as f64, r as f64)];
        let svg = line_chart(
            "rejections by truncation level",
            "k",
            "R",
            &[
                Series {
                    label: "truncated",
                    color: "#1f77b4",
                    dashed: false,
                    points: bh_points,
                },
                Series {
                    label: "early-stopped",
                    color: "#d62728",
                    dashed: true,
                    points: es_points,
                },
                Series {
                    label: "harmonic-corrected",
                    color: "#2ca02c",
                    dashed: true,
                    points: const_line(r_by),
                },
                Series {
                    label: "bonferroni",
                    color: "#7f7f7f",
                    dashed: true,
                    points: const_line(r_bonf),
                },
            ],
        );
        write_file(&args.out.join("sweep.svg"), &svg)?;
    }
    println!("reference counts: BH = {r_bh}, BY = {r_by}, Bonferroni = {r_bonf}");
    Ok(())
}

/// The finite-sample guarantee matching a procedure under one regime, or
/// `None` when the procedure offers none there (the plain linear rule
/// still gets its harmonic worst-case bound).
fn guarantee_for(
    resolved: &ResolvedProcedure,
    regime: &str,
    m0: usize,
    m: usize,
) -> Result<Option<BoundReport>, CliError> {
    let alpha = resolved.alpha;
    let frac = m0 as f64 / m as f64;
    let level = |source: &'static str, value: f64, applicable: bool, condition: &str| BoundReport {
        source,
        value,
        applicable,
        margin: if applicable {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        },
        condition: condition.to_string(),
    };
    let independent = regime == "independence";
    let report = match resolved.id {
        ProcedureId::Bh => {
            if independent {
                fdr_bi_linear(m0, m, alpha)
            } else {
                fdr_bound_dependence_linear(m0, m, alpha)
            }
        }
        ProcedureId::Bonferroni | ProcedureId::By | ProcedureId::BhK | ProcedureId::EsK => level(
            "corrected-level",
            frac * alpha,
            true,
            "valid under arbitrary dependence",
        ),
        ProcedureId::SpK => fdr_bound_sparsity(
            m0,
            m,
            resolved.k.unwrap_or(m),
            alpha,
            if independent {
                SparsityRegime::Independent
            } else {
                SparsityRegime::Arbitrary
            },
        ),
        ProcedureId::W2 | ProcedureId::W3 | ProcedureId::W4 => {
            let spec = resolved.generator_spec(m)?;
            let k = resolved.k.unwrap_or(m);
            if independent {
                let ck =
                    procedure_correction_sup(&spec, k, m, 1.0, 1.0, CorrectionMode::Deterministic)?;
                fdr_bound_truncated_bi(m0, m, EstimateMode::Deterministic, ck, alpha)
            } else {
                fdr_bound_truncated_dependence_det(m0, m, &spec, k)?.report
            }
        }
        ProcedureId::AdaptiveBh
        | ProcedureId::AdaptiveW2
        | ProcedureId::AdaptiveW3
        | ProcedureId::AdaptiveW4 => {
            if resolved.unclamped {
                if independent && resolved.id == ProcedureId::AdaptiveBh {
                    level(
                        "storey-plugin-level",
                        alpha,
                        true,
                        "plug-in control under independence",
                    )
                } else {
                    level(
                        "nominal-level",
                        alpha,
                        false,
                        "no finite-sample guarantee for the unclamped plug-in here",
                    )
                }
            } else {
                let spec = resolved.generator_spec(m)?;
                let k = resolved.k.unwrap_or(m);
                if independent {
                    let ck = procedure_correction_sup(
                        &spec,
                        k,
                        m,
                        resolved.c,
                        resolved.delta,
                        CorrectionMode::Adaptive,
                    )?;
                    fdr_bound_truncated_bi(
                        m0,
                        m,
                        EstimateMode::Adaptive {
                            c: resolved.c,
                            restricted: true,
                        },
                        ck,
                        alpha,
                    )
                } else {
                    fdr_bound_truncated_dependence_adaptive(
                        m0,
                        m,
                        &spec,
                        k,
                        resolved.c,
                        resolved.delta,
                    )?
                }
            }
        }
    };
    Ok(Some(report))
}

pub fn bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.procedure)?;
    emit_warnings(&resolved);
    let m = args.m;
    let m0 = args.m0.unwrap_or(m);
    if m == 0 || m0 > m {
        return Err(CliError::Validation(format!(
            "need 1 <= m and m0 <= m, got m = {m}, m0 = {m0}"
        )));
    }
    let alpha = resolved.alpha;
    let lambda = resolved.lambda;
    let k = resolved.k.unwrap_or(m);

    let mut reports: Vec<BoundReport> = vec![
        fdr_bi_linear(m0, m, alpha),
        fdr_bound_dependence_linear(m0, m, alpha),
        fdr_bound_tempered_aorc_bi(m, alpha, lambda),
    ];

    // family-specific rows (linear if the procedure has no generator)
    let family_spec = resolved.generator_spec(m).or_else(|_| {
        fdr_control::GeneratorSpec::new(fdr_control::GeneratorFamily::Linear, alpha, lambda, m)
            .map_err(CliError::from)
    })?;
    let ck_det =
        procedure_correction_sup(&family_spec, k, m, 1.0, 1.0, CorrectionMode::Deterministic)?;
    reports.push(fdr_bound_truncated_bi(
        m0,
        m,
        EstimateMode::Deterministic,
        ck_det,
        alpha,
    ));
    let dep_det = fdr_bound_truncated_dependence_det(m0, m, &family_spec, k)?;
    reports.push(dep_det.report.clone());
    reports.push(BoundReport {
        source: "dependence-truncated-det-sharper",
        value: dep_det.sharper_value,
        applicable: dep_det.report.applicable,
        margin: dep_det.report.margin,
        condition: format!(
            "representing-mass form; literal harmonic condition value {}",
            dep_det.literal_condition
        ),
    });
    let ck_ad = procedure_correction_sup(
        &family_spec,
        k,
        m,
        resolved.c,
        resolved.delta,
        CorrectionMode::Adaptive,
    )?;
    reports.push(fdr_bound_truncated_bi(
        m0,
        m,
        EstimateMode::Adaptive {
            c: resolved.c,
            restricted: true,
        },
        ck_ad,
        alpha,
    ));
    reports.push(fdr_bound_truncated_dependence_adaptive(
        m0,
        m,
        &family_spec,
        k,
        resolved.c,
        resolved.delta,
    )?);
    reports.push(fdr_bound_sparsity(
        m0,
        m,
        k,
        alpha,
        SparsityRegime::Independent,
    ));
    reports.push(fdr_bound_sparsity(
        m0,
        m,
        k,
        alpha,
        SparsityRegime::Arbitrary,
    ));
    if lambda < 1.0 {
        reports.push(extreme_dependence_fdr(
            m0,
            m,
            alpha,
            lambda,
            ExtremeVariant::Storey,
        ));
        reports.push(extreme_dependence_fdr(
            m0,
            m,
            alpha,
            lambda,
            ExtremeVariant::Clamped { c: resolved.c },
        ));
    }

    let mut csv = String::from("source,value,applicable,margin,condition\n");
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{},\"{}\"",
            r.source,
            r.value,
            r.applicable,
            r.margin,
            r.condition.replace('"', "'")
        );
    }
    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("bounds.csv"), &csv)?;

    let inapplicable: Vec<&str> = reports
        .iter()
        .filter(|r| !r.applicable)
        .map(|r| r.source)
        .collect();
    if !inapplicable.is_empty() {
        eprintln!("not applicable: {}", inapplicable.join(", "));
        if args.strict {
            return Err(CliError::NotApplicable(format!(
                "{} bound(s) not applicable under --strict",
                inapplicable.len()
            )));
        }
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let resolved = resolve(&args.procedure)?;
    emit_warnings(&resolved);
    let model = match args.scenario.as_str() {
        "bi" => ScenarioModel::Independent {
            effect: args.effect,
        },
        "extreme" => ScenarioModel::ExtremeDependence,
        "equicorrelated" => ScenarioModel::Equicorrelated {
            rho: args.rho,
            effect: args.effect,
        },
        other => {
            return Err(CliError::Validation(format!(
                "unknown scenario `{other}` (expected bi, extreme or equicorrelated)"
            )))
        }
    };
    let scenario = Scenario {
        model,
        m: args.m,
        m0: args.m0,
        replications: args.reps,
        seed: args.seed,
    };
    let mode = args.procedure.mode.clone();
    let summary = run_mc(&scenario, |p| {
        let schedule = resolved.schedule(p).map_err(|e| match e {
            CliError::Validation(msg) => fdr_control::Error::Config(msg),
            CliError::NotApplicable(msg) | CliError::Internal(msg) => {
                fdr_control::Error::Internal(msg)
            }
        })?;
        if mode == "sd" {
            step_down(p, &schedule)
        } else {
            step_up(p, &schedule)
        }
    })?;

    let regime = if args.scenario == "bi" {
        "independence"
    } else {
        "dependence"
    };
    let bound = guarantee_for(&resolved, regime, args.m0, args.m)?
        .expect("every procedure maps to a guarantee row");
    let verdict = if summary.fdr_hat <= bound.value + 3.0 * summary.fdr_se {
        "PASS"
    } else {
        "FAIL"
    };

    let mut csv = String::from(
        "scenario,procedure,replications,seed,fdr_hat,fdr_se,fwer_hat,power_hat,mean_r,bound_source,bound,bound_applicable,verdict\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        args.scenario,
        args.procedure.procedure,
        summary.replications,
        args.seed,
        summary.fdr_hat,
        summary.fdr_se,
        summary.fwer_hat,
        summary.power_hat,
        summary.mean_r,
        bound.source,
        bound.value,
        bound.applicable,
        verdict
    );
    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("simulation.csv"), &csv)?;
    println!(
        "fdr_hat = {} (se {}), fwer_hat = {}, power = {}, mean R = {} | bound {} = {} -> {}",
        summary.fdr_hat,
        summary.fdr_se,
        summary.fwer_hat,
        summary.power_hat,
        summary.mean_r,
        bound.source,
        bound.value,
        verdict
    );
    if verdict == "FAIL" && args.strict {
        return Err(CliError::NotApplicable(
            "simulated FDR exceeded the bound under --strict".into(),
        ));
    }
    Ok(())
}

pub fn procedure_args_sanity(args: &ProcedureArgs) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Validation(format!(
            "--alpha = {} must lie in (0, 1)",
            args.alpha
        )));
    }
    Ok(())
}
