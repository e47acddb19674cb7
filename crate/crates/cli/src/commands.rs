//! The `synthesize`, `fuse`, `localize`, `sweep-gamma` and `plot` commands.
//!
//! Each command writes its tables into an output directory and returns the
//! summary lines to print. Plots are always rendered from the tables as
//! re-read from disk, so `plot` on a results directory reproduces them.

use std::fs;
use std::path::{Path, PathBuf};

use beamloc::beam::{assemble, solve_modes};
use beamloc::evidence::{fuse_measurements, FusionReport};
use beamloc::modal_data::{make_damaged_params, synthesize_scenario};
use beamloc::objective::{Objective, ObjectiveWeights, PenaltyForm};
use beamloc::optimize::{RunTrace, Termination};
use beamloc::strategies::{
    hierarchical_localize, hybrid_localize, plain_localize, select_candidates, Localization, Status,
};
use beamloc::{BeamConfig, DamageParams, MeasuredModes};
use log::info;

use crate::error::CliError;
use crate::plot::{bar_chart, convergence_chart, BarChart, Guide};
use crate::scenario::{ScenarioFile, Strategy};
use crate::tables::*;

/// Summary lines of one command run. A strategy that ran to completion
/// without converging still reports its lines, together with the failure.
#[derive(Debug)]
pub struct Report {
    pub lines: Vec<String>,
    pub failure: Option<CliError>,
}

impl Report {
    fn ok(lines: Vec<String>) -> Self {
        Report {
            lines,
            failure: None,
        }
    }
}

/// Concentration below which a feature is considered spread out.
pub const LOW_CONCENTRATION: f64 = 0.3;

fn ensure_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))
}

fn join(elements: &[usize]) -> String {
    elements
        .iter()
        .map(|e| (e + 1).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn termination_name(t: Termination) -> String {
    serde_json::to_value(t)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| format!("{t:?}"))
}

/// Healthy and damaged measurements, read from `measured` when given and
/// synthesized from the scenario otherwise.
fn measurements(
    file: &ScenarioFile,
    measured: Option<&Path>,
) -> Result<(MeasuredModes, MeasuredModes), CliError> {
    match measured {
        Some(dir) => {
            let (h, d) = read_measured_dir(dir)?;
            h.check_compatible(&d)?;
            if h.n_points() != file.beam.elements + 1 {
                return Err(CliError::Input(format!(
                    "{}: {} grid nodes do not match {} elements",
                    dir.display(),
                    h.n_points(),
                    file.beam.elements
                )));
            }
            Ok((h, d))
        }
        None => {
            let data =
                synthesize_scenario(&file.beam_config(), &file.damage_scenario()?, file.modes)?;
            Ok((data.healthy, data.damaged))
        }
    }
}

pub fn synthesize(file: &ScenarioFile, out: &Path) -> Result<Report, CliError> {
    ensure_dir(out)?;
    let beam = file.beam_config();
    let data = synthesize_scenario(&beam, &file.damage_scenario()?, file.modes)?;
    write_measured(&out.join("measured_healthy.csv"), &data.healthy)?;
    write_measured(&out.join("measured_damaged.csv"), &data.damaged)?;
    write_frequencies(&out.join("frequencies.csv"), &data.healthy, &data.damaged)?;
    let shifts: Vec<String> = data
        .healthy
        .frequencies
        .iter()
        .zip(data.damaged.frequencies.iter())
        .map(|(h, d)| format!("{:.3}%", 100.0 * (h - d) / h))
        .collect();
    Ok(Report::ok(vec![
        format!(
            "synthesized {} modes on {} nodes (noise {}, seed {})",
            file.modes,
            data.healthy.n_points(),
            file.scenario.noise,
            file.scenario.seed
        ),
        format!("frequency drops: {}", shifts.join(" ")),
    ]))
}

fn write_fusion(
    file: &ScenarioFile,
    out: &Path,
    report: &FusionReport,
) -> Result<(Vec<usize>, Vec<String>), CliError> {
    let n = report.fused.singletons.len();
    let mut header = vec!["element".to_string()];
    header.extend(report.features.iter().map(|f| f.kind.name().to_string()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(
        &out.join("features.csv"),
        &header,
        (0..n).map(|i| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(report.features.iter().map(|f| fmt(f.values[i])));
            row
        }),
    )?;
    write_table(
        &out.join("bpas.csv"),
        &["feature", "element", "mass", "alpha", "beta"],
        report.bpas.iter().flat_map(|b| {
            (0..n).map(move |i| {
                vec![
                    b.kind.name().to_string(),
                    (i + 1).to_string(),
                    fmt(b.bpa.singletons[i]),
                    fmt(b.alpha[i]),
                    fmt(b.beta[i]),
                ]
            })
        }),
    )?;
    write_table(
        &out.join("feature_summary.csv"),
        &[
            "feature",
            "lambda",
            "concentration",
            "theta_mass",
            "argmax_element",
        ],
        report.bpas.iter().zip(&report.features).map(|(b, f)| {
            vec![
                b.kind.name().to_string(),
                fmt(b.lambda_f),
                fmt(b.concentration),
                fmt(b.bpa.theta),
                (f.argmax() + 1).to_string(),
            ]
        }),
    )?;
    let fused = &report.fused;
    write_table(
        &out.join("fused.csv"),
        &["element", "mass", "belief", "plausibility"],
        (0..n).map(|i| {
            vec![
                (i + 1).to_string(),
                fmt(fused.singletons[i]),
                fmt(fused.belief[i]),
                fmt(fused.plausibility[i]),
            ]
        }),
    )?;

    let hybrid = file.hybrid_config();
    let candidates = select_candidates(fused, &hybrid)?;
    let low = report
        .bpas
        .iter()
        .all(|b| b.concentration < LOW_CONCENTRATION);
    write_summary(
        &out.join("fusion_summary.csv"),
        &[
            ("name", file.name.clone()),
            ("theta_mass", fmt(fused.theta_mass)),
            ("conflict", fmt(fused.conflict)),
            ("argmax_element", (fused.argmax() + 1).to_string()),
            ("max_belief", fmt(fused.max_belief())),
            ("tau", fmt(hybrid.tau_fraction)),
            ("candidates", join(&candidates)),
            ("low_concentration", low.to_string()),
        ],
    )?;

    let mut lines = vec![format!(
        "argmax element {} (belief {:.4}, m(Theta) {:.4}, K {:.4})",
        fused.argmax() + 1,
        fused.max_belief(),
        fused.theta_mass,
        fused.conflict
    )];
    lines.push(format!(
        "candidates (tau {}): {}",
        hybrid.tau_fraction,
        join(&candidates)
    ));
    if fused.max_belief() < fused.theta_mass {
        lines.push("no element belief exceeds m(Theta)".into());
    }
    let conc: Vec<String> = report
        .bpas
        .iter()
        .map(|b| format!("{} {:.3}", b.kind.name(), b.concentration))
        .collect();
    lines.push(format!("concentration: {}", conc.join(", ")));
    if low {
        lines.push(format!(
            "low concentration: every feature below {LOW_CONCENTRATION}, no single index dominates"
        ));
    }
    Ok((candidates, lines))
}

pub fn fuse(file: &ScenarioFile, out: &Path, measured: Option<&Path>) -> Result<Report, CliError> {
    ensure_dir(out)?;
    let beam = file.beam_config();
    let (healthy, damaged) = measurements(file, measured)?;
    let model = solve_modes(
        assemble(&beam, &DamageParams::uniform(&beam))?,
        beam.n_free_dofs(),
    )?;
    let report = fuse_measurements(&healthy, &damaged, &model, &file.fusion_config())?;
    let (_, lines) = write_fusion(file, out, &report)?;
    replot(out)?;
    Ok(Report::ok(lines))
}

fn write_trace(out: &Path, beam: &BeamConfig, trace: &RunTrace) -> Result<(), CliError> {
    let e_gpa = beam.healthy_youngs_modulus * 1e-9;
    let names: Vec<String> = (1..=beam.n_elements).map(|k| format!("e{k}_gpa")).collect();
    let mut header = vec!["iteration", "stage"];
    header.extend(names.iter().map(String::as_str));
    write_table(
        &out.join("theta_trace.csv"),
        &header,
        trace.records.iter().map(|r| {
            let mut row = vec![r.iteration.to_string(), r.stage.to_string()];
            row.extend(r.x.iter().map(|x| fmt(x * e_gpa)));
            row
        }),
    )?;
    write_table(
        &out.join("objective_trace.csv"),
        &[
            "iteration",
            "stage",
            "objective",
            "grad_norm",
            "step_norm",
            "evaluations",
        ],
        trace.records.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                r.stage.to_string(),
                fmt(r.value),
                fmt(r.grad_norm),
                fmt(r.step_norm),
                r.evaluations.to_string(),
            ]
        }),
    )
}

fn write_profile(
    out: &Path,
    beam: &BeamConfig,
    profile: &DamageParams,
    truth: &DamageParams,
) -> Result<(), CliError> {
    let healthy = beam.healthy_youngs_modulus;
    let le = beam.element_length();
    write_table(
        &out.join("profile.csv"),
        &[
            "element",
            "x_mid_mm",
            "youngs_gpa",
            "healthy_gpa",
            "true_gpa",
            "relative",
        ],
        profile
            .as_slice()
            .iter()
            .zip(truth.as_slice())
            .enumerate()
            .map(|(k, (e, t))| {
                vec![
                    (k + 1).to_string(),
                    fmt((k as f64 + 0.5) * le * 1e3),
                    fmt(e * 1e-9),
                    fmt(healthy * 1e-9),
                    fmt(t * 1e-9),
                    fmt(e / healthy),
                ]
            }),
    )
}

/// Elements whose estimate sits more than 2% below healthy.
fn reduced_elements(profile: &DamageParams, healthy: f64) -> Vec<(usize, f64)> {
    profile
        .relative_to(healthy)
        .into_iter()
        .enumerate()
        .filter(|(_, r)| *r < 0.98)
        .collect()
}

pub fn localize(
    file: &ScenarioFile,
    out: &Path,
    strategy: Strategy,
    measured: Option<&Path>,
) -> Result<Report, CliError> {
    ensure_dir(out)?;
    let beam = file.beam_config();
    let (healthy, damaged) = measurements(file, measured)?;
    let truth = make_damaged_params(&beam, &file.damage_scenario()?)?;
    let weights = file.objective_weights();
    let opt = file.optimizer_config();
    let mut lines = Vec::new();
    let mut extra = Vec::new();
    let loc: Localization = match strategy {
        Strategy::Plain => plain_localize(&beam, &damaged, weights, &opt)?,
        Strategy::Hierarchical => {
            let o = hierarchical_localize(&beam, &damaged, weights, &opt, &file.hierarchical)?;
            extra.push(("final_gradient", fmt(o.final_gradient)));
            lines.push(format!(
                "stages run: {}, full gradient at the end {:.3e}",
                o.localization.trace.stages.len() + 1,
                o.final_gradient
            ));
            o.localization
        }
        Strategy::Hybrid => {
            let o = hybrid_localize(
                &beam,
                &healthy,
                &damaged,
                &file.hybrid_config(),
                weights,
                &opt,
            )?;
            let (_, fusion_lines) = write_fusion(file, out, &o.evidence)?;
            lines.extend(fusion_lines);
            extra.push(("candidates", join(&o.candidates)));
            o.localization
        }
    };

    write_trace(out, &beam, &loc.trace)?;
    write_profile(out, &beam, &loc.profile, &truth)?;
    let status = match loc.status {
        Status::Converged => "converged",
        Status::Failed => "failed",
    };
    let termination = termination_name(loc.trace.termination);
    let mut summary = vec![
        ("name", file.name.clone()),
        ("strategy", strategy.name().to_string()),
        ("status", status.to_string()),
        ("termination", termination.clone()),
        ("iterations", loc.trace.iterations().to_string()),
        ("evaluations", loc.trace.evaluations().to_string()),
        ("final_objective", fmt(loc.trace.final_value())),
    ];
    summary.extend(extra);
    write_summary(&out.join("localize_summary.csv"), &summary)?;
    replot(out)?;

    lines.push(format!(
        "{}: {status} ({termination}) after {} iterations, J = {:.4e}",
        strategy.name(),
        loc.trace.iterations(),
        loc.trace.final_value()
    ));
    let reduced: Vec<String> = reduced_elements(&loc.profile, beam.healthy_youngs_modulus)
        .iter()
        .map(|(k, r)| format!("{} ({:.4})", k + 1, r))
        .collect();
    lines.push(format!(
        "elements below 98% of healthy: {}",
        if reduced.is_empty() {
            "none".to_string()
        } else {
            reduced.join(", ")
        }
    ));
    info!(
        "{}: {} records written to {}",
        file.name,
        loc.trace.records.len(),
        out.display()
    );
    let failure = (loc.status == Status::Failed).then(|| {
        CliError::Strategy(format!(
            "{} ended with {termination}{}",
            strategy.name(),
            loc.trace
                .message
                .as_deref()
                .map(|m| format!(": {m}"))
                .unwrap_or_default()
        ))
    });
    Ok(Report { lines, failure })
}

/// Runs the chosen strategy for each `γ` and records the data misfit and
/// the penalty norm at the result, for a manual L-curve.
pub fn sweep_gamma(
    file: &ScenarioFile,
    out: &Path,
    strategy: Strategy,
    gammas: &[f64],
) -> Result<Report, CliError> {
    ensure_dir(out)?;
    let beam = file.beam_config();
    let (healthy, damaged) = measurements(file, None)?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &gamma in gammas {
        let weights = ObjectiveWeights {
            gamma,
            ..file.objective_weights()
        };
        weights.validate()?;
        let opt = file.optimizer_config();
        let loc = match strategy {
            Strategy::Plain => plain_localize(&beam, &damaged, weights, &opt)?,
            Strategy::Hierarchical => {
                hierarchical_localize(&beam, &damaged, weights, &opt, &file.hierarchical)?
                    .localization
            }
            Strategy::Hybrid => {
                hybrid_localize(
                    &beam,
                    &healthy,
                    &damaged,
                    &file.hybrid_config(),
                    weights,
                    &opt,
                )?
                .localization
            }
        };
        let e = loc.profile.relative_to(beam.healthy_youngs_modulus);
        let misfit_weights = ObjectiveWeights {
            gamma: 0.0,
            ..weights
        };
        let misfit = Objective::new(&beam, &damaged, misfit_weights)?
            .evaluate(&e)?
            .value;
        let penalty: f64 = e
            .iter()
            .map(|v| match weights.penalty {
                PenaltyForm::Deviation => (v - 1.0) * (v - 1.0),
                PenaltyForm::Absolute => v * v,
            })
            .sum();
        lines.push(format!(
            "gamma {gamma:e}: misfit {misfit:.4e}, penalty {penalty:.4e}"
        ));
        rows.push(vec![
            fmt(gamma),
            fmt(misfit),
            fmt(penalty),
            loc.trace.iterations().to_string(),
            termination_name(loc.trace.termination),
        ]);
    }
    write_table(
        &out.join("gamma_sweep.csv"),
        &["gamma", "misfit", "penalty", "iterations", "termination"],
        rows,
    )?;
    Ok(Report::ok(lines))
}

pub fn beliefs_svg(rows: &[FusedRow], summary: &[SummaryRow]) -> Result<String, CliError> {
    let theta = parse_f64(summary_value(summary, "theta_mass")?)?;
    let tau = parse_f64(summary_value(summary, "tau")?)?;
    let max = parse_f64(summary_value(summary, "max_belief")?)?;
    Ok(bar_chart(&BarChart {
        title: format!(
            "Fused belief per element: {}",
            summary_value(summary, "name")?
        ),
        y_label: "belief".into(),
        values: rows.iter().map(|r| r.belief).collect(),
        guides: vec![
            Guide {
                value: theta,
                label: "m(Theta)".into(),
                color: "#555555",
            },
            Guide {
                value: tau * max,
                label: format!("tau = {tau}"),
                color: "#c0392b",
            },
        ],
        markers: None,
    }))
}

pub fn convergence_svg(rows: &[TraceRow], summary: &[SummaryRow]) -> Result<String, CliError> {
    let starts: Vec<f64> = rows
        .windows(2)
        .filter(|w| w[1].stage != w[0].stage)
        .map(|w| w[1].iteration as f64)
        .collect();
    Ok(convergence_chart(
        &format!(
            "Objective convergence: {} ({})",
            summary_value(summary, "name")?,
            summary_value(summary, "strategy")?
        ),
        &rows.iter().map(|r| r.iteration as f64).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.objective).collect::<Vec<_>>(),
        &starts,
    ))
}

pub fn profile_svg(rows: &[ProfileRow], summary: &[SummaryRow]) -> Result<String, CliError> {
    let healthy = rows.first().map_or(0.0, |r| r.healthy_gpa);
    Ok(bar_chart(&BarChart {
        title: format!(
            "Young's modulus per element: {}",
            summary_value(summary, "name")?
        ),
        y_label: "E [GPa]".into(),
        values: rows.iter().map(|r| r.youngs_gpa).collect(),
        guides: vec![Guide {
            value: healthy,
            label: "healthy".into(),
            color: "#555555",
        }],
        markers: Some(("true".into(), rows.iter().map(|r| r.true_gpa).collect())),
    }))
}

/// Renders every plot whose tables exist in `dir`; returns the files written.
pub fn replot(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let mut emit = |name: &str, svg: String| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, svg).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(())
    };
    if dir.join("fused.csv").exists() {
        let rows: Vec<FusedRow> = read_table(&dir.join("fused.csv"))?;
        let summary: Vec<SummaryRow> = read_table(&dir.join("fusion_summary.csv"))?;
        emit("beliefs.svg", beliefs_svg(&rows, &summary)?)?;
    }
    if dir.join("objective_trace.csv").exists() {
        let summary: Vec<SummaryRow> = read_table(&dir.join("localize_summary.csv"))?;
        let rows: Vec<TraceRow> = read_table(&dir.join("objective_trace.csv"))?;
        emit("convergence.svg", convergence_svg(&rows, &summary)?)?;
        let rows: Vec<ProfileRow> = read_table(&dir.join("profile.csv"))?;
        emit("profile.svg", profile_svg(&rows, &summary)?)?;
    }
    if written.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no result tables to plot",
            dir.display()
        )));
    }
    Ok(written)
}
