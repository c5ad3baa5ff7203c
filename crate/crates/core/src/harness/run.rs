use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::config::{ExperimentConfig, ReferenceSource};
use super::diagnostics::diagnose;
use super::{EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use crate::error::{Result, UqError};
use crate::fem::FemModel;
use crate::oracle::{load_reference, monte_carlo, reference_statistics, McConfig, ReferenceStats};
use crate::perturbation::{run_collocation, run_hybrid, EstimatorReport, HybridOptions, Method};

pub const CSV_HEADER: &str =
    "method,N_s,N_f,w,knots,pde_solves,mean,variance,corr_mean,corr_var,err_mean,err_var,wall_ms";

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub report: EstimatorReport,
    pub err_mean: Option<f64>,
    pub err_var: Option<f64>,
}

impl ResultRow {
    fn csv_line(&self, wall_time: bool) -> String {
        let r = &self.report;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.n_large,
            r.n_small,
            r.level.map_or(String::new(), |w| w.to_string()),
            r.knots,
            r.pde_solves,
            r.mean,
            r.variance,
            r.correction_mean,
            r.correction_var,
            opt(self.err_mean),
            opt(self.err_var),
            opt(wall_time.then_some(r.wall_ms)),
        )
    }
}

/// Everything a run produced, normalized as configured.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    /// Nominal QoI `Q_h(y = 0)`.
    pub nominal_qoi: f64,
    pub reference: Option<ReferenceStats>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn csv(&self, wall_time: bool) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for row in &self.rows {
            s += &row.csv_line(wall_time);
            s.push('\n');
        }
        s
    }

    fn summary(&self, cfg: &ExperimentConfig, status: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status: {status}");
        let _ = writeln!(s, "nominal QoI Q_h(y=0): {:?}", self.nominal_qoi);
        let _ = writeln!(
            s,
            "normalization: {}",
            if cfg.normalize {
                format!(
                    "divided by {:?} (variances by its square)",
                    self.nominal_qoi
                )
            } else {
                "none".to_string()
            }
        );
        match &self.reference {
            Some(r) => {
                let _ = writeln!(
                    s,
                    "reference ({}): mean {:?} variance {:?}",
                    cfg.reference, r.mean, r.variance
                );
            }
            None => {
                let _ = writeln!(s, "reference: none");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s, "rows: {}", self.rows.len());
        for row in &self.rows {
            let r = &row.report;
            let _ = writeln!(
                s,
                "  {:<12} N_s={:<2} w={:<2} knots={:<6} solves={:<6} mean={:.8} var={:.6e}",
                r.method.to_string(),
                r.n_large,
                r.level.map_or("-".to_string(), |w| w.to_string()),
                r.knots,
                r.pde_solves,
                r.mean,
                r.variance
            );
        }
        let _ = writeln!(s, "\nconfig:\n{}", cfg.to_text());
        s
    }
}

/// Exit status for an error.
pub fn exit_code(err: &UqError) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn flush(cfg: &ExperimentConfig, outcome: &RunOutcome, status: &str) -> Result<()> {
    fs::write(
        cfg.output.join("results.csv"),
        outcome.csv(cfg.record_wall_time),
    )?;
    fs::write(cfg.output.join("summary.txt"), outcome.summary(cfg, status))?;
    Ok(())
}

fn build_model(cfg: &ExperimentConfig, n_large: usize) -> Result<FemModel> {
    FemModel::experiment(cfg.mesh_m, cfg.spec_for(n_large)?)
}

fn reference(cfg: &ExperimentConfig, model: &FemModel) -> Result<Option<ReferenceStats>> {
    Ok(match &cfg.reference {
        ReferenceSource::None => None,
        ReferenceSource::CacheFile(path) => {
            Some(load_reference(path, model).map_err(|e| match e {
                UqError::Io(io) => UqError::Config(format!("{}: {io}", path.display())),
                other => other,
            })?)
        }
        ReferenceSource::Collocation { w_ref } => Some(reference_statistics(
            model,
            *w_ref,
            cfg.reference_cache.as_deref(),
        )?),
        ReferenceSource::MonteCarlo { samples, seed } => {
            let mc = monte_carlo(
                model,
                &McConfig {
                    samples: *samples,
                    seed: *seed,
                },
            )?;
            Some(ReferenceStats {
                mean: mc.mean,
                variance: mc.variance,
            })
        }
    })
}

fn monte_carlo_report(cfg: &ExperimentConfig, model: &FemModel) -> Result<EstimatorReport> {
    let start = Instant::now();
    let mc = monte_carlo(
        model,
        &McConfig {
            samples: cfg.mc_samples,
            seed: cfg.mc_seed,
        },
    )?;
    let spec = model.spec();
    Ok(EstimatorReport {
        method: Method::MonteCarlo,
        n_large: spec.total_dims(),
        n_small: 0,
        level: None,
        knots: mc.samples,
        pde_solves: mc.samples,
        mean: mc.mean,
        variance: mc.variance,
        correction_mean: 0.0,
        correction_var: 0.0,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        mesh_m: model.mesh().m,
        amplitude: spec.amplitude,
        decay: spec.decay,
    })
}

fn sweep(cfg: &ExperimentConfig, outcome: &mut RunOutcome) -> Result<()> {
    let full = build_model(cfg, cfg.total_dims)?;
    outcome.nominal_qoi = full.nominal_qoi()?;
    let q0 = outcome.nominal_qoi;
    let scale = |r: EstimatorReport| if cfg.normalize { r.normalized(q0) } else { r };
    outcome.reference = reference(cfg, &full)?.map(|r| {
        if cfg.normalize {
            ReferenceStats {
                mean: r.mean / q0,
                variance: r.variance / (q0 * q0),
            }
        } else {
            r
        }
    });
    let reference = outcome.reference;
    let push = |outcome: &mut RunOutcome, report: EstimatorReport| -> Result<()> {
        outcome.rows.push(ResultRow {
            err_mean: reference.map(|r| (report.mean - r.mean).abs()),
            err_var: reference.map(|r| (report.variance - r.variance).abs()),
            report,
        });
        flush(cfg, outcome, "running")
    };

    for &n_large in &cfg.n_large {
        let model = build_model(cfg, n_large)?;
        for method in &cfg.methods {
            match method {
                Method::Collocation => {
                    for &w in &cfg.levels {
                        push(outcome, scale(run_collocation(&model, w, n_large)?))?;
                    }
                }
                Method::Hybrid => {
                    for &w in &cfg.levels {
                        let opts =
                            HybridOptions::new(w).with_correction_level(cfg.correction_level(w));
                        push(outcome, scale(run_hybrid(&model, opts)?))?;
                    }
                }
                Method::MonteCarlo => {}
            }
        }
    }
    if cfg.methods.contains(&Method::MonteCarlo) {
        push(outcome, scale(monte_carlo_report(cfg, &full)?))?;
    }
    Ok(())
}

/// Runs the sweep of `cfg`. Output files are rewritten after every row, so a
/// failing run leaves the completed rows behind.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.check()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.thread_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| UqError::Config(format!("thread pool: {e}")))?;
    fs::create_dir_all(&cfg.output)
        .map_err(|e| UqError::Config(format!("cannot create {}: {e}", cfg.output.display())))?;

    let mut outcome = RunOutcome {
        rows: Vec::new(),
        nominal_qoi: f64::NAN,
        reference: None,
        warnings: diagnose(cfg)?.warnings,
    };
    match pool.install(|| sweep(cfg, &mut outcome)) {
        Ok(()) => {
            flush(cfg, &outcome, "complete")?;
            Ok(outcome)
        }
        Err(e) => {
            flush(cfg, &outcome, &format!("failed: {e}"))?;
            Err(e)
        }
    }
}

/// Loads `path`, runs it and maps the outcome to an exit status, reporting
/// errors on stderr.
pub fn run_file(path: &Path) -> i32 {
    let cfg = match ExperimentConfig::from_file(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} rows written to {}",
                outcome.rows.len(),
                cfg.output.join("results.csv").display()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
