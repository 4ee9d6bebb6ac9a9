use serde::Serialize;
use spikesel::evalmetrics::{binned_correlation, resample_subset_test, victor_purpura, ResampleReport};
use spikesel::inference::{estimate_sigma, InferenceReport, SigmaSource, SpikeRecord};
use spikesel::l0solver::{calibrate_lambda, fit_with_intercept, Calibration};
use spikesel::sim::{ci_experiment, power_experiment, type1_experiment, ExperimentConfig, Row};
use spikesel::{fit, infer, SimConfig, SpikeFit, SpikeTrain, Trace};

use crate::args::{CalibrateArgs, EvaluateArgs, Experiment, FitArgs, Format, InferArgs, SimArgs};
use crate::input::{parse_grid, parse_sigmas, read_spikes, read_trace};
use crate::output::{write_csv, write_json, Provenance};
use crate::CliError;

fn load(path: &std::path::Path, gamma: f64) -> Result<Trace, CliError> {
    Ok(Trace::new(read_trace(path)?, gamma)?)
}

#[derive(Debug, Serialize)]
struct CalibrationInfo {
    target: usize,
    count: usize,
    warning: bool,
}

fn run_fit(args: &FitArgs, trace: &Trace) -> Result<(SpikeFit, Option<CalibrationInfo>), CliError> {
    if let Some(l) = args.lambda {
        return Ok((fit(trace, l)?, None));
    }
    if let Some(target) = args.target_spikes {
        let Calibration { lambda, count, warning } = calibrate_lambda(trace, target)?;
        if warning {
            log::warn!("calibrated fit has {count} spikes, target was {target}");
        }
        return Ok((fit(trace, lambda)?, Some(CalibrationInfo { target, count, warning })));
    }
    let lambdas = parse_grid(args.lambda_grid.as_deref().expect("clap requires a penalty"))?;
    let betas = match &args.beta0_grid {
        Some(g) => parse_grid(g)?,
        None => vec![0.0],
    };
    // without a target every cell is admissible
    let (target, slack) = match args.grid_target {
        Some(t) => (t, args.count_slack),
        None => (0, usize::MAX),
    };
    Ok((fit_with_intercept(trace, &lambdas, &betas, target, slack)?, None))
}

#[derive(Debug, Serialize)]
struct FitOutput<'a> {
    gamma: f64,
    lambda: f64,
    beta0: Option<f64>,
    objective: f64,
    spikes: &'a [usize],
    calcium: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<CalibrationInfo>,
}

#[derive(Debug, Serialize)]
struct FitRow {
    t: usize,
    y: f64,
    calcium: f64,
    spike: u8,
}

pub fn cmd_fit(args: &FitArgs, prov: &Provenance) -> Result<(), CliError> {
    let trace = load(&args.input, args.decay.gamma())?;
    let (f, calibration) = run_fit(args, &trace)?;
    let out = args.output.as_deref();
    match args.format {
        Format::Json => write_json(
            out,
            prov,
            &FitOutput {
                gamma: trace.gamma(),
                lambda: f.lambda,
                beta0: f.beta0,
                objective: f.objective,
                spikes: &f.spikes,
                calcium: &f.calcium,
                calibration,
            },
        ),
        Format::Csv => {
            let b = f.beta0.unwrap_or(0.0);
            let rows: Vec<FitRow> = (1..=trace.len())
                .map(|t| FitRow {
                    t,
                    y: trace.y()[t - 1],
                    calcium: f.calcium[t - 1] + b,
                    spike: u8::from(f.spikes.binary_search(&t).is_ok()),
                })
                .collect();
            write_csv(out, prov, &rows)
        }
    }
}

#[derive(Debug, Serialize)]
struct InferRow {
    tau: usize,
    phi_obs: f64,
    p_selective: Option<f64>,
    p_naive: Option<f64>,
    ci_selective_lo: Option<f64>,
    ci_selective_hi: Option<f64>,
    ci_naive_lo: Option<f64>,
    ci_naive_hi: Option<f64>,
    /// `lo:hi` pairs separated by `;`, empty ends unbounded.
    s_set: Option<String>,
    error: Option<String>,
}

fn fmt_end(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl From<&SpikeRecord> for InferRow {
    fn from(r: &SpikeRecord) -> Self {
        InferRow {
            tau: r.tau,
            phi_obs: r.phi_obs,
            p_selective: r.p_selective,
            p_naive: r.p_naive,
            ci_selective_lo: r.ci_selective.map(|c| c[0]),
            ci_selective_hi: r.ci_selective.map(|c| c[1]),
            ci_naive_lo: r.ci_naive.map(|c| c[0]),
            ci_naive_hi: r.ci_naive.map(|c| c[1]),
            s_set: r.s_set.as_ref().map(|s| {
                s.iter()
                    .map(|[lo, hi]| format!("{}:{}", fmt_end(*lo), fmt_end(*hi)))
                    .collect::<Vec<_>>()
                    .join(";")
            }),
            error: r.error.clone(),
        }
    }
}

pub fn cmd_infer(args: &InferArgs, prov: &Provenance) -> Result<(), CliError> {
    let trace = load(&args.fit.input, args.fit.decay.gamma())?;
    let (f, _) = run_fit(&args.fit, &trace)?;
    let (sigma, sigma_source) = match args.sigma {
        Some(s) => (s, SigmaSource::Supplied),
        None => {
            let est = estimate_sigma(trace.y(), &f)?;
            if est.degenerate {
                return Err(CliError::input("the fit leaves no residual, so σ cannot be estimated; pass --sigma"));
            }
            (est.sigma, SigmaSource::Estimated)
        }
    };
    let outcomes = infer(&trace, &f, args.h, sigma, args.alpha)?;
    let spikes: Vec<SpikeRecord> = outcomes.iter().map(|o| SpikeRecord::from_outcome(o, args.emit_s_set)).collect();
    for o in &outcomes {
        if let Err(e) = &o.result {
            log::warn!("spike at {}: {e}", o.tau);
        }
    }
    let trace_id = args.trace_id.clone().unwrap_or_else(|| {
        args.fit.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    let report = InferenceReport {
        trace_id,
        gamma: trace.gamma(),
        lambda: f.lambda,
        sigma,
        sigma_source,
        h: args.h,
        alpha: args.alpha,
        spikes,
    };
    let out = args.fit.output.as_deref();
    match args.fit.format {
        Format::Json => write_json(out, prov, &report)?,
        Format::Csv => write_csv(out, prov, &report.spikes.iter().map(InferRow::from).collect::<Vec<_>>())?,
    }
    if !outcomes.is_empty() && outcomes.iter().all(|o| o.result.is_err()) {
        return Err(CliError::internal("inference failed for every tested spike"));
    }
    Ok(())
}

fn experiment_config(args: &SimArgs, null: bool) -> Result<ExperimentConfig, CliError> {
    let sigmas = match &args.sigma {
        Some(s) => parse_sigmas(s)?,
        None => vec![if null { 0.2 } else { 1.0 }],
    };
    if null && sigmas.len() != 1 {
        return Err(CliError::input("type1 takes a single --sigma"));
    }
    if args.h.is_empty() || args.h.contains(&0) {
        return Err(CliError::input("--h needs positive windows"));
    }
    let base = SimConfig {
        t: args.t,
        gamma: args.gamma,
        sigma: sigmas[0],
        spike_rate: if null { 0.0 } else { args.rate },
        seed: args.seed,
        c0: 0.0,
    };
    base.validate()?;
    let target_spikes = match args.target_spikes {
        Some(t) => t,
        None if null => 20,
        // expected number of true spikes
        None => ((args.rate * args.t as f64).round() as usize).max(1),
    };
    Ok(ExperimentConfig {
        base,
        reps: args.reps,
        hs: args.h.clone(),
        sigmas,
        target_spikes,
        alpha: args.alpha,
        n: args.n,
        fixed_lambda: args.lambda,
    })
}

pub fn cmd_simulate(exp: &Experiment, prov: &Provenance) -> Result<(), CliError> {
    let (rows, failed, out): (Vec<Row>, usize, _) = match exp {
        Experiment::Type1(a) => {
            let cfg = experiment_config(a, true)?;
            let r = type1_experiment(&cfg)?;
            if r.calibration_warnings > 0 {
                log::warn!("{} replicates missed the target spike count", r.calibration_warnings);
            }
            (r.rows(cfg.base.sigma), r.failed_spikes, a.output.as_deref())
        }
        Experiment::Power(a) => {
            let r = power_experiment(&experiment_config(a, false)?)?;
            (r.rows(), r.failed_spikes, a.output.as_deref())
        }
        Experiment::Ci(a) => {
            let r = ci_experiment(&experiment_config(a, false)?)?;
            (r.rows(), r.failed_spikes, a.output.as_deref())
        }
    };
    if failed > 0 {
        log::warn!("{failed} tested spikes failed and were left out");
    }
    write_csv(out, prov, &rows)
}

#[derive(Debug, Serialize)]
struct MetricRow {
    subset: &'static str,
    metric: &'static str,
    value: Option<f64>,
}

pub fn cmd_evaluate(args: &EvaluateArgs, prov: &Provenance) -> Result<(), CliError> {
    let est = read_spikes(&args.estimated)?;
    let truth = read_spikes(&args.truth)?;
    let all = SpikeTrain::from_unsorted(est.times.clone(), args.rate)?;
    let truth_train = SpikeTrain::from_unsorted(truth.times, args.rate)?;
    let n_samples = args.samples.unwrap_or_else(|| {
        all.times().iter().chain(truth_train.times()).max().map_or(0, |m| m + 1)
    });
    let (q, factor) = (args.q, args.bin_factor);
    let vp = |a: &SpikeTrain, b: &SpikeTrain| victor_purpura(a, b, q).expect("q validated");
    let corr = |a: &SpikeTrain, b: &SpikeTrain| {
        binned_correlation(a, b, n_samples, factor).expect("factor validated").unwrap_or(f64::NAN)
    };
    victor_purpura(&all, &truth_train, q)?;
    binned_correlation(&all, &truth_train, n_samples, factor)?;
    let finite = |v: f64| v.is_finite().then_some(v);

    let mut rows = vec![
        MetricRow { subset: "all", metric: "count", value: Some(all.len() as f64) },
        MetricRow { subset: "all", metric: "victor_purpura", value: Some(vp(&all, &truth_train)) },
        MetricRow { subset: "all", metric: "correlation", value: finite(corr(&all, &truth_train)) },
    ];
    if !args.all_only {
        let p = est
            .pvalues
            .ok_or_else(|| CliError::input("estimated spikes have no p-value column; pass --all-only to skip the subset"))?;
        let mut idx: Vec<usize> = Vec::new();
        for (t, pv) in est.times.iter().zip(&p) {
            if *pv <= args.alpha {
                idx.push(all.times().binary_search(t).expect("same times"));
            }
        }
        idx.sort_unstable();
        idx.dedup();
        let selected = all.subset(&idx);
        rows.push(MetricRow { subset: "selected", metric: "count", value: Some(selected.len() as f64) });
        for (name, metric) in [("victor_purpura", &vp as &(dyn Fn(&SpikeTrain, &SpikeTrain) -> f64 + Sync)), ("correlation", &corr)] {
            let ResampleReport { lower, upper, observed, .. } =
                resample_subset_test(&all, &selected, &truth_train, metric, args.reps, args.seed)?;
            rows.push(MetricRow { subset: "selected", metric: name, value: finite(observed) });
            let (lo_name, hi_name) = match name {
                "victor_purpura" => ("victor_purpura_q025", "victor_purpura_q975"),
                _ => ("correlation_q025", "correlation_q975"),
            };
            rows.push(MetricRow { subset: "resampled", metric: lo_name, value: finite(lower) });
            rows.push(MetricRow { subset: "resampled", metric: hi_name, value: finite(upper) });
        }
    }
    write_csv(args.output.as_deref(), prov, &rows)
}

#[derive(Debug, Serialize)]
struct CalibrateOutput {
    gamma: f64,
    target: usize,
    lambda: f64,
    count: usize,
    warning: bool,
}

pub fn cmd_calibrate(args: &CalibrateArgs, prov: &Provenance) -> Result<(), CliError> {
    let trace = load(&args.input, args.decay.gamma())?;
    let c = calibrate_lambda(&trace, args.target_spikes)?;
    write_json(
        args.output.as_deref(),
        prov,
        &CalibrateOutput {
            gamma: trace.gamma(),
            target: args.target_spikes,
            lambda: c.lambda,
            count: c.count,
            warning: c.warning,
        },
    )
}
