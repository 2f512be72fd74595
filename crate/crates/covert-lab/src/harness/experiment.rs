//! Experiment sweeps.
//!
//! `run_experiment` executes one configured sweep across its grid, collects
//! per-point summary rows, evaluates the experiment's built-in acceptance
//! checks, and prepares plot data. Rows are ordered by grid index and every
//! stochastic quantity derives from the master seed, so the result CSV is
//! byte-identical across reruns of the same (config, seed).

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::plot::{PlotSpec, Series};
use crate::detectors::{
    count_threshold_detect, estimate_error_sum, mean_ipd_detect, poisson_count_lrt, MeanIpdMode,
    TrialEstimate,
};
use crate::error::{Error, Result};
use crate::renewal::{
    count_arrivals, extend_stream, extract_ipds, merge_streams, sample_stream, IpdDistribution,
    PacketStream, Source, StopRule,
};
use crate::seed;
use crate::stats::{fisher_constant_analytic, fisher_constant_c, fisher_constant_quadrature, kl_scaled_renewal};
use crate::strategies::{
    buffer_count, one_phase_run, phase1_mean_delay, poisson_insertion, predicted_phase1_mean_delay,
    two_phase_trial, PoissonInsertionPlan, TwoPhasePlan, TwoPhaseTrial,
};

/// One built-in acceptance check of a sweep.
#[derive(Debug, Clone)]
pub struct AssertionOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Result of one sweep: CSV-ready rows plus metadata and plot data.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub kind: ExperimentKind,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub assertions: Vec<AssertionOutcome>,
    pub plot: PlotSpec,
    pub config_hash: String,
    pub seed: u64,
    pub wall: std::time::Duration,
}

impl SweepResult {
    /// Renders the result as CSV; deterministic for a fixed (config, seed).
    pub fn csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns.len());
            let escaped: Vec<String> = row.iter().map(|f| csv_escape(f)).collect();
            out.push_str(&escaped.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.csv_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn all_assertions_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        None
    } else {
        Some((n * sxy - sx * sy) / denom)
    }
}

/// Wilson score half-width at 95% for `successes` out of `n`.
fn wilson_half_width(successes: usize, n: usize) -> f64 {
    const Z: f64 = 1.959_963_984_540_054;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
}

fn pass(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> AssertionOutcome {
    AssertionOutcome {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Columns of the detector-estimate result schema.
const ESTIMATE_COLUMNS: [&str; 9] = [
    "detector", "regime", "param_json", "trials", "p_fa", "p_fa_ci", "p_md", "p_md_ci", "seed",
];

fn estimate_row(
    detector: &str,
    regime: String,
    param_json: String,
    est: &TrialEstimate,
) -> Vec<String> {
    vec![
        detector.to_string(),
        regime,
        param_json,
        est.trials.to_string(),
        fmt(est.p_fa),
        fmt(est.p_fa_ci),
        fmt(est.p_md),
        fmt(est.p_md_ci),
        est.master_seed.to_string(),
    ]
}

/// Executes the configured experiment across its grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let start = std::time::Instant::now();
    let (columns, rows, assertions, plot) = match cfg.kind {
        ExperimentKind::PoissonAchievability => poisson_achievability(cfg)?,
        ExperimentKind::PoissonConverse => poisson_converse(cfg)?,
        ExperimentKind::Buffering => buffering(cfg)?,
        ExperimentKind::TwoPhase => two_phase(cfg)?,
        ExperimentKind::OnePhase => one_phase(cfg)?,
        ExperimentKind::KlExpansion => kl_expansion(cfg)?,
        ExperimentKind::Fisher => fisher(cfg)?,
    };
    Ok(SweepResult {
        kind: cfg.kind,
        columns,
        rows,
        assertions,
        plot,
        config_hash: cfg.content_hash(),
        seed: cfg.seed,
        wall: start.elapsed(),
    })
}

type KindResult = (
    Vec<&'static str>,
    Vec<Vec<String>>,
    Vec<AssertionOutcome>,
    PlotSpec,
);

fn poisson_achievability(cfg: &ExperimentConfig) -> Result<KindResult> {
    let lambda = cfg.poisson_rate()?;
    let eps = cfg.epsilon()?;
    let dist = cfg.channel;
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut points = Vec::new();
    let mut band = Vec::new();
    for (g, &t) in cfg.t_grid()?.iter().enumerate() {
        let plan = PoissonInsertionPlan::new(lambda, t, eps)?;
        let delta = plan.delta();
        let point_seed = seed::child(cfg.seed, g as u64);
        let est = estimate_error_sum(
            |s| {
                let jack = sample_stream(&dist, StopRule::Horizon(t), s)?;
                count_arrivals(&jack, t)
            },
            |s| {
                let jack = sample_stream(&dist, StopRule::Horizon(t), seed::child(s, 0))?;
                let observed = poisson_insertion(&jack, &plan, seed::child(s, 1))?;
                count_arrivals(&observed, t)
            },
            |&n| Ok(poisson_count_lrt(n, lambda, delta, t)?.decision),
            cfg.trials,
            point_seed,
        )?;
        let param_json = serde_json::json!({
            "lambda": lambda,
            "t": t,
            "epsilon": eps,
            "delta": delta,
        })
        .to_string();
        rows.push(estimate_row("lrt", format!("T={t}"), param_json, &est));
        let sum = est.error_sum();
        let ci = est.error_sum_ci();
        assertions.push(pass(
            format!("error sum >= 1-epsilon-ci at T={t}"),
            sum >= 1.0 - eps - ci,
            format!("sum {sum:.4}, bound {:.4}", 1.0 - eps - ci),
        ));
        points.push((t, sum));
        band.push((t, (sum - ci).max(0.0), (sum + ci).min(2.0)));
    }
    let plot = PlotSpec {
        title: "Poisson insertion vs count LRT".into(),
        x_label: "T (s)",
        y_label: "P_FA + P_MD",
        log_x: points.len() > 1,
        log_y: false,
        series: vec![Series {
            label: format!("epsilon={eps}"),
            points,
            band: Some(band),
        }],
        annotations: vec![format!("target >= {}", 1.0 - eps)],
    };
    Ok((ESTIMATE_COLUMNS.to_vec(), rows, assertions, plot))
}

fn poisson_converse(cfg: &ExperimentConfig) -> Result<KindResult> {
    let lambda = cfg.poisson_rate()?;
    let alpha = cfg.alpha();
    let dist = cfg.channel;
    let ts = cfg.t_grid()?;
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut series = Vec::new();
    for (gi, &gamma) in cfg.gamma_grid()?.iter().enumerate() {
        let mut points = Vec::new();
        let mut band = Vec::new();
        let mut sums = Vec::new();
        let mut misses = Vec::new();
        for (ti, &t) in ts.iter().enumerate() {
            let n_a = (lambda * t).powf(gamma);
            let insertion_rate = n_a / t;
            let insertion_law = IpdDistribution::exponential(insertion_rate)?;
            let point_seed = seed::child(cfg.seed, (gi * ts.len() + ti) as u64);
            let est = estimate_error_sum(
                |s| sample_stream(&dist, StopRule::Horizon(t), s),
                |s| {
                    let jack = sample_stream(&dist, StopRule::Horizon(t), seed::child(s, 0))?;
                    let alice = sample_stream(&insertion_law, StopRule::Horizon(t), seed::child(s, 1))?
                        .with_source(Source::Alice);
                    Ok(merge_streams(&jack, &alice))
                },
                |stream: &PacketStream| Ok(count_threshold_detect(stream, lambda, t, alpha)?.decision),
                cfg.trials,
                point_seed,
            )?;
            let param_json = serde_json::json!({
                "lambda": lambda,
                "t": t,
                "gamma": gamma,
                "n_a": n_a,
                "alpha": alpha,
            })
            .to_string();
            rows.push(estimate_row(
                "count-threshold",
                format!("T={t},gamma={gamma}"),
                param_json,
                &est,
            ));
            let sum = est.error_sum();
            let ci = est.error_sum_ci();
            points.push((t, sum));
            band.push((t, (sum - ci).max(0.0), (sum + ci).min(2.0)));
            sums.push(sum);
            misses.push((est.p_md, est.p_md_ci));
        }
        // The square-root law phase transition: detectable above the
        // exponent 1/2, invisible below it.
        if gamma > 0.5 {
            let last = *sums.last().expect("nonempty grid");
            assertions.push(pass(
                format!("error sum <= 0.1 at largest T for gamma={gamma}"),
                last <= 0.1,
                format!("sum {last:.4}"),
            ));
            let trend_ok = misses
                .windows(2)
                .all(|w| w[1].0 <= w[0].0 + w[0].1 + w[1].1);
            let final_md = misses.last().expect("nonempty grid").0;
            assertions.push(pass(
                format!("missed detection falls below 0.05 along T for gamma={gamma}"),
                trend_ok && final_md < 0.05,
                format!(
                    "p_md by T: {:?}",
                    misses.iter().map(|m| m.0).collect::<Vec<_>>()
                ),
            ));
        } else if gamma < 0.5 {
            let min = sums.iter().cloned().fold(f64::INFINITY, f64::min);
            assertions.push(pass(
                format!("error sum stays >= 0.8 for gamma={gamma}"),
                min >= 0.8,
                format!("min sum {min:.4}"),
            ));
        }
        series.push(Series {
            label: format!("gamma={gamma}"),
            points,
            band: Some(band),
        });
    }
    let plot = PlotSpec {
        title: "Count detector vs insertion exponent".into(),
        x_label: "T (s)",
        y_label: "P_FA + P_MD",
        log_x: ts.len() > 1,
        log_y: false,
        series,
        annotations: vec![format!("alpha={alpha}")],
    };
    Ok((ESTIMATE_COLUMNS.to_vec(), rows, assertions, plot))
}

const BUFFERING_COLUMNS: [&str; 10] = [
    "n",
    "trials",
    "rho1",
    "median_m",
    "coverage",
    "band_lo",
    "band_hi",
    "mean_delay",
    "predicted_delay",
    "fit_slope",
];

fn buffering(cfg: &ExperimentConfig) -> Result<KindResult> {
    let dist = cfg.channel;
    let eps = cfg.epsilon()?;
    let lambda = dist.rate();
    let c = fisher_constant_c(&dist)?;
    let ns = cfg.n_grid()?;
    let mut data = Vec::new();
    for (g, &n_u) in ns.iter().enumerate() {
        let n = n_u as usize;
        let rho1 = eps / (c * n as f64).sqrt();
        if rho1 >= 1.0 {
            return Err(Error::Config(format!(
                "n={n} too small: derived rho1 {rho1} is not below 1"
            )));
        }
        let lo = eps * (n as f64 / (4.0 * c)).sqrt();
        let hi = eps * (4.0 * n as f64 / c).sqrt();
        let point_seed = seed::child(cfg.seed, g as u64);
        let trials: Result<Vec<(usize, f64)>> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let trial_seed = seed::child(point_seed, i as u64);
                backlog_trial(&dist, n, rho1, trial_seed).map_err(|e| e.in_trial(i))
            })
            .collect();
        let trials = trials?;
        let mut ms: Vec<f64> = trials.iter().map(|&(m, _)| m as f64).collect();
        let covered = ms.iter().filter(|&&m| m >= lo && m <= hi).count();
        let coverage = covered as f64 / ms.len() as f64;
        let median_m = median(&mut ms);
        let mean_delay = trials.iter().map(|&(_, d)| d).sum::<f64>() / trials.len() as f64;
        let predicted = predicted_phase1_mean_delay(rho1, n, lambda);
        data.push((n, rho1, median_m, coverage, lo, hi, mean_delay, predicted));
    }

    let med_points: Vec<(f64, f64)> = data.iter().map(|d| (d.0 as f64, d.2)).collect();
    let slope = fit_loglog_slope(&med_points);
    let slope_str = slope.map_or_else(|| "NaN".to_string(), fmt);

    let rows = data
        .iter()
        .map(|&(n, rho1, median_m, coverage, lo, hi, mean_delay, predicted)| {
            vec![
                n.to_string(),
                cfg.trials.to_string(),
                fmt(rho1),
                fmt(median_m),
                fmt(coverage),
                fmt(lo),
                fmt(hi),
                fmt(mean_delay),
                fmt(predicted),
                slope_str.clone(),
            ]
        })
        .collect();

    let mut assertions = Vec::new();
    let coverages: Vec<f64> = data.iter().map(|d| d.3).collect();
    let last = data.last().expect("nonempty grid");
    assertions.push(pass(
        format!("backlog coverage >= 0.95 at n={}", last.0),
        last.3 >= 0.95,
        format!("coverage {:.4}", last.3),
    ));
    assertions.push(pass(
        "backlog coverage non-decreasing in n",
        coverages.windows(2).all(|w| w[1] >= w[0]),
        format!("{coverages:?}"),
    ));
    if let Some(s) = slope {
        assertions.push(pass(
            "median backlog log-log slope in [0.45, 0.55]",
            (0.45..=0.55).contains(&s),
            format!("slope {s:.4}"),
        ));
    }
    let delay_ratio = last.6 / last.7;
    assertions.push(pass(
        format!("phase-1 mean delay within 5% at n={}", last.0),
        (delay_ratio - 1.0).abs() <= 0.05,
        format!("observed/predicted {delay_ratio:.4}"),
    ));

    let plot = PlotSpec {
        title: "Covert backlog vs stream length".into(),
        x_label: "n",
        y_label: "median backlog m",
        log_x: true,
        log_y: true,
        series: vec![Series {
            label: format!("epsilon={eps}"),
            points: med_points,
            band: None,
        }],
        annotations: vec![slope.map_or_else(
            || "slope = n/a".to_string(),
            |s| format!("slope = {s:.3}"),
        )],
    };
    Ok((BUFFERING_COLUMNS.to_vec(), rows, assertions, plot))
}

fn backlog_trial(
    dist: &IpdDistribution,
    n: usize,
    rho1: f64,
    trial_seed: u64,
) -> Result<(usize, f64)> {
    let gen_len = (n as f64 * (1.0 + 2.0 * rho1)).ceil() as usize + 64;
    let mut jack = sample_stream(dist, StopRule::Count(gen_len), seed::child(trial_seed, 0))?;
    let mut attempt = 0u64;
    let m = loop {
        match buffer_count(&jack, n, rho1) {
            Err(Error::StreamTooShort(_)) if attempt < 32 => {
                extend_stream(&mut jack, dist, n / 8 + 64, seed::child(trial_seed, 1 + attempt))?;
                attempt += 1;
            }
            other => break other?,
        }
    };
    let delay = phase1_mean_delay(&jack, n, rho1)?;
    Ok((m, delay))
}

const TWO_PHASE_COLUMNS: [&str; 8] = [
    "n",
    "trials",
    "rho2",
    "median_nb",
    "complete_fraction",
    "max_abs_ipd_err",
    "ipd_quantum",
    "reconstruction_ok",
];

/// Per-trial two-phase summary: replacements, completion, worst IPD
/// deviation, the f64 quantum it was judged against, and the verdict.
type TwoPhaseTrialRow = (usize, bool, f64, f64, bool);

fn two_phase(cfg: &ExperimentConfig) -> Result<KindResult> {
    let eps = cfg.epsilon()?;
    let psi = cfg.psi()?;
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut points = Vec::new();
    for (g, &n_u) in cfg.n_grid()?.iter().enumerate() {
        let n = n_u as usize;
        let plan = TwoPhasePlan::new(cfg.channel, n, psi, eps)?;
        let point_seed = seed::child(cfg.seed, g as u64);
        let trials: Result<Vec<TwoPhaseTrialRow>> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let trial = two_phase_trial(&plan, seed::child(point_seed, i as u64))
                    .map_err(|e| e.in_trial(i))?;
                let (max_err, quantum, ok) = phase2_deviation(&plan, &trial);
                Ok((trial.outcome.n_b, trial.outcome.complete, max_err, quantum, ok))
            })
            .collect();
        let trials = trials?;
        let mut nbs: Vec<f64> = trials.iter().map(|t| t.0 as f64).collect();
        let median_nb = median(&mut nbs);
        let complete = trials.iter().filter(|t| t.1).count() as f64 / trials.len() as f64;
        let max_err = trials.iter().map(|t| t.2).fold(0.0, f64::max);
        let quantum = trials.iter().map(|t| t.3).fold(0.0, f64::max);
        let all_ok = trials.iter().all(|t| t.4);
        rows.push(vec![
            n.to_string(),
            cfg.trials.to_string(),
            fmt(plan.rho2()),
            fmt(median_nb),
            fmt(complete),
            fmt(max_err),
            fmt(quantum),
            all_ok.to_string(),
        ]);
        assertions.push(pass(
            format!("phase-2 IPDs reconstruct Jack's at n={n}"),
            all_ok,
            format!("max |deviation| {max_err:.3e}, f64 quantum {quantum:.3e}"),
        ));
        points.push((n as f64, median_nb));
    }
    let plot = PlotSpec {
        title: "Two-phase replacements vs stream length".into(),
        x_label: "n",
        y_label: "median replacements",
        log_x: true,
        log_y: true,
        series: vec![Series {
            label: format!("epsilon={eps}, psi={psi}"),
            points,
            band: None,
        }],
        annotations: Vec::new(),
    };
    Ok((TWO_PHASE_COLUMNS.to_vec(), rows, assertions, plot))
}

/// Largest absolute deviation between Bob's phase-2 IPDs and Jack's
/// originals, the f64 quantization floor of the comparison, and whether
/// every IPD matched within `1e-9` relative plus that floor.
fn phase2_deviation(plan: &TwoPhasePlan, trial: &TwoPhaseTrial) -> (f64, f64, bool) {
    let k1 = plan.phase1_count();
    let start = k1 + trial.outcome.m;
    let jack_ipds = extract_ipds(&trial.jack).expect("jack nonempty");
    let bob_ipds = extract_ipds(&trial.outcome.bob_output).expect("bob nonempty");
    let quantum = 8.0 * f64::EPSILON * trial.outcome.bob_output.last_time().unwrap_or(0.0);
    let mut max_err: f64 = 0.0;
    let mut ok = true;
    for (offset, &bob) in bob_ipds[k1..].iter().enumerate() {
        let jack = jack_ipds[start + offset];
        let err = (bob - jack).abs();
        max_err = max_err.max(err);
        if err > 1e-9 * jack.abs() + quantum {
            ok = false;
        }
    }
    (max_err, quantum, ok)
}

const ONE_PHASE_COLUMNS: [&str; 8] = [
    "n",
    "trials",
    "rho4",
    "p_na_ge_log",
    "p_ci",
    "p_net_ge_log",
    "median_na",
    "buffer_nonneg",
];

fn one_phase(cfg: &ExperimentConfig) -> Result<KindResult> {
    let dist = cfg.channel;
    let eps = cfg.epsilon()?;
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut stats = Vec::new();
    for (g, &n_u) in cfg.n_grid()?.iter().enumerate() {
        let n = n_u as usize;
        let point_seed = seed::child(cfg.seed, g as u64);
        let trials: Result<Vec<(usize, i64, f64, bool)>> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let trial_seed = seed::child(point_seed, i as u64);
                let jack = sample_stream(&dist, StopRule::Count(n), seed::child(trial_seed, 0))?;
                let out = one_phase_run(&jack, n, eps, &dist, seed::child(trial_seed, 1))
                    .map_err(|e| e.in_trial(i))?;
                let nonneg = out.buffer_trajectory.iter().all(|&b| (b as i64) >= 0);
                let net = out.total_transmitted as i64 - n as i64;
                Ok((out.own_packets, net, out.rho4, nonneg))
            })
            .collect();
        let trials = trials?;
        let threshold = (n as f64).ln();
        let hits = trials.iter().filter(|t| t.0 as f64 >= threshold).count();
        let p_hat = hits as f64 / trials.len() as f64;
        let ci = wilson_half_width(hits, trials.len());
        // The event-surplus count net of held packets; unlike the raw
        // own-packet count it plateaus below 1 instead of climbing.
        let net_hits = trials.iter().filter(|t| t.1 as f64 >= threshold).count();
        let p_net = net_hits as f64 / trials.len() as f64;
        let mut nas: Vec<f64> = trials.iter().map(|t| t.0 as f64).collect();
        let median_na = median(&mut nas);
        let rho4 = trials.first().map_or(0.0, |t| t.2);
        let nonneg = trials.iter().all(|t| t.3);
        rows.push(vec![
            n.to_string(),
            cfg.trials.to_string(),
            fmt(rho4),
            fmt(p_hat),
            fmt(ci),
            fmt(p_net),
            fmt(median_na),
            nonneg.to_string(),
        ]);
        assertions.push(pass(
            format!("P(N_a >= ln n) <= 0.95 at n={n}"),
            p_hat <= 0.95,
            format!("p_hat {p_hat:.4}"),
        ));
        assertions.push(pass(
            format!("buffer occupancy nonnegative at n={n}"),
            nonneg,
            String::new(),
        ));
        stats.push((n as f64, p_hat, ci));
    }
    if stats.len() >= 2 {
        // No statistically significant monotone climb toward 1.
        let climbing = stats
            .windows(2)
            .all(|w| w[1].1 - w[0].1 > w[0].2 + w[1].2);
        assertions.push(pass(
            "P(N_a >= ln n) shows no significant monotone increase",
            !climbing,
            format!("{:?}", stats.iter().map(|s| s.1).collect::<Vec<_>>()),
        ));
    }
    let plot = PlotSpec {
        title: "One-phase scheme: P(N_a >= ln n)".into(),
        x_label: "n",
        y_label: "P(N_a >= ln n)",
        log_x: true,
        log_y: false,
        series: vec![Series {
            label: format!("epsilon={eps}"),
            points: stats.iter().map(|s| (s.0, s.1)).collect(),
            band: Some(
                stats
                    .iter()
                    .map(|s| (s.0, (s.1 - s.2).max(0.0), (s.1 + s.2).min(1.0)))
                    .collect(),
            ),
        }],
        annotations: vec!["negative control: must not approach 1".into()],
    };
    Ok((ONE_PHASE_COLUMNS.to_vec(), rows, assertions, plot))
}

const KL_COLUMNS: [&str; 7] = [
    "family",
    "rho",
    "kl_nats",
    "kl_err",
    "fisher_c",
    "expansion",
    "ratio",
];

fn kl_expansion(cfg: &ExperimentConfig) -> Result<KindResult> {
    let rhos = cfg.rho_grid()?;
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    let mut series = Vec::new();
    for dist in cfg.families() {
        let c = fisher_constant_c(&dist)?;
        let mut ratios = Vec::new();
        let mut points = Vec::new();
        for &rho in rhos {
            let kl = kl_scaled_renewal(&dist, rho)?;
            let expansion = 0.5 * c * rho * rho;
            let ratio = kl.value / expansion;
            rows.push(vec![
                dist.family().to_string(),
                fmt(rho),
                fmt(kl.value),
                fmt(kl.error),
                fmt(c),
                fmt(expansion),
                fmt(ratio),
            ]);
            ratios.push(ratio);
            points.push((rho, ratio));
        }
        let first = ratios[0];
        assertions.push(pass(
            format!("{}: ratio within [0.9, 1.1] at rho={}", dist.family(), rhos[0]),
            (0.9..=1.1).contains(&first),
            format!("ratio {first:.5}"),
        ));
        let gaps: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        assertions.push(pass(
            format!("{}: |ratio - 1| non-increasing as rho halves", dist.family()),
            gaps.windows(2).all(|w| w[1] <= w[0] + 1e-9),
            format!("{gaps:?}"),
        ));
        series.push(Series {
            label: dist.family().to_string(),
            points,
            band: None,
        });
    }
    let plot = PlotSpec {
        title: "Scaled-density KL vs second-order expansion".into(),
        x_label: "rho",
        y_label: "KL / (c rho^2 / 2)",
        log_x: true,
        log_y: false,
        series,
        annotations: vec!["ratio -> 1 as rho -> 0".into()],
    };
    Ok((KL_COLUMNS.to_vec(), rows, assertions, plot))
}

const FISHER_COLUMNS: [&str; 4] = ["family", "analytic", "quadrature", "abs_diff"];

fn fisher(cfg: &ExperimentConfig) -> Result<KindResult> {
    let mut rows = Vec::new();
    let mut max_diff: f64 = 0.0;
    let mut analytic_series = Vec::new();
    let mut quad_series = Vec::new();
    let families = cfg.families();
    for (i, dist) in families.iter().enumerate() {
        let analytic = fisher_constant_analytic(dist);
        let quadrature = fisher_constant_quadrature(dist, 1e-9)?;
        let diff = (analytic - quadrature.value).abs();
        max_diff = max_diff.max(diff);
        rows.push(vec![
            dist.family().to_string(),
            fmt(analytic),
            fmt(quadrature.value),
            fmt(diff),
        ]);
        analytic_series.push((i as f64 + 1.0, analytic));
        quad_series.push((i as f64 + 1.0, quadrature.value));
    }
    let assertions = vec![pass(
        "fisher constants: |analytic - quadrature| < 1e-6",
        max_diff < 1e-6,
        format!("max diff {max_diff:.3e}"),
    )];
    let plot = PlotSpec {
        title: "Fisher constant: closed form vs quadrature".into(),
        x_label: "family index",
        y_label: "c",
        log_x: false,
        log_y: false,
        series: vec![
            Series {
                label: "analytic".into(),
                points: analytic_series,
                band: None,
            },
            Series {
                label: "quadrature".into(),
                points: quad_series,
                band: None,
            },
        ],
        annotations: vec![format!("max |diff| = {max_diff:.2e}")],
    };
    Ok((FISHER_COLUMNS.to_vec(), rows, assertions, plot))
}

/// Runs the configured detector against a trace, for the `detect` command.
pub fn detect_on_trace(cfg: &ExperimentConfig, stream: &PacketStream) -> Result<String> {
    use super::config::DetectorChoice;
    let kind = cfg
        .detector
        .kind
        .ok_or_else(|| Error::Config("detector.kind is required for detect".into()))?;
    let alpha = cfg.alpha();
    let lambda = cfg.channel.rate();
    match kind {
        DetectorChoice::CountThreshold => {
            let t = cfg
                .simulate
                .horizon
                .ok_or_else(|| Error::Config("simulate.horizon is required for count-threshold".into()))?;
            let r = count_threshold_detect(stream, lambda, t, alpha)?;
            Ok(format!(
                "detector=count-threshold statistic={} threshold={} alpha={} decision={:?}",
                r.statistic, r.threshold, r.alpha, r.decision
            ))
        }
        DetectorChoice::MeanIpdBuffering | DetectorChoice::MeanIpdInsertion => {
            let mode = if kind == DetectorChoice::MeanIpdBuffering {
                MeanIpdMode::Buffering
            } else {
                MeanIpdMode::Insertion
            };
            let ipds = extract_ipds(stream)?;
            let r = mean_ipd_detect(&ipds, lambda, cfg.channel.variance(), alpha, mode)?;
            Ok(format!(
                "detector={:?} statistic={} threshold={} alpha={} decision={:?}",
                r.detector, r.statistic, r.threshold, r.alpha, r.decision
            ))
        }
        DetectorChoice::Lrt => {
            let t = cfg
                .simulate
                .horizon
                .ok_or_else(|| Error::Config("simulate.horizon is required for lrt".into()))?;
            let lambda = cfg.poisson_rate()?;
            let plan = PoissonInsertionPlan::new(lambda, t, cfg.epsilon()?)?;
            let n = count_arrivals(stream, t)?;
            let r = poisson_count_lrt(n, lambda, plan.delta(), t)?;
            Ok(format!(
                "detector=lrt n={n} log_ratio={} ratio={} decision={:?}",
                r.log_ratio, r.ratio, r.decision
            ))
        }
    }
}

/// Streams the `simulate` command writes: Jack's trace, the observed
/// (insertion-merged) trace when a Poisson budget applies, and Alice's and
/// Bob's outputs for two-phase runs.
pub type SimulatedStreams = (
    PacketStream,
    Option<PacketStream>,
    Option<(PacketStream, PacketStream)>,
);

/// Applies the configured strategy once and returns the streams the
/// `simulate` command writes.
pub fn simulate_streams(cfg: &ExperimentConfig) -> Result<SimulatedStreams> {
    let stop = match (cfg.simulate.horizon, cfg.simulate.count) {
        (Some(t), None) => StopRule::Horizon(t),
        (None, Some(n)) => StopRule::Count(n as usize),
        _ => {
            return Err(Error::Config(
                "simulate needs exactly one of simulate.horizon or simulate.count".into(),
            ));
        }
    };
    let jack = sample_stream(&cfg.channel, stop, seed::child(cfg.seed, 0))?;
    let observed = match (cfg.kind, cfg.strategy.epsilon, cfg.simulate.horizon) {
        (ExperimentKind::PoissonAchievability | ExperimentKind::PoissonConverse, Some(eps), Some(t)) => {
            let plan = PoissonInsertionPlan::new(cfg.poisson_rate()?, t, eps)?;
            Some(poisson_insertion(&jack, &plan, seed::child(cfg.seed, 1))?)
        }
        _ => None,
    };
    let two_phase_out = if cfg.kind == ExperimentKind::TwoPhase {
        let n = *cfg.n_grid()?.first().expect("validated nonempty") as usize;
        let plan = TwoPhasePlan::new(cfg.channel, n, cfg.psi()?, cfg.epsilon()?)?;
        let trial = two_phase_trial(&plan, seed::child(cfg.seed, 2))?;
        Some((trial.outcome.alice_output, trial.outcome.bob_output))
    } else {
        None
    };
    Ok((jack, observed, two_phase_out))
}
