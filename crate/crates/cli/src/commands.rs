use std::time::Instant;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::json;

use rtcouple::chain::{exact_d_curve, mixing_time_exact};
use rtcouple::coupling::{check_all, PairCheck};
use rtcouple::experiment::derive_seed;
use rtcouple::lemmas::{run_grid, Lemma};
use rtcouple::schramm::{
    default_start, expected_s_trajectory, giant_fraction, pd1_comparison, rootn_check, rootn_j, rootn_time,
    sbig_check, z_solver,
};
use rtcouple::walk::{exact_d_sn_curve, MAX_SN_N};
use rtcouple::ExperimentRecord;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Records produced by a subcommand and the number of violated checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub records: Vec<ExperimentRecord>,
    pub violations: usize,
}

/// Sub-experiment salts for `schramm`.
const SALT_PD1: u64 = 1;
const SALT_GIANT: u64 = 2;
const SALT_ROOTN: u64 = 3;
const SALT_SBIG: u64 = 4;

/// Stamps `wall_ms` on the records added since `from`, when enabled.
fn stamp(records: &mut [ExperimentRecord], from: usize, started: Instant, enabled: bool) {
    if enabled {
        let ms = started.elapsed().as_millis() as u64;
        for r in &mut records[from..] {
            r.wall_ms = Some(ms);
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must lie in (0, 1), got {v}")))
    }
}

pub fn exact_tv(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sizes = cfg.sizes(&[3, 4, 5, 6, 7, 8])?;
    let t_max = cfg.t_max.unwrap_or(30);
    let eps = unit_interval("eps", cfg.eps.unwrap_or(0.25))?;
    let eps_exact = BigRational::from_float(eps).expect("finite");
    let mut out = Outcome::default();
    for &n in &sizes {
        let started = Instant::now();
        let from = out.records.len();
        let curve = exact_d_curve(n, t_max)?;
        for (t, d) in curve.iter().enumerate() {
            out.records.push(ExperimentRecord::new("exact-tv", n, "d", d.to_f64().unwrap()).at(t));
        }
        match mixing_time_exact(n, &eps_exact) {
            Ok(tau) => out
                .records
                .push(ExperimentRecord::new("exact-tv", n, "tau_mix", tau as f64).params(json!({ "eps": eps }))),
            Err(rtcouple::Error::NonMonotone(t)) => {
                out.violations += 1;
                out.records.push(
                    ExperimentRecord::new("exact-tv", n, "violation", 1.0)
                        .at(t)
                        .params(json!({ "check": "d(t) non-increasing" })),
                );
            }
            Err(e) => return Err(e.into()),
        }
        if n <= MAX_SN_N.min(5) {
            let full = exact_d_sn_curve(n, t_max)?;
            let mut worst = 0.0f64;
            for (t, (d_sn, d)) in full.iter().zip(&curve).enumerate() {
                worst = worst.max((d_sn - d.to_f64().unwrap()).abs());
                out.records.push(ExperimentRecord::new("exact-tv", n, "d_sn", *d_sn).at(t));
            }
            out.records.push(ExperimentRecord::new("exact-tv", n, "d_sn_max_abs_diff", worst));
            if worst > 1e-12 {
                out.violations += 1;
            }
        }
        stamp(&mut out.records, from, started, cfg.wall_time);
    }
    Ok(out)
}

pub fn verify_coupling(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let max_n = cfg.n.unwrap_or(10);
    let started = Instant::now();
    let checks = check_all(max_n)?;
    let mut out = Outcome::default();
    for n in 2..=max_n {
        let here: Vec<_> = checks.iter().filter(|c| c.x.n() == n).collect();
        let bad: Vec<_> = here.iter().filter(|c| !c.holds()).collect();
        let n2 = (n * n) as f64;
        let slack = |f: fn(&PairCheck) -> i64| here.iter().map(|c| f(c)).min().unwrap_or(0) as f64 / n2;
        out.records.push(ExperimentRecord::new("verify-coupling", n, "pairs", here.len() as f64));
        out.records.push(ExperimentRecord::new("verify-coupling", n, "violations", bad.len() as f64));
        out.records.push(ExperimentRecord::new(
            "verify-coupling",
            n,
            "min_meet_slack",
            slack(|c| c.meet_weight as i64 - c.meet_bound as i64),
        ));
        out.records.push(ExperimentRecord::new(
            "verify-coupling",
            n,
            "min_residual_slack",
            slack(|c| c.residual as i64 - c.residual_bound as i64),
        ));
        for c in bad {
            out.violations += 1;
            out.records.push(ExperimentRecord::new("verify-coupling", n, "violation", 1.0).params(json!({
                "x": c.x.to_string(),
                "y": c.y.to_string(),
                "marginals_exact": c.marginals_exact,
                "support_within_one": c.support_within_one,
                "meet_weight": c.meet_weight,
                "meet_bound": c.meet_bound,
                "residual": c.residual,
                "residual_bound": c.residual_bound,
                "sampler_agrees": c.sampler_agrees,
            })));
        }
    }
    stamp(&mut out.records, 0, started, cfg.wall_time);
    Ok(out)
}

pub fn lemma_grid(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n_max = cfg.n.unwrap_or(12);
    let started = Instant::now();
    let summary = run_grid(n_max)?;
    let mut out = Outcome::default();
    for lemma in Lemma::ALL {
        let name = lemma.name();
        let get = |m: &std::collections::BTreeMap<&'static str, usize>| m.get(name).copied().unwrap_or(0) as f64;
        let params = json!({ "lemma": name });
        out.records
            .push(ExperimentRecord::new("lemma-grid", n_max, "checked", get(&summary.checked)).params(params.clone()));
        out.records
            .push(ExperimentRecord::new("lemma-grid", n_max, "vacuous", get(&summary.vacuous)).params(params.clone()));
        let bad = summary.violations.iter().filter(|r| r.lemma == lemma).count();
        out.records
            .push(ExperimentRecord::new("lemma-grid", n_max, "violations", bad as f64).params(params));
    }
    for rep in &summary.violations {
        out.violations += 1;
        out.records.push(
            ExperimentRecord::new("lemma-grid", rep.n, "violation", 1.0)
                .params(serde_json::to_value(rep).expect("reports serialize")),
        );
    }
    stamp(&mut out.records, 0, started, cfg.wall_time);
    Ok(out)
}

pub fn meeting(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sizes = cfg.sizes(&[500, 1000, 2000])?;
    let trials = cfg.trials(200)?;
    let seed = cfg.seed()?;
    let mut out = Outcome::default();
    for &n in &sizes {
        if n < 2 {
            return Err(CliError::Usage("meeting needs n >= 2".into()));
        }
        let started = Instant::now();
        let from = out.records.len();
        let t_max = cfg.t_max.unwrap_or(10 * n);
        let (x0, y0) = default_start(n);
        let tr = expected_s_trajectory(&x0, &y0, t_max, trials, seed)?;
        let every = (t_max / 20).max(1);
        let params = json!({ "start": "(2,1^(n-2)) vs (1^n)", "trials": trials });
        let mut times: Vec<usize> = (0..=t_max).step_by(every).collect();
        if times.last() != Some(&t_max) {
            times.push(t_max);
        }
        for t in times {
            let nf = n as f64;
            let rec = |stat: &str, v: f64| {
                ExperimentRecord::new("meeting", n, stat, v).at(t).params(params.clone()).seed(seed)
            };
            out.records.push(rec("mean_s", tr.mean_s[t]).stderr(tr.stderr_s[t]));
            out.records.push(rec("mean_s_over_n", tr.mean_s[t] / nf).stderr(tr.stderr_s[t] / nf));
            out.records.push(rec("meet_fraction", tr.meet_fraction[t]));
        }
        stamp(&mut out.records, from, started, cfg.wall_time);
    }
    Ok(out)
}

pub fn schramm(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sizes = cfg.sizes(&[1000])?;
    let trials = cfg.trials(100)?;
    let seed = cfg.seed()?;
    let eps = cfg.eps.unwrap_or(1.0 / 64.0);
    let delta = cfg.delta.unwrap_or(0.5);
    let mut out = Outcome::default();
    for &n in &sizes {
        if n < 8 {
            return Err(CliError::Usage("schramm needs n >= 8".into()));
        }
        let started = Instant::now();
        let from = out.records.len();
        let rec = |stat: &str, v: f64, s: u64| ExperimentRecord::new("schramm", n, stat, v).seed(s);

        let t = cfg.t_max.unwrap_or(n);
        let s = derive_seed(seed, SALT_PD1);
        let cmp = pd1_comparison(n, t, trials, 3, 10 * trials, s)?;
        for (i, ((ks, wm), pm)) in cmp.ks.iter().zip(&cmp.walk_mean).zip(&cmp.pd1_mean).enumerate() {
            let p = json!({ "coordinate": i + 1, "trials": trials, "pd1_samples": 10 * trials });
            out.records.push(rec("pd1_ks", *ks, s).at(t).params(p.clone()));
            out.records.push(rec("walk_scaled_mean", *wm, s).at(t).params(p.clone()));
            out.records.push(rec("pd1_mean", *pm, s).at(t).params(p));
        }

        let s = derive_seed(seed, SALT_GIANT);
        for c in [0.75, 1.0, 1.5] {
            let (mean, se) = giant_fraction(n, c, trials, s);
            let t = (c * n as f64).round() as usize;
            let p = json!({ "c": c, "trials": trials });
            out.records.push(rec("giant_fraction", mean, s).at(t).params(p.clone()).stderr(se));
            out.records.push(rec("giant_limit", z_solver(2.0 * c)?, s).at(t).params(p));
        }

        let s = derive_seed(seed, SALT_ROOTN);
        let t = rootn_time(n);
        let p = rootn_check(n, t, trials, s)?;
        out.records.push(
            rec("rootn_probability", p.estimate, s)
                .at(t)
                .stderr(p.stderr())
                .params(json!({ "wilson_lower": p.lower, "wilson_upper": p.upper, "trials": trials, "asymptotic_claim": 0.5 })),
        );

        let s = derive_seed(seed, SALT_SBIG);
        let j = cfg.j.unwrap_or_else(|| rootn_j(n));
        let eps = unit_interval("eps", eps)?;
        match sbig_check(n, j, eps, delta, trials, s) {
            Ok(est) => out.records.push(
                rec("sbig_failure", est.failure.estimate, s)
                    .at(est.schedule.tau_k() as usize)
                    .stderr(est.failure.stderr())
                    .params(json!({
                        "eps": eps,
                        "delta": delta,
                        "j": j,
                        "K": est.schedule.k,
                        "tau_K": est.schedule.tau_k(),
                        "wilson_lower": est.failure.lower,
                        "wilson_upper": est.failure.upper,
                        "accepted": est.failure.trials,
                        "attempts": est.attempts,
                        "shape": est.shape,
                    })),
            ),
            Err(rtcouple::Error::InvalidInput(msg)) if msg.contains("no start") => {
                out.records.push(rec("sbig_no_accepted_start", 0.0, s).params(json!({ "eps": eps, "delta": delta, "j": j })));
            }
            Err(e) => return Err(e.into()),
        }
        stamp(&mut out.records, from, started, cfg.wall_time);
    }
    Ok(out)
}
