//! Subcommand table and the experiment behind each entry.

use serde::Serialize;
use serde_json::json;

use svtail::bounds::{
    build_hc_schedule, choose_mc_constants_with, schedule_depth, tail_crossover, theorem_tail_bounds, verify_mc_constants,
};
use svtail::ensemble::{EnsembleSpec, Field};
use svtail::exec::{ExecMode, TrialPlan};
use svtail::experiments::{
    distance_trials, estimate_tail_curve, incompressible_tail_experiment, net_certificate_fuzz, norm_concentration,
    row_bound_experiment, row_cases, shift_trials, summarize_distance, summarize_shift, EtaSource,
};
use svtail::sphere::{ClassificationParams, MassProfile};
use svtail::stats::log_space;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{csv_bytes, Artifacts};

pub struct Key {
    pub name: &'static str,
    /// Empty means optional with no default.
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

pub struct Command {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [Key],
    pub run: fn(&Config) -> Result<Artifacts, CliError>,
}

/// Present on every subcommand.
pub const COMMON: &[Key] = &[
    key("seed", "1", "master seed (default from SVTAIL_SEED, else 1)"),
    key("out", "svtail-out", "output directory"),
    key("jobs", "", "worker cap; 0 or absent uses every core"),
];

pub const COMMANDS: &[Command] = &[
    Command {
        name: "tail",
        about: "Lower tail P[σ_min(A) ≤ ε·‖A‖_HS] of the sparse ensemble with a log-log exponent fit",
        keys: &[
            key("n", "100", "dimension"),
            key("delta", "0.5", "sparsity exponent; p = n^(−δ)"),
            key("field", "complex", "Gaussian field: real or complex"),
            key("trials", "10000", "Monte Carlo trials"),
            key("eps-min", "0.001", "smallest ε"),
            key("eps-max", "0.1", "largest ε"),
            key("eps-points", "25", "log-spaced grid size"),
            key("atom-rate", "1", "c in the e^(−c·n^δ) term of the analytic bound"),
            key("prefactor", "1", "C in front of the ε terms of the analytic bound"),
        ],
        run: tail,
    },
    Command {
        name: "norm",
        about: "Operator-norm concentration ‖A‖ ≥ K·n^(δ/2) and the real/imaginary split",
        keys: &[
            key("n", "64", "dimension"),
            key("delta", "0.5", "sparsity exponent"),
            key("field", "complex", "Gaussian field: real or complex"),
            key("trials", "1000", "Monte Carlo trials"),
            key("k-grid", "0.5,1,1.5,2,2.5,3,4", "comma-separated K values"),
        ],
        run: norm,
    },
    Command {
        name: "rowbound",
        about: "Rows with few supported entries: counts |I_y(J)| against their mean and Chernoff tail",
        keys: &[
            key("n", "64", "dimension"),
            key("delta", "0.5", "sparsity exponent"),
            key("trials", "10000", "Monte Carlo trials per case"),
            key("m-max", "8", "largest support size m"),
        ],
        run: rowbound,
    },
    Command {
        name: "net-check",
        about: "Sparse-net approximation certificates on fuzzed members of V(a, b, d1, d2)",
        keys: &[
            key("members", "10000", "members to certify"),
            key("n-max", "64", "largest dimension drawn"),
        ],
        run: net_check,
    },
    Command {
        name: "constants",
        about: "Moderately compressible constants and their inequality checks over an n grid",
        keys: &[
            key("K", "6", "operator-norm constant"),
            key("delta", "0.5", "sparsity exponent"),
            key("n-min", "1000", "smallest dimension the constants must cover"),
            key("n-max", "1e8", "largest finite grid point"),
            key("c2", "1", "compressibility constant c2"),
        ],
        run: constants,
    },
    Command {
        name: "schedule",
        about: "Layered cover of the highly compressible vectors with per-layer union bounds",
        keys: &[
            key("K", "6", "operator-norm constant"),
            key("delta", "0.5", "sparsity exponent"),
            key("n", "1e6", "dimension"),
            key("n-min", "1000", "n_min used to choose ε1 and ε2"),
            key("c2", "1", "compressibility constant c2"),
        ],
        run: schedule,
    },
    Command {
        name: "incompressible",
        about: "Small-ball frequencies of |⟨Y, η⟩| for a sparse column and incompressible η",
        keys: &[
            key("n", "200", "dimension"),
            key("delta", "0.5", "sparsity exponent"),
            key("trials", "20000", "Monte Carlo trials"),
            key("c1", "0.5", "classification constant c1"),
            key("c2", "1", "classification constant c2"),
            key("eps1", "0.1", "classification constant ε1"),
            key("eps2", "0.2", "classification constant ε2"),
            key("t-min", "0.005", "smallest threshold"),
            key("t-max", "0.2", "largest threshold"),
            key("t-points", "15", "log-spaced grid size"),
            key("profile", "random", "η source: random, uniform or flat"),
        ],
        run: incompressible,
    },
    Command {
        name: "distance",
        about: "Column-distance reduction: dist(Y₁, W₁) = |⟨Y₁, η₁⟩| and |x_i|·dist(Y_i, W_i) ≤ σ_n",
        keys: &[
            key("n", "50", "dimension"),
            key("delta", "0.5", "sparsity exponent"),
            key("field", "complex", "Gaussian field: real or complex"),
            key("trials", "1200", "Monte Carlo trials"),
        ],
        run: distance,
    },
    Command {
        name: "shift",
        about: "Corner-zeroed shift M = t·Id − t·e_n e_nᵀ that defeats the tail bound for M + λA",
        keys: &[
            key("n", "50", "dimension"),
            key("delta", "0.5", "sparsity exponent"),
            key("field", "complex", "Gaussian field: real or complex"),
            key("t", "100", "shift size"),
            key("lambda", "0.1", "perturbation scale"),
            key("trials", "1000", "Monte Carlo trials"),
        ],
        run: shift,
    },
];

pub fn find(name: &str) -> Option<&'static Command> {
    COMMANDS.iter().find(|c| c.name == name)
}

impl Command {
    pub fn defaults(&self) -> Vec<(&'static str, &'static str)> {
        self.keys.iter().chain(COMMON).map(|k| (k.name, k.default)).collect()
    }
}

fn spec(cfg: &Config, field: Field) -> Result<EnsembleSpec, CliError> {
    Ok(EnsembleSpec::new(cfg.get("n")?, cfg.get("delta")?, field)?)
}

fn field(cfg: &Config) -> Result<Field, CliError> {
    cfg.get::<Field>("field")
}

fn plan(cfg: &Config) -> Result<TrialPlan, CliError> {
    Ok(TrialPlan::new(cfg.get("trials")?, cfg.get("seed")?))
}

fn grid(cfg: &Config, lo: &str, hi: &str, points: &str) -> Result<Vec<f64>, CliError> {
    let (a, b, k): (f64, f64, usize) = (cfg.get(lo)?, cfg.get(hi)?, cfg.get(points)?);
    if !(a > 0.0 && a < b && k >= 2) {
        return Err(CliError::Config(format!("need 0 < {lo} < {hi} and {points} ≥ 2")));
    }
    Ok(log_space(a, b, k))
}

#[derive(Serialize)]
struct TailRow {
    eps: f64,
    trials: u64,
    successes: u64,
    p_hat: f64,
    ci_lo: f64,
    ci_hi: f64,
}

fn tail(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = spec(cfg, field(cfg)?)?;
    let eps = grid(cfg, "eps-min", "eps-max", "eps-points")?;
    let curve = estimate_tail_curve(&spec, &eps, &plan(cfg)?)?;
    let (c, big_c): (f64, f64) = (cfg.get("atom-rate")?, cfg.get("prefactor")?);
    let n = spec.n() as f64;
    let bounds = eps
        .iter()
        .map(|&e| theorem_tail_bounds(e, n, spec.delta(), c, big_c))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = (0..eps.len()).map(|i| TailRow {
        eps: eps[i],
        trials: curve.trials,
        successes: curve.successes[i],
        p_hat: curve.p_hat[i],
        ci_lo: curve.ci_lo[i],
        ci_hi: curve.ci_hi[i],
    });
    let summary = json!({
        "command": "tail",
        "n": spec.n(),
        "delta": spec.delta(),
        "field": spec.field(),
        "fitted_exponent": curve.fitted_exponent,
        "fit_log_prefactor": curve.fit_log_prefactor,
        "fit_r2": curve.fit_r2,
        "fit_points": curve.fit_points,
        "atom_count": curve.atom_count,
        "crossover_eps": tail_crossover(n, spec.delta()),
        "analytic": {
            "eps": eps,
            "main": bounds.iter().map(|b| b.main).collect::<Vec<_>>(),
            "ru_specialized": bounds.iter().map(|b| b.ru_specialized).collect::<Vec<_>>(),
            "ginibre_complex": bounds.iter().map(|b| b.ginibre_complex).collect::<Vec<_>>(),
            "ginibre_real": bounds.iter().map(|b| b.ginibre_real).collect::<Vec<_>>(),
        },
        "curve": curve,
    });
    Ok(Artifacts {
        csv: csv_bytes(rows)?,
        summary,
    })
}

fn norm(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = spec(cfg, field(cfg)?)?;
    let r = norm_concentration(&spec, &cfg.list::<f64>("k-grid")?, &plan(cfg)?)?;
    #[derive(Serialize)]
    struct Row {
        k: f64,
        threshold: f64,
        trials: u64,
        successes: u64,
        p_hat: f64,
        ci_lo: f64,
        ci_hi: f64,
    }
    let rows = r.rows.iter().map(|x| Row {
        k: x.k,
        threshold: x.threshold,
        trials: x.freq.trials,
        successes: x.freq.successes,
        p_hat: x.freq.p_hat,
        ci_lo: x.freq.ci_lo,
        ci_hi: x.freq.ci_hi,
    });
    let monotone = r.rows.windows(2).all(|w| w[0].freq.successes >= w[1].freq.successes);
    Ok(Artifacts {
        csv: csv_bytes(rows)?,
        summary: json!({ "command": "norm", "field": spec.field(), "nonincreasing_in_K": monotone, "report": r }),
    })
}

fn rowbound(cfg: &Config) -> Result<Artifacts, CliError> {
    let m_max: usize = cfg.get("m-max")?;
    let rows = row_bound_experiment(cfg.get("n")?, cfg.get("delta")?, &row_cases(m_max), &plan(cfg)?)?;
    #[derive(Serialize)]
    struct Row {
        m: usize,
        j_size: usize,
        mean: f64,
        std_err: f64,
        expected_mean: f64,
        threshold: f64,
        tail_successes: u64,
        tail_p_hat: f64,
        tail_ci_lo: f64,
        tail_ci_hi: f64,
        chernoff: f64,
    }
    let csv = csv_bytes(rows.iter().map(|r| Row {
        m: r.m,
        j_size: r.j_size,
        mean: r.mean,
        std_err: r.std_err,
        expected_mean: r.expected_mean,
        threshold: r.threshold,
        tail_successes: r.lower_tail.successes,
        tail_p_hat: r.lower_tail.p_hat,
        tail_ci_lo: r.lower_tail.ci_lo,
        tail_ci_hi: r.lower_tail.ci_hi,
        chernoff: r.chernoff,
    }))?;
    Ok(Artifacts {
        csv,
        summary: json!({ "command": "rowbound", "rows": rows }),
    })
}

fn net_check(cfg: &Config) -> Result<Artifacts, CliError> {
    let r = net_certificate_fuzz(cfg.get("members")?, cfg.get("n-max")?, cfg.get("seed")?, ExecMode::default())?;
    #[derive(Serialize)]
    struct Row {
        members: u64,
        skipped: u64,
        dist_failures: u64,
        band_failures: u64,
        sparsity_failures: u64,
        worst_dist_ratio: f64,
    }
    let worst = r.worst.as_ref().map_or(0.0, |c| c.dist / (3.0 * c.d1.sqrt()));
    let csv = csv_bytes([Row {
        members: r.members,
        skipped: r.skipped,
        dist_failures: r.dist_failures,
        band_failures: r.band_failures,
        sparsity_failures: r.sparsity_failures,
        worst_dist_ratio: worst,
    }])?;
    let all = r.dist_failures + r.band_failures + r.sparsity_failures == 0;
    Ok(Artifacts {
        csv,
        summary: json!({ "command": "net-check", "all_certificates_hold": all, "report": r }),
    })
}

fn constants(cfg: &Config) -> Result<Artifacts, CliError> {
    let (n_min, n_max): (f64, f64) = (cfg.get("n-min")?, cfg.get("n-max")?);
    if n_max.is_nan() || n_max < n_min {
        return Err(CliError::Config("need n-max ≥ n-min".into()));
    }
    let c = choose_mc_constants_with(cfg.get("K")?, cfg.get("delta")?, n_min, cfg.get("c2")?)?;
    let mut ns = Vec::new();
    let mut n = n_min;
    while n < n_max {
        ns.push(Some(n));
        n *= 2.0;
    }
    ns.push(Some(n_max));
    ns.push(None);
    #[derive(Serialize)]
    struct Row {
        n: String,
        id: &'static str,
        ln_lhs: f64,
        ln_rhs: f64,
        holds: bool,
    }
    let mut rows = Vec::new();
    for n in &ns {
        for chk in verify_mc_constants(&c, *n) {
            rows.push(Row {
                n: n.map_or("inf".into(), |v| v.to_string()),
                id: chk.id,
                ln_lhs: chk.lhs.ln(),
                ln_rhs: chk.rhs.ln(),
                holds: chk.holds,
            });
        }
    }
    let all = rows.iter().all(|r| r.holds);
    let at_n_min = verify_mc_constants(&c, Some(n_min));
    Ok(Artifacts {
        csv: csv_bytes(&rows)?,
        summary: json!({
            "command": "constants",
            "constants": c,
            "grid_points": ns.len(),
            "all_hold": all,
            "checks_at_n_min": at_n_min,
        }),
    })
}

fn schedule(cfg: &Config) -> Result<Artifacts, CliError> {
    let (k, delta, c2): (f64, f64, f64) = (cfg.get("K")?, cfg.get("delta")?, cfg.get("c2")?);
    let c = choose_mc_constants_with(k, delta, cfg.get("n-min")?, c2)?;
    let s = build_hc_schedule(cfg.get("n")?, delta, c2, k, c.eps1, c.eps2)?;
    #[derive(Serialize)]
    struct Row {
        layer: usize,
        a: f64,
        b: f64,
        ln_d1: f64,
        ln_d2: f64,
        step_size: f64,
        ln_bound: f64,
    }
    let mut rows = Vec::new();
    for i in 0..s.m {
        let step = s.layer_bound(i + 1)?;
        rows.push(Row {
            layer: i + 1,
            a: s.a[i],
            b: s.b[i],
            ln_d1: s.d1[i].ln(),
            ln_d2: s.d2[i].ln(),
            step_size: step.step_size,
            ln_bound: step.log_bound,
        });
    }
    let violations = s.violations(c.eps1 + c.eps2);
    Ok(Artifacts {
        csv: csv_bytes(&rows)?,
        summary: json!({
            "command": "schedule",
            "depth": schedule_depth(delta)?,
            "eps1": c.eps1,
            "eps2": c.eps2,
            "violations": violations,
            "schedule": s,
        }),
    })
}

fn incompressible(cfg: &Config) -> Result<Artifacts, CliError> {
    let params = ClassificationParams::new(cfg.get("c1")?, cfg.get("c2")?, cfg.get("eps1")?, cfg.get("eps2")?, cfg.get("delta")?)?;
    let source = match cfg.raw("profile")? {
        "random" => EtaSource::Incompressible(MassProfile::Random),
        "uniform" => EtaSource::Incompressible(MassProfile::Uniform),
        "flat" => EtaSource::Flat,
        other => return Err(CliError::Config(format!("unknown profile `{other}`"))),
    };
    let t = grid(cfg, "t-min", "t-max", "t-points")?;
    let r = incompressible_tail_experiment(&params, cfg.get("n")?, source, &t, &plan(cfg)?)?;
    #[derive(Serialize)]
    struct Row {
        t: f64,
        trials: u64,
        successes: u64,
        p_hat: f64,
        ci_lo: f64,
        ci_hi: f64,
        analytic: f64,
    }
    let csv = csv_bytes((0..t.len()).map(|i| Row {
        t: t[i],
        trials: r.freq[i].trials,
        successes: r.freq[i].successes,
        p_hat: r.freq[i].p_hat,
        ci_lo: r.freq[i].ci_lo,
        ci_hi: r.freq[i].ci_hi,
        analytic: r.analytic[i],
    }))?;
    Ok(Artifacts {
        csv,
        summary: json!({ "command": "incompressible", "source": source, "report": r }),
    })
}

fn distance(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = spec(cfg, field(cfg)?)?;
    let trials = distance_trials(&spec, &plan(cfg)?)?;
    let report = summarize_distance(spec.n(), &trials);
    #[derive(Serialize)]
    struct Row {
        trial: usize,
        sigma_min: f64,
        max_excess: f64,
        identity_error: Option<f64>,
    }
    let csv = csv_bytes(trials.iter().enumerate().map(|(i, t)| Row {
        trial: i,
        sigma_min: t.sigma_min,
        max_excess: t.max_excess,
        identity_error: t.identity_error,
    }))?;
    Ok(Artifacts {
        csv,
        summary: json!({ "command": "distance", "report": report }),
    })
}

fn shift(cfg: &Config) -> Result<Artifacts, CliError> {
    let spec = spec(cfg, field(cfg)?)?;
    let (t, lambda): (f64, f64) = (cfg.get("t")?, cfg.get("lambda")?);
    let trials = shift_trials(&spec, t, lambda, &plan(cfg)?)?;
    let r = summarize_shift(&spec, t, lambda, &trials)?;
    #[derive(Serialize)]
    struct Row {
        trial: usize,
        corner_zero: bool,
        sigma_min: f64,
        bound: f64,
        bound_holds: bool,
        witness_ratio: f64,
        identity_shift_sigma: f64,
    }
    let csv = csv_bytes(trials.iter().enumerate().map(|(i, x)| Row {
        trial: i,
        corner_zero: x.corner_was_zero,
        sigma_min: x.sigma_min,
        bound: x.bound_value,
        bound_holds: x.sigma_min <= x.bound_value,
        witness_ratio: x.witness_ratio,
        identity_shift_sigma: x.identity_shift_sigma,
    }))?;
    let target = 0.99 * r.corner_zero.p_hat;
    Ok(Artifacts {
        csv,
        summary: json!({
            "command": "shift",
            "bound_holds_freq": r.bound_holds.p_hat,
            "target_0_99_corner_zero": target,
            "meets_target": r.bound_holds.p_hat >= target,
            "conditioned_freq": r.conditioned.map(|p| p.p_hat),
            "report": r,
        }),
    })
}
