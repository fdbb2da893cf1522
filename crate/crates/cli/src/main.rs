//! `accel`: run, compare and certify first-order methods on synthetic
//! problems.
//!
//! Exit codes: 0 success, 1 certificate failure or runtime error, 2 invalid
//! configuration, 3 divergence (partial trace written), 4 no certificate for
//! the requested method.

mod config;
mod methods;
mod output;
mod problems;

use std::path::PathBuf;
use std::process::ExitCode;

use accel::certify::{check_interpolation, check_potential, harvest_triplets, has_certificate, Margin};
use accel::certify::annotate_potential;
use accel::{CompositeProblem, Tolerance, Trace};
use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Resolved};
use methods::{run_method, starting_point, Outcome, RunError};
use output::CompareTable;

#[derive(Parser)]
#[command(name = "accel", version, about = "Accelerated first-order methods: experiments and certificates")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one method and write its trace (CSV) and summary (JSON).
    Run(RunArgs),
    /// Run several methods on the same problem and tabulate gap against gradient calls.
    Compare(CompareArgs),
    /// Run a method and check its potential certificate and the interpolation inequalities.
    Certify(CertifyArgs),
}

/// Settings shared by every subcommand.
#[derive(Args, Clone, Default)]
struct Shared {
    /// Problem, e.g. quad:d=20,mu=0.01,L=1 | huber:d=10,tau=0.1,L=1 | heb:d=10,r=4,radius=2 |
    /// lasso:d=20,mu=0.05,L=1,weight=0.1 | simplex:d=20,mu=0.05,L=1
    #[arg(long)]
    problem: Option<String>,
    /// Iteration count (Catalyst: inner iteration budget; restart: total inner iterations)
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Strong convexity the method assumes
    #[arg(long)]
    mu: Option<f64>,
    /// Smoothness the method assumes (gd: step 1/L; fista/prox_agm: initial estimate L0)
    #[arg(long = "L")]
    l: Option<f64>,
    /// Proximal step, Catalyst smoothing, or RNA regularization
    #[arg(long)]
    lambda: Option<f64>,
    /// Relative inexactness of the proximal subproblems
    #[arg(long)]
    delta: Option<f64>,
    /// I, II or III
    #[arg(long)]
    form: Option<String>,
    /// Method-specific variant (backtracking rule, step schedule, inner solver, restart scheme…)
    #[arg(long)]
    mode: Option<String>,
    /// Starting point: random (seeded) or opt
    #[arg(long)]
    x0: Option<String>,
}

impl Shared {
    fn to_config(&self, method: Option<String>) -> ExperimentConfig {
        ExperimentConfig {
            method,
            problem: self.problem.clone(),
            n: self.n,
            seed: self.seed,
            out: self.out.clone(),
            mu: self.mu,
            l: self.l,
            lambda: self.lambda,
            delta: self.delta,
            form: self.form.clone(),
            mode: self.mode.clone(),
            x0: self.x0.clone(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with the same keys as the flags; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct CompareArgs {
    /// JSON configs; each one is a column
    configs: Vec<PathBuf>,
    /// Additional columns given by method name, using the shared flags
    #[arg(long = "method")]
    methods: Vec<String>,
    /// Rows shown on the terminal
    #[arg(long, default_value_t = 25)]
    rows: usize,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    /// Write every margin to this CSV
    #[arg(long)]
    margins: Option<PathBuf>,
    #[command(flatten)]
    shared: Shared,
}

/// Exit with a message.
struct Exit(u8, String);

fn config_error(msg: impl Into<String>) -> Exit {
    Exit(2, msg.into())
}

fn load(config: Option<&PathBuf>, flags: ExperimentConfig) -> Result<Resolved, Exit> {
    let base = match config {
        Some(p) => ExperimentConfig::from_json_file(p).map_err(config_error)?,
        None => ExperimentConfig::default(),
    };
    base.merge(flags).resolve().map_err(config_error)
}

fn prepare(cfg: &Resolved) -> Result<(CompositeProblem, accel::Vector), Exit> {
    let (problem, x0) = cfg.problem.build(cfg.seed).map_err(config_error)?;
    let x0 = starting_point(cfg, &problem, x0).map_err(run_exit)?;
    Ok((problem, x0))
}

fn run_exit(e: RunError) -> Exit {
    match e {
        RunError::Config(m) => Exit(2, m),
        RunError::Diverged(_, m) => Exit(3, m),
        RunError::Other(m) => Exit(1, m),
    }
}

fn tolerance() -> Result<Tolerance, Exit> {
    Tolerance::from_env().map_err(|e| config_error(format!("ACCEL_TOL: {e}")))
}

fn execute(cfg: &Resolved) -> Result<(CompositeProblem, Outcome), RunError> {
    let (problem, x0) = cfg.problem.build(cfg.seed).map_err(RunError::Config)?;
    let x0 = starting_point(cfg, &problem, x0)?;
    let mut out = run_method(cfg, &problem, &x0)?;
    if has_certificate(&out.trace.method) && problem.optimum.is_some() {
        annotate_potential(&mut out.trace, &problem).map_err(|e| RunError::Other(e.to_string()))?;
    }
    Ok((problem, out))
}

fn cmd_run(a: RunArgs) -> Result<(), Exit> {
    let tol = tolerance()?;
    let cfg = load(a.config.as_ref(), a.shared.to_config(a.method))?;
    match execute(&cfg) {
        Ok((_, o)) => {
            let s = output::summary(&cfg, &o.trace, o.bound.as_ref(), &o.extra, tol, "ok");
            output::write_run(&cfg.out, &o.trace, &s).map_err(|e| Exit(1, e.to_string()))?;
            let gap = o.trace.final_gap().map_or("n/a".into(), |g| format!("{g:.6e}"));
            println!("{}: {} rows, final gap {gap}, written to {}", o.trace.method.name(), o.trace.records.len(), cfg.out.display());
            if let Some(ok) = output::bound_satisfied(&o.trace, o.bound.as_ref(), tol) {
                println!("bound {:.6e}: {}", o.bound.unwrap().value, if ok { "satisfied" } else { "VIOLATED" });
            }
            Ok(())
        }
        Err(RunError::Diverged(partial, msg)) => {
            let s = output::summary(&cfg, &partial, None, &[], tol, "diverged");
            output::write_run(&cfg.out, &partial, &s).map_err(|e| Exit(1, e.to_string()))?;
            Err(Exit(3, format!("{msg}; partial trace written to {}", cfg.out.display())))
        }
        Err(e) => Err(run_exit(e)),
    }
}

fn cmd_compare(a: CompareArgs) -> Result<(), Exit> {
    let mut cfgs = Vec::new();
    for p in &a.configs {
        // the file's own keys win over the shared flags
        let file = ExperimentConfig::from_json_file(p).map_err(config_error)?;
        cfgs.push(a.shared.to_config(None).merge(file).resolve().map_err(config_error)?);
    }
    for m in &a.methods {
        cfgs.push(a.shared.to_config(Some(m.clone())).resolve().map_err(config_error)?);
    }
    if cfgs.len() < 2 {
        return Err(config_error("compare needs at least two configurations"));
    }
    let first = &cfgs[0];
    if let Some(c) = cfgs.iter().find(|c| c.problem != first.problem || c.seed != first.seed) {
        return Err(config_error(format!(
            "mismatched problems: {} (seed {}) vs {} (seed {})",
            first.problem, first.seed, c.problem, c.seed
        )));
    }
    let results: Vec<Result<(CompositeProblem, Outcome), RunError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfgs.iter().map(|c| s.spawn(move || execute(c))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut traces = Vec::new();
    for (c, r) in cfgs.iter().zip(results) {
        match r {
            Ok((_, o)) => traces.push(o.trace),
            Err(e) => {
                let Exit(code, m) = run_exit(e);
                return Err(Exit(code, format!("{}: {m}", c.method)));
            }
        }
    }
    let names = traces.iter().map(|t| t.method.name()).collect();
    let table = CompareTable::build(names, &traces.iter().collect::<Vec<_>>());
    print!("{}", table.render(a.rows));
    let budget = traces.iter().map(Trace::grad_calls).min().unwrap_or(0);
    println!("best gap within {budget} gradient calls:");
    for (j, n) in table.names.iter().enumerate() {
        println!("  {n}: {}", table.at(j, budget).map_or("-".into(), |g| format!("{g:.6e}")));
    }
    if let Some(out) = &a.shared.out {
        let f = std::fs::File::create(out).map_err(|e| Exit(1, e.to_string()))?;
        table.write_csv(f).map_err(|e| Exit(1, e.to_string()))?;
    }
    Ok(())
}

fn subsample<T: Clone>(v: &[T], max: usize) -> Vec<T> {
    if v.len() <= max {
        return v.to_vec();
    }
    (0..max).map(|i| v[i * (v.len() - 1) / (max - 1)].clone()).collect()
}

fn report(label: &str, margins: &[&Margin], passed: bool, min_slack: f64) {
    println!("{label}: {} ({} margins, min slack {min_slack:.3e})", if passed { "PASS" } else { "FAIL" }, margins.len());
}

fn cmd_certify(a: CertifyArgs) -> Result<(), Exit> {
    let tol = tolerance()?;
    let cfg = load(a.config.as_ref(), a.shared.to_config(a.method))?;
    let (problem, x0) = prepare(&cfg)?;
    let out = run_method(&cfg, &problem, &x0).map_err(run_exit)?;
    let trace: &Trace = &out.trace;
    if !has_certificate(&trace.method) {
        return Err(Exit(4, format!("no certificate registered for {}", trace.method.name())));
    }
    let pot = check_potential(trace, &problem, tol).map_err(|e| Exit(1, e.to_string()))?;
    let p = problem.f.params();
    let triplets = subsample(&harvest_triplets(trace, problem.f.as_ref()), 300);
    let interp = check_interpolation(&triplets, p.mu, p.l, tol).map_err(|e| Exit(1, e.to_string()))?;

    report("potential", &pot.margins.iter().collect::<Vec<_>>(), pot.passed(), pot.min_slack());
    for m in pot.failures().iter().take(20) {
        println!("  FAIL {} slack {:.3e} (scale {:.3e})", m.site, m.slack, m.scale);
    }
    report(
        &format!("interpolation ({} points, mu={}, L={})", triplets.len(), p.mu, p.l),
        &interp.margins.iter().collect::<Vec<_>>(),
        interp.passed(),
        interp.min_slack(),
    );
    for m in interp.failures().iter().take(20) {
        println!("  FAIL {} slack {:.3e} (scale {:.3e})", m.site, m.slack, m.scale);
    }
    if let Some(path) = &a.margins {
        let f = std::fs::File::create(path).map_err(|e| Exit(1, e.to_string()))?;
        let mut w = csv::Writer::from_writer(f);
        let io = |e: csv::Error| Exit(1, e.to_string());
        w.write_record(["check", "site", "slack", "scale"]).map_err(io)?;
        for (check, r) in [("potential", &pot), ("interpolation", &interp)] {
            for m in &r.margins {
                w.write_record([check.to_string(), m.site.to_string(), m.slack.to_string(), m.scale.to_string()])
                    .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Exit(1, e.to_string()))?;
    }
    if pot.passed() && interp.passed() {
        println!("PASS");
        Ok(())
    } else {
        Err(Exit(1, "certificate check failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Certify(a) => cmd_certify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
