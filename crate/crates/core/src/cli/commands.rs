use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::certification::{
    certify as certify_policy, estimate_constants, CertError, CertifyOptions, Lyapunov, TauKind,
};
use crate::experiments::{
    generate_lcqp, generate_resource_alloc, read_trace_file, reference_solution, resolve_policy, run_sweep, write_json,
    write_sweep, write_trace_file, ExperimentError, InstanceFile, Manifest, PolicyChoice, SweepConfig, SweepInstance,
    TraceRow,
};
use crate::problem::{BlockProblem, PrimalDualPoint};
use crate::solvers::{
    DualDecompositionParams, Method, Potential, ProximalPolicy, SolveError, Solver, SolverParams, Status,
};

use super::svg::{log_plot, Series};
use super::{
    CertifyArgs, CliError, GenerateArgs, InitFlag, InstanceKind, MethodFlag, PolicyArgs, PolicyFlag, ReportArgs,
    SolveArgs, SweepArgs, TauFlag, EXIT_CERT, EXIT_DIVERGED, EXIT_OK,
};

type CliResult<T> = Result<T, CliError>;

/// Slack allowed between a fitted potential rate and the certified factor.
const RATE_SLACK: f64 = 0.02;

fn positive(flag: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{flag} must be a positive number, got {v}")))
    }
}

fn count(flag: &str, v: i64) -> CliResult<usize> {
    if v >= 1 {
        Ok(v as usize)
    } else {
        Err(CliError::usage(format!("{flag} must be at least 1, got {v}")))
    }
}

fn validate_policy(args: &PolicyArgs) -> CliResult<()> {
    if let TauFlag::Value(t) = args.tau {
        positive("--tau", t)?;
    }
    Ok(())
}

fn experiment_error(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::InvalidConfig(m) => CliError::usage(m),
        ExperimentError::Solve(e) => solve_error(e),
        other => CliError::io(other.to_string()),
    }
}

fn solve_error(e: SolveError) -> CliError {
    match e {
        SolveError::InvalidParams(_) | SolveError::NotPsd { .. } => CliError::usage(e.to_string()),
        other => CliError::io(other.to_string()),
    }
}

fn load_instance(path: &Path) -> CliResult<(InstanceFile, BlockProblem)> {
    let file = InstanceFile::read(path).map_err(|e| CliError::io(format!("cannot read instance: {e}")))?;
    let problem = file
        .to_problem()
        .map_err(|e| CliError::io(format!("malformed instance {}: {e}", path.display())))?;
    Ok((file, problem))
}

fn policy_choice(args: &PolicyArgs, file: &InstanceFile, n_blocks: usize) -> CliResult<PolicyChoice> {
    let kind = match args.policy {
        PolicyFlag::None => return Ok(PolicyChoice::Fixed(ProximalPolicy::None)),
        PolicyFlag::Explicit => {
            let p = file
                .proximal
                .clone()
                .ok_or_else(|| CliError::usage("--policy explicit needs an instance with proximal matrices"))?;
            return Ok(PolicyChoice::Fixed(ProximalPolicy::Explicit { p }));
        }
        PolicyFlag::Standard => TauKind::Standard,
        PolicyFlag::Proxlinear => TauKind::ProxLinear,
    };
    Ok(match (args.tau, kind) {
        (TauFlag::Auto, k) => PolicyChoice::AutoTau(k),
        (TauFlag::Value(t), TauKind::Standard) => PolicyChoice::Fixed(ProximalPolicy::standard_uniform(t, n_blocks)),
        (TauFlag::Value(t), TauKind::ProxLinear) => {
            PolicyChoice::Fixed(ProximalPolicy::prox_linear_uniform(t, n_blocks))
        }
    })
}

fn build_policy(
    args: &PolicyArgs,
    file: &InstanceFile,
    p: &BlockProblem,
    rho: f64,
    gamma: f64,
) -> CliResult<ProximalPolicy> {
    let choice = policy_choice(args, file, p.n_blocks())?;
    let (policy, fallback) = resolve_policy(p, rho, gamma, &choice).map_err(experiment_error)?;
    if fallback {
        eprintln!("note: no tau satisfies the certificate condition; using the fallback tau");
    }
    Ok(policy)
}

fn reference_point(file: &InstanceFile, p: &BlockProblem, params: &SolverParams) -> CliResult<PrimalDualPoint> {
    if let Some(opt) = file.optimum() {
        p.check_point(&opt)
            .map_err(|e| CliError::io(format!("stored optimum does not fit the problem: {e}")))?;
        return Ok(opt);
    }
    Ok(reference_solution(p, params).map_err(experiment_error)?.point)
}

pub fn generate(args: &GenerateArgs) -> CliResult<i32> {
    let n_blocks = count("--N", args.n_blocks)?;
    let file = match args.kind {
        InstanceKind::Lcqp => {
            let m = count(
                "--m",
                args.m.ok_or_else(|| CliError::usage("--m is required for lcqp"))?,
            )?;
            let n = count(
                "--n",
                args.n.ok_or_else(|| CliError::usage("--n is required for lcqp"))?,
            )?;
            let inst = generate_lcqp(n_blocks, m, n, args.seed).map_err(|e| CliError::io(e.to_string()))?;
            InstanceFile::from_lcqp(&inst).map_err(experiment_error)?
        }
        InstanceKind::Ra => {
            let inst = generate_resource_alloc(n_blocks, args.seed).map_err(|e| CliError::io(e.to_string()))?;
            InstanceFile::from_resource_alloc(&inst).map_err(experiment_error)?
        }
    };
    file.write(&args.output).map_err(|e| CliError::io(e.to_string()))?;
    let p = file.to_problem().map_err(|e| CliError::io(e.to_string()))?;
    println!("wrote {}", args.output.display());
    println!("N = {}, m = {}, block dims = {:?}", p.n_blocks(), p.m(), p.block_dims());
    match estimate_constants(&p) {
        Ok(c) => println!("c_A = {:.6e}, alpha = {:.6e}, L = {:.6e}", c.c_a, c.alpha, c.l),
        Err(e) => println!("constants: {e}"),
    }
    Ok(EXIT_OK)
}

pub fn certify(args: &CertifyArgs) -> CliResult<i32> {
    positive("--rho", args.rho)?;
    if !args.gamma.is_finite() {
        return Err(CliError::usage(format!("--gamma must be finite, got {}", args.gamma)));
    }
    validate_policy(&args.policy)?;
    let (file, p) = load_instance(&args.input)?;
    if !(args.gamma > 0.0 && args.gamma < 2.0) {
        eprintln!("certification failed: gamma out of (0,2): {}", args.gamma);
        return Ok(EXIT_CERT);
    }
    let policy = build_policy(&args.policy, &file, &p, args.rho, args.gamma)?;
    let mut cert = match certify_policy(&p, args.rho, args.gamma, &policy, &CertifyOptions::default()) {
        Ok(c) => c,
        Err(CertError::GammaOutOfRange { gamma }) => {
            eprintln!("certification failed: gamma out of (0,2): {gamma}");
            return Ok(EXIT_CERT);
        }
        Err(CertError::Solve(e)) => return Err(solve_error(e)),
        Err(e) => return Err(CliError::io(e.to_string())),
    };
    cert.seed = file.seed;
    write_json(&args.output, &cert).map_err(|e| CliError::io(e.to_string()))?;
    println!("wrote {}", args.output.display());
    println!(
        "s = {:.6e}, mu_s = {}, sigma = {}",
        cert.s,
        cert.mu_s.map_or("n/a".into(), |v| format!("{v:.12}")),
        cert.sigma.map_or("n/a".into(), |v| format!("{v:.12}"))
    );
    if cert.passed {
        println!("certified: sigma in (0,1)");
        Ok(EXIT_OK)
    } else {
        eprintln!("certification failed:");
        for f in &cert.failures {
            eprintln!("  {}", serde_json::to_string(f).unwrap_or_default());
        }
        eprintln!("margins: {}", serde_json::to_string(&cert.margins).unwrap_or_default());
        Ok(EXIT_CERT)
    }
}

pub fn solve(args: &SolveArgs) -> CliResult<i32> {
    positive("--rho", args.rho)?;
    positive("--gamma", args.gamma)?;
    let max_iters = count("--max-iters", args.max_iters)?;
    if !(args.tol >= 0.0) || !args.tol.is_finite() {
        return Err(CliError::usage(format!("--tol must be nonnegative, got {}", args.tol)));
    }
    validate_policy(&args.policy)?;
    let (file, p) = load_instance(&args.input)?;

    let method = match args.method {
        MethodFlag::Jprox => Method::JacobiProximal,
        MethodFlag::JacobiPlain => Method::JacobiPlain,
        MethodFlag::GaussSeidel => Method::GaussSeidel,
        MethodFlag::DualDecomp => Method::DualDecomposition(DualDecompositionParams::default()),
    };
    let policy = match method {
        Method::JacobiProximal => build_policy(&args.policy, &file, &p, args.rho, args.gamma)?,
        _ => ProximalPolicy::None,
    };
    let params = SolverParams {
        max_iters,
        dis_tol: args.tol,
        ..SolverParams::new(args.rho, args.gamma, policy.clone())
    };
    params.validate().map_err(solve_error)?;
    let reference = reference_point(&file, &p, &params)?;

    let lyapunov = if method == Method::JacobiProximal && args.gamma < 2.0 {
        match certify_policy(&p, args.rho, args.gamma, &policy, &CertifyOptions::default()) {
            Ok(cert) if cert.passed => Lyapunov::from_certificate(&p, &cert, &reference).ok(),
            Ok(cert) => {
                eprintln!(
                    "note: parameters are not certified ({} failed conditions)",
                    cert.failures.len()
                );
                None
            }
            Err(e) => {
                eprintln!("note: certification unavailable: {e}");
                None
            }
        }
    } else {
        None
    };
    let u0 = match args.init {
        InitFlag::Zero => PrimalDualPoint::zeros(&p),
        InitFlag::Reference => reference.clone(),
    };
    let solver = Solver::new(&p, method, params).map_err(solve_error)?;
    let trace = solver
        .run(&u0, Some(&reference), lyapunov.as_ref().map(|l| l as &dyn Potential))
        .map_err(solve_error)?;

    write_trace_file(&args.output, &trace).map_err(|e| CliError::io(e.to_string()))?;
    println!("wrote {}", args.output.display());
    if args.plot {
        let svg_path = args.output.with_extension("svg");
        let series = vec![Series {
            label: format!("rho={} gamma={}", args.rho, args.gamma),
            points: trace
                .records
                .iter()
                .filter_map(|r| r.dis.map(|d| (r.k as f64, d)))
                .collect(),
        }];
        fs::write(&svg_path, log_plot("dis(u^k)", "dis", &series)).map_err(|e| CliError::io(e.to_string()))?;
        println!("wrote {}", svg_path.display());
    }
    println!(
        "status = {:?}, iterations = {}, final dis = {}",
        trace.status,
        trace.iterations(),
        trace.final_dis().map_or("n/a".into(), |d| format!("{d:.6e}"))
    );
    if trace.status == Status::Diverged {
        eprintln!("solver diverged");
        return Ok(EXIT_DIVERGED);
    }
    Ok(EXIT_OK)
}

pub fn sweep(args: &SweepArgs) -> CliResult<i32> {
    let max_iters = count("--max-iters", args.max_iters)?;
    validate_policy(&args.policy)?;
    for (flag, grid) in [("--rho-grid", &args.rho_grid), ("--gamma-grid", &args.gamma_grid)] {
        if let Some(g) = grid {
            if g.is_empty() {
                return Err(CliError::usage(format!("{flag} must not be empty")));
            }
            for &v in g {
                positive(flag, v)?;
            }
        }
    }
    let (file, p) = load_instance(&args.input)?;
    let mut config = SweepConfig::for_blocks(p.n_blocks());
    if let Some(g) = &args.rho_grid {
        config.rho_grid = g.clone();
    }
    if let Some(g) = &args.gamma_grid {
        config.gamma_grid = g.clone();
    }
    config.max_iters = max_iters;
    let seed = file.seed.unwrap_or(0);
    config.seeds = vec![seed];
    let choice = policy_choice(&args.policy, &file, p.n_blocks())?;

    // the iterative reference uses the middle of the grid with a certified default
    let reference = match file.optimum() {
        Some(r) => r,
        None => {
            let rho = 1.0;
            let gamma = 1.5;
            let (policy, _) =
                resolve_policy(&p, rho, gamma, &PolicyChoice::AutoTau(TauKind::Standard)).map_err(experiment_error)?;
            reference_point(&file, &p, &SolverParams::new(rho, gamma, policy))?
        }
    };
    let instances = [SweepInstance {
        problem: p,
        reference,
        seed,
    }];
    let table = run_sweep(&instances, &config, &choice, None).map_err(experiment_error)?;
    let manifest = write_sweep(&args.output, &config, &table).map_err(|e| CliError::io(e.to_string()))?;
    println!("wrote {} cells to {}", manifest.cells.len(), args.output.display());
    print!("{}", rate_table(&manifest));
    let ok = manifest
        .cells
        .iter()
        .any(|c| c.trace_file.is_some() && c.status != Some(Status::Diverged));
    Ok(if ok { EXIT_OK } else { EXIT_DIVERGED })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("-".into(), |x| format!("{x:.digits$}"))
}

/// Text table of fitted rates against the certified factor.
pub fn rate_table(manifest: &Manifest) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>10} {:>6} {:>5} {:>9} {:>9} {:>14} {:>12} {:>8} {:>12} {:>8}",
        "rho", "gamma", "seed", "status", "certified", "sigma", "dis_rate", "dis_r2", "phi_rate", "phi_ok"
    );
    for c in &manifest.cells {
        let sigma = c.certificate.as_ref().and_then(|x| x.sigma);
        let phi_rate = c.phi_rate.map(|f| f.rate);
        let phi_ok = match (c.certified, phi_rate, sigma) {
            (true, Some(r), Some(s)) => {
                if r <= s + RATE_SLACK {
                    "yes"
                } else {
                    "NO"
                }
            }
            _ => "-",
        };
        let status = match c.status {
            Some(Status::Converged) => "converged",
            Some(Status::MaxIters) => "max_iters",
            Some(Status::Diverged) => "diverged",
            None => "error",
        };
        let _ = writeln!(
            out,
            "{:>10} {:>6} {:>5} {:>9} {:>9} {:>14} {:>12} {:>8} {:>12} {:>8}",
            c.rho,
            c.gamma,
            c.seed,
            status,
            if c.certified { "yes" } else { "no" },
            fmt_opt(sigma, 10),
            fmt_opt(c.dis_rate.map(|f| f.rate), 6),
            fmt_opt(c.dis_rate.map(|f| f.r_squared), 4),
            fmt_opt(phi_rate, 6),
            phi_ok
        );
    }
    out
}

fn dis_points(rows: &[TraceRow]) -> Vec<(f64, f64)> {
    rows.iter().filter_map(|r| r.dis.map(|d| (r.k as f64, d))).collect()
}

pub fn report(args: &ReportArgs) -> CliResult<i32> {
    let manifest = Manifest::read(&args.input).map_err(|e| CliError::io(format!("cannot read sweep: {e}")))?;
    let out_dir: PathBuf = args.output.clone().unwrap_or_else(|| args.input.clone());
    fs::create_dir_all(&out_dir).map_err(|e| CliError::io(e.to_string()))?;

    let mut traces = Vec::new();
    for cell in &manifest.cells {
        if let Some(name) = &cell.trace_file {
            let rows =
                read_trace_file(&args.input.join(name)).map_err(|e| CliError::io(format!("trace {name}: {e}")))?;
            traces.push((cell.rho, cell.gamma, cell.seed, rows));
        }
    }
    if traces.is_empty() {
        return Err(CliError::io(format!("no traces in {}", args.input.display())));
    }
    let seeds: BTreeSet<u64> = traces.iter().map(|t| t.2).collect();
    let multi_seed = seeds.len() > 1;
    let mut written = 0;
    for &seed in &seeds {
        let suffix = if multi_seed {
            format!("_seed{seed}")
        } else {
            String::new()
        };
        for &gamma in &manifest.config.gamma_grid {
            let series: Vec<Series> = manifest
                .config
                .rho_grid
                .iter()
                .filter_map(|&rho| {
                    traces
                        .iter()
                        .find(|t| t.0 == rho && t.1 == gamma && t.2 == seed)
                        .map(|t| Series {
                            label: format!("rho = {rho}"),
                            points: dis_points(&t.3),
                        })
                })
                .collect();
            if series.is_empty() {
                continue;
            }
            let svg = log_plot(&format!("fixed gamma = {gamma}"), "dis", &series);
            fs::write(out_dir.join(format!("fixed_gamma_{gamma}{suffix}.svg")), svg)
                .map_err(|e| CliError::io(e.to_string()))?;
            written += 1;
        }
        for &rho in &manifest.config.rho_grid {
            let series: Vec<Series> = manifest
                .config
                .gamma_grid
                .iter()
                .filter_map(|&gamma| {
                    traces
                        .iter()
                        .find(|t| t.0 == rho && t.1 == gamma && t.2 == seed)
                        .map(|t| Series {
                            label: format!("gamma = {gamma}"),
                            points: dis_points(&t.3),
                        })
                })
                .collect();
            if series.is_empty() {
                continue;
            }
            let svg = log_plot(&format!("fixed rho = {rho}"), "dis", &series);
            fs::write(out_dir.join(format!("fixed_rho_{rho}{suffix}.svg")), svg)
                .map_err(|e| CliError::io(e.to_string()))?;
            written += 1;
        }
    }
    let table = rate_table(&manifest);
    fs::write(out_dir.join("rates.txt"), &table).map_err(|e| CliError::io(e.to_string()))?;
    print!("{table}");
    println!("wrote {written} plots and rates.txt to {}", out_dir.display());
    Ok(EXIT_OK)
}
