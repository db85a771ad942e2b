use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cogharvest::allocation::{allocate_baseline, allocate_efm, efm_factor, initial_thetas, satisfied_rt_count};
use cogharvest::model::evaluate_constraints;
use cogharvest::oracle::{constrained_grid_solve, exhaustive_allocation_with, grid_theta_optimum, GridSpec};
use cogharvest::scenario::{
    experiment_config, format_sig, generate_scenario, run_experiment_with, write_config, write_results, ScenarioConfig,
    EXPERIMENTS,
};
use cogharvest::structopt::{
    closed_form_solve, dual_subgradient_solve, solve_structure, DualConfig, SolveFlag, SolveReport,
};
use cogharvest::{Allocation, Error, Execution, Scenario};
use serde_json::json;

use crate::{Cli, Command, DualArgs, Input, Method};

/// Environment variable that relative output paths are resolved against.
pub const OUT_DIR_VAR: &str = "COGHARVEST_OUT_DIR";

/// Exit code for infeasible or non-converged results.
const NOT_CONVERGED: u8 = 2;

pub fn run(cli: Cli) -> Result<ExitCode> {
    let exec = execution(cli.jobs)?;
    match cli.command {
        Command::Generate {
            input,
            output,
            write_config: cfg_out,
        } => generate(&input, output, cfg_out),
        Command::Allocate {
            input,
            baseline,
            output,
        } => allocate(&input, baseline, output),
        Command::Solve {
            input,
            method,
            dual,
            output,
        } => solve(&input, method, dual_config(&dual, exec), output),
        Command::Validate { input, dual } => validate(&input, dual_config(&dual, exec), exec),
        Command::Experiment { name, input, output } => experiment(&name, &input, output, exec),
    }
}

fn execution(jobs: Option<usize>) -> Result<Execution> {
    match jobs {
        None => Ok(Execution::default()),
        Some(0) => bail!("--jobs must be at least 1"),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            #[cfg(feature = "parallel")]
            {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("setting up the thread pool")?;
                Ok(Execution::Parallel)
            }
            #[cfg(not(feature = "parallel"))]
            {
                log::warn!("built without parallel support; ignoring --jobs {n}");
                Ok(Execution::Sequential)
            }
        }
    }
}

fn dual_config(args: &DualArgs, exec: Execution) -> DualConfig {
    DualConfig {
        step_scale: args.step_scale,
        tol_dual: args.tol_dual,
        tol_primal: args.tol_primal,
        max_iterations: args.max_iterations,
        execution: exec,
    }
}

/// Resolves an output path: relative paths land in `$COGHARVEST_OUT_DIR`
/// when it is set.
fn output_path(path: Option<PathBuf>, default: &str) -> Result<PathBuf> {
    let path = path.unwrap_or_else(|| PathBuf::from(default));
    let path = match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}

fn load_config(input: &Input, base: ScenarioConfig) -> Result<ScenarioConfig> {
    let cfg = match &input.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            base.merge(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => base,
    };
    cfg.with_overrides(&input.overrides).context("in --set")
}

fn load_scenario(input: &Input) -> Result<Scenario> {
    if let Some(path) = &input.scenario {
        if !input.overrides.is_empty() {
            bail!("--set applies to configurations, not to scenario files");
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    Ok(generate_scenario(&load_config(input, ScenarioConfig::default())?)?)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn list(xs: &[f64]) -> String {
    let v: Vec<String> = xs.iter().map(|x| format_sig(*x)).collect();
    format!("[{}]", v.join(", "))
}

fn generate(input: &Input, output: Option<PathBuf>, cfg_out: Option<PathBuf>) -> Result<ExitCode> {
    if input.scenario.is_some() {
        bail!("generate takes a configuration, not a scenario");
    }
    let cfg = load_config(input, ScenarioConfig::default())?;
    let sc = generate_scenario(&cfg)?;
    let path = output_path(output, "scenario.json")?;
    write_json(&path, &serde_json::to_value(&sc)?)?;
    println!(
        "wrote {}: {} SUs, {} PUs, {} of {} sub-channels available (config {})",
        path.display(),
        sc.num_sus(),
        sc.num_pus(),
        sc.available().len(),
        sc.params().num_subchannels,
        cfg.hash()
    );
    if let Some(p) = cfg_out {
        let p = output_path(Some(p), "")?;
        write_config(&cfg, &p)?;
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_allocation(sc: &Scenario, alloc: &Allocation, theta: &[f64]) {
    let slacks = evaluate_constraints(sc, alloc, theta);
    for (i, su) in sc.sus().iter().enumerate() {
        println!(
            "SU {i} ({}, EFM {}): D = {:?}, rate {} of {} required",
            if su.class.is_real_time() { "RT" } else { "NRT" },
            format_sig(efm_factor(su)),
            alloc.subchannels(i),
            format_sig(slacks.achieved_rate[i]),
            format_sig(su.rate_requirement)
        );
    }
}

fn allocate(input: &Input, baseline: bool, output: Option<PathBuf>) -> Result<ExitCode> {
    let sc = load_scenario(input)?;
    let init = initial_thetas(&sc)?;
    let alloc = if baseline {
        allocate_baseline(&sc, &init)?
    } else {
        allocate_efm(&sc, &init)?
    };
    print_allocation(&sc, &alloc, &init);
    let satisfied = satisfied_rt_count(&alloc, &sc, &init);
    let rt = sc.sus().iter().filter(|s| s.class.is_real_time()).count();
    println!("real-time SUs meeting their rate: {satisfied} of {rt}");
    if let Some(p) = output {
        let p = output_path(Some(p), "")?;
        write_json(
            &p,
            &json!({
                "scheme": if baseline { "baseline" } else { "efm" },
                "theta_init": init,
                "allocation": alloc,
                "rt_satisfied": satisfied,
            }),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(sc: &Scenario, alloc: &Allocation, r: &SolveReport) {
    let slacks = evaluate_constraints(sc, alloc, &r.theta);
    println!("{}:", r.method.as_str());
    println!("  converged: {} after {} iterations", r.converged, r.iterations);
    println!("  objective: {} bps/Hz", format_sig(r.objective));
    println!("  theta: {}", list(&r.theta));
    println!("  interference slack (W): {}", list(&slacks.interference));
    println!("  rate slack (bps/Hz): {}", list(&slacks.rate));
    println!("  max normalized violation: {}", format_sig(r.max_constraint_violation));
    for f in &r.flags {
        println!("  flag: {}", serde_json::to_string(f).unwrap_or_default());
    }
}

fn solve(input: &Input, method: Method, cfg: DualConfig, output: Option<PathBuf>) -> Result<ExitCode> {
    let sc = load_scenario(input)?;
    let init = initial_thetas(&sc)?;
    let alloc = allocate_efm(&sc, &init)?;
    let mut reports = Vec::new();
    if matches!(method, Method::Closed | Method::Both) {
        reports.push(closed_form_solve(&sc, &alloc, cfg.tol_primal)?);
    }
    if matches!(method, Method::Dual | Method::Both) {
        reports.push(dual_subgradient_solve(&sc, &alloc, &cfg)?);
    }
    for r in &reports {
        print_report(&sc, &alloc, r);
    }
    if let [a, b] = reports.as_slice() {
        let dtheta = alloc
            .allocated_sus()
            .map(|i| ((a.theta[i] - b.theta[i]) / b.theta[i]).abs())
            .fold(0.0, f64::max);
        let dobj = ((a.objective - b.objective) / b.objective).abs();
        const AGREEMENT: f64 = 1e-4;
        println!(
            "agreement: max relative theta difference {}, relative objective difference {} (tolerance {})",
            format_sig(dtheta),
            format_sig(dobj),
            format_sig(AGREEMENT)
        );
        if dtheta <= AGREEMENT && dobj <= AGREEMENT {
            println!("methods agree");
        } else {
            println!("methods differ");
        }
    }
    if let Some(p) = output {
        let p = output_path(Some(p), "")?;
        write_json(&p, &json!({ "allocation": alloc, "reports": reports }))?;
    }
    Ok(if reports.iter().all(|r| r.converged) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NOT_CONVERGED)
    })
}

fn validate(input: &Input, cfg: DualConfig, exec: Execution) -> Result<ExitCode> {
    let sc = load_scenario(input)?;
    let init = initial_thetas(&sc)?;
    let alloc = allocate_efm(&sc, &init)?;
    let grid = GridSpec::default();
    let params = sc.params();

    let closed = closed_form_solve(&sc, &alloc, cfg.tol_primal)?;
    let mut worst = 0.0f64;
    for i in alloc.allocated_sus() {
        let g = grid_theta_optimum(sc.su(i), alloc.subchannels(i), params, &grid)?;
        worst = worst.max(((closed.theta[i] - g.theta) / g.theta).abs());
    }
    println!(
        "closed form vs grid oracle (unconstrained): max relative theta deviation {}",
        format_sig(worst)
    );

    let mut ok = true;
    let solved = solve_structure(&sc, &alloc, &cfg)?;
    let oracle = constrained_grid_solve(&sc, &alloc, &grid)?;
    if oracle.flags.contains(&SolveFlag::EmptyFeasibleSet) {
        println!("constrained grid oracle: no feasible point");
        ok = false;
    } else {
        println!(
            "{} vs constrained grid oracle: objective {} vs {}, relative gap {}",
            solved.method.as_str(),
            format_sig(solved.objective),
            format_sig(oracle.objective),
            format_sig(1.0 - solved.objective / oracle.objective)
        );
    }
    if !solved.converged {
        println!(
            "structure solve did not reach a feasible point (max violation {})",
            format_sig(solved.max_constraint_violation)
        );
        ok = false;
    }

    match exhaustive_allocation_with(&sc, &init, &grid, exec) {
        Ok((_, best)) => {
            let efm_grid = constrained_grid_solve(&sc, &alloc, &grid)?;
            println!(
                "EFM allocation vs exhaustive allocation: objective ratio {}",
                format_sig(efm_grid.objective / best)
            );
        }
        Err(Error::TooLarge(why)) => println!("exhaustive allocation skipped: {why}"),
        Err(Error::NoSolution(why)) => println!("exhaustive allocation found nothing feasible: {why}"),
        Err(e) => return Err(e.into()),
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NOT_CONVERGED)
    })
}

fn experiment(name: &str, input: &Input, output: Option<PathBuf>, exec: Execution) -> Result<ExitCode> {
    if name == "list" {
        for e in EXPERIMENTS {
            println!("{e}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    if input.scenario.is_some() {
        bail!("experiments generate their own scenarios; pass --config instead of --scenario");
    }
    let cfg = load_config(input, experiment_config(name)?)?;
    let result = run_experiment_with(name, &cfg, exec)?;
    let path = output_path(output, &format!("{name}.csv"))?;
    write_results(&result, &path)?;
    println!(
        "wrote {} rows to {} (config {})",
        result.rows.len(),
        path.display(),
        result.config_hash
    );
    Ok(ExitCode::SUCCESS)
}
