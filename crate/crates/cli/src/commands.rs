use std::fmt;
use std::fs;
use std::path::Path;

use mccwe_core::configlp::fractional_opt;
use mccwe_core::equilibria::{verify, VerifyMode};
use mccwe_core::instances::{
    parse_allocation, parse_instance, parse_outcome, write_instance, write_outcome, write_trace,
    InstanceSpec, RANDOM_FAMILIES,
};
use mccwe_core::mechanisms::{
    bundle_efficient_full_surplus, identical_budget_cleanup, log_bundling_mechanism,
    single_minded_mccwe, superadditive_mccwe, uniform_budget_additive_mccwe, Mechanism,
    MechanismRun,
};
use mccwe_core::oracle::{
    best_mccwe, best_single_minded_item_pricing, optimal_integral, OracleBudget,
};
use mccwe_core::rational::{format_rat, int, to_decimal};
use mccwe_core::{
    induced_partition, revenue, social_welfare, Allocation, Instance, Partition, Rat,
};
use num_traits::Zero;

use crate::report::{verify_json, violation_line, AllocationView, Report};
use crate::Command;

pub enum CliError {
    Core(mccwe_core::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<mccwe_core::Error> for CliError {
    fn from(e: mccwe_core::Error) -> Self {
        CliError::Core(e)
    }
}

/// Standard output plus whether the command succeeded (exit 0) or found a
/// failing check (exit 1).
pub struct Output {
    pub stdout: String,
    pub passed: bool,
}

impl Output {
    fn ok(report: Report) -> Self {
        Output {
            stdout: report.into_string(),
            passed: true,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    parse_instance(&read(path)?).map_err(|e| in_file(path, e))
}

fn load_allocation(path: &Path) -> Result<Allocation, CliError> {
    parse_allocation(&read(path)?).map_err(|e| in_file(path, e))
}

fn in_file(path: &Path, e: mccwe_core::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn run(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Gen {
            family,
            m,
            n,
            seed,
            eps,
            big_r,
            identical_budgets,
            values,
            out,
        } => {
            let spec = InstanceSpec {
                family,
                eps,
                big_r,
                m,
                n,
                seed,
                identical_budgets,
                values,
            };
            let instance = spec.build()?;
            write(&out, &write_instance(&instance))?;
            let mut r = Report::default();
            r.line("instance", instance.name())
                .line("m", instance.m())
                .line("n", instance.n());
            Ok(Output::ok(r))
        }
        Command::Solve {
            mechanism,
            input,
            alloc,
            out,
            trace,
        } => {
            let instance = load_instance(&input)?;
            let start = alloc.as_deref().map(load_allocation).transpose()?;
            let run = run_mechanism(&instance, mechanism, start)?;
            write(&out, &write_outcome(&run.outcome))?;
            if let Some(path) = trace {
                write(&path, &write_trace(&run.trace))?;
            }
            let check = verify(&instance, &run.outcome, VerifyMode::Mccwe)?;
            let x = run.outcome.allocation();
            let mut r = Report::default();
            r.line("mechanism", mechanism)
                .line("instance", instance.name())
                .rat("welfare", &social_welfare(&instance, x))
                .rat("revenue", &revenue(&instance, &run.outcome))
                .line("allocation", AllocationView(&instance, x))
                .line("steps", run.trace.steps.len())
                .line("mccwe", if check.ok { "ok" } else { "fail" });
            for v in &check.violations {
                r.line("violation", violation_line(&instance, v));
            }
            Ok(Output {
                stdout: r.into_string(),
                passed: check.ok,
            })
        }
        Command::Verify {
            input,
            outcome,
            mode,
            json,
        } => {
            let instance = load_instance(&input)?;
            let outcome = parse_outcome(&read(&outcome)?).map_err(|e| in_file(&outcome, e))?;
            let report = verify(&instance, &outcome, mode)?;
            let rev = revenue(&instance, &outcome);
            let welfare = social_welfare(&instance, outcome.allocation());
            let stdout = if json {
                verify_json(&instance, &report, &rev, &welfare)
            } else {
                let mut r = Report::default();
                r.line("mode", mode)
                    .line("ok", report.ok)
                    .rat("revenue", &rev)
                    .rat("welfare", &welfare)
                    .line("violations", report.violations.len());
                for v in &report.violations {
                    r.line("violation", violation_line(&instance, v));
                }
                r.into_string()
            };
            Ok(Output {
                stdout,
                passed: report.ok,
            })
        }
        Command::Oracle {
            input,
            best_mccwe: want_best,
            item_pricing,
        } => {
            let instance = load_instance(&input)?;
            let mut budget = OracleBudget::default();
            let opt = optimal_integral(&instance, &mut budget)?;
            let mut r = Report::default();
            r.line("instance", instance.name())
                .rat("opt", &opt.value)
                .line("opt_allocation", AllocationView(&instance, &opt.allocation));
            if want_best {
                let best = best_mccwe(&instance, &mut OracleBudget::default())?;
                r.rat("best_mccwe", &best.value)
                    .line(
                        "best_mccwe_allocation",
                        AllocationView(&instance, best.outcome.allocation()),
                    )
                    .line("best_mccwe_lps", best.lps_solved);
            }
            if item_pricing {
                let pricing =
                    best_single_minded_item_pricing(&instance, &mut OracleBudget::default())?;
                let winners: Vec<String> = pricing.winners.iter().map(|i| i.to_string()).collect();
                let prices: Vec<String> = pricing.prices.iter().map(format_rat).collect();
                r.rat("item_pricing", &pricing.welfare)
                    .line("item_pricing_winners", winners.join(","))
                    .line("item_pricing_prices", prices.join(","));
            }
            Ok(Output::ok(r))
        }
        Command::Gap { input } => {
            let instance = load_instance(&input)?;
            let frac = fractional_opt(&instance, &Partition::singletons(instance.m()))?;
            let opt = optimal_integral(&instance, &mut OracleBudget::default())?;
            let best = best_mccwe(&instance, &mut OracleBudget::default())?;
            let mut r = Report::default();
            r.line("instance", instance.name())
                .rat("fractional", &frac.value)
                .rat("integral", &opt.value)
                .rat("best_mccwe", &best.value)
                .line("integrality_gap", ratio(&frac.value, &opt.value))
                .line("mccwe_gap", ratio(&opt.value, &best.value));
            Ok(Output::ok(r))
        }
        Command::Bench {
            family,
            trials,
            seed,
            m,
            n,
            mechanism,
            identical_budgets,
        } => bench(family, trials, seed, m, n, mechanism, identical_budgets),
    }
}

/// `a/b` exactly, `1` for `0/0`, `inf` for `a/0`.
fn ratio(a: &Rat, b: &Rat) -> String {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => "1".into(),
        (false, true) => "inf".into(),
        _ => format_rat(&(a / b)),
    }
}

fn run_mechanism(
    instance: &Instance,
    mechanism: Mechanism,
    start: Option<Allocation>,
) -> Result<MechanismRun, CliError> {
    let start_or_opt = |start: Option<Allocation>| -> Result<Allocation, CliError> {
        match start {
            Some(x) => Ok(x),
            None => Ok(optimal_integral(instance, &mut OracleBudget::default())?.allocation),
        }
    };
    let run = match mechanism {
        Mechanism::Superadditive => superadditive_mccwe(instance)?,
        Mechanism::SingleMinded => single_minded_mccwe(instance)?,
        Mechanism::LogBundling => log_bundling_mechanism(instance)?,
        Mechanism::UniformBudgetAdditive => {
            uniform_budget_additive_mccwe(instance, &start_or_opt(start)?)?
        }
        Mechanism::IdenticalBudgetCleanup => {
            identical_budget_cleanup(instance, &start_or_opt(start)?)?
        }
        Mechanism::FullSurplus => {
            let p = match start {
                Some(x) => {
                    instance.check_allocation(&x)?;
                    induced_partition(&x).partition
                }
                None => Partition::singletons(instance.m()),
            };
            bundle_efficient_full_surplus(instance, &p)?
        }
    };
    Ok(run)
}

fn bench(
    family: String,
    trials: u64,
    seed: u64,
    m: usize,
    n: usize,
    mechanism: Option<Mechanism>,
    identical_budgets: bool,
) -> Result<Output, CliError> {
    if !RANDOM_FAMILIES.contains(&family.as_str()) {
        return Err(mccwe_core::Error::BadParams(format!(
            "bench needs a random family ({}), got {family:?}",
            RANDOM_FAMILIES.join(", ")
        ))
        .into());
    }
    if trials == 0 {
        return Err(mccwe_core::Error::BadParams("trials must be positive".into()).into());
    }
    let mechanism = mechanism.unwrap_or(match family.as_str() {
        "random_superadditive" => Mechanism::Superadditive,
        "random_single_minded" => Mechanism::SingleMinded,
        _ => Mechanism::UniformBudgetAdditive,
    });
    let mut worst: Option<(Rat, u64)> = None;
    let mut total = Rat::zero();
    let mut unbounded = 0u64;
    let mut failures = 0u64;
    for t in 0..trials {
        let s = seed.wrapping_add(t);
        let instance = InstanceSpec {
            family: family.clone(),
            m: Some(m),
            n: Some(n),
            seed: Some(s),
            identical_budgets,
            ..Default::default()
        }
        .build()?;
        let opt = optimal_integral(&instance, &mut OracleBudget::default())?;
        let start = mechanism.takes_allocation().then(|| opt.allocation.clone());
        let run = run_mechanism(&instance, mechanism, start)?;
        if !verify(&instance, &run.outcome, VerifyMode::Mccwe)?.ok {
            failures += 1;
        }
        let alg = social_welfare(&instance, run.outcome.allocation());
        let r = if opt.value.is_zero() {
            int(1)
        } else if alg.is_zero() {
            unbounded += 1;
            continue;
        } else {
            opt.value / alg
        };
        total += &r;
        if worst.as_ref().is_none_or(|(w, _)| r > *w) {
            worst = Some((r, s));
        }
    }
    let mut out = Report::default();
    out.line("family", &family)
        .line("mechanism", mechanism)
        .line("trials", trials)
        .line("m", m)
        .line("n", n);
    let counted = trials - unbounded;
    if let Some((w, s)) = worst {
        let mean = total / int(counted as i64);
        out.rat("worst_ratio", &w)
            .line("worst_ratio_decimal", to_decimal(&w, 6))
            .line("worst_seed", s)
            .rat("mean_ratio", &mean)
            .line("mean_ratio_decimal", to_decimal(&mean, 6));
    }
    out.line("zero_welfare_trials", unbounded)
        .line("mccwe_failures", failures);
    Ok(Output {
        stdout: out.into_string(),
        passed: failures == 0,
    })
}
