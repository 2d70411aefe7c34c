//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mccwe_core::configlp::{
    fractional_opt, is_mccwe_allocation, is_supportable_over, supporting_prices, walrasian_prices,
};
use mccwe_core::equilibria::{verify, VerifyMode};
use mccwe_core::instances::{
    bundling_necessity, corpus, fig1a, fig1b, nonuniform_identical_budget, parse_instance,
    random_single_minded, random_superadditive, random_uniform_budget_additive, revenue_example,
    write_instance,
};
use mccwe_core::mechanisms::{
    bundle_efficient_full_surplus, identical_budget_cleanup, single_minded_mccwe,
    superadditive_mccwe, uniform_budget_additive_mccwe, MechanismRun,
};
use mccwe_core::oracle::{
    best_mccwe, best_single_minded_item_pricing, optimal_integral, optimal_over_partition,
    OracleBudget,
};
use mccwe_core::rational::{format_rat, int, le_times_sqrt, rat};
use mccwe_core::valuation::classify;
use mccwe_core::{
    induced_partition, revenue, social_welfare, Allocation, Error, Instance, ItemSet, Outcome,
    Partition, Prices, Rat,
};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn err(e: Error) -> String {
    e.to_string()
}

fn budget() -> OracleBudget {
    OracleBudget::default()
}

fn opt(instance: &Instance) -> Result<mccwe_core::oracle::IntegralOpt, String> {
    optimal_integral(instance, &mut budget()).map_err(err)
}

fn check_mccwe(instance: &Instance, outcome: &Outcome) -> Result<(), String> {
    let report = verify(instance, outcome, VerifyMode::Mccwe).map_err(err)?;
    ensure!(
        report.ok,
        "{}: outcome fails MC-CWE: {:?}",
        instance.name(),
        report.violations
    );
    Ok(())
}

fn set(items: &[usize]) -> ItemSet {
    ItemSet::from_items(items.iter().copied())
}

fn fig1a_gap() -> Check {
    let start = Instant::now();
    let inst = fig1a(rat(1, 10)).map_err(err)?;
    let frac = fractional_opt(&inst, &Partition::singletons(4)).map_err(err)?;
    ensure!(frac.value == int(8), "fractional {}", frac.value);
    let o = opt(&inst)?;
    ensure!(o.value == rat(79, 10), "integral {}", o.value);
    let best = best_mccwe(&inst, &mut budget()).map_err(err)?;
    ensure!(best.value == int(7), "best MC-CWE {}", best.value);
    check_mccwe(&inst, &best.outcome)?;
    let ratio = &best.value / &o.value;
    ensure!(ratio == rat(70, 79), "ratio {ratio}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok("fractional 8, integral 79/10, best MC-CWE 7, ratio 70/79".into())
}

fn fig1b_no_we() -> Check {
    let inst = fig1b();
    let singletons = Partition::singletons(inst.m());
    let frac = fractional_opt(&inst, &singletons).map_err(err)?;
    ensure!(frac.value == int(8), "fractional {}", frac.value);
    let o = opt(&inst)?;
    ensure!(o.value == int(7), "integral {}", o.value);
    let walrasian = is_supportable_over(&inst, &o.allocation, &singletons).map_err(err)?;
    ensure!(!walrasian, "optimum priced as a WE");
    ensure!(
        matches!(
            walrasian_prices(&inst, &o.allocation),
            Err(Error::NotMccwe { .. })
        ),
        "walrasian_prices found item prices"
    );
    let run = identical_budget_cleanup(&inst, &o.allocation).map_err(err)?;
    check_mccwe(&inst, &run.outcome)?;
    let w = social_welfare(&inst, run.outcome.allocation());
    ensure!(w == int(7), "cleanup welfare {w}");
    Ok("fractional 8, integral 7, no WE, cleanup MC-CWE at welfare 7".into())
}

fn revenue_example_gap() -> Check {
    let mut ratios = Vec::new();
    for r in [10, 100, 1000] {
        let inst = revenue_example(int(r)).map_err(err)?;
        let x = Allocation::new(3, vec![set(&[0]), set(&[1, 2])]).map_err(err)?;
        let we =
            Outcome::new(x.clone(), Prices::Items(vec![int(1), int(2), int(2)])).map_err(err)?;
        let report = verify(&inst, &we, VerifyMode::We).map_err(err)?;
        ensure!(report.ok, "R={r}: item prices (1,2,2) not a WE");
        ensure!(revenue(&inst, &we) == int(5), "R={r}: WE revenue");
        let mc = Outcome::new(
            x,
            Prices::Bundles {
                agents: vec![Some(int(1)), Some(int(r + 2))],
                unallocated: None,
            },
        )
        .map_err(err)?;
        check_mccwe(&inst, &mc)?;
        let rev = revenue(&inst, &mc);
        ensure!(rev == int(r + 3), "R={r}: MC-CWE revenue {rev}");
        ratios.push(rev / int(5));
    }
    ensure!(
        ratios == vec![rat(13, 5), rat(103, 5), rat(1003, 5)],
        "ratios {ratios:?}"
    );
    Ok("WE revenue 5, MC-CWE revenue R+3 for R = 10, 100, 1000 (ratio (R+3)/5)".into())
}

fn bundling_necessity_full_surplus() -> Check {
    let inst = bundling_necessity(16).map_err(err)?;
    let o = opt(&inst)?;
    ensure!(o.value == int(16), "OPT {}", o.value);
    let pricing = best_single_minded_item_pricing(&inst, &mut budget()).map_err(err)?;
    ensure!(
        pricing.welfare == int(9),
        "item pricing {}",
        pricing.welfare
    );
    ensure!(
        pricing.welfare == int(1) + int(2) * int(4),
        "item pricing differs from 1 + 2 sqrt(m)"
    );
    for (name, run) in [
        ("superadditive", superadditive_mccwe(&inst).map_err(err)?),
        ("single-minded", single_minded_mccwe(&inst).map_err(err)?),
    ] {
        check_mccwe(&inst, &run.outcome)?;
        let w = social_welfare(&inst, run.outcome.allocation());
        let rev = revenue(&inst, &run.outcome);
        ensure!(
            w == int(16) && rev == int(16),
            "{name}: welfare {w} revenue {rev}"
        );
    }
    Ok("OPT 16, item pricing 9, both mechanisms welfare = revenue = 16".into())
}

fn nonuniform_example() -> Check {
    let inst = nonuniform_identical_budget(rat(1, 8)).map_err(err)?;
    let frac = fractional_opt(&inst, &Partition::singletons(3)).map_err(err)?;
    ensure!(frac.value == rat(17, 4), "fractional {}", frac.value);
    let o = opt(&inst)?;
    ensure!(o.value == rat(33, 8), "integral {}", o.value);
    let mut best_pair = Rat::zero();
    for (pair, single) in [([0, 1], 2), ([0, 2], 1), ([1, 2], 0)] {
        let p = Partition::new(3, vec![set(&pair), set(&[single])]).map_err(err)?;
        let v = optimal_over_partition(&inst, &p, &mut budget())
            .map_err(err)?
            .value;
        ensure!(v <= int(4), "pair {pair:?} gives {v}");
        best_pair = best_pair.max(v);
    }
    Ok(format!(
        "fractional 17/4, integral 33/8, best pair bundling {}",
        format_rat(&best_pair)
    ))
}

fn uniform_budget_additive_suite() -> Check {
    let mut worst: Option<(Rat, u64)> = None;
    for seed in 0..500u64 {
        let m = 1 + (seed % 7) as usize;
        let n = 1 + (seed / 7 % 4) as usize;
        let inst = random_uniform_budget_additive(m, n, false, seed).map_err(err)?;
        let o = opt(&inst)?;
        let run = uniform_budget_additive_mccwe(&inst, &o.allocation).map_err(err)?;
        check_mccwe(&inst, &run.outcome)?;
        let x = run.outcome.allocation();
        let w = social_welfare(&inst, x);
        ensure!(
            int(2) * &w >= o.value,
            "seed {seed}: welfare {w} below half of {}",
            o.value
        );
        for (i, b) in x.bundles().iter().enumerate() {
            if b.is_empty() {
                continue;
            }
            let own = inst.agent(i).value(*b);
            let top = inst.agents().iter().map(|v| v.value(*b)).max().unwrap();
            ensure!(
                own == top,
                "seed {seed}: agent {i} values {b} at {own} < {top}"
            );
        }
        let rev = revenue(&inst, &run.outcome);
        ensure!(rev == w, "seed {seed}: revenue {rev} != welfare {w}");
        if o.value.is_positive() {
            let r = w / &o.value;
            if worst.as_ref().is_none_or(|(best, _)| r < *best) {
                worst = Some((r, seed));
            }
        }
    }
    let (r, seed) = worst.unwrap();
    Ok(format!(
        "500 instances, worst welfare/SW(X) {} (seed {seed})",
        format_rat(&r)
    ))
}

fn superadditive_no_gap() -> Check {
    for seed in 0..200u64 {
        let m = 1 + (seed % 6) as usize;
        let n = 1 + (seed / 6 % 4) as usize;
        let inst = random_superadditive(m, n, seed).map_err(err)?;
        let o = opt(&inst)?;
        let best = best_mccwe(&inst, &mut budget()).map_err(err)?;
        ensure!(
            best.value == o.value,
            "seed {seed}: best MC-CWE {} < OPT {}",
            best.value,
            o.value
        );
        let p = induced_partition(&o.allocation).partition;
        let run = bundle_efficient_full_surplus(&inst, &p).map_err(err)?;
        check_mccwe(&inst, &run.outcome)?;
        let rev = revenue(&inst, &run.outcome);
        ensure!(
            rev == o.value,
            "seed {seed}: revenue {rev} != OPT {}",
            o.value
        );
    }
    Ok("200 instances, best MC-CWE = OPT = full-surplus revenue".into())
}

fn supporting_prices_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut yes, mut no) = (0, 0);
    for seed in 0..200u64 {
        let m = 1 + (seed % 5) as usize;
        let n = 1 + (seed / 5 % 4) as usize;
        let inst = match seed % 4 {
            0 => random_superadditive(m, n, seed),
            1 => random_single_minded(m, n, seed),
            2 => random_uniform_budget_additive(m, n, false, seed),
            _ => random_uniform_budget_additive(m, n, true, seed),
        }
        .map_err(err)?;
        let code: Vec<usize> = (0..m).map(|_| rng.gen_range(0..=n)).collect();
        let x = Allocation::from_assignment(m, n, &code).map_err(err)?;
        let claimed = is_mccwe_allocation(&inst, &x).map_err(err)?;
        match supporting_prices(&inst, &x) {
            Ok(outcome) => {
                let ok = verify(&inst, &outcome, VerifyMode::Mccwe).map_err(err)?.ok;
                ensure!(
                    claimed && ok,
                    "seed {seed}: claimed {claimed}, verified {ok}"
                );
                yes += 1;
            }
            Err(Error::NotMccwe { gap }) => {
                ensure!(!claimed, "seed {seed}: MC-CWE but no supporting prices");
                ensure!(gap.is_positive(), "seed {seed}: gap {gap}");
                no += 1;
            }
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
    }
    Ok(format!("{yes} supported, {no} with positive gap"))
}

fn sqrt_envelope() -> Check {
    let mut instances: Vec<Instance> = corpus();
    for seed in 0..200u64 {
        let m = 1 + (seed % 8) as usize;
        let n = 1 + (seed / 8 % 5) as usize;
        instances.push(random_superadditive(m.min(6), n.min(4), seed).map_err(err)?);
        instances.push(random_single_minded(m, n, seed).map_err(err)?);
    }
    let mut runs = 0;
    let mut worst = (int(1), String::new());
    for inst in &instances {
        let class = classify(inst).map_err(err)?;
        let o = opt(inst)?;
        let mut mechanisms: Vec<(&str, MechanismRun)> = Vec::new();
        if class.superadditive {
            let run = superadditive_mccwe(inst).map_err(err)?;
            let n = inst.n();
            ensure!(
                run.trace.count("phase2") <= n * n,
                "{}: {} merges",
                inst.name(),
                run.trace.count("phase2")
            );
            mechanisms.push(("superadditive", run));
        }
        if class.single_minded {
            mechanisms.push(("single-minded", single_minded_mccwe(inst).map_err(err)?));
        }
        for (name, run) in mechanisms {
            check_mccwe(inst, &run.outcome)?;
            let w = social_welfare(inst, run.outcome.allocation());
            let m = int(inst.m() as i64);
            ensure!(
                le_times_sqrt(&o.value, &(int(2) * &w), &m),
                "{} ({name}): OPT {} > 2 sqrt(m) * {w}",
                inst.name(),
                o.value
            );
            if w.is_positive() && o.value.clone() / &w > worst.0 {
                worst = (o.value.clone() / &w, format!("{} {name}", inst.name()));
            }
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} runs, worst OPT/welfare {} ({})",
        format_rat(&worst.0),
        worst.1
    ))
}

fn mccwe(dir: &Path, args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mccwe"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn determinism_and_format() -> Check {
    let mut invocations = 0;
    for inst in corpus() {
        let text = write_instance(&inst);
        let back = parse_instance(&text).map_err(err)?;
        ensure!(back == inst, "{}: parse(write) differs", inst.name());
        ensure!(
            write_instance(&back) == text,
            "{}: write not stable",
            inst.name()
        );
    }
    let runs: Vec<(Instance, &str)> = vec![
        (fig1a(rat(1, 10)).map_err(err)?, "uba"),
        (fig1b(), "cleanup"),
        (random_superadditive(4, 3, 5).map_err(err)?, "fullsurplus"),
        (bundling_necessity(9).map_err(err)?, "superadditive"),
        (bundling_necessity(16).map_err(err)?, "singleminded"),
        (random_superadditive(5, 3, 11).map_err(err)?, "logbundle"),
    ];
    let mut transcripts: Vec<Vec<Vec<u8>>> = Vec::new();
    for round in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let d = dir.path();
        let mut transcript = Vec::new();
        for (k, (inst, mech)) in runs.iter().enumerate() {
            let input = format!("in{k}.json");
            std::fs::write(d.join(&input), write_instance(inst)).map_err(|e| e.to_string())?;
            let out = format!("out{k}.json");
            let trace = format!("trace{k}.json");
            let mut calls: Vec<Vec<&str>> = vec![
                vec!["solve", mech, "-i", &input, "-o", &out, "--trace", &trace],
                vec!["verify", "-i", &input, "-a", &out, "--mode", "mccwe"],
                vec![
                    "verify", "-i", &input, "-a", &out, "--mode", "cwe", "--json",
                ],
            ];
            // best MC-CWE enumeration is out of reach at m = 16
            if inst.m() <= 9 {
                calls.push(vec!["gap", "-i", &input]);
            }
            for args in calls {
                let (code, stdout) = mccwe(d, &args)?;
                ensure!(code == 0, "round {round}: {args:?} exited {code}");
                transcript.push(stdout);
                invocations += 1;
            }
            for f in [&out, &trace] {
                transcript.push(std::fs::read(d.join(f)).map_err(|e| e.to_string())?);
            }
        }
        transcripts.push(transcript);
    }
    ensure!(
        transcripts[0] == transcripts[1],
        "outputs differ between runs"
    );
    Ok(format!(
        "{} corpus instances round-trip, {} invocations byte-identical",
        corpus().len(),
        invocations / 2
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("fig1a welfare gap", fig1a_gap),
        ("fig1b has no WE, cleanup loses nothing", fig1b_no_we),
        ("bundling raises revenue linearly in R", revenue_example_gap),
        (
            "m = 16 full-surplus example",
            bundling_necessity_full_surplus,
        ),
        ("non-uniform identical-budget example", nonuniform_example),
        (
            "uniform budget-additive property suite",
            uniform_budget_additive_suite,
        ),
        (
            "super-additive instances have no MC-CWE gap",
            superadditive_no_gap,
        ),
        (
            "LP test agrees with supporting prices",
            supporting_prices_round_trip,
        ),
        ("OPT/welfare within 2 sqrt(m)", sqrt_envelope),
        ("determinism and file format", determinism_and_format),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let ms = start.elapsed().as_millis();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{ms} ms]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{ms} ms]", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
