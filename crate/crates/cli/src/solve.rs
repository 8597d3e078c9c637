use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cdst_core::oracle::exact_cost_distance;
use cdst_core::pipeline::{
    build_base, solve_with_base, verify_certificate, BaseMethod, Solution, StrategyConfig, CSV_HEADER,
};
use cdst_core::{load_instance, BaseTree, Error, Instance};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::{read_file, write_file, RunManifest};
use crate::{CompareArgs, SolveArgs, StrategyArgs};

fn config_of(args: &StrategyArgs) -> CliResult<StrategyConfig> {
    let cfg = match &args.config {
        Some(path) => StrategyConfig::from_json(&read_file(path)?)?,
        None => StrategyConfig {
            base: args.base.clone(),
            reconnect: args.reconnect.into(),
            root_mode: args.root.into(),
            b: args.b,
            mu_policy: args.mu_policy,
        },
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn load(path: &Path) -> CliResult<Instance> {
    Ok(load_instance(&read_file(path)?)?)
}

fn base_for(inst: &Instance, method: &BaseMethod) -> CliResult<BaseTree> {
    match method {
        BaseMethod::External(path) => Ok(BaseTree::from_json(inst, &read_file(path)?)?),
        other => Ok(build_base(inst, other)?),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

/// Exact optimum if the instance is within the oracle budget.
fn oracle_optimum(inst: &Instance) -> CliResult<Option<f64>> {
    match exact_cost_distance(inst) {
        Ok(r) => Ok(Some(r.optimum)),
        Err(Error::Unsupported(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn run_solve(args: SolveArgs) -> CliResult<()> {
    let cfg = config_of(&args.strategy)?;
    let inst = load(&args.instance)?;
    let base = base_for(&inst, &cfg.base)?;
    let mut sol = solve_with_base(&inst, &base, &cfg)?;
    if args.oracle {
        match oracle_optimum(&inst)? {
            Some(opt) => sol.certificate.lower_bound_exact = Some(opt),
            None => eprintln!("note: oracle budget exceeded, no exact optimum"),
        }
    }
    let id = stem(&args.instance);
    let report = verify_certificate(&sol, &inst);
    if let Some(out) = &args.out {
        let mut manifest = RunManifest::new("solve", serde_json::to_value(&cfg).expect("config serializes"));
        manifest.instance_ids.push(id.clone());
        let files = [
            (format!("{id}.solution.json"), serde_json::to_string_pretty(&sol).expect("solution serializes")),
            (
                format!("{id}.certificate.json"),
                serde_json::to_string_pretty(&json!({ "certificate": sol.certificate, "report": report }))
                    .expect("certificate serializes"),
            ),
            (format!("{id}.trace.jsonl"), sol.trace_jsonl()),
            (format!("{id}.csv"), format!("{CSV_HEADER}\n{}\n", sol.csv_row(&id, &cfg.label()))),
        ];
        for (name, text) in files {
            let path = out.join(name);
            write_file(&path, &text)?;
            manifest.outputs.push(path.display().to_string());
        }
        manifest.write(out)?;
    }
    let c = &sol.certificate;
    eprintln!(
        "cost {} bound {} (C = {}, D = {}, mu = {}, b = {}); certificate {}",
        c.actual_cost,
        c.proven_bound,
        c.c,
        c.d,
        c.mu,
        c.b,
        if report.passed { "passed" } else { "FAILED" }
    );
    println!("{CSV_HEADER}");
    println!("{}", sol.csv_row(&id, &cfg.label()));
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Failed(report.failures.join("; ")))
    }
}

pub const COMPARE_HEADER: &str = "instance,strategy,C,D,mu,bound,cost,lower_bound,opt,ratio,note";

struct Row {
    line: String,
    ratio: f64,
    failed: bool,
}

fn is_instance_file(path: &Path) -> bool {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    !(name == "manifest.json"
        || name.ends_with(".opt.json")
        || name.ends_with(".adv.json")
        || name.ends_with(".solution.json")
        || name.ends_with(".certificate.json"))
}

fn compare_one(path: &Path, configs: &[StrategyConfig], args: &CompareArgs) -> CliResult<Vec<Row>> {
    let inst = load(path)?;
    let id = stem(path);
    let opt = if args.oracle { oracle_optimum(&inst)? } else { None };
    let companion = match &args.companion {
        Some(tag) => Some(base_for(&inst, &BaseMethod::External(path.with_file_name(format!("{id}.{tag}.json"))))?),
        None => None,
    };
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        let base = match &companion {
            Some(tree) => tree.clone(),
            None => base_for(&inst, &cfg.base)?,
        };
        let sol: Solution = solve_with_base(&inst, &base, cfg)?;
        let report = verify_certificate(&sol, &inst);
        let c = &sol.certificate;
        let denom = opt.unwrap_or(c.lower_bound);
        let ratio = if denom > 0.0 { c.actual_cost / denom } else { 1.0 };
        let mut note = Vec::new();
        if args.oracle && opt.is_none() {
            note.push("oracle budget exceeded".to_string());
        }
        if !report.passed {
            note.push(format!("certificate failed: {}", report.failures.join(" / ")));
        }
        let mut line = String::new();
        let _ = write!(
            line,
            "{id},{},{},{},{},{},{},{},{},{ratio},{}",
            cfg.label(),
            c.c,
            c.d,
            c.mu,
            c.proven_bound,
            c.actual_cost,
            c.lower_bound,
            opt.map(|o| o.to_string()).unwrap_or_default(),
            note.join(" ; ").replace(',', ";")
        );
        rows.push(Row { line, ratio, failed: !report.passed });
    }
    Ok(rows)
}

pub fn run_compare(args: CompareArgs) -> CliResult<()> {
    let pattern = glob::glob(&args.instances).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut paths: Vec<PathBuf> = pattern
        .filter_map(|p| p.ok())
        .filter(|p| is_instance_file(p))
        .collect();
    paths.sort_by_key(|p| (stem(p), p.clone()));
    let configs: Vec<StrategyConfig> = args
        .strategies
        .iter()
        .map(|&(reconnect, root)| {
            StrategyConfig::new(args.base.clone(), reconnect, root).with_mu_policy(args.mu_policy)
        })
        .collect();
    for cfg in &configs {
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let results: Vec<CliResult<Vec<Row>>> = paths
        .par_iter()
        .map(|p| compare_one(p, &configs, &args))
        .collect();
    let mut report = format!("{COMPARE_HEADER}\n");
    let mut max_ratio: Option<f64> = None;
    let mut failures = 0;
    for rows in results {
        for row in rows? {
            report.push_str(&row.line);
            report.push('\n');
            max_ratio = Some(max_ratio.map_or(row.ratio, |m: f64| m.max(row.ratio)));
            failures += usize::from(row.failed);
        }
    }
    if let Some(m) = max_ratio {
        let _ = writeln!(report, "max,,,,,,,,,{m},");
    }
    match &args.out {
        Some(out) => {
            let path = out.join("report.csv");
            write_file(&path, &report)?;
            let mut manifest = RunManifest::new(
                "compare",
                json!({ "instances": args.instances, "configs": configs, "companion": args.companion, "oracle": args.oracle }),
            );
            manifest.instance_ids = paths.iter().map(|p| stem(p)).collect();
            manifest.outputs.push(path.display().to_string());
            manifest.write(out)?;
        }
        None => print!("{report}"),
    }
    if failures > 0 {
        return Err(CliError::Failed(format!("{failures} certificate checks failed")));
    }
    Ok(())
}
