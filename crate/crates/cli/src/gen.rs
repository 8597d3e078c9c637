use std::path::{Path, PathBuf};

use cdst_core::generators::{gen_graph_family, gen_manhattan_family, gen_random, Backend, WeightDist, WorstCase};
use clap::{Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::{write_file, RunManifest};

#[derive(Debug, Subcommand)]
pub enum Family {
    /// Gadget graph family with its optimal and adversarial trees.
    Graph {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// File stem; defaults to graph_k<k>.
        #[arg(long)]
        name: Option<String>,
    },
    /// Rectilinear family with its optimal and adversarial trees.
    Manhattan {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Seeded random instances, one file per seed.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of terminals.
        #[arg(long)]
        n: usize,
        /// Number of consecutive seeds to generate.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Graph)]
        backend: BackendArg,
        /// Extra non-terminal vertices (graph backend).
        #[arg(long, default_value_t = 2)]
        steiner: usize,
        /// Edges added to the random spanning tree (graph backend); defaults to n.
        #[arg(long)]
        extra_edges: Option<usize>,
        #[arg(long, value_enum, default_value_t = WeightArg::Uniform)]
        weights: WeightArg,
        #[arg(long, default_value_t = 5.0)]
        max_weight: f64,
        #[arg(long, default_value_t = 0.3)]
        zero_prob: f64,
        #[arg(long, default_value_t = 10.0)]
        span: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Graph,
    L1,
    L2,
    Matrix,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    Uniform,
    ZeroInflated,
    Zero,
}

fn usage(e: cdst_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn write_worst_case(wc: &WorstCase, out: &Path, stem: &str, manifest: &mut RunManifest) -> CliResult<()> {
    let files = [
        (format!("{stem}.json"), wc.instance.to_json()),
        (format!("{stem}.opt.json"), wc.optimal.to_json()),
        (format!("{stem}.adv.json"), wc.adversarial.to_json()),
    ];
    for (name, text) in files {
        let path = out.join(name);
        write_file(&path, &text)?;
        println!("{}", path.display());
        manifest.outputs.push(path.display().to_string());
    }
    manifest.instance_ids.push(stem.into());
    Ok(())
}

pub fn run(family: Family) -> CliResult<()> {
    match family {
        Family::Graph { k, beta, out, name } => {
            let wc = gen_graph_family(k, beta).map_err(usage)?;
            let mut manifest = RunManifest::new("gen graph", json!({ "k": k, "beta": beta }));
            write_worst_case(&wc, &out, &name.unwrap_or_else(|| format!("graph_k{k}")), &mut manifest)?;
            manifest.write(&out)
        }
        Family::Manhattan { k, out, name } => {
            let wc = gen_manhattan_family(k).map_err(usage)?;
            let mut manifest = RunManifest::new("gen manhattan", json!({ "k": k }));
            write_worst_case(&wc, &out, &name.unwrap_or_else(|| format!("manhattan_k{k}")), &mut manifest)?;
            manifest.write(&out)
        }
        Family::Random {
            seed,
            n,
            count,
            backend,
            steiner,
            extra_edges,
            weights,
            max_weight,
            zero_prob,
            span,
            out,
        } => {
            let backend = match backend {
                BackendArg::Graph => Backend::Graph {
                    steiner,
                    extra_edges: extra_edges.unwrap_or(n),
                },
                BackendArg::L1 => Backend::L1,
                BackendArg::L2 => Backend::L2,
                BackendArg::Matrix => Backend::Matrix,
            };
            let weights = match weights {
                WeightArg::Uniform => WeightDist::Uniform { max: max_weight },
                WeightArg::ZeroInflated => WeightDist::ZeroInflated { max: max_weight, zero_prob },
                WeightArg::Zero => WeightDist::Zero,
            };
            let mut manifest = RunManifest::new(
                "gen random",
                json!({ "n": n, "backend": backend, "weights": weights, "span": span }),
            );
            for s in seed..seed.saturating_add(count) {
                let inst = gen_random(s, n, backend, weights, span).map_err(usage)?;
                let stem = format!("random_s{s}_n{n}");
                let path = out.join(format!("{stem}.json"));
                write_file(&path, &inst.to_json())?;
                println!("{}", path.display());
                manifest.seeds.push(s);
                manifest.instance_ids.push(stem);
                manifest.outputs.push(path.display().to_string());
            }
            manifest.write(&out)
        }
    }
}
