use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use opl_core::geometry::{Arc, Region};
use opl_core::homotopy::{certify_path, log_path, CertifyConfig};
use opl_core::index::{fredholm_index, nontriviality_probe, projection_index_with, IndexConfig, IndexMethod};
use opl_core::operator::CircleFunction;
use opl_core::operator::{export_operator, import_operator, Encoding};
use opl_core::operator::Projection;
use opl_core::report::{self, ExperimentConfig};
use opl_core::{Error, Result};

#[derive(Parser)]
#[command(name = "opl", version, about = "Finite-window operator laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fredholm index of an operator, or of a projection relative to a base unitary.
    Index {
        op: PathBuf,
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::KernelCount)]
        method: Method,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compressions of monomials in the base unitary at probe sites.
    Probe {
        projection: PathBuf,
        #[arg(long)]
        base: PathBuf,
        /// Region expression; its sites inside the window are probed.
        #[arg(long)]
        probes: String,
        #[arg(long, default_value_t = 3)]
        degree: i32,
    },
    /// Certify the logarithm path from 1 to a unitary.
    Certify {
        op: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Pair of arcs `I;J`; repeatable.
        #[arg(long = "arc-pair")]
        arc_pairs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-encode an opmat file.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Enc::Binary)]
        encoding: Enc,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    KernelCount,
    TraceFormula,
    PartialPermutation,
}

#[derive(Clone, Copy, ValueEnum)]
enum Enc {
    Binary,
    Base64,
}

fn index_config(path: &Option<PathBuf>) -> Result<IndexConfig> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(IndexConfig::default()),
    }
}

fn parse_pair(s: &str) -> Result<(Arc, Arc)> {
    let (a, b) = s
        .split_once(';')
        .ok_or_else(|| Error::Validation(vec![format!("arc pair `{s}` must be `I;J`")]))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let m = match out {
                Some(o) => {
                    cfg.output_dir = o;
                    report::run_resolved(cfg)?
                }
                None => report::run_config(cfg)?,
            };
            for f in &m.files {
                println!("{}  {}", f.sha256, f.path);
            }
        }
        Command::Index { op, base, method, config } => {
            let cfg = index_config(&config)?;
            let a = import_operator(&op)?;
            let r = match base {
                Some(b) => {
                    let base = import_operator(&b)?;
                    projection_index_with(&Projection::from_operator(a, 1e-8)?, &base, &cfg)?
                }
                None => {
                    let m = match method {
                        Method::KernelCount => IndexMethod::KernelCount,
                        Method::TraceFormula => IndexMethod::TraceFormula,
                        Method::PartialPermutation => IndexMethod::PartialPermutation,
                    };
                    fredholm_index(&a, m, &cfg)?
                }
            };
            println!("{}", r.to_json()?);
        }
        Command::Probe { projection, base, probes, degree } => {
            let p = Projection::from_operator(import_operator(&projection)?, 1e-8)?;
            let base = import_operator(&base)?;
            let region: Region = probes.parse()?;
            let sites = region.realize(p.window());
            let fns: Vec<CircleFunction> = (1..=degree.max(1)).map(CircleFunction::monomial).collect();
            let r = nontriviality_probe(&p, &base, &fns, &sites, &IndexConfig::default())?;
            println!("{}", r.to_json()?);
        }
        Command::Certify { op, samples, arc_pairs, out } => {
            let u = import_operator(&op)?;
            let pairs = arc_pairs.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>>>()?;
            let cfg = CertifyConfig {
                samples,
                arc_pairs: pairs,
                ..CertifyConfig::default()
            };
            let path = log_path(&u).map_err(|e| e.in_stage("log_path"))?.reversed();
            let rep = certify_path(&path, &cfg).map_err(|e| e.in_stage("certify"))?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("certificate.json"), rep.to_json()?)?;
                std::fs::write(dir.join("certificate.csv"), rep.to_csv()?)?;
                report::emit_plots(&report::certificate_plots(&rep, ""), &dir)?;
            }
            println!(
                "unitarity {:e}  sigma_min {:e}  locality {:e}",
                rep.max_unitarity_defect, rep.min_singular_value, rep.max_locality_defect
            );
        }
        Command::Convert { input, output, encoding } => {
            let a = import_operator(&input)?;
            let enc = match encoding {
                Enc::Binary => Encoding::Binary,
                Enc::Base64 => Encoding::Base64,
            };
            export_operator(&a, &output, enc)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Parse { .. } | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
