use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use mdsa::verify::{render_json_lines, render_text, PropertyReport};
use mdsa_cli::build::{cmd_build, summarize, BuildOptions, BuildOutcome, LoadedCode};
use mdsa_cli::compare::{compare, render};
use mdsa_cli::config::BuildConfig;
use mdsa_cli::verify::{coverage, run_suites, Suite, DEFAULT_SUITES};
use mdsa_cli::{files, repair};

/// MDS array codes with optimal repair at several repair degrees.
#[derive(Parser)]
#[command(name = "mdsa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code from a config file and write its descriptor.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Field order, overriding the config.
        #[arg(long)]
        field: Option<u32>,
        /// Build even past the size limit.
        #[arg(long)]
        force: bool,
        /// Print the parameters only.
        #[arg(long)]
        params_only: bool,
        /// Certify the base code before lifting it.
        #[arg(long)]
        preflight: bool,
        /// Descriptor path; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json_report: Option<PathBuf>,
    },
    /// Split a file into one shard per node.
    Encode {
        code: PathBuf,
        input: PathBuf,
        /// Directory for the shards.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Rebuild a file from at least k shards (files or directories).
    Decode {
        code: PathBuf,
        #[arg(required = true)]
        shards: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Rebuild one node's shard from d helpers.
    Repair {
        code: PathBuf,
        /// Shard files or directories holding the helpers.
        #[arg(required = true)]
        shards: Vec<PathBuf>,
        #[arg(long)]
        node: usize,
        /// Number of helpers d.
        #[arg(long)]
        degree: usize,
        /// Helper nodes, comma separated; default: the first d present.
        #[arg(long, value_delimiter = ',')]
        helpers: Option<Vec<usize>>,
        /// Where to write the shard; default: next to the helpers.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json_report: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Check the code's properties; exits 1 if any check fails.
    Verify {
        code: PathBuf,
        /// Suites to run, comma separated: tmds, mds, repair, lemma5.
        #[arg(long, value_delimiter = ',')]
        suite: Option<Vec<Suite>>,
        /// Sample N cases per check instead of enumerating.
        #[arg(long, value_name = "N")]
        sample: Option<usize>,
        /// Enumerate every case however many there are.
        #[arg(long, conflicts_with = "sample")]
        exhaustive: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        json_report: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Compare sub-packetization, field size and storage with YB codes 3 and 4.
    Compare {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta0: usize,
        /// A degree set, comma separated; repeat for more rows.
        #[arg(long = "degrees", required = true)]
        degrees: Vec<String>,
        /// Keep the exact field bounds instead of rounding up to powers of two.
        #[arg(long)]
        exact_field: bool,
        #[arg(long)]
        json_report: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit_reports(reports: &[PropertyReport], text: Option<&Path>, json: Option<&Path>, stderr: bool) -> Result<bool> {
    let rendered = render_text(reports);
    if stderr {
        eprint!("{rendered}");
    } else {
        print!("{rendered}");
    }
    if let Some(p) = text {
        write(p, &rendered)?;
    }
    if let Some(p) = json {
        write(p, &render_json_lines(reports))?;
    }
    Ok(reports.iter().all(|r| r.passed))
}

fn parse_sets(raw: &[String]) -> Result<Vec<Vec<usize>>> {
    raw.iter()
        .map(|s| {
            s.split([',', ' '])
                .filter(|x| !x.is_empty())
                .map(|x| x.parse().with_context(|| format!("bad degree `{x}`")))
                .collect()
        })
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Build {
            config,
            seed,
            field,
            force,
            params_only,
            preflight,
            out,
            report,
            json_report,
        } => {
            let cfg = BuildConfig::read(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let opts = BuildOptions {
                seed: Some(seed),
                field,
                force,
                preflight: preflight.then(|| coverage(None, false, seed)),
            };
            if params_only {
                print!("{}", summarize(&cfg, &opts)?.render());
                return Ok(true);
            }
            match cmd_build(&cfg, &opts)? {
                BuildOutcome::ReportOnly { summary } => {
                    print!("{}", summary.render());
                    bail!("not built: L = {} is past the size limit; pass --force to build anyway", summary.sub_packetization);
                }
                BuildOutcome::Built {
                    summary,
                    descriptor,
                    preflight,
                    ..
                } => {
                    eprint!("{}", summary.render());
                    let ok = emit_reports(&preflight, report.as_deref(), json_report.as_deref(), out.is_none())?;
                    if !ok {
                        bail!("base code failed its certificate; no descriptor written");
                    }
                    match out {
                        Some(p) => write(&p, &descriptor.to_text())?,
                        None => print!("{}", descriptor.to_text()),
                    }
                    Ok(true)
                }
            }
        }
        Command::Encode { code, input, out, force } => {
            let code = LoadedCode::open(&code, force)?;
            let paths = files::encode_file(&code, &input, &out)?;
            println!("wrote {} shards to {}", paths.len(), out.display());
            Ok(true)
        }
        Command::Decode { code, shards, out, force } => {
            let code = LoadedCode::open(&code, force)?;
            let len = files::decode_files(&code, &shards, &out)?;
            println!("wrote {len} bytes to {}", out.display());
            Ok(true)
        }
        Command::Repair {
            code,
            shards,
            node,
            degree,
            helpers,
            out,
            report,
            json_report,
            force,
        } => {
            let code = LoadedCode::open(&code, force)?;
            let (path, rep) = repair::repair_files(&code, &shards, node, degree, helpers.as_deref(), out.as_deref())?;
            let text = rep.to_text();
            print!("{text}");
            println!("wrote {}", path.display());
            if let Some(p) = report {
                write(&p, &text)?;
            }
            if let Some(p) = json_report {
                write(&p, &(rep.to_json() + "\n"))?;
            }
            Ok(true)
        }
        Command::Verify {
            code,
            suite,
            sample,
            exhaustive,
            seed,
            report,
            json_report,
            force,
        } => {
            let code = LoadedCode::open(&code, force)?;
            let suites = suite.unwrap_or_else(|| DEFAULT_SUITES.to_vec());
            let reports = run_suites(&code, &suites, &coverage(sample, exhaustive, seed), seed)?;
            emit_reports(&reports, report.as_deref(), json_report.as_deref(), false)
        }
        Command::Compare {
            n,
            k,
            delta0,
            degrees,
            exact_field,
            json_report,
        } => {
            let sets = parse_sets(&degrees)?;
            let rows = compare(n, k, delta0, &sets, !exact_field)?;
            print!("{}", render(n, k, delta0, &rows));
            if let Some(p) = json_report {
                let lines: String = rows
                    .iter()
                    .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
                    .collect();
                write(&p, &lines)?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
