//! `swsyn`: syndrome-based Slepian-Wolf coding from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sw_syndrome::channels::{SourcePrior, SymbolChannel, SyndromeChannel};
use sw_syndrome::code::{pack_stream, unpack_stream, SourceBlock};
use sw_syndrome::decoders::{
    decode, turbo_syndrome_decode, SideInfo, Strategy, SyndromeCode, SyndromeEvidence,
    TurboSideInfo, TurboSyndromeCode,
};
use sw_syndrome::describe::{format_symbols, parse_code, parse_symbols, CodeDescription};
use sw_syndrome::fields::Symbol;
use sw_syndrome::sim::{
    audit_experiment, emit_results, is_audit_document, parse_audit_spec, parse_config, run_audit,
    run_trials, run_verify, summary_path, verify_experiment, AuditKind, AuditOptions, AuditReport,
    AuditSyndrome, Experiment, RandomAuditSpec,
};
use sw_syndrome::{Error, Result};

#[derive(Parser)]
#[command(
    name = "swsyn",
    version,
    about = "Syndrome-based Slepian-Wolf coding over GF(q)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a source block to its syndrome.
    Encode {
        #[arg(long)]
        code: PathBuf,
        /// Source symbols.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a source block from side information and a syndrome.
    Decode(DecodeArgs),
    /// Run a Monte Carlo experiment and write CSV records plus a JSON summary.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that decoding strategies agree.
    Audit {
        #[command(flatten)]
        run: RunArgs,
        /// Relative posterior tolerance (default 1e-8, or the audit file's).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Compare decoders against exhaustive enumeration.
    Verify {
        /// Experiment or audit file; random small instances when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Random instances when no config is given.
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the strategy list (repeatable).
    #[arg(long)]
    strategy: Vec<String>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    code: PathBuf,
    /// Side-information symbols, laid out like the source.
    #[arg(long)]
    side_info: PathBuf,
    /// Syndrome symbols (exact, or received when `--syndrome-epsilon` is set).
    #[arg(long)]
    syndrome: PathBuf,
    /// Crossover of the q-ary symmetric correlation channel.
    #[arg(long)]
    epsilon: f64,
    /// Crossover of a symmetric channel on syndrome tuples.
    #[arg(long)]
    syndrome_epsilon: Option<f64>,
    #[arg(long, default_value = "map")]
    strategy: String,
    /// Source pmf, comma separated (default uniform).
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Error(Error),
    Violations(AuditReport),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config {
        field: "<file>".into(),
        msg: format!("{}: {e}", path.display()),
    })
}

fn read_code(path: &Path) -> Result<CodeDescription> {
    parse_code(&read(path)?)
}

fn read_symbols(path: &Path) -> Result<Vec<Symbol>> {
    parse_symbols(&read(path)?)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn encode(code: &Path, input: &Path, out: Option<&Path>) -> Result<()> {
    let symbols = read_symbols(input)?;
    let text = match read_code(code)? {
        CodeDescription::Convolutional(r) => {
            let x = SourceBlock::from_symbols(&symbols, r.sys_space(), r.par_space())?;
            let s = r.syndrome_form(&x)?;
            format_symbols(&unpack_stream(&s, r.par_space()), r.n_minus_k())
        }
        CodeDescription::Turbo(tc) => {
            let x = tc.block_from_symbols(&symbols)?;
            let [s0, s1] = tc.turbo_syndrome_form(&x)?;
            let mut text = format_symbols(
                &unpack_stream(&s0, tc.constituent(0).par_space()),
                tc.constituent(0).n_minus_k(),
            );
            text.push_str(&format_symbols(
                &unpack_stream(&s1, tc.constituent(1).par_space()),
                tc.constituent(1).n_minus_k(),
            ));
            text
        }
    };
    write_output(out, &text)
}

fn decode_cmd(a: &DecodeArgs) -> Result<()> {
    let desc = read_code(&a.code)?;
    let ys = read_symbols(&a.side_info)?;
    let syn = read_symbols(&a.syndrome)?;
    let strategy: Strategy = a.strategy.parse()?;
    let field = match &desc {
        CodeDescription::Convolutional(r) => r.field(),
        CodeDescription::Turbo(t) => t.field(),
    };
    let prior = match &a.prior {
        Some(p) => SourcePrior::new(p.clone())?,
        None => SourcePrior::uniform(field),
    };
    let ch = SymbolChannel::qsc(field, a.epsilon)?;
    let syndrome_channel = |size: usize| match a.syndrome_epsilon {
        Some(e) => SyndromeChannel::qsc(size, e),
        None => Ok(SyndromeChannel::error_free(size)),
    };
    let text = match desc {
        CodeDescription::Convolutional(r) => {
            let par = r.par_space();
            let s = pack_stream(&syn, par)?;
            let y = SideInfo::from_interleaved(&ys, r.k(), r.n_minus_k())?;
            let sc = syndrome_channel(par.size())?;
            let code = SyndromeCode::new(r);
            let evidence = SyndromeEvidence::Received {
                r: &s,
                channel: &sc,
            };
            let res = decode(&code, strategy, evidence, &y, &prior, &ch)?;
            let r = code.realization();
            format_symbols(
                &res.source().to_symbols(r.sys_space(), r.par_space()),
                r.n(),
            )
        }
        CodeDescription::Turbo(tc) => {
            let n = tc.block_length();
            let spaces = [tc.constituent(0).par_space(), tc.constituent(1).par_space()];
            let split = n * spaces[0].width();
            if syn.len() != split + n * spaces[1].width() {
                return Err(Error::InvalidInput(format!(
                    "turbo syndrome needs {} symbols",
                    split + n * spaces[1].width()
                )));
            }
            let s = [
                pack_stream(&syn[..split], spaces[0])?,
                pack_stream(&syn[split..], spaces[1])?,
            ];
            let widths = [n * tc.k(), n * spaces[0].width(), n * spaces[1].width()];
            if ys.len() != widths.iter().sum::<usize>() {
                return Err(Error::InvalidInput(format!(
                    "turbo side information needs {} symbols",
                    widths.iter().sum::<usize>()
                )));
            }
            let y = TurboSideInfo {
                sys: ys[..widths[0]].to_vec(),
                par: [
                    ys[widths[0]..widths[0] + widths[1]].to_vec(),
                    ys[widths[0] + widths[1]..].to_vec(),
                ],
            };
            let sc = [
                syndrome_channel(spaces[0].size())?,
                syndrome_channel(spaces[1].size())?,
            ];
            let code = TurboSyndromeCode::new(tc);
            let evidence = [0, 1].map(|j| SyndromeEvidence::Received {
                r: &s[j],
                channel: &sc[j],
            });
            let res =
                turbo_syndrome_decode(&code, evidence, &y, &prior, &ch, strategy, a.iterations)?;
            let block = sw_syndrome::code::TurboBlock {
                sys: res.sys,
                par: res.par,
            };
            format_symbols(&code.turbo().block_to_symbols(&block), n.max(1))
        }
    };
    write_output(a.out.as_deref(), &text)
}

fn load_experiment(run: &RunArgs) -> Result<(Experiment, Option<PathBuf>)> {
    let mut cfg = parse_config(&run.config)?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    if !run.strategy.is_empty() {
        cfg.strategies = run.strategy.clone();
    }
    Ok((Experiment::from_config(&cfg)?, cfg.output))
}

fn simulate(run: &RunArgs, out: Option<&Path>) -> Result<()> {
    let (exp, cfg_out) = load_experiment(run)?;
    let path = out
        .map(Path::to_path_buf)
        .or(cfg_out)
        .ok_or_else(|| Error::Config {
            field: "output".into(),
            msg: "no output path (use --out)".into(),
        })?;
    let output = run_trials(&exp, run.threads)?;
    emit_results(&output, &path, exp.record_timing)?;
    for p in &output.summary.points {
        let eps = p
            .epsilon
            .map(|e| e.to_string())
            .unwrap_or_else(|| "-".into());
        println!(
            "eps {eps:>8}  {:<18} sys SER {:.6e}  par SER {:.6e}  erasures {}",
            p.strategy, p.sys_ser, p.par_ser, p.erasures
        );
    }
    println!(
        "compression rate {}/{}; wrote {} and {}",
        output.summary.rate_numerator,
        output.summary.rate_denominator,
        path.display(),
        summary_path(&path).display()
    );
    Ok(())
}

fn finish(report: AuditReport) -> std::result::Result<(), Failure> {
    print!("{}", report.render());
    if report.passed() {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::Violations(report))
    }
}

fn audit(run: &RunArgs, tolerance: Option<f64>) -> std::result::Result<(), Failure> {
    let text = read_config(&run.config)?;
    let report = if is_audit_document(&text) {
        let mut spec = parse_audit_spec(&text)?;
        if let Some(seed) = run.seed {
            spec.seed = seed;
        }
        if !run.strategy.is_empty() {
            spec.strategies = run.strategy.clone();
        }
        if let Some(t) = tolerance {
            spec.tolerance = t;
        }
        run_audit(&spec, AuditOptions::default(), run.threads)?
    } else {
        let (exp, _) = load_experiment(run)?;
        audit_experiment(&exp, tolerance.unwrap_or(1e-8), run.threads)?
    };
    finish(report)
}

fn verify(
    config: Option<&Path>,
    seed: Option<u64>,
    threads: usize,
    tolerance: Option<f64>,
    instances: usize,
) -> std::result::Result<(), Failure> {
    let random = |mut spec: RandomAuditSpec| -> Result<AuditReport> {
        if let Some(s) = seed {
            spec.seed = s;
        }
        if let Some(t) = tolerance {
            spec.tolerance = t;
        }
        run_verify(&spec, threads)
    };
    let report = match config {
        None => random(RandomAuditSpec::new(
            AuditKind::Convolutional,
            AuditSyndrome::ErrorFree,
            instances,
            0,
            1e-10,
        ))?,
        Some(path) => {
            let text = read_config(path)?;
            if is_audit_document(&text) {
                random(parse_audit_spec(&text)?)?
            } else {
                let run = RunArgs {
                    config: path.to_path_buf(),
                    seed,
                    strategy: Vec::new(),
                    threads,
                };
                let (exp, _) = load_experiment(&run)?;
                verify_experiment(&exp, tolerance.unwrap_or(1e-10), threads)?
            }
        }
    };
    finish(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: std::result::Result<(), Failure> = match &cli.command {
        Command::Encode { code, input, out } => {
            encode(code, input, out.as_deref()).map_err(Failure::from)
        }
        Command::Decode(a) => decode_cmd(a).map_err(Failure::from),
        Command::Simulate { run, out } => simulate(run, out.as_deref()).map_err(Failure::from),
        Command::Audit { run, tolerance } => audit(run, *tolerance),
        Command::Verify {
            config,
            seed,
            threads,
            tolerance,
            instances,
        } => verify(config.as_deref(), *seed, *threads, *tolerance, *instances),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations(report)) => {
            eprintln!("violations; replay seeds: {:?}", report.replay_seeds());
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
