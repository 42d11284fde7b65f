//! Monte Carlo driver: experiment configuration, seeded trial generation,
//! per-trial decoding with every requested strategy, and result files.
//!
//! # Randomness
//!
//! Every trial owns a xoshiro256** stream seeded through SplitMix64 with
//! `trial_seed(master, uid)`, the `uid + 1`-th output of a SplitMix64 stream
//! started at the master seed.
//! Trial `t` of sweep point `p` has `uid = p * trials + t`. Each symbol draw
//! consumes one 64-bit output, mapped to `[0, 1)` from its top 53 bits and
//! inverted through the cumulative pmf. Source and side-information symbols
//! are drawn pairwise (source first) in the source layout order, followed by
//! one draw per syndrome tuple when the syndrome channel is noisy.
//!
//! # Output files
//!
//! The CSV has the header
//! `point,trial,epsilon,strategy,sys_errors,sys_symbols,par_errors,par_symbols,erasure`
//! (plus `elapsed_us` when timing is enabled) and one row per (trial,
//! strategy), trials in order. The JSON summary sidecar sits next to it with
//! the extension replaced by `.json`.

pub mod audit;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::{SplitMix64, Xoshiro256StarStar};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{sample_pair, SourcePrior, SymbolChannel, SyndromeChannel};
use crate::code::{SourceBlock, TurboBlock};
use crate::decoders::{
    decode, turbo_syndrome_decode, SideInfo, Strategy, SyndromeCode, SyndromeEvidence,
    TurboSideInfo, TurboSyndromeCode,
};
use crate::describe::{parse_code, CodeDescription};
use crate::error::{Error, Result};
use crate::fields::{Field, Symbol, TupleSpace};

pub use audit::*;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn trial_seed(master: u64, uid: u64) -> u64 {
    SplitMix64::seed_from_u64(master.wrapping_add(uid.wrapping_mul(GOLDEN_GAMMA))).next_u64()
}

pub fn trial_rng(master: u64, uid: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(trial_seed(master, uid))
}

fn cfg_err(field: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Named(String),
    Pmf(Vec<f64>),
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Named("uniform".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// q-ary symmetric; the crossover comes from `epsilon` or the sweep list.
    Qsc {
        #[serde(default)]
        epsilon: Option<f64>,
    },
    Matrix {
        rows: Vec<Vec<f64>>,
    },
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec::Qsc { epsilon: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyndromeChannelSpec {
    #[default]
    ErrorFree,
    /// Symmetric over the whole syndrome tuple alphabet.
    Qsc {
        epsilon: f64,
    },
    Matrix {
        rows: Vec<Vec<f64>>,
    },
}

impl SyndromeChannelSpec {
    pub fn build(&self, size: usize) -> Result<SyndromeChannel> {
        match self {
            SyndromeChannelSpec::ErrorFree => Ok(SyndromeChannel::error_free(size)),
            SyndromeChannelSpec::Qsc { epsilon } => SyndromeChannel::qsc(size, *epsilon),
            SyndromeChannelSpec::Matrix { rows } => {
                let sc = SyndromeChannel::from_rows(rows)?;
                if sc.size() != size {
                    return Err(Error::InvalidInput(format!(
                        "syndrome channel is {}x{}, syndromes take {size} values",
                        sc.size(),
                        sc.size()
                    )));
                }
                Ok(sc)
            }
        }
    }
}

fn default_iterations() -> usize {
    5
}

/// JSON experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Code description file, relative to the config file.
    pub code: PathBuf,
    /// Block length in time steps (convolutional codes; turbo codes take it
    /// from the interleaver).
    #[serde(default)]
    pub block_length: Option<usize>,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default)]
    pub correlation: ChannelSpec,
    #[serde(default)]
    pub syndrome_channel: SyndromeChannelSpec,
    pub strategies: Vec<String>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub record_timing: bool,
}

fn json_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.contains("field") || msg.contains("variant"))
        .unwrap_or("<document>")
        .to_string();
    Error::Config { field, msg }
}

/// Parses a config from JSON text; relative paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(json_error)?;
    if cfg.code.is_relative() {
        cfg.code = base.join(&cfg.code);
    }
    if let Some(out) = &cfg.output {
        if out.is_relative() {
            cfg.output = Some(base.join(out));
        }
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err("<file>", format!("{}: {e}", path.display())))?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// The code an experiment runs on.
#[derive(Debug)]
pub enum CodeUnderTest {
    Convolutional {
        code: SyndromeCode,
        block_length: usize,
    },
    Turbo(TurboSyndromeCode),
}

impl CodeUnderTest {
    pub fn field(&self) -> Field {
        match self {
            CodeUnderTest::Convolutional { code, .. } => code.realization().field(),
            CodeUnderTest::Turbo(t) => t.turbo().field(),
        }
    }

    pub fn block_length(&self) -> usize {
        match self {
            CodeUnderTest::Convolutional { block_length, .. } => *block_length,
            CodeUnderTest::Turbo(t) => t.turbo().block_length(),
        }
    }

    /// Syndrome length over source length, as an unreduced fraction.
    pub fn compression_rate(&self) -> (u64, u64) {
        match self {
            CodeUnderTest::Convolutional { code, .. } => {
                let r = code.realization();
                (r.n_minus_k() as u64, r.n() as u64)
            }
            CodeUnderTest::Turbo(t) => {
                let tc = t.turbo();
                let n = tc.block_length() as u64;
                let k = tc.k() as u64;
                let (n0, n1) = (tc.constituent(0).n() as u64, tc.constituent(1).n() as u64);
                (n * (n0 + n1 - 2 * k), n * (n0 + n1 - k))
            }
        }
    }

    fn syndrome_sizes(&self) -> Vec<usize> {
        match self {
            CodeUnderTest::Convolutional { code, .. } => {
                vec![code.realization().par_space().size()]
            }
            CodeUnderTest::Turbo(t) => (0..2)
                .map(|j| t.turbo().constituent(j).par_space().size())
                .collect(),
        }
    }
}

/// One point of the crossover sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub epsilon: Option<f64>,
    pub channel: SymbolChannel,
}

/// A validated, ready-to-run experiment.
#[derive(Debug)]
pub struct Experiment {
    pub code: CodeUnderTest,
    pub prior: SourcePrior,
    pub points: Vec<SweepPoint>,
    /// One syndrome channel per constituent (one for convolutional codes).
    pub syndrome_channels: Vec<SyndromeChannel>,
    pub strategies: Vec<Strategy>,
    pub iterations: usize,
    pub trials: usize,
    pub seed: u64,
    pub record_timing: bool,
}

impl Experiment {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let text = std::fs::read_to_string(&cfg.code)
            .map_err(|e| cfg_err("code", format!("{}: {e}", cfg.code.display())))?;
        let desc = parse_code(&text).map_err(|e| cfg_err("code", e.to_string()))?;
        Self::with_code(cfg, desc)
    }

    pub fn with_code(cfg: &ExperimentConfig, desc: CodeDescription) -> Result<Self> {
        let code = match desc {
            CodeDescription::Convolutional(r) => {
                let n = cfg
                    .block_length
                    .ok_or_else(|| cfg_err("block_length", "required for convolutional codes"))?;
                if n == 0 {
                    return Err(cfg_err("block_length", "must be at least 1"));
                }
                CodeUnderTest::Convolutional {
                    code: SyndromeCode::new(r),
                    block_length: n,
                }
            }
            CodeDescription::Turbo(tc) => {
                if let Some(n) = cfg.block_length {
                    if n != tc.block_length() {
                        return Err(cfg_err(
                            "block_length",
                            "does not match the turbo interleaver length",
                        ));
                    }
                }
                CodeUnderTest::Turbo(TurboSyndromeCode::new(tc))
            }
        };
        let field = code.field();
        let q = field.order() as usize;

        let prior = match &cfg.prior {
            PriorSpec::Named(name) if name == "uniform" => SourcePrior::uniform(field),
            PriorSpec::Named(other) => {
                return Err(cfg_err("prior", format!("unknown prior `{other}`")))
            }
            PriorSpec::Pmf(p) => {
                if p.len() != q {
                    return Err(cfg_err("prior", format!("needs {q} probabilities")));
                }
                SourcePrior::new(p.clone()).map_err(|e| cfg_err("prior", e.to_string()))?
            }
        };

        let points = match &cfg.correlation {
            ChannelSpec::Qsc { epsilon } => {
                let eps: Vec<f64> = match (epsilon, cfg.epsilons.is_empty()) {
                    (Some(_), false) => {
                        return Err(cfg_err(
                            "epsilons",
                            "give either `correlation.epsilon` or a sweep, not both",
                        ))
                    }
                    (Some(e), true) => vec![*e],
                    (None, false) => cfg.epsilons.clone(),
                    (None, true) => {
                        return Err(cfg_err(
                            "epsilons",
                            "a qsc correlation channel needs a crossover",
                        ))
                    }
                };
                eps.iter()
                    .enumerate()
                    .map(|(i, &e)| {
                        let channel = SymbolChannel::qsc(field, e)
                            .map_err(|err| cfg_err(&format!("epsilons[{i}]"), err.to_string()))?;
                        Ok(SweepPoint {
                            epsilon: Some(e),
                            channel,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            ChannelSpec::Matrix { rows } => {
                if !cfg.epsilons.is_empty() {
                    return Err(cfg_err(
                        "epsilons",
                        "a sweep needs a qsc correlation channel",
                    ));
                }
                let channel = SymbolChannel::from_rows(rows)
                    .map_err(|e| cfg_err("correlation", e.to_string()))?;
                if channel.inputs() != q {
                    return Err(cfg_err("correlation", format!("matrix needs {q} rows")));
                }
                vec![SweepPoint {
                    epsilon: None,
                    channel,
                }]
            }
        };

        let syndrome_channels = code
            .syndrome_sizes()
            .into_iter()
            .map(|size| {
                cfg.syndrome_channel
                    .build(size)
                    .map_err(|e| cfg_err("syndrome_channel", e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let noisy = syndrome_channels.iter().any(|sc| !sc.is_error_free());

        if cfg.strategies.is_empty() {
            return Err(cfg_err("strategies", "at least one strategy is required"));
        }
        let mut strategies = Vec::with_capacity(cfg.strategies.len());
        for (i, name) in cfg.strategies.iter().enumerate() {
            let field_name = format!("strategies[{i}]");
            let st: Strategy = name
                .parse()
                .map_err(|e: Error| cfg_err(&field_name, e.to_string()))?;
            if noisy && st.needs_exact_syndrome() {
                return Err(cfg_err(
                    &field_name,
                    format!("`{st}` needs an error-free syndrome channel"),
                ));
            }
            if matches!(st, Strategy::Isf(_))
                && points
                    .iter()
                    .any(|p| !p.channel.is_additive() || p.channel.outputs() != q)
            {
                return Err(cfg_err(
                    &field_name,
                    format!("`{st}` needs an additive correlation channel"),
                ));
            }
            strategies.push(st);
        }
        if cfg.trials == 0 {
            return Err(cfg_err("trials", "must be at least 1"));
        }
        if cfg.iterations == 0 {
            return Err(cfg_err("iterations", "must be at least 1"));
        }
        Ok(Experiment {
            code,
            prior,
            points,
            syndrome_channels,
            strategies,
            iterations: cfg.iterations,
            trials: cfg.trials,
            seed: cfg.seed,
            record_timing: cfg.record_timing,
        })
    }

    pub fn noisy_syndrome(&self) -> bool {
        self.syndrome_channels.iter().any(|sc| !sc.is_error_free())
    }
}

/// One sampled convolutional instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSample {
    pub x: SourceBlock,
    pub y: SideInfo,
    pub s: Vec<usize>,
    /// Received syndrome when the syndrome channel is noisy.
    pub r: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboSample {
    pub x: TurboBlock,
    pub y: TurboSideInfo,
    pub s: [Vec<usize>; 2],
    pub r: Option<[Vec<usize>; 2]>,
}

fn draw_symbols<R: Rng>(
    count: usize,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    rng: &mut R,
) -> (Vec<Symbol>, Vec<Symbol>) {
    (0..count).map(|_| sample_pair(prior, ch, rng)).unzip()
}

fn corrupt<R: Rng>(s: &[usize], sc: &SyndromeChannel, rng: &mut R) -> Vec<usize> {
    s.iter().map(|&v| sc.sample(v, rng)).collect()
}

pub fn sample_convolutional<R: Rng>(
    code: &SyndromeCode,
    block_length: usize,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    sc: &SyndromeChannel,
    rng: &mut R,
) -> Result<ConvSample> {
    let r = code.realization();
    let (xs, ys) = draw_symbols(block_length * r.n(), prior, ch, rng);
    let x = SourceBlock::from_symbols(&xs, r.sys_space(), r.par_space())?;
    let y = SideInfo::from_interleaved(&ys, r.k(), r.n_minus_k())?;
    let s = r.syndrome_form(&x)?;
    let received = (!sc.is_error_free()).then(|| corrupt(&s, sc, rng));
    Ok(ConvSample {
        x,
        y,
        s,
        r: received,
    })
}

pub fn sample_turbo<R: Rng>(
    code: &TurboSyndromeCode,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    sc: &[SyndromeChannel],
    rng: &mut R,
) -> Result<TurboSample> {
    let tc = code.turbo();
    let n = tc.block_length();
    let widths = [
        tc.k(),
        tc.constituent(0).n_minus_k(),
        tc.constituent(1).n_minus_k(),
    ];
    let (xs, ys) = draw_symbols(n * widths.iter().sum::<usize>(), prior, ch, rng);
    let x = tc.block_from_symbols(&xs)?;
    let (y_sys, rest) = ys.split_at(n * widths[0]);
    let (y0, y1) = rest.split_at(n * widths[1]);
    let y = TurboSideInfo {
        sys: y_sys.to_vec(),
        par: [y0.to_vec(), y1.to_vec()],
    };
    let s = tc.turbo_syndrome_form(&x)?;
    let received = if sc.iter().any(|c| !c.is_error_free()) {
        Some([corrupt(&s[0], &sc[0], rng), corrupt(&s[1], &sc[1], rng)])
    } else {
        None
    };
    Ok(TurboSample {
        x,
        y,
        s,
        r: received,
    })
}

/// Symbol (not tuple) mismatches between two packed sequences.
pub fn symbol_errors(space: TupleSpace, a: &[usize], b: &[usize]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&u, &v)| {
            (0..space.width())
                .filter(|&d| space.digit(u, d) != space.digit(v, d))
                .count() as u64
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub epsilon: Option<f64>,
    pub strategy: Strategy,
    pub sys_errors: u64,
    pub sys_symbols: u64,
    pub par_errors: u64,
    pub par_symbols: u64,
    /// Decoding hit a zero metric; every symbol is counted as an error.
    pub erasure: bool,
    pub elapsed_us: Option<u64>,
}

fn is_erasure(e: &Error) -> bool {
    matches!(e, Error::Inconsistent { .. } | Error::DegenerateEvidence(_))
}

fn run_trial(exp: &Experiment, point: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let uid = (point * exp.trials + trial) as u64;
    let mut rng = trial_rng(exp.seed, uid);
    let pt = &exp.points[point];
    let mut records = Vec::with_capacity(exp.strategies.len());

    let mut push = |st: Strategy,
                    counts: Result<(u64, u64)>,
                    sizes: (u64, u64),
                    start: Instant|
     -> Result<()> {
        let elapsed_us = exp
            .record_timing
            .then(|| start.elapsed().as_micros() as u64);
        let (sys_errors, par_errors, erasure) = match counts {
            Ok((a, b)) => (a, b, false),
            Err(e) if is_erasure(&e) => (sizes.0, sizes.1, true),
            Err(e) => return Err(e),
        };
        records.push(TrialRecord {
            point,
            trial,
            epsilon: pt.epsilon,
            strategy: st,
            sys_errors,
            sys_symbols: sizes.0,
            par_errors,
            par_symbols: sizes.1,
            erasure,
            elapsed_us,
        });
        Ok(())
    };

    match &exp.code {
        CodeUnderTest::Convolutional { code, block_length } => {
            let sample = sample_convolutional(
                code,
                *block_length,
                &exp.prior,
                &pt.channel,
                &exp.syndrome_channels[0],
                &mut rng,
            )?;
            let r = code.realization();
            let sizes = (
                (block_length * r.k()) as u64,
                (block_length * r.n_minus_k()) as u64,
            );
            let evidence = match &sample.r {
                Some(rv) => SyndromeEvidence::Received {
                    r: rv,
                    channel: &exp.syndrome_channels[0],
                },
                None => SyndromeEvidence::Exact(&sample.s),
            };
            for &st in &exp.strategies {
                let start = Instant::now();
                let counts =
                    decode(code, st, evidence, &sample.y, &exp.prior, &pt.channel).map(|res| {
                        (
                            symbol_errors(r.sys_space(), &res.sys, &sample.x.sys),
                            symbol_errors(r.par_space(), &res.par, &sample.x.par),
                        )
                    });
                push(st, counts, sizes, start)?;
            }
        }
        CodeUnderTest::Turbo(tsc) => {
            let sample = sample_turbo(
                tsc,
                &exp.prior,
                &pt.channel,
                &exp.syndrome_channels,
                &mut rng,
            )?;
            let tc = tsc.turbo();
            let n = tc.block_length();
            let sizes = (
                (n * tc.k()) as u64,
                (n * (tc.constituent(0).n_minus_k() + tc.constituent(1).n_minus_k())) as u64,
            );
            let evidence: [SyndromeEvidence; 2] = match &sample.r {
                Some(rv) => [0, 1].map(|j| SyndromeEvidence::Received {
                    r: &rv[j],
                    channel: &exp.syndrome_channels[j],
                }),
                None => [0, 1].map(|j| SyndromeEvidence::Exact(&sample.s[j])),
            };
            for &st in &exp.strategies {
                let start = Instant::now();
                let counts = turbo_syndrome_decode(
                    tsc,
                    evidence,
                    &sample.y,
                    &exp.prior,
                    &pt.channel,
                    st,
                    exp.iterations,
                )
                .map(|res| {
                    let par_errors = (0..2)
                        .map(|j| {
                            symbol_errors(
                                tc.constituent(j).par_space(),
                                &res.par[j],
                                &sample.x.par[j],
                            )
                        })
                        .sum();
                    (
                        symbol_errors(tc.constituent(0).sys_space(), &res.sys, &sample.x.sys),
                        par_errors,
                    )
                });
                push(st, counts, sizes, start)?;
            }
        }
    }
    Ok(records)
}

/// Aggregate over all trials of one (sweep point, strategy) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: usize,
    pub epsilon: Option<f64>,
    pub strategy: String,
    pub trials: u64,
    pub erasures: u64,
    pub sys_errors: u64,
    pub sys_symbols: u64,
    pub par_errors: u64,
    pub par_symbols: u64,
    pub sys_ser: f64,
    pub par_ser: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub trials: u64,
    pub block_length: u64,
    pub iterations: u64,
    pub compression_rate: f64,
    pub rate_numerator: u64,
    pub rate_denominator: u64,
    pub points: Vec<PointSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

fn summarize(exp: &Experiment, records: &[TrialRecord]) -> Summary {
    let mut points = Vec::new();
    for (p, pt) in exp.points.iter().enumerate() {
        for &st in &exp.strategies {
            let mut s = PointSummary {
                point: p,
                epsilon: pt.epsilon,
                strategy: st.to_string(),
                trials: 0,
                erasures: 0,
                sys_errors: 0,
                sys_symbols: 0,
                par_errors: 0,
                par_symbols: 0,
                sys_ser: 0.0,
                par_ser: 0.0,
            };
            for r in records.iter().filter(|r| r.point == p && r.strategy == st) {
                s.trials += 1;
                s.erasures += r.erasure as u64;
                s.sys_errors += r.sys_errors;
                s.sys_symbols += r.sys_symbols;
                s.par_errors += r.par_errors;
                s.par_symbols += r.par_symbols;
            }
            let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            s.sys_ser = ratio(s.sys_errors, s.sys_symbols);
            s.par_ser = ratio(s.par_errors, s.par_symbols);
            points.push(s);
        }
    }
    let (num, den) = exp.code.compression_rate();
    Summary {
        seed: exp.seed,
        trials: exp.trials as u64,
        block_length: exp.code.block_length() as u64,
        iterations: exp.iterations as u64,
        compression_rate: num as f64 / den as f64,
        rate_numerator: num,
        rate_denominator: den,
        points,
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs every trial of every sweep point. Output is independent of `threads`.
pub fn run_trials(exp: &Experiment, threads: usize) -> Result<SimulationOutput> {
    let jobs: Vec<(usize, usize)> = (0..exp.points.len())
        .flat_map(|p| (0..exp.trials).map(move |t| (p, t)))
        .collect();
    let per_trial = with_pool(threads, || {
        jobs.par_iter()
            .map(|&(p, t)| run_trial(exp, p, t))
            .collect::<Vec<_>>()
    })?;
    let mut records = Vec::with_capacity(jobs.len() * exp.strategies.len());
    for r in per_trial {
        records.extend(r?);
    }
    let summary = summarize(exp, &records);
    Ok(SimulationOutput { records, summary })
}

pub fn records_csv(records: &[TrialRecord], timing: bool) -> String {
    let mut out = String::from(
        "point,trial,epsilon,strategy,sys_errors,sys_symbols,par_errors,par_symbols,erasure",
    );
    out.push_str(if timing { ",elapsed_us\n" } else { "\n" });
    for r in records {
        let eps = r.epsilon.map(|e| e.to_string()).unwrap_or_default();
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.point,
            r.trial,
            eps,
            r.strategy,
            r.sys_errors,
            r.sys_symbols,
            r.par_errors,
            r.par_symbols,
            r.erasure as u8
        );
        if timing {
            let _ = write!(out, ",{}", r.elapsed_us.unwrap_or(0));
        }
        out.push('\n');
    }
    out
}

pub fn summary_json(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn parse_summary(text: &str) -> Result<Summary> {
    serde_json::from_str(text).map_err(json_error)
}

/// Path of the JSON sidecar for a CSV output path.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the CSV records and the JSON summary sidecar.
pub fn emit_results(output: &SimulationOutput, path: &Path, timing: bool) -> Result<()> {
    std::fs::write(path, records_csv(&output.records, timing))?;
    std::fs::write(summary_path(path), summary_json(&output.summary))?;
    Ok(())
}
