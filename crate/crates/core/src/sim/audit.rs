//! Cross-strategy equivalence audits and oracle verification on randomly
//! generated instances or on the trials of an experiment.
//!
//! Two decoders agree on an instance when their hard decisions coincide and
//! every posterior entry satisfies `|a - b| / max(a, b) <= tolerance`.
//! Parity decisions of `isf-reencode` are excluded from the hard-decision
//! comparison: re-encoding returns a coset member, not per-symbol MAP parity.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cfg_err, json_error, sample_convolutional, sample_turbo, trial_seed, with_pool, CodeUnderTest,
    ConvSample, Experiment, TurboSample,
};
use crate::bcjr::{DecodeResult, Message, TieRule};
use crate::channels::{uniform, SourcePrior, SymbolChannel, SyndromeChannel};
use crate::code::{ParityRealization, TurboCode};
use crate::decoders::{
    decode, turbo_syndrome_decode, ParityMode, Strategy, SyndromeCode, SyndromeEvidence,
    TurboDecodeResult, TurboSyndromeCode,
};
use crate::error::{Error, Result};
use crate::fields::{Field, Symbol};
use crate::oracle::{exact_marginals, OracleSyndrome};

/// Largest oracle enumeration used by random verification, in sequences.
pub const VERIFY_BUDGET: u64 = 1 << 16;
/// Largest state count of a randomly generated realization.
pub const MAX_RANDOM_STATES: usize = 81;
/// Longest random turbo block.
pub const MAX_TURBO_BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    #[default]
    Convolutional,
    Turbo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditSyndrome {
    #[default]
    ErrorFree,
    Noisy,
}

fn default_fields() -> Vec<u32> {
    vec![2, 3]
}
fn default_memory() -> usize {
    3
}
fn default_block_lengths() -> [usize; 2] {
    [8, 128]
}
fn default_iterations() -> usize {
    5
}
fn default_tolerance() -> f64 {
    1e-8
}

/// Random-instance audit description, read from `{"audit": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomAuditSpec {
    #[serde(default)]
    pub kind: AuditKind,
    pub instances: usize,
    #[serde(default = "default_fields")]
    pub fields: Vec<u32>,
    #[serde(default = "default_memory")]
    pub max_memory: usize,
    /// Inclusive block length range.
    #[serde(default = "default_block_lengths")]
    pub block_lengths: [usize; 2],
    #[serde(default)]
    pub syndrome: AuditSyndrome,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Strategies to compare; empty means every applicable one.
    #[serde(default)]
    pub strategies: Vec<String>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Re-run only the instance with this replay seed.
    #[serde(default)]
    pub replay: Option<u64>,
}

impl RandomAuditSpec {
    pub fn new(
        kind: AuditKind,
        syndrome: AuditSyndrome,
        instances: usize,
        seed: u64,
        tolerance: f64,
    ) -> Self {
        RandomAuditSpec {
            kind,
            instances,
            fields: default_fields(),
            max_memory: default_memory(),
            block_lengths: default_block_lengths(),
            syndrome,
            iterations: default_iterations(),
            seed,
            strategies: Vec::new(),
            tolerance,
            replay: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fields.is_empty() {
            return Err(cfg_err("audit.fields", "at least one field is required"));
        }
        for (i, &q) in self.fields.iter().enumerate() {
            Field::new(q).map_err(|e| cfg_err(&format!("audit.fields[{i}]"), e.to_string()))?;
        }
        let [lo, hi] = self.block_lengths;
        if lo == 0 || lo > hi {
            return Err(cfg_err("audit.block_lengths", "need 1 <= min <= max"));
        }
        if self.max_memory == 0 {
            return Err(cfg_err("audit.max_memory", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(cfg_err("audit.iterations", "must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(cfg_err("audit.tolerance", "must be nonnegative"));
        }
        self.strategy_list()?;
        Ok(())
    }

    /// Strategies compared by this audit, reference first.
    pub fn strategy_list(&self) -> Result<Vec<Strategy>> {
        let noisy = self.syndrome == AuditSyndrome::Noisy;
        if self.strategies.is_empty() {
            return Ok(if noisy {
                vec![Strategy::Map, Strategy::ParityPerspective]
            } else {
                Strategy::ALL.to_vec()
            });
        }
        let mut out = Vec::new();
        for (i, name) in self.strategies.iter().enumerate() {
            let field = format!("audit.strategies[{i}]");
            let st: Strategy = name
                .parse()
                .map_err(|e: Error| cfg_err(&field, e.to_string()))?;
            if noisy && st.needs_exact_syndrome() {
                return Err(cfg_err(
                    &field,
                    format!("`{st}` needs an error-free syndrome"),
                ));
            }
            out.push(st);
        }
        if out.len() < 2 {
            return Err(cfg_err(
                "audit.strategies",
                "an audit compares at least two strategies",
            ));
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditFile {
    audit: RandomAuditSpec,
}

/// Parses `{"audit": {...}}`.
pub fn parse_audit_spec(text: &str) -> Result<RandomAuditSpec> {
    let f: AuditFile = serde_json::from_str(text).map_err(json_error)?;
    f.audit.validate()?;
    Ok(f.audit)
}

/// Whether a JSON document is a random-audit description.
pub fn is_audit_document(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .map(|v| v.get("audit").is_some())
        .unwrap_or(false)
}

fn below<R: Rng>(rng: &mut R, n: usize) -> usize {
    ((uniform(rng) * n as f64) as usize).min(n - 1)
}

fn in_range<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> usize {
    lo + below(rng, hi - lo + 1)
}

fn random_poly<R: Rng>(rng: &mut R, q: u32, len: usize) -> Vec<Symbol> {
    (0..len).map(|_| below(rng, q as usize) as Symbol).collect()
}

fn random_nonzero<R: Rng>(rng: &mut R, q: u32) -> Symbol {
    1 + below(rng, q as usize - 1) as Symbol
}

/// Largest memory per input keeping `q^(k * m)` within the state cap.
fn memory_cap(q: u32, k: usize, max_memory: usize) -> usize {
    let mut m = max_memory;
    while m > 1 && (q as usize).pow((k * m) as u32) > MAX_RANDOM_STATES {
        m -= 1;
    }
    m
}

/// A random systematic realization: usually one input, sometimes two
/// (feedforward), one or two parity outputs, recursive or feedforward.
pub fn random_realization<R: Rng>(
    rng: &mut R,
    q: u32,
    max_memory: usize,
) -> Result<ParityRealization> {
    let field = Field::new(q)?;
    let k = if uniform(rng) < 0.2 { 2 } else { 1 };
    let n_minus_k = in_range(rng, 1, 2);
    let memory = in_range(rng, 1, memory_cap(q, k, max_memory));
    if k == 1 && uniform(rng) < 0.5 {
        let mut feedback = random_poly(rng, q, memory + 1);
        feedback[0] = random_nonzero(rng, q);
        feedback[memory] = random_nonzero(rng, q);
        let taps: Vec<Vec<Symbol>> = (0..n_minus_k)
            .map(|_| random_poly(rng, q, memory + 1))
            .collect();
        ParityRealization::recursive(field, &taps, &feedback)
    } else {
        let taps: Vec<Vec<Vec<Symbol>>> = (0..n_minus_k)
            .map(|_| (0..k).map(|_| random_poly(rng, q, memory + 1)).collect())
            .collect();
        ParityRealization::feedforward(field, &taps)
    }
}

/// A non-uniform pmf with every entry bounded away from zero.
pub fn random_prior<R: Rng>(rng: &mut R, q: u32) -> Result<SourcePrior> {
    let w: Vec<f64> = (0..q).map(|_| 0.1 + uniform(rng)).collect();
    let total: f64 = w.iter().sum();
    SourcePrior::new(w.into_iter().map(|v| v / total).collect())
}

/// Crossover uniform in the open interval `(0, (q - 1) / q)`.
pub fn random_crossover<R: Rng>(rng: &mut R, q: u32) -> f64 {
    let max = (q - 1) as f64 / q as f64;
    loop {
        let e = uniform(rng) * max;
        if e > 0.0 {
            return e;
        }
    }
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, below(rng, i + 1));
    }
    p
}

/// One random convolutional audit instance, reproducible from `seed`.
#[derive(Debug)]
pub struct AuditInstance {
    pub seed: u64,
    pub code: SyndromeCode,
    pub prior: SourcePrior,
    pub epsilon: f64,
    pub channel: SymbolChannel,
    pub syndrome_channel: SyndromeChannel,
    pub sample: ConvSample,
}

impl AuditInstance {
    pub fn evidence(&self) -> SyndromeEvidence<'_> {
        match &self.sample.r {
            Some(r) => SyndromeEvidence::Received {
                r,
                channel: &self.syndrome_channel,
            },
            None => SyndromeEvidence::Exact(&self.sample.s),
        }
    }

    pub fn oracle_syndrome(&self) -> OracleSyndrome<'_> {
        match &self.sample.r {
            Some(r) => OracleSyndrome::Received {
                r,
                channel: &self.syndrome_channel,
            },
            None => OracleSyndrome::Exact(&self.sample.s),
        }
    }

    pub fn decode(&self, strategy: Strategy) -> Result<DecodeResult> {
        decode(
            &self.code,
            strategy,
            self.evidence(),
            &self.sample.y,
            &self.prior,
            &self.channel,
        )
    }
}

/// Block length choice for a generated instance.
#[derive(Debug, Clone, Copy)]
enum Sizing {
    Range(usize, usize),
    /// Largest admissible length keeps `q^(nN)` within the budget.
    Oracle(u64),
}

fn generate_instance(spec: &RandomAuditSpec, seed: u64, sizing: Sizing) -> Result<AuditInstance> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let q = spec.fields[below(&mut rng, spec.fields.len())];
    let realization = random_realization(&mut rng, q, spec.max_memory)?;
    let prior = random_prior(&mut rng, q)?;
    let epsilon = random_crossover(&mut rng, q);
    let channel = SymbolChannel::qsc(realization.field(), epsilon)?;
    let block_length = match sizing {
        Sizing::Range(lo, hi) => in_range(&mut rng, lo, hi),
        Sizing::Oracle(budget) => {
            let per_step = (q as u64).pow(realization.n() as u32);
            let mut max_n = 1;
            while per_step
                .checked_pow(max_n as u32 + 1)
                .is_some_and(|v| v <= budget)
            {
                max_n += 1;
            }
            in_range(&mut rng, 1, max_n)
        }
    };
    let size = realization.par_space().size();
    let syndrome_channel = match spec.syndrome {
        AuditSyndrome::ErrorFree => SyndromeChannel::error_free(size),
        AuditSyndrome::Noisy => SyndromeChannel::qsc(
            size,
            0.3 * uniform(&mut rng) * (size - 1) as f64 / size as f64 + 1e-3,
        )?,
    };
    let code = SyndromeCode::new(realization);
    let sample = sample_convolutional(
        &code,
        block_length,
        &prior,
        &channel,
        &syndrome_channel,
        &mut rng,
    )?;
    Ok(AuditInstance {
        seed,
        code,
        prior,
        epsilon,
        channel,
        syndrome_channel,
        sample,
    })
}

/// Random convolutional instance for an audit; `seed` is a replay seed.
pub fn random_instance(spec: &RandomAuditSpec, seed: u64) -> Result<AuditInstance> {
    generate_instance(
        spec,
        seed,
        Sizing::Range(spec.block_lengths[0], spec.block_lengths[1]),
    )
}

/// Random instance small enough for exhaustive enumeration.
pub fn random_oracle_instance(spec: &RandomAuditSpec, seed: u64) -> Result<AuditInstance> {
    generate_instance(spec, seed, Sizing::Oracle(VERIFY_BUDGET))
}

/// An instance whose posteriors are all exactly uniform: uniform prior and
/// a correlation channel that carries no information. Any two tie rules
/// then disagree on every decision.
pub fn uninformative_instance(q: u32, block_length: usize, seed: u64) -> Result<AuditInstance> {
    let field = Field::new(q)?;
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let realization = random_realization(&mut rng, q, 2)?;
    let prior = SourcePrior::uniform(field);
    let epsilon = (q - 1) as f64 / q as f64;
    let channel = SymbolChannel::qsc(field, epsilon)?;
    let syndrome_channel = SyndromeChannel::error_free(realization.par_space().size());
    let code = SyndromeCode::new(realization);
    let sample = sample_convolutional(
        &code,
        block_length,
        &prior,
        &channel,
        &syndrome_channel,
        &mut rng,
    )?;
    Ok(AuditInstance {
        seed,
        code,
        prior,
        epsilon,
        channel,
        syndrome_channel,
        sample,
    })
}

/// Random turbo instance: two recursive memory-2 constituents over one
/// field and a random interleaver.
#[derive(Debug)]
pub struct TurboAuditInstance {
    pub seed: u64,
    pub code: TurboSyndromeCode,
    pub prior: SourcePrior,
    pub epsilon: f64,
    pub channel: SymbolChannel,
    pub syndrome_channels: Vec<SyndromeChannel>,
    pub sample: TurboSample,
    pub iterations: usize,
}

impl TurboAuditInstance {
    pub fn decode(&self, strategy: Strategy) -> Result<TurboDecodeResult> {
        let evidence: [SyndromeEvidence; 2] = match &self.sample.r {
            Some(r) => [0, 1].map(|j| SyndromeEvidence::Received {
                r: &r[j],
                channel: &self.syndrome_channels[j],
            }),
            None => [0, 1].map(|j| SyndromeEvidence::Exact(&self.sample.s[j])),
        };
        turbo_syndrome_decode(
            &self.code,
            evidence,
            &self.sample.y,
            &self.prior,
            &self.channel,
            strategy,
            self.iterations,
        )
    }
}

pub fn random_turbo_instance(spec: &RandomAuditSpec, seed: u64) -> Result<TurboAuditInstance> {
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let q = spec.fields[below(&mut rng, spec.fields.len())];
    let field = Field::new(q)?;
    let constituent = |rng: &mut Xoshiro256StarStar| {
        let mut feedback = random_poly(rng, q, 3);
        feedback[0] = random_nonzero(rng, q);
        feedback[2] = random_nonzero(rng, q);
        let mut taps = random_poly(rng, q, 3);
        taps[0] = random_nonzero(rng, q);
        ParityRealization::recursive(field, &[taps], &feedback)
    };
    let c0 = constituent(&mut rng)?;
    let c1 = constituent(&mut rng)?;
    let lo = spec.block_lengths[0].min(MAX_TURBO_BLOCK);
    let hi = spec.block_lengths[1].min(MAX_TURBO_BLOCK);
    let n = in_range(&mut rng, lo, hi);
    let turbo = TurboCode::new(c0, c1, random_permutation(&mut rng, n))?;
    let prior = random_prior(&mut rng, q)?;
    let epsilon = random_crossover(&mut rng, q);
    let channel = SymbolChannel::qsc(field, epsilon)?;
    let syndrome_channels: Vec<SyndromeChannel> = (0..2)
        .map(|j| {
            let size = turbo.constituent(j).par_space().size();
            match spec.syndrome {
                AuditSyndrome::ErrorFree => Ok(SyndromeChannel::error_free(size)),
                AuditSyndrome::Noisy => SyndromeChannel::qsc(size, 1e-3 + 0.2 * uniform(&mut rng)),
            }
        })
        .collect::<Result<_>>()?;
    let code = TurboSyndromeCode::new(turbo);
    let sample = sample_turbo(&code, &prior, &channel, &syndrome_channels, &mut rng)?;
    Ok(TurboAuditInstance {
        seed,
        code,
        prior,
        epsilon,
        channel,
        syndrome_channels,
        sample,
        iterations: spec.iterations,
    })
}

/// Largest relative entrywise discrepancy between two message sequences.
pub fn message_discrepancy(a: &[Message], b: &[Message]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for (ma, mb) in a.iter().zip(b) {
        if ma.len() != mb.len() {
            return f64::INFINITY;
        }
        for (&x, &y) in ma.values().iter().zip(mb.values()) {
            let d = (x - y).abs() / x.max(y).max(f64::MIN_POSITIVE);
            worst = worst.max(if d.is_nan() { f64::INFINITY } else { d });
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub discrepancy: f64,
    pub hard_mismatch: bool,
}

impl Comparison {
    pub fn within(&self, tolerance: f64) -> bool {
        !self.hard_mismatch && self.discrepancy <= tolerance
    }
}

pub fn compare_results(
    a: &DecodeResult,
    b: &DecodeResult,
    compare_parity_decisions: bool,
) -> Comparison {
    let discrepancy = message_discrepancy(&a.post_sys, &b.post_sys)
        .max(message_discrepancy(&a.post_par, &b.post_par));
    let hard_mismatch = a.sys != b.sys || (compare_parity_decisions && a.par != b.par);
    Comparison {
        discrepancy,
        hard_mismatch,
    }
}

fn parity_decisions_comparable(a: Strategy, b: Strategy) -> bool {
    let reencode = Strategy::Isf(ParityMode::Reencode);
    a != reencode && b != reencode
}

/// Overrides how one strategy breaks ties; used to check the audit itself
/// detects disagreement.
#[derive(Debug, Clone, Copy, Default)]
pub struct AuditOptions {
    pub tie_override: Option<(Strategy, TieRule)>,
}

impl AuditOptions {
    fn apply(&self, strategy: Strategy, r: DecodeResult) -> DecodeResult {
        match self.tie_override {
            Some((st, rule)) if st == strategy => {
                DecodeResult::from_posteriors(r.post_sys, r.post_par, rule)
            }
            _ => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub instance: usize,
    pub replay_seed: u64,
    pub reference: String,
    pub strategy: String,
    pub discrepancy: f64,
    pub hard_mismatch: bool,
    /// Set when a decoder failed outright.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub instances: usize,
    pub comparisons: usize,
    pub tolerance: f64,
    pub max_discrepancy: f64,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn replay_seeds(&self) -> Vec<u64> {
        let mut seeds: Vec<u64> = self.violations.iter().map(|v| v.replay_seed).collect();
        seeds.dedup();
        seeds
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "instances {}  comparisons {}  max discrepancy {:.3e}  tolerance {:.1e}  violations {}\n",
            self.instances,
            self.comparisons,
            self.max_discrepancy,
            self.tolerance,
            self.violations.len()
        );
        for v in &self.violations {
            s.push_str(&format!(
                "  instance {} replay seed {}: {} vs {} discrepancy {:.3e}{}{}\n",
                v.instance,
                v.replay_seed,
                v.reference,
                v.strategy,
                v.discrepancy,
                if v.hard_mismatch {
                    ", decisions differ"
                } else {
                    ""
                },
                v.error
                    .as_deref()
                    .map(|e| format!(", error: {e}"))
                    .unwrap_or_default()
            ));
        }
        s
    }

    fn merge(parts: Vec<(usize, f64, Vec<Violation>)>, instances: usize, tolerance: f64) -> Self {
        let mut report = AuditReport {
            instances,
            comparisons: 0,
            tolerance,
            max_discrepancy: 0.0,
            violations: Vec::new(),
        };
        for (c, d, v) in parts {
            report.comparisons += c;
            report.max_discrepancy = report.max_discrepancy.max(d);
            report.violations.extend(v);
        }
        report
    }
}

type Outcome<T> = (Strategy, Result<T>);

/// Compares every outcome with the first one.
fn compare_outcomes<T>(
    instance: usize,
    seed: u64,
    outcomes: &[Outcome<T>],
    tolerance: f64,
    cmp: impl Fn(Strategy, &T, Strategy, &T) -> Comparison,
) -> (usize, f64, Vec<Violation>) {
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    let (ref_st, ref_res) = &outcomes[0];
    let violation = |st: Strategy, c: Option<Comparison>, error: Option<String>| Violation {
        instance,
        replay_seed: seed,
        reference: ref_st.to_string(),
        strategy: st.to_string(),
        discrepancy: c.map_or(f64::INFINITY, |c| c.discrepancy),
        hard_mismatch: c.is_some_and(|c| c.hard_mismatch),
        error,
    };
    for (st, res) in &outcomes[1..] {
        match (ref_res, res) {
            (Ok(a), Ok(b)) => {
                let c = cmp(*ref_st, a, *st, b);
                worst = worst.max(c.discrepancy);
                if !c.within(tolerance) {
                    violations.push(violation(*st, Some(c), None));
                }
            }
            (Err(ea), Err(eb)) if ea == eb => {}
            (Err(e), _) | (_, Err(e)) => violations.push(violation(*st, None, Some(e.to_string()))),
        }
    }
    (outcomes.len() - 1, worst, violations)
}

/// Compares all strategies on one convolutional instance.
pub fn audit_instance(
    inst: &AuditInstance,
    index: usize,
    strategies: &[Strategy],
    tolerance: f64,
    options: AuditOptions,
) -> (usize, f64, Vec<Violation>) {
    let outcomes: Vec<Outcome<DecodeResult>> = strategies
        .iter()
        .map(|&st| (st, inst.decode(st).map(|r| options.apply(st, r))))
        .collect();
    let mut part = compare_outcomes(index, inst.seed, &outcomes, tolerance, |sa, a, sb, b| {
        compare_results(a, b, parity_decisions_comparable(sa, sb))
    });
    // With an identity syndrome channel, soft-syndrome decoding must reduce
    // to decoding with the exact syndrome.
    if inst.sample.r.is_some() {
        let identity = SyndromeChannel::error_free(inst.syndrome_channel.size());
        let soft = SyndromeEvidence::Received {
            r: &inst.sample.s,
            channel: &identity,
        };
        let exact = SyndromeEvidence::Exact(&inst.sample.s);
        let run = |st: Strategy, ev: SyndromeEvidence| {
            decode(
                &inst.code,
                st,
                ev,
                &inst.sample.y,
                &inst.prior,
                &inst.channel,
            )
        };
        let mut outcomes = vec![(Strategy::Complementary, run(Strategy::Complementary, exact))];
        outcomes.extend(strategies.iter().map(|&st| (st, run(st, soft))));
        let extra = compare_outcomes(index, inst.seed, &outcomes, tolerance, |_, a, _, b| {
            compare_results(a, b, true)
        });
        part.0 += extra.0;
        part.1 = part.1.max(extra.1);
        part.2.extend(extra.2);
    }
    part
}

fn turbo_comparison(a: &TurboDecodeResult, b: &TurboDecodeResult, parity: bool) -> Comparison {
    let mut d = message_discrepancy(&a.post_sys, &b.post_sys);
    for j in 0..2 {
        d = d.max(message_discrepancy(&a.post_par[j], &b.post_par[j]));
    }
    if a.trace.len() != b.trace.len() {
        d = f64::INFINITY;
    }
    for (ta, tb) in a.trace.iter().zip(&b.trace) {
        d = d.max(message_discrepancy(ta, tb));
    }
    Comparison {
        discrepancy: d,
        hard_mismatch: a.sys != b.sys || (parity && a.par != b.par),
    }
}

pub fn audit_turbo_instance(
    inst: &TurboAuditInstance,
    index: usize,
    strategies: &[Strategy],
    tolerance: f64,
) -> (usize, f64, Vec<Violation>) {
    let outcomes: Vec<Outcome<TurboDecodeResult>> =
        strategies.iter().map(|&st| (st, inst.decode(st))).collect();
    compare_outcomes(index, inst.seed, &outcomes, tolerance, |sa, a, sb, b| {
        turbo_comparison(a, b, parity_decisions_comparable(sa, sb))
    })
}

fn instance_seeds(spec: &RandomAuditSpec) -> Vec<(usize, u64)> {
    match spec.replay {
        Some(seed) => vec![(0, seed)],
        None => (0..spec.instances)
            .map(|i| (i, trial_seed(spec.seed, i as u64)))
            .collect(),
    }
}

/// Runs a random-instance equivalence audit.
pub fn run_audit(
    spec: &RandomAuditSpec,
    options: AuditOptions,
    threads: usize,
) -> Result<AuditReport> {
    spec.validate()?;
    let strategies = spec.strategy_list()?;
    let seeds = instance_seeds(spec);
    let parts = with_pool(threads, || {
        seeds
            .par_iter()
            .map(|&(i, seed)| match spec.kind {
                AuditKind::Convolutional => random_instance(spec, seed)
                    .map(|inst| audit_instance(&inst, i, &strategies, spec.tolerance, options)),
                AuditKind::Turbo => random_turbo_instance(spec, seed)
                    .map(|inst| audit_turbo_instance(&inst, i, &strategies, spec.tolerance)),
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(AuditReport::merge(parts, seeds.len(), spec.tolerance))
}

/// Compares every strategy listed in an experiment on each of its trials.
pub fn audit_experiment(exp: &Experiment, tolerance: f64, threads: usize) -> Result<AuditReport> {
    let jobs: Vec<(usize, usize)> = (0..exp.points.len())
        .flat_map(|p| (0..exp.trials).map(move |t| (p, t)))
        .collect();
    if exp.strategies.len() < 2 {
        return Err(cfg_err(
            "strategies",
            "an audit compares at least two strategies",
        ));
    }
    let parts = with_pool(threads, || {
        jobs.par_iter()
            .map(|&(p, t)| {
                let uid = (p * exp.trials + t) as u64;
                let mut rng = super::trial_rng(exp.seed, uid);
                let ch = &exp.points[p].channel;
                match &exp.code {
                    CodeUnderTest::Convolutional { code, block_length } => {
                        let sample = sample_convolutional(
                            code,
                            *block_length,
                            &exp.prior,
                            ch,
                            &exp.syndrome_channels[0],
                            &mut rng,
                        )?;
                        let evidence = match &sample.r {
                            Some(r) => SyndromeEvidence::Received {
                                r,
                                channel: &exp.syndrome_channels[0],
                            },
                            None => SyndromeEvidence::Exact(&sample.s),
                        };
                        let outcomes: Vec<Outcome<DecodeResult>> = exp
                            .strategies
                            .iter()
                            .map(|&st| (st, decode(code, st, evidence, &sample.y, &exp.prior, ch)))
                            .collect();
                        Ok(compare_outcomes(
                            uid as usize,
                            uid,
                            &outcomes,
                            tolerance,
                            |sa, a, sb, b| {
                                compare_results(a, b, parity_decisions_comparable(sa, sb))
                            },
                        ))
                    }
                    CodeUnderTest::Turbo(tsc) => {
                        let sample =
                            sample_turbo(tsc, &exp.prior, ch, &exp.syndrome_channels, &mut rng)?;
                        let evidence: [SyndromeEvidence; 2] = match &sample.r {
                            Some(r) => [0, 1].map(|j| SyndromeEvidence::Received {
                                r: &r[j],
                                channel: &exp.syndrome_channels[j],
                            }),
                            None => [0, 1].map(|j| SyndromeEvidence::Exact(&sample.s[j])),
                        };
                        let outcomes: Vec<Outcome<TurboDecodeResult>> = exp
                            .strategies
                            .iter()
                            .map(|&st| {
                                (
                                    st,
                                    turbo_syndrome_decode(
                                        tsc,
                                        evidence,
                                        &sample.y,
                                        &exp.prior,
                                        ch,
                                        st,
                                        exp.iterations,
                                    ),
                                )
                            })
                            .collect();
                        Ok(compare_outcomes(
                            uid as usize,
                            uid,
                            &outcomes,
                            tolerance,
                            |sa, a, sb, b| {
                                turbo_comparison(a, b, parity_decisions_comparable(sa, sb))
                            },
                        ))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(AuditReport::merge(parts, jobs.len(), tolerance))
}

/// Compares each strategy with exhaustive enumeration on one instance.
pub fn verify_instance(
    inst: &AuditInstance,
    index: usize,
    strategies: &[Strategy],
    tolerance: f64,
) -> Result<(usize, f64, Vec<Violation>)> {
    let oracle = exact_marginals(
        inst.code.realization(),
        &inst.sample.y,
        &inst.prior,
        &inst.channel,
        inst.oracle_syndrome(),
    )?;
    let mut outcomes: Vec<(Option<Strategy>, Result<DecodeResult>)> =
        vec![(None, Ok(oracle.result))];
    outcomes.extend(strategies.iter().map(|&st| (Some(st), inst.decode(st))));
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    let reference = outcomes[0].1.as_ref().expect("oracle result");
    for (st, res) in &outcomes[1..] {
        let st = st.expect("decoder outcome");
        let (c, error) = match res {
            Ok(r) => (
                Some(compare_results(
                    reference,
                    r,
                    parity_decisions_comparable(st, st),
                )),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };
        if let Some(c) = c {
            worst = worst.max(c.discrepancy);
        }
        if !c.is_some_and(|c| c.within(tolerance)) {
            violations.push(Violation {
                instance: index,
                replay_seed: inst.seed,
                reference: "oracle".into(),
                strategy: st.to_string(),
                discrepancy: c.map_or(f64::INFINITY, |c| c.discrepancy),
                hard_mismatch: c.is_some_and(|c| c.hard_mismatch),
                error,
            });
        }
    }
    Ok((strategies.len(), worst, violations))
}

/// Oracle verification on random instances small enough to enumerate.
pub fn run_verify(spec: &RandomAuditSpec, threads: usize) -> Result<AuditReport> {
    spec.validate()?;
    if spec.kind != AuditKind::Convolutional {
        return Err(cfg_err(
            "audit.kind",
            "oracle verification covers convolutional codes",
        ));
    }
    let strategies = spec.strategy_list()?;
    let seeds = instance_seeds(spec);
    let parts = with_pool(threads, || {
        seeds
            .par_iter()
            .map(|&(i, seed)| {
                let inst = random_oracle_instance(spec, seed)?;
                verify_instance(&inst, i, &strategies, spec.tolerance)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(AuditReport::merge(parts, seeds.len(), spec.tolerance))
}

/// Oracle verification on the trials of an experiment (convolutional codes
/// with blocks small enough to enumerate).
pub fn verify_experiment(exp: &Experiment, tolerance: f64, threads: usize) -> Result<AuditReport> {
    let CodeUnderTest::Convolutional { code, block_length } = &exp.code else {
        return Err(cfg_err(
            "code",
            "oracle verification covers convolutional codes",
        ));
    };
    let jobs: Vec<(usize, usize)> = (0..exp.points.len())
        .flat_map(|p| (0..exp.trials).map(move |t| (p, t)))
        .collect();
    let parts = with_pool(threads, || {
        jobs.par_iter()
            .map(|&(p, t)| {
                let uid = (p * exp.trials + t) as u64;
                let mut rng = super::trial_rng(exp.seed, uid);
                let channel = exp.points[p].channel.clone();
                let syndrome_channel = exp.syndrome_channels[0].clone();
                let sample = sample_convolutional(
                    code,
                    *block_length,
                    &exp.prior,
                    &channel,
                    &syndrome_channel,
                    &mut rng,
                )?;
                let inst = AuditInstance {
                    seed: uid,
                    code: SyndromeCode::new(code.realization().clone()),
                    prior: exp.prior.clone(),
                    epsilon: exp.points[p].epsilon.unwrap_or(f64::NAN),
                    channel,
                    syndrome_channel,
                    sample,
                };
                verify_instance(&inst, uid as usize, &exp.strategies, tolerance)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(AuditReport::merge(parts, jobs.len(), tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_realizations_are_valid() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(3);
        for _ in 0..200 {
            let q = [2, 3, 5][below(&mut rng, 3)];
            let r = random_realization(&mut rng, q, 3).unwrap();
            assert!(r.num_states() <= MAX_RANDOM_STATES);
            assert!((1..=2).contains(&r.k()) && (1..=2).contains(&r.n_minus_k()));
        }
    }

    #[test]
    fn permutations_are_bijections() {
        let mut rng = Xoshiro256StarStar::seed_from_u64(5);
        let mut p = random_permutation(&mut rng, 50);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn instances_replay_from_their_seed() {
        let spec = RandomAuditSpec::new(AuditKind::Convolutional, AuditSyndrome::Noisy, 3, 1, 1e-8);
        let a = random_instance(&spec, 77).unwrap();
        let b = random_instance(&spec, 77).unwrap();
        assert_eq!(a.sample, b.sample);
        assert_eq!(a.epsilon, b.epsilon);
    }

    #[test]
    fn small_audits_pass() {
        for syndrome in [AuditSyndrome::ErrorFree, AuditSyndrome::Noisy] {
            let mut spec = RandomAuditSpec::new(AuditKind::Convolutional, syndrome, 12, 4, 1e-8);
            spec.block_lengths = [4, 24];
            let report = run_audit(&spec, AuditOptions::default(), 2).unwrap();
            assert!(report.passed(), "{}", report.render());
        }
        let mut turbo =
            RandomAuditSpec::new(AuditKind::Turbo, AuditSyndrome::ErrorFree, 4, 4, 1e-7);
        turbo.block_lengths = [4, 16];
        turbo.iterations = 2;
        assert!(run_audit(&turbo, AuditOptions::default(), 1)
            .unwrap()
            .passed());
    }

    #[test]
    fn oracle_verification_passes() {
        let spec = RandomAuditSpec::new(
            AuditKind::Convolutional,
            AuditSyndrome::ErrorFree,
            10,
            8,
            1e-10,
        );
        let report = run_verify(&spec, 2).unwrap();
        assert!(report.passed(), "{}", report.render());
        let noisy =
            RandomAuditSpec::new(AuditKind::Convolutional, AuditSyndrome::Noisy, 6, 8, 1e-10);
        assert!(run_verify(&noisy, 2).unwrap().passed());
    }

    #[test]
    fn tie_override_is_detected() {
        let inst = uninformative_instance(2, 8, 1).unwrap();
        let strategies = [Strategy::Complementary, Strategy::Map];
        let clean = audit_instance(&inst, 0, &strategies, 1e-8, AuditOptions::default());
        assert!(clean.2.is_empty());
        let opts = AuditOptions {
            tie_override: Some((Strategy::Map, TieRule::Largest)),
        };
        let (_, _, v) = audit_instance(&inst, 0, &strategies, 1e-8, opts);
        assert_eq!(v.len(), 1);
        assert!(v[0].hard_mismatch);
    }

    #[test]
    fn audit_document_parsing() {
        let text = r#"{"audit": {"instances": 3, "syndrome": "noisy", "seed": 2}}"#;
        assert!(is_audit_document(text));
        let spec = parse_audit_spec(text).unwrap();
        assert_eq!(
            spec.strategy_list().unwrap(),
            vec![Strategy::Map, Strategy::ParityPerspective]
        );
        let bad =
            r#"{"audit": {"instances": 3, "syndrome": "noisy", "strategies": ["isf", "map"]}}"#;
        assert!(
            matches!(parse_audit_spec(bad), Err(Error::Config { field, .. }) if field == "audit.strategies[0]")
        );
    }

    #[test]
    fn discrepancy_is_relative() {
        let a = vec![Message::new(vec![0.5, 0.5]).unwrap()];
        let b = vec![Message::new(vec![0.5 + 1e-12, 0.5 - 1e-12]).unwrap()];
        assert!(message_discrepancy(&a, &b) < 1e-11);
        assert_eq!(message_discrepancy(&a, &a), 0.0);
    }
}
