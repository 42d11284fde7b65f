//! Five systematic-syndrome decoding strategies and the turbo wrapper.
//!
//! All strategies run the same BCJR engine and differ only in the trellis
//! they decode on and in how input and output messages are formed:
//!
//! * `Complementary`: label-shifted copies of the code trellis, selected by `s_i`.
//! * `Isf`: the coset representative `[0 | s]` is removed from the side
//!   information, the code trellis decodes the remainder, and the result is
//!   translated back. Requires an additive correlation channel.
//! * `ParityPerspective`: the expanded source-to-syndrome trellis with the
//!   received syndrome treated as parity evidence.
//! * `SyndromeTrellis`: the expanded trellis restricted, per time step, to
//!   the branches releasing the known `s_i`.
//! * `Map`: the code trellis with parity inputs folded from side information
//!   and syndrome evidence, and parity outputs unfolded afterwards.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::bcjr::{
    run_app, tuple_message, BranchInputs, DecodeResult, Message, Section, SelectedSections,
    StaticSections, TieRule,
};
use crate::channels::{
    posterior_message, syndrome_message, SourcePrior, SymbolChannel, SyndromeChannel,
};
use crate::code::{
    build_expanded, build_trellis, ExpandedSection, ParityRealization, TrellisSection, TurboCode,
};
use crate::error::{Error, Result};
use crate::fields::{Symbol, TupleSpace};

/// How the ISF decoder estimates the parity portion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParityMode {
    /// Maximize the translated parity output message.
    Map,
    /// Re-encode the systematic estimate and add the syndrome, which always
    /// lands in the signalled coset.
    Reencode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Complementary,
    Isf(ParityMode),
    ParityPerspective,
    SyndromeTrellis,
    Map,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Complementary,
        Strategy::Isf(ParityMode::Map),
        Strategy::Isf(ParityMode::Reencode),
        Strategy::ParityPerspective,
        Strategy::SyndromeTrellis,
        Strategy::Map,
    ];

    /// Strategies that only accept an exact (error-free) syndrome.
    pub fn needs_exact_syndrome(&self) -> bool {
        matches!(
            self,
            Strategy::Complementary | Strategy::Isf(_) | Strategy::SyndromeTrellis
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Complementary => "complementary",
            Strategy::Isf(ParityMode::Map) => "isf",
            Strategy::Isf(ParityMode::Reencode) => "isf-reencode",
            Strategy::ParityPerspective => "parity-perspective",
            Strategy::SyndromeTrellis => "syndrome-trellis",
            Strategy::Map => "map",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.to_string() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown strategy `{s}`")))
    }
}

/// What the decoder knows about the syndrome.
#[derive(Debug, Clone, Copy)]
pub enum SyndromeEvidence<'a> {
    Exact(&'a [usize]),
    Received {
        r: &'a [usize],
        channel: &'a SyndromeChannel,
    },
}

impl<'a> SyndromeEvidence<'a> {
    fn len(&self) -> usize {
        match self {
            SyndromeEvidence::Exact(s) => s.len(),
            SyndromeEvidence::Received { r, .. } => r.len(),
        }
    }

    /// The exact syndrome, if known.
    pub fn exact(&self) -> Option<&'a [usize]> {
        match *self {
            SyndromeEvidence::Exact(s) => Some(s),
            SyndromeEvidence::Received { r, channel } if channel.is_error_free() => Some(r),
            SyndromeEvidence::Received { .. } => None,
        }
    }

    fn messages(&self, size: usize) -> Result<Vec<Message>> {
        match *self {
            SyndromeEvidence::Exact(s) => Ok(s.iter().map(|&v| Message::delta(size, v)).collect()),
            SyndromeEvidence::Received { r, channel } => {
                if channel.size() != size {
                    return Err(Error::InvalidInput(format!(
                        "syndrome channel over {} tuples, code syndromes take {size} values",
                        channel.size()
                    )));
                }
                r.iter().map(|&v| syndrome_message(channel, v)).collect()
            }
        }
    }
}

/// Side information for a convolutional block, split like the source:
/// `sys` holds `N * k` symbols, `par` holds `N * (n - k)` symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SideInfo {
    pub sys: Vec<Symbol>,
    pub par: Vec<Symbol>,
}

impl SideInfo {
    /// Splits a per-time interleaved stream `[ys_i | yp_i]`.
    pub fn from_interleaved(symbols: &[Symbol], k: usize, n_minus_k: usize) -> Result<Self> {
        let n = k + n_minus_k;
        if !symbols.len().is_multiple_of(n) {
            return Err(Error::InvalidInput(format!(
                "{} side-information symbols do not split into {n}-tuples",
                symbols.len()
            )));
        }
        let mut out = SideInfo::default();
        for chunk in symbols.chunks(n) {
            out.sys.extend_from_slice(&chunk[..k]);
            out.par.extend_from_slice(&chunk[k..]);
        }
        Ok(out)
    }

    pub fn to_interleaved(&self, k: usize, n_minus_k: usize) -> Vec<Symbol> {
        let steps = if k > 0 { self.sys.len() / k } else { 0 };
        let mut out = Vec::with_capacity(self.sys.len() + self.par.len());
        for i in 0..steps {
            out.extend_from_slice(&self.sys[i * k..(i + 1) * k]);
            out.extend_from_slice(&self.par[i * n_minus_k..(i + 1) * n_minus_k]);
        }
        out
    }
}

/// Per-time tuple messages built from a flat observation stream.
pub fn observation_messages(
    obs: &[Symbol],
    space: TupleSpace,
    prior: &SourcePrior,
    ch: &SymbolChannel,
) -> Result<Vec<Message>> {
    let w = space.width();
    if w == 0 {
        return Ok(Vec::new());
    }
    obs.chunks(w)
        .map(|chunk| {
            let per: Vec<Message> = chunk
                .iter()
                .map(|&y| posterior_message(prior, ch, y))
                .collect::<Result<_>>()?;
            Ok(tuple_message(&per, space))
        })
        .collect()
}

fn parity_messages(
    obs: &[Symbol],
    steps: usize,
    space: TupleSpace,
    prior: &SourcePrior,
    ch: &SymbolChannel,
) -> Result<Vec<Message>> {
    if space.width() == 0 {
        return Ok(vec![Message::uniform(1); steps]);
    }
    observation_messages(obs, space, prior, ch)
}

/// A realization with every trellis form the strategies need, built lazily.
#[derive(Debug)]
pub struct SyndromeCode {
    realization: ParityRealization,
    trellis: TrellisSection,
    expanded: ExpandedSection,
    principal: Section,
    complementary: OnceLock<Vec<Section>>,
    expanded_section: OnceLock<Section>,
    syndrome_slices: OnceLock<Vec<Section>>,
    par_sub: OnceLock<Vec<usize>>,
}

impl SyndromeCode {
    pub fn new(realization: ParityRealization) -> Self {
        let trellis = build_trellis(&realization);
        let expanded = build_expanded(&trellis, realization.par_space());
        let principal = Section::principal(&trellis);
        SyndromeCode {
            realization,
            trellis,
            expanded,
            principal,
            complementary: OnceLock::new(),
            expanded_section: OnceLock::new(),
            syndrome_slices: OnceLock::new(),
            par_sub: OnceLock::new(),
        }
    }

    pub fn realization(&self) -> &ParityRealization {
        &self.realization
    }

    pub fn trellis(&self) -> &TrellisSection {
        &self.trellis
    }

    pub fn expanded(&self) -> &ExpandedSection {
        &self.expanded
    }

    fn sys_space(&self) -> TupleSpace {
        self.realization.sys_space()
    }

    fn par_space(&self) -> TupleSpace {
        self.realization.par_space()
    }

    fn complementary_sections(&self) -> &[Section] {
        self.complementary.get_or_init(|| {
            (0..self.par_space().size())
                .map(|s| Section::complementary(&self.trellis, s, self.par_space()))
                .collect()
        })
    }

    fn expanded_section(&self) -> &Section {
        self.expanded_section
            .get_or_init(|| Section::expanded(&self.expanded))
    }

    fn syndrome_slices(&self) -> &[Section] {
        self.syndrome_slices.get_or_init(|| {
            (0..self.par_space().size())
                .map(|s| Section::syndrome_slice(&self.expanded, s))
                .collect()
        })
    }

    fn par_sub(&self) -> &[usize] {
        self.par_sub.get_or_init(|| self.par_space().sub_table())
    }

    fn check_syndrome(&self, s: &[usize]) -> Result<()> {
        match s.iter().find(|&&v| v >= self.par_space().size()) {
            Some(&bad) => Err(Error::OutOfRange {
                value: bad,
                limit: self.par_space().size(),
            }),
            None => Ok(()),
        }
    }
}

/// Output of decoding one constituent code.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstituentOutput {
    /// Output message on the systematic tuples, excluding their own input.
    pub extrinsic: Vec<Message>,
    pub result: DecodeResult,
}

/// Decodes one code given arbitrary systematic input messages (channel
/// evidence, possibly times turbo extrinsic information) and the raw parity
/// side information.
pub fn decode_constituent(
    code: &SyndromeCode,
    strategy: Strategy,
    sys_in: &[Message],
    par_obs: &[Symbol],
    syndrome: SyndromeEvidence,
    prior: &SourcePrior,
    ch: &SymbolChannel,
) -> Result<ConstituentOutput> {
    let steps = sys_in.len();
    let par_space = code.par_space();
    if syndrome.len() != steps || par_obs.len() != steps * par_space.width() {
        return Err(Error::InvalidInput(format!(
            "block of {steps} steps needs {steps} syndrome tuples and {} parity observations, got {} and {}",
            steps * par_space.width(),
            syndrome.len(),
            par_obs.len()
        )));
    }
    if let Some(s) = syndrome.exact() {
        code.check_syndrome(s)?;
    }
    let exact = || {
        syndrome.exact().ok_or_else(|| {
            Error::Unsupported(format!(
                "strategy `{strategy}` needs an error-free syndrome"
            ))
        })
    };

    match strategy {
        Strategy::Complementary => {
            let s = exact()?;
            let par_in = parity_messages(par_obs, steps, par_space, prior, ch)?;
            let provider = SelectedSections {
                sections: code.complementary_sections(),
                select: s,
            };
            let out = run_app(
                &provider,
                BranchInputs {
                    a: sys_in,
                    b: &par_in,
                },
            )?;
            Ok(ConstituentOutput {
                extrinsic: out.lambda_a,
                result: DecodeResult::from_posteriors(out.post_a, out.post_b, TieRule::Smallest),
            })
        }
        Strategy::Isf(mode) => {
            let s = exact()?;
            if !ch.is_additive() || ch.outputs() != ch.inputs() {
                return Err(Error::Unsupported(
                    "inverse syndrome formation needs an additive correlation channel over GF(q)"
                        .into(),
                ));
            }
            let field = par_space.field();
            let w = par_space.width();
            // Remove c = [0 | s] from the side information; the parity part
            // of c0 = x - c then has prior p(z + s).
            let mut c0_in = Vec::with_capacity(steps);
            for (i, &si) in s.iter().enumerate() {
                let per: Vec<Message> = (0..w)
                    .map(|d| {
                        let c = par_space.digit(si, d);
                        posterior_message(
                            &prior.translated(c),
                            ch,
                            field.sub(par_obs[i * w + d], c),
                        )
                    })
                    .collect::<Result<_>>()?;
                c0_in.push(if w == 0 {
                    Message::uniform(1)
                } else {
                    tuple_message(&per, par_space)
                });
            }
            let provider = StaticSections {
                section: &code.principal,
                len: steps,
            };
            let out = run_app(
                &provider,
                BranchInputs {
                    a: sys_in,
                    b: &c0_in,
                },
            )?;
            let post_par: Vec<Message> = out
                .post_b
                .iter()
                .zip(s)
                .map(|(m, &si)| m.translated(si, par_space))
                .collect();
            let mut result = DecodeResult::from_posteriors(out.post_a, post_par, TieRule::Smallest);
            if mode == ParityMode::Reencode {
                let p = code.realization.systematic_encode(&result.sys)?;
                result.par = p
                    .iter()
                    .zip(s)
                    .map(|(&pi, &si)| par_space.add(pi, si))
                    .collect();
            }
            Ok(ConstituentOutput {
                extrinsic: out.lambda_a,
                result,
            })
        }
        Strategy::ParityPerspective | Strategy::SyndromeTrellis => {
            let par_in = parity_messages(par_obs, steps, par_space, prior, ch)?;
            let (qk, qp) = (code.sys_space().size(), par_space.size());
            let joint: Vec<Message> = sys_in
                .iter()
                .zip(&par_in)
                .map(|(ms, mp)| {
                    let mut v = vec![0.0; qk * qp];
                    for xp in 0..qp {
                        for xs in 0..qk {
                            v[xs + qk * xp] = ms.get(xs) * mp.get(xp);
                        }
                    }
                    Message::normalized_from(v)
                })
                .collect::<Result<_>>()?;
            let out = if strategy == Strategy::ParityPerspective {
                let syn = syndrome.messages(qp)?;
                let provider = StaticSections {
                    section: code.expanded_section(),
                    len: steps,
                };
                run_app(&provider, BranchInputs { a: &joint, b: &syn })?
            } else {
                let s = exact()?;
                let unit = vec![Message::uniform(1); steps];
                let provider = SelectedSections {
                    sections: code.syndrome_slices(),
                    select: s,
                };
                run_app(
                    &provider,
                    BranchInputs {
                        a: &joint,
                        b: &unit,
                    },
                )?
            };
            let mut extrinsic = Vec::with_capacity(steps);
            let mut post_sys = Vec::with_capacity(steps);
            let mut post_par = Vec::with_capacity(steps);
            for i in 0..steps {
                let (lam, post) = (&out.lambda_a[i], &out.post_a[i]);
                let mut ext = vec![0.0; qk];
                let mut ps = vec![0.0; qk];
                let mut pp = vec![0.0; qp];
                for xp in 0..qp {
                    let mu_p = par_in[i].get(xp);
                    for xs in 0..qk {
                        let x = xs + qk * xp;
                        ext[xs] += mu_p * lam.get(x);
                        ps[xs] += post.get(x);
                        pp[xp] += post.get(x);
                    }
                }
                let inconsistent = |_| Error::Inconsistent { time: i };
                extrinsic.push(Message::normalized_from(ext).map_err(inconsistent)?);
                post_sys.push(Message::normalized_from(ps).map_err(inconsistent)?);
                post_par.push(Message::normalized_from(pp).map_err(inconsistent)?);
            }
            Ok(ConstituentOutput {
                extrinsic,
                result: DecodeResult::from_posteriors(post_sys, post_par, TieRule::Smallest),
            })
        }
        Strategy::Map => {
            let par_in = parity_messages(par_obs, steps, par_space, prior, ch)?;
            let qp = par_space.size();
            let syn = syndrome.messages(qp)?;
            let sub = code.par_sub();
            // mu_hat(p) = sum_xp mu(xp) mu_r(xp - p)
            let folded: Vec<Message> = par_in
                .iter()
                .zip(&syn)
                .enumerate()
                .map(|(i, (mp, mr))| {
                    let v = (0..qp)
                        .map(|p| {
                            (0..qp)
                                .map(|xp| mp.get(xp) * mr.get(sub[xp * qp + p]))
                                .sum()
                        })
                        .collect();
                    Message::normalized_from(v).map_err(|_| Error::Inconsistent { time: i })
                })
                .collect::<Result<_>>()?;
            let provider = StaticSections {
                section: &code.principal,
                len: steps,
            };
            let out = run_app(
                &provider,
                BranchInputs {
                    a: sys_in,
                    b: &folded,
                },
            )?;
            // post(xp) ∝ mu(xp) sum_p lambda_hat(p) mu_r(xp - p)
            let post_par: Vec<Message> = (0..steps)
                .map(|i| {
                    let (mp, mr, lam) = (&par_in[i], &syn[i], &out.lambda_b[i]);
                    let v = (0..qp)
                        .map(|xp| {
                            mp.get(xp)
                                * (0..qp)
                                    .map(|p| lam.get(p) * mr.get(sub[xp * qp + p]))
                                    .sum::<f64>()
                        })
                        .collect();
                    Message::normalized_from(v).map_err(|_| Error::Inconsistent { time: i })
                })
                .collect::<Result<_>>()?;
            Ok(ConstituentOutput {
                extrinsic: out.lambda_a,
                result: DecodeResult::from_posteriors(out.post_a, post_par, TieRule::Smallest),
            })
        }
    }
}

/// Decodes a single convolutional block with the chosen strategy.
pub fn decode(
    code: &SyndromeCode,
    strategy: Strategy,
    syndrome: SyndromeEvidence,
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
) -> Result<DecodeResult> {
    let sys_space = code.sys_space();
    if y.sys.len() != syndrome.len() * sys_space.width() {
        return Err(Error::InvalidInput(format!(
            "side information has {} systematic symbols, expected {}",
            y.sys.len(),
            syndrome.len() * sys_space.width()
        )));
    }
    let sys_in = observation_messages(&y.sys, sys_space, prior, ch)?;
    Ok(decode_constituent(code, strategy, &sys_in, &y.par, syndrome, prior, ch)?.result)
}

pub fn decode_complementary(
    code: &SyndromeCode,
    s: &[usize],
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
) -> Result<DecodeResult> {
    decode(
        code,
        Strategy::Complementary,
        SyndromeEvidence::Exact(s),
        y,
        prior,
        ch,
    )
}

pub fn decode_isf(
    code: &SyndromeCode,
    s: &[usize],
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    mode: ParityMode,
) -> Result<DecodeResult> {
    decode(
        code,
        Strategy::Isf(mode),
        SyndromeEvidence::Exact(s),
        y,
        prior,
        ch,
    )
}

pub fn decode_parity_perspective(
    code: &SyndromeCode,
    r: &[usize],
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    sc: &SyndromeChannel,
) -> Result<DecodeResult> {
    decode(
        code,
        Strategy::ParityPerspective,
        SyndromeEvidence::Received { r, channel: sc },
        y,
        prior,
        ch,
    )
}

pub fn decode_syndrome_trellis(
    code: &SyndromeCode,
    s: &[usize],
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
) -> Result<DecodeResult> {
    decode(
        code,
        Strategy::SyndromeTrellis,
        SyndromeEvidence::Exact(s),
        y,
        prior,
        ch,
    )
}

pub fn decode_map(
    code: &SyndromeCode,
    r: &[usize],
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    sc: &SyndromeChannel,
) -> Result<DecodeResult> {
    decode(
        code,
        Strategy::Map,
        SyndromeEvidence::Received { r, channel: sc },
        y,
        prior,
        ch,
    )
}

/// A turbo code with both constituents prepared for syndrome decoding.
#[derive(Debug)]
pub struct TurboSyndromeCode {
    turbo: TurboCode,
    constituents: [SyndromeCode; 2],
}

impl TurboSyndromeCode {
    pub fn new(turbo: TurboCode) -> Self {
        let constituents = [
            SyndromeCode::new(turbo.constituent(0).clone()),
            SyndromeCode::new(turbo.constituent(1).clone()),
        ];
        TurboSyndromeCode {
            turbo,
            constituents,
        }
    }

    pub fn turbo(&self) -> &TurboCode {
        &self.turbo
    }

    pub fn constituent(&self, j: usize) -> &SyndromeCode {
        &self.constituents[j]
    }
}

/// Side information for a turbo block, layout `[ys | y0 | y1]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TurboSideInfo {
    pub sys: Vec<Symbol>,
    pub par: [Vec<Symbol>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboDecodeResult {
    pub sys: Vec<usize>,
    /// Parity decisions per constituent, `par[1]` in interleaved order.
    pub par: [Vec<usize>; 2],
    pub post_sys: Vec<Message>,
    pub post_par: [Vec<Message>; 2],
    /// Extrinsic systematic messages after every half-iteration, in natural
    /// order: entry `2t` from constituent 0, `2t + 1` from constituent 1.
    pub trace: Vec<Vec<Message>>,
}

/// Iterative turbo syndrome decoding. Constituents alternate 0, 1, 0, 1, ...;
/// constituent `j` receives `p(xs | ys) * lambda^(1-j)(xs)` on its systematic
/// tuples. `iterations` counts full iterations (two half-iterations each).
pub fn turbo_syndrome_decode(
    code: &TurboSyndromeCode,
    syndromes: [SyndromeEvidence; 2],
    y: &TurboSideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    strategy: Strategy,
    iterations: usize,
) -> Result<TurboDecodeResult> {
    if iterations == 0 {
        return Err(Error::InvalidInput(
            "turbo decoding needs at least one iteration".into(),
        ));
    }
    let tc = &code.turbo;
    let n = tc.block_length();
    let sys_space = code.constituents[0].sys_space();
    if y.sys.len() != n * sys_space.width() {
        return Err(Error::InvalidInput(
            "turbo side information has the wrong systematic length".into(),
        ));
    }
    let channel_in = observation_messages(&y.sys, sys_space, prior, ch)?;
    let channel_in_pi = tc.interleave(&channel_in)?;

    let mut extrinsic: [Vec<Message>; 2] =
        [Vec::new(), vec![Message::uniform(sys_space.size()); n]];
    let mut trace = Vec::with_capacity(2 * iterations);
    let mut last: [Option<DecodeResult>; 2] = [None, None];
    for _ in 0..iterations {
        for j in 0..2 {
            let other = &extrinsic[1 - j];
            let sys_in: Vec<Message> = if j == 0 {
                channel_in
                    .iter()
                    .zip(other)
                    .map(|(c, e)| c.product(e))
                    .collect::<Result<_>>()?
            } else {
                channel_in_pi
                    .iter()
                    .zip(tc.interleave(other)?)
                    .map(|(c, e)| c.product(&e))
                    .collect::<Result<_>>()?
            };
            let out = decode_constituent(
                &code.constituents[j],
                strategy,
                &sys_in,
                &y.par[j],
                syndromes[j],
                prior,
                ch,
            )?;
            extrinsic[j] = if j == 0 {
                out.extrinsic
            } else {
                tc.deinterleave(&out.extrinsic)?
            };
            trace.push(extrinsic[j].clone());
            last[j] = Some(out.result);
        }
    }

    let [r0, r1] = last.map(|r| r.expect("at least one iteration ran"));
    // Constituent 1 decoded last: its posterior is mu_ch * lambda0 * lambda1.
    let post_sys = tc.deinterleave(&r1.post_sys)?;
    let sys: Vec<usize> = post_sys
        .iter()
        .map(|m| m.argmax(TieRule::Smallest))
        .collect();
    let mut par = [r0.par, r1.par];
    if strategy == Strategy::Isf(ParityMode::Reencode) {
        let [p0, p1] = tc.turbo_encode(&sys)?;
        for (j, p) in [p0, p1].into_iter().enumerate() {
            let s = syndromes[j]
                .exact()
                .expect("checked by the constituent decoder");
            let space = code.constituents[j].par_space();
            par[j] = p.iter().zip(s).map(|(&a, &b)| space.add(a, b)).collect();
        }
    }
    Ok(TurboDecodeResult {
        sys,
        par,
        post_sys,
        post_par: [r0.post_par, r1.post_par],
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::SourceBlock;
    use crate::fields::Field;

    fn gf(q: u32) -> Field {
        Field::new(q).unwrap()
    }

    fn code_1d() -> SyndromeCode {
        SyndromeCode::new(ParityRealization::feedforward(gf(2), &[vec![vec![1, 1]]]).unwrap())
    }

    fn worked() -> (
        SyndromeCode,
        Vec<usize>,
        SideInfo,
        SourcePrior,
        SymbolChannel,
    ) {
        (
            code_1d(),
            vec![1, 0],
            SideInfo {
                sys: vec![0, 0],
                par: vec![0, 0],
            },
            SourcePrior::uniform(gf(2)),
            SymbolChannel::qsc(gf(2), 0.1).unwrap(),
        )
    }

    fn all_exact(
        code: &SyndromeCode,
        s: &[usize],
        y: &SideInfo,
        prior: &SourcePrior,
        ch: &SymbolChannel,
    ) -> Vec<DecodeResult> {
        [
            Strategy::Complementary,
            Strategy::Isf(ParityMode::Map),
            Strategy::ParityPerspective,
            Strategy::SyndromeTrellis,
            Strategy::Map,
        ]
        .into_iter()
        .map(|st| decode(code, st, SyndromeEvidence::Exact(s), y, prior, ch).unwrap())
        .collect()
    }

    fn assert_close(a: &DecodeResult, b: &DecodeResult, tol: f64) {
        assert_eq!(a.sys, b.sys);
        assert_eq!(a.par, b.par);
        for (x, y) in a
            .post_sys
            .iter()
            .chain(&a.post_par)
            .zip(b.post_sys.iter().chain(&b.post_par))
        {
            for (u, v) in x.values().iter().zip(y.values()) {
                assert!((u - v).abs() <= tol, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn strategy_names_roundtrip() {
        for st in Strategy::ALL {
            assert_eq!(st.to_string().parse::<Strategy>().unwrap(), st);
        }
        assert!("viterbi".parse::<Strategy>().is_err());
    }

    #[test]
    fn worked_example_all_strategies() {
        let (code, s, y, prior, ch) = worked();
        for res in all_exact(&code, &s, &y, &prior, &ch) {
            assert_eq!(res.sys, vec![0, 0]);
            assert_eq!(res.par, vec![1, 0]);
            // P(xs_0 = 0) = (0.0729 + 0.0009) / 0.09
            assert!((res.post_sys[0].get(0) - 0.0738 / 0.09).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_syndrome_equals_plain_channel_decoding() {
        let code = code_1d();
        let prior = SourcePrior::new(vec![0.6, 0.4]).unwrap();
        let ch = SymbolChannel::qsc(gf(2), 0.2).unwrap();
        let y = SideInfo {
            sys: vec![1, 0, 1, 1, 0],
            par: vec![0, 1, 1, 0, 0],
        };
        let s = vec![0; 5];
        let sys_in = observation_messages(&y.sys, code.sys_space(), &prior, &ch).unwrap();
        let par_in = observation_messages(&y.par, code.par_space(), &prior, &ch).unwrap();
        let plain = crate::bcjr::bcjr_decode(
            &StaticSections {
                section: &code.principal,
                len: 5,
            },
            BranchInputs {
                a: &sys_in,
                b: &par_in,
            },
        )
        .unwrap();
        for res in all_exact(&code, &s, &y, &prior, &ch) {
            assert_close(&res, &plain, 1e-12);
        }
    }

    #[test]
    fn zero_noise_recovers_source() {
        let r =
            ParityRealization::recursive(gf(3), &[vec![1, 2], vec![2, 0, 1]], &[1, 1, 2]).unwrap();
        let code = SyndromeCode::new(r);
        let prior = SourcePrior::new(vec![0.5, 0.3, 0.2]).unwrap();
        let ch = SymbolChannel::qsc(gf(3), 0.0).unwrap();
        let x = SourceBlock {
            sys: vec![2, 0, 1, 1, 2, 0],
            par: vec![3, 8, 0, 5, 1, 7],
        };
        let s = code.realization().syndrome_form(&x).unwrap();
        let symbols = x.to_symbols(code.sys_space(), code.par_space());
        let y = SideInfo::from_interleaved(&symbols, 1, 2).unwrap();
        for res in all_exact(&code, &s, &y, &prior, &ch) {
            assert_eq!(res.source(), x);
        }
        let re = decode_isf(&code, &s, &y, &prior, &ch, ParityMode::Reencode).unwrap();
        assert_eq!(re.source(), x);
    }

    #[test]
    fn reencode_lands_in_coset() {
        let (code, s, y, prior, ch) = worked();
        let re = decode_isf(&code, &s, &y, &prior, &ch, ParityMode::Reencode).unwrap();
        assert_eq!(code.realization().syndrome_form(&re.source()).unwrap(), s);
    }

    #[test]
    fn isf_rejects_non_additive_channels() {
        let code = code_1d();
        let z = SymbolChannel::from_rows(&[vec![1.0, 0.0], vec![0.3, 0.7]]).unwrap();
        let y = SideInfo {
            sys: vec![0, 1],
            par: vec![1, 1],
        };
        let err = decode_isf(
            &code,
            &[0, 1],
            &y,
            &SourcePrior::uniform(gf(2)),
            &z,
            ParityMode::Map,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        // The other strategies still agree on a non-additive channel.
        let prior = SourcePrior::new(vec![0.7, 0.3]).unwrap();
        let c = decode_complementary(&code, &[0, 1], &y, &prior, &z).unwrap();
        let m = decode_map(
            &code,
            &[0, 1],
            &y,
            &prior,
            &z,
            &SyndromeChannel::error_free(2),
        )
        .unwrap();
        assert_close(&c, &m, 1e-12);
    }

    #[test]
    fn mismatched_alphabet_side_information() {
        // Side information over a ternary alphabet for a binary source.
        let code = code_1d();
        let ch = SymbolChannel::from_rows(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let y = SideInfo {
            sys: vec![0, 2, 1],
            par: vec![2, 1, 0],
        };
        let prior = SourcePrior::uniform(gf(2));
        let s = [1, 0, 1];
        let a = decode_map(&code, &s, &y, &prior, &ch, &SyndromeChannel::error_free(2)).unwrap();
        let b =
            decode_parity_perspective(&code, &s, &y, &prior, &ch, &SyndromeChannel::error_free(2))
                .unwrap();
        let c = decode_syndrome_trellis(&code, &s, &y, &prior, &ch).unwrap();
        assert_close(&a, &b, 1e-12);
        assert_close(&a, &c, 1e-12);
        assert!(decode_isf(&code, &s, &y, &prior, &ch, ParityMode::Map).is_err());
    }

    #[test]
    fn uninformative_syndrome_gives_per_symbol_map() {
        let code = code_1d();
        let prior = SourcePrior::new(vec![0.55, 0.45]).unwrap();
        let ch = SymbolChannel::qsc(gf(2), 0.15).unwrap();
        let y = SideInfo {
            sys: vec![1, 0, 1, 1],
            par: vec![0, 0, 1, 0],
        };
        let flat = SyndromeChannel::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let r = [1, 1, 0, 1];
        for res in [
            decode_map(&code, &r, &y, &prior, &ch, &flat).unwrap(),
            decode_parity_perspective(&code, &r, &y, &prior, &ch, &flat).unwrap(),
        ] {
            for i in 0..4 {
                let ms = posterior_message(&prior, &ch, y.sys[i]).unwrap();
                let mp = posterior_message(&prior, &ch, y.par[i]).unwrap();
                assert!((res.post_sys[i].get(1) - ms.get(1)).abs() < 1e-12);
                assert!((res.post_par[i].get(1) - mp.get(1)).abs() < 1e-12);
            }
        }
        assert!(matches!(
            decode(
                &code,
                Strategy::Complementary,
                SyndromeEvidence::Received {
                    r: &r,
                    channel: &flat
                },
                &y,
                &prior,
                &ch
            ),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn scaling_inputs_changes_nothing() {
        let code = code_1d();
        let prior = SourcePrior::new(vec![0.3, 0.7]).unwrap();
        let ch = SymbolChannel::qsc(gf(2), 0.25).unwrap();
        let y = SideInfo {
            sys: vec![1, 0, 0, 1, 1, 0],
            par: vec![0, 1, 1, 1, 0, 0],
        };
        let s = [1, 0, 0, 1, 1, 1];
        let sys_in = observation_messages(&y.sys, code.sys_space(), &prior, &ch).unwrap();
        let base = decode_constituent(
            &code,
            Strategy::Map,
            &sys_in,
            &y.par,
            SyndromeEvidence::Exact(&s),
            &prior,
            &ch,
        )
        .unwrap();
        let scaled: Vec<Message> = sys_in
            .iter()
            .enumerate()
            .map(|(i, m)| m.scaled(1e-3 * (i + 1) as f64))
            .collect();
        let other = decode_constituent(
            &code,
            Strategy::Map,
            &scaled,
            &y.par,
            SyndromeEvidence::Exact(&s),
            &prior,
            &ch,
        )
        .unwrap();
        assert_close(&base.result, &other.result, 1e-12);
    }

    #[test]
    fn syndrome_trellis_with_zero_syndrome_matches_joint_principal() {
        let code = code_1d();
        let prior = SourcePrior::uniform(gf(2));
        let ch = SymbolChannel::qsc(gf(2), 0.1).unwrap();
        let y = SideInfo {
            sys: vec![0, 1, 1],
            par: vec![1, 1, 0],
        };
        let st = decode_syndrome_trellis(&code, &[0, 0, 0], &y, &prior, &ch).unwrap();
        let c = decode_complementary(&code, &[0, 0, 0], &y, &prior, &ch).unwrap();
        assert_close(&st, &c, 1e-12);
    }

    fn small_turbo(c1: ParityRealization) -> TurboSyndromeCode {
        let c0 = ParityRealization::recursive(gf(2), &[vec![1, 0, 1]], &[1, 1, 1]).unwrap();
        TurboSyndromeCode::new(TurboCode::new(c0, c1, vec![3, 0, 5, 1, 7, 2, 4, 6]).unwrap())
    }

    #[test]
    fn turbo_zero_noise_single_iteration() {
        let c1 = ParityRealization::recursive(gf(2), &[vec![1, 1, 1]], &[1, 0, 1]).unwrap();
        let tsc = small_turbo(c1);
        let tc = tsc.turbo();
        let x = crate::code::TurboBlock {
            sys: vec![1, 0, 1, 1, 0, 0, 1, 0],
            par: [vec![0, 1, 1, 0, 0, 0, 1, 1], vec![1, 1, 0, 0, 1, 0, 1, 0]],
        };
        let [s0, s1] = tc.turbo_syndrome_form(&x).unwrap();
        let y = TurboSideInfo {
            sys: x.sys.iter().map(|&v| v as Symbol).collect(),
            par: [
                x.par[0].iter().map(|&v| v as Symbol).collect(),
                x.par[1].iter().map(|&v| v as Symbol).collect(),
            ],
        };
        let prior = SourcePrior::uniform(gf(2));
        let ch = SymbolChannel::qsc(gf(2), 0.0).unwrap();
        for st in Strategy::ALL {
            let res = turbo_syndrome_decode(
                &tsc,
                [SyndromeEvidence::Exact(&s0), SyndromeEvidence::Exact(&s1)],
                &y,
                &prior,
                &ch,
                st,
                1,
            )
            .unwrap();
            assert_eq!(res.sys, x.sys, "{st}");
            assert_eq!(res.par, x.par, "{st}");
            assert_eq!(res.trace.len(), 2);
        }
    }

    #[test]
    fn turbo_with_uninformative_second_constituent() {
        let zero = ParityRealization::feedforward(gf(2), &[vec![vec![0]]]).unwrap();
        let tsc = small_turbo(zero);
        let prior = SourcePrior::new(vec![0.6, 0.4]).unwrap();
        let ch = SymbolChannel::qsc(gf(2), 0.12).unwrap();
        let y = TurboSideInfo {
            sys: vec![1, 0, 1, 1, 0, 1, 1, 0],
            par: [vec![0, 1, 0, 0, 1, 1, 0, 1], vec![1, 0, 0, 1, 0, 1, 1, 0]],
        };
        let s0 = vec![1, 0, 0, 1, 1, 0, 1, 0];
        let s1 = vec![0, 1, 1, 0, 1, 0, 0, 1];
        let res = turbo_syndrome_decode(
            &tsc,
            [SyndromeEvidence::Exact(&s0), SyndromeEvidence::Exact(&s1)],
            &y,
            &prior,
            &ch,
            Strategy::Map,
            1,
        )
        .unwrap();
        let single = decode_map(
            tsc.constituent(0),
            &s0,
            &SideInfo {
                sys: y.sys.clone(),
                par: y.par[0].clone(),
            },
            &prior,
            &ch,
            &SyndromeChannel::error_free(2),
        )
        .unwrap();
        assert_eq!(res.sys, single.sys);
        for (a, b) in res.post_sys.iter().zip(&single.post_sys) {
            assert!((a.get(0) - b.get(0)).abs() < 1e-12);
        }
        for m in &res.trace[1] {
            assert!((m.get(0) - 0.5).abs() < 1e-12);
        }
    }
}
