//! Exhaustive-enumeration ground truth for small blocks.
//!
//! Shares no code with the trellis decoders: weights are products of
//! per-symbol prior and channel probabilities, syndromes come from the
//! encoder state machine, and marginals are plain sums.

use crate::bcjr::{DecodeResult, Message, TieRule};
use crate::channels::{SourcePrior, SymbolChannel, SyndromeChannel};
use crate::code::{ParityRealization, SourceBlock};
use crate::decoders::SideInfo;
use crate::error::{Error, Result};
use crate::fields::Symbol;

/// Largest number of sequences the oracle will enumerate.
pub const ENUMERATION_BUDGET: u128 = 1 << 20;

/// Syndrome knowledge for the oracle.
#[derive(Debug, Clone, Copy)]
pub enum OracleSyndrome<'a> {
    Exact(&'a [usize]),
    Received {
        r: &'a [usize],
        channel: &'a SyndromeChannel,
    },
}

fn check_budget(q: usize, symbols: usize) -> Result<()> {
    let size = (q as u128).checked_pow(symbols as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            size,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

/// Calls `f` with every vector in `0..radix`^len, in lexicographic order
/// (position 0 fastest).
fn for_each_counter(radix: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut v = vec![0usize; len];
    loop {
        f(&v);
        let mut pos = 0;
        loop {
            if pos == len {
                return;
            }
            v[pos] += 1;
            if v[pos] < radix {
                break;
            }
            v[pos] = 0;
            pos += 1;
        }
    }
}

/// All `q^(kN)` members of the coset with syndrome `s`: systematic part
/// free, parity part `encode(xs) + s`.
pub fn enumerate_coset(code: &ParityRealization, s: &[usize]) -> Result<Vec<SourceBlock>> {
    let qk = code.sys_space().size();
    check_budget(code.field().order() as usize, code.k() * s.len())?;
    let par = code.par_space();
    let mut out = Vec::new();
    let mut err = None;
    for_each_counter(qk, s.len(), |xs| match code.systematic_encode(xs) {
        Ok(p) => out.push(SourceBlock {
            sys: xs.to_vec(),
            par: p.iter().zip(s).map(|(&pi, &si)| par.add(pi, si)).collect(),
        }),
        Err(e) => err = Some(e),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Unnormalized weight `prod p(x) p(y | x)` of a source block.
pub fn correlation_weight(
    code: &ParityRealization,
    x: &SourceBlock,
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
) -> f64 {
    let (sys, par) = (code.sys_space(), code.par_space());
    let (k, m) = (sys.width(), par.width());
    let mut w = 1.0;
    for i in 0..x.len() {
        for d in 0..k {
            let xv = sys.digit(x.sys[i], d);
            w *= prior.prob(xv) * ch.prob(xv, y.sys[i * k + d]);
        }
        for d in 0..m {
            let xv = par.digit(x.par[i], d);
            w *= prior.prob(xv) * ch.prob(xv, y.par[i * m + d]);
        }
    }
    w
}

/// Exact symbol posteriors and symbol-MAP decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub result: DecodeResult,
    /// Sum of all sequence weights.
    pub total_weight: f64,
}

pub fn exact_marginals(
    code: &ParityRealization,
    y: &SideInfo,
    prior: &SourcePrior,
    ch: &SymbolChannel,
    syndrome: OracleSyndrome,
) -> Result<OracleResult> {
    let (sys, par) = (code.sys_space(), code.par_space());
    let steps = match syndrome {
        OracleSyndrome::Exact(s) => s.len(),
        OracleSyndrome::Received { r, .. } => r.len(),
    };
    if y.sys.len() != steps * sys.width() || y.par.len() != steps * par.width() {
        return Err(Error::InvalidInput(
            "side information does not match the syndrome length".into(),
        ));
    }
    let mut acc_sys = vec![vec![0.0; sys.size()]; steps];
    let mut acc_par = vec![vec![0.0; par.size()]; steps];
    let mut total = 0.0;
    let mut add = |x: &SourceBlock, w: f64| {
        for i in 0..steps {
            acc_sys[i][x.sys[i]] += w;
            acc_par[i][x.par[i]] += w;
        }
        total += w;
    };

    match syndrome {
        OracleSyndrome::Exact(s) => {
            for x in enumerate_coset(code, s)? {
                let w = correlation_weight(code, &x, y, prior, ch);
                add(&x, w);
            }
        }
        OracleSyndrome::Received { r, channel } => {
            if channel.size() != par.size() {
                return Err(Error::InvalidInput(
                    "syndrome channel does not match the code".into(),
                ));
            }
            let q = code.field().order() as usize;
            let n = code.n();
            check_budget(q, n * steps)?;
            let mut err = None;
            for_each_counter(q, n * steps, |digits| {
                let symbols: Vec<Symbol> = digits.iter().map(|&d| d as Symbol).collect();
                let x = match SourceBlock::from_symbols(&symbols, sys, par) {
                    Ok(x) => x,
                    Err(e) => return err = Some(e),
                };
                let s = match code.syndrome_form(&x) {
                    Ok(s) => s,
                    Err(e) => return err = Some(e),
                };
                let likelihood: f64 = s
                    .iter()
                    .zip(r)
                    .map(|(&si, &ri)| channel.prob(si, ri))
                    .product();
                let w = correlation_weight(code, &x, y, prior, ch) * likelihood;
                add(&x, w);
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }

    if !(total > 0.0) {
        return Err(Error::DegenerateEvidence(
            "every sequence has zero weight".into(),
        ));
    }
    let post_sys = acc_sys
        .into_iter()
        .map(Message::normalized_from)
        .collect::<Result<Vec<_>>>()?;
    let post_par = acc_par
        .into_iter()
        .map(Message::normalized_from)
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleResult {
        result: DecodeResult::from_posteriors(post_sys, post_par, TieRule::Smallest),
        total_weight: total,
    })
}
