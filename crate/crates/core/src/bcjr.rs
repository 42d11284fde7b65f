//! Forward-backward (BCJR) message passing over a sequence of trellis
//! sections, in the probability domain with per-step normalization.
//!
//! The engine is label-agnostic: every branch carries two labels `a` and
//! `b`, and its weight is `mu_a[a] * mu_b[b]`. The principal trellis uses
//! `a = xs`, `b = xp`; the expanded source-to-syndrome trellis uses
//! `a = x`, `b = s`. Boundary metrics are fixed for every caller:
//! `alpha_0 = delta(0)` and `beta_N` uniform.

use crate::code::{ExpandedSection, TrellisSection};
use crate::error::{Error, Result};
use crate::fields::TupleSpace;

/// Entries within this relative distance of the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// A nonnegative belief vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Message(Vec<f64>);

/// Which index wins among tied maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    #[default]
    Smallest,
    Largest,
}

impl Message {
    /// Wraps raw beliefs. At least one entry must be strictly positive and
    /// all entries finite and nonnegative.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidInput(
                "message entries must be finite and nonnegative".into(),
            ));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::DegenerateEvidence(
                "message has no positive entry".into(),
            ));
        }
        Ok(Message(values))
    }

    pub fn normalized_from(values: Vec<f64>) -> Result<Self> {
        let mut m = Message::new(values)?;
        m.normalize();
        Ok(m)
    }

    pub fn uniform(size: usize) -> Self {
        Message(vec![1.0 / size as f64; size])
    }

    pub fn delta(size: usize, at: usize) -> Self {
        let mut v = vec![0.0; size];
        v[at] = 1.0;
        Message(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn normalize(&mut self) {
        let sum: f64 = self.0.iter().sum();
        self.0.iter_mut().for_each(|v| *v /= sum);
    }

    /// Elementwise product, normalized.
    pub fn product(&self, other: &Message) -> Result<Message> {
        Message::normalized_from(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn scaled(&self, c: f64) -> Message {
        Message(self.0.iter().map(|v| v * c).collect())
    }

    /// Reindexes a message over packed tuples: `out[v] = self[v - shift]`.
    pub fn translated(&self, shift: usize, space: TupleSpace) -> Message {
        Message(
            (0..self.0.len())
                .map(|v| self.0[space.sub(v, shift)])
                .collect(),
        )
    }

    pub fn argmax(&self, tie: TieRule) -> usize {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied = |v: f64| v >= max - max * TIE_TOLERANCE;
        match tie {
            TieRule::Smallest => self.0.iter().position(|&v| tied(v)),
            TieRule::Largest => self.0.iter().rposition(|&v| tied(v)),
        }
        .unwrap_or(0)
    }
}

/// Tuple message `mu(t) = prod_j mu_j(t_j)` from per-symbol messages,
/// `per_symbol.len()` equal to the tuple width.
pub fn tuple_message(per_symbol: &[Message], space: TupleSpace) -> Message {
    let mut digits = vec![0; space.width()];
    let values = (0..space.size())
        .map(|t| {
            space.unpack_into(t, &mut digits);
            per_symbol
                .iter()
                .zip(&digits)
                .map(|(m, &d)| m.get(d as usize))
                .product()
        })
        .collect();
    Message(values)
}

/// One branch of a section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub a: u32,
    pub b: u32,
}

/// A trellis section as seen by the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub num_states: usize,
    pub a_size: usize,
    pub b_size: usize,
    pub branches: Vec<Branch>,
}

impl Section {
    /// The principal trellis, `a = xs`, `b = xp`.
    pub fn principal(t: &TrellisSection) -> Self {
        Self::shifted(t, 0, None)
    }

    /// A complementary trellis: parity labels shifted by the syndrome,
    /// `chi(xs, xp; i) = chi(xs, xp - s_i)`.
    pub fn complementary(t: &TrellisSection, s: usize, par: TupleSpace) -> Self {
        Self::shifted(t, s, Some(par))
    }

    fn shifted(t: &TrellisSection, s: usize, par: Option<TupleSpace>) -> Self {
        let branches = t
            .transitions
            .iter()
            .map(|tr| Branch {
                from: tr.from as u32,
                to: tr.to as u32,
                a: tr.sys as u32,
                b: par.map_or(tr.par, |p| p.add(tr.par, s)) as u32,
            })
            .collect();
        Section {
            num_states: t.num_states,
            a_size: t.sys_size,
            b_size: t.par_size,
            branches,
        }
    }

    /// The expanded trellis, `a = x`, `b = s`.
    pub fn expanded(e: &ExpandedSection) -> Self {
        let branches = e
            .transitions
            .iter()
            .map(|tr| Branch {
                from: tr.from as u32,
                to: tr.to as u32,
                a: tr.x as u32,
                b: tr.s as u32,
            })
            .collect();
        Section {
            num_states: e.num_states,
            a_size: e.sys_size * e.par_size,
            b_size: e.par_size,
            branches,
        }
    }

    /// The syndrome trellis for one syndrome value: the expanded branches
    /// releasing `s`, with a single dummy `b` label.
    pub fn syndrome_slice(e: &ExpandedSection, s: usize) -> Self {
        let branches = e
            .transitions
            .iter()
            .filter(|tr| tr.s == s)
            .map(|tr| Branch {
                from: tr.from as u32,
                to: tr.to as u32,
                a: tr.x as u32,
                b: 0,
            })
            .collect();
        Section {
            num_states: e.num_states,
            a_size: e.sys_size * e.par_size,
            b_size: 1,
            branches,
        }
    }
}

/// Supplies the section used at each time step.
pub trait SectionProvider {
    fn num_states(&self) -> usize;
    fn len(&self) -> usize;
    fn section(&self, i: usize) -> &Section;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The same section at every time step.
pub struct StaticSections<'a> {
    pub section: &'a Section,
    pub len: usize,
}

impl SectionProvider for StaticSections<'_> {
    fn num_states(&self) -> usize {
        self.section.num_states
    }
    fn len(&self) -> usize {
        self.len
    }
    fn section(&self, _: usize) -> &Section {
        self.section
    }
}

/// A time-varying sequence selecting `sections[select[i]]` at time `i`.
pub struct SelectedSections<'a> {
    pub sections: &'a [Section],
    pub select: &'a [usize],
}

impl SectionProvider for SelectedSections<'_> {
    fn num_states(&self) -> usize {
        self.sections[0].num_states
    }
    fn len(&self) -> usize {
        self.select.len()
    }
    fn section(&self, i: usize) -> &Section {
        &self.sections[self.select[i]]
    }
}

/// Per-time branch input messages for the two labels.
#[derive(Clone, Copy)]
pub struct BranchInputs<'a> {
    pub a: &'a [Message],
    pub b: &'a [Message],
}

fn check_inputs(p: &dyn SectionProvider, inputs: BranchInputs) -> Result<()> {
    let n = p.len();
    if inputs.a.len() != n || inputs.b.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} sections but {} / {} input messages",
            n,
            inputs.a.len(),
            inputs.b.len()
        )));
    }
    for i in 0..n {
        let s = p.section(i);
        if s.num_states != p.num_states()
            || inputs.a[i].len() != s.a_size
            || inputs.b[i].len() != s.b_size
        {
            return Err(Error::InvalidInput(format!(
                "input messages do not fit section {i}"
            )));
        }
    }
    Ok(())
}

fn normalize_metric(v: &mut [f64], time: usize) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Inconsistent { time });
    }
    v.iter_mut().for_each(|x| *x /= sum);
    Ok(())
}

/// Forward metrics `alpha_0 .. alpha_N`, each normalized.
pub fn forward_pass(p: &dyn SectionProvider, inputs: BranchInputs) -> Result<Vec<Message>> {
    check_inputs(p, inputs)?;
    let ns = p.num_states();
    let mut alpha = Vec::with_capacity(p.len() + 1);
    alpha.push(Message::delta(ns, 0));
    for i in 0..p.len() {
        let prev = &alpha[i].0;
        let (ma, mb) = (&inputs.a[i].0, &inputs.b[i].0);
        let mut next = vec![0.0; ns];
        for br in &p.section(i).branches {
            next[br.to as usize] += prev[br.from as usize] * ma[br.a as usize] * mb[br.b as usize];
        }
        normalize_metric(&mut next, i)?;
        alpha.push(Message(next));
    }
    Ok(alpha)
}

/// Backward metrics `beta_0 .. beta_N`, each normalized.
pub fn backward_pass(p: &dyn SectionProvider, inputs: BranchInputs) -> Result<Vec<Message>> {
    check_inputs(p, inputs)?;
    let ns = p.num_states();
    let n = p.len();
    let mut beta = vec![Message::uniform(ns); n + 1];
    for i in (0..n).rev() {
        let after = &beta[i + 1].0;
        let (ma, mb) = (&inputs.a[i].0, &inputs.b[i].0);
        let mut prev = vec![0.0; ns];
        for br in &p.section(i).branches {
            prev[br.from as usize] += after[br.to as usize] * ma[br.a as usize] * mb[br.b as usize];
        }
        normalize_metric(&mut prev, i)?;
        beta[i] = Message(prev);
    }
    Ok(beta)
}

/// Output (extrinsic) messages for both labels:
/// `lambda_a(a) = sum chi alpha_{i-1} beta_i mu_b` and symmetrically for `b`.
pub fn app_output(
    p: &dyn SectionProvider,
    alpha: &[Message],
    beta: &[Message],
    inputs: BranchInputs,
) -> Result<(Vec<Message>, Vec<Message>)> {
    check_inputs(p, inputs)?;
    let n = p.len();
    if alpha.len() != n + 1 || beta.len() != n + 1 {
        return Err(Error::InvalidInput(
            "metric sequences do not match the section count".into(),
        ));
    }
    let mut lambda_a = Vec::with_capacity(n);
    let mut lambda_b = Vec::with_capacity(n);
    for i in 0..n {
        let s = p.section(i);
        let (al, be) = (&alpha[i].0, &beta[i + 1].0);
        let (ma, mb) = (&inputs.a[i].0, &inputs.b[i].0);
        let mut la = vec![0.0; s.a_size];
        let mut lb = vec![0.0; s.b_size];
        for br in &s.branches {
            let w = al[br.from as usize] * be[br.to as usize];
            la[br.a as usize] += w * mb[br.b as usize];
            lb[br.b as usize] += w * ma[br.a as usize];
        }
        normalize_metric(&mut la, i)?;
        normalize_metric(&mut lb, i)?;
        lambda_a.push(Message(la));
        lambda_b.push(Message(lb));
    }
    Ok((lambda_a, lambda_b))
}

/// Output messages and a-posteriori beliefs for both labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AppOutput {
    pub lambda_a: Vec<Message>,
    pub lambda_b: Vec<Message>,
    pub post_a: Vec<Message>,
    pub post_b: Vec<Message>,
}

pub fn run_app(p: &dyn SectionProvider, inputs: BranchInputs) -> Result<AppOutput> {
    let alpha = forward_pass(p, inputs)?;
    let beta = backward_pass(p, inputs)?;
    let (lambda_a, lambda_b) = app_output(p, &alpha, &beta, inputs)?;
    let combine = |mu: &[Message], lambda: &[Message]| -> Result<Vec<Message>> {
        mu.iter()
            .zip(lambda)
            .enumerate()
            .map(|(i, (m, l))| m.product(l).map_err(|_| Error::Inconsistent { time: i }))
            .collect()
    };
    let post_a = combine(inputs.a, &lambda_a)?;
    let post_b = combine(inputs.b, &lambda_b)?;
    Ok(AppOutput {
        lambda_a,
        lambda_b,
        post_a,
        post_b,
    })
}

/// Symbol-by-symbol decisions and posteriors for the systematic and parity
/// tuples of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub sys: Vec<usize>,
    pub par: Vec<usize>,
    pub post_sys: Vec<Message>,
    pub post_par: Vec<Message>,
}

impl DecodeResult {
    pub fn from_posteriors(post_sys: Vec<Message>, post_par: Vec<Message>, tie: TieRule) -> Self {
        DecodeResult {
            sys: post_sys.iter().map(|m| m.argmax(tie)).collect(),
            par: post_par.iter().map(|m| m.argmax(tie)).collect(),
            post_sys,
            post_par,
        }
    }

    pub fn source(&self) -> crate::code::SourceBlock {
        crate::code::SourceBlock {
            sys: self.sys.clone(),
            par: self.par.clone(),
        }
    }
}

/// BCJR decoding on a section sequence whose `a` labels are systematic
/// tuples and `b` labels parity tuples. Posteriors are `mu * lambda`.
pub fn bcjr_decode(p: &dyn SectionProvider, inputs: BranchInputs) -> Result<DecodeResult> {
    let out = run_app(p, inputs)?;
    Ok(DecodeResult::from_posteriors(
        out.post_a,
        out.post_b,
        TieRule::Smallest,
    ))
}
