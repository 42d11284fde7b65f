//! Realizations of the parity transfer matrix `P(D)`, their trellis sections,
//! systematic encoding and systematic syndrome formation.
//!
//! A source block is split per time step into a systematic k-tuple and a
//! parity (n-k)-tuple, `x_i = [xs_i | xp_i]`. The systematic syndrome is
//! `s_i = xp_i - p_i` where `p` is the parity produced by the systematic
//! encoder fed with `xs`. Encoders start in state 0 and blocks are not
//! terminated.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::fields::{Field, Symbol, TupleSpace};

/// A finite state machine realizing a k-input, (n-k)-output transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityRealization {
    field: Field,
    inputs: TupleSpace,
    outputs: TupleSpace,
    num_states: usize,
    // Row-major [state][input].
    next: Vec<u32>,
    out: Vec<u32>,
}

fn trim(poly: &[Symbol]) -> &[Symbol] {
    let len = poly.iter().rposition(|&c| c != 0).map_or(0, |p| p + 1);
    &poly[..len]
}

fn degree(poly: &[Symbol]) -> usize {
    trim(poly).len().saturating_sub(1)
}

impl ParityRealization {
    /// Builds a realization from explicit transition tables indexed
    /// `[state * q^k + input]`. States are relabeled in breadth-first order
    /// from state 0 (inputs visited in increasing order) and unreachable
    /// states are dropped.
    pub fn from_tables(
        field: Field,
        k: usize,
        n_minus_k: usize,
        num_states: usize,
        next: &[usize],
        out: &[usize],
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if num_states == 0 {
            return Err(Error::InvalidInput(
                "a realization needs at least one state".into(),
            ));
        }
        let inputs = TupleSpace::new(field, k)?;
        let outputs = TupleSpace::new(field, n_minus_k)?;
        let qk = inputs.size();
        let total = num_states * qk;
        if next.len() != total || out.len() != total {
            return Err(Error::InvalidInput(format!(
                "transition tables need {total} entries, got {} and {}",
                next.len(),
                out.len()
            )));
        }
        if let Some(&bad) = next.iter().find(|&&s| s >= num_states) {
            return Err(Error::OutOfRange {
                value: bad,
                limit: num_states,
            });
        }
        if let Some(&bad) = out.iter().find(|&&o| o >= outputs.size()) {
            return Err(Error::OutOfRange {
                value: bad,
                limit: outputs.size(),
            });
        }

        let mut label = vec![usize::MAX; num_states];
        let mut order = Vec::with_capacity(num_states);
        let mut queue = VecDeque::from([0usize]);
        label[0] = 0;
        order.push(0);
        while let Some(s) = queue.pop_front() {
            for u in 0..qk {
                let t = next[s * qk + u];
                if label[t] == usize::MAX {
                    label[t] = order.len();
                    order.push(t);
                    queue.push_back(t);
                }
            }
        }

        let reachable = order.len();
        let mut new_next = Vec::with_capacity(reachable * qk);
        let mut new_out = Vec::with_capacity(reachable * qk);
        for &old in &order {
            for u in 0..qk {
                new_next.push(label[next[old * qk + u]] as u32);
                new_out.push(out[old * qk + u] as u32);
            }
        }
        Ok(ParityRealization {
            field,
            inputs,
            outputs,
            num_states: reachable,
            next: new_next,
            out: new_out,
        })
    }

    /// Feedforward (controller-form) realization. `taps[j][i]` is the
    /// polynomial, ascending powers of D, from input `i` to output `j`.
    pub fn feedforward(field: Field, taps: &[Vec<Vec<Symbol>>]) -> Result<Self> {
        let n_minus_k = taps.len();
        let k = taps.first().map_or(0, |row| row.len());
        if k == 0 {
            return Err(Error::InvalidInput(
                "feedforward taps need at least one input".into(),
            ));
        }
        if taps.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidInput(
                "every output needs taps for each input".into(),
            ));
        }
        check_coeffs(field, taps.iter().flatten().flatten())?;

        let memory: Vec<usize> = (0..k)
            .map(|i| taps.iter().map(|row| degree(&row[i])).max().unwrap_or(0))
            .collect();
        let offsets: Vec<usize> = memory
            .iter()
            .scan(0, |acc, &m| {
                let o = *acc;
                *acc += m;
                Some(o)
            })
            .collect();
        let total_memory: usize = memory.iter().sum();
        let states = TupleSpace::new(field, total_memory)?;
        let inputs = TupleSpace::new(field, k)?;
        let outputs = TupleSpace::new(field, n_minus_k)?;

        let mut next = Vec::with_capacity(states.size() * inputs.size());
        let mut out = Vec::with_capacity(states.size() * inputs.size());
        let mut reg = vec![0; total_memory];
        let mut u = vec![0; k];
        let mut y = vec![0; n_minus_k];
        for s in 0..states.size() {
            for ui in 0..inputs.size() {
                states.unpack_into(s, &mut reg);
                inputs.unpack_into(ui, &mut u);
                // reg[offsets[i] + d - 1] holds input i delayed by d.
                let delayed = |i: usize, d: usize| {
                    if d == 0 {
                        u[i]
                    } else {
                        reg[offsets[i] + d - 1]
                    }
                };
                for (j, row) in taps.iter().enumerate() {
                    let mut acc = 0;
                    for (i, poly) in row.iter().enumerate() {
                        for (d, &c) in trim(poly).iter().enumerate() {
                            acc = field.add(acc, field.mul(c, delayed(i, d)));
                        }
                    }
                    y[j] = acc;
                }
                let mut shifted = vec![0; total_memory];
                for i in 0..k {
                    for d in 0..memory[i] {
                        shifted[offsets[i] + d] = delayed(i, d);
                    }
                }
                next.push(states.pack(&shifted)?);
                out.push(outputs.pack(&y)?);
            }
        }
        Self::from_tables(field, k, n_minus_k, states.size(), &next, &out)
    }

    /// Recursive single-input realization of `P_j(D) = taps[j](D) / feedback(D)`.
    /// The constant term of `feedback` must be nonzero.
    pub fn recursive(field: Field, taps: &[Vec<Symbol>], feedback: &[Symbol]) -> Result<Self> {
        check_coeffs(field, taps.iter().flatten().chain(feedback))?;
        let f0 = feedback.first().copied().unwrap_or(0);
        let f0_inv = field.inv(f0).ok_or_else(|| {
            Error::InvalidInput("feedback polynomial needs a nonzero constant term".into())
        })?;
        let feedback = trim(feedback);
        let memory = taps
            .iter()
            .map(|g| degree(g))
            .chain([degree(feedback)])
            .max()
            .unwrap_or(0);
        let states = TupleSpace::new(field, memory)?;
        let outputs = TupleSpace::new(field, taps.len())?;
        let q = field.order() as usize;

        let mut next = Vec::with_capacity(states.size() * q);
        let mut out = Vec::with_capacity(states.size() * q);
        let mut reg = vec![0; memory];
        let mut y = vec![0; taps.len()];
        for s in 0..states.size() {
            for u in 0..q as Symbol {
                // reg[d - 1] holds the register value w delayed by d.
                states.unpack_into(s, &mut reg);
                let mut acc = u;
                for (d, &c) in feedback.iter().enumerate().skip(1) {
                    acc = field.sub(acc, field.mul(c, reg[d - 1]));
                }
                let w = field.mul(f0_inv, acc);
                let delayed = |d: usize| if d == 0 { w } else { reg[d - 1] };
                for (j, g) in taps.iter().enumerate() {
                    y[j] = trim(g)
                        .iter()
                        .enumerate()
                        .fold(0, |a, (d, &c)| field.add(a, field.mul(c, delayed(d))));
                }
                let shifted: Vec<Symbol> = (0..memory).map(delayed).collect();
                next.push(states.pack(&shifted)?);
                out.push(outputs.pack(&y)?);
            }
        }
        Self::from_tables(field, 1, taps.len(), states.size(), &next, &out)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Systematic tuple width k.
    pub fn k(&self) -> usize {
        self.inputs.width()
    }

    /// Parity tuple width n - k.
    pub fn n_minus_k(&self) -> usize {
        self.outputs.width()
    }

    pub fn n(&self) -> usize {
        self.k() + self.n_minus_k()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Space of systematic k-tuples.
    pub fn sys_space(&self) -> TupleSpace {
        self.inputs
    }

    /// Space of parity / syndrome (n-k)-tuples.
    pub fn par_space(&self) -> TupleSpace {
        self.outputs
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: usize) -> usize {
        self.next[state * self.inputs.size() + input] as usize
    }

    #[inline]
    pub fn output(&self, state: usize, input: usize) -> usize {
        self.out[state * self.inputs.size() + input] as usize
    }

    fn check_sys(&self, xs: &[usize]) -> Result<()> {
        match xs.iter().find(|&&u| u >= self.inputs.size()) {
            Some(&bad) => Err(Error::OutOfRange {
                value: bad,
                limit: self.inputs.size(),
            }),
            None => Ok(()),
        }
    }

    /// Parity sequence produced from the systematic sequence `xs`.
    pub fn systematic_encode(&self, xs: &[usize]) -> Result<Vec<usize>> {
        self.check_sys(xs)?;
        let mut state = 0;
        Ok(xs
            .iter()
            .map(|&u| {
                let p = self.output(state, u);
                state = self.next_state(state, u);
                p
            })
            .collect())
    }

    /// Systematic syndrome `s_i = xp_i - p_i`.
    pub fn syndrome_form(&self, x: &SourceBlock) -> Result<Vec<usize>> {
        if x.sys.len() != x.par.len() {
            return Err(Error::InvalidInput(
                "systematic and parity parts differ in length".into(),
            ));
        }
        if let Some(&bad) = x.par.iter().find(|&&p| p >= self.outputs.size()) {
            return Err(Error::OutOfRange {
                value: bad,
                limit: self.outputs.size(),
            });
        }
        let p = self.systematic_encode(&x.sys)?;
        Ok(x.par
            .iter()
            .zip(&p)
            .map(|(&xp, &pi)| self.outputs.sub(xp, pi))
            .collect())
    }

    /// The coset member `c_i = [0 | s_i]`.
    pub fn coset_representative(&self, s: &[usize]) -> SourceBlock {
        SourceBlock {
            sys: vec![0; s.len()],
            par: s.to_vec(),
        }
    }
}

fn check_coeffs<'a>(field: Field, coeffs: impl IntoIterator<Item = &'a Symbol>) -> Result<()> {
    match coeffs.into_iter().find(|&&c| c >= field.order()) {
        Some(&c) => Err(Error::OutOfRange {
            value: c as usize,
            limit: field.order() as usize,
        }),
        None => Ok(()),
    }
}

/// A source block in per-time packed form: `sys[i]` is the k-tuple index of
/// `xs_i`, `par[i]` the (n-k)-tuple index of `xp_i`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceBlock {
    pub sys: Vec<usize>,
    pub par: Vec<usize>,
}

impl SourceBlock {
    pub fn len(&self) -> usize {
        self.sys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sys.is_empty()
    }

    /// Flattened symbols, time step by time step, each `[xs_i | xp_i]`.
    pub fn to_symbols(&self, sys: TupleSpace, par: TupleSpace) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.len() * (sys.width() + par.width()));
        let mut a = vec![0; sys.width()];
        let mut b = vec![0; par.width()];
        for (&xs, &xp) in self.sys.iter().zip(&self.par) {
            sys.unpack_into(xs, &mut a);
            par.unpack_into(xp, &mut b);
            out.extend_from_slice(&a);
            out.extend_from_slice(&b);
        }
        out
    }

    pub fn from_symbols(symbols: &[Symbol], sys: TupleSpace, par: TupleSpace) -> Result<Self> {
        let n = sys.width() + par.width();
        if n == 0 || !symbols.len().is_multiple_of(n) {
            return Err(Error::InvalidInput(format!(
                "{} symbols do not split into {n}-tuples",
                symbols.len()
            )));
        }
        let mut block = SourceBlock::default();
        for chunk in symbols.chunks(n) {
            block.sys.push(sys.pack(&chunk[..sys.width()])?);
            block.par.push(par.pack(&chunk[sys.width()..])?);
        }
        Ok(block)
    }
}

/// Packs a flat symbol stream into consecutive tuples of `space`.
pub fn pack_stream(symbols: &[Symbol], space: TupleSpace) -> Result<Vec<usize>> {
    if space.width() == 0 {
        return Err(Error::InvalidInput(
            "cannot pack into zero-width tuples".into(),
        ));
    }
    if !symbols.len().is_multiple_of(space.width()) {
        return Err(Error::InvalidInput(format!(
            "{} symbols do not split into {}-tuples",
            symbols.len(),
            space.width()
        )));
    }
    symbols
        .chunks(space.width())
        .map(|c| space.pack(c))
        .collect()
}

/// Inverse of [`pack_stream`].
pub fn unpack_stream(indices: &[usize], space: TupleSpace) -> Vec<Symbol> {
    let mut out = vec![0; indices.len() * space.width()];
    for (chunk, &i) in out.chunks_mut(space.width().max(1)).zip(indices) {
        space.unpack_into(i, chunk);
    }
    out
}

/// One branch of the trellis section: `chi(from, to, sys, par) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub sys: usize,
    pub par: usize,
    pub to: usize,
}

/// The trellis section of a realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TrellisSection {
    pub num_states: usize,
    pub sys_size: usize,
    pub par_size: usize,
    pub transitions: Vec<Transition>,
}

pub fn build_trellis(r: &ParityRealization) -> TrellisSection {
    let qk = r.sys_space().size();
    let transitions = (0..r.num_states())
        .flat_map(|from| {
            (0..qk).map(move |sys| Transition {
                from,
                sys,
                par: r.output(from, sys),
                to: r.next_state(from, sys),
            })
        })
        .collect();
    TrellisSection {
        num_states: r.num_states(),
        sys_size: qk,
        par_size: r.par_space().size(),
        transitions,
    }
}

/// Branch of the expanded section: source n-tuple `x` in, syndrome `s` out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpandedTransition {
    pub from: usize,
    /// Packed n-tuple `[xs | xp]`, i.e. `xs + q^k * xp`.
    pub x: usize,
    pub s: usize,
    pub to: usize,
}

/// The source-to-syndrome section: `q^(n-k)` parallel branches per trellis
/// branch, one for every parity tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedSection {
    pub num_states: usize,
    pub sys_size: usize,
    pub par_size: usize,
    pub transitions: Vec<ExpandedTransition>,
}

impl ExpandedSection {
    #[inline]
    pub fn join(&self, sys: usize, par: usize) -> usize {
        sys + self.sys_size * par
    }

    #[inline]
    pub fn split(&self, x: usize) -> (usize, usize) {
        (x % self.sys_size, x / self.sys_size)
    }
}

pub fn build_expanded(t: &TrellisSection, par_space: TupleSpace) -> ExpandedSection {
    let mut transitions = Vec::with_capacity(t.transitions.len() * t.par_size);
    for tr in &t.transitions {
        for xp in 0..t.par_size {
            transitions.push(ExpandedTransition {
                from: tr.from,
                x: tr.sys + t.sys_size * xp,
                s: par_space.sub(xp, tr.par),
                to: tr.to,
            });
        }
    }
    ExpandedSection {
        num_states: t.num_states,
        sys_size: t.sys_size,
        par_size: t.par_size,
        transitions,
    }
}

/// A parallel turbo code: two constituents sharing the systematic input,
/// the second one fed through the interleaver.
#[derive(Debug, Clone, PartialEq)]
pub struct TurboCode {
    constituents: [ParityRealization; 2],
    permutation: Vec<usize>,
}

/// A turbo source block in layout `[xs | x0 | x1]`, each part packed per
/// time step. `par[1]` is in the time order of the second constituent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TurboBlock {
    pub sys: Vec<usize>,
    pub par: [Vec<usize>; 2],
}

impl TurboCode {
    pub fn new(
        c0: ParityRealization,
        c1: ParityRealization,
        permutation: Vec<usize>,
    ) -> Result<Self> {
        if c0.field() != c1.field() || c0.k() != c1.k() {
            return Err(Error::InvalidInput(
                "turbo constituents must share q and k".into(),
            ));
        }
        let n = permutation.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty interleaver".into()));
        }
        let mut seen = vec![false; n];
        for &p in &permutation {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(
                    "interleaver is not a permutation".into(),
                ));
            }
            seen[p] = true;
        }
        Ok(TurboCode {
            constituents: [c0, c1],
            permutation,
        })
    }

    pub fn constituent(&self, j: usize) -> &ParityRealization {
        &self.constituents[j]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Block length N in k-tuples.
    pub fn block_length(&self) -> usize {
        self.permutation.len()
    }

    pub fn field(&self) -> Field {
        self.constituents[0].field()
    }

    pub fn k(&self) -> usize {
        self.constituents[0].k()
    }

    /// `out_i = seq[pi(i)]`.
    pub fn interleave<T: Clone>(&self, seq: &[T]) -> Result<Vec<T>> {
        interleave(&self.permutation, seq)
    }

    pub fn deinterleave<T: Clone>(&self, seq: &[T]) -> Result<Vec<T>> {
        deinterleave(&self.permutation, seq)
    }

    pub fn turbo_encode(&self, xs: &[usize]) -> Result<[Vec<usize>; 2]> {
        if xs.len() != self.block_length() {
            return Err(Error::InvalidInput(format!(
                "turbo block needs {} systematic tuples, got {}",
                self.block_length(),
                xs.len()
            )));
        }
        let p0 = self.constituents[0].systematic_encode(xs)?;
        let p1 = self.constituents[1].systematic_encode(&self.interleave(xs)?)?;
        Ok([p0, p1])
    }

    pub fn turbo_syndrome_form(&self, x: &TurboBlock) -> Result<[Vec<usize>; 2]> {
        let [p0, p1] = self.turbo_encode(&x.sys)?;
        let mut out: [Vec<usize>; 2] = Default::default();
        for (j, p) in [p0, p1].into_iter().enumerate() {
            let xj = &x.par[j];
            if xj.len() != p.len() {
                return Err(Error::InvalidInput(format!(
                    "parity part {j} has wrong length"
                )));
            }
            let space = self.constituents[j].par_space();
            if let Some(&bad) = xj.iter().find(|&&v| v >= space.size()) {
                return Err(Error::OutOfRange {
                    value: bad,
                    limit: space.size(),
                });
            }
            out[j] = xj.iter().zip(&p).map(|(&a, &b)| space.sub(a, b)).collect();
        }
        Ok(out)
    }

    /// Flattened symbols in layout `[xs | x0 | x1]`.
    pub fn block_to_symbols(&self, x: &TurboBlock) -> Vec<Symbol> {
        let mut out = unpack_stream(&x.sys, self.constituents[0].sys_space());
        for j in 0..2 {
            out.extend(unpack_stream(&x.par[j], self.constituents[j].par_space()));
        }
        out
    }

    pub fn block_from_symbols(&self, symbols: &[Symbol]) -> Result<TurboBlock> {
        let n = self.block_length();
        let widths = [
            self.k(),
            self.constituents[0].n_minus_k(),
            self.constituents[1].n_minus_k(),
        ];
        let expected: usize = widths.iter().map(|w| w * n).sum();
        if symbols.len() != expected {
            return Err(Error::InvalidInput(format!(
                "turbo block needs {expected} symbols, got {}",
                symbols.len()
            )));
        }
        let (sys, rest) = symbols.split_at(widths[0] * n);
        let (x0, x1) = rest.split_at(widths[1] * n);
        Ok(TurboBlock {
            sys: pack_stream(sys, self.constituents[0].sys_space())?,
            par: [
                pack_par(x0, self.constituents[0].par_space(), n)?,
                pack_par(x1, self.constituents[1].par_space(), n)?,
            ],
        })
    }
}

fn pack_par(symbols: &[Symbol], space: TupleSpace, n: usize) -> Result<Vec<usize>> {
    if space.width() == 0 {
        Ok(vec![0; n])
    } else {
        pack_stream(symbols, space)
    }
}

pub fn interleave<T: Clone>(perm: &[usize], seq: &[T]) -> Result<Vec<T>> {
    if perm.len() != seq.len() {
        return Err(Error::InvalidInput(format!(
            "sequence of length {} does not match interleaver of length {}",
            seq.len(),
            perm.len()
        )));
    }
    Ok(perm.iter().map(|&p| seq[p].clone()).collect())
}

pub fn deinterleave<T: Clone>(perm: &[usize], seq: &[T]) -> Result<Vec<T>> {
    if perm.len() != seq.len() {
        return Err(Error::InvalidInput(format!(
            "sequence of length {} does not match interleaver of length {}",
            seq.len(),
            perm.len()
        )));
    }
    let mut out: Vec<Option<T>> = vec![None; seq.len()];
    for (i, &p) in perm.iter().enumerate() {
        out[p] = Some(seq[i].clone());
    }
    out.into_iter()
        .map(|v| v.ok_or_else(|| Error::InvalidInput("interleaver is not a permutation".into())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf2() -> Field {
        Field::new(2).unwrap()
    }

    fn one_plus_d() -> ParityRealization {
        ParityRealization::feedforward(gf2(), &[vec![vec![1, 1]]]).unwrap()
    }

    fn accumulator() -> ParityRealization {
        ParityRealization::recursive(gf2(), &[vec![1]], &[1, 1]).unwrap()
    }

    #[test]
    fn trellis_of_one_plus_d() {
        let t = build_trellis(&one_plus_d());
        assert_eq!(t.num_states, 2);
        assert_eq!(
            t.transitions,
            vec![
                Transition {
                    from: 0,
                    sys: 0,
                    par: 0,
                    to: 0
                },
                Transition {
                    from: 0,
                    sys: 1,
                    par: 1,
                    to: 1
                },
                Transition {
                    from: 1,
                    sys: 0,
                    par: 1,
                    to: 0
                },
                Transition {
                    from: 1,
                    sys: 1,
                    par: 0,
                    to: 1
                },
            ]
        );
    }

    #[test]
    fn trellis_of_identity_and_accumulator() {
        let id = ParityRealization::feedforward(gf2(), &[vec![vec![1]]]).unwrap();
        let t = build_trellis(&id);
        assert_eq!(t.num_states, 1);
        assert!(t
            .transitions
            .iter()
            .all(|tr| tr.par == tr.sys && tr.to == 0));

        let acc = accumulator();
        assert_eq!(acc.num_states(), 2);
        for p in 0..2 {
            for u in 0..2 {
                assert_eq!(acc.output(p, u), (u + p) % 2);
                assert_eq!(acc.next_state(p, u), (u + p) % 2);
            }
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            one_plus_d().systematic_encode(&[1, 0, 1, 1]).unwrap(),
            vec![1, 1, 1, 0]
        );
        let id = ParityRealization::feedforward(gf2(), &[vec![vec![1]]]).unwrap();
        assert_eq!(id.systematic_encode(&[0, 1, 1]).unwrap(), vec![0, 1, 1]);
        assert_eq!(
            accumulator().systematic_encode(&[0; 5]).unwrap(),
            vec![0; 5]
        );
        assert!(id.systematic_encode(&[2]).is_err());
    }

    // Direct polynomial convolution, independent of the state machine.
    fn convolve(field: Field, xs: &[Symbol], taps: &[Symbol]) -> Vec<Symbol> {
        (0..xs.len())
            .map(|i| {
                (0..taps.len())
                    .filter(|&d| d <= i)
                    .fold(0, |acc, d| field.add(acc, field.mul(taps[d], xs[i - d])))
            })
            .collect()
    }

    #[test]
    fn feedforward_matches_convolution() {
        let f = Field::new(3).unwrap();
        let taps = vec![2, 0, 1, 1];
        let r = ParityRealization::feedforward(f, &[vec![taps.clone()]]).unwrap();
        assert_eq!(r.num_states(), 27);
        let xs: Vec<Symbol> = (0..40).map(|i| (i * 7 + i / 3) % 3).collect();
        let packed: Vec<usize> = xs.iter().map(|&v| v as usize).collect();
        let p = r.systematic_encode(&packed).unwrap();
        let expect: Vec<usize> = convolve(f, &xs, &taps)
            .into_iter()
            .map(|v| v as usize)
            .collect();
        assert_eq!(p, expect);
    }

    #[test]
    fn recursive_satisfies_feedback_relation() {
        // p * f = u * g must hold as sequences for P = g / f.
        let f = Field::new(3).unwrap();
        let g = vec![1, 2, 1];
        let fb = vec![2, 1, 1];
        let r = ParityRealization::recursive(f, std::slice::from_ref(&g), &fb).unwrap();
        let xs: Vec<Symbol> = (0..30).map(|i| (i * i + 1) % 3).collect();
        let p: Vec<Symbol> = r
            .systematic_encode(&xs.iter().map(|&v| v as usize).collect::<Vec<_>>())
            .unwrap()
            .into_iter()
            .map(|v| v as Symbol)
            .collect();
        assert_eq!(convolve(f, &p, &fb), convolve(f, &xs, &g));
    }

    #[test]
    fn multi_input_feedforward() {
        // Two inputs, one output: p = u0 + D u1.
        let r = ParityRealization::feedforward(gf2(), &[vec![vec![1], vec![0, 1]]]).unwrap();
        assert_eq!(r.k(), 2);
        assert_eq!(r.num_states(), 2);
        // tuples (u0,u1): (0,1)=2, (1,0)=1
        assert_eq!(r.systematic_encode(&[2, 1, 0]).unwrap(), vec![0, 0, 0]);
        assert_eq!(r.systematic_encode(&[2, 0, 0]).unwrap(), vec![0, 1, 0]);
    }

    #[test]
    fn table_relabels_and_drops_unreachable() {
        // State 2 is unreachable; state 1 is reached first via input 1.
        let next = [0, 1, 0, 1, 2, 2];
        let out = [0, 1, 1, 0, 0, 1];
        let r = ParityRealization::from_tables(gf2(), 1, 1, 3, &next, &out).unwrap();
        assert_eq!(r.num_states(), 2);
        assert_eq!(r, one_plus_d());
        assert!(ParityRealization::from_tables(gf2(), 1, 1, 2, &[0, 5, 0, 0], &[0; 4]).is_err());
    }

    #[test]
    fn syndrome_examples() {
        let r = one_plus_d();
        let x = SourceBlock {
            sys: vec![1, 0, 1, 1],
            par: vec![1, 0, 0, 1],
        };
        assert_eq!(r.syndrome_form(&x).unwrap(), vec![0, 1, 1, 1]);
        let cw = SourceBlock {
            sys: vec![1, 0, 1, 1],
            par: vec![1, 1, 1, 0],
        };
        assert_eq!(r.syndrome_form(&cw).unwrap(), vec![0; 4]);
        let s0 = vec![1, 0, 1, 1, 0];
        let zeros = SourceBlock {
            sys: vec![0; 5],
            par: s0.clone(),
        };
        assert_eq!(r.syndrome_form(&zeros).unwrap(), s0);
    }

    #[test]
    fn coset_representative_examples() {
        let r = one_plus_d();
        let c = r.coset_representative(&[0, 1]);
        assert_eq!(c.to_symbols(r.sys_space(), r.par_space()), vec![0, 0, 0, 1]);
        assert_eq!(
            r.coset_representative(&[0, 0]),
            SourceBlock {
                sys: vec![0, 0],
                par: vec![0, 0]
            }
        );
        let s = vec![1, 1, 0, 1];
        assert_eq!(r.syndrome_form(&r.coset_representative(&s)).unwrap(), s);
    }

    #[test]
    fn expanded_section_shape() {
        let r = one_plus_d();
        let t = build_trellis(&r);
        let e = build_expanded(&t, r.par_space());
        assert_eq!(e.transitions.len(), 8);
        // sigma = 0, x = (1, 1): chi parity label is 1 so s = 0.
        let x = e.join(1, 1);
        let tr = e
            .transitions
            .iter()
            .find(|tr| tr.from == 0 && tr.x == x)
            .unwrap();
        assert_eq!(tr.s, 0);
        for ct in &t.transitions {
            let zero = e
                .transitions
                .iter()
                .find(|et| et.from == ct.from && et.x == e.join(ct.sys, ct.par))
                .unwrap();
            assert_eq!(zero.s, 0);
        }
    }

    #[test]
    fn expanded_section_invariants() {
        let f = Field::new(3).unwrap();
        let r =
            ParityRealization::feedforward(f, &[vec![vec![1, 2]], vec![vec![0, 1, 1]]]).unwrap();
        let t = build_trellis(&r);
        let e = build_expanded(&t, r.par_space());
        assert_eq!(
            e.transitions.len(),
            t.transitions.len() * r.par_space().size()
        );
        let nx = r.sys_space().size() * r.par_space().size();
        let mut seen = vec![0; t.num_states * nx];
        for tr in &e.transitions {
            seen[tr.from * nx + tr.x] += 1;
            let (xs, xp) = e.split(tr.x);
            let p = r.output(tr.from, xs);
            assert_eq!(tr.s, r.par_space().sub(xp, p));
            assert_eq!(tr.to, r.next_state(tr.from, xs));
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    fn example_turbo() -> TurboCode {
        TurboCode::new(one_plus_d(), accumulator(), vec![2, 0, 3, 1]).unwrap()
    }

    #[test]
    fn turbo_encode_examples() {
        let tc = example_turbo();
        assert_eq!(tc.interleave(&[1, 0, 1, 1]).unwrap(), vec![1, 1, 1, 0]);
        let [p0, p1] = tc.turbo_encode(&[1, 0, 1, 1]).unwrap();
        assert_eq!(p0, vec![1, 1, 1, 0]);
        assert_eq!(p1, vec![1, 0, 1, 1]);
        assert_eq!(tc.turbo_encode(&[0; 4]).unwrap(), [vec![0; 4], vec![0; 4]]);
        assert!(tc.turbo_encode(&[0; 3]).is_err());

        let sym = TurboCode::new(one_plus_d(), one_plus_d(), vec![0, 1, 2, 3]).unwrap();
        let [a, b] = sym.turbo_encode(&[1, 1, 0, 1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn turbo_syndrome_examples() {
        let tc = example_turbo();
        let x = TurboBlock {
            sys: vec![1, 0, 1, 1],
            par: [vec![0; 4], vec![1; 4]],
        };
        let [s0, s1] = tc.turbo_syndrome_form(&x).unwrap();
        assert_eq!(s0, vec![1, 1, 1, 0]);
        assert_eq!(s1, vec![0, 1, 0, 0]);

        let cw = TurboBlock {
            sys: vec![1, 0, 1, 1],
            par: [vec![1, 1, 1, 0], vec![1, 0, 1, 1]],
        };
        assert_eq!(
            tc.turbo_syndrome_form(&cw).unwrap(),
            [vec![0; 4], vec![0; 4]]
        );

        let zs = TurboBlock {
            sys: vec![0; 4],
            par: [vec![1, 0, 0, 1], vec![0, 1, 1, 0]],
        };
        assert_eq!(tc.turbo_syndrome_form(&zs).unwrap(), zs.par);

        let bad = TurboBlock {
            sys: vec![0; 4],
            par: [vec![0; 3], vec![0; 4]],
        };
        assert!(tc.turbo_syndrome_form(&bad).is_err());
    }

    #[test]
    fn turbo_rejects_bad_permutations() {
        assert!(TurboCode::new(one_plus_d(), one_plus_d(), vec![0, 0, 1]).is_err());
        assert!(TurboCode::new(one_plus_d(), one_plus_d(), vec![0, 3]).is_err());
        let f3 = ParityRealization::feedforward(Field::new(3).unwrap(), &[vec![vec![1]]]).unwrap();
        assert!(TurboCode::new(one_plus_d(), f3, vec![0]).is_err());
    }

    #[test]
    fn interleave_examples() {
        assert_eq!(
            interleave(&[0, 1, 2], &['a', 'b', 'c']).unwrap(),
            vec!['a', 'b', 'c']
        );
        assert_eq!(interleave(&[1, 0], &['a', 'b']).unwrap(), vec!['b', 'a']);
        let perm = [3, 1, 4, 0, 2];
        let seq = [10, 11, 12, 13, 14];
        assert_eq!(
            deinterleave(&perm, &interleave(&perm, &seq).unwrap()).unwrap(),
            seq
        );
    }

    #[test]
    fn turbo_symbol_layout_roundtrip() {
        let tc = example_turbo();
        let x = TurboBlock {
            sys: vec![1, 0, 1, 1],
            par: [vec![0, 1, 1, 0], vec![1, 1, 0, 1]],
        };
        let sym = tc.block_to_symbols(&x);
        assert_eq!(sym, vec![1, 0, 1, 1, 0, 1, 1, 0, 1, 1, 0, 1]);
        assert_eq!(tc.block_from_symbols(&sym).unwrap(), x);
    }
}
