//! Memoryless correlation and syndrome-transmission channels, the i.i.d.
//! source prior, and conversion of observations into belief messages.

use rand_xoshiro::rand_core::Rng;

use crate::bcjr::Message;
use crate::error::{Error, Result};
use crate::fields::{Field, Symbol};

const ROW_TOL: f64 = 1e-12;

fn check_stochastic(rows: &[f64], width: usize, what: &str) -> Result<()> {
    for (i, row) in rows.chunks(width).enumerate() {
        if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidInput(format!(
                "{what}: row {i} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_TOL {
            return Err(Error::InvalidInput(format!(
                "{what}: row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

/// Uniform deviate in [0, 1) from the top 53 bits of one 64-bit draw.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF draw from a pmf. Uses exactly one 64-bit draw.
pub fn sample_index<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    let u = uniform(rng);
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left u above the last partial sum: take the last supported entry.
    pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// A discrete memoryless channel acting on one GF(q) symbol,
/// `w[x * outputs + y] = p(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolChannel {
    inputs: usize,
    outputs: usize,
    w: Vec<f64>,
}

impl SymbolChannel {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, |r| r.len());
        if inputs == 0 || outputs == 0 || rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::InvalidInput(
                "channel matrix must be a nonempty rectangle".into(),
            ));
        }
        let w: Vec<f64> = rows.iter().flatten().copied().collect();
        check_stochastic(&w, outputs, "correlation channel")?;
        Ok(SymbolChannel { inputs, outputs, w })
    }

    /// q-ary symmetric channel with total crossover probability `eps`.
    pub fn qsc(field: Field, eps: f64) -> Result<Self> {
        let q = field.order() as usize;
        let max = (q - 1) as f64 / q as f64;
        if !(0.0..=max).contains(&eps) {
            return Err(Error::InvalidInput(format!(
                "crossover {eps} outside [0, {max}]"
            )));
        }
        let off = eps / (q - 1) as f64;
        let w = (0..q * q)
            .map(|i| if i / q == i % q { 1.0 - eps } else { off })
            .collect();
        Ok(SymbolChannel {
            inputs: q,
            outputs: q,
            w,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn prob(&self, x: Symbol, y: Symbol) -> f64 {
        self.w[x as usize * self.outputs + y as usize]
    }

    pub fn row(&self, x: Symbol) -> &[f64] {
        let start = x as usize * self.outputs;
        &self.w[start..start + self.outputs]
    }

    /// True when `y = x + e` with noise `e` independent of `x`, i.e. the
    /// matrix is circulant over GF(q).
    pub fn is_additive(&self) -> bool {
        let q = self.inputs;
        if self.outputs != q {
            return false;
        }
        (0..q).all(|x| (0..q).all(|y| (self.w[x * q + y] - self.w[(y + q - x) % q]).abs() <= 1e-15))
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: Symbol, rng: &mut R) -> Symbol {
        sample_index(self.row(x), rng) as Symbol
    }
}

/// i.i.d. source distribution over GF(q).
#[derive(Debug, Clone, PartialEq)]
pub struct SourcePrior {
    pmf: Vec<f64>,
}

impl SourcePrior {
    pub fn uniform(field: Field) -> Self {
        let q = field.order() as usize;
        SourcePrior {
            pmf: vec![1.0 / q as f64; q],
        }
    }

    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidInput("prior must be nonempty".into()));
        }
        check_stochastic(&pmf, pmf.len(), "source prior")?;
        Ok(SourcePrior { pmf })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    #[inline]
    pub fn prob(&self, x: Symbol) -> f64 {
        self.pmf[x as usize]
    }

    /// Prior of `x - shift` when `x` follows this prior: `p'(z) = p(z + shift)`.
    pub fn translated(&self, shift: Symbol) -> Self {
        let q = self.pmf.len();
        SourcePrior {
            pmf: (0..q).map(|z| self.pmf[(z + shift as usize) % q]).collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Symbol {
        sample_index(&self.pmf, rng) as Symbol
    }
}

/// Belief `mu(x) ∝ p(x) p(y | x)` about one source symbol.
pub fn posterior_message(prior: &SourcePrior, ch: &SymbolChannel, y: Symbol) -> Result<Message> {
    if y as usize >= ch.outputs() {
        return Err(Error::OutOfRange {
            value: y as usize,
            limit: ch.outputs(),
        });
    }
    if prior.pmf().len() != ch.inputs() {
        return Err(Error::InvalidInput(
            "prior and channel disagree on the alphabet".into(),
        ));
    }
    let joint: Vec<f64> = (0..ch.inputs() as Symbol)
        .map(|x| prior.prob(x) * ch.prob(x, y))
        .collect();
    Message::normalized_from(joint).map_err(|_| {
        Error::DegenerateEvidence(format!(
            "observation {y} has zero probability under the prior"
        ))
    })
}

/// Draws one (source, side information) symbol pair: source first, then
/// the channel output, one 64-bit draw each.
pub fn sample_pair<R: Rng + ?Sized>(
    prior: &SourcePrior,
    ch: &SymbolChannel,
    rng: &mut R,
) -> (Symbol, Symbol) {
    let x = prior.sample(rng);
    let y = ch.sample(x, rng);
    (x, y)
}

/// Channel between the sent and the received syndrome, acting on packed
/// (n-k)-tuples: `w[s * size + r] = p(r | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyndromeChannel {
    size: usize,
    w: Vec<f64>,
    error_free: bool,
}

impl SyndromeChannel {
    pub fn error_free(size: usize) -> Self {
        let w = (0..size * size)
            .map(|i| if i / size == i % size { 1.0 } else { 0.0 })
            .collect();
        SyndromeChannel {
            size,
            w,
            error_free: true,
        }
    }

    /// Symmetric channel over the whole tuple alphabet: the tuple is kept
    /// with probability `1 - eps`, otherwise replaced uniformly by another.
    pub fn qsc(size: usize, eps: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidInput(
                "symmetric syndrome channel needs at least 2 tuples".into(),
            ));
        }
        let max = (size - 1) as f64 / size as f64;
        if !(0.0..=max).contains(&eps) {
            return Err(Error::InvalidInput(format!(
                "syndrome crossover {eps} outside [0, {max}]"
            )));
        }
        let off = eps / (size - 1) as f64;
        let w = (0..size * size)
            .map(|i| if i / size == i % size { 1.0 - eps } else { off })
            .collect();
        Ok(SyndromeChannel {
            size,
            w,
            error_free: eps == 0.0,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if size == 0 || rows.iter().any(|r| r.len() != size) {
            return Err(Error::InvalidInput(
                "syndrome channel matrix must be square".into(),
            ));
        }
        let w: Vec<f64> = rows.iter().flatten().copied().collect();
        check_stochastic(&w, size, "syndrome channel")?;
        let error_free =
            (0..size * size).all(|i| w[i] == if i / size == i % size { 1.0 } else { 0.0 });
        Ok(SyndromeChannel {
            size,
            w,
            error_free,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_error_free(&self) -> bool {
        self.error_free
    }

    #[inline]
    pub fn prob(&self, s: usize, r: usize) -> f64 {
        self.w[s * self.size + r]
    }

    pub fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        sample_index(&self.w[s * self.size..(s + 1) * self.size], rng)
    }
}

/// Likelihood message `mu(s') ∝ p(r | s')` over sent syndrome tuples.
pub fn syndrome_message(sc: &SyndromeChannel, r: usize) -> Result<Message> {
    if r >= sc.size() {
        return Err(Error::OutOfRange {
            value: r,
            limit: sc.size(),
        });
    }
    Message::normalized_from((0..sc.size()).map(|s| sc.prob(s, r)).collect())
        .map_err(|_| Error::DegenerateEvidence(format!("received syndrome {r} is impossible")))
}
