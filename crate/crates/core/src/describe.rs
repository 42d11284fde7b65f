//! Text formats: code descriptions and symbol sequence files.
//!
//! # Code descriptions
//!
//! Line oriented; `#` starts a comment, blank lines are ignored.
//!
//! ```text
//! q 2                 # field order (prime, required)
//! k 1                 # systematic tuple width (default 1)
//! out 1 0 1           # one line per parity output: taps, ascending powers of D
//! out 1 1 | 0 1       # with k > 1, one tap group per input separated by `|`
//! feedback 1 1 1      # optional recursive denominator (k = 1 only)
//! ```
//!
//! A realization may instead be given as an explicit state machine:
//!
//! ```text
//! q 2
//! k 2
//! parity_width 1
//! states 2
//! edge <state> <input> <next_state> <output>   # one per (state, input)
//! ```
//!
//! Inputs and outputs in `edge` lines are packed tuple indices (digit 0 least
//! significant). A turbo code starts with `turbo`, gives the interleaver with
//! `permutation p0 p1 ...` (`out_i = in[p_i]`), and then two blocks each
//! introduced by a `constituent` line.
//!
//! # Symbol files
//!
//! Whitespace-separated field symbols, `#` comments allowed. Convolutional
//! source blocks list `[xs_i | xp_i]` time step by time step; syndromes list
//! the (n-k)-tuples `s_i` in order. Turbo blocks use the layout
//! `[xs | x0 | x1]` and turbo syndromes `[s0 | s1]`.

use crate::code::{ParityRealization, TurboCode};
use crate::error::{Error, Result};
use crate::fields::{Field, Symbol};

#[derive(Debug, Clone, PartialEq)]
pub enum CodeDescription {
    Convolutional(ParityRealization),
    Turbo(TurboCode),
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: usize, words: &[&str]) -> Result<Vec<T>> {
    words
        .iter()
        .map(|w| {
            w.parse::<T>()
                .map_err(|_| perr(line, format!("`{w}` is not a valid number")))
        })
        .collect()
}

fn single<T: std::str::FromStr + Copy>(line: usize, key: &str, words: &[&str]) -> Result<T> {
    match numbers::<T>(line, words)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(perr(line, format!("`{key}` takes exactly one value"))),
    }
}

#[derive(Default)]
struct Block {
    start: usize,
    q: Option<u32>,
    k: Option<usize>,
    outs: Vec<(usize, Vec<Vec<Symbol>>)>,
    feedback: Option<(usize, Vec<Symbol>)>,
    parity_width: Option<usize>,
    states: Option<usize>,
    edges: Vec<(usize, [usize; 4])>,
}

impl Block {
    fn apply(&mut self, line: usize, key: &str, args: &[&str]) -> Result<()> {
        let dup = |set: bool| {
            if set {
                Err(perr(line, format!("`{key}` given twice")))
            } else {
                Ok(())
            }
        };
        match key {
            "q" => {
                dup(self.q.is_some())?;
                self.q = Some(single(line, key, args)?);
            }
            "k" => {
                dup(self.k.is_some())?;
                self.k = Some(single(line, key, args)?);
            }
            "out" => {
                let groups = args
                    .split(|w| *w == "|")
                    .map(|g| numbers::<Symbol>(line, g))
                    .collect::<Result<Vec<_>>>()?;
                if groups.iter().any(|g| g.is_empty()) {
                    return Err(perr(line, "empty tap group"));
                }
                self.outs.push((line, groups));
            }
            "feedback" => {
                dup(self.feedback.is_some())?;
                self.feedback = Some((line, numbers(line, args)?));
            }
            "parity_width" => {
                dup(self.parity_width.is_some())?;
                self.parity_width = Some(single(line, key, args)?);
            }
            "states" => {
                dup(self.states.is_some())?;
                self.states = Some(single(line, key, args)?);
            }
            "edge" => {
                let v: Vec<usize> = numbers(line, args)?;
                let arr: [usize; 4] = v
                    .try_into()
                    .map_err(|_| perr(line, "`edge` takes four values"))?;
                self.edges.push((line, arr));
            }
            _ => return Err(perr(line, format!("unknown keyword `{key}`"))),
        }
        Ok(())
    }

    fn build(self) -> Result<ParityRealization> {
        let q = self.q.ok_or_else(|| perr(self.start, "missing `q`"))?;
        let field = Field::new(q).map_err(|e| perr(self.start, e.to_string()))?;
        let k = self.k.unwrap_or(1);
        if !self.edges.is_empty() || self.states.is_some() {
            if !self.outs.is_empty() || self.feedback.is_some() {
                return Err(perr(
                    self.start,
                    "`edge` tables cannot be mixed with `out`/`feedback`",
                ));
            }
            let states = self
                .states
                .ok_or_else(|| perr(self.start, "missing `states`"))?;
            let width = self
                .parity_width
                .ok_or_else(|| perr(self.start, "missing `parity_width`"))?;
            let qk = (q as usize).pow(k as u32);
            let mut next = vec![usize::MAX; states * qk];
            let mut out = vec![0; states * qk];
            for (line, [s, u, t, o]) in self.edges {
                if s >= states || u >= qk {
                    return Err(perr(line, "edge state or input out of range"));
                }
                if next[s * qk + u] != usize::MAX {
                    return Err(perr(line, "duplicate edge"));
                }
                next[s * qk + u] = t;
                out[s * qk + u] = o;
            }
            if next.contains(&usize::MAX) {
                return Err(perr(self.start, "every (state, input) pair needs an edge"));
            }
            return ParityRealization::from_tables(field, k, width, states, &next, &out)
                .map_err(|e| perr(self.start, e.to_string()));
        }

        if self.outs.is_empty() {
            return Err(perr(self.start, "no `out` lines"));
        }
        for (line, groups) in &self.outs {
            if groups.len() != k {
                return Err(perr(
                    *line,
                    format!("expected {k} tap group(s), found {}", groups.len()),
                ));
            }
        }
        match self.feedback {
            Some((line, fb)) => {
                if k != 1 {
                    return Err(perr(line, "`feedback` is only supported with k = 1"));
                }
                let taps: Vec<Vec<Symbol>> = self
                    .outs
                    .into_iter()
                    .map(|(_, mut g)| g.remove(0))
                    .collect();
                ParityRealization::recursive(field, &taps, &fb)
                    .map_err(|e| perr(line, e.to_string()))
            }
            None => {
                let taps: Vec<Vec<Vec<Symbol>>> = self.outs.into_iter().map(|(_, g)| g).collect();
                ParityRealization::feedforward(field, &taps)
                    .map_err(|e| perr(self.start, e.to_string()))
            }
        }
    }
}

/// Parses a code description (convolutional or turbo).
pub fn parse_code(text: &str) -> Result<CodeDescription> {
    let mut turbo = false;
    let mut permutation: Option<Vec<usize>> = None;
    let mut blocks: Vec<Block> = Vec::new();
    let mut current = Block {
        start: 1,
        ..Block::default()
    };
    let mut seen_content = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let (key, args) = (words[0], &words[1..]);
        match key {
            "turbo" => {
                if seen_content {
                    return Err(perr(line, "`turbo` must be the first line"));
                }
                turbo = true;
            }
            "permutation" if turbo => {
                if permutation.is_some() {
                    return Err(perr(line, "`permutation` given twice"));
                }
                permutation = Some(numbers(line, args)?);
            }
            "constituent" if turbo => {
                if current.q.is_some() || !current.outs.is_empty() || !current.edges.is_empty() {
                    blocks.push(std::mem::take(&mut current));
                }
                current.start = line;
            }
            _ => {
                if turbo && current.start == 1 && blocks.is_empty() {
                    return Err(perr(line, "expected `constituent` before code parameters"));
                }
                current.apply(line, key, args)?;
            }
        }
        seen_content = true;
    }
    blocks.push(current);

    if !turbo {
        let block = blocks.pop().expect("one block");
        return Ok(CodeDescription::Convolutional(block.build()?));
    }
    if blocks.len() != 2 {
        return Err(perr(
            text.lines().count(),
            format!("turbo code needs 2 constituents, found {}", blocks.len()),
        ));
    }
    let permutation = permutation.ok_or_else(|| perr(1, "turbo code needs a `permutation`"))?;
    let mut it = blocks.into_iter();
    let c0 = it.next().expect("two blocks").build()?;
    let c1 = it.next().expect("two blocks").build()?;
    TurboCode::new(c0, c1, permutation)
        .map(CodeDescription::Turbo)
        .map_err(|e| perr(1, e.to_string()))
}

/// Reads whitespace-separated symbols, ignoring `#` comments.
pub fn parse_symbols(text: &str) -> Result<Vec<Symbol>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        for w in content.split_whitespace() {
            out.push(
                w.parse()
                    .map_err(|_| perr(idx + 1, format!("`{w}` is not a symbol")))?,
            );
        }
    }
    Ok(out)
}

/// Writes symbols, `per_line` to a line.
pub fn format_symbols(symbols: &[Symbol], per_line: usize) -> String {
    let mut s = String::new();
    for chunk in symbols.chunks(per_line.max(1)) {
        let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_feedforward_and_recursive() {
        let CodeDescription::Convolutional(r) = parse_code("q 2\nout 1 1\n").unwrap() else {
            panic!()
        };
        assert_eq!(
            r,
            ParityRealization::feedforward(Field::new(2).unwrap(), &[vec![vec![1, 1]]]).unwrap()
        );

        let text = "# rsc\nq 2\nk 1\nout 1 0 1   # 5\nfeedback 1 1 1\n";
        let CodeDescription::Convolutional(r) = parse_code(text).unwrap() else {
            panic!()
        };
        assert_eq!(r.num_states(), 4);
        assert_eq!(
            r,
            ParityRealization::recursive(Field::new(2).unwrap(), &[vec![1, 0, 1]], &[1, 1, 1])
                .unwrap()
        );

        let CodeDescription::Convolutional(r) =
            parse_code("q 3\nk 2\nout 1 | 0 1\nout 2 1 | 1\n").unwrap()
        else {
            panic!()
        };
        assert_eq!((r.k(), r.n_minus_k()), (2, 2));
    }

    #[test]
    fn parses_edge_tables() {
        let text = "q 2\nk 1\nparity_width 1\nstates 2\nedge 0 0 0 0\nedge 0 1 1 1\nedge 1 0 0 1\nedge 1 1 1 0\n";
        let CodeDescription::Convolutional(r) = parse_code(text).unwrap() else {
            panic!()
        };
        assert_eq!(
            r,
            ParityRealization::feedforward(Field::new(2).unwrap(), &[vec![vec![1, 1]]]).unwrap()
        );
        let missing = "q 2\nparity_width 1\nstates 2\nedge 0 0 0 0\n";
        assert!(parse_code(missing).is_err());
    }

    #[test]
    fn parses_turbo() {
        let text = "turbo\npermutation 2 0 3 1\nconstituent\nq 2\nout 1 1\nconstituent\nq 2\nout 1\nfeedback 1 1\n";
        let CodeDescription::Turbo(tc) = parse_code(text).unwrap() else {
            panic!()
        };
        assert_eq!(tc.permutation(), &[2, 0, 3, 1]);
        assert_eq!(
            tc.turbo_encode(&[1, 0, 1, 1]).unwrap(),
            [vec![1, 1, 1, 0], vec![1, 0, 1, 1]]
        );
    }

    #[test]
    fn errors_name_the_line() {
        assert_eq!(
            parse_code("q 2\nout 1 x\n").unwrap_err(),
            Error::Parse {
                line: 2,
                msg: "`x` is not a valid number".into()
            }
        );
        assert!(matches!(
            parse_code("q 4\nout 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_code("q 2\nbogus 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_code("q 2\nk 2\nout 1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_code("q 2\nk 2\nout 1 | 1\nfeedback 1 1\n").is_err());
        assert!(parse_code("turbo\npermutation 0 1\nconstituent\nq 2\nout 1\n").is_err());
        assert!(parse_code(
            "turbo\npermutation 0 0\nconstituent\nq 2\nout 1\nconstituent\nq 2\nout 1\n"
        )
        .is_err());
    }

    #[test]
    fn symbols_roundtrip() {
        let s = parse_symbols("1 0 # c\n 2\n\n1").unwrap();
        assert_eq!(s, vec![1, 0, 2, 1]);
        assert_eq!(format_symbols(&s, 2), "1 0\n2 1\n");
        assert!(parse_symbols("1 -1").is_err());
    }
}
