//! Prime-field arithmetic and packing of GF(q) tuples into integer indices.
//!
//! Tuples are packed little-endian: position 0 of the tuple is the least
//! significant base-q digit, so `(1, 0, 1)` over GF(2) packs to `5`. Every
//! external file format in this crate uses the same digit order.

use crate::error::{Error, Result};

/// A field element. Always a residue in `0..q`.
pub type Symbol = u32;

/// The prime field GF(q), `2 <= q <= 251`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    q: u32,
}

fn is_prime(n: u32) -> bool {
    n >= 2
        && (2..)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

impl Field {
    pub fn new(q: u32) -> Result<Self> {
        if q > 251 || !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Field { q })
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        (a + b) % self.q
    }

    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        (a + self.q - b) % self.q
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        (a * b) % self.q
    }

    #[inline]
    pub fn neg(&self, a: Symbol) -> Symbol {
        (self.q - a) % self.q
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inv(&self, a: Symbol) -> Option<Symbol> {
        if a.is_multiple_of(self.q) {
            return None;
        }
        let mut result = 1u32;
        let mut base = a % self.q;
        let mut exp = self.q - 2;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        Some(result)
    }

    pub fn elements(&self) -> impl Iterator<Item = Symbol> {
        0..self.q
    }
}

/// The set of length-`m` tuples over GF(q), indexed `0..q^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleSpace {
    field: Field,
    m: usize,
    size: usize,
}

impl TupleSpace {
    pub fn new(field: Field, m: usize) -> Result<Self> {
        let size = (field.order() as usize)
            .checked_pow(m as u32)
            .filter(|s| *s <= u32::MAX as usize)
            .ok_or_else(|| {
                Error::InvalidInput(format!("tuple space {}^{} too large", field.order(), m))
            })?;
        Ok(TupleSpace { field, m, size })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Tuple length.
    pub fn width(&self) -> usize {
        self.m
    }

    /// Number of tuples, `q^m`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pack(&self, digits: &[Symbol]) -> Result<usize> {
        if digits.len() != self.m {
            return Err(Error::InvalidInput(format!(
                "tuple has {} digits, expected {}",
                digits.len(),
                self.m
            )));
        }
        let q = self.field.order();
        let mut index = 0usize;
        for &d in digits.iter().rev() {
            if d >= q {
                return Err(Error::OutOfRange {
                    value: d as usize,
                    limit: q as usize,
                });
            }
            index = index * q as usize + d as usize;
        }
        Ok(index)
    }

    pub fn unpack(&self, index: usize) -> Result<Vec<Symbol>> {
        if index >= self.size {
            return Err(Error::OutOfRange {
                value: index,
                limit: self.size,
            });
        }
        let mut out = vec![0; self.m];
        self.unpack_into(index, &mut out);
        Ok(out)
    }

    /// Unchecked unpack into a caller buffer of length `m`.
    pub fn unpack_into(&self, mut index: usize, out: &mut [Symbol]) {
        let q = self.field.order() as usize;
        for d in out.iter_mut() {
            *d = (index % q) as Symbol;
            index /= q;
        }
    }

    /// Digit `pos` of the tuple with the given index.
    #[inline]
    pub fn digit(&self, index: usize, pos: usize) -> Symbol {
        let q = self.field.order() as usize;
        ((index / q.pow(pos as u32)) % q) as Symbol
    }

    fn digitwise(&self, a: usize, b: usize, f: impl Fn(Symbol, Symbol) -> Symbol) -> usize {
        let q = self.field.order() as usize;
        let (mut a, mut b) = (a, b);
        let mut out = 0usize;
        let mut scale = 1usize;
        for _ in 0..self.m {
            let d = f((a % q) as Symbol, (b % q) as Symbol) as usize;
            out += d * scale;
            scale *= q;
            a /= q;
            b /= q;
        }
        out
    }

    /// Componentwise sum of two packed tuples.
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.digitwise(a, b, |x, y| self.field.add(x, y))
    }

    /// Componentwise difference `a - b` of two packed tuples.
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.digitwise(a, b, |x, y| self.field.sub(x, y))
    }

    /// Full `size x size` table of `sub(a, b)`, row-major in `a`.
    pub fn sub_table(&self) -> Vec<usize> {
        let mut table = Vec::with_capacity(self.size * self.size);
        for a in 0..self.size {
            for b in 0..self.size {
                table.push(self.sub(a, b));
            }
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_composites_and_large_moduli() {
        for q in [0, 1, 4, 6, 9, 15, 253, 257] {
            assert!(Field::new(q).is_err(), "q={q}");
        }
        for q in [2, 3, 5, 7, 251] {
            assert!(Field::new(q).is_ok(), "q={q}");
        }
    }

    #[test]
    fn small_arith_examples() {
        let f2 = Field::new(2).unwrap();
        let f3 = Field::new(3).unwrap();
        let f5 = Field::new(5).unwrap();
        assert_eq!(f2.add(1, 1), 0);
        assert_eq!(f3.mul(2, 2), 1);
        assert_eq!(f5.neg(2), 3);
        assert_eq!(f5.sub(1, 3), 3);
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [2, 3, 5] {
            let f = Field::new(q).unwrap();
            for a in f.elements() {
                assert_eq!(f.add(a, 0), a);
                assert_eq!(f.mul(a, 1), a);
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.sub(f.add(a, b), b), a);
                    for c in f.elements() {
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn pack_examples() {
        let s = TupleSpace::new(Field::new(2).unwrap(), 3).unwrap();
        assert_eq!(s.pack(&[1, 0, 1]).unwrap(), 5);
        let s = TupleSpace::new(Field::new(3).unwrap(), 2).unwrap();
        assert_eq!(s.unpack(5).unwrap(), vec![2, 1]);
        assert!(s.unpack(9).is_err());
        assert!(s.pack(&[3, 0]).is_err());
    }

    #[test]
    fn pack_unpack_bijection_exhaustive() {
        for (q, m) in [(2, 0), (2, 1), (2, 6), (3, 1), (3, 6), (5, 3)] {
            let s = TupleSpace::new(Field::new(q).unwrap(), m).unwrap();
            let mut seen = vec![false; s.size()];
            for i in 0..s.size() {
                let t = s.unpack(i).unwrap();
                let j = s.pack(&t).unwrap();
                assert_eq!(i, j);
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
    }

    #[test]
    fn tuple_add_sub_agree_with_digits() {
        let f = Field::new(3).unwrap();
        let s = TupleSpace::new(f, 2).unwrap();
        let table = s.sub_table();
        for a in 0..9 {
            for b in 0..9 {
                let (da, db) = (s.unpack(a).unwrap(), s.unpack(b).unwrap());
                let sum: Vec<_> = da.iter().zip(&db).map(|(&x, &y)| f.add(x, y)).collect();
                assert_eq!(s.add(a, b), s.pack(&sum).unwrap());
                assert_eq!(s.sub(s.add(a, b), b), a);
                assert_eq!(table[a * 9 + b], s.sub(a, b));
                assert_eq!(s.digit(a, 1), da[1]);
            }
        }
    }
}
