//! Finite fields GF(p^w) with q = p^w <= 2^16.
//!
//! Characteristic-two fields, which are what the codes use in practice,
//! multiply through log/antilog tables and add with xor. Prime fields use
//! plain modular arithmetic. Odd-characteristic extension fields share the
//! log tables for multiplication and add digit by digit.
//!
//! ```
//! use mdsa::gf::{Elem, Field};
//!
//! let f = Field::new(32).unwrap();
//! assert_eq!((f.characteristic(), f.degree()), (2, 5));
//! let a = Elem(7);
//! assert_eq!(f.mul(a, f.inv(a).unwrap()), Elem(1));
//! ```

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: u32 = 1 << 16;

/// A field element, stored as its integer encoding in `[0, q)`.
///
/// For extension fields the encoding is the coefficient vector of the
/// polynomial representative read as a base-`p` number.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
#[repr(transparent)]
pub struct Elem(pub u16);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{q} is not a prime power")]
    NotPrimePower { q: u32 },
    #[error("field order {q} is outside the supported range [2, {max}]")]
    OutOfRange { q: u32, max: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("value {value} is not an element of GF({q})")]
    NotAnElement { value: u32, q: u32 },
}

#[derive(Debug)]
enum Arith {
    Prime,
    Tables { exp: Vec<u16>, log: Vec<u16> },
}

#[derive(Debug)]
struct Inner {
    q: u32,
    p: u32,
    w: u32,
    modulus: Vec<u32>,
    arith: Arith,
}

/// A finite field. Cheap to clone; clones share their tables.
#[derive(Clone)]
pub struct Field(Arc<Inner>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.0.q)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.q == other.0.q && self.0.modulus == other.0.modulus)
    }
}

impl Eq for Field {}

/// Builds GF(q). Same as [`Field::new`].
pub fn build_field(q: u32) -> Result<Field, FieldError> {
    Field::new(q)
}

impl Field {
    /// Builds GF(q) using the lexicographically smallest monic irreducible
    /// polynomial of degree w as modulus.
    pub fn new(q: u32) -> Result<Field, FieldError> {
        if !(2..=MAX_ORDER).contains(&q) {
            return Err(FieldError::OutOfRange { q, max: MAX_ORDER });
        }
        let (p, w) = prime_power(q).ok_or(FieldError::NotPrimePower { q })?;
        let modulus = if w == 1 {
            vec![0, 1]
        } else {
            smallest_irreducible(p, w)
        };
        let arith = if w == 1 && p != 2 {
            Arith::Prime
        } else {
            let (exp, log) = log_tables(p, w, &modulus);
            Arith::Tables { exp, log }
        };
        Ok(Field(Arc::new(Inner {
            q,
            p,
            w,
            modulus,
            arith,
        })))
    }

    pub fn order(&self) -> u32 {
        self.0.q
    }

    pub fn characteristic(&self) -> u32 {
        self.0.p
    }

    pub fn degree(&self) -> u32 {
        self.0.w
    }

    /// Coefficients of the modulus, constant term first. Prime fields
    /// report `x`.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    /// Checks that `v` encodes an element.
    pub fn elem(&self, v: u32) -> Result<Elem, FieldError> {
        if v < self.0.q {
            Ok(Elem(v as u16))
        } else {
            Err(FieldError::NotAnElement { value: v, q: self.0.q })
        }
    }

    /// Iterates over every element in encoding order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.0.q).map(|v| Elem(v as u16))
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let i = &*self.0;
        if i.p == 2 {
            return Elem(a.0 ^ b.0);
        }
        if i.w == 1 {
            return Elem(((a.0 as u32 + b.0 as u32) % i.p) as u16);
        }
        let (mut x, mut y, mut out, mut scale) = (a.0 as u32, b.0 as u32, 0u32, 1u32);
        for _ in 0..i.w {
            out += ((x % i.p + y % i.p) % i.p) * scale;
            x /= i.p;
            y /= i.p;
            scale *= i.p;
        }
        Elem(out as u16)
    }

    pub fn neg(&self, a: Elem) -> Elem {
        let i = &*self.0;
        if i.p == 2 {
            return a;
        }
        if i.w == 1 {
            return Elem(((i.p - a.0 as u32) % i.p) as u16);
        }
        let (mut x, mut out, mut scale) = (a.0 as u32, 0u32, 1u32);
        for _ in 0..i.w {
            out += ((i.p - x % i.p) % i.p) * scale;
            x /= i.p;
            scale *= i.p;
        }
        Elem(out as u16)
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match &self.0.arith {
            Arith::Prime => Elem(((a.0 as u32 * b.0 as u32) % self.0.p) as u16),
            Arith::Tables { exp, log } => {
                if a.0 == 0 || b.0 == 0 {
                    Elem::ZERO
                } else {
                    Elem(exp[log[a.0 as usize] as usize + log[b.0 as usize] as usize])
                }
            }
        }
    }

    pub fn inv(&self, a: Elem) -> Result<Elem, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        match &self.0.arith {
            Arith::Prime => Ok(self.pow(a, (self.0.p - 2) as u64)),
            Arith::Tables { exp, log } => {
                let order = self.0.q as usize - 1;
                Ok(Elem(exp[(order - log[a.0 as usize] as usize) % order]))
            }
        }
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e`, with `0^0 = 1`.
    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `y += c * x`, elementwise. This is the inner loop of every matrix
    /// routine, so each arithmetic flavour gets its own loop.
    pub fn axpy(&self, y: &mut [Elem], c: Elem, x: &[Elem]) {
        debug_assert_eq!(y.len(), x.len());
        if c.0 == 0 {
            return;
        }
        let i = &*self.0;
        match &i.arith {
            Arith::Tables { exp, log } if i.p == 2 => {
                let lc = log[c.0 as usize] as usize;
                for (yv, xv) in y.iter_mut().zip(x) {
                    if xv.0 != 0 {
                        yv.0 ^= exp[lc + log[xv.0 as usize] as usize];
                    }
                }
            }
            Arith::Prime => {
                let p = i.p;
                let c = c.0 as u32;
                for (yv, xv) in y.iter_mut().zip(x) {
                    yv.0 = ((yv.0 as u32 + c * xv.0 as u32) % p) as u16;
                }
            }
            Arith::Tables { .. } => {
                for (yv, xv) in y.iter_mut().zip(x) {
                    *yv = self.add(*yv, self.mul(c, *xv));
                }
            }
        }
    }

    /// `x *= c`, elementwise.
    pub fn scale(&self, x: &mut [Elem], c: Elem) {
        for v in x.iter_mut() {
            *v = self.mul(*v, c);
        }
    }
}

fn prime_power(q: u32) -> Option<(u32, u32)> {
    let p = (2..=q).find(|d| q % d == 0)?;
    let (mut rest, mut w) = (q, 0);
    while rest % p == 0 {
        rest /= p;
        w += 1;
    }
    (rest == 1).then_some((p, w))
}

// Polynomials over GF(p) are coefficient vectors, constant term first,
// without trailing zeros (the zero polynomial is empty).

fn trim(mut v: Vec<u32>) -> Vec<u32> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn inv_mod(a: u32, p: u32) -> u32 {
    (1..p).find(|x| a * x % p == 1).expect("nonzero residue mod a prime")
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    while r.len() > dm {
        let top = r.len() - 1;
        let c = r[top] * lead_inv % p;
        if c != 0 {
            for (k, &mk) in m.iter().enumerate() {
                let idx = top - dm + k;
                r[idx] = (r[idx] + p - c * mk % p) % p;
            }
        }
        r = trim(r);
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    poly_rem(&trim(out), m, p)
}

/// Base-p digits of `v`, constant term first.
fn poly_from_int(mut v: u32, p: u32) -> Vec<u32> {
    let mut out = Vec::new();
    while v > 0 {
        out.push(v % p);
        v /= p;
    }
    out
}

fn poly_to_int(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    // Trial division by every monic polynomial of degree 1..=deg/2.
    for d in 1..=deg / 2 {
        let count = p.pow(d as u32);
        for low in 0..count {
            let mut g = poly_from_int(low, p);
            g.resize(d, 0);
            g.push(1);
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Smallest monic irreducible polynomial of degree w, where polynomials are
/// compared coefficient by coefficient from the leading term down.
fn smallest_irreducible(p: u32, w: u32) -> Vec<u32> {
    let count = p.pow(w);
    for low in 0..count {
        let mut f = poly_from_int(low, p);
        f.resize(w as usize, 0);
        f.push(1);
        if f[0] != 0 && is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists")
}

fn log_tables(p: u32, w: u32, modulus: &[u32]) -> (Vec<u16>, Vec<u16>) {
    let q = p.pow(w);
    let order = q - 1;
    let mut prime_factors = Vec::new();
    let mut rest = order;
    let mut d = 2;
    while d * d <= rest {
        if rest % d == 0 {
            prime_factors.push(d);
            while rest % d == 0 {
                rest /= d;
            }
        }
        d += 1;
    }
    if rest > 1 {
        prime_factors.push(rest);
    }
    let power = |g: &[u32], mut e: u32| {
        let mut base = g.to_vec();
        let mut acc = vec![1u32];
        while e > 0 {
            if e & 1 == 1 {
                acc = poly_mulmod(&acc, &base, modulus, p);
            }
            base = poly_mulmod(&base, &base, modulus, p);
            e >>= 1;
        }
        acc
    };
    let generator = (1..q)
        .map(|v| poly_from_int(v, p))
        .find(|g| prime_factors.iter().all(|f| power(g, order / f) != [1]))
        .expect("the multiplicative group is cyclic");
    let mut exp = vec![0u16; 2 * q as usize];
    let mut log = vec![0u16; q as usize];
    let mut cur = vec![1u32];
    for e in 0..order {
        let v = poly_to_int(&cur, p);
        exp[e as usize] = v as u16;
        exp[(e + order) as usize] = v as u16;
        log[v as usize] = e as u16;
        cur = poly_mulmod(&cur, &generator, modulus, p);
    }
    (exp, log)
}
