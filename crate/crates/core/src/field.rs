//! Finite fields GF(q) for prime powers q, and the pairwise independent family
//! f_j(x1, x2) = x1 + j * x2.

use crate::error::{Error, Result};

/// Irreducible polynomials over GF(2) for GF(2^m), indexed by m, bit k
/// holding the coefficient of x^k.
pub const BINARY_POLYNOMIALS: [u32; 13] =
    [0, 0b11, 0b111, 0b1011, 0x13, 0x25, 0x43, 0x83, 0x11b, 0x211, 0x409, 0x805, 0x1053];

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime >= n (n >= 2); always below 2n.
pub fn next_prime_in(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

/// Largest field order supported for extension fields.
pub const MAX_EXTENSION_ORDER: u64 = 4096;

/// Field elements are integers in 0..order. For extension fields the base-p
/// digits of an element are polynomial coefficients, lowest degree first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Prime(u64),
    /// GF(2^m), bits of `poly` are the modulus coefficients.
    Binary {
        m: u32,
        poly: u32,
    },
    /// GF(p^m) for odd p, `poly` the base-p code of a monic irreducible modulus.
    OddExtension {
        p: u64,
        m: u32,
        poly: u64,
    },
}

fn to_digits(mut x: u64, p: u64, len: usize) -> Vec<u64> {
    let mut d = vec![0; len];
    for slot in d.iter_mut() {
        *slot = x % p;
        x /= p;
    }
    d
}

fn from_base(d: &[u64], p: u64) -> u64 {
    d.iter().rev().fold(0, |acc, &x| acc * p + x)
}

/// Remainder of `a` modulo the monic polynomial `m` over GF(p), coefficient
/// vectors lowest degree first.
fn poly_rem(mut a: Vec<u64>, m: &[u64], p: u64) -> Vec<u64> {
    let dm = m.len() - 1;
    while a.len() > dm {
        let lead = *a.last().unwrap() % p;
        let shift = a.len() - 1 - dm;
        if lead != 0 {
            for (k, &c) in m.iter().enumerate() {
                a[shift + k] = (a[shift + k] + p * p - lead * c % p) % p;
            }
        }
        a.pop();
    }
    a
}

/// Lexicographically first monic irreducible polynomial of degree m over
/// GF(p), by trial division.
fn first_irreducible(p: u64, m: u32) -> u64 {
    let lead = p.pow(m);
    'cand: for low in 0..lead {
        let mut poly = to_digits(low, p, m as usize);
        poly.push(1);
        for d in 1..=(m as usize / 2) {
            for dl in 0..p.pow(d as u32) {
                let mut div = to_digits(dl, p, d);
                div.push(1);
                if poly_rem(poly.clone(), &div, p).iter().all(|&c| c == 0) {
                    continue 'cand;
                }
            }
        }
        return lead + low;
    }
    unreachable!("irreducible polynomials exist in every degree")
}

fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while q % p != 0 {
        p += 1;
    }
    let (mut r, mut m) = (q, 0);
    while r % p == 0 {
        r /= p;
        m += 1;
    }
    (r == 1).then_some((p, m))
}

impl Field {
    /// GF(q) for q prime, q = 2^m with m <= 12, or q = p^m <= 4096 for odd p.
    pub fn new(q: u64) -> Result<Self> {
        if is_prime(q) {
            return Ok(Field::Prime(q));
        }
        if q.is_power_of_two() && q >= 2 {
            let m = q.trailing_zeros();
            if m <= 12 {
                return Ok(Field::Binary { m, poly: BINARY_POLYNOMIALS[m as usize] });
            }
            return Err(Error::UnsupportedField(q));
        }
        match prime_power(q) {
            Some((p, m)) if q <= MAX_EXTENSION_ORDER => Ok(Field::OddExtension { p, m, poly: first_irreducible(p, m) }),
            _ => Err(Error::UnsupportedField(q)),
        }
    }

    pub fn order(&self) -> u64 {
        match *self {
            Field::Prime(p) => p,
            Field::Binary { m, .. } => 1u64 << m,
            Field::OddExtension { p, m, .. } => p.pow(m),
        }
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        match *self {
            Field::Prime(p) => (a + b) % p,
            Field::Binary { .. } => a ^ b,
            Field::OddExtension { p, m, .. } => {
                let (x, y) = (to_digits(a, p, m as usize), to_digits(b, p, m as usize));
                let s: Vec<u64> = x.iter().zip(&y).map(|(u, v)| (u + v) % p).collect();
                from_base(&s, p)
            }
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        match *self {
            Field::Prime(p) => (p - a % p) % p,
            Field::Binary { .. } => a,
            Field::OddExtension { p, m, .. } => {
                let x = to_digits(a, p, m as usize);
                let s: Vec<u64> = x.iter().map(|u| (p - u) % p).collect();
                from_base(&s, p)
            }
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        match *self {
            Field::Prime(p) => (a * b) % p,
            Field::Binary { m, poly } => {
                let (mut a, mut b) = (a, b);
                let mut r = 0u64;
                let top = 1u64 << m;
                while b != 0 {
                    if b & 1 == 1 {
                        r ^= a;
                    }
                    b >>= 1;
                    a <<= 1;
                    if a & top != 0 {
                        a ^= poly as u64;
                    }
                }
                r
            }
            Field::OddExtension { p, m, poly } => {
                let (x, y) = (to_digits(a, p, m as usize), to_digits(b, p, m as usize));
                let mut prod = vec![0u64; 2 * m as usize - 1];
                for (i, &u) in x.iter().enumerate() {
                    for (j, &v) in y.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + u * v) % p;
                    }
                }
                let modulus = to_digits(poly, p, m as usize + 1);
                let mut r = poly_rem(prod, &modulus, p);
                r.resize(m as usize, 0);
                from_base(&r, p)
            }
        }
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via a^(q-2).
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.order() - 2))
        }
    }
}

/// The family {f_j : j in GF(q)} with f_j(x1, x2) = x1 + j x2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairwiseFamily {
    field: Field,
}

impl PairwiseFamily {
    pub fn field(&self) -> Field {
        self.field
    }

    pub fn size(&self) -> u64 {
        self.field.order()
    }

    pub fn eval(&self, j: u64, x1: u64, x2: u64) -> u64 {
        self.field.add(x1, self.field.mul(j, x2))
    }

    /// For j != k, checks that (x1, x2) -> (f_j, f_k) is a bijection.
    pub fn is_jointly_bijective(&self, j: u64, k: u64) -> bool {
        let q = self.size() as usize;
        let mut seen = vec![false; q * q];
        for x1 in 0..q as u64 {
            for x2 in 0..q as u64 {
                let idx = self.eval(j, x1, x2) as usize * q + self.eval(k, x1, x2) as usize;
                if seen[idx] {
                    return false;
                }
                seen[idx] = true;
            }
        }
        true
    }

    /// Exhaustive pairwise-independence check over all member pairs.
    pub fn is_pairwise_independent(&self) -> bool {
        let q = self.size();
        (0..q).all(|j| (0..q).filter(|&k| k != j).all(|k| self.is_jointly_bijective(j, k)))
    }
}

pub fn pairwise_family(q: u64) -> Result<PairwiseFamily> {
    Ok(PairwiseFamily { field: Field::new(q)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Polynomial remainder over GF(2).
    fn poly_mod(mut a: u64, b: u64) -> u64 {
        let db = 63 - b.leading_zeros();
        while a != 0 && 63 - a.leading_zeros() >= db {
            a ^= b << (63 - a.leading_zeros() - db);
        }
        a
    }

    #[test]
    fn polynomials_are_irreducible() {
        for m in 1..=12u32 {
            let p = BINARY_POLYNOMIALS[m as usize] as u64;
            assert_eq!(63 - p.leading_zeros(), m);
            for d in 2u64..(1 << (m / 2 + 1)) {
                if 63 - d.leading_zeros() < 1 || 63 - d.leading_zeros() > m / 2 {
                    continue;
                }
                assert_ne!(poly_mod(p, d), 0, "x-polynomial {d:b} divides {p:b}");
            }
        }
    }

    #[test]
    fn primes() {
        assert_eq!(next_prime_in(4), 5);
        assert_eq!(next_prime_in(16), 17);
        assert_eq!(next_prime_in(9), 11);
        for n in 2..2000u64 {
            assert!(next_prime_in(n) < 2 * n);
        }
        assert!(!is_prime(1) && is_prime(2) && !is_prime(91) && is_prime(97));
    }

    #[test]
    fn field_axioms_small() {
        for q in [2u64, 3, 4, 5, 8, 9, 16, 25, 27, 64] {
            let f = Field::new(q).unwrap();
            for a in 0..q {
                assert_eq!(f.add(a, f.neg(a)), 0);
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..q {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q.min(8) {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
        assert!(Field::new(6).is_err());
        assert!(Field::new(1 << 13).is_err());
        assert!(Field::new(3u64.pow(8)).is_err());
    }

    #[test]
    fn gf4_multiplication_table() {
        // x^2 + x + 1: with a = x (2), a^2 = x + 1 (3)
        let f = Field::new(4).unwrap();
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.mul(2, 3), 1);
        assert_eq!(f.mul(3, 3), 2);
    }

    #[test]
    fn gf9_uses_x2_plus_1() {
        // i = x satisfies i^2 = -1 = 2
        let f = Field::new(9).unwrap();
        assert_eq!(f, Field::OddExtension { p: 3, m: 2, poly: 10 });
        assert_eq!(f.mul(3, 3), 2);
        for a in 1..9 {
            assert_eq!(f.pow(a, 8), 1);
        }
    }

    #[test]
    fn family_examples() {
        let f2 = pairwise_family(2).unwrap();
        assert_eq!(f2.eval(0, 1, 1), 1);
        assert_eq!(f2.eval(1, 1, 1), 0);
        assert!(f2.is_jointly_bijective(0, 1));
        for q in [2u64, 3, 4, 8, 9, 16] {
            assert!(pairwise_family(q).unwrap().is_pairwise_independent(), "q = {q}");
        }
        assert!(pairwise_family(6).is_err());
    }
}
