//! Arithmetic in GF(2^m) for 2 ≤ m ≤ 64, elements packed into `u64`.
//!
//! Each field uses a fixed low-weight irreducible polynomial: the trinomial
//! x^m + x^k + 1 with the smallest k when one exists, otherwise the
//! pentanomial x^m + x^a + x^b + x^c + 1 with the lexicographically smallest
//! (a, b, c). The table is fixed so hash outputs are reproducible across
//! implementations.

use crate::error::{param, Result};

/// Middle exponents of the reduction polynomial, indexed by `m - 2`.
const MIDDLE_TERMS: [&[u32]; 63] = [
    &[1],
    &[1],
    &[1],
    &[2],
    &[1],
    &[1],
    &[4, 3, 1],
    &[1],
    &[3],
    &[2],
    &[3],
    &[4, 3, 1],
    &[5],
    &[1],
    &[5, 3, 1],
    &[3],
    &[3],
    &[5, 2, 1],
    &[3],
    &[2],
    &[1],
    &[5],
    &[4, 3, 1],
    &[3],
    &[4, 3, 1],
    &[5, 2, 1],
    &[1],
    &[2],
    &[1],
    &[3],
    &[7, 3, 2],
    &[10],
    &[7],
    &[2],
    &[9],
    &[6, 4, 1],
    &[6, 5, 1],
    &[4],
    &[5, 4, 3],
    &[3],
    &[7],
    &[6, 4, 3],
    &[5],
    &[4, 3, 1],
    &[1],
    &[5],
    &[5, 3, 2],
    &[9],
    &[4, 3, 2],
    &[6, 3, 1],
    &[3],
    &[6, 2, 1],
    &[9],
    &[7],
    &[7, 4, 2],
    &[4],
    &[19],
    &[7, 4, 2],
    &[1],
    &[5, 2, 1],
    &[29],
    &[1],
    &[4, 3, 1],
];

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 64;

/// The field GF(2^m) defined by the tabulated polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gf2m {
    m: u32,
    /// Reduction polynomial without its leading x^m term.
    low: u64,
    mask: u64,
}

impl Gf2m {
    pub fn new(m: u32) -> Result<Self> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&m) {
            return Err(param(format!(
                "field degree {m} outside supported range {MIN_DEGREE}..={MAX_DEGREE}"
            )));
        }
        let low = MIDDLE_TERMS[(m - 2) as usize]
            .iter()
            .fold(1u64, |acc, &e| acc | (1u64 << e));
        let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        Ok(Gf2m { m, low, mask })
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Full modulus as a 128-bit polynomial (includes x^m).
    pub fn modulus(&self) -> u128 {
        (1u128 << self.m) | self.low as u128
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Number of field elements minus one, i.e. the multiplicative group order.
    pub fn group_order(&self) -> u64 {
        self.mask
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        a ^ b
    }

    /// Shift-and-add multiplication with interleaved reduction.
    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        let top = 1u64 << (self.m - 1);
        let mut a = a & self.mask;
        let mut b = b & self.mask;
        let mut acc = 0u64;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            let carry = a & top != 0;
            a = (a << 1) & self.mask;
            if carry {
                a ^= self.low;
            }
        }
        acc
    }

    pub fn square(&self, a: u64) -> u64 {
        self.mul(a, a)
    }

    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut result = 1u64;
        let mut b = base & self.mask;
        while exp != 0 {
            if exp & 1 == 1 {
                result = self.mul(result, b);
            }
            b = self.square(b);
            exp >>= 1;
        }
        result
    }

    /// Multiplicative inverse; `inv(0)` is defined as 0.
    pub fn inv(&self, a: u64) -> u64 {
        if a == 0 {
            return 0;
        }
        self.pow(a, self.group_order() - 1)
    }

    /// Smallest generator of the multiplicative group, searched in increasing
    /// integer order. Intended for small fields (m ≤ 32).
    pub fn primitive_element(&self) -> u64 {
        let order = self.group_order();
        let factors = prime_factors(order);
        (2..=self.mask)
            .find(|&g| factors.iter().all(|&p| self.pow(g, order / p) != 1))
            .expect("every finite field has a primitive element")
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Log/antilog tables for small fields, built around a primitive element.
#[derive(Clone, Debug)]
pub struct GfTables {
    field: Gf2m,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl GfTables {
    pub fn new(m: u32) -> Result<Self> {
        if m > 20 {
            return Err(param(format!("table-driven field limited to m <= 20, got {m}")));
        }
        let field = Gf2m::new(m)?;
        let order = field.group_order() as usize;
        let g = field.primitive_element();
        let mut exp = vec![0u32; 2 * order];
        let mut log = vec![0u32; order + 1];
        let mut x = 1u64;
        for (i, e) in exp[..order].iter_mut().enumerate() {
            *e = x as u32;
            log[x as usize] = i as u32;
            x = field.mul(x, g);
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(GfTables { field, exp, log })
    }

    pub fn field(&self) -> &Gf2m {
        &self.field
    }

    pub fn order(&self) -> usize {
        self.exp.len() / 2
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    #[inline]
    pub fn div(&self, a: u32, b: u32) -> u32 {
        assert!(b != 0, "division by zero in GF(2^m)");
        if a == 0 {
            return 0;
        }
        let n = self.order();
        self.exp[self.log[a as usize] as usize + n - self.log[b as usize] as usize]
    }

    /// g^e for the table's primitive element g.
    #[inline]
    pub fn alpha_pow(&self, e: usize) -> u32 {
        self.exp[e % self.order()]
    }

    pub fn inv(&self, a: u32) -> u32 {
        self.div(1, a)
    }

    pub fn log(&self, a: u32) -> u32 {
        self.log[a as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Polynomial arithmetic over GF(2) on u128, independent of the field code.
    fn pmod(mut a: u128, m: u128) -> u128 {
        let dm = 127 - m.leading_zeros();
        while a != 0 && 127 - a.leading_zeros() >= dm {
            a ^= m << ((127 - a.leading_zeros()) - dm);
        }
        a
    }

    fn pmulmod(a: u128, b: u128, m: u128) -> u128 {
        let mut acc = 0u128;
        let mut a = pmod(a, m);
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            a = pmod(a << 1, m);
            b >>= 1;
        }
        acc
    }

    fn pgcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            let r = pmod(a, b);
            a = b;
            b = r;
        }
        a
    }

    /// x^(2^k) mod f.
    fn frob(k: u32, f: u128) -> u128 {
        let mut x = 2u128;
        for _ in 0..k {
            x = pmulmod(x, x, f);
        }
        x
    }

    /// Rabin's irreducibility test.
    fn irreducible(f: u128, m: u32) -> bool {
        if frob(m, f) != 2 {
            return false;
        }
        let mut primes = Vec::new();
        let mut n = m;
        let mut p = 2;
        while n > 1 {
            if n.is_multiple_of(p) {
                primes.push(p);
                while n.is_multiple_of(p) {
                    n /= p;
                }
            }
            p += 1;
        }
        primes.iter().all(|&p| pgcd(f, frob(m / p, f) ^ 2) == 1)
    }

    #[test]
    fn every_tabulated_polynomial_is_irreducible() {
        for m in MIN_DEGREE..=MAX_DEGREE {
            let f = Gf2m::new(m).unwrap();
            assert!(irreducible(f.modulus(), m), "x^{m} polynomial reducible");
        }
    }

    #[test]
    fn multiplication_matches_polynomial_reference() {
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        for m in [2, 5, 8, 13, 31, 34, 48, 63, 64] {
            let f = Gf2m::new(m).unwrap();
            for _ in 0..200 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = state & f.mask();
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = state & f.mask();
                assert_eq!(f.mul(a, b) as u128, pmulmod(a as u128, b as u128, f.modulus()));
            }
        }
    }

    #[test]
    fn inverse_and_primitive_element() {
        for m in 2..=12 {
            let f = Gf2m::new(m).unwrap();
            for a in 1..=f.mask().min(300) {
                assert_eq!(f.mul(a, f.inv(a)), 1);
            }
            let g = f.primitive_element();
            let mut seen = std::collections::HashSet::new();
            let mut x = 1;
            for _ in 0..f.group_order() {
                assert!(seen.insert(x));
                x = f.mul(x, g);
            }
        }
    }

    #[test]
    fn tables_agree_with_direct_arithmetic() {
        let t = GfTables::new(7).unwrap();
        let f = *t.field();
        for a in 0..128u32 {
            for b in 0..128u32 {
                assert_eq!(t.mul(a, b) as u64, f.mul(a as u64, b as u64));
                if b != 0 {
                    assert_eq!(t.mul(t.div(a, b), b), a);
                }
            }
        }
    }

    #[test]
    fn rejects_unsupported_degree() {
        assert!(Gf2m::new(1).is_err());
        assert!(Gf2m::new(65).is_err());
    }
}
