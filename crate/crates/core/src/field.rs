//! Finite fields F_q = F_{p^r} with eagerly built discrete-log tables.
//!
//! Elements are encoded as `u64` values: the coefficient vector
//! (c_0, ..., c_{r-1}) of a residue modulo the defining polynomial packs into
//! Σ c_i p^i (little-endian). Every integer in `[0, q)` is a valid encoding.
//!
//! Construction is deterministic: the defining polynomial is the monic
//! irreducible of degree r whose coefficient tuple is smallest when read from
//! the highest degree down, and the generator is the element of full
//! multiplicative order with the smallest encoding. Multiplication and
//! inversion go through the log/pow tables, so construction is O(q) time and
//! memory; `FieldDescriptor::make` refuses fields larger than the cap
//! (default 10^6) rather than silently degrade.

use crate::error::{Error, Result};

/// Encoded field element (see module docs for the packing).
pub type Elem = u64;

/// Default ceiling on q for eager table construction.
pub const DEFAULT_TABLE_CAP: u64 = 1_000_000;

const LOG_ZERO: u32 = u32::MAX;

/// A concrete F_{p^r} with its defining data and dlog tables.
#[derive(Debug, Clone)]
pub struct FieldDescriptor {
    p: u64,
    r: u32,
    q: u64,
    /// Monic defining polynomial, length r+1, coefficients in [0, p), low to high.
    modulus: Vec<u64>,
    generator: Elem,
    /// log[x] = k with generator^k = x; log[0] is a sentinel.
    log: Vec<u32>,
    /// pow[k] = generator^k for k in [0, q-1).
    pow: Vec<Elem>,
}

/// A multiplicative character of order d on F_q*, χ(x) = ζ_d^{e(x)} with
/// e(x) = dlog(x) mod d. Exists iff d | q - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharacterDescriptor {
    pub q: u64,
    pub d: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3;
    while f * f <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// ---- bootstrap polynomial arithmetic over F_p (used before tables exist) ----

fn poly_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_mul_mod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&mut prod, modulus, p);
    prod
}

/// Reduce `a` modulo the monic polynomial `m` in place.
fn poly_rem(a: &mut Vec<u64>, m: &[u64], p: u64) {
    let deg_m = m.len() - 1;
    while a.len() > deg_m {
        let lead = *a.last().unwrap();
        let k = a.len() - 1;
        if lead != 0 {
            for (j, &c) in m.iter().enumerate().take(deg_m) {
                let idx = k - deg_m + j;
                a[idx] = (a[idx] + (p - c % p) % p * lead) % p;
            }
        }
        a.pop();
    }
    poly_trim(a);
}

fn poly_pow_mod(base: &[u64], mut e: u64, modulus: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut b = base.to_vec();
    poly_rem(&mut b, modulus, p);
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul_mod(&result, &b, modulus, p);
        }
        b = poly_mul_mod(&b, &b, modulus, p);
        e >>= 1;
    }
    result
}

fn poly_gcd(mut a: Vec<u64>, mut b: Vec<u64>, p: u64) -> Vec<u64> {
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        // make b monic, then a mod b
        let lead = *b.last().unwrap();
        let inv = mod_inverse(lead, p);
        let monic: Vec<u64> = b.iter().map(|&c| c * inv % p).collect();
        poly_rem(&mut a, &monic, p);
        std::mem::swap(&mut a, &mut b);
        poly_trim(&mut b);
    }
    a
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // p is prime here, Fermat inversion
    mod_pow(a % p, p - 2, p)
}

/// Canonical defining polynomial of F_{p^r} (shared with the p-adic side,
/// which lifts it coefficient-wise). Validates p prime and r ≥ 1 but does not
/// build tables, so there is no size cap.
pub(crate) fn canonical_modulus(p: u64, r: u32) -> crate::error::Result<Vec<u64>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if r == 0 {
        return Err(Error::ZeroExtensionDegree);
    }
    Ok(FieldDescriptor::smallest_irreducible(p, r))
}

/// Inverse of `a` modulo the monic irreducible `m` over F_p, via extended
/// Euclid on polynomials. Returns None for a ≡ 0. Output is padded to deg m.
pub(crate) fn poly_inverse_mod(a: &[u64], m: &[u64], p: u64) -> Option<Vec<u64>> {
    let mut a = a.to_vec();
    poly_trim(&mut a);
    if a.is_empty() {
        return None;
    }
    // invariants: old_r = old_t * a (mod m), r = t * a (mod m)
    let mut old_r = m.to_vec();
    let mut r = a;
    let mut old_t: Vec<u64> = vec![];
    let mut t: Vec<u64> = vec![1];
    while !r.is_empty() {
        // quotient of old_r by r
        let (quo, rem) = poly_divmod(&old_r, &r, p);
        old_r = r;
        r = rem;
        let qt = poly_mul_plain(&quo, &t, p);
        let new_t = poly_sub(&old_t, &qt, p);
        old_t = t;
        t = new_t;
    }
    // old_r is the gcd; for irreducible m and a ≠ 0 it is a nonzero constant
    debug_assert_eq!(old_r.len(), 1);
    let scale = mod_inverse(old_r[0], p);
    let mut inv: Vec<u64> = old_t.iter().map(|&c| c * scale % p).collect();
    let mut reduced = inv.clone();
    poly_rem(&mut reduced, m, p);
    inv = reduced;
    inv.resize(m.len() - 1, 0);
    Some(inv)
}

fn poly_divmod(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let mut rem = a.to_vec();
    poly_trim(&mut rem);
    let db = b.len() - 1;
    let lead_inv = mod_inverse(b[db], p);
    if rem.len() <= db {
        return (vec![], rem);
    }
    let mut quo = vec![0u64; rem.len() - db];
    while rem.len() > db {
        let k = rem.len() - 1;
        let c = rem[k] * lead_inv % p;
        quo[k - db] = c;
        if c != 0 {
            for (j, &bc) in b.iter().enumerate() {
                let idx = k - db + j;
                rem[idx] = (rem[idx] + (p - bc * c % p)) % p;
            }
        }
        rem.pop();
        poly_trim(&mut rem);
        if rem.is_empty() {
            break;
        }
    }
    (quo, rem)
}

fn poly_mul_plain(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

fn poly_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] = x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] = (out[i] + p - y) % p;
    }
    poly_trim(&mut out);
    out
}

fn mod_pow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Rabin irreducibility test for a monic polynomial of degree r over F_p.
fn is_irreducible(m: &[u64], p: u64, r: u32) -> bool {
    let x = vec![0u64, 1];
    // x^{p^r} == x mod m
    let mut t = x.clone();
    for _ in 0..r {
        t = poly_pow_mod(&t, p, m, p);
    }
    let mut lhs = t;
    // subtract x
    if lhs.len() < 2 {
        lhs.resize(2, 0);
    }
    lhs[1] = (lhs[1] + p - 1) % p;
    poly_trim(&mut lhs);
    if !lhs.is_empty() {
        return false;
    }
    for l in prime_factors(r as u64) {
        let k = r as u64 / l;
        let mut t = x.clone();
        for _ in 0..k {
            t = poly_pow_mod(&t, p, m, p);
        }
        // gcd(t - x, m) must be 1
        let mut diff = t;
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] = (diff[1] + p - 1) % p;
        poly_trim(&mut diff);
        let g = poly_gcd(m.to_vec(), diff, p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

impl FieldDescriptor {
    pub fn make(p: u64, r: u32) -> Result<FieldDescriptor> {
        Self::make_with_cap(p, r, DEFAULT_TABLE_CAP)
    }

    pub fn make_with_cap(p: u64, r: u32, cap: u64) -> Result<FieldDescriptor> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if r == 0 {
            return Err(Error::ZeroExtensionDegree);
        }
        let mut q: u64 = 1;
        for _ in 0..r {
            q = q.checked_mul(p).filter(|&v| v <= cap).ok_or(
                Error::TableCapExceeded {
                    q: 0, // exact q overflows or exceeds cap; report the cap breach
                    cap,
                },
            )?;
        }
        if q > cap {
            return Err(Error::TableCapExceeded { q, cap });
        }

        let modulus = Self::smallest_irreducible(p, r);
        let mut field = FieldDescriptor {
            p,
            r,
            q,
            modulus,
            generator: 0,
            log: Vec::new(),
            pow: Vec::new(),
        };
        field.generator = field.find_generator();
        field.build_tables();
        Ok(field)
    }

    /// Monic irreducible of degree r whose coefficient tuple, read from the
    /// x^{r-1} coefficient down to the constant, is lexicographically smallest.
    /// Equivalently: smallest polynomial when its digits are read as a
    /// big-endian base-p number.
    fn smallest_irreducible(p: u64, r: u32) -> Vec<u64> {
        if r == 1 {
            // x itself: F_p with elements as constants
            return vec![0, 1];
        }
        let count = p.pow(r); // enumerates the r lower coefficients
        for code in 0..count {
            // the constant coefficient varies fastest, so increasing `code`
            // walks tuples (c_{r-1}, ..., c_0) in lexicographic order
            let mut be = vec![0u64; r as usize + 1];
            be[r as usize] = 1;
            let mut c = code;
            for digit in be.iter_mut().take(r as usize) {
                *digit = c % p;
                c /= p;
            }
            if is_irreducible(&be, p, r) {
                return be;
            }
        }
        unreachable!("an irreducible polynomial of every degree exists over F_p")
    }

    fn decode(&self, x: Elem) -> Vec<u64> {
        let mut digits = vec![0u64; self.r as usize];
        let mut v = x;
        for d in digits.iter_mut() {
            *d = v % self.p;
            v /= self.p;
        }
        digits
    }

    fn encode(&self, digits: &[u64]) -> Elem {
        let mut v = 0u64;
        for &d in digits.iter().rev() {
            v = v * self.p + d;
        }
        v
    }

    fn raw_mul(&self, a: Elem, b: Elem) -> Elem {
        let da = self.decode(a);
        let db = self.decode(b);
        let mut prod = poly_mul_mod(&da, &db, &self.modulus, self.p);
        prod.resize(self.r as usize, 0);
        self.encode(&prod)
    }

    fn raw_pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut acc = 1;
        let mut base = a;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.raw_mul(acc, base);
            }
            base = self.raw_mul(base, base);
            e >>= 1;
        }
        acc
    }

    fn find_generator(&self) -> Elem {
        let order = self.q - 1;
        let factors = prime_factors(order);
        'cand: for v in 2..self.q {
            for &l in &factors {
                if self.raw_pow(v, order / l) == 1 {
                    continue 'cand;
                }
            }
            return v;
        }
        // q = 2 leaves only v = 1
        1
    }

    fn build_tables(&mut self) {
        let order = (self.q - 1) as usize;
        self.pow = vec![0; order];
        self.log = vec![LOG_ZERO; self.q as usize];
        let mut acc: Elem = 1;
        for k in 0..order {
            self.pow[k] = acc;
            self.log[acc as usize] = k as u32;
            acc = self.raw_mul(acc, self.generator);
        }
        debug_assert_eq!(acc, 1, "generator order must be q - 1");
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn r(&self) -> u32 {
        self.r
    }
    pub fn q(&self) -> u64 {
        self.q
    }
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
    pub fn generator(&self) -> Elem {
        self.generator
    }

    pub fn zero(&self) -> Elem {
        0
    }
    pub fn one(&self) -> Elem {
        1
    }

    /// Iterate all q element encodings.
    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.q
    }

    fn check(&self, x: Elem) -> Result<()> {
        if x < self.q {
            Ok(())
        } else {
            Err(Error::NotAFieldElement(x))
        }
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.r == 1 {
            return (a + b) % self.p;
        }
        let da = self.decode(a);
        let db = self.decode(b);
        let sum: Vec<u64> = da
            .iter()
            .zip(&db)
            .map(|(&x, &y)| (x + y) % self.p)
            .collect();
        self.encode(&sum)
    }

    pub fn neg(&self, a: Elem) -> Elem {
        if self.r == 1 {
            return (self.p - a) % self.p;
        }
        let da = self.decode(a);
        let neg: Vec<u64> = da.iter().map(|&x| (self.p - x) % self.p).collect();
        self.encode(&neg)
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a == 0 || b == 0 {
            return 0;
        }
        let la = self.log[a as usize] as u64;
        let lb = self.log[b as usize] as u64;
        self.pow[((la + lb) % (self.q - 1)) as usize]
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        self.check(a)?;
        if a == 0 {
            return Err(Error::DlogOfZero);
        }
        let la = self.log[a as usize] as u64;
        Ok(self.pow[((self.q - 1 - la) % (self.q - 1)) as usize])
    }

    pub fn pow_elem(&self, a: Elem, e: u64) -> Elem {
        if a == 0 {
            return if e == 0 { 1 } else { 0 };
        }
        let la = self.log[a as usize] as u128;
        let k = (la * e as u128 % (self.q - 1) as u128) as usize;
        self.pow[k]
    }

    /// Discrete log base the canonical generator. Errors on zero.
    pub fn dlog(&self, x: Elem) -> Result<u64> {
        self.check(x)?;
        if x == 0 {
            return Err(Error::DlogOfZero);
        }
        Ok(self.log[x as usize] as u64)
    }

    /// Embed an integer residue as the constant element c mod p.
    pub fn from_residue(&self, c: u64) -> Elem {
        c % self.p
    }

    pub fn character(&self, d: u64) -> Result<CharacterDescriptor> {
        if d == 0 || !(self.q - 1).is_multiple_of(d) {
            return Err(Error::CharacterOrderInvalid {
                d,
                qm1: self.q - 1,
            });
        }
        Ok(CharacterDescriptor { q: self.q, d })
    }

    /// Exponent e(x) in [0, d) with χ(x) = ζ_d^{e(x)} for the canonical order-d
    /// character χ = (Teichmüller lift)^{(q-1)/d}. Requires d | q - 1, x ≠ 0.
    pub fn char_exponent(&self, chi: CharacterDescriptor, x: Elem) -> Result<u64> {
        if chi.q != self.q {
            return Err(Error::RingMismatch);
        }
        Ok(self.dlog(x)? % chi.d)
    }
}
