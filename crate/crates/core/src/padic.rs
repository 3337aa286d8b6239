//! Fixed-precision arithmetic in the unramified extension Z_q of Z_p.
//!
//! A ring [`ZqRing`] fixes (p, r, N) once: Z_q = Z_p[x]/(m(x)) where m is the
//! trivial lift (coefficients in [0, p)) of the canonical defining polynomial
//! of F_{p^r}, and every coefficient is stored as a residue in [0, p^N).
//! Precision is a property of the ring, not of individual elements; mixing
//! elements across rings is a caller bug and is rejected (the high-level
//! entry points return [`Error::RingMismatch`], the low-level arithmetic
//! asserts).
//!
//! An element with true valuation ≥ N is indistinguishable from zero here;
//! [`ZqRing::valuation`] therefore saturates at N. Lowering precision is the
//! only supported conversion ([`ZqRing::truncate_from`]), and results computed
//! at higher N truncate to the results computed at lower N (tested property).

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, Integer, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::field;

/// Element of Z_q at the precision of its ring: r coordinates in [0, p^N).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZqElement {
    coords: Vec<BigUint>,
    stamp: RingStamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RingStamp {
    p: u64,
    r: u32,
    precision: u32,
}

#[derive(Debug, Clone)]
pub struct ZqRing {
    p: u64,
    r: u32,
    precision: u32,
    /// Lifted defining polynomial, monic of degree r, coefficients in [0, p).
    modulus: Vec<u64>,
    pn: BigUint,
    big_p: BigUint,
}

pub type ZqMatrix = Vec<Vec<ZqElement>>;

impl ZqRing {
    pub fn new(p: u64, r: u32, precision: u32) -> Result<ZqRing> {
        if precision == 0 {
            return Err(Error::PrecisionInsufficient {
                have: 0,
                need: "at least one p-adic digit".into(),
            });
        }
        // reuse the field-side canonical modulus (validates p prime, r >= 1)
        let modulus = field::canonical_modulus(p, r)?;
        let big_p = BigUint::from(p);
        let pn = big_p.pow(precision);
        Ok(ZqRing {
            p,
            r,
            precision,
            modulus,
            pn,
            big_p,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn r(&self) -> u32 {
        self.r
    }
    pub fn precision(&self) -> u32 {
        self.precision
    }
    pub fn q(&self) -> u64 {
        self.p.pow(self.r)
    }
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
    /// p^N as a big integer.
    pub fn pn(&self) -> &BigUint {
        &self.pn
    }

    fn stamp(&self) -> RingStamp {
        RingStamp {
            p: self.p,
            r: self.r,
            precision: self.precision,
        }
    }

    pub fn owns(&self, x: &ZqElement) -> bool {
        x.stamp == self.stamp()
    }

    fn claim(&self, x: &ZqElement) {
        assert!(
            self.owns(x),
            "element of Z_{}^({}) at precision {} used in ring ({}, {}, {})",
            x.stamp.p,
            x.stamp.r,
            x.stamp.precision,
            self.p,
            self.r,
            self.precision
        );
    }

    pub fn ensure_owned(&self, x: &ZqElement) -> Result<()> {
        if self.owns(x) {
            Ok(())
        } else {
            Err(Error::RingMismatch)
        }
    }

    fn wrap(&self, coords: Vec<BigUint>) -> ZqElement {
        debug_assert_eq!(coords.len(), self.r as usize);
        ZqElement {
            coords,
            stamp: self.stamp(),
        }
    }

    pub fn zero(&self) -> ZqElement {
        self.wrap(vec![BigUint::zero(); self.r as usize])
    }

    pub fn one(&self) -> ZqElement {
        self.from_u64(1)
    }

    pub fn from_u64(&self, c: u64) -> ZqElement {
        let mut coords = vec![BigUint::zero(); self.r as usize];
        coords[0] = BigUint::from(c) % &self.pn;
        self.wrap(coords)
    }

    pub fn from_bigint(&self, c: &BigInt) -> ZqElement {
        let mut coords = vec![BigUint::zero(); self.r as usize];
        coords[0] = self.reduce_int(c);
        self.wrap(coords)
    }

    fn reduce_int(&self, c: &BigInt) -> BigUint {
        let pn = BigInt::from(self.pn.clone());
        let mut v = c % &pn;
        if v.sign() == Sign::Minus {
            v += &pn;
        }
        v.to_biguint().expect("non-negative after reduction")
    }

    pub fn is_zero(&self, x: &ZqElement) -> bool {
        self.claim(x);
        x.coords.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        self.claim(a);
        self.claim(b);
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .map(|(x, y)| {
                let s = x + y;
                if s >= self.pn {
                    s - &self.pn
                } else {
                    s
                }
            })
            .collect();
        self.wrap(coords)
    }

    pub fn neg(&self, a: &ZqElement) -> ZqElement {
        self.claim(a);
        let coords = a
            .coords
            .iter()
            .map(|x| {
                if x.is_zero() {
                    BigUint::zero()
                } else {
                    &self.pn - x
                }
            })
            .collect();
        self.wrap(coords)
    }

    pub fn sub(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        self.claim(a);
        self.claim(b);
        let r = self.r as usize;
        if r == 1 {
            return self.wrap(vec![&a.coords[0] * &b.coords[0] % &self.pn]);
        }
        let mut prod = vec![BigUint::zero(); 2 * r - 1];
        for (i, x) in a.coords.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coords.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                prod[i + j] += x * y;
            }
        }
        // reduce modulo the monic lifted modulus, then mod p^N
        for k in (r..2 * r - 1).rev() {
            let lead = std::mem::replace(&mut prod[k], BigUint::zero());
            if lead.is_zero() {
                continue;
            }
            for (j, &mc) in self.modulus.iter().enumerate().take(r) {
                if mc == 0 {
                    continue;
                }
                // prod[k - r + j] -= lead * mc  (mod p^N later; keep non-negative)
                let sub = &lead * BigUint::from(mc);
                let idx = k - r + j;
                let cur = &prod[idx] % &self.pn;
                let sub = sub % &self.pn;
                prod[idx] = if cur >= sub {
                    cur - sub
                } else {
                    cur + &self.pn - sub
                };
            }
        }
        let coords = prod
            .into_iter()
            .take(r)
            .map(|c| c % &self.pn)
            .collect::<Vec<_>>();
        self.wrap(coords)
    }

    pub fn scale_u64(&self, a: &ZqElement, c: u64) -> ZqElement {
        self.claim(a);
        let big = BigUint::from(c) % &self.pn;
        let coords = a.coords.iter().map(|x| x * &big % &self.pn).collect();
        self.wrap(coords)
    }

    pub fn scale_int(&self, a: &ZqElement, c: &BigInt) -> ZqElement {
        self.claim(a);
        let big = self.reduce_int(c);
        let coords = a.coords.iter().map(|x| x * &big % &self.pn).collect();
        self.wrap(coords)
    }

    pub fn pow(&self, a: &ZqElement, mut e: u64) -> ZqElement {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Minimum p-adic valuation over the coordinates, saturating at N for 0.
    pub fn valuation(&self, x: &ZqElement) -> u32 {
        self.claim(x);
        let mut best = self.precision;
        for c in &x.coords {
            if c.is_zero() {
                continue;
            }
            let mut v = 0u32;
            let mut rest = c.clone();
            while (&rest % &self.big_p).is_zero() {
                rest /= &self.big_p;
                v += 1;
            }
            best = best.min(v);
            if best == 0 {
                break;
            }
        }
        best
    }

    /// Multiply by p^k (drops information into higher digits as usual).
    pub fn mul_pow_p(&self, x: &ZqElement, k: u32) -> ZqElement {
        self.claim(x);
        let f = self.big_p.pow(k);
        let coords = x.coords.iter().map(|c| c * &f % &self.pn).collect();
        self.wrap(coords)
    }

    /// Divide by p^k when every coordinate is exactly divisible. The result is
    /// only trustworthy modulo p^{N-k}; callers are expected to truncate into
    /// a ring of precision ≤ N - k right away (see [`ZqRing::truncate_from`]).
    pub fn exact_div_pow_p(&self, x: &ZqElement, k: u32) -> Result<ZqElement> {
        self.claim(x);
        if k == 0 {
            return Ok(x.clone());
        }
        let f = self.big_p.pow(k);
        let mut coords = Vec::with_capacity(x.coords.len());
        for c in &x.coords {
            let (quo, rem) = c.div_rem(&f);
            if !rem.is_zero() {
                return Err(Error::NonIntegralSeries(format!(
                    "coordinate not divisible by {}^{}",
                    self.p, k
                )));
            }
            coords.push(quo);
        }
        Ok(self.wrap(coords))
    }

    /// Map an element of a higher-precision ring with the same (p, r) into
    /// this ring by truncating every coordinate mod p^N.
    pub fn truncate_from(&self, x: &ZqElement) -> Result<ZqElement> {
        if x.stamp.p != self.p || x.stamp.r != self.r || x.stamp.precision < self.precision {
            return Err(Error::RingMismatch);
        }
        let coords = x.coords.iter().map(|c| c % &self.pn).collect();
        Ok(self.wrap(coords))
    }

    /// Map an element of a lower-precision ring with the same (p, r) into
    /// this ring, keeping the coordinate representatives. The result is a
    /// lift: it agrees with the source only modulo the source precision, so
    /// it is useful when a subsequent multiplication by a power of p restores
    /// genuine precision (x known mod p^M gives x·p^k known mod p^{M+k}).
    pub fn lift_from(&self, x: &ZqElement) -> Result<ZqElement> {
        if x.stamp.p != self.p || x.stamp.r != self.r || x.stamp.precision > self.precision {
            return Err(Error::RingMismatch);
        }
        Ok(self.wrap(x.coords.clone()))
    }

    /// Embed num/den into Z_p ⊂ Z_q; errors when p divides den.
    pub fn embed_rational(&self, num: &BigInt, den: &BigInt) -> Result<ZqElement> {
        if den.is_zero() {
            return Err(Error::DenominatorNotInvertible("0".into()));
        }
        let pn = BigInt::from(self.pn.clone());
        let den_red = {
            let mut v = den % &pn;
            if v.sign() == Sign::Minus {
                v += &pn;
            }
            v
        };
        let inv = modinv_bigint(&den_red, &pn).ok_or_else(|| {
            Error::DenominatorNotInvertible(den.to_string())
        })?;
        let val = (num * inv) % &pn;
        Ok(self.from_bigint(&val))
    }

    pub fn embed_ratio(&self, x: &BigRational) -> Result<ZqElement> {
        self.embed_rational(x.numer(), x.denom())
    }

    /// Inverse of a unit. Errors with the determinant-style valuation message
    /// when the element is not a unit.
    pub fn inv(&self, a: &ZqElement) -> Result<ZqElement> {
        self.claim(a);
        let v = self.valuation(a);
        if v != 0 {
            return Err(Error::NonUnitDeterminant(v));
        }
        // seed: inverse of the residue in F_q, then Hensel-lift doubling
        let res: Vec<u64> = a
            .coords
            .iter()
            .map(|c| (c % &self.big_p).to_u64_digits().first().copied().unwrap_or(0))
            .collect();
        let seed = field::poly_inverse_mod(&res, &self.modulus, self.p)
            .expect("unit residue is invertible in F_q");
        let mut x = {
            let mut coords = vec![BigUint::zero(); self.r as usize];
            for (i, &c) in seed.iter().enumerate() {
                coords[i] = BigUint::from(c);
            }
            self.wrap(coords)
        };
        // x_{k+1} = x_k (2 - a x_k); precision doubles per step
        let two = self.from_u64(2);
        let mut gained = 1u32;
        while gained < self.precision {
            let t = self.sub(&two, &self.mul(a, &x));
            x = self.mul(&x, &t);
            gained *= 2;
        }
        debug_assert!(self.is_zero(&self.sub(&self.mul(a, &x), &self.one())));
        Ok(x)
    }

    /// Teichmüller lift of an F_q element (same little-endian encoding as
    /// [`field::FieldDescriptor`]): the unique ω with ω ≡ x̄ mod p, ω^q = ω.
    /// Computed by iterating t ← t^q to the fixed point.
    pub fn teichmueller(&self, x: field::Elem) -> ZqElement {
        let q = self.q();
        debug_assert!(x < q, "encoding outside F_q");
        let mut digits = Vec::with_capacity(self.r as usize);
        let mut v = x;
        for _ in 0..self.r {
            digits.push(BigUint::from(v % self.p));
            v /= self.p;
        }
        let mut t = self.wrap(digits);
        for _ in 0..=self.precision {
            let next = self.pow(&t, q);
            if next == t {
                break;
            }
            t = next;
        }
        t
    }

    /// True when all coordinates above the constant one vanish, i.e. the
    /// element lies in Z_p ⊂ Z_q.
    pub fn in_prime_subring(&self, x: &ZqElement) -> bool {
        self.claim(x);
        x.coords.iter().skip(1).all(|c| c.is_zero())
    }

    /// Balanced representative of a Z_p element as a signed integer of
    /// absolute value ≤ bound. Preconditions: p^N > 2·bound (else the residue
    /// does not pin a unique integer) and the element must lie in Z_p.
    pub fn round_to_integer(&self, x: &ZqElement, bound: &BigInt) -> Result<BigInt> {
        self.ensure_owned(x)?;
        if !self.in_prime_subring(x) {
            return Err(Error::NotInPrimeSubring);
        }
        let bound = bound.abs();
        let pn = BigInt::from(self.pn.clone());
        if pn <= BigInt::from(2u32) * &bound {
            return Err(Error::PrecisionInsufficient {
                have: self.precision,
                need: format!("p^N > 2·{bound}"),
            });
        }
        let c = BigInt::from(x.coords[0].clone());
        let balanced = if BigInt::from(2u32) * &c > pn.clone() - BigInt::one() {
            c - &pn
        } else {
            c
        };
        if balanced.abs() > bound {
            return Err(Error::NoIntegerInRange {
                bound: bound.to_string(),
            });
        }
        Ok(balanced)
    }

    // ---- matrices ----

    pub fn mat_identity(&self, n: usize) -> ZqMatrix {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { self.one() } else { self.zero() })
                    .collect()
            })
            .collect()
    }

    pub fn mat_mul(&self, a: &ZqMatrix, b: &ZqMatrix) -> ZqMatrix {
        let n = a.len();
        let m = b[0].len();
        let k = b.len();
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut s = self.zero();
                        for t in 0..k {
                            s = self.add(&s, &self.mul(&a[i][t], &b[t][j]));
                        }
                        s
                    })
                    .collect()
            })
            .collect()
    }

    fn validate_square(&self, a: &ZqMatrix) -> Result<()> {
        let n = a.len();
        for row in a {
            if row.len() != n {
                return Err(Error::RingMismatch);
            }
            for x in row {
                self.ensure_owned(x)?;
            }
        }
        Ok(())
    }

    /// Characteristic polynomial det(s·I − M), ascending coefficients,
    /// leading coefficient 1, via the division-free Berkowitz algorithm.
    pub fn char_poly(&self, a: &ZqMatrix) -> Result<Vec<ZqElement>> {
        self.validate_square(a)?;
        let n = a.len();
        if n == 0 {
            return Ok(vec![self.one()]);
        }
        // coefficients in descending powers of s, starting from the 1x1 block
        let mut c = vec![self.one(), self.neg(&a[0][0])];
        for m in 1..n {
            // Toeplitz column for the (m+1)x(m+1) principal block
            let mut t = Vec::with_capacity(m + 2);
            t.push(self.one());
            t.push(self.neg(&a[m][m]));
            let mut v: Vec<ZqElement> = (0..m).map(|i| a[i][m].clone()).collect();
            for step in 2..=(m + 1) {
                let mut dot = self.zero();
                for i in 0..m {
                    dot = self.add(&dot, &self.mul(&a[m][i], &v[i]));
                }
                t.push(self.neg(&dot));
                if step == m + 1 {
                    break;
                }
                let mut nv = vec![self.zero(); m];
                for (i, slot) in nv.iter_mut().enumerate() {
                    let mut s = self.zero();
                    for j in 0..m {
                        s = self.add(&s, &self.mul(&a[i][j], &v[j]));
                    }
                    *slot = s;
                }
                v = nv;
            }
            let mut nc = vec![self.zero(); m + 2];
            for (i, slot) in nc.iter_mut().enumerate() {
                let mut s = self.zero();
                for (j, cj) in c.iter().enumerate().take(i + 1) {
                    if i - j < t.len() {
                        s = self.add(&s, &self.mul(&t[i - j], cj));
                    }
                }
                *slot = s;
            }
            c = nc;
        }
        c.reverse();
        Ok(c)
    }

    /// Inverse of a matrix with unit determinant; errors with the determinant
    /// valuation otherwise.
    pub fn mat_inverse(&self, a: &ZqMatrix) -> Result<ZqMatrix> {
        self.validate_square(a)?;
        let n = a.len();
        let mut m = a.clone();
        let mut inv = self.mat_identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&row| self.valuation(&m[row][col]) == 0);
            let Some(pivot) = pivot else {
                // no unit pivot left: the determinant is divisible by p
                let cp = self.char_poly(a)?;
                return Err(Error::NonUnitDeterminant(self.valuation(&cp[0])));
            };
            m.swap(col, pivot);
            inv.swap(col, pivot);
            let scale = self.inv(&m[col][col])?;
            for j in 0..n {
                m[col][j] = self.mul(&m[col][j], &scale);
                inv[col][j] = self.mul(&inv[col][j], &scale);
            }
            for row in 0..n {
                if row == col || self.is_zero(&m[row][col]) {
                    continue;
                }
                let f = m[row][col].clone();
                for j in 0..n {
                    let t = self.mul(&f, &m[col][j]);
                    m[row][j] = self.sub(&m[row][j], &t);
                    let t = self.mul(&f, &inv[col][j]);
                    inv[row][j] = self.sub(&inv[row][j], &t);
                }
            }
        }
        Ok(inv)
    }
}

fn modinv_bigint(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    let mut x = e.x % m;
    if x.sign() == Sign::Minus {
        x += m;
    }
    Some(x)
}
