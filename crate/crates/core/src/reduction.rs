//! Pole-order reduction calculus on a Fermat hypersurface.
//!
//! Differential forms on the complement are written as
//!
//! ```text
//! ω = x^b · Ω / F^t,     Σ w_i·b_i + Σ w_i = t·d,
//! ```
//!
//! with F the Fermat polynomial and Ω the weighted volume form. Adding an
//! exact form trades one power of x_i^{d_i} for a drop of the pole order,
//! scaling the coefficient by an explicit rational number. Iterating until
//! every exponent is smaller than d_i is the *complete reduction*; its
//! cumulative coefficient has the closed form implemented here with exact
//! rational arithmetic, so a prime appearing in a denominator is detected
//! instead of silently inverted.

use num::rational::BigRational;
use num::{BigInt, One, Zero};

use crate::error::{Error, Result};
use crate::family::Family;

/// A monomial times the volume form over a power of the Fermat polynomial,
/// prior to reduction. Kept as exponents plus pole order only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoleForm {
    exponents: Vec<u64>,
    pole: u64,
}

/// Outcome of a complete reduction: coefficient ρ, canonical exponents
/// c (0 ≤ c_i ≤ d_i − 1) and pole order s. When some c_i = d_i − 1 the form
/// is exact; the zero flag is set and ρ = 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedForm {
    pub rho: BigRational,
    pub exponents: Vec<u64>,
    pub pole: u64,
    pub zero: bool,
}

impl PoleForm {
    /// Validates the homogeneity constraint Σ w_i·b_i + Σ w_i = t·d.
    pub fn new(family: &Family, exponents: Vec<u64>, pole: u64) -> Result<PoleForm> {
        if exponents.len() != family.coords() {
            return Err(Error::ReductionMismatch(format!(
                "expected {} exponents, got {}",
                family.coords(),
                exponents.len()
            )));
        }
        let wsum: u64 = exponents
            .iter()
            .zip(family.weights())
            .map(|(&b, &w)| w * b + w)
            .sum();
        if wsum != pole * family.degree() {
            return Err(Error::ReductionMismatch(format!(
                "weighted degree {} does not match pole order {} times degree {}",
                wsum,
                pole,
                family.degree()
            )));
        }
        Ok(PoleForm { exponents, pole })
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }
    pub fn pole(&self) -> u64 {
        self.pole
    }

    /// True when every exponent satisfies b_i ≤ d_i − 1.
    pub fn is_reduced(&self, family: &Family) -> bool {
        self.exponents
            .iter()
            .zip(family.cofactors())
            .all(|(&b, &di)| b < di)
    }
}

/// One reduction with respect to coordinate i: requires b_i ≥ d_i and
/// t ≥ 2, returns the multiplier ((b_i+1)·w_i − d) / ((t−1)·d) together
/// with the form having exponent b_i − d_i and pole t − 1.
pub fn reduce_step(family: &Family, form: &PoleForm, i: usize) -> Result<(BigRational, PoleForm)> {
    let di = family.cofactors()[i];
    let b = &form.exponents;
    if b[i] < di {
        return Err(Error::ReductionMismatch(format!(
            "exponent {} at coordinate {i} is below the Fermat exponent {di}",
            b[i]
        )));
    }
    if form.pole < 2 {
        return Err(Error::ReductionMismatch(
            "pole order would drop below 1".into(),
        ));
    }
    let mult = BigRational::new(
        BigInt::from(b[i] + 1 - di),
        BigInt::from((form.pole - 1) * di),
    );
    let mut exponents = b.clone();
    exponents[i] -= di;
    Ok((
        mult,
        PoleForm {
            exponents,
            pole: form.pole - 1,
        },
    ))
}

/// Complete reduction in closed form. With b_i = q_i·d_i + c_i and the
/// reduced pole order s determined by s·d = Σ c_i·w_i + Σ w_i:
///
/// ```text
/// ρ = Π_i ((c_i+1)·w_i/d)_{q_i} / (s)_{t−s}
/// ```
///
/// using rising factorials (x)_n = x(x+1)···(x+n−1). The result equals the
/// product of the multipliers of the individual reduction steps, in any
/// order of coordinates.
pub fn complete_reduction(family: &Family, form: &PoleForm) -> ReducedForm {
    let d = family.degree();
    let mut exponents = Vec::with_capacity(form.exponents.len());
    let mut numerator = BigRational::one();
    let mut zero = false;
    let mut csum = 0u64;
    for ((&b, &di), &w) in form
        .exponents
        .iter()
        .zip(family.cofactors())
        .zip(family.weights())
    {
        let q = b / di;
        let c = b % di;
        if c == di - 1 {
            zero = true;
        }
        let base = BigRational::new(BigInt::from((c + 1) * w), BigInt::from(d));
        numerator *= pochhammer(&base, q);
        csum += c * w + w;
        exponents.push(c);
    }
    debug_assert_eq!(csum % d, 0);
    let s = csum / d;
    if zero {
        return ReducedForm {
            rho: BigRational::zero(),
            exponents,
            pole: s,
            zero: true,
        };
    }
    let denominator = pochhammer(&BigRational::from(BigInt::from(s)), form.pole - s);
    ReducedForm {
        rho: numerator / denominator,
        exponents,
        pole: s,
        zero: false,
    }
}

/// Rising factorial (x)_n = x(x+1)···(x+n−1), with (x)_0 = 1.
pub(crate) fn pochhammer(x: &BigRational, n: u64) -> BigRational {
    let mut acc = BigRational::one();
    let mut term = x.clone();
    for _ in 0..n {
        acc *= &term;
        term += BigRational::one();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn cubic() -> Family {
        Family::new(vec![1, 1, 1], 3, vec![1, 1, 1]).unwrap()
    }

    #[test]
    fn homogeneity_is_enforced() {
        let f = cubic();
        assert!(PoleForm::new(&f, vec![4, 1, 1], 3).is_ok()); // 4+1+1+3 = 9 = 3·3
        assert!(PoleForm::new(&f, vec![4, 1, 1], 2).is_err());
        assert!(PoleForm::new(&f, vec![4, 1], 3).is_err());
    }

    #[test]
    fn single_step_matches_formula() {
        let f = cubic();
        let form = PoleForm::new(&f, vec![4, 1, 1], 3).unwrap();
        let (mult, next) = reduce_step(&f, &form, 0).unwrap();
        assert_eq!(mult, rat(1, 3)); // (5−3)/(2·3)
        assert_eq!(next.exponents(), &[1, 1, 1]);
        assert_eq!(next.pole(), 2);

        // smallest legal step: b_i = d_i, t = 2 → multiplier 1/d_i
        let form = PoleForm::new(&f, vec![3, 0, 0], 2).unwrap();
        let (mult, _) = reduce_step(&f, &form, 0).unwrap();
        assert_eq!(mult, rat(1, 3));

        // preconditions: already-reduced coordinate, and a pole too low to
        // drop (an invalid state only reachable by constructing directly)
        let reduced = PoleForm::new(&f, vec![1, 1, 1], 2).unwrap();
        assert!(reduce_step(&f, &reduced, 0).is_err());
        let low = PoleForm {
            exponents: vec![3, 0, 0],
            pole: 1,
        };
        assert!(reduce_step(&f, &low, 0).is_err());
    }

    #[test]
    fn complete_reduction_examples() {
        let f = cubic();

        // already reduced: empty rising factorials, ρ = 1
        let form = PoleForm::new(&f, vec![1, 1, 1], 2).unwrap();
        let red = complete_reduction(&f, &form);
        assert!(!red.zero);
        assert_eq!(red.rho, BigRational::one());
        assert_eq!(red.exponents, vec![1, 1, 1]);
        assert_eq!(red.pole, 2);

        // x³y³z³/F⁴ → (1/3)³ / (1)₃ = 1/162 at exponents 0 and pole 1
        let form = PoleForm::new(&f, vec![3, 3, 3], 4).unwrap();
        let red = complete_reduction(&f, &form);
        assert!(!red.zero);
        assert_eq!(red.rho, rat(1, 162));
        assert_eq!(red.exponents, vec![0, 0, 0]);
        assert_eq!(red.pole, 1);

        // x²y²z²/F³ is exact: c_i = d_i − 1
        let form = PoleForm::new(&f, vec![2, 2, 2], 3).unwrap();
        let red = complete_reduction(&f, &form);
        assert!(red.zero);
        assert_eq!(red.rho, BigRational::zero());
    }

    /// Reduce coordinates to exhaustion in a fixed order, returning the
    /// product of step multipliers and the final form.
    fn reduce_by_steps(f: &Family, form: &PoleForm, order: &[usize]) -> (BigRational, PoleForm) {
        let mut acc = BigRational::one();
        let mut cur = form.clone();
        loop {
            let mut acted = false;
            for &i in order {
                while cur.exponents()[i] >= f.cofactors()[i] {
                    let (m, next) = reduce_step(f, &cur, i).unwrap();
                    acc *= m;
                    cur = next;
                    acted = true;
                }
            }
            if !acted {
                return (acc, cur);
            }
        }
    }

    #[test]
    fn closed_form_matches_iterated_steps_in_any_order() {
        let families = [
            cubic(),
            Family::new(vec![1, 1, 1], 4, vec![1, 1, 2]).unwrap(),
            Family::new(vec![1, 1, 2], 4, vec![2, 2, 0]).unwrap(),
        ];
        for f in &families {
            let d = f.degree();
            // all exponent vectors with Σ b_i ≤ 12 satisfying homogeneity
            let mut b = vec![0u64; f.coords()];
            'outer: loop {
                let total: u64 = b.iter().sum();
                if total <= 12 {
                    let wsum: u64 = b
                        .iter()
                        .zip(f.weights())
                        .map(|(&bi, &w)| w * bi + w)
                        .sum();
                    if wsum.is_multiple_of(d) {
                        let form = PoleForm::new(f, b.clone(), wsum / d).unwrap();
                        let red = complete_reduction(f, &form);
                        let (fwd, end_fwd) = reduce_by_steps(f, &form, &[0, 1, 2]);
                        let (bwd, end_bwd) = reduce_by_steps(f, &form, &[2, 1, 0]);
                        assert_eq!(fwd, bwd, "order dependence at {:?}", form);
                        assert_eq!(end_fwd, end_bwd);
                        assert_eq!(end_fwd.exponents(), red.exponents.as_slice());
                        assert_eq!(end_fwd.pole(), red.pole);
                        if !red.zero {
                            assert_eq!(fwd, red.rho, "closed form differs at {:?}", form);
                        }
                    }
                }
                let mut i = b.len();
                loop {
                    if i == 0 {
                        break 'outer;
                    }
                    i -= 1;
                    if b[i] < 12 {
                        b[i] += 1;
                        for x in b.iter_mut().skip(i + 1) {
                            *x = 0;
                        }
                        break;
                    }
                    b[i] = 0;
                    if i == 0 {
                        break 'outer;
                    }
                }
            }
        }
    }

    #[test]
    fn rising_factorial_values() {
        assert_eq!(pochhammer(&rat(1, 3), 0), BigRational::one());
        assert_eq!(pochhammer(&rat(1, 3), 2), rat(4, 9)); // (1/3)(4/3)
        assert_eq!(
            pochhammer(&BigRational::from_i64(1).unwrap(), 3),
            BigRational::from_i64(6).unwrap()
        );
    }
}
