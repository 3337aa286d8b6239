//! Jacobi sums and the Frobenius constants of the undeformed member.
//!
//! For q ≡ 1 mod d and a type with vector (v_0, ..., v_n), the associated
//! Jacobi sum over F_q is
//!
//! ```text
//! J = (−1)^{n+1} · Σ χ(t_1)^{v_1} ··· χ(t_n)^{v_n}
//! ```
//!
//! summed over tuples (t_1, ..., t_n) with Σ t_i = −1, where χ is the
//! character of exact order d cut from a fixed generator (entry v_0 is
//! determined by the others and does not appear). Summation is direct with
//! the last variable eliminated; each summand is a d-th root of unity, so
//! the value is accumulated exactly as a coefficient vector over powers of
//! ζ_d and embedded p-adically through the Teichmüller lift only at the end.
//!
//! At λ = 0 the Frobenius acts diagonally on the monomial basis with
//! constants c_m = ± q^ν / J_m. Which exponent ν ∈ {n−1, n} and which sign
//! occur depends on normalization conventions that are fragile to derive;
//! [`calibrate`] instead selects the unique convention reproducing
//! brute-force point counts over F_q and F_{q²} and records the residuals
//! of every candidate.

use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclotomic::CycloElement;
use crate::error::{Error, Result};
use crate::family::{Family, MonomialType};
use crate::field::FieldDescriptor;
use crate::padic::{ZqElement, ZqRing};

/// A Jacobi sum in two representations: exact (coefficients over powers of
/// ζ_d) and p-adic (via the Teichmüller root of unity).
#[derive(Debug, Clone)]
pub struct JacobiValue {
    pub value: ZqElement,
    pub exact: CycloElement,
    /// Some character exponent was ≡ 0 mod d (never the case for
    /// admissible types; kept for diagnostic use of the raw summation).
    pub degenerate: bool,
}

/// Outcome of trying one normalization convention against point counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationCandidate {
    /// ν = n when true, else ν = n − 1.
    pub nu_is_n: bool,
    /// Global sign of the constants.
    pub sign: i8,
    /// Predicted minus actual complement count over F_q.
    pub residual_s1: BigInt,
    /// Predicted minus actual complement count over F_{q²}, when that count
    /// was supplied.
    pub residual_s2: Option<BigInt>,
}

/// The convention selected by [`calibrate`], with the evidence retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub q: u64,
    pub nu_is_n: bool,
    pub sign: i8,
    pub candidates: Vec<CalibrationCandidate>,
}

const JACOBI_WORK_CAP: u128 = 100_000_000;

/// Jacobi sum of an admissible type.
pub fn jacobi_sum(
    family: &Family,
    t: &MonomialType,
    field: &FieldDescriptor,
    ring: &ZqRing,
) -> Result<JacobiValue> {
    let tv = t.type_vector(family);
    // admissible types have entries in (0, d); degenerate entries cannot occur
    debug_assert!(tv.iter().all(|&v| v % family.degree() != 0));
    jacobi_sum_entries(&tv[1..], family.degree(), field, ring)
}

/// Jacobi sum from raw character exponents (entries 1..n of a type vector).
pub fn jacobi_sum_entries(
    entries: &[u64],
    d: u64,
    field: &FieldDescriptor,
    ring: &ZqRing,
) -> Result<JacobiValue> {
    let q = field.q();
    if !(q - 1).is_multiple_of(d) {
        return Err(Error::IncompatibleResidue { q, d });
    }
    if ring.p() != field.p() || ring.r() != field.r() {
        return Err(Error::RingMismatch);
    }
    let work = (q as u128).pow(entries.len().saturating_sub(1) as u32);
    if work > JACOBI_WORK_CAP {
        return Err(Error::WorkCapExceeded(work, JACOBI_WORK_CAP));
    }

    let counts = root_class_counts(entries, d, field);
    let n = entries.len();
    let negate = (n + 1) % 2 == 1; // prefactor (−1)^{n+1}

    let mut exact = CycloElement::zero(d);
    for (c, &cnt) in counts.iter().enumerate() {
        if cnt == 0 {
            continue;
        }
        let signed = if negate {
            -BigInt::from(cnt)
        } else {
            BigInt::from(cnt)
        };
        exact.add_root_multiple(c as u64, signed);
    }

    // ζ_d = ω(g)^{(q−1)/d} with ω the Teichmüller lift of the generator
    let zeta = ring.teichmueller(field.pow_elem(field.generator(), (q - 1) / d));
    let mut value = ring.zero();
    let mut zpow = ring.one();
    for c in 0..d as usize {
        if !exact.coeffs()[c].is_zero() {
            value = ring.add(&value, &ring.scale_int(&zpow, &exact.coeffs()[c]));
        }
        if c + 1 < d as usize {
            zpow = ring.mul(&zpow, &zeta);
        }
    }

    Ok(JacobiValue {
        value,
        exact,
        degenerate: entries.iter().any(|&e| e % d == 0),
    })
}

/// N_c = #{(t_1..t_n) : Σt_i = −1, all t_i ≠ 0, Σ entries_i·dlog(t_i) ≡ c}.
fn root_class_counts(entries: &[u64], d: u64, field: &FieldDescriptor) -> Vec<u64> {
    let q = field.q();
    // character exponent mod d of every nonzero element, by code
    let chi: Vec<u64> = (0..q)
        .map(|v| if v == 0 { 0 } else { field.dlog(v).unwrap() % d })
        .collect();
    let minus_one = field.neg(1);
    let mut counts = vec![0u64; d as usize];
    let free = entries.len().saturating_sub(1);
    let mut tuple = vec![1u64; free];
    if entries.is_empty() {
        return counts;
    }
    loop {
        let mut sum = 0u64;
        for &v in &tuple {
            sum = field.add(sum, v);
        }
        let last = field.sub(minus_one, sum);
        if last != 0 {
            let mut c = 0u64;
            for (&v, &e) in tuple.iter().chain(std::iter::once(&last)).zip(entries) {
                c = (c + chi[v as usize] * (e % d)) % d;
            }
            counts[c as usize] += 1;
        }
        // odometer over nonzero codes 1..q−1
        let mut i = free;
        loop {
            if i == 0 {
                return counts;
            }
            i -= 1;
            if tuple[i] + 1 < q {
                tuple[i] += 1;
                for x in tuple.iter_mut().skip(i + 1) {
                    *x = 1;
                }
                break;
            }
            tuple[i] = 1;
            if i == 0 {
                return counts;
            }
        }
    }
}

/// Diagonal Frobenius constants c_m = sign · q^ν / J_m for the given types,
/// exact at the precision of `ring` (the division is performed with internal
/// precision headroom).
pub fn frobenius_constants(
    family: &Family,
    members: &[MonomialType],
    field: &FieldDescriptor,
    ring: &ZqRing,
    record: &CalibrationRecord,
) -> Result<Vec<ZqElement>> {
    let n = family.ambient_dim() as u32;
    let nu = if record.nu_is_n { n } else { n - 1 };
    let pad = nu * ring.r();
    let padded = ZqRing::new(ring.p(), ring.r(), ring.precision() + 2 * pad)?;
    let mut out = Vec::with_capacity(members.len());
    for m in members {
        let j = jacobi_sum(family, m, field, &padded)?;
        let v = padded.valuation(&j.value);
        if v > pad {
            return Err(Error::NonIntegralSeries(format!(
                "Jacobi sum valuation {v} exceeds q^ν = p^{pad}"
            )));
        }
        let unit = padded.exact_div_pow_p(&j.value, v)?;
        let inv = padded.inv(&unit)?;
        let mut c = padded.mul_pow_p(&inv, pad - v);
        if record.sign < 0 {
            c = padded.neg(&c);
        }
        out.push(ring.truncate_from(&c)?);
    }
    Ok(out)
}

/// Select the normalization (ν, sign) for which the undeformed Frobenius
/// constants reproduce the given complement counts (#U over F_q and F_{q²})
/// through the trace formula #U(F_{q^s}) = q^{ns} + (−1)^n Σ_m e_m^s with
/// e_m = sign · q^{n−ν} · J_m. All four candidates are evaluated exactly in
/// Z[ζ_d] and reported; exactly one must match.
pub fn calibrate(
    family: &Family,
    field: &FieldDescriptor,
    complement_counts: &[u64; 2],
) -> Result<CalibrationRecord> {
    calibrate_partial(
        family,
        field,
        complement_counts[0],
        Some(complement_counts[1]),
    )
}

/// [`calibrate`] with the F_{q²} count optional. With only #U(F_q) the
/// convention is still pinned down whenever Σ J_m ≠ 0, since the four
/// candidate predictions q^n + (−1)^n·sign·scale·S₁ are then pairwise
/// distinct; with Σ J_m = 0 the single count cannot separate them and the
/// quadratic equation is required.
pub fn calibrate_partial(
    family: &Family,
    field: &FieldDescriptor,
    count_s1: u64,
    count_s2: Option<u64>,
) -> Result<CalibrationRecord> {
    let d = family.degree();
    let q = field.q();
    let n = family.ambient_dim() as u32;
    // J_m are needed only exactly; any compatible ring precision works
    let ring = ZqRing::new(field.p(), field.r(), 2)?;
    let types = family.admissible_types();
    let mut sum1 = CycloElement::zero(d);
    let mut sum2 = CycloElement::zero(d);
    for t in &types {
        let j = jacobi_sum(family, t, field, &ring)?;
        sum1 = sum1.add(&j.exact);
        sum2 = sum2.add(&j.exact.mul(&j.exact));
    }
    let s1 = integer_value(&sum1)?;
    let s2 = integer_value(&sum2)?;

    let qn = BigInt::from(q).pow(n);
    let parity = if n.is_multiple_of(2) {
        BigInt::one()
    } else {
        -BigInt::one()
    };
    let mut candidates = Vec::new();
    let mut matches = Vec::new();
    for nu_is_n in [false, true] {
        let scale = if nu_is_n {
            BigInt::one()
        } else {
            BigInt::from(q)
        };
        for sign in [1i8, -1i8] {
            let e1 = BigInt::from(sign) * &scale * &s1;
            let e2 = &scale * &scale * &s2;
            let predicted1 = &qn + &parity * e1;
            let predicted2 = &qn * &qn + &parity * e2;
            let residual_s1 = predicted1 - BigInt::from(count_s1);
            let residual_s2 = count_s2.map(|c| predicted2 - BigInt::from(c));
            if residual_s1.is_zero() && residual_s2.as_ref().is_none_or(|r| r.is_zero()) {
                matches.push((nu_is_n, sign));
            }
            candidates.push(CalibrationCandidate {
                nu_is_n,
                sign,
                residual_s1,
                residual_s2,
            });
        }
    }
    match matches.as_slice() {
        [(nu_is_n, sign)] => Ok(CalibrationRecord {
            q,
            nu_is_n: *nu_is_n,
            sign: *sign,
            candidates,
        }),
        [] => Err(Error::NoConventionMatches(format!(
            "no (ν, sign) candidate reproduces counts ({count_s1}, {count_s2:?}): {candidates:?}"
        ))),
        many => {
            // sign is undetermined when Σ J_m = 0; prefer +1 in that case,
            // but only when the quadratic count was available to fix ν
            if s1.is_zero() && count_s2.is_some() && many.iter().all(|(nu, _)| *nu == many[0].0) {
                Ok(CalibrationRecord {
                    q,
                    nu_is_n: many[0].0,
                    sign: 1,
                    candidates,
                })
            } else {
                Err(Error::NoConventionMatches(format!(
                    "multiple candidates match counts ({count_s1}, {count_s2:?}): {many:?}"
                )))
            }
        }
    }
}

/// The rational integer a cyclotomic element equals, or an error if it is
/// not rational.
fn integer_value(x: &CycloElement) -> Result<BigInt> {
    let canon = x.canonical();
    if canon.len() > 1 && canon[1..].iter().any(|c| !c.is_zero()) {
        return Err(Error::NoConventionMatches(format!(
            "trace sum is not a rational integer: {canon:?}"
        )));
    }
    Ok(canon.first().cloned().unwrap_or_else(BigInt::zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldDescriptor;

    fn hesse() -> Family {
        Family::new(vec![1, 1, 1], 3, vec![1, 1, 1]).unwrap()
    }

    fn quintic() -> Family {
        Family::new(vec![1; 5], 5, vec![1; 5]).unwrap()
    }

    #[test]
    fn hesse_value_against_double_loop_oracle() {
        let f = hesse();
        let fd = FieldDescriptor::make(7, 1).unwrap();
        let ring = ZqRing::new(7, 1, 6).unwrap();
        let types = f.admissible_types();
        let j = jacobi_sum(&f, &types[0], &fd, &ring).unwrap();
        assert!(!j.degenerate);
        // independent oracle: loop over all 49 pairs, test the constraint
        let mut oracle = CycloElement::zero(3);
        for v1 in 0..7u64 {
            for v2 in 0..7u64 {
                if fd.add(v1, v2) != fd.neg(1) || v1 == 0 || v2 == 0 {
                    continue;
                }
                let c = (fd.dlog(v1).unwrap() + fd.dlog(v2).unwrap()) % 3;
                // (−1)^{n+1} = −1 for n = 2
                oracle.add_root_multiple(c, -BigInt::one());
            }
        }
        assert_eq!(j.exact, oracle);
        // frozen: J = 1 + 3ζ₃ in Z[ζ₃]
        assert_eq!(
            j.exact.canonical(),
            vec![BigInt::from(1), BigInt::from(3)]
        );
        // conjugate type gives the conjugate value
        let jc = jacobi_sum(&f, &types[1], &fd, &ring).unwrap();
        assert_eq!(jc.exact, j.exact.conjugate());
        // Σ J_m = −1: the trace pin behind the calibration
        assert!(j.exact.add(&jc.exact).equals_integer(&BigInt::from(-1)));
    }

    #[test]
    fn norm_identity_and_padic_embedding() {
        let f = hesse();
        let fd = FieldDescriptor::make(7, 1).unwrap();
        let ring = ZqRing::new(7, 1, 8).unwrap();
        let types = f.admissible_types();
        let j = jacobi_sum(&f, &types[0], &fd, &ring).unwrap();
        // |J|² = q^{n−1} = 7 exactly in Z[ζ₃]
        assert!(j
            .exact
            .mul(&j.exact.conjugate())
            .equals_integer(&BigInt::from(7)));
        // the p-adic embedding respects it
        let jc = jacobi_sum(&f, &types[1], &fd, &ring).unwrap();
        let prod = ring.mul(&j.value, &jc.value);
        assert_eq!(prod, ring.from_u64(7));
    }

    #[test]
    fn quintic_norms_and_permutation_invariance() {
        let f = quintic();
        let fd = FieldDescriptor::make(11, 1).unwrap();
        let ring = ZqRing::new(11, 1, 3).unwrap();
        let t = f.type_from_exponents(vec![0, 0, 0, 2, 3]).unwrap();
        let j = jacobi_sum(&f, &t, &fd, &ring).unwrap();
        assert!(j
            .exact
            .mul(&j.exact.conjugate())
            .equals_integer(&BigInt::from(11u64.pow(3))));
        // permuting the coordinates of the type leaves the value unchanged
        let tp = f.type_from_exponents(vec![3, 0, 0, 2, 0]).unwrap();
        let jp = jacobi_sum(&f, &tp, &fd, &ring).unwrap();
        assert_eq!(j.exact, jp.exact);
        // moving an entry into slot 0 also leaves it unchanged (d odd)
        let tq = f.type_from_exponents(vec![2, 0, 0, 0, 3]).unwrap();
        let jq = jacobi_sum(&f, &tq, &fd, &ring).unwrap();
        assert_eq!(j.exact, jq.exact);
    }

    #[test]
    fn degenerate_entries_flagged_and_wrong_residue_rejected() {
        let fd = FieldDescriptor::make(7, 1).unwrap();
        let ring = ZqRing::new(7, 1, 4).unwrap();
        let j = jacobi_sum_entries(&[0, 1], 3, &fd, &ring).unwrap();
        assert!(j.degenerate);
        let fd5 = FieldDescriptor::make(5, 1).unwrap();
        let ring5 = ZqRing::new(5, 1, 4).unwrap();
        assert!(matches!(
            jacobi_sum_entries(&[1, 1], 3, &fd5, &ring5),
            Err(Error::IncompatibleResidue { q: 5, d: 3 })
        ));
    }

    #[test]
    fn hesse_calibration_from_frozen_counts() {
        let f = hesse();
        let fd = FieldDescriptor::make(7, 1).unwrap();
        // #U(F_7) = 57 − 9 = 48, #U(F_49) = 2451 − 63 = 2388
        let rec = calibrate(&f, &fd, &[48, 2388]).unwrap();
        assert!(rec.nu_is_n);
        assert_eq!(rec.sign, 1);
        assert_eq!(rec.candidates.len(), 4);
        let zero_rows = rec
            .candidates
            .iter()
            .filter(|c| {
                c.residual_s1.is_zero() && c.residual_s2.as_ref().is_some_and(|r| r.is_zero())
            })
            .count();
        assert_eq!(zero_rows, 1);
        // determinism
        assert_eq!(calibrate(&f, &fd, &[48, 2388]).unwrap(), rec);
        // the linear count alone already separates the candidates here
        let partial = calibrate_partial(&f, &fd, 48, None).unwrap();
        assert!(partial.nu_is_n);
        assert_eq!(partial.sign, 1);
        assert!(partial.candidates.iter().all(|c| c.residual_s2.is_none()));
    }

    #[test]
    fn frobenius_constants_invert_to_jacobi_sums() {
        let f = hesse();
        let fd = FieldDescriptor::make(7, 1).unwrap();
        let ring = ZqRing::new(7, 1, 6).unwrap();
        let rec = calibrate(&f, &fd, &[48, 2388]).unwrap();
        let types = f.admissible_types();
        let consts = frobenius_constants(&f, &types, &fd, &ring, &rec).unwrap();
        // with ν = n = 2: c_m · J_m = q² exactly
        let q2 = ring.from_u64(49);
        for (c, t) in consts.iter().zip(&types) {
            let j = jacobi_sum(&f, t, &fd, &ring).unwrap();
            assert_eq!(ring.mul(c, &j.value), q2);
        }
        // eigenvalue magnitudes: val(c_m) + val(J_m) = 2·r
        for (c, t) in consts.iter().zip(&types) {
            let j = jacobi_sum(&f, t, &fd, &ring).unwrap();
            assert_eq!(ring.valuation(c) + ring.valuation(&j.value), 2);
        }
    }
}
