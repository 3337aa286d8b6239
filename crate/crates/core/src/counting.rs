//! Brute-force point counting: the independent oracle for everything the
//! p-adic pipeline produces.
//!
//! Counts are taken for the affine cone {F_λ̄ = 0} ⊂ F_{q^s}^{n+1}, the
//! projective hypersurface X_λ̄, and, derived from those, the complement
//! U = P^n \ X. Two enumeration strategies with different failure modes are
//! implemented and must agree: a full scan of all q^{n+1} tuples, and a scan
//! over the first n coordinates with the count of roots of the resulting
//! polynomial in the last coordinate looked up from a q×q table.
//!
//! For weighted spaces the projective count is the orbit count of the
//! G_m-action t·x = (t^{w_i} x_i): each nonzero cone point contributes its
//! stabilizer order gcd(q−1, gcd of the w_i with x_i ≠ 0), the total divided
//! by q−1. Whether that coarse orbit count is the "right" notion of #X in
//! every stabilizer configuration is flagged as a caveat by
//! [`crate::family::Family::is_weighted`]; the end-to-end unweighted path
//! does not depend on it.

use std::collections::BTreeMap;
use std::path::Path;

use num::rational::BigRational;
use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{gcd, Family};
use crate::field::{Elem, FieldDescriptor};

/// Evaluation cap shared by both strategies.
pub const COUNT_WORK_CAP: u128 = 100_000_000;

/// Per-coordinate power tables x ↦ x^{d_i} and x ↦ x^{a_i} over one field.
struct PowerTables {
    fermat: Vec<Vec<Elem>>,
    deform: Vec<Vec<Elem>>,
}

fn power_tables(family: &Family, field: &FieldDescriptor) -> PowerTables {
    let q = field.q();
    let table = |e: u64| -> Vec<Elem> { (0..q).map(|v| field.pow_elem(v, e)).collect() };
    PowerTables {
        fermat: family.cofactors().iter().map(|&d| table(d)).collect(),
        deform: family.deformation().iter().map(|&a| table(a)).collect(),
    }
}

/// #{x ∈ F_q^{n+1} : F_λ̄(x) = 0} by scanning the first n coordinates and
/// counting roots in the last coordinate from a precomputed table.
pub fn count_affine_cone(family: &Family, lambda: u64, field: &FieldDescriptor) -> Result<u64> {
    let q = field.q();
    let coords = family.coords();
    let work = (q as u128).pow(coords as u32 - 1) + (q as u128) * (q as u128);
    if work > COUNT_WORK_CAP {
        return Err(Error::WorkCapExceeded(work, COUNT_WORK_CAP));
    }
    let tables = power_tables(family, field);
    let lam = field.from_residue(lambda);
    let last = coords - 1;

    // roots[m][v] = #{t : t^{d_n} + λ̄·m·t^{a_n} = −v}
    let mut roots = vec![vec![0u64; q as usize]; q as usize];
    for m in 0..q {
        let lm = field.mul(lam, m);
        let row = &mut roots[m as usize];
        for t in 0..q {
            let val = field.add(
                tables.fermat[last][t as usize],
                field.mul(lm, tables.deform[last][t as usize]),
            );
            row[field.neg(val) as usize] += 1;
        }
    }

    let mut total = 0u64;
    let mut x = vec![0u64; last];
    loop {
        let mut s = 0u64;
        let mut m = 1u64;
        for (i, &v) in x.iter().enumerate() {
            s = field.add(s, tables.fermat[i][v as usize]);
            m = field.mul(m, tables.deform[i][v as usize]);
        }
        total += roots[m as usize][s as usize];
        if !odometer(&mut x, q) {
            return Ok(total);
        }
    }
}

/// #{x ∈ F_q^{n+1} : F_λ̄(x) = 0} by scanning every tuple. Cross-check only.
pub fn count_affine_cone_full_scan(
    family: &Family,
    lambda: u64,
    field: &FieldDescriptor,
) -> Result<u64> {
    let q = field.q();
    let coords = family.coords();
    let work = (q as u128).pow(coords as u32);
    if work > COUNT_WORK_CAP {
        return Err(Error::WorkCapExceeded(work, COUNT_WORK_CAP));
    }
    let tables = power_tables(family, field);
    let lam = field.from_residue(lambda);
    let mut total = 0u64;
    let mut x = vec![0u64; coords];
    loop {
        let mut s = 0u64;
        let mut m = 1u64;
        for (i, &v) in x.iter().enumerate() {
            s = field.add(s, tables.fermat[i][v as usize]);
            m = field.mul(m, tables.deform[i][v as usize]);
        }
        if field.add(s, field.mul(lam, m)) == 0 {
            total += 1;
        }
        if !odometer(&mut x, q) {
            return Ok(total);
        }
    }
}

/// #X_λ̄(F_q) as an orbit count of the weighted G_m-action on nonzero cone
/// points; reduces to (cone − 1)/(q − 1) when all weights are 1.
pub fn count_projective(family: &Family, lambda: u64, field: &FieldDescriptor) -> Result<u64> {
    let q = field.q();
    if !family.is_weighted() {
        let cone = count_affine_cone(family, lambda, field)?;
        debug_assert_eq!((cone - 1) % (q - 1), 0);
        return Ok((cone - 1) / (q - 1));
    }
    // weighted: accumulate stabilizer orders over nonzero cone points
    let coords = family.coords();
    let work = (q as u128).pow(coords as u32);
    if work > COUNT_WORK_CAP {
        return Err(Error::WorkCapExceeded(work, COUNT_WORK_CAP));
    }
    let tables = power_tables(family, field);
    let lam = field.from_residue(lambda);
    let mut stab_sum = 0u64;
    let mut x = vec![0u64; coords];
    loop {
        let mut s = 0u64;
        let mut m = 1u64;
        let mut g = 0u64;
        for (i, &v) in x.iter().enumerate() {
            s = field.add(s, tables.fermat[i][v as usize]);
            m = field.mul(m, tables.deform[i][v as usize]);
            if v != 0 {
                g = gcd(g, family.weights()[i]);
            }
        }
        if g != 0 && field.add(s, field.mul(lam, m)) == 0 {
            stab_sum += gcd(q - 1, g);
        }
        if !odometer(&mut x, q) {
            break;
        }
    }
    if !stab_sum.is_multiple_of(q - 1) {
        return Err(Error::InconsistentCounts(format!(
            "stabilizer sum {stab_sum} not divisible by q − 1 = {}",
            q - 1
        )));
    }
    Ok(stab_sum / (q - 1))
}

/// #U_λ̄(F_q) = #P^n(F_q) − #X_λ̄(F_q) with #P^n = 1 + q + ... + q^n.
pub fn count_complement(family: &Family, lambda: u64, field: &FieldDescriptor) -> Result<u64> {
    let x = count_projective(family, lambda, field)?;
    Ok(projective_space_count(field.q(), family.ambient_dim()) - x)
}

pub fn projective_space_count(q: u64, n: usize) -> u64 {
    let mut total = 0u64;
    let mut pw = 1u64;
    for _ in 0..=n {
        total += pw;
        pw = pw.saturating_mul(q);
    }
    total
}

/// Advance a base-q odometer; false when it wraps to all zeros.
fn odometer(x: &mut [u64], q: u64) -> bool {
    for v in x.iter_mut().rev() {
        *v += 1;
        if *v < q {
            return true;
        }
        *v = 0;
    }
    false
}

/// Numerator of the zeta function reconstructed from point counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountZeta {
    /// Ascending coefficients, degree = betti, constant term 1.
    pub numerator: Vec<BigInt>,
    /// Sign in the functional equation P(t) = σ·q^{w·D/2}·t^D·P(1/(q^w t)).
    pub sigma: i8,
}

/// Reconstruct the numerator P(t) = Π (1 − e_m t) of degree `betti` from
/// projective counts #X(F_{q^s}), s = 1..B, using the Lefschetz relation
///
/// ```text
/// #U(F_{q^s}) = q^{ns} + (−1)^n Σ_m e_m^s,      #U = #P^n − #X,
/// ```
///
/// Newton's identities for the first B coefficients, and the functional
/// equation P_{D−j} = σ·q^{(n−1)(D−2j)/2}·P_j for the rest. Requires
/// B ≥ ⌈D/2⌉; σ is +1 for n even, otherwise resolved by consistency (or
/// reported indeterminate). All counts are re-validated against the result.
pub fn zeta_from_counts(
    q: u64,
    n: usize,
    projective_counts: &[u64],
    betti: usize,
) -> Result<CountZeta> {
    let b = projective_counts.len();
    let d = betti;
    if b == 0 || 2 * b < d {
        return Err(Error::Indeterminate(format!(
            "{b} counts cannot determine a degree-{d} numerator"
        )));
    }
    // power sums p_s = Σ_m e_m^s from the counts
    let sign_n = if n.is_multiple_of(2) { 1i64 } else { -1i64 };
    let qb = BigInt::from(q);
    let mut psums: Vec<BigInt> = Vec::with_capacity(b);
    for (s, &xs) in projective_counts.iter().enumerate() {
        let s = s as u32 + 1;
        let mut pn = BigInt::zero();
        for i in 0..=n {
            pn += qb.pow(i as u32 * s);
        }
        let u = pn - BigInt::from(xs);
        psums.push(BigInt::from(sign_n) * (u - qb.pow(n as u32 * s)));
    }
    // Newton: e_k = (1/k) Σ_{i=1..k} (−1)^{i−1} e_{k−i} p_i; P_k = (−1)^k e_k
    let know = b.min(d);
    let mut elem: Vec<BigRational> = vec![BigRational::one()];
    for k in 1..=know {
        let mut acc = BigRational::zero();
        for i in 1..=k {
            let term = &elem[k - i] * BigRational::from(psums[i - 1].clone());
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        elem.push(acc / BigRational::from(BigInt::from(k as i64)));
    }
    let mut coeffs: Vec<Option<BigInt>> = vec![None; d + 1];
    for (k, e) in elem.iter().enumerate() {
        if !e.is_integer() {
            return Err(Error::InconsistentCounts(format!(
                "coefficient {k} from Newton's identities is not integral: {e}"
            )));
        }
        let c = if k % 2 == 0 {
            e.to_integer()
        } else {
            -e.to_integer()
        };
        coeffs[k] = Some(c);
    }

    let fill = |sigma: i64| -> Option<Vec<BigInt>> {
        let mut out = coeffs.clone();
        for j in 0..=know {
            // q^{(n−1)(D−2j)/2}, exact or bail
            if d < 2 * j {
                break;
            }
            let expo = (n as u64 - 1) * (d as u64 - 2 * j as u64);
            let factor = if expo.is_multiple_of(2) {
                qb.pow((expo / 2) as u32)
            } else {
                let full = qb.pow(expo as u32);
                let root = full.sqrt();
                if &root * &root != full {
                    return None;
                }
                root
            };
            let mirrored = BigInt::from(sigma) * factor * out[j].clone().unwrap();
            match &out[d - j] {
                Some(existing) if *existing != mirrored => return None,
                _ => out[d - j] = Some(mirrored),
            }
        }
        if out.iter().any(|c| c.is_none()) {
            return None;
        }
        Some(out.into_iter().map(|c| c.unwrap()).collect())
    };

    let sigmas: &[i64] = if n.is_multiple_of(2) { &[1] } else { &[1, -1] };
    let mut solutions: Vec<(i64, Vec<BigInt>)> = Vec::new();
    for &s in sigmas {
        if let Some(sol) = fill(s) {
            solutions.push((s, sol));
        }
    }
    let (sigma, numerator) = match solutions.len() {
        0 => {
            return Err(Error::InconsistentCounts(
                "no functional-equation sign is consistent with the counts".into(),
            ))
        }
        1 => solutions.pop().unwrap(),
        _ => {
            if solutions[0].1 == solutions[1].1 {
                solutions.swap_remove(0)
            } else {
                return Err(Error::Indeterminate(
                    "both functional-equation signs are consistent".into(),
                ));
            }
        }
    };

    // re-validate every count against the reconstructed numerator
    let mut check_psums: Vec<BigInt> = Vec::with_capacity(b);
    for k in 1..=b {
        // p_k = −k·c_k − Σ_{i=1..k−1} c_i p_{k−i}
        let ck = numerator.get(k).cloned().unwrap_or_else(BigInt::zero);
        let mut p = -BigInt::from(k as i64) * ck;
        for i in 1..k {
            let ci = numerator.get(i).cloned().unwrap_or_else(BigInt::zero);
            p -= ci * &check_psums[k - i - 1];
        }
        check_psums.push(p);
    }
    for (s, (have, want)) in check_psums.iter().zip(&psums).enumerate() {
        if have != want {
            return Err(Error::InconsistentCounts(format!(
                "count over extension {} disagrees with the numerator: residual {}",
                s + 1,
                have - want
            )));
        }
    }
    Ok(CountZeta {
        numerator,
        sigma: sigma as i8,
    })
}

/// On-disk cache of projective counts keyed by family, parameter, and field.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CountCache {
    version: u32,
    entries: BTreeMap<String, u64>,
}

impl CountCache {
    pub const VERSION: u32 = 1;

    pub fn key(family: &Family, lambda: u64, p: u64, r: u32) -> String {
        format!(
            "w={:?};d={};a={:?};l={lambda};p={p};r={r}",
            family.weights(),
            family.degree(),
            family.deformation()
        )
    }

    pub fn load(path: &Path) -> Result<CountCache> {
        if !path.exists() {
            return Ok(CountCache {
                version: Self::VERSION,
                entries: BTreeMap::new(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::Cache(e.to_string()))?;
        let cache: CountCache =
            serde_json::from_str(&text).map_err(|e| Error::Cache(e.to_string()))?;
        if cache.version != Self::VERSION {
            return Err(Error::Cache(format!(
                "cache version {} unsupported (expected {})",
                cache.version,
                Self::VERSION
            )));
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Cache(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::Cache(e.to_string()))
    }

    pub fn get(&self, key: &str) -> Option<u64> {
        self.entries.get(key).copied()
    }

    pub fn put(&mut self, key: String, count: u64) {
        self.entries.insert(key, count);
    }
}

/// Projective count through the cache, computing and inserting on a miss.
pub fn count_projective_cached(
    family: &Family,
    lambda: u64,
    field: &FieldDescriptor,
    cache: &mut CountCache,
) -> Result<u64> {
    let key = CountCache::key(family, lambda, field.p(), field.r());
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let count = count_projective(family, lambda, field)?;
    cache.put(key, count);
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hesse() -> Family {
        Family::new(vec![1, 1, 1], 3, vec![1, 1, 1]).unwrap()
    }

    fn quartic_220() -> Family {
        Family::new(vec![1, 1, 1], 4, vec![2, 2, 0]).unwrap()
    }

    fn quintic() -> Family {
        Family::new(vec![1; 5], 5, vec![1; 5]).unwrap()
    }

    fn weighted_elliptic() -> Family {
        Family::new(vec![1, 1, 2], 4, vec![2, 2, 0]).unwrap()
    }

    #[test]
    fn strategies_agree_and_cone_is_one_mod_qm1() {
        let cases: Vec<(Family, u64, u64, u32)> = vec![
            (hesse(), 0, 7, 1),
            (hesse(), 3, 7, 1),
            (hesse(), 5, 7, 2),
            (quartic_220(), 1, 5, 1),
            (quartic_220(), 2, 5, 2),
            (quintic(), 1, 11, 1),
        ];
        for (f, lam, p, r) in cases {
            let fd = FieldDescriptor::make(p, r).unwrap();
            let fast = count_affine_cone(&f, lam, &fd).unwrap();
            let slow = count_affine_cone_full_scan(&f, lam, &fd).unwrap();
            assert_eq!(fast, slow, "strategies disagree for p={p} r={r} λ={lam}");
            assert_eq!(fast % (fd.q() - 1), 1 % (fd.q() - 1));
        }
    }

    #[test]
    fn hesse_counts_frozen() {
        let f = hesse();
        let f7 = FieldDescriptor::make(7, 1).unwrap();
        let f49 = FieldDescriptor::make(7, 2).unwrap();
        // all quasi-smooth fibers over F_7 have 9 points
        for lam in [0u64, 3, 5, 6] {
            assert_eq!(count_projective(&f, lam, &f7).unwrap(), 9);
        }
        assert_eq!(count_projective(&f, 0, &f49).unwrap(), 63);
        assert_eq!(count_complement(&f, 0, &f7).unwrap(), 48);
        assert_eq!(count_complement(&f, 0, &f49).unwrap(), 2388);
    }

    #[test]
    fn quartic_and_quintic_counts_frozen() {
        let f = quartic_220();
        let f5 = FieldDescriptor::make(5, 1).unwrap();
        let f25 = FieldDescriptor::make(5, 2).unwrap();
        let f125 = FieldDescriptor::make(5, 3).unwrap();
        assert_eq!(count_projective(&f, 0, &f5).unwrap(), 0);
        assert_eq!(count_projective(&f, 0, &f25).unwrap(), 44);
        assert_eq!(count_projective(&f, 0, &f125).unwrap(), 192);
        assert_eq!(count_projective(&f, 1, &f5).unwrap(), 0);
        assert_eq!(count_projective(&f, 1, &f25).unwrap(), 20);
        assert_eq!(count_projective(&f, 1, &f125).unwrap(), 96);

        let g = quintic();
        let f11 = FieldDescriptor::make(11, 1).unwrap();
        assert_eq!(count_projective(&g, 0, &f11).unwrap(), 1925);
        assert_eq!(count_projective(&g, 1, &f11).unwrap(), 2550);
    }

    #[test]
    fn weighted_orbit_counts_frozen() {
        let f = weighted_elliptic();
        let f5 = FieldDescriptor::make(5, 1).unwrap();
        let expected = [4u64, 8, 10, 10, 8];
        for (lam, &want) in expected.iter().enumerate() {
            assert_eq!(count_projective(&f, lam as u64, &f5).unwrap(), want);
        }
        // orbit path agrees with the (cone−1)/(q−1) formula when w = 1
        let h = hesse();
        let f7 = FieldDescriptor::make(7, 1).unwrap();
        let cone = count_affine_cone(&h, 3, &f7).unwrap();
        assert_eq!(count_projective(&h, 3, &f7).unwrap(), (cone - 1) / 6);
    }

    #[test]
    fn elliptic_numerator_from_one_count() {
        // Hesse fiber λ̄ = 3 over F_7: #X = 9 → P = 1 + t + 7t²
        let z = zeta_from_counts(7, 2, &[9], 2).unwrap();
        assert_eq!(
            z.numerator,
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(7)]
        );
        assert_eq!(z.sigma, 1);
    }

    #[test]
    fn genus_three_numerators_from_three_counts() {
        // Fermat quartic (λ = 0): P = (1 − 2t + 5t²)³
        let z = zeta_from_counts(5, 2, &[0, 44, 192], 6).unwrap();
        let want: Vec<BigInt> = [1i64, -6, 27, -68, 135, -150, 125]
            .iter()
            .map(|&c| BigInt::from(c))
            .collect();
        assert_eq!(z.numerator, want);
        // deformed fiber λ = 1
        let z = zeta_from_counts(5, 2, &[0, 20, 96], 6).unwrap();
        let want: Vec<BigInt> = [1i64, -6, 15, -28, 75, -150, 125]
            .iter()
            .map(|&c| BigInt::from(c))
            .collect();
        assert_eq!(z.numerator, want);
    }

    #[test]
    fn inconsistent_and_insufficient_counts_are_rejected() {
        assert!(matches!(
            zeta_from_counts(7, 2, &[9, 9999], 2),
            Err(Error::InconsistentCounts(_))
        ));
        assert!(matches!(
            zeta_from_counts(5, 2, &[0], 6),
            Err(Error::Indeterminate(_))
        ));
    }

    #[test]
    fn cache_roundtrip() {
        let dir = std::env::temp_dir().join("fermat-zeta-test-cache");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("counts.json");
        let _ = std::fs::remove_file(&path);
        let f = hesse();
        let f7 = FieldDescriptor::make(7, 1).unwrap();
        let mut cache = CountCache::load(&path).unwrap();
        let a = count_projective_cached(&f, 3, &f7, &mut cache).unwrap();
        cache.save(&path).unwrap();
        let mut reloaded = CountCache::load(&path).unwrap();
        let b = count_projective_cached(&f, 3, &f7, &mut reloaded).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 9);
        let _ = std::fs::remove_file(&path);
    }
}
