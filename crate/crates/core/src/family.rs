//! Families of monomial deformations of Fermat hypersurfaces and the
//! combinatorics of their monomial types.
//!
//! A family is
//!
//! ```text
//! F_λ :  Σ_i x_i^{d_i} + λ · Π_i x_i^{a_i} = 0    in P(w_0, ..., w_n)
//! ```
//!
//! with w_i·d_i = d and Σ w_i·a_i = d. The middle-dimensional cohomology of a
//! quasi-smooth member has a monomial basis indexed by *admissible types*:
//! exponent vectors (k_0, ..., k_n) with 0 ≤ k_i ≤ d_i − 2 and
//! Σ w_i(k_i + 1) ≡ 0 mod d. Two parallel coordinates are kept throughout,
//! because mixing them up is the classic off-by-one here:
//!
//! * exponents k_i (the monomial is x^k · (volume form), used by the
//!   reduction calculus);
//! * the type vector v_i = w_i(k_i + 1) in Z/d (used by everything
//!   arithmetic: Jacobi sums, orbits, annihilators).
//!
//! The deformation acts on types by translation v ↦ v + a_type where
//! a_type = (w_i·a_i); orbits of that translation intersected with the
//! admissible set are the *strong classes* (the block structure of the
//! deformation matrix). Coarser groupings come from the scalings
//! x_i ↦ ζ_d^{w_i b_i} x_i that fix the deformed family: such a scaling
//! *distinguishes* two types iff it pairs to zero with one type vector and
//! not the other, and two types are *weakly equivalent* iff no scaling
//! distinguishes them in either order (equal annihilators). The *weak
//! classes* used to group zeta factors refine that relation once more: each
//! equal-annihilator group of strong classes is split into minimal unions
//! whose multisets of sorted type vectors are stable under scaling by units
//! of Z/d. That is the finest grouping whose factors have rational
//! coefficients, because Jacobi sums depend on a type only through its
//! sorted entries and Galois acts on them through unit scalings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number-theoretic data of one deformation family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    weights: Vec<u64>,
    degree: u64,
    deformation: Vec<u64>,
    #[serde(skip)]
    cofactors: Vec<u64>,
}

/// An admissible monomial type of a family; see the module docs for the two
/// coordinate systems.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MonomialType {
    exponents: Vec<u64>,
}

/// Orbit of the type translation v ↦ v + a_type inside the admissible set,
/// members sorted by exponent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongClass {
    pub members: Vec<MonomialType>,
}

/// Union of strong classes yielding one rational zeta factor: members share
/// their annihilator, and the multiset of sorted type vectors is stable
/// under unit scaling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakClass {
    /// Indices into the strong-class list.
    pub strong_members: Vec<usize>,
    /// All types of the class, sorted.
    pub members: Vec<MonomialType>,
}

impl Family {
    pub fn new(weights: Vec<u64>, degree: u64, deformation: Vec<u64>) -> Result<Family> {
        if weights.len() < 2 {
            return Err(Error::InvalidFamily(
                "need at least two coordinates".into(),
            ));
        }
        if weights.len() != deformation.len() {
            return Err(Error::InvalidFamily(
                "weights and deformation exponents must have equal length".into(),
            ));
        }
        if degree == 0 || weights.contains(&0) {
            return Err(Error::InvalidFamily("weights and degree must be positive".into()));
        }
        let mut cofactors = Vec::with_capacity(weights.len());
        for &w in &weights {
            if !degree.is_multiple_of(w) {
                return Err(Error::InvalidFamily(format!(
                    "weight {w} does not divide the degree {degree}"
                )));
            }
            let di = degree / w;
            if di < 2 {
                return Err(Error::InvalidFamily(format!(
                    "cofactor d_i = {di} < 2 for weight {w}"
                )));
            }
            cofactors.push(di);
        }
        let total: u64 = weights
            .iter()
            .zip(&deformation)
            .map(|(&w, &a)| w * a)
            .sum();
        if total != degree {
            return Err(Error::InvalidFamily(format!(
                "deformation monomial has weighted degree {total}, expected {degree}"
            )));
        }
        for (&a, &di) in deformation.iter().zip(&cofactors) {
            if a >= di {
                return Err(Error::InvalidFamily(format!(
                    "deformation exponent {a} must be smaller than the Fermat exponent {di}"
                )));
            }
        }
        if deformation.iter().filter(|&&a| a > 0).count() < 2 {
            return Err(Error::InvalidFamily(
                "deformation monomial must involve at least two coordinates".into(),
            ));
        }
        Ok(Family {
            weights,
            degree,
            deformation,
            cofactors,
        })
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }
    pub fn degree(&self) -> u64 {
        self.degree
    }
    pub fn deformation(&self) -> &[u64] {
        &self.deformation
    }
    /// Fermat exponents d_i = d / w_i.
    pub fn cofactors(&self) -> &[u64] {
        &self.cofactors
    }
    /// Dimension n of the ambient projective space (n + 1 coordinates).
    pub fn ambient_dim(&self) -> usize {
        self.weights.len() - 1
    }
    pub fn coords(&self) -> usize {
        self.weights.len()
    }
    pub fn is_weighted(&self) -> bool {
        self.weights.iter().any(|&w| w != 1)
    }

    /// Type vector of the deformation monomial, (w_i·a_i) mod d.
    pub fn deformation_type(&self) -> Vec<u64> {
        self.weights
            .iter()
            .zip(&self.deformation)
            .map(|(&w, &a)| w * a % self.degree)
            .collect()
    }

    /// d′: lcm of the additive orders of a_i mod d_i over the coordinates the
    /// deformation involves. Series in λ attached to this family live on
    /// residue classes mod d′.
    pub fn deformation_order(&self) -> u64 {
        let mut l = 1u64;
        for (&a, &di) in self.deformation.iter().zip(&self.cofactors) {
            if a == 0 {
                continue;
            }
            let ord = di / gcd(a, di);
            l = lcm(l, ord);
        }
        l
    }

    /// b_i = a_i·d′/d_i; these sum to d′ and are the upper-parameter
    /// multiplicities of the hypergeometric data.
    pub fn hypergeometric_multiplicities(&self) -> Vec<u64> {
        let dp = self.deformation_order();
        self.deformation
            .iter()
            .zip(&self.cofactors)
            .map(|(&a, &di)| a * dp / di)
            .collect()
    }

    /// d″ = d / gcd_{a_i ≠ 0}(a_i·w_i): the order of the discriminant
    /// condition below.
    pub fn discriminant_order(&self) -> u64 {
        let mut g = 0u64;
        for (&a, &w) in self.deformation.iter().zip(&self.weights) {
            if a > 0 {
                g = gcd(g, a * w);
            }
        }
        self.degree / g
    }

    /// Quasi-smoothness of the fiber at λ̄ (an integer residue mod p).
    ///
    /// If some coordinate with a_i > 0 has p | a_i the fiber is always
    /// quasi-smooth. Otherwise the fiber is singular exactly when
    /// λ^{d″} = (−1)^{d″} d^{d″} / Π (a_i w_i)^{a_i w_i / g} in F_p,
    /// g = gcd of the a_i·w_i over involved coordinates.
    pub fn is_quasi_smooth(&self, p: u64, lambda: u64) -> bool {
        let involved: Vec<(u64, u64)> = self
            .deformation
            .iter()
            .zip(&self.weights)
            .filter(|(&a, _)| a > 0)
            .map(|(&a, &w)| (a, w))
            .collect();
        if involved.iter().any(|&(a, _)| a % p == 0) {
            return true;
        }
        let g = involved.iter().fold(0, |acc, &(a, w)| gcd(acc, a * w));
        let dpp = self.degree / g;
        // RHS = (−1)^{d″}·d^{d″} / Π (a_i w_i)^{a_i w_i / g} mod p
        let mut rhs = mod_pow(self.degree % p, dpp, p);
        if dpp % 2 == 1 {
            rhs = (p - rhs) % p;
        }
        let mut denom = 1u64;
        for &(a, w) in &involved {
            denom = denom * mod_pow(a * w % p, a * w / g, p) % p;
        }
        if denom == 0 {
            // some a_i·w_i ≡ 0 mod p with a_i ≢ 0: then w_i ≡ 0, degenerate
            // discriminant; treat the condition as never met
            return true;
        }
        let rhs = rhs * mod_pow(denom, p - 2, p) % p;
        mod_pow(lambda % p, dpp, p) != rhs
    }

    /// All admissible types, ordered lexicographically by exponent vector.
    pub fn admissible_types(&self) -> Vec<MonomialType> {
        let mut out = Vec::new();
        let coords = self.coords();
        let mut exps = vec![0u64; coords];
        loop {
            let wsum: u64 = exps
                .iter()
                .zip(&self.weights)
                .map(|(&k, &w)| w * (k + 1))
                .sum();
            if wsum.is_multiple_of(self.degree) {
                out.push(MonomialType {
                    exponents: exps.clone(),
                });
            }
            // odometer over k_i in [0, d_i - 2]
            let mut i = coords;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if exps[i] + 2 < self.cofactors[i] {
                    exps[i] += 1;
                    for e in exps.iter_mut().skip(i + 1) {
                        *e = 0;
                    }
                    break;
                }
                exps[i] = 0;
                if i == 0 {
                    return out;
                }
            }
        }
    }

    /// Build a type from its exponents, validating admissibility.
    pub fn type_from_exponents(&self, exponents: Vec<u64>) -> Result<MonomialType> {
        if exponents.len() != self.coords() {
            return Err(Error::InadmissibleType(exponents));
        }
        for (&k, &di) in exponents.iter().zip(&self.cofactors) {
            if k + 2 > di {
                return Err(Error::InadmissibleType(exponents));
            }
        }
        let wsum: u64 = exponents
            .iter()
            .zip(&self.weights)
            .map(|(&k, &w)| w * (k + 1))
            .sum();
        if !wsum.is_multiple_of(self.degree) {
            return Err(Error::InadmissibleType(exponents));
        }
        Ok(MonomialType { exponents })
    }

    /// Build a type from a type vector (entries v_i = w_i(k_i+1) mod d).
    /// Errors when some entry does not come from an in-range exponent.
    pub fn type_from_type_vector(&self, tv: &[u64]) -> Result<MonomialType> {
        if tv.len() != self.coords() {
            return Err(Error::InadmissibleType(tv.to_vec()));
        }
        let mut exps = Vec::with_capacity(tv.len());
        for ((&v, &w), &di) in tv.iter().zip(&self.weights).zip(&self.cofactors) {
            let v = v % self.degree;
            if v == 0 || !v.is_multiple_of(w) {
                return Err(Error::InadmissibleType(tv.to_vec()));
            }
            let k1 = v / w; // k_i + 1 in [1, d_i - 1]
            if k1 == 0 || k1 >= di {
                return Err(Error::InadmissibleType(tv.to_vec()));
            }
            exps.push(k1 - 1);
        }
        self.type_from_exponents(exps)
    }

    /// j₀ ∈ [0, d′) with type(to) = type(from) + j₀·a_type, when it exists.
    pub fn offset_between(&self, from: &MonomialType, to: &MonomialType) -> Option<u64> {
        let a = self.deformation_type();
        let dp = self.deformation_order();
        let vf = from.type_vector(self);
        let vt = to.type_vector(self);
        'j: for j in 0..dp {
            for i in 0..self.coords() {
                if (vf[i] + j * a[i]) % self.degree != vt[i] {
                    continue 'j;
                }
            }
            return Some(j);
        }
        None
    }

    /// Strong classes: admissible parts of the translation orbits, in order
    /// of their lexicographically smallest member.
    pub fn strong_classes(&self) -> Vec<StrongClass> {
        let all = self.admissible_types();
        let a = self.deformation_type();
        let dp = self.deformation_order();
        let mut seen = std::collections::HashSet::new();
        let mut classes = Vec::new();
        for t in &all {
            if seen.contains(t) {
                continue;
            }
            let mut members = Vec::new();
            let mut v = t.type_vector(self);
            for _ in 0..dp {
                if let Ok(m) = self.type_from_type_vector(&v) {
                    if seen.insert(m.clone()) {
                        members.push(m);
                    }
                }
                for (vi, &ai) in v.iter_mut().zip(&a) {
                    *vi = (*vi + ai) % self.degree;
                }
            }
            members.sort();
            classes.push(StrongClass { members });
        }
        classes
    }

    /// Scalings b (b_i mod d_i, acting as x_i ↦ ζ_d^{w_i b_i} x_i) that fix
    /// the deformation monomial: Σ b_i·w_i·a_i ≡ 0 mod d.
    fn family_automorphism_scalings(&self) -> Vec<Vec<u64>> {
        let coords = self.coords();
        let mut out = Vec::new();
        let mut b = vec![0u64; coords];
        loop {
            let pair: u64 = b
                .iter()
                .zip(&self.weights)
                .zip(&self.deformation)
                .map(|((&bi, &w), &a)| bi * w % self.degree * a % self.degree)
                .sum();
            if pair.is_multiple_of(self.degree) {
                out.push(b.clone());
            }
            let mut i = coords;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if b[i] + 1 < self.cofactors[i] {
                    b[i] += 1;
                    for x in b.iter_mut().skip(i + 1) {
                        *x = 0;
                    }
                    break;
                }
                b[i] = 0;
                if i == 0 {
                    return out;
                }
            }
        }
    }

    fn pairs_to_zero(&self, b: &[u64], tv: &[u64]) -> bool {
        let s: u64 = b
            .iter()
            .zip(self.weights.iter())
            .zip(tv)
            .map(|((&bi, &w), &v)| {
                let _ = w; // the type vector already carries the weight factor
                bi % self.degree * (v % self.degree) % self.degree
            })
            .sum();
        s.is_multiple_of(self.degree)
    }

    /// Some family-fixing scaling pairs to zero with v(x) but not with v(y).
    pub fn distinguishable_by_automorphisms(&self, x: &MonomialType, y: &MonomialType) -> bool {
        let tx = x.type_vector(self);
        let ty = y.type_vector(self);
        self.family_automorphism_scalings()
            .iter()
            .any(|b| self.pairs_to_zero(b, &tx) && !self.pairs_to_zero(b, &ty))
    }

    /// Ground-truth weak equivalence: no family-fixing scaling distinguishes
    /// the types in either order, i.e. equal annihilators.
    pub fn weakly_equivalent(&self, x: &MonomialType, y: &MonomialType) -> bool {
        !self.distinguishable_by_automorphisms(x, y)
            && !self.distinguishable_by_automorphisms(y, x)
    }

    /// Arithmetic criterion for weak equivalence: there exist units s, t in
    /// (Z/d)^* and an integer j with s·v(x) + t·v(y) ≡ j·a_type. Used as a
    /// cross-check of [`Family::weakly_equivalent`].
    pub fn weakly_equivalent_arith(&self, x: &MonomialType, y: &MonomialType) -> bool {
        let d = self.degree;
        let a = self.deformation_type();
        let tx = x.type_vector(self);
        let ty = y.type_vector(self);
        for s in 1..d {
            if gcd(s, d) != 1 {
                continue;
            }
            for t in 1..d {
                if gcd(t, d) != 1 {
                    continue;
                }
                'j: for j in 0..d {
                    for i in 0..self.coords() {
                        if (s * tx[i] + t * ty[i]) % d != j * a[i] % d {
                            continue 'j;
                        }
                    }
                    return true;
                }
            }
        }
        false
    }

    /// Weak classes as unions of strong classes, ordered by smallest member.
    ///
    /// Strong classes are first grouped by annihilator; each group is then
    /// split into minimal unions picking one strong class per distinct
    /// *shadow* (the sorted multiset of sorted type vectors). Unit scalings
    /// of Z/d permute the strong classes of a group transitively and the
    /// shadow is exactly what Jacobi sums see, so each such union carries a
    /// Galois-stable multiset of Jacobi sums and hence a rational factor;
    /// keeping the unions minimal makes the factors as fine as possible.
    pub fn weak_classes(&self) -> Vec<WeakClass> {
        let strong = self.strong_classes();
        let scalings = self.family_automorphism_scalings();
        // annihilator fingerprint of a type: bitmask over the scaling list
        let fingerprint = |t: &MonomialType| -> Vec<bool> {
            let tv = t.type_vector(self);
            scalings.iter().map(|b| self.pairs_to_zero(b, &tv)).collect()
        };
        let fps: Vec<Vec<bool>> = strong
            .iter()
            .map(|class| {
                let fp = fingerprint(&class.members[0]);
                // annihilators are constant along a strong class
                debug_assert!(class.members.iter().all(|m| fingerprint(m) == fp));
                fp
            })
            .collect();
        let shadows: Vec<Vec<Vec<u64>>> = strong
            .iter()
            .map(|class| {
                let mut s: Vec<Vec<u64>> = class
                    .members
                    .iter()
                    .map(|m| {
                        let mut tv = m.type_vector(self);
                        tv.sort_unstable();
                        tv
                    })
                    .collect();
                s.sort();
                s
            })
            .collect();
        let mut assigned = vec![false; strong.len()];
        let mut out: Vec<WeakClass> = Vec::new();
        for i in 0..strong.len() {
            if assigned[i] {
                continue;
            }
            let mates: Vec<usize> = (i..strong.len())
                .filter(|&j| !assigned[j] && fps[j] == fps[i])
                .collect();
            // one strong class per distinct shadow, first come first served
            let mut picks: Vec<usize> = Vec::new();
            for &j in &mates {
                if picks.iter().all(|&k| shadows[k] != shadows[j]) {
                    picks.push(j);
                }
            }
            let mut members: Vec<MonomialType> = Vec::new();
            for &j in &picks {
                assigned[j] = true;
                members.extend(strong[j].members.iter().cloned());
            }
            members.sort();
            out.push(WeakClass {
                strong_members: picks,
                members,
            });
        }
        out.sort_by(|a, b| a.members[0].cmp(&b.members[0]));
        out
    }

    /// Image of a type under the q-power Frobenius: v ↦ q·v mod d.
    pub fn frobenius_image(&self, t: &MonomialType, q: u64) -> Result<MonomialType> {
        let tv: Vec<u64> = t
            .type_vector(self)
            .iter()
            .map(|&v| v * (q % self.degree) % self.degree)
            .collect();
        self.type_from_type_vector(&tv)
    }
}

impl MonomialType {
    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    /// Type vector v_i = w_i(k_i + 1); entries lie in (0, d) exactly.
    pub fn type_vector(&self, family: &Family) -> Vec<u64> {
        self.exponents
            .iter()
            .zip(family.weights())
            .map(|(&k, &w)| w * (k + 1))
            .collect()
    }

    /// Relative degree t = Σ w_i(k_i + 1) / d, an integer in [1, n].
    pub fn relative_degree(&self, family: &Family) -> u64 {
        let wsum: u64 = self
            .exponents
            .iter()
            .zip(family.weights())
            .map(|(&k, &w)| w * (k + 1))
            .sum();
        wsum / family.degree()
    }

    /// Conjugate type, v ↦ −v mod d (always admissible).
    pub fn conjugate(&self, family: &Family) -> MonomialType {
        let exps = self
            .exponents
            .iter()
            .zip(family.cofactors())
            .map(|(&k, &di)| di - 2 - k)
            .collect();
        MonomialType { exponents: exps }
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
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

#[cfg(test)]
mod tests {
    use super::*;

    fn hesse() -> Family {
        Family::new(vec![1, 1, 1], 3, vec![1, 1, 1]).unwrap()
    }

    fn quintic() -> Family {
        Family::new(vec![1; 5], 5, vec![1; 5]).unwrap()
    }

    fn quartic_220() -> Family {
        Family::new(vec![1, 1, 1], 4, vec![2, 2, 0]).unwrap()
    }

    fn quartic_112() -> Family {
        Family::new(vec![1, 1, 1], 4, vec![1, 1, 2]).unwrap()
    }

    #[test]
    fn family_validation() {
        assert!(Family::new(vec![1, 1, 1], 3, vec![1, 1, 2]).is_err()); // degree 4 ≠ 3
        assert!(Family::new(vec![1, 1, 1], 3, vec![3, 0, 0]).is_err()); // one coordinate
        assert!(Family::new(vec![2, 1, 1], 3, vec![1, 1, 1]).is_err()); // 2 ∤ 3
        assert!(Family::new(vec![1, 1], 4, vec![4, 0]).is_err()); // a_i ≥ d_i
        assert!(Family::new(vec![1, 1, 2], 4, vec![2, 2, 0]).is_ok()); // weighted elliptic
    }

    #[test]
    fn hesse_types_and_degrees() {
        let f = hesse();
        let types = f.admissible_types();
        assert_eq!(types.len(), 2);
        assert_eq!(types[0].exponents(), &[0, 0, 0]);
        assert_eq!(types[0].type_vector(&f), vec![1, 1, 1]);
        assert_eq!(types[0].relative_degree(&f), 1);
        assert_eq!(types[1].exponents(), &[1, 1, 1]);
        assert_eq!(types[1].relative_degree(&f), 2);
        assert_eq!(types[0].conjugate(&f), types[1]);
        assert_eq!(f.deformation_order(), 3);
        assert_eq!(f.discriminant_order(), 3);
    }

    #[test]
    fn hesse_offsets_and_classes() {
        let f = hesse();
        let types = f.admissible_types();
        assert_eq!(f.offset_between(&types[0], &types[1]), Some(1));
        assert_eq!(f.offset_between(&types[1], &types[0]), Some(2));
        assert_eq!(f.offset_between(&types[0], &types[0]), Some(0));
        let strong = f.strong_classes();
        assert_eq!(strong.len(), 1);
        assert_eq!(strong[0].members.len(), 2);
        let weak = f.weak_classes();
        assert_eq!(weak.len(), 1);
        assert!(f.weakly_equivalent(&types[0], &types[1]));
    }

    #[test]
    fn quintic_census() {
        let f = quintic();
        let types = f.admissible_types();
        assert_eq!(types.len(), 204);
        let strong = f.strong_classes();
        assert_eq!(strong.len(), 101);
        let mut sizes: Vec<usize> = strong.iter().map(|c| c.members.len()).collect();
        sizes.sort();
        assert_eq!(sizes[100], 4); // one orbit of full size (the diagonal one)
        assert!(sizes[..100].iter().all(|&s| s == 2));
        let weak = f.weak_classes();
        assert_eq!(weak.len(), 51);
        assert!(weak.iter().all(|w| w.members.len() == 4));
        let shadow = |m: &MonomialType| {
            let mut tv = m.type_vector(&f);
            tv.sort_unstable();
            tv
        };
        for wc in &weak {
            // members of one class are pairwise weakly equivalent, and the
            // class is conjugation-closed up to coordinate permutation
            for m in &wc.members {
                assert!(f.weakly_equivalent(m, &wc.members[0]));
                let c = shadow(&m.conjugate(&f));
                assert!(wc.members.iter().any(|x| shadow(x) == c));
            }
        }
    }

    #[test]
    fn quintic_equivalence_verdicts() {
        let f = quintic();
        let x = f.type_from_exponents(vec![0, 0, 0, 2, 3]).unwrap();
        let y = f.type_from_exponents(vec![1, 1, 1, 0, 2]).unwrap();
        let z = f.type_from_exponents(vec![0, 0, 1, 1, 3]).unwrap();
        assert!(f.weakly_equivalent(&x, &y));
        assert!(!f.weakly_equivalent(&x, &z));
        assert!(f.distinguishable_by_automorphisms(&x, &z));
        // x and y sit in different strong classes (their difference is not a
        // multiple of the deformation vector) but in one weak class
        assert_eq!(f.offset_between(&x, &y), None);
        let weak = f.weak_classes();
        let wx = weak.iter().position(|w| w.members.contains(&x)).unwrap();
        assert!(weak[wx].members.contains(&y));
        assert!(!weak[wx].members.contains(&z));
    }

    #[test]
    fn quartic_class_structures() {
        let f = quartic_220();
        assert_eq!(f.deformation_order(), 2);
        assert_eq!(f.discriminant_order(), 2);
        let types = f.admissible_types();
        assert_eq!(types.len(), 6);
        let strong = f.strong_classes();
        let sizes: Vec<usize> = strong.iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 2).count(), 1);
        assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 4);
        assert_eq!(f.weak_classes().len(), 3);

        let f = quartic_112();
        assert_eq!(f.deformation_order(), 4);
        assert_eq!(f.discriminant_order(), 4);
        let strong = f.strong_classes();
        assert_eq!(strong.len(), 3);
        assert!(strong.iter().all(|c| c.members.len() == 2));
    }

    #[test]
    fn weighted_elliptic_family() {
        let f = Family::new(vec![1, 1, 2], 4, vec![2, 2, 0]).unwrap();
        assert_eq!(f.cofactors(), &[4, 4, 2]);
        let types = f.admissible_types();
        assert_eq!(types.len(), 2);
        assert_eq!(types[0].type_vector(&f), vec![1, 1, 2]);
        assert_eq!(types[1].type_vector(&f), vec![3, 3, 2]);
        let strong = f.strong_classes();
        assert_eq!(strong.len(), 1);
        assert_eq!(strong[0].members.len(), 2);
    }

    #[test]
    fn type_vector_roundtrip() {
        let f = quintic();
        for t in f.admissible_types() {
            let tv = t.type_vector(&f);
            assert_eq!(f.type_from_type_vector(&tv).unwrap(), t);
        }
        assert!(f.type_from_type_vector(&[0, 1, 1, 1, 2]).is_err());
    }

    #[test]
    fn quasi_smoothness_tables() {
        let hesse = hesse();
        let qs: Vec<u64> = (0..7).filter(|&l| hesse.is_quasi_smooth(7, l)).collect();
        assert_eq!(qs, vec![0, 3, 5, 6]);

        let q220 = quartic_220();
        let qs: Vec<u64> = (0..5).filter(|&l| q220.is_quasi_smooth(5, l)).collect();
        assert_eq!(qs, vec![0, 1, 4]);

        let q112 = quartic_112();
        let qs: Vec<u64> = (0..5).filter(|&l| q112.is_quasi_smooth(5, l)).collect();
        assert_eq!(qs, vec![0, 1, 2, 3, 4]);

        let quintic = quintic();
        let sing: Vec<u64> = (0..11).filter(|&l| !quintic.is_quasi_smooth(11, l)).collect();
        assert_eq!(sing, vec![2, 6, 7, 8, 10]);
    }

    #[test]
    fn strong_refines_weak_and_criteria_agree_on_small_families() {
        for f in [hesse(), quartic_220(), quartic_112()] {
            let types = f.admissible_types();
            for x in &types {
                for y in &types {
                    assert_eq!(
                        f.weakly_equivalent(x, y),
                        f.weakly_equivalent_arith(x, y),
                        "criteria disagree on {:?} vs {:?}",
                        x,
                        y
                    );
                }
            }
        }
    }

    #[test]
    fn frobenius_image_is_identity_when_q_is_1_mod_d() {
        let f = hesse();
        for t in f.admissible_types() {
            assert_eq!(f.frobenius_image(&t, 7).unwrap(), t);
        }
        // q = 5 ≡ 2 mod 3 swaps the two Hesse types
        let types = f.admissible_types();
        assert_eq!(f.frobenius_image(&types[0], 5).unwrap(), types[1]);
    }
}
