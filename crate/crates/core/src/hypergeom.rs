//! Hypergeometric expansion of the deformation matrix.
//!
//! Moving a basis form along the family trades the deformation monomial for
//! powers of λ: expanding 1/F_λ^{t} = Σ_j binom(t+j−1, j)(−λ)^j x^{ja}/F^{t+j}
//! and reducing every term decomposes the image of ω_k over the strong class
//! of k. The coefficient attached to the target k + j₀·a collects the orders
//! j₀, j₀+d′, j₀+2d′, … and is a generalized hypergeometric series
//!
//!   c(λ) = (−λ)^{j₀} · C · ρ · ₍d′₎F₍d′₋₁₎(α; β; κ(−λ)^{d′})
//!
//! with C = binom(t+j₀−1, j₀), ρ the closed-form reduction coefficient of the
//! exponents k + j₀·a at pole t + j₀, upper parameters
//! α_{i,s} = ((s−1)d_i + 1 + a_i·j₀ + k_i)/(a_i·d′) for s = 1..b_i over the
//! coordinates with a_i ≠ 0, lower parameters {(j₀+s)/d′ : s = 1..d′} with
//! the single entry 1 removed, and κ = Π_{a_i≠0} (a_i/d_i)^{b_i}. Here
//! d′ is the order of the deformation in the type group and b_i = a_i·d′/d_i,
//! so Σ b_i = d′.
//!
//! Stacking the coefficients per class gives the matrix series A(λ) with
//! A(0) = I. The composite
//!
//!   M(λ) = A(λ)⁻¹ · diag(c) · A(λ^q)
//!
//! (c the Fermat Frobenius constants) extends to the closed unit disc even
//! though A(λ) alone does not; its λ-coefficients tend to zero p-adically.
//! Individual hypergeometric coefficients have p-adically unbounded
//! denominators, only the composite is p-integral. Two routes expand it:
//! [`composite_series`] keeps every coefficient exact-rational until a final
//! embedding, and [`RawBlockSeries::solve_composite`] solves
//! A(λ^q)·X = Δ(λ^q)^clearing·diag(c)·A(λ) directly in a fixed-precision
//! ring, losing a p-power headroom that the exact denominator depths of A
//! and of a short prefix of A⁻¹ bound in advance. The rational route is the
//! reference; the ring route is what makes large truncation orders cheap.
//!
//! Conventions
//!
//! * Matrix coefficients are indexed `coeffs[e][row][col]`: column = source
//!   class member, row = target, members in sorted order.
//! * A series truncated at order L holds coefficients of λ^0 … λ^L
//!   inclusive.
//! * Evaluation at a Teichmüller point is accepted only when the trailing
//!   `tail_window` coefficient matrices all vanish at ring precision; the
//!   caller provides headroom by sizing the ring above the precision it
//!   intends to consume.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{Family, MonomialType, StrongClass};
use crate::intpoly::binomial;
use crate::padic::{ZqElement, ZqMatrix, ZqRing};
use crate::reduction::{complete_reduction, PoleForm};

/// One entry of the deformation matrix in closed form: the data of
/// prefactor · ₍d′₎F₍d′₋₁₎(α; β; κ(−λ)^{d′}) sending the source basis form to
/// the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HypergeometricSpec {
    pub source: MonomialType,
    pub target: MonomialType,
    /// j₀: λ-exponent of the prefactor; the series is supported on
    /// exponents ≡ j₀ mod `period`.
    pub shift: u64,
    /// C = binom(t + j₀ − 1, j₀), t the relative degree of the source.
    pub binomial: BigInt,
    /// ρ: reduction coefficient of the exponents k + j₀·a at pole t + j₀.
    pub reduction: BigRational,
    /// Upper parameters α (d′ entries before cancellation), sorted.
    pub upper: Vec<BigRational>,
    /// Lower parameters β (d′ − 1 entries before cancellation), sorted.
    pub lower: Vec<BigRational>,
    /// κ: the series argument is κ·(−λ)^{d′}.
    pub argument_scale: BigRational,
    /// d′.
    pub period: u64,
}

impl HypergeometricSpec {
    /// C·ρ, the unsigned rational prefactor; the full prefactor of the
    /// matrix entry is C·ρ·(−λ)^{shift}.
    pub fn prefactor(&self) -> BigRational {
        BigRational::from_integer(self.binomial.clone()) * &self.reduction
    }

    /// Signed argument coefficient κ·(−1)^{d′}: the argument as a rational
    /// multiple of λ^{d′}.
    pub fn argument_coefficient(&self) -> BigRational {
        if self.period % 2 == 1 {
            -self.argument_scale.clone()
        } else {
            self.argument_scale.clone()
        }
    }

    /// LaTeX form `prefactor · ₚF_q(α; β; z)` of the matrix entry; a bare
    /// prefactor 1 is omitted.
    pub fn latex(&self) -> String {
        let mut out = String::new();
        let pref = self.prefactor();
        let signed = if self.shift % 2 == 1 { -pref } else { pref };
        if self.shift > 0 || !signed.is_one() {
            out.push_str(&latex_lambda_multiple(&signed, self.shift));
            out.push_str(" \\, ");
        }
        let upper = latex_parameter_row(&self.upper);
        let lower = if self.lower.is_empty() {
            "-".to_string()
        } else {
            latex_parameter_row(&self.lower)
        };
        out.push_str(&format!(
            "{{}}_{{{}}}F_{{{}}}\\left( \\begin{{matrix}} {} \\\\ {} \\end{{matrix}} ; {} \\right)",
            self.upper.len(),
            self.lower.len(),
            upper,
            lower,
            latex_lambda_multiple(&self.argument_coefficient(), self.period),
        ));
        out
    }
}

fn latex_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        format!("{}", x.numer())
    } else if x.numer().is_negative() {
        format!("-\\frac{{{}}}{{{}}}", -x.numer(), x.denom())
    } else {
        format!("\\frac{{{}}}{{{}}}", x.numer(), x.denom())
    }
}

/// c·λ^e as LaTeX, keeping signs outside the fraction bar.
fn latex_lambda_multiple(c: &BigRational, e: u64) -> String {
    let lam = match e {
        0 => String::new(),
        1 => "\\lambda".to_string(),
        _ => format!("\\lambda^{{{e}}}"),
    };
    if e == 0 {
        return latex_rational(c);
    }
    if c.is_one() {
        return lam;
    }
    if (-c.clone()).is_one() {
        return format!("-{lam}");
    }
    let sign = if c.is_negative() { "-" } else { "" };
    let a = c.abs();
    if a.denom().is_one() {
        format!("{sign}{}{lam}", a.numer())
    } else if a.numer().is_one() {
        format!("{sign}\\frac{{{lam}}}{{{}}}", a.denom())
    } else {
        format!("{sign}\\frac{{{}{lam}}}{{{}}}", a.numer(), a.denom())
    }
}

fn latex_parameter_row(params: &[BigRational]) -> String {
    params
        .iter()
        .map(latex_rational)
        .collect::<Vec<_>>()
        .join(" \\; ")
}

/// κ = Π_{a_i≠0} (a_i/d_i)^{b_i}: the common scale of the hypergeometric
/// argument κ(−λ)^{d′} shared by every block of the family.
fn argument_scale(family: &Family) -> BigRational {
    family
        .deformation()
        .iter()
        .zip(family.cofactors())
        .zip(&family.hypergeometric_multiplicities())
        .filter(|((&ai, _), _)| ai != 0)
        .map(|((&ai, &d), &b)| {
            let base = BigRational::new(BigInt::from(ai), BigInt::from(d));
            num::pow::pow(base, b as usize)
        })
        .product()
}

/// κ̃ = (−1)^{d′}·κ, the signed argument coefficient, so the discriminant
/// factor of the family is Δ(λ) = 1 − κ̃·λ^{d′}.
pub fn discriminant_scale(family: &Family) -> BigRational {
    let kappa = argument_scale(family);
    if family.deformation_order() % 2 == 1 {
        -kappa
    } else {
        kappa
    }
}

/// val_p of a nonzero integer.
fn int_valuation(n: &BigInt, big_p: &BigInt) -> u32 {
    let mut v = 0u32;
    let mut rest = n.clone();
    while (&rest % big_p).is_zero() {
        rest /= big_p;
        v += 1;
    }
    v
}

/// All nonzero closed-form entries of the A(λ) column indexed by the source
/// type `k`: one spec per shift j₀ ∈ [0, d′) whose reduction coefficient is
/// nonzero. Parameter lists are kept uncancelled; see [`canonicalize_spec`].
pub fn deformation_block_specs(
    family: &Family,
    k: &MonomialType,
) -> Result<Vec<HypergeometricSpec>> {
    let dp = family.deformation_order();
    let mult = family.hypergeometric_multiplicities();
    let a = family.deformation();
    let di = family.cofactors();
    let t = k.relative_degree(family);
    let kappa = argument_scale(family);

    let mut specs = Vec::new();
    for j0 in 0..dp {
        let exponents: Vec<u64> = k
            .exponents()
            .iter()
            .zip(a)
            .map(|(&ki, &ai)| ki + j0 * ai)
            .collect();
        let form = PoleForm::new(family, exponents, t + j0)?;
        let red = complete_reduction(family, &form);
        if red.zero {
            continue;
        }
        let target = family.type_from_exponents(red.exponents.clone())?;

        let mut upper = Vec::with_capacity(dp as usize);
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for s in 1..=mult[i] {
                upper.push(BigRational::new(
                    BigInt::from((s - 1) * di[i] + 1 + ai * j0 + k.exponents()[i]),
                    BigInt::from(ai * dp),
                ));
            }
        }
        let mut lower = Vec::with_capacity(dp as usize - 1);
        for s in 1..=dp {
            if j0 + s == dp {
                continue;
            }
            lower.push(BigRational::new(BigInt::from(j0 + s), BigInt::from(dp)));
        }
        upper.sort();
        lower.sort();
        debug_assert_eq!(upper.len() as u64, dp);
        debug_assert_eq!(lower.len() as u64, dp - 1);

        specs.push(HypergeometricSpec {
            source: k.clone(),
            target,
            shift: j0,
            binomial: binomial(t + j0 - 1, j0),
            reduction: red.rho,
            upper,
            lower,
            argument_scale: kappa.clone(),
            period: dp,
        });
    }
    Ok(specs)
}

/// Cancel equal upper/lower parameter pairs (multiset cancellation); the
/// series value is unchanged.
pub fn canonicalize_spec(spec: &HypergeometricSpec) -> HypergeometricSpec {
    let mut lower = spec.lower.clone();
    let mut upper = Vec::with_capacity(spec.upper.len());
    for alpha in &spec.upper {
        if let Some(pos) = lower.iter().position(|beta| beta == alpha) {
            lower.remove(pos);
        } else {
            upper.push(alpha.clone());
        }
    }
    upper.sort();
    lower.sort();
    HypergeometricSpec {
        upper,
        lower,
        ..spec.clone()
    }
}

/// Coefficients of λ^0 … λ^L of the series attached to `spec`:
/// the coefficient of λ^{j₀+d′·j} is (−1)^{j₀+d′j}·C·ρ·h_j·κ^j with h_0 = 1
/// and h_{j+1}/h_j = Π(j+α) / [Π(j+β)·(j+1)]; all other coefficients vanish.
pub fn series_coefficients(spec: &HypergeometricSpec, l: usize) -> Result<Vec<BigRational>> {
    for beta in &spec.lower {
        if beta.denom().is_one() && !beta.numer().is_positive() {
            return Err(Error::InvalidFamily(format!(
                "lower hypergeometric parameter {beta} is a non-positive integer"
            )));
        }
    }
    let mut out = vec![BigRational::zero(); l + 1];
    let scale = spec.prefactor();
    if scale.is_zero() {
        return Ok(out);
    }
    let mut h = BigRational::one();
    let mut kappa_pow = BigRational::one();
    let mut j = 0u64;
    loop {
        let e = spec.shift + spec.period * j;
        if e > l as u64 {
            break;
        }
        let term = &scale * &h * &kappa_pow;
        out[e as usize] = if e % 2 == 1 { -term } else { term };

        let jr = BigRational::from_integer(BigInt::from(j));
        let mut num = BigRational::one();
        for alpha in &spec.upper {
            num *= &jr + alpha;
        }
        let mut den = &jr + BigRational::one();
        for beta in &spec.lower {
            den *= &jr + beta;
        }
        h *= num / den;
        kappa_pow *= &spec.argument_scale;
        j += 1;
    }
    Ok(out)
}

/// Exact-rational λ-expansion a[e][row][col] of the deformation matrix A(λ)
/// on one strong class, truncated at order L. A(0) is the identity.
fn deformation_matrix_series(
    family: &Family,
    class: &StrongClass,
    l: usize,
) -> Result<Vec<Vec<Vec<BigRational>>>> {
    let g = class.members.len();
    let mut a = vec![vec![vec![BigRational::zero(); g]; g]; l + 1];
    for (col, k) in class.members.iter().enumerate() {
        for spec in deformation_block_specs(family, k)? {
            let row = class
                .members
                .binary_search(&spec.target)
                .expect("reduction target stays inside the strong class");
            for (e, c) in series_coefficients(&spec, l)?.into_iter().enumerate() {
                if !c.is_zero() {
                    a[e][row][col] = c;
                }
            }
        }
    }
    Ok(a)
}

fn rational_identity(g: usize) -> Vec<Vec<BigRational>> {
    let mut m = vec![vec![BigRational::zero(); g]; g];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigRational::one();
    }
    m
}

/// acc −= x·y for g×g rational matrices, skipping zero entries.
fn sub_mul_into(acc: &mut [Vec<BigRational>], x: &[Vec<BigRational>], y: &[Vec<BigRational>]) {
    let g = acc.len();
    for r in 0..g {
        for (u, xu) in x[r].iter().enumerate() {
            if xu.is_zero() {
                continue;
            }
            for c in 0..g {
                if !y[u][c].is_zero() {
                    acc[r][c] -= xu * &y[u][c];
                }
            }
        }
    }
}

/// Coefficients of the series inverse: inv[0] = I and
/// inv[e] = −Σ_{f=1..e} inv[e−f]·a[f].
fn series_inverse(a: &[Vec<Vec<BigRational>>]) -> Vec<Vec<Vec<BigRational>>> {
    let g = a[0].len();
    let mut inv: Vec<Vec<Vec<BigRational>>> = Vec::with_capacity(a.len());
    inv.push(rational_identity(g));
    for e in 1..a.len() {
        let mut m = vec![vec![BigRational::zero(); g]; g];
        for f in 1..=e {
            sub_mul_into(&mut m, &inv[e - f], &a[f]);
        }
        inv.push(m);
    }
    inv
}

/// Exact-rational composite data of M(λ) = A(λ^q)⁻¹·diag(c)·A(λ) on one
/// strong class, kept as one rational series per class member u so that the
/// λ^e-coefficient of M is Σ_u c_u · per_member[u][e].
///
/// A(λ) transports cohomology classes from the fiber at λ to the fiber at 0,
/// so Frobenius at λ factors through the diagonal Fermat action as
/// A(λ^q)⁻¹ ∘ diag(c) ∘ A(λ). Each entry of M is a rigid function on the
/// closed unit λ-disc minus the singular residue discs (where the common
/// hypergeometric argument z = κ̃λ^{d′} hits 1), so its λ-coefficients are
/// p-integral but do not decay; see [`Self::cleared`].
#[derive(Debug, Clone)]
pub struct CompositeSeries {
    pub members: Vec<MonomialType>,
    pub order: usize,
    /// Frobenius power: A(λ^q)⁻¹ is the stretched inverse series.
    pub q: u64,
    /// Signed coefficient κ̃ = (−1)^{d′}·κ of the hypergeometric argument,
    /// so the discriminant factor is Δ(λ) = 1 − κ̃·λ^{d′}.
    pub discriminant_scale: BigRational,
    /// d′, the λ-period of the block.
    pub period: u64,
    /// How many factors of Δ(λ^q) have been multiplied in.
    pub pole_clearing: u32,
    /// per_member[u][e][row][col] = Σ_f A⁻¹[f]_{row,u} · A[e−qf]_{u,col}.
    per_member: Vec<Vec<Vec<Vec<BigRational>>>>,
}

/// Expand the composite series on `class` to order L for the Frobenius power
/// q. Requires q ≡ 1 mod d so the class is Frobenius-stable.
pub fn composite_series(
    family: &Family,
    class: &StrongClass,
    q: u64,
    l: usize,
) -> Result<CompositeSeries> {
    if q % family.degree() != 1 {
        return Err(Error::IncompatibleResidue {
            q,
            d: family.degree(),
        });
    }
    let g = class.members.len();
    let a = deformation_matrix_series(family, class, l)?;
    let inv = series_inverse(&a);

    let mut per_member = vec![vec![vec![vec![BigRational::zero(); g]; g]; l + 1]; g];
    for (u, series) in per_member.iter_mut().enumerate() {
        for (e, out) in series.iter_mut().enumerate() {
            for m in 0..=(e as u64 / q) {
                let f = (m * q) as usize;
                for r in 0..g {
                    let left = &inv[m as usize][r][u];
                    if left.is_zero() {
                        continue;
                    }
                    for c in 0..g {
                        let right = &a[e - f][u][c];
                        if !right.is_zero() {
                            out[r][c] += left * right;
                        }
                    }
                }
            }
        }
    }
    Ok(CompositeSeries {
        members: class.members.clone(),
        order: l,
        q,
        discriminant_scale: discriminant_scale(family),
        period: family.deformation_order(),
        pole_clearing: 0,
        per_member,
    })
}

impl CompositeSeries {
    /// Multiply every entry by Δ(λ^q)^power, Δ(λ) = 1 − κ̃λ^{d′}.
    ///
    /// The entries of M have poles at the singular parameters λ^{d′} = 1/κ̃
    /// of p-adic depth growing with the pole order, so the raw coefficients
    /// plateau at a fixed valuation instead of decaying. The inverse-factor
    /// poles sit in the λ^q variable; each Δ(λ^q) factor raises the
    /// coefficient-valuation plateau, and the product becomes a polynomial
    /// mod p^N for power ≈ N. Evaluation divides the scalar Δ(λ₀)^power back
    /// out (λ₀^q = λ₀ at a Teichmüller point).
    pub fn cleared(&self, power: u32) -> CompositeSeries {
        if power == 0 {
            return self.clone();
        }
        let g = self.members.len();
        let step = (self.q * self.period) as usize;
        // Δ(λ^q)^power = Σ_i binom(power, i)·(−κ̃)^i·λ^{q·d′·i}
        let mut factor = vec![BigRational::zero(); self.order + 1];
        for i in 0..=(power as u64) {
            let e = (i as usize).saturating_mul(step);
            if e > self.order {
                break;
            }
            factor[e] = BigRational::from_integer(crate::intpoly::binomial(power as u64, i))
                * (-&self.discriminant_scale).pow(i as i32);
        }
        let mut per_member = vec![vec![vec![vec![BigRational::zero(); g]; g]; self.order + 1]; g];
        for (u, series) in per_member.iter_mut().enumerate() {
            for (e, out) in series.iter_mut().enumerate() {
                for (f, scale) in factor.iter().enumerate().take(e + 1).step_by(step.max(1)) {
                    if scale.is_zero() {
                        continue;
                    }
                    for (r, out_row) in out.iter_mut().enumerate() {
                        for (c, out_x) in out_row.iter_mut().enumerate() {
                            let x = &self.per_member[u][e - f][r][c];
                            if !x.is_zero() {
                                *out_x += scale * x;
                            }
                        }
                    }
                }
            }
        }
        CompositeSeries {
            members: self.members.clone(),
            order: self.order,
            q: self.q,
            discriminant_scale: self.discriminant_scale.clone(),
            period: self.period,
            pole_clearing: self.pole_clearing + power,
            per_member,
        }
    }

    /// Largest power of p appearing in any denominator: the precision
    /// headroom the embedding ring must carry on top of the output ring.
    pub fn denominator_padding(&self, p: u64) -> u32 {
        let big_p = BigInt::from(p);
        let mut pad = 0u32;
        for series in &self.per_member {
            for mat in series {
                for row in mat {
                    for x in row {
                        if !x.is_zero() {
                            pad = pad.max(int_valuation(x.denom(), &big_p));
                        }
                    }
                }
            }
        }
        pad
    }

    /// Pair the rational data with the Fermat constants and embed into Z_q:
    /// each coefficient Σ_u c_u·s_u is assembled at the padded precision and
    /// divided down exactly, so p-power denominators cancel against the
    /// positive valuation of the sum. `constants` live in `padded`, which
    /// must exceed `out` by at least [`Self::denominator_padding`].
    pub fn embed(
        &self,
        constants: &[ZqElement],
        padded: &ZqRing,
        out: &ZqRing,
    ) -> Result<LambdaSeriesMatrix> {
        let g = self.members.len();
        assert_eq!(constants.len(), g, "one Fermat constant per class member");
        for c in constants {
            padded.ensure_owned(c)?;
        }
        let pad = self.denominator_padding(out.p());
        if padded.p() != out.p()
            || padded.r() != out.r()
            || padded.precision() < out.precision() + pad
        {
            return Err(Error::PrecisionInsufficient {
                have: padded.precision(),
                need: format!(
                    "{} + denominator padding {pad}; raise the padded ring precision",
                    out.precision()
                ),
            });
        }
        let scale = BigRational::from_integer(BigInt::from(padded.p()).pow(pad));

        let mut coeffs = Vec::with_capacity(self.order + 1);
        for e in 0..=self.order {
            let mut mat = vec![vec![out.zero(); g]; g];
            for (r, mat_row) in mat.iter_mut().enumerate() {
                for (c, mat_x) in mat_row.iter_mut().enumerate() {
                    let mut acc = padded.zero();
                    for (u, cu) in constants.iter().enumerate() {
                        let s = &self.per_member[u][e][r][c];
                        if s.is_zero() {
                            continue;
                        }
                        let lifted = padded.embed_ratio(&(s * &scale))?;
                        acc = padded.add(&acc, &padded.mul(&lifted, cu));
                    }
                    let exact = padded.exact_div_pow_p(&acc, pad).map_err(|_| {
                        Error::NonIntegralSeries(format!(
                            "coefficient of λ^{e} at ({r},{c}) has valuation below \
                             the denominator padding {pad}; raise the series order \
                             or the working precision"
                        ))
                    })?;
                    *mat_x = out.truncate_from(&exact)?;
                }
            }
            coeffs.push(mat);
        }
        Ok(LambdaSeriesMatrix {
            members: self.members.clone(),
            ring: out.clone(),
            discriminant_scale: self.discriminant_scale.clone(),
            period: self.period,
            pole_clearing: self.pole_clearing,
            coeffs,
        })
    }
}

/// Exact λ-expansion of the transport A(λ) on one strong class, with the
/// largest p-power denominator among its coefficients. Generating A is the
/// cheap half of the composite (one one-dimensional rational recurrence per
/// closed-form entry); [`Self::solve_composite`] carries out the expensive
/// product in fixed-precision ring arithmetic instead of exact rationals,
/// which keeps large truncation orders affordable.
#[derive(Debug, Clone)]
pub struct RawBlockSeries {
    pub members: Vec<MonomialType>,
    pub order: usize,
    /// κ̃ with Δ(λ) = 1 − κ̃λ^{d′}.
    pub discriminant_scale: BigRational,
    /// d′, the λ-period of the block.
    pub period: u64,
    /// s = max val_p over the coefficient denominators of A: the shift
    /// making p^s·A(λ) p-integral.
    pub denominator_depth: u32,
    a: Vec<Vec<Vec<BigRational>>>,
}

/// Expand A(λ) on `class` to order L, recording the denominator depth at p.
pub fn raw_block_series(
    family: &Family,
    class: &StrongClass,
    l: usize,
    p: u64,
) -> Result<RawBlockSeries> {
    let a = deformation_matrix_series(family, class, l)?;
    let big_p = BigInt::from(p);
    let mut depth = 0u32;
    for mat in &a {
        for row in mat {
            for x in row {
                if !x.is_zero() {
                    depth = depth.max(int_valuation(x.denom(), &big_p));
                }
            }
        }
    }
    Ok(RawBlockSeries {
        members: class.members.clone(),
        order: l,
        discriminant_scale: discriminant_scale(family),
        period: family.deformation_order(),
        denominator_depth: depth,
        a,
    })
}

impl RawBlockSeries {
    /// Denominator depth at p of A⁻¹ truncated at order ⌊L/q⌋, the largest
    /// order at which the stretched factor A(λ^q)⁻¹ contributes below λ^L.
    ///
    /// This bounds the digits the ring solve can lose: the error E of the
    /// stored solution satisfies the defining relation with the per-step
    /// roundings as right-hand side, so E = A(λ^q)⁻¹·(roundings) and
    /// val E ≥ headroom − denominator_depth − inverse_depth. Truncating at
    /// ⌊L/q⌋ keeps this exact computation q²-fold cheaper than the full
    /// rational composite.
    pub fn inverse_depth(&self, q: u64, p: u64) -> u32 {
        let cut = self.order / q.max(1) as usize;
        let inv = series_inverse(&self.a[..=cut]);
        let big_p = BigInt::from(p);
        let mut depth = 0u32;
        for mat in &inv {
            for row in mat {
                for x in row {
                    if !x.is_zero() {
                        depth = depth.max(int_valuation(x.denom(), &big_p));
                    }
                }
            }
        }
        depth
    }

    /// M(λ)·Δ(λ^q)^clearing truncated at λ^L in `out`, found by solving
    ///
    ///   A(λ^q)·X = Δ(λ^q)^clearing·diag(c)·A(λ)
    ///
    /// coefficient by coefficient in `work`: with Ā = p^s·A made integral by
    /// the denominator depth s, each step computes
    ///
    ///   X[e] = (Δ-convolved (diag(c)·Ā)[e] − Σ_{f≥1} Ā[f]·X[e−qf]) / p^s,
    ///
    /// and the division is exact because X is the p-integral composite. The
    /// result agrees with the exact-rational route modulo p^{W−s−s_inv}
    /// (W the working precision, s_inv = [`Self::inverse_depth`]), so `work`
    /// must exceed `out` by at least s + s_inv.
    pub fn solve_composite(
        &self,
        q: u64,
        clearing: u32,
        constants: &[ZqElement],
        work: &ZqRing,
        out: &ZqRing,
    ) -> Result<LambdaSeriesMatrix> {
        let g = self.members.len();
        assert_eq!(constants.len(), g, "one Fermat constant per class member");
        for c in constants {
            work.ensure_owned(c)?;
        }
        if work.p() != out.p()
            || work.r() != out.r()
            || work.precision() < out.precision() + self.denominator_depth
        {
            return Err(Error::PrecisionInsufficient {
                have: work.precision(),
                need: format!(
                    "{} + denominator depth {}; raise the working precision",
                    out.precision(),
                    self.denominator_depth
                ),
            });
        }
        let l = self.order;
        let depth = self.denominator_depth;
        let big_p = BigInt::from(work.p());

        // Ā = p^s·A and diag(c)·Ā, embedded once per coefficient.
        let mut abar: Vec<Option<ZqMatrix>> = Vec::with_capacity(l + 1);
        let mut rhs: Vec<ZqMatrix> = Vec::with_capacity(l + 1);
        for mat in &self.a {
            let mut m: ZqMatrix = vec![vec![work.zero(); g]; g];
            let mut any = false;
            for (r, row) in mat.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    any = true;
                    let v = int_valuation(x.denom(), &big_p);
                    let num = x.numer() * big_p.pow(depth - v);
                    let den = x.denom() / big_p.pow(v);
                    m[r][c] = work.embed_rational(&num, &den)?;
                }
            }
            let scaled = m
                .iter()
                .enumerate()
                .map(|(r, row)| row.iter().map(|x| work.mul(&constants[r], x)).collect())
                .collect();
            rhs.push(scaled);
            abar.push(if any { Some(m) } else { None });
        }

        // Fold in Δ(λ^q)^clearing = Σ_i binom(clearing, i)·(−κ̃)^i·λ^{q·d′·i}.
        let step = (q * self.period) as usize;
        let mut factor: Vec<(usize, ZqElement)> = Vec::new();
        for i in 0..=(clearing as u64) {
            let e = (i as usize).saturating_mul(step);
            if e > l {
                break;
            }
            let c = BigRational::from_integer(binomial(clearing as u64, i))
                * (-&self.discriminant_scale).pow(i as i32);
            factor.push((e, work.embed_ratio(&c)?));
        }
        let mut cleared: Vec<ZqMatrix> = Vec::with_capacity(l + 1);
        for e in 0..=l {
            let mut m: ZqMatrix = vec![vec![work.zero(); g]; g];
            for (off, scale) in &factor {
                if *off > e {
                    break;
                }
                let src = &rhs[e - off];
                for r in 0..g {
                    for c in 0..g {
                        if !work.is_zero(&src[r][c]) {
                            m[r][c] = work.add(&m[r][c], &work.mul(scale, &src[r][c]));
                        }
                    }
                }
            }
            cleared.push(m);
        }
        drop(rhs);

        // X[e] = (cleared[e] − Σ_{f=1..} Ā[f]·X[e−qf]) / p^s.
        let qs = q as usize;
        let mut x: Vec<ZqMatrix> = Vec::with_capacity(l + 1);
        let mut coeffs: Vec<ZqMatrix> = Vec::with_capacity(l + 1);
        for (e, mut t) in cleared.into_iter().enumerate() {
            for f in 1..=(e / qs) {
                let Some(af) = &abar[f] else { continue };
                let prev = &x[e - f * qs];
                for r in 0..g {
                    for (u, a_ru) in af[r].iter().enumerate() {
                        if work.is_zero(a_ru) {
                            continue;
                        }
                        for c in 0..g {
                            if !work.is_zero(&prev[u][c]) {
                                t[r][c] = work.sub(&t[r][c], &work.mul(a_ru, &prev[u][c]));
                            }
                        }
                    }
                }
            }
            let mut here: ZqMatrix = vec![vec![work.zero(); g]; g];
            let mut trunc: ZqMatrix = vec![vec![out.zero(); g]; g];
            for r in 0..g {
                for c in 0..g {
                    let v = work.exact_div_pow_p(&t[r][c], depth).map_err(|_| {
                        Error::NonIntegralSeries(format!(
                            "coefficient of λ^{e} at ({r},{c}) is not divisible by the \
                             denominator depth p^{depth}; raise the working precision"
                        ))
                    })?;
                    trunc[r][c] = out.truncate_from(&v)?;
                    here[r][c] = v;
                }
            }
            x.push(here);
            coeffs.push(trunc);
        }
        Ok(LambdaSeriesMatrix {
            members: self.members.clone(),
            ring: out.clone(),
            discriminant_scale: self.discriminant_scale.clone(),
            period: self.period,
            pole_clearing: clearing,
            coeffs,
        })
    }
}

/// Truncated λ-power series of the composite Frobenius matrix on one strong
/// class, coefficients in Z_q. If `pole_clearing` is positive the series
/// represents M(λ)·Δ(λ^q)^{pole_clearing} and evaluation divides the scalar
/// back out.
#[derive(Debug, Clone)]
pub struct LambdaSeriesMatrix {
    pub members: Vec<MonomialType>,
    pub ring: ZqRing,
    /// κ̃ with Δ(λ) = 1 − κ̃λ^{d′}.
    pub discriminant_scale: BigRational,
    /// d′, the λ-period of the block.
    pub period: u64,
    /// Number of Δ(λ^q) factors multiplied into the series.
    pub pole_clearing: u32,
    /// coeffs[e][row][col]: the matrix coefficient of λ^e, e = 0..=L.
    pub coeffs: Vec<ZqMatrix>,
}

impl LambdaSeriesMatrix {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Smallest valuation over all entries of the last `window` coefficient
    /// matrices (capped at the ring precision).
    pub fn tail_valuation(&self, window: usize) -> u32 {
        let start = self.coeffs.len().saturating_sub(window);
        let mut min = self.ring.precision();
        for mat in &self.coeffs[start..] {
            for row in mat {
                for x in row {
                    min = min.min(self.ring.valuation(x));
                }
            }
        }
        min
    }
}

/// M(λ)·Δ(λ^q)^clearing with M(λ) = A(λ^q)⁻¹·diag(c)·A(λ), truncated at λ^L
/// and embedded into `out`. `constants` are the Fermat Frobenius constants of
/// the class members, in the padded ring; `clearing` is the number of
/// discriminant factors multiplied in (0 keeps the raw composite, whose
/// coefficients do not decay on blocks with singular parameters on |λ| = 1).
pub fn frobenius_series(
    family: &Family,
    class: &StrongClass,
    constants: &[ZqElement],
    padded: &ZqRing,
    out: &ZqRing,
    l: usize,
    clearing: u32,
) -> Result<LambdaSeriesMatrix> {
    let comp = composite_series(family, class, padded.q(), l)?.cleared(clearing);
    comp.embed(constants, padded, out)
}

/// Horner evaluation of the series at a Teichmüller point λ₀, divided by
/// Δ(λ₀)^{pole_clearing}. Accepted only when the trailing `tail_window`
/// coefficients of every entry vanish at ring precision (skipped for λ₀ = 0,
/// where only the constant term acts).
pub fn evaluate_at_teichmueller(
    m: &LambdaSeriesMatrix,
    lambda0: &ZqElement,
    tail_window: usize,
) -> Result<ZqMatrix> {
    let ring = &m.ring;
    ring.ensure_owned(lambda0)?;
    if !ring.is_zero(&ring.sub(&ring.pow(lambda0, ring.q()), lambda0)) {
        return Err(Error::NotTeichmueller);
    }
    if ring.is_zero(lambda0) {
        return Ok(m.coeffs[0].clone());
    }
    let min_valuation = m.tail_valuation(tail_window);
    if min_valuation < ring.precision() {
        return Err(Error::TailNotConverged {
            order: m.order(),
            min_valuation,
            needed: ring.precision(),
        });
    }
    let g = m.members.len();
    let mut acc = m.coeffs[m.coeffs.len() - 1].clone();
    for mat in m.coeffs.iter().rev().skip(1) {
        for r in 0..g {
            for c in 0..g {
                acc[r][c] = ring.add(&ring.mul(&acc[r][c], lambda0), &mat[r][c]);
            }
        }
    }
    if m.pole_clearing > 0 {
        // Δ(λ₀^q)^clearing = Δ(λ₀)^clearing since λ₀^q = λ₀
        let kappa = ring.embed_ratio(&m.discriminant_scale)?;
        let delta = ring.sub(&ring.one(), &ring.mul(&kappa, &ring.pow(lambda0, m.period)));
        let inverse = ring.inv(&ring.pow(&delta, m.pole_clearing as u64))?;
        for row in &mut acc {
            for x in row.iter_mut() {
                *x = ring.mul(x, &inverse);
            }
        }
    }
    Ok(acc)
}
