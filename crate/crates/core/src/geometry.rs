//! The elementary Hilbert-space geometry behind the sign-sum classification,
//! as executable predicates on concrete vectors.
//!
//! Three facts about families with ‖u₀ + u_j‖ = ‖u₀‖:
//!
//! 1. If additionally u₀ + u₁ + u₂ = 0, the pair decomposes as
//!    u_{1,2} = −½u₀ ± (√3/2)v with v ⊥ u₀, ‖v‖ = ‖u₀‖ ([`lemma1a_decompose`]).
//! 2. If instead ‖u₀ + u₁ + u₂‖ = ‖u₀‖, then u₁ ⊥ u₂ ([`lemma1b_orthogonality`]).
//! 3. With three or more vectors whose subset sums all land on the levels
//!    {0, ‖u₀‖}, the zero level is unreachable: every subset sum has norm
//!    ‖u₀‖ ([`lemma3_check`], with [`exclusion_search_trial`] probing the
//!    four-vector core of the argument adversarially).

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vecmath;

/// A base point u₀ and a family (u_j) of nonzero vectors, the standing data
/// of the subset-sum lemmas.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFamily<T> {
    u0: Vec<T>,
    us: Vec<Vec<T>>,
    dim: usize,
}

impl<T: Scalar> VectorFamily<T> {
    pub fn new(u0: Vec<T>, us: Vec<Vec<T>>) -> Result<Self> {
        let dim = u0.len();
        if dim == 0 {
            return Err(Error::Geometry("u0 must have dimension at least 1".into()));
        }
        if vecmath::norm(&u0) == T::zero() {
            return Err(Error::Geometry("u0 must be nonzero".into()));
        }
        for (j, u) in us.iter().enumerate() {
            if u.len() != dim {
                return Err(Error::DimMismatch { left: dim, right: u.len() });
            }
            if vecmath::norm(u) == T::zero() {
                return Err(Error::Geometry(format!("family vector {j} is zero")));
            }
            if u.iter().any(|c| !c.is_finite()) {
                return Err(Error::Geometry(format!("family vector {j} is not finite")));
            }
        }
        Ok(VectorFamily { u0, us, dim })
    }

    /// The canonical family of an orthogonal coefficient sequence: base
    /// point u₀ = Σ x_j and flip vectors u_j = −2x_j, for which every subset
    /// sum has norm ‖u₀‖ exactly (flipping signs of orthogonal summands
    /// preserves Σ‖x_j‖²).
    pub fn from_orthogonal(xs: &[Vec<T>]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Geometry("need at least one vector".into()));
        }
        let dim = xs[0].len();
        let mut u0 = vec![T::zero(); dim];
        for x in xs {
            if x.len() != dim {
                return Err(Error::DimMismatch { left: dim, right: x.len() });
            }
            vecmath::axpy(&mut u0, T::one(), x);
        }
        let us = xs
            .iter()
            .map(|x| vecmath::scaled(x, -T::from_f(2.0)))
            .collect();
        VectorFamily::new(u0, us)
    }

    pub fn u0(&self) -> &[T] {
        &self.u0
    }

    pub fn us(&self) -> &[Vec<T>] {
        &self.us
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.us.is_empty()
    }

    fn sum_mask(&self, mask: usize) -> Vec<T> {
        let mut acc = self.u0.clone();
        for (j, u) in self.us.iter().enumerate() {
            if mask >> j & 1 == 1 {
                vecmath::axpy(&mut acc, T::one(), u);
            }
        }
        acc
    }
}

/// Guard for subset enumeration in [`lemma3_check`].
pub const MAX_LEMMA3_VARS: usize = 16;

/// u₀ + Σ_{j∈K} u_j for an explicit index set K (0-based indices into the
/// family).
pub fn subset_sum<T: Scalar>(fam: &VectorFamily<T>, k: &[usize]) -> Result<Vec<T>> {
    let mut acc = fam.u0.clone();
    for &j in k {
        let u = fam
            .us
            .get(j)
            .ok_or(Error::IndexOutOfRange { index: j, len: fam.us.len() })?;
        vecmath::axpy(&mut acc, T::one(), u);
    }
    Ok(acc)
}

fn check_norm_equal<T: Scalar>(name: &str, got: T, want: T, tol: T) -> Result<()> {
    if (got - want).abs() > tol * want {
        return Err(Error::Geometry(format!(
            "hypothesis failed: ‖{name}‖ = {} differs from the base norm {}",
            got.to_f64_lossy(),
            want.to_f64_lossy()
        )));
    }
    Ok(())
}

/// The vanishing-triple decomposition: given nonzero u₀, u₁, u₂ with
/// ‖u₀‖ = ‖u₀+u₁‖ = ‖u₀+u₂‖ (within tol) and ‖u₀+u₁+u₂‖ ≤ tol·‖u₀‖,
/// returns the vector v with u₁ = −½u₀ + (√3/2)v, u₂ = −½u₀ − (√3/2)v,
/// v ⊥ u₀ and ‖v‖ = ‖u₀‖. The sign convention reads v off from u₁
/// (v = (2/√3)(u₁ + ½u₀)); the roles of ±v swap with u₁ and u₂.
pub fn lemma1a_decompose<T: Scalar>(
    u0: &[T],
    u1: &[T],
    u2: &[T],
    tol: T,
) -> Result<Vec<T>> {
    let r = vecmath::norm(u0);
    if r == T::zero() || vecmath::norm(u1) == T::zero() || vecmath::norm(u2) == T::zero() {
        return Err(Error::Geometry("all three vectors must be nonzero".into()));
    }
    let mut s1 = u0.to_vec();
    vecmath::axpy(&mut s1, T::one(), u1);
    check_norm_equal("u0+u1", vecmath::norm(&s1), r, tol)?;
    let mut s2 = u0.to_vec();
    vecmath::axpy(&mut s2, T::one(), u2);
    check_norm_equal("u0+u2", vecmath::norm(&s2), r, tol)?;
    vecmath::axpy(&mut s1, T::one(), u2);
    if vecmath::norm(&s1) > tol * r {
        return Err(Error::Geometry(format!(
            "hypothesis failed: ‖u0+u1+u2‖ = {} is not ≤ {}",
            vecmath::norm(&s1).to_f64_lossy(),
            (tol * r).to_f64_lossy()
        )));
    }

    let mut v = u1.to_vec();
    vecmath::axpy(&mut v, T::from_f(0.5), u0);
    let v = vecmath::scaled(&v, T::from_f(2.0 / 3.0f64.sqrt()));

    // The conclusions follow from the hypotheses with at most a constant
    // blow-up of tol; failing this seal means the inputs only pretended to
    // satisfy them.
    let guard = T::from_f(10.0) * tol;
    if (vecmath::norm(&v) - r).abs() > guard * r {
        return Err(Error::Geometry(format!(
            "decomposition failed: ‖v‖ = {} differs from ‖u0‖ = {}",
            vecmath::norm(&v).to_f64_lossy(),
            r.to_f64_lossy()
        )));
    }
    if vecmath::dot(&v, u0).abs() > guard * r * r {
        return Err(Error::Geometry(
            "decomposition failed: v is not orthogonal to u0".into(),
        ));
    }
    Ok(v)
}

/// The norm-preserving-triple orthogonality: given the four equal norms
/// ‖u₀‖ = ‖u₀+u₁‖ = ‖u₀+u₂‖ = ‖u₀+u₁+u₂‖ (within tol), returns ⟨u₁,u₂⟩,
/// which the lemma asserts vanishes (up to a tolerance propagated from tol:
/// the parallelogram expansion bounds it by ~4·tol·‖u₀‖²).
pub fn lemma1b_orthogonality<T: Scalar>(u0: &[T], u1: &[T], u2: &[T], tol: T) -> Result<T> {
    let r = vecmath::norm(u0);
    if r == T::zero() || vecmath::norm(u1) == T::zero() || vecmath::norm(u2) == T::zero() {
        return Err(Error::Geometry("all three vectors must be nonzero".into()));
    }
    let mut s1 = u0.to_vec();
    vecmath::axpy(&mut s1, T::one(), u1);
    check_norm_equal("u0+u1", vecmath::norm(&s1), r, tol)?;
    let mut s2 = u0.to_vec();
    vecmath::axpy(&mut s2, T::one(), u2);
    check_norm_equal("u0+u2", vecmath::norm(&s2), r, tol)?;
    vecmath::axpy(&mut s1, T::one(), u2);
    check_norm_equal("u0+u1+u2", vecmath::norm(&s1), r, tol)?;
    Ok(vecmath::dot(u1, u2))
}

/// Subset-sum report from [`lemma3_check`]: for every K ⊆ J (indexed by
/// bitmask) the norm ‖u₀ + u(K)‖, which level it certified to, and whether
/// the lemma's conclusion (no subset on the zero level) held.
#[derive(Debug, Clone)]
pub struct Lemma3Report<T> {
    pub base_norm: T,
    /// ‖u₀ + u(K)‖ for every mask K in 0..2^|J|, in bitmask order.
    pub subset_norms: Vec<T>,
    /// Masks whose sum certified to the zero level — impossible per the
    /// lemma; nonempty means the input refutes it (or sits off-hypothesis).
    pub zero_level_subsets: Vec<usize>,
    pub holds: bool,
}

/// Verifies the subset-sum lemma on a family with |J| ≥ 3: hypotheses are
/// ‖u₀+u_j‖ = ‖u₀‖ for every j and every subset-sum norm on one of the two
/// levels {0, ‖u₀‖} (within tol·‖u₀‖ — a norm near neither level is a
/// hypothesis error, not a violation). The lemma asserts the zero level is
/// never hit; any hit is reported as a violation.
pub fn lemma3_check<T: Scalar>(fam: &VectorFamily<T>, tol: T) -> Result<Lemma3Report<T>> {
    let j = fam.len();
    if j < 3 {
        return Err(Error::Geometry(format!(
            "the subset-sum lemma needs at least three vectors, got {j}"
        )));
    }
    if j > MAX_LEMMA3_VARS {
        return Err(Error::SizeGuard {
            what: "subset-sum enumeration",
            limit: MAX_LEMMA3_VARS,
            got: j,
        });
    }
    let r = vecmath::norm(&fam.u0);
    for (i, _) in fam.us.iter().enumerate() {
        let n = vecmath::norm(&fam.sum_mask(1usize << i));
        check_norm_equal(&format!("u0+u{i}"), n, r, tol)?;
    }

    let total = 1usize << j;
    let mut subset_norms = Vec::with_capacity(total);
    let mut zero_level_subsets = Vec::new();
    for mask in 0..total {
        let n = vecmath::norm(&fam.sum_mask(mask));
        if n <= tol * r {
            zero_level_subsets.push(mask);
        } else if (n - r).abs() > tol * r {
            return Err(Error::Geometry(format!(
                "hypothesis failed: subset {mask:#b} has norm {} — near neither 0 nor {}",
                n.to_f64_lossy(),
                r.to_f64_lossy()
            )));
        }
        subset_norms.push(n);
    }
    let holds = zero_level_subsets.is_empty();
    Ok(Lemma3Report { base_norm: r, subset_norms, zero_level_subsets, holds })
}

/// Random triple satisfying the hypotheses of the orthogonality lemma
/// exactly (to rounding): singles constrained by ⟨u₀,u_i⟩ = −‖u_i‖²/2, the
/// fourth norm imposed by solving for ⟨ŵ₁,ŵ₂⟩. The hypothesis set has
/// measure zero, so instances must be constructed, not rejection-sampled.
/// Needs dim ≥ 3.
pub fn random_lemma1b_triple<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    use crate::gen;
    assert!(dim >= 3, "hypothesis-satisfying triples need dim ≥ 3");
    loop {
        let r = rng.random_range(0.5..2.0);
        let u0 = vecmath::scaled(&gen::random_unit::<T, R>(rng, dim), T::from_f(r));
        // u_i = α_i u₀ + β_i ŵ_i with ‖u₀+u_i‖ = ‖u₀‖ ⟺ α = −1 ± √(1−β²/r²).
        let beta1 = rng.random_range(0.3 * r..0.99 * r);
        let beta2 = rng.random_range(0.3 * r..0.99 * r);
        let root = |b: f64| (1.0 - (b / r) * (b / r)).sqrt();
        let a1 = -1.0 + if rng.random_range(0.0..1.0) < 0.5 { root(beta1) } else { -root(beta1) };
        let a2 = -1.0 + if rng.random_range(0.0..1.0) < 0.5 { root(beta2) } else { -root(beta2) };
        // Fourth norm ‖u₀+u₁+u₂‖ = r fixes the angle between ŵ₁ and ŵ₂.
        let s = 1.0 + a1 + a2;
        let c = (r * r * (1.0 - s * s) - beta1 * beta1 - beta2 * beta2) / (2.0 * beta1 * beta2);
        if !(-0.999..=0.999).contains(&c) {
            continue;
        }
        let w1 = gen::unit_perp::<T, R>(rng, &u0);
        // ŵ₂ = c·ŵ₁ + √(1−c²)·ŵ⊥ with ŵ⊥ ⊥ {u₀, ŵ₁}: Gram–Schmidt a fresh
        // direction against both.
        let wp = loop {
            let mut cand = gen::random_unit::<T, R>(rng, dim);
            let cu = vecmath::dot(&cand, &u0) / vecmath::dot(&u0, &u0);
            vecmath::axpy(&mut cand, -cu, &u0);
            let cw = vecmath::dot(&cand, &w1);
            vecmath::axpy(&mut cand, -cw, &w1);
            let n = vecmath::norm(&cand);
            if n > T::from_f(1e-3) {
                break vecmath::scaled(&cand, T::one() / n);
            }
        };
        let mut w2 = vecmath::scaled(&w1, T::from_f(c));
        vecmath::axpy(&mut w2, T::from_f((1.0 - c * c).sqrt()), &wp);

        let mut u1 = vecmath::scaled(&u0, T::from_f(a1));
        vecmath::axpy(&mut u1, T::from_f(beta1), &w1);
        let mut u2 = vecmath::scaled(&u0, T::from_f(a2));
        vecmath::axpy(&mut u2, T::from_f(beta2), &w2);
        return (u0, u1, u2);
    }
}

/// One adversarial probe for the exclusion core of the subset-sum lemma:
/// builds a quadruple (u₀, u₁, u₂, u₃) forcing either the vanishing triple
/// or the vanishing total, checks whether all remaining hypothesis norms
/// land on the levels {0, ‖u₀‖}, and returns a violating quadruple if a
/// fully-hypothesis-satisfying instance with a zero-level sum exists. The
/// lemma says it never does; both forced branches require two incompatible
/// values of one inner product, so the search can only ever miss.
pub fn exclusion_search_trial<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    tol: T,
) -> Option<[Vec<T>; 4]> {
    use crate::gen;
    let dim = rng.random_range(3..=4);
    let r = 1.0;
    let u0 = gen::random_unit::<T, R>(rng, dim);
    // Any vector with both ‖u‖ = ‖u₀‖ and ‖u₀+u‖ = ‖u₀‖ has the rigid form
    // −½u₀ + (√3/2)ŵ, ŵ ⊥ u₀ — the only shape the forced branches admit.
    let special = |rng: &mut R, near: Option<(&[T], f64)>| -> Vec<T> {
        let w = match near {
            // Aim ⟨ŵ, target⟩ at a prescribed value (the adversarial part:
            // probe straight at the critical angles ±1/3 and ±1).
            Some((target, dot)) => {
                let wp = gen::unit_perp::<T, R>(rng, &u0);
                let in_plane = target.to_vec();
                let c = vecmath::dot(&in_plane, &wp);
                let jitter = 1e-3 * gen::gauss(rng);
                let aim = (dot + jitter).clamp(-1.0, 1.0);
                // Rebuild a unit vector at the aimed angle from `target`
                // inside the plane orthogonal to u₀.
                let mut perp2 = wp.clone();
                vecmath::axpy(&mut perp2, -c, &in_plane);
                let n = vecmath::norm(&perp2);
                if n > T::from_f(1e-6) {
                    perp2 = vecmath::scaled(&perp2, T::one() / n);
                } else {
                    perp2 = gen::unit_perp::<T, R>(rng, &u0);
                }
                let mut w = vecmath::scaled(&in_plane, T::from_f(aim));
                vecmath::axpy(&mut w, T::from_f((1.0 - aim * aim).sqrt()), &perp2);
                w
            }
            None => gen::unit_perp::<T, R>(rng, &u0),
        };
        let mut u = vecmath::scaled(&u0, T::from_f(-0.5));
        vecmath::axpy(&mut u, T::from_f(3.0f64.sqrt() / 2.0 * r), &w);
        u
    };

    let (u1, u2, u3);
    if rng.random_range(0.0..1.0) < 0.5 {
        // Branch 1: force ‖u₀+u₁+u₂‖ = 0, so u₂ = −(u₀+u₁) with ‖u₁‖ = r.
        u1 = special(rng, None);
        let mut forced = u0.clone();
        vecmath::axpy(&mut forced, T::one(), &u1);
        u2 = vecmath::scaled(&forced, -T::one());
        // u₃ must itself be special; aim its direction at a critical angle
        // with ŵ₁ = direction of u₁ + ½u₀.
        let mut w1 = u1.clone();
        vecmath::axpy(&mut w1, T::from_f(0.5), &u0);
        let w1 = vecmath::scaled(&w1, T::one() / vecmath::norm(&w1));
        let crit = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0][rng.random_range(0..4)];
        u3 = special(rng, Some((&w1, crit)));
    } else {
        // Branch 2: force ‖u₀+u₁+u₂+u₃‖ = 0, so u₃ = −(u₀+u₁+u₂) with all
        // three special.
        u1 = special(rng, None);
        let mut w1 = u1.clone();
        vecmath::axpy(&mut w1, T::from_f(0.5), &u0);
        let w1 = vecmath::scaled(&w1, T::one() / vecmath::norm(&w1));
        let crit = [-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0][rng.random_range(0..4)];
        u2 = special(rng, Some((&w1, crit)));
        let mut forced = u0.clone();
        vecmath::axpy(&mut forced, T::one(), &u1);
        vecmath::axpy(&mut forced, T::one(), &u2);
        u3 = vecmath::scaled(&forced, -T::one());
    }

    // All four must be nonzero and singles on the top level, every higher
    // sum on a level, and at least one on the zero level — only then is the
    // quadruple a genuine counterexample.
    let vs = [&u1, &u2, &u3];
    let rr = T::from_f(r);
    for v in vs {
        if vecmath::norm(v) <= tol * rr {
            return None;
        }
        let mut s = u0.clone();
        vecmath::axpy(&mut s, T::one(), v);
        let n = vecmath::norm(&s);
        if (n - rr).abs() > tol * rr {
            return None;
        }
    }
    let mut any_zero = false;
    for mask in [0b011usize, 0b101, 0b110, 0b111] {
        let mut s = u0.clone();
        for (j, v) in vs.iter().enumerate() {
            if mask >> j & 1 == 1 {
                vecmath::axpy(&mut s, T::one(), v);
            }
        }
        let n = vecmath::norm(&s);
        let on_zero = n <= tol * rr;
        let on_top = (n - rr).abs() <= tol * rr;
        if !on_zero && !on_top {
            return None;
        }
        any_zero |= on_zero;
    }
    if any_zero {
        Some([u0, u1, u2, u3])
    } else {
        None
    }
}
