//! Deterministic random instance generators for sweeps and tests.
//!
//! Everything here is seeded explicitly: sweep drivers derive one rng per
//! item via [`stream_rng`], so results are independent of thread scheduling
//! and iteration order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rademacher::RademacherSum;
use crate::scalar::Scalar;
use crate::space::{Field, ProbSpace};
use crate::vecmath;

/// One rng per (seed, item) pair. Streams of the same generator never
/// overlap, which keeps parallel sweeps reproducible.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal deviate (Box–Muller; consumes two uniforms).
pub fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u.ln()).sqrt() * v.cos()
}

/// Uniform vector with entries in [−2, 2].
pub fn random_vector<T: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<T> {
    (0..dim)
        .map(|_| T::from_f(rng.random_range(-2.0..2.0)))
        .collect()
}

/// Random unit vector (uniform entries, normalized; resamples the rare
/// near-zero draw).
pub fn random_unit<T: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<T> {
    loop {
        let v = random_vector::<T, R>(rng, dim);
        let n = vecmath::norm(&v);
        if n > T::from_f(1e-3) {
            return vecmath::scaled(&v, T::one() / n);
        }
    }
}

/// Random unit vector orthogonal to `base` (dim ≥ 2 and nonzero `base`).
pub fn unit_perp<T: Scalar, R: Rng + ?Sized>(rng: &mut R, base: &[T]) -> Vec<T> {
    let nb2 = vecmath::dot(base, base);
    loop {
        let mut v = random_unit::<T, R>(rng, base.len());
        let c = vecmath::dot(&v, base) / nb2;
        vecmath::axpy(&mut v, -c, base);
        let n = vecmath::norm(&v);
        if n > T::from_f(1e-3) {
            return vecmath::scaled(&v, T::one() / n);
        }
    }
}

/// Weights for `n` atoms: half the time exactly uniform, otherwise
/// independent draws from U[0.5, 1.5] normalized to sum 1. Either way every
/// weight is ≥ 1/(3n), so no atom is ever negligible relative to the
/// tolerances the sweeps certify at.
pub fn random_weights<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<T> {
    if rng.random_range(0.0..1.0) < 0.5 {
        return vec![T::one() / T::from_f(n as f64); n];
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let sum: f64 = raw.iter().sum();
    let mut w: Vec<T> = raw.iter().map(|&x| T::from_f(x / sum)).collect();
    // Re-normalize in T arithmetic so the probability-space validation holds
    // for f32 as well.
    let total = w.iter().fold(T::zero(), |a, &b| a + b);
    for x in w.iter_mut() {
        *x = *x / total;
    }
    w
}

/// Generic random field: 2–5 atoms, dimension 1–4, entries U[−2, 2].
/// Generic in the measure-zero sense: almost surely not two-valued.
pub fn random_field<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Field<T> {
    let n = rng.random_range(2..=5);
    let dim = rng.random_range(1..=4);
    let weights = random_weights::<T, R>(rng, n);
    let values = (0..n).map(|_| random_vector::<T, R>(rng, dim)).collect();
    Field::new(ProbSpace::new(weights).unwrap(), values).unwrap()
}

/// Constructed two-valued field: a random subset of atoms carries random
/// directions of one common norm, the rest are zero. Always certifiable.
pub fn random_hilbert_field<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Field<T> {
    let n = rng.random_range(2..=5);
    let dim = rng.random_range(1..=4);
    let weights = random_weights::<T, R>(rng, n);
    let level = T::from_f(rng.random_range(0.5..2.0));
    let support = rng.random_range(1..=n);
    let values = (0..n)
        .map(|i| {
            if i < support {
                vecmath::scaled(&random_unit::<T, R>(rng, dim), level)
            } else {
                vec![T::zero(); dim]
            }
        })
        .collect();
    Field::new(ProbSpace::new(weights).unwrap(), values).unwrap()
}

/// Random sign-sum coefficients: k ≤ 4 vectors in dimension ≤ 3, entries on
/// the grid {−1, −0.5, 0, 0.5, 1} plus Gaussian noise of the given size
/// (pass zero for exact grid sums). Resamples the all-zero draw.
pub fn random_grid_sum<T: Scalar, R: Rng + ?Sized>(rng: &mut R, noise: f64) -> RademacherSum<T> {
    const GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
    loop {
        let k = rng.random_range(1..=4);
        let dim = rng.random_range(1..=3);
        let xs: Vec<Vec<T>> = (0..k)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        let g = GRID[rng.random_range(0..GRID.len())];
                        T::from_f(g + noise * gauss(rng))
                    })
                    .collect()
            })
            .collect();
        if xs.iter().any(|x| vecmath::norm(x) > T::from_f(1e-9)) {
            return RademacherSum::new(xs).unwrap();
        }
    }
}

/// Random orthogonal family: `count` pairwise-orthogonal vectors in R^dim
/// (count ≤ dim) with independent norms in [0.5, 2].
pub fn random_orthogonal_family<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    count: usize,
) -> Vec<Vec<T>> {
    assert!(count <= dim, "cannot fit {count} orthogonal vectors in R^{dim}");
    let mut family: Vec<Vec<T>> = Vec::with_capacity(count);
    while family.len() < count {
        let mut v = random_unit::<T, R>(rng, dim);
        for u in &family {
            let c = vecmath::dot(&v, u) / vecmath::dot(u, u);
            vecmath::axpy(&mut v, -c, u);
        }
        let n = vecmath::norm(&v);
        if n > T::from_f(1e-3) {
            let norm = T::from_f(rng.random_range(0.5..2.0));
            family.push(vecmath::scaled(&v, norm / n));
        }
    }
    family
}

/// Random pair (u, v) with ‖u‖ = ‖v‖ ∈ [0.5, 2] and u ⊥ v (dim ≥ 2).
pub fn random_equal_orthogonal_pair<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
) -> (Vec<T>, Vec<T>) {
    let norm = T::from_f(rng.random_range(0.5..2.0));
    let u = random_unit::<T, R>(rng, dim);
    let v = unit_perp::<T, R>(rng, &u);
    (vecmath::scaled(&u, norm), vecmath::scaled(&v, norm))
}

/// Random sign sum that is certified Hilbert by construction: one of the
/// three certified shapes (orthogonal family, repeated vector, rotated
/// triple), optionally padded with zero vectors, then shuffled and
/// sign-flipped — both operations preserve the sign-symmetric value
/// distribution and hence the certificate.
pub fn random_hilbert_sum<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> RademacherSum<T> {
    let dim = rng.random_range(2..=3);
    let mut xs: Vec<Vec<T>> = match rng.random_range(0..3) {
        0 => {
            let count = rng.random_range(1..=dim.min(3));
            random_orthogonal_family(rng, dim, count)
        }
        1 => {
            let scale = T::from_f(rng.random_range(0.5..2.0));
            let x = vecmath::scaled(&random_unit::<T, R>(rng, dim), scale);
            vec![x.clone(), x]
        }
        _ => {
            let (u, v) = random_equal_orthogonal_pair::<T, R>(rng, dim);
            let half = T::from_f(0.5);
            let tilt = T::from_f(3.0f64.sqrt() / 2.0);
            let mut x2 = vecmath::scaled(&u, half);
            vecmath::axpy(&mut x2, tilt, &v);
            let mut x3 = vecmath::scaled(&u, half);
            vecmath::axpy(&mut x3, -tilt, &v);
            vec![u, x2, x3]
        }
    };
    while xs.len() < 4 && rng.random_range(0.0..1.0) < 0.3 {
        xs.push(vec![T::zero(); dim]);
    }
    for i in (1..xs.len()).rev() {
        xs.swap(i, rng.random_range(0..=i));
    }
    for x in &mut xs {
        if rng.random_range(0.0..1.0) < 0.5 {
            for c in x.iter_mut() {
                *c = -*c;
            }
        }
    }
    RademacherSum::new(xs).unwrap()
}

/// A random rotation applied to every vector: a composition of `sweeps`
/// random Givens rotations. Returns the dense matrix (row-major).
pub fn random_rotation<T: Scalar, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Vec<T>> {
    let mut q: Vec<Vec<T>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    if dim < 2 {
        return q;
    }
    for _ in 0..(3 * dim) {
        let a = rng.random_range(0..dim);
        let mut b = rng.random_range(0..dim);
        while b == a {
            b = rng.random_range(0..dim);
        }
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let (s, c) = (T::from_f(theta.sin()), T::from_f(theta.cos()));
        for row in q.iter_mut() {
            let (ra, rb) = (row[a], row[b]);
            row[a] = c * ra - s * rb;
            row[b] = s * ra + c * rb;
        }
    }
    q
}

/// Applies a row-major matrix to a vector.
pub fn apply_matrix<T: Scalar>(q: &[Vec<T>], v: &[T]) -> Vec<T> {
    q.iter().map(|row| vecmath::dot(row, v)).collect()
}
