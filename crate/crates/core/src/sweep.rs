//! Batch cross-validation and randomized counterexample search: run the
//! independent certification routes against each other on generated
//! instances, check the classifier against brute-force expansion, exercise
//! the geometry lemmas, and shrink any counterexample found.
//!
//! Every item derives its own generator as `stream_rng(seed, index)`, so
//! results are identical regardless of worker count.

use rand::Rng;
use rayon::prelude::*;

use crate::certify::{
    gradient_residual, hilbert_oracle, projection_pnorm, two_valued_check, OracleOptions,
};
use crate::error::{Error, Result};
use crate::gen;
use crate::geometry;
use crate::rademacher::{classify, expand, RademacherSum};
use crate::scalar::Scalar;
use crate::space::{Exponent, Field};
use crate::vecmath;

/// Knobs shared by the randomized sweeps.
#[derive(Debug, Clone)]
pub struct SweepOptions<T> {
    pub trials: usize,
    pub seed: u64,
    /// Fraction of instances drawn from the certified-by-construction
    /// generators (the rest are generic, filtered away from the decision
    /// boundary).
    pub hilbert_fraction: f64,
    /// Generic instances must sit at least this far from two-valuedness.
    pub margin_floor: T,
    /// Tolerance for the closed-form routes (profile, projection norm,
    /// gradient residual).
    pub route_tol: T,
    /// Options handed to the minimization route; its seed is re-derived per
    /// item.
    pub oracle: OracleOptions<T>,
}

impl<T: Scalar> Default for SweepOptions<T> {
    fn default() -> Self {
        SweepOptions {
            trials: 500,
            seed: 0,
            hilbert_fraction: 0.25,
            margin_floor: T::from_f(1e-3),
            route_tol: T::strict_tol() * T::from_f(1e3),
            oracle: OracleOptions {
                // The zero start decides convex disproof on its own; a
                // couple of extra starts guard the certification branch
                // without blowing up sweep cost.
                restarts: 2,
                max_iters: 3000,
                ..OracleOptions::default()
            },
        }
    }
}

/// Per-item seed: a splitmix-style mix of the base seed with the item index,
/// so batch items are decorrelated but reproducible regardless of how they
/// are scheduled across threads.
pub fn item_seed(base: u64, index: u64) -> u64 {
    base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Per-exponent verdicts of the four routes on one field. The oracle slot is
/// `None` when its minimization hit the budget without converging.
#[derive(Debug, Clone)]
pub struct RouteAgreement<T> {
    pub p: Exponent<T>,
    pub profile: bool,
    pub projection: bool,
    pub gradient: bool,
    pub oracle: Option<bool>,
}

impl<T> RouteAgreement<T> {
    /// All four routes reached the same verdict.
    pub fn consistent(&self) -> bool {
        self.projection == self.profile
            && self.gradient == self.profile
            && self.oracle == Some(self.profile)
    }
}

/// Runs all four certification routes on one field at one exponent.
pub fn evaluate_routes<T: Scalar>(
    phi: &Field<T>,
    p: Exponent<T>,
    route_tol: T,
    oracle: &OracleOptions<T>,
) -> Result<RouteAgreement<T>> {
    let profile = two_valued_check(phi, route_tol)?.is_hilbert;
    let projection = (projection_pnorm(phi, p)? - T::one()).abs() <= route_tol;
    let gradient = gradient_residual(phi, p)? <= route_tol;
    let oracle = hilbert_oracle(phi, p, oracle)?.is_hilbert();
    Ok(RouteAgreement { p, profile, projection, gradient, oracle })
}

/// One instance on which the routes failed to agree.
#[derive(Debug, Clone)]
pub struct RouteDisagreement<T> {
    pub index: u64,
    pub field: Field<T>,
    pub routes: RouteAgreement<T>,
}

#[derive(Debug, Clone)]
pub struct Theorem1Report<T> {
    pub trials: usize,
    pub evaluations: usize,
    pub constructed_hilbert: usize,
    pub disagreements: Vec<RouteDisagreement<T>>,
}

impl<T> Theorem1Report<T> {
    pub fn ok(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Draws a sweep instance: certified-by-construction with probability
/// `hilbert_fraction`, otherwise generic with two-valuedness margin above
/// `margin_floor` (the in-between band is the decision boundary, excluded by
/// design so that tolerance choices cannot manufacture disagreements).
fn sweep_field<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    hilbert_fraction: f64,
    margin_floor: T,
    route_tol: T,
) -> (Field<T>, bool) {
    if rng.random_range(0.0..1.0) < hilbert_fraction {
        return (gen::random_hilbert_field(rng), true);
    }
    for _ in 0..10_000 {
        let f = gen::random_field(rng);
        let verdict = two_valued_check(&f, route_tol).expect("generated field is nontrivial");
        if verdict.margin > margin_floor {
            return (f, false);
        }
    }
    unreachable!("generic fields away from the two-valued set are not this rare");
}

/// Cross-validates the four certification routes on random fields across the
/// given exponents (all ≠ 2: at p = 2 every field passes, so the routes
/// measure different things there and agreement is not a theorem).
pub fn theorem1_equivalence_sweep<T: Scalar>(
    ps: &[Exponent<T>],
    opts: &SweepOptions<T>,
) -> Result<Theorem1Report<T>> {
    if opts.trials == 0 {
        return Err(Error::InvalidValues("trials must be at least 1".into()));
    }
    if ps.is_empty() {
        return Err(Error::InvalidValues("need at least one exponent".into()));
    }
    if ps.iter().any(|p| p.is_two()) {
        return Err(Error::UnsupportedExponent(
            "the equivalence sweep needs p ≠ 2; every field is unimprovable at p = 2",
        ));
    }
    let per_item: Vec<(bool, Vec<RouteDisagreement<T>>)> = (0..opts.trials as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = gen::stream_rng(opts.seed, index);
            let (field, constructed) = sweep_field(
                &mut rng,
                opts.hilbert_fraction,
                opts.margin_floor,
                opts.route_tol,
            );
            let oracle = OracleOptions {
                seed: item_seed(opts.oracle.seed, index),
                ..opts.oracle
            };
            let mut bad = Vec::new();
            for &p in ps {
                let routes = evaluate_routes(&field, p, opts.route_tol, &oracle)?;
                if !routes.consistent() {
                    bad.push(RouteDisagreement { index, field: field.clone(), routes });
                }
            }
            Ok((constructed, bad))
        })
        .collect::<Result<_>>()?;

    let mut report = Theorem1Report {
        trials: opts.trials,
        evaluations: opts.trials * ps.len(),
        constructed_hilbert: 0,
        disagreements: Vec::new(),
    };
    for (constructed, bad) in per_item {
        report.constructed_hilbert += constructed as usize;
        report.disagreements.extend(bad);
    }
    Ok(report)
}

/// One sign sum on which the structural classifier and the brute-force
/// expansion check disagree.
#[derive(Debug, Clone)]
pub struct ClassifierDisagreement<T> {
    pub index: u64,
    pub sum: RademacherSum<T>,
    pub label: &'static str,
    pub expansion_hilbert: bool,
    pub margin: T,
}

#[derive(Debug, Clone)]
pub struct ClassifierReport<T> {
    pub trials: usize,
    pub constructed_hilbert: usize,
    /// Instances skipped because the expansion margin fell inside the
    /// excluded boundary band.
    pub skipped_boundary: usize,
    pub disagreements: Vec<ClassifierDisagreement<T>>,
}

impl<T> ClassifierReport<T> {
    pub fn ok(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Checks the structural classifier against ground truth (two-valuedness of
/// the full sign expansion) on random sums. Instances whose expansion margin
/// lies in (route_tol, boundary_margin) are skipped: within that band the
/// two checks are allowed to resolve the boundary differently.
pub fn classifier_agreement_sweep<T: Scalar>(
    opts: &SweepOptions<T>,
    boundary_margin: T,
) -> Result<ClassifierReport<T>> {
    if opts.trials == 0 {
        return Err(Error::InvalidValues("trials must be at least 1".into()));
    }
    let per_item: Vec<(bool, bool, Option<ClassifierDisagreement<T>>)> = (0..opts.trials as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = gen::stream_rng(opts.seed.wrapping_add(1), index);
            let (sum, constructed) = if rng.random_range(0.0..1.0) < opts.hilbert_fraction {
                (gen::random_hilbert_sum::<T, _>(&mut rng), true)
            } else {
                (gen::random_grid_sum::<T, _>(&mut rng, 0.1), false)
            };
            let truth = two_valued_check(&expand(&sum)?, opts.route_tol)?;
            if truth.margin > opts.route_tol && truth.margin < boundary_margin {
                return Ok((constructed, true, None));
            }
            let label = classify(&sum, opts.route_tol)?;
            let bad = if label.is_hilbert() != truth.is_hilbert {
                Some(ClassifierDisagreement {
                    index,
                    sum,
                    label: label.name(),
                    expansion_hilbert: truth.is_hilbert,
                    margin: truth.margin,
                })
            } else {
                None
            };
            Ok((constructed, false, bad))
        })
        .collect::<Result<_>>()?;

    let mut report = ClassifierReport {
        trials: opts.trials,
        constructed_hilbert: 0,
        skipped_boundary: 0,
        disagreements: Vec::new(),
    };
    for (constructed, skipped, bad) in per_item {
        report.constructed_hilbert += constructed as usize;
        report.skipped_boundary += skipped as usize;
        report.disagreements.extend(bad);
    }
    Ok(report)
}

/// Trial counts for [`lemma_suite`].
#[derive(Debug, Clone, Copy)]
pub struct LemmaSuiteCounts {
    pub decompose: usize,
    pub orthogonality: usize,
    pub subset: usize,
    pub exclusion: usize,
}

impl Default for LemmaSuiteCounts {
    fn default() -> Self {
        LemmaSuiteCounts {
            decompose: 500,
            orthogonality: 500,
            subset: 200,
            exclusion: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LemmaSuiteReport {
    pub counts: LemmaSuiteCounts,
    pub decompose_failures: usize,
    pub orthogonality_failures: usize,
    pub subset_failures: usize,
    pub exclusion_violations: usize,
}

impl LemmaSuiteReport {
    pub fn ok(&self) -> bool {
        self.decompose_failures == 0
            && self.orthogonality_failures == 0
            && self.subset_failures == 0
            && self.exclusion_violations == 0
    }
}

// Disjoint stream-index blocks per suite part, so the parts stay independent
// of each other's trial counts.
const DECOMPOSE_BLOCK: u64 = 0 << 32;
const ORTHOGONALITY_BLOCK: u64 = 1 << 32;
const SUBSET_BLOCK: u64 = 2 << 32;
const EXCLUSION_BLOCK: u64 = 3 << 32;

/// Runs all lemma checks on constructed hypothesis-satisfying instances plus
/// the adversarial exclusion search; counts failures instead of stopping so
/// a report can show how wrong things went.
pub fn lemma_suite<T: Scalar>(seed: u64, counts: LemmaSuiteCounts) -> LemmaSuiteReport {
    let tol = T::from_f(1e-9);
    let sqrt3_half = T::from_f(3.0f64.sqrt() / 2.0);

    let decompose_failures = (0..counts.decompose as u64)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = gen::stream_rng(seed, DECOMPOSE_BLOCK + i);
            let dim = rng.random_range(2..=4);
            let r = T::from_f(rng.random_range(0.5..2.0));
            let u0 = vecmath::scaled(&gen::random_unit::<T, _>(&mut rng, dim), r);
            let v_true = vecmath::scaled(&gen::unit_perp::<T, _>(&mut rng, &u0), r);
            let mut u1 = vecmath::scaled(&u0, -T::from_f(0.5));
            vecmath::axpy(&mut u1, sqrt3_half, &v_true);
            let mut u2 = vecmath::scaled(&u0, -T::from_f(0.5));
            vecmath::axpy(&mut u2, -sqrt3_half, &v_true);
            match geometry::lemma1a_decompose(&u0, &u1, &u2, tol) {
                Ok(v) => v
                    .iter()
                    .zip(&v_true)
                    .any(|(a, b)| (*a - *b).abs() > tol),
                Err(_) => true,
            }
        })
        .count();

    let orthogonality_failures = (0..counts.orthogonality as u64)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = gen::stream_rng(seed, ORTHOGONALITY_BLOCK + i);
            let dim = rng.random_range(3..=4);
            let (u0, u1, u2) = geometry::random_lemma1b_triple::<T, _>(&mut rng, dim);
            match geometry::lemma1b_orthogonality(&u0, &u1, &u2, tol) {
                Ok(dot) => {
                    dot.abs() > T::from_f(10.0) * tol * vecmath::norm(&u1) * vecmath::norm(&u2)
                }
                Err(_) => true,
            }
        })
        .count();

    let subset_failures = (0..counts.subset as u64)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = gen::stream_rng(seed, SUBSET_BLOCK + i);
            let count = rng.random_range(3..=5);
            let xs: Vec<Vec<T>> = gen::random_orthogonal_family(&mut rng, 5, count);
            let fam = match geometry::VectorFamily::from_orthogonal(&xs) {
                Ok(f) => f,
                Err(_) => return true,
            };
            match geometry::lemma3_check(&fam, tol) {
                Ok(report) => {
                    !report.holds
                        || report
                            .subset_norms
                            .iter()
                            .any(|n| (*n - report.base_norm).abs() > tol * report.base_norm)
                }
                Err(_) => true,
            }
        })
        .count();

    let exclusion_violations = (0..counts.exclusion as u64)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = gen::stream_rng(seed, EXCLUSION_BLOCK + i);
            geometry::exclusion_search_trial::<T, _>(&mut rng, tol).is_some()
        })
        .count();

    LemmaSuiteReport {
        counts,
        decompose_failures,
        orthogonality_failures,
        subset_failures,
        exclusion_violations,
    }
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let f = 10f64.powi(digits - 1 - e);
    (x * f).round() / f
}

fn drop_atom<T: Scalar>(field: &Field<T>, i: usize) -> Option<Field<T>> {
    if field.len() < 2 {
        return None;
    }
    let mut weights: Vec<T> = field.space().weights().to_vec();
    let mut rows = field.rows();
    weights.remove(i);
    rows.remove(i);
    let total = weights.iter().fold(T::zero(), |a, &w| a + w);
    let weights = weights.into_iter().map(|w| w / total).collect();
    Field::from_parts(Some(weights), rows).ok()
}

fn is_uniform<T: Scalar>(field: &Field<T>) -> bool {
    let w0 = T::one() / T::from_f(field.len() as f64);
    field
        .space()
        .weights()
        .iter()
        .all(|&w| (w - w0).abs() <= T::epsilon() * T::from_f(8.0))
}

/// Greedy shrink of a counterexample field: repeatedly drop atoms, switch to
/// uniform weights, zero coordinates, and round values to few significant
/// digits, keeping each edit only if `still_failing` stays true. The result
/// still fails and is no larger than the input.
pub fn minimize_field<T: Scalar>(
    field: &Field<T>,
    still_failing: &(dyn Fn(&Field<T>) -> bool + Sync),
) -> Field<T> {
    let mut best = field.clone();
    loop {
        let mut improved = false;

        loop {
            let dropped = (0..best.len())
                .filter_map(|i| drop_atom(&best, i))
                .find(|cand| still_failing(cand));
            match dropped {
                Some(cand) => {
                    best = cand;
                    improved = true;
                }
                None => break,
            }
        }

        if !is_uniform(&best) {
            if let Ok(cand) = Field::from_parts(None, best.rows()) {
                if still_failing(&cand) {
                    best = cand;
                    improved = true;
                }
            }
        }

        for i in 0..best.len() {
            for j in 0..best.dim() {
                let mut rows = best.rows();
                if rows[i][j] == T::zero() {
                    continue;
                }
                rows[i][j] = T::zero();
                let cand = Field::from_parts(Some(best.space().weights().to_vec()), rows);
                if let Ok(cand) = cand {
                    if still_failing(&cand) {
                        best = cand;
                        improved = true;
                    }
                }
            }
        }

        for digits in 1..=6 {
            let rows: Vec<Vec<T>> = best
                .rows()
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|x| T::from_f(round_sig(x.to_f64_lossy(), digits)))
                        .collect()
                })
                .collect();
            if rows == best.rows() {
                break;
            }
            if let Ok(cand) = Field::from_parts(Some(best.space().weights().to_vec()), rows) {
                if still_failing(&cand) {
                    best = cand;
                    improved = true;
                    break;
                }
            }
        }

        if !improved {
            return best;
        }
    }
}

/// Greedy shrink of a counterexample sign sum, mirroring [`minimize_field`]:
/// drop coefficient vectors, zero coordinates, round to few digits.
pub fn minimize_sum<T: Scalar>(
    sum: &RademacherSum<T>,
    still_failing: &(dyn Fn(&RademacherSum<T>) -> bool + Sync),
) -> RademacherSum<T> {
    let mut best = sum.clone();
    loop {
        let mut improved = false;

        loop {
            let mut found = None;
            if best.len() > 1 {
                for i in 0..best.len() {
                    let mut xs = best.xs().to_vec();
                    xs.remove(i);
                    if let Ok(cand) = RademacherSum::new(xs) {
                        if still_failing(&cand) {
                            found = Some(cand);
                            break;
                        }
                    }
                }
            }
            match found {
                Some(cand) => {
                    best = cand;
                    improved = true;
                }
                None => break,
            }
        }

        for i in 0..best.len() {
            for j in 0..best.dim() {
                let mut xs = best.xs().to_vec();
                if xs[i][j] == T::zero() {
                    continue;
                }
                xs[i][j] = T::zero();
                if let Ok(cand) = RademacherSum::new(xs) {
                    if still_failing(&cand) {
                        best = cand;
                        improved = true;
                    }
                }
            }
        }

        for digits in 1..=6 {
            let xs: Vec<Vec<T>> = best
                .xs()
                .iter()
                .map(|x| {
                    x.iter()
                        .map(|c| T::from_f(round_sig(c.to_f64_lossy(), digits)))
                        .collect()
                })
                .collect();
            if xs == best.xs() {
                break;
            }
            if let Ok(cand) = RademacherSum::new(xs) {
                if still_failing(&cand) {
                    best = cand;
                    improved = true;
                    break;
                }
            }
        }

        if !improved {
            return best;
        }
    }
}
