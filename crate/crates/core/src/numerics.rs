//! Small numerical kernels shared by the design algorithms.

use nalgebra::DVector;

use crate::{CMatrix, CVector, Complex64, Error, Result};

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 1000;

/// Relative residual below which a Gram-Schmidt direction counts as degenerate.
pub const GS_DEGENERATE_TOL: f64 = 1e-10;

/// Argument of a complex number with `angle(0) = 0`.
#[inline]
pub fn angle(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.im.atan2(z.re)
    }
}

/// Leading singular triplet `q ≈ sigma · p · g^H`.
#[derive(Debug, Clone)]
pub struct Rank1Triplet {
    pub sigma: f64,
    /// Left singular vector (length = rows of `q`).
    pub p: CVector,
    /// Right singular vector (length = columns of `q`).
    pub g: CVector,
    pub iterations: usize,
}

/// Dominant singular triplet of `q` by alternating power iteration.
///
/// Converged when both `‖q g − σ p‖` and `‖q^H p − σ g‖` are at most
/// `tol · σ`. The start vector is the normalized all-ones vector; if `q`
/// annihilates it a fixed quasi-random unit vector is used instead. The
/// returned pair is phase-normalized so that the largest-modulus entry of
/// `g` is real positive.
pub fn power_iteration_rank1(q: &CMatrix, tol: f64, max_iter: usize) -> Result<Rank1Triplet> {
    let (rows, cols) = q.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("power iteration on an empty matrix"));
    }
    let q_norm = q.norm();
    if !(q_norm > 0.0) || !q_norm.is_finite() {
        return Err(Error::invalid("power iteration needs a nonzero finite matrix"));
    }
    let q_h = q.adjoint();

    let mut g = CVector::from_element(cols, Complex64::new(1.0 / (cols as f64).sqrt(), 0.0));
    let mut qg = q * &g;
    if qg.norm() <= 1e-12 * q_norm {
        g = fallback_start(cols);
        qg = q * &g;
    }

    let mut p = CVector::zeros(rows);
    let mut sigma = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let s = qg.norm();
        if s == 0.0 {
            return Err(Error::invalid("power iteration collapsed to the null space"));
        }
        p = &qg / Complex64::from(s);
        let h = &q_h * &p;
        sigma = h.norm();
        g = h / Complex64::from(sigma);
        qg = q * &g;
        residual = (&qg - &p * Complex64::from(sigma)).norm();
        if residual <= tol * sigma {
            let (p, g) = normalize_phase(p, g);
            return Ok(Rank1Triplet {
                sigma,
                p,
                g,
                iterations: it,
            });
        }
    }
    let (p, g) = normalize_phase(p, g);
    Err(Error::ConvergenceFailure {
        iterations: max_iter,
        residual: residual / sigma.max(f64::MIN_POSITIVE),
        last: Box::new(Rank1Triplet {
            sigma,
            p,
            g,
            iterations: max_iter,
        }),
    })
}

fn fallback_start(n: usize) -> CVector {
    // Golden-angle phases with a slowly varying amplitude.
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let v = CVector::from_fn(n, |k, _| {
        Complex64::from_polar(1.0 + 0.5 * ((k + 1) as f64).sin(), golden * k as f64)
    });
    let nrm = v.norm();
    v / Complex64::from(nrm)
}

fn normalize_phase(p: CVector, g: CVector) -> (CVector, CVector) {
    let rot = unit_phase_of_largest(&g).conj();
    (p * rot, g * rot)
}

/// Unit phasor of the largest-modulus entry (first one on ties), or 1 for a zero vector.
pub(crate) fn unit_phase_of_largest(v: &CVector) -> Complex64 {
    let mut best = Complex64::new(0.0, 0.0);
    let mut best_mod = 0.0;
    for z in v.iter() {
        let m = z.norm();
        if m > best_mod {
            best_mod = m;
            best = *z;
        }
    }
    if best_mod == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        best / best_mod
    }
}

/// One classical Gram-Schmidt step with a second re-orthogonalization pass.
///
/// Returns `q / ‖q‖` where `q = v − Σ_j (d_jᴴ v) d_j`.
pub fn gram_schmidt_append(basis: &[CVector], v: &CVector) -> Result<CVector> {
    for d in basis {
        if d.len() != v.len() {
            return Err(Error::invalid(format!(
                "basis vector of length {} does not match input of length {}",
                d.len(),
                v.len()
            )));
        }
    }
    let v_norm = v.norm();
    let mut q = v.clone();
    for _ in 0..2 {
        for d in basis {
            let c = d.dotc(&q);
            q.axpy(-c, d, Complex64::new(1.0, 0.0));
        }
    }
    let q_norm = q.norm();
    if !(q_norm > GS_DEGENERATE_TOL * v_norm) {
        return Err(Error::DegenerateDirection {
            residual: if v_norm > 0.0 { q_norm / v_norm } else { 0.0 },
        });
    }
    Ok(q / Complex64::from(q_norm))
}

/// `log2 |det m|` from the pivots of a partially pivoted LU factorization.
/// Singular matrices give negative infinity.
pub fn logdet2_abs(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "log-determinant needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let piv = u[(i, i)].norm();
        if piv == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += piv.log2();
    }
    Ok(acc)
}

/// Solves `a x = b` by partially pivoted LU. Returns `None` when the
/// smallest pivot is below `rcond · (largest pivot)`.
pub fn solve_checked(a: &CMatrix, b: &CMatrix, rcond: f64) -> Option<CMatrix> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return None;
    }
    let lu = a.clone().lu();
    let diag: DVector<f64> = lu.u().diagonal().map(|z| z.norm());
    let max = diag.max();
    let min = diag.min();
    if !(max > 0.0) || !(min > rcond * max) {
        return None;
    }
    lu.solve(b)
}

/// Maximum absolute deviation of `aᴴ a` from the identity.
pub fn gram_deviation(a: &CMatrix) -> f64 {
    let g = a.adjoint() * a;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, k: usize) -> CMatrix {
        CMatrix::from_fn(r, k, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn angle_of_zero_is_zero() {
        assert_eq!(angle(c(0.0, 0.0)), 0.0);
        assert_eq!(angle(c(-0.0, 0.0)), 0.0);
        assert_eq!(angle(c(-0.0, -0.0)), 0.0);
        assert!((angle(c(0.0, 1.0)) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn power_iteration_diagonal() {
        let q = CMatrix::from_diagonal(&CVector::from_vec(vec![c(3.0, 0.0), c(1.0, 0.0)]));
        let t = power_iteration_rank1(&q, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!((t.sigma - 3.0).abs() < 1e-9);
        assert!((t.p[0].norm() - 1.0).abs() < 1e-9);
        assert!((t.g[0].norm() - 1.0).abs() < 1e-9);
        assert!(t.g[1].norm() < 1e-9);
    }

    #[test]
    fn power_iteration_rank_one_is_immediate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_vector(&mut rng, 7);
        let v = random_vector(&mut rng, 5);
        let q = &u * v.adjoint();
        let t = power_iteration_rank1(&q, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!(t.iterations <= 2, "took {} iterations", t.iterations);
        assert!((t.sigma - u.norm() * v.norm()).abs() < 1e-12 * t.sigma);
    }

    #[test]
    fn power_iteration_matches_full_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let q = random_matrix(&mut rng, 16, 16);
            let sv = q.clone().singular_values();
            let top = sv.max();
            let t = power_iteration_rank1(&q, 1e-12, 100_000).unwrap();
            assert!((t.sigma - top).abs() < 1e-8 * top, "{} vs {}", t.sigma, top);
            assert!((t.p.norm() - 1.0).abs() < 1e-12);
            assert!((t.g.norm() - 1.0).abs() < 1e-12);
            let res = (&q * &t.g - &t.p * c(t.sigma, 0.0)).norm();
            assert!(res <= 1e-12 * t.sigma * 1.0001);
        }
    }

    #[test]
    fn power_iteration_start_orthogonal_to_range() {
        // Q annihilates the all-ones vector.
        let q = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(-1.0, 0.0), c(2.0, 0.0), c(-2.0, 0.0)]);
        let t = power_iteration_rank1(&q, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!((t.sigma - 10f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_reports_last_iterate() {
        let q = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.999, 0.0)]));
        match power_iteration_rank1(&q, 1e-14, 3) {
            Err(Error::ConvergenceFailure { iterations, last, .. }) => {
                assert_eq!(iterations, 3);
                assert!((last.g.norm() - 1.0).abs() < 1e-12);
            }
            other => panic!("expected convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn power_iteration_rejects_zero() {
        assert!(power_iteration_rank1(&CMatrix::zeros(3, 3), 1e-10, 10).is_err());
    }

    #[test]
    fn gram_schmidt_examples() {
        let v = CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]);
        let out = gram_schmidt_append(&[], &v).unwrap();
        assert_eq!(out, CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));

        let e1 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let s = 0.5f64.sqrt();
        let v = CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        let out = gram_schmidt_append(&[e1], &v).unwrap();
        assert!(out[0].norm() < 1e-15);
        assert!((out[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_schmidt_degenerate() {
        let e1 = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let v = CVector::from_vec(vec![c(0.0, 3.0), c(0.0, 0.0)]);
        assert!(matches!(
            gram_schmidt_append(&[e1], &v),
            Err(Error::DegenerateDirection { .. })
        ));
    }

    #[test]
    fn gram_schmidt_random_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..1000 {
            let n = 6 + trial % 5;
            let k = trial % n;
            let mut basis: Vec<CVector> = Vec::new();
            for _ in 0..k {
                let v = random_vector(&mut rng, n);
                basis.push(gram_schmidt_append(&basis, &v).unwrap());
            }
            let v = random_vector(&mut rng, n);
            let out = gram_schmidt_append(&basis, &v).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
            for d in &basis {
                assert!(d.dotc(&out).norm() <= 1e-9);
            }
            // span preservation: v lies in span(basis ∪ {out})
            let mut r = v.clone();
            for d in basis.iter().chain(std::iter::once(&out)) {
                let cf = d.dotc(&r);
                r.axpy(-cf, d, c(1.0, 0.0));
            }
            assert!(r.norm() <= 1e-10 * v.norm());
        }
    }

    #[test]
    fn logdet_examples() {
        for n in 1..6 {
            assert_eq!(logdet2_abs(&CMatrix::identity(n, n)).unwrap(), 0.0);
        }
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]));
        assert!((logdet2_abs(&d).unwrap() - 3.0).abs() < 1e-15);
        assert!(logdet2_abs(&CMatrix::zeros(2, 3)).is_err());
        assert_eq!(logdet2_abs(&CMatrix::zeros(3, 3)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn logdet_matches_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 6, 6);
            let expected: f64 = m.clone().singular_values().iter().map(|s| s.log2()).sum();
            assert!((logdet2_abs(&m).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn logdet_large_scale_does_not_overflow() {
        let m = CMatrix::from_diagonal_element(8, 8, c(1e300, 0.0));
        assert!((logdet2_abs(&m).unwrap() - 8.0 * 1e300f64.log2()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn logdet_is_multiplicative(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, n, n);
            let b = random_matrix(&mut rng, n, n);
            let lhs = logdet2_abs(&(&a * &b)).unwrap();
            let rhs = logdet2_abs(&a).unwrap() + logdet2_abs(&b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-8);
        }

        #[test]
        fn power_iteration_dominates_any_unit_pair(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_matrix(&mut rng, 6, 5);
            let t = power_iteration_rank1(&q, DEFAULT_POWER_TOL, 100_000).unwrap();
            for _ in 0..20 {
                let w = random_vector(&mut rng, 6);
                let f = random_vector(&mut rng, 5);
                let w = &w / c(w.norm(), 0.0);
                let f = &f / c(f.norm(), 0.0);
                let val = w.dotc(&(&q * &f)).norm();
                prop_assert!(val <= t.sigma * (1.0 + DEFAULT_POWER_TOL));
            }
        }
    }
}
