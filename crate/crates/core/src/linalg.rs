//! Small dense complex matrix helpers shared by the lattice modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense complex matrix; every site variable is one of these.
pub type CMat = DMatrix<Complex64>;

pub fn zeros(p: usize) -> CMat {
    CMat::zeros(p, p)
}

pub fn identity(p: usize) -> CMat {
    CMat::identity(p, p)
}

/// `c` times the `p x p` identity.
pub fn scalar(c: Complex64, p: usize) -> CMat {
    CMat::from_diagonal_element(p, p, c)
}

pub fn real_scalar(c: f64, p: usize) -> CMat {
    scalar(Complex64::new(c, 0.0), p)
}

/// Frobenius norm.
pub fn frobenius(m: &CMat) -> f64 {
    m.norm()
}

/// Frobenius distance of `m* m` from the identity.
pub fn unitarity_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    (m.adjoint() * m - identity(n)).norm()
}

pub fn random_complex<R: Rng + ?Sized>(p: usize, rng: &mut R) -> CMat {
    CMat::from_fn(p, p, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed unitary from the QR factorization of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(p: usize, rng: &mut R) -> CMat {
    let z = random_complex(p, rng);
    let qr = z.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q;
    for c in 0..p {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..p {
            out[(row, c)] *= phase;
        }
    }
    out
}

/// Hermitian part check: largest entry of `m + m*`; zero for antihermitian input.
pub fn antihermitian_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    (m + m.adjoint())
        .iter()
        .fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in 1..5 {
            let u = random_unitary(p, &mut rng);
            assert!(unitarity_deviation(&u) < 1e-13);
        }
    }

    #[test]
    fn commutator_of_scalars_vanishes() {
        let a = real_scalar(3.0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_complex(3, &mut rng);
        assert!(commutator(&a, &b).norm() < 1e-14);
    }

    #[test]
    fn non_square_is_not_unitary() {
        assert!(unitarity_deviation(&CMat::zeros(2, 3)).is_infinite());
    }
}
