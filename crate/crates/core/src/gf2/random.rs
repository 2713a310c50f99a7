use rand::Rng;

use super::matrix::BitMatrix;
use crate::error::{Error, Result};
use crate::seed::Seed;

/// Uniform draw from GL(ℓ, F₂) by rejection: fill an ℓ×ℓ matrix with fair
/// bits and retry until it is nonsingular. Acceptance probability is
/// ∏_{j=1}^{ℓ} (1 − 2^{−j}) > 0.288, so this terminates quickly.
pub fn sample_nonsingular(ell: usize, seed: Seed) -> Result<BitMatrix> {
    sample_nonsingular_counted(ell, seed).map(|(m, _)| m)
}

/// As [`sample_nonsingular`], also returning the number of attempts taken.
pub fn sample_nonsingular_counted(ell: usize, seed: Seed) -> Result<(BitMatrix, usize)> {
    if ell == 0 || ell > 64 {
        return Err(Error::KernelSize(ell));
    }
    let mut rng = seed.rng();
    sample_with(ell, &mut rng)
}

fn sample_with<R: Rng>(ell: usize, rng: &mut R) -> Result<(BitMatrix, usize)> {
    let mask = if ell == 64 { u64::MAX } else { (1u64 << ell) - 1 };
    let mut rows = vec![0u64; ell];
    let mut attempts = 0;
    loop {
        attempts += 1;
        for r in rows.iter_mut() {
            *r = rng.gen::<u64>() & mask;
        }
        let m = BitMatrix::from_row_words(ell, &rows)?;
        if m.rank() == ell {
            return Ok((m, attempts));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_one_is_the_unit() {
        for s in 0..20 {
            let m = sample_nonsingular(1, Seed::new(s)).unwrap();
            assert_eq!(m, BitMatrix::identity(1).unwrap());
        }
    }

    #[test]
    fn draws_are_nonsingular_and_reproducible() {
        for ell in [2, 5, 17, 64] {
            let a = sample_nonsingular(ell, Seed::new(3).child(ell as u64)).unwrap();
            let b = sample_nonsingular(ell, Seed::new(3).child(ell as u64)).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.rank(), ell);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(sample_nonsingular(0, Seed::new(0)), Err(Error::KernelSize(0)));
        assert_eq!(sample_nonsingular(65, Seed::new(0)), Err(Error::KernelSize(65)));
    }
}
