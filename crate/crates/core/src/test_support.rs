use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::complex_gaussian_matrix;
use crate::linalg::{ComplexMatrix, HermitianMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_complex(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    complex_gaussian_matrix(r, rows, cols)
}

pub fn rand_hermitian(r: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let a = rand_complex(r, n, n);
    HermitianMatrix::symmetrize(&(&a + &a.adjoint()))
}

/// Random positive definite matrix `A A^H + 0.1 I`.
pub fn rand_pd(r: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let a = rand_complex(r, n, n);
    HermitianMatrix::symmetrize(&a.matmul(&a.adjoint())).add(&HermitianMatrix::scaled_identity(n, 0.1))
}
