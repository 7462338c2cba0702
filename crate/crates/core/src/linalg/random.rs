use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DenseMatrix, LowerTriangular};

/// Diagonal magnitudes in `[1, 2]` with random sign, off-diagonal entries in `[-1/n, 1/n]`.
pub fn random_well_conditioned<R: Rng>(n: usize, rng: &mut R) -> LowerTriangular {
    let bound = 1.0 / n.max(1) as f64;
    let mut data = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let v = if c < r {
                rng.gen_range(-bound..=bound)
            } else if c == r {
                let mag = rng.gen_range(1.0..=2.0);
                if rng.gen::<bool>() {
                    mag
                } else {
                    -mag
                }
            } else {
                0.0
            };
            data.push(v);
        }
    }
    LowerTriangular::new(n, data).expect("generated matrix satisfies the triangular invariants")
}

/// Entries uniform in `[-1, 1]`.
pub fn random_rhs<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    DenseMatrix::new(rows, cols, data).expect("finite entries")
}

/// Reproducible `(L, B)` pair for a seed; `L` is `n × n`, `B` is `n × rhs`.
pub fn seeded_problem(n: usize, rhs: usize, seed: u64) -> (LowerTriangular, DenseMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = random_well_conditioned(n, &mut rng);
    let b = random_rhs(n, rhs, &mut rng);
    (l, b)
}
