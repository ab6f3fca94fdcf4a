use numkit::{RngStream, SymmetricMatrix};

/// `(1/m)·Σ z_k z_kᵀ` with `m = dof` standard normal vectors in `ℝ^d`.
pub fn wishart(d: usize, dof: usize, rng: &mut RngStream) -> SymmetricMatrix {
    let mut acc = vec![0.0; d * d];
    let mut z = vec![0.0; d];
    for _ in 0..dof {
        z.iter_mut().for_each(|x| *x = rng.normal());
        for i in 0..d {
            for j in i..d {
                acc[i * d + j] += z[i] * z[j];
            }
        }
    }
    SymmetricMatrix::from_upper(d, |i, j| acc[i * d + j] / dof as f64)
}
