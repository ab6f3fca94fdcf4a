use numkit::SymmetricMatrix;
use serde::{Deserialize, Serialize};

/// Frobenius-orthogonal split `C = C_0 + C_G + C_L + C_M` of `H_d`:
///
/// * `V_0 = {D𝟙ᵀ + 𝟙Dᵀ}`, the kernel of `C ↦ GCG`;
/// * `ℝG`;
/// * `V_L = {G·D·G : D diagonal, tr D = 0}`;
/// * `V_M`: zero-diagonal matrices with zero row sums.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub c0: SymmetricMatrix,
    pub cg: SymmetricMatrix,
    pub cl: SymmetricMatrix,
    pub cm: SymmetricMatrix,
}

impl Decomposition {
    pub fn sum(&self) -> SymmetricMatrix {
        self.c0.add(&self.cg).add(&self.cl).add(&self.cm)
    }
}

pub fn orthogonal_decompose(c: &SymmetricMatrix) -> Decomposition {
    let d = c.dim();
    let g = SymmetricMatrix::centering(d);
    let x = c.sandwich(&g);
    let c0 = c.sub(&x);
    let cg = g.scale(x.inner(&g) / g.inner(&g));
    // For traceless diagonal D, diag(G D G) = (1 − 2/d)·D.
    let shrink = 1.0 - 2.0 / d as f64;
    let cl = if d >= 3 {
        let diag = x.diag();
        let mean = diag.iter().sum::<f64>() / d as f64;
        let dstar: Vec<f64> = diag.iter().map(|v| (v - mean) / shrink).collect();
        SymmetricMatrix::diagonal(&dstar).sandwich(&g)
    } else {
        SymmetricMatrix::zeros(d)
    };
    let cm = if d >= 4 {
        x.sub(&cg).sub(&cl)
    } else {
        SymmetricMatrix::zeros(d)
    };
    Decomposition { c0, cg, cl, cm }
}

/// Dimensions of `(V_0, ℝG, V_L, V_M)`.
pub fn subspace_dims(d: usize) -> (usize, usize, usize, usize) {
    let l = if d >= 3 { d - 1 } else { 0 };
    let m = if d >= 4 { d * (d - 3) / 2 } else { 0 };
    (d, 1, l, m)
}
