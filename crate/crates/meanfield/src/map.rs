use numkit::SymmetricMatrix;

use crate::kernel::v_phi;
use crate::{MeanFieldConfig, Result};

/// One layer of the covariance recursion: `C ↦ V(S C S) + σ_b² I`.
pub fn cov_map_step(cfg: &MeanFieldConfig, c: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let v = v_phi(cfg, c)?;
    Ok(SymmetricMatrix::from_upper(cfg.d, |i, j| {
        if i == j {
            v.get(i, i) + cfg.sigma_b2
        } else {
            v.get(i, j)
        }
    }))
}
