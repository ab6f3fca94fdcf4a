use numkit::SymmetricMatrix;
use serde::{Deserialize, Serialize};

use crate::map::cov_map_step;
use crate::operator::{jacobian_fd, svec, SymmetricOperator};
use crate::{MeanFieldConfig, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingSearch {
    pub s_star: Vec<f64>,
    /// `‖J(S*CS*)‖_F / ‖J(C)‖_F`.
    pub ratio: f64,
    pub baseline: f64,
    pub objective: f64,
    pub iterations: usize,
    /// Line search gave up while the tangent gradient was still non-negligible.
    pub stalled: bool,
}

const S_FLOOR: f64 = 1e-6;

fn objective(jac: &SymmetricOperator, c: &SymmetricMatrix, s: &[f64]) -> (f64, Vec<f64>) {
    let x = c.diag_conjugate(s);
    let y = jac.apply_svec(&svec(&x));
    let value: f64 = y.iter().map(|v| v * v).sum();
    let m = jac.adjoint().apply(&crate::operator::smat(c.dim(), &y));
    let d = c.dim();
    let grad = (0..d)
        .map(|k| 4.0 * (0..d).map(|j| m.get(k, j) * c.get(k, j) * s[j]).sum::<f64>())
        .collect();
    (value, grad)
}

fn project_to_sphere(s: &mut [f64]) {
    let d = s.len() as f64;
    s.iter_mut().for_each(|x| *x = x.max(S_FLOOR));
    let norm = (s.iter().map(|x| x * x).sum::<f64>() / d).sqrt();
    s.iter_mut().for_each(|x| *x /= norm);
}

/// Minimizes `‖J(S C S)‖_F` over positive `s` with `Σ s_i² = d`, where `J` is
/// the Jacobian of the covariance map (without reweighting) at `C`.
/// Starts from `s = 𝟙` and runs projected gradient descent with backtracking.
pub fn theorem1_search(c: &SymmetricMatrix, cfg: &MeanFieldConfig, iters: usize, fd_step: f64) -> Result<ScalingSearch> {
    let plain = cfg.without_scaling();
    let jac = jacobian_fd(|m| cov_map_step(&plain, m), c, fd_step)?;
    let d = c.dim();
    let mut s = vec![1.0; d];
    let (base_sq, _) = objective(&jac, c, &s);
    let mut value = base_sq;
    let mut step = 1.0;
    let mut stalled = false;
    let mut iterations = 0;
    for _ in 0..iters {
        let (_, grad) = objective(&jac, c, &s);
        let radial = grad.iter().zip(&s).map(|(g, x)| g * x).sum::<f64>() / d as f64;
        let tangent: Vec<f64> = grad.iter().zip(&s).map(|(g, x)| g - radial * x).collect();
        let gnorm = tangent.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm <= 1e-9 * value.max(1e-300) {
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = s.iter().zip(&tangent).map(|(x, g)| x - step * g / gnorm).collect();
            project_to_sphere(&mut trial);
            let (v, _) = objective(&jac, c, &trial);
            if v < value - 1e-4 * step * gnorm * 1e-3 {
                s = trial;
                value = v;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            stalled = gnorm > 1e-6 * value;
            break;
        }
    }
    let baseline = base_sq.sqrt();
    let objective = value.sqrt();
    Ok(ScalingSearch {
        ratio: objective / baseline,
        s_star: s,
        baseline,
        objective,
        iterations,
        stalled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_optimal() {
        let cfg = MeanFieldConfig::new(4, 0.5).unwrap();
        let r = theorem1_search(&SymmetricMatrix::identity(4), &cfg, 100, 1e-5).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.s_star, vec![1.0; 4]);
    }
}
