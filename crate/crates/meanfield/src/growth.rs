use numkit::SymmetricMatrix;
use serde::{Deserialize, Serialize};

use crate::decompose::orthogonal_decompose;
use crate::kmeasure::g_inner;
use crate::map::cov_map_step;
use crate::{MeanFieldConfig, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthStep {
    pub step: usize,
    /// `⟨C_t − C*, G⟩ / ‖G‖_F`.
    pub g_component: f64,
    pub l_norm: f64,
    pub m_norm: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub epsilon: f64,
    pub steps: Vec<GrowthStep>,
    /// Per-step ratio of successive G-components.
    pub ratios: Vec<f64>,
    /// `exp` of the least-squares slope of `ln |g_t|`.
    pub fitted_rate: Option<f64>,
    /// Set when the deviation left the linear regime and the trace was cut.
    pub truncated: bool,
}

impl GrowthTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,g_component,l_norm,m_norm,total_deviation\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                s.step, s.g_component, s.l_norm, s.m_norm, s.deviation
            ));
        }
        out
    }

    /// Per-step growth of the `V_L` component, when measurable.
    pub fn l_ratios(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .filter(|w| w[0].l_norm > NOISE_FLOOR)
            .map(|w| w[1].l_norm / w[0].l_norm)
            .collect()
    }
}

const NOISE_FLOOR: f64 = 1e-13;

/// Ratio `⟨S C S, G⟩ / ⟨C, G⟩` of initial G-components with and without
/// reweighting.
pub fn initial_g_ratio(c: &SymmetricMatrix, s: &[f64]) -> f64 {
    let g = SymmetricMatrix::centering(c.dim());
    c.diag_conjugate(s).inner(&g) / c.inner(&g)
}

/// Iterates the map of `cfg` from `C* + ε·Δ` and records the decomposition
/// of the deviation from `C*` at every step.
pub fn theorem2_growth(
    cfg: &MeanFieldConfig,
    point: &SymmetricMatrix,
    direction: &SymmetricMatrix,
    epsilon: f64,
    steps: usize,
) -> Result<GrowthTrace> {
    let d = cfg.d;
    let g = SymmetricMatrix::centering(d);
    let gnorm = g.frobenius_norm();
    let q = point.trace() / d as f64;
    let mut c = point.axpy(epsilon, direction);
    let mut out = Vec::with_capacity(steps + 1);
    let mut truncated = false;
    for t in 0..=steps {
        let dev = c.sub(point);
        let parts = orthogonal_decompose(&dev);
        let deviation = dev.frobenius_norm();
        if deviation > 1e-2 * q {
            truncated = true;
            break;
        }
        out.push(GrowthStep {
            step: t,
            g_component: dev.inner(&g) / gnorm,
            l_norm: parts.cl.frobenius_norm(),
            m_norm: parts.cm.frobenius_norm(),
            deviation,
        });
        if t < steps {
            c = cov_map_step(cfg, &c)?;
        }
    }
    let ratios: Vec<f64> = out
        .windows(2)
        .filter(|w| w[0].g_component.abs() > NOISE_FLOOR)
        .map(|w| w[1].g_component / w[0].g_component)
        .collect();
    let usable: Vec<(f64, f64)> = out
        .iter()
        .filter(|s| s.g_component.abs() > NOISE_FLOOR)
        .map(|s| (s.step as f64, s.g_component.abs().ln()))
        .collect();
    let fitted_rate = if usable.len() >= 2 {
        let n = usable.len() as f64;
        let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
        let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    } else {
        ratios.first().copied()
    };
    Ok(GrowthTrace {
        epsilon,
        steps: out,
        ratios,
        fitted_rate,
        truncated,
    })
}

/// Convenience wrapper: `G`-component of `S C S` computed from the closed form.
pub fn reweighted_g_component(c: &SymmetricMatrix, s: &[f64]) -> f64 {
    g_inner(c, s)
}
