use serde::{Deserialize, Serialize};

use crate::{MeanFieldError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Setup of one constant-width layer of the covariance recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldConfig {
    pub d: usize,
    /// Bias variance; the bias covariance is `sigma_b2 · I`.
    pub sigma_b2: f64,
    /// Diagonal of the reweighting matrix `S`.
    pub s: Vec<f64>,
    pub activation: Activation,
    /// Use the dimension-normalized activation instead of the plain one.
    pub normalized: bool,
}

impl MeanFieldConfig {
    pub fn new(d: usize, sigma_b2: f64) -> Result<Self> {
        let cfg = Self {
            d,
            sigma_b2,
            s: vec![1.0; d],
            activation: Activation::Relu,
            normalized: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn normalized(mut self, yes: bool) -> Self {
        self.normalized = yes;
        self
    }

    pub fn with_scaling(mut self, s: Vec<f64>) -> Result<Self> {
        self.s = s;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(MeanFieldError::InvalidConfig(format!("width d = {} < 2", self.d)));
        }
        if !(self.sigma_b2 >= 0.0) || !self.sigma_b2.is_finite() {
            return Err(MeanFieldError::InvalidConfig(format!(
                "bias variance {} must be finite and >= 0",
                self.sigma_b2
            )));
        }
        if self.s.len() != self.d {
            return Err(MeanFieldError::InvalidConfig(format!(
                "scaling vector has length {}, expected {}",
                self.s.len(),
                self.d
            )));
        }
        if let Some(bad) = self.s.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(MeanFieldError::InvalidConfig(format!("scaling entry {bad} must be > 0")));
        }
        Ok(())
    }

    pub fn has_identity_scaling(&self) -> bool {
        self.s.iter().all(|&x| x == 1.0)
    }

    /// Same configuration with `S = I`.
    pub fn without_scaling(&self) -> Self {
        Self {
            s: vec![1.0; self.d],
            ..self.clone()
        }
    }
}
