use crate::error::{Result, VmlError};

/// Soft-potential Landau kernel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionParams {
    gamma: f64,
    c_phi: f64,
}

impl CollisionParams {
    /// Requires `-3 <= gamma < -2` and `c_phi > 0`.
    pub fn new(gamma: f64, c_phi: f64) -> Result<Self> {
        if !(-3.0..-2.0).contains(&gamma) {
            return Err(VmlError::Parameter(format!(
                "gamma must satisfy -3 <= gamma < -2, got {gamma}"
            )));
        }
        if !(c_phi.is_finite() && c_phi > 0.0) {
            return Err(VmlError::Parameter(format!("C_phi must be positive, got {c_phi}")));
        }
        Ok(Self { gamma, c_phi })
    }

    /// Coulomb interaction, `gamma = -3`, `C_phi = 1`.
    pub fn coulomb() -> Self {
        Self { gamma: -3.0, c_phi: 1.0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }
}

impl Default for CollisionParams {
    fn default() -> Self {
        Self::coulomb()
    }
}
