/// Numerical thresholds shared by all modules.
///
/// `hom` and `unit` bound structural defects (homomorphism relations,
/// unitarity) relative to operand norms. `zero` is the single cut-off for the
/// zero-versus-invertible decision and for numerical rank.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hom: f64,
    pub unit: f64,
    pub zero: f64,
}

impl Tolerances {
    /// Replaces the zero threshold, leaving the structural ones untouched.
    pub fn with_zero(mut self, zero: f64) -> Self {
        self.zero = zero;
        self
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hom: 1e-10,
            unit: 1e-10,
            zero: 1e-8,
        }
    }
}

/// Residual bound every emitted certificate must meet on re-verification.
pub const CERTIFICATE_TOL: f64 = 1e-8;
