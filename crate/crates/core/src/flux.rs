//! The numerical-flux family
//!
//! ```text
//! u_x-tilde = {u_x} + alpha1 [u_x] + beta1 [u]
//! u-hat     = {u}   + alpha2 [u]   + beta2 [u_x]
//! ```
//!
//! with `[v] = v+ - v-` and `{v} = (v+ + v-) / 2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REAL_TOL: f64 = 1e-14;

/// Flux coefficients at one mesh size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxParams {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta1: Complex64,
    pub beta2: Complex64,
}

/// The real conservative slice `alpha2 = -alpha1` used by the projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealFlux {
    pub alpha1: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl FluxParams {
    pub fn new(alpha1: Complex64, alpha2: Complex64, beta1: Complex64, beta2: Complex64) -> Self {
        Self {
            alpha1,
            alpha2,
            beta1,
            beta2,
        }
    }

    /// Real parameters with `alpha2 = -alpha1`.
    pub fn real(alpha1: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            alpha1: Complex64::new(alpha1, 0.0),
            alpha2: Complex64::new(-alpha1, 0.0),
            beta1: Complex64::new(beta1, 0.0),
            beta2: Complex64::new(beta2, 0.0),
        }
    }

    pub fn central() -> Self {
        Self::real(0.0, 0.0, 0.0)
    }

    /// `alpha1 = -alpha2 = 1/2` (or `-1/2`), no penalties.
    pub fn alternating(sign: f64) -> Self {
        Self::real(0.5 * sign.signum(), 0.0, 0.0)
    }

    pub fn is_real(&self) -> bool {
        [self.alpha1, self.alpha2, self.beta1, self.beta2]
            .iter()
            .all(|z| z.im.abs() <= REAL_TOL * (1.0 + z.re.abs()))
    }

    /// All coefficients real and `alpha2 = -alpha1`.
    pub fn is_real_mode(&self) -> bool {
        self.is_real() && (self.alpha1.re + self.alpha2.re).abs() <= REAL_TOL * (1.0 + self.alpha1.re.abs())
    }

    pub fn as_real(&self) -> Result<RealFlux> {
        if !self.is_real_mode() {
            return Err(Error::NotRealMode);
        }
        Ok(RealFlux {
            alpha1: self.alpha1.re,
            beta1: self.beta1.re,
            beta2: self.beta2.re,
        })
    }
}

impl RealFlux {
    pub fn to_params(self) -> FluxParams {
        FluxParams::real(self.alpha1, self.beta1, self.beta2)
    }

    /// `alpha1^2 + beta1 beta2 - 1/4`; zero on the local family.
    pub fn local_defect(&self) -> f64 {
        self.alpha1 * self.alpha1 + self.beta1 * self.beta2 - 0.25
    }
}

/// How a penalty coefficient depends on the mesh size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum BetaLaw {
    /// `coef * h^exponent`
    Power { coef: Complex64, exponent: f64 },
    /// `coef / (h (1 + h))`
    InvHOnePlusH { coef: f64 },
}

impl BetaLaw {
    pub fn constant(c: f64) -> Self {
        BetaLaw::Power {
            coef: Complex64::new(c, 0.0),
            exponent: 0.0,
        }
    }

    pub fn complex(c: Complex64) -> Self {
        BetaLaw::Power {
            coef: c,
            exponent: 0.0,
        }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        BetaLaw::Power {
            coef: Complex64::new(coef, 0.0),
            exponent,
        }
    }

    pub fn at(&self, h: f64) -> Complex64 {
        match *self {
            BetaLaw::Power { coef, exponent } => {
                if coef == Complex64::new(0.0, 0.0) {
                    coef
                } else {
                    coef * h.powf(exponent)
                }
            }
            BetaLaw::InvHOnePlusH { coef } => Complex64::new(coef / (h * (1.0 + h)), 0.0),
        }
    }

    /// `(tilde_beta, A)` for a real power law. A zero coefficient reports
    /// `A = +inf`.
    pub fn scaling(&self) -> Option<(f64, f64)> {
        match *self {
            BetaLaw::Power { coef, exponent } if coef.im == 0.0 => {
                if coef.re == 0.0 {
                    Some((0.0, f64::INFINITY))
                } else {
                    Some((coef.re, exponent))
                }
            }
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, BetaLaw::Power { coef, .. } if coef == Complex64::new(0.0, 0.0))
    }
}

/// A flux parameter set whose penalties may scale with `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxFamily {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta1: BetaLaw,
    pub beta2: BetaLaw,
}

impl FluxFamily {
    /// Real family with `alpha2 = -alpha1`.
    pub fn real(alpha1: f64, beta1: BetaLaw, beta2: BetaLaw) -> Self {
        Self {
            alpha1: Complex64::new(alpha1, 0.0),
            alpha2: Complex64::new(-alpha1, 0.0),
            beta1,
            beta2,
        }
    }

    /// `beta1 = tb1 h^a1`, `beta2 = tb2 h^a2`.
    pub fn scaled(alpha1: f64, tb1: f64, a1: f64, tb2: f64, a2: f64) -> Self {
        Self::real(alpha1, BetaLaw::power(tb1, a1), BetaLaw::power(tb2, a2))
    }

    pub fn fixed(p: FluxParams) -> Self {
        Self {
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            beta1: BetaLaw::complex(p.beta1),
            beta2: BetaLaw::complex(p.beta2),
        }
    }

    pub fn at(&self, h: f64) -> FluxParams {
        FluxParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            beta1: self.beta1.at(h),
            beta2: self.beta2.at(h),
        }
    }

    pub fn is_real_mode(&self) -> bool {
        self.at(1.0).is_real_mode()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityLabel {
    Conservative,
    Dissipative,
    Unverified,
}

/// Result of the L2-stability check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityClass {
    pub label: StabilityLabel,
    /// `Im beta2`, must be `>= 0`
    pub im_beta2: f64,
    /// `-Im beta1`, must be `>= 0`
    pub neg_im_beta1: f64,
    /// `4 (-Im beta1)(Im beta2) - |alpha1 + conj(alpha2)|^2`, must be `>= 0`
    pub penalty_margin: f64,
}

/// Classifies a parameter set by the sufficient L2-stability conditions.
///
/// Real parameters with `alpha1 + alpha2 = 0` conserve the discrete L2 norm.
/// Otherwise the norm is non-increasing when `Im beta2 >= 0`,
/// `Im beta1 <= 0` and `|alpha1 + conj(alpha2)|^2 <= -4 Im beta1 Im beta2`;
/// when these fail the conditions say nothing, so the label is `Unverified`.
pub fn check_stability(p: &FluxParams) -> StabilityClass {
    let im_beta2 = p.beta2.im;
    let neg_im_beta1 = -p.beta1.im;
    let penalty_margin = 4.0 * neg_im_beta1 * im_beta2 - (p.alpha1 + p.alpha2.conj()).norm_sqr();
    let scale = 1.0 + p.alpha1.norm_sqr() + p.alpha2.norm_sqr();
    let tol = 1e-14 * scale;
    let label = if p.is_real_mode() {
        StabilityLabel::Conservative
    } else if im_beta2 >= -tol && neg_im_beta1 >= -tol && penalty_margin >= -tol {
        StabilityLabel::Dissipative
    } else {
        StabilityLabel::Unverified
    };
    StabilityClass {
        label,
        im_beta2,
        neg_im_beta1,
        penalty_margin,
    }
}
