//! GXNOR quantized space, activations, surrogate derivative, boundary
//! function and probabilistic projection.
//!
//! This is the pure-software reference against which the hardware synapse
//! update is validated: weights live in Z_N = { n/2^(N-1) - 1 } and every
//! update is decomposed into an integer number of quanta plus one Bernoulli
//! draw on the remainder.

use crate::error::{Error, Result};
use rand::Rng;

/// Discrete weight/activation space Z_N with resolution dz = 1/2^(N-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantSpace {
    n_bits: u32,
}

/// Result of one probabilistic projection of a bounded update value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionResult {
    /// Integer quotient of the bounded update by dz (truncated toward zero).
    pub kappa: i32,
    /// Signed remainder, |nu| < dz, sign(nu) = sign of the bounded update.
    pub nu: f64,
    /// Bernoulli parameter tau(nu) = tanh(m |nu| / dz).
    pub bernoulli_p: f64,
    /// Realized discrete step, a multiple of dz.
    pub delta_w: f64,
}

/// Rectangular surrogate-derivative window of the step activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationWindow {
    pub r: f64,
    pub a: f64,
}

impl Default for ActivationWindow {
    fn default() -> Self {
        ActivationWindow { r: 0.5, a: 0.5 }
    }
}

impl QuantSpace {
    /// Build Z_N. N = 0 is the binary space {-1, 1}, N = 1 the ternary
    /// {-1, 0, 1}. N > 8 is rejected as a practical cap.
    pub fn new(n_bits: u32) -> Result<Self> {
        if n_bits > 8 {
            return Err(Error::Parameter(format!(
                "quantized space N = {n_bits} exceeds the practical cap of 8"
            )));
        }
        Ok(QuantSpace { n_bits })
    }

    pub fn binary() -> Self {
        QuantSpace { n_bits: 0 }
    }

    pub fn ternary() -> Self {
        QuantSpace { n_bits: 1 }
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    /// Distance between adjacent states: dz = 1/2^(N-1) (so 2 for N = 0).
    pub fn resolution(&self) -> f64 {
        if self.n_bits == 0 {
            2.0
        } else {
            1.0 / (1u64 << (self.n_bits - 1)) as f64
        }
    }

    /// The 2^N + 1 states n/2^(N-1) - 1 for n = 0..2^N, except N = 0 where
    /// the space is {-1, 1}.
    pub fn states(&self) -> Vec<f64> {
        if self.n_bits == 0 {
            return vec![-1.0, 1.0];
        }
        let half = (1u64 << (self.n_bits - 1)) as f64;
        (0..=(1u64 << self.n_bits))
            .map(|n| n as f64 / half - 1.0)
            .collect()
    }

    pub fn contains(&self, w: f64) -> bool {
        self.states().iter().any(|s| (s - w).abs() < 1e-9)
    }

    /// Step activation: nearest state to clamp(x, -1, 1). For the binary
    /// space this is the sign function (0 maps up).
    pub fn activate(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        if self.n_bits == 0 {
            return if x < 0.0 { -1.0 } else { 1.0 };
        }
        let dz = self.resolution();
        let n = ((x + 1.0) / dz).round();
        (n * dz - 1.0).clamp(-1.0, 1.0)
    }
}

/// Boundary function rho of Eq. (4): cap delta so w + rho(delta) stays in
/// [-1, 1].
pub fn bound_update(w: f64, delta: f64) -> f64 {
    if delta > 0.0 {
        (1.0 - w).min(delta)
    } else {
        (-1.0 - w).max(delta)
    }
}

/// Probabilistic projection of a bounded update value onto the space:
/// kappa dz + sign(nu) Bern(tau(nu)) dz with tau(nu) = tanh(m |nu| / dz).
pub fn project<R: Rng + ?Sized>(
    space: QuantSpace,
    bounded_delta: f64,
    m: f64,
    rng: &mut R,
) -> Result<ProjectionResult> {
    if m <= 0.0 {
        return Err(Error::Parameter(format!("adjustment factor m = {m} must be positive")));
    }
    let dz = space.resolution();
    let kappa = (bounded_delta / dz).trunc() as i32;
    let nu = bounded_delta - kappa as f64 * dz;
    let p = (m * nu.abs() / dz).tanh();
    let extra = if rng.gen_bool(p) { nu.signum() * dz } else { 0.0 };
    let delta_w = kappa as f64 * dz + extra;
    Ok(ProjectionResult {
        kappa,
        nu,
        bernoulli_p: p,
        delta_w,
    })
}

/// Decompose a bounded update into quotient and remainder without drawing.
pub fn decompose(space: QuantSpace, bounded_delta: f64) -> (i32, f64) {
    let dz = space.resolution();
    let kappa = (bounded_delta / dz).trunc() as i32;
    (kappa, bounded_delta - kappa as f64 * dz)
}

/// Bernoulli parameter tau(nu) of Eq. (8).
pub fn tau(space: QuantSpace, nu: f64, m: f64) -> f64 {
    (m * nu.abs() / space.resolution()).tanh()
}

impl ActivationWindow {
    pub fn new(r: f64, a: f64) -> Result<Self> {
        if a <= 0.0 {
            return Err(Error::Parameter(format!("window half-width a = {a} must be positive")));
        }
        Ok(ActivationWindow { r, a })
    }

    /// Window derivative of Eq. (3): 1/(2a) on [r-a, r+a], 0 outside.
    pub fn grad(&self, x: f64) -> f64 {
        if x >= self.r - self.a && x <= self.r + self.a {
            1.0 / (2.0 * self.a)
        } else {
            0.0
        }
    }

    /// Piecewise-linear ramp whose derivative is exactly `grad`; used by the
    /// finite-difference gradient check.
    pub fn surrogate(&self, x: f64) -> f64 {
        let lo = self.r - self.a;
        let hi = self.r + self.a;
        let slope = 1.0 / (2.0 * self.a);
        if x < lo {
            0.0
        } else if x > hi {
            (hi - lo) * slope
        } else {
            (x - lo) * slope
        }
    }
}
