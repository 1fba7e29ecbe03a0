//! MTJ switching physics: critical current, analytic high-current switching
//! time and probability, thermal initial-angle distribution, and the
//! resistance-vs-angle model.
//!
//! The stochastic LLG oracle lives in [`crate::llg`].

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054571817e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Vacuum permeability (T m/A).
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Electron gyromagnetic ratio (rad s^-1 T^-1).
pub const GYROMAGNETIC: f64 = 1.760859630e11;

/// Switching branch: which magnetization transition the current drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Parallel to anti-parallel, the (1+P) branch.
    PToAp,
    /// Anti-parallel to parallel, the (1-P) branch.
    ApToP,
}

/// Device parameters of the elliptic free layer and the junction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MtjDeviceParams {
    /// Gilbert damping (dimensionless).
    pub alpha: f64,
    /// Saturation magnetization expressed as mu0*Ms (tesla).
    pub mu0_ms: f64,
    /// Ellipse major axis (meters).
    pub a_axis: f64,
    /// Ellipse minor axis (meters).
    pub b_axis: f64,
    /// Free-layer thickness (meters).
    pub t_f: f64,
    /// Spin polarization, 0 < P < 1.
    pub polarization: f64,
    /// Gyromagnetic ratio (rad s^-1 T^-1).
    pub gamma: f64,
    /// Shape anisotropy field (A/m).
    pub h_k: f64,
    /// Temperature (kelvin).
    pub temperature: f64,
    /// Parallel-state resistance (ohm).
    pub r_on: f64,
    /// Anti-parallel-state resistance (ohm).
    pub r_off: f64,
    /// Effective magnetization (A/m); defaults to Ms.
    pub m_eff: f64,
    /// Optional direct override of theta0 (radians), e.g. from the
    /// temperature table; when unset theta0 follows from h_k and T.
    pub theta0_override: Option<f64>,
}

/// One rectangular update pulse. The voltage sign encodes current direction;
/// only a favorable (positive) direction can switch the device.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Pulse {
    pub voltage: f64,
    pub width: f64,
}

impl Pulse {
    pub fn new(voltage: f64, width: f64) -> Result<Self> {
        if width < 0.0 {
            return Err(Error::Parameter(format!("pulse width {width} must be >= 0")));
        }
        Ok(Pulse { voltage, width })
    }
}

/// H_k calibrated so that theta0(300 K) = 0.345 rad for the Table III
/// device, the anchor value of the paper's accuracy table.
pub const H_K_CALIBRATED: f64 = 44307.420395691435;

impl MtjDeviceParams {
    /// Table III device with the calibrated anisotropy field.
    pub fn table_iii() -> Self {
        let mu0_ms = 0.5;
        MtjDeviceParams {
            alpha: 0.01,
            mu0_ms,
            a_axis: 50e-9,
            b_axis: 20e-9,
            t_f: 2e-9,
            polarization: 0.5,
            gamma: GYROMAGNETIC,
            h_k: H_K_CALIBRATED,
            temperature: 300.0,
            r_on: 1500.0,
            r_off: 2500.0,
            m_eff: mu0_ms / MU0,
            theta0_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.polarization > 0.0 && self.polarization < 1.0) {
            return Err(Error::Parameter(format!(
                "polarization {} must lie in (0, 1)",
                self.polarization
            )));
        }
        if self.r_on <= 0.0 || self.r_off <= self.r_on {
            return Err(Error::Parameter(format!(
                "need r_off > r_on > 0, got r_on = {}, r_off = {}",
                self.r_on, self.r_off
            )));
        }
        if self.volume() <= 0.0 {
            return Err(Error::Parameter("free-layer volume must be positive".into()));
        }
        Ok(())
    }

    /// Free-layer volume of the elliptic cylinder: pi a b t_f / 4.
    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.a_axis * self.b_axis * self.t_f / 4.0
    }

    /// Saturation magnetization Ms (A/m).
    pub fn ms(&self) -> f64 {
        self.mu0_ms / MU0
    }

    /// Std-dev of the thermal initial magnetization angle,
    /// theta0 = sqrt(k_B T / (mu0 H_k Ms V)).
    pub fn theta0(&self) -> f64 {
        if let Some(t0) = self.theta0_override {
            return t0;
        }
        (BOLTZMANN * self.temperature / (self.h_k * self.mu0_ms * self.volume())).sqrt()
    }

    /// Critical switching current of Eq. (9).
    pub fn critical_current(&self, branch: Branch) -> Result<f64> {
        self.validate()?;
        let p = self.polarization;
        let pol = match branch {
            Branch::PToAp => (1.0 + p) / p,
            Branch::ApToP => (1.0 - p) / p,
        };
        Ok((2.0 * ELEMENTARY_CHARGE / HBAR)
            * self.alpha
            * self.volume()
            * pol
            * self.mu0_ms
            * (self.m_eff / 2.0))
    }

    /// Analytic high-current switching time of Eq. (10).
    pub fn switching_time(&self, current: f64, theta: f64) -> Result<f64> {
        let ic0 = self.critical_current(Branch::PToAp)?;
        if current.abs() <= ic0 {
            return Err(Error::Regime(format!(
                "current {current:.3e} A is not above the critical current {ic0:.3e} A"
            )));
        }
        if theta == 0.0 {
            return Err(Error::Regime("switching time diverges at theta = 0".into()));
        }
        let prefactor = 2.0 / (self.alpha * self.gamma * self.mu0_ms);
        Ok(prefactor * ic0 / (current.abs() - ic0)
            * (std::f64::consts::PI / (2.0 * theta.abs())).ln())
    }

    /// Exponent time constant C = 2 I_c0 / (alpha gamma mu0 Ms) of Eq. (11),
    /// in ampere-seconds. Uses the (1+P) branch for both directions so the
    /// state-dependent P_sw ordering (0_s below 0_w) is preserved.
    pub fn c_constant(&self) -> Result<f64> {
        Ok(2.0 * self.critical_current(Branch::PToAp)? / (self.alpha * self.gamma * self.mu0_ms))
    }

    /// Switching probability of Eq. (11) for a pulse applied across the
    /// device in resistance state `r_state`. An unfavorable current
    /// direction (non-positive voltage) cannot switch and returns 0.
    pub fn switching_probability(&self, pulse: Pulse, r_state: f64) -> Result<f64> {
        if pulse.voltage <= 0.0 {
            return Ok(0.0);
        }
        let c = self.c_constant()?;
        let theta0 = self.theta0();
        let x = pulse.width * pulse.voltage / (c * r_state);
        let arg = std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2 * theta0 * x.exp());
        Ok(1.0 - libm::erf(arg))
    }

    /// Draw the thermal initial angle theta ~ N(0, theta0), magnitude
    /// floored at 1e-9 rad to keep Eq. (10) finite.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t0 = self.theta0();
        if t0 == 0.0 {
            return 1e-9;
        }
        let n = Normal::new(0.0, t0).expect("theta0 > 0");
        let theta: f64 = n.sample(rng);
        if theta.abs() < 1e-9 {
            if theta < 0.0 {
                -1e-9
            } else {
                1e-9
            }
        } else {
            theta
        }
    }

    /// Angle-dependent junction resistance
    /// r(theta) = r_on (1+P^2) / (1 + P^2 cos theta).
    pub fn resistance(&self, theta: f64) -> f64 {
        let p2 = self.polarization * self.polarization;
        self.r_on * (1.0 + p2) / (1.0 + p2 * theta.cos())
    }
}

/// Paper temperature table: (T in kelvin, R_off in ohm, theta0 in rad).
pub const TEMPERATURE_TABLE: [(f64, f64, f64); 5] = [
    (260.0, 2750.0, 0.3187),
    (273.0, 2650.0, 0.3266),
    (300.0, 2500.0, 0.345),
    (333.0, 2150.0, 0.3617),
    (373.0, 2000.0, 0.3827),
];

/// Remap (R_off, theta0) for a temperature point. Exact table entries are
/// returned as-is; other temperatures interpolate R_off linearly (clamped to
/// the table range) and scale theta0 by sqrt(T/300) from the 300 K anchor.
pub fn temperature_point(t_kelvin: f64) -> (f64, f64) {
    for &(t, r_off, theta0) in &TEMPERATURE_TABLE {
        if (t - t_kelvin).abs() < 1e-9 {
            return (r_off, theta0);
        }
    }
    let first = TEMPERATURE_TABLE[0];
    let last = TEMPERATURE_TABLE[TEMPERATURE_TABLE.len() - 1];
    let r_off = if t_kelvin <= first.0 {
        first.1
    } else if t_kelvin >= last.0 {
        last.1
    } else {
        let mut r = last.1;
        for w in TEMPERATURE_TABLE.windows(2) {
            let (t0, r0, _) = w[0];
            let (t1, r1, _) = w[1];
            if t_kelvin >= t0 && t_kelvin <= t1 {
                r = r0 + (r1 - r0) * (t_kelvin - t0) / (t1 - t0);
                break;
            }
        }
        r
    };
    (r_off, 0.345 * (t_kelvin / 300.0).sqrt())
}
