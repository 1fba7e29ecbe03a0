//! Device parameter files (TOML). Field names carry explicit SI units;
//! internal representation is SI base units.

use crate::error::{Error, Result};
use crate::mtj::{MtjDeviceParams, GYROMAGNETIC, H_K_CALIBRATED, MU0};
use std::path::Path;

/// On-disk device description with Table III defaults.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceFile {
    pub alpha: f64,
    pub mu0_ms_t: f64,
    pub a_axis_nm: f64,
    pub b_axis_nm: f64,
    pub t_f_nm: f64,
    pub polarization: f64,
    pub gamma_rad_per_s_t: f64,
    /// Anisotropy field; default calibrated so theta0(300 K) = 0.345 rad.
    pub h_k_a_per_m: f64,
    pub temperature_k: f64,
    pub r_on_ohm: f64,
    pub r_off_ohm: f64,
    /// Effective magnetization; 0 means "use Ms".
    pub m_eff_a_per_m: f64,
    /// Direct theta0 override in radians; 0 means "derive from h_k".
    pub theta0_rad: f64,
    pub v_up_v: f64,
    pub v_rd_v: f64,
    pub t_up_ns: f64,
    pub t_rd_ns: f64,
}

impl Default for DeviceFile {
    fn default() -> Self {
        DeviceFile {
            alpha: 0.01,
            mu0_ms_t: 0.5,
            a_axis_nm: 50.0,
            b_axis_nm: 20.0,
            t_f_nm: 2.0,
            polarization: 0.5,
            gamma_rad_per_s_t: GYROMAGNETIC,
            h_k_a_per_m: H_K_CALIBRATED,
            temperature_k: 300.0,
            r_on_ohm: 1500.0,
            r_off_ohm: 2500.0,
            m_eff_a_per_m: 0.0,
            theta0_rad: 0.0,
            v_up_v: 1.0,
            v_rd_v: 0.1,
            t_up_ns: 2.0,
            t_rd_ns: 0.5,
        }
    }
}

impl DeviceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| {
            Error::Config(format!("{}: {e}", path.display()))
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("serializable")
    }

    pub fn params(&self) -> Result<MtjDeviceParams> {
        let p = MtjDeviceParams {
            alpha: self.alpha,
            mu0_ms: self.mu0_ms_t,
            a_axis: self.a_axis_nm * 1e-9,
            b_axis: self.b_axis_nm * 1e-9,
            t_f: self.t_f_nm * 1e-9,
            polarization: self.polarization,
            gamma: self.gamma_rad_per_s_t,
            h_k: self.h_k_a_per_m,
            temperature: self.temperature_k,
            r_on: self.r_on_ohm,
            r_off: self.r_off_ohm,
            m_eff: if self.m_eff_a_per_m > 0.0 {
                self.m_eff_a_per_m
            } else {
                self.mu0_ms_t / MU0
            },
            theta0_override: if self.theta0_rad > 0.0 {
                Some(self.theta0_rad)
            } else {
                None
            },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn t_up(&self) -> f64 {
        self.t_up_ns * 1e-9
    }

    pub fn t_rd(&self) -> f64 {
        self.t_rd_ns * 1e-9
    }
}
