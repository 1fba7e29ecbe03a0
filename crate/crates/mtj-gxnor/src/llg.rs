//! Stochastic macrospin LLG integrator used as an independent oracle for the
//! analytic switching law.
//!
//! Model: effective uniaxial anisotropy field H = (M_eff/2) m_z zhat, Gilbert
//! damping, Slonczewski spin-transfer torque with angular efficiency
//! eta(theta) = P / (1 + P cos theta), and an isotropic Gaussian thermal
//! field with per-component variance 2 alpha k_B T / (gamma mu0^2 Ms V dt).
//! The SDE is integrated with the implicit midpoint scheme (Stratonovich
//! sense) and per-step renormalization of m.

use crate::error::{Error, Result};
use crate::mtj::{MtjDeviceParams, Pulse, BOLTZMANN, MU0};
use crate::rng::SeedTree;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

/// One sample of a simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlgSample {
    /// Time since pulse start (seconds).
    pub t: f64,
    /// Unit magnetization.
    pub m: [f64; 3],
    /// Junction resistance r(theta) (ohm).
    pub r: f64,
}

/// A full magnetization trajectory over one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct LlgTrace {
    pub samples: Vec<LlgSample>,
    /// Whether m_z crossed zero during the pulse.
    pub switched: bool,
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

struct LlgKernel {
    gamma_mu0: f64,
    alpha: f64,
    h_u: f64,
    /// hbar I / (2 e mu0 Ms V); multiplied by eta(theta) per step.
    aj_pref: f64,
    polarization: f64,
    sigma_h: f64,
    dt: f64,
}

impl LlgKernel {
    fn new(p: &MtjDeviceParams, pulse: Pulse, dt: f64) -> Result<Self> {
        p.validate()?;
        if dt > 1e-12 {
            return Err(Error::Regime(format!("LLG step dt = {dt:.2e} s exceeds the 1 ps stability cap")));
        }
        // Drive current is fixed at V / r_on; the P -> AP transition starts
        // near theta = 0 where r = r_on.
        let current = pulse.voltage / p.r_on;
        let ms = p.ms();
        let vol = p.volume();
        let aj_pref = crate::mtj::HBAR * current / (2.0 * crate::mtj::ELEMENTARY_CHARGE * p.mu0_ms * vol);
        let sigma_h = if p.temperature > 0.0 {
            (2.0 * p.alpha * BOLTZMANN * p.temperature / (p.gamma * MU0 * MU0 * ms * vol * dt)).sqrt()
        } else {
            0.0
        };
        Ok(LlgKernel {
            gamma_mu0: p.gamma * MU0,
            alpha: p.alpha,
            h_u: p.m_eff / 2.0,
            aj_pref,
            polarization: p.polarization,
            sigma_h,
            dt,
        })
    }

    /// One implicit-midpoint step (3 fixed-point iterations) from `m` with a
    /// frozen thermal field `h`; returns the renormalized new m.
    #[inline]
    fn step(&self, m: [f64; 3], h: [f64; 3]) -> [f64; 3] {
        let mut mn = m;
        for _ in 0..3 {
            let mid = [
                0.5 * (m[0] + mn[0]),
                0.5 * (m[1] + mn[1]),
                0.5 * (m[2] + mn[2]),
            ];
            let heff = [h[0], h[1], h[2] + self.h_u * mid[2]];
            let eta = self.polarization / (1.0 + self.polarization * mid[2]);
            let aj = self.aj_pref * eta;
            let mxh = cross(mid, heff);
            let mxmxz = cross(mid, cross(mid, [0.0, 0.0, 1.0]));
            let g = [
                -self.gamma_mu0 * mxh[0] + self.gamma_mu0 * aj * mxmxz[0],
                -self.gamma_mu0 * mxh[1] + self.gamma_mu0 * aj * mxmxz[1],
                -self.gamma_mu0 * mxh[2] + self.gamma_mu0 * aj * mxmxz[2],
            ];
            let mxg = cross(mid, g);
            let inv = 1.0 / (1.0 + self.alpha * self.alpha);
            mn = [
                m[0] + self.dt * (g[0] + self.alpha * mxg[0]) * inv,
                m[1] + self.dt * (g[1] + self.alpha * mxg[1]) * inv,
                m[2] + self.dt * (g[2] + self.alpha * mxg[2]) * inv,
            ];
        }
        let n = norm(mn);
        [mn[0] / n, mn[1] / n, mn[2] / n]
    }

    #[inline]
    fn thermal<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        if self.sigma_h == 0.0 {
            return [0.0; 3];
        }
        let n = Normal::new(0.0, self.sigma_h).expect("sigma > 0");
        [n.sample(rng), n.sample(rng), n.sample(rng)]
    }
}

/// Integrate one trajectory from an explicit initial orientation.
pub fn llg_simulate_from<R: Rng + ?Sized>(
    p: &MtjDeviceParams,
    pulse: Pulse,
    dt: f64,
    theta_init: f64,
    phi_init: f64,
    rng: &mut R,
) -> Result<LlgTrace> {
    let kernel = LlgKernel::new(p, pulse, dt)?;
    let nsteps = (pulse.width / dt).round() as usize;
    let mut m = [
        theta_init.sin() * phi_init.cos(),
        theta_init.sin() * phi_init.sin(),
        theta_init.cos(),
    ];
    let mut samples = Vec::with_capacity(nsteps + 1);
    let mut switched = false;
    let push = |samples: &mut Vec<LlgSample>, t: f64, m: [f64; 3], p: &MtjDeviceParams| {
        let theta = m[2].clamp(-1.0, 1.0).acos();
        samples.push(LlgSample {
            t,
            m,
            r: p.resistance(theta),
        });
    };
    push(&mut samples, 0.0, m, p);
    for step in 0..nsteps {
        let h = kernel.thermal(rng);
        m = kernel.step(m, h);
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationFailure { step });
        }
        if m[2] < 0.0 {
            switched = true;
        }
        push(&mut samples, (step + 1) as f64 * dt, m, p);
    }
    Ok(LlgTrace { samples, switched })
}

/// Integrate one trajectory with a thermally sampled initial angle.
pub fn llg_simulate<R: Rng + ?Sized>(
    p: &MtjDeviceParams,
    pulse: Pulse,
    dt: f64,
    rng: &mut R,
) -> Result<LlgTrace> {
    let theta = p.sample_theta(rng);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    llg_simulate_from(p, pulse, dt, theta, phi, rng)
}

/// Allocation-free switch/no-switch trial (absorbing at m_z < 0).
pub fn llg_switch_trial<R: Rng + ?Sized>(
    p: &MtjDeviceParams,
    pulse: Pulse,
    dt: f64,
    rng: &mut R,
) -> Result<bool> {
    let kernel = LlgKernel::new(p, pulse, dt)?;
    let nsteps = (pulse.width / dt).round() as usize;
    let theta = p.sample_theta(rng);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut m = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    for step in 0..nsteps {
        let h = kernel.thermal(rng);
        m = kernel.step(m, h);
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationFailure { step });
        }
        if m[2] < 0.0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Monte-Carlo switch fraction over `trials` independent trajectories.
/// Trials use per-index RNG streams, so the result is identical for any
/// thread count.
pub fn monte_carlo_switch_fraction(
    p: &MtjDeviceParams,
    pulse: Pulse,
    dt: f64,
    trials: usize,
    seeds: &SeedTree,
) -> Result<f64> {
    let switched: Result<usize> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds.stream_idx("llg-trial", i as u64);
            llg_switch_trial(p, pulse, dt, &mut rng).map(usize::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b));
    Ok(switched? as f64 / trials as f64)
}

/// Align switching traces at the first crossing of (r_on + r_off)/2 and
/// average them pointwise; returns (time relative to alignment, mean r).
pub fn mean_switch_trace(traces: &[LlgTrace], r_mid: f64) -> Result<Vec<(f64, f64)>> {
    let crossings: Vec<(usize, &LlgTrace)> = traces
        .iter()
        .filter_map(|tr| {
            tr.samples
                .iter()
                .position(|s| s.r >= r_mid)
                .map(|i| (i, tr))
        })
        .collect();
    if crossings.len() < 2 {
        return Err(Error::Empty(format!(
            "need at least 2 switching traces, found {}",
            crossings.len()
        )));
    }
    let before = crossings.iter().map(|(i, _)| *i).min().unwrap();
    let after = crossings
        .iter()
        .map(|(i, tr)| tr.samples.len() - 1 - i)
        .min()
        .unwrap();
    let dt = crossings[0].1.samples.get(1).map_or(0.0, |s| s.t) - crossings[0].1.samples[0].t;
    let mut out = Vec::with_capacity(before + after + 1);
    for k in 0..=(before + after) {
        let offset = k as isize - before as isize;
        let mean = crossings
            .iter()
            .map(|(i, tr)| tr.samples[(*i as isize + offset) as usize].r)
            .sum::<f64>()
            / crossings.len() as f64;
        out.push((offset as f64 * dt, mean));
    }
    Ok(out)
}

/// Invert Eq. (11) for the pulse width that yields a target probability.
pub fn width_for_probability(
    p: &MtjDeviceParams,
    voltage: f64,
    r_state: f64,
    target: f64,
) -> Result<f64> {
    if !(0.0 < target && target < 1.0) {
        return Err(Error::Parameter(format!("target probability {target} must be in (0, 1)")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1e-9_f64);
    while p.switching_probability(Pulse::new(voltage, hi)?, r_state)? < target {
        hi *= 2.0;
        if hi > 1e-3 {
            return Err(Error::Regime("pulse width search did not bracket the target".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p.switching_probability(Pulse::new(voltage, mid)?, r_state)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
