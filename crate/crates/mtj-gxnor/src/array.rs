//! Behavioral model of the 4T2R ternary and 2T1R binary synapse crossbars:
//! weight encoding, GXNOR/XNOR feedforward, inverse read, pulse-based
//! stochastic updates, and per-device variation injection.

use crate::error::{Error, Result};
use crate::gxnor::{self, QuantSpace};
use crate::mtj::{temperature_point, MtjDeviceParams};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::io::{Read, Write};

/// State of one MTJ: `On` is the low-resistance parallel state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtjState {
    On,
    Off,
}

impl MtjState {
    fn to_byte(self) -> u8 {
        match self {
            MtjState::On => 1,
            MtjState::Off => 0,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            1 => Ok(MtjState::On),
            0 => Ok(MtjState::Off),
            _ => Err(Error::Config(format!("invalid MTJ state byte {b}"))),
        }
    }
}

/// Per-device parameters after variation sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceSample {
    pub r_on: f64,
    pub r_off: f64,
    pub theta0: f64,
}

/// 4T2R ternary synapse: two MTJs R1 and R2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TernarySynapse {
    pub r1: MtjState,
    pub r2: MtjState,
    pub dev1: DeviceSample,
    pub dev2: DeviceSample,
}

/// 2T1R binary synapse: one MTJ against a reference conductance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarySynapse {
    pub r: MtjState,
    pub dev: DeviceSample,
}

impl TernarySynapse {
    /// Logical weight per Table I: (On,Off) -> +1, (Off,On) -> -1, both Off
    /// -> strong zero, both On -> weak zero.
    pub fn weight(&self) -> i8 {
        match (self.r1, self.r2) {
            (MtjState::On, MtjState::Off) => 1,
            (MtjState::Off, MtjState::On) => -1,
            _ => 0,
        }
    }

    /// Whether a zero weight is the strong (both Off) encoding.
    pub fn is_strong_zero(&self) -> bool {
        self.r1 == MtjState::Off && self.r2 == MtjState::Off
    }

    fn conductance_diff(&self) -> f64 {
        let g1 = match self.r1 {
            MtjState::On => 1.0 / self.dev1.r_on,
            MtjState::Off => 1.0 / self.dev1.r_off,
        };
        let g2 = match self.r2 {
            MtjState::On => 1.0 / self.dev2.r_on,
            MtjState::Off => 1.0 / self.dev2.r_off,
        };
        g1 - g2
    }
}

impl BinarySynapse {
    pub fn weight(&self) -> i8 {
        match self.r {
            MtjState::On => 1,
            MtjState::Off => -1,
        }
    }

    fn conductance_diff(&self, g_ref: f64) -> f64 {
        let g = match self.r {
            MtjState::On => 1.0 / self.dev.r_on,
            MtjState::Off => 1.0 / self.dev.r_off,
        };
        g - g_ref
    }
}

/// Crossbar mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Ternary,
    Binary,
}

/// Update scheme: column-serial general optimizer or whole-array SGD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateScheme {
    General,
    Sgd,
}

/// Bernoulli law used for the remainder pulse: the hardware switching curve
/// P_sw(nu T_up) or the software projection tau(nu) (ideal instantaneous
/// devices, used for oracle-equivalence runs).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum UpdateRule {
    Hardware,
    SoftwareProjection { m: f64 },
}

/// Per-update control decomposition of one synapse's update value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    /// +1, -1 or 0 (no update).
    pub direction: i8,
    /// Width of the quotient pulse, capped at T_up.
    pub kappa_width: f64,
    /// Width of the remainder pulse, |nu| T_up.
    pub nu_width: f64,
}

/// Gaussian per-device perturbation plus a temperature point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VariationSpec {
    /// Relative std-dev of device resistances (fraction).
    pub resistance_rsd: f64,
    /// Relative std-dev of device theta0 (fraction).
    pub theta0_rsd: f64,
    /// Operating temperature (kelvin); remaps (R_off, theta0).
    pub temperature: f64,
    /// When set, the sampled device spread perturbs only the switching
    /// probabilities of the update path; feedforward decode keeps nominal
    /// conductances (the integer ADC view used by the reference training
    /// simulations).
    #[serde(default)]
    pub decode_ideal: bool,
}

impl Default for VariationSpec {
    fn default() -> Self {
        VariationSpec {
            resistance_rsd: 0.0,
            theta0_rsd: 0.0,
            temperature: 300.0,
            decode_ideal: false,
        }
    }
}

/// Switch-count statistics of one update pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct UpdateStats {
    /// MTJ pulse attempts (feasible direction, nonzero width).
    pub attempted: u64,
    /// Realized switches.
    pub realized: u64,
}

impl UpdateStats {
    pub fn merge(&mut self, other: UpdateStats) {
        self.attempted += other.attempted;
        self.realized += other.realized;
    }
}

/// One logged state transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub row: usize,
    pub col: usize,
    pub from: i8,
    pub to: i8,
}

enum Cells {
    Ternary(Vec<TernarySynapse>),
    Binary(Vec<BinarySynapse>),
}

/// M x N crossbar of hardware synapses (row-major storage).
pub struct SynapseArray {
    mode: Mode,
    m: usize,
    n: usize,
    cells: Cells,
    device: MtjDeviceParams,
    pub v_rd: f64,
    pub v_up: f64,
    pub t_up: f64,
    /// Probability of a spurious half-select switch (worked example 2).
    pub leakage: f64,
    pub update_rule: UpdateRule,
    /// Cached per-cell signed conductance difference (siemens), row-major.
    g_diff: Vec<f64>,
    varied: bool,
    decode_ideal: bool,
}

impl SynapseArray {
    pub fn new(mode: Mode, m: usize, n: usize, device: MtjDeviceParams) -> Result<Self> {
        device.validate()?;
        let nominal = DeviceSample {
            r_on: device.r_on,
            r_off: device.r_off,
            theta0: device.theta0(),
        };
        let cells = match mode {
            Mode::Ternary => Cells::Ternary(vec![
                TernarySynapse {
                    r1: MtjState::On,
                    r2: MtjState::On,
                    dev1: nominal,
                    dev2: nominal,
                };
                m * n
            ]),
            Mode::Binary => Cells::Binary(vec![
                BinarySynapse {
                    r: MtjState::On,
                    dev: nominal,
                };
                m * n
            ]),
        };
        let mut arr = SynapseArray {
            mode,
            m,
            n,
            cells,
            v_rd: 0.1,
            v_up: 1.0,
            t_up: 2e-9,
            leakage: 0.0,
            update_rule: UpdateRule::Hardware,
            g_diff: vec![0.0; m * n],
            device,
            varied: false,
            decode_ideal: false,
        };
        arr.refresh_cache();
        Ok(arr)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn device(&self) -> &MtjDeviceParams {
        &self.device
    }

    pub fn space(&self) -> QuantSpace {
        match self.mode {
            Mode::Ternary => QuantSpace::ternary(),
            Mode::Binary => QuantSpace::binary(),
        }
    }

    /// Unit conductance difference (R_off - R_on)/(R_on R_off) of the
    /// nominal device.
    pub fn unit_conductance(&self) -> f64 {
        (self.device.r_off - self.device.r_on) / (self.device.r_on * self.device.r_off)
    }

    /// Row current contributed by one positive product: ternary dG V_rd,
    /// binary half that (reference-subtraction form).
    pub fn unit_current(&self) -> f64 {
        match self.mode {
            Mode::Ternary => self.unit_conductance() * self.v_rd,
            Mode::Binary => 0.5 * self.unit_conductance() * self.v_rd,
        }
    }

    fn g_ref(&self) -> f64 {
        0.5 * (1.0 / self.device.r_on + 1.0 / self.device.r_off)
    }

    fn cell_g_diff(&self, idx: usize) -> f64 {
        let g_of = |s: MtjState| match s {
            MtjState::On => 1.0 / self.device.r_on,
            MtjState::Off => 1.0 / self.device.r_off,
        };
        match &self.cells {
            Cells::Ternary(cells) => {
                let c = &cells[idx];
                if self.decode_ideal {
                    g_of(c.r1) - g_of(c.r2)
                } else {
                    c.conductance_diff()
                }
            }
            Cells::Binary(cells) => {
                let c = &cells[idx];
                if self.decode_ideal {
                    g_of(c.r) - self.g_ref()
                } else {
                    c.conductance_diff(self.g_ref())
                }
            }
        }
    }

    fn refresh_cache(&mut self) {
        for idx in 0..self.m * self.n {
            self.g_diff[idx] = self.cell_g_diff(idx);
        }
    }

    fn refresh_column(&mut self, col: usize) {
        for row in 0..self.m {
            let idx = row * self.n + col;
            self.g_diff[idx] = self.cell_g_diff(idx);
        }
    }

    /// Initialize all weights uniformly at random over the space's states
    /// (zeros use the weak encoding).
    pub fn init_random<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        match &mut self.cells {
            Cells::Ternary(cells) => {
                for c in cells.iter_mut() {
                    let w: i8 = [-1, 0, 1][rng.gen_range(0..3usize)];
                    let (r1, r2) = encode_ternary(w);
                    c.r1 = r1;
                    c.r2 = r2;
                }
            }
            Cells::Binary(cells) => {
                for c in cells.iter_mut() {
                    c.r = if rng.gen_bool(0.5) {
                        MtjState::On
                    } else {
                        MtjState::Off
                    };
                }
            }
        }
        self.refresh_cache();
    }

    /// Set one logical weight (canonical encoding; zero = weak).
    pub fn set_weight(&mut self, row: usize, col: usize, w: i8) {
        let idx = row * self.n + col;
        match &mut self.cells {
            Cells::Ternary(cells) => {
                let (r1, r2) = encode_ternary(w);
                cells[idx].r1 = r1;
                cells[idx].r2 = r2;
            }
            Cells::Binary(cells) => {
                cells[idx].r = if w >= 0 { MtjState::On } else { MtjState::Off };
            }
        }
        self.refresh_cache();
    }

    /// Logical weights, row-major.
    pub fn logical_weights(&self) -> Vec<i8> {
        match &self.cells {
            Cells::Ternary(cells) => cells.iter().map(|c| c.weight()).collect(),
            Cells::Binary(cells) => cells.iter().map(|c| c.weight()).collect(),
        }
    }

    /// Effective analog weights g_diff / (unit conductance per weight step);
    /// equals the logical weights exactly in ideal mode.
    pub fn effective_weights(&self) -> Vec<f64> {
        let unit = match self.mode {
            Mode::Ternary => self.unit_conductance(),
            Mode::Binary => 0.5 * self.unit_conductance(),
        };
        self.g_diff.iter().map(|g| g / unit).collect()
    }

    pub fn is_ideal(&self) -> bool {
        !self.varied
    }

    /// Output current of a single cell for activation u (Eq. 12).
    pub fn gxnor_cell(&self, row: usize, col: usize, u: f64) -> f64 {
        self.g_diff[row * self.n + col] * u * self.v_rd
    }

    /// Row currents for one activation vector (Eqs. 13-14).
    pub fn feedforward(&self, activations: &[f64]) -> Result<Vec<f64>> {
        if activations.len() != self.n {
            return Err(Error::Shape {
                expected: format!("{} activations", self.n),
                got: format!("{}", activations.len()),
            });
        }
        let mut out = vec![0.0; self.m];
        for i in 0..self.m {
            let row = &self.g_diff[i * self.n..(i + 1) * self.n];
            out[i] = row
                .iter()
                .zip(activations)
                .map(|(g, u)| g * u)
                .sum::<f64>()
                * self.v_rd;
        }
        Ok(out)
    }

    /// Comparator/ADC model: quantize a row current to the integer GXNOR
    /// sum, saturating at +-N.
    pub fn decode_row(&self, current: f64) -> i32 {
        let k = (current / self.unit_current()).round() as i64;
        k.clamp(-(self.n as i64), self.n as i64) as i32
    }

    /// Inverse read: W^T y as column currents, with y applied as voltages
    /// y_i V_rd on the row interface.
    pub fn inverse_read(&self, errors_y: &[f64]) -> Result<Vec<f64>> {
        if errors_y.len() != self.m {
            return Err(Error::Shape {
                expected: format!("{} row errors", self.m),
                got: format!("{}", errors_y.len()),
            });
        }
        let mut out = vec![0.0; self.n];
        for i in 0..self.m {
            let y = errors_y[i];
            if y == 0.0 {
                continue;
            }
            let row = &self.g_diff[i * self.n..(i + 1) * self.n];
            for (o, g) in out.iter_mut().zip(row) {
                *o += g * y;
            }
        }
        for o in out.iter_mut() {
            *o *= self.v_rd;
        }
        Ok(out)
    }

    /// Decompose one synapse's update value into a pulse schedule
    /// (Eqs. 16-21). `scheme` is recorded for the caller; the width algebra
    /// is shared.
    pub fn make_schedule(&self, delta_w: f64, _scheme: UpdateScheme) -> PulseSchedule {
        let (kappa, nu) = gxnor::decompose(self.space(), delta_w);
        let dz = self.space().resolution();
        let direction = if delta_w > 0.0 {
            1
        } else if delta_w < 0.0 {
            -1
        } else {
            0
        };
        PulseSchedule {
            direction,
            kappa_width: if kappa != 0 { self.t_up } else { 0.0 },
            nu_width: (nu.abs() / dz) * self.t_up,
        }
    }

    fn weight_at(&self, idx: usize) -> i8 {
        match &self.cells {
            Cells::Ternary(c) => c[idx].weight(),
            Cells::Binary(c) => c[idx].weight(),
        }
    }

    /// Software-projection update of one cell (ideal instantaneous device):
    /// exactly the gxnor-core probabilistic projection with the hardware
    /// boundary. Always consumes exactly one Bernoulli draw, so a pure
    /// software trainer on the same stream stays in lockstep.
    fn update_software_cell<R: Rng + ?Sized>(
        &self,
        idx: usize,
        delta_w: f64,
        m_adj: f64,
        rng: &mut R,
    ) -> (i8, u64, u64) {
        let w = match &self.cells {
            Cells::Ternary(c) => c[idx].weight(),
            Cells::Binary(c) => c[idx].weight(),
        } as f64;
        let space = self.space();
        let bounded = gxnor::bound_update(w, delta_w);
        let (kappa, nu) = gxnor::decompose(space, bounded);
        let p = gxnor::tau(space, nu, m_adj);
        let extra = if rng.gen_bool(p) {
            nu.signum() * space.resolution()
        } else {
            0.0
        };
        let new_w = w + kappa as f64 * space.resolution() + extra;
        let attempted = u64::from(kappa != 0 || nu != 0.0);
        let realized = u64::from(new_w != w);
        (new_w.round() as i8, attempted, realized)
    }

    /// Update one column with per-row update values. Returns statistics and
    /// the transition log.
    pub fn apply_update_column<R: Rng + ?Sized>(
        &mut self,
        col: usize,
        deltas: &[f64],
        scheme: UpdateScheme,
        rng: &mut R,
    ) -> Result<(UpdateStats, Vec<Transition>)> {
        if deltas.len() != self.m {
            return Err(Error::Shape {
                expected: format!("{} row deltas", self.m),
                got: format!("{}", deltas.len()),
            });
        }
        let c = self.device.c_constant()?;
        let mut stats = UpdateStats::default();
        let mut log = Vec::new();
        for row in 0..self.m {
            let idx = row * self.n + col;
            let before = self.weight_at(idx);
            match self.update_rule {
                UpdateRule::Hardware => {
                    let sched = self.make_schedule(deltas[row], scheme);
                    let (v_up, leakage) = (self.v_up, self.leakage);
                    let (a, r) = match &mut self.cells {
                        Cells::Ternary(cells) => {
                            hw_update_ternary(c, v_up, leakage, &mut cells[idx], sched, rng)
                        }
                        Cells::Binary(cells) => {
                            hw_update_binary(c, v_up, &mut cells[idx], sched, rng)
                        }
                    };
                    stats.attempted += a;
                    stats.realized += r;
                }
                UpdateRule::SoftwareProjection { m } => {
                    let (new_w, a, r) = self.update_software_cell(idx, deltas[row], m, rng);
                    stats.attempted += a;
                    stats.realized += r;
                    match &mut self.cells {
                        Cells::Ternary(cells) => {
                            let (r1, r2) = encode_ternary(new_w);
                            cells[idx].r1 = r1;
                            cells[idx].r2 = r2;
                        }
                        Cells::Binary(cells) => {
                            cells[idx].r = if new_w >= 0 { MtjState::On } else { MtjState::Off };
                        }
                    }
                }
            }
            let after = self.weight_at(idx);
            if after != before {
                log.push(Transition {
                    row,
                    col,
                    from: before,
                    to: after,
                });
            }
        }
        self.refresh_column(col);
        Ok((stats, log))
    }

    /// Apply a full M x N update matrix. The general scheme walks columns
    /// left to right (one T_up window each); the SGD scheme is a single
    /// parallel window, which for the final state is the same per-cell law.
    pub fn apply_update<R: Rng + ?Sized>(
        &mut self,
        deltas: &[f64],
        scheme: UpdateScheme,
        rng: &mut R,
    ) -> Result<UpdateStats> {
        if deltas.len() != self.m * self.n {
            return Err(Error::Shape {
                expected: format!("{}x{} deltas", self.m, self.n),
                got: format!("{}", deltas.len()),
            });
        }
        let mut stats = UpdateStats::default();
        let mut column = vec![0.0; self.m];
        for col in 0..self.n {
            for row in 0..self.m {
                column[row] = deltas[row * self.n + col];
            }
            let (s, _) = self.apply_update_column(col, &column, scheme, rng)?;
            stats.merge(s);
        }
        Ok(stats)
    }

    /// Inject per-device Gaussian variation and remap the temperature point.
    pub fn apply_variation<R: Rng + ?Sized>(
        &mut self,
        spec: &VariationSpec,
        rng: &mut R,
    ) -> Result<()> {
        if spec.resistance_rsd < 0.0 || spec.theta0_rsd < 0.0 {
            return Err(Error::Parameter("variation RSDs must be >= 0".into()));
        }
        let (r_off, theta0) = temperature_point(spec.temperature);
        self.device.temperature = spec.temperature;
        self.device.r_off = r_off;
        self.device.theta0_override = Some(theta0);
        let nominal = DeviceSample {
            r_on: self.device.r_on,
            r_off: self.device.r_off,
            theta0,
        };
        let sample_factor = |rsd: f64, rng: &mut R| -> f64 {
            if rsd == 0.0 {
                return 1.0;
            }
            let n = Normal::new(1.0, rsd).expect("rsd > 0");
            loop {
                let f: f64 = n.sample(rng);
                if f > 0.0 {
                    return f;
                }
            }
        };
        let draw = |rng: &mut R| -> DeviceSample {
            let fr = sample_factor(spec.resistance_rsd, rng);
            let ft = sample_factor(spec.theta0_rsd, rng);
            DeviceSample {
                r_on: nominal.r_on * fr,
                r_off: nominal.r_off * fr,
                theta0: nominal.theta0 * ft,
            }
        };
        match &mut self.cells {
            Cells::Ternary(cells) => {
                for c in cells.iter_mut() {
                    c.dev1 = draw(rng);
                    c.dev2 = draw(rng);
                }
            }
            Cells::Binary(cells) => {
                for c in cells.iter_mut() {
                    c.dev = draw(rng);
                }
            }
        }
        self.varied = spec.resistance_rsd > 0.0
            || spec.theta0_rsd > 0.0
            || (spec.temperature - 300.0).abs() > 1e-9;
        self.decode_ideal = spec.decode_ideal;
        self.refresh_cache();
        Ok(())
    }

    /// Serialize the array to a documented little-endian binary snapshot.
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"MTJSNAP1")?;
        w.write_all(&[match self.mode {
            Mode::Ternary => 0u8,
            Mode::Binary => 1u8,
        }])?;
        w.write_all(&(self.m as u32).to_le_bytes())?;
        w.write_all(&(self.n as u32).to_le_bytes())?;
        let meta = serde_json::json!({
            "device": self.device,
            "v_rd": self.v_rd,
            "v_up": self.v_up,
            "t_up": self.t_up,
            "leakage": self.leakage,
            "decode_ideal": self.decode_ideal,
        });
        let meta = serde_json::to_vec(&meta).expect("serializable");
        w.write_all(&(meta.len() as u32).to_le_bytes())?;
        w.write_all(&meta)?;
        let write_dev = |w: &mut W, d: &DeviceSample| -> Result<()> {
            w.write_all(&d.r_on.to_le_bytes())?;
            w.write_all(&d.r_off.to_le_bytes())?;
            w.write_all(&d.theta0.to_le_bytes())?;
            Ok(())
        };
        match &self.cells {
            Cells::Ternary(cells) => {
                for c in cells {
                    w.write_all(&[c.r1.to_byte(), c.r2.to_byte()])?;
                    write_dev(w, &c.dev1)?;
                    write_dev(w, &c.dev2)?;
                }
            }
            Cells::Binary(cells) => {
                for c in cells {
                    w.write_all(&[c.r.to_byte()])?;
                    write_dev(w, &c.dev)?;
                }
            }
        }
        Ok(())
    }

    /// Restore an array from a snapshot produced by `write_snapshot`.
    pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != b"MTJSNAP1" {
            return Err(Error::Config("bad snapshot magic".into()));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1)?;
        let mode = match b1[0] {
            0 => Mode::Ternary,
            1 => Mode::Binary,
            x => return Err(Error::Config(format!("bad snapshot mode byte {x}"))),
        };
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let meta_len = u32::from_le_bytes(b4) as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let meta: serde_json::Value = serde_json::from_slice(&meta)
            .map_err(|e| Error::Config(format!("bad snapshot metadata: {e}")))?;
        let device: MtjDeviceParams = serde_json::from_value(meta["device"].clone())
            .map_err(|e| Error::Config(format!("bad snapshot device: {e}")))?;
        let mut arr = SynapseArray::new(mode, m, n, device)?;
        arr.v_rd = meta["v_rd"].as_f64().unwrap_or(0.1);
        arr.v_up = meta["v_up"].as_f64().unwrap_or(1.0);
        arr.t_up = meta["t_up"].as_f64().unwrap_or(2e-9);
        arr.leakage = meta["leakage"].as_f64().unwrap_or(0.0);
        arr.decode_ideal = meta["decode_ideal"].as_bool().unwrap_or(false);
        let read_dev = |r: &mut R| -> Result<DeviceSample> {
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8)?;
            let r_on = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let r_off = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let theta0 = f64::from_le_bytes(b8);
            Ok(DeviceSample { r_on, r_off, theta0 })
        };
        match &mut arr.cells {
            Cells::Ternary(cells) => {
                for c in cells.iter_mut() {
                    let mut b2 = [0u8; 2];
                    r.read_exact(&mut b2)?;
                    c.r1 = MtjState::from_byte(b2[0])?;
                    c.r2 = MtjState::from_byte(b2[1])?;
                    c.dev1 = read_dev(r)?;
                    c.dev2 = read_dev(r)?;
                }
            }
            Cells::Binary(cells) => {
                for c in cells.iter_mut() {
                    let mut b = [0u8; 1];
                    r.read_exact(&mut b)?;
                    c.r = MtjState::from_byte(b[0])?;
                    c.dev = read_dev(r)?;
                }
            }
        }
        arr.varied = true; // conservative: caches rebuilt from stored samples
        arr.refresh_cache();
        Ok(arr)
    }

    /// Direct cell access for tests and physics studies.
    pub fn ternary_cell(&self, row: usize, col: usize) -> Option<&TernarySynapse> {
        match &self.cells {
            Cells::Ternary(c) => Some(&c[row * self.n + col]),
            Cells::Binary(_) => None,
        }
    }

    pub fn set_ternary_states(&mut self, row: usize, col: usize, r1: MtjState, r2: MtjState) {
        if let Cells::Ternary(c) = &mut self.cells {
            let idx = row * self.n + col;
            c[idx].r1 = r1;
            c[idx].r2 = r2;
        }
        self.refresh_cache();
    }
}

fn encode_ternary(w: i8) -> (MtjState, MtjState) {
    match w {
        1 => (MtjState::On, MtjState::Off),
        -1 => (MtjState::Off, MtjState::On),
        _ => (MtjState::On, MtjState::On),
    }
}

/// Switching probability for one pulse on one MTJ with per-device theta0
/// and resistance state. `c` is the device's precomputed Eq. (11) constant.
fn psw_of(c: f64, v_up: f64, width: f64, r_state: f64, theta0: f64) -> f64 {
    if width <= 0.0 || v_up <= 0.0 {
        return 0.0;
    }
    let x = width * v_up / (c * r_state);
    let arg = std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2 * theta0 * x.exp());
    1.0 - libm::erf(arg)
}

fn pulse_one_mtj<R: Rng + ?Sized>(
    c: f64,
    v_up: f64,
    state: &mut MtjState,
    dev: DeviceSample,
    target: MtjState,
    width: f64,
    rng: &mut R,
) -> (u64, u64) {
    // an MTJ already in the pulse's target state cannot switch: direction
    // infeasibility doubles as the hardware weight boundary
    if width <= 0.0 || *state == target {
        return (0, 0);
    }
    let r_state = match *state {
        MtjState::On => dev.r_on,
        MtjState::Off => dev.r_off,
    };
    let p = psw_of(c, v_up, width, r_state, dev.theta0);
    if rng.gen_bool(p) {
        *state = target;
        (1, 1)
    } else {
        (1, 0)
    }
}

/// One pulse-granularity update of a 4T2R synapse. Positive direction:
/// kappa pulse drives R1 toward On, nu pulse drives R2 toward Off; negative
/// updates mirror the roles.
fn hw_update_ternary<R: Rng + ?Sized>(
    c: f64,
    v_up: f64,
    leakage: f64,
    cell: &mut TernarySynapse,
    sched: PulseSchedule,
    rng: &mut R,
) -> (u64, u64) {
    if sched.direction == 0 {
        return (0, 0);
    }
    let kappa_is_r1 = sched.direction > 0;
    let mut attempted = 0;
    let mut realized = 0;
    let (kappa_target, nu_target) = (MtjState::On, MtjState::Off);
    if kappa_is_r1 {
        let (a, r) = pulse_one_mtj(c, v_up, &mut cell.r1, cell.dev1, kappa_target, sched.kappa_width, rng);
        attempted += a;
        realized += r;
        let (a, r) = pulse_one_mtj(c, v_up, &mut cell.r2, cell.dev2, nu_target, sched.nu_width, rng);
        attempted += a;
        realized += r;
    } else {
        let (a, r) = pulse_one_mtj(c, v_up, &mut cell.r2, cell.dev2, kappa_target, sched.kappa_width, rng);
        attempted += a;
        realized += r;
        let (a, r) = pulse_one_mtj(c, v_up, &mut cell.r1, cell.dev1, nu_target, sched.nu_width, rng);
        attempted += a;
        realized += r;
    }
    // half-select leakage: with the kappa branch idle, its MTJ may
    // spuriously switch toward On (worked example 2)
    if leakage > 0.0 && sched.kappa_width <= 0.0 && sched.nu_width > 0.0 {
        let state = if kappa_is_r1 { &mut cell.r1 } else { &mut cell.r2 };
        if *state == MtjState::Off && rng.gen_bool(leakage) {
            *state = MtjState::On;
            realized += 1;
        }
    }
    (attempted, realized)
}

/// One pulse-granularity update of a 2T1R synapse: a single MTJ driven
/// toward On (positive) or Off (negative) for the longer of the two widths.
fn hw_update_binary<R: Rng + ?Sized>(
    c: f64,
    v_up: f64,
    cell: &mut BinarySynapse,
    sched: PulseSchedule,
    rng: &mut R,
) -> (u64, u64) {
    if sched.direction == 0 {
        return (0, 0);
    }
    let target = if sched.direction > 0 {
        MtjState::On
    } else {
        MtjState::Off
    };
    let width = sched.kappa_width.max(sched.nu_width);
    pulse_one_mtj(c, v_up, &mut cell.r, cell.dev, target, width, rng)
}
