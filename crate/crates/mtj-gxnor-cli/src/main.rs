//! Experiment runner for the MTJ-GXNOR simulator: device sweeps, LLG
//! Monte-Carlo validation, training runs, variation/temperature sweeps, and
//! efficiency reports. All outputs are reproducible byte-for-byte from
//! (config, seed, dataset files).

use clap::{Parser, Subcommand};
use mtj_gxnor::array::{UpdateRule, VariationSpec};
use mtj_gxnor::config::DeviceFile;
use mtj_gxnor::error::Error;
use mtj_gxnor::llg::{monte_carlo_switch_fraction, width_for_probability};
use mtj_gxnor::mnist::load_mnist;
use mtj_gxnor::mtj::Pulse;
use mtj_gxnor::perf::{
    feedforward_efficiency, system_efficiency, update_efficiency, PowerProfile,
    UpdateOpsConvention,
};
use mtj_gxnor::rng::SeedTree;
use mtj_gxnor::train::{
    prepare_data, train, HardwareBackend, NetMode, Optimizer, TrainConfig, TrainReport,
};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "mtj-gxnor", version, about = "MTJ-GXNOR crossbar simulator")]
struct Cli {
    /// Experiment config file (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic switching-probability table over (width, voltage, R-state).
    DeviceSweep,
    /// Monte-Carlo LLG switch fractions vs the analytic switching law.
    LlgValidate,
    /// One training run with per-epoch metrics.
    Train,
    /// Variation / theta0 / temperature grids of training runs.
    Sweep,
    /// Energy-efficiency report from a power profile.
    Perf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::DeviceSweep => cmd_device_sweep(cli),
        Command::LlgValidate => cmd_llg_validate(cli),
        Command::Train => cmd_train(cli),
        Command::Sweep => cmd_sweep(cli),
        Command::Perf => cmd_perf(cli),
    }
}


fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv error: {other:?}")),
    }
}

/// Thin RFC-4180 CSV writer adapting csv errors to the crate error type.
struct Csv(csv::Writer<std::fs::File>);

impl Csv {
    fn create(path: &Path) -> Result<Csv, Error> {
        Ok(Csv(csv::Writer::from_path(path).map_err(csv_err)?))
    }

    fn row<I, S>(&mut self, rec: I) -> Result<(), Error>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.0.write_record(rec).map_err(csv_err)
    }

    fn done(mut self) -> Result<(), Error> {
        self.0.flush().map_err(Error::Io)
    }
}

fn load_config<T: Default + for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> Result<T, Error> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Record the fully resolved config next to the outputs (reproducibility
/// contract: re-running the recorded config yields identical artifacts).
fn record_config<T: Serialize>(out: &Path, cfg: &T) -> Result<(), Error> {
    let text = toml::to_string_pretty(cfg)
        .map_err(|e| Error::Config(format!("cannot serialize resolved config: {e}")))?;
    std::fs::write(out.join("resolved_config.toml"), text)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn device_params(file: &Option<PathBuf>) -> Result<(DeviceFile, mtj_gxnor::mtj::MtjDeviceParams), Error> {
    let df = match file {
        Some(p) => DeviceFile::load(p)?,
        None => DeviceFile::default(),
    };
    let params = df.params()?;
    Ok((df, params))
}

// --- device-sweep ---

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DeviceSweepConfig {
    device_file: Option<PathBuf>,
    widths_ns: Vec<f64>,
    voltages_v: Vec<f64>,
    /// Resistance states to evaluate: "on", "off".
    r_states: Vec<String>,
    seed: u64,
}

impl Default for DeviceSweepConfig {
    fn default() -> Self {
        DeviceSweepConfig {
            device_file: None,
            widths_ns: (1..=40).map(|k| 0.05 * k as f64).collect(),
            voltages_v: vec![1.0],
            r_states: vec!["on".into(), "off".into()],
            seed: 42,
        }
    }
}

fn cmd_device_sweep(cli: &Cli) -> Result<(), Error> {
    let mut cfg: DeviceSweepConfig = load_config(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let (_, params) = device_params(&cfg.device_file)?;
    let mut w = Csv::create(&cli.out.join("device_sweep.csv"))?;
    w.row(["dt_ns", "v_v", "r_state_ohm", "p_sw"])?;
    for &width_ns in &cfg.widths_ns {
        for &v in &cfg.voltages_v {
            for state in &cfg.r_states {
                let r = match state.as_str() {
                    "on" => params.r_on,
                    "off" => params.r_off,
                    other => {
                        return Err(Error::Config(format!(
                            "r_states entries must be \"on\" or \"off\", got {other:?}"
                        )))
                    }
                };
                let p = params.switching_probability(Pulse::new(v, width_ns * 1e-9)?, r)?;
                w.row([
                    format!("{width_ns}"),
                    format!("{v}"),
                    format!("{r}"),
                    format!("{p:.12e}"),
                ])?;
            }
        }
    }
    w.done()?;
    record_config(&cli.out, &cfg)?;
    println!(
        "device sweep: {} rows -> {}",
        cfg.widths_ns.len() * cfg.voltages_v.len() * cfg.r_states.len(),
        cli.out.join("device_sweep.csv").display()
    );
    Ok(())
}

// --- llg-validate ---

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct LlgValidateConfig {
    device_file: Option<PathBuf>,
    /// Validation drive voltage. The analytic law approximates the
    /// switching rate as proportional to I rather than I - I_c0, so at the
    /// 1 V operating point it runs ~2% fast against the LLG dynamics; at
    /// high drive (default 4 V) the deficit is within Monte-Carlo noise.
    voltage_v: f64,
    /// Probability grid; pulse widths are derived by inverting the law.
    probabilities: Vec<f64>,
    /// Explicit pulse widths; when nonempty this grid replaces the
    /// probability grid (useful where the analytic law degenerates, e.g.
    /// 0 K).
    widths_ns: Vec<f64>,
    trials: usize,
    dt_ps: f64,
    r_state: String,
    seed: u64,
}

impl Default for LlgValidateConfig {
    fn default() -> Self {
        LlgValidateConfig {
            device_file: None,
            voltage_v: 4.0,
            probabilities: (1..=10).map(|k| 0.05 + 0.1 * (k - 1) as f64).collect(),
            widths_ns: vec![],
            trials: 10_000,
            dt_ps: 0.1,
            r_state: "on".into(),
            seed: 42,
        }
    }
}

#[derive(Debug, Serialize)]
struct LlgValidateSummary {
    voltage_v: f64,
    trials: usize,
    points: usize,
    points_in_ci: usize,
}

fn cmd_llg_validate(cli: &Cli) -> Result<(), Error> {
    let mut cfg: LlgValidateConfig = load_config(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cfg.trials < 100 {
        return Err(Error::Parameter(format!(
            "llg-validate needs trials >= 100, got {}",
            cfg.trials
        )));
    }
    let (_, params) = device_params(&cfg.device_file)?;
    let r_state = match cfg.r_state.as_str() {
        "on" => params.r_on,
        "off" => params.r_off,
        other => {
            return Err(Error::Config(format!(
                "r_state must be \"on\" or \"off\", got {other:?}"
            )))
        }
    };
    let seeds = SeedTree::new(cfg.seed);
    let dt = cfg.dt_ps * 1e-12;
    let mut w = Csv::create(&cli.out.join("llg_validate.csv"))?;
    w.row([
        "target_p", "width_ns", "analytic", "empirical", "ci3", "pass",
    ])?;
    let mut in_ci = 0usize;
    let points: Vec<(f64, f64)> = if cfg.widths_ns.is_empty() {
        cfg.probabilities
            .iter()
            .map(|&target| {
                width_for_probability(&params, cfg.voltage_v, r_state, target)
                    .map(|w| (target, w))
            })
            .collect::<Result<_, _>>()?
    } else {
        cfg.widths_ns.iter().map(|&w| (f64::NAN, w * 1e-9)).collect()
    };
    for (i, &(target, width)) in points.iter().enumerate() {
        let pulse = Pulse::new(cfg.voltage_v, width)?;
        let analytic = params.switching_probability(pulse, r_state)?;
        let empirical =
            monte_carlo_switch_fraction(&params, pulse, dt, cfg.trials, &seeds.child_idx("point", i as u64))?;
        let ci3 = 3.0 * (analytic * (1.0 - analytic) / cfg.trials as f64).sqrt();
        let pass = (empirical - analytic).abs() <= ci3;
        in_ci += usize::from(pass);
        w.row([
            if target.is_nan() { String::new() } else { format!("{target}") },
            format!("{:.6}", width * 1e9),
            format!("{analytic:.6}"),
            format!("{empirical:.6}"),
            format!("{ci3:.6}"),
            format!("{pass}"),
        ])?;
        println!(
            "width {:.2} ps: analytic {analytic:.4}, llg {empirical:.4} (3-sigma {ci3:.4}) {}",
            width * 1e12,
            if pass { "ok" } else { "MISS" }
        );
    }
    w.done()?;
    let summary = LlgValidateSummary {
        voltage_v: cfg.voltage_v,
        trials: cfg.trials,
        points: points.len(),
        points_in_ci: in_ci,
    };
    write_json(&cli.out.join("llg_validate.json"), &summary)?;
    record_config(&cli.out, &cfg)?;
    Ok(())
}

// --- train ---

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TrainFileConfig {
    dataset_dir: PathBuf,
    device_file: Option<PathBuf>,
    mode: String,
    hidden: Vec<usize>,
    epochs: usize,
    batch_size: usize,
    optimizer: String,
    learning_rate: f64,
    lr_decay: f64,
    lr_milestones: Vec<usize>,
    m_adjust: f64,
    window_r: f64,
    window_a: f64,
    seed: u64,
    train_limit: usize,
    test_limit: usize,
    /// "hardware" for the physical switching curve, "software" for tau(nu).
    update_rule: String,
    /// Update pulse window in nanoseconds.
    t_up_ns: f64,
    resistance_rsd: f64,
    theta0_rsd: f64,
    /// "full" also perturbs the decode conductances; "update-only" confines
    /// the spread to the switching probabilities.
    variation_scope: String,
    temperature_k: f64,
    /// Direct theta0 override in radians; 0 keeps the device value.
    theta0_rad: f64,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        TrainFileConfig {
            dataset_dir: PathBuf::from("data/mnist"),
            device_file: None,
            mode: "ternary".into(),
            hidden: vec![512],
            epochs: 10,
            batch_size: 100,
            optimizer: "adam".into(),
            learning_rate: 0.03,
            lr_decay: 0.5,
            lr_milestones: vec![6, 9],
            m_adjust: 3.0,
            window_r: 0.5,
            window_a: 0.5,
            seed: 42,
            train_limit: 0,
            test_limit: 0,
            update_rule: "hardware".into(),
            t_up_ns: 2.0,
            resistance_rsd: 0.0,
            theta0_rsd: 0.0,
            variation_scope: "full".into(),
            temperature_k: 300.0,
            theta0_rad: 0.0,
        }
    }
}

impl TrainFileConfig {
    fn train_config(&self) -> Result<TrainConfig, Error> {
        let mode = match self.mode.as_str() {
            "ternary" => NetMode::Ternary,
            "binary" => NetMode::Binary,
            "bin-activation" => NetMode::BinActivation,
            other => {
                return Err(Error::Config(format!(
                    "mode must be ternary|binary|bin-activation, got {other:?}"
                )))
            }
        };
        let optimizer = match self.optimizer.as_str() {
            "sgd" => Optimizer::Sgd,
            "adam" => Optimizer::Adam,
            other => return Err(Error::Config(format!("optimizer must be sgd|adam, got {other:?}"))),
        };
        let update_rule = match self.update_rule.as_str() {
            "hardware" => UpdateRule::Hardware,
            "software" => UpdateRule::SoftwareProjection { m: self.m_adjust },
            other => {
                return Err(Error::Config(format!(
                    "update_rule must be hardware|software, got {other:?}"
                )))
            }
        };
        let variation = if self.resistance_rsd > 0.0
            || self.theta0_rsd > 0.0
            || (self.temperature_k - 300.0).abs() > 1e-9
        {
            Some(VariationSpec {
                resistance_rsd: self.resistance_rsd,
                theta0_rsd: self.theta0_rsd,
                temperature: self.temperature_k,
                decode_ideal: match self.variation_scope.as_str() {
                    "full" => false,
                    "update-only" => true,
                    other => {
                        return Err(Error::Config(format!(
                            "variation_scope must be full|update-only, got {other:?}"
                        )))
                    }
                },
            })
        } else {
            None
        };
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            lr_decay: self.lr_decay,
            lr_milestones: self.lr_milestones.clone(),
            optimizer,
            seed: self.seed,
            mode,
            hidden: self.hidden.clone(),
            m_adjust: self.m_adjust,
            window_r: self.window_r,
            window_a: self.window_a,
            variation,
            update_rule,
            t_up: self.t_up_ns * 1e-9,
            train_limit: (self.train_limit > 0).then_some(self.train_limit),
            test_limit: (self.test_limit > 0).then_some(self.test_limit),
            ..TrainConfig::default()
        })
    }
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    final_test_acc: f64,
    final_train_acc: f64,
    epochs: usize,
    seed: u64,
}

fn run_training(cfg: &TrainFileConfig) -> Result<TrainReport, Error> {
    let tc = cfg.train_config()?;
    let (train_ds, test_ds) = load_mnist(&cfg.dataset_dir)?;
    let data = prepare_data(&train_ds, &test_ds, tc.mode, tc.train_limit, tc.test_limit);
    let (_, mut params) = device_params(&cfg.device_file)?;
    if cfg.theta0_rad > 0.0 {
        params.theta0_override = Some(cfg.theta0_rad);
    }
    let seeds = SeedTree::new(tc.seed);
    let mut backend = HardwareBackend::new(&tc, data.input_dim, data.classes, params, &seeds)?;
    train(&mut backend, &tc, &data, &seeds)
}

fn write_metrics_csv(path: &Path, report: &TrainReport, layers: usize) -> Result<(), Error> {
    let mut w = Csv::create(path)?;
    let mut header = vec!["epoch".to_string(), "train_acc".into(), "test_acc".into(), "mean_loss".into()];
    for l in 0..layers {
        header.push(format!("switches_l{l}"));
    }
    w.row(&header)?;
    for e in &report.epochs {
        let mut rec = vec![
            format!("{}", e.epoch),
            format!("{:.6}", e.train_acc),
            format!("{:.6}", e.test_acc),
            format!("{:.6}", e.mean_loss),
        ];
        for s in &e.switches {
            rec.push(format!("{}", s.realized));
        }
        w.row(&rec)?;
    }
    w.done()?;
    Ok(())
}

fn cmd_train(cli: &Cli) -> Result<(), Error> {
    let mut cfg: TrainFileConfig = load_config(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let report = run_training(&cfg)?;
    let layers = cfg.hidden.len() + 1;
    write_metrics_csv(&cli.out.join("metrics.csv"), &report, layers)?;
    let last = report.epochs.last();
    let summary = TrainSummary {
        final_test_acc: report.final_test_acc,
        final_train_acc: last.map_or(0.0, |e| e.train_acc),
        epochs: report.epochs.len(),
        seed: cfg.seed,
    };
    write_json(&cli.out.join("summary.json"), &summary)?;
    record_config(&cli.out, &cfg)?;
    for e in &report.epochs {
        println!(
            "epoch {}: train {:.4} test {:.4} loss {:.4}",
            e.epoch, e.train_acc, e.test_acc, e.mean_loss
        );
    }
    println!("final test accuracy: {:.4}", report.final_test_acc);
    Ok(())
}

// --- sweep ---

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SweepConfig {
    base: TrainFileConfig,
    resistance_rsd: Vec<f64>,
    theta0_rad: Vec<f64>,
    temperature_k: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            base: TrainFileConfig::default(),
            resistance_rsd: vec![0.0, 0.05, 0.30],
            theta0_rad: vec![],
            temperature_k: vec![],
        }
    }
}

fn cmd_sweep(cli: &Cli) -> Result<(), Error> {
    let mut cfg: SweepConfig = load_config(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.base.seed = s;
    }
    let master = SeedTree::new(cfg.base.seed);
    let mut w = Csv::create(&cli.out.join("sweep.csv"))?;
    w.row(["axis", "value", "seed", "final_train_acc", "final_test_acc"])?;
    let mut run_point = |axis: &str, idx: u64, value: f64, point: &TrainFileConfig| -> Result<(), Error> {
        let mut point = point.clone();
        point.seed = master.child_idx(axis, idx).master();
        let report = run_training(&point)?;
        let last_train = report.epochs.last().map_or(0.0, |e| e.train_acc);
        w.row([
            axis.to_string(),
            format!("{value}"),
            format!("{}", point.seed),
            format!("{:.6}", last_train),
            format!("{:.6}", report.final_test_acc),
        ])?;
        println!(
            "{axis} = {value}: final test acc {:.4}",
            report.final_test_acc
        );
        Ok(())
    };
    for (i, &rsd) in cfg.resistance_rsd.iter().enumerate() {
        let mut point = cfg.base.clone();
        point.resistance_rsd = rsd;
        run_point("resistance_rsd", i as u64, rsd, &point)?;
    }
    for (i, &t0) in cfg.theta0_rad.iter().enumerate() {
        let mut point = cfg.base.clone();
        point.theta0_rad = t0;
        run_point("theta0_rad", i as u64, t0, &point)?;
    }
    for (i, &t) in cfg.temperature_k.iter().enumerate() {
        let mut point = cfg.base.clone();
        point.temperature_k = t;
        run_point("temperature_k", i as u64, t, &point)?;
    }
    w.done()?;
    record_config(&cli.out, &cfg)?;
    Ok(())
}

// --- perf ---

#[derive(Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct PerfConfig {
    /// Power profile TOML; Table VII/VIII defaults are used when missing.
    profile_file: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct PerfReport {
    warnings: Vec<String>,
    profile: PowerProfile,
    array_feedforward: mtj_gxnor::perf::PhaseReport,
    array_update_per_mtj: Option<mtj_gxnor::perf::PhaseReport>,
    array_update_per_synapse: Option<mtj_gxnor::perf::PhaseReport>,
    system: mtj_gxnor::perf::SystemReport,
}

fn cmd_perf(cli: &Cli) -> Result<(), Error> {
    let cfg: PerfConfig = load_config(&cli.config)?;
    let mut warnings = Vec::new();
    let profile = match &cfg.profile_file {
        Some(p) if p.exists() => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        Some(p) => {
            warnings.push(format!(
                "power profile {} not found; using built-in Table VII defaults",
                p.display()
            ));
            PowerProfile::table_vii_128()
        }
        None => PowerProfile::table_vii_128(),
    };
    let report = PerfReport {
        warnings,
        array_feedforward: feedforward_efficiency(&profile)?,
        array_update_per_mtj: update_efficiency(&profile, UpdateOpsConvention::PerMtj)?,
        array_update_per_synapse: update_efficiency(&profile, UpdateOpsConvention::PerSynapse)?,
        system: system_efficiency(&profile)?,
        profile,
    };
    for wmsg in &report.warnings {
        eprintln!("warning: {wmsg}");
    }
    println!("phase                        ops        time        power     TOPs/W");
    let row = |name: &str, r: &mtj_gxnor::perf::PhaseReport| {
        println!(
            "{name:<24} {:>9.0} {:>10.2e} {:>11.2e} {:>10.2}",
            r.ops, r.seconds, r.watts, r.tops_per_watt
        );
    };
    row("array feedforward", &report.array_feedforward);
    if let Some(r) = &report.array_update_per_mtj {
        row("array update (per MTJ)", r);
    }
    if let Some(r) = &report.array_update_per_synapse {
        row("array update (per syn)", r);
    }
    row("system feedforward", &report.system.feedforward);
    row("system update", &report.system.update);
    row("system inverse read", &report.system.inverse_read);
    println!(
        "paper figures: feedforward {} / update {} / inverse read {} TOPs/W",
        report.system.paper_feedforward_tops_per_watt,
        report.system.paper_update_tops_per_watt,
        report.system.paper_inverse_read_tops_per_watt
    );
    write_json(&cli.out.join("perf.json"), &report)?;
    record_config(&cli.out, &cfg)?;
    Ok(())
}
