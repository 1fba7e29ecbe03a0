//! Training-loop behavior: hardware/software lockstep agreement, learning on
//! a separable toy task, and end-to-end determinism.

use mtj_gxnor::array::UpdateRule;
use mtj_gxnor::mtj::MtjDeviceParams;
use mtj_gxnor::rng::SeedTree;
use mtj_gxnor::train::{
    train, Backend, HardwareBackend, NetMode, Optimizer, SoftwareBackend, TrainConfig, TrainData,
};
use rand::Rng;

/// Two-prototype separable task: class k is prototype k with a few entries
/// zeroed out.
fn toy_data(dim: usize, per_class: usize, seed: u64) -> TrainData {
    let mut rng = SeedTree::new(seed).stream("toy-data");
    let protos: Vec<Vec<i8>> = (0..2)
        .map(|_| {
            (0..dim)
                .map(|_| if rng.gen_bool(0.5) { 1i8 } else { -1 })
                .collect()
        })
        .collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in 0..2 * per_class {
        let k = s % 2;
        let mut v = protos[k].clone();
        for _ in 0..dim / 8 {
            let j = rng.gen_range(0..dim);
            v[j] = 0;
        }
        x.extend_from_slice(&v);
        y.push(k as u8);
    }
    TrainData {
        train_x: x.clone(),
        train_y: y.clone(),
        test_x: x,
        test_y: y,
        input_dim: dim,
        classes: 2,
    }
}

fn toy_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 30,
        batch_size: 8,
        learning_rate: 2.0,
        lr_decay: 1.0,
        lr_milestones: vec![],
        optimizer: Optimizer::Sgd,
        seed,
        mode: NetMode::Ternary,
        hidden: vec![16],
        update_rule: UpdateRule::SoftwareProjection { m: 3.0 },
        ..TrainConfig::default()
    }
}

#[test]
fn software_oracle_lockstep() {
    let data = toy_data(24, 16, 7);
    let mut cfg = toy_config(99);
    cfg.epochs = 4;
    let seeds = SeedTree::new(cfg.seed);
    let mut hw = HardwareBackend::new(
        &cfg,
        data.input_dim,
        data.classes,
        MtjDeviceParams::table_iii(),
        &seeds,
    )
    .unwrap();
    let mut sw = SoftwareBackend::new(&cfg, data.input_dim, data.classes, &seeds);
    // identical initialization from the shared init stream
    for l in 0..hw.sizes().len() {
        assert_eq!(hw.logical_weights(l), sw.logical_weights(l));
    }
    let rep_hw = train(&mut hw, &cfg, &data, &seeds).unwrap();
    let rep_sw = train(&mut sw, &cfg, &data, &seeds).unwrap();
    for (eh, es) in rep_hw.epochs.iter().zip(&rep_sw.epochs) {
        assert_eq!(eh.train_acc, es.train_acc, "epoch {}", eh.epoch);
        assert_eq!(eh.test_acc, es.test_acc, "epoch {}", eh.epoch);
        assert_eq!(eh.mean_loss, es.mean_loss, "epoch {}", eh.epoch);
        assert_eq!(eh.switches, es.switches, "epoch {}", eh.epoch);
    }
    for l in 0..hw.sizes().len() {
        assert_eq!(
            hw.logical_weights(l),
            sw.logical_weights(l),
            "layer {l} weights diverged"
        );
    }
}

#[test]
fn toy_task_learns() {
    let mut solved = 0;
    let seeds = [1u64, 2, 3, 4, 5];
    for &seed in &seeds {
        let data = toy_data(24, 16, 7);
        let cfg = toy_config(seed);
        let rep = train_with(&cfg, &data);
        if rep.epochs.iter().any(|e| e.train_acc == 1.0) {
            solved += 1;
        }
    }
    assert!(solved >= 4, "solved {}/{} seeds", solved, seeds.len());
}

#[test]
fn hardware_rule_learns() {
    let data = toy_data(24, 16, 7);
    let mut cfg = toy_config(3);
    cfg.update_rule = UpdateRule::Hardware;
    cfg.epochs = 40;
    let rep = train_with(&cfg, &data);
    let best = rep
        .epochs
        .iter()
        .map(|e| e.train_acc)
        .fold(0.0f64, f64::max);
    assert!(best >= 0.95, "best hardware-rule train accuracy {best}");
    // switching activity was actually exercised
    let total: u64 = rep
        .epochs
        .iter()
        .flat_map(|e| e.switches.iter())
        .map(|s| s.realized)
        .sum();
    assert!(total > 0);
}

#[test]
fn binary_mode_learns() {
    let data = toy_data(24, 16, 11);
    let mut cfg = toy_config(5);
    cfg.mode = NetMode::Binary;
    let rep = train_with(&cfg, &data);
    let best = rep
        .epochs
        .iter()
        .map(|e| e.train_acc)
        .fold(0.0f64, f64::max);
    assert!(best >= 0.9, "best binary train accuracy {best}");
}

#[test]
fn training_is_deterministic() {
    let data = toy_data(24, 16, 7);
    let mut cfg = toy_config(21);
    cfg.epochs = 6;
    cfg.update_rule = UpdateRule::Hardware;
    let a = train_with(&cfg, &data);
    let b = train_with(&cfg, &data);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn adam_runs_and_learns() {
    let data = toy_data(24, 16, 7);
    let mut cfg = toy_config(8);
    cfg.optimizer = Optimizer::Adam;
    cfg.learning_rate = 0.5;
    let rep = train_with(&cfg, &data);
    let best = rep
        .epochs
        .iter()
        .map(|e| e.train_acc)
        .fold(0.0f64, f64::max);
    assert!(best >= 0.9, "best adam train accuracy {best}");
}

fn train_with(cfg: &TrainConfig, data: &TrainData) -> mtj_gxnor::train::TrainReport {
    let seeds = SeedTree::new(cfg.seed);
    let mut backend = HardwareBackend::new(
        cfg,
        data.input_dim,
        data.classes,
        MtjDeviceParams::table_iii(),
        &seeds,
    )
    .unwrap();
    train(&mut backend, cfg, data, &seeds).unwrap()
}
