//! Quick MNIST training probe for protocol exploration.
//!
//! Positional args (all optional): epochs, train_limit (0 = full), lr,
//! hidden, rsd, temp_k, theta0 (0 = device default), seed, optimizer
//! (sgd|adam), batch, rule (hw|sw), window_a, t_up_ns, test_limit
//! (0 = full), decode_ideal (1 = update-only variation scope).

use mtj_gxnor::array::{UpdateRule, VariationSpec};
use mtj_gxnor::mnist::load_mnist;
use mtj_gxnor::mtj::MtjDeviceParams;
use mtj_gxnor::train::{prepare_data, train_hardware, TrainConfig};
use std::path::Path;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(1, |s| s.parse().unwrap());
    let train_limit: usize = args.get(2).map_or(2000, |s| s.parse().unwrap());
    let lr: f64 = args.get(3).map_or(1.0, |s| s.parse().unwrap());
    let hidden: usize = args.get(4).map_or(512, |s| s.parse().unwrap());
    let rsd: f64 = args.get(5).map_or(0.0, |s| s.parse().unwrap());
    let temp: f64 = args.get(6).map_or(300.0, |s| s.parse().unwrap());
    let theta0: f64 = args.get(7).map_or(0.0, |s| s.parse().unwrap());
    let seed: u64 = args.get(8).map_or(42, |s| s.parse().unwrap());
    let opt = args.get(9).map_or("sgd".to_string(), |s| s.clone());
    let batch: usize = args.get(10).map_or(100, |s| s.parse().unwrap());
    let rule = args.get(11).map_or("hw".to_string(), |s| s.clone());
    let wa: f64 = args.get(12).map_or(0.5, |s| s.parse().unwrap());
    let t_up_ns: f64 = args.get(13).map_or(2.0, |s| s.parse().unwrap());
    let test_limit: usize = args.get(14).map_or(2000, |s| s.parse().unwrap());
    let decode_ideal: bool = args.get(15).is_some_and(|s| s == "1");
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let (train, test) = load_mnist(&dir).unwrap();
    let cfg = TrainConfig {
        epochs,
        batch_size: batch,
        optimizer: if opt == "adam" { mtj_gxnor::train::Optimizer::Adam } else { mtj_gxnor::train::Optimizer::Sgd },
        learning_rate: lr,
        hidden: vec![hidden],
        window_a: wa,
        t_up: t_up_ns * 1e-9,
        seed,
        train_limit: if train_limit == 0 { None } else { Some(train_limit) },
        test_limit: if test_limit == 0 { None } else { Some(test_limit) },
        update_rule: if rule == "sw" {
            UpdateRule::SoftwareProjection { m: 3.0 }
        } else {
            UpdateRule::Hardware
        },
        variation: if rsd > 0.0 || temp != 300.0 {
            Some(VariationSpec {
                resistance_rsd: rsd,
                theta0_rsd: 0.0,
                temperature: temp,
                decode_ideal,
            })
        } else {
            None
        },
        ..TrainConfig::default()
    };
    let mode = cfg.mode;
    let data = prepare_data(&train, &test, mode, cfg.train_limit, cfg.test_limit);
    let mut device = MtjDeviceParams::table_iii();
    if theta0 > 0.0 {
        device.theta0_override = Some(theta0);
    }
    let t0 = Instant::now();
    let rep = train_hardware(&cfg, &data, device).unwrap();
    for e in &rep.epochs {
        println!(
            "epoch {} train {:.4} test {:.4} loss {:.4} sw {:?} [{:.1}s]",
            e.epoch,
            e.train_acc,
            e.test_acc,
            e.mean_loss,
            e.switches.iter().map(|s| s.realized).collect::<Vec<_>>(),
            t0.elapsed().as_secs_f64()
        );
    }
}
