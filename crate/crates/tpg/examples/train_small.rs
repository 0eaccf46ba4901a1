//! Trains a short schedule on the bundled length-96 code and prints how the
//! per-iteration step sizes and penalty weights come out. A few minutes of
//! CPU; shrink `updates_per_generation` for a faster look.

use std::path::Path;
use tpg::harness::CodeContext;
use tpg::trainer::{incremental_train_with, TrainConfig};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let ctx = CodeContext::load(data.join("ldpc_96_48.alist")).expect("code loads");

    let cfg = TrainConfig {
        t_max: 10,
        updates_per_generation: 100,
        batch_size: 50,
        train_snr_db: 6.0,
        learning_rate: 0.005,
        seed: 1,
        ..TrainConfig::default()
    };

    let outcome = incremental_train_with(&cfg, &ctx.h, &ctx.mats, None, |rec| {
        if rec.update_index == cfg.updates_per_generation {
            eprintln!(
                "generation {:>2}/{}: loss {:.4}  ({:.1} s)",
                rec.generation, cfg.t_max, rec.loss, rec.wall_time_s
            );
        }
    })
    .expect("training runs");

    let p = &outcome.params;
    println!("\nalpha {:.3}", p.alpha);
    println!("{:>3} {:>8} {:>8}", "t", "gamma", "beta");
    for t in 0..p.t_max() {
        println!("{:>3} {:>8.3} {:>8.3}", t + 1, p.gamma[t], p.beta[t]);
    }
}
