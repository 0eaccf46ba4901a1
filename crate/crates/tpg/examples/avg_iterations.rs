//! Average inner iterations per word as a function of SNR and restart
//! budget. With early exit on a satisfied syndrome, easy words cost a few
//! iterations while hard ones burn whole restarts, so the mean tracks
//! decoding difficulty.

use std::path::Path;
use tpg::decoder::ParamsFile;
use tpg::harness::{run_sweep_on, CodeContext, DecoderKind, SweepConfig};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let ctx = CodeContext::load(data.join("ldpc_204_102.alist")).expect("code loads");
    let file = ParamsFile::load(data.join("tpg_204.json")).expect("params load");

    let cfg = SweepConfig {
        decoders: vec![DecoderKind::Tpg],
        snr_points: vec![2.5, 3.0, 3.5, 4.0, 4.5],
        r_max_list: vec![1, 10, 100],
        min_errors: u64::MAX,
        max_words: 2000,
        seed: 1,
        eval_t_max: Some(100),
        ..SweepConfig::new(data.join("ldpc_204_102.alist"))
    };
    let records = run_sweep_on(&ctx, Some(&file.params()), &cfg).expect("sweep runs");

    println!(
        "{:>7} {:>6} {:>10} {:>12}",
        "snr_db", "r_max", "avg_iter", "word_errors"
    );
    for r in &records {
        println!(
            "{:>7.2} {:>6} {:>10.1} {:>12}",
            r.snr_db,
            r.r_max.unwrap(),
            r.avg_iter,
            r.word_errors
        );
    }
}
