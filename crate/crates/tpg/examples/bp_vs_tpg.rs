//! Head-to-head of the restarting decoder against sum-product belief
//! propagation on the same simulated words: matched codewords, matched
//! noise, one line per operating point.

use std::path::Path;
use tpg::decoder::ParamsFile;
use tpg::harness::{run_sweep_on, CodeContext, DecoderKind, SweepConfig};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let ctx = CodeContext::load(data.join("ldpc_204_102.alist")).expect("code loads");
    let file = ParamsFile::load(data.join("tpg_204.json")).expect("params load");

    let cfg = SweepConfig {
        decoders: vec![DecoderKind::Tpg, DecoderKind::Bp],
        snr_points: vec![2.5, 3.0, 3.5],
        r_max_list: vec![100],
        min_errors: 80,
        max_words: 60_000,
        seed: 3,
        eval_t_max: Some(100),
        ..SweepConfig::new(data.join("ldpc_204_102.alist"))
    };
    let records = run_sweep_on(&ctx, Some(&file.params()), &cfg).expect("sweep runs");

    println!(
        "{:>7} {:>6} {:>12} {:>12} {:>10}",
        "snr_db", "dec", "ber", "word_errors", "avg_iter"
    );
    for r in &records {
        println!(
            "{:>7.2} {:>6} {:>12.3e} {:>12} {:>10.1}",
            r.snr_db, r.decoder, r.ber, r.word_errors, r.avg_iter
        );
    }
}
