//! Bit error rate of the restarting decoder across an SNR range and several
//! restart budgets, printed as CSV. Budgets here are kept small so the whole
//! sweep takes on the order of a minute; raise `min_errors`/`max_words` for
//! publication-grade points.

use std::path::Path;
use tpg::decoder::ParamsFile;
use tpg::harness::{render_csv, run_sweep_on, CodeContext, DecoderKind, SweepConfig};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let ctx = CodeContext::load(data.join("ldpc_204_102.alist")).expect("code loads");
    let file = ParamsFile::load(data.join("tpg_204.json")).expect("params load");
    ctx.check_params_fit(&file).expect("params match the code");

    let cfg = SweepConfig {
        decoders: vec![DecoderKind::Tpg, DecoderKind::Bp],
        snr_points: vec![2.0, 2.5, 3.0, 3.5],
        r_max_list: vec![1, 10],
        min_errors: 50,
        max_words: 20_000,
        seed: 1,
        eval_t_max: Some(100),
        ..SweepConfig::new(data.join("ldpc_204_102.alist"))
    };
    let records = run_sweep_on(&ctx, Some(&file.params()), &cfg).expect("sweep runs");
    print!("{}", render_csv(&records));
}
