//! Error trajectories of the inner loop: one received word, ten random
//! starting points, and the squared error per iteration for each start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use tpg::channel::{modulate, transmit, ChannelConfig};
use tpg::decoder::{ParamsFile, TpgDecoder};
use tpg::harness::CodeContext;

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let ctx = CodeContext::load(data.join("ldpc_204_102.alist")).expect("code loads");
    let file = ParamsFile::load(data.join("tpg_204.json")).expect("params load");
    let decoder = TpgDecoder::new(&ctx.h, &ctx.mats, file.params()).expect("valid params");
    let channel = ChannelConfig::new(7.0, ctx.h.design_rate()).expect("valid snr");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let codeword = ctx.generator.random_codeword(&mut rng);
    let out = transmit(&modulate(&codeword.bits), &channel, &mut rng);

    println!("normalized squared error per inner iteration (10 random starts, 7.0 dB):");
    println!(
        "{:>4}  {}",
        "t",
        (0..10)
            .map(|k| format!("start{k:<2}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let n = ctx.h.n();
    let trajectories: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            let s1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            decoder.trajectory_from(&out.received, &s1, &codeword.bits)
        })
        .collect();
    let t_len = trajectories.iter().map(Vec::len).max().unwrap();
    for t in 0..t_len {
        let row: Vec<String> = trajectories
            .iter()
            .map(|tr| {
                tr.get(t)
                    .map_or_else(|| "      -".into(), |e| format!("{e:7.0e}"))
            })
            .collect();
        println!("{t:>4}  {}", row.join(" "));
    }
}
