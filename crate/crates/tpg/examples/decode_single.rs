//! Transmits a handful of random codewords of the bundled length-204 code
//! over the channel and decodes each one, printing what happened per word.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use tpg::channel::{modulate, transmit, ChannelConfig};
use tpg::decoder::{DecodeConfig, ParamsFile, TpgDecoder};
use tpg::harness::CodeContext;

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let ctx = CodeContext::load(data.join("ldpc_204_102.alist")).expect("code loads");
    let file = ParamsFile::load(data.join("tpg_204.json")).expect("params load");
    ctx.check_params_fit(&file).expect("params match the code");

    let decoder = TpgDecoder::new(&ctx.h, &ctx.mats, file.params()).expect("valid params");
    let channel = ChannelConfig::new(3.5, ctx.h.design_rate()).expect("valid snr");
    let config = DecodeConfig::with_r_max(10);
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    println!(
        "snr 3.5 dB, restart budget 10, schedule length {}",
        decoder.params().t_max()
    );
    let words = 8;
    let mut exact = 0;
    for w in 0..words {
        let codeword = ctx.generator.random_codeword(&mut rng);
        let out = transmit(&modulate(&codeword.bits), &channel, &mut rng);
        let result = decoder.decode(&out.received, &config, &mut rng);
        let errors = result
            .estimate
            .iter()
            .zip(&codeword.bits)
            .filter(|(a, b)| a != b)
            .count();
        exact += usize::from(errors == 0);
        println!(
            "word {w}: converged={} restarts={} inner_iterations={} bit_errors={errors}",
            result.converged, result.restarts_used, result.inner_iterations_total
        );
    }
    println!("{exact}/{words} words recovered exactly");
}
