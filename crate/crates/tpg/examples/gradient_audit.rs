//! Spot-checks the analytic gradient of the unrolled training loss against
//! central finite differences on a random small code, printing the worst
//! relative disagreement per parameter block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpg::channel::ChannelConfig;
use tpg::code::{GeneratorMatrix, ParityCheckMatrix};
use tpg::decoder::TpgParams;
use tpg::polytope::PolytopeMatrices;
use tpg::trainer::{loss, loss_gradient, make_minibatch};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rows = vec![
        vec![0, 1, 2],
        vec![2, 3, 4],
        vec![4, 5, 6, 7],
        vec![7, 8, 9],
    ];
    let h = ParityCheckMatrix::from_row_supports(10, rows).expect("valid supports");
    let mats = PolytopeMatrices::from_parity_check(&h).expect("builds");
    let generator = GeneratorMatrix::from_parity_check(&h);
    let channel = ChannelConfig::new(3.0, h.design_rate()).expect("valid snr");

    let t = 4;
    let params = TpgParams {
        alpha: 5.0,
        beta: (0..t).map(|_| rng.random_range(0.3..1.2)).collect(),
        gamma: (0..t).map(|_| rng.random_range(0.3..1.2)).collect(),
    };
    let batch = make_minibatch(6, &generator, &channel, &mut rng);
    let (value, grad) = loss_gradient(&batch, &params, &mats, t).expect("gradient runs");
    println!(
        "loss {value:.6} over {} samples, horizon {t}",
        batch.samples.len()
    );

    let eps = 1e-6;
    let fd = |perturb: &dyn Fn(&mut TpgParams, f64)| -> f64 {
        let mut plus = params.clone();
        perturb(&mut plus, eps);
        let mut minus = params.clone();
        perturb(&mut minus, -eps);
        let lp = loss(&batch, &plus, &mats, t).expect("loss runs");
        let lm = loss(&batch, &minus, &mats, t).expect("loss runs");
        (lp - lm) / (2.0 * eps)
    };

    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
    let mut worst: f64 = rel(grad.alpha, fd(&|p, e| p.alpha += e));
    println!(
        "alpha: analytic {:+.6e}, worst rel so far {worst:.2e}",
        grad.alpha
    );
    for i in 0..t {
        worst = worst.max(rel(grad.beta[i], fd(&|p, e| p.beta[i] += e)));
        worst = worst.max(rel(grad.gamma[i], fd(&|p, e| p.gamma[i] += e)));
    }
    println!(
        "all {} coordinates audited, worst relative error {worst:.3e}",
        1 + 2 * t
    );
}
