//! Command line front end: training, decoding, BER sweeps, iteration
//! statistics, constraint-matrix dumps, and a gradient audit.
//!
//! Set `TPG_THREADS` to cap the worker count; by default all cores are used.

use clap::{Args, Parser, Subcommand};
use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use tpg::channel::{modulate, transmit, ChannelConfig};
use tpg::decoder::{DecodeConfig, ParamsFile, TpgDecoder, TpgParams};
use tpg::harness::{
    emit_results, render_csv, render_jsonl, run_avg_iterations, run_ber_sweep, word_stream,
    BerRecord, CodeContext, CodewordMode, DecoderKind, OutputFormat, StreamTag, SweepConfig,
};
use tpg::trainer::{
    incremental_train_with, loss, loss_gradient, make_minibatch, unrolled_forward, TrainConfig,
};

#[derive(Parser)]
#[command(
    name = "tpg",
    version,
    about = "Trainable projected gradient decoding of LDPC codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train decoder parameters generation by generation.
    Train(TrainArgs),
    /// Decode simulated words one at a time and print each outcome.
    Decode(DecodeArgs),
    /// Monte-Carlo BER sweep over SNR points and restart budgets.
    Sweep(SweepArgs),
    /// Average inner-iteration counts over a fixed number of words.
    AvgIter(AvgIterArgs),
    /// Print the constraint matrices Q, R, D as dense grids.
    DumpQrd(DumpArgs),
    /// Audit the analytic training gradient against finite differences.
    CheckGrad(CheckGradArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Parity-check matrix in alist format.
    #[arg(long)]
    code: PathBuf,
    /// Inner-iteration budget to train up to.
    #[arg(long, default_value_t = 25)]
    tmax: usize,
    /// Adam updates per generation.
    #[arg(long = "J", default_value_t = 500)]
    updates: usize,
    /// Mini-batch size.
    #[arg(long = "K", default_value_t = 50)]
    batch: usize,
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    /// Training channel SNR in dB.
    #[arg(long, default_value_t = 4.0)]
    train_snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4.0)]
    init_alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    init_beta: f64,
    #[arg(long, default_value_t = 1.0)]
    init_gamma: f64,
    /// Continue from an earlier parameter file with a shorter schedule.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Where to save the trained parameters (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-update training log (one JSON record per line).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Channel SNR in dB.
    #[arg(long)]
    snr: f64,
    /// Number of words to simulate and decode.
    #[arg(long, default_value_t = 10)]
    words: u64,
    #[arg(long, default_value_t = 1)]
    rmax: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Transmitted codewords: "random" or "zero".
    #[arg(long, default_value = "random")]
    codewords: CodewordMode,
    /// Evaluate with this inner-iteration budget, extending the schedule.
    #[arg(long)]
    tmax: Option<usize>,
    /// Keep the best scoring restart instead of the first convergent one.
    #[arg(long)]
    best_of: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    code: PathBuf,
    /// Trained parameters; required when the decoder list includes tpg.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Comma list of decoders to benchmark: tpg, bp.
    #[arg(long, default_value = "tpg")]
    decoder: String,
    /// SNR points in dB: "2.0:4.5:0.25" (start:stop:step) or "2.0,3.0,4.0".
    #[arg(long)]
    snr: String,
    /// Comma list of restart budgets.
    #[arg(long, default_value = "1")]
    rmax: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "random")]
    codewords: CodewordMode,
    /// Evaluate with this inner-iteration budget, extending the schedule.
    #[arg(long)]
    eval_tmax: Option<usize>,
    #[arg(long)]
    best_of: bool,
    /// Iteration cap for the BP baseline.
    #[arg(long, default_value_t = 100)]
    bp_iters: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// "csv" or "jsonl"; inferred from the output extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Stop a point after this many bit errors.
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    /// Word budget per point; accepts scientific notation like 1e7.
    #[arg(long, default_value = "1e7")]
    max_words: String,
}

#[derive(Args)]
struct AvgIterArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Words per point; accepts scientific notation.
    #[arg(long, default_value = "10000")]
    words: String,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckGradArgs {
    #[arg(long)]
    code: PathBuf,
    /// Unrolled horizon to audit.
    #[arg(long, default_value_t = 4)]
    t: usize,
    /// Mini-batch size per instance.
    #[arg(long, default_value_t = 3)]
    batch: usize,
    /// Number of random instances.
    #[arg(long, default_value_t = 5)]
    instances: usize,
    #[arg(long, default_value_t = 4.0)]
    snr: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Maximum accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = e.source();
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> Result<(), String> {
    match std::env::var("TPG_THREADS") {
        Ok(v) => {
            let count: usize = v
                .parse()
                .map_err(|_| format!("TPG_THREADS must be a positive integer, got `{v}`"))?;
            if count == 0 {
                return Err("TPG_THREADS must be at least 1".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(count)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::AvgIter(args) => cmd_avg_iter(args),
        Command::DumpQrd(args) => cmd_dump_qrd(args),
        Command::CheckGrad(args) => cmd_check_grad(args),
    }
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode, Box<dyn Error>> {
    let ctx = CodeContext::load(&args.code)?;
    let cfg = TrainConfig {
        t_max: args.tmax,
        updates_per_generation: args.updates,
        batch_size: args.batch,
        train_snr_db: args.train_snr,
        learning_rate: args.lr,
        seed: args.seed,
        init: tpg::trainer::InitValues {
            alpha: args.init_alpha,
            beta: args.init_beta,
            gamma: args.init_gamma,
        },
        ..TrainConfig::default()
    };

    let resume = match &args.resume {
        Some(path) => {
            let file = ParamsFile::load(path)?;
            ctx.check_params_fit(&file)?;
            Some(file.params())
        }
        None => None,
    };

    let mut log_file: Option<std::io::BufWriter<std::fs::File>> = match &args.log {
        Some(path) => Some(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => None,
    };

    let start = Instant::now();
    let mut last_generation = 0;
    let outcome = incremental_train_with(&cfg, &ctx.h, &ctx.mats, resume.as_ref(), |rec| {
        if let Some(f) = log_file.as_mut() {
            use std::io::Write;
            let line = serde_json::to_string(rec).expect("train record serializes");
            let _ = writeln!(f, "{line}");
        }
        if rec.generation != last_generation {
            if last_generation != 0 {
                eprintln!();
            }
            last_generation = rec.generation;
        }
        if rec.update_index == cfg.updates_per_generation {
            eprint!(
                "\rgeneration {:>3}/{}: loss {:.6}  ({:.1} s)",
                rec.generation, cfg.t_max, rec.loss, rec.wall_time_s
            );
        }
    })?;
    eprintln!();

    if let Some(f) = log_file.as_mut() {
        use std::io::Write;
        f.flush()?;
    }

    let file = ParamsFile::new(&outcome.params, &ctx.code_id, args.train_snr);
    file.save(&args.out)?;
    println!(
        "trained {} generations in {:.1} s; parameters saved to {}",
        outcome.params.t_max(),
        start.elapsed().as_secs_f64(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_decode(args: DecodeArgs) -> Result<ExitCode, Box<dyn Error>> {
    let ctx = CodeContext::load(&args.code)?;
    let file = ParamsFile::load(&args.params)?;
    ctx.check_params_fit(&file)?;
    let mut params = file.params();
    if let Some(t) = args.tmax {
        params = params.extended(t);
    }
    let decoder = TpgDecoder::new(&ctx.h, &ctx.mats, params)?;
    let channel = ChannelConfig::new(args.snr, ctx.h.design_rate())?;
    let config = DecodeConfig {
        r_max: args.rmax,
        best_of_restarts: args.best_of,
        capture_trajectory: false,
    };

    let n = ctx.h.n();
    let mut word_errors = 0u64;
    let mut bit_errors = 0u64;
    let mut iterations = 0u64;
    for w in 0..args.words {
        let codeword = match args.codewords {
            CodewordMode::Random => {
                let mut rng = word_stream(args.seed, 0, w, StreamTag::Codeword);
                ctx.generator.random_codeword(&mut rng).bits
            }
            CodewordMode::Zero => vec![0u8; n],
        };
        let out = transmit(
            &modulate(&codeword),
            &channel,
            &mut word_stream(args.seed, 0, w, StreamTag::Noise),
        );
        let mut rng = word_stream(args.seed, 0, w, StreamTag::Decoder);
        let result = decoder.decode(&out.received, &config, &mut rng);

        let errs = result
            .estimate
            .iter()
            .zip(&codeword)
            .filter(|(a, b)| a != b)
            .count() as u64;
        bit_errors += errs;
        word_errors += u64::from(errs > 0);
        iterations += result.inner_iterations_total as u64;
        println!(
            "word {w}: converged={} restarts={} iterations={} bit_errors={errs}",
            result.converged, result.restarts_used, result.inner_iterations_total
        );
    }

    let words = args.words.max(1);
    println!(
        "{} words: {} word errors, {} bit errors (ber {:.3e}), {:.1} iterations/word",
        args.words,
        word_errors,
        bit_errors,
        bit_errors as f64 / (args.words * n as u64).max(1) as f64,
        iterations as f64 / words as f64
    );
    Ok(ExitCode::SUCCESS)
}

fn build_sweep_config(args: &EvalArgs) -> Result<SweepConfig, Box<dyn Error>> {
    let mut cfg = SweepConfig::new(&args.code);
    cfg.params_path = args.params.clone();
    cfg.decoders = parse_decoders(&args.decoder)?;
    cfg.snr_points = parse_snr_spec(&args.snr)?;
    cfg.r_max_list = parse_usize_list(&args.rmax)?;
    cfg.seed = args.seed;
    cfg.codeword_mode = args.codewords;
    cfg.eval_t_max = args.eval_tmax;
    cfg.best_of_restarts = args.best_of;
    cfg.bp_max_iter = args.bp_iters;
    Ok(cfg)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Box<dyn Error>> {
    let mut cfg = build_sweep_config(&args.eval)?;
    cfg.min_errors = args.min_errors;
    cfg.max_words = parse_count(&args.max_words)?;
    let records = run_ber_sweep(&cfg)?;
    write_records(&records, &args.eval)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_avg_iter(args: AvgIterArgs) -> Result<ExitCode, Box<dyn Error>> {
    let mut cfg = build_sweep_config(&args.eval)?;
    cfg.max_words = parse_count(&args.words)?;
    let records = run_avg_iterations(&cfg)?;
    write_records(&records, &args.eval)?;
    Ok(ExitCode::SUCCESS)
}

fn write_records(records: &[BerRecord], args: &EvalArgs) -> Result<(), Box<dyn Error>> {
    let format = match args.format.as_deref() {
        Some("csv") => OutputFormat::Csv,
        Some("jsonl") => OutputFormat::Jsonl,
        Some(other) => {
            return Err(format!("unknown format `{other}` (expected csv or jsonl)").into())
        }
        None => match args.out.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext == "jsonl" => OutputFormat::Jsonl,
            _ => OutputFormat::Csv,
        },
    };
    match &args.out {
        Some(path) => {
            emit_results(records, format, path)?;
            eprintln!("{} points written to {}", records.len(), path.display());
        }
        None => {
            let text = match format {
                OutputFormat::Csv => render_csv(records),
                OutputFormat::Jsonl => render_jsonl(records),
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn cmd_dump_qrd(args: DumpArgs) -> Result<ExitCode, Box<dyn Error>> {
    let ctx = CodeContext::load(&args.code)?;
    let text = ctx.mats.dump_dense();
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_grad(args: CheckGradArgs) -> Result<ExitCode, Box<dyn Error>> {
    use rand::{Rng, SeedableRng};

    let ctx = CodeContext::load(&args.code)?;
    if args.t == 0 || args.batch == 0 || args.instances == 0 {
        return Err("t, batch, and instances must all be at least 1".into());
    }
    let channel = ChannelConfig::new(args.snr, ctx.h.design_rate())?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);

    let kink_margin = 1e-4;
    let mut audited = 0usize;
    let mut worst: f64 = 0.0;
    let mut audited_instances = 0usize;

    'instances: for instance in 0..args.instances {
        for _attempt in 0..50 {
            let params = TpgParams {
                alpha: rng.random_range(2.0..8.0),
                beta: (0..args.t).map(|_| rng.random_range(0.3..1.5)).collect(),
                gamma: (0..args.t).map(|_| rng.random_range(0.3..1.5)).collect(),
            };
            let batch = make_minibatch(args.batch, &ctx.generator, &channel, &mut rng);

            let mut near_kink = false;
            'kink: for sample in &batch.samples {
                let (_, tape) =
                    unrolled_forward(&sample.received, &sample.init, &params, &ctx.mats, args.t)?;
                for state in &tape.states[..args.t] {
                    if ctx
                        .mats
                        .raw_slack(state)
                        .iter()
                        .any(|z| z.abs() < kink_margin)
                    {
                        near_kink = true;
                        break 'kink;
                    }
                }
            }
            if near_kink {
                continue;
            }

            let (_, grad) = loss_gradient(&batch, &params, &ctx.mats, args.t)?;
            let mut instance_worst: f64 = 0.0;
            let mut check = |analytic: f64, perturb: &dyn Fn(&mut TpgParams, f64)| {
                let mut plus = params.clone();
                perturb(&mut plus, args.eps);
                let mut minus = params.clone();
                perturb(&mut minus, -args.eps);
                let lp = loss(&batch, &plus, &ctx.mats, args.t).expect("forward stays finite");
                let lm = loss(&batch, &minus, &ctx.mats, args.t).expect("forward stays finite");
                let fd = (lp - lm) / (2.0 * args.eps);
                let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-8);
                instance_worst = instance_worst.max(rel);
            };

            check(grad.alpha, &|p, e| p.alpha += e);
            for i in 0..args.t {
                check(grad.beta[i], &|p, e| p.beta[i] += e);
                check(grad.gamma[i], &|p, e| p.gamma[i] += e);
            }

            audited += 1 + 2 * args.t;
            audited_instances += 1;
            worst = worst.max(instance_worst);
            println!(
                "instance {instance}: max relative error {instance_worst:.3e} over {} coordinates",
                1 + 2 * args.t
            );
            continue 'instances;
        }
        eprintln!("instance {instance}: skipped, every draw landed near a hinge");
    }

    if audited_instances == 0 {
        return Err("no instance survived the hinge filter; try another seed".into());
    }
    println!(
        "audited {audited} coordinates, max relative error {worst:.3e} (tolerance {:.1e})",
        args.tol
    );
    if worst <= args.tol {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("gradient audit failed");
        Ok(ExitCode::FAILURE)
    }
}

fn parse_decoders(text: &str) -> Result<Vec<DecoderKind>, Box<dyn Error>> {
    text.split(',')
        .map(|s| s.trim().parse::<DecoderKind>().map_err(Into::into))
        .collect()
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>, Box<dyn Error>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid count `{s}`").into())
        })
        .collect()
}

/// "a:b:step" expands to the inclusive range; otherwise a comma list.
fn parse_snr_spec(text: &str) -> Result<Vec<f64>, Box<dyn Error>> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got `{text}`").into());
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| format!("invalid start `{}`", parts[0]))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| format!("invalid stop `{}`", parts[1]))?;
        let step: f64 = parts[2]
            .parse()
            .map_err(|_| format!("invalid step `{}`", parts[2]))?;
        if step <= 0.0 || !step.is_finite() || !start.is_finite() || !stop.is_finite() {
            return Err("step must be positive and endpoints finite".into());
        }
        if stop < start {
            return Err("stop must not be below start".into());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("invalid SNR `{s}`").into())
            })
            .collect()
    }
}

/// Integer count, also accepted in float notation like "1e7".
fn parse_count(text: &str) -> Result<u64, Box<dyn Error>> {
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| format!("invalid count `{text}`"))?;
    if !v.is_finite() || v < 1.0 || v > 2f64.powi(63) {
        return Err(format!("count `{text}` out of range").into());
    }
    Ok(v as u64)
}
