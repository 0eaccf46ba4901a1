//! Monte-Carlo benchmarking: BER/WER sweeps and iteration counts.
//!
//! Every transmitted word gets its own random streams, derived from the
//! sweep seed, the SNR point index, the word index, and a purpose tag
//! (codeword, noise, decoder restarts). Two consequences:
//!
//! - runs are reproducible and independent of the worker count, since words
//!   are simulated in deterministic order and reduced in that order;
//! - decoders and restart budgets see matched channels: the same seed sends
//!   the same words through the same noise whether they are decoded by BP
//!   or by the projected gradient decoder at any `r_max`, and a larger
//!   `r_max` replays the smaller budget's restart sequence as a prefix.
//!
//! A sweep point stops at `min_errors` accumulated bit errors or at
//! `max_words` transmitted words, whichever comes first, checked at batch
//! boundaries so the stopping decision is itself deterministic.

use crate::bp::{bp_decode, BpConfig};
use crate::channel::{modulate, transmit, ChannelConfig, ChannelError, LlrMode};
use crate::code::{CodeError, GeneratorMatrix, ParityCheckMatrix};
use crate::decoder::{DecodeConfig, DecodeError, ParamsFile, TpgDecoder, TpgParams};
use crate::polytope::{ConstraintIndex, PolytopeError, PolytopeMatrices};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("code file {path}: {source}")]
    Code {
        path: String,
        #[source]
        source: CodeError,
    },
    #[error("parameter file {path}: {source}")]
    Params {
        path: String,
        #[source]
        source: DecodeError,
    },
    #[error("parameters trained for `{params_id}` do not fit code `{code_id}`")]
    ParamsMismatch { params_id: String, code_id: String },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error("results line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---- loaded code bundle ----

/// Everything needed to benchmark one code: the matrix, a codeword sampler,
/// and the constraint operators.
pub struct CodeContext {
    pub h: ParityCheckMatrix,
    pub generator: GeneratorMatrix,
    pub index: ConstraintIndex,
    pub mats: PolytopeMatrices,
    pub code_id: String,
}

impl CodeContext {
    pub fn from_matrix(
        h: ParityCheckMatrix,
        code_id: impl Into<String>,
    ) -> Result<Self, HarnessError> {
        let index = ConstraintIndex::build(&h)?;
        let mats = PolytopeMatrices::build(&h, &index);
        let generator = GeneratorMatrix::from_parity_check(&h);
        Ok(Self {
            h,
            generator,
            index,
            mats,
            code_id: code_id.into(),
        })
    }

    /// Loads an alist file. The code id is `n{n}-m{m}-{file stem}`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let h = ParityCheckMatrix::parse_alist(&text).map_err(|source| HarnessError::Code {
            path: path.display().to_string(),
            source,
        })?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "code".to_string());
        let code_id = format!("n{}-m{}-{stem}", h.n(), h.m());
        Self::from_matrix(h, code_id)
    }

    /// Rejects parameters whose id names a different code size. Ids that do
    /// not follow the `n{n}-m{m}-...` shape are accepted as foreign.
    pub fn check_params_fit(&self, file: &ParamsFile) -> Result<(), HarnessError> {
        if let Some((n, m)) = parse_code_id_dims(&file.code_id) {
            if n != self.h.n() || m != self.h.m() {
                return Err(HarnessError::ParamsMismatch {
                    params_id: file.code_id.clone(),
                    code_id: self.code_id.clone(),
                });
            }
        }
        Ok(())
    }
}

fn parse_code_id_dims(id: &str) -> Option<(usize, usize)> {
    let rest = id.strip_prefix('n')?;
    let (n, rest) = rest.split_once("-m")?;
    let m_end = rest.find('-').unwrap_or(rest.len());
    Some((n.parse().ok()?, rest[..m_end].parse().ok()?))
}

// ---- sweep configuration ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Tpg,
    Bp,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Tpg => "tpg",
            Self::Bp => "bp",
        })
    }
}

impl FromStr for DecoderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tpg" => Ok(Self::Tpg),
            "bp" => Ok(Self::Bp),
            other => Err(format!("unknown decoder `{other}` (expected tpg or bp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodewordMode {
    /// Uniform random codewords, fresh per word index.
    Random,
    /// The all-zero word; the usual shortcut for linear codes under BPSK.
    Zero,
}

impl FromStr for CodewordMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "zero" => Ok(Self::Zero),
            other => Err(format!("unknown codeword mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The bit-error target was reached.
    MinErrors,
    /// The word budget ran out first.
    MaxWords,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub code_path: PathBuf,
    /// Required when `decoders` includes the projected gradient decoder.
    pub params_path: Option<PathBuf>,
    pub decoders: Vec<DecoderKind>,
    pub snr_points: Vec<f64>,
    /// Restart budgets benchmarked for the projected gradient decoder.
    pub r_max_list: Vec<usize>,
    /// Bit errors per point after which the point stops.
    pub min_errors: u64,
    /// Hard cap on transmitted words per point.
    pub max_words: u64,
    pub seed: u64,
    pub codeword_mode: CodewordMode,
    /// Evaluate with this many inner iterations, extending or truncating
    /// the trained schedule.
    pub eval_t_max: Option<usize>,
    pub best_of_restarts: bool,
    pub bp_max_iter: usize,
    pub bp_llr: LlrMode,
}

impl SweepConfig {
    pub fn new(code_path: impl Into<PathBuf>) -> Self {
        Self {
            code_path: code_path.into(),
            params_path: None,
            decoders: vec![DecoderKind::Tpg],
            snr_points: Vec::new(),
            r_max_list: vec![1],
            min_errors: 100,
            max_words: 1_000_000,
            seed: 0,
            codeword_mode: CodewordMode::Random,
            eval_t_max: None,
            best_of_restarts: false,
            bp_max_iter: 100,
            bp_llr: LlrMode::SigmaSquared,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.decoders.is_empty() {
            return Err(HarnessError::Config("no decoders selected".into()));
        }
        if self.snr_points.is_empty() {
            return Err(HarnessError::Config("no SNR points given".into()));
        }
        if !self.snr_points.iter().all(|v| v.is_finite()) {
            return Err(HarnessError::Config("non-finite SNR point".into()));
        }
        if self.decoders.contains(&DecoderKind::Tpg) {
            if self.r_max_list.is_empty() {
                return Err(HarnessError::Config("empty r_max list".into()));
            }
            if self.r_max_list.contains(&0) {
                return Err(HarnessError::Config("r_max must be at least 1".into()));
            }
        }
        if self.max_words == 0 {
            return Err(HarnessError::Config("max_words must be at least 1".into()));
        }
        if self.bp_max_iter == 0 {
            return Err(HarnessError::Config(
                "bp_max_iter must be at least 1".into(),
            ));
        }
        if let Some(t) = self.eval_t_max {
            if t == 0 {
                return Err(HarnessError::Config("eval_t_max must be at least 1".into()));
            }
        }
        Ok(())
    }
}

// ---- results ----

/// One sweep point. `r_max` is absent for the BP baseline; `avg_iter` is
/// the mean of inner iterations (summed over restarts for the projected
/// gradient decoder) per transmitted word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub decoder: String,
    pub snr_db: f64,
    pub r_max: Option<usize>,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub words_sent: u64,
    pub word_errors: u64,
    pub avg_iter: f64,
    /// Why the point stopped; not part of the CSV columns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopReason>,
}

pub const CSV_HEADER: &str =
    "decoder,snr_db,r_max,bits_sent,bit_errors,ber,words_sent,word_errors,avg_iter";

pub fn render_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let r_max = r.r_max.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.decoder,
            r.snr_db,
            r_max,
            r.bits_sent,
            r.bit_errors,
            r.ber,
            r.words_sent,
            r.word_errors,
            r.avg_iter
        ));
    }
    out
}

pub fn render_jsonl(records: &[BerRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Parses [`render_csv`] output. The stop reason is not stored in CSV, so
/// parsed records carry `stop: None`.
pub fn parse_csv(text: &str) -> Result<Vec<BerRecord>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(HarnessError::Csv {
                line: 1,
                msg: format!("unexpected header `{header}`"),
            })
        }
        None => {
            return Err(HarnessError::Csv {
                line: 1,
                msg: "empty input".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(HarnessError::Csv {
                line: lineno,
                msg: format!("expected 9 fields, found {}", fields.len()),
            });
        }
        let err = |what: &str| HarnessError::Csv {
            line: lineno,
            msg: format!("invalid {what}"),
        };
        records.push(BerRecord {
            decoder: fields[0].to_string(),
            snr_db: fields[1].parse().map_err(|_| err("snr_db"))?,
            r_max: if fields[2].is_empty() {
                None
            } else {
                Some(fields[2].parse().map_err(|_| err("r_max"))?)
            },
            bits_sent: fields[3].parse().map_err(|_| err("bits_sent"))?,
            bit_errors: fields[4].parse().map_err(|_| err("bit_errors"))?,
            ber: fields[5].parse().map_err(|_| err("ber"))?,
            words_sent: fields[6].parse().map_err(|_| err("words_sent"))?,
            word_errors: fields[7].parse().map_err(|_| err("word_errors"))?,
            avg_iter: fields[8].parse().map_err(|_| err("avg_iter"))?,
            stop: None,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

pub fn emit_results(
    records: &[BerRecord],
    format: OutputFormat,
    path: impl AsRef<Path>,
) -> Result<(), HarnessError> {
    let text = match format {
        OutputFormat::Csv => render_csv(records),
        OutputFormat::Jsonl => render_jsonl(records),
    };
    Ok(std::fs::write(path, text)?)
}

// ---- per-word random streams ----

/// What a per-word stream is consumed for. Each purpose gets its own
/// stream so drawing more decoder randomness (say, a larger restart
/// budget) never shifts the codeword or the noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Codeword,
    Noise,
    Decoder,
}

impl StreamTag {
    fn bits(self) -> u64 {
        match self {
            Self::Codeword => 1,
            Self::Noise => 2,
            Self::Decoder => 3,
        }
    }
}

/// Independent ChaCha stream for one (SNR point, word, purpose) triple.
/// The stream id packs the word index (low 48 bits), the SNR point index,
/// and the tag, so streams never collide within a sweep. This is the
/// derivation the sweep engine uses, exposed so a single word from a run
/// can be replayed exactly.
pub fn word_stream(seed: u64, snr_index: usize, word: u64, tag: StreamTag) -> ChaCha8Rng {
    debug_assert!(word < 1 << 48);
    debug_assert!((snr_index as u64) < 1 << 12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(word | (snr_index as u64) << 48 | tag.bits() << 60);
    rng
}

// ---- the sweep engine ----

struct WordOutcome {
    bit_errors: u64,
    word_error: bool,
    iterations: u64,
}

struct PointRunner<'a> {
    ctx: &'a CodeContext,
    channel: ChannelConfig,
    decoder: PointDecoder<'a>,
    snr_index: usize,
    seed: u64,
    codeword_mode: CodewordMode,
}

enum PointDecoder<'a> {
    Tpg {
        decoder: TpgDecoder<'a>,
        config: DecodeConfig,
    },
    Bp {
        config: BpConfig,
        llr_mode: LlrMode,
    },
}

impl PointRunner<'_> {
    fn simulate_word(&self, word: u64) -> WordOutcome {
        let n = self.ctx.h.n();
        let codeword = match self.codeword_mode {
            CodewordMode::Random => {
                let mut rng = word_stream(self.seed, self.snr_index, word, StreamTag::Codeword);
                self.ctx.generator.random_codeword(&mut rng).bits
            }
            CodewordMode::Zero => vec![0u8; n],
        };
        let mut noise_rng = word_stream(self.seed, self.snr_index, word, StreamTag::Noise);
        let output = transmit(&modulate(&codeword), &self.channel, &mut noise_rng);

        let result = match &self.decoder {
            PointDecoder::Tpg { decoder, config } => {
                let mut rng = word_stream(self.seed, self.snr_index, word, StreamTag::Decoder);
                decoder.decode(&output.received, config, &mut rng)
            }
            PointDecoder::Bp { config, llr_mode } => {
                bp_decode(&output.llr_with(*llr_mode), &self.ctx.h, config)
            }
        };

        let bit_errors = result
            .estimate
            .iter()
            .zip(&codeword)
            .filter(|(a, b)| a != b)
            .count() as u64;
        WordOutcome {
            bit_errors,
            word_error: bit_errors > 0,
            iterations: result.inner_iterations_total as u64,
        }
    }
}

const BATCH_WORDS: u64 = 256;

fn run_point(
    runner: &PointRunner<'_>,
    decoder_name: &str,
    snr_db: f64,
    r_max: Option<usize>,
    min_errors: u64,
    max_words: u64,
) -> BerRecord {
    let n = runner.ctx.h.n() as u64;
    let mut words_sent = 0u64;
    let mut bit_errors = 0u64;
    let mut word_errors = 0u64;
    let mut iterations = 0u64;
    let stop;
    loop {
        let batch = BATCH_WORDS.min(max_words - words_sent);
        let outcomes: Vec<WordOutcome> = (words_sent..words_sent + batch)
            .into_par_iter()
            .map(|w| runner.simulate_word(w))
            .collect();
        for o in &outcomes {
            bit_errors += o.bit_errors;
            word_errors += u64::from(o.word_error);
            iterations += o.iterations;
        }
        words_sent += batch;
        if bit_errors >= min_errors {
            stop = StopReason::MinErrors;
            break;
        }
        if words_sent >= max_words {
            stop = StopReason::MaxWords;
            break;
        }
    }
    let bits_sent = words_sent * n;
    BerRecord {
        decoder: decoder_name.to_string(),
        snr_db,
        r_max,
        bits_sent,
        bit_errors,
        ber: bit_errors as f64 / bits_sent as f64,
        words_sent,
        word_errors,
        avg_iter: iterations as f64 / words_sent as f64,
        stop: Some(stop),
    }
}

/// Runs a sweep over an already loaded code. `params` is required when the
/// config selects the projected gradient decoder; the schedule is extended
/// or truncated to `eval_t_max` if one is set.
pub fn run_sweep_on(
    ctx: &CodeContext,
    params: Option<&TpgParams>,
    cfg: &SweepConfig,
) -> Result<Vec<BerRecord>, HarnessError> {
    cfg.validate()?;
    let tpg_params = if cfg.decoders.contains(&DecoderKind::Tpg) {
        let p = params.ok_or_else(|| {
            HarnessError::Config(
                "projected gradient decoder selected but no parameters given".into(),
            )
        })?;
        let p = match cfg.eval_t_max {
            Some(t) => p.extended(t),
            None => p.clone(),
        };
        p.validate()?;
        Some(p)
    } else {
        None
    };

    let mut records = Vec::new();
    for kind in &cfg.decoders {
        match kind {
            DecoderKind::Tpg => {
                let p = tpg_params.as_ref().expect("validated above");
                for &r_max in &cfg.r_max_list {
                    for (snr_index, &snr_db) in cfg.snr_points.iter().enumerate() {
                        let runner = PointRunner {
                            ctx,
                            channel: ChannelConfig::new(snr_db, ctx.h.design_rate())?,
                            decoder: PointDecoder::Tpg {
                                decoder: TpgDecoder::new(&ctx.h, &ctx.mats, p.clone())?,
                                config: DecodeConfig {
                                    r_max,
                                    best_of_restarts: cfg.best_of_restarts,
                                    capture_trajectory: false,
                                },
                            },
                            snr_index,
                            seed: cfg.seed,
                            codeword_mode: cfg.codeword_mode,
                        };
                        records.push(run_point(
                            &runner,
                            "tpg",
                            snr_db,
                            Some(r_max),
                            cfg.min_errors,
                            cfg.max_words,
                        ));
                    }
                }
            }
            DecoderKind::Bp => {
                for (snr_index, &snr_db) in cfg.snr_points.iter().enumerate() {
                    let runner = PointRunner {
                        ctx,
                        channel: ChannelConfig::new(snr_db, ctx.h.design_rate())?,
                        decoder: PointDecoder::Bp {
                            config: BpConfig {
                                max_iter: cfg.bp_max_iter,
                                early_exit: true,
                            },
                            llr_mode: cfg.bp_llr,
                        },
                        snr_index,
                        seed: cfg.seed,
                        codeword_mode: cfg.codeword_mode,
                    };
                    records.push(run_point(
                        &runner,
                        "bp",
                        snr_db,
                        None,
                        cfg.min_errors,
                        cfg.max_words,
                    ));
                }
            }
        }
    }
    Ok(records)
}

/// Loads the code (and parameters, when needed) from the configured paths
/// and runs the sweep.
pub fn run_ber_sweep(cfg: &SweepConfig) -> Result<Vec<BerRecord>, HarnessError> {
    cfg.validate()?;
    let ctx = CodeContext::load(&cfg.code_path)?;
    let params = load_params_if_needed(&ctx, cfg)?;
    run_sweep_on(&ctx, params.as_ref(), cfg)
}

/// Same engine as [`run_ber_sweep`], but every point runs exactly
/// `max_words` words: the error cutoff is disabled so the iteration
/// averages come from a fixed sample size.
pub fn run_avg_iterations(cfg: &SweepConfig) -> Result<Vec<BerRecord>, HarnessError> {
    let fixed = SweepConfig {
        min_errors: u64::MAX,
        ..cfg.clone()
    };
    run_ber_sweep(&fixed)
}

fn load_params_if_needed(
    ctx: &CodeContext,
    cfg: &SweepConfig,
) -> Result<Option<TpgParams>, HarnessError> {
    if !cfg.decoders.contains(&DecoderKind::Tpg) {
        return Ok(None);
    }
    let path = cfg.params_path.as_ref().ok_or_else(|| {
        HarnessError::Config("projected gradient decoder selected but no --params file".into())
    })?;
    let file = ParamsFile::load(path).map_err(|source| HarnessError::Params {
        path: path.display().to_string(),
        source,
    })?;
    ctx.check_params_fit(&file)?;
    Ok(Some(file.params()))
}
