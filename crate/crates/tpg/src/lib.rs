//! Trainable projected gradient decoding of binary LDPC codes.
//!
//! The decoder treats decoding as constrained optimization: starting from a
//! random point in the unit hypercube, it alternates a gradient step on a
//! penalized correlation objective with a soft projection back toward the
//! cube, restarting from a fresh random point when an attempt fails. The
//! penalty measures the violation of the odd-subset parity inequalities, and
//! the step sizes, penalty weights, and projection sharpness are learned
//! offline by unrolling the iteration and backpropagating through it.
//!
//! Module map:
//!
//! - [`code`]: parity-check matrices, alist files, codeword sampling;
//! - [`polytope`]: odd-subset constraint enumeration and the sparse
//!   operators behind the penalty and its gradient;
//! - [`channel`]: BPSK over AWGN, SNR bookkeeping, LLR computation;
//! - [`decoder`]: the restarting projected gradient decoder;
//! - [`trainer`]: unrolled backpropagation and incremental Adam training
//!   of the decoder parameters;
//! - [`bp`]: a flooding sum-product baseline;
//! - [`harness`]: reproducible Monte-Carlo BER sweeps and iteration counts.
//!
//! ```
//! use tpg::{ParityCheckMatrix, PolytopeMatrices, TpgDecoder, TpgParams, DecodeConfig};
//! use rand::SeedableRng;
//!
//! let alist = "6 3\n2 3\n1 1 2 2 1 1\n3 2 3\n1\n1\n1 2\n2 3\n3\n3\n1 2 3\n3 4\n4 5 6\n";
//! let h = ParityCheckMatrix::parse_alist(alist)?;
//! let mats = PolytopeMatrices::from_parity_check(&h)?;
//! let decoder = TpgDecoder::new(&h, &mats, TpgParams::constant(8.0, 1.0, 0.5, 30))?;
//!
//! let received = [0.9, -1.1, -0.8, -1.2, -0.9, 1.0]; // codeword 011110, lightly noisy
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let result = decoder.decode(&received, &DecodeConfig::default(), &mut rng);
//! assert!(result.converged);
//! assert_eq!(result.estimate, vec![0, 1, 1, 1, 1, 0]);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bp;
pub mod channel;
pub mod code;
pub mod decoder;
pub mod harness;
pub mod polytope;
pub mod trainer;

pub use bp::{bp_decode, BpConfig};
pub use channel::{modulate, snr_to_sigma, transmit, ChannelConfig, ChannelOutput, LlrMode};
pub use code::{Codeword, GeneratorMatrix, ParityCheckMatrix};
pub use decoder::{
    gradient_step, projection_step, threshold, DecodeConfig, DecodeResult, ParamsFile, TpgDecoder,
    TpgParams,
};
pub use harness::{
    run_avg_iterations, run_ber_sweep, run_sweep_on, word_stream, BerRecord, CodeContext,
    CodewordMode, DecoderKind, StreamTag, SweepConfig,
};
pub use polytope::{odd_subsets, ConstraintIndex, PolytopeMatrices};
pub use trainer::{incremental_train, AdamState, MiniBatch, Tape, TrainConfig, TrainOutcome};
