//! BPSK over AWGN Monte Carlo simulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{sliding_window_decode, BpDecoder, DecoderConfig};
use crate::error::{Error, Result};
use crate::lift::{LiftSpec, SparseBinaryMatrix};
use crate::oracle::{nullspace_basis, BitVec};
use crate::rng::{derive_key, stream_rng, CounterNormal};
use crate::unwrap::Unwrapping;

/// Noise variance for a given `Eb/N0` in dB at code rate `rate`.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))
}

/// Channel LLRs for `bits` sent as `0 -> +1`, `1 -> -1`.
///
/// Sample `i` of the noise stream keyed by `key` perturbs position `i`;
/// punctured positions get LLR 0.
pub fn awgn_llr(bits: &[u8], punctured: &[bool], ebn0_db: f64, rate: f64, key: u64) -> Result<Vec<f64>> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidArgument(format!("rate {rate} outside (0, 1)")));
    }
    if punctured.len() != bits.len() {
        return Err(Error::DimensionMismatch {
            expected: bits.len(),
            got: punctured.len(),
        });
    }
    let var = noise_variance(ebn0_db, rate);
    let sigma = var.sqrt();
    let noise = CounterNormal::new(key);
    Ok(bits
        .iter()
        .zip(punctured)
        .enumerate()
        .map(|(i, (&b, &p))| {
            if p {
                0.0
            } else {
                let x = if b == 0 { 1.0 } else { -1.0 };
                2.0 * (x + sigma * noise.sample(i as u64)) / var
            }
        })
        .collect())
}

/// What is simulated, as recorded in the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    pub protograph: String,
    /// `"block"`, `"tail_biting"` or `"convolutional"`.
    pub kind: String,
    pub lambda: usize,
    pub n: usize,
    pub expansion: Option<usize>,
    pub expansion_seed: u64,
    pub lift_seed: u64,
    pub lift_style: String,
    pub transmitted_bits_per_frame: usize,
    pub rate: f64,
    /// Block-columns per frame for the convolutional code.
    pub segment_periods: Option<usize>,
}

/// A code ready for simulation.
#[derive(Debug, Clone)]
pub enum SimCode {
    /// Block or tail-biting code decoded as one word.
    Block {
        h: SparseBinaryMatrix,
        punctured: Vec<bool>,
    },
    /// Unterminated band decoded with the sliding window.
    Convolutional {
        u: Unwrapping,
        spec: LiftSpec,
        period: usize,
        segment_periods: usize,
    },
}

impl SimCode {
    fn punctured_mask(&self) -> Vec<bool> {
        match self {
            SimCode::Block { punctured, .. } => punctured.clone(),
            SimCode::Convolutional {
                u, spec, segment_periods, ..
            } => {
                let block: Vec<bool> = (0..u.n_v() * spec.n).map(|i| u.source().is_punctured(i / spec.n)).collect();
                block.repeat(*segment_periods)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub ebn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    /// Sum over frames of the squared per-frame bit error count.
    pub bit_error_sq: f64,
}

impl SnrRow {
    /// Normal-approximation 95% interval for the BER from per-frame counts.
    ///
    /// With no bit errors at all the upper end is the rule-of-three bound
    /// `3 / bits`, since the sample variance would be zero.
    pub fn ber_ci95(&self, bits_per_frame: usize) -> (f64, f64) {
        let n = self.frames as f64;
        let b = bits_per_frame as f64;
        if self.bit_errors == 0 {
            return (0.0, (3.0 / (n * b)).min(1.0));
        }
        let mean = self.bit_errors as f64 / n;
        let var = if self.frames > 1 {
            ((self.bit_error_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let half = 1.96 * (var / n).sqrt() / b;
        ((self.ber - half).max(0.0), (self.ber + half).min(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub code: CodeDescriptor,
    pub decoder: DecoderConfig,
    pub stop: StopRule,
    pub random_codewords: bool,
    pub rng_seed: u64,
    pub tool_version: String,
    pub rows: Vec<SnrRow>,
}

impl SimulationRecord {
    /// `ebn0_db,ber,fer,frames` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ebn0_db,ber,fer,frames\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:e},{}\n", r.ebn0_db, r.ber, r.fer, r.frames));
        }
        out
    }
}

/// Frames decoded per parallel batch. Results do not depend on it.
const BATCH: u64 = 32;

struct FrameOutcome {
    bit_errors: u64,
}

fn random_codeword(basis: &[BitVec], n: usize, key: u64) -> Vec<u8> {
    use rand::Rng;
    let mut rng = stream_rng(key, 0);
    let mut word = BitVec::zeros(n);
    for b in basis {
        if rng.gen::<bool>() {
            word.xor_assign(b);
        }
    }
    word.to_bits()
}

/// Monte Carlo BER/FER curve.
///
/// Frame `f` at SNR index `i` uses noise key `derive_key(seed, [i, f])`.
/// Frames are decoded in parallel batches and accumulated in frame order,
/// stopping exactly at the frame where the stop rule first holds, so the
/// record does not depend on the number of worker threads.
pub fn ber_curve(
    code: &SimCode,
    descriptor: CodeDescriptor,
    cfg: &DecoderConfig,
    snrs: &[f64],
    stop: StopRule,
    seed: u64,
    random_codewords: bool,
) -> Result<SimulationRecord> {
    cfg.validate()?;
    if stop.max_frames == 0 {
        return Err(Error::InvalidArgument("max_frames must be >= 1".into()));
    }
    let punctured = code.punctured_mask();
    let n = punctured.len();
    let rate = descriptor.rate;
    let mut snr_sorted: Vec<f64> = snrs.to_vec();
    snr_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let basis = match (code, random_codewords) {
        (SimCode::Block { h, .. }, true) => nullspace_basis(h),
        (SimCode::Convolutional { .. }, true) => {
            return Err(Error::InvalidArgument(
                "random codewords are only supported for block codes".into(),
            ))
        }
        _ => Vec::new(),
    };
    let decoder = match code {
        SimCode::Block { h, .. } => Some(BpDecoder::new(h)),
        _ => None,
    };
    // bits counted per frame
    let counted: Vec<bool> = match code {
        SimCode::Block { .. } => punctured.iter().map(|p| !p).collect(),
        SimCode::Convolutional { u, spec, segment_periods, .. } => {
            let w = u.n_v() * spec.n;
            let skip = cfg.window_periods;
            (0..n)
                .map(|i| {
                    let t = i / w;
                    !punctured[i] && t >= skip && t + skip < *segment_periods
                })
                .collect()
        }
    };
    let bits_per_frame = counted.iter().filter(|&&c| c).count();
    if bits_per_frame == 0 {
        return Err(Error::InvalidArgument("frame has no counted bits".into()));
    }
    let run_frame = |dec: &mut Option<BpDecoder>, snr_index: usize, ebn0: f64, frame: u64| -> Result<FrameOutcome> {
        let key = derive_key(seed, &[snr_index as u64, frame]);
        let bits = if random_codewords {
            random_codeword(&basis, n, derive_key(key, &[1]))
        } else {
            vec![0u8; n]
        };
        let llr = awgn_llr(&bits, &punctured, ebn0, rate, key)?;
        let hard = match code {
            SimCode::Block { .. } => dec.as_mut().expect("block decoder").decode(&llr, cfg)?.hard_decision,
            SimCode::Convolutional { u, spec, period, .. } => {
                let w = u.n_v() * spec.n;
                let stream: Vec<Vec<f64>> = llr.chunks(w).map(|c| c.to_vec()).collect();
                sliding_window_decode(u, spec, *period, &stream, cfg)?.concat()
            }
        };
        let bit_errors = (0..n).filter(|&i| counted[i] && hard[i] != bits[i]).count() as u64;
        Ok(FrameOutcome { bit_errors })
    };
    let mut rows = Vec::with_capacity(snr_sorted.len());
    for (si, &ebn0) in snr_sorted.iter().enumerate() {
        let mut row = SnrRow {
            ebn0_db: ebn0,
            frames: 0,
            bit_errors: 0,
            frame_errors: 0,
            ber: 0.0,
            fer: 0.0,
            bit_error_sq: 0.0,
        };
        let mut next = 0u64;
        'outer: while row.frames < stop.max_frames {
            let batch_end = (next + BATCH).min(stop.max_frames);
            let outcomes: Vec<Result<FrameOutcome>> = (next..batch_end)
                .into_par_iter()
                .map_init(|| decoder.clone(), |dec, f| run_frame(dec, si, ebn0, f))
                .collect();
            for o in outcomes {
                let o = o?;
                row.frames += 1;
                row.bit_errors += o.bit_errors;
                row.bit_error_sq += (o.bit_errors * o.bit_errors) as f64;
                if o.bit_errors > 0 {
                    row.frame_errors += 1;
                }
                if row.frame_errors >= stop.min_frame_errors || row.frames >= stop.max_frames {
                    break 'outer;
                }
            }
            next = batch_end;
        }
        row.ber = row.bit_errors as f64 / (row.frames as f64 * bits_per_frame as f64);
        row.fer = row.frame_errors as f64 / row.frames as f64;
        rows.push(row);
    }
    Ok(SimulationRecord {
        code: CodeDescriptor {
            transmitted_bits_per_frame: bits_per_frame,
            ..descriptor
        },
        decoder: cfg.clone(),
        stop,
        random_codewords,
        rng_seed: seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rows,
    })
}
