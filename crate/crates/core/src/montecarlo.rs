//! Frame-level Monte Carlo of the multiplexed source.
//!
//! Each frame samples a pair count per bin, detects every idler photon
//! independently, applies the herald selection and sends the signal photons of
//! the selected bin through the chip, each surviving on its own. Only the
//! selected bin is propagated; the decision switch dumps the rest.
//!
//! The filter factor that the closed form attaches to every non-heralding bin
//! in the selection window is drawn once per frame: with probability
//! `1 - η_f^k` the herald chain is broken and the frame yields nothing.
//!
//! Runs are split into fixed partitions of [`PARTITION_TRIALS`] frames. Partition
//! `p` draws from ChaCha8 seeded with the run seed on stream `p`, so results do
//! not depend on the number of worker threads.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::HeraldFrame;
use crate::efficiency::{
    decibel_transmission, detection_efficiency, occupied_bins, pic_transmission,
};
use crate::error::{Error, Result};
use crate::model::{SchemeConfig, Selection, SourceParams};

/// Name of the generator, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Frames per partition.
pub const PARTITION_TRIALS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Outcome {
    Vacuum,
    Single,
    Multi,
}

impl Outcome {
    fn from_survivors(n: u32) -> Self {
        match n {
            0 => Outcome::Vacuum,
            1 => Outcome::Single,
            _ => Outcome::Multi,
        }
    }
}

/// One simulated frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    /// Pairs generated in bin `r`, at index `r - 1`.
    pub pair_counts: Vec<u32>,
    pub herald_bits: HeraldFrame,
    /// Selected bin, 1-based.
    pub selected_bin: Option<usize>,
    /// Set when the filter factor of the heralding window broke the chain.
    pub herald_chain_blocked: bool,
    pub photons_surviving: u32,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub eta_hat: f64,
    pub std_err: f64,
    pub n_trials: u64,
    /// Frames whose single photon came from bin `r`, at index `r - 1`.
    pub per_bin_hist: Vec<u64>,
    pub single_count: u64,
    pub multi_count: u64,
    pub vacuum_count: u64,
    pub seed: u64,
    pub rng: &'static str,
}

impl EstimatorResult {
    /// Multi-photon frames as a fraction of frames that emitted anything.
    pub fn multi_fraction(&self) -> f64 {
        let emitted = self.single_count + self.multi_count;
        if emitted == 0 {
            0.0
        } else {
            self.multi_count as f64 / emitted as f64
        }
    }

    /// `per_bin_hist` divided by the number of trials, an estimate of `B(r)`.
    pub fn per_bin_fraction(&self) -> Vec<f64> {
        self.per_bin_hist
            .iter()
            .map(|&c| c as f64 / self.n_trials as f64)
            .collect()
    }
}

/// Binomial standard error of a fraction.
pub fn binomial_std_err(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Precomputed sampling tables for one parameter point.
#[derive(Debug, Clone)]
pub struct FrameSampler {
    n_bins: usize,
    selection: Selection,
    pair_cdf: Vec<f64>,
    eta_d: f64,
    pic: Vec<f64>,
    /// Probability that the herald chain survives the filter, per selected bin.
    chain_intact: Vec<f64>,
}

impl FrameSampler {
    pub fn new(params: &SourceParams, scheme: &SchemeConfig) -> Result<Self> {
        params.validate()?;
        scheme.validate()?;
        let n = scheme.n_bins;
        let pic = (1..=n)
            .map(|r| pic_transmission(params, scheme, r))
            .collect::<Result<Vec<_>>>()?;
        let eta_f = if params.conventions.omit_filter_in_d0 {
            1.0
        } else {
            params.eta_f
        };
        let chain_intact = (1..=n)
            .map(|r| {
                let k = match scheme.selection {
                    Selection::FirstPhoton => r - 1,
                    Selection::LastPhoton => n - r,
                };
                eta_f.powi(k as i32)
            })
            .collect();
        let sampler = FrameSampler {
            n_bins: n,
            selection: scheme.selection,
            pair_cdf: Vec::new(),
            eta_d: detection_efficiency(params, scheme.detection),
            pic,
            chain_intact,
        };
        Ok(sampler.with_pair_pmf(&params.pair_dist.pmf_table(params.lambda)))
    }

    /// Replaces the pair-number distribution, e.g. to force exactly one pair per bin.
    pub fn with_pair_pmf(mut self, pmf: &[f64]) -> Self {
        let mut acc = 0.0;
        self.pair_cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        self
    }

    fn sample_pairs<R: Rng>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        match self.pair_cdf.iter().position(|&c| u < c) {
            Some(i) => i as u32,
            None => (self.pair_cdf.len() - 1) as u32,
        }
    }

    fn idler_clicks<R: Rng>(&self, rng: &mut R, pairs: u32) -> bool {
        // every idler is tried so the stream consumption does not depend on early exit
        let mut hit = false;
        for _ in 0..pairs {
            hit |= rng.random::<f64>() < self.eta_d;
        }
        hit
    }

    /// Simulates one frame into `rec`, reusing its buffers.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, rec: &mut TrialRecord) {
        rec.pair_counts.clear();
        let mut bits = Vec::with_capacity(self.n_bins);
        for _ in 0..self.n_bins {
            let pairs = self.sample_pairs(rng);
            rec.pair_counts.push(pairs);
            bits.push(pairs > 0 && self.idler_clicks(rng, pairs));
        }
        let selected = match self.selection {
            Selection::FirstPhoton => bits.iter().position(|&b| b),
            Selection::LastPhoton => bits.iter().rposition(|&b| b),
        }
        .map(|i| i + 1);
        rec.herald_bits = HeraldFrame::new(bits);
        rec.selected_bin = selected;
        rec.herald_chain_blocked = false;
        rec.photons_surviving = 0;
        if let Some(r) = selected {
            let u: f64 = rng.random();
            if u < self.chain_intact[r - 1] {
                let pic = self.pic[r - 1];
                for _ in 0..rec.pair_counts[r - 1] {
                    if rng.random::<f64>() < pic {
                        rec.photons_surviving += 1;
                    }
                }
            } else {
                rec.herald_chain_blocked = true;
            }
        }
        rec.outcome = Outcome::from_survivors(rec.photons_surviving);
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> TrialRecord {
        let mut rec = TrialRecord {
            pair_counts: Vec::with_capacity(self.n_bins),
            herald_bits: HeraldFrame::empty(0),
            selected_bin: None,
            herald_chain_blocked: false,
            photons_surviving: 0,
            outcome: Outcome::Vacuum,
        };
        self.sample_into(rng, &mut rec);
        rec
    }
}

/// Generator for partition `stream` of a run seeded with `seed`.
pub fn partition_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates a single frame; identical seeds give identical records.
pub fn run_frame(params: &SourceParams, scheme: &SchemeConfig, rng_seed: u64) -> Result<TrialRecord> {
    let sampler = FrameSampler::new(params, scheme)?;
    Ok(sampler.sample(&mut partition_rng(rng_seed, 0)))
}

#[derive(Debug, Clone, Default)]
struct Tally {
    single: u64,
    multi: u64,
    per_bin: Vec<u64>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.single += other.single;
        self.multi += other.multi;
        if self.per_bin.is_empty() {
            self.per_bin = other.per_bin;
        } else {
            for (a, b) in self.per_bin.iter_mut().zip(other.per_bin) {
                *a += b;
            }
        }
        self
    }
}

fn partitions(n_trials: u64) -> impl ParallelIterator<Item = (u64, u64)> {
    let count = n_trials.div_ceil(PARTITION_TRIALS);
    (0..count).into_par_iter().map(move |p| {
        let start = p * PARTITION_TRIALS;
        (p, PARTITION_TRIALS.min(n_trials - start))
    })
}

/// Estimates `η` as the fraction of frames that emit exactly one photon.
pub fn estimate_eta(
    params: &SourceParams,
    scheme: &SchemeConfig,
    n_trials: u64,
    seed: u64,
) -> Result<EstimatorResult> {
    estimate_eta_with(&FrameSampler::new(params, scheme)?, n_trials, seed)
}

pub fn estimate_eta_with(sampler: &FrameSampler, n_trials: u64, seed: u64) -> Result<EstimatorResult> {
    if n_trials == 0 {
        return Err(Error::domain("n_trials must be >= 1"));
    }
    let n_bins = sampler.n_bins;
    let tally = partitions(n_trials)
        .map(|(stream, trials)| {
            let mut rng = partition_rng(seed, stream);
            let mut rec = sampler.sample(&mut rng);
            let mut t = Tally {
                per_bin: vec![0; n_bins],
                ..Tally::default()
            };
            for i in 0..trials {
                if i > 0 {
                    sampler.sample_into(&mut rng, &mut rec);
                }
                match rec.outcome {
                    Outcome::Single => {
                        t.single += 1;
                        if let Some(r) = rec.selected_bin {
                            t.per_bin[r - 1] += 1;
                        }
                    }
                    Outcome::Multi => t.multi += 1,
                    Outcome::Vacuum => {}
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    let eta_hat = tally.single as f64 / n_trials as f64;
    Ok(EstimatorResult {
        eta_hat,
        std_err: binomial_std_err(eta_hat, n_trials),
        n_trials,
        per_bin_hist: if tally.per_bin.is_empty() {
            vec![0; n_bins]
        } else {
            tally.per_bin
        },
        single_count: tally.single,
        multi_count: tally.multi,
        vacuum_count: n_trials - tally.single - tally.multi,
        seed,
        rng: RNG_ALGORITHM,
    })
}

/// How occupied bins are drawn when estimating the mean delay transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Occupancy {
    /// Exactly this many distinct bins, uniformly at random.
    Fixed(usize),
    /// Pair counts drawn per bin at the given `λ`; empty frames are redrawn.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AvgLinEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_trials: u64,
}

/// Mean delay transmission of the last occupied bin, with `⌈λN⌉` bins occupied.
pub fn estimate_avg_lin(
    params: &SourceParams,
    n_bins: usize,
    lambda: f64,
    n_trials: u64,
    seed: u64,
) -> Result<AvgLinEstimate> {
    let occupied = occupied_bins(lambda, n_bins);
    estimate_avg_lin_with(
        params,
        n_bins,
        lambda,
        Selection::LastPhoton,
        Occupancy::Fixed(occupied),
        n_trials,
        seed,
    )
}

pub fn estimate_avg_lin_with(
    params: &SourceParams,
    n_bins: usize,
    lambda: f64,
    selection: Selection,
    occupancy: Occupancy,
    n_trials: u64,
    seed: u64,
) -> Result<AvgLinEstimate> {
    params.validate()?;
    if n_bins == 0 || n_trials == 0 {
        return Err(Error::domain("n_bins and n_trials must be >= 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda = {lambda} must be > 0")));
    }
    if let Occupancy::Fixed(k) = occupancy {
        if k == 0 || k > n_bins {
            return Err(Error::domain(format!(
                "{k} occupied bins do not fit in 1..={n_bins}"
            )));
        }
    }
    let transmission: Vec<f64> = (1..=n_bins)
        .map(|p| decibel_transmission(params.alpha_inc, n_bins - p))
        .collect();
    let cdf: Vec<f64> = params
        .pair_dist
        .pmf_table(lambda)
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let draw_bin = |rng: &mut ChaCha8Rng| -> usize {
        match occupancy {
            Occupancy::Fixed(k) => {
                let picks = index::sample(rng, n_bins, k);
                let it = picks.iter();
                match selection {
                    Selection::LastPhoton => it.max(),
                    Selection::FirstPhoton => it.min(),
                }
                .expect("k >= 1")
                    + 1
            }
            Occupancy::Sampled => loop {
                let mut first = None;
                let mut last = None;
                for p in 1..=n_bins {
                    let u: f64 = rng.random();
                    if u >= cdf[0] {
                        first.get_or_insert(p);
                        last = Some(p);
                    }
                }
                let pick = match selection {
                    Selection::LastPhoton => last,
                    Selection::FirstPhoton => first,
                };
                if let Some(p) = pick {
                    break p;
                }
            },
        }
    };

    let (sum, sum_sq) = partitions(n_trials)
        .map(|(stream, trials)| {
            let mut rng = partition_rng(seed, stream);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..trials {
                let t = transmission[draw_bin(&mut rng) - 1];
                s += t;
                s2 += t * t;
            }
            (s, s2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = n_trials as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(AvgLinEstimate {
        mean,
        std_err: (var / n).sqrt(),
        n_trials,
    })
}
