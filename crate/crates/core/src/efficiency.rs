//! Closed-form generation efficiency.
//!
//! The efficiency `η` is the probability that exactly one photon leaves the
//! source in an output period `NT`. It is the sum over bins of `B(r)`, the
//! probability that bin `r` is the selected heralded bin and exactly one of
//! its signal photons survives the chip:
//!
//! ```text
//! B(r) = D0^k · Σ_i H_i · F(r, i)        k = r-1 (first photon) or N-r (last photon)
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Detection, PairDistribution, SchemeConfig, Selection, SourceParams, Topology};

/// Terms of the heralding series below this are dropped.
pub const SERIES_CUTOFF: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyBreakdown {
    pub eta_total: f64,
    /// `B(r)` for `r = 1..=N`, stored at index `r - 1`.
    pub per_bin_success: Vec<f64>,
    /// `[PIC]^(r)` for `r = 1..=N`, stored at index `r - 1`.
    pub pic_transmission: Vec<f64>,
    pub d0: f64,
    /// Effective detection efficiency of the heralding unit.
    pub eta_d: f64,
    /// `H_i` indexed by `i`, starting at `H_0 = 0` and ending at the truncation point.
    pub heralded_series: Vec<f64>,
}

/// Efficiency of the heralding unit as seen by one idler photon.
pub fn detection_efficiency(params: &SourceParams, detection: Detection) -> f64 {
    match detection {
        Detection::SingleDetector => params.eta_conv * params.eta_det_single,
        Detection::DetectorArray => {
            let g = &params.array;
            let routing = (g.short_paths as f64 * params.eta_sw.powi(g.short_path_switches as i32)
                + g.long_paths as f64 * params.eta_sw.powi(g.long_path_switches as i32))
                / g.array_size as f64;
            params.eta_conv
                * params.eta_det_array
                * routing
                * params.eta_c
                * params.eta_c
                * g.blanking
        }
    }
}

/// Probability that no idler is detected in a bin, times the filter efficiency.
pub fn d0(params: &SourceParams, eta_d: f64) -> f64 {
    let no_click = match params.pair_dist {
        PairDistribution::Poisson => (-params.lambda * eta_d).exp(),
        PairDistribution::ThermalApprox => {
            let miss = 1.0 - eta_d;
            params
                .pair_dist
                .pmf_table(params.lambda)
                .iter()
                .enumerate()
                .map(|(i, p)| p * miss.powi(i as i32))
                .sum()
        }
    };
    if params.conventions.omit_filter_in_d0 {
        no_click
    } else {
        params.eta_f * no_click
    }
}

/// Probability that `i` pairs are generated and at least one idler is detected.
pub fn h_i(params: &SourceParams, eta_d: f64, i: usize) -> f64 {
    let pmf = params.pair_dist.pmf_table(params.lambda);
    match pmf.get(i) {
        Some(p) => p * (1.0 - (1.0 - eta_d).powi(i as i32)),
        None => 0.0,
    }
}

/// Heralding series `H_0, H_1, ...` truncated once the terms become negligible.
fn heralded_series(params: &SourceParams, eta_d: f64) -> Vec<f64> {
    let pmf = params.pair_dist.pmf_table(params.lambda);
    let miss = 1.0 - eta_d;
    let mut series = vec![0.0];
    for (i, p) in pmf.iter().enumerate().skip(1) {
        let h = p * (1.0 - miss.powi(i as i32));
        series.push(h);
        if h < SERIES_CUTOFF && i as f64 > params.lambda {
            break;
        }
    }
    series
}

/// Probability that exactly one of `i` signal photons survives a chip of transmission `pic`.
pub fn f_loss(i: usize, pic: f64) -> Result<f64> {
    if i == 0 {
        return Err(Error::domain("F(r, i) needs i >= 1 photons"));
    }
    if !(0.0..=1.0).contains(&pic) {
        return Err(Error::domain(format!("transmission {pic} is not in [0, 1]")));
    }
    Ok(one_survivor(i, pic))
}

fn one_survivor(i: usize, pic: f64) -> f64 {
    i as f64 * (1.0 - pic).powi(i as i32 - 1) * pic
}

/// Number of switch passes for a photon heralded in bin `r`.
pub fn switch_passes(scheme: &SchemeConfig, r: usize) -> u32 {
    match scheme.topology {
        Topology::BinaryDelay => scheme.n_bins.ilog2() + 1,
        Topology::SingleDelayLine => (scheme.n_bins - r) as u32,
    }
}

/// Transmission of `delay_bins` bins of on-chip delay line.
pub fn delay_line_transmission(params: &SourceParams, delay_bins: usize) -> f64 {
    let exponent = params.alpha_inc * delay_bins as f64;
    if params.conventions.strict_eq6 {
        10f64.powf(-exponent)
    } else {
        10f64.powf(-exponent / 10.0)
    }
}

fn check_bin(scheme: &SchemeConfig, r: usize) -> Result<()> {
    if r == 0 || r > scheme.n_bins {
        return Err(Error::domain(format!(
            "bin {r} is outside 1..={}",
            scheme.n_bins
        )));
    }
    Ok(())
}

/// End-to-end chip transmission for a photon heralded in bin `r` (1-based).
pub fn pic_transmission(params: &SourceParams, scheme: &SchemeConfig, r: usize) -> Result<f64> {
    check_bin(scheme, r)?;
    Ok(pic_unchecked(params, scheme, r))
}

fn pic_unchecked(params: &SourceParams, scheme: &SchemeConfig, r: usize) -> f64 {
    params.eta_f
        * params.eta_c
        * params.eta_sw.powi(switch_passes(scheme, r) as i32)
        * delay_line_transmission(params, scheme.n_bins - r)
}

fn d0_exponent(scheme: &SchemeConfig, r: usize) -> i32 {
    match scheme.selection {
        Selection::FirstPhoton => (r - 1) as i32,
        Selection::LastPhoton => (scheme.n_bins - r) as i32,
    }
}

fn success_given_series(series: &[f64], pic: f64) -> f64 {
    series
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, h)| h * one_survivor(i, pic))
        .sum()
}

/// Probability that the emitted photon comes from bin `r` (1-based).
pub fn bin_success(params: &SourceParams, scheme: &SchemeConfig, r: usize) -> Result<f64> {
    params.validate()?;
    check_bin(scheme, r)?;
    let eta_d = detection_efficiency(params, scheme.detection);
    let series = heralded_series(params, eta_d);
    let pic = pic_unchecked(params, scheme, r);
    Ok(d0(params, eta_d).powi(d0_exponent(scheme, r)) * success_given_series(&series, pic))
}

pub fn total_efficiency(params: &SourceParams, scheme: &SchemeConfig) -> Result<EfficiencyBreakdown> {
    params.validate()?;
    scheme.validate()?;
    let eta_d = detection_efficiency(params, scheme.detection);
    let d0 = d0(params, eta_d);
    let series = heralded_series(params, eta_d);
    let pic: Vec<f64> = (1..=scheme.n_bins)
        .map(|r| pic_unchecked(params, scheme, r))
        .collect();
    let per_bin: Vec<f64> = pic
        .iter()
        .enumerate()
        .map(|(idx, &p)| d0.powi(d0_exponent(scheme, idx + 1)) * success_given_series(&series, p))
        .collect();
    Ok(EfficiencyBreakdown {
        eta_total: per_bin.iter().sum(),
        per_bin_success: per_bin,
        pic_transmission: pic,
        d0,
        eta_d,
        heralded_series: series,
    })
}

/// Expected number of occupied bins, `⌈λN⌉`.
///
/// Products such as `0.1 * 30` land a few ulps above the integer; those are
/// treated as exact before taking the ceiling.
pub fn occupied_bins(lambda: f64, n_bins: usize) -> usize {
    let x = lambda * n_bins as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Weights `w_p = C(p-1, n̄-1) / C(N, n̄)` for `p = 1..=N`.
///
/// `w_p` is the probability that the latest of `n̄` distinct, uniformly
/// placed occupied bins is bin `p`. Built downward from `w_N = n̄/N` so large
/// frames neither overflow nor lose the normalization.
pub fn order_statistic_weights(n_bins: usize, occupied: usize) -> Result<Vec<f64>> {
    if occupied == 0 || occupied > n_bins {
        return Err(Error::domain(format!(
            "{occupied} occupied bins do not fit in 1..={n_bins}"
        )));
    }
    let mut w = vec![0.0; n_bins];
    w[n_bins - 1] = occupied as f64 / n_bins as f64;
    for p in (occupied + 1..=n_bins).rev() {
        w[p - 2] = w[p - 1] * (p - occupied) as f64 / (p - 1) as f64;
    }
    let norm: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / norm).collect())
}

/// Mean delay-line transmission of the selected photon.
///
/// Last-photon selection weights bin `p` by the order statistic of
/// `⌈λN⌉` occupied bins. First-photon selection gives the control curve,
/// where the selected bin is uniform over the frame.
pub fn avg_linear_transmission(
    params: &SourceParams,
    n_bins: usize,
    selection: Selection,
    lambda: f64,
) -> Result<f64> {
    params.validate()?;
    if n_bins == 0 {
        return Err(Error::domain("n_bins must be >= 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::domain(format!("lambda = {lambda} must be > 0")));
    }
    let occupied = occupied_bins(lambda, n_bins);
    if occupied > n_bins {
        return Err(Error::domain(format!(
            "⌈λN⌉ = {occupied} exceeds N = {n_bins}; λ > 1 is not modeled"
        )));
    }
    let occupied = match selection {
        Selection::LastPhoton => occupied,
        Selection::FirstPhoton => 1,
    };
    let weights = order_statistic_weights(n_bins, occupied)?;
    Ok(weights
        .iter()
        .enumerate()
        .map(|(idx, w)| w * decibel_transmission(params.alpha_inc, n_bins - (idx + 1)))
        .sum())
}

/// `10^(-α d / 10)`, independent of the strict-exponent switch.
pub(crate) fn decibel_transmission(alpha_inc: f64, delay_bins: usize) -> f64 {
    10f64.powf(-alpha_inc * delay_bins as f64 / 10.0)
}

/// Output rate `1 / (N T)` in Hz.
pub fn generation_rate(params: &SourceParams, scheme: &SchemeConfig) -> f64 {
    1.0 / (scheme.n_bins as f64 * params.period)
}
