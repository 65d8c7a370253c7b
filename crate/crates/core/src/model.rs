//! Physical parameters and photon-pair statistics.
//!
//! Every other module reads its inputs from [`SourceParams`] and
//! [`SchemeConfig`]. Both are plain values: construct, adjust with the
//! builder-style setters, then share freely between threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest pair number kept in any distribution series.
pub const MAX_PAIRS: usize = 200;

/// Speed of light in vacuum, m/s.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Pair-number statistics of one pumped time bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDistribution {
    /// `P(n) = e^-λ λ^n / n!`
    Poisson,
    /// `(n+1)(λ/2)^n e^-λ`, renormalized by its closed-form sum `e^-λ / (1-λ/2)^2`.
    ThermalApprox,
}

impl PairDistribution {
    /// Probability mass `P(n)` for all `n` in `0..=MAX_PAIRS`.
    pub fn pmf_table(self, lambda: f64) -> Vec<f64> {
        let mut table = Vec::with_capacity(MAX_PAIRS + 1);
        match self {
            PairDistribution::Poisson => {
                let mut p = (-lambda).exp();
                table.push(p);
                for n in 1..=MAX_PAIRS {
                    p *= lambda / n as f64;
                    table.push(p);
                }
            }
            PairDistribution::ThermalApprox => {
                let half = lambda / 2.0;
                let mut p = (1.0 - half) * (1.0 - half);
                table.push(p);
                for n in 1..=MAX_PAIRS {
                    p *= half * (n + 1) as f64 / n as f64;
                    table.push(p);
                }
            }
        }
        table
    }
}

/// Geometry of the heralding detector array.
///
/// The defaults describe 25 detectors (dead time / T), of which 7 are
/// reached through four switch passes and 18 through five, with one
/// detector in 25 blanked after firing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub array_size: u32,
    pub short_paths: u32,
    pub short_path_switches: u32,
    pub long_paths: u32,
    pub long_path_switches: u32,
    pub blanking: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry {
            array_size: 25,
            short_paths: 7,
            short_path_switches: 4,
            long_paths: 18,
            long_path_switches: 5,
            blanking: 24.0 / 25.0,
        }
    }
}

/// Switches between alternative readings of the loss formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conventions {
    /// Use `10^(-α_inc (N-r))` for the binary-delay transmission instead of
    /// the decibel form `10^(-α_inc (N-r)/10)`.
    pub strict_eq6: bool,
    /// Drop the filter efficiency from the no-detection probability `D0`.
    pub omit_filter_in_d0: bool,
}

/// Physical parameters of the source, its chip and its detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Mean-pair parameter per time bin.
    pub lambda: f64,
    /// Pump period T in seconds.
    pub period: f64,
    pub eta_f: f64,
    /// Composite coupling efficiency, including the fiber delay before the chip.
    pub eta_c: f64,
    /// Transmission of one switch pass.
    pub eta_sw: f64,
    /// Raw detector efficiency for the single-detector protocol.
    pub eta_det_single: f64,
    /// Raw detector efficiency for the detector-array protocol.
    pub eta_det_array: f64,
    pub eta_conv: f64,
    /// Incremental waveguide loss per bin of delay, dB.
    pub alpha_inc: f64,
    pub pair_dist: PairDistribution,
    pub array: ArrayGeometry,
    pub conventions: Conventions,
}

/// Linear waveguide loss of low-confinement ridge guides, dB/cm.
pub const DEFAULT_ALPHA_LIN_DB_PER_CM: f64 = 0.1;
pub const DEFAULT_GROUP_INDEX: f64 = 4.0;
pub const DEFAULT_PERIOD: f64 = 40e-12;

impl Default for SourceParams {
    fn default() -> Self {
        SourceParams {
            lambda: 0.1,
            period: DEFAULT_PERIOD,
            eta_f: 0.99,
            eta_c: 0.84,
            eta_sw: 0.87,
            eta_det_single: 0.7,
            eta_det_array: 0.8,
            eta_conv: 0.85,
            alpha_inc: alpha_inc_from_linear(
                DEFAULT_ALPHA_LIN_DB_PER_CM,
                DEFAULT_GROUP_INDEX,
                DEFAULT_PERIOD,
            ),
            pair_dist: PairDistribution::Poisson,
            array: ArrayGeometry::default(),
            conventions: Conventions::default(),
        }
    }
}

/// Loss in dB accumulated over one bin of on-chip delay.
///
/// One bin of delay is a waveguide of length `c T / n_g`.
pub fn alpha_inc_from_linear(alpha_lin_db_per_cm: f64, group_index: f64, period: f64) -> f64 {
    let length_cm = SPEED_OF_LIGHT * period / group_index * 100.0;
    alpha_lin_db_per_cm * length_cm
}

impl SourceParams {
    /// All efficiencies one, no waveguide loss.
    pub fn ideal(lambda: f64) -> Self {
        SourceParams {
            lambda,
            eta_f: 1.0,
            eta_c: 1.0,
            eta_sw: 1.0,
            eta_det_single: 1.0,
            eta_det_array: 1.0,
            eta_conv: 1.0,
            alpha_inc: 0.0,
            ..SourceParams::default()
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_eta_sw(mut self, eta_sw: f64) -> Self {
        self.eta_sw = eta_sw;
        self
    }

    pub fn with_alpha_inc(mut self, alpha_inc: f64) -> Self {
        self.alpha_inc = alpha_inc;
        self
    }

    pub fn with_pair_dist(mut self, pair_dist: PairDistribution) -> Self {
        self.pair_dist = pair_dist;
        self
    }

    pub fn with_conventions(mut self, conventions: Conventions) -> Self {
        self.conventions = conventions;
        self
    }

    /// Raw detector efficiency used by the given protocol.
    pub fn eta_det(&self, detection: Detection) -> f64 {
        match detection {
            Detection::SingleDetector => self.eta_det_single,
            Detection::DetectorArray => self.eta_det_array,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("eta_f", self.eta_f),
            ("eta_c", self.eta_c),
            ("eta_sw", self.eta_sw),
            ("eta_det_single", self.eta_det_single),
            ("eta_det_array", self.eta_det_array),
            ("eta_conv", self.eta_conv),
            ("blanking", self.array.blanking),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} is not in [0, 1]")));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::domain(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if self.pair_dist == PairDistribution::ThermalApprox && self.lambda >= 2.0 {
            return Err(Error::domain(format!(
                "lambda = {} must be < 2 for the thermal distribution",
                self.lambda
            )));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::domain(format!("period = {} must be > 0", self.period)));
        }
        if !(self.alpha_inc >= 0.0 && self.alpha_inc.is_finite()) {
            return Err(Error::domain(format!(
                "alpha_inc = {} must be >= 0",
                self.alpha_inc
            )));
        }
        let a = &self.array;
        if a.array_size == 0 || a.short_paths + a.long_paths != a.array_size {
            return Err(Error::domain(format!(
                "detector array paths {} + {} do not add up to {} detectors",
                a.short_paths, a.long_paths, a.array_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Delays of T, 2T, 4T, ... selected by ⌊log2 N⌋ + 1 switches.
    BinaryDelay,
    /// One delay line of length T traversed once per bin of delay.
    SingleDelayLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    SingleDetector,
    DetectorArray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    FirstPhoton,
    LastPhoton,
}

impl Detection {
    /// Selection policy each detection protocol supports natively.
    pub fn native_selection(self) -> Selection {
        match self {
            Detection::SingleDetector => Selection::FirstPhoton,
            Detection::DetectorArray => Selection::LastPhoton,
        }
    }
}

/// Delay topology, detection protocol and selection policy for one source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub n_bins: usize,
    pub topology: Topology,
    pub detection: Detection,
    pub selection: Selection,
}

impl SchemeConfig {
    /// Builds a scheme whose selection policy follows the detection protocol.
    pub fn new(n_bins: usize, topology: Topology, detection: Detection) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::domain("n_bins must be >= 1"));
        }
        Ok(SchemeConfig {
            n_bins,
            topology,
            detection,
            selection: detection.native_selection(),
        })
    }

    /// Decouples selection from detection. Only meant for comparison studies.
    pub fn with_selection_override(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_n_bins(mut self, n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::domain("n_bins must be >= 1"));
        }
        self.n_bins = n_bins;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 {
            return Err(Error::domain("n_bins must be >= 1"));
        }
        Ok(())
    }
}

/// Probability of exactly `n` pairs in one bin.
pub fn pair_count_distribution(params: &SourceParams, n: usize) -> Result<f64> {
    params.validate()?;
    if n > MAX_PAIRS {
        return Ok(0.0);
    }
    Ok(params.pair_dist.pmf_table(params.lambda)[n])
}

/// `P(n >= 2 | n >= 1)`; zero when no pairs are ever generated.
pub fn conditional_multiphoton(params: &SourceParams) -> Result<f64> {
    params.validate()?;
    if params.lambda == 0.0 {
        return Ok(0.0);
    }
    let pmf = params.pair_dist.pmf_table(params.lambda);
    let multi: f64 = pmf[2..].iter().sum();
    let any: f64 = pmf[1..].iter().sum();
    Ok(multi / any)
}

/// `λ = 2 tanh²(χt)`.
pub fn lambda_from_interaction(chi_t: f64) -> Result<f64> {
    if !(chi_t >= 0.0) {
        return Err(Error::domain(format!("chi_t = {chi_t} must be >= 0")));
    }
    let t = chi_t.tanh();
    Ok(2.0 * t * t)
}
