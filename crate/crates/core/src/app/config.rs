//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Every key may appear once;
//! unknown keys are rejected. Keys that are not given keep the defaults.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `lambda` | mean pairs per bin | 0.1 |
//! | `period` | pump period T, s | 4e-11 |
//! | `eta_f`, `eta_c`, `eta_sw`, `eta_conv` | component efficiencies | 0.99, 0.84, 0.87, 0.85 |
//! | `eta_det_single`, `eta_det_array` | detector efficiency per protocol | 0.7, 0.8 |
//! | `alpha_inc` | waveguide loss per bin of delay, dB | from `alpha_lin` |
//! | `alpha_lin`, `group_index` | dB/cm and n_g, used when `alpha_inc` is absent | 0.1, 4.0 |
//! | `pair_distribution` | `poisson` or `thermal` | poisson |
//! | `strict_eq6` | literal exponent without the dB factor | false |
//! | `omit_filter_in_d0` | drop η_f from D0 | false |
//! | `n_bins` | bins per frame | 31 |
//! | `topology` | `binary` or `single_line` | binary |
//! | `detection` | `single` or `array` | single |
//! | `selection` | `native`, `first` or `last` | native |
//! | `n_min`, `n_max` | N range for sweeps and optimization | 1, 128 |
//! | `sweep_parameter` | swept key | n_bins |
//! | `sweep_values` | comma list, or `start:stop:step` | n_min..=n_max |
//! | `crossing_lo`, `crossing_hi`, `crossing_tol` | η_sw bracket for the crossing search | 0.85, 0.99, 1e-6 |
//! | `trials`, `seed` | Monte Carlo settings | 1000000, 1 |

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    alpha_inc_from_linear, Detection, PairDistribution, SchemeConfig, Selection, SourceParams,
    Topology, DEFAULT_ALPHA_LIN_DB_PER_CM, DEFAULT_GROUP_INDEX,
};

use super::sweep::{SweepParameter, SweepSpec};

const KEYS: &[&str] = &[
    "lambda",
    "period",
    "eta_f",
    "eta_c",
    "eta_sw",
    "eta_det_single",
    "eta_det_array",
    "eta_conv",
    "alpha_inc",
    "alpha_lin",
    "group_index",
    "pair_distribution",
    "strict_eq6",
    "omit_filter_in_d0",
    "n_bins",
    "topology",
    "detection",
    "selection",
    "n_min",
    "n_max",
    "sweep_parameter",
    "sweep_values",
    "crossing_lo",
    "crossing_hi",
    "crossing_tol",
    "trials",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub params: SourceParams,
    pub scheme: SchemeConfig,
    pub n_min: usize,
    pub n_max: usize,
    pub sweep_parameter: SweepParameter,
    /// Explicit sweep values; `None` sweeps `n_min..=n_max` over `n_bins`.
    pub sweep_values: Option<Vec<f64>>,
    pub crossing_lo: f64,
    pub crossing_hi: f64,
    pub crossing_tol: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            params: SourceParams::default(),
            scheme: SchemeConfig::new(31, Topology::BinaryDelay, Detection::SingleDetector)
                .expect("31 bins"),
            n_min: 1,
            n_max: 128,
            sweep_parameter: SweepParameter::NBins,
            sweep_values: None,
            crossing_lo: 0.85,
            crossing_hi: 0.99,
            crossing_tol: 1e-6,
            trials: 1_000_000,
            seed: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_f64(key: &str, value: &str, lo: f64, hi: f64) -> Result<f64> {
    let v: f64 = parse(key, value)?;
    if !(v >= lo && v <= hi) {
        return Err(Error::config(key, format!("{v} is outside [{lo}, {hi}]")));
    }
    Ok(v)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got {value:?}"))),
    }
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    let v: usize = parse(key, value)?;
    if v == 0 {
        return Err(Error::config(key, "must be >= 1"));
    }
    Ok(v)
}

fn parse_values(key: &str, value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let values = if parts.len() == 3 {
        let start: f64 = parse(key, parts[0])?;
        let stop: f64 = parse(key, parts[1])?;
        let step: f64 = parse(key, parts[2])?;
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::config(key, "range needs start <= stop and step > 0"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(Error::config(key, "range has too many points"));
        }
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        value
            .split(',')
            .map(|v| parse(key, v.trim()))
            .collect::<Result<Vec<f64>>>()?
    };
    if values.is_empty() {
        return Err(Error::config(key, "no values"));
    }
    Ok(values)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut seen = BTreeSet::new();
        let mut alpha_inc = None;
        let mut alpha_lin = DEFAULT_ALPHA_LIN_DB_PER_CM;
        let mut group_index = DEFAULT_GROUP_INDEX;
        let mut selection = None;
        let p = &mut cfg.params;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got {line:?}"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::config(key, "unknown key"));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            match key {
                "lambda" => p.lambda = parse_f64(key, value, 0.0, f64::MAX)?,
                "period" => p.period = parse_f64(key, value, f64::MIN_POSITIVE, f64::MAX)?,
                "eta_f" => p.eta_f = parse_f64(key, value, 0.0, 1.0)?,
                "eta_c" => p.eta_c = parse_f64(key, value, 0.0, 1.0)?,
                "eta_sw" => p.eta_sw = parse_f64(key, value, 0.0, 1.0)?,
                "eta_det_single" => p.eta_det_single = parse_f64(key, value, 0.0, 1.0)?,
                "eta_det_array" => p.eta_det_array = parse_f64(key, value, 0.0, 1.0)?,
                "eta_conv" => p.eta_conv = parse_f64(key, value, 0.0, 1.0)?,
                "alpha_inc" => alpha_inc = Some(parse_f64(key, value, 0.0, f64::MAX)?),
                "alpha_lin" => alpha_lin = parse_f64(key, value, 0.0, f64::MAX)?,
                "group_index" => group_index = parse_f64(key, value, f64::MIN_POSITIVE, f64::MAX)?,
                "pair_distribution" => {
                    p.pair_dist = match value {
                        "poisson" => PairDistribution::Poisson,
                        "thermal" => PairDistribution::ThermalApprox,
                        _ => return Err(Error::config(key, "expected poisson or thermal")),
                    }
                }
                "strict_eq6" => p.conventions.strict_eq6 = parse_bool(key, value)?,
                "omit_filter_in_d0" => p.conventions.omit_filter_in_d0 = parse_bool(key, value)?,
                "n_bins" => cfg.scheme.n_bins = parse_count(key, value)?,
                "topology" => {
                    cfg.scheme.topology = match value {
                        "binary" => Topology::BinaryDelay,
                        "single_line" => Topology::SingleDelayLine,
                        _ => return Err(Error::config(key, "expected binary or single_line")),
                    }
                }
                "detection" => {
                    cfg.scheme.detection = match value {
                        "single" => Detection::SingleDetector,
                        "array" => Detection::DetectorArray,
                        _ => return Err(Error::config(key, "expected single or array")),
                    }
                }
                "selection" => {
                    selection = match value {
                        "native" => None,
                        "first" => Some(Selection::FirstPhoton),
                        "last" => Some(Selection::LastPhoton),
                        _ => return Err(Error::config(key, "expected native, first or last")),
                    }
                }
                "n_min" => cfg.n_min = parse_count(key, value)?,
                "n_max" => cfg.n_max = parse_count(key, value)?,
                "sweep_parameter" => {
                    cfg.sweep_parameter = SweepParameter::from_key(value)
                        .map_err(|_| Error::config(key, format!("{value:?} cannot be swept")))?
                }
                "sweep_values" => cfg.sweep_values = Some(parse_values(key, value)?),
                "crossing_lo" => cfg.crossing_lo = parse_f64(key, value, 0.0, 1.0)?,
                "crossing_hi" => cfg.crossing_hi = parse_f64(key, value, 0.0, 1.0)?,
                "crossing_tol" => cfg.crossing_tol = parse_f64(key, value, f64::MIN_POSITIVE, 1.0)?,
                "trials" => cfg.trials = parse_count(key, value)? as u64,
                "seed" => cfg.seed = parse(key, value)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }

        if alpha_inc.is_some() && (seen.contains("alpha_lin") || seen.contains("group_index")) {
            return Err(Error::config("alpha_inc", "give either alpha_inc or alpha_lin/group_index"));
        }
        cfg.params.alpha_inc = alpha_inc
            .unwrap_or_else(|| alpha_inc_from_linear(alpha_lin, group_index, cfg.params.period));
        cfg.scheme.selection = selection.unwrap_or(cfg.scheme.detection.native_selection());
        if cfg.n_min > cfg.n_max {
            return Err(Error::config("n_min", "must not exceed n_max"));
        }
        if cfg.crossing_lo > cfg.crossing_hi {
            return Err(Error::config("crossing_lo", "must not exceed crossing_hi"));
        }
        if cfg.sweep_values.is_some() && !seen.contains("sweep_parameter") {
            return Err(Error::config("sweep_values", "needs sweep_parameter"));
        }
        Ok(cfg)
    }

    /// Sweep described by the sweep keys.
    pub fn sweep_spec(&self) -> SweepSpec {
        let values = match &self.sweep_values {
            Some(v) => v.clone(),
            None if self.sweep_parameter == SweepParameter::NBins => {
                (self.n_min..=self.n_max).map(|n| n as f64).collect()
            }
            None => vec![self.sweep_parameter.get(&self.params, &self.scheme)],
        };
        SweepSpec {
            parameter: self.sweep_parameter,
            values,
            params: self.params.clone(),
            scheme: self.scheme,
        }
    }
}
