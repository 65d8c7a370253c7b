//! Parameter sweeps, optimization over N and the protocol crossing point.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::efficiency::total_efficiency;
use crate::error::{Error, Result};
use crate::model::{Detection, SchemeConfig, SourceParams};

/// Parameter a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NBins,
    Lambda,
    EtaF,
    EtaC,
    EtaSw,
    EtaDetSingle,
    EtaDetArray,
    EtaConv,
    AlphaInc,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 9] = [
        SweepParameter::NBins,
        SweepParameter::Lambda,
        SweepParameter::EtaF,
        SweepParameter::EtaC,
        SweepParameter::EtaSw,
        SweepParameter::EtaDetSingle,
        SweepParameter::EtaDetArray,
        SweepParameter::EtaConv,
        SweepParameter::AlphaInc,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepParameter::NBins => "n_bins",
            SweepParameter::Lambda => "lambda",
            SweepParameter::EtaF => "eta_f",
            SweepParameter::EtaC => "eta_c",
            SweepParameter::EtaSw => "eta_sw",
            SweepParameter::EtaDetSingle => "eta_det_single",
            SweepParameter::EtaDetArray => "eta_det_array",
            SweepParameter::EtaConv => "eta_conv",
            SweepParameter::AlphaInc => "alpha_inc",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.key() == key)
            .ok_or_else(|| Error::config(key, "not a sweepable parameter"))
    }

    pub fn get(self, params: &SourceParams, scheme: &SchemeConfig) -> f64 {
        match self {
            SweepParameter::NBins => scheme.n_bins as f64,
            SweepParameter::Lambda => params.lambda,
            SweepParameter::EtaF => params.eta_f,
            SweepParameter::EtaC => params.eta_c,
            SweepParameter::EtaSw => params.eta_sw,
            SweepParameter::EtaDetSingle => params.eta_det_single,
            SweepParameter::EtaDetArray => params.eta_det_array,
            SweepParameter::EtaConv => params.eta_conv,
            SweepParameter::AlphaInc => params.alpha_inc,
        }
    }

    /// Copies of `params` and `scheme` with this parameter set to `value`.
    pub fn apply(
        self,
        params: &SourceParams,
        scheme: &SchemeConfig,
        value: f64,
    ) -> Result<(SourceParams, SchemeConfig)> {
        let mut p = params.clone();
        let mut s = *scheme;
        match self {
            SweepParameter::NBins => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::config(self.key(), format!("{value} is not a bin count")));
                }
                s.n_bins = value as usize;
            }
            SweepParameter::Lambda => p.lambda = value,
            SweepParameter::EtaF => p.eta_f = value,
            SweepParameter::EtaC => p.eta_c = value,
            SweepParameter::EtaSw => p.eta_sw = value,
            SweepParameter::EtaDetSingle => p.eta_det_single = value,
            SweepParameter::EtaDetArray => p.eta_det_array = value,
            SweepParameter::EtaConv => p.eta_conv = value,
            SweepParameter::AlphaInc => p.alpha_inc = value,
        }
        p.validate()
            .map_err(|e| Error::config(self.key(), e.to_string()))?;
        Ok((p, s))
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub params: SourceParams,
    pub scheme: SchemeConfig,
}

impl SweepSpec {
    /// `n_bins` from `n_min` to `n_max`.
    pub fn over_n(params: &SourceParams, scheme: &SchemeConfig, n_min: usize, n_max: usize) -> Self {
        SweepSpec {
            parameter: SweepParameter::NBins,
            values: (n_min..=n_max).map(|n| n as f64).collect(),
            params: params.clone(),
            scheme: *scheme,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub x: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyCurve {
    pub label: String,
    pub parameter: SweepParameter,
    pub points: Vec<CurvePoint>,
    /// First sweep value attaining the maximum.
    pub argmax: f64,
    pub eta_max: f64,
}

impl EfficiencyCurve {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},eta\n", self.parameter);
        for p in &self.points {
            out.push_str(&format!("{},{:.12}\n", p.x, p.eta));
        }
        out
    }
}

/// Short label such as `binary/single/first`.
pub fn scheme_label(scheme: &SchemeConfig) -> String {
    use crate::model::{Selection, Topology};
    format!(
        "{}/{}/{}",
        match scheme.topology {
            Topology::BinaryDelay => "binary",
            Topology::SingleDelayLine => "single_line",
        },
        match scheme.detection {
            Detection::SingleDetector => "single",
            Detection::DetectorArray => "array",
        },
        match scheme.selection {
            Selection::FirstPhoton => "first",
            Selection::LastPhoton => "last",
        }
    )
}

pub fn sweep(spec: &SweepSpec) -> Result<EfficiencyCurve> {
    if spec.values.is_empty() {
        return Err(Error::config(spec.parameter.key(), "no sweep values"));
    }
    let points = spec
        .values
        .par_iter()
        .map(|&x| {
            let (p, s) = spec.parameter.apply(&spec.params, &spec.scheme, x)?;
            Ok(CurvePoint {
                x,
                eta: total_efficiency(&p, &s)?.eta_total,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points
        .iter()
        .fold(points[0], |best, p| if p.eta > best.eta { *p } else { best });
    Ok(EfficiencyCurve {
        label: scheme_label(&spec.scheme),
        parameter: spec.parameter,
        points,
        argmax: best.x,
        eta_max: best.eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub n_bins: usize,
    pub eta_max: f64,
}

/// Best frame size in `n_min..=n_max`; ties go to the smaller N.
pub fn optimize(params: &SourceParams, scheme: &SchemeConfig, n_min: usize, n_max: usize) -> Result<Optimum> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::domain(format!("empty N range {n_min}..={n_max}")));
    }
    let curve = sweep(&SweepSpec::over_n(params, scheme, n_min, n_max))?;
    Ok(Optimum {
        n_bins: curve.argmax as usize,
        eta_max: curve.eta_max,
    })
}

/// Largest frame considered when comparing protocols.
pub const CROSSING_N_MAX: usize = 128;

/// `max_N η(single detector) - max_N η(detector array)` at switch transmission `eta_sw`.
pub fn protocol_gap(baseline: &SourceParams, scheme: &SchemeConfig, eta_sw: f64) -> Result<f64> {
    let params = baseline.clone().with_eta_sw(eta_sw);
    let best = |detection: Detection| -> Result<f64> {
        let s = SchemeConfig::new(scheme.n_bins, scheme.topology, detection)?;
        Ok(optimize(&params, &s, 1, CROSSING_N_MAX)?.eta_max)
    };
    Ok(best(Detection::SingleDetector)? - best(Detection::DetectorArray)?)
}

/// Switch transmission where both protocols reach the same maximum efficiency.
///
/// Bisection on [`protocol_gap`]; each protocol uses its native selection.
pub fn find_crossing(
    baseline: &SourceParams,
    scheme: &SchemeConfig,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::domain(format!("bad bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance {tol} must be > 0")));
    }
    let g = |x: f64| protocol_gap(baseline, scheme, x);
    let (mut a, mut b) = (lo, hi);
    let (mut ga, gb) = (g(a)?, g(b)?);
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() {
        return Err(Error::NoCrossing {
            lo,
            hi,
            g_lo: ga,
            g_hi: gb,
        });
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
