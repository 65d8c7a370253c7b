//! Linear-optics enumeration of the heralded Bell-state circuits.
//!
//! States live in a truncated Fock space over polarization-resolved modes:
//! rail `s` carries mode `2s` (H) and `2s + 1` (V). Elements act through their
//! single-photon mode map, expanded over every creation operator of a
//! basis state.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const H: usize = 0;
pub const V: usize = 1;

/// Mode index of polarization `pol` on `rail`.
pub fn mode(rail: usize, pol: usize) -> usize {
    2 * rail + pol
}

/// Sparse Fock state: occupation vector to amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    n_modes: usize,
    amps: BTreeMap<Vec<u8>, Complex64>,
}

const PRUNE: f64 = 1e-15;

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

impl FockState {
    pub fn vacuum(n_modes: usize) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(vec![0; n_modes], Complex64::new(1.0, 0.0));
        FockState { n_modes, amps }
    }

    pub fn from_occupation(occupation: Vec<u8>) -> Self {
        let n_modes = occupation.len();
        let mut amps = BTreeMap::new();
        amps.insert(occupation, Complex64::new(1.0, 0.0));
        FockState { n_modes, amps }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitude(&self, occupation: &[u8]) -> Complex64 {
        self.amps.get(occupation).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u8], Complex64)> {
        self.amps.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Photon number if every component has the same total, else `None`.
    pub fn photon_number(&self) -> Option<u32> {
        let mut totals = self
            .amps
            .keys()
            .map(|occ| occ.iter().map(|&n| n as u32).sum::<u32>());
        let first = totals.next()?;
        totals.all(|t| t == first).then_some(first)
    }

    /// Multiplies every amplitude by `phase`.
    pub fn with_global_phase(mut self, phase: Complex64) -> Self {
        for a in self.amps.values_mut() {
            *a *= phase;
        }
        self
    }
}

/// Optical element acting on polarization-resolved rails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CircuitElement {
    /// Rotates polarization on `rail`: `H -> cos θ H + sin θ V`.
    PolarizationRotator { rail: usize, angle: f64 },
    /// Transmits H, couples V across with a factor `i`.
    PolarizingCoupler { a: usize, b: usize },
    /// Balanced coupler, `a -> (a + i b)/√2` for both polarizations.
    NonpolarizingCoupler { a: usize, b: usize },
}

type ModeMap = Vec<(usize, Vec<(usize, Complex64)>)>;

impl CircuitElement {
    fn rails(&self) -> Vec<usize> {
        match *self {
            CircuitElement::PolarizationRotator { rail, .. } => vec![rail],
            CircuitElement::PolarizingCoupler { a, b }
            | CircuitElement::NonpolarizingCoupler { a, b } => vec![a, b],
        }
    }

    /// Image of each affected creation operator.
    fn mode_map(&self) -> ModeMap {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *self {
            CircuitElement::PolarizationRotator { rail, angle } => {
                let (s, co) = angle.sin_cos();
                vec![
                    (mode(rail, H), vec![(mode(rail, H), c(co, 0.0)), (mode(rail, V), c(s, 0.0))]),
                    (mode(rail, V), vec![(mode(rail, H), c(-s, 0.0)), (mode(rail, V), c(co, 0.0))]),
                ]
            }
            CircuitElement::PolarizingCoupler { a, b } => vec![
                (mode(a, H), vec![(mode(a, H), c(1.0, 0.0))]),
                (mode(b, H), vec![(mode(b, H), c(1.0, 0.0))]),
                (mode(a, V), vec![(mode(b, V), c(0.0, 1.0))]),
                (mode(b, V), vec![(mode(a, V), c(0.0, 1.0))]),
            ],
            CircuitElement::NonpolarizingCoupler { a, b } => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                [H, V]
                    .iter()
                    .flat_map(|&p| {
                        [
                            (mode(a, p), vec![(mode(a, p), c(r, 0.0)), (mode(b, p), c(0.0, r))]),
                            (mode(b, p), vec![(mode(a, p), c(0.0, r)), (mode(b, p), c(r, 0.0))]),
                        ]
                    })
                    .collect()
            }
        }
    }

    /// Dense single-photon matrix `U[out][in]` on `n_modes` modes.
    pub fn matrix(&self, n_modes: usize) -> Result<Vec<Vec<Complex64>>> {
        self.validate(n_modes)?;
        let mut u = vec![vec![Complex64::default(); n_modes]; n_modes];
        for (i, row) in u.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        for (input, image) in self.mode_map() {
            for row in u.iter_mut() {
                row[input] = Complex64::default();
            }
            for (out, amp) in image {
                u[out][input] = amp;
            }
        }
        Ok(u)
    }

    fn validate(&self, n_modes: usize) -> Result<()> {
        let rails = self.rails();
        if rails.iter().any(|&r| mode(r, V) >= n_modes) {
            return Err(Error::domain(format!("{self:?} addresses a rail outside {n_modes} modes")));
        }
        if rails.len() == 2 && rails[0] == rails[1] {
            return Err(Error::domain(format!("{self:?} couples a rail to itself")));
        }
        if let CircuitElement::PolarizationRotator { angle, .. } = self {
            if !angle.is_finite() {
                return Err(Error::domain("rotator angle must be finite"));
            }
        }
        Ok(())
    }

    /// Checks that the columns of the mode transformation are orthonormal.
    pub fn check_unitary(&self, n_modes: usize) -> Result<()> {
        let u = self.matrix(n_modes)?;
        for i in 0..n_modes {
            for j in 0..n_modes {
                let dot: Complex64 = (0..n_modes).map(|k| u[k][i].conj() * u[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).norm() > 1e-12 {
                    return Err(Error::domain(format!("{self:?} is not unitary")));
                }
            }
        }
        Ok(())
    }
}

/// Applies `elem` to every creation operator of `state`.
pub fn apply_element(state: &FockState, elem: &CircuitElement) -> Result<FockState> {
    let n = state.n_modes;
    elem.check_unitary(n)?;
    let map = elem.mode_map();
    let image = |m: usize| -> Vec<(usize, Complex64)> {
        map.iter()
            .find(|(input, _)| *input == m)
            .map(|(_, img)| img.clone())
            .unwrap_or_else(|| vec![(m, Complex64::new(1.0, 0.0))])
    };

    let mut out: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
    for (occ, amp) in &state.amps {
        // |n> = Π (a†_m)^{n_m} / sqrt(n_m!) |0>
        let norm: f64 = occ.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
        let mut terms: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        terms.insert(vec![0; n], *amp / norm);
        for (m, &count) in occ.iter().enumerate() {
            let img = image(m);
            for _ in 0..count {
                let mut next = BTreeMap::new();
                for (t, c) in &terms {
                    for &(m2, c2) in &img {
                        let mut t2 = t.clone();
                        t2[m2] += 1;
                        *next.entry(t2).or_default() += c * c2;
                    }
                }
                terms = next;
            }
        }
        for (t, c) in terms {
            let bose: f64 = t.iter().map(|&k| factorial(k)).product::<f64>().sqrt();
            *out.entry(t).or_default() += c * bose;
        }
    }
    out.retain(|_, a| a.norm() > PRUNE);
    Ok(FockState { n_modes: n, amps: out })
}

pub fn apply_circuit(state: &FockState, elements: &[CircuitElement]) -> Result<FockState> {
    elements
        .iter()
        .try_fold(state.clone(), |s, e| apply_element(&s, e))
}

/// The four Bell states on two polarization qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BellState {
    /// `|HH⟩ + |VV⟩`
    PhiPlus,
    /// `|HH⟩ - |VV⟩`
    PhiMinus,
    /// `|HV⟩ + |VH⟩`
    PsiPlus,
    /// `|HV⟩ - |VH⟩`
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes indexed `[pol of first qubit][pol of second qubit]`.
    pub fn amplitudes(self) -> [[Complex64; 2]; 2] {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = Complex64::default();
        match self {
            BellState::PhiPlus => [[r, z], [z, r]],
            BellState::PhiMinus => [[r, z], [z, -r]],
            BellState::PsiPlus => [[z, r], [r, z]],
            BellState::PsiMinus => [[z, r], [-r, z]],
        }
    }
}

impl fmt::Display for BellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellState::PhiPlus => "HH+VV",
            BellState::PhiMinus => "HH-VV",
            BellState::PsiPlus => "HV+VH",
            BellState::PsiMinus => "HV-VH",
        })
    }
}

/// `|⟨target|ψ⟩|²` for a normalized two-qubit amplitude table.
pub fn fidelity(state: &[[Complex64; 2]; 2], target: BellState) -> f64 {
    let t = target.amplitudes();
    let overlap: Complex64 = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| t[i][j].conj() * state[i][j])
        .sum();
    overlap.norm_sqr()
}

fn normalized(mut a: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let n: f64 = a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in a.iter_mut().flatten() {
            *x /= n;
        }
    }
    a
}

fn closest_bell(state: &[[Complex64; 2]; 2]) -> (BellState, f64) {
    BellState::ALL
        .iter()
        .map(|&b| (b, fidelity(state, b)))
        .fold((BellState::PhiPlus, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// How the heralding detectors report photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum DetectorModel {
    /// Counts photons; a herald needs exactly one photon in the clicking port.
    #[default]
    NumberResolving,
    /// Clicks on one or more photons.
    Bucket,
}

/// Photons seen at `[D1-H, D1-V, D2-H, D2-V]`.
pub type DetectorPattern = [u8; 4];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeraldOutcome {
    pub pattern: DetectorPattern,
    pub probability: f64,
    /// Conditional output state on rails 1 and 4, normalized.
    pub state: [[(f64, f64); 2]; 2],
    pub bell_state: BellState,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HbsResult {
    /// Sum over the accepted patterns with one photon on each output rail.
    pub success_probability: f64,
    pub outcomes: Vec<HeraldOutcome>,
    /// Detector-pattern probabilities summed over everything, for the completeness check.
    pub all_patterns_total: f64,
}

/// Rails of the four-photon circuit: outputs 0 and 3, heralding detectors on 1 and 2.
pub const HBS_RAILS: usize = 4;
const D1: usize = 1;
const D2: usize = 2;
const OUT_A: usize = 0;
const OUT_B: usize = 3;

/// Four-source circuit. `middle_rotation` toggles the π/4 rotators in front of
/// the middle coupler.
pub fn hbs_circuit(middle_rotation: bool) -> Vec<CircuitElement> {
    use CircuitElement::*;
    let q = std::f64::consts::FRAC_PI_4;
    let mut c: Vec<CircuitElement> = (0..HBS_RAILS)
        .map(|rail| PolarizationRotator { rail, angle: q })
        .collect();
    c.push(PolarizingCoupler { a: 0, b: 1 });
    c.push(PolarizingCoupler { a: 2, b: 3 });
    if middle_rotation {
        c.push(PolarizationRotator { rail: D1, angle: q });
        c.push(PolarizationRotator { rail: D2, angle: q });
    }
    c.push(PolarizingCoupler { a: D1, b: D2 });
    c.push(PolarizationRotator { rail: D1, angle: q });
    c.push(PolarizationRotator { rail: D2, angle: -q });
    c
}

/// Four H photons, one per rail.
pub fn hbs_input() -> FockState {
    let mut occ = vec![0; 2 * HBS_RAILS];
    for rail in 0..HBS_RAILS {
        occ[mode(rail, H)] = 1;
    }
    FockState::from_occupation(occ)
}

/// Herald patterns counted as success: one photon in D1 and one in D2.
pub const ACCEPTED_PATTERNS: [DetectorPattern; 4] = [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]];

fn detector_pattern(occ: &[u8]) -> DetectorPattern {
    [
        occ[mode(D1, H)],
        occ[mode(D1, V)],
        occ[mode(D2, H)],
        occ[mode(D2, V)],
    ]
}

fn accepted(pattern: &DetectorPattern, detectors: DetectorModel) -> Option<DetectorPattern> {
    let clicks = pattern.map(|n| u8::from(n > 0));
    let key = match detectors {
        DetectorModel::NumberResolving => *pattern,
        DetectorModel::Bucket => clicks,
    };
    ACCEPTED_PATTERNS.contains(&key).then_some(key)
}

/// Success probability and heralded states of an arbitrary four-rail circuit.
pub fn hbs_analyze(elements: &[CircuitElement], detectors: DetectorModel) -> Result<HbsResult> {
    let out = apply_circuit(&hbs_input(), elements)?;
    let mut tables: BTreeMap<DetectorPattern, [[Complex64; 2]; 2]> = BTreeMap::new();
    let mut all_patterns: BTreeMap<DetectorPattern, f64> = BTreeMap::new();
    for (occ, amp) in out.iter() {
        let pattern = detector_pattern(occ);
        *all_patterns.entry(pattern).or_default() += amp.norm_sqr();
        let Some(key) = accepted(&pattern, detectors) else {
            continue;
        };
        let a = (occ[mode(OUT_A, H)], occ[mode(OUT_A, V)]);
        let b = (occ[mode(OUT_B, H)], occ[mode(OUT_B, V)]);
        if a.0 + a.1 != 1 || b.0 + b.1 != 1 {
            continue;
        }
        // with one photon on each output only two reach the detectors, so a
        // bucket record always stands for a single number-resolved pattern
        tables.entry(key).or_default()[usize::from(a.1)][usize::from(b.1)] += amp;
    }
    let mut outcomes = Vec::new();
    for pattern in ACCEPTED_PATTERNS {
        if let Some(table) = tables.get(&pattern) {
            let p: f64 = table.iter().flatten().map(|x| x.norm_sqr()).sum();
            if p <= PRUNE {
                continue;
            }
            let state = normalized(*table);
            let (bell_state, fid) = closest_bell(&state);
            outcomes.push(HeraldOutcome {
                pattern,
                probability: p,
                state: state.map(|row| row.map(|x| (x.re, x.im))),
                bell_state,
                fidelity: fid,
            });
        }
    }
    Ok(HbsResult {
        success_probability: outcomes.iter().map(|o| o.probability).sum(),
        outcomes,
        all_patterns_total: all_patterns.values().sum(),
    })
}

/// Success probability of the four-source heralded Bell-state circuit with
/// number-resolving detectors.
pub fn hbs_herald_probability() -> Result<HbsResult> {
    hbs_analyze(&hbs_circuit(true), DetectorModel::NumberResolving)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSourceResult {
    /// Probability of one photon in each output rail.
    pub coincidence: f64,
    /// Conditional state, normalized; zero when there is no coincidence.
    pub state: [[(f64, f64); 2]; 2],
    pub singlet_fidelity: f64,
}

/// Two photons with polarizations `pol_a`, `pol_b` meet on a balanced coupler.
pub fn two_photon_coincidence(pol_a: usize, pol_b: usize) -> Result<TwoSourceResult> {
    if pol_a > V || pol_b > V {
        return Err(Error::domain("polarization index must be H (0) or V (1)"));
    }
    let mut occ = vec![0u8; 4];
    occ[mode(0, pol_a)] += 1;
    occ[mode(1, pol_b)] += 1;
    let out = apply_element(
        &FockState::from_occupation(occ),
        &CircuitElement::NonpolarizingCoupler { a: 0, b: 1 },
    )?;
    let mut table = [[Complex64::default(); 2]; 2];
    for (occ, amp) in out.iter() {
        if occ[0] + occ[1] == 1 && occ[2] + occ[3] == 1 {
            table[usize::from(occ[1])][usize::from(occ[3])] += amp;
        }
    }
    let coincidence: f64 = table.iter().flatten().map(|x| x.norm_sqr()).sum();
    let state = normalized(table);
    Ok(TwoSourceResult {
        coincidence,
        state: state.map(|row| row.map(|x| (x.re, x.im))),
        singlet_fidelity: if coincidence > PRUNE {
            fidelity(&state, BellState::PsiMinus)
        } else {
            0.0
        },
    })
}

/// H and V photons on a balanced coupler, post-selected on coincidence.
pub fn two_source_probability() -> Result<TwoSourceResult> {
    two_photon_coincidence(H, V)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BellScheme {
    /// Four sources, heralded.
    Hbs4,
    /// Two sources, post-selected.
    PostSelected2,
}

/// Overall success probability with sources of efficiency `eta`.
pub fn composed_success(eta: f64, scheme: BellScheme) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain(format!("eta = {eta} is not in [0, 1]")));
    }
    Ok(match scheme {
        BellScheme::Hbs4 => 3.0 / 16.0 * eta.powi(4),
        BellScheme::PostSelected2 => 0.5 * eta * eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Best rational approximation with denominator at most `max_den`, by continued fractions.
pub fn to_rational(x: f64, max_den: i64) -> Result<Rational> {
    if !x.is_finite() || max_den < 1 {
        return Err(Error::domain(format!("cannot approximate {x} with denominators <= {max_den}")));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    loop {
        let a = y.floor();
        let a_int = a as i64;
        let (p2, q2) = (a_int * p1 + p0, a_int * q1 + q0);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = y - a;
        if frac.abs() < 1e-12 || ((p1 as f64 / q1 as f64) - x).abs() < 1e-13 {
            break;
        }
        y = 1.0 / frac;
    }
    Ok(Rational { num: p1, den: q1 })
}
