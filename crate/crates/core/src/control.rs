//! Digital control plane of the multiplexer.
//!
//! A frame has `N = 2^m` bins. A photon heralded in bin `r` must be delayed by
//! `(N - r) T` so that every bin leaves in the same output slot. The delay is
//! built from static lines of `2^(m-1) T, ..., 2T, T`, chained by `m + 1`
//! Mach-Zehnder switches (entry, `m - 1` junctions, exit). The decision switch
//! in front of the chain is driven by the herald selection logic.
//!
//! Switch columns follow the table the hardware is programmed from:
//!
//! * entry switch: `π` sends the photon into the coarsest delay.
//! * junction after the coarsest delay: selects the next arm directly,
//!   `π` for the bypass and `0` for the delay.
//! * further junctions: bar/cross, `π` moves the photon between delay and bypass.
//! * exit switch: `π` takes the photon out of the finest delay arm.
//!
//! Each column is a square wave over the frame, so the switches run from
//! divided clocks and need no data path.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of binary delay stages needed to reach every delay in `0..N`.
pub fn stage_count(n_bins: usize) -> usize {
    if n_bins <= 1 {
        0
    } else {
        (usize::BITS - (n_bins - 1).leading_zeros()) as usize
    }
}

/// Binary expansion `delay = Σ c_j 2^j`, returned as `[c_0, c_1, ...]`.
pub fn delay_decompose(delay_bins: usize, n_bins: usize) -> Result<Vec<u8>> {
    if n_bins == 0 || delay_bins >= n_bins {
        return Err(Error::domain(format!(
            "delay {delay_bins} is outside 0..{n_bins}"
        )));
    }
    Ok((0..stage_count(n_bins))
        .map(|j| ((delay_bins >> j) & 1) as u8)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    Zero,
    Pi,
}

impl Phase {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Phase::Pi
        } else {
            Phase::Zero
        }
    }

    pub fn is_pi(self) -> bool {
        self == Phase::Pi
    }

    pub fn radians(self) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Pi => std::f64::consts::PI,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Zero => "0",
            Phase::Pi => "pi",
        })
    }
}

fn check_power_of_two(n_bins: usize) -> Result<usize> {
    if n_bins < 2 || !n_bins.is_power_of_two() {
        return Err(Error::domain(format!(
            "phase schedules need a power-of-two frame of at least 2 bins, got {n_bins}"
        )));
    }
    Ok(n_bins.trailing_zeros() as usize)
}

/// Switch phases per bin. Row `r - 1` holds the settings for bin `r`;
/// column `k` drives switch `k + 2` of the chain (switch 1 is the decision switch).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseSchedule {
    n_bins: usize,
    phases: Vec<Vec<Phase>>,
}

/// Switch settings that realize the coefficient list `c` (little-endian).
fn switch_row(c: &[u8]) -> Vec<Phase> {
    let m = c.len();
    let bit = |j: usize| c[j] == 1;
    let mut row = Vec::with_capacity(m + 1);
    row.push(Phase::from_bit(bit(m - 1)));
    if m >= 2 {
        row.push(Phase::from_bit(!bit(m - 2)));
    }
    for col in 2..m {
        let k = m - col - 1;
        row.push(Phase::from_bit(bit(k + 1) ^ bit(k)));
    }
    row.push(Phase::from_bit(bit(0)));
    row
}

/// Schedule for a power-of-two frame.
pub fn phase_schedule(n_bins: usize) -> Result<PhaseSchedule> {
    check_power_of_two(n_bins)?;
    let phases = (1..=n_bins)
        .map(|r| delay_decompose(n_bins - r, n_bins).map(|c| switch_row(&c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseSchedule { n_bins, phases })
}

impl PhaseSchedule {
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Switches in the delay chain (entry, junctions and exit).
    pub fn switch_count(&self) -> usize {
        self.phases.first().map_or(0, Vec::len)
    }

    /// Settings for bin `r` (1-based).
    pub fn row(&self, r: usize) -> Option<&[Phase]> {
        r.checked_sub(1)
            .and_then(|i| self.phases.get(i))
            .map(Vec::as_slice)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Phase]> {
        self.phases.iter().map(Vec::as_slice)
    }

    /// Delay in bins a photon accumulates when the chain is set to `row`.
    pub fn route(&self, row: &[Phase]) -> Result<usize> {
        route(row)
    }

    /// CSV with one line per bin: `bin,delay_bins,phi_2,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,delay_bins");
        for k in 0..self.switch_count() {
            out.push_str(&format!(",phi_{}", k + 2));
        }
        out.push('\n');
        for (idx, row) in self.phases.iter().enumerate() {
            out.push_str(&format!("{},{}", idx + 1, self.n_bins - idx - 1));
            for p in row {
                out.push_str(&format!(",{p}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Follows a photon through the delay chain; errors if the exit switch dumps it.
pub fn route(row: &[Phase]) -> Result<usize> {
    if row.len() < 2 {
        return Err(Error::domain("a delay chain has at least an entry and an exit switch"));
    }
    let m = row.len() - 1;
    // arm[j]: photon sits in the 2^j delay line
    let mut arm = vec![false; m];
    arm[m - 1] = row[0].is_pi();
    if m >= 2 {
        arm[m - 2] = !row[1].is_pi();
    }
    for (col, phase) in row.iter().enumerate().take(m).skip(2) {
        let k = m - col - 1;
        arm[k] = arm[k + 1] ^ phase.is_pi();
    }
    if row[m].is_pi() != arm[0] {
        return Err(Error::domain("exit switch routes the photon away from the output"));
    }
    Ok(arm
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(j, _)| 1usize << j)
        .sum())
}

/// Square wave derived from the pump clock by a divider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DriveSignal {
    /// Clock division: the waveform repeats every `division` bins.
    pub division: usize,
    /// Slots the counter is advanced by before dividing.
    pub offset: usize,
    /// Level during the first half period.
    pub start: Phase,
}

impl DriveSignal {
    pub fn sample(&self, slot: usize) -> Phase {
        let half = self.division / 2;
        let toggled = ((slot + self.offset) / half) % 2 == 1;
        Phase::from_bit(self.start.is_pi() ^ toggled)
    }
}

/// Divider settings for every switch of the chain.
pub fn drive_signals(n_bins: usize) -> Result<Vec<DriveSignal>> {
    let m = check_power_of_two(n_bins)?;
    let mut signals = vec![DriveSignal {
        division: n_bins,
        offset: 0,
        start: Phase::Pi,
    }];
    if m >= 2 {
        signals.push(DriveSignal {
            division: n_bins / 2,
            offset: 0,
            start: Phase::Zero,
        });
    }
    for col in 2..m {
        let k = m - col - 1;
        signals.push(DriveSignal {
            division: 1 << (k + 2),
            offset: 1 << k,
            start: Phase::Zero,
        });
    }
    signals.push(DriveSignal {
        division: 2,
        offset: 0,
        start: Phase::Pi,
    });
    Ok(signals)
}

/// Per-switch waveforms over `n_frames` consecutive frames, one sample per bin.
pub fn drive_waveforms(n_bins: usize, n_frames: usize) -> Result<Vec<Vec<Phase>>> {
    let signals = drive_signals(n_bins)?;
    Ok(signals
        .iter()
        .map(|s| (0..n_bins * n_frames).map(|t| s.sample(t)).collect())
        .collect())
}

/// Heralding detector output for one frame; bin `r` is position `r - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct HeraldFrame {
    bits: Vec<bool>,
}

impl HeraldFrame {
    pub fn new(bits: Vec<bool>) -> Self {
        HeraldFrame { bits }
    }

    pub fn empty(n_bins: usize) -> Self {
        HeraldFrame {
            bits: vec![false; n_bins],
        }
    }

    /// Frame with only bin `r` (1-based) set.
    pub fn one_hot(n_bins: usize, r: usize) -> Self {
        let mut frame = Self::empty(n_bins);
        frame.bits[r - 1] = true;
        frame
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Whether bin `r` (1-based) heralded.
    pub fn fired(&self, r: usize) -> bool {
        self.bits[r - 1]
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn reversed(&self) -> Self {
        HeraldFrame {
            bits: self.bits.iter().rev().copied().collect(),
        }
    }
}

impl fmt::Display for HeraldFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for HeraldFrame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::domain(format!("invalid herald bit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(HeraldFrame::new)
    }
}

/// First heralded bin (1-based), if any.
pub fn select_first(frame: &HeraldFrame) -> Option<usize> {
    frame.bits.iter().position(|&b| b).map(|i| i + 1)
}

/// One lookup-table row: `None` entries are don't-cares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LutRow {
    pub input: Vec<Option<bool>>,
    pub output: HeraldFrame,
}

impl LutRow {
    fn matches(&self, frame: &HeraldFrame) -> bool {
        self.input
            .iter()
            .zip(frame.bits())
            .all(|(want, &got)| want.map_or(true, |w| w == got))
    }

    /// Input pattern written with `x` for don't-care bits.
    pub fn pattern(&self) -> String {
        self.input
            .iter()
            .map(|b| match b {
                None => 'x',
                Some(true) => '1',
                Some(false) => '0',
            })
            .collect()
    }
}

/// Lookup table that passes the last heralded photon of a frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LastPhotonLut {
    rows: Vec<LutRow>,
}

impl LastPhotonLut {
    pub fn new(n_bins: usize) -> Self {
        let rows = (1..=n_bins)
            .map(|k| LutRow {
                input: (1..=n_bins)
                    .map(|pos| match pos.cmp(&k) {
                        std::cmp::Ordering::Less => None,
                        std::cmp::Ordering::Equal => Some(true),
                        std::cmp::Ordering::Greater => Some(false),
                    })
                    .collect(),
                output: HeraldFrame::one_hot(n_bins, k),
            })
            .collect();
        LastPhotonLut { rows }
    }

    pub fn rows(&self) -> &[LutRow] {
        &self.rows
    }

    /// Output string for `frame`; all zeros when nothing heralded.
    pub fn lookup(&self, frame: &HeraldFrame) -> HeraldFrame {
        self.rows
            .iter()
            .find(|row| row.matches(frame))
            .map(|row| row.output.clone())
            .unwrap_or_else(|| HeraldFrame::empty(frame.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LastSelection {
    /// One-hot string that opens the decision switch.
    pub output: HeraldFrame,
    pub bin: Option<usize>,
}

/// Last-photon selection through the lookup table.
pub fn select_last(frame: &HeraldFrame) -> LastSelection {
    let output = LastPhotonLut::new(frame.len()).lookup(frame);
    let bin = select_first(&output);
    LastSelection { output, bin }
}
