//! Plot-ready data for the efficiency figures.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::efficiency::{avg_linear_transmission, total_efficiency};
use crate::error::{Error, Result};
use crate::model::{Detection, SchemeConfig, Selection, SourceParams, Topology};
use crate::montecarlo::RNG_ALGORITHM;

pub const FIG3_N_MAX: usize = 128;
/// Switch transmissions of panels a and b.
pub const PANEL_ETA_SW: [(char, f64); 2] = [('a', 0.87), ('b', 0.98)];
pub const FIG3C_LAMBDAS: [f64; 3] = [0.02, 0.06, 0.10];

pub const FIG3AB_HEADER: &str =
    "N,eta_binary_single,eta_binary_array,eta_singleline_single,eta_singleline_array";
pub const FIG3C_HEADER: &str = "N,avglin_lambda0.02,avglin_lambda0.06,avglin_lambda0.10,avglin_control";

const SCHEMES: [(Topology, Detection); 4] = [
    (Topology::BinaryDelay, Detection::SingleDetector),
    (Topology::BinaryDelay, Detection::DetectorArray),
    (Topology::SingleDelayLine, Detection::SingleDetector),
    (Topology::SingleDelayLine, Detection::DetectorArray),
];

fn rows_to_csv(header: &str, rows: &[(usize, Vec<f64>)]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (n, values) in rows {
        out.push_str(&n.to_string());
        for v in values {
            out.push_str(&format!(",{v:.12}"));
        }
        out.push('\n');
    }
    out
}

/// Efficiency of the four schemes against N at the given switch transmission.
pub fn efficiency_panel(params: &SourceParams, eta_sw: f64) -> Result<Vec<(usize, Vec<f64>)>> {
    let p = params.clone().with_eta_sw(eta_sw);
    (1..=FIG3_N_MAX)
        .into_par_iter()
        .map(|n| {
            let etas = SCHEMES
                .iter()
                .map(|&(t, d)| Ok(total_efficiency(&p, &SchemeConfig::new(n, t, d)?)?.eta_total))
                .collect::<Result<Vec<_>>>()?;
            Ok((n, etas))
        })
        .collect()
}

pub fn efficiency_panel_csv(params: &SourceParams, eta_sw: f64) -> Result<String> {
    Ok(rows_to_csv(FIG3AB_HEADER, &efficiency_panel(params, eta_sw)?))
}

/// Mean delay transmission for last-photon selection at each λ, plus the first-photon control.
pub fn avglin_panel(params: &SourceParams) -> Result<Vec<(usize, Vec<f64>)>> {
    (1..=FIG3_N_MAX)
        .map(|n| {
            let mut values = FIG3C_LAMBDAS
                .iter()
                .map(|&l| avg_linear_transmission(params, n, Selection::LastPhoton, l))
                .collect::<Result<Vec<_>>>()?;
            // the control ignores λ
            values.push(avg_linear_transmission(params, n, Selection::FirstPhoton, 0.1)?);
            Ok((n, values))
        })
        .collect()
}

pub fn avglin_panel_csv(params: &SourceParams) -> Result<String> {
    Ok(rows_to_csv(FIG3C_HEADER, &avglin_panel(params)?))
}

#[derive(Debug, Clone, Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    rng_algorithm: &'static str,
    seed: u64,
    parameters: &'a SourceParams,
    panel_eta_sw: Vec<(String, f64)>,
    fig3c_lambdas: &'static [f64],
    n_max: usize,
    files: Vec<&'static str>,
}

pub const FIG3_FILES: [&str; 3] = ["fig3a.csv", "fig3b.csv", "fig3c.csv"];
pub const FIG3_SIDECAR: &str = "fig3.json";

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the three CSV files and the metadata sidecar into `out_dir`.
pub fn emit_fig3(params: &SourceParams, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for (panel, eta_sw) in PANEL_ETA_SW {
        let path = out_dir.join(format!("fig3{panel}.csv"));
        write_file(&path, &efficiency_panel_csv(params, eta_sw)?)?;
        written.push(path);
    }
    let path = out_dir.join("fig3c.csv");
    write_file(&path, &avglin_panel_csv(params)?)?;
    written.push(path);

    let sidecar = Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        rng_algorithm: RNG_ALGORITHM,
        seed,
        parameters: params,
        panel_eta_sw: PANEL_ETA_SW.iter().map(|(c, v)| (format!("fig3{c}"), *v)).collect(),
        fig3c_lambdas: &FIG3C_LAMBDAS,
        n_max: FIG3_N_MAX,
        files: FIG3_FILES.to_vec(),
    };
    let path = out_dir.join(FIG3_SIDECAR);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    write_file(&path, &(json + "\n"))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_and_rows() {
        let csv = efficiency_panel_csv(&SourceParams::default(), 0.87).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(FIG3AB_HEADER));
        assert_eq!(csv.lines().count(), FIG3_N_MAX + 1);
        for line in lines {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols.len(), 5);
            assert!(cols[1..].iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let csv = avglin_panel_csv(&SourceParams::default()).unwrap();
        assert_eq!(csv.lines().next(), Some(FIG3C_HEADER));
    }

    #[test]
    fn binary_beats_single_line_from_eleven_bins() {
        for (_, eta_sw) in PANEL_ETA_SW {
            let rows = efficiency_panel(&SourceParams::default(), eta_sw).unwrap();
            for (n, v) in &rows {
                if *n >= 11 {
                    assert!(v[0] > v[2] && v[1] > v[3], "N={n} {v:?}");
                }
            }
            // short frames average fewer than log2(N)+1 passes on the single line
            let (_, v) = &rows[4];
            assert!(v[2] > v[0]);
            let (_, v) = &rows[9];
            assert!(v[3] > v[1]);
        }
    }

    #[test]
    fn writes_files_with_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_fig3(&SourceParams::default(), 5, dir.path()).unwrap();
        assert_eq!(paths.len(), 4);
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(FIG3_SIDECAR)).unwrap()).unwrap();
        assert_eq!(meta["rng_algorithm"], "ChaCha8");
        assert_eq!(meta["seed"], 5);
        assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(meta["parameters"]["eta_sw"], 0.87);
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        std::fs::write(&file, "x").unwrap();
        let err = emit_fig3(&SourceParams::default(), 1, &file.join("sub")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("occupied"));
    }
}
