//! File formats: binary snapshots, CSV side channels, the rate report and
//! its plot.
//!
//! Snapshot layout, all integers and floats little-endian:
//!
//! ```text
//! magic       8 bytes  "QNSNAP01"
//! header_len  u32
//! header      header_len bytes of UTF-8 JSON (SnapshotHeader)
//! records     header.records × [time f64, fields…, diagnostics…]
//! ```
//!
//! Each field occupies `grid_points` f64 values in row-major order (axis 0
//! slowest); field and diagnostic order follows the header name lists.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ep::{Diagnostics, SolveConfig, Trajectory};
use crate::error::{Error, Result};
use crate::limit::{ErrorSeries, RateReport};
use crate::mhd::{MhdDiagnostics, MhdTrajectory};
use crate::models::ModelParams;
use crate::spectral::{Grid, ScalarField};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"QNSNAP01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemTag {
    Ep,
    Mhd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub system: SystemTag,
    pub dim: usize,
    pub n: usize,
    pub grid_points: usize,
    pub params: Option<ModelParams>,
    pub config: SolveConfig,
    pub fields: Vec<String>,
    pub diagnostics: Vec<String>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub time: f64,
    pub fields: Vec<Vec<f64>>,
    pub diagnostics: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub header: SnapshotHeader,
    pub records: Vec<SnapshotRecord>,
}

const EP_FIELDS: [&str; 10] = ["n", "u1", "u2", "u3", "B1", "B2", "B3", "grad_phi1", "grad_phi2", "grad_phi3"];
const EP_DIAGNOSTICS: [&str; 8] = ["mass", "energy", "divB_norm", "n_min", "n_max", "u_max", "B_max", "poisson_residual"];
const MHD_FIELDS: [&str; 7] = ["u1", "u2", "u3", "B1", "B2", "B3", "p"];
const MHD_DIAGNOSTICS: [&str; 5] = ["energy", "cross_helicity", "divu_norm", "divB_norm", "pressure_residual"];

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn write_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_snapshot_file<'a>(
    path: &Path,
    header: &SnapshotHeader,
    records: impl Iterator<Item = (f64, Vec<&'a ScalarField>, Vec<f64>)>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let json = serde_json::to_vec(header)?;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    for (time, fields, diags) in records {
        w.write_all(&time.to_le_bytes())?;
        for f in fields {
            write_f64s(&mut w, f.as_slice())?;
        }
        write_f64s(&mut w, &diags)?;
    }
    w.flush()?;
    Ok(())
}

fn ep_diagnostic_values(d: &Diagnostics) -> Vec<f64> {
    vec![d.mass, d.energy, d.div_b, d.n_min, d.n_max, d.u_max, d.b_max, d.poisson_residual]
}

pub fn write_ep_snapshots(path: &Path, grid: &Grid, params: &ModelParams, config: &SolveConfig, traj: &Trajectory) -> Result<()> {
    let header = SnapshotHeader {
        system: SystemTag::Ep,
        dim: grid.dim(),
        n: grid.n(),
        grid_points: grid.len(),
        params: Some(*params),
        config: *config,
        fields: names(&EP_FIELDS),
        diagnostics: names(&EP_DIAGNOSTICS),
        records: traj.snapshots.len(),
    };
    let records = traj.snapshots.iter().map(|s| {
        let mut fields: Vec<&ScalarField> = s.state.components().to_vec();
        fields.extend(s.grad_phi.c.iter());
        (s.time, fields, ep_diagnostic_values(&s.diagnostics))
    });
    write_snapshot_file(path, &header, records)
}

pub fn write_mhd_snapshots(path: &Path, grid: &Grid, config: &SolveConfig, traj: &MhdTrajectory) -> Result<()> {
    let header = SnapshotHeader {
        system: SystemTag::Mhd,
        dim: grid.dim(),
        n: grid.n(),
        grid_points: grid.len(),
        params: None,
        config: *config,
        fields: names(&MHD_FIELDS),
        diagnostics: names(&MHD_DIAGNOSTICS),
        records: traj.snapshots.len(),
    };
    let records = traj.snapshots.iter().map(|s| {
        let st = &s.state;
        let fields = vec![&st.u.c[0], &st.u.c[1], &st.u.c[2], &st.b.c[0], &st.b.c[1], &st.b.c[2], &st.p];
        let d = &s.diagnostics;
        (s.time, fields, vec![d.energy, d.cross_helicity, d.div_u, d.div_b, d.pressure_residual])
    });
    write_snapshot_file(path, &header, records)
}

fn read_f64s(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated snapshot record: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect())
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for a snapshot header".into()))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)
        .map_err(|_| Error::Format("missing header length".into()))?;
    let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut json)
        .map_err(|_| Error::Format("truncated snapshot header".into()))?;
    let header: SnapshotHeader = serde_json::from_slice(&json)?;
    let mut records = Vec::with_capacity(header.records);
    for _ in 0..header.records {
        let time = read_f64s(&mut r, 1)?[0];
        let fields = (0..header.fields.len())
            .map(|_| read_f64s(&mut r, header.grid_points))
            .collect::<Result<Vec<_>>>()?;
        let diagnostics = read_f64s(&mut r, header.diagnostics.len())?;
        records.push(SnapshotRecord { time, fields, diagnostics });
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after last record", rest.len())));
    }
    Ok(SnapshotFile { header, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    #[serde(rename = "divB_norm")]
    pub div_b_norm: f64,
    pub n_min: f64,
    pub n_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhdDiagnosticsRow {
    pub time: f64,
    pub energy: f64,
    pub cross_helicity: f64,
    #[serde(rename = "divu_norm")]
    pub div_u_norm: f64,
    #[serde(rename = "divB_norm")]
    pub div_b_norm: f64,
    pub pressure_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub time: f64,
    pub err_n: f64,
    pub err_u: f64,
    #[serde(rename = "err_B")]
    pub err_b: f64,
    pub err_total: f64,
    pub mod_energy: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

pub fn write_diagnostics_csv(path: &Path, diagnostics: &[Diagnostics]) -> Result<()> {
    write_rows(
        path,
        diagnostics.iter().map(|d| DiagnosticsRow {
            time: d.time,
            mass: d.mass,
            energy: d.energy,
            div_b_norm: d.div_b,
            n_min: d.n_min,
            n_max: d.n_max,
        }),
    )
}

pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    read_rows(path)
}

pub fn write_mhd_diagnostics_csv(path: &Path, diagnostics: &[MhdDiagnostics]) -> Result<()> {
    write_rows(
        path,
        diagnostics.iter().map(|d| MhdDiagnosticsRow {
            time: d.time,
            energy: d.energy,
            cross_helicity: d.cross_helicity,
            div_u_norm: d.div_u,
            div_b_norm: d.div_b,
            pressure_residual: d.pressure_residual,
        }),
    )
}

pub fn read_mhd_diagnostics_csv(path: &Path) -> Result<Vec<MhdDiagnosticsRow>> {
    read_rows(path)
}

pub fn write_error_series_csv(path: &Path, series: &ErrorSeries) -> Result<()> {
    write_rows(
        path,
        (0..series.times.len()).map(|i| ErrorRow {
            time: series.times[i],
            err_n: series.err_n[i],
            err_u: series.err_u[i],
            err_b: series.err_b[i],
            err_total: series.err_total[i],
            mod_energy: series.energy_series[i],
            d: series.d_series[i],
        }),
    )
}

pub fn read_error_series_csv(path: &Path) -> Result<Vec<ErrorRow>> {
    read_rows(path)
}

pub fn write_report(path: &Path, report: &RateReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<RateReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Log-log plot of `sup_err` against `λ` with the fitted line, as SVG.
pub fn rate_plot_svg(report: &RateReport) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 56.0;
    let pts: Vec<(f64, f64)> = report
        .lambdas
        .iter()
        .zip(&report.sup_errors)
        .filter_map(|(l, e)| e.map(|e| (l.log10(), e.log10())))
        .collect();
    let fit_y = |lx: f64| (report.intercept + report.slope * lx * std::f64::consts::LN_10) / std::f64::consts::LN_10;
    let xs: Vec<f64> = report.lambdas.iter().map(|l| l.log10()).collect();
    let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    ys.push(fit_y(x0));
    ys.push(fit_y(x1));
    let (mut y0, mut y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (mx, my) = (0.05 * (x1 - x0), 0.05 * (y1 - y0));
    let (x0, x1, y0, y1) = (x0 - mx, x1 + mx, y0 - my, y1 + my);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    ));
    for (l, e) in report.lambdas.iter().zip(&report.sup_errors) {
        let x = sx(l.log10());
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{l}</text>\n",
            H - PAD + 16.0
        ));
        if e.is_none() {
            svg.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" fill=\"red\">x</text>\n",
                PAD - 6.0
            ));
        }
    }
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"steelblue\" stroke-dasharray=\"6 4\"/>\n",
        sx(x0),
        sy(fit_y(x0)),
        sx(x1),
        sy(fit_y(x1))
    ));
    for (x, y) in &pts {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"black\"/>\n",
            sx(*x),
            sy(*y)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">lambda (log scale)</text>\n",
        W / 2.0,
        H - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">sup error (log scale)</text>\n",
        H / 2.0,
        H / 2.0
    ));
    svg.push_str(&format!(
        "<text x=\"{PAD}\" y=\"{:.2}\" font-size=\"12\">slope {:.3}, R² {:.4}</text>\n",
        PAD - 20.0,
        report.slope,
        report.r_squared
    ));
    svg.push_str("</svg>\n");
    svg
}

pub fn write_rate_plot(path: &Path, report: &RateReport) -> Result<()> {
    std::fs::write(path, rate_plot_svg(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ep::{run_ep, SolveConfig};
    use crate::limit::LambdaStatus;
    use crate::models::PlasmaState;

    fn short_run() -> (Grid, ModelParams, SolveConfig, Trajectory) {
        let g = Grid::new(2, 16).unwrap();
        let mut s = PlasmaState::quiescent(&g, [0.0; 3]);
        s.b = g.vector_from_fn(|x| [x[1].sin(), 0.0, 0.0]);
        let p = ModelParams::default();
        let cfg = SolveConfig {
            t_end: 0.05,
            sample_interval: 0.025,
            ..SolveConfig::default()
        };
        let traj = run_ep(&g, &s, &p, &cfg).unwrap();
        (g, p, cfg, traj)
    }

    #[test]
    fn snapshot_round_trip() {
        let (g, p, cfg, traj) = short_run();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ep.qns");
        write_ep_snapshots(&path, &g, &p, &cfg, &traj).unwrap();
        let file = read_snapshots(&path).unwrap();
        assert_eq!(file.header.system, SystemTag::Ep);
        assert_eq!(file.header.params, Some(p));
        assert_eq!(file.records.len(), traj.snapshots.len());
        for (rec, snap) in file.records.iter().zip(&traj.snapshots) {
            assert_eq!(rec.time, snap.time);
            assert_eq!(rec.fields[0], snap.state.n.as_slice());
            assert_eq!(rec.fields[4], snap.state.b.c[0].as_slice());
            assert_eq!(rec.fields[8], snap.grad_phi.c[1].as_slice());
            assert_eq!(rec.diagnostics[1], snap.diagnostics.energy);
        }
    }

    #[test]
    fn snapshot_reader_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.qns");
        std::fs::write(&path, b"NOTASNAPSHOT").unwrap();
        assert!(matches!(read_snapshots(&path), Err(Error::Format(_))));

        let (g, p, cfg, traj) = short_run();
        let good = dir.path().join("good.qns");
        write_ep_snapshots(&good, &g, &p, &cfg, &traj).unwrap();
        let bytes = std::fs::read(&good).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_snapshots(&path), Err(Error::Format(_))));
    }

    #[test]
    fn diagnostics_csv_round_trip() {
        let (_, _, _, traj) = short_run();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diag.csv");
        write_diagnostics_csv(&path, &traj.diagnostics).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,mass,energy,divB_norm,n_min,n_max\n"));
        let rows = read_diagnostics_csv(&path).unwrap();
        assert_eq!(rows.len(), traj.diagnostics.len());
        for (r, d) in rows.iter().zip(&traj.diagnostics) {
            assert_eq!(r.energy, d.energy);
            assert_eq!(r.n_max, d.n_max);
        }
    }

    #[test]
    fn error_csv_and_report_round_trip() {
        let mut series = ErrorSeries::empty(0.1, LambdaStatus::Completed);
        series.times = vec![0.0, 0.5];
        series.err_n = vec![0.0, 1e-3];
        series.err_u = vec![0.0, 2e-3];
        series.err_b = vec![0.0, 3e-4];
        series.err_total = vec![0.0, 3.3e-3];
        series.energy_series = vec![0.1, 0.2];
        series.d_series = vec![1.0, 1.5];
        series.sup_err = 3.3e-3;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("err.csv");
        write_error_series_csv(&path, &series).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,err_n,err_u,err_B,err_total,mod_energy,D\n"));
        let rows = read_error_series_csv(&path).unwrap();
        assert_eq!(rows[1].err_total, 3.3e-3);
        assert_eq!(rows[1].d, 1.5);

        let entries: Vec<_> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&l| (l, Some(2.0 * l), LambdaStatus::Completed))
            .collect();
        let report = RateReport::from_entries(&entries, (0.8, 1.3)).unwrap();
        let rp = dir.path().join("report.json");
        write_report(&rp, &report).unwrap();
        assert_eq!(read_report(&rp).unwrap(), report);
        let svg = rate_plot_svg(&report);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
