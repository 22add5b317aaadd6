//! Plain-text writers for runs, sweeps and mode tables.
//!
//! Floats are written with 17 significant digits so that every value reads back
//! bit-for-bit. Column layouts are fixed per `SCHEMA_VERSION`.

use crate::config::ConfigDocument;
use crate::dynamics::{RunOutput, Snapshot};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::modes::ModeResult;
use crate::scenarios::Sweep;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Bumped whenever a header or column meaning changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const SERIES_FIXED_COLUMNS: [&str; 2] = ["step", "tau"];
pub const EDGE_SNAPSHOT_HEADER: &str = "i,j,k,axis,value";
pub const VERTEX_SNAPSHOT_HEADER: &str = "i,j,k,value";
pub const MODES_HEADER: &str = "index,eigenvalue,mode_number,curl_fraction,residual";
pub const FACE_FLUX_HEADER: &str = "i,j,k,normal,value";
pub const SWEEP_HEADER: &str = "value,amplitude";

const AXES: [&str; 3] = ["x", "y", "z"];

/// Shortest-exact decimal text for a float: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn series_header(labels: &[String]) -> String {
    let mut cols: Vec<&str> = SERIES_FIXED_COLUMNS.to_vec();
    cols.extend(labels.iter().map(String::as_str));
    cols.join(",")
}

pub fn series_csv(out: &RunOutput) -> String {
    let mut s = series_header(&out.labels);
    s.push('\n');
    for r in &out.rows {
        let _ = write!(s, "{},{}", r.step, fmt_f64(r.tau));
        for v in &r.values {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

pub fn edge_snapshot_csv(mesh: &Mesh, phi: &[f64]) -> String {
    let mut s = String::from(EDGE_SNAPSHOT_HEADER);
    s.push('\n');
    for (e, v) in phi.iter().enumerate() {
        let (a, p) = mesh.edge_coords(e);
        let _ = writeln!(s, "{},{},{},{},{}", p[0], p[1], p[2], AXES[a], fmt_f64(*v));
    }
    s
}

pub fn vertex_snapshot_csv(mesh: &Mesh, values: &[f64]) -> String {
    let mut s = String::from(VERTEX_SNAPSHOT_HEADER);
    s.push('\n');
    for (v, x) in values.iter().enumerate() {
        let p = mesh.vertex_coords(v);
        let _ = writeln!(s, "{},{},{},{}", p[0], p[1], p[2], fmt_f64(*x));
    }
    s
}

pub fn face_flux_csv(mesh: &Mesh, flux: &[f64]) -> String {
    let mut s = String::from(FACE_FLUX_HEADER);
    s.push('\n');
    for (f, x) in flux.iter().enumerate() {
        let (n, p) = mesh.face_coords(f);
        let _ = writeln!(s, "{},{},{},{},{}", p[0], p[1], p[2], AXES[n], fmt_f64(*x));
    }
    s
}

pub fn modes_csv(modes: &[ModeResult], length: f64) -> String {
    let mut s = String::from(MODES_HEADER);
    s.push('\n');
    for (i, m) in modes.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            i,
            fmt_f64(m.eigenvalue),
            fmt_f64(m.normalized(length)),
            fmt_f64(m.curl_fraction),
            fmt_f64(m.residual)
        );
    }
    s
}

pub fn sweep_csv(sweep: &Sweep) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for (v, a) in &sweep.points {
        let _ = writeln!(s, "{},{}", fmt_f64(*v), fmt_f64(*a));
    }
    s
}

/// Run metadata, conservation diagnostics and per-probe extrema.
pub fn run_summary(doc: &ConfigDocument, out: &RunOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fluxdec {} run summary", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "schema = {SCHEMA_VERSION}");
    let _ = writeln!(s, "cells = {:?}", doc.grid.cells);
    let _ = writeln!(s, "spacing = {:?}", doc.grid.spacing);
    let _ = writeln!(s, "dt = {}", fmt_f64(doc.time.dt));
    let _ = writeln!(s, "steps = {}", doc.time.steps);
    let _ = writeln!(s, "eta = {}", fmt_f64(doc.scales.eta));
    let _ = writeln!(s, "final_tau = {}", fmt_f64(out.final_state.tau));
    let _ = writeln!(s, "charge_initial = {}", fmt_f64(out.charge_initial));
    let _ = writeln!(s, "charge_final = {}", fmt_f64(out.charge_final));
    let _ = writeln!(s, "charge_drift = {}", fmt_f64(out.charge_final - out.charge_initial));
    let _ = writeln!(s, "energy_initial = {}", fmt_f64(out.energy_initial));
    let _ = writeln!(s, "energy_final = {}", fmt_f64(out.energy_final));
    let _ = writeln!(s, "snapshots = {}", out.snapshots.len());
    for label in &out.labels {
        let col = out.column(label).unwrap_or_default();
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let last = col.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(s, "probe {label}: min = {} max = {} final = {}", fmt_f64(min), fmt_f64(max), fmt_f64(last));
    }
    s
}

fn snapshot_name(kind: &str, snap: &Snapshot) -> String {
    format!("{kind}_{:08}.csv", snap.step)
}

/// Writes `series.csv`, `snapshots/`, `summary.txt` and the resolved `config.toml`.
pub fn write_run(dir: &Path, doc: &ConfigDocument, mesh: &Mesh, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), doc.render()?)?;
    fs::write(dir.join("series.csv"), series_csv(out))?;
    if !out.snapshots.is_empty() {
        let snaps = dir.join("snapshots");
        fs::create_dir_all(&snaps)?;
        for snap in &out.snapshots {
            fs::write(snaps.join(snapshot_name("phi", snap)), edge_snapshot_csv(mesh, &snap.phi))?;
            fs::write(snaps.join(snapshot_name("drho", snap)), vertex_snapshot_csv(mesh, &snap.drho))?;
        }
    }
    fs::write(dir.join("summary.txt"), run_summary(doc, out))?;
    Ok(())
}

/// Writes `modes.csv` and one face-flux map per mode.
pub fn write_modes(dir: &Path, doc: &ConfigDocument, mesh: &Mesh, modes: &[ModeResult], length: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), doc.render()?)?;
    fs::write(dir.join("modes.csv"), modes_csv(modes, length))?;
    for (i, m) in modes.iter().enumerate() {
        let flux = crate::modes::mode_face_flux(mesh, m);
        fs::write(dir.join(format!("mode_{i:02}_face_flux.csv")), face_flux_csv(mesh, &flux))?;
    }
    Ok(())
}

pub fn write_sweep(dir: &Path, doc: &ConfigDocument, sweep: &Sweep) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), doc.render()?)?;
    fs::write(dir.join("sweep.csv"), sweep_csv(sweep))?;
    let (v, a) = sweep.points[sweep.argmax];
    fs::write(
        dir.join("summary.txt"),
        format!(
            "fluxdec {} sweep summary\nschema = {SCHEMA_VERSION}\npoints = {}\nargmax = {}\npeak_value = {}\npeak_amplitude = {}\n",
            env!("CARGO_PKG_VERSION"),
            sweep.points.len(),
            sweep.argmax,
            fmt_f64(v),
            fmt_f64(a)
        ),
    )?;
    Ok(())
}
