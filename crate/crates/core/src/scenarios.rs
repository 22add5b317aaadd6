//! Named setups and the observables computed from their runs.
//!
//! Every scenario is a [`ConfigDocument`] with overridable numeric parameters, so the
//! same geometry can be run from the command line or from tests.

use crate::config::*;
use crate::dynamics::{cfl_max_dt, eta_max_dt, RunOutput};
use crate::error::{Error, Result};
use crate::fields::{Profile, Scales};
use crate::junction::thin_limit_jc;
use crate::mesh::Mesh;
use crate::modes::CavitySpec;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::f64::consts::PI;

pub const CATALOG: [&str; 8] = [
    "dipole_cavity",
    "meissner_cuboid",
    "fluxq_2d_tube",
    "fluxq_3d_loop",
    "fluxq_side_loop",
    "jj_current_phase",
    "jj_ac_drive",
    "waveguide_1d",
];

/// Parameter names and defaults of a scenario.
pub fn default_params(name: &str) -> Result<Vec<(&'static str, f64)>> {
    let eta = Scales::physical_eta(100e-9);
    Ok(match name {
        "dipole_cavity" => vec![
            ("size", 20.0),
            ("wall", 3.0),
            ("h", 0.5),
            ("wavelength", 5.0),
            ("length", 2.0),
            ("q0", 1.0),
            ("periods", 12.0),
            ("eta", 0.0),
        ],
        "meissner_cuboid" => vec![
            ("side", 8.0),
            ("margin", 2.0),
            ("gap", 0.5),
            ("coil_height", 8.0),
            ("h", 0.25),
            ("current", 1.0),
            ("t_ramp", 20.0),
            ("t_total", 300.0),
            ("eta", eta),
        ],
        "fluxq_2d_tube" => vec![
            ("outer", 10.0),
            ("thickness", 2.0),
            ("margin", 2.0),
            ("h", 0.5),
            ("coil", 2.0),
            ("jc", 0.005),
            ("rate", 0.0008),
            ("t_total", 1500.0),
            ("eta", eta),
        ],
        "fluxq_3d_loop" => vec![
            ("outer", 8.0),
            ("hole", 4.0),
            ("margin", 2.0),
            ("h", 0.5),
            ("coil", 2.0),
            ("jc", 0.005),
            ("rate", 0.006),
            ("t_total", 400.0),
            ("eta", eta),
        ],
        "fluxq_side_loop" => vec![
            ("outer", 12.0),
            ("thickness", 4.0),
            ("height", 4.0),
            ("margin", 2.0),
            ("h", 0.5),
            ("coil", 4.0),
            ("jc", 0.005),
            ("rate", 0.2),
            ("t_total", 400.0),
            ("eta", eta),
        ],
        "jj_current_phase" => vec![
            ("n_edges", 8.0),
            ("half_width", 0.5),
            ("lambda_weak", 10.0),
            ("electrode", 4.0),
            ("rate_factor", 1.0),
            ("drive_end", 0.98),
            ("hold", 0.0),
            ("eta", 0.2),
        ],
        "jj_ac_drive" => vec![
            ("n_edges", 8.0),
            ("half_width", 0.5),
            ("lambda_weak", 10.0),
            ("electrode", 4.0),
            ("omega", 0.1),
            ("drive", 0.05),
            ("periods", 30.0),
            ("eta", eta),
        ],
        "waveguide_1d" => vec![
            ("gap", 1.0),
            ("lambda", 1.0),
            ("length", 200.0),
            ("hx", 0.25),
            ("width", 8.0),
            ("t_total", 60.0),
            ("eta", 0.0),
        ],
        _ => return Err(Error::Scenario(format!("unknown scenario '{name}'; known: {}", CATALOG.join(", ")))),
    })
}

struct Args {
    values: Vec<(&'static str, f64)>,
}

impl Args {
    fn new(name: &str, given: &Params) -> Result<Self> {
        let mut values = default_params(name)?;
        for (k, v) in given {
            match values.iter_mut().find(|(n, _)| n == k) {
                Some(slot) => slot.1 = *v,
                None => {
                    let known: Vec<&str> = values.iter().map(|x| x.0).collect();
                    return Err(Error::Scenario(format!(
                        "{name}: unknown parameter '{k}'; known: {}",
                        known.join(", ")
                    )));
                }
            }
        }
        for (k, v) in &values {
            let ok = if matches!(*k, "eta" | "hold") { *v >= 0.0 } else { *v > 0.0 };
            if !v.is_finite() || !ok {
                return Err(Error::Scenario(format!("{name}: parameter '{k}' out of range: {v}")));
            }
        }
        Ok(Self { values })
    }

    fn get(&self, k: &str) -> f64 {
        self.values.iter().find(|(n, _)| *n == k).map(|x| x.1).expect("parameter declared in defaults")
    }

    /// Parameter as a whole number of cells of size `h`.
    fn cells(&self, k: &str, h: f64) -> Result<usize> {
        let n = self.get(k) / h;
        if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
            return Err(Error::Scenario(format!(
                "parameter '{k}' = {} is not a whole number of cells of {h}",
                self.get(k)
            )));
        }
        Ok(n.round() as usize)
    }

    fn count(&self, k: &str) -> Result<usize> {
        let n = self.get(k);
        if n.fract() != 0.0 {
            return Err(Error::Scenario(format!("parameter '{k}' must be an integer, got {n}")));
        }
        Ok(n as usize)
    }
}

fn scales(eta: f64) -> ScalesSection {
    ScalesSection { eta, ..ScalesSection::default() }
}

fn steps_for(t_total: f64, dt: f64) -> usize {
    (t_total / dt).ceil() as usize
}

/// Largest step that is stable for both the wave and the density updates.
fn max_dt(cells: [usize; 3], spacing: [f64; 3], eta: f64) -> Result<f64> {
    let mesh = crate::mesh::build_grid(crate::mesh::GridSpec::new(cells, spacing))?;
    Ok(cfl_max_dt(&mesh).min(eta_max_dt(&mesh, eta)))
}

fn paint(name: &str, lambda: f64, lo: [f64; 3], hi: [f64; 3]) -> Paint {
    Paint { name: name.into(), lambda, lo, hi }
}

fn sc_wall() -> Material {
    Material::superconductor("sc", 1.0)
}

/// Expands a catalog name and parameters into a full document.
pub fn build_scenario(name: &str, params: &Params) -> Result<ConfigDocument> {
    let a = Args::new(name, params)?;
    match name {
        "dipole_cavity" => dipole_cavity(&a),
        "meissner_cuboid" => meissner_cuboid(&a),
        "fluxq_2d_tube" => fluxq_2d_tube(&a),
        "fluxq_3d_loop" => fluxq_3d_loop(&a),
        "fluxq_side_loop" => fluxq_side_loop(&a),
        "jj_current_phase" => jj_chain(&a, false),
        "jj_ac_drive" => jj_chain(&a, true),
        "waveguide_1d" => waveguide_1d(&a),
        _ => unreachable!("checked by Args::new"),
    }
}

fn dipole_cavity(a: &Args) -> Result<ConfigDocument> {
    let h = a.get("h");
    let (nsize, nwall, nlen) = (a.cells("size", h)?, a.cells("wall", h)?, a.cells("length", h)?);
    let n = nsize + 2 * nwall;
    let cells = [n, 1, n];
    let spacing = [h; 3];
    let dt = max_dt(cells, spacing, a.get("eta"))?;
    let omega = 2.0 * PI / a.get("wavelength");
    let lo = nwall as f64 * h;
    let hi = lo + nsize as f64 * h;
    let c = n / 2;
    let probe_at = c + (0.25 * nsize as f64) as usize;
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection {
            background: sc_wall(),
            paint: vec![paint("vacuum", 0.0, [lo, 0.0, lo], [hi, h, hi])],
        },
        scales: scales(a.get("eta")),
        time: TimeSection { dt, steps: steps_for(a.get("periods") * 2.0 * PI / omega, dt) },
        sources: SourcesSection {
            dipoles: vec![DipoleDrive {
                axis: Axis::Z,
                start: [c, 0, c - nlen / 2],
                count: nlen,
                q0: a.get("q0"),
                omega,
            }],
            ..Default::default()
        },
        junctions: vec![],
        probes: vec![
            ProbeEntry::EdgeFlux { label: "flux_center".into(), axis: Axis::Z, at: [c, 0, c] },
            ProbeEntry::EdgeFlux { label: "flux_probe".into(), axis: Axis::Z, at: [probe_at, 0, c] },
            ProbeEntry::Energy { label: "energy".into() },
        ],
        output: OutputSection { every: 1, snapshot_every: 0 },
        initial: None,
        modes: None,
        sweep: None,
    })
}

fn meissner_cuboid(a: &Args) -> Result<ConfigDocument> {
    let h = a.get("h");
    let (ns, nm, ng) = (a.cells("side", h)?, a.cells("margin", h)?, a.cells("gap", h)?);
    if ng >= nm {
        return Err(Error::Scenario("meissner_cuboid: gap must be smaller than margin".into()));
    }
    let n = ns + 2 * nm;
    let cells = [n; 3];
    let spacing = [h; 3];
    let dt = max_dt(cells, spacing, a.get("eta"))?;
    let (lo, hi) = (nm as f64 * h, (nm + ns) as f64 * h);
    let c = n / 2;
    let t_ramp = a.get("t_ramp");
    let profile = Profile::RampHold { rate: 1.0 / t_ramp, t_hold: t_ramp };
    let steps = steps_for(a.get("t_total"), dt);
    // a band of turns centred on the cube; the total current is shared between them
    let turns = a.cells("coil_height", h)? + 1;
    if turns > n - 1 {
        return Err(Error::Scenario("meissner_cuboid: coil is taller than the domain".into()));
    }
    let loops: Vec<LoopDrive> = (0..turns)
        .map(|t| LoopDrive {
            normal: Axis::Z,
            corner: [nm - ng, nm - ng, c + t - turns / 2],
            size: [ns + 2 * ng, ns + 2 * ng],
            amplitude: a.get("current") / turns as f64,
            profile,
        })
        .collect();
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection { background: Material::vacuum(), paint: vec![paint("sc", 1.0, [lo; 3], [hi; 3])] },
        scales: scales(a.get("eta")),
        time: TimeSection { dt, steps },
        sources: SourcesSection { loops, ..Default::default() },
        junctions: vec![],
        probes: vec![
            // middle of a side face, and the vertical edge of the cube at mid height
            ProbeEntry::EdgeCurrent { label: "current_x_point".into(), axis: Axis::Y, at: [nm, c, c] },
            ProbeEntry::EdgeCurrent { label: "current_m_point".into(), axis: Axis::X, at: [nm, nm, c] },
            ProbeEntry::VertexCharge { label: "charge_top_corner".into(), at: [nm + 1, nm + 1, nm + ns] },
            ProbeEntry::Energy { label: "energy".into() },
            ProbeEntry::TotalCharge { label: "total_charge".into() },
        ],
        output: OutputSection { every: 1, snapshot_every: (steps / 40).max(1) },
        initial: None,
        modes: None,
        sweep: None,
    })
}

fn fluxq_2d_tube(a: &Args) -> Result<ConfigDocument> {
    let h = a.get("h");
    let (no, nt, nm, nc) = (a.cells("outer", h)?, a.cells("thickness", h)?, a.cells("margin", h)?, a.cells("coil", h)?);
    if 2 * nt + nc + 2 > no {
        return Err(Error::Scenario("fluxq_2d_tube: coil does not fit inside the hole".into()));
    }
    let n = no + 2 * nm;
    let cells = [n, 1, n];
    let spacing = [h; 3];
    let dt = max_dt(cells, spacing, a.get("eta"))?;
    let p = |k: usize| k as f64 * h;
    let c = n / 2;
    // wall vertex rows are nm..nm+nt-1 on the left and nm+no-nt+1..nm+no on the right
    let mid_left = nm + nt / 2;
    let mid_right = nm + no - nt / 2;
    let right_wall = nm + no - nt + 1;
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection {
            background: Material::vacuum(),
            paint: vec![
                paint("sc", 1.0, [p(nm), 0.0, p(nm)], [p(nm + no), h, p(nm + no)]),
                paint("vacuum", 0.0, [p(nm + nt), 0.0, p(nm + nt)], [p(nm + no - nt), h, p(nm + no - nt)]),
            ],
        },
        scales: scales(a.get("eta")),
        time: TimeSection { dt, steps: steps_for(a.get("t_total"), dt) },
        sources: SourcesSection {
            loops: vec![LoopDrive {
                normal: Axis::Y,
                corner: [c - nc / 2, 0, c - nc / 2],
                size: [nc, nc],
                amplitude: 1.0,
                profile: Profile::LinearRamp { rate: a.get("rate") },
            }],
            ..Default::default()
        },
        junctions: vec![JunctionEntry {
            label: "slit".into(),
            model: JunctionModelEntry::Imposed { jc: a.get("jc") },
            paths: (right_wall..=nm + no).map(|i| Line::new(Axis::Z, [i, 0, c], 1)).collect(),
            per_edge: true,
            half_width: 0.5 * h,
            rho1: 1.0,
            rho2: 1.0,
        }],
        probes: vec![
            ProbeEntry::Fluxoid {
                label: "fluxoid".into(),
                normal: Axis::Y,
                lo: [mid_left, 0, mid_left],
                hi: [mid_right - 1, 0, mid_right - 1],
                path: Some(Line::new(Axis::Z, [mid_right, 0, c], 1)),
                sign: 1.0,
            },
            ProbeEntry::Fluxoid {
                label: "hole_flux".into(),
                normal: Axis::Y,
                lo: [nm + nt, 0, nm + nt],
                hi: [nm + no - nt - 1, 0, nm + no - nt - 1],
                path: None,
                sign: 1.0,
            },
            ProbeEntry::JunctionPhase { label: "slit_phase".into(), path: Line::new(Axis::Z, [mid_right, 0, c], 1) },
            ProbeEntry::Energy { label: "energy".into() },
        ],
        output: OutputSection { every: 1, snapshot_every: 0 },
        initial: None,
        modes: None,
        sweep: None,
    })
}

fn fluxq_3d_loop(a: &Args) -> Result<ConfigDocument> {
    let h = a.get("h");
    let (no, nh, nm, nc) = (a.cells("outer", h)?, a.cells("hole", h)?, a.cells("margin", h)?, a.cells("coil", h)?);
    if nh >= no || nc + 2 > nh || (no - nh) % 2 != 0 {
        return Err(Error::Scenario("fluxq_3d_loop: need coil < hole < outer with an even wall".into()));
    }
    let nt = (no - nh) / 2;
    let n = no + 2 * nm;
    let cells = [n; 3];
    let spacing = [h; 3];
    let dt = max_dt(cells, spacing, a.get("eta"))?;
    let p = |k: usize| k as f64 * h;
    let c = n / 2;
    let ext = p(n);
    let mid_left = nm + nt / 2;
    let mid_right = nm + no - nt / 2;
    let right_wall = nm + no - nt + 1;
    // solenoid: one loop per z layer through the body
    let loops = (nm..=nm + no)
        .map(|k| LoopDrive {
            normal: Axis::Z,
            corner: [c - nc / 2, c - nc / 2, k],
            size: [nc, nc],
            amplitude: 1.0,
            profile: Profile::LinearRamp { rate: a.get("rate") },
        })
        .collect();
    let slit =
        (nm..=nm + no).flat_map(|k| (right_wall..=nm + no).map(move |i| Line::new(Axis::Y, [i, c, k], 1))).collect();
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection {
            background: Material::vacuum(),
            paint: vec![
                paint("sc", 1.0, [p(nm); 3], [p(nm + no); 3]),
                paint("vacuum", 0.0, [p(nm + nt), p(nm + nt), 0.0], [p(nm + no - nt), p(nm + no - nt), ext]),
            ],
        },
        scales: scales(a.get("eta")),
        time: TimeSection { dt, steps: steps_for(a.get("t_total"), dt) },
        sources: SourcesSection { loops, ..Default::default() },
        junctions: vec![JunctionEntry {
            label: "slit".into(),
            model: JunctionModelEntry::Imposed { jc: a.get("jc") },
            paths: slit,
            per_edge: true,
            half_width: 0.5 * h,
            rho1: 1.0,
            rho2: 1.0,
        }],
        probes: vec![
            ProbeEntry::Fluxoid {
                label: "fluxoid".into(),
                normal: Axis::Z,
                lo: [mid_left, mid_left, c],
                hi: [mid_right - 1, mid_right - 1, c],
                path: Some(Line::new(Axis::Y, [mid_right, c, c], 1).reversed()),
                sign: 1.0,
            },
            ProbeEntry::Energy { label: "energy".into() },
        ],
        output: OutputSection { every: 1, snapshot_every: 0 },
        initial: None,
        modes: None,
        sweep: None,
    })
}

fn fluxq_side_loop(a: &Args) -> Result<ConfigDocument> {
    let h = a.get("h");
    let (no, nt, nz, nm, nc) = (
        a.cells("outer", h)?,
        a.cells("thickness", h)?,
        a.cells("height", h)?,
        a.cells("margin", h)?,
        a.cells("coil", h)?,
    );
    if 2 * nt >= no {
        return Err(Error::Scenario("fluxq_side_loop: walls leave no hole".into()));
    }
    // ring at x, y in [margin, margin + outer]; coil to its right
    let nx = no + 3 * nm + nc;
    let ny = no + 2 * nm;
    let nzt = nz + 2 * nm;
    let cells = [nx, ny, nzt];
    let spacing = [h; 3];
    let dt = max_dt(cells, spacing, a.get("eta"))?;
    let p = |k: usize| k as f64 * h;
    let cy = ny / 2;
    let cz = nzt / 2;
    let mid_left = nm + nt / 2;
    let mid_right = nm + no - nt / 2;
    let slit = (nm..=nm + nz).flat_map(|k| (nm..nm + nt).map(move |i| Line::new(Axis::Y, [i, cy, k], 1))).collect();
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection {
            background: Material::vacuum(),
            paint: vec![
                paint("sc", 1.0, [p(nm), p(nm), p(nm)], [p(nm + no), p(nm + no), p(nm + nz)]),
                paint("vacuum", 0.0, [p(nm + nt), p(nm + nt), 0.0], [p(nm + no - nt), p(nm + no - nt), p(nzt)]),
            ],
        },
        scales: scales(a.get("eta")),
        time: TimeSection { dt, steps: steps_for(a.get("t_total"), dt) },
        sources: SourcesSection {
            loops: vec![LoopDrive {
                normal: Axis::Z,
                corner: [no + 2 * nm, cy - nc / 2, cz],
                size: [nc, nc],
                amplitude: 1.0,
                profile: Profile::LinearRamp { rate: a.get("rate") },
            }],
            ..Default::default()
        },
        junctions: vec![JunctionEntry {
            label: "slit".into(),
            model: JunctionModelEntry::Imposed { jc: a.get("jc") },
            paths: slit,
            per_edge: true,
            half_width: 0.5 * h,
            rho1: 1.0,
            rho2: 1.0,
        }],
        probes: vec![
            ProbeEntry::Fluxoid {
                label: "fluxoid".into(),
                normal: Axis::Z,
                lo: [mid_left, mid_left, cz],
                hi: [mid_right - 1, mid_right - 1, cz],
                path: Some(Line::new(Axis::Y, [mid_left, cy, cz], 1)),
                sign: 1.0,
            },
            ProbeEntry::Energy { label: "energy".into() },
        ],
        output: OutputSection { every: 1, snapshot_every: 0 },
        initial: None,
        modes: None,
        sweep: None,
    })
}

/// Weak superconducting layer between two electrodes, reduced to one dimension along z.
fn jj_chain(a: &Args, ac: bool) -> Result<ConfigDocument> {
    let nj = a.count("n_edges")?;
    if nj == 0 {
        return Err(Error::Scenario("n_edges must be at least 1".into()));
    }
    let half = a.get("half_width");
    let hz = 2.0 * half / nj as f64;
    let ne = (a.get("electrode") / hz).round().max(1.0) as usize;
    let nz = nj + 2 * ne;
    let cells = [1, 1, nz];
    let spacing = [1.0, 1.0, hz];
    let dt = max_dt(cells, spacing, a.get("eta"))?;
    let lw = a.get("lambda_weak");
    let rho_weak = 1.0 / (lw * lw);
    let jc = thin_limit_jc(rho_weak, rho_weak, half);
    let omega_j = rho_weak.sqrt();
    let z0 = ne as f64 * hz;
    // a z edge of a chain invariant in x and y has dual area ¼·hx·hy
    let dual_area = 0.25;
    let (profile, amplitude, t_total) = if ac {
        let omega = a.get("omega");
        (Profile::Sinusoid { omega }, a.get("drive") * jc * dual_area, a.get("periods") * 2.0 * PI / omega)
    } else {
        let rate = 0.1 * omega_j * a.get("rate_factor");
        let t_hold = a.get("drive_end") / rate;
        let profile =
            if a.get("hold") > 0.0 { Profile::RampHold { rate, t_hold } } else { Profile::LinearRamp { rate } };
        (profile, jc * dual_area, t_hold + a.get("hold"))
    };
    let steps = steps_for(t_total, dt);
    let across = Line::new(Axis::Z, [0, 0, ne], nj);
    let centre = Line::new(Axis::Z, [0, 0, ne + nj / 2], 1);
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection {
            background: Material::superconductor("electrode", 1.0),
            // closed box: every edge across the barrier carries the weak density
            paint: vec![paint("weak", lw, [0.0, 0.0, z0], [1.0, 1.0, z0 + 2.0 * half])],
        },
        scales: scales(a.get("eta")),
        time: TimeSection { dt, steps },
        sources: SourcesSection {
            lines: vec![LineDrive { axis: Axis::Z, start: [0, 0, 0], count: nz, amplitude, profile }],
            ..Default::default()
        },
        junctions: vec![JunctionEntry {
            label: "jj".into(),
            model: JunctionModelEntry::AbInitio { region: "weak".into() },
            paths: vec![across.clone()],
            per_edge: false,
            half_width: half,
            rho1: rho_weak,
            rho2: rho_weak,
        }],
        probes: vec![
            ProbeEntry::JunctionPhase { label: "phase".into(), path: across },
            ProbeEntry::JunctionCurrent { label: "current".into(), edges: centre },
            ProbeEntry::TotalCharge { label: "total_charge".into() },
        ],
        output: OutputSection { every: 1, snapshot_every: if ac { 0 } else { (steps / 50).max(1) } },
        initial: None,
        modes: None,
        sweep: None,
    })
}

/// Config document for the square cavity eigenproblem, matching `CavitySpec::build`.
pub fn cavity_document(spec: &CavitySpec, count: usize) -> Result<ConfigDocument> {
    let h = spec.spacing();
    let wall = spec.wall_cells();
    let n = spec.cells + 2 * wall;
    let cells = [n, 1, n];
    let spacing = [h; 3];
    let (background, paint) = if wall > 0 {
        let lo = wall as f64 * h;
        let hi = lo + spec.side();
        (Material::superconductor("wall", 1.0), vec![self::paint("vacuum", 0.0, [lo, 0.0, lo], [hi, h, hi])])
    } else {
        (Material::vacuum(), vec![])
    };
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection { background, paint },
        scales: scales(0.0),
        time: TimeSection { dt: max_dt(cells, spacing, 0.0)?, steps: 0 },
        sources: SourcesSection::default(),
        junctions: vec![],
        probes: vec![],
        output: OutputSection::default(),
        initial: None,
        modes: Some(ModesSection { count, length: spec.side(), shift: None, min_curl_fraction: 0.5 }),
        sweep: None,
    })
}

/// Two superconducting plates with a vacuum gap, invariant in y; a pulse travels along x.
fn waveguide_1d(a: &Args) -> Result<ConfigDocument> {
    let d = a.get("gap");
    let hz = d / 4.0;
    let hx = a.get("hx");
    let nx = a.cells("length", hx)?;
    let cells = [nx, 1, 12];
    let spacing = [hx, hx, hz];
    let dt = max_dt(cells, spacing, a.get("eta"))?;
    let length = nx as f64 * hx;
    Ok(ConfigDocument {
        grid: GridSection { cells, spacing },
        regions: RegionsSection {
            background: Material::superconductor("plate", a.get("lambda")),
            paint: vec![paint("vacuum", 0.0, [0.0, 0.0, d + 0.5 * hz], [length, hx, 2.0 * d - 0.5 * hz])],
        },
        scales: scales(a.get("eta")),
        time: TimeSection { dt, steps: steps_for(a.get("t_total"), dt) },
        sources: SourcesSection::default(),
        junctions: vec![],
        probes: vec![ProbeEntry::Energy { label: "energy".into() }],
        output: OutputSection { every: 1, snapshot_every: ((1.0 / dt).round() as usize).max(1) },
        initial: Some(InitialSection {
            fills: vec![Fill {
                axis: Axis::Z,
                lo: [0.0, 0.0, d],
                hi: [length, hx, 2.0 * d],
                amplitude: 1.0,
                prev_amplitude: None,
                shape: Shape::Gaussian { along: Axis::X, center: 0.5 * length, width: a.get("width") },
            }],
        }),
        modes: None,
        sweep: None,
    })
}

/// Builds and runs a document.
pub fn run_document(doc: &ConfigDocument) -> Result<RunOutput> {
    let setup = doc.build()?;
    let mut solver = setup.solver()?;
    crate::dynamics::run_solver(&mut solver)
}

/// Same document with every drive of the swept kind set to `value`.
pub fn with_parameter(doc: &ConfigDocument, parameter: SweepParameter, value: f64) -> ConfigDocument {
    let mut out = doc.clone();
    let set = |p: &mut Profile| match (parameter, p) {
        (SweepParameter::Omega, Profile::Sinusoid { omega } | Profile::Dipole { omega }) => *omega = value,
        (SweepParameter::Rate, Profile::LinearRamp { rate } | Profile::RampHold { rate, .. }) => *rate = value,
        _ => {}
    };
    out.sources.lines.iter_mut().for_each(|d| set(&mut d.profile));
    out.sources.loops.iter_mut().for_each(|d| set(&mut d.profile));
    out.sources.charges.iter_mut().for_each(|d| set(&mut d.profile));
    if parameter == SweepParameter::Omega {
        out.sources.dipoles.iter_mut().for_each(|d| d.omega = value);
    }
    out
}

/// Largest |x| over the second half of a series.
pub fn late_amplitude(series: &[f64]) -> f64 {
    series[series.len() / 2..].iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<(f64, f64)>,
    /// Index of the largest amplitude.
    pub argmax: usize,
}

/// Runs the document once per value (in parallel) and records the late amplitude of a probe.
pub fn resonance_sweep(doc: &ConfigDocument, parameter: SweepParameter, values: &[f64], probe: &str) -> Result<Sweep> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let points: Vec<(f64, f64)> = values
        .par_iter()
        .map(|&v| {
            let out = run_document(&with_parameter(doc, parameter, v))?;
            let col = out.column(probe).ok_or_else(|| Error::Probe(format!("no probe named '{probe}'")))?;
            Ok((v, late_amplitude(&col)))
        })
        .collect::<Result<_>>()?;
    let argmax = (0..points.len()).fold(0, |best, i| if points[i].1 > points[best].1 { i } else { best });
    Ok(Sweep { points, argmax })
}

/// Share of samples within `tol` of an integer.
pub fn plateau_fraction(values: &[f64], tol: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|x| (*x - x.round()).abs() <= tol).count() as f64 / values.len() as f64
}

/// Integers held for at least `min_run` consecutive samples within `tol`.
pub fn plateau_levels(values: &[f64], tol: f64, min_run: usize) -> BTreeSet<i64> {
    let mut out = BTreeSet::new();
    let mut run = 0;
    let mut level = i64::MIN;
    for x in values {
        let n = x.round();
        if (x - n).abs() <= tol && n as i64 == level {
            run += 1;
        } else if (x - n).abs() <= tol {
            level = n as i64;
            run = 1;
        } else {
            level = i64::MIN;
            run = 0;
        }
        if run >= min_run {
            out.insert(level);
        }
    }
    out
}

/// Penetration depth from an exponential fit of |field| against depth.
///
/// Uses samples with depth ≥ 1, minus the last two, which sit nearest the far side.
pub fn decay_length_fit(depths: &[f64], values: &[f64]) -> Result<f64> {
    if depths.len() != values.len() {
        return Err(Error::Fit("depth and value counts differ".into()));
    }
    let mut window: Vec<(f64, f64)> =
        depths.iter().copied().zip(values.iter().map(|v| v.abs())).filter(|(d, _)| *d >= 1.0).collect();
    window.truncate(window.len().saturating_sub(2));
    if window.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples in the fit window, have {}", window.len())));
    }
    if let Some((d, v)) = window.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Fit(format!("non-positive sample {v} at depth {d}")));
    }
    if window.windows(2).any(|w| w[1].1 > w[0].1) {
        return Err(Error::Fit("profile does not decrease monotonically over the fit window".into()));
    }
    let n = window.len() as f64;
    let mx = window.iter().map(|w| w.0).sum::<f64>() / n;
    let my = window.iter().map(|w| w.1.ln()).sum::<f64>() / n;
    let sxy: f64 = window.iter().map(|w| (w.0 - mx) * (w.1.ln() - my)).sum();
    let sxx: f64 = window.iter().map(|w| (w.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Fit(format!("profile does not decay (slope {slope})")));
    }
    Ok(-1.0 / slope)
}

/// Penetration depth from a fit to the two-face London profile sinh((L − d)/λ).
///
/// For a sample screened from both sides, a tangential A′ along the line joining
/// two opposite face centres is odd about the middle, at distance `half_width` = L
/// from each face. Uses the same window as `decay_length_fit`.
pub fn decay_length_fit_two_sided(depths: &[f64], values: &[f64], half_width: f64) -> Result<f64> {
    // reuse the window rules and the monotonicity check
    decay_length_fit(depths, values)?;
    let mut window: Vec<(f64, f64)> =
        depths.iter().copied().zip(values.iter().map(|v| v.abs().ln())).filter(|(d, _)| *d >= 1.0).collect();
    window.truncate(window.len() - 2);
    if let Some((d, _)) = window.iter().find(|(d, _)| *d >= half_width) {
        return Err(Error::Fit(format!("sample at depth {d} is not inside the half width {half_width}")));
    }
    let misfit = |lambda: f64| {
        let r: Vec<f64> = window.iter().map(|(d, y)| y - ((half_width - d) / lambda).sinh().ln()).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        r.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
    };
    // golden-section search on ln λ
    let (mut a, mut b) = ((1e-3 * half_width).ln(), (1e3 * half_width).ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (misfit(x1.exp()), misfit(x2.exp()));
    for _ in 0..200 {
        if f1 <= f2 {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - g * (b - a);
            f1 = misfit(x1.exp());
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + g * (b - a);
            f2 = misfit(x2.exp());
        }
    }
    let lambda = (0.5 * (a + b)).exp();
    if lambda > 0.99e3 * half_width {
        return Err(Error::Fit("profile shows no screening within the sample".into()));
    }
    Ok(lambda)
}

/// Pairs of (phase, current) sampled through a run.
pub fn current_phase_curve(out: &RunOutput, phase: &str, current: &str) -> Result<Vec<(f64, f64)>> {
    let p = out.column(phase).ok_or_else(|| Error::Probe(format!("no probe named '{phase}'")))?;
    let j = out.column(current).ok_or_else(|| Error::Probe(format!("no probe named '{current}'")))?;
    Ok(p.into_iter().zip(j).collect())
}

/// Largest |J − J_c sin φ|/J_c over samples with 0 ≤ φ ≤ `phi_max`.
pub fn cpr_deviation(curve: &[(f64, f64)], jc: f64, phi_max: f64) -> f64 {
    curve
        .iter()
        .filter(|(p, _)| *p >= 0.0 && *p <= phi_max)
        .map(|(p, j)| (j - jc * p.sin()).abs() / jc)
        .fold(0.0, f64::max)
}

/// Amplitudes of the harmonics k·ω over the second half of a uniformly sampled series.
///
/// Fits a constant plus cosine and sine pairs at every multiple of ω up to the highest
/// requested order by least squares, so the window need not hold whole periods.
pub fn harmonic_amplitudes(taus: &[f64], series: &[f64], omega: f64, orders: &[usize]) -> Result<Vec<f64>> {
    if taus.len() != series.len() || taus.len() < 3 {
        return Err(Error::Fit("series too short".into()));
    }
    let dt = taus[1] - taus[0];
    if taus.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0)) {
        return Err(Error::Fit("series is not uniformly sampled".into()));
    }
    let span = taus[taus.len() - 1] - taus[0];
    let periods = span * omega / (2.0 * PI);
    if periods < 10.0 {
        return Err(Error::Fit(format!("series covers {periods:.2} periods, need at least 10")));
    }
    let kmax = orders.iter().copied().max().unwrap_or(0).max(1);
    let start = taus.len() / 2;
    let rows = taus.len() - start;
    let cols = 2 * kmax + 1;
    let t0 = taus[start];
    let a = nalgebra::DMatrix::from_fn(rows, cols, |i, j| {
        let t = taus[start + i] - t0;
        match j {
            0 => 1.0,
            _ => {
                let w = ((j + 1) / 2) as f64 * omega;
                if j % 2 == 1 {
                    (w * t).cos()
                } else {
                    (w * t).sin()
                }
            }
        }
    });
    let b = nalgebra::DVector::from_column_slice(&series[start..]);
    let coef = a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::Fit(format!("harmonic fit failed: {e}")))?;
    Ok(orders
        .iter()
        .map(|&k| {
            if k == 0 {
                coef[0].abs()
            } else if k > kmax {
                0.0
            } else {
                coef[2 * k - 1].hypot(coef[2 * k])
            }
        })
        .collect())
}

/// Φ²-weighted mean x of the given edges with x inside `[x_lo, x_hi]`.
///
/// Fails when more than 10⁻³ of the weight lies within `guard` of `x_hi`.
pub fn pulse_centroid(mesh: &Mesh, phi: &[f64], edges: &[usize], x_lo: f64, x_hi: f64, guard: f64) -> Result<f64> {
    let (mut w, mut wx, mut near) = (0.0, 0.0, 0.0);
    for &e in edges {
        let x = mesh.edge_midpoint(e)[0];
        if x < x_lo || x > x_hi {
            continue;
        }
        let q = phi[e] * phi[e];
        w += q;
        wx += q * x;
        if x > x_hi - guard {
            near += q;
        }
    }
    if !(w > 0.0) {
        return Err(Error::Fit("no pulse in the window".into()));
    }
    if near > 1e-3 * w {
        return Err(Error::Fit("pulse reached the end of the window".into()));
    }
    Ok(wx / w)
}

/// Least-squares slope of position against time.
pub fn wave_speed_1d(times: &[f64], positions: &[f64]) -> Result<f64> {
    if times.len() != positions.len() || times.len() < 2 {
        return Err(Error::Fit("need at least two centroid samples".into()));
    }
    let n = times.len() as f64;
    let mt = times.iter().sum::<f64>() / n;
    let mx = positions.iter().sum::<f64>() / n;
    let stx: f64 = times.iter().zip(positions).map(|(t, x)| (t - mt) * (x - mx)).sum();
    let stt: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    Ok(stx / stt)
}

/// Speed of the right-going half of a `waveguide_1d` pulse.
///
/// Tracks z-edges with no condensate at either end over the right half of the
/// guide and fits the centroid from a third of the run onward, once the
/// initial split has separated the two halves.
pub fn waveguide_speed(doc: &ConfigDocument, out: &RunOutput) -> Result<f64> {
    let mesh = doc.mesh()?;
    let regions = doc.region_map(&mesh)?;
    let r0 = regions.r0_edge(&mesh);
    let edges: Vec<usize> =
        (0..mesh.n_edges()).filter(|&e| mesh.edge_coords(e).0 == 2 && !mesh.clamped[e] && r0[e] == 0.0).collect();
    let length = mesh.grid.extent()[0];
    let t_start = out.final_state.tau / 3.0;
    let (mut ts, mut xs) = (Vec::new(), Vec::new());
    for s in out.snapshots.iter().filter(|s| s.tau >= t_start) {
        xs.push(pulse_centroid(&mesh, &s.phi, &edges, 0.5 * length, length, 2.0)?);
        ts.push(s.tau);
    }
    wave_speed_1d(&ts, &xs)
}

/// Vertex values on a square patch of the plane `axis = index`, as rows over the two other axes.
pub fn vertex_slice(mesh: &Mesh, values: &[f64], axis: usize, index: usize, lo: usize, hi: usize) -> Vec<Vec<f64>> {
    let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
    (lo..=hi)
        .map(|i| {
            (lo..=hi)
                .map(|j| {
                    let mut p = [0; 3];
                    p[axis] = index;
                    p[b] = i;
                    p[c] = j;
                    values[mesh.vertex_id(p)]
                })
                .collect()
        })
        .collect()
}

/// Antisymmetry defects of a square patch across its two diagonals, relative to max |v|.
///
/// Returns (max |v(i,j) + v(j,i)| and |v(i,j) + v(n−j,n−i)|, max |v| on the diagonals).
pub fn diagonal_antisymmetry(patch: &[Vec<f64>]) -> (f64, f64) {
    let n = patch.len();
    let peak = patch.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return (0.0, 0.0);
    }
    let (mut off, mut on) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            off = off.max((patch[i][j] + patch[j][i]).abs());
            off = off.max((patch[i][j] + patch[n - 1 - j][n - 1 - i]).abs());
            if i == j || i + j == n - 1 {
                on = on.max(patch[i][j].abs());
            }
        }
    }
    (off / peak, on / peak)
}

/// Charge δρ·ΔV lumped into consecutive bins of `width` along z, starting at `z0`.
///
/// Each vertex owns the slab of its dual cell and is split between bins in
/// proportion to the overlap, so a bin edge through a vertex halves its charge.
pub fn bin_along_z(mesh: &Mesh, values: &[f64], z0: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut out = vec![0.0; bins];
    let inv = mesh.invariant_axes();
    let hz = mesh.grid.spacing[2];
    let top = mesh.grid.cells[2];
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex_coords(v);
        if (0..2).any(|a| inv[a] && p[a] != 0) {
            continue;
        }
        let z = mesh.vertex_pos(v)[2];
        let lo = if p[2] == 0 { z } else { z - 0.5 * hz };
        let hi = if p[2] == top { z } else { z + 0.5 * hz };
        let q = values[v] * mesh.dual_vol[v];
        for (k, slot) in out.iter_mut().enumerate() {
            let b0 = z0 + k as f64 * width;
            let overlap = (hi.min(b0 + width) - lo.max(b0)).max(0.0);
            *slot += q * overlap / (hi - lo);
        }
    }
    out
}
