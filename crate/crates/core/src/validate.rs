//! Built-in self checks run by `fluxdec validate`.
//!
//! Each check is cheap (well under a second) and compares against an exact
//! identity or an independent closed form.

use crate::dec_ops::{curl_curl, edge_difference, face_circulation};
use crate::dynamics::{run_solver, SimConfig, Solver};
use crate::error::Result;
use crate::fields::{init_state, Region, RegionMap, Scales};
use crate::junction::{analytic_jc_kappa, rho_profile, thin_limit_jc};
use crate::mesh::{build_grid, GridSpec, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, passed: value.is_finite() && value <= limit, detail: format!("{value:.3e} <= {limit:.1e}") }
    }
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Operator identities on `mesh` over `trials` random fields.
pub fn identity_checks(mesh: &Mesh, trials: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cg, mut dc, mut ccg) = (0.0f64, 0.0f64, 0.0f64);
    let nc = mesh.grid.cells;
    for _ in 0..trials {
        let s = random_field(&mut rng, mesh.n_vertices());
        let g = edge_difference(mesh, &s);
        cg = cg.max(max_abs(&face_circulation(mesh, &g)) / max_abs(&g).max(1e-300));
        let cc = curl_curl(mesh, &g);
        let scale = mesh.face_weight.iter().fold(0.0f64, |m, w| m.max(*w)) * max_abs(&g) * 8.0;
        ccg = ccg.max(max_abs(&cc) / scale.max(1e-300));

        let f = random_field(&mut rng, mesh.n_edges());
        let circ = face_circulation(mesh, &f);
        for i in 0..nc[0] {
            for j in 0..nc[1] {
                for k in 0..nc[2] {
                    let sum: f64 = mesh.cell_faces([i, j, k]).iter().map(|&(fc, sg)| sg * circ[fc]).sum();
                    dc = dc.max(sum.abs() / max_abs(&circ).max(1e-300));
                }
            }
        }
    }
    vec![
        Check::new("curl of gradient vanishes", cg, 1e-12),
        Check::new("divergence of curl vanishes", dc, 1e-12),
        Check::new("curl-curl annihilates gradients", ccg, 1e-12),
    ]
}

/// Closed superconducting block with exaggerated η: total charge is fixed.
pub fn charge_conservation_check() -> Result<Check> {
    let mesh = build_grid(GridSpec::uniform([4, 4, 4], 0.5))?;
    let regions = RegionMap::new(&mesh, Region::superconductor("sc", 1.0));
    let mut cfg = SimConfig::new(0.01, 2000, Scales { eta: 0.05, ..Scales::default() });
    cfg.output.every = 0;
    let mut solver = Solver::new(&mesh, &regions, cfg)?;
    let mut st = init_state(&mesh, &regions);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for e in 0..mesh.n_edges() {
        if !mesh.clamped[e] {
            st.phi[e] = 0.05 * (rng.random::<f64>() - 0.5);
            st.phi_prev[e] = st.phi[e];
        }
    }
    solver.set_state(st)?;
    let out = run_solver(&mut solver)?;
    let scale: f64 = out.final_state.drho.iter().zip(&mesh.dual_vol).map(|(d, v)| (d * v).abs()).sum();
    let drift = (out.charge_final - out.charge_initial).abs() / scale.max(1e-300);
    Ok(Check::new("total charge conserved", drift, 1e-10))
}

/// Vacuum cavity with a superconducting wall and η = 0: the staggered energy is exact.
pub fn energy_check() -> Result<Check> {
    let mesh = build_grid(GridSpec::uniform([6, 1, 6], 0.5))?;
    let mut regions = RegionMap::new(&mesh, Region::superconductor("wall", 1.0));
    let vac = regions.add_region(Region::vacuum())?;
    crate::fields::paint_region(
        &mesh,
        &mut regions,
        vac,
        &crate::mesh::BoxRegion::new([1.0, 0.0, 1.0], [2.0, 0.5, 2.0]),
    )?;
    let mut cfg = SimConfig::new(0.2, 1000, Scales::default());
    cfg.output.every = 0;
    let mut solver = Solver::new(&mesh, &regions, cfg)?;
    let mut st = init_state(&mesh, &regions);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for e in 0..mesh.n_edges() {
        if !mesh.clamped[e] {
            st.phi[e] = rng.random::<f64>() - 0.5;
            st.phi_prev[e] = st.phi[e] + 0.01 * (rng.random::<f64>() - 0.5);
        }
    }
    solver.set_state(st)?;
    let out = run_solver(&mut solver)?;
    let rel = ((out.energy_final - out.energy_initial) / out.energy_initial).abs();
    Ok(Check::new("leapfrog energy conserved", rel, 1e-10))
}

/// Uniform flux along a bulk superconducting column oscillates at √r0, up to the leapfrog phase error.
pub fn plasma_oscillator_check() -> Result<Check> {
    let mesh = build_grid(GridSpec::new([1, 1, 4], [1.0, 1.0, 0.5]))?;
    let lambda = 0.5;
    let regions = RegionMap::new(&mesh, Region::superconductor("sc", lambda));
    let omega = 1.0 / lambda;
    let period = 2.0 * std::f64::consts::PI / omega;
    let dt = period / 200.0;
    let steps = 2000;
    let mut cfg = SimConfig::new(dt, steps, Scales::default());
    cfg.output.every = 0;
    let mut solver = Solver::new(&mesh, &regions, cfg)?;
    let mut st = init_state(&mesh, &regions);
    let probe = (0..mesh.n_edges()).find(|&e| mesh.edge_coords(e).0 == 2 && !mesh.clamped[e]);
    let Some(edge) = probe else {
        return Ok(Check { name: "plasma oscillation frequency", passed: false, detail: "no free edge".into() });
    };
    for e in 0..mesh.n_edges() {
        if mesh.edge_coords(e).0 == 2 && !mesh.clamped[e] {
            st.phi[e] = 1e-3;
            st.phi_prev[e] = 1e-3;
        }
    }
    solver.set_state(st)?;
    let mut series = vec![solver.state.phi[edge]];
    for _ in 0..steps {
        solver.step()?;
        series.push(solver.state.phi[edge]);
    }
    let freq = zero_crossing_frequency(&series, dt);
    let rel = (freq / omega - 1.0).abs();
    Ok(Check::new("plasma oscillation frequency", rel, 1e-3))
}

/// Angular frequency from interpolated upward zero crossings.
pub fn zero_crossing_frequency(series: &[f64], dt: f64) -> f64 {
    let mut ups = Vec::new();
    for i in 1..series.len() {
        let (a, b) = (series[i - 1], series[i]);
        if a < 0.0 && b >= 0.0 {
            ups.push((i as f64 - 1.0 + a / (a - b)) * dt);
        }
    }
    if ups.len() < 2 {
        return f64::NAN;
    }
    let n = (ups.len() - 1) as f64;
    2.0 * std::f64::consts::PI * n / (ups[ups.len() - 1] - ups[0])
}

pub fn junction_checks() -> Vec<Check> {
    let (r1, r2, a) = (0.7, 1.3, 0.5);
    let kappa = 0.05 / a;
    let thin = thin_limit_jc(r1, r2, a);
    let jc_rel = (analytic_jc_kappa(r1, r2, a, kappa) / thin - 1.0).abs();
    let j = 0.3 * thin;
    let ends = match (rho_profile(-a, r1, r2, a, j), rho_profile(a, r1, r2, a, j), rho_profile(0.2, r1, r2, a, 0.0)) {
        (Ok(lo), Ok(hi), Ok(mid)) => {
            // zero current: (√ρ1(a − z) + √ρ2(a + z))² / 4a²
            let s = (r1.sqrt() * (a - 0.2) + r2.sqrt() * (a + 0.2)) / (2.0 * a);
            ((lo - r1).abs()).max((hi - r2).abs()).max((mid - s * s).abs())
        }
        _ => f64::INFINITY,
    };
    vec![
        Check::new("finite-kappa critical current approaches thin limit", jc_rel, 2e-3),
        Check::new("barrier density profile closed forms", ends, 1e-12),
    ]
}

/// The full suite; `mesh` adds identity checks on a user grid.
pub fn builtin_checks(mesh: Option<&Mesh>) -> Result<Vec<Check>> {
    let base = build_grid(GridSpec::new([3, 4, 5], [0.3, 0.5, 0.7]))?;
    let mut out = identity_checks(&base, 20, 1);
    if let Some(m) = mesh {
        out.extend(identity_checks(m, 3, 2));
    }
    out.push(charge_conservation_check()?);
    out.push(energy_check()?);
    out.push(plasma_oscillator_check()?);
    out.extend(junction_checks());
    Ok(out)
}
