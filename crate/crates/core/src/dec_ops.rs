//! Discrete differential operators on edge and vertex fields.
//!
//! Edge fields hold line integrals along primal edges; vertex fields hold
//! point values (or dual-cell integrals where stated). All reductions run in
//! the mesh enumeration order, so results do not depend on thread count.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, FACE_SIGNS};
use rayon::prelude::*;

/// Smallest slice handed to a worker; small meshes stay on one thread.
pub(crate) const PAR_CHUNK: usize = 8192;

/// `out[i] = f(i)`, in parallel only when the slice is long enough to pay for it.
pub(crate) fn fill_indexed<F: Fn(usize) -> f64 + Sync>(out: &mut [f64], f: F) {
    if out.len() < 2 * PAR_CHUNK {
        out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    } else {
        out.par_iter_mut().with_min_len(PAR_CHUNK).enumerate().for_each(|(i, o)| *o = f(i));
    }
}

/// Edge-wise difference `s(head) − s(tail)`, the line integral of ∇s.
pub fn edge_difference(mesh: &Mesh, s: &[f64]) -> Vec<f64> {
    mesh.edge_verts.iter().map(|&[t, h]| s[h] - s[t]).collect()
}

/// Dual-cell integral of ∇·F: net outward flux `Σ ±(ΔA†/Δℓ)·F(e)` through the dual cell.
pub fn divergence(mesh: &Mesh, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    accumulate_divergence(mesh, f, None, &mut out);
    out
}

/// Divergence restricted to edges with `mask[e]`.
pub fn divergence_masked(mesh: &Mesh, f: &[f64], mask: &[bool]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    accumulate_divergence(mesh, f, Some(mask), &mut out);
    out
}

pub(crate) fn accumulate_divergence(mesh: &Mesh, f: &[f64], mask: Option<&[bool]>, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (e, &[t, h]) in mesh.edge_verts.iter().enumerate() {
        if mask.is_some_and(|m| !m[e]) {
            continue;
        }
        let flux = mesh.edge_weight[e] * f[e];
        out[t] += flux;
        out[h] -= flux;
    }
}

/// Oriented sum of an edge field around every primal face.
pub fn face_circulation(mesh: &Mesh, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_faces()];
    fill_indexed(&mut out, |i| {
        let fe = &mesh.face_edges[i];
        FACE_SIGNS[0] * f[fe[0]] + FACE_SIGNS[1] * f[fe[1]] + FACE_SIGNS[2] * f[fe[2]] + FACE_SIGNS[3] * f[fe[3]]
    });
    out
}

/// Dual-face integral of ∇×∇×F for every edge.
pub fn curl_curl(mesh: &Mesh, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_edges()];
    curl_curl_into(mesh, f, &mut out);
    out
}

pub(crate) fn curl_curl_into(mesh: &Mesh, f: &[f64], out: &mut [f64]) {
    let weighted: Vec<f64> =
        face_circulation(mesh, f).into_iter().zip(&mesh.face_weight).map(|(c, &w)| c * w).collect();
    fill_indexed(out, |e| mesh.edge_faces(e).iter().map(|&(fc, s)| s * weighted[fc]).sum());
}

/// Endpoint average of a vertex field.
pub fn edge_average(mesh: &Mesh, s: &[f64]) -> Vec<f64> {
    mesh.edge_verts.iter().map(|&[t, h]| 0.5 * (s[t] + s[h])).collect()
}

/// |A′|² at every vertex from the support volumes of its incident edges.
///
/// Each support volume only sees the component of A′ along its own edge, so the
/// volume-weighted sum of squares is multiplied by the number of axes to recover
/// the full |A′|². A uniform field then gives exactly its squared magnitude.
pub fn abs_sq_at_vertices(mesh: &Mesh, phi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    abs_sq_into(mesh, phi, &mut out);
    out
}

pub(crate) fn abs_sq_into(mesh: &Mesh, phi: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    // 3·Σ frac(v,e)·(Φ/Δℓ)² with frac = Δℓ·ΔA†/(6ΔV) collapses to Σ εΦ²/(2ΔV)
    for (e, &[t, h]) in mesh.edge_verts.iter().enumerate() {
        let q = 0.5 * mesh.edge_weight[e] * phi[e] * phi[e];
        out[t] += q;
        out[h] += q;
    }
    for (o, &dv) in out.iter_mut().zip(&mesh.dual_vol) {
        *o /= dv;
    }
}

/// Line integral of ∇|A′|² along every edge.
pub fn grad_abs_sq(mesh: &Mesh, phi: &[f64]) -> Vec<f64> {
    edge_difference(mesh, &abs_sq_at_vertices(mesh, phi))
}

/// Line integral of ∇[∇²√ρ / √ρ] along every edge.
///
/// The Laplacian only couples superconducting vertices, so the condensate sees a
/// no-flux condition at vacuum interfaces. Edges touching vacuum or ρ = 0 give 0.
pub fn quantum_pressure(mesh: &Mesh, rho: &[f64], sc_mask: &[bool]) -> Result<Vec<f64>> {
    let mut w = vec![0.0; mesh.n_vertices()];
    for (v, (&r, &sc)) in rho.iter().zip(sc_mask).enumerate() {
        if sc {
            if r < 0.0 || r.is_nan() {
                return Err(Error::NegativeDensity { vertex: v, value: r });
            }
            w[v] = r.sqrt();
        }
    }
    let live = |v: usize| sc_mask[v] && w[v] > 0.0;
    // net outflow of ∇w per unit dual volume is the Laplacian
    let mut q = vec![0.0; mesh.n_vertices()];
    for (e, &[t, h]) in mesh.edge_verts.iter().enumerate() {
        if sc_mask[t] && sc_mask[h] {
            let flux = mesh.edge_weight[e] * (w[h] - w[t]);
            q[t] += flux;
            q[h] -= flux;
        }
    }
    for v in 0..mesh.n_vertices() {
        q[v] = if live(v) { q[v] / (mesh.dual_vol[v] * w[v]) } else { 0.0 };
    }
    Ok(mesh.edge_verts.iter().map(|&[t, h]| if live(t) && live(h) { q[h] - q[t] } else { 0.0 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_grid, GridSpec};

    #[test]
    fn single_edge_divergence() {
        let m = build_grid(GridSpec::uniform([3, 3, 3], 0.5)).unwrap();
        let e = m.edge_id(0, [1, 1, 1]);
        let mut f = vec![0.0; m.n_edges()];
        f[e] = 2.0;
        let d = divergence(&m, &f);
        let [t, h] = m.edge_verts[e];
        assert_eq!(d[t], 2.0 * 0.5);
        assert_eq!(d[h], -2.0 * 0.5);
        assert_eq!(d.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn constant_x_flux_has_no_interior_divergence() {
        let m = build_grid(GridSpec::uniform([3, 3, 3], 1.0)).unwrap();
        let f: Vec<f64> = (0..m.n_edges()).map(|e| if m.edge_coords(e).0 == 0 { 1.0 } else { 0.0 }).collect();
        let d = divergence(&m, &f);
        assert_eq!(d[m.vertex_id([1, 1, 1])], 0.0);
    }

    #[test]
    fn linear_field_divergence_is_three_volumes() {
        // F = (x, y, z); exact edge integrals of the axis component
        let m = build_grid(GridSpec::new([4, 3, 5], [0.3, 0.5, 0.2])).unwrap();
        let f: Vec<f64> = (0..m.n_edges())
            .map(|e| {
                let (a, _) = m.edge_coords(e);
                let [t, h] = m.edge_verts[e];
                let (x0, x1) = (m.vertex_pos(t)[a], m.vertex_pos(h)[a]);
                0.5 * (x1 * x1 - x0 * x0)
            })
            .collect();
        let d = divergence(&m, &f);
        let v = m.vertex_id([2, 1, 2]);
        assert!((d[v] - 3.0 * m.dual_vol[v]).abs() < 1e-12);
    }

    #[test]
    fn curl_curl_of_sine_line_matches_stencil_eigenvalue() {
        let h = 0.25;
        let k = 0.9;
        let m = build_grid(GridSpec::uniform([12, 3, 3], h)).unwrap();
        let f: Vec<f64> = (0..m.n_edges())
            .map(|e| {
                let (a, _) = m.edge_coords(e);
                if a == 2 {
                    h * (k * m.edge_midpoint(e)[0]).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let cc = curl_curl(&m, &f);
        for i in 1..12 {
            let e = m.edge_id(2, [i, 1, 1]);
            let x = m.edge_midpoint(e)[0];
            let expect = (2.0 - 2.0 * (k * h).cos()) / (h * h) * m.dual_area[e] * (k * x).sin();
            assert!((cc[e] - expect).abs() < 1e-12, "i={i}: {} vs {expect}", cc[e]);
        }
    }

    #[test]
    fn one_edge_circulation() {
        let m = build_grid(GridSpec::uniform([3, 3, 3], 1.0)).unwrap();
        let e = m.edge_id(1, [1, 1, 1]);
        let mut f = vec![0.0; m.n_edges()];
        f[e] = 1.0;
        let c = face_circulation(&m, &f);
        let nz: Vec<f64> = c.iter().copied().filter(|&x| x != 0.0).collect();
        assert_eq!(nz.len(), 4);
        assert!(nz.iter().all(|&x| x.abs() == 1.0));
    }

    #[test]
    fn uniform_by_potential_reads_flux_times_area() {
        // A = (B z, 0, 0) has curl (0, B, 0)
        let b = 0.7;
        let m = build_grid(GridSpec::new([3, 2, 4], [0.5, 1.0, 0.25])).unwrap();
        let f: Vec<f64> = (0..m.n_edges())
            .map(|e| if m.edge_coords(e).0 == 0 { b * m.edge_midpoint(e)[2] * m.edge_len[e] } else { 0.0 })
            .collect();
        let c = face_circulation(&m, &f);
        for fc in 0..m.n_faces() {
            let (normal, _) = m.face_coords(fc);
            let expect = if normal == 1 { b * m.face_area[fc] } else { 0.0 };
            assert!((c[fc] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn averages() {
        let m = build_grid(GridSpec::uniform([2, 2, 2], 1.0)).unwrap();
        let s = vec![2.5; m.n_vertices()];
        assert!(edge_average(&m, &s).iter().all(|&x| x == 2.5));
        let lin: Vec<f64> = (0..m.n_vertices()).map(|v| m.vertex_pos(v)[0] * 2.0).collect();
        let avg = edge_average(&m, &lin);
        for e in 0..m.n_edges() {
            assert!((avg[e] - 2.0 * m.edge_midpoint(e)[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_field_has_unit_abs_sq_everywhere() {
        let h = 0.5;
        let m = build_grid(GridSpec::uniform([3, 3, 3], h)).unwrap();
        let phi: Vec<f64> = (0..m.n_edges()).map(|e| if m.edge_coords(e).0 == 0 { h } else { 0.0 }).collect();
        let a2 = abs_sq_at_vertices(&m, &phi);
        assert!(a2.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(grad_abs_sq(&m, &phi).iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn abs_sq_of_zero_is_zero() {
        let m = build_grid(GridSpec::uniform([2, 2, 2], 1.0)).unwrap();
        assert!(abs_sq_at_vertices(&m, &vec![0.0; m.n_edges()]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_edge_abs_sq_gradient_support() {
        let m = build_grid(GridSpec::uniform([4, 4, 4], 1.0)).unwrap();
        let e0 = m.edge_id(0, [1, 2, 2]);
        let mut phi = vec![0.0; m.n_edges()];
        phi[e0] = 1.0;
        let g = grad_abs_sq(&m, &phi);
        let [t, h] = m.edge_verts[e0];
        for e in 0..m.n_edges() {
            let touches = m.edge_verts[e].contains(&t) || m.edge_verts[e].contains(&h);
            if !touches {
                assert_eq!(g[e], 0.0);
            }
        }
        // along e0 both ends carry the same |A′|²
        assert_eq!(g[e0], 0.0);
        assert!(g[m.edge_id(0, [0, 2, 2])] > 0.0);
        assert!(g[m.edge_id(0, [2, 2, 2])] < 0.0);
    }

    #[test]
    fn pressure_of_uniform_density_is_zero() {
        let m = build_grid(GridSpec::uniform([3, 3, 3], 0.5)).unwrap();
        let rho = vec![0.8; m.n_vertices()];
        let mask = vec![true; m.n_vertices()];
        let p = quantum_pressure(&m, &rho, &mask).unwrap();
        assert!(p.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn pressure_is_masked_at_vacuum() {
        let m = build_grid(GridSpec::uniform([4, 1, 1], 0.5)).unwrap();
        let rho: Vec<f64> = (0..m.n_vertices()).map(|v| 1.0 + 0.3 * m.vertex_pos(v)[0]).collect();
        let mask: Vec<bool> = (0..m.n_vertices()).map(|v| m.vertex_coords(v)[0] < 3).collect();
        let p = quantum_pressure(&m, &rho, &mask).unwrap();
        let e = m.edge_id(0, [2, 0, 0]);
        assert_eq!(p[e], 0.0);
    }

    #[test]
    fn negative_density_is_rejected() {
        let m = build_grid(GridSpec::uniform([2, 2, 2], 1.0)).unwrap();
        let mut rho = vec![1.0; m.n_vertices()];
        rho[3] = -0.1;
        assert!(matches!(
            quantum_pressure(&m, &rho, &vec![true; m.n_vertices()]),
            Err(Error::NegativeDensity { vertex: 3, .. })
        ));
        // the same value on a vacuum vertex is ignored
        let mut mask = vec![true; m.n_vertices()];
        mask[3] = false;
        assert!(quantum_pressure(&m, &rho, &mask).is_ok());
    }
}
