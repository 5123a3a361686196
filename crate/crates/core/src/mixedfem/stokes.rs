use crate::dense::ops::complement_basis;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::saddle::validate;

use super::{MixedDiscretization, TriMesh};

/// Barycentric coordinates of the three edge midpoints; with weights `|T|/3`
/// they integrate quadratics exactly.
const MIDPOINTS: [[f64; 3]; 3] = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];

/// Quadratic nodes live on the `(2n+1) x (2n+1)` lattice of half-cell points.
pub fn p2_lattice_size(mesh: &TriMesh) -> usize {
    2 * mesh.n + 1
}

/// Lattice indices of the six quadratic nodes of triangle `t`: vertices
/// first, then the midpoint of the edge opposite vertex 0, 1, 2.
fn local_nodes(mesh: &TriMesh, t: usize) -> [usize; 6] {
    let side = p2_lattice_size(mesh);
    let coords = mesh.triangles[t].map(|v| [2 * (v % (mesh.n + 1)), 2 * (v / (mesh.n + 1))]);
    let mut out = [0; 6];
    for k in 0..3 {
        out[k] = coords[k][1] * side + coords[k][0];
        let (a, b) = (coords[(k + 1) % 3], coords[(k + 2) % 3]);
        out[3 + k] = (a[1] + b[1]) / 2 * side + (a[0] + b[0]) / 2;
    }
    out
}

/// Gradients of the six local quadratic basis functions at barycentric point `lam`.
fn basis_gradients(grad_lam: &[[f64; 2]; 3], lam: [f64; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for i in 0..3 {
        let s = 4.0 * lam[i] - 1.0;
        out[i] = [s * grad_lam[i][0], s * grad_lam[i][1]];
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        out[3 + i] = [
            4.0 * (lam[b] * grad_lam[a][0] + lam[a] * grad_lam[b][0]),
            4.0 * (lam[b] * grad_lam[a][1] + lam[a] * grad_lam[b][1]),
        ];
    }
    out
}

fn local_stiffness(mesh: &TriMesh, t: usize) -> [[f64; 6]; 6] {
    let area = mesh.area(t);
    let grad_lam = mesh.barycentric_gradients(t);
    let mut k = [[0.0; 6]; 6];
    for lam in MIDPOINTS {
        let g = basis_gradients(&grad_lam, lam);
        for i in 0..6 {
            for j in 0..6 {
                k[i][j] += area / 3.0 * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
    }
    k
}

/// Quadratic mass matrix on the reference pattern, to be scaled by `|T|/180`.
fn p2_mass_pattern() -> [[f64; 6]; 6] {
    let mut m = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = if i == j { 6.0 } else { -1.0 };
            m[3 + i][3 + j] = if i == j { 32.0 } else { 16.0 };
        }
        m[i][3 + i] = -4.0;
        m[3 + i][i] = -4.0;
    }
    m
}

/// Elementwise mean divergence of a quadratic field given at every lattice
/// node, components interleaved.
pub fn p2_element_divergence(mesh: &TriMesh, values: &[f64]) -> Vec<f64> {
    let centroid = [1.0 / 3.0; 3];
    (0..mesh.triangles.len())
        .map(|t| {
            let grads = basis_gradients(&mesh.barycentric_gradients(t), centroid);
            local_nodes(mesh, t)
                .iter()
                .zip(&grads)
                .map(|(&node, g)| g[0] * values[2 * node] + g[1] * values[2 * node + 1])
                .sum()
        })
        .collect()
}

/// Quadratic / piecewise-constant discretization of
/// `-Δu + grad p = f`, `div u = 0`, `u = 0` on the boundary.
///
/// Velocity dofs are the two components at each interior lattice node,
/// interleaved. Pressures are expressed in an orthonormal basis `Z` of the
/// mean-zero element vectors, so `B = -Z^t diag(|T|) D` with `D` the
/// centroid divergence. The load is the mass matrix applied to the nodal
/// interpolant of `f`.
pub fn assemble_stokes(
    mesh: &TriMesh,
    force: impl Fn(f64, f64) -> [f64; 2],
) -> Result<MixedDiscretization> {
    let side = p2_lattice_size(mesh);
    let inner = side - 2;
    let interior = |node: usize| {
        let (i, j) = (node % side, node / side);
        (i > 0 && j > 0 && i < side - 1 && j < side - 1).then(|| (j - 1) * inner + (i - 1))
    };
    let nv = 2 * inner * inner;
    let nt = mesh.triangles.len();
    let half_h = mesh.h / 2.0;
    let mass_pattern = p2_mass_pattern();

    let mut a = DenseMatrix::zeros(nv, nv);
    let mut m_v = DenseMatrix::zeros(nv, nv);
    let mut div_full = DenseMatrix::zeros(nt, nv);
    let mut areas = Vec::with_capacity(nt);
    let mut f = vec![0.0; nv];

    for t in 0..nt {
        let area = mesh.area(t);
        if area <= f64::EPSILON * mesh.h * mesh.h {
            return Err(Error::Assembly(format!("degenerate triangle {t} (area {area:e})")));
        }
        areas.push(area);
        let nodes = local_nodes(mesh, t);
        let grad_lam = mesh.barycentric_gradients(t);
        let stiff = local_stiffness(mesh, t);
        let load: Vec<[f64; 2]> = nodes
            .iter()
            .map(|&node| force((node % side) as f64 * half_h, (node / side) as f64 * half_h))
            .collect();
        let centroid_grads = basis_gradients(&grad_lam, [1.0 / 3.0; 3]);
        for i in 0..6 {
            let Some(ri) = interior(nodes[i]) else { continue };
            for c in 0..2 {
                div_full[(t, 2 * ri + c)] += centroid_grads[i][c];
                for j in 0..6 {
                    let mass = area / 180.0 * mass_pattern[i][j];
                    f[2 * ri + c] += mass * load[j][c];
                    if let Some(rj) = interior(nodes[j]) {
                        a[(2 * ri + c, 2 * rj + c)] += stiff[i][j];
                        m_v[(2 * ri + c, 2 * rj + c)] += mass;
                    }
                }
            }
        }
    }

    let z = complement_basis(&areas);
    let mut weighted = div_full.clone();
    for (t, &area) in areas.iter().enumerate() {
        weighted.row_mut(t).iter_mut().for_each(|x| *x *= -area);
    }
    let b = z.t_matmul(&weighted);
    let div = z.t_matmul(&div_full);
    let m_w = z.t_matmul(&DenseMatrix::from_diag(&areas).matmul(&z)).symmetrize();
    let np = nt - 1;
    let sys = validate(a.symmetrize(), b, f, vec![0.0; np])?;
    Ok(MixedDiscretization {
        sys,
        m_v: m_v.symmetrize(),
        m_w,
        div,
        h: mesh.h,
        velocity_dofs: nv,
        pressure_dofs: np,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixedfem::{build_mesh, DIVERGENCE_TOL};
    use crate::saddle::solve_direct;

    #[test]
    fn zero_force_gives_zero_solution() {
        let d = assemble_stokes(&build_mesh(3), |_, _| [0.0, 0.0]).unwrap();
        let sol = solve_direct(&d.sys).unwrap();
        assert!(sol.u.iter().chain(&sol.p).all(|&x| x == 0.0));
    }

    #[test]
    fn dimensions_and_divergence_identity() {
        let mesh = build_mesh(4);
        let d = assemble_stokes(&mesh, |x, y| [y, -x]).unwrap();
        assert_eq!(d.velocity_dofs, 2 * 7 * 7);
        assert_eq!(d.pressure_dofs, 31);
        assert!(d.divergence_defect() <= DIVERGENCE_TOL);
        let mw = d.m_w.sub(&DenseMatrix::identity(31).scale(mesh.area(0)));
        assert!(mw.max_abs() < 1e-15);
    }

    #[test]
    fn interpolated_constant_field_is_divergence_free() {
        let mesh = build_mesh(4);
        let side = p2_lattice_size(&mesh);
        for field in [[1.0, 0.0], [0.0, 1.0], [-0.7, 2.5]] {
            let values: Vec<f64> = (0..side * side).flat_map(|_| field).collect();
            assert!(p2_element_divergence(&mesh, &values).iter().all(|x| x.abs() < 1e-12));
        }
        // (x, -y) is linear and pointwise divergence free; (x^2, 0) has mean divergence 2 x_c
        let h = mesh.h / 2.0;
        let node_xy = |k: usize| ((k % side) as f64 * h, (k / side) as f64 * h);
        let lin: Vec<f64> = (0..side * side)
            .flat_map(|k| {
                let (x, y) = node_xy(k);
                [x, -y]
            })
            .collect();
        assert!(p2_element_divergence(&mesh, &lin).iter().all(|x| x.abs() < 1e-12));
        let quad: Vec<f64> = (0..side * side)
            .flat_map(|k| {
                let (x, _) = node_xy(k);
                [x * x, 0.0]
            })
            .collect();
        let dq = p2_element_divergence(&mesh, &quad);
        for (t, d) in dq.iter().enumerate() {
            assert!((d - 2.0 * mesh.centroid(t)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn local_stiffness_is_exact_for_quadratics() {
        let mesh = build_mesh(3);
        let side = p2_lattice_size(&mesh);
        let h = mesh.h / 2.0;
        for t in [0, 5, 11] {
            let k = local_stiffness(&mesh, t);
            assert!(k.iter().all(|row| row.iter().sum::<f64>().abs() < 1e-12));
            // phi = x^2 has energy 4 * int_T x^2, and x^2 is in the space
            let phi: Vec<f64> = local_nodes(&mesh, t)
                .iter()
                .map(|&node| ((node % side) as f64 * h).powi(2))
                .collect();
            let energy: f64 = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| phi[i] * k[i][j] * phi[j]).sum();
            let pts = mesh.triangles[t].map(|v| mesh.vertices[v]);
            let exact: f64 = (0..3)
                .map(|q| {
                    let x = (pts[(q + 1) % 3][0] + pts[(q + 2) % 3][0]) / 2.0;
                    4.0 * x * x
                })
                .sum::<f64>()
                * mesh.area(t)
                / 3.0;
            assert!((energy - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_pattern_is_a_partition_of_unity() {
        let pattern = p2_mass_pattern();
        assert_eq!(pattern.iter().flatten().sum::<f64>(), 180.0);
        let d = assemble_stokes(&build_mesh(2), |_, _| [0.0, 0.0]).unwrap();
        assert!(d.sys.a().asymmetry() < 1e-14);
        assert!(d.m_v.asymmetry() < 1e-14);
    }
}
