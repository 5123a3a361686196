use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::saddle::validate;

use super::{MixedDiscretization, TriMesh};

/// Lowest-order Raviart–Thomas / piecewise-constant discretization of
/// `u + grad p = 0`, `div u = b`, `p = 0` on the boundary.
///
/// Velocity dofs are normal components on every edge, measured along the
/// global edge normal. The local basis function of edge `k` is
/// `s_k |e_k| / (2|T|) (x - a_k)`. Pressure dofs are element values.
/// `B = -C diag(|e|)` with `C` the signed element-edge incidence, and
/// `g_T = -|T| b(centroid)`.
pub fn assemble_darcy(mesh: &TriMesh, source: impl Fn(f64, f64) -> f64) -> Result<MixedDiscretization> {
    let ne = mesh.edges.len();
    let nt = mesh.triangles.len();
    let mut m_v = DenseMatrix::zeros(ne, ne);
    let mut b = DenseMatrix::zeros(nt, ne);
    let mut div = DenseMatrix::zeros(nt, ne);
    let mut m_w = DenseMatrix::zeros(nt, nt);
    let mut g = vec![0.0; nt];

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.area(t);
        if area <= f64::EPSILON * mesh.h * mesh.h {
            return Err(Error::Assembly(format!("degenerate triangle {t} (area {area:e})")));
        }
        let pts = tri.map(|v| mesh.vertices[v]);
        let edges = mesh.tri_edges[t];
        let coef: [f64; 3] =
            std::array::from_fn(|k| mesh.edge_sign(t, k) * mesh.edge_length(edges[k]) / (2.0 * area));
        // edge midpoints integrate quadratics exactly
        let mids: [[f64; 2]; 3] = std::array::from_fn(|k| {
            let (p, q) = (pts[(k + 1) % 3], pts[(k + 2) % 3]);
            [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
        });
        for i in 0..3 {
            for j in 0..3 {
                let integral: f64 = mids
                    .iter()
                    .map(|x| {
                        (x[0] - pts[i][0]) * (x[0] - pts[j][0]) + (x[1] - pts[i][1]) * (x[1] - pts[j][1])
                    })
                    .sum::<f64>()
                    * area
                    / 3.0;
                m_v[(edges[i], edges[j])] += coef[i] * coef[j] * integral;
            }
            let flux = mesh.edge_sign(t, i) * mesh.edge_length(edges[i]);
            b[(t, edges[i])] = -flux;
            div[(t, edges[i])] = flux / area;
        }
        m_w[(t, t)] = area;
        let c = mesh.centroid(t);
        g[t] = -area * source(c[0], c[1]);
    }

    let sys = validate(m_v.symmetrize(), b, vec![0.0; ne], g)?;
    Ok(MixedDiscretization {
        m_v: sys.a().clone(),
        sys,
        m_w,
        div,
        h: mesh.h,
        velocity_dofs: ne,
        pressure_dofs: nt,
    })
}

/// Edge dofs of a vector field: its normal component at each edge midpoint.
pub fn rt0_interpolate(mesh: &TriMesh, field: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    (0..mesh.edges.len())
        .map(|e| {
            let [p, q] = mesh.edges[e].map(|v| mesh.vertices[v]);
            let v = field((p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0);
            let nrm = mesh.edge_normal(e);
            v[0] * nrm[0] + v[1] * nrm[1]
        })
        .collect()
}
