use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dense::{Cholesky, DenseMatrix};
use crate::error::Result;
use crate::mixedfem::{build_mesh, TriMesh};

/// One subdomain after static condensation of its interior unknowns.
#[derive(Clone, Debug)]
pub struct Subdomain {
    pub id: usize,
    /// Position `(a, b)` in the `M x M` grid of subdomains.
    pub cell: (usize, usize),
    /// `true` when the subdomain does not touch the outer boundary.
    pub floating: bool,
    /// Global node indices of the interior unknowns.
    pub interior: Vec<usize>,
    /// Global node indices of the interface unknowns, ascending.
    pub interface: Vec<usize>,
    /// Interface Schur complement `K_GG - K_GI K_II^-1 K_IG`.
    pub schur: DenseMatrix,
    /// Condensed load `b_G - K_GI K_II^-1 b_I`.
    pub load: Vec<f64>,
    k_ii: Cholesky,
    k_ig: DenseMatrix,
    b_i: Vec<f64>,
}

impl Subdomain {
    /// Interior values of the discrete harmonic-plus-particular extension of
    /// interface values `u_g`: `K_II^-1 (b_I - K_IG u_g)`.
    pub fn extend(&self, u_g: &[f64]) -> Vec<f64> {
        let kig_u = self.k_ig.matvec(u_g);
        let rhs: Vec<f64> = self.b_i.iter().zip(&kig_u).map(|(b, k)| b - k).collect();
        self.k_ii.solve_vec(&rhs)
    }
}

/// Structured `M x M` decomposition of the unit square into squares of
/// `n x n` fine cells, with homogeneous Dirichlet conditions on the outer
/// boundary and piecewise linear elements.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub m: usize,
    pub n: usize,
    pub mesh: TriMesh,
    pub subdomains: Vec<Subdomain>,
    /// Interface nodes (off the outer boundary) and the ascending ids of the
    /// subdomains sharing them.
    pub interface_nodes: BTreeMap<usize, Vec<usize>>,
    /// Interior cross points, where four subdomains meet.
    pub corners: Vec<usize>,
}

impl Decomposition {
    pub fn big_h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    /// `H / h`.
    pub fn ratio(&self) -> usize {
        self.n
    }

    pub fn floating_count(&self) -> usize {
        self.subdomains.iter().filter(|s| s.floating).count()
    }

    /// Offsets of each subdomain's interface block in the stacked interface vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.subdomains.len() + 1);
        out.push(0);
        for s in &self.subdomains {
            out.push(out.last().unwrap() + s.interface.len());
        }
        out
    }

    pub fn block_schur(&self) -> DenseMatrix {
        let blocks: Vec<DenseMatrix> = self.subdomains.iter().map(|s| s.schur.clone()).collect();
        DenseMatrix::block_diag(&blocks)
    }

    pub fn stacked_load(&self) -> Vec<f64> {
        self.subdomains.iter().flat_map(|s| s.load.iter().copied()).collect()
    }

    /// Global nodal values from stacked interface values; interface nodes
    /// take the value of their lowest-numbered subdomain.
    pub fn assemble_solution(&self, stacked: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.mesh.vertices.len()];
        let offsets = self.offsets();
        for (s, off) in self.subdomains.iter().zip(&offsets).rev() {
            let u_g = &stacked[*off..off + s.interface.len()];
            for (&node, &v) in s.interface.iter().zip(u_g) {
                u[node] = v;
            }
            for (&node, v) in s.interior.iter().zip(s.extend(u_g)) {
                u[node] = v;
            }
        }
        u
    }
}

/// `|T| grad(lambda_k) . grad(lambda_l)` on triangle `t`.
pub(crate) fn p1_stiffness(mesh: &TriMesh, t: usize) -> [[f64; 3]; 3] {
    let g = mesh.barycentric_gradients(t);
    let area = mesh.area(t);
    std::array::from_fn(|k| std::array::from_fn(|l| area * (g[k][0] * g[l][0] + g[k][1] * g[l][1])))
}

fn subdomain(mesh: &TriMesh, m: usize, n: usize, id: usize, source: &(impl Fn(f64, f64) -> f64 + Sync)) -> Result<Subdomain> {
    let (a, b) = (id % m, id / m);
    let fine = m * n;
    let (i0, j0) = (a * n, b * n);
    let mut interior = Vec::new();
    let mut interface = Vec::new();
    for j in j0..=j0 + n {
        for i in i0..=i0 + n {
            let v = mesh.vertex_index(i, j);
            if mesh.boundary_vertex[v] {
                continue;
            }
            if i > i0 && i < i0 + n && j > j0 && j < j0 + n {
                interior.push(v);
            } else {
                interface.push(v);
            }
        }
    }
    let ni = interior.len();
    let local: BTreeMap<usize, usize> = interior
        .iter()
        .chain(&interface)
        .enumerate()
        .map(|(k, &v)| (v, k))
        .collect();
    let dim = local.len();
    let mut k = DenseMatrix::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];
    for cj in j0..j0 + n {
        for ci in i0..i0 + n {
            let cell = cj * fine + ci;
            for t in [2 * cell, 2 * cell + 1] {
                let ke = p1_stiffness(mesh, t);
                let c = mesh.centroid(t);
                let load = mesh.area(t) / 3.0 * source(c[0], c[1]);
                let tri = mesh.triangles[t];
                for p in 0..3 {
                    let Some(&lp) = local.get(&tri[p]) else { continue };
                    rhs[lp] += load;
                    for q in 0..3 {
                        if let Some(&lq) = local.get(&tri[q]) {
                            k[(lp, lq)] += ke[p][q];
                        }
                    }
                }
            }
        }
    }
    let ii: Vec<usize> = (0..ni).collect();
    let gg: Vec<usize> = (ni..dim).collect();
    let k_ii = Cholesky::new(&k.submatrix(&ii, &ii).symmetrize())?;
    let k_ig = k.submatrix(&ii, &gg);
    let k_gg = k.submatrix(&gg, &gg);
    let x = k_ii.forward_solve(&k_ig);
    let schur = k_gg.sub(&x.t_matmul(&x)).symmetrize();
    let b_i = rhs[..ni].to_vec();
    let y = k_ii.solve_vec(&b_i);
    let load: Vec<f64> = rhs[ni..]
        .iter()
        .zip(k_ig.t_matvec(&y))
        .map(|(bg, c)| bg - c)
        .collect();
    let floating = a > 0 && b > 0 && a + 1 < m && b + 1 < m;
    Ok(Subdomain {
        id,
        cell: (a, b),
        floating,
        interior,
        interface,
        schur,
        load,
        k_ii,
        k_ig,
        b_i,
    })
}

/// Builds the decomposition for the Poisson problem with right-hand side `source`.
pub fn build_decomposition_with(
    m: usize,
    n: usize,
    source: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<Decomposition> {
    assert!(m >= 2 && n >= 2, "need at least 2 x 2 subdomains of 2 x 2 cells");
    let mesh = build_mesh(m * n);
    let subdomains = (0..m * m)
        .into_par_iter()
        .map(|id| subdomain(&mesh, m, n, id, &source))
        .collect::<Result<Vec<_>>>()?;
    let mut interface_nodes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in &subdomains {
        for &v in &s.interface {
            interface_nodes.entry(v).or_default().push(s.id);
        }
    }
    let mut corners = Vec::new();
    for b in 1..m {
        for a in 1..m {
            corners.push(mesh.vertex_index(a * n, b * n));
        }
    }
    Ok(Decomposition {
        m,
        n,
        mesh,
        subdomains,
        interface_nodes,
        corners,
    })
}

/// Decomposition for `-Δu = 1` with homogeneous Dirichlet conditions.
pub fn build_decomposition(m: usize, n: usize) -> Result<Decomposition> {
    build_decomposition_with(m, n, |_, _| 1.0)
}

/// Nodal solution of the undecomposed P1 problem on the same fine mesh.
pub fn global_poisson_solve(dec: &Decomposition, source: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    let mesh = &dec.mesh;
    let free: Vec<usize> = (0..mesh.vertices.len()).filter(|&v| !mesh.boundary_vertex[v]).collect();
    let mut index = vec![usize::MAX; mesh.vertices.len()];
    for (k, &v) in free.iter().enumerate() {
        index[v] = k;
    }
    let mut k = DenseMatrix::zeros(free.len(), free.len());
    let mut rhs = vec![0.0; free.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let ke = p1_stiffness(mesh, t);
        let c = mesh.centroid(t);
        let load = mesh.area(t) / 3.0 * source(c[0], c[1]);
        for p in 0..3 {
            let ip = index[tri[p]];
            if ip == usize::MAX {
                continue;
            }
            rhs[ip] += load;
            for q in 0..3 {
                let iq = index[tri[q]];
                if iq != usize::MAX {
                    k[(ip, iq)] += ke[p][q];
                }
            }
        }
    }
    let sol = Cholesky::new(&k.symmetrize())?.solve_vec(&rhs);
    let mut u = vec![0.0; mesh.vertices.len()];
    for (&v, x) in free.iter().zip(sol) {
        u[v] = x;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::sym_eigenvalues;

    #[test]
    fn counts_and_floating_subdomains() {
        let d = build_decomposition(2, 2).unwrap();
        assert_eq!(d.subdomains.len(), 4);
        assert_eq!(d.corners.len(), 1);
        assert_eq!(d.floating_count(), 0);
        let d = build_decomposition(3, 2).unwrap();
        assert_eq!(d.floating_count(), 1);
        assert!(d.subdomains[4].floating);
        assert!((d.big_h() - 1.0 / 3.0).abs() < 1e-15 && (d.h() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn interface_nodes_are_shared() {
        let d = build_decomposition(3, 3).unwrap();
        for (v, owners) in &d.interface_nodes {
            let expected = if d.corners.contains(v) { 4 } else { 2 };
            assert_eq!(owners.len(), expected, "node {v}");
        }
    }

    #[test]
    fn local_schur_complements() {
        let d = build_decomposition(3, 4).unwrap();
        for s in &d.subdomains {
            assert!(s.schur.asymmetry() <= 1e-10);
            let ev = sym_eigenvalues(&s.schur).unwrap();
            let top = ev[ev.len() - 1];
            if s.floating {
                let ones = vec![1.0; s.interface.len()];
                let s1 = crate::dense::vector::norm2(&s.schur.matvec(&ones));
                assert!(s1 <= 1e-10 * s.schur.frobenius_norm());
                assert!(ev[0].abs() <= 1e-10 * top && ev[1] > 1e-3 * top);
            } else {
                assert!(ev[0] > 1e-3 * top);
            }
        }
    }

    #[test]
    fn local_schur_spectrum_scales_with_h_over_big_h() {
        // nonzero lambda_min(S_j) ~ h/H and lambda_max(S_j) ~ 1 on the floating subdomain
        let stats: Vec<(f64, f64)> = [2, 4, 8, 16]
            .iter()
            .map(|&n| {
                let d = build_decomposition(3, n).unwrap();
                let ev = sym_eigenvalues(&d.subdomains[4].schur).unwrap();
                (ev[1] * n as f64, ev[ev.len() - 1])
            })
            .collect();
        for &(lo, hi) in &stats {
            assert!(lo >= 0.5 * stats[0].0, "{stats:?}");
            assert!(hi <= 2.0 * stats[0].1, "{stats:?}");
        }
    }

    #[test]
    fn extension_matches_global_solve() {
        let d = build_decomposition(2, 3).unwrap();
        let global = global_poisson_solve(&d, |_, _| 1.0).unwrap();
        let stacked: Vec<f64> = d
            .subdomains
            .iter()
            .flat_map(|s| s.interface.iter().map(|&v| global[v]))
            .collect();
        let u = d.assemble_solution(&stacked);
        for (a, b) in u.iter().zip(&global) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
