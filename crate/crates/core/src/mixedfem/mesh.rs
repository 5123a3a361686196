use std::collections::HashMap;

/// Structured triangulation of the unit square.
///
/// The square is cut into an `n x n` grid of cells. Each cell is split by one
/// diagonal whose direction alternates with the parity of `i + j`, giving the
/// criss-cross pattern. Triangles are counterclockwise. Local edge `k` of a
/// triangle is opposite its vertex `k`. Global edges run from the lower to the
/// higher vertex index and are numbered in order of first appearance.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub n: usize,
    pub h: f64,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub tri_edges: Vec<[usize; 3]>,
    pub edge_tris: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
}

impl TriMesh {
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].map(|v| self.vertices[v]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Unit normal of edge `e`: its low-to-high tangent rotated clockwise.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].map(|v| self.vertices[v]);
        let l = self.edge_length(e);
        [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
    }

    /// `+1` when the global normal of local edge `k` points out of triangle `t`.
    pub fn edge_sign(&self, t: usize, k: usize) -> f64 {
        let tri = self.triangles[t];
        if tri[(k + 1) % 3] < tri[(k + 2) % 3] {
            1.0
        } else {
            -1.0
        }
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the barycentric coordinates of triangle `t`.
    pub fn barycentric_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let two_area = 2.0 * self.area(t);
        [
            [(b[1] - c[1]) / two_area, (c[0] - b[0]) / two_area],
            [(c[1] - a[1]) / two_area, (a[0] - c[0]) / two_area],
            [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area],
        ]
    }
}

pub fn build_mesh(n: usize) -> TriMesh {
    assert!(n >= 2, "mesh needs at least two cells per side");
    let h = 1.0 / n as f64;
    let v = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary_vertex = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
            boundary_vertex.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v01, v11) = (v(i, j), v(i + 1, j), v(i, j + 1), v(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let mut edge_id: HashMap<[usize; 2], usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut edge_tris: Vec<Vec<usize>> = Vec::new();
    let mut tri_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut te = [0; 3];
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let key = [a.min(b), a.max(b)];
            let id = *edge_id.entry(key).or_insert_with(|| {
                edges.push(key);
                edge_tris.push(Vec::new());
                edges.len() - 1
            });
            edge_tris[id].push(t);
            te[k] = id;
        }
        tri_edges.push(te);
    }
    let boundary_edge = edge_tris.iter().map(|ts| ts.len() == 1).collect();
    TriMesh {
        n,
        h,
        vertices,
        triangles,
        edges,
        tri_edges,
        edge_tris,
        boundary_vertex,
        boundary_edge,
    }
}
