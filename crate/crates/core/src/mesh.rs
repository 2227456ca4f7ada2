//! Conforming triangulations with facet topology and newest vertex bisection.
//!
//! Cells are stored counter-clockwise. Local edge `i` of a cell is the edge
//! opposite local vertex `i`; the refinement edge of a cell is given by such a
//! local index, so the vertex opposite it is the cell's "newest" vertex.
//!
//! Facets are numbered in order of first appearance while sweeping cells in
//! index order. The first adjacent cell (`plus`) is therefore the one with the
//! lower index, and the stored normal points out of it.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::MeshError;

/// An edge of the triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Endpoints, ordered counter-clockwise as seen from `plus`.
    pub vertices: [usize; 2],
    pub plus: usize,
    pub minus: Option<usize>,
    /// Local edge index of this facet inside `plus` and `minus`.
    pub local: [u8; 2],
    /// Unit normal, outward from `plus`.
    pub normal: [f64; 2],
    pub length: f64,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    pub fn midpoint(&self, mesh: &Mesh) -> [f64; 2] {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    refinement_edge: Vec<u8>,
    generation: Vec<u32>,
    facets: Vec<Facet>,
    cell_facets: Vec<[usize; 3]>,
}

/// Per-cell diameters and per-facet averaged sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSizeField {
    pub h_cell: Vec<f64>,
    pub h_facet: Vec<f64>,
}

/// Output of [`Mesh::bisect`]: the refined mesh and, for every new cell, the
/// index of the cell of the input mesh that contains it.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    pub parent: Vec<usize>,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    libm::hypot(a[0] - b[0], a[1] - b[1])
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds a mesh from explicit refinement edges and generations.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
        generation: Vec<u32>,
    ) -> Result<Self, MeshError> {
        assert_eq!(cells.len(), refinement_edge.len());
        assert_eq!(cells.len(), generation.len());
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange { cell: c, vertex: v });
                }
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(area > 0.0) {
                return Err(MeshError::NonPositiveArea { cell: c, area });
            }
            if refinement_edge[c] > 2 {
                return Err(MeshError::BadRefinementEdge {
                    cell: c,
                    edge: refinement_edge[c] as usize,
                });
            }
        }

        let mut lookup: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut facets: Vec<Facet> = Vec::with_capacity(3 * cells.len() / 2 + 4);
        let mut cell_facets = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut cf = [0usize; 3];
            for (i, slot) in cf.iter_mut().enumerate() {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.minus.is_some() {
                            return Err(MeshError::NonManifoldEdge {
                                vertices: [key.0, key.1],
                            });
                        }
                        facet.minus = Some(c);
                        facet.local[1] = i as u8;
                        *slot = f;
                    }
                    None => {
                        let (pa, pb) = (vertices[a], vertices[b]);
                        let length = dist(pa, pb);
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        lookup.insert(key, facets.len());
                        *slot = facets.len();
                        facets.push(Facet {
                            vertices: [a, b],
                            plus: c,
                            minus: None,
                            local: [i as u8, 0],
                            normal,
                            length,
                        });
                    }
                }
            }
            cell_facets.push(cf);
        }

        Ok(Mesh {
            vertices,
            cells,
            refinement_edge,
            generation,
            facets,
            cell_facets,
        })
    }

    /// Builds a generation-0 mesh whose refinement edges are the longest edge
    /// of each cell, ties going to the edge whose opposite vertex has the
    /// smallest global index.
    pub fn new(vertices: Vec<[f64; 2]>, cells: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut refinement = Vec::with_capacity(cells.len());
        for cell in &cells {
            for &v in cell {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange {
                        cell: refinement.len(),
                        vertex: v,
                    });
                }
            }
            let mut best = 0usize;
            let mut best_len = -1.0;
            for i in 0..3 {
                let len = dist(vertices[cell[(i + 1) % 3]], vertices[cell[(i + 2) % 3]]);
                let better = len > best_len * (1.0 + 1e-12)
                    || (libm::fabs(len - best_len) <= 1e-12 * len && cell[i] < cell[best]);
                if better {
                    best = i;
                    best_len = len;
                }
            }
            refinement.push(best as u8);
        }
        let generation = alloc::vec![0; cells.len()];
        Self::from_parts(vertices, cells, refinement, generation)
    }

    /// Unit square split into `n x n` squares, each cut into four triangles
    /// by its diagonals. Every triangle has its centre vertex first, so its
    /// refinement edge (local 0) is the square side, which is its longest edge.
    pub fn crisscross(n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::EmptyGrid);
        }
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let corner = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(4 * n * n);
        for j in 0..n {
            for i in 0..n {
                let c = vertices.len();
                vertices.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
                let (p00, p10, p11, p01) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
                cells.push([c, p00, p10]);
                cells.push([c, p10, p11]);
                cells.push([c, p11, p01]);
                cells.push([c, p01, p00]);
            }
        }
        let refinement = alloc::vec![0; cells.len()];
        let generation = alloc::vec![0; cells.len()];
        Self::from_parts(vertices, cells, refinement, generation)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn refinement_edge(&self, cell: usize) -> usize {
        self.refinement_edge[cell] as usize
    }

    pub fn refinement_edges(&self) -> &[u8] {
        &self.refinement_edge
    }

    pub fn generation(&self, cell: usize) -> u32 {
        self.generation[cell]
    }

    pub fn generations(&self) -> &[u32] {
        &self.generation
    }

    /// Facet index of each local edge of `cell`.
    pub fn cell_facets(&self, cell: usize) -> [usize; 3] {
        self.cell_facets[cell]
    }

    pub fn cell_points(&self, cell: usize) -> [[f64; 2]; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cell_points(cell);
        signed_area(a, b, c)
    }

    pub fn cell_diameter(&self, cell: usize) -> f64 {
        let [a, b, c] = self.cell_points(cell);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn cell_centroid(&self, cell: usize) -> [f64; 2] {
        let [a, b, c] = self.cell_points(cell);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Smallest interior angle of `cell`, in radians.
    pub fn min_angle(&self, cell: usize) -> f64 {
        let p = self.cell_points(cell);
        let mut m = f64::INFINITY;
        for i in 0..3 {
            let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let cos = (u[0] * v[0] + u[1] * v[1]) / (libm::hypot(u[0], u[1]) * libm::hypot(v[0], v[1]));
            m = m.min(libm::acos(cos.clamp(-1.0, 1.0)));
        }
        m
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Cells sharing a facet with `cell`.
    pub fn neighbours(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.cell_facets[cell].into_iter().filter_map(move |f| {
            let facet = &self.facets[f];
            if facet.plus == cell {
                facet.minus
            } else {
                Some(facet.plus)
            }
        })
    }

    /// Flags vertices lying on a boundary facet.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = alloc::vec![false; self.vertices.len()];
        for f in self.facets.iter().filter(|f| f.is_boundary()) {
            flags[f.vertices[0]] = true;
            flags[f.vertices[1]] = true;
        }
        flags
    }

    pub fn mesh_size(&self) -> MeshSizeField {
        let h_cell: Vec<f64> = (0..self.num_cells()).map(|c| self.cell_diameter(c)).collect();
        let h_facet = self
            .facets
            .iter()
            .map(|f| match f.minus {
                Some(m) => 0.5 * (h_cell[f.plus] + h_cell[m]),
                None => h_cell[f.plus],
            })
            .collect();
        MeshSizeField { h_cell, h_facet }
    }

    pub fn h_max(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_diameter(c)).fold(0.0, f64::max)
    }

    /// Checks positivity of areas, vertex usage and that boundary facets form
    /// closed loops (every vertex touches zero or two boundary facets), which
    /// rules out hanging nodes and overlaps.
    pub fn check_conformity(&self) -> Result<(), MeshError> {
        for c in 0..self.num_cells() {
            let area = self.cell_area(c);
            if !(area > 0.0) {
                return Err(MeshError::NonPositiveArea { cell: c, area });
            }
        }
        let mut used = alloc::vec![false; self.vertices.len()];
        for cell in &self.cells {
            for &v in cell {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::OrphanVertex { vertex: v });
        }
        let mut degree = alloc::vec![0usize; self.vertices.len()];
        for f in self.facets.iter().filter(|f| f.is_boundary()) {
            degree[f.vertices[0]] += 1;
            degree[f.vertices[1]] += 1;
        }
        for (v, &d) in degree.iter().enumerate() {
            if d != 0 && d != 2 {
                return Err(MeshError::NonConforming { vertex: v, degree: d });
            }
        }
        Ok(())
    }

    /// Newest vertex bisection of the `marked` cells plus the closure needed
    /// to keep the mesh conforming.
    ///
    /// Every marked cell is bisected at least once. An edge is split at most
    /// once per call, so each cell is bisected zero, one or two times.
    pub fn bisect(&self, marked: &[usize]) -> Result<Refinement, MeshError> {
        let nc = self.num_cells();
        let mut split = alloc::vec![false; self.num_facets()];
        let mut stack = Vec::new();
        for &c in marked {
            if c >= nc {
                return Err(MeshError::CellOutOfRange { cell: c, cells: nc });
            }
            let f = self.cell_facets[c][self.refinement_edge(c)];
            if !split[f] {
                split[f] = true;
                stack.push(f);
            }
        }
        // Closure: a cell with any split edge must split its refinement edge.
        while let Some(f) = stack.pop() {
            let facet = &self.facets[f];
            for c in core::iter::once(facet.plus).chain(facet.minus) {
                let rf = self.cell_facets[c][self.refinement_edge(c)];
                if !split[rf] {
                    split[rf] = true;
                    stack.push(rf);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint = alloc::vec![usize::MAX; self.num_facets()];
        for (f, facet) in self.facets.iter().enumerate() {
            if split[f] {
                midpoint[f] = vertices.len();
                vertices.push(facet.midpoint(self));
            }
        }

        let mut cells = Vec::with_capacity(nc * 2);
        let mut refinement = Vec::with_capacity(nc * 2);
        let mut generation = Vec::with_capacity(nc * 2);
        let mut parent = Vec::with_capacity(nc * 2);
        let mut emit = |cell: [usize; 3], r: u8, g: u32, p: usize| {
            cells.push(cell);
            refinement.push(r);
            generation.push(g);
            parent.push(p);
        };

        for c in 0..nc {
            let r = self.refinement_edge(c);
            let cf = self.cell_facets[c];
            let g = self.generation[c];
            if !split[cf[r]] {
                emit(self.cells[c], r as u8, g, c);
                continue;
            }
            let v = self.cells[c];
            let (newest, a, b) = (v[r], v[(r + 1) % 3], v[(r + 2) % 3]);
            let m = midpoint[cf[r]];
            // Children (m, newest, a) and (m, b, newest): refinement edge
            // opposite the new vertex, i.e. the old edges newest-a / b-newest.
            let children = [([m, newest, a], cf[(r + 2) % 3]), ([m, b, newest], cf[(r + 1) % 3])];
            for (child, edge) in children {
                if split[edge] {
                    let q = midpoint[edge];
                    let (n2, a2, b2) = (child[0], child[1], child[2]);
                    emit([q, n2, a2], 0, g + 2, c);
                    emit([q, b2, n2], 0, g + 2, c);
                } else {
                    emit(child, 0, g + 1, c);
                }
            }
        }

        let mesh = Mesh::from_parts(vertices, cells, refinement, generation)?;
        Ok(Refinement { mesh, parent })
    }

    /// Bisects every cell once.
    pub fn bisect_all(&self) -> Refinement {
        let all: Vec<usize> = (0..self.num_cells()).collect();
        self.bisect(&all).expect("all indices are in range")
    }

    /// Two rounds of uniform bisection; halves every edge length. The parent
    /// map refers to the cells of `self`.
    pub fn refine_uniform(&self) -> Refinement {
        let first = self.bisect_all();
        let second = first.mesh.bisect_all();
        let parent = second.parent.iter().map(|&p| first.parent[p]).collect();
        Refinement {
            mesh: second.mesh,
            parent,
        }
    }
}
