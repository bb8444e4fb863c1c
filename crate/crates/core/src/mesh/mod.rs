//! Conforming 2D triangulations with newest-vertex bisection.
//!
//! Every cell is stored as `[a, b, c]` in counter-clockwise order. The edge
//! `(a, b)` is the refinement edge and `c` is the newest vertex. Bisecting a
//! cell inserts the midpoint `m` of `(a, b)` and produces the children
//! `[c, a, m]` and `[b, c, m]`, whose refinement edges are again opposite the
//! newest vertex `m`.
//!
//! Local edge `i` of a cell is the edge opposite local vertex `i`, so local
//! edge 2 is always the refinement edge.

mod field;
mod marking;

pub use field::{prolong_cellfield, CellField};
pub use marking::dorfler_mark;

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Sentinel used for the missing second neighbour of a boundary edge.
pub const NO_CELL: usize = usize::MAX;

/// Default bound on the length of refinement propagation chains.
pub const DEFAULT_CLOSURE_DEPTH: usize = 100;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints in ascending index order.
    pub vertices: [usize; 2],
    /// Adjacent cells; `cells[1] == NO_CELL` on the boundary.
    pub cells: [usize; 2],
    /// `None` for interior edges.
    pub tag: Option<BoundaryTag>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1] == NO_CELL
    }
}

/// Split direction for the quads of a structured grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagonal {
    /// Split along `(x0, y0)`-`(x1, y1)`.
    Forward,
    /// Split along `(x1, y0)`-`(x0, y1)`.
    Backward,
}

/// Axis-aligned structured grid of quads, each split into two triangles
/// whose shared diagonal is the refinement edge.
#[derive(Clone, Debug)]
pub struct RectGrid {
    pub nx: usize,
    pub ny: usize,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub diagonal: Diagonal,
}

impl RectGrid {
    pub fn unit(nx: usize, ny: usize) -> Self {
        Self { nx, ny, x: [0.0, 1.0], y: [0.0, 1.0], diagonal: Diagonal::Forward }
    }

    pub fn with_diagonal(mut self, diagonal: Diagonal) -> Self {
        self.diagonal = diagonal;
        self
    }
}

/// Summary geometry of a mesh. Angles are in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStats {
    pub h_max: f64,
    pub h_min: f64,
    pub min_angle: f64,
    pub cell_count: usize,
    pub vertex_count: usize,
}

#[derive(Debug)]
pub struct Mesh {
    id: u64,
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    cell_edges: Vec<[usize; 3]>,
    areas: Vec<f64>,
    parent: Vec<usize>,
    previous: Option<Arc<Mesh>>,
    generation: usize,
}

/// Builds a triangulated rectangle. `keep` receives each triangle's centroid
/// and decides whether the cell stays; `classify` tags each boundary edge
/// from its endpoints.
pub fn create_rect_mesh(
    grid: &RectGrid,
    keep: Option<&dyn Fn(Point) -> bool>,
    classify: &dyn Fn(Point, Point) -> BoundaryTag,
) -> Result<Mesh> {
    let (nx, ny) = (grid.nx, grid.ny);
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidGrid { nx, ny });
    }
    let dx = (grid.x[1] - grid.x[0]) / nx as f64;
    let dy = (grid.y[1] - grid.y[0]) / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([grid.x[0] + i as f64 * dx, grid.y[0] + j as f64 * dy]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            match grid.diagonal {
                Diagonal::Forward => {
                    cells.push([p11, p00, p10]);
                    cells.push([p00, p11, p01]);
                }
                Diagonal::Backward => {
                    cells.push([p10, p01, p00]);
                    cells.push([p01, p10, p11]);
                }
            }
        }
    }
    if let Some(keep) = keep {
        cells.retain(|c| keep(centroid(&vertices, c)));
    }
    if cells.is_empty() {
        return Err(Error::EmptyMesh);
    }
    // Drop vertices no longer referenced and renumber.
    let mut remap = vec![NO_CELL; vertices.len()];
    let mut kept = Vec::new();
    for c in &cells {
        for &v in c {
            if remap[v] == NO_CELL {
                remap[v] = kept.len();
                kept.push(vertices[v]);
            }
        }
    }
    let mut order: Vec<usize> = (0..vertices.len()).filter(|&v| remap[v] != NO_CELL).collect();
    order.sort_unstable();
    // Keep the lexicographic grid order for deterministic numbering.
    let mut renumber = vec![NO_CELL; vertices.len()];
    let mut verts = Vec::with_capacity(order.len());
    for v in order {
        renumber[v] = verts.len();
        verts.push(vertices[v]);
    }
    let cells: Vec<[usize; 3]> = cells.iter().map(|c| [renumber[c[0]], renumber[c[1]], renumber[c[2]]]).collect();
    Mesh::from_triangles(verts, cells, classify)
}

fn centroid(vertices: &[Point], c: &[usize; 3]) -> Point {
    let [a, b, d] = [vertices[c[0]], vertices[c[1]], vertices[c[2]]];
    [(a[0] + b[0] + d[0]) / 3.0, (a[1] + b[1] + d[1]) / 3.0]
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Mesh {
    /// Generic constructor. Cells are `[a, b, c]` with refinement edge
    /// `(a, b)`; clockwise cells are flipped by swapping `a` and `b`.
    pub fn from_triangles(
        vertices: Vec<Point>,
        mut cells: Vec<[usize; 3]>,
        classify: &dyn Fn(Point, Point) -> BoundaryTag,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for c in &mut cells {
            if signed_area(vertices[c[0]], vertices[c[1]], vertices[c[2]]) < 0.0 {
                c.swap(0, 1);
            }
        }
        let tags = |_: [usize; 2], a: Point, b: Point| Some(classify(a, b));
        Ok(Self::assemble(vertices, cells, &tags, Vec::new(), None, 0))
    }

    fn assemble(
        vertices: Vec<Point>,
        cells: Vec<[usize; 3]>,
        boundary_tag: &dyn Fn([usize; 2], Point, Point) -> Option<BoundaryTag>,
        parent: Vec<usize>,
        previous: Option<Arc<Mesh>>,
        generation: usize,
    ) -> Self {
        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(cells.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(cells.len() * 3 / 2 + 8);
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (ci, c) in cells.iter().enumerate() {
            let mut local = [0; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let key = edge_key(c[(i + 1) % 3], c[(i + 2) % 3]);
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: key, cells: [ci, NO_CELL], tag: None });
                    edges.len() - 1
                });
                if edges[e].cells[0] != ci {
                    edges[e].cells[1] = ci;
                }
                *slot = e;
            }
            cell_edges.push(local);
        }
        for e in &mut edges {
            if e.is_boundary() {
                let [a, b] = e.vertices;
                e.tag = Some(boundary_tag(e.vertices, vertices[a], vertices[b]).unwrap_or(BoundaryTag::Neumann));
            }
        }
        let areas = cells.iter().map(|c| signed_area(vertices[c[0]], vertices[c[1]], vertices[c[2]])).collect();
        Self {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            vertices,
            cells,
            edges,
            cell_edges,
            areas,
            parent,
            previous,
            generation,
        }
    }

    /// Unique identity of this mesh instance.
    pub fn id(&self) -> u64 {
        self.id
    }
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    /// Global edge ids of each cell; local edge `i` is opposite local vertex `i`.
    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }
    pub fn areas(&self) -> &[f64] {
        &self.areas
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn generation(&self) -> usize {
        self.generation
    }
    /// Parent cell (index into [`Mesh::previous`]) of every cell; empty on a root mesh.
    pub fn parent(&self) -> &[usize] {
        &self.parent
    }
    pub fn previous(&self) -> Option<&Arc<Mesh>> {
        self.previous.as_ref()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn cell_points(&self, cell: usize) -> [Point; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    /// Cell diameter, i.e. the longest edge.
    pub fn diameter(&self, cell: usize) -> f64 {
        self.cell_edges[cell].iter().map(|&e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn centroid(&self, cell: usize) -> Point {
        centroid(&self.vertices, &self.cells[cell])
    }

    pub fn min_angle(&self, cell: usize) -> f64 {
        let p = self.cell_points(cell);
        (0..3)
            .map(|i| {
                let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(a, b) * dist(a, c));
                cos.clamp(-1.0, 1.0).acos().to_degrees()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn stats(&self) -> MeshStats {
        let mut h_max: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        let mut min_angle = f64::INFINITY;
        for c in 0..self.num_cells() {
            let h = self.diameter(c);
            h_max = h_max.max(h);
            h_min = h_min.min(h);
            min_angle = min_angle.min(self.min_angle(c));
        }
        MeshStats { h_max, h_min, min_angle, cell_count: self.num_cells(), vertex_count: self.num_vertices() }
    }

    /// Root of the refinement hierarchy this mesh descends from.
    pub fn root(&self) -> &Mesh {
        let mut m = self;
        while let Some(p) = &m.previous {
            m = p;
        }
        m
    }

    pub fn boundary_length(&self) -> f64 {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_boundary()).map(|e| self.edge_length(e)).sum()
    }

    /// Structural audit: positive orientation, every edge shared by one or two
    /// cells with opposite orientation, boundary length equal to that of the
    /// root mesh (a hanging node would create spurious boundary edges), and
    /// the area of the root preserved to `1e-12` relative.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (ci, &a) in self.areas.iter().enumerate() {
            if !(a > 0.0) {
                return Err(format!("cell {ci} has non-positive area {a}"));
            }
        }
        for (ei, e) in self.edges.iter().enumerate() {
            if e.is_boundary() {
                if e.tag.is_none() {
                    return Err(format!("boundary edge {ei} has no tag"));
                }
                continue;
            }
            // An interior edge must be traversed in opposite directions.
            let dir = |c: usize| {
                let cell = self.cells[c];
                (0..3).find(|&i| cell[i] == e.vertices[0] && cell[(i + 1) % 3] == e.vertices[1]).is_some()
            };
            if dir(e.cells[0]) == dir(e.cells[1]) {
                return Err(format!("edge {ei} has inconsistent orientation"));
            }
        }
        let mut uses = vec![0usize; self.edges.len()];
        for ce in &self.cell_edges {
            for &e in ce {
                uses[e] += 1;
            }
        }
        if let Some(e) = uses.iter().position(|&u| u == 0 || u > 2) {
            return Err(format!("edge {e} is used by {} cells", uses[e]));
        }
        let root = self.root();
        let (b0, b1) = (root.boundary_length(), self.boundary_length());
        if (b0 - b1).abs() > 1e-10 * b0 {
            return Err(format!("boundary length changed from {b0} to {b1} (hanging node)"));
        }
        let (a0, a1) = (root.total_area(), self.total_area());
        if (a0 - a1).abs() > 1e-12 * a0 {
            return Err(format!("area changed from {a0} to {a1}"));
        }
        Ok(())
    }
}

/// Newest-vertex bisection of the marked cells plus the closure needed for
/// conformity. An empty marking returns the input mesh itself.
pub fn bisect(mesh: &Arc<Mesh>, marked: &[usize]) -> Result<Arc<Mesh>> {
    bisect_with_depth(mesh, marked, DEFAULT_CLOSURE_DEPTH)
}

pub fn bisect_with_depth(mesh: &Arc<Mesh>, marked: &[usize], max_depth: usize) -> Result<Arc<Mesh>> {
    if marked.is_empty() {
        return Ok(Arc::clone(mesh));
    }
    let n_edges = mesh.edges.len();
    let mut edge_marked = vec![false; n_edges];
    let mut depth = vec![0usize; n_edges];
    let mut queue = VecDeque::new();
    for &c in marked {
        if c >= mesh.num_cells() {
            return Err(Error::CellOutOfRange(c));
        }
        let e = mesh.cell_edges[c][2];
        if !edge_marked[e] {
            edge_marked[e] = true;
            queue.push_back(e);
        }
    }
    // Closure: a cell with any marked edge must have its refinement edge marked.
    while let Some(e) = queue.pop_front() {
        for &c in &mesh.edges[e].cells {
            if c == NO_CELL {
                continue;
            }
            let r = mesh.cell_edges[c][2];
            if !edge_marked[r] {
                edge_marked[r] = true;
                depth[r] = depth[e] + 1;
                if depth[r] > max_depth {
                    return Err(Error::RefinementDepth(max_depth));
                }
                queue.push_back(r);
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint = vec![NO_CELL; n_edges];
    let mut mid_parent: HashMap<usize, usize> = HashMap::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge_marked[e] {
            let [a, b] = edge.vertices;
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            midpoint[e] = vertices.len();
            mid_parent.insert(vertices.len(), e);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }

    let mut cells = Vec::with_capacity(mesh.num_cells() + 2 * marked.len());
    let mut parent = Vec::with_capacity(cells.capacity());
    for (ci, &cell) in mesh.cells.iter().enumerate() {
        let [e0, e1, e2] = mesh.cell_edges[ci];
        if !edge_marked[e2] {
            cells.push(cell);
            parent.push(ci);
            continue;
        }
        let [a, b, c] = cell;
        let m = midpoint[e2];
        // Child [c, a, m] has refinement edge (c, a) = e1; [b, c, m] has (b, c) = e0.
        for (child, edge) in [([c, a, m], e1), ([b, c, m], e0)] {
            if edge_marked[edge] {
                let [p, q, r] = child;
                let mm = midpoint[edge];
                cells.push([r, p, mm]);
                cells.push([q, r, mm]);
                parent.push(ci);
                parent.push(ci);
            } else {
                cells.push(child);
                parent.push(ci);
            }
        }
    }

    let old_tags: HashMap<[usize; 2], BoundaryTag> = mesh
        .edges
        .iter()
        .filter(|e| e.is_boundary())
        .map(|e| (e.vertices, e.tag.unwrap_or(BoundaryTag::Neumann)))
        .collect();
    let inherit = |key: [usize; 2], _: Point, _: Point| -> Option<BoundaryTag> {
        if let Some(t) = old_tags.get(&key) {
            return Some(*t);
        }
        for (m, other) in [(key[0], key[1]), (key[1], key[0])] {
            if let Some(&e) = mid_parent.get(&m) {
                let ev = mesh.edges[e].vertices;
                if ev.contains(&other) {
                    return mesh.edges[e].tag;
                }
            }
        }
        None
    };
    Ok(Arc::new(Mesh::assemble(vertices, cells, &inherit, parent, Some(Arc::clone(mesh)), mesh.generation + 1)))
}

/// Bisects every cell once.
pub fn refine_uniform(mesh: &Arc<Mesh>) -> Result<Arc<Mesh>> {
    let all: Vec<usize> = (0..mesh.num_cells()).collect();
    bisect(mesh, &all)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_dirichlet(_: Point, _: Point) -> BoundaryTag {
        BoundaryTag::Dirichlet
    }

    fn unit_square(n: usize) -> Arc<Mesh> {
        Arc::new(create_rect_mesh(&RectGrid::unit(n, n), None, &all_dirichlet).unwrap())
    }

    #[test]
    fn single_quad_counts() {
        let m = unit_square(1);
        assert_eq!(m.num_cells(), 2);
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.edges().len(), 5);
        assert_eq!(m.edges().iter().filter(|e| e.is_boundary()).count(), 4);
        m.audit().unwrap();
    }

    #[test]
    fn large_grid_cell_count() {
        let m = unit_square(64);
        assert_eq!(m.num_cells(), 8192);
        assert_eq!(m.num_vertices(), 65 * 65);
    }

    #[test]
    fn l_shape_mask() {
        let keep = |p: Point| !(p[0] > 0.5 && p[1] > 0.5);
        let m = create_rect_mesh(&RectGrid::unit(2, 2), Some(&keep), &all_dirichlet).unwrap();
        assert_eq!(m.num_cells(), 6);
        assert!((m.total_area() - 0.75).abs() < 1e-15);
        assert_eq!(m.num_vertices(), 8);
        m.audit().unwrap();
    }

    #[test]
    fn empty_mask_is_an_error() {
        let keep = |_: Point| false;
        let r = create_rect_mesh(&RectGrid::unit(2, 2), Some(&keep), &all_dirichlet);
        assert!(matches!(r, Err(Error::EmptyMesh)));
        assert!(matches!(
            create_rect_mesh(&RectGrid::unit(0, 3), None, &all_dirichlet),
            Err(Error::InvalidGrid { .. })
        ));
    }

    #[test]
    fn refinement_edge_is_the_hypotenuse() {
        for diag in [Diagonal::Forward, Diagonal::Backward] {
            let m = create_rect_mesh(&RectGrid::unit(3, 2).with_diagonal(diag), None, &all_dirichlet).unwrap();
            for c in 0..m.num_cells() {
                let r = m.cell_edges()[c][2];
                assert!((m.edge_length(r) - m.diameter(c)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_marking_returns_same_mesh() {
        let m = unit_square(2);
        let r = bisect(&m, &[]).unwrap();
        assert!(Arc::ptr_eq(&m, &r));
        assert_eq!(r.generation(), 0);
        assert_eq!(m.stats(), r.stats());
    }

    #[test]
    fn bisecting_one_cell_of_two_triggers_closure() {
        // Both cells share the hypotenuse as refinement edge, so the neighbour
        // is bisected too: 4 cells, 5 vertices, no hanging node.
        let m = unit_square(1);
        let r = bisect(&m, &[0]).unwrap();
        assert_eq!(r.num_cells(), 4);
        assert_eq!(r.num_vertices(), 5);
        assert_eq!(r.generation(), 1);
        assert_eq!(r.parent(), &[0, 0, 1, 1]);
        r.audit().unwrap();
    }

    #[test]
    fn full_marking_at_least_doubles() {
        let m = unit_square(3);
        let r = refine_uniform(&m).unwrap();
        assert!(r.num_cells() >= 2 * m.num_cells());
        r.audit().unwrap();
    }

    #[test]
    fn out_of_range_mark_is_rejected() {
        let m = unit_square(1);
        assert!(matches!(bisect(&m, &[7]), Err(Error::CellOutOfRange(7))));
    }

    #[test]
    fn closure_depth_bound_is_enforced() {
        // Refining a corner cell repeatedly builds propagation chains; a zero
        // bound makes any propagation an error.
        let m = unit_square(4);
        let m = bisect(&m, &[0]).unwrap();
        let m = bisect(&m, &[0]).unwrap();
        let r = bisect_with_depth(&m, &[0], 0);
        assert!(matches!(r, Err(Error::RefinementDepth(0))));
    }

    #[test]
    fn boundary_tags_are_inherited() {
        let classify = |a: Point, b: Point| {
            if a[0] == 0.0 && b[0] == 0.0 {
                BoundaryTag::Dirichlet
            } else {
                BoundaryTag::Neumann
            }
        };
        let m = Arc::new(create_rect_mesh(&RectGrid::unit(2, 2), None, &classify).unwrap());
        let r = refine_uniform(&refine_uniform(&m).unwrap()).unwrap();
        for e in r.edges().iter().filter(|e| e.is_boundary()) {
            let [a, b] = e.vertices;
            let on_left = r.vertices()[a][0] == 0.0 && r.vertices()[b][0] == 0.0;
            let expect = if on_left { BoundaryTag::Dirichlet } else { BoundaryTag::Neumann };
            assert_eq!(e.tag, Some(expect));
        }
    }

    #[test]
    fn stats_of_simple_shapes() {
        let tri =
            Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[1, 2, 0]], &all_dirichlet).unwrap();
        let s = tri.stats();
        assert!((s.h_max - 2f64.sqrt()).abs() < 1e-15);
        assert!((unit_square(1).stats().min_angle - 45.0).abs() < 1e-12);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let tri =
            Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[2, 1, 0]], &all_dirichlet).unwrap();
        assert!(tri.areas()[0] > 0.0);
        assert_eq!(tri.cells()[0], [1, 2, 0]);
    }

    #[test]
    fn angles_survive_repeated_refinement() {
        let mut m = unit_square(2);
        let a0 = m.stats().min_angle;
        for _ in 0..10 {
            m = refine_uniform(&m).unwrap();
            assert!(m.stats().min_angle >= a0 - 1e-9);
        }
        m.audit().unwrap();
    }
}
