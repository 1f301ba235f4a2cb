//! Cells (simplices and axis-aligned boxes), faces with exact chart frames,
//! and small meshes including the two canonical two-cell domains.
//!
//! Face charts are anchored at the first face vertex with an orthogonal
//! (generally unnormalized) rational frame; chart-measure integrals are what
//! every vanishing and rank verdict consumes. The true measure differs per
//! face by the positive factor `metric_scale`, kept as an exact rational
//! whenever it is one (always, for axis-aligned geometry).

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, QMatrix};
use crate::poly::{Poly, VecPoly};
use crate::rational::{format_q, parse_q, q, qi, sqrt_exact, to_f64, Q};
use crate::Error;

pub type Point = Vec<Q>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Simplex,
    Box,
}

/// A mesh cell. Boxes store only the two extreme corners `lo < hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub id: usize,
    pub kind: CellKind,
    pub vertices: Vec<Point>,
}

impl Cell {
    /// Simplex from `d + 1` affinely independent vertices.
    pub fn simplex(id: usize, vertices: Vec<Point>) -> Result<Self, Error> {
        let d = vertices.first().map_or(0, Vec::len);
        if !(d == 2 || d == 3) {
            return Err(Error::DimensionMismatch(format!(
                "simplex dimension must be 2 or 3, got {d}"
            )));
        }
        if vertices.len() != d + 1 || vertices.iter().any(|v| v.len() != d) {
            return Err(Error::DegenerateCell(format!(
                "simplex in dimension {d} needs exactly {} vertices",
                d + 1
            )));
        }
        let cell = Self {
            id,
            kind: CellKind::Simplex,
            vertices,
        };
        if cell.jacobian().determinant().is_zero() {
            return Err(Error::DegenerateCell(
                "simplex vertices are affinely dependent".into(),
            ));
        }
        Ok(cell)
    }

    /// Axis-aligned box from extreme corners with `lo < hi` componentwise.
    pub fn axis_box(id: usize, lo: Point, hi: Point) -> Result<Self, Error> {
        let d = lo.len();
        if !(d == 2 || d == 3) || hi.len() != d {
            return Err(Error::DimensionMismatch(
                "box corners must share dimension 2 or 3".into(),
            ));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::DegenerateCell("box needs lo < hi componentwise".into()));
        }
        Ok(Self {
            id,
            kind: CellKind::Box,
            vertices: vec![lo, hi],
        })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    /// For simplices: columns `v_i - v_0`.
    fn jacobian(&self) -> QMatrix {
        let d = self.dim();
        let mut j = QMatrix::zeros(d, d);
        for c in 0..d {
            for r in 0..d {
                j[(r, c)] = &self.vertices[c + 1][r] - &self.vertices[0][r];
            }
        }
        j
    }

    pub fn volume(&self) -> Q {
        let d = self.dim();
        match self.kind {
            CellKind::Simplex => {
                let det = self.jacobian().determinant();
                let fact = qi((1..=d as i64).product());
                det.abs() / fact
            }
            CellKind::Box => self.vertices[1]
                .iter()
                .zip(&self.vertices[0])
                .map(|(h, l)| h - l)
                .product(),
        }
    }

    pub fn centroid(&self) -> Point {
        let d = self.dim();
        match self.kind {
            CellKind::Simplex => (0..d)
                .map(|k| {
                    self.vertices.iter().map(|v| v[k].clone()).sum::<Q>()
                        / qi(self.vertices.len() as i64)
                })
                .collect(),
            CellKind::Box => (0..d)
                .map(|k| (&self.vertices[0][k] + &self.vertices[1][k]) / qi(2))
                .collect(),
        }
    }

    /// All corners; for boxes this expands the two stored extremes.
    pub fn corners(&self) -> Vec<Point> {
        match self.kind {
            CellKind::Simplex => self.vertices.clone(),
            CellKind::Box => {
                let d = self.dim();
                (0..1usize << d)
                    .map(|mask| {
                        (0..d)
                            .map(|k| self.vertices[(mask >> k) & 1][k].clone())
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// Barycentric coordinates `λ_i` as affine polynomials (simplex only).
    pub fn barycentric_coords(&self) -> Result<Vec<Poly>, Error> {
        if self.kind != CellKind::Simplex {
            return Err(Error::Unsupported(
                "barycentric coordinates need a simplex".into(),
            ));
        }
        let d = self.dim();
        // Rows [1, v_j]; λ_i solves M c = e_i with λ_i(x) = c_0 + Σ c_k x_k.
        let rows: Vec<Vec<Q>> = self
            .vertices
            .iter()
            .map(|v| {
                let mut r = vec![qi(1)];
                r.extend(v.iter().cloned());
                r
            })
            .collect();
        let m = QMatrix::from_rows(rows);
        let mut lambdas = Vec::with_capacity(d + 1);
        for i in 0..=d {
            let mut e = vec![Q::zero(); d + 1];
            e[i] = qi(1);
            let c = m
                .solve(&e)
                .ok_or_else(|| Error::DegenerateCell("singular barycentric system".into()))?;
            let mut lam = Poly::constant(d, c[0].clone());
            for k in 0..d {
                lam = &lam + &Poly::var(d, k).scale(&c[k + 1]);
            }
            lambdas.push(lam);
        }
        Ok(lambdas)
    }

    /// Boundary facets with outward frames, this cell as the plus side.
    pub fn faces(&self) -> Vec<Face> {
        let centroid = self.centroid();
        match self.kind {
            CellKind::Simplex => (0..self.vertices.len())
                .map(|opposite| {
                    let verts: Vec<Point> = self
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != opposite)
                        .map(|(_, v)| v.clone())
                        .collect();
                    Face::from_simplex_facet(verts, &centroid, self.id)
                })
                .collect(),
            CellKind::Box => {
                let d = self.dim();
                let (lo, hi) = (&self.vertices[0], &self.vertices[1]);
                let mut faces = Vec::new();
                for axis in 0..d {
                    for side in 0..2 {
                        let fixed = if side == 0 { lo[axis].clone() } else { hi[axis].clone() };
                        let free: Vec<usize> = (0..d).filter(|&k| k != axis).collect();
                        let mut anchor: Point = lo.clone();
                        anchor[axis] = fixed.clone();
                        let frame: Vec<Vec<Q>> = free
                            .iter()
                            .map(|&k| {
                                let mut t = vec![Q::zero(); d];
                                t[k] = &hi[k] - &lo[k];
                                t
                            })
                            .collect();
                        let mut verts = vec![anchor.clone()];
                        if d == 2 {
                            verts.push(add(&anchor, &frame[0]));
                        } else {
                            verts.push(add(&anchor, &frame[0]));
                            verts.push(add(&add(&anchor, &frame[0]), &frame[1]));
                            verts.push(add(&anchor, &frame[1]));
                        }
                        let mut normal = vec![Q::zero(); d];
                        normal[axis] = if side == 0 { qi(-1) } else { qi(1) };
                        let domain = if d == 2 {
                            ChartDomain::Segment
                        } else {
                            ChartDomain::Square
                        };
                        faces.push(Face::assemble(verts, anchor, frame, normal, domain, self.id));
                    }
                }
                faces
            }
        }
    }
}

fn add(a: &Point, b: &[Q]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Reference domain of a face chart, always with rational corner data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChartDomain {
    /// `s ∈ [0, 1]`.
    Segment,
    /// Triangle `(0,0), (1,0), third`.
    Triangle { third: [Q; 2] },
    /// `[0, 1]²`.
    Square,
}

impl ChartDomain {
    pub fn nvars(&self) -> usize {
        match self {
            ChartDomain::Segment => 1,
            _ => 2,
        }
    }

    /// Chart-space measure of the domain.
    pub fn measure(&self) -> Q {
        match self {
            ChartDomain::Segment | ChartDomain::Square => qi(1),
            // Triangle (0,0), (1,0), (a, b): area = b/2.
            ChartDomain::Triangle { third } => &third[1] / qi(2),
        }
    }
}

/// A mesh facet with its exact chart: `x(s) = anchor + Σ s_j frame_j` with
/// mutually orthogonal frame vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    pub vertices: Vec<Point>,
    pub anchor: Point,
    /// `d − 1` mutually orthogonal tangent vectors, unnormalized.
    pub tangents_raw: Vec<Vec<Q>>,
    /// Outward normal of the plus cell, unnormalized.
    pub normal_raw: Vec<Q>,
    pub domain: ChartDomain,
    pub barycenter: Point,
    pub is_boundary: bool,
    pub plus_cell: usize,
    pub minus_cell: Option<usize>,
}

impl Face {
    fn from_simplex_facet(verts: Vec<Point>, cell_centroid: &Point, cell_id: usize) -> Face {
        let d = verts[0].len();
        let anchor = verts[0].clone();
        if d == 2 {
            let t = sub(&verts[1], &verts[0]);
            let normal = vec![t[1].clone(), -t[0].clone()];
            Face::assemble(
                verts,
                anchor,
                vec![t],
                normal,
                ChartDomain::Segment,
                cell_id,
            )
            .oriented_outward(cell_centroid)
        } else {
            let t1 = sub(&verts[1], &verts[0]);
            let u = sub(&verts[2], &verts[0]);
            // Gram–Schmidt over the rationals keeps the frame orthogonal
            // without introducing radicals.
            let mu = dot(&u, &t1) / dot(&t1, &t1);
            let t2: Vec<Q> = u.iter().zip(&t1).map(|(ui, ti)| ui - &mu * ti).collect();
            let normal = cross(&t1, &u);
            let third = [mu, qi(1)];
            Face::assemble(
                verts,
                anchor,
                vec![t1, t2],
                normal,
                ChartDomain::Triangle { third },
                cell_id,
            )
            .oriented_outward(cell_centroid)
        }
    }

    fn assemble(
        vertices: Vec<Point>,
        anchor: Point,
        tangents_raw: Vec<Vec<Q>>,
        normal_raw: Vec<Q>,
        domain: ChartDomain,
        plus_cell: usize,
    ) -> Face {
        let d = anchor.len();
        let barycenter: Point = (0..d)
            .map(|k| {
                vertices.iter().map(|v| v[k].clone()).sum::<Q>() / qi(vertices.len() as i64)
            })
            .collect();
        Face {
            vertices,
            anchor,
            tangents_raw,
            normal_raw,
            domain,
            barycenter,
            is_boundary: true,
            plus_cell,
            minus_cell: None,
        }
    }

    fn oriented_outward(mut self, cell_centroid: &Point) -> Face {
        let to_face = sub(&self.barycenter, cell_centroid);
        let side = dot(&self.normal_raw, &to_face);
        assert!(!side.is_zero(), "face normal degenerate against centroid");
        if side.is_negative() {
            self.normal_raw = self.normal_raw.iter().map(|x| -x.clone()).collect();
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn nvars(&self) -> usize {
        self.domain.nvars()
    }

    /// Ambient coordinates as polynomials in the chart variables.
    pub fn chart_images(&self) -> Vec<Poly> {
        let d = self.dim();
        let nv = self.nvars();
        (0..d)
            .map(|k| {
                let mut p = Poly::constant(nv, self.anchor[k].clone());
                for (j, t) in self.tangents_raw.iter().enumerate() {
                    p = &p + &Poly::var(nv, j).scale(&t[k]);
                }
                p
            })
            .collect()
    }

    /// Chart coordinates of an ambient point on the face plane.
    pub fn chart_coords(&self, p: &Point) -> Vec<Q> {
        let rel = sub(p, &self.anchor);
        self.tangents_raw
            .iter()
            .map(|t| dot(&rel, t) / dot(t, t))
            .collect()
    }

    /// Restriction of an ambient scalar polynomial to the chart.
    pub fn restrict_scalar(&self, p: &Poly) -> Poly {
        p.substitute(&self.chart_images())
    }

    /// Restriction of an ambient field to the chart; components stay ambient.
    pub fn restrict_vec(&self, v: &VecPoly) -> VecPoly {
        v.substitute(&self.chart_images())
    }

    /// Exact integral of a chart polynomial over the chart domain
    /// (chart measure, no metric factor).
    pub fn integrate_chart(&self, p: &Poly) -> Q {
        assert_eq!(p.nvars(), self.nvars(), "polynomial not in chart variables");
        match &self.domain {
            ChartDomain::Segment => p
                .terms()
                .map(|(m, c)| c / qi(m[0] as i64 + 1))
                .sum(),
            ChartDomain::Square => p
                .terms()
                .map(|(m, c)| c / (qi(m[0] as i64 + 1) * qi(m[1] as i64 + 1)))
                .sum(),
            ChartDomain::Triangle { third } => {
                // Affine map (0,0),(1,0),(0,1) → (0,0),(1,0),third has
                // Jacobian [[1, a], [0, b]] with |det| = b.
                let images = [
                    &Poly::var(2, 0) + &Poly::var(2, 1).scale(&third[0]),
                    Poly::var(2, 1).scale(&third[1]),
                ];
                let pulled = p.substitute(&images);
                &third[1].abs() * &integrate_ref_simplex(&pulled)
            }
        }
    }

    /// Chart coordinates of the barycenter.
    pub fn barycenter_chart(&self) -> Vec<Q> {
        self.chart_coords(&self.barycenter.clone())
    }

    /// Chart variable `s_j` recentered at the barycenter.
    pub fn centered_var(&self, j: usize) -> Poly {
        let c = self.barycenter_chart();
        &Poly::var(self.nvars(), j) - &Poly::constant(self.nvars(), c[j].clone())
    }

    /// Squared ratio (true measure)/(chart measure); exact.
    pub fn metric_scale_sq(&self) -> Q {
        self.tangents_raw.iter().map(|t| dot(t, t)).product()
    }

    /// Ratio (true measure)/(chart measure) when rational.
    pub fn metric_scale(&self) -> Option<Q> {
        sqrt_exact(&self.metric_scale_sq())
    }

    /// True face measure (length/area) when rational.
    pub fn measure(&self) -> Option<Q> {
        Some(self.metric_scale()? * self.domain.measure())
    }

    /// Face diameter in floating point, for the weighted estimator path.
    pub fn diameter_f64(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                let d2: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| {
                        let t = to_f64(x) - to_f64(y);
                        t * t
                    })
                    .sum();
                best = best.max(d2.sqrt());
            }
        }
        best
    }

    /// Canonical identity: sorted vertex coordinate tuples.
    fn key(&self) -> Vec<Vec<String>> {
        let mut k: Vec<Vec<String>> = self
            .vertices
            .iter()
            .map(|v| v.iter().map(format_q).collect())
            .collect();
        k.sort();
        k
    }
}

fn sub(a: &Point, b: &Point) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn cross(a: &[Q], b: &[Q]) -> Vec<Q> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

/// `∫_{ref simplex} x^α dx = α! / (|α| + d)!` summed over the terms.
fn integrate_ref_simplex(p: &Poly) -> Q {
    let d = p.nvars() as u64;
    p.terms()
        .map(|(mono, c)| {
            let mut num = Q::from_integer(1.into());
            for &e in mono {
                num *= qi(factorial(e as u64));
            }
            let total: u64 = mono.iter().map(|&e| e as u64).sum();
            c * num / qi(factorial(total + d))
        })
        .sum()
}

fn factorial(n: u64) -> i64 {
    (1..=n as i64).product()
}

/// Exact `∫_T p dx` over a simplex (affine pullback + Dirichlet formula)
/// or an axis-aligned box (tensor-product monomial integration).
pub fn integrate_cell(p: &Poly, cell: &Cell) -> Q {
    let d = cell.dim();
    assert_eq!(p.nvars(), d, "polynomial dimension must match the cell");
    match cell.kind {
        CellKind::Simplex => {
            let j = cell.jacobian();
            let images: Vec<Poly> = (0..d)
                .map(|k| {
                    let mut img = Poly::constant(d, cell.vertices[0][k].clone());
                    for c in 0..d {
                        img = &img + &Poly::var(d, c).scale(&j[(k, c)]);
                    }
                    img
                })
                .collect();
            let pulled = p.substitute(&images);
            j.determinant().abs() * integrate_ref_simplex(&pulled)
        }
        CellKind::Box => {
            let (lo, hi) = (&cell.vertices[0], &cell.vertices[1]);
            p.terms()
                .map(|(mono, c)| {
                    let mut acc = c.clone();
                    for (k, &e) in mono.iter().enumerate() {
                        let n = e as i64 + 1;
                        let hi_pow = pow_q(&hi[k], n as u32);
                        let lo_pow = pow_q(&lo[k], n as u32);
                        acc *= (hi_pow - lo_pow) / qi(n);
                    }
                    acc
                })
                .sum()
        }
    }
}

fn pow_q(x: &Q, n: u32) -> Q {
    let mut acc = qi(1);
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Exact `∫_T |v|² dx`.
pub fn integrate_cell_dot(v: &VecPoly, w: &VecPoly, cell: &Cell) -> Q {
    integrate_cell(&v.dot(w), cell)
}

/// A small mesh: cells plus derived faces and adjacency. Jump orientation is
/// fixed by making the lower-id cell the plus side everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mesh {
    pub dim: usize,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    pub interior_faces: Vec<usize>,
    pub boundary_faces: Vec<usize>,
}

impl Mesh {
    /// Builds a mesh from cells, deriving faces and adjacency. Cell ids are
    /// reassigned to positions.
    pub fn new(mut cells: Vec<Cell>) -> Result<Self, Error> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh needs at least one cell".into()));
        }
        let dim = cells[0].dim();
        if cells.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidMesh("cells of mixed dimension".into()));
        }
        for (i, cell) in cells.iter_mut().enumerate() {
            cell.id = i;
        }
        // Group per-cell facets by their vertex sets.
        let mut groups: BTreeMap<Vec<Vec<String>>, Vec<Face>> = BTreeMap::new();
        for cell in &cells {
            for face in cell.faces() {
                groups.entry(face.key()).or_default().push(face);
            }
        }
        let mut faces = Vec::new();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for (_, group) in groups {
            match group.len() {
                1 => {
                    let f = group.into_iter().next().unwrap();
                    boundary.push(faces.len());
                    faces.push(f);
                }
                2 => {
                    let mut it = group.into_iter();
                    let (a, b) = (it.next().unwrap(), it.next().unwrap());
                    // Keep the plus cell's facet; it is already outward
                    // oriented for that cell.
                    let (mut plus, minus) = if a.plus_cell < b.plus_cell {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    plus.minus_cell = Some(minus.plus_cell);
                    plus.is_boundary = false;
                    interior.push(faces.len());
                    faces.push(plus);
                }
                n => {
                    return Err(Error::InvalidMesh(format!(
                        "a facet is shared by {n} cells"
                    )));
                }
            }
        }
        Ok(Mesh {
            dim,
            cells,
            faces,
            interior_faces: interior,
            boundary_faces: boundary,
        })
    }

    /// The 2D counterexample domain: `T₁ = [−1,0]×[0,1]`, `T₂ = [0,1]×[0,1]`,
    /// one interior edge on `x = 0`.
    pub fn two_square() -> Mesh {
        Mesh::new(vec![
            Cell::axis_box(0, vec![qi(-1), qi(0)], vec![qi(0), qi(1)]).unwrap(),
            Cell::axis_box(1, vec![qi(0), qi(0)], vec![qi(1), qi(1)]).unwrap(),
        ])
        .unwrap()
    }

    /// The 3D counterexample domain: two unit cubes split by `y = 0`,
    /// `T₁` with `y ∈ [−1,0]` and `T₂` with `y ∈ [0,1]`.
    pub fn two_cube() -> Mesh {
        Mesh::new(vec![
            Cell::axis_box(0, vec![qi(0), qi(-1), qi(0)], vec![qi(1), qi(0), qi(1)]).unwrap(),
            Cell::axis_box(1, vec![qi(0), qi(0), qi(0)], vec![qi(1), qi(1), qi(1)]).unwrap(),
        ])
        .unwrap()
    }

    /// Reference triangle plus its mirror image across the diagonal; all
    /// boundary edges have rational length.
    pub fn two_triangle() -> Mesh {
        Mesh::new(vec![
            Cell::simplex(0, vec![vec![qi(0), qi(0)], vec![qi(1), qi(0)], vec![qi(0), qi(1)]])
                .unwrap(),
            Cell::simplex(1, vec![vec![qi(1), qi(0)], vec![qi(1), qi(1)], vec![qi(0), qi(1)]])
                .unwrap(),
        ])
        .unwrap()
    }

    /// Reference tetrahedron plus the mirror image of the origin through the
    /// shared face; every boundary face has rational area.
    pub fn two_tet() -> Mesh {
        let r = |a: i64, b: i64| q(a, b);
        Mesh::new(vec![
            Cell::simplex(
                0,
                vec![
                    vec![qi(0), qi(0), qi(0)],
                    vec![qi(1), qi(0), qi(0)],
                    vec![qi(0), qi(1), qi(0)],
                    vec![qi(0), qi(0), qi(1)],
                ],
            )
            .unwrap(),
            Cell::simplex(
                1,
                vec![
                    vec![qi(1), qi(0), qi(0)],
                    vec![qi(0), qi(1), qi(0)],
                    vec![qi(0), qi(0), qi(1)],
                    vec![r(2, 3), r(2, 3), r(2, 3)],
                ],
            )
            .unwrap(),
        ])
        .unwrap()
    }

    /// `n × n` grid over `[0,1]²`, every square split along its up diagonal.
    pub fn square_grid_simplicial(n: usize) -> Mesh {
        let h = q(1, n as i64);
        let coord = |i: usize| &h * qi(i as i64);
        let mut cells = Vec::new();
        let mut id = 0;
        for i in 0..n {
            for j in 0..n {
                let a = vec![coord(i), coord(j)];
                let b = vec![coord(i + 1), coord(j)];
                let c = vec![coord(i + 1), coord(j + 1)];
                let d = vec![coord(i), coord(j + 1)];
                cells.push(Cell::simplex(id, vec![a.clone(), b, c.clone()]).unwrap());
                id += 1;
                cells.push(Cell::simplex(id, vec![a, c, d]).unwrap());
                id += 1;
            }
        }
        Mesh::new(cells).unwrap()
    }

    pub fn cell(&self, id: usize) -> &Cell {
        &self.cells[id]
    }

    pub fn face(&self, idx: usize) -> &Face {
        &self.faces[idx]
    }

    /// Are all boundary metric scales rational? When true, the Φ moments
    /// computed from chart integrals are exact in the true measure.
    pub fn boundary_measure_exact(&self) -> bool {
        self.boundary_faces
            .iter()
            .all(|&i| self.faces[i].metric_scale().is_some())
    }

    /// Total boundary measure when rational.
    pub fn boundary_measure(&self) -> Option<Q> {
        self.boundary_faces
            .iter()
            .map(|&i| self.faces[i].measure())
            .sum()
    }

    pub fn to_json(&self) -> String {
        let mut vertex_ids: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        let mut vertices: Vec<Vec<String>> = Vec::new();
        let mut cells = Vec::new();
        for cell in &self.cells {
            let ids: Vec<usize> = cell
                .vertices
                .iter()
                .map(|v| {
                    let key: Vec<String> = v.iter().map(format_q).collect();
                    *vertex_ids.entry(key.clone()).or_insert_with(|| {
                        vertices.push(key);
                        vertices.len() - 1
                    })
                })
                .collect();
            cells.push(MeshFileCell {
                kind: cell.kind,
                vertex_ids: ids,
            });
        }
        serde_json::to_string_pretty(&MeshFile {
            dimension: self.dim,
            vertices,
            cells,
        })
        .expect("mesh serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Mesh, Error> {
        let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::MeshParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let points: Vec<Point> = file
            .vertices
            .iter()
            .map(|v| v.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>, _>>())
            .collect::<Result<_, _>>()?;
        if points.iter().any(|p| p.len() != file.dimension) {
            return Err(Error::InvalidMesh(
                "vertex arity disagrees with the declared dimension".into(),
            ));
        }
        let mut cells = Vec::new();
        for (i, c) in file.cells.iter().enumerate() {
            let vs: Vec<Point> = c
                .vertex_ids
                .iter()
                .map(|&id| {
                    points
                        .get(id)
                        .cloned()
                        .ok_or_else(|| Error::InvalidMesh(format!("vertex id {id} out of range")))
                })
                .collect::<Result<_, _>>()?;
            let cell = match c.kind {
                CellKind::Simplex => Cell::simplex(i, vs)?,
                CellKind::Box => {
                    if vs.len() != 2 {
                        return Err(Error::InvalidMesh(
                            "box cells list exactly the lo and hi corners".into(),
                        ));
                    }
                    Cell::axis_box(i, vs[0].clone(), vs[1].clone())?
                }
            };
            cells.push(cell);
        }
        Mesh::new(cells)
    }
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    dimension: usize,
    vertices: Vec<Vec<String>>,
    cells: Vec<MeshFileCell>,
}

#[derive(Serialize, Deserialize)]
struct MeshFileCell {
    kind: CellKind,
    vertex_ids: Vec<usize>,
}

/// Reference triangle `(0,0), (1,0), (0,1)`.
pub fn reference_triangle() -> Cell {
    Cell::simplex(
        0,
        vec![vec![qi(0), qi(0)], vec![qi(1), qi(0)], vec![qi(0), qi(1)]],
    )
    .unwrap()
}

/// Reference tetrahedron.
pub fn reference_tet() -> Cell {
    Cell::simplex(
        0,
        vec![
            vec![qi(0), qi(0), qi(0)],
            vec![qi(1), qi(0), qi(0)],
            vec![qi(0), qi(1), qi(0)],
            vec![qi(0), qi(0), qi(1)],
        ],
    )
    .unwrap()
}

/// Right triangle `(0,0), (4,0), (4,3)`: all three unit normals are rational,
/// which lets tests reproduce normalized systems without radicals.
pub fn triangle_345() -> Cell {
    Cell::simplex(
        0,
        vec![vec![qi(0), qi(0)], vec![qi(4), qi(0)], vec![qi(4), qi(3)]],
    )
    .unwrap()
}

/// Unit cube cell.
pub fn unit_cube() -> Cell {
    Cell::axis_box(0, vec![qi(0), qi(0), qi(0)], vec![qi(1), qi(1), qi(1)]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_square_domain_shape() {
        let m = Mesh::two_square();
        assert_eq!(m.cells.len(), 2);
        assert_eq!(m.interior_faces.len(), 1);
        assert_eq!(m.boundary_faces.len(), 6);
        let f = m.face(m.interior_faces[0]);
        assert_eq!(f.barycenter, vec![qi(0), q(1, 2)]);
        assert_eq!(f.plus_cell, 0);
        assert_eq!(f.minus_cell, Some(1));
        // Outward from the plus cell T1 = [-1,0]x[0,1].
        assert_eq!(f.normal_raw, vec![qi(1), qi(0)]);
        assert_eq!(m.boundary_measure(), Some(qi(6)));
    }

    #[test]
    fn two_cube_domain_shape() {
        let m = Mesh::two_cube();
        assert_eq!(m.cells.len(), 2);
        assert_eq!(m.interior_faces.len(), 1);
        assert_eq!(m.boundary_faces.len(), 10);
        let f = m.face(m.interior_faces[0]);
        assert_eq!(f.barycenter, vec![q(1, 2), qi(0), q(1, 2)]);
        assert_eq!(f.measure(), Some(qi(1)));
        assert_eq!(f.normal_raw, vec![qi(0), qi(1), qi(0)]);
    }

    #[test]
    fn canonical_domains_are_deterministic() {
        assert_eq!(Mesh::two_square(), Mesh::two_square());
        assert_eq!(Mesh::two_cube(), Mesh::two_cube());
    }

    #[test]
    fn reference_triangle_edge_normals() {
        let t = reference_triangle();
        let normals: Vec<Vec<Q>> = t.faces().iter().map(|f| f.normal_raw.clone()).collect();
        assert!(normals.contains(&vec![qi(0), qi(-1)]));
        assert!(normals.contains(&vec![qi(-1), qi(0)]));
        assert!(normals.contains(&vec![qi(1), qi(1)]));
    }

    #[test]
    fn cube_has_six_axis_faces() {
        let faces = unit_cube().faces();
        assert_eq!(faces.len(), 6);
        for f in &faces {
            assert_eq!(f.normal_raw.iter().filter(|x| !x.is_zero()).count(), 1);
            assert_eq!(f.measure(), Some(qi(1)));
        }
    }

    #[test]
    fn tet_faces_have_orthogonal_frames() {
        for f in reference_tet().faces() {
            assert_eq!(dot(&f.tangents_raw[0], &f.tangents_raw[1]), qi(0));
            for t in &f.tangents_raw {
                assert_eq!(dot(&f.normal_raw, t), qi(0));
            }
        }
    }

    #[test]
    fn face_normal_orthogonal_to_vertices_and_outward() {
        for cell in [reference_triangle(), triangle_345()] {
            let centroid = cell.centroid();
            for f in cell.faces() {
                for v in &f.vertices {
                    assert_eq!(dot(&f.normal_raw, &sub(v, &f.barycenter)), qi(0));
                }
                assert!(dot(&f.normal_raw, &sub(&f.barycenter, &centroid)) > qi(0));
            }
        }
    }

    #[test]
    fn integrate_monomials() {
        // ∫ xy over the reference triangle = 1/24.
        let xy = Poly::monomial(2, vec![1, 1], qi(1));
        assert_eq!(integrate_cell(&xy, &reference_triangle()), q(1, 24));
        // ∫ 1 over the unit cube = 1.
        assert_eq!(integrate_cell(&Poly::one(3), &unit_cube()), qi(1));
        // ∫ x² over [−1,0]×[0,1] = 1/3.
        let b = Cell::axis_box(0, vec![qi(-1), qi(0)], vec![qi(0), qi(1)]).unwrap();
        assert_eq!(
            integrate_cell(&Poly::monomial(2, vec![2, 0], qi(1)), &b),
            q(1, 3)
        );
    }

    #[test]
    fn chart_integration_examples() {
        let m = Mesh::two_square();
        let f = m.face(m.interior_faces[0]);
        // Chart is y = s on [0,1]; ∫ s ds = 1/2.
        assert_eq!(f.integrate_chart(&Poly::var(1, 0)), q(1, 2));
        // ∫ λ_ν λ_μ over any edge chart = 1/6 (the paper's 1/6 constant).
        let t = reference_triangle();
        let lambdas = t.barycentric_coords().unwrap();
        for f in t.faces() {
            let mut pairs = 0;
            for i in 0..3 {
                for j in i + 1..3 {
                    let prod = f.restrict_scalar(&(&lambdas[i] * &lambdas[j]));
                    if !prod.is_zero() {
                        assert_eq!(f.integrate_chart(&prod), q(1, 6));
                        pairs += 1;
                    }
                }
            }
            assert_eq!(pairs, 1); // only the two on-edge barycentrics survive
        }
        // Unit-square face of the cube: ∫ 1 = 1.
        let mc = Mesh::two_cube();
        let fc = mc.face(mc.interior_faces[0]);
        assert_eq!(fc.integrate_chart(&Poly::one(2)), qi(1));
    }

    #[test]
    fn restriction_examples() {
        let m = Mesh::two_square();
        let f = m.face(m.interior_faces[0]);
        // (y, −x) on the edge x = 0 with chart y = s becomes (s, 0).
        let v = VecPoly::new(vec![Poly::var(2, 1), Poly::var(2, 0).scale(&qi(-1))]);
        let r = f.restrict_vec(&v);
        assert_eq!(r.components[0], Poly::var(1, 0));
        assert!(r.components[1].is_zero());
        let c = VecPoly::constant(2, &[q(2, 3), qi(-5)]);
        assert_eq!(
            f.restrict_vec(&c),
            VecPoly::constant(1, &[q(2, 3), qi(-5)])
        );
    }

    #[test]
    fn mesh_json_round_trip() {
        for mesh in [
            Mesh::two_square(),
            Mesh::two_cube(),
            Mesh::two_triangle(),
            Mesh::two_tet(),
        ] {
            let text = mesh.to_json();
            let back = Mesh::from_json(&text).unwrap();
            assert_eq!(back, mesh);
        }
        let err = Mesh::from_json("{ not json").unwrap_err();
        assert!(matches!(err, Error::MeshParse { .. }));
    }

    #[test]
    fn grid_mesh_counts() {
        let m = Mesh::square_grid_simplicial(2);
        assert_eq!(m.cells.len(), 8);
        assert_eq!(m.boundary_faces.len(), 8);
        assert_eq!(m.interior_faces.len(), 8);
        assert!(m.boundary_measure_exact());
    }

    #[test]
    fn degenerate_cells_rejected() {
        let bad = Cell::simplex(
            0,
            vec![vec![qi(0), qi(0)], vec![qi(1), qi(1)], vec![qi(2), qi(2)]],
        );
        assert!(matches!(bad, Err(Error::DegenerateCell(_))));
        let flat = Cell::axis_box(0, vec![qi(0), qi(0)], vec![qi(1), qi(0)]);
        assert!(matches!(flat, Err(Error::DegenerateCell(_))));
    }

    #[test]
    fn barycentrics_sum_to_one() {
        for cell in [reference_triangle(), triangle_345(), reference_tet()] {
            let lambdas = cell.barycentric_coords().unwrap();
            let mut sum = Poly::zero(cell.dim());
            for l in &lambdas {
                sum = &sum + l;
            }
            assert_eq!(sum.constant_value(), Some(qi(1)));
            for (i, v) in cell.vertices.iter().enumerate() {
                for (j, l) in lambdas.iter().enumerate() {
                    let expected = if i == j { qi(1) } else { qi(0) };
                    assert_eq!(l.eval(v), expected);
                }
            }
        }
    }

    #[test]
    fn two_tet_mesh_has_rational_boundary() {
        let m = Mesh::two_tet();
        assert_eq!(m.interior_faces.len(), 1);
        assert_eq!(m.boundary_faces.len(), 6);
        assert!(m.boundary_measure_exact());
    }
}
