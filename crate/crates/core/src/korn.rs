//! Jump machinery and the two Korn decision procedures: the interface
//! DOF-coverage test (do the element's shared-face moments control the
//! minimal jump functionals?) and the kernel test (is the nullspace of the
//! right-hand-side form exactly the expected rigid kernel?), plus the local
//! rigid-motion projection, the vertex-averaging smoother, the boundary
//! seminorm, and a floating-point generalized-eigenvalue estimator.

use num_traits::Zero;
use serde::Serialize;

use crate::dofs::{p1_chart_weights, DofFunctional};
use crate::geometry::{integrate_cell, Cell, CellKind, Face, Mesh};
use crate::linalg::{dot, QMatrix};
use crate::poly::{curl2_vector, curl3, grad, strain, Poly, VecPoly};
use crate::rational::{format_q, qi, to_f64, Q};
use crate::registry::{DofFamily, ElementDef};
use crate::spaces::{basis_rm, basis_rm_boundary, basis_rt0_face, RigidMotion, SpaceBasis};
use crate::Error;

/// A piecewise polynomial field: one polynomial per mesh cell, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwField {
    pub pieces: Vec<VecPoly>,
}

impl PwField {
    pub fn new(mesh: &Mesh, pieces: Vec<VecPoly>) -> Self {
        assert_eq!(
            pieces.len(),
            mesh.cells.len(),
            "one piece per cell required"
        );
        Self { pieces }
    }

    /// The same polynomial on every cell.
    pub fn global(mesh: &Mesh, v: &VecPoly) -> Self {
        Self::new(mesh, vec![v.clone(); mesh.cells.len()])
    }

    pub fn constant(mesh: &Mesh, values: &[Q]) -> Self {
        Self::global(mesh, &VecPoly::constant(mesh.dim, values))
    }

    pub fn from_rigid_motions(mesh: &Mesh, motions: &[RigidMotion]) -> Self {
        Self::new(mesh, motions.iter().map(RigidMotion::to_field).collect())
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self {
            pieces: self.pieces.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &PwField) -> Self {
        Self {
            pieces: self
                .pieces
                .iter()
                .zip(&other.pieces)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(VecPoly::is_zero)
    }

    /// All cell pieces stacked into one vector field, for span comparisons.
    fn flatten(&self) -> VecPoly {
        let comps: Vec<Poly> = self
            .pieces
            .iter()
            .flat_map(|p| p.components.iter().cloned())
            .collect();
        VecPoly::new(comps)
    }
}

/// One-sided traces and their normal/tangential split on a face.
#[derive(Clone, Debug)]
pub struct JumpTrace {
    pub face_index: usize,
    /// Plus trace minus minus trace (trace itself on boundary faces).
    pub jump: VecPoly,
    /// `jump · n_raw` in the chart.
    pub normal_part: Poly,
    pub tangential_part: TangentialPart,
}

#[derive(Clone, Debug)]
pub enum TangentialPart {
    /// 2D: `jump · t_raw`.
    Scalar(Poly),
    /// 3D: `jump × n_raw`.
    Cross(VecPoly),
}

pub fn jump_on_face(mesh: &Mesh, u: &PwField, face_index: usize) -> JumpTrace {
    let face = mesh.face(face_index);
    let plus = face.restrict_vec(&u.pieces[face.plus_cell]);
    let jump = match face.minus_cell {
        Some(minus) => plus.sub(&face.restrict_vec(&u.pieces[minus])),
        None => plus,
    };
    let normal_part = jump.dot_const(&face.normal_raw);
    let tangential_part = if mesh.dim == 2 {
        TangentialPart::Scalar(jump.dot_const(&face.tangents_raw[0]))
    } else {
        TangentialPart::Cross(jump.cross_const(&face.normal_raw))
    };
    JumpTrace {
        face_index,
        jump,
        normal_part,
        tangential_part,
    }
}

/// Exact L²(chart) projection of a scalar chart polynomial onto the span
/// of the given chart weights (Gram solve over the rationals).
pub fn project_scalar(face: &Face, g: &Poly, basis: &[Poly]) -> Poly {
    let coeffs = projection_coeffs_scalar(face, g, basis);
    let mut out = Poly::zero(face.nvars());
    for (b, c) in basis.iter().zip(&coeffs) {
        out = &out + &b.scale(c);
    }
    out
}

fn projection_coeffs_scalar(face: &Face, g: &Poly, basis: &[Poly]) -> Vec<Q> {
    let n = basis.len();
    let mut gram = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = face.integrate_chart(&(&basis[i] * &basis[j]));
        }
    }
    let moments: Vec<Q> = basis
        .iter()
        .map(|b| face.integrate_chart(&(g * b)))
        .collect();
    gram.solve(&moments).expect("chart Gram matrices are SPD")
}

/// Squared chart-L² norm of the projection of `g` onto the weight span:
/// `mᵀ G⁻¹ m`.
pub fn projection_norm_sq_scalar(face: &Face, g: &Poly, basis: &[Poly]) -> Q {
    let coeffs = projection_coeffs_scalar(face, g, basis);
    let moments: Vec<Q> = basis
        .iter()
        .map(|b| face.integrate_chart(&(g * b)))
        .collect();
    dot(&coeffs, &moments)
}

fn projection_coeffs_vec(face: &Face, g: &VecPoly, basis: &[VecPoly]) -> Vec<Q> {
    let n = basis.len();
    let mut gram = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = face.integrate_chart(&basis[i].dot(&basis[j]));
        }
    }
    let moments: Vec<Q> = basis
        .iter()
        .map(|b| face.integrate_chart(&g.dot(b)))
        .collect();
    gram.solve(&moments).expect("chart Gram matrices are SPD")
}

pub fn projection_norm_sq_vec(face: &Face, g: &VecPoly, basis: &[VecPoly]) -> Q {
    let coeffs = projection_coeffs_vec(face, g, basis);
    let moments: Vec<Q> = basis
        .iter()
        .map(|b| face.integrate_chart(&g.dot(b)))
        .collect();
    dot(&coeffs, &moments)
}

/// The projected jump components used by the refined inequality.
#[derive(Clone, Debug)]
pub struct JumpProjections {
    /// Chart mean of the normal part.
    pub pi0_normal: Q,
    /// L² projection of the normal part onto chart P₁.
    pub pi1_normal: Poly,
    /// `π₁ − π₀`: the linears-mod-constants component.
    pub pi10_normal: Poly,
    pub tangential: TangentialProjection,
}

#[derive(Clone, Debug)]
pub enum TangentialProjection {
    /// 2D: mean of the tangential part.
    Mean(Q),
    /// 3D: projection coefficients of `jump × n` onto the RT₀(f) basis.
    Rt0(VecPoly),
}

pub fn project_jump(face: &Face, jt: &JumpTrace) -> JumpProjections {
    let p1 = p1_chart_weights(face);
    let pi1 = project_scalar(face, &jt.normal_part, &p1);
    let mean = face.integrate_chart(&jt.normal_part) / face.domain.measure();
    let pi0 = Poly::constant(face.nvars(), mean.clone());
    let tangential = match &jt.tangential_part {
        TangentialPart::Scalar(t) => {
            TangentialProjection::Mean(face.integrate_chart(t) / face.domain.measure())
        }
        TangentialPart::Cross(c) => {
            let rt0 = basis_rt0_face(face).expect("3D face required");
            let coeffs = projection_coeffs_vec(face, c, &rt0.gens);
            let mut out = VecPoly::zero(3, face.nvars());
            for (b, cf) in rt0.gens.iter().zip(&coeffs) {
                out = out.add(&b.scale(cf));
            }
            TangentialProjection::Rt0(out)
        }
    };
    JumpProjections {
        pi0_normal: mean,
        pi10_normal: &pi1 - &pi0,
        pi1_normal: pi1,
        tangential,
    }
}

/// Per-face squared norms of the two minimal jump projections
/// (chart measure, raw frames: vanishing-equivalent to the true norms).
#[derive(Clone, Debug, Serialize)]
pub struct FaceDeficiency {
    pub face: usize,
    pub normal_sq: String,
    pub tangential_sq: String,
}

pub struct JumpDeficiency {
    pub total: Q,
    pub per_face: Vec<(usize, Q, Q)>,
}

pub fn jump_deficiency(mesh: &Mesh, u: &PwField) -> JumpDeficiency {
    let mut total = Q::zero();
    let mut per_face = Vec::new();
    for &fi in &mesh.interior_faces {
        let face = mesh.face(fi);
        let jt = jump_on_face(mesh, u, fi);
        let normal_sq =
            projection_norm_sq_scalar(face, &jt.normal_part, &p1_chart_weights(face));
        let tangential_sq = match &jt.tangential_part {
            TangentialPart::Scalar(t) => {
                projection_norm_sq_scalar(face, t, &[Poly::one(face.nvars())])
            }
            TangentialPart::Cross(c) => {
                let rt0 = basis_rt0_face(face).expect("3D face required");
                projection_norm_sq_vec(face, c, &rt0.gens)
            }
        };
        total += &normal_sq + &tangential_sq;
        per_face.push((fi, normal_sq, tangential_sq));
    }
    JumpDeficiency { total, per_face }
}

/// The minimal interface moment set of the refined inequality on one face:
/// P₁ normal moments plus the tangential mean (2D) or RT₀ cross moments
/// (3D).
pub fn minimal_jump_dofs(face: &Face) -> Vec<DofFunctional> {
    let mut dofs = DofFamily::NormalP1.on_face(face);
    if face.dim() == 2 {
        dofs.extend(DofFamily::TangentialMean.on_face(face));
    } else {
        dofs.extend(DofFamily::CrossRt0.on_face(face));
    }
    dofs
}

/// Boundary rigid-motion moments of a piecewise field:
/// `∫_{∂Ω} u·m_i ds` over the computed basis of the zero-mean rigid
/// motions. Exact whenever every boundary face has a rational metric scale.
pub fn phi_moments(mesh: &Mesh, u: &PwField, rm0: &[RigidMotion]) -> Vec<Q> {
    rm0.iter()
        .map(|m| {
            let mf = m.to_field();
            let mut acc = Q::zero();
            for &bi in &mesh.boundary_faces {
                let face = mesh.face(bi);
                let scale = face.metric_scale().unwrap_or_else(|| qi(1));
                let trace = face.restrict_vec(&u.pieces[face.plus_cell]);
                let integrand = trace.dot(&face.restrict_vec(&mf));
                acc += &scale * &face.integrate_chart(&integrand);
            }
            acc
        })
        .collect()
}

/// Φ² as the Gram norm of the boundary moments; `None` when the boundary
/// span is trivial.
pub fn phi_sq(mesh: &Mesh, u: &PwField) -> Option<Q> {
    let rm0 = basis_rm_boundary(mesh);
    if rm0.is_empty() {
        return None;
    }
    let b = phi_moments(mesh, u, &rm0);
    let n = rm0.len();
    let mut gram = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let prod = rm0[i].to_field();
            let integrand_field = rm0[j].to_field();
            let mut acc = Q::zero();
            for &bi in &mesh.boundary_faces {
                let face = mesh.face(bi);
                let scale = face.metric_scale().unwrap_or_else(|| qi(1));
                let p =
                    face.restrict_vec(&prod).dot(&face.restrict_vec(&integrand_field));
                acc += &scale * &face.integrate_chart(&p);
            }
            gram[(i, j)] = acc;
        }
    }
    let coeffs = gram.solve(&b)?;
    Some(dot(&coeffs, &b))
}

pub fn phi_is_zero(mesh: &Mesh, u: &PwField) -> bool {
    let rm0 = basis_rm_boundary(mesh);
    phi_moments(mesh, u, &rm0).iter().all(Q::is_zero)
}

/// The local projection onto rigid motions fixed by matching the mean and
/// the rotation mean: `∫_T (v − Π_T v) = 0` and `∫_T ∇×(v − Π_T v) = 0`.
pub fn local_rm_projection(cell: &Cell, v: &VecPoly) -> Result<RigidMotion, Error> {
    let d = cell.dim();
    let rm = RigidMotion::basis(d);
    let n = rm.len();
    let momentum = |w: &VecPoly| -> Vec<Q> {
        let mut m: Vec<Q> = w
            .components
            .iter()
            .map(|c| integrate_cell(c, cell))
            .collect();
        if d == 2 {
            m.push(integrate_cell(&curl2_vector(w), cell));
        } else {
            let c = curl3(w);
            for comp in &c.components {
                m.push(integrate_cell(comp, cell));
            }
        }
        m
    };
    let mut a = QMatrix::zeros(n, n);
    for (j, m) in rm.iter().enumerate() {
        let col = momentum(&m.to_field());
        for i in 0..n {
            a[(i, j)] = col[i].clone();
        }
    }
    let rhs = momentum(v);
    let coeffs = a
        .solve(&rhs)
        .ok_or_else(|| Error::DegenerateCell("singular rigid-motion moment system".into()))?;
    Ok(RigidMotion::from_coeffs(d, &coeffs))
}

/// Vertex-averaging smoother: the continuous piecewise-linear field whose
/// nodal value is the average of the one-sided values over the vertex
/// patch.
pub fn vertex_average(mesh: &Mesh, u: &PwField) -> Result<PwField, Error> {
    if mesh.cells.iter().any(|c| c.kind != CellKind::Simplex) {
        return Err(Error::Unsupported(
            "vertex averaging is defined on simplicial meshes".into(),
        ));
    }
    if u.pieces.iter().any(|p| p.degree() > 1) {
        return Err(Error::Unsupported(
            "vertex averaging takes piecewise-linear input".into(),
        ));
    }
    let d = mesh.dim;
    // Patch averages per vertex, keyed by exact coordinates.
    let mut vertex_values: std::collections::BTreeMap<Vec<String>, (Vec<Q>, usize)> =
        std::collections::BTreeMap::new();
    for (ci, cell) in mesh.cells.iter().enumerate() {
        for v in &cell.vertices {
            let key: Vec<String> = v.iter().map(format_q).collect();
            let value = u.pieces[ci].eval(v);
            let entry = vertex_values
                .entry(key)
                .or_insert_with(|| (vec![Q::zero(); d], 0));
            for k in 0..d {
                entry.0[k] += &value[k];
            }
            entry.1 += 1;
        }
    }
    let mut pieces = Vec::new();
    for cell in &mesh.cells {
        let lambdas = cell.barycentric_coords()?;
        let mut piece = VecPoly::zero(d, d);
        for (vi, v) in cell.vertices.iter().enumerate() {
            let key: Vec<String> = v.iter().map(format_q).collect();
            let (sum, count) = &vertex_values[&key];
            for k in 0..d {
                let avg = &sum[k] / qi(*count as i64);
                piece.components[k] = &piece.components[k] + &lambdas[vi].scale(&avg);
            }
        }
        pieces.push(piece);
    }
    Ok(PwField::new(mesh, pieces))
}

/// Number of cells incident to the given vertex.
pub fn patch_size(mesh: &Mesh, vertex: &[Q]) -> usize {
    mesh.cells
        .iter()
        .filter(|c| c.vertices.iter().any(|v| v.as_slice() == vertex))
        .count()
}

/// `Σ_T ∫_T |∇u|² dx`, exact.
pub fn h1_seminorm_sq(mesh: &Mesh, u: &PwField) -> Q {
    mesh.cells
        .iter()
        .zip(&u.pieces)
        .map(|(cell, piece)| {
            piece
                .components
                .iter()
                .map(|comp| {
                    let g = grad(comp);
                    integrate_cell(&g.dot(&g), cell)
                })
                .sum::<Q>()
        })
        .sum()
}

/// `Σ_T ∫_T |D(u)|²_F dx`, exact.
pub fn strain_norm_sq(mesh: &Mesh, u: &PwField) -> Q {
    mesh.cells
        .iter()
        .zip(&u.pieces)
        .map(|(cell, piece)| {
            strain(piece)
                .iter()
                .flatten()
                .map(|e| integrate_cell(&(e * e), cell))
                .sum::<Q>()
        })
        .sum()
}

/// A finite-dimensional piecewise space given by a global basis of fields.
#[derive(Clone, Debug)]
pub struct PwSpace {
    pub basis: Vec<PwField>,
}

impl PwSpace {
    /// Block space: the given per-cell bases with no coupling.
    pub fn piecewise(mesh: &Mesh, per_cell: &[SpaceBasis]) -> PwSpace {
        assert_eq!(per_cell.len(), mesh.cells.len());
        let d = mesh.dim;
        let mut basis = Vec::new();
        for (ci, sb) in per_cell.iter().enumerate() {
            for g in &sb.gens {
                let mut pieces = vec![VecPoly::zero(d, d); mesh.cells.len()];
                pieces[ci] = g.clone();
                basis.push(PwField::new(mesh, pieces));
            }
        }
        PwSpace { basis }
    }

    /// Per-cell rigid motions with no continuity.
    pub fn piecewise_rm(mesh: &Mesh) -> PwSpace {
        let per_cell = vec![basis_rm(mesh.dim); mesh.cells.len()];
        Self::piecewise(mesh, &per_cell)
    }

    /// Globally continuous piecewise-linear vectors, built from vertex hats.
    pub fn continuous_p1(mesh: &Mesh) -> Result<PwSpace, Error> {
        if mesh.cells.iter().any(|c| c.kind != CellKind::Simplex) {
            return Err(Error::Unsupported(
                "the continuous P1 space needs a simplicial mesh".into(),
            ));
        }
        let d = mesh.dim;
        let mut vertex_keys: Vec<Vec<String>> = Vec::new();
        {
            let mut seen = std::collections::BTreeSet::new();
            for cell in &mesh.cells {
                for v in &cell.vertices {
                    let key: Vec<String> = v.iter().map(format_q).collect();
                    if seen.insert(key.clone()) {
                        vertex_keys.push(key);
                    }
                }
            }
            vertex_keys.sort();
        }
        let mut basis = Vec::new();
        for key in &vertex_keys {
            // The scalar hat of this vertex on each incident cell.
            let mut hat_pieces = vec![Poly::zero(d); mesh.cells.len()];
            for (ci, cell) in mesh.cells.iter().enumerate() {
                let lambdas = cell.barycentric_coords()?;
                for (vi, v) in cell.vertices.iter().enumerate() {
                    let vkey: Vec<String> = v.iter().map(format_q).collect();
                    if &vkey == key {
                        hat_pieces[ci] = lambdas[vi].clone();
                    }
                }
            }
            for comp in 0..d {
                let pieces: Vec<VecPoly> = hat_pieces
                    .iter()
                    .map(|h| {
                        let mut v = VecPoly::zero(d, d);
                        v.components[comp] = h.clone();
                        v
                    })
                    .collect();
                basis.push(PwField::new(mesh, pieces));
            }
        }
        Ok(PwSpace { basis })
    }

    /// The element's space on the mesh with its interface DOF continuity
    /// imposed across every interior face (exact nullspace of the
    /// agreement constraints over the block space).
    pub fn element_space(mesh: &Mesh, element: &ElementDef) -> Result<PwSpace, Error> {
        let per_cell: Vec<SpaceBasis> = mesh
            .cells
            .iter()
            .map(|c| element.local_space(c))
            .collect::<Result<_, _>>()?;
        let offsets: Vec<usize> = {
            let mut o = vec![0];
            for sb in &per_cell {
                o.push(o.last().unwrap() + sb.gens.len());
            }
            o
        };
        let total = *offsets.last().unwrap();
        let mut rows: Vec<Vec<Q>> = Vec::new();
        for &fi in &mesh.interior_faces {
            let face = mesh.face(fi);
            let minus = face.minus_cell.expect("interior face");
            let plus = face.plus_cell;
            for phi in element.interface_dofs(face) {
                let mut row = vec![Q::zero(); total];
                for (j, g) in per_cell[plus].gens.iter().enumerate() {
                    row[offsets[plus] + j] = phi.eval_on_trace(&face.restrict_vec(g));
                }
                for (j, g) in per_cell[minus].gens.iter().enumerate() {
                    row[offsets[minus] + j] = -phi.eval_on_trace(&face.restrict_vec(g));
                }
                rows.push(row);
            }
        }
        let d = mesh.dim;
        let block_field = |coeffs: &[Q]| -> PwField {
            let mut pieces = vec![VecPoly::zero(d, d); mesh.cells.len()];
            for (ci, sb) in per_cell.iter().enumerate() {
                for (j, g) in sb.gens.iter().enumerate() {
                    let c = &coeffs[offsets[ci] + j];
                    if !c.is_zero() {
                        pieces[ci] = pieces[ci].add(&g.scale(c));
                    }
                }
            }
            PwField { pieces }
        };
        let basis = if rows.is_empty() {
            (0..total)
                .map(|k| {
                    let mut c = vec![Q::zero(); total];
                    c[k] = qi(1);
                    block_field(&c)
                })
                .collect()
        } else {
            QMatrix::from_rows(rows)
                .nullspace()
                .iter()
                .map(|c| block_field(c))
                .collect()
        };
        Ok(PwSpace { basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Which terms enter the kernel-test right-hand side besides the strain.
#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    pub include_phi: bool,
    /// Add the minimal jump functionals as explicit controls (used when
    /// testing the sharp inequality itself rather than an element's own
    /// continuity).
    pub include_minimal_jumps: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KornReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub element: Option<String>,
    pub check: String,
    pub verdict: String,
    pub kernel_dim: usize,
    pub expected_kernel_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_phi: Option<bool>,
    pub exact_boundary_measure: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    /// Per-cell component polynomials, stable text form.
    pub cells: Vec<Vec<String>>,
    pub h1_seminorm_sq: String,
    pub strain_norm_sq: String,
    pub phi_moments: Vec<String>,
    pub residuals: Vec<FaceDeficiency>,
}

impl KornReport {
    pub fn holds(&self) -> bool {
        self.verdict == "holds"
    }
}

fn witness_report(mesh: &Mesh, w: &PwField) -> WitnessReport {
    let vars: Vec<&str> = if mesh.dim == 2 {
        vec!["x", "y"]
    } else {
        vec!["x", "y", "z"]
    };
    let jd = jump_deficiency(mesh, w);
    let rm0 = basis_rm_boundary(mesh);
    WitnessReport {
        cells: w
            .pieces
            .iter()
            .map(|p| {
                p.components
                    .iter()
                    .map(|c| c.to_string_with(&vars))
                    .collect()
            })
            .collect(),
        h1_seminorm_sq: format_q(&h1_seminorm_sq(mesh, w)),
        strain_norm_sq: format_q(&strain_norm_sq(mesh, w)),
        phi_moments: phi_moments(mesh, w, &rm0).iter().map(format_q).collect(),
        residuals: jd
            .per_face
            .iter()
            .map(|(f, n, t)| FaceDeficiency {
                face: *f,
                normal_sq: format_q(n),
                tangential_sq: format_q(t),
            })
            .collect(),
    }
}

/// Kernel test: intersect the nullspaces of the strain form, optionally the
/// minimal jump moments, and optionally the Φ moments over the given space;
/// the verdict holds exactly when the kernel is the expected rigid kernel
/// (constants with Φ, all rigid motions without).
pub fn korn_kernel_test(mesh: &Mesh, space: &PwSpace, opts: KernelOptions) -> KornReport {
    let d = mesh.dim;
    let nfields = space.basis.len();

    // Strain coefficient conditions: flatten per-cell strain entries.
    let strain_flat: Vec<VecPoly> = space
        .basis
        .iter()
        .map(|u| {
            let comps: Vec<Poly> = u
                .pieces
                .iter()
                .flat_map(|p| strain(p).into_iter().flatten())
                .collect();
            VecPoly::new(comps)
        })
        .collect();
    let strain_rows = {
        let refs: Vec<&VecPoly> = strain_flat.iter().collect();
        crate::spaces::vec_coeff_rows(&refs)
    };
    let mut conditions: Vec<Vec<Q>> = if strain_rows.is_empty() {
        Vec::new()
    } else {
        let m = QMatrix::from_rows(strain_rows).transpose();
        (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
    };

    if opts.include_minimal_jumps {
        for &fi in &mesh.interior_faces {
            let face = mesh.face(fi);
            for phi in minimal_jump_dofs(face) {
                let row: Vec<Q> = space
                    .basis
                    .iter()
                    .map(|u| phi.eval_on_trace(&jump_on_face(mesh, u, fi).jump))
                    .collect();
                conditions.push(row);
            }
        }
    }

    let rm0 = basis_rm_boundary(mesh);
    if opts.include_phi {
        for m in &rm0 {
            let row: Vec<Q> = space
                .basis
                .iter()
                .map(|u| {
                    phi_moments(mesh, u, std::slice::from_ref(m))[0].clone()
                })
                .collect();
            conditions.push(row);
        }
    }

    let kernel_coeffs = if conditions.is_empty() {
        QMatrix::zeros(1, nfields).nullspace()
    } else {
        QMatrix::from_rows(conditions).nullspace()
    };
    let kernel: Vec<PwField> = kernel_coeffs
        .iter()
        .map(|c| {
            let mut acc = PwField::new(mesh, vec![VecPoly::zero(d, d); mesh.cells.len()]);
            for (u, ck) in space.basis.iter().zip(c) {
                if !ck.is_zero() {
                    acc = acc.add(&u.scale(ck));
                }
            }
            acc
        })
        .collect();

    // Expected kernel: constants with Φ, the full rigid motions without.
    let expected_fields: Vec<PwField> = if opts.include_phi {
        (0..d)
            .map(|c| {
                let mut e = vec![Q::zero(); d];
                e[c] = qi(1);
                PwField::constant(mesh, &e)
            })
            .collect()
    } else {
        RigidMotion::basis(d)
            .iter()
            .map(|m| PwField::global(mesh, &m.to_field()))
            .collect()
    };
    let expected_dim = expected_fields.len();

    // Witness: a kernel element outside the expected span, preferring one
    // with positive broken H¹ energy.
    let expected_flat: Vec<VecPoly> = expected_fields.iter().map(PwField::flatten).collect();
    let outside: Vec<&PwField> = kernel
        .iter()
        .filter(|u| {
            let mut all = expected_flat.clone();
            all.push(u.flatten());
            crate::spaces::rank_vec(&all) > expected_dim
        })
        .collect();
    let witness = outside
        .iter()
        .find(|u| !h1_seminorm_sq(mesh, u).is_zero())
        .or(outside.first())
        .map(|u| witness_report(mesh, u));

    let verdict = if kernel.len() == expected_dim && outside.is_empty() {
        "holds"
    } else {
        "fails"
    };
    KornReport {
        element: None,
        check: "kernel".into(),
        verdict: verdict.into(),
        kernel_dim: kernel.len(),
        expected_kernel_dim: expected_dim,
        include_phi: Some(opts.include_phi),
        exact_boundary_measure: mesh.boundary_measure_exact(),
        witness,
    }
}

/// The canonical two-cell configuration for an element's dimension.
pub fn two_cell_mesh(dim: usize) -> Mesh {
    if dim == 2 {
        Mesh::two_triangle()
    } else {
        Mesh::two_tet()
    }
}

/// Interface DOF-coverage test on the two-cell configuration: build the
/// agreement kernel `K = {(v⁺, v⁻) : shared-face DOFs agree}` and decide
/// whether the minimal jump functionals vanish identically on `K` (an
/// exact row-space inclusion). Reproduces the published Korn columns.
pub fn dof_coverage_test(element: &ElementDef) -> Result<KornReport, Error> {
    let mesh = two_cell_mesh(element.dim);
    let fi = mesh.interior_faces[0];
    let face = mesh.face(fi);
    let plus = face.plus_cell;
    let minus = face.minus_cell.expect("interior face");
    let spaces: Vec<SpaceBasis> = mesh
        .cells
        .iter()
        .map(|c| element.local_space(c))
        .collect::<Result<_, _>>()?;
    let sizes = [spaces[0].gens.len(), spaces[1].gens.len()];
    let total = sizes[0] + sizes[1];
    let jump_row = |phi: &DofFunctional| -> Vec<Q> {
        let mut row = vec![Q::zero(); total];
        for (j, g) in spaces[plus].gens.iter().enumerate() {
            row[j] = phi.eval_on_trace(&face.restrict_vec(g));
        }
        for (j, g) in spaces[minus].gens.iter().enumerate() {
            row[sizes[0] + j] = -phi.eval_on_trace(&face.restrict_vec(g));
        }
        row
    };
    let interface = element.interface_dofs(face);
    if interface.is_empty() {
        return Err(Error::Unsupported(format!(
            "element {} has no shared-face DOFs",
            element.name
        )));
    }
    let agreement = QMatrix::from_rows(interface.iter().map(jump_row).collect());
    let minimal = QMatrix::from_rows(minimal_jump_dofs(face).iter().map(jump_row).collect());
    let combined = agreement.vstack(&minimal);

    let k_dim = total - agreement.rank();
    let k_with_minimal = total - combined.rank();
    let verdict = k_dim == k_with_minimal;

    let witness = if verdict {
        None
    } else {
        let null = agreement.nullspace();
        let violating = null
            .iter()
            .find(|c| !crate::linalg::is_zero_vec(&minimal.mul_vec(c)))
            .expect("a violating agreement-kernel vector exists when the rank grows");
        let d = mesh.dim;
        let mut pieces = vec![VecPoly::zero(d, d); 2];
        for (j, g) in spaces[plus].gens.iter().enumerate() {
            if !violating[j].is_zero() {
                pieces[plus] = pieces[plus].add(&g.scale(&violating[j]));
            }
        }
        for (j, g) in spaces[minus].gens.iter().enumerate() {
            let c = &violating[sizes[0] + j];
            if !c.is_zero() {
                pieces[minus] = pieces[minus].add(&g.scale(c));
            }
        }
        Some(witness_report(&mesh, &PwField { pieces }))
    };

    Ok(KornReport {
        element: Some(element.name.to_string()),
        check: "dof-coverage".into(),
        verdict: if verdict { "holds" } else { "fails" }.into(),
        kernel_dim: k_dim,
        expected_kernel_dim: k_with_minimal,
        include_phi: None,
        exact_boundary_measure: mesh.boundary_measure_exact(),
        witness,
    })
}

/// Which jump moment families enter the floating right-hand side.
#[derive(Clone, Copy, Debug)]
pub struct JumpTermSelection {
    pub normal_mean: bool,
    pub normal_linear: bool,
    pub tangential: bool,
}

impl JumpTermSelection {
    pub fn all() -> Self {
        Self {
            normal_mean: true,
            normal_linear: true,
            tangential: true,
        }
    }

    pub fn none() -> Self {
        Self {
            normal_mean: false,
            normal_linear: false,
            tangential: false,
        }
    }
}

/// Floating-point estimate of the Korn constant: the smallest generalized
/// eigenvalue of the right-hand-side form against the broken H¹ form on the
/// complement of their shared kernel. Jump terms carry `(diam f)⁻¹`
/// weights, unit frames, and true measure; this is the only floating-point
/// path in the crate.
pub fn korn_constant_estimate(
    mesh: &Mesh,
    space: &PwSpace,
    include_phi: bool,
    jumps: JumpTermSelection,
) -> Result<f64, Error> {
    let n = space.basis.len();
    if n == 0 {
        return Err(Error::Unsupported("empty space".into()));
    }

    // Exact Gram matrices, floated at the end.
    let mut h = vec![vec![0.0f64; n]; n];
    let mut r = vec![vec![0.0f64; n]; n];
    let mut h_exact = QMatrix::zeros(n, n);
    let mut strain_gram = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let hij: Q = mesh
                .cells
                .iter()
                .enumerate()
                .map(|(ci, cell)| {
                    let a = &space.basis[i].pieces[ci];
                    let b = &space.basis[j].pieces[ci];
                    a.components
                        .iter()
                        .zip(&b.components)
                        .map(|(p, q)| integrate_cell(&grad(p).dot(&grad(q)), cell))
                        .sum::<Q>()
                })
                .sum();
            let sij: Q = mesh
                .cells
                .iter()
                .enumerate()
                .map(|(ci, cell)| {
                    let sa = strain(&space.basis[i].pieces[ci]);
                    let sb = strain(&space.basis[j].pieces[ci]);
                    sa.iter()
                        .flatten()
                        .zip(sb.iter().flatten())
                        .map(|(p, q)| integrate_cell(&(p * q), cell))
                        .sum::<Q>()
                })
                .sum();
            h_exact[(i, j)] = hij.clone();
            h_exact[(j, i)] = hij.clone();
            strain_gram[(i, j)] = sij.clone();
            strain_gram[(j, i)] = sij.clone();
            h[i][j] = to_f64(&hij);
            h[j][i] = h[i][j];
            r[i][j] = to_f64(&sij);
            r[j][i] = r[i][j];
        }
    }

    // Shared-kernel bookkeeping collects the exact moment rows of every
    // RHS ingredient; the shared kernel is null(H) ∩ null(all rows).
    let mut kernel_rows: Vec<Vec<Q>> = Vec::new();

    // Jump terms: per face, per moment, rank-one form m mᵀ / ‖w‖² with
    // weight (diam f)⁻¹ and frame/measure normalization.
    for &fi in &mesh.interior_faces {
        let face = mesh.face(fi);
        let inv_diam = 1.0 / face.diameter_f64();
        let metric = to_f64(&face.metric_scale_sq()).sqrt();
        let n_raw_sq = to_f64(&dot(&face.normal_raw, &face.normal_raw));
        let mut terms: Vec<(DofFunctional, f64)> = Vec::new();
        let p1 = p1_chart_weights(face);
        if jumps.normal_mean {
            for phi in DofFamily::NormalP1.on_face(face) {
                if phi.label.ends_with("[0]") {
                    let wsq = to_f64(&face.integrate_chart(&(&p1[0] * &p1[0])));
                    terms.push((phi, metric / (n_raw_sq * wsq)));
                }
            }
        }
        if jumps.normal_linear {
            for (k, phi) in DofFamily::NormalP1.on_face(face).into_iter().enumerate() {
                if k >= 1 {
                    let wsq = to_f64(&face.integrate_chart(&(&p1[k] * &p1[k])));
                    terms.push((phi, metric / (n_raw_sq * wsq)));
                }
            }
        }
        if jumps.tangential {
            if mesh.dim == 2 {
                let t = &face.tangents_raw[0];
                let t_sq = to_f64(&dot(t, t));
                for phi in DofFamily::TangentialMean.on_face(face) {
                    let wsq = to_f64(&face.domain.measure());
                    terms.push((phi, metric / (t_sq * wsq)));
                }
            } else {
                let rt0 = basis_rt0_face(face)?;
                for (phi, w) in DofFamily::CrossRt0.on_face(face).into_iter().zip(&rt0.gens) {
                    let wsq = to_f64(&face.integrate_chart(&w.dot(w)));
                    terms.push((phi, metric / (n_raw_sq * wsq)));
                }
            }
        }
        for (phi, scale) in terms {
            let row: Vec<Q> = space
                .basis
                .iter()
                .map(|u| phi.eval_on_trace(&jump_on_face(mesh, u, fi).jump))
                .collect();
            let weight = inv_diam * scale;
            for i in 0..n {
                for j in 0..n {
                    r[i][j] += weight * to_f64(&row[i]) * to_f64(&row[j]);
                }
            }
            kernel_rows.push(row);
        }
    }

    if include_phi {
        let rm0 = basis_rm_boundary(mesh);
        if !rm0.is_empty() {
            let k = rm0.len();
            let mut gram = QMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    let a = rm0[i].to_field();
                    let b = rm0[j].to_field();
                    let mut acc = Q::zero();
                    for &bi in &mesh.boundary_faces {
                        let face = mesh.face(bi);
                        let scale = face.metric_scale().unwrap_or_else(|| qi(1));
                        let p = face.restrict_vec(&a).dot(&face.restrict_vec(&b));
                        acc += &scale * &face.integrate_chart(&p);
                    }
                    gram[(i, j)] = acc;
                }
            }
            let moments: Vec<Vec<Q>> = space
                .basis
                .iter()
                .map(|u| phi_moments(mesh, u, &rm0))
                .collect();
            // Φ(u)² = mᵀ G⁻¹ m: assemble via solves against the Gram.
            for i in 0..n {
                let gi = gram
                    .solve(&moments[i])
                    .ok_or_else(|| Error::Unsupported("singular boundary Gram".into()))?;
                for j in 0..n {
                    r[i][j] += to_f64(&dot(&gi, &moments[j]));
                }
            }
            for m in &rm0 {
                kernel_rows.push(
                    space
                        .basis
                        .iter()
                        .map(|u| phi_moments(mesh, u, std::slice::from_ref(m))[0].clone())
                        .collect(),
                );
            }
        }
    }

    // Shared kernel: strain-form kernel ∩ jump/phi moment kernels ∩ H
    // kernel, computed exactly.
    let mut stacked: Vec<Vec<Q>> = (0..n).map(|i| strain_gram.row(i).to_vec()).collect();
    stacked.extend((0..n).map(|i| h_exact.row(i).to_vec()));
    stacked.extend(kernel_rows);
    let shared = QMatrix::from_rows(stacked).nullspace();

    // Complement of the shared kernel: greedily extend to a full basis.
    let mut chosen: Vec<Vec<Q>> = shared.clone();
    let mut complement: Vec<usize> = Vec::new();
    for k in 0..n {
        let mut e = vec![Q::zero(); n];
        e[k] = qi(1);
        let mut candidate = chosen.clone();
        candidate.push(e.clone());
        if crate::linalg::rank_of(&candidate) > chosen.len() {
            chosen.push(e);
            complement.push(k);
        }
    }
    let m = complement.len();
    if m == 0 {
        return Err(Error::Unsupported(
            "numerically singular mass: the space is contained in the shared kernel".into(),
        ));
    }

    let hm = nalgebra::DMatrix::from_fn(m, m, |i, j| h[complement[i]][complement[j]]);
    let rm = nalgebra::DMatrix::from_fn(m, m, |i, j| r[complement[i]][complement[j]]);
    let eig = nalgebra::SymmetricEigen::new(hm.clone());
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if max_ev <= 0.0 {
        return Err(Error::Unsupported(
            "numerically singular mass: no positive H¹ direction".into(),
        ));
    }
    let tol = 1e-10 * max_ev;
    let mut pos_idx = Vec::new();
    let mut zero_idx = Vec::new();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > tol {
            pos_idx.push(i);
        } else {
            zero_idx.push(i);
        }
    }
    let u = &eig.eigenvectors;
    let r_in_eig = u.transpose() * &rm * u;
    let np = pos_idx.len();
    let nz = zero_idx.len();
    let r_pp = nalgebra::DMatrix::from_fn(np, np, |i, j| r_in_eig[(pos_idx[i], pos_idx[j])]);
    let mut r_eff = r_pp.clone();
    if nz > 0 {
        let r_pz = nalgebra::DMatrix::from_fn(np, nz, |i, j| r_in_eig[(pos_idx[i], zero_idx[j])]);
        let r_zz = nalgebra::DMatrix::from_fn(nz, nz, |i, j| r_in_eig[(zero_idx[i], zero_idx[j])]);
        // Pseudo-inverse of the zero-block coupling.
        let zz_eig = nalgebra::SymmetricEigen::new(r_zz);
        let zz_max = zz_eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let zz_tol = 1e-12 * zz_max.max(1.0);
        let inv_vals = nalgebra::DMatrix::from_fn(nz, nz, |i, j| {
            if i == j && zz_eig.eigenvalues[i] > zz_tol {
                1.0 / zz_eig.eigenvalues[i]
            } else {
                0.0
            }
        });
        let pinv = &zz_eig.eigenvectors * inv_vals * zz_eig.eigenvectors.transpose();
        r_eff = &r_pp - &r_pz * pinv * r_pz.transpose();
    }
    let scale = nalgebra::DMatrix::from_fn(np, np, |i, j| {
        if i == j {
            1.0 / eig.eigenvalues[pos_idx[i]].sqrt()
        } else {
            0.0
        }
    });
    let pencil = &scale * r_eff * &scale;
    let sym = (&pencil + pencil.transpose()) * 0.5;
    let min_ev = nalgebra::SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(min_ev.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::registry;

    /// Piecewise rigid motions on the two-square domain from per-cell
    /// coefficients (a, b, w).
    fn pw_rm_2d(mesh: &Mesh, coeffs: [[i64; 3]; 2]) -> PwField {
        let motions: Vec<RigidMotion> = coeffs
            .iter()
            .map(|c| RigidMotion {
                dim: 2,
                translation: vec![qi(c[0]), qi(c[1])],
                rotation: vec![qi(c[2])],
            })
            .collect();
        PwField::from_rigid_motions(mesh, &motions)
    }

    #[test]
    fn jump_of_continuous_field_vanishes() {
        let mesh = Mesh::two_square();
        let u = PwField::global(
            &mesh,
            &VecPoly::new(vec![Poly::var(2, 0), Poly::var(2, 1)]),
        );
        let jt = jump_on_face(&mesh, &u, mesh.interior_faces[0]);
        assert!(jt.jump.is_zero());
        assert!(jt.normal_part.is_zero());
    }

    #[test]
    fn two_square_jump_forms_match_the_closed_forms() {
        let mesh = Mesh::two_square();
        // u_i = (a_i, b_i) + c_i (−y, x): overbars are plus-minus values.
        let u = pw_rm_2d(&mesh, [[5, 2, 3], [1, 7, 2]]);
        let (abar, bbar, cbar) = (qi(5 - 1), qi(2 - 7), qi(3 - 2));
        let fi = mesh.interior_faces[0];
        let jt = jump_on_face(&mesh, &u, fi);
        // normal part = ā − c̄ y (chart y = s), tangential part = b̄.
        let s = Poly::var(1, 0);
        let expected_normal = &Poly::constant(1, abar.clone()) - &s.scale(&cbar);
        assert_eq!(jt.normal_part, expected_normal);
        match &jt.tangential_part {
            TangentialPart::Scalar(t) => {
                assert_eq!(t.constant_value(), Some(bbar.clone()));
            }
            _ => unreachable!(),
        }
        // Moment table: ∫ j·n = ā − c̄/2, ∫ (j·n)s = ā/2 − c̄/3, ∫ j·t = b̄.
        let face = mesh.face(fi);
        assert_eq!(
            face.integrate_chart(&jt.normal_part),
            &abar - &(&cbar / qi(2))
        );
        assert_eq!(
            face.integrate_chart(&(&jt.normal_part * &Poly::var(1, 0))),
            &abar / qi(2) - &cbar / qi(3)
        );
        if let TangentialPart::Scalar(t) = &jt.tangential_part {
            assert_eq!(face.integrate_chart(t), bbar);
        }
    }

    #[test]
    fn two_cube_jump_forms_match_the_closed_forms() {
        let mesh = Mesh::two_cube();
        // u_i = (a,b,c) + A(d,e,f) x, stored plus then minus.
        let mk = |c: [i64; 6]| RigidMotion {
            dim: 3,
            translation: vec![qi(c[0]), qi(c[1]), qi(c[2])],
            rotation: vec![qi(c[3]), qi(c[4]), qi(c[5])],
        };
        let u = PwField::from_rigid_motions(&mesh, &[mk([3, 1, 4, 1, 5, 9]), mk([2, 6, 5, 3, 5, 8])]);
        let (bbar, dbar, fbar) = (qi(1 - 6), qi(1 - 3), qi(9 - 8));
        let (abar, cbar, ebar) = (qi(3 - 2), qi(4 - 5), qi(5 - 5));
        let fi = mesh.interior_faces[0];
        let face = mesh.face(fi);
        let jt = jump_on_face(&mesh, &u, fi);
        // Chart is (x, z) on the unit square; n = e_y.
        let s1 = Poly::var(2, 0);
        let s2 = Poly::var(2, 1);
        let expected_normal =
            &(&Poly::constant(2, bbar.clone()) - &s1.scale(&dbar)) + &s2.scale(&fbar);
        assert_eq!(jt.normal_part, expected_normal);
        match &jt.tangential_part {
            TangentialPart::Cross(c) => {
                // (−(c̄ − ē x), 0, ā + ē z)
                let want0 = &s1.scale(&ebar) - &Poly::constant(2, cbar.clone());
                let want2 = &Poly::constant(2, abar.clone()) + &s2.scale(&ebar);
                assert_eq!(c.components[0], want0);
                assert!(c.components[1].is_zero());
                assert_eq!(c.components[2], want2);
            }
            _ => unreachable!(),
        }
        // A1 = b̄ − d̄/2 + f̄/2.
        assert_eq!(
            face.integrate_chart(&jt.normal_part),
            &(&bbar - &(&dbar / qi(2))) + &(&fbar / qi(2))
        );
    }

    #[test]
    fn jump_reconstruction_identity_3d() {
        // |n|² j = (j·n) n − (j×n) × n, exactly.
        let mesh = Mesh::two_tet();
        let mk = |c: [i64; 6]| RigidMotion {
            dim: 3,
            translation: vec![qi(c[0]), qi(c[1]), qi(c[2])],
            rotation: vec![qi(c[3]), qi(c[4]), qi(c[5])],
        };
        let u = PwField::from_rigid_motions(&mesh, &[mk([1, 2, 3, 4, 5, 6]), mk([6, 5, 4, 3, 2, 1])]);
        let fi = mesh.interior_faces[0];
        let face = mesh.face(fi);
        let jt = jump_on_face(&mesh, &u, fi);
        let n = &face.normal_raw;
        let n_sq = dot(n, n);
        let TangentialPart::Cross(jxn) = &jt.tangential_part else {
            unreachable!()
        };
        let lhs = jt.jump.scale(&n_sq);
        let normal_term = VecPoly::constant(face.nvars(), n).mul_scalar(&jt.normal_part);
        let rhs = normal_term.sub(&jxn.cross_const(n));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn projection_examples() {
        let mesh = Mesh::two_square();
        let fi = mesh.interior_faces[0];
        let face = mesh.face(fi);
        // π₀ of the chart coordinate on a unit edge is 1/2.
        let s = Poly::var(1, 0);
        assert_eq!(
            face.integrate_chart(&s) / face.domain.measure(),
            q(1, 2)
        );
        // π₁ is idempotent and the residual is orthogonal to the range.
        let g = Poly::monomial(1, vec![3], qi(1));
        let p1 = p1_chart_weights(face);
        let proj = project_scalar(face, &g, &p1);
        let again = project_scalar(face, &proj, &p1);
        assert_eq!(proj, again);
        for w in &p1 {
            assert_eq!(face.integrate_chart(&(&(&g - &proj) * w)), qi(0));
        }
    }

    #[test]
    fn deficiency_of_continuous_and_rigid_fields_vanishes() {
        let mesh = Mesh::two_square();
        let rigid = PwField::global(&mesh, &basis_rm(2).gens[2]);
        assert!(jump_deficiency(&mesh, &rigid).total.is_zero());
        // Tangential-only jump: ā = c̄ = 0, b̄ = 1 gives b̄²|f| in the
        // tangential term and zero in the normal term.
        let u = pw_rm_2d(&mesh, [[0, 1, 0], [0, 0, 0]]);
        let jd = jump_deficiency(&mesh, &u);
        assert_eq!(jd.per_face.len(), 1);
        assert_eq!(jd.per_face[0].1, qi(0));
        assert_eq!(jd.per_face[0].2, qi(1));
        assert_eq!(jd.total, qi(1));
    }

    #[test]
    fn phi_closed_form_two_square() {
        let mesh = Mesh::two_square();
        let rm0 = basis_rm_boundary(&mesh);
        assert_eq!(rm0.len(), 1);
        // With m = c(1−2y, 2x): ∫ u·m = c(4(b₂−b₁) + 9/2(c₁+c₂)).
        // The computed basis element is a scalar multiple of (1−2y, 2x).
        let m_field = rm0[0].to_field();
        let c_scale = m_field.components[1].coeff(&[1, 0]) / qi(2);
        let u = pw_rm_2d(&mesh, [[3, 1, 2], [1, 4, 5]]);
        let expected = &c_scale * &(qi(4) * qi(4 - 1) + q(9, 2) * qi(2 + 5));
        assert_eq!(phi_moments(&mesh, &u, &rm0)[0], expected);
        // Constants have Φ = 0.
        let c = PwField::constant(&mesh, &[qi(3), qi(-7)]);
        assert!(phi_is_zero(&mesh, &c));
        assert_eq!(phi_sq(&mesh, &c), Some(qi(0)));
    }

    #[test]
    fn local_projection_fixes_rigid_motions_and_is_idempotent() {
        let tri = crate::geometry::reference_triangle();
        let m = RigidMotion {
            dim: 2,
            translation: vec![q(1, 2), qi(-3)],
            rotation: vec![q(2, 7)],
        };
        let back = local_rm_projection(&tri, &m.to_field()).unwrap();
        assert_eq!(back, m);
        // v = (x², 0): the unique projection is (1/6, 0).
        let v = VecPoly::new(vec![Poly::monomial(2, vec![2, 0], qi(1)), Poly::zero(2)]);
        let proj = local_rm_projection(&tri, &v).unwrap();
        assert_eq!(proj.translation, vec![q(1, 6), qi(0)]);
        assert_eq!(proj.rotation, vec![qi(0)]);
        let again = local_rm_projection(&tri, &proj.to_field()).unwrap();
        assert_eq!(again, proj);
        // The defining moments vanish exactly.
        let resid = v.sub(&proj.to_field());
        for comp in &resid.components {
            assert_eq!(integrate_cell(comp, &tri), qi(0));
        }
        assert_eq!(integrate_cell(&curl2_vector(&resid), &tri), qi(0));
    }

    #[test]
    fn vertex_average_fixes_continuous_and_averages_jumps() {
        let mesh = Mesh::two_triangle();
        let cont = PwField::global(
            &mesh,
            &VecPoly::new(vec![Poly::var(2, 0), Poly::var(2, 1)]),
        );
        assert_eq!(vertex_average(&mesh, &cont).unwrap(), cont);
        // A field differing only in one cell: shared-vertex values average.
        let w1 = VecPoly::constant(2, &[qi(2), qi(0)]);
        let w2 = VecPoly::constant(2, &[qi(4), qi(0)]);
        let u = PwField::new(&mesh, vec![w1, w2]);
        let e = vertex_average(&mesh, &u).unwrap();
        let shared = vec![qi(1), qi(0)];
        assert_eq!(patch_size(&mesh, &shared), 2);
        assert_eq!(e.pieces[0].eval(&shared), vec![qi(3), qi(0)]);
    }

    #[test]
    fn energy_norms() {
        let mesh = Mesh::two_square();
        // c(−y, x) on each unit square has |∇u|² = 2c².
        let u = pw_rm_2d(&mesh, [[0, 0, 1], [0, 0, 1]]);
        assert_eq!(h1_seminorm_sq(&mesh, &u), qi(4));
        assert_eq!(strain_norm_sq(&mesh, &u), qi(0));
        // The rotation-jump counterexample with c = ±1/2 has energy 1.
        let motions = [
            RigidMotion {
                dim: 2,
                translation: vec![qi(0), qi(0)],
                rotation: vec![q(1, 2)],
            },
            RigidMotion {
                dim: 2,
                translation: vec![qi(0), qi(0)],
                rotation: vec![q(-1, 2)],
            },
        ];
        let v = PwField::from_rigid_motions(&mesh, &motions);
        assert_eq!(h1_seminorm_sq(&mesh, &v), qi(1));
        // u = (x, 0) has strain norm² = |T|.
        let shear = PwField::global(
            &mesh,
            &VecPoly::new(vec![Poly::var(2, 0), Poly::zero(2)]),
        );
        assert_eq!(strain_norm_sq(&mesh, &shear), qi(2));
    }

    #[test]
    fn kernel_test_sanity_on_piecewise_rm() {
        let mesh = Mesh::two_square();
        let space = PwSpace::piecewise_rm(&mesh);
        // No jump control, no Φ: the kernel is everything (6 > 3).
        let free = korn_kernel_test(
            &mesh,
            &space,
            KernelOptions {
                include_phi: false,
                include_minimal_jumps: false,
            },
        );
        assert_eq!(free.verdict, "fails");
        assert_eq!(free.kernel_dim, 6);
        assert_eq!(free.expected_kernel_dim, 3);
        assert!(free.witness.is_some());
        // Full minimal jump control plus Φ: only constants remain.
        let full = korn_kernel_test(
            &mesh,
            &space,
            KernelOptions {
                include_phi: true,
                include_minimal_jumps: true,
            },
        );
        assert_eq!(full.verdict, "holds");
        assert_eq!(full.kernel_dim, 2);
    }

    #[test]
    fn coverage_yes_and_no_rows() {
        let yes = dof_coverage_test(registry::find("bdm1-y1-2d").unwrap()).unwrap();
        assert_eq!(yes.verdict, "holds");
        assert!(yes.witness.is_none());
        let no = dof_coverage_test(registry::find("bdm1-y3-3d").unwrap()).unwrap();
        assert_eq!(no.verdict, "fails");
        let witness = no.witness.expect("failing coverage carries a witness");
        // The violated moment is tangential: some tangential residual is
        // nonzero while the normal moments are controlled.
        assert!(witness.residuals.iter().any(|r| r.tangential_sq != "0"));
    }

    #[test]
    fn classical_cr_fails_coverage() {
        let report = dof_coverage_test(registry::find("cr-2d").unwrap()).unwrap();
        assert_eq!(report.verdict, "fails");
    }

    #[test]
    fn estimator_positive_on_continuous_space() {
        let mesh = Mesh::square_grid_simplicial(2);
        let space = PwSpace::continuous_p1(&mesh).unwrap();
        let est =
            korn_constant_estimate(&mesh, &space, true, JumpTermSelection::all()).unwrap();
        assert!(est > 1e-8, "estimate {est} should be positive");
    }

    #[test]
    fn estimator_vanishes_with_admitted_witness() {
        // Piecewise RM on the two-square domain, RHS missing the normal
        // mean term: the normal-mean counterexample direction is in the
        // kernel of the assembled RHS but has positive H¹ energy.
        let mesh = Mesh::two_square();
        let space = PwSpace::piecewise_rm(&mesh);
        let jumps = JumpTermSelection {
            normal_mean: false,
            normal_linear: true,
            tangential: true,
        };
        let est = korn_constant_estimate(&mesh, &space, true, jumps).unwrap();
        assert!(est.abs() <= 1e-10, "estimate {est} should vanish");
    }
}
