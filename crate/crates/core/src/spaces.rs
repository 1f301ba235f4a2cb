//! Construction of the local and trace spaces: rigid motions, RT₀ on a
//! face, BDM₁/RT₁, bubbles, the enrichment families Y₁–Y₅, the remedy
//! spaces Q*_f/Q*, the constrained cubic space with constant divergence and
//! linear normal traces, and the enriched nonconforming P₁ spaces.
//!
//! Every dimension is computed as an exact rank of a rational coefficient
//! matrix; claimed dimensions live in tests, never in the constructions.

use num_traits::Zero;

use crate::geometry::{integrate_cell, Cell, Face, Mesh};
use crate::linalg::QMatrix;
use crate::poly::{curl2_scalar, curl3, Mono, Poly, VecPoly};
use crate::rational::{q, qi, Q};
use crate::Error;

/// A list of vector-polynomial generators with its computed rank.
#[derive(Clone, Debug)]
pub struct SpaceBasis {
    pub gens: Vec<VecPoly>,
    pub rank: usize,
}

impl SpaceBasis {
    pub fn new(gens: Vec<VecPoly>) -> Self {
        let rank = rank_vec(&gens);
        Self { gens, rank }
    }

    pub fn dim(&self) -> usize {
        self.rank
    }

    /// Greedy maximal independent subset of the generators, in order.
    pub fn pruned(&self) -> SpaceBasis {
        let mut kept: Vec<VecPoly> = Vec::new();
        let mut rank = 0;
        for g in &self.gens {
            let mut candidate = kept.clone();
            candidate.push(g.clone());
            let r = rank_vec(&candidate);
            if r > rank {
                rank = r;
                kept = candidate;
            }
        }
        SpaceBasis { gens: kept, rank }
    }

    pub fn contains(&self, v: &VecPoly) -> bool {
        let mut all = self.gens.clone();
        all.push(v.clone());
        rank_vec(&all) == self.rank
    }

    pub fn same_span(&self, other: &SpaceBasis) -> bool {
        if self.rank != other.rank {
            return false;
        }
        let mut all = self.gens.clone();
        all.extend(other.gens.iter().cloned());
        rank_vec(&all) == self.rank
    }
}

/// Scalar-space counterpart of [`SpaceBasis`].
#[derive(Clone, Debug)]
pub struct ScalarBasis {
    pub gens: Vec<Poly>,
    pub rank: usize,
}

impl ScalarBasis {
    pub fn new(gens: Vec<Poly>) -> Self {
        let rank = rank_scalar(&gens);
        Self { gens, rank }
    }
}

/// Enrichment argument for `curl(b_T Y)`: scalar in 2D, vector in 3D.
#[derive(Clone, Debug)]
pub enum YBasis {
    Scalar(ScalarBasis),
    Vector(SpaceBasis),
}

impl YBasis {
    pub fn rank(&self) -> usize {
        match self {
            YBasis::Scalar(b) => b.rank,
            YBasis::Vector(b) => b.rank,
        }
    }
}

/// Coefficient rows of vector fields over a shared monomial universe.
pub fn vec_coeff_rows(gens: &[&VecPoly]) -> Vec<Vec<Q>> {
    if gens.is_empty() {
        return Vec::new();
    }
    let ncomp = gens[0].ncomp();
    let nvars = gens[0].nvars();
    assert!(
        gens.iter().all(|g| g.ncomp() == ncomp && g.nvars() == nvars),
        "generators must share shape"
    );
    let mut universe: Vec<(usize, Mono)> = Vec::new();
    {
        let mut seen = std::collections::BTreeSet::new();
        for g in gens {
            for (c, p) in g.components.iter().enumerate() {
                for (m, _) in p.terms() {
                    if seen.insert((c, m.clone())) {
                        universe.push((c, m.clone()));
                    }
                }
            }
        }
        universe.sort();
    }
    gens.iter()
        .map(|g| {
            universe
                .iter()
                .map(|(c, m)| g.components[*c].coeff(m))
                .collect()
        })
        .collect()
}

pub fn rank_vec(gens: &[VecPoly]) -> usize {
    let refs: Vec<&VecPoly> = gens.iter().collect();
    let rows = vec_coeff_rows(&refs);
    crate::linalg::rank_of(&rows)
}

pub fn rank_scalar(gens: &[Poly]) -> usize {
    let wrapped: Vec<VecPoly> = gens.iter().map(|p| VecPoly::new(vec![p.clone()])).collect();
    rank_vec(&wrapped)
}

/// Do two generator lists span the same space of fields?
pub fn same_span_vec(a: &[VecPoly], b: &[VecPoly]) -> bool {
    SpaceBasis::new(a.to_vec()).same_span(&SpaceBasis::new(b.to_vec()))
}

/// A rigid motion `a + A x` with skew `A`, stored by the translation and the
/// independent rotation coefficients (1 in 2D, 3 in 3D).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RigidMotion {
    pub dim: usize,
    pub translation: Vec<Q>,
    pub rotation: Vec<Q>,
}

impl RigidMotion {
    pub fn rot_dim(d: usize) -> usize {
        d * (d - 1) / 2
    }

    pub fn space_dim(d: usize) -> usize {
        d + Self::rot_dim(d)
    }

    /// From stacked coefficients `[translation.., rotation..]`.
    pub fn from_coeffs(d: usize, coeffs: &[Q]) -> Self {
        assert_eq!(coeffs.len(), Self::space_dim(d));
        Self {
            dim: d,
            translation: coeffs[..d].to_vec(),
            rotation: coeffs[d..].to_vec(),
        }
    }

    pub fn coeffs(&self) -> Vec<Q> {
        let mut c = self.translation.clone();
        c.extend(self.rotation.iter().cloned());
        c
    }

    /// As a polynomial field. 2D rotation: `w (−y, x)`. 3D rotation
    /// coefficients `(a₁, a₂, a₃)` fill the skew matrix
    /// `[[0, a₁, a₂], [−a₁, 0, a₃], [−a₂, −a₃, 0]]`.
    pub fn to_field(&self) -> VecPoly {
        let d = self.dim;
        let x = |k| Poly::var(d, k);
        match d {
            2 => {
                let w = &self.rotation[0];
                VecPoly::new(vec![
                    &Poly::constant(2, self.translation[0].clone()) - &x(1).scale(w),
                    &Poly::constant(2, self.translation[1].clone()) + &x(0).scale(w),
                ])
            }
            3 => {
                let [a1, a2, a3] = [&self.rotation[0], &self.rotation[1], &self.rotation[2]];
                VecPoly::new(vec![
                    &Poly::constant(3, self.translation[0].clone())
                        + &(&x(1).scale(a1) + &x(2).scale(a2)),
                    &Poly::constant(3, self.translation[1].clone())
                        + &(&x(0).scale(&-a1.clone()) + &x(2).scale(a3)),
                    &Poly::constant(3, self.translation[2].clone())
                        + &(&x(0).scale(&-a2.clone()) + &x(1).scale(&-a3.clone())),
                ])
            }
            _ => unreachable!("rigid motions exist for d = 2, 3 only"),
        }
    }

    /// Canonical basis of RM(ℝ^d): unit translations then unit rotations.
    pub fn basis(d: usize) -> Vec<RigidMotion> {
        let n = Self::space_dim(d);
        (0..n)
            .map(|i| {
                let mut c = vec![Q::zero(); n];
                c[i] = qi(1);
                Self::from_coeffs(d, &c)
            })
            .collect()
    }
}

/// Rigid motions as a [`SpaceBasis`]; rank is computed, not assumed.
pub fn basis_rm(d: usize) -> SpaceBasis {
    SpaceBasis::new(
        RigidMotion::basis(d)
            .iter()
            .map(RigidMotion::to_field)
            .collect(),
    )
}

/// Boundary moments `∫_{∂Ω} v ds`, one entry per component. Uses the
/// rational metric scale per face when available (always, on axis-aligned
/// domains), otherwise plain chart measure.
pub fn boundary_moments(mesh: &Mesh, v: &VecPoly) -> Vec<Q> {
    let mut moments = vec![Q::zero(); v.ncomp()];
    for &bi in &mesh.boundary_faces {
        let f = mesh.face(bi);
        let scale = f.metric_scale().unwrap_or_else(|| qi(1));
        let restricted = f.restrict_vec(v);
        for (k, comp) in restricted.components.iter().enumerate() {
            moments[k] += &scale * &f.integrate_chart(comp);
        }
    }
    moments
}

/// Basis of the linear space `{m ∈ RM : ∫_{∂Ω} m ds = 0}` whose normalized
/// elements make up the boundary rigid-motion set. Computed as the exact
/// nullspace of the boundary moment map.
pub fn basis_rm_boundary(mesh: &Mesh) -> Vec<RigidMotion> {
    let d = mesh.dim;
    let rm = RigidMotion::basis(d);
    let cols: Vec<Vec<Q>> = rm
        .iter()
        .map(|m| boundary_moments(mesh, &m.to_field()))
        .collect();
    let mut moment_map = QMatrix::zeros(d, rm.len());
    for (j, col) in cols.iter().enumerate() {
        for i in 0..d {
            moment_map[(i, j)] = col[i].clone();
        }
    }
    moment_map
        .nullspace()
        .iter()
        .map(|c| RigidMotion::from_coeffs(d, &crate::linalg::normalize_vec(c)))
        .collect()
}

/// RT₀(f) on a 3D face in the barycenter-centered chart: the two constant
/// tangents and the radial field `x − c_f`.
pub fn basis_rt0_face(face: &Face) -> Result<SpaceBasis, Error> {
    if face.dim() != 3 {
        return Err(Error::Unsupported(
            "RT0 face space lives on 3D faces; 2D edges use constants".into(),
        ));
    }
    let nv = face.nvars();
    let t1 = VecPoly::constant(nv, &face.tangents_raw[0]);
    let t2 = VecPoly::constant(nv, &face.tangents_raw[1]);
    let radial = {
        let mut comps = vec![Poly::zero(nv); 3];
        for (j, t) in face.tangents_raw.iter().enumerate() {
            let s = face.centered_var(j);
            for (k, comp) in comps.iter_mut().enumerate() {
                *comp = &*comp + &s.scale(&t[k]);
            }
        }
        VecPoly::new(comps)
    };
    Ok(SpaceBasis::new(vec![t1, t2, radial]))
}

/// Tangential traces `(v · t_f)|_f` of rigid motions on a 2D edge.
pub fn rm_tangential_traces(face: &Face) -> ScalarBasis {
    assert_eq!(face.dim(), 2);
    let t = &face.tangents_raw[0];
    ScalarBasis::new(
        RigidMotion::basis(2)
            .iter()
            .map(|m| face.restrict_vec(&m.to_field()).dot_const(t))
            .collect(),
    )
}

/// Cross-normal traces `(v × n_f)|_f` of rigid motions on a 3D face.
pub fn rm_cross_traces(face: &Face) -> SpaceBasis {
    assert_eq!(face.dim(), 3);
    SpaceBasis::new(
        RigidMotion::basis(3)
            .iter()
            .map(|m| {
                face.restrict_vec(&m.to_field())
                    .cross_const(&face.normal_raw)
            })
            .collect(),
    )
}

/// Cell bubble `b_T = ∏ λ_i`; vanishes on the whole boundary.
pub fn bubble_cell(cell: &Cell) -> Result<Poly, Error> {
    let lambdas = cell.barycentric_coords()?;
    Ok(lambdas
        .iter()
        .fold(Poly::one(cell.dim()), |acc, l| &acc * l))
}

/// Face bubble `b_f = ∏_{v_i ∈ f} λ_i` for the facet opposite vertex
/// `opposite`; vanishes on every other facet.
pub fn bubble_face(cell: &Cell, opposite: usize) -> Result<Poly, Error> {
    let lambdas = cell.barycentric_coords()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != opposite)
        .fold(Poly::one(cell.dim()), |acc, (_, l)| &acc * l))
}

/// The 2D edge bubble `b = λ_iλ_j + λ_jλ_k + λ_kλ_i − 1/6`, which is
/// orthogonal to P₁ on every edge.
pub fn edge_bubble(cell: &Cell) -> Result<Poly, Error> {
    if cell.dim() != 2 {
        return Err(Error::Unsupported(
            "the edge bubble is a 2D construction".into(),
        ));
    }
    let l = cell.barycentric_coords()?;
    let mut b = Poly::constant(2, q(-1, 6));
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        b = &b + &(&l[i] * &l[j]);
    }
    Ok(b)
}

/// Basis of `(P₁)^d`, ordered component-major.
pub fn p1_vector_basis(d: usize) -> Vec<VecPoly> {
    let mut scalars = vec![Poly::one(d)];
    for k in 0..d {
        scalars.push(Poly::var(d, k));
    }
    let mut gens = Vec::new();
    for comp in 0..d {
        for s in &scalars {
            let mut v = VecPoly::zero(d, d);
            v.components[comp] = s.clone();
            gens.push(v);
        }
    }
    gens
}

/// Componentwise nonconforming P₁ local space: as a polynomial space this
/// is `(P₁)^d`; the nonconformity lives in the face-mean degrees of freedom.
pub fn basis_cr(d: usize) -> SpaceBasis {
    SpaceBasis::new(p1_vector_basis(d))
}

/// `BDM₁(T) = (P₁)^d`.
pub fn basis_bdm1(d: usize) -> SpaceBasis {
    SpaceBasis::new(p1_vector_basis(d))
}

/// `RT₁(T) = (P₁)^d + P̃₁ x`.
pub fn basis_rt1(d: usize) -> SpaceBasis {
    let mut gens = p1_vector_basis(d);
    for k in 0..d {
        let p = Poly::var(d, k);
        gens.push(VecPoly::new((0..d).map(|i| &p * &Poly::var(d, i)).collect()));
    }
    SpaceBasis::new(gens)
}

/// Enrichment families. `Y₁ = P₁` (2D scalar), `Y₂ = (P₁)³`,
/// `Y₃ = (P₁)³ ⊖ span{(λ_i − 1/3)∇λ_i}` realized as the exact L²(T)
/// orthogonal complement, `Y₄ = Σ_f b_f P₀` (2D scalar),
/// `Y₅ = Σ_f b_f (P₀)³ × n_f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum YKind {
    Y1,
    Y2,
    Y3,
    Y4,
    Y5,
}

pub fn basis_y(kind: YKind, cell: &Cell) -> Result<YBasis, Error> {
    match kind {
        YKind::Y1 => {
            require_dim(cell, 2)?;
            Ok(YBasis::Scalar(ScalarBasis::new(vec![
                Poly::one(2),
                Poly::var(2, 0),
                Poly::var(2, 1),
            ])))
        }
        YKind::Y2 => {
            require_dim(cell, 3)?;
            Ok(YBasis::Vector(SpaceBasis::new(p1_vector_basis(3))))
        }
        YKind::Y3 => {
            require_dim(cell, 3)?;
            let lambdas = cell.barycentric_coords()?;
            let removed: Vec<VecPoly> = lambdas
                .iter()
                .map(|l| {
                    let shifted = l - &Poly::constant(3, q(1, 3));
                    VecPoly::new(
                        (0..3)
                            .map(|k| shifted.scale(&l.derivative(k).constant_value().unwrap()))
                            .collect(),
                    )
                })
                .collect();
            let p1 = p1_vector_basis(3);
            // Constraints ⟨y, g_i⟩_{L²(T)} = 0 select the orthogonal
            // complement of the removed span inside (P₁)³.
            let mut constraints = QMatrix::zeros(removed.len(), p1.len());
            for (i, g) in removed.iter().enumerate() {
                for (j, y) in p1.iter().enumerate() {
                    constraints[(i, j)] = integrate_cell(&y.dot(g), cell);
                }
            }
            let gens: Vec<VecPoly> = constraints
                .nullspace()
                .iter()
                .map(|c| combine_vec(&p1, c))
                .collect();
            Ok(YBasis::Vector(SpaceBasis::new(gens)))
        }
        YKind::Y4 => {
            require_dim(cell, 2)?;
            let gens: Vec<Poly> = (0..3)
                .map(|opposite| bubble_face(cell, opposite))
                .collect::<Result<_, _>>()?;
            Ok(YBasis::Scalar(ScalarBasis::new(gens)))
        }
        YKind::Y5 => {
            require_dim(cell, 3)?;
            let mut gens = Vec::new();
            for (opposite, face) in cell.faces().iter().enumerate() {
                let bf = bubble_face(cell, opposite)?;
                for i in 0..3 {
                    let mut e = vec![Q::zero(); 3];
                    e[i] = qi(1);
                    let cross = cross3(&e, &face.normal_raw);
                    gens.push(VecPoly::constant(3, &cross).mul_scalar(&bf));
                }
            }
            Ok(YBasis::Vector(SpaceBasis::new(gens)))
        }
    }
}

fn require_dim(cell: &Cell, d: usize) -> Result<(), Error> {
    if cell.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "expected a {d}D cell, got {}D",
            cell.dim()
        )));
    }
    Ok(())
}

fn cross3(a: &[Q], b: &[Q]) -> Vec<Q> {
    vec![
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn combine_vec(basis: &[VecPoly], coeffs: &[Q]) -> VecPoly {
    let mut acc = VecPoly::zero(basis[0].ncomp(), basis[0].nvars());
    for (g, c) in basis.iter().zip(coeffs) {
        if !c.is_zero() {
            acc = acc.add(&g.scale(c));
        }
    }
    acc
}

/// `Q*_f(T) = {q × n_f : q ∈ RM(T), ∫_T (q×n_f)·(w×n_f) b_T b_f dx = 0
/// ∀w ∈ (P₀)³}` for the facet opposite vertex `opposite`, pruned to an
/// independent generating set.
pub fn basis_qfstar(cell: &Cell, opposite: usize) -> Result<SpaceBasis, Error> {
    require_dim(cell, 3)?;
    let face = &cell.faces()[opposite];
    let n = &face.normal_raw;
    let bt = bubble_cell(cell)?;
    let bf = bubble_face(cell, opposite)?;
    let weight = &bt * &bf;
    let rm: Vec<VecPoly> = RigidMotion::basis(3)
        .iter()
        .map(RigidMotion::to_field)
        .collect();
    let crossed: Vec<VecPoly> = rm.iter().map(|m| m.cross_const(n)).collect();
    let mut constraints = QMatrix::zeros(3, crossed.len());
    for j in 0..3 {
        let mut e = vec![Q::zero(); 3];
        e[j] = qi(1);
        let w_cross = VecPoly::constant(3, &cross3(&e, n));
        for (k, qxn) in crossed.iter().enumerate() {
            constraints[(j, k)] = integrate_cell(&(&qxn.dot(&w_cross) * &weight), cell);
        }
    }
    let gens: Vec<VecPoly> = constraints
        .nullspace()
        .iter()
        .map(|c| combine_vec(&crossed, c))
        .filter(|g| !g.is_zero())
        .collect();
    Ok(SpaceBasis::new(gens).pruned())
}

/// `Q*(T) = Σ_f b_f Q*_f(T)`.
pub fn basis_qstar(cell: &Cell) -> Result<SpaceBasis, Error> {
    require_dim(cell, 3)?;
    let mut gens = Vec::new();
    for opposite in 0..4 {
        let bf = bubble_face(cell, opposite)?;
        for g in basis_qfstar(cell, opposite)?.gens {
            gens.push(g.mul_scalar(&bf));
        }
    }
    Ok(SpaceBasis::new(gens))
}

/// The constrained cubic space `{v ∈ (P₃)² : div v ∈ P₀,
/// v·n_f|_f ∈ P₁(f) ∀f}`, computed as the exact nullspace of the
/// constraint system over the 20 monomial coefficients.
pub fn basis_mtw(cell: &Cell) -> Result<SpaceBasis, Error> {
    require_dim(cell, 2)?;
    if cell.kind != crate::geometry::CellKind::Simplex {
        return Err(Error::Unsupported(
            "the constrained cubic space needs a triangle".into(),
        ));
    }
    let p3: Vec<Poly> = monomials_up_to(2, 3);
    let mut gens: Vec<VecPoly> = Vec::new();
    for comp in 0..2 {
        for m in &p3 {
            let mut v = VecPoly::zero(2, 2);
            v.components[comp] = m.clone();
            gens.push(v);
        }
    }
    let faces = cell.faces();
    let mut rows: Vec<Vec<Q>> = Vec::new();
    // div v ∈ P0: non-constant coefficients of div vanish.
    for mono in monomial_exponents(2, 2)
        .into_iter()
        .filter(|m| m.iter().sum::<u32>() >= 1)
    {
        rows.push(
            gens.iter()
                .map(|g| crate::poly::div(g).coeff(&mono))
                .collect(),
        );
    }
    // v·n|_f ∈ P1(f): quadratic and cubic chart coefficients vanish.
    for f in &faces {
        for deg in [2u32, 3u32] {
            rows.push(
                gens.iter()
                    .map(|g| {
                        f.restrict_vec(g)
                            .dot_const(&f.normal_raw)
                            .coeff(&[deg])
                    })
                    .collect(),
            );
        }
    }
    let constraints = QMatrix::from_rows(rows);
    let basis: Vec<VecPoly> = constraints
        .nullspace()
        .iter()
        .map(|c| combine_vec(&gens, c))
        .collect();
    Ok(SpaceBasis::new(basis))
}

fn monomial_exponents(nvars: usize, degree: u32) -> Vec<Mono> {
    let mut out = Vec::new();
    let mut mono = vec![0u32; nvars];
    loop {
        if mono.iter().sum::<u32>() <= degree {
            out.push(mono.clone());
        }
        let mut k = 0;
        loop {
            if k == nvars {
                out.sort_by_key(|m| (m.iter().sum::<u32>(), m.clone()));
                return out;
            }
            if mono[k] < degree {
                mono[k] += 1;
                break;
            }
            mono[k] = 0;
            k += 1;
        }
    }
}

fn monomials_up_to(nvars: usize, degree: u32) -> Vec<Poly> {
    monomial_exponents(nvars, degree)
        .into_iter()
        .map(|m| Poly::monomial(nvars, m, qi(1)))
        .collect()
}

/// The 2D enriched nonconforming element built from edge-bubble normal
/// fields: `(P₁)² + span{ψ_ab}` with `ψ_ab = b (λ_a − λ_b) n_ab`.
pub fn basis_enriched_cr_psi(cell: &Cell) -> Result<SpaceBasis, Error> {
    require_dim(cell, 2)?;
    let b = edge_bubble(cell)?;
    let lambdas = cell.barycentric_coords()?;
    let faces = cell.faces();
    let mut gens = p1_vector_basis(2);
    for (a, bb) in [(0usize, 1usize), (1, 2), (2, 0)] {
        let opposite = 3 - a - bb;
        let n = &faces[opposite].normal_raw;
        let scalar = &b * &(&lambdas[a] - &lambdas[bb]);
        gens.push(VecPoly::constant(2, n).mul_scalar(&scalar));
    }
    Ok(SpaceBasis::new(gens))
}

/// The divergence-free enrichment `curl(b_T Y)` as a generator list.
pub fn curl_enrichment(cell: &Cell, y: &YBasis) -> Result<SpaceBasis, Error> {
    let bt = bubble_cell(cell)?;
    let gens = match y {
        YBasis::Scalar(scalars) => {
            require_dim(cell, 2)?;
            scalars
                .gens
                .iter()
                .map(|p| curl2_scalar(&(&bt * p)))
                .collect::<Vec<_>>()
        }
        YBasis::Vector(vectors) => {
            require_dim(cell, 3)?;
            vectors
                .gens
                .iter()
                .map(|v| curl3(&v.mul_scalar(&bt)))
                .collect::<Vec<_>>()
        }
    };
    Ok(SpaceBasis::new(gens))
}

/// `V₀ + curl(b_T Y)`: the base generators together with the
/// divergence-free curl enrichment.
pub fn assemble_enriched(cell: &Cell, base: &SpaceBasis, y: &YBasis) -> Result<SpaceBasis, Error> {
    let curl_part = curl_enrichment(cell, y)?;
    let mut gens = base.gens.clone();
    gens.extend(curl_part.gens);
    Ok(SpaceBasis::new(gens))
}

/// `V⁰ + curl(b_T Q*(T))`, the remedy space.
pub fn assemble_qstar_enriched(cell: &Cell, base: &SpaceBasis) -> Result<SpaceBasis, Error> {
    let qstar = basis_qstar(cell)?;
    assemble_enriched(cell, base, &YBasis::Vector(qstar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{reference_tet, reference_triangle, Mesh};
    use crate::poly::{div, strain_is_zero};

    #[test]
    fn rm_basis_ranks_and_strain_kernel() {
        let b2 = basis_rm(2);
        assert_eq!(b2.rank, 3);
        let b3 = basis_rm(3);
        assert_eq!(b3.rank, 6);
        for g in b2.gens.iter().chain(&b3.gens) {
            assert!(strain_is_zero(g));
        }
        // 2D basis is {(1,0), (0,1), (−y, x)}.
        let rot = &b2.gens[2];
        assert_eq!(rot.components[0], Poly::var(2, 1).scale(&qi(-1)));
        assert_eq!(rot.components[1], Poly::var(2, 0));
    }

    #[test]
    fn rm_boundary_two_square_is_the_printed_line() {
        let mesh = Mesh::two_square();
        let basis = basis_rm_boundary(&mesh);
        assert_eq!(basis.len(), 1);
        // span{(1 − 2y, 2x)}
        let printed = VecPoly::new(vec![
            &Poly::one(2) - &Poly::var(2, 1).scale(&qi(2)),
            Poly::var(2, 0).scale(&qi(2)),
        ]);
        assert!(same_span_vec(&[basis[0].to_field()], &[printed]));
    }

    #[test]
    fn rm_boundary_two_cube_matches_printed_span() {
        let mesh = Mesh::two_cube();
        let basis = basis_rm_boundary(&mesh);
        assert_eq!(basis.len(), 3);
        let ours: Vec<VecPoly> = basis.iter().map(RigidMotion::to_field).collect();
        let x = |k| Poly::var(3, k);
        let printed = vec![
            // m1 = (−1 + 2z, 0, 1 − 2x)
            VecPoly::new(vec![
                &x(2).scale(&qi(2)) - &Poly::one(3),
                Poly::zero(3),
                &Poly::one(3) - &x(0).scale(&qi(2)),
            ]),
            // m2 = (2y, 1 − 2x, 0)
            VecPoly::new(vec![
                x(1).scale(&qi(2)),
                &Poly::one(3) - &x(0).scale(&qi(2)),
                Poly::zero(3),
            ]),
            // m3 = (y, −x + z, −y)
            VecPoly::new(vec![x(1), &x(2) - &x(0), x(1).scale(&qi(-1))]),
        ];
        assert!(same_span_vec(&ours, &printed));
        // Constants never survive the zero-mean constraint.
        for m in &basis {
            assert!(m.rotation.iter().any(|r| !r.is_zero()));
        }
    }

    #[test]
    fn rt0_face_basis_shape() {
        let tet = reference_tet();
        for face in tet.faces() {
            let rt0 = basis_rt0_face(&face).unwrap();
            assert_eq!(rt0.rank, 3);
            // At the barycenter the generators evaluate to t1, t2, 0.
            let bc = face.barycenter_chart();
            assert_eq!(rt0.gens[0].eval(&bc), face.tangents_raw[0]);
            assert_eq!(rt0.gens[1].eval(&bc), face.tangents_raw[1]);
            assert!(rt0.gens[2].eval(&bc).iter().all(|x| x.is_zero()));
        }
        // Calling it on a 2D edge is an error.
        let tri = reference_triangle();
        assert!(basis_rt0_face(&tri.faces()[0]).is_err());
    }

    #[test]
    fn trace_theorem_both_inclusions_on_reference_tet() {
        let tet = reference_tet();
        for face in tet.faces() {
            let traces = rm_cross_traces(&face);
            let rt0 = basis_rt0_face(&face).unwrap();
            assert_eq!(traces.rank, 3);
            assert!(traces.same_span(&rt0));
        }
    }

    #[test]
    fn tangential_rm_trace_is_constant_in_2d() {
        for face in reference_triangle().faces() {
            let traces = rm_tangential_traces(&face);
            assert_eq!(traces.rank, 1);
            for t in &traces.gens {
                assert_eq!(t.degree(), 0);
            }
        }
    }

    #[test]
    fn bubbles() {
        let t = reference_triangle();
        let bt = bubble_cell(&t).unwrap();
        assert_eq!(bt.eval(&[q(1, 3), q(1, 3)]), q(1, 27));
        let b = edge_bubble(&t).unwrap();
        for (opposite, face) in t.faces().iter().enumerate() {
            // b_T vanishes on each edge.
            assert!(face.restrict_scalar(&bt).is_zero());
            // b_f vanishes on every edge but its own.
            let bf = bubble_face(&t, opposite).unwrap();
            for (other, face2) in t.faces().iter().enumerate() {
                let r = face2.restrict_scalar(&bf);
                assert_eq!(r.is_zero(), other != opposite);
            }
            // The edge bubble has zero P1 moments on every edge.
            let rb = face.restrict_scalar(&b);
            assert_eq!(face.integrate_chart(&rb), qi(0));
            assert_eq!(face.integrate_chart(&(&rb * &Poly::var(1, 0))), qi(0));
        }
    }

    #[test]
    fn classic_space_dimensions() {
        assert_eq!(basis_bdm1(2).rank, 6);
        assert_eq!(basis_bdm1(3).rank, 12);
        assert_eq!(basis_rt1(2).rank, 8);
        assert_eq!(basis_rt1(3).rank, 15);
        assert_eq!(basis_cr(2).rank, 6);
        assert_eq!(basis_cr(3).rank, 12);
    }

    #[test]
    fn y_family_dimensions() {
        let tri = reference_triangle();
        let tet = reference_tet();
        assert_eq!(basis_y(YKind::Y1, &tri).unwrap().rank(), 3);
        assert_eq!(basis_y(YKind::Y2, &tet).unwrap().rank(), 12);
        assert_eq!(basis_y(YKind::Y3, &tet).unwrap().rank(), 8);
        assert_eq!(basis_y(YKind::Y4, &tri).unwrap().rank(), 3);
        assert_eq!(basis_y(YKind::Y5, &tet).unwrap().rank(), 8);
        assert!(basis_y(YKind::Y1, &tet).is_err());
    }

    #[test]
    fn qfstar_and_qstar_dimensions() {
        let tet = reference_tet();
        for opposite in 0..4 {
            let qf = basis_qfstar(&tet, opposite).unwrap();
            assert_eq!(qf.rank, 3);
            // Constructed orthogonality holds exactly.
            let face = &tet.faces()[opposite];
            let weight = &bubble_cell(&tet).unwrap() * &bubble_face(&tet, opposite).unwrap();
            for g in &qf.gens {
                for j in 0..3 {
                    let mut e = vec![Q::zero(); 3];
                    e[j] = qi(1);
                    let w = VecPoly::constant(3, &cross3(&e, &face.normal_raw));
                    assert_eq!(integrate_cell(&(&g.dot(&w) * &weight), &tet), qi(0));
                }
            }
        }
        assert_eq!(basis_qstar(&tet).unwrap().rank, 12);
    }

    #[test]
    fn constrained_cubic_space() {
        let tri = reference_triangle();
        let mtw = basis_mtw(&tri).unwrap();
        assert_eq!(mtw.rank, 9);
        for g in &mtw.gens {
            assert!(div(g).degree() == 0);
            for f in tri.faces() {
                let trace = f.restrict_vec(g).dot_const(&f.normal_raw);
                assert!(trace.degree() <= 1);
            }
        }
    }

    #[test]
    fn enriched_cr_spaces() {
        let tri = reference_triangle();
        assert_eq!(basis_enriched_cr_psi(&tri).unwrap().rank, 9);
        let y1 = basis_y(YKind::Y1, &tri).unwrap();
        let curled = assemble_enriched(&tri, &basis_cr(2), &y1).unwrap();
        assert_eq!(curled.rank, 9);
        // curl(b_T q)·n vanishes on every edge.
        let enrich = curl_enrichment(&tri, &y1).unwrap();
        assert_eq!(enrich.rank, 3);
        for g in &enrich.gens {
            for f in tri.faces() {
                assert!(f.restrict_vec(g).dot_const(&f.normal_raw).is_zero());
            }
        }
    }

    #[test]
    fn assembled_enrichment_is_divergence_free_and_additive() {
        let tri = reference_triangle();
        let y1 = basis_y(YKind::Y1, &tri).unwrap();
        let curl_part = curl_enrichment(&tri, &y1).unwrap();
        for g in &curl_part.gens {
            assert!(div(g).is_zero());
        }
        let bdm = basis_bdm1(2);
        let assembled = assemble_enriched(&tri, &bdm, &y1).unwrap();
        assert_eq!(assembled.rank, bdm.rank + curl_part.rank);
        assert_eq!(assembled.rank, 9);

        let tet = reference_tet();
        let y2 = basis_y(YKind::Y2, &tet).unwrap();
        let curl3d = curl_enrichment(&tet, &y2).unwrap();
        assert_eq!(curl3d.rank, 12);
        let rt1 = basis_rt1(3);
        let assembled3 = assemble_enriched(&tet, &rt1, &y2).unwrap();
        assert_eq!(assembled3.rank, rt1.rank + curl3d.rank);
        for g in &curl3d.gens {
            assert!(div(g).is_zero());
        }
    }

    #[test]
    fn rank_is_order_independent() {
        let tri = reference_triangle();
        let mut gens = basis_enriched_cr_psi(&tri).unwrap().gens;
        gens.reverse();
        assert_eq!(SpaceBasis::new(gens).rank, 9);
    }

    #[test]
    fn span_membership_is_exact() {
        let b = basis_bdm1(2);
        let member = b.gens[0].add(&b.gens[3].scale(&q(7, 5)));
        assert!(b.contains(&member));
        let outside = VecPoly::new(vec![Poly::monomial(2, vec![2, 0], qi(1)), Poly::zero(2)]);
        assert!(!b.contains(&outside));
    }
}
