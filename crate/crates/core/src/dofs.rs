//! Degree-of-freedom functionals, their exact evaluation, and the
//! unisolvence decision. Face weights live in the face chart; selectors
//! apply the raw normal/tangent frames, so every entry is rational and the
//! unisolvence verdict is invariant under positive frame rescaling.

use num_traits::Zero;

use crate::geometry::{integrate_cell, Cell, Face};
use crate::linalg::QMatrix;
use crate::poly::{Poly, VecPoly};
use crate::rational::Q;
use crate::spaces::SpaceBasis;

/// A single moment functional.
#[derive(Clone, Debug)]
pub struct DofFunctional {
    pub label: String,
    pub kind: DofKind,
}

#[derive(Clone, Debug)]
pub enum DofKind {
    /// `∫_f (v·n_f) w ds` with a scalar chart weight.
    FaceNormal { face: Face, weight: Poly },
    /// `∫_f (v·t_f) w ds` on a 2D edge.
    FaceTangential2d { face: Face, weight: Poly },
    /// `∫_f (v×n_f)·r ds` on a 3D face with a vector chart weight.
    FaceCrossNormal3d { face: Face, weight: VecPoly },
    /// `∫_f v·r ds` with a vector chart weight.
    FaceFull { face: Face, weight: VecPoly },
    /// `∫_T v·w dx` with a vector weight on the cell.
    Interior { weight: VecPoly },
}

impl DofFunctional {
    /// Exact chart-measure moment of a field defined on the owning cell.
    pub fn eval(&self, v: &VecPoly, cell: &Cell) -> Q {
        match &self.kind {
            DofKind::Interior { weight } => integrate_cell(&v.dot(weight), cell),
            DofKind::FaceNormal { face, .. }
            | DofKind::FaceTangential2d { face, .. }
            | DofKind::FaceCrossNormal3d { face, .. }
            | DofKind::FaceFull { face, .. } => self.eval_on_trace(&face.restrict_vec(v)),
        }
    }

    /// Same moment applied to an already-restricted chart field (used on
    /// jump traces, which live on the face rather than on one cell).
    pub fn eval_on_trace(&self, trace: &VecPoly) -> Q {
        match &self.kind {
            DofKind::FaceNormal { face, weight } => {
                let scalar = trace.dot_const(&face.normal_raw);
                face.integrate_chart(&(&scalar * weight))
            }
            DofKind::FaceTangential2d { face, weight } => {
                let scalar = trace.dot_const(&face.tangents_raw[0]);
                face.integrate_chart(&(&scalar * weight))
            }
            DofKind::FaceCrossNormal3d { face, weight } => {
                let crossed = trace.cross_const(&face.normal_raw);
                face.integrate_chart(&crossed.dot(weight))
            }
            DofKind::FaceFull { face, weight } => face.integrate_chart(&trace.dot(weight)),
            DofKind::Interior { .. } => panic!("interior DOFs have no face trace"),
        }
    }

    pub fn is_interface(&self) -> bool {
        !matches!(self.kind, DofKind::Interior { .. })
    }
}

/// Entry `(i, j) = φ_i(g_j)` over a generating set.
pub fn dof_matrix(cell: &Cell, space: &SpaceBasis, dofs: &[DofFunctional]) -> QMatrix {
    let mut m = QMatrix::zeros(dofs.len(), space.gens.len());
    for (i, phi) in dofs.iter().enumerate() {
        for (j, g) in space.gens.iter().enumerate() {
            m[(i, j)] = phi.eval(g, cell);
        }
    }
    m
}

/// Three-valued unisolvence verdict. Mis-sized DOF sets are reported
/// loudly rather than padded.
#[derive(Clone, Debug)]
pub enum Unisolvence {
    Unisolvent { determinant: Q },
    Singular { witness: VecPoly },
    NotSquare { ndofs: usize, dim: usize },
}

impl Unisolvence {
    pub fn is_unisolvent(&self) -> bool {
        matches!(self, Unisolvence::Unisolvent { .. })
    }
}

/// Decides unisolvence of a DOF set over a local space by an exact
/// determinant on an independent generating subset.
pub fn unisolvence(cell: &Cell, space: &SpaceBasis, dofs: &[DofFunctional]) -> Unisolvence {
    let basis = if space.gens.len() == space.rank {
        space.clone()
    } else {
        space.pruned()
    };
    if dofs.len() != basis.rank {
        return Unisolvence::NotSquare {
            ndofs: dofs.len(),
            dim: basis.rank,
        };
    }
    let m = dof_matrix(cell, &basis, dofs);
    let det = m.determinant();
    if det.is_zero() {
        let null = m.nullspace();
        let coeffs = &null[0];
        let mut witness = VecPoly::zero(basis.gens[0].ncomp(), basis.gens[0].nvars());
        for (g, c) in basis.gens.iter().zip(coeffs) {
            if !c.is_zero() {
                witness = witness.add(&g.scale(c));
            }
        }
        Unisolvence::Singular { witness }
    } else {
        Unisolvence::Unisolvent { determinant: det }
    }
}

/// Exact dimension of the span of a generator list.
pub fn span_dimension(gens: &[VecPoly]) -> usize {
    crate::spaces::rank_vec(gens)
}

/// For a unisolvent pair, the member of the space with the prescribed DOF
/// values. `None` when the system is not square or is singular.
pub fn interpolate(
    cell: &Cell,
    space: &SpaceBasis,
    dofs: &[DofFunctional],
    values: &[Q],
) -> Option<VecPoly> {
    let basis = if space.gens.len() == space.rank {
        space.clone()
    } else {
        space.pruned()
    };
    if dofs.len() != basis.rank || values.len() != dofs.len() {
        return None;
    }
    let m = dof_matrix(cell, &basis, dofs);
    if m.determinant().is_zero() {
        return None;
    }
    let coeffs = m.solve(values)?;
    let mut out = VecPoly::zero(basis.gens[0].ncomp(), basis.gens[0].nvars());
    for (g, c) in basis.gens.iter().zip(&coeffs) {
        if !c.is_zero() {
            out = out.add(&g.scale(c));
        }
    }
    Some(out)
}

/// The scalar P₁ weights on a face chart, centered at the barycenter:
/// `{1, s₁ − s̄₁(, s₂ − s̄₂)}`.
pub fn p1_chart_weights(face: &Face) -> Vec<Poly> {
    let mut w = vec![Poly::one(face.nvars())];
    for j in 0..face.nvars() {
        w.push(face.centered_var(j));
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{reference_triangle, triangle_345, Cell};
    use crate::rational::{q, qi};
    use crate::spaces::{basis_cr, basis_enriched_cr_psi, basis_mtw, edge_bubble};

    fn unit_square() -> Cell {
        Cell::axis_box(0, vec![qi(0), qi(0)], vec![qi(1), qi(1)]).unwrap()
    }

    fn tangential_mean(face: &Face) -> DofFunctional {
        DofFunctional {
            label: "t-mean".into(),
            kind: DofKind::FaceTangential2d {
                weight: Poly::one(face.nvars()),
                face: face.clone(),
            },
        }
    }

    #[test]
    fn tangential_mean_on_left_edge() {
        let cell = unit_square();
        let left = cell
            .faces()
            .into_iter()
            .find(|f| f.barycenter[0].is_zero())
            .unwrap();
        let phi = tangential_mean(&left);
        let v = VecPoly::constant(2, &[qi(0), qi(1)]);
        assert_eq!(phi.eval(&v, &cell), qi(1));
    }

    #[test]
    fn interior_moment_example() {
        let tri = reference_triangle();
        let phi = DofFunctional {
            label: "interior".into(),
            kind: DofKind::Interior {
                weight: VecPoly::constant(2, &[qi(1), qi(0)]),
            },
        };
        let v = VecPoly::new(vec![Poly::var(2, 0), Poly::zero(2)]);
        assert_eq!(phi.eval(&v, &tri), q(1, 6));
    }

    fn cr_vector_mean_dofs(cell: &Cell) -> Vec<DofFunctional> {
        let d = cell.dim();
        let mut dofs = Vec::new();
        for (k, face) in cell.faces().iter().enumerate() {
            for c in 0..d {
                let mut e = vec![Q::zero(); d];
                e[c] = qi(1);
                dofs.push(DofFunctional {
                    label: format!("mean[f{k},c{c}]"),
                    kind: DofKind::FaceFull {
                        face: face.clone(),
                        weight: VecPoly::constant(face.nvars(), &e),
                    },
                });
            }
        }
        dofs
    }

    #[test]
    fn cr_edge_means_are_unisolvent() {
        let tri = reference_triangle();
        let space = basis_cr(2);
        let dofs = cr_vector_mean_dofs(&tri);
        assert!(unisolvence(&tri, &space, &dofs).is_unisolvent());
    }

    #[test]
    fn duplicated_dof_row_is_singular_with_witness() {
        let tri = reference_triangle();
        let space = basis_cr(2);
        let mut dofs = cr_vector_mean_dofs(&tri);
        dofs[5] = dofs[0].clone();
        match unisolvence(&tri, &space, &dofs) {
            Unisolvence::Singular { witness } => {
                assert!(!witness.is_zero());
                for phi in &dofs {
                    assert_eq!(phi.eval(&witness, &tri), qi(0));
                }
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn not_square_is_reported() {
        let tri = reference_triangle();
        let space = basis_cr(2);
        let dofs = cr_vector_mean_dofs(&tri)[..4].to_vec();
        assert!(matches!(
            unisolvence(&tri, &space, &dofs),
            Unisolvence::NotSquare { ndofs: 4, dim: 6 }
        ));
    }

    fn normal_p1_plus_tangential_dofs(cell: &Cell) -> Vec<DofFunctional> {
        let mut dofs = Vec::new();
        for (k, face) in cell.faces().iter().enumerate() {
            for (i, w) in p1_chart_weights(face).into_iter().enumerate() {
                dofs.push(DofFunctional {
                    label: format!("n[f{k},q{i}]"),
                    kind: DofKind::FaceNormal {
                        face: face.clone(),
                        weight: w,
                    },
                });
            }
            dofs.push(tangential_mean(face));
        }
        dofs
    }

    #[test]
    fn constrained_cubic_element_is_unisolvent() {
        let tri = reference_triangle();
        let space = basis_mtw(&tri).unwrap();
        let dofs = normal_p1_plus_tangential_dofs(&tri);
        let m = dof_matrix(&tri, &space, &dofs);
        assert_eq!((m.nrows(), m.ncols()), (9, 9));
        assert!(unisolvence(&tri, &space, &dofs).is_unisolvent());
    }

    #[test]
    fn interpolation_reproduces_members() {
        let tri = reference_triangle();
        let space = basis_mtw(&tri).unwrap();
        let dofs = normal_p1_plus_tangential_dofs(&tri);
        let member = space.gens[2].add(&space.gens[5].scale(&q(-3, 7)));
        let values: Vec<Q> = dofs.iter().map(|phi| phi.eval(&member, &tri)).collect();
        let rebuilt = interpolate(&tri, &space, &dofs, &values).unwrap();
        assert_eq!(rebuilt, member);
    }

    #[test]
    fn span_dimension_collapses_scalar_multiples() {
        let v = VecPoly::new(vec![Poly::var(2, 0), Poly::var(2, 1)]);
        assert_eq!(span_dimension(&[v.clone(), v.scale(&qi(2))]), 1);
    }

    #[test]
    fn enriched_cr_unisolvent_and_tangential_system_matches_closed_form() {
        // Unisolvence with the tangential-mean + P1-normal DOF set.
        let tri = reference_triangle();
        let space = basis_enriched_cr_psi(&tri).unwrap();
        let dofs = normal_p1_plus_tangential_dofs(&tri);
        assert!(unisolvence(&tri, &space, &dofs).is_unisolvent());

        // The tangential subsystem: on a right triangle with rational unit
        // normals, weighting edge (a, b) with λ_a, scaling row f by
        // 180/|f|, and using arc measure reproduces the closed-form matrix
        // with diagonal −2 and off-diagonal entries n̂_col · n̂_row.
        let t = triangle_345();
        let lambdas = t.barycentric_coords().unwrap();
        let faces = t.faces();
        let b = edge_bubble(&t).unwrap();
        let edge_pairs = [(0usize, 1usize), (1, 2), (2, 0)];
        let unit_normal = |opp: usize| -> Vec<Q> {
            let n = &faces[opp].normal_raw;
            let len = crate::rational::sqrt_exact(&crate::linalg::dot(n, n)).unwrap();
            n.iter().map(|x| x / &len).collect()
        };
        let mut system = vec![vec![qi(0); 3]; 3];
        for (row, &(a, b2)) in edge_pairs.iter().enumerate() {
            let opp_row = 3 - a - b2;
            let face = &faces[opp_row];
            let n_row = unit_normal(opp_row);
            for (col, &(ca, cb)) in edge_pairs.iter().enumerate() {
                let opp_col = 3 - ca - cb;
                let n_col = unit_normal(opp_col);
                // ψ̂_col · n̂_row restricted to the row edge, weighted by λ_a.
                let scalar = &b * &(&lambdas[ca] - &lambdas[cb]);
                let ndot: Q = n_col.iter().zip(&n_row).map(|(x, y)| x * y).sum();
                let integrand = face.restrict_scalar(&(&scalar * &lambdas[a])).scale(&ndot);
                // Row scale 180/|f| times arc measure |f|·chart = 180·chart.
                system[row][col] = face.integrate_chart(&integrand) * qi(180);
            }
        }
        for (r, row) in system.iter().enumerate() {
            for (c, entry) in row.iter().enumerate() {
                if r == c {
                    assert_eq!(entry, &qi(-2));
                } else {
                    let opp_r = 3 - edge_pairs[r].0 - edge_pairs[r].1;
                    let opp_c = 3 - edge_pairs[c].0 - edge_pairs[c].1;
                    let expected: Q = unit_normal(opp_c)
                        .iter()
                        .zip(&unit_normal(opp_r))
                        .map(|(x, y)| x * y)
                        .sum();
                    assert_eq!(entry, &expected);
                }
            }
            // Diagonal dominance: |−2| > Σ |off-diagonal|.
            let off: Q = row
                .iter()
                .enumerate()
                .filter(|(c, _)| *c != r)
                .map(|(_, x)| if x < &qi(0) { -x.clone() } else { x.clone() })
                .sum();
            assert!(off < qi(2));
        }
    }
}
