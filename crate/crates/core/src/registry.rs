//! The element registry: every named local space with its DOF set, the
//! expected Korn verdicts for the two published tables, and serializable
//! descriptors for the CLI listing.

use serde::{Deserialize, Serialize};

use crate::dofs::{p1_chart_weights, DofFunctional, DofKind};
use crate::geometry::{Cell, Face};
use crate::poly::{Poly, VecPoly};
use crate::rational::{qi, Q};
use crate::spaces::{
    assemble_enriched, assemble_qstar_enriched, basis_bdm1, basis_cr, basis_enriched_cr_psi,
    basis_mtw, basis_rt1, basis_y, SpaceBasis, YKind,
};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseSpace {
    Bdm1,
    Rt1,
    CrVec,
}

impl BaseSpace {
    fn build(self, d: usize) -> SpaceBasis {
        match self {
            BaseSpace::Bdm1 => basis_bdm1(d),
            BaseSpace::Rt1 => basis_rt1(d),
            BaseSpace::CrVec => basis_cr(d),
        }
    }

    fn label(self, d: usize) -> String {
        match self {
            BaseSpace::Bdm1 => "BDM1".into(),
            BaseSpace::Rt1 => "RT1".into(),
            BaseSpace::CrVec => format!("(CR)^{d}"),
        }
    }
}

/// How the local space is built on a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalSpaceKind {
    Plain(BaseSpace),
    ConstrainedCubic,
    EnrichedCrPsi,
    CurlEnriched { base: BaseSpace, y: YKind },
    QstarEnriched { base: BaseSpace },
}

/// One moment family, expanded per face (or once, for interior moments).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DofFamily {
    /// `∫_f (v·n) q ds` for `q` in the centered P₁ chart basis.
    NormalP1,
    /// `∫_f v·t ds` (2D).
    TangentialMean,
    /// `∫_f (v×n)·r ds` for `r` in the RT₀(f) basis (3D).
    CrossRt0,
    /// `∫_f (v×n)·r ds` for constant tangential `r` (3D).
    CrossP0,
    /// `∫_f v ds` componentwise.
    VectorMean,
    /// `∫_T v·e_c dx` componentwise.
    InteriorP0,
}

impl DofFamily {
    fn is_interface(self) -> bool {
        !matches!(self, DofFamily::InteriorP0)
    }

    /// Expands the family into concrete functionals on one face.
    pub fn on_face(self, face: &Face) -> Vec<DofFunctional> {
        match self {
            DofFamily::NormalP1 => p1_chart_weights(face)
                .into_iter()
                .enumerate()
                .map(|(i, weight)| DofFunctional {
                    label: format!("normal-p1[{i}]"),
                    kind: DofKind::FaceNormal {
                        face: face.clone(),
                        weight,
                    },
                })
                .collect(),
            DofFamily::TangentialMean => vec![DofFunctional {
                label: "tangential-mean".into(),
                kind: DofKind::FaceTangential2d {
                    weight: Poly::one(face.nvars()),
                    face: face.clone(),
                },
            }],
            DofFamily::CrossRt0 => {
                let rt0 =
                    crate::spaces::basis_rt0_face(face).expect("RT0 weights need a 3D face");
                rt0.gens
                    .into_iter()
                    .enumerate()
                    .map(|(i, weight)| DofFunctional {
                        label: format!("cross-rt0[{i}]"),
                        kind: DofKind::FaceCrossNormal3d {
                            face: face.clone(),
                            weight,
                        },
                    })
                    .collect()
            }
            DofFamily::CrossP0 => face
                .tangents_raw
                .iter()
                .enumerate()
                .map(|(i, t)| DofFunctional {
                    label: format!("cross-p0[{i}]"),
                    kind: DofKind::FaceCrossNormal3d {
                        face: face.clone(),
                        weight: VecPoly::constant(face.nvars(), t),
                    },
                })
                .collect(),
            DofFamily::VectorMean => {
                let d = face.dim();
                (0..d)
                    .map(|c| {
                        let mut e = vec![Q::zero(); d];
                        e[c] = qi(1);
                        DofFunctional {
                            label: format!("vector-mean[{c}]"),
                            kind: DofKind::FaceFull {
                                face: face.clone(),
                                weight: VecPoly::constant(face.nvars(), &e),
                            },
                        }
                    })
                    .collect()
            }
            DofFamily::InteriorP0 => Vec::new(),
        }
    }

    fn interior(self, d: usize) -> Vec<DofFunctional> {
        match self {
            DofFamily::InteriorP0 => (0..d)
                .map(|c| {
                    let mut e = vec![Q::zero(); d];
                    e[c] = qi(1);
                    DofFunctional {
                        label: format!("interior-p0[{c}]"),
                        kind: DofKind::Interior {
                            weight: VecPoly::constant(d, &e),
                        },
                    }
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    fn descriptor(self) -> DofFamilyDescriptor {
        let (selector, weight_space, domain) = match self {
            DofFamily::NormalP1 => ("normal", "P1", "each_face"),
            DofFamily::TangentialMean => ("tangential", "P0", "each_face"),
            DofFamily::CrossRt0 => ("cross_normal", "RT0", "each_face"),
            DofFamily::CrossP0 => ("cross_normal", "P0", "each_face"),
            DofFamily::VectorMean => ("full_vector", "constants", "each_face"),
            DofFamily::InteriorP0 => ("interior", "constants", "cell"),
        };
        DofFamilyDescriptor {
            selector: selector.into(),
            weight_space: weight_space.into(),
            domain: domain.into(),
        }
    }
}

/// A registered element.
#[derive(Clone, Debug)]
pub struct ElementDef {
    pub name: &'static str,
    pub dim: usize,
    pub space: LocalSpaceKind,
    pub families: &'static [DofFamily],
    /// The published (or classical) verdict on whether the element's
    /// continuity alone yields the Korn inequality.
    pub korn_expected: bool,
    /// `(table, row)` for the published-table rows.
    pub table: Option<(u8, u8)>,
}

impl ElementDef {
    /// The local space on a cell, pruned to an independent basis.
    pub fn local_space(&self, cell: &Cell) -> Result<SpaceBasis, Error> {
        self.check_dim(cell)?;
        let basis = match self.space {
            LocalSpaceKind::Plain(base) => base.build(self.dim),
            LocalSpaceKind::ConstrainedCubic => basis_mtw(cell)?,
            LocalSpaceKind::EnrichedCrPsi => basis_enriched_cr_psi(cell)?,
            LocalSpaceKind::CurlEnriched { base, y } => {
                let yb = basis_y(y, cell)?;
                assemble_enriched(cell, &base.build(self.dim), &yb)?
            }
            LocalSpaceKind::QstarEnriched { base } => {
                assemble_qstar_enriched(cell, &base.build(self.dim))?
            }
        };
        Ok(basis.pruned())
    }

    /// Every DOF of the element on this cell (face families expanded over
    /// all facets, plus interior moments).
    pub fn cell_dofs(&self, cell: &Cell) -> Result<Vec<DofFunctional>, Error> {
        self.check_dim(cell)?;
        let mut dofs = Vec::new();
        for face in cell.faces() {
            for fam in self.families {
                dofs.extend(fam.on_face(&face));
            }
        }
        for fam in self.families {
            dofs.extend(fam.interior(self.dim));
        }
        Ok(dofs)
    }

    /// The interface moments on one (shared) face.
    pub fn interface_dofs(&self, face: &Face) -> Vec<DofFunctional> {
        self.families
            .iter()
            .filter(|f| f.is_interface())
            .flat_map(|f| f.on_face(face))
            .collect()
    }

    fn check_dim(&self, cell: &Cell) -> Result<(), Error> {
        if cell.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "element {} is {}D, cell is {}D",
                self.name,
                self.dim,
                cell.dim()
            )));
        }
        Ok(())
    }

    pub fn base_label(&self) -> String {
        match self.space {
            LocalSpaceKind::Plain(b) | LocalSpaceKind::CurlEnriched { base: b, .. } => {
                b.label(self.dim)
            }
            LocalSpaceKind::QstarEnriched { base } => base.label(self.dim),
            LocalSpaceKind::ConstrainedCubic => {
                "{v in (P3)^2 : div v in P0, v.n|_f in P1}".into()
            }
            LocalSpaceKind::EnrichedCrPsi => "(CR)^2".into(),
        }
    }

    pub fn enrichment_label(&self) -> String {
        match self.space {
            LocalSpaceKind::Plain(_) | LocalSpaceKind::ConstrainedCubic => "none".into(),
            LocalSpaceKind::EnrichedCrPsi => "edge-bubble normal fields psi".into(),
            LocalSpaceKind::CurlEnriched { y, .. } => format!("curl(b_T {y:?})"),
            LocalSpaceKind::QstarEnriched { .. } => "curl(b_T Q*)".into(),
        }
    }

    pub fn descriptor(&self) -> ElementDescriptor {
        ElementDescriptor {
            name: self.name.into(),
            dimension: self.dim,
            base_space: self.base_label(),
            enrichment: self.enrichment_label(),
            dof_set: self.families.iter().map(|f| f.descriptor()).collect(),
            korn_expected: self.korn_expected,
            table: self.table.map(|(table, row)| TableRef { table, row }),
        }
    }
}

/// Serializable element descriptor for listings and reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementDescriptor {
    pub name: String,
    pub dimension: usize,
    pub base_space: String,
    pub enrichment: String,
    pub dof_set: Vec<DofFamilyDescriptor>,
    pub korn_expected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableRef>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DofFamilyDescriptor {
    pub selector: String,
    pub weight_space: String,
    pub domain: String,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TableRef {
    pub table: u8,
    pub row: u8,
}

use DofFamily::*;

pub const REGISTRY: &[ElementDef] = &[
    ElementDef {
        name: "rt1-y1-2d",
        dim: 2,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Rt1,
            y: YKind::Y1,
        },
        families: &[NormalP1, InteriorP0, TangentialMean],
        korn_expected: true,
        table: Some((1, 1)),
    },
    ElementDef {
        name: "bdm1-y1-2d",
        dim: 2,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Bdm1,
            y: YKind::Y1,
        },
        families: &[NormalP1, TangentialMean],
        korn_expected: true,
        table: Some((1, 2)),
    },
    ElementDef {
        name: "rt1-y2-3d",
        dim: 3,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Rt1,
            y: YKind::Y2,
        },
        families: &[NormalP1, InteriorP0, CrossRt0],
        korn_expected: true,
        table: Some((1, 3)),
    },
    ElementDef {
        name: "bdm1-y2-3d",
        dim: 3,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Bdm1,
            y: YKind::Y2,
        },
        families: &[NormalP1, CrossRt0],
        korn_expected: true,
        table: Some((1, 4)),
    },
    ElementDef {
        name: "rt1-y3-3d",
        dim: 3,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Rt1,
            y: YKind::Y3,
        },
        families: &[NormalP1, InteriorP0, CrossP0],
        korn_expected: false,
        table: Some((1, 5)),
    },
    ElementDef {
        name: "bdm1-y3-3d",
        dim: 3,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Bdm1,
            y: YKind::Y3,
        },
        families: &[NormalP1, CrossP0],
        korn_expected: false,
        table: Some((1, 6)),
    },
    ElementDef {
        name: "rt1-y4-2d",
        dim: 2,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Rt1,
            y: YKind::Y4,
        },
        families: &[NormalP1, InteriorP0, TangentialMean],
        korn_expected: true,
        table: Some((2, 1)),
    },
    ElementDef {
        name: "bdm1-y4-2d",
        dim: 2,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Bdm1,
            y: YKind::Y4,
        },
        families: &[NormalP1, TangentialMean],
        korn_expected: true,
        table: Some((2, 2)),
    },
    ElementDef {
        name: "rt1-y5-3d",
        dim: 3,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Rt1,
            y: YKind::Y5,
        },
        families: &[NormalP1, InteriorP0, CrossP0],
        korn_expected: false,
        table: Some((2, 3)),
    },
    ElementDef {
        name: "bdm1-y5-3d",
        dim: 3,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::Bdm1,
            y: YKind::Y5,
        },
        families: &[NormalP1, CrossP0],
        korn_expected: false,
        table: Some((2, 4)),
    },
    ElementDef {
        name: "mtw-2d",
        dim: 2,
        space: LocalSpaceKind::ConstrainedCubic,
        families: &[NormalP1, TangentialMean],
        korn_expected: true,
        table: None,
    },
    ElementDef {
        name: "ecr-psi-2d",
        dim: 2,
        space: LocalSpaceKind::EnrichedCrPsi,
        families: &[NormalP1, TangentialMean],
        korn_expected: true,
        table: None,
    },
    ElementDef {
        name: "ecr-curl-2d",
        dim: 2,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::CrVec,
            y: YKind::Y1,
        },
        families: &[NormalP1, TangentialMean],
        korn_expected: true,
        table: None,
    },
    ElementDef {
        name: "ecr-curl-3d",
        dim: 3,
        space: LocalSpaceKind::CurlEnriched {
            base: BaseSpace::CrVec,
            y: YKind::Y2,
        },
        families: &[NormalP1, CrossRt0],
        korn_expected: true,
        table: None,
    },
    ElementDef {
        name: "v1-qstar-3d",
        dim: 3,
        space: LocalSpaceKind::QstarEnriched {
            base: BaseSpace::Bdm1,
        },
        families: &[NormalP1, CrossRt0],
        korn_expected: true,
        table: None,
    },
    ElementDef {
        name: "cr-2d",
        dim: 2,
        space: LocalSpaceKind::Plain(BaseSpace::CrVec),
        families: &[VectorMean],
        korn_expected: false,
        table: None,
    },
];

pub fn find(name: &str) -> Result<&'static ElementDef, Error> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownElement(name.to_string()))
}

/// Table rows in printed order.
pub fn table_rows(table: u8) -> Vec<&'static ElementDef> {
    let mut rows: Vec<&ElementDef> = REGISTRY
        .iter()
        .filter(|e| e.table.map(|(t, _)| t) == Some(table))
        .collect();
    rows.sort_by_key(|e| e.table.unwrap().1);
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofs::unisolvence;
    use crate::geometry::{reference_tet, reference_triangle};

    #[test]
    fn names_are_unique_and_plentiful() {
        let mut names: Vec<&str> = REGISTRY.iter().map(|e| e.name).collect();
        assert!(names.len() >= 12);
        names.sort();
        names.dedup();
        assert_eq!(names.len(), REGISTRY.len());
    }

    #[test]
    fn descriptors_round_trip_through_json() {
        for e in REGISTRY {
            let d = e.descriptor();
            let text = serde_json::to_string(&d).unwrap();
            let back: ElementDescriptor = serde_json::from_str(&text).unwrap();
            assert_eq!(back.name, e.name);
            assert_eq!(back.dof_set.len(), e.families.len());
        }
    }

    #[test]
    fn dof_counts_match_space_dimensions() {
        for e in REGISTRY {
            let cell = if e.dim == 2 {
                reference_triangle()
            } else {
                reference_tet()
            };
            let space = e.local_space(&cell).unwrap();
            let dofs = e.cell_dofs(&cell).unwrap();
            assert_eq!(
                dofs.len(),
                space.rank,
                "element {}: {} DOFs vs dim {}",
                e.name,
                dofs.len(),
                space.rank
            );
        }
    }

    #[test]
    fn all_registry_elements_are_unisolvent() {
        for e in REGISTRY {
            let cell = if e.dim == 2 {
                reference_triangle()
            } else {
                reference_tet()
            };
            let space = e.local_space(&cell).unwrap();
            let dofs = e.cell_dofs(&cell).unwrap();
            let verdict = unisolvence(&cell, &space, &dofs);
            assert!(
                verdict.is_unisolvent(),
                "element {} should be unisolvent, got {verdict:?}",
                e.name
            );
        }
    }

    #[test]
    fn table_rows_are_ordered() {
        let t1 = table_rows(1);
        assert_eq!(t1.len(), 6);
        assert_eq!(t1[0].name, "rt1-y1-2d");
        assert_eq!(t1[5].name, "bdm1-y3-3d");
        let t2 = table_rows(2);
        assert_eq!(t2.len(), 4);
    }

    #[test]
    fn unknown_element_is_an_error() {
        assert!(matches!(find("nope"), Err(Error::UnknownElement(_))));
        assert!(find("mtw-2d").is_ok());
    }
}
