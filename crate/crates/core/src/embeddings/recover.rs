use crate::error::{Error, Result};
use crate::lie_core::{omega, AlgebraElement, Family, GroupFamily};
use crate::linalg::{hermitian_eigen, max_principal_sine, orthogonal_complement, CMatrix};

use super::two_step::isotropic_frame;

/// Accepted distance of an eigenvalue from its theoretical value.
const BAND: f64 = 1e-6;
const MOMENT_TOLERANCE: f64 = 1e-8;

/// Which flag the moment-map points are expected to encode.
#[derive(Clone, Debug, PartialEq)]
pub enum FlagLayout {
    /// SU(n) flag with the Grassmannian factors of `su_grassmann_set`.
    Unitary { multiplicities: Vec<usize> },
    /// Isotropic flag in SO(2n), SO(2n+1) or Sp(n) with the Υ factors of `so_upsilon_set`.
    Isotropic {
        group: GroupFamily,
        multiplicities: Vec<usize>,
    },
}

impl FlagLayout {
    pub fn multiplicities(&self) -> &[usize] {
        match self {
            Self::Unitary { multiplicities } | Self::Isotropic { multiplicities, .. } => multiplicities,
        }
    }

    fn factor_count(&self) -> usize {
        match self {
            Self::Unitary { multiplicities } => multiplicities.len(),
            Self::Isotropic { multiplicities, .. } => multiplicities.len() + 1,
        }
    }

    fn ambient(&self) -> usize {
        match self {
            Self::Unitary { multiplicities } => multiplicities.iter().sum(),
            Self::Isotropic { group, .. } => group.matrix_size(),
        }
    }

    /// Eigenvalue of factor `k` on the plane it selects (`k` itself) or on an earlier plane.
    fn relation(&self, k: usize, plane: usize) -> f64 {
        match self {
            Self::Unitary { multiplicities } => {
                let n: usize = multiplicities.iter().sum();
                let nk = multiplicities[k] as f64;
                if k == plane {
                    n as f64 - nk
                } else {
                    -nk
                }
            }
            Self::Isotropic { multiplicities, .. } => {
                let r = multiplicities.len();
                let s = if k == r { 1.0 } else { (1u64 << (r - 1 - k)) as f64 };
                if k == plane {
                    s
                } else {
                    -s
                }
            }
        }
    }

    fn allowed(&self, k: usize) -> Vec<f64> {
        match self {
            Self::Unitary { .. } => vec![self.relation(k, k), self.relation(k, usize::MAX)],
            Self::Isotropic { .. } => {
                let s = self.relation(k, k);
                vec![-s, 0.0, s]
            }
        }
    }

    /// The partner `u ↦ ū` (SO) or `u ↦ ω ū` (Sp) of an isotropic plane.
    fn partner(&self, x: &CMatrix) -> Option<CMatrix> {
        match self {
            Self::Unitary { .. } => None,
            Self::Isotropic { group, .. } => {
                let bar = x.map(|z| z.conj());
                Some(match group.family {
                    Family::Sp => omega(group.n) * bar,
                    _ => bar,
                })
            }
        }
    }

    /// `‖Xᵗ X‖` (SO) or `‖Xᵗ ω X‖` (Sp) for the stacked flag.
    fn isotropy(&self, x: &CMatrix) -> Option<f64> {
        match self {
            Self::Unitary { .. } => None,
            Self::Isotropic { group, .. } => Some(match group.family {
                Family::Sp => (x.transpose() * omega(group.n) * x).norm(),
                _ => (x.transpose() * x).norm(),
            }),
        }
    }
}

/// Orthonormal bases of the recovered planes, in flag order.
#[derive(Clone, Debug)]
pub struct RecoveredFlag {
    pub planes: Vec<CMatrix>,
    /// Largest `‖μ_k X − c X‖` over the eigen-relations implied by `μ = 0`.
    pub eigen_residual: f64,
    pub orthogonality_residual: f64,
    pub isotropy_residual: Option<f64>,
}

impl RecoveredFlag {
    /// Largest principal angle between recovered and reference planes, plane by plane.
    pub fn max_principal_angle(&self, reference: &[CMatrix]) -> f64 {
        if reference.len() != self.planes.len() {
            return std::f64::consts::FRAC_PI_2;
        }
        self.planes
            .iter()
            .zip(reference)
            .map(|(a, b)| max_principal_sine(a, b).asin())
            .fold(0.0, f64::max)
    }
}

/// The planes of the flag generated by `g` in the layout's conventions.
pub fn generating_planes(layout: &FlagLayout, g: &CMatrix) -> Vec<CMatrix> {
    let frame = match layout {
        FlagLayout::Unitary { .. } => g.clone(),
        FlagLayout::Isotropic { group, .. } => {
            let n = group.n;
            let mut f = CMatrix::zeros(group.matrix_size(), n);
            match group.family {
                Family::Sp => {
                    for k in 0..n {
                        f[(2 * k, k)] = crate::linalg::c(1.0, 0.0);
                    }
                }
                _ => f.rows_mut(0, 2 * n).copy_from(&isotropic_frame(n)),
            }
            g * f
        }
    };
    let mut planes = Vec::new();
    let mut offset = 0;
    for &m in layout.multiplicities() {
        planes.push(frame.columns(offset, m).into_owned());
        offset += m;
    }
    planes
}

fn hstack(blocks: &[CMatrix], rows: usize) -> CMatrix {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        out.columns_mut(offset, b.ncols()).copy_from(b);
        offset += b.ncols();
    }
    out
}

/// Recovers the flag encoded by a zero of the moment map.
///
/// Plane `ℓ` is the top eigenspace of `μ_ℓ` compressed to the orthogonal complement
/// of the planes found so far (and their partners in the isotropic case). Every
/// eigenvalue must sit within `1e-6` of its allowed band and every eigen-relation
/// forced by `μ = 0` is verified; nothing is guessed.
pub fn flag_recover(points: &[AlgebraElement], layout: &FlagLayout) -> Result<RecoveredFlag> {
    let expected = layout.factor_count();
    if points.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: points.len(),
        });
    }
    let size = layout.ambient();
    let mus: Vec<CMatrix> = points.iter().map(AlgebraElement::spectral_part).collect();
    for mu in &mus {
        if mu.shape() != (size, size) {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: mu.nrows(),
            });
        }
    }
    let residual = mus
        .iter()
        .fold(CMatrix::zeros(size, size), |acc, m| acc + m)
        .norm();
    if residual > MOMENT_TOLERANCE {
        return Err(Error::MomentResidual {
            residual,
            tolerance: MOMENT_TOLERANCE,
        });
    }
    for (k, mu) in mus.iter().enumerate() {
        let allowed = layout.allowed(k);
        for l in hermitian_eigen(mu).0 {
            if !allowed.iter().any(|a| (l - a).abs() < BAND) {
                return Err(Error::EigenvalueBand { factor: k, value: l });
            }
        }
    }

    let mults = layout.multiplicities();
    let mut planes: Vec<CMatrix> = Vec::with_capacity(mults.len());
    let mut excluded: Vec<CMatrix> = Vec::new();
    let mut eigen_residual: f64 = 0.0;
    for (l, &nl) in mults.iter().enumerate() {
        let w = if excluded.is_empty() {
            CMatrix::identity(size, size)
        } else {
            orthogonal_complement(&crate::linalg::orthonormal_span(&hstack(&excluded, size), 1e-8))
        };
        let compressed = w.adjoint() * &mus[l] * &w;
        let (values, vectors) = hermitian_eigen(&compressed);
        let top = layout.relation(l, l);
        let keep: Vec<usize> = (0..values.len())
            .filter(|&j| (values[j] - top).abs() < BAND)
            .collect();
        if keep.len() != nl {
            return Err(Error::EigenspaceDimension {
                factor: l,
                expected: nl,
                found: keep.len(),
            });
        }
        let mut basis = CMatrix::zeros(w.ncols(), nl);
        for (j, &k) in keep.iter().enumerate() {
            basis.set_column(j, &vectors.column(k));
        }
        let x = &w * basis;
        for (k, mu) in mus.iter().enumerate() {
            let relevant = match layout {
                FlagLayout::Unitary { .. } => true,
                FlagLayout::Isotropic { .. } => k >= l,
            };
            if relevant {
                let c = layout.relation(k, l);
                eigen_residual = eigen_residual.max((mu * &x - &x * crate::linalg::c(c, 0.0)).norm());
            }
        }
        if let Some(p) = layout.partner(&x) {
            excluded.push(p);
        }
        excluded.push(x.clone());
        planes.push(x);
    }
    if eigen_residual > BAND {
        return Err(Error::FlagInconsistent(format!(
            "eigen-relations hold only to {eigen_residual:.3e}"
        )));
    }
    let stacked = hstack(&planes, size);
    let orthogonality_residual =
        (stacked.adjoint() * &stacked - CMatrix::identity(stacked.ncols(), stacked.ncols())).norm();
    if orthogonality_residual > 1e-8 {
        return Err(Error::FlagInconsistent(format!(
            "recovered planes are not mutually orthogonal ({orthogonality_residual:.3e})"
        )));
    }
    let isotropy_residual = layout.isotropy(&stacked);
    if let Some(iso) = isotropy_residual {
        if iso > 1e-8 {
            return Err(Error::FlagInconsistent(format!(
                "recovered flag is not isotropic ({iso:.3e})"
            )));
        }
    }
    Ok(RecoveredFlag {
        planes,
        eigen_residual,
        orthogonality_residual,
        isotropy_residual,
    })
}
