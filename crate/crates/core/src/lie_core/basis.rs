use super::{omega, Family, GroupFamily};
use crate::linalg::{c, CMatrix};

/// Orthogonal projection (real Frobenius product) from `u(m)` onto the algebra of `group`.
///
/// The input is first made anti-Hermitian, so any square matrix is accepted.
pub fn project_to_algebra(group: GroupFamily, x: &CMatrix) -> CMatrix {
    let anti = (x - x.adjoint()) * c(0.5, 0.0);
    match group.family {
        Family::SU => {
            let m = anti.nrows();
            let shift = anti.trace() / c(m as f64, 0.0);
            let mut out = anti;
            for k in 0..m {
                out[(k, k)] -= shift;
            }
            out
        }
        Family::SoEven | Family::SoOdd => anti.map(|z| c(z.re, 0.0)),
        Family::Sp => {
            let w = omega(group.n);
            let mirrored = &w * anti.transpose() * &w;
            (anti + mirrored) * c(0.5, 0.0)
        }
    }
}

/// Real-orthonormal basis of the algebra of `group` under `Re Tr(X†Y)`.
///
/// Built by projecting the standard basis of `u(m)` and running Gram–Schmidt.
pub fn algebra_basis(group: GroupFamily) -> Vec<CMatrix> {
    let m = group.matrix_size();
    let mut spanning = Vec::with_capacity(m * m);
    for j in 0..m {
        let mut e = CMatrix::zeros(m, m);
        e[(j, j)] = c(0.0, 1.0);
        spanning.push(e);
        for k in (j + 1)..m {
            let mut a = CMatrix::zeros(m, m);
            a[(j, k)] = c(1.0, 0.0);
            a[(k, j)] = c(-1.0, 0.0);
            spanning.push(a);
            let mut s = CMatrix::zeros(m, m);
            s[(j, k)] = c(0.0, 1.0);
            s[(k, j)] = c(0.0, 1.0);
            spanning.push(s);
        }
    }

    let mut basis: Vec<CMatrix> = Vec::with_capacity(group.algebra_dim());
    for v in spanning {
        let mut w = project_to_algebra(group, &v);
        for _ in 0..2 {
            for b in &basis {
                let overlap = real_inner(b, &w);
                w -= b * c(overlap, 0.0);
            }
        }
        let norm = w.norm();
        if norm > 1e-10 {
            basis.push(w / c(norm, 0.0));
        }
    }
    debug_assert_eq!(basis.len(), group.algebra_dim());
    basis
}

pub(crate) fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::membership_residual;

    #[test]
    fn basis_sizes_match_formulas() {
        for g in [
            GroupFamily::su(1),
            GroupFamily::su(2),
            GroupFamily::su(5),
            GroupFamily::so_even(1),
            GroupFamily::so_even(3),
            GroupFamily::so_odd(1),
            GroupFamily::so_odd(4),
            GroupFamily::sp(1),
            GroupFamily::sp(3),
        ] {
            let basis = algebra_basis(g);
            assert_eq!(basis.len(), g.algebra_dim(), "{g}");
            for (i, b) in basis.iter().enumerate() {
                assert!(membership_residual(g, b) < 1e-12);
                for (j, other) in basis.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((real_inner(b, other) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let g = GroupFamily::sp(2);
        let m = CMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64, (j as f64) - (i as f64) * 0.5));
        let p = project_to_algebra(g, &m);
        let pp = project_to_algebra(g, &p);
        assert!((p - pp).norm() < 1e-13);
    }
}
