use crate::error::{Error, Result};
use crate::lie_core::{sample_group_element, AlgebraElement, GroupFamily};
use crate::linalg::{c, CMatrix, I};

/// Moment matrices of `(x⊕y, x⊕ȳ, x)` for an isotropic line `x` and `(n−1)`-plane `y` in `ℂ^{2n}`.
///
/// Each `μ` is Hermitian; the corresponding algebra element of so(2n) is `iμ`.
#[derive(Clone, Debug)]
pub struct TwoStepImage {
    pub mu_u: CMatrix,
    pub mu_v: CMatrix,
    pub mu_w: CMatrix,
}

impl TwoStepImage {
    /// `‖μ_u + μ_v − 2μ_w‖`.
    pub fn residual(&self) -> f64 {
        (&self.mu_u + &self.mu_v - &self.mu_w * c(2.0, 0.0)).norm()
    }

    pub fn algebra_points(&self, n: usize) -> [AlgebraElement; 3] {
        let group = GroupFamily::so_even(n);
        [&self.mu_u, &self.mu_v, &self.mu_w].map(|m| AlgebraElement::new_unchecked(group, m * I))
    }
}

/// `Σ (uᵢ uᵢ† − ūᵢ uᵢᵗ)` over the columns of `u`.
fn isotropic_moment(u: &CMatrix) -> CMatrix {
    let ubar = u.map(|z| z.conj());
    u * u.adjoint() - &ubar * ubar.adjoint()
}

pub fn two_step_so_embed(n: usize, x: &CMatrix, y: &CMatrix) -> Result<TwoStepImage> {
    let m = 2 * n;
    if x.shape() != (m, 1) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x.nrows(),
        });
    }
    if y.shape() != (m, n - 1) {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: y.ncols(),
        });
    }
    let u = CMatrix::from_fn(m, n, |i, j| if j == 0 { x[(i, 0)] } else { y[(i, j - 1)] });
    // u is orthonormal (u†u = 1) and isotropic (uᵗu = 0); this covers x, y and their mutual conditions.
    let ortho = (u.adjoint() * &u - CMatrix::identity(n, n)).norm();
    let iso = (u.transpose() * &u).norm();
    if ortho > 1e-10 || iso > 1e-10 {
        return Err(Error::FlagInconsistent(format!(
            "x ⊕ y must be an orthonormal isotropic plane (orthonormality {ortho:.3e}, isotropy {iso:.3e})"
        )));
    }
    let ybar = y.map(|z| z.conj());
    let v = CMatrix::from_fn(m, n, |i, j| if j == 0 { x[(i, 0)] } else { ybar[(i, j - 1)] });
    Ok(TwoStepImage {
        mu_u: isotropic_moment(&u),
        mu_v: isotropic_moment(&v),
        mu_w: isotropic_moment(x),
    })
}

/// A random point `(x, y)` of the two-step flag: `x = g f₁`, `y = g [f₂ … f_n]`,
/// with `f_k = (e_{2k} + i e_{2k+1})/√2` and `g` a seeded SO(2n) sample.
pub fn random_two_step_flag(n: usize, seed: u64) -> (CMatrix, CMatrix) {
    let g = sample_group_element(GroupFamily::so_even(n), seed);
    let f = isotropic_frame(n);
    let u = g * f;
    let x = u.columns(0, 1).into_owned();
    let y = u.columns(1, n - 1).into_owned();
    (x, y)
}

/// The standard isotropic `n`-frame `f_k = (e_{2k} + i e_{2k+1})/√2` of `ℂ^{2n}`.
pub(crate) fn isotropic_frame(n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut f = CMatrix::zeros(2 * n, n);
    for k in 0..n {
        f[(2 * k, k)] = c(s, 0.0);
        f[(2 * k + 1, k)] = c(0.0, s);
    }
    f
}
