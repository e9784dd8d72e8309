use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{project_to_algebra, AlgebraElement, Family, GroupFamily};
use crate::linalg::{c, exp_i_hermitian, CMatrix, C64, I};

/// Scale and count of the random algebra elements exponentiated for Sp(n) samples.
const SP_SCALE: f64 = 3.0;
const SP_FACTORS: usize = 4;

/// Seeded random element of the compact group.
///
/// SU/SO: QR of a Gaussian matrix with the phase (sign) fix, then a determinant
/// correction. Sp: product of exponentials of random algebra elements (a single
/// exponential does not spread far enough over the group).
pub fn sample_group_element(group: GroupFamily, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_group_element_with(group, &mut rng)
}

pub fn sample_group_element_with<R: Rng + ?Sized>(group: GroupFamily, rng: &mut R) -> CMatrix {
    let m = group.matrix_size();
    match group.family {
        Family::SU => {
            let z = CMatrix::from_fn(m, m, |_, _| gaussian_complex(rng));
            let mut q = phase_fixed_q(z);
            let det = q.determinant();
            let correction = C64::from_polar(1.0, -det.arg() / m as f64);
            q *= correction;
            q
        }
        Family::SoEven | Family::SoOdd => {
            let z = CMatrix::from_fn(m, m, |_, _| c(rng.sample(StandardNormal), 0.0));
            let mut q = phase_fixed_q(z);
            q.iter_mut().for_each(|x| x.im = 0.0);
            if q.determinant().re < 0.0 {
                let mut col = q.column_mut(0);
                col.neg_mut();
            }
            q
        }
        Family::Sp => {
            let mut g = CMatrix::identity(m, m);
            for _ in 0..SP_FACTORS {
                let x = random_algebra_element(group, rng, SP_SCALE);
                // exp(X) = exp(-i H) with H = iX Hermitian.
                let h = x.matrix() * I;
                g = exp_i_hermitian(&h, -1.0) * g;
            }
            g
        }
    }
}

/// Random algebra element: a Gaussian anti-Hermitian matrix projected onto the algebra.
pub fn random_algebra_element<R: Rng + ?Sized>(
    group: GroupFamily,
    rng: &mut R,
    scale: f64,
) -> AlgebraElement {
    let m = group.matrix_size();
    let z = CMatrix::from_fn(m, m, |_, _| gaussian_complex(rng) * scale);
    AlgebraElement::new_unchecked(group, project_to_algebra(group, &z))
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn phase_fixed_q(z: CMatrix) -> CMatrix {
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        col *= phase;
    }
    q
}
