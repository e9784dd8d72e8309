//! Coadjoint orbits: points, stabilizer and orbit dimensions, tangent frames,
//! the Kirillov–Kostant–Souriau form and moment maps of diagonal actions.
//!
//! Dimensions are always real dimensions. The dual of the algebra is identified
//! with the algebra through the trace pairing, so moment maps are returned as
//! algebra elements.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lie_core::{
    adjoint_action, algebra_basis, build_cartan, random_algebra_element, AlgebraElement, CartanSpec,
    GroupFamily,
};
use crate::linalg::{
    c, commutator, complexify, numeric_rank_scaled, realify, singular_values, trace_product, CMatrix,
};
use crate::tolerance::RANK_RELATIVE;

/// A point `Ad_g Λ` of the orbit through the Cartan element of `cartan`.
#[derive(Clone, Debug)]
pub struct OrbitPoint {
    point: AlgebraElement,
    generator: CMatrix,
    cartan: CartanSpec,
}

impl OrbitPoint {
    pub fn new(cartan: &CartanSpec, g: &CMatrix) -> Result<Self> {
        let lambda = build_cartan(cartan)?;
        let point = adjoint_action(g, &lambda)?;
        let spread = spectrum_distance(&point, &lambda);
        if spread > 1e-8 {
            return Err(Error::InvalidSpec(format!(
                "orbit point spectrum deviates from the Cartan element by {spread:.3e}"
            )));
        }
        Ok(Self {
            point,
            generator: g.clone(),
            cartan: cartan.clone(),
        })
    }

    pub fn point(&self) -> &AlgebraElement {
        &self.point
    }

    pub fn matrix(&self) -> &CMatrix {
        self.point.matrix()
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn cartan(&self) -> &CartanSpec {
        &self.cartan
    }

    pub fn group(&self) -> GroupFamily {
        self.cartan.group
    }
}

fn spectrum_distance(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
    a.eigenvalues()
        .iter()
        .zip(b.eigenvalues())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Realified images `[a_k, x]` stacked over all `xs`, one column per basis element.
fn ad_matrix(basis: &[CMatrix], xs: &[&CMatrix]) -> DMatrix<f64> {
    let columns: Vec<Vec<f64>> = basis
        .iter()
        .map(|a| {
            let mut col = Vec::new();
            for x in xs {
                realify(&commutator(a, x), &mut col);
            }
            col
        })
        .collect();
    crate::linalg::real_column_matrix(&columns)
}

/// Upper bound on the size of `[a, x]`, so rounding noise in `ad` is not mistaken for rank.
fn ad_scale(generators: &[CMatrix], xs: &[&CMatrix]) -> f64 {
    let a = generators.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let x = xs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    a * x
}

/// Dimension of `{a : [a, x] = 0 for every x in xs}` inside the algebra of `group`.
pub fn joint_stabilizer_dim(group: GroupFamily, xs: &[&CMatrix]) -> usize {
    let basis = algebra_basis(group);
    if basis.is_empty() {
        return 0;
    }
    let scale = ad_scale(&basis, xs);
    let rank = numeric_rank_scaled(&singular_values(&ad_matrix(&basis, xs)), scale);
    basis.len() - rank
}

/// Stabilizer dimension of an arbitrary algebra element.
pub fn stabilizer_dim_at(x: &AlgebraElement) -> usize {
    joint_stabilizer_dim(x.group(), &[x.matrix()])
}

/// Dimension of the stabilizer of the Cartan element of `spec`.
pub fn stabilizer_dim(spec: &CartanSpec) -> Result<usize> {
    Ok(stabilizer_dim_at(&build_cartan(spec)?))
}

/// Real dimension of the orbit: `dim G − dim Stab`.
pub fn orbit_dim(spec: &CartanSpec) -> Result<usize> {
    Ok(spec.group.algebra_dim() - stabilizer_dim(spec)?)
}

pub fn orbit_dim_at(x: &AlgebraElement) -> usize {
    x.group().algebra_dim() - stabilizer_dim_at(x)
}

/// An orthonormal frame of `T_x O` together with generators: `vectors[k] = [generators[k], x]`.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    pub base: OrbitPoint,
    pub vectors: Vec<CMatrix>,
    pub generators: Vec<CMatrix>,
}

impl TangentFrame {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Smallest singular value of the realified frame.
    pub fn min_singular_value(&self) -> f64 {
        let columns: Vec<Vec<f64>> = self
            .vectors
            .iter()
            .map(|v| {
                let mut col = Vec::new();
                realify(v, &mut col);
                col
            })
            .collect();
        singular_values(&crate::linalg::real_column_matrix(&columns))
            .last()
            .copied()
            .unwrap_or(0.0)
    }

    /// Gram matrix of the KKS form on the frame.
    pub fn kks_gram(&self) -> DMatrix<f64> {
        let x = self.base.matrix();
        let d = self.len();
        DMatrix::from_fn(d, d, |i, j| {
            kks_form_generators(x, &self.generators[i], &self.generators[j])
        })
    }
}

/// Tangent frame at `x` from the images of `dim G` seeded random algebra elements.
///
/// The images are orthonormalized by SVD; the count must equal the orbit dimension.
pub fn tangent_frame(x: &OrbitPoint, seed: u64) -> Result<TangentFrame> {
    let group = x.group();
    let expected = orbit_dim(x.cartan())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let generators: Vec<CMatrix> = (0..group.algebra_dim())
        .map(|_| random_algebra_element(group, &mut rng, 1.0).into_matrix())
        .collect();
    let images = ad_matrix(&generators, &[x.matrix()]);
    if images.ncols() == 0 {
        return if expected == 0 {
            Ok(TangentFrame {
                base: x.clone(),
                vectors: Vec::new(),
                generators: Vec::new(),
            })
        } else {
            Err(Error::RankDeficient { expected, found: 0 })
        };
    }
    let svd = crate::linalg::checked_svd(&images);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let s = &svd.singular_values;
    let max = s
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(ad_scale(&generators, &[x.matrix()]));
    let keep: Vec<usize> = (0..s.len())
        .filter(|&k| max > 0.0 && s[k] > RANK_RELATIVE * max)
        .collect();
    if keep.len() != expected {
        return Err(Error::RankDeficient {
            expected,
            found: keep.len(),
        });
    }
    let m = group.matrix_size();
    let mut vectors = Vec::with_capacity(keep.len());
    let mut gens = Vec::with_capacity(keep.len());
    for &k in &keep {
        let col: Vec<f64> = u.column(k).iter().copied().collect();
        vectors.push(complexify(&col, m, m));
        // U_k = Σ_j A_j V_jk / s_k, so the generator is the same combination of a_j.
        let mut a = CMatrix::zeros(m, m);
        for (j, g) in generators.iter().enumerate() {
            a += g * c(v_t[(k, j)] / s[k], 0.0);
        }
        gens.push(a);
    }
    Ok(TangentFrame {
        base: x.clone(),
        vectors,
        generators: gens,
    })
}

/// `ω_x([a,x], [b,x]) = ⟨x, [a, b]⟩` evaluated from generators.
pub fn kks_form_generators(x: &CMatrix, a: &CMatrix, b: &CMatrix) -> f64 {
    trace_product(x, &commutator(a, b)).re
}

/// Least-squares solver for `[a, x] = ξ` over the algebra, factored once per point.
pub struct TangentSolver {
    basis: Vec<CMatrix>,
    ad: DMatrix<f64>,
    svd: Option<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    size: usize,
}

impl TangentSolver {
    pub fn new(group: GroupFamily, x: &CMatrix) -> Self {
        let basis = algebra_basis(group);
        let ad = ad_matrix(&basis, &[x]);
        let svd = (!basis.is_empty()).then(|| crate::linalg::checked_svd(&ad));
        Self {
            basis,
            ad,
            svd,
            size: group.matrix_size(),
        }
    }

    /// A generator `a` with `[a, x] = ξ`, or `NotTangent` if the residual exceeds `1e-8·max(‖ξ‖, 1)`.
    pub fn generator(&self, xi: &CMatrix) -> Result<CMatrix> {
        let m = self.size;
        if xi.shape() != (m, m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: xi.nrows(),
            });
        }
        let Some(svd) = &self.svd else {
            let residual = xi.norm();
            return if residual < 1e-8 {
                Ok(CMatrix::zeros(m, m))
            } else {
                Err(Error::NotTangent { residual })
            };
        };
        let mut rhs = Vec::new();
        realify(xi, &mut rhs);
        let rhs = nalgebra::DVector::from_vec(rhs);
        let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let coeffs = svd
            .solve(&rhs, RANK_RELATIVE * max.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::InvalidSpec(e.to_string()))?;
        let residual = (&self.ad * &coeffs - &rhs).norm();
        if residual > 1e-8 * xi.norm().max(1.0) {
            return Err(Error::NotTangent { residual });
        }
        let mut a = CMatrix::zeros(m, m);
        for (k, b) in self.basis.iter().enumerate() {
            a += b * c(coeffs[k], 0.0);
        }
        Ok(a)
    }

    /// `ω_x(ξ, ζ)` for tangent vectors at the point the solver was built for.
    pub fn kks(&self, x: &CMatrix, xi: &CMatrix, zeta: &CMatrix) -> Result<f64> {
        let a = self.generator(xi)?;
        let b = self.generator(zeta)?;
        Ok(kks_form_generators(x, &a, &b))
    }
}

/// Solves `[a, x] = ξ` for `a` in the algebra by least squares.
pub fn tangent_generator(x: &OrbitPoint, xi: &CMatrix) -> Result<CMatrix> {
    TangentSolver::new(x.group(), x.matrix()).generator(xi)
}

/// The Kirillov–Kostant–Souriau form at `x` on tangent vectors `ξ`, `ζ`.
///
/// Tangent vectors are identified with algebra elements through `ξ = [a, x]`;
/// the result is `⟨x, [a, b]⟩`, independent of the stabilizer ambiguity in `a`.
pub fn kks_form(x: &OrbitPoint, xi: &CMatrix, zeta: &CMatrix) -> Result<f64> {
    TangentSolver::new(x.group(), x.matrix()).kks(x.matrix(), xi, zeta)
}

/// Moment map of the diagonal action on a product of orbits: `Σ xᵢ`.
pub fn moment_sum(points: &[OrbitPoint]) -> Result<AlgebraElement> {
    let elements: Vec<&AlgebraElement> = points.iter().map(|p| p.point()).collect();
    moment_sum_elements(&elements)
}

pub fn moment_sum_elements(points: &[&AlgebraElement]) -> Result<AlgebraElement> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidSpec("moment map of an empty product".into()))?;
    let shape = first.matrix().shape();
    let mut acc = CMatrix::zeros(shape.0, shape.1);
    for p in points {
        if p.matrix().shape() != shape {
            return Err(Error::DimensionMismatch {
                expected: shape.0,
                got: p.matrix().nrows(),
            });
        }
        acc += p.matrix();
    }
    Ok(AlgebraElement::new_unchecked(first.group(), acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{sample_group_element, Family};

    fn so6(mults: Vec<usize>, eig: Vec<f64>) -> CartanSpec {
        CartanSpec::new(GroupFamily::so_even(3), mults, eig).unwrap()
    }

    /// Counts basis elements of su(m) commuting with a diagonal Λ.
    fn brute_force_stabilizer(spec: &CartanSpec) -> usize {
        let lambda = build_cartan(spec).unwrap();
        let group = spec.group;
        let m = group.matrix_size();
        assert_eq!(group.family, Family::SU);
        let mut basis = Vec::new();
        for j in 0..m {
            for k in (j + 1)..m {
                let mut a = CMatrix::zeros(m, m);
                a[(j, k)] = c(1.0, 0.0);
                a[(k, j)] = c(-1.0, 0.0);
                basis.push(a);
                let mut s = CMatrix::zeros(m, m);
                s[(j, k)] = c(0.0, 1.0);
                s[(k, j)] = c(0.0, 1.0);
                basis.push(s);
            }
        }
        for j in 0..m - 1 {
            let mut h = CMatrix::zeros(m, m);
            h[(j, j)] = c(0.0, 1.0);
            h[(j + 1, j + 1)] = c(0.0, -1.0);
            basis.push(h);
        }
        assert_eq!(basis.len(), 8);
        // Off-diagonal generators commute with Λ iff the two eigenvalues coincide;
        // diagonal generators always commute.
        basis
            .iter()
            .filter(|a| commutator(a, lambda.matrix()).norm() == 0.0)
            .count()
    }

    #[test]
    fn su3_stabilizer_matches_brute_force() {
        let spec = CartanSpec::new(GroupFamily::su(3), vec![1, 2], vec![2.0, -1.0]).unwrap();
        assert_eq!(brute_force_stabilizer(&spec), 4);
        assert_eq!(stabilizer_dim(&spec).unwrap(), 4);
        assert_eq!(orbit_dim(&spec).unwrap(), 4);
    }

    #[test]
    fn so6_stabilizers() {
        assert_eq!(stabilizer_dim(&so6(vec![3], vec![1.0])).unwrap(), 9);
        assert_eq!(
            stabilizer_dim(&so6(vec![1, 1, 1], vec![1.0, 2.0, 3.0])).unwrap(),
            3
        );
        assert_eq!(orbit_dim(&so6(vec![1, 1, 1], vec![1.0, 2.0, 3.0])).unwrap(), 12);
        assert_eq!(orbit_dim(&so6(vec![3], vec![1.0])).unwrap(), 6);
    }

    #[test]
    fn su_flag_dimension_formula() {
        let cases: &[&[usize]] = &[&[1, 1], &[1, 2], &[1, 1, 1], &[2, 2], &[1, 3, 1], &[2, 1, 1, 1]];
        for mults in cases {
            let n: usize = mults.iter().sum();
            let weights: Vec<f64> = (0..mults.len()).map(|k| k as f64).collect();
            let mean = mults
                .iter()
                .zip(&weights)
                .map(|(m, w)| *m as f64 * w)
                .sum::<f64>()
                / n as f64;
            let eig = weights.iter().map(|w| w - mean).collect();
            let spec = CartanSpec::new(GroupFamily::su(n), mults.to_vec(), eig).unwrap();
            let formula = n * n - mults.iter().map(|m| m * m).sum::<usize>();
            assert_eq!(orbit_dim(&spec).unwrap(), formula, "{mults:?}");
        }
    }

    #[test]
    fn so2n_two_step_flag_dimension() {
        for n in 2..=5 {
            let spec = CartanSpec::new(GroupFamily::so_even(n), vec![1, n - 1], vec![2.0, 1.0]).unwrap();
            assert_eq!(orbit_dim(&spec).unwrap(), n * n + n - 2);
        }
    }

    #[test]
    fn stabilizer_is_scale_and_conjugation_invariant() {
        let spec = CartanSpec::new(GroupFamily::sp(3), vec![1, 2], vec![0.0, 1.5]).unwrap();
        let base = stabilizer_dim(&spec).unwrap();
        assert_eq!(stabilizer_dim(&spec.scaled(-3.7)).unwrap(), base);
        let g = sample_group_element(spec.group, 9);
        let x = OrbitPoint::new(&spec, &g).unwrap();
        assert_eq!(stabilizer_dim_at(x.point()), base);
    }

    #[test]
    fn frames_have_orbit_dimension() {
        let su2 = CartanSpec::new(GroupFamily::su(2), vec![1, 1], vec![1.0, -1.0]).unwrap();
        let x = OrbitPoint::new(&su2, &sample_group_element(su2.group, 1)).unwrap();
        let frame = tangent_frame(&x, 7).unwrap();
        assert_eq!(frame.len(), 2);

        let spec = so6(vec![3], vec![1.0]);
        let x = OrbitPoint::new(&spec, &sample_group_element(spec.group, 2)).unwrap();
        let frame = tangent_frame(&x, 3).unwrap();
        assert_eq!(frame.len(), 6);
        assert!(frame.min_singular_value() > 1e-8);
        for (v, a) in frame.vectors.iter().zip(&frame.generators) {
            assert!(crate::lie_core::membership_residual(spec.group, v) < 1e-10);
            assert!((commutator(a, x.matrix()) - v).norm() < 1e-9);
        }
    }

    #[test]
    fn kks_gram_is_nondegenerate_and_antisymmetric() {
        let spec = so6(vec![1, 1, 1], vec![1.0, 2.0, 3.0]);
        let x = OrbitPoint::new(&spec, &sample_group_element(spec.group, 4)).unwrap();
        let frame = tangent_frame(&x, 5).unwrap();
        let gram = frame.kks_gram();
        assert!((&gram + gram.transpose()).norm() < 1e-10);
        let scale = gram.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let det = (&gram / scale).determinant();
        assert!(det.abs() > 1e-8, "{det}");
    }

    #[test]
    fn kks_form_on_tangent_vectors() {
        let spec = CartanSpec::new(GroupFamily::su(3), vec![1, 1, 1], vec![-1.0, 0.0, 1.0]).unwrap();
        let g = sample_group_element(spec.group, 8);
        let x = OrbitPoint::new(&spec, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_algebra_element(spec.group, &mut rng, 1.0).into_matrix();
        let b = random_algebra_element(spec.group, &mut rng, 1.0).into_matrix();
        let xi = commutator(&a, x.matrix());
        let zeta = commutator(&b, x.matrix());
        assert!(kks_form(&x, &xi, &xi).unwrap().abs() < 1e-10);
        let w = kks_form(&x, &xi, &zeta).unwrap();
        assert!((w - kks_form_generators(x.matrix(), &a, &b)).abs() < 1e-9);
        assert!((w + kks_form(&x, &zeta, &xi).unwrap()).abs() < 1e-9);

        // Ad-invariance.
        let h = sample_group_element(spec.group, 77);
        let hx = OrbitPoint::new(&spec, &(&h * &g)).unwrap();
        let conj = |m: &CMatrix| &h * m * h.adjoint();
        let w2 = kks_form(&hx, &conj(&xi), &conj(&zeta)).unwrap();
        assert!((w - w2).abs() < 1e-9);

        // A matrix that is not tangent is rejected.
        let normal = x.matrix().clone();
        assert!(matches!(
            kks_form(&x, &normal, &zeta),
            Err(Error::NotTangent { .. })
        ));
    }

    #[test]
    fn moment_sums() {
        let spec = CartanSpec::new(GroupFamily::su(2), vec![1, 1], vec![1.0, -1.0]).unwrap();
        let g = sample_group_element(spec.group, 0);
        let x = OrbitPoint::new(&spec, &g).unwrap();
        assert_eq!(moment_sum(std::slice::from_ref(&x)).unwrap().matrix(), x.matrix());

        let neg = spec.scaled(-1.0);
        let y = OrbitPoint::new(&neg, &g).unwrap();
        assert!(moment_sum(&[x.clone(), y]).unwrap().matrix().norm() < 1e-12);
    }

    #[test]
    fn two_cp1_points_sum_like_bloch_vectors() {
        // x = i λ (n·σ) on CP¹; the sum has eigenvalues ±|λ₁n₁ + λ₂n₂| (2×2 oracle).
        let (l1, l2) = (1.0, 0.6);
        let spec1 = CartanSpec::new(GroupFamily::su(2), vec![1, 1], vec![l1, -l1]).unwrap();
        let spec2 = CartanSpec::new(GroupFamily::su(2), vec![1, 1], vec![l2, -l2]).unwrap();
        let g1 = sample_group_element(spec1.group, 21);
        let g2 = sample_group_element(spec1.group, 22);
        let x1 = OrbitPoint::new(&spec1, &g1).unwrap();
        let x2 = OrbitPoint::new(&spec2, &g2).unwrap();
        let sum = moment_sum(&[x1.clone(), x2.clone()]).unwrap();

        let bloch = |x: &OrbitPoint, l: f64| {
            let h = x.point().spectral_part();
            // h = l (n·σ): n1 = Re h01, n2 = -Im h01, n3 = h00.
            [h[(0, 1)].re / l, -h[(0, 1)].im / l, h[(0, 0)].re / l]
        };
        let n1 = bloch(&x1, l1);
        let n2 = bloch(&x2, l2);
        let v: Vec<f64> = (0..3).map(|k| l1 * n1[k] + l2 * n2[k]).collect();
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let ev = sum.eigenvalues();
        assert!((ev[0] + norm).abs() < 1e-12);
        assert!((ev[1] - norm).abs() < 1e-12);
    }
}
