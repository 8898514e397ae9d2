//! Shared symmetric linear algebra: the discrete `alpha`-Laplacians and
//! their symmetric conjugates, a cyclic Jacobi eigensolver with explicit
//! kernel deflation, the Hessian of the 2D flow potential, and the
//! central-difference Jacobian used as an oracle throughout.

use nalgebra::{DMatrix, DVector};

use crate::complex::WeightedSurface;
use crate::error::{Error, Result};
use crate::packing2d::{self, PackingMetric};
use crate::par;

const SYM_TOL: f64 = 1e-9;
const KERNEL_TOL: f64 = 1e-8;
const PSD_TOL: f64 = -1e-7;

/// A dense symmetric operator, optionally with a declared one-dimensional
/// kernel. Construction verifies symmetry and, when a kernel vector is
/// declared, that the operator annihilates it to within `1e-8 * ||M||`.
#[derive(Debug, Clone)]
pub struct SymOperator {
    matrix: DMatrix<f64>,
    kernel: Option<DVector<f64>>,
}

impl SymOperator {
    pub fn new(matrix: DMatrix<f64>, kernel: Option<DVector<f64>>) -> Result<Self> {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        let mut asym: f64 = 0.0;
        for i in 0..matrix.nrows() {
            for j in (i + 1)..matrix.ncols() {
                asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
            }
        }
        if asym > SYM_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        if let Some(k) = &kernel {
            assert_eq!(k.len(), matrix.nrows(), "kernel dimension mismatch");
            let scale = matrix.abs().max();
            let knorm = k.abs().max();
            if knorm == 0.0 {
                return Err(Error::KernelMismatch("kernel vector is zero".into()));
            }
            let residual = (&matrix * k).abs().max() / knorm;
            if residual > KERNEL_TOL * scale.max(1e-300) {
                return Err(Error::KernelMismatch(format!(
                    "||M k|| = {residual:e} exceeds {:e}",
                    KERNEL_TOL * scale
                )));
            }
        }
        Ok(Self { matrix, kernel })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kernel(&self) -> Option<&DVector<f64>> {
        self.kernel.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(f);
        (&self.matrix * v).iter().copied().collect()
    }
}

/// Eigenvalues (ascending) and eigenvectors (matching columns) of a dense
/// symmetric matrix, by the cyclic Jacobi rotation method.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    if n <= 1 {
        return (a.diagonal().iter().copied().collect(), v);
    }
    let scale = a.abs().max().max(1e-300);
    let stop = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= stop * 1e-2 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    (values, vectors)
}

/// Householder reflection taking `unit` to the first coordinate axis; the
/// remaining columns span the orthogonal complement of `unit`.
fn householder_from_unit(unit: &DVector<f64>) -> DMatrix<f64> {
    let n = unit.len();
    let mut w = unit.clone();
    w[0] -= 1.0;
    let norm2 = w.norm_squared();
    if norm2 < 1e-30 {
        return DMatrix::identity(n, n);
    }
    DMatrix::identity(n, n) - (&w * w.transpose()) * (2.0 / norm2)
}

/// Smallest eigenvalue of the operator restricted to the orthogonal
/// complement of its declared kernel. For a positive semi-definite operator
/// with a one-dimensional kernel this is the first positive eigenvalue.
pub fn first_positive_eigenvalue(op: &SymOperator) -> Result<f64> {
    let kernel = op
        .kernel()
        .ok_or_else(|| Error::KernelMismatch("no kernel vector declared".into()))?;
    let unit = kernel / kernel.norm();
    let h = householder_from_unit(&unit);
    let conjugated = &h * op.matrix() * &h;
    let n = op.dim();
    if n < 2 {
        return Err(Error::KernelMismatch(
            "operator with a kernel needs dimension >= 2".into(),
        ));
    }
    let deflated = conjugated.view((1, 1), (n - 1, n - 1)).into_owned();
    // Kill the rounding asymmetry introduced by the two matrix products.
    let deflated = (&deflated + deflated.transpose()) * 0.5;
    let (values, _) = jacobi_eigen(&deflated);
    let min = values[0];
    let scale = op.matrix().abs().max().max(1.0);
    if min < PSD_TOL * scale {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    Ok(min)
}

/// 2D `alpha`-Laplacian in matrix form, `Delta_alpha = -Sigma^{-alpha} L`
/// (not symmetric for `alpha != 0`; see [`lambda_alpha_2d`] for the
/// symmetric conjugate that carries the spectrum).
pub fn alpha_laplacian_2d(l: &DMatrix<f64>, metric: &PackingMetric, alpha: f64) -> DMatrix<f64> {
    let n = l.nrows();
    let mut out = l.clone();
    for i in 0..n {
        let scale = -metric.radius(i).powf(-alpha);
        for j in 0..n {
            out[(i, j)] *= scale;
        }
    }
    out
}

/// Symmetric conjugate `Lambda_alpha = Sigma^{-alpha/2} L Sigma^{-alpha/2}`
/// of the 2D `alpha`-Laplacian, with its kernel `r^{alpha/2}` declared.
/// `lambda_1(-Delta_alpha) = lambda_1(Lambda_alpha)` by similarity.
pub fn lambda_alpha_2d(
    l: &DMatrix<f64>,
    metric: &PackingMetric,
    alpha: f64,
) -> Result<SymOperator> {
    let n = l.nrows();
    let d: Vec<f64> = metric
        .radii()
        .iter()
        .map(|r| r.powf(-alpha / 2.0))
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = d[i] * l[(i, j)] * d[j];
        }
    }
    let m = (&m + m.transpose()) * 0.5;
    let kernel = DVector::from_iterator(n, metric.radii().iter().map(|r| r.powf(alpha / 2.0)));
    SymOperator::new(m, Some(kernel))
}

/// Symmetric conjugate of the 3D `alpha`-Laplacian:
/// `Sigma^{(1-alpha)/2} Lambda Sigma^{(1-alpha)/2}` with kernel
/// `r^{(alpha+1)/2}`. Its smallest positive eigenvalue equals
/// `lambda_1(-Delta_alpha)`.
pub fn lambda_tilde_3d(lambda: &DMatrix<f64>, r: &[f64], alpha: f64) -> Result<SymOperator> {
    let n = lambda.nrows();
    let d: Vec<f64> = r.iter().map(|ri| ri.powf((1.0 - alpha) / 2.0)).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = d[i] * lambda[(i, j)] * d[j];
        }
    }
    let m = (&m + m.transpose()) * 0.5;
    let kernel = DVector::from_iterator(n, r.iter().map(|ri| ri.powf((alpha + 1.0) / 2.0)));
    SymOperator::new(m, Some(kernel))
}

/// Weighted inner product `<f, h>_alpha = sum_i f_i h_i r_i^alpha`.
pub fn inner_product_alpha(f: &[f64], h: &[f64], metric: &PackingMetric, alpha: f64) -> f64 {
    f.iter()
        .zip(h)
        .zip(metric.radii())
        .map(|((&fi, &hi), &ri)| fi * hi * ri.powf(alpha))
        .sum()
}

/// Hessian of the 2D flow potential in log coordinates:
/// `L - alpha s_alpha (Sigma^alpha - r^alpha (r^alpha)^T / ||r||_alpha^alpha)`.
/// Annihilates the scaling direction `(1, ..., 1)`.
pub fn hessian_potential_2d(
    surface: &WeightedSurface,
    metric: &PackingMetric,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let l = packing2d::curvature_jacobian_u(surface, metric)?;
    let n = metric.len();
    let s = packing2d::s_alpha(surface, metric, alpha);
    let ralpha: Vec<f64> = metric.radii().iter().map(|r| r.powf(alpha)).collect();
    let norm: f64 = ralpha.iter().sum();
    let mut out = l;
    for i in 0..n {
        for j in 0..n {
            let correction = if i == j { ralpha[i] } else { 0.0 } - ralpha[i] * ralpha[j] / norm;
            out[(i, j)] -= alpha * s * correction;
        }
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector field: column `j` is
/// `(f(x + h_j e_j) - f(x - h_j e_j)) / (2 h_j)` with
/// `h_j = step * max(1, |x_j|)`. Evaluation failures propagate.
pub fn fd_jacobian<F>(f: F, x: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let n = x.len();
    let columns = par::try_map_indexed(n, |j| {
        let h = step * x[j].abs().max(1.0);
        let mut plus = x.to_vec();
        plus[j] += h;
        let mut minus = x.to_vec();
        minus[j] -= h;
        let fp = f(&plus)?;
        let fm = f(&minus)?;
        Ok(fp
            .iter()
            .zip(&fm)
            .map(|(&p, &m)| (p - m) / (2.0 * h))
            .collect::<Vec<f64>>())
    })?;
    let m = columns.first().map(|c| c.len()).unwrap_or(0);
    let mut out = DMatrix::zeros(m, n);
    for (j, col) in columns.iter().enumerate() {
        for (i, &value) in col.iter().enumerate() {
            out[(i, j)] = value;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshes;
    use crate::packing2d::random_metric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = rng.random_range(-1.0..1.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    #[test]
    fn jacobi_matches_dense_eigensolver_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [2usize, 3, 5, 8, 13] {
            let m = random_symmetric(n, &mut rng);
            let (mine, vecs) = jacobi_eigen(&m);
            let mut oracle: Vec<f64> = m
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
            oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in mine.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            // Residual check: M v = lambda v.
            for (idx, &lambda) in mine.iter().enumerate() {
                let v = vecs.column(idx).into_owned();
                let res = (&m * &v - &v * lambda).abs().max();
                assert!(res < 1e-9);
            }
        }
    }

    #[test]
    fn first_positive_eigenvalue_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let op = SymOperator::new(m, Some(DVector::from_vec(vec![1.0, 1.0]))).unwrap();
        assert!((first_positive_eigenvalue(&op).unwrap() - 2.0).abs() < 1e-12);

        let path =
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let op = SymOperator::new(path, Some(DVector::from_vec(vec![1.0, 1.0, 1.0]))).unwrap();
        assert!((first_positive_eigenvalue(&op).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_positive_eigenvalue_error_paths() {
        let not_psd = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        // (1, -1) is an honest eigenvector so the kernel check fails first.
        let err = SymOperator::new(not_psd.clone(), Some(DVector::from_vec(vec![1.0, 1.0])));
        assert!(matches!(err, Err(Error::KernelMismatch(_))));
        let op = SymOperator::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]),
            Some(DVector::from_vec(vec![1.0, 1.0])),
        )
        .unwrap();
        assert!(matches!(
            first_positive_eigenvalue(&op),
            Err(Error::NotPsd { .. })
        ));
        let no_kernel = SymOperator::new(DMatrix::identity(2, 2), None).unwrap();
        assert!(matches!(
            first_positive_eigenvalue(&no_kernel),
            Err(Error::KernelMismatch(_))
        ));
    }

    #[test]
    fn alpha_laplacian_special_cases() {
        let s = meshes::tetrahedron_sphere().build_surface().unwrap();
        let m = PackingMetric::uniform(4, 1.0);
        let l = packing2d::curvature_jacobian_u(&s, &m).unwrap();
        for alpha in [0.0, 1.0, -2.0] {
            let lap = alpha_laplacian_2d(&l, &m, alpha);
            assert!(
                (&lap + &l).abs().max() < 1e-14,
                "r = 1 gives -L for any alpha"
            );
            // Constant functions sit in the kernel.
            let ones = DVector::from_element(4, 3.7);
            assert!((&lap * ones).abs().max() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_metric(4, &mut rng, 0.5, 2.0);
        let l = packing2d::curvature_jacobian_u(&s, &m).unwrap();
        let lap0 = alpha_laplacian_2d(&l, &m, 0.0);
        assert!((&lap0 + &l).abs().max() == 0.0);
    }

    #[test]
    fn inner_product_and_self_adjointness() {
        let s = meshes::tetrahedron_sphere().build_surface().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_metric(4, &mut rng, 0.5, 2.0);
        let ones = vec![1.0; 4];
        assert!((inner_product_alpha(&ones, &ones, &m, 0.0) - 4.0).abs() < 1e-14);
        for alpha in [-1.0, 0.7, 2.0] {
            let expected = packing2d::norm_alpha(&m, alpha);
            assert!((inner_product_alpha(&ones, &ones, &m, alpha) - expected).abs() < 1e-12);
        }

        let l = packing2d::curvature_jacobian_u(&s, &m).unwrap();
        for alpha in [-1.0, 0.0, 1.0, 2.0] {
            let lap = alpha_laplacian_2d(&l, &m, alpha);
            let f: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lap_f: Vec<f64> = (&lap * DVector::from_column_slice(&f))
                .iter()
                .copied()
                .collect();
            let lap_h: Vec<f64> = (&lap * DVector::from_column_slice(&h))
                .iter()
                .copied()
                .collect();
            let lhs = inner_product_alpha(&lap_f, &h, &m, alpha);
            let rhs = inner_product_alpha(&f, &lap_h, &m, alpha);
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda1_agrees_between_conjugation_routes() {
        let s = meshes::torus_7().build_surface().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for alpha in [-1.0, 0.0, 1.0, 2.0] {
            let m = random_metric(7, &mut rng, 0.5, 2.0);
            let l = packing2d::curvature_jacobian_u(&s, &m).unwrap();
            let lam = lambda_alpha_2d(&l, &m, alpha).unwrap();
            let via_lambda = first_positive_eigenvalue(&lam).unwrap();

            // Alternate route: conjugate the assembled -Delta_alpha back to
            // symmetric form and deflate the same kernel.
            let neg_delta = -alpha_laplacian_2d(&l, &m, alpha);
            let n = 7;
            let mut sym = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let di = m.radius(i).powf(alpha / 2.0);
                    let dj = m.radius(j).powf(-alpha / 2.0);
                    sym[(i, j)] = di * neg_delta[(i, j)] * dj;
                }
            }
            let sym = (&sym + sym.transpose()) * 0.5;
            let kernel = DVector::from_iterator(n, m.radii().iter().map(|r| r.powf(alpha / 2.0)));
            let op = SymOperator::new(sym, Some(kernel)).unwrap();
            let via_delta = first_positive_eigenvalue(&op).unwrap();
            assert!(
                (via_lambda - via_delta).abs() < 1e-8,
                "{via_lambda} vs {via_delta}"
            );
        }
    }

    #[test]
    fn lambda1_on_tetrahedron_matches_full_eigensolve() {
        let s = meshes::tetrahedron_sphere().build_surface().unwrap();
        let m = PackingMetric::uniform(4, 1.0);
        let l = packing2d::curvature_jacobian_u(&s, &m).unwrap();
        let lam = lambda_alpha_2d(&l, &m, 0.0).unwrap();
        let mine = first_positive_eigenvalue(&lam).unwrap();
        let mut oracle: Vec<f64> = l.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((mine - oracle[1]).abs() < 1e-8);
    }

    #[test]
    fn hessian_potential_special_cases() {
        let tetra = meshes::tetrahedron_sphere().build_surface().unwrap();
        let torus = meshes::torus_7().build_surface().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);

        let m = random_metric(4, &mut rng, 0.5, 2.0);
        let l = packing2d::curvature_jacobian_u(&tetra, &m).unwrap();
        let h0 = hessian_potential_2d(&tetra, &m, 0.0).unwrap();
        assert!((&h0 - &l).abs().max() < 1e-14);

        let mt = random_metric(7, &mut rng, 0.5, 2.0);
        let lt = packing2d::curvature_jacobian_u(&torus, &mt).unwrap();
        for alpha in [-1.0, 1.0, 2.0] {
            let h = hessian_potential_2d(&torus, &mt, alpha).unwrap();
            assert!(
                (&h - &lt).abs().max() < 1e-14,
                "chi = 0 kills the correction"
            );
        }

        // The scaling direction is always annihilated.
        for alpha in [-1.0, 0.5, 2.0] {
            let m = random_metric(4, &mut rng, 0.5, 2.0);
            let h = hessian_potential_2d(&tetra, &m, alpha).unwrap();
            let ones = DVector::from_element(4, 1.0);
            assert!((&h * ones).abs().max() < 1e-9);
        }
    }

    #[test]
    fn fd_jacobian_examples() {
        // At the origin the two probe offsets cancel exactly.
        let id = fd_jacobian(|x| Ok(x.to_vec()), &[0.0, 0.0, 0.0], 1e-6).unwrap();
        assert!((&id - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        // At a generic point the cancellation in (x+h) - (x-h) costs a few
        // digits: ulp(x)/h of relative noise.
        let id = fd_jacobian(|x| Ok(x.to_vec()), &[0.3, -0.7, 2.0], 1e-6).unwrap();
        assert!((&id - DMatrix::identity(3, 3)).abs().max() < 1e-9);

        let squares =
            fd_jacobian(|x| Ok(vec![x[0] * x[0], x[1] * x[1]]), &[1.0, 2.0], 1e-6).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        assert!((&squares - expected).abs().max() < 1e-6);
    }

    #[test]
    fn fd_jacobian_matches_analytic_curvature_jacobian() {
        let s = meshes::tetrahedron_sphere().build_surface().unwrap();
        let m = PackingMetric::uniform(4, 1.0);
        let analytic = packing2d::curvature_jacobian_u(&s, &m).unwrap();
        let u = m.log_radii();
        let fd = fd_jacobian(
            |u| packing2d::gauss_curvature(&s, &PackingMetric::from_log(u)),
            &u,
            1e-6,
        )
        .unwrap();
        let rel = (&analytic - &fd).norm() / analytic.norm();
        assert!(rel < 1e-5, "relative Frobenius error {rel}");
    }
}
