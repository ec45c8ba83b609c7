//! Geodesics in the space of Hermitian norms as symmetric-definite pencils.
//!
//! Two positive norms `G0`, `G1` on the same section space are joined by the
//! geodesic `H^t` whose matrix is `diag(e^{t lambda_j})` in a basis that is
//! `G0`-orthonormal and `G1`-diagonalizing; the `lambda_j` are the
//! log-eigenvalues of the pencil `(G1, G0)`. All matrix work happens in the
//! log-scaled coordinates of [`GramMatrix`] so that `k (max g - min g)` in
//! the exponent never materializes as a raw number.

use crate::error::{Error, Result};
use crate::measures::ProbabilityMeasure;
use crate::sections::{GramMatrix, SectionSpaceSpec};
use crate::toeplitz::ToeplitzOperator;
use nalgebra::DMatrix;

/// Exponent spread beyond which the centered pencil would overflow.
const SPREAD_BUDGET: f64 = 500.0;

/// Spectral data of the finite geodesic: pencil log-eigenvalues and the
/// joint eigenbasis (in the scaled `G0` coordinates).
#[derive(Debug, Clone)]
pub struct GeodesicSpectrum {
    /// Ascending pencil log-eigenvalues, centering shift already added back.
    pub lambdas: Vec<f64>,
    /// Columns are `G0`-orthonormal, `G1`-diagonalizing (scaled coordinates).
    pub basis: DMatrix<f64>,
    /// Mean of the diagonal log-differences, subtracted before the matrix
    /// solve for overflow control.
    pub center_shift: f64,
    pub spec: SectionSpaceSpec,
    pub(crate) basis_inv: DMatrix<f64>,
    pub(crate) convention_tag: String,
}

fn check_compatible(a: &GramMatrix, b: &GramMatrix) -> Result<()> {
    if a.spec != b.spec {
        return Err(Error::Contract(format!(
            "section space specs differ: {:?} vs {:?}",
            a.spec, b.spec
        )));
    }
    if a.convention_tag.split('|').next() != b.convention_tag.split('|').next() {
        return Err(Error::Contract(format!(
            "convention tags differ: {} vs {}",
            a.convention_tag, b.convention_tag
        )));
    }
    Ok(())
}

fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical("scaled Gram factor is not positive definite".into()))
}

/// Ascending eigen-decomposition with a deterministic sign convention
/// (first component of each vector of significant size is positive).
fn ordered_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(d);
    let mut vectors = DMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        values.push(eig.eigenvalues[i]);
        let v = eig.eigenvectors.column(i);
        let lead = v.iter().find(|c| c.abs() > 1e-12).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for r in 0..d {
            vectors[(r, col)] = sign * v[r];
        }
    }
    (values, vectors)
}

/// Solves the pencil `(G1, G0)`: log-eigenvalues and joint basis.
///
/// When both scaled factors are the identity (invariant weights) the
/// eigenvalues are plain log-diagonal differences and no matrix work is
/// done; otherwise the mean log-difference is split off first and the rest
/// goes through Cholesky reduction plus a symmetric eigensolve.
pub fn solve_geodesic(g0: &GramMatrix, g1: &GramMatrix) -> Result<GeodesicSpectrum> {
    check_compatible(g0, g1)?;
    let d = g0.dim();
    let delta: Vec<f64> = g1
        .log_diag
        .iter()
        .zip(&g0.log_diag)
        .map(|(a, b)| a - b)
        .collect();
    let center = delta.iter().sum::<f64>() / d as f64;
    let residual: Vec<f64> = delta.iter().map(|x| x - center).collect();
    let spread = residual.iter().cloned().fold(0.0f64, |m, x| m.max(x.abs()));
    if spread > SPREAD_BUDGET {
        return Err(Error::Overflow(format!(
            "residual exponent spread {spread:.1} exceeds the {SPREAD_BUDGET} budget"
        )));
    }

    if g0.is_diagonal() && g1.is_diagonal() {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| delta[i].partial_cmp(&delta[j]).unwrap());
        let mut basis = DMatrix::zeros(d, d);
        let mut lambdas = Vec::with_capacity(d);
        for (col, &i) in order.iter().enumerate() {
            basis[(i, col)] = 1.0;
            lambdas.push(delta[i]);
        }
        let basis_inv = basis.transpose();
        return Ok(GeodesicSpectrum {
            lambdas,
            basis,
            center_shift: center,
            spec: g0.spec.clone(),
            basis_inv,
            convention_tag: g0.convention_tag.clone(),
        });
    }

    // centered congruence: eig(E S1 E, S0) with E = diag(e^{residual/2})
    let mut m = g1.scaled.clone();
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] *= (0.5 * (residual[i] + residual[j])).exp();
        }
    }
    let l = cholesky_lower(&g0.scaled)?;
    let tmp = l
        .solve_lower_triangular(&m)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let b = l
        .solve_lower_triangular(&tmp.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let b = 0.5 * (&b + &b.transpose());
    let (qvals, qvecs) = ordered_symmetric_eigen(&b);
    let mut lambdas = Vec::with_capacity(d);
    for q in &qvals {
        if *q <= 0.0 {
            return Err(Error::Numerical(format!(
                "pencil eigenvalue {q} is not positive"
            )));
        }
        lambdas.push(q.ln() + center);
    }
    let basis = l
        .transpose()
        .solve_upper_triangular(&qvecs)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let basis_inv = qvecs.transpose() * &l.transpose();
    Ok(GeodesicSpectrum {
        lambdas,
        basis,
        center_shift: center,
        spec: g0.spec.clone(),
        basis_inv,
        convention_tag: g0.convention_tag.clone(),
    })
}

impl GeodesicSpectrum {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Normalized spectral measure of `k^{-1} A_k`: atoms `lambda_j / k`,
    /// weights `1 / d_k`.
    pub fn spectral_measure(&self) -> Result<ProbabilityMeasure> {
        let k = self.spec.k as f64;
        let atoms: Vec<f64> = self.lambdas.iter().map(|l| l / k).collect();
        ProbabilityMeasure::equal_weights(&atoms)
    }

    /// Log-determinant ratio of the endpoint norms: `sum lambda_j`.
    pub fn z_functional(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Normalized geodesic distance `sqrt(sum (lambda_j / k)^2 / d_k)`.
    pub fn geodesic_distance(&self) -> f64 {
        let k = self.spec.k as f64;
        let d = self.dim() as f64;
        (self.lambdas.iter().map(|l| (l / k) * (l / k)).sum::<f64>() / d).sqrt()
    }

    /// The geodesic norm at interior time `t`, back in the original basis.
    pub fn evaluate_ht(&self, g0: &GramMatrix, t: f64) -> Result<GramMatrix> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0,1]")));
        }
        if g0.convention_tag != self.convention_tag {
            return Err(Error::Contract("G0 does not match the solved pencil".into()));
        }
        let d = self.dim();
        // M_t = P^{-T} diag(e^{t (lambda - center)}) P^{-1}
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for r in 0..d {
                    acc += self.basis_inv[(r, i)]
                        * (t * (self.lambdas[r] - self.center_shift)).exp()
                        * self.basis_inv[(r, j)];
                }
                m[(i, j)] = acc;
            }
        }
        let mut log_diag = Vec::with_capacity(d);
        for j in 0..d {
            log_diag.push(g0.log_diag[j] + t * self.center_shift + m[(j, j)].ln());
        }
        let mut scaled = DMatrix::identity(d, d);
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    scaled[(i, j)] = m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt();
                }
            }
        }
        Ok(GramMatrix {
            spec: self.spec.clone(),
            log_diag,
            scaled,
            convention_tag: g0.convention_tag.clone(),
        })
    }
}

/// Signed PSD-order margin: smallest generalized eigenvalue of `(Gb, Ga)`
/// minus one. Nonnegative iff `Ga <= Gb` as quadratic forms.
pub fn psd_margin(ga: &GramMatrix, gb: &GramMatrix) -> Result<f64> {
    check_compatible(ga, gb)?;
    let d = ga.dim();
    let delta: Vec<f64> = gb
        .log_diag
        .iter()
        .zip(&ga.log_diag)
        .map(|(a, b)| a - b)
        .collect();
    let center = delta.iter().sum::<f64>() / d as f64;
    let residual: Vec<f64> = delta.iter().map(|x| x - center).collect();
    let spread = residual.iter().cloned().fold(0.0f64, |m, x| m.max(x.abs()));
    if spread > SPREAD_BUDGET {
        return Err(Error::Overflow(format!(
            "residual exponent spread {spread:.1} exceeds the {SPREAD_BUDGET} budget"
        )));
    }
    let mut m = gb.scaled.clone();
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] *= (0.5 * (residual[i] + residual[j])).exp();
        }
    }
    let l = cholesky_lower(&ga.scaled)?;
    let tmp = l
        .solve_lower_triangular(&m)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let b = l
        .solve_lower_triangular(&tmp.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let b = 0.5 * (&b + &b.transpose());
    let (qvals, _) = ordered_symmetric_eigen(&b);
    let q_min = qvals[0];
    if q_min <= 0.0 {
        return Err(Error::Numerical(format!(
            "generalized eigenvalue {q_min} is not positive"
        )));
    }
    Ok((center + q_min.ln()).exp() - 1.0)
}

/// Endpoint comparison of the geodesic tangent against the two
/// derivative-of-norm Toeplitz operators.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    /// Smallest eigenvalue of `T0 - A` in the `G0`-orthonormal frame: the
    /// derivative of the dominating curve of norms at the departing endpoint
    /// majorizes the constant tangent.
    pub m0: f64,
    /// Smallest eigenvalue of `A - T1` in the `G1`-orthonormal frame.
    pub m1: f64,
    /// Ascending eigenvalues of `T0` (entrywise upper bounds for `lambda`).
    pub tau_upper: Vec<f64>,
    /// Ascending eigenvalues of `T1` (entrywise lower bounds for `lambda`).
    pub tau_lower: Vec<f64>,
    /// Ascending pencil log-eigenvalues.
    pub lambdas: Vec<f64>,
}

/// Compares the tangent endomorphism `A` with the endpoint Toeplitz
/// operators `T0` (assembled in the `G0`-orthonormal frame) and `T1`
/// (in the `G1`-orthonormal frame).
///
/// The curve of Gram norms dominates the finite geodesic with equality at
/// the endpoints, so its endpoint derivatives pinch the constant tangent:
/// `T1 <= A <= T0`, hence ordered eigenvalues satisfy
/// `tau1_j <= lambda_j <= tau0_j`.
pub fn sandwich_check(
    g0: &GramMatrix,
    g1: &GramMatrix,
    gs: &GeodesicSpectrum,
    t0: &ToeplitzOperator,
    t1: &ToeplitzOperator,
) -> Result<SandwichReport> {
    check_compatible(g0, g1)?;
    if t0.frame_tag != g0.convention_tag {
        return Err(Error::Contract(format!(
            "T0 frame '{}' does not match G0 '{}'",
            t0.frame_tag, g0.convention_tag
        )));
    }
    if t1.frame_tag != g1.convention_tag {
        return Err(Error::Contract(format!(
            "T1 frame '{}' does not match G1 '{}'",
            t1.frame_tag, g1.convention_tag
        )));
    }
    let d = gs.dim();
    let lambda_mat = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(gs.lambdas.clone()));

    // A in the G0-orthonormal frame: Q0 diag(lambda) Q0^T with Q0 = L0^T P.
    let l0 = cholesky_lower(&g0.scaled)?;
    let q0 = l0.transpose() * &gs.basis;
    let a0 = &q0 * &lambda_mat * q0.transpose();
    let diff0 = 0.5 * ((&t0.matrix - &a0) + (&t0.matrix - &a0).transpose());
    let (e0, _) = ordered_symmetric_eigen(&diff0);
    let m0 = e0[0];

    // A in the G1-orthonormal frame: conjugate the endomorphism into the
    // scaled-G1 coordinates first (the centering factor cancels).
    let delta_resid: Vec<f64> = g1
        .log_diag
        .iter()
        .zip(&g0.log_diag)
        .map(|(a, b)| (a - b) - gs.center_shift)
        .collect();
    let mut a_endo = &gs.basis * &lambda_mat * &gs.basis_inv;
    for i in 0..d {
        for j in 0..d {
            a_endo[(i, j)] *= (0.5 * (delta_resid[j] - delta_resid[i])).exp();
        }
    }
    let l1 = cholesky_lower(&g1.scaled)?;
    let a1 = l1.transpose()
        * &a_endo
        * l1
            .transpose()
            .solve_upper_triangular(&DMatrix::identity(d, d))
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let a1 = 0.5 * (&a1 + &a1.transpose());
    let diff1 = 0.5 * ((&a1 - &t1.matrix) + (&a1 - &t1.matrix).transpose());
    let (e1, _) = ordered_symmetric_eigen(&diff1);
    let m1 = e1[0];

    let (tau_upper, _) = ordered_symmetric_eigen(&t0.matrix);
    let (tau_lower, _) = ordered_symmetric_eigen(&t1.matrix);

    Ok(SandwichReport {
        m0,
        m1,
        tau_upper,
        tau_lower,
        lambdas: gs.lambdas.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections::{
        gram_matrix, weight_at_t, AngularPerturbation, Flavor, QuadConfig, SectionSpaceSpec,
    };
    use crate::toric::{MAGeodesicToric, SymplecticPotential};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn fs() -> SymplecticPotential {
        SymplecticPotential::guillemin()
    }

    fn family3() -> MAGeodesicToric {
        MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![0.0, 0.0, 0.5]).unwrap())
    }

    fn manual_gram(spec: SectionSpaceSpec, log_diag: Vec<f64>) -> GramMatrix {
        let d = log_diag.len();
        GramMatrix {
            spec,
            log_diag,
            scaled: DMatrix::identity(d, d),
            convention_tag: "hilb-2pi|manual".into(),
        }
    }

    #[test]
    fn identical_norms_give_zero_spectrum() {
        let spec = SectionSpaceSpec::new(3, Flavor::Hilb).unwrap();
        let g = manual_gram(spec, vec![0.3, -0.1, 0.5, 0.2]);
        let gs = solve_geodesic(&g, &g).unwrap();
        for l in &gs.lambdas {
            assert_abs_diff_eq!(*l, 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(gs.geodesic_distance(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn two_by_two_diagonal_pencil() {
        let spec = SectionSpaceSpec::new(1, Flavor::Hilb).unwrap();
        let g0 = manual_gram(spec.clone(), vec![0.0, 0.0]);
        let g1 = manual_gram(spec, vec![2.0, -2.0]);
        let gs = solve_geodesic(&g0, &g1).unwrap();
        assert_abs_diff_eq!(gs.lambdas[0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gs.lambdas[1], 2.0, epsilon = 1e-14);
    }

    fn endpoint_grams(
        geo: &MAGeodesicToric,
        k: u32,
        flavor: Flavor,
    ) -> (GramMatrix, GramMatrix, SectionSpaceSpec) {
        let spec = SectionSpaceSpec::new(k, flavor).unwrap();
        let q = QuadConfig::default_for(k);
        let g0 = gram_matrix(&spec, &weight_at_t(geo, 0.0, &spec).unwrap(), &q).unwrap();
        let g1 = gram_matrix(&spec, &weight_at_t(geo, 1.0, &spec).unwrap(), &q).unwrap();
        (g0, g1, spec)
    }

    #[test]
    fn translation_family_spectrum_is_constant() {
        let beta = 0.7;
        let geo = MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![beta]).unwrap());
        for flavor in [Flavor::Hilb, Flavor::Adjoint] {
            for k in [4u32, 16] {
                let (g0, g1, _) = endpoint_grams(&geo, k, flavor);
                let gs = solve_geodesic(&g0, &g1).unwrap();
                for l in &gs.lambdas {
                    assert_abs_diff_eq!(l / k as f64, beta, epsilon = 1e-10);
                }
                assert_abs_diff_eq!(gs.geodesic_distance(), beta, epsilon = 1e-10);
                assert_abs_diff_eq!(
                    gs.z_functional() / (k as f64 * gs.dim() as f64),
                    beta,
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn linear_family_spectrum_is_arithmetic() {
        let alpha = 1.0;
        let geo = MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![0.0, alpha]).unwrap());
        let k = 12;
        let (g0, g1, _) = endpoint_grams(&geo, k, Flavor::Hilb);
        let gs = solve_geodesic(&g0, &g1).unwrap();
        for (j, l) in gs.lambdas.iter().enumerate() {
            assert_abs_diff_eq!(*l, j as f64 * alpha, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(
            gs.z_functional(),
            alpha * (k * (k + 1)) as f64 / 2.0,
            epsilon = 1e-7
        );
        let nu = gs.spectral_measure().unwrap();
        assert_eq!(nu.atoms().len(), k as usize + 1);
        assert_abs_diff_eq!(nu.atoms()[3].0, 3.0 / k as f64, epsilon = 1e-9);
    }

    #[test]
    fn sum_of_lambdas_matches_log_det_difference() {
        let geo = family3();
        let (g0, g1, _) = endpoint_grams(&geo, 16, Flavor::Hilb);
        let gs = solve_geodesic(&g0, &g1).unwrap();
        let z = gs.z_functional();
        assert_abs_diff_eq!(
            z,
            g1.log_det().unwrap() - g0.log_det().unwrap(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn evaluate_ht_hits_endpoints_and_geometric_mean() {
        let geo = family3();
        let (g0, g1, _) = endpoint_grams(&geo, 8, Flavor::Adjoint);
        let gs = solve_geodesic(&g0, &g1).unwrap();
        let h0 = gs.evaluate_ht(&g0, 0.0).unwrap();
        let h1 = gs.evaluate_ht(&g0, 1.0).unwrap();
        let hm = gs.evaluate_ht(&g0, 0.5).unwrap();
        for j in 0..g0.dim() {
            assert_abs_diff_eq!(h0.log_diag[j], g0.log_diag[j], epsilon = 1e-10);
            assert_abs_diff_eq!(h1.log_diag[j], g1.log_diag[j], epsilon = 1e-10);
            assert_abs_diff_eq!(
                hm.log_diag[j],
                0.5 * (g0.log_diag[j] + g1.log_diag[j]),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn congruence_invariance_of_the_spectrum() {
        let geo = family3();
        let (mut g0, mut g1, _) = endpoint_grams(&geo, 10, Flavor::Hilb);
        let base = solve_geodesic(&g0, &g1).unwrap();
        // congruence by D = diag(e^{c_j / 2}) shifts both log-diagonals
        let shifts: Vec<f64> = (0..g0.dim()).map(|j| 0.31 * j as f64 - 0.7).collect();
        for j in 0..g0.dim() {
            g0.log_diag[j] += shifts[j];
            g1.log_diag[j] += shifts[j];
        }
        let cong = solve_geodesic(&g0, &g1).unwrap();
        for (a, b) in base.lambdas.iter().zip(&cong.lambdas) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn general_pencil_agrees_with_perturbation_theory_sanity() {
        // non-diagonal grams via an angular perturbation; spectrum must be
        // real, finite and reduce to the invariant one as epsilon -> 0
        let geo = family3();
        let spec = SectionSpaceSpec::new(6, Flavor::Hilb).unwrap();
        let q = QuadConfig::default_for(6);
        let pert = AngularPerturbation {
            epsilon: 1e-3,
            mode: 1,
            profile: Arc::new(|x| x * (1.0 - x)),
        };
        let g0 = gram_matrix(
            &spec,
            &weight_at_t(&geo, 0.0, &spec).unwrap().with_angular(pert.clone()),
            &q,
        )
        .unwrap();
        let g1 = gram_matrix(
            &spec,
            &weight_at_t(&geo, 1.0, &spec).unwrap().with_angular(pert),
            &q,
        )
        .unwrap();
        let gs = solve_geodesic(&g0, &g1).unwrap();
        let (g0i, g1i, _) = endpoint_grams(&geo, 6, Flavor::Hilb);
        let inv = solve_geodesic(&g0i, &g1i).unwrap();
        for (a, b) in gs.lambdas.iter().zip(&inv.lambdas) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        // basis invariants: P^T S0 P = I, P^T (E S1 E) P diagonal
        let p = &gs.basis;
        let id = p.transpose() * &g0.scaled * p;
        for i in 0..id.nrows() {
            for j in 0..id.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(id[(i, j)], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tangent_is_constant_along_the_geodesic() {
        // recompute A by finite differences of H_t at interior times
        let geo = family3();
        let (g0, g1, _) = endpoint_grams(&geo, 8, Flavor::Hilb);
        let gs = solve_geodesic(&g0, &g1).unwrap();
        let dt = 1e-5;
        for t in [0.2, 0.8] {
            let hp = gs.evaluate_ht(&g0, t + dt).unwrap();
            let hm = gs.evaluate_ht(&g0, t - dt).unwrap();
            let mut fd: Vec<f64> = hp
                .log_diag
                .iter()
                .zip(&hm.log_diag)
                .map(|(a, b)| (a - b) / (2.0 * dt))
                .collect();
            fd.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in fd.iter().zip(&gs.lambdas) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn psd_margin_scalar_examples() {
        let spec = SectionSpaceSpec::new(2, Flavor::Hilb).unwrap();
        let i3 = manual_gram(spec.clone(), vec![0.0; 3]);
        let two_i3 = manual_gram(spec.clone(), vec![(2.0f64).ln(); 3]);
        assert_abs_diff_eq!(psd_margin(&i3, &two_i3).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psd_margin(&two_i3, &i3).unwrap(), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn geodesic_norm_is_dominated_by_gram_norm_inside() {
        // adjoint flavor, g = x^2/2, k = 16, t = 1/2
        let geo = family3();
        let (g0, g1, spec) = endpoint_grams(&geo, 16, Flavor::Adjoint);
        let gs = solve_geodesic(&g0, &g1).unwrap();
        let t = 0.5;
        let ht = gs.evaluate_ht(&g0, t).unwrap();
        let gram_t = gram_matrix(
            &spec,
            &weight_at_t(&geo, t, &spec).unwrap(),
            &QuadConfig::default_for(16),
        )
        .unwrap();
        let margin = psd_margin(&ht, &gram_t).unwrap();
        assert!(margin >= -1e-8, "margin {margin}");
    }

    #[test]
    fn pinching_by_velocity_range() {
        let geo = family3();
        for k in [8u32, 16, 32] {
            let (g0, g1, _) = endpoint_grams(&geo, k, Flavor::Adjoint);
            let gs = solve_geodesic(&g0, &g1).unwrap();
            for l in &gs.lambdas {
                let v = l / k as f64;
                assert!(v >= geo.g_min() - 1e-8 && v <= geo.g_max() + 1e-8);
            }
        }
    }

    #[test]
    fn convention_mismatch_is_a_contract_error() {
        let spec = SectionSpaceSpec::new(2, Flavor::Hilb).unwrap();
        let a = manual_gram(spec.clone(), vec![0.0; 3]);
        let mut b = manual_gram(spec, vec![0.0; 3]);
        b.convention_tag = "adjoint-pi2|manual".into();
        assert!(matches!(solve_geodesic(&a, &b), Err(Error::Contract(_))));
    }
}
