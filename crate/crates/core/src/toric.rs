//! Exact Kähler geometry on the toric testbed `O(1) -> CP1`.
//!
//! An `S^1`-invariant positively curved metric on `O(1)` is a convex function
//! `f(s)` of `s = log|z|^2` with `f(s) - max(0, s)` bounded. Its Legendre
//! dual is the symplectic potential `u(x)` on the moment interval `[0, 1]`,
//! written here as the Guillemin singular part `x log x + (1-x) log(1-x)`
//! plus a smooth polynomial correction. In this dual picture the
//! Monge-Ampère geodesic between two metrics is simply the linear
//! interpolation `u_t = (1-t) u_0 + t u_1`, which makes every quantity of
//! interest (potential, velocity, pushforward measure) exactly computable.

use crate::error::{Error, Result};
use crate::measures::ProbabilityMeasure;
use crate::quad::{adaptive_simpson, GaussLegendre};
use serde::{Deserialize, Serialize};

/// Moment-coordinate cutoff used when truncating the `s`-line: the working
/// interval is chosen so that `f'(s)` spans `[EDGE_X, 1 - EDGE_X]`.
pub const EDGE_X: f64 = 1e-8;

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;

/// Polynomial in the moment coordinate, dense coefficients from degree 0 up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn deriv(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|i| {
                    self.0.get(i).copied().unwrap_or(0.0) - other.0.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }

    pub fn scale_add(&self, a: f64, other: &Poly, b: f64) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|i| {
                    a * self.0.get(i).copied().unwrap_or(0.0)
                        + b * other.0.get(i).copied().unwrap_or(0.0)
                })
                .collect(),
        )
    }
}

/// Symplectic potential `u(x) = x log x + (1-x) log(1-x) + v(x)` with
/// polynomial correction `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticPotential {
    #[serde(rename = "poly")]
    pub poly_coeffs: Vec<f64>,
    #[serde(skip)]
    dv: Poly,
    #[serde(skip)]
    ddv: Poly,
}

fn guillemin(x: f64) -> f64 {
    let a = if x > 0.0 { x * x.ln() } else { 0.0 };
    let y = 1.0 - x;
    let b = if y > 0.0 { y * y.ln() } else { 0.0 };
    a + b
}

impl SymplecticPotential {
    /// Builds the potential, checking strict convexity of `u` on a dense
    /// interior grid.
    pub fn new(poly_coeffs: Vec<f64>) -> Result<Self> {
        let v = Poly(poly_coeffs.clone());
        let dv = v.deriv();
        let ddv = dv.deriv();
        for i in 1..2000 {
            let x = i as f64 / 2000.0;
            let upp = 1.0 / (x * (1.0 - x)) + ddv.eval(x);
            if !(upp > 0.0) {
                return Err(Error::Precondition(format!(
                    "u''({x}) = {upp} is not positive; correction breaks convexity"
                )));
            }
        }
        Ok(SymplecticPotential {
            poly_coeffs,
            dv,
            ddv,
        })
    }

    /// Fubini-Study potential: pure Guillemin part, `v = 0`.
    pub fn guillemin() -> Self {
        SymplecticPotential::new(vec![]).expect("u_G is convex")
    }

    fn rebuild(&mut self) {
        let v = Poly(self.poly_coeffs.clone());
        self.dv = v.deriv();
        self.ddv = self.dv.deriv();
    }

    /// Deserializes from the `{"poly": [...]}` JSON form, re-validating.
    pub fn from_json(s: &str) -> Result<Self> {
        let mut p: SymplecticPotential =
            serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        p.rebuild();
        SymplecticPotential::new(p.poly_coeffs)
    }

    pub fn value(&self, x: f64) -> f64 {
        guillemin(x) + Poly(self.poly_coeffs.clone()).eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (x / (1.0 - x)).ln() + self.dv.eval(x)
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        1.0 / (x * (1.0 - x)) + self.ddv.eval(x)
    }

    /// Convex combination `(1-t) self + t other`.
    pub fn interpolate(&self, other: &SymplecticPotential, t: f64) -> SymplecticPotential {
        let v = Poly(self.poly_coeffs.clone()).scale_add(1.0 - t, &Poly(other.poly_coeffs.clone()), t);
        let dv = v.deriv();
        let ddv = dv.deriv();
        SymplecticPotential {
            poly_coeffs: v.0,
            dv,
            ddv,
        }
    }

    /// `s`-interval on which the moment coordinate spans `[edge, 1-edge]`.
    pub fn s_range(&self, edge: f64) -> (f64, f64) {
        (self.deriv(edge), self.deriv(1.0 - edge))
    }
}

/// Result of one Legendre-transform evaluation: the conjugate value and the
/// maximizing moment coordinate.
#[derive(Debug, Clone, Copy)]
pub struct LegendrePoint {
    pub f: f64,
    pub x_star: f64,
}

/// Convex conjugate `f(s) = sup_x (x s - u(x))` with the maximizer.
///
/// `u'` is strictly increasing with logarithmic blow-up at the interval ends,
/// so a bracket always exists; a bisection-safeguarded Newton iteration then
/// converges quadratically.
pub fn legendre_transform(u: &SymplecticPotential, s: f64) -> Result<LegendrePoint> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("s = {s} is not finite")));
    }
    // Work in the logit coordinate y = log(x / (1 - x)): the Guillemin part
    // of u' is exactly y there, so the stationarity condition becomes
    // h(y) = y + v'(sigma(y)) - s = 0, strictly increasing and uniformly
    // well conditioned even when the maximizer is exponentially close to an
    // end of the moment interval.
    let sigma = |y: f64| 1.0 / (1.0 + (-y).exp());
    let h = |y: f64| y + u.dv.eval(sigma(y)) - s;
    // v' is bounded on [0,1], so the root lies within a bounded band of y = s
    let mut band = 1.0;
    let (mut lo, mut hi);
    loop {
        lo = s - band;
        hi = s + band;
        if h(lo) < 0.0 && h(hi) > 0.0 {
            break;
        }
        band *= 2.0;
        if band > 1e9 {
            return Err(Error::Numerical(format!(
                "no stationarity bracket at s = {s}"
            )));
        }
    }
    let mut y = s;
    if !(y > lo && y < hi) {
        y = 0.5 * (lo + hi);
    }
    for _ in 0..ROOT_MAX_ITER {
        let r = h(y);
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let x = sigma(y);
        // h'(y) = u''(x) x (1 - x) > 0 by convexity
        let hp = 1.0 + u.ddv.eval(x) * x * (1.0 - x);
        let mut next = if hp > 0.0 { y - r / hp } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - y).abs();
        y = next;
        if step <= ROOT_TOL * (1.0 + y.abs()) {
            // softplus(t) = log(1 + e^t), stable across all magnitudes
            let softplus = |t: f64| {
                if t > 30.0 {
                    t + (-t).exp()
                } else if t < -30.0 {
                    t.exp()
                } else {
                    t.exp().ln_1p()
                }
            };
            let x = sigma(y);
            let one_minus_x = 1.0 / (1.0 + y.exp());
            // u_G(x) = x log x + (1-x) log(1-x) through the logit coordinate
            let ug = -x * softplus(-y) - one_minus_x * softplus(y);
            let v = u
                .poly_coeffs
                .iter()
                .rev()
                .fold(0.0, |acc, c| acc * x + c);
            return Ok(LegendrePoint {
                f: x * s - (ug + v),
                x_star: x,
            });
        }
    }
    Err(Error::Numerical(format!(
        "Legendre root-find did not converge at s = {s}"
    )))
}

/// Kähler potential in log coordinates: the Legendre conjugate of a
/// symplectic potential, with derivative evaluators.
#[derive(Debug, Clone)]
pub struct KaehlerPotentialLog {
    u: SymplecticPotential,
}

impl KaehlerPotentialLog {
    pub fn from_symplectic(u: SymplecticPotential) -> Self {
        KaehlerPotentialLog { u }
    }

    pub fn symplectic(&self) -> &SymplecticPotential {
        &self.u
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        Ok(legendre_transform(&self.u, s)?.f)
    }

    /// `f'(s)`, the moment coordinate `x in (0,1)`.
    pub fn deriv(&self, s: f64) -> Result<f64> {
        Ok(legendre_transform(&self.u, s)?.x_star)
    }

    /// `f''(s) = 1 / u''(x*)`, always positive.
    pub fn second_deriv(&self, s: f64) -> Result<f64> {
        let x = legendre_transform(&self.u, s)?.x_star;
        Ok(1.0 / self.u.second_deriv(x))
    }

    pub fn s_range(&self, edge: f64) -> (f64, f64) {
        self.u.s_range(edge)
    }
}

/// The exact Monge-Ampère geodesic between two toric metrics: linear
/// interpolation of symplectic potentials. `g = u_1 - u_0` is the polynomial
/// whose pushforward is the limit spectral measure.
#[derive(Debug, Clone)]
pub struct MAGeodesicToric {
    pub u0: SymplecticPotential,
    pub u1: SymplecticPotential,
    g: Poly,
    g_min: f64,
    g_max: f64,
}

impl MAGeodesicToric {
    pub fn new(u0: SymplecticPotential, u1: SymplecticPotential) -> Self {
        let g = Poly(u1.poly_coeffs.clone()).sub(&Poly(u0.poly_coeffs.clone()));
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let v = g.eval(i as f64 / 4000.0);
            g_min = g_min.min(v);
            g_max = g_max.max(v);
        }
        MAGeodesicToric {
            u0,
            u1,
            g,
            g_min,
            g_max,
        }
    }

    pub fn g(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    pub fn g_min(&self) -> f64 {
        self.g_min
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    /// `u_t = (1-t) u_0 + t u_1`.
    pub fn symplectic_at(&self, t: f64) -> Result<SymplecticPotential> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0,1]")));
        }
        Ok(self.u0.interpolate(&self.u1, t))
    }

    /// The geodesic potential `f_t`, i.e. the conjugate of `u_t`.
    pub fn potential_at(&self, t: f64) -> Result<KaehlerPotentialLog> {
        Ok(KaehlerPotentialLog::from_symplectic(self.symplectic_at(t)?))
    }

    /// Moment coordinate `x = f_t'(s)`, strictly increasing in `s`.
    pub fn moment_map(&self, t: f64, s: f64) -> Result<f64> {
        Ok(legendre_transform(&self.symplectic_at(t)?, s)?.x_star)
    }

    /// Geodesic velocity, by the envelope identity
    /// `d/dt f_t(s) = -g(x*(t, s))`.
    pub fn velocity(&self, t: f64, s: f64) -> Result<f64> {
        Ok(-self.g.eval(self.moment_map(t, s)?))
    }

    /// Residual of the `S^1`-invariant geodesic equation
    /// `d^2f/dt^2 - (d^2f/dtds)^2 / f''`, evaluated by central differences in
    /// `t` with step `1e-3`. Vanishes to stencil accuracy on the exact
    /// geodesic.
    pub fn geodesic_residual(&self, t: f64, s: f64) -> Result<f64> {
        let dt = 1e-3;
        if t < 2.0 * dt || t > 1.0 - 2.0 * dt {
            return Err(Error::Domain(format!(
                "t = {t} too close to an endpoint for the dt = {dt} stencil"
            )));
        }
        // five-point stencils: O(dt^4) truncation keeps the residual of the
        // exact solution at the rounding floor
        let mut p = Vec::with_capacity(5);
        for i in -2i32..=2 {
            let u_i = self.symplectic_at(t + i as f64 * dt)?;
            p.push(legendre_transform(&u_i, s)?);
        }
        let f_tt = (-p[4].f + 16.0 * p[3].f - 30.0 * p[2].f + 16.0 * p[1].f - p[0].f)
            / (12.0 * dt * dt);
        let fp_t =
            (-p[4].x_star + 8.0 * p[3].x_star - 8.0 * p[1].x_star + p[0].x_star) / (12.0 * dt);
        let uc = self.symplectic_at(t)?;
        let f_ss = 1.0 / uc.second_deriv(p[2].x_star);
        Ok(f_tt - fp_t * fp_t / f_ss)
    }

    /// The limit measure `mu = g_* (Lebesgue on [0,1])`, sampled at midpoint
    /// nodes of a uniform partition.
    pub fn limit_measure(&self, grid_size: usize) -> Result<ProbabilityMeasure> {
        if grid_size < 2 {
            return Err(Error::Precondition("grid_size must be >= 2".into()));
        }
        let w = 1.0 / grid_size as f64;
        let atoms = (0..grid_size)
            .map(|m| (self.g.eval((m as f64 + 0.5) * w), w))
            .collect();
        ProbabilityMeasure::from_atoms(atoms)
    }

    /// The pushforward `(-df_t/dt)_* (omega_t / Vol)` at one time, computed by
    /// `s`-quadrature against the volume density `f_t''`. By the toric form
    /// of the t-independence statement this agrees with [`Self::limit_measure`]
    /// for every `t`.
    pub fn pushforward_at_t(&self, t: f64, grid_size: usize) -> Result<ProbabilityMeasure> {
        if grid_size < 2 {
            return Err(Error::Precondition("grid_size must be >= 2".into()));
        }
        let u = self.symplectic_at(t)?;
        let (s_lo, s_hi) = u.s_range(EDGE_X);
        let gl = GaussLegendre::new(grid_size);
        let (s, w) = gl.mapped(s_lo, s_hi);
        let mut atoms = Vec::with_capacity(s.len());
        let mut total = 0.0;
        for (si, wi) in s.iter().zip(&w) {
            let x = legendre_transform(&u, *si)?.x_star;
            let fpp = 1.0 / u.second_deriv(x);
            let weight = fpp * wi;
            if weight <= 0.0 || !weight.is_finite() {
                return Err(Error::Numerical(format!(
                    "quadrature weight underflow at s = {si}"
                )));
            }
            total += weight;
            atoms.push((self.g.eval(x), weight));
        }
        for a in &mut atoms {
            a.1 /= total;
        }
        ProbabilityMeasure::from_atoms(atoms)
    }

    /// Aubin-Yau energy slope along the geodesic: the constant first moment
    /// `int_0^1 g(x) dx`.
    pub fn aubin_yau_energy(&self) -> f64 {
        let g = self.g.clone();
        adaptive_simpson(&move |x| g.eval(x), 0.0, 1.0, 1e-10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fs() -> SymplecticPotential {
        SymplecticPotential::guillemin()
    }

    fn family3() -> MAGeodesicToric {
        MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![0.0, 0.0, 0.5]).unwrap())
    }

    #[test]
    fn conjugate_of_guillemin_is_softplus() {
        // sup_x (x s - u_G(x)) = log(1 + e^s)
        for s in [-7.0, -1.0, 0.0, 0.3, 2.0, 9.0] {
            let p = legendre_transform(&fs(), s).unwrap();
            assert_abs_diff_eq!(p.f, (1.0 + s.exp()).ln(), epsilon = 1e-11);
            assert_abs_diff_eq!(p.x_star, s.exp() / (1.0 + s.exp()), epsilon = 1e-11);
        }
        assert_abs_diff_eq!(
            legendre_transform(&fs(), 0.0).unwrap().f,
            (2.0f64).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn constant_shift_lowers_conjugate() {
        let c = 1.37;
        let u = SymplecticPotential::new(vec![c]).unwrap();
        for s in [-3.0, 0.5, 4.0] {
            let p0 = legendre_transform(&fs(), s).unwrap();
            let p = legendre_transform(&u, s).unwrap();
            assert_abs_diff_eq!(p.f, p0.f - c, epsilon = 1e-11);
            assert_abs_diff_eq!(p.x_star, p0.x_star, epsilon = 1e-10);
        }
    }

    #[test]
    fn linear_tilt_translates_conjugate() {
        let alpha = 0.8;
        let u = SymplecticPotential::new(vec![0.0, alpha]).unwrap();
        for s in [-2.0, 0.0, 3.0] {
            let shifted = legendre_transform(&fs(), s - alpha).unwrap();
            let p = legendre_transform(&u, s).unwrap();
            assert_abs_diff_eq!(p.f, shifted.f, epsilon = 1e-11);
            assert_abs_diff_eq!(p.x_star, shifted.x_star, epsilon = 1e-10);
        }
    }

    #[test]
    fn nonconvex_correction_rejected() {
        assert!(matches!(
            SymplecticPotential::new(vec![0.0, 0.0, -500.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn midpoint_potential_matches_brute_force_sup() {
        // u1 = u0 + x^2/2, t = 1/2 -> conjugate of u0 + x^2/4
        let geo = family3();
        let f_half = geo.potential_at(0.5).unwrap();
        for s in [-4.0, -0.5, 0.0, 1.2, 5.0] {
            let f = f_half.value(s).unwrap();
            // brute-force sup over refined x grid
            let quarter = SymplecticPotential::new(vec![0.0, 0.0, 0.25]).unwrap();
            let mut best = f64::NEG_INFINITY;
            let mut best_x = 0.5;
            for i in 1..20000 {
                let x = i as f64 / 20000.0;
                let v = x * s - quarter.value(x);
                if v > best {
                    best = v;
                    best_x = x;
                }
            }
            // refine around best_x
            let mut lo = (best_x - 1e-4).max(1e-12);
            let hi = (best_x + 1e-4).min(1.0 - 1e-12);
            let mut step = (hi - lo) / 2000.0;
            for _ in 0..3 {
                let mut local = f64::NEG_INFINITY;
                let mut local_x = lo;
                let mut x = lo;
                while x < lo + 2000.0 * step {
                    let v = x * s - quarter.value(x);
                    if v > local {
                        local = v;
                        local_x = x;
                    }
                    x += step;
                }
                best = local;
                lo = (local_x - 2.0 * step).max(1e-12);
                step /= 100.0;
            }
            assert_abs_diff_eq!(f, best, epsilon = 1e-8);
        }
    }

    #[test]
    fn potential_independent_of_t_for_equal_endpoints() {
        let geo = MAGeodesicToric::new(fs(), fs());
        for s in [-1.0, 0.4, 2.0] {
            let a = geo.potential_at(0.0).unwrap().value(s).unwrap();
            let b = geo.potential_at(0.63).unwrap().value(s).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn t_outside_unit_interval_rejected() {
        let geo = family3();
        assert!(matches!(geo.potential_at(-0.1), Err(Error::Domain(_))));
        assert!(matches!(geo.potential_at(1.1), Err(Error::Domain(_))));
    }

    #[test]
    fn moment_map_basics() {
        let geo = MAGeodesicToric::new(fs(), fs());
        assert_abs_diff_eq!(geo.moment_map(0.0, 0.0).unwrap(), 0.5, epsilon = 1e-11);
        assert!(geo.moment_map(0.0, -40.0).unwrap() < 1e-10);
        assert!(geo.moment_map(0.0, 40.0).unwrap() > 1.0 - 1e-10);
        // strict monotonicity
        let geo3 = family3();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..40 {
            let s = -6.0 + 0.3 * i as f64;
            let x = geo3.moment_map(0.3, s).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn velocity_constant_for_translation_family() {
        let beta = 0.7;
        let geo = MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![beta]).unwrap());
        for (t, s) in [(0.0, -2.0), (0.4, 0.0), (1.0, 3.0)] {
            assert_abs_diff_eq!(geo.velocity(t, s).unwrap(), -beta, epsilon = 1e-12);
        }
        let trivial = MAGeodesicToric::new(fs(), fs());
        assert_abs_diff_eq!(trivial.velocity(0.5, 1.0).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let geo = family3();
        let dt = 1e-4;
        for (t, s) in [(0.3, -1.0), (0.5, 0.0), (0.7, 2.0)] {
            let fp = geo.potential_at(t + dt).unwrap().value(s).unwrap();
            let fm = geo.potential_at(t - dt).unwrap().value(s).unwrap();
            let fd = (fp - fm) / (2.0 * dt);
            let v = geo.velocity(t, s).unwrap();
            assert_abs_diff_eq!(v, fd, epsilon = 1e-7);
            let x = geo.moment_map(t, s).unwrap();
            assert_abs_diff_eq!(v, -x * x / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn velocity_pinched_by_symbol_range() {
        let geo = family3();
        for i in 0..20 {
            for j in 0..20 {
                let t = (i as f64 + 0.5) / 20.0;
                let s = -5.0 + 10.0 * (j as f64 + 0.5) / 20.0;
                let v = geo.velocity(t, s).unwrap();
                assert!(v >= -geo.g_max() - 1e-10 && v <= -geo.g_min() + 1e-10);
            }
        }
    }

    #[test]
    fn residual_zero_for_translation_family() {
        // f_t(s) = f_0(s - t alpha) solves the geodesic equation exactly
        let geo = MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![0.0, 0.9]).unwrap());
        for (t, s) in [(0.2, -1.0), (0.5, 0.7), (0.8, 2.5)] {
            assert!(geo.geodesic_residual(t, s).unwrap().abs() < 1e-8);
        }
        let trivial = MAGeodesicToric::new(fs(), fs());
        assert!(trivial.geodesic_residual(0.5, 0.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn residual_small_on_grid_for_nonlinear_family() {
        let geo = family3();
        for i in 0..20 {
            for j in 0..20 {
                let t = 0.05 + 0.9 * i as f64 / 19.0;
                let s = -5.0 + 10.0 * j as f64 / 19.0;
                let r = geo.geodesic_residual(t, s).unwrap();
                assert!(r.abs() <= 1e-6, "residual {r} at t={t}, s={s}");
            }
        }
    }

    #[test]
    fn residual_stencil_domain_guard() {
        let geo = family3();
        assert!(matches!(
            geo.geodesic_residual(1e-4, 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn limit_measure_moments() {
        let fsx = MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![0.0, 1.0]).unwrap());
        let m = fsx.limit_measure(4000).unwrap();
        for p in 1..=4 {
            assert_abs_diff_eq!(
                m.moment(p).unwrap(),
                1.0 / (p as f64 + 1.0),
                epsilon = 1.0 / 4000.0
            );
        }
        let geo = family3();
        let m = geo.limit_measure(4000).unwrap();
        assert_abs_diff_eq!(m.moment(1).unwrap(), 1.0 / 6.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m.moment(2).unwrap(), 1.0 / 20.0, epsilon = 1e-6);

        let beta = 0.7;
        let tr = MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![beta]).unwrap());
        let m = tr.limit_measure(100).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert_abs_diff_eq!(m.atoms()[0].0, beta, epsilon = 1e-14);
    }

    #[test]
    fn pushforward_matches_limit_measure_at_all_t() {
        // the pushforward is t-independent: its moments match the limit
        // measure's at every t (the quadrature is spectrally accurate, the
        // limit grid is only O(1/n), so compare against exact moments)
        let geo = family3();
        let exact = |p: i32| {
            // int_0^1 (x^2/2)^p dx
            0.5f64.powi(p) / (2.0 * p as f64 + 1.0)
        };
        for t in [0.0, 0.3, 0.7, 1.0] {
            let nu = geo.pushforward_at_t(t, 400).unwrap();
            for p in 1..=4 {
                assert_abs_diff_eq!(
                    nu.moment(p as u32).unwrap(),
                    exact(p),
                    epsilon = 1e-6
                );
            }
        }
    }

    #[test]
    fn pushforward_degenerate_families() {
        let beta = 0.7;
        let tr = MAGeodesicToric::new(fs(), SymplecticPotential::new(vec![beta]).unwrap());
        let nu = tr.pushforward_at_t(0.5, 200).unwrap();
        assert_eq!(nu.atoms().len(), 1);
        assert_abs_diff_eq!(nu.atoms()[0].0, beta, epsilon = 1e-12);
        let trivial = MAGeodesicToric::new(fs(), fs());
        let nu = trivial.pushforward_at_t(0.25, 200).unwrap();
        assert_eq!(nu.atoms().len(), 1);
        assert_abs_diff_eq!(nu.atoms()[0].0, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn aubin_yau_energy_values() {
        let trivial = MAGeodesicToric::new(fs(), fs());
        assert_abs_diff_eq!(trivial.aubin_yau_energy(), 0.0, epsilon = 1e-12);
        let geo = family3();
        assert_abs_diff_eq!(geo.aubin_yau_energy(), 1.0 / 6.0, epsilon = 1e-10);
        let swapped = MAGeodesicToric::new(geo.u1.clone(), geo.u0.clone());
        assert_abs_diff_eq!(
            swapped.aubin_yau_energy(),
            -geo.aubin_yau_energy(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn legendre_involution() {
        // conjugating f_t back recovers u_t on the interior
        let geo = family3();
        let u_t = geo.symplectic_at(0.4).unwrap();
        let f_t = geo.potential_at(0.4).unwrap();
        let (s_lo, s_hi) = u_t.s_range(1e-10);
        let n = 4001;
        let svals: Vec<f64> = (0..n)
            .map(|i| s_lo + (s_hi - s_lo) * i as f64 / (n - 1) as f64)
            .collect();
        let fvals: Vec<f64> = svals.iter().map(|s| f_t.value(*s).unwrap()).collect();
        let ds = (s_hi - s_lo) / (n - 1) as f64;
        for i in 0..=18 {
            let x = 0.05 + 0.9 * i as f64 / 18.0;
            let (mut best_s, mut sup) = (svals[0], f64::NEG_INFINITY);
            for (s, f) in svals.iter().zip(&fvals) {
                if x * s - f > sup {
                    sup = x * s - f;
                    best_s = *s;
                }
            }
            // refine around the coarse argmax to beat the grid bias
            for j in 0..=2000 {
                let s = best_s - ds + 2.0 * ds * j as f64 / 2000.0;
                sup = sup.max(x * s - f_t.value(s).unwrap());
            }
            assert_abs_diff_eq!(sup, u_t.value(x), epsilon = 1e-8);
        }
    }

    #[test]
    fn json_round_trip() {
        let u = SymplecticPotential::new(vec![0.1, -0.2, 0.3]).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        assert!(s.contains("\"poly\""));
        let back = SymplecticPotential::from_json(&s).unwrap();
        assert_eq!(back.poly_coeffs, u.poly_coeffs);
        assert_abs_diff_eq!(back.deriv(0.3), u.deriv(0.3), epsilon = 1e-15);
    }
}
