//! Quantized section spaces and their Gram matrices.
//!
//! For the bundle `kL` over `CP^1` the monomials `z^j` (or `z^j dz` in the
//! adjoint flavor) form a basis of the holomorphic sections, and the
//! `L^2`-inner products under a weight `e^{-k phi}` reduce to 1D integrals in
//! `s = log|z|^2` after the angular integration. The integrand
//! `exp(j s - k f(s))` spans hundreds of orders of magnitude, so every entry
//! is assembled with log-sum-exp and the matrix is stored as a log-scale
//! diagonal plus a unit-diagonal scaled factor.

use crate::error::{Error, Result};
use crate::quad::{log_sum_exp, GaussLegendre};
use crate::toric::{legendre_transform, MAGeodesicToric, SymplecticPotential, EDGE_X};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which section space a Gram matrix lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// `H^0(X, kL)` with the volume-form density; dimension `k + 1`.
    Hilb,
    /// `H^0(X, K_X + kL)`; dimension `k - 1`, no density factor.
    Adjoint,
}

impl Flavor {
    pub fn dim(self, k: u32) -> usize {
        match self {
            Flavor::Hilb => k as usize + 1,
            Flavor::Adjoint => k as usize - 1,
        }
    }

    pub fn min_k(self) -> u32 {
        match self {
            Flavor::Hilb => 1,
            Flavor::Adjoint => 2,
        }
    }

    /// Offset added to the basis index in the reduced exponent: the adjoint
    /// pairing of `z^j dz` with the flat area element contributes one extra
    /// power of `e^s`.
    pub fn exponent_offset(self) -> f64 {
        match self {
            Flavor::Hilb => 0.0,
            Flavor::Adjoint => 1.0,
        }
    }

    /// Log of the angular/volume constant in front of the reduced integral.
    pub fn ln_angular_const(self) -> f64 {
        match self {
            Flavor::Hilb => (2.0 * std::f64::consts::PI).ln(),
            Flavor::Adjoint => (0.5 * std::f64::consts::PI).ln(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Flavor::Hilb => "hilb-2pi",
            Flavor::Adjoint => "adjoint-pi2",
        }
    }
}

/// Bridge parameters for the positively curved interpolation weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeParams {
    /// Portion of the total weight carried by the bridge metric.
    pub a: f64,
    /// Convexity constant of `kappa(t) = -c t (1 - t)`.
    pub kappa_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSpaceSpec {
    pub k: u32,
    pub flavor: Flavor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<BridgeParams>,
}

impl SectionSpaceSpec {
    pub fn new(k: u32, flavor: Flavor) -> Result<Self> {
        if k < flavor.min_k() {
            return Err(Error::Precondition(format!(
                "k = {k} below the {flavor:?} minimum {}",
                flavor.min_k()
            )));
        }
        Ok(SectionSpaceSpec {
            k,
            flavor,
            bridge: None,
        })
    }

    pub fn with_bridge(mut self, a: f64, kappa_c: f64) -> Result<Self> {
        if a < 0.0 || kappa_c < 0.0 {
            return Err(Error::Precondition(
                "bridge parameters must be nonnegative".into(),
            ));
        }
        self.bridge = Some(BridgeParams { a, kappa_c });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.flavor.dim(self.k)
    }
}

/// Quadrature configuration for Gram assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl QuadConfig {
    /// Default node counts: the radial integrand has width `O(k^{-1/2})`, and
    /// `4k + 64` Gauss-Legendre nodes pass the doubling test up to `k = 256`.
    pub fn default_for(k: u32) -> Self {
        QuadConfig {
            radial_nodes: 4 * k as usize + 64,
            angular_nodes: 64,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.radial_nodes < 64 {
            return Err(Error::Precondition(
                "need at least 64 radial quadrature nodes".into(),
            ));
        }
        if self.angular_nodes < 32 {
            return Err(Error::Precondition(
                "need at least 32 angular quadrature nodes".into(),
            ));
        }
        Ok(())
    }
}

/// Smooth non-invariant deformation `epsilon * p(x) * cos(m theta)` of a
/// weight; exercises the off-diagonal Gram machinery.
#[derive(Clone)]
pub struct AngularPerturbation {
    pub epsilon: f64,
    pub mode: u32,
    pub profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for AngularPerturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AngularPerturbation")
            .field("epsilon", &self.epsilon)
            .field("mode", &self.mode)
            .finish()
    }
}

/// A weight on the line bundle in reduced log coordinates:
/// `W(s) = sum_i c_i f_{u_i}(s) + const`, where each `f_{u_i}` is the
/// Legendre conjugate of a symplectic potential. The optional `volume`
/// potential contributes the density `f''(s)` (Hilb flavor), and
/// `moment_potential` defines the moment coordinate used by symbols and by
/// the domain truncation.
#[derive(Debug, Clone)]
pub struct Weight {
    pub terms: Vec<(f64, SymplecticPotential)>,
    pub constant: f64,
    pub volume: Option<SymplecticPotential>,
    pub moment_potential: SymplecticPotential,
    pub angular: Option<AngularPerturbation>,
    pub tag: String,
}

impl Weight {
    /// Plain weight `scale * f_u` of a single metric.
    pub fn simple(u: SymplecticPotential, scale: f64, with_volume: bool, tag: impl Into<String>) -> Self {
        Weight {
            terms: vec![(scale, u.clone())],
            constant: 0.0,
            volume: if with_volume { Some(u.clone()) } else { None },
            moment_potential: u,
            angular: None,
            tag: tag.into(),
        }
    }

    pub fn with_angular(mut self, pert: AngularPerturbation) -> Self {
        self.angular = Some(pert);
        self
    }

    /// Adds a constant `c0 * scale` to the exponent (a global rescaling of
    /// the weight).
    pub fn shifted(mut self, c: f64) -> Self {
        self.constant += c;
        self.tag = format!("{}+shift", self.tag);
        self
    }

    pub fn exponent(&self, s: f64) -> Result<f64> {
        let mut w = self.constant;
        for (c, u) in &self.terms {
            if *c != 0.0 {
                w += c * legendre_transform(u, s)?.f;
            }
        }
        Ok(w)
    }

    pub fn moment(&self, s: f64) -> Result<f64> {
        Ok(legendre_transform(&self.moment_potential, s)?.x_star)
    }

    /// Working `s`-interval on which the moment coordinate stays inside
    /// `[EDGE_X, 1 - EDGE_X]`; informational (plotting ranges). Quadrature
    /// itself runs in the compact moment coordinate, see [`node_base`].
    pub fn s_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, u) in &self.terms {
            let (a, b) = u.s_range(EDGE_X);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let (a, b) = self.moment_potential.s_range(EDGE_X);
        (lo.min(a), hi.max(b))
    }
}

/// Gram matrix of the monomial basis under a weight, in log-scale storage:
/// `G = D S D` with `D = diag(e^{log_diag / 2})` and `S` unit-diagonal.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub spec: SectionSpaceSpec,
    pub log_diag: Vec<f64>,
    pub scaled: DMatrix<f64>,
    pub convention_tag: String,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.log_diag.len()
    }

    /// Whether the scaled factor is numerically the identity (invariant
    /// weight).
    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.scaled[(i, j)].abs() > 1e-11 {
                    return false;
                }
            }
        }
        true
    }

    /// `log det G` via the log-diagonal and a Cholesky factor of the scaled
    /// part.
    pub fn log_det(&self) -> Result<f64> {
        let chol = nalgebra::Cholesky::new(self.scaled.clone())
            .ok_or_else(|| Error::Numerical("scaled Gram factor is not PD".into()))?;
        let l = chol.l();
        let mut ld: f64 = self.log_diag.iter().sum();
        for i in 0..self.dim() {
            ld += 2.0 * l[(i, i)].ln();
        }
        Ok(ld)
    }

    /// Serializes to the JSON export schema.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec,
            "convention_tag": self.convention_tag,
            "log_diag": self.log_diag,
            "scaled": self.scaled.as_slice().to_vec(),
        })
    }
}

/// Per-node log-integrand base shared by Gram and Toeplitz assembly:
/// `-W(s_m) + ln(density) + ln(quadrature weight) + ln(angular const)`.
pub(crate) struct NodeBase {
    pub s: Vec<f64>,
    pub base: Vec<f64>,
    pub x: Vec<f64>,
}

pub(crate) fn node_base(
    flavor: Flavor,
    weight: &Weight,
    quad: &QuadConfig,
) -> Result<NodeBase> {
    // Integrate in the moment coordinate of the moment potential:
    // s = u'(x) compactifies the line to [0,1] with Jacobian ds = u''(x) dx,
    // turning the Fubini-Study integrands into exact polynomials and the
    // general ones into analytic functions -- no domain truncation at all.
    let gl = GaussLegendre::new(quad.radial_nodes);
    let (xs, w) = gl.mapped(0.0, 1.0);
    let mp = &weight.moment_potential;
    let mut s = Vec::with_capacity(xs.len());
    let mut base = Vec::with_capacity(xs.len());
    for (xi, wi) in xs.iter().zip(&w) {
        let si = mp.deriv(*xi);
        let mut b = -weight.exponent(si)?
            + wi.ln()
            + mp.second_deriv(*xi).ln()
            + flavor.ln_angular_const();
        if let Some(vol) = &weight.volume {
            let xv = legendre_transform(vol, si)?.x_star;
            b += -(vol.second_deriv(xv)).ln(); // ln f'' = -ln u''
        }
        s.push(si);
        base.push(b);
    }
    Ok(NodeBase { s, base, x: xs })
}

/// Assembles the Gram matrix of a section space under a weight.
pub fn gram_matrix(spec: &SectionSpaceSpec, weight: &Weight, quad: &QuadConfig) -> Result<GramMatrix> {
    quad.validate()?;
    let d = spec.dim();
    let off = spec.flavor.exponent_offset();
    let nb = node_base(spec.flavor, weight, quad)?;
    let convention_tag = format!("{}|{}", spec.flavor.tag(), weight.tag);

    // Angular factors per band distance and node; identity when invariant.
    let angular = match &weight.angular {
        None => None,
        Some(p) => {
            let n_t = quad.angular_nodes;
            let mut factors = vec![vec![0.0; nb.s.len()]; d];
            for (m, &xm) in nb.x.iter().enumerate() {
                let amp = p.epsilon * (p.profile)(xm);
                for (delta, row) in factors.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for q in 0..n_t {
                        let theta = 2.0 * std::f64::consts::PI * q as f64 / n_t as f64;
                        acc += (-amp * (p.mode as f64 * theta).cos()).exp()
                            * (delta as f64 * theta).cos();
                    }
                    row[m] = acc / n_t as f64;
                }
            }
            Some(factors)
        }
    };

    let mut log_diag = vec![0.0; d];
    let mut scratch = vec![0.0; nb.s.len()];
    for (j, ld) in log_diag.iter_mut().enumerate() {
        let p = j as f64 + off;
        for (m, v) in scratch.iter_mut().enumerate() {
            let mut t = p * nb.s[m] + nb.base[m];
            if let Some(f) = &angular {
                let a = f[0][m];
                if a <= 0.0 {
                    return Err(Error::Numerical(format!(
                        "angular factor not positive at node {m}"
                    )));
                }
                t += a.ln();
            }
            *v = t;
        }
        *ld = log_sum_exp(&scratch);
    }

    let mut scaled = DMatrix::identity(d, d);
    if let Some(factors) = &angular {
        for i in 0..d {
            for j in (i + 1)..d {
                let p = 0.5 * (i as f64 + j as f64) + off;
                let shift = 0.5 * (log_diag[i] + log_diag[j]);
                let mut acc = 0.0;
                for m in 0..nb.s.len() {
                    let e = p * nb.s[m] + nb.base[m] - shift;
                    if e > 700.0 {
                        return Err(Error::Overflow(format!(
                            "scaled Gram exponent {e} at entry ({i},{j}); apply the centering shift"
                        )));
                    }
                    acc += factors[j - i][m] * e.exp();
                }
                scaled[(i, j)] = acc;
                scaled[(j, i)] = acc;
            }
        }
    }

    if nalgebra::Cholesky::new(scaled.clone()).is_none() {
        let eig = scaled.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::Numerical(format!(
            "scaled Gram matrix is not positive definite (smallest pivot {min:.3e})"
        )));
    }

    Ok(GramMatrix {
        spec: spec.clone(),
        log_diag,
        scaled,
        convention_tag,
    })
}

/// The weight for the section space at interior time `t`.
///
/// Without bridge parameters this is `k f_t`. With bridge parameters
/// `(a, c)` (Hilb flavor) it is `(k - a) f_t + a chi_t`, where `chi_t` is the
/// certified positively curved bridge between the endpoint metrics.
pub fn weight_at_t(geo: &MAGeodesicToric, t: f64, spec: &SectionSpaceSpec) -> Result<Weight> {
    let u_t = geo.symplectic_at(t)?;
    let k = spec.k as f64;
    match (spec.flavor, &spec.bridge) {
        (Flavor::Adjoint, _) | (Flavor::Hilb, None) => Ok(Weight {
            terms: vec![(k, u_t.clone())],
            constant: 0.0,
            volume: match spec.flavor {
                Flavor::Hilb => Some(u_t.clone()),
                Flavor::Adjoint => None,
            },
            moment_potential: u_t,
            angular: None,
            tag: format!("kf(t={t})"),
        }),
        (Flavor::Hilb, Some(bp)) => {
            let chi = bridge_weight(geo, t, bp.kappa_c)?;
            if bp.a > k {
                return Err(Error::Precondition(format!(
                    "bridge portion a = {} exceeds k = {k}",
                    bp.a
                )));
            }
            let mut terms = vec![((k - bp.a), u_t.clone())];
            for (c, u) in chi.terms {
                terms.push((bp.a * c, u));
            }
            Ok(Weight {
                terms,
                constant: bp.a * chi.constant,
                volume: Some(u_t.clone()),
                moment_potential: u_t,
                angular: None,
                tag: format!("(k-a)f+achi(t={t},a={},c={})", bp.a, bp.kappa_c),
            })
        }
    }
}

/// The bridge metric `chi_t = t f_1 + (1 - t) f_0 - c t (1 - t)` as a weight
/// component, after checking its positivity certificate.
#[derive(Debug, Clone)]
pub struct BridgeChi {
    /// `chi_t(s) = sum c_i f_{u_i}(s) + constant`.
    pub terms: Vec<(f64, SymplecticPotential)>,
    pub constant: f64,
    pub t: f64,
    pub c: f64,
}

impl BridgeChi {
    pub fn value(&self, s: f64) -> Result<f64> {
        let mut v = self.constant;
        for (c, u) in &self.terms {
            if *c != 0.0 {
                v += c * legendre_transform(u, s)?.f;
            }
        }
        Ok(v)
    }
}

/// Positivity certificate of the bridge family on a `(t, s)` grid in the
/// invariant reduction: `(d^2/dt^2 chi)(d^2/ds^2 chi) - (d^2/dtds chi)^2 >= 0`
/// pointwise. Returns the minimal margin and, on failure, the smallest
/// convexity constant that passes on the same grid.
pub fn bridge_certificate(
    geo: &MAGeodesicToric,
    c: f64,
    nt: usize,
    ns: usize,
) -> Result<f64> {
    let (lo0, hi0) = geo.u0.s_range(EDGE_X);
    let (lo1, hi1) = geo.u1.s_range(EDGE_X);
    let (s_lo, s_hi) = (lo0.min(lo1), hi0.max(hi1));
    let mut min_margin = f64::INFINITY;
    let mut c_needed: f64 = 0.0;
    for i in 0..nt {
        let t = (i as f64 + 0.5) / nt as f64;
        for j in 0..ns {
            let s = s_lo + (s_hi - s_lo) * (j as f64 + 0.5) / ns as f64;
            let p0 = legendre_transform(&geo.u0, s)?;
            let p1 = legendre_transform(&geo.u1, s)?;
            let f0pp = 1.0 / geo.u0.second_deriv(p0.x_star);
            let f1pp = 1.0 / geo.u1.second_deriv(p1.x_star);
            let chi_ss = t * f1pp + (1.0 - t) * f0pp;
            let chi_ts = p1.x_star - p0.x_star;
            // chi_tt = 2c exactly (the f-terms are affine in t)
            let margin = 2.0 * c * chi_ss - chi_ts * chi_ts;
            min_margin = min_margin.min(margin);
            c_needed = c_needed.max(chi_ts * chi_ts / (2.0 * chi_ss));
        }
    }
    if min_margin < -1e-12 {
        return Err(Error::Positivity {
            c,
            suggested_c: c_needed,
        });
    }
    Ok(min_margin)
}

/// Builds the bridge metric at time `t`, certifying positivity first
/// (40x40 grid).
pub fn bridge_weight(geo: &MAGeodesicToric, t: f64, c: f64) -> Result<BridgeChi> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0,1]")));
    }
    if c < 0.0 {
        return Err(Error::Precondition("bridge constant c must be >= 0".into()));
    }
    bridge_certificate(geo, c, 40, 40)?;
    Ok(BridgeChi {
        terms: vec![(t, geo.u1.clone()), (1.0 - t, geo.u0.clone())],
        constant: -c * t * (1.0 - t),
        t,
        c,
    })
}
