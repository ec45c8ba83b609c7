//! Bergman kernels along a geodesic of norms.
//!
//! The on-diagonal Bergman density of a norm `H` on the sections is
//! `B(s) = sup_v |v(s)|^2 / |v|_H^2`, computable as
//! `sum_{i,j} (H^{-1})_{ij} e^{((i+j)/2 + off) s}` in the reduced coordinate
//! `s = log|z|^2`. Along the pencil geodesic `H^t` this becomes a strictly
//! log-convex-in-`t` exponential sum over the joint eigenbasis, and
//! `k^{-1} log B` recovers the weight potential up to `O(k^{-1} log k)`.

use crate::error::{Error, Result};
use crate::pencil::GeodesicSpectrum;
use crate::quad::{log_sum_exp, signed_log_sum_exp};
use crate::sections::{Flavor, GramMatrix};
use crate::toric::MAGeodesicToric;

fn check_pair(gs: &GeodesicSpectrum, g0: &GramMatrix) -> Result<()> {
    if gs.spec != g0.spec || gs.dim() != g0.dim() {
        return Err(Error::Contract(
            "spectrum and G0 belong to different section spaces".into(),
        ));
    }
    Ok(())
}

/// `log B_t(s)` for the geodesic norm `H^t` of a solved pencil, assembled in
/// log space over the joint eigenbasis:
/// `B_t(s) = sum_r e^{-t lambda_r} c_r(s)^2` with
/// `c_r(s) = sum_i P_{ir} e^{((i + off) s - ld0_i)/2}`.
pub fn bergman_kernel_log(
    gs: &GeodesicSpectrum,
    g0: &GramMatrix,
    t: f64,
    s: f64,
) -> Result<f64> {
    check_pair(gs, g0)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0,1]")));
    }
    let d = gs.dim();
    let off = gs.spec.flavor.exponent_offset();
    let log_half_terms: Vec<f64> = (0..d)
        .map(|i| 0.5 * ((i as f64 + off) * s - g0.log_diag[i]))
        .collect();
    let mut outer = Vec::with_capacity(d);
    for r in 0..d {
        let coeffs: Vec<f64> = (0..d).map(|i| gs.basis[(i, r)]).collect();
        let (sign, log_c) = signed_log_sum_exp(&log_half_terms, &coeffs);
        if sign == 0.0 {
            continue;
        }
        outer.push(-t * gs.lambdas[r] + 2.0 * log_c);
    }
    if outer.is_empty() {
        return Err(Error::Numerical(
            "Bergman sum vanished identically".into(),
        ));
    }
    Ok(log_sum_exp(&outer))
}

/// The metric potential read off the Bergman kernel:
/// `(log B_t(s) - tau(s)) / k`, where `tau` absorbs the flavor's extra power
/// of `e^s` (`tau = 0` for Hilb, `tau = s` for the adjoint flavor).
pub fn fs_metric(gs: &GeodesicSpectrum, g0: &GramMatrix, t: f64, s: f64) -> Result<f64> {
    let tau = match gs.spec.flavor {
        Flavor::Hilb => 0.0,
        Flavor::Adjoint => s,
    };
    Ok((bergman_kernel_log(gs, g0, t, s)? - tau) / gs.spec.k as f64)
}

/// `sup_s | k^{-1}(log B_t - tau) - f_t(s) |` over the truncated working
/// interval, with grid doubling until the sup is stable to 1%.
pub fn sup_deviation(
    gs: &GeodesicSpectrum,
    g0: &GramMatrix,
    geo: &MAGeodesicToric,
    t: f64,
) -> Result<f64> {
    let f_t = geo.potential_at(t)?;
    let (s_lo, s_hi) = f_t.s_range(crate::toric::EDGE_X);
    let mut n = 200;
    let mut prev: Option<f64> = None;
    loop {
        let mut sup: f64 = 0.0;
        for i in 0..=n {
            let s = s_lo + (s_hi - s_lo) * i as f64 / n as f64;
            let dev = fs_metric(gs, g0, t, s)? - f_t.value(s)?;
            sup = sup.max(dev.abs());
        }
        if let Some(p) = prev {
            if (sup - p).abs() <= 0.01 * sup.max(1e-300) {
                return Ok(sup);
            }
        }
        prev = Some(sup);
        n *= 2;
        if n > 1 << 16 {
            return Err(Error::Numerical(
                "Bergman sup did not stabilize under grid doubling".into(),
            ));
        }
    }
}
