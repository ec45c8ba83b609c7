//! Config-driven convergence studies with cached, reproducible output.
//!
//! A study takes two boundary potentials, a list of quantization levels and a
//! set of symbols, runs every per-`k` diagnostic the crate provides, and
//! writes deterministic CSV/JSON tables under a directory named by the
//! content hash of the configuration. Reruns with an unchanged configuration
//! are cache hits; per-`k` failures become error rows instead of aborting the
//! study.

use crate::bergman::sup_deviation;
use crate::error::{Error, Result};
use crate::pencil::{sandwich_check, solve_geodesic};
use crate::quad::adaptive_simpson;
use crate::sections::{gram_matrix, weight_at_t, Flavor, QuadConfig, SectionSpaceSpec};
use crate::toeplitz::{
    composition_defect, derivative_toeplitz, toeplitz_operator, trace_defect, Symbol,
};
use crate::toric::{MAGeodesicToric, SymplecticPotential};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Version tag stamped on every output row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Declarative symbol descriptors for config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SymbolSpec {
    /// Polynomial in the moment coordinate.
    Poly { coeffs: Vec<f64> },
    /// `sin(freq * pi * x)`.
    Sin { freq: f64 },
    /// `|x - 1/2|` (Lipschitz but not smooth).
    AbsCentered,
    /// `exp(rate * x)`.
    Exp { rate: f64 },
    Const { value: f64 },
}

impl SymbolSpec {
    pub fn build(&self) -> Symbol {
        match self {
            SymbolSpec::Poly { coeffs } => {
                let c = coeffs.clone();
                Symbol::of_moment(format!("poly{c:?}"), move |x| {
                    c.iter().rev().fold(0.0, |acc, ci| acc * x + ci)
                })
            }
            SymbolSpec::Sin { freq } => {
                let f = *freq;
                Symbol::of_moment(format!("sin({f}pi x)"), move |x| {
                    (f * std::f64::consts::PI * x).sin()
                })
            }
            SymbolSpec::AbsCentered => Symbol::of_moment("abs(x-1/2)", |x| (x - 0.5).abs()),
            SymbolSpec::Exp { rate } => {
                let r = *rate;
                Symbol::of_moment(format!("exp({r}x)"), move |x| (r * x).exp())
            }
            SymbolSpec::Const { value } => Symbol::constant(*value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeConfig {
    pub enabled: bool,
    pub a: f64,
    pub c: f64,
}

fn default_t_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

fn default_limit_grid() -> usize {
    200_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub u0: SymplecticPotential,
    pub u1: SymplecticPotential,
    pub flavor: Flavor,
    pub k_list: Vec<u32>,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<BridgeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadConfig>,
    #[serde(default = "default_limit_grid")]
    pub limit_grid: usize,
}

impl ExperimentConfig {
    /// Re-validates deserialized potentials and the structural invariants.
    pub fn validate(&self) -> Result<(SymplecticPotential, SymplecticPotential)> {
        let u0 = SymplecticPotential::new(self.u0.poly_coeffs.clone())?;
        let u1 = SymplecticPotential::new(self.u1.poly_coeffs.clone())?;
        if self.k_list.is_empty() {
            return Err(Error::Config("k_list is empty".into()));
        }
        for w in self.k_list.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config(format!(
                    "k_list not strictly ascending at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        if self.k_list[0] < self.flavor.min_k() {
            return Err(Error::Config(format!(
                "k = {} below the {:?} minimum",
                self.k_list[0], self.flavor
            )));
        }
        for t in &self.t_grid {
            if !(0.0..=1.0).contains(t) {
                return Err(Error::Config(format!("t = {t} outside [0,1]")));
            }
        }
        if self.limit_grid < 100 {
            return Err(Error::Config("limit_grid below 100".into()));
        }
        if let Some(b) = &self.bridge {
            if b.enabled && (b.a < 0.0 || b.c < 0.0) {
                return Err(Error::Config("bridge parameters must be nonnegative".into()));
            }
        }
        Ok((u0, u1))
    }

    /// Content hash of the canonical JSON serialization.
    pub fn config_hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        let digest = h.finalize();
        let mut s = String::with_capacity(16);
        for b in digest.iter().take(8) {
            write!(s, "{b:02x}").unwrap();
        }
        s
    }
}

/// One per-`k` output row: summary statistics, or an error message.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub version: String,
    pub k: u32,
    pub d_k: usize,
    pub status: String,
    pub message: String,
    pub nu_moments: Vec<f64>,
    pub mu_moments: Vec<f64>,
    pub w1: Option<f64>,
    pub ks: Option<f64>,
    pub geodesic_distance: Option<f64>,
    pub limit_distance: Option<f64>,
    pub z_over_kd: Option<f64>,
    pub aubin_yau: Option<f64>,
    pub pinch_min: Option<f64>,
    pub pinch_max: Option<f64>,
    pub sandwich_m0: Option<f64>,
    pub sandwich_m1: Option<f64>,
    /// Named long-format diagnostics: trace/composition defects per symbol,
    /// sup deviations per `t`, bridge margins.
    pub diagnostics: Vec<(String, f64)>,
}

impl ResultRecord {
    fn error(hash: &str, k: u32, d_k: usize, message: String) -> Self {
        ResultRecord {
            config_hash: hash.to_string(),
            version: VERSION.to_string(),
            k,
            d_k,
            status: "error".into(),
            message,
            nu_moments: Vec::new(),
            mu_moments: Vec::new(),
            w1: None,
            ks: None,
            geodesic_distance: None,
            limit_distance: None,
            z_over_kd: None,
            aubin_yau: None,
            pinch_min: None,
            pinch_max: None,
            sandwich_m0: None,
            sandwich_m1: None,
            diagnostics: Vec::new(),
        }
    }
}

/// Completed study: records sorted by `k`, fitted rates, output location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyOutput {
    pub config_hash: String,
    pub records: Vec<ResultRecord>,
    pub rates: Vec<(String, f64)>,
    pub out_dir: PathBuf,
    pub cache_hit: bool,
}

/// Least-squares fit of `log y` against `log x`: returns
/// `(slope, intercept, residual)` where residual is the root-mean-square
/// misfit. Requires at least three strictly positive values.
pub fn fit_rate(series: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if series.len() < 3 {
        return Err(Error::Precondition(format!(
            "rate fit needs >= 3 points, got {}",
            series.len()
        )));
    }
    let mut lx = Vec::with_capacity(series.len());
    let mut ly = Vec::with_capacity(series.len());
    for (x, y) in series {
        if !(*x > 0.0) || !(*y > 0.0) {
            return Err(Error::Domain(format!(
                "rate fit needs positive values, got ({x}, {y})"
            )));
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("degenerate abscissas in rate fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

fn run_one_k(
    cfg: &ExperimentConfig,
    geo: &MAGeodesicToric,
    hash: &str,
    k: u32,
) -> ResultRecord {
    let d_k = cfg.flavor.dim(k);
    match compute_one_k(cfg, geo, hash, k) {
        Ok(r) => r,
        Err(e) => ResultRecord::error(hash, k, d_k, e.to_string()),
    }
}

fn compute_one_k(
    cfg: &ExperimentConfig,
    geo: &MAGeodesicToric,
    hash: &str,
    k: u32,
) -> Result<ResultRecord> {
    let mut spec = SectionSpaceSpec::new(k, cfg.flavor)?;
    let bridge_enabled = matches!(&cfg.bridge, Some(b) if b.enabled && cfg.flavor == Flavor::Hilb);
    if let Some(b) = &cfg.bridge {
        if bridge_enabled {
            spec = spec.with_bridge(b.a, b.c)?;
        }
    }
    let quad = cfg.quadrature.unwrap_or_else(|| QuadConfig::default_for(k));
    let w0 = weight_at_t(geo, 0.0, &spec)?;
    let w1_weight = weight_at_t(geo, 1.0, &spec)?;
    let g0 = gram_matrix(&spec, &w0, &quad)?;
    let g1 = gram_matrix(&spec, &w1_weight, &quad)?;
    let gs = solve_geodesic(&g0, &g1)?;

    let nu = gs.spectral_measure()?;
    let mu = geo.limit_measure(cfg.limit_grid)?;
    let nu_moments: Vec<f64> = (1..=4).map(|p| nu.moment(p).unwrap()).collect();
    let mu_moments: Vec<f64> = (1..=4).map(|p| mu.moment(p).unwrap()).collect();
    let w1 = nu.wasserstein1(&mu);
    let ks = nu.ks_distance(&mu);
    let limit_distance =
        adaptive_simpson(&|x| geo.g(x) * geo.g(x), 0.0, 1.0, 1e-12).max(0.0).sqrt();
    let kf = k as f64;
    let df = gs.dim() as f64;
    let pinch_min = gs.lambdas.first().copied().unwrap_or(0.0) / kf - geo.g_min();
    let pinch_max = geo.g_max() - gs.lambdas.last().copied().unwrap_or(0.0) / kf;

    let mut diagnostics: Vec<(String, f64)> = Vec::new();

    // endpoint-derivative comparison (exact in the adjoint flavor)
    let (mut m0, mut m1) = (None, None);
    if !bridge_enabled {
        let (t0, g0d) = derivative_toeplitz(geo, 0.0, &spec, &quad)?;
        let (t1, g1d) = derivative_toeplitz(geo, 1.0, &spec, &quad)?;
        if g0d.convention_tag == g0.convention_tag && g1d.convention_tag == g1.convention_tag {
            let report = sandwich_check(&g0, &g1, &gs, &t0, &t1)?;
            m0 = Some(report.m0);
            m1 = Some(report.m1);
        }
    } else {
        let (tb, gb) = derivative_toeplitz(geo, 0.5, &spec, &quad)?;
        let _ = gb;
        let e = tb.eigenvalues();
        diagnostics.push(("bridge_tangent_min_over_k".into(), e[0] / kf));
        diagnostics.push(("bridge_tangent_max_over_k".into(), e[e.len() - 1] / kf));
    }

    for s in &cfg.symbols {
        let sym = s.build();
        let op = toeplitz_operator(&g0, &w0, &sym, &quad)?;
        diagnostics.push((format!("trace_defect[{}]", sym.name), trace_defect(&op, &sym)));
        let coord = Symbol::coordinate();
        let op_x = toeplitz_operator(&g0, &w0, &coord, &quad)?;
        let op_prod = toeplitz_operator(&g0, &w0, &sym.product(&coord), &quad)?;
        diagnostics.push((
            format!("comp_defect[{}*x]", sym.name),
            composition_defect(&op, &op_x, &op_prod)?,
        ));
    }

    for t in &cfg.t_grid {
        let sup = sup_deviation(&gs, &g0, geo, *t)?;
        diagnostics.push((format!("sup_deviation[t={t}]"), sup));
    }

    Ok(ResultRecord {
        config_hash: hash.to_string(),
        version: VERSION.to_string(),
        k,
        d_k: gs.dim(),
        status: "ok".into(),
        message: String::new(),
        nu_moments,
        mu_moments,
        w1: Some(w1),
        ks: Some(ks),
        geodesic_distance: Some(gs.geodesic_distance()),
        limit_distance: Some(limit_distance),
        z_over_kd: Some(gs.z_functional() / (kf * df)),
        aubin_yau: Some(geo.aubin_yau_energy()),
        pinch_min: Some(pinch_min),
        pinch_max: Some(pinch_max),
        sandwich_m0: m0,
        sandwich_m1: m1,
        diagnostics,
    })
}

fn fmt_opt(v: &Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn records_csv(records: &[ResultRecord]) -> String {
    let mut s = String::new();
    s.push_str(
        "config_hash,version,k,d_k,status,message,\
         nu_m1,nu_m2,nu_m3,nu_m4,mu_m1,mu_m2,mu_m3,mu_m4,\
         w1,ks,geodesic_distance,limit_distance,z_over_kd,aubin_yau,\
         pinch_min,pinch_max,sandwich_m0,sandwich_m1\n",
    );
    for r in records {
        let moments = |v: &Vec<f64>| -> String {
            (0..4)
                .map(|i| v.get(i).map(|x| x.to_string()).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.config_hash,
            r.version,
            r.k,
            r.d_k,
            r.status,
            r.message.replace(',', ";"),
            moments(&r.nu_moments),
            moments(&r.mu_moments),
            fmt_opt(&r.w1),
            fmt_opt(&r.ks),
            fmt_opt(&r.geodesic_distance),
            fmt_opt(&r.limit_distance),
            fmt_opt(&r.z_over_kd),
            fmt_opt(&r.aubin_yau),
            fmt_opt(&r.pinch_min),
            fmt_opt(&r.pinch_max),
            fmt_opt(&r.sandwich_m0),
            fmt_opt(&r.sandwich_m1),
        );
    }
    s
}

fn diagnostics_csv(records: &[ResultRecord]) -> String {
    let mut s = String::from("k,diagnostic_name,value\n");
    for r in records {
        for (name, v) in &r.diagnostics {
            let _ = writeln!(s, "{},{},{}", r.k, name, v);
        }
    }
    s
}

fn fit_study_rates(records: &[ResultRecord]) -> Vec<(String, f64)> {
    let mut rates = Vec::new();
    let ok: Vec<&ResultRecord> = records.iter().filter(|r| r.status == "ok").collect();
    let series = |f: &dyn Fn(&ResultRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        ok.iter()
            .filter_map(|r| f(r).map(|v| (r.k as f64, v)))
            .filter(|(_, v)| *v > 0.0)
            .collect()
    };
    let mut push = |name: &str, s: Vec<(f64, f64)>| {
        if let Ok((slope, _, _)) = fit_rate(&s) {
            rates.push((name.to_string(), slope));
        }
    };
    push("w1_rate", series(&|r| r.w1));
    push("ks_rate", series(&|r| r.ks));
    for p in 0..4usize {
        push(
            &format!("moment{}_gap_rate", p + 1),
            series(&|r| {
                let (a, b) = (r.nu_moments.get(p)?, r.mu_moments.get(p)?);
                Some((a - b).abs())
            }),
        );
    }
    // shared diagnostic names across all ok rows
    if let Some(first) = ok.first() {
        for (name, _) in &first.diagnostics {
            push(
                &format!("{name}_rate"),
                series(&|r| {
                    r.diagnostics
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, v)| *v)
                }),
            );
        }
    }
    rates
}

/// Runs the full study, writing `records.csv`, `diagnostics.csv`,
/// per-`k` spectral measures and `summary.json` under
/// `<out_dir>/<config_hash>/`. A rerun with an unchanged config is a cache
/// hit unless `force` is set.
pub fn run_study(cfg: &ExperimentConfig, out_dir: &Path, force: bool) -> Result<StudyOutput> {
    let (u0, u1) = cfg.validate()?;
    let hash = cfg.config_hash();
    let dir = out_dir.join(&hash);
    let summary_path = dir.join("summary.json");
    if summary_path.exists() && !force {
        let text = std::fs::read_to_string(&summary_path)?;
        let mut out: StudyOutput =
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        out.cache_hit = true;
        out.out_dir = dir;
        return Ok(out);
    }
    let geo = MAGeodesicToric::new(u0, u1);
    if let Some(b) = &cfg.bridge {
        if b.enabled && cfg.flavor == Flavor::Hilb {
            // fail fast on an uncertifiable bridge before the k fan-out
            crate::sections::bridge_weight(&geo, 0.5, b.c)?;
        }
    }

    let mut records: Vec<ResultRecord> = cfg
        .k_list
        .par_iter()
        .map(|&k| run_one_k(cfg, &geo, &hash, k))
        .collect();
    records.sort_by_key(|r| r.k);
    let rates = fit_study_rates(&records);

    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("records.csv"), records_csv(&records))?;
    std::fs::write(dir.join("diagnostics.csv"), diagnostics_csv(&records))?;
    std::fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(cfg).map_err(Error::from)?,
    )?;
    // per-k spectral measure exports
    for r in records.iter().filter(|r| r.status == "ok") {
        let spec = SectionSpaceSpec::new(r.k, cfg.flavor)?;
        let quad = cfg
            .quadrature
            .unwrap_or_else(|| QuadConfig::default_for(r.k));
        let g0 = gram_matrix(&spec, &weight_at_t(&geo, 0.0, &spec)?, &quad)?;
        let g1 = gram_matrix(&spec, &weight_at_t(&geo, 1.0, &spec)?, &quad)?;
        let gs = solve_geodesic(&g0, &g1)?;
        let mut buf = Vec::new();
        gs.spectral_measure()?.write_csv(&mut buf)?;
        std::fs::write(dir.join(format!("spectrum_k{}.csv", r.k)), buf)?;
    }
    let output = StudyOutput {
        config_hash: hash,
        records,
        rates,
        out_dir: dir.clone(),
        cache_hit: false,
    };
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&output).map_err(Error::from)?,
    )?;
    Ok(output)
}
