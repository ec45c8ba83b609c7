//! Command-line front end: each subcommand reads a JSON config, runs one of
//! the library's pipelines and writes CSV/JSON artifacts into an output
//! directory. Exit codes: 0 success, 2 invalid configuration, 3 numerical
//! failure during computation.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use toric_spectra::bergman::{fs_metric, sup_deviation};
use toric_spectra::error::Error;
use toric_spectra::experiment::{run_study, ExperimentConfig, SymbolSpec};
use toric_spectra::pencil::solve_geodesic;
use toric_spectra::sections::{
    gram_matrix, weight_at_t, Flavor, QuadConfig, SectionSpaceSpec,
};
use toric_spectra::toeplitz::{toeplitz_operator, trace_defect};
use toric_spectra::toric::{
    legendre_transform, MAGeodesicToric, SymplecticPotential, EDGE_X,
};

#[derive(Parser)]
#[command(
    name = "toric-spectra",
    about = "Geodesics of toric Kähler potentials and of Hermitian norms on section spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IoArgs {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Recompute even if cached results exist
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a symplectic potential and its Legendre transform
    Legendre(IoArgs),
    /// Assemble the Gram matrix of a section space under a weight
    Gram(IoArgs),
    /// Solve the endpoint pencil and export its spectral measure
    Geodesic(IoArgs),
    /// Compress symbols to Toeplitz operators and report their diagnostics
    Toeplitz(IoArgs),
    /// Evaluate the Bergman kernel of the geodesic norm along the real slice
    Bergman(IoArgs),
    /// Run a full convergence study from a config file
    Study(IoArgs),
}

fn default_samples() -> usize {
    400
}

#[derive(Deserialize)]
struct LegendreConfig {
    #[serde(flatten)]
    u: SymplecticPotential,
    #[serde(default = "default_samples")]
    samples: usize,
}

#[derive(Deserialize)]
struct GramConfig {
    u: SymplecticPotential,
    k: u32,
    flavor: Flavor,
    #[serde(default)]
    quadrature: Option<QuadConfig>,
}

#[derive(Deserialize)]
struct PairConfig {
    u0: SymplecticPotential,
    u1: SymplecticPotential,
    k: u32,
    flavor: Flavor,
    #[serde(default)]
    quadrature: Option<QuadConfig>,
    #[serde(default)]
    t: Option<f64>,
    #[serde(default)]
    symbols: Vec<SymbolSpec>,
    #[serde(default = "default_samples")]
    samples: usize,
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config: {e}")))
}

fn revalidate(u: &SymplecticPotential) -> Result<SymplecticPotential, Error> {
    SymplecticPotential::new(u.poly_coeffs.clone())
        .map_err(|e| Error::Config(format!("invalid potential: {e}")))
}

struct Prepared {
    geo: MAGeodesicToric,
    spec: SectionSpaceSpec,
    quad: QuadConfig,
    t: f64,
    symbols: Vec<SymbolSpec>,
    samples: usize,
}

fn prepare(cfg: PairConfig) -> Result<Prepared, Error> {
    let u0 = revalidate(&cfg.u0)?;
    let u1 = revalidate(&cfg.u1)?;
    let spec = SectionSpaceSpec::new(cfg.k, cfg.flavor)
        .map_err(|e| Error::Config(e.to_string()))?;
    let t = cfg.t.unwrap_or(0.5);
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Config(format!("t = {t} outside [0,1]")));
    }
    Ok(Prepared {
        geo: MAGeodesicToric::new(u0, u1),
        quad: cfg.quadrature.unwrap_or_else(|| QuadConfig::default_for(cfg.k)),
        spec,
        t,
        symbols: cfg.symbols,
        samples: cfg.samples.max(2),
    })
}

fn cmd_legendre(io: &IoArgs) -> Result<(), Error> {
    let cfg: LegendreConfig = load_json(&io.config)?;
    let u = revalidate(&cfg.u)?;
    let n = cfg.samples.max(2);
    let (s_lo, s_hi) = u.s_range(EDGE_X);
    let mut out = String::from("s,f,x_star,f_second\n");
    for i in 0..=n {
        let s = s_lo + (s_hi - s_lo) * i as f64 / n as f64;
        let p = legendre_transform(&u, s)?;
        let fpp = 1.0 / u.second_deriv(p.x_star);
        out.push_str(&format!("{s},{},{},{fpp}\n", p.f, p.x_star));
    }
    std::fs::create_dir_all(&io.out)?;
    std::fs::write(io.out.join("legendre.csv"), out)?;
    Ok(())
}

fn cmd_gram(io: &IoArgs) -> Result<(), Error> {
    let cfg: GramConfig = load_json(&io.config)?;
    let u = revalidate(&cfg.u)?;
    let spec = SectionSpaceSpec::new(cfg.k, cfg.flavor)
        .map_err(|e| Error::Config(e.to_string()))?;
    let quad = cfg.quadrature.unwrap_or_else(|| QuadConfig::default_for(cfg.k));
    let geo = MAGeodesicToric::new(u.clone(), u);
    let w = weight_at_t(&geo, 0.0, &spec)?;
    let g = gram_matrix(&spec, &w, &quad)?;
    std::fs::create_dir_all(&io.out)?;
    std::fs::write(
        io.out.join("gram.json"),
        serde_json::to_string_pretty(&g.to_json()).map_err(Error::from)?,
    )?;
    let mut csv = String::from("j,log_diag\n");
    for (j, v) in g.log_diag.iter().enumerate() {
        csv.push_str(&format!("{j},{v}\n"));
    }
    std::fs::write(io.out.join("log_diag.csv"), csv)?;
    Ok(())
}

fn cmd_geodesic(io: &IoArgs) -> Result<(), Error> {
    let p = prepare(load_json(&io.config)?)?;
    let g0 = gram_matrix(&p.spec, &weight_at_t(&p.geo, 0.0, &p.spec)?, &p.quad)?;
    let g1 = gram_matrix(&p.spec, &weight_at_t(&p.geo, 1.0, &p.spec)?, &p.quad)?;
    let gs = solve_geodesic(&g0, &g1)?;
    std::fs::create_dir_all(&io.out)?;
    let mut csv = String::from("k,j,lambda_over_k\n");
    for (j, l) in gs.lambdas.iter().enumerate() {
        csv.push_str(&format!("{},{j},{}\n", p.spec.k, l / p.spec.k as f64));
    }
    std::fs::write(io.out.join("spectrum.csv"), csv)?;
    let mut buf = Vec::new();
    gs.spectral_measure()?.write_csv(&mut buf)?;
    std::fs::write(io.out.join("spectral_measure.csv"), buf)?;
    std::fs::write(
        io.out.join("geodesic.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "k": p.spec.k,
            "flavor": p.spec.flavor,
            "lambdas": gs.lambdas,
            "center_shift": gs.center_shift,
            "z": gs.z_functional(),
            "distance": gs.geodesic_distance(),
        }))
        .map_err(Error::from)?,
    )?;
    Ok(())
}

fn cmd_toeplitz(io: &IoArgs) -> Result<(), Error> {
    let p = prepare(load_json(&io.config)?)?;
    if p.symbols.is_empty() {
        return Err(Error::Config("toeplitz needs at least one symbol".into()));
    }
    let w = weight_at_t(&p.geo, p.t, &p.spec)?;
    let g = gram_matrix(&p.spec, &w, &p.quad)?;
    std::fs::create_dir_all(&io.out)?;
    let mut csv = String::from("k,diagnostic_name,value\n");
    let mut dump = Vec::new();
    for s in &p.symbols {
        let sym = s.build();
        let op = toeplitz_operator(&g, &w, &sym, &p.quad)?;
        let eigs = op.eigenvalues();
        csv.push_str(&format!(
            "{},trace_defect[{}],{}\n",
            p.spec.k,
            sym.name,
            trace_defect(&op, &sym)
        ));
        csv.push_str(&format!(
            "{},eig_min[{}],{}\n{},eig_max[{}],{}\n",
            p.spec.k,
            sym.name,
            eigs[0],
            p.spec.k,
            sym.name,
            eigs[eigs.len() - 1]
        ));
        dump.push(serde_json::json!({
            "symbol": sym.name,
            "frame_tag": op.frame_tag,
            "eigenvalues": eigs,
            "matrix": op.matrix.as_slice().to_vec(),
        }));
    }
    std::fs::write(io.out.join("diagnostics.csv"), csv)?;
    std::fs::write(
        io.out.join("operators.json"),
        serde_json::to_string_pretty(&dump).map_err(Error::from)?,
    )?;
    Ok(())
}

fn cmd_bergman(io: &IoArgs) -> Result<(), Error> {
    let p = prepare(load_json(&io.config)?)?;
    let g0 = gram_matrix(&p.spec, &weight_at_t(&p.geo, 0.0, &p.spec)?, &p.quad)?;
    let g1 = gram_matrix(&p.spec, &weight_at_t(&p.geo, 1.0, &p.spec)?, &p.quad)?;
    let gs = solve_geodesic(&g0, &g1)?;
    let f_t = p.geo.potential_at(p.t)?;
    let (s_lo, s_hi) = f_t.s_range(EDGE_X);
    let mut csv = String::from("s,fs_metric,f_t\n");
    for i in 0..=p.samples {
        let s = s_lo + (s_hi - s_lo) * i as f64 / p.samples as f64;
        csv.push_str(&format!(
            "{s},{},{}\n",
            fs_metric(&gs, &g0, p.t, s)?,
            f_t.value(s)?
        ));
    }
    let sup = sup_deviation(&gs, &g0, &p.geo, p.t)?;
    std::fs::create_dir_all(&io.out)?;
    std::fs::write(io.out.join("bergman.csv"), csv)?;
    let k = p.spec.k as f64;
    std::fs::write(
        io.out.join("bergman.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "k": p.spec.k,
            "t": p.t,
            "sup_deviation": sup,
            "sup_deviation_times_k_over_logk": sup * k / k.ln(),
        }))
        .map_err(Error::from)?,
    )?;
    Ok(())
}

fn cmd_study(io: &IoArgs) -> Result<(), Error> {
    let cfg: ExperimentConfig = load_json(&io.config)?;
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let out = run_study(&cfg, &io.out, io.force)?;
    eprintln!(
        "study {} -> {} ({} rows{})",
        out.config_hash,
        out.out_dir.display(),
        out.records.len(),
        if out.cache_hit { ", cached" } else { "" }
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Legendre(io) => cmd_legendre(io),
        Command::Gram(io) => cmd_gram(io),
        Command::Geodesic(io) => cmd_geodesic(io),
        Command::Toeplitz(io) => cmd_toeplitz(io),
        Command::Bergman(io) => cmd_bergman(io),
        Command::Study(io) => cmd_study(io),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(3)
        }
    }
}
