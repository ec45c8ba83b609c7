//! A numerical laboratory for geodesics of toric Kähler metrics on the
//! first Hirzebruch-style testbed `O(1)` over `CP^1`, and their quantized
//! counterparts: geodesics of Hermitian norms on spaces of holomorphic
//! sections.
//!
//! The infinite-dimensional side is driven by symplectic potentials
//! `u(x) = x log x + (1 - x) log(1 - x) + v(x)` on the moment interval
//! `[0, 1]`; linear interpolation of potentials is the geodesic of the
//! Mabuchi metric in this toric reduction. The finite-dimensional side is
//! the pencil of Gram matrices of monomial sections under the weights
//! `e^{-k f_t}`; its log-eigenvalues, divided by `k`, concentrate on the
//! pushforward of Lebesgue measure under the velocity `g = u_1 - u_0`.
//!
//! A quick tour:
//!
//! ```
//! use toric_spectra::toric::{MAGeodesicToric, SymplecticPotential};
//! use toric_spectra::sections::{gram_matrix, weight_at_t, Flavor, QuadConfig, SectionSpaceSpec};
//! use toric_spectra::pencil::solve_geodesic;
//!
//! // geodesic from the Fubini-Study potential to u_G + x^2/2
//! let geo = MAGeodesicToric::new(
//!     SymplecticPotential::guillemin(),
//!     SymplecticPotential::new(vec![0.0, 0.0, 0.5]).unwrap(),
//! );
//! let k = 32;
//! let spec = SectionSpaceSpec::new(k, Flavor::Adjoint).unwrap();
//! let quad = QuadConfig::default_for(k);
//! let g0 = gram_matrix(&spec, &weight_at_t(&geo, 0.0, &spec).unwrap(), &quad).unwrap();
//! let g1 = gram_matrix(&spec, &weight_at_t(&geo, 1.0, &spec).unwrap(), &quad).unwrap();
//! let gs = solve_geodesic(&g0, &g1).unwrap();
//!
//! // eigenvalues over k live inside the range of g = x^2/2 on [0, 1]
//! for l in &gs.lambdas {
//!     let v = l / k as f64;
//!     assert!(v >= -1e-9 && v <= 0.5 + 1e-9);
//! }
//!
//! // and their distribution approaches the pushforward of Lebesgue measure
//! let nu = gs.spectral_measure().unwrap();
//! let mu = geo.limit_measure(10_000).unwrap();
//! assert!(nu.wasserstein1(&mu) < 0.02);
//! ```

pub mod bergman;
pub mod error;
pub mod guide;
pub mod experiment;
pub mod measures;
pub mod pencil;
pub mod quad;
pub mod sections;
pub mod toeplitz;
pub mod toric;

pub use error::{Error, Result};
