//! Toeplitz operators: multiplication by a symbol compressed to the
//! holomorphic sections.
//!
//! For a symbol `xi` (a function of the moment coordinate `x`) the operator
//! `T_xi` is the quadratic form `<T_xi v, w> = int xi v w e^{-W}` viewed in an
//! orthonormal frame of the Gram inner product. Its eigenvalues are pinched
//! by the range of the symbol, its normalized trace approaches the average of
//! the symbol against the limit distribution of the moment map, and products
//! of operators track products of symbols up to `O(1/k)`.

use crate::error::{Error, Result};
use crate::measures::ProbabilityMeasure;
use crate::quad::adaptive_simpson;
use crate::sections::{node_base, GramMatrix, QuadConfig, SectionSpaceSpec, Weight};
use crate::toric::MAGeodesicToric;
use nalgebra::DMatrix;
use std::sync::Arc;

/// A real symbol evaluated on the node data of the reduced integral: it sees
/// both the log coordinate `s` and the moment coordinate `x = x(s)`.
#[derive(Clone)]
pub struct Symbol {
    pub name: String,
    pub f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol").field("name", &self.name).finish()
    }
}

impl Symbol {
    /// Symbol depending on the moment coordinate only.
    pub fn of_moment(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Symbol {
            name: name.into(),
            f: Arc::new(move |_s, x| f(x)),
        }
    }

    pub fn constant(c: f64) -> Self {
        Symbol {
            name: format!("const({c})"),
            f: Arc::new(move |_s, _x| c),
        }
    }

    /// The moment coordinate itself.
    pub fn coordinate() -> Self {
        Symbol::of_moment("x", |x| x)
    }

    /// Pointwise product of two symbols.
    pub fn product(&self, other: &Symbol) -> Symbol {
        let a = self.f.clone();
        let b = other.f.clone();
        Symbol {
            name: format!("{}*{}", self.name, other.name),
            f: Arc::new(move |s, x| a(s, x) * b(s, x)),
        }
    }
}

/// A compressed multiplication operator in the orthonormal frame of its Gram
/// matrix. `frame_tag` records which Gram convention the frame came from so
/// that operators from different frames are never mixed silently.
#[derive(Debug, Clone)]
pub struct ToeplitzOperator {
    pub spec: SectionSpaceSpec,
    pub symbol_name: String,
    pub matrix: DMatrix<f64>,
    pub frame_tag: String,
}

impl ToeplitzOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ascending eigenvalues of the (symmetric) operator matrix.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = 0.5 * (&self.matrix + &self.matrix.transpose());
        let mut e: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Spectral norm of the symmetric part.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(0.0f64, |m, e| m.max(e.abs()))
    }

    /// Equal-weight measure of `eigenvalue / normalizer`.
    pub fn spectral_measure(&self, normalizer: f64) -> Result<ProbabilityMeasure> {
        let atoms: Vec<f64> = self
            .eigenvalues()
            .into_iter()
            .map(|e| e / normalizer)
            .collect();
        ProbabilityMeasure::equal_weights(&atoms)
    }
}

/// Assembles `T` from per-node symbol values; shared by the public
/// constructors.
fn assemble(
    gram: &GramMatrix,
    weight: &Weight,
    quad: &QuadConfig,
    name: &str,
    value_at: impl Fn(f64, f64) -> f64,
) -> Result<ToeplitzOperator> {
    let d = gram.dim();
    let off = gram.spec.flavor.exponent_offset();
    let nb = node_base(gram.spec.flavor, weight, quad)?;
    let vals: Vec<f64> = nb
        .s
        .iter()
        .zip(&nb.x)
        .map(|(s, x)| value_at(*s, *x))
        .collect();

    // angular factors, as in the Gram assembly
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

    // moment matrix relative to the Gram diagonal scale: M_hat = D^-1 M D^-1
    let mut m_hat = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let p = 0.5 * (i as f64 + j as f64) + off;
            let shift = 0.5 * (gram.log_diag[i] + gram.log_diag[j]);
            let mut acc = 0.0;
            for m in 0..nb.s.len() {
                let e = p * nb.s[m] + nb.base[m] - shift;
                if e > 700.0 {
                    return Err(Error::Overflow(format!(
                        "Toeplitz exponent {e} at entry ({i},{j})"
                    )));
                }
                let fac = match &angular {
                    Some(f) => f[j - i][m],
                    None => {
                        if i != j {
                            continue;
                        }
                        1.0
                    }
                };
                acc += vals[m] * fac * e.exp();
            }
            m_hat[(i, j)] = acc;
            m_hat[(j, i)] = acc;
        }
    }

    // frame change: T = L^-1 M_hat L^-T with S = L L^T the scaled Gram factor
    let matrix = if gram.is_diagonal() {
        m_hat
    } else {
        let l = nalgebra::Cholesky::new(gram.scaled.clone())
            .ok_or_else(|| Error::Numerical("scaled Gram factor is not PD".into()))?
            .l();
        let tmp = l
            .solve_lower_triangular(&m_hat)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let t = l
            .solve_lower_triangular(&tmp.transpose())
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        0.5 * (&t + &t.transpose())
    };

    Ok(ToeplitzOperator {
        spec: gram.spec.clone(),
        symbol_name: name.to_string(),
        matrix,
        frame_tag: gram.convention_tag.clone(),
    })
}

/// The Toeplitz operator of a symbol on a Gram inner product. The `weight`
/// and `quad` must be the ones the Gram matrix was assembled with.
pub fn toeplitz_operator(
    gram: &GramMatrix,
    weight: &Weight,
    symbol: &Symbol,
    quad: &QuadConfig,
) -> Result<ToeplitzOperator> {
    quad.validate()?;
    let f = symbol.f.clone();
    assemble(gram, weight, quad, &symbol.name, move |s, x| f(s, x))
}

/// The derivative-of-norm operator `G_t^{-1} dG_t/dt` at time `t`, in the
/// orthonormal frame of `G_t`. Its symbol is the (negated) `t`-derivative of
/// the weight exponent: `k g(x_t)` for a plain weight, and
/// `(k - a) g(x_t) - a (f_1 - f_0 - c (1 - 2t))` for the bridge weight.
///
/// In the adjoint flavor the weight exponent is the whole `t`-dependence, so
/// the operator is exact; in the Hilb flavor the volume density carries an
/// extra `O(1)` `t`-derivative that is deliberately not included.
pub fn derivative_toeplitz(
    geo: &MAGeodesicToric,
    t: f64,
    spec: &SectionSpaceSpec,
    quad: &QuadConfig,
) -> Result<(ToeplitzOperator, GramMatrix)> {
    quad.validate()?;
    let weight = crate::sections::weight_at_t(geo, t, spec)?;
    let gram = crate::sections::gram_matrix(spec, &weight, quad)?;
    let k = spec.k as f64;
    let op = match &spec.bridge {
        None => {
            let geo = geo.clone();
            assemble(&gram, &weight, quad, "k*g(x_t)", move |_s, x| k * geo.g(x))
        }
        Some(bp) => {
            let a = bp.a;
            let c = bp.kappa_c;
            let f0 = geo.potential_at(0.0)?;
            let f1 = geo.potential_at(1.0)?;
            let geo = geo.clone();
            assemble(&gram, &weight, quad, "bridge-tangent", move |s, x| {
                let chi_dot =
                    f1.value(s).unwrap_or(f64::NAN) - f0.value(s).unwrap_or(f64::NAN)
                        - c * (1.0 - 2.0 * t);
                (k - a) * geo.g(x) - a * chi_dot
            })
        }
    }?;
    Ok((op, gram))
}

/// `| tr(T)/d - int_0^1 xi(x) dx |`: the defect of the normalized trace
/// against the average of the symbol under the limit distribution of the
/// moment map (Lebesgue on the polytope). Decays like `1/k` for smooth
/// symbols. Only meaningful for symbols of the moment coordinate.
pub fn trace_defect(op: &ToeplitzOperator, symbol: &Symbol) -> f64 {
    let f = symbol.f.clone();
    let mean = adaptive_simpson(&|x| f(0.0, x), 0.0, 1.0, 1e-12);
    (op.trace() / op.dim() as f64 - mean).abs()
}

/// Operator norm of `sym(T_a T_b) - T_ab`, the defect of the composition law.
/// All three operators must live in the same frame.
pub fn composition_defect(
    a: &ToeplitzOperator,
    b: &ToeplitzOperator,
    ab: &ToeplitzOperator,
) -> Result<f64> {
    if a.frame_tag != b.frame_tag || a.frame_tag != ab.frame_tag {
        return Err(Error::Contract(format!(
            "mixed frames: {} / {} / {}",
            a.frame_tag, b.frame_tag, ab.frame_tag
        )));
    }
    let prod = &a.matrix * &b.matrix;
    let sym = 0.5 * (&prod + &prod.transpose());
    let diff = &sym - &ab.matrix;
    let mut e: Vec<f64> = diff.symmetric_eigen().eigenvalues.iter().cloned().collect();
    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(e.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Largest movement of a matched (ascending) eigenvalue between a base
/// operator and one with a perturbed symbol. By the Weyl inequality this is
/// bounded by the sup-norm of the symbol perturbation.
pub fn perturbation_shift(base: &ToeplitzOperator, perturbed: &ToeplitzOperator) -> Result<f64> {
    if base.frame_tag != perturbed.frame_tag || base.dim() != perturbed.dim() {
        return Err(Error::Contract(format!(
            "operators live in different frames: {} ({}d) vs {} ({}d)",
            base.frame_tag,
            base.dim(),
            perturbed.frame_tag,
            perturbed.dim()
        )));
    }
    Ok(base
        .eigenvalues()
        .iter()
        .zip(&perturbed.eigenvalues())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
