//! Atomic probability measures on the real line.
//!
//! Both the finite spectral measures and the computable approximations to
//! their limits are finite atom collections, and in one dimension the
//! Wasserstein-1 distance between atomic measures is exact (it is the area
//! between the two CDF staircases). That makes atoms the right common
//! representation for every weak-convergence diagnostic in the crate.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Atoms closer than this are merged into one.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMeasure {
    /// Sorted `(location, weight)` pairs with positive weights summing to 1.
    atoms: Vec<(f64, f64)>,
}

impl ProbabilityMeasure {
    /// Builds a measure from raw atoms: sorts, merges near-duplicates and
    /// checks normalization.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Precondition("measure needs at least one atom".into()));
        }
        for (loc, w) in &atoms {
            if !loc.is_finite() || !w.is_finite() || *w <= 0.0 {
                return Err(Error::Precondition(format!(
                    "invalid atom ({loc}, {w})"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (loc, w) in atoms {
            match merged.last_mut() {
                Some(last) if (loc - last.0).abs() <= MERGE_TOL => last.1 += w,
                _ => merged.push((loc, w)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "weights sum to {total}, not 1"
            )));
        }
        // remove the residual rounding drift so downstream sums are exact
        for a in &mut merged {
            a.1 /= total;
        }
        Ok(ProbabilityMeasure { atoms: merged })
    }

    pub fn dirac(loc: f64) -> Self {
        ProbabilityMeasure {
            atoms: vec![(loc, 1.0)],
        }
    }

    /// Equal-weight atoms, e.g. a spectral measure.
    pub fn equal_weights(locations: &[f64]) -> Result<Self> {
        let w = 1.0 / locations.len() as f64;
        Self::from_atoms(locations.iter().map(|l| (*l, w)).collect())
    }

    /// Midpoint discretization of the uniform measure on `[a, b]`.
    pub fn uniform_grid(a: f64, b: f64, n: usize) -> Result<Self> {
        let w = 1.0 / n as f64;
        Self::from_atoms(
            (0..n)
                .map(|i| (a + (b - a) * (i as f64 + 0.5) * w, w))
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `p`-th raw moment, `p <= 8` (overflow guard).
    pub fn moment(&self, p: u32) -> Result<f64> {
        if p == 0 || p > 8 {
            return Err(Error::Domain(format!("moment order {p} outside 1..=8")));
        }
        Ok(self
            .atoms
            .iter()
            .map(|(loc, w)| w * loc.powi(p as i32))
            .sum())
    }

    /// Expectation of an arbitrary test function.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|(loc, w)| w * f(*loc)).sum()
    }

    /// Exact 1D Wasserstein-1 distance: `int |F_1 - F_2|` over the merged
    /// breakpoint partition.
    pub fn wasserstein1(&self, other: &ProbabilityMeasure) -> f64 {
        let mut i = 0;
        let mut j = 0;
        let mut f1 = 0.0f64;
        let mut f2 = 0.0f64;
        let mut prev = f64::NAN;
        let mut total = 0.0;
        while i < self.atoms.len() || j < other.atoms.len() {
            let x = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(a), Some(b)) => a.0.min(b.0),
                (Some(a), None) => a.0,
                (None, Some(b)) => b.0,
                (None, None) => break,
            };
            if prev.is_finite() {
                total += (f1 - f2).abs() * (x - prev);
            }
            while i < self.atoms.len() && self.atoms[i].0 <= x {
                f1 += self.atoms[i].1;
                i += 1;
            }
            while j < other.atoms.len() && other.atoms[j].0 <= x {
                f2 += other.atoms[j].1;
                j += 1;
            }
            prev = x;
        }
        total
    }

    /// Kolmogorov-Smirnov distance: sup of the CDF gap at merged breakpoints.
    pub fn ks_distance(&self, other: &ProbabilityMeasure) -> f64 {
        let mut i = 0;
        let mut j = 0;
        let mut f1 = 0.0;
        let mut f2 = 0.0;
        let mut best: f64 = 0.0;
        while i < self.atoms.len() || j < other.atoms.len() {
            let x = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(a), Some(b)) => a.0.min(b.0),
                (Some(a), None) => a.0,
                (None, Some(b)) => b.0,
                (None, None) => break,
            };
            while i < self.atoms.len() && self.atoms[i].0 <= x {
                f1 += self.atoms[i].1;
                i += 1;
            }
            while j < other.atoms.len() && other.atoms[j].0 <= x {
                f2 += other.atoms[j].1;
                j += 1;
            }
            best = best.max((f1 - f2).abs());
        }
        best.min(1.0)
    }

    /// Image under `x -> a x + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        Self::from_atoms(self.atoms.iter().map(|(l, w)| (a * l + b, *w)).collect())
    }

    /// Writes `(atom, weight)` CSV rows sorted by atom.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "atom,weight")?;
        for (loc, w) in &self.atoms {
            writeln!(out, "{loc},{w}")?;
        }
        Ok(())
    }
}
