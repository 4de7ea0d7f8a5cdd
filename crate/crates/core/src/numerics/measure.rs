use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Pointwise density on `(0, 1)`, called as `density(ω, 1 - ω)` so that
/// formulas can use an exact complement near 1.
pub type DensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A point mass on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub loc: f64,
    pub mass: f64,
}

impl Atom {
    pub fn new(loc: f64, mass: f64) -> Self {
        Self { loc, mass }
    }
}

/// A finite measure on `[0, 1]`: a continuous part given by a pointwise
/// density plus finitely many atoms.
///
/// `breaks` lists interior points where the density is not smooth (grid
/// nodes of a piecewise-linear density, for instance). Quadrature splits
/// there so each panel sees a smooth integrand.
#[derive(Clone)]
pub struct AtomicMeasure {
    density: Option<DensityFn>,
    atoms: Vec<Atom>,
    breaks: Vec<f64>,
}

impl fmt::Debug for AtomicMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AtomicMeasure")
            .field("density", &self.density.as_ref().map(|_| "<fn>"))
            .field("atoms", &self.atoms)
            .field("breaks", &self.breaks.len())
            .finish()
    }
}

impl AtomicMeasure {
    /// Builds a measure, checking the atom invariants (masses nonnegative,
    /// locations in `[0, 1]` and distinct).
    pub fn new(density: Option<DensityFn>, atoms: Vec<Atom>) -> Result<Self> {
        let mut atoms = atoms;
        for a in &atoms {
            if !(0.0..=1.0).contains(&a.loc) {
                return Err(Error::InvalidParameter(format!(
                    "atom location {} outside [0, 1]",
                    a.loc
                )));
            }
            if !(a.mass >= 0.0) || !a.mass.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "atom mass {} must be finite and nonnegative",
                    a.mass
                )));
            }
        }
        atoms.sort_by(|a, b| a.loc.total_cmp(&b.loc));
        if atoms.windows(2).any(|w| w[0].loc == w[1].loc) {
            return Err(Error::InvalidParameter(
                "atom locations must be distinct".into(),
            ));
        }
        Ok(Self {
            density,
            atoms,
            breaks: Vec::new(),
        })
    }

    pub fn from_density(density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_density_pair(move |w, _| density(w))
    }

    pub fn from_density_pair(density: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            density: Some(Arc::new(density)),
            atoms: Vec::new(),
            breaks: Vec::new(),
        }
    }

    pub fn atoms_only(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(None, atoms)
    }

    /// Uniform probability measure on `[0, 1]`.
    pub fn lebesgue() -> Self {
        Self::from_density(|_| 1.0)
    }

    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|b| *b > 0.0 && *b < 1.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breaks = breaks;
        self
    }

    pub fn density(&self) -> Option<&DensityFn> {
        self.density.as_ref()
    }

    /// Density at `w`, zero when the measure has no continuous part.
    pub fn density_at(&self, w: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d(w, 1.0 - w))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn atom_mass_at(&self, loc: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| a.loc == loc)
            .map_or(0.0, |a| a.mass)
    }

    pub fn atom_total(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Integral of the density plus the sum of the atoms.
    pub fn total_mass(&self, tol: f64) -> Result<f64> {
        super::integrate(|_| 1.0, self, tol)
    }
}
