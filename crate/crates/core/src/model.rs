//! Semiclassical Hamiltonian `H = A + B` and polynomial observables.
//!
//! `A = −κ h ∂²` (κ = 1/2 by default) and `B = V(x)/h`, discretized with
//! either finite differences or the spectral derivative. Observables are
//! `O = Σ_m y_m(x) h^m ∂^m`.

use std::fmt;
use std::str::FromStr;

use crate::discretize::{
    build_diag, build_dk, build_dk_backward, build_laplacian, build_spectral_derivative, Grid,
    SchemeKind,
};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr};
use crate::linalg::{matmul, ComplexMatrix};

pub const DEFAULT_POTENTIAL: &str = "cos(x)";
pub const DEFAULT_OBSERVABLE: &str = "0: cos(x); 1: sin(x)";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub h: f64,
    pub kinetic_coeff: f64,
    pub potential: Expr,
    pub grid: Grid,
    pub scheme: SchemeKind,
}

impl ModelParams {
    /// Defaults: `κ = 1/2`, `V = cos x`.
    pub fn new(h: f64, grid: Grid, scheme: SchemeKind) -> Result<Self> {
        let p = Self {
            h,
            kinetic_coeff: 0.5,
            potential: parse_expr(DEFAULT_POTENTIAL)?,
            grid,
            scheme,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_potential(mut self, potential: Expr) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_kinetic_coeff(mut self, kinetic_coeff: f64) -> Result<Self> {
        self.kinetic_coeff = kinetic_coeff;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "h must lie in (0, 1], got {}",
                self.h
            )));
        }
        if !(self.kinetic_coeff > 0.0 && self.kinetic_coeff.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kinetic coefficient must be positive, got {}",
                self.kinetic_coeff
            )));
        }
        Ok(())
    }
}

fn second_derivative(g: &Grid, scheme: SchemeKind) -> ComplexMatrix {
    match scheme {
        SchemeKind::FiniteDifference => build_laplacian(g),
        SchemeKind::Spectral => build_spectral_derivative(g, 2),
    }
}

/// `−κ h D_2` (or the spectral second derivative).
pub fn build_a(p: &ModelParams) -> Result<ComplexMatrix> {
    p.validate()?;
    Ok(second_derivative(&p.grid, p.scheme).scale(-p.kinetic_coeff * p.h))
}

/// `diag(V(x_j)) / h`.
pub fn build_b(p: &ModelParams) -> Result<ComplexMatrix> {
    p.validate()?;
    Ok(build_diag(&p.grid, &p.potential)?.scale(1.0 / p.h))
}

pub fn build_h(p: &ModelParams) -> Result<ComplexMatrix> {
    let mut h = build_a(p)?;
    h += &build_b(p)?;
    Ok(h)
}

/// Which one-sided difference carries the odd factor of `D_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OddDifference {
    #[default]
    Forward,
    Backward,
}

impl FromStr for OddDifference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" => Ok(OddDifference::Forward),
            "backward" => Ok(OddDifference::Backward),
            other => Err(Error::Config(format!("unknown odd difference `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ObservableOptions {
    pub odd_difference: OddDifference,
    /// Replace `O` by `(O + O^†)/2`.
    pub symmetrize: bool,
}

/// `O = Σ_m y_m(x) h^m ∂^m`, one term per distinct order `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyObservableSpec {
    pub terms: Vec<(usize, Expr)>,
    pub h: f64,
}

impl PolyObservableSpec {
    pub fn new(mut terms: Vec<(usize, Expr)>, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "h must lie in (0, 1], got {h}"
            )));
        }
        terms.sort_by_key(|(m, _)| *m);
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter(
                "observable orders must be distinct".into(),
            ));
        }
        Ok(Self { terms, h })
    }

    /// Parses `"0: cos(x); 1: sin(x)"`.
    pub fn parse(text: &str, h: f64) -> Result<Self> {
        let mut terms = Vec::new();
        for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (m, y) = part.split_once(':').ok_or_else(|| {
                Error::Config(format!("observable term `{part}` is not `order: expr`"))
            })?;
            let m: usize = m
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad observable order `{}`", m.trim())))?;
            terms.push((m, parse_expr(y.trim())?));
        }
        if terms.is_empty() {
            return Err(Error::Config("observable has no terms".into()));
        }
        Self::new(terms, h)
    }

    /// `cos(x) + h sin(x) ∂`.
    pub fn default_for(h: f64) -> Result<Self> {
        Self::parse(DEFAULT_OBSERVABLE, h)
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|(m, _)| *m).max().unwrap_or(0)
    }
}

impl fmt::Display for PolyObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (m, y)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{m}: {y}")?;
        }
        Ok(())
    }
}

pub fn build_observable(
    spec: &PolyObservableSpec,
    g: &Grid,
    scheme: SchemeKind,
) -> Result<ComplexMatrix> {
    build_observable_with(spec, g, scheme, ObservableOptions::default())
}

pub fn build_observable_with(
    spec: &PolyObservableSpec,
    g: &Grid,
    scheme: SchemeKind,
    opts: ObservableOptions,
) -> Result<ComplexMatrix> {
    let n = g.n();
    let mut o = ComplexMatrix::zeros(n, n);
    for (m, y) in &spec.terms {
        let dm = match (scheme, opts.odd_difference) {
            (SchemeKind::Spectral, _) => build_spectral_derivative(g, *m),
            (SchemeKind::FiniteDifference, OddDifference::Forward) => build_dk(g, *m),
            (SchemeKind::FiniteDifference, OddDifference::Backward) => build_dk_backward(g, *m),
        };
        let term = matmul(&build_diag(g, y)?, &dm)?;
        o += &term.scale(spec.h.powi(*m as i32));
    }
    Ok(if opts.symmetrize {
        o.hermitian_part()
    } else {
        o
    })
}
