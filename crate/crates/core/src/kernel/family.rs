use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::grid::Sampled;
use crate::kernel::ladder::EpsilonLadder;
use crate::kernel::nonlinearity::Nonlinearity;

/// How a family came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Imbedded,
    Solved,
    Derived,
}

/// One grid function per ladder value; the finite stand-in for a class
/// representative `(u_ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeFamily<G> {
    ladder: EpsilonLadder,
    members: Vec<G>,
    provenance: Provenance,
}

impl<G: Sampled> RepresentativeFamily<G> {
    pub fn new(ladder: EpsilonLadder, members: Vec<G>, provenance: Provenance) -> Result<Self> {
        if members.len() != ladder.len() {
            return Err(Error::Geometry(format!(
                "{} members for a ladder of {} values",
                members.len(),
                ladder.len()
            )));
        }
        // Extents agree up to less than one spacing: a time horizon that is not
        // a multiple of h is covered by the next level.
        let reference = members[0].extent();
        for (k, m) in members.iter().enumerate().skip(1) {
            let e = m.extent();
            let tol = m.spacing().max(members[0].spacing()) * (1.0 - 1e-6);
            let close = e.len() == reference.len()
                && e.iter()
                    .zip(&reference)
                    .all(|(a, b)| (a.0 - b.0).abs() < tol && (a.1 - b.1).abs() < tol);
            if !close {
                return Err(Error::Geometry(format!(
                    "member {k} covers {e:?}, member 0 covers {reference:?}"
                )));
            }
        }
        Ok(Self {
            ladder,
            members,
            provenance,
        })
    }

    /// Builds the members in parallel; a failing member reports its ladder index.
    pub fn try_build(
        ladder: &EpsilonLadder,
        provenance: Provenance,
        build: impl Fn(usize, f64) -> Result<G> + Sync,
    ) -> Result<Self> {
        let members = ladder
            .values()
            .par_iter()
            .enumerate()
            .map(|(k, &eps)| build(k, eps).map_err(|e| Error::member(k, eps, e)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ladder.clone(), members, provenance)
    }

    pub fn ladder(&self) -> &EpsilonLadder {
        &self.ladder
    }

    pub fn members(&self) -> &[G] {
        &self.members
    }

    pub fn member(&self, k: usize) -> &G {
        &self.members[k]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &G)> {
        self.ladder.iter().zip(&self.members)
    }

    pub fn into_members(self) -> Vec<G> {
        self.members
    }

    /// Member-wise `f ∘ u_ε`.
    pub fn pointwise_apply(&self, f: &Nonlinearity) -> Self {
        let f = *f;
        self.map_members(|m| m.map(|v| f.eval(v)))
    }

    pub fn map_members(&self, f: impl Fn(&G) -> G + Sync + Send) -> Self {
        Self {
            ladder: self.ladder.clone(),
            members: self.members.par_iter().map(f).collect(),
            provenance: Provenance::Derived,
        }
    }

    pub fn zip_members(
        &self,
        other: &Self,
        f: impl Fn(G::Scalar, G::Scalar) -> G::Scalar + Sync + Send,
    ) -> Result<Self> {
        if self.ladder != other.ladder {
            return Err(Error::Geometry("families live on different ladders".into()));
        }
        let members = self
            .members
            .par_iter()
            .zip(&other.members)
            .map(|(a, b)| a.zip_with(b, &f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ladder: self.ladder.clone(),
            members,
            provenance: Provenance::Derived,
        })
    }

    pub fn pointwise_product(&self, other: &Self) -> Result<Self> {
        self.zip_members(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_members(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_members(other, |a, b| a - b)
    }

    pub fn scale(&self, c: G::Scalar) -> Self {
        self.map_members(|m| m.map(|v| c * v))
    }
}

/// Ladder-indexed complex numbers: a representative of a generalized number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedScalar {
    ladder: EpsilonLadder,
    values: Vec<Complex64>,
}

impl GeneralizedScalar {
    pub fn new(ladder: EpsilonLadder, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != ladder.len() {
            return Err(Error::Geometry(format!(
                "{} values for a ladder of {} entries",
                values.len(),
                ladder.len()
            )));
        }
        Ok(Self { ladder, values })
    }

    pub fn from_real(ladder: EpsilonLadder, values: &[f64]) -> Result<Self> {
        Self::new(
            ladder,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn ladder(&self) -> &EpsilonLadder {
        &self.ladder
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.ladder.iter().zip(self.values.iter().copied())
    }
}
