//! Min-plus semiring arithmetic and square tropical matrices.
//!
//! Entries live in `R ∪ {+∞}` with `⊕ = min` and `⊙ = +`. A matrix `C`
//! describes the weighted digraph polyhedron
//! `wdp(C) = { x : x_i - x_j <= c_ij for all i != j }` in tropical affine
//! space; entry `(i, j)` is the weight of the edge `j -> i`.

use std::fmt;
use std::ops::{Add, Mul};

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dag;

/// Default absolute tolerance for tightness and containment checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const INF: f64 = f64::INFINITY;

/// An element of the min-plus semiring. Never NaN, never `-∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Tropical(f64);

impl Tropical {
    /// Additive identity.
    pub const INFINITY: Tropical = Tropical(INF);
    /// Multiplicative identity.
    pub const ONE: Tropical = Tropical(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value == f64::NEG_INFINITY {
            return Err(Error::InvalidValue);
        }
        Ok(Tropical(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Add for Tropical {
    type Output = Tropical;

    fn add(self, rhs: Tropical) -> Tropical {
        Tropical(self.0.min(rhs.0))
    }
}

impl Mul for Tropical {
    type Output = Tropical;

    // -inf is excluded by construction, so inf + x never yields NaN.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Tropical) -> Tropical {
        Tropical(self.0 + rhs.0)
    }
}

impl fmt::Display for Tropical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            f.write_str("inf")
        }
    }
}

/// A point of tropical affine space, stored with its first coordinate
/// normalized to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalPoint {
    coords: Vec<f64>,
}

impl TropicalPoint {
    /// Normalizes `raw` by subtracting its first coordinate.
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePoint);
        }
        let base = raw[0];
        Ok(TropicalPoint {
            coords: raw.iter().map(|v| v - base).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn diff(&self, i: usize, j: usize) -> f64 {
        self.coords[i] - self.coords[j]
    }

    /// Relabels coordinates: node `v` moves to position `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> TropicalPoint {
        let mut raw = vec![0.0; self.coords.len()];
        for (v, &pos) in perm.iter().enumerate() {
            raw[pos] = self.coords[v];
        }
        TropicalPoint::new(&raw).expect("permutation of a finite point")
    }

    /// Max-norm distance between the normalized representatives.
    pub fn distance(&self, other: &TropicalPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A `d × d` matrix over the min-plus semiring, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TropicalMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl TropicalMatrix {
    /// Zero diagonal, `+∞` elsewhere.
    pub fn identity(d: usize) -> Self {
        let mut entries = vec![INF; d * d];
        for i in 0..d {
            entries[i * d + i] = 0.0;
        }
        TropicalMatrix { d, entries }
    }

    /// Every entry `+∞`, including the diagonal.
    pub fn infinite(d: usize) -> Self {
        TropicalMatrix {
            d,
            entries: vec![INF; d * d],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let mut entries = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for &v in row {
                Tropical::new(v)?;
                entries.push(v);
            }
        }
        Ok(TropicalMatrix { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(!value.is_nan() && value != f64::NEG_INFINITY);
        self.entries[i * self.d + j] = value;
    }

    pub fn entry(&self, i: usize, j: usize) -> Tropical {
        Tropical(self.get(i, j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.d).map(|r| r.to_vec()).collect()
    }

    /// Off-diagonal pairs `(i, j)` with a finite entry.
    pub fn finite_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.d;
        (0..d)
            .flat_map(move |i| (0..d).map(move |j| (i, j)))
            .filter(move |&(i, j)| i != j && self.get(i, j).is_finite())
    }

    /// Min-plus product `self ⊙ other`.
    pub fn mul(&self, other: &TropicalMatrix) -> Result<TropicalMatrix> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        let d = self.d;
        let mut out = TropicalMatrix::infinite(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == INF {
                    continue;
                }
                for j in 0..d {
                    let v = a + other.get(k, j);
                    if v < out.get(i, j) {
                        out.set(i, j, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Entrywise min, i.e. tropical sum.
    pub fn oplus(&self, other: &TropicalMatrix) -> Result<TropicalMatrix> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: other.d,
            });
        }
        Ok(TropicalMatrix {
            d: self.d,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.min(*b))
                .collect(),
        })
    }

    /// Kleene star `I ⊕ C ⊕ C² ⊕ …` with the default cycle tolerance.
    pub fn kleene_star(&self) -> Result<TropicalMatrix> {
        self.kleene_star_with_tol(DEFAULT_TOL)
    }

    /// Kleene star computed as all-pairs shortest paths.
    ///
    /// A diagonal entry below `-tol` after closure means a negative cycle.
    /// Diagonal entries in `[-tol, 0]` are float noise on zero-weight cycles
    /// and are reset to zero.
    pub fn kleene_star_with_tol(&self, tol: f64) -> Result<TropicalMatrix> {
        let d = self.d;
        let mut m = self.clone();
        for i in 0..d {
            if m.get(i, i) > 0.0 {
                m.set(i, i, 0.0);
            }
        }
        for k in 0..d {
            for i in 0..d {
                let ik = m.get(i, k);
                if ik == INF {
                    continue;
                }
                for j in 0..d {
                    let v = ik + m.get(k, j);
                    if v < m.get(i, j) {
                        m.set(i, j, v);
                    }
                }
            }
        }
        for i in 0..d {
            if m.get(i, i) < -tol {
                return Err(Error::NegativeCycle { node: i });
            }
            m.set(i, i, 0.0);
        }
        Ok(m)
    }

    /// `min_j (c_ij + z_j)` without normalization.
    pub fn mat_vec_raw(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: z.len(),
            });
        }
        (0..self.d)
            .map(|i| {
                let v = (0..self.d)
                    .map(|j| self.get(i, j) + z[j])
                    .fold(INF, f64::min);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InfiniteCoordinate { row: i })
                }
            })
            .collect()
    }

    /// Min-plus matrix-vector product, normalized as a tropical point.
    pub fn mat_vec(&self, z: &[f64]) -> Result<TropicalPoint> {
        TropicalPoint::new(&self.mat_vec_raw(z)?)
    }

    /// Membership in `wdp(C)`: `p_i - p_j <= c_ij + tol` for all finite `c_ij`.
    pub fn wdp_contains(&self, p: &TropicalPoint, tol: f64) -> bool {
        p.dim() == self.d
            && self
                .finite_pairs()
                .all(|(i, j)| p.diff(i, j) <= self.get(i, j) + tol)
    }

    /// Keeps `c_ij` only where `j -> i` is an edge of `dag`; zero diagonal.
    pub fn restrict_to_dag(&self, dag: &Dag) -> Result<TropicalMatrix> {
        if dag.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: dag.dim(),
            });
        }
        let mut out = TropicalMatrix::identity(self.d);
        for &(from, to) in dag.edges() {
            out.set(to, from, self.get(to, from));
        }
        Ok(out)
    }

    /// Relabels nodes: node `v` moves to position `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> TropicalMatrix {
        let mut out = TropicalMatrix::infinite(self.d);
        for i in 0..self.d {
            for j in 0..self.d {
                out.set(perm[i], perm[j], self.get(i, j));
            }
        }
        out
    }

    /// Exact entrywise equality treating `+∞ == +∞`.
    pub fn approx_eq(&self, other: &TropicalMatrix, tol: f64) -> bool {
        self.d == other.d
            && self.entries.iter().zip(&other.entries).all(|(a, b)| {
                if a.is_finite() && b.is_finite() {
                    (a - b).abs() <= tol
                } else {
                    a == b
                }
            })
    }
}

impl fmt::Display for TropicalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.d {
            for j in 0..self.d {
                if j > 0 {
                    f.write_str(" ")?;
                }
                let v = self.get(i, j);
                if v.is_finite() {
                    write!(f, "{v:>8.4}")?;
                } else {
                    write!(f, "{:>8}", "inf")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonEntry {
    Finite(f64),
    Marker(String),
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    d: usize,
    entries: Vec<Vec<JsonEntry>>,
}

impl Serialize for TropicalMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = (0..self.d)
            .map(|i| {
                (0..self.d)
                    .map(|j| {
                        let v = self.get(i, j);
                        if v.is_finite() {
                            JsonEntry::Finite(v)
                        } else {
                            JsonEntry::Marker("inf".to_owned())
                        }
                    })
                    .collect()
            })
            .collect();
        MatrixJson { d: self.d, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TropicalMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        if raw.entries.len() != raw.d {
            return Err(de::Error::custom(format!(
                "expected {} rows, got {}",
                raw.d,
                raw.entries.len()
            )));
        }
        let rows = raw
            .entries
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|e| match e {
                        JsonEntry::Finite(v) => Ok(v),
                        JsonEntry::Marker(s) if s == "inf" => Ok(INF),
                        JsonEntry::Marker(s) => {
                            Err(de::Error::custom(format!("unexpected entry {s:?}")))
                        }
                    })
                    .collect::<std::result::Result<Vec<f64>, D::Error>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        TropicalMatrix::from_rows(&rows).map_err(de::Error::custom)
    }
}
