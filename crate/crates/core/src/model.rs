//! Max-linear Bayesian networks in the min-plus domain.
//!
//! A model is a weighted DAG with weight matrix `C` (edge `j -> i` carries
//! `c_ij`). Observations are `x = C* ⊙ z` for i.i.d. innovations `z`, so
//! every observation lies in `wdp(C*) = wdp(C)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Frechet, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytrope::{Cell, Sample};
use crate::tropical::{TropicalMatrix, TropicalPoint, DEFAULT_TOL};

/// A directed edge `(from, to)`; as a cell label it is the root-polytope
/// vertex `e_{from,to}` for the tight constraint `x_to - x_from = c_{to,from}`.
pub type Edge = (usize, usize);

/// Directed acyclic graph on nodes `0..d` with finite edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    d: usize,
    weights: BTreeMap<Edge, f64>,
    edge_list: Vec<Edge>,
}

impl Dag {
    pub fn new(d: usize) -> Self {
        Dag {
            d,
            weights: BTreeMap::new(),
            edge_list: Vec::new(),
        }
    }

    /// Complete DAG `κ_d`: every `j -> i` with `j < i`, weights from `weight`.
    pub fn complete(d: usize, mut weight: impl FnMut(usize, usize) -> f64) -> Self {
        let mut dag = Dag::new(d);
        for i in 1..d {
            for j in 0..i {
                dag.insert_unchecked((j, i), weight(j, i));
            }
        }
        dag
    }

    /// DAG whose edges are the finite off-diagonal entries of `c`.
    pub fn from_support(c: &TropicalMatrix) -> Result<Self> {
        let mut dag = Dag::new(c.dim());
        for (i, j) in c.finite_pairs() {
            dag.add_edge(j, i, c.get(i, j))?;
        }
        Ok(dag)
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut dag = Dag::new(d);
        for &(from, to, w) in edges {
            dag.add_edge(from, to, w)?;
        }
        Ok(dag)
    }

    fn insert_unchecked(&mut self, edge: Edge, weight: f64) {
        if self.weights.insert(edge, weight).is_none() {
            self.edge_list = self.weights.keys().copied().collect();
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, weight: f64) -> Result<()> {
        let invalid = |reason| Error::InvalidEdge { from, to, reason };
        if from >= self.d || to >= self.d {
            return Err(invalid("node out of range"));
        }
        if from == to {
            return Err(invalid("self-loop"));
        }
        if !weight.is_finite() {
            return Err(invalid("weight must be finite"));
        }
        if self.reaches(to, from) {
            return Err(invalid("edge closes a directed cycle"));
        }
        self.insert_unchecked((from, to), weight);
        Ok(())
    }

    fn reaches(&self, start: usize, target: usize) -> bool {
        let mut seen = vec![false; self.d];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if v == target {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(
                self.weights
                    .range((v, 0)..(v + 1, 0))
                    .map(|(&(_, to), _)| to),
            );
        }
        false
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> &[Edge] {
        &self.edge_list
    }

    pub fn edge_set(&self) -> BTreeSet<Edge> {
        self.weights.keys().copied().collect()
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<f64> {
        self.weights.get(&(from, to)).copied()
    }

    pub fn num_edges(&self) -> usize {
        self.weights.len()
    }

    /// Weight matrix: `c_{to,from} = w`, zero diagonal, `+∞` elsewhere.
    pub fn weight_matrix(&self) -> TropicalMatrix {
        let mut c = TropicalMatrix::identity(self.d);
        for (&(from, to), &w) in &self.weights {
            c.set(to, from, w);
        }
        c
    }

    /// Relabels nodes: node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Dag {
        let mut out = Dag::new(self.d);
        for (&(from, to), &w) in &self.weights {
            out.insert_unchecked((perm[from], perm[to]), w);
        }
        out
    }
}

/// Finds a directed cycle in the graph on `0..d`, returned as a node
/// sequence whose last node has an edge back to the first.
pub fn find_cycle(d: usize, edges: &BTreeSet<Edge>) -> Option<Vec<usize>> {
    let mut adj = vec![Vec::new(); d];
    for &(from, to) in edges {
        adj[from].push(to);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; d];
    let mut path = Vec::new();
    for root in 0..d {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        path.push(root);
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = adj[v].get(*next) {
                *next += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        path.push(w);
                        stack.push((w, 0));
                    }
                    1 => {
                        let start = path.iter().position(|&u| u == w).unwrap();
                        return Some(path[start..].to_vec());
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                path.pop();
                stack.pop();
            }
        }
    }
    None
}

/// Law of the innovations, given in the min-plus domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Innovation {
    /// Drawn directly in the log domain.
    Gaussian { mean: f64, sd: f64 },
    /// Fréchet(shape) on `(0, ∞)` in the max-times domain, mapped by `-ln`.
    Frechet { shape: f64 },
}

impl Default for Innovation {
    fn default() -> Self {
        Innovation::Gaussian { mean: 0.0, sd: 1.0 }
    }
}

impl Innovation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Innovation::Gaussian { mean, sd } => {
                if !mean.is_finite() || !(sd > 0.0 && sd.is_finite()) {
                    return Err(Error::InvalidInnovation(format!(
                        "gaussian needs finite mean and sd > 0 (mean {mean}, sd {sd})"
                    )));
                }
            }
            Innovation::Frechet { shape } => {
                if !(shape > 0.0 && shape.is_finite()) {
                    return Err(Error::InvalidInnovation(format!(
                        "frechet needs shape > 0, got {shape}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sampler(&self) -> Result<InnovationSampler> {
        self.validate()?;
        Ok(match *self {
            Innovation::Gaussian { mean, sd } => {
                InnovationSampler::Gaussian(Normal::new(mean, sd).expect("validated"))
            }
            Innovation::Frechet { shape } => {
                InnovationSampler::Frechet(Frechet::new(0.0, 1.0, shape).expect("validated"))
            }
        })
    }
}

enum InnovationSampler {
    Gaussian(Normal<f64>),
    Frechet(Frechet<f64>),
}

impl InnovationSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationSampler::Gaussian(n) => n.sample(rng),
            InnovationSampler::Frechet(f) => loop {
                let z = f.sample(rng);
                // z = 0 or inf only on float underflow/overflow of the tail
                if z > 0.0 && z.is_finite() {
                    break -z.ln();
                }
            },
        }
    }
}

/// A max-linear Bayesian network with cached Kleene star.
#[derive(Debug, Clone, PartialEq)]
pub struct MlbnModel {
    dag: Dag,
    c: TropicalMatrix,
    c_star: TropicalMatrix,
    permutation: Option<Vec<usize>>,
}

impl MlbnModel {
    pub fn new(dag: Dag, permutation: Option<Vec<usize>>) -> Result<Self> {
        if let Some(perm) = &permutation {
            validate_permutation(perm, dag.dim())?;
        }
        let c = dag.weight_matrix();
        let c_star = c.kleene_star()?;
        Ok(MlbnModel {
            dag,
            c,
            c_star,
            permutation,
        })
    }

    /// Random model: each `j -> i` with `j < i` is kept with probability `p`
    /// and weighted uniformly on `[-tau, tau]`.
    pub fn random<R: Rng + ?Sized>(
        d: usize,
        p: f64,
        tau: f64,
        permute: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInterval(tau));
        }
        let mut dag = Dag::new(d);
        for i in 1..d {
            for j in 0..i {
                if rng.random::<f64>() < p {
                    let w = if tau > 0.0 {
                        rng.random_range(-tau..=tau)
                    } else {
                        0.0
                    };
                    dag.insert_unchecked((j, i), w);
                }
            }
        }
        let permutation = permute.then(|| {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(rng);
            perm
        });
        MlbnModel::new(dag, permutation)
    }

    pub fn dim(&self) -> usize {
        self.dag.dim()
    }

    /// The DAG in latent (unpermuted) labels.
    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weight_matrix(&self) -> &TropicalMatrix {
        &self.c
    }

    pub fn kleene_star(&self) -> &TropicalMatrix {
        &self.c_star
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        self.permutation.as_deref()
    }

    /// The DAG in the coordinates that samples are emitted in.
    pub fn observed_dag(&self) -> Dag {
        match &self.permutation {
            Some(perm) => self.dag.permuted(perm),
            None => self.dag.clone(),
        }
    }

    /// `C*` in emitted coordinates.
    pub fn observed_star(&self) -> TropicalMatrix {
        match &self.permutation {
            Some(perm) => self.c_star.permuted(perm),
            None => self.c_star.clone(),
        }
    }

    /// The same model without the coordinate relabeling.
    pub fn unpermuted(&self) -> MlbnModel {
        MlbnModel {
            permutation: None,
            ..self.clone()
        }
    }

    /// Observation produced by a fixed innovation vector (latent order).
    pub fn observe(&self, z: &[f64]) -> Result<TropicalPoint> {
        let raw = self.c_star.mat_vec_raw(z)?;
        let p = TropicalPoint::new(&raw)?;
        Ok(match &self.permutation {
            Some(perm) => p.permuted(perm),
            None => p,
        })
    }

    /// Unnormalized observation `C* ⊙ z` in latent order.
    pub fn observe_raw(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.c_star.mat_vec_raw(z)
    }

    /// `n` i.i.d. observations.
    pub fn generate_sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        innovation: &Innovation,
        rng: &mut R,
    ) -> Result<Sample> {
        let sampler = innovation.sampler()?;
        let d = self.dim();
        let mut z = vec![0.0; d];
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            for v in z.iter_mut() {
                *v = sampler.draw(rng);
            }
            points.push(self.observe(&z)?);
        }
        Sample::new(d, points)
    }

    /// One point per cell of `cover`, each tight on every edge of its cell.
    ///
    /// Cells use latent labels. The point is a random relative-interior
    /// point of the face of `wdp(C*)` cut out by the cell's equalities, so
    /// it is tight on nothing else the face does not force.
    pub fn atom_sample<R: Rng + ?Sized>(&self, cover: &[Cell], rng: &mut R) -> Result<Sample> {
        let d = self.dim();
        let mut points = Vec::with_capacity(cover.len());
        for cell in cover {
            let p = realize_cell(&self.c_star, cell, rng)?;
            points.push(match &self.permutation {
                Some(perm) => p.permuted(perm),
                None => p,
            });
        }
        Sample::new(d, points)
    }
}

fn validate_permutation(perm: &[usize], d: usize) -> Result<()> {
    if perm.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; d];
    for &v in perm {
        if v >= d || std::mem::replace(&mut seen[v], true) {
            return Err(Error::Config(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// A random relative-interior point of the face `{x ∈ wdp(c) : x_to - x_from
/// = c_{to,from} for (from, to) ∈ cell}`.
fn realize_cell<R: Rng + ?Sized>(
    c: &TropicalMatrix,
    cell: &Cell,
    rng: &mut R,
) -> Result<TropicalPoint> {
    let d = c.dim();
    let scale = c
        .finite_pairs()
        .map(|(i, j)| c.get(i, j).abs())
        .fold(1.0, f64::max);
    // A box far outside the polytrope's finite facets makes every column of
    // the closure finite without creating new tight constraints.
    let bound = 4.0 * d as f64 * (scale + 1.0);
    let mut m = c.clone();
    for i in 0..d {
        for j in 0..d {
            if i != j && m.get(i, j) > bound {
                m.set(i, j, bound);
            }
        }
    }
    for &(from, to) in cell.edges() {
        if from >= d || to >= d || from == to {
            return Err(Error::UnrealizableCell);
        }
        let w = c.get(to, from);
        if !w.is_finite() {
            return Err(Error::UnrealizableCell);
        }
        m.set(to, from, m.get(to, from).min(w));
        m.set(from, to, m.get(from, to).min(-w));
    }
    let closed = m
        .kleene_star_with_tol(DEFAULT_TOL)
        .map_err(|_| Error::UnrealizableCell)?;
    // Columns of the closure are generators of the face; a strictly positive
    // combination of them is tight only on implied equalities.
    let mut raw = vec![0.0; d];
    let mut total = 0.0;
    for r in 0..d {
        let w: f64 = rng.random_range(0.5..1.5);
        total += w;
        let base = closed.get(0, r);
        for (k, x) in raw.iter_mut().enumerate() {
            *x += w * (closed.get(k, r) - base);
        }
    }
    // Rounding to a dyadic grid keeps the snapped sums below exact whenever
    // the weights are themselves dyadic.
    const GRID: f64 = (1u64 << 32) as f64;
    for x in raw.iter_mut() {
        *x = (*x / total * GRID).round() / GRID;
    }
    // Snap equalities back exactly along a spanning forest of the cell.
    let p = snap_to_cell(&raw, c, cell);
    if !c.wdp_contains(&p, DEFAULT_TOL) {
        return Err(Error::UnrealizableCell);
    }
    Ok(p)
}

/// Re-imposes the cell's equalities so tight entries hold to the last bit
/// wherever a spanning forest of the cell determines them.
fn snap_to_cell(raw: &[f64], c: &TropicalMatrix, cell: &Cell) -> TropicalPoint {
    let d = raw.len();
    let mut x = raw.to_vec();
    let mut adj = vec![Vec::new(); d];
    for &(from, to) in cell.edges() {
        adj[from].push((to, c.get(to, from)));
        adj[to].push((from, -c.get(to, from)));
    }
    let mut seen = vec![false; d];
    for root in 0..d {
        if seen[root] || adj[root].is_empty() {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &(w, delta) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    x[w] = x[v] + delta;
                    stack.push(w);
                }
            }
        }
    }
    TropicalPoint::new(&x).expect("finite point")
}

/// Model file contents: `{ "d", "edges": [[j, i, w], …], "permutation" }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub permutation: Option<Vec<usize>>,
}

impl From<&MlbnModel> for ModelFile {
    fn from(m: &MlbnModel) -> Self {
        ModelFile {
            d: m.dim(),
            edges: m
                .dag()
                .edges()
                .iter()
                .map(|&(j, i)| (j, i, m.dag().weight(j, i).unwrap()))
                .collect(),
            permutation: m.permutation.clone(),
        }
    }
}

impl TryFrom<ModelFile> for MlbnModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        MlbnModel::new(Dag::from_edges(f.d, &f.edges)?, f.permutation)
    }
}

/// Whether every finite off-diagonal entry of `c` lies below the diagonal.
pub fn is_lower_triangular(c: &TropicalMatrix) -> bool {
    c.finite_pairs().all(|(i, j)| i > j)
}
