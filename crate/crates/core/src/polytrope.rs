//! Polytropes: minimum bounding polytrope of a sample, pseudovertices and the
//! dual central subdivision.
//!
//! The dual subdivision is represented by its link of the origin: one cell
//! per pseudovertex, holding the root-polytope vertices `e_ji` of the
//! constraints `x_i - x_j <= c_ij` that are tight there. We store `e_ji` as
//! the edge `(j, i)`, so cells are sets of DAG edges.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Edge;
use crate::tropical::{TropicalMatrix, TropicalPoint, DEFAULT_TOL, INF};

/// A finite set of points of tropical affine space.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    d: usize,
    points: Vec<TropicalPoint>,
}

impl Sample {
    pub fn new(d: usize, points: Vec<TropicalPoint>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for p in &points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        Ok(Sample { d, points })
    }

    /// Builds a sample from raw rows; each row is normalized.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptySample)?;
        let points = rows
            .iter()
            .map(|r| TropicalPoint::new(r))
            .collect::<Result<Vec<_>>>()?;
        Sample::new(d, points)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TropicalPoint] {
        &self.points
    }

    pub fn push(&mut self, p: TropicalPoint) -> Result<()> {
        if p.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: p.dim(),
            });
        }
        self.points.push(p);
        Ok(())
    }

    /// Observations of `X_i - X_j`.
    pub fn differences(&self, i: usize, j: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.diff(i, j)).collect()
    }
}

/// Tight constraints at a point, as root-polytope vertices `e_ji ↦ (j, i)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cell(BTreeSet<Edge>);

impl Cell {
    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Self {
        Cell(edges.into_iter().collect())
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.0.contains(e)
    }

    pub fn is_subset(&self, other: &Cell) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Labels in the `e_ji` notation with one-based nodes, e.g. `e13`.
    pub fn labels(&self) -> Vec<String> {
        self.0
            .iter()
            .map(|&(j, i)| format!("e{}{}", j + 1, i + 1))
            .collect()
    }
}

impl FromIterator<Edge> for Cell {
    fn from_iter<T: IntoIterator<Item = Edge>>(iter: T) -> Self {
        Cell::from_edges(iter)
    }
}

/// Link of the origin in a central subdivision, in canonical (sorted) form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "SubdivisionJson")]
pub struct Subdivision {
    d: usize,
    universe: BTreeSet<Edge>,
    cells: BTreeSet<Cell>,
}

#[derive(Deserialize)]
struct SubdivisionJson {
    d: usize,
    universe: BTreeSet<Edge>,
    cells: BTreeSet<Cell>,
}

impl TryFrom<SubdivisionJson> for Subdivision {
    type Error = Error;

    fn try_from(raw: SubdivisionJson) -> Result<Self> {
        Subdivision::new(raw.d, raw.universe, raw.cells)
    }
}

impl Subdivision {
    /// Checks that every universe element lies in some cell and that cells
    /// only use universe elements.
    pub fn new(d: usize, universe: BTreeSet<Edge>, cells: BTreeSet<Cell>) -> Result<Self> {
        let covered: BTreeSet<Edge> = cells.iter().flat_map(|c| c.0.iter().copied()).collect();
        if let Some(&(from, to)) = universe.difference(&covered).next() {
            return Err(Error::UncoverableElement { from, to });
        }
        if let Some(&(from, to)) = covered.difference(&universe).next() {
            return Err(Error::InvalidEdge {
                from,
                to,
                reason: "cell element outside the universe",
            });
        }
        if let Some(&(from, to)) = universe.iter().find(|&&(a, b)| a >= d || b >= d || a == b) {
            return Err(Error::InvalidEdge {
                from,
                to,
                reason: "not an edge on d nodes",
            });
        }
        Ok(Subdivision { d, universe, cells })
    }

    /// Universe taken as the union of the cells.
    pub fn from_cells(d: usize, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let cells: BTreeSet<Cell> = cells.into_iter().collect();
        let universe = cells.iter().flat_map(|c| c.0.iter().copied()).collect();
        Subdivision::new(d, universe, cells)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn universe(&self) -> &BTreeSet<Edge> {
        &self.universe
    }

    pub fn cells(&self) -> &BTreeSet<Cell> {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Every cell is a spanning forest of the universe's underlying
    /// undirected graph.
    pub fn is_triangulation(&self) -> bool {
        let forest_size = self.d - components(self.d, self.universe.iter().copied()).len();
        self.cells
            .iter()
            .all(|c| c.len() == forest_size && is_forest(self.d, c.0.iter().copied()))
    }
}

/// Tolerance and genericity handling for pseudovertex enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolytropeOptions {
    pub tol: f64,
    /// Merge coinciding pseudovertices instead of failing with `Degenerate`.
    pub allow_coarse: bool,
}

impl Default for PolytropeOptions {
    fn default() -> Self {
        PolytropeOptions {
            tol: DEFAULT_TOL,
            allow_coarse: false,
        }
    }
}

/// A pseudovertex together with its cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudovertex {
    pub point: TropicalPoint,
    pub cell: Cell,
}

/// The matrix `c̃_ij = max_k (p_i - p_j)` of the minimum bounding polytrope.
///
/// Uses `d²·n` comparisons. The result is its own Kleene star.
pub fn min_bounding_matrix(sample: &Sample) -> Result<TropicalMatrix> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = sample.dim();
    let mut c = TropicalMatrix::infinite(d);
    let mut best = vec![f64::NEG_INFINITY; d * d];
    for p in sample.points() {
        let x = p.coords();
        for i in 0..d {
            for j in 0..d {
                let v = x[i] - x[j];
                if v > best[i * d + j] {
                    best[i * d + j] = v;
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            c.set(i, j, if i == j { 0.0 } else { best[i * d + j] });
        }
    }
    Ok(c)
}

/// Whether the minimum bounding polytrope of `sample` lies inside `wdp(c)`.
pub fn bounding_contains(sample: &Sample, c: &TropicalMatrix, tol: f64) -> Result<bool> {
    if sample.is_empty() {
        return Ok(true);
    }
    if sample.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: sample.dim(),
        });
    }
    let bound = min_bounding_matrix(sample)?;
    Ok(c.finite_pairs()
        .all(|(i, j)| bound.get(i, j) <= c.get(i, j) + tol))
}

/// The cell of `p`: all `(j, i)` with `p_i - p_j = c_ij` within `tol`.
pub fn cell_of_point(c: &TropicalMatrix, p: &TropicalPoint, tol: f64) -> Result<Cell> {
    if p.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            got: p.dim(),
        });
    }
    let mut cell = BTreeSet::new();
    for (i, j) in c.finite_pairs() {
        let slack = c.get(i, j) - p.diff(i, j);
        if slack < -tol {
            return Err(Error::PointOutside {
                i,
                j,
                excess: -slack,
            });
        }
        if slack <= tol {
            cell.insert((j, i));
        }
    }
    Ok(Cell(cell))
}

/// Connected components of the undirected graph on `0..d`, each sorted,
/// ordered by smallest node.
fn components(d: usize, edges: impl IntoIterator<Item = Edge>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..d {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    groups.into_values().collect()
}

fn is_forest(d: usize, edges: impl IntoIterator<Item = Edge>) -> bool {
    let edges: Vec<Edge> = edges.into_iter().collect();
    let mut undirected: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(a, b) in &edges {
        if !undirected.insert((a.min(b), a.max(b))) {
            return false;
        }
    }
    components(d, edges.iter().copied()).len() == d - undirected.len()
}

/// Decodes a Prüfer sequence over `m` labels into the `m - 1` tree edges.
fn prufer_edges(seq: &[usize], m: usize, out: &mut Vec<(usize, usize)>) {
    out.clear();
    if m == 2 {
        out.push((0, 1));
        return;
    }
    let mut degree = vec![1usize; m];
    for &s in seq {
        degree[s] += 1;
    }
    for &s in seq {
        let leaf = (0..m).find(|&v| degree[v] == 1).expect("a leaf exists");
        out.push((leaf, s));
        degree[leaf] = 0;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..m).filter(|&v| degree[v] == 1).collect();
    out.push((rest[0], rest[1]));
}

/// Pseudovertices of one connected component of the constraint graph, as
/// (cell, coordinates indexed like `nodes`) with `nodes[0]` at zero.
fn component_vertices(
    c: &TropicalMatrix,
    nodes: &[usize],
    opts: &PolytropeOptions,
) -> Result<BTreeMap<Cell, Vec<f64>>> {
    let m = nodes.len();
    let mut found: BTreeMap<Cell, Vec<f64>> = BTreeMap::new();
    if m == 1 {
        found.insert(Cell::default(), vec![0.0]);
        return Ok(found);
    }
    // constraint (a, b) in local indices: x_a - x_b <= w
    let mut local_constraints = Vec::new();
    for a in 0..m {
        for b in 0..m {
            let w = c.get(nodes[a], nodes[b]);
            if a != b && w.is_finite() {
                local_constraints.push((a, b, w));
            }
        }
    }
    let seq_len = m.saturating_sub(2);
    let mut seq = vec![0usize; seq_len];
    let mut tree = Vec::with_capacity(m - 1);
    let mut options: Vec<Vec<(usize, usize, f64)>> = Vec::with_capacity(m - 1);
    let mut choice = vec![0usize; m - 1];
    let mut x = vec![0.0; m];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut stack = Vec::with_capacity(m);
    let mut seen = vec![false; m];

    'trees: loop {
        prufer_edges(&seq, m, &mut tree);
        options.clear();
        for &(a, b) in &tree {
            let mut opt = Vec::with_capacity(2);
            let ab = c.get(nodes[a], nodes[b]);
            let ba = c.get(nodes[b], nodes[a]);
            if ab.is_finite() {
                opt.push((a, b, ab));
            }
            if ba.is_finite() {
                opt.push((b, a, ba));
            }
            options.push(opt);
        }
        if options.iter().all(|o| !o.is_empty()) {
            choice.iter_mut().for_each(|v| *v = 0);
            loop {
                // solve the tight system along the oriented tree
                for l in adj.iter_mut() {
                    l.clear();
                }
                for (e, opt) in options.iter().enumerate() {
                    let (a, b, w) = opt[choice[e]];
                    // x_a = x_b + w
                    adj[b].push((a, w));
                    adj[a].push((b, -w));
                }
                seen.iter_mut().for_each(|s| *s = false);
                x[0] = 0.0;
                seen[0] = true;
                stack.clear();
                stack.push(0);
                while let Some(v) = stack.pop() {
                    for &(u, delta) in &adj[v] {
                        if !seen[u] {
                            seen[u] = true;
                            x[u] = x[v] + delta;
                            stack.push(u);
                        }
                    }
                }
                let feasible = local_constraints
                    .iter()
                    .all(|&(a, b, w)| x[a] - x[b] <= w + opts.tol);
                if feasible {
                    let cell: Cell = local_constraints
                        .iter()
                        .filter(|&&(a, b, w)| (x[a] - x[b] - w).abs() <= opts.tol)
                        .map(|&(a, b, _)| (nodes[b], nodes[a]))
                        .collect();
                    if cell.len() > m - 1 && !opts.allow_coarse {
                        return Err(Error::Degenerate(format!(
                            "pseudovertex with {} tight constraints among {} nodes: {:?}",
                            cell.len(),
                            m,
                            cell.labels()
                        )));
                    }
                    found.entry(cell).or_insert_with(|| x.clone());
                }
                // next orientation
                let mut e = 0;
                loop {
                    if e == choice.len() {
                        break;
                    }
                    choice[e] += 1;
                    if choice[e] < options[e].len() {
                        break;
                    }
                    choice[e] = 0;
                    e += 1;
                }
                if e == choice.len() {
                    break;
                }
            }
        }
        // next Prüfer sequence
        let mut pos = 0;
        loop {
            if pos == seq_len {
                break 'trees;
            }
            seq[pos] += 1;
            if seq[pos] < m {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
    }
    Ok(found)
}

/// Ordinary vertices of `wdp(c)` with their cells, sorted by cell.
///
/// Enumerates oriented spanning trees of the finite-constraint graph (per
/// connected component), solves the tight equalities along each tree and
/// keeps feasible solutions. `c` should be a Kleene star. A component with
/// `m` nodes contributes cells with `m - 1` edges when `c` is generic;
/// larger tight sets raise `Degenerate` unless `allow_coarse` is set.
pub fn pseudovertices(c: &TropicalMatrix, opts: &PolytropeOptions) -> Result<Vec<Pseudovertex>> {
    let d = c.dim();
    let comps = components(d, c.finite_pairs());
    let mut partial: Vec<(Cell, Vec<f64>)> = vec![(Cell::default(), vec![0.0; d])];
    for nodes in &comps {
        let local = component_vertices(c, nodes, opts)?;
        let mut next = Vec::with_capacity(partial.len() * local.len());
        for (cell, coords) in &partial {
            for (lcell, lx) in &local {
                let mut merged = cell.0.clone();
                merged.extend(lcell.0.iter().copied());
                let mut x = coords.clone();
                for (k, &v) in nodes.iter().enumerate() {
                    x[v] = lx[k];
                }
                next.push((Cell(merged), x));
            }
        }
        partial = next;
    }
    partial.sort_by(|a, b| a.0.cmp(&b.0));
    partial
        .into_iter()
        .map(|(cell, x)| {
            Ok(Pseudovertex {
                point: TropicalPoint::new(&x)?,
                cell,
            })
        })
        .collect()
}

/// Link of the origin of the central subdivision dual to `wdp(c)`.
///
/// The universe is the set of facet-defining constraints, i.e. those
/// tight at some pseudovertex.
pub fn dual_subdivision(c: &TropicalMatrix, opts: &PolytropeOptions) -> Result<Subdivision> {
    let verts = pseudovertices(c, opts)?;
    Subdivision::from_cells(c.dim(), verts.into_iter().map(|v| v.cell))
}

/// Matrix pairs `(i, j)` where the estimate's polytrope is cut strictly
/// deeper than the true one: `ĉ*_ij < c*_ij - tol`.
pub fn spurious_facets(
    c_true: &TropicalMatrix,
    c_est: &TropicalMatrix,
    tol: f64,
) -> Result<BTreeSet<(usize, usize)>> {
    if c_true.dim() != c_est.dim() {
        return Err(Error::DimensionMismatch {
            expected: c_true.dim(),
            got: c_est.dim(),
        });
    }
    let truth = c_true.kleene_star_with_tol(tol)?;
    let est = c_est.kleene_star_with_tol(tol)?;
    Ok(est
        .finite_pairs()
        .filter(|&(i, j)| {
            let t = truth.get(i, j);
            t == INF || est.get(i, j) < t - tol
        })
        .collect())
}

/// Catalan number `C_n`.
pub fn catalan(n: u64) -> u64 {
    (0..n).fold(1u64, |acc, k| acc * 2 * (2 * k + 1) / (k + 2))
}
