//! Set covers of dual subdivisions.
//!
//! A sample recovers every weight exactly when the cells of its points
//! cover the universe of the dual subdivision, so the smallest such cover
//! is the smallest best-case sample.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dag, Edge};
use crate::polytrope::{dual_subdivision, Cell, PolytropeOptions, Subdivision};
use crate::rng::{stream, substream};
use crate::tropical::{TropicalMatrix, DEFAULT_TOL, INF};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverResult {
    pub cells: Vec<Cell>,
    pub size: usize,
    pub covered: bool,
}

/// Universe and cells of a subdivision as bitmasks.
struct BitCover {
    full: u128,
    masks: Vec<u128>,
    cells: Vec<Cell>,
}

impl BitCover {
    fn new(sigma: &Subdivision) -> Result<Self> {
        let n = sigma.universe().len();
        if n > 128 {
            return Err(Error::UniverseTooLarge(n));
        }
        let index: BTreeMap<Edge, usize> = sigma
            .universe()
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, k))
            .collect();
        let cells: Vec<Cell> = sigma.cells().iter().cloned().collect();
        let masks = cells
            .iter()
            .map(|c| c.edges().iter().fold(0u128, |m, e| m | 1 << index[e]))
            .collect::<Vec<_>>();
        let full = if n == 128 {
            u128::MAX
        } else {
            (1u128 << n) - 1
        };
        let covered = masks.iter().fold(0, |a, m| a | m);
        if covered != full {
            let missing = (full & !covered).trailing_zeros() as usize;
            let &(from, to) = sigma.universe().iter().nth(missing).unwrap();
            return Err(Error::UncoverableElement { from, to });
        }
        Ok(BitCover { full, masks, cells })
    }

    fn result(&self, chosen: &[usize]) -> CoverResult {
        let covered = chosen.iter().fold(0, |a, &k| a | self.masks[k]) == self.full;
        CoverResult {
            cells: chosen.iter().map(|&k| self.cells[k].clone()).collect(),
            size: chosen.len(),
            covered,
        }
    }
}

/// Randomized greedy cover, best of `repetitions` runs.
///
/// Each run repeatedly adds a cell covering the most uncovered elements,
/// ties broken uniformly at random. In a triangulation all cells have the
/// same size, so this is also the cell with the fewest already covered
/// elements.
pub fn greedy_cover<R: Rng + ?Sized>(
    sigma: &Subdivision,
    repetitions: usize,
    rng: &mut R,
) -> Result<CoverResult> {
    let bits = BitCover::new(sigma)?;
    let mut best: Option<Vec<usize>> = None;
    let mut ties = Vec::new();
    for _ in 0..repetitions.max(1) {
        let mut uncovered = bits.full;
        let mut chosen = Vec::new();
        while uncovered != 0 {
            let mut top = 0;
            ties.clear();
            for (k, &m) in bits.masks.iter().enumerate() {
                let gain = (m & uncovered).count_ones();
                if gain > top {
                    top = gain;
                    ties.clear();
                }
                if gain == top && gain > 0 {
                    ties.push(k);
                }
            }
            let &pick = ties.choose(rng).expect("cover exists");
            uncovered &= !bits.masks[pick];
            chosen.push(pick);
        }
        if best.as_ref().is_none_or(|b| chosen.len() < b.len()) {
            best = Some(chosen);
        }
    }
    Ok(bits.result(&best.unwrap()))
}

struct Search<'a> {
    masks: &'a [u128],
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn run(&mut self, uncovered: u128, chosen: &mut Vec<usize>) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        if uncovered == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return;
        }
        let max_gain = self
            .masks
            .iter()
            .map(|m| (m & uncovered).count_ones())
            .max()
            .unwrap_or(0);
        if max_gain == 0 {
            return;
        }
        let remaining = uncovered.count_ones();
        let bound = chosen.len() + remaining.div_ceil(max_gain) as usize;
        if bound >= self.best.len() {
            return;
        }
        // branch on the element contained in the fewest cells
        let mut pivot = 0;
        let mut fewest = usize::MAX;
        let mut bits = uncovered;
        while bits != 0 {
            let e = bits.trailing_zeros();
            bits &= bits - 1;
            let count = self.masks.iter().filter(|&&m| m >> e & 1 == 1).count();
            if count < fewest {
                fewest = count;
                pivot = e;
            }
        }
        let mut options: Vec<usize> = (0..self.masks.len())
            .filter(|&k| self.masks[k] >> pivot & 1 == 1)
            .collect();
        options.sort_by_key(|&k| std::cmp::Reverse((self.masks[k] & uncovered).count_ones()));
        for k in options {
            chosen.push(k);
            self.run(uncovered & !self.masks[k], chosen);
            chosen.pop();
        }
    }
}

/// A minimum cover by branch-and-bound, or `None` when the search needs
/// more than `budget` node expansions.
pub fn exact_cover_cells(sigma: &Subdivision, budget: u64) -> Result<Option<Vec<Cell>>> {
    let bits = BitCover::new(sigma)?;
    let mut search = Search {
        masks: &bits.masks,
        // all cells is always a cover; the search only improves on it
        best: (0..bits.masks.len()).collect(),
        nodes: 0,
        budget,
        exhausted: false,
    };
    search.best.push(usize::MAX);
    search.run(bits.full, &mut Vec::new());
    if search.exhausted {
        return Ok(None);
    }
    let best = search.best;
    debug_assert!(!best.contains(&usize::MAX));
    Ok(Some(best.iter().map(|&k| bits.cells[k].clone()).collect()))
}

/// Size of a minimum cover, or `None` on budget exhaustion.
pub fn exact_cover(sigma: &Subdivision, budget: u64) -> Result<Option<usize>> {
    Ok(exact_cover_cells(sigma, budget)?.map(|c| c.len()))
}

/// Fine-to-coarse cell assignment witnessing that one subdivision refines
/// another.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    map: BTreeMap<Cell, Cell>,
}

impl Refinement {
    /// Replaces each cell of a cover of the fine subdivision by a coarse cell
    /// containing it.
    pub fn transfer(&self, cover: &[Cell]) -> Vec<Cell> {
        let out: BTreeSet<Cell> = cover
            .iter()
            .filter_map(|c| self.map.get(c).cloned())
            .collect();
        out.into_iter().collect()
    }
}

/// `Some` iff both share a universe and every cell of `fine` lies in a cell
/// of `coarse`.
pub fn refine_check(coarse: &Subdivision, fine: &Subdivision) -> Option<Refinement> {
    if coarse.universe() != fine.universe() {
        return None;
    }
    let mut map = BTreeMap::new();
    for cell in fine.cells() {
        let target = coarse.cells().iter().find(|c| cell.is_subset(c))?;
        map.insert(cell.clone(), target.clone());
    }
    Some(Refinement { map })
}

/// Settings for sampling generic weight matrices and covering their
/// subdivisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CensusOptions {
    pub greedy_repetitions: usize,
    pub exact_budget: u64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub tol: f64,
    /// Give up on a draw after this many non-generic weight matrices.
    pub max_rejections: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            greedy_repetitions: 100,
            exact_budget: 5_000_000,
            weight_low: -1.0,
            weight_high: 1.0,
            tol: DEFAULT_TOL,
            max_rejections: 100_000_000,
        }
    }
}

/// Whether every edge of `support` is strictly shorter than every other
/// path between its endpoints, i.e. every weight is a facet of `wdp(c)`.
pub fn is_strictly_closed(c: &TropicalMatrix, support: &[Edge], tol: f64) -> bool {
    let d = c.dim();
    let Ok(star) = c.kleene_star_with_tol(tol) else {
        return false;
    };
    support.iter().all(|&(j, i)| {
        let direct = c.get(i, j);
        (0..d).filter(|&k| k != i && k != j).all(|k| {
            let via = star.get(i, k) + star.get(k, j);
            via == INF || direct < via - tol
        })
    })
}

/// Draws weights on `support` until the dual subdivision is a triangulation.
///
/// Returns the weight matrix, its subdivision and the number of rejected
/// draws.
pub fn draw_generic<R: Rng + ?Sized>(
    d: usize,
    support: &[Edge],
    opts: &CensusOptions,
    rng: &mut R,
) -> Result<(TropicalMatrix, Subdivision, u64)> {
    let popts = PolytropeOptions {
        tol: opts.tol,
        allow_coarse: false,
    };
    let mut rejected = 0;
    loop {
        let mut c = TropicalMatrix::identity(d);
        for &(j, i) in support {
            c.set(i, j, rng.random_range(opts.weight_low..opts.weight_high));
        }
        if is_strictly_closed(&c, support, opts.tol) {
            match dual_subdivision(&c, &popts) {
                Ok(sub) if sub.is_triangulation() => return Ok((c, sub, rejected)),
                Ok(_) | Err(Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
        }
        rejected += 1;
        if rejected >= opts.max_rejections {
            return Err(Error::Degenerate(format!(
                "no generic weights after {rejected} draws"
            )));
        }
    }
}

/// Edges of the complete DAG `κ_d`.
pub fn complete_support(d: usize) -> Vec<Edge> {
    Dag::complete(d, |_, _| 0.0).edges().to_vec()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeStats {
    pub count_seen: usize,
    /// Index of the first draw that produced this type.
    pub first_draw: usize,
    pub min_cover_greedy: usize,
    pub min_cover_exact: Option<usize>,
}

/// Combinatorial types of sampled triangulations with their cover numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeCensus {
    pub d: usize,
    pub draws: usize,
    pub rejected: u64,
    pub types: BTreeMap<Subdivision, TypeStats>,
}

impl TypeCensus {
    /// Best known cover number of each type: exact when available.
    fn cover_number(stats: &TypeStats) -> usize {
        stats.min_cover_exact.unwrap_or(stats.min_cover_greedy)
    }

    /// Set of observed minimum cover sizes across types.
    pub fn observed_sizes(&self) -> BTreeSet<usize> {
        self.types.values().map(Self::cover_number).collect()
    }

    /// Empirical minimum sample size: the largest observed cover number.
    pub fn empirical_c(&self) -> Option<usize> {
        self.observed_sizes().into_iter().max()
    }

    /// Fraction of draws whose type has greedy size equal to the exact size,
    /// among draws where the exact size is known.
    pub fn greedy_agreement(&self) -> f64 {
        let (mut agree, mut total) = (0usize, 0usize);
        for s in self.types.values() {
            if let Some(exact) = s.min_cover_exact {
                total += s.count_seen;
                if exact == s.min_cover_greedy {
                    agree += s.count_seen;
                }
            }
        }
        if total == 0 {
            1.0
        } else {
            agree as f64 / total as f64
        }
    }
}

/// Samples `num_samples` generic weight matrices on `support`, groups their
/// dual triangulations by combinatorial type and covers each type.
///
/// Draw `k` uses stream `(seed, k)`; the result does not depend on the
/// number of threads.
pub fn census_on(
    d: usize,
    support: &[Edge],
    num_samples: usize,
    seed: u64,
    opts: &CensusOptions,
) -> Result<TypeCensus> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let draws = (0..num_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            draw_generic(d, support, opts, &mut rng).map(|(_, sub, rej)| (sub, rej))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rejected = 0;
    let mut seen: BTreeMap<Subdivision, (usize, usize)> = BTreeMap::new();
    for (k, (sub, rej)) in draws.into_iter().enumerate() {
        rejected += rej;
        seen.entry(sub).or_insert((0, k)).0 += 1;
    }
    let stats = seen
        .into_par_iter()
        .map(|(sub, (count, first))| {
            let mut rng = substream(seed, first as u64, 1);
            let greedy = greedy_cover(&sub, opts.greedy_repetitions, &mut rng)?;
            let exact = exact_cover(&sub, opts.exact_budget)?;
            let stats = TypeStats {
                count_seen: count,
                first_draw: first,
                min_cover_greedy: greedy.size,
                min_cover_exact: exact,
            };
            Ok((sub, stats))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TypeCensus {
        d,
        draws: num_samples,
        rejected,
        types: stats.into_iter().collect(),
    })
}

/// Census over the complete DAG `κ_d`.
pub fn census(d: usize, num_samples: usize, seed: u64, opts: &CensusOptions) -> Result<TypeCensus> {
    census_on(d, &complete_support(d), num_samples, seed, opts)
}
