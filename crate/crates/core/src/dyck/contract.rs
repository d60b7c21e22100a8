//! Contraction of kernel terms over pair indices.
//!
//! Points are absorbed from the latest (0) to the earliest (N). The running tensor keeps the
//! outer index of point 0 plus every point that still has an arc or link to a later-absorbed
//! point, so the cost follows the width of the arc structure rather than the full path count.

use super::{arc_kind, recipe_from_path, Arc, DyckPath, KernelTermRecipe};
use crate::bath::InfluenceTable;
use crate::system::LiouvilleMatrix;
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Row-major `n x n` blocks feeding a contraction.
#[derive(Clone, Debug)]
pub struct ArcBlocks {
    pub pair_dim: usize,
    pub i0: Vec<C64>,
    /// `links[a]` joins point `a` (rows) to point `a + 1` (columns).
    pub links: Vec<Vec<C64>>,
    /// `solid[k - 1] = I_k`.
    pub solid: Vec<Vec<C64>>,
    /// `dashed[k - 1] = I_k - 1`.
    pub dashed: Vec<Vec<C64>>,
}

impl ArcBlocks {
    /// Static propagator link `f` repeated over `order` positions.
    pub fn new(table: &InfluenceTable, f: &LiouvilleMatrix, order: usize) -> Self {
        Self::with_links(table, vec![f.to_row_major(); order])
    }

    pub fn with_links(table: &InfluenceTable, links: Vec<Vec<C64>>) -> Self {
        let k = table.k_max();
        Self {
            pair_dim: table.pair_dim(),
            i0: table.i0().to_vec(),
            links,
            solid: (1..=k).map(|l| table.lag(l).to_vec()).collect(),
            dashed: (1..=k).map(|l| table.tilde_block(l)).collect(),
        }
    }

    fn block(&self, lag: usize, dashed: bool) -> &[C64] {
        if dashed {
            &self.dashed[lag - 1]
        } else {
            &self.solid[lag - 1]
        }
    }
}

struct State {
    /// Tracked points other than 0, ascending.
    open: Vec<usize>,
    data: Vec<C64>,
}

/// Absorb point `b`. `arcs` pairs an earlier-absorbed point with the block joining it to `b`.
fn advance(
    n: usize,
    st: &State,
    b: usize,
    link: &[C64],
    i0: &[C64],
    arcs: &[(usize, &[C64])],
    keep: &dyn Fn(usize) -> bool,
    keep_b: bool,
) -> State {
    let pos = |a: usize| -> usize {
        if a == 0 {
            0
        } else {
            1 + st.open.iter().position(|&o| o == a).expect("arc source must be tracked")
        }
    };
    let prev = pos(b - 1);
    let arc_src: Vec<(usize, &[C64])> = arcs.iter().map(|&(a, blk)| (pos(a), blk)).collect();
    let kept: Vec<bool> = st.open.iter().map(|&a| keep(a)).collect();
    let mut open: Vec<usize> = st.open.iter().zip(&kept).filter(|(_, &k)| k).map(|(&a, _)| a).collect();
    if keep_b {
        open.push(b);
    }
    let m = st.open.len();
    let out_len = n.pow(open.len() as u32 + 1);
    let mut out = vec![C64::default(); out_len];
    let mut digits = vec![0usize; m + 1];
    let mut factor = vec![C64::default(); n];
    for &val in &st.data {
        if val != C64::default() {
            let mut base = digits[0];
            for p in 0..m {
                if kept[p] {
                    base = base * n + digits[p + 1];
                }
            }
            let xp = digits[prev];
            for (xb, f) in factor.iter_mut().enumerate() {
                *f = link[xp * n + xb] * i0[xb];
            }
            for &(p, blk) in &arc_src {
                let row = &blk[digits[p] * n..digits[p] * n + n];
                for (f, w) in factor.iter_mut().zip(row) {
                    *f *= w;
                }
            }
            if keep_b {
                let dst = &mut out[base * n..base * n + n];
                for (o, f) in dst.iter_mut().zip(&factor) {
                    *o += val * f;
                }
            } else {
                let s: C64 = factor.iter().sum();
                out[base] += val * s;
            }
        }
        // odometer, last digit fastest
        let mut p = m;
        loop {
            digits[p] += 1;
            if digits[p] < n || p == 0 {
                break;
            }
            digits[p] = 0;
            p -= 1;
        }
    }
    State { open, data: out }
}

fn initial_state(i0: &[C64]) -> State {
    State { open: Vec::new(), data: i0.to_vec() }
}

/// Contract one term with explicit arc blocks. Returns `M[x_0][x_N]` row-major.
///
/// `arcs` lists `(a, b, block)` with `a < b <= order`; `links` must cover positions `0..order`.
pub fn contract_arcs(
    pair_dim: usize,
    order: usize,
    i0: &[C64],
    links: &[Vec<C64>],
    arcs: &[(usize, usize, &[C64])],
) -> Vec<C64> {
    let n = pair_dim;
    if order == 0 {
        let mut m = vec![C64::default(); n * n];
        for x in 0..n {
            m[x * n + x] = i0[x];
        }
        return m;
    }
    let mut last_use = vec![0usize; order + 1];
    for a in 0..order {
        last_use[a] = a + 1;
    }
    for &(a, b, _) in arcs {
        last_use[a] = last_use[a].max(b);
    }
    let mut st = initial_state(i0);
    for b in 1..=order {
        let to_b: Vec<(usize, &[C64])> = arcs.iter().filter(|t| t.1 == b).map(|t| (t.0, t.2)).collect();
        let keep = |a: usize| last_use[a] > b;
        st = advance(n, &st, b, &links[b - 1], i0, &to_b, &keep, true);
    }
    st.data
}

/// Contract the term labelled by `recipe`.
pub fn contract_recipe(blocks: &ArcBlocks, recipe: &KernelTermRecipe) -> Vec<C64> {
    let arcs: Vec<(usize, usize, &[C64])> = recipe
        .dashed
        .iter()
        .map(|a| (a.start, a.end, blocks.block(a.lag(), true)))
        .chain(recipe.solid.iter().map(|a| (a.start, a.end, blocks.block(a.lag(), false))))
        .collect();
    contract_arcs(blocks.pair_dim, recipe.order, &blocks.i0, &blocks.links, &arcs)
}

#[derive(Clone, Debug)]
pub struct OrderSum {
    pub order: usize,
    /// Sum of the contracted terms, `M[x_0][x_N]` row-major.
    pub total: Vec<C64>,
    /// The crest term alone, when included.
    pub crest: Option<Vec<C64>>,
    pub terms: usize,
    /// Largest number of tensor entries held at once while summing.
    pub peak_entries: usize,
}

struct Walk<'a> {
    blocks: &'a ArcBlocks,
    order: usize,
    include_crest: bool,
    steps: Vec<bool>,
    heights: Vec<usize>,
    visit: &'a mut dyn FnMut(&DyckPath, &[C64]),
}

impl Walk<'_> {
    fn keep(&self, a: usize, b: usize) -> bool {
        let n = self.order;
        let h = &self.heights;
        // an arc to a later point c whose apex is already drawn
        let past = ((b + 1)..=n.min(2 * b - a)).any(|c| h[a + c] >= c - a);
        // or one whose apex is still ahead and reachable from the current height
        let ahead = h[2 * b] + 2 * a >= 2 * b && b.max(2 * b - a) < n;
        past || ahead
    }

    fn run(&mut self, g: usize, st: State) {
        let n = self.order;
        if g == n {
            let path = DyckPath { steps: self.steps.clone() };
            (self.visit)(&path, &st.data);
            return;
        }
        let h = self.heights[2 * g];
        for (s1, s2) in [(false, false), (false, true), (true, false), (true, true)] {
            let h1 = if s1 {
                h + 1
            } else if h > 0 {
                h - 1
            } else {
                continue;
            };
            let h2 = if s2 {
                h1 + 1
            } else if h1 > 0 {
                h1 - 1
            } else {
                continue;
            };
            if h1 > 2 * n - (2 * g + 1) || h2 > 2 * n - (2 * g + 2) {
                continue;
            }
            if !self.include_crest && (h1 >= n || h2 >= n) {
                continue;
            }
            self.steps.push(s1);
            self.steps.push(s2);
            self.heights.push(h1);
            self.heights.push(h2);
            let b = g + 1;
            let mut arcs: Vec<(usize, &[C64])> = Vec::new();
            for a in 0..b {
                if let Some(d) = arc_kind(&self.heights, &self.steps, a, b) {
                    arcs.push((a, self.blocks.block(b - a, d)));
                }
            }
            let keep = |a: usize| self.keep(a, b);
            let next =
                advance(self.blocks.pair_dim, &st, b, &self.blocks.links[g], &self.blocks.i0, &arcs, &keep, true);
            self.run(b, next);
            self.steps.truncate(2 * g);
            self.heights.truncate(2 * g + 1);
        }
    }
}

fn check_walk(blocks: &ArcBlocks, order: usize, include_crest: bool) -> Result<()> {
    if order == 0 {
        return Err(Error::Validation("term walk needs order >= 1".into()));
    }
    let need = if include_crest { order } else { order - 1 };
    if blocks.solid.len() < need {
        return Err(Error::Validation(format!(
            "order {order} needs influence lags up to {need}, table holds {}",
            blocks.solid.len()
        )));
    }
    if blocks.links.len() < order {
        return Err(Error::Validation(format!("order {order} needs {order} propagator links")));
    }
    Ok(())
}

/// Visit every term of order `order` in lexicographic path order, sharing common prefixes.
pub fn for_each_term(
    blocks: &ArcBlocks,
    order: usize,
    include_crest: bool,
    visit: &mut dyn FnMut(&DyckPath, &[C64]),
) -> Result<()> {
    check_walk(blocks, order, include_crest)?;
    let mut walk = Walk { blocks, order, include_crest, steps: Vec::with_capacity(2 * order), heights: vec![0], visit };
    walk.run(0, initial_state(&blocks.i0));
    Ok(())
}

/// Memory bound for one layer of merged partial contractions (2 GiB of complex entries).
const MAX_LAYER_ENTRIES: usize = 1 << 27;

/// Everything about a path prefix ending at point `g` that later points can see.
///
/// `entries[i]` describes the apex position `x = g + 1 + i` (for `x < 2g`): how many points
/// beyond `g` still receive an arc with that apex, and whether the highest such arc is dashed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Frontier {
    height: usize,
    last_up: bool,
    entries: Vec<(usize, bool)>,
}

/// Arcs into `b = g + 1` as `(a, lag, dashed)` and the frontier after the step pair `(s1, s2)`.
fn transition(
    key: &Frontier,
    g: usize,
    order: usize,
    include_crest: bool,
    s1: bool,
    s2: bool,
) -> Option<(Vec<(usize, usize, bool)>, Frontier)> {
    let h = key.height;
    let b = g + 1;
    let h1 = if s1 { h + 1 } else { h.checked_sub(1)? };
    let h2 = if s2 { h1 + 1 } else { h1.checked_sub(1)? };
    if h1 > 2 * order - (2 * g + 1) || h2 > 2 * order - (2 * g + 2) {
        return None;
    }
    if !include_crest && (h1 >= order || h2 >= order) {
        return None;
    }
    // entries[a] holds the apex a + b
    let mut arcs: Vec<(usize, usize, bool)> = key
        .entries
        .iter()
        .enumerate()
        .filter(|(_, &(c, _))| c >= 1)
        .map(|(a, &(c, d))| (a, b - a, d && c == 1))
        .collect();
    if g >= 1 && h >= 2 {
        arcs.push((g - 1, 2, h == 2 && key.last_up && !s1));
    }
    arcs.push((g, 1, h1 == 1 && s1 && !s2));

    let reach = |x: usize, hx: usize| x.min((x + hx) / 2).min(order).saturating_sub(b);
    let mut entries: Vec<(usize, bool)> = key
        .entries
        .iter()
        .skip(1)
        .map(|&(c, d)| {
            let c = c.saturating_sub(1);
            (c, d && c > 0)
        })
        .collect();
    if g >= 2 {
        let c = reach(2 * g, h);
        entries.push((c, c > 0 && key.last_up && !s1));
    }
    if g >= 1 {
        let c = reach(2 * g + 1, h1);
        entries.push((c, c > 0 && s1 && !s2));
    }
    // the last step only matters for a dashed arc at an apex of height two or more
    Some((arcs, Frontier { height: h2, last_up: s2 && h2 >= 2, entries }))
}

/// Whether point `a` still has an arc or link beyond the newest point `b`.
fn frontier_keeps(f: &Frontier, order: usize, a: usize, b: usize) -> bool {
    // an arc whose apex already lies on the prefix
    let past = f.entries.iter().enumerate().any(|(i, &(c, _))| {
        let x = b + 1 + i;
        x > a + b && x - a <= order && x - a - b <= c
    });
    let at_top = 2 * b - a <= order && f.height + 2 * a >= 2 * b;
    // an apex still ahead and reachable
    let ahead = f.height + 2 * a >= 2 * b && 2 * b - a < order;
    past || at_top || ahead
}

/// Sum of all order-`order` terms (optionally without the crest term).
///
/// Prefixes with the same [`Frontier`] contribute identical future factors, so their partial
/// contractions are merged before the next point is absorbed.
pub fn sum_order(blocks: &ArcBlocks, order: usize, include_crest: bool) -> Result<OrderSum> {
    check_walk(blocks, order, include_crest)?;
    let n = blocks.pair_dim;
    let mut peak = 0usize;
    let mut layer: Vec<(Frontier, State, usize)> =
        vec![(Frontier { height: 0, last_up: false, entries: Vec::new() }, initial_state(&blocks.i0), 1)];
    for g in 0..order {
        let b = g + 1;
        let mut plan: BTreeMap<Frontier, Vec<(usize, Vec<(usize, usize, bool)>)>> = BTreeMap::new();
        for (src, (key, _, _)) in layer.iter().enumerate() {
            for (s1, s2) in [(false, false), (false, true), (true, false), (true, true)] {
                if let Some((arcs, next)) = transition(key, g, order, include_crest, s1, s2) {
                    plan.entry(next).or_default().push((src, arcs));
                }
            }
        }
        let targets: Vec<(Frontier, Vec<(usize, Vec<(usize, usize, bool)>)>)> = plan.into_iter().collect();
        let held: usize = targets.iter().map(|(f, _)| n.pow(open_len(f, order, b) as u32 + 1)).sum();
        if held > MAX_LAYER_ENTRIES {
            return Err(Error::Resource(format!(
                "order-{order} term sum needs {held} tensor entries at point {b} (limit {MAX_LAYER_ENTRIES})"
            )));
        }
        peak = peak.max(held);
        let next: Vec<(Frontier, State, usize)> = targets
            .into_par_iter()
            .map(|(frontier, sources)| {
                let keep = |a: usize| frontier_keeps(&frontier, order, a, b);
                let mut acc: Option<State> = None;
                let mut count = 0usize;
                for (src, arcs) in &sources {
                    let (_, st, c) = &layer[*src];
                    let blk: Vec<(usize, &[C64])> =
                        arcs.iter().map(|&(a, lag, dashed)| (a, blocks.block(lag, dashed))).collect();
                    let out = advance(n, st, b, &blocks.links[g], &blocks.i0, &blk, &keep, true);
                    count += c;
                    match acc.as_mut() {
                        Some(s) => {
                            for (t, v) in s.data.iter_mut().zip(&out.data) {
                                *t += v;
                            }
                        }
                        None => acc = Some(out),
                    }
                }
                (frontier, acc.expect("every target has a source"), count)
            })
            .collect();
        layer = next;
    }
    let mut total = vec![C64::default(); n * n];
    let mut terms = 0usize;
    for (_, st, count) in &layer {
        for (t, v) in total.iter_mut().zip(&st.data) {
            *t += v;
        }
        terms += count;
    }
    let crest = include_crest.then(|| contract_recipe(blocks, &recipe_from_path(&DyckPath::crest(order))));
    Ok(OrderSum { order, total, crest, terms, peak_entries: peak })
}

/// Number of tracked points besides point 0 once `b` is absorbed under frontier `f`.
fn open_len(f: &Frontier, order: usize, b: usize) -> usize {
    (1..b).filter(|&a| frontier_keeps(f, order, a, b)).count() + 1
}

/// Bath-only tensor of an order: the kernel terms with every propagator link removed.
///
/// Indexed by `(x_0, ..., x_N)` with `x_0` most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct TTensor {
    pub order: usize,
    pub pair_dim: usize,
    pub data: Vec<C64>,
}

impl TTensor {
    pub fn get(&self, xs: &[usize]) -> C64 {
        let idx = xs.iter().fold(0usize, |acc, &x| acc * self.pair_dim + x);
        self.data[idx]
    }
}

/// `T_N` from the given recipes (all of order `order`).
pub fn build_t_tensor(table: &InfluenceTable, order: usize, crest_only: bool) -> Result<TTensor> {
    if order == 0 || order > table.k_max() {
        return Err(Error::Validation(format!(
            "T tensor order {order} needs 1 <= order <= table depth {}",
            table.k_max()
        )));
    }
    let n = table.pair_dim();
    let recipes: Vec<KernelTermRecipe> =
        if crest_only { vec![recipe_from_path(&DyckPath::crest(order))] } else { super::recipes(order)?.to_vec() };
    let tilde: Vec<Vec<C64>> = (1..=order).map(|k| table.tilde_block(k)).collect();
    let mut data = vec![C64::default(); n.pow(order as u32 + 1)];
    let mut xs = vec![0usize; order + 1];
    for r in &recipes {
        let mut by_end: Vec<Vec<(usize, &[C64])>> = vec![Vec::new(); order + 1];
        for a in &r.dashed {
            by_end[a.end].push((a.start, &tilde[a.lag() - 1]));
        }
        for a in &r.solid {
            by_end[a.end].push((a.start, table.lag(a.lag())));
        }
        fill(n, 0, C64::new(1.0, 0.0), 0, table.i0(), &by_end, &mut xs, &mut data);
    }
    Ok(TTensor { order, pair_dim: n, data })
}

#[allow(clippy::too_many_arguments)]
fn fill(
    n: usize,
    b: usize,
    acc: C64,
    idx: usize,
    i0: &[C64],
    by_end: &[Vec<(usize, &[C64])>],
    xs: &mut [usize],
    out: &mut [C64],
) {
    for x in 0..n {
        xs[b] = x;
        let mut w = acc * i0[x];
        for &(a, blk) in &by_end[b] {
            w *= blk[xs[a] * n + x];
        }
        let id = idx * n + x;
        if b + 1 == xs.len() {
            out[id] += w;
        } else if w != C64::default() {
            fill(n, b + 1, w, id, i0, by_end, xs, out);
        }
    }
}

/// Arcs of a recipe, for callers that want the structure without blocks.
pub fn recipe_arcs(recipe: &KernelTermRecipe) -> impl Iterator<Item = (Arc, bool)> + '_ {
    recipe.dashed.iter().map(|&a| (a, true)).chain(recipe.solid.iter().map(|&a| (a, false)))
}
