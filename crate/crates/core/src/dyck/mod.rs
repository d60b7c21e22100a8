//! Dyck paths and the kernel terms they label.
//!
//! Points of an order-`N` term are numbered `0..=N` with `0` the latest time. An arc `(a, b)`,
//! `a < b`, joins two points and carries `I_{b-a}` (solid) or `I_{b-a} - 1` (dashed). Drawn on
//! the path plot, the arc is the triangle with apex at `x = a + b` and height `b - a`; a peak
//! of the path gives a dashed arc and every other triangle fitting under the path a solid one.

mod contract;

pub use contract::{
    build_t_tensor, contract_arcs, contract_recipe, for_each_term, recipe_arcs, sum_order, ArcBlocks, OrderSum, TTensor,
};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

/// Default bound on enumerated orders.
pub const MAX_ORDER: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyckPath {
    steps: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStatistics {
    pub peaks: usize,
    pub segments: usize,
    pub max_height: usize,
    pub hills: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Arc {
    pub start: usize,
    pub end: usize,
}

impl Arc {
    pub fn lag(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelTermRecipe {
    pub order: usize,
    pub word: String,
    pub dashed: Vec<Arc>,
    pub solid: Vec<Arc>,
}

impl DyckPath {
    pub fn from_steps(steps: Vec<bool>) -> Result<Self> {
        let mut h: i64 = 0;
        for &s in &steps {
            h += if s { 1 } else { -1 };
            if h < 0 {
                return Err(Error::Validation("path dips below the axis".into()));
            }
        }
        if h != 0 || steps.is_empty() {
            return Err(Error::Validation("path is not balanced".into()));
        }
        Ok(Self { steps })
    }

    pub fn parse(word: &str) -> Result<Self> {
        let steps = word
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Error::Validation(format!("bad step '{c}' in Dyck word"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_steps(steps)
    }

    /// The tallest path `1^N 0^N`.
    pub fn crest(order: usize) -> Self {
        let mut steps = vec![true; order];
        steps.extend(std::iter::repeat(false).take(order));
        Self { steps }
    }

    pub fn order(&self) -> usize {
        self.steps.len() / 2
    }

    pub fn steps(&self) -> &[bool] {
        &self.steps
    }

    pub fn is_crest(&self) -> bool {
        let n = self.order();
        self.steps[..n].iter().all(|&s| s)
    }

    /// Heights at `x = 0..=2N`.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = Vec::with_capacity(self.steps.len() + 1);
        h.push(0usize);
        for &s in &self.steps {
            let last = *h.last().unwrap();
            h.push(if s { last + 1 } else { last - 1 });
        }
        h
    }

    /// Positions `x` of peaks (an up step followed by a down step).
    pub fn peak_positions(&self) -> Vec<usize> {
        (1..self.steps.len()).filter(|&x| self.steps[x - 1] && !self.steps[x]).collect()
    }

    pub fn statistics(&self) -> PathStatistics {
        let h = self.heights();
        let peaks = self.peak_positions();
        PathStatistics {
            peaks: peaks.len(),
            segments: h[1..].iter().filter(|&&v| v == 0).count(),
            max_height: *h.iter().max().unwrap(),
            hills: peaks.iter().filter(|&&x| h[x] == 1).count(),
        }
    }
}

impl fmt::Display for DyckPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.steps {
            f.write_str(if s { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn path_statistics(p: &DyckPath) -> PathStatistics {
    p.statistics()
}

/// All Dyck paths of the given order in lexicographic word order.
pub fn enumerate_paths(order: usize) -> Result<Vec<DyckPath>> {
    enumerate_paths_bounded(order, MAX_ORDER)
}

pub fn enumerate_paths_bounded(order: usize, max_order: usize) -> Result<Vec<DyckPath>> {
    if order == 0 {
        return Err(Error::Validation("Dyck order must be at least 1".into()));
    }
    if order > max_order {
        return Err(Error::Resource(format!("order {order} exceeds the configured bound {max_order}")));
    }
    fn rec(n: usize, ups: usize, downs: usize, buf: &mut Vec<bool>, out: &mut Vec<DyckPath>) {
        if buf.len() == 2 * n {
            out.push(DyckPath { steps: buf.clone() });
            return;
        }
        if downs < ups {
            buf.push(false);
            rec(n, ups, downs + 1, buf, out);
            buf.pop();
        }
        if ups < n {
            buf.push(true);
            rec(n, ups + 1, downs, buf, out);
            buf.pop();
        }
    }
    let mut out = Vec::new();
    rec(order, 0, 0, &mut Vec::with_capacity(2 * order), &mut out);
    Ok(out)
}

/// Arc classification from a height profile and step word; shared with the contraction walk.
pub(crate) fn arc_kind(heights: &[usize], steps: &[bool], a: usize, b: usize) -> Option<bool> {
    let x = a + b;
    let need = b - a;
    if heights[x] < need {
        return None;
    }
    let peak = x > 0 && x < steps.len() && steps[x - 1] && !steps[x];
    Some(peak && heights[x] == need)
}

pub fn recipe_from_path(p: &DyckPath) -> KernelTermRecipe {
    let n = p.order();
    let h = p.heights();
    let mut dashed = Vec::new();
    let mut solid = Vec::new();
    for b in 1..=n {
        for a in 0..b {
            match arc_kind(&h, &p.steps, a, b) {
                Some(true) => dashed.push(Arc { start: a, end: b }),
                Some(false) => solid.push(Arc { start: a, end: b }),
                None => {}
            }
        }
    }
    dashed.sort();
    solid.sort();
    KernelTermRecipe { order: n, word: p.to_string(), dashed, solid }
}

/// All recipes of an order in path-word order, built once per order and shared.
pub fn recipes(order: usize) -> Result<std::sync::Arc<Vec<KernelTermRecipe>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<Vec<KernelTermRecipe>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("recipe cache poisoned").get(&order) {
        return Ok(std::sync::Arc::clone(r));
    }
    let built = std::sync::Arc::new(enumerate_paths(order)?.iter().map(recipe_from_path).collect::<Vec<_>>());
    cache.lock().expect("recipe cache poisoned").insert(order, std::sync::Arc::clone(&built));
    Ok(built)
}

pub fn catalan(n: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// Number of order-`n` paths with `k` peaks.
pub fn narayana(n: usize, k: usize) -> u128 {
    if k == 0 || k > n {
        return 0;
    }
    binomial(n, k) * binomial(n, k - 1) / n as u128
}

#[cfg(test)]
mod tests;
