//! The level set: every vertex sits at one level, either in that level's
//! independent set or in its dominated (neighbor) set.
//!
//! Level `i` stands for the residual vertex set `{v : level(v) >= i}`, which
//! is never materialized. Its live size `n_i` and edge count `m_i` (edges
//! whose endpoints both sit at level `>= i`) are maintained incrementally, and
//! each level remembers the values it had when it was last built.

use std::fmt::Write as _;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DynamicGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Independent,
    Dominated,
}

/// A vertex's place in the level set. Levels are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub level: usize,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("vertex {0} has not been assigned a level")]
    Unassigned(VertexId),
}

#[derive(Debug, Clone, Default)]
pub struct Level {
    pub(crate) independent: IndexSet<VertexId>,
    pub(crate) dominated: IndexSet<VertexId>,
    pub(crate) live_n: usize,
    pub(crate) live_m: usize,
    pub(crate) snapshot_n: usize,
    pub(crate) snapshot_m: usize,
}

impl Level {
    pub(crate) fn with_snapshot(n: usize, m: usize) -> Self {
        Level { live_n: n, live_m: m, snapshot_n: n, snapshot_m: m, ..Default::default() }
    }

    pub fn independent(&self) -> &IndexSet<VertexId> {
        &self.independent
    }

    pub fn dominated(&self) -> &IndexSet<VertexId> {
        &self.dominated
    }

    /// Live `|{v : level(v) >= i}|`.
    pub fn n(&self) -> usize {
        self.live_n
    }

    /// Live number of edges with both endpoints at level `>= i`.
    pub fn m(&self) -> usize {
        self.live_m
    }

    pub fn snapshot_n(&self) -> usize {
        self.snapshot_n
    }

    pub fn snapshot_m(&self) -> usize {
        self.snapshot_m
    }

    /// Whether the live counts have drifted far enough from the snapshot to
    /// warrant rebuilding this level. Bounds are exclusive.
    pub fn breached(&self) -> bool {
        let (n, m) = (self.live_n, self.live_m);
        let (sn, sm) = (self.snapshot_n, self.snapshot_m);
        if 2 * n < sn {
            return true;
        }
        if sm == 0 {
            // An edgeless level breaches once it stops being sparse.
            m > sn
        } else {
            m > 2 * sm || 2 * m < sm
        }
    }
}

/// Default level cap, `4 * ceil(log2 n) + 1`.
pub fn default_level_cap(n: usize) -> usize {
    4 * ceil_log2(n) as usize + 1
}

/// `ceil(log2 x)` for `x >= 1`; 0 for `x <= 1`.
pub fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

#[derive(Debug, Clone)]
pub struct LevelSet {
    pub(crate) levels: Vec<Level>,
    pub(crate) slots: Vec<Option<Slot>>,
    pub(crate) cap: usize,
}

impl LevelSet {
    /// An empty level set for `n` vertices; nothing is assigned until a builder runs.
    pub fn new(n: usize, cap: usize) -> Self {
        LevelSet { levels: Vec::new(), slots: vec![None; n], cap: cap.max(1) }
    }

    /// Number of levels `k`.
    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn vertex_count(&self) -> usize {
        self.slots.len()
    }

    /// Level `i`, 1-based.
    pub fn level(&self, i: usize) -> &Level {
        &self.levels[i - 1]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    #[inline]
    pub fn slot(&self, v: VertexId) -> Option<Slot> {
        self.slots[v.index()]
    }

    #[inline]
    pub(crate) fn slot_of(&self, v: VertexId) -> Slot {
        self.slots[v.index()].expect("vertex assigned after build")
    }

    pub fn level_of(&self, v: VertexId) -> Result<usize, LevelError> {
        self.slot(v).map(|s| s.level).ok_or(LevelError::Unassigned(v))
    }

    pub fn role_of(&self, v: VertexId) -> Result<Role, LevelError> {
        self.slot(v).map(|s| s.role).ok_or(LevelError::Unassigned(v))
    }

    #[inline]
    pub fn is_independent(&self, v: VertexId) -> bool {
        matches!(self.slot(v), Some(Slot { role: Role::Independent, .. }))
    }

    /// The maintained maximal independent set, sorted by vertex id.
    pub fn mis(&self) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self.levels.iter().flat_map(|l| l.independent.iter().copied()).collect();
        out.sort_unstable();
        out
    }

    pub fn mis_size(&self) -> usize {
        self.levels.iter().map(|l| l.independent.len()).sum()
    }

    /// Sets membership only; counters are the caller's business.
    pub(crate) fn place(&mut self, v: VertexId, level: usize, role: Role) {
        if let Some(old) = self.slots[v.index()] {
            if let Some(l) = self.levels.get_mut(old.level - 1) {
                match old.role {
                    Role::Independent => l.independent.swap_remove(&v),
                    Role::Dominated => l.dominated.swap_remove(&v),
                };
            }
        }
        let l = &mut self.levels[level - 1];
        match role {
            Role::Independent => l.independent.insert(v),
            Role::Dominated => l.dominated.insert(v),
        };
        self.slots[v.index()] = Some(Slot { level, role });
    }

    /// Moves `v` to `(level, role)`, keeping `n_l` and `m_l` consistent.
    ///
    /// A level change costs one neighbor scan of `v` (see [`Self::recount_on_move`]).
    pub fn assign(&mut self, g: &DynamicGraph, v: VertexId, level: usize, role: Role) {
        assert!(level >= 1 && level <= self.k(), "level {level} out of range 1..={}", self.k());
        let old = self.slots[v.index()];
        self.place(v, level, role);
        if let Some(old) = old {
            if old.level != level {
                self.shift_n(old.level, level);
                self.recount_on_move(g, v, old.level, level);
            }
        }
    }

    fn shift_n(&mut self, from: usize, to: usize) {
        if to < from {
            for l in &mut self.levels[to..from] {
                l.live_n -= 1;
            }
        } else {
            for l in &mut self.levels[from..to] {
                l.live_n += 1;
            }
        }
    }

    /// Restores `m_l` after `v` moved from level `from` to level `to`.
    ///
    /// An edge `(v, w)` counts towards `m_l` for `l <= min(level(v), level(w))`;
    /// the change of that minimum is accumulated per level and applied once.
    pub fn recount_on_move(&mut self, g: &DynamicGraph, v: VertexId, from: usize, to: usize) {
        let k = self.k();
        let mut delta = vec![0i64; k + 2];
        let mut touched = false;
        for w in g.neighbors(v) {
            let lw = match self.slots[w.index()] {
                Some(s) => s.level,
                None => continue,
            };
            let before = from.min(lw);
            let after = to.min(lw);
            if before == after {
                continue;
            }
            touched = true;
            // Levels lo+1..=hi gain or lose the edge.
            let (lo, hi, sign) = if after < before { (after, before, -1) } else { (before, after, 1) };
            delta[lo + 1] += sign;
            delta[hi + 1] -= sign;
        }
        if !touched {
            return;
        }
        let mut run = 0i64;
        for (i, l) in self.levels.iter_mut().enumerate() {
            run += delta[i + 1];
            if run != 0 {
                l.live_m = (l.live_m as i64 + run) as usize;
            }
        }
    }

    /// Adds the contribution of a freshly inserted edge to `m_l`.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) {
        let top = self.slot_of(u).level.min(self.slot_of(v).level);
        for l in &mut self.levels[..top] {
            l.live_m += 1;
        }
    }

    /// Removes the contribution of an edge about to be deleted.
    pub fn remove_edge(&mut self, u: VertexId, v: VertexId) {
        let top = self.slot_of(u).level.min(self.slot_of(v).level);
        for l in &mut self.levels[..top] {
            l.live_m -= 1;
        }
    }

    /// Smallest level whose live counts drifted by more than a factor of two
    /// from its build-time snapshot.
    pub fn density_breach(&self) -> Option<usize> {
        self.levels.iter().position(Level::breached).map(|i| i + 1)
    }

    /// Drops levels `from..=k` and unassigns their vertices. Returns the
    /// unassigned vertices in level order.
    pub(crate) fn truncate(&mut self, from: usize) -> Vec<VertexId> {
        let mut freed = Vec::new();
        for l in self.levels.drain(from - 1..) {
            freed.extend(l.independent.iter().copied());
            freed.extend(l.dominated.iter().copied());
        }
        for &v in &freed {
            self.slots[v.index()] = None;
        }
        freed
    }

    /// One line per level: `level i: n_i m_i |I_i| |N_i| snapshot_n snapshot_m`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, l) in self.levels.iter().enumerate() {
            let _ = writeln!(
                out,
                "level {}: {} {} {} {} {} {}",
                i + 1,
                l.live_n,
                l.live_m,
                l.independent.len(),
                l.dominated.len(),
                l.snapshot_n,
                l.snapshot_m
            );
        }
        out
    }
}
