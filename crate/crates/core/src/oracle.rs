//! Brute-force ground truth. Everything here reads the adjacency directly and
//! never touches the query counter.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::graph::{DynamicGraph, VertexId};
use crate::levels::{LevelSet, Role};

pub fn is_independent(g: &DynamicGraph, set: &[VertexId]) -> bool {
    let member: HashSet<VertexId> = set.iter().copied().collect();
    set.iter().all(|&v| !g.raw_neighbors(v).iter().any(|w| member.contains(w)))
}

pub fn is_maximal_independent(g: &DynamicGraph, set: &[VertexId]) -> bool {
    let member: HashSet<VertexId> = set.iter().copied().collect();
    if set.iter().any(|&v| g.raw_neighbors(v).iter().any(|w| member.contains(w))) {
        return false;
    }
    g.vertices().filter(|v| !member.contains(v)).all(|v| g.raw_neighbors(v).iter().any(|w| member.contains(w)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    Partition,
    Independence,
    Domination,
    Maximality,
    CounterN,
    CounterM,
    Monotonicity,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Invariant::Partition => "partition",
            Invariant::Independence => "independence",
            Invariant::Domination => "domination",
            Invariant::Maximality => "maximality",
            Invariant::CounterN => "counter n",
            Invariant::CounterM => "counter m",
            Invariant::Monotonicity => "monotonicity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub invariant: Invariant,
    /// Level the violation was found at, when it concerns one.
    pub level: Option<usize>,
    pub witness: Vec<u32>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    fn push(&mut self, invariant: Invariant, level: Option<usize>, witness: Vec<u32>, detail: String) {
        self.violations.push(Violation { invariant, level, witness, detail });
    }

    pub fn has(&self, invariant: Invariant) -> bool {
        self.violations.iter().any(|v| v.invariant == invariant)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            return f.write_str("audit passed");
        }
        writeln!(f, "audit failed with {} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.invariant)?;
        if let Some(l) = self.level {
            write!(f, " at level {l}")?;
        }
        write!(f, ": {} (witness {:?})", self.detail, self.witness)
    }
}

/// Checks every structural invariant of `ls` against `g`.
pub fn audit_levels(g: &DynamicGraph, ls: &LevelSet) -> AuditReport {
    let mut report = AuditReport::default();
    let n = g.vertex_count();
    let k = ls.k();

    // Partition: slots agree with the per-level sets, each vertex exactly once.
    let mut seen = vec![0u32; n];
    for (i, l) in ls.levels().iter().enumerate() {
        let level = i + 1;
        for (set, role) in [(l.independent(), Role::Independent), (l.dominated(), Role::Dominated)] {
            for &v in set {
                seen[v.index()] += 1;
                match ls.slot(v) {
                    Some(s) if s.level == level && s.role == role => {}
                    other => report.push(
                        Invariant::Partition,
                        Some(level),
                        vec![v.get()],
                        format!("listed as {role:?} here but slot is {other:?}"),
                    ),
                }
            }
        }
    }
    for v in g.vertices() {
        let count = seen[v.index()];
        if count != 1 {
            report.push(
                Invariant::Partition,
                ls.slot(v).map(|s| s.level),
                vec![v.get()],
                format!("appears in {count} level sets"),
            );
        }
        if let Some(s) = ls.slot(v) {
            if s.level == 0 || s.level > k {
                report.push(Invariant::Partition, None, vec![v.get()], format!("level {} outside 1..={k}", s.level));
            }
        }
    }

    // Independence of the union of the independent sets.
    for e in g.raw_edges() {
        if ls.is_independent(e.lo()) && ls.is_independent(e.hi()) {
            report.push(
                Invariant::Independence,
                None,
                vec![e.lo().get(), e.hi().get()],
                "edge joins two independent vertices".into(),
            );
        }
    }

    // Domination: a dominated vertex has an independent neighbor at its own level.
    for (i, l) in ls.levels().iter().enumerate() {
        for &v in l.dominated() {
            let ok = g.raw_neighbors(v).iter().any(|&w| l.independent().contains(&w));
            if !ok {
                report.push(
                    Invariant::Domination,
                    Some(i + 1),
                    vec![v.get()],
                    "no independent neighbor at this level".into(),
                );
            }
        }
    }

    // Counter soundness against a from-scratch recount.
    let level_of = |v: VertexId| ls.slot(v).map_or(0, |s| s.level);
    let mut n_at = vec![0usize; k + 2];
    for v in g.vertices() {
        n_at[level_of(v).min(k + 1)] += 1;
    }
    let mut m_at = vec![0usize; k + 2];
    for e in g.raw_edges() {
        m_at[level_of(e.lo()).min(level_of(e.hi())).min(k + 1)] += 1;
    }
    let (mut n_ge, mut m_ge) = (0usize, 0usize);
    let mut expected = vec![(0, 0); k + 1];
    for i in (1..=k).rev() {
        n_ge += n_at[i] + if i == k { n_at[k + 1] } else { 0 };
        m_ge += m_at[i] + if i == k { m_at[k + 1] } else { 0 };
        expected[i] = (n_ge, m_ge);
    }
    for (i, l) in ls.levels().iter().enumerate() {
        let (en, em) = expected[i + 1];
        if l.n() != en {
            report.push(Invariant::CounterN, Some(i + 1), vec![], format!("live n = {}, recount = {en}", l.n()));
        }
        if l.m() != em {
            report.push(Invariant::CounterM, Some(i + 1), vec![], format!("live m = {}, recount = {em}", l.m()));
        }
    }
    if let Some(first) = ls.levels().first() {
        if first.n() != n || first.m() != g.edge_count() {
            report.push(
                Invariant::Monotonicity,
                Some(1),
                vec![],
                format!("level 1 holds ({}, {}), graph has ({n}, {})", first.n(), first.m(), g.edge_count()),
            );
        }
    }
    for (i, pair) in ls.levels().windows(2).enumerate() {
        if pair[1].n() > pair[0].n() || pair[1].m() > pair[0].m() {
            report.push(Invariant::Monotonicity, Some(i + 2), vec![], "counts increase with depth".into());
        }
    }

    // Redundant given the above, but it keeps the report honest if they are wrong.
    if report.violations.is_empty() && !is_maximal_independent(g, &ls.mis()) {
        report.push(Invariant::Maximality, None, vec![], "union of independent sets is not maximal".into());
    }

    report.passed = report.violations.is_empty();
    report
}
