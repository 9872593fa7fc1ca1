//! Shared compatibility structure for family search and coboundary rows.
//!
//! A [`CompatView`] abstracts what both the base model and every tower level
//! look like to the solvers: a list of contexts with support sizes, and per
//! intersecting pair a classification of each side's supported sections by
//! their restriction to the shared part. Two sections on opposite sides of
//! an edge agree on the intersection exactly when their classes match.
//!
//! Keeping the analyses on this view means the family backtracker and the
//! GF(2) coboundary builder are written once and reused at every level.

/// One intersecting context pair with per-side restriction classes.
///
/// `class_a[i]` is the class of side `a`'s `i`-th supported section; classes
/// on both sides index the same list of observed restrictions, so agreement
/// on the intersection is class equality.
#[derive(Debug, Clone)]
pub(crate) struct EdgeClasses {
    pub a: usize,
    pub b: usize,
    pub class_a: Vec<u32>,
    pub class_b: Vec<u32>,
    pub n_classes: u32,
}

/// Compatibility skeleton of a model or a tower level.
#[derive(Debug, Clone)]
pub(crate) struct CompatView {
    pub sup_sizes: Vec<usize>,
    pub edges: Vec<EdgeClasses>,
    /// Per context, the indices of incident edges.
    pub adj: Vec<Vec<usize>>,
}

impl CompatView {
    pub fn new(sup_sizes: Vec<usize>, edges: Vec<EdgeClasses>) -> CompatView {
        let mut adj = vec![Vec::new(); sup_sizes.len()];
        for (e, edge) in edges.iter().enumerate() {
            debug_assert_eq!(edge.class_a.len(), sup_sizes[edge.a]);
            debug_assert_eq!(edge.class_b.len(), sup_sizes[edge.b]);
            adj[edge.a].push(e);
            adj[edge.b].push(e);
        }
        CompatView {
            sup_sizes,
            edges,
            adj,
        }
    }

    pub fn n_ctx(&self) -> usize {
        self.sup_sizes.len()
    }

    /// Class of a section on one side of an edge.
    fn class_of(&self, edge: usize, ctx: usize, idx: u32) -> u32 {
        let e = &self.edges[edge];
        if ctx == e.a {
            e.class_a[idx as usize]
        } else {
            debug_assert_eq!(ctx, e.b);
            e.class_b[idx as usize]
        }
    }

    /// Deterministic context ordering for backtracking: the pinned context
    /// first, then ascending support size, ties by index.
    fn search_order(&self, pin_ctx: Option<usize>) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_ctx()).collect();
        order.sort_by_key(|&c| (self.sup_sizes[c], c));
        if let Some(p) = pin_ctx {
            order.retain(|&c| c != p);
            order.insert(0, p);
        }
        order
    }

    /// Finds the first compatible selection (one support index per context),
    /// optionally with one context pinned to a fixed support index.
    ///
    /// Deterministic: the first solution in the fixed search order.
    pub fn find_family(&self, pin: Option<(usize, u32)>) -> Option<Vec<u32>> {
        let mut result = None;
        self.walk_families(pin, &mut |sel| {
            result = Some(sel.to_vec());
            false
        });
        result
    }

    /// Enumerates every compatible selection in deterministic order. The
    /// visitor returns `false` to stop early.
    pub fn for_each_family(&self, visit: &mut dyn FnMut(&[u32]) -> bool) {
        self.walk_families(None, visit);
    }

    fn walk_families(
        &self,
        pin: Option<(usize, u32)>,
        visit: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        let n = self.n_ctx();
        if n == 0 {
            return visit(&[]);
        }
        let order = self.search_order(pin.map(|(c, _)| c));
        let mut placed = vec![false; n];
        let mut sel = vec![0u32; n];
        self.place(&order, 0, pin, &mut placed, &mut sel, visit)
    }

    /// Returns false when the visitor requested an early stop.
    fn place(
        &self,
        order: &[usize],
        depth: usize,
        pin: Option<(usize, u32)>,
        placed: &mut [bool],
        sel: &mut [u32],
        visit: &mut dyn FnMut(&[u32]) -> bool,
    ) -> bool {
        if depth == order.len() {
            return visit(sel);
        }
        let ctx = order[depth];
        let choices: Vec<u32> = match pin {
            Some((p, idx)) if p == ctx => vec![idx],
            _ => (0..self.sup_sizes[ctx] as u32).collect(),
        };
        placed[ctx] = true;
        for idx in choices {
            let consistent = self.adj[ctx].iter().all(|&e| {
                let edge = &self.edges[e];
                let other = if edge.a == ctx { edge.b } else { edge.a };
                !placed[other]
                    || self.class_of(e, ctx, idx) == self.class_of(e, other, sel[other])
            });
            if consistent {
                sel[ctx] = idx;
                if !self.place(order, depth + 1, pin, placed, sel, visit) {
                    placed[ctx] = false;
                    return false;
                }
            }
        }
        placed[ctx] = false;
        true
    }

    /// Flat variable offsets: variable of (context c, support index i) is
    /// `offsets[c] + i`; the final entry is the total variable count.
    pub fn var_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.n_ctx() + 1);
        let mut acc = 0;
        for &s in &self.sup_sizes {
            offsets.push(acc);
            acc += s;
        }
        offsets.push(acc);
        offsets
    }

    /// Coboundary rows: one row per edge per occupied restriction class,
    /// listing the flat variables of the sections on both sides that land in
    /// that class. Classes observed on neither side produce no row.
    pub fn coboundary_rows(&self) -> Vec<Vec<usize>> {
        let offsets = self.var_offsets();
        let mut rows = Vec::new();
        for edge in &self.edges {
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); edge.n_classes as usize];
            for (i, &cl) in edge.class_a.iter().enumerate() {
                by_class[cl as usize].push(offsets[edge.a] + i);
            }
            for (i, &cl) in edge.class_b.iter().enumerate() {
                by_class[cl as usize].push(offsets[edge.b] + i);
            }
            rows.extend(by_class.into_iter().filter(|r| !r.is_empty()));
        }
        rows
    }
}
