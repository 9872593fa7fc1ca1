//! Independent oracles for the integration suites.
//!
//! Everything here re-derives its answers from first principles:
//! backtracking product search for families, its own pairwise joint tower,
//! dense GF(2) elimination, and subset enumeration for cycles. Library
//! results are checked against this second route, never against
//! themselves.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use ctxkit::model::EmpiricalModel;
use ctxkit::scenario::{build_scenario, intersect, restrict_section, MeasIdx, Scenario};
use ctxkit::zoo::zoo;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Parses a zoo entry into its model.
pub fn zoo_model(name: &str) -> EmpiricalModel {
    zoo(name).unwrap().parse().unwrap().model
}

// --- compatible-family oracle -------------------------------------------

fn sections_agree(
    scenario: &Scenario,
    model: &EmpiricalModel,
    a: (usize, usize),
    b: (usize, usize),
) -> bool {
    let shared = intersect(&scenario.contexts()[a.0], &scenario.contexts()[b.0]);
    if shared.is_empty() {
        return true;
    }
    let left = restrict_section(&model.support(a.0)[a.1], &shared).unwrap();
    let right = restrict_section(&model.support(b.0)[b.1], &shared).unwrap();
    left == right
}

/// All compatible families, as one support index per context, found by
/// direct backtracking over the product of supports.
pub fn oracle_families(model: &EmpiricalModel) -> Vec<Vec<usize>> {
    let scenario = model.scenario();
    let n = scenario.n_contexts();
    let mut found = Vec::new();
    let mut choice = vec![0usize; n];

    fn descend(
        model: &EmpiricalModel,
        scenario: &Scenario,
        choice: &mut Vec<usize>,
        depth: usize,
        found: &mut Vec<Vec<usize>>,
    ) {
        if depth == scenario.n_contexts() {
            found.push(choice.clone());
            return;
        }
        for idx in 0..model.support(depth).len() {
            let ok = (0..depth)
                .all(|prev| sections_agree(scenario, model, (prev, choice[prev]), (depth, idx)));
            if ok {
                choice[depth] = idx;
                descend(model, scenario, choice, depth + 1, found);
            }
        }
    }

    descend(model, scenario, &mut choice, 0, &mut found);
    found
}

/// Truth table of logical contextuality: `table[c][i]` is true iff no
/// compatible family contains section `i` of context `c`.
pub fn oracle_lc_table(model: &EmpiricalModel) -> Vec<Vec<bool>> {
    let mut table: Vec<Vec<bool>> = (0..model.scenario().n_contexts())
        .map(|c| vec![true; model.support(c).len()])
        .collect();
    for family in oracle_families(model) {
        for (c, &idx) in family.iter().enumerate() {
            table[c][idx] = false;
        }
    }
    table
}

/// Strong contextuality: no compatible family at all.
pub fn oracle_sc(model: &EmpiricalModel) -> bool {
    oracle_families(model).is_empty()
}

// --- dense GF(2) elimination ---------------------------------------------

/// A dense GF(2) linear system solved by plain Gaussian elimination.
pub struct DenseSystem {
    width: usize,
    words: usize,
    rows: Vec<(Vec<u64>, bool)>,
}

impl DenseSystem {
    pub fn new(width: usize) -> DenseSystem {
        DenseSystem {
            width,
            words: width.div_ceil(64),
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, vars: &[usize], rhs: bool) {
        let mut bits = vec![0u64; self.words];
        for &v in vars {
            assert!(v < self.width);
            bits[v / 64] ^= 1 << (v % 64);
        }
        self.rows.push((bits, rhs));
    }

    pub fn pin(&mut self, var: usize, value: bool) {
        self.add_row(&[var], value);
    }

    fn eliminate(&self) -> (usize, bool) {
        let mut pivots: Vec<(usize, Vec<u64>, bool)> = Vec::new();
        let mut consistent = true;
        for (bits, rhs) in &self.rows {
            let mut bits = bits.clone();
            let mut rhs = *rhs;
            for (col, pivot, prhs) in &pivots {
                if bits[col / 64] >> (col % 64) & 1 == 1 {
                    for (w, p) in bits.iter_mut().zip(pivot) {
                        *w ^= p;
                    }
                    rhs ^= prhs;
                }
            }
            match bits
                .iter()
                .enumerate()
                .find(|(_, &w)| w != 0)
                .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
            {
                Some(col) => pivots.push((col, bits, rhs)),
                None if rhs => consistent = false,
                None => {}
            }
        }
        (pivots.len(), consistent)
    }

    pub fn feasible(&self) -> bool {
        self.eliminate().1
    }

    /// Dimension of the solution space of the homogeneous system.
    pub fn kernel_dim(&self) -> usize {
        assert!(self.rows.iter().all(|(_, rhs)| !rhs));
        self.width - self.eliminate().0
    }
}

// --- independent joint tower ----------------------------------------------

/// Pairwise joint levels re-derived from the definitions: level-k contexts
/// are intersecting pairs of level-(k-1) contexts, supports are the
/// agreement pullback. `levels[k-1]` describes level k.
pub struct OracleTower {
    pub levels: Vec<OracleLevel>,
}

pub struct OracleLevel {
    /// Parent context index pairs, ascending.
    pub contexts: Vec<(usize, usize)>,
    /// Parent support index pairs per context.
    pub supports: Vec<Vec<(usize, usize)>>,
}

/// Builds levels 1..=k of the joint tower directly from the definitions.
pub fn oracle_tower(model: &EmpiricalModel, k: usize) -> OracleTower {
    let scenario = model.scenario();
    let n0 = scenario.n_contexts();
    let mut levels: Vec<OracleLevel> = Vec::new();
    for level in 1..=k {
        let mut contexts = Vec::new();
        let mut supports = Vec::new();
        if level == 1 {
            for a in 0..n0 {
                for b in a + 1..n0 {
                    if intersect(&scenario.contexts()[a], &scenario.contexts()[b]).is_empty() {
                        continue;
                    }
                    let mut pairs = Vec::new();
                    for u in 0..model.support(a).len() {
                        for v in 0..model.support(b).len() {
                            if sections_agree(scenario, model, (a, u), (b, v)) {
                                pairs.push((u, v));
                            }
                        }
                    }
                    contexts.push((a, b));
                    supports.push(pairs);
                }
            }
        } else {
            let parent = &levels[level - 2];
            for a in 0..parent.contexts.len() {
                for b in a + 1..parent.contexts.len() {
                    let (pa, pb) = (parent.contexts[a], parent.contexts[b]);
                    let shared = shared_parent(pa, pb);
                    let Some(p) = shared else { continue };
                    let component = |ctx: (usize, usize), pair: (usize, usize)| {
                        if ctx.0 == p {
                            pair.0
                        } else {
                            pair.1
                        }
                    };
                    let mut pairs = Vec::new();
                    for (u, &su) in parent.supports[a].iter().enumerate() {
                        for (v, &sv) in parent.supports[b].iter().enumerate() {
                            if component(pa, su) == component(pb, sv) {
                                pairs.push((u, v));
                            }
                        }
                    }
                    contexts.push((a, b));
                    supports.push(pairs);
                }
            }
        }
        levels.push(OracleLevel { contexts, supports });
    }
    OracleTower { levels }
}

fn shared_parent(a: (usize, usize), b: (usize, usize)) -> Option<usize> {
    if a.0 == b.0 || a.0 == b.1 {
        Some(a.0)
    } else if a.1 == b.0 || a.1 == b.1 {
        Some(a.1)
    } else {
        None
    }
}

impl OracleTower {
    fn level(&self, k: usize) -> &OracleLevel {
        &self.levels[k - 1]
    }

    /// Level-k sections whose flattening contains base section (ctx, idx).
    pub fn containing(
        &self,
        model: &EmpiricalModel,
        k: usize,
        ctx: usize,
        idx: usize,
    ) -> Vec<(usize, usize)> {
        let mut marks: Vec<Vec<bool>> = (0..model.scenario().n_contexts())
            .map(|c| {
                (0..model.support(c).len())
                    .map(|i| c == ctx && i == idx)
                    .collect()
            })
            .collect();
        for level in 1..=k {
            let data = self.level(level);
            marks = data
                .contexts
                .iter()
                .zip(&data.supports)
                .map(|(&(a, b), pairs)| {
                    pairs
                        .iter()
                        .map(|&(u, v)| marks[a][u] || marks[b][v])
                        .collect()
                })
                .collect();
        }
        marks
            .iter()
            .enumerate()
            .flat_map(|(j, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &hit)| hit)
                    .map(move |(i, _)| (j, i))
            })
            .collect()
    }
}

// --- coboundary rows at a tower level --------------------------------------

/// The compatibility system of a tower level: one variable per possible
/// section, one parity row per (edge, realized restriction class).
pub struct LevelRows {
    pub width: usize,
    pub offsets: Vec<usize>,
    pub rows: Vec<Vec<usize>>,
}

impl LevelRows {
    pub fn var(&self, ctx: usize, idx: usize) -> usize {
        self.offsets[ctx] + idx
    }
}

/// Derives the level-k coboundary rows independently of the library.
/// `k = 0` works over the base model; higher levels over the oracle tower.
pub fn oracle_rows(model: &EmpiricalModel, tower: &OracleTower, k: usize) -> LevelRows {
    let scenario = model.scenario();
    let sizes: Vec<usize> = if k == 0 {
        (0..scenario.n_contexts())
            .map(|c| model.support(c).len())
            .collect()
    } else {
        tower.level(k).supports.iter().map(Vec::len).collect()
    };
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut width = 0;
    for &s in &sizes {
        offsets.push(width);
        width += s;
    }
    let mut rows = Vec::new();
    if k == 0 {
        for a in 0..scenario.n_contexts() {
            for b in a + 1..scenario.n_contexts() {
                let shared = intersect(&scenario.contexts()[a], &scenario.contexts()[b]);
                if shared.is_empty() {
                    continue;
                }
                let mut classes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
                for (c, off) in [(a, offsets[a]), (b, offsets[b])] {
                    for (i, s) in model.support(c).iter().enumerate() {
                        let key = restrict_section(s, &shared).unwrap().render(scenario);
                        classes.entry(key).or_default().push(off + i);
                    }
                }
                rows.extend(classes.into_values());
            }
        }
    } else {
        let data = tower.level(k);
        for a in 0..data.contexts.len() {
            for b in a + 1..data.contexts.len() {
                let Some(p) = shared_parent(data.contexts[a], data.contexts[b]) else {
                    continue;
                };
                let component = |ctx: (usize, usize), pair: (usize, usize)| {
                    if ctx.0 == p {
                        pair.0
                    } else {
                        pair.1
                    }
                };
                let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for (c, off) in [(a, offsets[a]), (b, offsets[b])] {
                    for (i, &pair) in data.supports[c].iter().enumerate() {
                        classes
                            .entry(component(data.contexts[c], pair))
                            .or_default()
                            .push(off + i);
                    }
                }
                rows.extend(classes.into_values());
            }
        }
    }
    LevelRows {
        width,
        offsets,
        rows,
    }
}

/// Whether the level-k obstruction at section (kctx, kidx) vanishes: the
/// coboundary system stays feasible with that section pinned to one and
/// its same-context siblings to zero.
pub fn oracle_vanishes_at(rows: &LevelRows, sizes: &[usize], kctx: usize, kidx: usize) -> bool {
    let mut system = DenseSystem::new(rows.width);
    for row in &rows.rows {
        system.add_row(row, false);
    }
    for i in 0..sizes[kctx] {
        system.pin(rows.var(kctx, i), i == kidx);
    }
    system.feasible()
}

fn level_sizes(model: &EmpiricalModel, tower: &OracleTower, k: usize) -> Vec<usize> {
    if k == 0 {
        (0..model.scenario().n_contexts())
            .map(|c| model.support(c).len())
            .collect()
    } else {
        tower.level(k).supports.iter().map(Vec::len).collect()
    }
}

/// Independent CLC at tower level k: the obstruction must be non-vanishing
/// at every level-k section containing the base section.
pub fn oracle_clc(model: &EmpiricalModel, tower: &OracleTower, k: usize, ctx: usize, idx: usize) -> bool {
    let rows = oracle_rows(model, tower, k);
    let sizes = level_sizes(model, tower, k);
    let containing = if k == 0 {
        vec![(ctx, idx)]
    } else {
        tower.containing(model, k, ctx, idx)
    };
    assert!(!containing.is_empty(), "flasqueness lifts every section");
    containing
        .iter()
        .all(|&(j, i)| !oracle_vanishes_at(&rows, &sizes, j, i))
}

/// Independent CSC at tower level k: non-vanishing at every level-k section.
pub fn oracle_csc(model: &EmpiricalModel, tower: &OracleTower, k: usize) -> bool {
    let rows = oracle_rows(model, tower, k);
    let sizes = level_sizes(model, tower, k);
    (0..sizes.len()).all(|j| (0..sizes[j]).all(|i| !oracle_vanishes_at(&rows, &sizes, j, i)))
}

/// Base sections whose level-0 obstruction vanishes.
pub fn oracle_vanishing_sections(model: &EmpiricalModel) -> Vec<(usize, usize)> {
    let tower = OracleTower { levels: Vec::new() };
    let rows = oracle_rows(model, &tower, 0);
    let sizes = level_sizes(model, &tower, 0);
    let mut out = Vec::new();
    for c in 0..sizes.len() {
        for i in 0..sizes[c] {
            if oracle_vanishes_at(&rows, &sizes, c, i) {
                out.push((c, i));
            }
        }
    }
    out
}

/// Kernel dimension of the level-0 coboundary (space of formal families).
pub fn oracle_kernel_dim(model: &EmpiricalModel) -> usize {
    let tower = OracleTower { levels: Vec::new() };
    let rows = oracle_rows(model, &tower, 0);
    let mut system = DenseSystem::new(rows.width);
    for row in &rows.rows {
        system.add_row(row, false);
    }
    system.kernel_dim()
}

// --- Z-closure and partial-family standardness ------------------------------

/// Verifies the Z-closure of one pair context's pullback support: whenever
/// (a,b), (c,b), (c,d) are possible, (a,d) must be. Returns the number of
/// Z instances checked.
pub fn check_no_z(pairs: &[(usize, usize)]) -> usize {
    let set: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
    let mut instances = 0;
    for &(a, b) in pairs {
        for &(c, b2) in pairs {
            if b2 != b || c == a {
                continue;
            }
            for &(c2, d) in pairs {
                if c2 != c || d == b {
                    continue;
                }
                instances += 1;
                assert!(
                    set.contains(&(a, d)),
                    "Z {:?} {:?} {:?} misses ({a},{d})",
                    (a, b),
                    (c, b),
                    (c, d)
                );
            }
        }
    }
    instances
}

/// Samples GF(2) combinations of one pair context's support and verifies
/// each 1-partial family (both restrictions collapse to single sections)
/// has a standard form inside the support. Returns the number of 1-partial
/// families exercised.
pub fn check_standardness(pairs: &[(usize, usize)], rng: &mut ChaCha8Rng, samples: usize) -> usize {
    let set: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
    let mut instances = 0;
    for _ in 0..samples {
        let mut picked = BTreeSet::new();
        let take = rng.gen_range(1..=pairs.len().min(6));
        for _ in 0..take {
            let pair = pairs[rng.gen_range(0..pairs.len())];
            if !picked.insert(pair) {
                picked.remove(&pair);
            }
        }
        let mut left: BTreeSet<usize> = BTreeSet::new();
        let mut right: BTreeSet<usize> = BTreeSet::new();
        for &(u, v) in &picked {
            if !left.insert(u) {
                left.remove(&u);
            }
            if !right.insert(v) {
                right.remove(&v);
            }
        }
        if left.len() != 1 || right.len() != 1 {
            continue;
        }
        instances += 1;
        let standard = (
            *left.iter().next().unwrap(),
            *right.iter().next().unwrap(),
        );
        assert!(
            set.contains(&standard),
            "1-partial family {picked:?} has no standard form {standard:?}"
        );
    }
    instances
}

// --- brute-force cycle enumeration ------------------------------------------

/// Every simple cycle of the cover graph, canonicalized as the library
/// reports them: rooted at the smallest vertex, second smaller than last.
pub fn brute_force_cycles(model: &EmpiricalModel, max_len: usize) -> BTreeSet<Vec<usize>> {
    let scenario = model.scenario();
    let n = scenario.n_contexts();
    assert!(n <= 8, "subset filter is for small graphs");
    let adjacent = |a: usize, b: usize| {
        !intersect(&scenario.contexts()[a], &scenario.contexts()[b]).is_empty()
    };
    let mut found = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        if members.len() < 3 || members.len() > max_len {
            continue;
        }
        let root = members[0];
        let rest = &members[1..];
        let mut order: Vec<usize> = rest.to_vec();
        permute(&mut order, 0, &mut |perm| {
            if perm[0] > perm[perm.len() - 1] {
                return;
            }
            let mut cycle = vec![root];
            cycle.extend_from_slice(perm);
            let closed = cycle
                .windows(2)
                .all(|w| adjacent(w[0], w[1]))
                && adjacent(cycle[cycle.len() - 1], cycle[0]);
            if closed {
                found.insert(cycle);
            }
        });
    }
    found
}

fn permute(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}

// --- random Graham-acyclic covers -------------------------------------------

/// A random connected cover built context by context so that each new
/// context meets the previous ones inside a single existing context (a
/// join-tree construction), which keeps the cover Graham-acyclic.
pub fn random_acyclic_scenario(seed: u64) -> Arc<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_contexts = rng.gen_range(2..=5usize);
    let mut next_meas = 0u32;
    let mut fresh = |count: usize| -> Vec<u32> {
        let out: Vec<u32> = (0..count).map(|i| next_meas + i as u32).collect();
        next_meas += count as u32;
        out
    };
    let first = rng.gen_range(2..=3);
    let mut contexts: Vec<Vec<u32>> = vec![fresh(first)];
    while contexts.len() < n_contexts {
        let parent = contexts[rng.gen_range(0..contexts.len())].clone();
        // Strict subset of the parent keeps the antichain property.
        let keep = rng.gen_range(1..parent.len());
        let mut members: Vec<u32> = parent.into_iter().take(keep).collect();
        let extra = rng.gen_range(1..=2);
        members.extend(fresh(extra));
        contexts.push(members);
    }
    let names: Vec<String> = (0..next_meas).map(|m| format!("m{m:02}")).collect();
    let mut outcomes = BTreeMap::new();
    for name in &names {
        outcomes.insert(name.clone(), vec!["0".to_string(), "1".to_string()]);
    }
    let rendered: Vec<Vec<String>> = contexts
        .iter()
        .map(|members| {
            members
                .iter()
                .map(|&m| names[m as usize].clone())
                .collect()
        })
        .collect();
    build_scenario(&names, &outcomes, &rendered).expect("join-tree cover validates")
}

// --- hypergraph isomorphism (equation-system renaming) ----------------------

/// Whether two equation systems (rows as variable index sets) coincide up
/// to a bijective renaming of variables.
pub fn systems_isomorphic(a: &[BTreeSet<usize>], b: &[BTreeSet<usize>]) -> bool {
    let vars = |rows: &[BTreeSet<usize>]| -> Vec<usize> {
        let set: BTreeSet<usize> = rows.iter().flatten().copied().collect();
        set.into_iter().collect()
    };
    let (va, vb) = (vars(a), vars(b));
    if a.len() != b.len() || va.len() != vb.len() {
        return false;
    }
    // Signature: sorted sizes of the rows a variable appears in.
    let signature = |rows: &[BTreeSet<usize>], v: usize| -> Vec<usize> {
        let mut sizes: Vec<usize> = rows
            .iter()
            .filter(|row| row.contains(&v))
            .map(BTreeSet::len)
            .collect();
        sizes.sort_unstable();
        sizes
    };
    let sig_a: BTreeMap<usize, Vec<usize>> =
        va.iter().map(|&v| (v, signature(a, v))).collect();
    let sig_b: BTreeMap<usize, Vec<usize>> =
        vb.iter().map(|&v| (v, signature(b, v))).collect();
    let rows_b: BTreeSet<&BTreeSet<usize>> = b.iter().collect();

    fn assign(
        order: &[usize],
        at: usize,
        mapping: &mut BTreeMap<usize, usize>,
        used: &mut BTreeSet<usize>,
        a: &[BTreeSet<usize>],
        rows_b: &BTreeSet<&BTreeSet<usize>>,
        vb: &[usize],
        sig_a: &BTreeMap<usize, Vec<usize>>,
        sig_b: &BTreeMap<usize, Vec<usize>>,
    ) -> bool {
        if at == order.len() {
            let mapped: Vec<BTreeSet<usize>> = a
                .iter()
                .map(|row| row.iter().map(|v| mapping[v]).collect())
                .collect();
            let mut counts: BTreeMap<&BTreeSet<usize>, isize> = BTreeMap::new();
            for row in &mapped {
                *counts.entry(row).or_default() += 1;
            }
            for row in rows_b {
                *counts.entry(row).or_default() -= 1;
            }
            return counts.values().all(|&c| c == 0);
        }
        let v = order[at];
        for &w in vb {
            if used.contains(&w) || sig_a[&v] != sig_b[&w] {
                continue;
            }
            mapping.insert(v, w);
            used.insert(w);
            if assign(order, at + 1, mapping, used, a, rows_b, vb, sig_a, sig_b) {
                return true;
            }
            mapping.remove(&v);
            used.remove(&w);
        }
        false
    }

    assign(
        &va,
        0,
        &mut BTreeMap::new(),
        &mut BTreeSet::new(),
        a,
        &rows_b,
        &vb,
        &sig_a,
        &sig_b,
    )
}

// --- misc helpers -----------------------------------------------------------

/// Measurement subsets of each context, for readable assertion messages.
pub fn context_keys(scenario: &Scenario) -> Vec<String> {
    (0..scenario.n_contexts())
        .map(|c| scenario.context_key(c))
        .collect()
}

/// Resolves a context by its canonical key.
pub fn context_by_key(scenario: &Scenario, key: &str) -> usize {
    (0..scenario.n_contexts())
        .find(|&c| scenario.context_key(c) == key)
        .unwrap_or_else(|| panic!("no context {key}"))
}

/// Resolves a supported section by context key and rendered values.
pub fn section_by_key(model: &EmpiricalModel, key: &str, values: &str) -> (usize, usize) {
    let scenario = model.scenario();
    let ctx = context_by_key(scenario, key);
    let idx = model
        .support(ctx)
        .iter()
        .position(|s| s.render_values(scenario) == values)
        .unwrap_or_else(|| panic!("no section {values} in {key}"));
    (ctx, idx)
}

/// The members of a context as measurement indices, used by generators.
pub fn context_members(scenario: &Scenario, c: usize) -> &[MeasIdx] {
    &scenario.contexts()[c]
}
