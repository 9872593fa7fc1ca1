//! Measurement scenarios and the sheaf of events.
//!
//! A *measurement scenario* is a finite set of measurements `X`, a nonempty
//! finite outcome set `O_m` for each measurement, and a *cover* `M` of
//! maximal jointly-measurable subsets of `X` (the *contexts*). The cover is
//! an antichain whose union is all of `X`.
//!
//! The *sheaf of events* assigns to every measurement subset `U` the product
//! `E(U) = prod_{m in U} O_m`; its elements are [`Section`]s, and restriction
//! is projection onto a smaller domain.
//!
//! This module also hosts the cover combinatorics that the analysis layers
//! build on: the intersection graph of contexts, connectivity, Graham
//! reduction (the acyclicity test for covers), and the Bell-type check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a measurement inside its scenario's canonical ordering.
pub type MeasIdx = u32;

/// Index of an outcome inside a measurement's canonical outcome ordering.
pub type OutIdx = u32;

/// Index of a context inside its scenario's canonical context ordering.
pub type CtxIdx = usize;

/// Characters that may not appear in measurement or outcome identifiers.
///
/// Commas separate measurements inside context keys and CLI section syntax,
/// and the equals sign separates measurements from outcomes, so allowing them
/// inside identifiers would make those encodings ambiguous.
fn identifier_ok(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c != ',' && c != '=' && !c.is_whitespace() && !c.is_control())
}

/// A validated measurement scenario.
///
/// All identifiers are canonically ordered at construction (lexicographically
/// by name) and internal processing uses dense indices into those orderings,
/// so every derived artefact is stable across runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    measurements: Vec<String>,
    outcomes: Vec<Vec<String>>,
    contexts: Vec<Vec<MeasIdx>>,
}

impl Scenario {
    /// The canonically ordered measurement names.
    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    /// The canonically ordered outcome labels of one measurement.
    pub fn outcomes(&self, m: MeasIdx) -> &[String] {
        &self.outcomes[m as usize]
    }

    /// Number of measurements.
    pub fn n_measurements(&self) -> usize {
        self.measurements.len()
    }

    /// The contexts, each a sorted list of measurement indices, in canonical
    /// order.
    pub fn contexts(&self) -> &[Vec<MeasIdx>] {
        &self.contexts
    }

    /// Number of contexts.
    pub fn n_contexts(&self) -> usize {
        self.contexts.len()
    }

    /// Resolves a measurement name to its index.
    pub fn measurement_index(&self, name: &str) -> Result<MeasIdx> {
        self.measurements
            .binary_search_by(|probe| probe.as_str().cmp(name))
            .map(|i| i as MeasIdx)
            .map_err(|_| Error::UnknownMeasurement { name: name.into() })
    }

    /// Resolves an outcome label of a measurement to its index.
    pub fn outcome_index(&self, m: MeasIdx, label: &str) -> Option<OutIdx> {
        self.outcomes[m as usize]
            .iter()
            .position(|o| o == label)
            .map(|i| i as OutIdx)
    }

    /// The canonical key of a measurement subset: names joined with commas in
    /// canonical order.
    pub fn subset_key(&self, subset: &[MeasIdx]) -> String {
        let names: Vec<&str> = subset
            .iter()
            .map(|&m| self.measurements[m as usize].as_str())
            .collect();
        names.join(",")
    }

    /// The canonical key of a context.
    pub fn context_key(&self, c: CtxIdx) -> String {
        self.subset_key(&self.contexts[c])
    }

    /// Finds the context equal to the given sorted measurement set.
    pub fn context_index(&self, members: &[MeasIdx]) -> Option<CtxIdx> {
        self.contexts.iter().position(|c| c == members)
    }

    /// Sorted measurement indices for a list of names.
    pub fn resolve_subset(&self, names: &[impl AsRef<str>]) -> Result<Vec<MeasIdx>> {
        let mut subset: Vec<MeasIdx> = names
            .iter()
            .map(|n| self.measurement_index(n.as_ref()))
            .collect::<Result<_>>()?;
        subset.sort_unstable();
        subset.dedup();
        subset
            .iter()
            .all(|&m| (m as usize) < self.measurements.len())
            .then_some(())
            .ok_or(Error::ValidationFailure {
                detail: "subset resolution out of range".into(),
            })?;
        Ok(subset)
    }

    /// Number of events over a measurement subset, saturating at `u64::MAX`.
    pub fn event_count(&self, subset: &[MeasIdx]) -> u64 {
        subset.iter().fold(1u64, |acc, &m| {
            acc.saturating_mul(self.outcomes[m as usize].len() as u64)
        })
    }
}

/// A local section: an assignment of one outcome to every measurement of its
/// domain. The domain is a sorted list of measurement indices and the values
/// are aligned with it.
///
/// Sections compare by domain and assignment, so two sections are equal
/// exactly when they assign the same outcomes over the same measurements.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Section {
    domain: Vec<MeasIdx>,
    values: Vec<OutIdx>,
}

impl Section {
    /// Builds a section from a sorted domain and aligned outcome indices.
    pub fn new(domain: Vec<MeasIdx>, values: Vec<OutIdx>) -> Section {
        debug_assert_eq!(domain.len(), values.len());
        debug_assert!(domain.windows(2).all(|w| w[0] < w[1]));
        Section { domain, values }
    }

    /// The sorted measurement indices this section assigns outcomes to.
    pub fn domain(&self) -> &[MeasIdx] {
        &self.domain
    }

    /// The outcome indices, aligned with [`Section::domain`].
    pub fn values(&self) -> &[OutIdx] {
        &self.values
    }

    /// The outcome assigned to a measurement, if it is in the domain.
    pub fn value_at(&self, m: MeasIdx) -> Option<OutIdx> {
        self.domain
            .binary_search(&m)
            .ok()
            .map(|pos| self.values[pos])
    }

    /// Renders the outcome labels joined with commas, in domain order.
    pub fn render_values(&self, scenario: &Scenario) -> String {
        self.domain
            .iter()
            .zip(&self.values)
            .map(|(&m, &o)| scenario.outcomes(m)[o as usize].clone())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Renders `domain=values` using the scenario's labels.
    pub fn render(&self, scenario: &Scenario) -> String {
        format!(
            "{}={}",
            scenario.subset_key(&self.domain),
            self.render_values(scenario)
        )
    }
}

/// The intersection graph of a cover: one vertex per context and an edge
/// between two distinct contexts whenever they share a measurement.
#[derive(Debug, Clone)]
pub struct CoverGraph {
    n: usize,
    edges: Vec<(CtxIdx, CtxIdx)>,
    intersections: Vec<Vec<MeasIdx>>,
    adjacency: Vec<Vec<CtxIdx>>,
}

impl CoverGraph {
    /// Number of vertices (contexts).
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// Edges as ordered pairs `(i, j)` with `i < j`, canonically sorted.
    pub fn edges(&self) -> &[(CtxIdx, CtxIdx)] {
        &self.edges
    }

    /// The measurement intersection behind each edge, aligned with
    /// [`CoverGraph::edges`].
    pub fn intersection(&self, edge: usize) -> &[MeasIdx] {
        &self.intersections[edge]
    }

    /// Neighbours of a vertex in ascending order.
    pub fn neighbours(&self, v: CtxIdx) -> &[CtxIdx] {
        &self.adjacency[v]
    }

    /// Whether two vertices are adjacent.
    pub fn adjacent(&self, a: CtxIdx, b: CtxIdx) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Index of the edge between two adjacent vertices.
    pub fn edge_index(&self, a: CtxIdx, b: CtxIdx) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).ok()
    }

    /// Whether the graph is connected (the empty graph counts as connected).
    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Connected components as ascending vertex lists, ordered by their
    /// smallest vertex.
    pub fn components(&self) -> Vec<Vec<CtxIdx>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}]",
            self.domain
                .iter()
                .zip(&self.values)
                .map(|(m, o)| format!("{m}->{o}"))
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// Validates and canonicalizes a scenario.
///
/// Measurements, outcome sets, and contexts are sorted lexicographically by
/// identifier; all later processing uses indices into these orderings.
///
/// Errors: [`Error::AntichainViolation`] when one context contains another,
/// [`Error::CoverageGap`] when some measurement is in no context (or no
/// measurements were declared at all), [`Error::EmptyOutcomeSet`],
/// [`Error::DuplicateContext`], [`Error::UnknownMeasurement`] for a context
/// naming an undeclared measurement, and [`Error::ReservedCharacter`] for
/// identifiers that would break the textual encodings.
pub fn build_scenario(
    measurements: &[impl AsRef<str>],
    outcomes: &BTreeMap<String, Vec<String>>,
    contexts: &[Vec<String>],
) -> Result<Arc<Scenario>> {
    let mut names: Vec<String> = measurements.iter().map(|m| m.as_ref().to_owned()).collect();
    names.sort();
    names.dedup();
    if names.is_empty() {
        return Err(Error::CoverageGap { missing: vec![] });
    }
    for name in &names {
        if !identifier_ok(name) {
            return Err(Error::ReservedCharacter { name: name.clone() });
        }
    }

    let mut outcome_table: Vec<Vec<String>> = Vec::with_capacity(names.len());
    for name in &names {
        let labels = outcomes
            .get(name)
            .ok_or_else(|| Error::EmptyOutcomeSet {
                measurement: name.clone(),
            })?;
        let mut labels: Vec<String> = labels.clone();
        labels.sort();
        labels.dedup();
        if labels.is_empty() {
            return Err(Error::EmptyOutcomeSet {
                measurement: name.clone(),
            });
        }
        for label in &labels {
            if !identifier_ok(label) {
                return Err(Error::ReservedCharacter {
                    name: label.clone(),
                });
            }
        }
        outcome_table.push(labels);
    }
    for extra in outcomes.keys() {
        if names.binary_search(extra).is_err() {
            return Err(Error::UnknownMeasurement {
                name: extra.clone(),
            });
        }
    }

    let index_of = |name: &str| -> Result<MeasIdx> {
        names
            .binary_search_by(|probe| probe.as_str().cmp(name))
            .map(|i| i as MeasIdx)
            .map_err(|_| Error::UnknownMeasurement { name: name.into() })
    };

    let mut ctxs: Vec<Vec<MeasIdx>> = Vec::with_capacity(contexts.len());
    for context in contexts {
        if context.is_empty() {
            return Err(Error::EmptyContext);
        }
        let mut members: Vec<MeasIdx> = context
            .iter()
            .map(|m| index_of(m))
            .collect::<Result<_>>()?;
        members.sort_unstable();
        members.dedup();
        ctxs.push(members);
    }
    ctxs.sort();
    for pair in ctxs.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateContext {
                key: pair[0]
                    .iter()
                    .map(|&m| names[m as usize].clone())
                    .collect::<Vec<_>>()
                    .join(","),
            });
        }
    }

    let scenario = Scenario {
        measurements: names,
        outcomes: outcome_table,
        contexts: ctxs,
    };

    // Antichain: with contexts sorted, a subset relation can hold between any
    // pair, so check all pairs (covers are small).
    for i in 0..scenario.contexts.len() {
        for j in 0..scenario.contexts.len() {
            if i != j && is_subset(&scenario.contexts[i], &scenario.contexts[j]) {
                return Err(Error::AntichainViolation {
                    sub: scenario.context_key(i),
                    sup: scenario.context_key(j),
                });
            }
        }
    }

    // Coverage: the union of contexts must be all of X.
    let mut covered = vec![false; scenario.measurements.len()];
    for context in &scenario.contexts {
        for &m in context {
            covered[m as usize] = true;
        }
    }
    let missing: Vec<String> = covered
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| scenario.measurements[i].clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::CoverageGap { missing });
    }

    Ok(Arc::new(scenario))
}

fn is_subset(a: &[MeasIdx], b: &[MeasIdx]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Sorted intersection of two sorted measurement lists.
pub fn intersect(a: &[MeasIdx], b: &[MeasIdx]) -> Vec<MeasIdx> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// All events over a measurement subset: the full product of outcome sets,
/// enumerated canonically (first measurement most significant). The empty
/// subset yields the single empty section.
///
/// Errors with [`Error::UnknownMeasurement`] when the subset mentions an
/// index outside the scenario.
pub fn event_sections(scenario: &Scenario, subset: &[MeasIdx]) -> Result<Vec<Section>> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &m in &sorted {
        if m as usize >= scenario.n_measurements() {
            return Err(Error::UnknownMeasurement {
                name: format!("#{m}"),
            });
        }
    }
    let sizes: Vec<usize> = sorted
        .iter()
        .map(|&m| scenario.outcomes(m).len())
        .collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut odometer = vec![0u32; sorted.len()];
    loop {
        out.push(Section::new(sorted.clone(), odometer.clone()));
        // Advance the least significant (last) position.
        let mut pos = sorted.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            odometer[pos] += 1;
            if (odometer[pos] as usize) < sizes[pos] {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

/// Projects a section onto a subset of its domain.
///
/// Errors with [`Error::NotSubdomain`] when `target` is not contained in the
/// section's domain.
pub fn restrict_section(section: &Section, target: &[MeasIdx]) -> Result<Section> {
    let mut sorted = target.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut values = Vec::with_capacity(sorted.len());
    for &m in &sorted {
        match section.value_at(m) {
            Some(v) => values.push(v),
            None => {
                return Err(Error::NotSubdomain {
                    target: sorted.iter().map(|x| format!("#{x}")).collect(),
                })
            }
        }
    }
    Ok(Section::new(sorted, values))
}

/// Builds the intersection graph of the scenario's cover.
pub fn intersection_graph(scenario: &Scenario) -> CoverGraph {
    let n = scenario.n_contexts();
    let mut edges = Vec::new();
    let mut intersections = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let shared = intersect(&scenario.contexts()[i], &scenario.contexts()[j]);
            if !shared.is_empty() {
                edges.push((i, j));
                intersections.push(shared);
            }
        }
    }
    let mut adjacency = vec![Vec::new(); n];
    for &(i, j) in &edges {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    CoverGraph {
        n,
        edges,
        intersections,
        adjacency,
    }
}

/// Whether the cover's intersection graph is connected.
pub fn is_connected(scenario: &Scenario) -> bool {
    intersection_graph(scenario).is_connected()
}

/// Connected components of the cover, as lists of context indices.
///
/// Analysis entry points reject disconnected covers; callers that want the
/// per-component treatment can split with this helper and rebuild
/// sub-scenarios via [`crate::model::restrict_model`].
pub fn components(scenario: &Scenario) -> Vec<Vec<CtxIdx>> {
    intersection_graph(scenario).components()
}

/// Graham reduction: repeatedly delete any measurement occurring in exactly
/// one context and any context contained in another, until fixpoint.
///
/// Returns whether the residual cover is empty (the cover is *acyclic*) plus
/// the residual itself, as sorted measurement-name lists, for diagnostics.
/// Deletions are applied lowest-index-first; the verdict is order-independent.
pub fn graham_reduce(scenario: &Scenario) -> (bool, Vec<Vec<String>>) {
    let mut cover: Vec<BTreeSet<MeasIdx>> = scenario
        .contexts()
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    loop {
        // Count measurement occurrences.
        let mut occurrences: BTreeMap<MeasIdx, usize> = BTreeMap::new();
        for context in &cover {
            for &m in context {
                *occurrences.entry(m).or_default() += 1;
            }
        }
        if let Some((&m, _)) = occurrences.iter().find(|&(_, &count)| count == 1) {
            for context in &mut cover {
                context.remove(&m);
            }
            cover.retain(|c| !c.is_empty());
            continue;
        }
        let mut contained: Option<usize> = None;
        'outer: for i in 0..cover.len() {
            for j in 0..cover.len() {
                if i != j && cover[i].is_subset(&cover[j]) {
                    contained = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = contained {
            cover.remove(i);
            continue;
        }
        break;
    }
    let residual: Vec<Vec<String>> = cover
        .iter()
        .map(|c| {
            c.iter()
                .map(|&m| scenario.measurements()[m as usize].clone())
                .collect()
        })
        .collect();
    (residual.is_empty(), residual)
}

/// Bell-type check: given a partition of the measurements into parties, the
/// scenario is Bell-type when every context takes exactly one measurement
/// from each party and every such transversal choice appears in the cover.
///
/// Errors with [`Error::NotAPartition`] when the parts overlap, mention
/// unknown measurements, or fail to exhaust the measurement set.
pub fn is_bell_type(scenario: &Scenario, partition: &[Vec<String>]) -> Result<bool> {
    let mut seen = vec![false; scenario.n_measurements()];
    let mut parts: Vec<Vec<MeasIdx>> = Vec::with_capacity(partition.len());
    for part in partition {
        if part.is_empty() {
            return Err(Error::NotAPartition {
                detail: "empty part".into(),
            });
        }
        let mut resolved = Vec::with_capacity(part.len());
        for name in part {
            let m = scenario
                .measurement_index(name)
                .map_err(|_| Error::NotAPartition {
                    detail: format!("unknown measurement {name}"),
                })?;
            if seen[m as usize] {
                return Err(Error::NotAPartition {
                    detail: format!("measurement {name} appears in two parts"),
                });
            }
            seen[m as usize] = true;
            resolved.push(m);
        }
        resolved.sort_unstable();
        parts.push(resolved);
    }
    if !seen.iter().all(|&s| s) {
        let missing: Vec<String> = seen
            .iter()
            .enumerate()
            .filter(|(_, &s)| !s)
            .map(|(i, _)| scenario.measurements()[i].clone())
            .collect();
        return Err(Error::NotAPartition {
            detail: format!("measurements not in any part: {missing:?}"),
        });
    }

    // Each context must pick exactly one measurement from each part.
    for context in scenario.contexts() {
        for part in &parts {
            let picks = context
                .iter()
                .filter(|m| part.binary_search(m).is_ok())
                .count();
            if picks != 1 {
                return Ok(false);
            }
        }
        if context.len() != parts.len() {
            return Ok(false);
        }
    }

    // Every transversal must appear: contexts are distinct, so it is enough
    // to compare counts.
    let transversals = parts
        .iter()
        .try_fold(1u64, |acc, p| acc.checked_mul(p.len() as u64));
    match transversals {
        Some(count) => Ok(scenario.n_contexts() as u64 == count),
        None => Ok(false),
    }
}
