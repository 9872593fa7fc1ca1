//! Cycles in cover graphs, cycle-guided contextuality certificates, and the
//! randomized search harness.
//!
//! The decisive level of the obstruction ladder depends on the cycle
//! structure of the cover graph. On a cover that is itself a single
//! chordless cycle through n contexts, the ladder is conclusive at level
//! |M|−1. Otherwise a contextual section can often be certified on a small
//! restricted subcover: the smallest cycle through the section's context on
//! which the restricted model still blocks the section. Restricting first
//! keeps the decisive level at (cycle size − 1) instead of a bound derived
//! from the whole cover.
//!
//! The search harness samples random supports over a scenario, repairs them
//! to validity, and hunts for logically contextual sections that the ladder
//! misses up to a level cap; any such find is reported with a replayable
//! seed and the full model document.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::joint::tower;
use crate::model::{build_model, EmpiricalModel, Witness};
use crate::scenario::{
    build_scenario, event_sections, graham_reduce, intersection_graph, is_connected,
    restrict_section, CoverGraph, CtxIdx, Scenario, Section,
};

/// An ordered walk through distinct contexts with consecutive nonempty
/// intersections; optionally closed into a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    vertices: Vec<CtxIdx>,
    is_cycle: bool,
}

impl Path {
    /// Validates the walk against a cover graph.
    pub fn new(graph: &CoverGraph, vertices: Vec<CtxIdx>, is_cycle: bool) -> Result<Path> {
        let mut sorted = vertices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != vertices.len() || vertices.is_empty() {
            return Err(Error::ValidationFailure {
                detail: "path vertices must be distinct and nonempty".into(),
            });
        }
        for pair in vertices.windows(2) {
            if !graph.adjacent(pair[0], pair[1]) {
                return Err(Error::ValidationFailure {
                    detail: format!("contexts #{} and #{} do not intersect", pair[0], pair[1]),
                });
            }
        }
        if is_cycle {
            if vertices.len() < 3 {
                return Err(Error::ValidationFailure {
                    detail: "cycles need at least three contexts".into(),
                });
            }
            if !graph.adjacent(vertices[0], *vertices.last().unwrap()) {
                return Err(Error::ValidationFailure {
                    detail: "cycle endpoints do not intersect".into(),
                });
            }
        }
        Ok(Path { vertices, is_cycle })
    }

    pub fn vertices(&self) -> &[CtxIdx] {
        &self.vertices
    }

    pub fn is_cycle(&self) -> bool {
        self.is_cycle
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Consecutive unordered pairs; n−1 of them for a path, n for a cycle.
    pub fn edge_form(&self) -> Vec<(CtxIdx, CtxIdx)> {
        let mut edges: Vec<(CtxIdx, CtxIdx)> = self
            .vertices
            .windows(2)
            .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
            .collect();
        if self.is_cycle {
            let first = self.vertices[0];
            let last = *self.vertices.last().unwrap();
            edges.push((first.min(last), first.max(last)));
        }
        edges
    }
}

/// All simple cycles of length 3..=`max_len`, each reported once in
/// canonical form: rooted at its smallest vertex, oriented so the second
/// vertex is smaller than the last, sorted by (length, vertex list).
pub fn enumerate_cycles(graph: &CoverGraph, max_len: usize) -> Vec<Path> {
    assert!(max_len >= 3, "cycles have at least three vertices");
    let n = graph.n_vertices();
    let mut cycles = Vec::new();
    let mut stack: Vec<CtxIdx> = Vec::new();
    let mut on_stack = vec![false; n];
    for root in 0..n {
        stack.push(root);
        on_stack[root] = true;
        close_cycles(graph, root, max_len, &mut stack, &mut on_stack, &mut cycles);
        on_stack[root] = false;
        stack.pop();
    }
    cycles.sort_by(|a, b| {
        (a.vertices.len(), &a.vertices).cmp(&(b.vertices.len(), &b.vertices))
    });
    cycles
}

fn close_cycles(
    graph: &CoverGraph,
    root: CtxIdx,
    max_len: usize,
    stack: &mut Vec<CtxIdx>,
    on_stack: &mut [bool],
    cycles: &mut Vec<Path>,
) {
    let current = *stack.last().unwrap();
    for &next in graph.neighbours(current) {
        if next == root && stack.len() >= 3 && stack[1] < *stack.last().unwrap() {
            cycles.push(Path {
                vertices: stack.clone(),
                is_cycle: true,
            });
        }
        // Rooting at the minimum vertex: only walk through larger ones.
        if next > root && !on_stack[next] && stack.len() < max_len {
            stack.push(next);
            on_stack[next] = true;
            close_cycles(graph, root, max_len, stack, on_stack, cycles);
            on_stack[next] = false;
            stack.pop();
        }
    }
}

/// Does the walk have a chord: two non-consecutive vertices (the end pair
/// excluded) whose contexts intersect?
pub fn is_chordal_path(path: &Path, graph: &CoverGraph) -> bool {
    let v = &path.vertices;
    let n = v.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if graph.adjacent(v[i], v[j]) {
                return true;
            }
        }
    }
    false
}

/// Is the cover graph one chordless cycle through all contexts?
pub fn is_cyclic_scenario(scenario: &Scenario) -> Result<bool> {
    if !is_connected(scenario) {
        return Err(Error::DisconnectedCover);
    }
    let graph = intersection_graph(scenario);
    let n = graph.n_vertices();
    Ok(n >= 3 && (0..n).all(|v| graph.neighbours(v).len() == 2))
}

/// Rebuilds a section of `from` inside a restriction `to` of the same
/// model, returning the context index and section in the restricted
/// indexing. Panics if the context was not kept; callers restrict to
/// subcovers containing it.
fn transfer_section(
    from: &EmpiricalModel,
    to: &EmpiricalModel,
    ctx: CtxIdx,
    section: &Section,
) -> (CtxIdx, Section) {
    let key = from.scenario().context_key(ctx);
    let to_ctx = (0..to.scenario().n_contexts())
        .find(|&c| to.scenario().context_key(c) == key)
        .expect("restriction kept the queried context");
    let domain: Vec<u32> = section
        .domain()
        .iter()
        .map(|&m| {
            let name = &from.scenario().measurements()[m as usize];
            to.scenario().measurement_index(name).expect("kept name")
        })
        .collect();
    debug_assert!(domain.windows(2).all(|w| w[0] < w[1]));
    (to_ctx, Section::new(domain, section.values().to_vec()))
}

/// Finds the smallest cycle through the section's context on which the
/// restricted model still blocks the section from extending; ties broken by
/// lexicographic vertex order. `None` if no cycle up to `max_len` works.
///
/// The queried section must itself be blocked on the full model.
pub fn find_contextual_cycle(
    model: &EmpiricalModel,
    ctx: CtxIdx,
    section: &Section,
    max_len: usize,
) -> Result<Option<Path>> {
    if !model.is_lc_at(ctx, section)?.holds {
        return Err(Error::NotContextualSection {
            context: model.scenario().context_key(ctx),
            section: section.render_values(model.scenario()),
        });
    }
    for cycle in enumerate_cycles(model.cover_graph(), max_len) {
        if !cycle.vertices().contains(&ctx) {
            continue;
        }
        let restricted = model.restrict_model(cycle.vertices())?;
        let (r_ctx, r_section) = transfer_section(model, &restricted, ctx, section);
        if restricted.is_lc_at(r_ctx, &r_section)?.holds {
            return Ok(Some(cycle));
        }
    }
    Ok(None)
}

/// How [`full_invariant`] reached its answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Route {
    /// The cover is a single chordless cycle: the ladder to |M|−1 decides.
    Cyclic,
    /// Decided on the restriction to a contextual cycle of this size, with
    /// the ladder run to (size − 1) on the restricted model.
    CcpCycle(usize),
    /// Ladder on the full model up to the level cap; a fully false ladder
    /// here is inconclusive, not a negative.
    GeneralCapped,
}

/// Ladder summary for one queried section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantReport {
    pub context: String,
    pub section: String,
    /// Direct family-search answer, the reference the ladder is scored
    /// against.
    pub lc: bool,
    /// When the section extends, one compatible family containing it,
    /// rendered as (context, section) pairs.
    pub extension: Option<Vec<(String, String)>>,
    /// Evaluated ladder entries in ascending level order. On the
    /// [`Route::CcpCycle`] route these refer to the restricted model.
    pub clc_levels: Vec<(usize, bool)>,
    /// For each undetected level, the vanishing formal family found there,
    /// rendered as (context, section) pairs with coefficient one.
    pub vanishing: Vec<(usize, Vec<(String, String)>)>,
    /// First level whose obstruction check holds, if any was found.
    pub decisive_level: Option<usize>,
    pub route: Route,
    /// Context keys of the restriction cycle on the [`Route::CcpCycle`]
    /// route, in traversal order.
    pub cycle: Option<Vec<String>>,
}

struct Ladder {
    levels: Vec<(usize, bool)>,
    vanishing: Vec<(usize, Vec<(String, String)>)>,
    decisive: Option<usize>,
}

fn clc_ladder(
    model: Arc<EmpiricalModel>,
    ctx: CtxIdx,
    section: &Section,
    height: usize,
    budget: u64,
) -> Result<Ladder> {
    let t = tower(model, height, budget)?;
    let mut ladder = Ladder {
        levels: Vec::new(),
        vanishing: Vec::new(),
        decisive: None,
    };
    for k in 0..=height {
        let verdict = t.clc_k(ctx, section, k)?;
        ladder.levels.push((k, verdict.holds));
        if verdict.holds {
            ladder.decisive = Some(k);
            return Ok(ladder);
        }
        if let Some(Witness::Cochain(pairs)) = verdict.witness {
            ladder.vanishing.push((k, pairs));
        }
    }
    Ok(ladder)
}

/// Route selection for [`full_invariant_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteChoice {
    /// Pick the strongest applicable route.
    Auto,
    /// Require the cover to be a single chordless cycle.
    Cyclic,
    /// Require a contextual cycle and decide on its restriction.
    CcpCycle,
    /// Run the capped ladder on the full model.
    GeneralCapped,
}

/// Decides (or bounds) the contextuality of one possible section by the
/// obstruction ladder, choosing the strongest applicable route.
pub fn full_invariant(
    model: &Arc<EmpiricalModel>,
    ctx: CtxIdx,
    section: &Section,
    level_cap: usize,
    budget: u64,
) -> Result<InvariantReport> {
    full_invariant_with(model, ctx, section, level_cap, budget, RouteChoice::Auto)
}

/// [`full_invariant`] with the route forced rather than chosen. A forced
/// route that does not apply (cyclic on a non-cycle cover, ccp-cycle when
/// no contextual cycle exists) is an error, never a silent fallback.
pub fn full_invariant_with(
    model: &Arc<EmpiricalModel>,
    ctx: CtxIdx,
    section: &Section,
    level_cap: usize,
    budget: u64,
    choice: RouteChoice,
) -> Result<InvariantReport> {
    let scenario = model.scenario();
    if !is_connected(scenario) {
        return Err(Error::DisconnectedCover);
    }
    if graham_reduce(scenario).0 {
        return Err(Error::AcyclicScenario);
    }
    let lc_verdict = model.is_lc_at(ctx, section)?;
    let lc = lc_verdict.holds;
    let extension = match lc_verdict.witness {
        Some(Witness::Family(family)) => Some(family.render(scenario)),
        _ => None,
    };
    let report = |ladder: Ladder, route: Route, cycle: Option<Vec<String>>| InvariantReport {
        context: scenario.context_key(ctx),
        section: section.render_values(scenario),
        lc,
        extension: extension.clone(),
        clc_levels: ladder.levels,
        vanishing: ladder.vanishing,
        decisive_level: ladder.decisive,
        route,
        cycle,
    };

    if matches!(choice, RouteChoice::Auto | RouteChoice::Cyclic) {
        if is_cyclic_scenario(scenario)? {
            let height = scenario.n_measurements().saturating_sub(1);
            let ladder = clc_ladder(Arc::clone(model), ctx, section, height, budget)?;
            return Ok(report(ladder, Route::Cyclic, None));
        }
        if choice == RouteChoice::Cyclic {
            return Err(Error::RouteUnavailable {
                route: "cyclic".to_string(),
                reason: "the cover is not a single chordless cycle".to_string(),
            });
        }
    }

    if matches!(choice, RouteChoice::Auto | RouteChoice::CcpCycle) && lc {
        if let Some(cycle) =
            find_contextual_cycle(model, ctx, section, scenario.n_contexts())?
        {
            let restricted = Arc::new(model.restrict_model(cycle.vertices())?);
            let (r_ctx, r_section) = transfer_section(model, &restricted, ctx, section);
            let keys = cycle
                .vertices()
                .iter()
                .map(|&c| scenario.context_key(c))
                .collect();
            let ladder = clc_ladder(restricted, r_ctx, &r_section, cycle.len() - 1, budget)?;
            return Ok(report(ladder, Route::CcpCycle(cycle.len()), Some(keys)));
        }
    }
    if choice == RouteChoice::CcpCycle {
        return Err(Error::RouteUnavailable {
            route: "ccp".to_string(),
            reason: if lc {
                "no cycle restriction keeps the section contextual".to_string()
            } else {
                "the section extends to a compatible family".to_string()
            },
        });
    }

    let ladder = clc_ladder(Arc::clone(model), ctx, section, level_cap, budget)?;
    Ok(report(ladder, Route::GeneralCapped, None))
}

/// Samples a support over the scenario: each event is kept independently
/// with probability `density`, then the result is repaired to a valid model
/// by adding, in canonical order, the least events restoring nonempty
/// supports and matching neighbours. Reproducible for a given seed.
pub fn random_model(scenario: &Arc<Scenario>, density: f64, seed: u64) -> EmpiricalModel {
    assert!(
        density > 0.0 && density <= 1.0,
        "density must be in (0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support: Vec<Vec<Section>> = Vec::with_capacity(scenario.n_contexts());
    for members in scenario.contexts() {
        let events = event_sections(scenario, members).expect("context members");
        let mut kept: Vec<Section> = events
            .iter()
            .filter(|_| rng.gen_bool(density))
            .cloned()
            .collect();
        if kept.is_empty() {
            kept.push(events[0].clone());
        }
        support.push(kept);
    }
    let graph = intersection_graph(scenario);
    // Flasqueness repair to a fixpoint: supports only grow and are bounded
    // by the full event sets, so this terminates.
    loop {
        let mut additions: Vec<(usize, Section)> = Vec::new();
        for (e, &(a, b)) in graph.edges().iter().enumerate() {
            let shared = graph.intersection(e);
            for (near, far) in [(a, b), (b, a)] {
                for s in &support[near] {
                    let image = restrict_section(s, shared).expect("edge subdomain");
                    let matched = support[far]
                        .iter()
                        .any(|t| restrict_section(t, shared).unwrap() == image);
                    if !matched {
                        let fix = event_sections(scenario, &scenario.contexts()[far])
                            .expect("context members")
                            .into_iter()
                            .find(|t| restrict_section(t, shared).unwrap() == image)
                            .expect("full event set realizes every restriction");
                        additions.push((far, fix));
                    }
                }
            }
        }
        if additions.is_empty() {
            break;
        }
        for (c, s) in additions {
            if !support[c].contains(&s) {
                support[c].push(s);
            }
        }
    }
    for sections in &mut support {
        sections.sort();
        sections.dedup();
    }
    build_model(Arc::clone(scenario), support).expect("repair establishes validity")
}

/// Cycle cover on `n` binary measurements: contexts {m_i, m_{i+1 mod n}}.
pub fn cyclic_scenario(n: usize) -> Result<Arc<Scenario>> {
    assert!(n >= 3, "a cycle cover needs at least three measurements");
    let width = (n - 1).to_string().len();
    let names: Vec<String> = (0..n).map(|i| format!("m{i:0width$}")).collect();
    let outcomes: BTreeMap<String, Vec<String>> = names
        .iter()
        .map(|name| (name.clone(), vec!["0".to_string(), "1".to_string()]))
        .collect();
    let contexts: Vec<Vec<String>> = (0..n)
        .map(|i| vec![names[i].clone(), names[(i + 1) % n].clone()])
        .collect();
    build_scenario(&names, &outcomes, &contexts)
}

/// Path cover on `n` binary measurements: contexts {m_i, m_{i+1}}. Always
/// emptied by Graham reduction; useful as a non-contextual control.
pub fn path_scenario(n: usize) -> Result<Arc<Scenario>> {
    assert!(n >= 2, "a path cover needs at least two measurements");
    let width = (n - 1).to_string().len();
    let names: Vec<String> = (0..n).map(|i| format!("m{i:0width$}")).collect();
    let outcomes: BTreeMap<String, Vec<String>> = names
        .iter()
        .map(|name| (name.clone(), vec!["0".to_string(), "1".to_string()]))
        .collect();
    let contexts: Vec<Vec<String>> = (0..n - 1)
        .map(|i| vec![names[i].clone(), names[i + 1].clone()])
        .collect();
    build_scenario(&names, &outcomes, &contexts)
}

/// Draws a connected cover with `contexts` contexts of two or three binary
/// measurements each, by seeded rejection sampling. Unused measurements are
/// dropped so the result always covers its measurement set.
pub fn random_scenario(contexts: usize, seed: u64) -> Result<Arc<Scenario>> {
    assert!(contexts >= 2, "a cover needs at least two contexts");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = contexts + 2;
    let width = (pool - 1).to_string().len();
    let pool_names: Vec<String> = (0..pool).map(|i| format!("m{i:0width$}")).collect();
    for _ in 0..10_000 {
        let mut drawn: Vec<Vec<usize>> = Vec::with_capacity(contexts);
        for _ in 0..contexts {
            let size = if rng.gen_bool(0.5) { 2 } else { 3 };
            let mut members: Vec<usize> = Vec::new();
            while members.len() < size {
                let m = rng.gen_range(0..pool);
                if !members.contains(&m) {
                    members.push(m);
                }
            }
            members.sort_unstable();
            drawn.push(members);
        }
        let mut used: Vec<usize> = drawn.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        let names: Vec<String> = used.iter().map(|&m| pool_names[m].clone()).collect();
        let outcomes: BTreeMap<String, Vec<String>> = names
            .iter()
            .map(|n| (n.clone(), vec!["0".to_string(), "1".to_string()]))
            .collect();
        let members: Vec<Vec<String>> = drawn
            .iter()
            .map(|c| c.iter().map(|&m| pool_names[m].clone()).collect())
            .collect();
        let Ok(scenario) = build_scenario(&names, &outcomes, &members) else {
            continue;
        };
        if scenario.n_contexts() == contexts && is_connected(&scenario) {
            return Ok(scenario);
        }
    }
    Err(Error::ValidationFailure {
        detail: format!("no connected {contexts}-context cover found for seed {seed}"),
    })
}

/// Scenario family to sample from in a search run.
#[derive(Debug, Clone)]
pub enum ScenarioFamily {
    /// The fixed cycle cover on `size` binary measurements.
    Cyclic { size: usize },
    /// A fresh random connected cover with `contexts` contexts per sample.
    Random { contexts: usize },
}

/// Parameters of one randomized search run.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub scenario: Arc<Scenario>,
    pub density: f64,
    pub count: usize,
    pub level_cap: usize,
    pub seed: u64,
    pub budget: u64,
}

/// A section the ladder failed to detect within the level cap.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub sample_index: usize,
    pub sample_seed: u64,
    pub context: String,
    pub section: String,
    /// Full model document for replay and inspection.
    pub model_json: String,
}

/// Aggregated outcome of a search run.
#[derive(Debug, Clone, Default)]
pub struct SearchReport {
    pub models_examined: usize,
    pub sections_examined: usize,
    pub lc_sections: usize,
    /// `detected_by_level[k]` counts sections first detected at level k.
    pub detected_by_level: Vec<usize>,
    /// Samples abandoned because a tower level exceeded the budget.
    pub skipped: usize,
    pub candidates: Vec<Candidate>,
}

struct SampleResult {
    sections: usize,
    lc_sections: usize,
    detections: Vec<usize>,
    skipped: bool,
    candidates: Vec<Candidate>,
}

fn examine_sample(
    scenario: &Arc<Scenario>,
    density: f64,
    level_cap: usize,
    budget: u64,
    index: usize,
    sample_seed: u64,
) -> SampleResult {
    let model = Arc::new(random_model(scenario, density, sample_seed));
    let mut result = SampleResult {
        sections: 0,
        lc_sections: 0,
        detections: Vec::new(),
        skipped: false,
        candidates: Vec::new(),
    };
    let mut blocked: Vec<(CtxIdx, Section)> = Vec::new();
    for c in 0..model.scenario().n_contexts() {
        for section in model.support(c) {
            result.sections += 1;
            if model.is_lc_at(c, section).expect("supported section").holds {
                blocked.push((c, section.clone()));
            }
        }
    }
    result.lc_sections = blocked.len();
    if blocked.is_empty() {
        return result;
    }
    let t = match tower(Arc::clone(&model), level_cap, budget) {
        Ok(t) => t,
        Err(Error::ResourceLimit { .. }) => {
            result.skipped = true;
            return result;
        }
        Err(e) => panic!("tower construction failed: {e}"),
    };
    for (c, section) in blocked {
        let mut first_detected = None;
        for k in 0..=level_cap {
            if t.clc_k(c, &section, k).expect("supported section").holds {
                first_detected = Some(k);
                break;
            }
        }
        match first_detected {
            Some(k) => result.detections.push(k),
            None => {
                let mut metadata = BTreeMap::new();
                metadata.insert("kind".to_string(), "search candidate".to_string());
                metadata.insert("sample_index".to_string(), index.to_string());
                metadata.insert("sample_seed".to_string(), sample_seed.to_string());
                metadata.insert("density".to_string(), density.to_string());
                result.candidates.push(Candidate {
                    sample_index: index,
                    sample_seed,
                    context: model.scenario().context_key(c),
                    section: section.render_values(model.scenario()),
                    model_json: crate::io::model_to_json(&model, metadata),
                });
            }
        }
    }
    result
}

fn aggregate(results: Vec<SampleResult>, level_cap: usize) -> SearchReport {
    let mut report = SearchReport {
        detected_by_level: vec![0; level_cap + 1],
        ..SearchReport::default()
    };
    for result in results {
        report.models_examined += 1;
        report.sections_examined += result.sections;
        report.lc_sections += result.lc_sections;
        if result.skipped {
            report.skipped += 1;
        }
        for k in result.detections {
            report.detected_by_level[k] += 1;
        }
        report.candidates.extend(result.candidates);
    }
    report
}

fn sample_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| seeder.gen()).collect()
}

/// Samples `count` models over a fixed scenario and checks every blocked
/// section against the ladder up to the level cap. Deterministic for a
/// given seed; samples run in parallel and are aggregated in index order.
pub fn search_counterexample(config: &SearchConfig) -> SearchReport {
    assert!(
        config.density > 0.0 && config.density <= 1.0,
        "density must be in (0, 1]"
    );
    let results: Vec<SampleResult> = sample_seeds(config.seed, config.count)
        .par_iter()
        .enumerate()
        .map(|(index, &sample_seed)| {
            examine_sample(
                &config.scenario,
                config.density,
                config.level_cap,
                config.budget,
                index,
                sample_seed,
            )
        })
        .collect();
    aggregate(results, config.level_cap)
}

/// Runs a search over a scenario family. The cyclic family uses one fixed
/// cover; the random family draws a fresh cover per sample from the
/// sample's seed, so runs stay replayable end to end.
pub fn search_family(
    family: &ScenarioFamily,
    density: f64,
    count: usize,
    level_cap: usize,
    seed: u64,
    budget: u64,
) -> Result<SearchReport> {
    assert!(
        density > 0.0 && density <= 1.0,
        "density must be in (0, 1]"
    );
    match family {
        ScenarioFamily::Cyclic { size } => Ok(search_counterexample(&SearchConfig {
            scenario: cyclic_scenario(*size)?,
            density,
            count,
            level_cap,
            seed,
            budget,
        })),
        ScenarioFamily::Random { contexts } => {
            let results: Result<Vec<SampleResult>> = sample_seeds(seed, count)
                .par_iter()
                .enumerate()
                .map(|(index, &sample_seed)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
                    let scenario_seed = rng.gen();
                    let model_seed = rng.gen();
                    let scenario = random_scenario(*contexts, scenario_seed)?;
                    Ok(examine_sample(
                        &scenario, density, level_cap, budget, index, model_seed,
                    ))
                })
                .collect();
            Ok(aggregate(results?, level_cap))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::hardy_model;

    #[test]
    fn hardy_cover_has_exactly_one_cycle() {
        let model = hardy_model();
        let cycles = enumerate_cycles(model.cover_graph(), 4);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].vertices(), &[0, 1, 3, 2]);
        assert!(cycles[0].is_cycle());
        assert_eq!(cycles[0].edge_form(), vec![(0, 1), (1, 3), (2, 3), (0, 2)]);
    }

    /// Cover on a, b, c, d with contexts ab, ad, bc, bd, cd (no ac).
    fn five_context_scenario() -> Arc<Scenario> {
        let names = ["a", "b", "c", "d"];
        let outcomes: BTreeMap<String, Vec<String>> = names
            .iter()
            .map(|n| (n.to_string(), vec!["0".into(), "1".into()]))
            .collect();
        let contexts = [["a", "b"], ["a", "d"], ["b", "c"], ["b", "d"], ["c", "d"]]
            .iter()
            .map(|pair| pair.iter().map(|s| s.to_string()).collect())
            .collect::<Vec<Vec<String>>>();
        build_scenario(&names, &outcomes, &contexts).unwrap()
    }

    #[test]
    fn five_context_cover_has_four_triangles_and_five_squares() {
        let scenario = five_context_scenario();
        let graph = intersection_graph(&scenario);
        let cycles = enumerate_cycles(&graph, 4);
        let triangles: Vec<&[usize]> = cycles
            .iter()
            .filter(|c| c.len() == 3)
            .map(|c| c.vertices())
            .collect();
        assert_eq!(
            triangles,
            vec![&[0, 1, 3][..], &[0, 2, 3], &[1, 3, 4], &[2, 3, 4]]
        );
        // The graph is K5 minus the non-edges ab/cd and ad/bc: every
        // four-subset of contexts supports exactly one four-cycle.
        let squares: Vec<&[usize]> = cycles
            .iter()
            .filter(|c| c.len() == 4)
            .map(|c| c.vertices())
            .collect();
        assert_eq!(
            squares,
            vec![
                &[0, 1, 3, 2][..],
                &[0, 1, 4, 2],
                &[0, 1, 4, 3],
                &[0, 2, 4, 3],
                &[1, 3, 2, 4],
            ]
        );
    }

    #[test]
    fn enumeration_respects_max_len() {
        let scenario = five_context_scenario();
        let graph = intersection_graph(&scenario);
        assert_eq!(enumerate_cycles(&graph, 3).len(), 4);
        assert_eq!(enumerate_cycles(&graph, 4).len(), 9);
        // Four of the twelve five-cycles of K5 avoid both missing edges.
        assert_eq!(enumerate_cycles(&graph, 5).len(), 13);
    }

    #[test]
    fn tree_covers_have_no_cycles() {
        let scenario = path_scenario(4).unwrap();
        let graph = intersection_graph(&scenario);
        assert!(enumerate_cycles(&graph, 4).is_empty());
    }

    #[test]
    fn chords_are_detected_between_interior_vertices() {
        let scenario = five_context_scenario();
        let graph = intersection_graph(&scenario);
        // bc, ab, bd, cd: bc and bd share b but are two steps apart.
        let chordal = Path::new(&graph, vec![2, 0, 3, 4], false).unwrap();
        assert!(is_chordal_path(&chordal, &graph));
        // bc, ab, ad, cd: the only intersecting non-consecutive pair is the
        // end pair, which does not count.
        let chordless = Path::new(&graph, vec![2, 0, 1, 4], false).unwrap();
        assert!(!is_chordal_path(&chordless, &graph));
        // The square as a cycle: the wrap pair is consecutive, no chord.
        let square = Path::new(&graph, vec![0, 1, 4, 2], true).unwrap();
        assert!(!is_chordal_path(&square, &graph));
    }

    #[test]
    fn path_validation_rejects_breaks_and_repeats() {
        let scenario = five_context_scenario();
        let graph = intersection_graph(&scenario);
        // ab and cd are disjoint.
        assert!(Path::new(&graph, vec![0, 4], false).is_err());
        assert!(Path::new(&graph, vec![0, 3, 0], false).is_err());
        // ab, ad, bd closes; ab, ad, cd does not close a cycle through ab.
        assert!(Path::new(&graph, vec![0, 1, 3], true).is_ok());
        assert!(Path::new(&graph, vec![2, 0, 1], true).is_err());
    }

    #[test]
    fn cyclic_scenarios_are_recognized() {
        let model = hardy_model();
        assert!(is_cyclic_scenario(model.scenario()).unwrap());
        assert!(!is_cyclic_scenario(&five_context_scenario()).unwrap());
        assert!(!is_cyclic_scenario(&path_scenario(3).unwrap()).unwrap());
        for n in 3..=6 {
            assert!(is_cyclic_scenario(&cyclic_scenario(n).unwrap()).unwrap());
        }
    }

    #[test]
    fn contextual_cycle_of_the_blocked_section_is_the_square() {
        let model = hardy_model();
        let blocked = Section::new(model.scenario().contexts()[0].clone(), vec![0, 0]);
        let cycle = find_contextual_cycle(&model, 0, &blocked, 4)
            .unwrap()
            .expect("the full cover is the only cycle");
        assert_eq!(cycle.vertices(), &[0, 1, 3, 2]);
    }

    #[test]
    fn extendable_sections_are_rejected_by_cycle_search() {
        let model = hardy_model();
        let extendable = Section::new(model.scenario().contexts()[0].clone(), vec![1, 1]);
        assert!(matches!(
            find_contextual_cycle(&model, 0, &extendable, 4),
            Err(Error::NotContextualSection { .. })
        ));
    }

    #[test]
    fn invariant_on_the_two_party_model_is_decisive_at_three() {
        let model = Arc::new(hardy_model());
        let blocked = Section::new(model.scenario().contexts()[0].clone(), vec![0, 0]);
        let report = full_invariant(&model, 0, &blocked, 5, 1_000_000).unwrap();
        assert!(report.lc);
        assert_eq!(report.route, Route::Cyclic);
        assert_eq!(
            report.clc_levels,
            vec![(0, false), (1, false), (2, false), (3, true)]
        );
        assert_eq!(report.decisive_level, Some(3));
    }

    #[test]
    fn invariant_reports_non_contextual_sections() {
        let model = Arc::new(hardy_model());
        let extendable = Section::new(model.scenario().contexts()[0].clone(), vec![1, 1]);
        let report = full_invariant(&model, 0, &extendable, 3, 1_000_000).unwrap();
        assert!(!report.lc);
        assert_eq!(report.route, Route::Cyclic);
        assert_eq!(report.decisive_level, None);
        assert!(report.clc_levels.iter().all(|&(_, holds)| !holds));
    }

    #[test]
    fn invariant_rejects_acyclic_covers() {
        let scenario = path_scenario(3).unwrap();
        let support = scenario
            .contexts()
            .iter()
            .map(|m| event_sections(&scenario, m).unwrap())
            .collect();
        let model = Arc::new(build_model(Arc::clone(&scenario), support).unwrap());
        let section = model.support(0)[0].clone();
        assert!(matches!(
            full_invariant(&model, 0, &section, 2, 1_000_000),
            Err(Error::AcyclicScenario)
        ));
    }

    #[test]
    fn random_models_are_reproducible_and_valid() {
        let scenario = cyclic_scenario(3).unwrap();
        for seed in 0..50 {
            let a = random_model(&scenario, 0.5, seed);
            let b = random_model(&scenario, 0.5, seed);
            assert_eq!(
                crate::io::model_to_json(&a, BTreeMap::new()),
                crate::io::model_to_json(&b, BTreeMap::new())
            );
        }
    }

    #[test]
    fn density_one_gives_the_full_model() {
        let scenario = cyclic_scenario(3).unwrap();
        let model = random_model(&scenario, 1.0, 99);
        for c in 0..scenario.n_contexts() {
            assert_eq!(model.support(c).len(), 4);
        }
    }

    #[test]
    fn search_on_small_cycles_finds_no_counterexamples() {
        let scenario = cyclic_scenario(3).unwrap();
        let config = SearchConfig {
            scenario,
            density: 0.4,
            count: 40,
            level_cap: 2,
            seed: 7,
            budget: 1_000_000,
        };
        let report = search_counterexample(&config);
        assert_eq!(report.models_examined, 40);
        assert!(report.candidates.is_empty());
        assert_eq!(report.skipped, 0);
        // The run is deterministic end to end.
        let again = search_counterexample(&config);
        assert_eq!(report.sections_examined, again.sections_examined);
        assert_eq!(report.lc_sections, again.lc_sections);
        assert_eq!(report.detected_by_level, again.detected_by_level);
        // Detection counts cover exactly the blocked sections.
        let detected: usize = report.detected_by_level.iter().sum();
        assert_eq!(detected, report.lc_sections);
    }

    #[test]
    fn full_density_searches_are_vacuous() {
        let scenario = cyclic_scenario(4).unwrap();
        let report = search_counterexample(&SearchConfig {
            scenario,
            density: 1.0,
            count: 5,
            level_cap: 1,
            seed: 3,
            budget: 1_000_000,
        });
        assert_eq!(report.lc_sections, 0);
        assert!(report.candidates.is_empty());
    }

    #[test]
    fn random_scenarios_are_reproducible_and_connected() {
        for seed in 0..30 {
            let a = random_scenario(4, seed).unwrap();
            let b = random_scenario(4, seed).unwrap();
            assert_eq!(a.measurements(), b.measurements());
            assert_eq!(a.contexts(), b.contexts());
            assert_eq!(a.n_contexts(), 4);
            assert!(crate::scenario::is_connected(&a));
        }
        // Seeds vary the cover rather than repeating one shape.
        let shapes: std::collections::BTreeSet<Vec<Vec<crate::scenario::MeasIdx>>> = (0..30)
            .map(|seed| random_scenario(4, seed).unwrap().contexts().to_vec())
            .collect();
        assert!(shapes.len() > 1);
    }

    #[test]
    fn family_searches_are_deterministic() {
        let run = || {
            search_family(
                &ScenarioFamily::Random { contexts: 4 },
                0.5,
                25,
                2,
                11,
                1_000_000,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.models_examined, 25);
        assert_eq!(a.sections_examined, b.sections_examined);
        assert_eq!(a.lc_sections, b.lc_sections);
        assert_eq!(a.detected_by_level, b.detected_by_level);
        assert_eq!(a.candidates.len(), b.candidates.len());
        let cyclic = search_family(
            &ScenarioFamily::Cyclic { size: 3 },
            0.4,
            10,
            2,
            7,
            1_000_000,
        )
        .unwrap();
        assert_eq!(cyclic.models_examined, 10);
        assert!(cyclic.candidates.is_empty());
    }
}
