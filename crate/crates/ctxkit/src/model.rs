//! Empirical models: possibilistic supports over a measurement scenario.
//!
//! An [`EmpiricalModel`] records, for each context of a scenario, which joint
//! outcomes (sections) are possible. Construction enforces two conditions:
//! every context has at least one possible section, and any section possible
//! in one context has an agreeing possible section in every intersecting
//! context. The second condition makes derived sections over sub-context
//! measurement sets independent of the covering context used to compute them.
//!
//! On top of the raw supports the module answers the two basic logical
//! questions: can a given possible section be extended to a choice of
//! sections across the whole cover that agree pairwise (a compatible
//! family), and does any compatible family exist at all.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, OnceLock};

use crate::compat::{CompatView, EdgeClasses};
use crate::error::{Error, Result};
use crate::scenario::{
    event_sections, intersection_graph, restrict_section, CoverGraph, CtxIdx, MeasIdx, Scenario,
    Section,
};

/// The question a [`Verdict`] answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    /// No compatible family contains the queried section.
    LcAt,
    /// No compatible family exists at all.
    Sc,
    /// The linear obstruction of the queried section does not vanish.
    ClcAt,
    /// The linear obstruction of every possible section does not vanish.
    Csc,
    /// Every tower section over the queried one is obstructed, at some level.
    LcKAt,
    /// Same, for the linear obstruction.
    ClcKAt,
    /// The level-k model is obstructed at every possible section.
    CscK,
}

impl Property {
    /// Stable lowercase name used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Property::LcAt => "lc_at",
            Property::Sc => "sc",
            Property::ClcAt => "clc_at",
            Property::Csc => "csc",
            Property::LcKAt => "lc_k_at",
            Property::ClcKAt => "clc_k_at",
            Property::CscK => "csc_k",
        }
    }
}

/// Evidence attached to a negative verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// A compatible family over the base cover.
    Family(CompatibleFamily),
    /// A formal family over GF(2): the (context, section) labels carrying
    /// coefficient one in a cocycle that mimics a family around the queried
    /// section. Labels are rendered at the level the verdict refers to.
    Cochain(Vec<(String, String)>),
}

/// Outcome of a contextuality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub property: Property,
    pub holds: bool,
    /// Tower level the check ran at; 0 for base-model checks.
    pub level: usize,
    /// Present when `holds` is false and the refutation has a finite
    /// certificate.
    pub witness: Option<Witness>,
}

/// One possible section per context, agreeing pairwise on intersections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibleFamily {
    sections: Vec<Section>,
}

impl CompatibleFamily {
    /// The chosen sections, in context order.
    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// The section chosen at one context.
    pub fn section_at(&self, c: CtxIdx) -> &Section {
        &self.sections[c]
    }

    /// Merges the family into a single global section. Pairwise agreement
    /// makes the merge well defined; the cover condition makes it total.
    pub fn glue(&self) -> Section {
        let mut merged: BTreeMap<MeasIdx, u32> = BTreeMap::new();
        for section in &self.sections {
            for (&m, &o) in section.domain().iter().zip(section.values()) {
                let prev = merged.insert(m, o);
                debug_assert!(prev.is_none() || prev == Some(o));
            }
        }
        let (domain, values) = merged.into_iter().unzip();
        Section::new(domain, values)
    }

    /// Renders the family as (context key, outcome tuple) pairs.
    pub fn render(&self, scenario: &Scenario) -> Vec<(String, String)> {
        self.sections
            .iter()
            .enumerate()
            .map(|(c, s)| (scenario.context_key(c), s.render_values(scenario)))
            .collect()
    }
}

/// A scenario together with its per-context supports.
pub struct EmpiricalModel {
    scenario: Arc<Scenario>,
    support: Vec<Vec<Section>>,
    graph: CoverGraph,
    derived: Mutex<BTreeMap<Vec<MeasIdx>, Arc<Vec<Section>>>>,
    view: OnceLock<CompatView>,
    pub(crate) kernel: OnceLock<crate::cohomology::KernelCache>,
}

impl std::fmt::Debug for EmpiricalModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmpiricalModel")
            .field("contexts", &self.scenario.n_contexts())
            .field(
                "support_sizes",
                &self.support.iter().map(Vec::len).collect::<Vec<_>>(),
            )
            .finish()
    }
}

/// Renders a section for diagnostics, tolerating out-of-range outcome
/// indices (which valid [`Section`]s never have, but rejected input might).
fn describe_section(scenario: &Scenario, section: &Section) -> String {
    let values = section
        .domain()
        .iter()
        .zip(section.values())
        .map(|(&m, &o)| {
            scenario
                .outcomes(m)
                .get(o as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{o}"))
        })
        .collect::<Vec<_>>()
        .join(",");
    format!("{}={}", scenario.subset_key(section.domain()), values)
}

/// Validates supports against the scenario and builds the model.
///
/// `support[c]` lists the possible sections of context `c`, in any order and
/// with duplicates tolerated; they are stored sorted and deduplicated.
pub fn build_model(scenario: Arc<Scenario>, support: Vec<Vec<Section>>) -> Result<EmpiricalModel> {
    if support.len() != scenario.n_contexts() {
        return Err(Error::ValidationFailure {
            detail: format!(
                "support lists {} contexts, scenario has {}",
                support.len(),
                scenario.n_contexts()
            ),
        });
    }
    let mut cleaned: Vec<Vec<Section>> = Vec::with_capacity(support.len());
    for (c, mut sections) in support.into_iter().enumerate() {
        let members = &scenario.contexts()[c];
        for section in &sections {
            let in_events = section.domain() == members.as_slice()
                && section
                    .domain()
                    .iter()
                    .zip(section.values())
                    .all(|(&m, &o)| (o as usize) < scenario.outcomes(m).len());
            if !in_events {
                return Err(Error::SectionOutsideEvents {
                    context: scenario.context_key(c),
                    section: describe_section(&scenario, section),
                });
            }
        }
        sections.sort();
        sections.dedup();
        if sections.is_empty() {
            return Err(Error::EmptyContextSupport {
                context: scenario.context_key(c),
            });
        }
        cleaned.push(sections);
    }
    let graph = intersection_graph(&scenario);
    for (e, &(a, b)) in graph.edges().iter().enumerate() {
        let shared = graph.intersection(e);
        for (near, far) in [(a, b), (b, a)] {
            let far_images: BTreeSet<Section> = cleaned[far]
                .iter()
                .map(|s| restrict_section(s, shared).expect("intersection is a subdomain"))
                .collect();
            for section in &cleaned[near] {
                let image = restrict_section(section, shared).expect("intersection is a subdomain");
                if !far_images.contains(&image) {
                    return Err(Error::FlasquenessViolation {
                        context: scenario.context_key(near),
                        section: section.render_values(&scenario),
                        other: scenario.context_key(far),
                    });
                }
            }
        }
    }
    Ok(EmpiricalModel {
        scenario,
        support: cleaned,
        graph,
        derived: Mutex::new(BTreeMap::new()),
        view: OnceLock::new(),
        kernel: OnceLock::new(),
    })
}

impl EmpiricalModel {
    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    /// The possible sections of one context, sorted.
    pub fn support(&self, c: CtxIdx) -> &[Section] {
        &self.support[c]
    }

    /// All supports, indexed by context.
    pub fn supports(&self) -> &[Vec<Section>] {
        &self.support
    }

    /// Position of a section within its context's sorted support.
    pub fn support_index(&self, c: CtxIdx, section: &Section) -> Option<usize> {
        self.support[c].binary_search(section).ok()
    }

    /// The cover's intersection graph, built once at construction.
    pub fn cover_graph(&self) -> &CoverGraph {
        &self.graph
    }

    /// Total number of possible sections across all contexts.
    pub fn total_support(&self) -> usize {
        self.support.iter().map(Vec::len).sum()
    }

    pub(crate) fn view(&self) -> &CompatView {
        self.view.get_or_init(|| {
            let sup_sizes = self.support.iter().map(Vec::len).collect();
            let mut edges = Vec::with_capacity(self.graph.edges().len());
            for (e, &(a, b)) in self.graph.edges().iter().enumerate() {
                let shared = self.graph.intersection(e);
                // Classes index the sorted list of restrictions observed on
                // either side, so equal class means equal restriction.
                let mut dictionary: BTreeMap<Section, u32> = BTreeMap::new();
                for side in [a, b] {
                    for section in &self.support[side] {
                        let image =
                            restrict_section(section, shared).expect("subdomain by construction");
                        let next = dictionary.len() as u32;
                        dictionary.entry(image).or_insert(next);
                    }
                }
                // Renumber in sorted order for a canonical labelling.
                for (rank, (_, id)) in dictionary.iter_mut().enumerate() {
                    *id = rank as u32;
                }
                let class_of = |side: CtxIdx| -> Vec<u32> {
                    self.support[side]
                        .iter()
                        .map(|s| {
                            let image = restrict_section(s, shared).expect("subdomain");
                            dictionary[&image]
                        })
                        .collect()
                };
                edges.push(EdgeClasses {
                    a,
                    b,
                    class_a: class_of(a),
                    class_b: class_of(b),
                    n_classes: dictionary.len() as u32,
                });
            }
            CompatView::new(sup_sizes, edges)
        })
    }

    /// Derived possible sections over an arbitrary sorted measurement set.
    ///
    /// For a set inside some context this is the image of that context's
    /// support (independent of the choice of context). For the full
    /// measurement set it is the set of merges of compatible families. Any
    /// other set is rejected.
    pub fn sections_at(&self, subset: &[MeasIdx]) -> Result<Arc<Vec<Section>>> {
        debug_assert!(subset.windows(2).all(|w| w[0] < w[1]));
        if let Some(hit) = self.derived.lock().unwrap().get(subset) {
            return Ok(hit.clone());
        }
        let beneath = self
            .scenario
            .contexts()
            .iter()
            .any(|members| subset.iter().all(|m| members.binary_search(m).is_ok()));
        let computed: Vec<Section> = if beneath {
            let mut out = BTreeSet::new();
            for (c, members) in self.scenario.contexts().iter().enumerate() {
                if subset.iter().all(|m| members.binary_search(m).is_ok()) {
                    for section in &self.support[c] {
                        out.insert(restrict_section(section, subset)?);
                    }
                }
            }
            out.into_iter().collect()
        } else if subset.len() == self.scenario.n_measurements() {
            let mut out = BTreeSet::new();
            self.view().for_each_family(&mut |sel| {
                let family = self.family_from_selection(sel);
                out.insert(family.glue());
                true
            });
            out.into_iter().collect()
        } else {
            return Err(Error::NotBeneathCover {
                subset: subset
                    .iter()
                    .map(|&m| self.scenario.measurements()[m as usize].clone())
                    .collect(),
            });
        };
        let shared = Arc::new(computed);
        self.derived
            .lock()
            .unwrap()
            .insert(subset.to_vec(), shared.clone());
        Ok(shared)
    }

    fn family_from_selection(&self, sel: &[u32]) -> CompatibleFamily {
        CompatibleFamily {
            sections: sel
                .iter()
                .enumerate()
                .map(|(c, &i)| self.support[c][i as usize].clone())
                .collect(),
        }
    }

    /// Searches for a compatible family containing the given possible
    /// section. Deterministic: the first family in a fixed search order.
    pub fn extend_to_global(
        &self,
        ctx: CtxIdx,
        section: &Section,
    ) -> Result<Option<CompatibleFamily>> {
        let idx = self
            .support_index(ctx, section)
            .ok_or_else(|| Error::UnknownSection {
                context: self.scenario.context_key(ctx),
                section: describe_section(&self.scenario, section),
            })?;
        Ok(self
            .view()
            .find_family(Some((ctx, idx as u32)))
            .map(|sel| self.family_from_selection(&sel)))
    }

    /// Does every compatible family avoid this section?
    pub fn is_lc_at(&self, ctx: CtxIdx, section: &Section) -> Result<Verdict> {
        let family = self.extend_to_global(ctx, section)?;
        Ok(Verdict {
            property: Property::LcAt,
            holds: family.is_none(),
            level: 0,
            witness: family.map(Witness::Family),
        })
    }

    /// Does no compatible family exist at all?
    pub fn is_sc(&self) -> Verdict {
        let family = self
            .view()
            .find_family(None)
            .map(|sel| self.family_from_selection(&sel));
        Verdict {
            property: Property::Sc,
            holds: family.is_none(),
            level: 0,
            witness: family.map(Witness::Family),
        }
    }

    /// Enumerates all compatible families in deterministic order.
    pub fn all_families(&self) -> Vec<CompatibleFamily> {
        let mut out = Vec::new();
        self.view().for_each_family(&mut |sel| {
            out.push(self.family_from_selection(sel));
            true
        });
        out
    }

    /// Restricts the model to a subcover, dropping measurements that no kept
    /// context mentions. The kept contexts must form a connected subcover.
    pub fn restrict_model(&self, keep: &[CtxIdx]) -> Result<EmpiricalModel> {
        let mut kept: Vec<CtxIdx> = Vec::new();
        for &c in keep {
            if c >= self.scenario.n_contexts() {
                return Err(Error::NotSubcover {
                    context: format!("#{c}"),
                });
            }
            kept.push(c);
        }
        kept.sort_unstable();
        kept.dedup();
        if kept.is_empty() {
            return Err(Error::ValidationFailure {
                detail: "restriction to an empty subcover".into(),
            });
        }
        let name_of = |m: MeasIdx| self.scenario.measurements()[m as usize].clone();
        let mut names: BTreeSet<String> = BTreeSet::new();
        for &c in &kept {
            names.extend(self.scenario.contexts()[c].iter().map(|&m| name_of(m)));
        }
        let measurement_names: Vec<String> = names.into_iter().collect();
        let mut outcomes = BTreeMap::new();
        for name in &measurement_names {
            let m = self.scenario.measurement_index(name)?;
            outcomes.insert(name.clone(), self.scenario.outcomes(m).to_vec());
        }
        let context_names: Vec<Vec<String>> = kept
            .iter()
            .map(|&c| {
                self.scenario.contexts()[c]
                    .iter()
                    .map(|&m| name_of(m))
                    .collect()
            })
            .collect();
        let sub = crate::scenario::build_scenario(&measurement_names, &outcomes, &context_names)?;
        if !crate::scenario::is_connected(&sub) {
            return Err(Error::DisconnectedCover);
        }
        // Measurement lists are name-sorted in both scenarios, so a section's
        // value order carries over; only the indices are remapped.
        let support: Vec<Vec<Section>> = kept
            .iter()
            .map(|&c| {
                self.support[c]
                    .iter()
                    .map(|s| {
                        let domain = s
                            .domain()
                            .iter()
                            .map(|&m| sub.measurement_index(&name_of(m)).expect("kept name"))
                            .collect();
                        Section::new(domain, s.values().to_vec())
                    })
                    .collect()
            })
            .collect();
        build_model(sub, support)
    }

    /// Restricts by context keys instead of indices.
    pub fn restrict_model_by_keys(&self, keys: &[impl AsRef<str>]) -> Result<EmpiricalModel> {
        let mut keep = Vec::with_capacity(keys.len());
        for key in keys {
            let key = key.as_ref();
            let found = (0..self.scenario.n_contexts())
                .find(|&c| self.scenario.context_key(c) == key)
                .ok_or_else(|| Error::NotSubcover {
                    context: key.to_string(),
                })?;
            keep.push(found);
        }
        self.restrict_model(&keep)
    }

    /// Full event list of a context, in canonical order.
    pub fn events_of(&self, c: CtxIdx) -> Vec<Section> {
        event_sections(&self.scenario, &self.scenario.contexts()[c]).expect("context is resolved")
    }
}
