//! Bundle-diagram export in DOT format.
//!
//! The rendering is a static approximation of a bundle diagram: one box
//! node per measurement forms the base, a dotted base skeleton connects
//! measurements that share a context, and each context contributes a
//! cluster of fibre nodes, one per supported section, labelled with the
//! section's outcome tuple. Every fibre node is tied to the base by a
//! single edge to its context's first measurement, so the fibre edge count
//! equals the model's total support.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::EmpiricalModel;

fn quote(text: &str) -> String {
    let escaped = text.replace('\\', "\\\\").replace('"', "\\\"");
    format!("\"{escaped}\"")
}

/// Renders the model as a deterministic DOT graph.
pub fn export_bundle_dot(model: &EmpiricalModel) -> String {
    let scenario = model.scenario();
    let mut out = String::new();
    out.push_str("graph bundle {\n");
    out.push_str("  rankdir=BT;\n");
    for (m, name) in scenario.measurements().iter().enumerate() {
        let _ = writeln!(out, "  m{m} [shape=box, label={}];", quote(name));
    }
    let mut skeleton: BTreeSet<(u32, u32)> = BTreeSet::new();
    for members in scenario.contexts() {
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                skeleton.insert((members[i], members[j]));
            }
        }
    }
    for (a, b) in skeleton {
        let _ = writeln!(out, "  m{a} -- m{b} [style=dotted];");
    }
    for c in 0..scenario.n_contexts() {
        let _ = writeln!(out, "  subgraph cluster_c{c} {{");
        let _ = writeln!(out, "    label={};", quote(&scenario.context_key(c)));
        for (i, section) in model.support(c).iter().enumerate() {
            let _ = writeln!(
                out,
                "    c{c}_s{i} [label={}];",
                quote(&section.render_values(scenario))
            );
        }
        out.push_str("  }\n");
    }
    for c in 0..scenario.n_contexts() {
        let anchor = scenario.contexts()[c][0];
        for i in 0..model.support(c).len() {
            let _ = writeln!(out, "  c{c}_s{i} -- m{anchor};");
        }
    }
    out.push_str("}\n");
    out
}
