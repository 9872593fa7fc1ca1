//! Linear obstructions over GF(2).
//!
//! Each possible section of each context contributes one indicator variable.
//! For every intersecting context pair and every shared restriction there is
//! one parity row tying together the sections on both sides that restrict to
//! it. Vectors in the kernel of this row system are formal families: GF(2)
//! combinations of possible sections whose boundary contributions cancel on
//! every intersection.
//!
//! The obstruction of a possible section vanishes when some kernel vector
//! selects exactly that section in its own context (coefficient one there,
//! zero on its siblings, anything elsewhere). A genuine compatible family
//! containing the section yields such a vector, so a non-vanishing
//! obstruction certifies that no family contains the section; the converse
//! fails in general because formal families need not be 0/1-selections.
//!
//! The kernel basis is computed once per model and cached; each per-section
//! query then solves a small system in the combination coefficients only.

use crate::compat::CompatView;
use crate::error::{Error, Result};
use crate::gf2::{gf2_kernel_basis, gf2_solve, Gf2System, Gf2Vector};
use crate::model::{EmpiricalModel, Property, Verdict, Witness};
use crate::scenario::{CtxIdx, Section};

/// Kernel basis of the parity rows of one model or tower level.
#[derive(Debug, Clone)]
pub(crate) struct KernelCache {
    offsets: Vec<usize>,
    basis: Vec<Gf2Vector>,
}

impl KernelCache {
    pub fn build(view: &CompatView) -> KernelCache {
        let offsets = view.var_offsets();
        let n_vars = *offsets.last().expect("offsets always end with the total");
        let rows: Vec<Gf2Vector> = view
            .coboundary_rows()
            .into_iter()
            .map(|ones| Gf2Vector::from_indices(n_vars, &ones))
            .collect();
        KernelCache {
            basis: gf2_kernel_basis(&rows, n_vars),
            offsets,
        }
    }

    pub fn n_vars(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Dimension of the space of formal families.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Flat variable index of (context, support position).
    pub fn var(&self, ctx: usize, idx: usize) -> usize {
        self.offsets[ctx] + idx
    }

    /// Searches the kernel for a vector whose block at `ctx` is exactly the
    /// indicator of support position `idx`. Returns the expanded vector.
    pub fn member_with_block(&self, ctx: usize, idx: usize) -> Option<Gf2Vector> {
        let block = self.offsets[ctx]..self.offsets[ctx + 1];
        let pinned = self.var(ctx, idx);
        debug_assert!(block.contains(&pinned));
        // Unknowns are the combination coefficients of the basis vectors;
        // one equation per variable of the pinned block.
        let mut system = Gf2System::new(self.basis.len());
        for v in block {
            let coeffs: Vec<usize> = (0..self.basis.len())
                .filter(|&i| self.basis[i].get(v))
                .collect();
            system.add_row(&coeffs, v == pinned);
        }
        let combo = gf2_solve(&system)?;
        let mut member = Gf2Vector::zero(self.n_vars());
        for i in combo.ones() {
            member.xor_assign(&self.basis[i]);
        }
        debug_assert!(member.get(pinned));
        Some(member)
    }
}

impl EmpiricalModel {
    pub(crate) fn kernel_cache(&self) -> &KernelCache {
        self.kernel.get_or_init(|| KernelCache::build(self.view()))
    }
}

/// The parity rows of a model, as lists of flat variable indices. Variables
/// enumerate possible sections context by context, in support order; the
/// labels are given by [`variable_labels`].
pub fn coboundary_rows(model: &EmpiricalModel) -> Vec<Vec<usize>> {
    model.view().coboundary_rows()
}

/// Human-readable (context key, outcome tuple) label of each flat variable.
pub fn variable_labels(model: &EmpiricalModel) -> Vec<(String, String)> {
    let scenario = model.scenario();
    let mut labels = Vec::with_capacity(model.total_support());
    for c in 0..scenario.n_contexts() {
        for section in model.support(c) {
            labels.push((scenario.context_key(c), section.render_values(scenario)));
        }
    }
    labels
}

/// Dimension of the kernel of the parity rows: the number of independent
/// formal families the model admits.
pub fn h0_dimension(model: &EmpiricalModel) -> usize {
    model.kernel_cache().dimension()
}

/// Does the obstruction of this possible section vanish, i.e. is there a
/// formal family selecting exactly this section in its own context?
pub fn obstruction_vanishes(model: &EmpiricalModel, ctx: CtxIdx, section: &Section) -> Result<bool> {
    Ok(vanishing_member(model, ctx, section)?.is_some())
}

fn vanishing_member(
    model: &EmpiricalModel,
    ctx: CtxIdx,
    section: &Section,
) -> Result<Option<Gf2Vector>> {
    let idx = model
        .support_index(ctx, section)
        .ok_or_else(|| Error::UnknownSection {
            context: model.scenario().context_key(ctx),
            section: section.render(model.scenario()),
        })?;
    Ok(model.kernel_cache().member_with_block(ctx, idx))
}

/// Renders the coefficient-one entries of a formal family as (context key,
/// outcome tuple) pairs, for witness reporting.
fn render_member(model: &EmpiricalModel, member: &Gf2Vector) -> Vec<(String, String)> {
    let labels = variable_labels(model);
    member.ones().into_iter().map(|v| labels[v].clone()).collect()
}

/// Linear analogue of the extendability question: holds when no formal
/// family selects exactly this section in its own context. A negative
/// verdict carries the formal family found.
pub fn is_clc_at(model: &EmpiricalModel, ctx: CtxIdx, section: &Section) -> Result<Verdict> {
    let member = vanishing_member(model, ctx, section)?;
    Ok(Verdict {
        property: Property::ClcAt,
        holds: member.is_none(),
        level: 0,
        witness: member.map(|m| Witness::Cochain(render_member(model, &m))),
    })
}

/// Holds when the obstruction of every possible section is non-vanishing.
/// A negative verdict carries the formal family of the first (in canonical
/// order) possible section whose obstruction vanishes.
pub fn is_csc(model: &EmpiricalModel) -> Result<Verdict> {
    for c in 0..model.scenario().n_contexts() {
        for section in model.support(c) {
            if let Some(member) = vanishing_member(model, c, section)? {
                return Ok(Verdict {
                    property: Property::Csc,
                    holds: false,
                    level: 0,
                    witness: Some(Witness::Cochain(render_member(model, &member))),
                });
            }
        }
    }
    Ok(Verdict {
        property: Property::Csc,
        holds: true,
        level: 0,
        witness: None,
    })
}
