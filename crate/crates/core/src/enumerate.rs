//! Rule-driven enumeration of the tree grammar under a degree cutoff.
//!
//! The grammar: kernel edges must come from the dependency lists, a node's
//! branch multiset embeds into the dependency list of its incoming kernel
//! label and its noise (for the root: of some kernel label), and polynomial
//! decorations are bounded by the remaining degree budget.
//!
//! Finiteness is certified before generation: the minimal subtree degree per
//! kernel label is computed by fixed-point iteration and every production
//! step must gain at least a fixed positive delta. Specs failing the check
//! are rejected as not subcritical.

use crate::equation::{EdgeDecoration, EquationSpec, KernelLabel, NoiseLabel};
use crate::error::AlgebraError;
use crate::multiindex::MultiIndex;
use crate::rational::Q;
use crate::tree::DecoratedTree;
use num_traits::Zero;
use rand::Rng;
use std::collections::BTreeSet;

/// Which linear span to enumerate.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TreeSpace {
    /// Full trees; the root may carry any noise.
    Full,
    /// Positive span: no noise at the root.
    Positive,
}

/// Result of the subcriticality analysis.
#[derive(Clone, Debug)]
pub struct GrammarBounds {
    /// Minimal degree of a valid subtree hanging under each kernel label.
    pub min_subtree_degree: Vec<Q>,
    /// Minimal degree over all valid trees.
    pub min_tree_degree: Q,
    /// Guaranteed degree gain of one production step.
    pub delta: Q,
}

const MAX_FIXPOINT_ITERS: usize = 100;

/// Certifies that only finitely many grammar trees exist below any degree.
pub fn subcriticality_check(spec: &EquationSpec) -> Result<GrammarBounds, AlgebraError> {
    let nk = spec.kernel_names.len();
    let noise_count = spec.noise_names.len();

    // Minimal node value for a node below kernel label t, given candidate
    // minimal subtree degrees x.
    let node_min = |t: KernelLabel, x: &[Q]| -> Q {
        let mut best: Option<Q> = None;
        for l in 0..noise_count {
            let l = NoiseLabel(l as u16);
            let mut v = spec.noise_degree(l).expect("label in range").clone();
            for b in spec.dependency_of(t, l) {
                let cost = spec.edge_degree(b).expect("label in range")
                    + x[b.label.0 as usize].clone();
                if cost < Q::zero() {
                    v += cost;
                }
            }
            best = Some(match best {
                None => v,
                Some(b) => b.min(v),
            });
        }
        best.expect("at least the distinguished noise exists")
    };

    // Seed with bare-node values, then iterate to the fixed point.
    let mut x: Vec<Q> = (0..nk)
        .map(|t| node_min(KernelLabel(t as u16), &vec![Q::zero(); nk]))
        .collect();
    let mut stable = nk == 0;
    for _ in 0..MAX_FIXPOINT_ITERS {
        let next: Vec<Q> = (0..nk)
            .map(|t| node_min(KernelLabel(t as u16), &x))
            .collect();
        if next == x {
            stable = true;
            break;
        }
        x = next;
    }
    if !stable {
        return Err(AlgebraError::NotSubcritical(
            "minimal subtree degrees do not stabilize".into(),
        ));
    }

    // Production gain: descending one edge into a child must raise the total
    // degree by a positive amount even after the cheapest siblings and noise.
    let mut delta: Option<Q> = None;
    for ((_, l), entries) in &spec.dependency {
        for (i, child) in entries.iter().enumerate() {
            let mut step = spec.edge_degree(child)? + spec.noise_degree(*l)?.clone();
            for (j, sibling) in entries.iter().enumerate() {
                if i == j {
                    continue;
                }
                let cost = spec.edge_degree(sibling)? + x[sibling.label.0 as usize].clone();
                if cost < Q::zero() {
                    step += cost;
                }
            }
            delta = Some(match delta {
                None => step,
                Some(d) => d.min(step),
            });
        }
    }
    let delta = delta.unwrap_or_else(|| Q::from_integer(1.into()));
    if delta <= Q::zero() {
        return Err(AlgebraError::NotSubcritical(format!(
            "a production step gains {} <= 0",
            crate::rational::format_q(&delta)
        )));
    }

    let mut min_tree = Q::zero();
    for l in 0..noise_count {
        let l = NoiseLabel(l as u16);
        for t in 0..nk.max(1) {
            let mut v = spec.noise_degree(l)?.clone();
            if nk > 0 {
                for b in spec.dependency_of(KernelLabel(t as u16), l) {
                    let cost = spec.edge_degree(b)? + x[b.label.0 as usize].clone();
                    if cost < Q::zero() {
                        v += cost;
                    }
                }
            }
            if v < min_tree {
                min_tree = v;
            }
        }
    }

    Ok(GrammarBounds {
        min_subtree_degree: x,
        min_tree_degree: min_tree,
        delta,
    })
}

/// All multi-indices with scaled length at most `budget`.
pub fn polys_up_to(spec: &EquationSpec, budget: &Q) -> Vec<MultiIndex> {
    fn rec(
        spec: &EquationSpec,
        current: &mut Vec<u32>,
        i: usize,
        left: Q,
        out: &mut Vec<MultiIndex>,
    ) {
        if i == current.len() {
            out.push(MultiIndex(current.clone()));
            return;
        }
        let s = &spec.scaling[i];
        let mut v = 0u32;
        loop {
            let cost = s * Q::from_integer(v.into());
            if cost > left {
                break;
            }
            current[i] = v;
            rec(spec, current, i + 1, left.clone() - cost, out);
            v += 1;
        }
        current[i] = 0;
    }
    let mut out = Vec::new();
    if *budget >= Q::zero() {
        let mut current = vec![0u32; spec.width()];
        rec(spec, &mut current, 0, budget.clone(), &mut out);
    }
    out
}

struct Generator<'a> {
    spec: &'a EquationSpec,
    bounds: GrammarBounds,
}

impl<'a> Generator<'a> {
    /// All valid subtrees under an edge labelled `t` with degree at most
    /// `budget`.
    fn subtrees(&self, t: KernelLabel, budget: &Q) -> Vec<DecoratedTree> {
        let floor = &self.bounds.min_subtree_degree[t.0 as usize];
        if budget < floor {
            return Vec::new();
        }
        let mut out = BTreeSet::new();
        for l in 0..self.spec.noise_names.len() {
            let l = NoiseLabel(l as u16);
            let allowed = self.spec.dependency_of(t, l).to_vec();
            self.nodes_with(l, &allowed, budget, &mut out);
        }
        out.into_iter().collect()
    }

    /// Assembles all nodes with fixed noise and a branch multiset embedding
    /// into `allowed`, degree at most `budget`, any polynomial decoration.
    fn nodes_with(
        &self,
        l: NoiseLabel,
        allowed: &[EdgeDecoration],
        budget: &Q,
        out: &mut BTreeSet<DecoratedTree>,
    ) {
        let noise_deg = self.spec.noise_degree(l).expect("valid label").clone();
        let branch_budget = budget.clone() - &noise_deg;
        // Group equal dependency entries to enumerate branch multisets.
        let mut sorted = allowed.to_vec();
        sorted.sort();
        let mut groups: Vec<(EdgeDecoration, usize)> = Vec::new();
        for e in &sorted {
            match groups.last_mut() {
                Some((g, m)) if g == e => *m += 1,
                _ => groups.push((e.clone(), 1)),
            }
        }
        let mut acc: Vec<(EdgeDecoration, DecoratedTree)> = Vec::new();
        let spec = self.spec;
        self.fill_groups(&groups, 0, branch_budget, &mut acc, &mut |branches| {
            let used: Q = branches
                .iter()
                .map(|(e, t)| {
                    spec.edge_degree(e).expect("valid label")
                        + t.degree(spec).expect("valid label")
                })
                .sum();
            let poly_budget = budget.clone() - &noise_deg - used;
            for poly in polys_up_to(spec, &poly_budget) {
                out.insert(DecoratedTree::assemble(poly, Some(l), branches.to_vec()));
            }
        });
    }

    /// Chooses, group by group, how many branches to spawn and which subtrees
    /// to hang below them; `budget` bounds the total branch cost.
    fn fill_groups(
        &self,
        groups: &[(EdgeDecoration, usize)],
        gi: usize,
        budget: Q,
        acc: &mut Vec<(EdgeDecoration, DecoratedTree)>,
        emit: &mut dyn FnMut(&[(EdgeDecoration, DecoratedTree)]),
    ) {
        if gi == groups.len() {
            if budget >= Q::zero() {
                emit(acc);
            }
            return;
        }
        let (edge, max_mult) = groups[gi].clone();
        let edge_deg = self.spec.edge_degree(&edge).expect("valid label");
        // Later groups may still subtract at most this much.
        let rest_credit = self.min_completion(&groups[gi + 1..]);
        // A single pick from this group can use everything the others cannot
        // possibly reclaim.
        let own_floor = (edge_deg.clone()
            + self.bounds.min_subtree_degree[edge.label.0 as usize].clone())
        .min(Q::zero());
        let per_pick_budget = budget.clone() - rest_credit.clone()
            - own_floor.clone() * Q::from_integer(((max_mult.max(1) - 1) as i64).into())
            - edge_deg.clone();
        let candidates = self.subtrees(edge.label, &per_pick_budget);
        self.pick_from_group(
            groups, gi, &edge, &candidates, 0, max_mult, budget, acc, emit,
        );
    }

    /// Sum of the cheapest possible (negative) contributions of the remaining
    /// groups.
    fn min_completion(&self, groups: &[(EdgeDecoration, usize)]) -> Q {
        let mut acc = Q::zero();
        for (e, m) in groups {
            let c = self.spec.edge_degree(e).expect("valid label")
                + self.bounds.min_subtree_degree[e.label.0 as usize].clone();
            if c < Q::zero() {
                for _ in 0..*m {
                    acc += c.clone();
                }
            }
        }
        acc
    }

    #[allow(clippy::too_many_arguments)]
    fn pick_from_group(
        &self,
        groups: &[(EdgeDecoration, usize)],
        gi: usize,
        edge: &EdgeDecoration,
        candidates: &[DecoratedTree],
        start: usize,
        slots_left: usize,
        budget: Q,
        acc: &mut Vec<(EdgeDecoration, DecoratedTree)>,
        emit: &mut dyn FnMut(&[(EdgeDecoration, DecoratedTree)]),
    ) {
        // Option: stop adding branches from this group.
        self.fill_groups(groups, gi + 1, budget.clone(), acc, emit);
        if slots_left == 0 {
            return;
        }
        let edge_deg = self.spec.edge_degree(edge).expect("valid label");
        let rest_credit = self.min_completion(&groups[gi + 1..]);
        let own_floor = (edge_deg.clone()
            + self.bounds.min_subtree_degree[edge.label.0 as usize].clone())
        .min(Q::zero());
        for (i, cand) in candidates.iter().enumerate().skip(start) {
            let cost = edge_deg.clone() + cand.degree(self.spec).expect("valid label");
            let slack = own_floor.clone() * Q::from_integer(((slots_left - 1) as i64).into());
            if cost.clone() > budget.clone() - rest_credit.clone() - slack {
                continue;
            }
            acc.push((edge.clone(), cand.clone()));
            self.pick_from_group(
                groups,
                gi,
                edge,
                candidates,
                i, // non-decreasing picks: multiset semantics
                slots_left - 1,
                budget.clone() - cost,
                acc,
                emit,
            );
            acc.pop();
        }
    }
}

/// Enumerates every canonical grammar tree of degree at most `gamma`.
pub fn enumerate_trees(
    spec: &EquationSpec,
    gamma: &Q,
    space: TreeSpace,
) -> Result<Vec<DecoratedTree>, AlgebraError> {
    let bounds = subcriticality_check(spec)?;
    let gen = Generator { spec, bounds };
    let mut out: BTreeSet<DecoratedTree> = BTreeSet::new();

    let noise_range: Vec<NoiseLabel> = match space {
        TreeSpace::Full => (0..spec.noise_names.len())
            .map(|i| NoiseLabel(i as u16))
            .collect(),
        TreeSpace::Positive => vec![NoiseLabel::ZERO],
    };

    for l in noise_range {
        // The root may be typed by any kernel label.
        for t in 0..spec.kernel_names.len().max(1) {
            let allowed = if spec.kernel_names.is_empty() {
                Vec::new()
            } else {
                gen.spec.dependency_of(KernelLabel(t as u16), l).to_vec()
            };
            gen.nodes_with(l, &allowed, gamma, &mut out);
        }
    }

    // Belt and braces: everything emitted must respect the cutoff.
    let mut result: Vec<DecoratedTree> = Vec::new();
    for t in out {
        if t.degree(spec)? <= *gamma {
            result.push(t);
        }
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// Random decorated trees for property tests
// ---------------------------------------------------------------------------

/// Shape parameters for random tree generation; grammar constraints are not
/// applied so algebraic identities get exercised on arbitrary decorations.
#[derive(Clone, Debug)]
pub struct RandomTreeParams {
    pub width: usize,
    pub kernel_labels: u16,
    pub noise_labels: u16,
    pub max_edges: usize,
    pub max_decoration: u32,
}

impl Default for RandomTreeParams {
    fn default() -> Self {
        RandomTreeParams {
            width: 2,
            kernel_labels: 1,
            noise_labels: 2,
            max_edges: 4,
            max_decoration: 2,
        }
    }
}

pub fn random_tree<R: Rng>(rng: &mut R, params: &RandomTreeParams) -> DecoratedTree {
    let edges = rng.gen_range(0..=params.max_edges);
    random_tree_with_edges(rng, params, edges)
}

fn random_multiindex<R: Rng>(rng: &mut R, params: &RandomTreeParams) -> MultiIndex {
    MultiIndex(
        (0..params.width)
            .map(|_| rng.gen_range(0..=params.max_decoration))
            .collect(),
    )
}

fn random_tree_with_edges<R: Rng>(
    rng: &mut R,
    params: &RandomTreeParams,
    edges: usize,
) -> DecoratedTree {
    let poly = random_multiindex(rng, params);
    let mut budget = edges;
    let noise = if budget > 0 && rng.gen_bool(0.4) {
        budget -= 1;
        Some(NoiseLabel(rng.gen_range(0..params.noise_labels)))
    } else {
        None
    };
    let mut branches = Vec::new();
    while budget > 0 {
        let sub_edges = rng.gen_range(0..budget);
        budget -= sub_edges + 1;
        let edge = EdgeDecoration::new(
            KernelLabel(rng.gen_range(0..params.kernel_labels)),
            random_multiindex(rng, params),
        );
        branches.push((edge, random_tree_with_edges(rng, params, sub_edges)));
    }
    DecoratedTree::assemble(poly, noise, branches)
}
