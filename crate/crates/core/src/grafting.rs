//! Deformed grafting, node-decoration raising and the product `star2`.
//!
//! Grafting attaches a tree below a node of another tree via a new kernel
//! edge; the deformation transfers part of the target node's polynomial
//! decoration onto the new edge, weighted by binomials. Target nodes range
//! over represented nodes only, so noise leaves are never grafting or
//! raising targets. Invalid multi-index subtractions annihilate the term
//! silently.

use crate::equation::EdgeDecoration;
use crate::error::AlgebraError;
use crate::multiindex::MultiIndex;
use crate::rational::Q;
use crate::tree::{DecoratedTree, TreeCombination};
use num_traits::One;

/// Which nodes a raising operator acts on. Node ids are preorder indices of
/// the canonical form: the root is 0, then each branch in canonical order.
#[derive(Clone, Debug)]
pub enum RaiseTargets {
    AllNodes,
    Subset(Vec<usize>),
}

/// Grafts `sigma` below every node of `tau` through a new edge decorated by
/// `a`, with binomial decoration transfer between the target node and the
/// new edge.
pub fn deformed_graft(
    sigma: &DecoratedTree,
    a: &EdgeDecoration,
    tau: &DecoratedTree,
) -> TreeCombination {
    let mut out = TreeCombination::zero();
    graft_rec(sigma, a, tau, &mut out);
    out
}

fn graft_rec(
    sigma: &DecoratedTree,
    a: &EdgeDecoration,
    tau: &DecoratedTree,
    out: &mut TreeCombination,
) {
    // Graft at the root of tau.
    let bound = min_mi(tau.poly(), &a.derivative);
    for l in bound.sub_indices() {
        let coeff = tau.poly().binomial(&l);
        let new_edge = match a.checked_sub(&l) {
            Some(e) => e,
            None => continue,
        };
        let new_poly = match tau.poly().checked_sub(&l) {
            Some(p) => p,
            None => continue,
        };
        let mut branches = tau.branches().to_vec();
        branches.push((new_edge, sigma.clone()));
        out.add_term(
            DecoratedTree::assemble(new_poly, tau.noise(), branches),
            Q::from_integer(coeff),
        );
    }
    // Graft below each branch; duplicate branches contribute one term per
    // copy, matching the sum over nodes.
    for (i, (_, sub)) in tau.branches().iter().enumerate() {
        let mut inner = TreeCombination::zero();
        graft_rec(sigma, a, sub, &mut inner);
        for (t, c) in inner.iter() {
            let mut branches = tau.branches().to_vec();
            branches[i] = (branches[i].0.clone(), t.clone());
            out.add_term(
                DecoratedTree::assemble(tau.poly().clone(), tau.noise(), branches),
                c.clone(),
            );
        }
    }
}

fn min_mi(a: &MultiIndex, b: &MultiIndex) -> MultiIndex {
    MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| *x.min(y)).collect())
}

/// Bilinear extension of [`deformed_graft`] to combinations.
pub fn deformed_graft_comb(
    sigma: &TreeCombination,
    a: &EdgeDecoration,
    tau: &TreeCombination,
) -> TreeCombination {
    let mut out = TreeCombination::zero();
    for (s, cs) in sigma.iter() {
        for (t, ct) in tau.iter() {
            out = out.add(&deformed_graft(s, a, t).scale(&(cs * ct)));
        }
    }
    out
}

/// Raising operator: distributes `k` over the target nodes in all possible
/// ways, adding the pieces to their polynomial decorations. Each split
/// carries the multinomial weight `k! / prod_v k_v!`, making the operator
/// the iterate of single-unit raisings; this weight is what makes the
/// product dual to the splitting of node monomials in the coproduct.
pub fn raise_decoration(
    tau: &DecoratedTree,
    k: &MultiIndex,
    targets: &RaiseTargets,
) -> Result<TreeCombination, AlgebraError> {
    let n = tau.node_count();
    let ids: Vec<usize> = match targets {
        RaiseTargets::AllNodes => (0..n).collect(),
        RaiseTargets::Subset(ids) => {
            for &i in ids {
                if i >= n {
                    return Err(AlgebraError::InvalidTree(format!(
                        "node id {i} out of range (tree has {n} nodes)"
                    )));
                }
            }
            ids.clone()
        }
    };
    let k_fact = Q::from_integer(k.factorial());
    let mut out = TreeCombination::zero();
    for parts in k.decompositions(ids.len()) {
        let weight: Q = parts.iter().fold(k_fact.clone(), |acc, p| {
            acc / Q::from_integer(p.factorial())
        });
        let mut deltas = vec![None; n];
        for (slot, part) in ids.iter().zip(parts) {
            deltas[*slot] = Some(part);
        }
        let mut counter = 0usize;
        out.add_term(add_polys(tau, &deltas, &mut counter), weight);
    }
    Ok(out)
}

/// Single-direction raising summed over all nodes.
pub fn raise_unit(tau: &DecoratedTree, direction: usize) -> TreeCombination {
    let k = MultiIndex::unit(tau.width(), direction);
    raise_decoration(tau, &k, &RaiseTargets::AllNodes).expect("all-node targets are valid")
}

fn add_polys(
    tau: &DecoratedTree,
    deltas: &[Option<MultiIndex>],
    counter: &mut usize,
) -> DecoratedTree {
    let my = *counter;
    *counter += 1;
    let poly = match &deltas[my] {
        Some(d) => tau.poly().add(d),
        None => tau.poly().clone(),
    };
    let branches = tau
        .branches()
        .iter()
        .map(|(e, t)| (e.clone(), add_polys(t, deltas, counter)))
        .collect();
    DecoratedTree::assemble(poly, tau.noise(), branches)
}

/// The product `star2`: for `sigma = X^k prod_i I_{a_i}(sigma_i)`, grafts all
/// planted factors simultaneously onto `tau` with a joint deformation, then
/// distributes `X^k` over the original nodes of `tau`.
///
/// Joint deformation: factors landing on the same node strip disjoint pieces
/// off its decoration one after another, so the combined weight is the
/// multinomial coefficient. The polynomial split happens after stripping and
/// on the original node set only.
pub fn star2(sigma: &DecoratedTree, tau: &DecoratedTree) -> Result<TreeCombination, AlgebraError> {
    if sigma.noise().is_some() {
        return Err(AlgebraError::MalformedLeft);
    }
    let n = tau.node_count();
    let factors: Vec<(EdgeDecoration, DecoratedTree)> = sigma.branches().to_vec();
    let k = sigma.poly();

    let mut out = TreeCombination::zero();
    let mut assignment = vec![0usize; factors.len()];
    loop {
        // Group the incoming factors per node, preserving factor order.
        let mut per_node: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (fi, &node) in assignment.iter().enumerate() {
            per_node[node].push(fi);
        }
        let k_fact = Q::from_integer(k.factorial());
        for kparts in k.decompositions(n) {
            let weight: Q = kparts.iter().fold(k_fact.clone(), |acc, p| {
                acc / Q::from_integer(p.factorial())
            });
            let mut counter = 0usize;
            let built = build_node(tau, &factors, &per_node, &kparts, &mut counter);
            out = out.add(&built.scale(&weight));
        }
        // Advance the mixed-radix assignment counter.
        if factors.is_empty() {
            return Ok(out);
        }
        let mut i = 0;
        loop {
            if i == assignment.len() {
                return Ok(out);
            }
            assignment[i] += 1;
            if assignment[i] < n {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}

/// Builds the local sum at one node: all ways the incoming factors deform
/// the node decoration, combined with the recursive results below.
fn build_node(
    tau: &DecoratedTree,
    factors: &[(EdgeDecoration, DecoratedTree)],
    per_node: &[Vec<usize>],
    kparts: &[MultiIndex],
    counter: &mut usize,
) -> TreeCombination {
    let my = *counter;
    *counter += 1;

    let mut child_combos: Vec<TreeCombination> = Vec::with_capacity(tau.branches().len());
    for (_, sub) in tau.branches() {
        child_combos.push(build_node(sub, factors, per_node, kparts, counter));
    }

    let incoming = &per_node[my];
    let mut local: Vec<(Vec<(EdgeDecoration, DecoratedTree)>, MultiIndex, Q)> = Vec::new();
    enumerate_deformations(
        tau.poly(),
        factors,
        incoming,
        0,
        &mut Vec::new(),
        &mut local,
    );

    let mut out = TreeCombination::zero();
    for (new_branches, stripped, coeff) in &local {
        let poly = tau
            .poly()
            .checked_sub(stripped)
            .expect("strip bounded by decoration")
            .add(&kparts[my]);
        // Combine one choice per child branch.
        let mut partial: Vec<(Vec<(EdgeDecoration, DecoratedTree)>, Q)> =
            vec![(Vec::new(), coeff.clone())];
        for (bi, combo) in child_combos.iter().enumerate() {
            let edge = &tau.branches()[bi].0;
            let mut next = Vec::new();
            for (prefix, c) in &partial {
                for (t, ct) in combo.iter() {
                    let mut b = prefix.clone();
                    b.push((edge.clone(), t.clone()));
                    next.push((b, c * ct));
                }
            }
            partial = next;
        }
        for (mut branches, c) in partial {
            branches.extend(new_branches.iter().cloned());
            out.add_term(
                DecoratedTree::assemble(poly.clone(), tau.noise(), branches),
                c,
            );
        }
    }
    out
}

/// Enumerates deformation choices for the factors grafted onto one node:
/// each factor strips a piece off what remains of the node decoration and
/// lowers its own edge derivative by the same amount.
fn enumerate_deformations(
    node_poly: &MultiIndex,
    factors: &[(EdgeDecoration, DecoratedTree)],
    incoming: &[usize],
    i: usize,
    picked: &mut Vec<(EdgeDecoration, DecoratedTree, MultiIndex)>,
    out: &mut Vec<(Vec<(EdgeDecoration, DecoratedTree)>, MultiIndex, Q)>,
) {
    if i == incoming.len() {
        let mut stripped = MultiIndex::zeros(node_poly.len());
        let mut coeff = Q::one();
        let mut remaining = node_poly.clone();
        let mut branches = Vec::with_capacity(picked.len());
        for (edge, sub, l) in picked.iter() {
            let b = remaining.binomial(l);
            coeff *= Q::from_integer(b);
            remaining = remaining.checked_sub(l).expect("bounded");
            stripped = stripped.add(l);
            branches.push((edge.clone(), sub.clone()));
        }
        out.push((branches, stripped, coeff));
        return;
    }
    let (edge, sub) = &factors[incoming[i]];
    let already: MultiIndex = picked
        .iter()
        .fold(MultiIndex::zeros(node_poly.len()), |acc, (_, _, l)| {
            acc.add(l)
        });
    let room = match node_poly.checked_sub(&already) {
        Some(r) => r,
        None => return,
    };
    let bound = min_mi(&room, &edge.derivative);
    for l in bound.sub_indices() {
        let new_edge = match edge.checked_sub(&l) {
            Some(e) => e,
            None => continue,
        };
        picked.push((new_edge, sub.clone(), l));
        enumerate_deformations(node_poly, factors, incoming, i + 1, picked, out);
        picked.pop();
    }
}

/// Bilinear extension of [`star2`]; every left term must be noise-free.
pub fn star2_comb(
    sigma: &TreeCombination,
    tau: &TreeCombination,
) -> Result<TreeCombination, AlgebraError> {
    let mut out = TreeCombination::zero();
    for (s, cs) in sigma.iter() {
        for (t, ct) in tau.iter() {
            out = out.add(&star2(s, t)?.scale(&(cs * ct)));
        }
    }
    Ok(out)
}
