//! Coproducts, the product `star1`, and the renormalisation maps built from
//! them.
//!
//! The products are the primary computational path (they involve only finite
//! sums); the coproducts carry an explicit polynomial cap and serve as
//! cross-check oracles. All caps are in scaled degree units: a cap `c` keeps
//! every polynomial left-over `X^l` with `|l|_s <= c`.

use crate::enumerate::polys_up_to;
use crate::equation::{EquationSpec, NoiseLabel};
use crate::error::AlgebraError;
use crate::grafting::star2_comb;
use crate::multiindex::MultiIndex;
use crate::rational::Q;
use crate::tree::{Combination, DecoratedTree, Forest, TreeCombination};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Split combination with tree-valued left factors.
pub type TreeSplit = Combination<(DecoratedTree, DecoratedTree)>;
/// Split combination with forest-valued left factors.
pub type ForestSplit = Combination<(Forest, DecoratedTree)>;

/// A finite-support multiplicative functional on forests. The value on the
/// empty forest is 1; unit trees are invisible (forests drop them), so the
/// stored support contains proper trees only.
#[derive(Clone, Debug, Default)]
pub struct ForestCharacter {
    values: BTreeMap<DecoratedTree, Q>,
}

impl ForestCharacter {
    pub fn new() -> Self {
        ForestCharacter {
            values: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, tree: DecoratedTree, value: Q) {
        if tree.is_unit() || value.is_zero() {
            return;
        }
        self.values.insert(tree, value);
    }

    pub fn support(&self) -> impl Iterator<Item = (&DecoratedTree, &Q)> {
        self.values.iter()
    }

    pub fn eval_tree(&self, tree: &DecoratedTree) -> Q {
        if tree.is_unit() {
            return Q::one();
        }
        self.values.get(tree).cloned().unwrap_or_else(Q::zero)
    }

    pub fn eval_forest(&self, forest: &Forest) -> Q {
        let mut acc = Q::one();
        for t in forest.trees() {
            acc *= self.eval_tree(t);
            if acc.is_zero() {
                return acc;
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Coproducts
// ---------------------------------------------------------------------------

fn split_product_tree(a: &TreeSplit, b: &TreeSplit) -> TreeSplit {
    let mut out = TreeSplit::zero();
    for ((la, ra), ca) in a.iter() {
        for ((lb, rb), cb) in b.iter() {
            // Clashing noise decorations annihilate the term: the would-be
            // basis element does not exist in the tree space.
            let left = match la.tree_product(lb) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let right = match ra.tree_product(rb) {
                Ok(t) => t,
                Err(_) => continue,
            };
            out.add_term((left, right), ca * cb);
        }
    }
    out
}

fn split_product_forest(a: &ForestSplit, b: &ForestSplit) -> ForestSplit {
    let mut out = ForestSplit::zero();
    for ((la, ra), ca) in a.iter() {
        for ((lb, rb), cb) in b.iter() {
            let right = match ra.tree_product(rb) {
                Ok(t) => t,
                Err(_) => continue,
            };
            out.add_term((la.product(lb), right), ca * cb);
        }
    }
    out
}

/// The coproduct dual to `star2`. `hat` switches the noise rule from
/// "noise stays right" to "noise stays right or is cut off to the left".
pub fn delta2(
    tau: &DecoratedTree,
    spec: &EquationSpec,
    cap: &Q,
    hat: bool,
) -> Result<TreeSplit, AlgebraError> {
    let width = spec.width();
    let unit = DecoratedTree::unit(width);

    // Polynomial part: binomial splitting of the root monomial.
    let mut acc = {
        let mut s = TreeSplit::zero();
        let k = tau.poly();
        for l in k.sub_indices() {
            let rest = k.checked_sub(&l).expect("bounded");
            s.add_term(
                (DecoratedTree::monomial(l.clone()), DecoratedTree::monomial(rest)),
                Q::from_integer(k.binomial(&l)),
            );
        }
        s
    };

    if let Some(l) = tau.noise() {
        let mut s = TreeSplit::zero();
        s.add_term(
            (unit.clone(), DecoratedTree::noise_tree(l, width)),
            Q::one(),
        );
        if hat {
            s.add_term(
                (DecoratedTree::noise_tree(l, width), unit.clone()),
                Q::one(),
            );
        }
        acc = split_product_tree(&acc, &s);
    }

    for (edge, sub) in tau.branches() {
        let inner = delta2(sub, spec, cap, hat)?;
        let mut s = TreeSplit::zero();
        for ((li, ri), c) in inner.iter() {
            s.add_term(
                (li.clone(), DecoratedTree::planted(edge.clone(), ri.clone())),
                c.clone(),
            );
        }
        for l in polys_up_to(spec, cap) {
            s.add_term(
                (
                    DecoratedTree::planted(edge.add(&l), sub.clone()),
                    DecoratedTree::monomial(l.clone()),
                ),
                Q::one() / Q::from_integer(l.factorial()),
            );
        }
        acc = split_product_tree(&acc, &s);
    }
    Ok(acc)
}

/// Extraction away from the root, iterated through the branches.
pub fn delta_circ(
    tau: &DecoratedTree,
    spec: &EquationSpec,
    cap: &Q,
) -> Result<ForestSplit, AlgebraError> {
    let width = spec.width();
    let mut acc = {
        let mut s = ForestSplit::zero();
        s.add_term(
            (Forest::empty(), DecoratedTree::monomial(tau.poly().clone())),
            Q::one(),
        );
        s
    };
    if let Some(l) = tau.noise() {
        let mut s = ForestSplit::zero();
        s.add_term(
            (Forest::empty(), DecoratedTree::noise_tree(l, width)),
            Q::one(),
        );
        acc = split_product_forest(&acc, &s);
    }
    for (edge, sub) in tau.branches() {
        let inner = delta1(sub, spec, cap)?;
        let mut s = ForestSplit::zero();
        for ((f, r), c) in inner.iter() {
            s.add_term(
                (f.clone(), DecoratedTree::planted(edge.clone(), r.clone())),
                c.clone(),
            );
        }
        acc = split_product_forest(&acc, &s);
    }
    Ok(acc)
}

/// Extraction-contraction coaction: root extraction via the hat coproduct,
/// followed by extractions strictly inside, with the root piece joining the
/// extracted forest.
pub fn delta1(
    tau: &DecoratedTree,
    spec: &EquationSpec,
    cap: &Q,
) -> Result<ForestSplit, AlgebraError> {
    let hat = delta2(tau, spec, cap, true)?;
    let mut out = ForestSplit::zero();
    for ((left, root_piece), c) in hat.iter() {
        let inner = delta_circ(left, spec, cap)?;
        for ((f, remainder), c2) in inner.iter() {
            let forest = f.product(&Forest::single(root_piece.clone()));
            out.add_term((forest, remainder.clone()), c * c2);
        }
    }
    Ok(out)
}

/// Extends `delta1` multiplicatively to a forest.
pub fn delta1_forest(
    forest: &Forest,
    spec: &EquationSpec,
    cap: &Q,
) -> Result<Combination<(Forest, Forest)>, AlgebraError> {
    let mut acc = Combination::from_key((Forest::empty(), Forest::empty()));
    for tree in forest.trees() {
        let d = delta1(tree, spec, cap)?;
        let mut next = Combination::zero();
        for ((fa, ra), ca) in acc.iter() {
            for ((fb, rb), cb) in d.iter() {
                next.add_term(
                    (
                        fa.product(fb),
                        ra.product(&Forest::single(rb.clone())),
                    ),
                    ca * cb,
                );
            }
        }
        acc = next;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// star1
// ---------------------------------------------------------------------------

/// Inserts the forest's trees into a tree: one tree may replace the root's
/// empty noise slot (through `star2`), the rest distribute into the branch
/// subtrees recursively. Dual to `delta1`.
pub fn star1(forest: &Forest, tau: &DecoratedTree) -> Result<TreeCombination, AlgebraError> {
    let sigmas = forest.trees();
    let m = sigmas.len();
    let branches = tau.branches();
    let n = branches.len();
    let mut out = TreeCombination::zero();

    // Distribution of a set of forest indices into the n branch slots; the
    // callback receives per-slot index lists.
    fn assignments(indices: &[usize], slots: usize) -> Vec<Vec<Vec<usize>>> {
        if slots == 0 {
            return if indices.is_empty() {
                vec![vec![]]
            } else {
                Vec::new()
            };
        }
        let mut out = vec![vec![Vec::new(); slots]];
        for &ix in indices {
            let mut next = Vec::new();
            for partial in &out {
                for s in 0..slots {
                    let mut p = partial.clone();
                    p[s].push(ix);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    // Root insertion: pick j, insert sigma_j at the root slot, distribute
    // the rest. Only trees whose root noise slot is empty accept this.
    if tau.noise().is_none() {
        for j in 0..m {
            let rest: Vec<usize> = (0..m).filter(|&r| r != j).collect();
            for blocks in assignments(&rest, n) {
                let positive = rebuild_positive(tau, branches, &blocks, sigmas)?;
                let target = TreeCombination::from_key(sigmas[j].clone());
                out = out.add(&star2_comb(&positive, &target)?);
            }
        }
    }

    // No root insertion: everything distributes into the branches.
    let all: Vec<usize> = (0..m).collect();
    for blocks in assignments(&all, n) {
        let positive = rebuild_positive(tau, branches, &blocks, sigmas)?;
        for (t, c) in positive.iter() {
            let with_noise =
                DecoratedTree::assemble(t.poly().clone(), tau.noise(), t.branches().to_vec());
            out.add_term(with_noise, c.clone());
        }
    }
    Ok(out)
}

/// `X^k prod_i I_{a_i}(block_i star1 tau_i)` as a combination of noise-free
/// trees.
fn rebuild_positive(
    tau: &DecoratedTree,
    branches: &[(crate::equation::EdgeDecoration, DecoratedTree)],
    blocks: &[Vec<usize>],
    sigmas: &[DecoratedTree],
) -> Result<TreeCombination, AlgebraError> {
    let mut acc = TreeCombination::from_key(DecoratedTree::monomial(tau.poly().clone()));
    for (i, (edge, sub)) in branches.iter().enumerate() {
        let block = Forest::new(blocks[i].iter().map(|&r| sigmas[r].clone()).collect());
        let inner = star1(&block, sub)?;
        let mut next = TreeCombination::zero();
        for (t, c) in acc.iter() {
            for (s, cs) in inner.iter() {
                next.add_term(
                    t.tree_product(&DecoratedTree::planted(edge.clone(), s.clone()))?,
                    c * cs,
                );
            }
        }
        acc = next;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Renormalisation maps
// ---------------------------------------------------------------------------

/// Adjoint renormalisation: inserts character-weighted trees at every empty
/// noise slot, recursively.
pub fn m_star(beta: &ForestCharacter, tau: &DecoratedTree) -> Result<TreeCombination, AlgebraError> {
    let width = tau.width();
    let positive = mhat_star(beta, &strip_noise(tau))?;
    match tau.noise() {
        Some(l) => {
            let target = TreeCombination::from_key(DecoratedTree::noise_tree(l, width));
            star2_comb(&positive, &target)
        }
        None => {
            let mut target = TreeCombination::from_key(DecoratedTree::unit(width));
            for (t, v) in beta.support() {
                target.add_term(t.clone(), v / Q::from_integer(t.symmetry_factor()));
            }
            star2_comb(&positive, &target)
        }
    }
}

/// Morphism form on noise-free trees: recurses into the branches only.
pub fn mhat_star(
    beta: &ForestCharacter,
    tau: &DecoratedTree,
) -> Result<TreeCombination, AlgebraError> {
    if tau.noise().is_some() {
        return Err(AlgebraError::MalformedLeft);
    }
    let mut acc = TreeCombination::from_key(DecoratedTree::monomial(tau.poly().clone()));
    for (edge, sub) in tau.branches() {
        let inner = m_star(beta, sub)?;
        let mut next = TreeCombination::zero();
        for (t, c) in acc.iter() {
            for (s, cs) in inner.iter() {
                next.add_term(
                    t.tree_product(&DecoratedTree::planted(edge.clone(), s.clone()))?,
                    c * cs,
                );
            }
        }
        acc = next;
    }
    Ok(acc)
}

fn strip_noise(tau: &DecoratedTree) -> DecoratedTree {
    DecoratedTree::assemble(tau.poly().clone(), None, tau.branches().to_vec())
}

/// The adjoint of the character preparation map: replaces the root-anchored
/// part of `tau` by a character-weighted counterterm. Dually to the hat
/// coproduct, the whole of `tau` acts on each support tree through
/// [`star2_hat`], with the unit support term providing the identity part.
pub fn r_star(beta: &ForestCharacter, tau: &DecoratedTree) -> Result<TreeCombination, AlgebraError> {
    let mut out = TreeCombination::from_key(tau.clone());
    for (sigma, v) in beta.support() {
        let coeff = v / Q::from_integer(sigma.symmetry_factor());
        out = out.add(&star2_hat(tau, sigma)?.scale(&coeff));
    }
    Ok(out)
}

/// The product dual to the hat coproduct: the left tree's planted factors
/// and polynomial act on the right tree as in `star2`, and a left root
/// noise attaches to any node of the right tree that has none.
pub fn star2_hat(
    left: &DecoratedTree,
    right: &DecoratedTree,
) -> Result<TreeCombination, AlgebraError> {
    let positive = strip_noise(left);
    match left.noise() {
        None => crate::grafting::star2(&positive, right),
        Some(l) => {
            let mut out = TreeCombination::zero();
            for target in attach_noise_everywhere(right, l) {
                out = out.add(&crate::grafting::star2(&positive, &target)?);
            }
            Ok(out)
        }
    }
}

/// One copy of the tree per noise-free node, with the label attached there.
fn attach_noise_everywhere(tau: &DecoratedTree, l: NoiseLabel) -> Vec<DecoratedTree> {
    let mut out = Vec::new();
    if tau.noise().is_none() {
        out.push(DecoratedTree::assemble(
            tau.poly().clone(),
            Some(l),
            tau.branches().to_vec(),
        ));
    }
    for (i, (_, sub)) in tau.branches().iter().enumerate() {
        for modified in attach_noise_everywhere(sub, l) {
            let mut branches = tau.branches().to_vec();
            branches[i] = (branches[i].0.clone(), modified);
            out.push(DecoratedTree::assemble(
                tau.poly().clone(),
                tau.noise(),
                branches,
            ));
        }
    }
    out
}

/// Primal maps obtained by pairing a character against a coproduct factor.
pub fn m_primal(
    beta: &ForestCharacter,
    tau: &DecoratedTree,
    spec: &EquationSpec,
    cap: &Q,
) -> Result<TreeCombination, AlgebraError> {
    let d1 = delta1(tau, spec, cap)?;
    let mut out = TreeCombination::zero();
    for ((f, r), c) in d1.iter() {
        out.add_term(r.clone(), c * beta.eval_forest(f));
    }
    Ok(out)
}

pub fn mhat_primal(
    beta: &ForestCharacter,
    tau: &DecoratedTree,
    spec: &EquationSpec,
    cap: &Q,
) -> Result<TreeCombination, AlgebraError> {
    let dc = delta_circ(tau, spec, cap)?;
    let mut out = TreeCombination::zero();
    for ((f, r), c) in dc.iter() {
        out.add_term(r.clone(), c * beta.eval_forest(f));
    }
    Ok(out)
}

pub fn r_primal(
    beta: &ForestCharacter,
    tau: &DecoratedTree,
    spec: &EquationSpec,
    cap: &Q,
) -> Result<TreeCombination, AlgebraError> {
    let hat = delta2(tau, spec, cap, true)?;
    let mut out = TreeCombination::zero();
    for ((left, right), c) in hat.iter() {
        out.add_term(
            left.clone(),
            c * beta.eval_forest(&Forest::single(right.clone())),
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Preparation maps
// ---------------------------------------------------------------------------

/// A linear map on trees, identity outside a finite table, or the character
/// map `r_star`.
#[derive(Clone, Debug)]
pub enum PreparationMap {
    Identity,
    Table(BTreeMap<DecoratedTree, TreeCombination>),
    Character(ForestCharacter),
}

impl PreparationMap {
    pub fn apply(&self, tau: &DecoratedTree) -> Result<TreeCombination, AlgebraError> {
        match self {
            PreparationMap::Identity => Ok(TreeCombination::from_key(tau.clone())),
            PreparationMap::Table(t) => Ok(t
                .get(tau)
                .cloned()
                .unwrap_or_else(|| TreeCombination::from_key(tau.clone()))),
            PreparationMap::Character(beta) => r_star(beta, tau),
        }
    }

    /// The adjoint under the symmetry-factor inner product. Exact for table
    /// maps (finite-rank modification of the identity); for character maps
    /// the adjoint is the primal extraction.
    pub fn adjoint_apply(
        &self,
        tau: &DecoratedTree,
        spec: &EquationSpec,
        cap: &Q,
    ) -> Result<TreeCombination, AlgebraError> {
        match self {
            PreparationMap::Identity => Ok(TreeCombination::from_key(tau.clone())),
            PreparationMap::Table(t) => {
                let mut out = TreeCombination::from_key(tau.clone());
                for (sigma, image) in t {
                    let diff = image.sub(&TreeCombination::from_key(sigma.clone()));
                    let pairing = diff.inner_product(&TreeCombination::from_key(tau.clone()));
                    if !pairing.is_zero() {
                        out.add_term(
                            sigma.clone(),
                            pairing / Q::from_integer(sigma.symmetry_factor()),
                        );
                    }
                }
                Ok(out)
            }
            PreparationMap::Character(beta) => r_primal(beta, tau, spec, cap),
        }
    }
}

/// Checks the compatibility law `(id (x) R) Delta2 = Delta2 R` on the given
/// trees and, when it holds, returns the renormalisation map `M = M_circ R`.
pub fn build_renorm_from_preparation(
    map: PreparationMap,
    spec: &EquationSpec,
    cap: &Q,
    check_on: &[DecoratedTree],
) -> Result<RenormMap, AlgebraError> {
    for tau in check_on {
        let lhs = {
            let d = delta2(tau, spec, cap, false)?;
            let mut out = TreeSplit::zero();
            for ((l, r), c) in d.iter() {
                for (rr, cc) in map.apply(r)?.iter() {
                    out.add_term((l.clone(), rr.clone()), c * cc);
                }
            }
            out
        };
        let rhs = {
            let mut out = TreeSplit::zero();
            for (r, c) in map.apply(tau)?.iter() {
                out = out.add(&delta2(r, spec, cap, false)?.scale(c));
            }
            out
        };
        if lhs != rhs {
            return Err(AlgebraError::IncompatiblePreparationMap(format!(
                "compatibility with the coproduct fails on {}",
                tau.render(spec)
            )));
        }
    }
    Ok(RenormMap { map })
}

/// `M = M_circ R`: prepare at the root, then recurse into the branches.
pub struct RenormMap {
    map: PreparationMap,
}

impl RenormMap {
    pub fn apply(&self, tau: &DecoratedTree) -> Result<TreeCombination, AlgebraError> {
        self.apply_guarded(tau, 64)
    }

    fn apply_guarded(&self, tau: &DecoratedTree, fuel: usize) -> Result<TreeCombination, AlgebraError> {
        if fuel == 0 {
            return Err(AlgebraError::IncompatiblePreparationMap(
                "renormalisation recursion does not terminate".into(),
            ));
        }
        let prepared = self.map.apply(tau)?;
        let mut out = TreeCombination::zero();
        for (mu, c) in prepared.iter() {
            out = out.add(&self.multiplicative_part(mu, fuel - 1)?.scale(c));
        }
        Ok(out)
    }

    fn multiplicative_part(
        &self,
        mu: &DecoratedTree,
        fuel: usize,
    ) -> Result<TreeCombination, AlgebraError> {
        let mut acc = TreeCombination::from_key(DecoratedTree::assemble(
            mu.poly().clone(),
            mu.noise(),
            vec![],
        ));
        for (edge, sub) in mu.branches() {
            let inner = self.apply_guarded(sub, fuel)?;
            let mut next = TreeCombination::zero();
            for (t, c) in acc.iter() {
                for (s, cs) in inner.iter() {
                    next.add_term(
                        t.tree_product(&DecoratedTree::planted(edge.clone(), s.clone()))?,
                        c * cs,
                    );
                }
            }
            acc = next;
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Identity checks
// ---------------------------------------------------------------------------

/// One counterexample of a failed identity, rendered for reports.
#[derive(Clone, Debug)]
pub struct Mismatch {
    pub context: String,
    pub detail: String,
}

/// Checks `m_star(tau star2 sigma) = mhat_star(tau) star2 m_star(sigma)` for
/// all noise-free `tau` and all `sigma` in the given lists.
pub fn verify_cointeraction_decorated(
    beta: &ForestCharacter,
    positives: &[DecoratedTree],
    trees: &[DecoratedTree],
    spec: &EquationSpec,
) -> Result<Vec<Mismatch>, AlgebraError> {
    let mut mismatches = Vec::new();
    for tau in positives {
        let mhat = mhat_star(beta, tau)?;
        for sigma in trees {
            let lhs = {
                let prod = crate::grafting::star2(tau, sigma)?;
                let mut out = TreeCombination::zero();
                for (t, c) in prod.iter() {
                    out = out.add(&m_star(beta, t)?.scale(c));
                }
                out
            };
            let rhs = star2_comb(&mhat, &m_star(beta, sigma)?)?;
            if lhs != rhs {
                mismatches.push(Mismatch {
                    context: format!("tau = {}, sigma = {}", tau.render(spec), sigma.render(spec)),
                    detail: format!("difference {}", lhs.sub(&rhs).render(spec)),
                });
            }
        }
    }
    Ok(mismatches)
}

/// A generous coproduct cap for pairing `sigma (x) tau` against a split of
/// `tau_bar`: polynomial left-overs beyond every decoration present cannot
/// pair nontrivially.
pub fn duality_cap(sigma: &DecoratedTree, tau_bar: &DecoratedTree, spec: &EquationSpec) -> Q {
    fn max_edge(spec: &EquationSpec, t: &DecoratedTree, acc: &mut Q) {
        for (e, sub) in t.branches() {
            let d = e.derivative.scaled_len(&spec.scaling);
            if d > *acc {
                *acc = d;
            }
            max_edge(spec, sub, acc);
        }
    }
    fn poly_total(spec: &EquationSpec, t: &DecoratedTree) -> Q {
        let mut acc = t.poly().scaled_len(&spec.scaling);
        for (_, sub) in t.branches() {
            acc += poly_total(spec, sub);
        }
        acc
    }
    let mut cap = Q::zero();
    max_edge(spec, sigma, &mut cap);
    cap + poly_total(spec, tau_bar) + Q::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{random_tree, RandomTreeParams};
    use crate::equation::{EdgeDecoration, KernelLabel};
    use crate::grafting::star2;
    use crate::rational::{q, qi};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> EquationSpec {
        EquationSpec::small_1d()
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn edge(m: &[u32]) -> EdgeDecoration {
        EdgeDecoration::new(KernelLabel(0), mi(m))
    }

    fn xi() -> DecoratedTree {
        DecoratedTree::noise_tree(NoiseLabel(1), 2)
    }

    fn unit() -> DecoratedTree {
        DecoratedTree::unit(2)
    }

    fn random_character<R: Rng>(rng: &mut R, trees: &[DecoratedTree]) -> ForestCharacter {
        let mut beta = ForestCharacter::new();
        for t in trees {
            if rng.gen_bool(0.6) {
                beta.set(t.clone(), q(rng.gen_range(-6..=6), rng.gen_range(1..=4)));
            }
        }
        beta
    }

    #[test]
    fn delta2_base_cases() {
        let s = spec();
        let cap = qi(3);
        // X_i splits two ways.
        let x = DecoratedTree::monomial(mi(&[0, 1]));
        let d = delta2(&x, &s, &cap, false).unwrap();
        let mut expected = TreeSplit::zero();
        expected.add_term((x.clone(), unit()), qi(1));
        expected.add_term((unit(), x.clone()), qi(1));
        assert_eq!(d, expected);

        // A noise stays right.
        let d = delta2(&xi(), &s, &cap, false).unwrap();
        assert_eq!(d, TreeSplit::from_key((unit(), xi())));

        // Hat variant: the noise may also be cut off to the left.
        let d = delta2(&xi(), &s, &cap, true).unwrap();
        let mut expected = TreeSplit::from_key((unit(), xi()));
        expected.add_term((xi(), unit()), qi(1));
        assert_eq!(d, expected);

        // The unit is group-like.
        let d = delta2(&unit(), &s, &cap, false).unwrap();
        assert_eq!(d, TreeSplit::from_key((unit(), unit())));
    }

    #[test]
    fn delta2_one_step_planted() {
        let s = spec();
        let cap = qi(2);
        let a = edge(&[0, 0]);
        let tau = DecoratedTree::planted(a.clone(), xi());
        let d = delta2(&tau, &s, &cap, false).unwrap();
        let mut expected = TreeSplit::from_key((unit(), tau.clone()));
        for l in polys_up_to(&s, &cap) {
            expected.add_term(
                (
                    DecoratedTree::planted(a.add(&l), xi()),
                    DecoratedTree::monomial(l.clone()),
                ),
                Q::one() / Q::from_integer(l.factorial()),
            );
        }
        assert_eq!(d, expected);
    }

    #[test]
    fn delta2_multiplicative_over_tree_product() {
        let s = spec();
        let cap = qi(2);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let params = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let mut done = 0;
        while done < 15 {
            let a = random_tree(&mut rng, &params);
            let b = random_tree(&mut rng, &params);
            let prod = match a.tree_product(&b) {
                Ok(p) => p,
                Err(_) => continue,
            };
            done += 1;
            let direct = delta2(&prod, &s, &cap, false).unwrap();
            let factored = split_product_tree(
                &delta2(&a, &s, &cap, false).unwrap(),
                &delta2(&b, &s, &cap, false).unwrap(),
            );
            assert_eq!(direct, factored);
        }
    }

    /// Duality on small trees: the pairing through the product matches the
    /// pairing through the coproduct.
    #[test]
    fn star2_is_dual_to_delta2() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let params = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let mut done = 0;
        while done < 30 {
            let sigma = random_tree(&mut rng, &params);
            if sigma.noise().is_some() {
                continue;
            }
            let tau = random_tree(&mut rng, &params);
            let tau_bar = random_tree(&mut rng, &params);
            done += 1;

            let cap = duality_cap(&sigma, &tau_bar, &s);
            let lhs = star2(&sigma, &tau)
                .unwrap()
                .inner_product(&TreeCombination::from_key(tau_bar.clone()));
            let mut rhs = Q::zero();
            for ((l, r), c) in delta2(&tau_bar, &s, &cap, false).unwrap().iter() {
                if l == &sigma && r == &tau {
                    rhs += c * Q::from_integer(sigma.symmetry_factor())
                        * Q::from_integer(tau.symmetry_factor());
                }
            }
            assert_eq!(lhs, rhs, "sigma={} tau={} tau_bar={}", sigma, tau, tau_bar);
        }
    }

    #[test]
    fn delta_circ_and_delta1_base_cases() {
        let s = spec();
        let cap = qi(2);
        let xk = DecoratedTree::monomial(mi(&[1, 1]));
        assert_eq!(
            delta_circ(&xk, &s, &cap).unwrap(),
            ForestSplit::from_key((Forest::empty(), xk.clone()))
        );

        // delta1 on a bare noise: identity term plus full extraction.
        let d = delta1(&xi(), &s, &cap).unwrap();
        let mut expected = ForestSplit::from_key((Forest::empty(), xi()));
        expected.add_term((Forest::single(xi()), unit()), qi(1));
        assert_eq!(d, expected);
    }

    /// Frozen one-unrolling of the recursion on the two-edge tree I_a(Xi).
    #[test]
    fn delta1_two_edge_tree_hand_computed() {
        let s = spec();
        let cap = qi(1);
        let a = edge(&[0, 0]);
        let tau = DecoratedTree::planted(a.clone(), xi());
        let d = delta1(&tau, &s, &cap).unwrap();

        let mut expected = ForestSplit::zero();
        // Nothing extracted.
        expected.add_term((Forest::empty(), tau.clone()), qi(1));
        // The noise subtree extracted, stump remains.
        expected.add_term(
            (Forest::single(xi()), DecoratedTree::planted(a.clone(), unit())),
            qi(1),
        );
        // The bare stump extracted, contracts onto the noise node.
        expected.add_term(
            (Forest::single(DecoratedTree::planted(a.clone(), unit())), xi()),
            qi(1),
        );
        // Everything extracted.
        expected.add_term((Forest::single(tau.clone()), unit()), qi(1));
        // Polynomial shadows within the cap: |l|_s <= 1 means l = e_1 only.
        let l = mi(&[0, 1]);
        expected.add_term(
            (
                Forest::single(DecoratedTree::monomial(l.clone())),
                DecoratedTree::planted(a.add(&l), xi()),
            ),
            qi(1),
        );
        expected.add_term(
            (
                Forest::new(vec![xi(), DecoratedTree::monomial(l.clone())]),
                DecoratedTree::planted(a.add(&l), unit()),
            ),
            qi(1),
        );
        assert_eq!(d, expected);
    }

    #[test]
    fn star1_base_cases() {
        // Empty forest is the unit.
        let tau = DecoratedTree::planted(edge(&[0, 1]), xi());
        assert_eq!(
            star1(&Forest::empty(), &tau).unwrap(),
            TreeCombination::from_key(tau.clone())
        );

        // One tree into the unit: root replacement.
        let sigma = DecoratedTree::planted(edge(&[0, 0]), xi());
        assert_eq!(
            star1(&Forest::single(sigma.clone()), &unit()).unwrap(),
            TreeCombination::from_key(sigma.clone())
        );

        // No slot on a pure noise: annihilates.
        assert!(star1(&Forest::single(sigma), &xi()).unwrap().is_zero());
    }

    /// The recursion against the coproduct: <f star1 t, u> = <f (x) t, delta1 u>.
    #[test]
    fn star1_is_dual_to_delta1() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let params = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        for _ in 0..12 {
            let f1 = random_tree(&mut rng, &params);
            let forest = Forest::new(vec![f1]);
            let tau = random_tree(&mut rng, &params);
            let tau_bar = random_tree(&mut rng, &params);

            let mut cap = duality_cap(&tau, &tau_bar, &s);
            for t in forest.trees() {
                cap = cap + duality_cap(t, &tau_bar, &s);
            }
            let lhs = star1(&forest, &tau)
                .unwrap()
                .inner_product(&TreeCombination::from_key(tau_bar.clone()));
            let mut rhs = Q::zero();
            for ((f, r), c) in delta1(&tau_bar, &s, &cap).unwrap().iter() {
                if f == &forest && r == &tau {
                    rhs += c * Q::from_integer(forest.symmetry_factor())
                        * Q::from_integer(tau.symmetry_factor());
                }
            }
            assert_eq!(lhs, rhs, "forest={:?} tau={} tau_bar={}", forest, tau, tau_bar);
        }
    }

    #[test]
    fn m_star_base_cases() {
        let s = spec();
        let mut beta = ForestCharacter::new();
        let sigma0 = DecoratedTree::planted(edge(&[0, 0]), xi());
        beta.set(sigma0.clone(), qi(3));

        // Noise with a label is fixed.
        assert_eq!(
            m_star(&beta, &xi()).unwrap(),
            TreeCombination::from_key(xi())
        );

        // The empty slot receives the unit plus the weighted support.
        let got = m_star(&beta, &unit()).unwrap();
        let mut expected = TreeCombination::from_key(unit());
        expected.add_term(sigma0.clone(), qi(3));
        assert_eq!(got, expected);

        // The zero character is the identity everywhere.
        let id = ForestCharacter::new();
        let tau = DecoratedTree::planted(edge(&[0, 1]), xi());
        assert_eq!(
            m_star(&id, &tau).unwrap(),
            TreeCombination::from_key(tau.clone())
        );
        let _ = s;
    }

    /// Adjointness against the coproduct-built primal map on small trees.
    #[test]
    fn m_star_is_adjoint_to_m_primal() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let params = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let pool: Vec<DecoratedTree> = (0..6).map(|_| random_tree(&mut rng, &params)).collect();
        let beta = random_character(&mut rng, &pool[0..3]);

        for _ in 0..20 {
            let tau = random_tree(&mut rng, &params);
            let sigma = random_tree(&mut rng, &params);
            let mut cap = duality_cap(&tau, &sigma, &s) + duality_cap(&sigma, &tau, &s);
            for (t, _) in beta.support() {
                cap = cap + duality_cap(t, &sigma, &s);
            }
            let lhs = m_star(&beta, &tau)
                .unwrap()
                .inner_product(&TreeCombination::from_key(sigma.clone()));
            let rhs = m_primal(&beta, &sigma, &s, &cap)
                .unwrap()
                .inner_product(&TreeCombination::from_key(tau.clone()));
            assert_eq!(lhs, rhs, "tau={tau} sigma={sigma}");
        }
    }

    #[test]
    fn mhat_star_is_adjoint_to_mhat_primal() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let params = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let pool: Vec<DecoratedTree> = (0..4).map(|_| random_tree(&mut rng, &params)).collect();
        let beta = random_character(&mut rng, &pool);
        let mut done = 0;
        while done < 15 {
            let tau = random_tree(&mut rng, &params);
            if tau.noise().is_some() {
                continue;
            }
            done += 1;
            let sigma = random_tree(&mut rng, &params);
            let mut cap = duality_cap(&tau, &sigma, &s) + duality_cap(&sigma, &tau, &s);
            for (t, _) in beta.support() {
                cap = cap + duality_cap(t, &sigma, &s);
            }
            let lhs = mhat_star(&beta, &tau)
                .unwrap()
                .inner_product(&TreeCombination::from_key(sigma.clone()));
            let rhs = mhat_primal(&beta, &sigma, &s, &cap)
                .unwrap()
                .inner_product(&TreeCombination::from_key(tau.clone()));
            assert_eq!(lhs, rhs, "tau={tau} sigma={sigma}");
        }
    }

    #[test]
    fn r_star_is_right_star2_morphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let params = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let pool: Vec<DecoratedTree> = (0..4).map(|_| random_tree(&mut rng, &params)).collect();
        let beta = random_character(&mut rng, &pool);
        let mut done = 0;
        while done < 15 {
            let sigma = random_tree(&mut rng, &params);
            if sigma.noise().is_some() {
                continue;
            }
            done += 1;
            let tau = random_tree(&mut rng, &params);
            let lhs = {
                let prod = star2(&sigma, &tau).unwrap();
                let mut out = TreeCombination::zero();
                for (t, c) in prod.iter() {
                    out = out.add(&r_star(&beta, t).unwrap().scale(c));
                }
                out
            };
            let rhs = star2_comb(
                &TreeCombination::from_key(sigma.clone()),
                &r_star(&beta, &tau).unwrap(),
            )
            .unwrap();
            assert_eq!(lhs, rhs, "sigma={sigma} tau={tau}");
        }
    }

    #[test]
    fn renorm_from_character_matches_m_star() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let params = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let pool: Vec<DecoratedTree> = (0..4).map(|_| random_tree(&mut rng, &params)).collect();
        let beta = random_character(&mut rng, &pool);
        let cap = qi(4);
        let check: Vec<DecoratedTree> = (0..4).map(|_| random_tree(&mut rng, &params)).collect();
        let renorm =
            build_renorm_from_preparation(PreparationMap::Character(beta.clone()), &s, &cap, &check)
                .unwrap();

        // The adjoint route: <M tau, sigma> must match <tau, M* sigma>.
        for _ in 0..12 {
            let tau = random_tree(&mut rng, &params);
            let sigma = random_tree(&mut rng, &params);
            let lhs = renorm
                .apply(&tau)
                .unwrap()
                .inner_product(&TreeCombination::from_key(sigma.clone()));
            let rhs = m_star(&beta, &sigma)
                .unwrap()
                .inner_product(&TreeCombination::from_key(tau.clone()));
            assert_eq!(lhs, rhs, "tau={tau} sigma={sigma}");
        }
    }

    #[test]
    fn incompatible_preparation_map_is_rejected() {
        let s = spec();
        // Perturb a tree image in a way that breaks compatibility.
        let tau = DecoratedTree::planted(edge(&[0, 0]), xi());
        let mut table = BTreeMap::new();
        let mut image = TreeCombination::from_key(tau.clone());
        image.add_term(DecoratedTree::monomial(mi(&[1, 0])), qi(1));
        table.insert(tau.clone(), image);
        let err = build_renorm_from_preparation(
            PreparationMap::Table(table),
            &s,
            &qi(2),
            &[tau],
        );
        assert!(matches!(
            err,
            Err(AlgebraError::IncompatiblePreparationMap(_))
        ));
    }

    #[test]
    fn identity_preparation_map_gives_identity() {
        let s = spec();
        let tau = DecoratedTree::planted(edge(&[0, 1]), xi());
        let renorm = build_renorm_from_preparation(
            PreparationMap::Identity,
            &s,
            &qi(2),
            &[tau.clone()],
        )
        .unwrap();
        assert_eq!(
            renorm.apply(&tau).unwrap(),
            TreeCombination::from_key(tau)
        );
    }

    #[test]
    fn cointeraction_identity_on_random_inputs() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let params = RandomTreeParams {
            max_edges: 1,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let pool: Vec<DecoratedTree> = (0..2).map(|_| random_tree(&mut rng, &params)).collect();
        let beta = random_character(&mut rng, &pool);
        let big = RandomTreeParams {
            max_edges: 2,
            max_decoration: 1,
            ..RandomTreeParams::default()
        };
        let mut positives = Vec::new();
        let mut trees = Vec::new();
        while positives.len() < 3 {
            let t = random_tree(&mut rng, &big);
            if t.noise().is_none() {
                positives.push(t);
            }
        }
        while trees.len() < 3 {
            trees.push(random_tree(&mut rng, &big));
        }
        let mismatches =
            verify_cointeraction_decorated(&beta, &positives, &trees, &s).unwrap();
        assert!(mismatches.is_empty(), "{:?}", mismatches);
    }
}
