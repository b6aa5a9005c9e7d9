//! Decorated rooted trees, forests and their exact-rational linear spans.
//!
//! A tree node carries a polynomial decoration in `N^{d+1}` and optionally a
//! noise attribute, which stands for a terminal noise-type edge hanging off
//! the node. Kernel-type branches carry an [`EdgeDecoration`] each. The
//! distinguished noise `0` is identified with "no noise": `Xi[0]` and `X^0`
//! both normalize to the unit tree `1`.
//!
//! Non-planarity is handled by a canonical form: branch lists are kept sorted
//! under the derived total order, so structural equality and hashing decide
//! tree equality.

use crate::equation::{EdgeDecoration, EquationSpec, NoiseLabel};
use crate::error::AlgebraError;
use crate::multiindex::MultiIndex;
use crate::rational::{format_q, Q};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct DecoratedTree {
    poly: MultiIndex,
    noise: Option<NoiseLabel>,
    branches: Vec<(EdgeDecoration, DecoratedTree)>,
}

impl DecoratedTree {
    /// Builds a tree in canonical form from raw parts.
    pub fn assemble(
        poly: MultiIndex,
        noise: Option<NoiseLabel>,
        mut branches: Vec<(EdgeDecoration, DecoratedTree)>,
    ) -> DecoratedTree {
        let noise = match noise {
            Some(l) if l.is_zero() => None,
            other => other,
        };
        branches.sort();
        DecoratedTree {
            poly,
            noise,
            branches,
        }
    }

    pub fn unit(width: usize) -> DecoratedTree {
        DecoratedTree::assemble(MultiIndex::zeros(width), None, Vec::new())
    }

    pub fn monomial(k: MultiIndex) -> DecoratedTree {
        DecoratedTree::assemble(k, None, Vec::new())
    }

    pub fn noise_tree(l: NoiseLabel, width: usize) -> DecoratedTree {
        DecoratedTree::assemble(MultiIndex::zeros(width), Some(l), Vec::new())
    }

    pub fn planted(edge: EdgeDecoration, subtree: DecoratedTree) -> DecoratedTree {
        let width = subtree.width();
        DecoratedTree::assemble(MultiIndex::zeros(width), None, vec![(edge, subtree)])
    }

    pub fn poly(&self) -> &MultiIndex {
        &self.poly
    }

    pub fn noise(&self) -> Option<NoiseLabel> {
        self.noise
    }

    pub fn branches(&self) -> &[(EdgeDecoration, DecoratedTree)] {
        &self.branches
    }

    pub fn width(&self) -> usize {
        self.poly.len()
    }

    pub fn is_unit(&self) -> bool {
        self.poly.is_zero() && self.noise.is_none() && self.branches.is_empty()
    }

    /// True when the root carries no noise, i.e. the tree can be read as an
    /// element of the positive span (monomials times planted trees).
    pub fn is_positive_shape(&self) -> bool {
        self.noise.is_none()
    }

    /// Number of edges, counting both kernel branches and noise attributes.
    pub fn edge_count(&self) -> usize {
        let own = usize::from(self.noise.is_some());
        own + self
            .branches
            .iter()
            .map(|(_, t)| 1 + t.edge_count())
            .sum::<usize>()
    }

    pub fn kernel_edge_count(&self) -> usize {
        self.branches
            .iter()
            .map(|(_, t)| 1 + t.kernel_edge_count())
            .sum()
    }

    /// Number of grafting-target nodes (noise leaves are not represented).
    pub fn node_count(&self) -> usize {
        1 + self
            .branches
            .iter()
            .map(|(_, t)| t.node_count())
            .sum::<usize>()
    }

    /// Re-sorts branch lists recursively. Construction keeps trees canonical,
    /// so this is a no-op on values built through the public constructors.
    pub fn canonicalize(&self) -> DecoratedTree {
        DecoratedTree::assemble(
            self.poly.clone(),
            self.noise,
            self.branches
                .iter()
                .map(|(e, t)| (e.clone(), t.canonicalize()))
                .collect(),
        )
    }

    /// Tree product: identify the roots, add their polynomial decorations and
    /// merge the branch multisets. Fails when both roots carry a noise.
    pub fn tree_product(&self, other: &DecoratedTree) -> Result<DecoratedTree, AlgebraError> {
        let noise = match (self.noise, other.noise) {
            (None, n) | (n, None) => n,
            (Some(_), Some(_)) => return Err(AlgebraError::NoiseClash),
        };
        let mut branches = self.branches.clone();
        branches.extend(other.branches.iter().cloned());
        Ok(DecoratedTree::assemble(
            self.poly.add(&other.poly),
            noise,
            branches,
        ))
    }

    /// Symmetry factor `S`: `k!` times, over distinct planted branches with
    /// multiplicity `m_i`, the product of `m_i! S(subtree_i)^{m_i}`.
    pub fn symmetry_factor(&self) -> BigInt {
        let mut acc = self.poly.factorial();
        let mut i = 0;
        while i < self.branches.len() {
            let mut j = i + 1;
            while j < self.branches.len() && self.branches[j] == self.branches[i] {
                j += 1;
            }
            let mult = (j - i) as u32;
            acc *= crate::rational::factorial(mult);
            let s = self.branches[i].1.symmetry_factor();
            for _ in 0..mult {
                acc *= &s;
            }
            i = j;
        }
        acc
    }

    /// Scaled degree: polynomial weight plus noise regularity plus, per
    /// branch, the edge degree and the subtree degree.
    pub fn degree(&self, spec: &EquationSpec) -> Result<Q, AlgebraError> {
        let mut acc = self.poly.scaled_len(&spec.scaling);
        if let Some(l) = self.noise {
            acc += spec.noise_degree(l)?;
        }
        for (e, t) in &self.branches {
            acc += spec.edge_degree(e)?;
            acc += t.degree(spec)?;
        }
        Ok(acc)
    }

    /// Renders the canonical text form of the external grammar.
    pub fn render(&self, spec: &EquationSpec) -> String {
        let mut parts = Vec::new();
        if !self.poly.is_zero() {
            parts.push(format!("X^{}", render_mi(&self.poly)));
        }
        if let Some(l) = self.noise {
            parts.push(format!("Xi[{}]", spec.noise_names[l.0 as usize]));
        }
        for (e, t) in &self.branches {
            parts.push(format!(
                "I[{},{}]({})",
                spec.kernel_names[e.label.0 as usize],
                render_mi(&e.derivative),
                t.render(spec)
            ));
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    /// Parses the external grammar. Inverse of [`render`](Self::render) on
    /// canonical forms; accepts factors in any order.
    pub fn parse(text: &str, spec: &EquationSpec) -> Result<DecoratedTree, AlgebraError> {
        let mut p = Parser {
            chars: text.chars().collect(),
            pos: 0,
            spec,
        };
        let t = p.parse_product()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(AlgebraError::Parse(format!(
                "trailing input at offset {}",
                p.pos
            )));
        }
        Ok(t)
    }
}

fn render_mi(m: &MultiIndex) -> String {
    let inner: Vec<String> = m.0.iter().map(|v| v.to_string()).collect();
    format!("({})", inner.join(","))
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    spec: &'a EquationSpec,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), AlgebraError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(AlgebraError::Parse(format!(
                "expected {c:?} at offset {}",
                self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<String, AlgebraError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(AlgebraError::Parse(format!(
                "expected label at offset {start}"
            )));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn multi_index(&mut self) -> Result<MultiIndex, AlgebraError> {
        self.expect('(')?;
        let mut entries = Vec::new();
        loop {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(AlgebraError::Parse(format!(
                    "expected digit at offset {start}"
                )));
            }
            let text: String = self.chars[start..self.pos].iter().collect();
            entries.push(
                text.parse::<u32>()
                    .map_err(|e| AlgebraError::Parse(e.to_string()))?,
            );
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                other => {
                    return Err(AlgebraError::Parse(format!(
                        "expected ',' or ')', found {other:?}"
                    )))
                }
            }
        }
        if entries.len() != self.spec.width() {
            return Err(AlgebraError::Parse(format!(
                "multi-index arity {} does not match dimension + 1 = {}",
                entries.len(),
                self.spec.width()
            )));
        }
        Ok(MultiIndex(entries))
    }

    fn parse_product(&mut self) -> Result<DecoratedTree, AlgebraError> {
        let mut acc = self.parse_factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            let rhs = self.parse_factor()?;
            acc = acc.tree_product(&rhs)?;
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<DecoratedTree, AlgebraError> {
        if self.peek() == Some('1') {
            self.pos += 1;
            return Ok(DecoratedTree::unit(self.spec.width()));
        }
        match self.ident()?.as_str() {
            "X" => {
                self.expect('^')?;
                Ok(DecoratedTree::monomial(self.multi_index()?))
            }
            "Xi" => {
                self.expect('[')?;
                let label = self.ident()?;
                self.expect(']')?;
                let l = self
                    .spec
                    .noise_by_name(&label)
                    .ok_or(AlgebraError::UnknownLabel)?;
                Ok(DecoratedTree::noise_tree(l, self.spec.width()))
            }
            "I" => {
                self.expect('[')?;
                let name = self.ident()?;
                let label = self
                    .spec
                    .kernel_by_name(&name)
                    .ok_or(AlgebraError::UnknownLabel)?;
                self.expect(',')?;
                let m = self.multi_index()?;
                self.expect(']')?;
                self.expect('(')?;
                let sub = self.parse_product()?;
                self.expect(')')?;
                Ok(DecoratedTree::planted(EdgeDecoration::new(label, m), sub))
            }
            other => Err(AlgebraError::Parse(format!("unknown factor {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Forests
// ---------------------------------------------------------------------------

/// A commutative forest of decorated trees. Unit trees are dropped on
/// construction, implementing the identification `f * 1 = f`: the unit tree
/// is invisible to the forest algebra and to characters on it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Forest(Vec<DecoratedTree>);

impl Forest {
    pub fn empty() -> Forest {
        Forest(Vec::new())
    }

    pub fn new(mut trees: Vec<DecoratedTree>) -> Forest {
        trees.retain(|t| !t.is_unit());
        trees.sort();
        Forest(trees)
    }

    pub fn single(tree: DecoratedTree) -> Forest {
        Forest::new(vec![tree])
    }

    pub fn trees(&self) -> &[DecoratedTree] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn product(&self, other: &Forest) -> Forest {
        let mut trees = self.0.clone();
        trees.extend(other.0.iter().cloned());
        Forest::new(trees)
    }

    /// Symmetric-algebra symmetry factor: over distinct trees with
    /// multiplicity `m_i`, the product of `m_i! S(tree_i)^{m_i}`.
    pub fn symmetry_factor(&self) -> BigInt {
        let mut acc = BigInt::one();
        let mut i = 0;
        while i < self.0.len() {
            let mut j = i + 1;
            while j < self.0.len() && self.0[j] == self.0[i] {
                j += 1;
            }
            let mult = (j - i) as u32;
            acc *= crate::rational::factorial(mult);
            let s = self.0[i].symmetry_factor();
            for _ in 0..mult {
                acc *= &s;
            }
            i = j;
        }
        acc
    }

    pub fn render(&self, spec: &EquationSpec) -> String {
        if self.0.is_empty() {
            return "()".to_string();
        }
        let parts: Vec<String> = self.0.iter().map(|t| t.render(spec)).collect();
        format!("({})", parts.join(" . "))
    }
}

// ---------------------------------------------------------------------------
// Linear combinations
// ---------------------------------------------------------------------------

/// A finite formal linear combination with exact rational coefficients over
/// canonical keys. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Combination<K: Ord + Clone> {
    terms: BTreeMap<K, Q>,
}

pub type TreeCombination = Combination<DecoratedTree>;
pub type ForestCombination = Combination<Forest>;

impl<K: Ord + Clone> Combination<K> {
    pub fn zero() -> Self {
        Combination {
            terms: BTreeMap::new(),
        }
    }

    pub fn from_key(key: K) -> Self {
        let mut c = Self::zero();
        c.add_term(key, Q::one());
        c
    }

    pub fn from_term(key: K, coeff: Q) -> Self {
        let mut c = Self::zero();
        c.add_term(key, coeff);
        c
    }

    pub fn add_term(&mut self, key: K, coeff: Q) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(key);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, factor: &Q) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        Combination {
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c * factor))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: &K) -> Q {
        self.terms.get(key).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &Q)> {
        self.terms.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.terms.keys()
    }

    /// Applies a linear map given on keys and resums the result.
    pub fn map_linear<F>(&self, mut f: F) -> Self
    where
        F: FnMut(&K) -> Self,
    {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            for (k2, c2) in f(k).terms {
                out.add_term(k2, c2 * c);
            }
        }
        out
    }
}

impl TreeCombination {
    /// Bilinear inner product `<s, t> = delta_{s,t} S(t)` extended to
    /// combinations.
    pub fn inner_product(&self, other: &TreeCombination) -> Q {
        let mut acc = Q::zero();
        for (t, c) in &self.terms {
            if let Some(c2) = other.terms.get(t) {
                acc += c * c2 * Q::from_integer(t.symmetry_factor());
            }
        }
        acc
    }

    /// Drops every term of degree greater than `gamma`.
    pub fn project_leq_degree(
        &self,
        gamma: &Q,
        spec: &EquationSpec,
    ) -> Result<TreeCombination, AlgebraError> {
        let mut out = TreeCombination::zero();
        for (t, c) in &self.terms {
            if t.degree(spec)? <= *gamma {
                out.add_term(t.clone(), c.clone());
            }
        }
        Ok(out)
    }

    /// Multiplies every term by a tree (tree product); a noise clash on any
    /// term is reported.
    pub fn tree_product_all(&self, factor: &DecoratedTree) -> Result<TreeCombination, AlgebraError> {
        let mut out = TreeCombination::zero();
        for (t, c) in &self.terms {
            out.add_term(t.tree_product(factor)?, c.clone());
        }
        Ok(out)
    }

    pub fn render(&self, spec: &EquationSpec) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(t, c)| format!("{} {}", format_q(c), t.render(spec)))
            .collect();
        parts.join(" + ")
    }

    /// Serializes as a JSON list of `{num, den, tree}` records in canonical
    /// order.
    pub fn to_json(&self, spec: &EquationSpec) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms
                .iter()
                .map(|(t, c)| {
                    serde_json::json!({
                        "num": c.numer().to_string(),
                        "den": c.denom().to_string(),
                        "tree": t.render(spec),
                    })
                })
                .collect(),
        )
    }
}

impl ForestCombination {
    pub fn inner_product(&self, other: &ForestCombination) -> Q {
        let mut acc = Q::zero();
        for (t, c) in &self.terms {
            if let Some(c2) = other.terms.get(t) {
                acc += c * c2 * Q::from_integer(t.symmetry_factor());
            }
        }
        acc
    }
}

impl fmt::Display for DecoratedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Context-free rendering with positional label names; the external
        // grammar goes through `render` with a spec.
        let mut parts = Vec::new();
        if !self.poly.is_zero() {
            parts.push(format!("X^{}", render_mi(&self.poly)));
        }
        if let Some(l) = self.noise {
            parts.push(format!("Xi[n{}]", l.0));
        }
        for (e, t) in &self.branches {
            parts.push(format!("I[k{},{}]({})", e.label.0, render_mi(&e.derivative), t));
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::{EdgeDecoration, KernelLabel, NoiseLabel};
    use crate::rational::{q, qi};

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

    #[test]
    fn branch_order_is_irrelevant() {
        let a = DecoratedTree::planted(edge(&[0, 0]), xi());
        let b = DecoratedTree::planted(edge(&[0, 1]), DecoratedTree::unit(2));
        let t1 = DecoratedTree::assemble(
            mi(&[1, 0]),
            None,
            vec![(edge(&[0, 0]), a.clone()), (edge(&[0, 1]), b.clone())],
        );
        let t2 = DecoratedTree::assemble(
            mi(&[1, 0]),
            None,
            vec![(edge(&[0, 1]), b), (edge(&[0, 0]), a)],
        );
        assert_eq!(t1, t2);
        assert_eq!(t1.render(&spec()), t2.render(&spec()));
    }

    #[test]
    fn unit_identifications() {
        // X^0 * Xi[0] normalizes to the unit tree.
        let t = DecoratedTree::assemble(mi(&[0, 0]), Some(NoiseLabel::ZERO), vec![]);
        assert!(t.is_unit());
        assert_eq!(t, DecoratedTree::unit(2));
        assert_eq!(t.render(&spec()), "1");
    }

    #[test]
    fn tree_product_merges_roots() {
        let s = spec();
        let xk = DecoratedTree::monomial(mi(&[1, 0]));
        let xm = DecoratedTree::monomial(mi(&[0, 2]));
        let prod = xk.tree_product(&xm).unwrap();
        assert_eq!(prod, DecoratedTree::monomial(mi(&[1, 2])));

        let planted = DecoratedTree::planted(edge(&[0, 0]), DecoratedTree::unit(2));
        let mixed = xi().tree_product(&planted).unwrap();
        assert_eq!(mixed.render(&s), "Xi[xi]*I[t,(0,0)](1)");

        // Two non-zero noises cannot share a root.
        assert!(matches!(
            xi().tree_product(&xi()),
            Err(AlgebraError::NoiseClash)
        ));
    }

    #[test]
    fn symmetry_factors() {
        // S(X^k Xi) = k! componentwise.
        let t = DecoratedTree::assemble(mi(&[3, 2]), Some(NoiseLabel(1)), vec![]);
        assert_eq!(t.symmetry_factor(), BigInt::from(12));

        // S(I(1) * I(1)) = 2.
        let p = DecoratedTree::planted(edge(&[0, 0]), DecoratedTree::unit(2));
        let double = p.tree_product(&p).unwrap();
        assert_eq!(double.symmetry_factor(), BigInt::from(2));

        assert_eq!(DecoratedTree::unit(2).symmetry_factor(), BigInt::from(1));
    }

    #[test]
    fn degree_recursion() {
        let s = spec();
        assert_eq!(DecoratedTree::unit(2).degree(&s).unwrap(), qi(0));
        // X^{e_0}: degree s_0 = 2.
        assert_eq!(
            DecoratedTree::monomial(mi(&[1, 0])).degree(&s).unwrap(),
            qi(2)
        );
        // I_{(t,0)}(Xi): |t|_s + |xi|_s = 2 - 5/8 = 11/8.
        let p = DecoratedTree::planted(edge(&[0, 0]), xi());
        assert_eq!(p.degree(&s).unwrap(), q(11, 8));
        // Degree is additive over the tree product.
        let prod = p.tree_product(&DecoratedTree::monomial(mi(&[0, 3]))).unwrap();
        assert_eq!(prod.degree(&s).unwrap(), q(11, 8) + qi(3));
    }

    #[test]
    fn inner_product_is_diagonal() {
        let p = DecoratedTree::planted(edge(&[0, 0]), DecoratedTree::unit(2));
        let double = p.tree_product(&p).unwrap();
        let u = TreeCombination::from_key(double.clone());
        assert_eq!(u.inner_product(&u), qi(2));

        let v = TreeCombination::from_key(p);
        assert_eq!(u.inner_product(&v), qi(0));

        // Bilinearity: <2s, 3s> = 6 S(s).
        let two = v.scale(&qi(2));
        let three = v.scale(&qi(3));
        assert_eq!(two.inner_product(&three), qi(6));
    }

    #[test]
    fn forests_drop_unit_trees() {
        let f = Forest::new(vec![DecoratedTree::unit(2), xi(), DecoratedTree::unit(2)]);
        assert_eq!(f.trees().len(), 1);
        let f2 = Forest::new(vec![xi()]);
        assert_eq!(f, f2);
        assert_eq!(Forest::new(vec![DecoratedTree::unit(2)]), Forest::empty());
        // S of a doubled forest.
        let g = Forest::new(vec![xi(), xi()]);
        assert_eq!(g.symmetry_factor(), BigInt::from(2));
    }

    #[test]
    fn grammar_round_trip() {
        let s = spec();
        for text in [
            "1",
            "Xi[xi]",
            "X^(2,1)",
            "I[t,(0,1)](Xi[xi])",
            "X^(1,0)*Xi[xi]*I[t,(0,0)](X^(0,2))",
            "I[t,(0,0)](Xi[xi])*I[t,(0,0)](Xi[xi])",
        ] {
            let t = DecoratedTree::parse(text, &s).unwrap();
            assert_eq!(t.render(&s), text);
            assert_eq!(DecoratedTree::parse(&t.render(&s), &s).unwrap(), t);
        }
        // Xi[0] reads back as the unit.
        assert!(DecoratedTree::parse("Xi[0]", &s).unwrap().is_unit());
        // Unknown labels and noise clashes are reported.
        assert!(DecoratedTree::parse("Xi[nope]", &s).is_err());
        assert!(DecoratedTree::parse("Xi[xi]*Xi[xi]", &s).is_err());
    }

    #[test]
    fn combination_arithmetic_prunes_zeros() {
        let p = DecoratedTree::planted(edge(&[0, 0]), xi());
        let mut c = TreeCombination::from_term(p.clone(), q(1, 2));
        c.add_term(p.clone(), q(-1, 2));
        assert!(c.is_zero());

        let c1 = TreeCombination::from_term(p.clone(), qi(4));
        let projected = c1.project_leq_degree(&qi(1), &spec()).unwrap();
        assert!(projected.is_zero()); // deg 11/8 > 1
        let kept = c1.project_leq_degree(&qi(2), &spec()).unwrap();
        assert_eq!(kept.coeff(&p), qi(4));
    }
}
