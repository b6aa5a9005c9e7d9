//! The combinatorial signature of an equation system.
//!
//! An [`EquationSpec`] fixes everything the tree grammar and the degree map
//! need: space-time dimension, scaling, kernel and noise labels with their
//! degrees, and the dependency structure of the nonlinearities. It is loaded
//! from a small JSON file (see `EquationSpecFile`).

use crate::error::AlgebraError;
use crate::multiindex::MultiIndex;
use crate::rational::{format_q, parse_q, Q};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Index into the kernel label table of an [`EquationSpec`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct KernelLabel(pub u16);

/// Index into the noise label table; `NoiseLabel(0)` is the distinguished
/// constant noise whose symbol is identified with the unit tree.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct NoiseLabel(pub u16);

impl NoiseLabel {
    pub const ZERO: NoiseLabel = NoiseLabel(0);
    pub fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

/// A kernel-type edge decoration `(t, m)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct EdgeDecoration {
    pub label: KernelLabel,
    pub derivative: MultiIndex,
}

impl EdgeDecoration {
    pub fn new(label: KernelLabel, derivative: MultiIndex) -> Self {
        EdgeDecoration { label, derivative }
    }

    /// `(t, m) - l = (t, m - l)`; `None` annihilates the enclosing term.
    pub fn checked_sub(&self, l: &MultiIndex) -> Option<EdgeDecoration> {
        Some(EdgeDecoration {
            label: self.label,
            derivative: self.derivative.checked_sub(l)?,
        })
    }

    pub fn add(&self, l: &MultiIndex) -> EdgeDecoration {
        EdgeDecoration {
            label: self.label,
            derivative: self.derivative.add(l),
        }
    }
}

/// Which node/target pairs a nonlinearity depends on, with multiplicities.
///
/// The entry list for `(t, l)` gives, with repetition, the variables the
/// nonlinearity attached to kernel `t` and noise `l` may be differentiated
/// in. Multiplicities cap the branch multiset of a grammar node; whether they
/// also cap symbolic derivatives is controlled by `counted_derivatives`.
pub type DependencyTable = BTreeMap<(KernelLabel, NoiseLabel), Vec<EdgeDecoration>>;

#[derive(Clone, Debug)]
pub struct EquationSpec {
    /// Spatial dimension `d`; multi-indices have `d + 1` entries.
    pub dimension: usize,
    /// Scaling `s`, one positive rational per direction.
    pub scaling: Vec<Q>,
    pub kernel_names: Vec<String>,
    pub noise_names: Vec<String>,
    pub kernel_degrees: Vec<Q>,
    pub noise_degrees: Vec<Q>,
    pub dependency: DependencyTable,
    /// Cap used when truncating the polynomial sums of the coproducts.
    pub poly_degree_cap: Q,
    /// When true, repeated derivatives in one variable are capped by the
    /// multiplicity of that variable in the dependency list.
    pub counted_derivatives: bool,
}

impl EquationSpec {
    pub fn width(&self) -> usize {
        self.dimension + 1
    }

    pub fn kernel_by_name(&self, name: &str) -> Option<KernelLabel> {
        self.kernel_names
            .iter()
            .position(|n| n == name)
            .map(|i| KernelLabel(i as u16))
    }

    pub fn noise_by_name(&self, name: &str) -> Option<NoiseLabel> {
        self.noise_names
            .iter()
            .position(|n| n == name)
            .map(|i| NoiseLabel(i as u16))
    }

    pub fn kernel_degree(&self, t: KernelLabel) -> Result<&Q, AlgebraError> {
        self.kernel_degrees
            .get(t.0 as usize)
            .ok_or(AlgebraError::UnknownLabel)
    }

    pub fn noise_degree(&self, l: NoiseLabel) -> Result<&Q, AlgebraError> {
        self.noise_degrees
            .get(l.0 as usize)
            .ok_or(AlgebraError::UnknownLabel)
    }

    /// Degree of an edge decoration: `|t|_s - |m|_s`.
    pub fn edge_degree(&self, e: &EdgeDecoration) -> Result<Q, AlgebraError> {
        Ok(self.kernel_degree(e.label)?.clone() - e.derivative.scaled_len(&self.scaling))
    }

    /// Every decoration that occurs in some dependency list, deduplicated.
    pub fn dependency_entries(&self) -> Vec<EdgeDecoration> {
        let mut out: Vec<EdgeDecoration> = Vec::new();
        for entries in self.dependency.values() {
            for e in entries {
                if !out.contains(e) {
                    out.push(e.clone());
                }
            }
        }
        out.sort();
        out
    }

    pub fn dependency_of(&self, t: KernelLabel, l: NoiseLabel) -> &[EdgeDecoration] {
        self.dependency
            .get(&(t, l))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn min_scaling(&self) -> Q {
        self.scaling.iter().min().expect("nonempty scaling").clone()
    }

    fn validate(&self) -> Result<(), AlgebraError> {
        if self.scaling.len() != self.width() {
            return Err(AlgebraError::SpecInvalid(
                "scaling length must be dimension + 1".into(),
            ));
        }
        if self.scaling.iter().any(|s| *s <= Q::from_integer(0.into())) {
            return Err(AlgebraError::SpecInvalid("scaling must be positive".into()));
        }
        if self.noise_names.is_empty() || self.noise_names[0] != "0" {
            return Err(AlgebraError::SpecInvalid(
                "noise label table must start with the distinguished label \"0\"".into(),
            ));
        }
        if !self.noise_degrees[0].eq(&Q::from_integer(0.into())) {
            return Err(AlgebraError::SpecInvalid(
                "the distinguished noise must have degree 0".into(),
            ));
        }
        if self.kernel_degrees.len() != self.kernel_names.len()
            || self.noise_degrees.len() != self.noise_names.len()
        {
            return Err(AlgebraError::SpecInvalid("degree table length mismatch".into()));
        }
        for e in self.dependency_entries() {
            if e.label.0 as usize >= self.kernel_names.len()
                || e.derivative.len() != self.width()
            {
                return Err(AlgebraError::SpecInvalid(
                    "dependency entry with unknown label or wrong arity".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// On-disk JSON shape.
///
/// ```json
/// {
///   "dimension": 3,
///   "scaling": ["2", "1", "1", "1"],
///   "kernel_labels": {"t": "2"},
///   "noise_labels": {"0": "0", "xi": "-251/100"},
///   "dependency": {"t|0": [["t", [0,0,0,0]], ["t", [0,0,0,0]], ["t", [0,0,0,0]]]},
///   "poly_degree_cap": "4",
///   "counted_derivatives": true
/// }
/// ```
#[derive(Serialize, Deserialize)]
struct EquationSpecFile {
    dimension: usize,
    scaling: Vec<String>,
    kernel_labels: BTreeMap<String, String>,
    noise_labels: BTreeMap<String, String>,
    dependency: BTreeMap<String, Vec<(String, Vec<u32>)>>,
    poly_degree_cap: String,
    #[serde(default)]
    counted_derivatives: bool,
}

impl EquationSpec {
    pub fn from_json(text: &str) -> Result<EquationSpec, AlgebraError> {
        let file: EquationSpecFile = serde_json::from_str(text)
            .map_err(|e| AlgebraError::SpecInvalid(format!("bad spec JSON: {e}")))?;

        let mut noise_names: Vec<String> = file.noise_labels.keys().cloned().collect();
        // The distinguished label "0" must sit at index 0.
        noise_names.retain(|n| n != "0");
        noise_names.insert(0, "0".to_string());
        if !file.noise_labels.contains_key("0") {
            return Err(AlgebraError::SpecInvalid(
                "noise_labels must contain the distinguished label \"0\"".into(),
            ));
        }
        let kernel_names: Vec<String> = file.kernel_labels.keys().cloned().collect();

        let parse = |s: &str| {
            parse_q(s).ok_or_else(|| AlgebraError::SpecInvalid(format!("bad rational: {s}")))
        };
        let scaling = file
            .scaling
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        let kernel_degrees = kernel_names
            .iter()
            .map(|n| parse(&file.kernel_labels[n]))
            .collect::<Result<Vec<_>, _>>()?;
        let noise_degrees = noise_names
            .iter()
            .map(|n| parse(&file.noise_labels[n]))
            .collect::<Result<Vec<_>, _>>()?;

        let mut spec = EquationSpec {
            dimension: file.dimension,
            scaling,
            kernel_names,
            noise_names,
            kernel_degrees,
            noise_degrees,
            dependency: BTreeMap::new(),
            poly_degree_cap: parse(&file.poly_degree_cap)?,
            counted_derivatives: file.counted_derivatives,
        };

        for (key, entries) in &file.dependency {
            let (tname, lname) = key.split_once('|').ok_or_else(|| {
                AlgebraError::SpecInvalid(format!("dependency key {key:?} is not \"t|l\""))
            })?;
            let t = spec
                .kernel_by_name(tname)
                .ok_or(AlgebraError::UnknownLabel)?;
            let l = spec.noise_by_name(lname).ok_or(AlgebraError::UnknownLabel)?;
            let mut list = Vec::new();
            for (ename, m) in entries {
                let el = spec
                    .kernel_by_name(ename)
                    .ok_or(AlgebraError::UnknownLabel)?;
                list.push(EdgeDecoration::new(el, MultiIndex(m.clone())));
            }
            list.sort();
            spec.dependency.insert((t, l), list);
        }

        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let file = EquationSpecFile {
            dimension: self.dimension,
            scaling: self.scaling.iter().map(format_q).collect(),
            kernel_labels: self
                .kernel_names
                .iter()
                .zip(&self.kernel_degrees)
                .map(|(n, d)| (n.clone(), format_q(d)))
                .collect(),
            noise_labels: self
                .noise_names
                .iter()
                .zip(&self.noise_degrees)
                .map(|(n, d)| (n.clone(), format_q(d)))
                .collect(),
            dependency: self
                .dependency
                .iter()
                .map(|((t, l), entries)| {
                    let key = format!(
                        "{}|{}",
                        self.kernel_names[t.0 as usize], self.noise_names[l.0 as usize]
                    );
                    let list = entries
                        .iter()
                        .map(|e| {
                            (
                                self.kernel_names[e.label.0 as usize].clone(),
                                e.derivative.0.clone(),
                            )
                        })
                        .collect();
                    (key, list)
                })
                .collect(),
            poly_degree_cap: format_q(&self.poly_degree_cap),
            counted_derivatives: self.counted_derivatives,
        };
        serde_json::to_string_pretty(&file).expect("spec serializes")
    }

    /// The bundled quartic-type example: 3 + 1 dimensions with parabolic
    /// scaling, one kernel of degree 2, one singular noise of degree
    /// -5/2 - 1/100, and a cubic dependency on the solution itself.
    pub fn phi4() -> EquationSpec {
        let u = EdgeDecoration::new(KernelLabel(0), MultiIndex::zeros(4));
        let mut dependency = BTreeMap::new();
        dependency.insert(
            (KernelLabel(0), NoiseLabel(0)),
            vec![u.clone(), u.clone(), u],
        );
        dependency.insert((KernelLabel(0), NoiseLabel(1)), vec![]);
        let spec = EquationSpec {
            dimension: 3,
            scaling: vec![
                Q::from_integer(2.into()),
                Q::from_integer(1.into()),
                Q::from_integer(1.into()),
                Q::from_integer(1.into()),
            ],
            kernel_names: vec!["t".into()],
            noise_names: vec!["0".into(), "xi".into()],
            kernel_degrees: vec![Q::from_integer(2.into())],
            noise_degrees: vec![Q::from_integer(0.into()), crate::rational::q(-251, 100)],
            dependency,
            poly_degree_cap: Q::from_integer(4.into()),
            counted_derivatives: true,
        };
        spec.validate().expect("bundled spec is valid");
        spec
    }

    /// A small 1 + 1 dimensional spec used by tests and the numerical model:
    /// one kernel of degree 2, one noise of degree -5/8, quadratic dependency.
    pub fn small_1d() -> EquationSpec {
        let u = EdgeDecoration::new(KernelLabel(0), MultiIndex::zeros(2));
        let mut dependency = BTreeMap::new();
        dependency.insert(
            (KernelLabel(0), NoiseLabel(0)),
            vec![u.clone(), u.clone()],
        );
        dependency.insert((KernelLabel(0), NoiseLabel(1)), vec![u]);
        let spec = EquationSpec {
            dimension: 1,
            scaling: vec![Q::from_integer(2.into()), Q::from_integer(1.into())],
            kernel_names: vec!["t".into()],
            noise_names: vec!["0".into(), "xi".into()],
            kernel_degrees: vec![Q::from_integer(2.into())],
            noise_degrees: vec![Q::from_integer(0.into()), crate::rational::q(-5, 8)],
            dependency,
            poly_degree_cap: Q::from_integer(4.into()),
            counted_derivatives: true,
        };
        spec.validate().expect("test spec is valid");
        spec
    }
}

impl fmt::Display for KernelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn phi4_round_trips_through_json() {
        let spec = EquationSpec::phi4();
        let text = spec.to_json();
        let back = EquationSpec::from_json(&text).unwrap();
        assert_eq!(back.dimension, 3);
        assert_eq!(back.noise_degrees[1], q(-251, 100));
        assert_eq!(back.dependency_of(KernelLabel(0), NoiseLabel(0)).len(), 3);
        assert!(back.counted_derivatives);
    }

    #[test]
    fn zero_noise_must_exist() {
        let text = r#"{
            "dimension": 1,
            "scaling": ["2", "1"],
            "kernel_labels": {"t": "2"},
            "noise_labels": {"xi": "-1"},
            "dependency": {},
            "poly_degree_cap": "2"
        }"#;
        assert!(EquationSpec::from_json(text).is_err());
    }

    #[test]
    fn edge_degree_subtracts_derivative() {
        let spec = EquationSpec::small_1d();
        let e = EdgeDecoration::new(KernelLabel(0), MultiIndex(vec![1, 1]));
        assert_eq!(spec.edge_degree(&e).unwrap(), q(-1, 1));
    }
}
