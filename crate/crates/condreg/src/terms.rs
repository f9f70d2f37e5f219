//! k-DNF terms: enumeration, membership, the disjoint-instance reduction
//! (point duplication), and small-term pruning.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// One possibly-negated Boolean attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub attr: usize,
    #[serde(rename = "neg")]
    pub negated: bool,
}

/// A conjunction of literals over distinct attributes, plus the indices of
/// the data points satisfying it once `assign_members` has run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    literals: Vec<Literal>,
    members: Vec<usize>,
}

impl Term {
    /// Panics if two literals share an attribute.
    pub fn new(mut literals: Vec<Literal>) -> Self {
        literals.sort();
        for pair in literals.windows(2) {
            assert!(pair[0].attr != pair[1].attr, "duplicate attribute in term");
        }
        Self { literals, members: Vec::new() }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Term weight |t|: the number of member points.
    pub fn weight(&self) -> usize {
        self.members.len()
    }

    pub fn satisfied_by(&self, x_row: &[bool]) -> bool {
        self.literals.iter().all(|l| x_row[l.attr] != l.negated)
    }

    fn max_attr(&self) -> Option<usize> {
        self.literals.iter().map(|l| l.attr).max()
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.literals.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut literals = Vec::<Literal>::deserialize(d)?;
        literals.sort();
        for pair in literals.windows(2) {
            if pair[0].attr == pair[1].attr {
                return Err(D::Error::custom("duplicate attribute in term"));
            }
        }
        if literals.is_empty() {
            return Err(D::Error::custom("empty term"));
        }
        Ok(Term { literals, members: Vec::new() })
    }
}

/// A disjunction of terms. The empty DNF is false everywhere.
///
/// Serialized as a JSON list of terms, each a list of `{attr, neg}` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dnf {
    terms: Vec<Term>,
}

impl Dnf {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn satisfies(&self, x_row: &[bool]) -> bool {
        self.terms.iter().any(|t| t.satisfied_by(x_row))
    }

    /// Validates that every referenced attribute index is below `n`.
    pub fn check_attrs(&self, n: usize) -> Result<()> {
        for t in &self.terms {
            if let Some(a) = t.max_attr() {
                if a >= n {
                    return Err(Error::Parameter(format!(
                        "DNF references attribute {a} but the dataset has only {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rows of `data` satisfying this DNF.
    pub fn covered_rows(&self, data: &Dataset) -> Vec<usize> {
        (0..data.n_rows()).filter(|&i| self.satisfies(data.x_row(i))).collect()
    }
}

/// Number of conjunctions of 1..=k literals over n distinct attributes:
/// sum over j of C(n, j) * 2^j.
pub fn term_count(n: usize, k: usize) -> usize {
    let mut total = 0usize;
    for j in 1..=k {
        let mut c = 1usize;
        for i in 0..j {
            c = c * (n - i) / (i + 1);
        }
        total += c << j;
    }
    total
}

/// Enumerates all terms of 1..=k literals over n attributes in a fixed order:
/// by arity, then attribute combination, then negation pattern (the first
/// literal's negation bit is most significant).
pub fn enumerate_terms(n: usize, k: usize) -> Result<Vec<Term>> {
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let mut out = Vec::with_capacity(term_count(n, k));
    for arity in 1..=k {
        let mut combo: Vec<usize> = (0..arity).collect();
        loop {
            for mask in 0u32..(1u32 << arity) {
                let literals = combo
                    .iter()
                    .enumerate()
                    .map(|(pos, &attr)| Literal {
                        attr,
                        negated: (mask >> (arity - 1 - pos)) & 1 == 1,
                    })
                    .collect();
                out.push(Term::new(literals));
            }
            // Advance to the next lexicographic combination.
            let mut i = arity;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if combo[i] != i + n - arity {
                    combo[i] += 1;
                    for j in i + 1..arity {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    combo.clear();
                    break;
                }
            }
            if combo.is_empty() {
                break;
            }
        }
    }
    Ok(out)
}

/// Fills each term's member list with the indices of satisfying rows.
pub fn assign_members(terms: Vec<Term>, data: &Dataset) -> Result<Vec<Term>> {
    for t in &terms {
        if let Some(a) = t.max_attr() {
            if a >= data.n_bool() {
                return Err(Error::Parameter(format!(
                    "term references attribute {a} but the dataset has only {}",
                    data.n_bool()
                )));
            }
        }
    }
    let filled: Vec<Term> = terms
        .into_par_iter()
        .map(|mut t| {
            t.members = (0..data.n_rows()).filter(|&i| t.satisfied_by(data.x_row(i))).collect();
            t
        })
        .collect();
    Ok(filled)
}

/// The feature matrix and target vector of one term's member points.
#[derive(Debug, Clone, PartialEq)]
pub struct TermData {
    pub y: DMatrix<f64>,
    pub z: DVector<f64>,
}

/// Result of duplicating each point once per containing term: per-term
/// sub-datasets over disjoint copies. `n_prime` is the duplicated point count.
#[derive(Debug, Clone)]
pub struct DisjointInstance {
    pub terms: Vec<Term>,
    pub sub_data: Vec<TermData>,
    /// For each surviving term, its index in the originally enumerated list.
    pub original_term_ids: Vec<usize>,
    pub n_prime: usize,
}

impl DisjointInstance {
    /// (term index, original point index) pairs, one per duplicated point.
    pub fn provenance(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.terms
            .iter()
            .enumerate()
            .flat_map(|(j, t)| t.members().iter().map(move |&i| (j, i)))
    }

    pub fn weights(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.weight() as f64).collect()
    }
}

/// Duplicates points per containing term, producing per-term sub-datasets.
/// Terms with no members are dropped.
pub fn disjointify(data: &Dataset, terms: &[Term]) -> DisjointInstance {
    let d = data.n_feat();
    let kept: Vec<(usize, &Term)> =
        terms.iter().enumerate().filter(|(_, t)| t.weight() > 0).collect();
    let sub_data: Vec<TermData> = kept
        .par_iter()
        .map(|(_, t)| {
            let rows = t.members();
            let mut y = DMatrix::zeros(rows.len(), d);
            let mut z = DVector::zeros(rows.len());
            for (r, &i) in rows.iter().enumerate() {
                y.row_mut(r).copy_from_slice(data.y_row(i));
                z[r] = data.z(i);
            }
            TermData { y, z }
        })
        .collect();
    let n_prime = kept.iter().map(|(_, t)| t.weight()).sum();
    DisjointInstance {
        terms: kept.iter().map(|(_, t)| (*t).clone()).collect(),
        original_term_ids: kept.iter().map(|(i, _)| *i).collect(),
        sub_data,
        n_prime,
    }
}

/// Deletes every term with weight below `epsilon * mu * n_raw`.
pub fn prune_small(
    instance: &DisjointInstance,
    epsilon: f64,
    mu: f64,
    n_raw: usize,
) -> Result<DisjointInstance> {
    if epsilon < 0.0 {
        return Err(Error::Parameter("epsilon must be >= 0".into()));
    }
    let threshold = epsilon * mu * n_raw as f64;
    let keep: Vec<usize> = (0..instance.terms.len())
        .filter(|&j| (instance.terms[j].weight() as f64) >= threshold)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyModel);
    }
    let n_prime = keep.iter().map(|&j| instance.terms[j].weight()).sum();
    Ok(DisjointInstance {
        terms: keep.iter().map(|&j| instance.terms[j].clone()).collect(),
        sub_data: keep.iter().map(|&j| instance.sub_data[j].clone()).collect(),
        original_term_ids: keep.iter().map(|&j| instance.original_term_ids[j]).collect(),
        n_prime,
    })
}

/// Samples a DNF of `num_terms` random terms, each with `k` distinct
/// attributes and random negations. Terms may repeat.
pub fn sample_random_dnf<R: Rng>(n: usize, k: usize, num_terms: usize, rng: &mut R) -> Dnf {
    let mut attrs: Vec<usize> = (0..n).collect();
    let terms = (0..num_terms)
        .map(|_| {
            attrs.shuffle(rng);
            let literals = attrs[..k]
                .iter()
                .map(|&attr| Literal { attr, negated: rng.random_bool(0.5) })
                .collect();
            Term::new(literals)
        })
        .collect();
    Dnf::new(terms)
}
