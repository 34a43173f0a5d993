//! Ground sets, bitset subsets, and modular functions.
//!
//! A [`GroundSet`] maps distinct string labels to dense ids `0..n-1` once at
//! construction; all hot paths work on ids. A [`Subset`] is a fixed-width
//! bitset over its ground set (cap [`MAX_GROUND`] elements), so membership
//! tests are O(1) during exhaustive powerset sweeps.

use crate::error::{DsfError, Result};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Maximum supported ground-set size (bitset width).
pub const MAX_GROUND: usize = 256;

const WORDS: usize = MAX_GROUND / 64;

/// A finite labeled ground set `V`.
#[derive(Debug)]
pub struct GroundSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl GroundSet {
    /// Builds a ground set from distinct labels. Ids follow label order.
    pub fn new<I, S>(labels: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(DsfError::InvalidArgument("ground set must be non-empty".into()));
        }
        if labels.len() > MAX_GROUND {
            return Err(DsfError::CapExceeded(format!(
                "ground set of size {} exceeds the cap of {MAX_GROUND}",
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(DsfError::InvalidArgument(format!("duplicate label {l:?}")));
            }
        }
        Ok(Arc::new(GroundSet { labels, index }))
    }

    /// Ground set with synthetic labels `e0..e{n-1}`.
    pub fn with_size(n: usize) -> Result<Arc<Self>> {
        Self::new((0..n).map(|i| format!("e{i}")))
    }

    /// Ground set labeled `a, b, c, ...` (n ≤ 26).
    pub fn alphabetic(n: usize) -> Result<Arc<Self>> {
        if n > 26 {
            return Err(DsfError::InvalidArgument("alphabetic labels support n <= 26".into()));
        }
        Self::new((0..n).map(|i| ((b'a' + i as u8) as char).to_string()))
    }

    /// Number of elements `n`.
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    /// Label of element `id`.
    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    /// All labels in id order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Id of a label, if present.
    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// True if two ground sets are interchangeable (same labels in order).
    pub fn same_as(&self, other: &GroundSet) -> bool {
        std::ptr::eq(self, other) || self.labels == other.labels
    }
}

/// Checks two ground sets for compatibility, erring with context otherwise.
pub fn require_same_ground(a: &GroundSet, b: &GroundSet, what: &str) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(DsfError::GroundMismatch(what.into()))
    }
}

/// A subset `A ⊆ V`, stored as a bitset over its ground set.
#[derive(Clone)]
pub struct Subset {
    ground: Arc<GroundSet>,
    words: [u64; WORDS],
}

impl Subset {
    /// The empty set.
    pub fn empty(ground: &Arc<GroundSet>) -> Self {
        Subset { ground: Arc::clone(ground), words: [0; WORDS] }
    }

    /// The full ground set as a subset.
    pub fn full(ground: &Arc<GroundSet>) -> Self {
        let mut s = Self::empty(ground);
        for i in 0..ground.size() {
            s.insert(i);
        }
        s
    }

    /// Subset from element ids.
    pub fn from_ids(ground: &Arc<GroundSet>, ids: &[usize]) -> Result<Self> {
        let mut s = Self::empty(ground);
        for &i in ids {
            if i >= ground.size() {
                return Err(DsfError::InvalidArgument(format!("element id {i} out of range")));
            }
            s.insert(i);
        }
        Ok(s)
    }

    /// Subset from element labels.
    pub fn from_labels(ground: &Arc<GroundSet>, labels: &[&str]) -> Result<Self> {
        let mut s = Self::empty(ground);
        for l in labels {
            let id = ground
                .id_of(l)
                .ok_or_else(|| DsfError::InvalidArgument(format!("unknown label {l:?}")))?;
            s.insert(id);
        }
        Ok(s)
    }

    /// Subset of the first `min(64, n)` elements encoded by a bitmask.
    ///
    /// Used by exhaustive sweeps, which enumerate masks `0..2^n`.
    pub fn from_mask(ground: &Arc<GroundSet>, mask: u64) -> Self {
        debug_assert!(ground.size() >= 64 || mask >> ground.size() == 0);
        let mut s = Self::empty(ground);
        s.words[0] = mask;
        s
    }

    /// First word of the bitset (complete for n ≤ 64).
    pub fn mask(&self) -> u64 {
        self.words[0]
    }

    /// The ground set this subset lives over.
    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }

    /// Adds an element by id.
    pub fn insert(&mut self, id: usize) {
        debug_assert!(id < self.ground.size());
        self.words[id / 64] |= 1u64 << (id % 64);
    }

    /// Removes an element by id.
    pub fn remove(&mut self, id: usize) {
        self.words[id / 64] &= !(1u64 << (id % 64));
    }

    /// Membership test.
    pub fn contains(&self, id: usize) -> bool {
        self.words[id / 64] >> (id % 64) & 1 == 1
    }

    /// Cardinality `|A|`.
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True if `A = ∅`.
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Iterates member ids in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ground.size()).filter(move |&i| self.contains(i))
    }

    /// Union `A ∪ B`.
    pub fn union(&self, other: &Subset) -> Subset {
        self.zip_with(other, |a, b| a | b)
    }

    /// Intersection `A ∩ B`.
    pub fn intersection(&self, other: &Subset) -> Subset {
        self.zip_with(other, |a, b| a & b)
    }

    /// Difference `A \ B`.
    pub fn difference(&self, other: &Subset) -> Subset {
        self.zip_with(other, |a, b| a & !b)
    }

    /// Symmetric difference `A △ B`.
    pub fn symmetric_difference(&self, other: &Subset) -> Subset {
        self.zip_with(other, |a, b| a ^ b)
    }

    /// True if `A ⊆ B`.
    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// True if `A ∩ B = ∅`.
    pub fn is_disjoint(&self, other: &Subset) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// Characteristic vector `1_A` of length n.
    pub fn indicator_vector(&self) -> Vec<f64> {
        (0..self.ground.size()).map(|i| if self.contains(i) { 1.0 } else { 0.0 }).collect()
    }

    /// Canonical display: sorted labels.
    pub fn label_vec(&self) -> Vec<&str> {
        self.iter().map(|i| self.ground.label(i)).collect()
    }

    fn zip_with(&self, other: &Subset, f: impl Fn(u64, u64) -> u64) -> Subset {
        debug_assert!(self.ground.same_as(&other.ground));
        let mut words = [0u64; WORDS];
        for (i, w) in words.iter_mut().enumerate() {
            *w = f(self.words[i], other.words[i]);
        }
        Subset { ground: Arc::clone(&self.ground), words }
    }
}

impl PartialEq for Subset {
    fn eq(&self, other: &Self) -> bool {
        self.ground.same_as(&other.ground) && self.words == other.words
    }
}
impl Eq for Subset {}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.label_vec().join(","))
    }
}

/// Enumerates all 2^n subsets of a ground set with n ≤ `cap` (mask order).
pub fn powerset(ground: &Arc<GroundSet>, cap: usize) -> Result<impl Iterator<Item = Subset> + '_> {
    let n = ground.size();
    if n > cap || n >= 64 {
        return Err(DsfError::CapExceeded(format!(
            "powerset enumeration capped at n <= {cap}, got {n}"
        )));
    }
    Ok((0u64..1 << n).map(move |m| Subset::from_mask(ground, m)))
}

/// A modular (additive) set function `m(A) = Σ_{a∈A} m(a)`, normalized at ∅.
#[derive(Clone, Debug)]
pub struct ModularFunction {
    ground: Arc<GroundSet>,
    weights: Vec<f64>,
    nonneg: bool,
}

impl ModularFunction {
    /// Builds a modular function; `nonneg` asserts every weight ≥ 0.
    pub fn new(ground: &Arc<GroundSet>, weights: Vec<f64>, nonneg: bool) -> Result<Self> {
        if weights.len() != ground.size() {
            return Err(DsfError::InvalidArgument(format!(
                "expected {} weights, got {}",
                ground.size(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(DsfError::InvalidArgument(format!("non-finite weight {w}")));
        }
        if nonneg {
            if let Some(w) = weights.iter().find(|&&w| w < 0.0) {
                return Err(DsfError::InvalidArgument(format!(
                    "negative weight {w} in a nonneg modular function"
                )));
            }
        }
        Ok(ModularFunction { ground: Arc::clone(ground), weights, nonneg })
    }

    /// The all-zero modular function.
    pub fn zero(ground: &Arc<GroundSet>) -> Self {
        ModularFunction { ground: Arc::clone(ground), weights: vec![0.0; ground.size()], nonneg: true }
    }

    /// Per-element weights in id order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether the nonnegativity flag is set.
    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    /// The ground set.
    pub fn ground(&self) -> &Arc<GroundSet> {
        &self.ground
    }

    /// Evaluates `m(A) = Σ_{a∈A} m(a)`; 0 on the empty set.
    pub fn eval(&self, a: &Subset) -> Result<f64> {
        require_same_ground(&self.ground, a.ground(), "modular_eval")?;
        Ok(a.iter().map(|i| self.weights[i]).sum())
    }
}
