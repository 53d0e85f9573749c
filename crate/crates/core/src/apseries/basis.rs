use std::collections::BTreeSet;
use std::fmt;

use super::SeriesError;

/// Finite window of frequency indices with one real frequency per index.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyBasis {
    lo: i64,
    omega: Vec<f64>,
}

impl FrequencyBasis {
    /// Window `lo ..= lo + omega.len() - 1`, `omega[j]` belonging to index `lo + j`.
    pub fn new(lo: i64, omega: Vec<f64>) -> Result<Self, SeriesError> {
        if omega.is_empty() {
            return Err(SeriesError::InvalidBasis("empty frequency window".into()));
        }
        for (j, w) in omega.iter().enumerate() {
            if !w.is_finite() || *w == 0.0 {
                return Err(SeriesError::InvalidBasis(format!(
                    "frequency at index {} is {w}",
                    lo + j as i64
                )));
            }
        }
        Ok(Self { lo, omega })
    }

    /// Window starting at index 0.
    pub fn from_frequencies(omega: &[f64]) -> Result<Self, SeriesError> {
        Self::new(0, omega.to_vec())
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.omega.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn contains(&self, lambda: i64) -> bool {
        lambda >= self.lo && lambda <= self.hi()
    }

    pub fn slot(&self, lambda: i64) -> Option<usize> {
        self.contains(lambda).then(|| (lambda - self.lo) as usize)
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.lo..=self.hi()
    }

    pub fn frequency(&self, lambda: i64) -> f64 {
        self.omega[(lambda - self.lo) as usize]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.omega
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, SeriesError> {
        Self::new(self.lo, self.omega.iter().map(|w| w * factor).collect())
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.lo == other.lo
            && self.omega.len() == other.omega.len()
            && self
                .omega
                .iter()
                .zip(&other.omega)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Integer multi-index with finite support, stored sparsely and sorted by index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<(i64, i64)>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds from (index, value) pairs; zero values are dropped, repeated indices summed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, i64)>) -> Self {
        let mut entries: Vec<(i64, i64)> = Vec::new();
        let mut raw: Vec<(i64, i64)> = pairs.into_iter().collect();
        raw.sort_by_key(|p| p.0);
        for (l, v) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == l => last.1 += v,
                _ => entries.push((l, v)),
            }
        }
        entries.retain(|p| p.1 != 0);
        Self { entries }
    }

    pub fn unit(lambda: i64, value: i64) -> Self {
        Self::from_pairs([(lambda, value)])
    }

    /// Dense constructor over a window starting at `lo`.
    pub fn dense(lo: i64, values: &[i64]) -> Self {
        Self::from_pairs(values.iter().enumerate().map(|(j, v)| (lo + j as i64, *v)))
    }

    pub fn entries(&self) -> &[(i64, i64)] {
        &self.entries
    }

    pub fn get(&self, lambda: i64) -> i64 {
        self.entries
            .binary_search_by_key(&lambda, |p| p.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn abs(&self) -> i64 {
        self.entries.iter().map(|p| p.1.abs()).sum()
    }

    pub fn support(&self) -> BTreeSet<i64> {
        self.entries.iter().map(|p| p.0).collect()
    }

    pub fn neg(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|&(l, v)| (l, -v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_pairs(self.entries.iter().chain(other.entries.iter()).copied())
    }

    pub fn scale(&self, c: i64) -> Self {
        Self::from_pairs(self.entries.iter().map(|&(l, v)| (l, v * c)))
    }

    /// True when the first nonzero entry is positive.
    pub fn is_positive(&self) -> bool {
        self.entries.first().is_some_and(|p| p.1 > 0)
    }

    /// ⟨k, ω⟩ with compensated summation.
    pub fn dot(&self, basis: &FrequencyBasis) -> f64 {
        let terms = self
            .entries
            .iter()
            .map(|&(l, v)| v as f64 * basis.frequency(l));
        compensated_sum(terms)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(l, v)| format!("{l}:{v}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(Self::zero());
        }
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let (l, v) = part
                .split_once(':')
                .ok_or_else(|| SeriesError::Parse(format!("bad multi-index entry `{part}`")))?;
            let l = l
                .trim()
                .parse::<i64>()
                .map_err(|e| SeriesError::Parse(e.to_string()))?;
            let v = v
                .trim()
                .parse::<i64>()
                .map_err(|e| SeriesError::Parse(e.to_string()))?;
            pairs.push((l, v));
        }
        Ok(Self::from_pairs(pairs))
    }
}

/// Neumaier summation.
pub fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// `1 + Σ_{i∈A} log(1+|i|)^ϱ`.
pub fn weight<'a>(set: impl IntoIterator<Item = &'a i64>, varrho: f64) -> f64 {
    1.0 + set
        .into_iter()
        .map(|i| (i.unsigned_abs() as f64).ln_1p().powf(varrho))
        .sum::<f64>()
}

const MAX_CLOSURE: usize = 100_000;

/// Union-closed family of finite index sets with its weight exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialStructure {
    varrho: f64,
    generators: Vec<BTreeSet<i64>>,
    sets: Vec<BTreeSet<i64>>,
    weights: Vec<f64>,
}

impl SpatialStructure {
    pub fn new(generators: Vec<BTreeSet<i64>>, varrho: f64) -> Result<Self, SeriesError> {
        if !(varrho > 2.0) || !varrho.is_finite() {
            return Err(SeriesError::InvalidStructure(format!(
                "weight exponent must exceed 2, got {varrho}"
            )));
        }
        if generators.iter().any(|g| g.is_empty()) {
            return Err(SeriesError::InvalidStructure("empty generator set".into()));
        }
        let sets = close_under_overlap(&generators)?;
        let weights = sets.iter().map(|a| weight(a, varrho)).collect();
        Ok(Self {
            varrho,
            generators,
            sets,
            weights,
        }
        .sorted())
    }

    /// Singletons of every basis index plus the whole window.
    pub fn singletons_and_window(basis: &FrequencyBasis, varrho: f64) -> Result<Self, SeriesError> {
        let mut gens: Vec<BTreeSet<i64>> = basis.indices().map(|l| BTreeSet::from([l])).collect();
        gens.push(basis.indices().collect());
        Self::new(gens, varrho)
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }

    pub fn generators(&self) -> &[BTreeSet<i64>] {
        &self.generators
    }

    /// All sets of the closure, sorted by (weight, cardinality, elements).
    pub fn sets(&self) -> &[BTreeSet<i64>] {
        &self.sets
    }

    pub fn set_weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    /// Index of the minimal covering set for `support`.
    /// The empty support is covered by the lightest set.
    pub fn covering_set(&self, support: &BTreeSet<i64>) -> Option<usize> {
        // sets are pre-sorted by the tie-break order, so the first cover wins
        self.sets.iter().position(|a| support.is_subset(a))
    }

    /// `[[k]]`: minimum weight over all sets covering the support of `k`.
    pub fn support_weight(&self, k: &MultiIndex) -> Result<f64, SeriesError> {
        self.covering_set(&k.support())
            .map(|i| self.weights[i])
            .ok_or_else(|| SeriesError::NoCoveringSet(k.to_string()))
    }

    pub fn weight_of(&self, set: &BTreeSet<i64>) -> f64 {
        weight(set, self.varrho)
    }

    pub fn max_index_abs(&self) -> i64 {
        self.sets
            .iter()
            .flat_map(|a| a.iter())
            .map(|i| i.abs())
            .max()
            .unwrap_or(0)
    }

    pub fn fits(&self, basis: &FrequencyBasis) -> bool {
        self.sets.iter().flatten().all(|&l| basis.contains(l))
    }
}

fn close_under_overlap(generators: &[BTreeSet<i64>]) -> Result<Vec<BTreeSet<i64>>, SeriesError> {
    let mut sets: BTreeSet<BTreeSet<i64>> = generators.iter().cloned().collect();
    let mut frontier: Vec<BTreeSet<i64>> = sets.iter().cloned().collect();
    while let Some(a) = frontier.pop() {
        let snapshot: Vec<BTreeSet<i64>> = sets.iter().cloned().collect();
        for b in snapshot {
            if a.is_disjoint(&b) {
                continue;
            }
            let u: BTreeSet<i64> = a.union(&b).copied().collect();
            if sets.insert(u.clone()) {
                frontier.push(u);
                if sets.len() > MAX_CLOSURE {
                    return Err(SeriesError::InvalidStructure(
                        "closure exceeds size limit".into(),
                    ));
                }
            }
        }
    }
    let out: Vec<BTreeSet<i64>> = sets.into_iter().collect();
    Ok(out)
}

impl SpatialStructure {
    fn sorted(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.sets.len()).collect();
        order.sort_by(|&i, &j| {
            self.weights[i]
                .total_cmp(&self.weights[j])
                .then(self.sets[i].len().cmp(&self.sets[j].len()))
                .then(self.sets[i].cmp(&self.sets[j]))
        });
        self.sets = order.iter().map(|&i| self.sets[i].clone()).collect();
        self.weights = order.iter().map(|&i| self.weights[i]).collect();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weight_examples() {
        assert_eq!(weight(&[0], 3.0), 1.0);
        let l2 = 2f64.ln();
        assert!((weight(&[1], 3.0) - (1.0 + l2 * l2 * l2)).abs() < 1e-15);
        let both = weight(&[-1, 1], 3.0);
        assert!((both - (1.0 + 2.0 * l2 * l2 * l2)).abs() < 1e-15);
        assert!(both > weight(&[1], 3.0));
    }

    #[test]
    fn weight_exponent_must_exceed_two() {
        assert!(SpatialStructure::new(vec![BTreeSet::from([0])], 2.0).is_err());
    }

    #[test]
    fn support_weight_cases() {
        let s = SpatialStructure::new(
            vec![BTreeSet::from([0]), BTreeSet::from([1, 2]), BTreeSet::from([2, 3])],
            3.0,
        )
        .unwrap();
        assert_eq!(s.support_weight(&MultiIndex::unit(0, 4)).unwrap(), 1.0);
        let k = MultiIndex::from_pairs([(1, 1), (2, -1)]);
        assert_eq!(s.support_weight(&k).unwrap(), weight(&[1, 2], 3.0));
        // {1,3} only fits in the union {1,2,3}
        let k = MultiIndex::from_pairs([(1, 1), (3, 2)]);
        let brute = s
            .sets()
            .iter()
            .filter(|a| k.support().is_subset(a))
            .map(|a| weight(a, 3.0))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(s.support_weight(&k).unwrap(), brute);
        assert_eq!(brute, weight(&[1, 2, 3], 3.0));
        let k = MultiIndex::from_pairs([(0, 1), (1, 1)]);
        assert!(matches!(
            s.support_weight(&k),
            Err(SeriesError::NoCoveringSet(_))
        ));
    }

    #[test]
    fn ties_break_by_cardinality_then_order() {
        // {0,1} and {0,-1,1}: equal weight because index 0 contributes nothing
        let s = SpatialStructure::new(
            vec![BTreeSet::from([-1, 0, 1]), BTreeSet::from([0, 1])],
            3.0,
        )
        .unwrap();
        let c = s.covering_set(&BTreeSet::from([1])).unwrap();
        assert_eq!(s.sets()[c], BTreeSet::from([0, 1]));
    }

    #[test]
    fn multi_index_algebra() {
        let a = MultiIndex::from_pairs([(2, 1), (-1, 3), (2, -1)]);
        assert_eq!(a, MultiIndex::unit(-1, 3));
        let b = MultiIndex::dense(-1, &[1, 0, -2]);
        assert_eq!(b.abs(), 3);
        assert_eq!(b.support(), BTreeSet::from([-1, 1]));
        assert!(a.add(&a.neg()).is_zero());
        assert_eq!(b.to_string().parse::<MultiIndex>().unwrap(), b);
        let basis = FrequencyBasis::new(-1, vec![1.0, 5.0, 0.25]).unwrap();
        assert_eq!(b.dot(&basis), 0.5);
    }

    #[test]
    fn basis_validation() {
        assert!(FrequencyBasis::new(0, vec![]).is_err());
        assert!(FrequencyBasis::new(0, vec![1.0, 0.0]).is_err());
        assert!(FrequencyBasis::new(0, vec![1.0, f64::NAN]).is_err());
        let b = FrequencyBasis::new(-2, vec![1.0; 5]).unwrap();
        assert_eq!((b.lo(), b.hi()), (-2, 2));
    }

    fn random_structure(raw: Vec<Vec<i64>>) -> SpatialStructure {
        let gens: Vec<BTreeSet<i64>> = raw
            .into_iter()
            .map(|v| v.into_iter().collect())
            .filter(|s: &BTreeSet<i64>| !s.is_empty())
            .collect();
        let gens = if gens.is_empty() { vec![BTreeSet::from([0])] } else { gens };
        SpatialStructure::new(gens, 2.5).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closure_is_union_closed_with_monotone_subadditive_weight(
            raw in prop::collection::vec(prop::collection::vec(-4i64..=4, 1..4), 1..6)
        ) {
            let s = random_structure(raw);
            let sets = s.sets();
            prop_assume!(sets.len() <= 200);
            for a in sets {
                for b in sets {
                    let wa = s.weight_of(a);
                    let wb = s.weight_of(b);
                    if a.is_subset(b) {
                        prop_assert!(wa <= wb);
                    }
                    if !a.is_disjoint(b) {
                        let u: BTreeSet<i64> = a.union(b).copied().collect();
                        let i: BTreeSet<i64> = a.intersection(b).copied().collect();
                        prop_assert!(sets.contains(&u));
                        prop_assert!(s.weight_of(&u) + s.weight_of(&i) <= wa + wb + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn support_weight_is_brute_force_minimum(
            raw in prop::collection::vec(prop::collection::vec(-4i64..=4, 1..4), 1..6),
            k in prop::collection::vec((-4i64..=4, -3i64..=3), 0..3)
        ) {
            let s = random_structure(raw);
            let k = MultiIndex::from_pairs(k);
            let brute = s.sets().iter()
                .filter(|a| k.support().is_subset(a))
                .map(|a| weight(a, s.varrho()))
                .fold(f64::INFINITY, f64::min);
            match s.support_weight(&k) {
                Ok(w) => prop_assert_eq!(w, brute),
                Err(_) => prop_assert!(brute.is_infinite()),
            }
        }
    }
}
