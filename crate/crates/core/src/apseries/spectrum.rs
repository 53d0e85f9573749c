use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::basis::{FrequencyBasis, MultiIndex, SpatialStructure};
use super::projection::Projector;
use super::SeriesError;

/// Default cutoff on `|k|` for retained modes.
pub const DEFAULT_KMAX: i64 = 12;

/// Relative threshold under which `⟨k,ω⟩` counts as an exact integer relation.
const RELATION_TOL: f64 = 1e-12;

/// Every admissible `k` with `|k| ≤ kmax` whose support is covered by the structure.
/// Sorted by `(|k|, k)`, so the zero index comes first.
pub fn admissible_indices(structure: &SpatialStructure, kmax: i64) -> Vec<MultiIndex> {
    let mut out: BTreeSet<(i64, MultiIndex)> = BTreeSet::new();
    out.insert((0, MultiIndex::zero()));
    for set in structure.sets() {
        let idx: Vec<i64> = set.iter().copied().collect();
        let mut vals = vec![0i64; idx.len()];
        enumerate_ball(&idx, &mut vals, 0, kmax, &mut |v| {
            let k = MultiIndex::from_pairs(idx.iter().copied().zip(v.iter().copied()));
            out.insert((k.abs(), k));
        });
    }
    out.into_iter().map(|(_, k)| k).collect()
}

fn enumerate_ball(
    idx: &[i64],
    vals: &mut [i64],
    pos: usize,
    budget: i64,
    visit: &mut impl FnMut(&[i64]),
) {
    if pos == idx.len() {
        visit(vals);
        return;
    }
    for v in -budget..=budget {
        vals[pos] = v;
        enumerate_ball(idx, vals, pos + 1, budget - v.abs(), visit);
    }
    vals[pos] = 0;
}

/// The retained mode set shared by every series built on it.
///
/// Modes are closed under negation. Each mode carries its frequency `⟨k,ω⟩`,
/// its covering set and `[[k]]`.
#[derive(Debug)]
pub struct Spectrum {
    basis: FrequencyBasis,
    structure: SpatialStructure,
    kmax: i64,
    modes: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    neg: Vec<usize>,
    freq: Vec<f64>,
    cover: Vec<usize>,
    support_weight: Vec<f64>,
    positive: Vec<usize>,
    projector: OnceLock<Arc<Projector>>,
}

impl Spectrum {
    /// Builds the spectrum and rejects exact integer relations among the retained frequencies.
    pub fn new(
        basis: FrequencyBasis,
        structure: SpatialStructure,
        kmax: i64,
    ) -> Result<Arc<Self>, SeriesError> {
        let s = Self::build(basis, structure, kmax)?;
        for (i, k) in s.modes.iter().enumerate() {
            if k.is_zero() {
                continue;
            }
            let scale: f64 = k
                .entries()
                .iter()
                .map(|&(l, v)| (v as f64 * s.basis.frequency(l)).abs())
                .sum();
            if s.freq[i].abs() <= RELATION_TOL * scale {
                return Err(SeriesError::ExactRelation(k.to_string()));
            }
        }
        Ok(Arc::new(s))
    }

    fn build(
        basis: FrequencyBasis,
        structure: SpatialStructure,
        kmax: i64,
    ) -> Result<Self, SeriesError> {
        if kmax < 0 {
            return Err(SeriesError::InvalidStructure("negative mode cutoff".into()));
        }
        if !structure.fits(&basis) {
            return Err(SeriesError::InvalidStructure(
                "structure uses indices outside the frequency window".into(),
            ));
        }
        let modes = admissible_indices(&structure, kmax);
        let index: HashMap<MultiIndex, usize> =
            modes.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let neg = modes.iter().map(|k| index[&k.neg()]).collect();
        let freq = modes.iter().map(|k| k.dot(&basis)).collect();
        let mut cover = Vec::with_capacity(modes.len());
        let mut support_weight = Vec::with_capacity(modes.len());
        for k in &modes {
            let c = structure
                .covering_set(&k.support())
                .ok_or_else(|| SeriesError::NoCoveringSet(k.to_string()))?;
            cover.push(c);
            support_weight.push(structure.set_weight(c));
        }
        let positive = modes
            .iter()
            .enumerate()
            .filter(|(_, k)| k.is_positive())
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            basis,
            structure,
            kmax,
            modes,
            index,
            neg,
            freq,
            cover,
            support_weight,
            positive,
            projector: OnceLock::new(),
        })
    }

    /// Same modes over the frequencies multiplied by `factor`.
    pub fn with_scaled_basis(&self, factor: f64) -> Result<Arc<Self>, SeriesError> {
        Self::new(self.basis.scaled(factor)?, self.structure.clone(), self.kmax)
    }

    pub fn basis(&self) -> &FrequencyBasis {
        &self.basis
    }

    pub fn structure(&self) -> &SpatialStructure {
        &self.structure
    }

    pub fn kmax(&self) -> i64 {
        self.kmax
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[MultiIndex] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &MultiIndex {
        &self.modes[i]
    }

    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        self.index.get(k).copied()
    }

    /// Slot of the zero index.
    pub fn zero(&self) -> usize {
        0
    }

    pub fn neg(&self, i: usize) -> usize {
        self.neg[i]
    }

    /// `⟨k,ω⟩` of mode `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        self.freq[i]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freq
    }

    /// Position of the minimal covering set in `structure().sets()`.
    pub fn cover(&self, i: usize) -> usize {
        self.cover[i]
    }

    /// `[[k]]` of mode `i`.
    pub fn support_weight(&self, i: usize) -> f64 {
        self.support_weight[i]
    }

    /// Modes whose first nonzero entry is positive; one per `±k` pair.
    pub fn positive(&self) -> &[usize] {
        &self.positive
    }

    pub fn compatible(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.kmax == other.kmax
                && self.basis.same_as(&other.basis)
                && self.structure == other.structure)
    }

    /// `e^{i⟨k,θ⟩}` for every mode at torus angles `theta` (one per basis index).
    pub fn phases(&self, theta: &[f64], out: &mut Vec<Complex64>) {
        let powers = PowerTable::new(self, theta.iter().map(|&t| Complex64::new(0.0, t).exp()));
        self.fill_phases(&powers, out);
    }

    /// Phases at complex angles, for evaluation inside the strip.
    pub fn phases_complex(&self, theta: &[Complex64], out: &mut Vec<Complex64>) {
        let i = Complex64::i();
        let powers = PowerTable::new(self, theta.iter().map(|&t| (i * t).exp()));
        self.fill_phases(&powers, out);
    }

    fn fill_phases(&self, powers: &PowerTable, out: &mut Vec<Complex64>) {
        out.clear();
        out.resize(self.len(), Complex64::new(1.0, 0.0));
        for (slot, k) in self.modes.iter().enumerate() {
            let mut z = Complex64::new(1.0, 0.0);
            for &(l, v) in k.entries() {
                z *= powers.get(self.basis.slot(l).unwrap_or(0), v);
            }
            out[slot] = z;
        }
    }

    /// Shared least-squares projector, built on first use.
    pub fn projector(&self) -> Result<Arc<Projector>, SeriesError> {
        if let Some(p) = self.projector.get() {
            return Ok(p.clone());
        }
        let p = Arc::new(Projector::new(self)?);
        Ok(self.projector.get_or_init(|| p).clone())
    }

    /// Torus angles `ω t` of the real line point `t`.
    pub fn line_angles(&self, t: f64) -> Vec<f64> {
        self.basis.frequencies().iter().map(|w| w * t).collect()
    }
}

impl PartialEq for Spectrum {
    fn eq(&self, other: &Self) -> bool {
        self.compatible(other)
    }
}

struct PowerTable {
    kmax: i64,
    table: Vec<Complex64>,
}

impl PowerTable {
    fn new(spec: &Spectrum, bases: impl Iterator<Item = Complex64>) -> Self {
        let kmax = spec.kmax.max(1);
        let width = (2 * kmax + 1) as usize;
        let mut table = Vec::with_capacity(spec.basis.len() * width);
        for z in bases {
            let zi = z.inv();
            let mut row = vec![Complex64::new(1.0, 0.0); width];
            for n in 1..=kmax as usize {
                row[kmax as usize + n] = row[kmax as usize + n - 1] * z;
                row[kmax as usize - n] = row[kmax as usize - n + 1] * zi;
            }
            table.extend(row);
        }
        Self { kmax, table }
    }

    fn get(&self, slot: usize, power: i64) -> Complex64 {
        let width = (2 * self.kmax + 1) as usize;
        self.table[slot * width + (power + self.kmax) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Arc<Spectrum> {
        let basis = FrequencyBasis::from_frequencies(&[1.0, (5f64.sqrt() - 1.0) / 2.0]).unwrap();
        let s = SpatialStructure::singletons_and_window(&basis, 3.0).unwrap();
        Spectrum::new(basis, s, 12).unwrap()
    }

    #[test]
    fn two_frequency_mode_count() {
        // |k1|+|k2| ≤ 12 has 2·12·13 + 1 lattice points
        assert_eq!(golden().len(), 313);
    }

    #[test]
    fn zero_first_and_negation_closed() {
        let s = golden();
        assert!(s.mode(0).is_zero());
        for i in 0..s.len() {
            assert_eq!(s.mode(s.neg(i)), &s.mode(i).neg());
            assert_eq!(s.neg(s.neg(i)), i);
        }
        assert_eq!(s.positive().len(), (s.len() - 1) / 2);
    }

    #[test]
    fn rational_relation_rejected() {
        let basis = FrequencyBasis::from_frequencies(&[1.0, 0.5]).unwrap();
        let st = SpatialStructure::singletons_and_window(&basis, 3.0).unwrap();
        assert!(matches!(
            Spectrum::new(basis, st, 4),
            Err(SeriesError::ExactRelation(_))
        ));
    }

    #[test]
    fn phases_match_direct_exponentials() {
        let s = golden();
        let theta = [0.3, -1.7];
        let mut ph = Vec::new();
        s.phases(&theta, &mut ph);
        for (i, k) in s.modes().iter().enumerate() {
            let arg = k.get(0) as f64 * theta[0] + k.get(1) as f64 * theta[1];
            let want = Complex64::new(0.0, arg).exp();
            assert!((ph[i] - want).norm() < 1e-13);
        }
    }

    #[test]
    fn disjoint_generators_restrict_support() {
        let basis = FrequencyBasis::new(-1, vec![1.0, 2f64.sqrt(), 3f64.sqrt()]).unwrap();
        let gens = vec![BTreeSet::from([-1]), BTreeSet::from([0, 1])];
        let st = SpatialStructure::new(gens, 3.0).unwrap();
        let s = Spectrum::new(basis, st, 3).unwrap();
        assert!(s.position(&MultiIndex::from_pairs([(-1, 1), (0, 1)])).is_none());
        assert!(s.position(&MultiIndex::from_pairs([(0, 1), (1, -2)])).is_some());
    }
}
