use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::rng;
use crate::types::{LayerImage, LayerKey, LayerTriplet, ProcessParams};

/// Unvalidated input to [`assemble_dataset`].
#[derive(Debug, Clone)]
pub struct TripletSource {
    pub part: u32,
    pub layer: u32,
    pub hr: LayerImage,
    pub ot: LayerImage,
    pub pp: LayerImage,
}

/// The `(HR, OT, PP)` records of a build, ordered by `(part, layer)`.
#[derive(Debug, Clone)]
pub struct Dataset {
    parts: u32,
    layers_per_part: u32,
    triplets: Vec<LayerTriplet>,
    index: BTreeMap<LayerKey, usize>,
    params: BTreeMap<u32, ProcessParams>,
}

impl Dataset {
    pub fn parts(&self) -> u32 {
        self.parts
    }

    pub fn layers_per_part(&self) -> u32 {
        self.layers_per_part
    }

    /// Triplet count `T`.
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn triplets(&self) -> &[LayerTriplet] {
        &self.triplets
    }

    pub fn params(&self) -> &BTreeMap<u32, ProcessParams> {
        &self.params
    }

    pub fn get(&self, key: LayerKey) -> Option<&LayerTriplet> {
        self.index.get(&key).map(|&i| &self.triplets[i])
    }

    pub fn keys(&self) -> impl Iterator<Item = LayerKey> + '_ {
        self.triplets.iter().map(LayerTriplet::key)
    }

    /// Common `(width, height)` of all images, if the dataset is non-empty
    /// and uniform.
    pub fn image_dims(&self) -> Option<(usize, usize)> {
        let first = self.triplets.first()?.dims();
        self.triplets.iter().all(|t| t.dims() == first).then_some(first)
    }

    /// Keys that are absent from the full `Π × Λ` grid.
    pub fn missing(&self) -> Vec<LayerKey> {
        let mut out = Vec::new();
        for p in 1..=self.parts {
            for l in 1..=self.layers_per_part {
                if !self.index.contains_key(&(p, l)) {
                    out.push((p, l));
                }
            }
        }
        out
    }

    /// Triplets selected by `keys`, in dataset order.
    pub fn select<'a>(&'a self, keys: &'a BTreeSet<LayerKey>) -> impl Iterator<Item = &'a LayerTriplet> + 'a {
        self.triplets.iter().filter(move |t| keys.contains(&t.key()))
    }
}

/// Assembles a dataset whose extent `(Π, Λ)` is the largest part and layer
/// index present in the sources or parameter map.
pub fn assemble_dataset(
    sources: Vec<TripletSource>,
    params: BTreeMap<u32, ProcessParams>,
) -> Result<Dataset, CoreError> {
    let parts = sources
        .iter()
        .map(|s| s.part)
        .chain(params.keys().copied())
        .max()
        .unwrap_or(0);
    let layers = sources.iter().map(|s| s.layer).max().unwrap_or(0);
    assemble_dataset_with_extent(sources, params, parts, layers)
}

/// Assembles a dataset with an explicit `(Π, Λ)` extent. Missing layers are
/// allowed; keys outside the extent are not.
pub fn assemble_dataset_with_extent(
    sources: Vec<TripletSource>,
    params: BTreeMap<u32, ProcessParams>,
    parts: u32,
    layers_per_part: u32,
) -> Result<Dataset, CoreError> {
    for (&part, p) in &params {
        p.validate()?;
        if p.part != part {
            return Err(CoreError::Assembly {
                part,
                layer: 0,
                reason: format!("parameter record says part {}", p.part),
            });
        }
    }
    let mut seen = BTreeSet::new();
    let mut triplets = Vec::with_capacity(sources.len());
    for s in sources {
        let (part, layer) = (s.part, s.layer);
        let fail = |reason: String| CoreError::Assembly { part, layer, reason };
        if part == 0 || part > parts || layer == 0 || layer > layers_per_part {
            return Err(fail(format!("key outside 1..={parts} x 1..={layers_per_part}")));
        }
        if !seen.insert((part, layer)) {
            return Err(fail("duplicate key".into()));
        }
        if s.hr.dims() != s.ot.dims() || s.hr.dims() != s.pp.dims() {
            return Err(fail(format!(
                "image dimensions differ: HR {:?}, OT {:?}, PP {:?}",
                s.hr.dims(),
                s.ot.dims(),
                s.pp.dims()
            )));
        }
        let pp = s.pp.with_modality(crate::types::Modality::Pp).map_err(|e| fail(e.to_string()))?;
        triplets.push(LayerTriplet {
            part,
            layer,
            hr: s.hr,
            ot: s.ot,
            pp,
        });
    }
    triplets.sort_by_key(LayerTriplet::key);
    let index = triplets.iter().enumerate().map(|(i, t)| (t.key(), i)).collect();
    Ok(Dataset {
        parts,
        layers_per_part,
        triplets,
        index,
        params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, CoreError> {
        let all = [train, validation, test];
        if all.iter().any(|f| !f.is_finite() || *f < 0.0) || ((train + validation + test) - 1.0).abs() > 1e-9 {
            return Err(CoreError::Split(format!(
                "fractions ({train}, {validation}, {test}) must be non-negative and sum to 1"
            )));
        }
        Ok(Self {
            train,
            validation,
            test,
        })
    }
}

impl Default for SplitFractions {
    /// 60 / 20 / 20.
    fn default() -> Self {
        Self {
            train: 0.6,
            validation: 0.2,
            test: 0.2,
        }
    }
}

/// Train / validation / test partition of dataset keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: BTreeSet<LayerKey>,
    pub validation: BTreeSet<LayerKey>,
    pub test: BTreeSet<LayerKey>,
}

impl SplitAssignment {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks that the three sets partition `keys`.
    pub fn check_partition(&self, keys: impl IntoIterator<Item = LayerKey>) -> Result<(), CoreError> {
        let all: BTreeSet<LayerKey> = keys.into_iter().collect();
        let sets = [&self.train, &self.validation, &self.test];
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                if let Some(k) = a.intersection(b).next() {
                    return Err(CoreError::Split(format!("key {k:?} in two splits")));
                }
            }
        }
        let union: BTreeSet<LayerKey> = sets.iter().flat_map(|s| s.iter().copied()).collect();
        if union != all {
            return Err(CoreError::Split("splits do not cover the dataset exactly".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serializes")
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), CoreError> {
        std::fs::write(path, self.to_json()).map_err(|e| CoreError::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CoreError::json(path, e))
    }
}

/// Largest-remainder allocation of `total` items over parts of size
/// `sizes`, proportional to the sizes, never exceeding `capacity[i]`.
fn allocate(sizes: &[usize], total: usize, fraction: f64, capacity: &[usize]) -> Vec<usize> {
    let mut alloc: Vec<usize> = sizes
        .iter()
        .zip(capacity)
        .map(|(&n, &cap)| ((n as f64 * fraction).floor() as usize).min(cap))
        .collect();
    let mut remaining = total.saturating_sub(alloc.iter().sum());
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // Largest fractional part first, ties by part order.
    order.sort_by(|&a, &b| {
        let fa = sizes[a] as f64 * fraction - alloc[a] as f64;
        let fb = sizes[b] as f64 * fraction - alloc[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    while remaining > 0 {
        let mut progressed = false;
        for &i in &order {
            if remaining == 0 {
                break;
            }
            if alloc[i] < capacity[i] {
                alloc[i] += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    alloc
}

/// Seeded split stratified by part.
///
/// Validation and test sizes are `round(f · T)` (half away from zero); the
/// training set takes the rest. Within each part, layers are shuffled by a
/// stream keyed on `(seed, part)` and dealt into test, validation, train.
pub fn split_dataset(dataset: &Dataset, fractions: SplitFractions, seed: u64) -> Result<SplitAssignment, CoreError> {
    split_keys(dataset.keys(), fractions, seed)
}

/// [`split_dataset`] over a bare key list.
pub fn split_keys(
    keys: impl IntoIterator<Item = LayerKey>,
    fractions: SplitFractions,
    seed: u64,
) -> Result<SplitAssignment, CoreError> {
    let mut by_part: BTreeMap<u32, Vec<LayerKey>> = BTreeMap::new();
    for k in keys {
        by_part.entry(k.0).or_default().push(k);
    }
    let total: usize = by_part.values().map(Vec::len).sum();
    if total == 0 {
        return Err(CoreError::Split("dataset is empty".into()));
    }
    let n_test = (fractions.test * total as f64).round() as usize;
    let n_val = ((fractions.validation * total as f64).round() as usize).min(total - n_test);

    let sizes: Vec<usize> = by_part.values().map(Vec::len).collect();
    let test_alloc = allocate(&sizes, n_test, fractions.test, &sizes);
    let left: Vec<usize> = sizes.iter().zip(&test_alloc).map(|(s, t)| s - t).collect();
    let val_alloc = allocate(&sizes, n_val, fractions.validation, &left);

    let mut out = SplitAssignment {
        seed,
        train: BTreeSet::new(),
        validation: BTreeSet::new(),
        test: BTreeSet::new(),
    };
    for (i, (part, mut layer_keys)) in by_part.into_iter().enumerate() {
        layer_keys.sort_unstable();
        let mut rng = rng::stream(seed, &[rng::purpose::SPLIT, part as u64]);
        layer_keys.shuffle(&mut rng);
        let (t, v) = (test_alloc[i], val_alloc[i]);
        out.test.extend(&layer_keys[..t]);
        out.validation.extend(&layer_keys[t..t + v]);
        out.train.extend(&layer_keys[t + v..]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Modality;

    fn img(m: Modality, w: usize, h: usize) -> LayerImage {
        LayerImage::zeros(m, w, h)
    }

    fn source(part: u32, layer: u32) -> TripletSource {
        TripletSource {
            part,
            layer,
            hr: img(Modality::Hr, 2, 2),
            ot: img(Modality::Ot, 2, 2),
            pp: img(Modality::Pp, 2, 2),
        }
    }

    fn params(n: u32) -> BTreeMap<u32, ProcessParams> {
        (1..=n)
            .map(|p| (p, ProcessParams::new(p, 370.0, 1300.0, 190.0, 30.0).unwrap()))
            .collect()
    }

    #[test]
    fn assembles_in_key_order() {
        let sources = vec![source(2, 1), source(1, 3), source(1, 1), source(2, 3), source(1, 2), source(2, 2)];
        let d = assemble_dataset(sources, params(2)).unwrap();
        assert_eq!(d.len(), 6);
        let keys: Vec<_> = d.keys().collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(d.parts(), 2);
        assert_eq!(d.layers_per_part(), 3);
        assert!(d.missing().is_empty());
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = assemble_dataset(vec![source(1, 1), source(1, 1)], params(1)).unwrap_err();
        assert!(matches!(err, CoreError::Assembly { part: 1, layer: 1, .. }));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut s = source(1, 2);
        s.ot = img(Modality::Ot, 3, 2);
        let err = assemble_dataset(vec![source(1, 1), s], params(1)).unwrap_err();
        assert!(matches!(err, CoreError::Assembly { part: 1, layer: 2, .. }), "{err}");
    }

    #[test]
    fn reference_extent_with_missing_layers() {
        let dropped: BTreeSet<LayerKey> = [(1, 5), (2, 100), (3, 712), (4, 1), (5, 300), (6, 6), (9, 9), (10, 10)]
            .into_iter()
            .collect();
        let mut sources = Vec::new();
        for p in 1..=10 {
            for l in 1..=712 {
                if !dropped.contains(&(p, l)) {
                    sources.push(source(p, l));
                }
            }
        }
        let d = assemble_dataset_with_extent(sources, params(10), 10, 712).unwrap();
        assert_eq!(d.len(), 7112);
        assert_eq!(d.missing().into_iter().collect::<BTreeSet<_>>(), dropped);
    }

    fn keys(parts: u32, layers: u32) -> Vec<LayerKey> {
        (1..=parts).flat_map(|p| (1..=layers).map(move |l| (p, l))).collect()
    }

    #[test]
    fn split_sizes_hundred() {
        let s = split_keys(keys(4, 25), SplitFractions::default(), 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (60, 20, 20));
        s.check_partition(keys(4, 25)).unwrap();
        // 25 layers per part at 20% -> exactly 5 per part in test
        for p in 1..=4 {
            assert_eq!(s.test.iter().filter(|k| k.0 == p).count(), 5);
        }
    }

    #[test]
    fn split_sizes_ten() {
        let all = keys(1, 10);
        let s = split_keys(all.clone(), SplitFractions::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (6, 2, 2));
        // enumerate the partition property directly
        for k in &all {
            let hits = [&s.train, &s.validation, &s.test].iter().filter(|set| set.contains(k)).count();
            assert_eq!(hits, 1, "{k:?}");
        }
    }

    #[test]
    fn split_is_deterministic() {
        let a = split_keys(keys(3, 17), SplitFractions::default(), 42).unwrap();
        let b = split_keys(keys(3, 17), SplitFractions::default(), 42).unwrap();
        assert_eq!(a, b);
        let c = split_keys(keys(3, 17), SplitFractions::default(), 43).unwrap();
        assert_ne!(a, c);
        c.check_partition(keys(3, 17)).unwrap();
    }

    #[test]
    fn split_rounding_with_tiny_parts() {
        // seven parts of one layer each: round(1.4) = 1 test, 1 validation
        let all = keys(7, 1);
        let s = split_keys(all.clone(), SplitFractions::default(), 3).unwrap();
        assert_eq!((s.test.len(), s.validation.len(), s.train.len()), (1, 1, 5));
        s.check_partition(all).unwrap();
    }

    #[test]
    fn split_empty_fails() {
        assert!(split_keys(Vec::new(), SplitFractions::default(), 0).is_err());
    }

    #[test]
    fn fractions_validated() {
        assert!(SplitFractions::new(0.5, 0.2, 0.2).is_err());
        assert!(SplitFractions::new(0.8, -0.0, 0.2).is_ok());
    }

    #[test]
    fn split_file_round_trip() {
        let s = split_keys(keys(2, 5), SplitFractions::default(), 9).unwrap();
        let back: SplitAssignment = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(s.to_json().contains("\"validation\""));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn split_always_partitions(parts in 1u32..6, layers in 1u32..40, seed in any::<u64>()) {
                let all = keys(parts, layers);
                let s = split_keys(all.clone(), SplitFractions::default(), seed).unwrap();
                s.check_partition(all.clone()).unwrap();
                let t = all.len() as f64;
                prop_assert_eq!(s.test.len(), (0.2 * t).round() as usize);
                prop_assert_eq!(s.validation.len(), ((0.2 * t).round() as usize).min(all.len() - s.test.len()));
            }
        }
    }
}
