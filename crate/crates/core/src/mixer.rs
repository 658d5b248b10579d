//! Block-exact interleaving of record streams and epoch accounting.
//!
//! Every block of `block` output records holds exactly `block × weight`
//! records from each source, in a seeded order that depends only on the
//! seed and the block number.

use std::collections::VecDeque;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::masker::record_rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("at least one source is required")]
    NoSources,
    #[error("block size must be positive")]
    ZeroBlock,
    #[error("source `{0}` has a negative weight")]
    NegativeWeight(String),
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("source `{source_id}`: block × weight = {share} is not a whole number")]
    NonIntegralShare { source_id: String, share: f64 },
    #[error("duplicate source id `{0}`")]
    DuplicateSource(String),
    #[error("{streams} streams given for {sources} sources")]
    StreamCount { streams: usize, sources: usize },
    #[error("corpus size must be positive")]
    EmptyCorpus,
    #[error("mix fraction must lie in [0, 1]")]
    FractionRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixSource<S> {
    pub id: String,
    pub weight: S,
}

/// A validated mixing configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MixSpec<S> {
    sources: Vec<MixSource<S>>,
    quotas: Vec<usize>,
    seed: u64,
    block: usize,
}

impl<S: Scalar> MixSpec<S> {
    pub fn new(sources: Vec<MixSource<S>>, seed: u64, block: usize) -> Result<Self, MixError> {
        if sources.is_empty() {
            return Err(MixError::NoSources);
        }
        if block == 0 {
            return Err(MixError::ZeroBlock);
        }
        for (i, s) in sources.iter().enumerate() {
            if s.weight < S::zero() {
                return Err(MixError::NegativeWeight(s.id.clone()));
            }
            if sources[..i].iter().any(|o| o.id == s.id) {
                return Err(MixError::DuplicateSource(s.id.clone()));
            }
        }
        let total = crate::scalar::sum(sources.iter().map(|s| s.weight.clone()));
        if !total.nearly_eq(&S::one()) {
            return Err(MixError::WeightSum(total.to_f64_lossy()));
        }
        let quotas = sources
            .iter()
            .map(|s| {
                let share = S::from_count(block as u64) * s.weight.clone();
                share.as_count().map(|n| n as usize).ok_or_else(|| MixError::NonIntegralShare {
                    source_id: s.id.clone(),
                    share: share.to_f64_lossy(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        // float weights can pass the sum check yet round to a short block
        if quotas.iter().sum::<usize>() != block {
            return Err(MixError::WeightSum(total.to_f64_lossy()));
        }
        Ok(MixSpec { sources, quotas, seed, block })
    }

    pub fn sources(&self) -> &[MixSource<S>] {
        &self.sources
    }

    /// Records per block for each source.
    pub fn quotas(&self) -> &[usize] {
        &self.quotas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block(&self) -> usize {
        self.block
    }

    /// Source order within block `index`.
    pub fn block_layout(&self, index: u64) -> Vec<usize> {
        block_layout(&self.quotas, self.seed, index)
    }
}

fn block_layout(quotas: &[usize], seed: u64, index: u64) -> Vec<usize> {
    let mut slots: Vec<usize> = quotas
        .iter()
        .enumerate()
        .flat_map(|(i, &q)| std::iter::repeat_n(i, q))
        .collect();
    slots.shuffle(&mut record_rng(seed, index));
    slots
}

/// Counts reported once mixing stops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixReport {
    pub emitted: u64,
    pub leftover_per_source: IndexMap<String, u64>,
}

/// Iterator over `(source index, record)` pairs. Stops at the first block
/// some source cannot fill; records already pulled for that block count as
/// leftovers.
pub struct Mixer<T, I> {
    seed: u64,
    ids: Vec<String>,
    quotas: Vec<usize>,
    streams: Vec<I>,
    buffers: Vec<VecDeque<T>>,
    pending: VecDeque<usize>,
    next_block: u64,
    emitted: u64,
    exhausted: bool,
}

/// Interleaves `streams` (one per source, in spec order).
pub fn mix<S, T, I>(streams: Vec<I>, spec: &MixSpec<S>) -> Result<Mixer<T, I>, MixError>
where
    S: Scalar,
    I: Iterator<Item = T>,
{
    if streams.len() != spec.sources.len() {
        return Err(MixError::StreamCount { streams: streams.len(), sources: spec.sources.len() });
    }
    Ok(Mixer {
        seed: spec.seed,
        ids: spec.sources.iter().map(|s| s.id.clone()).collect(),
        quotas: spec.quotas.clone(),
        buffers: streams.iter().map(|_| VecDeque::new()).collect(),
        streams,
        pending: VecDeque::new(),
        next_block: 0,
        emitted: 0,
        exhausted: false,
    })
}

impl<T, I: Iterator<Item = T>> Mixer<T, I> {
    fn fill_block(&mut self) -> bool {
        for (i, stream) in self.streams.iter_mut().enumerate() {
            while self.buffers[i].len() < self.quotas[i] {
                match stream.next() {
                    Some(r) => self.buffers[i].push_back(r),
                    None => return false,
                }
            }
        }
        self.pending = block_layout(&self.quotas, self.seed, self.next_block).into();
        self.next_block += 1;
        true
    }

    /// Drains the rest of every stream and reports what was not emitted.
    pub fn finish(mut self) -> MixReport {
        let leftover_per_source = self
            .streams
            .iter_mut()
            .zip(&self.buffers)
            .zip(&self.ids)
            .map(|((stream, buf), id)| (id.clone(), (buf.len() + stream.count()) as u64))
            .collect();
        MixReport { emitted: self.emitted, leftover_per_source }
    }
}

impl<T, I: Iterator<Item = T>> Iterator for Mixer<T, I> {
    type Item = (usize, T);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pending.is_empty() && (self.exhausted || !self.fill_block()) {
            self.exhausted = true;
            return None;
        }
        let source = self.pending.pop_front()?;
        let record = self.buffers[source].pop_front().expect("block was prefilled");
        self.emitted += 1;
        Some((source, record))
    }
}

/// Steps, batch size and corpus size of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<S> {
    pub steps: u64,
    pub batch_size: u64,
    /// Share of each batch drawn from the corpus being counted.
    pub mix_fraction: S,
    pub corpus_size: u64,
}

/// Passes over the corpus: `steps × batch_size × mix_fraction / corpus_size`.
pub fn epochs<S: Scalar>(cfg: &TrainConfig<S>) -> Result<S, MixError> {
    if cfg.corpus_size == 0 {
        return Err(MixError::EmptyCorpus);
    }
    if cfg.mix_fraction < S::zero() || cfg.mix_fraction > S::one() {
        return Err(MixError::FractionRange);
    }
    Ok(S::from_count(cfg.steps) * S::from_count(cfg.batch_size) * cfg.mix_fraction.clone()
        / S::from_count(cfg.corpus_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use proptest::prelude::*;

    fn half(seed: u64, block: usize) -> MixSpec<Rational> {
        MixSpec::new(
            vec![
                MixSource { id: "kg".into(), weight: Rational::new(1, 2) },
                MixSource { id: "c4".into(), weight: Rational::new(1, 2) },
            ],
            seed,
            block,
        )
        .unwrap()
    }

    #[test]
    fn two_streams_half_and_half() {
        let spec = half(3, 2);
        let a: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
        let b: Vec<String> = (0..4).map(|i| format!("b{i}")).collect();
        let mut m = mix(vec![a.into_iter(), b.into_iter()], &spec).unwrap();
        let out: Vec<_> = m.by_ref().collect();
        assert_eq!(out.len(), 8);
        for pair in out.chunks(2) {
            assert_ne!(pair[0].0, pair[1].0);
        }
        let a: Vec<_> = out.iter().filter(|(s, _)| *s == 0).map(|(_, r)| r.as_str()).collect();
        assert_eq!(a, ["a0", "a1", "a2", "a3"]);
        let report = m.finish();
        assert_eq!(report.emitted, 8);
        assert_eq!(report.leftover_per_source.values().copied().collect::<Vec<_>>(), [0, 0]);
    }

    #[test]
    fn zero_weight_source_is_never_read() {
        let spec = MixSpec::new(
            vec![
                MixSource { id: "a".into(), weight: 1.0f64 },
                MixSource { id: "b".into(), weight: 0.0 },
            ],
            1,
            2,
        )
        .unwrap();
        let out: Vec<_> = mix(vec![0..4, 100..103], &spec).unwrap().map(|(_, r)| r).collect();
        assert_eq!(out, [0, 1, 2, 3]);
    }

    #[test]
    fn stops_at_first_exhaustion_and_counts_leftovers() {
        let spec = half(0, 2);
        let mut m = mix(vec![0..10, 0..3], &spec).unwrap();
        assert_eq!(m.by_ref().count(), 6);
        let report = m.finish();
        assert_eq!(report.leftover_per_source["kg"], 7);
        assert_eq!(report.leftover_per_source["c4"], 0);
    }

    #[test]
    fn configuration_errors() {
        let w = |xs: &[(&str, Rational)]| {
            xs.iter().map(|(id, w)| MixSource { id: id.to_string(), weight: *w }).collect::<Vec<_>>()
        };
        assert_eq!(
            MixSpec::new(w(&[("a", Rational::new(9, 20)), ("b", Rational::new(9, 20))]), 0, 2),
            Err(MixError::WeightSum(0.9))
        );
        assert!(matches!(
            MixSpec::new(w(&[("a", Rational::new(1, 3)), ("b", Rational::new(2, 3))]), 0, 2),
            Err(MixError::NonIntegralShare { .. })
        ));
        assert!(MixSpec::new(w(&[("a", Rational::new(1, 3)), ("b", Rational::new(2, 3))]), 0, 3).is_ok());
        assert_eq!(MixSpec::new(w(&[("a", Rational::new(1, 1))]), 0, 0), Err(MixError::ZeroBlock));
        assert_eq!(MixSpec::<Rational>::new(vec![], 0, 2), Err(MixError::NoSources));
        assert_eq!(
            MixSpec::new(w(&[("a", Rational::new(3, 2)), ("b", Rational::new(-1, 2))]), 0, 2),
            Err(MixError::NegativeWeight("b".into()))
        );
        assert_eq!(
            MixSpec::new(w(&[("a", Rational::new(1, 2)), ("a", Rational::new(1, 2))]), 0, 2),
            Err(MixError::DuplicateSource("a".into()))
        );
        assert!(matches!(mix(vec![std::iter::once(0)], &half(0, 2)), Err(MixError::StreamCount { .. })));
    }

    #[test]
    fn epoch_examples() {
        let cfg = |steps, size| TrainConfig {
            steps,
            batch_size: 1024,
            mix_fraction: Rational::new(1, 2),
            corpus_size: size,
        };
        let wiki = epochs(&cfg(500_000, 35_697_715)).unwrap();
        assert_eq!(wiki, Rational::new(256_000_000, 35_697_715));
        assert!((wiki.to_f64_lossy() - 7.17).abs() < 0.005);
        let kelm = epochs(&cfg(500_000, 15_628_486)).unwrap();
        assert!((kelm.to_f64_lossy() - 16.38).abs() < 0.005);
        assert_eq!(epochs(&TrainConfig { corpus_size: 100, ..cfg(0, 1) }).unwrap(), Rational::from_integer(0));
        assert_eq!(epochs(&cfg(1, 0)), Err(MixError::EmptyCorpus));

        let float = epochs(&TrainConfig { steps: 500_000, batch_size: 1024, mix_fraction: 0.5f64, corpus_size: 35_697_715 });
        assert!((float.unwrap() - 7.17).abs() < 0.005);
    }

    #[test]
    fn epochs_scale_linearly() {
        let base = TrainConfig { steps: 1000, batch_size: 64, mix_fraction: Rational::new(1, 2), corpus_size: 777 };
        let e = epochs(&base).unwrap();
        let two = Rational::from_integer(2);
        assert_eq!(epochs(&TrainConfig { steps: 2000, ..base.clone() }).unwrap(), e * two);
        assert_eq!(epochs(&TrainConfig { batch_size: 128, ..base.clone() }).unwrap(), e * two);
        assert_eq!(epochs(&TrainConfig { corpus_size: 1554, ..base }).unwrap(), e / two);
    }

    proptest! {
        #[test]
        fn blocks_are_exact_and_records_are_permuted(
            a in 0usize..40, b in 0usize..40, seed: u64, block_half in 1usize..5,
        ) {
            let block = 2 * block_half;
            let spec = half(seed, block);
            let tag = |src: usize, n: usize| (0..n).map(|i| (src, i)).collect::<Vec<_>>().into_iter();
            let mut m = mix(vec![tag(0, a), tag(1, b)], &spec).unwrap();
            let out: Vec<_> = m.by_ref().map(|(_, r)| r).collect();
            for chunk in out.chunks(block) {
                prop_assert_eq!(chunk.len(), block);
                prop_assert_eq!(chunk.iter().filter(|r| r.0 == 0).count(), block_half);
            }
            for src in 0..2 {
                let seq: Vec<_> = out.iter().filter(|r| r.0 == src).map(|r| r.1).collect();
                prop_assert_eq!(seq, (0..out.len() / 2).collect::<Vec<_>>());
            }
            let report = m.finish();
            prop_assert_eq!(report.emitted as usize, out.len());
            prop_assert_eq!(report.leftover_per_source["kg"] as usize + out.len() / 2, a);
            prop_assert_eq!(report.leftover_per_source["c4"] as usize + out.len() / 2, b);
        }
    }
}
