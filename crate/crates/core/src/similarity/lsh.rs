//! Random-hyperplane LSH for cosine similarity.
//!
//! Each table hashes a vector to `num_bits` sign bits, bit `b` being
//! `normal[t][b] · x > 0`. Queries take the union of the query's bucket in
//! every table and re-rank the candidates by exact clamped cosine.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::clamped_unchecked;
use crate::error::{Error, Result};
use crate::types::ContextVector;

#[derive(Debug, Clone)]
pub struct LshIndex<Id> {
    // tables × bits × dim, flattened per table
    hyperplanes: Vec<Vec<Vec<f64>>>,
    buckets: Vec<HashMap<u64, Vec<Id>>>,
    items: HashMap<Id, ContextVector>,
    dim: usize,
    num_bits: usize,
    seed: u64,
}

impl<Id> LshIndex<Id>
where
    Id: Copy + Eq + Hash + Ord,
{
    /// Builds an index over `items`. Deterministic given the seed.
    ///
    /// `num_bits` must be in `1..=64` and `num_tables >= 1`. An empty item set
    /// gives a valid empty index of dimension `dim`.
    pub fn build<I>(
        items: I,
        dim: usize,
        num_bits: usize,
        num_tables: usize,
        seed: u64,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (Id, ContextVector)>,
    {
        if !(1..=64).contains(&num_bits) {
            return Err(Error::InvalidParameter {
                name: "num_bits",
                reason: format!("{num_bits} not in 1..=64"),
            });
        }
        if num_tables == 0 {
            return Err(Error::InvalidParameter {
                name: "num_tables",
                reason: "must be at least 1".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hyperplanes: Vec<Vec<Vec<f64>>> = (0..num_tables)
            .map(|_| {
                (0..num_bits)
                    .map(|_| random_unit_normal(&mut rng, dim))
                    .collect()
            })
            .collect();

        let items: HashMap<Id, ContextVector> = items.into_iter().collect();
        if let Some(bad) = items.values().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }

        let mut index = Self {
            hyperplanes,
            buckets: vec![HashMap::new(); num_tables],
            items: HashMap::new(),
            dim,
            num_bits,
            seed,
        };
        // sorted insertion keeps bucket contents independent of hash order
        let sorted: BTreeSet<Id> = items.keys().copied().collect();
        for id in sorted {
            let v = &items[&id];
            for t in 0..num_tables {
                let sig = index.signature(t, v);
                index.buckets[t].entry(sig).or_default().push(id);
            }
        }
        index.items = items;
        Ok(index)
    }

    /// The `num_bits`-bit signature of `x` in table `table`.
    pub fn signature(&self, table: usize, x: &ContextVector) -> u64 {
        let mut sig = 0u64;
        for (b, normal) in self.hyperplanes[table].iter().enumerate() {
            let dot: f64 = normal.iter().zip(x.values()).map(|(n, v)| n * v).sum();
            if dot > 0.0 {
                sig |= 1 << b;
            }
        }
        sig
    }

    /// Candidate ids sharing a bucket with `x` in at least one table.
    pub fn candidates(&self, x: &ContextVector) -> BTreeSet<Id> {
        let mut out = BTreeSet::new();
        for t in 0..self.num_tables() {
            if let Some(ids) = self.buckets[t].get(&self.signature(t, x)) {
                out.extend(ids.iter().copied());
            }
        }
        out
    }

    /// Up to `k` candidates ranked by exact clamped cosine, descending
    /// (ties by ascending id). `exclude` drops the query's own id.
    pub fn query_neighbors(
        &self,
        x: &ContextVector,
        k: usize,
        exclude: Option<Id>,
    ) -> Result<Vec<(Id, f64)>> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        let mut scored: Vec<(Id, f64)> = self
            .candidates(x)
            .into_iter()
            .filter(|id| Some(*id) != exclude)
            .map(|id| (id, clamped_unchecked(x.values(), self.items[&id].values())))
            .collect();
        sort_desc(&mut scored);
        scored.truncate(k);
        Ok(scored)
    }

    pub fn bucket_of(&self, table: usize, id: Id) -> Option<u64> {
        self.items.get(&id).map(|v| self.signature(table, v))
    }

    pub fn bucket(&self, table: usize, signature: u64) -> &[Id] {
        self.buckets[table]
            .get(&signature)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn num_tables(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn num_bits(&self) -> usize {
        self.num_bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: Id) -> Option<&ContextVector> {
        self.items.get(&id)
    }

    /// All `(table, signature, ids)` triples, sorted; used to compare indices.
    pub fn bucket_listing(&self) -> Vec<(usize, u64, Vec<Id>)> {
        let mut out = Vec::new();
        for (t, table) in self.buckets.iter().enumerate() {
            let mut keys: Vec<_> = table.keys().copied().collect();
            keys.sort_unstable();
            for k in keys {
                out.push((t, k, table[&k].clone()));
            }
        }
        out
    }
}

pub(crate) fn sort_desc<Id: Ord + Copy>(scored: &mut [(Id, f64)]) {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

fn random_unit_normal(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 || dim == 0 {
            return v
                .into_iter()
                .map(|x| if n > 0.0 { x / n } else { x })
                .collect();
        }
    }
}
