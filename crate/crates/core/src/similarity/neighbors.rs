use std::hash::Hash;

use super::clamped_unchecked;
use super::lsh::{sort_desc, LshIndex};
use crate::error::Result;
use crate::types::ContextVector;

/// How similar items are retrieved for the transfer sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborStrategy {
    /// Score every item exactly.
    Exhaustive,
    /// Random-hyperplane LSH candidates re-ranked exactly.
    Lsh {
        num_bits: usize,
        num_tables: usize,
        seed: u64,
    },
}

impl Default for NeighborStrategy {
    fn default() -> Self {
        Self::Lsh {
            num_bits: 16,
            num_tables: 8,
            seed: 0,
        }
    }
}

/// Top-`k` neighbor lookup over a fixed item set.
///
/// When the population (excluding the query) fits within `k`, no truncation
/// can happen and every item is scored exactly regardless of the strategy.
/// Only strictly positive clamped similarities are returned.
#[derive(Debug, Clone)]
pub struct NeighborIndex<Id> {
    items: Vec<(Id, ContextVector)>,
    lsh: Option<LshIndex<Id>>,
    k: usize,
}

impl<Id> NeighborIndex<Id>
where
    Id: Copy + Eq + Hash + Ord,
{
    pub fn build(
        mut items: Vec<(Id, ContextVector)>,
        dim: usize,
        k: usize,
        strategy: NeighborStrategy,
    ) -> Result<Self> {
        items.sort_by_key(|a| a.0);
        let lsh = match strategy {
            NeighborStrategy::Lsh {
                num_bits,
                num_tables,
                seed,
            } if items.len() > k + 1 => Some(LshIndex::build(
                items.iter().cloned(),
                dim,
                num_bits,
                num_tables,
                seed,
            )?),
            _ => None,
        };
        Ok(Self { items, lsh, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn uses_lsh(&self) -> bool {
        self.lsh.is_some()
    }

    /// Neighbors of `x` with positive similarity, most similar first.
    pub fn neighbors(&self, x: &ContextVector, exclude: Option<Id>) -> Result<Vec<(Id, f64)>> {
        let mut out = match &self.lsh {
            Some(lsh) => lsh.query_neighbors(x, self.k, exclude)?,
            None => {
                let mut scored: Vec<(Id, f64)> = self
                    .items
                    .iter()
                    .filter(|(id, _)| Some(*id) != exclude)
                    .map(|(id, v)| (*id, clamped_unchecked(x.values(), v.values())))
                    .collect();
                sort_desc(&mut scored);
                scored.truncate(self.k);
                scored
            }
        };
        out.retain(|(_, s)| *s > 0.0);
        Ok(out)
    }
}
