//! Identifiers, context vectors and interaction records shared by every module.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                Self(v)
            }
        }
    };
}

id_type!(
    /// A user (the person the slot is rendered for).
    UserId,
    "u"
);
id_type!(
    /// An ad, i.e. an arm.
    AdId,
    "a"
);
id_type!(
    /// A source (widget / domain) owning a set of ads.
    SourceId,
    "s"
);

/// Dense real-valued feature vector for a user or an ad.
///
/// All entries are finite. A zero-length vector is permitted and carries no
/// similarity information (its norm is zero).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteContext { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Concatenation `[self, other]`, used for the joint user/ad feature.
    pub fn concat(&self, other: &Self) -> Self {
        let mut v = Vec::with_capacity(self.dim() + other.dim());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ContextVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// One interaction: `user` was shown `ad` from `source` and either clicked or not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub source: SourceId,
    pub user: UserId,
    pub ad: AdId,
    pub clicked: bool,
    /// Simulation step or epoch seconds, depending on the driver.
    pub time: u64,
}

impl Observation {
    pub fn new(source: SourceId, user: UserId, ad: AdId, clicked: bool, time: u64) -> Self {
        Self {
            source,
            user,
            ad,
            clicked,
            time,
        }
    }

    /// Reward as a number in {0, 1}.
    #[inline]
    pub fn reward(&self) -> f64 {
        if self.clicked {
            1.0
        } else {
            0.0
        }
    }
}

/// User and ad contexts visible to the policies.
///
/// Each side carries a generation counter that is bumped on every mutation so
/// that policies can cache derived similarity structures.
#[derive(Debug, Clone, Default)]
pub struct ContextStore {
    users: HashMap<UserId, ContextVector>,
    ads: HashMap<AdId, ContextVector>,
    ad_sources: HashMap<AdId, SourceId>,
    user_dim: usize,
    ad_dim: usize,
    user_generation: u64,
    ad_generation: u64,
}

impl ContextStore {
    pub fn new(user_dim: usize, ad_dim: usize) -> Self {
        Self {
            user_dim,
            ad_dim,
            ..Self::default()
        }
    }

    pub fn user_dim(&self) -> usize {
        self.user_dim
    }

    pub fn ad_dim(&self) -> usize {
        self.ad_dim
    }

    pub fn insert_user(&mut self, id: UserId, ctx: ContextVector) -> Result<()> {
        if ctx.dim() != self.user_dim {
            return Err(Error::DimensionMismatch {
                expected: self.user_dim,
                actual: ctx.dim(),
            });
        }
        self.users.insert(id, ctx);
        self.user_generation += 1;
        Ok(())
    }

    pub fn insert_ad(&mut self, id: AdId, ctx: ContextVector) -> Result<()> {
        if ctx.dim() != self.ad_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ad_dim,
                actual: ctx.dim(),
            });
        }
        self.ads.insert(id, ctx);
        self.ad_generation += 1;
        Ok(())
    }

    pub fn set_ad_source(&mut self, ad: AdId, source: SourceId) {
        if self.ad_sources.insert(ad, source) != Some(source) {
            self.ad_generation += 1;
        }
    }

    pub fn ad_source(&self, ad: AdId) -> Option<SourceId> {
        self.ad_sources.get(&ad).copied()
    }

    pub fn user(&self, id: UserId) -> Option<&ContextVector> {
        self.users.get(&id)
    }

    pub fn ad(&self, id: AdId) -> Option<&ContextVector> {
        self.ads.get(&id)
    }

    /// User context, or the zero vector when the user has no recorded context.
    pub fn user_or_zero(&self, id: UserId) -> ContextVector {
        self.users
            .get(&id)
            .cloned()
            .unwrap_or_else(|| ContextVector::zeros(self.user_dim))
    }

    pub fn ad_or_zero(&self, id: AdId) -> ContextVector {
        self.ads
            .get(&id)
            .cloned()
            .unwrap_or_else(|| ContextVector::zeros(self.ad_dim))
    }

    pub fn users(&self) -> impl Iterator<Item = (UserId, &ContextVector)> {
        self.users.iter().map(|(k, v)| (*k, v))
    }

    pub fn ads(&self) -> impl Iterator<Item = (AdId, &ContextVector)> {
        self.ads.iter().map(|(k, v)| (*k, v))
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_ads(&self) -> usize {
        self.ads.len()
    }

    pub fn user_generation(&self) -> u64 {
        self.user_generation
    }

    pub fn ad_generation(&self) -> u64 {
        self.ad_generation
    }
}
