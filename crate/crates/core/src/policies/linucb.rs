//! LinUCB over concatenated `(user, ad)` features, one ridge model per arm,
//! and its transferable variant that seeds new-domain arms from trained ones.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::{argmax_random_tie, check_candidates, Policy, SelectRequest};
use crate::error::{Error, Result};
use crate::similarity::clamped_similarity;
use crate::types::{AdId, ContextStore, ContextVector, Observation, SourceId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinUcbConfig {
    /// Exploration width.
    pub alpha: f64,
}

impl Default for LinUcbConfig {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

impl LinUcbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha_ucb",
                reason: format!("{} must be a finite value >= 0", self.alpha),
            });
        }
        Ok(())
    }
}

/// Ridge sufficient statistics `A = I + Σ z zᵀ`, `b = Σ r z` for one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearArmState {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
    updates: u64,
}

impl LinearArmState {
    pub fn identity(dim: usize) -> Self {
        Self {
            a: DMatrix::identity(dim, dim),
            a_inv: DMatrix::identity(dim, dim),
            b: DVector::zeros(dim),
            updates: 0,
        }
    }

    /// State from explicit statistics; `a` must be invertible.
    pub fn from_parts(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let dim = b.len();
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: a.nrows(),
            });
        }
        let a_inv = a.clone().try_inverse().ok_or(Error::InvalidParameter {
            name: "design_matrix",
            reason: "not invertible".into(),
        })?;
        Ok(Self {
            a,
            a_inv,
            b,
            updates: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn design_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Ridge estimate `A⁻¹ b`.
    pub fn theta(&self) -> DVector<f64> {
        &self.a_inv * &self.b
    }

    /// Confidence width `sqrt(zᵀ A⁻¹ z)`.
    pub fn width(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.a_inv * z)).max(0.0).sqrt()
    }

    pub fn ucb(&self, z: &DVector<f64>, alpha: f64) -> f64 {
        z.dot(&self.theta()) + alpha * self.width(z)
    }

    pub fn update(&mut self, z: &DVector<f64>, reward: f64) {
        self.a += z * z.transpose();
        self.b += z * reward;
        // Sherman–Morrison on the stored inverse
        let az = &self.a_inv * z;
        let denom = 1.0 + z.dot(&az);
        self.a_inv -= (&az * az.transpose()) / denom;
        self.updates += 1;
    }
}

/// Seeds a target arm from trained source arms.
///
/// `A = I + Σ w_s (A_s − I)` and `b = Σ w_s b_s`, with `w_s` the clamped
/// cosine between the target ad context and each source ad context. With no
/// sources (or all weights zero) this is the plain identity initialization.
///
/// `A` is accumulated as `Σ w_s A_s + (1 − Σ w_s) I` so that a single source
/// with weight 1 is copied bit for bit.
pub fn tlinucb_init_prior(
    sources: &[(&LinearArmState, &ContextVector)],
    target_context: &ContextVector,
    dim: usize,
) -> Result<LinearArmState> {
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    let mut total_weight = 0.0;
    for (state, ctx) in sources {
        if state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: state.dim(),
            });
        }
        let w = clamped_similarity(target_context, ctx)?.value();
        if w == 0.0 {
            continue;
        }
        total_weight += w;
        a += &state.a * w;
        b += &state.b * w;
    }
    if total_weight == 0.0 {
        return Ok(LinearArmState::identity(dim));
    }
    let rest = 1.0 - total_weight;
    if rest != 0.0 {
        for i in 0..dim {
            a[(i, i)] += rest;
        }
    }
    LinearArmState::from_parts(a, b)
}

fn joint_feature(contexts: &ContextStore, user: crate::types::UserId, ad: AdId) -> DVector<f64> {
    let u = contexts.user_or_zero(user);
    let y = contexts.ad_or_zero(ad);
    let mut z = Vec::with_capacity(u.dim() + y.dim());
    z.extend_from_slice(u.values());
    z.extend_from_slice(y.values());
    DVector::from_vec(z)
}

#[derive(Debug, Clone)]
pub struct HybridLinUcb {
    config: LinUcbConfig,
    dim: Option<usize>,
    arms: HashMap<AdId, LinearArmState>,
    scores: Vec<f64>,
}

impl HybridLinUcb {
    pub fn new(config: LinUcbConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            dim: None,
            arms: HashMap::new(),
            scores: Vec::new(),
        })
    }

    pub fn arm(&self, ad: AdId) -> Option<&LinearArmState> {
        self.arms.get(&ad)
    }

    pub fn set_arm(&mut self, ad: AdId, state: LinearArmState) -> Result<()> {
        self.check_dim(state.dim())?;
        self.arms.insert(ad, state);
        Ok(())
    }

    fn check_dim(&mut self, d: usize) -> Result<usize> {
        match self.dim {
            Some(expected) if expected != d => Err(Error::DimensionMismatch {
                expected,
                actual: d,
            }),
            Some(expected) => Ok(expected),
            None => {
                self.dim = Some(d);
                Ok(d)
            }
        }
    }

    pub fn score(&self, ad: AdId, z: &DVector<f64>) -> f64 {
        match self.arms.get(&ad) {
            Some(s) => s.ucb(z, self.config.alpha),
            // identity state: θ = 0, width = |z|
            None => self.config.alpha * z.norm(),
        }
    }
}

impl Policy for HybridLinUcb {
    fn name(&self) -> &str {
        "hlinucb"
    }

    fn select(&mut self, req: &SelectRequest<'_>, rng: &mut dyn RngCore) -> Result<AdId> {
        check_candidates(req.candidates)?;
        self.check_dim(req.contexts.user_dim() + req.contexts.ad_dim())?;
        let mut scores = std::mem::take(&mut self.scores);
        scores.clear();
        for &ad in req.candidates {
            let z = joint_feature(req.contexts, req.user, ad);
            scores.push(self.score(ad, &z));
        }
        let pick = req.candidates[argmax_random_tie(&scores, rng)];
        self.scores = scores;
        Ok(pick)
    }

    fn update(&mut self, obs: &Observation, contexts: &ContextStore) -> Result<()> {
        let d = self.check_dim(contexts.user_dim() + contexts.ad_dim())?;
        let z = joint_feature(contexts, obs.user, obs.ad);
        self.arms
            .entry(obs.ad)
            .or_insert_with(|| LinearArmState::identity(d))
            .update(&z, obs.reward());
        Ok(())
    }
}

/// LinUCB whose arms, when first offered in a source, are seeded from the
/// trained arms of other sources via [`tlinucb_init_prior`].
#[derive(Debug, Clone)]
pub struct TransferLinUcb {
    inner: HybridLinUcb,
    arm_source: HashMap<AdId, SourceId>,
}

impl TransferLinUcb {
    pub fn new(config: LinUcbConfig) -> Result<Self> {
        Ok(Self {
            inner: HybridLinUcb::new(config)?,
            arm_source: HashMap::new(),
        })
    }

    pub fn arm(&self, ad: AdId) -> Option<&LinearArmState> {
        self.inner.arm(ad)
    }

    fn seed_new_arms(&mut self, req: &SelectRequest<'_>) -> Result<()> {
        let dim = req.contexts.user_dim() + req.contexts.ad_dim();
        let fresh: Vec<AdId> = req
            .candidates
            .iter()
            .copied()
            .filter(|ad| self.inner.arm(*ad).is_none())
            .collect();
        if fresh.is_empty() {
            return Ok(());
        }
        // trained arms from other sources, in id order
        let mut donors: Vec<AdId> = self
            .inner
            .arms
            .iter()
            .filter(|(ad, st)| {
                st.updates() > 0 && self.arm_source.get(ad).is_some_and(|s| *s != req.source)
            })
            .map(|(ad, _)| *ad)
            .collect();
        donors.sort_unstable();
        let ad_dim = req.contexts.ad_dim();
        let zero = ContextVector::zeros(ad_dim);
        for ad in fresh {
            let target = req.contexts.ad(ad).unwrap_or(&zero);
            let sources: Vec<(&LinearArmState, &ContextVector)> = donors
                .iter()
                .map(|d| (&self.inner.arms[d], req.contexts.ad(*d).unwrap_or(&zero)))
                .collect();
            let state = tlinucb_init_prior(&sources, target, dim)?;
            self.inner.set_arm(ad, state)?;
            self.arm_source.insert(ad, req.source);
        }
        Ok(())
    }
}

impl Policy for TransferLinUcb {
    fn name(&self) -> &str {
        "tlinucb"
    }

    fn select(&mut self, req: &SelectRequest<'_>, rng: &mut dyn RngCore) -> Result<AdId> {
        check_candidates(req.candidates)?;
        self.seed_new_arms(req)?;
        self.inner.select(req, rng)
    }

    fn update(&mut self, obs: &Observation, contexts: &ContextStore) -> Result<()> {
        self.arm_source.entry(obs.ad).or_insert(obs.source);
        self.inner.update(obs, contexts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::UserId;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cv(v: &[f64]) -> ContextVector {
        ContextVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_contexts_tie_uniformly() {
        let mut s = ContextStore::new(1, 2);
        s.insert_user(UserId(0), cv(&[1.0])).unwrap();
        for a in 0..4 {
            s.insert_ad(AdId(a), cv(&[0.5, 0.5])).unwrap();
        }
        let ads: Vec<AdId> = (0..4).map(AdId).collect();
        let mut p = HybridLinUcb::new(LinUcbConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 4];
        let req = SelectRequest {
            source: SourceId(0),
            user: UserId(0),
            candidates: &ads,
            contexts: &s,
        };
        for _ in 0..8000 {
            hits[p.select(&req, &mut rng).unwrap().0 as usize] += 1;
        }
        for h in hits {
            assert!((h as f64 / 8000.0 - 0.25).abs() < 0.03, "{hits:?}");
        }
    }

    #[test]
    fn initial_width_is_norm() {
        let st = LinearArmState::identity(3);
        let z = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        assert_eq!(st.width(&z), 3.0);
        assert_eq!(st.ucb(&z, 0.5), 1.5);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut p = HybridLinUcb::new(LinUcbConfig::default()).unwrap();
        let s1 = ContextStore::new(1, 1);
        let s2 = ContextStore::new(2, 1);
        let o = Observation::new(SourceId(0), UserId(0), AdId(0), true, 0);
        p.update(&o, &s1).unwrap();
        assert!(matches!(
            p.update(&o, &s2),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let req = SelectRequest {
            source: SourceId(0),
            user: UserId(0),
            candidates: &[AdId(0)],
            contexts: &s2,
        };
        assert!(p.select(&req, &mut rng).is_err());
    }

    #[test]
    fn matches_closed_form_ridge() {
        // noiseless linear rewards, exploration off: the chosen arm must be the
        // argmax of the ridge solution computed from scratch on the same data
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (du, da, n_ads, n_users) = (3, 2, 4, 20);
        let mut s = ContextStore::new(du, da);
        for u in 0..n_users {
            s.insert_user(
                UserId(u),
                cv(&(0..du)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>()),
            )
            .unwrap();
        }
        for a in 0..n_ads {
            s.insert_ad(
                AdId(a),
                cv(&(0..da)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>()),
            )
            .unwrap();
        }
        let w: Vec<Vec<f64>> = (0..n_ads)
            .map(|_| (0..du + da).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let truth = |u: UserId, a: AdId| -> f64 {
            joint_feature(&s, u, a)
                .iter()
                .zip(&w[a.0 as usize])
                .map(|(x, y)| x * y)
                .sum()
        };

        let mut p = HybridLinUcb::new(LinUcbConfig { alpha: 0.0 }).unwrap();
        let mut data: HashMap<AdId, Vec<(DVector<f64>, f64)>> = HashMap::new();
        for _ in 0..500 {
            let u = UserId(rng.random_range(0..n_users));
            let a = AdId(rng.random_range(0..n_ads));
            let r = truth(u, a);
            let o = Observation {
                clicked: false,
                ..Observation::new(SourceId(0), u, a, false, 0)
            };
            // feed a real-valued reward through the arm directly
            let z = joint_feature(&s, u, a);
            p.arms
                .entry(a)
                .or_insert_with(|| LinearArmState::identity(du + da))
                .update(&z, r);
            p.dim = Some(du + da);
            data.entry(o.ad).or_default().push((z, r));
        }

        let ads: Vec<AdId> = (0..n_ads).map(AdId).collect();
        for u in 0..n_users {
            let user = UserId(u);
            let oracle = ads
                .iter()
                .map(|&a| {
                    let rows = &data[&a];
                    let d = du + da;
                    let mut gram = DMatrix::<f64>::identity(d, d);
                    let mut rhs = DVector::<f64>::zeros(d);
                    for (z, r) in rows {
                        gram += z * z.transpose();
                        rhs += z * *r;
                    }
                    let theta = gram.lu().solve(&rhs).unwrap();
                    (a, joint_feature(&s, user, a).dot(&theta))
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap()
                .0;
            let req = SelectRequest {
                source: SourceId(0),
                user,
                candidates: &ads,
                contexts: &s,
            };
            assert_eq!(p.select(&req, &mut rng).unwrap(), oracle);
        }
    }

    fn trained_state(seed: u64, dim: usize, n: usize) -> LinearArmState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = LinearArmState::identity(dim);
        for _ in 0..n {
            let z = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
            st.update(&z, rng.random_range(0.0..1.0));
        }
        st
    }

    #[test]
    fn transfer_zero_similarity_is_identity() {
        let src = trained_state(1, 3, 20);
        let got = tlinucb_init_prior(&[(&src, &cv(&[1.0, 0.0]))], &cv(&[-1.0, 0.0]), 3).unwrap();
        assert_eq!(got, LinearArmState::identity(3));
        assert_eq!(
            tlinucb_init_prior(&[], &cv(&[1.0]), 3).unwrap(),
            LinearArmState::identity(3)
        );
    }

    #[test]
    fn transfer_similarity_one_copies_source() {
        let src = trained_state(2, 3, 20);
        let got = tlinucb_init_prior(&[(&src, &cv(&[2.0, 1.0]))], &cv(&[4.0, 2.0]), 3).unwrap();
        assert_eq!(got.design_matrix(), src.design_matrix());
        assert_eq!(got.response(), src.response());
    }

    #[test]
    fn transfer_half_similarity() {
        let src = trained_state(3, 3, 20);
        let target = cv(&[0.5, 3f64.sqrt() / 2.0]);
        let w = clamped_similarity(&target, &cv(&[1.0, 0.0]))
            .unwrap()
            .value();
        assert!((w - 0.5).abs() < 1e-15);
        let got = tlinucb_init_prior(&[(&src, &cv(&[1.0, 0.0]))], &target, 3).unwrap();
        let eye = DMatrix::<f64>::identity(3, 3);
        let expected = &eye + (src.design_matrix() - &eye) * 0.5;
        assert!((got.design_matrix() - expected).abs().max() < 1e-12);
        assert!((got.response() - src.response() * 0.5).abs().max() < 1e-12);
    }

    #[test]
    fn transfer_policy_seeds_new_domain() {
        let mut s = ContextStore::new(1, 2);
        s.insert_user(UserId(0), cv(&[1.0])).unwrap();
        s.insert_ad(AdId(0), cv(&[1.0, 0.0])).unwrap();
        s.insert_ad(AdId(1), cv(&[2.0, 0.0])).unwrap();
        let mut p = TransferLinUcb::new(LinUcbConfig::default()).unwrap();
        for r in [true, false, true] {
            p.update(&Observation::new(SourceId(0), UserId(0), AdId(0), r, 0), &s)
                .unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let req = SelectRequest {
            source: SourceId(1),
            user: UserId(0),
            candidates: &[AdId(1)],
            contexts: &s,
        };
        p.select(&req, &mut rng).unwrap();
        assert_eq!(
            p.arm(AdId(1)).unwrap().design_matrix(),
            p.arm(AdId(0)).unwrap().design_matrix()
        );
        assert_eq!(
            p.arm(AdId(1)).unwrap().response(),
            p.arm(AdId(0)).unwrap().response()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn design_matrix_stays_positive_definite(
            rows in prop::collection::vec((prop::collection::vec(-10.0f64..10.0, 4), 0.0f64..1.0), 0..60)
        ) {
            let mut st = LinearArmState::identity(4);
            for (z, r) in rows {
                st.update(&DVector::from_vec(z), r);
            }
            let a = st.design_matrix();
            prop_assert!((a - a.transpose()).abs().max() < 1e-9);
            let eig = SymmetricEigen::new(a.clone());
            prop_assert!(eig.eigenvalues.min() > 0.0);
            // the stored inverse tracks the matrix
            let prod = a * &st.a_inv;
            prop_assert!((prod - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-6);
        }
    }
}
