//! Marginal beliefs over types per message and everything the engine needs
//! from them: the four admissibility restrictions (log-concavity, cross-ratio
//! preservation, wariness, monotone supports), Bayesian conditioning,
//! virtual costs and tail-sum identities, and a finite weight-grid generator
//! of admissible belief families.
//!
//! Beliefs are indexed by global type positions (0-based) and attached to a
//! contiguous *message* range. A belief family assigns one marginal to every
//! message of a lattice; families are generated from integer weight vectors
//! shared across messages whose supports overlap, which is exactly what
//! cross-ratio preservation allows.

use crate::error::{Error, Result};
use crate::rational::{Rat, rat_u64};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// A contiguous, inclusive interval of type indices (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsgRange {
    lo: usize,
    hi: usize,
}

impl MsgRange {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidRange(format!("empty range {lo}..{hi}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false // by construction
    }

    pub fn contains(&self, index: usize) -> bool {
        self.lo <= index && index <= self.hi
    }

    pub fn contains_range(&self, other: MsgRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }

    pub fn intersect(&self, other: MsgRange) -> Option<MsgRange> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(MsgRange { lo, hi })
    }

    pub fn overlaps(&self, other: MsgRange) -> bool {
        self.intersect(other).is_some()
    }
}

impl fmt::Display for MsgRange {
    /// 1-based inclusive rendering, e.g. `[1..3]`, matching report tables.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.lo + 1, self.hi + 1)
    }
}

/// A probability distribution over the types of one message.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MarginalBelief {
    message: MsgRange,
    probs: Vec<Rat>,
}

impl MarginalBelief {
    /// `probs[i]` is the probability of type `message.lo() + i`. Probabilities
    /// must be nonnegative and sum to one exactly.
    pub fn new(message: MsgRange, probs: Vec<Rat>) -> Result<Self> {
        if probs.len() != message.len() {
            return Err(Error::InvalidBelief(format!(
                "{} probabilities for a {}-type message",
                probs.len(),
                message.len()
            )));
        }
        if probs.iter().any(|p| p < &Rat::zero()) {
            return Err(Error::InvalidBelief("negative probability".into()));
        }
        let total: Rat = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidBelief(format!(
                "total mass {total} instead of 1"
            )));
        }
        Ok(Self { message, probs })
    }

    /// Uniform distribution over the message.
    pub fn uniform(message: MsgRange) -> Self {
        let p = Rat::new(1.into(), (message.len() as u64).into());
        Self {
            message,
            probs: vec![p; message.len()],
        }
    }

    /// All mass on one type of the message.
    pub fn point_mass(message: MsgRange, at: usize) -> Result<Self> {
        if !message.contains(at) {
            return Err(Error::InvalidBelief(format!(
                "point mass at {at} outside message {message}"
            )));
        }
        let mut probs = vec![Rat::zero(); message.len()];
        probs[at - message.lo()] = Rat::one();
        Ok(Self { message, probs })
    }

    /// Probabilities proportional to `weights` on `support`, zero elsewhere
    /// in the message. Weights must be positive.
    pub fn from_weights(message: MsgRange, support: MsgRange, weights: &[u64]) -> Result<Self> {
        if !message.contains_range(support) {
            return Err(Error::InvalidBelief(format!(
                "support {support} outside message {message}"
            )));
        }
        if weights.len() != support.len() || weights.iter().any(|&w| w == 0) {
            return Err(Error::InvalidBelief(
                "weights must be positive, one per supported type".into(),
            ));
        }
        let total: u64 = weights.iter().sum();
        let mut probs = vec![Rat::zero(); message.len()];
        for (offset, &w) in weights.iter().enumerate() {
            let index = support.lo() + offset - message.lo();
            probs[index] = Rat::new(w.into(), total.into());
        }
        Ok(Self { message, probs })
    }

    pub fn message(&self) -> MsgRange {
        self.message
    }

    /// Probability of the type at a global index; zero outside the message.
    pub fn prob(&self, type_index: usize) -> Rat {
        if self.message.contains(type_index) {
            self.probs[type_index - self.message.lo()].clone()
        } else {
            Rat::zero()
        }
    }

    /// Global indices with positive probability, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.message
            .iter()
            .filter(|&i| self.probs[i - self.message.lo()].is_positive())
            .collect()
    }

    /// Lowest and highest supported indices.
    pub fn support_bounds(&self) -> (usize, usize) {
        let support = self.support();
        (
            *support.first().expect("nonempty"),
            *support.last().expect("nonempty"),
        )
    }

    /// The support as a contiguous range, or `None` when it has gaps.
    pub fn support_range(&self) -> Option<MsgRange> {
        let support = self.support();
        let (lo, hi) = (support[0], *support.last().unwrap());
        (support.len() == hi - lo + 1).then(|| MsgRange { lo, hi })
    }

    /// Unimodality in the discrete sense; see [`is_log_concave_profile`].
    pub fn is_log_concave(&self) -> bool {
        is_log_concave_profile(&self.probs)
    }

    /// The effective marginal cost of serving this type: its ceiling plus
    /// the mass of strictly lower types divided by its own probability
    /// (the inverse hazard rate). For the lowest supported type this is the
    /// ceiling itself, independently of the belief.
    pub fn virtual_cost(&self, type_index: usize) -> Result<Rat> {
        let own = self.prob(type_index);
        if !own.is_positive() {
            return Err(Error::UnsupportedType(type_index));
        }
        let below: Rat = self
            .message
            .iter()
            .take_while(|&i| i < type_index)
            .map(|i| self.prob(i))
            .sum();
        Ok(rat_u64(type_index as u64 + 1) + below / own)
    }

    /// Bayesian restriction to a sub-message: renormalize the mass on `sub`.
    /// The result preserves cross-ratios with the original (so the pair
    /// passes [`check_reverse_bayes`]) and stays log-concave when the
    /// original is.
    pub fn condition(&self, sub: MsgRange) -> Result<MarginalBelief> {
        if !self.message.contains_range(sub) {
            return Err(Error::InvalidRange(format!(
                "cannot condition {} on {}",
                self.message, sub
            )));
        }
        let mass: Rat = sub.iter().map(|i| self.prob(i)).sum();
        if !mass.is_positive() {
            return Err(Error::ZeroMassConditioning);
        }
        let probs = sub.iter().map(|i| self.prob(i) / &mass).collect();
        Ok(MarginalBelief {
            message: sub,
            probs,
        })
    }
}

/// `p_i^2 >= p_{i-1} * p_{i+1}` at every interior position, zeros included.
///
/// A single interior zero between positive entries fails (`0 >= p*p'` is
/// false), so log-concave distributions have contiguous support up to runs
/// of zeros at the ends. Note the check is purely pairwise: a run of two or
/// more interior zeros passes it, so contiguity is asserted separately where
/// it matters (family generation and explicit-belief validation).
pub fn is_log_concave_profile(probs: &[Rat]) -> bool {
    probs.windows(3).all(|w| &w[1] * &w[1] >= &w[0] * &w[2])
}

/// Integer-weight variant used by the family generator.
fn is_log_concave_weights(weights: &[u64]) -> bool {
    weights
        .windows(3)
        .all(|w| (w[1] as u128) * (w[1] as u128) >= (w[0] as u128) * (w[2] as u128))
}

/// Cross-ratio preservation: for every pair of types supported by both
/// beliefs, the relative likelihoods agree exactly. Vacuously true when the
/// supports share fewer than two types.
pub fn check_reverse_bayes(a: &MarginalBelief, b: &MarginalBelief) -> bool {
    let common: Vec<usize> = a
        .support()
        .into_iter()
        .filter(|&i| b.prob(i).is_positive())
        .collect();
    for (k, &i) in common.iter().enumerate() {
        for &j in &common[k + 1..] {
            if a.prob(i) * b.prob(j) != a.prob(j) * b.prob(i) {
                return false;
            }
        }
    }
    true
}

/// Newly disclosed extremes must be taken seriously: if the message extends
/// below (above) `theta_p`, its lowest (highest) type needs positive
/// probability. A message equal to `theta_p` is unconstrained.
pub fn check_wariness(p: &MarginalBelief, theta_p: MsgRange) -> bool {
    let msg = p.message();
    let (lo, hi) = p.support_bounds();
    (msg.lo() >= theta_p.lo() || lo == msg.lo()) && (msg.hi() <= theta_p.hi() || hi == msg.hi())
}

/// Supports shift weakly in the message's direction: whenever one message
/// sits below another (componentwise on `(min, max)`), the lowest supported
/// type overall must belong to the lower message's support and the highest
/// to the higher message's.
pub fn check_monotone_supports(beliefs: &[&MarginalBelief]) -> bool {
    for (idx, a) in beliefs.iter().enumerate() {
        for b in &beliefs[idx + 1..] {
            let (low, high) = if a.message().lo() <= b.message().lo()
                && a.message().hi() <= b.message().hi()
            {
                (a, b)
            } else if b.message().lo() <= a.message().lo() && b.message().hi() <= a.message().hi() {
                (b, a)
            } else {
                continue; // incomparable messages are unconstrained
            };
            let (low_lo, low_hi) = low.support_bounds();
            let (high_lo, high_hi) = high.support_bounds();
            if low_lo.min(high_lo) != low_lo || low_hi.max(high_hi) != high_hi {
                return false;
            }
        }
    }
    true
}

/// Aligns a sub-message's descending type order with the full message's:
/// entry `i` is the descending position (0-based) in `full` of the `i`-th
/// highest type of `sub`. Strictly increasing, and the identity exactly when
/// the two share their maximum.
pub fn descending_rank_map(sub: MsgRange, full: MsgRange) -> Result<Vec<usize>> {
    if !full.contains_range(sub) {
        return Err(Error::InvalidRange(format!("{sub} not inside {full}")));
    }
    let shift = full.hi() - sub.hi();
    Ok((0..sub.len()).map(|i| i + shift).collect())
}

/// For a cross-ratio-consistent pair, partial sums of the hazard fractions
/// agree over the common support: listing common supported types in
/// descending order, attachment of `sum_{h=1..k} p(tau_{i+h}) / p(tau_i)`
/// gives the same value under both beliefs, for every anchor `i` and depth
/// `k`. Verified by direct summation (the identity is a consequence of
/// cross-ratio equality; this check recomputes both sides independently).
pub fn hazard_sum_identity_check(p_big: &MarginalBelief, p_small: &MarginalBelief) -> Result<bool> {
    if !check_reverse_bayes(p_big, p_small) {
        return Err(Error::NotCrossRatioConsistent);
    }
    let mut common: Vec<usize> = p_big
        .support()
        .into_iter()
        .filter(|&i| p_small.prob(i).is_positive())
        .collect();
    common.reverse(); // descending type order
    for (i, &anchor) in common.iter().enumerate() {
        let mut sum_big = Rat::zero();
        let mut sum_small = Rat::zero();
        for &tail in &common[i + 1..] {
            sum_big += p_big.prob(tail) / p_big.prob(anchor);
            sum_small += p_small.prob(tail) / p_small.prob(anchor);
            if sum_big != sum_small {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// One marginal per message of a lattice, generated or validated together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefFamily {
    /// Keyed by message id (the lattice's ordering).
    pub marginals: BTreeMap<usize, MarginalBelief>,
    /// Human-readable generator note for traces (weight vectors or
    /// "explicit").
    pub note: String,
}

impl BeliefFamily {
    /// First violated restriction, if any: per-member log-concavity and
    /// support contiguity, wariness, pairwise cross-ratio preservation, and
    /// monotone supports.
    pub fn violation(&self, theta_p: MsgRange) -> Option<String> {
        for (id, p) in &self.marginals {
            if p.support_range().is_none() {
                return Some(format!("marginal {id}: support has a gap"));
            }
            if !p.is_log_concave() {
                return Some(format!("marginal {id}: not log-concave"));
            }
            if !check_wariness(p, theta_p) {
                return Some(format!("marginal {id}: wariness violated"));
            }
        }
        let members: Vec<&MarginalBelief> = self.marginals.values().collect();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if !check_reverse_bayes(a, b) {
                    return Some("cross-ratio equality violated".into());
                }
            }
        }
        if !check_monotone_supports(&members) {
            return Some("monotone supports violated".into());
        }
        None
    }

    pub fn passes_restrictions(&self, theta_p: MsgRange) -> bool {
        self.violation(theta_p).is_none()
    }

    /// Canonical identity for dedup: message ids with their probability
    /// vectors.
    pub fn canonical_key(&self) -> Vec<(usize, Vec<Rat>)> {
        self.marginals
            .iter()
            .map(|(&id, p)| (id, p.message().iter().map(|i| p.prob(i)).collect()))
            .collect()
    }
}

/// A message with its assigned belief support, input to the family
/// generator.
#[derive(Debug, Clone, Copy)]
pub struct FamilySlot {
    pub message_id: usize,
    pub message: MsgRange,
    pub support: MsgRange,
}

/// Structural admissibility of a support assignment: supports inside their
/// messages, wariness at newly disclosed extremes, monotone supports across
/// comparable messages.
pub fn validate_support_assignment(slots: &[FamilySlot], theta_p: MsgRange) -> Result<()> {
    for slot in slots {
        if !slot.message.contains_range(slot.support) {
            return Err(Error::InfeasibleSupport(format!(
                "support {} outside message {}",
                slot.support, slot.message
            )));
        }
        if slot.message.lo() < theta_p.lo() && slot.support.lo() != slot.message.lo() {
            return Err(Error::InfeasibleSupport(format!(
                "message {} discloses lower types but support {} excludes the lowest",
                slot.message, slot.support
            )));
        }
        if slot.message.hi() > theta_p.hi() && slot.support.hi() != slot.message.hi() {
            return Err(Error::InfeasibleSupport(format!(
                "message {} discloses higher types but support {} excludes the highest",
                slot.message, slot.support
            )));
        }
    }
    for (i, a) in slots.iter().enumerate() {
        for b in &slots[i + 1..] {
            let (low, high) =
                if a.message.lo() <= b.message.lo() && a.message.hi() <= b.message.hi() {
                    (a, b)
                } else if b.message.lo() <= a.message.lo() && b.message.hi() <= a.message.hi() {
                    (b, a)
                } else {
                    continue;
                };
            if low.support.lo().min(high.support.lo()) != low.support.lo()
                || low.support.hi().max(high.support.hi()) != high.support.hi()
            {
                return Err(Error::InfeasibleSupport(format!(
                    "supports {} (message {}) and {} (message {}) not monotone",
                    low.support, low.message, high.support, high.message
                )));
            }
        }
    }
    Ok(())
}

/// Generate every belief family consistent with a support assignment on a
/// weight grid: one integer weight `w(type) in {1..=weight_cap}` per type of
/// each connected component of overlapping supports, marginals proportional
/// to the weights on each support. Sharing weights within a component is
/// exactly what cross-ratio preservation requires (overlapping supports pin
/// relative likelihoods; disjoint components are genuinely free), so the
/// output is the full weight-grid slice of admissible families. Profiles
/// whose restriction to some support is not log-concave are dropped;
/// duplicate families (different weights, same distributions) are emitted
/// once.
pub fn enumerate_belief_families(
    slots: &[FamilySlot],
    theta_p: MsgRange,
    weight_cap: u32,
) -> Result<Vec<BeliefFamily>> {
    validate_support_assignment(slots, theta_p)?;
    if weight_cap == 0 {
        return Err(Error::InvalidScenario("weight cap must be positive".into()));
    }

    // Connected components of support overlap, in first-appearance order.
    let mut component_of: Vec<Option<usize>> = vec![None; slots.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for i in 0..slots.len() {
        if component_of[i].is_some() {
            continue;
        }
        let id = components.len();
        let mut stack = vec![i];
        let mut members = Vec::new();
        component_of[i] = Some(id);
        while let Some(s) = stack.pop() {
            members.push(s);
            for t in 0..slots.len() {
                if component_of[t].is_none() && slots[s].support.overlaps(slots[t].support) {
                    component_of[t] = Some(id);
                    stack.push(t);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }

    // Per component: all weight profiles over its type span, kept when every
    // member marginal is log-concave, deduplicated by the distributions they
    // induce.
    struct ComponentChoice {
        marginals: Vec<(usize, MarginalBelief)>, // slot index, marginal
        note: String,
    }
    let mut per_component: Vec<Vec<ComponentChoice>> = Vec::new();
    for members in &components {
        let span_lo = members
            .iter()
            .map(|&s| slots[s].support.lo())
            .min()
            .unwrap();
        let span_hi = members
            .iter()
            .map(|&s| slots[s].support.hi())
            .max()
            .unwrap();
        let span_len = span_hi - span_lo + 1;
        let mut choices = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut weights = vec![1u64; span_len];
        loop {
            let mut ok = true;
            let mut marginals = Vec::with_capacity(members.len());
            for &s in members {
                let support = slots[s].support;
                let local = &weights[support.lo() - span_lo..=support.hi() - span_lo];
                if !is_log_concave_weights(local) {
                    ok = false;
                    break;
                }
                let marginal = MarginalBelief::from_weights(slots[s].message, support, local)?;
                marginals.push((s, marginal));
            }
            if ok {
                let key: Vec<Vec<Rat>> = marginals
                    .iter()
                    .map(|(_, m)| m.message().iter().map(|i| m.prob(i)).collect())
                    .collect();
                if seen.insert(key) {
                    let note = format!(
                        "w[{}..{}]=({})",
                        span_lo + 1,
                        span_hi + 1,
                        weights
                            .iter()
                            .map(|w| w.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    );
                    choices.push(ComponentChoice { marginals, note });
                }
            }
            // next profile in lexicographic order
            let mut pos = span_len;
            let mut wrapped = true;
            while pos > 0 {
                pos -= 1;
                if weights[pos] < weight_cap as u64 {
                    weights[pos] += 1;
                    weights[pos + 1..].fill(1);
                    wrapped = false;
                    break;
                }
                weights[pos] = 1;
            }
            if wrapped {
                break;
            }
        }
        per_component.push(choices);
    }

    // Cartesian product across components.
    let mut families = Vec::new();
    let mut picks = vec![0usize; per_component.len()];
    'outer: loop {
        let mut marginals = BTreeMap::new();
        let mut notes = Vec::new();
        for (component, &pick) in per_component.iter().zip(&picks) {
            let choice = &component[pick];
            for (slot_index, marginal) in &choice.marginals {
                marginals.insert(slots[*slot_index].message_id, marginal.clone());
            }
            notes.push(choice.note.clone());
        }
        let family = BeliefFamily {
            marginals,
            note: notes.join(" "),
        };
        debug_assert!(
            family.passes_restrictions(theta_p),
            "generated family violates a restriction: {:?}",
            family.violation(theta_p)
        );
        families.push(family);

        for i in (0..picks.len()).rev() {
            picks[i] += 1;
            if picks[i] < per_component[i].len() {
                continue 'outer;
            }
            picks[i] = 0;
        }
        break;
    }
    Ok(families)
}
