//! Seeded randomized suites over the whole library: generators for
//! log-concave beliefs, Bayesian restrictions of them, complete screening
//! scenarios, and small exhaustively-checkable instances, plus the batch
//! verdicts the `suite` command and the acceptance tests consume.
//!
//! Every generator is deterministic given its seed (ChaCha8 keyed by
//! `seed_from_u64`), so a failing case can be replayed by number. Checks
//! never panic on a bad case; they collect human-readable violations so a
//! batch reports everything wrong at once.

use std::collections::BTreeSet;

use num::{One, ToPrimitive};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beliefs::{MarginalBelief, MsgRange, check_reverse_bayes, hazard_sum_identity_check};
use crate::error::{Error, Result};
use crate::game::{RunTrace, Scenario, run_rationalizability};
use crate::menu::{TieRule, expected_principal_payoff, optimal_menu, optimal_quantities};
use crate::model::{QuantityGrid, TypeGrid, ValueFunction};
use crate::oracle::brute_force_best_menu;
use crate::rational::{Rat, format_fraction, rat, rat_int, rat_u64};

/// Outcome of one randomized batch. `violations` carries one line per failed
/// check with enough context to replay it; an empty list means the batch
/// passed.
#[derive(Debug, Clone)]
pub struct BatchReport {
    pub label: String,
    pub cases: usize,
    pub violations: Vec<String>,
}

impl BatchReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// `PASS`/`FAIL` plus the first violation, for one-line summaries.
    pub fn summary(&self) -> String {
        if self.passed() {
            format!("PASS {} ({} cases)", self.label, self.cases)
        } else {
            format!(
                "FAIL {} ({} cases, {} violations; first: {})",
                self.label,
                self.cases,
                self.violations.len(),
                self.violations[0]
            )
        }
    }
}

/// A full-support belief on `message` whose successive probability ratios
/// `p(i+1)/p(i)` form a nonincreasing chain of small fractions. Ratio
/// monotonicity is exactly the discrete log-concavity condition, so every
/// draw is log-concave by construction rather than by rejection.
pub fn random_log_concave_belief<R: Rng>(rng: &mut R, message: MsgRange) -> MarginalBelief {
    let ratios = (0..message.len().saturating_sub(1))
        .map(|_| rat(rng.random_range(1..=4i64), rng.random_range(1..=4i64)))
        .collect();
    belief_from_ratios(message, ratios)
}

/// As [`random_log_concave_belief`] but with every ratio at most one half:
/// mass piles up at the low end of the message, so discarding any lower
/// types leaves a tail heavier than each single retained type. Used to
/// manufacture restriction pairs that exercise strict quantity shifts.
fn bottom_heavy_belief<R: Rng>(rng: &mut R, message: MsgRange) -> MarginalBelief {
    let ratios = (0..message.len().saturating_sub(1))
        .map(|_| rat(1, rng.random_range(2..=3i64)))
        .collect();
    belief_from_ratios(message, ratios)
}

fn belief_from_ratios(message: MsgRange, mut ratios: Vec<Rat>) -> MarginalBelief {
    ratios.sort_by(|x, y| y.cmp(x));
    let mut weights = Vec::with_capacity(message.len());
    let mut w = Rat::one();
    weights.push(w.clone());
    for r in &ratios {
        w *= r;
        weights.push(w.clone());
    }
    let total: Rat = weights.iter().sum();
    let probs = weights.into_iter().map(|x| x / &total).collect();
    MarginalBelief::new(message, probs).expect("normalized by construction")
}

/// Bayesian restriction must preserve cross-ratios with the original belief,
/// keep log-concavity, and leave every partial sum of hazard fractions over
/// the common support unchanged. Checked on `draws` random belief/restriction
/// pairs.
pub fn conditioning_consistency_suite(seed: u64, draws: usize) -> BatchReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for case in 0..draws {
        let m = rng.random_range(3..=8usize);
        let lo = rng.random_range(0..m - 1);
        let hi = rng.random_range(lo + 1..m);
        let message = MsgRange::new(lo, hi).expect("lo <= hi");
        let p_big = random_log_concave_belief(&mut rng, message);
        let sub_lo = rng.random_range(lo..=hi);
        let sub_hi = rng.random_range(sub_lo..=hi);
        let sub = MsgRange::new(sub_lo, sub_hi).expect("lo <= hi");
        let ctx = format!("case {case}: restrict {message} to {sub}");
        let small = match p_big.condition(sub) {
            Ok(p) => p,
            Err(e) => {
                violations.push(format!("{ctx}: {e}"));
                continue;
            }
        };
        if !check_reverse_bayes(&p_big, &small) {
            violations.push(format!("{ctx}: cross-ratios not preserved"));
        }
        if !small.is_log_concave() {
            violations.push(format!("{ctx}: log-concavity lost"));
        }
        match hazard_sum_identity_check(&p_big, &small) {
            Ok(true) => {}
            Ok(false) => violations.push(format!("{ctx}: hazard partial sums disagree")),
            Err(e) => violations.push(format!("{ctx}: {e}")),
        }
    }
    BatchReport {
        label: "conditioning-consistency".into(),
        cases: draws,
        violations,
    }
}

/// Verdict of [`virtual_cost_shift_suite`], separating the two pair shapes
/// and counting how often the strict-shift trigger actually fired.
#[derive(Debug, Clone)]
pub struct ShiftReport {
    pub pairs: usize,
    /// Pairs whose restriction keeps the lowest supported type.
    pub same_min_cases: usize,
    /// Pairs whose restriction discards a lower tail.
    pub new_tail_cases: usize,
    /// Supported types where the discarded tail outweighed the type's own
    /// probability, forcing a strict quantity drop under the wider belief.
    pub strict_shifts: usize,
    pub violations: Vec<String>,
}

impl ShiftReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.strict_shifts > 0
    }

    pub fn into_batch(self) -> BatchReport {
        let mut violations = self.violations;
        if self.strict_shifts == 0 {
            violations.push("no pair exercised the strict quantity shift".into());
        }
        BatchReport {
            label: "virtual-cost-shift".into(),
            cases: self.pairs,
            violations,
        }
    }
}

/// How virtual costs move under Bayesian restriction, checked on `pairs`
/// random belief/restriction pairs against a value function priced so every
/// virtual cost lands strictly inside the quantity grid.
///
/// Restriction to a sub-message with the same lowest supported type leaves
/// every common type's virtual cost — hence its optimal quantity set —
/// unchanged. Restriction that discards a lower tail lowers every common
/// type's virtual cost by exactly `tail mass / own probability`, so optimal
/// quantities shift weakly up; when the tail outweighs the type's own
/// probability the gap exceeds one and (marginals stepping down by at most
/// one) the shift is strict.
pub fn virtual_cost_shift_suite(seed: u64, pairs: usize) -> ShiftReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ShiftReport {
        pairs,
        same_min_cases: 0,
        new_tail_cases: 0,
        strict_shifts: 0,
        violations: Vec::new(),
    };
    for case in 0..pairs {
        let m = rng.random_range(3..=6usize);
        let lo = rng.random_range(0..m - 1);
        let hi = rng.random_range(lo + 1..m);
        let message = MsgRange::new(lo, hi).expect("lo <= hi");
        let keep_min = case % 2 == 0;
        let p_big = if keep_min || case % 4 == 3 {
            random_log_concave_belief(&mut rng, message)
        } else {
            bottom_heavy_belief(&mut rng, message)
        };

        // Price the marginal value above every virtual cost in play so no
        // assigned quantity degenerates to zero (a strict shift needs room
        // to drop).
        let max_vc = message
            .iter()
            .map(|t| p_big.virtual_cost(t).expect("full support"))
            .max()
            .expect("nonempty message");
        let a = max_vc.floor().to_integer().to_u64().expect("small cost") + 2;
        let value = ValueFunction::from_quadratic(
            &rat_u64(a),
            &rat(1, 4),
            QuantityGrid::new(4 * a).expect("positive cap"),
        );

        let sub = if keep_min {
            report.same_min_cases += 1;
            MsgRange::new(lo, rng.random_range(lo..hi)).expect("lo <= hi")
        } else {
            report.new_tail_cases += 1;
            MsgRange::new(rng.random_range(lo + 1..=hi), hi).expect("lo <= hi")
        };
        let ctx = format!("case {case}: restrict {message} to {sub}");
        let small = match p_big.condition(sub) {
            Ok(p) => p,
            Err(e) => {
                report.violations.push(format!("{ctx}: {e}"));
                continue;
            }
        };
        let tail: Rat = message
            .iter()
            .take_while(|&t| t < sub.lo())
            .map(|t| p_big.prob(t))
            .sum();

        for t in sub.iter() {
            let vc_big = p_big.virtual_cost(t).expect("full support");
            let vc_small = small.virtual_cost(t).expect("full support");
            let set_big = optimal_quantities(&value, &vc_big);
            let set_small = optimal_quantities(&value, &vc_small);
            if keep_min {
                if vc_big != vc_small {
                    report.violations.push(format!(
                        "{ctx}: virtual cost of type {} moved from {} to {}",
                        t + 1,
                        format_fraction(&vc_big),
                        format_fraction(&vc_small)
                    ));
                }
                if set_big != set_small {
                    report
                        .violations
                        .push(format!("{ctx}: quantity set of type {} changed", t + 1));
                }
                continue;
            }
            let gap = &vc_big - &vc_small;
            let expected = &tail / p_big.prob(t);
            if gap != expected {
                report.violations.push(format!(
                    "{ctx}: type {} virtual-cost gap is {}, expected tail ratio {}",
                    t + 1,
                    format_fraction(&gap),
                    format_fraction(&expected)
                ));
            }
            if set_small.min() < set_big.min() || set_small.max() < set_big.max() {
                report.violations.push(format!(
                    "{ctx}: type {} quantities moved down after dropping the tail",
                    t + 1
                ));
            }
            if tail > p_big.prob(t) {
                report.strict_shifts += 1;
                if set_big.min() >= set_small.min() {
                    report.violations.push(format!(
                        "{ctx}: tail outweighs type {} but its quantity did not strictly drop",
                        t + 1
                    ));
                }
            }
        }
    }
    report
}

/// A screening scenario with the quantity grid, type denominator, and value
/// slope sized off `m` and the weight cap so that every virtual cost
/// reachable on the weight grid stays strictly below the marginal value at
/// zero: every menu row then earns a strictly positive quantity and no
/// elimination step degenerates into all-zero menus. The marginal value has
/// fractional part 1/4 or 3/4 everywhere while weight-grid virtual costs
/// have denominators at most 3, so candidate sets are singletons and menus
/// unique.
fn random_band_scenario<R: Rng>(
    rng: &mut R,
    m: usize,
    weight_cap: u32,
    high_side: bool,
    name: String,
) -> Result<Scenario> {
    let a = m as u64 + (m as u64 - 1) * weight_cap as u64 + 1 + rng.random_range(0..=2u64);
    let grid = TypeGrid::new(4 * a, m)?;
    let value = ValueFunction::from_quadratic(&rat_u64(a), &rat(1, 4), QuantityGrid::new(2 * a)?);
    let theta_p = if high_side {
        MsgRange::new(0, rng.random_range(0..=m - 2))?
    } else {
        MsgRange::new(rng.random_range(1..=m - 1), m - 1)?
    };
    Scenario::new(name, grid, value, theta_p, weight_cap, 20)
}

/// `count` scenarios where the principal's band starts at the lowest type
/// but misses at least the highest, cycling `m` through {3,4,5} and the
/// weight cap through {1,2,3}.
pub fn high_unawareness_batch(seed: u64, count: usize) -> Result<Vec<Scenario>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let m = 3 + i % 3;
            let w = (1 + (i / 3) % 3) as u32;
            random_band_scenario(&mut rng, m, w, true, format!("high-m{m}-w{w}-{i}"))
        })
        .collect()
}

/// `count` scenarios where the band reaches the highest type but misses at
/// least the lowest, on the same `m` and weight-cap cycle.
pub fn low_unawareness_batch(seed: u64, count: usize) -> Result<Vec<Scenario>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let m = 3 + i % 3;
            let w = (1 + (i / 3) % 3) as u32;
            random_band_scenario(&mut rng, m, w, false, format!("low-m{m}-w{w}-{i}"))
        })
        .collect()
}

/// Fixed-point verdict for one scenario run.
#[derive(Debug, Clone)]
pub struct DisclosureVerdict {
    pub scenario: String,
    pub converged_at: u32,
    pub surviving_families: usize,
    pub violations: Vec<String>,
}

fn ranges_to_string(set: &BTreeSet<MsgRange>) -> String {
    set.iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Check an already-computed fixed point for full disclosure: in every
/// tree, every type outside the principal's initial band keeps exactly one
/// message — the whole tree.
pub fn full_disclosure_verdict(trace: &RunTrace) -> Result<DisclosureVerdict> {
    let scenario = &trace.scenario;
    let converged_at = trace
        .converged_at
        .ok_or(Error::NoConvergence(scenario.level_cap))?;
    let mut violations = Vec::new();
    for &tree in trace.lattice.messages() {
        for t in tree.iter().filter(|&t| !scenario.theta_p.contains(t)) {
            let allowed = trace.allowed(tree, t)?;
            if allowed != BTreeSet::from([tree]) {
                violations.push(format!(
                    "{}: type {} in tree {} keeps [{}] instead of the tree itself",
                    scenario.name,
                    t + 1,
                    tree,
                    ranges_to_string(&allowed)
                ));
            }
        }
    }
    Ok(DisclosureVerdict {
        scenario: scenario.name.clone(),
        converged_at,
        surviving_families: trace.surviving_families().len(),
        violations,
    })
}

/// Run the elimination to its fixed point and check [`full_disclosure_verdict`].
pub fn check_full_disclosure(scenario: &Scenario) -> Result<DisclosureVerdict> {
    full_disclosure_verdict(&run_rationalizability(scenario)?)
}

/// Check an already-computed fixed point for universal withholding: every
/// type's only surviving message in every tree is the principal's own band,
/// and every type below the band pools on the contract designed for the
/// band's lowest type, in every surviving family.
pub fn withholding_verdict(trace: &RunTrace) -> Result<DisclosureVerdict> {
    let scenario = &trace.scenario;
    let theta_p = scenario.theta_p;
    let converged_at = trace
        .converged_at
        .ok_or(Error::NoConvergence(scenario.level_cap))?;
    let mut violations = Vec::new();
    for &tree in trace.lattice.messages() {
        for t in tree.iter() {
            let allowed = trace.allowed(tree, t)?;
            if allowed != BTreeSet::from([theta_p]) {
                violations.push(format!(
                    "{}: type {} in tree {} keeps [{}] instead of {}",
                    scenario.name,
                    t + 1,
                    tree,
                    ranges_to_string(&allowed),
                    theta_p
                ));
            }
        }
    }
    for entry in trace.surviving_families() {
        for t in 0..theta_p.lo() {
            let rows = trace.choice_rows(entry.id, theta_p, t)?;
            if rows != BTreeSet::from([Some(theta_p.lo())]) {
                violations.push(format!(
                    "{}: family {}: type {} does not pool on type {}'s contract",
                    scenario.name,
                    entry.id,
                    t + 1,
                    theta_p.lo() + 1
                ));
            }
        }
    }
    Ok(DisclosureVerdict {
        scenario: scenario.name.clone(),
        converged_at,
        surviving_families: trace.surviving_families().len(),
        violations,
    })
}

/// Run the elimination to its fixed point and check [`withholding_verdict`].
pub fn check_universal_withholding(scenario: &Scenario) -> Result<DisclosureVerdict> {
    withholding_verdict(&run_rationalizability(scenario)?)
}

fn disclosure_batch(
    label: &str,
    scenarios: &[Scenario],
    check: fn(&Scenario) -> Result<DisclosureVerdict>,
) -> BatchReport {
    let mut violations = Vec::new();
    for scenario in scenarios {
        match check(scenario) {
            Ok(verdict) => violations.extend(verdict.violations),
            Err(e) => violations.push(format!("{}: {e}", scenario.name)),
        }
    }
    BatchReport {
        label: label.into(),
        cases: scenarios.len(),
        violations,
    }
}

/// Full-disclosure property over a seeded batch of high-side scenarios.
pub fn full_disclosure_suite(seed: u64, count: usize) -> Result<BatchReport> {
    let scenarios = high_unawareness_batch(seed, count)?;
    Ok(disclosure_batch(
        "full-disclosure",
        &scenarios,
        check_full_disclosure,
    ))
}

/// Universal-withholding property over a seeded batch of low-side scenarios.
pub fn universal_withholding_suite(seed: u64, count: usize) -> Result<BatchReport> {
    let scenarios = low_unawareness_batch(seed, count)?;
    Ok(disclosure_batch(
        "universal-withholding",
        &scenarios,
        check_universal_withholding,
    ))
}

/// A screening instance small enough for the exhaustive oracle: quantity cap
/// at most 8, at most three supported types, and a closed-form menu whose
/// transfers fit the oracle's contract grid.
#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub label: String,
    pub grid: TypeGrid,
    pub value: ValueFunction,
    pub belief: MarginalBelief,
}

fn small_instance<R: Rng>(rng: &mut R, label: String) -> Result<SmallInstance> {
    for _ in 0..64 {
        let b = rng.random_range(4..=8u64);
        let m = rng.random_range(2..=(b / 2).min(4)) as usize;
        let gamma = rng.random_range(b + 1..=12);
        let grid = TypeGrid::new(gamma, m)?;
        let len = rng.random_range(1..=3usize.min(m));
        let lo = rng.random_range(0..=m - len);
        let message = MsgRange::new(lo, lo + len - 1)?;
        let belief = random_log_concave_belief(rng, message);
        let value = ValueFunction::from_quadratic(
            &rat_int(rng.random_range(2..=3i64)),
            &rat(1, 4),
            QuantityGrid::new(b)?,
        );
        let menu = optimal_menu(&grid, &value, &belief)?;
        if menu.rows.iter().all(|r| r.contract.t <= b) {
            return Ok(SmallInstance {
                label,
                grid,
                value,
                belief,
            });
        }
    }
    Err(Error::Internal(
        "could not sample an instance whose transfers fit the oracle grid".into(),
    ))
}

/// Closed-form menus must guarantee exactly the payoff the exhaustive oracle
/// certifies as optimal, and the menu itself must be among the oracle's
/// optima. Checked on `count` seeded small instances.
pub fn oracle_equivalence_suite(seed: u64, count: usize) -> Result<BatchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for case in 0..count {
        let inst = small_instance(&mut rng, format!("instance {case}"))?;
        let menu = optimal_menu(&inst.grid, &inst.value, &inst.belief)?;
        let contracts = menu.contracts();
        let guaranteed = expected_principal_payoff(
            &contracts,
            &inst.belief,
            &inst.grid,
            &inst.value,
            TieRule::Adversarial,
        )?;
        let oracle = brute_force_best_menu(
            &inst.grid,
            &inst.value,
            &inst.belief,
            inst.belief.support().len(),
        )?;
        if guaranteed != oracle.best_value {
            violations.push(format!(
                "{}: closed form guarantees {} but exhaustive search finds {}",
                inst.label,
                format_fraction(&guaranteed),
                format_fraction(&oracle.best_value)
            ));
        } else if !oracle.contains_menu(&contracts) {
            violations.push(format!(
                "{}: value matches but the menu is not among the exhaustive optima",
                inst.label
            ));
        }
    }
    Ok(BatchReport {
        label: "oracle-equivalence".into(),
        cases: count,
        violations,
    })
}

/// Every randomized suite at its gate size, with sub-seeds derived from
/// `seed`. Engine-driven batches dominate the runtime.
pub fn run_all(seed: u64) -> Result<Vec<BatchReport>> {
    Ok(vec![
        conditioning_consistency_suite(seed, 120),
        virtual_cost_shift_suite(seed.wrapping_add(1), 120).into_batch(),
        oracle_equivalence_suite(seed.wrapping_add(2), 50)?,
        full_disclosure_suite(seed.wrapping_add(3), 21)?,
        universal_withholding_suite(seed.wrapping_add(4), 21)?,
    ])
}
