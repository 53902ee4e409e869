//! Independent brute-force check of menu optimality.
//!
//! The closed-form solver in [`crate::menu`] prices quantities through
//! virtual costs and a transfer recursion. This module ignores all of that
//! structure and simply tries every menu on a bounded contract grid, scoring
//! each one by expected principal payoff with ties broken *against* the
//! principal. Agreement between the two routes on instances small enough to
//! enumerate is the strongest correctness evidence the test suite has, so
//! this module deliberately shares no logic with the solver beyond payoff
//! definitions.
//!
//! Enumeration is exhaustive over contract sets with both coordinates in
//! `{0..b}`, so it only certifies optima whose transfers happen to fit that
//! square; instance generators for comparison tests keep themselves inside
//! it. Scoring runs in scaled integer arithmetic (`i128`), with every
//! utility multiplied by a common denominator, so it is exact and far
//! cheaper than rational arithmetic in the innermost loop.

use crate::beliefs::MarginalBelief;
use crate::error::{Error, Result};
use crate::model::{Contract, TypeGrid, ValueFunction};
use crate::rational::Rat;
use itertools::Itertools;
use num::bigint::BigInt;
use num::{Integer, One, ToPrimitive};

/// Cap on `(b + 1) ^ (2 * max_contracts)`, the loose upper bound on menu
/// combinations the guard compares against.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

/// The oracle's verdict: the best guaranteed expected payoff over all menus
/// of at most `max_contracts` grid contracts, together with every menu that
/// attains it (lexicographically sorted, including menus that differ only
/// by contracts nobody selects).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    pub best_value: Rat,
    pub best_menus: Vec<Vec<Contract>>,
    /// Number of candidate menus scored.
    pub menus_scored: u64,
}

impl OracleOutcome {
    /// Whether a contract set (in any order, duplicates ignored) is among
    /// the optimal menus.
    pub fn contains_menu(&self, contracts: &[Contract]) -> bool {
        let mut sorted: Vec<Contract> = contracts.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        self.best_menus.iter().any(|m| *m == sorted)
    }
}

/// Exhaustively score every menu of `1..=max_contracts` contracts drawn
/// from the `(b + 1) x (b + 1)` grid of quantity-transfer pairs, under the
/// adversarial tie rule. Refuses instances whose contract grid is too large
/// to enumerate.
pub fn brute_force_best_menu(
    grid: &TypeGrid,
    v: &ValueFunction,
    belief: &MarginalBelief,
    max_contracts: usize,
) -> Result<OracleOutcome> {
    if max_contracts == 0 {
        return Err(Error::EmptyEntrySet);
    }
    let b = v.b();
    let size = (b as u128 + 1)
        .checked_pow(2 * max_contracts as u32)
        .unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::OracleTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let support = belief.support();
    if support.is_empty() {
        return Err(Error::InvalidBelief("empty support".into()));
    }
    if *support.last().unwrap() >= grid.len() {
        return Err(Error::TypeIndexOutOfRange {
            index: *support.last().unwrap(),
            m: grid.len(),
        });
    }

    // Common denominators: agent utilities scale by gamma, principal
    // utilities by the value function's denominator, probabilities by
    // theirs. Everything in the scoring loop is then i128.
    let value_den: BigInt = (0..=b)
        .map(|q| v.value(q).denom().clone())
        .fold(BigInt::one(), |acc, d| acc.lcm(&d));
    let prob_den: BigInt = support
        .iter()
        .map(|&s| belief.prob(s).denom().clone())
        .fold(BigInt::one(), |acc, d| acc.lcm(&d));
    let to_i128 = |x: &BigInt, what: &str| -> Result<i128> {
        x.to_i128()
            .ok_or_else(|| Error::Internal(format!("{what} exceeds i128")))
    };

    // Per contract: scaled principal payoff; per supported type: scaled
    // agent payoff. Contracts in lexicographic (q, t) order.
    let contracts: Vec<Contract> = (0..=b)
        .flat_map(|q| (0..=b).map(move |t| Contract::new(q, t)))
        .collect();
    let mut principal: Vec<i128> = Vec::with_capacity(contracts.len());
    for c in &contracts {
        let scaled =
            (v.value(c.q) - Rat::from_integer(c.t.into())) * Rat::from_integer(value_den.clone());
        debug_assert!(scaled.is_integer());
        principal.push(to_i128(scaled.numer(), "scaled principal payoff")?);
    }
    let gamma = grid.gamma() as i128;
    let mut agent: Vec<Vec<i128>> = Vec::with_capacity(support.len());
    for &s in &support {
        // gamma * theta_s is the integer gamma * (s + 1) - 1.
        let gt = gamma * (s as i128 + 1) - 1;
        agent.push(
            contracts
                .iter()
                .map(|c| gamma * c.t as i128 - gt * c.q as i128)
                .collect(),
        );
    }
    let mut prob_num: Vec<i128> = Vec::with_capacity(support.len());
    for &s in &support {
        let scaled = belief.prob(s) * Rat::from_integer(prob_den.clone());
        debug_assert!(scaled.is_integer());
        prob_num.push(to_i128(scaled.numer(), "scaled probability")?);
    }

    // Adversarial score of one menu, in units of 1 / (prob_den * value_den).
    let score = |menu: &[usize]| -> i128 {
        let mut total = 0i128;
        for k in 0..support.len() {
            let ua = &agent[k];
            let mut best_ua = 0i128; // the null contract
            for &i in menu {
                if ua[i] > best_ua {
                    best_ua = ua[i];
                }
            }
            let mut worst_up = if best_ua == 0 { Some(0i128) } else { None };
            for &i in menu {
                if ua[i] == best_ua && worst_up.is_none_or(|w| principal[i] < w) {
                    worst_up = Some(principal[i]);
                }
            }
            total += prob_num[k] * worst_up.expect("some maximizer");
        }
        total
    };

    let mut best: Option<i128> = None;
    let mut best_menus: Vec<Vec<Contract>> = Vec::new();
    let mut menus_scored = 0u64;
    for k in 1..=max_contracts {
        for menu in (0..contracts.len()).combinations(k) {
            menus_scored += 1;
            let value = score(&menu);
            if best.is_none_or(|b| value > b) {
                best = Some(value);
                best_menus.clear();
            }
            if best == Some(value) {
                best_menus.push(menu.iter().map(|&i| contracts[i]).collect());
            }
        }
    }

    let best_value = Rat::new(
        best.expect("at least one menu scored").into(),
        prob_den * value_den,
    );
    Ok(OracleOutcome {
        best_value,
        best_menus,
        menus_scored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::MsgRange;
    use crate::menu::{TieRule, expected_principal_payoff, optimal_menu};
    use crate::model::QuantityGrid;
    use crate::rational::{parse_rat, rat};
    use num::Zero;

    fn small_value() -> ValueFunction {
        // 4.3q - 0.25q^2 on {0..8}
        ValueFunction::from_quadratic(
            &parse_rat("4.3").unwrap(),
            &rat(1, 4),
            QuantityGrid::new(8).unwrap(),
        )
    }

    #[test]
    fn guard_rejects_oversized_grids() {
        let grid = TypeGrid::new(100, 1).unwrap();
        let v =
            ValueFunction::from_quadratic(&rat(50, 1), &rat(1, 4), QuantityGrid::new(99).unwrap());
        let p = MarginalBelief::point_mass(MsgRange::new(0, 0).unwrap(), 0).unwrap();
        assert!(matches!(
            brute_force_best_menu(&grid, &v, &p, 3),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn single_type_optimum_found_by_both_routes() {
        let grid = TypeGrid::new(10, 1).unwrap();
        let v = small_value();
        let p = MarginalBelief::point_mass(MsgRange::new(0, 0).unwrap(), 0).unwrap();
        let oracle = brute_force_best_menu(&grid, &v, &p, 1).unwrap();
        assert!(oracle.contains_menu(&[Contract::new(7, 7)]));
        assert_eq!(oracle.menus_scored, 81);

        let menu = optimal_menu(&grid, &v, &p).unwrap();
        assert_eq!(menu.contracts(), vec![Contract::new(7, 7)]);
        let value =
            expected_principal_payoff(&menu.contracts(), &p, &grid, &v, TieRule::Adversarial)
                .unwrap();
        assert_eq!(value, oracle.best_value);
        assert_eq!(value, parse_rat("10.85").unwrap());
    }

    #[test]
    fn two_type_screening_matches_the_recursion() {
        // Shallow marginals keep the closed-form transfers inside the
        // oracle's contract square.
        let grid = TypeGrid::new(10, 2).unwrap();
        let v = ValueFunction::from_quadratic(
            &parse_rat("3.3").unwrap(),
            &rat(1, 4),
            QuantityGrid::new(8).unwrap(),
        );
        let p =
            MarginalBelief::new(MsgRange::new(0, 1).unwrap(), vec![rat(1, 2), rat(1, 2)]).unwrap();
        let menu = optimal_menu(&grid, &v, &p).unwrap();
        assert_eq!(
            menu.contracts(),
            vec![Contract::new(5, 6), Contract::new(1, 2)]
        );
        let value =
            expected_principal_payoff(&menu.contracts(), &p, &grid, &v, TieRule::Adversarial)
                .unwrap();
        let oracle = brute_force_best_menu(&grid, &v, &p, 2).unwrap();
        assert_eq!(value, oracle.best_value);
        assert!(oracle.contains_menu(&menu.contracts()));
    }

    #[test]
    fn adversarial_ties_can_pull_the_score_negative() {
        // A menu whose only trade ties the agent at zero utility with a
        // transfer above value: the adversarial agent takes the trade.
        let grid = TypeGrid::new(2, 1).unwrap(); // single type 1/2
        let v =
            ValueFunction::from_quadratic(&rat(1, 2), &rat(1, 4), QuantityGrid::new(2).unwrap());
        let p = MarginalBelief::point_mass(MsgRange::new(0, 0).unwrap(), 0).unwrap();
        let oracle = brute_force_best_menu(&grid, &v, &p, 1).unwrap();
        // v(2) = 0, and (2, 1) leaves the agent exactly indifferent; the
        // adversarial agent takes the trade and the principal pays for it.
        let tied = [Contract::new(2, 1)];
        let tied_value =
            expected_principal_payoff(&tied, &p, &grid, &v, TieRule::Adversarial).unwrap();
        assert_eq!(tied_value, rat(-1, 1));
        assert!(oracle.best_value >= Rat::zero());
        assert!(!oracle.contains_menu(&tied));
    }

    #[test]
    fn redundant_contracts_appear_among_maximizers() {
        let grid = TypeGrid::new(10, 1).unwrap();
        let v = small_value();
        let p = MarginalBelief::point_mass(MsgRange::new(0, 0).unwrap(), 0).unwrap();
        let oracle = brute_force_best_menu(&grid, &v, &p, 2).unwrap();
        // (0, 0) adds nothing: the agent prefers (7, 7) and the score is
        // unchanged, so the augmented menu is also optimal.
        assert!(oracle.contains_menu(&[Contract::new(7, 7)]));
        assert!(oracle.contains_menu(&[Contract::new(0, 0), Contract::new(7, 7)]));
    }
}
