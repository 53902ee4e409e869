//! Optimal menus from first-order conditions.
//!
//! Given a belief over types, the profit-maximizing menu is built in three
//! steps: compute each supported type's virtual cost, bracket it between
//! adjacent marginal values to get the optimal quantity (a one- or
//! two-element set), then price the chosen quantities by a descending
//! transfer recursion that leaves every type exactly its information rent.
//! The construction is verified internally: closed-form rents must match
//! direct payoffs, and the finished menu must satisfy every participation
//! and self-selection constraint exactly.

use crate::beliefs::MarginalBelief;
use crate::error::{Error, Result};
use crate::model::{Contract, TypeGrid, ValueFunction, agent_utility, principal_utility};
use crate::rational::{Rat, rat_u64};
use num::Zero;
use std::collections::BTreeSet;

/// The quantities bracketing a marginal cost: `{q : dv(q) <= cost <= dv(q-1)}`
/// with one-sided comparisons at the grid ends. Always one or two adjacent
/// values; two exactly when the cost equals a forward difference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantitySet {
    values: Vec<u64>,
}

impl QuantitySet {
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn is_singleton(&self) -> bool {
        self.values.len() == 1
    }

    pub fn min(&self) -> u64 {
        self.values[0]
    }

    pub fn max(&self) -> u64 {
        *self.values.last().unwrap()
    }
}

/// All maximizers of `v(q) - cost * q` on the quantity grid, located by the
/// first grid point whose forward difference drops to or below the cost.
/// Strictly decreasing marginals make the set an interval of length one or
/// two.
pub fn optimal_quantities(v: &ValueFunction, cost: &Rat) -> QuantitySet {
    let b = v.b();
    let mut k = b;
    for q in 0..b {
        if &v.forward_diff(q).expect("q < b") <= cost {
            k = q;
            break;
        }
    }
    let mut values = vec![k];
    if k < b && &v.forward_diff(k).expect("k < b") == cost {
        values.push(k + 1);
    }
    QuantitySet { values }
}

/// One supported type's line in a solved menu.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenuRow {
    /// Global type index.
    pub type_index: usize,
    /// The type's virtual cost under the menu's belief.
    pub virtual_cost: Rat,
    /// Maximizers of virtual surplus at that cost.
    pub candidates: QuantitySet,
    /// The quantity actually assigned and its transfer.
    pub contract: Contract,
    /// The type's payoff from its own line (its information rent).
    pub rent: Rat,
}

/// A solved menu: one row per supported type, highest quantities first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenuSolution {
    pub rows: Vec<MenuRow>,
    /// True when every row's candidate set is a singleton, i.e. the menu is
    /// the unique optimum rather than one selection among optima.
    pub robust: bool,
}

impl MenuSolution {
    pub fn contracts(&self) -> Vec<Contract> {
        self.rows.iter().map(|r| r.contract).collect()
    }

    pub fn row_for(&self, type_index: usize) -> Option<&MenuRow> {
        self.rows.iter().find(|r| r.type_index == type_index)
    }
}

/// Solve for the profit-maximizing menu under `belief`.
///
/// Rows are created for supported types in ascending order. When a candidate
/// set has two quantities, the selection keeps quantities strictly
/// decreasing by taking the largest candidate below the previous row's
/// quantity; admissible beliefs space virtual costs at least one apart, so a
/// consistent selection always exists and the defensive
/// [`Error::MonotonicityFailure`] is unreachable for them. Transfers then
/// follow the descending recursion `t = t_next + ceil(theta) * (q - q_next)`
/// starting from `ceil(theta_top) * q_top`, which prices each quantity step
/// at the buyer's rounded-up cost.
pub fn optimal_menu(
    grid: &TypeGrid,
    v: &ValueFunction,
    belief: &MarginalBelief,
) -> Result<MenuSolution> {
    let support = belief.support();
    if let Some(&top) = support.last() {
        if top >= grid.len() {
            return Err(Error::TypeIndexOutOfRange {
                index: top,
                m: grid.len(),
            });
        }
    }

    // Quantities, ascending by type.
    let mut chosen: Vec<(usize, Rat, QuantitySet, u64)> = Vec::with_capacity(support.len());
    for &index in &support {
        let vc = belief.virtual_cost(index)?;
        let candidates = optimal_quantities(v, &vc);
        let q = match chosen.last() {
            None => candidates.max(),
            Some(&(_, _, _, prev)) => candidates
                .values()
                .iter()
                .rev()
                .copied()
                .find(|&c| c < prev)
                .unwrap_or_else(|| candidates.min()),
        };
        if let Some(&(_, _, _, prev)) = chosen.last() {
            let decreasing = q < prev || (q == 0 && prev == 0);
            if !decreasing {
                return Err(Error::MonotonicityFailure(format!(
                    "type {} assigned quantity {} after {}",
                    index + 1,
                    q,
                    prev
                )));
            }
        }
        chosen.push((index, vc, candidates, q));
    }

    // Transfers, descending by type.
    let mut transfers = vec![0u64; chosen.len()];
    for i in (0..chosen.len()).rev() {
        let (index, _, _, q) = &chosen[i];
        let q_next = chosen.get(i + 1).map_or(0, |c| c.3);
        let t_next = transfers.get(i + 1).copied().unwrap_or(0);
        transfers[i] = t_next + grid.ceil_of(*index) * (q - q_next);
    }

    // Rents: the closed form (q / gamma) + sum of higher supported
    // quantities must reproduce each type's direct payoff exactly.
    let mut rows = Vec::with_capacity(chosen.len());
    let mut robust = true;
    let tail_sums: Vec<u64> = {
        let mut acc = 0;
        let mut sums = vec![0u64; chosen.len()];
        for i in (0..chosen.len()).rev() {
            sums[i] = acc;
            acc += chosen[i].3;
        }
        sums
    };
    for (i, (index, vc, candidates, q)) in chosen.into_iter().enumerate() {
        let contract = Contract::new(q, transfers[i]);
        let rent = rat_u64(q) / rat_u64(grid.gamma()) + rat_u64(tail_sums[i]);
        let direct = agent_utility(&contract, grid.theta(index));
        if rent != direct {
            return Err(Error::RentMismatch {
                type_index: index,
                closed_form: rent.to_string(),
                direct: direct.to_string(),
            });
        }
        robust &= candidates.is_singleton();
        rows.push(MenuRow {
            type_index: index,
            virtual_cost: vc,
            candidates,
            contract,
            rent,
        });
    }

    let menu = MenuSolution { rows, robust };
    verify_constraints(&menu, grid)?;
    Ok(menu)
}

/// Exact participation and self-selection check: every row's type weakly
/// prefers its own contract to every other row and to walking away.
pub fn verify_constraints(menu: &MenuSolution, grid: &TypeGrid) -> Result<()> {
    for row in &menu.rows {
        let theta = grid.theta(row.type_index);
        let own = agent_utility(&row.contract, theta);
        if own < Rat::zero() {
            return Err(Error::Internal(format!(
                "type {} earns {} from its own line",
                row.type_index + 1,
                own
            )));
        }
        for other in &menu.rows {
            if agent_utility(&other.contract, theta) > own {
                return Err(Error::Internal(format!(
                    "type {} prefers the line of type {}",
                    row.type_index + 1,
                    other.type_index + 1
                )));
            }
        }
    }
    Ok(())
}

/// What a cost type does when facing a list of contracts: its best payoff
/// and every contract achieving it. The null contract is always available,
/// so the payoff is at least zero and the maximizer set never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub utility: Rat,
    pub maximizers: Vec<Contract>,
}

pub fn agent_choice(contracts: &[Contract], theta: &Rat) -> Choice {
    let mut pool: BTreeSet<Contract> = contracts.iter().copied().collect();
    pool.insert(Contract::OUTSIDE);
    let utility = pool
        .iter()
        .map(|c| agent_utility(c, theta))
        .max()
        .expect("outside option present");
    let maximizers = pool
        .into_iter()
        .filter(|c| agent_utility(c, theta) == utility)
        .collect();
    Choice {
        utility,
        maximizers,
    }
}

/// How the agent breaks payoff ties among contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// Ties resolve against the principal (the guarantee a menu must earn).
    Adversarial,
    /// Ties resolve in the principal's favor.
    Favorable,
}

/// The principal's expected payoff from offering `contracts` to an agent
/// distributed by `belief`, with ties broken per `rule`.
pub fn expected_principal_payoff(
    contracts: &[Contract],
    belief: &MarginalBelief,
    grid: &TypeGrid,
    v: &ValueFunction,
    rule: TieRule,
) -> Result<Rat> {
    let mut total = Rat::zero();
    for index in belief.support() {
        let choice = agent_choice(contracts, grid.theta(index));
        let mut payoffs = Vec::with_capacity(choice.maximizers.len());
        for c in &choice.maximizers {
            payoffs.push(principal_utility(c, v)?);
        }
        let picked = match rule {
            TieRule::Adversarial => payoffs.into_iter().min(),
            TieRule::Favorable => payoffs.into_iter().max(),
        }
        .expect("nonempty maximizer set");
        total += belief.prob(index) * picked;
    }
    Ok(total)
}
