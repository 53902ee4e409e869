//! Model primitives: the cost-type grid, the contract grid, tabulated value
//! functions with their discrete derivatives, contracts, and payoffs.
//!
//! Types live on the grid `theta_j = j - 1/gamma` for `j = 1..=m`. That
//! structure is load-bearing: `ceil(theta_j) = j`, and more importantly
//! `ceil(theta_j * n) = j * n` for every integer `0 <= n < gamma`, which is
//! what lets transfer recursions clear fractional participation constraints
//! with integer transfers while leaving each type a round-up slack of
//! exactly `n/gamma`.

use crate::error::{Error, Result};
use crate::rational::{Rat, rat_u64};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// The discrete cost-type grid `{j - 1/gamma : j = 1..=m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeGrid {
    gamma: u64,
    types: Vec<Rat>,
}

impl TypeGrid {
    /// Build the grid. Requires `gamma >= 2` (so every type lies strictly
    /// between consecutive integers) and `m >= 1`.
    pub fn new(gamma: u64, m: usize) -> Result<Self> {
        if gamma < 2 || m == 0 {
            return Err(Error::InvalidTypeGrid { gamma, m });
        }
        let inv = Rat::new(1.into(), gamma.into());
        let types = (1..=m as u64).map(|j| rat_u64(j) - &inv).collect();
        Ok(Self { gamma, types })
    }

    pub fn gamma(&self) -> u64 {
        self.gamma
    }

    /// Number of types on the grid.
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// The type at 0-based `index`. Panics when out of range.
    pub fn theta(&self, index: usize) -> &Rat {
        &self.types[index]
    }

    pub fn types(&self) -> &[Rat] {
        &self.types
    }

    /// `ceil(theta_index)`, which on this grid is just the 1-based position.
    pub fn ceil_of(&self, index: usize) -> u64 {
        index as u64 + 1
    }

    /// `ceil(theta * n)` for a grid type, verified against the closed form
    /// `ceil(theta) * n`. The identity needs `n < gamma`; callers pairing the
    /// grid with a contract grid `b < gamma` can never trip the bound.
    pub fn ceil_times_int(&self, index: usize, n: u64) -> Result<u64> {
        if index >= self.types.len() {
            return Err(Error::TypeIndexOutOfRange {
                index,
                m: self.types.len(),
            });
        }
        if n >= self.gamma {
            return Err(Error::CeilIdentityOutOfRange {
                n,
                gamma: self.gamma,
            });
        }
        let product = self.ceil_of(index) * n;
        let direct = (self.theta(index) * rat_u64(n)).ceil();
        assert!(
            direct == rat_u64(product),
            "round-up identity failed for theta index {index}, n = {n}"
        );
        Ok(product)
    }
}

/// The integer contract grid `D = {0..=b}` for quantities.
///
/// Transfers in *computed* menus are plain nonnegative integers and may
/// exceed `b` (the binding-constraint recursion sums up to `m` quantities);
/// only the exhaustive oracle enumerates transfers over `D` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantityGrid {
    b: u64,
}

impl QuantityGrid {
    pub fn new(b: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidQuantityGrid(b));
        }
        Ok(Self { b })
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> {
        0..=self.b
    }
}

/// A gross-value function tabulated exactly on `{0..=b}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueFunction {
    values: Vec<Rat>,
}

impl ValueFunction {
    /// Tabulate `v(q) = a*q - c*q^2` over the grid.
    pub fn from_quadratic(a: &Rat, c: &Rat, grid: QuantityGrid) -> Self {
        let values = (0..=grid.b())
            .map(|q| {
                let q = rat_u64(q);
                a * &q - c * &q * &q
            })
            .collect();
        Self { values }
    }

    /// Use an explicit table `v(0), …, v(b)`. The length must match.
    pub fn from_table(values: Vec<Rat>, grid: QuantityGrid) -> Result<Self> {
        let need = grid.b() as usize + 1;
        if values.len() != need {
            return Err(Error::ValueTableLength {
                got: values.len(),
                need,
            });
        }
        Ok(Self { values })
    }

    /// Largest quantity on the grid.
    pub fn b(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// `v(q)`. Panics when `q > b`.
    pub fn value(&self, q: u64) -> &Rat {
        &self.values[q as usize]
    }

    /// Forward difference `v(q+1) - v(q)`, defined for `0 <= q <= b-1`.
    pub fn forward_diff(&self, q: u64) -> Result<Rat> {
        if q >= self.b() {
            return Err(Error::DiffOutOfRange {
                q,
                lo: 0,
                hi: self.b() - 1,
            });
        }
        Ok(self.value(q + 1) - self.value(q))
    }

    /// Backward difference `v(q) - v(q-1)`, defined for `1 <= q <= b`.
    pub fn backward_diff(&self, q: u64) -> Result<Rat> {
        if q == 0 || q > self.b() {
            return Err(Error::DiffOutOfRange {
                q,
                lo: 1,
                hi: self.b(),
            });
        }
        Ok(self.value(q) - self.value(q - 1))
    }
}

/// Outcome of one validity property check.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    /// 1-based property number, matching the order below.
    pub property: u8,
    pub description: &'static str,
    pub ok: bool,
    /// First violating quantity, if any.
    pub first_violation: Option<u64>,
}

/// Per-property report from [`validate_assumption1`].
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub checks: Vec<PropertyCheck>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    /// Property numbers that failed, in order.
    pub fn failing(&self) -> Vec<u8> {
        self.checks
            .iter()
            .filter(|c| !c.ok)
            .map(|c| c.property)
            .collect()
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                let status = if c.ok {
                    "ok".to_string()
                } else {
                    match c.first_violation {
                        Some(q) => format!("FAIL at q={q}"),
                        None => "FAIL".to_string(),
                    }
                };
                format!("property {} ({}): {}", c.property, c.description, status)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Check the five structural properties a value function must satisfy:
///
/// 1. `v(0) = 0`;
/// 2. strictly increasing;
/// 3. strictly concave in the discrete sense, `v(q+1) + v(q-1) < 2 v(q)`;
/// 4. bounded curvature, `v(q+1) - 2 v(q) + v(q-1) >= -1`;
/// 5. no forward difference is an integer.
///
/// Property 4 caps how fast marginal value falls, so the optimal-quantity
/// bracket `[forward diff, backward diff]` never spans more than one unit of
/// cost. Property 5 keeps integer costs off bracket endpoints — the lowest
/// supported type's virtual cost is always an integer, so its optimal
/// quantity is always unique.
pub fn validate_assumption1(v: &ValueFunction) -> AssumptionReport {
    let b = v.b();
    let mut checks = Vec::with_capacity(5);

    let zero_ok = v.value(0).is_zero();
    checks.push(PropertyCheck {
        property: 1,
        description: "v(0) = 0",
        ok: zero_ok,
        first_violation: if zero_ok { None } else { Some(0) },
    });

    let mut increasing = None;
    for q in 0..b {
        if !v.forward_diff(q).expect("in range").is_positive() {
            increasing = Some(q);
            break;
        }
    }
    checks.push(PropertyCheck {
        property: 2,
        description: "strictly increasing",
        ok: increasing.is_none(),
        first_violation: increasing,
    });

    let mut concave = None;
    let mut curvature = None;
    for q in 1..b {
        let second = v.value(q + 1) - v.value(q) - v.value(q) + v.value(q - 1);
        if concave.is_none() && !second.is_negative() {
            concave = Some(q);
        }
        if curvature.is_none() && second < -Rat::one() {
            curvature = Some(q);
        }
    }
    checks.push(PropertyCheck {
        property: 3,
        description: "strictly concave",
        ok: concave.is_none(),
        first_violation: concave,
    });
    checks.push(PropertyCheck {
        property: 4,
        description: "second difference >= -1",
        ok: curvature.is_none(),
        first_violation: curvature,
    });

    let mut non_integer = None;
    for q in 0..b {
        if v.forward_diff(q).expect("in range").denom().is_one() {
            non_integer = Some(q);
            break;
        }
    }
    checks.push(PropertyCheck {
        property: 5,
        description: "forward differences never integer",
        ok: non_integer.is_none(),
        first_violation: non_integer,
    });

    AssumptionReport { checks }
}

/// A contract: deliver quantity `q` against transfer `t`.
///
/// Quantities live on the contract grid; transfers are nonnegative integers
/// (see [`QuantityGrid`] on why they are not capped by `b`). The outside
/// option is the null contract `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Contract {
    pub q: u64,
    pub t: u64,
}

impl Contract {
    pub const OUTSIDE: Contract = Contract { q: 0, t: 0 };

    pub fn new(q: u64, t: u64) -> Self {
        Self { q, t }
    }
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.t)
    }
}

/// The agent's payoff `t - theta * q` from accepting `c` at cost `theta`.
pub fn agent_utility(c: &Contract, theta: &Rat) -> Rat {
    rat_u64(c.t) - theta * rat_u64(c.q)
}

/// The principal's payoff `v(q) - t`. Fails when `q` is off the grid.
pub fn principal_utility(c: &Contract, v: &ValueFunction) -> Result<Rat> {
    if c.q > v.b() {
        return Err(Error::QuantityOutOfRange { q: c.q, b: v.b() });
    }
    Ok(v.value(c.q) - rat_u64(c.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{parse_rat, rat};
    use proptest::prelude::*;

    fn example_value_function() -> ValueFunction {
        ValueFunction::from_quadratic(&rat(50, 1), &rat(1, 4), QuantityGrid::new(99).unwrap())
    }

    #[test]
    fn grid_produces_expected_types() {
        let grid = TypeGrid::new(100, 3).unwrap();
        let expect: Vec<Rat> = ["0.99", "1.99", "2.99"]
            .iter()
            .map(|s| parse_rat(s).unwrap())
            .collect();
        assert_eq!(grid.types(), expect.as_slice());

        let single = TypeGrid::new(10, 1).unwrap();
        assert_eq!(single.types(), &[rat(9, 10)]);
    }

    #[test]
    fn grid_rejects_degenerate_parameters() {
        assert!(TypeGrid::new(1, 3).is_err());
        assert!(TypeGrid::new(0, 3).is_err());
        assert!(TypeGrid::new(100, 0).is_err());
    }

    #[test]
    fn ceilings_match_indices() {
        let grid = TypeGrid::new(100, 5).unwrap();
        for j in 0..5 {
            assert_eq!(grid.ceil_of(j), j as u64 + 1);
            assert_eq!(grid.theta(j).ceil(), rat_u64(j as u64 + 1));
        }
    }

    #[test]
    fn round_up_products() {
        let grid = TypeGrid::new(100, 5).unwrap();
        assert_eq!(grid.ceil_times_int(1, 95).unwrap(), 190);
        assert_eq!(grid.ceil_times_int(0, 0).unwrap(), 0);
        assert_eq!(grid.ceil_times_int(3, 90).unwrap(), 360);
        assert!(matches!(
            grid.ceil_times_int(0, 100),
            Err(Error::CeilIdentityOutOfRange { .. })
        ));
        assert!(grid.ceil_times_int(9, 5).is_err());
    }

    #[test]
    fn quadratic_tabulation_and_diffs() {
        let v = example_value_function();
        assert_eq!(*v.value(1), parse_rat("49.75").unwrap());
        assert_eq!(v.forward_diff(0).unwrap(), parse_rat("49.75").unwrap());
        assert_eq!(v.forward_diff(98).unwrap(), parse_rat("0.75").unwrap());
        assert_eq!(v.backward_diff(98).unwrap(), parse_rat("1.25").unwrap());
        assert_eq!(v.backward_diff(90).unwrap(), parse_rat("5.25").unwrap());
        assert_eq!(v.backward_diff(1).unwrap(), parse_rat("49.75").unwrap());
        assert!(v.forward_diff(99).is_err());
        assert!(v.backward_diff(0).is_err());
    }

    #[test]
    fn table_constructor_checks_length() {
        let grid = QuantityGrid::new(2).unwrap();
        let v = ValueFunction::from_table(
            vec![
                rat(0, 1),
                parse_rat("4.05").unwrap(),
                parse_rat("7.6").unwrap(),
            ],
            grid,
        )
        .unwrap();
        assert_eq!(*v.value(2), parse_rat("7.6").unwrap());
        assert!(ValueFunction::from_table(vec![rat(0, 1)], grid).is_err());
    }

    #[test]
    fn validator_accepts_the_quadratic_instance() {
        let report = validate_assumption1(&example_value_function());
        assert!(report.all_pass(), "{}", report.summary());
    }

    #[test]
    fn validator_rejects_convex_and_linear_functions() {
        let grid = QuantityGrid::new(10).unwrap();
        let square =
            ValueFunction::from_table((0..=10).map(|q| rat_u64(q * q)).collect(), grid).unwrap();
        let report = validate_assumption1(&square);
        assert!(report.failing().contains(&3), "{}", report.summary());

        let linear = ValueFunction::from_table((0..=10).map(rat_u64).collect(), grid).unwrap();
        let report = validate_assumption1(&linear);
        assert!(report.failing().contains(&3));
        assert!(report.failing().contains(&5));
    }

    #[test]
    fn payoffs_match_hand_computations() {
        let v = example_value_function();
        let theta = parse_rat("0.99").unwrap();
        assert_eq!(
            agent_utility(&Contract::new(98, 376), &theta),
            parse_rat("278.98").unwrap()
        );
        assert_eq!(
            agent_utility(&Contract::new(92, 369), &theta),
            parse_rat("277.92").unwrap()
        );
        assert_eq!(agent_utility(&Contract::OUTSIDE, &theta), rat(0, 1));
        assert_eq!(
            principal_utility(&Contract::new(90, 360), &v).unwrap(),
            rat(2115, 1)
        );
        assert_eq!(
            principal_utility(&Contract::new(1, 5), &v).unwrap(),
            parse_rat("44.75").unwrap()
        );
        assert_eq!(
            principal_utility(&Contract::OUTSIDE, &v).unwrap(),
            rat(0, 1)
        );
        assert!(principal_utility(&Contract::new(100, 0), &v).is_err());
    }

    proptest! {
        #[test]
        fn round_up_identity_holds_across_the_grid(
            gamma in 2u64..300,
            m in 1usize..8,
            n in 0u64..300,
        ) {
            prop_assume!(n < gamma);
            let grid = TypeGrid::new(gamma, m).unwrap();
            for j in 0..m {
                let direct = (grid.theta(j) * rat_u64(n)).ceil();
                prop_assert_eq!(direct, rat_u64(grid.ceil_times_int(j, n).unwrap()));
            }
        }

        #[test]
        fn forward_diff_equals_next_backward_diff(b in 2u64..60, num in 1i64..200, den in 1i64..6) {
            let v = ValueFunction::from_quadratic(
                &rat(num, 1),
                &rat(1, 4 * den),
                QuantityGrid::new(b).unwrap(),
            );
            for q in 0..b {
                prop_assert_eq!(v.forward_diff(q).unwrap(), v.backward_diff(q + 1).unwrap());
            }
        }

        #[test]
        fn valid_functions_have_decreasing_marginals(b in 3u64..40, a in 50i64..200) {
            // Quarter-integer curvature keeps marginals a - (2q+1)/4 strictly
            // decreasing, gently sloped, and never integer.
            let v = ValueFunction::from_quadratic(
                &rat(a, 1),
                &rat(1, 4),
                QuantityGrid::new(b).unwrap(),
            );
            prop_assert!(validate_assumption1(&v).all_pass());
            for q in 0..b - 1 {
                prop_assert!(v.forward_diff(q).unwrap() > v.forward_diff(q + 1).unwrap());
            }
        }
    }
}
