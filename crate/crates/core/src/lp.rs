//! Exact linear programming for belief rationalization.
//!
//! The elimination engine repeatedly asks: is there a *full-support* belief
//! over states under which a candidate action is weakly optimal? That is a
//! small linear program, and because every other computation in this crate
//! is exact rational arithmetic, the LP is solved exactly too — a dense
//! two-phase simplex over `BigRational` with Bland's anti-cycling rule.
//! Floating-point LP would risk misclassifying knife-edge ties, which are
//! precisely the cases the elimination logic must get right.

use crate::error::{Error, Result};
use crate::rational::Rat;
use num::{One, Signed, Zero};

/// Result of maximizing `c . x` subject to `A x = b`, `x >= 0`.
enum SimplexOutcome {
    Optimal { value: Rat, x: Vec<Rat> },
    Infeasible,
    Unbounded,
}

/// Dense two-phase primal simplex with Bland's rule; `b` must be
/// nonnegative. Exact and deterministic.
fn simplex_max(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> SimplexOutcome {
    let rows = a.len();
    let cols = c.len();
    debug_assert!(a.iter().all(|row| row.len() == cols));
    debug_assert!(b.iter().all(|v| !v.is_negative()));

    // Tableau with one artificial column per row; artificials form the
    // initial basis.
    let total = cols + rows;
    let mut t: Vec<Vec<Rat>> = (0..rows)
        .map(|r| {
            let mut row: Vec<Rat> = a[r].to_vec();
            row.extend((0..rows).map(|k| if k == r { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    let mut rhs: Vec<Rat> = b.to_vec();
    let mut basis: Vec<usize> = (cols..total).collect();

    // Reduced-cost row for an objective vector, given the current basis.
    let build_obj = |t: &Vec<Vec<Rat>>, rhs: &Vec<Rat>, basis: &Vec<usize>, full_c: &[Rat]| {
        let mut obj: Vec<Rat> = full_c.to_vec();
        let mut value = Rat::zero();
        for (r, &bcol) in basis.iter().enumerate() {
            let cb = full_c[bcol].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..total {
                let delta = &cb * &t[r][j];
                obj[j] -= delta;
            }
            value += cb * &rhs[r];
        }
        (obj, value)
    };

    let pivot = |t: &mut Vec<Vec<Rat>>,
                 rhs: &mut Vec<Rat>,
                 basis: &mut Vec<usize>,
                 obj: &mut Vec<Rat>,
                 value: &mut Rat,
                 row: usize,
                 col: usize| {
        let p = t[row][col].clone();
        for v in t[row].iter_mut() {
            *v /= &p;
        }
        rhs[row] /= &p;
        for r in 0..t.len() {
            if r == row || t[r][col].is_zero() {
                continue;
            }
            let f = t[r][col].clone();
            for j in 0..t[r].len() {
                let delta = &f * &t[row][j];
                t[r][j] -= delta;
            }
            let delta = &f * &rhs[row];
            rhs[r] -= delta;
        }
        if !obj[col].is_zero() {
            let f = obj[col].clone();
            for j in 0..obj.len() {
                let delta = &f * &t[row][j];
                obj[j] -= delta;
            }
            *value += f * &rhs[row];
        }
        basis[row] = col;
    };

    // Run Bland-rule iterations until no reduced cost is positive among the
    // allowed columns. Returns false when the program is unbounded.
    let run = |t: &mut Vec<Vec<Rat>>,
               rhs: &mut Vec<Rat>,
               basis: &mut Vec<usize>,
               obj: &mut Vec<Rat>,
               value: &mut Rat,
               allowed: usize| {
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j].is_positive()) else {
                return true;
            };
            let mut leave: Option<usize> = None;
            let mut best: Option<Rat> = None;
            for r in 0..t.len() {
                if t[r][enter].is_positive() {
                    let ratio = &rhs[r] / &t[r][enter];
                    let better = match &best {
                        None => true,
                        Some(cur) => {
                            ratio < *cur || (ratio == *cur && basis[r] < basis[leave.unwrap()])
                        }
                    };
                    if better {
                        best = Some(ratio);
                        leave = Some(r);
                    }
                }
            }
            let Some(row) = leave else {
                return false;
            };
            pivot(t, rhs, basis, obj, value, row, enter);
        }
    };

    // Phase 1: maximize minus the artificial mass.
    let mut phase1_c = vec![Rat::zero(); total];
    for slot in phase1_c.iter_mut().skip(cols) {
        *slot = -Rat::one();
    }
    let (mut obj, mut value) = build_obj(&t, &rhs, &basis, &phase1_c);
    if !run(&mut t, &mut rhs, &mut basis, &mut obj, &mut value, total) {
        return SimplexOutcome::Unbounded; // cannot happen: phase-1 objective is bounded
    }
    if !value.is_zero() {
        return SimplexOutcome::Infeasible;
    }
    // Drive leftover artificials out of the basis; rows that cannot pivot
    // on a structural column are redundant and get dropped.
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= cols {
            if let Some(col) = (0..cols).find(|&j| !t[r][j].is_zero()) {
                pivot(&mut t, &mut rhs, &mut basis, &mut obj, &mut value, r, col);
                r += 1;
            } else {
                t.remove(r);
                rhs.remove(r);
                basis.remove(r);
            }
        } else {
            r += 1;
        }
    }

    // Phase 2 on the structural columns only.
    let mut phase2_c = vec![Rat::zero(); total];
    phase2_c[..cols].clone_from_slice(c);
    let (mut obj, mut value) = build_obj(&t, &rhs, &basis, &phase2_c);
    if !run(&mut t, &mut rhs, &mut basis, &mut obj, &mut value, cols) {
        return SimplexOutcome::Unbounded;
    }
    let mut x = vec![Rat::zero(); cols];
    for (r, &bcol) in basis.iter().enumerate() {
        if bcol < cols {
            x[bcol] = rhs[r].clone();
        }
    }
    SimplexOutcome::Optimal { value, x }
}

/// Search for a belief with strictly positive probability on every state
/// under which `candidate` earns at least as much as every other column of
/// `payoffs`. Rows are states, columns are actions; `payoffs[s][m]` is the
/// payoff of action `m` in state `s`.
///
/// Returns the most-interior witness (the belief maximizing its minimum
/// coordinate's slack), or `None` when no full-support belief works — in
/// particular when the candidate is weakly dominated with a strict loss in
/// some state.
///
/// The program: writing each probability as `mu_s + t` with `mu, t >= 0`,
/// maximize `t` subject to the probabilities summing to one and the
/// candidate's advantage over each alternative being nonnegative in
/// expectation. Full-support witnesses exist exactly when the optimum has
/// `t > 0`.
pub fn rationalizing_belief(payoffs: &[Vec<Rat>], candidate: usize) -> Result<Option<Vec<Rat>>> {
    let states = payoffs.len();
    if states == 0 {
        return Err(Error::LpFailure("no states".into()));
    }
    let actions = payoffs[0].len();
    if payoffs.iter().any(|row| row.len() != actions) {
        return Err(Error::LpFailure("ragged payoff matrix".into()));
    }
    if candidate >= actions {
        return Err(Error::LpFailure(format!(
            "candidate {candidate} out of range ({actions} actions)"
        )));
    }
    let uniform = || vec![Rat::new(1.into(), (states as u64).into()); states];
    if actions == 1 {
        return Ok(Some(uniform()));
    }

    // Columns: mu_1..mu_S, t, then one surplus variable per alternative.
    let alts: Vec<usize> = (0..actions).filter(|&m| m != candidate).collect();
    let cols = states + 1 + alts.len();
    let mut a: Vec<Vec<Rat>> = Vec::with_capacity(1 + alts.len());
    let mut b: Vec<Rat> = Vec::with_capacity(1 + alts.len());

    let mut norm = vec![Rat::zero(); cols];
    for slot in norm.iter_mut().take(states) {
        *slot = Rat::one();
    }
    norm[states] = Rat::from_integer((states as u64).into());
    a.push(norm);
    b.push(Rat::one());

    for (k, &alt) in alts.iter().enumerate() {
        let mut row = vec![Rat::zero(); cols];
        let mut dsum = Rat::zero();
        for s in 0..states {
            let d = &payoffs[s][candidate] - &payoffs[s][alt];
            dsum += &d;
            row[s] = d;
        }
        row[states] = dsum;
        row[states + 1 + k] = -Rat::one();
        a.push(row);
        b.push(Rat::zero());
    }

    let mut c = vec![Rat::zero(); cols];
    c[states] = Rat::one();

    match simplex_max(&a, &b, &c) {
        SimplexOutcome::Optimal { value, x } if value.is_positive() => {
            let t = &x[states];
            let belief: Vec<Rat> = (0..states).map(|s| &x[s] + t).collect();
            debug_assert!(belief.iter().sum::<Rat>().is_one());
            Ok(Some(belief))
        }
        SimplexOutcome::Optimal { .. } | SimplexOutcome::Infeasible => Ok(None),
        SimplexOutcome::Unbounded => Err(Error::LpFailure(
            "normalization left the program unbounded".into(),
        )),
    }
}

/// Whether any full-support belief over states makes `candidate` weakly
/// optimal. See [`rationalizing_belief`] for the construction.
pub fn exists_full_support_rationalizing_belief(
    payoffs: &[Vec<Rat>],
    candidate: usize,
) -> Result<bool> {
    Ok(rationalizing_belief(payoffs, candidate)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn matrix(rows: &[&[i64]]) -> Vec<Vec<Rat>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| rat(v, 1)).collect())
            .collect()
    }

    #[test]
    fn single_state_comparisons() {
        assert!(exists_full_support_rationalizing_belief(&matrix(&[&[5, 3]]), 0).unwrap());
        assert!(!exists_full_support_rationalizing_belief(&matrix(&[&[3, 5]]), 0).unwrap());
    }

    #[test]
    fn trade_off_across_states() {
        // Candidate wins in state 1, loses in state 2: the even belief
        // rationalizes it.
        let payoffs = matrix(&[&[2, 0], &[0, 1]]);
        let witness = rationalizing_belief(&payoffs, 0).unwrap().unwrap();
        let expected: Vec<Rat> = vec![rat(1, 2), rat(1, 2)];
        assert_eq!(witness, expected);
    }

    #[test]
    fn weak_domination_with_full_support_fails() {
        // The alternative ties in state 1 and strictly wins in state 2, so
        // any belief with mass on state 2 rejects the candidate.
        let payoffs = matrix(&[&[1, 1], &[1, 2]]);
        assert!(!exists_full_support_rationalizing_belief(&payoffs, 0).unwrap());
    }

    #[test]
    fn exact_ties_survive() {
        let payoffs = matrix(&[&[4, 4], &[7, 7]]);
        assert!(exists_full_support_rationalizing_belief(&payoffs, 0).unwrap());
    }

    #[test]
    fn single_action_is_trivially_optimal() {
        let payoffs = matrix(&[&[3], &[9]]);
        let witness = rationalizing_belief(&payoffs, 0).unwrap().unwrap();
        assert_eq!(witness, vec![rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn malformed_inputs_error() {
        assert!(rationalizing_belief(&[], 0).is_err());
        assert!(rationalizing_belief(&matrix(&[&[1, 2]]), 2).is_err());
        let ragged = vec![vec![rat(1, 1)], vec![rat(1, 1), rat(2, 1)]];
        assert!(rationalizing_belief(&ragged, 0).is_err());
    }

    #[test]
    fn knife_edge_fractions_are_exact() {
        // Candidate needs probability of state 1 to be exactly >= 2/3; the
        // maximal-slack witness sits strictly inside.
        let payoffs = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(2, 1)]];
        let witness = rationalizing_belief(&payoffs, 0).unwrap().unwrap();
        assert!(witness[0] >= rat(2, 3));
        assert!(witness[1].is_positive());
        let advantage = &witness[0] - rat(2, 1) * &witness[1];
        assert!(!advantage.is_negative());
    }

    proptest! {
        #[test]
        fn witnesses_verify_and_rejections_resist_sampling(
            states in 1usize..4,
            actions in 2usize..5,
            cells in proptest::collection::vec(-4i64..5, 12),
            candidate_pick in 0usize..5,
        ) {
            let candidate = candidate_pick % actions;
            let payoffs: Vec<Vec<Rat>> = (0..states)
                .map(|s| (0..actions).map(|m| rat(cells[s * actions + m], 1)).collect())
                .collect();
            match rationalizing_belief(&payoffs, candidate).unwrap() {
                Some(belief) => {
                    prop_assert_eq!(belief.len(), states);
                    prop_assert!(belief.iter().all(|p| p.is_positive()));
                    prop_assert!(belief.iter().sum::<Rat>().is_one());
                    let expect = |m: usize| -> Rat {
                        (0..states).map(|s| &belief[s] * &payoffs[s][m]).sum()
                    };
                    let own = expect(candidate);
                    for m in 0..actions {
                        prop_assert!(own >= expect(m));
                    }
                }
                None => {
                    // No sampled full-support belief may rationalize the
                    // candidate either (sound spot check of the "no witness"
                    // branch).
                    let mut state_mix = 1u64;
                    for trial in 0..40u64 {
                        state_mix = state_mix
                            .wrapping_mul(6364136223846793005)
                            .wrapping_add(trial);
                        let raw: Vec<Rat> = (0..states)
                            .map(|s| rat(1 + ((state_mix >> (7 * s)) % 9) as i64, 1))
                            .collect();
                        let total: Rat = raw.iter().sum();
                        let belief: Vec<Rat> = raw.iter().map(|w| w / &total).collect();
                        let expect = |m: usize| -> Rat {
                            (0..states).map(|s| &belief[s] * &payoffs[s][m]).sum()
                        };
                        let own = expect(candidate);
                        prop_assert!(
                            (0..actions).any(|m| expect(m) > own),
                            "sampled belief rationalizes a rejected candidate"
                        );
                    }
                }
            }
        }
    }
}
