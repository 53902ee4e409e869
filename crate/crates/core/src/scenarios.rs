//! Named benchmark scenarios and the on-disk scenario format.
//!
//! Three instances are built in because their elimination runs have been
//! worked out by hand, level by level, and serve as regression anchors:
//!
//! * `example1` — five types, an unknown high type above a four-type band,
//!   and an explicitly injected tail-heavy belief family that makes staying
//!   silent strictly better for the lowest type at level 3.
//! * `three-type-high` — three types with the highest unknown; every type
//!   ends up disclosing the full range.
//! * `three-type-low` — three types with the lowest unknown; every type
//!   ends up sending the bare band, the unknown type hiding behind the
//!   known low type's contract.
//!
//! Scenario files are JSON with 1-based type indices (`min_index = 1` is
//! the lowest type) and rationals written as strings (`"3/10"`, `"50"`).

use serde::{Deserialize, Serialize};

use crate::beliefs::{MarginalBelief, MsgRange};
use crate::error::{Error, Result};
use crate::game::{ExtraFamilySpec, Scenario};
use crate::model::{QuantityGrid, TypeGrid, ValueFunction};
use crate::rational::{Rat, format_fraction, parse_rat, rat, rat_int};

/// Five types on a denominator-100 grid, v(q) = 50q - q^2/4, cap 99, known
/// band the four lowest types. The weight grid cannot express the tail
/// belief (0, 0, 0, 89/91, 2/91), so it rides in as an extra family paired
/// with the band belief (1/20, 3/20, 3/10, 1/2).
pub fn example_one() -> Scenario {
    let grid = TypeGrid::new(100, 5).expect("valid grid");
    let value = ValueFunction::from_quadratic(
        &rat_int(50),
        &rat(1, 4),
        QuantityGrid::new(99).expect("valid cap"),
    );
    let theta_p = MsgRange::new(0, 3).expect("valid band");
    let full = MsgRange::new(0, 4).expect("valid range");
    let tail_family = ExtraFamilySpec {
        label: "tail-heavy reference family".into(),
        marginals: vec![
            (theta_p, vec![rat(1, 20), rat(3, 20), rat(3, 10), rat(1, 2)]),
            (
                full,
                vec![rat(0, 1), rat(0, 1), rat(0, 1), rat(89, 91), rat(2, 91)],
            ),
        ],
    };
    Scenario::new("example1", grid, value, theta_p, 3, 12)
        .expect("fixture is valid")
        .with_extra_families(vec![tail_family])
}

/// The band belief of `example1`, usable on its own for menu solving.
pub fn example_one_band_belief() -> MarginalBelief {
    MarginalBelief::new(
        MsgRange::new(0, 3).expect("valid band"),
        vec![rat(1, 20), rat(3, 20), rat(3, 10), rat(1, 2)],
    )
    .expect("fixture belief is valid")
}

/// Three types, the highest unknown: band {1, 2} of 3 on a denominator-100
/// grid, v(q) = 3.73q - 0.05q^2, cap 30. Marginal values run 3.68 - 0.1q,
/// so first-order quantities sit well inside the cap for every virtual cost
/// the weight grid can produce.
pub fn three_type_high() -> Scenario {
    let grid = TypeGrid::new(100, 3).expect("valid grid");
    let value = ValueFunction::from_quadratic(
        &rat(373, 100),
        &rat(1, 20),
        QuantityGrid::new(30).expect("valid cap"),
    );
    let theta_p = MsgRange::new(0, 1).expect("valid band");
    Scenario::new("three-type-high", grid, value, theta_p, 3, 8).expect("fixture is valid")
}

/// Three types, the lowest unknown: band {2, 3} of 3, v(q) = 5.7q - q^2/4,
/// cap 10. The unknown low type's gain from mimicking the known low type
/// dwarfs the rent it could earn by disclosing itself.
pub fn three_type_low() -> Scenario {
    let grid = TypeGrid::new(100, 3).expect("valid grid");
    let value = ValueFunction::from_quadratic(
        &rat(57, 10),
        &rat(1, 4),
        QuantityGrid::new(10).expect("valid cap"),
    );
    let theta_p = MsgRange::new(1, 2).expect("valid band");
    Scenario::new("three-type-low", grid, value, theta_p, 3, 8).expect("fixture is valid")
}

/// Look up a built-in scenario by its CLI name.
pub fn named(name: &str) -> Option<Scenario> {
    match name {
        "example1" => Some(example_one()),
        "three-type-high" => Some(three_type_high()),
        "three-type-low" => Some(three_type_low()),
        _ => None,
    }
}

pub const NAMED_SCENARIOS: [&str; 3] = ["example1", "three-type-high", "three-type-low"];

/// 1-based inclusive type range, as written in scenario files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RangeSpec {
    pub min_index: usize,
    pub max_index: usize,
}

impl RangeSpec {
    pub fn to_range(self) -> Result<MsgRange> {
        if self.min_index == 0 {
            return Err(Error::InvalidScenario(
                "type indices are 1-based; min_index 0 is invalid".into(),
            ));
        }
        MsgRange::new(self.min_index - 1, self.max_index.saturating_sub(1))
    }

    pub fn from_range(range: MsgRange) -> Self {
        RangeSpec {
            min_index: range.lo() + 1,
            max_index: range.hi() + 1,
        }
    }
}

/// A marginal belief: the message it conditions on and one probability per
/// type of the message.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeliefSpec {
    pub message: RangeSpec,
    pub probs: Vec<String>,
}

impl BeliefSpec {
    pub fn to_marginal(&self) -> Result<MarginalBelief> {
        let message = self.message.to_range()?;
        let probs = self
            .probs
            .iter()
            .map(|s| parse_rat(s))
            .collect::<Result<Vec<Rat>>>()?;
        MarginalBelief::new(message, probs)
    }

    pub fn from_marginal(belief: &MarginalBelief) -> Self {
        let message = belief.message();
        BeliefSpec {
            message: RangeSpec::from_range(message),
            probs: message
                .iter()
                .map(|i| format_fraction(&belief.prob(i)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtraFamilyFile {
    #[serde(default)]
    pub label: Option<String>,
    pub marginals: Vec<BeliefSpec>,
}

/// The value function as written in a scenario file: quadratic
/// `a q - c q^2` with rational coefficients, or an explicit table of values
/// for q = 0..=b.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueFunctionSpec {
    Quadratic { a: String, c: String },
    Table(Vec<String>),
}

fn default_weight_cap() -> u32 {
    3
}

fn default_level_cap() -> u32 {
    12
}

/// On-disk scenario description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub gamma: u64,
    pub m: usize,
    pub b: u64,
    pub value_function: ValueFunctionSpec,
    pub theta_p: RangeSpec,
    #[serde(default = "default_weight_cap")]
    pub weight_cap: u32,
    #[serde(default = "default_level_cap")]
    pub level_cap: u32,
    /// Optional marginal used by menu-only commands.
    #[serde(default)]
    pub belief: Option<BeliefSpec>,
    #[serde(default)]
    pub extra_families: Vec<ExtraFamilyFile>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files always serialize")
    }

    /// Build the runtime scenario plus the optional stand-alone belief.
    pub fn into_scenario(self) -> Result<(Scenario, Option<MarginalBelief>)> {
        let grid = TypeGrid::new(self.gamma, self.m)?;
        let qgrid = QuantityGrid::new(self.b)?;
        let value = match &self.value_function {
            ValueFunctionSpec::Quadratic { a, c } => {
                ValueFunction::from_quadratic(&parse_rat(a)?, &parse_rat(c)?, qgrid)
            }
            ValueFunctionSpec::Table(values) => {
                let parsed = values
                    .iter()
                    .map(|s| parse_rat(s))
                    .collect::<Result<Vec<Rat>>>()?;
                ValueFunction::from_table(parsed, qgrid)?
            }
        };
        let theta_p = self.theta_p.to_range()?;
        let name = self.name.clone().unwrap_or_else(|| "scenario".into());
        let extra = self
            .extra_families
            .iter()
            .enumerate()
            .map(|(i, fam)| {
                let marginals = fam
                    .marginals
                    .iter()
                    .map(|spec| {
                        Ok((
                            spec.message.to_range()?,
                            spec.probs
                                .iter()
                                .map(|s| parse_rat(s))
                                .collect::<Result<Vec<Rat>>>()?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ExtraFamilySpec {
                    label: fam
                        .label
                        .clone()
                        .unwrap_or_else(|| format!("extra family {}", i + 1)),
                    marginals,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let belief = self.belief.as_ref().map(|b| b.to_marginal()).transpose()?;
        let scenario = Scenario::new(name, grid, value, theta_p, self.weight_cap, self.level_cap)?
            .with_extra_families(extra);
        Ok((scenario, belief))
    }

    /// Write a runtime scenario back out. The value function is emitted as
    /// a table, which survives the round trip exactly.
    pub fn from_scenario(scenario: &Scenario, belief: Option<&MarginalBelief>) -> Self {
        let values = (0..=scenario.value.b())
            .map(|q| format_fraction(scenario.value.value(q)))
            .collect();
        ScenarioFile {
            name: Some(scenario.name.clone()),
            gamma: scenario.grid.gamma(),
            m: scenario.grid.len(),
            b: scenario.value.b(),
            value_function: ValueFunctionSpec::Table(values),
            theta_p: RangeSpec::from_range(scenario.theta_p),
            weight_cap: scenario.weight_cap,
            level_cap: scenario.level_cap,
            belief: belief.map(BeliefSpec::from_marginal),
            extra_families: scenario
                .extra_families
                .iter()
                .map(|fam| ExtraFamilyFile {
                    label: Some(fam.label.clone()),
                    marginals: fam
                        .marginals
                        .iter()
                        .map(|(range, probs)| BeliefSpec {
                            message: RangeSpec::from_range(*range),
                            probs: probs.iter().map(format_fraction).collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::menu::{agent_choice, optimal_menu};
    use crate::model::Contract;

    #[test]
    fn example_one_band_menu_matches_hand_computation() {
        let scenario = example_one();
        let menu =
            optimal_menu(&scenario.grid, &scenario.value, &example_one_band_belief()).unwrap();
        assert_eq!(
            menu.contracts(),
            vec![
                Contract::new(98, 376),
                Contract::new(95, 373),
                Contract::new(93, 369),
                Contract::new(90, 360),
            ]
        );
        assert!(menu.robust);
        assert_eq!(menu.row_for(0).unwrap().rent, rat(27898, 100));
    }

    #[test]
    fn example_one_tail_menu_matches_hand_computation() {
        let scenario = example_one();
        let tail = MarginalBelief::new(
            MsgRange::new(0, 4).unwrap(),
            vec![rat(0, 1), rat(0, 1), rat(0, 1), rat(89, 91), rat(2, 91)],
        )
        .unwrap();
        let menu = optimal_menu(&scenario.grid, &scenario.value, &tail).unwrap();
        assert_eq!(
            menu.contracts(),
            vec![Contract::new(92, 369), Contract::new(1, 5)]
        );
        // The lowest type, unseen by this belief, would cross-pick the big
        // contract...
        let choice = agent_choice(&menu.contracts(), scenario.grid.theta(0));
        assert_eq!(choice.utility, rat(27792, 100));
        assert_eq!(choice.maximizers, vec![Contract::new(92, 369)]);
        // ...while the known high type earns its usual rent.
        assert_eq!(menu.row_for(3).unwrap().rent, rat(192, 100));
    }

    #[test]
    fn named_lookup_round_trips() {
        for name in NAMED_SCENARIOS {
            let scenario = named(name).unwrap();
            assert_eq!(scenario.name, name);
        }
        assert!(named("unknown").is_none());
    }

    #[test]
    fn scenario_file_round_trips_through_json() {
        let text = r#"{
            "name": "roundtrip",
            "gamma": 10,
            "m": 2,
            "b": 4,
            "value_function": {"quadratic": {"a": "16/5", "c": "1/4"}},
            "theta_p": {"min_index": 1, "max_index": 1},
            "weight_cap": 2,
            "level_cap": 9
        }"#;
        let file = ScenarioFile::from_json(text).unwrap();
        let (scenario, belief) = file.into_scenario().unwrap();
        assert!(belief.is_none());
        assert_eq!(scenario.grid.gamma(), 10);
        assert_eq!(scenario.theta_p, MsgRange::new(0, 0).unwrap());
        assert_eq!(scenario.weight_cap, 2);
        assert_eq!(scenario.level_cap, 9);

        let back = ScenarioFile::from_scenario(&scenario, None);
        let (again, _) = ScenarioFile::from_json(&back.to_json())
            .unwrap()
            .into_scenario()
            .unwrap();
        assert_eq!(again.value.value(4), scenario.value.value(4));
        assert_eq!(again.theta_p, scenario.theta_p);
    }

    #[test]
    fn scenario_file_defaults_and_validation() {
        let text = r#"{
            "gamma": 10,
            "m": 2,
            "b": 4,
            "value_function": {"quadratic": {"a": "16/5", "c": "1/4"}},
            "theta_p": {"min_index": 1, "max_index": 2}
        }"#;
        let file = ScenarioFile::from_json(text).unwrap();
        assert_eq!(file.weight_cap, 3);
        assert_eq!(file.level_cap, 12);
        let (scenario, _) = file.into_scenario().unwrap();
        assert_eq!(scenario.name, "scenario");

        // 0-based indexing is a hard error, not a silent shift.
        let bad = r#"{
            "gamma": 10, "m": 2, "b": 4,
            "value_function": {"quadratic": {"a": "16/5", "c": "1/4"}},
            "theta_p": {"min_index": 0, "max_index": 1}
        }"#;
        assert!(matches!(
            ScenarioFile::from_json(bad).unwrap().into_scenario(),
            Err(Error::InvalidScenario(msg)) if msg.contains("1-based")
        ));
    }

    #[test]
    fn fixture_parameters_are_as_documented() {
        let high = three_type_high();
        assert_eq!(high.grid.len(), 3);
        assert_eq!(high.value.b(), 30);
        assert_eq!(high.value.forward_diff(0).unwrap(), rat(368, 100));
        assert_eq!(high.theta_p, MsgRange::new(0, 1).unwrap());

        let low = three_type_low();
        assert_eq!(low.value.b(), 10);
        assert_eq!(low.value.forward_diff(0).unwrap(), rat(545, 100));
        assert_eq!(low.theta_p, MsgRange::new(1, 2).unwrap());

        let ex = example_one();
        assert_eq!(ex.grid.len(), 5);
        assert_eq!(ex.extra_families.len(), 1);
    }
}
