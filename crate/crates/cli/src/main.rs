//! Command-line front end for the exact screening library.
//!
//! Five subcommands cover the library's entry points: `solve-menu` prices a
//! fixed belief, `oracle-check` cross-validates the closed form against
//! brute-force enumeration, `rationalize` runs the disclosure elimination to
//! its fixed point and grades the applicable verdict, `reproduce` re-runs a
//! built-in benchmark against its recorded outcome, and `suite` executes
//! every randomized invariant batch at its gate size.
//!
//! Output is deterministic: identical scenario, seed, and weight-cap inputs
//! produce byte-identical stdout and artifacts, so runs can be diffed.

#![deny(warnings)]

mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result, anyhow, bail};
use clap::{Parser, Subcommand, ValueEnum};

use screenlab_core::beliefs::{MarginalBelief, MsgRange};
use screenlab_core::game::{RunTrace, Scenario, run_levels, run_rationalizability};
use screenlab_core::menu::{
    MenuSolution, TieRule, agent_choice, expected_principal_payoff, optimal_menu,
    verify_constraints,
};
use screenlab_core::model::{Contract, QuantityGrid, TypeGrid, ValueFunction};
use screenlab_core::oracle::brute_force_best_menu;
use screenlab_core::rational::{format_full, rat, rat_int};
use screenlab_core::scenarios::{
    ScenarioFile, example_one, example_one_band_belief, three_type_high, three_type_low,
};
use screenlab_core::suite::{
    DisclosureVerdict, full_disclosure_verdict, oracle_equivalence_suite, run_all,
    withholding_verdict,
};

use report::{Stamp, rat_cells, text_table, write_csv, write_text};

#[derive(Parser)]
#[command(
    name = "screenlab",
    version,
    about = "Exact screening menus and disclosure-game analysis on integer contract grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the profit-maximizing menu for the belief in a scenario file.
    SolveMenu {
        /// Scenario JSON file; must contain a `belief` entry.
        #[arg(long)]
        scenario: PathBuf,
        /// Directory for menu.txt and menu.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate the closed-form solver against brute-force enumeration.
    OracleCheck {
        /// Check one scenario file instead of a seeded random batch.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Number of random small instances in batch mode.
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Seed for batch mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corrupt a solved menu's transfer and verify the check catches it.
        #[arg(long)]
        self_test: bool,
        /// Directory for oracle-check.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the disclosure elimination to its fixed point and grade the
    /// verdict that applies to the scenario's unawareness side.
    Rationalize {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's belief-weight cap W.
        #[arg(long)]
        weights: Option<u32>,
        /// Override the scenario's elimination level cap.
        #[arg(long)]
        levels: Option<u32>,
        /// Directory for trace.txt, allowed.csv, and families.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a built-in benchmark and verify its recorded outcome.
    Reproduce {
        target: Target,
        /// Directory for reproduce.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every randomized invariant suite at its gate size.
    Suite {
        /// Master seed; each suite derives its own sub-seed from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for suite.txt and suite.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// Five types, four known: a tail-heavy belief keeps silence strictly
    /// better for the lowest type at level 3.
    Example1,
    /// Three types, the principal unaware of the highest: full disclosure.
    ThreeTypeHigh,
    /// Three types, the principal unaware of the lowest: universal
    /// withholding with bunching at the band's lowest contract.
    ThreeTypeLow,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SolveMenu { scenario, out } => cmd_solve_menu(&scenario, out.as_deref()),
        Command::OracleCheck {
            scenario,
            count,
            seed,
            self_test,
            out,
        } => cmd_oracle_check(scenario.as_deref(), count, seed, self_test, out.as_deref()),
        Command::Rationalize {
            scenario,
            weights,
            levels,
            out,
        } => cmd_rationalize(&scenario, weights, levels, out.as_deref()),
        Command::Reproduce { target, out } => cmd_reproduce(target, out.as_deref()),
        Command::Suite { seed, out } => cmd_suite(seed, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

// ---------------------------------------------------------------------------
// Shared rendering helpers.

fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario file {}", path.display()))?;
    ScenarioFile::from_json(&text)
        .with_context(|| format!("parsing scenario file {}", path.display()))
}

fn scenario_summary(s: &Scenario) -> String {
    format!(
        "scenario: {}\n\
         types: m = {}, gamma = {} (type j costs j - 1/{} per unit)\n\
         quantities: 0..={}\n\
         known band: {}\n",
        s.name,
        s.grid.len(),
        s.grid.gamma(),
        s.grid.gamma(),
        s.value.b(),
        s.theta_p
    )
}

fn belief_line(belief: &MarginalBelief) -> String {
    let probs: Vec<String> = belief
        .message()
        .iter()
        .map(|i| format_full(&belief.prob(i)))
        .collect();
    format!("belief on {}: {}", belief.message(), probs.join(", "))
}

fn contracts_line(contracts: &[Contract]) -> String {
    let parts: Vec<String> = contracts.iter().map(Contract::to_string).collect();
    parts.join(", ")
}

fn menu_table(menu: &MenuSolution, grid: &TypeGrid) -> String {
    let rows: Vec<Vec<String>> = menu
        .rows
        .iter()
        .map(|r| {
            let candidates: Vec<String> =
                r.candidates.values().iter().map(u64::to_string).collect();
            vec![
                (r.type_index + 1).to_string(),
                format_full(grid.theta(r.type_index)),
                format_full(&r.virtual_cost),
                format!("{{{}}}", candidates.join(", ")),
                r.contract.q.to_string(),
                r.contract.t.to_string(),
                format_full(&r.rent),
            ]
        })
        .collect();
    text_table(
        &[
            "type",
            "theta",
            "virtual cost",
            "candidates",
            "q",
            "t",
            "rent",
        ],
        &rows,
    )
}

const MENU_CSV_HEADERS: &[&str] = &[
    "type",
    "theta",
    "theta_decimal",
    "virtual_cost",
    "virtual_cost_decimal",
    "candidates",
    "quantity",
    "transfer",
    "rent",
    "rent_decimal",
];

fn menu_csv_rows(menu: &MenuSolution, grid: &TypeGrid) -> Vec<Vec<String>> {
    menu.rows
        .iter()
        .map(|r| {
            let (theta_f, theta_d) = rat_cells(grid.theta(r.type_index));
            let (vc_f, vc_d) = rat_cells(&r.virtual_cost);
            let (rent_f, rent_d) = rat_cells(&r.rent);
            let candidates: Vec<String> =
                r.candidates.values().iter().map(u64::to_string).collect();
            vec![
                (r.type_index + 1).to_string(),
                theta_f,
                theta_d,
                vc_f,
                vc_d,
                candidates.join(" "),
                r.contract.q.to_string(),
                r.contract.t.to_string(),
                rent_f,
                rent_d,
            ]
        })
        .collect()
}

/// Append a `check:` line; failed checks also land in `failures` so the
/// command can exit nonzero after printing everything it knows.
fn check(body: &mut String, failures: &mut Vec<String>, label: &str, ok: bool) {
    body.push_str(&format!(
        "check: {label}: {}\n",
        if ok { "ok" } else { "FAIL" }
    ));
    if !ok {
        failures.push(label.to_string());
    }
}

// ---------------------------------------------------------------------------
// solve-menu

fn cmd_solve_menu(path: &Path, out: Option<&Path>) -> Result<()> {
    let (scenario, belief) = load_scenario(path)?.into_scenario()?;
    let belief = belief.ok_or_else(|| {
        anyhow!(
            "scenario `{}` has no `belief` entry; solve-menu prices a single fixed belief",
            path.display()
        )
    })?;
    let menu = optimal_menu(&scenario.grid, &scenario.value, &belief)?;
    verify_constraints(&menu, &scenario.grid)?;
    let payoff = expected_principal_payoff(
        &menu.contracts(),
        &belief,
        &scenario.grid,
        &scenario.value,
        TieRule::Adversarial,
    )?;

    let mut body = scenario_summary(&scenario);
    body += &format!("{}\n\n", belief_line(&belief));
    body += &menu_table(&menu, &scenario.grid);
    body += "\nconstraints: participation and incentives hold for every supported type\n";
    body += &format!(
        "selection: {}\n",
        if menu.robust {
            "unique optimum (every candidate set is a singleton)"
        } else {
            "one optimal selection among several (a candidate set has two quantities)"
        }
    );
    body += &format!(
        "expected principal payoff (ties against the principal): {}\n",
        format_full(&payoff)
    );
    print!("{body}");

    if let Some(dir) = out {
        let stamp = Stamp::new("solve-menu").scenario(&scenario.name);
        let txt = write_text(dir, "menu.txt", &stamp, &body)?;
        let csv = write_csv(
            dir,
            "menu.csv",
            &stamp,
            MENU_CSV_HEADERS,
            &menu_csv_rows(&menu, &scenario.grid),
        )?;
        println!("wrote {}", txt.display());
        println!("wrote {}", csv.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle-check

fn cmd_oracle_check(
    scenario: Option<&Path>,
    count: usize,
    seed: u64,
    self_test: bool,
    out: Option<&Path>,
) -> Result<()> {
    if self_test {
        return oracle_self_test(out);
    }
    if let Some(path) = scenario {
        return oracle_single(path, out);
    }
    let report = oracle_equivalence_suite(seed, count)?;
    let mut body = format!("seed: {seed}\n{}\n", report.summary());
    for violation in &report.violations {
        body += &format!("  {violation}\n");
    }
    print!("{body}");
    if let Some(dir) = out {
        let stamp = Stamp::new(format!("oracle-check --count {count}")).seed(seed);
        let txt = write_text(dir, "oracle-check.txt", &stamp, &body)?;
        println!("wrote {}", txt.display());
    }
    if !report.passed() {
        bail!(
            "closed form and enumeration disagree on {} of {} cases",
            report.violations.len(),
            report.cases
        );
    }
    Ok(())
}

fn oracle_single(path: &Path, out: Option<&Path>) -> Result<()> {
    let (scenario, belief) = load_scenario(path)?.into_scenario()?;
    let belief = belief.ok_or_else(|| {
        anyhow!(
            "scenario `{}` has no `belief` entry; oracle-check compares menus for a fixed belief",
            path.display()
        )
    })?;
    let menu = optimal_menu(&scenario.grid, &scenario.value, &belief)?;
    let contracts = menu.contracts();
    let oracle = brute_force_best_menu(&scenario.grid, &scenario.value, &belief, contracts.len())?;
    let payoff = expected_principal_payoff(
        &contracts,
        &belief,
        &scenario.grid,
        &scenario.value,
        TieRule::Adversarial,
    )?;
    let matched = payoff == oracle.best_value && oracle.contains_menu(&contracts);

    let mut body = scenario_summary(&scenario);
    body += &format!("{}\n\n", belief_line(&belief));
    body += &format!(
        "closed form: {} guaranteeing {}\n",
        contracts_line(&contracts),
        format_full(&payoff)
    );
    body += &format!(
        "enumeration: {} menus scored, optimum {}\n",
        oracle.menus_scored,
        format_full(&oracle.best_value)
    );
    body += &format!("agreement: {}\n", if matched { "yes" } else { "NO" });
    print!("{body}");
    if let Some(dir) = out {
        let stamp = Stamp::new("oracle-check").scenario(&scenario.name);
        let txt = write_text(dir, "oracle-check.txt", &stamp, &body)?;
        println!("wrote {}", txt.display());
    }
    if !matched {
        bail!(
            "closed-form menu does not attain the enumerated optimum: {} vs {}",
            format_full(&payoff),
            format_full(&oracle.best_value)
        );
    }
    Ok(())
}

/// Solve a small fixture both ways, then corrupt one transfer and verify the
/// comparison flags the corrupted menu. Exits nonzero if the fault slips
/// through, i.e. if the differential check has lost its teeth.
fn oracle_self_test(out: Option<&Path>) -> Result<()> {
    let grid = TypeGrid::new(10, 2)?;
    let value = ValueFunction::from_quadratic(&rat_int(4), &rat(1, 4), QuantityGrid::new(8)?);
    let belief = MarginalBelief::uniform(MsgRange::new(0, 1)?);
    let menu = optimal_menu(&grid, &value, &belief)?;
    let contracts = menu.contracts();
    let oracle = brute_force_best_menu(&grid, &value, &belief, contracts.len())?;
    let honest =
        expected_principal_payoff(&contracts, &belief, &grid, &value, TieRule::Adversarial)?;
    if honest != oracle.best_value || !oracle.contains_menu(&contracts) {
        bail!(
            "self-test fixture is broken: closed form guarantees {} but enumeration finds {}",
            format_full(&honest),
            format_full(&oracle.best_value)
        );
    }

    let mut corrupted = contracts.clone();
    corrupted[0].t += 1;
    let corrupted_payoff =
        expected_principal_payoff(&corrupted, &belief, &grid, &value, TieRule::Adversarial)?;
    let detected = corrupted_payoff != oracle.best_value || !oracle.contains_menu(&corrupted);

    let mut body = String::from(
        "fixture: two types on gamma = 10, v(q) = 4q - q^2/4 on 0..=8, uniform belief\n",
    );
    body += &format!(
        "closed form: {} guaranteeing {}\n",
        contracts_line(&contracts),
        format_full(&honest)
    );
    body += &format!(
        "enumeration: {} menus scored, optimum {}\n",
        oracle.menus_scored,
        format_full(&oracle.best_value)
    );
    body += &format!(
        "fault injection: raising the first transfer to {} drops the guarantee to {}\n",
        corrupted[0].t,
        format_full(&corrupted_payoff)
    );
    body += &format!("fault detected: {}\n", if detected { "yes" } else { "NO" });
    print!("{body}");
    if let Some(dir) = out {
        let stamp = Stamp::new("oracle-check --self-test");
        let txt = write_text(dir, "oracle-check.txt", &stamp, &body)?;
        println!("wrote {}", txt.display());
    }
    if !detected {
        bail!(
            "injected fault was NOT detected; the differential check cannot see a corrupted menu"
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// rationalize and reproduce

/// Which side of the type grid the principal is unaware of; decides the
/// verdict a fixed point is graded against.
enum Side {
    /// The band covers every type: nothing to disclose.
    Full,
    /// Unknown types above the band only.
    High,
    /// Unknown types below the band only.
    Low,
    /// Unknown types on both sides: no one-sided verdict applies.
    TwoSided,
}

fn side(scenario: &Scenario) -> Side {
    match (
        scenario.theta_p.lo() == 0,
        scenario.theta_p.hi() == scenario.grid.len() - 1,
    ) {
        (true, true) => Side::Full,
        (true, false) => Side::High,
        (false, true) => Side::Low,
        (false, false) => Side::TwoSided,
    }
}

fn verdict_lines(name: &str, meaning: &str, verdict: &DisclosureVerdict) -> String {
    let mut text = format!(
        "verdict: {name} ({meaning}): {}\n",
        if verdict.violations.is_empty() {
            "HOLDS"
        } else {
            "VIOLATED"
        }
    );
    for line in &verdict.violations {
        text += &format!("  violation: {line}\n");
    }
    text
}

/// Grade the fixed point against the verdict for its unawareness side.
/// Returns the rendered section plus the violation count (zero when no
/// verdict applies).
fn verdict_section(trace: &RunTrace) -> Result<(String, usize)> {
    Ok(match side(&trace.scenario) {
        Side::Full => (
            "verdict: the band already covers every type; no disclosure prediction applies\n"
                .into(),
            0,
        ),
        Side::TwoSided => (
            "verdict: the band is unaware on both sides; no one-sided prediction applies\n".into(),
            0,
        ),
        Side::High => {
            let verdict = full_disclosure_verdict(trace)?;
            let n = verdict.violations.len();
            (
                verdict_lines(
                    "full disclosure",
                    "every type above the band keeps only the whole tree",
                    &verdict,
                ),
                n,
            )
        }
        Side::Low => {
            let verdict = withholding_verdict(trace)?;
            let n = verdict.violations.len();
            (
                verdict_lines(
                    "universal withholding",
                    "every type keeps only the known band; below-band types bunch",
                    &verdict,
                ),
                n,
            )
        }
    })
}

fn allowed_line(trace: &RunTrace, tree: MsgRange, type_index: usize) -> Result<String> {
    let allowed = trace.allowed(tree, type_index)?;
    let list: Vec<String> = allowed.iter().map(MsgRange::to_string).collect();
    Ok(format!(
        "  type {} (theta {}): {}\n",
        type_index + 1,
        format_full(trace.scenario.grid.theta(type_index)),
        list.join(", ")
    ))
}

/// Total count of (tree, type, message) triples still allowed at a level —
/// the monotone quantity the elimination shrinks.
fn allowed_slots(trace: &RunTrace, level: u32) -> Result<usize> {
    let snapshot = trace
        .snapshot(level)
        .ok_or_else(|| anyhow!("no snapshot at level {level}"))?;
    let mut total = 0;
    for (tree_id, tree) in trace.lattice.messages().iter().enumerate() {
        for type_index in tree.iter() {
            total += snapshot.agent.allowed(tree_id, type_index)?.len();
        }
    }
    Ok(total)
}

fn families_alive(trace: &RunTrace, level: u32) -> String {
    match &trace.snapshot(level).expect("snapshot exists").principal {
        screenlab_core::game::PrincipalState::Unconstrained => "unconstrained".into(),
        screenlab_core::game::PrincipalState::Families(ids) => ids.len().to_string(),
    }
}

/// The full run report. `everything` switches from the stdout digest (full
/// tree only, capped family list, event counts) to the artifact version with
/// every tree, family, and event line.
fn rationalize_report(trace: &RunTrace, everything: bool) -> Result<String> {
    let scenario = &trace.scenario;
    let mut body = scenario_summary(scenario);
    body += &format!(
        "weight cap: W = {}, level cap: {}\n",
        scenario.weight_cap, scenario.level_cap
    );
    if !scenario.extra_families.is_empty() {
        body += &format!("extra belief families: {}\n", scenario.extra_families.len());
    }
    let messages: Vec<String> = trace
        .lattice
        .messages()
        .iter()
        .map(MsgRange::to_string)
        .collect();
    body += &format!("messages: {}\n", messages.join(", "));

    body += "\nlevel  families       allowed-slots\n";
    for snapshot in &trace.snapshots {
        body += &format!(
            "{:<5}  {:<13}  {}\n",
            snapshot.level,
            families_alive(trace, snapshot.level),
            allowed_slots(trace, snapshot.level)?
        );
    }
    match trace.converged_at {
        Some(level) => body += &format!("fixed point at level {level}\n"),
        None => body += "no fixed point within the level cap\n",
    }

    let mut by_level: Vec<(u32, usize)> = Vec::new();
    for event in &trace.events {
        match by_level.last_mut() {
            Some((level, n)) if *level == event.level => *n += 1,
            _ => by_level.push((event.level, 1)),
        }
    }
    if everything {
        body += "\nevents:\n";
        for event in &trace.events {
            body += &format!("  level {}: {}\n", event.level, event.detail);
        }
    } else if !by_level.is_empty() {
        let parts: Vec<String> = by_level
            .iter()
            .map(|(level, n)| format!("level {level}: {n}"))
            .collect();
        body += &format!("events by level: {}\n", parts.join(", "));
    }

    let survivors = trace.surviving_families();
    body += &format!("\nsurviving belief families: {}\n", survivors.len());
    let shown = if everything {
        survivors.len()
    } else {
        survivors.len().min(20)
    };
    let full_id = trace.lattice.full_id();
    for entry in &survivors[..shown] {
        body += &format!(
            "  family {} ({}): full-message support {}\n",
            entry.id,
            entry.family.note,
            entry.support(full_id)?
        );
    }
    if shown < survivors.len() {
        body += &format!("  ... and {} more\n", survivors.len() - shown);
    }

    let full = trace.lattice.full();
    if everything {
        for &tree in trace.lattice.messages() {
            body += &format!("\nallowed messages in tree {tree}:\n");
            for type_index in tree.iter() {
                body += &allowed_line(trace, tree, type_index)?;
            }
        }
    } else {
        body += &format!("\nallowed messages in the full tree {full}:\n");
        for type_index in full.iter() {
            body += &allowed_line(trace, full, type_index)?;
        }
    }

    body += "\n";
    body += &verdict_section(trace)?.0;
    Ok(body)
}

const ALLOWED_CSV_HEADERS: &[&str] = &["tree", "type", "theta", "theta_decimal", "allowed"];

fn allowed_csv_rows(trace: &RunTrace) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for &tree in trace.lattice.messages() {
        for type_index in tree.iter() {
            let (theta_f, theta_d) = rat_cells(trace.scenario.grid.theta(type_index));
            let allowed: Vec<String> = trace
                .allowed(tree, type_index)?
                .iter()
                .map(MsgRange::to_string)
                .collect();
            rows.push(vec![
                tree.to_string(),
                (type_index + 1).to_string(),
                theta_f,
                theta_d,
                allowed.join(" "),
            ]);
        }
    }
    Ok(rows)
}

const FAMILIES_CSV_HEADERS: &[&str] = &["family", "label", "message", "support"];

fn families_csv_rows(trace: &RunTrace) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for entry in trace.surviving_families() {
        for (id, message) in trace.lattice.messages().iter().enumerate() {
            rows.push(vec![
                entry.id.to_string(),
                entry.family.note.clone(),
                message.to_string(),
                entry.support(id)?.to_string(),
            ]);
        }
    }
    Ok(rows)
}

fn cmd_rationalize(
    path: &Path,
    weights: Option<u32>,
    levels: Option<u32>,
    out: Option<&Path>,
) -> Result<()> {
    let mut file = load_scenario(path)?;
    if let Some(w) = weights {
        file.weight_cap = w;
    }
    if let Some(l) = levels {
        file.level_cap = l;
    }
    let (scenario, _) = file.into_scenario()?;
    let trace = run_rationalizability(&scenario)?;

    let body = rationalize_report(&trace, false)?;
    print!("{body}");
    if let Some(dir) = out {
        let mut command = String::from("rationalize");
        if let Some(w) = weights {
            command += &format!(" --weights {w}");
        }
        if let Some(l) = levels {
            command += &format!(" --levels {l}");
        }
        let stamp = Stamp::new(command).scenario(&scenario.name);
        let txt = write_text(dir, "trace.txt", &stamp, &rationalize_report(&trace, true)?)?;
        let allowed = write_csv(
            dir,
            "allowed.csv",
            &stamp,
            ALLOWED_CSV_HEADERS,
            &allowed_csv_rows(&trace)?,
        )?;
        let families = write_csv(
            dir,
            "families.csv",
            &stamp,
            FAMILIES_CSV_HEADERS,
            &families_csv_rows(&trace)?,
        )?;
        println!("wrote {}", txt.display());
        println!("wrote {}", allowed.display());
        println!("wrote {}", families.display());
    }

    let (_, violations) = verdict_section(&trace)?;
    if violations > 0 {
        bail!("the applicable verdict is violated in {violations} place(s); see the report above");
    }
    Ok(())
}

fn cmd_reproduce(target: Target, out: Option<&Path>) -> Result<()> {
    let (name, body, failures) = match target {
        Target::Example1 => {
            let (body, failures) = reproduce_example_one()?;
            ("example1", body, failures)
        }
        Target::ThreeTypeHigh => {
            let (body, failures) = reproduce_three_type_high()?;
            ("three-type-high", body, failures)
        }
        Target::ThreeTypeLow => {
            let (body, failures) = reproduce_three_type_low()?;
            ("three-type-low", body, failures)
        }
    };
    print!("{body}");
    if let Some(dir) = out {
        let stamp = Stamp::new(format!("reproduce {name}")).scenario(name);
        let txt = write_text(dir, "reproduce.txt", &stamp, &body)?;
        println!("wrote {}", txt.display());
    }
    if !failures.is_empty() {
        bail!(
            "{} recorded outcome(s) did not reproduce: {}",
            failures.len(),
            failures.join("; ")
        );
    }
    Ok(())
}

fn reproduce_example_one() -> Result<(String, Vec<String>)> {
    let scenario = example_one();
    let belief = example_one_band_belief();
    let mut body = scenario_summary(&scenario);
    let mut failures = Vec::new();

    body += "\nmenu under the known-band belief:\n";
    let menu = optimal_menu(&scenario.grid, &scenario.value, &belief)?;
    body += &menu_table(&menu, &scenario.grid);
    let expected = [(98, 376), (95, 373), (93, 369), (90, 360)].map(|(q, t)| Contract::new(q, t));
    check(
        &mut body,
        &mut failures,
        "band menu is (98, 376), (95, 373), (93, 369), (90, 360)",
        menu.contracts() == expected.to_vec(),
    );
    let silent = menu
        .row_for(0)
        .map(|r| r.rent.clone())
        .unwrap_or_else(|| rat_int(-1));
    body += &format!(
        "lowest type's rent when staying silent: {}\n",
        format_full(&silent)
    );
    check(
        &mut body,
        &mut failures,
        "silent rent is 13949/50 (= 278.98)",
        silent == rat(13949, 50),
    );

    let full = MsgRange::new(0, scenario.grid.len() - 1)?;
    let tail = MarginalBelief::new(
        full,
        vec![rat_int(0), rat_int(0), rat_int(0), rat(89, 91), rat(2, 91)],
    )?;
    body += "\nmenu if the agent discloses everything and the principal adopts\nthe tail-heavy belief:\n";
    let tail_menu = optimal_menu(&scenario.grid, &scenario.value, &tail)?;
    body += &menu_table(&tail_menu, &scenario.grid);
    let quantities: Vec<u64> = tail_menu.rows.iter().map(|r| r.contract.q).collect();
    check(
        &mut body,
        &mut failures,
        "tail-heavy menu quantities are (92, 1)",
        quantities == vec![92, 1],
    );
    let cross = agent_choice(&tail_menu.contracts(), scenario.grid.theta(0)).utility;
    body += &format!(
        "lowest type's best payoff against that menu: {}\n",
        format_full(&cross)
    );
    check(
        &mut body,
        &mut failures,
        "disclosure payoff is 6948/25 (= 277.92), less than staying silent",
        cross == rat(6948, 25) && cross < silent,
    );

    let trace = run_levels(&scenario, 3)?;
    let keeps = trace
        .allowed_at_level(3, full, 0)?
        .contains(&scenario.theta_p);
    body += &format!(
        "\nafter 3 elimination rounds, staying silent is still allowed for the\nlowest type: {}\n",
        if keeps { "yes" } else { "NO" }
    );
    check(
        &mut body,
        &mut failures,
        "the known band survives level 3 for the lowest type",
        keeps,
    );
    Ok((body, failures))
}

fn reproduce_three_type_high() -> Result<(String, Vec<String>)> {
    let scenario = three_type_high();
    let trace = run_rationalizability(&scenario)?;
    let verdict = full_disclosure_verdict(&trace)?;
    let mut body = scenario_summary(&scenario);
    let mut failures = Vec::new();

    body += &format!(
        "\nfixed point at level {} with {} surviving belief families\n",
        verdict.converged_at, verdict.surviving_families
    );
    let full = trace.lattice.full();
    body += &format!("\nallowed messages in the full tree {full}:\n");
    for type_index in full.iter() {
        body += &allowed_line(&trace, full, type_index)?;
    }
    body += "\n";
    body += &verdict_lines(
        "full disclosure",
        "every type above the band keeps only the whole tree",
        &verdict,
    );
    check(
        &mut body,
        &mut failures,
        "the unknown high type reveals the whole tree",
        verdict.violations.is_empty(),
    );
    Ok((body, failures))
}

fn reproduce_three_type_low() -> Result<(String, Vec<String>)> {
    let scenario = three_type_low();
    let trace = run_rationalizability(&scenario)?;
    let verdict = withholding_verdict(&trace)?;
    let band = scenario.theta_p;
    let mut body = scenario_summary(&scenario);
    let mut failures = Vec::new();

    body += &format!(
        "\nfixed point at level {} with {} surviving belief families\n",
        verdict.converged_at, verdict.surviving_families
    );
    let full = trace.lattice.full();
    body += &format!("\nallowed messages in the full tree {full}:\n");
    for type_index in full.iter() {
        body += &allowed_line(&trace, full, type_index)?;
    }

    let band_id = trace
        .lattice
        .id_of(band)
        .ok_or_else(|| anyhow!("the band is not a message of the lattice"))?;
    let survivors = trace.surviving_families();
    let entry = survivors
        .first()
        .ok_or_else(|| anyhow!("no belief family survived"))?;
    body += &format!(
        "\nmenu posted on the band {band} under surviving family {}:\n",
        entry.id
    );
    body += &menu_table(entry.menu(band_id), &scenario.grid);
    let designed = entry
        .menu(band_id)
        .row_for(band.lo())
        .map(|r| r.contract)
        .unwrap_or(Contract::OUTSIDE);
    let pooled = trace.choice_rows(entry.id, band, 0)? == BTreeSet::from([Some(band.lo())]);
    body += &format!(
        "bunching: the below-band type picks {designed}, the line designed for type {}: {}\n",
        band.lo() + 1,
        if pooled { "yes" } else { "NO" }
    );
    body += "\n";
    body += &verdict_lines(
        "universal withholding",
        "every type keeps only the known band; below-band types bunch",
        &verdict,
    );
    check(
        &mut body,
        &mut failures,
        "every type sends only the known band",
        verdict.violations.is_empty(),
    );
    check(
        &mut body,
        &mut failures,
        "the below-band type bunches on the band's lowest contract",
        pooled,
    );
    Ok((body, failures))
}

// ---------------------------------------------------------------------------
// suite

fn cmd_suite(seed: u64, out: Option<&Path>) -> Result<()> {
    let reports = run_all(seed)?;
    let mut body = format!("seed: {seed}\n");
    for report in &reports {
        body += &format!("{}\n", report.summary());
    }
    print!("{body}");

    if let Some(dir) = out {
        let stamp = Stamp::new("suite").seed(seed);
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    r.label.clone(),
                    r.cases.to_string(),
                    r.violations.len().to_string(),
                ]
            })
            .collect();
        let csv = write_csv(
            dir,
            "suite.csv",
            &stamp,
            &["suite", "cases", "violations"],
            &rows,
        )?;
        let mut detail = body.clone();
        for report in reports.iter().filter(|r| !r.passed()) {
            for violation in &report.violations {
                detail += &format!("  {}: {violation}\n", report.label);
            }
        }
        let txt = write_text(dir, "suite.txt", &stamp, &detail)?;
        println!("wrote {}", csv.display());
        println!("wrote {}", txt.display());
    }

    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.label.as_str())
        .collect();
    if !failed.is_empty() {
        bail!("failing suites: {}", failed.join(", "));
    }
    Ok(())
}
