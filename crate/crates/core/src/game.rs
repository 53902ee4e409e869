//! The disclosure game and its level-by-level elimination engine.
//!
//! An agent drawn from a grid of cost types faces a principal who is only
//! aware of a contiguous band of those types. Before contracting, the agent
//! may expand the principal's awareness by disclosing a contiguous superset
//! of her band; the principal then posts the menu that is optimal under her
//! updated belief, and the agent picks a contract or walks away. This module
//! computes which disclosures survive when both sides iterate cautious
//! best-response reasoning.
//!
//! Play is analyzed inside one subjective tree per message: in the tree
//! rooted at `T` the conceivable types are exactly those in `T` and the
//! available messages are the lattice messages contained in `T`. Any type
//! may send any available message — disclosing is raising awareness, not
//! proving one's own type, so a type may stay silent about itself.
//!
//! The engine alternates two elimination steps, both reading the previous
//! level's state:
//!
//! * **Agent step.** A message survives for a type if some full-support
//!   belief over the principal's surviving menu policies makes it weakly
//!   best among every message the type could send, eliminated alternatives
//!   included. While the principal is still unconstrained nothing can be
//!   eliminated, so the first two levels leave the agent untouched.
//! * **Principal step.** At level 2 the candidate policies are generated:
//!   belief families over the message lattice, one marginal per message,
//!   screened by the structural restrictions (contiguous supports,
//!   log-concavity, cross-ratio preservation, wariness at newly disclosed
//!   extremes, monotone supports), by consistency with who can still send
//!   each message, and by menu robustness. From level 3 on the set is only
//!   filtered: a family is dropped once its supports contradict surviving
//!   agent behavior — types forced to a message must be believed, and types
//!   believed must still send it, unless the message has gone off path
//!   entirely, in which case the belief is unrestricted.
//!
//! A run converges when a full round at level 3 or later changes nothing.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::beliefs::{
    BeliefFamily, FamilySlot, MarginalBelief, MsgRange, enumerate_belief_families,
    validate_support_assignment,
};
use crate::error::{Error, Result};
use crate::lp::exists_full_support_rationalizing_belief;
use crate::menu::{MenuSolution, agent_choice, optimal_menu};
use crate::model::{Contract, TypeGrid, ValueFunction, validate_assumption1};
use crate::rational::Rat;

/// Every awareness set the agent can disclose: contiguous type ranges that
/// contain the principal's own band, ordered by `(lo, hi)`.
#[derive(Debug, Clone)]
pub struct MessageLattice {
    messages: Vec<MsgRange>,
    theta_p: MsgRange,
    full: MsgRange,
}

impl MessageLattice {
    pub fn new(m: usize, theta_p: MsgRange) -> Result<Self> {
        if theta_p.hi() >= m {
            return Err(Error::InvalidScenario(format!(
                "known band {theta_p} does not fit a grid of {m} types"
            )));
        }
        let mut messages = Vec::new();
        for lo in 0..=theta_p.lo() {
            for hi in theta_p.hi()..m {
                messages.push(MsgRange::new(lo, hi)?);
            }
        }
        messages.sort();
        let full = MsgRange::new(0, m - 1)?;
        Ok(MessageLattice {
            messages,
            theta_p,
            full,
        })
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn messages(&self) -> &[MsgRange] {
        &self.messages
    }

    pub fn get(&self, id: usize) -> MsgRange {
        self.messages[id]
    }

    pub fn id_of(&self, range: MsgRange) -> Option<usize> {
        self.messages.binary_search(&range).ok()
    }

    pub fn theta_p(&self) -> MsgRange {
        self.theta_p
    }

    /// Id of the full range, the maximal disclosure.
    pub fn full_id(&self) -> usize {
        self.id_of(self.full)
            .expect("full range is always a message")
    }

    /// The maximal disclosure itself.
    pub fn full(&self) -> MsgRange {
        self.full
    }

    /// Ids of the messages available inside the tree rooted at `tree`.
    pub fn submessages(&self, tree: usize) -> Vec<usize> {
        let root = self.messages[tree];
        (0..self.messages.len())
            .filter(|&j| root.contains_range(self.messages[j]))
            .collect()
    }
}

/// An explicitly supplied belief family, validated at generation time
/// exactly like the grid-generated ones. Used to place beliefs that an
/// integer weight grid cannot express.
#[derive(Debug, Clone)]
pub struct ExtraFamilySpec {
    pub label: String,
    /// One `(message, probabilities over the message)` pair per lattice
    /// message.
    pub marginals: Vec<(MsgRange, Vec<Rat>)>,
}

/// A complete problem instance: type grid, value function, the principal's
/// initial awareness band, and the knobs of the elimination run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub grid: TypeGrid,
    pub value: ValueFunction,
    pub theta_p: MsgRange,
    /// Belief-family weights range over `1..=weight_cap`.
    pub weight_cap: u32,
    /// Hard stop for the elimination loop.
    pub level_cap: u32,
    pub extra_families: Vec<ExtraFamilySpec>,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        grid: TypeGrid,
        value: ValueFunction,
        theta_p: MsgRange,
        weight_cap: u32,
        level_cap: u32,
    ) -> Result<Self> {
        if theta_p.hi() >= grid.len() {
            return Err(Error::InvalidScenario(format!(
                "known band {theta_p} does not fit a grid of {} types",
                grid.len()
            )));
        }
        if grid.gamma() <= value.b() {
            return Err(Error::InvalidScenario(format!(
                "type denominator {} must exceed the quantity cap {}",
                grid.gamma(),
                value.b()
            )));
        }
        if value.b() < 2 * grid.len() as u64 {
            return Err(Error::InvalidScenario(format!(
                "quantity cap {} is too small to separate {} types",
                value.b(),
                grid.len()
            )));
        }
        if weight_cap == 0 {
            return Err(Error::InvalidScenario("weight cap must be positive".into()));
        }
        if level_cap < 3 {
            return Err(Error::InvalidScenario(
                "level cap below 3 cannot reach a fixed point".into(),
            ));
        }
        let report = validate_assumption1(&value);
        if !report.all_pass() {
            return Err(Error::InvalidScenario(report.summary()));
        }
        Ok(Scenario {
            name: name.into(),
            grid,
            value,
            theta_p,
            weight_cap,
            level_cap,
            extra_families: Vec::new(),
        })
    }

    pub fn with_extra_families(mut self, specs: Vec<ExtraFamilySpec>) -> Self {
        self.extra_families = specs;
        self
    }
}

/// Surviving messages per `(tree, type)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSets {
    allowed: BTreeMap<(usize, usize), BTreeSet<usize>>,
}

impl AgentSets {
    fn initial(lattice: &MessageLattice) -> Self {
        let mut allowed = BTreeMap::new();
        for tree in 0..lattice.len() {
            let subs: BTreeSet<usize> = lattice.submessages(tree).into_iter().collect();
            for type_index in lattice.get(tree).iter() {
                allowed.insert((tree, type_index), subs.clone());
            }
        }
        AgentSets { allowed }
    }

    /// Messages the type may still send in the given tree.
    pub fn allowed(&self, tree: usize, type_index: usize) -> Result<&BTreeSet<usize>> {
        self.allowed.get(&(tree, type_index)).ok_or_else(|| {
            Error::Internal(format!("no agent set for type {type_index} in tree {tree}"))
        })
    }

    fn set(&mut self, tree: usize, type_index: usize, messages: BTreeSet<usize>) {
        self.allowed.insert((tree, type_index), messages);
    }

    /// Types that may still send the message in its own tree.
    pub fn senders(&self, lattice: &MessageLattice, message: usize) -> BTreeSet<usize> {
        lattice
            .get(message)
            .iter()
            .filter(|&t| {
                self.allowed
                    .get(&(message, t))
                    .is_some_and(|s| s.contains(&message))
            })
            .collect()
    }

    /// Types whose only surviving message, in the message's own tree, is the
    /// message itself.
    pub fn forced(&self, lattice: &MessageLattice, message: usize) -> BTreeSet<usize> {
        lattice
            .get(message)
            .iter()
            .filter(|&t| {
                self.allowed
                    .get(&(message, t))
                    .is_some_and(|s| s.len() == 1 && s.contains(&message))
            })
            .collect()
    }
}

/// Types a message's belief support may draw from: the types that still
/// send the message, plus any newly disclosed extreme. Wariness keeps an
/// extreme in play even at levels where no surviving strategy of that type
/// sends the message — the principal cannot dismiss the very type the
/// message made her aware of. In particular, once every in-band type is
/// pinned to the null message, a strictly larger message's support
/// collapses onto its disclosed extreme.
fn support_pool(msg: MsgRange, theta_p: MsgRange, senders: BTreeSet<usize>) -> BTreeSet<usize> {
    let mut pool = senders;
    if msg.lo() < theta_p.lo() {
        pool.insert(msg.lo());
    }
    if msg.hi() > theta_p.hi() {
        pool.insert(msg.hi());
    }
    pool
}

/// The principal's surviving policy set at some level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrincipalState {
    /// Before generation the agent cannot rule anything out.
    Unconstrained,
    /// Ids of the belief families still in play.
    Families(Vec<usize>),
}

/// A admissible belief family together with the menus it commits the
/// principal to.
#[derive(Debug, Clone)]
pub struct FamilyEntry {
    pub id: usize,
    pub family: BeliefFamily,
    menus: BTreeMap<usize, Arc<MenuSolution>>,
    menu_uids: BTreeMap<usize, usize>,
}

impl FamilyEntry {
    pub fn menu(&self, message_id: usize) -> &MenuSolution {
        &self.menus[&message_id]
    }

    fn menu_uid(&self, message_id: usize) -> usize {
        self.menu_uids[&message_id]
    }

    /// Support of the belief attached to the message, as a range.
    pub fn support(&self, message_id: usize) -> Result<MsgRange> {
        let marginal = self.family.marginals.get(&message_id).ok_or_else(|| {
            Error::Internal(format!(
                "family {} has no marginal for message {message_id}",
                self.id
            ))
        })?;
        marginal
            .support_range()
            .ok_or_else(|| Error::Internal("family support has a gap".into()))
    }
}

/// One line of the run's commentary: generation counts, dropped families,
/// eliminated messages.
#[derive(Debug, Clone)]
pub struct TraceEvent {
    pub level: u32,
    pub detail: String,
}

/// Both sides' surviving sets after a completed round.
#[derive(Debug, Clone)]
pub struct LevelSnapshot {
    pub level: u32,
    pub agent: AgentSets,
    pub principal: PrincipalState,
}

/// Everything a finished (or capped) run produced.
#[derive(Debug)]
pub struct RunTrace {
    pub scenario: Scenario,
    pub lattice: MessageLattice,
    /// Every family ever generated, keyed by id; snapshots reference ids.
    pub families: BTreeMap<usize, FamilyEntry>,
    pub snapshots: Vec<LevelSnapshot>,
    pub events: Vec<TraceEvent>,
    /// First level whose round changed nothing, if one was reached.
    pub converged_at: Option<u32>,
}

impl RunTrace {
    pub fn final_snapshot(&self) -> &LevelSnapshot {
        self.snapshots.last().expect("level 0 always recorded")
    }

    pub fn snapshot(&self, level: u32) -> Option<&LevelSnapshot> {
        self.snapshots.iter().find(|s| s.level == level)
    }

    /// Families surviving at the end of the run (empty while the principal
    /// is still unconstrained).
    pub fn surviving_families(&self) -> Vec<&FamilyEntry> {
        match &self.final_snapshot().principal {
            PrincipalState::Unconstrained => Vec::new(),
            PrincipalState::Families(ids) => ids.iter().map(|id| &self.families[id]).collect(),
        }
    }

    pub fn family(&self, id: usize) -> Result<&FamilyEntry> {
        self.families
            .get(&id)
            .ok_or_else(|| Error::Internal(format!("no family with id {id}")))
    }

    fn message_id(&self, range: MsgRange) -> Result<usize> {
        self.lattice
            .id_of(range)
            .ok_or_else(|| Error::InvalidRange(format!("{range} is not a lattice message")))
    }

    /// Final surviving messages for a type inside a tree, as ranges.
    pub fn allowed(&self, tree: MsgRange, type_index: usize) -> Result<BTreeSet<MsgRange>> {
        self.allowed_at_level(self.final_snapshot().level, tree, type_index)
    }

    /// Surviving messages after the given level's round.
    pub fn allowed_at_level(
        &self,
        level: u32,
        tree: MsgRange,
        type_index: usize,
    ) -> Result<BTreeSet<MsgRange>> {
        let tree_id = self.message_id(tree)?;
        let snapshot = self
            .snapshot(level)
            .ok_or_else(|| Error::InvalidRange(format!("no snapshot for level {level}")))?;
        let ids = snapshot.agent.allowed(tree_id, type_index)?;
        Ok(ids.iter().map(|&id| self.lattice.get(id)).collect())
    }

    /// Types that, in the given tree, end up sending exactly the tree root:
    /// full disclosure of everything they know there.
    pub fn forced_disclosure(&self, tree: MsgRange) -> Result<Vec<usize>> {
        let tree_id = self.message_id(tree)?;
        let agent = &self.final_snapshot().agent;
        let mut out = Vec::new();
        for type_index in tree.iter() {
            let ids = agent.allowed(tree_id, type_index)?;
            if ids.len() == 1 && ids.contains(&tree_id) {
                out.push(type_index);
            }
        }
        Ok(out)
    }

    /// Which supported type's contract the given type picks when facing the
    /// family's menu at `message` — `None` for the walk-away/null contract.
    /// A set because ties are possible in principle.
    pub fn choice_rows(
        &self,
        family_id: usize,
        message: MsgRange,
        type_index: usize,
    ) -> Result<BTreeSet<Option<usize>>> {
        let msg_id = self.message_id(message)?;
        let entry = self.family(family_id)?;
        let menu = entry.menu(msg_id);
        let theta = self.scenario.grid.theta(type_index);
        let choice = agent_choice(&menu.contracts(), theta);
        Ok(choice
            .maximizers
            .iter()
            .map(|c| {
                if *c == Contract::OUTSIDE {
                    None
                } else {
                    menu.rows
                        .iter()
                        .find(|r| r.contract == *c)
                        .map(|r| r.type_index)
                }
            })
            .collect())
    }
}

/// Menus deduplicated across families, with per-type best-payoff caching.
/// Families routinely share marginals (the known band's belief, point
/// masses), so interning keeps the menu count near the number of distinct
/// beliefs rather than the number of families.
#[derive(Default)]
struct MenuInterner {
    by_belief: BTreeMap<(usize, usize, Vec<Rat>), usize>,
    menus: Vec<Arc<MenuSolution>>,
    payoffs: BTreeMap<(usize, usize), Rat>,
}

impl MenuInterner {
    fn intern(
        &mut self,
        grid: &TypeGrid,
        value: &ValueFunction,
        belief: &MarginalBelief,
    ) -> Result<(usize, Arc<MenuSolution>)> {
        let message = belief.message();
        let key = (
            message.lo(),
            message.hi(),
            message.iter().map(|i| belief.prob(i)).collect::<Vec<_>>(),
        );
        if let Some(&uid) = self.by_belief.get(&key) {
            return Ok((uid, Arc::clone(&self.menus[uid])));
        }
        let menu = Arc::new(optimal_menu(grid, value, belief)?);
        let uid = self.menus.len();
        self.menus.push(Arc::clone(&menu));
        self.by_belief.insert(key, uid);
        Ok((uid, menu))
    }

    fn agent_payoff(&mut self, uid: usize, type_index: usize, grid: &TypeGrid) -> Rat {
        if let Some(u) = self.payoffs.get(&(uid, type_index)) {
            return u.clone();
        }
        let contracts = self.menus[uid].contracts();
        let u = agent_choice(&contracts, grid.theta(type_index)).utility;
        self.payoffs.insert((uid, type_index), u.clone());
        u
    }
}

struct Engine<'a> {
    scenario: &'a Scenario,
    lattice: MessageLattice,
    interner: MenuInterner,
    families: BTreeMap<usize, FamilyEntry>,
    seen_keys: BTreeSet<Vec<(usize, Vec<Rat>)>>,
    next_family_id: usize,
    agent: AgentSets,
    principal: PrincipalState,
    snapshots: Vec<LevelSnapshot>,
    events: Vec<TraceEvent>,
    converged_at: Option<u32>,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        let lattice = MessageLattice::new(scenario.grid.len(), scenario.theta_p)?;
        let agent = AgentSets::initial(&lattice);
        Ok(Engine {
            scenario,
            lattice,
            interner: MenuInterner::default(),
            families: BTreeMap::new(),
            seen_keys: BTreeSet::new(),
            next_family_id: 0,
            agent,
            principal: PrincipalState::Unconstrained,
            snapshots: Vec::new(),
            events: Vec::new(),
            converged_at: None,
        })
    }

    fn record_snapshot(&mut self, level: u32) {
        self.snapshots.push(LevelSnapshot {
            level,
            agent: self.agent.clone(),
            principal: self.principal.clone(),
        });
    }

    fn note(&mut self, level: u32, detail: String) {
        self.events.push(TraceEvent { level, detail });
    }

    fn run(&mut self, max_level: u32) -> Result<()> {
        self.record_snapshot(0);
        for level in 1..=max_level {
            let prev_agent = self.agent.clone();
            let next_agent = self.agent_step(level, &prev_agent)?;
            let next_principal = self.principal_step(level, &prev_agent)?;
            let unchanged = next_agent == prev_agent && next_principal == self.principal;
            self.agent = next_agent;
            self.principal = next_principal;
            self.record_snapshot(level);
            if unchanged && level >= 3 && matches!(self.principal, PrincipalState::Families(_)) {
                self.converged_at = Some(level);
                self.note(level, format!("fixed point reached at level {level}"));
                break;
            }
        }
        Ok(())
    }

    /// One elimination pass over every `(tree, type, message)` triple,
    /// reading the previous level on both sides.
    fn agent_step(&mut self, level: u32, prev: &AgentSets) -> Result<AgentSets> {
        let ids = match &self.principal {
            PrincipalState::Unconstrained => return Ok(prev.clone()),
            PrincipalState::Families(ids) => ids.clone(),
        };
        let scenario = self.scenario;
        let mut next = prev.clone();
        for tree in 0..self.lattice.len() {
            let alternatives = self.lattice.submessages(tree);
            if alternatives.len() < 2 {
                continue;
            }
            for type_index in self.lattice.get(tree).iter() {
                // Distinct policy columns: first by interned menu ids over
                // the alternatives, then by the induced payoff vector.
                // Merging states a belief cannot tell apart leaves the
                // existence question unchanged.
                let mut uid_rows: BTreeSet<Vec<usize>> = BTreeSet::new();
                for fid in &ids {
                    let entry = &self.families[fid];
                    uid_rows.insert(alternatives.iter().map(|&m| entry.menu_uid(m)).collect());
                }
                let mut payoff_rows: BTreeSet<Vec<Rat>> = BTreeSet::new();
                for row in uid_rows {
                    payoff_rows.insert(
                        row.iter()
                            .map(|&uid| self.interner.agent_payoff(uid, type_index, &scenario.grid))
                            .collect(),
                    );
                }
                let matrix: Vec<Vec<Rat>> = payoff_rows.into_iter().collect();
                let current = prev.allowed(tree, type_index)?.clone();
                let mut survivors = BTreeSet::new();
                for cand in current {
                    let pos = alternatives
                        .iter()
                        .position(|&m| m == cand)
                        .ok_or_else(|| {
                            Error::Internal("surviving message missing from its tree".into())
                        })?;
                    if exists_full_support_rationalizing_belief(&matrix, pos)? {
                        survivors.insert(cand);
                    } else {
                        self.note(
                            level,
                            format!(
                                "tree {}: type {} stops sending {}",
                                self.lattice.get(tree),
                                type_index + 1,
                                self.lattice.get(cand)
                            ),
                        );
                    }
                }
                if survivors.is_empty() {
                    return Err(Error::Internal(format!(
                        "type {} lost every message in tree {}",
                        type_index + 1,
                        self.lattice.get(tree)
                    )));
                }
                next.set(tree, type_index, survivors);
            }
        }
        Ok(next)
    }

    fn principal_step(&mut self, level: u32, prev_agent: &AgentSets) -> Result<PrincipalState> {
        match level {
            0 | 1 => Ok(self.principal.clone()),
            2 => self.generate_families(prev_agent),
            _ => self.filter_families(level, prev_agent),
        }
    }

    /// Candidate supports for one message after the structural and
    /// consistency screens.
    fn candidate_supports(
        &self,
        message_id: usize,
        prev_agent: &AgentSets,
    ) -> Result<Vec<MsgRange>> {
        let msg = self.lattice.get(message_id);
        let theta_p = self.scenario.theta_p;
        let forced = prev_agent.forced(&self.lattice, message_id);
        let pool = support_pool(msg, theta_p, prev_agent.senders(&self.lattice, message_id));
        let mut supports = Vec::new();
        for lo in msg.lo()..=msg.hi() {
            for hi in lo..=msg.hi() {
                // Wariness: a message that extends the known band must put
                // mass on the furthest newly disclosed type.
                if msg.lo() < theta_p.lo() && lo != msg.lo() {
                    continue;
                }
                if msg.hi() > theta_p.hi() && hi != msg.hi() {
                    continue;
                }
                let supp = MsgRange::new(lo, hi)?;
                if !forced.iter().all(|&t| supp.contains(t)) {
                    continue;
                }
                if !supp.iter().all(|t| pool.contains(&t)) {
                    continue;
                }
                supports.push(supp);
            }
        }
        if supports.is_empty() {
            return Err(Error::NoFeasibleSupport {
                message: msg.to_string(),
            });
        }
        Ok(supports)
    }

    fn generate_families(&mut self, prev_agent: &AgentSets) -> Result<PrincipalState> {
        debug_assert!(matches!(self.principal, PrincipalState::Unconstrained));
        let theta_p = self.scenario.theta_p;
        let per_message: Vec<Vec<MsgRange>> = (0..self.lattice.len())
            .map(|id| self.candidate_supports(id, prev_agent))
            .collect::<Result<_>>()?;

        // Walk the cartesian product of per-message supports; assignments
        // that fail joint monotonicity are skipped, the rest feed the
        // weight-grid enumerator.
        let mut pick = vec![0usize; per_message.len()];
        loop {
            let slots: Vec<FamilySlot> = pick
                .iter()
                .enumerate()
                .map(|(id, &s)| FamilySlot {
                    message_id: id,
                    message: self.lattice.get(id),
                    support: per_message[id][s],
                })
                .collect();
            if validate_support_assignment(&slots, theta_p).is_ok() {
                for family in enumerate_belief_families(&slots, theta_p, self.scenario.weight_cap)?
                {
                    self.add_family(2, family)?;
                }
            }
            let mut pos = pick.len();
            let mut wrapped = true;
            while pos > 0 {
                pos -= 1;
                if pick[pos] + 1 < per_message[pos].len() {
                    pick[pos] += 1;
                    pick[pos + 1..].fill(0);
                    wrapped = false;
                    break;
                }
                pick[pos] = 0;
            }
            if wrapped {
                break;
            }
        }

        for spec in self.scenario.extra_families.clone() {
            let family = self.injected_family(&spec, prev_agent)?;
            self.add_family(2, family)?;
        }

        if self.families.is_empty() {
            return Err(Error::InvalidScenario(
                "no admissible belief family survives the robustness screen".into(),
            ));
        }
        let ids: Vec<usize> = self.families.keys().copied().collect();
        self.note(2, format!("{} belief families generated", ids.len()));
        Ok(PrincipalState::Families(ids))
    }

    /// Build and fully validate an explicitly supplied family: it must pass
    /// the same structural restrictions and level-2 consistency screens as
    /// the generated ones. Violations are scenario errors, not silent drops,
    /// because the caller asked for this family by name.
    fn injected_family(
        &self,
        spec: &ExtraFamilySpec,
        prev_agent: &AgentSets,
    ) -> Result<BeliefFamily> {
        let mut marginals = BTreeMap::new();
        for (range, probs) in &spec.marginals {
            let id = self.lattice.id_of(*range).ok_or_else(|| {
                Error::InvalidScenario(format!(
                    "extra family {}: {range} is not a lattice message",
                    spec.label
                ))
            })?;
            marginals.insert(id, MarginalBelief::new(*range, probs.clone())?);
        }
        if marginals.len() != self.lattice.len() {
            return Err(Error::InvalidScenario(format!(
                "extra family {}: expected one marginal per message, got {} of {}",
                spec.label,
                marginals.len(),
                self.lattice.len()
            )));
        }
        let family = BeliefFamily {
            marginals,
            note: spec.label.clone(),
        };
        if let Some(violation) = family.violation(self.scenario.theta_p) {
            return Err(Error::InvalidScenario(format!(
                "extra family {}: {violation}",
                spec.label
            )));
        }
        for id in 0..self.lattice.len() {
            let supp = family.marginals[&id]
                .support_range()
                .ok_or_else(|| Error::Internal("support gap slipped past validation".into()))?;
            let forced = prev_agent.forced(&self.lattice, id);
            if !forced.iter().all(|&t| supp.contains(t)) {
                return Err(Error::InvalidScenario(format!(
                    "extra family {}: support {supp} of {} misses a forced type",
                    spec.label,
                    self.lattice.get(id)
                )));
            }
            let pool = support_pool(
                self.lattice.get(id),
                self.scenario.theta_p,
                prev_agent.senders(&self.lattice, id),
            );
            if !supp.iter().all(|t| pool.contains(&t)) {
                return Err(Error::InvalidScenario(format!(
                    "extra family {}: support {supp} of {} includes a type that cannot send it",
                    spec.label,
                    self.lattice.get(id)
                )));
            }
        }
        Ok(family)
    }

    /// Solve the family's menus and store it, unless it duplicates an
    /// existing family or some menu is not uniquely optimal.
    fn add_family(&mut self, level: u32, family: BeliefFamily) -> Result<bool> {
        if !self.seen_keys.insert(family.canonical_key()) {
            self.note(
                level,
                format!("family {} duplicates an earlier one", family.note),
            );
            return Ok(false);
        }
        let scenario = self.scenario;
        let mut menus = BTreeMap::new();
        let mut menu_uids = BTreeMap::new();
        let mut robust = true;
        for (&msg_id, marginal) in &family.marginals {
            let (uid, menu) = self
                .interner
                .intern(&scenario.grid, &scenario.value, marginal)?;
            robust &= menu.robust;
            menus.insert(msg_id, menu);
            menu_uids.insert(msg_id, uid);
        }
        if !robust {
            self.note(
                level,
                format!(
                    "family {} dropped: some menu is not uniquely optimal",
                    family.note
                ),
            );
            return Ok(false);
        }
        let id = self.next_family_id;
        self.next_family_id += 1;
        self.families.insert(
            id,
            FamilyEntry {
                id,
                family,
                menus,
                menu_uids,
            },
        );
        Ok(true)
    }

    fn filter_families(&mut self, level: u32, prev_agent: &AgentSets) -> Result<PrincipalState> {
        let ids = match &self.principal {
            PrincipalState::Unconstrained => {
                return Err(Error::Internal(
                    "principal unconstrained past the generation level".into(),
                ));
            }
            PrincipalState::Families(ids) => ids.clone(),
        };
        let forced_by_msg: Vec<BTreeSet<usize>> = (0..self.lattice.len())
            .map(|id| prev_agent.forced(&self.lattice, id))
            .collect();
        let pool_by_msg: Vec<BTreeSet<usize>> = (0..self.lattice.len())
            .map(|id| {
                support_pool(
                    self.lattice.get(id),
                    self.scenario.theta_p,
                    prev_agent.senders(&self.lattice, id),
                )
            })
            .collect();
        let mut keep = Vec::new();
        for fid in ids {
            let mut rejection = None;
            for msg_id in 0..self.lattice.len() {
                let supp = self.families[&fid].support(msg_id)?;
                let forced = &forced_by_msg[msg_id];
                if !forced.iter().all(|&t| supp.contains(t)) {
                    rejection = Some(format!(
                        "support {supp} of {} misses a forced type",
                        self.lattice.get(msg_id)
                    ));
                    break;
                }
                let pool = &pool_by_msg[msg_id];
                if !supp.iter().all(|t| pool.contains(&t)) {
                    rejection = Some(format!(
                        "support {supp} of {} includes a type that no longer sends it",
                        self.lattice.get(msg_id)
                    ));
                    break;
                }
            }
            match rejection {
                Some(reason) => self.note(level, format!("family {fid} removed: {reason}")),
                None => keep.push(fid),
            }
        }
        if keep.is_empty() {
            return Err(Error::Internal(
                "every belief family was filtered out".into(),
            ));
        }
        Ok(PrincipalState::Families(keep))
    }

    fn into_trace(self) -> RunTrace {
        RunTrace {
            scenario: self.scenario.clone(),
            lattice: self.lattice,
            families: self.families,
            snapshots: self.snapshots,
            events: self.events,
            converged_at: self.converged_at,
        }
    }
}

/// Run the elimination loop for at most `max_level` rounds and return the
/// full trace, converged or not. Useful for inspecting a prefix of the
/// process.
pub fn run_levels(scenario: &Scenario, max_level: u32) -> Result<RunTrace> {
    let mut engine = Engine::new(scenario)?;
    engine.run(max_level)?;
    Ok(engine.into_trace())
}

/// Run to the scenario's level cap and insist on a fixed point.
pub fn run_rationalizability(scenario: &Scenario) -> Result<RunTrace> {
    let trace = run_levels(scenario, scenario.level_cap)?;
    if trace.converged_at.is_none() {
        return Err(Error::NoConvergence(scenario.level_cap));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::QuantityGrid;
    use crate::rational::rat;

    fn range(lo: usize, hi: usize) -> MsgRange {
        MsgRange::new(lo, hi).unwrap()
    }

    /// Two types on a four-unit grid, v(q) = 3.2 q - q^2 / 4. Marginal
    /// values 2.95, 2.45, 1.95, 1.45, so the first-order quantities are
    /// q(1) = 4, q(2) = 2, q(7/3) = 2, q(5/2) = 1, q(8/3) = 1 and zero from
    /// cost 3 up. Small enough to check every elimination by hand.
    fn tiny_value() -> ValueFunction {
        ValueFunction::from_quadratic(&rat(16, 5), &rat(1, 4), QuantityGrid::new(4).unwrap())
    }

    fn tiny_scenario(theta_p: MsgRange) -> Scenario {
        Scenario::new(
            "tiny",
            TypeGrid::new(10, 2).unwrap(),
            tiny_value(),
            theta_p,
            3,
            12,
        )
        .unwrap()
    }

    #[test]
    fn lattice_enumerates_contiguous_extensions() {
        let lattice = MessageLattice::new(4, range(1, 2)).unwrap();
        let got: Vec<MsgRange> = lattice.messages().to_vec();
        assert_eq!(
            got,
            vec![range(0, 2), range(0, 3), range(1, 2), range(1, 3)]
        );
        assert_eq!(lattice.id_of(range(1, 3)), Some(3));
        assert_eq!(lattice.id_of(range(0, 1)), None);
        assert_eq!(
            lattice.full_id(),
            1,
            "full range sorts after [0..x] prefixes"
        );
        assert_eq!(lattice.submessages(1), vec![0, 1, 2, 3]);
        assert_eq!(lattice.submessages(0), vec![0, 2]);
        assert_eq!(lattice.submessages(3), vec![2, 3]);
        assert_eq!(lattice.submessages(2), vec![2]);
    }

    #[test]
    fn initial_sets_offer_every_submessage_to_every_type() {
        let lattice = MessageLattice::new(2, range(0, 0)).unwrap();
        let agent = AgentSets::initial(&lattice);
        // Tree [1..2] is the full range; both types may send both messages,
        // including the low type staying silent about the high one and the
        // high type hiding itself entirely.
        let full: BTreeSet<usize> = [0, 1].into();
        assert_eq!(agent.allowed(1, 0).unwrap(), &full);
        assert_eq!(agent.allowed(1, 1).unwrap(), &full);
        assert_eq!(agent.senders(&lattice, 1), [0, 1].into());
        assert_eq!(agent.forced(&lattice, 1), BTreeSet::new());
        // The known band's own tree has a single message, so everyone there
        // is forced to it.
        assert_eq!(agent.forced(&lattice, 0), [0].into());
    }

    #[test]
    fn scenario_validation_rejects_bad_shapes() {
        let grid = TypeGrid::new(10, 2).unwrap();
        // Quantity cap below twice the type count.
        let v =
            ValueFunction::from_quadratic(&rat(16, 5), &rat(1, 4), QuantityGrid::new(3).unwrap());
        assert!(matches!(
            Scenario::new("bad", grid.clone(), v, range(0, 0), 3, 12),
            Err(Error::InvalidScenario(_))
        ));
        // Type denominator not above the cap.
        let v =
            ValueFunction::from_quadratic(&rat(16, 5), &rat(1, 4), QuantityGrid::new(10).unwrap());
        assert!(matches!(
            Scenario::new("bad", grid.clone(), v, range(0, 0), 3, 12),
            Err(Error::InvalidScenario(_))
        ));
        // Known band outside the grid.
        let v = tiny_value();
        assert!(matches!(
            Scenario::new("bad", grid.clone(), v.clone(), range(1, 2), 3, 12),
            Err(Error::InvalidScenario(_))
        ));
        // Level cap too small to ever converge.
        assert!(matches!(
            Scenario::new("bad", grid, v, range(0, 0), 3, 2),
            Err(Error::InvalidScenario(_))
        ));
    }

    /// Unknown high type: both types end up disclosing the full range, and
    /// the beliefs that ignored the low type die once both types are known
    /// to send the full message.
    #[test]
    fn unknown_high_type_forces_full_disclosure() {
        let scenario = tiny_scenario(range(0, 0));
        let trace = run_rationalizability(&scenario).unwrap();
        let theta_p = range(0, 0);
        let full = range(0, 1);

        // Level 2: the known band's message carries a point mass; the full
        // message admits supports [0..1] (7 weight ratios) and [1..1] (1).
        let level2 = trace.snapshot(2).unwrap();
        match &level2.principal {
            PrincipalState::Families(ids) => assert_eq!(ids.len(), 8),
            _ => panic!("families must exist at level 2"),
        }

        // Level 3: facing those families, staying silent is never strictly
        // better for either type, and strictly worse against some family,
        // so both types drop the bare band.
        assert_eq!(
            trace.allowed_at_level(3, full, 0).unwrap(),
            BTreeSet::from([full])
        );
        assert_eq!(
            trace.allowed_at_level(3, full, 1).unwrap(),
            BTreeSet::from([full])
        );

        // Level 4: with both types forced to the full message, the belief
        // that ignored the low type fails the forced-type screen.
        let level4 = trace.snapshot(4).unwrap();
        match &level4.principal {
            PrincipalState::Families(ids) => assert_eq!(ids.len(), 7),
            _ => panic!("families must exist at level 4"),
        }

        assert_eq!(trace.converged_at, Some(5));
        let survivors = trace.surviving_families();
        assert_eq!(survivors.len(), 7);
        for entry in &survivors {
            assert_eq!(
                entry.support(trace.lattice.id_of(full).unwrap()).unwrap(),
                full
            );
        }
        assert_eq!(trace.forced_disclosure(full).unwrap(), vec![0, 1]);
        // The band's own tree is trivial.
        assert_eq!(
            trace.allowed(theta_p, 0).unwrap(),
            BTreeSet::from([theta_p])
        );
    }

    /// Unknown low type: the known types keep the band, the unknown type
    /// hides behind it and takes the known low type's contract.
    #[test]
    fn unknown_low_type_withholds_and_bunches() {
        let scenario = tiny_scenario(range(1, 1));
        let trace = run_rationalizability(&scenario).unwrap();
        let theta_p = range(1, 1);
        let full = range(0, 1);

        let level2 = trace.snapshot(2).unwrap();
        match &level2.principal {
            PrincipalState::Families(ids) => assert_eq!(ids.len(), 8),
            _ => panic!("families must exist at level 2"),
        }

        // Level 3: the known type drops the full message (silence weakly
        // beats disclosure everywhere, strictly against the belief that
        // only sees the unknown type); the unknown type keeps both.
        assert_eq!(
            trace.allowed_at_level(3, full, 1).unwrap(),
            BTreeSet::from([theta_p])
        );
        assert_eq!(
            trace.allowed_at_level(3, full, 0).unwrap(),
            BTreeSet::from([full, theta_p])
        );

        // Level 4: only the unknown type still sends the full message, so
        // every full-message support containing the known type dies.
        let level4 = trace.snapshot(4).unwrap();
        match &level4.principal {
            PrincipalState::Families(ids) => {
                assert_eq!(ids.len(), 1);
                let entry = trace.family(ids[0]).unwrap();
                assert_eq!(
                    entry.support(trace.lattice.id_of(full).unwrap()).unwrap(),
                    range(0, 0)
                );
            }
            _ => panic!("families must exist at level 4"),
        }

        // Level 5: against the surviving family, disclosing yields the
        // unknown type 0.4 while silence yields 2.2 from the known type's
        // contract, so disclosure dies and the message goes off path.
        assert_eq!(
            trace.allowed_at_level(5, full, 0).unwrap(),
            BTreeSet::from([theta_p])
        );
        assert_eq!(trace.converged_at, Some(6));

        // The full message has no senders left, yet its family remains:
        // its support is the disclosed extreme, which wariness keeps in
        // the support pool after the message goes off path.
        let final_agent = &trace.final_snapshot().agent;
        assert!(
            final_agent
                .senders(&trace.lattice, trace.lattice.id_of(full).unwrap())
                .is_empty()
        );
        assert_eq!(trace.surviving_families().len(), 1);

        // Bunching: the unknown type takes the known type's contract.
        let survivor = trace.surviving_families()[0].id;
        assert_eq!(
            trace.choice_rows(survivor, theta_p, 0).unwrap(),
            BTreeSet::from([Some(1)])
        );
        // And that contract is (2, 4): quantity q(2) = 2 priced at its cost.
        let menu = trace
            .family(survivor)
            .unwrap()
            .menu(trace.lattice.id_of(theta_p).unwrap());
        assert_eq!(menu.contracts(), vec![Contract::new(2, 4)]);
    }

    /// Nothing to disclose when the band is the whole grid: one message,
    /// immediate convergence.
    #[test]
    fn full_awareness_converges_immediately() {
        let scenario = tiny_scenario(range(0, 1));
        let trace = run_rationalizability(&scenario).unwrap();
        assert_eq!(trace.lattice.len(), 1);
        assert_eq!(trace.converged_at, Some(3));
        // Full support forced in the only tree; 7 distinct weight ratios.
        assert_eq!(trace.surviving_families().len(), 7);
        assert_eq!(
            trace.allowed(range(0, 1), 0).unwrap(),
            BTreeSet::from([range(0, 1)])
        );
    }

    #[test]
    fn injected_families_validate_and_dedupe() {
        let theta_p = range(1, 1);
        let full = range(0, 1);

        // Duplicate of the uniform grid family: silently skipped.
        let dup = ExtraFamilySpec {
            label: "dup".into(),
            marginals: vec![
                (full, vec![rat(1, 2), rat(1, 2)]),
                (theta_p, vec![rat(1, 1)]),
            ],
        };
        let scenario = tiny_scenario(theta_p).with_extra_families(vec![dup]);
        let trace = run_levels(&scenario, 2).unwrap();
        match &trace.snapshot(2).unwrap().principal {
            PrincipalState::Families(ids) => assert_eq!(ids.len(), 8),
            _ => panic!("families must exist at level 2"),
        }
        assert!(
            trace
                .events
                .iter()
                .any(|e| e.detail.contains("duplicates an earlier one"))
        );

        // Wariness violation: the full message extends the band downward,
        // so its support must reach the newly disclosed low end.
        let bad = ExtraFamilySpec {
            label: "bad".into(),
            marginals: vec![
                (full, vec![rat(0, 1), rat(1, 1)]),
                (theta_p, vec![rat(1, 1)]),
            ],
        };
        let scenario = tiny_scenario(theta_p).with_extra_families(vec![bad]);
        assert!(matches!(
            run_levels(&scenario, 2),
            Err(Error::InvalidScenario(msg)) if msg.contains("wariness")
        ));

        // Marginal on a range that is not a lattice message.
        let off = ExtraFamilySpec {
            label: "off".into(),
            marginals: vec![(range(0, 0), vec![rat(1, 1)]), (theta_p, vec![rat(1, 1)])],
        };
        let scenario = tiny_scenario(theta_p).with_extra_families(vec![off]);
        assert!(matches!(
            run_levels(&scenario, 2),
            Err(Error::InvalidScenario(msg)) if msg.contains("not a lattice message")
        ));
    }

    /// Before generation the principal is unconstrained and the agent keeps
    /// everything.
    #[test]
    fn early_levels_eliminate_nothing() {
        let scenario = tiny_scenario(range(0, 0));
        let trace = run_levels(&scenario, 1).unwrap();
        assert!(matches!(
            trace.final_snapshot().principal,
            PrincipalState::Unconstrained
        ));
        let full = range(0, 1);
        assert_eq!(
            trace.allowed(full, 1).unwrap(),
            BTreeSet::from([range(0, 0), full])
        );
        assert!(trace.converged_at.is_none());
    }
}
