//! Several plasmodia competing for food on the hexagonal lattice.
//!
//! Every tick, food emits attractant and each agent's occupied cells emit
//! slime into the agent's own field; all fields then diffuse. Each agent
//! scores the free cells on its frontier
//!
//! ```text
//! score(x) = hunger * w_food * A(x) - w_competitor * sum_{b != a} S_b(x) - w_self * S_a(x)
//! ```
//!
//! and claims its best positive-scoring cells, up to a budget that grows
//! with `power * mass`. Contested cells go to the largest `power * mass`
//! (lowest id on ties) unless all claimants share a genotype and fusion is
//! enabled, in which case they merge. Losers move on to their next-best
//! cell. Agents sitting on food eat; hunger rises otherwise; starving agents
//! contract by releasing their worst cell, and agents with no mass left die.
//!
//! Own slime is the spatial memory (recently held cells score low) and the
//! competitor term is non-contact avoidance: rivals are sensed through their
//! diffused slime before they are touched.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hex::{diffuse_into, AxialCoord, HexGrid, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodSource {
    pub position: AxialCoord,
    pub mass: f64,
    pub quality: f64,
}

/// Initial placement and traits of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSeed {
    pub position: AxialCoord,
    pub power: f64,
    pub genotype: u32,
    pub mass: f64,
    pub hunger: f64,
}

impl AgentSeed {
    pub fn at(position: AxialCoord) -> Self {
        Self { position, power: 1.0, genotype: 0, mass: 5.0, hunger: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub radius: i32,
    pub foods: Vec<FoodSource>,
    pub agents: Vec<AgentSeed>,
    /// Weight of the attractant reward.
    pub w_food: f64,
    /// Weight of the competitor slime penalty.
    pub w_competitor: f64,
    /// Weight of the own-slime penalty.
    pub w_self: f64,
    /// Attractant emitted per unit of food mass times quality.
    pub kappa: f64,
    /// Slime emitted per unit of agent mass, spread over its cells.
    pub slime_rate: f64,
    /// Diffusion rate in `(0, 1]`.
    pub delta: f64,
    /// Mass spent per newly claimed cell.
    pub expansion_cost: f64,
    /// Claims per tick are `ceil(power * mass / expansion_scale)`.
    pub expansion_scale: f64,
    /// Mass spent per occupied cell per tick.
    pub upkeep: f64,
    pub eat_rate: f64,
    pub hunger_gain: f64,
    /// Hunger relieved per unit of food eaten.
    pub hunger_relief: f64,
    /// Agents below this fraction of their initial mass contract.
    pub shrink_fraction: f64,
    pub fusion_enabled: bool,
    pub max_ticks: u64,
    pub seed: u64,
    /// Amplitude of uniform score noise; zero keeps the run noise-free.
    pub score_noise: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            radius: 10,
            foods: Vec::new(),
            agents: Vec::new(),
            w_food: 1.0,
            w_competitor: 1.0,
            w_self: 0.3,
            kappa: 0.1,
            slime_rate: 0.02,
            delta: 0.6,
            expansion_cost: 0.05,
            expansion_scale: 5.0,
            upkeep: 0.01,
            eat_rate: 0.5,
            hunger_gain: 0.005,
            hunger_relief: 0.5,
            shrink_fraction: 0.5,
            fusion_enabled: true,
            max_ticks: 400,
            seed: 0,
            score_noise: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let grid = HexGrid::new(self.radius).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let rates = [
            ("w_food", self.w_food),
            ("w_competitor", self.w_competitor),
            ("w_self", self.w_self),
            ("kappa", self.kappa),
            ("slime_rate", self.slime_rate),
            ("expansion_cost", self.expansion_cost),
            ("upkeep", self.upkeep),
            ("eat_rate", self.eat_rate),
            ("hunger_gain", self.hunger_gain),
            ("hunger_relief", self.hunger_relief),
            ("shrink_fraction", self.shrink_fraction),
            ("score_noise", self.score_noise),
        ];
        for (name, x) in rates {
            if !(x >= 0.0) || !x.is_finite() {
                return bad(format!("{name} = {x} must be a non-negative number"));
            }
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta = {} outside (0, 1]", self.delta));
        }
        if !(self.expansion_scale > 0.0) || !self.expansion_scale.is_finite() {
            return bad(format!("expansion_scale = {} must be positive", self.expansion_scale));
        }
        for (i, f) in self.foods.iter().enumerate() {
            if !grid.contains(f.position) {
                return bad(format!("food {i} at {} is outside the grid", f.position));
            }
            if !(f.mass >= 0.0) || !f.mass.is_finite() || !(f.quality > 0.0) || !f.quality.is_finite() {
                return bad(format!("food {i} needs mass >= 0 and quality > 0"));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            if !grid.contains(a.position) {
                return bad(format!("agent {i} at {} is outside the grid", a.position));
            }
            if !seen.insert(a.position) {
                return bad(format!("agent {i} shares its seed cell {}", a.position));
            }
            if !(a.power > 0.0) || !a.power.is_finite() || !(a.mass > 0.0) || !a.mass.is_finite() {
                return bad(format!("agent {i} needs positive power and mass"));
            }
            if !(0.0..=1.0).contains(&a.hunger) {
                return bad(format!("agent {i} hunger {} outside [0, 1]", a.hunger));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub genotype: u32,
    pub power: f64,
    pub mass: f64,
    pub initial_mass: f64,
    pub hunger: f64,
    pub occupied: BTreeSet<AxialCoord>,
}

impl Agent {
    pub fn strength(&self) -> f64 {
        self.power * self.mass
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub grid: HexGrid,
    /// One attractant field per food source.
    pub attractant: Vec<ScalarField>,
    /// One slime field per agent id, kept after the agent dies or fuses.
    pub slime: Vec<ScalarField>,
    /// Living agents in id order.
    pub agents: Vec<Agent>,
    pub foods: Vec<FoodSource>,
    pub food_eaten: Vec<f64>,
    pub tick: u64,
    owner: Vec<Option<usize>>,
    first_contact: BTreeMap<(usize, usize), u64>,
    buffer: ScalarField,
}

impl SimState {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = HexGrid::new(config.radius)?;
        let mut owner = vec![None; grid.len()];
        let agents: Vec<Agent> = config
            .agents
            .iter()
            .enumerate()
            .map(|(id, s)| {
                owner[grid.index_of(s.position).expect("validated")] = Some(id);
                Agent {
                    id,
                    genotype: s.genotype,
                    power: s.power,
                    mass: s.mass,
                    initial_mass: s.mass,
                    hunger: s.hunger,
                    occupied: BTreeSet::from([s.position]),
                }
            })
            .collect();
        let mut state = Self {
            attractant: vec![ScalarField::zeros(&grid); config.foods.len()],
            slime: vec![ScalarField::zeros(&grid); config.agents.len()],
            buffer: ScalarField::zeros(&grid),
            agents,
            foods: config.foods.clone(),
            food_eaten: vec![0.0; config.foods.len()],
            tick: 0,
            owner,
            first_contact: BTreeMap::new(),
            grid,
        };
        state.record_contacts();
        Ok(state)
    }

    pub fn owner_of(&self, c: AxialCoord) -> Option<usize> {
        self.grid.index_of(c).and_then(|i| self.owner[i])
    }

    pub fn agent(&self, id: usize) -> Option<&Agent> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// Sum of all attractant fields at cell `i`.
    pub fn attractant_at(&self, i: usize) -> f64 {
        self.attractant.iter().map(|f| f.get(i)).sum()
    }

    /// Slime of every agent other than `id` at cell `i`.
    pub fn competitor_slime_at(&self, id: usize, i: usize) -> f64 {
        self.slime.iter().enumerate().filter(|&(b, _)| b != id).map(|(_, f)| f.get(i)).sum()
    }

    pub fn first_contact(&self, agent: usize, food: usize) -> Option<u64> {
        self.first_contact.get(&(agent, food)).copied()
    }

    /// Earliest tick at which `agent` touched any food.
    pub fn first_food_tick(&self, agent: usize) -> Option<u64> {
        self.first_contact.iter().filter(|((a, _), _)| *a == agent).map(|(_, &t)| t).min()
    }

    fn record_contacts(&mut self) -> Vec<Contact> {
        let mut fresh = Vec::new();
        for a in &self.agents {
            for (f, food) in self.foods.iter().enumerate() {
                if self.first_contact.contains_key(&(a.id, f)) {
                    continue;
                }
                if a.occupied.iter().any(|c| c.distance(food.position) <= 1) {
                    self.first_contact.insert((a.id, f), self.tick);
                    fresh.push(Contact { agent: a.id, food: f, tick: self.tick });
                }
            }
        }
        fresh
    }

    fn is_finished(&self) -> bool {
        self.agents.is_empty() || self.foods.iter().all(|f| f.mass <= 0.0)
    }
}

/// Adds one tick of emission to every field, then diffuses each one step.
pub fn emit_and_diffuse(state: &mut SimState, config: &SimConfig) -> Result<()> {
    for (field, food) in state.attractant.iter_mut().zip(&state.foods) {
        let i = state.grid.require(food.position)?;
        field.add(i, config.kappa * food.mass * food.quality);
    }
    for a in &state.agents {
        let share = config.slime_rate * a.mass / a.occupied.len() as f64;
        for &c in &a.occupied {
            state.slime[a.id].add(state.grid.require(c)?, share);
        }
    }
    let SimState { grid, attractant, slime, buffer, .. } = state;
    for field in attractant.iter_mut().chain(slime.iter_mut()) {
        diffuse_into(field, config.delta, grid, buffer)?;
        std::mem::swap(field, buffer);
    }
    Ok(())
}

fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Noise term for one (tick, agent, cell); independent of evaluation order.
fn score_noise(config: &SimConfig, tick: u64, agent: usize, c: AxialCoord) -> f64 {
    if config.score_noise == 0.0 {
        return 0.0;
    }
    let key = [tick, agent as u64, c.q as u32 as u64, c.r as u32 as u64]
        .iter()
        .fold(mix(config.seed), |h, &k| mix(h ^ k));
    let u: f64 = ChaCha8Rng::seed_from_u64(key).random();
    config.score_noise * (2.0 * u - 1.0)
}

fn cell_score(agent: &Agent, state: &SimState, config: &SimConfig, i: usize) -> f64 {
    let c = state.grid.cell(i);
    agent.hunger * config.w_food * state.attractant_at(i)
        - config.w_competitor * state.competitor_slime_at(agent.id, i)
        - config.w_self * state.slime[agent.id].get(i)
        + score_noise(config, state.tick, agent.id, c)
}

/// Descending score, ties by `(q, r)` ascending.
fn rank(scored: &mut [(AxialCoord, f64)]) {
    scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        other => other,
    });
}

/// Scores every free in-grid cell adjacent to the agent, best first.
pub fn score_frontier(agent: &Agent, state: &SimState, config: &SimConfig) -> Result<Vec<(AxialCoord, f64)>> {
    let mut frontier = BTreeSet::new();
    for &c in &agent.occupied {
        let i = state.grid.require(c)?;
        frontier.extend(state.grid.neighbor_indices(i).filter(|&j| state.owner[j].is_none()));
    }
    if frontier.is_empty() {
        return Err(Error::EmptyFrontier(agent.id));
    }
    let mut scored: Vec<_> = frontier
        .into_iter()
        .map(|i| (state.grid.cell(i), cell_score(agent, state, config, i)))
        .collect();
    rank(&mut scored);
    Ok(scored)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConflictOutcome {
    Winner(usize),
    /// Ids of the claimants that merge into one plasmodium.
    Fusion(Vec<usize>),
}

/// Decides a contested cell. Same-genotype claimants fuse when fusion is
/// enabled; otherwise the largest `power * mass` wins, lowest id on ties.
pub fn resolve_conflict(claimants: &[&Agent], fusion_enabled: bool) -> ConflictOutcome {
    assert!(!claimants.is_empty(), "a conflict needs claimants");
    let genotype = claimants[0].genotype;
    if fusion_enabled && claimants.len() > 1 && claimants.iter().all(|a| a.genotype == genotype) {
        let mut ids: Vec<usize> = claimants.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        return ConflictOutcome::Fusion(ids);
    }
    let winner = claimants
        .iter()
        .max_by(|a, b| a.strength().total_cmp(&b.strength()).then(b.id.cmp(&a.id)))
        .expect("non-empty");
    ConflictOutcome::Winner(winner.id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub agent: usize,
    pub food: usize,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionEvent {
    pub tick: u64,
    pub cell: AxialCoord,
    pub survivor: usize,
    pub absorbed: Vec<usize>,
    pub genotypes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTick {
    pub id: usize,
    pub genotype: u32,
    pub mass: f64,
    pub hunger: f64,
    pub cells: usize,
    pub eaten: f64,
    pub claimed: Vec<AxialCoord>,
    pub released: Vec<AxialCoord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickReport {
    pub tick: u64,
    pub agents: Vec<AgentTick>,
    pub food_remaining: Vec<f64>,
    /// Contacts first made during this tick.
    pub contacts: Vec<Contact>,
    pub fusions: Vec<FusionEvent>,
    pub deaths: Vec<usize>,
}

/// Advances the simulation by one tick.
pub fn step(state: &mut SimState, config: &SimConfig) -> Result<TickReport> {
    emit_and_diffuse(state, config)?;

    let n = state.agents.len();
    let mut ranked: Vec<Vec<AxialCoord>> = Vec::with_capacity(n);
    let mut budget: Vec<usize> = Vec::with_capacity(n);
    for a in &state.agents {
        let list = match score_frontier(a, state, config) {
            Ok(list) => list.into_iter().filter(|&(_, s)| s > 0.0).map(|(c, _)| c).collect(),
            Err(Error::EmptyFrontier(_)) => Vec::new(),
            Err(e) => return Err(e),
        };
        ranked.push(list);
        budget.push((a.strength() / config.expansion_scale).ceil().max(0.0) as usize);
    }

    // Claim rounds: every agent bids for its next best cells; contested
    // cells are decided and losers move on to their next choice.
    let mut cursor = vec![0usize; n];
    let mut taken = BTreeSet::new();
    let mut grants: Vec<Vec<AxialCoord>> = vec![Vec::new(); n];
    let mut group: Vec<usize> = (0..n).collect();
    let mut fusing = vec![false; n];
    let mut fusion_cells: Vec<(AxialCoord, Vec<usize>)> = Vec::new();
    loop {
        let mut bids: BTreeMap<AxialCoord, Vec<usize>> = BTreeMap::new();
        for k in 0..n {
            let mut want = if fusing[k] { 0 } else { budget[k] };
            while want > 0 && cursor[k] < ranked[k].len() {
                let c = ranked[k][cursor[k]];
                cursor[k] += 1;
                if !taken.contains(&c) {
                    bids.entry(c).or_default().push(k);
                    want -= 1;
                }
            }
        }
        if bids.is_empty() {
            break;
        }
        for (cell, bidders) in bids {
            taken.insert(cell);
            let claimants: Vec<&Agent> = bidders.iter().map(|&k| &state.agents[k]).collect();
            match resolve_conflict(&claimants, config.fusion_enabled && bidders.len() > 1) {
                ConflictOutcome::Winner(id) => {
                    let k = bidders[claimants.iter().position(|a| a.id == id).expect("winner is a claimant")];
                    grants[k].push(cell);
                    budget[k] -= 1;
                }
                ConflictOutcome::Fusion(_) => {
                    let root = bidders.iter().map(|&k| find(&mut group, k)).min().expect("bidders");
                    for &k in &bidders {
                        let r = find(&mut group, k);
                        group[r] = root;
                        fusing[k] = true;
                    }
                    fusion_cells.push((cell, bidders));
                }
            }
        }
    }

    let tick = state.tick + 1;
    let mut claimed: Vec<Vec<AxialCoord>> = grants.clone();
    for (k, cells) in grants.iter().enumerate() {
        let a = &mut state.agents[k];
        for &c in cells {
            a.occupied.insert(c);
            state.owner[state.grid.require(c)?] = Some(a.id);
        }
        a.mass -= config.expansion_cost * cells.len() as f64;
    }

    let mut fusions = Vec::new();
    let mut absorbed_into: Vec<Option<usize>> = vec![None; n];
    if !fusion_cells.is_empty() {
        for k in 0..n {
            let r = find(&mut group, k);
            if r != k {
                absorbed_into[k] = Some(r);
            }
        }
        for (cell, bidders) in &fusion_cells {
            let root = find(&mut group, bidders[0]);
            let a = &mut state.agents[root];
            a.occupied.insert(*cell);
            a.mass -= config.expansion_cost;
            state.owner[state.grid.require(*cell)?] = Some(a.id);
            claimed[root].push(*cell);
        }
        for k in 0..n {
            let Some(r) = absorbed_into[k] else { continue };
            let donor = state.agents[k].clone();
            let total = state.agents[r].mass + donor.mass;
            let taker = &mut state.agents[r];
            if total > 0.0 {
                taker.power = (taker.power * taker.mass + donor.power * donor.mass) / total;
                taker.hunger = (taker.hunger * taker.mass + donor.hunger * donor.mass) / total;
            }
            taker.mass = total;
            taker.initial_mass += donor.initial_mass;
            for &c in &donor.occupied {
                taker.occupied.insert(c);
                state.owner[state.grid.require(c)?] = Some(taker.id);
            }
            let donor_slime = state.slime[donor.id].clone();
            for i in 0..state.grid.len() {
                state.slime[taker.id].add(i, donor_slime.get(i));
            }
            state.slime[donor.id] = ScalarField::zeros(&state.grid);
            let moved = std::mem::take(&mut claimed[k]);
            claimed[r].extend(moved);
        }
        let mut by_root: BTreeMap<usize, (AxialCoord, Vec<usize>)> = BTreeMap::new();
        for (cell, bidders) in &fusion_cells {
            let root = find(&mut group, bidders[0]);
            let entry = by_root.entry(root).or_insert((*cell, Vec::new()));
            entry.1.extend(bidders.iter().copied().filter(|&k| k != root));
        }
        for (root, (cell, mut members)) in by_root {
            members.sort_unstable();
            members.dedup();
            let mut genotypes = vec![state.agents[root].genotype];
            genotypes.extend(members.iter().map(|&k| state.agents[k].genotype));
            fusions.push(FusionEvent {
                tick,
                cell,
                survivor: state.agents[root].id,
                absorbed: members.iter().map(|&k| state.agents[k].id).collect(),
                genotypes,
            });
        }
    }

    // Feeding.
    let mut eaten = vec![0.0; n];
    for (f, food) in state.foods.iter_mut().enumerate() {
        if food.mass <= 0.0 {
            continue;
        }
        let Some(id) = state.owner[state.grid.require(food.position)?] else { continue };
        let k = state.agents.iter().position(|a| a.id == id).expect("owner is alive");
        let bite = config.eat_rate.min(food.mass);
        food.mass = if bite == food.mass { 0.0 } else { food.mass - bite };
        state.food_eaten[f] += bite;
        state.agents[k].mass += bite;
        eaten[k] += bite;
    }

    // Upkeep, hunger and contraction.
    let mut released: Vec<Vec<AxialCoord>> = vec![Vec::new(); n];
    for k in 0..n {
        if absorbed_into[k].is_some() {
            continue;
        }
        {
            let a = &mut state.agents[k];
            a.mass -= config.upkeep * a.occupied.len() as f64;
            a.hunger = (a.hunger + config.hunger_gain - config.hunger_relief * eaten[k]).clamp(0.0, 1.0);
        }
        let a = &state.agents[k];
        if a.mass > 0.0 && a.mass < config.shrink_fraction * a.initial_mass && a.occupied.len() > 1 {
            if let Some(c) = weakest_releasable(a, state, config)? {
                let a = &mut state.agents[k];
                a.occupied.remove(&c);
                state.owner[state.grid.require(c)?] = None;
                released[k].push(c);
            }
        }
    }

    let mut deaths = Vec::new();
    for k in 0..n {
        let a = &state.agents[k];
        if absorbed_into[k].is_none() && a.mass <= 0.0 {
            deaths.push(a.id);
            for &c in &a.occupied {
                state.owner[state.grid.require(c)?] = None;
            }
        }
    }

    let mut agents = Vec::new();
    for (k, a) in state.agents.iter().enumerate() {
        if absorbed_into[k].is_some() || deaths.contains(&a.id) {
            continue;
        }
        agents.push(AgentTick {
            id: a.id,
            genotype: a.genotype,
            mass: a.mass,
            hunger: a.hunger,
            cells: a.occupied.len(),
            eaten: eaten[k],
            claimed: claimed[k].clone(),
            released: released[k].clone(),
        });
    }
    let mut k = 0;
    state.agents.retain(|a| {
        let keep = absorbed_into[k].is_none() && !deaths.contains(&a.id);
        k += 1;
        keep
    });

    state.tick = tick;
    let contacts = state.record_contacts();
    Ok(TickReport {
        tick,
        agents,
        food_remaining: state.foods.iter().map(|f| f.mass).collect(),
        contacts,
        fusions,
        deaths,
    })
}

fn find(group: &mut [usize], mut k: usize) -> usize {
    while group[k] != k {
        group[k] = group[group[k]];
        k = group[k];
    }
    k
}

/// Lowest-scoring occupied cell whose removal keeps the body connected.
fn weakest_releasable(agent: &Agent, state: &SimState, config: &SimConfig) -> Result<Option<AxialCoord>> {
    let mut scored = Vec::with_capacity(agent.occupied.len());
    for &c in &agent.occupied {
        scored.push((c, cell_score(agent, state, config, state.grid.require(c)?)));
    }
    rank(&mut scored);
    Ok(scored.iter().rev().map(|&(c, _)| c).find(|&c| stays_connected(&agent.occupied, c)))
}

fn stays_connected(cells: &BTreeSet<AxialCoord>, removed: AxialCoord) -> bool {
    let Some(&start) = cells.iter().find(|&&c| c != removed) else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for d in crate::hex::DIRECTIONS {
            let n = c + d;
            if n != removed && cells.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == cells.len() - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub id: usize,
    pub genotype: u32,
    pub alive: bool,
    pub final_mass: f64,
    pub final_hunger: f64,
    pub cells: usize,
    /// First tick at which the agent touched any food.
    pub first_food_tick: Option<u64>,
    pub death_tick: Option<u64>,
    pub absorbed_into: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub ticks: u64,
    pub agents: Vec<AgentSummary>,
    pub food_initial: Vec<f64>,
    pub food_eaten: Vec<f64>,
    pub food_remaining: Vec<f64>,
    pub contacts: Vec<Contact>,
    pub fusions: Vec<FusionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub reports: Vec<TickReport>,
    pub summary: SimSummary,
}

impl SimResult {
    /// One JSON object per tick, newline terminated.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.reports {
            out.push_str(&serde_json::to_string(r).expect("reports serialize"));
            out.push('\n');
        }
        out
    }
}

/// Runs until all food is eaten, all agents are gone, or `max_ticks`.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    let mut state = SimState::new(config)?;
    let mut reports = Vec::new();
    while !state.is_finished() && state.tick < config.max_ticks {
        reports.push(step(&mut state, config)?);
    }
    Ok(SimResult { summary: summarize(config, &state, &reports), reports })
}

fn summarize(config: &SimConfig, state: &SimState, reports: &[TickReport]) -> SimSummary {
    let mut death_tick = BTreeMap::new();
    let mut absorbed = BTreeMap::new();
    for r in reports {
        for &d in &r.deaths {
            death_tick.insert(d, r.tick);
        }
        for f in &r.fusions {
            for &a in &f.absorbed {
                absorbed.insert(a, f.survivor);
            }
        }
    }
    let agents = config
        .agents
        .iter()
        .enumerate()
        .map(|(id, seed)| {
            let live = state.agent(id);
            AgentSummary {
                id,
                genotype: seed.genotype,
                alive: live.is_some(),
                final_mass: live.map_or(0.0, |a| a.mass),
                final_hunger: live.map_or(seed.hunger, |a| a.hunger),
                cells: live.map_or(0, |a| a.occupied.len()),
                first_food_tick: state.first_food_tick(id),
                death_tick: death_tick.get(&id).copied(),
                absorbed_into: absorbed.get(&id).copied(),
            }
        })
        .collect();
    SimSummary {
        ticks: state.tick,
        agents,
        food_initial: config.foods.iter().map(|f| f.mass).collect(),
        food_eaten: state.food_eaten.clone(),
        food_remaining: state.foods.iter().map(|f| f.mass).collect(),
        contacts: state
            .first_contact
            .iter()
            .map(|(&(agent, food), &tick)| Contact { agent, food, tick })
            .collect(),
        fusions: reports.iter().flat_map(|r| r.fusions.iter().cloned()).collect(),
    }
}
