//! Ant colony optimisation for the travelling salesman problem, with the
//! pheromone update blended toward a Physarum conductivity field.
//!
//! The field comes from running the adaptation loop on the complete city
//! graph, with every pair of cities taking turns as source and sink. Short
//! edges that many city pairs route through end up thick. Each iteration
//! the ants' standard evaporate-and-deposit update is mixed with that field:
//!
//! ```text
//! tau' = (1 - epsilon) * ((1 - rho) * tau + deposits) + epsilon * D_norm
//! ```
//!
//! With `epsilon = 0` this is plain ACO; with `epsilon = 1` the pheromone is
//! the field itself.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::{feedback, relax, update_conductivities, SolverParams};
use crate::error::{Error, Result};
use crate::flow::{solve_flow, MIN_CONDUCTIVITY};
use crate::graph::{Network, VertexId};
use crate::strategies::{make_terminals, StrategyMode};

/// Pheromone never drops below this.
pub const TAU_FLOOR: f64 = 1e-12;

/// Symmetric TSP instance as a dense distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    n: usize,
    dist: Vec<f64>,
}

impl TspInstance {
    /// Euclidean instance from city coordinates.
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        let n = coords.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                dist[i * n + j] = dx.hypot(dy);
            }
        }
        Self::from_flat(n, dist)
    }

    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::param("distances", format!("row {i} has {} entries, expected {n}", r.len())));
        }
        Self::from_flat(n, rows.concat())
    }

    fn from_flat(n: usize, dist: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("cities", format!("need at least 3 cities, got {n}")));
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::param("distances", format!("d({i},{i}) is not zero")));
            }
            for j in 0..i {
                let (a, b) = (dist[i * n + j], dist[j * n + i]);
                if !(a > 0.0) || !a.is_finite() {
                    return Err(Error::param("distances", format!("d({i},{j}) = {a} is not positive")));
                }
                if (a - b).abs() > 1e-9 * a.max(b) {
                    return Err(Error::param("distances", format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        Ok(Self { n, dist })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Length of the closed tour visiting `cities` in order.
    pub fn tour_length(&self, cities: &[usize]) -> f64 {
        let k = cities.len();
        (0..k).map(|i| self.distance(cities[i], cities[(i + 1) % k])).sum()
    }

    /// Complete graph on the cities with distances as edge lengths.
    pub fn complete_graph(&self) -> Network {
        let mut triples = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                triples.push((i.to_string(), j.to_string(), self.distance(i, j)));
            }
        }
        Network::from_named_edges(&triples).expect("distances are positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PheromoneMatrix {
    n: usize,
    tau: Vec<f64>,
}

impl PheromoneMatrix {
    pub fn uniform(n: usize, tau0: f64) -> Self {
        Self { n, tau: vec![tau0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.tau[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.tau
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// How the city pairs drive the conductivity field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FieldMode {
    /// Every iteration feeds back the mean response over all city pairs.
    /// Deterministic and symmetric under relabelling of cities.
    #[default]
    AllPairs,
    /// Every iteration one random ordered pair carries the flow.
    RotatingPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcoParams {
    pub ants: usize,
    pub iterations: usize,
    pub alpha_pher: f64,
    pub beta_heur: f64,
    /// Evaporation rate in `(0, 1)`.
    pub rho: f64,
    /// Weight of the Physarum field in `[0, 1]`.
    pub epsilon: f64,
    pub seed: u64,
    pub tau0: f64,
    pub field_mode: FieldMode,
    /// Adaptation iterations used to build the field.
    pub field_iters: usize,
    /// Advance the field by another `field_iters` every this many ACO
    /// iterations; zero builds it once up front.
    pub refresh_every: usize,
}

impl Default for AcoParams {
    fn default() -> Self {
        Self {
            ants: 10,
            iterations: 100,
            alpha_pher: 1.0,
            beta_heur: 2.0,
            rho: 0.5,
            epsilon: 0.3,
            seed: 0,
            tau0: 1.0,
            field_mode: FieldMode::AllPairs,
            field_iters: 200,
            refresh_every: 0,
        }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<()> {
        if self.ants == 0 {
            return Err(Error::param("ants", "must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::param("iterations", "must be positive"));
        }
        if !(self.alpha_pher >= 0.0) || !(self.beta_heur >= 0.0) {
            return Err(Error::param("alpha_pher", "exponents must be non-negative"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::param("rho", format!("{} outside (0, 1)", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::param("epsilon", format!("{} outside [0, 1]", self.epsilon)));
        }
        if !(self.tau0 > 0.0) || !self.tau0.is_finite() {
            return Err(Error::param("tau0", "must be positive"));
        }
        Ok(())
    }
}

/// Conductivities on the complete city graph, evolved by the adaptation law.
#[derive(Debug, Clone)]
pub struct ConductanceField {
    network: Network,
    solver: SolverParams,
    mode: FieldMode,
    seed: u64,
    steps: usize,
}

impl ConductanceField {
    pub fn new(instance: &TspInstance, solver: &SolverParams, mode: FieldMode, seed: u64) -> Result<Self> {
        solver.validate()?;
        let mut network = instance.complete_graph();
        network.set_conductivity(solver.init_conductivity);
        Ok(Self { network, solver: solver.clone(), mode, seed, steps: 0 })
    }

    pub fn advance(&mut self, iterations: usize) -> Result<()> {
        for _ in 0..iterations {
            match self.mode {
                FieldMode::AllPairs => self.all_pairs_step()?,
                FieldMode::RotatingPairs => {
                    let mode = StrategyMode::Mimo {
                        terminals: self.network.vertices().collect(),
                        seed: self.seed,
                    };
                    let terminals = make_terminals(&mode, self.steps, self.solver.inflow)?;
                    solve_flow(&mut self.network, &terminals, self.solver.tol)?;
                    update_conductivities(&mut self.network, &self.solver);
                }
            }
            self.steps += 1;
        }
        Ok(())
    }

    /// Mean feedback over all pairs from the grounded Laplacian inverse:
    /// the flux of pair (s, t) on edge (u, v) is
    /// `w_uv (G_us - G_ut - G_vs + G_vt)`.
    fn all_pairs_step(&mut self) -> Result<()> {
        let n = self.network.vertex_count();
        let mut lap = DMatrix::<f64>::zeros(n - 1, n - 1);
        for e in self.network.edges() {
            if e.conductivity < MIN_CONDUCTIVITY {
                continue;
            }
            let w = e.weight();
            let (u, v) = (e.u.0, e.v.0);
            if u > 0 {
                lap[(u - 1, u - 1)] += w;
            }
            if v > 0 {
                lap[(v - 1, v - 1)] += w;
            }
            if u > 0 && v > 0 {
                lap[(u - 1, v - 1)] -= w;
                lap[(v - 1, u - 1)] -= w;
            }
        }
        let inv = lap
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("city graph fell apart".into()))?
            .inverse();
        let g = |a: usize, b: usize| if a == 0 || b == 0 { 0.0 } else { inv[(a - 1, b - 1)] };
        let pairs = (n * (n - 1) / 2) as f64;
        let inflow = self.solver.inflow;
        let mu = self.solver.mu;
        for e in self.network.edges_mut() {
            if e.conductivity < MIN_CONDUCTIVITY {
                e.conductivity = relax(e.conductivity, 0.0, &self.solver);
                continue;
            }
            let (u, v, w) = (e.u.0, e.v.0, e.weight());
            let mut total = 0.0;
            for s in 0..n {
                for t in s + 1..n {
                    let q = inflow * w * (g(u, s) - g(u, t) - g(v, s) + g(v, t));
                    total += feedback(q, mu);
                }
            }
            e.conductivity = relax(e.conductivity, total / pairs, &self.solver);
        }
        Ok(())
    }

    /// Conductivity per city pair, scaled so the off-diagonal mean is 1.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let n = self.network.vertex_count();
        let mean = self.network.edges().iter().map(|e| e.conductivity).sum::<f64>() / self.network.edge_count() as f64;
        if !(mean > 0.0) {
            return Err(Error::SingularSystem("conductivity field vanished".into()));
        }
        let mut out = vec![0.0; n * n];
        for e in self.network.edges() {
            let d = e.conductivity / mean;
            out[e.u.0 * n + e.v.0] = d;
            out[e.v.0 * n + e.u.0] = d;
        }
        Ok(out)
    }

    pub fn conductivity(&self, i: usize, j: usize) -> f64 {
        self.network
            .find_edge(VertexId(i), VertexId(j))
            .map_or(0.0, |e| self.network.edge(e).conductivity)
    }
}

/// Runs the adaptation loop on the complete city graph for `iterations`
/// steps and returns the conductivities normalized to mean 1 (row-major
/// `n x n`, zero diagonal).
pub fn physarum_conductance_field(
    instance: &TspInstance,
    solver: &SolverParams,
    iterations: usize,
    mode: FieldMode,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut field = ConductanceField::new(instance, solver, mode, seed)?;
    field.advance(iterations)?;
    field.normalized()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub cities: Vec<usize>,
    pub length: f64,
}

/// Evaporation plus `1 / L` deposits along each tour, blended with the field.
pub fn hybrid_pheromone_update(
    tau: &PheromoneMatrix,
    tours: &[Tour],
    field: &[f64],
    params: &AcoParams,
) -> PheromoneMatrix {
    let n = tau.n;
    assert_eq!(field.len(), n * n, "field shape");
    let mut deposit = vec![0.0; n * n];
    for tour in tours {
        let k = tour.cities.len();
        let amount = 1.0 / tour.length;
        for i in 0..k {
            let (a, b) = (tour.cities[i], tour.cities[(i + 1) % k]);
            deposit[a * n + b] += amount;
            deposit[b * n + a] += amount;
        }
    }
    let eps = params.epsilon;
    let next = tau
        .tau
        .iter()
        .zip(&deposit)
        .zip(field)
        .map(|((&t, &dep), &d)| {
            let standard = (1.0 - params.rho) * t + dep;
            ((1.0 - eps) * standard + eps * d).max(TAU_FLOOR)
        })
        .collect();
    PheromoneMatrix { n, tau: next }
}

/// Per-ant random stream for one iteration.
pub fn ant_rng(seed: u64, iteration: usize, ants: usize, ant: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((iteration * ants + ant) as u64);
    rng
}

/// Roulette-wheel tour with weights `tau^alpha * (1/d)^beta`, starting at a
/// random city.
pub fn construct_tour(instance: &TspInstance, tau: &PheromoneMatrix, params: &AcoParams, rng: &mut impl Rng) -> Tour {
    let n = instance.len();
    let mut visited = vec![false; n];
    let mut cities = Vec::with_capacity(n);
    let mut here = rng.random_range(0..n);
    visited[here] = true;
    cities.push(here);
    let mut weights = Vec::with_capacity(n);
    for _ in 1..n {
        weights.clear();
        let mut total = 0.0;
        for j in 0..n {
            if visited[j] {
                continue;
            }
            let w = tau.get(here, j).powf(params.alpha_pher) * (1.0 / instance.distance(here, j)).powf(params.beta_heur);
            total += w;
            weights.push((j, w));
        }
        let mut pick = rng.random::<f64>() * total;
        let mut next = weights.last().expect("unvisited city").0;
        for &(j, w) in &weights {
            if pick < w {
                next = j;
                break;
            }
            pick -= w;
        }
        visited[next] = true;
        cities.push(next);
        here = next;
    }
    let length = instance.tour_length(&cities);
    Tour { cities, length }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspResult {
    pub best_tour: Vec<usize>,
    pub best_length: f64,
    /// First iteration whose best-so-far equals the final best.
    pub convergence_iteration: usize,
    /// Best-so-far length after each iteration.
    pub best_per_iteration: Vec<f64>,
    /// Shortest tour of each iteration, in ant order on ties.
    pub iteration_best: Vec<Tour>,
}

pub fn solve_tsp(instance: &TspInstance, params: &AcoParams) -> Result<TspResult> {
    solve_tsp_with(instance, params, &SolverParams::default())
}

/// As [`solve_tsp`], with explicit adaptation parameters for the field.
pub fn solve_tsp_with(instance: &TspInstance, params: &AcoParams, solver: &SolverParams) -> Result<TspResult> {
    params.validate()?;
    let n = instance.len();
    let mut field = if params.epsilon > 0.0 {
        let mut f = ConductanceField::new(instance, solver, params.field_mode, params.seed)?;
        f.advance(params.field_iters)?;
        Some(f)
    } else {
        None
    };
    let mut d_norm = match &field {
        Some(f) => f.normalized()?,
        None => vec![0.0; n * n],
    };

    let mut tau = PheromoneMatrix::uniform(n, params.tau0);
    let mut best: Option<Tour> = None;
    let mut best_per_iteration = Vec::with_capacity(params.iterations);
    let mut iteration_best = Vec::with_capacity(params.iterations);
    for it in 0..params.iterations {
        if let Some(f) = field.as_mut() {
            if params.refresh_every > 0 && it > 0 && it % params.refresh_every == 0 {
                f.advance(params.field_iters)?;
                d_norm = f.normalized()?;
            }
        }
        let tours: Vec<Tour> = (0..params.ants)
            .map(|ant| construct_tour(instance, &tau, params, &mut ant_rng(params.seed, it, params.ants, ant)))
            .collect();
        let round_best = tours
            .iter()
            .fold(None::<&Tour>, |acc, t| match acc {
                Some(b) if b.length <= t.length => Some(b),
                _ => Some(t),
            })
            .expect("at least one ant")
            .clone();
        if best.as_ref().is_none_or(|b| round_best.length < b.length) {
            best = Some(round_best.clone());
        }
        best_per_iteration.push(best.as_ref().expect("set above").length);
        iteration_best.push(round_best);
        tau = hybrid_pheromone_update(&tau, &tours, &d_norm, params);
    }
    let best = best.expect("iterations > 0");
    let convergence_iteration = best_per_iteration
        .iter()
        .position(|&l| l == best.length)
        .expect("final best is recorded");
    Ok(TspResult {
        best_tour: best.cities,
        best_length: best.length,
        convergence_iteration,
        best_per_iteration,
        iteration_best,
    })
}
