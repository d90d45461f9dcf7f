//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::{Duration, Instant};

use petgraph::algo::{astar, dijkstra};
use petgraph::graph::{NodeIndex, UnGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use physarum::aco::{ant_rng, solve_tsp, AcoParams, TspInstance, TAU_FLOOR};
use physarum::adaptation::{run_solver, update_conductivities, SolverParams};
use physarum::compete::{run, step, AgentSeed, FoodSource, SimConfig, SimState};
use physarum::flow::{kirchhoff_violation, solve_flow};
use physarum::graph::{build_network, Network, TerminalConfig, VertexId};
use physarum::hex::{diffuse, AxialCoord, HexGrid, ScalarField, DIRECTIONS};
use physarum::io::parse_maze;
use physarum::strategies::{make_terminals, steiner_approx, FlowSplit, StrategyMode};

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let mut v = f();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            v.pass = false;
            v.detail.push_str(&format!("; over the {:?} budget", limit));
        }
    }
    let tag = if v.pass { "PASS" } else { "FAIL" };
    println!("{tag} [{id}] {name}: {} ({:.2?})", v.detail, took);
    v.pass
}

fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize, lengths: (f64, f64)) -> Vec<(usize, usize, f64)> {
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        seen.insert((u, v));
        edges.push((u, v, rng.random_range(lengths.0..lengths.1)));
    }
    let mut tries = 0;
    while edges.len() < n - 1 + extra && tries < 50 * n {
        tries += 1;
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            edges.push((key.0, key.1, rng.random_range(lengths.0..lengths.1)));
        }
    }
    edges
}

// ---------------------------------------------------------------- 1

fn kirchhoff() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut states = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=50);
        let extra = rng.random_range(0..=n);
        let mut net = build_network(&random_connected(&mut rng, n, extra, (0.1, 10.0))).unwrap();
        for e in net.edges_mut() {
            e.conductivity = rng.random_range(0.01..2.0);
        }
        let mut verts: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            verts.swap(i, rng.random_range(0..=i));
        }
        let terminals = if n >= 4 && seed % 2 == 0 {
            let mode = StrategyMode::Miso {
                sources: vec![VertexId(verts[0]), VertexId(verts[1])],
                sink: VertexId(verts[2]),
                split: FlowSplit::Weighted(vec![1.0, rng.random_range(0.1..5.0)]),
            };
            make_terminals(&mode, 0, rng.random_range(0.1..10.0)).unwrap()
        } else {
            TerminalConfig::single(VertexId(verts[0]), VertexId(verts[1]), rng.random_range(0.1..10.0))
        };
        let params = SolverParams::default();
        for _ in 0..3 {
            solve_flow(&mut net, &terminals, params.tol).unwrap();
            worst = worst.max(kirchhoff_violation(&net, &terminals));
            states += 1;
            update_conductivities(&mut net, &params);
        }
    }
    Verdict { pass: worst <= 1e-8, detail: format!("{states} solved states, worst imbalance {worst:.2e}") }
}

// ---------------------------------------------------------------- 2

fn oracle_path(edges: &[(usize, usize, f64)], n: usize, s: usize, t: usize) -> Option<BTreeSet<(usize, usize)>> {
    let mut g = UnGraph::<(), f64>::new_undirected();
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    for &(u, v, w) in edges {
        g.add_edge(nodes[u], nodes[v], w);
    }
    let (best, path) = astar(&g, nodes[s], |x| x == nodes[t], |e| *e.weight(), |_| 0.0)?;
    let from_s = dijkstra(&g, nodes[s], None, |e| *e.weight());
    let from_t = dijkstra(&g, nodes[t], None, |e| *e.weight());
    // An edge lies on some shortest path iff it closes the s-t distance.
    let on_some = edges
        .iter()
        .filter(|&&(u, v, w)| {
            let through = |a: usize, b: usize| from_s[&nodes[a]] + w + from_t[&nodes[b]];
            through(u, v).min(through(v, u)) <= best * (1.0 + 1e-9)
        })
        .count();
    (on_some == path.len() - 1).then(|| {
        path.windows(2)
            .map(|p| {
                let (a, b) = (p[0].index(), p[1].index());
                (a.min(b), a.max(b))
            })
            .collect()
    })
}

fn survivors(net: &Network, surviving: &[physarum::graph::EdgeId]) -> BTreeSet<(usize, usize)> {
    surviving
        .iter()
        .map(|&id| {
            let e = net.edge(id);
            let (a, b) = (net.name(e.u).parse::<usize>().unwrap(), net.name(e.v).parse::<usize>().unwrap());
            (a.min(b), a.max(b))
        })
        .collect()
}

/// Shortest S-T corridor by BFS over the raw maze characters.
fn bfs_corridor(maze: &str) -> BTreeSet<((usize, usize), (usize, usize))> {
    let rows: Vec<&[u8]> = maze.lines().map(str::as_bytes).collect();
    let find = |ch| {
        rows.iter()
            .enumerate()
            .find_map(|(r, row)| row.iter().position(|&c| c == ch).map(|c| (r, c)))
            .unwrap()
    };
    let (s, t) = (find(b'S'), find(b'T'));
    let mut prev = HashMap::from([(s, s)]);
    let mut queue = VecDeque::from([s]);
    while let Some((r, c)) = queue.pop_front() {
        for (dr, dc) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
            let (nr, nc) = ((r as i32 + dr) as usize, (c as i32 + dc) as usize);
            if rows[nr][nc] != b'#' && !prev.contains_key(&(nr, nc)) {
                prev.insert((nr, nc), (r, c));
                queue.push_back((nr, nc));
            }
        }
    }
    let mut out = BTreeSet::new();
    let mut here = t;
    while here != s {
        let p = prev[&here];
        out.insert((p.min(here), p.max(here)));
        here = p;
    }
    out
}

const TWO_CORRIDORS: &str = "\
#####
#...#
#S#T#
#.#.#
#...#
#####
";

fn shortest_path() -> Verdict {
    let params = SolverParams::default();
    let (mut matched, mut graphs, mut seed) = (0, 0, 0u64);
    while graphs < 100 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        seed += 1;
        let n = rng.random_range(6..=30);
        let edges = random_connected(&mut rng, n, n / 2 + 2, (0.5, 5.0));
        let t = rng.random_range(1..n);
        let Some(path) = oracle_path(&edges, n, 0, t) else { continue };
        graphs += 1;
        let net = build_network(&edges).unwrap();
        let res = run_solver(&net, &TerminalConfig::single(VertexId(0), VertexId(t), 1.0), &params).unwrap();
        if survivors(&res.final_network, &res.surviving) == path {
            matched += 1;
        }
    }
    let maze = parse_maze(TWO_CORRIDORS, 1.0).unwrap();
    let expected = bfs_corridor(TWO_CORRIDORS);
    let mut maze_hits = 0;
    let runs = 10;
    for k in 0..runs {
        let p = SolverParams { gamma: 0.05 + 0.05 * k as f64, ..params.clone() };
        let res = run_solver(&maze.network, &maze.terminals, &p).unwrap();
        let got: BTreeSet<_> = res
            .surviving
            .iter()
            .map(|&id| {
                let e = res.final_network.edge(id);
                let (a, b) = (maze.cells[e.u.0], maze.cells[e.v.0]);
                (a.min(b), a.max(b))
            })
            .collect();
        if got == expected && expected.len() == 4 {
            maze_hits += 1;
        }
    }
    Verdict {
        pass: matched >= 95 && maze_hits == runs,
        detail: format!("{matched}/100 random graphs match Dijkstra; maze corridor {maze_hits}/{runs}"),
    }
}

// ---------------------------------------------------------------- 3

fn pruning() -> Verdict {
    let params = SolverParams::default();
    // s=0, t=2, spur 1-3 hanging off the path.
    let spur = build_network(&[(0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap();
    let res = run_solver(&spur, &TerminalConfig::single(VertexId(0), VertexId(2), 1.0), &params).unwrap();
    let spur_d = res.final_network.edge(res.final_network.find_edge(VertexId(1), VertexId(3)).unwrap()).conductivity;

    // Short arm 0-1-3 of length 2, long arm 0-2-3 of length 4.
    let arms = build_network(&[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 2.0), (2, 3, 2.0)]).unwrap();
    let res2 = run_solver(&arms, &TerminalConfig::single(VertexId(0), VertexId(3), 1.0), &params).unwrap();
    let long_d: Vec<f64> = [(0, 2), (2, 3)]
        .iter()
        .map(|&(a, b)| res2.final_network.edge(res2.final_network.find_edge(VertexId(a), VertexId(b)).unwrap()).conductivity)
        .collect();
    let pass = res.converged && res2.converged && spur_d < 1e-6 && long_d.iter().all(|&d| d < 1e-6);
    Verdict { pass, detail: format!("spur D = {spur_d:.2e}; long arm D = {:.2e}, {:.2e}", long_d[0], long_d[1]) }
}

// ---------------------------------------------------------------- 4

fn floyd(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(u, v, w) in edges {
        d[u][v] = d[u][v].min(w);
        d[v][u] = d[v][u].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn mst(points: &[usize], d: &[Vec<f64>]) -> f64 {
    let mut in_tree = vec![false; points.len()];
    let mut best = vec![f64::INFINITY; points.len()];
    best[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..points.len() {
        let k = (0..points.len()).filter(|&k| !in_tree[k]).min_by(|&a, &b| best[a].total_cmp(&best[b])).unwrap();
        in_tree[k] = true;
        total += best[k];
        for j in 0..points.len() {
            if !in_tree[j] {
                best[j] = best[j].min(d[points[k]][points[j]]);
            }
        }
    }
    total
}

/// Exact Steiner tree for up to four terminals: an optimal tree has at most
/// `k - 2` branch points, so try every such set over the metric closure.
fn steiner_optimum(n: usize, edges: &[(usize, usize, f64)], terminals: &[usize]) -> f64 {
    let d = floyd(n, edges);
    let others: Vec<usize> = (0..n).filter(|v| !terminals.contains(v)).collect();
    let mut best = mst(terminals, &d);
    for (i, &a) in others.iter().enumerate() {
        let mut pts = terminals.to_vec();
        pts.push(a);
        best = best.min(mst(&pts, &d));
        if terminals.len() >= 4 {
            for &b in &others[i + 1..] {
                let mut pts2 = pts.clone();
                pts2.push(b);
                best = best.min(mst(&pts2, &d));
            }
        }
    }
    best
}

fn grid_edges(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = r * w + c;
            if c + 1 < w {
                edges.push((v, v + 1, rng.random_range(1.0..2.0)));
            }
            if r + 1 < h {
                edges.push((v, v + w, rng.random_range(1.0..2.0)));
            }
        }
    }
    edges
}

fn steiner() -> Verdict {
    let params = SolverParams::default();
    let (mut connected, mut within, mut worst) = (0, 0, 0.0f64);
    for k in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(20_000 + k);
        let (w, h) = (rng.random_range(3..=5), rng.random_range(3..=5));
        let n = w * h;
        let edges = grid_edges(&mut rng, w, h);
        let count = rng.random_range(3..=4);
        let mut terminals = BTreeSet::new();
        while terminals.len() < count {
            terminals.insert(rng.random_range(0..n));
        }
        let terminals: Vec<usize> = terminals.into_iter().collect();
        let net = build_network(&edges).unwrap();
        let mode = StrategyMode::Mimo { terminals: terminals.iter().map(|&t| VertexId(t)).collect(), seed: k };
        let Ok(res) = steiner_approx(&net, &mode, &params) else { continue };
        connected += 1;
        let ratio = res.surviving_length() / steiner_optimum(n, &edges, &terminals);
        worst = worst.max(ratio);
        if ratio <= 1.5 {
            within += 1;
        }
    }
    Verdict {
        pass: connected == 20 && within >= 18,
        detail: format!("{connected}/20 connected, {within}/20 within 1.5x of optimum, worst ratio {worst:.3}"),
    }
}

// ---------------------------------------------------------------- 5

fn hex_diffusion() -> Verdict {
    let grid = HexGrid::new(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_mass: f64 = 0.0;
    for _ in 0..1000 {
        let delta = rng.random_range(0.05..=1.0);
        let values = (0..grid.len()).map(|_| rng.random_range(0.0..10.0)).collect();
        let mut field = ScalarField::from_values(&grid, values).unwrap();
        let before = field.total();
        for _ in 0..50 {
            field = diffuse(&field, delta, &grid).unwrap();
        }
        worst_mass = worst_mass.max(((field.total() - before) / before).abs());
    }

    let mut point = ScalarField::zeros(&grid);
    point.add(grid.index_of(AxialCoord::ORIGIN).unwrap(), 1.0);
    let one = diffuse(&point, 0.6, &grid).unwrap();
    let support: BTreeSet<AxialCoord> = grid.cells().iter().copied().filter(|&c| one.at(&grid, c) != Some(0.0)).collect();
    let mut expected: BTreeSet<AxialCoord> = DIRECTIONS.iter().map(|&d| AxialCoord::ORIGIN + d).collect();
    expected.insert(AxialCoord::ORIGIN);
    let ring_two_empty = grid.cells().iter().filter(|c| c.distance(AxialCoord::ORIGIN) == 2).all(|&c| one.at(&grid, c) == Some(0.0));

    let mut field = point;
    for _ in 0..25 {
        field = diffuse(&field, 0.6, &grid).unwrap();
    }
    let mut worst_rot: f64 = 0.0;
    for &c in grid.cells() {
        worst_rot = worst_rot.max((field.at(&grid, c).unwrap() - field.at(&grid, c.rotate60()).unwrap()).abs());
    }
    Verdict {
        pass: worst_mass <= 1e-9 && worst_rot <= 1e-12 && support == expected && ring_two_empty,
        detail: format!(
            "mass drift {worst_mass:.1e}; rotation error {worst_rot:.1e}; one-step support {} cells",
            support.len()
        ),
    }
}

// ---------------------------------------------------------------- 6, 7, 8

fn at(q: i32, r: i32) -> AxialCoord {
    AxialCoord::new(q, r)
}

fn food(q: i32, r: i32, mass: f64, quality: f64) -> FoodSource {
    FoodSource { position: at(q, r), mass, quality }
}

fn symmetric_arena() -> SimConfig {
    SimConfig {
        foods: vec![food(0, 0, 10.0, 1.0)],
        agents: vec![
            AgentSeed { genotype: 1, ..AgentSeed::at(at(-4, 0)) },
            AgentSeed { genotype: 2, ..AgentSeed::at(at(4, 0)) },
        ],
        ..SimConfig::default()
    }
}

fn hunger_fixtures() -> Vec<SimConfig> {
    let base = |foods, agents| SimConfig { foods, agents, score_noise: 1e-3, ..SimConfig::default() };
    vec![
        base(vec![food(5, -2, 5.0, 1.0)], vec![AgentSeed::at(at(-4, 1))]),
        base(
            vec![food(0, 4, 6.0, 1.0)],
            vec![AgentSeed::at(at(-2, 1)), AgentSeed { genotype: 1, power: 2.0, ..AgentSeed::at(at(5, -3)) }],
        ),
        base(
            vec![food(3, 2, 4.0, 1.0), food(-4, 0, 4.0, 0.5)],
            vec![AgentSeed::at(at(0, -2)), AgentSeed { genotype: 1, power: 1.5, ..AgentSeed::at(at(-3, 5)) }],
        ),
    ]
}

/// Mixed-genotype crowd with fusion enabled, for the allorecognition audit.
fn crowd(seed: u64) -> SimConfig {
    SimConfig {
        radius: 7,
        seed,
        score_noise: 1e-3,
        // Each same-genotype pair flanks a food cell, so both bid for it;
        // the third genotype sits between the pairs.
        foods: vec![food(-2, 0, 4.0, 1.0), food(2, 0, 4.0, 1.0)],
        agents: vec![
            AgentSeed { genotype: 1, ..AgentSeed::at(at(-2, 1)) },
            AgentSeed { genotype: 1, ..AgentSeed::at(at(-2, -1)) },
            AgentSeed { genotype: 2, ..AgentSeed::at(at(2, 1)) },
            AgentSeed { genotype: 2, power: 1.5, ..AgentSeed::at(at(2, -1)) },
            AgentSeed { genotype: 3, ..AgentSeed::at(at(0, 0)) },
        ],
        ..SimConfig::default()
    }
}

#[derive(Default)]
struct Audit {
    runs: usize,
    fusions: usize,
    cross_fusions: usize,
    cross_cells: usize,
}

/// Steps a run tick by tick, checking that no cell is held by agents of
/// different genotypes and that fusions never mix genotypes.
fn audited_run(config: &SimConfig, audit: &mut Audit) -> Option<u64> {
    let mut state = SimState::new(config).unwrap();
    let genotype: Vec<u32> = config.agents.iter().map(|a| a.genotype).collect();
    while !state.agents.is_empty() && state.foods.iter().any(|f| f.mass > 0.0) && state.tick < config.max_ticks {
        let report = step(&mut state, config).unwrap();
        for f in &report.fusions {
            audit.fusions += 1;
            if f.absorbed.iter().any(|&a| genotype[a] != genotype[f.survivor]) {
                audit.cross_fusions += 1;
            }
        }
        let mut holder: HashMap<AxialCoord, u32> = HashMap::new();
        for a in &state.agents {
            for &c in &a.occupied {
                if let Some(g) = holder.insert(c, a.genotype) {
                    if g != a.genotype {
                        audit.cross_cells += 1;
                    }
                }
            }
        }
    }
    audit.runs += 1;
    state.first_food_tick(0)
}

fn determinism(audit: &mut Audit) -> Verdict {
    let mut identical = 0;
    for seed in 0..10u64 {
        let config = SimConfig { seed, ..crowd(seed) };
        let (a, b) = (run(&config).unwrap().trace_jsonl(), run(&config).unwrap().trace_jsonl());
        if a == b && !a.is_empty() {
            identical += 1;
        }
        audited_run(&config, audit);
    }
    let sym = symmetric_arena();
    audited_run(&sym, audit);
    let res = run(&sym).unwrap();
    let ticks: Vec<Option<u64>> = res.summary.agents.iter().map(|a| a.first_food_tick).collect();
    Verdict {
        pass: identical == 10 && ticks[0].is_some() && ticks[0] == ticks[1],
        detail: format!("{identical}/10 traces byte-identical; symmetric first contact {:?}", ticks),
    }
}

fn hunger(audit: &mut Audit) -> Verdict {
    let (mut violations, mut reached, mut total) = (0, 0, 0);
    for fixture in hunger_fixtures() {
        for seed in 0..10u64 {
            let times: Vec<u64> = [0.2, 0.5, 0.8]
                .iter()
                .map(|&h| {
                    let mut config = SimConfig { seed, ..fixture.clone() };
                    config.agents[0].hunger = h;
                    let t = audited_run(&config, audit);
                    total += 1;
                    reached += usize::from(t.is_some());
                    t.unwrap_or(u64::MAX)
                })
                .collect();
            violations += times.windows(2).filter(|w| w[1] > w[0]).count();
        }
    }
    Verdict {
        pass: violations == 0,
        detail: format!("{violations} ordering violations over 30 hunger sweeps; food reached in {reached}/{total} runs"),
    }
}

fn allorecognition(audit: &Audit) -> Verdict {
    Verdict {
        pass: audit.cross_fusions == 0 && audit.cross_cells == 0 && audit.fusions > 0,
        detail: format!(
            "{} runs, {} fusions, {} cross-genotype fusions, {} shared cells",
            audit.runs, audit.fusions, audit.cross_fusions, audit.cross_cells
        ),
    }
}

// ---------------------------------------------------------------- 9

/// Plain ant system written out independently, with the same random stream
/// per ant and the same roulette wheel.
fn plain_aco(coords: &[(f64, f64)], p: &AcoParams) -> Vec<(Vec<usize>, f64)> {
    let n = coords.len();
    let d: Vec<Vec<f64>> = coords
        .iter()
        .map(|a| coords.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
        .collect();
    let len = |t: &[usize]| (0..n).map(|i| d[t[i]][t[(i + 1) % n]]).sum::<f64>();
    let mut tau = vec![vec![p.tau0; n]; n];
    let mut trace = Vec::new();
    for it in 0..p.iterations {
        let mut tours = Vec::new();
        for ant in 0..p.ants {
            let mut rng = ant_rng(p.seed, it, p.ants, ant);
            let mut tour = vec![rng.random_range(0..n)];
            while tour.len() < n {
                let i = *tour.last().unwrap();
                let cand: Vec<(usize, f64)> = (0..n)
                    .filter(|j| !tour.contains(j))
                    .map(|j| (j, tau[i][j].powf(p.alpha_pher) * (1.0 / d[i][j]).powf(p.beta_heur)))
                    .collect();
                let total: f64 = cand.iter().map(|c| c.1).sum();
                let mut x = rng.random::<f64>() * total;
                let mut pick = cand.last().unwrap().0;
                for &(j, w) in &cand {
                    if x < w {
                        pick = j;
                        break;
                    }
                    x -= w;
                }
                tour.push(pick);
            }
            let l = len(&tour);
            tours.push((tour, l));
        }
        let best = tours.iter().fold(&tours[0], |b, t| if t.1 < b.1 { t } else { b }).clone();
        trace.push(best);
        let mut dep = vec![vec![0.0; n]; n];
        for (t, l) in &tours {
            for i in 0..n {
                let (a, b) = (t[i], t[(i + 1) % n]);
                dep[a][b] += 1.0 / l;
                dep[b][a] += 1.0 / l;
            }
        }
        for i in 0..n {
            for j in 0..n {
                tau[i][j] = ((1.0 - p.rho) * tau[i][j] + dep[i][j]).max(TAU_FLOOR);
            }
        }
    }
    trace
}

fn brute_force_tour(inst: &TspInstance) -> f64 {
    fn go(k: usize, perm: &mut Vec<usize>, inst: &TspInstance, best: &mut f64) {
        if k == perm.len() {
            *best = best.min(inst.tour_length(perm));
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            go(k + 1, perm, inst, best);
            perm.swap(k, i);
        }
    }
    let mut perm: Vec<usize> = (0..inst.len()).collect();
    let mut best = f64::INFINITY;
    go(1, &mut perm, inst, &mut best);
    best
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[m - 1] + v[m]) as f64 / 2.0
    } else {
        v[m] as f64
    }
}

fn aco() -> Verdict {
    let cities = |seed: u64| -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(90_000 + seed);
        (0..8).map(|_| (rng.random(), rng.random())).collect()
    };
    let mut identical = 0;
    for seed in 0..10u64 {
        let coords = cities(seed);
        let p = AcoParams { epsilon: 0.0, seed, iterations: 60, ..AcoParams::default() };
        let ours = solve_tsp(&TspInstance::from_coords(&coords).unwrap(), &p).unwrap();
        let theirs = plain_aco(&coords, &p);
        let same = ours.iteration_best.len() == theirs.len()
            && ours
                .iteration_best
                .iter()
                .zip(&theirs)
                .all(|(a, b)| a.cities == b.0 && a.length.to_bits() == b.1.to_bits());
        identical += usize::from(same);
    }

    let (mut opt_plain, mut opt_hybrid) = (0, 0);
    let (mut conv_plain, mut conv_hybrid) = (Vec::new(), Vec::new());
    for seed in 0..100u64 {
        let inst = TspInstance::from_coords(&cities(seed)).unwrap();
        let optimum = brute_force_tour(&inst);
        for (eps, opt, conv) in [(0.0, &mut opt_plain, &mut conv_plain), (0.3, &mut opt_hybrid, &mut conv_hybrid)] {
            let r = solve_tsp(&inst, &AcoParams { epsilon: eps, seed, ..AcoParams::default() }).unwrap();
            if r.best_length <= optimum * (1.0 + 1e-9) {
                *opt += 1;
            }
            conv.push(r.convergence_iteration);
        }
    }
    let (m0, m3) = (median(conv_plain), median(conv_hybrid));
    Verdict {
        pass: identical == 10 && opt_plain >= 90 && opt_hybrid >= 90 && m3 <= m0,
        detail: format!(
            "epsilon=0 matches reference on {identical}/10 seeds; optimal {opt_plain}/100 (plain) {opt_hybrid}/100 (hybrid); median convergence {m0} vs {m3}"
        ),
    }
}

fn main() {
    let mut ok = true;
    ok &= check(1, "Kirchhoff conservation", Some(Duration::from_secs(10)), kirchhoff);
    ok &= check(2, "shortest-path emergence", Some(Duration::from_secs(60)), shortest_path);
    ok &= check(3, "pruning laws", None, pruning);
    ok &= check(4, "Steiner approximation", Some(Duration::from_secs(300)), steiner);
    ok &= check(5, "hex diffusion", None, hex_diffusion);
    let mut audit = Audit::default();
    ok &= check(6, "competition determinism and symmetry", None, || determinism(&mut audit));
    ok &= check(7, "hunger ordinality", None, || hunger(&mut audit));
    ok &= check(8, "allorecognition", None, || allorecognition(&audit));
    ok &= check(9, "ACO hybrid", Some(Duration::from_secs(300)), aco);
    if !ok {
        std::process::exit(1);
    }
}
