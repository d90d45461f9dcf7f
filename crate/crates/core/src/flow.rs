//! One physics step: the Kirchhoff pressure system and Hagen-Poiseuille fluxes.
//!
//! For conductivities `D`, lengths `c` and net injections `b` the pressures
//! solve the weighted graph Laplacian system
//!
//! ```text
//! sum_j (D_ij / c_ij) (p_i - p_j) = b_i
//! ```
//!
//! and each edge then carries `Q_ij = (D_ij / c_ij) (p_i - p_j)`. The
//! Laplacian has the constant vector in its null space, so one sink is
//! grounded at `p = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Network, TerminalConfig, VertexId};

/// Edges with a conductivity below this are left out of the system.
pub const MIN_CONDUCTIVITY: f64 = 1e-12;

/// Default residual tolerance for [`solve_pressures`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest reduced system handed to the dense factorization under
/// [`Backend::Auto`].
pub const DIRECT_LIMIT: usize = 2000;

const REFINE_STEPS: usize = 3;

/// Tube geometry for the Hagen-Poiseuille conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSpec {
    pub radius: f64,
    pub viscosity: f64,
}

/// `D = pi r^4 / (8 xi)`.
pub fn conductivity_from_radius(spec: RadiusSpec) -> Result<f64> {
    if !(spec.radius > 0.0) || !spec.radius.is_finite() {
        return Err(Error::param("radius", format!("{} is not positive", spec.radius)));
    }
    if !(spec.viscosity > 0.0) || !spec.viscosity.is_finite() {
        return Err(Error::param("viscosity", format!("{} is not positive", spec.viscosity)));
    }
    Ok(std::f64::consts::PI * spec.radius.powi(4) / (8.0 * spec.viscosity))
}

/// Grounded Kirchhoff system for one network state.
///
/// Rows of pinned vertices (the grounded sink, plus any vertex cut off from
/// it by absent edges) read `p_i = 0`; every other row is the Laplacian row
/// with right-hand side `b_i`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    laplacian: Vec<Vec<(usize, f64)>>,
    injection: Vec<f64>,
    ground: VertexId,
    pinned: Vec<bool>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.injection.len()
    }

    pub fn ground(&self) -> VertexId {
        self.ground
    }

    pub fn is_pinned(&self, v: VertexId) -> bool {
        self.pinned[v.0]
    }

    /// Entry of the Laplacian before grounding.
    pub fn laplacian_entry(&self, i: usize, j: usize) -> f64 {
        self.laplacian[i].iter().find(|&&(c, _)| c == j).map_or(0.0, |&(_, w)| w)
    }

    /// Entry of the grounded matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.pinned[i] {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else {
            self.laplacian_entry(i, j)
        }
    }

    /// Net injection before grounding.
    pub fn injection(&self) -> &[f64] {
        &self.injection
    }

    /// Right-hand side of the grounded system.
    pub fn rhs(&self, i: usize) -> f64 {
        if self.pinned[i] {
            0.0
        } else {
            self.injection[i]
        }
    }

    /// `A p` for the grounded matrix.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                if self.pinned[i] {
                    p[i]
                } else {
                    self.laplacian[i].iter().map(|&(j, w)| w * p[j]).sum()
                }
            })
            .collect()
    }

    /// `max_i |(A p - b)_i|`.
    pub fn residual_inf(&self, p: &[f64]) -> f64 {
        self.apply(p)
            .iter()
            .enumerate()
            .map(|(i, ap)| (ap - self.rhs(i)).abs())
            .fold(0.0, f64::max)
    }

    fn free_vertices(&self) -> (Vec<usize>, Vec<usize>) {
        let mut index = vec![usize::MAX; self.dim()];
        let mut free = Vec::new();
        for i in 0..self.dim() {
            if !self.pinned[i] {
                index[i] = free.len();
                free.push(i);
            }
        }
        (free, index)
    }
}

/// Assembles the grounded pressure system, grounding the first sink.
pub fn assemble_system(network: &Network, terminals: &TerminalConfig) -> Result<LinearSystem> {
    let n = network.vertex_count();
    for v in terminals.terminals() {
        if !network.contains(v) {
            return Err(Error::UnknownTerminal(v));
        }
    }
    let ground = terminals
        .sinks
        .first()
        .map(|&(v, _)| v)
        .ok_or(Error::TooFewTerminals { needed: 2, got: terminals.sources.len() })?;

    let present = |w: f64| w >= MIN_CONDUCTIVITY;
    let mut laplacian: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 0.0)]).collect();
    for e in network.edges() {
        if !present(e.conductivity) {
            continue;
        }
        let w = e.weight();
        let (u, v) = (e.u.0, e.v.0);
        laplacian[u][0].1 += w;
        laplacian[v][0].1 += w;
        laplacian[u].push((v, -w));
        laplacian[v].push((u, -w));
    }
    for row in &mut laplacian {
        row.sort_by_key(|&(j, _)| j);
    }

    let label = network.components_by(|e| present(e.conductivity));
    let grounded = label[ground.0];
    if let Some(v) = terminals.terminals().find(|v| label[v.0] != grounded) {
        return Err(Error::SingularSystem(format!(
            "terminal {} is cut off from sink {} by zero-conductivity edges",
            network.name(v),
            network.name(ground)
        )));
    }
    let pinned = (0..n).map(|i| i == ground.0 || label[i] != grounded).collect();

    Ok(LinearSystem { laplacian, injection: terminals.injection(n), ground, pinned })
}

/// Pressure per vertex; the ground vertex holds exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureMap {
    values: Vec<f64>,
    ground: VertexId,
}

impl PressureMap {
    pub fn get(&self, v: VertexId) -> f64 {
        self.values[v.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ground(&self) -> VertexId {
        self.ground
    }
}

/// How [`solve_pressures_with`] factors the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Dense Cholesky up to [`DIRECT_LIMIT`] unknowns, conjugate gradients above.
    #[default]
    Auto,
    Direct,
    Iterative,
}

/// Solves the grounded system to `‖A p − b‖∞ <= tol`.
pub fn solve_pressures(system: &LinearSystem, tol: f64) -> Result<PressureMap> {
    solve_pressures_with(system, tol, Backend::Auto)
}

pub fn solve_pressures_with(system: &LinearSystem, tol: f64, backend: Backend) -> Result<PressureMap> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("{tol} is not positive")));
    }
    let (free, index) = system.free_vertices();
    let direct = match backend {
        Backend::Auto => free.len() <= DIRECT_LIMIT,
        Backend::Direct => true,
        Backend::Iterative => false,
    };
    let reduced = if direct {
        solve_direct(system, &free, &index, tol)?
    } else {
        solve_cg(system, &free, &index, tol)?
    };

    let mut values = vec![0.0; system.dim()];
    for (k, &i) in free.iter().enumerate() {
        values[i] = reduced[k];
    }
    let residual = system.residual_inf(&values);
    if !(residual <= tol) {
        return Err(Error::SingularSystem(format!("residual {residual:e} exceeds tolerance {tol:e}")));
    }
    Ok(PressureMap { values, ground: system.ground })
}

fn reduced_residual(system: &LinearSystem, free: &[usize], index: &[usize], x: &[f64]) -> Vec<f64> {
    free.iter()
        .map(|&i| {
            let ax: f64 = system.laplacian[i]
                .iter()
                .filter(|&&(j, _)| index[j] != usize::MAX)
                .map(|&(j, w)| w * x[index[j]])
                .sum();
            system.injection[i] - ax
        })
        .collect()
}

fn solve_direct(system: &LinearSystem, free: &[usize], index: &[usize], tol: f64) -> Result<Vec<f64>> {
    let m = free.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (r, &i) in free.iter().enumerate() {
        for &(j, w) in &system.laplacian[i] {
            if index[j] != usize::MAX {
                a[(r, index[j])] = w;
            }
        }
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("reduced Laplacian is not positive definite".into()))?;
    let b = DVector::from_iterator(m, free.iter().map(|&i| system.injection[i]));
    let mut x = chol.solve(&b);
    for _ in 0..REFINE_STEPS {
        let r = reduced_residual(system, free, index, x.as_slice());
        if r.iter().all(|v| v.abs() <= tol) {
            break;
        }
        x += chol.solve(&DVector::from_vec(r));
    }
    Ok(x.as_slice().to_vec())
}

/// Jacobi-preconditioned conjugate gradients on the reduced system.
fn solve_cg(system: &LinearSystem, free: &[usize], index: &[usize], tol: f64) -> Result<Vec<f64>> {
    let m = free.len();
    let rows: Vec<Vec<(usize, f64)>> = free
        .iter()
        .map(|&i| {
            system.laplacian[i]
                .iter()
                .filter(|&&(j, _)| index[j] != usize::MAX)
                .map(|&(j, w)| (index[j], w))
                .collect()
        })
        .collect();
    let diag: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(r, row)| row.iter().find(|&&(c, _)| c == r).map_or(1.0, |&(_, w)| w))
        .collect();
    let mul = |x: &[f64]| -> Vec<f64> {
        rows.iter().map(|row| row.iter().map(|&(c, w)| w * x[c]).sum()).collect()
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let mut x = vec![0.0; m];
    let mut r: Vec<f64> = free.iter().map(|&i| system.injection[i]).collect();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let budget = (10 * m).max(1000);
    for _ in 0..budget {
        if r.iter().all(|v| v.abs() <= 0.5 * tol) {
            break;
        }
        let ap = mul(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularSystem("conjugate gradients broke down".into()));
        }
        let step = rz / pap;
        for k in 0..m {
            x[k] += step * p[k];
            r[k] -= step * ap[k];
        }
        for k in 0..m {
            z[k] = r[k] / diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    Ok(x)
}

/// Sets `Q = (D / c)(p_u − p_v)` on every edge present in the system;
/// absent edges carry no flux.
pub fn compute_fluxes(network: &mut Network, pressures: &PressureMap) {
    for e in network.edges_mut() {
        e.flux = if e.conductivity >= MIN_CONDUCTIVITY {
            e.weight() * (pressures.get(e.u) - pressures.get(e.v))
        } else {
            0.0
        };
    }
}

/// Assemble, solve and update fluxes in one go.
pub fn solve_flow(network: &mut Network, terminals: &TerminalConfig, tol: f64) -> Result<PressureMap> {
    let system = assemble_system(network, terminals)?;
    let pressures = solve_pressures(&system, tol)?;
    compute_fluxes(network, &pressures);
    Ok(pressures)
}

/// Largest per-vertex violation of `sum_j Q_ij = b_i`.
pub fn kirchhoff_violation(network: &Network, terminals: &TerminalConfig) -> f64 {
    let b = terminals.injection(network.vertex_count());
    network
        .vertices()
        .map(|v| (network.net_outflow(v) - b[v.0]).abs())
        .fold(0.0, f64::max)
}
