//! Hexagonal lattice in axial coordinates.
//!
//! The domain is the hexagon of cells within hex distance `R` of the origin.
//! Every interior cell has six equidistant neighbours, so a diffusing signal
//! spreads in rings rather than leaking along diagonals.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct AxialCoord {
    pub q: i32,
    pub r: i32,
}

/// The six axial directions, in neighbour order.
pub const DIRECTIONS: [AxialCoord; 6] = [
    AxialCoord::new(1, 0),
    AxialCoord::new(1, -1),
    AxialCoord::new(0, -1),
    AxialCoord::new(-1, 0),
    AxialCoord::new(-1, 1),
    AxialCoord::new(0, 1),
];

impl AxialCoord {
    pub const ORIGIN: AxialCoord = AxialCoord::new(0, 0);

    pub const fn new(q: i32, r: i32) -> Self {
        Self { q, r }
    }

    /// Third cube coordinate, `s = -q - r`.
    pub fn s(self) -> i32 {
        -self.q - self.r
    }

    pub fn distance(self, other: AxialCoord) -> u32 {
        hex_distance(self, other)
    }

    /// Rotation by 60 degrees about the origin.
    pub fn rotate60(self) -> Self {
        Self::new(-self.r, self.q + self.r)
    }

    /// Point reflection through the origin.
    pub fn mirror(self) -> Self {
        Self::new(-self.q, -self.r)
    }
}

impl Add for AxialCoord {
    type Output = AxialCoord;

    fn add(self, o: AxialCoord) -> AxialCoord {
        AxialCoord::new(self.q + o.q, self.r + o.r)
    }
}

impl fmt::Display for AxialCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.r)
    }
}

/// `(|dq| + |dr| + |dq + dr|) / 2`
pub fn hex_distance(a: AxialCoord, b: AxialCoord) -> u32 {
    let dq = (a.q - b.q).abs();
    let dr = (a.r - b.r).abs();
    let ds = (a.q - b.q + a.r - b.r).abs();
    ((dq + dr + ds) / 2) as u32
}

const NO_CELL: u32 = u32::MAX;

/// Largest supported grid radius.
pub const MAX_RADIUS: i32 = 1000;

/// Radius-`R` hexagonal domain with precomputed neighbour tables. Cells are
/// stored in `(q, r)` lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct HexGrid {
    radius: i32,
    cells: Vec<AxialCoord>,
    lookup: Vec<u32>,
    neighbors: Vec<[u32; 6]>,
}

impl HexGrid {
    pub fn new(radius: i32) -> Result<Self> {
        if !(0..=MAX_RADIUS).contains(&radius) {
            return Err(Error::param("radius", format!("{radius} outside 0..={MAX_RADIUS}")));
        }
        let side = (2 * radius + 1) as usize;
        let mut cells = Vec::new();
        let mut lookup = vec![NO_CELL; side * side];
        for q in -radius..=radius {
            for r in (-radius).max(-q - radius)..=radius.min(-q + radius) {
                lookup[Self::slot(radius, q, r)] = cells.len() as u32;
                cells.push(AxialCoord::new(q, r));
            }
        }
        let mut grid = Self { radius, cells, lookup, neighbors: Vec::new() };
        grid.neighbors = grid
            .cells
            .iter()
            .map(|&c| DIRECTIONS.map(|d| grid.index_of(c + d).map_or(NO_CELL, |i| i as u32)))
            .collect();
        Ok(grid)
    }

    fn slot(radius: i32, q: i32, r: i32) -> usize {
        let side = 2 * radius + 1;
        ((q + radius) * side + (r + radius)) as usize
    }

    pub fn radius(&self) -> i32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[AxialCoord] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> AxialCoord {
        self.cells[index]
    }

    pub fn contains(&self, c: AxialCoord) -> bool {
        c.distance(AxialCoord::ORIGIN) <= self.radius as u32
    }

    pub fn index_of(&self, c: AxialCoord) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        match self.lookup[Self::slot(self.radius, c.q, c.r)] {
            NO_CELL => None,
            i => Some(i as usize),
        }
    }

    pub fn require(&self, c: AxialCoord) -> Result<usize> {
        self.index_of(c).ok_or(Error::OutOfGrid(c))
    }

    /// In-grid neighbours of `c`, in [`DIRECTIONS`] order.
    pub fn neighbors(&self, c: AxialCoord) -> Result<Vec<AxialCoord>> {
        let i = self.require(c)?;
        Ok(self.neighbor_indices(i).map(|j| self.cells[j]).collect())
    }

    /// In-grid neighbour indices of cell `i`, in [`DIRECTIONS`] order.
    pub fn neighbor_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[i].iter().filter(|&&j| j != NO_CELL).map(|&j| j as usize)
    }
}

/// Non-negative concentration per grid cell, indexed like [`HexGrid::cells`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &HexGrid) -> Self {
        Self { values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: &HexGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param("field", format!("{} values for {} cells", values.len(), grid.len())));
        }
        if let Some(x) = values.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::param("field", format!("value {x} is negative or not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn at(&self, grid: &HexGrid, c: AxialCoord) -> Option<f64> {
        grid.index_of(c).map(|i| self.values[i])
    }

    pub fn add(&mut self, index: usize, amount: f64) {
        self.values[index] += amount;
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("delta", format!("{delta} outside (0, 1]")))
    }
}

/// One explicit diffusion step with zero-flux walls:
///
/// ```text
/// c'(x) = c(x) + delta * sum_{y in N(x)} (c(y) - c(x)) / 6
/// ```
///
/// Missing neighbours at the wall contribute nothing and the divisor stays 6,
/// so every exchange is pairwise and mass is conserved.
pub fn diffuse(field: &ScalarField, delta: f64, grid: &HexGrid) -> Result<ScalarField> {
    let mut out = ScalarField::zeros(grid);
    diffuse_into(field, delta, grid, &mut out)?;
    Ok(out)
}

/// Double-buffered form of [`diffuse`]: reads `field`, overwrites `out`.
pub fn diffuse_into(field: &ScalarField, delta: f64, grid: &HexGrid, out: &mut ScalarField) -> Result<()> {
    check_delta(delta)?;
    if field.values.len() != grid.len() || out.values.len() != grid.len() {
        return Err(Error::param("field", "field does not match grid"));
    }
    for (i, slot) in out.values.iter_mut().enumerate() {
        let here = field.values[i];
        let mut diffs = [0.0f64; 6];
        let mut k = 0;
        for j in grid.neighbor_indices(i) {
            diffs[k] = field.values[j] - here;
            k += 1;
        }
        // Summing in sorted order makes the update depend only on the
        // multiset of neighbour values, so lattice symmetries hold bitwise.
        let diffs = &mut diffs[..k];
        diffs.sort_by(f64::total_cmp);
        let exchange: f64 = diffs.iter().sum();
        *slot = (here + delta * exchange / 6.0).max(0.0);
    }
    Ok(())
}

/// One `q r value` line per cell, in grid order.
pub fn snapshot(grid: &HexGrid, field: &ScalarField) -> String {
    let mut out = String::new();
    for (c, v) in grid.cells().iter().zip(field.values()) {
        out.push_str(&format!("{} {} {}\n", c.q, c.r, v));
    }
    out
}
