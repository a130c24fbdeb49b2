//! World geometry: base station, flying RIS, box buildings, the 3D drone grid,
//! blockage queries and the per-step drone mobility model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub ix: usize,
    pub iy: usize,
    pub iz: usize,
}

impl GridIndex {
    pub const fn new(ix: usize, iy: usize, iz: usize) -> Self {
        GridIndex { ix, iy, iz }
    }

    /// Sum of per-axis index differences.
    pub fn manhattan(self, other: GridIndex) -> usize {
        self.ix.abs_diff(other.ix) + self.iy.abs_diff(other.iy) + self.iz.abs_diff(other.iz)
    }
}

/// Regular 3D lattice of candidate drone positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Vec3,
    pub spacing: [f64; 3],
    pub counts: [usize; 3],
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            origin: Vec3::new(0.0, 0.0, 40.0),
            spacing: [0.81, 0.81, 0.8],
            counts: [40, 25, 4],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::domain("grid spacing must be strictly positive"));
        }
        if self.counts.contains(&0) {
            return Err(Error::domain("grid counts must be at least 1"));
        }
        if !self.origin.is_finite() {
            return Err(Error::domain("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, idx: GridIndex) -> bool {
        idx.ix < self.counts[0] && idx.iy < self.counts[1] && idx.iz < self.counts[2]
    }

    /// World position of a grid point.
    pub fn position(&self, idx: GridIndex) -> Result<Vec3> {
        if !self.contains(idx) {
            return Err(Error::domain(format!(
                "grid index ({}, {}, {}) outside counts {:?}",
                idx.ix, idx.iy, idx.iz, self.counts
            )));
        }
        Ok(self.origin
            + Vec3::new(
                idx.ix as f64 * self.spacing[0],
                idx.iy as f64 * self.spacing[1],
                idx.iz as f64 * self.spacing[2],
            ))
    }

    /// Row-major linear index with x varying fastest.
    pub fn linear(&self, idx: GridIndex) -> usize {
        idx.ix + self.counts[0] * (idx.iy + self.counts[1] * idx.iz)
    }

    pub fn unlinear(&self, i: usize) -> GridIndex {
        let nx = self.counts[0];
        let ny = self.counts[1];
        GridIndex::new(i % nx, (i / nx) % ny, i / (nx * ny))
    }

    /// All indices in linear order.
    pub fn indices(&self) -> impl Iterator<Item = GridIndex> + '_ {
        (0..self.len()).map(|i| self.unlinear(i))
    }

    /// Nearest grid index to a world position, if the position lies on the
    /// lattice to within `tol` meters per axis.
    pub fn index_of(&self, p: Vec3, tol: f64) -> Option<GridIndex> {
        let rel = (p - self.origin).to_array();
        let mut out = [0usize; 3];
        for a in 0..3 {
            let f = rel[a] / self.spacing[a];
            let r = f.round();
            if r < 0.0 || r as usize >= self.counts[a] || (f - r).abs() * self.spacing[a] > tol {
                return None;
            }
            out[a] = r as usize;
        }
        Some(GridIndex::new(out[0], out[1], out[2]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bs_position: Vec3,
    pub ris_position: Vec3,
    pub buildings: Vec<Aabb>,
    pub grid: GridSpec,
    /// Hz
    pub carrier_frequency: f64,
    /// Hz
    pub bandwidth: f64,
}

impl Default for Scene {
    /// Street-corner layout: base station 6 m high south of the grid, RIS
    /// hovering at 80 m above the grid, one 30 m corner building that shadows
    /// the far +x corner of the grid from the base station.
    fn default() -> Self {
        Scene {
            bs_position: Vec3::new(16.0, -20.0, 6.0),
            ris_position: Vec3::new(16.0, 10.0, 80.0),
            buildings: vec![Aabb::new(
                Vec3::new(18.5, -12.0, 0.0),
                Vec3::new(40.0, -8.0, 30.0),
            )],
            grid: GridSpec::default(),
            carrier_frequency: 200e9,
            bandwidth: 1e9,
        }
    }
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        for (i, b) in self.buildings.iter().enumerate() {
            if !b.has_positive_extent() {
                return Err(Error::domain(format!("building {i} has non-positive extent")));
            }
            if b.contains(self.bs_position) {
                return Err(Error::domain(format!("base station lies inside building {i}")));
            }
            if b.contains(self.ris_position) {
                return Err(Error::domain(format!("RIS lies inside building {i}")));
            }
        }
        if !(self.carrier_frequency > 0.0 && self.bandwidth > 0.0) {
            return Err(Error::domain("carrier frequency and bandwidth must be positive"));
        }
        Ok(())
    }

    /// True iff the open segment between `a` and `b` misses every building.
    pub fn line_of_sight(&self, a: Vec3, b: Vec3) -> bool {
        !self.buildings.iter().any(|bx| bx.intersects_open_segment(a, b))
    }

    pub fn wavelength(&self, speed_of_light: f64) -> f64 {
        speed_of_light / self.carrier_frequency
    }
}

/// One-cell drone move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisStep {
    PlusX,
    PlusY,
    MinusY,
    PlusZ,
    MinusZ,
}

impl AxisStep {
    pub fn apply(self, idx: GridIndex) -> GridIndex {
        let GridIndex { ix, iy, iz } = idx;
        match self {
            AxisStep::PlusX => GridIndex::new(ix + 1, iy, iz),
            AxisStep::PlusY => GridIndex::new(ix, iy + 1, iz),
            AxisStep::MinusY => GridIndex::new(ix, iy - 1, iz),
            AxisStep::PlusZ => GridIndex::new(ix, iy, iz + 1),
            AxisStep::MinusZ => GridIndex::new(ix, iy, iz - 1),
        }
    }
}

/// Relative weights for moving along x, y and z. Normalized on use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPolicy {
    pub weights: [f64; 3],
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            weights: [0.8, 0.2, 0.2],
        }
    }
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("step weights must be finite and nonnegative"));
        }
        if self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::domain("step weights must not all be zero"));
        }
        Ok(())
    }

    /// Axis probabilities (x, y, z) after normalization.
    pub fn probabilities(&self) -> [f64; 3] {
        let total: f64 = self.weights.iter().sum();
        self.weights.map(|w| w / total)
    }

    /// Draws one move from `at`.
    ///
    /// x moves are always forward. y and z moves pick a direction uniformly
    /// and reflect off the grid faces. Axes with a single grid plane cannot
    /// be moved along and drop out of the distribution.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        grid: &GridSpec,
        at: GridIndex,
    ) -> Result<AxisStep> {
        let mut w = self.weights;
        for (a, wa) in w.iter_mut().enumerate().skip(1) {
            if grid.counts[a] < 2 {
                *wa = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::domain("no admissible step direction on this grid"));
        }
        let u = rng.random::<f64>() * total;
        let axis = if u < w[0] {
            0
        } else if u < w[0] + w[1] || w[2] == 0.0 {
            1
        } else {
            2
        };
        let step = match axis {
            0 => AxisStep::PlusX,
            1 => pick_direction(rng, at.iy, grid.counts[1], AxisStep::PlusY, AxisStep::MinusY),
            _ => pick_direction(rng, at.iz, grid.counts[2], AxisStep::PlusZ, AxisStep::MinusZ),
        };
        Ok(step)
    }
}

fn pick_direction<R: Rng + ?Sized>(
    rng: &mut R,
    pos: usize,
    count: usize,
    plus: AxisStep,
    minus: AxisStep,
) -> AxisStep {
    if pos == 0 {
        plus
    } else if pos + 1 >= count {
        minus
    } else if rng.random::<bool>() {
        plus
    } else {
        minus
    }
}

/// Samples a start cell from which `length - 1` forward x steps fit.
pub fn sample_start<R: Rng + ?Sized>(rng: &mut R, grid: &GridSpec, length: usize) -> Result<GridIndex> {
    check_fits(grid, length)?;
    let max_ix = grid.counts[0] - length;
    Ok(GridIndex::new(
        rng.random_range(0..=max_ix),
        rng.random_range(0..grid.counts[1]),
        rng.random_range(0..grid.counts[2]),
    ))
}

fn check_fits(grid: &GridSpec, length: usize) -> Result<()> {
    if length < 2 {
        return Err(Error::domain("trajectory length must be at least 2"));
    }
    if grid.counts[0] < length {
        return Err(Error::domain(format!(
            "grid has {} x-planes; a {length}-step trajectory needs at least {length}",
            grid.counts[0]
        )));
    }
    Ok(())
}

/// Random walk of `length` grid cells starting at `start`.
pub fn generate_trajectory<R: Rng + ?Sized>(
    grid: &GridSpec,
    policy: &StepPolicy,
    rng: &mut R,
    start: GridIndex,
    length: usize,
) -> Result<Vec<GridIndex>> {
    check_fits(grid, length)?;
    if !grid.contains(start) {
        return Err(Error::domain("trajectory start outside grid"));
    }
    if start.ix + length > grid.counts[0] {
        return Err(Error::domain(format!(
            "start x-index {} leaves no room for {} forward steps",
            start.ix,
            length - 1
        )));
    }
    let mut path = Vec::with_capacity(length);
    let mut at = start;
    path.push(at);
    for _ in 1..length {
        at = policy.sample_step(rng, grid, at)?.apply(at);
        path.push(at);
    }
    Ok(path)
}
