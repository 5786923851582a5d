//! Uniformly sampled solutions `u(t_n)`, `t_n = n Δt`, on a common grid.

use crate::envelope::DyadicSequence;
use crate::error::{Error, Result};
use crate::spectral::{sobolev_weights, weighted_norm, Field, TorusGrid};

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    grid: TorusGrid,
    spacing: f64,
    frames: Vec<Field>,
}

impl Trajectory {
    /// Frames at `t = 0, Δt, 2Δt, …`.
    pub fn new(spacing: f64, frames: Vec<Field>) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample spacing must be positive, got {spacing}")));
        }
        let first = frames.first().ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
        let grid = first.grid();
        if let Some(f) = frames.iter().find(|f| f.grid() != grid) {
            return Err(Error::GridMismatch(grid.m(), f.grid().m()));
        }
        Ok(Trajectory { grid, spacing, frames })
    }

    /// Samples `frame(t_n)` for `n = 0..=steps`.
    pub fn from_fn<F: Fn(f64) -> Field>(spacing: f64, steps: usize, frame: F) -> Result<Self> {
        Self::new(spacing, (0..=steps).map(|n| frame(n as f64 * spacing)).collect())
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.spacing
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.frames.len()).map(|n| self.time(n)).collect()
    }

    /// Final time `T`.
    pub fn t_final(&self) -> f64 {
        self.time(self.frames.len() - 1)
    }

    /// Every `k`-th frame.
    pub fn subsample(&self, k: usize) -> Result<Trajectory> {
        if k == 0 || (self.frames.len() - 1) % k != 0 {
            return Err(Error::InvalidParameter(format!(
                "cannot subsample {} intervals by {k}",
                self.frames.len() - 1
            )));
        }
        Trajectory::new(self.spacing * k as f64, self.frames.iter().step_by(k).cloned().collect())
    }

    /// Frames `0..=n`, i.e. the restriction to `[0, nΔt]`.
    pub fn prefix(&self, n: usize) -> Result<Trajectory> {
        if n == 0 || n >= self.frames.len() {
            return Err(Error::InvalidParameter(format!("prefix {n} outside 1..{}", self.frames.len())));
        }
        Trajectory::new(self.spacing, self.frames[..=n].to_vec())
    }

    pub fn scaled(&self, a: f64) -> Trajectory {
        Trajectory { grid: self.grid, spacing: self.spacing, frames: self.frames.iter().map(|f| f.scaled(a)).collect() }
    }

    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_compatible(other)?;
        Ok(Trajectory {
            grid: self.grid,
            spacing: self.spacing,
            frames: self.frames.iter().zip(&other.frames).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.m(), other.grid.m()));
        }
        if self.frames.len() != other.frames.len() || (self.spacing - other.spacing).abs() > 1e-12 * self.spacing {
            return Err(Error::InvalidParameter("trajectories use different time samples".into()));
        }
        Ok(())
    }

    /// `max_n ‖u(t_n)‖_{H^s_ω}`.
    pub fn sup_sobolev(&self, s: f64, env: Option<&DyadicSequence>) -> Result<f64> {
        let w = sobolev_weights(self.grid, s, env)?;
        Ok(self.frames.iter().map(|f| weighted_norm(f, &w)).fold(0.0, f64::max))
    }

    /// `max_{n,x} |u(t_n, x)|` on the 4×-padded grid.
    pub fn sup_amplitude(&self) -> f64 {
        self.frames.iter().map(Field::sup_norm).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_subsampling() {
        let g = TorusGrid::new(16).unwrap();
        let tr = Trajectory::from_fn(0.25, 4, |t| Field::cos_mode(g, 1, t)).unwrap();
        assert_eq!(tr.len(), 5);
        assert_eq!(tr.t_final(), 1.0);
        let half = tr.subsample(2).unwrap();
        assert_eq!(half.len(), 3);
        assert_eq!(half.spacing(), 0.5);
        assert_eq!(half.frames()[2], tr.frames()[4]);
        assert!(tr.subsample(3).is_err());
        assert_eq!(tr.prefix(2).unwrap().t_final(), 0.5);
        assert_eq!(tr.prefix(4).unwrap().len(), 5);
        assert!(tr.prefix(5).is_err() && tr.prefix(0).is_err());
        assert!(Trajectory::new(0.0, vec![Field::zeros(g)]).is_err());
        let other = Field::zeros(TorusGrid::new(32).unwrap());
        assert!(Trajectory::new(1.0, vec![Field::zeros(g), other]).is_err());
    }

    #[test]
    fn sup_norms() {
        let g = TorusGrid::new(16).unwrap();
        let tr = Trajectory::from_fn(0.5, 2, |t| Field::cos_mode(g, 1, 1.0 + t)).unwrap();
        assert!((tr.sup_amplitude() - 2.0).abs() < 1e-12);
        let expect = 2.0 * std::f64::consts::PI.sqrt();
        assert!((tr.sup_sobolev(0.0, None).unwrap() - expect).abs() < 1e-12);
        assert_eq!(tr.difference(&tr).unwrap().sup_amplitude(), 0.0);
    }
}
