//! Torus translation flow `w . t` driving the non-autonomous coefficients.
//!
//! A point of the base is a vector of angles in `[0, 2pi)`; the flow adds
//! `frequencies * t` and reduces modulo `2pi`. Rationally independent
//! frequencies give a quasi-periodic (minimal) hull; this is assumed, not
//! checked.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverState {
    angles: Vec<f64>,
    frequencies: Vec<f64>,
}

impl DriverState {
    /// Panics if the two vectors differ in length.
    pub fn new(angles: Vec<f64>, frequencies: Vec<f64>) -> Self {
        assert_eq!(
            angles.len(),
            frequencies.len(),
            "driver angles and frequencies must have equal length"
        );
        let angles = angles.into_iter().map(reduce_angle).collect();
        Self {
            angles,
            frequencies,
        }
    }

    /// Driver with no angles: the autonomous case, where the base is a point.
    pub fn autonomous() -> Self {
        Self::new(Vec::new(), Vec::new())
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn advance(&self, t: f64) -> DriverState {
        let angles = self
            .angles
            .iter()
            .zip(&self.frequencies)
            .map(|(a, f)| reduce_angle(a + f * t))
            .collect();
        DriverState {
            angles,
            frequencies: self.frequencies.clone(),
        }
    }

    /// Same frequencies, different base point.
    pub fn with_angles(&self, angles: Vec<f64>) -> DriverState {
        DriverState::new(angles, self.frequencies.clone())
    }

    /// Equispaced grid of base points, `per_dim` angles per torus dimension.
    pub fn angle_grid(&self, per_dim: usize) -> Vec<DriverState> {
        let k = self.dim();
        if k == 0 {
            return vec![self.clone()];
        }
        let total = per_dim.pow(k as u32);
        (0..total)
            .map(|mut idx| {
                let mut angles = Vec::with_capacity(k);
                for _ in 0..k {
                    angles.push(TAU * (idx % per_dim) as f64 / per_dim as f64);
                    idx /= per_dim;
                }
                self.with_angles(angles)
            })
            .collect()
    }
}

pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance on the circle between two angles.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}
