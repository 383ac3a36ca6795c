//! Constant-velocity Kalman filter over `(cx, cy, aspect, height)`.
//!
//! The state is 8-dimensional: box center, aspect ratio `w / h`, height, and
//! the per-frame velocity of each. One call to [`KalmanBoxFilter::predict`]
//! advances exactly one frame. Process and measurement noise scale with the
//! current box height, so the filter behaves the same at any image scale.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, GeometryError};

pub type StateVector = SVector<f64, 8>;
pub type StateCovariance = SMatrix<f64, 8, 8>;
pub type Measurement = SVector<f64, 4>;

type MeasurementMatrix = SMatrix<f64, 4, 8>;

// Aspect ratio noise does not scale with box size.
const ASPECT_POSITION_STD: f64 = 1e-2;
const ASPECT_VELOCITY_STD: f64 = 1e-5;
const ASPECT_MEASUREMENT_STD: f64 = 1e-1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("noise weights must be finite and positive (position {position}, velocity {velocity})")]
    InvalidNoise { position: f64, velocity: f64 },
    #[error("innovation covariance is not positive definite")]
    SingularInnovation,
    #[error("state has non-positive shape (aspect {aspect}, height {height})")]
    CorruptedState { aspect: f64, height: f64 },
    #[error(transparent)]
    InvalidBox(#[from] GeometryError),
}

/// Relative standard deviations of position and velocity noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { std_weight_position: 1.0 / 20.0, std_weight_velocity: 1.0 / 160.0 }
    }
}

impl NoiseConfig {
    pub fn new(std_weight_position: f64, std_weight_velocity: f64) -> Result<Self, MotionError> {
        let cfg = Self { std_weight_position, std_weight_velocity };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MotionError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.std_weight_position) && ok(self.std_weight_velocity) {
            Ok(())
        } else {
            Err(MotionError::InvalidNoise { position: self.std_weight_position, velocity: self.std_weight_velocity })
        }
    }
}

/// Gaussian belief over one object's box and its velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanTrackState {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl KalmanTrackState {
    /// Box described by the position part of the mean.
    pub fn to_bbox(&self) -> Result<BBox, MotionError> {
        let aspect = self.mean[2];
        let height = self.mean[3];
        if !(aspect > 0.0 && height > 0.0) {
            return Err(MotionError::CorruptedState { aspect, height });
        }
        Ok(BBox::from_center(self.mean[0], self.mean[1], aspect * height, height)?)
    }

    /// Velocity of `(cx, cy, aspect, height)` per frame.
    pub fn velocity(&self) -> [f64; 4] {
        [self.mean[4], self.mean[5], self.mean[6], self.mean[7]]
    }
}

/// `(cx, cy, aspect, height)` of a box.
pub fn measurement_of(b: &BBox) -> Measurement {
    let (cx, cy) = b.center();
    Measurement::new(cx, cy, b.aspect(), b.height())
}

fn measurement_matrix() -> MeasurementMatrix {
    MeasurementMatrix::identity()
}

fn transition_matrix() -> StateCovariance {
    let mut f = StateCovariance::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn symmetrize(p: &StateCovariance) -> StateCovariance {
    (p + p.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KalmanBoxFilter {
    pub noise: NoiseConfig,
}

impl KalmanBoxFilter {
    pub fn new(noise: NoiseConfig) -> Self {
        Self { noise }
    }

    /// New state centered on `det` with zero velocity.
    pub fn initiate(&self, det: &BBox) -> KalmanTrackState {
        let z = measurement_of(det);
        let h = det.height();
        let pos = self.noise.std_weight_position;
        let vel = self.noise.std_weight_velocity;

        let mut mean = StateVector::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&z);

        let std = [
            2.0 * pos * h,
            2.0 * pos * h,
            ASPECT_POSITION_STD,
            2.0 * pos * h,
            10.0 * vel * h,
            10.0 * vel * h,
            ASPECT_VELOCITY_STD,
            10.0 * vel * h,
        ];
        let covariance = StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));
        KalmanTrackState { mean, covariance }
    }

    /// Advances the state by one frame.
    pub fn predict(&self, state: &KalmanTrackState) -> KalmanTrackState {
        // A corrupted height must not zero out the process noise.
        let h = state.mean[3].abs().max(f64::MIN_POSITIVE);
        let pos = self.noise.std_weight_position * h;
        let vel = self.noise.std_weight_velocity * h;
        let std = [pos, pos, ASPECT_POSITION_STD, pos, vel, vel, ASPECT_VELOCITY_STD, vel];
        let q = StateCovariance::from_diagonal(&StateVector::from_iterator(std.iter().map(|s| s * s)));
        let f = transition_matrix();
        KalmanTrackState { mean: f * state.mean, covariance: symmetrize(&(f * state.covariance * f.transpose() + q)) }
    }

    /// Corrects the state with an observed box.
    ///
    /// Uses the Joseph form of the covariance update so the result stays
    /// symmetric positive semi-definite under rounding.
    pub fn update(&self, state: &KalmanTrackState, det: &BBox) -> Result<KalmanTrackState, MotionError> {
        let hm = measurement_matrix();
        let h = state.mean[3].abs().max(f64::MIN_POSITIVE);
        let pos = self.noise.std_weight_position * h;
        let r = SMatrix::<f64, 4, 4>::from_diagonal(&Measurement::new(
            pos * pos,
            pos * pos,
            ASPECT_MEASUREMENT_STD * ASPECT_MEASUREMENT_STD,
            pos * pos,
        ));

        let p = &state.covariance;
        let s = hm * p * hm.transpose() + r;
        let chol = s.cholesky().ok_or(MotionError::SingularInnovation)?;
        // S K^T = H P^T, and P is symmetric.
        let gain: SMatrix<f64, 8, 4> = chol.solve(&(hm * p)).transpose();

        let innovation = measurement_of(det) - hm * state.mean;
        let mean = state.mean + gain * innovation;

        let i_kh = StateCovariance::identity() - gain * hm;
        let covariance = symmetrize(&(i_kh * p * i_kh.transpose() + gain * r * gain.transpose()));
        if !mean.iter().chain(covariance.iter()).all(|v| v.is_finite()) {
            return Err(MotionError::SingularInnovation);
        }
        Ok(KalmanTrackState { mean, covariance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    fn min_eigenvalue(p: &StateCovariance) -> f64 {
        p.symmetric_eigenvalues().min()
    }

    #[test]
    fn initiate_sets_position_and_zero_velocity() {
        let kf = KalmanBoxFilter::default();
        let s = kf.initiate(&b(0.0, 0.0, 2.0, 4.0));
        assert_eq!(s.mean.fixed_rows::<4>(0).into_owned(), Measurement::new(1.0, 2.0, 0.5, 4.0));
        assert_eq!(s.velocity(), [0.0; 4]);
        assert!(min_eigenvalue(&s.covariance) > 0.0);
    }

    #[test]
    fn to_bbox_examples() {
        let kf = KalmanBoxFilter::default();
        let mut s = kf.initiate(&b(10.0, 10.0, 5.0, 5.0));
        assert_eq!(s.to_bbox().unwrap(), b(10.0, 10.0, 5.0, 5.0));

        s.mean = StateVector::from_column_slice(&[1.0, 2.0, 0.5, 4.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.to_bbox().unwrap(), b(0.0, 0.0, 2.0, 4.0));
        s.mean = StateVector::from_column_slice(&[5.0, 5.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.to_bbox().unwrap(), b(4.0, 4.0, 2.0, 2.0));

        s.mean[3] = 0.0;
        assert!(matches!(s.to_bbox(), Err(MotionError::CorruptedState { .. })));
        s.mean[3] = 2.0;
        s.mean[2] = -1.0;
        assert!(matches!(s.to_bbox(), Err(MotionError::CorruptedState { .. })));
    }

    #[test]
    fn predict_applies_velocity() {
        let kf = KalmanBoxFilter::default();
        let s0 = kf.initiate(&b(5.0, 5.0, 10.0, 10.0));
        let s1 = kf.predict(&s0);
        assert_eq!(s1.mean, s0.mean);

        let mut moving = s0.clone();
        moving.mean[4] = 3.0;
        let s2 = kf.predict(&moving);
        assert_eq!(s2.mean[0], 13.0);
        assert!(s2.covariance.trace() > moving.covariance.trace());
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let kf = KalmanBoxFilter::default();
        let s = kf.predict(&kf.initiate(&b(10.0, 20.0, 30.0, 15.0)));
        let pred = s.to_bbox().unwrap();
        let u = kf.update(&s, &pred).unwrap();
        for i in 0..8 {
            assert!((u.mean[i] - s.mean[i]).abs() < 1e-9);
        }
        assert!(u.covariance.trace() < s.covariance.trace());
    }

    #[test]
    fn posterior_between_prior_and_measurement() {
        let kf = KalmanBoxFilter::default();
        let s = kf.predict(&kf.initiate(&b(0.0, 0.0, 20.0, 10.0)));
        let det = b(6.0, -3.0, 22.0, 11.0);
        let z = measurement_of(&det);
        let u = kf.update(&s, &det).unwrap();
        for i in 0..4 {
            let (lo, hi) = if s.mean[i] <= z[i] { (s.mean[i], z[i]) } else { (z[i], s.mean[i]) };
            assert!(u.mean[i] >= lo - 1e-12 && u.mean[i] <= hi + 1e-12, "component {i}");
        }
    }

    #[test]
    fn rejects_invalid_noise() {
        assert!(NoiseConfig::new(0.0, 0.1).is_err());
        assert!(NoiseConfig::new(0.1, f64::NAN).is_err());
        assert!(NoiseConfig::new(0.05, 0.00625).is_ok());
    }
}
