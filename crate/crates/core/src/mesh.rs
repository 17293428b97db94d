//! Nonuniform time meshes `0 = t_0 < t_1 < ... < t_N = T`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// First violated mesh invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshViolation {
    TooShort,
    NonZeroStart,
    NonFinite { k: usize },
    NonIncreasing { k: usize },
}

impl fmt::Display for MeshViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshViolation::TooShort => write!(f, "fewer than two time points"),
            MeshViolation::NonZeroStart => write!(f, "t_0 ≠ 0"),
            MeshViolation::NonFinite { k } => write!(f, "non-finite at k={k}"),
            MeshViolation::NonIncreasing { k } => write!(f, "non-increasing at k={k}"),
        }
    }
}

impl std::error::Error for MeshViolation {}

/// Checks the mesh invariants on a raw point sequence.
pub fn validate_points(t: &[f64]) -> std::result::Result<(), MeshViolation> {
    if t.len() < 2 {
        return Err(MeshViolation::TooShort);
    }
    for (k, &x) in t.iter().enumerate() {
        if !x.is_finite() {
            return Err(MeshViolation::NonFinite { k });
        }
    }
    if t[0] != 0.0 {
        return Err(MeshViolation::NonZeroStart);
    }
    for k in 1..t.len() {
        if t[k] <= t[k - 1] {
            return Err(MeshViolation::NonIncreasing { k });
        }
    }
    Ok(())
}

/// Strictly increasing time grid starting at zero.
///
/// The point sequence is the stored state; step sizes and ratios are derived
/// caches rebuilt on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    t: Vec<f64>,
    tau: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    t: Vec<f64>,
}

impl TimeMesh {
    /// Builds a mesh from its points, running [`validate_points`].
    pub fn from_points(t: Vec<f64>) -> Result<Self> {
        validate_points(&t)?;
        let tau = t.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(TimeMesh { t, tau })
    }

    /// `t_k = T (k/N)`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        check_horizon(horizon, steps)?;
        let nf = steps as f64;
        let t = (0..=steps).map(|k| horizon * (k as f64 / nf)).collect();
        Self::from_points(t)
    }

    /// Graded mesh `t_k = T (k/N)^r` with `r >= 1`.
    pub fn graded(horizon: f64, steps: usize, grading: f64) -> Result<Self> {
        check_horizon(horizon, steps)?;
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grading exponent r must satisfy r >= 1, got {grading}"
            )));
        }
        let nf = steps as f64;
        let t = (0..=steps)
            .map(|k| horizon * (k as f64 / nf).powf(grading))
            .collect();
        Self::from_points(t)
    }

    /// Random mesh whose consecutive step ratios are drawn uniformly from
    /// `[low, high]`, rescaled so that `t_N = T`. Deterministic per seed.
    pub fn random(horizon: f64, steps: usize, low: f64, high: f64, seed: u64) -> Result<Self> {
        check_horizon(horizon, steps)?;
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ratio bounds must satisfy 0 < low <= high, got ({low}, {high})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut steps_raw = Vec::with_capacity(steps);
        let mut tau = 1.0f64;
        steps_raw.push(tau);
        for _ in 1..steps {
            let r = if low == high { low } else { rng.random_range(low..=high) };
            tau *= r;
            steps_raw.push(tau);
        }
        let total: f64 = steps_raw.iter().sum();
        let scale = horizon / total;
        let mut t = Vec::with_capacity(steps + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for s in &steps_raw[..steps - 1] {
            acc += s * scale;
            t.push(acc);
        }
        t.push(horizon);
        Self::from_points(t)
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.tau.len()
    }

    pub fn horizon(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn points(&self) -> &[f64] {
        &self.t
    }

    /// `t_k`, `0 <= k <= N`.
    pub fn t(&self, k: usize) -> f64 {
        self.t[k]
    }

    /// `τ_k = t_k - t_{k-1}`, `1 <= k <= N`.
    pub fn tau(&self, k: usize) -> f64 {
        self.tau[k - 1]
    }

    pub fn steps_slice(&self) -> &[f64] {
        &self.tau
    }

    /// `r_k = τ_k / τ_{k-1}`, `2 <= k <= N`.
    pub fn ratio(&self, k: usize) -> f64 {
        self.tau[k - 1] / self.tau[k - 2]
    }

    pub fn ratios(&self) -> Vec<f64> {
        (2..=self.steps()).map(|k| self.ratio(k)).collect()
    }

    pub fn max_step(&self) -> f64 {
        self.tau.iter().cloned().fold(0.0, f64::max)
    }

    /// Same point pattern with every step multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_points(self.t.iter().map(|x| x * factor).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeshFile { t: self.t.clone() }).expect("mesh serializes")
    }

    /// Parses `{"t": [...]}` and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        Self::from_points(file.t)
    }
}

fn check_horizon(horizon: f64, steps: usize) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon T must be positive, got {horizon}")));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("number of steps N must be at least 1".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_points() {
        let m = TimeMesh::uniform(1.0, 4).unwrap();
        assert_eq!(m.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let m = TimeMesh::uniform(2.0, 1).unwrap();
        assert_eq!(m.points(), &[0.0, 2.0]);
        let m = TimeMesh::uniform(1.0, 3).unwrap();
        assert!((m.ratio(2) - 1.0).abs() < 1e-15);
        assert!((m.ratio(3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_rejects_bad_input() {
        assert!(TimeMesh::uniform(0.0, 3).is_err());
        assert!(TimeMesh::uniform(-1.0, 3).is_err());
        assert!(TimeMesh::uniform(1.0, 0).is_err());
    }

    #[test]
    fn graded_points() {
        let m = TimeMesh::graded(1.0, 4, 2.0).unwrap();
        assert_eq!(m.points(), &[0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0]);
        let m = TimeMesh::graded(1.0, 2, 1.0).unwrap();
        assert_eq!(m.points(), &[0.0, 0.5, 1.0]);
        let m = TimeMesh::graded(1.0, 4, 3.0).unwrap();
        assert!((m.tau(1) - 1.0 / 64.0).abs() < 1e-16);
        assert!((m.tau(4) - 37.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn graded_rejects_coarsening() {
        assert!(TimeMesh::graded(1.0, 4, 0.5).is_err());
    }

    #[test]
    fn graded_with_unit_exponent_is_uniform() {
        for n in 1..40 {
            let g = TimeMesh::graded(1.7, n, 1.0).unwrap();
            let u = TimeMesh::uniform(1.7, n).unwrap();
            assert_eq!(g, u);
        }
    }

    #[test]
    fn random_single_step() {
        let m = TimeMesh::random(1.0, 1, 0.3, 3.0, 0).unwrap();
        assert_eq!(m.points(), &[0.0, 1.0]);
    }

    #[test]
    fn random_ratios_in_bounds() {
        let m = TimeMesh::random(1.0, 50, 0.5, 2.0, 7).unwrap();
        assert_eq!(m.t(50), 1.0);
        for r in m.ratios() {
            assert!((0.5..=2.0).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn random_is_deterministic() {
        let a = TimeMesh::random(1.0, 30, 0.2, 5.0, 11).unwrap();
        let b = TimeMesh::random(1.0, 30, 0.2, 5.0, 11).unwrap();
        assert_eq!(a, b);
        let c = TimeMesh::random(1.0, 30, 0.2, 5.0, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn random_rejects_bad_bounds() {
        assert!(TimeMesh::random(1.0, 5, 0.0, 1.0, 0).is_err());
        assert!(TimeMesh::random(1.0, 5, 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn validate_messages() {
        assert!(validate_points(TimeMesh::uniform(1.0, 5).unwrap().points()).is_ok());
        let e = validate_points(&[0.0, 0.5, 0.5]).unwrap_err();
        assert_eq!(e.to_string(), "non-increasing at k=2");
        let e = validate_points(&[0.1, 0.5, 1.0]).unwrap_err();
        assert_eq!(e.to_string(), "t_0 ≠ 0");
    }

    #[test]
    fn json_loader_validates() {
        let m = TimeMesh::graded(1.0, 5, 2.0).unwrap();
        assert_eq!(TimeMesh::from_json(&m.to_json()).unwrap(), m);
        assert!(TimeMesh::from_json(r#"{"t": [0.0, 0.5, 0.4]}"#).is_err());
        assert!(TimeMesh::from_json(r#"{"x": [0.0]}"#).is_err());
    }
}
