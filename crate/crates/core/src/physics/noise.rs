use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Variances of the zero-mean Gaussian noise added to body velocities at
/// every engine time step: `(m/s)²` for the linear components and
/// `(rad/s)²` for the angular one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    pub linear: f64,
    pub angular: f64,
    /// Whether the robot's commanded velocity is perturbed as well.
    pub robot: bool,
    /// Engine time step at which a fresh velocity perturbation is drawn, s.
    pub timestep: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            linear: 0.0,
            angular: 0.0,
            robot: false,
            timestep: 0.002,
        }
    }
}

impl NoiseSpec {
    pub fn uniform(beta: f64) -> Self {
        NoiseSpec {
            linear: beta,
            angular: beta,
            robot: true,
            ..Default::default()
        }
    }

    /// Factor turning one velocity draw into the displacement accumulated
    /// over a substep of length `h`: the sum of `h / timestep` independent
    /// perturbations, each held for one time step, has standard deviation
    /// `sqrt(timestep * h)` per unit of velocity deviation.
    pub fn displacement_scale(&self, h: f64) -> f64 {
        if self.timestep > 0.0 {
            (self.timestep.min(h) * h).sqrt()
        } else {
            h
        }
    }

    pub fn is_zero(&self) -> bool {
        self.linear == 0.0 && self.angular == 0.0
    }
}

/// A noise spec bound to its RNG stream.
#[derive(Debug, Clone)]
pub struct VelocityNoise {
    pub spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl VelocityNoise {
    pub fn new(spec: NoiseSpec, seed: u64) -> Self {
        VelocityNoise {
            spec,
            rng: crate::seed::rng(seed),
        }
    }

    /// Exact, noise-free dynamics.
    pub fn none() -> Self {
        VelocityNoise::new(NoiseSpec::default(), 0)
    }

    pub fn active(&self) -> bool {
        !self.spec.is_zero()
    }

    /// One `(v_x, v_y, ω)` perturbation.
    pub fn draw(&mut self) -> [f64; 3] {
        let sl = self.spec.linear.sqrt();
        let sa = self.spec.angular.sqrt();
        let a: f64 = self.rng.sample(StandardNormal);
        let b: f64 = self.rng.sample(StandardNormal);
        let c: f64 = self.rng.sample(StandardNormal);
        [a * sl, b * sl, c * sa]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injected_noise_is_unbiased() {
        let beta = 0.006;
        let n = 20_000;
        let mut noise = VelocityNoise::new(NoiseSpec::uniform(beta), 11);
        let mut sum = [0.0; 3];
        let mut sq = [0.0; 3];
        for _ in 0..n {
            let d = noise.draw();
            for k in 0..3 {
                sum[k] += d[k];
                sq[k] += d[k] * d[k];
            }
        }
        let bound = 4.0 * (beta / n as f64).sqrt();
        for k in 0..3 {
            let mean = sum[k] / n as f64;
            assert!(mean.abs() <= bound, "component {k}: {mean}");
            let var = sq[k] / n as f64 - mean * mean;
            assert!((var / beta - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn displacement_scale_sums_engine_steps() {
        let spec = NoiseSpec::uniform(0.009);
        // 50 steps of 2 ms: variance 50 * (2 ms)^2
        assert!((spec.displacement_scale(0.1) - (50.0f64 * 0.002 * 0.002).sqrt()).abs() < 1e-15);
        let coarse = NoiseSpec {
            timestep: 1.0,
            ..spec
        };
        assert_eq!(coarse.displacement_scale(0.1), 0.1);
    }
}
