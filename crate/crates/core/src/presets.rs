//! Named data presets shared by the CLI, the acceptance runs and the tests.

use crate::error::{Error, Result};
use crate::forcing::{Forcing, GaussianForce, GaussianTensor, TimeSeries};
use crate::geometry::BodySpec;
use crate::linear::{ExtensionCoupling, ExtensionLayer, LinearConfig};
use crate::motion::{FourierPath, RigidMotionSpec, E1};
use crate::oseen::OseenConfig;
use crate::stokes::EigenOptions;
use std::f64::consts::PI;

/// Period of the two far-field presets; the spin rate is `2 pi / T`.
pub const WAKE_PERIOD: f64 = 4.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Generic smooth periodic data, unit period.
    Smooth,
    /// `xi = 0.5 e1`, steady spin about `e1`, steady point-like force.
    Wake,
    /// `xi = 0`, rocking spin about `e2`, force with nonzero mean.
    Rotating,
    /// Body at rest, compact off-centre forcing; the small-data nonlinear runs.
    Still,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Smooth, Preset::Wake, Preset::Rotating, Preset::Still];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Smooth => "smooth",
            Preset::Wake => "wake",
            Preset::Rotating => "rotating",
            Preset::Still => "still",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Manifest(format!("unknown preset {s:?} (smooth, wake, rotating, still)")))
    }

    pub fn period(self) -> f64 {
        match self {
            Preset::Smooth | Preset::Still => 1.0,
            Preset::Wake | Preset::Rotating => WAKE_PERIOD,
        }
    }

    /// Motion at unit amplitude.
    pub fn motion(self) -> RigidMotionSpec {
        let t = self.period();
        let spin = 2.0 * PI / t;
        let (xi, omega) = match self {
            Preset::Smooth => (
                FourierPath::trig(t, [0.1, 0.0, 0.0], &[([0.05, 0.02, 0.0], [0.0, 0.0, 0.03])]),
                FourierPath::trig(t, [0.0; 3], &[([0.1, 0.0, 0.0], [0.0, 0.04, 0.0])]),
            ),
            Preset::Wake => (FourierPath::constant(t, [0.5, 0.0, 0.0]), FourierPath::constant(t, [spin, 0.0, 0.0])),
            Preset::Rotating => {
                (FourierPath::zero(t), FourierPath::trig(t, [0.0; 3], &[([0.0; 3], [0.0, spin, 0.0])]))
            }
            Preset::Still => return RigidMotionSpec::at_rest(t),
        };
        RigidMotionSpec::new(xi, omega, E1).expect("preset motion is valid")
    }

    /// Body force scaled by `amplitude`.
    pub fn forcing(self, amplitude: f64) -> Forcing {
        let t = self.period();
        match self {
            Preset::Smooth => Forcing {
                terms: vec![GaussianTensor {
                    center: [0.0, 2.0, 0.5],
                    width: 0.8,
                    matrix: [[0.0, amplitude, 0.0], [0.0, 0.0, 0.0], [0.5 * amplitude, 0.0, 0.2 * amplitude]],
                    time: TimeSeries { period: t, mean: 0.3, cos: vec![0.5], sin: vec![0.0, 0.2] },
                }],
                forces: vec![],
            },
            Preset::Wake => Forcing {
                terms: vec![],
                forces: vec![GaussianForce {
                    center: [0.0, 2.5, 0.0],
                    width: 0.6,
                    vector: [amplitude, 0.0, 0.0],
                    time: TimeSeries { period: t, mean: 1.0, cos: vec![], sin: vec![] },
                }],
            },
            Preset::Still => Forcing {
                terms: vec![GaussianTensor {
                    center: [0.4, 2.0, -0.6],
                    width: 0.7,
                    matrix: [[0.2 * amplitude, amplitude, 0.0], [0.0, 0.0, -0.4 * amplitude], [0.6 * amplitude, 0.0, 0.0]],
                    time: TimeSeries { period: t, mean: 0.5, cos: vec![0.6], sin: vec![0.3] },
                }],
                forces: vec![],
            },
            Preset::Rotating => Forcing {
                terms: vec![],
                forces: vec![GaussianForce {
                    center: [0.0, 2.5, 0.0],
                    width: 0.6,
                    vector: [amplitude, 0.0, 0.0],
                    time: TimeSeries { period: t, mean: 1.0, cos: vec![0.5], sin: vec![] },
                }],
            },
        }
    }

    /// The far-field presets use a smaller body so that the cut-off radius,
    /// and with it the box, stay small.
    pub fn body_radius(self) -> f64 {
        match self {
            Preset::Smooth | Preset::Still => 1.0,
            Preset::Wake | Preset::Rotating => 0.5,
        }
    }

    /// Support radius of the boundary extension.
    pub fn rho(self) -> f64 {
        match self {
            Preset::Smooth | Preset::Still => 1.9,
            Preset::Wake | Preset::Rotating => 1.2,
        }
    }

    /// Linear run on `Omega_R`.
    pub fn linear_config(self, r: f64, h: f64, k: usize, n_t: usize, amplitude: f64) -> LinearConfig {
        LinearConfig {
            body: BodySpec::sphere(self.body_radius()).expect("positive radius"),
            r,
            h,
            k,
            n_t,
            motion: self.motion(),
            forcing: self.forcing(amplitude),
            rho: self.rho(),
            layer: ExtensionLayer::Auto { eps_target: 0.25 },
            coupling: ExtensionCoupling::On,
            eigen: EigenOptions::default(),
            pressure: true,
        }
    }
}

/// Cut-off radius, domain radius and spacing of the far-field runs.
pub const FAR_R_BAR: f64 = 4.5;
pub const FAR_R: f64 = 5.5;
pub const FAR_H: f64 = 0.25;

/// Far-field run of a preset with `k` modes and `n_t` time samples.
pub fn oseen_config(p: Preset, k: usize, n_t: usize, amplitude: f64) -> OseenConfig {
    OseenConfig::new(p.linear_config(FAR_R, FAR_H, k, n_t, amplitude), FAR_R_BAR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::validate_hypothesis_h;

    #[test]
    fn presets_round_trip_names_and_respect_h() {
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
            p.forcing(1.0).validate(p.period()).unwrap();
        }
        assert!(Preset::parse("nope").is_err());
        assert!(validate_hypothesis_h(&Preset::Wake.motion()).holds());
        assert!(validate_hypothesis_h(&Preset::Rotating.motion()).holds());
        assert!((Preset::Wake.motion().lambda - 0.5).abs() < 1e-15);
        assert_eq!(Preset::Rotating.motion().lambda, 0.0);
    }
}
