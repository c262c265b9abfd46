//! Boundary controller laws.
//!
//! The plant's boundary fluxes split as `f = f̂ + F`: `f̂` is output feedback
//! that drives the stabilization state `û` to zero, and `F` is the
//! feedforward part that forces the regulator state to carry the reference
//! mean, `∫ U dx = r(t)`. Both are pure functions of instantaneous boundary
//! values; callers choose the time level.

use std::fmt;

/// Which splitting of the plant into stabilization and regulator systems
/// is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerVariant {
    /// Burgers stabilization system with cubic boundary feedback.
    Theorem1,
    /// Linear diffusion stabilization system with linear boundary feedback.
    Theorem2,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("{variant} requires k > {threshold} (got k = {k})")]
    GainThreshold {
        variant: ControllerVariant,
        threshold: &'static str,
        k: f64,
    },
    #[error("viscosity must be positive and finite (got nu = {0})")]
    Viscosity(f64),
}

impl ControllerVariant {
    pub fn name(self) -> &'static str {
        match self {
            ControllerVariant::Theorem1 => "theorem1",
            ControllerVariant::Theorem2 => "theorem2",
        }
    }

    /// Strict lower bound on the feedback gain.
    pub fn gain_threshold(self) -> f64 {
        match self {
            ControllerVariant::Theorem1 => 1.0 / 6.0,
            ControllerVariant::Theorem2 => 0.0,
        }
    }

    pub fn validate_gain(self, k: f64) -> Result<(), ControlError> {
        if k.is_finite() && k > self.gain_threshold() {
            Ok(())
        } else {
            Err(ControlError::GainThreshold {
                variant: self,
                threshold: match self {
                    ControllerVariant::Theorem1 => "1/6",
                    ControllerVariant::Theorem2 => "0",
                },
                k,
            })
        }
    }
}

impl fmt::Display for ControllerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ControllerVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theorem1" => Ok(ControllerVariant::Theorem1),
            "theorem2" => Ok(ControllerVariant::Theorem2),
            other => Err(format!(
                "unknown variant `{other}` (expected `theorem1` or `theorem2`)"
            )),
        }
    }
}

/// Feedback gain and viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConfig {
    pub k: f64,
    pub nu: f64,
}

impl GainConfig {
    /// Checks `nu > 0` and the variant's strict gain threshold.
    pub fn validated(variant: ControllerVariant, k: f64, nu: f64) -> Result<Self, ControlError> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(ControlError::Viscosity(nu));
        }
        variant.validate_gain(k)?;
        Ok(GainConfig { k, nu })
    }
}

/// A pair of boundary fluxes `(at x = 0, at x = 1)`, in units of `ν ∂/∂x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fluxes {
    pub left: f64,
    pub right: f64,
}

impl Fluxes {
    pub fn new(left: f64, right: f64) -> Self {
        Fluxes { left, right }
    }
}

impl std::ops::Add for Fluxes {
    type Output = Fluxes;
    fn add(self, o: Fluxes) -> Fluxes {
        Fluxes::new(self.left + o.left, self.right + o.right)
    }
}

/// Feedback law at one boundary as a function of the boundary value, with
/// its derivative (needed when the law is applied implicitly).
///
/// `theorem1`: `φ(v) = k (v + v³)`; `theorem2`: `φ(v) = k v`. The flux is
/// `+φ(û(0))` at the left end and `-φ(û(1))` at the right end.
pub fn feedback_law(variant: ControllerVariant, k: f64, v: f64) -> (f64, f64) {
    match variant {
        ControllerVariant::Theorem1 => (k * (v + v * v * v), k * (1.0 + 3.0 * v * v)),
        ControllerVariant::Theorem2 => (k * v, k),
    }
}

pub fn feedback_fluxes(variant: ControllerVariant, k: f64, uhat0: f64, uhat1: f64) -> Fluxes {
    Fluxes::new(
        feedback_law(variant, k, uhat0).0,
        -feedback_law(variant, k, uhat1).0,
    )
}

/// Boundary data consumed by the feedforward law.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeedforwardInputs {
    pub uhat0: f64,
    pub uhat1: f64,
    pub reg0: f64,
    pub reg1: f64,
    /// `r'(t)`.
    pub r_prime: f64,
    /// `∫₀¹ [a (û + U) + u_d] dx`.
    pub coupling_integral: f64,
}

pub fn feedforward_fluxes(variant: ControllerVariant, inp: &FeedforwardInputs) -> Fluxes {
    let FeedforwardInputs {
        uhat0,
        uhat1,
        reg0,
        reg1,
        r_prime,
        coupling_integral,
    } = *inp;
    let (mut f0, mut f1) = (
        uhat0 * reg0 + 0.5 * reg0 * reg0,
        uhat1 * reg1 + 0.5 * reg1 * reg1,
    );
    if variant == ControllerVariant::Theorem2 {
        // the regulator also carries -û ∂û/∂x
        f0 += 0.5 * uhat0 * uhat0;
        f1 += 0.5 * uhat1 * uhat1;
    }
    Fluxes::new(f0, f1 + r_prime - coupling_integral)
}

/// Guaranteed exponential rate: `min(ν, k - 1/6)` or `min(ν, k)`.
pub fn decay_rate(variant: ControllerVariant, nu: f64, k: f64) -> Result<f64, ControlError> {
    let gains = GainConfig::validated(variant, k, nu)?;
    Ok(gains.nu.min(gains.k - variant.gain_threshold()))
}

/// `‖u₀ - r(0)‖ e^{-λt/2}`.
pub fn tracking_bound(t: f64, norm0: f64, lambda: f64) -> f64 {
    norm0 * (-0.5 * lambda * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ControllerVariant::*;

    #[test]
    fn feedback_examples() {
        assert_eq!(
            feedback_fluxes(Theorem1, 15.0, 0.0, 0.0),
            Fluxes::new(0.0, 0.0)
        );
        assert_eq!(
            feedback_fluxes(Theorem1, 15.0, 1.0, -1.0),
            Fluxes::new(30.0, 30.0)
        );
        let f = feedback_fluxes(Theorem2, 15.0, 0.2, 0.4);
        assert!((f.left - 3.0).abs() < 1e-12 && (f.right + 6.0).abs() < 1e-12);
    }

    #[test]
    fn feedforward_examples() {
        assert_eq!(
            feedforward_fluxes(Theorem1, &FeedforwardInputs::default()),
            Fluxes::new(0.0, 0.0)
        );
        let inp = FeedforwardInputs {
            uhat1: 0.5,
            reg1: 2.0,
            r_prime: 1.0,
            coupling_integral: 3.0,
            ..Default::default()
        };
        assert_eq!(feedforward_fluxes(Theorem1, &inp), Fluxes::new(0.0, 1.0));
        let inp = FeedforwardInputs {
            uhat0: 1.0,
            reg0: 1.0,
            ..Default::default()
        };
        assert_eq!(feedforward_fluxes(Theorem2, &inp).left, 2.0);
    }

    #[test]
    fn decay_rate_examples() {
        assert_eq!(decay_rate(Theorem1, 5.0, 15.0).unwrap(), 5.0);
        assert!((decay_rate(Theorem1, 5.0, 0.2).unwrap() - 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(decay_rate(Theorem2, 5.0, 15.0).unwrap(), 5.0);
        assert!(decay_rate(Theorem1, 5.0, 1.0 / 6.0).is_err());
        assert!(decay_rate(Theorem1, 5.0, 1.0 / 6.0 + 1e-9).is_ok());
        assert!(decay_rate(Theorem2, 5.0, 0.0).is_err());
        assert!(decay_rate(Theorem2, 0.0, 1.0).is_err());
    }

    #[test]
    fn gain_error_message_names_threshold() {
        let e = Theorem1.validate_gain(0.1).unwrap_err();
        assert!(e.to_string().contains("theorem1 requires k > 1/6"), "{e}");
    }

    #[test]
    fn bound_examples() {
        assert_eq!(tracking_bound(0.0, 6.0, 5.0), 6.0);
        assert!((tracking_bound(1.0, 6.0, 5.0) - 0.492_509_99).abs() < 1e-6);
        assert!(tracking_bound(200.0, 6.0, 5.0) < 1e-100);
    }

    fn variant() -> impl Strategy<Value = ControllerVariant> {
        prop_oneof![Just(Theorem1), Just(Theorem2)]
    }

    proptest! {
        #[test]
        fn feedback_is_odd(v in variant(), k in 0.01f64..50.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let p = feedback_fluxes(v, k, a, b);
            let m = feedback_fluxes(v, k, -a, -b);
            prop_assert_eq!(p.left, -m.left);
            prop_assert_eq!(p.right, -m.right);
        }

        #[test]
        fn feedback_is_dissipative(v in variant(), k in 0.0f64..50.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let f = feedback_fluxes(v, k, a, b);
            prop_assert!(f.left * a >= 0.0);
            prop_assert!(f.right * b <= 0.0);
        }

        #[test]
        fn bound_decreasing_and_homogeneous(
            t in 0.0f64..10.0, dt in 1e-3f64..1.0, n0 in 0.1f64..10.0, c in 0.1f64..10.0, lam in 0.01f64..10.0,
        ) {
            prop_assert!(tracking_bound(t + dt, n0, lam) < tracking_bound(t, n0, lam));
            let scaled = tracking_bound(t, c * n0, lam);
            prop_assert!((scaled - c * tracking_bound(t, n0, lam)).abs() <= 1e-12 * scaled.abs().max(1.0));
        }

        #[test]
        fn rate_monotone(v in variant(), nu in 0.1f64..10.0, k in 0.2f64..10.0, d in 0.0f64..2.0) {
            let base = decay_rate(v, nu, k).unwrap();
            prop_assert!(decay_rate(v, nu + d, k).unwrap() >= base);
            prop_assert!(decay_rate(v, nu, k + d).unwrap() >= base);
        }
    }
}
