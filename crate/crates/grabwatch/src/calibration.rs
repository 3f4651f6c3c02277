//! Iterative method-of-moments estimation of the camera angle and the swing
//! variance.
//!
//! The swing angle is modelled as `alpha = |Z|` with `Z ~ Normal(0, sigma²)`
//! and the azimuth as uniform on [0, 2π), independent of each other. Under
//! that model `E(h/√(m²+h²)) = cos(beta)·exp(−sigma²/2)`, and `E(alpha²) =
//! sigma²`, which yields a fixed-point scheme: from the current `beta`
//! estimate, recover per-observation swing angles, take their mean square as
//! the new `sigma²`, and invert the moment identity for the new `beta`.
//! Iteration stops when both parameter deltas drop below `epsilon`.

use crate::angle::Angle;
use crate::geometry::{self, GeometryError, ImagePoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("no observations to calibrate on")]
    InsufficientData,
    #[error("invalid calibration config: {0}")]
    InvalidConfig(String),
    #[error(
        "moment equation infeasible: arccos argument {argument} exceeds 1; \
         the observed spread is inconsistent with the swing model"
    )]
    Infeasible { argument: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The two installation parameters the calibration recovers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Camera angle: fixed tilt of the principal axis off gravity.
    pub beta: Angle,
    /// Variance of the latent normal behind the folded swing-angle model, rad².
    pub sigma_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Termination tolerance applied to |Δbeta| and |Δsigma²|.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub initial_beta: Angle,
    /// When the moment equation turns infeasible, clamp beta to 0 and warn
    /// instead of failing.
    pub clamp_infeasible: bool,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            epsilon: 1e-6,
            max_iterations: 100,
            initial_beta: Angle::ZERO,
            clamp_infeasible: false,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<(), CalibrationError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CalibrationError::InvalidConfig(format!(
                "epsilon = {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(CalibrationError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the iteration trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub beta_rad: f64,
    pub sigma_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub params: ModelParams,
    /// Number of iterations executed; the trace holds one more entry for the
    /// initial state.
    pub iterations: usize,
    pub trace: Vec<IterationState>,
    pub final_abs_delta_beta: f64,
    pub final_abs_delta_sigma_sq: f64,
    /// |sigma²(T−1)/sigma²(T) − 1|, logged alongside the absolute criterion.
    pub final_rel_delta_sigma_sq: f64,
    /// Per-observation swing-angle estimates at the final parameters.
    pub alphas: Vec<Angle>,
    pub converged: bool,
    pub clamped_infeasible: bool,
    pub warnings: Vec<String>,
}

struct StepOutcome {
    params: ModelParams,
    alphas: Vec<Angle>,
    clamped: bool,
}

fn step(
    obs: &[ImagePoint],
    h: f64,
    current: &ModelParams,
    clamp_infeasible: bool,
) -> Result<StepOutcome, CalibrationError> {
    let n = obs.len() as f64;

    // Per-observation swing angles at the current beta.
    let mut alphas = Vec::with_capacity(obs.len());
    for p in obs {
        alphas.push(geometry::estimate_alpha(p.m, p.theta, current.beta, h)?);
    }

    // Moment estimate of sigma² from E(alpha²) = sigma².
    let sigma_sq = alphas.iter().map(|a| a.radians() * a.radians()).sum::<f64>() / n;

    // Moment estimate of beta: mean of h/√(m²+h²) deflated by exp(−sigma²/2).
    let mean_ratio = obs
        .iter()
        .map(|p| h / (p.m * p.m + h * h).sqrt())
        .sum::<f64>()
        / n;
    let argument = mean_ratio * (sigma_sq / 2.0).exp();
    let (beta, clamped) = if argument <= 1.0 {
        (Angle::from_radians(argument.acos()), false)
    } else if argument <= 1.0 + geometry::UNIT_CLIP_SLACK {
        (Angle::ZERO, false)
    } else if clamp_infeasible {
        (Angle::ZERO, true)
    } else {
        return Err(CalibrationError::Infeasible { argument });
    };

    Ok(StepOutcome {
        params: ModelParams { beta, sigma_sq },
        alphas,
        clamped,
    })
}

/// One update of the fixed-point scheme: recovers per-observation swing
/// angles at `current.beta`, then refreshes `sigma²` and `beta` from the
/// moment identities. Returns the new parameters and the swing angles.
pub fn iterate_once(
    obs: &[ImagePoint],
    h: f64,
    current: &ModelParams,
) -> Result<(ModelParams, Vec<Angle>), CalibrationError> {
    if obs.is_empty() {
        return Err(CalibrationError::InsufficientData);
    }
    let out = step(obs, h, current, false)?;
    Ok((out.params, out.alphas))
}

/// Runs the fixed-point iteration to convergence (both |Δbeta| and |Δsigma²|
/// below `cfg.epsilon`) or to the iteration cap. Hitting the cap is reported,
/// not an error. Deterministic for fixed inputs.
pub fn calibrate(
    obs: &[ImagePoint],
    h: f64,
    cfg: &CalibrationConfig,
) -> Result<CalibrationReport, CalibrationError> {
    cfg.validate()?;
    if obs.is_empty() {
        return Err(CalibrationError::InsufficientData);
    }

    // sigma² has no prescribed starting value; the first pass overwrites it
    // before it is ever used, so seed the trace with 0.
    let mut params = ModelParams {
        beta: cfg.initial_beta,
        sigma_sq: 0.0,
    };
    let mut trace = vec![IterationState {
        beta_rad: params.beta.radians(),
        sigma_sq: params.sigma_sq,
    }];
    let mut alphas = Vec::new();
    let mut converged = false;
    let mut clamped_any = false;
    let (mut d_beta, mut d_sigma, mut rel_sigma) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for _ in 0..cfg.max_iterations {
        let out = step(obs, h, &params, cfg.clamp_infeasible)?;
        d_beta = (out.params.beta.radians() - params.beta.radians()).abs();
        d_sigma = (out.params.sigma_sq - params.sigma_sq).abs();
        rel_sigma = if out.params.sigma_sq == 0.0 {
            if params.sigma_sq == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (params.sigma_sq / out.params.sigma_sq - 1.0).abs()
        };
        clamped_any |= out.clamped;
        params = out.params;
        alphas = out.alphas;
        trace.push(IterationState {
            beta_rad: params.beta.radians(),
            sigma_sq: params.sigma_sq,
        });
        if d_beta < cfg.epsilon && d_sigma < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let mut warnings = Vec::new();
    if clamped_any {
        warnings.push(
            "moment equation went infeasible during iteration; beta clamped to 0".to_string(),
        );
    }
    if params.sigma_sq < 1e-12 {
        warnings.push(
            "estimated swing variance is effectively zero; input spread is degenerate".to_string(),
        );
    }
    if !converged {
        warnings.push(format!(
            "iteration cap {} reached before convergence",
            cfg.max_iterations
        ));
    }

    Ok(CalibrationReport {
        params,
        iterations: trace.len() - 1,
        trace,
        final_abs_delta_beta: d_beta,
        final_abs_delta_sigma_sq: d_sigma,
        final_rel_delta_sigma_sq: rel_sigma,
        alphas,
        converged,
        clamped_infeasible: clamped_any,
        warnings,
    })
}
