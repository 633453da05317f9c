//! JSON job files. Every field has a default, so `{}` is a valid job; unknown
//! fields are rejected so typos surface with their line and column.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use attractor_core::continuation::{Deltas, Threshold};
use attractor_core::maps::MapSpec;

use crate::error::{CliError, CliResult};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn check(ok: bool, msg: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::validation(msg))
    }
}

fn check_range(r: [f64; 2], name: &str) -> CliResult<()> {
    check(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1], &format!("{name} must be a finite [min, max] pair"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandsJob {
    /// Sweep over `(s_min, s_max]`.
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
    /// Orbit iterates per slope for the numeric band count; zero skips it.
    pub orbit_samples: usize,
    pub orbit_transient: usize,
    /// Cloud gaps wider than this separate numeric bands.
    pub gap_tol: f64,
}

impl Default for BandsJob {
    fn default() -> Self {
        BandsJob { s_min: 1.0, s_max: 2.0, samples: 2000, orbit_samples: 0, orbit_transient: 1000, gap_tol: 1e-3 }
    }
}

impl BandsJob {
    pub fn validate(&self) -> CliResult<()> {
        check(self.s_min >= 1.0 && self.s_max <= 2.0 && self.s_min < self.s_max, "bands need 1 <= s_min < s_max <= 2")?;
        check(self.samples >= 1, "samples must be positive")?;
        check(self.gap_tol > 0.0, "gap_tol must be positive")
    }

    /// `s_min + (s_max - s_min) k / samples` for `k = 1..=samples`.
    pub fn slopes(&self) -> Vec<f64> {
        (1..=self.samples)
            .map(|k| if k == self.samples { self.s_max } else { self.s_min + (self.s_max - self.s_min) * k as f64 / self.samples as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Bcnf,
    Coupled,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepJob {
    pub kind: SweepKind,
    #[serde(rename = "tau_L")]
    pub tau_l: [f64; 2],
    #[serde(rename = "tau_R")]
    pub tau_r: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    #[serde(rename = "delta_R")]
    pub delta_r: f64,
    pub n_transient: usize,
    pub n_samples: usize,
    pub lyapunov_steps: usize,
    /// Coupled sweeps: slope and coupling axes.
    pub s: [f64; 2],
    pub ns: usize,
    pub omega: [f64; 2],
    pub nomega: usize,
    pub grid_n: usize,
    pub n_iter: usize,
    pub off_diagonal_tol: f64,
}

impl Default for SweepJob {
    fn default() -> Self {
        SweepJob {
            kind: SweepKind::Bcnf,
            tau_l: [0.35, 1.45],
            tau_r: [-2.9, -1.45],
            nx: 100,
            ny: 100,
            delta_l: 0.3,
            delta_r: 0.3,
            n_transient: 5_000,
            n_samples: 20_000,
            lyapunov_steps: 20_000,
            s: [1.65, 1.95],
            ns: 7,
            omega: [0.2, 0.35],
            nomega: 151,
            grid_n: 201,
            n_iter: 40,
            off_diagonal_tol: 0.05,
        }
    }
}

impl SweepJob {
    pub fn validate(&self) -> CliResult<()> {
        match self.kind {
            SweepKind::Bcnf => {
                check_range(self.tau_l, "tau_L")?;
                check_range(self.tau_r, "tau_R")?;
                check(self.nx >= 1 && self.ny >= 1, "nx and ny must be positive")?;
                check(self.n_samples >= 2, "n_samples must be at least 2")?;
                check(self.delta_l.is_finite() && self.delta_r.is_finite(), "deltas must be finite")
            }
            SweepKind::Coupled => {
                check_range(self.s, "s")?;
                check_range(self.omega, "omega")?;
                check(self.ns >= 1 && self.nomega >= 1, "ns and nomega must be positive")?;
                check(self.grid_n >= 1, "grid_n must be positive")
            }
        }
    }

    pub fn deltas(&self) -> Deltas {
        Deltas { left: self.delta_l, right: self.delta_r }
    }
}

/// Inclusive axis of `n` points.
pub fn axis(r: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![r[0]];
    }
    (0..n).map(|k| if k == n - 1 { r[1] } else { r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64 }).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    Fixed(f64),
    Residual { factor: f64, floor: f64 },
}

impl ThresholdSpec {
    pub fn to_threshold(&self) -> CliResult<Threshold> {
        match *self {
            ThresholdSpec::Fixed(t) if t > 0.0 => Ok(Threshold::Fixed(t)),
            ThresholdSpec::Residual { factor, floor } if factor > 0.0 && floor >= 0.0 => Ok(Threshold::Residual { factor, floor }),
            _ => Err(CliError::validation("threshold must be positive")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinueJob {
    pub family: String,
    /// Parameters held fixed; the varied one is overwritten along the path.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub vary: String,
    pub start: f64,
    pub end: f64,
    /// Equal parameter steps; the path has `steps + 1` points.
    pub steps: usize,
    pub threshold: Option<ThresholdSpec>,
    pub refine_min_step: Option<f64>,
    pub n_transient: Option<usize>,
    pub n_samples: Option<usize>,
    pub lyapunov_steps: Option<usize>,
    pub warm_points: Option<usize>,
    /// Estimate each attractor from iterated images of a dense sample
    /// instead of orbits.
    pub set_image: Option<SetImageSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetImageSpec {
    pub grid: usize,
    pub n_iter: usize,
    pub span: usize,
}

impl Default for ContinueJob {
    fn default() -> Self {
        ContinueJob {
            family: "tent".into(),
            params: BTreeMap::new(),
            vary: "s".into(),
            start: 1.5,
            end: 1.35,
            steps: 64,
            threshold: Some(ThresholdSpec::Fixed(0.05)),
            refine_min_step: None,
            n_transient: None,
            n_samples: None,
            lyapunov_steps: Some(0),
            warm_points: None,
            set_image: None,
        }
    }
}

impl ContinueJob {
    pub fn base_map(&self) -> CliResult<MapSpec> {
        let mut p = self.params.clone();
        p.insert(self.vary.clone(), self.start);
        if self.family.to_lowercase() == "bcnf" {
            p.entry("delta_L".into()).or_insert(0.3);
            p.entry("delta_R".into()).or_insert(0.3);
        }
        Ok(MapSpec::from_named(&self.family, &p)?)
    }

    pub fn values(&self) -> CliResult<Vec<f64>> {
        check(self.steps >= 1, "steps must be positive")?;
        check(self.start.is_finite() && self.end.is_finite(), "start and end must be finite")?;
        let n = self.steps + 1;
        Ok((0..n).map(|k| if k == n - 1 { self.end } else { self.start + (self.end - self.start) * k as f64 / (n - 1) as f64 }).collect())
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum CurveName {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveJob {
    pub curve: CurveName,
    /// Curves a, b and d: the τ_L samples the curve is traced over.
    #[serde(rename = "tau_L")]
    pub tau_l: Option<[f64; 2]>,
    /// Curve c: the τ_R samples the curve is traced over.
    #[serde(rename = "tau_R")]
    pub tau_r: Option<[f64; 2]>,
    pub samples: usize,
    #[serde(rename = "delta_L")]
    pub delta_l: f64,
    #[serde(rename = "delta_R")]
    pub delta_r: f64,
    /// Curves a and b: τ_R bracket holding the root.
    pub bracket: Option<[f64; 2]>,
    /// Curve a: the cycle whose border collision is traced.
    pub itinerary: String,
    /// Curves c and d: window of the continued parameter (τ_L for c, τ_R
    /// for d), walked from the first value to the second. Each default scan
    /// starts on the side whose attractor is continued.
    pub scan: Option<[f64; 2]>,
    pub scan_steps: usize,
    /// Refinement floor; an eighth of the scan step when absent.
    pub refine_min_step: Option<f64>,
    /// Fixed `d_H` above which a scan step counts as the crisis.
    pub jump_threshold: f64,
    pub n_transient: usize,
    pub n_samples: usize,
}

impl Default for CurveJob {
    fn default() -> Self {
        CurveJob {
            curve: CurveName::B,
            tau_l: None,
            tau_r: None,
            samples: 25,
            delta_l: 0.3,
            delta_r: 0.3,
            bracket: None,
            itinerary: "LRL".into(),
            scan: None,
            scan_steps: 9,
            refine_min_step: None,
            jump_threshold: 0.1,
            n_transient: 10_000,
            n_samples: 200_000,
        }
    }
}

/// A curve job with every per-curve default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePlan {
    /// Range of the traced-over parameter.
    pub along: [f64; 2],
    pub bracket: [f64; 2],
    pub scan: [f64; 2],
    pub refine_min_step: f64,
}

impl CurveJob {
    pub fn plan(&self) -> CliResult<CurvePlan> {
        let (along, bracket, scan) = match self.curve {
            CurveName::A => (self.tau_l.unwrap_or([0.35, 1.0]), self.bracket.unwrap_or([-3.0, -0.5]), [0.0, 0.0]),
            CurveName::B => (self.tau_l.unwrap_or([0.72, 1.2]), self.bracket.unwrap_or([-3.5, -1.3]), [0.0, 0.0]),
            CurveName::C => (self.tau_r.unwrap_or([-2.8, -2.1]), [0.0, 0.0], self.scan.unwrap_or([0.90, 0.70])),
            CurveName::D => (self.tau_l.unwrap_or([1.0, 1.4]), [0.0, 0.0], self.scan.unwrap_or([-1.6, -1.95])),
        };
        check_range(along, "curve range")?;
        check_range(bracket, "bracket")?;
        check(scan[0].is_finite() && scan[1].is_finite(), "scan must be finite")?;
        check(self.samples >= 1, "samples must be positive")?;
        check(self.scan_steps >= 1, "scan_steps must be positive")?;
        check(self.n_samples >= 2, "n_samples must be at least 2")?;
        check(self.jump_threshold > 0.0, "jump_threshold must be positive")?;
        let step = (scan[1] - scan[0]).abs() / self.scan_steps as f64;
        let refine_min_step = self.refine_min_step.unwrap_or(step / 8.0);
        check(refine_min_step > 0.0 || matches!(self.curve, CurveName::A | CurveName::B), "refine_min_step must be positive")?;
        Ok(CurvePlan { along, bracket, scan, refine_min_step })
    }

    pub fn deltas(&self) -> Deltas {
        Deltas { left: self.delta_l, right: self.delta_r }
    }
}
