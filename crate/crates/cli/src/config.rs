//! Resolved run configuration, embedded in every output file.

use eigenoverlap::{Basis, CertifyOptions, ClusterModelParams, IndicatorMode, ScalingWindow};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, Serialize)]
pub struct InputDescriptor {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spectrum: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_floor: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub generated: Vec<ClusterModelParams>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointConfig {
    pub target: usize,
    pub complement: usize,
    pub threshold: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub input: InputDescriptor,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<IndicatorMode>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub degrees: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Basis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_policy: Option<String>,
    /// Resolved window; per-system windows live with the results.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<ScalingWindow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<PointConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyOptions>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            input: InputDescriptor::default(),
            targets: None,
            weights: None,
            threshold: None,
            mode: None,
            degrees: Vec::new(),
            basis: None,
            window_policy: None,
            window: None,
            points: None,
            gamma: None,
            certify: None,
            outputs: Vec::new(),
            seed: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if matches!(self.command.as_str(), "bound" | "sweep") {
            if self.degrees.is_empty() {
                return Err(CliError::input("at least one degree is required"));
            }
            if self.degrees.contains(&0) {
                return Err(CliError::input("degrees must be ≥ 1"));
            }
        }
        if let Some(p) = &self.points {
            if p.target < 2 || p.complement < 2 || p.threshold < 2 {
                return Err(CliError::input("discretization counts must be ≥ 2 per region"));
            }
        }
        if let Some([lo, hi]) = self.gamma {
            let ok = |g: f64| g > 0.0 && g <= 0.5;
            if !(ok(lo) && ok(hi)) {
                return Err(CliError::input(format!(
                    "γ⁻ and γ⁺ must lie in (0, 0.5], got {lo} and {hi}"
                )));
            }
        }
        if let Some(c) = &self.certify {
            if c.factor < 2 {
                return Err(CliError::input("refinement factor must be ≥ 2"));
            }
            if !(c.tolerance > 0.0) {
                return Err(CliError::input("certification tolerance must be positive"));
            }
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(CliError::input("weights must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// "1-8", "1..8", "2,4,6" or a mix such as "1-3,6".
pub fn parse_degrees(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::input(format!("invalid degree list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part.split_once("..").or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_usize_list(s: &str, what: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| CliError::input(format!("invalid {what} entry {p:?}")))
        })
        .collect()
}

pub fn parse_f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::input(format!("invalid {what} entry {p:?}")))
        })
        .collect()
}

pub fn parse_window_range(s: &str) -> CliResult<ScalingWindow> {
    let v = parse_f64_list(s, "window")?;
    if v.len() != 2 {
        return Err(CliError::input(format!("window must be \"LO,HI\", got {s:?}")));
    }
    ScalingWindow::new(v[0], v[1]).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_lists() {
        assert_eq!(parse_degrees("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_degrees("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_degrees("2, 5").unwrap(), vec![2, 5]);
        assert_eq!(parse_degrees("1-2,6").unwrap(), vec![1, 2, 6]);
        assert!(parse_degrees("3-1").is_err());
        assert!(parse_degrees("").is_err());
        assert!(parse_degrees("a").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::new("bound");
        assert!(c.validate().is_err());
        c.degrees = vec![1, 2];
        c.validate().unwrap();
        c.gamma = Some([0.3, 0.6]);
        assert!(c.validate().is_err());
        c.gamma = Some([0.3, 0.3]);
        c.points = Some(PointConfig {
            target: 1,
            complement: 200,
            threshold: 200,
        });
        assert!(c.validate().is_err());
    }
}
