//! Persisted solve results.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::analysis::{certify, CertifyReport};
use crate::error::{Error, Result};
use crate::frames::{coherence, Frame, FrameFile};
use crate::solver::{MethodConfig, RestartSummary, SolveResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Trstmi,
    Altproj,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub method: Method,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub config: MethodConfig,
    pub best_coherence: f64,
    pub best_restart: usize,
    pub per_restart: Vec<RestartSummary>,
    pub best_frame: FrameFile,
    pub certificates: CertifyReport,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub wall_time: f64,
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

impl RunRecord {
    /// Wraps a solve result. `started` is when the solve began; `cert_tol` is
    /// the certificate tolerance.
    pub fn from_result(result: &SolveResult, seed: u64, cert_tol: f64, started: SystemTime) -> Self {
        let frame = &result.best_frame;
        let method = match result.config_echo {
            MethodConfig::Trstmi(_) => Method::Trstmi,
            MethodConfig::Altproj(_) => Method::Altproj,
        };
        RunRecord {
            schema_version: SCHEMA_VERSION,
            method,
            d: frame.d(),
            n: frame.n(),
            seed,
            config: result.config_echo.clone(),
            best_coherence: result.best_coherence,
            best_restart: result.best_restart,
            per_restart: result.per_restart.clone(),
            best_frame: FrameFile::from(frame),
            certificates: certify(frame, cert_tol),
            started_at: unix_seconds(started),
            finished_at: unix_seconds(SystemTime::now()),
            wall_time: result.wall_time,
        }
    }

    pub fn best_frame(&self) -> Result<Frame> {
        Frame::try_from(self.best_frame.clone())
    }

    /// Recomputes the coherence of the embedded frame and compares it with
    /// the recorded value.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let c = coherence(&self.best_frame()?);
        if (c - self.best_coherence).abs() > tol {
            return Err(Error::Format(format!(
                "recorded coherence {} but frame gives {}",
                self.best_coherence, c
            )));
        }
        Ok(())
    }

    /// The record with timing fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        RunRecord {
            started_at: 0.0,
            finished_at: 0.0,
            wall_time: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolverConfig};

    #[test]
    fn round_trip_and_verify() {
        let cfg = SolverConfig::with_eps(2, 3, 1e-4).unwrap().restarts(2).seed(1);
        let res = solve(&cfg, Some(1)).unwrap();
        let rec = RunRecord::from_result(&res, 1, 1e-4, SystemTime::now());
        rec.verify(1e-12).unwrap();
        let back = RunRecord::from_json(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.method, Method::Trstmi);
        assert_eq!(back.best_frame().unwrap(), res.best_frame);

        let mut bad = rec.clone();
        bad.best_coherence += 1e-6;
        assert!(bad.verify(1e-12).is_err());
    }
}
