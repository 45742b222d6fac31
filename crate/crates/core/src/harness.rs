//! Repeated timing of queries through the gateway, and a least-squares fit of
//! time against tuples touched.

use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::ledger::{Ledger, PeerId};
use crate::sql::{parse, Query};
use crate::verifier::{Gateway, PhaseTimings};

pub const DEFAULT_RUNS: usize = 5;

fn secs<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub query_id: String,
    pub kind: String,
    pub tables: Vec<String>,
    pub tuples_checked: usize,
    pub tuples_mutated: usize,
    /// Mean wall time of `process` over all runs.
    #[serde(serialize_with = "secs")]
    pub mean: Duration,
    /// Mean phase breakdown over all runs.
    pub phases: PhaseTimings,
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn tuples(&self) -> usize {
        self.tuples_checked + self.tuples_mutated
    }

    pub fn per_tuple(&self) -> Option<Duration> {
        match self.tuples() {
            0 => None,
            n => Some(self.mean / n as u32),
        }
    }

    pub fn lookup_per_tuple(&self) -> Option<Duration> {
        match self.tuples_checked {
            0 => None,
            n => Some(self.phases.ledger_lookup / n as u32),
        }
    }

    /// Whether the record takes part in the fit.
    pub fn fittable(&self) -> bool {
        self.error.is_none() && self.tuples() > 0
    }
}

/// `time = slope * tuples + intercept`, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn least_squares(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared, points: points.len() })
}

pub fn fit(records: &[BenchRecord]) -> Option<LinearFit> {
    let pts: Vec<(f64, f64)> =
        records.iter().filter(|r| r.fittable()).map(|r| (r.tuples() as f64, r.mean.as_secs_f64())).collect();
    least_squares(&pts)
}

fn mean_phases(all: &[PhaseTimings]) -> PhaseTimings {
    let n = all.len().max(1) as u32;
    let sum = |f: fn(&PhaseTimings) -> Duration| all.iter().map(f).sum::<Duration>() / n;
    PhaseTimings {
        parse: sum(|p| p.parse),
        rewrite: sum(|p| p.rewrite),
        db_exec: sum(|p| p.db_exec),
        ledger_lookup: sum(|p| p.ledger_lookup),
        ledger_commit: sum(|p| p.ledger_commit),
    }
}

/// Runs each query `runs` times. Every run starts from the state left by the
/// previous query, so mutations are measured against the same data each time
/// and later queries still see their effects.
pub fn run<L: Ledger + Clone>(
    gateway: &mut Gateway<L>,
    queries: &[(String, String)],
    principal: &PeerId,
    runs: usize,
) -> Vec<BenchRecord> {
    let runs = runs.max(1);
    let mut out = Vec::with_capacity(queries.len());
    for (id, sql) in queries {
        let mut times = Vec::with_capacity(runs);
        let mut phases = Vec::with_capacity(runs);
        let mut last = None;
        let mut after = None;
        // reads leave no trace, so they run in place; a fresh copy per run
        // would also leave caches cold for small queries
        let read_only = matches!(parse(sql), Ok(Query::Select(_)));
        for _ in 0..runs {
            let mut g = if read_only { None } else { Some(gateway.clone()) };
            let target = g.as_mut().unwrap_or(&mut *gateway);
            let start = Instant::now();
            let res = target.process(sql, principal);
            times.push(start.elapsed());
            match res {
                Ok((_, report)) => {
                    phases.push(report.elapsed);
                    last = Some(Ok(report));
                }
                Err(e) => last = Some(Err(e.to_string())),
            }
            if g.is_some() {
                after = g;
            }
        }
        if let Some(g) = after {
            *gateway = g;
        }
        let mean = times.iter().sum::<Duration>() / runs as u32;
        let rec = match last.expect("at least one run") {
            Ok(r) => BenchRecord {
                query_id: id.clone(),
                kind: r.query_kind,
                tables: r.tables_touched,
                tuples_checked: r.tuples_checked,
                tuples_mutated: r.tuples_mutated,
                mean,
                phases: mean_phases(&phases),
                error: None,
            },
            Err(e) => BenchRecord {
                query_id: id.clone(),
                kind: String::new(),
                tables: Vec::new(),
                tuples_checked: 0,
                tuples_mutated: 0,
                mean,
                phases: PhaseTimings::default(),
                error: Some(e),
            },
        };
        out.push(rec);
    }
    out
}
