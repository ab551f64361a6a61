//! M/D/1 latency model, a single-server queue simulator and latency
//! statistics.
//!
//! With Poisson arrivals at rate `λ` and a deterministic service time
//! `D = 1/μ`, the mean time in system is `1/μ + λ / (2μ(μ − λ))`: compute
//! latency plus queue latency. The queue term grows without bound as `λ → μ`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QueueError {
    #[error("unstable queue: arrival rate {lambda} >= service rate {mu}")]
    Unstable { lambda: f64, mu: f64 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("no latency samples")]
    NoSamples,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Md1Params {
    /// Arrival rate, requests per second.
    pub lambda: f64,
    /// Service rate, requests per second; the inverse of compute latency.
    pub mu: f64,
}

impl Md1Params {
    pub fn from_service_time(lambda: f64, service_time: f64) -> Self {
        Md1Params {
            lambda,
            mu: 1.0 / service_time,
        }
    }

    pub fn utilization(&self) -> f64 {
        self.lambda / self.mu
    }

    pub fn is_stable(&self) -> bool {
        self.lambda < self.mu
    }
}

/// Closed-form latency decomposition, in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Md1Latency {
    pub compute: f64,
    pub queue: f64,
    pub total: f64,
}

pub fn md1_latency(p: Md1Params) -> Result<Md1Latency, QueueError> {
    if !(p.mu > 0.0) || !p.mu.is_finite() {
        return Err(QueueError::Invalid(format!(
            "service rate must be positive, got {}",
            p.mu
        )));
    }
    if !(p.lambda >= 0.0) {
        return Err(QueueError::Invalid(format!(
            "arrival rate must be >= 0, got {}",
            p.lambda
        )));
    }
    if !p.is_stable() {
        return Err(QueueError::Unstable {
            lambda: p.lambda,
            mu: p.mu,
        });
    }
    let compute = 1.0 / p.mu;
    let queue = p.lambda / (2.0 * p.mu * (p.mu - p.lambda));
    Ok(Md1Latency {
        compute,
        queue,
        total: compute + queue,
    })
}

/// Latency report in milliseconds. Serializes to the JSON report schema.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub avg_compute_ms: f64,
    pub avg_queue_ms: f64,
    pub avg_total_ms: f64,
    pub p99_total_ms: f64,
    pub rtfx: f64,
}

/// One serviced request: `(compute_ms, queue_ms)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencySample {
    pub compute_ms: f64,
    pub queue_ms: f64,
}

impl LatencySample {
    pub fn new(compute_ms: f64, queue_ms: f64) -> Self {
        LatencySample {
            compute_ms,
            queue_ms,
        }
    }

    pub fn total_ms(&self) -> f64 {
        self.compute_ms + self.queue_ms
    }
}

/// Means per component and the P99 total latency, taken as the order
/// statistic at index `ceil(0.99 n) - 1` of the sorted totals. `rtfx` is left at
/// 0 for the caller to fill in.
pub fn compute_stats(samples: &[LatencySample]) -> Result<LatencyStats, QueueError> {
    if samples.is_empty() {
        return Err(QueueError::NoSamples);
    }
    let n = samples.len() as f64;
    let avg_compute_ms = samples.iter().map(|s| s.compute_ms).sum::<f64>() / n;
    let avg_queue_ms = samples.iter().map(|s| s.queue_ms).sum::<f64>() / n;
    let mut totals: Vec<f64> = samples.iter().map(LatencySample::total_ms).collect();
    totals.sort_by(f64::total_cmp);
    let idx = ((0.99 * n).ceil() as usize).clamp(1, totals.len()) - 1;
    Ok(LatencyStats {
        avg_compute_ms,
        avg_queue_ms,
        // Equals the mean of per-sample totals up to rounding.
        avg_total_ms: avg_compute_ms + avg_queue_ms,
        p99_total_ms: totals[idx],
        rtfx: 0.0,
    })
}

/// Audio duration processed per unit of wall-clock time.
pub fn rtfx(audio_seconds: f64, wall_seconds: f64) -> Result<f64, QueueError> {
    if !(wall_seconds > 0.0) {
        return Err(QueueError::Invalid(format!(
            "wall time must be positive, got {wall_seconds}"
        )));
    }
    Ok(audio_seconds / wall_seconds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub stats: LatencyStats,
    /// Set when `λ ≥ μ`: the queue has no steady state.
    pub unstable: bool,
    /// Mean queue wait (ms) over consecutive tenths of the run.
    pub queue_trend_ms: Vec<f64>,
}

pub const TREND_WINDOWS: usize = 10;

/// Simulates `n_arrivals` requests through a single FIFO server with
/// deterministic service time (seconds) and Poisson arrivals at `lambda` per
/// second. Inter-arrival gaps come from a ChaCha8 generator seeded with `seed`.
///
/// `stats.rtfx` is the arrival span divided by the time until the last
/// request completes: ≈ 1 while the server keeps up with real time, < 1 when
/// it falls behind.
pub fn simulate_md1(
    lambda: f64,
    service_time: f64,
    n_arrivals: usize,
    seed: u64,
) -> Result<SimReport, QueueError> {
    if n_arrivals == 0 {
        return Err(QueueError::Invalid("n_arrivals must be at least 1".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(QueueError::Invalid(format!(
            "arrival rate must be positive, got {lambda}"
        )));
    }
    if !(service_time >= 0.0) || !service_time.is_finite() {
        return Err(QueueError::Invalid(format!(
            "service time must be >= 0, got {service_time}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = Exp::new(lambda).map_err(|e| QueueError::Invalid(e.to_string()))?;

    let mut samples = Vec::with_capacity(n_arrivals);
    let mut arrival = 0.0f64;
    let mut server_free = 0.0f64;
    let mut first_arrival = None;
    for _ in 0..n_arrivals {
        arrival += gaps.sample(&mut rng);
        first_arrival.get_or_insert(arrival);
        let start = server_free.max(arrival);
        server_free = start + service_time;
        samples.push(LatencySample::new(
            service_time * 1e3,
            (start - arrival) * 1e3,
        ));
    }

    let mut stats = compute_stats(&samples)?;
    let span = arrival - first_arrival.unwrap_or(0.0);
    let makespan = server_free - first_arrival.unwrap_or(0.0);
    stats.rtfx = if makespan > 0.0 { span / makespan } else { 0.0 };

    let window = n_arrivals.div_ceil(TREND_WINDOWS);
    let queue_trend_ms = samples
        .chunks(window)
        .map(|c| c.iter().map(|s| s.queue_ms).sum::<f64>() / c.len() as f64)
        .collect();

    Ok(SimReport {
        stats,
        unstable: lambda * service_time >= 1.0,
        queue_trend_ms,
    })
}
