//! QUBO minimization: exhaustive search for tiny models and multi-restart
//! single-flip simulated annealing for everything else.
//!
//! Both solvers keep a per-variable local field
//! `h_v = linear_v + Σ_u Q_uv x_u`, so flipping `v` changes the energy by
//! `(1 − 2 x_v) h_v` and only the neighbours of `v` need updating.

use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::encoding::{bits_to_string, parse_bits, Bits};
use crate::error::{Error, Result};
use crate::qubo::{energy_unchecked, QuboModel};

/// Largest model [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub restarts: usize,
    pub sweeps_per_restart: usize,
    /// `None` selects [`auto_temperature`].
    pub initial_temperature: Option<f64>,
    /// `None` selects [`auto_temperature`].
    pub final_temperature: Option<f64>,
    pub seed: u64,
    /// Worker threads for restarts; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Wall-clock cap; restarts stop at the next sweep boundary once exceeded.
    pub time_limit: Option<Duration>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            restarts: 20,
            sweeps_per_restart: 2000,
            initial_temperature: None,
            final_temperature: None,
            seed: 0,
            threads: None,
            time_limit: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.sweeps_per_restart == 0 {
            return Err(Error::invalid("restarts and sweeps must be at least 1"));
        }
        for t in [self.initial_temperature, self.final_temperature]
            .into_iter()
            .flatten()
        {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid(format!("temperature {t} must be positive")));
            }
        }
        if let (Some(hi), Some(lo)) = (self.initial_temperature, self.final_temperature) {
            if lo >= hi {
                return Err(Error::invalid(format!(
                    "final temperature {lo} must be below initial temperature {hi}"
                )));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("thread count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_bits: Bits,
    pub best_energy: f64,
    pub per_restart_energies: Vec<f64>,
    pub elapsed: Duration,
}

#[derive(Serialize, Deserialize)]
struct SolveResultJson {
    energy: f64,
    bits: String,
    restart_energies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    elapsed_ms: Option<u64>,
}

impl SolveResult {
    /// `{"energy", "bits", "restart_energies", "elapsed_ms"}`; the timing
    /// field is left out when `with_timing` is false so that repeated runs
    /// produce identical files.
    pub fn to_json(&self, with_timing: bool) -> String {
        let doc = SolveResultJson {
            energy: self.best_energy,
            bits: bits_to_string(&self.best_bits).trim_end().to_string(),
            restart_energies: self.per_restart_energies.clone(),
            elapsed_ms: with_timing.then_some(self.elapsed.as_millis() as u64),
        };
        serde_json::to_string_pretty(&doc).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SolveResultJson = serde_json::from_str(text).map_err(|e| {
            Error::parse(
                "solve result json",
                format!("line {}, column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        Ok(SolveResult {
            best_bits: parse_bits(&doc.bits)?,
            best_energy: doc.energy,
            per_restart_energies: doc.restart_energies,
            elapsed: Duration::from_millis(doc.elapsed_ms.unwrap_or(0)),
        })
    }
}

/// Symmetric adjacency in compressed-row form plus dense linear terms.
pub(crate) struct Adjacency {
    linear: Vec<f64>,
    offsets: Vec<usize>,
    neighbours: Vec<(usize, f64)>,
}

impl Adjacency {
    pub(crate) fn new(model: &QuboModel) -> Self {
        let n = model.num_vars();
        let mut linear = vec![0.0; n];
        for &(v, c) in model.linear() {
            linear[v] = c;
        }
        let mut degree = vec![0usize; n];
        for &(i, j, _) in model.quadratic() {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbours = vec![(0, 0.0); offsets[n]];
        for &(i, j, c) in model.quadratic() {
            neighbours[fill[i]] = (j, c);
            fill[i] += 1;
            neighbours[fill[j]] = (i, c);
            fill[j] += 1;
        }
        Adjacency {
            linear,
            offsets,
            neighbours,
        }
    }

    fn of(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbours[self.offsets[v]..self.offsets[v + 1]]
    }

    fn fields(&self, bits: &[bool]) -> Vec<f64> {
        (0..self.linear.len())
            .map(|v| {
                self.linear[v]
                    + self
                        .of(v)
                        .iter()
                        .filter(|&&(u, _)| bits[u])
                        .map(|&(_, c)| c)
                        .sum::<f64>()
            })
            .collect()
    }

    #[inline]
    fn flip(&self, bits: &mut [bool], fields: &mut [f64], v: usize) {
        bits[v] = !bits[v];
        let sign = if bits[v] { 1.0 } else { -1.0 };
        for &(u, c) in self.of(v) {
            fields[u] += sign * c;
        }
    }
}

#[inline]
fn flip_delta(bit: bool, field: f64) -> f64 {
    if bit {
        -field
    } else {
        field
    }
}

/// Exact minimum by Gray-code enumeration of all `2^n` assignments.
///
/// Energies within a small tolerance of each other count as ties and go to
/// the lexicographically smallest bitstring (`false < true`, index 0 first).
pub fn brute_force(model: &QuboModel) -> Result<SolveResult> {
    let n = model.num_vars();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            num_vars: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let clock = Stopwatch::start();
    let adj = Adjacency::new(model);
    let tol = 1e-9 * (1.0 + model.coefficients().map(f64::abs).sum::<f64>());

    let mut bits = vec![false; n];
    let mut fields = adj.linear.clone();
    let mut e = model.offset();
    let mut best_bits = bits.clone();
    let mut best_e = e;
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        e += flip_delta(bits[v], fields[v]);
        adj.flip(&mut bits, &mut fields, v);
        if e < best_e - tol || (e <= best_e + tol && bits < best_bits) {
            best_e = e;
            best_bits.copy_from_slice(&bits);
        }
    }
    let best_energy = energy_unchecked(model, &best_bits);
    Ok(SolveResult {
        best_bits,
        best_energy,
        per_restart_energies: vec![best_energy],
        elapsed: clock.elapsed(),
    })
}

/// Starting and final annealing temperatures.
///
/// The start is the largest total absolute coefficient touching any one
/// variable (an upper bound on a single flip's cost); the end is `1e-3` of
/// the smallest non-zero coefficient magnitude.
pub fn auto_temperature(model: &QuboModel) -> Result<(f64, f64)> {
    if model.is_trivial() {
        return Err(Error::invalid(
            "cannot derive temperatures for a model without coefficients",
        ));
    }
    let mut incident = vec![0.0; model.num_vars()];
    for &(v, c) in model.linear() {
        incident[v] += c.abs();
    }
    for &(i, j, c) in model.quadratic() {
        incident[i] += c.abs();
        incident[j] += c.abs();
    }
    let initial = incident.into_iter().fold(0.0, f64::max);
    let smallest = model
        .coefficients()
        .map(f64::abs)
        .fold(f64::INFINITY, f64::min);
    Ok((initial, 1e-3 * smallest))
}

/// Per-restart seed; independent of the restart count so that adding
/// restarts never changes earlier ones.
pub fn restart_seed(seed: u64, restart: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed
        ^ (restart as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Multi-restart Metropolis annealing with single-bit flips.
///
/// Each restart starts from a random assignment; each sweep visits every
/// variable once in a freshly shuffled order, and the temperature decays
/// geometrically from the initial to the final value across the sweeps. The
/// best assignment ever visited is kept (the all-zero assignment is always a
/// candidate). Restarts are merged by `(energy, restart index)`.
pub fn anneal(model: &QuboModel, config: &SolveConfig) -> Result<SolveResult> {
    config.validate()?;
    let clock = Stopwatch::start();
    let n = model.num_vars();

    if model.is_trivial() {
        let e = model.offset();
        return Ok(SolveResult {
            best_bits: vec![false; n],
            best_energy: e,
            per_restart_energies: vec![e; config.restarts],
            elapsed: clock.elapsed(),
        });
    }

    let (auto_hi, auto_lo) = auto_temperature(model)?;
    let t_hi = config.initial_temperature.unwrap_or(auto_hi);
    let t_lo = config.final_temperature.unwrap_or(auto_lo.min(0.5 * t_hi));
    if t_lo >= t_hi {
        return Err(Error::invalid(format!(
            "final temperature {t_lo} must be below initial temperature {t_hi}"
        )));
    }
    let schedule = Schedule::new(t_hi, t_lo, config.sweeps_per_restart);
    let adj = Adjacency::new(model);

    let run = |r: usize| {
        let mut restart = Restart::new(model, &adj, restart_seed(config.seed, r));
        restart.run(&schedule, config.time_limit.map(|l| (clock, l)), |_, _| {});
        restart.finish()
    };
    let results = run_restarts(config, run)?;

    let mut best_idx = 0;
    for (r, res) in results.iter().enumerate() {
        if res.1 < results[best_idx].1 {
            best_idx = r;
        }
    }
    let per_restart_energies = results.iter().map(|r| r.1).collect();
    let (best_bits, best_energy) = results.into_iter().nth(best_idx).unwrap();
    Ok(SolveResult {
        best_bits,
        best_energy,
        per_restart_energies,
        elapsed: clock.elapsed(),
    })
}

#[cfg(feature = "parallel")]
fn run_restarts<F>(config: &SolveConfig, run: F) -> Result<Vec<(Bits, f64)>>
where
    F: Fn(usize) -> (Bits, f64) + Sync,
{
    use rayon::prelude::*;
    let go = || (0..config.restarts).into_par_iter().map(&run).collect();
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))
            .map(|pool| pool.install(go)),
        None => Ok(go()),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_restarts<F>(config: &SolveConfig, run: F) -> Result<Vec<(Bits, f64)>>
where
    F: Fn(usize) -> (Bits, f64),
{
    Ok((0..config.restarts).map(run).collect())
}

pub(crate) struct Schedule {
    hi: f64,
    ratio: f64,
    sweeps: usize,
}

impl Schedule {
    pub(crate) fn new(hi: f64, lo: f64, sweeps: usize) -> Self {
        let ratio = if sweeps > 1 {
            (lo / hi).powf(1.0 / (sweeps - 1) as f64)
        } else {
            lo / hi
        };
        Schedule { hi, ratio, sweeps }
    }

    pub(crate) fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            self.hi * self.ratio
        } else {
            self.hi * self.ratio.powi(sweep as i32)
        }
    }
}

/// State of one annealing run.
///
/// The best assignment is recovered lazily: accepted flips are logged since
/// the last snapshot, and the prefix up to the best point is replayed only
/// when the log is flushed.
pub(crate) struct Restart<'a> {
    model: &'a QuboModel,
    adj: &'a Adjacency,
    rng: ChaCha8Rng,
    bits: Vec<bool>,
    fields: Vec<f64>,
    energy: f64,
    anchor: Vec<bool>,
    log: Vec<usize>,
    best_mark: Option<usize>,
    best_bits: Vec<bool>,
    best_energy: f64,
}

impl<'a> Restart<'a> {
    pub(crate) fn new(model: &'a QuboModel, adj: &'a Adjacency, seed: u64) -> Self {
        let n = model.num_vars();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let fields = adj.fields(&bits);
        let energy = energy_unchecked(model, &bits);
        let zero_energy = model.offset();
        let (best_bits, best_energy) = if energy < zero_energy {
            (bits.clone(), energy)
        } else {
            (vec![false; n], zero_energy)
        };
        Restart {
            model,
            adj,
            rng,
            anchor: bits.clone(),
            bits,
            fields,
            energy,
            log: Vec::new(),
            best_mark: None,
            best_bits,
            best_energy,
        }
    }

    /// Anneal through the schedule; `on_flip` sees the state and running
    /// energy after every accepted flip.
    pub(crate) fn run(
        &mut self,
        schedule: &Schedule,
        deadline: Option<(Stopwatch, Duration)>,
        mut on_flip: impl FnMut(&[bool], f64),
    ) {
        let n = self.bits.len();
        let flush_at = n.max(64);
        let mut order: Vec<usize> = (0..n).collect();
        for sweep in 0..schedule.sweeps {
            if let Some((clock, limit)) = deadline {
                if clock.elapsed() >= limit {
                    break;
                }
            }
            let t = schedule.temperature(sweep);
            order.shuffle(&mut self.rng);
            for &v in &order {
                let delta = flip_delta(self.bits[v], self.fields[v]);
                if delta > 0.0 && self.rng.random::<f64>() >= (-delta / t).exp() {
                    continue;
                }
                self.adj.flip(&mut self.bits, &mut self.fields, v);
                self.energy += delta;
                self.log.push(v);
                if self.energy < self.best_energy {
                    self.best_energy = self.energy;
                    self.best_mark = Some(self.log.len());
                }
                on_flip(&self.bits, self.energy);
                if self.log.len() >= flush_at {
                    self.flush();
                }
            }
        }
        self.flush();
    }

    fn flush(&mut self) {
        if let Some(mark) = self.best_mark.take() {
            self.best_bits.copy_from_slice(&self.anchor);
            for &v in &self.log[..mark] {
                self.best_bits[v] = !self.best_bits[v];
            }
        }
        self.anchor.copy_from_slice(&self.bits);
        self.log.clear();
    }

    pub(crate) fn finish(self) -> (Bits, f64) {
        let e = energy_unchecked(self.model, &self.best_bits);
        (self.best_bits, e)
    }
}
