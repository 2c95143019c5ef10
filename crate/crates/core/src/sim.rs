//! Monte Carlo sampling of walk trajectories.
//!
//! Replica `r` of a run with master seed `s` draws from ChaCha8 keyed by
//! `s` (expanded with `seed_from_u64`) on stream `r`, so every replica has
//! its own substream and the output does not depend on thread scheduling.
//! Each move consumes one uniform `u` in `[0, 1)`; the symbol is the first
//! index `j` in `0..=6` with `u < F(j)`, where `F` is the cumulative row
//! converted once from exact rationals to the nearest `f64`. Symbols with
//! zero probability are therefore never drawn.
//!
//! Replicas are processed in [`CHUNKS`] fixed, contiguous chunks whose partial
//! results are combined in chunk order.

use std::io::Write;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::event::{EventArena, EventSet};
use crate::rational::{rational_from_int, to_f64, Rational};
use crate::symbol::{Symbol, SYMBOL_COUNT};
use crate::table::{Row, StepProbabilityTable};
use crate::walk::{direction, walk_trace, LatticeConfig, Vec3};

/// Number of fixed replica chunks used for parallel reduction.
pub const CHUNKS: usize = 64;

/// Deterministic substream for one replica.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// Cumulative thresholds for inverse-CDF sampling of each row.
#[derive(Debug, Clone)]
pub struct Sampler {
    thresholds: Vec<[f64; SYMBOL_COUNT]>,
}

impl Sampler {
    pub fn new(table: &StepProbabilityTable) -> Self {
        Sampler { thresholds: table.rows().iter().map(cumulative).collect() }
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    fn draw<R: Rng>(&self, n: usize, rng: &mut R) -> Symbol {
        let u: f64 = rng.random();
        let row = &self.thresholds[n];
        let j = row.iter().position(|&f| u < f).unwrap_or(SYMBOL_COUNT - 1);
        Symbol::new(j as u64).expect("index below 7")
    }

    fn word<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<Symbol> {
        (0..len).map(|n| self.draw(n, rng)).collect()
    }
}

fn cumulative(row: &Row) -> [f64; SYMBOL_COUNT] {
    let mut acc = Rational::zero();
    std::array::from_fn(|j| {
        acc += &row[j];
        to_f64(&acc)
    })
}

fn step_offset(symbol: Symbol) -> [i64; 3] {
    let mut d = [0i64; 3];
    if let Some((axis, sign)) = direction(symbol) {
        d[axis] = sign;
    }
    d
}

/// One sampled word `ω_0..ω_{N-1}` with lattice positions `R_0..R_N`.
///
/// Positions are stored as integer multiples of the pitch `ε`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectorySample {
    pub word: Vec<Symbol>,
    pub lattice: Vec<[i64; 3]>,
}

impl TrajectorySample {
    fn from_word(word: Vec<Symbol>) -> Self {
        let mut lattice = Vec::with_capacity(word.len() + 1);
        let mut at = [0i64; 3];
        lattice.push(at);
        for &s in &word {
            let d = step_offset(s);
            for i in 0..3 {
                at[i] += d[i];
            }
            lattice.push(at);
        }
        TrajectorySample { word, lattice }
    }

    /// Exact positions `R_0..R_N`.
    pub fn positions(&self, cfg: &LatticeConfig) -> Vec<Vec3> {
        self.lattice
            .iter()
            .map(|p| Vec3(std::array::from_fn(|i| cfg.eps() * rational_from_int(p[i]))))
            .collect()
    }
}

fn check_steps(steps: usize, table: &StepProbabilityTable) -> Result<()> {
    if steps > table.len() {
        Err(Error::DepthExceedsTable { depth: steps - 1, rows: table.len() })
    } else {
        Ok(())
    }
}

pub fn sample_trajectory<R: Rng>(
    table: &StepProbabilityTable,
    steps: usize,
    rng: &mut R,
) -> Result<TrajectorySample> {
    check_steps(steps, table)?;
    let sampler = Sampler::new(table);
    Ok(TrajectorySample::from_word(sampler.word(steps, rng)))
}

/// Trajectories for replicas `0..count` under `seed`.
pub fn sample_replicas(
    table: &StepProbabilityTable,
    steps: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<TrajectorySample>> {
    check_steps(steps, table)?;
    let sampler = Sampler::new(table);
    Ok((0..count as u64)
        .into_par_iter()
        .map(|r| TrajectorySample::from_word(sampler.word(steps, &mut replica_rng(seed, r))))
        .collect())
}

fn chunk_bounds(replicas: usize) -> Vec<(u64, u64)> {
    (0..CHUNKS)
        .map(|k| ((k * replicas / CHUNKS) as u64, ((k + 1) * replicas / CHUNKS) as u64))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Ensemble estimates of `E(R_n)` and `Tr(R_n)` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub replicas: usize,
    pub seed: u64,
    pub mean_position: Vec<[f64; 3]>,
    pub mean_se: Vec<[f64; 3]>,
    /// Sum of the three unbiased coordinate sample variances.
    pub empirical_trace: Vec<f64>,
    pub trace_se: Vec<f64>,
}

#[derive(Clone)]
struct Sums {
    first: Vec<[i128; 3]>,
    second: Vec<[i128; 3]>,
}

pub fn estimate_moments(
    table: &StepProbabilityTable,
    cfg: &LatticeConfig,
    steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<EnsembleStats> {
    if replicas < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 replicas, got {replicas}")));
    }
    check_steps(steps, table)?;
    let sampler = Sampler::new(table);
    let points = steps + 1;
    let chunks = chunk_bounds(replicas);

    // Pass 1: exact integer first and second moments of lattice coordinates.
    let partial: Vec<Sums> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut s = Sums { first: vec![[0; 3]; points], second: vec![[0; 3]; points] };
            for r in lo..hi {
                let t = TrajectorySample::from_word(sampler.word(steps, &mut replica_rng(seed, r)));
                for (n, p) in t.lattice.iter().enumerate() {
                    for i in 0..3 {
                        let x = p[i] as i128;
                        s.first[n][i] += x;
                        s.second[n][i] += x * x;
                    }
                }
            }
            s
        })
        .collect();
    let mut total = Sums { first: vec![[0; 3]; points], second: vec![[0; 3]; points] };
    for s in &partial {
        for n in 0..points {
            for i in 0..3 {
                total.first[n][i] += s.first[n][i];
                total.second[n][i] += s.second[n][i];
            }
        }
    }

    let m = replicas as i128;
    let mf = replicas as f64;
    let eps = to_f64(cfg.eps());
    let eps2 = eps * eps;
    let lattice_mean: Vec<[f64; 3]> = total
        .first
        .iter()
        .map(|f| std::array::from_fn(|i| f[i] as f64 / mf))
        .collect();
    let mut mean_position = Vec::with_capacity(points);
    let mut mean_se = Vec::with_capacity(points);
    let mut empirical_trace = Vec::with_capacity(points);
    for n in 0..points {
        let var: [f64; 3] = std::array::from_fn(|i| {
            let s = total.first[n][i];
            let numer = m * total.second[n][i] - s * s;
            numer as f64 / (mf * (mf - 1.0))
        });
        mean_position.push(std::array::from_fn(|i| lattice_mean[n][i] * eps));
        mean_se.push(std::array::from_fn(|i| (var[i] / mf).sqrt() * eps));
        empirical_trace.push(var.iter().sum::<f64>() * eps2);
    }

    // Pass 2: spread of squared distances to the sample mean, for the
    // standard error of the trace. Trajectories are regenerated from the
    // same substreams.
    let partial: Vec<(Vec<f64>, Vec<f64>)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sum = vec![0.0; points];
            let mut sum_sq = vec![0.0; points];
            for r in lo..hi {
                let t = TrajectorySample::from_word(sampler.word(steps, &mut replica_rng(seed, r)));
                for (n, p) in t.lattice.iter().enumerate() {
                    let y: f64 = (0..3)
                        .map(|i| {
                            let d = p[i] as f64 - lattice_mean[n][i];
                            d * d
                        })
                        .sum();
                    sum[n] += y;
                    sum_sq[n] += y * y;
                }
            }
            (sum, sum_sq)
        })
        .collect();
    let mut sum = vec![0.0; points];
    let mut sum_sq = vec![0.0; points];
    for (s, q) in &partial {
        for n in 0..points {
            sum[n] += s[n];
            sum_sq[n] += q[n];
        }
    }
    let trace_se = (0..points)
        .map(|n| {
            let var_y = ((sum_sq[n] - sum[n] * sum[n] / mf) / (mf - 1.0)).max(0.0);
            (var_y / mf).sqrt() * eps2
        })
        .collect();

    Ok(EnsembleStats {
        replicas,
        seed,
        mean_position,
        mean_se,
        empirical_trace,
        trace_se,
    })
}

/// Empirical probability of an event with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventEstimate {
    pub probability: f64,
    pub standard_error: f64,
    pub replicas: usize,
}

pub fn estimate_event_probability(
    arena: &EventArena,
    event: EventSet,
    table: &StepProbabilityTable,
    replicas: usize,
    seed: u64,
) -> Result<EventEstimate> {
    if replicas == 0 {
        return Err(Error::InvalidConfig("need at least 1 replica".into()));
    }
    let depth = arena.constrained_depth(event)?;
    let steps = match depth {
        Some(d) if d >= table.len() => {
            return Err(Error::DepthExceedsTable { depth: d, rows: table.len() })
        }
        Some(d) => d + 1,
        None => 0,
    };
    let sampler = Sampler::new(table);
    let hits: u64 = chunk_bounds(replicas)
        .par_iter()
        .map(|&(lo, hi)| {
            let mut hits = 0u64;
            for r in lo..hi {
                let word = sampler.word(steps, &mut replica_rng(seed, r));
                let inside = arena
                    .contains(event, &word)
                    .expect("arena checked above")
                    .expect("word covers every constrained coordinate");
                hits += inside as u64;
            }
            hits
        })
        .sum();
    let mf = replicas as f64;
    let p = hits as f64 / mf;
    let standard_error = if replicas > 1 { (p * (1.0 - p) / (mf - 1.0)).sqrt() } else { 0.0 };
    Ok(EventEstimate { probability: p, standard_error, replicas })
}

/// Constant-row tables used by the convergence study.
#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum TableFamily {
    Uniform,
    ConstantRow(Row),
}

impl TableFamily {
    pub fn table(&self, rows: usize) -> Result<StepProbabilityTable> {
        match self {
            TableFamily::Uniform => StepProbabilityTable::uniform(rows),
            TableFamily::ConstantRow(row) => StepProbabilityTable::constant(row.clone(), rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub tau: Rational,
    pub exact_trace: Rational,
    pub bound: Rational,
    pub empirical_trace: f64,
    pub se: f64,
}

/// For each `N`, sets `τ = C / N` (so `ε = cC / N`) and compares the exact
/// trace `Tr(R_N)`, the bound `(cC)² / N` and a Monte Carlo estimate.
pub fn convergence_study(
    c: &Rational,
    total_time: &Rational,
    n_list: &[usize],
    family: &TableFamily,
    replicas: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidConfig("N must be positive".into()));
        }
        let nn = rational_from_int(n as i64);
        let tau = total_time / &nn;
        let cfg = LatticeConfig::new(tau.clone(), c.clone(), n)?;
        let table = family.table(n)?;
        let exact_trace = walk_trace(n, &table, &cfg)?;
        let cc = c * total_time;
        let bound = &cc * &cc / &nn;
        let stats = estimate_moments(&table, &cfg, n, replicas, seed)?;
        out.push(ConvergenceRow {
            n,
            tau,
            exact_trace,
            bound,
            empirical_trace: stats.empirical_trace[n],
            se: stats.trace_se[n],
        });
    }
    Ok(out)
}

/// Float rendering with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidConfig(format!("csv write failed: {e}"))
}

/// `replica,n,omega,x,y,z`; row `n` holds `ω_n` (empty at `n = N`) and `R_n`.
pub fn write_trajectory_csv<W: Write>(
    samples: &[TrajectorySample],
    cfg: &LatticeConfig,
    out: W,
) -> Result<()> {
    let eps = to_f64(cfg.eps());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replica", "n", "omega", "x", "y", "z"]).map_err(csv_err)?;
    for (r, s) in samples.iter().enumerate() {
        for (n, p) in s.lattice.iter().enumerate() {
            let omega = s.word.get(n).map(|o| o.to_string()).unwrap_or_default();
            w.write_record([
                r.to_string(),
                n.to_string(),
                omega,
                format_float(p[0] as f64 * eps),
                format_float(p[1] as f64 * eps),
                format_float(p[2] as f64 * eps),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)
}

/// `n,mean_x,mean_y,mean_z,se_x,se_y,se_z,trace,se_trace`.
pub fn write_ensemble_csv<W: Write>(stats: &EnsembleStats, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n", "mean_x", "mean_y", "mean_z", "se_x", "se_y", "se_z", "trace", "se_trace",
    ])
    .map_err(csv_err)?;
    for n in 0..stats.mean_position.len() {
        let mut record = vec![n.to_string()];
        record.extend(stats.mean_position[n].iter().map(|&x| format_float(x)));
        record.extend(stats.mean_se[n].iter().map(|&x| format_float(x)));
        record.push(format_float(stats.empirical_trace[n]));
        record.push(format_float(stats.trace_se[n]));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// `N,tau,exact_trace,bound,empirical_trace,se`.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "tau", "exact_trace", "bound", "empirical_trace", "se"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format_float(to_f64(&r.tau)),
            format_float(to_f64(&r.exact_trace)),
            format_float(to_f64(&r.bound)),
            format_float(r.empirical_trace),
            format_float(r.se),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
