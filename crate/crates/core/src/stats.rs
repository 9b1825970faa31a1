//! Monte Carlo campaigns: sample, decode and count logical errors per task.

use crate::circuit::{Basis, CircuitError};
use crate::codegen::{generate_memory_circuit, CodegenError, Construction};
use crate::decoder::{DecodeError, Decoder};
use crate::dem::{extract_error_model, DemError};
use crate::noise::{noisify, NoiseError};
use crate::sampler::{DetectionData, FrameSampler, BATCH_SHOTS};
use rayon::prelude::*;
use std::fmt;
use std::io::{Read, Write};
use std::time::Instant;

pub const CSV_HEADER: [&str; 9] = ["construction", "basis", "d", "rounds", "p", "q", "shots", "errors", "seconds"];

/// One memory experiment configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Task {
    pub construction: Construction,
    pub basis: Basis,
    pub d: usize,
    pub rounds: usize,
    pub p: f64,
}

impl Task {
    /// Memory experiment with `rounds = d`.
    pub fn square(construction: Construction, basis: Basis, d: usize, p: f64) -> Task {
        Task {
            construction,
            basis,
            d,
            rounds: d,
            p,
        }
    }

    fn key(&self) -> (Construction, Basis, usize, usize, u64) {
        (self.construction, self.basis, self.d, self.rounds, self.p.to_bits())
    }

    /// Seed for this task's random streams, derived from the campaign seed.
    pub fn seed(&self, campaign_seed: u64) -> u64 {
        let mut h = splitmix(campaign_seed);
        for x in [
            self.construction as u64,
            self.basis as u64,
            self.d as u64,
            self.rounds as u64,
            self.p.to_bits(),
        ] {
            h = splitmix(h ^ x);
        }
        h
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} d={} rounds={} p={}", self.construction, self.basis, self.d, self.rounds, self.p)
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsRow {
    pub task: Task,
    /// Physical qubit count of the layout.
    pub q: usize,
    pub shots: u64,
    pub errors: u64,
    pub seconds: f64,
}

impl StatsRow {
    pub fn rate(&self) -> f64 {
        if self.shots == 0 {
            0.0
        } else {
            self.errors as f64 / self.shots as f64
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Dem(#[from] DemError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Field { row: usize, message: String },
}

/// Stopping limits and parallelism for a campaign. Limits apply to the
/// shots and errors added by this call, so resuming a task always adds work.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_shots: u64,
    pub max_errors: u64,
    pub workers: usize,
}

/// Sampling and decoding machinery for one task.
pub struct Experiment {
    pub task: Task,
    pub qubits: usize,
    sampler: FrameSampler,
    decoder: Decoder,
}

impl Experiment {
    pub fn new(task: Task) -> Result<Experiment, TaskError> {
        let m = generate_memory_circuit(task.d, task.rounds, task.basis, task.construction)?;
        let noisy = noisify(&m.circuit, task.p)?;
        let dem = extract_error_model(&noisy)?;
        Ok(Experiment {
            task,
            qubits: m.layout.num_qubits(),
            sampler: FrameSampler::new(&noisy)?,
            decoder: Decoder::from_dem(&dem)?,
        })
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    /// Logical errors among the shots of `data`.
    pub fn count_errors(&self, data: &DetectionData) -> u64 {
        (0..data.shots)
            .into_par_iter()
            .filter(|&s| self.decoder.decode(&data.fired(s)) != data.observable_mask(s))
            .count() as u64
    }

    /// Samples in batches of at most `BATCH_SHOTS` until either limit is
    /// reached, adding to `row`. Batch streams are numbered by the shot count
    /// preceding them, so resumed runs never reuse a stream.
    pub fn run(&self, row: &mut StatsRow, limits: &Limits, seed: u64) {
        let start = Instant::now();
        let seed = self.task.seed(seed);
        let (mut shots, mut errors) = (0u64, 0u64);
        while shots < limits.max_shots && errors < limits.max_errors {
            let n = (limits.max_shots - shots).min(BATCH_SHOTS as u64);
            let data = self.sampler.sample_batch(n as usize, seed, row.shots + shots);
            errors += self.count_errors(&data);
            shots += n;
        }
        row.shots += shots;
        row.errors += errors;
        row.seconds += start.elapsed().as_secs_f64();
    }
}

/// Runs every task, merging into matching rows of `table` or appending new
/// rows. A task that fails is reported and the others continue.
pub fn collect(
    table: &mut Vec<StatsRow>,
    tasks: &[Task],
    limits: &Limits,
    seed: u64,
) -> Vec<(Task, TaskError)> {
    let run = |task: &Task| -> Result<StatsRow, TaskError> {
        let exp = Experiment::new(*task)?;
        let mut row = table
            .iter()
            .find(|r| r.task.key() == task.key())
            .cloned()
            .unwrap_or(StatsRow {
                task: *task,
                q: exp.qubits,
                shots: 0,
                errors: 0,
                seconds: 0.0,
            });
        exp.run(&mut row, limits, seed);
        log::info!("{task}: {} errors in {} shots", row.errors, row.shots);
        Ok(row)
    };
    let results: Vec<Result<StatsRow, TaskError>> = match rayon::ThreadPoolBuilder::new()
        .num_threads(limits.workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| tasks.par_iter().map(run).collect()),
        Err(_) => tasks.iter().map(run).collect(),
    };
    let mut failures = Vec::new();
    for (task, r) in tasks.iter().zip(results) {
        match r {
            Ok(row) => match table.iter_mut().find(|x| x.task.key() == task.key()) {
                Some(slot) => *slot = row,
                None => table.push(row),
            },
            Err(e) => failures.push((*task, e)),
        }
    }
    failures
}

pub fn write_table<W: Write>(rows: &[StatsRow], w: W) -> Result<(), TableError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        let t = &r.task;
        out.write_record([
            t.construction.to_string(),
            t.basis.to_string(),
            t.d.to_string(),
            t.rounds.to_string(),
            t.p.to_string(),
            r.q.to_string(),
            r.shots.to_string(),
            r.errors.to_string(),
            format!("{:.3}", r.seconds),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_table<R: Read>(r: R) -> Result<Vec<StatsRow>, TableError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(TableError::Field {
            row: 0,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = |k: usize| rec.get(k).unwrap_or("");
        fn parse<T: std::str::FromStr>(s: &str, name: &str, row: usize) -> Result<T, TableError> {
            s.trim().parse().map_err(|_| TableError::Field {
                row,
                message: format!("bad {name} '{s}'"),
            })
        }
        let r = StatsRow {
            task: Task {
                construction: parse(field(0), "construction", row)?,
                basis: parse(field(1), "basis", row)?,
                d: parse(field(2), "d", row)?,
                rounds: parse(field(3), "rounds", row)?,
                p: parse(field(4), "p", row)?,
            },
            q: parse(field(5), "q", row)?,
            shots: parse(field(6), "shots", row)?,
            errors: parse(field(7), "errors", row)?,
            seconds: parse(field(8), "seconds", row)?,
        };
        if r.errors > r.shots {
            return Err(TableError::Field {
                row,
                message: "errors exceed shots".into(),
            });
        }
        rows.push(r);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(shots: u64, errors: u64) -> Limits {
        Limits {
            max_shots: shots,
            max_errors: errors,
            workers: 1,
        }
    }

    #[test]
    fn noiseless_task_has_no_errors() {
        let mut table = Vec::new();
        let t = Task::square(Construction::Pentagon, Basis::Z, 3, 0.0);
        let fails = collect(&mut table, &[t], &limits(5000, 10), 1);
        assert!(fails.is_empty());
        assert_eq!((table[0].shots, table[0].errors), (5000, 0));
        assert_eq!(table[0].q, 17);
    }

    #[test]
    fn above_threshold_rate_in_band() {
        let mut table = Vec::new();
        let t = Task::square(Construction::Pentagon, Basis::X, 3, 0.01);
        collect(&mut table, &[t], &limits(20_000, 100_000), 5);
        let r = table[0].rate();
        assert!(r > 0.05 && r < 0.5, "rate {r}");
    }

    #[test]
    fn error_limit_stops_early() {
        let mut table = Vec::new();
        let t = Task::square(Construction::Pentagon, Basis::Z, 3, 0.02);
        collect(&mut table, &[t], &limits(10_000_000, 50), 2);
        assert!(table[0].errors >= 50);
        assert!(table[0].shots <= BATCH_SHOTS as u64);
    }

    #[test]
    fn rows_reproducible_and_resumable() {
        let t = Task::square(Construction::Pentagon, Basis::Z, 3, 0.005);
        let lim = limits(3000, 1_000_000);
        let mut a = Vec::new();
        let mut b = Vec::new();
        collect(&mut a, &[t], &lim, 9);
        collect(&mut b, &[t], &lim, 9);
        assert_eq!((a[0].shots, a[0].errors), (b[0].shots, b[0].errors));
        let first = a[0].clone();
        collect(&mut a, &[t], &lim, 9);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].shots, 2 * first.shots);
        assert!(a[0].errors >= first.errors);
    }

    #[test]
    fn failing_task_does_not_abort_others() {
        let mut table = Vec::new();
        let bad = Task::square(Construction::Pentagon, Basis::Y, 3, 0.001);
        let good = Task::square(Construction::Pentagon, Basis::Z, 3, 0.001);
        let fails = collect(&mut table, &[bad, good], &limits(100, 10), 1);
        assert_eq!(fails.len(), 1);
        assert_eq!(fails[0].0, bad);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![StatsRow {
            task: Task::square(Construction::Pentagon, Basis::X, 5, 0.002),
            q: 57,
            shots: 1000,
            errors: 3,
            seconds: 1.25,
        }];
        let mut buf = Vec::new();
        write_table(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("construction,basis,d,rounds,p,q,shots,errors,seconds\n"));
        assert_eq!(read_table(&buf[..]).unwrap(), rows);
        assert!(read_table("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn task_seeds_differ() {
        let a = Task::square(Construction::Pentagon, Basis::X, 5, 0.002);
        let b = Task::square(Construction::Pentagon, Basis::Z, 5, 0.002);
        assert_ne!(a.seed(1), b.seed(1));
        assert_ne!(a.seed(1), a.seed(2));
        assert_eq!(a.seed(1), a.seed(1));
    }
}
