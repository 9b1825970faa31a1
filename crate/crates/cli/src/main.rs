mod config;

use anyhow::{anyhow, bail, Context, Result};
use cairo_qec::circuit::{parse_text, serialize_text, Basis, Circuit};
use cairo_qec::codegen::{generate_memory_circuit, Construction};
use cairo_qec::decoder::{estimate_circuit_distance, Decoder};
use cairo_qec::dem::{extract_error_model, DetectorErrorModel};
use cairo_qec::fit::{fit, teraquop_intercept, FitPoint, Grid, REGION_RATIO, TERAQUOP_RATE};
use cairo_qec::noise::noisify;
use cairo_qec::sampler::{DetectionData, FrameSampler};
use cairo_qec::stats::{collect, read_table, write_table, Limits, StatsRow};
use cairo_qec::tableau::verify_parity_gadget;
use clap::{Parser, Subcommand};
use config::{check_width, CampaignConfig};
use serde_json::{json, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const BUILD: &str = concat!("cairo-qec ", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "cairo-qec", version = env!("CARGO_PKG_VERSION"), about = "Pentagonal pair-measurement surface code toolkit")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

fn width(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|_| format!("'{s}' is not an integer"))?;
    check_width(d)
}

fn physical_rate(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("probability must be in [0, 1], got {p}"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emit a noiseless memory experiment circuit.
    Gen {
        #[arg(long, value_parser = width)]
        d: usize,
        /// Defaults to the width.
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value = "Z")]
        basis: Basis,
        #[arg(long, default_value = "pentagon")]
        construction: Construction,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add single-parameter noise to a circuit.
    Noisify {
        #[arg(long, value_parser = physical_rate)]
        p: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample detection events into a binary dump.
    Sample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        shots: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the detector error model of a noisy circuit.
    Dem {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict observable flips for sampled detection events.
    Decode {
        #[arg(long)]
        dem: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the circuit distance of a detector error model.
    Distance {
        #[arg(long)]
        dem: PathBuf,
    },
    /// Run a sampling campaign, appending to an existing table.
    Collect {
        /// Campaign config file.
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_shots: Option<u64>,
        #[arg(long)]
        max_errors: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit error-rate lines per group of a statistics table.
    Fit {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long, default_value = "construction,basis,p")]
        group_by: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Teraquop footprints from a fit file.
    Footprint {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the stabilizer flows of the parity gadget.
    Verify,
}

/// Errors in the invocation itself rather than its data.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn load_circuit(path: &Path) -> Result<Circuit> {
    parse_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_dem(path: &Path) -> Result<DetectorErrorModel> {
    DetectorErrorModel::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn circuit_text(c: &Circuit) -> String {
    format!("# {BUILD}\n{}", serialize_text(c))
}

const GROUP_FIELDS: [&str; 5] = ["construction", "basis", "d", "rounds", "p"];

fn group_value(r: &StatsRow, field: &str) -> Value {
    match field {
        "construction" => json!(r.task.construction.to_string()),
        "basis" => json!(r.task.basis.to_string()),
        "d" => json!(r.task.d),
        "rounds" => json!(r.task.rounds),
        _ => json!(r.task.p),
    }
}

fn fit_groups(rows: &[StatsRow], fields: &[String]) -> Value {
    let mut groups: Vec<(Value, Vec<&StatsRow>)> = Vec::new();
    for r in rows {
        let key: serde_json::Map<String, Value> = fields.iter().map(|f| (f.clone(), group_value(r, f))).collect();
        let key = Value::Object(key);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut out = Vec::new();
    for (key, members) in groups {
        let points: Vec<FitPoint> = members.iter().map(|r| FitPoint::new(r.q, r.shots, r.errors)).collect();
        let rows_json: Vec<Value> = members
            .iter()
            .map(|r| json!({"d": r.task.d, "rounds": r.task.rounds, "q": r.q, "shots": r.shots, "errors": r.errors}))
            .collect();
        let mut g = json!({"key": key, "points": rows_json});
        match fit(&points) {
            Ok(f) => {
                let xmax = points.iter().map(|p| p.x).fold(0.0, f64::max) * 3.0;
                let envelope: Vec<Value> = (0..=60)
                    .map(|i| {
                        let x = xmax * i as f64 / 60.0;
                        let ys = f.region.iter().map(|&(m, b)| m * x + b);
                        let lo = ys.clone().fold(f64::INFINITY, f64::min);
                        let hi = ys.fold(f64::NEG_INFINITY, f64::max);
                        json!({"x": x, "y_low": lo, "y_mle": f.m * x + f.b, "y_high": hi})
                    })
                    .collect();
                g["fit"] = json!({
                    "m": f.m, "b": f.b, "log_likelihood": f.log_likelihood,
                    "region_size": f.region.len(), "on_edge": f.on_edge,
                });
                g["envelope"] = json!(envelope);
                match teraquop_intercept(&f) {
                    Ok(fp) => g["footprint"] = json!(fp),
                    Err(e) => g["error"] = json!(e.to_string()),
                }
            }
            Err(e) => g["error"] = json!(e.to_string()),
        }
        out.push(g);
    }
    json!({
        "version": BUILD,
        "grid": Grid::default(),
        "region_ratio": REGION_RATIO,
        "teraquop_rate": TERAQUOP_RATE,
        "shot": "one memory experiment of the recorded rounds",
        "group_by": fields,
        "groups": out,
    })
}

fn footprint_csv(fit: &Value) -> Result<String> {
    let mut s = String::from("construction,basis,p,q_low,q_mle,q_high\n");
    let groups = fit["groups"].as_array().ok_or_else(|| anyhow!("fit file has no groups"))?;
    for g in groups {
        let key = &g["key"];
        let field = |k: &str| -> Result<String> {
            match &key[k] {
                Value::String(v) => Ok(v.clone()),
                Value::Null => bail!("fit groups lack '{k}'; group by construction,basis,p"),
                v => Ok(v.to_string()),
            }
        };
        let (c, b, p) = (field("construction")?, field("basis")?, field("p")?);
        let fp = &g["footprint"];
        if fp.is_null() {
            log::warn!("{c} {b} p={p}: {}", g["error"].as_str().unwrap_or("no footprint"));
            s.push_str(&format!("{c},{b},{p},,,\n"));
            continue;
        }
        let num = |k: &str| fp[k].as_f64().map(|v| format!("{v:.1}")).unwrap_or_else(|| "inf".into());
        s.push_str(&format!("{c},{b},{p},{},{},{}\n", num("q_low"), num("q_mle"), num("q_high")));
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            d,
            rounds,
            basis,
            construction,
            out,
        } => {
            if basis == Basis::Y {
                return Err(UsageError("basis must be X or Z".into()).into());
            }
            let m = generate_memory_circuit(d, rounds.unwrap_or(d), basis, construction)
                .map_err(|e| UsageError(e.to_string()))?;
            emit(&out, circuit_text(&m.circuit).as_bytes())
        }
        Command::Noisify { p, input, out } => {
            let c = noisify(&load_circuit(&input)?, p)?;
            emit(&out, circuit_text(&c).as_bytes())
        }
        Command::Sample { input, shots, out } => {
            let c = load_circuit(&input)?;
            let data = FrameSampler::new(&c)?.sample(shots, cli.seed);
            let f = fs::File::create(&out).with_context(|| format!("writing {}", out.display()))?;
            data.write_dump(std::io::BufWriter::new(f))?;
            Ok(())
        }
        Command::Dem { input, out } => {
            let dem = extract_error_model(&load_circuit(&input)?)?;
            emit(&out, dem.to_text().as_bytes())
        }
        Command::Decode { dem, events, out } => {
            let dem = load_dem(&dem)?;
            let bytes = fs::read(&events).with_context(|| format!("reading {}", events.display()))?;
            let data = DetectionData::read_dump(&bytes[..]).context("reading detection events")?;
            if data.num_detectors != dem.num_detectors {
                bail!("events have {} detectors, model has {}", data.num_detectors, dem.num_detectors);
            }
            let dec = Decoder::from_dem(&dem)?;
            let mut text = String::with_capacity(data.shots * (dem.num_observables + 1));
            let mut wrong = 0;
            for s in 0..data.shots {
                let pred = dec.decode(&data.fired(s));
                wrong += usize::from(pred != data.observable_mask(s));
                for o in 0..dem.num_observables {
                    text.push(if pred >> o & 1 == 1 { '1' } else { '0' });
                }
                text.push('\n');
            }
            log::info!("{wrong} of {} shots mispredicted", data.shots);
            fs::write(&out, text).with_context(|| format!("writing {}", out.display()))
        }
        Command::Distance { dem } => {
            match estimate_circuit_distance(&load_dem(&dem)?)? {
                Some(d) => println!("{d}"),
                None => println!("none"),
            }
            Ok(())
        }
        Command::Collect {
            tasks,
            out,
            max_shots,
            max_errors,
            workers,
        } => {
            let mut cfg = CampaignConfig::parse(&read(&tasks)?).map_err(UsageError)?;
            cfg.max_shots = max_shots.unwrap_or(cfg.max_shots);
            cfg.max_errors = max_errors.unwrap_or(cfg.max_errors);
            cfg.workers = workers.unwrap_or(cfg.workers);
            if cli.seed != 0 {
                cfg.seed = cli.seed;
            }
            let out = out.or(cfg.stats.clone()).ok_or_else(|| UsageError("no output table: pass --out or set stats".into()))?;
            let mut table = if out.exists() {
                read_table(fs::File::open(&out)?).with_context(|| format!("reading {}", out.display()))?
            } else {
                Vec::new()
            };
            let limits = Limits {
                max_shots: cfg.max_shots,
                max_errors: cfg.max_errors,
                workers: cfg.workers,
            };
            let tasks = cfg.tasks();
            let failures = collect(&mut table, &tasks, &limits, cfg.seed);
            let mut buf = Vec::new();
            write_table(&table, &mut buf)?;
            fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
            for (t, e) in &failures {
                eprintln!("task {t} failed: {e}");
            }
            if failures.is_empty() {
                Ok(())
            } else {
                bail!("{} of {} tasks failed", failures.len(), tasks.len())
            }
        }
        Command::Fit { stats, group_by, out } => {
            let fields: Vec<String> = group_by.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if let Some(bad) = fields.iter().find(|f| !GROUP_FIELDS.contains(&f.as_str())) {
                return Err(UsageError(format!("cannot group by '{bad}'; choose from {}", GROUP_FIELDS.join(","))).into());
            }
            let rows = read_table(fs::File::open(&stats).with_context(|| format!("reading {}", stats.display()))?)?;
            let v = fit_groups(&rows, &fields);
            let mut text = serde_json::to_string_pretty(&v)?;
            text.push('\n');
            emit(&out, text.as_bytes())
        }
        Command::Footprint { fit, out } => {
            let v: Value = serde_json::from_str(&read(&fit)?).context("parsing fit file")?;
            emit(&out, footprint_csv(&v)?.as_bytes())
        }
        Command::Verify => {
            let report = verify_parity_gadget();
            println!("{report}");
            if report.all_pass() {
                Ok(())
            } else {
                bail!("gadget verification failed")
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_validation() {
        assert!(config::check_rate(0.001).is_ok());
        assert!(physical_rate("1.5").is_err());
        assert!(width("4").unwrap_err().contains("odd"));
        assert_eq!(width("5"), Ok(5));
    }

    #[test]
    fn footprint_rows_need_keys() {
        let v = json!({"groups": [{"key": {"basis": "X"}, "footprint": null}]});
        assert!(footprint_csv(&v).is_err());
        let v = json!({"groups": [{"key": {"construction": "pentagon", "basis": "X", "p": 0.001},
                                   "footprint": {"q_low": 1000.0, "q_mle": 2000.0, "q_high": 4000.0}}]});
        assert_eq!(
            footprint_csv(&v).unwrap(),
            "construction,basis,p,q_low,q_mle,q_high\npentagon,X,0.001,1000.0,2000.0,4000.0\n"
        );
    }
}
