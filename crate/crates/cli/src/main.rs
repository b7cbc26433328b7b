use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nscluster::config::RunConfig;
use nscluster::diagnostics::{pcf, radius_grid, summarize, trace_summary, PARAM_NAMES};
use nscluster::ingest::{ingest, IngestOptions};
use nscluster::io::{
    read_parent_draws, read_points, read_samples, write_json, write_parent_draws, write_points, write_samples,
    ChainManifest, Manifest,
};
use nscluster::risk::{circles_geojson, high_risk_mask, intensity_map, mean_intensity_map, risk_boundaries};
use nscluster::samplers::run_chains;
use nscluster::simulation::make_scenario_with;
use nscluster::{Point, PointPattern};

#[derive(Parser)]
#[command(
    name = "nscluster",
    version,
    about = "Fit and map attraction-repulsion cluster point processes"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON, or TOML with a .toml extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario: writes X.csv, C_true.csv, truth.json.
    Simulate {
        #[arg(long)]
        scenario: Option<u32>,
        #[arg(long)]
        parent_steps: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit the model to an offspring CSV: writes samples.csv, parents.csv, manifest.json.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Ripley's K and the pair correlation function: writes an (r, K, J) CSV.
    Pcf {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        r_step: Option<f64>,
        #[arg(long)]
        bandwidth: Option<usize>,
        #[arg(long)]
        translation: bool,
        #[arg(long, default_value = "pcf.csv")]
        out: PathBuf,
    },
    /// Intensity raster, high-risk mask and risk boundaries from a fit directory.
    Riskmap {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        cell_size: Option<f64>,
        #[arg(long)]
        days: Option<f64>,
        #[arg(long)]
        area_unit: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Average the intensity over the thinned parent draws of the fit
        /// (needs `chain.parent_thin` > 0 when fitting).
        #[arg(long)]
        average: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Filter a visit-record CSV to the reporting window: writes X.csv.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        end_date: Option<String>,
        #[arg(long)]
        year: Option<i32>,
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        keep_duplicates: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .chain()
                .find_map(|c| c.downcast_ref::<nscluster::Error>())
                .map_or("error", |n| n.kind());
            let message = format!("{e:#}");
            eprintln!("{}", json!({"error": kind, "message": message}));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.common.seed {
        cfg.chain.seed = seed;
    }
    match cli.command {
        Command::Simulate {
            scenario,
            parent_steps,
            out,
        } => {
            if let Some(s) = scenario {
                cfg.simulation.scenario = s;
            }
            if let Some(s) = parent_steps {
                cfg.simulation.parent_steps = s;
            }
            simulate(&cfg, &out)
        }
        Command::Fit {
            data,
            iterations,
            burn_in,
            chains,
            out,
        } => {
            if let Some(v) = iterations {
                cfg.chain.iterations = v;
            }
            if let Some(v) = burn_in {
                cfg.chain.burn_in = v;
            }
            if let Some(v) = chains {
                cfg.chain.chains = v;
            }
            fit(&cfg, &data, &out)
        }
        Command::Pcf {
            data,
            r_max,
            r_step,
            bandwidth,
            translation,
            out,
        } => {
            if let Some(v) = r_max {
                cfg.pcf.r_max = v;
            }
            if let Some(v) = r_step {
                cfg.pcf.r_step = v;
            }
            if let Some(v) = bandwidth {
                cfg.pcf.bandwidth = v;
            }
            cfg.pcf.translation |= translation;
            pcf_cmd(&cfg, &data, &out)
        }
        Command::Riskmap {
            fit,
            cell_size,
            days,
            area_unit,
            threshold,
            average,
            out,
        } => {
            if let Some(v) = cell_size {
                cfg.risk.cell_size = v;
            }
            if let Some(v) = days {
                cfg.risk.days = v;
            }
            if let Some(v) = area_unit {
                cfg.risk.area_unit = v;
            }
            if let Some(v) = threshold {
                cfg.risk.threshold = v;
            }
            cfg.risk.average |= average;
            riskmap(&cfg, &fit, &out)
        }
        Command::Ingest {
            input,
            end_date,
            year,
            lenient,
            keep_duplicates,
            out,
        } => {
            let mut opts = match (cfg.ingest.clone(), end_date) {
                (Some(mut o), end) => {
                    if let Some(e) = end {
                        o.end_date = e;
                    }
                    o
                }
                (None, Some(e)) => IngestOptions::new(&e, year.unwrap_or(2020)),
                (None, None) => anyhow::bail!(nscluster::Error::Config(
                    "ingest needs --end-date or an [ingest] config section".into()
                )),
            };
            if let Some(y) = year {
                opts.year = y;
            }
            opts.strict &= !lenient;
            opts.keep_duplicates |= keep_duplicates;
            cfg.ingest = Some(opts);
            ingest_cmd(&cfg, &input, &out)
        }
    }
}

fn prepare(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(())
}

fn manifest(cfg: &RunConfig, command: &str, inputs: &[&Path], outputs: &[&str]) -> Result<Manifest> {
    Ok(Manifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.chain.seed,
        config_hash: cfg.hash(),
        config: json!({
            "run": cfg,
            "priors": cfg.priors()?,
            "proposal": cfg.proposal()?,
        }),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        chains: Vec::new(),
    })
}

fn load_pattern(cfg: &RunConfig, path: &Path) -> Result<PointPattern> {
    let pts = read_points(path).with_context(|| format!("reading {}", path.display()))?;
    PointPattern::new(pts, cfg.window.clone()).with_context(|| format!("loading {}", path.display()))
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    prepare(cfg, out)?;
    let id = cfg.simulation.scenario;
    let sc = make_scenario_with(id, &cfg.window, cfg.chain.seed, &cfg.scenario_options())?;
    log::info!(
        "scenario {id}: {} parents, {} offspring",
        sc.parents.len(),
        sc.offspring.len()
    );
    write_points(&out.join("X.csv"), sc.offspring.points())?;
    write_points(&out.join("C_true.csv"), sc.parents.points())?;
    write_json(
        &out.join("truth.json"),
        &json!({
            "scenario": id,
            "seed": cfg.chain.seed,
            "params": sc.truth,
            "n": sc.offspring.len(),
            "m": sc.parents.len(),
        }),
    )?;
    let m = manifest(cfg, "simulate", &[], &["X.csv", "C_true.csv", "truth.json"])?;
    write_json(&out.join("manifest.json"), &m)?;
    Ok(())
}

fn fit(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    prepare(cfg, out)?;
    let x = load_pattern(cfg, data)?;
    let priors = cfg.priors()?;
    let proposal = cfg.proposal()?;
    log::info!("priors: {}", serde_json::to_string(&priors)?);
    log::info!("fitting {} points, {} chain(s)", x.len(), cfg.chain.chains);
    let outputs = run_chains(&x, &priors, &proposal, &cfg.chain_settings(), cfg.chain.chains)?;
    let mut files = Vec::new();
    let mut chains = Vec::new();
    for o in &outputs {
        let suffix = if o.chain_index == 0 {
            String::new()
        } else {
            format!("_chain{}", o.chain_index)
        };
        let samples = format!("samples{suffix}.csv");
        let parents = format!("parents{suffix}.csv");
        let trace = format!("m_trace{suffix}.csv");
        write_samples(&out.join(&samples), &o.samples)?;
        write_points(&out.join(&parents), o.final_parents.points())?;
        let mut w = BufWriter::new(File::create(out.join(&trace))?);
        writeln!(w, "iter,m")?;
        for (i, m) in o.m_trace.iter().enumerate() {
            writeln!(w, "{i},{m}")?;
        }
        w.flush()?;
        files.extend([samples, parents, trace]);
        if cfg.chain.parent_thin > 0 {
            let draws = format!("parent_draws{suffix}.csv");
            write_parent_draws(&out.join(&draws), &o.parent_draws)?;
            files.push(draws);
        }
        chains.push(ChainManifest::new(o, trace_summary(o)?.params));
        log::info!("chain {}: acceptance {:?}", o.chain_index, o.acceptance);
    }
    files.push("manifest.json".into());
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    let mut m = manifest(cfg, "fit", &[data], &names)?;
    m.chains = chains;
    write_json(&out.join("manifest.json"), &m)?;
    Ok(())
}

fn pcf_cmd(cfg: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    cfg.validate()?;
    let x = load_pattern(cfg, data)?;
    let radii = radius_grid(cfg.pcf.r_max, cfg.pcf.r_step);
    let res = pcf(&x, &radii, &cfg.pcf.options())?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    writeln!(w, "r,K,J")?;
    for i in 0..res.r.len() {
        writeln!(w, "{},{},{}", res.r[i], res.k[i], res.j[i])?;
    }
    w.flush()?;
    Ok(())
}

fn riskmap(cfg: &RunConfig, fit_dir: &Path, out: &Path) -> Result<()> {
    prepare(cfg, out)?;
    let samples_path = fit_dir.join("samples.csv");
    let parents_path = fit_dir.join("parents.csv");
    let samples = read_samples(&samples_path).with_context(|| format!("reading {}", samples_path.display()))?;
    if samples.is_empty() {
        anyhow::bail!(nscluster::Error::InsufficientData(format!(
            "{} has no samples",
            samples_path.display()
        )));
    }
    let parents = load_pattern(cfg, &parents_path)?;
    let mean = |k: usize| {
        let v: Vec<f64> = samples.iter().map(|s| s.values()[k]).collect();
        summarize(PARAM_NAMES[k], &v).mean
    };
    let (alpha, omega, theta2) = (mean(0), mean(1), mean(4));
    log::info!("posterior means: alpha {alpha}, omega {omega}, theta2 {theta2}");

    let mut inputs = vec![samples_path.clone(), parents_path.clone()];
    let raster = if cfg.risk.average {
        let draws_path = fit_dir.join("parent_draws.csv");
        let draws = read_parent_draws(&draws_path).with_context(|| format!("reading {}", draws_path.display()))?;
        log::info!("averaging intensity over {} parent draws", draws.len());
        let views: Vec<(&[Point], f64, f64)> = draws.iter().map(|d| (d.parents.as_slice(), d.alpha, d.omega)).collect();
        inputs.push(draws_path);
        mean_intensity_map(&views, &cfg.window, cfg.risk.cell_size)?
    } else {
        intensity_map(parents.points(), alpha, omega, &cfg.window, cfg.risk.cell_size)?
    };
    let mask = high_risk_mask(&raster, &cfg.risk.threshold_spec())?;
    let mut w = BufWriter::new(File::create(out.join("intensity.asc"))?);
    raster.write_ascii(&mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(out.join("high_risk.asc"))?);
    mask.write_ascii(&mut w)?;
    w.flush()?;
    let circles = risk_boundaries(parents.points(), theta2, omega);
    write_json(&out.join("boundaries.geojson"), &circles_geojson(&circles))?;
    log::info!("{} high-risk cells, {} boundaries", mask.count(), circles.len());
    let m = manifest(
        cfg,
        "riskmap",
        &inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>(),
        &["intensity.asc", "high_risk.asc", "boundaries.geojson", "manifest.json"],
    )?;
    write_json(&out.join("manifest.json"), &m)?;
    Ok(())
}

fn ingest_cmd(cfg: &RunConfig, input: &Path, out: &Path) -> Result<()> {
    prepare(cfg, out)?;
    let opts = cfg.ingest.as_ref().expect("ingest options set");
    let res = ingest(input, opts, &cfg.window).with_context(|| format!("ingesting {}", input.display()))?;
    write_points(&out.join("X.csv"), res.pattern.points())?;
    let mut m = manifest(cfg, "ingest", &[input], &["X.csv", "manifest.json"])?;
    m.config["report"] = serde_json::to_value(res.report)?;
    write_json(&out.join("manifest.json"), &m)?;
    Ok(())
}
