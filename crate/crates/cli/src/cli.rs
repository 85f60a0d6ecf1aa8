//! Subcommands. Exit status: 0 on success, 2 on usage errors, 1 when the
//! operation fails.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use shapedl::approx::TextureStats;
use shapedl::config::MatchConfig;
use shapedl::eval::{parse_gold, run_experiment, ExperimentReport};
use shapedl::index::Hierarchy;
use shapedl::interchange::{
    description_from_doc, description_to_doc, parse_description, shape_from_doc, DescriptionDoc, ShapeDoc,
};
use shapedl::model::CompositeDescription;
use shapedl::synth::{synthetic_suite, SUITE_SEED};

use crate::output::{classification_text, hierarchy_text, query_response, results_table};
use crate::server::{FlushPolicy, ServiceConfig};
use crate::store;

#[derive(Debug, Parser)]
#[command(name = "shapedl", version, about = "Composite-shape image retrieval")]
pub struct Cli {
    /// Directory holding the store.
    #[arg(long, global = true, default_value = "shapedl-data")]
    pub data_dir: PathBuf,
    /// Matching configuration file (`key = value` lines); replaces the
    /// stored configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a basic shape from `{"id", "points"}` JSON.
    AddShape {
        file: PathBuf,
        /// Overrides the id in the file.
        #[arg(long)]
        id: Option<String>,
    },
    /// Insert a description into the hierarchy.
    AddDescription { file: PathBuf },
    /// Ingest segmented-image JSON files or PNG/PPM rasters.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Image id (single file only); defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
    },
    /// Rank stored images against a description.
    Query {
        file: PathBuf,
        /// Insert the query into the hierarchy afterwards.
        #[arg(long)]
        persist: bool,
        #[arg(long)]
        json: bool,
    },
    /// Show where a description would sit in the hierarchy.
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the hierarchy.
    Hierarchy {
        #[arg(long)]
        json: bool,
    },
    /// Recompute texture statistics from the stored images.
    Calibrate,
    /// Run a retrieval experiment and report R_norm per query.
    Evaluate {
        /// Use the generated synthetic suite instead of the store.
        #[arg(long, conflicts_with_all = ["queries", "gold"])]
        synthetic: bool,
        #[arg(long, default_value_t = SUITE_SEED)]
        seed: u64,
        /// JSON array of descriptions.
        #[arg(long, requires = "gold")]
        queries: Option<PathBuf>,
        /// Gold rankings `{query: [[tier 1 ids], ...]}`.
        #[arg(long, requires = "queries")]
        gold: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Write the synthetic suite (PNG scenes, queries, gold) to a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SUITE_SEED)]
        seed: u64,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, value_enum, default_value = "always")]
        flush: FlushPolicy,
    },
}

/// Parses `args` and runs the command; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn print(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn load_description(h: &Hierarchy, path: &Path) -> anyhow::Result<CompositeDescription> {
    parse_description(&read(path)?, h.shapes()).with_context(|| format!("in {}", path.display()))
}

/// Experiment report over the synthetic suite, as `evaluate --synthetic`
/// computes it.
pub fn synthetic_report(seed: u64, cfg: &MatchConfig) -> anyhow::Result<ExperimentReport> {
    let suite = synthetic_suite(seed);
    let images = suite.segmented_images()?;
    Ok(run_experiment(
        &suite.queries,
        images.iter(),
        &suite.gold,
        cfg,
        &TextureStats::default(),
    ))
}

fn render_report(report: &ExperimentReport, json: bool) -> anyhow::Result<String> {
    Ok(if json { report.to_json()? } else { report.to_table() })
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let dir = cli.data_dir.as_path();
    let config = cli.config.as_deref();
    match cli.command {
        Command::AddShape { file, id } => {
            let mut doc: ShapeDoc = serde_json::from_slice(&read(&file)?)
                .with_context(|| format!("parsing shape {}", file.display()))?;
            if let Some(id) = id {
                doc.id = id;
            }
            let mut h = store::open(dir, config)?;
            let id = h.add_shape(shape_from_doc(&doc)?)?;
            store::save(&h, dir)?;
            print(&format!("{id}\n"))
        }
        Command::AddDescription { file } => {
            let mut h = store::open(dir, config)?;
            let d = load_description(&h, &file)?;
            let id = d.id.clone();
            let node = h.insert_description(d)?;
            store::save(&h, dir)?;
            if node == id {
                print(&format!("{id}\n"))
            } else {
                print(&format!("{id} (equivalent to {node})\n"))
            }
        }
        Command::Ingest { files, id } => {
            if id.is_some() && files.len() > 1 {
                bail!("--id applies to a single file");
            }
            let mut h = store::open(dir, config)?;
            let mut lines = String::new();
            for f in &files {
                let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
                let name = id.clone().unwrap_or_else(|| stem.to_string());
                let mut img =
                    store::image_from_bytes(&read(f)?, &name).with_context(|| format!("ingesting {}", f.display()))?;
                if let Some(id) = &id {
                    img = img.with_id(id.clone());
                }
                let regions = img.len();
                let img_id = img.id.clone();
                let linked = h.insert_image(img)?;
                lines.push_str(&format!("{img_id}: {regions} regions, linked at {}\n", linked.join(", ")));
            }
            store::save(&h, dir)?;
            print(&lines)
        }
        Command::Query { file, persist, json } => {
            let mut h = store::open(dir, config)?;
            let q = load_description(&h, &file)?;
            let results = h.answer_query(&q, persist)?;
            if persist {
                store::save(&h, dir)?;
            }
            let resp = query_response(&results);
            if json {
                print(&(serde_json::to_string_pretty(&resp)? + "\n"))
            } else {
                print(&results_table(&resp))
            }
        }
        Command::Classify { file, json } => {
            let h = store::open(dir, config)?;
            let d = load_description(&h, &file)?;
            let c = h.classify_description(&d)?;
            if json {
                print(&(serde_json::to_string_pretty(&c)? + "\n"))
            } else {
                print(&classification_text(&c))
            }
        }
        Command::Hierarchy { json } => {
            let h = store::open(dir, config)?;
            if json {
                print(&(serde_json::to_string_pretty(&h.nodes())? + "\n"))
            } else {
                print(&hierarchy_text(&h.nodes()))
            }
        }
        Command::Calibrate => {
            let mut h = store::open(dir, config)?;
            h.calibrate();
            store::save(&h, dir)?;
            print(&format!("calibrated over {} images\n", h.image_count()))
        }
        Command::Evaluate {
            synthetic,
            seed,
            queries,
            gold,
            json,
        } => {
            let report = if synthetic {
                let cfg = match config {
                    Some(p) => MatchConfig::load(p)?,
                    None => MatchConfig::default(),
                };
                synthetic_report(seed, &cfg)?
            } else {
                let (Some(qp), Some(gp)) = (queries, gold) else {
                    bail!("evaluate needs --synthetic or both --queries and --gold");
                };
                let h = store::open(dir, config)?;
                let docs: Vec<DescriptionDoc> = serde_json::from_slice(&read(&qp)?)
                    .with_context(|| format!("parsing queries {}", qp.display()))?;
                let qs = docs
                    .iter()
                    .map(|d| description_from_doc(d, h.shapes()))
                    .collect::<shapedl::Result<Vec<_>>>()?;
                let gold = parse_gold(&read(&gp)?)?;
                run_experiment(&qs, h.images(), &gold, h.config(), h.texture_stats())
            };
            print(&render_report(&report, json)?)
        }
        Command::Synth { out, seed } => {
            let suite = synthetic_suite(seed);
            std::fs::create_dir_all(&out)?;
            for scene in &suite.scenes {
                std::fs::write(out.join(format!("{}.png", scene.id)), scene.render().encode_png()?)?;
            }
            let docs: Vec<DescriptionDoc> = suite.queries.iter().map(description_to_doc).collect();
            std::fs::write(out.join("queries.json"), serde_json::to_string_pretty(&docs)? + "\n")?;
            let gold: BTreeMap<_, _> = suite.gold.iter().collect();
            std::fs::write(out.join("gold.json"), serde_json::to_string_pretty(&gold)? + "\n")?;
            print(&format!(
                "wrote {} scenes, {} queries to {}\n",
                suite.scenes.len(),
                suite.queries.len(),
                out.display()
            ))
        }
        Command::Serve { listen, flush } => {
            let cfg = ServiceConfig {
                listen,
                data_dir: cli.data_dir.clone(),
                config_path: cli.config.clone(),
                flush,
            };
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::server::serve(cfg))
        }
    }
}
