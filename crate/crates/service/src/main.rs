use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use photofit_core::catalog::{save_catalog, ComponentKind, Query};
use photofit_core::datapath::run_textfile_flow;
use photofit_core::image::{BinaryMask, Threshold};
use photofit_core::intensity_text::write_intensity_text;
use photofit_core::pgm::{load_pgm, save_pgm};
use photofit_core::session::Stage;
use photofit_core::synth::{demo_catalog, DEMO_SEED};
use photofit_core::tuning::TuneConfig;
use photofit_service::commands::{self, final_stage, open_catalog, open_or_empty, write_atomic};
use photofit_service::description::{parse_pairs, DescriptionDoc};
use photofit_service::{router, AppState, SessionStore};

#[derive(Debug, Parser)]
#[command(name = "photofit", version, about = "Facial composite construction")]
struct Cli {
    /// Catalog directory; the built-in demo catalog is used when unset.
    #[arg(long, global = true, env = "PHOTOFIT_CATALOG")]
    catalog: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Add a component image to a catalog directory.
    Ingest {
        #[arg(long)]
        kind: ComponentKind,
        #[arg(long)]
        image: PathBuf,
        /// Binary mask PGM (nonzero = background); derived with Otsu if absent.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Parameter as name=value; repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long, default_value = "")]
        source: String,
    },
    /// List catalog records matching a kind and parameters.
    Query {
        #[arg(long)]
        kind: ComponentKind,
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
    },
    /// Run describe, select-first, assemble and tune in one go.
    Generate {
        /// JSON description: kind name -> {parameter: value}.
        #[arg(long)]
        desc: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Stage to export; defaults to tuned, or masked with --no-tune.
        #[arg(long)]
        stage: Option<Stage>,
        #[arg(long, default_value_t = 0)]
        threshold: u8,
        #[arg(long)]
        no_tune: bool,
        /// Also write the image as one intensity per line.
        #[arg(long)]
        text: Option<PathBuf>,
        /// Print the computed layout.
        #[arg(long)]
        layout: bool,
    },
    /// Run the integer blending pipeline on intensity text files.
    TuneFpga {
        #[arg(long, default_value = "Face.txt")]
        face: PathBuf,
        #[arg(long, default_value = "Components.txt")]
        components: PathBuf,
        #[arg(long, default_value_t = 23)]
        width: usize,
        #[arg(long, default_value_t = 28)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        threshold: u8,
        #[arg(long, default_value = "Out.txt")]
        out: PathBuf,
        /// Per-pixel intermediate values as TSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write the seeded demo catalog to a directory.
    DemoCatalog {
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "PHOTOFIT_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Directory for session transcripts; sessions are memory-only if unset.
        #[arg(long, env = "PHOTOFIT_SNAPSHOTS")]
        snapshots: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let catalog_root = cli.catalog.as_deref();
    match cli.command {
        Command::Ingest {
            kind,
            image,
            mask,
            params,
            source,
        } => {
            let Some(root) = catalog_root else {
                bail!("ingest needs --catalog or PHOTOFIT_CATALOG");
            };
            let params = parse_pairs(&params).map_err(anyhow::Error::msg)?;
            let img = load_pgm(&read(&image)?)
                .with_context(|| format!("decoding {}", image.display()))?;
            let mask = match mask {
                Some(p) => Some(BinaryMask::from_image(
                    &load_pgm(&read(&p)?).with_context(|| format!("decoding {}", p.display()))?,
                )),
                None => None,
            };
            fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
            let mut catalog = open_or_empty(root)?;
            let (id, report) = catalog.ingest(kind, &params, img, mask, &source)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            save_catalog(&catalog, root)?;
            println!("{id}");
        }
        Command::Query { kind, params } => {
            let catalog = open_catalog(catalog_root)?;
            let desired = parse_pairs(&params).map_err(anyhow::Error::msg)?;
            for w in photofit_core::catalog::validate_params(kind, &desired).warnings {
                eprintln!("warning: {w}");
            }
            for rec in catalog.match_query(&Query { kind, desired }) {
                let params: Vec<String> =
                    rec.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{}\t{}", rec.id, params.join(" "));
            }
        }
        Command::Generate {
            desc,
            out,
            stage,
            threshold,
            no_tune,
            text,
            layout,
        } => {
            let catalog = open_catalog(catalog_root)?;
            let doc: DescriptionDoc = serde_json::from_slice(&read(&desc)?)
                .with_context(|| format!("parsing {}", desc.display()))?;
            let tune = (!no_tune).then(|| TuneConfig::with_threshold(threshold));
            let session = commands::generate(&catalog, doc.into_queries()?, tune)?;
            for (kind, ws) in session.warnings() {
                for w in ws {
                    eprintln!("warning: {kind}: {w}");
                }
            }
            let stage = stage.unwrap_or_else(|| final_stage(&session));
            let img = session.stage(stage)?;
            write_atomic(&out, &save_pgm(img))
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = text {
                write_atomic(&path, write_intensity_text(img).as_bytes())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if layout {
                if let Some(l) = session.effective_layout() {
                    print!("{l}");
                }
                for (kind, id) in session.selections() {
                    println!("selected {kind}: {id}");
                }
            }
        }
        Command::TuneFpga {
            face,
            components,
            width,
            height,
            threshold,
            out,
            trace,
        } => {
            let face_text = String::from_utf8(read(&face)?).context("face file is not UTF-8")?;
            let comp_text =
                String::from_utf8(read(&components)?).context("components file is not UTF-8")?;
            let cfg = TuneConfig {
                component_threshold: Threshold(threshold),
                ..TuneConfig::default()
            };
            let (out_text, tr) = run_textfile_flow(&face_text, &comp_text, width, height, &cfg)?;
            write_atomic(&out, out_text.as_bytes())
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = trace {
                write_atomic(&path, tr.to_tsv().as_bytes())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::DemoCatalog { out } => {
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let catalog = demo_catalog(DEMO_SEED);
            save_catalog(&catalog, &out)?;
            println!("{} records written to {}", catalog.len(), out.display());
        }
        Command::Serve { listen, snapshots } => {
            let catalog = Arc::new(open_catalog(catalog_root)?);
            let sessions = match &snapshots {
                Some(dir) => SessionStore::with_snapshots(dir, &catalog)?,
                None => SessionStore::in_memory(),
            };
            tracing::info!(
                records = catalog.len(),
                sessions = sessions.len(),
                "catalog loaded"
            );
            let app = router(Arc::new(AppState { catalog, sessions }));
            serve(app, listen)?;
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

#[tokio::main]
async fn serve(app: axum::Router, listen: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .with_context(|| format!("binding {listen}"))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
