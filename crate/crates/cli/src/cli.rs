//! Command definitions and their text or JSON output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use lake_core::analytics::Analysis;
use lake_core::fixture::{self, FixtureSpec};
use lake_core::workload::run_workload;
use lake_core::{Lake, MatchMode, Method, SidecarPolicy, Target, TermQuery};
use serde::Serialize;

use crate::plot;

#[derive(Debug, Parser)]
#[command(
    name = "lake",
    version,
    about = "Metadata-driven data lake for documents and CSV tables"
)]
pub struct Cli {
    /// Lake directory.
    #[arg(long, global = true, env = "LAKE_ROOT", default_value = ".")]
    pub root: PathBuf,
    /// Output format of read commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create the lake layout (in DIR, or the lake root).
    Init { dir: Option<PathBuf> },
    /// Ingest a file or directory tree.
    Ingest {
        path: PathBuf,
        /// Do not read `<file>.meta.json` sidecars.
        #[arg(long)]
        no_sidecars: bool,
    },
    /// Serve the REST API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Raw data and metadata sizes.
    Stats,
    /// Run the 15-query workload.
    Bench {
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Also write the results as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query tables.
    Query {
        #[command(subcommand)]
        query: QueryCommand,
    },
    /// Term search over documents and tables.
    Search {
        #[arg(required = true)]
        terms: Vec<String>,
        /// Also match terms within a small edit distance.
        #[arg(long)]
        fuzzy: bool,
        /// Expand with synonyms from THESAURUS (all thesauri without a value).
        #[arg(long, num_args = 0..=1, value_name = "THESAURUS")]
        expand: Option<Option<String>>,
        /// Match objects containing any term instead of all.
        #[arg(long)]
        any: bool,
        #[arg(long, value_enum, default_value_t = SearchTarget::Both)]
        target: SearchTarget,
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Write a chart as SVG.
    Plot {
        #[arg(value_enum)]
        analysis: PlotKind,
        #[arg(long)]
        out: PathBuf,
        /// Keywords to show, or clusters for kmeans.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "month")]
        grouping: String,
        /// Analyse the numeric columns of a query result instead of groups.
        #[arg(long)]
        sql: Option<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Generate the synthetic sample corpus.
    Fixture {
        dir: PathBuf,
        #[arg(long, default_value_t = FixtureSpec::default().documents)]
        documents: usize,
        #[arg(long, default_value_t = FixtureSpec::default().seed)]
        seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum QueryCommand {
    /// Run a SELECT statement.
    Sql { text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchTarget {
    Documents,
    Tables,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Bar chart of the top keywords.
    Keywords,
    /// Word cloud of the top keywords.
    Wordcloud,
    /// PCA scatter.
    Pca,
    /// PCA scatter coloured by KMeans cluster.
    Kmeans,
}

fn render<T: Serialize>(format: Format, value: &T, text: impl FnOnce(&T) -> String) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
        Format::Text => text(value),
    })
}

fn open(root: &Path) -> anyhow::Result<Lake> {
    Lake::open(root).with_context(|| format!("opening lake at {}", root.display()))
}

/// Runs every command except `serve`, returning what to print.
pub fn run(cli: &Cli) -> anyhow::Result<String> {
    let fmt = cli.format;
    match &cli.command {
        Command::Init { dir } => {
            let root = dir.as_ref().unwrap_or(&cli.root);
            Lake::init(root)?;
            Ok(format!("initialised lake at {}\n", root.display()))
        }
        Command::Ingest { path, no_sidecars } => {
            let mut lake = open(&cli.root)?;
            let policy = if *no_sidecars {
                SidecarPolicy::Ignore
            } else {
                SidecarPolicy::Merge
            };
            let report = lake.ingest(path, policy)?;
            render(fmt, &report, |r| {
                let mut s = format!(
                    "walked {} files: {} added, {} updated, {} unchanged, {} failed\n",
                    r.files_walked,
                    r.objects_added,
                    r.objects_updated,
                    r.objects_unchanged,
                    r.failures.len()
                );
                for f in &r.failures {
                    let _ = writeln!(s, "  failed {} at {}: {}", f.path, f.stage, f.reason);
                }
                for w in &r.warnings {
                    let _ = writeln!(s, "  warning: {w}");
                }
                s
            })
        }
        Command::Serve { .. } => bail!("serve runs the HTTP service and has no printed output"),
        Command::Stats => {
            let stats = open(&cli.root)?.stats()?;
            render(fmt, &stats, |s| {
                let m = &s.metadata;
                format!(
                    "raw bytes        {}\n\
                     metadata bytes   {}\n\
                     \x20 catalog        {}\n\
                     \x20 refined tables {}\n\
                     \x20 vectors        {}\n\
                     \x20 indexes        {}\n\
                     \x20 semantics      {}\n\
                     ratio            {:.3}\n",
                    s.raw_bytes,
                    s.metadata_bytes,
                    m.catalog,
                    m.refined_tables,
                    m.vectors,
                    m.indexes,
                    m.semantics,
                    s.ratio
                )
            })
        }
        Command::Bench { runs, out } => {
            let lake = open(&cli.root)?;
            let results = run_workload(&lake, *runs)?;
            if let Some(out) = out {
                std::fs::write(out, serde_json::to_string_pretty(&results)? + "\n")
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            render(fmt, &results, |rs| {
                let mut s = format!(
                    "{:>3}  {:>10}  {:>4}  {:>6}  {:<20}  {}\n",
                    "q", "mean ms", "runs", "count", "digest", "query"
                );
                for r in rs {
                    let short = r.digest.split_once(':').map_or("", |(_, h)| &h[..12.min(h.len())]);
                    let _ = writeln!(
                        s,
                        "{:>3}  {:>10.3}  {:>4}  {:>6}  {:<20}  {}",
                        r.id, r.mean_ms, r.runs, r.count, short, r.description
                    );
                }
                s
            })
        }
        Command::Query {
            query: QueryCommand::Sql { text },
        } => {
            let table = open(&cli.root)?.sql(text)?;
            let body = serde_json::json!({ "columns": table.schema, "rows": table.rows_json() });
            render(fmt, &body, |_| table.to_csv())
        }
        Command::Search {
            terms,
            fuzzy,
            expand,
            any,
            target,
            limit,
        } => {
            let lake = open(&cli.root)?;
            let q = TermQuery {
                mode: if *any { MatchMode::Any } else { MatchMode::All },
                fuzzy: *fuzzy,
                expand_synonyms: expand.is_some(),
                thesaurus: expand.clone().flatten(),
                target: match target {
                    SearchTarget::Documents => Target::Documents,
                    SearchTarget::Tables => Target::Tables,
                    SearchTarget::Both => Target::Both,
                },
                ..TermQuery::all(terms)
            };
            let mut hits = lake.search(&q)?;
            let total = hits.len();
            hits.truncate(*limit);
            let rows: Vec<_> = hits
                .iter()
                .map(|h| {
                    let path = lake.object(h.object).map(|o| o.path.clone()).unwrap_or_default();
                    serde_json::json!({ "object": h.object, "score": h.score, "index": h.index, "path": path })
                })
                .collect();
            render(fmt, &rows, |rows| {
                let mut s = format!("{total} match(es)\n");
                for r in rows {
                    let _ = writeln!(
                        s,
                        "{:>6}  {:>8.4}  {}",
                        r["object"],
                        r["score"].as_f64().unwrap_or_default(),
                        r["path"].as_str().unwrap_or_default()
                    );
                }
                s
            })
        }
        Command::Plot {
            analysis,
            out,
            k,
            grouping,
            sql,
            seed,
        } => {
            let lake = open(&cli.root)?;
            let svg = plot_svg(&lake, *analysis, *k, grouping, sql.as_deref(), *seed)?;
            std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
            Ok(format!("wrote {}\n", out.display()))
        }
        Command::Fixture { dir, documents, seed } => {
            let spec = FixtureSpec {
                documents: *documents,
                seed: *seed,
                ..FixtureSpec::default()
            };
            let summary = fixture::generate(dir, &spec)?;
            render(fmt, &summary, |s| {
                format!(
                    "wrote {} documents ({} French) and {} tables, {} bytes, to {}\n",
                    s.documents,
                    s.french_documents,
                    s.tables,
                    s.bytes,
                    dir.display()
                )
            })
        }
    }
}

fn projection(a: &Analysis) -> Option<&[[f64; 2]]> {
    match a {
        Analysis::Pca(p) => Some(&p.coordinates),
        Analysis::Kmeans(_) => None,
    }
}

fn plot_svg(
    lake: &Lake,
    kind: PlotKind,
    k: Option<usize>,
    grouping: &str,
    sql: Option<&str>,
    seed: u64,
) -> anyhow::Result<String> {
    match kind {
        PlotKind::Keywords | PlotKind::Wordcloud => {
            let ranking = lake.top_keywords(
                None,
                k.unwrap_or(if kind == PlotKind::Keywords { 10 } else { 50 }),
                None,
            )?;
            let words: Vec<(String, f64)> = ranking.entries.iter().map(|(t, c)| (t.clone(), *c as f64)).collect();
            let title = format!("Top keywords over {} documents", ranking.documents);
            Ok(if kind == PlotKind::Keywords {
                plot::bar_chart(&title, &words)
            } else {
                plot::word_cloud(&title, &words)
            })
        }
        PlotKind::Pca | PlotKind::Kmeans => {
            let kmeans = Method::Kmeans {
                k: k.unwrap_or(3),
                seed,
            };
            let (labels, coords, clusters, title) = match sql {
                Some(sql) => {
                    let pca = lake.tuple_comparison(sql, Method::Pca)?;
                    let labels = pca.rows.iter().map(|r| r.to_string()).collect();
                    let clusters = (kind == PlotKind::Kmeans)
                        .then(|| lake.tuple_comparison(sql, kmeans))
                        .transpose()?
                        .map(|c| c.analysis);
                    (labels, pca.analysis, clusters, "Query result tuples".to_string())
                }
                None => {
                    let pca = lake.compare_groups(grouping, Method::Pca)?;
                    let clusters = (kind == PlotKind::Kmeans)
                        .then(|| lake.compare_groups(grouping, kmeans))
                        .transpose()?
                        .map(|c| c.analysis);
                    (pca.labels, pca.analysis, clusters, format!("Groups of '{grouping}'"))
                }
            };
            let points = projection(&coords).expect("PCA analysis");
            let assignment = match &clusters {
                Some(Analysis::Kmeans(c)) => Some(c.labels.as_slice()),
                _ => None,
            };
            Ok(plot::scatter(&title, points, &labels, assignment))
        }
    }
}
