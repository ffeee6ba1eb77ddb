use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use jointvip::{
    format_post_table, format_table, layout, post_summarize, post_tabulate, render_svg, summarize, tabulate, PlotInput,
    PlotSpec, SmdFlavor, DEFAULT_BIAS_TOL, DEFAULT_POST_BIAS_TOL,
};

use crate::error::CliError;
use crate::pipeline::{load_manifest, Analysis, Options};
use crate::service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "jointvip", version, about = "Joint variable importance diagnostics for observational studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the model as JSON
    Compute(ComputeArgs),
    /// Print the summary lines
    Summary(ReportArgs),
    /// Print the covariates above the bias tolerance, ranked by absolute bias
    #[command(alias = "print")]
    Table(ReportArgs),
    /// Render the plot as SVG
    Plot(PlotArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Study manifest (JSON)
    #[arg(long)]
    pub manifest: PathBuf,
    /// SMD flavor: cross-sample or pure
    #[arg(long, default_value = "cross-sample")]
    pub smd: SmdFlavor,
    /// Keep signs instead of absolute values
    #[arg(long)]
    pub signed: bool,
    #[arg(long, default_value_t = DEFAULT_BIAS_TOL, allow_negative_numbers = true)]
    pub bias_tol: f64,
    #[arg(long, default_value_t = DEFAULT_POST_BIAS_TOL, allow_negative_numbers = true)]
    pub post_bias_tol: f64,
}

impl ReportArgs {
    fn options(&self) -> Result<Options, CliError> {
        Ok(Options::new(self.smd, !self.signed, self.bias_tol, self.post_bias_tol)?)
    }
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub report: ReportArgs,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub report: ReportArgs,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Draw a line from each covariate's pre to its post position
    #[arg(long)]
    pub trails: bool,
    /// Label every covariate, not only those above the tolerance
    #[arg(long)]
    pub label_all: bool,
    /// Bias level to draw a reference curve at; repeatable
    #[arg(long = "curve-level", allow_negative_numbers = true)]
    pub curve_levels: Vec<f64>,
    #[arg(long, default_value_t = 720)]
    pub width: u32,
    #[arg(long, default_value_t = 540)]
    pub height: u32,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub serve_addr: SocketAddr,
    /// Origin allowed by CORS; repeatable, `*` allows any
    #[arg(long = "cors-origin", default_value = "http://localhost:5173")]
    pub cors_origins: Vec<String>,
    /// Sessions kept in memory before the least recently used is dropped
    #[arg(long, default_value_t = 64)]
    pub max_sessions: usize,
    /// Request body limit in MiB
    #[arg(long, default_value_t = 64)]
    pub max_body_mib: usize,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io("write", path, e)),
        None => {
            let stdout = Path::new("<stdout>");
            let mut lock = std::io::stdout().lock();
            lock.write_all(text.as_bytes()).and_then(|_| lock.flush()).map_err(|e| CliError::io("write", stdout, e))
        }
    }
}

pub fn compute_text(analysis: &Analysis, opts: &Options) -> String {
    let mut text = analysis.model_json(opts.report.smd_flavor);
    text.push('\n');
    text
}

pub fn summary_text(analysis: &Analysis, opts: &Options) -> Result<String, CliError> {
    Ok(match &analysis.post {
        Some(post) => post_summarize(post, &opts.report, opts.post_bias_tol)?.to_string(),
        None => summarize(&analysis.model, &opts.report).to_string(),
    })
}

pub fn table_text(analysis: &Analysis, opts: &Options) -> String {
    match &analysis.post {
        Some(post) => format_post_table(&post_tabulate(post, &opts.report)),
        None => format_table(&tabulate(&analysis.model, &opts.report)),
    }
}

pub fn plot_text(analysis: &Analysis, spec: &PlotSpec) -> Result<String, CliError> {
    let input = match &analysis.post {
        Some(post) => PlotInput::Post(post),
        None => PlotInput::Pre(&analysis.model),
    };
    Ok(render_svg(&layout(input, spec)?, spec))
}

impl PlotArgs {
    fn spec(&self, opts: &Options) -> PlotSpec {
        PlotSpec {
            curve_levels: (!self.curve_levels.is_empty()).then(|| self.curve_levels.clone()),
            width_px: self.width,
            height_px: self.height,
            label_above_tol_only: !self.label_all,
            show_post_trails: self.trails,
            ..PlotSpec::with_options(opts.report)
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compute(args) => {
            let opts = args.report.options()?;
            let analysis = load_manifest(&args.report.manifest)?;
            emit(args.out.as_deref(), &compute_text(&analysis, &opts))
        }
        Command::Summary(args) => {
            let opts = args.options()?;
            emit(None, &summary_text(&load_manifest(&args.manifest)?, &opts)?)
        }
        Command::Table(args) => {
            let opts = args.options()?;
            emit(None, &table_text(&load_manifest(&args.manifest)?, &opts))
        }
        Command::Plot(args) => {
            let opts = args.report.options()?;
            let spec = args.spec(&opts);
            spec.validate()?;
            let analysis = load_manifest(&args.report.manifest)?;
            emit(args.out.as_deref(), &plot_text(&analysis, &spec)?)
        }
        Command::Serve(args) => {
            let config = ServiceConfig {
                cors_origins: args.cors_origins,
                max_sessions: args.max_sessions,
                max_body_bytes: args.max_body_mib.saturating_mul(1 << 20),
            };
            crate::service::serve(args.serve_addr, config)
        }
    }
}
