//! `faceness`: generate synthetic scenes, fit part configurations, re-rank
//! proposals, localize parts, and evaluate rankings.

mod commands;
mod settings;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faceness::{Channel, CombineMode, FusionRule};

use commands::{CliError, CliResult, GroundTruth};
use settings::{parse_channel, RunSettings};

#[derive(Debug, Parser)]
#[command(
    name = "faceness",
    version,
    about = "Face proposal re-ranking by part faceness"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Run-settings JSON (same schema as --show-config output)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Lambda grid points per split parameter
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, global = true)]
    iou: Option<f64>,
    /// Box NMS IoU threshold applied after re-ranking (default 0.5), or `off`
    #[arg(long, global = true, value_name = "IOU|off", value_parser = parse_nms)]
    nms: Option<NmsArg>,
    /// Comma-separated part channels
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_channel)]
    parts: Option<Vec<Channel>>,
    /// Print the resolved settings block and exit
    #[arg(long, global = true)]
    show_config: bool,
}

#[derive(Debug, Clone, Copy)]
struct NmsArg(Option<f64>);

fn parse_nms(s: &str) -> Result<NmsArg, String> {
    match s {
        "off" | "none" => Ok(NmsArg(None)),
        v => v
            .parse()
            .map(|t| NmsArg(Some(t)))
            .map_err(|e| format!("{v}: {e}")),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Arith,
    Geo,
}

impl From<ModeArg> for CombineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Arith => CombineMode::ArithMean,
            ModeArg::Geo => CombineMode::GeoMean,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    Mean,
    Max,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene directory
    Gen {
        /// Scene spec JSON; the default spec when omitted
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit part configurations on one or more scene directories
    Fit {
        scenes: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-part grid diagnostics next to the config
        #[arg(long)]
        grid_dump: bool,
    },
    /// Re-rank a scene's proposals with a fitted config
    Rank {
        scene: PathBuf,
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Localize parts on one partness map
    Parts {
        pmap: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        radius: Option<usize>,
        #[arg(long)]
        threshold: Option<f32>,
        #[arg(long)]
        box_w: Option<usize>,
        #[arg(long)]
        box_h: Option<usize>,
    },
    /// Evaluate a ranked list against ground truth
    Eval {
        ranked: PathBuf,
        #[arg(
            long,
            conflicts_with = "ellipses",
            required_unless_present = "ellipses"
        )]
        gt: Option<PathBuf>,
        /// Ellipse annotations, converted to their bounding boxes
        #[arg(long)]
        ellipses: Option<PathBuf>,
        /// Output directory for report.json, dr_curve.csv and pr_curve.csv
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated proposal counts for the detection-rate table
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
    },
    /// Prepare refinement labels and box targets
    Targets {
        proposals: PathBuf,
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fuse part maps into one face map
    Fuse {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "mean")]
        rule: RuleArg,
    },
}

fn resolve(g: &GlobalArgs) -> CliResult<RunSettings> {
    let mut s = match &g.config {
        Some(p) => RunSettings::read(p)?,
        None => RunSettings::default(),
    };
    if let Some(v) = g.seed {
        s.seed = v;
    }
    if let Some(v) = g.grid {
        s.grid = v;
    }
    if let Some(v) = g.epsilon {
        s.epsilon = v;
    }
    if let Some(v) = g.mode {
        s.mode = v.into();
    }
    if let Some(v) = g.iou {
        s.iou = v;
    }
    if let Some(NmsArg(v)) = g.nms {
        s.nms = v;
    }
    if let Some(v) = &g.parts {
        s.parts = v.clone();
    }
    s.validate()?;
    Ok(s)
}

fn run(cli: Cli) -> CliResult<String> {
    let mut settings = resolve(&cli.global)?;
    if cli.global.show_config {
        return serde_json::to_string_pretty(&settings).map_err(|e| CliError::Core(e.into()));
    }
    let Some(command) = cli.command else {
        return Err(CliError::Usage("no subcommand given (see --help)".into()));
    };
    match command {
        Command::Gen { spec, out } => commands::cmd_gen(spec.as_deref(), &out, cli.global.seed),
        Command::Fit {
            scenes,
            out,
            grid_dump,
        } => commands::cmd_fit(&scenes, &out, &settings, grid_dump),
        Command::Rank { scene, model, out } => commands::cmd_rank(
            &scene,
            &model,
            &out,
            &settings,
            cli.global.mode.map(Into::into),
        ),
        Command::Parts {
            pmap,
            out,
            radius,
            threshold,
            box_w,
            box_h,
        } => {
            let mut p = settings.part_nms;
            if let Some(r) = radius {
                p.radius = r;
            }
            p.threshold = threshold.or(p.threshold);
            p.box_w = box_w.or(p.box_w);
            p.box_h = box_h.or(p.box_h);
            if p.radius == 0 {
                return Err(CliError::Usage("--radius must be >= 1".into()));
            }
            commands::cmd_parts(&pmap, &out, &p)
        }
        Command::Eval {
            ranked,
            gt,
            ellipses,
            out,
            n,
        } => {
            if let Some(n) = n {
                settings.n_values = n;
                settings.validate()?;
            }
            let source = match (&gt, &ellipses) {
                (Some(p), _) => GroundTruth::Boxes(p),
                (None, Some(p)) => GroundTruth::Ellipses(p),
                (None, None) => unreachable!("clap requires one ground-truth source"),
            };
            commands::cmd_eval(&ranked, source, &out, &settings)
        }
        Command::Targets { proposals, gt, out } => commands::cmd_targets(&proposals, &gt, &out),
        Command::Fuse { inputs, out, rule } => {
            let rule = match rule {
                RuleArg::Mean => FusionRule::Mean,
                RuleArg::Max => FusionRule::Max,
            };
            commands::cmd_fuse(&inputs, &out, rule)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            let _ = writeln!(std::io::stdout(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({
                "error": e.kind(),
                "message": e.message(),
            });
            let _ = writeln!(std::io::stderr(), "{line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
