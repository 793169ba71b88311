//! `pdnet`: phantom generation, preprocessing, cross-validated training,
//! saliency maps and reports.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pdnet", version, about = "3D-CNN DaTSCAN classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic phantom datasets.
    Phantom {
        #[command(subcommand)]
        action: PhantomCommand,
    },
    /// Apply an `<no|int|max>_<u|w>` pipeline to every volume of a manifest.
    Preprocess(PreprocessArgs),
    /// Cross-validated training from a config file.
    Train(TrainArgs),
    /// Gradient saliency map of one volume.
    Saliency(SaliencyArgs),
    /// Merge run directories into a comparison table and plots.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum PhantomCommand {
    Generate(GenerateArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_control: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_pd: u64,
    #[arg(long)]
    pub seed: u64,
    /// Volume shape as DxHxW.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<[usize; 3]>,
}

#[derive(Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_tag)]
    pub tag: pdnet_core::PipelineTag,
    #[arg(long)]
    pub out: PathBuf,
    /// Registration matrices (`transforms.csv`); required by `_w` tags.
    #[arg(long)]
    pub transforms: Option<PathBuf>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub width_scale: Option<String>,
    #[arg(long)]
    pub input_shape: Option<String>,
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub folds: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long)]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<String>,
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub class_weighting: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub manifest: Option<String>,
    #[arg(long)]
    pub transforms: Option<String>,
}

impl TrainArgs {
    /// `(config key, flag value)` for every flag that was given.
    pub fn overrides(&self) -> Vec<(&'static str, &str)> {
        let flags = [
            ("model", &self.model),
            ("width_scale", &self.width_scale),
            ("input_shape", &self.input_shape),
            ("tag", &self.tag),
            ("loss", &self.loss),
            ("folds", &self.folds),
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("learning_rate", &self.learning_rate),
            ("optimizer", &self.optimizer),
            ("class_weighting", &self.class_weighting),
            ("seed", &self.seed),
            ("manifest", &self.manifest),
            ("transforms", &self.transforms),
        ];
        flags.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

#[derive(Args)]
pub struct SaliencyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub volume: PathBuf,
    /// Output category: 0 control, 1 PD.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub class: u8,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_shape(s: &str) -> Result<[usize; 3], String> {
    pdnet_core::io::config::parse_shape(s).map_err(|e| e.to_string())
}

fn parse_tag(s: &str) -> Result<pdnet_core::PipelineTag, String> {
    s.parse().map_err(|e: pdnet_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Phantom { action: PhantomCommand::Generate(a) } => commands::phantom_generate(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Train(a) => commands::train(a),
        Command::Saliency(a) => commands::saliency(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
