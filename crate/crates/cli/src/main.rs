use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use patchtex::classifier::{EnsembleModel, KernelKind, SvmParams};
use patchtex::experiment::{
    self, classify_image, report_render, ExperimentConfig, ExperimentReport, ReportFormat,
    DEFAULT_TILE_SIZE,
};
use patchtex::features::io::FeatureTable;
use patchtex::features::{Angle, Connectivity, Extractor, FeatureConfig};
use patchtex::imaging::{self, DEFAULT_PURITY};
use patchtex::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "patchtex", version, about = "Texture-feature SVM classification of CT image patches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut labeled patches from images and masks into a manifest directory.
    Patches {
        /// Grayscale image; repeat for several images.
        #[arg(long = "image", required = true)]
        images: Vec<PathBuf>,
        /// Label mask matching each --image (nonzero = infected).
        #[arg(long = "mask", required = true)]
        masks: Vec<PathBuf>,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = DEFAULT_PURITY)]
        purity: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract one feature family from a manifest into a CSV.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        extractor: Extractor,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate a feature CSV; writes report.json and fold models.
    Cv {
        #[arg(long)]
        features: PathBuf,
        /// Fold count; repeat for several.
        #[arg(long = "k", default_values_t = [10])]
        ks: Vec<usize>,
        /// Fold-assignment seed.
        #[arg(long)]
        seed: u64,
        /// Subset name in the report; defaults to the CSV file stem.
        #[arg(long)]
        subset: Option<String>,
        #[command(flatten)]
        svm: SvmArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label every tile of an image with a fold ensemble.
    Classify {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        ensemble: PathBuf,
        #[arg(long)]
        extractor: Extractor,
        #[arg(long, default_value_t = DEFAULT_TILE_SIZE)]
        patch_size: usize,
        /// Directory for predictions.csv and heatmap.pgm.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a report.json as Markdown or CSV.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Render without checking the referenced fold models.
        #[arg(long)]
        skip_model_check: bool,
    },
    /// Run a full experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct FeatureArgs {
    #[arg(long, default_value_t = 32)]
    levels: usize,
    /// GLCM pair distance.
    #[arg(long = "d", default_value_t = 1)]
    distance: usize,
    /// Direction in degrees: 0, 45, 90 or 135.
    #[arg(long, default_value_t = 0)]
    theta: u32,
    /// Zone connectivity: 4 or 8.
    #[arg(long, default_value_t = 8)]
    connectivity: u8,
}

impl FeatureArgs {
    fn config(&self) -> Result<FeatureConfig> {
        let cfg = FeatureConfig {
            levels: self.levels,
            distance: self.distance,
            theta: Angle::from_degrees(self.theta)?,
            connectivity: Connectivity::from_u8(self.connectivity)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SvmArgs {
    #[arg(long, default_value = "linear", value_parser = parse_kernel)]
    kernel: KernelKind,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// RBF width; defaults to 1 / number of features.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Seed for the solver's random pair choice.
    #[arg(long, default_value_t = 0)]
    svm_seed: u64,
}

impl SvmArgs {
    fn params(&self) -> SvmParams {
        SvmParams {
            kernel: self.kernel,
            gamma: self.gamma,
            c: self.c,
            tol: self.tol,
            seed: self.svm_seed,
            ..SvmParams::default()
        }
    }
}

fn parse_kernel(s: &str) -> std::result::Result<KernelKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "linear" => Ok(KernelKind::Linear),
        "rbf" => Ok(KernelKind::Rbf),
        _ => Err(format!("unknown kernel {s:?} (linear or rbf)")),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "subset".into())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Patches {
            images,
            masks,
            size,
            purity,
            out,
        } => {
            if images.len() != masks.len() {
                return Err(Error::Config(format!(
                    "{} --image but {} --mask",
                    images.len(),
                    masks.len()
                )));
            }
            let mut patches = Vec::new();
            for (img_path, mask_path) in images.iter().zip(&masks) {
                let img = imaging::load_gray_image(img_path)?;
                let mask = imaging::load_label_mask(mask_path)?;
                patches.extend(imaging::extract_patches(&img, &mask, size, purity, &file_stem(img_path))?);
            }
            let manifest = imaging::write_manifest(&patches, &out)?;
            let (pos, neg) = manifest.class_counts();
            println!(
                "{} patches ({pos} coronavirus, {neg} non-coronavirus) -> {}",
                manifest.entries.len(),
                out.display()
            );
        }
        Command::Features {
            manifest,
            extractor,
            features,
            out,
        } => {
            let config = features.config()?;
            let manifest = imaging::read_manifest(&manifest)?;
            let table = FeatureTable::from_manifest(&manifest, extractor, &config)?;
            table.write_csv(&out)?;
            println!("{} rows x {} {extractor} features -> {}", table.rows.len(), table.dim(), out.display());
        }
        Command::Cv {
            features,
            ks,
            seed,
            subset,
            svm,
            out,
        } => {
            let subset = subset.unwrap_or_else(|| file_stem(&features));
            let report = experiment::run_cv(&subset, &features, &ks, &svm.params(), seed, &out)?;
            print!("{}", report_render(&report, ReportFormat::Markdown)?);
        }
        Command::Classify {
            image,
            ensemble,
            extractor,
            patch_size,
            out,
        } => {
            let img = imaging::load_gray_image(&image)?;
            let ens = EnsembleModel::load(&ensemble)?;
            let result = classify_image(&img, patch_size, &ens, extractor, None)?;
            let (csv, pgm) = result.write(&out)?;
            println!(
                "{} of {} patches infected -> {}, {}",
                result.positive_count(),
                result.predictions.len(),
                csv.display(),
                pgm.display()
            );
        }
        Command::Report {
            input,
            format,
            out,
            skip_model_check,
        } => {
            let report = ExperimentReport::load(&input)?;
            if !skip_model_check {
                report.verify_models(input.parent().unwrap_or(Path::new("")))?;
            }
            let text = report_render(&report, format)?;
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?,
                None => print!("{text}"),
            }
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = experiment::run_experiment(&cfg)?;
            println!(
                "{} cells -> {}",
                report.rows.len(),
                cfg.output_dir.join(experiment::REPORT_FILE).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            })
        }
    }
}
