//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::fire::{KdeParams, ThresholdMode};
use crate::impact::{summarize, ExposureMode};
use crate::io::{self, Feature, Geometry, Manifest, RenderLayers};
use crate::pipeline::{self, AssessOptions};
use crate::synth::{generate, ScenarioSpec};

pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "blazemap", version, about = "Daily wildfire extents, population exposure and losses")]
pub struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic scenario with ground truth.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Daily new-burn perimeters as GeoJSON plus mask grids.
    Perimeters {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        kde: KdeArgs,
    },
    /// Downscale block populations to the analysis grid.
    Downscale {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Daily loss and exposure report.
    Assess {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        kde: KdeArgs,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        costs: Option<PathBuf>,
        /// Count exposure over each day's full burning extent instead of new burn only.
        #[arg(long)]
        active_extent: bool,
        /// Also write running totals to report_cumulative.csv.
        #[arg(long)]
        cumulative_report: bool,
    },
    /// SVG map of population, daily perimeters and districts.
    Render {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        kde: KdeArgs,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Print totals, peaks and compositions from <out>/report.csv.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ThresholdModeArg {
    Relative,
    Absolute,
}

#[derive(Debug, Args)]
pub struct KdeArgs {
    #[arg(long)]
    pub bandwidth_m: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub threshold_mode: Option<ThresholdModeArg>,
    #[arg(long)]
    pub frp_weighted: bool,
}

impl KdeArgs {
    pub fn apply(&self, mut p: KdeParams) -> Result<KdeParams> {
        if let Some(b) = self.bandwidth_m {
            p.bandwidth_m = b;
        }
        if let Some(m) = self.threshold_mode {
            p.threshold_mode = match m {
                ThresholdModeArg::Relative => ThresholdMode::RelativeToDailyMax,
                ThresholdModeArg::Absolute => ThresholdMode::Absolute,
            };
        }
        if let Some(t) = self.threshold {
            p.threshold_value = t;
        }
        p.frp_weighted |= self.frp_weighted;
        p.validate()?;
        Ok(p)
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(run: &RunArgs) -> Result<Manifest> {
    Manifest::load(&run.manifest)
}

pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Synth { seed, out } => {
            let (_, truth) = generate(&ScenarioSpec::demo(*seed), out)?;
            log::info!("wrote scenario with {} ground-truth rows to {}", truth.rows.len(), out.display());
            Ok(0)
        }
        Command::Perimeters { run, kde } => {
            let m = load(run)?;
            let params = kde.apply(pipeline::kde_params(&m))?;
            let perims = pipeline::run_perimeters(&m, &params)?;
            write_perimeters(&perims, &m, &run.out)?;
            Ok(0)
        }
        Command::Downscale { run, weights } => {
            let m = load(run)?;
            let w = pipeline::load_weights(&m, weights.as_deref())?;
            let d = pipeline::run_downscale(&m, &w)?;
            io::write_real_grid(&d.population.raster, &run.out.join("population.asc"))?;
            io::write_mass_report(&d.mass, &run.out.join("mass_report.csv"))?;
            log::info!(
                "{} blocks, max relative mass error {:e}, {} fallbacks",
                d.blocks.len(),
                d.mass.max_rel_error(),
                d.mass.fallback_count()
            );
            if d.mass.is_ok() {
                Ok(0)
            } else {
                let n = d.mass.failures().count();
                Err(Error::Validation(format!("{n} blocks violate mass preservation")))
            }
        }
        Command::Assess {
            run,
            kde,
            weights,
            costs,
            active_extent,
            cumulative_report,
        } => {
            let m = load(run)?;
            let params = kde.apply(pipeline::kde_params(&m))?;
            let w = pipeline::load_weights(&m, weights.as_deref())?;
            let c = pipeline::load_costs(&m, costs.as_deref())?;
            let perims = pipeline::run_perimeters(&m, &params)?;
            let pop = pipeline::run_downscale(&m, &w)?;
            let opts = AssessOptions {
                exposure: if *active_extent { ExposureMode::ActiveExtent } else { ExposureMode::NewBurn },
            };
            let records = pipeline::run_assess(&perims, &pop, &m, &c, opts)?;
            io::write_report(&records, &run.out.join("report.csv"))?;
            if *cumulative_report {
                io::write_report(&pipeline::cumulative_records(&records), &run.out.join("report_cumulative.csv"))?;
            }
            Ok(0)
        }
        Command::Render { run, kde, weights } => {
            let m = load(run)?;
            let params = kde.apply(pipeline::kde_params(&m))?;
            let w = pipeline::load_weights(&m, weights.as_deref())?;
            let perims = pipeline::run_perimeters(&m, &params)?;
            let pop = pipeline::run_downscale(&m, &w)?;
            let layers = RenderLayers {
                population: Some(&pop.population.raster),
                perimeters: Some(&perims.days),
                districts: Some(&perims.districts),
            };
            io::write_svg(&run.out.join("map.svg"), &perims.grid, &layers)?;
            Ok(0)
        }
        Command::Report { out } => {
            let records = io::read_report(&out.join("report.csv"))?;
            let summary = summarize(&records)?;
            write!(stdout, "{summary}").map_err(|e| Error::io(Path::new("<stdout>"), e))?;
            Ok(0)
        }
    }
}

/// `<out>/perimeters/<date>.geojson` with one feature per district that
/// burned that day, plus `<date>.new_burn.asc`, `<date>.active.asc` and
/// `<date>.cumulative.asc`.
pub fn write_perimeters(perims: &pipeline::PerimeterRun, m: &Manifest, out: &Path) -> Result<()> {
    let dir = out.join("perimeters");
    for (k, day) in perims.days.iter().enumerate() {
        let mut features = Vec::new();
        for (d, district) in perims.districts.iter().enumerate() {
            let polys = perims.district_polygons(d, k)?;
            if polys.is_empty() {
                continue;
            }
            let cells = day.new_burn.indices().filter(|&i| perims.masks[d].bits[i]).count();
            features.push(
                Feature::new(Geometry::MultiPolygon(polys))
                    .with("district", district.name.as_str())
                    .with("date", day.date.to_string())
                    .with("new_burn_cells", cells),
            );
        }
        io::write_vector(&dir.join(format!("{}.geojson", day.date)), &features, m.frame())?;
        io::write_mask_grid(&day.new_burn, &dir.join(format!("{}.new_burn.asc", day.date)))?;
        io::write_mask_grid(&day.active, &dir.join(format!("{}.active.asc", day.date)))?;
        io::write_mask_grid(&day.cumulative, &dir.join(format!("{}.cumulative.asc", day.date)))?;
    }
    Ok(())
}
