mod io;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mixedts::charfn::{mixedts_log_cf, CfGridSpec};
use mixedts::density::{mixedts_density_on, mixedts_grid_spec, DensityGrid};
use mixedts::estimation::{default_init, fit_vg, fit_vg_then_mixedts, FitOptions, FitResult, HistogramSpec};
use mixedts::garch::{garch_mixedts_pipeline, Innovations, PipelineOptions};
use mixedts::ica::{
    component_labels, fastica, ols_exposures, portfolio_grid_spec, reconstruct_portfolio_density, split_factors,
    write_matrix_csv, NormalNoise,
};
use mixedts::moments::{mixedts_cumulants, mixedts_kurtosis_product_form, mixedts_moments};
use mixedts::params::MixedTsParams;
use mixedts::sampling::sample_mixedts;
use mixedts::stats::sample_moments;

#[derive(Parser)]
#[command(name = "mixedts", version, about = "Mixed Tempered Stable densities, sampling and fitting")]
struct Cli {
    /// RNG seed for sampling, optimizer restarts and ICA initialization.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Number of FFT points (power of two).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Largest frequency of the FFT grid.
    #[arg(long, global = true)]
    grid_umax: Option<f64>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FitFlags {
    /// Histogram classes (default: ceil(sqrt(n))).
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha_max: f64,
    /// Perturbed optimizer restarts.
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    /// Objective evaluations per simplex run.
    #[arg(long, default_value_t = 3000)]
    max_evals: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum InnovationsArg {
    Mixedts,
    Vg,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the density and distribution function as `x,pdf,cdf` CSV.
    Density {
        #[arg(long)]
        params: PathBuf,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Half-width of the exported window in standard deviations.
        #[arg(long, default_value_t = 15.0)]
        window: f64,
    },
    /// Fit MixedTS (or VG) to a return series by histogram least squares.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Constrain to the Variance-Gamma family.
        #[arg(long)]
        vg: bool,
        #[command(flatten)]
        flags: FitFlags,
        /// Directory for `report.txt` and `fitted_density.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// GARCH(1,1) QMLE, then an innovation-law fit on the residuals.
    Garch {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "mixedts")]
        innovations: InnovationsArg,
        /// Fit the raw residuals instead of rescaling them to unit variance.
        #[arg(long)]
        no_standardize: bool,
        /// Subtract the sample mean before filtering.
        #[arg(long)]
        demean: bool,
        #[command(flatten)]
        flags: FitFlags,
        /// Directory for `report.txt` and `residuals.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ICA factors of a panel, exposures of a portfolio and its rebuilt density.
    Ica {
        /// One column per series.
        #[arg(long)]
        data: PathBuf,
        /// Portfolio return series.
        #[arg(long)]
        portfolio: PathBuf,
        /// Number of components treated as factors.
        #[arg(long, default_value_t = 4)]
        factors: usize,
        #[command(flatten)]
        flags: FitFlags,
        /// Directory for the model, ranking and density files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw MixedTS variates.
    Sample {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        count: usize,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form mean, variance, skewness and kurtosis.
    Moments {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Globals {
    seed: u64,
    grid_n: Option<usize>,
    grid_umax: Option<f64>,
}

impl Globals {
    fn fit_options(&self, f: &FitFlags) -> FitOptions {
        let mut o = FitOptions {
            alpha_min: f.alpha_min,
            alpha_max: f.alpha_max,
            restarts: f.restarts,
            max_evals: f.max_evals,
            seed: self.seed,
            grid_u_max: self.grid_umax,
            ..FitOptions::default()
        };
        if let Some(n) = self.grid_n {
            o.grid_n = n;
        }
        o
    }

    fn grid_for(&self, p: &MixedTsParams) -> Result<CfGridSpec> {
        let n = self.grid_n.unwrap_or(CfGridSpec::DEFAULT_N);
        let mut spec = mixedts_grid_spec(p, n)?;
        if self.grid_n.is_some() {
            spec.n = n;
        }
        if let Some(u) = self.grid_umax {
            spec.u_max = u;
        } else if self.grid_n.is_some() {
            let m = mixedts_moments(p);
            spec = CfGridSpec::auto(|u| mixedts_log_cf(u, p), m.mean, m.std_dev(), spec.half_width(), n)?;
        }
        Ok(spec.checked()?)
    }
}

fn histogram(data: &[f64], bins: Option<usize>) -> Result<HistogramSpec> {
    Ok(match bins {
        Some(k) => HistogramSpec::with_classes(data, k)?,
        None => HistogramSpec::for_sample(data)?,
    })
}

fn write_window(grid: &DensityGrid, out: &mut dyn Write, lo: f64, hi: f64) -> Result<()> {
    grid.write_csv(&mut *out, lo, hi)?;
    out.flush()?;
    Ok(())
}

fn cmd_density(g: &Globals, params: &Path, out: Option<&Path>, window: f64) -> Result<()> {
    let p: MixedTsParams = io::read_params(params)?;
    let grid = mixedts_density_on(&p, &g.grid_for(&p)?)?;
    let m = mixedts_moments(&p);
    let (lo, hi) = (m.mean - window * m.std_dev(), m.mean + window * m.std_dev());
    log::info!("grid of {} points, step {:.3e}, clipped mass {:.2e}", grid.len(), grid.dx, grid.clipped_mass);
    write_window(&grid, &mut *io::output(out)?, lo, hi)
}

fn fitted_density(g: &Globals, fit: &FitResult, data: &[f64], path: &Path) -> Result<()> {
    let grid = mixedts_density_on(&fit.params, &g.grid_for(&fit.params)?)?;
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    write_window(&grid, &mut *io::output(Some(path))?, lo, hi)
}

fn cmd_fit(g: &Globals, data: &Path, vg: bool, flags: &FitFlags, out: Option<&Path>) -> Result<()> {
    let x = io::read_series(data)?;
    let hist = histogram(&x, flags.bins)?;
    let init = default_init(&x)?;
    let opts = g.fit_options(flags);
    let fit = if vg { fit_vg(&x, &hist, &init, &opts)? } else { fit_vg_then_mixedts(&x, &hist, &init, &opts)?.1 };
    let report = fit.report();
    print!("{report}");
    if let Some(dir) = out {
        let dir = io::out_dir(dir)?;
        std::fs::write(dir.join("report.txt"), &report)?;
        fitted_density(g, &fit, &x, &dir.join("fitted_density.csv"))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_garch(
    g: &Globals,
    data: &Path,
    innovations: InnovationsArg,
    standardize: bool,
    demean: bool,
    flags: &FitFlags,
    out: Option<&Path>,
) -> Result<()> {
    let r = io::read_series(data)?;
    let opts = PipelineOptions {
        innovations: match innovations {
            InnovationsArg::Mixedts => Innovations::MixedTs,
            InnovationsArg::Vg => Innovations::Vg,
        },
        standardize,
        demean,
        bins: flags.bins,
        init: None,
        fit: g.fit_options(flags),
    };
    let (garch, fit) = garch_mixedts_pipeline(&r, &opts)?;
    let report = format!("{}\n{}", garch.report(), fit.report());
    print!("{report}");
    if let Some(dir) = out {
        let dir = io::out_dir(dir)?;
        std::fs::write(dir.join("report.txt"), &report)?;
        let mut w = io::output(Some(&dir.join("residuals.csv")))?;
        writeln!(w, "t,sigma,residual")?;
        for (t, (s, e)) in garch.sigmas.iter().zip(&garch.residuals).enumerate() {
            writeln!(w, "{},{s},{e}", t + 1)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_ica(g: &Globals, data: &Path, portfolio: &Path, l: usize, flags: &FitFlags, out: &Path) -> Result<()> {
    let (labels, x) = io::read_matrix(data)?;
    let r = io::read_series(portfolio)?;
    if r.len() != x.ncols() {
        bail!("{} has {} observations but {} has {}", portfolio.display(), r.len(), data.display(), x.ncols());
    }
    let n = x.nrows();
    if l == 0 || l > n {
        bail!("--factors must lie in 1..={n}");
    }
    let dir = io::out_dir(out)?;
    let model = fastica(&x, n, g.seed)?;
    let ols = ols_exposures(&r, &x)?;
    let split = split_factors(&model, &ols, l)?;
    let comps = component_labels(n);

    write_matrix_csv(io::output(Some(&dir.join("mixing.csv")))?, &model.mixing, &comps)?;
    write_matrix_csv(io::output(Some(&dir.join("unmixing.csv")))?, &model.unmixing, &labels)?;
    write_matrix_csv(io::output(Some(&dir.join("sources.csv")))?, &model.sources.transpose(), &comps)?;
    let mut jb = io::output(Some(&dir.join("jarque_bera.csv")))?;
    writeln!(jb, "component,jb,skewness,kurtosis,negentropy,role")?;
    for (i, j) in model.jarque_bera.iter().enumerate() {
        let role = if i < l { "factor" } else { "noise" };
        writeln!(jb, "{},{},{},{},{},{role}", comps[i], j.statistic, j.skewness, j.kurtosis, model.negentropy[i])?;
    }
    jb.flush()?;

    let opts = g.fit_options(flags);
    let mut fits = Vec::with_capacity(l);
    let mut report = format!("{:<13}{:.6}\n{:<13}{}\n", "R2", ols.r_squared, "converged", model.converged);
    for (i, f) in split.factor_rows().iter().enumerate() {
        log::info!("fitting factor {}", comps[i]);
        let hist = histogram(f, flags.bins)?;
        let (_, fit) = fit_vg_then_mixedts(f, &hist, &default_init(f)?, &opts)?;
        report.push_str(&format!("\n[{}] beta {:.6}\n{}", comps[i], split.beta_f[i], fit.report()));
        fits.push(fit.params);
    }
    std::fs::write(dir.join("report.txt"), &report)?;
    print!("{report}");

    let noise = NormalNoise::from_series(&split.noise_series())?;
    let mut spec = portfolio_grid_spec(&split, &fits, &noise, g.grid_n.unwrap_or(CfGridSpec::DEFAULT_N))?;
    if let Some(u) = g.grid_umax {
        spec.u_max = u;
    }
    let grid = reconstruct_portfolio_density(&split, &fits, &noise, &spec)?;
    let (lo, hi) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let pad = 0.25 * (hi - lo);
    write_window(&grid, &mut *io::output(Some(&dir.join("reconstruction.csv")))?, lo - pad, hi + pad)?;

    let m = sample_moments(&r)?;
    let mut w = io::output(Some(&dir.join("normal.csv")))?;
    writeln!(w, "x,pdf")?;
    let sd = m.std_dev();
    for x in grid.xs().filter(|&x| x >= lo - pad && x <= hi + pad) {
        let z = (x - m.mean) / sd;
        writeln!(w, "{x},{}", (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt()))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_sample(g: &Globals, params: &Path, count: usize, out: Option<&Path>) -> Result<()> {
    let p: MixedTsParams = io::read_params(params)?;
    if count == 0 {
        bail!("--count must be positive");
    }
    let batch = sample_mixedts(&p, count, g.seed)?;
    let mut w = io::output(out)?;
    batch.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_moments(params: &Path, out: Option<&Path>) -> Result<()> {
    let p: MixedTsParams = io::read_params(params)?;
    let m = mixedts_moments(&p);
    let c = mixedts_cumulants(&p);
    let mut w = io::output(out)?;
    writeln!(w, "mean={}\nvariance={}\nskewness={}\nkurtosis={}", m.mean, m.variance, m.skewness, m.kurtosis)?;
    writeln!(w, "kurtosis_product_form={}", mixedts_kurtosis_product_form(&p))?;
    for (i, k) in c.iter().enumerate() {
        writeln!(w, "c{}={k}", i + 1)?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = Globals { seed: cli.seed, grid_n: cli.grid_n, grid_umax: cli.grid_umax };
    match &cli.command {
        Command::Density { params, out, window } => cmd_density(&g, params, out.as_deref(), *window),
        Command::Fit { data, vg, flags, out } => cmd_fit(&g, data, *vg, flags, out.as_deref()),
        Command::Garch { data, innovations, no_standardize, demean, flags, out } => {
            cmd_garch(&g, data, *innovations, !no_standardize, *demean, flags, out.as_deref())
        }
        Command::Ica { data, portfolio, factors, flags, out } => cmd_ica(&g, data, portfolio, *factors, flags, out),
        Command::Sample { params, count, out } => cmd_sample(&g, params, *count, out.as_deref()),
        Command::Moments { params, out } => cmd_moments(params, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
