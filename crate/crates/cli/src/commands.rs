use crate::manifest::RunManifest;
use crate::{
    AnalyzeArgs, BuildModelArgs, Cli, Command, Convention, CrosscorrArgs, FitCommand, GeometryArgs,
    ModelArgs, NCommon, Sign, SimulateArgs, Stat, TheoryArgs, UnfoldArgs, Unit, UsageError,
};
use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use misslevel::estimators::{
    ensemble_spacings, min_length, number_variance, power_spectrum, rigidity, spacing_histogram,
    DeltaConvention,
};
use misslevel::fitting::{fit_phi, fit_xi};
use misslevel::io::{read_levels, read_sparameters, write_levels};
use misslevel::rmt::generate_ensemble;
use misslevel::spectra::{unfold_polynomial, unfold_weyl};
use misslevel::theory::{
    build_nth_neighbor_model, theory_curve, NthNeighborModel, TheoryCurve, TheoryParams,
};
use misslevel::{
    BilliardGeometry, EnsembleConfig, LevelSequence, LevelUnit, PerimeterSign, StatCurve,
    UnfoldedSpectrum,
};
use serde::Serialize;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(message.into()))
}

/// Library domain errors raised by flag values are usage errors.
fn flag_error(e: misslevel::Error) -> anyhow::Error {
    match e {
        misslevel::Error::Domain(m) => usage(m),
        other => other.into(),
    }
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let flags = serde_json::to_value(&cli.command)?;
    let (name, seed, outputs, manifest_path) = match &cli.command {
        Command::Simulate(a) => {
            let outputs = simulate(a)?;
            (
                "simulate",
                Some(a.seed),
                outputs,
                Some(a.out.join("manifest.json")),
            )
        }
        Command::Analyze(a) => {
            let outputs = analyze(a)?;
            ("analyze", None, outputs, Some(a.out.join("manifest.json")))
        }
        Command::Theory(a) => {
            let built = theory(a)?;
            let seed = built.then_some(a.model.model_seed);
            (
                "theory",
                seed,
                a.out.iter().cloned().collect(),
                a.out.as_deref().map(sidecar),
            )
        }
        Command::BuildModel(a) => {
            build_model(a)?;
            (
                "build-model",
                Some(a.seed),
                vec![a.out.clone()],
                Some(sidecar(&a.out)),
            )
        }
        Command::Fit(f) => {
            let out = fit(f)?;
            (
                "fit",
                None,
                out.iter().cloned().collect(),
                out.as_deref().map(sidecar),
            )
        }
        Command::Unfold(a) => {
            unfold(a)?;
            (
                "unfold",
                None,
                a.out.iter().cloned().collect(),
                a.out.as_deref().map(sidecar),
            )
        }
        Command::Crosscorr(a) => {
            crosscorr(a)?;
            (
                "crosscorr",
                None,
                a.out.iter().cloned().collect(),
                a.out.as_deref().map(sidecar),
            )
        }
        Command::Replay { manifest } => return replay(manifest),
    };
    if let Some(path) = manifest_path {
        RunManifest {
            subcommand: name.into(),
            argv,
            flags,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        }
        .write(&path)?;
    }
    Ok(())
}

/// Manifest path next to a single output file.
fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn replay(path: &Path) -> Result<()> {
    let manifest = RunManifest::read(path)?;
    let cli = Cli::try_parse_from(&manifest.argv)
        .map_err(|e| usage(format!("manifest argv does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(usage("a manifest cannot replay another replay"));
    }
    log::info!("replaying {}", manifest.argv.join(" "));
    run(cli, manifest.argv)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Writes through `f` to `path`, or to standard output when absent.
fn write_to(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    write_to(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let config = EnsembleConfig {
        n: a.n,
        count: a.count,
        xi: a.xi,
        phi: a.phi,
        bulk_fraction: a.bulk,
        seed: a.seed,
        unfolding: a.unfolding,
    };
    config.validate().map_err(flag_error)?;
    let spectra = generate_ensemble(&config)?;
    create_dir(&a.out)?;
    let mut outputs = Vec::with_capacity(spectra.len());
    for (i, s) in spectra.iter().enumerate() {
        let path = a.out.join(format!("r{i:04}.lvl"));
        let header = format!(
            "unfolded levels, realization {i}\nn={} xi={} phi={} bulk={} seed={} unfolding={:?}",
            a.n, a.xi, a.phi, a.bulk, a.seed, a.unfolding
        );
        let mut w = create(&path)?;
        write_levels(&mut w, s.values(), Some(&header))?;
        w.flush()?;
        outputs.push(path);
    }
    log::info!("wrote {} level files to {}", outputs.len(), a.out.display());
    Ok(outputs)
}

fn geometry(g: &GeometryArgs) -> Result<BilliardGeometry> {
    let (Some(area), Some(perimeter)) = (g.area, g.perimeter) else {
        return Err(usage("Weyl unfolding needs --area and --perimeter"));
    };
    let sign = match g.sign {
        Sign::Minus => PerimeterSign::Minus,
        Sign::Plus => PerimeterSign::Plus,
    };
    BilliardGeometry::new(area, perimeter, sign).map_err(flag_error)
}

/// Unfolds one level list as directed by the unit and geometry flags.
fn unfold_levels(values: Vec<f64>, unit: Unit, g: &GeometryArgs) -> Result<UnfoldedSpectrum> {
    if let Some(degree) = g.poly {
        if g.area.is_some() || g.perimeter.is_some() {
            return Err(usage(
                "--poly and Weyl geometry flags are mutually exclusive",
            ));
        }
        if unit == Unit::Unfolded {
            return Err(usage(
                "--poly makes no sense for levels that are already unfolded",
            ));
        }
        let unit = if unit == Unit::Ghz {
            LevelUnit::FrequencyGhz
        } else {
            LevelUnit::RawEigenvalue
        };
        return Ok(unfold_polynomial(
            &LevelSequence::new(values, unit)?,
            degree,
        )?);
    }
    match unit {
        Unit::Unfolded => {
            if g.area.is_some() || g.perimeter.is_some() {
                return Err(usage("geometry flags need --unit ghz"));
            }
            Ok(UnfoldedSpectrum::from_unfolded(values)?)
        }
        Unit::Raw => Err(usage("raw eigenvalues need --poly DEGREE")),
        Unit::Ghz => {
            let levels = LevelSequence::new(values, LevelUnit::FrequencyGhz)?;
            let mut geo = geometry(g)?;
            if g.calibrate {
                geo = geo.calibrated_to(levels.values()[0])?;
            }
            Ok(unfold_weyl(&levels, &geo)?)
        }
    }
}

fn read_level_file(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_levels(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn analyze(a: &AnalyzeArgs) -> Result<Vec<PathBuf>> {
    if !(a.nn_bin > 0.0) {
        return Err(usage(format!(
            "--nn-bin must be positive, got {}",
            a.nn_bin
        )));
    }
    let mut paths: Vec<PathBuf> = glob::glob(&a.input)
        .map_err(|e| usage(format!("bad glob '{}': {e}", a.input)))?
        .collect::<std::result::Result<_, _>>()?;
    paths.sort();
    if paths.is_empty() {
        bail!("no level files match '{}'", a.input);
    }
    let spectra = paths
        .iter()
        .map(|p| {
            unfold_levels(read_level_file(p)?, a.unit, &a.geometry)
                .with_context(|| format!("unfolding {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    log::info!("analyzing {} spectra", spectra.len());
    create_dir(&a.out)?;
    let mut stats = a.stats.clone();
    stats.dedup();
    let mut outputs = Vec::new();
    for stat in stats {
        let curve = match stat {
            Stat::Nn => spacing_histogram(&ensemble_spacings(&spectra, 1)?, a.nn_bin)?,
            Stat::Sigma2 => number_variance(&spectra, &a.lgrid.points())?,
            Stat::Delta3 => rigidity(&spectra, &a.lgrid.points())?,
            Stat::Power => {
                let shortest = min_length(&spectra);
                let n = match a.ncommon {
                    NCommon::Auto => shortest,
                    NCommon::Fixed(n) if n <= shortest => n,
                    NCommon::Fixed(n) => {
                        bail!("--ncommon {n} exceeds the shortest spectrum ({shortest} levels)")
                    }
                };
                let convention = match a.convention {
                    Convention::Detrended => DeltaConvention::Detrended,
                    Convention::Literal => DeltaConvention::Literal,
                };
                power_spectrum(&spectra, n, convention)?
            }
        };
        let path = a.out.join(format!("{stat}.csv"));
        write_curve(&path, &curve)?;
        outputs.push(path);
    }
    Ok(outputs)
}

fn write_curve(path: &Path, curve: &StatCurve) -> Result<()> {
    let mut w = create(path)?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn read_curve(path: &Path) -> Result<StatCurve> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    StatCurve::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn load_or_build_model(xi: f64, m: &ModelArgs) -> Result<(NthNeighborModel, bool)> {
    if let Some(path) = &m.model {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let model: NthNeighborModel =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if model.xi() != xi {
            return Err(usage(format!(
                "model was built for xi = {}, not {xi}",
                model.xi()
            )));
        }
        return Ok((model, false));
    }
    let config = EnsembleConfig::new(m.model_n, m.model_count, xi, 1.0, m.model_seed);
    config.validate().map_err(flag_error)?;
    log::warn!(
        "simulating {} matrices of {}x{} for the neighbour model; pass --model to reuse one",
        m.model_count,
        m.model_n,
        m.model_n
    );
    Ok((build_nth_neighbor_model(xi, &config)?, true))
}

/// Returns whether a neighbour model had to be simulated.
fn theory(a: &TheoryArgs) -> Result<bool> {
    let params = TheoryParams::new(a.xi, a.phi).map_err(flag_error)?;
    let needs_model = a.curve == TheoryCurve::Spacing && a.phi < 1.0;
    let model = if needs_model {
        Some(load_or_build_model(a.xi, &a.model)?)
    } else {
        None
    };
    let curve = theory_curve(
        a.curve,
        params,
        &a.grid.points(),
        model.as_ref().map(|m| &m.0),
    )
    .map_err(flag_error)?;
    write_to(a.out.as_deref(), |w| Ok(curve.write_csv(w)?))?;
    Ok(model.is_some_and(|m| m.1))
}

fn build_model(a: &BuildModelArgs) -> Result<()> {
    let config = EnsembleConfig::new(a.n, a.count, a.xi, 1.0, a.seed);
    config.validate().map_err(flag_error)?;
    let model = build_nth_neighbor_model(a.xi, &config).map_err(flag_error)?;
    write_json(Some(&a.out), &model)
}

#[derive(Serialize)]
struct FitReport<'a> {
    parameter: &'static str,
    input: &'a Path,
    /// The other parameter, held fixed.
    fixed: serde_json::Value,
    #[serde(flatten)]
    result: misslevel::fitting::FitResult,
}

fn fit(f: &FitCommand) -> Result<Option<PathBuf>> {
    match f {
        FitCommand::Phi {
            power,
            xi,
            window,
            out,
        } => {
            let curve = read_curve(power)?;
            let result = fit_phi(&curve, *xi, (window.0, window.1))?;
            let report = FitReport {
                parameter: "phi",
                input: power,
                fixed: serde_json::json!({ "xi": xi }),
                result,
            };
            write_json(out.as_deref(), &report)?;
            Ok(out.clone())
        }
        FitCommand::Xi {
            sigma2,
            phi,
            lrange,
            out,
        } => {
            let curve = read_curve(sigma2)?;
            let result = fit_xi(&curve, *phi, (lrange.0, lrange.1))?;
            let report = FitReport {
                parameter: "xi",
                input: sigma2,
                fixed: serde_json::json!({ "phi": phi }),
                result,
            };
            write_json(out.as_deref(), &report)?;
            Ok(out.clone())
        }
    }
}

fn unfold(a: &UnfoldArgs) -> Result<()> {
    let spectrum = unfold_levels(read_level_file(&a.input)?, a.unit, &a.geometry)?;
    let header = format!(
        "unfolded from {} ({:?}), mean spacing {:.4}",
        a.input.display(),
        spectrum.provenance(),
        spectrum.mean_spacing()
    );
    write_to(a.out.as_deref(), |w| {
        Ok(write_levels(w, spectrum.values(), Some(&header))?)
    })
}

fn crosscorr(a: &CrosscorrArgs) -> Result<()> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let trace = read_sparameters(BufReader::new(file))
        .with_context(|| format!("reading {}", a.input.display()))?;
    let windows = misslevel::spectra::cross_correlation(&trace, a.window)?;
    write_json(a.out.as_deref(), &windows)
}
