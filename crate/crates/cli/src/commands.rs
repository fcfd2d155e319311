//! One function per subcommand. Flag ranges are checked up front so a bad
//! invocation exits before any file is read or any matrix is built.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rqa_core::{
    detect_format as core_detect, embed, load_series, measures, render_plot, select_delay,
    select_dimension, CsvFormat, EmbeddingConfig, EpsilonPolicy, Generator, LoadOptions,
    Loaded, LorenzParams, PipelineParams, PixelStack, RenderFormat, SplitSpec, StudyReport,
    TestKind, ThresholdConfig, ThresholdMode, TimeSeries,
};

use crate::output::{atomic_write, measures_cells, sanitize_label};
use crate::provenance::Provenance;
use crate::{
    AnalyzeArgs, CliError, ComponentArg, EmbedOpts, EmbedParamsArgs, EviArgs, FormatArg,
    GenerateArgs, IoOpts, JraArgs, KindArg, LineOpts, PipelineArgs, RenderArgs, RenderFormatArg,
    ThresholdOpts, WindowArgs,
};

type CliResult<T = ()> = Result<T, CliError>;

// ---------------------------------------------------------------------
// flag resolution (usage errors name the flag)

fn resolve_threshold(opts: &ThresholdOpts) -> CliResult<ThresholdConfig> {
    if let Some(e) = opts.epsilon {
        if !e.is_finite() || e < 0.0 {
            return Err(CliError::usage(format!(
                "--epsilon must be a finite value >= 0, got {e}"
            )));
        }
        return Ok(ThresholdConfig::fixed(e, opts.norm.to_core())
            .expect("validated")
            .with_theiler(opts.theiler));
    }
    let target = opts.target_rr.unwrap_or(0.30);
    if !target.is_finite() || target <= 0.0 || target > 1.0 {
        return Err(CliError::usage(format!(
            "--target-rr must be in (0, 1], got {target}"
        )));
    }
    Ok(ThresholdConfig::target_rr(target, opts.norm.to_core())
        .expect("validated")
        .with_theiler(opts.theiler))
}

fn resolve_lines(opts: &LineOpts) -> CliResult<(usize, usize)> {
    if opts.lmin < 2 {
        return Err(CliError::usage(format!(
            "--lmin must be at least 2, got {}",
            opts.lmin
        )));
    }
    if opts.vmin < 2 {
        return Err(CliError::usage(format!(
            "--vmin must be at least 2, got {}",
            opts.vmin
        )));
    }
    Ok((opts.lmin, opts.vmin))
}

fn resolve_fixed_embedding(
    opts: &EmbedOpts,
    default_m: usize,
    default_tau: usize,
) -> CliResult<EmbeddingConfig> {
    let m = opts.embedding_dim.unwrap_or(default_m);
    let tau = opts.delay.unwrap_or(default_tau);
    if m < 1 {
        return Err(CliError::usage(format!(
            "--embedding-dim must be at least 1, got {m}"
        )));
    }
    if tau < 1 {
        return Err(CliError::usage(format!("--delay must be at least 1, got {tau}")));
    }
    Ok(EmbeddingConfig::new(m, tau).expect("validated"))
}

fn validate_embed_search(opts: &EmbedOpts) -> CliResult {
    if opts.max_lag < 1 {
        return Err(CliError::usage(format!(
            "--max-lag must be at least 1, got {}",
            opts.max_lag
        )));
    }
    if opts.bins == 1 {
        return Err(CliError::usage(
            "--bins must be 0 (Sturges) or at least 2, got 1",
        ));
    }
    if opts.m_max < 2 {
        return Err(CliError::usage(format!(
            "--m-max must be at least 2, got {}",
            opts.m_max
        )));
    }
    Ok(())
}

fn resolve_load_options(io: &IoOpts) -> CliResult<LoadOptions> {
    if let Some(s) = io.scale {
        if !s.is_finite() || s <= 0.0 {
            return Err(CliError::usage(format!(
                "--scale must be a finite value > 0, got {s}"
            )));
        }
    }
    Ok(LoadOptions {
        scale: io.scale,
        fill_missing: io.fill_missing,
    })
}

fn resolve_window(window_len: usize, step: usize, config: EmbeddingConfig) -> CliResult {
    let needed = (config.m() - 1) * config.tau() + 2;
    if window_len < needed {
        return Err(CliError::usage(format!(
            "--window-len must be at least {needed} for this embedding, got {window_len}"
        )));
    }
    if step < 1 {
        return Err(CliError::usage(format!(
            "--step must be at least 1, got {step}"
        )));
    }
    Ok(())
}

fn run_in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Data(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

// ---------------------------------------------------------------------
// input loading

fn load_any(path: &Path, io: &IoOpts) -> CliResult<Loaded> {
    let opts = resolve_load_options(io)?;
    let format = match io.format {
        FormatArg::Auto => core_detect(path)?,
        FormatArg::Single => CsvFormat::Single,
        FormatArg::Wide => CsvFormat::Wide,
        FormatArg::Long => CsvFormat::Long,
    };
    Ok(load_series(path, format, &opts)?)
}

fn load_single_series(path: &Path, io: &IoOpts) -> CliResult<TimeSeries> {
    match load_any(path, io)? {
        Loaded::Single(s) => Ok(s),
        Loaded::Stack(_) => Err(CliError::Data(format!(
            "{}: expected a single series (layout `time,value`), found a pixel stack",
            path.display()
        ))),
    }
}

// ---------------------------------------------------------------------
// provenance helpers

fn push_io(p: &mut Provenance, io: &IoOpts) {
    let format = match io.format {
        FormatArg::Auto => "auto",
        FormatArg::Single => "single",
        FormatArg::Wide => "wide",
        FormatArg::Long => "long",
    };
    p.push("format", format);
    p.push("scale", io.scale.unwrap_or(1.0));
    p.push("fill-missing", io.fill_missing);
}

fn push_threshold(p: &mut Provenance, opts: &ThresholdOpts, resolved: &ThresholdConfig) {
    match resolved.mode {
        ThresholdMode::FixedEpsilon(e) => {
            p.push("threshold-mode", "fixed-epsilon");
            p.push("epsilon", e);
        }
        ThresholdMode::TargetRr(t) => {
            p.push("threshold-mode", "target-rr");
            p.push("target-rr", t);
        }
    }
    p.push("norm", opts.norm.as_str());
    p.push("theiler", opts.theiler);
}

fn push_lines(p: &mut Provenance, lmin: usize, vmin: usize) {
    p.push("lmin", lmin);
    p.push("vmin", vmin);
}

fn push_embedding(p: &mut Provenance, opts: &EmbedOpts, effective: EmbeddingConfig) {
    p.push("embedding-dim", effective.m());
    p.push("delay", effective.tau());
    p.push("auto-embed", opts.auto_embed);
    p.push("max-lag", opts.max_lag);
    p.push("bins", opts.bins);
    p.push("m-max", opts.m_max);
}

// ---------------------------------------------------------------------
// output helpers

fn emit(path: Option<&PathBuf>, content: &str) -> CliResult {
    match path {
        Some(p) => atomic_write(p, content.as_bytes()),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn windowed_csv(prov: &Provenance, w: &rqa_core::WindowedMeasures) -> String {
    let mut out = prov.render();
    out.push_str("start_index,end_index,rr,det,lam,div,lmax\n");
    for (start, m) in &w.entries {
        let _ = writeln!(
            out,
            "{},{},{}",
            start,
            start + w.window_len - 1,
            measures_cells(m)
        );
    }
    out
}

// ---------------------------------------------------------------------
// generate

pub fn generate(args: &GenerateArgs) -> CliResult {
    if args.n < 2 {
        return Err(CliError::usage(format!(
            "--n must be at least 2, got {}",
            args.n
        )));
    }
    let initial = parse_triple(&args.initial)
        .ok_or_else(|| CliError::usage(format!("--initial must be \"x,y,z\", got {:?}", args.initial)))?;
    let generator = match args.kind {
        KindArg::Sine => {
            if !args.period.is_finite() || args.period <= 0.0 {
                return Err(CliError::usage(format!(
                    "--period must be positive, got {}",
                    args.period
                )));
            }
            Generator::Sine {
                period: args.period,
                phase: args.phase,
            }
        }
        KindArg::WhiteNoise => Generator::WhiteNoise,
        KindArg::Lorenz => {
            if !args.dt.is_finite() || args.dt <= 0.0 {
                return Err(CliError::usage(format!(
                    "--dt must be positive, got {}",
                    args.dt
                )));
            }
            if args.stride < 1 {
                return Err(CliError::usage(format!(
                    "--stride must be at least 1, got {}",
                    args.stride
                )));
            }
            Generator::Lorenz(LorenzParams {
                sigma: args.sigma,
                rho: args.rho,
                beta: args.beta,
                dt: args.dt,
                initial,
                transient_steps: args.transient,
                sample_stride: args.stride,
            })
        }
    };
    let series = generator.generate(args.n, args.seed)?;

    let mut prov = Provenance::new("generate");
    let kind = match args.kind {
        KindArg::Sine => "sine",
        KindArg::WhiteNoise => "white-noise",
        KindArg::Lorenz => "lorenz",
    };
    prov.push("kind", kind);
    prov.push("n", args.n);
    prov.push("seed", args.seed);
    prov.push("period", args.period);
    prov.push("phase", args.phase);
    prov.push("sigma", args.sigma);
    prov.push("rho", args.rho);
    prov.push("beta", args.beta);
    prov.push("dt", args.dt);
    prov.push("initial", &args.initial);
    prov.push("transient", args.transient);
    prov.push("stride", args.stride);
    let component = match args.component {
        ComponentArg::X => "x",
        ComponentArg::Y => "y",
        ComponentArg::Z => "z",
        ComponentArg::All => "all",
    };
    prov.push("component", component);
    prov.push("output", args.output.display());

    let mut out = prov.render();
    match (&generator, args.component) {
        (Generator::Lorenz(_), ComponentArg::All) => {
            out.push_str("time,pixel_x,pixel_y,pixel_z\n");
            let dt_days = series[0].dt_days();
            for i in 0..args.n {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    i as f64 * dt_days,
                    series[0].values()[i],
                    series[1].values()[i],
                    series[2].values()[i]
                );
            }
        }
        _ => {
            let s = match (&generator, args.component) {
                (Generator::Lorenz(_), ComponentArg::Y) => &series[1],
                (Generator::Lorenz(_), ComponentArg::Z) => &series[2],
                _ => &series[0],
            };
            out.push_str("time,value\n");
            for (i, v) in s.values().iter().enumerate() {
                let _ = writeln!(out, "{},{}", i as f64 * s.dt_days(), v);
            }
        }
    }
    atomic_write(&args.output, out.as_bytes())
}

fn parse_triple(s: &str) -> Option<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    (parts.len() == 3 && parts.iter().all(|v| v.is_finite()))
        .then(|| [parts[0], parts[1], parts[2]])
}

// ---------------------------------------------------------------------
// evi

pub fn evi(args: &EviArgs) -> CliResult {
    if let Some(s) = args.scale {
        if !s.is_finite() || s <= 0.0 {
            return Err(CliError::usage(format!(
                "--scale must be a finite value > 0, got {s}"
            )));
        }
    }
    let scale = args.scale.unwrap_or(1.0);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(&args.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?
        .iter()
        .map(|h| h.trim().to_lowercase())
        .collect();
    let (has_time, band_at) = match headers.as_slice() {
        [n, r, b] if n == "nir" && r == "red" && b == "blue" => (false, 0usize),
        [t, n, r, b] if t == "time" && n == "nir" && r == "red" && b == "blue" => (true, 1),
        _ => {
            return Err(CliError::Data(format!(
                "{}: expected header `nir,red,blue` or `time,nir,red,blue`, got {:?}",
                args.input.display(),
                headers
            )))
        }
    };

    let mut body = String::from("time,value\n");
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
        let row = idx + 2;
        if rec.len() != headers.len() {
            return Err(CliError::Data(format!(
                "{}: row {row}: expected {} columns, got {}",
                args.input.display(),
                headers.len(),
                rec.len()
            )));
        }
        let cell = |c: usize| -> CliResult<f64> {
            rec[c].trim().parse::<f64>().map_err(|_| {
                CliError::Data(format!(
                    "{}: row {row}, column {}: cannot parse {:?} as a number",
                    args.input.display(),
                    c + 1,
                    rec[c].trim()
                ))
            })
        };
        let time = if has_time {
            cell(0)?
        } else {
            idx as f64
        };
        let sample = rqa_core::BandSample::new(
            cell(band_at)? * scale,
            cell(band_at + 1)? * scale,
            cell(band_at + 2)? * scale,
        )
        .map_err(|e| CliError::Data(format!("{}: row {row}: {e}", args.input.display())))?;
        let value = rqa_core::compute_evi(sample)
            .map_err(|e| CliError::Data(format!("{}: row {row}: {e}", args.input.display())))?;
        let _ = writeln!(body, "{time},{value}");
    }

    let mut prov = Provenance::new("evi");
    prov.push("input", args.input.display());
    prov.push("scale", scale);
    prov.push_opt("output", args.output.as_ref().map(|p| p.display()));
    emit(args.output.as_ref(), &format!("{}{}", prov.render(), body))
}

// ---------------------------------------------------------------------
// embed-params

pub fn embed_params(args: &EmbedParamsArgs) -> CliResult {
    if args.max_lag < 1 {
        return Err(CliError::usage(format!(
            "--max-lag must be at least 1, got {}",
            args.max_lag
        )));
    }
    if args.bins == 1 {
        return Err(CliError::usage(
            "--bins must be 0 (Sturges) or at least 2, got 1",
        ));
    }
    if args.m_max < 2 {
        return Err(CliError::usage(format!(
            "--m-max must be at least 2, got {}",
            args.m_max
        )));
    }
    let series = load_single_series(&args.input, &args.io)?;
    let bins = if args.bins == 0 {
        rqa_core::embedding::sturges_bins(series.len())
    } else {
        args.bins
    };
    let (tau, mi_curve) = select_delay(&series, args.max_lag, bins)?;
    let (m, fnn) = select_dimension(&series, tau, args.m_max)?;

    let mut prov = Provenance::new("embed-params");
    prov.push("input", args.input.display());
    push_io(&mut prov, &args.io);
    prov.push("max-lag", args.max_lag);
    prov.push("bins", bins);
    prov.push("m-max", args.m_max);
    prov.push("selected-delay", tau);
    prov.push("selected-dimension", m);
    prov.push_opt("output", args.output.as_ref().map(|p| p.display()));

    let mut out = prov.render();
    out.push_str("kind,index,value\n");
    for (k, v) in mi_curve.iter().enumerate() {
        let _ = writeln!(out, "mi,{k},{v}");
    }
    for (i, v) in fnn.iter().enumerate() {
        let _ = writeln!(out, "fnn,{},{}", i + 1, v);
    }
    emit(args.output.as_ref(), &out)?;
    if args.output.is_some() {
        println!("delay={tau}\ndimension={m}");
    }
    Ok(())
}

// ---------------------------------------------------------------------
// analyze

/// Derive embedding parameters from a series: first MI minimum, then FNN
/// at that delay.
fn auto_embedding(series: &TimeSeries, opts: &EmbedOpts) -> CliResult<EmbeddingConfig> {
    let bins = if opts.bins == 0 {
        rqa_core::embedding::sturges_bins(series.len())
    } else {
        opts.bins
    };
    let max_lag = opts.max_lag.min(series.len() / 2 - 1).max(1);
    let (tau, _) = select_delay(series, max_lag, bins)?;
    let tau = tau.max(1);
    let (m, _) = select_dimension(series, tau, opts.m_max)?;
    Ok(EmbeddingConfig::new(m, tau).expect("selected values are positive"))
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult {
    let thr = resolve_threshold(&args.threshold)?;
    let (lmin, vmin) = resolve_lines(&args.lines)?;
    validate_embed_search(&args.embed)?;
    let fixed = resolve_fixed_embedding(&args.embed, 3, 1)?;
    let loaded = load_any(&args.input, &args.io)?;

    let config = if args.embed.auto_embed {
        let basis = match &loaded {
            Loaded::Single(s) => s.clone(),
            Loaded::Stack(stack) => stack.mean_series(),
        };
        auto_embedding(&basis, &args.embed)?
    } else {
        fixed
    };

    let policy = if args.shared_epsilon {
        EpsilonPolicy::Shared
    } else {
        EpsilonPolicy::PerPixel
    };
    let rows: Vec<(String, rqa_core::RqaMeasures)> = run_in_pool(args.workers, || match &loaded {
        Loaded::Single(s) => {
            let traj = embed(s, config)?;
            let rm = rqa_core::build_matrix(&traj, &thr)?;
            Ok(vec![(
                "series".to_string(),
                measures(&rm, lmin, vmin, thr.theiler)?,
            )])
        }
        Loaded::Stack(stack) => {
            rqa_core::study::per_pixel_measures_with(stack, config, &thr, lmin, vmin, policy)
        }
    })?
    .map_err(CliError::from)?;

    let mut prov = Provenance::new("analyze");
    prov.push("input", args.input.display());
    push_io(&mut prov, &args.io);
    push_embedding(&mut prov, &args.embed, config);
    push_threshold(&mut prov, &args.threshold, &thr);
    push_lines(&mut prov, lmin, vmin);
    prov.push("shared-epsilon", args.shared_epsilon);
    prov.push_opt("output", args.output.as_ref().map(|p| p.display()));

    let mut out = prov.render();
    out.push_str("pixel_id,rr,det,lam,div,lmax\n");
    for (id, m) in &rows {
        let _ = writeln!(out, "{},{}", id, measures_cells(m));
    }
    emit(args.output.as_ref(), &out)
}

// ---------------------------------------------------------------------
// window / jra

pub fn window(args: &WindowArgs) -> CliResult {
    let thr = resolve_threshold(&args.threshold)?;
    let (lmin, vmin) = resolve_lines(&args.lines)?;
    let config = resolve_fixed_embedding(&args.embed, 1, 1)?;
    if args.embed.auto_embed {
        return Err(CliError::usage(
            "--auto-embed is not available for sliding windows; pass --embedding-dim and --delay",
        ));
    }
    resolve_window(args.window_len, args.step, config)?;
    let series = load_single_series(&args.input, &args.io)?;
    let w = run_in_pool(args.workers, || {
        rqa_core::windowed_measures(
            &series,
            config,
            &thr,
            args.window_len,
            args.step,
            lmin,
            vmin,
        )
    })?
    .map_err(CliError::from)?;

    let mut prov = Provenance::new("window");
    prov.push("input", args.input.display());
    push_io(&mut prov, &args.io);
    push_embedding(&mut prov, &args.embed, config);
    push_threshold(&mut prov, &args.threshold, &thr);
    push_lines(&mut prov, lmin, vmin);
    prov.push("window-len", args.window_len);
    prov.push("step", args.step);
    prov.push_opt("output", args.output.as_ref().map(|p| p.display()));
    emit(args.output.as_ref(), &windowed_csv(&prov, &w))
}

pub fn jra(args: &JraArgs) -> CliResult {
    let thr = resolve_threshold(&args.threshold)?;
    let (lmin, vmin) = resolve_lines(&args.lines)?;
    let config = resolve_fixed_embedding(&args.embed, 1, 1)?;
    if args.embed.auto_embed {
        return Err(CliError::usage(
            "--auto-embed is not available for sliding windows; pass --embedding-dim and --delay",
        ));
    }
    resolve_window(args.window_len, args.step, config)?;
    let a = load_single_series(&args.series_a, &args.io)?;
    let b = load_single_series(&args.series_b, &args.io)?;
    let w = run_in_pool(args.workers, || {
        rqa_core::windowed_joint_measures(
            &a,
            &b,
            config,
            &thr,
            args.window_len,
            args.step,
            lmin,
            vmin,
        )
    })?
    .map_err(CliError::from)?;

    let mut prov = Provenance::new("jra");
    prov.push("series-a", args.series_a.display());
    prov.push("series-b", args.series_b.display());
    push_io(&mut prov, &args.io);
    push_embedding(&mut prov, &args.embed, config);
    push_threshold(&mut prov, &args.threshold, &thr);
    push_lines(&mut prov, lmin, vmin);
    prov.push("window-len", args.window_len);
    prov.push("step", args.step);
    prov.push_opt("output", args.output.as_ref().map(|p| p.display()));
    emit(args.output.as_ref(), &windowed_csv(&prov, &w))
}

// ---------------------------------------------------------------------
// render

pub fn render(args: &RenderArgs) -> CliResult {
    let thr = resolve_threshold(&args.threshold)?;
    let config = resolve_fixed_embedding(&args.embed, 3, 1)?;
    if args.embed.auto_embed {
        return Err(CliError::usage(
            "--auto-embed is not available for render; pass --embedding-dim and --delay",
        ));
    }
    let series = load_single_series(&args.input, &args.io)?;
    let traj = embed(&series, config)?;
    let rm = rqa_core::build_matrix(&traj, &thr)?;
    match args.plot_format {
        RenderFormatArg::Pgm => {
            let Some(path) = args.output.as_ref() else {
                return Err(CliError::usage(
                    "--output is required for PGM output (binary format)",
                ));
            };
            atomic_write(path, &render_plot(&rm, RenderFormat::Pgm))
        }
        RenderFormatArg::Ascii => {
            let bytes = render_plot(&rm, RenderFormat::Ascii);
            match args.output.as_ref() {
                Some(p) => atomic_write(p, &bytes),
                None => {
                    print!("{}", String::from_utf8_lossy(&bytes));
                    Ok(())
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// pipeline

fn parse_stack_flag(raw: &str) -> CliResult<(String, PathBuf)> {
    let (label, path) = raw.split_once('=').ok_or_else(|| {
        CliError::usage(format!("--stack must be label=path, got {raw:?}"))
    })?;
    if label.is_empty() {
        return Err(CliError::usage(format!(
            "--stack label must be non-empty in {raw:?}"
        )));
    }
    Ok((label.to_string(), PathBuf::from(path)))
}

fn parse_pair_flag(raw: &str) -> CliResult<(String, String)> {
    let (a, b) = raw
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("--pair must be labelA:labelB, got {raw:?}")))?;
    if a.is_empty() || b.is_empty() {
        return Err(CliError::usage(format!(
            "--pair labels must be non-empty in {raw:?}"
        )));
    }
    Ok((a.to_string(), b.to_string()))
}

fn load_stack(path: &Path, label: &str, io: &IoOpts) -> CliResult<PixelStack> {
    match load_any(path, io)? {
        Loaded::Stack(stack) => Ok(stack.with_group(label)),
        Loaded::Single(series) => {
            // a lone series becomes a one-pixel stack
            let mut map = BTreeMap::new();
            map.insert("series".to_string(), series);
            Ok(PixelStack::new(map, label)?)
        }
    }
}

pub fn pipeline(args: &PipelineArgs) -> CliResult {
    // all flag validation happens before any file is opened
    let thr = resolve_threshold(&args.threshold)?;
    let (lmin, vmin) = resolve_lines(&args.lines)?;
    resolve_load_options(&args.io)?;
    if args.split_pre_end >= args.split_post_start {
        return Err(CliError::usage(format!(
            "--split-pre-end ({}) must be below --split-post-start ({})",
            args.split_pre_end, args.split_post_start
        )));
    }
    let split = SplitSpec::new(args.split_pre_end, args.split_post_start).expect("validated");
    for (name, m, tau) in [
        ("--step1-dim/--step1-delay", args.step1_dim, args.step1_delay),
        ("--step2-dim/--step2-delay", args.step2_dim, args.step2_delay),
    ] {
        if m < 1 || tau < 1 {
            return Err(CliError::usage(format!(
                "{name} must both be at least 1, got {m} and {tau}"
            )));
        }
    }
    let full_embedding = EmbeddingConfig::new(args.step1_dim, args.step1_delay).expect("validated");
    let short_embedding =
        EmbeddingConfig::new(args.step2_dim, args.step2_delay).expect("validated");
    if args.window_lens.is_empty() {
        return Err(CliError::usage("--window-lens needs at least one length"));
    }
    for &len in &args.window_lens {
        resolve_window(len, args.step, short_embedding).map_err(|_| {
            CliError::usage(format!(
                "--window-lens entry {len} is too small for the step-2 embedding"
            ))
        })?;
        if args.step < 1 {
            return Err(CliError::usage("--step must be at least 1"));
        }
    }
    if args.profile_band < 1 {
        return Err(CliError::usage(format!(
            "--profile-band must be at least 1, got {}",
            args.profile_band
        )));
    }
    let mut stack_specs = Vec::new();
    for raw in &args.stacks {
        let parsed = parse_stack_flag(raw)?;
        if stack_specs.iter().any(|(l, _)| *l == parsed.0) {
            return Err(CliError::usage(format!(
                "--stack label {:?} given twice",
                parsed.0
            )));
        }
        stack_specs.push(parsed);
    }
    let mut pairs = Vec::new();
    for raw in &args.pairs {
        let pair = parse_pair_flag(raw)?;
        for side in [&pair.0, &pair.1] {
            if !stack_specs.iter().any(|(l, _)| l == side) {
                return Err(CliError::usage(format!(
                    "--pair references unknown stack label {side:?}"
                )));
            }
        }
        pairs.push(pair);
    }

    let mut stacks = BTreeMap::new();
    for (label, path) in &stack_specs {
        stacks.insert(label.clone(), load_stack(path, label, &args.io)?);
    }

    let mut params = PipelineParams::new(thr);
    params.full_embedding = full_embedding;
    params.short_embedding = short_embedding;
    params.lmin = lmin;
    params.vmin = vmin;
    params.window_lens = args.window_lens.clone();
    params.window_step = args.step;
    params.joint_pairs = pairs;
    params.profile_band = args.profile_band;
    params.epsilon_policy = if args.shared_epsilon {
        EpsilonPolicy::Shared
    } else {
        EpsilonPolicy::PerPixel
    };
    params.test_kind = if args.pooled {
        TestKind::Pooled
    } else {
        TestKind::Welch
    };

    let report = run_in_pool(args.workers, || {
        rqa_core::run_pipeline(&stacks, split, &params)
    })?
    .map_err(CliError::from)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| {
        CliError::Data(format!("{}: cannot create: {e}", args.out_dir.display()))
    })?;

    let mut prov = Provenance::new("pipeline");
    for (label, path) in &stack_specs {
        prov.push("stack", format!("{}={}", label, path.display()));
    }
    push_io(&mut prov, &args.io);
    prov.push("split-pre-end", args.split_pre_end);
    prov.push("split-post-start", args.split_post_start);
    prov.push(
        "window-lens",
        args.window_lens
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    prov.push("step", args.step);
    for (a, b) in &params.joint_pairs {
        prov.push("pair", format!("{a}:{b}"));
    }
    prov.push("step1-dim", args.step1_dim);
    prov.push("step1-delay", args.step1_delay);
    prov.push("step2-dim", args.step2_dim);
    prov.push("step2-delay", args.step2_delay);
    push_threshold(&mut prov, &args.threshold, &thr);
    push_lines(&mut prov, lmin, vmin);
    prov.push("profile-band", args.profile_band);
    prov.push("shared-epsilon", args.shared_epsilon);
    prov.push("pooled", args.pooled);
    prov.push("out-dir", args.out_dir.display());

    write_report(&args.out_dir, &prov, &report)
}

fn write_report(dir: &Path, prov: &Provenance, report: &StudyReport) -> CliResult {
    use rqa_core::Measure;

    // (a) per-pixel tables
    let mut out = prov.render();
    out.push_str("group,pixel_id,rr,det,lam,div,lmax\n");
    for (group, table) in &report.step1 {
        for (id, m) in &table.rows {
            let _ = writeln!(out, "{},{},{}", group, id, measures_cells(m));
        }
    }
    atomic_write(&dir.join("step1_per_pixel.csv"), out.as_bytes())?;

    let mut out = prov.render();
    out.push_str("group,pixel_id,rr,det,lam,div,lmax\n");
    for (group, tables) in &report.step2 {
        for (phase, table) in [("pre", &tables.pre), ("post", &tables.post)] {
            for (id, m) in &table.rows {
                let _ = writeln!(out, "{group}:{phase},{id},{}", measures_cells(m));
            }
        }
    }
    atomic_write(&dir.join("step2_per_pixel.csv"), out.as_bytes())?;

    // (b) summaries
    let mut out = prov.render();
    out.push_str("group,measure,mean,sd,n,excluded\n");
    let summary_row = |label: &str, summary: &rqa_core::GroupSummary, out: &mut String| {
        for measure in Measure::ALL {
            match summary.get(measure) {
                Some(s) => {
                    let sd = s.sd.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        label,
                        measure.as_str(),
                        s.mean,
                        sd,
                        s.n,
                        s.excluded
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{},{},NA,NA,0,{}",
                        label,
                        measure.as_str(),
                        summary.pixel_count
                    );
                }
            }
        }
    };
    for (group, table) in &report.step1 {
        summary_row(group, &table.summary, &mut out);
    }
    for (group, tables) in &report.step2 {
        summary_row(&format!("{group}:pre"), &tables.pre.summary, &mut out);
        summary_row(&format!("{group}:post"), &tables.post.summary, &mut out);
    }
    atomic_write(&dir.join("summary.csv"), out.as_bytes())?;

    // (c) t-tests
    let mut out = prov.render();
    out.push_str("measure,group_a,group_b,t,df,p\n");
    let mut warnings = String::new();
    for row in report.step1_tests.iter().chain(&report.step2_tests) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.measure.as_str(),
            row.group_a,
            row.group_b,
            row.result.t,
            row.result.df,
            row.result.p
        );
        if row.result.degenerate_variance {
            let _ = writeln!(
                warnings,
                "# warning: degenerate variance in {} {} vs {}",
                row.measure.as_str(),
                row.group_a,
                row.group_b
            );
        }
    }
    out.push_str(&warnings);
    atomic_write(&dir.join("ttests.csv"), out.as_bytes())?;

    // (d) windowed joint measures per pair and window length
    for jw in &report.joint_windows {
        let name = format!(
            "joint_{}__{}_w{}.csv",
            sanitize_label(&jw.pair.0),
            sanitize_label(&jw.pair.1),
            jw.window_len
        );
        atomic_write(&dir.join(name), windowed_csv(prov, &jw.windows).as_bytes())?;
    }

    // disruption profiles: joint pairs and single groups
    for pp in &report.joint_profiles {
        let mut out = prov.render();
        out.push_str("column_index,density\n");
        for (i, v) in pp.profile.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        let base = format!(
            "{}__{}",
            sanitize_label(&pp.pair.0),
            sanitize_label(&pp.pair.1)
        );
        atomic_write(&dir.join(format!("profile_joint_{base}.csv")), out.as_bytes())?;
        atomic_write(
            &dir.join(format!("rp_joint_{base}.pgm")),
            &render_plot(&pp.matrix, RenderFormat::Pgm),
        )?;
    }

    // (e) mean-series recurrence plots and their profiles
    for gp in &report.group_plots {
        let base = sanitize_label(&gp.group);
        let mut out = prov.render();
        out.push_str("column_index,density\n");
        for (i, v) in gp.profile.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        atomic_write(&dir.join(format!("profile_{base}.csv")), out.as_bytes())?;
        atomic_write(
            &dir.join(format!("rp_{base}.pgm")),
            &render_plot(&gp.matrix, RenderFormat::Pgm),
        )?;
    }
    Ok(())
}
