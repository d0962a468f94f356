//! The four pipelines. Each validates all parameters before reading data or
//! computing anything, writes its outputs atomically and leaves a
//! `.provenance` sidecar that `--config` accepts for an exact rerun.

use std::path::{Path, PathBuf};

use dfakit_core::experiments::{
    alpha_vs_length_study, crossover_calibration_study, scatter_csv, scatter_pairs_csv,
    trend_crossover_study,
};
use dfakit_core::io::{
    curve_to_csv, fmt_f64, parse_curve_csv, read_csv_column, read_series_text, series_to_text,
    write_atomic,
};
use dfakit_core::scaling::{
    fixed_lower_range, fixed_width_range, CrossoverSearch, DetectionCriteria,
};
use dfakit_core::{
    add_trend, default_scale_grid, downsample, fit_alpha, fluctuation_curve, generate_crossover,
    generate_power_law, shuffle_boxes, CrossoverDetection, CrossoverSpec, GeneratorSpec, Method,
    ScaleGrid, Series, TrendSpec,
};

use crate::config::{parse_derived, Params};
use crate::error::CliError;

/// Offset separating the box-shuffling stream from the generator stream.
const SHUFFLE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn run(params: Params) -> Result<(), CliError> {
    match params.command {
        "generate" => generate(params),
        "analyze" => analyze(params),
        "fit" => fit(params),
        "study" => study(params),
        other => Err(CliError::Usage(format!("unknown subcommand {other}"))),
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance");
    PathBuf::from(s)
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn method_from(p: &Params, method_key: &str) -> Result<Method, CliError> {
    let name: String = p.require(method_key)?;
    let m = match p.get::<usize>("order")? {
        Some(order) => Method::from_parts(&name, Some(order)),
        None => name.parse(),
    }
    .map_err(CliError::usage)?;
    m.validate().map_err(CliError::usage)?;
    Ok(m)
}

fn parse_methods(p: &Params, key: &str) -> Result<Vec<Method>, CliError> {
    let names: Vec<String> = p.list(key)?.unwrap_or_default();
    if names.is_empty() {
        return Err(CliError::Usage(format!("--{key} lists no methods")));
    }
    names
        .iter()
        .map(|n| {
            let m: Method = n.parse().map_err(CliError::usage)?;
            m.validate().map_err(CliError::usage)?;
            Ok(m)
        })
        .collect()
}

fn generate(mut p: Params) -> Result<(), CliError> {
    let n: usize = p.require("n")?;
    let alpha: f64 = p.require("alpha")?;
    let seed: u64 = p.require("seed")?;
    let out: PathBuf = p.require("out")?;
    let normalize = !p.switch("no-normalize")?;
    let crossover = match (p.get::<f64>("alpha2")?, p.get::<usize>("s-cross")?) {
        (Some(alpha2), Some(s_cross)) => {
            if !normalize {
                return Err(CliError::Usage(
                    "crossover surrogates are always normalized".into(),
                ));
            }
            let spec = CrossoverSpec {
                length: n,
                alpha1: alpha,
                alpha2,
                s_cross,
                seed,
            };
            spec.validate().map_err(CliError::usage)?;
            Some(spec)
        }
        (None, None) => None,
        _ => return Err(CliError::Usage("--alpha2 and --s-cross go together".into())),
    };
    let single = GeneratorSpec {
        length: n,
        alpha,
        seed,
        normalize,
    };
    if crossover.is_none() {
        single.validate().map_err(CliError::usage)?;
    }
    let trend = TrendSpec {
        amplitude: p.require("trend-amplitude")?,
        exponent: p.require("trend-exponent")?,
    };
    trend.validate().map_err(CliError::usage)?;
    let shuffle: Option<usize> = p.get("shuffle-box")?;
    if let Some(b) = shuffle {
        if b < 1 || b > n {
            return Err(CliError::Usage(format!(
                "--shuffle-box must lie in [1, {n}] (got {b})"
            )));
        }
        p.derive("shuffle-seed", seed.wrapping_add(SHUFFLE_STREAM));
    }
    let factor: Option<usize> = p.get("downsample")?;
    if let Some(k) = factor {
        if k < 1 || k > n {
            return Err(CliError::Usage(format!(
                "--downsample must lie in [1, {n}] (got {k})"
            )));
        }
    }

    let mut x = match &crossover {
        Some(spec) => generate_crossover(spec)?,
        None => generate_power_law(&single)?,
    };
    if trend.amplitude != 0.0 {
        x = add_trend(&x, &trend)?;
    }
    if let Some(b) = shuffle {
        x = shuffle_boxes(&x, b, seed.wrapping_add(SHUFFLE_STREAM))?;
    }
    if let Some(k) = factor {
        x = downsample(&x, k)?;
    }
    p.derive("length", x.len());
    let header = vec![format!(
        "dfakit generate: n = {n}, alpha = {alpha}, seed = {seed}"
    )];
    write_output(&out, &series_to_text(&x, &header))?;
    write_output(&sidecar_path(&out), &p.provenance())
}

enum ScaleSpec {
    Default,
    Window(usize, usize),
    List(Vec<usize>),
}

fn parse_scales(p: &Params) -> Result<ScaleSpec, CliError> {
    let Some(raw) = p.raw("scales") else {
        return Ok(ScaleSpec::Default);
    };
    if let Some((lo, hi)) = raw.split_once(':') {
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("--scales: bad bound `{v}`")))
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if lo >= hi {
            return Err(CliError::Usage(format!("--scales: empty window {lo}:{hi}")));
        }
        return Ok(ScaleSpec::Window(lo, hi));
    }
    let list: Vec<usize> = p.list("scales")?.unwrap_or_default();
    ScaleGrid::new(list.clone()).map_err(CliError::usage)?;
    Ok(ScaleSpec::List(list))
}

fn build_grid(spec: &ScaleSpec, n: usize, m: Method) -> Result<ScaleGrid, CliError> {
    Ok(match spec {
        ScaleSpec::Default => default_scale_grid(n, m)?,
        ScaleSpec::Window(lo, hi) => {
            let kept: Vec<usize> = default_scale_grid(n, m)?
                .scales()
                .iter()
                .copied()
                .filter(|s| (lo..=hi).contains(&s))
                .collect();
            if kept.len() < 2 {
                return Err(CliError::Compute(format!(
                    "only {} default scales fall inside {lo}:{hi}",
                    kept.len()
                )));
            }
            ScaleGrid::new(kept)?
        }
        ScaleSpec::List(list) => {
            let grid = ScaleGrid::new(list.clone())?;
            grid.validate_for(n, m)?;
            grid
        }
    })
}

fn read_input(path: &Path, column: Option<&str>) -> Result<Series, CliError> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let res = if column.is_some() || is_csv {
        read_csv_column(path, column)
    } else {
        read_series_text(path)
    };
    res.map_err(|e| match e {
        // the I/O text already names the file
        dfakit_core::Error::Io(_) => CliError::Io(e.to_string()),
        dfakit_core::Error::Parse(_) => CliError::Io(format!("{}: {e}", path.display())),
        other => CliError::Compute(format!("{}: {other}", path.display())),
    })
}

fn analyze(mut p: Params) -> Result<(), CliError> {
    let inputs: Vec<PathBuf> = p.list("input")?.unwrap_or_default();
    if inputs.is_empty() {
        return Err(CliError::Usage("analyze: --input is required".into()));
    }
    let method = method_from(&p, "method")?;
    let scales = parse_scales(&p)?;
    let out: PathBuf = p.require("out")?;
    let column = p.raw("column").map(str::to_string);

    let series = inputs
        .iter()
        .map(|path| read_input(path, column.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    let n = series[0].len();
    let grid = build_grid(&scales, n, method)?;
    let curve = fluctuation_curve(&series, method, &grid)?;

    let size = series
        .iter()
        .flat_map(|s| s.values())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if curve.values.iter().all(|&f| f <= 1e-10 * size) {
        eprintln!(
            "dfakit: warning: F(s) vanishes at every scale; the profile lies in the \
             detrending space of {method} (constant or polynomial input)"
        );
    }
    p.derive("length", n);
    p.derive("ensemble-size", series.len());
    p.derive("method-resolved", method);
    write_output(&out, &curve_to_csv(&curve))?;
    write_output(&sidecar_path(&out), &p.provenance())
}

/// Crossover search from the shared keys, with defaults for series length `n`.
fn search_from(p: &mut Params, n: usize) -> Result<CrossoverSearch, CliError> {
    let base = CrossoverSearch::for_length(n);
    let defaults = DetectionCriteria::default();
    p.default_to("search-lo", base.lo.to_string());
    p.default_to("search-hi", base.hi.to_string());
    p.default_to("min-improvement", defaults.min_improvement.to_string());
    p.default_to("min-slope-change", defaults.min_slope_change.to_string());
    let tracking = if p.switch("no-tracking")? {
        if p.is_set("tracking") {
            return Err(CliError::Usage(
                "--tracking and --no-tracking exclude each other".into(),
            ));
        }
        None
    } else {
        p.default_to("tracking", base.tracking.unwrap_or(10.0).to_string());
        Some(p.require::<f64>("tracking")?)
    };
    let search = CrossoverSearch {
        lo: p.require("search-lo")?,
        hi: p.require("search-hi")?,
        tracking,
        criteria: DetectionCriteria {
            min_improvement: p.require("min-improvement")?,
            min_slope_change: p.require("min-slope-change")?,
        },
    };
    search.validate().map_err(CliError::usage)?;
    Ok(search)
}

const CROSSOVER_KEYS: [&str; 6] = [
    "search-lo",
    "search-hi",
    "min-improvement",
    "min-slope-change",
    "tracking",
    "no-tracking",
];

fn fit(mut p: Params) -> Result<(), CliError> {
    let input: PathBuf = p.require("input")?;
    // method and length default to what `analyze` recorded next to the curve
    let side = std::fs::read_to_string(sidecar_path(&input)).ok();
    let side_derived = side.as_deref().map(parse_derived).unwrap_or_default();
    if !p.is_set("method") {
        match side_derived.get("method-resolved") {
            Some(m) => p.default_to("method", m.clone()),
            None => {
                return Err(CliError::Usage(
                    "fit: --method is required (no provenance next to the input)".into(),
                ))
            }
        }
    }
    let method = method_from(&p, "method")?;
    if !p.is_set("length") {
        if let Some(n) = side_derived.get("length") {
            p.default_to("length", n.clone());
        }
    }
    let length: Option<usize> = p.get("length")?;
    let range: String = p.require("range")?;
    let requested = match range.as_str() {
        "explicit" => {
            let lo: f64 = p.require("s-min")?;
            let hi: f64 = p.require("s-max")?;
            if !(lo > 0.0 && hi > lo) {
                return Err(CliError::Usage(format!(
                    "fit range needs 0 < s-min < s-max (got {lo}, {hi})"
                )));
            }
            (lo, hi)
        }
        "fixed-lower" | "fixed-width" => {
            p.reject(&["s-min", "s-max"], &format!("--range {range}"))?;
            let n = length.ok_or_else(|| {
                CliError::Usage(format!(
                    "--range {range} needs --length (or a provenance file)"
                ))
            })?;
            if range == "fixed-lower" {
                fixed_lower_range(n)
            } else {
                fixed_width_range(n)
            }
            .map_err(CliError::usage)?
        }
        other => return Err(CliError::Usage(format!("unknown --range `{other}`"))),
    };
    let crossover = p.switch("crossover")?;
    let search = if crossover {
        let n = length.ok_or_else(|| CliError::Usage("--crossover needs --length".into()))?;
        Some(search_from(&mut p, n)?)
    } else {
        p.reject(&CROSSOVER_KEYS[..2], "a fit without --crossover")?;
        None
    };
    let out: Option<PathBuf> = p.get("out")?;

    let text = std::fs::read_to_string(&input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", input.display())))?;
    let curve_len = length.unwrap_or_else(|| {
        // explicit ranges work without N; any length admitting every scale does
        text.lines()
            .skip(1)
            .filter_map(|l| l.split(',').next()?.trim().parse::<usize>().ok())
            .max()
            .unwrap_or(0)
            * 2
    });
    let curve = parse_curve_csv(&text, method, curve_len).map_err(|e| match e {
        dfakit_core::Error::Io(_)
        | dfakit_core::Error::Parse(_)
        | dfakit_core::Error::InvalidInput(_) => CliError::Io(format!("{}: {e}", input.display())),
        other => CliError::Compute(other.to_string()),
    })?;
    let est = fit_alpha(&curve, requested.0, requested.1)?;
    let detection = match &search {
        Some(s) => Some(s.detect(&curve)?),
        None => None,
    };

    println!(
        "{method}: alpha = {:.6} over s in [{}, {}] ({} points, intercept {:.6}, rms residual {:.3e})",
        est.alpha,
        requested.0,
        requested.1,
        est.n_points,
        est.intercept,
        est.residual_rms
    );
    let mut header =
        String::from("method,range,range_lo,range_hi,n_points,alpha,intercept,residual_rms");
    let mut row = format!(
        "{method},{range},{},{},{},{},{},{}",
        fmt_f64(requested.0),
        fmt_f64(requested.1),
        est.n_points,
        fmt_f64(est.alpha),
        fmt_f64(est.intercept),
        fmt_f64(est.residual_rms)
    );
    if let Some(d) = &detection {
        header.push_str(",crossover,s_observed,alpha_below,alpha_above,s_corrected,improvement");
        match d {
            CrossoverDetection::Found(e) => {
                println!(
                    "crossover at s' = {:.1} (corrected {:.1}), slopes {:.4} below and {:.4} above, SSE reduced by {:.1}%",
                    e.s_observed,
                    e.s_corrected,
                    e.alpha_below,
                    e.alpha_above,
                    100.0 * e.improvement
                );
                row.push_str(&format!(
                    ",true,{},{},{},{},{}",
                    fmt_f64(e.s_observed),
                    fmt_f64(e.alpha_below),
                    fmt_f64(e.alpha_above),
                    fmt_f64(e.s_corrected),
                    fmt_f64(e.improvement)
                ));
            }
            CrossoverDetection::NoCrossover { improvement, .. } => {
                println!(
                    "no crossover (two-piece fit reduces SSE by {:.1}%)",
                    100.0 * improvement
                );
                row.push_str(&format!(",false,,,,,{}", fmt_f64(*improvement)));
            }
        }
    }
    if let Some(out) = out {
        write_output(&out, &format!("{header}\n{row}\n"))?;
        write_output(&sidecar_path(&out), &p.provenance())?;
    }
    Ok(())
}

fn study(mut p: Params) -> Result<(), CliError> {
    let kind: String = p.require("kind")?;
    let quick: usize = p.require("quick")?;
    if quick == 0 {
        return Err(CliError::Usage("--quick must be at least 1".into()));
    }
    let out: PathBuf = p.require("out")?;
    let seed: u64 = p.require("seed")?;
    let ensemble_keys = ["alpha", "lengths", "reference"];
    let crossover_keys = ["alpha1", "alpha2", "s-cross"];
    let trend_keys = ["amplitudes", "trend-exponent"];
    let mut files: Vec<(&str, String)> = Vec::new();
    match kind.as_str() {
        "alpha-vs-n" | "scatter" => {
            let context = format!("study {kind}");
            p.reject(&crossover_keys, &context)?;
            p.reject(&trend_keys, &context)?;
            p.reject(&["n"], &context)?;
            p.reject(&CROSSOVER_KEYS, &context)?;
            if kind == "alpha-vs-n" {
                p.reject(&["reference"], &context)?;
            } else {
                p.default_to("reference", "dfa1");
            }
            p.default_to("alpha", "0.7");
            p.default_to("lengths", "50,100,200,500,1000,5000");
            p.default_to("n-series", "1000");
            p.default_to("methods", "dfa1,cma,mdfa1");
            let alpha: f64 = p.require("alpha")?;
            let lengths: Vec<usize> = p.list("lengths")?.unwrap_or_default();
            let methods = parse_methods(&p, "methods")?;
            let reference = match p.raw("reference") {
                Some(r) => {
                    let m: Method = r.parse().map_err(CliError::usage)?;
                    if !methods.contains(&m) {
                        return Err(CliError::Usage(format!(
                            "reference {m} is not among --methods"
                        )));
                    }
                    Some(m)
                }
                None => None,
            };
            let n_series = scaled_series(&mut p, quick)?;
            GeneratorSpec::new(lengths.first().copied().unwrap_or(0), alpha, seed)
                .validate()
                .map_err(CliError::usage)?;
            let st = alpha_vs_length_study(alpha, &lengths, n_series, &methods, seed)?;
            files.push(("summary.csv", st.summary_csv()));
            match reference {
                None => files.push(("histogram.csv", st.histogram_csv())),
                Some(r) => {
                    let rows = st.scatter(r)?;
                    files.push(("scatter.csv", scatter_csv(&rows)));
                    files.push(("scatter_pairs.csv", scatter_pairs_csv(&rows)));
                }
            }
        }
        "crossover-cal" => {
            let context = "study crossover-cal";
            p.reject(&ensemble_keys, context)?;
            p.reject(&trend_keys, context)?;
            p.default_to("alpha1", "0.8");
            p.default_to("alpha2", "0.5");
            p.default_to("s-cross", "50,100,200,400,800");
            p.default_to("n", "100000");
            p.default_to("n-series", "200");
            p.default_to("methods", "dfa1,cma,mdfa1");
            let alpha1: f64 = p.require("alpha1")?;
            let alpha2: f64 = p.require("alpha2")?;
            let s_list: Vec<usize> = p.list("s-cross")?.unwrap_or_default();
            let n: usize = p.require("n")?;
            let methods = parse_methods(&p, "methods")?;
            for &s_cross in &s_list {
                CrossoverSpec {
                    length: n,
                    alpha1,
                    alpha2,
                    s_cross,
                    seed,
                }
                .validate()
                .map_err(CliError::usage)?;
            }
            let search = search_from(&mut p, n)?;
            let n_series = scaled_series(&mut p, quick)?;
            let cal = crossover_calibration_study(
                alpha1, alpha2, &s_list, n, n_series, &methods, seed, &search,
            )?;
            files.push(("cells.csv", cal.cells_csv()));
            files.push(("fits.csv", cal.fits_csv()));
        }
        "trend-crossover" => {
            let context = "study trend-crossover";
            p.reject(&["lengths", "reference"], context)?;
            p.reject(&crossover_keys, context)?;
            p.default_to("alpha", "0.65");
            p.default_to("trend-exponent", "1");
            p.default_to("amplitudes", "10,20,50,100");
            p.default_to("n", "100000");
            p.default_to("n-series", "100");
            p.default_to("methods", "dfa1,cma,mdfa1");
            let alpha: f64 = p.require("alpha")?;
            let q: f64 = p.require("trend-exponent")?;
            let amplitudes: Vec<f64> = p.list("amplitudes")?.unwrap_or_default();
            let n: usize = p.require("n")?;
            let methods = parse_methods(&p, "methods")?;
            GeneratorSpec::new(n, alpha, seed)
                .validate()
                .map_err(CliError::usage)?;
            TrendSpec {
                amplitude: 1.0,
                exponent: q,
            }
            .validate()
            .map_err(CliError::usage)?;
            let search = search_from(&mut p, n)?;
            let n_series = scaled_series(&mut p, quick)?;
            let st =
                trend_crossover_study(alpha, q, &amplitudes, n, n_series, &methods, seed, &search)?;
            files.push(("cells.csv", st.cells_csv()));
            files.push(("fits.csv", st.fits_csv()));
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown study `{other}` (alpha-vs-n, scatter, crossover-cal, trend-crossover)"
            )))
        }
    }
    p.derive("member-seeds", format!("{seed} XOR member index"));
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    for (name, contents) in &files {
        write_output(&out.join(name), contents)?;
    }
    if let Some((_, first)) = files.first() {
        print!("{first}");
    }
    write_output(&out.join("study.provenance"), &p.provenance())
}

/// Number of surrogates after applying the quick-mode divisor.
fn scaled_series(p: &mut Params, quick: usize) -> Result<usize, CliError> {
    let requested: usize = p.require("n-series")?;
    let used = (requested / quick).max(10.min(requested));
    if used != requested {
        p.derive("n-series-used", used);
    }
    Ok(used)
}
