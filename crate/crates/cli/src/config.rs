//! Run parameters from the command line and from `key = value` files.
//!
//! Each subcommand declares its keys once. The same names serve as long
//! flags, config-file keys and provenance lines, so a provenance sidecar can
//! be handed back through `--config` to repeat a run.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Value,
    Switch,
    Positional,
}

#[derive(Debug)]
pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
}

const fn opt(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        kind: Kind::Value,
        default: None,
    }
}

const fn def(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        kind: Kind::Value,
        default: Some(default),
    }
}

const fn switch(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        kind: Kind::Switch,
        default: None,
    }
}

pub const GENERATE: &[Key] = &[
    opt("n", "series length"),
    opt(
        "alpha",
        "fluctuation exponent in (0, 1.5); below the crossover if alpha2 is set",
    ),
    def("seed", "1", "random seed"),
    opt("alpha2", "exponent above the crossover"),
    opt("s-cross", "crossover scale (requires alpha2)"),
    def(
        "trend-amplitude",
        "0",
        "amplitude A of the added trend A (i/N)^q",
    ),
    def("trend-exponent", "1", "exponent q of the added trend"),
    opt("shuffle-box", "shuffle boxes of this length"),
    opt("downsample", "keep every k-th sample"),
    switch(
        "no-normalize",
        "skip rescaling to zero mean and unit variance",
    ),
    opt("out", "output series file"),
];

pub const ANALYZE: &[Key] = &[
    opt(
        "input",
        "series file(s), comma separated; several files form an ensemble",
    ),
    opt("column", "CSV column name or zero-based index (CSV input)"),
    opt(
        "method",
        "fa, rs, dfa, bma, cma or mdfa (dfa2, mdfa3, ... also accepted)",
    ),
    opt("order", "detrending order for dfa/mdfa"),
    opt(
        "scales",
        "comma-separated scales, or lo:hi to restrict the default grid",
    ),
    opt("out", "output curve CSV (s,F)"),
];

pub const FIT: &[Key] = &[
    opt("input", "curve CSV with columns s,F"),
    opt(
        "method",
        "method of the curve (default: from the input's provenance)",
    ),
    opt("order", "detrending order for dfa/mdfa"),
    opt(
        "length",
        "series length N (default: from the input's provenance)",
    ),
    def(
        "range",
        "fixed-lower",
        "explicit, fixed-lower (10..N/2) or fixed-width (N/20..N/2)",
    ),
    opt("s-min", "lower fit limit (explicit range)"),
    opt("s-max", "upper fit limit (explicit range)"),
    switch("crossover", "also search for a crossover"),
    opt(
        "search-lo",
        "lower end of the crossover search window (default 10)",
    ),
    opt(
        "search-hi",
        "upper end of the crossover search window (default N/4)",
    ),
    def(
        "min-improvement",
        "0.05",
        "relative SSE gain required for a crossover",
    ),
    def(
        "min-slope-change",
        "0.1",
        "slope change required for a crossover",
    ),
    def(
        "tracking",
        "10",
        "re-centre the search window on the knot within this factor",
    ),
    switch("no-tracking", "search the outer window only"),
    opt("out", "output report CSV"),
];

pub const STUDY: &[Key] = &[
    Key {
        name: "kind",
        help: "alpha-vs-n, scatter, crossover-cal or trend-crossover",
        kind: Kind::Positional,
        default: None,
    },
    opt(
        "alpha",
        "target exponent (alpha-vs-n, scatter, trend-crossover)",
    ),
    opt(
        "lengths",
        "series lengths, comma separated (alpha-vs-n, scatter)",
    ),
    opt("n-series", "surrogates per ensemble"),
    opt("methods", "methods, comma separated"),
    def("seed", "1", "study seed; member i uses seed XOR i"),
    opt("reference", "reference method for scatter statistics"),
    opt("alpha1", "exponent below the crossover (crossover-cal)"),
    opt("alpha2", "exponent above the crossover (crossover-cal)"),
    opt(
        "s-cross",
        "true crossover scales, comma separated (crossover-cal)",
    ),
    opt("n", "series length (crossover-cal, trend-crossover)"),
    opt(
        "amplitudes",
        "trend amplitudes, comma separated (trend-crossover)",
    ),
    opt("trend-exponent", "trend exponent q (trend-crossover)"),
    opt(
        "search-lo",
        "lower end of the crossover search window (default 10)",
    ),
    opt(
        "search-hi",
        "upper end of the crossover search window (default N/4)",
    ),
    opt(
        "min-improvement",
        "relative SSE gain required for a crossover",
    ),
    opt("min-slope-change", "slope change required for a crossover"),
    opt(
        "tracking",
        "re-centre the search window on the knot within this factor",
    ),
    switch("no-tracking", "search the outer window only"),
    def(
        "quick",
        "1",
        "divide the number of surrogates by this factor (at least 10 remain)",
    ),
    opt("out", "output directory"),
];

pub fn keys_for(command: &str) -> &'static [Key] {
    match command {
        "generate" => GENERATE,
        "analyze" => ANALYZE,
        "fit" => FIT,
        "study" => STUDY,
        _ => unreachable!("unknown subcommand {command}"),
    }
}

pub fn command_line() -> Command {
    Command::new("dfakit")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Fluctuation analysis of long-range-correlated series")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key = value file; flags on the command line take precedence"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .help("worker threads (default: DFAKIT_THREADS, else all cores)"),
        )
        .subcommand(subcommand(
            "generate",
            "Generate a surrogate series",
            GENERATE,
        ))
        .subcommand(subcommand(
            "analyze",
            "Compute a fluctuation function",
            ANALYZE,
        ))
        .subcommand(subcommand(
            "fit",
            "Fit the scaling exponent of a curve",
            FIT,
        ))
        .subcommand(subcommand("study", "Run an ensemble study", STUDY))
}

fn subcommand(name: &'static str, about: &'static str, keys: &'static [Key]) -> Command {
    keys.iter().fold(Command::new(name).about(about), |cmd, k| {
        let help = match k.default {
            Some(d) => format!("{} [default: {d}]", k.help),
            None => k.help.to_string(),
        };
        let arg = match k.kind {
            Kind::Value => Arg::new(k.name).long(k.name).value_name("VALUE"),
            Kind::Switch => Arg::new(k.name).long(k.name).action(ArgAction::SetTrue),
            Kind::Positional => Arg::new(k.name).index(1),
        };
        cmd.arg(arg.help(help))
    })
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// `_` in keys is read as `-`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", i + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!(
                "config line {}: `{key}` given twice",
                i + 1
            )));
        }
    }
    Ok(map)
}

/// Lines of the form `#! key = value` carry derived values in provenance
/// files; ordinary config parsing treats them as comments.
pub fn parse_derived(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix("#!"))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Fully resolved parameters of one subcommand.
#[derive(Debug, Clone)]
pub struct Params {
    pub command: &'static str,
    keys: &'static [Key],
    values: BTreeMap<&'static str, String>,
    derived: Vec<(String, String)>,
}

impl Params {
    fn with_defaults(command: &'static str) -> Self {
        let keys = keys_for(command);
        let values = keys
            .iter()
            .filter_map(|k| k.default.map(|d| (k.name, d.to_string())))
            .collect();
        Self {
            command,
            keys,
            values,
            derived: Vec::new(),
        }
    }

    fn set_checked(&mut self, name: &str, value: String) -> Result<(), CliError> {
        let key = self.keys.iter().find(|k| k.name == name).ok_or_else(|| {
            let valid: Vec<&str> = self.keys.iter().map(|k| k.name).collect();
            CliError::Usage(format!(
                "unknown key `{name}` for {} (valid: {})",
                self.command,
                valid.join(", ")
            ))
        })?;
        self.values.insert(key.name, value);
        Ok(())
    }

    /// Layers defaults, then the config file, then explicit flags.
    pub fn resolve(
        command: &'static str,
        matches: &ArgMatches,
        config: Option<&BTreeMap<String, String>>,
    ) -> Result<Self, CliError> {
        let mut p = Self::with_defaults(command);
        for (name, v) in config.into_iter().flatten() {
            p.set_checked(name, v.clone())?;
        }
        for k in p.keys {
            match k.kind {
                Kind::Switch => {
                    if matches.get_flag(k.name) {
                        p.values.insert(k.name, "true".into());
                    }
                }
                Kind::Value | Kind::Positional => {
                    if let Some(v) = matches.get_one::<String>(k.name) {
                        p.values.insert(k.name, v.clone());
                    }
                }
            }
        }
        Ok(p)
    }

    /// Parameters from explicit pairs on top of the defaults, as used by
    /// library callers and tests.
    pub fn from_pairs(command: &'static str, pairs: &[(&str, &str)]) -> Result<Self, CliError> {
        let mut p = Self::with_defaults(command);
        for (k, v) in pairs {
            p.set_checked(k, v.to_string())?;
        }
        Ok(p)
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("--{key}: cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Usage(format!("{}: --{key} is required", self.command)))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>().map_err(|e| {
                            CliError::Usage(format!("--{key}: cannot parse `{s}`: {e}"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn switch(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }

    /// Fills `key` unless a flag, the config file or a static default set it.
    pub fn default_to(&mut self, key: &'static str, value: impl Into<String>) {
        self.values.entry(key).or_insert_with(|| value.into());
    }

    /// Rejects keys that have no meaning in the current mode.
    pub fn reject(&self, keys: &[&str], context: &str) -> Result<(), CliError> {
        match keys.iter().find(|k| self.is_set(k)) {
            Some(k) => Err(CliError::Usage(format!(
                "--{k} does not apply to {context}"
            ))),
            None => Ok(()),
        }
    }

    /// Records a value computed during the run, e.g. a series length read
    /// from the input or the seed of a derived random stream.
    pub fn derive(&mut self, key: &str, value: impl Display) {
        self.derived.push((key.to_string(), value.to_string()));
    }

    pub fn provenance(&self) -> String {
        let mut out = format!("# dfakit {} {}\n", env!("CARGO_PKG_VERSION"), self.command);
        for k in self.keys {
            if let Some(v) = self.values.get(k.name) {
                out.push_str(&format!("{} = {v}\n", k.name));
            }
        }
        for (k, v) in &self.derived {
            out.push_str(&format!("#! {k} = {v}\n"));
        }
        out
    }
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}
