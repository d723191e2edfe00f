//! Run configuration: a flat `key = value` file with `[section]` headers,
//! overridden by `--key value` flags. Every value remembers where it came from
//! so errors can point at the offending line or flag.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use hymglue::geometry::CutoffProfile;
use hymglue::scenario::{Scenario, ScenarioId};
use hymglue::solver::SolveOptions;

/// Every accepted `(section, key)` and its default.
const KEYS: &[(&str, &str, &str)] = &[
    ("run", "scenario", "radial-ball-line"),
    ("run", "seed", "2024"),
    ("run", "output", "hymglue-out"),
    ("geometry", "n", "2"),
    ("geometry", "eps", "1e-1.5,1e-2,1e-2.5,1e-3"),
    ("geometry", "per_octave", "64"),
    ("geometry", "depth", "6"),
    ("geometry", "profile", "smoothstep7"),
    ("geometry", "b", ""),
    ("bundle", "rank", ""),
    ("bundle", "c0", ""),
    ("bundle", "beta", ""),
    ("bundle", "torus_size", "32"),
    ("weighted", "delta", "-0.5"),
    ("weighted", "delta_prime", "-0.3"),
    ("weighted", "k", "2"),
    ("weighted", "alpha", "0.5"),
    ("linear", "probes", "32"),
    ("solver", "tol", "1e-9"),
    ("solver", "max_iter", "100"),
    ("solver", "ball_constant", "1"),
    ("solver", "strict_ball", "false"),
    ("solver", "directions", "5"),
    ("solver", "pairs", "20"),
    ("solver", "scale", "0.25"),
    ("indicial", "window", "-10..10"),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Default,
    File { path: PathBuf, line: usize },
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag(flag) => write!(f, "flag --{flag}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Syntax {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{origin}: {key}: {msg}")]
    Value {
        origin: Origin,
        key: String,
        msg: String,
    },
    #[error("{0}")]
    Flag(String),
}

/// Raw `section.key → (value, origin)` after merging defaults, file and flags.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

fn full_key(section: &str, key: &str) -> String {
    format!("{section}.{key}")
}

/// Resolves `key` or `section.key` against the table.
fn resolve(name: &str) -> Option<String> {
    if let Some((section, key)) = name.split_once('.') {
        return KEYS
            .iter()
            .find(|(s, k, _)| *s == section && *k == key)
            .map(|(s, k, _)| full_key(s, k));
    }
    KEYS.iter()
        .find(|(_, k, _)| *k == name)
        .map(|(s, k, _)| full_key(s, k))
}

impl RawConfig {
    pub fn defaults() -> Self {
        let entries = KEYS
            .iter()
            .filter(|(_, _, v)| !v.is_empty())
            .map(|(s, k, v)| (full_key(s, k), (v.to_string(), Origin::Default)))
            .collect();
        Self { entries }
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        self.merge_text(&text, path)
    }

    pub fn merge_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        let syntax = |line: usize, msg: String| ConfigError::Syntax {
            path: path.into(),
            line,
            msg,
        };
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        syntax(line, format!("unterminated section header `{content}`"))
                    })?
                    .trim();
                if !KEYS.iter().any(|(s, _, _)| *s == name) {
                    return Err(syntax(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                syntax(line, format!("expected `key = value`, found `{content}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let section = section
                .as_deref()
                .ok_or_else(|| syntax(line, format!("key `{key}` appears before any [section]")))?;
            if !KEYS.iter().any(|(s, k, _)| *s == section && *k == key) {
                return Err(syntax(
                    line,
                    format!("unknown key `{key}` in section [{section}]"),
                ));
            }
            let value = value.trim_matches('"');
            self.entries.insert(
                full_key(section, key),
                (
                    value.to_string(),
                    Origin::File {
                        path: path.into(),
                        line,
                    },
                ),
            );
        }
        Ok(())
    }

    /// Applies `--key value` pairs; `key` may be bare or `section.key`.
    pub fn apply_flags(&mut self, args: &[String]) -> Result<(), ConfigError> {
        let mut it = args.iter();
        while let Some(flag) = it.next() {
            let name = flag.strip_prefix("--").ok_or_else(|| {
                ConfigError::Flag(format!("expected `--key value`, found `{flag}`"))
            })?;
            let (name, inline) = match name.split_once('=') {
                Some((n, v)) => (n, Some(v.to_string())),
                None => (name, None),
            };
            let key = resolve(name)
                .ok_or_else(|| ConfigError::Flag(format!("unknown option --{name}")))?;
            let value = match inline {
                Some(v) => v,
                None => it
                    .next()
                    .cloned()
                    .ok_or_else(|| ConfigError::Flag(format!("option --{name} needs a value")))?,
            };
            self.entries
                .insert(key, (value, Origin::Flag(name.to_string())));
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&(String, Origin)> {
        self.entries.get(key)
    }

    /// The merged values, sorted by key, for the manifest.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(k, (v, _))| (k.clone(), v.clone()))
            .collect()
    }
}

/// `10^x` literals such as `1e-1.5` are accepted alongside ordinary floats.
pub fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.parse::<f64>() {
        Ok(v) => v,
        Err(_) => {
            let (mantissa, exp) = s.split_once(['e', 'E'])?;
            let mantissa = if mantissa.is_empty() {
                1.0
            } else {
                mantissa.parse::<f64>().ok()?
            };
            mantissa * 10f64.powf(exp.parse::<f64>().ok()?)
        }
    };
    v.is_finite().then_some(v)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub delta_prime: f64,
    pub k: usize,
    pub alpha: f64,
    pub probes: usize,
    pub solve: SolveOptions,
    pub directions: usize,
    pub pairs: usize,
    pub scale: f64,
    pub window: (i64, i64),
    pub seed: u64,
    pub output: PathBuf,
    pub raw: RawConfig,
}

struct Reader<'a>(&'a RawConfig);

impl Reader<'_> {
    fn fail(&self, key: &str, msg: String) -> ConfigError {
        let origin = self
            .0
            .get(key)
            .map(|(_, o)| o.clone())
            .unwrap_or(Origin::Default);
        ConfigError::Value {
            origin,
            key: key.into(),
            msg,
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(v, _)| v.as_str())
    }

    fn parsed<T>(
        &self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => parse(v)
                .map(Some)
                .ok_or_else(|| self.fail(key, format!("`{v}` is not {what}"))),
        }
    }

    fn required<T>(
        &self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<T, ConfigError> {
        self.parsed(key, what, parse)?
            .ok_or_else(|| self.fail(key, "missing value".into()))
    }

    fn float(&self, key: &str) -> Result<f64, ConfigError> {
        self.required(key, "a number", parse_float)
    }

    fn opt_float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parsed(key, "a number", parse_float)
    }

    fn count(&self, key: &str) -> Result<usize, ConfigError> {
        self.required(key, "a nonnegative integer", |v| v.parse().ok())
    }

    fn positive(&self, key: &str) -> Result<usize, ConfigError> {
        let v = self.count(key)?;
        if v == 0 {
            return Err(self.fail(key, "must be positive".into()));
        }
        Ok(v)
    }
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let r = Reader(&raw);
        let id: ScenarioId = r
            .required("run.scenario", "a scenario id", |v| v.parse().ok())
            .map_err(|_| {
                let names: Vec<&str> = ScenarioId::ALL.iter().map(|s| s.name()).collect();
                r.fail(
                    "run.scenario",
                    format!("unknown scenario, expected one of {}", names.join(", ")),
                )
            })?;
        let mut scenario = Scenario::new(id);
        scenario.n = r.positive("geometry.n")?;
        scenario.per_octave = r.positive("geometry.per_octave")?;
        scenario.depth = r.float("geometry.depth")?;
        if scenario.depth <= 0.0 {
            return Err(r.fail("geometry.depth", "must be positive".into()));
        }
        scenario.profile = r.required(
            "geometry.profile",
            "a cutoff profile (smoothstep7 or smoothstep9)",
            CutoffProfile::by_name,
        )?;
        if let Some(b) = r.opt_float("geometry.b")? {
            scenario.b = b;
        }
        if let Some(c0) = r.opt_float("bundle.c0")? {
            scenario.c0 = c0;
        }
        if let Some(beta) = r.opt_float("bundle.beta")? {
            scenario.beta = beta;
        }
        if let Some(m) = r.parsed("bundle.rank", "a positive integer", |v| {
            v.parse::<usize>().ok()
        })? {
            if m != id.rank() {
                return Err(r.fail(
                    "bundle.rank",
                    format!("{id} has rank {}, not {m}", id.rank()),
                ));
            }
        }
        scenario.torus_size = r.positive("bundle.torus_size")?;

        let delta = r.float("weighted.delta")?;
        let lo = 2.0 - 2.0 * scenario.n as f64;
        if !(delta > lo && delta < 0.0) {
            return Err(r.fail(
                "weighted.delta",
                format!("δ = {delta} is outside (2 − 2n, 0) = ({lo}, 0), the weights for which the iteration contracts on V_ε"),
            ));
        }
        let delta_prime = r.float("weighted.delta_prime")?;
        if delta_prime < delta {
            return Err(r.fail(
                "weighted.delta_prime",
                format!("need δ' ≥ δ = {delta}, got {delta_prime}"),
            ));
        }
        let k = r.count("weighted.k")?;
        if k > hymglue::weighted::MAX_DERIVATIVES {
            return Err(r.fail(
                "weighted.k",
                format!(
                    "at most {} derivatives are supported",
                    hymglue::weighted::MAX_DERIVATIVES
                ),
            ));
        }
        let alpha = r.float("weighted.alpha")?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(r.fail(
                "weighted.alpha",
                format!("Hölder exponent {alpha} outside (0, 1)"),
            ));
        }

        let epsilons = r.required("geometry.eps", "a comma-separated list of numbers", |v| {
            v.split(',').map(parse_float).collect::<Option<Vec<f64>>>()
        })?;
        if epsilons.is_empty() {
            return Err(r.fail("geometry.eps", "empty list".into()));
        }
        if let Some(w) = epsilons.windows(2).find(|w| w[1] >= w[0]) {
            return Err(r.fail(
                "geometry.eps",
                format!(
                    "list must be strictly decreasing, but {} is followed by {}",
                    w[0], w[1]
                ),
            ));
        }
        for &eps in &epsilons {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(r.fail("geometry.eps", format!("ε = {eps} outside (0, 1)")));
            }
            if id != ScenarioId::FlatTorusLine {
                scenario
                    .check_epsilon(eps)
                    .map_err(|e| r.fail("geometry.eps", e.to_string()))?;
            }
        }

        let solve = SolveOptions {
            tol: r.float("solver.tol")?,
            max_iter: r.positive("solver.max_iter")?,
            ball_constant: r.float("solver.ball_constant")?,
            strict_ball: r.required("solver.strict_ball", "true or false", |v| v.parse().ok())?,
        };
        if !(solve.tol > 0.0) {
            return Err(r.fail("solver.tol", "must be positive".into()));
        }
        let scale = r.float("solver.scale")?;
        if !(scale > 0.0) {
            return Err(r.fail("solver.scale", "must be positive".into()));
        }
        let window = r.required("indicial.window", "a range `lo..hi`", |v| {
            let (a, b) = v.split_once("..")?;
            let (a, b) = (a.trim().parse::<i64>().ok()?, b.trim().parse::<i64>().ok()?);
            (a <= b).then_some((a, b))
        })?;

        Ok(Self {
            scenario,
            epsilons,
            delta,
            delta_prime,
            k,
            alpha,
            probes: r.positive("linear.probes")?,
            solve,
            directions: r.positive("solver.directions")?,
            pairs: r.positive("solver.pairs")?,
            scale,
            window,
            seed: r.required("run.seed", "an unsigned integer", |v| v.parse().ok())?,
            output: PathBuf::from(r.required("run.output", "a path", |v| Some(v.to_string()))?),
            raw,
        })
    }

    pub fn n(&self) -> usize {
        self.scenario.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str, flags: &[&str]) -> Result<RunConfig, ConfigError> {
        let mut raw = RawConfig::defaults();
        raw.merge_text(text, Path::new("run.cfg"))?;
        raw.apply_flags(&flags.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
        RunConfig::from_raw(raw)
    }

    #[test]
    fn fractional_exponents_parse() {
        assert!((parse_float("1e-1.5").unwrap() - 10f64.powf(-1.5)).abs() < 1e-16);
        assert_eq!(parse_float("1e-2"), Some(0.01));
        assert_eq!(parse_float("-0.5"), Some(-0.5));
        assert_eq!(parse_float("e2"), Some(100.0));
        assert_eq!(parse_float("abc"), None);
        assert_eq!(parse_float("1e400"), None);
    }

    #[test]
    fn defaults_build() {
        let cfg = build("", &[]).unwrap();
        assert_eq!(cfg.epsilons.len(), 4);
        assert_eq!(cfg.window, (-10, 10));
        assert_eq!(cfg.scenario.id, ScenarioId::RadialBallLine);
    }

    #[test]
    fn flags_override_the_file() {
        let cfg = build(
            "[weighted]\ndelta = -0.7\n",
            &["--delta", "-0.4", "--solver.max_iter=7"],
        )
        .unwrap();
        assert_eq!(cfg.delta, -0.4);
        assert_eq!(cfg.solve.max_iter, 7);
    }

    #[test]
    fn syntax_errors_name_the_line() {
        let err = build("[solver]\ntol = 1e-9\nbogus = 3\n", &[])
            .unwrap_err()
            .to_string();
        assert_eq!(err, "run.cfg:3: unknown key `bogus` in section [solver]");
        let err = build("tol = 1\n", &[]).unwrap_err().to_string();
        assert!(err.starts_with("run.cfg:1:"), "{err}");
        let err = build("[nope]\n", &[]).unwrap_err().to_string();
        assert!(err.contains("unknown section [nope]"), "{err}");
    }

    #[test]
    fn weight_outside_the_interval_is_rejected() {
        let err = build("\n[weighted]\ndelta = 0.2\n", &[])
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("run.cfg:3: weighted.delta:"), "{err}");
        assert!(err.contains("(2 − 2n, 0) = (-2, 0)"), "{err}");
        let err = build("", &["--delta", "-2"]).unwrap_err().to_string();
        assert!(err.starts_with("flag --delta: weighted.delta:"), "{err}");
        assert!(build("[geometry]\nn = 3\n[weighted]\ndelta = -3.5\n", &[]).is_ok());
    }

    #[test]
    fn epsilon_lists_must_decrease() {
        let err = build("", &["--eps", "1e-2,1e-2"]).unwrap_err().to_string();
        assert!(err.contains("strictly decreasing"), "{err}");
        let err = build("", &["--eps", "1.5"]).unwrap_err().to_string();
        assert!(err.contains("outside (0, 1)"), "{err}");
        let err = build("", &["--scenario", "rank2-diag", "--eps", "0.2"])
            .unwrap_err()
            .to_string();
        assert!(err.contains("neck radius"), "{err}");
    }

    #[test]
    fn bad_flags_are_reported() {
        assert!(matches!(
            build("", &["--nonsense", "1"]),
            Err(ConfigError::Flag(_))
        ));
        assert!(matches!(build("", &["--delta"]), Err(ConfigError::Flag(_))));
        assert!(matches!(
            build("", &["delta", "1"]),
            Err(ConfigError::Flag(_))
        ));
        let err = build("", &["--rank", "1", "--scenario", "rank2-diag"])
            .unwrap_err()
            .to_string();
        assert!(err.contains("has rank 2"), "{err}");
    }
}
