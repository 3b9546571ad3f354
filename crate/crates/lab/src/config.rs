//! Scenario configuration: `[section]` headers with `key = value` lines.
//!
//! Every scenario declares a schema. Parsing checks the whole file against it
//! and reports all problems at once; missing keys take their defaults, so the
//! resolved configuration is always complete and can be echoed verbatim.

use crate::error::{LabError, LabResult};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Str(String),
    Floats(Vec<f64>),
    Ints(Vec<i64>),
}

impl Value {
    fn to_toml(&self) -> toml::Value {
        match self {
            Value::Float(v) => toml::Value::Float(*v),
            Value::Int(v) => toml::Value::Integer(*v),
            Value::Bool(v) => toml::Value::Boolean(*v),
            Value::Str(v) => toml::Value::String(v.clone()),
            Value::Floats(v) => toml::Value::Array(v.iter().map(|x| toml::Value::Float(*x)).collect()),
            Value::Ints(v) => toml::Value::Array(v.iter().map(|x| toml::Value::Integer(*x)).collect()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Float { min: f64, max: f64 },
    Int { min: i64, max: i64 },
    EvenInt { min: i64, max: i64 },
    Bool,
    Choice(&'static [&'static str]),
    Floats { min: f64, max: f64 },
    Ints { min: i64, max: i64 },
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Float { min, max } => format!("a number in [{min}, {max}]"),
            Kind::Int { min, max } => format!("an integer in [{min}, {max}]"),
            Kind::EvenInt { min, max } => format!("an even integer in [{min}, {max}]"),
            Kind::Bool => "true or false".into(),
            Kind::Choice(c) => format!("one of {}", c.join(", ")),
            Kind::Floats { min, max } => format!("a non-empty list of numbers in [{min}, {max}]"),
            Kind::Ints { min, max } => format!("a non-empty list of integers in [{min}, {max}]"),
        }
    }

    fn convert(&self, v: &toml::Value) -> Option<Value> {
        let num = |v: &toml::Value| match v {
            toml::Value::Float(f) => Some(*f),
            toml::Value::Integer(i) => Some(*i as f64),
            _ => None,
        };
        let in_f = |x: f64, lo: f64, hi: f64| x.is_finite() && x >= lo && x <= hi;
        match (*self, v) {
            (Kind::Float { min, max }, v) => num(v).filter(|&x| in_f(x, min, max)).map(Value::Float),
            (Kind::Int { min, max }, toml::Value::Integer(i)) => (*i >= min && *i <= max).then_some(Value::Int(*i)),
            (Kind::EvenInt { min, max }, toml::Value::Integer(i)) => {
                (*i >= min && *i <= max && i % 2 == 0).then_some(Value::Int(*i))
            }
            (Kind::Bool, toml::Value::Boolean(b)) => Some(Value::Bool(*b)),
            (Kind::Choice(c), toml::Value::String(s)) => c.contains(&s.as_str()).then(|| Value::Str(s.clone())),
            (Kind::Floats { min, max }, toml::Value::Array(a)) if !a.is_empty() => a
                .iter()
                .map(|x| num(x).filter(|&x| in_f(x, min, max)))
                .collect::<Option<Vec<_>>>()
                .map(Value::Floats),
            (Kind::Ints { min, max }, toml::Value::Array(a)) if !a.is_empty() => a
                .iter()
                .map(|x| match x {
                    toml::Value::Integer(i) if *i >= min && *i <= max => Some(*i),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .map(Value::Ints),
            _ => None,
        }
    }
}

struct Param {
    key: &'static str,
    kind: Kind,
    default: Value,
}

struct Section {
    name: &'static str,
    params: Vec<Param>,
}

fn float(key: &'static str, min: f64, max: f64, default: f64) -> Param {
    Param {
        key,
        kind: Kind::Float { min, max },
        default: Value::Float(default),
    }
}

fn int(key: &'static str, min: i64, max: i64, default: i64) -> Param {
    Param {
        key,
        kind: Kind::Int { min, max },
        default: Value::Int(default),
    }
}

fn even(key: &'static str, min: i64, max: i64, default: i64) -> Param {
    Param {
        key,
        kind: Kind::EvenInt { min, max },
        default: Value::Int(default),
    }
}

fn flag(key: &'static str, default: bool) -> Param {
    Param {
        key,
        kind: Kind::Bool,
        default: Value::Bool(default),
    }
}

fn choice(key: &'static str, options: &'static [&'static str], default: &str) -> Param {
    Param {
        key,
        kind: Kind::Choice(options),
        default: Value::Str(default.into()),
    }
}

fn floats(key: &'static str, min: f64, max: f64, default: &[f64]) -> Param {
    Param {
        key,
        kind: Kind::Floats { min, max },
        default: Value::Floats(default.to_vec()),
    }
}

fn ints(key: &'static str, min: i64, max: i64, default: &[i64]) -> Param {
    Param {
        key,
        kind: Kind::Ints { min, max },
        default: Value::Ints(default.to_vec()),
    }
}

fn section(name: &'static str, params: Vec<Param>) -> Section {
    Section { name, params }
}

const BIG: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scenario {
    Euler2d,
    ChannelGrowth,
    Model1d,
    Fundamental,
    SelfSimilar,
    BsAlpha,
    Pressureless,
    Geometry,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::Euler2d,
        Scenario::ChannelGrowth,
        Scenario::Model1d,
        Scenario::Fundamental,
        Scenario::SelfSimilar,
        Scenario::BsAlpha,
        Scenario::Pressureless,
        Scenario::Geometry,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Scenario::Euler2d => "euler2d",
            Scenario::ChannelGrowth => "channel-growth",
            Scenario::Model1d => "model1d",
            Scenario::Fundamental => "fundamental",
            Scenario::SelfSimilar => "selfsimilar",
            Scenario::BsAlpha => "bsalpha",
            Scenario::Pressureless => "pressureless",
            Scenario::Geometry => "geometry",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.id() == s)
    }

    pub fn description(&self) -> &'static str {
        match self {
            Scenario::Euler2d => "pseudospectral 2D Euler/Navier-Stokes on the torus with conservation diagnostics",
            Scenario::ChannelGrowth => "perturbed Couette flow in the channel: material-line distance and Hölder growth",
            Scenario::Model1d => "1D vorticity models on the circle, Burgers, scale-invariant Euler",
            Scenario::Fundamental => "axisymmetric fundamental model and its exact self-similar blow-up",
            Scenario::SelfSimilar => "perturbed self-similar profiles: fixed point and compactness solvers",
            Scenario::BsAlpha => "scaled Biot-Savart expansion: R-operator audit and mode-2 decomposition",
            Scenario::Pressureless => "nilpotent pressureless flows: gradient routes and blow-up family norms",
            Scenario::Geometry => "streamline travel time and isochronality",
        }
    }

    fn schema(&self) -> Vec<Section> {
        let solver = |dt: f64, end: f64, every: i64| {
            vec![
                float("dt", 1e-9, 10.0, dt),
                float("end_time", 0.0, 1e6, end),
                int("snapshot_every", 1, 1 << 40, every),
            ]
        };
        match self {
            Scenario::Euler2d => vec![
                section(
                    "grid",
                    vec![
                        even("nx", 8, 8192, 64),
                        even("ny", 8, 8192, 64),
                        float("lx", 1e-6, BIG, 2.0 * PI),
                        float("ly", 1e-6, BIG, 2.0 * PI),
                    ],
                ),
                section(
                    "initial",
                    vec![
                        choice("kind", &["cellular", "shear", "random", "spiral", "zero"], "cellular"),
                        float("amplitude", -BIG, BIG, 1.0),
                        int("modes", 1, 64, 3),
                        float("mean_u", -BIG, BIG, 0.0),
                        float("mean_v", -BIG, BIG, 0.0),
                    ],
                ),
                section("solver", {
                    let mut p = solver(1e-3, 1.0, 100);
                    p.push(float("nu", 0.0, BIG, 0.0));
                    p.push(choice("dealias", &["two-thirds", "none"], "two-thirds"));
                    p.push(float("blowup_factor", 1.0 + 1e-9, BIG, 1e3));
                    p
                }),
                section(
                    "diagnostics",
                    vec![
                        float("alpha", 1e-3, 1.0, 0.5),
                        int("p_max", 2, 4096, 64),
                        int("holder_pairs", 0, 1 << 30, 100_000),
                        float("casimir_power", 1.0, 64.0, 4.0),
                    ],
                ),
                section(
                    "output",
                    vec![
                        flag("snapshots", false),
                        flag("heatmaps", false),
                        choice("heatmap_field", &["omega", "perturbation"], "omega"),
                    ],
                ),
            ],
            Scenario::ChannelGrowth => vec![
                section("grid", vec![even("nx", 8, 8192, 256), even("ny", 8, 8192, 128)]),
                section(
                    "flow",
                    vec![
                        float("shear", -BIG, BIG, 1.0),
                        float("eps", 0.0, 1.0, 0.05),
                        float("g_amplitude", 0.0, 0.25, 0.2),
                        float("taper_margin", 1e-3, 0.45, 0.2),
                    ],
                ),
                section("solver", {
                    let mut p = vec![float("dt", 1e-9, 10.0, 4e-3), float("end_time", 0.0, 1e6, 16.0)];
                    p.push(even("sample_every", 2, 1 << 40, 50));
                    p
                }),
                section(
                    "curves",
                    vec![
                        float("max_segment", 1e-4, 10.0, 0.02),
                        int("markers", 2, 100_000, 65),
                        float("band_low", 0.0, 1.0, 0.25),
                        float("band_high", 0.0, 1.0, 0.75),
                        float("alpha", 1e-3, 1.0, 0.5),
                        int("holder_pairs", 0, 1 << 30, 20_000),
                    ],
                ),
            ],
            Scenario::Model1d => vec![
                section(
                    "model",
                    vec![
                        choice(
                            "closure",
                            &["projection-a", "projection-b", "de-gregorio", "clm", "scale-invariant-euler", "burgers"],
                            "projection-a",
                        ),
                        even("n", 8, 1 << 20, 256),
                        choice("initial", &["sine", "one-plus-sine", "smooth", "analytic", "holder", "cos3"], "smooth"),
                        float("amplitude", -BIG, BIG, 1.0),
                        float("holder_alpha", 1e-3, 1.0, 0.5),
                        int("symmetry", 3, 64, 3),
                    ],
                ),
                section("solver", {
                    let mut p = solver(1e-3, 0.5, 50);
                    p.push(float("adaptive_cfl", 0.0, 10.0, 0.0));
                    p.push(float("blowup_factor", 1.0 + 1e-9, BIG, 1e3));
                    p.push(flag("dealias", true));
                    p
                }),
                section(
                    "oracle",
                    vec![
                        flag("enabled", true),
                        float("h", 1e-4, 1.0, 0.05),
                        float("max_increment", 1e-6, 1.0, 0.02),
                    ],
                ),
            ],
            Scenario::Fundamental => vec![
                section("grid", vec![int("n_r", 9, 100_001, 401), int("n_theta", 9, 4097, 65)]),
                section(
                    "initial",
                    vec![
                        choice("kind", &["self-similar", "vanishing-both-ends", "sin-squared"], "self-similar"),
                        float("amplitude", -BIG, BIG, 2.0),
                    ],
                ),
                section("solver", {
                    let mut p = solver(1e-3, 0.9, 100);
                    p.push(float("cfl", 0.0, 10.0, 0.0));
                    p.push(flag("transport", true));
                    p.push(flag("stretching", true));
                    p.push(float("blowup_factor", 1.0 + 1e-9, BIG, 200.0));
                    p
                }),
            ],
            Scenario::SelfSimilar => vec![
                section(
                    "profile",
                    vec![
                        choice(
                            "nonlinearity",
                            &["square", "weighted-square", "weighted-gradient-square", "gradient-square"],
                            "weighted-square",
                        ),
                        floats("eps", 0.0, 0.5, &[1e-4, 1e-3, 1e-2]),
                        int("n", 9, 1025, 65),
                        float("tol", 1e-15, 1e-2, 1e-10),
                        int("max_iter", 1, 100_000, 500),
                    ],
                ),
                section("compactness", vec![flag("enabled", true)]),
            ],
            Scenario::BsAlpha => vec![
                section(
                    "audit",
                    vec![floats("alphas", 1e-3, 1.0, &[1.0, 0.5, 0.1]), int("samples", 1, 100_000, 100)],
                ),
                section(
                    "modes",
                    vec![
                        floats("alphas", 1e-3, 1.0, &[0.5, 0.1, 0.02]),
                        int("regular_samples", 1, 10_000, 12),
                    ],
                ),
            ],
            Scenario::Pressureless => vec![
                section(
                    "family",
                    vec![
                        ints("d", 2, 512, &[4, 8, 16, 32, 64]),
                        floats("times", 0.0, BIG, &[0.5, 0.9]),
                        int("samples", 1, 1_000_000, 10_000),
                    ],
                ),
                section(
                    "routes",
                    vec![
                        int("random_flows", 0, 100_000, 100),
                        int("max_dim", 2, 64, 7),
                        floats("times", 0.0, BIG, &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]),
                    ],
                ),
            ],
            Scenario::Geometry => vec![
                section(
                    "field",
                    vec![
                        choice("kind", &["ellipse", "cellular", "quartic"], "ellipse"),
                        float("a", 1e-6, BIG, 1.5),
                        float("b", 1e-6, BIG, 0.5),
                        even("n", 8, 8192, 1024),
                        float("half_width", 1e-6, BIG, 2.5),
                    ],
                ),
                section(
                    "travel",
                    vec![
                        floats("levels", -BIG, BIG, &[0.2, 0.4, 0.6, 0.8, 1.0]),
                        float("area_delta", 1e-9, 0.5, 1e-3),
                        float("critical_eps", 0.0, 0.5, 1e-3),
                    ],
                ),
            ],
        }
    }
}

/// A fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub name: String,
    pub seed: u64,
    pub output: PathBuf,
    pub sections: BTreeMap<String, BTreeMap<String, Value>>,
}

const RUN_KEYS: [&str; 4] = ["scenario", "name", "seed", "output"];

impl ScenarioConfig {
    /// Parses and validates `text`. `default_root` is the output root used
    /// when `[run] output` is absent; the run directory is then
    /// `default_root/<name>`, with `name` defaulting to `fallback_name`.
    pub fn parse(text: &str, default_root: &Path, fallback_name: &str) -> LabResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| LabError::Validation(vec![format!("syntax: {}", e.message())]))?;
        let mut errors = Vec::new();

        let empty = toml::Table::new();
        let run = match table.get("run") {
            Some(toml::Value::Table(t)) => t,
            Some(_) => {
                errors.push("[run] must be a section".to_string());
                &empty
            }
            None => {
                errors.push("missing [run] section".to_string());
                &empty
            }
        };
        for k in run.keys() {
            if !RUN_KEYS.contains(&k.as_str()) {
                errors.push(format!("unknown key [run].{k}"));
            }
        }
        let scenario = match run.get("scenario") {
            Some(toml::Value::String(s)) => match Scenario::parse(s) {
                Some(sc) => Some(sc),
                None => {
                    let ids: Vec<&str> = Scenario::ALL.iter().map(|s| s.id()).collect();
                    errors.push(format!("[run].scenario: unknown scenario {s:?} (expected one of {})", ids.join(", ")));
                    None
                }
            },
            Some(_) => {
                errors.push("[run].scenario: expected a string".into());
                None
            }
            None if table.contains_key("run") => {
                errors.push("[run].scenario is required".into());
                None
            }
            None => None,
        };
        let name = match run.get("name") {
            None => fallback_name.to_string(),
            Some(toml::Value::String(s)) if valid_name(s) => s.clone(),
            Some(_) => {
                errors.push("[run].name: expected a non-empty string of letters, digits, '-', '_' or '.'".into());
                fallback_name.to_string()
            }
        };
        let seed = match run.get("seed") {
            None => 0,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => {
                errors.push("[run].seed: expected a non-negative integer".into());
                0
            }
        };
        let output = match run.get("output") {
            None => default_root.join(&name),
            Some(toml::Value::String(s)) if !s.is_empty() => PathBuf::from(s),
            Some(_) => {
                errors.push("[run].output: expected a non-empty path string".into());
                default_root.join(&name)
            }
        };

        let mut sections = BTreeMap::new();
        if let Some(sc) = scenario {
            let schema = sc.schema();
            for (sec_name, v) in &table {
                if sec_name == "run" {
                    continue;
                }
                let Some(sec) = schema.iter().find(|s| s.name == sec_name) else {
                    let known: Vec<&str> = schema.iter().map(|s| s.name).collect();
                    errors.push(format!(
                        "unknown section [{sec_name}] for scenario {} (expected {})",
                        sc.id(),
                        known.join(", ")
                    ));
                    continue;
                };
                let toml::Value::Table(t) = v else {
                    errors.push(format!("[{sec_name}] must be a section"));
                    continue;
                };
                for (k, val) in t {
                    match sec.params.iter().find(|p| p.key == k) {
                        None => errors.push(format!("unknown key [{sec_name}].{k}")),
                        Some(p) => {
                            if p.kind.convert(val).is_none() {
                                errors.push(format!("[{sec_name}].{k}: expected {}, got {val}", p.kind.describe()));
                            }
                        }
                    }
                }
            }
            for sec in &schema {
                let given = table.get(sec.name).and_then(|v| v.as_table());
                let mut m = BTreeMap::new();
                for p in &sec.params {
                    let v = given
                        .and_then(|t| t.get(p.key))
                        .and_then(|v| p.kind.convert(v))
                        .unwrap_or_else(|| p.default.clone());
                    m.insert(p.key.to_string(), v);
                }
                sections.insert(sec.name.to_string(), m);
            }
            errors.extend(cross_checks(sc, &sections));
        }

        if !errors.is_empty() {
            return Err(LabError::Validation(errors));
        }
        Ok(ScenarioConfig {
            scenario: scenario.expect("validated"),
            name,
            seed,
            output,
            sections,
        })
    }

    /// Reads and parses a configuration file; the file stem is the default
    /// run name.
    pub fn load(path: &Path, default_root: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| valid_name(s))
            .unwrap_or("run");
        Self::parse(&text, default_root, stem)
    }

    /// The resolved configuration in the input format; parsing it back gives
    /// an identical configuration.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "scenario = {}", toml::Value::String(self.scenario.id().into()));
        let _ = writeln!(s, "name = {}", toml::Value::String(self.name.clone()));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(
            s,
            "output = {}",
            toml::Value::String(self.output.to_string_lossy().into_owned())
        );
        for sec in self.scenario.schema() {
            let _ = writeln!(s, "\n[{}]", sec.name);
            for p in &sec.params {
                let _ = writeln!(s, "{} = {}", p.key, self.sections[sec.name][p.key].to_toml());
            }
        }
        s
    }

    fn get(&self, sec: &str, key: &str) -> &Value {
        self.sections
            .get(sec)
            .and_then(|m| m.get(key))
            .unwrap_or_else(|| panic!("[{sec}].{key} is not in the {} schema", self.scenario.id()))
    }

    pub fn f64(&self, sec: &str, key: &str) -> f64 {
        match self.get(sec, key) {
            Value::Float(v) => *v,
            v => panic!("[{sec}].{key} is {v:?}, not a float"),
        }
    }

    pub fn usize(&self, sec: &str, key: &str) -> usize {
        match self.get(sec, key) {
            Value::Int(v) => *v as usize,
            v => panic!("[{sec}].{key} is {v:?}, not an integer"),
        }
    }

    pub fn bool(&self, sec: &str, key: &str) -> bool {
        match self.get(sec, key) {
            Value::Bool(v) => *v,
            v => panic!("[{sec}].{key} is {v:?}, not a bool"),
        }
    }

    pub fn str(&self, sec: &str, key: &str) -> &str {
        match self.get(sec, key) {
            Value::Str(v) => v,
            v => panic!("[{sec}].{key} is {v:?}, not a string"),
        }
    }

    pub fn floats(&self, sec: &str, key: &str) -> &[f64] {
        match self.get(sec, key) {
            Value::Floats(v) => v,
            v => panic!("[{sec}].{key} is {v:?}, not a float list"),
        }
    }

    pub fn ints(&self, sec: &str, key: &str) -> Vec<usize> {
        match self.get(sec, key) {
            Value::Ints(v) => v.iter().map(|&x| x as usize).collect(),
            v => panic!("[{sec}].{key} is {v:?}, not an integer list"),
        }
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

fn cross_checks(sc: Scenario, sections: &BTreeMap<String, BTreeMap<String, Value>>) -> Vec<String> {
    let mut errors = Vec::new();
    let f = |s: &str, k: &str| match &sections[s][k] {
        Value::Float(v) => *v,
        _ => unreachable!(),
    };
    let i = |s: &str, k: &str| match &sections[s][k] {
        Value::Int(v) => *v,
        _ => unreachable!(),
    };
    match sc {
        Scenario::ChannelGrowth => {
            if f("curves", "band_low") >= f("curves", "band_high") {
                errors.push("[curves]: band_low must be below band_high".into());
            }
        }
        Scenario::Model1d => {
            let closure = match &sections["model"]["closure"] {
                Value::Str(s) => s.as_str(),
                _ => unreachable!(),
            };
            if closure == "scale-invariant-euler" && i("model", "n") % i("model", "symmetry") != 0 {
                errors.push("[model]: n must be a multiple of symmetry for scale-invariant-euler".into());
            }
        }
        _ => {}
    }
    errors
}
