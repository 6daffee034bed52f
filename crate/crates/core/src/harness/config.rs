//! Flat `key=value` experiment configs.
//!
//! Keys are dotted (`map.family`, `target.rho`, `scaling.L`, ...). Numbers
//! accept plain literals, fractions (`1/3`) and powers (`2^-12`). Echoing a
//! config writes every key, so `parse(echo(cfg)) == cfg`.

use std::collections::BTreeMap;
use std::fmt;

use crate::dynamics::MapSystem;
use crate::error::{Error, Result};
use crate::measure::DensitySettings;
use crate::targets::{ScalingRule, TargetFamily};

pub type KeyValues = BTreeMap<String, String>;

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<KeyValues> {
    let mut out = KeyValues::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

/// Number with optional `a/b` or `b^e` form.
pub fn parse_f64(s: &str) -> Result<f64> {
    let bad = || Error::Config(format!("bad number `{s}`"));
    let s = s.trim();
    let v = if let Some((a, b)) = s.split_once('/') {
        parse_f64(a)? / parse_f64(b)?
    } else if let Some((b, e)) = s.split_once('^') {
        parse_f64(b)?.powf(parse_f64(e)?)
    } else {
        s.parse::<f64>().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

pub fn parse_u64(s: &str) -> Result<u64> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    let v = parse_f64(s)?;
    if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 {
        Ok(v as u64)
    } else {
        Err(Error::Config(format!("`{s}` is not a nonnegative integer")))
    }
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{s}`"))),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(parse_f64).collect()
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0])
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Reads keys off a map, remembering which were used.
struct Reader<'a> {
    kv: &'a KeyValues,
    used: std::cell::RefCell<Vec<String>>,
}

impl<'a> Reader<'a> {
    fn new(kv: &'a KeyValues) -> Self {
        Reader { kv, used: Default::default() }
    }

    fn raw(&self, key: &str) -> Result<&'a str> {
        self.used.borrow_mut().push(key.to_string());
        self.kv
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn opt(&self, key: &str) -> Option<&'a str> {
        self.used.borrow_mut().push(key.to_string());
        self.kv.get(key).map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.raw(key)?).map_err(|e| Error::Config(format!("{key}: {e}")))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        parse_u64(self.raw(key)?).map_err(|e| Error::Config(format!("{key}: {e}")))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    fn bool(&self, key: &str) -> Result<bool> {
        parse_bool(self.raw(key)?).map_err(|e| Error::Config(format!("{key}: {e}")))
    }

    fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.kv.keys().filter(|k| !used.contains(k)).cloned().collect()
    }
}

/// Map description.
#[derive(Clone, Debug, PartialEq)]
pub enum MapSpec {
    Doubling,
    Perturbed { eps: f64 },
    Pm { alpha: f64 },
    Product(Box<MapSpec>, Box<MapSpec>),
}

impl MapSpec {
    pub fn build(&self) -> Result<MapSystem> {
        match self {
            MapSpec::Doubling => Ok(MapSystem::Doubling),
            MapSpec::Perturbed { eps } => MapSystem::perturbed(*eps),
            MapSpec::Pm { alpha } => MapSystem::pomeau_manneville(*alpha),
            MapSpec::Product(a, b) => MapSystem::product(a.build()?, b.build()?),
        }
    }

    fn write(&self, prefix: &str, out: &mut KeyValues) {
        let key = |k: &str| format!("{prefix}.{k}");
        match self {
            MapSpec::Doubling => {
                out.insert(key("family"), "doubling".into());
            }
            MapSpec::Perturbed { eps } => {
                out.insert(key("family"), "perturbed".into());
                out.insert(key("eps"), eps.to_string());
            }
            MapSpec::Pm { alpha } => {
                out.insert(key("family"), "pm".into());
                out.insert(key("alpha"), alpha.to_string());
            }
            MapSpec::Product(a, b) => {
                out.insert(key("family"), "product".into());
                a.write(&key("left"), out);
                b.write(&key("right"), out);
            }
        }
    }

    fn read(prefix: &str, r: &Reader) -> Result<Self> {
        let key = |k: &str| format!("{prefix}.{k}");
        match r.raw(&key("family"))? {
            "doubling" => Ok(MapSpec::Doubling),
            "perturbed" => Ok(MapSpec::Perturbed { eps: r.f64(&key("eps"))? }),
            "pm" => Ok(MapSpec::Pm { alpha: r.f64(&key("alpha"))? }),
            "product" => Ok(MapSpec::Product(
                Box::new(MapSpec::read(&key("left"), r)?),
                Box::new(MapSpec::read(&key("right"), r)?),
            )),
            other => Err(Error::Unknown { kind: "map family", name: other.into() }),
        }
    }

    /// Compact form used on the command line: `doubling`, `perturbed:eps=0.05`,
    /// `pm:alpha=0.25`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = KeyValues::new();
        kv.insert("map.family".into(), family.trim().into());
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("map parameter `{part}` is not key=value")))?;
            kv.insert(format!("map.{}", k.trim()), v.trim().into());
        }
        let r = Reader::new(&kv);
        let spec = MapSpec::read("map", &r)?;
        if let Some(k) = r.unused().first() {
            return Err(Error::Config(format!("unknown map parameter `{k}`")));
        }
        Ok(spec)
    }

    fn alpha(&self) -> Option<f64> {
        match self {
            MapSpec::Pm { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Doubling => write!(f, "doubling"),
            MapSpec::Perturbed { eps } => write!(f, "perturbed(eps={eps})"),
            MapSpec::Pm { alpha } => write!(f, "pm(alpha={alpha})"),
            MapSpec::Product(a, b) => write!(f, "{a} x {b}"),
        }
    }
}

/// Target description; parabolic targets take `alpha` from the map.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Ball { center: f64, rho: f64, wrap: bool },
    Union { centers: Vec<f64>, rho: f64, wrap: bool },
    Strip { x: f64, a: f64, b: f64, rho: f64 },
    Interval { a: f64, b: f64 },
    ParabolicLevel { n: usize },
    ParabolicAnnulus { n: usize, k: usize },
}

impl TargetSpec {
    pub fn build(&self, map: &MapSpec) -> Result<TargetFamily> {
        let alpha = || {
            map.alpha().ok_or_else(|| {
                Error::Config("parabolic targets need map.family=pm".into())
            })
        };
        match self {
            TargetSpec::Ball { center, rho, wrap } => TargetFamily::ball(*center, *rho, *wrap),
            TargetSpec::Union { centers, rho, wrap } => TargetFamily::union(centers.clone(), *rho, *wrap),
            TargetSpec::Strip { x, a, b, rho } => TargetFamily::strip(*x, *a, *b, *rho),
            TargetSpec::Interval { a, b } => TargetFamily::interval(*a, *b),
            TargetSpec::ParabolicLevel { n } => TargetFamily::parabolic_level(alpha()?, *n),
            TargetSpec::ParabolicAnnulus { n, k } => TargetFamily::parabolic_annulus(alpha()?, *n, *k),
        }
    }

    /// Radius of ball-like targets.
    pub fn rho(&self) -> Option<f64> {
        match self {
            TargetSpec::Ball { rho, .. } | TargetSpec::Union { rho, .. } | TargetSpec::Strip { rho, .. } => Some(*rho),
            _ => None,
        }
    }

    pub fn with_rho(&self, r: f64) -> Result<Self> {
        let mut s = self.clone();
        match &mut s {
            TargetSpec::Ball { rho, .. } | TargetSpec::Union { rho, .. } | TargetSpec::Strip { rho, .. } => *rho = r,
            _ => return Err(Error::Config("this target kind has no radius to sweep".into())),
        }
        Ok(s)
    }

    pub fn with_level(&self, level: usize) -> Result<Self> {
        let mut s = self.clone();
        match &mut s {
            TargetSpec::ParabolicLevel { n } | TargetSpec::ParabolicAnnulus { n, .. } => *n = level,
            _ => return Err(Error::Config("only parabolic targets have a level to sweep".into())),
        }
        Ok(s)
    }

    fn write(&self, out: &mut KeyValues) {
        let mut put = |k: &str, v: String| {
            out.insert(format!("target.{k}"), v);
        };
        match self {
            TargetSpec::Ball { center, rho, wrap } => {
                put("kind", "ball".into());
                put("center", center.to_string());
                put("rho", rho.to_string());
                put("wrap", wrap.to_string());
            }
            TargetSpec::Union { centers, rho, wrap } => {
                put("kind", "union".into());
                put("centers", join(centers));
                put("rho", rho.to_string());
                put("wrap", wrap.to_string());
            }
            TargetSpec::Strip { x, a, b, rho } => {
                put("kind", "strip".into());
                put("x", x.to_string());
                put("a", a.to_string());
                put("b", b.to_string());
                put("rho", rho.to_string());
            }
            TargetSpec::Interval { a, b } => {
                put("kind", "interval".into());
                put("a", a.to_string());
                put("b", b.to_string());
            }
            TargetSpec::ParabolicLevel { n } => {
                put("kind", "parabolic_level".into());
                put("n", n.to_string());
            }
            TargetSpec::ParabolicAnnulus { n, k } => {
                put("kind", "parabolic_annulus".into());
                put("n", n.to_string());
                put("K", k.to_string());
            }
        }
    }

    fn read(r: &Reader) -> Result<Self> {
        let wrap = || r.opt("target.wrap").map_or(Ok(false), parse_bool);
        Ok(match r.raw("target.kind")? {
            "ball" => TargetSpec::Ball {
                center: r.f64("target.center")?,
                rho: r.f64("target.rho")?,
                wrap: wrap()?,
            },
            "union" => TargetSpec::Union {
                centers: parse_list(r.raw("target.centers")?)?,
                rho: r.f64("target.rho")?,
                wrap: wrap()?,
            },
            "strip" => TargetSpec::Strip {
                x: r.f64("target.x")?,
                a: r.f64("target.a")?,
                b: r.f64("target.b")?,
                rho: r.f64("target.rho")?,
            },
            "interval" => TargetSpec::Interval { a: r.f64("target.a")?, b: r.f64("target.b")? },
            "parabolic_level" => TargetSpec::ParabolicLevel { n: r.usize("target.n")? },
            "parabolic_annulus" => TargetSpec::ParabolicAnnulus {
                n: r.usize("target.n")?,
                k: r.usize("target.K")?,
            },
            other => return Err(Error::Unknown { kind: "target kind", name: other.into() }),
        })
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Ball { center, rho, wrap } => write!(f, "ball(center={center}, rho={rho:e}, wrap={wrap})"),
            TargetSpec::Union { centers, rho, wrap } => {
                write!(f, "union(centers=[{}], rho={rho:e}, wrap={wrap})", join(centers))
            }
            TargetSpec::Strip { x, a, b, rho } => write!(f, "strip(x={x}, [{a}, {b}], rho={rho:e})"),
            TargetSpec::Interval { a, b } => write!(f, "interval([{a}, {b}])"),
            TargetSpec::ParabolicLevel { n } => write!(f, "parabolic_level(n={n})"),
            TargetSpec::ParabolicAnnulus { n, k } => write!(f, "parabolic_annulus(n={n}, K={k})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingKind {
    Kac,
    Empirical,
}

/// Scaling rule plus the block length used by the cluster estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingSpec {
    pub kind: ScalingKind,
    pub t: f64,
    pub block: u64,
}

impl ScalingSpec {
    pub fn rule(&self) -> ScalingRule {
        match self.kind {
            ScalingKind::Kac => ScalingRule::Kac { t: self.t },
            ScalingKind::Empirical => ScalingRule::Empirical { t: self.t, block: self.block },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitProbRoute {
    Auto,
    Direct,
    EntryTime,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepSpec {
    Rho(Vec<f64>),
    Level(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Largest accepted total variation to the predicted law.
    pub tv: f64,
    /// Largest accepted gap between estimated and predicted extremal index.
    pub extremal_index: f64,
    /// Cluster probabilities must sit within this many standard errors.
    pub lambda_sigmas: f64,
    /// Number of cluster probabilities checked.
    pub lambda_terms: usize,
    /// Largest accepted gap between fitted and predicted sweep slopes.
    pub slope: f64,
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: String,
    pub map: MapSpec,
    pub target: TargetSpec,
    pub scaling: ScalingSpec,
    /// Annulus width exponent: `K = ceil(L^k_exponent)`.
    pub k_exponent: f64,
    pub seed: u64,
    pub trials: u64,
    pub lambda_trials: u64,
    pub alpha_trials: u64,
    pub hitprob_trials: u64,
    pub hitprob_route: HitProbRoute,
    pub ell_max: usize,
    pub k_max: usize,
    pub burn_in: u64,
    pub density: DensitySettings,
    pub max_period: usize,
    pub period_tol: f64,
    pub spectrum_len: usize,
    pub gamma_draws: u64,
    pub gamma_i_max: usize,
    pub tolerances: Tolerances,
    /// Largest number of map evaluations a run may request.
    pub max_steps: f64,
    pub sweep: Option<SweepSpec>,
    pub sweep_horizon_only: bool,
}

impl ExperimentConfig {
    /// Defaults shared by all presets; presets override map, target and scaling.
    pub fn base(preset: &str) -> Self {
        ExperimentConfig {
            preset: preset.into(),
            map: MapSpec::Doubling,
            target: TargetSpec::Ball { center: 0.5, rho: 1.0 / 65536.0, wrap: false },
            scaling: ScalingSpec { kind: ScalingKind::Empirical, t: 1.0, block: 256 },
            k_exponent: 0.5,
            seed: 20_240_601,
            trials: 100_000,
            lambda_trials: 1_000_000,
            alpha_trials: 100_000,
            hitprob_trials: 200_000,
            hitprob_route: HitProbRoute::Auto,
            ell_max: 12,
            k_max: 30,
            burn_in: 1_000,
            density: DensitySettings::default(),
            max_period: 16,
            period_tol: 1e-9,
            spectrum_len: 60,
            gamma_draws: 200_000,
            gamma_i_max: 64,
            tolerances: Tolerances {
                tv: 0.03,
                extremal_index: 0.02,
                lambda_sigmas: 3.0,
                lambda_terms: 5,
                slope: 0.3,
            },
            max_steps: 2e10,
            sweep: None,
            sweep_horizon_only: false,
        }
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut o = KeyValues::new();
        let mut put = |k: &str, v: String| {
            o.insert(k.to_string(), v);
        };
        put("preset", self.preset.clone());
        put("seed", self.seed.to_string());
        put("trials", self.trials.to_string());
        put("lambda.trials", self.lambda_trials.to_string());
        put("alpha.trials", self.alpha_trials.to_string());
        put("hitprob.trials", self.hitprob_trials.to_string());
        put(
            "hitprob.method",
            match self.hitprob_route {
                HitProbRoute::Auto => "auto",
                HitProbRoute::Direct => "direct",
                HitProbRoute::EntryTime => "entry_time",
            }
            .into(),
        );
        put("ell_max", self.ell_max.to_string());
        put("k_max", self.k_max.to_string());
        put("burn_in", self.burn_in.to_string());
        put("density.bins", self.density.bins.to_string());
        put("density.orbit_length", self.density.orbit_length.to_string());
        put("density.burn_in", self.density.burn_in.to_string());
        put(
            "scaling.kind",
            match self.scaling.kind {
                ScalingKind::Kac => "kac",
                ScalingKind::Empirical => "empirical",
            }
            .into(),
        );
        put("scaling.t", self.scaling.t.to_string());
        put("scaling.L", self.scaling.block.to_string());
        put("parabolic.K_exponent", self.k_exponent.to_string());
        put("predict.max_period", self.max_period.to_string());
        put("predict.period_tol", self.period_tol.to_string());
        put("predict.spectrum_len", self.spectrum_len.to_string());
        put("gamma.draws", self.gamma_draws.to_string());
        put("gamma.i_max", self.gamma_i_max.to_string());
        put("tolerance.tv", self.tolerances.tv.to_string());
        put("tolerance.extremal_index", self.tolerances.extremal_index.to_string());
        put("tolerance.lambda_sigmas", self.tolerances.lambda_sigmas.to_string());
        put("tolerance.lambda_terms", self.tolerances.lambda_terms.to_string());
        put("tolerance.slope", self.tolerances.slope.to_string());
        put("budget.max_steps", self.max_steps.to_string());
        match &self.sweep {
            Some(SweepSpec::Rho(v)) => {
                put("sweep.param", "rho".into());
                put("sweep.values", join(v));
            }
            Some(SweepSpec::Level(v)) => {
                put("sweep.param", "n".into());
                put("sweep.values", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            }
            None => {}
        }
        put("sweep.horizon_only", self.sweep_horizon_only.to_string());
        self.map.write("map", &mut o);
        self.target.write(&mut o);
        o
    }

    /// Strict parse: every key must be known and every required key present.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let r = Reader::new(kv);
        let hitprob_route = match r.raw("hitprob.method")? {
            "auto" => HitProbRoute::Auto,
            "direct" => HitProbRoute::Direct,
            "entry_time" => HitProbRoute::EntryTime,
            other => return Err(Error::Unknown { kind: "hit probability method", name: other.into() }),
        };
        let kind = match r.raw("scaling.kind")? {
            "kac" => ScalingKind::Kac,
            "empirical" => ScalingKind::Empirical,
            other => return Err(Error::Unknown { kind: "scaling rule", name: other.into() }),
        };
        let sweep = match r.opt("sweep.param") {
            None => None,
            Some("rho") => Some(SweepSpec::Rho(parse_list(r.raw("sweep.values")?)?)),
            Some("n") => Some(SweepSpec::Level(
                r.raw("sweep.values")?
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_u64(s).map(|v| v as usize))
                    .collect::<Result<_>>()?,
            )),
            Some(other) => return Err(Error::Unknown { kind: "sweep parameter", name: other.into() }),
        };
        let map = MapSpec::read("map", &r)?;
        let cfg = ExperimentConfig {
            preset: r.raw("preset")?.to_string(),
            target: TargetSpec::read(&r)?,
            map,
            scaling: ScalingSpec { kind, t: r.f64("scaling.t")?, block: r.u64("scaling.L")? },
            k_exponent: r.f64("parabolic.K_exponent")?,
            seed: r.u64("seed")?,
            trials: r.u64("trials")?,
            lambda_trials: r.u64("lambda.trials")?,
            alpha_trials: r.u64("alpha.trials")?,
            hitprob_trials: r.u64("hitprob.trials")?,
            hitprob_route,
            ell_max: r.usize("ell_max")?,
            k_max: r.usize("k_max")?,
            burn_in: r.u64("burn_in")?,
            density: DensitySettings {
                bins: r.usize("density.bins")?,
                orbit_length: r.u64("density.orbit_length")?,
                burn_in: r.u64("density.burn_in")?,
            },
            max_period: r.usize("predict.max_period")?,
            period_tol: r.f64("predict.period_tol")?,
            spectrum_len: r.usize("predict.spectrum_len")?,
            gamma_draws: r.u64("gamma.draws")?,
            gamma_i_max: r.usize("gamma.i_max")?,
            tolerances: Tolerances {
                tv: r.f64("tolerance.tv")?,
                extremal_index: r.f64("tolerance.extremal_index")?,
                lambda_sigmas: r.f64("tolerance.lambda_sigmas")?,
                lambda_terms: r.usize("tolerance.lambda_terms")?,
                slope: r.f64("tolerance.slope")?,
            },
            max_steps: r.f64("budget.max_steps")?,
            sweep,
            sweep_horizon_only: r.bool("sweep.horizon_only")?,
        };
        if let Some(k) = r.unused().first() {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies overrides on top of this config. Changing `map.family` or
    /// `target.kind` drops the old family's parameters first.
    pub fn with_overrides(&self, overrides: &KeyValues) -> Result<Self> {
        let mut kv = self.to_kv();
        for (group, family_key) in [("map.", "map.family"), ("target.", "target.kind")] {
            if overrides.contains_key(family_key) {
                kv.retain(|k, _| !k.starts_with(group));
            }
        }
        if overrides.contains_key("sweep.param") {
            kv.remove("sweep.values");
        }
        for (k, v) in overrides {
            kv.insert(k.clone(), v.clone());
        }
        Self::from_kv(&kv)
    }

    /// `key=value` text, one key per line, sorted.
    pub fn echo(&self) -> String {
        self.to_kv().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.into())) };
        check(self.scaling.t > 0.0, "scaling.t must be positive")?;
        check(self.scaling.block >= 2, "scaling.L must be at least 2")?;
        check(self.trials >= 1 && self.lambda_trials >= 1, "trial counts must be positive")?;
        check(self.alpha_trials >= 1 && self.hitprob_trials >= 1, "trial counts must be positive")?;
        check(self.ell_max >= 1 && self.k_max >= 1, "ell_max and k_max must be positive")?;
        check(self.k_exponent > 0.0 && self.k_exponent < 1.0, "parabolic.K_exponent must lie in (0, 1)")?;
        check(self.max_steps > 0.0, "budget.max_steps must be positive")?;
        check(self.spectrum_len >= 2, "predict.spectrum_len must be at least 2")?;
        check(self.gamma_i_max >= 1 && self.gamma_draws >= 1, "gamma settings must be positive")?;
        match &self.sweep {
            Some(SweepSpec::Rho(v)) => {
                check(v.len() >= 2, "a sweep needs at least two values")?;
                check(v.iter().all(|&r| r > 0.0), "sweep radii must be positive")?;
                check(strictly_monotone(v), "sweep values must be strictly monotone")?;
            }
            Some(SweepSpec::Level(v)) => {
                let f: Vec<f64> = v.iter().map(|&n| n as f64).collect();
                check(f.len() >= 2, "a sweep needs at least two values")?;
                check(strictly_monotone(&f), "sweep values must be strictly monotone")?;
            }
            None => {}
        }
        Ok(())
    }

    /// Annulus width `K = ceil(L^k_exponent)` for parabolic horizons.
    pub fn annulus_width(&self) -> usize {
        (self.scaling.block as f64).powf(self.k_exponent).ceil() as usize
    }

    pub fn build_map(&self) -> Result<MapSystem> {
        self.map.build()
    }

    pub fn build_target(&self) -> Result<TargetFamily> {
        self.target.build(&self.map)
    }

    /// Target whose hit probability fixes the horizon: the annulus
    /// `V_{n,K}` for parabolic targets, the target itself otherwise.
    pub fn horizon_target(&self) -> Result<TargetFamily> {
        match self.target {
            TargetSpec::ParabolicLevel { n } => TargetSpec::ParabolicAnnulus { n, k: self.annulus_width() }.build(&self.map),
            _ => self.build_target(),
        }
    }
}
