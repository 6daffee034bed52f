//! Named limit laws for the `pmf` command.

use std::collections::BTreeMap;

use crate::compound::{finite_periodic_spectrum, ClusterSpectrum, CompoundLaw};
use crate::error::{Error, Result};

use super::config::{parse_f64, parse_u64, KeyValues};

pub trait LawBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    fn usage(&self) -> &'static str;
    fn build(&self, params: &KeyValues) -> Result<CompoundLaw>;
}

pub struct LawRegistry {
    laws: BTreeMap<&'static str, Box<dyn LawBuilder>>,
}

impl LawRegistry {
    pub fn builtin() -> Self {
        let mut laws: BTreeMap<&'static str, Box<dyn LawBuilder>> = BTreeMap::new();
        let all: Vec<Box<dyn LawBuilder>> = vec![
            Box::new(PoissonLaw),
            Box::new(PolyaAeppliLaw),
            Box::new(CompoundPoissonLaw),
            Box::new(CompoundBinomialLaw),
            Box::new(FinitePeriodicLaw),
        ];
        for l in all {
            laws.insert(l.name(), l);
        }
        LawRegistry { laws }
    }

    pub fn register(&mut self, l: Box<dyn LawBuilder>) {
        self.laws.insert(l.name(), l);
    }

    pub fn get(&self, name: &str) -> Result<&dyn LawBuilder> {
        self.laws
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Unknown { kind: "law", name: name.into() })
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn LawBuilder> + '_ {
        self.laws.values().map(|b| b.as_ref())
    }
}

struct Params<'a> {
    law: &'static str,
    kv: &'a KeyValues,
    allowed: &'static [&'static str],
}

impl<'a> Params<'a> {
    fn new(law: &'static str, kv: &'a KeyValues, allowed: &'static [&'static str]) -> Result<Self> {
        if let Some(k) = kv.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("law `{law}` has no parameter `{k}`")));
        }
        Ok(Params { law, kv, allowed })
    }

    fn raw(&self, key: &str) -> Result<&'a str> {
        debug_assert!(self.allowed.contains(&key));
        self.kv
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("law `{}` needs `{key}`", self.law)))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.raw(key)?)
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)?.split(',').filter(|s| !s.trim().is_empty()).map(parse_f64).collect()
    }

    fn spectrum(&self) -> Result<ClusterSpectrum> {
        let probs = self.list("lambda")?;
        let total: f64 = probs.iter().sum();
        ClusterSpectrum::new(probs, (1.0 - total).max(0.0))
    }
}

struct PoissonLaw;

impl LawBuilder for PoissonLaw {
    fn name(&self) -> &'static str {
        "poisson"
    }
    fn usage(&self) -> &'static str {
        "t=<intensity>"
    }
    fn build(&self, kv: &KeyValues) -> Result<CompoundLaw> {
        let p = Params::new(self.name(), kv, &["t"])?;
        Ok(CompoundLaw::Poisson { t: p.f64("t")? })
    }
}

struct PolyaAeppliLaw;

impl LawBuilder for PolyaAeppliLaw {
    fn name(&self) -> &'static str {
        "polya-aeppli"
    }
    fn usage(&self) -> &'static str {
        "t=<intensity> theta=<ratio in [0,1)>"
    }
    fn build(&self, kv: &KeyValues) -> Result<CompoundLaw> {
        let p = Params::new(self.name(), kv, &["t", "theta"])?;
        Ok(CompoundLaw::PolyaAeppli { t: p.f64("t")?, theta: p.f64("theta")? })
    }
}

struct CompoundPoissonLaw;

impl LawBuilder for CompoundPoissonLaw {
    fn name(&self) -> &'static str {
        "compound-poisson"
    }
    fn usage(&self) -> &'static str {
        "t=<intensity> lambda=<l1,l2,...>"
    }
    fn build(&self, kv: &KeyValues) -> Result<CompoundLaw> {
        let p = Params::new(self.name(), kv, &["t", "lambda"])?;
        Ok(CompoundLaw::CompoundPoisson { t: p.f64("t")?, spectrum: p.spectrum()? })
    }
}

struct CompoundBinomialLaw;

impl LawBuilder for CompoundBinomialLaw {
    fn name(&self) -> &'static str {
        "compound-binomial"
    }
    fn usage(&self) -> &'static str {
        "n=<trials> p=<probability> lambda=<l1,l2,...>"
    }
    fn build(&self, kv: &KeyValues) -> Result<CompoundLaw> {
        let p = Params::new(self.name(), kv, &["n", "p", "lambda"])?;
        Ok(CompoundLaw::CompoundBinomial {
            trials: parse_u64(p.raw("n")?)?,
            p: p.f64("p")?,
            spectrum: p.spectrum()?,
        })
    }
}

/// Compound Poisson with the spectrum of a union of balls around periodic points.
struct FinitePeriodicLaw;

impl LawBuilder for FinitePeriodicLaw {
    fn name(&self) -> &'static str {
        "finite-periodic"
    }
    fn usage(&self) -> &'static str {
        "t=<intensity> thetas=<th1,th2,...> weights=<h1,h2,...> [len=<terms>]"
    }
    fn build(&self, kv: &KeyValues) -> Result<CompoundLaw> {
        let p = Params::new(self.name(), kv, &["t", "thetas", "weights", "len"])?;
        let len = match kv.get("len") {
            Some(v) => parse_u64(v)? as usize,
            None => 60,
        };
        let (_, spectrum) = finite_periodic_spectrum(&p.list("thetas")?, &p.list("weights")?, len)?;
        Ok(CompoundLaw::CompoundPoisson { t: p.f64("t")?, spectrum })
    }
}
