//! Sampling from the invariant measure conditioned on a target.
//!
//! Three routes, picked per target:
//!
//! * exact or importance-weighted uniform draws over the target's intervals
//!   (exact when the density model is Lebesgue);
//! * rejection from stationary starts, for histogram models and targets of
//!   reasonable measure;
//! * for parabolic sets, the landing construction: a point `z` lands in
//!   `[0, a_n]` from the right branch with density `h(1/2 + z/2)/2`, then
//!   drifts monotonically through the levels. Every position of the drift
//!   inside the target is an exact draw of `mu` restricted to the target, so
//!   one landing yields a correlated group of equally weighted samples.

use rand::Rng;

use crate::dynamics::{BitWindow, Intermittent, MapSystem, OrbitState};
use crate::error::{Error, Result};
use crate::measure::{sample_stationary, DensityModel};
use crate::targets::{ParabolicSet, TargetFamily};

use super::SimulationSetup;

#[derive(Clone, Debug)]
struct Pieces {
    pieces: Vec<(f64, f64, f64)>,
    cumulative: Vec<f64>,
    weighted: bool,
}

impl Pieces {
    fn new(intervals: &[(f64, f64)], d: &DensityModel, lebesgue: bool) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for &(lo, hi) in intervals {
            let m = if lebesgue { hi - lo } else { d.interval_measure(lo, hi) };
            if m > 0.0 {
                acc += m;
                pieces.push((lo, hi, m));
                cumulative.push(acc);
            }
        }
        if pieces.is_empty() {
            return Err(Error::ZeroMeasureTarget);
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(Pieces {
            pieces,
            cumulative,
            weighted: !lebesgue,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, map: &MapSystem, d: &DensityModel, rng: &mut R) -> (OrbitState, f64) {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c < u).min(self.pieces.len() - 1);
        let (lo, hi, m) = self.pieces[i];
        let state = match map {
            MapSystem::Doubling => OrbitState::Bits(BitWindow::uniform_in(lo, hi, rng)),
            _ => OrbitState::Float(lo + (hi - lo) * rng.random::<f64>()),
        };
        let w = if self.weighted {
            d.density_at(state.value()) * (hi - lo) / m
        } else {
            1.0
        };
        (state, w)
    }
}

#[derive(Clone, Debug)]
enum Axis {
    Pieces(Pieces),
    Rejection { lo: f64, hi: f64, attempts: u64 },
}

impl Axis {
    fn new(map: &MapSystem, d: &DensityModel, lo: f64, hi: f64, threshold: f64) -> Result<Self> {
        let lebesgue = map.preserves_lebesgue() || matches!(d, DensityModel::ExactLebesgue);
        let m = d.interval_measure(lo, hi);
        if m <= 0.0 {
            return Err(Error::ZeroMeasureTarget);
        }
        if !lebesgue && m >= threshold {
            Ok(Axis::Rejection { lo, hi, attempts: attempt_cap(m) })
        } else {
            Ok(Axis::Pieces(Pieces::new(&[(lo, hi)], d, lebesgue)?))
        }
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        map: &MapSystem,
        d: &DensityModel,
        burn_in: u64,
        rng: &mut R,
    ) -> Result<(OrbitState, f64)> {
        match self {
            Axis::Pieces(p) => Ok(p.draw(map, d, rng)),
            Axis::Rejection { lo, hi, attempts } => {
                for _ in 0..*attempts {
                    let s = sample_stationary(map, d, burn_in, rng);
                    let x = s.value();
                    if x >= *lo && x <= *hi {
                        return Ok((s, 1.0));
                    }
                }
                Err(Error::EmptyConditional { attempts: *attempts })
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Plan {
    Line(Pieces),
    Rejection { attempts: u64 },
    Rectangle(Axis, Axis),
    Landing { set: ParabolicSet, pm: Intermittent },
}

/// Conditional sampler for `mu` restricted to the target of a setup.
#[derive(Clone, Debug)]
pub struct ConditionalSampler<'a> {
    setup: &'a SimulationSetup<'a>,
    plan: Plan,
}

fn attempt_cap(measure: f64) -> u64 {
    ((200.0 / measure).ceil() as u64).max(10_000)
}

impl<'a> ConditionalSampler<'a> {
    pub fn new(setup: &'a SimulationSetup<'a>) -> Result<Self> {
        let (map, d, target) = (setup.map, setup.density, setup.target);
        let plan = match target {
            TargetFamily::ParabolicLevel(s) | TargetFamily::ParabolicAnnulus(s) => match map {
                MapSystem::PomeauManneville(pm) if pm.alpha() == s.alpha => Plan::Landing {
                    set: s.clone(),
                    pm: *pm,
                },
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "parabolic target with alpha {} needs the matching intermittent map, got {}",
                        s.alpha,
                        map.name()
                    )))
                }
            },
            TargetFamily::ProductStrip { .. } => {
                let (MapSystem::Product(ma, mb), Some((da, db))) = (map, d.components()) else {
                    return Err(Error::DimensionMismatch(
                        "strip target needs a product map and density".into(),
                    ));
                };
                let ((a, b), (c, e)) = target.rectangle().expect("strip");
                let t = setup.rejection_min_measure;
                Plan::Rectangle(Axis::new(ma, da, a, b, t)?, Axis::new(mb, db, c, e, t)?)
            }
            _ => {
                if map.dimension() != 1 {
                    return Err(Error::DimensionMismatch(
                        "one-dimensional target on a product map".into(),
                    ));
                }
                let lebesgue = map.preserves_lebesgue() || matches!(d, DensityModel::ExactLebesgue);
                let m = target.measure(d)?;
                if !lebesgue && m >= setup.rejection_min_measure {
                    Plan::Rejection { attempts: attempt_cap(m) }
                } else {
                    Plan::Line(Pieces::new(&target.intervals(), d, lebesgue)?)
                }
            }
        };
        Ok(ConditionalSampler { setup, plan })
    }

    /// True when draws come in correlated groups (landing construction).
    pub fn grouped(&self) -> bool {
        matches!(self.plan, Plan::Landing { .. })
    }

    /// One draw: calls `visit(state, weight)` for each sample of the group.
    pub fn draw<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        mut visit: impl FnMut(OrbitState, f64, &mut R),
    ) -> Result<()> {
        let s = self.setup;
        match &self.plan {
            Plan::Line(p) => {
                let (st, w) = p.draw(s.map, s.density, rng);
                visit(st, w, rng);
            }
            Plan::Rejection { attempts } => {
                for _ in 0..*attempts {
                    let st = sample_stationary(s.map, s.density, s.burn_in, rng);
                    if s.target.contains(st.point()) {
                        visit(st, 1.0, rng);
                        return Ok(());
                    }
                }
                return Err(Error::EmptyConditional { attempts: *attempts });
            }
            Plan::Rectangle(ax, ay) => {
                let (MapSystem::Product(ma, mb), Some((da, db))) = (s.map, s.density.components()) else {
                    unreachable!("checked in new")
                };
                let (u, wu) = ax.draw(ma, da, s.burn_in, rng)?;
                let (v, wv) = ay.draw(mb, db, s.burn_in, rng)?;
                visit(OrbitState::Pair(Box::new(u), Box::new(v)), wu * wv, rng);
            }
            Plan::Landing { set, pm } => {
                let z = loop {
                    let z = set.outer * (1.0 - rng.random::<f64>());
                    if z > 0.0 {
                        break z;
                    }
                };
                let w = s.density.density_at(0.5 + 0.5 * z);
                let mut x = z;
                while x <= set.outer {
                    if x > set.inner || set.width == 0 {
                        visit(OrbitState::Float(x), w, rng);
                    }
                    x = pm.left(x);
                }
            }
        }
        Ok(())
    }
}
