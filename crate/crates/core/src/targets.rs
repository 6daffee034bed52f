//! Shrinking target sets, their measures and the horizon rule.
//!
//! Parabolic targets sit at the neutral fixed point of the intermittent map.
//! Their measures are not read off the histogram (whose first bin cannot
//! resolve the `x^-alpha` singularity) but pulled back through the right
//! inverse branch `psi_1(x) = 1/2 + x/2`: invariance gives
//! `mu([0, a_k]) - mu([0, a_{k+1}]) = mu([1/2, 1/2 + a_k/2])`, and the
//! density is smooth at `1/2`.

use crate::dynamics::{a_sequence, Point};
use crate::error::{ensure, Error, Result};
use crate::measure::DensityModel;

/// Level sets at the neutral fixed point: `(a_{n+K}, a_n]`, or `[0, a_n]` when `width == 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicSet {
    pub alpha: f64,
    pub n: usize,
    pub width: usize,
    pub outer: f64,
    pub inner: f64,
}

impl ParabolicSet {
    fn new(alpha: f64, n: usize, width: usize) -> Result<Self> {
        ensure(n >= 1, || "parabolic level index must be at least 1".into())?;
        let a = a_sequence(alpha, n + width)?;
        Ok(ParabolicSet {
            alpha,
            n,
            width,
            outer: a[n],
            inner: if width == 0 { 0.0 } else { a[n + width] },
        })
    }

    #[inline]
    fn contains(&self, x: f64) -> bool {
        if self.width == 0 {
            (0.0..=self.outer).contains(&x)
        } else {
            x > self.inner && x <= self.outer
        }
    }
}

/// Target families.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetFamily {
    /// Open ball; with `wrap` the distance is taken on the circle.
    Ball { center: f64, radius: f64, wrap: bool },
    /// Disjoint union of balls of a common radius.
    FiniteUnion { centers: Vec<f64>, radius: f64, wrap: bool },
    /// `B_radius(x) x [lower - radius, upper + radius]`, clipped to the square.
    ProductStrip { x: f64, lower: f64, upper: f64, radius: f64 },
    /// Closed interval `[lower, upper]`.
    Interval { lower: f64, upper: f64 },
    ParabolicLevel(ParabolicSet),
    ParabolicAnnulus(ParabolicSet),
}

impl TargetFamily {
    pub fn ball(center: f64, radius: f64, wrap: bool) -> Result<Self> {
        check_unit(center)?;
        check_radius(radius)?;
        Ok(TargetFamily::Ball { center, radius, wrap })
    }

    pub fn union(centers: Vec<f64>, radius: f64, wrap: bool) -> Result<Self> {
        ensure(!centers.is_empty(), || "finite union needs at least one center".into())?;
        for &c in &centers {
            check_unit(c)?;
        }
        check_radius(radius)?;
        for (i, &a) in centers.iter().enumerate() {
            for &b in &centers[i + 1..] {
                let mut d = (a - b).abs();
                if wrap {
                    d = d.min(1.0 - d);
                }
                if d < 2.0 * radius {
                    return Err(Error::OverlappingUnion { a, b, radius });
                }
            }
        }
        Ok(TargetFamily::FiniteUnion { centers, radius, wrap })
    }

    pub fn strip(x: f64, lower: f64, upper: f64, radius: f64) -> Result<Self> {
        check_unit(x)?;
        check_unit(lower)?;
        check_unit(upper)?;
        ensure(lower <= upper, || format!("strip interval [{lower}, {upper}] is empty"))?;
        check_radius(radius)?;
        Ok(TargetFamily::ProductStrip { x, lower, upper, radius })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        check_unit(lower)?;
        check_unit(upper)?;
        ensure(lower < upper, || format!("interval [{lower}, {upper}] is empty"))?;
        Ok(TargetFamily::Interval { lower, upper })
    }

    /// `U_n = [0, a_n]`.
    pub fn parabolic_level(alpha: f64, n: usize) -> Result<Self> {
        Ok(TargetFamily::ParabolicLevel(ParabolicSet::new(alpha, n, 0)?))
    }

    /// `V_{n,K} = U_n \ U_{n+K}`.
    pub fn parabolic_annulus(alpha: f64, n: usize, k: usize) -> Result<Self> {
        ensure(k >= 1, || "annulus width must be at least 1".into())?;
        Ok(TargetFamily::ParabolicAnnulus(ParabolicSet::new(alpha, n, k)?))
    }

    pub fn dimension(&self) -> usize {
        match self {
            TargetFamily::ProductStrip { .. } => 2,
            _ => 1,
        }
    }

    pub fn parabolic(&self) -> Option<&ParabolicSet> {
        match self {
            TargetFamily::ParabolicLevel(p) | TargetFamily::ParabolicAnnulus(p) => Some(p),
            _ => None,
        }
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        match (self, p) {
            (TargetFamily::Ball { center, radius, wrap }, Point::Line(u)) => {
                dist(u, *center, *wrap) < *radius
            }
            (TargetFamily::FiniteUnion { centers, radius, wrap }, Point::Line(u)) => {
                centers.iter().any(|c| dist(u, *c, *wrap) < *radius)
            }
            (TargetFamily::ProductStrip { x, lower, upper, radius }, Point::Plane(u, v)) => {
                (u - x).abs() < *radius && v >= lower - radius && v <= upper + radius
            }
            (TargetFamily::Interval { lower, upper }, Point::Line(u)) => u >= *lower && u <= *upper,
            (TargetFamily::ParabolicLevel(s), Point::Line(u))
            | (TargetFamily::ParabolicAnnulus(s), Point::Line(u)) => s.contains(u),
            _ => false,
        }
    }

    /// Disjoint intervals making up a one-dimensional target, clipped to `[0, 1]`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let balls = |centers: &[f64], radius: f64, wrap: bool| {
            let mut out = Vec::new();
            for &c in centers {
                let (lo, hi) = (c - radius, c + radius);
                out.push((lo.max(0.0), hi.min(1.0)));
                if wrap && lo < 0.0 {
                    out.push((1.0 + lo, 1.0));
                }
                if wrap && hi > 1.0 {
                    out.push((0.0, hi - 1.0));
                }
            }
            out.retain(|(a, b)| b > a);
            out
        };
        match self {
            TargetFamily::Ball { center, radius, wrap } => balls(&[*center], *radius, *wrap),
            TargetFamily::FiniteUnion { centers, radius, wrap } => balls(centers, *radius, *wrap),
            TargetFamily::Interval { lower, upper } => vec![(*lower, *upper)],
            TargetFamily::ParabolicLevel(s) | TargetFamily::ParabolicAnnulus(s) => {
                vec![(s.inner, s.outer)]
            }
            TargetFamily::ProductStrip { x, .. } => vec![(x.max(0.0), x.min(1.0))],
        }
    }

    /// Sides of the strip rectangle.
    pub fn rectangle(&self) -> Option<((f64, f64), (f64, f64))> {
        match self {
            TargetFamily::ProductStrip { x, lower, upper, radius } => Some((
                ((x - radius).max(0.0), (x + radius).min(1.0)),
                ((lower - radius).max(0.0), (upper + radius).min(1.0)),
            )),
            _ => None,
        }
    }

    /// `mu(U)` under the density model.
    pub fn measure(&self, d: &DensityModel) -> Result<f64> {
        let m = match self {
            TargetFamily::ProductStrip { .. } => {
                let ((a, b), (c, e)) = self.rectangle().expect("strip");
                d.rectangle_measure(a, b, c, e)?
            }
            _ if d.dimension() != 1 => {
                return Err(Error::DimensionMismatch(
                    "one-dimensional target under a product density".into(),
                ))
            }
            TargetFamily::ParabolicAnnulus(s) => {
                let a = a_sequence(s.alpha, s.n + s.width)?;
                (s.n..s.n + s.width).map(|k| pullback(d, a[k])).sum()
            }
            TargetFamily::ParabolicLevel(s) => parabolic_level_measure(d, s)?,
            _ => self.intervals().iter().map(|&(a, b)| d.interval_measure(a, b)).sum(),
        };
        if m > 0.0 {
            Ok(m)
        } else {
            Err(Error::ZeroMeasureTarget)
        }
    }
}

/// `mu(A_k) = mu([1/2, 1/2 + a_k/2])`.
fn pullback(d: &DensityModel, a_k: f64) -> f64 {
    d.interval_measure(0.5, 0.5 + 0.5 * a_k)
}

const LEVEL_TABLE: usize = 100_000;

/// `mu(U_n) = sum_{k >= n} mu(A_k)`; terms past a table of `a_k` are summed in
/// closed form from the continuum limit `da/dk = -2^alpha a^(1+alpha)`.
fn parabolic_level_measure(d: &DensityModel, s: &ParabolicSet) -> Result<f64> {
    let m = LEVEL_TABLE.max(s.n + 1);
    let a = a_sequence(s.alpha, m)?;
    let head: f64 = (s.n..m).map(|k| pullback(d, a[k])).sum();
    let am = a[m];
    let h0 = d.density_at(0.5);
    let tail_sum = am.powf(1.0 - s.alpha) / (2f64.powf(s.alpha) * (1.0 - s.alpha)) + 0.5 * am;
    let tail = if s.alpha < 1.0 { 0.5 * h0 * tail_sum } else { f64::INFINITY };
    Ok(head + tail)
}

#[inline]
fn dist(u: f64, c: f64, wrap: bool) -> f64 {
    let d = (u - c).abs();
    if wrap {
        d.min(1.0 - d)
    } else {
        d
    }
}

fn check_unit(x: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&x), || format!("{x} outside [0, 1]"))
}

fn check_radius(r: f64) -> Result<()> {
    ensure(r > 0.0 && r < 0.5, || format!("radius {r} outside (0, 1/2)"))
}

/// How the horizon `N` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalingRule {
    /// `N = t / mu(U)`.
    Kac { t: f64 },
    /// `N = t L / p_hat` with `p_hat = P(Z^L >= 1)`.
    Empirical { t: f64, block: u64 },
}

impl ScalingRule {
    pub fn t(&self) -> f64 {
        match *self {
            ScalingRule::Kac { t } | ScalingRule::Empirical { t, .. } => t,
        }
    }
}

/// Horizon for a target under a scaling rule.
pub fn horizon(rule: &ScalingRule, target: &TargetFamily, d: &DensityModel, p_hat: Option<f64>) -> Result<u64> {
    ensure(rule.t() > 0.0, || format!("time {} must be positive", rule.t()))?;
    let n = match *rule {
        ScalingRule::Kac { t } => t / target.measure(d)?,
        ScalingRule::Empirical { t, block } => {
            let p = p_hat.ok_or_else(|| {
                Error::InvalidParameter("empirical scaling needs an estimated hit probability".into())
            })?;
            ensure(p > 0.0 && p < 1.0, || format!("hit probability {p} outside (0, 1)"))?;
            t * block as f64 / p
        }
    };
    Ok(n.round().max(1.0) as u64)
}
