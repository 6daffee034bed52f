//! Interval maps, orbit states and periodic-point utilities.
//!
//! The doubling map is iterated on a 64-bit window of the binary expansion.
//! Each step shifts the window left and pulls one fresh bit from a lazy tail,
//! so orbits never collapse to 0 the way floating-point doubling does. The
//! tail is either random (a Lebesgue-typical point) or the exact expansion of
//! a rational number, which keeps periodic orbits periodic forever.
//!
//! The other maps are iterated in `f64`.

use rand::Rng;
use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Tolerance used by [`MapSystem::verify_periodic`] when callers have no better value.
pub const PERIOD_TOL: f64 = 1e-9;

/// A point of the phase space: the unit interval or the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point {
    Line(f64),
    Plane(f64, f64),
}

impl Point {
    pub fn x(&self) -> f64 {
        match *self {
            Point::Line(x) | Point::Plane(x, _) => x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum BitTail {
    Random { buf: u64, left: u32 },
    Rational { rem: u64, den: u64 },
}

/// Sliding 64-bit window over a binary expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitWindow {
    window: u64,
    tail: BitTail,
}

impl BitWindow {
    /// Lebesgue-random point.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        BitWindow {
            window: rng.random(),
            tail: BitTail::Random { buf: 0, left: 0 },
        }
    }

    /// Exact expansion of `num/den` in `[0, 1]`.
    pub fn from_rational(num: u64, den: u64) -> Result<Self> {
        ensure(den > 0 && num <= den, || {
            format!("rational {num}/{den} is not in [0, 1]")
        })?;
        let mut tail = BitTail::Rational { rem: num, den };
        let mut window = 0u64;
        for _ in 0..64 {
            window = (window << 1) | rational_bit(&mut tail);
        }
        Ok(BitWindow { window, tail })
    }

    /// The leading 64 bits of `x`, followed by random bits.
    pub fn from_value(x: f64) -> Self {
        BitWindow {
            window: to_fixed(x),
            tail: BitTail::Random { buf: 0, left: 0 },
        }
    }

    /// Uniform point of `[lo, hi)` with a random tail.
    pub fn uniform_in<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> Self {
        let a = to_fixed(lo);
        let b = to_fixed(hi);
        let window = if b > a { rng.random_range(a..b) } else { a };
        BitWindow {
            window,
            tail: BitTail::Random { buf: 0, left: 0 },
        }
    }

    pub fn bits(&self) -> u64 {
        self.window
    }

    /// Numeric value of the top 53 bits; always in `[0, 1)`.
    pub fn value(&self) -> f64 {
        (self.window >> 11) as f64 * TWO_POW_M53
    }

    fn shift<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let bit = match &mut self.tail {
            BitTail::Random { buf, left } => {
                if *left == 0 {
                    *buf = rng.random();
                    *left = 64;
                }
                let b = *buf >> 63;
                *buf <<= 1;
                *left -= 1;
                b
            }
            t @ BitTail::Rational { .. } => rational_bit(t),
        };
        self.window = (self.window << 1) | bit;
    }
}

fn rational_bit(tail: &mut BitTail) -> u64 {
    match tail {
        BitTail::Rational { rem, den } => {
            let r = 2 * (*rem as u128);
            if r >= *den as u128 {
                *rem = (r - *den as u128) as u64;
                1
            } else {
                *rem = r as u64;
                0
            }
        }
        BitTail::Random { .. } => unreachable!("rational_bit on a random tail"),
    }
}

fn to_fixed(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else if x >= 1.0 {
        u64::MAX
    } else {
        (x * 18_446_744_073_709_551_616.0) as u64
    }
}

/// Orbit state of a [`MapSystem`].
#[derive(Clone, Debug, PartialEq)]
pub enum OrbitState {
    Bits(BitWindow),
    Float(f64),
    Pair(Box<OrbitState>, Box<OrbitState>),
}

impl OrbitState {
    /// Numeric value of a one-dimensional state.
    pub fn value(&self) -> f64 {
        match self {
            OrbitState::Bits(b) => b.value(),
            OrbitState::Float(x) => *x,
            OrbitState::Pair(a, _) => a.value(),
        }
    }

    pub fn point(&self) -> Point {
        match self {
            OrbitState::Pair(a, b) => Point::Plane(a.value(), b.value()),
            s => Point::Line(s.value()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Power {
    Sqrt,
    FourthRoot,
    General,
}

/// Parameters of the intermittent (Pomeau-Manneville) map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intermittent {
    alpha: f64,
    coef: f64,
    power: Power,
}

impl Intermittent {
    pub fn new(alpha: f64) -> Result<Self> {
        ensure(alpha > 0.0 && alpha <= 1.0 && alpha.is_finite(), || {
            format!("intermittency exponent {alpha} outside (0, 1]")
        })?;
        let power = if alpha == 0.5 {
            Power::Sqrt
        } else if alpha == 0.25 {
            Power::FourthRoot
        } else {
            Power::General
        };
        Ok(Intermittent {
            alpha,
            coef: 2f64.powf(alpha),
            power,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    fn pow_alpha(&self, x: f64) -> f64 {
        match self.power {
            Power::Sqrt => x.sqrt(),
            Power::FourthRoot => x.sqrt().sqrt(),
            Power::General => x.powf(self.alpha),
        }
    }

    /// Left branch `x + 2^a x^(1+a)`.
    #[inline]
    pub fn left(&self, x: f64) -> f64 {
        x + self.coef * x * self.pow_alpha(x)
    }

    #[inline]
    fn apply(&self, x: f64) -> f64 {
        if x < 0.5 {
            self.left(x)
        } else {
            2.0 * x - 1.0
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        if x < 0.5 {
            1.0 + (1.0 + self.alpha) * self.coef * self.pow_alpha(x)
        } else {
            2.0
        }
    }
}

/// The maps of the laboratory.
#[derive(Clone, Debug, PartialEq)]
pub enum MapSystem {
    /// `x -> 2x mod 1`.
    Doubling,
    /// `x -> 2x + eps sin(2 pi x) mod 1`, uniformly expanding for `|eps| < 1/(2 pi)`.
    PerturbedExpanding { eps: f64 },
    /// Intermittent map with a neutral fixed point at 0.
    PomeauManneville(Intermittent),
    /// Direct product of two one-dimensional maps.
    Product(Box<MapSystem>, Box<MapSystem>),
}

impl MapSystem {
    pub fn perturbed(eps: f64) -> Result<Self> {
        ensure(eps.is_finite() && eps.abs() < 1.0 / (2.0 * PI), || {
            format!("perturbation {eps} breaks uniform expansion (need |eps| < 1/(2 pi))")
        })?;
        Ok(MapSystem::PerturbedExpanding { eps })
    }

    /// Intermittent map. `alpha = 1` is accepted for formula checks although
    /// the map then has no finite invariant density.
    pub fn pomeau_manneville(alpha: f64) -> Result<Self> {
        Ok(MapSystem::PomeauManneville(Intermittent::new(alpha)?))
    }

    pub fn product(left: MapSystem, right: MapSystem) -> Result<Self> {
        if left.dimension() != 1 || right.dimension() != 1 {
            return Err(Error::DimensionMismatch(
                "product components must be one-dimensional".into(),
            ));
        }
        Ok(MapSystem::Product(Box::new(left), Box::new(right)))
    }

    pub fn dimension(&self) -> usize {
        match self {
            MapSystem::Product(..) => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> String {
        match self {
            MapSystem::Doubling => "doubling".into(),
            MapSystem::PerturbedExpanding { eps } => format!("perturbed(eps={eps})"),
            MapSystem::PomeauManneville(pm) => format!("pm(alpha={})", pm.alpha),
            MapSystem::Product(a, b) => format!("{} x {}", a.name(), b.name()),
        }
    }

    /// True when Lebesgue measure is invariant (doubling and its products).
    pub fn preserves_lebesgue(&self) -> bool {
        match self {
            MapSystem::Doubling => true,
            MapSystem::Product(a, b) => a.preserves_lebesgue() && b.preserves_lebesgue(),
            _ => false,
        }
    }

    /// Evaluates a one-dimensional map in floating point.
    pub fn apply_scalar(&self, x: f64) -> Result<f64> {
        Ok(match self {
            MapSystem::Doubling => {
                let y = 2.0 * x;
                y - y.floor()
            }
            MapSystem::PerturbedExpanding { eps } => perturbed(*eps, x),
            MapSystem::PomeauManneville(pm) => pm.apply(x),
            MapSystem::Product(..) => {
                return Err(Error::DimensionMismatch(
                    "scalar evaluation of a product map".into(),
                ))
            }
        })
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        match (self, p) {
            (MapSystem::Product(a, b), Point::Plane(x, y)) => {
                Ok(Point::Plane(a.apply_scalar(x)?, b.apply_scalar(y)?))
            }
            (MapSystem::Product(..), Point::Line(_)) => Err(Error::DimensionMismatch(
                "line point passed to a product map".into(),
            )),
            (m, Point::Line(x)) => Ok(Point::Line(m.apply_scalar(x)?)),
            (_, Point::Plane(..)) => Err(Error::DimensionMismatch(
                "plane point passed to a one-dimensional map".into(),
            )),
        }
    }

    /// Advances the state by one application of the map.
    ///
    /// Panics if the state kind does not belong to this map.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, s: &mut OrbitState, rng: &mut R) {
        match (self, s) {
            (MapSystem::Doubling, OrbitState::Bits(b)) => b.shift(rng),
            (MapSystem::PerturbedExpanding { eps }, OrbitState::Float(x)) => {
                *x = perturbed(*eps, *x)
            }
            (MapSystem::PomeauManneville(pm), OrbitState::Float(x)) => *x = pm.apply(*x),
            (MapSystem::Product(a, b), OrbitState::Pair(u, v)) => {
                a.step(u, rng);
                b.step(v, rng);
            }
            (m, s) => panic!("state {s:?} is not valid for map {}", m.name()),
        }
    }

    /// Uniformly random state (Lebesgue in every coordinate).
    pub fn uniform_state<R: Rng + ?Sized>(&self, rng: &mut R) -> OrbitState {
        match self {
            MapSystem::Doubling => OrbitState::Bits(BitWindow::random(rng)),
            MapSystem::Product(a, b) => OrbitState::Pair(
                Box::new(a.uniform_state(rng)),
                Box::new(b.uniform_state(rng)),
            ),
            _ => OrbitState::Float(rng.random()),
        }
    }

    /// State at a given point; doubling states get random tail bits.
    pub fn state_at<R: Rng + ?Sized>(&self, p: Point, rng: &mut R) -> Result<OrbitState> {
        match (self, p) {
            (MapSystem::Product(a, b), Point::Plane(x, y)) => Ok(OrbitState::Pair(
                Box::new(a.state_at(Point::Line(x), rng)?),
                Box::new(b.state_at(Point::Line(y), rng)?),
            )),
            (MapSystem::Doubling, Point::Line(x)) => {
                Ok(OrbitState::Bits(BitWindow::from_value(x)))
            }
            (MapSystem::Product(..), _) | (_, Point::Plane(..)) => Err(
                Error::DimensionMismatch("point and map dimensions differ".into()),
            ),
            (_, Point::Line(x)) => Ok(OrbitState::Float(x)),
        }
    }

    /// `|T'(x)|` of a one-dimensional map.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        Ok(match self {
            MapSystem::Doubling => 2.0,
            MapSystem::PerturbedExpanding { eps } => (2.0 + 2.0 * PI * eps * (2.0 * PI * x).cos()).abs(),
            MapSystem::PomeauManneville(pm) => pm.derivative(x),
            MapSystem::Product(..) => {
                return Err(Error::DimensionMismatch(
                    "scalar derivative of a product map".into(),
                ))
            }
        })
    }

    /// `|DT|` at a point; for products the larger of the two component factors.
    pub fn derivative_magnitude(&self, p: Point) -> Result<f64> {
        match (self, p) {
            (MapSystem::Product(a, b), Point::Plane(x, y)) => {
                Ok(a.derivative(x)?.max(b.derivative(y)?))
            }
            (m, Point::Line(x)) => m.derivative(x),
            _ => Err(Error::DimensionMismatch(
                "point and map dimensions differ".into(),
            )),
        }
    }

    /// True when `x` has minimal period exactly `p` (up to `tol`).
    pub fn verify_periodic(&self, x: f64, p: usize, tol: f64) -> bool {
        if p == 0 || self.dimension() != 1 {
            return false;
        }
        let orbit = match self.float_orbit(x, p) {
            Ok(o) => o,
            Err(_) => return false,
        };
        if (orbit[p] - x).abs() > tol {
            return false;
        }
        (1..p).all(|q| (orbit[q] - x).abs() > tol)
    }

    /// Smallest period up to `max_period`, if any.
    pub fn minimal_period(&self, x: f64, max_period: usize, tol: f64) -> Option<usize> {
        (1..=max_period).find(|&p| self.verify_periodic(x, p, tol))
    }

    /// `|DT^p(x)|^-1` at a point of minimal period `p`.
    pub fn pitskel_value(&self, x: f64, p: usize, tol: f64) -> Result<f64> {
        if !self.verify_periodic(x, p, tol) {
            return Err(Error::NotPeriodic { x, period: p, tol });
        }
        let orbit = self.float_orbit(x, p)?;
        let mut theta = 1.0;
        for &y in &orbit[..p] {
            theta /= self.derivative(y)?;
        }
        Ok(theta)
    }

    fn float_orbit(&self, x: f64, p: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(p + 1);
        let mut y = x;
        out.push(y);
        for _ in 0..p {
            y = self.apply_scalar(y)?;
            out.push(y);
        }
        Ok(out)
    }
}

#[inline]
fn perturbed(eps: f64, x: f64) -> f64 {
    let y = 2.0 * x + eps * (2.0 * PI * x).sin();
    y - y.floor()
}

/// Inverse of the left branch `x + 2^a x^(1+a)` on `[0, 1]`.
///
/// Safeguarded Newton iteration started at `y`; the residual is driven below
/// a relative tolerance of `1e-15`.
pub fn parabolic_inverse(alpha: f64, y: f64) -> Result<f64> {
    let pm = Intermittent::new(alpha)?;
    ensure((0.0..=1.0).contains(&y), || format!("{y} outside [0, 1]"))?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, y);
    let mut x = y;
    for _ in 0..200 {
        let f = pm.left(x) - y;
        if f.abs() <= 1e-15 * y {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = 1.0 + (1.0 + alpha) * pm.coef * pm.pow_alpha(x);
        let mut next = x - f / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Ok(x)
}

/// `a_1, ..., a_{n_max}` with `a_1 = 1/2` and `a_{k+1} = psi_0(a_k)`;
/// index 0 holds `a_0 = 1`.
pub fn a_sequence(alpha: f64, n_max: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    let mut a = 1.0;
    for _ in 0..n_max {
        a = parabolic_inverse(alpha, a)?;
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn doubling_shifts_periodic_pattern() {
        let mut s = OrbitState::Bits(BitWindow::from_rational(1, 3).unwrap());
        assert_eq!(s.value(), 0.333_333_333_333_333_26);
        let mut rng = trial_rng(0, 0);
        MapSystem::Doubling.step(&mut s, &mut rng);
        assert!((s.value() - 2.0 / 3.0).abs() < 1e-15);
        for _ in 0..1001 {
            MapSystem::Doubling.step(&mut s, &mut rng);
        }
        assert!((s.value() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rational_window_of_one_is_all_ones() {
        let b = BitWindow::from_rational(1, 1).unwrap();
        assert_eq!(b.bits(), u64::MAX);
        assert!(BitWindow::from_rational(3, 2).is_err());
    }

    #[test]
    fn branch_formulas() {
        let pm = MapSystem::pomeau_manneville(1.0).unwrap();
        assert!((pm.apply_scalar(0.25).unwrap() - 0.375).abs() < 1e-15);
        assert!((pm.apply_scalar(0.75).unwrap() - 0.5).abs() < 1e-15);
        let pe = MapSystem::perturbed(0.05).unwrap();
        assert_eq!(pe.apply_scalar(0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MapSystem::perturbed(0.2).is_err());
        assert!(MapSystem::pomeau_manneville(0.0).is_err());
        assert!(MapSystem::pomeau_manneville(1.5).is_err());
        assert!(MapSystem::product(
            MapSystem::product(MapSystem::Doubling, MapSystem::Doubling).unwrap(),
            MapSystem::Doubling
        )
        .is_err());
    }

    #[test]
    fn pitskel_values() {
        let d = MapSystem::Doubling;
        assert!((d.pitskel_value(1.0 / 3.0, 2, PERIOD_TOL).unwrap() - 0.25).abs() < 1e-15);
        assert!(d.verify_periodic(1.0 / 3.0, 2, PERIOD_TOL));
        assert!(!d.verify_periodic(1.0 / 3.0, 4, PERIOD_TOL));
        assert!(matches!(
            d.pitskel_value(0.3, 2, PERIOD_TOL),
            Err(Error::NotPeriodic { .. })
        ));
        let eps = 0.05;
        let pe = MapSystem::perturbed(eps).unwrap();
        let theta = pe.pitskel_value(0.0, 1, PERIOD_TOL).unwrap();
        assert!((theta - 1.0 / (2.0 + 2.0 * PI * eps)).abs() < 1e-14);
    }

    #[test]
    fn parabolic_inverse_values() {
        assert!((parabolic_inverse(1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        for &alpha in &[0.25, 0.5, 0.8] {
            assert!((parabolic_inverse(alpha, 1.0).unwrap() - 0.5).abs() < 1e-14);
            let pm = Intermittent::new(alpha).unwrap();
            for &y in &[0.9, 0.3, 1e-3, 1e-9] {
                let x = parabolic_inverse(alpha, y).unwrap();
                assert!((pm.left(x) - y).abs() <= 1e-14 * y);
            }
        }
    }

    #[test]
    fn a_sequence_is_decreasing() {
        let a = a_sequence(0.5, 2000).unwrap();
        assert_eq!(a[1], 0.5);
        assert!(a.windows(2).all(|w| w[1] < w[0]));
        // a_n ~ (alpha 2^alpha n)^(-1/alpha); at alpha = 1/2 that is 2 / n^2.
        let r = a[2000] * 2000.0f64.powi(2);
        assert!((r - 2.0).abs() < 0.05, "{r}");
    }

    #[test]
    fn finite_difference_derivatives() {
        let maps = [
            MapSystem::perturbed(0.1).unwrap(),
            MapSystem::pomeau_manneville(0.5).unwrap(),
            MapSystem::pomeau_manneville(0.25).unwrap(),
        ];
        let h = 1e-7;
        for m in &maps {
            for i in 1..100 {
                let x = i as f64 / 100.0 + 0.003;
                let (a, b) = (m.apply_scalar(x - h).unwrap(), m.apply_scalar(x + h).unwrap());
                if (b - a).abs() > 0.5 {
                    continue; // branch cut inside the stencil
                }
                let fd = (b - a) / (2.0 * h);
                let d = m.derivative(x).unwrap();
                assert!((fd - d).abs() < 1e-5 * d, "{} at {x}: {fd} vs {d}", m.name());
            }
        }
    }
}
