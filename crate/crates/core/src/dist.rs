//! Risk-score distributions on `[0, 1]`.
//!
//! Every kind exposes the same primitives: the CDF `F`, the generalized
//! inverse `F⁻¹(q) = inf{x : F(x) >= q}`, the partial expectation
//! `∫_a^b μ dF(μ)` and the mean over a band. Bands are half-open `(a, b]`
//! in score space, so adjacent bands partition atoms and tied empirical
//! scores without double counting.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ceil_count, floor_count, sqrt};
use crate::special::{beta_pdf, inc_beta_split, inc_beta_tails};

const QUANTILE_MAX_STEPS: usize = 600;

/// Symmetric Beta(t, t) risk distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricBeta {
    t: f64,
}

impl SymmetricBeta {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidDistribution("Beta parameter t must be positive and finite"));
        }
        Ok(Self { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn cdf_tails(&self, x: f64) -> (f64, f64) {
        inc_beta_split(self.t, self.t, x)
    }

    /// Smallest `y` in `[0, 1/2]` with `F(y) >= p`, for `p` in `(0, 1/2]`.
    ///
    /// Steps geometrically while the bracket spans orders of magnitude, so
    /// quantiles deep in the tails keep full relative precision.
    fn lower_inverse(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
        for _ in 0..QUANTILE_MAX_STEPS {
            let mid = if lo == 0.0 {
                hi * 1e-3
            } else if hi > 4.0 * lo {
                sqrt(lo * hi)
            } else {
                lo + 0.5 * (hi - lo)
            };
            if !(mid > lo && mid < hi) {
                break;
            }
            if inc_beta_tails(self.t, self.t, mid).0 >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            0.0
        } else if q >= 1.0 {
            1.0
        } else if q <= 0.5 {
            self.lower_inverse(q)
        } else {
            // 1 - y rounds; nudge up to the first double whose CDF reaches q
            let tail = 1.0 - q;
            let mut x = 1.0 - self.lower_inverse(tail);
            while x < 1.0 && self.cdf_tails(x).1 > tail {
                x = f64::from_bits(x.to_bits() + 1);
            }
            x
        }
    }

    /// `∫_a^b μ dF` through `μ f_{t,t}(μ) = ½ f_{t+1,t}(μ)`.
    fn partial_expectation(&self, a: f64, b: f64) -> f64 {
        let (lo_a, up_a) = inc_beta_split(self.t + 1.0, self.t, a);
        let (lo_b, up_b) = inc_beta_split(self.t + 1.0, self.t, b);
        let diff = if a >= 0.5 { up_a - up_b } else { lo_b - lo_a };
        0.5 * diff.max(0.0)
    }

    /// `∫_lo^hi F⁻¹(u) du`. Levels above 1/2 are folded onto the lower
    /// tail by symmetry, `F⁻¹(u) = 1 - F⁻¹(1 - u)`, so bands near the top
    /// keep full precision even when their quantiles round to 1.
    fn level_integral(&self, lo: f64, hi: f64) -> f64 {
        let lower_part = |a: f64, b: f64| {
            if b <= a {
                0.0
            } else {
                self.partial_expectation(self.lower_quantile(a), self.lower_quantile(b))
            }
        };
        let below = lower_part(lo.min(0.5), hi.min(0.5));
        let (ua, ub) = (lo.max(0.5), hi.max(0.5));
        let above = (ub - ua) - lower_part(1.0 - ub, 1.0 - ua);
        below + above.max(0.0)
    }

    fn lower_quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            0.0
        } else {
            self.lower_inverse(p)
        }
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        let (lo_a, up_a) = self.cdf_tails(a);
        let (lo_b, up_b) = self.cdf_tails(b);
        let diff = if a >= 0.5 { up_a - up_b } else { lo_b - lo_a };
        diff.max(0.0)
    }
}

/// All mass at a single risk value `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    c: f64,
}

impl PointMass {
    pub fn new(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidDistribution("point mass center must lie in [0, 1]"));
        }
        Ok(Self { c })
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// Empirical distribution of a finite list of scores.
///
/// Scores are kept sorted ascending by `(score, original index)`, so tied
/// scores have a fixed rank order that every band computation shares.
#[derive(Debug, Clone, PartialEq)]
pub struct Empirical {
    sorted: Vec<f64>,
    order: Vec<usize>,
    prefix: Vec<f64>,
}

impl Empirical {
    pub fn new(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidDistribution("empirical distribution needs at least one score"));
        }
        if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::domain("empirical score", bad));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
        let sorted: Vec<f64> = order.iter().map(|&i| scores[i]).collect();
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for &s in &sorted {
            acc += s;
            prefix.push(acc);
        }
        Ok(Self { sorted, order, prefix })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Scores in ascending rank order.
    pub fn sorted_scores(&self) -> &[f64] {
        &self.sorted
    }

    /// Original position of the unit at `rank` (0-based, ascending).
    pub fn original_index(&self, rank: usize) -> usize {
        self.order[rank]
    }

    /// Original positions in ascending rank order.
    pub fn rank_order(&self) -> &[usize] {
        &self.order
    }

    /// Sum of scores at ranks `lo..hi`.
    pub fn rank_sum(&self, lo: usize, hi: usize) -> f64 {
        self.prefix[hi] - self.prefix[lo]
    }

    pub fn mean(&self) -> f64 {
        self.prefix[self.len()] / self.len() as f64
    }

    fn count_at_most(&self, x: f64) -> usize {
        self.sorted.partition_point(|&s| s <= x)
    }

    /// `∫_0^u F⁻¹(v) dv` with each unit covering a level interval of width `1/n`.
    fn level_cumulative(&self, u: f64) -> f64 {
        let n = self.len();
        let pos = u * n as f64;
        let m = floor_count(pos).min(n);
        let mut acc = self.prefix[m];
        if m < n {
            acc += (pos - m as f64).max(0.0) * self.sorted[m];
        }
        acc / n as f64
    }
}

/// Distribution of the risk score `μ(X)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RiskDistribution {
    Uniform,
    Beta(SymmetricBeta),
    PointMass(PointMass),
    Empirical(Empirical),
}

fn check_unit(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(what, x))
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    check_unit("interval start", a)?;
    check_unit("interval end", b)?;
    if a > b {
        return Err(Error::domain("interval start above end", a));
    }
    Ok(())
}

impl RiskDistribution {
    pub fn uniform() -> Self {
        RiskDistribution::Uniform
    }

    pub fn beta(t: f64) -> Result<Self> {
        SymmetricBeta::new(t).map(RiskDistribution::Beta)
    }

    pub fn point_mass(c: f64) -> Result<Self> {
        PointMass::new(c).map(RiskDistribution::PointMass)
    }

    pub fn empirical(scores: &[f64]) -> Result<Self> {
        Empirical::new(scores).map(RiskDistribution::Empirical)
    }

    /// Whether `F` is continuous and strictly increasing on `[0, 1]`.
    pub fn is_continuous(&self) -> bool {
        matches!(self, RiskDistribution::Uniform | RiskDistribution::Beta(_))
    }

    pub fn as_empirical(&self) -> Option<&Empirical> {
        match self {
            RiskDistribution::Empirical(e) => Some(e),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            RiskDistribution::Uniform | RiskDistribution::Beta(_) => 0.5,
            RiskDistribution::PointMass(p) => p.c,
            RiskDistribution::Empirical(e) => e.mean(),
        }
    }

    /// `F(x)`; for empirical data, the fraction of scores `<= x`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit("cdf argument", x)?;
        Ok(match self {
            RiskDistribution::Uniform => x,
            RiskDistribution::Beta(b) => b.cdf_tails(x).0,
            RiskDistribution::PointMass(p) => {
                if x >= p.c {
                    1.0
                } else {
                    0.0
                }
            }
            RiskDistribution::Empirical(e) => e.count_at_most(x) as f64 / e.len() as f64,
        })
    }

    /// `1 - F(x)`, evaluated without cancellation near `x = 1`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        check_unit("survival argument", x)?;
        Ok(match self {
            RiskDistribution::Uniform => 1.0 - x,
            RiskDistribution::Beta(b) => b.cdf_tails(x).1,
            RiskDistribution::PointMass(p) => {
                if x >= p.c {
                    0.0
                } else {
                    1.0
                }
            }
            RiskDistribution::Empirical(e) => (e.len() - e.count_at_most(x)) as f64 / e.len() as f64,
        })
    }

    /// Generalized inverse `inf{x : F(x) >= q}`.
    ///
    /// For `n` empirical scores this is the order statistic of rank
    /// `max(1, ⌈qn⌉)`; `q = 0` returns the bottom of the support.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_unit("quantile level", q)?;
        Ok(match self {
            RiskDistribution::Uniform => q,
            RiskDistribution::Beta(b) => b.quantile(q),
            RiskDistribution::PointMass(p) => p.c,
            RiskDistribution::Empirical(e) => {
                let n = e.len();
                let rank = ceil_count(q * n as f64).clamp(1, n);
                e.sorted[rank - 1]
            }
        })
    }

    /// `∫_a^b μ dF(μ)` over the half-open band `(a, b]`.
    pub fn partial_expectation(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        Ok(match self {
            RiskDistribution::Uniform => 0.5 * (b - a) * (b + a),
            RiskDistribution::Beta(beta) => beta.partial_expectation(a, b),
            RiskDistribution::PointMass(p) => {
                if a < p.c && p.c <= b {
                    p.c
                } else {
                    0.0
                }
            }
            RiskDistribution::Empirical(e) => {
                let (lo, hi) = (e.count_at_most(a), e.count_at_most(b));
                e.rank_sum(lo, hi) / e.len() as f64
            }
        })
    }

    /// `F(b) - F(a)`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        check_interval(a, b)?;
        Ok(match self {
            RiskDistribution::Uniform => b - a,
            RiskDistribution::Beta(beta) => beta.mass(a, b),
            RiskDistribution::PointMass(p) => {
                if a < p.c && p.c <= b {
                    1.0
                } else {
                    0.0
                }
            }
            RiskDistribution::Empirical(e) => (e.count_at_most(b) - e.count_at_most(a)) as f64 / e.len() as f64,
        })
    }

    /// Mean risk over the band `(a, b]`.
    pub fn band_mean(&self, a: f64, b: f64) -> Result<f64> {
        let mass = self.mass(a, b)?;
        if mass <= 0.0 {
            return Err(Error::DegenerateBand { lo: a, hi: b });
        }
        Ok(self.partial_expectation(a, b)? / mass)
    }

    /// `∫_lo^hi F⁻¹(u) du`: the partial expectation over the units between
    /// two cumulative-mass levels. Unlike [`partial_expectation`], this
    /// splits atoms, so a band of mass `hi - lo` inside a point mass is
    /// well defined.
    ///
    /// [`partial_expectation`]: RiskDistribution::partial_expectation
    pub fn quantile_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        check_interval(lo, hi)?;
        Ok(match self {
            RiskDistribution::Uniform => 0.5 * (hi - lo) * (hi + lo),
            RiskDistribution::Beta(b) => b.level_integral(lo, hi),
            RiskDistribution::PointMass(p) => p.c * (hi - lo),
            RiskDistribution::Empirical(e) => (e.level_cumulative(hi) - e.level_cumulative(lo)).max(0.0),
        })
    }

    /// Density `f(x)`, when one exists.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            RiskDistribution::Uniform => (0.0..=1.0).contains(&x).then_some(1.0),
            RiskDistribution::Beta(b) => (0.0..=1.0).contains(&x).then(|| beta_pdf(b.t, b.t, x)),
            RiskDistribution::PointMass(_) | RiskDistribution::Empirical(_) => None,
        }
    }
}
