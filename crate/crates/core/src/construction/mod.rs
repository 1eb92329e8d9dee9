//! The sets `A_n`, the pruned point sets `Y^(n)`, the modified sets `A'_n`
//! and the parameters `J`, `j`, `beta` that define them.
//!
//! Every set is available in two forms: an explicit [`IntervalUnion`] built
//! from enumerated Delone points (the definition), and a [`LevelSet`] that
//! uses a periodic description when the point set is a lattice. The two are
//! cross-checked in tests; estimators use the level sets.

mod level_set;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::delone::DeloneSet;
use crate::error::{Error, Result};
use crate::numerics::{Interval, IntervalUnion, PeriodicUnion, Precision, Scalar};
use crate::psi::PsiSpec;

pub use level_set::LevelSet;

/// Largest lattice period (in residues) the periodic route will expand.
const MAX_PERIODIC_RESIDUES: u64 = 1 << 20;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    alpha: Scalar,
    a: Scalar,
    b: Scalar,
    n_max: u64,
    delone: DeloneSet,
    psi: PsiSpec,
    precision: Precision,
    residue_budget: u64,
}

impl ExperimentConfig {
    pub fn new(
        alpha: Scalar,
        a: Scalar,
        b: Scalar,
        n_max: u64,
        delone: DeloneSet,
        psi: PsiSpec,
        precision: Precision,
    ) -> Result<Self> {
        if alpha.abs() <= Scalar::one() {
            return Err(Error::Config(format!("|alpha| must exceed 1, got {alpha}")));
        }
        if a >= b {
            return Err(Error::InvalidInterval {
                lo: a.to_string(),
                hi: b.to_string(),
            });
        }
        if n_max == 0 {
            return Err(Error::Config("N_max must be positive".into()));
        }
        psi.validate()?;
        let required = Precision::for_orbit(n_max, &alpha);
        if precision < required {
            return Err(Error::PrecisionUnderflow {
                required_bits: required.bits() as u64,
                available_bits: precision.bits() as u64,
            });
        }
        Ok(ExperimentConfig {
            alpha,
            a,
            b,
            n_max,
            delone,
            psi,
            precision,
            residue_budget: n_max.saturating_mul(10),
        })
    }

    /// Exact-mode convenience: precision from the orbit policy.
    pub fn with_policy_precision(
        alpha: Scalar,
        a: Scalar,
        b: Scalar,
        n_max: u64,
        delone: DeloneSet,
        psi: PsiSpec,
    ) -> Result<Self> {
        let prec = Precision::for_orbit(n_max, &alpha);
        Self::new(alpha, a, b, n_max, delone, psi, prec)
    }

    pub fn with_psi(mut self, psi: PsiSpec) -> Result<Self> {
        psi.validate()?;
        self.psi = psi;
        Ok(self)
    }

    pub fn with_delone(mut self, delone: DeloneSet) -> Self {
        self.delone = delone;
        self
    }

    pub fn with_residue_budget(mut self, budget: u64) -> Self {
        self.residue_budget = budget;
        self
    }

    pub fn alpha(&self) -> &Scalar {
        &self.alpha
    }

    pub fn a(&self) -> &Scalar {
        &self.a
    }

    pub fn b(&self) -> &Scalar {
        &self.b
    }

    pub fn length(&self) -> Scalar {
        &self.b - &self.a
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn delone(&self) -> &DeloneSet {
        &self.delone
    }

    pub fn psi(&self) -> &PsiSpec {
        &self.psi
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Relative slack for closed comparisons: zero when `alpha` and `Y`
    /// are exact, `2^(8 - bits)` otherwise.
    pub fn tolerance(&self) -> Scalar {
        if self.alpha.is_exact() && self.delone.is_exact() {
            Scalar::zero()
        } else {
            self.precision.tolerance()
        }
    }

    pub fn residue_budget(&self) -> u64 {
        self.residue_budget
    }

    pub fn psi_at(&self, n: u64) -> Scalar {
        self.psi.eval(n, self.precision)
    }

    pub fn alpha_pow(&self, n: u64) -> Result<Scalar> {
        self.alpha.pow(n)
    }

    fn check_index(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.n_max {
            return Err(Error::IndexOutOfRange {
                index: n,
                n_max: self.n_max,
            });
        }
        Ok(())
    }

    /// The `y` window `[min(lo s, hi s) - psi, max(lo s, hi s) + psi]` whose
    /// points can reach `[lo, hi]` after scaling by `1/s`.
    fn reach_window(lo: &Scalar, hi: &Scalar, scale: &Scalar, psi: &Scalar) -> (Scalar, Scalar) {
        let (u, v) = (lo * scale, hi * scale);
        let (l, h) = if u <= v { (u, v) } else { (v, u) };
        (&l - psi, &h + psi)
    }

    /// The index set `I_n` with its points.
    pub fn index_set(&self, n: u64) -> Result<Vec<(BigInt, Scalar)>> {
        self.check_index(n)?;
        let scale = self.alpha_pow(n)?;
        let (lo, hi) = Self::reach_window(&self.a, &self.b, &scale, &self.psi_at(n));
        self.delone.indexed_points_in_window(&lo, &hi)
    }

    /// `card(I_n)`, counted from indices without enumeration.
    pub fn index_set_count(&self, n: u64) -> Result<BigInt> {
        self.check_index(n)?;
        let scale = self.alpha_pow(n)?;
        let (lo, hi) = Self::reach_window(&self.a, &self.b, &scale, &self.psi_at(n));
        Ok(self.delone.count_in_window(&lo, &hi))
    }

    /// `A_n` by enumeration of `I_n`, clipped to `[a, b]`.
    pub fn build_a_n(&self, n: u64) -> Result<IntervalUnion> {
        let (a, b) = (self.a.clone(), self.b.clone());
        self.build_a_n_on(n, &a, &b)
    }

    /// `A_n` restricted to an arbitrary window `[lo, hi]`.
    pub fn build_a_n_on(&self, n: u64, lo: &Scalar, hi: &Scalar) -> Result<IntervalUnion> {
        self.check_index(n)?;
        let stage = Stage {
            scale: self.alpha_pow(n)?,
            psi: self.psi_at(n),
            pruning: None,
        };
        stage.explicit_on(&self.delone, lo, hi)
    }

    /// `A_n` on `[a, b]` in the cheapest exact representation.
    pub fn level_set_a_n(&self, n: u64) -> Result<LevelSet> {
        self.level_set_a_n_on(n, &self.a, &self.b)
    }

    /// `A_n` on an arbitrary domain `[lo, hi]`.
    pub fn level_set_a_n_on(&self, n: u64, lo: &Scalar, hi: &Scalar) -> Result<LevelSet> {
        self.check_index(n)?;
        let stage = Stage {
            scale: self.alpha_pow(n)?,
            psi: self.psi_at(n),
            pruning: None,
        };
        stage.level_set(&self.delone, lo, hi)
    }

    /// `lambda(A_n)`. Lattices use the periodic form; other sets with
    /// `psi(n) <= r` count interior points by index and only enumerate the
    /// two ends of the window.
    pub fn measure_a_n(&self, n: u64) -> Result<Scalar> {
        self.check_index(n)?;
        let psi = self.psi_at(n);
        if psi.is_zero() {
            return Ok(Scalar::zero());
        }
        let scale = self.alpha_pow(n)?;
        let stage = Stage {
            scale: scale.clone(),
            psi: psi.clone(),
            pruning: None,
        };
        if let Some(p) = stage.periodic(&self.delone) {
            return Ok(p.measure_on(&self.a, &self.b));
        }
        if &psi > self.delone.packing_radius() {
            return Ok(stage.explicit_on(&self.delone, &self.a, &self.b)?.measure());
        }
        let (u, v) = (&self.a * &scale, &self.b * &scale);
        let (l, h) = if u <= v { (u, v) } else { (v, u) };
        let clipped = |y: &Scalar| -> Scalar {
            Interval::ball(y, &psi)
                .clip(&l, &h)
                .map_or_else(Scalar::zero, |c| c.length())
        };
        let inner_lo = &l + &psi;
        let inner_hi = &h - &psi;
        let mut total = Scalar::zero();
        if inner_lo > inner_hi {
            for y in self.delone.points_in_window(&(&l - &psi), &(&h + &psi))? {
                total = total + clipped(&y);
            }
        } else {
            let interior = self.delone.count_in_window(&inner_lo, &inner_hi);
            total = Scalar::from_bigint(interior) * (&psi + &psi);
            let edges = [(&l - &psi, inner_lo.clone()), (inner_hi.clone(), &h + &psi)];
            for (lo, hi) in edges {
                for y in self.delone.points_in_window(&lo, &hi)? {
                    if y < inner_lo || y > inner_hi {
                        total = total + clipped(&y);
                    }
                }
            }
        }
        Ok(total / scale.abs())
    }
}

/// `J`, the residue class `j`, and `beta = alpha^J`.
#[derive(Clone, Debug)]
pub struct DivergenceSetup {
    big_j: u64,
    j: u64,
    beta: Scalar,
    pruned: bool,
    // Relative slack of the pruning balls in big-float mode; zero when exact.
    tolerance: Scalar,
}

impl DivergenceSetup {
    /// `J` from [`choose_j`] and `j` from [`choose_residue`] with the
    /// configured budget.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let d = cfg.delone();
        let big_j = choose_j(d.packing_radius(), d.covering_radius(), cfg.alpha());
        let j = choose_residue(cfg.psi(), big_j, cfg.residue_budget(), cfg.precision())?;
        Self::with_residue(cfg, big_j, j)
    }

    pub fn with_residue(cfg: &ExperimentConfig, big_j: u64, j: u64) -> Result<Self> {
        if big_j == 0 || j >= big_j {
            return Err(Error::Config(format!("residue {j} is not in [0, {big_j})")));
        }
        Ok(DivergenceSetup {
            big_j,
            j,
            beta: cfg.alpha_pow(big_j)?,
            pruned: true,
            tolerance: cfg.tolerance(),
        })
    }

    /// Same `J`, `j`, `beta` but with `Y^(n)` replaced by `Y`.
    pub fn without_pruning(mut self) -> Self {
        self.pruned = false;
        self
    }

    pub fn big_j(&self) -> u64 {
        self.big_j
    }

    pub fn j(&self) -> u64 {
        self.j
    }

    pub fn beta(&self) -> &Scalar {
        &self.beta
    }

    pub fn is_pruned(&self) -> bool {
        self.pruned
    }

    /// `nJ + j`, the index of `psi` used by `A'_n`.
    pub fn psi_index(&self, n: u64) -> u64 {
        n * self.big_j + self.j
    }

    /// `(1 + 2/r) / (r (|beta| - 1)) <= 1/(2R)`.
    pub fn certificate_holds(&self, r: &Scalar, big_r: &Scalar) -> bool {
        let two = Scalar::from_int(2);
        let lhs = (Scalar::one() + &two / r) / (r * &(self.beta.abs() - Scalar::one()));
        lhs <= (two * big_r).recip()
    }

    /// Whether `y` survives the pruning levels `beta^1 .. beta^levels`:
    /// `|y - beta^l y''| > 1` for every `y''` in the set.
    ///
    /// In big-float mode distances within rounding of 1 count as inside the
    /// ball, so that the decision does not flip with the precision.
    pub fn survives(&self, set: &DeloneSet, levels: u64, y: &Scalar) -> Result<bool> {
        let radius = if self.tolerance.is_zero() {
            Scalar::one()
        } else {
            Scalar::one() + &self.tolerance * &Scalar::one().max(y.abs())
        };
        let (lo, hi) = (y - &radius, y + &radius);
        for l in 1..=levels {
            let bl = self.beta.pow(l)?;
            let (u, v) = (&lo / &bl, &hi / &bl);
            let (u, v) = if u <= v { (u, v) } else { (v, u) };
            if set.count_in_window(&u, &v).is_positive() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Membership of `y in Y` in `Y^(n)`.
    pub fn y_n_member(&self, set: &DeloneSet, n: u64, y: &Scalar) -> Result<bool> {
        self.survives(set, n.saturating_sub(1), y)
    }

    fn pruning_levels(&self, n: u64) -> u64 {
        if self.pruned {
            n.saturating_sub(1)
        } else {
            0
        }
    }

    fn stage(&self, cfg: &ExperimentConfig, n: u64) -> Result<Stage<'_>> {
        if n == 0 {
            return Err(Error::IndexOutOfRange { index: 0, n_max: cfg.n_max() });
        }
        let k = self.psi_index(n);
        cfg.check_index(k)?;
        let levels = self.pruning_levels(n);
        Ok(Stage {
            scale: cfg.alpha_pow(k)?,
            psi: cfg.psi_at(k),
            pruning: (levels > 0).then_some((self, levels)),
        })
    }

    /// `A'_n` by enumeration of the pruned points, clipped to `[a, b]`.
    pub fn build_a_prime_n(&self, cfg: &ExperimentConfig, n: u64) -> Result<IntervalUnion> {
        self.stage(cfg, n)?.explicit_on(cfg.delone(), cfg.a(), cfg.b())
    }

    /// `A'_n` on `[a, b]` in the cheapest exact representation.
    pub fn level_set_a_prime_n(&self, cfg: &ExperimentConfig, n: u64) -> Result<LevelSet> {
        self.stage(cfg, n)?.level_set(cfg.delone(), cfg.a(), cfg.b())
    }

    /// `2 psi(kJ + j) / |alpha^j beta^k|` for `k = m, n`, as `(min, max)`.
    pub fn delta_big_delta(&self, cfg: &ExperimentConfig, m: u64, n: u64) -> Result<PairOverlap> {
        if m == n {
            return Err(Error::InvalidPair(m));
        }
        let width = |k: u64| -> Result<Scalar> {
            let idx = self.psi_index(k);
            let psi = cfg.psi_at(idx);
            Ok((&psi + &psi) / cfg.alpha_pow(idx)?.abs())
        };
        let (wm, wn) = (width(m)?, width(n)?);
        let (delta, big_delta) = if wm <= wn { (wm, wn) } else { (wn, wm) };
        Ok(PairOverlap {
            m: m.min(n),
            n: m.max(n),
            delta,
            big_delta,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairOverlap {
    pub m: u64,
    pub n: u64,
    pub delta: Scalar,
    pub big_delta: Scalar,
}

/// Smallest `J >= 1` with `|alpha|^J >= 2R(1 + 2/r)/r + 1`.
pub fn choose_j(r: &Scalar, big_r: &Scalar, alpha: &Scalar) -> u64 {
    let two = Scalar::from_int(2);
    let threshold = &two * big_r * (Scalar::one() + &two / r) / r + Scalar::one();
    let base = alpha.abs();
    let mut power = base.clone();
    let mut big_j = 1;
    while power < threshold {
        power = &power * &base;
        big_j += 1;
    }
    big_j
}

/// The class `j in [0, J)` with the largest `sum_{n=1}^{budget} psi(nJ + j)`,
/// smaller `j` on ties. Sums are accumulated in `f64`: only the ordering of
/// the classes matters.
pub fn choose_residue(psi: &PsiSpec, big_j: u64, budget: u64, prec: Precision) -> Result<u64> {
    let mut best: Option<(u64, f64)> = None;
    for j in 0..big_j {
        let sum: f64 = (1..=budget).map(|n| psi.eval(n * big_j + j, prec).to_f64()).sum();
        if sum > 0.0 && best.is_none_or(|(_, s)| sum > s) {
            best = Some((j, sum));
        }
    }
    best.map(|(j, _)| j)
        .ok_or(Error::DegeneratePsi { modulus: big_j })
}

/// One set of the family: balls of radius `psi / |scale|` around `y / scale`,
/// with `y` running over the points that survive `levels` pruning levels.
struct Stage<'a> {
    scale: Scalar,
    psi: Scalar,
    pruning: Option<(&'a DivergenceSetup, u64)>,
}

impl Stage<'_> {
    fn explicit_on(&self, set: &DeloneSet, lo: &Scalar, hi: &Scalar) -> Result<IntervalUnion> {
        if self.psi.is_zero() || lo >= hi {
            return Ok(IntervalUnion::empty());
        }
        let (ylo, yhi) = ExperimentConfig::reach_window(lo, hi, &self.scale, &self.psi);
        let radius = &self.psi / &self.scale.abs();
        let mut pieces = Vec::new();
        for y in set.points_in_window(&ylo, &yhi)? {
            if let Some((setup, levels)) = self.pruning {
                if !setup.survives(set, levels, &y)? {
                    continue;
                }
            }
            if let Some(c) = Interval::ball(&(&y / &self.scale), &radius).clip(lo, hi) {
                pieces.push(c);
            }
        }
        Ok(IntervalUnion::normalize(pieces))
    }

    /// Periodic description for lattices `sZ + o`. With pruning this needs
    /// `o = 0` and `|beta|` an exact integer: every `beta^l sZ` then lies in
    /// `beta sZ`, so the pruned set keeps the residues `k mod |beta|` at
    /// distance more than `1/s` from `0`.
    fn periodic(&self, set: &DeloneSet) -> Option<PeriodicUnion> {
        let (s, o) = set.lattice_params()?;
        let scale = self.scale.abs();
        let radius = &self.psi / &scale;
        match self.pruning {
            None => {
                let period = s / &scale;
                Some(PeriodicUnion::from_balls(period, &[o / &self.scale], &radius))
            }
            Some((setup, _)) => {
                let beta = setup.beta().abs();
                if !(o.is_zero() && s.is_exact() && beta.is_exact() && beta.is_integer()) {
                    return None;
                }
                let m = beta.floor().to_u64().filter(|&m| m <= MAX_PERIODIC_RESIDUES)?;
                let one = Scalar::one();
                let centers: Vec<Scalar> = (0..m)
                    .filter(|&r| &Scalar::from_int(r.min(m - r) as i64) * s > one)
                    .map(|r| Scalar::from_int(r as i64) * s / &scale)
                    .collect();
                let period = s * &beta / &scale;
                Some(PeriodicUnion::from_balls(period, &centers, &radius))
            }
        }
    }

    fn level_set(&self, set: &DeloneSet, lo: &Scalar, hi: &Scalar) -> Result<LevelSet> {
        if self.psi.is_zero() {
            return Ok(LevelSet::empty(lo.clone(), hi.clone()));
        }
        match self.periodic(set) {
            Some(p) => Ok(LevelSet::periodic(p, lo.clone(), hi.clone())),
            None => Ok(LevelSet::explicit(
                self.explicit_on(set, lo, hi)?,
                lo.clone(),
                hi.clone(),
            )),
        }
    }
}

/// One row of the `I_n` cardinality sandwich.
#[derive(Clone, Debug, PartialEq)]
pub struct SandwichRow {
    pub n: u64,
    pub card: BigInt,
    /// `floor((b - a)|alpha|^n / (2R)) - 1`
    pub lower: BigInt,
    /// `(b - a)|alpha|^n / (2r) + 2`
    pub upper: Scalar,
    pub measure: Scalar,
    /// `2 psi(n) card / |alpha|^n`
    pub measure_bound: Scalar,
}

impl SandwichRow {
    pub fn lower_holds(&self) -> bool {
        self.card >= self.lower
    }

    pub fn upper_holds(&self) -> bool {
        Scalar::from_bigint(self.card.clone()) <= self.upper
    }

    pub fn measure_holds(&self) -> bool {
        self.measure <= self.measure_bound
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    /// Smallest `n0` such that the lower bound holds for every tested `n >= n0`.
    pub lower_from: Option<u64>,
    pub upper_from: Option<u64>,
}

fn holds_from(rows: &[SandwichRow], pred: impl Fn(&SandwichRow) -> bool) -> Option<u64> {
    let mut from = None;
    for row in rows.iter().rev() {
        if pred(row) {
            from = Some(row.n);
        } else {
            break;
        }
    }
    from
}

/// Cardinality and measure bounds for `I_n` and `A_n` over `n in 1..=n_last`.
pub fn sandwich_report(cfg: &ExperimentConfig, n_last: u64) -> Result<SandwichReport> {
    let two = Scalar::from_int(2);
    let d = cfg.delone();
    let mut rows = Vec::new();
    for n in 1..=n_last {
        let card = cfg.index_set_count(n)?;
        let span = cfg.length() * cfg.alpha_pow(n)?.abs();
        let lower = (&span / &(&two * d.covering_radius())).floor() - BigInt::one();
        let upper = &span / &(&two * d.packing_radius()) + &two;
        let psi = cfg.psi_at(n);
        let measure_bound = &two * &psi * Scalar::from_bigint(card.clone()) / cfg.alpha_pow(n)?.abs();
        rows.push(SandwichRow {
            n,
            card,
            lower,
            upper,
            measure: cfg.measure_a_n(n)?,
            measure_bound,
        });
    }
    Ok(SandwichReport {
        lower_from: holds_from(&rows, SandwichRow::lower_holds),
        upper_from: holds_from(&rows, SandwichRow::upper_holds),
        rows,
    })
}
