//! Measure tables, pairwise intersections, the Chung–Erdős ratio,
//! quasi-independence constants, the pruned-count chain and density zooms.
//!
//! Everything here is an exact interval computation on the sets built by
//! [`crate::construction`].

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::construction::{DivergenceSetup, ExperimentConfig, LevelSet};
use crate::error::{Error, Result};
use crate::numerics::{Interval, IntervalUnion, Scalar};

/// `A'_1, ..., A'_N` on `[a, b]`.
pub fn level_sets(cfg: &ExperimentConfig, setup: &DivergenceSetup, big_n: u64) -> Result<Vec<LevelSet>> {
    (1..=big_n).map(|n| setup.level_set_a_prime_n(cfg, n)).collect()
}

/// `[lambda(A'_n)]` for `n = 1..=N`.
pub fn measure_table(cfg: &ExperimentConfig, setup: &DivergenceSetup, big_n: u64) -> Result<Vec<Scalar>> {
    Ok(level_sets(cfg, setup, big_n)?.iter().map(LevelSet::measure).collect())
}

/// Symmetric matrix of `lambda(A'_m ∩ A'_n)`. With a band `W`, entries with
/// `|m - n| > W` are not computed.
#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionMatrix {
    size: usize,
    band: Option<u64>,
    // Upper triangle including the diagonal, row-major.
    entries: Vec<Option<Scalar>>,
}

impl IntersectionMatrix {
    fn offset(&self, i: usize, k: usize) -> usize {
        let (i, k) = if i <= k { (i, k) } else { (k, i) };
        i * self.size - i * (i + 1) / 2 + k
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn band(&self) -> Option<u64> {
        self.band
    }

    /// Entry for the 1-based pair `(m, n)`; `None` outside the band.
    pub fn get(&self, m: u64, n: u64) -> Option<&Scalar> {
        let (i, k) = (m as usize - 1, n as usize - 1);
        self.entries[self.offset(i, k)].as_ref()
    }

    /// Sum over all computed `(m, n)` with `m, n <= prefix`, both orders.
    pub fn prefix_sum(&self, prefix: u64) -> Scalar {
        let mut total = Scalar::zero();
        for m in 1..=prefix {
            for n in m..=prefix {
                if let Some(v) = self.get(m, n) {
                    total = if m == n { total + v } else { total + v + v };
                }
            }
        }
        total
    }

    /// Computed `(m, n, value)` triples with `m <= n`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (u64, u64, &Scalar)> + '_ {
        let size = self.size as u64;
        (1..=size).flat_map(move |m| {
            (m..=size).filter_map(move |n| self.get(m, n).map(|v| (m, n, v)))
        })
    }
}

pub fn intersection_matrix_of(sets: &[LevelSet], band: Option<u64>, budget: u64) -> Result<IntersectionMatrix> {
    let size = sets.len();
    let pairs: Vec<(usize, usize)> = (0..size)
        .flat_map(|i| (i..size).map(move |k| (i, k)))
        .collect();
    let entries = pairs
        .par_iter()
        .map(|&(i, k)| {
            if band.is_some_and(|w| (k - i) as u64 > w) {
                return Ok(None);
            }
            if i == k {
                return Ok(Some(sets[i].measure()));
            }
            sets[i].intersection_measure(&sets[k], budget).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntersectionMatrix { size, band, entries })
}

pub fn intersection_matrix(
    cfg: &ExperimentConfig,
    setup: &DivergenceSetup,
    big_n: u64,
    band: Option<u64>,
) -> Result<IntersectionMatrix> {
    let sets = level_sets(cfg, setup, big_n)?;
    intersection_matrix_of(&sets, band, cfg.delone().point_budget())
}

/// `(sum lambda(A'_n))^2 / sum_{m,n} lambda(A'_m ∩ A'_n)` for every prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct ChungErdos {
    /// Ratio at `N' = 1..=N`; `None` while every measure so far is zero.
    pub trajectory: Vec<Option<Scalar>>,
    pub ratio: Scalar,
    pub running_max: Scalar,
}

pub fn chung_erdos_from(measures: &[Scalar], matrix: &IntersectionMatrix) -> Result<ChungErdos> {
    let mut trajectory = Vec::with_capacity(measures.len());
    let mut sum = Scalar::zero();
    let mut denom = Scalar::zero();
    for n in 1..=measures.len() as u64 {
        sum = sum + &measures[n as usize - 1];
        for m in 1..=n {
            if let Some(v) = matrix.get(m, n) {
                denom = if m == n { denom + v } else { denom + v + v };
            }
        }
        trajectory.push((!denom.is_zero()).then(|| &(&sum * &sum) / &denom));
    }
    let ratio = trajectory
        .last()
        .cloned()
        .flatten()
        .ok_or_else(|| Error::UndefinedRatio("every measure is zero".into()))?;
    let running_max = trajectory
        .iter()
        .flatten()
        .cloned()
        .max()
        .expect("final ratio is defined");
    Ok(ChungErdos {
        trajectory,
        ratio,
        running_max,
    })
}

pub fn chung_erdos_ratio(cfg: &ExperimentConfig, setup: &DivergenceSetup, big_n: u64) -> Result<ChungErdos> {
    let sets = level_sets(cfg, setup, big_n)?;
    let measures: Vec<Scalar> = sets.iter().map(LevelSet::measure).collect();
    let matrix = intersection_matrix_of(&sets, None, cfg.delone().point_budget())?;
    chung_erdos_from(&measures, &matrix)
}

/// `max_{m != n} lambda(A'_m ∩ A'_n) / ((b - a) psi(mJ+j) psi(nJ+j))` over
/// the computed entries, skipping pairs where either `psi` vanishes.
pub fn quasi_independence_from(
    cfg: &ExperimentConfig,
    setup: &DivergenceSetup,
    matrix: &IntersectionMatrix,
) -> Result<Scalar> {
    let psi: Vec<Scalar> = (1..=matrix.size() as u64)
        .map(|n| cfg.psi_at(setup.psi_index(n)))
        .collect();
    let len = cfg.length();
    matrix
        .upper_entries()
        .filter(|(m, n, _)| m != n)
        .filter_map(|(m, n, v)| {
            let (pm, pn) = (&psi[m as usize - 1], &psi[n as usize - 1]);
            if pm.is_zero() || pn.is_zero() {
                None
            } else {
                Some(v / &(&len * pm * pn))
            }
        })
        .max()
        .ok_or_else(|| Error::UndefinedRatio("no pair with non-zero psi".into()))
}

pub fn quasi_independence_constant(cfg: &ExperimentConfig, setup: &DivergenceSetup, big_n: u64) -> Result<Scalar> {
    if big_n < 2 {
        return Err(Error::UndefinedRatio("at least two sets are needed".into()));
    }
    let matrix = intersection_matrix(cfg, setup, big_n, None)?;
    quasi_independence_from(cfg, setup, &matrix)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    pub big_n: u64,
    pub measures: Vec<Scalar>,
    pub intersection_matrix: IntersectionMatrix,
    pub chung_erdos: ChungErdos,
    /// `None` when fewer than two sets have non-zero `psi`.
    pub quasi_independence_constant: Option<Scalar>,
    /// `running_max / (b - a)`.
    pub k_estimate: Scalar,
}

pub fn independence_report(
    cfg: &ExperimentConfig,
    setup: &DivergenceSetup,
    big_n: u64,
    band: Option<u64>,
) -> Result<IndependenceReport> {
    let sets = level_sets(cfg, setup, big_n)?;
    let measures: Vec<Scalar> = sets.iter().map(LevelSet::measure).collect();
    let matrix = intersection_matrix_of(&sets, band, cfg.delone().point_budget())?;
    let chung_erdos = chung_erdos_from(&measures, &matrix)?;
    let quasi = quasi_independence_from(cfg, setup, &matrix).ok();
    let k_estimate = &chung_erdos.running_max / &cfg.length();
    Ok(IndependenceReport {
        big_n,
        measures,
        intersection_matrix: matrix,
        chung_erdos,
        quasi_independence_constant: quasi,
        k_estimate,
    })
}

/// The pruned-count chain
/// `count >= floor(L/R') - sum_l L(1 + 2/r')/(r' |beta|^l)`
/// `      >= L (1/R' - (1 + 2/r')/(r'(|beta| - 1))) - 1 >= L/(2R') - 1`
/// with `L = (b - a)X`, written with the gap bounds `r' = 2r`, `R' = 2R`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrunedCountReport {
    pub n: u64,
    pub x: Scalar,
    pub count: BigInt,
    pub unpruned_count: BigInt,
    pub step_floor: Scalar,
    pub step_geometric: Scalar,
    pub bound: Scalar,
    /// `L/(2R) - 1` with the half-gap `R`.
    pub half_gap_bound: Scalar,
}

impl PrunedCountReport {
    pub fn pass(&self) -> bool {
        Scalar::from_bigint(self.count.clone()) >= self.bound
    }

    pub fn count_over_floor_step(&self) -> bool {
        Scalar::from_bigint(self.count.clone()) >= self.step_floor
    }

    pub fn floor_over_geometric_step(&self) -> bool {
        self.step_floor >= self.step_geometric
    }

    pub fn geometric_over_bound(&self) -> bool {
        self.step_geometric >= self.bound
    }

    pub fn half_gap_pass(&self) -> bool {
        Scalar::from_bigint(self.count.clone()) >= self.half_gap_bound
    }

    /// The first step of the chain that fails, if any.
    pub fn failing_step(&self) -> Option<&'static str> {
        if !self.count_over_floor_step() {
            Some("count >= floor step")
        } else if !self.floor_over_geometric_step() {
            Some("floor step >= geometric step")
        } else if !self.geometric_over_bound() {
            Some("geometric step >= bound")
        } else {
            None
        }
    }
}

pub fn check_yn_lower_bound(
    cfg: &ExperimentConfig,
    setup: &DivergenceSetup,
    n: u64,
    x: &Scalar,
) -> Result<PrunedCountReport> {
    if !x.is_positive() {
        return Err(Error::Config("X must be positive".into()));
    }
    let set = cfg.delone();
    let (lo, hi) = (cfg.a() * x, cfg.b() * x);
    // Points within rounding of an endpoint are treated as lying on it.
    let slack = cfg.tolerance() * Scalar::one().max(lo.abs()).max(hi.abs());
    let (lo, hi) = (&lo - &slack, &hi - &slack);
    let mut count = BigInt::from(0);
    let mut unpruned = BigInt::from(0);
    for y in set.points_in_window(&lo, &hi)? {
        if y >= hi {
            continue;
        }
        unpruned += 1;
        if setup.y_n_member(set, n, &y)? {
            count += 1;
        }
    }
    let two = Scalar::from_int(2);
    let one = Scalar::one();
    let r_gap = &two * set.packing_radius();
    let big_r_gap = &two * set.covering_radius();
    let len = cfg.length() * x;
    let beta = setup.beta().abs();
    let per_ball = &one + &(&two / &r_gap);
    let mut losses = Scalar::zero();
    let mut beta_l = one.clone();
    for _ in 1..n {
        beta_l = &beta_l * &beta;
        losses = losses + &len * &per_ball / (&r_gap * &beta_l);
    }
    let step_floor = Scalar::from_bigint((&len / &big_r_gap).floor()) - losses;
    let step_geometric = &len * &(big_r_gap.recip() - &per_ball / (&r_gap * &(&beta - &one))) - &one;
    let bound = &len / &(&two * &big_r_gap) - &one;
    let half_gap_bound = &len / &(&two * set.covering_radius()) - &one;
    Ok(PrunedCountReport {
        n,
        x: x.clone(),
        count,
        unpruned_count: unpruned,
        step_floor,
        step_geometric,
        bound,
        half_gap_bound,
    })
}

/// Outcome of the separation check `|beta^(n-m) y - y'| > 1` for
/// `y in Y`, `y' in Y^(n)`, `m < n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationReport {
    pub pruned_points: u64,
    /// `(y', n - m)` combinations examined; each covers every `y` in `Y`.
    pub pairs_checked: u64,
    pub violations: Vec<(u64, u64, Scalar, Scalar)>,
    pub min_distance: Option<Scalar>,
}

/// For each `2 <= n <= n_last` and `y'` in `Y^(n) ∩ [lo, hi]` (all of
/// `Y ∩ [lo, hi]` when pruning is disabled), finds the
/// closest point of every `beta^k Y`, `k = 1..n-1`, from an independently
/// enumerated sorted list.
pub fn separation_check(
    cfg: &ExperimentConfig,
    setup: &DivergenceSetup,
    n_last: u64,
    lo: &Scalar,
    hi: &Scalar,
) -> Result<SeparationReport> {
    let set = cfg.delone();
    let candidates = set.points_in_window(lo, hi)?;
    let margin = Scalar::from_int(2);
    let mut scaled_sets = Vec::new();
    let mut beta_k = Scalar::one();
    for _ in 1..n_last {
        beta_k = &beta_k * setup.beta();
        let (u, v) = (&(lo - &margin) / &beta_k, &(hi + &margin) / &beta_k);
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        let mut images: Vec<Scalar> = set
            .points_in_window(&u, &v)?
            .into_iter()
            .map(|y| &y * &beta_k)
            .collect();
        images.sort();
        scaled_sets.push(images);
    }
    let one = Scalar::one();
    let mut report = SeparationReport {
        pruned_points: 0,
        pairs_checked: 0,
        violations: Vec::new(),
        min_distance: None,
    };
    for n in 2..=n_last {
        for y2 in &candidates {
            if setup.is_pruned() && !setup.y_n_member(set, n, y2)? {
                continue;
            }
            report.pruned_points += 1;
            for m in 1..n {
                let k = n - m;
                let images = &scaled_sets[k as usize - 1];
                report.pairs_checked += 1;
                let at = images.partition_point(|z| z < y2);
                let near = [at.checked_sub(1), Some(at)]
                    .into_iter()
                    .flatten()
                    .filter_map(|i| images.get(i))
                    .map(|z| (z - y2).abs())
                    .min();
                let Some(d) = near else { continue };
                if d <= one {
                    report.violations.push((m, n, &images[at.min(images.len() - 1)] / &setup.beta().pow(k)?, y2.clone()));
                }
                if report.min_distance.as_ref().is_none_or(|best| &d < best) {
                    report.min_distance = Some(d);
                }
            }
        }
    }
    Ok(report)
}

/// `lambda((A_{N1} ∪ ... ∪ A_{N2}) ∩ [lo, hi])`, computed by removing each
/// `A_n` from the uncovered part until nothing is left.
pub fn union_measure_on(cfg: &ExperimentConfig, n1: u64, n2: u64, lo: &Scalar, hi: &Scalar) -> Result<Scalar> {
    let a = if lo > cfg.a() { lo } else { cfg.a() };
    let b = if hi < cfg.b() { hi } else { cfg.b() };
    if a >= b {
        return Ok(Scalar::zero());
    }
    let budget = cfg.delone().point_budget();
    let mut uncovered = IntervalUnion::single(Interval::new(a.clone(), b.clone())?);
    for n in n1..=n2 {
        if uncovered.is_empty() {
            break;
        }
        let level = cfg.level_set_a_n_on(n, a, b)?;
        if level.is_empty() {
            continue;
        }
        let mut hit = Vec::new();
        for gap in uncovered.intervals() {
            hit.extend(level.restrict(gap.lo(), gap.hi(), budget)?.intervals().iter().cloned());
        }
        uncovered = uncovered.difference(&IntervalUnion::normalize(hit));
        if uncovered.len() as u64 > budget {
            return Err(Error::BudgetExceeded {
                required: BigInt::from(uncovered.len()),
                budget,
            });
        }
    }
    Ok(&(b - a) - &uncovered.measure())
}

/// `lambda(U ∩ [a, b)) / (b - a)` for `U = A_{N1} ∪ ... ∪ A_{N2}`.
pub fn global_density(cfg: &ExperimentConfig, n1: u64, n2: u64) -> Result<Scalar> {
    Ok(union_measure_on(cfg, n1, n2, cfg.a(), cfg.b())? / cfg.length())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZoomRow {
    pub eps: Scalar,
    pub ratio: Scalar,
}

/// `lambda(U ∩ B(x0, eps)) / (2 eps)` for each `eps`.
pub fn density_zoom(cfg: &ExperimentConfig, x0: &Scalar, n1: u64, n2: u64, eps_list: &[Scalar]) -> Result<Vec<ZoomRow>> {
    if n1 > n2 || n1 == 0 {
        return Err(Error::Config(format!("invalid index range {n1}..={n2}")));
    }
    eps_list
        .iter()
        .map(|eps| {
            if !eps.is_positive() {
                return Err(Error::Config("eps must be positive".into()));
            }
            let covered = union_measure_on(cfg, n1, n2, &(x0 - eps), &(x0 + eps))?;
            Ok(ZoomRow {
                eps: eps.clone(),
                ratio: covered / (eps + eps),
            })
        })
        .collect()
}
