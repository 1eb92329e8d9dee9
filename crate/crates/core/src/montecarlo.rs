//! Hit counting along orbits `alpha^n x` and population statistics over
//! sampled starting points.
//!
//! Samples come from a ChaCha8 stream keyed by the seed, one stream per
//! sample index, so every sample can be regenerated on its own and the
//! results do not depend on the order of evaluation.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::construction::ExperimentConfig;
use crate::error::{Error, Result};
use crate::numerics::{Precision, Scalar};
use crate::psi::Regime;

#[derive(Clone, Debug, PartialEq)]
pub struct HitRecord {
    pub n: u64,
    pub y: Scalar,
    pub dist: Scalar,
    /// `|dist - psi(n)|` is within the comparison tolerance.
    pub borderline: bool,
}

/// Distance from `alpha^n x` to the closest point of a lattice `sZ + o`,
/// all in integers: `alpha = p/q`, `x = xm/xd`, `s = s1/s2`, `o = o1/o2`.
struct LatticeOrbit {
    p: BigInt,
    q: BigInt,
    num: BigInt,
    den: BigInt,
    s1: BigInt,
    s2: BigInt,
    o1: BigInt,
    o2: BigInt,
}

/// Nearest lattice index and the distance as the fraction `s1 d / (s2 B)`.
struct LatticeStep {
    index: BigInt,
    d: BigInt,
    big_b: BigInt,
}

impl LatticeOrbit {
    fn new(cfg: &ExperimentConfig, x: &Scalar) -> Option<Self> {
        let (s, o) = cfg.delone().lattice_params()?;
        let (alpha, x, s, o) = (cfg.alpha().as_rational()?, x.as_rational()?, s.as_rational()?, o.as_rational()?);
        Some(LatticeOrbit {
            p: alpha.numer().clone(),
            q: alpha.denom().clone(),
            num: x.numer().clone(),
            den: x.denom().clone(),
            s1: s.numer().clone(),
            s2: s.denom().clone(),
            o1: o.numer().clone(),
            o2: o.denom().clone(),
        })
    }

    fn advance(&mut self) -> LatticeStep {
        self.num *= &self.p;
        self.den *= &self.q;
        let a = (&self.num * &self.o2 - &self.o1 * &self.den) * &self.s2;
        let big_b = &self.den * &self.o2 * &self.s1;
        let (k, rem) = a.div_mod_floor(&big_b);
        let twice: BigInt = &rem << 1usize;
        if twice <= big_b {
            LatticeStep { index: k, d: rem, big_b }
        } else {
            LatticeStep {
                index: k + 1,
                d: &big_b - rem,
                big_b,
            }
        }
    }

    fn within(&self, step: &LatticeStep, psi: &BigRational) -> bool {
        &self.s1 * &step.d * psi.denom() <= psi.numer() * &self.s2 * &step.big_b
    }

    fn record(&self, n: u64, step: LatticeStep) -> HitRecord {
        let s = BigRational::new(self.s1.clone(), self.s2.clone());
        let o = BigRational::new(self.o1.clone(), self.o2.clone());
        let y = BigRational::from_integer(step.index) * &s + o;
        let dist = s * BigRational::new(step.d, step.big_b);
        HitRecord {
            n,
            y: Scalar::from_rational(y),
            dist: Scalar::from_rational(dist),
            borderline: false,
        }
    }
}

/// Walks the orbit up to `big_n` and calls `on_step(n, hit, borderline, record)`
/// for each `n`; the record is built only when `want_records` is set and the
/// step is a hit.
fn walk_orbit(
    cfg: &ExperimentConfig,
    x: &Scalar,
    psi: &[Scalar],
    want_records: bool,
    mut on_step: impl FnMut(u64, bool, bool, Option<HitRecord>),
) -> Result<()> {
    let big_n = psi.len() as u64;
    let rational_psi: Option<Vec<&BigRational>> = psi.iter().map(Scalar::as_rational).collect();
    if let (Some(mut orbit), Some(rpsi)) = (LatticeOrbit::new(cfg, x), rational_psi) {
        for n in 1..=big_n {
            let step = orbit.advance();
            let hit = orbit.within(&step, rpsi[n as usize - 1]);
            let record = (hit && want_records).then(|| orbit.record(n, step));
            on_step(n, hit, false, record);
        }
        return Ok(());
    }
    let exact = cfg.alpha().is_exact() && x.is_exact() && cfg.delone().is_exact();
    let mut power = Scalar::one();
    for n in 1..=big_n {
        power = if cfg.alpha().is_exact() {
            &power * cfg.alpha()
        } else {
            cfg.alpha_pow(n)?
        };
        let z = &power * x;
        let (y, dist) = cfg.delone().nearest_point(&z);
        let psi_n = &psi[n as usize - 1];
        let (hit, borderline) = if exact && psi_n.is_exact() {
            (&dist <= psi_n, false)
        } else {
            let tol = cfg.precision().tolerance();
            let gap = &dist - psi_n;
            (gap <= tol, gap.abs() <= tol)
        };
        let record = (hit && want_records).then_some(HitRecord { n, y, dist, borderline });
        on_step(n, hit, borderline, record);
    }
    Ok(())
}

fn psi_table(cfg: &ExperimentConfig, big_n: u64) -> Vec<Scalar> {
    (1..=big_n).map(|n| cfg.psi_at(n)).collect()
}

fn check_orbit_length(cfg: &ExperimentConfig, big_n: u64) -> Result<()> {
    if big_n > cfg.n_max() {
        return Err(Error::IndexOutOfRange {
            index: big_n,
            n_max: cfg.n_max(),
        });
    }
    Ok(())
}

/// Every `n <= N` with `|alpha^n x - y| <= psi(n)` for the closest `y`.
pub fn sample_hits(cfg: &ExperimentConfig, x: &Scalar, big_n: u64) -> Result<Vec<HitRecord>> {
    check_orbit_length(cfg, big_n)?;
    let mut hits = Vec::new();
    walk_orbit(cfg, x, &psi_table(cfg, big_n), true, |_, _, _, record| {
        hits.extend(record);
    })?;
    Ok(hits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// `x = a + (b - a) U / 2^P` with `U` a uniform `P`-bit integer and `P`
    /// the experiment precision.
    FullPrecision,
    /// `x = a + (b - a) U / denominator`, `U` uniform in `[0, denominator)`.
    Rational { denominator: u64 },
}

/// The `id`-th sample of the stream keyed by `seed`.
pub fn draw_sample(cfg: &ExperimentConfig, seed: u64, id: u64, mode: SampleMode) -> Scalar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    let unit = match mode {
        SampleMode::FullPrecision => {
            let bits = cfg.precision().bits() as usize;
            let mut bytes = vec![0u8; bits.div_ceil(8)];
            rng.fill_bytes(&mut bytes);
            // Big-endian so that doubling the precision extends the same expansion.
            let u = BigUint::from_bytes_be(&bytes) >> (bytes.len() * 8 - bits);
            BigRational::new(BigInt::from_biguint(Sign::Plus, u), BigInt::one() << bits)
        }
        SampleMode::Rational { denominator } => {
            let u = rng.next_u64() % denominator.max(1);
            BigRational::new(BigInt::from(u), BigInt::from(denominator.max(1)))
        }
    };
    cfg.a() + &(cfg.length() * Scalar::from_rational(unit))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOutcome {
    pub id: u64,
    pub x: Scalar,
    /// Hit count up to each checkpoint.
    pub hits: Vec<u64>,
    pub borderline: u64,
}

/// Quantile levels reported, in percent.
pub const QUANTILE_LEVELS: [u32; 7] = [1, 5, 25, 50, 75, 95, 99];

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyStats {
    pub samples: u64,
    pub big_n: u64,
    pub mean_hits: Scalar,
    /// Sample standard deviation of the hit counts.
    pub std_dev: Scalar,
    /// `sum_{n <= N} lambda(A_n) / (b - a)`.
    pub expected_hits: Scalar,
    /// `(level in percent, nearest-rank quantile)`.
    pub quantiles: Vec<(u32, u64)>,
    /// Number of samples per hit count.
    pub histogram: BTreeMap<u64, u64>,
    pub borderline_decisions: u64,
    pub regime: Regime,
}

impl DichotomyStats {
    pub fn from_counts(
        counts: &[u64],
        big_n: u64,
        expected_hits: Scalar,
        borderline_decisions: u64,
        regime: Regime,
        prec: Precision,
    ) -> Self {
        let s = counts.len() as u64;
        let total: u64 = counts.iter().sum();
        let mean = Scalar::from_rational(BigRational::new(total.into(), s.into()));
        let sq: u128 = counts.iter().map(|&c| c as u128 * c as u128).sum();
        let std_dev = if s > 1 {
            // (sum c^2 - s mean^2) / (s - 1)
            let var = BigRational::new(
                BigInt::from(sq) * BigInt::from(s) - BigInt::from(total) * BigInt::from(total),
                BigInt::from(s) * BigInt::from(s - 1),
            );
            Scalar::from_rational(var).sqrt(prec).expect("variance is non-negative")
        } else {
            Scalar::zero()
        };
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let quantiles = QUANTILE_LEVELS
            .iter()
            .map(|&pct| {
                let rank = (pct as u64 * s).div_ceil(100).max(1);
                (pct, sorted[rank as usize - 1])
            })
            .collect();
        let mut histogram = BTreeMap::new();
        for &c in counts {
            *histogram.entry(c).or_insert(0) += 1;
        }
        DichotomyStats {
            samples: s,
            big_n,
            mean_hits: mean,
            std_dev,
            expected_hits,
            quantiles,
            histogram,
            borderline_decisions,
            regime,
        }
    }

    pub fn quantile(&self, pct: u32) -> Option<u64> {
        self.quantiles.iter().find(|(p, _)| *p == pct).map(|&(_, v)| v)
    }

    /// Fraction of samples with at least `k` hits.
    pub fn fraction_with_at_least(&self, k: u64) -> Scalar {
        let count: u64 = self.histogram.range(k..).map(|(_, v)| v).sum();
        Scalar::ratio(count as i64, self.samples as i64)
    }

    /// `|mean - expected| <= k std_dev / sqrt(samples)`.
    pub fn within_standard_errors(&self, k: u32, prec: Precision) -> bool {
        let dev = (&self.mean_hits - &self.expected_hits).abs();
        let root = Scalar::from_int(self.samples as i64).sqrt(prec).expect("positive");
        dev <= Scalar::from_int(k as i64) * &self.std_dev / root
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyRun {
    pub checkpoints: Vec<u64>,
    pub outcomes: Vec<SampleOutcome>,
    /// One entry per checkpoint.
    pub stats: Vec<DichotomyStats>,
}

/// `sum_{n <= N} lambda(A_n) / (b - a)` for every checkpoint `N`.
pub fn expected_hits(cfg: &ExperimentConfig, checkpoints: &[u64]) -> Result<Vec<Scalar>> {
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    let len = cfg.length();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut running = Scalar::zero();
    let mut partial = BTreeMap::new();
    for n in 1..=last {
        running = running + cfg.measure_a_n(n)?;
        if checkpoints.contains(&n) {
            partial.insert(n, &running / &len);
        }
    }
    for c in checkpoints {
        out.push(partial.get(c).cloned().unwrap_or_else(Scalar::zero));
    }
    Ok(out)
}

pub fn dichotomy_run(
    cfg: &ExperimentConfig,
    samples: u64,
    seed: u64,
    checkpoints: &[u64],
    mode: SampleMode,
) -> Result<DichotomyRun> {
    if samples == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    let mut checkpoints = checkpoints.to_vec();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    if checkpoints.first().is_none_or(|&c| c == 0) {
        return Err(Error::Config("checkpoints must be positive".into()));
    }
    let big_n = *checkpoints.last().expect("non-empty");
    check_orbit_length(cfg, big_n)?;
    let psi = psi_table(cfg, big_n);
    let outcomes = (0..samples)
        .into_par_iter()
        .map(|id| {
            let x = draw_sample(cfg, seed, id, mode);
            let mut hits = vec![0u64; checkpoints.len()];
            let mut running = 0u64;
            let mut borderline = 0u64;
            let mut slot = 0;
            walk_orbit(cfg, &x, &psi, false, |n, hit, border, _| {
                running += hit as u64;
                borderline += border as u64;
                if n == checkpoints[slot] {
                    hits[slot] = running;
                    slot += 1;
                }
            })?;
            Ok(SampleOutcome { id, x, hits, borderline })
        })
        .collect::<Result<Vec<_>>>()?;
    let expected = expected_hits(cfg, &checkpoints)?;
    let regime = cfg.psi().regime();
    let borderline: u64 = outcomes.iter().map(|o| o.borderline).sum();
    let stats = checkpoints
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let counts: Vec<u64> = outcomes.iter().map(|o| o.hits[i]).collect();
            DichotomyStats::from_counts(&counts, c, expected[i].clone(), borderline, regime, cfg.precision())
        })
        .collect();
    Ok(DichotomyRun {
        checkpoints,
        outcomes,
        stats,
    })
}

pub fn dichotomy_experiment(cfg: &ExperimentConfig, samples: u64, seed: u64, big_n: u64) -> Result<DichotomyStats> {
    let mut run = dichotomy_run(cfg, samples, seed, &[big_n], SampleMode::FullPrecision)?;
    Ok(run.stats.pop().expect("one checkpoint"))
}
