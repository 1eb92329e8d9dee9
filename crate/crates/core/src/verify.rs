//! Property suites run by the `verify` subcommand.

use num_bigint::BigInt;

use crate::config::Experiment;
use crate::construction::{sandwich_report, DivergenceSetup};
use crate::error::Result;
use crate::estimators::{check_yn_lower_bound, chung_erdos_ratio, separation_check};
use crate::numerics::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

fn fmt(x: &Scalar) -> String {
    x.to_decimal_string(12)
}

pub fn run_verify(exp: &Experiment) -> Result<VerifyReport> {
    let cfg = &exp.config;
    let settings = &exp.runs().verify;
    let set = cfg.delone();
    let (r, big_r) = (set.packing_radius(), set.covering_radius());
    let tol = cfg.tolerance();
    let mut report = VerifyReport::default();

    let (lo, hi) = (exp.number(&settings.radii_window.0)?, exp.number(&settings.radii_window.1)?);
    let (r_hat, big_r_hat) = set.estimate_radii(&lo, &hi)?;
    report.push(
        "delone/radii",
        &r_hat + &tol >= *r && big_r_hat <= big_r + &tol,
        format!("observed r = {}, R = {}; declared r = {}, R = {}", fmt(&r_hat), fmt(&big_r_hat), fmt(r), fmt(big_r)),
    );

    let one = Scalar::one();
    let ball_bound = &one + &(Scalar::from_int(2) / r);
    let step = Scalar::ratio(1, 8);
    let mut worst_dist = Scalar::zero();
    let mut worst_count = BigInt::from(0);
    let mut x = lo.clone();
    while x <= hi {
        let (_, d) = set.nearest_point(&x);
        worst_dist = worst_dist.max(d);
        worst_count = worst_count.max(set.count_in_window(&(&x - &one), &(&x + &one)));
        x = &x + &step;
    }
    report.push(
        "delone/covering",
        worst_dist <= big_r + &tol,
        format!("max distance to Y on a 1/8 grid = {}", fmt(&worst_dist)),
    );
    report.push(
        "delone/ball-count",
        Scalar::from_bigint(worst_count.clone()) <= ball_bound,
        format!("max #(Y ∩ B(x,1)) = {worst_count}, bound 1 + 2/r = {}", fmt(&ball_bound)),
    );

    let setup = DivergenceSetup::new(cfg)?;
    let threshold = Scalar::from_int(2) * big_r * &ball_bound / r + &one;
    let minimal = setup.big_j() == 1 || cfg.alpha_pow(setup.big_j() - 1)?.abs() < threshold;
    report.push(
        "j-choice/certificate",
        setup.certificate_holds(r, big_r) && minimal,
        format!(
            "J = {}, j = {}, |beta| = {} >= {} (J minimal: {minimal})",
            setup.big_j(),
            setup.j(),
            fmt(&setup.beta().abs()),
            fmt(&threshold)
        ),
    );

    let (lo, hi) = (
        exp.number(&settings.separation_window.0)?,
        exp.number(&settings.separation_window.1)?,
    );
    let sep = separation_check(cfg, &setup, settings.pairs_up_to, &lo, &hi)?;
    report.push(
        "pruning/separation",
        sep.violations.is_empty(),
        format!(
            "{} points of Y^(n), {} pairs (m < n <= {}), {} violations, min |beta^(n-m) y - y'| = {}",
            sep.pruned_points,
            sep.pairs_checked,
            settings.pairs_up_to,
            sep.violations.len(),
            sep.min_distance.as_ref().map_or("-".to_string(), fmt)
        ),
    );

    let mut failures = Vec::new();
    let mut checked = 0;
    let mut x = one.clone();
    for _ in 0..settings.yn_powers {
        x = &x * &setup.beta().abs();
        for n in 1..=settings.yn_levels {
            let row = check_yn_lower_bound(cfg, &setup, n, &x)?;
            checked += 1;
            if !row.pass() {
                failures.push(format!("n = {n}, X = {}: {} < {}", fmt(&x), row.count, fmt(&row.bound)));
            }
        }
    }
    report.push(
        "yn/lower-bound",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{checked} cases (n <= {}, X = |beta|^k, k <= {})", settings.yn_levels, settings.yn_powers)
        } else {
            failures.join("; ")
        },
    );

    let sandwich = sandwich_report(cfg, settings.sandwich_up_to.min(cfg.n_max()))?;
    let measure_ok = sandwich.rows.iter().all(|row| row.measure_holds());
    report.push(
        "sandwich/cardinality",
        sandwich.lower_from.is_some() && sandwich.upper_from.is_some() && measure_ok,
        format!(
            "lower bound holds from n = {:?}, upper from n = {:?}, measure bound on all rows: {measure_ok}",
            sandwich.lower_from, sandwich.upper_from
        ),
    );

    let big_n = settings.ratio_up_to.min((cfg.n_max() - setup.j()) / setup.big_j());
    let ce = chung_erdos_ratio(cfg, &setup, big_n)?;
    let len = cfg.length();
    let in_range = ce
        .trajectory
        .iter()
        .flatten()
        .all(|q| !q.is_negative() && q <= &(&len + &tol));
    report.push(
        "limsup/ratio-range",
        in_range,
        format!("Chung-Erdős ratio over N <= {big_n}: final {}, within [0, b - a]", fmt(&ce.ratio)),
    );

    Ok(report)
}
