//! Approximation functions `psi: N -> [0, inf)` and their partial sums.

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::numerics::{Precision, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Convergent,
    Divergent,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsiSpec {
    Constant { c: Scalar },
    /// `c / n^s`
    Power { c: Scalar, s: Scalar },
    /// `c / (n (log(n + 1))^s)`
    LogPower { c: Scalar, s: Scalar },
    /// `c q^n`
    Geometric { c: Scalar, q: Scalar },
    /// `values[n - 1]`, zero past the end.
    Table { values: Vec<Scalar> },
    /// `inner(n)` when `n = class (mod modulus)`, zero otherwise.
    ResidueMasked {
        inner: Box<PsiSpec>,
        modulus: u64,
        class: u64,
    },
}

impl PsiSpec {
    pub fn constant(c: Scalar) -> Self {
        PsiSpec::Constant { c }
    }

    pub fn power(c: Scalar, s: Scalar) -> Self {
        PsiSpec::Power { c, s }
    }

    pub fn geometric(c: Scalar, q: Scalar) -> Self {
        PsiSpec::Geometric { c, q }
    }

    pub fn table(values: Vec<Scalar>) -> Self {
        PsiSpec::Table { values }
    }

    pub fn masked(inner: PsiSpec, modulus: u64, class: u64) -> Self {
        PsiSpec::ResidueMasked {
            inner: Box::new(inner),
            modulus,
            class,
        }
    }

    /// Checks the parameter ranges of every variant.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("psi: {msg}")));
        match self {
            PsiSpec::Constant { c } if c.is_negative() => bad("c must be non-negative"),
            PsiSpec::Power { c, s } | PsiSpec::LogPower { c, s } => {
                if c.is_negative() {
                    bad("c must be non-negative")
                } else if !s.is_positive() {
                    bad("s must be positive")
                } else {
                    Ok(())
                }
            }
            PsiSpec::Geometric { c, q } => {
                if c.is_negative() {
                    bad("c must be non-negative")
                } else if !q.is_positive() || q >= &Scalar::one() {
                    bad("q must lie in (0, 1)")
                } else {
                    Ok(())
                }
            }
            PsiSpec::Table { values } if values.iter().any(Scalar::is_negative) => {
                bad("table entries must be non-negative")
            }
            PsiSpec::ResidueMasked {
                inner,
                modulus,
                class,
            } => {
                if *modulus == 0 || class >= modulus {
                    bad("residue class must lie in [0, modulus)")
                } else {
                    inner.validate()
                }
            }
            _ => Ok(()),
        }
    }

    /// Whether every value is an exact rational given rational parameters.
    pub fn is_rational_valued(&self) -> bool {
        match self {
            PsiSpec::Constant { c } => c.is_exact(),
            PsiSpec::Power { c, s } => c.is_zero() || (c.is_exact() && s.is_exact() && s.is_integer()),
            PsiSpec::LogPower { c, .. } => c.is_zero(),
            PsiSpec::Geometric { c, q } => c.is_exact() && q.is_exact(),
            PsiSpec::Table { values } => values.iter().all(Scalar::is_exact),
            PsiSpec::ResidueMasked { inner, .. } => inner.is_rational_valued(),
        }
    }

    /// Classification from analytic knowledge of the family, not from numerics.
    pub fn regime(&self) -> Regime {
        let one = Scalar::one();
        match self {
            PsiSpec::Constant { c } if !c.is_zero() => Regime::Divergent,
            PsiSpec::Power { c, s } | PsiSpec::LogPower { c, s } if !c.is_zero() && s <= &one => {
                Regime::Divergent
            }
            // A regularly varying tail diverges on every residue class or on none.
            PsiSpec::ResidueMasked { inner, .. } => inner.regime(),
            _ => Regime::Convergent,
        }
    }

    /// Last index with a non-zero value, when the support is finite.
    pub fn support_end(&self) -> Option<u64> {
        match self {
            PsiSpec::Table { values } => Some(
                values
                    .iter()
                    .rposition(|v| !v.is_zero())
                    .map_or(0, |k| k as u64 + 1),
            ),
            PsiSpec::ResidueMasked { inner, .. } => inner.support_end(),
            PsiSpec::Constant { c }
            | PsiSpec::Power { c, .. }
            | PsiSpec::LogPower { c, .. }
            | PsiSpec::Geometric { c, .. }
                if c.is_zero() =>
            {
                Some(0)
            }
            _ => None,
        }
    }

    /// `psi(n)` for `n >= 1`; `prec` is used only by irrational-valued variants.
    pub fn eval(&self, n: u64, prec: Precision) -> Scalar {
        debug_assert!(n >= 1);
        match self {
            PsiSpec::Constant { c } => c.clone(),
            PsiSpec::Power { c, s } => {
                if c.is_zero() {
                    return Scalar::zero();
                }
                let n = Scalar::from_int(n as i64);
                let denom = match s.as_rational().filter(|r| r.is_integer()) {
                    Some(r) => n.pow(r.to_integer().to_u64().expect("exponent fits u64")).expect("exact power"),
                    None => n.powf(s, prec).expect("positive base"),
                };
                c / &denom
            }
            PsiSpec::LogPower { c, s } => {
                if c.is_zero() {
                    return Scalar::zero();
                }
                let log = Scalar::from_int(n as i64 + 1).ln(prec).expect("positive argument");
                let denom = Scalar::from_int(n as i64) * log.powf(s, prec).expect("log positive");
                c / &denom
            }
            PsiSpec::Geometric { c, q } => {
                if c.is_zero() {
                    return Scalar::zero();
                }
                match q.pow(n) {
                    Ok(qn) => c * &qn,
                    // Below the float range the value is indistinguishable from zero.
                    Err(_) => Scalar::zero(),
                }
            }
            PsiSpec::Table { values } => values
                .get((n - 1) as usize)
                .cloned()
                .unwrap_or_else(Scalar::zero),
            PsiSpec::ResidueMasked {
                inner,
                modulus,
                class,
            } => {
                if n % modulus == *class {
                    inner.eval(n, prec)
                } else {
                    Scalar::zero()
                }
            }
        }
    }

    /// `sum_{n=1}^{N} psi(n)`.
    pub fn partial_sum(&self, big_n: u64, prec: Precision) -> Scalar {
        (1..=big_n).fold(Scalar::zero(), |acc, n| acc + self.eval(n, prec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Scalar {
        Scalar::ratio(p, d)
    }

    fn prec() -> Precision {
        Precision::new(128)
    }

    #[test]
    fn eval_examples() {
        let p = PsiSpec::power(Scalar::one(), Scalar::from_int(2));
        assert_eq!(p.eval(4, prec()), q(1, 16));
        assert_eq!(PsiSpec::constant(q(1, 4)).eval(1_000_000, prec()), q(1, 4));
        let m = PsiSpec::masked(PsiSpec::power(Scalar::one(), Scalar::one()), 4, 2);
        assert_eq!(m.eval(6, prec()), q(1, 6));
        assert_eq!(m.eval(7, prec()), Scalar::zero());
    }

    #[test]
    fn partial_sum_examples() {
        let p = PsiSpec::power(Scalar::one(), Scalar::from_int(2));
        assert_eq!(p.partial_sum(2, prec()), q(5, 4));
        // Oracle: direct f64 summation.
        let oracle: f64 = (1..=100).map(|n| 1.0 / (n as f64 * n as f64)).sum();
        let sum = p.partial_sum(100, prec()).to_f64();
        assert!((sum - oracle).abs() < 1e-12);
        assert!((sum - 1.63498).abs() < 1e-5);
        let g = PsiSpec::geometric(Scalar::one(), q(1, 2));
        assert_eq!(g.partial_sum(20, prec()), Scalar::one() - Scalar::pow2(-20));
    }

    #[test]
    fn fractional_and_log_powers_match_f64() {
        let p = PsiSpec::power(q(3, 2), q(1, 2));
        assert!((p.eval(7, prec()).to_f64() - 1.5 / 7f64.sqrt()).abs() < 1e-14);
        let l = PsiSpec::LogPower { c: Scalar::one(), s: Scalar::from_int(2) };
        let expected = 1.0 / (5.0 * 6f64.ln().powi(2));
        assert!((l.eval(5, prec()).to_f64() - expected).abs() < 1e-14);
    }

    #[test]
    fn masked_classes_sum_to_the_inner_sum() {
        let inner = PsiSpec::power(Scalar::one(), Scalar::one());
        let total: Scalar = (0..5)
            .map(|j| PsiSpec::masked(inner.clone(), 5, j).partial_sum(40, prec()))
            .fold(Scalar::zero(), |a, b| a + b);
        assert_eq!(total, inner.partial_sum(40, prec()));
    }

    #[test]
    fn regimes_follow_the_family() {
        assert_eq!(PsiSpec::power(Scalar::one(), Scalar::one()).regime(), Regime::Divergent);
        assert_eq!(PsiSpec::power(Scalar::one(), q(11, 10)).regime(), Regime::Convergent);
        assert_eq!(PsiSpec::geometric(Scalar::one(), q(1, 2)).regime(), Regime::Convergent);
        assert_eq!(PsiSpec::table(vec![Scalar::one(); 5]).regime(), Regime::Convergent);
        assert_eq!(PsiSpec::constant(Scalar::zero()).regime(), Regime::Convergent);
        assert_eq!(
            PsiSpec::LogPower { c: Scalar::one(), s: Scalar::one() }.regime(),
            Regime::Divergent
        );
    }

    #[test]
    fn validation_rejects_out_of_range_parameters() {
        assert!(PsiSpec::constant(q(-1, 2)).validate().is_err());
        assert!(PsiSpec::geometric(Scalar::one(), Scalar::one()).validate().is_err());
        assert!(PsiSpec::power(Scalar::one(), Scalar::zero()).validate().is_err());
        assert!(PsiSpec::masked(PsiSpec::constant(Scalar::one()), 3, 3).validate().is_err());
        assert!(PsiSpec::table(vec![Scalar::one(), Scalar::zero()]).validate().is_ok());
    }

    #[test]
    fn table_support() {
        let t = PsiSpec::table(vec![Scalar::one(), Scalar::zero(), q(1, 3), Scalar::zero()]);
        assert_eq!(t.support_end(), Some(3));
        assert_eq!(t.eval(9, prec()), Scalar::zero());
    }
}
