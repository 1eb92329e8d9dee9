//! On-disk experiment description.
//!
//! Numbers are strings so that rationals and irrationals survive the trip:
//! `"3/2"`, `"0.125"`, `"phi"`, `"sqrt(2)"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::construction::ExperimentConfig;
use crate::delone::DeloneSet;
use crate::error::{Error, Result};
use crate::montecarlo::SampleMode;
use crate::numerics::{Precision, Scalar};
use crate::psi::PsiSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DeloneDef {
    IntegerLattice {
        #[serde(default = "one")]
        scale: String,
        #[serde(default = "zero")]
        offset: String,
    },
    Beatty {
        theta: String,
    },
    FibonacciChain,
    JitteredLattice {
        epsilon: String,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PsiDef {
    Constant { c: String },
    Power { c: String, s: String },
    LogPower { c: String, s: String },
    Geometric { c: String, q: String },
    Table { values: Vec<String> },
    ResidueMasked { inner: Box<PsiDef>, modulus: u64, class: u64 },
}

fn one() -> String {
    "1".into()
}

fn zero() -> String {
    "0".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenPointsRun {
    pub lo: String,
    pub hi: String,
}

impl Default for GenPointsRun {
    fn default() -> Self {
        GenPointsRun {
            lo: "-20".into(),
            hi: "20".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureTableRun {
    #[serde(rename = "N")]
    pub n: u64,
}

impl Default for MeasureTableRun {
    fn default() -> Self {
        MeasureTableRun { n: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndependenceRun {
    #[serde(rename = "N")]
    pub n: u64,
    /// Only pairs with `|m - n| <= band` are computed.
    pub band: Option<u64>,
    /// Disable the `Y^(n)` pruning (for comparison runs).
    pub unpruned: bool,
}

impl Default for IndependenceRun {
    fn default() -> Self {
        IndependenceRun {
            n: 50,
            band: None,
            unpruned: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DichotomyRunDef {
    pub samples: u64,
    pub checkpoints: Vec<u64>,
    /// Draw `x` from `{a + (b - a)k/denominator}` instead of full precision.
    pub denominator: Option<u64>,
}

impl Default for DichotomyRunDef {
    fn default() -> Self {
        DichotomyRunDef {
            samples: 10_000,
            checkpoints: vec![50, 200],
            denominator: None,
        }
    }
}

impl DichotomyRunDef {
    pub fn mode(&self) -> SampleMode {
        match self.denominator {
            Some(denominator) => SampleMode::Rational { denominator },
            None => SampleMode::FullPrecision,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoomRun {
    pub x0: String,
    #[serde(rename = "N1")]
    pub n1: u64,
    #[serde(rename = "N2")]
    pub n2: u64,
    pub eps: Vec<String>,
}

impl Default for ZoomRun {
    fn default() -> Self {
        ZoomRun {
            x0: "1/3".into(),
            n1: 1,
            n2: 30,
            eps: (3..=8).map(|k| format!("1/{}", 1u64 << k)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyRun {
    /// Window for the radius and covering checks.
    pub radii_window: (String, String),
    /// Window of `y'` for the pairwise separation check.
    pub separation_window: (String, String),
    /// Separation is checked for all `m < n <= pairs_up_to`.
    pub pairs_up_to: u64,
    /// `Y^(n)` counts are checked for `n <= yn_levels` and `X = beta^k`, `k <= yn_powers`.
    pub yn_levels: u64,
    pub yn_powers: u32,
    pub sandwich_up_to: u64,
    /// Chung-Erdős ratio range checked for `N <= ratio_up_to`.
    pub ratio_up_to: u64,
}

impl Default for VerifyRun {
    fn default() -> Self {
        VerifyRun {
            radii_window: ("-500".into(), "500".into()),
            separation_window: ("-300".into(), "300".into()),
            pairs_up_to: 6,
            yn_levels: 8,
            yn_powers: 3,
            sandwich_up_to: 30,
            ratio_up_to: 20,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Runs {
    pub gen_points: GenPointsRun,
    pub measure_table: MeasureTableRun,
    pub independence: IndependenceRun,
    pub dichotomy: DichotomyRunDef,
    pub zoom: ZoomRun,
    pub verify: VerifyRun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub name: Option<String>,
    pub delone: DeloneDef,
    pub psi: PsiDef,
    pub alpha: String,
    pub a: String,
    pub b: String,
    #[serde(rename = "N_max")]
    pub n_max: u64,
    /// Working precision in bits; `null` selects the orbit policy.
    #[serde(default)]
    pub precision: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residue_budget: Option<u64>,
    #[serde(default)]
    pub runs: Runs,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub precision_bits: Option<u32>,
    pub point_budget: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub file: ConfigFile,
    pub config: ExperimentConfig,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(bits) = overrides.precision_bits {
            self.precision = Some(bits);
        }
        if let Some(budget) = overrides.point_budget {
            self.point_budget = Some(budget);
        }
    }

    /// JSON with sorted keys, the input to the manifest hash.
    pub fn canonical_json(&self) -> String {
        // serde_json's default map is ordered by key.
        serde_json::to_value(self)
            .expect("config serializes")
            .to_string()
    }

    /// The precision the orbit policy asks for.
    pub fn policy_precision(&self) -> Result<Precision> {
        let alpha = Scalar::parse(&self.alpha, Precision::new(64))?;
        Ok(Precision::for_orbit(self.n_max, &alpha))
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let prec = match self.precision {
            Some(bits) => Precision::new(bits),
            None => self.policy_precision()?,
        };
        let num = |s: &str| Scalar::parse(s, prec);
        let mut delone = build_delone(&self.delone, prec)?;
        if let Some(budget) = self.point_budget {
            delone = delone.with_point_budget(budget);
        }
        let psi = build_psi(&self.psi, prec)?;
        let mut cfg = ExperimentConfig::new(
            num(&self.alpha)?,
            num(&self.a)?,
            num(&self.b)?,
            self.n_max,
            delone,
            psi,
            prec,
        )?;
        if let Some(budget) = self.residue_budget {
            cfg = cfg.with_residue_budget(budget);
        }
        Ok(cfg)
    }
}

impl Experiment {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let mut file = ConfigFile::load(path)?;
        file.apply(overrides);
        let config = file.build()?;
        Ok(Experiment { file, config })
    }

    pub fn from_json(text: &str, overrides: &Overrides) -> Result<Self> {
        let mut file = ConfigFile::from_json(text)?;
        file.apply(overrides);
        let config = file.build()?;
        Ok(Experiment { file, config })
    }

    pub fn number(&self, s: &str) -> Result<Scalar> {
        Scalar::parse(s, self.config.precision())
    }

    pub fn seed(&self) -> u64 {
        self.file.seed
    }

    pub fn runs(&self) -> &Runs {
        &self.file.runs
    }
}

pub fn build_delone(def: &DeloneDef, prec: Precision) -> Result<DeloneSet> {
    let num = |s: &str| Scalar::parse(s, prec);
    match def {
        DeloneDef::IntegerLattice { scale, offset } => DeloneSet::integer_lattice(num(scale)?, num(offset)?),
        DeloneDef::Beatty { theta } => DeloneSet::beatty(num(theta)?),
        DeloneDef::FibonacciChain => Ok(DeloneSet::fibonacci_chain(prec)),
        DeloneDef::JitteredLattice { epsilon, seed } => DeloneSet::jittered_lattice(num(epsilon)?, *seed),
    }
}

pub fn build_psi(def: &PsiDef, prec: Precision) -> Result<PsiSpec> {
    let num = |s: &str| Scalar::parse(s, prec);
    let psi = match def {
        PsiDef::Constant { c } => PsiSpec::constant(num(c)?),
        PsiDef::Power { c, s } => PsiSpec::power(num(c)?, num(s)?),
        PsiDef::LogPower { c, s } => PsiSpec::LogPower { c: num(c)?, s: num(s)? },
        PsiDef::Geometric { c, q } => PsiSpec::geometric(num(c)?, num(q)?),
        PsiDef::Table { values } => PsiSpec::table(values.iter().map(|v| num(v)).collect::<Result<_>>()?),
        PsiDef::ResidueMasked { inner, modulus, class } => PsiSpec::masked(build_psi(inner, prec)?, *modulus, *class),
    };
    psi.validate()?;
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LATTICE: &str = r#"{
        "delone": {"variant": "integer-lattice"},
        "psi": {"variant": "power", "c": "1", "s": "1"},
        "alpha": "2", "a": "0", "b": "1", "N_max": 40, "seed": 3
    }"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let exp = Experiment::from_json(LATTICE, &Overrides::default()).unwrap();
        assert_eq!(exp.config.precision().bits(), 40 + 64);
        assert_eq!(exp.seed(), 3);
        assert_eq!(exp.runs().zoom.eps.len(), 6);
        assert_eq!(exp.config.psi_at(4), Scalar::ratio(1, 4));
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides {
            seed: Some(9),
            precision_bits: Some(300),
            point_budget: Some(77),
        };
        let exp = Experiment::from_json(LATTICE, &o).unwrap();
        assert_eq!(exp.seed(), 9);
        assert_eq!(exp.config.precision().bits(), 300);
        assert_eq!(exp.config.delone().point_budget(), 77);
    }

    #[test]
    fn precision_below_policy_is_refused() {
        let o = Overrides {
            precision_bits: Some(80),
            ..Overrides::default()
        };
        let err = Experiment::from_json(LATTICE, &o).unwrap_err();
        assert!(matches!(err, Error::PrecisionUnderflow { .. }));
    }

    #[test]
    fn unknown_psi_variant_is_a_config_error() {
        let text = LATTICE.replace("\"power\"", "\"powr\"");
        assert!(matches!(ConfigFile::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn bad_number_is_a_parse_error() {
        let text = LATTICE.replace("\"alpha\": \"2\"", "\"alpha\": \"two\"");
        let err = Experiment::from_json(&text, &Overrides::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn canonical_json_is_key_sorted_and_round_trips() {
        let file = ConfigFile::from_json(LATTICE).unwrap();
        let text = file.canonical_json();
        assert!(text.find("\"N_max\"").unwrap() < text.find("\"a\"").unwrap());
        assert_eq!(ConfigFile::from_json(&text).unwrap(), file);
    }

    #[test]
    fn every_variant_builds() {
        let prec = Precision::new(128);
        for d in [
            DeloneDef::IntegerLattice { scale: "1/2".into(), offset: "1/3".into() },
            DeloneDef::Beatty { theta: "sqrt(2)".into() },
            DeloneDef::FibonacciChain,
            DeloneDef::JitteredLattice { epsilon: "1/10".into(), seed: 1 },
        ] {
            build_delone(&d, prec).unwrap();
        }
        let inner = PsiDef::LogPower { c: "1".into(), s: "2".into() };
        for p in [
            PsiDef::Constant { c: "0.25".into() },
            PsiDef::Geometric { c: "1".into(), q: "1/2".into() },
            PsiDef::Table { values: vec!["1".into(), "0".into(), "1/3".into()] },
            PsiDef::ResidueMasked { inner: Box::new(inner), modulus: 3, class: 1 },
        ] {
            build_psi(&p, prec).unwrap();
        }
    }
}
