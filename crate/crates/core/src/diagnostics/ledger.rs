//! The estimate ledger: one JSON object per line, each tagged with the
//! experiment that produced it.
//!
//! Non-finite numbers are written as `null` and read back as `+inf`, the only
//! non-finite value the producers emit.

use super::manifest::Experiment;
use crate::error::{Error, Result};
use crate::invading::U_PROXY_BOUND;
use crate::linear::estimates::{EstimateEntry, ENERGY_BOUND, SUP_NORM_BOUND, TIME_DERIVATIVE_BOUND, UT_L2_SUP, UT_L6_SUP};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const EIGEN_RESIDUAL: &str = "eigen_residual";
pub const HEYWOOD_CONSTANT: &str = "heywood_constant";
pub const HARDY_RATIO: &str = "hardy_ratio";
pub const BOGOVSKII_DIV: &str = "bogovskii_div_residual";
pub const BOGOVSKII_C0: &str = "bogovskii_c0";
pub const CLOSURE: &str = "periodicity_closure";
pub const MONODROMY: &str = "monodromy_radius";
pub const WINDOW_DIFFERENCE: &str = "window_difference";
pub const SWEEP_COMPLETE: &str = "sweep_complete";
pub const OSEEN_WEIGHTED: &str = "oseen_weighted_norm";
pub const OSEEN_SHIFT: &str = "oseen_window_shift";
pub const OSEEN_EXPONENT: &str = "oseen_decay_exponent";
pub const BILINEAR: &str = "bilinear_bound";
pub const SOLUTION_BOUND: &str = "solution_bound";
pub const GATE: &str = "smallness_gate";
pub const CONTRACTION: &str = "contraction_ratio";
pub const MOMENTUM: &str = "momentum_residual";
pub const SAME_LIMIT: &str = "uniqueness_limit";
pub const ENERGY_TERMS: &str = "uniqueness_energy_terms";
pub const I2_QUADRATURE: &str = "i2_quadrature";

/// Names that must appear at least once in a non-trivial run.
pub fn required_names(exp: Experiment) -> &'static [&'static str] {
    const LINEAR: &[&str] = &[ENERGY_BOUND, TIME_DERIVATIVE_BOUND, SUP_NORM_BOUND, UT_L6_SUP, UT_L2_SUP, CLOSURE, MONODROMY];
    match exp {
        Experiment::Basis => &[EIGEN_RESIDUAL, HEYWOOD_CONSTANT, HARDY_RATIO, BOGOVSKII_DIV, BOGOVSKII_C0],
        Experiment::Linear => LINEAR,
        Experiment::Invade => &[
            ENERGY_BOUND,
            TIME_DERIVATIVE_BOUND,
            SUP_NORM_BOUND,
            UT_L6_SUP,
            UT_L2_SUP,
            U_PROXY_BOUND,
            WINDOW_DIFFERENCE,
            SWEEP_COMPLETE,
        ],
        Experiment::Oseen => &[OSEEN_WEIGHTED, OSEEN_SHIFT, OSEEN_EXPONENT],
        Experiment::Nonlinear => &[BILINEAR, SOLUTION_BOUND, GATE, CONTRACTION, MOMENTUM],
        Experiment::Uniqueness => &[BILINEAR, SOLUTION_BOUND, GATE, CONTRACTION, MOMENTUM, SAME_LIMIT, ENERGY_TERMS, I2_QUADRATURE],
    }
}

fn ser_num<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn de_num<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Discretisation an entry was measured at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub r: f64,
    pub h: f64,
    pub k: usize,
    pub n_t: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub experiment: Experiment,
    pub name: String,
    pub r: f64,
    pub h: f64,
    pub k: usize,
    pub n_t: usize,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_num", deserialize_with = "de_num")]
    pub constant: f64,
    /// `false` for logged quantities that carry no inequality.
    pub bound: bool,
    pub pass: bool,
}

impl LedgerEntry {
    pub fn from_estimate(experiment: Experiment, e: &EstimateEntry) -> Self {
        LedgerEntry {
            experiment,
            name: e.name.clone(),
            r: e.r,
            h: e.h,
            k: e.k,
            n_t: e.n_t,
            lhs: e.lhs,
            rhs: e.rhs,
            constant: e.constant,
            bound: e.bound,
            pass: e.pass,
        }
    }

    pub fn context(&self) -> Context {
        Context { r: self.r, h: self.h, k: self.k, n_t: self.n_t }
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ledger {
    pub entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger::default()
    }

    pub fn push_estimate(&mut self, exp: Experiment, e: &EstimateEntry) {
        self.entries.push(LedgerEntry::from_estimate(exp, e));
    }

    /// An inequality `lhs <= rhs`, i.e. a check against a fixed tolerance.
    pub fn check(&mut self, exp: Experiment, name: &str, ctx: Context, lhs: f64, rhs: f64) {
        self.record(exp, name, ctx, lhs, rhs, true, lhs <= rhs);
    }

    /// A logged quantity with its reference value; passes when finite.
    pub fn log(&mut self, exp: Experiment, name: &str, ctx: Context, lhs: f64, rhs: f64) {
        self.record(exp, name, ctx, lhs, rhs, false, lhs.is_finite());
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record(&mut self, exp: Experiment, name: &str, ctx: Context, lhs: f64, rhs: f64, bound: bool, pass: bool) {
        self.entries.push(LedgerEntry {
            experiment: exp,
            name: name.to_string(),
            r: ctx.r,
            h: ctx.h,
            k: ctx.k,
            n_t: ctx.n_t,
            lhs,
            rhs,
            constant: ratio(lhs, rhs),
            bound,
            pass,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("ledger entries serialise"));
            out.push('\n');
        }
        out
    }

    pub fn parse_line(line: &str) -> Result<LedgerEntry> {
        serde_json::from_str(line).map_err(|e| Error::Decode(format!("ledger line: {e}")))
    }

    /// Blank lines are skipped; any other malformed line is an error.
    pub fn from_jsonl(s: &str) -> Result<Self> {
        let entries = s
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| Self::parse_line(l).map_err(|e| Error::Decode(format!("line {}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ledger { entries })
    }

    /// Required names of `exp` with no entry.
    pub fn missing(&self, exp: Experiment) -> Vec<&'static str> {
        required_names(exp)
            .iter()
            .copied()
            .filter(|n| !self.entries.iter().any(|e| e.experiment == exp && e.name == *n))
            .collect()
    }

    pub fn check_coverage(&self, exp: Experiment) -> Result<()> {
        let missing = self.missing(exp);
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::LedgerCoverage(format!("{} run lacks {}", exp.name(), missing.join(", "))))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> Context {
        Context { r: 4.0, h: 0.5, k: 8, n_t: 16 }
    }

    #[test]
    fn round_trip_with_infinite_constant() {
        let mut l = Ledger::new();
        l.check(Experiment::Basis, HARDY_RATIO, ctx(), 3.0, 4.0);
        l.log(Experiment::Basis, HEYWOOD_CONSTANT, ctx(), 1.5, 0.0);
        assert_eq!(l.entries[1].constant, f64::INFINITY);
        let s = l.to_jsonl();
        assert!(s.contains("\"constant\":null"));
        let back = Ledger::from_jsonl(&s).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.to_jsonl(), s);
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_rejected() {
        let mut l = Ledger::new();
        l.check(Experiment::Linear, CLOSURE, ctx(), 1e-12, 1e-9);
        let line = l.to_jsonl();
        let extra = line.trim_end().trim_end_matches('}').to_string() + ",\"extra\":1}";
        assert!(Ledger::parse_line(&extra).is_err());
        assert!(Ledger::from_jsonl("{not json}\n").is_err());
        assert!(Ledger::from_jsonl("\n\n").unwrap().is_empty());
    }

    #[test]
    fn coverage_names_the_missing_entries() {
        let mut l = Ledger::new();
        l.check(Experiment::Nonlinear, MOMENTUM, ctx(), 1e-7, 1e-5);
        match l.check_coverage(Experiment::Nonlinear) {
            Err(Error::LedgerCoverage(m)) => assert!(m.contains(BILINEAR) && !m.contains(MOMENTUM), "{m}"),
            other => panic!("{other:?}"),
        }
        for n in required_names(Experiment::Nonlinear) {
            l.log(Experiment::Nonlinear, n, ctx(), 1.0, 1.0);
        }
        l.check_coverage(Experiment::Nonlinear).unwrap();
        // entries of another experiment do not count
        assert!(l.check_coverage(Experiment::Uniqueness).is_err());
    }

    proptest! {
        #[test]
        fn check_passes_iff_lhs_at_most_rhs(lhs in 0.0f64..10.0, rhs in 0.0f64..10.0) {
            let mut l = Ledger::new();
            l.check(Experiment::Oseen, OSEEN_SHIFT, ctx(), lhs, rhs);
            prop_assert_eq!(l.pass(), lhs <= rhs);
            let back = Ledger::from_jsonl(&l.to_jsonl()).unwrap();
            prop_assert_eq!(back, l);
        }
    }
}
