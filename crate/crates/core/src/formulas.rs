//! Suspiciousness formulas repurposed as patch priority functions.
//!
//! Each formula maps a [`SimilarityTuple`] to a score; higher means the patch
//! should be validated sooner. Any zero denominator yields 0.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SimilarityTuple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Tarantula,
    Ochiai,
    Ochiai2,
    Op2,
    #[serde(rename = "SBI")]
    Sbi,
    Jaccard,
    Kulczynski,
    Dstar2,
}

impl Formula {
    pub const ALL: [Formula; 8] = [
        Formula::Tarantula,
        Formula::Ochiai,
        Formula::Ochiai2,
        Formula::Op2,
        Formula::Sbi,
        Formula::Jaccard,
        Formula::Kulczynski,
        Formula::Dstar2,
    ];

    /// Canonical spelling.
    pub fn name(self) -> &'static str {
        match self {
            Formula::Tarantula => "Tarantula",
            Formula::Ochiai => "Ochiai",
            Formula::Ochiai2 => "Ochiai2",
            Formula::Op2 => "Op2",
            Formula::Sbi => "SBI",
            Formula::Jaccard => "Jaccard",
            Formula::Kulczynski => "Kulczynski",
            Formula::Dstar2 => "Dstar2",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formula::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFormula(s.to_string()))
    }
}

/// A finite priority value with a total order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorityScore(f64);

impl PriorityScore {
    pub const ZERO: PriorityScore = PriorityScore(0.0);

    fn finite(v: f64) -> Self {
        if v.is_finite() {
            PriorityScore(v)
        } else {
            PriorityScore::ZERO
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Eq for PriorityScore {}

impl PartialOrd for PriorityScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PriorityScore {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for PriorityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.0)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn score(formula: Formula, t: SimilarityTuple) -> PriorityScore {
    let ef = t.ef as f64;
    let nf = t.nf as f64;
    let ep = t.ep as f64;
    let np = t.np as f64;
    let v = match formula {
        Formula::Tarantula => {
            if t.ef + t.nf == 0 || t.ep + t.np == 0 {
                0.0
            } else {
                let fail = ef / (ef + nf);
                let pass = ep / (ep + np);
                ratio(fail, fail + pass)
            }
        }
        Formula::Ochiai => ratio(ef, ((ef + nf) * (ef + ep)).sqrt()),
        Formula::Ochiai2 => ratio(ef * np, ((ef + ep) * (nf + np) * (ef + nf) * (ep + np)).sqrt()),
        Formula::Op2 => ef - ep / (ep + np + 1.0),
        Formula::Sbi => ratio(ef, ef + ep),
        Formula::Jaccard => ratio(ef, ef + nf + ep),
        Formula::Kulczynski => ratio(ef, nf + ep),
        Formula::Dstar2 => ratio(ef * ef, ep + nf),
    };
    PriorityScore::finite(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(ef: u64, nf: u64, ep: u64, np: u64) -> SimilarityTuple {
        SimilarityTuple::new(ef, nf, ep, np)
    }

    #[test]
    fn ochiai_worked_example_cells() {
        assert!((score(Formula::Ochiai, t(1, 1, 4, 2)).value() - 0.32).abs() < 0.005);
        assert!((score(Formula::Ochiai, t(1, 1, 3, 2)).value() - 0.35).abs() < 0.005);
        assert!((score(Formula::Ochiai, t(3, 3, 3, 2)).value() - 0.50).abs() < 1e-12);
        assert!((score(Formula::Ochiai, t(1, 1, 2, 3)).value() - 1.0 / 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ochiai_zero_ef() {
        for (nf, ep, np) in [(0, 0, 0), (3, 4, 5), (1, 0, 9)] {
            assert_eq!(score(Formula::Ochiai, t(0, nf, ep, np)).value(), 0.0);
        }
    }

    #[test]
    fn hand_computed_values() {
        assert_eq!(score(Formula::Tarantula, t(2, 2, 2, 2)).value(), 0.5);
        assert_eq!(score(Formula::Dstar2, t(2, 2, 2, 2)).value(), 1.0);
        assert!((score(Formula::Op2, t(2, 2, 2, 2)).value() - 1.6).abs() < 1e-12);
        assert_eq!(score(Formula::Sbi, t(2, 2, 2, 2)).value(), 0.5);
        assert!((score(Formula::Jaccard, t(2, 2, 2, 2)).value() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(score(Formula::Kulczynski, t(2, 2, 2, 2)).value(), 0.5);
        assert_eq!(score(Formula::Ochiai2, t(2, 2, 2, 2)).value(), 0.25);
    }

    #[test]
    fn zero_denominators_are_guarded() {
        for f in Formula::ALL {
            let s = score(f, t(0, 0, 0, 0)).value();
            assert!(s.is_finite(), "{f}");
            assert_eq!(s, 0.0, "{f}");
        }
        assert_eq!(score(Formula::Kulczynski, t(3, 0, 0, 1)).value(), 0.0);
    }

    #[test]
    fn parse_case_insensitive() {
        assert_eq!("ochiai".parse::<Formula>().unwrap(), Formula::Ochiai);
        assert_eq!("sbi".parse::<Formula>().unwrap(), Formula::Sbi);
        assert_eq!("DSTAR2".parse::<Formula>().unwrap(), Formula::Dstar2);
        assert!(matches!("dstar".parse::<Formula>(), Err(Error::UnknownFormula(_))));
    }

    fn tuple() -> impl Strategy<Value = SimilarityTuple> {
        (0u64..200, 0u64..200, 0u64..200, 0u64..200).prop_map(|(a, b, c, d)| t(a, b, c, d))
    }

    proptest! {
        #[test]
        fn bounded_formulas_stay_in_unit_interval(tu in tuple()) {
            for f in [Formula::Ochiai, Formula::Tarantula, Formula::Sbi, Formula::Jaccard, Formula::Ochiai2] {
                let s = score(f, tu).value();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&s), "{} {} -> {}", f, tu, s);
            }
        }

        #[test]
        fn non_decreasing_in_ef(tu in tuple(), bump in 1u64..50) {
            let more = t(tu.ef + bump, tu.nf, tu.ep, tu.np);
            for f in Formula::ALL {
                prop_assert!(score(f, more).value() >= score(f, tu).value() - 1e-12, "{} {}", f, tu);
            }
        }

        #[test]
        fn jaccard_is_increasing_transform_of_kulczynski(ef in 1u64..500, nf in 0u64..500, ep in 0u64..500, np in 0u64..500) {
            prop_assume!(nf + ep > 0);
            let k = score(Formula::Kulczynski, t(ef, nf, ep, np)).value();
            let j = score(Formula::Jaccard, t(ef, nf, ep, np)).value();
            prop_assert!((j - k / (1.0 + k)).abs() < 1e-12);
        }
    }
}
