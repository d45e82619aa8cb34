use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::FormatError;

/// Step budget `T(n) = floor(c * n^p) + b` with rational `c >= 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepBudget {
    pub coefficient: Ratio<u64>,
    pub power: u32,
    pub offset: u64,
}

impl StepBudget {
    /// A zero coefficient is stored with power 0, so equal budgets compare
    /// equal.
    pub fn new(coefficient: Ratio<u64>, power: u32, offset: u64) -> Self {
        let power = if coefficient.is_zero() { 0 } else { power };
        StepBudget { coefficient, power, offset }
    }

    pub fn constant(steps: u64) -> Self {
        StepBudget::new(Ratio::zero(), 0, steps)
    }

    pub fn linear(slope: u64, offset: u64) -> Self {
        StepBudget::new(Ratio::from_integer(slope), 1, offset)
    }

    /// Evaluates at `n`, saturating at `u64::MAX`.
    pub fn eval(&self, n: u64) -> u64 {
        let mut power = 1u128;
        for _ in 0..self.power {
            power = power.saturating_mul(u128::from(n));
        }
        let numer = u128::from(*self.coefficient.numer()).saturating_mul(power);
        let term = numer / u128::from(*self.coefficient.denom());
        let total = term.saturating_add(u128::from(self.offset));
        u64::try_from(total).unwrap_or(u64::MAX)
    }
}

impl fmt::Display for StepBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient.is_zero() {
            return write!(f, "{}", self.offset);
        }
        if !self.coefficient.is_one() {
            write!(f, "{}*", self.coefficient)?;
        }
        f.write_str("n")?;
        if self.power != 1 {
            write!(f, "^{}", self.power)?;
        }
        if self.offset != 0 {
            write!(f, " + {}", self.offset)?;
        }
        Ok(())
    }
}

fn parse_coefficient(s: &str) -> Result<Ratio<u64>, FormatError> {
    let bad = || FormatError::new(format!("malformed coefficient {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(FormatError::new("coefficient denominator is zero"));
        }
        return Ok(Ratio::new(num, den));
    }
    parse_decimal(s).ok_or_else(bad)
}

/// Exact value of a nonnegative decimal literal such as `2`, `0.25`.
pub(crate) fn parse_decimal(s: &str) -> Option<Ratio<u64>> {
    let s = s.trim();
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
        return None;
    }
    let scale = 10u64.checked_pow(frac.len() as u32)?;
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Ratio::new(int.checked_mul(scale)?.checked_add(frac)?, scale))
}

impl FromStr for StepBudget {
    type Err = FormatError;

    /// Accepts `[c*]n[^p][ + b]` or a plain integer `b`, e.g. `2*n^2`,
    /// `n + 1000`, `1/2*n^3 + 7`.
    fn from_str(s: &str) -> Result<Self, FormatError> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(FormatError::new("empty budget expression"));
        }
        let (head, offset) = match compact.split_once('+') {
            Some((head, tail)) => {
                let b = tail.parse::<u64>().map_err(|_| FormatError::new(format!("malformed offset {tail:?}")))?;
                (head, b)
            }
            None => (compact.as_str(), 0),
        };
        let Some(npos) = head.find('n') else {
            if compact.contains('+') {
                return Err(FormatError::new("expected a term in n before '+'"));
            }
            let b = head.parse::<u64>().map_err(|_| FormatError::new(format!("malformed budget expression {s:?}")))?;
            return Ok(StepBudget::constant(b));
        };
        let coefficient = match &head[..npos] {
            "" => Ratio::one(),
            c => parse_coefficient(
                c.strip_suffix('*').ok_or_else(|| FormatError::new("expected '*' between coefficient and n"))?,
            )?,
        };
        let power = match &head[npos + 1..] {
            "" => 1,
            p => p
                .strip_prefix('^')
                .and_then(|p| p.parse::<u32>().ok())
                .ok_or_else(|| FormatError::new(format!("malformed exponent {p:?}")))?,
        };
        Ok(StepBudget::new(coefficient, power, offset))
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn parses_grammar() {
        assert_eq!("2*n^2".parse::<StepBudget>().unwrap(), StepBudget::new(Ratio::from_integer(2), 2, 0));
        assert_eq!("n + 1000".parse::<StepBudget>().unwrap(), StepBudget::linear(1, 1000));
        assert_eq!("1/2*n^3+7".parse::<StepBudget>().unwrap(), StepBudget::new(Ratio::new(1, 2), 3, 7));
        assert_eq!("0.25*n".parse::<StepBudget>().unwrap(), StepBudget::new(Ratio::new(1, 4), 1, 0));
        assert_eq!("500".parse::<StepBudget>().unwrap(), StepBudget::constant(500));
        for bad in ["", "n^", "2n", "n^-1", "x^2", "n + ", "1/0*n", "3 + 4"] {
            assert!(bad.parse::<StepBudget>().is_err(), "{bad:?} parsed");
        }
    }

    #[test]
    fn evaluates_with_floor() {
        let b: StepBudget = "1/3*n^2 + 1".parse().unwrap();
        assert_eq!(b.eval(0), 1);
        assert_eq!(b.eval(10), 34);
        assert_eq!("n^10".parse::<StepBudget>().unwrap().eval(1 << 20), u64::MAX);
    }

    fn any_budget() -> impl Strategy<Value = StepBudget> {
        (0u64..50, 1u64..20, 0u32..4, 0u64..10_000).prop_map(|(n, d, p, b)| StepBudget::new(Ratio::new(n, d), p, b))
    }

    proptest! {
        #[test]
        fn display_round_trips(b in any_budget()) {
            let text = b.to_string();
            let parsed: StepBudget = text.parse().unwrap();
            prop_assert_eq!(parsed, b);
        }

        #[test]
        fn monotone_in_n(b in any_budget(), n in 0u64..100_000) {
            prop_assert!(b.eval(n) <= b.eval(n + 1));
        }
    }
}
