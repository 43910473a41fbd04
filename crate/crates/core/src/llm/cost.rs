use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl TokenUsage {
    pub fn new(input_tokens: u64, output_tokens: u64) -> Self {
        Self {
            input_tokens,
            output_tokens,
        }
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;
    fn add(self, rhs: Self) -> Self {
        Self {
            input_tokens: self.input_tokens + rhs.input_tokens,
            output_tokens: self.output_tokens + rhs.output_tokens,
        }
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// Price per million tokens, in dollars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub input_per_million: f64,
    pub output_per_million: f64,
}

impl Default for Rates {
    /// GPT-4o list prices.
    fn default() -> Self {
        Self {
            input_per_million: 5.0,
            output_per_million: 15.0,
        }
    }
}

/// A dollar amount held in whole cents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cost {
    pub cents: u64,
}

impl Cost {
    pub fn from_cents(cents: u64) -> Self {
        Self { cents }
    }

    pub fn dollars(self) -> f64 {
        self.cents as f64 / 100.0
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Self) -> Self {
        Cost::from_cents(self.cents + rhs.cents)
    }
}

impl std::iter::Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Self {
        iter.fold(Cost::default(), Add::add)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}.{:02}", self.cents / 100, self.cents % 100)
    }
}

/// `input×input_rate/1e6 + output×output_rate/1e6`, rounded to the cent.
pub fn compute_cost(usage: TokenUsage, rates: Rates) -> Cost {
    let input_rate = rates.input_per_million.max(0.0);
    let output_rate = rates.output_per_million.max(0.0);
    let dollars = usage.input_tokens as f64 * input_rate / 1e6
        + usage.output_tokens as f64 * output_rate / 1e6;
    Cost::from_cents((dollars * 100.0).round() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_gpt4o_costs() {
        let rates = Rates::default();
        assert_eq!(
            compute_cost(TokenUsage::new(4_297_652, 0), rates),
            Cost::from_cents(2149)
        );
        assert_eq!(
            compute_cost(TokenUsage::new(0, 624_170), rates),
            Cost::from_cents(936)
        );
        assert_eq!(compute_cost(TokenUsage::default(), rates), Cost::default());
    }

    #[test]
    fn display() {
        assert_eq!(Cost::from_cents(2149).to_string(), "$21.49");
        assert_eq!(Cost::from_cents(5).to_string(), "$0.05");
        assert_eq!(Cost::default().to_string(), "$0.00");
    }
}
