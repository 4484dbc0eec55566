//! Facial expression labels and the fixed expression → color table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of expression classes carried by every face record.
pub const N_EXPRESSIONS: usize = 7;

/// Index of the happiness probability inside an expression vector.
pub const HAPPY_INDEX: usize = 3;

/// Index of the neutral probability; it is excluded from the empathy cosine.
pub const NEUTRAL_INDEX: usize = 6;

/// Expression classes in the fixed order used by expression vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expression {
    Angry,
    Disgust,
    Scared,
    Happy,
    Sad,
    Surprised,
    Neutral,
}

impl Expression {
    pub const ALL: [Expression; N_EXPRESSIONS] = [
        Expression::Angry,
        Expression::Disgust,
        Expression::Scared,
        Expression::Happy,
        Expression::Sad,
        Expression::Surprised,
        Expression::Neutral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Expression::Angry => "angry",
            Expression::Disgust => "disgust",
            Expression::Scared => "scared",
            Expression::Happy => "happy",
            Expression::Sad => "sad",
            Expression::Surprised => "surprised",
            Expression::Neutral => "neutral",
        }
    }

    pub fn color(self) -> Color {
        match self {
            Expression::Scared => Color::new("dark gray", "#404040"),
            Expression::Angry => Color::new("red", "#D62728"),
            Expression::Disgust => Color::new("green", "#2CA02C"),
            Expression::Sad => Color::new("blue", "#1F77B4"),
            Expression::Surprised => Color::new("white", "#FFFFFF"),
            Expression::Happy => Color::new("yellow", "#FFD700"),
            Expression::Neutral => Color::new("gray", "#9E9E9E"),
        }
    }

    /// Argmax over a 7-vector; ties resolve to the lowest index.
    pub fn argmax(values: &[f64; N_EXPRESSIONS]) -> Expression {
        let mut best = 0;
        for (k, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = k;
            }
        }
        Self::ALL[best]
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown expression label `{0}`")]
pub struct UnknownExpression(pub String);

impl FromStr for Expression {
    type Err = UnknownExpression;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.label() == s)
            .ok_or_else(|| UnknownExpression(s.to_string()))
    }
}

/// A named color with its RGB hex code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Color {
    pub name: String,
    pub hex: String,
}

impl Color {
    fn new(name: &str, hex: &str) -> Self {
        Self {
            name: name.to_string(),
            hex: hex.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_matches_vector_layout() {
        assert_eq!(Expression::Happy.index(), HAPPY_INDEX);
        assert_eq!(Expression::Neutral.index(), NEUTRAL_INDEX);
        for (k, e) in Expression::ALL.iter().enumerate() {
            assert_eq!(Expression::from_index(k), Some(*e));
            assert_eq!(e.label().parse::<Expression>().unwrap(), *e);
        }
        assert!("joyful".parse::<Expression>().is_err());
    }

    #[test]
    fn color_table_is_total_and_distinct() {
        let hexes: std::collections::BTreeSet<_> =
            Expression::ALL.iter().map(|e| e.color().hex).collect();
        assert_eq!(hexes.len(), N_EXPRESSIONS);
        assert_eq!(Expression::Happy.color().hex, "#FFD700");
        assert_eq!(Expression::Neutral.color().name, "gray");
    }

    #[test]
    fn argmax_ties_go_to_lowest_index() {
        let v = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        assert_eq!(Expression::argmax(&v), Expression::Angry);
        let v = [0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.7];
        assert_eq!(Expression::argmax(&v), Expression::Neutral);
    }
}
