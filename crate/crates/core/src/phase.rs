//! The eight surgical phases of a laparoscopic cholecystectomy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of phase classes.
pub const NUM_PHASES: usize = 8;

/// A surgical phase label, ordered P1 < ... < P8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
}

impl Phase {
    pub const ALL: [Phase; NUM_PHASES] = [
        Phase::P1,
        Phase::P2,
        Phase::P3,
        Phase::P4,
        Phase::P5,
        Phase::P6,
        Phase::P7,
        Phase::P8,
    ];

    /// Zero-based class index (P1 -> 0).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Phase> {
        Phase::ALL.get(index).copied()
    }

    /// Identifier used in annotation files.
    pub fn annotation_name(self) -> &'static str {
        match self {
            Phase::P1 => "TrocarPlacement",
            Phase::P2 => "Preparation",
            Phase::P3 => "CalotTriangleDissection",
            Phase::P4 => "ClippingCutting",
            Phase::P5 => "GallbladderDissection",
            Phase::P6 => "GallbladderPackaging",
            Phase::P7 => "CleaningCoagulation",
            Phase::P8 => "GallbladderRetraction",
        }
    }

    /// Human readable name.
    pub fn title(self) -> &'static str {
        match self {
            Phase::P1 => "Trocar Placement",
            Phase::P2 => "Preparation",
            Phase::P3 => "Calot Triangle Dissection",
            Phase::P4 => "Clipping & Cutting",
            Phase::P5 => "Gallbladder Dissection",
            Phase::P6 => "Gallbladder Packaging",
            Phase::P7 => "Cleaning & Coagulation",
            Phase::P8 => "Gallbladder Retraction",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown phase name `{0}`")]
pub struct UnknownPhase(pub String);

impl FromStr for Phase {
    type Err = UnknownPhase;

    /// Accepts `P1`..`P8` and the annotation names, ignoring case, spaces,
    /// underscores and `&`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        if let Some(n) = key.strip_prefix('p').and_then(|d| d.parse::<usize>().ok()) {
            if (1..=NUM_PHASES).contains(&n) {
                return Ok(Phase::ALL[n - 1]);
            }
        }
        Phase::ALL
            .iter()
            .copied()
            .find(|p| p.annotation_name().to_ascii_lowercase() == key)
            .ok_or_else(|| UnknownPhase(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names_and_ids() {
        assert_eq!("TrocarPlacement".parse::<Phase>().unwrap(), Phase::P1);
        assert_eq!("Clipping & Cutting".parse::<Phase>().unwrap(), Phase::P4);
        assert_eq!("gallbladder_retraction".parse::<Phase>().unwrap(), Phase::P8);
        assert_eq!("p7".parse::<Phase>().unwrap(), Phase::P7);
        assert!("P9".parse::<Phase>().is_err());
        assert!("Suturing".parse::<Phase>().is_err());
    }

    #[test]
    fn order_and_index_agree() {
        for (i, p) in Phase::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
            assert_eq!(Phase::from_index(i), Some(*p));
            assert_eq!(p.to_string(), format!("P{}", i + 1));
        }
        assert!(Phase::P1 < Phase::P8);
        assert_eq!(Phase::from_index(8), None);
    }
}
