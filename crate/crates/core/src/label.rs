use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Binary outcome class.
///
/// `Class1` is the class whose CDIs get sign-flipped before adaptive testing
/// (the "positive finding" class: dead, pulsar). `Class2` keeps raw CDIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Class1,
    Class2,
}

impl ClassLabel {
    pub const BOTH: [ClassLabel; 2] = [ClassLabel::Class1, ClassLabel::Class2];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Class1 => "class1",
            ClassLabel::Class2 => "class2",
        }
    }

    pub fn other(self) -> ClassLabel {
        match self {
            ClassLabel::Class1 => ClassLabel::Class2,
            ClassLabel::Class2 => ClassLabel::Class1,
        }
    }

    /// Sign applied to a raw CDI to orient it for this class.
    pub fn orientation(self) -> f64 {
        match self {
            ClassLabel::Class1 => -1.0,
            ClassLabel::Class2 => 1.0,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "class1" | "1" => Ok(ClassLabel::Class1),
            "class2" | "2" => Ok(ClassLabel::Class2),
            other => Err(Error::Config(format!(
                "unknown class {other:?} (expected class1 or class2)"
            ))),
        }
    }
}
