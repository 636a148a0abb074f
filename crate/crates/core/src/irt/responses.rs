use serde::{Deserialize, Serialize};

use crate::{ClassLabel, Error, Result};

/// Coded item responses, one row per case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMatrix {
    pub case_ids: Vec<String>,
    pub item_names: Vec<String>,
    /// Declared number of response categories per item.
    pub n_categories: Vec<usize>,
    pub codes: Vec<Vec<u8>>,
    pub class_labels: Vec<ClassLabel>,
}

impl ResponseMatrix {
    pub fn new(
        case_ids: Vec<String>,
        item_names: Vec<String>,
        n_categories: Vec<usize>,
        codes: Vec<Vec<u8>>,
        class_labels: Vec<ClassLabel>,
    ) -> Result<Self> {
        let m = ResponseMatrix {
            case_ids,
            item_names,
            n_categories,
            codes,
            class_labels,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix whose items all share `n_categories`, naming items
    /// `item1..` and cases `1..`.
    pub fn uniform(codes: Vec<Vec<u8>>, n_categories: usize, class_labels: Vec<ClassLabel>) -> Result<Self> {
        let n_items = codes.first().map_or(0, Vec::len);
        ResponseMatrix::new(
            (1..=codes.len()).map(|i| i.to_string()).collect(),
            (1..=n_items).map(|i| format!("item{i}")).collect(),
            vec![n_categories; n_items],
            codes,
            class_labels,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n_items = self.item_names.len();
        if self.n_categories.len() != n_items {
            return Err(Error::InvalidResponses(format!(
                "{} category counts for {} items",
                self.n_categories.len(),
                n_items
            )));
        }
        if self.case_ids.len() != self.codes.len() || self.class_labels.len() != self.codes.len() {
            return Err(Error::InvalidResponses(format!(
                "{} case ids, {} labels, {} rows",
                self.case_ids.len(),
                self.class_labels.len(),
                self.codes.len()
            )));
        }
        if let Some(&n) = self.n_categories.iter().find(|&&n| !(2..=u8::MAX as usize).contains(&n)) {
            return Err(Error::InvalidResponses(format!("items need 2..=255 categories, got {n}")));
        }
        for (r, row) in self.codes.iter().enumerate() {
            if row.len() != n_items {
                return Err(Error::InvalidResponses(format!(
                    "row {} has {} codes, expected {}",
                    r + 1,
                    row.len(),
                    n_items
                )));
            }
            for (i, &c) in row.iter().enumerate() {
                if usize::from(c) >= self.n_categories[i] {
                    return Err(Error::InvalidResponses(format!(
                        "row {}, item `{}`: code {} outside 0..{}",
                        r + 1,
                        self.item_names[i],
                        c,
                        self.n_categories[i] - 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_cases(&self) -> usize {
        self.codes.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_names.len()
    }

    /// Counts of each raw category for item `i`.
    pub fn category_counts(&self, i: usize) -> Vec<usize> {
        let mut counts = vec![0; self.n_categories[i]];
        for row in &self.codes {
            counts[usize::from(row[i])] += 1;
        }
        counts
    }
}
