use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cdi::{bin_cdis, bin_lower_edge, CdiRecord};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub case_id: String,
    /// Lower edge of the case's CDI bin.
    pub bin: f64,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSplit {
    pub bin: f64,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitAssignment {
    /// One entry per case, grouped by bin in ascending order.
    pub entries: Vec<SplitEntry>,
    pub bins: Vec<BinSplit>,
}

impl SplitAssignment {
    pub fn role_of(&self) -> BTreeMap<&str, Role> {
        self.entries.iter().map(|e| (e.case_id.as_str(), e.role)).collect()
    }

    pub fn ids(&self, role: Role) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.role == role)
            .map(|e| e.case_id.as_str())
            .collect()
    }
}

/// Training share of a bin of `n` cases: 70%, rounded half up.
pub fn train_count(n: usize) -> usize {
    (7 * n + 5) / 10
}

/// Splits each oriented-CDI bin 70/30 at random. Bins are shuffled in
/// ascending order from a single seeded stream.
pub fn stratified_split(records: &[CdiRecord], seed: u64) -> Result<SplitAssignment> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut rng = rng_from_seed(seed);
    let mut out = SplitAssignment::default();
    for bin in bin_cdis(records)? {
        let mut members = bin.member_ids;
        members.shuffle(&mut rng);
        let n_train = train_count(members.len());
        out.bins.push(BinSplit {
            bin: bin.lower_edge,
            n_train,
            n_test: members.len() - n_train,
        });
        for (k, case_id) in members.into_iter().enumerate() {
            out.entries.push(SplitEntry {
                case_id,
                bin: bin_lower_edge(bin.index),
                role: if k < n_train { Role::Train } else { Role::Test },
            });
        }
    }
    Ok(out)
}

/// Writes `case_id,bin,role` rows.
pub fn write_split_csv<W: Write>(split: &SplitAssignment, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in &split.entries {
        w.serialize(e).map_err(|e| Error::csv("split output", e))?;
    }
    w.flush().map_err(|e| Error::io("split output", e))
}

pub fn read_split_csv(path: &Path) -> Result<SplitAssignment> {
    let ctx = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(ctx.clone(), e))?;
    let entries = rdr
        .deserialize::<SplitEntry>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(ctx, e))?;
    let mut bins: BTreeMap<i64, BinSplit> = BTreeMap::new();
    for e in &entries {
        let b = bins.entry((e.bin * 4.0).round() as i64).or_insert(BinSplit {
            bin: e.bin,
            n_train: 0,
            n_test: 0,
        });
        match e.role {
            Role::Train => b.n_train += 1,
            Role::Test => b.n_test += 1,
        }
    }
    Ok(SplitAssignment {
        entries,
        bins: bins.into_values().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ClassLabel;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn records(cdis: &[f64]) -> Vec<CdiRecord> {
        cdis.iter()
            .enumerate()
            .map(|(i, &x)| CdiRecord {
                case_id: format!("c{i}"),
                class_label: ClassLabel::Class2,
                raw_cdi: x,
                oriented_cdi: Some(x),
                converged: true,
                clamped: false,
            })
            .collect()
    }

    #[test]
    fn rounding_of_small_bins() {
        assert_eq!(train_count(10), 7);
        assert_eq!(train_count(2), 1);
        assert_eq!(train_count(1), 1);
        assert_eq!(train_count(5), 4);
    }

    #[test]
    fn bins_are_split_independently() {
        let mut cdis = vec![0.1; 10];
        cdis.extend([0.3, 0.3]);
        cdis.push(-1.0);
        let s = stratified_split(&records(&cdis), 7).unwrap();
        let counts: Vec<(f64, usize, usize)> = s.bins.iter().map(|b| (b.bin, b.n_train, b.n_test)).collect();
        assert_eq!(counts, vec![(-1.0, 1, 0), (0.0, 7, 3), (0.25, 1, 1)]);
    }

    #[test]
    fn empty_and_unoriented_inputs_fail() {
        assert!(matches!(stratified_split(&[], 0), Err(Error::EmptyRecords)));
        let mut r = records(&[0.1]);
        r[0].oriented_cdi = None;
        assert!(matches!(stratified_split(&r, 0), Err(Error::NotOriented(_))));
    }

    #[test]
    fn csv_roundtrip() {
        let s = stratified_split(&records(&[0.1, 0.2, 0.6, -0.3, 0.0]), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.csv");
        write_split_csv(&s, std::fs::File::create(&path).unwrap()).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("case_id,bin,role\n"));
        assert_eq!(read_split_csv(&path).unwrap(), s);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(cdis in prop::collection::vec(-3.0f64..3.0, 1..300), seed in any::<u64>()) {
            let recs = records(&cdis);
            let s = stratified_split(&recs, seed).unwrap();
            let train: HashSet<&str> = s.ids(Role::Train).into_iter().collect();
            let test: HashSet<&str> = s.ids(Role::Test).into_iter().collect();
            prop_assert!(train.is_disjoint(&test));
            prop_assert_eq!(train.len() + test.len(), recs.len());
            for b in &s.bins {
                let n = b.n_train + b.n_test;
                prop_assert!((b.n_train as f64 - 0.7 * n as f64).abs() <= 1.0);
            }
            prop_assert_eq!(stratified_split(&recs, seed).unwrap(), s);
        }
    }
}
