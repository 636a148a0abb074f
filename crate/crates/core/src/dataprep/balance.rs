use rand::seq::index;

use super::table::Table;
use crate::rng::rng_from_seed;
use crate::{ClassLabel, Error, Result};

/// Keeps the minority class whole and down-samples the majority class,
/// without replacement, to the same size. Surviving rows keep their input
/// order.
pub fn balance_classes(table: &Table, seed: u64) -> Result<Table> {
    let (c1, c2): (Vec<usize>, Vec<usize>) =
        (0..table.n_rows()).partition(|&i| table.labels[i] == ClassLabel::Class1);
    if c1.is_empty() {
        return Err(Error::EmptyClass("class1"));
    }
    if c2.is_empty() {
        return Err(Error::EmptyClass("class2"));
    }
    let (minority, majority) = if c1.len() <= c2.len() { (c1, c2) } else { (c2, c1) };
    let mut rng = rng_from_seed(seed);
    let picked = index::sample(&mut rng, majority.len(), minority.len());
    let mut rows: Vec<usize> = minority;
    rows.extend(picked.iter().map(|k| majority[k]));
    rows.sort_unstable();
    Ok(table.select_rows(&rows))
}
