//! Scores response patterns against an item bank, orients the CDIs by class
//! and prints the quarter-sd bins.

use mlc::cdi::{bin_cdis, orient_cdis, score_cases};
use mlc::irt::{DichotomousItem, ItemBank, ResponseMatrix};
use mlc::ClassLabel;

fn main() -> mlc::Result<()> {
    let bank = ItemBank::dichotomous(vec![
        DichotomousItem::new(1.0, -1.0),
        DichotomousItem::new(1.4, -0.3),
        DichotomousItem::new(1.2, 0.4),
        DichotomousItem::new(0.9, 1.2),
    ])?;
    let patterns = vec![
        vec![0, 0, 0, 0],
        vec![1, 0, 0, 0],
        vec![1, 1, 0, 0],
        vec![1, 1, 1, 0],
        vec![1, 1, 1, 1],
        vec![0, 1, 0, 1],
    ];
    let labels = vec![
        ClassLabel::Class2,
        ClassLabel::Class2,
        ClassLabel::Class1,
        ClassLabel::Class2,
        ClassLabel::Class1,
        ClassLabel::Class1,
    ];
    let responses = ResponseMatrix::uniform(patterns.clone(), 2, labels)?;
    let records = orient_cdis(score_cases(&responses, &bank)?)?;

    println!("{:>5} {:>10} {:>7} {:>9} {:>9} {:>8}", "case", "pattern", "class", "raw", "oriented", "clamped");
    for (r, p) in records.iter().zip(&patterns) {
        let p: String = p.iter().map(|c| char::from(b'0' + c)).collect();
        println!(
            "{:>5} {:>10} {:>7} {:>9.3} {:>9.3} {:>8}",
            r.case_id,
            p,
            r.class_label,
            r.raw_cdi,
            r.oriented()?,
            r.clamped
        );
    }
    println!();
    for bin in bin_cdis(&records)? {
        println!("[{:+.2}, {:+.2}): {}", bin.lower_edge, bin.upper_edge, bin.member_ids.join(" "));
    }
    Ok(())
}
