//! Simulates responses from known 2PL and graded item banks, refits them by
//! marginal maximum likelihood and prints true against estimated parameters.

use mlc::irt::{fit_2pl, fit_grm, simulate_responses, DichotomousItem, FitConfig, GradedItem, ItemBank};

fn main() -> mlc::Result<()> {
    let truth = ItemBank::dichotomous(vec![
        DichotomousItem::new(0.8, -1.5),
        DichotomousItem::new(1.2, -0.5),
        DichotomousItem::new(1.6, 0.0),
        DichotomousItem::new(1.0, 0.7),
        DichotomousItem::new(2.0, 1.4),
    ])?;
    let (responses, _) = simulate_responses(&truth, 4000, 1)?;
    let fit = fit_2pl(&responses, &FitConfig::default())?;
    println!("2PL: converged = {} after {} iterations", fit.converged, fit.iterations);
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "item", "alpha", "est", "beta", "est");
    let est = fit.bank.dichotomous_items().expect("2PL bank");
    for (i, (t, e)) in truth.dichotomous_items().expect("2PL bank").iter().zip(est).enumerate() {
        println!(
            "{:>6} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            i + 1,
            t.discrimination,
            e.discrimination,
            t.difficulty,
            e.difficulty
        );
    }

    let graded = ItemBank::graded(vec![
        GradedItem::new(1.0, vec![-1.2, 0.0, 1.1])?,
        GradedItem::new(1.5, vec![-0.8, 0.3, 1.5])?,
        GradedItem::new(0.9, vec![-1.6, -0.4, 0.6])?,
        GradedItem::new(1.8, vec![-0.5, 0.5, 1.0])?,
    ])?;
    let (responses, _) = simulate_responses(&graded, 4000, 2)?;
    let fit = fit_grm(&responses, &FitConfig::default())?;
    println!("\nGRM: converged = {} after {} iterations", fit.converged, fit.iterations);
    let est = fit.bank.graded_items().expect("graded bank");
    for (i, (t, e)) in graded.graded_items().expect("graded bank").iter().zip(est).enumerate() {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:6.3}")).collect::<Vec<_>>().join(" ");
        println!(
            "item {}: alpha {:.3} -> {:.3}, thresholds [{}] -> [{}]",
            i + 1,
            t.discrimination,
            e.discrimination,
            fmt(&t.thresholds),
            fmt(&e.thresholds)
        );
    }
    Ok(())
}
