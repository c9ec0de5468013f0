//! Closing raw amounts, replacing zeros and taking subcompositions.

use logratio::{close, replace_zeros, subcomposition, RawTable, CLOSURE_TOLERANCE};
use nalgebra::DMatrix;

fn main() -> Result<(), logratio::Error> {
    let amounts = RawTable::new(
        DMatrix::from_row_slice(3, 4, &[4212.0, 9876.0, 15320.0, 12045.0, 812.0, 0.0, 3120.0, 2698.0, 356.0, 1402.0, 2987.0, 2211.0]),
        vec!["c1".into(), "c2".into(), "c3".into()],
        ["Defence", "Economy", "Health", "Education"].map(String::from).to_vec(),
    )?;

    match close(&amounts, CLOSURE_TOLERANCE) {
        Err(e) => println!("cannot close yet: {e}"),
        Ok(_) => unreachable!(),
    }

    // Zeros become 65% of the smallest positive value in their row.
    let filled = replace_zeros(&amounts, 0.65)?;
    let x = close(&filled, CLOSURE_TOLERANCE)?;
    for (i, label) in x.row_labels().iter().enumerate() {
        let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:.4}")).collect();
        println!("{label}: {}", row.join("  "));
    }

    // Ratios among the kept parts survive re-closure.
    let sub = subcomposition(&x, &[0, 2])?;
    println!(
        "Defence/Health in c1: {:.6} before, {:.6} after",
        x.values()[(0, 0)] / x.values()[(0, 2)],
        sub.values()[(0, 0)] / sub.values()[(0, 1)]
    );
    Ok(())
}
