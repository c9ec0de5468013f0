//! Logratio distances between samples and between parts, and total variance.

use std::path::Path;

use logratio::cli::read_table;
use logratio::*;

fn print(d: &DistanceMatrix) {
    for (a, label) in d.labels.iter().enumerate() {
        let row: Vec<String> = (0..d.len()).map(|b| format!("{:.3}", d.get(a, b))).collect();
        println!("{label:>10} {}", row.join(" "));
    }
}

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/budget.csv");
    let x = close(&read_table(&path)?, CLOSURE_TOLERANCE)?;
    let r = WeightVector::uniform(x.nrows(), WeightAxis::Samples);
    let c = marginal_weights(&x);

    print(&logratio_distances(&x, &c, true)?);
    print(&part_distances(&x, &r, true)?);

    let clr = form_matrix(&x, &r, &c, Route::Clr)?;
    let lr = form_matrix(&x, &r, &c, Route::Lr)?;
    println!("form matrices differ by {:.1e}", (clr.values - lr.values).amax());
    println!("total variance {:.6}", total_variance(&x, &r, &c)?);
    Ok(())
}
