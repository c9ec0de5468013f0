//! Weighted logratio analysis and biplot coordinates.

use std::path::Path;

use logratio::cli::read_table;
use logratio::*;

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/budget.csv");
    let x = close(&read_table(&path)?, CLOSURE_TOLERANCE)?;
    let r = WeightVector::uniform(x.nrows(), WeightAxis::Samples);
    let c = marginal_weights(&x);

    let fit = lra_fit(&x, &r, &c)?;
    println!("rank {}, total variance {:.6}", fit.rank(), fit.total_variance());
    for (k, (ev, pct)) in fit.eigenvalues.iter().zip(fit.explained_pct.iter()).enumerate() {
        println!("  axis {}: {ev:.6} ({pct:.1}%)", k + 1);
    }

    let plot = biplot_coords(&fit, BiplotStyle::Contribution, (0, 1))?;
    println!("{} / {}", plot.axis_labels[0], plot.axis_labels[1]);
    for (label, p) in fit.row_labels.iter().zip(plot.rows.row_iter()) {
        println!("  {label:<10} {:8.4} {:8.4}", p[0], p[1]);
    }
    for (label, p) in fit.col_labels.iter().zip(plot.cols.row_iter()) {
        println!("  {label:<10} {:8.4} {:8.4}", p[0], p[1]);
    }

    // The link from Education to Economy projects to ln(Economy/Education).
    let link = link_scores(&fit, (1, 3), (0, 1))?;
    println!("Economy/Education link: ({:.4}, {:.4})", link[0], link[1]);
    Ok(())
}
