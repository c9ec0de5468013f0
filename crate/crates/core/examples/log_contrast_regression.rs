//! Regressing a log response on logratios, converting to a log-contrast and
//! testing each part by permutation.

use std::path::Path;

use logratio::cli::read_table;
use logratio::*;

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let x = close(&read_table(&data.join("budget.csv"))?, CLOSURE_TOLERANCE)?;
    let logy: Vec<f64> = read_table(&data.join("housing.csv"))?.values.column(0).iter().copied().collect();
    let r = WeightVector::uniform(x.nrows(), WeightAxis::Samples);
    let c = WeightVector::uniform(x.nparts(), WeightAxis::Parts);

    for p in [alr_pattern(x.col_labels(), 2)?, clr_pattern(x.col_labels(), &c)?] {
        let fit = fit_logratio_model(&logy, &x, &p, &r)?;
        println!("{}: intercept {:.4}, R2 {:.4}", p.kind(), fit.intercept, fit.r_squared);
        for (name, (b, pv)) in p.row_names().iter().zip(fit.coeffs.iter().zip(&fit.coef_p_values)) {
            println!("  {name:<40} {b:8.4}  p={pv:.3}");
        }
        println!("  log-contrast {:?}", fit.contrast.a.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>());
    }

    let perm = permutation_test(&logy, &x, &c, 999, 42)?;
    for (part, p) in x.col_labels().iter().zip(&perm.p_values) {
        println!("{part:<10} permutation p = {p:.3}");
    }
    Ok(())
}
