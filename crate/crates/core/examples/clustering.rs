//! Ward clustering of samples and parts, amalgamation clustering, and the
//! two tree export formats.

use std::path::Path;

use logratio::cli::read_table;
use logratio::*;

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/budget.csv");
    let x = close(&read_table(&path)?, CLOSURE_TOLERANCE)?;
    let r = WeightVector::uniform(x.nrows(), WeightAxis::Samples);
    let c = marginal_weights(&x);

    let samples = ward_cluster(&ClusterInput::new(logratio_distances(&x, &c, true)?, r.clone())?)?;
    println!("samples: {}", tree_export(&samples, TreeFormat::Parenthesized));

    let parts = ward_cluster(&ClusterInput::new(part_distances(&x, &r, true)?, c.clone())?)?;
    println!("parts:   {}", tree_export(&parts, TreeFormat::Parenthesized));

    for weighted in [false, true] {
        let tree = amalgamation_cluster(&x, &r, &c, weighted)?;
        let kind = if weighted { "weighted" } else { "unweighted" };
        println!("amalgamation ({kind}): {}", tree_export(&tree, TreeFormat::Parenthesized));
    }

    // An amalgamation tree can define an ILR basis.
    let tree = amalgamation_cluster(&x, &r, &c, true)?;
    let ilr = ilr_pattern(x.col_labels(), &tree, &c)?;
    println!("{:?}", ilr.row_names());
    println!("{}", tree_export(&tree, TreeFormat::MergeListJson));
    Ok(())
}
