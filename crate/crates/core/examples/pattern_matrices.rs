//! Building the pattern matrix of each logratio family over four parts.

use logratio::*;

fn show(p: &PatternMatrix) {
    println!("{} ({}x{})", p.kind(), p.nrows(), p.nparts());
    for (k, name) in p.row_names().iter().enumerate() {
        let row: Vec<String> = p.coeffs().row(k).iter().map(|v| format!("{v:6.3}")).collect();
        println!("  {}   {name}", row.join(" "));
    }
}

fn main() -> Result<()> {
    let parts: Vec<String> = ["Defence", "Economy", "Health", "Education"].map(String::from).to_vec();
    let uniform = WeightVector::uniform(4, WeightAxis::Parts);

    show(&lr_pattern(&parts)?);
    show(&alr_pattern(&parts, 3)?);
    show(&clr_pattern(&parts, &uniform)?);
    show(&plr_pattern(&parts, &uniform, &[0, 1, 2, 3])?);

    // Health/Economy, Health/Education, Defence/Education connect all four parts.
    let spec = RatioSpec::new(vec![(2, 1), (2, 3), (0, 3)], 4)?;
    println!("spanning tree: {}", spec.is_spanning_tree(4));
    show(&dag_pattern(&parts, &spec)?);

    let tree = MergeTree::new(
        parts.clone(),
        vec![
            Merge { left: 0, right: 1, height: 1.0 },
            Merge { left: 2, right: 3, height: 1.0 },
            Merge { left: 4, right: 5, height: 2.0 },
        ],
    )?;
    show(&ilr_pattern(&parts, &tree, &uniform)?);
    show(&slr_pattern(
        &parts,
        &[SlrGroup::new(vec![0, 1], vec![2, 3]), SlrGroup::new(vec![0], vec![1]), SlrGroup::new(vec![2], vec![3])],
    )?);
    Ok(())
}
