//! Recovering compositions from ALR, DAG, ILR and SLR values.

use logratio::*;

fn main() -> Result<()> {
    let parts: Vec<String> = ["Defence", "Economy", "Health", "Education"].map(String::from).to_vec();
    let x = CompositionMatrix::new(
        nalgebra::DMatrix::from_row_slice(2, 4, &[0.10, 0.24, 0.37, 0.29, 0.08, 0.30, 0.34, 0.28]),
        vec!["a".into(), "b".into()],
        parts.clone(),
    )?;
    let c = WeightVector::uniform(4, WeightAxis::Parts);
    let l = x.log();

    let alr = alr_pattern(&parts, 3)?;
    let y = apply_pattern(&l, &alr)?;
    println!("ALR   {:?}", invert_alr(y.row(0).as_slice(), 3)?.as_slice());

    let dag = dag_pattern(&parts, &RatioSpec::new(vec![(2, 1), (2, 3), (0, 3)], 4)?)?;
    let y = apply_pattern(&l, &dag)?;
    println!("DAG   {:?}", invert_dag(y.row(0).as_slice(), &dag)?.as_slice());

    let clr = clr_pattern(&parts, &c)?;
    let y = apply_pattern(&l, &clr)?;
    println!("CLR   {:?}", invert_linear(y.row(0).as_slice(), &clr, &c)?.as_slice());

    let slr = slr_pattern(
        &parts,
        &[SlrGroup::new(vec![0, 1], vec![2, 3]), SlrGroup::new(vec![0], vec![1]), SlrGroup::new(vec![2], vec![3])],
    )?;
    let y = slr_transform(&x, &slr)?;
    println!("SLR   {:?}", invert_slr(y.row(1).as_slice(), &slr)?.as_slice());
    println!("input {:?}", x.row(1).as_slice());
    Ok(())
}
