mod common;

use common::{direct_layout, rng, span};
use dynet::netgen::{generate_network, run_arx, true_parameters, white_input, GenConfig};
use dynet::regression::{
    block_columns, build_problem, build_regressors, stack_experiments, stack_homogeneous, ExperimentData, GroupIndex,
    GroupOrders, RegressionBlock,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_block(rng: &mut impl Rng, rows: usize, rho: &[usize]) -> RegressionBlock {
    let cols = rho.iter().sum();
    RegressionBlock {
        a: DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)),
        y: DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0)),
        rho: rho.to_vec(),
        output: 0,
    }
}

#[test]
fn least_squares_recovers_generating_parameters() {
    let cfg = GenConfig {
        nodes: 3,
        density: 0.34,
        max_feedback: 1,
        ..Default::default()
    };
    let (_, model, _) = generate_network(&cfg, &mut rng(21)).unwrap();
    let u = white_input(400, model.inputs(), 22);
    let y = run_arx(&model, &u, None).unwrap();
    let data = ExperimentData::new(y, u, 1.0).unwrap();
    for i in 0..3 {
        let orders = GroupOrders::uniform(i, 3, model.inputs(), 2);
        let block = build_regressors(&data, &orders).unwrap();
        let theta = block.a.clone().svd(true, true).solve(&block.y, 1e-12).unwrap();
        let truth = true_parameters(&model, i, 2);
        assert!((theta - truth).amax() < 1e-6);
    }
}

#[test]
fn stacked_product_is_per_experiment_product() {
    let mut r = rng(23);
    let rho = [2, 1, 3];
    let blocks: Vec<RegressionBlock> = (0..3).map(|_| random_block(&mut r, 7, &rho)).collect();
    let problem = stack_experiments(&blocks).unwrap();
    let w = DVector::from_fn(problem.columns(), |_, _| r.random_range(-1.0..1.0));
    let aw = &problem.a * &w;
    for (l, b) in blocks.iter().enumerate() {
        let wl = DVector::from_iterator(
            6,
            (0..3).flat_map(|k| w.rows_range(problem.small_group_range(k, l)).iter().copied().collect::<Vec<_>>()),
        );
        let expect = &b.a * wl;
        assert!((aw.rows_range(problem.row_blocks[l].clone()) - expect).amax() < 1e-14);
    }
}

#[test]
fn single_experiment_stack_is_identity() {
    let mut r = rng(24);
    let b = random_block(&mut r, 5, &[2, 2]);
    let p = stack_experiments(std::slice::from_ref(&b)).unwrap();
    assert_eq!(p.a, b.a);
    assert_eq!(p.y, b.y);
}

#[test]
fn duplicated_homogeneous_stack_doubles_normal_equations() {
    let mut r = rng(25);
    let b = random_block(&mut r, 6, &[1, 2]);
    let p = stack_homogeneous(&[b.clone(), b.clone()]).unwrap();
    assert_eq!(p.columns(), 3);
    let g1 = b.a.transpose() * &b.a;
    assert!((p.a.transpose() * &p.a - g1 * 2.0).amax() < 1e-12);
}

#[test]
fn mismatched_orders_are_rejected() {
    let mut r = rng(26);
    let a = random_block(&mut r, 4, &[1, 2]);
    let b = random_block(&mut r, 4, &[2, 1]);
    assert!(stack_experiments(&[a, b]).is_err());
}

#[test]
fn heterogeneous_problem_columns() {
    let y = DMatrix::from_fn(20, 2, |r, c| ((r * 7 + c * 3) % 5) as f64);
    let u = DMatrix::from_fn(20, 1, |r, _| (r % 3) as f64);
    let d = ExperimentData::new(y, u, 1.0).unwrap();
    let orders = GroupOrders::uniform(0, 2, 1, 2);
    let p = build_problem(&[d.clone(), d], &orders, true).unwrap();
    assert_eq!(p.columns(), 2 * 3 * 2);
    assert_eq!(p.rho_large(), vec![4, 4, 4]);
    assert_eq!(p.a.nrows(), 2 * 18);
}

#[test]
fn block_column_out_of_range() {
    assert!(block_columns(GroupIndex::Small(4), &[1, 1], 2).is_err());
    assert!(block_columns(GroupIndex::Large(2), &[1, 1], 2).is_err());
    assert!(block_columns(GroupIndex::Large(0), &[1, 1], 0).is_err());
}

proptest! {
    #[test]
    fn block_columns_match_direct_layout(
        rho in prop::collection::vec(1usize..6, 1..8),
        l_count in 1usize..6,
    ) {
        let layout = direct_layout(&rho, l_count);
        for k in 0..rho.len() {
            prop_assert_eq!(
                block_columns(GroupIndex::Large(k), &rho, l_count).unwrap(),
                span(&layout, |o| o.0 == k)
            );
            for l in 0..l_count {
                prop_assert_eq!(
                    block_columns(GroupIndex::Small(k * l_count + l), &rho, l_count).unwrap(),
                    span(&layout, |o| *o == (k, l))
                );
            }
        }
    }

    #[test]
    fn stacked_columns_total(rho in prop::collection::vec(1usize..4, 1..5), l_count in 1usize..4) {
        let mut r = rng(27);
        let blocks: Vec<_> = (0..l_count).map(|_| random_block(&mut r, 3, &rho)).collect();
        let p = stack_experiments(&blocks).unwrap();
        prop_assert_eq!(p.columns(), p.rho_large().iter().sum::<usize>());
        for k in 0..rho.len() {
            prop_assert_eq!(p.group_range(k), block_columns(GroupIndex::Large(k), &rho, l_count).unwrap());
        }
    }
}
