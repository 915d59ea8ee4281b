//! Property tests for the information identities and a cross-check of the
//! model functionals against the exact tiny-world engine on an induced
//! coarse world.

use proptest::prelude::*;
use ratefront_core::info::{
    check_upper_bound, CategoricalTable, ConditionalTable, TinyWorld, TinyWorldKernels,
    Variable, VariationalSet,
};

fn table_strategy(cards: Vec<usize>) -> impl Strategy<Value = CategoricalTable> {
    let size: usize = cards.iter().product();
    proptest::collection::vec(1e-4..1.0f64, size).prop_map(move |weights| {
        let vars = cards
            .iter()
            .enumerate()
            .map(|(i, &c)| Variable::new(format!("v{i}"), c))
            .collect();
        CategoricalTable::from_weights(vars, weights).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_chain_rule(t in table_strategy(vec![3, 2, 4])) {
        let joint = t.entropy(&["v0", "v1", "v2"]).unwrap();
        let cond = t.conditional_entropy(&["v0"], &["v1", "v2"]).unwrap();
        let rest = t.entropy(&["v1", "v2"]).unwrap();
        prop_assert!((joint - cond - rest).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_chain_rule(t in table_strategy(vec![2, 3, 2])) {
        let lhs = t.mutual_information(&["v0", "v1"], &["v2"]).unwrap();
        let rhs = t.mutual_information(&["v0"], &["v2"]).unwrap()
            + t.conditional_mi(&["v1"], &["v2"], &["v0"]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn information_quantities_are_nonnegative(t in table_strategy(vec![3, 3, 2])) {
        prop_assert!(t.mutual_information(&["v0"], &["v1"]).unwrap() >= 0.0);
        prop_assert!(t.conditional_mi(&["v0"], &["v1"], &["v2"]).unwrap() >= 0.0);
        prop_assert!(t.entropy(&["v0", "v2"]).unwrap() >= 0.0);
    }

    #[test]
    fn kl_between_random_tables_is_nonnegative(
        p in table_strategy(vec![4, 3]),
        q in table_strategy(vec![4, 3]),
    ) {
        prop_assert!(p.kl(&q).unwrap() >= 0.0);
        prop_assert!(p.kl(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tiny_world_checks_hold(seed in 0u64..1000) {
        let world = TinyWorld::random(seed);
        let report = check_upper_bound(&world).unwrap();
        for check in report.checks(1e-9) {
            prop_assert!(check.passed, "{} failed with {}", check.name, check.value);
        }
    }
}

// ---------------------------------------------------------------------------
// Induced coarse world: a 4-bin, 4-latent analog of the model evaluated both
// through the functionals-style sums and through the exact world engine.
// ---------------------------------------------------------------------------

const CX: usize = 4; // coarse bins
const CZ: usize = 4; // coarse latents
const CT: usize = 3; // enumerable noise states

/// Coarse encoder of the model's form: q(z_i|x_j) ∝ exp[−(w_i m_i v_j − b_i)²].
fn coarse_encoder(w: &[f64; CZ], b: &[f64; CZ], mult: &[f64; CZ]) -> ConditionalTable {
    let mut probs = vec![0.0; CX * CZ];
    for j in 0..CX {
        let v = j as f64 / (CX - 1) as f64;
        let mut row = [0.0f64; CZ];
        let mut max = f64::NEG_INFINITY;
        for i in 0..CZ {
            let t = w[i] * mult[i] * v - b[i];
            row[i] = -(t * t);
            max = max.max(row[i]);
        }
        let total: f64 = row.iter().map(|s| (s - max).exp()).sum();
        for i in 0..CZ {
            probs[j * CZ + i] = (row[i] - max).exp() / total;
        }
    }
    ConditionalTable::new(CX, CZ, probs).unwrap()
}

fn build_coarse_world() -> (TinyWorld, [ConditionalTable; CT]) {
    // data process: full-support p(x, y) with Phi trivial
    let p_xy: [[f64; 2]; CX] = [
        [0.10, 0.05],
        [0.20, 0.07],
        [0.06, 0.22],
        [0.04, 0.26],
    ];
    let px: Vec<f64> = p_xy.iter().map(|r| r[0] + r[1]).collect();
    let y_rows: Vec<f64> = p_xy
        .iter()
        .flat_map(|r| {
            let total = r[0] + r[1];
            [r[0] / total, r[1] / total]
        })
        .collect();

    // three enumerable noise states for the encoder weights
    let w = [3.0, 2.5, 3.5, 2.8];
    let b = [0.2, 1.1, 2.1, 3.1];
    let multipliers: [[f64; CZ]; CT] = [
        [1.0; CZ],
        [0.8, 1.2, 0.9, 1.1],
        [1.3, 0.7, 1.15, 0.85],
    ];
    let encoders: [ConditionalTable; CT] = std::array::from_fn(|k| {
        coarse_encoder(&w, &b, &multipliers[k])
    });

    // z kernel rows indexed x·CT + θ
    let mut z_rows = Vec::with_capacity(CX * CT * CZ);
    for x in 0..CX {
        for enc in &encoders {
            z_rows.extend_from_slice(enc.row(x));
        }
    }

    // θ is pure parameter noise: independent of the training pair
    let theta_rows = vec![1.0 / CT as f64; CX * 2 * CT];

    let kernels = TinyWorldKernels {
        p_phi: vec![1.0],
        x_given_phi: ConditionalTable::new(1, CX, px.clone()).unwrap(),
        y_given_x_phi: ConditionalTable::new(CX, 2, y_rows).unwrap(),
        theta_given_data: ConditionalTable::new(CX * 2, CT, theta_rows).unwrap(),
        z_given_x_theta: ConditionalTable::new(CX * CT, CZ, z_rows).unwrap(),
    };

    // variational pieces of the same parametric shapes
    let q_z_weights = [0.4, 0.25, 0.2, 0.15];
    let q_z = CategoricalTable::new(
        vec![Variable::new("Z", CZ)],
        q_z_weights.to_vec(),
    )
    .unwrap();
    let mut dec_rows = Vec::with_capacity(CZ * CX);
    for i in 0..CZ {
        let mut row = [0.0f64; CX];
        for (j, slot) in row.iter_mut().enumerate() {
            let v = j as f64 / (CX - 1) as f64;
            let t = 2.2 * v - (0.3 + i as f64);
            *slot = (-(t * t)).exp();
        }
        let total: f64 = row.iter().sum();
        dec_rows.extend(row.iter().map(|x| x / total));
    }
    let mut cls_rows = Vec::with_capacity(CZ * 2);
    for i in 0..CZ {
        let zeta = i as f64 / (CZ - 1) as f64;
        let s0 = -((1.5 * zeta - 0.2f64).powi(2));
        let s1 = -((1.5 * zeta - 1.3f64).powi(2));
        let total = s0.exp() + s1.exp();
        cls_rows.push(s0.exp() / total);
        cls_rows.push(s1.exp() / total);
    }
    let variational = VariationalSet {
        q_theta: CategoricalTable::new(
            vec![Variable::new("Theta", CT)],
            vec![1.0 / CT as f64; CT],
        )
        .unwrap(),
        q_z,
        q_x_given_z: ConditionalTable::new(CZ, CX, dec_rows).unwrap(),
        q_y_given_z: ConditionalTable::new(CZ, 2, cls_rows).unwrap(),
    };

    let world = kernels.build(1, variational).unwrap();
    (world, encoders)
}

#[test]
fn coarse_world_rate_matches_functional_style_sum() {
    let (world, encoders) = build_coarse_world();
    let px = world.joint().marginalize(&["X1"]).unwrap();
    let q_z = world.variational().q_z.probs().to_vec();

    // functionals-style evaluation: average over θ of Σ_x p(x) KL(q(·|x,θ) ‖ q(z))
    let mut rate = 0.0;
    for enc in &encoders {
        for x in 0..CX {
            let mut kl = 0.0;
            for i in 0..CZ {
                let q = enc.get(x, i);
                if q > 0.0 {
                    kl += q * (q / q_z[i]).ln();
                }
            }
            rate += px.probs()[x] * kl / CT as f64;
        }
    }
    let world_rate = world.rate_functional(0).unwrap();
    assert!(
        (rate - world_rate).abs() < 1e-12,
        "functional-style {rate} vs world {world_rate}"
    );
}

#[test]
fn coarse_world_satisfies_the_pointwise_rate_distortion_bound() {
    let (world, _) = build_coarse_world();
    let report = check_upper_bound(&world).unwrap();
    for (i, &(lhs, rhs)) in report.pointwise.iter().enumerate() {
        assert!(
            lhs >= rhs - 1e-9,
            "pointwise bound {i}: R+D = {lhs} < {rhs}"
        );
    }
    for check in report.checks(1e-9) {
        assert!(check.passed, "{} failed: {}", check.name, check.value);
    }
}
