use glc_core::cascade::{batch_simulate, pool_measurements, CascadeModel, MeasurementSet, ModelKind};
use glc_core::diagnostics::{gram_matrix, hessian_concentration, lf_constants, re_estimate, ConcentrationConfig};
use glc_core::graph::{assign_weights, generate_watts_strogatz, p_to_theta};
use glc_core::seed;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

fn random_psd(dim: usize, rank: usize, seed_value: u64) -> DMatrix<f64> {
    let mut rng = seed::rng(seed_value);
    let b = DMatrix::from_fn(rank, dim, |_, _| rng.random_range(-1.0..1.0));
    b.transpose() * b
}

fn quotient(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let mut num = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            num += x[i] * a[(i, j)] * x[j];
        }
    }
    num / x.iter().map(|v| v * v).sum::<f64>()
}

fn in_cone(x: &[f64], support: &[usize]) -> bool {
    let (mut inside, mut outside) = (0.0, 0.0);
    for (k, v) in x.iter().enumerate() {
        if support.contains(&k) {
            inside += v.abs();
        } else {
            outside += v.abs();
        }
    }
    inside > 0.0 && outside <= 3.0 * inside + 1e-12
}

/// Minimum Rayleigh quotient over the cone by grids on the faces
/// `x_f = 1` of the ℓ∞ sphere, refined around the best cells.
fn cone_grid_oracle(a: &DMatrix<f64>, support: &[usize]) -> f64 {
    let dim = a.nrows();
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let coarse = 0.05;
    let steps = (2.0 / coarse) as i64;
    for face in 0..dim {
        let free: Vec<usize> = (0..dim).filter(|&k| k != face).collect();
        let mut idx = vec![0i64; free.len()];
        loop {
            let mut x = vec![0.0; dim];
            x[face] = 1.0;
            for (c, &k) in free.iter().enumerate() {
                x[k] = -1.0 + coarse * idx[c] as f64;
            }
            if in_cone(&x, support) {
                best.push((quotient(a, &x), x));
                if best.len() > 4000 {
                    best.sort_by(|p, q| p.0.total_cmp(&q.0));
                    best.truncate(40);
                }
            }
            let mut c = 0;
            while c < idx.len() {
                idx[c] += 1;
                if idx[c] <= steps {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == idx.len() {
                break;
            }
        }
    }
    best.sort_by(|p, q| p.0.total_cmp(&q.0));
    best.truncate(10);
    let mut value = best[0].0;
    for (_, start) in best {
        let mut center = start;
        let mut step = coarse / 5.0;
        for _ in 0..5 {
            let mut local_best = (quotient(a, &center), center.clone());
            let mut idx = vec![-4i64; dim];
            loop {
                let x: Vec<f64> = center.iter().zip(&idx).map(|(c, &d)| c + step * d as f64).collect();
                if in_cone(&x, support) {
                    let q = quotient(a, &x);
                    if q < local_best.0 {
                        local_best = (q, x);
                    }
                }
                let mut c = 0;
                while c < dim {
                    idx[c] += 1;
                    if idx[c] <= 4 {
                        break;
                    }
                    idx[c] = -4;
                    c += 1;
                }
                if c == dim {
                    break;
                }
            }
            center = local_best.1;
            value = value.min(local_best.0);
            step /= 10.0;
        }
    }
    value
}

#[test]
fn gram_matches_outer_product_sum() {
    let mut rng = seed::rng(4);
    let mut set = MeasurementSet::new(7, 8);
    for _ in 0..300 {
        let active: Vec<usize> = (0..8).filter(|_| rng.random::<f64>() < 0.35).collect();
        set.push(active, false);
    }
    let g = gram_matrix(&set).unwrap();
    let mut oracle = DMatrix::<f64>::zeros(8, 8);
    for meas in &set.measurements {
        let mut x = nalgebra::DVector::<f64>::zeros(8);
        for &k in &meas.active {
            x[k] = 1.0;
        }
        oracle += &x * x.transpose();
    }
    oracle /= set.len() as f64;
    assert!((&g - &oracle).amax() < 1e-14);
    assert_eq!(g, g.transpose());
    assert!(SymmetricEigen::new(g.clone()).eigenvalues.min() >= -1e-10);
    for k in 0..8 {
        let freq = set.measurements.iter().filter(|r| r.active.contains(&k)).count() as f64 / 300.0;
        assert!((g[(k, k)] - freq).abs() < 1e-15);
    }

    let mut ones = MeasurementSet::new(0, 3);
    ones.push(vec![0, 1, 2], true);
    ones.push(vec![0, 1, 2], false);
    assert_eq!(gram_matrix(&ones).unwrap(), DMatrix::from_element(3, 3, 1.0));
}

#[test]
fn sampled_cone_minimum_matches_grid_oracle() {
    for (case, rank) in [(0u64, 5usize), (1, 5), (2, 3), (3, 4)] {
        let a = random_psd(5, rank, 40 + case);
        let support = [1, 3];
        let est = re_estimate(&a, &support, 2000, case).unwrap();
        let oracle = cone_grid_oracle(&a, &support);
        assert!(est.gamma_sampled >= oracle - 1e-3, "case {case}: {} vs {oracle}", est.gamma_sampled);
        assert!(est.gamma_sampled <= oracle + 1e-3, "case {case}: {} vs {oracle}", est.gamma_sampled);
        assert!(est.gamma_sampled <= est.gamma_upper + 1e-9);
    }
}

#[test]
fn re_estimate_is_invariant_to_relabeling() {
    let a = random_psd(6, 6, 9);
    let perm = [4, 2, 0, 5, 1, 3];
    let p = DMatrix::from_fn(6, 6, |i, j| a[(perm[i], perm[j])]);
    // Support {0, 2} of `a` sits at positions where perm maps to 0 and 2.
    let support_a = [0, 2];
    let support_p: Vec<usize> = support_a
        .iter()
        .map(|&s| perm.iter().position(|&q| q == s).unwrap())
        .collect();
    let ra = re_estimate(&a, &support_a, 1000, 1).unwrap();
    let rp = re_estimate(&p, &support_p, 1000, 1).unwrap();
    assert!((ra.gamma_upper - rp.gamma_upper).abs() < 1e-12);
    assert!((ra.gamma_sampled - rp.gamma_sampled).abs() < 1e-6);
}

#[test]
fn lf_constants_match_per_sample_maximum() {
    let t = generate_watts_strogatz(20, 4, 0.1, 5).unwrap();
    let g = assign_weights(&t, ModelKind::Ic, 0.2, 0.7, 6).unwrap();
    let model = CascadeModel::ic();
    let traces = batch_simulate(&g, &model, 500, 0.1, 7).unwrap();
    let set = pool_measurements(&traces, 4, 20).unwrap();
    let theta = g.column(4).unwrap();
    let lf = lf_constants(&model, &set, &theta).unwrap();
    let mut max_first = 0.0f64;
    let mut max_second = 0.0f64;
    let mut used = 0;
    for meas in &set.measurements {
        let z: f64 = meas.active.iter().map(|&k| theta[k]).sum();
        if z <= 0.0 {
            continue;
        }
        used += 1;
        max_first = max_first.max(1.0 / z.exp_m1()).max(1.0);
        max_second = max_second.max(z.exp() / (z.exp_m1() * z.exp_m1()));
    }
    assert_eq!(lf.used, used);
    assert!((lf.max_first - max_first).abs() <= 1e-12 * max_first);
    assert!((lf.max_second - max_second).abs() <= 1e-10 * max_second);
    assert!(lf.max_first.is_finite() && lf.max_second.is_finite());
    // With every parent weight at least p = 0.2, (log f)' is at most
    // 1 / (e^z - 1) <= 1 / 0.25 at z >= log(1 / 0.8).
    assert!(lf.max_first <= 1.0 / (1.0 / 0.8 - 1.0) + 1e-12);

    let mut single = MeasurementSet::new(1, 2);
    single.push(vec![0], true);
    let z = p_to_theta(0.5).unwrap();
    let one = lf_constants(&model, &single, &[z, 0.0]).unwrap();
    assert!((one.max_first - 1.0).abs() < 1e-12);
}

#[test]
fn hessians_concentrate_at_large_n() {
    let t = generate_watts_strogatz(12, 4, 0.1, 11).unwrap();
    let g = assign_weights(&t, ModelKind::Ic, 0.2, 0.7, 12).unwrap();
    let config = ConcentrationConfig {
        n_grid: vec![100_000],
        trials: 3,
        p_init: 0.15,
        re_samples: 100,
        seed: 13,
    };
    let report = hessian_concentration(&g, &CascadeModel::ic(), 2, &config).unwrap();
    assert!(report.summary[0].median_max_dev < 0.01, "{:?}", report.summary);
}
