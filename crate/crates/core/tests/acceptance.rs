//! End-to-end acceptance suite. Each test covers one release criterion and
//! prints a single `[PASS]`/`[FAIL]` line; a failing criterion also fails
//! the test. Oracles here are computed independently of the library code
//! under test (dense inverses, explicit normal equations, brute-force
//! searches).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rbfcast::data::{FactorAr1Spec, RegimeFlipSpec};
use rbfcast::estimators::{ewrls_init, ewrls_step};
use rbfcast::evaluation::{
    accuracy, build_report, nmse, sign, two_sample_t_from_moments, wald_test_vs_one, TestOutcome,
};
use rbfcast::featsel::{forward_stepwise, select_features, vif, SelectionParams};
use rbfcast::pipeline::config::{DataSource, SyntheticKind};
use rbfcast::pipeline::{run_experiment, run_to_dir, ExperimentConfig, ForecastRecord};
use rbfcast::prototypes::{kmeans_fit, Prototype, PrototypeParams};
use rbfcast::rbfmap::rbf_activation;
use std::time::Instant;

fn criterion(name: &str, run: impl FnOnce() -> Result<(), String>) {
    let started = Instant::now();
    match run() {
        Ok(()) => println!("[PASS] {} ({:.2}s)", name, started.elapsed().as_secs_f64()),
        Err(msg) => {
            println!("[FAIL] {}: {}", name, msg);
            panic!("{}: {}", name, msg);
        }
    }
}

fn fail_if(cond: bool, msg: String) -> Result<(), String> {
    if cond { Err(msg) } else { Ok(()) }
}

// ---------------------------------------------------------------------------
// 1. Sequential estimator vs explicit weighted normal equations.
// ---------------------------------------------------------------------------
#[test]
fn criterion_01_ewrls_matches_batch_oracle() {
    criterion("ewrls equals weighted normal-equations oracle", || {
        let started = Instant::now();
        let delta = 1.0;
        for &tau in &[1.0, 0.99, 0.95] {
            for stream in 0..50u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + stream);
                let n = rng.gen_range(20..=200);
                let d = rng.gen_range(2..=8);
                let phis: Vec<DVector<f64>> = (0..n)
                    .map(|_| DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng)))
                    .collect();
                let ys: Vec<f64> =
                    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();

                let mut state = ewrls_init(d, delta, tau).map_err(|e| e.to_string())?;
                for (phi, &y) in phis.iter().zip(&ys) {
                    ewrls_step(&mut state, phi, y).map_err(|e| e.to_string())?;
                }

                // Oracle: (Σ τ^{n-i} φφᵀ + δτⁿ I) θ = Σ τ^{n-i} y φ, built
                // directly and solved by LU.
                let mut lhs = DMatrix::identity(d, d) * delta * tau.powi(n as i32);
                let mut rhs = DVector::zeros(d);
                for (i, (phi, &y)) in phis.iter().zip(&ys).enumerate() {
                    let w = tau.powi((n - 1 - i) as i32);
                    lhs += phi * phi.transpose() * w;
                    rhs += phi * (w * y);
                }
                let oracle = lhs.lu().solve(&rhs).ok_or("singular oracle system")?;
                for j in 0..d {
                    let rel = (state.theta[j] - oracle[j]).abs()
                        / oracle[j].abs().max(1e-300);
                    fail_if(
                        rel > 1e-8,
                        format!(
                            "tau={} stream={} coef {}: {} vs oracle {} (rel {:.2e})",
                            tau, stream, j, state.theta[j], oracle[j], rel
                        ),
                    )?;
                }
            }
        }
        fail_if(
            started.elapsed().as_secs_f64() >= 5.0,
            format!("took {:.2}s, budget 5s", started.elapsed().as_secs_f64()),
        )
    });
}

// ---------------------------------------------------------------------------
// 2. Gaussian kernel vs dense-inverse oracle.
// ---------------------------------------------------------------------------
#[test]
fn criterion_02_rbf_kernel_matches_dense_inverse_oracle() {
    criterion("rbf kernel equals dense-inverse oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for trial in 0..100 {
            let d = rng.gen_range(1..=6);
            let x: DVector<f64> = DVector::from_fn(d, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                2.0 * z
            });
            let mu: DVector<f64> =
                DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let a: DMatrix<f64> =
                DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
            let cov = &a * a.transpose() + DMatrix::<f64>::identity(d, d) * 0.5;

            let proto =
                Prototype::new(mu.clone(), cov.clone(), 1.0, 0.0).map_err(|e| e.to_string())?;
            let got = rbf_activation(&x, &proto).map_err(|e| e.to_string())?;

            let inv = cov.clone().try_inverse().ok_or("oracle inverse failed")?;
            let diff = &x - &mu;
            let want = (-0.5 * (diff.transpose() * inv * &diff)[(0, 0)]).exp();
            let rel = (got - want).abs() / want.abs().max(1e-300);
            fail_if(
                rel > 1e-10,
                format!("trial {}: {} vs oracle {} (rel {:.2e})", trial, got, want, rel),
            )?;
            fail_if(!(got > 0.0 && got <= 1.0), format!("trial {}: {} outside (0, 1]", trial, got))?;

            let at_mean = rbf_activation(&mu, &proto).map_err(|e| e.to_string())?;
            fail_if(at_mean != 1.0, format!("activation at the mean is {}", at_mean))?;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 3. Clustering: monotone inertia and two-blob recovery.
// ---------------------------------------------------------------------------
#[test]
fn criterion_03_kmeans_inertia_and_blob_recovery() {
    criterion("k-means inertia monotone and two-blob recovery", || {
        let params = PrototypeParams::default();
        // Monotone inertia on 20 seeded runs over mixed data.
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(30 + seed);
            let rows: Vec<DVector<f64>> = (0..300)
                .map(|_| DVector::from_fn(3, |_, _| StandardNormal.sample(&mut rng)))
                .collect();
            let fit = kmeans_fit(&rows, 5, seed, 100, 1e-10, params).map_err(|e| e.to_string())?;
            for w in fit.inertia_path.windows(2) {
                fail_if(
                    w[1] > w[0] + 1e-9,
                    format!("seed {}: inertia rose {} -> {}", seed, w[0], w[1]),
                )?;
            }
        }

        // Two blobs at distance 10 with unit noise; centers recovered
        // within 0.1 on at least 19/20 seeds.
        let mut hits = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(60 + seed);
            let mut rows = Vec::with_capacity(500);
            let mut blob_means = vec![DVector::zeros(2), DVector::zeros(2)];
            for i in 0..500 {
                let blob = i % 2;
                let c = if blob == 0 { 0.0 } else { 10.0 };
                let row = DVector::from_fn(2, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    c + z
                });
                blob_means[blob] += &row;
                rows.push(row);
            }
            for m in blob_means.iter_mut() {
                *m /= 250.0;
            }
            let fit = kmeans_fit(&rows, 2, seed, 100, 1e-10, params).map_err(|e| e.to_string())?;
            let mut centers: Vec<&DVector<f64>> =
                fit.set.prototypes.iter().map(|p| &p.mean).collect();
            centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
            // Recovery oracle: each fitted center within 0.1 of the
            // empirical mean of its generating blob.
            if (centers[0] - &blob_means[0]).norm() < 0.1
                && (centers[1] - &blob_means[1]).norm() < 0.1
            {
                hits += 1;
            }
        }
        fail_if(hits < 19, format!("blob recovery on only {}/20 seeds", hits))
    });
}

// ---------------------------------------------------------------------------
// 4. Feature selection: VIF oracle, first-pick oracle, admission bound.
// ---------------------------------------------------------------------------
fn ols_r2_oracle(x: &DMatrix<f64>, cols: &[usize], y: &DVector<f64>) -> f64 {
    let n = x.nrows();
    let m = cols.len();
    let mut design = DMatrix::from_element(n, m + 1, 1.0);
    for (j, &c) in cols.iter().enumerate() {
        for i in 0..n {
            design[(i, j + 1)] = x[(i, c)];
        }
    }
    let gram = design.transpose() * &design;
    let beta = match gram.lu().solve(&(design.transpose() * y)) {
        Some(b) => b,
        None => return 0.0,
    };
    let resid = y - design * beta;
    let y_mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    1.0 - resid.norm_squared() / sst
}

#[test]
fn criterion_04_feature_selection_oracles() {
    criterion("feature selection matches vif and first-pick oracles", || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..50u64 {
            let n = rng.gen_range(60..150);
            let d = rng.gen_range(3..8);
            let x: DMatrix<f64> =
                DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng));
            let weights: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: DVector<f64> = DVector::from_fn(n, |i, _| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                (0..d).map(|j| weights[j] * x[(i, j)]).sum::<f64>() + noise
            });

            // VIF oracle: regress each column on the rest and invert 1-R².
            let vifs = vif(&x).map_err(|e| e.to_string())?;
            for j in 0..d {
                let others: Vec<usize> = (0..d).filter(|&c| c != j).collect();
                let xj = DVector::from_fn(n, |i, _| x[(i, j)]);
                let want = 1.0 / (1.0 - ols_r2_oracle(&x, &others, &xj));
                fail_if(
                    (vifs[j] - want).abs() > 1e-8,
                    format!("trial {} vif[{}]: {} vs oracle {}", trial, j, vifs[j], want),
                )?;
            }

            // First stepwise pick equals the exhaustive single-feature R²
            // maximizer.
            let sel = forward_stepwise(&x, &y, 1, 0.0).map_err(|e| e.to_string())?;
            let best = (0..d)
                .max_by(|&a, &b| {
                    ols_r2_oracle(&x, &[a], &y)
                        .partial_cmp(&ols_r2_oracle(&x, &[b], &y))
                        .unwrap()
                })
                .unwrap();
            fail_if(
                sel.ordered_features.first() != Some(&best),
                format!("trial {}: first pick {:?} vs oracle {}", trial, sel.ordered_features, best),
            )?;

            // Every retained feature respects the VIF admission bound.
            let params = SelectionParams::default();
            let full = select_features(&x, &y, &params).map_err(|e| e.to_string())?;
            for (f, v) in full.ordered_features.iter().zip(&full.vifs) {
                fail_if(
                    *v > params.vif_threshold + 1e-9,
                    format!("trial {}: retained feature {} has vif {}", trial, f, v),
                )?;
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 5. Metric identities.
// ---------------------------------------------------------------------------
#[test]
fn criterion_05_metric_identities() {
    criterion("metric identities (baseline nmse, perfect accuracy, sign)", || {
        // Baseline normalized against itself is exactly 1 in every cell.
        let mut cfg = ExperimentConfig::default();
        cfg.models = vec!["rw".into()];
        cfg.horizons = vec![1, 7];
        cfg.data.synthetic.jump_diffusion.n = 201;
        cfg.data.synthetic.jump_diffusion.instruments = 3;
        let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
        fail_if(out.report.cells.is_empty(), "no cells produced".into())?;
        for cell in &out.report.cells {
            fail_if(
                cell.nmse != Some(1.0),
                format!("rw cell {}/{} nmse {:?} != 1", cell.target_id, cell.horizon, cell.nmse),
            )?;
        }

        // A perfect forecaster has accuracy exactly 1.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let perfect: Vec<ForecastRecord> = (0..200)
            .map(|t| {
                let y: f64 = StandardNormal.sample(&mut rng);
                ForecastRecord {
                    target_id: "x".into(),
                    model_id: "oracle".into(),
                    horizon: 1,
                    time_index: t,
                    y_hat: y,
                    y_realized: Some(y),
                }
            })
            .collect();
        let refs: Vec<&ForecastRecord> = perfect.iter().collect();
        fail_if(
            accuracy(&refs) != Some(1.0),
            format!("perfect forecaster accuracy {:?}", accuracy(&refs)),
        )?;

        // Three-valued sign and the nmse ratio definition.
        fail_if(sign(3.2) != 1, "sign(3.2) != 1".into())?;
        fail_if(sign(0.0) != 0, "sign(0) != 0".into())?;
        fail_if(sign(-0.1) != -1, "sign(-0.1) != -1".into())?;
        fail_if(nmse(Some(0.5), Some(2.0)) != Some(0.25), "nmse ratio broken".into())
    });
}

// ---------------------------------------------------------------------------
// 6. Statistical tests: Monte Carlo size, formula oracle, worked example.
// ---------------------------------------------------------------------------
#[test]
fn criterion_06_statistical_tests() {
    criterion("statistical tests (wald size, t oracle, accuracy example)", || {
        // Size of the Wald test under H0 (mean exactly 1).
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rejections = 0;
        let trials = 1000;
        for _ in 0..trials {
            let sample: Vec<f64> = (0..200)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    1.0 + 0.3 * z
                })
                .collect();
            if wald_test_vs_one(&sample).significant_at(0.05) {
                rejections += 1;
            }
        }
        let size = rejections as f64 / trials as f64;
        fail_if(
            !(0.03..=0.07).contains(&size),
            format!("wald empirical size {} outside 5% +/- 2%", size),
        )?;

        // Welch statistic against the textbook formula, computed inline.
        let (ma, va, na) = (0.8, 0.09, 40usize);
        let (mb, vb, nb) = (1.05, 0.16, 55usize);
        let got = two_sample_t_from_moments(ma, va, na, mb, vb, nb, false);
        let se2 = va / na as f64 + vb / nb as f64;
        let want = (ma - mb) / se2.sqrt();
        match got {
            TestOutcome::Computed { statistic, .. } => fail_if(
                (statistic - want).abs() > 1e-10,
                format!("welch statistic {} vs oracle {}", statistic, want),
            )?,
            TestOutcome::Degenerate => return Err("welch test degenerate".into()),
        }

        // A 54.7% directional accuracy on 3000 trials is significantly
        // better than a fair coin.
        let (p1, p0, n) = (0.547, 0.5, 3000usize);
        let cmp =
            two_sample_t_from_moments(p1, p1 * (1.0 - p1), n, p0, p0 * (1.0 - p0), n, false);
        fail_if(
            !cmp.significant_at(0.05),
            format!("accuracy comparison not significant: {:?}", cmp),
        )
    });
}

// ---------------------------------------------------------------------------
// 7. Adaptive models beat the random walk on autocorrelated panels.
// ---------------------------------------------------------------------------
#[test]
fn criterion_07_adaptive_models_beat_random_walk_on_ar1() {
    criterion("adaptive models beat random walk on ar(1) factor panels", || {
        let started = Instant::now();
        let horizons = vec![1usize, 2, 5];
        let mut sums: std::collections::HashMap<(String, usize), (f64, usize)> =
            std::collections::HashMap::new();
        for seed in 0..10u64 {
            let mut cfg = ExperimentConfig::default();
            cfg.seed = seed;
            cfg.models = vec!["rw".into(), "ewrls".into(), "rbfnet".into()];
            cfg.horizons = horizons.clone();
            cfg.data.synthetic.kind = SyntheticKind::FactorAr1;
            cfg.data.synthetic.factor_ar1 = FactorAr1Spec {
                n: 1301,
                instruments: 10,
                seed,
                ..Default::default()
            };
            let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
            fail_if(
                !out.failed_cells.is_empty(),
                format!("seed {}: failed cells {:?}", seed, out.failed_cells),
            )?;
            for cell in &out.report.cells {
                if cell.model_id == "rw" {
                    continue;
                }
                let v = cell
                    .nmse
                    .ok_or(format!("seed {}: missing nmse in {:?}", seed, cell))?;
                let e = sums.entry((cell.model_id.clone(), cell.horizon)).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        for model in ["ewrls", "rbfnet"] {
            for &h in &horizons {
                let (total, count) = sums[&(model.to_string(), h)];
                let mean = total / count as f64;
                println!("  mean nmse {} h={}: {:.4} ({} cells)", model, h, mean, count);
                fail_if(
                    mean >= 1.0,
                    format!("{} h={} mean nmse {:.4} >= 1", model, h, mean),
                )?;
            }
        }
        fail_if(
            started.elapsed().as_secs_f64() >= 60.0,
            format!("took {:.1}s, budget 60s", started.elapsed().as_secs_f64()),
        )
    });
}

// ---------------------------------------------------------------------------
// 8. Online estimation beats a frozen fit once the relationship flips.
// ---------------------------------------------------------------------------
#[test]
fn criterion_08_online_beats_frozen_under_drift() {
    criterion("online ewrls beats frozen ridge after a coefficient flip", || {
        let mut wins = 0;
        for seed in 0..10u64 {
            let mut cfg = ExperimentConfig::default();
            cfg.seed = seed;
            cfg.models = vec!["rw".into(), "ridge".into(), "ewrls".into()];
            cfg.horizons = vec![1];
            cfg.data.synthetic.kind = SyntheticKind::RegimeFlip;
            cfg.data.synthetic.regime_flip = RegimeFlipSpec { seed, ..Default::default() };
            let flip_at = cfg.data.synthetic.regime_flip.flip_at;
            let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let post_mse = |model: &str| -> Option<f64> {
                let mut sum = 0.0;
                let mut count = 0usize;
                for r in &out.records {
                    if r.model_id == model && r.target_id == "target" && r.time_index >= flip_at {
                        if let Some(y) = r.y_realized {
                            sum += (y - r.y_hat).powi(2);
                            count += 1;
                        }
                    }
                }
                (count > 0).then(|| sum / count as f64)
            };
            let (e, r) = (post_mse("ewrls"), post_mse("ridge"));
            let (e, r) = (e.ok_or("no ewrls records")?, r.ok_or("no ridge records")?);
            println!("  seed {}: post-flip mse ewrls {:.3e} ridge {:.3e}", seed, e, r);
            if e < r {
                wins += 1;
            }
        }
        fail_if(wins < 9, format!("ewrls won on only {}/10 seeds", wins))
    });
}

// ---------------------------------------------------------------------------
// 9. Determinism of the full artifact set.
// ---------------------------------------------------------------------------
#[test]
fn criterion_09_identical_seed_gives_identical_reports() {
    criterion("same config and seed give byte-identical reports", || {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 9;
        cfg.horizons = vec![1, 4];
        cfg.data.synthetic.jump_diffusion.n = 301;
        cfg.data.synthetic.jump_diffusion.instruments = 4;
        cfg.save_checkpoints = true;
        let dir_a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let dir_b = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_to_dir(&cfg, dir_a.path()).map_err(|e| e.to_string())?;
        run_to_dir(&cfg, dir_b.path()).map_err(|e| e.to_string())?;
        let files = [
            "config_effective.toml",
            "forecasts.csv",
            "summary_nmse.csv",
            "summary_accuracy.csv",
            "nmse_by_horizon.csv",
            "pairwise_tests.csv",
            "selections.txt",
        ];
        for f in files {
            let a = std::fs::read(dir_a.path().join(f)).map_err(|e| format!("{}: {}", f, e))?;
            let b = std::fs::read(dir_b.path().join(f)).map_err(|e| format!("{}: {}", f, e))?;
            fail_if(a != b, format!("{} differs between identical runs", f))?;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 10. Full-experiment smoke test with complete per-cell counts.
// ---------------------------------------------------------------------------
#[test]
fn criterion_10_full_experiment_smoke() {
    criterion("full experiment completes with complete per-cell counts", || {
        let started = Instant::now();
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.data.source, DataSource::Synthetic);
        assert_eq!(cfg.horizons.len(), 30);
        assert_eq!(cfg.models.len(), 4);
        let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
        fail_if(
            !out.failed_cells.is_empty(),
            format!("failed cells: {:?}", out.failed_cells),
        )?;
        fail_if(
            out.instruments.len() != 10,
            format!("expected 10 targets, got {}", out.instruments.len()),
        )?;
        let expected_cells = 10 * 4 * 30;
        fail_if(
            out.report.cells.len() != expected_cells,
            format!("expected {} cells, got {}", expected_cells, out.report.cells.len()),
        )?;
        let test_len = out.n_returns - out.boundary;
        for cell in &out.report.cells {
            fail_if(
                cell.count != test_len - cell.horizon,
                format!(
                    "cell {}/{}/h{} resolved {} of {}",
                    cell.target_id,
                    cell.model_id,
                    cell.horizon,
                    cell.count,
                    test_len - cell.horizon
                ),
            )?;
        }
        // Aggregates are well-defined for every model.
        for summary in &out.report.summaries {
            fail_if(
                summary.nmse.is_none(),
                format!("model {} has no nmse summary", summary.model_id),
            )?;
        }
        let elapsed = started.elapsed().as_secs_f64();
        fail_if(elapsed >= 300.0, format!("took {:.1}s, budget 300s", elapsed))?;
        let report_check = build_report(&out.records, "rw");
        fail_if(
            report_check.cells.len() != out.report.cells.len(),
            "report rebuild from records disagrees".into(),
        )
    });
}
