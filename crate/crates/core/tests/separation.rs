use heading_bss::evaluation::pearson;
use heading_bss::separation::{deflate, project_source};
use heading_bss::simgen::{generate_gaussian_sources, generate_shifted_uniform_sources, mix};
use heading_bss::*;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Unit directions of each source inside the whitened space: `W A[:, j]`.
fn true_directions(w: &WhitenedData, mixing: &MixingMatrix) -> Vec<Vec<f64>> {
    let n = w.transform.len();
    (0..mixing.cols())
        .map(|j| {
            let d: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|k| w.transform[i][k] * mixing.get(k, j)).sum())
                .collect();
            let len = norm(&d);
            d.into_iter().map(|x| x / len).collect()
        })
        .collect()
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs();
    // Robust for tiny angles: |a - b| or |a + b|.
    let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let s = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum::<f64>().sqrt();
    if c > 0.5 {
        2.0 * (d.min(s) / 2.0).asin()
    } else {
        c.acos()
    }
}

fn check_perfect_sparsity(sources: &SignalMatrix, mixing: &MixingMatrix, params: &MethodParams) {
    let z = mix(sources, mixing).unwrap();
    let r = separate(&z, params).unwrap();
    let truth = true_directions(&r.whitened, mixing);
    for d in &r.directions {
        let best = truth
            .iter()
            .map(|t| angle(&d.unit_vector, t))
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "{:?}: direction off by {best} rad", params.method);
    }
}

#[test]
fn example1_clean_reconstruction() {
    let sc = Scenario::example1(0.0).unwrap();
    for params in [MethodParams::global(0.4).unwrap(), MethodParams::mhc(0.8).unwrap()] {
        let r = separate(sc.clean_mixtures(), &params).unwrap();
        let ev = evaluate(&sc.sources, &r.estimates, Normalization::Rms).unwrap();
        for c in &ev.association.correlations {
            assert!(c.abs() >= 0.999, "{:?}: correlation {c}", params.method);
        }
        for m in &ev.metrics {
            assert!(m.max < 1e-6);
        }
    }
}

#[test]
fn perfect_sparsity_example1() {
    let sc = Scenario::example1(0.0).unwrap();
    for params in [MethodParams::global(0.4).unwrap(), MethodParams::mhc(0.8).unwrap()] {
        check_perfect_sparsity(&sc.sources, &sc.mixing, &params);
    }
}

#[test]
fn perfect_sparsity_three_pulses() {
    let specs = [
        GaussianSourceSpec { amplitude: 1.0, center_s: 0.05, width_s: 0.008 },
        GaussianSourceSpec { amplitude: -0.4, center_s: 0.15, width_s: 0.005 },
        GaussianSourceSpec { amplitude: 0.7, center_s: 0.25, width_s: 0.011 },
    ];
    let s = generate_gaussian_sources(&specs, 250.0, 0.32).unwrap();
    let a = MixingMatrix::from_rows(vec![
        vec![0.9, 0.3, -0.5],
        vec![-0.2, 1.1, 0.4],
        vec![0.6, -0.7, 1.2],
    ])
    .unwrap();
    // Few accepted headings make 1/M coarse, so the tolerance is tightened.
    let global = MethodParams::new(Method::Global, 0.3, 0.2).unwrap();
    for params in [global, MethodParams::mhc(0.5).unwrap()] {
        check_perfect_sparsity(&s, &a, &params);
    }
}

#[test]
fn perfect_sparsity_disjoint_uniform() {
    // Full shift: source 1 then source 2, never simultaneously active, except
    // that one velocity straddles the hand-over sample.
    let s = generate_shifted_uniform_sources(100, 100, 11).unwrap();
    let a = MixingMatrix::from_rows(simgen::section2_mixing()).unwrap();
    check_perfect_sparsity(&s, &a, &MethodParams::global(0.05).unwrap());
}

#[test]
fn deflation_and_energy_bookkeeping() {
    let sc = Scenario::example1(0.005).unwrap();
    for seed in 0..20 {
        let z = sc.noisy_mixtures(seed).unwrap();
        for params in [MethodParams::global(0.3).unwrap(), MethodParams::mhc(0.6).unwrap()] {
            let Ok(r) = separate(&z, &params) else { continue };
            let e = &r.whitened.components;

            // Replay the deflation chain and check orthogonality at each step.
            let mut data = e.clone();
            for (k, d) in r.directions.iter().enumerate() {
                let s = project_source(&data, d).unwrap();
                assert_eq!(s, r.estimates.row(k));
                data = deflate(&data, d, &s).unwrap();
                for t in 0..data.samples() {
                    let x = data.sample_vector(t);
                    for prev in &r.directions[..=k] {
                        let dot: f64 = x.iter().zip(&prev.unit_vector).map(|(a, b)| a * b).sum();
                        assert!(dot.abs() < 1e-10);
                    }
                }
            }
            assert_eq!(data, r.residual);

            let extracted: f64 = r.estimates.energy();
            let total = e.energy();
            assert!((total - extracted - r.residual.energy()).abs() <= 1e-8 * total);

            for (i, a) in r.directions.iter().enumerate() {
                assert!((norm(&a.unit_vector) - 1.0).abs() < 1e-12);
                for b in &r.directions[..i] {
                    let dot: f64 = a.unit_vector.iter().zip(&b.unit_vector).map(|(x, y)| x * y).sum();
                    assert!(dot.abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn common_positive_scale_leaves_directions_unchanged() {
    let sc = Scenario::example1(0.005).unwrap();
    for seed in 0..10 {
        let z = sc.noisy_mixtures(seed).unwrap();
        let scaled = SignalMatrix::from_rows(
            z.to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(|v| v * 37.5).collect())
                .collect(),
        )
        .unwrap();
        for params in [MethodParams::global(0.35).unwrap(), MethodParams::mhc(0.7).unwrap()] {
            match (separate(&z, &params), separate(&scaled, &params)) {
                (Ok(a), Ok(b)) => {
                    // Directions are defined up to sign once the residual is one-dimensional.
                    for (x, y) in a.directions.iter().zip(&b.directions) {
                        let same: f64 = x.unit_vector.iter().zip(&y.unit_vector).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                        let flip: f64 = x.unit_vector.iter().zip(&y.unit_vector).map(|(p, q)| (p + q).abs()).fold(0.0, f64::max);
                        assert!(same.min(flip) < 1e-10, "seed {seed}: {same} {flip}");
                    }
                }
                (Err(a), Err(b)) => assert_eq!(a, b),
                (a, b) => panic!("outcome changed under scaling: {:?} / {:?}", a.err(), b.err()),
            }
        }
    }
}

#[test]
fn estimates_track_sources_under_light_noise() {
    let sc = Scenario::example1(0.001).unwrap();
    let r = separate(&sc.noisy_mixtures(3).unwrap(), &MethodParams::global(0.4).unwrap()).unwrap();
    let assoc = associate(&sc.sources, &r.estimates).unwrap();
    for (row, c) in assoc.correlations.iter().enumerate() {
        assert!(c.abs() > 0.99, "source {row}: {c}");
        let est = r.estimates.row(assoc.permutation[row]);
        assert!((pearson(sc.sources.row(row), est) - c).abs() < 1e-15);
    }
}

#[test]
fn cluster_failure_is_reported_with_iteration() {
    // Two channels whose only non-zero step is a single sample: one accepted
    // heading, which cannot be sorted into a run.
    let mut a = vec![0.0; 12];
    let mut b = vec![0.0; 12];
    a[5] = 1.0;
    b[5] = 0.5;
    b[6] = 0.25;
    let z = SignalMatrix::from_rows(vec![a, b]).unwrap();
    match separate(&z, &MethodParams::global(0.99).unwrap()) {
        Err(BssError::ClusterFormationFailed { iteration, .. }) => assert_eq!(iteration, 1),
        other => panic!("expected cluster failure, got {other:?}"),
    }
}

#[test]
fn rank_deficient_mixtures_rejected() {
    let s = SignalMatrix::from_rows(vec![vec![0.0, 1.0, 3.0, 2.0, 0.0, 0.5]]).unwrap();
    let a = MixingMatrix::from_rows(vec![vec![1.0], vec![2.0]]).unwrap();
    let z = mix(&s, &a).unwrap();
    assert_eq!(
        separate(&z, &MethodParams::global(0.4).unwrap()).err(),
        Some(BssError::RankDeficient { channel: 1 })
    );
}
