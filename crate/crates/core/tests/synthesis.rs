use anisotex_core::stats::{jarque_bera, mean};
use anisotex_core::synth::anif::{read_anif, write_anif};
use anisotex_core::synth::montecarlo::{monte_carlo_scaling_check, pooled_increment_variance};
use anisotex_core::synth::oracle::variogram_oracle;
use anisotex_core::synth::{map_realizations, spectral_grid, synthesize, synthesize_with, SynthOptions};
use anisotex_core::{matrix_power, FieldSpec};

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn oracle_scaling_identity() {
    let spec = FieldSpec::new(0.6, 0.4, 256, 0).unwrap();
    let x = [0.25, 0.25];
    let m = matrix_power(&spec.anisotropy, 2.0).unwrap();
    let ax = [m[0][0] * x[0], m[1][1] * x[1]];
    let lhs = variogram_oracle(&spec, ax).unwrap();
    let rhs = 2f64.powf(0.8) * variogram_oracle(&spec, x).unwrap();
    assert!(rel(lhs, rhs) < 1e-3, "{lhs} vs {rhs}");
}

#[test]
fn isotropic_oracle_is_a_power_of_the_norm() {
    let spec = FieldSpec::new(1.0, 0.5, 256, 0).unwrap();
    let c = variogram_oracle(&spec, [1.0, 0.0]).unwrap();
    let v = variogram_oracle(&spec, [0.5, 0.0]).unwrap();
    assert!(rel(v, c * 0.5) < 1e-6);
    // rotation invariance of the isotropic gauge is not exact (|xi1| + |xi2|
    // is not Euclidean) but the diagonal must still scale with degree 1
    let d1 = variogram_oracle(&spec, [0.1, 0.1]).unwrap();
    let d2 = variogram_oracle(&spec, [0.3, 0.3]).unwrap();
    assert!(rel(d2, 3.0 * d1) < 1e-6);
}

#[test]
fn lattice_variance_tracks_the_oracle() {
    // Exact second moments of the discrete synthesizer against the continuous model.
    let spec = FieldSpec::new(0.6, 0.4, 256, 0).unwrap();
    let grid = spectral_grid(&spec).unwrap();
    // Long lags along the smooth axis carry the largest low-frequency bias.
    for (i, j, tol) in [
        (51, 26, 0.05),
        (26, 77, 0.05),
        (64, 64, 0.05),
        (13, 13, 0.05),
        (77, 13, 0.10),
    ] {
        let x = [i as f64 / 256.0, j as f64 / 256.0];
        let r = grid.lattice_variogram(i, j) / variogram_oracle(&spec, x).unwrap();
        assert!((r - 1.0).abs() < tol, "lattice/oracle = {r} at {x:?}");
    }
}

#[test]
fn isotropic_sample_variance_matches_oracle() {
    let spec = FieldSpec::new(1.0, 0.5, 256, 4000).unwrap();
    let v = map_realizations(&spec, 200, |f| pooled_increment_variance(f, (128, 128))).unwrap();
    let target = variogram_oracle(&spec, [0.5, 0.5]).unwrap();
    assert!(rel(mean(&v), target) < 0.10, "{} vs {target}", mean(&v));
}

#[test]
fn scaling_ratios_hit_their_targets() {
    let cases = [(0.6, 0.4, 2.0, [0.2, 0.1]), (1.0, 0.5, 4.0, [0.1, 0.1])];
    for (alpha0, hurst, a, x) in cases {
        let spec = FieldSpec::new(alpha0, hurst, 256, 11).unwrap();
        let r = monte_carlo_scaling_check(&spec, a, x, 200).unwrap();
        assert!(rel(r.ratio, r.target) < 0.10, "{r:?}");
        assert!(
            r.ci_halfwidth > 0.0 && (r.ratio - r.target).abs() < r.ci_halfwidth,
            "{r:?}"
        );
    }
}

#[test]
fn pointwise_values_are_gaussian() {
    let spec = FieldSpec::new(0.6, 0.4, 64, 9000).unwrap();
    let v = map_realizations(&spec, 500, |f| f.at(32, 20)).unwrap();
    // chi-squared(2) quantile at 0.99
    assert!(jarque_bera(&v) < 9.21, "JB = {}", jarque_bera(&v));
}

#[test]
fn increments_are_translation_invariant() {
    let n = 256;
    let spec = FieldSpec::new(0.6, 0.4, n, 500).unwrap();
    let h = (8usize, 4usize);
    // four disjoint interior windows of 64 x 64 base points
    let corners = [(32usize, 32usize), (32, 128), (128, 32), (128, 128)];
    let per = map_realizations(&spec, 200, |f| {
        corners.map(|(i0, j0)| {
            let mut acc = 0.0;
            for i in i0..i0 + 64 {
                for j in j0..j0 + 64 {
                    let d = f.at(i + h.0, j + h.1) - f.at(i, j);
                    acc += d * d;
                }
            }
            acc / 4096.0
        })
    })
    .unwrap();
    let means: Vec<f64> = (0..4)
        .map(|k| mean(&per.iter().map(|w| w[k]).collect::<Vec<_>>()))
        .collect();
    let all = mean(&means);
    for m in means {
        assert!(rel(m, all) < 0.10, "window mean {m} vs {all}");
    }
}

#[test]
fn origin_residue_and_determinism() {
    let spec = FieldSpec::new(1.4, 0.5, 128, 42).unwrap();
    let (a, diag) = synthesize_with(&spec, SynthOptions::default()).unwrap();
    let b = synthesize(&spec).unwrap();
    assert_eq!(a.values[0], 0.0);
    assert!(diag.imag_residue < 1e-9);
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    let c = synthesize(&spec.with_seed(43)).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn inadmissible_hurst_is_rejected_up_front() {
    let err = FieldSpec::new(0.6, 0.7, 256, 0).unwrap_err();
    assert!(err.to_string().contains("min(0.6, 1.4)"), "{err}");
    assert!(err.is_usage());
}

#[test]
fn anif_file_round_trip() {
    let spec = FieldSpec::new(0.6, 0.4, 64, 5).unwrap();
    let f = synthesize(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.anif");
    write_anif(&mut std::fs::File::create(&path).unwrap(), &f).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"ANIF");
    let g = read_anif(&mut bytes.as_slice()).unwrap();
    assert_eq!(f, g);
    assert!(read_anif(&mut &bytes[..bytes.len() - 3]).is_err());
}
