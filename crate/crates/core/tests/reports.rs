use proptest::prelude::*;
use rand::Rng;
use smirnov_core::multiindex::layer_size;
use smirnov_core::suite::{run_suite, RunConfig};
use smirnov_core::{sphere, Complex64, TruncatedSeries};

#[test]
fn suite_report_is_deterministic() {
    let cfg = RunConfig {
        filter: vec!["norms".into(), "pairing".into()],
        ..Default::default()
    };
    let a = run_suite(&cfg).unwrap().to_json();
    let b = run_suite(&cfg).unwrap().to_json();
    assert_eq!(a, b);
    let other = RunConfig { seed: cfg.seed + 1, ..cfg };
    assert_ne!(a, run_suite(&other).unwrap().to_json());
}

#[test]
fn suite_aggregates_failures() {
    let cfg = RunConfig {
        filter: vec!["omega".into(), "von_neumann".into(), "disk".into()],
        tolerance_scale: 0.0,
        ..Default::default()
    };
    let rep = run_suite(&cfg).unwrap();
    // every selected check runs even though the first one fails
    assert_eq!(rep.checks.len(), 3);
    assert!(rep.checks.iter().all(|c| !c.assertions.is_empty()));
    assert!(!rep.all_passed);
}

#[test]
fn report_file_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let mut cfg = RunConfig {
        filter: vec!["4".into()],
        ..Default::default()
    };
    cfg.output.report = Some(path.clone());
    let rep = run_suite(&cfg).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.trim_end(), rep.to_json());
    assert!(rep.all_passed);
}

fn random_series(d: usize, n: usize, seed: u64, density: f64) -> TruncatedSeries {
    let mut rng = sphere::rng(seed);
    let layers = (0..=n)
        .map(|k| {
            (0..layer_size(d, k))
                .map(|_| {
                    if rng.random::<f64>() < density {
                        // raw bit patterns exercise the shortest round-trip formatting
                        Complex64::new(f64::from_bits(rng.random::<u64>() >> 2), -rng.random::<f64>() * 1e-300)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    TruncatedSeries::from_layers(d, layers).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn series_json_round_trip(seed in 0u64..100_000, d in 1usize..4, n in 0usize..8, density in 0.0f64..1.0) {
        let s = random_series(d, n, seed, density);
        let back = TruncatedSeries::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back.dim(), s.dim());
        prop_assert_eq!(back.degree(), s.degree());
        for k in 0..=n {
            for (a, b) in s.layer(k).iter().zip(back.layer(k)) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
