//! Scratch robustness sweep over many seeds (not part of the test suite).

use waring::cli::{generate_instance, run_instance, Algo, GeneratorKind, GeneratorSpec, RunConfig};

fn main() {
    let mut failures = 0;
    let mut total = 0;

    // Exact regime, random instances.
    for &(n, m, d) in &[(3usize, 2usize, 4u32), (3, 3, 6)] {
        let mut bad = 0;
        for seed in 100..160u64 {
            let spec = GeneratorSpec {
                kind: GeneratorKind::RandomSphere,
                n,
                m,
                weight_range: Some((0.5, 2.0)),
                min_kappa: Some(0.5),
            };
            let mu = generate_instance(&spec, seed).unwrap();
            let cfg = RunConfig {
                d: Some(d),
                algo: Some(Algo::VExact),
                seed: Some(seed),
                ..Default::default()
            };
            total += 1;
            match run_instance(&mu, &cfg) {
                Ok(res)
                    if res.components.len() == m
                        && res.forward_err <= 1e-3
                        && res.weight_err.unwrap_or(1.0) <= 1e-2 => {}
                Ok(res) => {
                    bad += 1;
                    eprintln!(
                        "v_exact n={n} m={m} d={d} seed={seed}: comps {} fwd {:.2e} warn {:?}",
                        res.components.len(),
                        res.forward_err,
                        res.warnings
                    );
                }
                Err(e) => {
                    bad += 1;
                    eprintln!("v_exact n={n} m={m} d={d} seed={seed}: ERROR {e}");
                }
            }
        }
        failures += bad;
        eprintln!("v_exact n={n} m={m} d={d}: {bad}/60 failures");
    }

    // Tensor variant.
    let mut bad = 0;
    for seed in 100..140u64 {
        let spec = GeneratorSpec {
            kind: GeneratorKind::RandomSphere,
            n: 3,
            m: 2,
            weight_range: None,
            min_kappa: Some(0.5),
        };
        let mu = generate_instance(&spec, seed).unwrap();
        let cfg = RunConfig {
            d: Some(4),
            algo: Some(Algo::VTensor),
            seed: Some(seed),
            ..Default::default()
        };
        total += 1;
        match run_instance(&mu, &cfg) {
            Ok(res) if res.components.len() == 2 && res.forward_err <= 1e-3 => {}
            Ok(res) => {
                bad += 1;
                eprintln!(
                    "v_tensor seed={seed}: comps {} fwd {:.2e} warn {:?}",
                    res.components.len(),
                    res.forward_err,
                    res.warnings
                );
            }
            Err(e) => {
                bad += 1;
                eprintln!("v_tensor seed={seed}: ERROR {e}");
            }
        }
    }
    failures += bad;
    eprintln!("v_tensor (3,2,4): {bad}/40 failures");

    // Sphere variant on orthonormal instances.
    let mut bad = 0;
    for seed in 100..140u64 {
        let spec = GeneratorSpec {
            kind: GeneratorKind::Orthonormal,
            n: 3,
            m: 3,
            weight_range: None,
            min_kappa: None,
        };
        let mu = generate_instance(&spec, seed).unwrap();
        let cfg = RunConfig {
            d: Some(6),
            algo: Some(Algo::VSphere),
            seed: Some(seed),
            ..Default::default()
        };
        total += 1;
        match run_instance(&mu, &cfg) {
            Ok(res) if res.components.len() == 3 && res.forward_err <= 1e-3 => {}
            Ok(res) => {
                bad += 1;
                eprintln!(
                    "v_sphere orthonormal seed={seed}: comps {} fwd {:.2e} warn {:?}",
                    res.components.len(),
                    res.forward_err,
                    res.warnings
                );
            }
            Err(e) => {
                bad += 1;
                eprintln!("v_sphere orthonormal seed={seed}: ERROR {e}");
            }
        }
    }
    failures += bad;
    eprintln!("v_sphere orthonormal (3,3,6): {bad}/40 failures");

    // Sphere variant on random separated pairs.
    let mut bad = 0;
    for seed in 100..140u64 {
        let spec = GeneratorSpec {
            kind: GeneratorKind::RandomSphere,
            n: 3,
            m: 2,
            weight_range: None,
            min_kappa: Some(0.8),
        };
        let mu = generate_instance(&spec, seed).unwrap();
        let cfg = RunConfig {
            d: Some(6),
            algo: Some(Algo::VSphere),
            seed: Some(seed),
            ..Default::default()
        };
        total += 1;
        match run_instance(&mu, &cfg) {
            Ok(res) if res.components.len() == 2 && res.forward_err <= 1e-2 => {}
            Ok(res) => {
                bad += 1;
                eprintln!(
                    "v_sphere random seed={seed}: comps {} fwd {:.2e} warn {:?}",
                    res.components.len(),
                    res.forward_err,
                    res.warnings
                );
            }
            Err(e) => {
                bad += 1;
                eprintln!("v_sphere random seed={seed}: ERROR {e}");
            }
        }
    }
    failures += bad;
    eprintln!("v_sphere random pairs (3,2,6): {bad}/40 failures");

    eprintln!("== total: {failures}/{total} failures");
}
