//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured numbers.
//!
//! Reference means and relative variances come from adaptive runs driven to
//! `rv/m <= 0.001`; comparisons therefore use combined standard errors (both
//! sides of each comparison are Monte Carlo estimates). Extreme-probability
//! cells use the documented relaxed target of 0.05.

use gilbert_rare::{
    brute_force_pn, estimate, hard_sphere_1d_exact, hard_sphere_1d_pn, probe_blocking_soundness,
    EstimateOptions, EstimateReport, EstimatorKind, EventKind, EventSpec, PoissonTable,
    RngStream, TrialConfig, TrialRunner, Window, ORACLE_STREAM_BASE,
};

const TARGET: f64 = 1e-3; // adaptive stopping target used for reference runs
const RELAXED: f64 = 0.05; // relaxed target for extreme probabilities

fn w2(lambda: f64) -> Window {
    Window::new(2, lambda).unwrap()
}

fn edge_cfg(lambda: f64, kappa: f64, ell: u64, grid: Option<usize>) -> TrialConfig {
    TrialConfig::new(w2(lambda), kappa, EventSpec::new(EventKind::EdgeCount, ell), grid).unwrap()
}

fn run(cfg: &TrialConfig, kind: EstimatorKind, target: f64, seed: u64) -> EstimateReport {
    let opts = EstimateOptions::with_target(target);
    estimate(cfg, kind, &opts, seed).unwrap()
}

/// Standard error of the reported mean.
fn se_of(r: &EstimateReport) -> f64 {
    r.half_width_95 / 1.96
}

/// Standard error implied by the reference runs' stopping rule.
fn reference_se(mean: f64) -> f64 {
    mean * TARGET.sqrt()
}

fn assert_mean_close(label: &str, r: &EstimateReport, reference: f64) {
    let tol = 4.0 * (se_of(r).powi(2) + reference_se(reference).powi(2)).sqrt();
    let diff = (r.mean - reference).abs();
    let ok = diff <= tol;
    eprintln!(
        "  {label}: mean {:.5e} vs reference {:.5e} (|diff| {:.2e} <= 4cse {:.2e}, m = {}) -> {}",
        r.mean,
        reference,
        diff,
        tol,
        r.m,
        if ok { "ok" } else { "MISMATCH" }
    );
    assert!(ok, "{label}: {} vs {reference} beyond 4 combined SE", r.mean);
}

#[test]
fn criterion_01_fixed_window_edge_count_means() {
    // W = [0,10]^2, no-edge event, means across the intensity sweep.
    let cells: [(f64, f64, &[(EstimatorKind, Option<usize>)]); 4] = [
        (0.1, 0.31, &[(EstimatorKind::Naive, None), (EstimatorKind::Conditional, None), (EstimatorKind::ImportanceSampling, Some(100))]),
        (0.2, 1.81e-2, &[(EstimatorKind::Naive, None), (EstimatorKind::Conditional, None), (EstimatorKind::ImportanceSampling, Some(100))]),
        (0.3, 3.65e-4, &[(EstimatorKind::Naive, None), (EstimatorKind::Conditional, None), (EstimatorKind::ImportanceSampling, Some(100))]),
        (0.4, 3.46e-6, &[(EstimatorKind::ImportanceSampling, Some(300))]),
    ];
    let mut seed = 101;
    for (kappa, reference, runs) in cells {
        for &(kind, grid) in runs {
            let cfg = edge_cfg(10.0, kappa, 0, grid);
            let rep = run(&cfg, kind, TARGET, seed);
            seed += 1;
            let label = format!(
                "kappa={kappa} {kind}{}",
                grid.map(|k| format!("({k}x{k})")).unwrap_or_default()
            );
            assert_mean_close(&label, &rep, reference);
        }
    }
    eprintln!("criterion 01 (fixed-window means): PASS");
}

#[test]
fn criterion_02_relative_variance_ordering_at_kappa_02() {
    let nmc = run(&edge_cfg(10.0, 0.2, 0, None), EstimatorKind::Naive, TARGET, 201);
    let cmc = run(&edge_cfg(10.0, 0.2, 0, None), EstimatorKind::Conditional, TARGET, 202);
    let is = run(
        &edge_cfg(10.0, 0.2, 0, Some(100)),
        EstimatorKind::ImportanceSampling,
        TARGET,
        203,
    );
    let (rv_n, rv_c, rv_i) = (nmc.rv.unwrap(), cmc.rv.unwrap(), is.rv.unwrap());
    eprintln!(
        "  rv_nmc {rv_n:.3} (ref 54.28), rv_cmc {rv_c:.3} (ref 9.95), rv_is {rv_i:.3} (ref 0.54)"
    );
    assert!(rv_i < rv_c && rv_c < rv_n, "ordering violated: {rv_i} {rv_c} {rv_n}");
    for (rv, reference) in [(rv_n, 54.28), (rv_c, 9.95), (rv_i, 0.54)] {
        assert!(
            rv > reference / 2.0 && rv < reference * 2.0,
            "rv {rv} not within factor 2 of {reference}"
        );
    }
    eprintln!("criterion 02 (relative-variance ordering at kappa = 0.2): PASS");
}

#[test]
fn criterion_03_grid_refinement_monotonicity_at_kappa_04() {
    // Reference values: 2.42 -> 0.97 -> 0.65 across 100^2 -> 200^2 -> 300^2.
    let mut prev: Option<EstimateReport> = None;
    for (i, k) in [100usize, 200, 300].into_iter().enumerate() {
        let rep = run(
            &edge_cfg(10.0, 0.4, 0, Some(k)),
            EstimatorKind::ImportanceSampling,
            TARGET,
            301 + i as u64,
        );
        let rv = rep.rv.unwrap();
        eprintln!("  grid {k}x{k}: rv {rv:.3} (se {:.3})", rep.rv_se.unwrap());
        if let Some(p) = &prev {
            let slack =
                2.0 * (rep.rv_se.unwrap().powi(2) + p.rv_se.unwrap().powi(2)).sqrt();
            assert!(
                rv < p.rv.unwrap() + slack,
                "refinement did not reduce rv: {rv} vs {} (slack {slack})",
                p.rv.unwrap()
            );
        }
        prev = Some(rep);
    }
    eprintln!("criterion 03 (grid refinement monotonicity): PASS");
}

fn max_degree_cfg(kappa: f64, ell: u64, grid: Option<usize>) -> TrialConfig {
    TrialConfig::new(w2(20.0), kappa, EventSpec::new(EventKind::MaxDegree, ell), grid).unwrap()
}

/// KNOWN RED. The reference mean 3.56e-3 for the degree cap at kappa = 1 on
/// the 20-window is not attainable under the stated model: the expected
/// degree is kappa * pi ~ 3.14, so a cap of 4 over ~400 points has
/// probability around 1e-12, which is exactly what both the conditional and
/// importance-sampling estimators measure here (and they agree with each
/// other while this same machinery reproduces every other reference table).
/// The check is asserted as stated rather than weakened; see the decisions
/// notes for the full analysis.
#[test]
fn criterion_04a_degree_cap_mean_reproduction() {
    let opts = EstimateOptions {
        target_rv_of_mean: TARGET,
        m_max: 100_000, // bounded: the target cannot be reached at ~1e-12
        ..EstimateOptions::default()
    };
    let cmc =
        estimate(&max_degree_cfg(1.0, 4, None), EstimatorKind::Conditional, &opts, 401).unwrap();
    let is = estimate(
        &max_degree_cfg(1.0, 4, Some(200)),
        EstimatorKind::ImportanceSampling,
        &opts,
        402,
    )
    .unwrap();
    eprintln!(
        "  measured: cmc {:.4e} (m {}), is {:.4e} (m {}); reference 3.56e-3",
        cmc.mean, cmc.m, is.mean, is.m
    );
    let agree = (cmc.mean - is.mean).abs()
        <= 4.0 * (se_of(&cmc).powi(2) + se_of(&is).powi(2)).sqrt();
    eprintln!(
        "  estimators agree with each other within 4 cse: {}",
        if agree { "yes" } else { "no" }
    );
    assert_mean_close("kappa=1 ell=4 cmc", &cmc, 3.56e-3);
    assert_mean_close("kappa=1 ell=4 is(200x200)", &is, 3.56e-3);
    eprintln!("criterion 04a (degree-cap mean reproduction): PASS");
}

#[test]
fn criterion_04b_degree_cap_variance_ordering() {
    // The attainable half of the degree-cap criterion: the importance
    // sampler's relative variance stays below the conditional estimator's on
    // every row. The conditional values are heavy-tailed enough that an
    // adaptive rv estimate grows with m, so each cell runs a pinned budget.
    let mut orderings = Vec::new();
    for (label, kappa, ell, seed) in [
        ("kappa=1 ell=4", 1.0f64, 4u64, 411u64),
        ("kappa=1.5 ell=4", 1.5, 4, 413),
        ("kappa=2 ell=5", 2.0, 5, 415),
    ] {
        let cmc_opts = EstimateOptions {
            target_rv_of_mean: RELAXED,
            m_min: 150_000,
            m_max: 150_000,
            ..EstimateOptions::default()
        };
        let cmc = estimate(&max_degree_cfg(kappa, ell, None), EstimatorKind::Conditional,
            &cmc_opts, seed)
        .unwrap();
        let is_opts = EstimateOptions {
            target_rv_of_mean: RELAXED,
            m_min: 20_000,
            m_max: 20_000,
            ..EstimateOptions::default()
        };
        let is = estimate(
            &max_degree_cfg(kappa, ell, Some(200)),
            EstimatorKind::ImportanceSampling,
            &is_opts,
            seed + 1,
        )
        .unwrap();
        orderings.push((label, cmc.rv.unwrap(), is.rv.unwrap()));
    }
    for (label, rv_cmc, rv_is) in orderings {
        eprintln!("  {label}: rv_is {rv_is:.4e} < rv_cmc {rv_cmc:.4e}");
        assert!(rv_is < rv_cmc, "{label}: rv_is {rv_is} !< rv_cmc {rv_cmc}");
    }
    eprintln!("criterion 04b (degree-cap variance ordering): PASS");
}

#[test]
fn criterion_05_extreme_probability_order_of_magnitude() {
    // W = [0,20]^2, kappa = 0.3, no edges: probability ~ 6.7e-15.
    let cfg = edge_cfg(20.0, 0.3, 0, Some(300));
    let rep = run(&cfg, EstimatorKind::ImportanceSampling, RELAXED, 501);
    let reference = 6.7e-15;
    let ratio = rep.mean / reference;
    eprintln!(
        "  is(300x300) relaxed: mean {:.5e} vs reference {reference:.2e} (ratio {ratio:.3}, rv {:.2}, m = {})",
        rep.mean,
        rep.rv.unwrap(),
        rep.m
    );
    assert!(
        ratio > 0.5 && ratio < 2.0,
        "mean {} not within factor 2 of {reference}",
        rep.mean
    );
    eprintln!("criterion 05 (extreme-probability order of magnitude): PASS");
}

#[test]
fn criterion_06_one_dimensional_exact_oracle_agreement() {
    let window = Window::new(1, 10.0).unwrap();
    for (i, beta) in [2.0f64, 5.0, 8.0].into_iter().enumerate() {
        let kappa = beta / 10.0;
        let table = PoissonTable::with_default_tail(beta).unwrap();
        let exact = hard_sphere_1d_exact(10.0, &table).unwrap().value;
        let cfg_plain =
            TrialConfig::new(window, kappa, EventSpec::new(EventKind::EdgeCount, 0), None)
                .unwrap();
        let cfg_grid =
            TrialConfig::new(window, kappa, EventSpec::new(EventKind::EdgeCount, 0), Some(100))
                .unwrap();
        for (kind, cfg) in [
            (EstimatorKind::Naive, &cfg_plain),
            (EstimatorKind::Conditional, &cfg_plain),
            (EstimatorKind::ImportanceSampling, &cfg_grid),
        ] {
            let rep = run(cfg, kind, TARGET, 601 + i as u64 * 10);
            let diff = (rep.mean - exact).abs();
            let tol = 4.0 * se_of(&rep);
            eprintln!(
                "  beta={beta} {kind}: {:.6e} vs exact {:.6e} (|diff| {:.2e} <= {:.2e})",
                rep.mean, exact, diff, tol
            );
            assert!(diff <= tol, "beta={beta} {kind}: {} vs exact {exact}", rep.mean);
        }
    }
    // Brute-force p_n against the spacings closed form.
    let spec = EventSpec::new(EventKind::EdgeCount, 0);
    let mut rng = RngStream::new(699, ORACLE_STREAM_BASE + 600);
    for n in 2..=8 {
        let r = brute_force_pn(&window, spec, n, 1_000_000, &mut rng).unwrap();
        let exact = hard_sphere_1d_pn(10.0, n);
        let diff = (r.value - exact).abs();
        assert!(
            diff <= 4.0 * r.std_err,
            "p_{n}: brute {} vs exact {exact} (se {})",
            r.value,
            r.std_err
        );
    }
    eprintln!("criterion 06 (one-dimensional exact oracle): PASS");
}

#[test]
fn criterion_07_blocking_soundness_probes() {
    // >= 10^5 probes per event kind at two grid resolutions, zero violations.
    let window = w2(10.0);
    let events = [
        (EventKind::EdgeCount, 2u64),
        (EventKind::MaxDegree, 2),
        (EventKind::MaxComponent, 1),
        (EventKind::MaxClique, 1),
        (EventKind::TriangleCount, 1),
    ];
    for (kind, ell) in events {
        for (gi, k) in [50usize, 100].into_iter().enumerate() {
            let cfg =
                TrialConfig::new(window, 0.5, EventSpec::new(kind, ell), Some(k)).unwrap();
            let mut rng =
                RngStream::new(701, ORACLE_STREAM_BASE + 700 + gi as u64 * 100 + ell);
            let mut probes = 0u64;
            let mut violations = 0u64;
            while probes < 100_000 {
                let rep = probe_blocking_soundness(&cfg, 40, 25, &mut rng).unwrap();
                probes += rep.probes;
                violations += rep.violations;
            }
            eprintln!("  {kind} ell={ell} grid {k}x{k}: {probes} probes, {violations} violations");
            assert_eq!(violations, 0, "{kind} ell={ell} grid {k}");
        }
    }
    eprintln!("criterion 07 (blocking soundness): PASS");
}

#[test]
fn criterion_08_property_suite() {
    let window = w2(6.0);
    // Hereditary indicator agrees with the from-scratch oracle on every
    // prefix and never rises.
    for (i, kind) in EventKind::ALL.into_iter().enumerate() {
        let spec = EventSpec::new(kind, 1);
        let mut state = gilbert_rare::GraphState::new(window, spec);
        let mut rng = RngStream::new(801 + i as u64, ORACLE_STREAM_BASE + 800);
        let mut flat = Vec::new();
        let mut prev_in = true;
        for _ in 0..40 {
            let p = window.sample_point(&mut rng);
            flat.extend_from_slice(&p);
            let u = state.add_point(&p).unwrap();
            let brute = gilbert_rare::brute_force_statistics(&flat, 2);
            let oracle_in = gilbert_rare::brute_in_event(&brute, spec);
            assert_eq!(u.still_in_a, oracle_in, "{kind}: indicator mismatch");
            assert!(prev_in || !u.still_in_a, "{kind}: indicator rose");
            prev_in = u.still_in_a;
        }
    }

    // Incremental statistics equal brute-force recomputation on 50-point
    // states (all kinds share one dense state).
    {
        let spec = EventSpec::new(EventKind::EdgeCount, u64::MAX);
        let mut state = gilbert_rare::GraphState::new(window, spec);
        let mut rng = RngStream::new(810, ORACLE_STREAM_BASE + 801);
        let mut flat = Vec::new();
        for _ in 0..50 {
            let p = window.sample_point(&mut rng);
            flat.extend_from_slice(&p);
            state.add_point(&p).unwrap();
        }
        let brute = gilbert_rare::brute_force_statistics(&flat, 2);
        assert_eq!(state.statistic(EventKind::EdgeCount), brute.edge_count);
        assert_eq!(state.statistic(EventKind::MaxDegree), brute.max_degree);
        assert_eq!(state.statistic(EventKind::MaxComponent), brute.max_component);
        assert_eq!(state.statistic(EventKind::MaxClique), brute.max_clique);
        assert_eq!(state.statistic(EventKind::TriangleCount), brute.triangle_count);
    }

    // Conditional identity, likelihood trace shape, and bit-exact replay.
    let cfg = edge_cfg(10.0, 0.25, 0, Some(100));
    let mut runner = TrialRunner::new(&cfg).unwrap();
    for i in 0..100 {
        let out = runner.run(EstimatorKind::Conditional, 820, i);
        assert_eq!(out.value, cfg.poisson.cdf(out.points_generated));
    }
    for i in 0..100 {
        let out = runner.run_traced(EstimatorKind::ImportanceSampling, 821, i);
        let trace = out.l_trace.unwrap();
        assert_eq!(trace[0], 1.0);
        let mut prev = 1.0;
        for &l in &trace {
            assert!((0.0..=1.0).contains(&l) && l <= prev + 1e-15);
            prev = l;
        }
    }
    let opts = EstimateOptions { target_rv_of_mean: 0.01, ..EstimateOptions::default() };
    let a = estimate(&cfg, EstimatorKind::ImportanceSampling, &opts, 822).unwrap();
    let b = estimate(&cfg, EstimatorKind::ImportanceSampling, &opts, 822).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits(), "seed replay is not bit-exact");
    eprintln!("criterion 08 (property suite): PASS");
}

#[test]
fn criterion_09_growing_window_efficiency_direction() {
    // Window volume beta^1.5 with intensity beta^-0.5: the importance
    // sampler's relative variance must grow strictly slower than the
    // conditional estimator's between consecutive rates.
    let delta = 1.5f64;
    let d = 2u32;
    let mut rows = Vec::new();
    for (i, beta) in [20.0f64, 40.0, 80.0].into_iter().enumerate() {
        let lambda = beta.powf(delta / d as f64);
        let kappa = beta.powf(1.0 - delta);
        let window = Window::new(d as usize, lambda).unwrap();
        let k = (lambda * 10.0).round() as usize; // cell edge ~ 0.1
        let spec = EventSpec::new(EventKind::EdgeCount, 0);
        // The conditional rv estimate is heavy-tailed here and would chase
        // its own growing value under a stop rule; a pinned common budget
        // puts the three rates on an equal footing.
        let cmc_opts = EstimateOptions {
            target_rv_of_mean: RELAXED,
            m_min: 100_000,
            m_max: 100_000,
            ..EstimateOptions::default()
        };
        let cmc = estimate(
            &TrialConfig::new(window, kappa, spec, None).unwrap(),
            EstimatorKind::Conditional,
            &cmc_opts,
            901 + i as u64 * 2,
        )
        .unwrap();
        let is_opts = EstimateOptions {
            target_rv_of_mean: RELAXED,
            m_max: 100_000,
            ..EstimateOptions::default()
        };
        let is = estimate(
            &TrialConfig::new(window, kappa, spec, Some(k)).unwrap(),
            EstimatorKind::ImportanceSampling,
            &is_opts,
            902 + i as u64 * 2,
        )
        .unwrap();
        eprintln!(
            "  beta={beta}: lambda {lambda:.2}, grid {k}^2, rv_cmc {:.3} (m {}), rv_is {:.3} (m {})",
            cmc.rv.unwrap(),
            cmc.m,
            is.rv.unwrap(),
            is.m
        );
        rows.push((beta, cmc.rv.unwrap(), is.rv.unwrap()));
    }
    for pair in rows.windows(2) {
        let (b0, cmc0, is0) = pair[0];
        let (b1, cmc1, is1) = pair[1];
        let cmc_ratio = cmc1 / cmc0;
        let is_ratio = is1 / is0;
        eprintln!("  beta {b0} -> {b1}: rv growth is {is_ratio:.3} vs cmc {cmc_ratio:.3}");
        assert!(
            is_ratio < cmc_ratio,
            "importance-sampling rv grew faster ({is_ratio} vs {cmc_ratio})"
        );
    }
    eprintln!("criterion 09 (growing-window direction): PASS");
}

#[test]
fn criterion_10_unbiasedness_cross_agreement() {
    let nmc = run(&edge_cfg(10.0, 0.2, 0, None), EstimatorKind::Naive, TARGET, 1001);
    let cmc = run(&edge_cfg(10.0, 0.2, 0, None), EstimatorKind::Conditional, TARGET, 1002);
    let is = run(
        &edge_cfg(10.0, 0.2, 0, Some(100)),
        EstimatorKind::ImportanceSampling,
        TARGET,
        1003,
    );
    let pairs = [("nmc/cmc", &nmc, &cmc), ("nmc/is", &nmc, &is), ("cmc/is", &cmc, &is)];
    for (label, a, b) in pairs {
        let diff = (a.mean - b.mean).abs();
        let tol = 4.0 * (se_of(a).powi(2) + se_of(b).powi(2)).sqrt();
        eprintln!("  {label}: {:.5e} vs {:.5e} (|diff| {:.2e} <= {:.2e})", a.mean, b.mean, diff, tol);
        assert!(diff <= tol, "{label} disagree beyond 4 combined SE");
    }
    eprintln!("criterion 10 (unbiasedness cross-agreement): PASS");
}
