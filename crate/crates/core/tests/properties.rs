//! Cross-module properties checked on random inputs.

use hybrid_isac::channel::{build_cfr, sample_scenario, PathParams, Scenario, ScenarioConfig};
use hybrid_isac::fec::LdpcCode;
use hybrid_isac::pipeline::{run_frame, FrameSeeds};
use hybrid_isac::planner::{
    build_re_map, compute_spacings, spectral_efficiency, AllocationMode, FramePlan, Numerology, ReClass,
    SensingRequirements,
};
use hybrid_isac::radar::{periodogram, target_snr, threshold_mask, CfarConfig};
use hybrid_isac::{FrameGrid, SPEED_OF_LIGHT};
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use std::f64::consts::PI;

fn plan(n: usize, m: usize, k_f: usize, k_t: usize, q_s: u32, q_r: u32, mode: AllocationMode) -> FramePlan {
    FramePlan {
        numerology: Numerology::new(n, m, 120e3, 27.4e9, 0.0).unwrap(),
        k_f,
        k_t,
        q_s,
        q_r,
        ..FramePlan::reference(mode)
    }
}

fn small_plan(mode: AllocationMode) -> FramePlan {
    plan(96, 48, 4, 4, 2, 4, mode)
}

fn path(gain: f64, range: f64, doppler: f64, is_reference: bool) -> PathParams {
    PathParams {
        gain: Complex64::from_polar(gain, 0.3),
        range,
        doppler,
        is_reference,
    }
}

fn orders() -> impl Strategy<Value = (u32, u32)> {
    prop_oneof![Just((2, 2)), Just((2, 4)), Just((4, 4))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hybrid_efficiency_sits_between_pilots_and_comm(
        n in 1usize..80, m in 1usize..60, kf in 1usize..9, kt in 1usize..9, (q_s, q_r) in orders(),
    ) {
        let (kf, kt) = (kf.min(n), kt.min(m));
        let eta = |mode| spectral_efficiency(&plan(n, m, kf, kt, q_s, q_r, mode));
        let (hyb, comm, pil) = (eta(AllocationMode::Hybrid), eta(AllocationMode::CommCentric), eta(AllocationMode::PilotsOnly));
        prop_assert!(hyb <= comm);
        prop_assert_eq!(hyb == comm, q_s == q_r);
        prop_assert!(pil < hyb);
    }

    #[test]
    fn looser_requirements_never_shrink_spacings(
        r in 5.0f64..2000.0, d in 50.0f64..50_000.0, fr in 1.0f64..3.0, fd in 1.0f64..3.0,
    ) {
        let num = Numerology::reference();
        let req = |max_range, max_doppler| SensingRequirements {
            max_range,
            max_doppler,
            range_resolution: 1.578,
            doppler_resolution: 214.3,
        };
        let (Ok(tight), Ok(loose)) = (compute_spacings(&num, &req(r, d)), compute_spacings(&num, &req(r * fr, d * fd))) else {
            return Ok(());
        };
        prop_assert!(loose.k_f <= tight.k_f && loose.k_t <= tight.k_t);
        if !tight.range_clamped {
            // Rounding the spacing up gives back at most one step of range:
            // K - 1 < K_exact <= K.
            let k = tight.k_f as f64;
            let reach = SPEED_OF_LIGHT / (2.0 * k * num.subcarrier_spacing);
            prop_assert!(reach <= r * (1.0 + 1e-9));
            prop_assert!(k == 1.0 || reach > r * (k - 1.0) / k);
            prop_assert!((SPEED_OF_LIGHT / (2.0 * tight.k_f_exact * num.subcarrier_spacing) - r).abs() < 1e-9 * r);
        }
    }

    #[test]
    fn sensing_grid_is_periodic_and_anchored(
        n in 1usize..60, m in 1usize..40, kf in 1usize..7, kt in 1usize..7, (q_s, q_r) in orders(),
    ) {
        let (kf, kt) = (kf.min(n), kt.min(m));
        let p = plan(n, m, kf, kt, q_s, q_r, AllocationMode::Hybrid);
        let Ok(map) = build_re_map(&p) else { return Ok(()); };
        prop_assert_eq!(&build_re_map(&p).unwrap(), &map);
        for ((i, j), c) in map.classification.indexed_iter() {
            let on_grid = i % kf == 0 && j % kt == 0;
            match c {
                ReClass::SensingGrid => prop_assert!(on_grid),
                ReClass::Regular => prop_assert!(!on_grid),
                ReClass::Filler => {}
            }
        }
        prop_assert_eq!(map.sensing.len() + map.filler.iter().filter(|&&(i, j)| i % kf == 0 && j % kt == 0).count(), p.n_sensing_re());
    }

    #[test]
    fn cfr_of_a_union_is_the_sum(
        r1 in 0.0f64..500.0, d1 in -5e3f64..5e3, r2 in 0.0f64..500.0, d2 in -5e3f64..5e3, g in 0.01f64..1.0,
    ) {
        let num = Numerology::new(24, 14, 120e3, 27.4e9, 0.07).unwrap();
        let reference = path(1.0, r1, d1, true);
        let target = path(g, r1 + 10.0 + r2, d2, false);
        let both = build_cfr(&Scenario { reference, targets: vec![target] }, &num);
        let sum = reference.cfr(&num) + target.cfr(&num);
        prop_assert_eq!(both, sum);
        let energy: f64 = reference.cfr(&num).iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((energy - num.n_re() as f64).abs() < 1e-9);
    }

    #[test]
    fn cfar_decisions_ignore_global_scale(seed in any::<u64>(), scale in 1e-6f64..1e6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Array2::from_shape_simple_fn((48, 40), || Exp1.sample(&mut rng));
        let cfg = CfarConfig { p_fa: 1e-2, ..CfarConfig::default() };
        prop_assert_eq!(threshold_mask(&p, &cfg).unwrap(), threshold_mask(&p.mapv(|v| v * scale), &cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn hybrid_equals_genie_when_every_codeword_decodes(real in any::<u64>(), bits in any::<u64>(), noise in any::<u64>()) {
        let code = LdpcCode::shipped();
        let num = small_plan(AllocationMode::Hybrid).numerology;
        let cfg = ScenarioConfig { target_loss_db: hybrid_isac::channel::Interval::new(20.0, 26.0), ..ScenarioConfig::default() };
        let s = sample_scenario(&mut ChaCha8Rng::seed_from_u64(real), &cfg, &num);
        let seeds = FrameSeeds { bits, noise };
        let h = run_frame(&s, &small_plan(AllocationMode::Hybrid), code, 20.0, seeds).unwrap();
        let g = run_frame(&s, &small_plan(AllocationMode::GenieAided), code, 20.0, seeds).unwrap();
        prop_assert_eq!(h.stream_s.unwrap().failed + h.stream_r.unwrap().failed, 0);
        prop_assert_eq!(h.symbol_errors, 0);
        prop_assert_eq!(h.h_hat, g.h_hat);
    }

    #[test]
    fn noiseless_pilots_sample_the_genie_csi(real in any::<u64>(), bits in any::<u64>()) {
        let code = LdpcCode::shipped();
        let num = small_plan(AllocationMode::Hybrid).numerology;
        let s = sample_scenario(&mut ChaCha8Rng::seed_from_u64(real), &ScenarioConfig::default(), &num);
        let seeds = FrameSeeds { bits, noise: 0 };
        let g = run_frame(&s, &small_plan(AllocationMode::GenieAided), code, f64::INFINITY, seeds).unwrap();
        let p = run_frame(&s, &small_plan(AllocationMode::PilotsOnly), code, f64::INFINITY, seeds).unwrap();
        prop_assert_eq!(p.h_hat.dim(), (24, 12));
        for ((i, j), v) in p.h_hat.indexed_iter() {
            prop_assert!((v - g.h_hat[[4 * i, 4 * j]]).norm() < 1e-12);
        }
    }
}

fn one_target_scenario(gain_ratio: f64) -> Scenario {
    Scenario {
        reference: path(1e-4, 240.0, -400.0, true),
        targets: vec![path(1e-4 * gain_ratio, 240.0 + 610.0, -400.0 + 7300.0, false)],
    }
}

fn genie_gamma_db(scenario: &Scenario, snr_db: f64, pad: usize) -> f64 {
    let plan = small_plan(AllocationMode::GenieAided);
    let frame = run_frame(
        scenario,
        &plan,
        LdpcCode::shipped(),
        snr_db,
        FrameSeeds { bits: 5, noise: 6 },
    )
    .unwrap();
    let p = periodogram(&frame.h_hat, (pad, pad), frame.csi_spacing).unwrap();
    target_snr(&p, &p.truth_bins(&scenario.truth())).unwrap().gamma_db()
}

#[test]
fn target_snr_grows_with_the_squared_gain() {
    // On-grid paths without padding leave no leakage, so the floor is the
    // (seeded, identical) noise alone and only the peak depends on the gain.
    let range_bin = SPEED_OF_LIGHT / (96.0 * 120e3);
    let doppler_bin = 120e3 / 48.0;
    let scenario = |g: f64| Scenario {
        reference: path(1e-4, 240.0, -400.0, true),
        targets: vec![path(
            1e-4 * g,
            240.0 + 20.0 * range_bin,
            -400.0 + 3.0 * doppler_bin,
            false,
        )],
    };
    let g1 = genie_gamma_db(&scenario(0.1), 40.0, 1);
    let g2 = genie_gamma_db(&scenario(0.2), 40.0, 1);
    let expected = 20.0 * 2f64.log10();
    assert!((g2 - g1 - expected).abs() < 0.1, "{g1} -> {g2}");
}

#[test]
fn doubling_the_padding_keeps_the_target_snr() {
    let s = one_target_scenario(0.05);
    let z2 = genie_gamma_db(&s, 10.0, 2);
    let z4 = genie_gamma_db(&s, 10.0, 4);
    assert!((z2 - z4).abs() < 0.5, "pad 2: {z2} dB, pad 4: {z4} dB");
}

/// Peak over the mean of bins at least `guard` bins away from it on both axes.
fn peak_to_floor(h: &FrameGrid, bin: (usize, usize), guard: usize) -> f64 {
    let p = periodogram(h, (1, 1), (1.0, 1.0)).unwrap();
    let (rows, cols) = p.shape();
    let far = |i: usize, c: usize, n: usize| {
        let d = (i + n - c) % n;
        d.min(n - d) > guard
    };
    let floor: Vec<f64> = p
        .power
        .indexed_iter()
        .filter(|&((i, j), _)| far(i, bin.0, rows) || far(j, bin.1, cols))
        .map(|(_, v)| *v)
        .collect();
    p.power[bin] / (floor.iter().sum::<f64>() / floor.len() as f64)
}

#[test]
fn full_grid_gains_the_decimation_factor_over_the_sensing_grid() {
    let (n, m, kf, kt) = (128, 96, 4, 4);
    let (k0, l0) = (24, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut full, mut dec) = (0.0, 0.0);
    let trials = 20;
    for _ in 0..trials {
        let h = FrameGrid::from_shape_fn((n, m), |(i, j)| {
            let ph = 2.0 * PI * (-(i as f64) * k0 as f64 / n as f64 + j as f64 * l0 as f64 / m as f64);
            let z = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            Complex64::from_polar(1.0, ph) + z
        });
        let d = FrameGrid::from_shape_fn((n / kf, m / kt), |(i, j)| h[[i * kf, j * kt]]);
        full += peak_to_floor(&h, (k0, l0), 2);
        dec += peak_to_floor(&d, (k0 % (n / kf), l0 % (m / kt)), 2);
    }
    let gain = 10.0 * (full / dec).log10();
    let expected = 10.0 * ((kf * kt) as f64).log10();
    assert!(
        (gain - expected).abs() < 1.0,
        "gain {gain:.2} dB, expected {expected:.2} dB"
    );
}
