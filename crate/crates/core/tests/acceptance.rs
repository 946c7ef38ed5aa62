//! Acceptance criteria, one line per criterion:
//!
//! ```text
//! PASS  4 noiseless training convergence  [1.9s / 60s]  4/5 seeds with KL <= 0.05 ...
//! ```
//!
//! A criterion fails if its check fails or it overruns its time budget. The
//! process exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;

use qcbm::ansatz::{self, build_circuit, circ_calibration_params, cnot_count, route, AnsatzSpec, ParameterVector};
use qcbm::dist::{
    bas_target, kl_divergence, mean_kl, poisson_target, CountVector, PoissonKind, ProbabilityDistribution, TargetSpec,
};
use qcbm::execute::Backend;
use qcbm::harness::evaluate::evaluate_composites;
use qcbm::harness::{evaluate_trace, EvaluationPlan};
use qcbm::mitigation::{
    build_aem, frobenius_distance, mitigate, AemMeta, AssignmentErrorMatrix, KernelClass, DEFAULT_CALIBRATION_SHOTS,
};
use qcbm::rng;
use qcbm::simulator::{exact_distribution, noisy_distribution, DeviceProfile, NoiseModel, ReadoutError, PRESET_NAMES};
use qcbm::training::{mmd_gradient, mmd_loss, train, Evaluator, KernelMatrix, TrainConfig, DEFAULT_SIGMA};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_theta<R: Rng>(spec: &AnsatzSpec, rng: &mut R) -> ParameterVector {
    ParameterVector((0..spec.n_params()).map(|_| rng.gen_range(-PI..PI)).collect())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn readout_device(p01: f64, p10: f64) -> DeviceProfile {
    let noise = NoiseModel::readout_only(vec![ReadoutError { p01, p10 }; 4]);
    DeviceProfile::new("readout-2-5", 4, DeviceProfile::ideal(4).coupling, noise).unwrap()
}

fn round_trip() -> Outcome {
    let device = readout_device(0.02, 0.05);
    let k_exact = AssignmentErrorMatrix::from_readout(&device.noise, 4, &device.name).unwrap();
    let star = AnsatzSpec::four_qubit("dc3_star").unwrap();
    let line = AnsatzSpec::four_qubit("dc3_line").unwrap();
    let mut calib = rng::stream(101);
    let k_sampled = build_aem(
        KernelClass::Hw,
        &star,
        &device,
        Backend::Sampled { shots: 100_000 },
        &mut calib,
    )
    .unwrap();

    let mut r = rng::stream(1);
    let (mut worst_exact, mut worst_sampled) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let spec = if i % 2 == 0 { &star } else { &line };
        let circuit = build_circuit(spec, &random_theta(spec, &mut r)).unwrap();
        let truth = exact_distribution(&circuit);
        let noisy = noisy_distribution(&circuit, &device.noise).unwrap();
        let raw = CountVector::new(noisy.probs().to_vec()).unwrap();
        for (k, worst) in [(&k_exact, &mut worst_exact), (&k_sampled, &mut worst_sampled)] {
            let q = mitigate(&raw, k).unwrap().normalize().unwrap();
            *worst = worst.max(q.l1_distance(&truth).unwrap());
        }
    }
    check(
        worst_exact <= 1e-10 && worst_sampled <= 0.02,
        format!("max L1 exact K_hw {worst_exact:.2e} (<= 1e-10), sampled 1e5-shot K_hw {worst_sampled:.4} (<= 0.02)"),
    )
}

fn calibration_completeness() -> Outcome {
    let mut worst = 1.0f64;
    for layout in ansatz::LAYOUT_NAMES {
        let spec = AnsatzSpec::four_qubit(layout).unwrap();
        for target in 0..16 {
            let theta = circ_calibration_params(&spec, target).unwrap();
            let q = exact_distribution(&build_circuit(&spec, &theta).unwrap());
            worst = worst.min(q.get(target));
        }
    }
    check(
        worst >= 1.0 - 1e-12,
        format!(
            "min target probability {worst:.15} over 16 states x {} layouts",
            ansatz::LAYOUT_NAMES.len()
        ),
    )
}

fn gradient_correctness() -> Outcome {
    let device = DeviceProfile::ideal(4);
    let aem = AssignmentErrorMatrix::identity(16, "ideal");
    let p = bas_target(2, 2).unwrap();
    let kernel = KernelMatrix::gaussian(16, DEFAULT_SIGMA).unwrap();
    let eps = 1e-6;
    let mut worst = 0.0f64;
    let mut r = rng::stream(3);
    for layout in ["dc2", "dc3_star", "dc3_line"] {
        let spec = AnsatzSpec::four_qubit(layout).unwrap();
        let eval = Evaluator {
            spec: &spec,
            device: &device,
            aem: &aem,
            backend: Backend::Exact,
        };
        let loss = |t: &ParameterVector| {
            mmd_loss(&exact_distribution(&build_circuit(&spec, t).unwrap()), &p, &kernel).unwrap()
        };
        for _ in 0..20 {
            let theta = random_theta(&spec, &mut r);
            let g = mmd_gradient(&theta, &p, &kernel, &eval, &mut r).unwrap();
            for (s, gs) in g.iter().enumerate() {
                let fd = (loss(&theta.shifted(s, eps)) - loss(&theta.shifted(s, -eps))) / (2.0 * eps);
                worst = worst.max((gs - fd).abs());
            }
        }
    }
    check(
        worst <= 1e-5,
        format!("max |parameter shift - central difference| {worst:.2e} over 3 layouts x 20 thetas"),
    )
}

fn noiseless_convergence() -> Outcome {
    let spec = AnsatzSpec::four_qubit("dc3_star").unwrap();
    let p = bas_target(2, 2).unwrap();
    let aem = AssignmentErrorMatrix::identity(16, "ideal");
    let mut kls = Vec::new();
    for seed in 0..5 {
        let mut cfg = TrainConfig::new(
            TargetSpec::Bas22,
            spec.clone(),
            DeviceProfile::ideal(4),
            KernelClass::Identity,
        );
        cfg.backend = Backend::Exact;
        cfg.steps = 300;
        cfg.alpha = 0.25;
        cfg.seed = seed;
        let trace = train(&cfg, &aem).unwrap();
        let q = exact_distribution(&build_circuit(&spec, trace.final_theta()).unwrap());
        kls.push(kl_divergence(&p, &q).unwrap());
    }
    let hits = kls.iter().filter(|&&k| k <= 0.05).count();
    let shown: Vec<String> = kls.iter().map(|k| format!("{k:.4}")).collect();
    check(
        hits >= 3,
        format!("{hits}/5 seeds with final KL <= 0.05 ({})", shown.join(", ")),
    )
}

fn post_processing_ordering() -> Outcome {
    let device = DeviceProfile::preset("tokyo-PB-like").unwrap();
    let spec = AnsatzSpec::four_qubit("dc3_star").unwrap();
    let p = bas_target(2, 2).unwrap();
    let identity = AssignmentErrorMatrix::identity(16, &device.name);
    let plan = EvaluationPlan {
        shot_sizes: vec![2048],
        ..EvaluationPlan::default()
    };
    let calibration = Backend::Sampled {
        shots: DEFAULT_CALIBRATION_SHOTS,
    };
    let mut ordered = 0;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let mut cfg = TrainConfig::new(TargetSpec::Bas22, spec.clone(), device.clone(), KernelClass::Identity);
        cfg.steps = 25;
        cfg.seed = seed;
        let trace = train(&cfg, &identity).unwrap();
        let mut r = rng::derived_stream(seed, &[5]);
        let hw = build_aem(KernelClass::Hw, &spec, &device, calibration, &mut r).unwrap();
        let circ = build_aem(KernelClass::Circ, &spec, &device, calibration, &mut r).unwrap();
        let post = [identity.clone(), hw, circ];
        let table = evaluate_trace(&trace, &p, &spec, &device, &post, &plan, &mut r).unwrap();
        let min = |k| table.min_mean_kl(k, 2048).unwrap().mean_kl;
        let (i, h, c) = (min(KernelClass::Identity), min(KernelClass::Hw), min(KernelClass::Circ));
        if c <= h && h <= i {
            ordered += 1;
        }
        lines.push(format!("{c:.3}/{h:.3}/{i:.3}"));
    }
    check(
        ordered >= 4,
        format!(
            "{ordered}/5 seeds with circ <= hw <= identity (min <KL> circ/hw/id: {})",
            lines.join(", ")
        ),
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn mitigation_in_training() -> Outcome {
    let device = DeviceProfile::preset("tokyo-PB-like").unwrap();
    let spec = AnsatzSpec::four_qubit("dc3_star").unwrap();
    let mut minima = [Vec::new(), Vec::new()];
    for seed in 0..3u64 {
        let mut r = rng::derived_stream(seed, &[6]);
        let hw = build_aem(
            KernelClass::Hw,
            &spec,
            &device,
            Backend::Sampled {
                shots: DEFAULT_CALIBRATION_SHOTS,
            },
            &mut r,
        )
        .unwrap();
        let aems = [AssignmentErrorMatrix::identity(16, &device.name), hw];
        for (slot, aem) in aems.iter().enumerate() {
            let mut cfg = TrainConfig::new(TargetSpec::Bas22, spec.clone(), device.clone(), aem.kernel_class());
            cfg.steps = 20;
            cfg.seed = seed;
            minima[slot].push(train(&cfg, aem).unwrap().min_loss().unwrap());
        }
    }
    let (id, hw) = (median(minima[0].clone()), median(minima[1].clone()));
    check(
        hw <= id,
        format!("median min MMD: hw-in-training {hw:.5} <= identity-in-training {id:.5}"),
    )
}

fn frobenius_diagnostics() -> Outcome {
    let id = frobenius_distance(&AssignmentErrorMatrix::identity(16, "x"));
    let meta = AemMeta {
        device: "synthetic".into(),
        layout: None,
        shots: None,
        created: 0,
    };
    let two = AssignmentErrorMatrix::from_rows(KernelClass::Hw, vec![vec![0.9, 0.1], vec![0.1, 0.9]], meta).unwrap();
    let synthetic = frobenius_distance(&two);
    let spec = AnsatzSpec::four_qubit("dc3_star").unwrap();
    let calibration = Backend::Sampled {
        shots: DEFAULT_CALIBRATION_SHOTS,
    };
    let mut r = rng::stream(7);
    let mut failures = Vec::new();
    let mut checked = 0;
    for name in PRESET_NAMES {
        let device = DeviceProfile::preset(name).unwrap();
        if device.noise.depol_2q <= 0.0 {
            continue;
        }
        checked += 1;
        let hw = frobenius_distance(&build_aem(KernelClass::Hw, &spec, &device, calibration, &mut r).unwrap());
        let circ = frobenius_distance(&build_aem(KernelClass::Circ, &spec, &device, calibration, &mut r).unwrap());
        if circ <= hw {
            failures.push(format!("{name}: circ {circ:.3} <= hw {hw:.3}"));
        }
    }
    check(
        id == 0.0 && (synthetic - 0.2).abs() <= 1e-12 && failures.is_empty() && checked > 0,
        format!(
            "identity {id}, 2x2 {synthetic:.15}, circ > hw on {}/{checked} gate-noise presets {}",
            checked - failures.len(),
            failures.join("; ")
        ),
    )
}

fn divergence_handling() -> Outcome {
    let p = bas_target(2, 2).unwrap();
    let device = DeviceProfile::preset("tokyo-PB-like").unwrap();
    let k = AssignmentErrorMatrix::from_readout(&device.noise, 4, &device.name).unwrap();
    // No |0000> counts but plenty of |1000>, which leaks into |0000> at the
    // 1->0 rate; the solve drives |0000> negative and clipping zeroes it.
    let mut raw = vec![0.0; 16];
    for &i in &p.support()[1..] {
        raw[i] = 1000.0;
    }
    raw[1] = 1000.0;
    let mitigated = mitigate(&CountVector::new(raw).unwrap(), &k).unwrap();
    let q = mitigated.normalize().unwrap();
    let kl = kl_divergence(&p, &q).unwrap();
    let est = mean_kl(&p, &mitigated, 2048, 10, &mut rng::stream(8)).unwrap();
    let plan = EvaluationPlan {
        shot_sizes: vec![2048],
        ..EvaluationPlan::default()
    };
    let table = evaluate_composites(
        &[0],
        std::slice::from_ref(&mitigated),
        &p,
        &[AssignmentErrorMatrix::identity(16, "x")],
        &plan,
        9,
    )
    .unwrap();
    let row = &table.rows[0];
    let mut zeroed = p.probs().to_vec();
    zeroed[15] = 0.0;
    let direct = kl_divergence(&p, &ProbabilityDistribution::from_weights(&zeroed).unwrap()).unwrap();
    check(
        direct.is_infinite()
            && q.get(0) == 0.0
            && kl.is_infinite()
            && est.divergent > 0
            && est.mean.is_infinite()
            && row.divergent > 0
            && table.to_csv().contains(",inf,"),
        format!(
            "q'(0000) = {}, KL = {kl}, <KL> = {} with {}/{} divergent draws, metrics row divergent = {}",
            q.get(0),
            est.mean,
            est.divergent,
            est.repeats,
            row.divergent
        ),
    )
}

fn poisson_targets() -> Outcome {
    let p1 = poisson_target(PoissonKind::Poisson1, 5.0, 16).unwrap();
    let p2 = poisson_target(PoissonKind::Poisson2, 5.0, 16).unwrap();
    let min_nonzero = p1
        .probs()
        .iter()
        .copied()
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min);
    let mirrored = (0..16).all(|k| p2.get(k).to_bits() == p1.get(15 - k).to_bits());
    check(
        p1.get(15) == 0.0 && (3e-4..=7e-4).contains(&min_nonzero) && mirrored,
        format!(
            "p1(15) = {}, min nonzero {min_nonzero:.3e}, poisson2(k) == poisson1(15-k) bitwise: {mirrored}",
            p1.get(15)
        ),
    )
}

fn routing_inflation() -> Outcome {
    let spec = AnsatzSpec::four_qubit("dc2").unwrap();
    let circuit = build_circuit(&spec, &random_theta(&spec, &mut rng::stream(10))).unwrap();
    let truth = exact_distribution(&circuit);
    let star = vec![(0, 1), (0, 2), (0, 3)];
    let routed = route(&circuit, &star).unwrap();
    let back: ProbabilityDistribution = routed.unpermute(&exact_distribution(&routed.circuit));
    let err = max_abs_diff(back.probs(), truth.probs());
    let matching = route(&circuit, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let (inflated, plain) = (cnot_count(&routed.circuit), cnot_count(&matching.circuit));
    check(
        inflated > 4 && err <= 1e-12 && plain == 4,
        format!("star coupling: {inflated} CNOTs, max |dp| {err:.1e}; path with (2,3): {plain} CNOTs"),
    )
}

fn clipping_pipeline() -> Outcome {
    let meta = AemMeta {
        device: "synthetic".into(),
        layout: None,
        shots: None,
        created: 0,
    };
    let k = AssignmentErrorMatrix::from_rows(KernelClass::Hw, vec![vec![0.9, 0.1], vec![0.1, 0.9]], meta).unwrap();
    let out = mitigate(&CountVector::new(vec![100.0, 0.0]).unwrap(), &k).unwrap();
    let q = out.normalize().unwrap();
    check(
        q.probs() == [1.0, 0.0] && (out.effective_shots() - 112.5).abs() < 1e-9,
        format!("q' = {:?}, effective shots {}", q.probs(), out.effective_shots()),
    )
}

type Criterion = (u32, &'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    (1, "round-trip oracle", 10, round_trip),
    (2, "calibration completeness", 1, calibration_completeness),
    (3, "gradient correctness", 30, gradient_correctness),
    (4, "noiseless training convergence", 60, noiseless_convergence),
    (5, "post-processing ordering", 600, post_processing_ordering),
    (6, "mitigation in training", 900, mitigation_in_training),
    (7, "frobenius diagnostics", 5, frobenius_diagnostics),
    (8, "divergence handling", 1, divergence_handling),
    (9, "poisson targets", 1, poisson_targets),
    (10, "routing inflation", 1, routing_inflation),
    (11, "clipping pipeline", 1, clipping_pipeline),
];

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, limit, run) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let (ok, detail) = match outcome {
            Ok(d) if in_time => (true, d),
            Ok(d) => (false, format!("{d}; over time budget")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {id:>2} {name}  [{:.2}s / {limit}s]  {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
