//! Built-in target distributions.
//!
//! ```text
//! cargo run --example targets
//! ```

use qcbm::dist::{bas_target, kl_divergence, threshold_filter, BasisState, TargetSpec};

fn show(name: &str, probs: &[f64]) {
    println!("{name}");
    for (i, p) in probs.iter().enumerate() {
        let bar = "#".repeat((p * 60.0).round() as usize);
        println!("  {i:>2} {}  {p:.5}  {bar}", BasisState::new(i, 4).unwrap());
    }
}

fn main() -> qcbm::Result<()> {
    // Row-major 2x2 images: qubit k is pixel k, qubit 0 printed leftmost.
    let bas = bas_target(2, 2)?;
    show("BAS(2,2)", bas.probs());

    for spec in [
        TargetSpec::Poisson1 { lambda: 5.0 },
        TargetSpec::Poisson2 { lambda: 5.0 },
    ] {
        let p = spec.distribution(4)?;
        let smallest = p
            .probs()
            .iter()
            .copied()
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min);
        show(&format!("{} (smallest nonzero {smallest:.2e})", spec.name()), p.probs());
    }

    // A thresholded near-BAS distribution recovers the target exactly when
    // every BAS state clears the threshold.
    let mut noisy = bas.probs().iter().map(|p| 0.9 * p + 0.1 / 16.0).collect::<Vec<_>>();
    noisy[3] *= 0.5;
    let q = qcbm::dist::ProbabilityDistribution::from_weights(&noisy)?;
    let filtered = threshold_filter(&q, 0.02)?;
    println!(
        "KL before threshold {:.4}, after {:.4}",
        kl_divergence(&bas, &q)?,
        kl_divergence(&bas, &filtered)?
    );
    Ok(())
}
