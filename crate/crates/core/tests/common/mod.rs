//! Shared oracles for the integration suites. Everything here recomputes
//! expected values by an independent route (closed forms, direct
//! summation) rather than through the solver paths under test.

use orlicz_lab::musielak::FiniteVector;
use orlicz_lab::rng::Rng;

/// Closed-form l_p norm.
pub fn lp_norm(p: f64, x: &[f64]) -> f64 {
    x.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Seeded random vector with entries spanning several orders of magnitude.
pub fn random_vector(rng: &mut Rng, dim: usize) -> FiniteVector {
    FiniteVector {
        coords: (0..dim)
            .map(|_| {
                let v = rng.gaussian();
                v * 10f64.powf(rng.uniform(-2.0, 1.0))
            })
            .collect(),
    }
}

/// One criterion line for the acceptance harness.
pub fn criterion_line(index: u32, name: &str, pass: bool, detail: &str, elapsed: std::time::Duration) {
    println!(
        "criterion {index:>2} [{}] {name}: {} ({:.2?})",
        if pass { "PASS" } else { "FAIL" },
        detail,
        elapsed
    );
}
