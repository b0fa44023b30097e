//! Searching general coefficient vectors for the best two-hop chain.

use klm_teleport::optimize::optimize_coeffs;

fn main() -> klm_teleport::Result<()> {
    for n in [2, 3, 4] {
        let best = optimize_coeffs(n, 2, 1)?;
        let w: Vec<String> = best
            .coeffs
            .weights()
            .iter()
            .map(|w| format!("{w:.4}"))
            .collect();
        println!(
            "N={n}, M=2: p = {:.6} after {} evaluations, weights [{}]",
            best.p,
            best.evaluations,
            w.join(", ")
        );
    }
    Ok(())
}
