//! Resource coefficient families and validation.

use klm_teleport::resource::{maximally_entangled, tent, validate, ResourceCoeffs};
use num_complex::Complex64;

fn main() -> klm_teleport::Result<()> {
    println!(
        "maximally entangled N=3: {:?}",
        maximally_entangled(3)?.weights()
    );
    for x in [-0.05, 0.0, 0.0366, 0.1] {
        let w: Vec<String> = tent(x)?
            .weights()
            .iter()
            .map(|w| format!("{w:.4}"))
            .collect();
        println!("tent x={x:<7} weights [{}]", w.join(", "));
    }

    let raw = vec![Complex64::new(1.0, 0.0); 3];
    println!("raw [1, 1, 1]: {:?}", validate(2, &raw).violations);
    let c = ResourceCoeffs::normalized(raw)?;
    println!("normalized as JSON: {}", c.to_json());
    Ok(())
}
