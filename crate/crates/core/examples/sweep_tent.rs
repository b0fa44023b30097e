//! Chain success probability along the tent family, for several chain lengths.

use klm_teleport::optimize::sweep_x;

fn main() -> klm_teleport::Result<()> {
    for hops in [1, 2, 4, 6] {
        let s = sweep_x(hops, 0.0, 0.09, 91)?;
        println!("M={hops}: best x = {:.6}, p = {:.6}", s.argmax_x, s.max_p);
    }
    let six = sweep_x(6, 0.0, 0.09, 10)?;
    six.write_csv(std::io::stdout())?;
    Ok(())
}
