//! The six input states of the two-LCVR generator and the Mueller matrix of
//! the generator at an arbitrary pair of retardances.

use fiberpol::psg::{generated_states, psg_mueller, PsgConfig};

fn main() {
    let cfg = PsgConfig::default();
    println!(
        "{:>5} {:>6} {:>6}   s1      s2      s3",
        "state", "LCVR1", "LCVR2"
    );
    for row in generated_states(&cfg) {
        let s = row.state;
        println!(
            "{:>5} {:>6.2} {:>6.2} {:7.3} {:7.3} {:7.3}",
            row.label,
            row.ret1,
            row.ret2,
            s.s1 + 0.0,
            s.s2 + 0.0,
            s.s3 + 0.0
        );
    }
    let m = psg_mueller(&cfg.with_retardances(0.3, 0.7));
    println!("\ngenerator at (0.3, 0.7) waves:");
    for r in m.rows() {
        println!("  {:8.4} {:8.4} {:8.4} {:8.4}", r[0], r[1], r[2], r[3]);
    }
}
