//! Bit counts against the closed forms and the asymptotic reference.

use ising_learn::topology::NetworkSpec;
use ising_learn::workflow::cmd_count_spins;

fn main() {
    let (_, table) = cmd_count_spins(&NetworkSpec::dense(2, 1, 4, 1, 0), &[4]).unwrap();
    print!("{table}");
    for h in [2, 4, 8, 16] {
        for l in [3, 4, 5] {
            let (reports, _) = cmd_count_spins(&NetworkSpec::dense(l, h, 4, 1, 0), &[4, 16, 64]).unwrap();
            let ratios: Vec<String> = reports.iter().map(|r| format!("{:.3}", r.ratio)).collect();
            println!("H={h:<2} L={l} ratio {}", ratios.join(" "));
        }
    }
}
