//! Mean one-step prediction error of the Van der Pol model as the lattice
//! samples are perturbed, for several degrees and noise levels.

use bernstein_koopman::experiments::{cmd_table2, ExperimentConfig};

fn main() -> bernstein_koopman::error::Result<()> {
    let mut cfg = ExperimentConfig::new("table2", "van_der_pol");
    cfg.sweep = Some(vec![10, 20, 25]);
    cfg.sigmas = Some(vec![0.0, 0.001, 0.01, 0.05]);
    cfg.seeds = 20;
    let table = cmd_table2(&cfg)?;
    let sigmas = cfg.sigmas.clone().unwrap();
    print!("{:>4}", "n");
    for s in &sigmas {
        print!(" {:>12}", format!("sigma={s}"));
    }
    println!();
    for n in cfg.sweep.clone().unwrap() {
        print!("{n:>4}");
        for &s in &sigmas {
            print!(" {:>12.4e}", table.mean(n, s).unwrap_or(f64::NAN));
        }
        println!();
    }
    Ok(())
}
