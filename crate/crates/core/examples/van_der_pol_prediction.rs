//! Koopman matrices of the Van der Pol flow on the rescaled box and the
//! short-term prediction errors for several degrees.
//!
//! `cargo run --release --example van_der_pol_prediction [out_dir]` also
//! writes the n = 10 matrices in the `kb-koopman v1` format.

use bernstein_koopman::bernstein::DegreeVector;
use bernstein_koopman::domain::euclidean;
use bernstein_koopman::dynamics::{builtin, flow_map};
use bernstein_koopman::koopman::{
    build_koopman_matrices, predict_trajectory, predict_trajectory_bernstein, predict_trajectory_relift,
    write_matrix_csv, Basis,
};

fn main() -> bernstein_koopman::error::Result<()> {
    let spec = builtin("van_der_pol")?;
    let map = flow_map(&spec)?;
    let x0 = [0.4, 0.0];
    let steps = 6;
    let mut truth = vec![x0.to_vec()];
    for _ in 0..steps {
        let next = map.eval(truth.last().unwrap());
        truth.push(next);
    }

    println!("n   route      errors k=1..{steps}");
    for n in [10, 20, 25] {
        let k = build_koopman_matrices(&map, &DegreeVector::uniform(n, 2)?)?;
        let routes = [
            ("linear", predict_trajectory(&k, &x0, steps)?),
            ("bernstein", predict_trajectory_bernstein(&k, &x0, steps)?),
            ("relift", predict_trajectory_relift(&k, &x0, steps)?),
        ];
        for (name, traj) in routes {
            let errs: Vec<String> = traj
                .iter()
                .zip(&truth[1..])
                .map(|(p, t)| format!("{:.4}", euclidean(p, t)))
                .collect();
            println!("{n:<3} {name:<10} {}", errs.join(" "));
        }
    }

    if let Some(dir) = std::env::args().nth(1) {
        let degree = DegreeVector::uniform(10, 2)?;
        let k = build_koopman_matrices(&map, &degree)?;
        for (name, m, basis) in [("k_bernstein.csv", &k.bernstein, Basis::Bernstein), ("k_monomial.csv", &k.monomial, Basis::Monomial)] {
            let path = std::path::Path::new(&dir).join(name);
            let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write_matrix_csv(&mut file, m, &degree, basis)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
