//! Snapshot pairs of the Lotka-Volterra flow on a jittered lattice: the
//! piecewise-linear lattice map, Bernstein prediction and EDMD, with and
//! without output noise.

use bernstein_koopman::bernstein::DegreeVector;
use bernstein_koopman::data_driven::{fit, Route};
use bernstein_koopman::domain::euclidean;
use bernstein_koopman::dynamics::{add_noise, builtin, flow_map};
use bernstein_koopman::edmd::{build_edmd_with_tolerance, predict_edmd, standard_truncation};
use bernstein_koopman::experiments::generate_data;

fn main() -> bernstein_koopman::error::Result<()> {
    let spec = builtin("lotka_volterra")?;
    let map = flow_map(&spec)?;
    let degree = DegreeVector::uniform(15, 2)?;
    let data = generate_data(&spec, &degree, 0.3, 7)?;
    println!("{} pairs, first input {:.4?}", data.len(), data.inputs()[0]);

    let x0 = [0.4, 0.3];
    let steps = 10;
    let mut truth = vec![x0.to_vec()];
    for _ in 0..steps {
        let next = map.eval(truth.last().unwrap());
        truth.push(next);
    }
    let max_err = |traj: &[Vec<f64>]| {
        traj.iter().zip(&truth[1..]).map(|(p, t)| euclidean(p, t)).fold(0.0, f64::max)
    };

    let dk = fit(&data, &degree, None)?;
    println!("lattice map: {} simplices", dk.map.simplices().len());
    let z = dk.map.eval_inverse(&x0)?;
    println!("S^-1(x0) = {z:.4?}, round trip {:.2e}", euclidean(&dk.map.eval(&z)?, &x0));
    println!("bernstein, clean: {:.4e}", max_err(&dk.predict(&x0, steps, Route::Bernstein)?));

    for (label, tol) in [
        ("standard pinv", standard_truncation(data.len(), data.len())),
        ("relative 1e-10", 1e-10),
    ] {
        let edmd = build_edmd_with_tolerance(&data, &degree, tol)?;
        let err = max_err(&predict_edmd(&edmd, &x0, steps)?);
        println!("edmd {label}, clean: {err:.4e} (rank {})", edmd.rank_used);
    }

    let hull = data.domain_box()?;
    let noisy = add_noise(data.outputs(), 0.02, 1, Some(&hull))?;
    let noisy_data = data.with_outputs(noisy.values)?;
    let dk = fit(&noisy_data, &degree, None)?;
    let edmd = build_edmd_with_tolerance(&noisy_data, &degree, 1e-10)?;
    println!("noise sup {:.4}", noisy.sup_norm);
    println!("bernstein, noisy: {:.4e}", max_err(&dk.predict(&x0, steps, Route::Bernstein)?));
    println!("edmd 1e-10, noisy: {:.4e}", max_err(&predict_edmd(&edmd, &x0, steps)?));
    Ok(())
}
