//! A system supplied as JSON (vector field, optional closed-form flow,
//! horizon, box) with an observable given as an expression, then written
//! out as snapshot data that `kb datadriven --data` accepts.

use bernstein_koopman::bernstein::{eval_bernstein_unchecked, DegreeVector, LatticeGrid};
use bernstein_koopman::dynamics::expr::observable_from_expr;
use bernstein_koopman::dynamics::{flow_map, SystemConfig};
use bernstein_koopman::experiments::generate_data;
use bernstein_koopman::koopman::lattice_images;

const SYSTEM: &str = r#"{
  "name": "quadratic_sink",
  "dim": 2,
  "field": ["-x1 + 0.5*x2^2", "-0.8*x2 + 0.2*x1*x2"],
  "horizon": 0.5,
  "box": [[0, 2], [0, 2]],
  "output_box": [[0, 2], [0, 2]]
}"#;

fn main() -> bernstein_koopman::error::Result<()> {
    let spec = SystemConfig::from_json(SYSTEM)?.into_spec()?;
    let map = flow_map(&spec)?;
    let f = observable_from_expr("x1*x2 + x2^2", 2)?;
    let x = [0.3, 0.7];
    let exact = f.eval(&map.eval(&x));
    for n in [5, 10, 20, 40] {
        let degree = DegreeVector::uniform(n, 2)?;
        let images = lattice_images(&map, &LatticeGrid::new(degree.clone()))?;
        let coeffs: Vec<f64> = images.iter().map(|y| f.eval(y)).collect();
        let approx = eval_bernstein_unchecked(&coeffs, &degree, &x);
        println!("n={n:<3} error at {x:?}: {:.3e}", (approx - exact).abs());
    }

    let data = generate_data(&spec, &DegreeVector::uniform(8, 2)?, 0.2, 1)?;
    let path = std::env::temp_dir().join("quadratic_sink_pairs.csv");
    data.save(&path)?;
    println!("wrote {} pairs to {}", data.len(), path.display());
    Ok(())
}
