//! Uniform error bounds for the scalar logistic flow and f(x) = x^2/2,
//! against the measured error on a dense grid.

use bernstein_koopman::bernstein::{eval_bernstein_unchecked, DegreeVector, LatticeGrid};
use bernstein_koopman::bounds::BoundContext;
use bernstein_koopman::domain::BoxDomain;
use bernstein_koopman::dynamics::expr::observable_from_expr;
use bernstein_koopman::dynamics::{builtin, flow_map};
use bernstein_koopman::koopman::lattice_images;

fn main() -> bernstein_koopman::error::Result<()> {
    let map = flow_map(&builtin("scalar_logistic")?)?;
    let f = observable_from_expr("x1^2/2", 1)?;
    let ctx = BoundContext::new(&map, &f);
    let grid_pts = BoxDomain::unit(1).grid(1000);
    println!("{:>5} {:>12} {:>12} {:>12}", "n", "measured", "T2", "T1");
    for n in [10, 20, 50, 100, 200, 400] {
        let degree = DegreeVector::uniform(n, 1)?;
        let images = lattice_images(&map, &LatticeGrid::new(degree.clone()))?;
        let coeffs: Vec<f64> = images.iter().map(|y| f.eval(y)).collect();
        let measured = grid_pts
            .iter()
            .map(|x| (eval_bernstein_unchecked(&coeffs, &degree, x) - f.eval(&map.eval(x))).abs())
            .fold(0.0, f64::max);
        println!(
            "{n:>5} {measured:>12.3e} {:>12.3e} {:>12.3e}",
            ctx.t2(n)?.value,
            ctx.t1(n)?.value
        );
    }
    Ok(())
}
