//! Bernstein basis, the operator B_n on a tensor lattice, partial
//! application along one axis, and the Bernstein/monomial change of basis.

use bernstein_koopman::bernstein::{
    basis_vector, bernstein_vector, conversion_matrix, eval_bernstein_operator, monomial_vector,
    partial_bernstein_operator, DegreeVector, LatticeGrid,
};

fn main() -> bernstein_koopman::error::Result<()> {
    let b = basis_vector(4, 0.3);
    println!("b_4,k(0.3) = {b:.4?}  (sum {:.15})", b.iter().sum::<f64>());

    let degree = DegreeVector::new(vec![6, 4])?;
    let grid = LatticeGrid::new(degree.clone());
    let f = |x: &[f64]| (3.0 * x[0]).sin() * x[1] * x[1];
    let samples = grid.sample(f);
    let x = [0.35, 0.8];
    let approx = eval_bernstein_operator(&samples, &grid, &x)?;
    println!("B_n f{x:?} = {approx:.6}, f = {:.6}", f(&x));

    // Contracting axis 0 leaves a univariate tensor along axis 1.
    let partial = partial_bernstein_operator(&samples, &grid, 0, x[0])?;
    let rest = partial.contract(1, x[1])?.scalar().expect("fully contracted");
    println!("axis-by-axis contraction agrees: {:.2e}", (rest - approx).abs());

    let c = conversion_matrix(&degree);
    let err = (&c * monomial_vector(&degree, &x) - bernstein_vector(&degree, &x)).amax();
    println!("C X(x) - B(x): {err:.2e} with N = {}", degree.basis_size());
    Ok(())
}
