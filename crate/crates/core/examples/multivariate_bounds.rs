//! Full, partial and gradient-based bounds on a two-dimensional closed-form
//! flow with f = x1^2 x2^3, plus the bounds for iterated application.

use bernstein_koopman::bernstein::DegreeVector;
use bernstein_koopman::bounds::{BoundContext, IterVariant};
use bernstein_koopman::dynamics::expr::observable_from_expr;
use bernstein_koopman::dynamics::{builtin, flow_map};

fn main() -> bernstein_koopman::error::Result<()> {
    let map = flow_map(&builtin("product_decay_2d")?)?;
    let f = observable_from_expr("x1^2*x2^3", 2)?;
    let ctx = BoundContext::new(&map, &f);
    let l = ctx.lipschitz();
    println!("L = {:.4}, partial L = {:.4?}", l.full, l.partial);
    println!("{:>6} {:>10} {:>10} {:>10}", "n", "T3", "T4", "T5");
    for n in [10, 40, 160, 640] {
        let d = DegreeVector::uniform(n, 2)?;
        println!("{n:>6} {:>10.4} {:>10.4} {:>10.4}", ctx.t3(&d).value, ctx.t4(&d).value, ctx.t5(&d)?.value);
    }
    let d = DegreeVector::uniform(20, 2)?;
    for k in 1..=3 {
        println!(
            "k={k}: T6 full {:.4}, partial {:.4}, gradient {:.4}; geometric alternative {:.4}",
            ctx.t6(&d, k, IterVariant::Full)?.value,
            ctx.t6(&d, k, IterVariant::Partial)?.value,
            ctx.t6(&d, k, IterVariant::C1)?.value,
            ctx.app_a(&d, k).value
        );
    }
    Ok(())
}
