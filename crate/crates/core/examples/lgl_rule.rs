//! Nodes and weights of the N-point LGL rule, with a quadrature check.
//!
//! ```text
//! cargo run --example lgl_rule -- 7
//! ```

use lobatto::basis::lgl_rule;

fn main() -> lobatto::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(7);
    let rule = lgl_rule(n)?;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        println!("{x:+.16e}  {w:.16e}");
    }
    // exact for polynomials up to degree 2N - 3
    let deg = 2 * n as i32 - 4;
    let q: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(deg)).sum();
    println!("integral of t^{deg}: {q:.16e} (exact {:.16e})", 2.0 / (deg as f64 + 1.0));
    Ok(())
}
