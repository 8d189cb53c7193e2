//! Print the operator identity residuals for a range of rule sizes.
//!
//! ```text
//! cargo run --example operator_identities -- 2 30
//! ```

use lobatto::operators::CollocationOperators;

fn main() -> lobatto::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let lo = args.first().copied().unwrap_or(2);
    let hi = args.get(1).copied().unwrap_or(30);
    for n in lo..=hi {
        let ops = CollocationOperators::new(n)?;
        let res = ops.identity_residuals();
        let (worst, value) = res
            .named()
            .into_iter()
            .fold(("", 0.0), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        println!("N = {n:3}  max residual {value:.3e} ({worst})  cond(B) {:.3e}", res.b_condition);
    }
    Ok(())
}
