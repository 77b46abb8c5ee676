//! pass@k (floating point and exact), AUROC of an uncertainty score, and
//! nearest-rank percentiles.
//!
//! cargo run --example metrics

use entropy_tree::eval::{auroc, pass_at_k, pass_at_k_exact, percentile};

fn main() -> entropy_tree::Result<()> {
    println!("pass@k for n=20 samples with c correct:");
    println!("{:>4} {:>10} {:>10} {:>10}", "c", "k=1", "k=10", "k=20");
    for c in [0, 1, 3, 10] {
        println!(
            "{c:>4} {:>10.4} {:>10.4} {:>10.4}",
            pass_at_k(20, c, 1)?,
            pass_at_k(20, c, 10)?,
            pass_at_k(20, c, 20)?
        );
    }
    println!("exact pass@10 with n=20, c=3: {}", pass_at_k_exact(20, 3, 10)?);

    // (uncertainty, answered incorrectly)
    let scores = [(0.9, true), (0.7, true), (0.7, false), (0.2, false), (0.1, false), (0.5, true)];
    println!("\nAUROC of the uncertainty score: {:.4}", auroc(&scores)?);

    let pool: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
    for q in [50.0, 80.0, 90.0, 100.0] {
        println!("q{q:<4} percentile of 0.1..1.0: {:.1}", percentile(&pool, q)?);
    }
    Ok(())
}
