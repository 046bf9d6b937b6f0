//! Saturating Ackermann values and the reduction traces that drive queue
//! growth.
//!
//! Run with: cargo run --example ackermann_growth

use endurq::growth::{ackermann, ackermann_trace, long_run_growth_index, DEFAULT_CAP};

fn main() {
    println!("A(m, n) with cap {DEFAULT_CAP}:");
    for m in 0..=4 {
        let row: Vec<String> = (0..=4).map(|n| ackermann(m, n, DEFAULT_CAP).to_string()).collect();
        println!("  m={m}: {}", row.join(", "));
    }

    let t = ackermann_trace(2, 2, DEFAULT_CAP, 100);
    let steps: Vec<String> = t.steps.iter().map(|s| s.to_string()).collect();
    println!("\nA(2,2) resolves through {} steps: {}", t.steps.len(), steps.join(" "));

    let t = ackermann_trace(4, 2, DEFAULT_CAP, 50);
    println!(
        "A(4,2): first 50 steps end at {}, truncated = {}, final {}",
        t.last().unwrap(),
        t.truncated,
        ackermann(4, 2, DEFAULT_CAP)
    );

    // growth values seen in three windows
    let history = vec![vec![2, 3], vec![4], vec![5, 6, 7]];
    println!(
        "\nlong-run growth index of {history:?}: {}",
        long_run_growth_index(&history, DEFAULT_CAP)
    );
}
