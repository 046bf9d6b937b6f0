//! Capacity scores for a small stack and their partition into disjoint,
//! capacity-ordered groups.
//!
//! Run with: cargo run --example capacity_partition

use endurq::metrics::{aggregate_stack, capacity_share, compute_capacity, partition_systems, SystemMetrics, Window};

fn system(id: &str, p: f64, u: f64, d: f64, dt: f64, s: f64) -> SystemMetrics {
    SystemMetrics {
        system_id: id.into(),
        throughput: p,
        utilization: u,
        service_demand: d,
        data_density: dt,
        service_time: s,
        window: Window::new(0.0, 60.0).unwrap(),
    }
}

fn main() -> endurq::Result<()> {
    let stack = vec![
        system("gateway", 120.0, 0.35, 0.003, 400.0, 0.003),
        system("parser", 110.0, 0.60, 0.005, 380.0, 0.005),
        system("enricher", 90.0, 0.85, 0.009, 300.0, 0.010),
        system("indexer", 60.0, 0.95, 0.016, 210.0, 0.015),
        system("archive", 20.0, 0.40, 0.020, 70.0, 0.020),
    ];
    let totals = aggregate_stack(&stack)?;
    println!(
        "stack totals: P = {}, U = {:.3}, D_total = {:.3}",
        totals.throughput, totals.utilization, totals.service_demand
    );

    let scores = stack
        .iter()
        .map(|m| compute_capacity(m, &totals))
        .collect::<endurq::Result<Vec<_>>>()?;
    for s in &scores {
        println!(
            "  {:<9} C = {:.4}  share {:.3}",
            s.system_id,
            s.c,
            capacity_share(&scores, &s.system_id)?
        );
    }

    let part = partition_systems(&scores, 3)?;
    for (i, group) in part.sets.iter().enumerate() {
        let ids: Vec<&str> = group.iter().map(|s| s.system_id.as_str()).collect();
        println!("group {i}: {ids:?} (sup {:.4})", part.sup(i).unwrap());
    }
    println!("degenerate boundaries: {:?}", part.degenerate_boundaries);
    Ok(())
}
