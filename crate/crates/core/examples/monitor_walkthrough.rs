//! Feeds a hand-written observation sequence through the growth monitor and
//! an endurance queue, printing every decision.
//!
//! Run with: cargo run --example monitor_walkthrough

use endurq::growth::{Decision, MonitorConfig, MonitorState, Observation};
use endurq::heatmap::{Anchor, PlacementPoint};
use endurq::queue::EnduranceQueue;

fn main() -> endurq::Result<()> {
    let placement = PlacementPoint {
        boundary_index: 0,
        bucket_index: 0,
        anchored: true,
    };
    let mut queue = EnduranceQueue::new(1 << 20, placement)?;
    let mut state = MonitorState::with_anchor(Anchor::for_placement(&placement));
    let config = MonitorConfig::default();

    // (density, next density, demand, utilization ratio)
    let script = [
        (4.0, 2.0, 0.0, 0.2),
        (2.0, 6.0, 0.0, 0.3),
        (6.0, 3.0, 0.7, 0.4),
        (3.0, 1.0, 0.7, 0.5),
        (1.0, 5.0, 0.7, 0.5),
        (5.0, 2.0, 0.7, 0.6),
        (2.0, 1.0, 1.2, 0.7),
        (9.0, 4.0, 1.2, 0.8),
        (4.0, 2.0, 1.2, 1.0),
        (2.0, 1.0, 1.2, 0.9),
    ];
    println!(
        "{:>4} {:>16} {:>6} {:>8} {:>6}",
        "step", "decision", "depth", "level", "trace"
    );
    for (i, &(density, next_density, demand, ratio)) in script.iter().enumerate() {
        let d = state.step(
            &config,
            &Observation {
                density,
                next_density,
                demand,
                ratio,
            },
        );
        match d {
            Decision::Migrate => {
                queue.migrate(placement, &state.anchor())?;
                state.rebind(Anchor::for_placement(&placement));
            }
            _ => queue.apply_growth(&d),
        }
        let args = state
            .trace_args()
            .map_or("-".to_owned(), |(m, n)| format!("A({m},{n})"));
        println!(
            "{i:>4} {:>16} {:>6} {:>8} {:>6}",
            format!("{d:?}"),
            queue.depth(),
            state.demand_level(),
            args
        );
    }
    println!("migrations: {}", queue.stats().migrations);
    Ok(())
}
