//! Builds a heat map from a generated trace, overlays peak demand, picks the
//! queue position and writes CSV and PPM renderings.
//!
//! Run with: cargo run --example heatmap_export [OUT_DIR]

use endurq::heatmap::{build_heatmap, export_heatmap, overlay_peak_demand, select_queue_position, ExportFormat};
use endurq::metrics::{partition_systems, CapacityScore};
use endurq::sim::{generate_workload, WorkloadKind, WorkloadProfile};
use endurq::trace::EventTrace;

fn main() -> endurq::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().display().to_string());
    let ids: Vec<String> = ["edge", "router", "worker", "sink"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    // one bursty source per system, each with its own seed
    let mut events = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let profile = WorkloadProfile {
            source: id.clone(),
            ..WorkloadProfile::new(
                WorkloadKind::Bursty {
                    base_rate: 1.0 + i as f64,
                    burst_rate: 20.0 / (i + 1) as f64,
                    burst_duration: 3.0,
                    period: 15.0,
                },
                60.0,
                i as u64,
            )
        };
        events.extend(generate_workload(&profile)?.events);
    }
    let trace = EventTrace::new(events)?;
    let hm = build_heatmap(&trace, 2.0, &ids)?;
    println!(
        "{} items in {} buckets x {} systems",
        hm.total(),
        hm.buckets,
        hm.systems.len()
    );

    let demand: Vec<Vec<f64>> = hm
        .density
        .iter()
        .map(|row| row.iter().map(|&d| d as f64 * 0.01).collect())
        .collect();
    let hm = overlay_peak_demand(&hm, &demand, 0.9)?;
    let peaks = hm.peak_mask.iter().flatten().filter(|&&p| p).count();
    println!("{peaks} peak cells");

    let scores: Vec<CapacityScore> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| CapacityScore {
            system_id: id.clone(),
            c: i as f64,
        })
        .collect();
    let part = partition_systems(&scores, 2)?;
    let p = select_queue_position(&hm, &part)?;
    println!("queue at boundary {} in bucket {}", p.boundary_index, p.bucket_index);

    let csv = std::path::Path::new(&out_dir).join("heatmap.csv");
    let ppm = std::path::Path::new(&out_dir).join("heatmap.ppm");
    std::fs::write(&csv, export_heatmap(&hm, ExportFormat::Csv))?;
    std::fs::write(&ppm, export_heatmap(&hm, ExportFormat::Ppm))?;
    println!("wrote {} and {}", csv.display(), ppm.display());
    Ok(())
}
