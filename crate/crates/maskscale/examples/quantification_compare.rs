//! Comparing automated quantification against a manual reference.
//!
//! Each record carries three per-stack measurements (scar volume in ml,
//! scar percentage, microvascular-obstruction percentage) for one method.
//! Three comparison options turn those into per-metric scores:
//!
//!   option 1 — share of stacks whose value passes a threshold test;
//!   option 2 — ratio of summed automated to summed manual values;
//!   option 3 — 100 minus the summed absolute difference, relative to the
//!              manual total (clamped to [0, 100]).
//!
//! The tally then counts, over all 9 option x metric slots, how often each
//! network holds the best score (ties credit everyone).
//!
//! Run with: cargo run --example quantification_compare

use maskscale::quantcompare::{build_reports, tally, OptionThresholds, QuantRecord, METRIC_NAMES};

/// Synthetic per-stack measurements: `bias` scales every automated value,
/// `wobble` adds a per-stack disturbance, so each network misses the manual
/// reference in its own way.
fn records() -> Vec<QuantRecord> {
    let mut rows = Vec::new();
    let networks: [(&str, f64, f64); 4] = [
        ("net_a", 0.80, 3.0), // systematic under-estimator
        ("net_b", 1.25, 2.0), // systematic over-estimator
        ("net_c", 1.02, 6.0), // nearly unbiased but noisy
        ("net_d", 0.98, 1.0), // close on every axis
    ];
    for stack in 0..12u32 {
        let s = f64::from(stack);
        let scar_ml = 40.0 + 6.0 * s;
        let scar_pct = 18.0 + 1.5 * s;
        let mo_pct = 0.2 + 0.05 * s;
        rows.push(QuantRecord {
            stack_id: format!("stack{stack:02}"),
            method: "manual".to_string(),
            scar_ml,
            scar_pct,
            mo_pct,
        });
        for (name, bias, wobble) in networks {
            let w = wobble * if stack % 2 == 0 { 1.0 } else { -1.0 };
            rows.push(QuantRecord {
                stack_id: format!("stack{stack:02}"),
                method: name.to_string(),
                scar_ml: (scar_ml * bias + w).max(0.0),
                scar_pct: (scar_pct * bias + w / 2.0).clamp(0.0, 100.0),
                mo_pct: (mo_pct * bias).clamp(0.0, 100.0),
            });
        }
    }
    rows
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = records();
    println!(
        "{} records: 12 stacks, 1 manual reference, 4 networks",
        records.len()
    );

    let thresholds = OptionThresholds::default();
    let reports = build_reports(&records, &thresholds)?;

    for report in &reports {
        println!("\noption {}:", report.option);
        print!("  {:<10}", "metric");
        for n in &report.networks {
            print!("{n:>8}");
        }
        println!();
        for (row, metric) in report.values.iter().zip(METRIC_NAMES) {
            print!("  {metric:<10}");
            for v in row {
                match v {
                    Some(v) => print!("{v:>8.1}"),
                    None => print!("{:>8}", "-"),
                }
            }
            println!();
        }
    }

    let tally = tally(&[&reports[0], &reports[1], &reports[2]])?;
    println!("\nwinner tally over the 9 option x metric slots:");
    for ((network, wins), fraction) in tally.networks.iter().zip(&tally.wins).zip(&tally.fractions)
    {
        println!("  {network:<8} {wins} wins  ({:.1}%)", fraction * 100.0);
    }
    println!("\nslot detail:");
    for slot in &tally.slots {
        println!(
            "  option {} / {:<9} best {:>6.1} by {:?}",
            slot.option, slot.metric, slot.best, slot.winners
        );
    }
    Ok(())
}
