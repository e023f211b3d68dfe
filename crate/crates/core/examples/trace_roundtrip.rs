//! Traces and reports survive a trip through their CSV files.

use mirage::engine::{run, SimConfig};
use mirage::quantifier::GoalMode;
use mirage::report::{parse_trend_csv, trend_csv, write_report_files, REPORT_FILES};
use mirage::trace::{load_trace, DiscountCycle};

fn main() {
    let dir = std::env::temp_dir().join(format!("mirage-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let trace = DiscountCycle {
        steps: 12,
        period: 6,
        ..DiscountCycle::default()
    }
    .generate()
    .unwrap();
    let path = dir.join("trace.csv");
    trace.write(&path).unwrap();
    print!("{}", std::fs::read_to_string(&path).unwrap());
    let loaded = load_trace(&path).unwrap();
    assert_eq!(loaded, trace);

    let report = run(&loaded, &SimConfig::new(20, GoalMode::FlatInventory, 9)).unwrap();
    let text = trend_csv(&report.attacker_view);
    assert_eq!(parse_trend_csv(&text).unwrap(), report.attacker_view);
    write_report_files(&report, &dir).unwrap();
    println!("\nwrote {} files to {}", REPORT_FILES.len(), dir.display());
    print!(
        "{}",
        std::fs::read_to_string(dir.join("summary.txt")).unwrap()
    );
    std::fs::remove_dir_all(&dir).unwrap();
}
