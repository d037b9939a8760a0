use std::process::ExitCode;
use std::time::Instant;

use bbs_core::acceptance::{selftest, SEED};

fn main() -> ExitCode {
    let start = Instant::now();
    let report = selftest(SEED, |c| {
        println!("{}", c.line());
        print!("{}", c.details());
    });
    let c10 = report.last().expect("ten criteria");
    println!("{}", c10.checks.last().map(|c| format!("  10.{} {}", c.name, if c.pass { "pass" } else { "fail" })).unwrap_or_default());
    println!("summary:");
    for c in &report {
        println!("{}", c.line());
    }
    let secs = start.elapsed().as_secs_f64();
    println!("total wall time {secs:.1} s (limit 600 s)");
    let ok = report.iter().all(|c| c.pass_unwaived()) && secs < 600.0;
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
