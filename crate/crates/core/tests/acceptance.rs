use std::process::ExitCode;

use pwldyn::acceptance::{criterion_ids, run};

fn main() -> ExitCode {
    let mut failed = 0;
    for id in criterion_ids() {
        let r = run(id).expect("listed criterion");
        println!("{}", r.line());
        if !r.pass {
            failed += 1;
        }
    }
    println!("{failed} of 12 criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
