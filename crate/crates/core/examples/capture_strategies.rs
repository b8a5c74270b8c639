//! Fragment counts of the four capture strategies on every builtin scene.
//!
//!     cargo run --example capture_strategies -- 128

use fhv::bench::strategy_table;
use fhv::raster::Execution;
use fhv::scene::BuiltinScene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let res: u32 = std::env::args().nth(1).map_or(Ok(128), |a| a.parse())?;
    println!("{:<14} {:>10} {:>10} {:>10} {:>10} {:>10}", "scene", "one-view", "normal", "three-way", "three-sep", "slack");
    for scene in BuiltinScene::ALL {
        let (_, rel) = strategy_table(&scene.build(), res, Execution::Parallel)?;
        println!(
            "{:<14} {:>10} {:>10} {:>10} {:>10} {:>10.0}  {}",
            scene.name(),
            rel.one_view,
            rel.normal_space,
            rel.three_way,
            rel.three_separate,
            rel.slack,
            if rel.all_hold() { "ok" } else { "VIOLATED" }
        );
    }
    Ok(())
}
