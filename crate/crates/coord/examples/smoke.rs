use coord::{preset_scenario, run_coordination};
use netchan::builtin_profile;
use std::path::Path;

fn main() {
    let scenario = preset_scenario("warehouse").unwrap();
    let profile = builtin_profile("ideal").unwrap();
    let (stats, _) = run_coordination(&scenario, &profile, 1, 1000, Some(Path::new("/tmp/trace1")), false).unwrap();
    println!("cs={} collisions={}", stats.cs_total, stats.collision_count);
}
