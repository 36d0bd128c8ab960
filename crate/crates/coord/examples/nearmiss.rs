use coord::{preset_scenario, run_coordination};
use netchan::{ChannelProfile, Jitter, LinkSettings, LossModel};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let delay_ms: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    let plr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let scenario = preset_scenario("harbor").unwrap();
    let profile = ChannelProfile::emulated(
        "probe",
        LinkSettings {
            delay_ns: (delay_ms * 1e6) as u64,
            jitter: Jitter::None,
            loss: LossModel::Bernoulli { p: plr },
        },
    );
    let dir = std::path::PathBuf::from(format!("/tmp/nearmiss_{delay_ms}_{plr}"));
    let (stats, _) = run_coordination(&scenario, &profile, 1, 2000, Some(&dir), false).unwrap();
    println!("cs={} collisions={} out={}", stats.cs_total, stats.collision_count, dir.display());
}
