use coord::{preset_scenario, run_coordination};
use netchan::{ChannelProfile, Jitter, LinkSettings, LossModel};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario_name = args.get(1).map(|s| s.as_str()).unwrap_or("harbor");
    let delay_ms: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let plr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1);
    let min_cs: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let out: Option<std::path::PathBuf> = args.get(6).map(Into::into);
    let scenario = preset_scenario(scenario_name).unwrap();
    let profile = ChannelProfile::emulated(
        "probe",
        LinkSettings {
            delay_ns: (delay_ms * 1e6) as u64,
            jitter: Jitter::None,
            loss: LossModel::Bernoulli { p: plr },
        },
    );
    match run_coordination(&scenario, &profile, seed, min_cs, out.as_deref(), false) {
        Ok((stats, _)) => println!("cs={} collisions={}", stats.cs_total, stats.collision_count),
        Err(e) => println!("ERROR: {e}"),
    }
}
