use coord::{preset_scenario, run_coordination};
use netchan::{ChannelProfile, Jitter, LinkSettings, LossModel};
use rayon::prelude::*;

fn static_profile(plr: f64, delay_ms: f64) -> ChannelProfile {
    ChannelProfile::emulated(
        &format!("static-plr{plr}-d{delay_ms}"),
        LinkSettings {
            delay_ns: (delay_ms * 1e6) as u64,
            jitter: Jitter::None,
            loss: LossModel::Bernoulli { p: plr },
        },
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario_name = args.get(1).map(|s| s.as_str()).unwrap_or("harbor");
    let min_cs: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let seeds: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scenario = preset_scenario(scenario_name).unwrap();

    let mut cells = Vec::new();
    for plr in [0.0, 0.1] {
        for delay in [0.0, 10.0, 50.0, 100.0] {
            cells.push((plr, delay));
        }
    }
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(plr, delay)| {
            let profile = static_profile(plr, delay);
            let mut cs = 0u64;
            let mut col = 0u64;
            let mut virt = 0.0;
            for seed in 1..=seeds {
                match run_coordination(&scenario, &profile, seed, min_cs, None, false) {
                    Ok((stats, _)) => {
                        cs += stats.cs_total;
                        col += stats.collision_count;
                        virt += stats.virtual_duration_ns as f64 / 1e9;
                    }
                    Err(e) => {
                        println!("plr={plr} delay={delay} seed={seed}: ERROR {e}");
                    }
                }
            }
            (plr, delay, cs, col, virt)
        })
        .collect();
    for (plr, delay, cs, col, virt) in results {
        println!(
            "{scenario_name} plr={plr:<4} delay={delay:<5} cs={cs:<7} collisions={col:<4} P={:.6e} virt_avg={:.0}s",
            col as f64 / cs.max(1) as f64, virt / seeds as f64
        );
    }
}
