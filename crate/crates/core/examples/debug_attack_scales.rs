//! Prints per-client anomaly distances, trust weights, and reputations per
//! round for one adversarial run. Diagnostic scratch tool.

use fedsim_core::adversary::{assign_attacks, flip_labels, AttackKind};
use fedsim_core::config::ScenarioConfig;
use fedsim_core::data::partition_dirichlet;
use fedsim_core::hra::ReputationState;
use fedsim_core::model::ModelParams;
use fedsim_core::rng::{sub_seed, tag};
use fedsim_core::simulation::{
    evaluate_model, prepare_data, run_round, AggregatorChoice, ClientData, PreparedData,
};

fn main() {
    let path = std::env::args().nth(1).unwrap_or("scenarios/adversarial.toml".into());
    let cfg = ScenarioConfig::parse_file(std::path::Path::new(&path), &[]).unwrap();
    let data = prepare_data(&cfg).unwrap();
    let run: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);

    let (train, test) = match &data {
        PreparedData::Synthetic(spec) => {
            let seed = sub_seed(cfg.seed, &[tag::DATA, run]);
            fedsim_core::data::generate_synthetic(spec, seed).unwrap()
        }
        _ => panic!("synthetic only"),
    };

    let pseed = sub_seed(cfg.seed, &[tag::PARTITION, run]);
    let plan = partition_dirichlet(&train.y, cfg.clients, cfg.partition.alpha, pseed).unwrap();
    let rseed = sub_seed(cfg.seed, &[tag::ROSTER, run]);
    let roster = assign_attacks(
        cfg.clients,
        cfg.attack.malicious_fraction,
        &cfg.attack.kinds,
        rseed,
    )
    .unwrap();

    println!("roster:");
    for (id, part) in plan.assignments.iter().enumerate() {
        let pos = part.iter().filter(|&&i| train.y[i] == 1.0).count();
        println!(
            "  client {id}: {:>14} n={} pos_frac={:.2}",
            roster.kind(id).name(),
            part.len(),
            pos as f64 / part.len() as f64
        );
    }

    let clients: Vec<ClientData> = plan
        .assignments
        .iter()
        .enumerate()
        .map(|(id, indices)| {
            let subset = train.subset(indices);
            let y = if roster.kind(id) == AttackKind::LabelFlipping {
                flip_labels(&subset.y)
            } else {
                subset.y
            };
            ClientData { x: subset.x, y }
        })
        .collect();

    let mut hra_cfg = cfg.hra;
    hra_cfg.geomed = cfg.geomed;
    let aggregator = AggregatorChoice::Hra(hra_cfg);
    let attack_cfg = cfg.attack.attack_config();
    let mut global = ModelParams::zeros(train.n_features());
    let mut state = ReputationState::default();

    for round in 0..cfg.rounds {
        let (next, next_state, diag) = run_round(
            &global, &clients, &roster, &cfg.train, &attack_cfg, &aggregator, &state, cfg.seed,
            run, round,
        )
        .unwrap();
        global = next;
        state = next_state;
        let d = diag.unwrap();
        let m = evaluate_model(&global, &test).unwrap();
        println!("round {round:>2} acc={:.4} |w|={:.2}", m.accuracy, global.w.dot(&global.w).sqrt());
        for id in 0..cfg.clients {
            println!(
                "    c{id} {:>14} delta={:>8.3} phi={:.3} rep={:.3}",
                roster.kind(id).name(),
                d.anomaly_distances[id],
                d.trust_weights[id],
                state.reputations[&id]
            );
        }
    }
}
