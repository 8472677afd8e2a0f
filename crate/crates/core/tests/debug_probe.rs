//! Temporary diagnostic: watch the agent lose as second player.

use visavis::analysis;
use visavis::game::{self, GameId};
use visavis::oracle::{SolveBudget, Solver};
use visavis::search::{self, SearchConfig};

#[test]
#[ignore]
fn probe_second_player_losses() {
    let params = visavis::neural::load(std::path::Path::new("/tmp/pilot-base60k/checkpoint.vvis"))
        .unwrap();
    let mut solver = Solver::new(SolveBudget::default());
    let cfg = SearchConfig::for_game(GameId::Ttt3);
    use rand::Rng;

    let mut shown = 0;
    for g in 0..200u64 {
        let mut rng = visavis::rng::rng_for(555, 99, g);
        let mut state = game::initial_state(GameId::Ttt3);
        let mut log: Vec<String> = Vec::new();
        let outcome = loop {
            if let Some(o) = game::terminal_outcome(&state) {
                break o;
            }
            let agent_turn = state.ply() % 2 == 1;
            let action = if agent_turn {
                let tree = search::run_search(&state, &params, &cfg, &mut rng).unwrap();
                let pi = search::search_policy(&tree, 0.0).unwrap();
                let a = pi
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                    .map(|(a, _)| a)
                    .unwrap();
                let solved = solver.solve(&state).unwrap();
                let pred =
                    visavis::neural::forward(&params, &game::encode(&state), &game::legal_mask(&state))
                        .unwrap();
                let edges: Vec<String> = tree
                    .root_edges()
                    .iter()
                    .map(|e| format!("a{} N{} Q{:+.2} P{:.2}", e.action, e.n, e.q, e.p))
                    .collect();
                log.push(format!(
                    "agent at \"{}\" oracle_v={} best={:?} picked a{} net_v={:+.2}\n    {}",
                    state.key(),
                    solved.value,
                    solved.best_actions,
                    a,
                    pred.v,
                    edges.join(" | ")
                ));
                a
            } else {
                let solved = solver.solve(&state).unwrap();
                solved.best_actions[rng.gen_range(0..solved.best_actions.len())]
            };
            state = game::apply_action(&state, action).unwrap();
        };
        if outcome.z == 1 && shown < 3 {
            shown += 1;
            println!("=== agent (O) lost game {g} ===");
            for line in &log {
                println!("{line}");
            }
            println!("final: {}", state.key());
        }
    }
    let _ = analysis::misalignment(&[1.0], &[1.0]);
}
