//! Builds a small layered store and dumps each layer plus the snapshot.

use layered_mcts::{make_slippery_chain_env, search, Mdp, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = make_slippery_chain_env(3, 0.3)?;
    let cfg = SearchConfig::new(12, 3, env.max_branching(), 5);
    let out = search(env.start(), &env, &cfg)?;
    let store = &out.store;

    for (depth, layer) in store.layers().iter().enumerate() {
        println!(
            "layer {depth}: {} / {} states, {} / {} actions",
            layer.num_states(),
            layer.state_capacity(),
            layer.num_actions(),
            layer.action_capacity()
        );
        for s in 0..layer.num_states() {
            println!(
                "  state {s} {} visits={} actions={:?}",
                layer.state(s),
                layer.state_visits(s),
                layer.child_action_column(s, store.num_actions())
            );
        }
        for a in 0..layer.num_actions() {
            println!(
                "  action {a} visits={} value={:.3} children={:?}",
                layer.action_visits(a),
                layer.action_value(a),
                layer.child_state_column(a)
            );
        }
    }
    store.check_layout()?;
    println!("\n{}", store.snapshot());
    Ok(())
}
