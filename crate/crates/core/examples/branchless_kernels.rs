//! The selection kernels on small inputs.

use layered_mcts::kernels::{
    any_unvisited, max_index, random_untried, select_arith, select_mask, uct_value, UctParams,
    UNVISITED_BONUS,
};

fn main() {
    let params = UctParams::new(1.0).expect("positive");
    for (a, b, cond) in [(7i8, -3i8, true), (7, -3, false), (i8::MIN, i8::MAX, true)] {
        println!(
            "select({a}, {b}, {cond}): arith={} mask={}",
            select_arith(a, b, cond),
            select_mask(a, b, cond)
        );
    }

    let visits = [4u32, 0, 9, 0];
    let values = [0.4, 0.0, 0.7, 0.0];
    println!("any_unvisited({visits:?}) = {}", any_unvisited(&visits));
    for draw in [0.1, 0.6] {
        println!(
            "random_untried(draw={draw}) = {}",
            random_untried(&visits, draw)
        );
    }

    let parent: u32 = visits.iter().sum();
    let scores: Vec<f64> = visits
        .iter()
        .zip(values)
        .map(|(&n, v)| uct_value(v, n, parent, params).expect("valid inputs"))
        .collect();
    let shown: Vec<String> = scores
        .iter()
        .map(|&s| {
            if s == UNVISITED_BONUS {
                "unvisited".to_string()
            } else {
                format!("{s:.3}")
            }
        })
        .collect();
    println!("uct scores [{}]", shown.join(", "));
    println!("argmax {}", max_index(&scores).expect("non-empty"));
}
