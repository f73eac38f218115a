//! Compare the weighted objective with the fuzzy plan-quality ranking.

use adplan::{algebraic_fitness, build_ranking_system, fuzzy_fitness, PlanMetrics, Weights};

fn main() {
    let fs = build_ranking_system();
    let w = Weights::default();
    let n = 8;
    println!("{:>3} {:>3} {:>3} {:>9} {:>7}", "l", "o", "g", "weighted", "fuzzy");
    for (l, o, g) in [(8, 0, 0), (8, 1, 1), (8, 3, 2), (7, 0, 0), (5, 0, 0), (5, 4, 4), (2, 0, 0), (0, 0, 0)] {
        let m = PlanMetrics { l, o, g, n };
        let fuzzy = fuzzy_fitness(&m, &fs).expect("ranking system covers its inputs");
        println!("{l:>3} {o:>3} {g:>3} {:>9} {fuzzy:>7.3}", algebraic_fitness(&m, &w));
    }
}
