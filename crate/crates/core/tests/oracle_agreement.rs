//! k-fold symbolic loop functional versus explicit value iteration on random programs.

use std::time::Instant;

use prexpect_core::corpus::{random_program, CorpusConfig};
use prexpect_core::oracle::{value_iteration, StateBox, StateView};
use prexpect_core::{iterate_functional, normalize};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn symbolic_iterates_match_value_iteration() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    let cfg = CorpusConfig::default();
    let wide = 1 << 20;
    for _ in 0..20 {
        let p = random_program(&mut rng, &cfg);
        let np = normalize(&p).unwrap();
        let vars = p.state_vars();
        let states: Vec<Vec<i64>> = (0..20)
            .map(|_| vars.iter().map(|_| rng.gen_range(-10..=10)).collect())
            .collect();
        let bounds = StateBox::uniform(vars.len(), -wide, wide);
        for k in 1..=4 {
            let sym = iterate_functional(&np, &p.post, k);
            let oracle = value_iteration(&p, k, &bounds, &states).unwrap();
            for s in &states {
                let view = StateView { vars: &vars, values: s };
                if !np.domain.contains(&view) {
                    continue;
                }
                assert_eq!(sym.evaluate(&view), oracle[s], "k={k} state={s:?}\n{p:?}\n{sym}");
            }
        }
    }
    eprintln!("elapsed {:?}", start.elapsed());
}
