//! Explicit-state reference semantics: the generator distributions of each
//! state and exact value iteration over the states reachable inside a box.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::linexpr::{Valuation, Var};
use crate::program::Program;
use crate::rational::{self, Rational};

/// An integer state: one value per state variable, in [`Program::state_vars`] order.
pub type State = Vec<i64>;

/// A finite-support sub-probability distribution over states.
pub type Distribution = BTreeMap<State, Rational>;

/// A state viewed as a valuation.
pub struct StateView<'a> {
    pub vars: &'a [Var],
    pub values: &'a [i64],
}

impl Valuation for StateView<'_> {
    fn value(&self, v: &Var) -> Rational {
        self.vars
            .iter()
            .position(|w| w == v)
            .map(|i| rational::int(self.values[i]))
            .unwrap_or_else(Rational::zero)
    }
}

/// The generators of the transition relation at one state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneratorSet {
    pub distributions: Vec<Distribution>,
}

impl GeneratorSet {
    /// True when no guard holds: the single zero distribution.
    pub fn is_terminal(&self) -> bool {
        self.distributions.len() == 1 && self.distributions[0].is_empty()
    }

    /// `min_Δ Σ Δ(s')·values(s')`, missing values counting as zero.
    pub fn min_expectation(&self, values: &BTreeMap<State, Rational>) -> Rational {
        self.distributions
            .iter()
            .map(|d| expectation(d, values))
            .min()
            .expect("a generator set is nonempty")
    }
}

pub fn expectation(d: &Distribution, values: &BTreeMap<State, Rational>) -> Rational {
    d.iter()
        .map(|(s, p)| values.get(s).map(|v| p * v).unwrap_or_else(Rational::zero))
        .sum()
}

fn state_string(vars: &[Var], values: &[i64]) -> String {
    let parts: Vec<String> = vars.iter().zip(values).map(|(v, x)| format!("{v}={x}")).collect();
    parts.join(",")
}

/// One distribution per command enabled at `s`, with the probability of
/// coinciding successors accumulated; `{0̄}` when no command is enabled.
pub fn build_generators(p: &Program, s: &[i64]) -> Result<GeneratorSet> {
    let vars = p.state_vars();
    let view = StateView {
        vars: &vars,
        values: s,
    };
    let mut distributions = Vec::new();
    for c in &p.commands {
        if !c.guard.eval(&view) {
            continue;
        }
        let mut d = Distribution::new();
        for b in &c.branches {
            let next: State = vars
                .iter()
                .zip(s)
                .map(|(v, &x)| match b.assignment.get(v) {
                    None => Ok(x),
                    Some(e) => {
                        let r = e.eval(&view);
                        match (r.is_integer(), r.to_integer().to_i64()) {
                            (true, Some(n)) => Ok(n),
                            _ => Err(CoreError::NonIntegerState {
                                state: format!("{} -> {v}={r}", state_string(&vars, s)),
                            }),
                        }
                    }
                })
                .collect::<Result<_>>()?;
            *d.entry(next).or_insert_with(Rational::zero) += &b.probability;
        }
        distributions.push(d);
    }
    if distributions.is_empty() {
        distributions.push(Distribution::new());
    }
    Ok(GeneratorSet { distributions })
}

/// Inclusive per-variable bounds, in state-variable order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StateBox {
    pub bounds: Vec<(i64, i64)>,
}

impl StateBox {
    pub fn uniform(dims: usize, lo: i64, hi: i64) -> Self {
        StateBox {
            bounds: vec![(lo, hi); dims],
        }
    }

    pub fn contains(&self, s: &[i64]) -> bool {
        s.len() == self.bounds.len() && s.iter().zip(&self.bounds).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Every state of the box, in lexicographic order.
    pub fn states(&self) -> Vec<State> {
        let mut out = vec![Vec::new()];
        for &(lo, hi) in &self.bounds {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (lo..=hi).map(move |x| {
                        let mut t = s.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
        }
        out
    }
}

/// `X_horizon(s)` for each start `s`, where `X_0 = 0` and
/// `X_{k+1}(s) = β(s)` if no guard holds at `s`, else the minimum over the
/// generators of the expected `X_k` of the successor.
pub fn value_iteration(
    p: &Program,
    horizon: usize,
    bounds: &StateBox,
    starts: &[State],
) -> Result<BTreeMap<State, Rational>> {
    value_iteration_limited(p, horizon, bounds, starts, usize::MAX)
}

/// [`value_iteration`] that gives up with `StateLimit` once more than
/// `max_states` distinct states have been expanded.
pub fn value_iteration_limited(
    p: &Program,
    horizon: usize,
    bounds: &StateBox,
    starts: &[State],
    max_states: usize,
) -> Result<BTreeMap<State, Rational>> {
    let vars = p.state_vars();
    // layers[d]: states reachable in exactly d steps that still need a value.
    let mut layers: Vec<BTreeSet<State>> = vec![starts.iter().cloned().collect()];
    let mut generators: HashMap<State, GeneratorSet> = HashMap::new();
    for d in 0..horizon {
        let frontier: Vec<State> = layers[d]
            .iter()
            .filter(|s| !generators.contains_key(*s))
            .cloned()
            .collect();
        for s in &frontier {
            if !bounds.contains(s) {
                return Err(CoreError::StateBoxEscape {
                    state: state_string(&vars, s),
                });
            }
        }
        let built: Vec<(State, GeneratorSet)> = frontier
            .into_par_iter()
            .map(|s| build_generators(p, &s).map(|g| (s, g)))
            .collect::<Result<_>>()?;
        generators.extend(built);
        if generators.len() > max_states {
            return Err(CoreError::StateLimit { limit: max_states });
        }
        let next: BTreeSet<State> = layers[d]
            .iter()
            .flat_map(|s| generators[s].distributions.iter().flat_map(|dist| dist.keys().cloned()))
            .collect();
        layers.push(next);
    }
    for s in &layers[horizon] {
        if !bounds.contains(s) {
            return Err(CoreError::StateBoxEscape {
                state: state_string(&vars, s),
            });
        }
    }
    // Backwards: values at depth d hold X_{horizon-d}.
    let mut values: BTreeMap<State, Rational> = BTreeMap::new();
    for d in (0..horizon).rev() {
        let layer: Vec<&State> = layers[d].iter().collect();
        let computed: Vec<(State, Rational)> = layer
            .par_iter()
            .map(|s| {
                let g = &generators[*s];
                let v = if g.is_terminal() {
                    p.post.evaluate(&StateView {
                        vars: &vars,
                        values: s,
                    })
                } else {
                    g.min_expectation(&values)
                };
                ((*s).clone(), v)
            })
            .collect();
        values = computed.into_iter().collect();
    }
    if horizon == 0 {
        return Ok(starts.iter().map(|s| (s.clone(), Rational::zero())).collect());
    }
    Ok(starts.iter().map(|s| (s.clone(), values[s].clone())).collect())
}

/// Samples convex combinations of generator pairs and up-shifted
/// distributions; true iff none has an expectation below the generator
/// minimum.
pub fn closure_invariance_check(
    g: &GeneratorSet,
    values: &BTreeMap<State, Rational>,
    trials: usize,
    rng: &mut impl Rng,
) -> bool {
    let floor = g.min_expectation(values);
    let n = g.distributions.len();
    let support: Vec<State> = g
        .distributions
        .iter()
        .flat_map(|d| d.keys().cloned())
        .chain(values.keys().cloned())
        .collect();
    for _ in 0..trials {
        let a = &g.distributions[rng.gen_range(0..n)];
        let b = &g.distributions[rng.gen_range(0..n)];
        let t = rational::ratio(rng.gen_range(0..=16), 16);
        let mut mix = Distribution::new();
        for (s, p) in a {
            *mix.entry(s.clone()).or_insert_with(Rational::zero) += &t * p;
        }
        for (s, p) in b {
            *mix.entry(s.clone()).or_insert_with(Rational::zero) += (rational::one() - &t) * p;
        }
        if expectation(&mix, values) < floor {
            return false;
        }
        // Up-closure: put some of the missing mass on a sampled state.
        let total: Rational = mix.values().sum();
        let missing = rational::one() - total;
        if missing > Rational::zero() && !support.is_empty() {
            let s = support[rng.gen_range(0..support.len())].clone();
            let extra = missing * rational::ratio(rng.gen_range(1..=8), 8);
            *mix.entry(s).or_insert_with(Rational::zero) += extra;
            if expectation(&mix, values) < floor {
                return false;
            }
        }
    }
    true
}
