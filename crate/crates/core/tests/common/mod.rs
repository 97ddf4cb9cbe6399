#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use interfero::dsl::{parse_circuit, CircuitDescription, ElaborationConfig};

/// Random passive circuit as DSL text, with a binding for every removable splitter.
pub struct RandomCircuit {
    pub text: String,
    pub removable: Vec<(String, bool)>,
}

impl RandomCircuit {
    pub fn parse(&self) -> CircuitDescription {
        parse_circuit(&self.text).unwrap_or_else(|e| panic!("{e}\n{}", self.text))
    }

    pub fn config(&self) -> ElaborationConfig {
        self.removable
            .iter()
            .fold(ElaborationConfig::new(), |c, (n, on)| c.with_removable(n, *on))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to `max_modes` modes and up to `max_elements` elements.
pub fn random_circuit(rng: &mut impl Rng, max_modes: usize, max_elements: usize) -> RandomCircuit {
    let n_modes = rng.random_range(1..=max_modes);
    let mut live: Vec<String> = (0..n_modes).map(|i| format!("m{i}")).collect();
    let mut text = format!("modes {};\n", live.join(" "));
    let mut removable = Vec::new();
    let mut fresh = 0;
    let mut label = |prefix: &str| {
        fresh += 1;
        format!("{prefix}{fresh}")
    };

    let n_elements = rng.random_range(0..=max_elements);
    for _ in 0..n_elements {
        let kind = if live.len() >= 2 { rng.random_range(0..4) } else { rng.random_range(2..4) };
        match kind {
            0 | 1 => {
                let i = rng.random_range(0..live.len());
                let mut j = rng.random_range(0..live.len() - 1);
                if j >= i {
                    j += 1;
                }
                let name = label("BS");
                let spec = if kind == 0 {
                    "balanced".to_owned()
                } else {
                    let refl: f64 = rng.random();
                    let phi_t = rng.random_range(-PI..PI);
                    if rng.random_bool(0.3) {
                        let phi_r = phi_t - FRAC_PI_2;
                        format!("split(reflectance = {refl:?}, phi_t = {phi_t:?}, phi_r = {phi_r:?})")
                    } else {
                        format!("split(reflectance = {refl:?}, phi_t = {phi_t:?})")
                    }
                };
                let (o1, o2) = (label("x"), label("x"));
                let flag = if rng.random_bool(0.5) {
                    removable.push((name.clone(), rng.random_bool(0.5)));
                    " removable"
                } else {
                    ""
                };
                text += &format!("bs {name} {spec} {} {} -> {o1} {o2}{flag};\n", live[i], live[j]);
                live[i] = o1;
                live[j] = o2;
            }
            2 => {
                let i = rng.random_range(0..live.len());
                let phi = rng.random_range(-PI..PI);
                text += &format!("phase {} {phi:?};\n", live[i]);
            }
            _ => {
                let i = rng.random_range(0..live.len());
                let out = label("y");
                text += &format!("mirror {} -> {out};\n", live[i]);
                live[i] = out;
            }
        }
    }
    for (k, m) in live.iter().enumerate() {
        text += &format!("detect D{} {m};\n", k + 1);
    }
    RandomCircuit { text, removable }
}
