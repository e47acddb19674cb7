#![allow(dead_code)]

use beamloc::evidence::{Bpa, FusedEvidence};
use beamloc::modal_data::{synthesize_scenario, ScenarioData};
use beamloc::{BeamConfig, DamageScenario};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Modes retained by the localization scenarios.
pub const MODES: usize = 10;
/// Elements 7 and 8 (1-based).
pub const PAIR: [usize; 2] = [6, 7];
/// Elements 4-5 and 9-10 (1-based).
pub const TWO_SITES: [usize; 4] = [3, 4, 8, 9];
/// The second group of four (elements 5-8, 1-based).
pub const GROUP: [usize; 4] = [4, 5, 6, 7];
pub const REDUCTION: f64 = 0.25;

pub fn reference() -> BeamConfig {
    BeamConfig::reference()
}

pub fn scenario(elements: &[usize], modes: usize) -> ScenarioData {
    let s = DamageScenario::uniform_reduction("test", elements, REDUCTION);
    synthesize_scenario(&reference(), &s, modes).unwrap()
}

pub fn noisy_scenario(elements: &[usize], modes: usize, eta: f64, seed: u64) -> ScenarioData {
    let s = DamageScenario::uniform_reduction("test", elements, REDUCTION).with_noise(eta, seed);
    synthesize_scenario(&reference(), &s, modes).unwrap()
}

/// |Σ m - 1| of a fused result.
pub fn mass_defect(f: &FusedEvidence) -> f64 {
    (f.singletons.iter().sum::<f64>() + f.theta_mass - 1.0).abs()
}

/// A mass function over every subset of an `n`-element frame, indexed by
/// bitmask. Index 0 is the empty set, `(1 << n) - 1` is Θ.
#[derive(Debug, Clone)]
pub struct PowerSetBpa {
    pub n: usize,
    pub masses: Vec<f64>,
}

impl PowerSetBpa {
    pub fn from_singletons(bpa: &Bpa) -> Self {
        let n = bpa.len();
        let mut masses = vec![0.0; 1 << n];
        for (i, m) in bpa.singletons.iter().enumerate() {
            masses[1 << i] = *m;
        }
        masses[(1 << n) - 1] += bpa.theta;
        PowerSetBpa { n, masses }
    }

    pub fn theta(&self) -> f64 {
        self.masses[(1 << self.n) - 1]
    }

    pub fn singleton(&self, i: usize) -> f64 {
        self.masses[1 << i]
    }
}

/// Dempster's rule by enumerating every pair of focal sets. Returns the
/// combined masses and the conflict.
pub fn brute_force_combine(a: &PowerSetBpa, b: &PowerSetBpa) -> (PowerSetBpa, f64) {
    assert_eq!(a.n, b.n);
    let size = a.masses.len();
    let mut raw = vec![0.0; size];
    for (x, ma) in a.masses.iter().enumerate() {
        for (y, mb) in b.masses.iter().enumerate() {
            raw[x & y] += ma * mb;
        }
    }
    let conflict = raw[0];
    let masses = raw
        .iter()
        .enumerate()
        .map(|(s, m)| if s == 0 { 0.0 } else { m / (1.0 - conflict) })
        .collect();
    (PowerSetBpa { n: a.n, masses }, conflict)
}

/// A random singleton-plus-Θ mass function; some draws put zero mass on a
/// few singletons or on Θ.
pub fn random_bpa(rng: &mut ChaCha8Rng, n: usize) -> Bpa {
    let mut raw: Vec<f64> = (0..=n).map(|_| unit(rng)).collect();
    for v in raw.iter_mut() {
        if rng.next_u32().is_multiple_of(5) {
            *v = 0.0;
        }
    }
    if raw.iter().all(|v| *v == 0.0) {
        raw[n] = 1.0;
    }
    let total: f64 = raw.iter().sum();
    let mut singletons: Vec<f64> = raw[..n].iter().map(|v| v / total).collect();
    // Θ takes the remainder so the masses sum to one to rounding.
    let theta = (1.0 - singletons.iter().sum::<f64>()).max(0.0);
    if theta == 0.0 {
        let s: f64 = singletons.iter().sum();
        singletons.iter_mut().for_each(|v| *v /= s);
    }
    Bpa { singletons, theta }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}
