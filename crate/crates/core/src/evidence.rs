//! Dempster-Shafer fusion of damage features.
//!
//! Each feature vector becomes a mass function over the frame
//! Θ = {element 0, …, element n-1} whose focal elements are the singletons
//! and Θ itself. The mass left on Θ is an ignorance factor synthesized from
//! four cues: how spread the feature is (entropy), how weak an element is
//! relative to the strongest, its rank, and a logistic confidence.

use serde::{Deserialize, Serialize};

use crate::beam::ModalSolution;
use crate::damage_indices::{argmax, compute_feature, FeatureKind, FeatureVector};
use crate::error::{Error, Result};
use crate::modal_data::MeasuredModes;

/// Guard added to sums and maxima before dividing.
pub const EPS: f64 = 1e-10;
/// Ignorance floor.
pub const ALPHA_MIN: f64 = 0.1;
/// Mass functions must sum to one within this tolerance.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Weights of the distribution, relative-weakness, rank and confidence cues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgnoranceWeights {
    pub distribution: f64,
    pub relative: f64,
    pub rank: f64,
    pub confidence: f64,
}

impl Default for IgnoranceWeights {
    fn default() -> Self {
        IgnoranceWeights {
            distribution: 0.25,
            relative: 0.25,
            rank: 0.25,
            confidence: 0.25,
        }
    }
}

impl IgnoranceWeights {
    pub fn new(distribution: f64, relative: f64, rank: f64, confidence: f64) -> Result<Self> {
        let w = IgnoranceWeights {
            distribution,
            relative,
            rank,
            confidence,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.distribution, self.relative, self.rank, self.confidence];
        if all.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
            return Err(Error::invalid(format!(
                "ignorance weights must lie in (0, 1): {all:?}"
            )));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "ignorance weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }
}

/// `(D / (ΣD + ε), D / (max D + ε))`.
pub fn normalize_indices(d: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let sum: f64 = d.iter().sum();
    let max = d.iter().cloned().fold(0.0, f64::max);
    let norm = d.iter().map(|v| v / (sum + EPS)).collect();
    let rel = d.iter().map(|v| v / (max + EPS)).collect();
    (norm, rel)
}

/// Normalized Shannon entropy `H` of `D_norm` and the concentration `1 - H`.
pub fn concentration(d_norm: &[f64]) -> Result<(f64, f64)> {
    let n = d_norm.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "entropy needs at least 2 elements, got {n}"
        )));
    }
    let h = -d_norm.iter().map(|p| p * (p + EPS).ln()).sum::<f64>() / (n as f64).ln();
    Ok((h, 1.0 - h))
}

/// Damage ranks: 0 for the largest index, ties broken by lower element first.
pub fn damage_ranks(d: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; d.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r;
    }
    ranks
}

/// The four ignorance cues for every element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgnoranceComponents {
    /// `1 - conc`; the same for every element.
    pub distribution: f64,
    pub relative: Vec<f64>,
    pub rank: Vec<f64>,
    pub confidence: Vec<f64>,
}

/// Evaluates the cues on `d` as given; the logistic sees the raw values.
pub fn ignorance_components(
    d: &[f64],
    ranks: &[usize],
    lambda_f: f64,
) -> Result<IgnoranceComponents> {
    let n = d.len();
    if ranks.len() != n {
        return Err(Error::invalid(
            "rank vector length differs from feature length",
        ));
    }
    if !(lambda_f > 0.0 && lambda_f.is_finite()) {
        return Err(Error::invalid(format!(
            "feature sensitivity must be positive, got {lambda_f}"
        )));
    }
    let (norm, rel) = normalize_indices(d);
    let (_, conc) = concentration(&norm)?;
    let denom = (n - 1) as f64;
    Ok(IgnoranceComponents {
        distribution: 1.0 - conc,
        relative: rel.iter().map(|r| 1.0 - r).collect(),
        rank: ranks.iter().map(|&r| r as f64 / denom).collect(),
        confidence: d.iter().map(|&v| 1.0 - logistic(lambda_f * v)).collect(),
    })
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `α_i = clamp(w·(d, r', k, c)_i, α_min, 1)`.
pub fn synthesize_alpha(components: &IgnoranceComponents, weights: &IgnoranceWeights) -> Vec<f64> {
    components
        .relative
        .iter()
        .zip(&components.rank)
        .zip(&components.confidence)
        .map(|((r, k), c)| {
            let a = weights.distribution * components.distribution
                + weights.relative * r
                + weights.rank * k
                + weights.confidence * c;
            a.clamp(ALPHA_MIN, 1.0)
        })
        .collect()
}

/// A mass function whose focal elements are singletons and Θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bpa {
    pub singletons: Vec<f64>,
    pub theta: f64,
}

impl Bpa {
    pub fn vacuous(n: usize) -> Self {
        Bpa {
            singletons: vec![0.0; n],
            theta: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.singletons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singletons.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.singletons.iter().sum::<f64>() + self.theta
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .singletons
            .iter()
            .chain([&self.theta])
            .any(|m| !(m.is_finite() && *m >= 0.0))
        {
            return Err(Error::invalid("masses must be finite and non-negative"));
        }
        let total = self.total();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Invariant(format!("masses sum to {total}")));
        }
        Ok(())
    }
}

/// One feature turned into a mass function, with the quantities behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBpa {
    pub kind: FeatureKind,
    pub bpa: Bpa,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda_f: f64,
    pub concentration: f64,
}

/// Builds the feature-level mass function `m({i}) = β_i D_i^norm`,
/// `m(Θ) = 1 - Σ m({i})`.
///
/// The logistic confidence is evaluated on the feature rescaled to a
/// maximum of one, which makes `λ_f` independent of the feature's units.
pub fn build_bpa(
    feature: &FeatureVector,
    weights: &IgnoranceWeights,
    lambda_f: f64,
) -> Result<FeatureBpa> {
    weights.validate()?;
    let d = &feature.values;
    let (norm, rel) = normalize_indices(d);
    let ranks = damage_ranks(d);
    let components = ignorance_components(&rel, &ranks, lambda_f)?;
    // d_i, r'_i and k_i are invariant to rescaling, so evaluating on D_rel
    // only changes what the logistic sees.
    let alpha = synthesize_alpha(&components, weights);
    let beta: Vec<f64> = alpha.iter().map(|a| 1.0 - a).collect();
    let singletons: Vec<f64> = beta.iter().zip(&norm).map(|(b, p)| b * p).collect();
    let committed: f64 = singletons.iter().sum();
    if committed > 1.0 + MASS_TOLERANCE {
        return Err(Error::Invariant(format!(
            "committed singleton mass {committed} exceeds 1"
        )));
    }
    let (_, conc) = concentration(&norm)?;
    let bpa = Bpa {
        singletons,
        theta: (1.0 - committed).max(0.0),
    };
    bpa.validate()?;
    Ok(FeatureBpa {
        kind: feature.kind,
        bpa,
        alpha,
        beta,
        lambda_f,
        concentration: conc,
    })
}

/// Result of Dempster's rule on singleton + Θ mass functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedEvidence {
    pub singletons: Vec<f64>,
    pub theta_mass: f64,
    /// Total conflict `K` absorbed by normalization.
    pub conflict: f64,
    pub belief: Vec<f64>,
    pub plausibility: Vec<f64>,
}

impl FusedEvidence {
    fn from_masses(singletons: Vec<f64>, theta_mass: f64, conflict: f64) -> Result<Self> {
        let bpa = Bpa {
            singletons,
            theta: theta_mass,
        };
        bpa.validate()?;
        let belief = bpa.singletons.clone();
        let plausibility = bpa.singletons.iter().map(|m| m + theta_mass).collect();
        Ok(FusedEvidence {
            singletons: bpa.singletons,
            theta_mass,
            conflict,
            belief,
            plausibility,
        })
    }

    pub fn as_bpa(&self) -> Bpa {
        Bpa {
            singletons: self.singletons.clone(),
            theta: self.theta_mass,
        }
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.belief)
    }

    pub fn max_belief(&self) -> f64 {
        self.belief.iter().cloned().fold(0.0, f64::max)
    }
}

/// Dempster's rule in closed form for singleton + Θ focal structure.
pub fn dempster_combine(a: &Bpa, b: &Bpa) -> Result<FusedEvidence> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "frames differ in size: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    a.validate()?;
    b.validate()?;
    let sum_a: f64 = a.singletons.iter().sum();
    let sum_b: f64 = b.singletons.iter().sum();
    let agree: f64 = a
        .singletons
        .iter()
        .zip(&b.singletons)
        .map(|(x, y)| x * y)
        .sum();
    // Σ_{i≠j} a_i b_j
    let conflict = (sum_a * sum_b - agree).max(0.0);
    if conflict >= 1.0 - 1e-12 {
        return Err(Error::TotalConflict(conflict));
    }
    let scale = 1.0 / (1.0 - conflict);
    let singletons = a
        .singletons
        .iter()
        .zip(&b.singletons)
        .map(|(x, y)| (x * y + x * b.theta + a.theta * y) * scale)
        .collect();
    FusedEvidence::from_masses(singletons, a.theta * b.theta * scale, conflict)
}

/// Left fold of Dempster's rule. The reported conflict is the total mass
/// that combining all sources at once would assign to the empty set.
pub fn fuse_features(bpas: &[FeatureBpa]) -> Result<FusedEvidence> {
    if bpas.len() < 2 {
        return Err(Error::invalid(format!(
            "fusion needs at least 2 sources, got {}",
            bpas.len()
        )));
    }
    let mut fused = dempster_combine(&bpas[0].bpa, &bpas[1].bpa)?;
    let mut agreement = 1.0 - fused.conflict;
    for next in &bpas[2..] {
        let step = dempster_combine(&fused.as_bpa(), &next.bpa)?;
        agreement *= 1.0 - step.conflict;
        fused = step;
    }
    fused.conflict = 1.0 - agreement;
    Ok(fused)
}

/// Elements whose belief reaches `tau_fraction` of the maximum belief.
/// The argmax is always included.
pub fn filter_candidates(fused: &FusedEvidence, tau_fraction: f64) -> Result<Vec<usize>> {
    if !(tau_fraction > 0.0 && tau_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "tau must lie in (0, 1], got {tau_fraction}"
        )));
    }
    let threshold = tau_fraction * fused.max_belief();
    let mut set: Vec<usize> = (0..fused.belief.len())
        .filter(|&i| fused.belief[i] >= threshold)
        .collect();
    let best = fused.argmax();
    if !set.contains(&best) {
        set.push(best);
        set.sort_unstable();
    }
    Ok(set)
}

/// The `n` highest-belief elements, ascending by index.
pub fn top_candidates(fused: &FusedEvidence, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fused.belief.len()).collect();
    order.sort_by(|&a, &b| fused.belief[b].total_cmp(&fused.belief[a]).then(a.cmp(&b)));
    order.truncate(n.max(1));
    order.sort_unstable();
    order
}

/// Feature sensitivities `λ_f`, applied to features rescaled to max 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivities {
    pub frequency: f64,
    pub curvature: f64,
    pub strain_energy: f64,
    pub flexibility: f64,
}

impl Default for Sensitivities {
    fn default() -> Self {
        Sensitivities {
            frequency: 50.0,
            curvature: 50.0,
            strain_energy: 50.0,
            flexibility: 50.0,
        }
    }
}

impl Sensitivities {
    pub fn get(&self, kind: FeatureKind) -> f64 {
        match kind {
            FeatureKind::Frequency => self.frequency,
            FeatureKind::Curvature => self.curvature,
            FeatureKind::StrainEnergy => self.strain_energy,
            FeatureKind::Flexibility => self.flexibility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub weights: IgnoranceWeights,
    pub sensitivities: Sensitivities,
    pub features: Vec<FeatureKind>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            weights: IgnoranceWeights::default(),
            sensitivities: Sensitivities::default(),
            features: vec![FeatureKind::StrainEnergy, FeatureKind::Flexibility],
        }
    }
}

/// Every intermediate of one fusion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionReport {
    pub features: Vec<FeatureVector>,
    pub bpas: Vec<FeatureBpa>,
    pub fused: FusedEvidence,
}

/// Features → mass functions → Dempster fusion for one healthy/damaged pair.
pub fn fuse_measurements(
    und: &MeasuredModes,
    dam: &MeasuredModes,
    healthy_model: &ModalSolution,
    config: &FusionConfig,
) -> Result<FusionReport> {
    let features = config
        .features
        .iter()
        .map(|&k| compute_feature(k, und, dam, healthy_model))
        .collect::<Result<Vec<_>>>()?;
    let bpas = features
        .iter()
        .map(|f| build_bpa(f, &config.weights, config.sensitivities.get(f.kind)))
        .collect::<Result<Vec<_>>>()?;
    let fused = fuse_features(&bpas)?;
    Ok(FusionReport {
        features,
        bpas,
        fused,
    })
}
