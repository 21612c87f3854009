//! Seeded synthetic corpora with known ground truth.
//!
//! Every (site, task) gets a random base trace of unit vectors. Reference
//! runs are the base plus a small jitter. Three generator models then derive
//! their runs from the matching reference run:
//!
//! - `perfect` copies it exactly;
//! - `shuffled` permutes its frames and adds a light perturbation;
//! - `noise` keeps the order but adds a heavier perturbation.
//!
//! The implied preference `perfect > shuffled > noise` becomes one ground
//! truth label per model pair and site. Side A alternates between the better
//! and the worse model so labels are not all `a_wins`.
//!
//! All randomness comes from [`XorShift64Star`], so a seed reproduces the same
//! files on every platform.

use uitrace_core::ranking::{ComparisonRecord, Rater, Verdict};
use uitrace_core::rng::XorShift64Star;
use uitrace_core::trace::{Embedding, Trace, TraceMeta};

use crate::error::{Error, Result};
use crate::records::PairSpec;

/// Model ids, best first.
pub const MODELS: [&str; 3] = ["perfect", "shuffled", "noise"];

/// Shape and noise levels of a fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureParams {
    /// PRNG seed.
    pub seed: u64,
    /// Number of sites.
    pub sites: usize,
    /// Tasks per site.
    pub tasks: usize,
    /// Runs per bundle, 1 to 3.
    pub runs: u32,
    /// Embedding dimension.
    pub dim: usize,
    /// Shortest base trace.
    pub min_frames: usize,
    /// Longest base trace.
    pub max_frames: usize,
    /// Per-component jitter between reference runs.
    pub jitter: f64,
    /// Perturbation of the shuffled model.
    pub shuffle_noise: f64,
    /// Perturbation of the noise model.
    pub noise: f64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            seed: 42,
            sites: 5,
            tasks: 4,
            runs: 3,
            dim: 16,
            min_frames: 6,
            max_frames: 12,
            jitter: 0.05,
            shuffle_noise: 0.05,
            noise: 0.5,
        }
    }
}

impl FixtureParams {
    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(format!("fixture: {m}")));
        if self.sites == 0 || self.tasks == 0 || self.dim == 0 {
            return fail("sites, tasks and dim must be positive");
        }
        if !(1..=3).contains(&self.runs) {
            return fail("runs must be between 1 and 3");
        }
        if self.min_frames == 0 || self.min_frames > self.max_frames {
            return fail("need 1 <= min_frames <= max_frames");
        }
        for v in [self.jitter, self.shuffle_noise, self.noise] {
            if !(v.is_finite() && v >= 0.0) {
                return fail("noise levels must be finite and non-negative");
            }
        }
        Ok(())
    }
}

/// A generated corpus with its comparison manifest and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    /// Reference and generated traces.
    pub traces: Vec<Trace>,
    /// One pair per model pair and site.
    pub pairs: Vec<PairSpec>,
    /// Ground-truth verdict per pair.
    pub labels: Vec<ComparisonRecord>,
}

fn site_id(s: usize) -> String {
    format!("site-{:02}", s + 1)
}

fn unit(values: Vec<f64>) -> Vec<f64> {
    let n = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    values.into_iter().map(|x| x / n).collect()
}

fn random_unit(rng: &mut XorShift64Star, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            return unit(v);
        }
    }
}

fn perturb(rng: &mut XorShift64Star, frame: &[f64], scale: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = frame.iter().map(|x| x + scale * rng.uniform(-1.0, 1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            return unit(v);
        }
    }
}

fn make_trace(meta: TraceMeta, frames: Vec<Vec<f64>>) -> Result<Trace> {
    let frames = frames.into_iter().map(Embedding::new).collect::<Result<Vec<_>, _>>()?;
    Ok(Trace::new(meta, frames)?)
}

/// Generates a fixture.
pub fn generate(params: &FixtureParams) -> Result<Fixture> {
    params.validate()?;
    let mut rng = XorShift64Star::new(params.seed);
    let mut traces = Vec::new();
    for s in 0..params.sites {
        let site = site_id(s);
        for t in 0..params.tasks {
            let task = format!("task-{}", t + 1);
            let span = (params.max_frames - params.min_frames + 1) as u64;
            let len = params.min_frames + rng.below(span) as usize;
            let base: Vec<Vec<f64>> = (0..len).map(|_| random_unit(&mut rng, params.dim)).collect();
            for run in 0..params.runs {
                let reference: Vec<Vec<f64>> = base.iter().map(|f| perturb(&mut rng, f, params.jitter)).collect();
                let mut shuffled = reference.clone();
                rng.shuffle(&mut shuffled);
                let shuffled = shuffled
                    .iter()
                    .map(|f| perturb(&mut rng, f, params.shuffle_noise))
                    .collect();
                let noisy = reference.iter().map(|f| perturb(&mut rng, f, params.noise)).collect();

                let id = |who: &str| format!("{site}/{task}/{who}/{run}");
                let generated = |model: &str| TraceMeta::generated(&id(model), &site, &task, model, run);
                traces.push(make_trace(
                    TraceMeta::reference(&id("reference"), &site, &task, run),
                    reference.clone(),
                )?);
                traces.push(make_trace(generated(MODELS[0]), reference)?);
                traces.push(make_trace(generated(MODELS[1]), shuffled)?);
                traces.push(make_trace(generated(MODELS[2]), noisy)?);
            }
        }
    }

    let mut pairs = Vec::new();
    let mut labels = Vec::new();
    for s in 0..params.sites {
        let site = site_id(s);
        let mut k = 0;
        for (i, better) in MODELS.iter().enumerate() {
            for worse in &MODELS[i + 1..] {
                k += 1;
                let (a, b, verdict) = if pairs.len() % 2 == 0 {
                    (better, worse, Verdict::AWins)
                } else {
                    (worse, better, Verdict::BWins)
                };
                let pair_id = format!("{site}-pair-{k}");
                pairs.push(PairSpec {
                    pair_id: pair_id.clone(),
                    site_id: site.clone(),
                    model_a: a.to_string(),
                    model_b: b.to_string(),
                    output_a: Some(a.to_string()),
                    output_b: Some(b.to_string()),
                    description: Some(format!("Synthetic site {}", s + 1)),
                });
                labels.push(ComparisonRecord::new(&pair_id, &site, a, b, verdict, Rater::Human));
            }
        }
    }
    Ok(Fixture { traces, pairs, labels })
}
