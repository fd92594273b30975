//! Vertex distributions, time averages and distances between runs.

use crate::kernel::{pow3, C64};
use crate::noise::DensityMatrix;
use crate::walk::WalkGraph;
use crate::{Error, Result};

/// Probability per vertex plus the mass sitting on basis states outside the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub probs: Vec<f64>,
    pub leaked: f64,
}

impl Distribution {
    pub fn new(probs: Vec<f64>, leaked: f64) -> Self {
        Distribution { probs, leaked }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.leaked
    }

    /// Vertex with the largest probability (first on ties).
    pub fn argmax(&self) -> Option<usize> {
        self.probs
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &p)| match best {
                Some((_, b)) if b >= p => best,
                _ => Some((i, p)),
            })
            .map(|(i, _)| i)
    }

    /// Probabilities rescaled to sum to one over the graph's vertices.
    pub fn renormalized(&self) -> Result<Vec<f64>> {
        let s: f64 = self.probs.iter().sum();
        if s <= 0.0 {
            return Err(Error::Empty("distribution has no mass on graph vertices".into()));
        }
        Ok(self.probs.iter().map(|p| p / s).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeAveraged {
    pub steps: usize,
    pub avg: Distribution,
}

/// Sums basis-state populations (indexed in the circuit register) per vertex.
pub fn vertex_distribution(populations: &[f64], g: &WalkGraph) -> Result<Distribution> {
    let dim = pow3(g.width());
    if populations.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: populations.len() });
    }
    let mut probs = vec![0.0; g.vertex_count()];
    let mut leaked = 0.0;
    for (i, &p) in populations.iter().enumerate() {
        match g.vertex_of(i) {
            Some(v) => probs[v] += p,
            None => leaked += p,
        }
    }
    Ok(Distribution { probs, leaked })
}

pub fn state_distribution(psi: &[C64], g: &WalkGraph) -> Result<Distribution> {
    let pops: Vec<f64> = psi.iter().map(|a| a.norm_sqr()).collect();
    vertex_distribution(&pops, g)
}

pub fn density_distribution(rho: &DensityMatrix, g: &WalkGraph) -> Result<Distribution> {
    vertex_distribution(&rho.diagonal(), g)
}

/// Streaming mean of distributions.
#[derive(Debug, Clone, Default)]
pub struct TimeAverager {
    sum: Vec<f64>,
    leaked: f64,
    count: usize,
}

impl TimeAverager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, d: &Distribution) -> Result<()> {
        if self.count == 0 {
            self.sum = vec![0.0; d.probs.len()];
        } else if self.sum.len() != d.probs.len() {
            return Err(Error::DimensionMismatch { expected: self.sum.len(), found: d.probs.len() });
        }
        self.sum.iter_mut().zip(&d.probs).for_each(|(s, p)| *s += p);
        self.leaked += d.leaked;
        self.count += 1;
        Ok(())
    }

    pub fn finish(&self) -> Result<TimeAveraged> {
        if self.count == 0 {
            return Err(Error::Empty("no distributions to average".into()));
        }
        let n = self.count as f64;
        Ok(TimeAveraged {
            steps: self.count,
            avg: Distribution { probs: self.sum.iter().map(|s| s / n).collect(), leaked: self.leaked / n },
        })
    }
}

/// Arithmetic mean over the given steps.
pub fn time_average(dists: &[Distribution]) -> Result<TimeAveraged> {
    let mut acc = TimeAverager::new();
    for d in dists {
        acc.push(d)?;
    }
    acc.finish()
}

fn check_support(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.probs.len() != q.probs.len() {
        return Err(Error::DimensionMismatch { expected: p.probs.len(), found: q.probs.len() });
    }
    Ok(())
}

/// `sum p log2(p / max(q, floor))` in bits, over leak-free renormalized
/// distributions. Zeros of `p` contribute nothing.
pub fn kl_divergence(p: &Distribution, q: &Distribution, floor: f64) -> Result<f64> {
    check_support(p, q)?;
    if floor.is_nan() || floor <= 0.0 {
        return Err(Error::OutOfRange(format!("KL floor {floor} must be positive")));
    }
    let (p, q) = (p.renormalized()?, q.renormalized()?);
    Ok(p.iter().zip(&q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b.max(floor)).log2()).sum())
}

/// Half the L1 distance between leak-free renormalized distributions.
pub fn tvd(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_support(p, q)?;
    let (p, q) = (p.renormalized()?, q.renormalized()?);
    Ok(0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

pub const DEFAULT_KL_FLOOR: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{ONE, ZERO};
    use crate::walk::initial_state;

    fn d(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec(), 0.0)
    }

    #[test]
    fn metric_examples() {
        let p = d(&[1.0, 0.0]);
        let h = d(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&p, &h, DEFAULT_KL_FLOOR).unwrap(), 1.0);
        assert_eq!(kl_divergence(&p, &p, DEFAULT_KL_FLOOR).unwrap(), 0.0);
        let want = 0.75 * 1.5f64.log2() + 0.25 * 0.5f64.log2();
        assert!((kl_divergence(&d(&[0.75, 0.25]), &h, DEFAULT_KL_FLOOR).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.18872).abs() < 1e-5);
        assert_eq!(tvd(&p, &h).unwrap(), 0.5);
        assert_eq!(tvd(&p, &d(&[0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(tvd(&h, &h).unwrap(), 0.0);
        assert!(tvd(&p, &d(&[1.0])).is_err());
        assert!(kl_divergence(&p, &h, 0.0).is_err());
    }

    #[test]
    fn leaked_mass_is_excluded() {
        let p = Distribution::new(vec![0.25, 0.25], 0.5);
        assert_eq!(tvd(&p, &d(&[0.5, 0.5])).unwrap(), 0.0);
    }

    #[test]
    fn vertex_distribution_examples() {
        let g = WalkGraph::dihedral(27).unwrap();
        let psi = initial_state(&g, &[ONE, ZERO, ZERO], 0).unwrap();
        let dist = state_distribution(&psi, &g).unwrap();
        assert_eq!(dist.probs[0], 1.0);
        assert_eq!(dist.leaked, 0.0);
        let mixed = DensityMatrix::maximally_mixed(5);
        let dist = density_distribution(&mixed, &g).unwrap();
        assert_eq!(dist.probs.len(), 54);
        assert!(dist.probs.iter().all(|p| (p - 3.0 / 243.0).abs() < 1e-15));
        assert!((dist.leaked - 81.0 / 243.0).abs() < 1e-14);
        assert!(vertex_distribution(&[1.0], &g).is_err());
    }

    #[test]
    fn time_average_examples() {
        let a = d(&[0.2, 0.8]);
        assert_eq!(time_average(&[a.clone(), a.clone()]).unwrap().avg, a);
        let avg = time_average(&[d(&[1.0, 0.0]), d(&[0.0, 1.0])]).unwrap();
        assert_eq!(avg.avg.probs, vec![0.5, 0.5]);
        assert_eq!(avg.steps, 2);
        assert!(time_average(&[]).is_err());
        assert_eq!(avg.avg.argmax(), Some(0));
    }
}
