/// Fixed, equally spaced quadrature over the standard-normal latent prior.
///
/// Weights are the normal density at each node, renormalised to sum to one.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn standard_normal(n_points: usize, bound: f64) -> Self {
        assert!(n_points >= 2, "quadrature needs at least two nodes");
        let step = 2.0 * bound / (n_points - 1) as f64;
        let nodes: Vec<f64> = (0..n_points).map(|q| -bound + step * q as f64).collect();
        let dens: Vec<f64> = nodes.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let total: f64 = dens.iter().sum();
        let weights = dens.into_iter().map(|d| d / total).collect();
        QuadratureGrid { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_reproduces_standard_normal_moments() {
        let g = QuadratureGrid::standard_normal(61, 6.0);
        assert_eq!(g.len(), 61);
        assert!((g.nodes[30]).abs() < 1e-15);
        let mean: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| x * w).sum();
        let var: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| x * x * w).sum();
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(mean.abs() < 1e-14);
        assert!((var - 1.0).abs() < 1e-6, "{var}");
    }
}
