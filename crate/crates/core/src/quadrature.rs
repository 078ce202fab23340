//! Gauss-Legendre rules and product rules over the unit sphere.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on P_n from the Tricomi initial guesses. Nodes are
    /// returned in ascending order and symmetric to machine precision.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Node counts for the (cos theta, phi) product rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureSpec {
    n_cos: usize,
    n_phi: usize,
}

impl QuadratureSpec {
    pub const DEFAULT_N_COS: usize = 64;
    pub const DEFAULT_N_PHI: usize = 16;

    pub fn new(n_cos: usize, n_phi: usize) -> Result<Self> {
        if n_cos < 2 {
            return Err(Error::domain(format!("n_cos = {n_cos} must be at least 2")));
        }
        if n_phi < 4 {
            return Err(Error::domain(format!("n_phi = {n_phi} must be at least 4")));
        }
        Ok(QuadratureSpec { n_cos, n_phi })
    }

    pub fn n_cos(&self) -> usize {
        self.n_cos
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_cos: Self::DEFAULT_N_COS,
            n_phi: Self::DEFAULT_N_PHI,
        }
    }
}

/// Product rule on the sphere: Gauss-Legendre in cos theta, equally spaced
/// (periodic trapezoid) in phi. Each node carries its solid-angle weight.
#[derive(Debug, Clone)]
pub struct SphereRule {
    cos_nodes: Vec<(f64, f64)>,
    phi_nodes: Vec<f64>,
    phi_weight: f64,
}

impl SphereRule {
    pub fn new(spec: QuadratureSpec) -> Self {
        let gl = GaussLegendre::new(spec.n_cos);
        let cos_nodes = gl.mapped(-1.0, 1.0).collect();
        let n = spec.n_phi;
        let phi_weight = 2.0 * PI / n as f64;
        // half-step offset keeps nodes off phi = 0 so that x and y are
        // treated alike
        let phi_nodes = (0..n).map(|j| (j as f64 + 0.5) * phi_weight).collect();
        SphereRule {
            cos_nodes,
            phi_nodes,
            phi_weight,
        }
    }

    /// Iterate `(cos theta, phi, weight)`; the weights sum to 4 pi.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.cos_nodes.iter().flat_map(move |&(c, wc)| {
            self.phi_nodes
                .iter()
                .map(move |&phi| (c, phi, wc * self.phi_weight))
        })
    }
}
