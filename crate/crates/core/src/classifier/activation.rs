use serde::{Deserialize, Serialize};

use crate::irt::logistic;

/// Hidden-layer activation. `Softmax` normalises across the hidden units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Softmax,
    Softplus,
    Softsign,
    Relu,
    Tanh,
    Sigmoid,
    HardSigmoid,
}

impl Activation {
    pub const ALL: [Activation; 7] = [
        Activation::Softmax,
        Activation::Softplus,
        Activation::Softsign,
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::HardSigmoid,
    ];

    pub fn forward(self, z: &[f64], a: &mut [f64]) {
        match self {
            Activation::Softmax => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (ai, &zi) in a.iter_mut().zip(z) {
                    *ai = (zi - max).exp();
                    sum += *ai;
                }
                a.iter_mut().for_each(|ai| *ai /= sum);
            }
            _ => {
                for (ai, &zi) in a.iter_mut().zip(z) {
                    *ai = self.scalar(zi);
                }
            }
        }
    }

    fn scalar(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            Activation::Softsign => z / (1.0 + z.abs()),
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => logistic(z),
            Activation::HardSigmoid => (0.2 * z + 0.5).clamp(0.0, 1.0),
            Activation::Softmax => unreachable!("softmax is not elementwise"),
        }
    }

    /// Overwrites `grad` (dL/da on entry) with dL/dz.
    pub fn backward(self, z: &[f64], a: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Softmax => {
                let dot: f64 = a.iter().zip(grad.iter()).map(|(ai, gi)| ai * gi).sum();
                for (gi, &ai) in grad.iter_mut().zip(a) {
                    *gi = ai * (*gi - dot);
                }
            }
            _ => {
                for ((gi, &zi), &ai) in grad.iter_mut().zip(z).zip(a) {
                    *gi *= match self {
                        Activation::Softplus => logistic(zi),
                        Activation::Softsign => 1.0 / (1.0 + zi.abs()).powi(2),
                        Activation::Relu => f64::from(u8::from(zi > 0.0)),
                        Activation::Tanh => 1.0 - ai * ai,
                        Activation::Sigmoid => ai * (1.0 - ai),
                        Activation::HardSigmoid => {
                            if zi.abs() < 2.5 {
                                0.2
                            } else {
                                0.0
                            }
                        }
                        Activation::Softmax => unreachable!(),
                    };
                }
            }
        }
    }
}
