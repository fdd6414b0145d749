//! Rectifier network representation, JSON loading, evaluation, and the
//! log2 region metric `eta`.

use num_bigint::BigUint;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::{Error, Result};

/// Axis-aligned box domain of the network input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputBox<S> {
    pub lower: Vec<S>,
    pub upper: Vec<S>,
}

impl<S: Scalar> InputBox<S> {
    pub fn unit(dim: usize) -> Self {
        InputBox {
            lower: vec![S::zero(); dim],
            upper: vec![S::one(); dim],
        }
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.lower.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(Error::LengthMismatch {
                got: self.lower.len().min(self.upper.len()),
                expected: dim,
            });
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite(format!("domain bound {i}")));
            }
            if *lo > *hi {
                return Err(Error::Invalid(format!(
                    "domain bound {i}: lower {lo} exceeds upper {hi}"
                )));
            }
        }
        Ok(())
    }
}

/// One dense layer: `weights` is row-major `n_l x n_{l-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer<S> {
    pub weights: Vec<Vec<S>>,
    pub bias: Vec<S>,
}

impl<S: Scalar> Layer<S> {
    pub fn width(&self) -> usize {
        self.weights.len()
    }
}

/// A rectifier network together with its box input domain.
///
/// When `count_output_layer` is false the last layer is a plain affine
/// output layer: it is evaluated without a ReLU and excluded from region
/// counting. By default every listed layer counts as a ReLU layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel<S> {
    pub input_dim: usize,
    pub domain: InputBox<S>,
    pub layers: Vec<Layer<S>>,
    #[serde(default = "default_true")]
    pub count_output_layer: bool,
}

fn default_true() -> bool {
    true
}

/// Per-layer activity bitsets identifying a linear region.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ActivationPattern {
    pub layers: Vec<Vec<bool>>,
}

impl ActivationPattern {
    /// Renders layers as `;`-separated bit strings, e.g. `101;01`.
    pub fn to_bitstring(&self) -> String {
        self.layers
            .iter()
            .map(|l| l.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// `eta = log2` of a region count or bound.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MapsValue {
    pub eta: f64,
}

/// Computes `eta` for an exact count; overflow-free for big integers.
pub fn maps(count: &BigUint) -> Result<MapsValue> {
    if count.bits() == 0 {
        return Err(Error::CountBelowOne);
    }
    let bits = count.bits();
    // Top 53 bits carry all the precision a double can hold.
    let shift = bits.saturating_sub(53);
    let head: BigUint = count >> shift;
    let mantissa = head.to_string().parse::<f64>().expect("<= 53 bits");
    Ok(MapsValue {
        eta: mantissa.log2() + shift as f64,
    })
}

/// Computes `eta` for a real-valued bound.
pub fn maps_real(count: f64) -> Result<MapsValue> {
    if !(count >= 1.0) {
        return Err(Error::CountBelowOne);
    }
    Ok(MapsValue { eta: count.log2() })
}

impl<S: Scalar> NetworkModel<S> {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Invalid("input_dim must be positive".into()));
        }
        self.domain.validate(self.input_dim)?;
        let mut prev = self.input_dim;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.is_empty() {
                return Err(Error::DimensionMismatch {
                    layer: l + 1,
                    message: "empty weight matrix".into(),
                });
            }
            if layer.bias.len() != layer.weights.len() {
                return Err(Error::DimensionMismatch {
                    layer: l + 1,
                    message: format!(
                        "bias length {} for a {}-row weight matrix",
                        layer.bias.len(),
                        layer.weights.len()
                    ),
                });
            }
            for (i, row) in layer.weights.iter().enumerate() {
                if row.len() != prev {
                    return Err(Error::DimensionMismatch {
                        layer: l + 1,
                        message: format!(
                            "unit {} has {} weights, expected {}",
                            i + 1,
                            row.len(),
                            prev
                        ),
                    });
                }
                if row.iter().any(|w| !w.is_finite()) {
                    return Err(Error::NonFinite(format!("weight of layer {}", l + 1)));
                }
            }
            if layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite(format!("bias of layer {}", l + 1)));
            }
            prev = layer.width();
        }
        Ok(())
    }

    /// Number of layers that participate in region counting.
    pub fn num_counting_layers(&self) -> usize {
        if self.count_output_layer {
            self.layers.len()
        } else {
            self.layers.len().saturating_sub(1)
        }
    }

    pub fn counting_layers(&self) -> &[Layer<S>] {
        &self.layers[..self.num_counting_layers()]
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.width()).collect()
    }

    /// Evaluates the network, returning the final-layer outputs and the
    /// activation pattern over the counting layers. A unit is active iff
    /// its pre-activation is strictly positive; ties at zero are inactive.
    pub fn forward(&self, x: &[S]) -> Result<(Vec<S>, ActivationPattern)> {
        if x.len() != self.input_dim {
            return Err(Error::LengthMismatch {
                got: x.len(),
                expected: self.input_dim,
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain);
        }
        let counting = self.num_counting_layers();
        let mut h: Vec<S> = x.to_vec();
        let mut pattern = Vec::with_capacity(counting);
        for (l, layer) in self.layers.iter().enumerate() {
            let pre: Vec<S> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, b)| row.iter().zip(&h).map(|(w, v)| *w * *v).sum::<S>() + *b)
                .collect();
            if l < counting {
                pattern.push(pre.iter().map(|g| *g > S::zero()).collect());
                h = pre.iter().map(|g| g.max(S::zero())).collect();
            } else {
                h = pre;
            }
        }
        Ok((h, ActivationPattern { layers: pattern }))
    }
}

/// Parses and validates a network from its JSON serialization.
pub fn load_network<S: Scalar + for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<NetworkModel<S>> {
    let net: NetworkModel<S> =
        serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    net.validate()?;
    Ok(net)
}

pub fn save_network<S: Scalar + Serialize>(net: &NetworkModel<S>) -> Vec<u8> {
    serde_json::to_vec_pretty(net).expect("network serialization")
}

/// Deterministic random test instance: weights and biases uniform in
/// `[-scale, scale]`, domain `[0, 1]^{n0}`.
pub fn generate_random_network<S: Scalar>(
    widths: &[usize],
    n0: usize,
    seed: u64,
    scale: f64,
) -> Result<NetworkModel<S>> {
    if widths.is_empty() || widths.iter().any(|&w| w == 0) {
        return Err(Error::EmptyWidths);
    }
    if n0 == 0 {
        return Err(Error::Invalid("input_dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-scale, scale);
    let mut prev = n0;
    let mut layers = Vec::with_capacity(widths.len());
    for &w in widths {
        let weights = (0..w)
            .map(|_| (0..prev).map(|_| S::from_f64_lossy(dist.sample(&mut rng))).collect())
            .collect();
        let bias = (0..w).map(|_| S::from_f64_lossy(dist.sample(&mut rng))).collect();
        layers.push(Layer { weights, bias });
        prev = w;
    }
    Ok(NetworkModel {
        input_dim: n0,
        domain: InputBox::unit(n0),
        layers,
        count_output_layer: true,
    })
}
