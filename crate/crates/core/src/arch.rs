//! Candidate detector architectures.
//!
//! Seven fixed multilayer-perceptron shapes are derived from the
//! feature-vector size N and its closest power of two B: no hidden
//! layer, one hidden layer of B/2, B, or 2B units, and two hidden
//! layers of (B/2, B/2), (B, B/2), or (2B, B/2) units. Every shape
//! ends in a two-output inner-product layer.

use serde::{Deserialize, Serialize};

use crate::mlp::{LayerKind, LayerSpec};

/// Smallest allowed value of B. Keeps B/2-sized layers useful for tiny
/// feature vectors and matches the detector families reported for
/// four-dimensional features ("4,4,2", "4,8,4,2").
pub const MIN_BASE_WIDTH: usize = 8;

/// One of the seven candidate detector shapes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    /// Comma-joined dimension list ending in 2, e.g. "10,8,4,2".
    pub name: String,
    /// Feature-vector size N (input dimension of the first layer).
    pub input_dim: usize,
    /// Hidden inner-product layer widths; 0, 1, or 2 entries.
    pub hidden_sizes: Vec<usize>,
}

impl ArchitectureSpec {
    pub fn new(input_dim: usize, hidden_sizes: Vec<usize>) -> Self {
        let mut dims = vec![input_dim.to_string()];
        dims.extend(hidden_sizes.iter().map(|h| h.to_string()));
        dims.push("2".to_string());
        Self {
            name: dims.join(","),
            input_dim,
            hidden_sizes,
        }
    }

    /// The implied layer chain: inner-product layers alternating with
    /// ReLU activations, ending in an inner-product layer of width 2.
    pub fn layer_chain(&self) -> Vec<LayerSpec> {
        let mut layers = Vec::new();
        let mut in_dim = self.input_dim;
        for &h in &self.hidden_sizes {
            layers.push(LayerSpec {
                kind: LayerKind::InnerProduct,
                in_dim,
                out_dim: h,
            });
            layers.push(LayerSpec {
                kind: LayerKind::Relu,
                in_dim: h,
                out_dim: h,
            });
            in_dim = h;
        }
        layers.push(LayerSpec {
            kind: LayerKind::InnerProduct,
            in_dim,
            out_dim: 2,
        });
        layers
    }
}

/// The power of two closest to `n`, ties broken upward, floored at
/// [`MIN_BASE_WIDTH`].
pub fn nearest_pow2(n: usize) -> usize {
    assert!(n >= 1, "n must be positive");
    let below = 1usize << (usize::BITS - 1 - n.leading_zeros());
    let b = if below == n {
        n
    } else {
        let above = below << 1;
        if n - below < above - n {
            below
        } else {
            above
        }
    };
    b.max(MIN_BASE_WIDTH)
}

/// The seven candidate architectures for feature-vector size `n`.
pub fn synthesize(n: usize) -> Vec<ArchitectureSpec> {
    let b = nearest_pow2(n);
    vec![
        ArchitectureSpec::new(n, vec![]),
        ArchitectureSpec::new(n, vec![b / 2]),
        ArchitectureSpec::new(n, vec![b]),
        ArchitectureSpec::new(n, vec![2 * b]),
        ArchitectureSpec::new(n, vec![b / 2, b / 2]),
        ArchitectureSpec::new(n, vec![b, b / 2]),
        ArchitectureSpec::new(n, vec![2 * b, b / 2]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn nearest_pow2_examples() {
        assert_eq!(nearest_pow2(10), 8);
        assert_eq!(nearest_pow2(8), 8);
        // Exact tie between 8 and 16: larger wins.
        assert_eq!(nearest_pow2(12), 16);
        assert_eq!(nearest_pow2(16), 16);
        assert_eq!(nearest_pow2(6), 8);
        // Small inputs hit the floor.
        assert_eq!(nearest_pow2(1), 8);
        assert_eq!(nearest_pow2(4), 8);
    }

    #[test]
    fn nearest_pow2_idempotent_above_floor() {
        for k in 3..16 {
            let p = 1usize << k;
            assert_eq!(nearest_pow2(p), p);
        }
    }

    #[test]
    fn synthesize_ten_matches_detector_family() {
        let names: BTreeSet<String> = synthesize(10).into_iter().map(|a| a.name).collect();
        let expected: BTreeSet<String> = [
            "10,2", "10,4,2", "10,8,2", "10,16,2", "10,4,4,2", "10,8,4,2", "10,16,4,2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(names, expected);
    }

    #[test]
    fn synthesize_four_includes_reported_shapes() {
        let names: Vec<String> = synthesize(4).into_iter().map(|a| a.name).collect();
        assert!(names.contains(&"4,4,2".to_string()));
        assert!(names.contains(&"4,8,4,2".to_string()));
        assert!(names.contains(&"4,4,4,2".to_string()));
    }

    #[test]
    fn synthesize_eight_includes_reported_shapes() {
        let names: Vec<String> = synthesize(8).into_iter().map(|a| a.name).collect();
        assert!(names.contains(&"8,2".to_string()));
        assert!(names.contains(&"8,8,4,2".to_string()));
    }

    #[test]
    fn seven_distinct_architectures_with_consistent_dims() {
        for n in [1usize, 4, 8, 10, 16, 33] {
            let archs = synthesize(n);
            assert_eq!(archs.len(), 7);
            let names: BTreeSet<&str> = archs.iter().map(|a| a.name.as_str()).collect();
            assert_eq!(names.len(), 7, "duplicate names for n={n}");
            for arch in &archs {
                let chain = arch.layer_chain();
                assert_eq!(chain.first().unwrap().in_dim, n);
                assert_eq!(chain.last().unwrap().out_dim, 2);
                for pair in chain.windows(2) {
                    assert_eq!(pair[0].out_dim, pair[1].in_dim);
                }
            }
        }
    }
}
