//! Task-dispersion measures and comparator-set membership.

use crate::compound::CompoundVector;
use crate::error::{Error, Result};
use crate::geometry::{is_on_simplex, NormTag};
use crate::interaction::{GraphSpec, MAX_B};

/// Slack added to the right-hand side of every membership test.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;
/// Below this `σ` the admissible simplex `b` is pinned to [`MAX_B`].
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum VarianceKind {
    Norm(NormTag),
    Simplex,
    /// Graph-weighted variance `½ Σ_ij W_ij ‖u_i - u_j‖²`.
    LocalNorm {
        graph: GraphSpec,
        norm: NormTag,
    },
    /// Simplex variance with neighbourhood extrema (node included in its own neighbourhood).
    LocalSimplex {
        graph: GraphSpec,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSpec {
    pub kind: VarianceKind,
    pub sigma: f64,
    /// `D`, ignored by the simplex kinds.
    pub diameter: f64,
}

impl VarianceSpec {
    pub fn new(kind: VarianceKind, sigma: f64, diameter: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(Error::param(format!(
                "sigma must lie in [0, 1], got {sigma}"
            )));
        }
        if !(diameter > 0.0) || !diameter.is_finite() {
            return Err(Error::param(format!(
                "diameter must be positive, got {diameter}"
            )));
        }
        Ok(Self {
            kind,
            sigma,
            diameter,
        })
    }

    pub fn norm(norm: NormTag, sigma: f64, diameter: f64) -> Result<Self> {
        Self::new(VarianceKind::Norm(norm), sigma, diameter)
    }

    pub fn simplex(sigma: f64) -> Result<Self> {
        Self::new(VarianceKind::Simplex, sigma, 1.0)
    }

    /// The variance of `u` measured the way this spec prescribes.
    pub fn measure(&self, u: &CompoundVector) -> Result<f64> {
        match &self.kind {
            VarianceKind::Norm(norm) => Ok(norm_variance(u, *norm)),
            VarianceKind::Simplex => simplex_variance(u),
            VarianceKind::LocalNorm { graph, norm } => local_norm_variance(u, graph, *norm),
            VarianceKind::LocalSimplex { graph } => local_simplex_variance(u, graph),
        }
    }

    /// `σ²D²` for norm kinds, `σ²` for simplex kinds.
    pub fn threshold(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        match self.kind {
            VarianceKind::Norm(_) | VarianceKind::LocalNorm { .. } => {
                s2 * self.diameter * self.diameter
            }
            VarianceKind::Simplex | VarianceKind::LocalSimplex { .. } => s2,
        }
    }
}

/// `(1/(N-1)) Σ_i ‖u_i - ū‖²`, and 0 when `N = 1`.
pub fn norm_variance(u: &CompoundVector, norm: NormTag) -> f64 {
    let n = u.n_tasks();
    if n < 2 {
        return 0.0;
    }
    let mean = u.mean_block();
    let mut diff = vec![0.0; u.dim()];
    let mut total = 0.0;
    for block in u.blocks() {
        for ((d, a), m) in diff.iter_mut().zip(block).zip(&mean) {
            *d = a - m;
        }
        let r = norm.norm(&diff);
        total += r * r;
    }
    total / (n - 1) as f64
}

/// `max_j ((u_j^max - u_j^min) / u_j^max)²` with `0/0 = 0`.
pub fn simplex_variance(u: &CompoundVector) -> Result<f64> {
    check_simplex_blocks(u)?;
    let mut worst: f64 = 0.0;
    for j in 0..u.dim() {
        let (lo, hi) = column_range(u, j, 0..u.n_tasks());
        worst = worst.max(relative_range_sq(lo, hi));
    }
    Ok(worst)
}

/// `½ Σ_{i,j} W_ij ‖u_i - u_j‖²`, which equals `uᵀ L^W u` for the Euclidean norm.
pub fn local_norm_variance(u: &CompoundVector, graph: &GraphSpec, norm: NormTag) -> Result<f64> {
    let n = u.n_tasks();
    if graph.n_tasks() != n {
        return Err(Error::Dimension {
            expected: graph.n_tasks(),
            found: n,
        });
    }
    let mut diff = vec![0.0; u.dim()];
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = graph.weight(i, j);
            if w == 0.0 {
                continue;
            }
            for ((d, a), b) in diff.iter_mut().zip(u.block(i)).zip(u.block(j)) {
                *d = a - b;
            }
            let r = norm.norm(&diff);
            total += w * r * r;
        }
    }
    Ok(total)
}

/// Simplex variance where node `i` compares only against `{i} ∪ N(i)`.
pub fn local_simplex_variance(u: &CompoundVector, graph: &GraphSpec) -> Result<f64> {
    check_simplex_blocks(u)?;
    let n = u.n_tasks();
    if graph.n_tasks() != n {
        return Err(Error::Dimension {
            expected: graph.n_tasks(),
            found: n,
        });
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let hood: Vec<usize> = std::iter::once(i).chain(graph.neighbors(i)).collect();
        for j in 0..u.dim() {
            let (lo, hi) = column_range(u, j, hood.iter().copied());
            worst = worst.max(relative_range_sq(lo, hi));
        }
    }
    Ok(worst)
}

/// `b = (1 - σ²)/σ²`, pinned to [`MAX_B`] for `σ < 1e-6`.
pub fn admissible_b_simplex(sigma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::param(format!(
            "sigma must lie in [0, 1], got {sigma}"
        )));
    }
    if sigma < SIGMA_FLOOR {
        return Ok(MAX_B);
    }
    let s2 = sigma * sigma;
    Ok(((1.0 - s2) / s2).min(MAX_B))
}

/// Whether `u` lies in the small-variance comparator set of `spec`.
pub fn in_comparator_set(u: &CompoundVector, spec: &VarianceSpec) -> bool {
    match spec.measure(u) {
        Ok(v) => v <= spec.threshold() + MEMBERSHIP_SLACK,
        Err(_) => false,
    }
}

fn check_simplex_blocks(u: &CompoundVector) -> Result<()> {
    for (i, block) in u.blocks().enumerate() {
        if !is_on_simplex(block) {
            return Err(Error::Domain(format!("block {i} is not on the simplex")));
        }
    }
    Ok(())
}

fn column_range(
    u: &CompoundVector,
    j: usize,
    tasks: impl IntoIterator<Item = usize>,
) -> (f64, f64) {
    tasks
        .into_iter()
        .map(|i| u.block(i)[j].max(0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn relative_range_sq(lo: f64, hi: f64) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    let r = (hi - lo) / hi;
    r * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Regularizer;
    use crate::interaction::sqrt_block_action;
    use proptest::prelude::*;

    fn cv(n: usize, d: usize, data: &[f64]) -> CompoundVector {
        CompoundVector::new(n, d, data.to_vec()).unwrap()
    }

    #[test]
    fn norm_variance_examples() {
        assert!(norm_variance(&CompoundVector::repeated(3, &[0.3, -1.0]), NormTag::L2) < 1e-30);
        assert!((norm_variance(&cv(2, 1, &[0.0, 2.0]), NormTag::L2) - 2.0).abs() < 1e-15);
        assert!((norm_variance(&cv(4, 1, &[0.0, 0.0, 0.0, 4.0]), NormTag::L2) - 4.0).abs() < 1e-14);
        assert_eq!(norm_variance(&cv(1, 2, &[5.0, 1.0]), NormTag::L2), 0.0);
    }

    #[test]
    fn simplex_variance_examples() {
        let same = CompoundVector::repeated(3, &[0.2, 0.8]);
        assert_eq!(simplex_variance(&same).unwrap(), 0.0);
        let u = cv(2, 2, &[0.5, 0.5, 0.25, 0.75]);
        assert!((simplex_variance(&u).unwrap() - 0.25).abs() < 1e-15);
        let corner = cv(2, 2, &[1.0, 0.0, 0.5, 0.5]);
        assert_eq!(simplex_variance(&corner).unwrap(), 1.0);
        assert!(simplex_variance(&cv(1, 2, &[0.7, 0.7])).is_err());
    }

    #[test]
    fn local_variance_examples() {
        let u = cv(2, 1, &[0.0, 2.0]);
        assert_eq!(
            local_norm_variance(&u, &GraphSpec::empty(2), NormTag::L2).unwrap(),
            0.0
        );
        let clique = GraphSpec::clique(2, 0.5).unwrap();
        let v = local_norm_variance(&u, &clique, NormTag::L2).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        assert!((v - norm_variance(&u, NormTag::L2)).abs() < 1e-15);

        let clusters = GraphSpec::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let u = cv(4, 2, &[1.0, 1.0, 1.0, 1.0, -3.0, 2.0, -3.0, 2.0]);
        assert_eq!(
            local_norm_variance(&u, &clusters, NormTag::L2).unwrap(),
            0.0
        );
    }

    #[test]
    fn local_simplex_reduces_to_global_on_clique() {
        let u = cv(3, 2, &[0.5, 0.5, 0.25, 0.75, 0.4, 0.6]);
        let g = GraphSpec::clique(3, 1.0).unwrap();
        assert_eq!(
            local_simplex_variance(&u, &g).unwrap(),
            simplex_variance(&u).unwrap()
        );
        assert_eq!(
            local_simplex_variance(&u, &GraphSpec::empty(3)).unwrap(),
            0.0
        );
    }

    #[test]
    fn admissible_b_examples() {
        assert_eq!(admissible_b_simplex(1.0).unwrap(), 0.0);
        assert!((admissible_b_simplex(0.5).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(admissible_b_simplex(1e-9).unwrap(), 1e12);
        assert_eq!(admissible_b_simplex(0.0).unwrap(), 1e12);
        assert!(admissible_b_simplex(1.5).is_err());
    }

    #[test]
    fn membership_examples() {
        let same = CompoundVector::repeated(2, &[0.5, 0.5]);
        for spec in [
            VarianceSpec::norm(NormTag::L2, 0.0, 1.0).unwrap(),
            VarianceSpec::simplex(0.0).unwrap(),
        ] {
            assert!(in_comparator_set(&same, &spec));
        }
        let u = cv(2, 1, &[0.0, 2.0]);
        assert!(!in_comparator_set(
            &u,
            &VarianceSpec::norm(NormTag::L2, 1.0, 1.0).unwrap()
        ));
        let s = cv(2, 2, &[0.5, 0.5, 0.25, 0.75]);
        assert!(in_comparator_set(&s, &VarianceSpec::simplex(0.5).unwrap()));
        assert!(VarianceSpec::simplex(1.2).is_err());
    }

    fn compound(n: usize, d: usize) -> impl Strategy<Value = CompoundVector> {
        prop::collection::vec(-3.0f64..3.0, n * d)
            .prop_map(move |v| CompoundVector::new(n, d, v).unwrap())
    }

    fn simplex_compound(n: usize, d: usize) -> impl Strategy<Value = CompoundVector> {
        prop::collection::vec(0.01f64..1.0, n * d).prop_map(move |mut v| {
            for block in v.chunks_mut(d) {
                let s: f64 = block.iter().sum();
                block.iter_mut().for_each(|x| *x /= s);
            }
            CompoundVector::new(n, d, v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn variance_is_the_laplacian_quadratic_form(u in (2usize..8, 1usize..5).prop_flat_map(|(n, d)| compound(n, d))) {
            let n = u.n_tasks();
            let mean = u.mean_block();
            // uᵀ(I - 𝟙𝟙ᵀ/N)u = ‖u‖² - N‖ū‖²
            let quad = u.norm2_sq() - n as f64 * mean.iter().map(|m| m * m).sum::<f64>();
            let v = norm_variance(&u, NormTag::L2);
            prop_assert!((v * (n - 1) as f64 - quad).abs() <= 1e-10 * (1.0 + quad.abs()));
        }

        #[test]
        fn variance_is_translation_invariant(
            u in (2usize..6, 3usize..4).prop_flat_map(|(n, d)| compound(n, d)),
            shift in prop::collection::vec(-5.0f64..5.0, 3),
            tag in prop_oneof![Just(NormTag::L1), Just(NormTag::L2), Just(NormTag::Linf), Just(NormTag::Lp(1.5))],
        ) {
            let mut moved = u.clone();
            for block in moved.blocks_mut() {
                for (v, s) in block.iter_mut().zip(&shift) { *v += s; }
            }
            let a = norm_variance(&u, tag);
            let b = norm_variance(&moved, tag);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        }

        #[test]
        fn admissible_b_keeps_transformed_blocks_on_simplex(
            u in (2usize..8, 2usize..6).prop_flat_map(|(n, d)| simplex_compound(n, d)),
        ) {
            let var = simplex_variance(&u).unwrap();
            prop_assume!(var > 0.0);
            let b = admissible_b_simplex(var.sqrt()).unwrap();
            let y = sqrt_block_action(b, &u);
            for block in y.blocks() {
                let s: f64 = block.iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
                prop_assert!(block.iter().all(|&v| v >= -1e-9), "{block:?}");
            }
        }

        #[test]
        fn l2_variance_is_below_lp_variance(
            u in (2usize..6, 1usize..6).prop_flat_map(|(n, d)| compound(n, d)),
            p in 1.0f64..2.0,
        ) {
            let v2 = norm_variance(&u, NormTag::L2);
            let vp = norm_variance(&u, NormTag::Lp(p));
            prop_assert!(v2 <= vp * (1.0 + 1e-12) + 1e-14);
        }

        #[test]
        fn clique_bregman_identity(
            u in (1usize..8, 1usize..5).prop_flat_map(|(n, d)| compound(n, d)),
            b in 0.0f64..50.0,
        ) {
            let n = u.n_tasks();
            let y = sqrt_block_action(b, &u);
            let lhs = 2.0 * Regularizer::euclidean().compound_bregman(&y, &CompoundVector::zeros(n, u.dim())).unwrap();
            let rhs = u.norm2_sq() + b * (n as f64 - 1.0) * norm_variance(&u, NormTag::L2);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
        }
    }
}
