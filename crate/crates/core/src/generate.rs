//! Experiment input generators: block-stochastic chains with planted
//! partitions, similarity chains from point clouds, and character
//! bigram chains from text.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{AggregationMap, MarkovChain};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::{Error, Result};

/// Parameters of the block-stochastic generator.
///
/// `alpha` controls diagonal-block dominance of the mixing matrix
/// (1 = completely decomposable), `eps_noise` blends in a dense random
/// matrix. With `eps_noise = 0` the planted partition is exactly
/// lumpable.
#[derive(Debug, Clone)]
pub struct BlockChainSpec {
    pub block_sizes: Vec<usize>,
    pub alpha: f64,
    pub eps_noise: f64,
    pub seed: u64,
}

impl BlockChainSpec {
    pub fn new(block_sizes: Vec<usize>, alpha: f64, eps_noise: f64, seed: u64) -> Self {
        BlockChainSpec {
            block_sizes,
            alpha,
            eps_noise,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.block_sizes.len() < 2 {
            return Err(Error::InvalidSpec("need at least two blocks"));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::InvalidSpec("block sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(Error::InvalidSpec("alpha must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.eps_noise) || !self.eps_noise.is_finite() {
            return Err(Error::InvalidSpec("eps_noise must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Generates and validates the chain using the spec's own seed.
    pub fn generate_chain(&self) -> Result<(MarkovChain, AggregationMap)> {
        let mut rng = Rng::new(self.seed);
        let draw = block_stochastic(self, &mut rng)?;
        Ok((MarkovChain::from_transition(draw.transition)?, draw.planted))
    }
}

/// Output of the block-stochastic generator.
#[derive(Debug, Clone)]
pub struct BlockChainDraw {
    /// Raw transition matrix (unvalidated; block diagonal and hence
    /// reducible when `alpha = 1` and `eps_noise = 0`).
    pub transition: Matrix,
    /// Ground-truth block partition.
    pub planted: AggregationMap,
    /// The `M x M` aggregate mixing matrix; with zero noise the
    /// aggregated chain under the planted partition equals it exactly.
    pub mixing: Matrix,
}

/// Draws a block-stochastic transition matrix and its planted partition.
///
/// An `M x M` mixing matrix is drawn with uniform-simplex rows and
/// pulled toward the identity by `alpha`; each block is an independent
/// row-stochastic matrix scaled by the corresponding mixing weight; the
/// result is finally blended with a dense random row-stochastic noise
/// matrix by `eps_noise`.
///
/// The raw matrix is returned unvalidated: with `alpha = 1` and zero
/// noise it is block diagonal and hence reducible.
pub fn block_stochastic(spec: &BlockChainSpec, rng: &mut Rng) -> Result<BlockChainDraw> {
    spec.validate()?;
    let m = spec.block_sizes.len();
    let n = spec.n_states();

    let mut mixing = Matrix::zeros(m, m);
    for i in 0..m {
        rng.simplex_row(mixing.row_mut(i));
        for j in 0..m {
            mixing[(i, j)] *= 1.0 - spec.alpha;
        }
        mixing[(i, i)] += spec.alpha;
    }

    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0usize);
    for &s in &spec.block_sizes {
        offsets.push(offsets.last().unwrap() + s);
    }

    let mut p = Matrix::zeros(n, n);
    let mut scratch = vec![0.0; *spec.block_sizes.iter().max().unwrap()];
    for bi in 0..m {
        for bj in 0..m {
            let cols = spec.block_sizes[bj];
            let weight = mixing[(bi, bj)];
            for row in offsets[bi]..offsets[bi + 1] {
                let block_row = &mut scratch[..cols];
                rng.simplex_row(block_row);
                let out = p.row_mut(row);
                for (c, &v) in block_row.iter().enumerate() {
                    out[offsets[bj] + c] = weight * v;
                }
            }
        }
    }

    if spec.eps_noise > 0.0 {
        let eps = spec.eps_noise;
        let mut noise_row = vec![0.0; n];
        for i in 0..n {
            rng.simplex_row(&mut noise_row);
            let out = p.row_mut(i);
            for (j, &e) in noise_row.iter().enumerate() {
                out[j] = (1.0 - eps) * out[j] + eps * e;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for bi in 0..m {
        assignment[offsets[bi]..offsets[bi + 1]].fill(bi);
    }
    let planted = AggregationMap::new(assignment, m)?;
    Ok(BlockChainDraw {
        transition: p,
        planted,
        mixing,
    })
}

/// Relabels states by a permutation: entry `(i, j)` of the result is
/// entry `(perm[i], perm[j])` of the input, and the partition is carried
/// along. Aggregation costs are invariant under this relabeling.
pub fn permute_chain(
    p: &Matrix,
    g: &AggregationMap,
    perm: &[usize],
) -> Result<(Matrix, AggregationMap)> {
    let n = p.rows();
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.cols(),
        });
    }
    if g.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: g.len(),
        });
    }
    if perm.len() != n {
        return Err(Error::NotAPermutation);
    }
    let mut seen = vec![false; n];
    for &i in perm {
        if i >= n || seen[i] {
            return Err(Error::NotAPermutation);
        }
        seen[i] = true;
    }

    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = p[(perm[i], perm[j])];
        }
    }
    let assignment = perm.iter().map(|&i| g.assignment()[i]).collect();
    Ok((out, AggregationMap::new(assignment, g.num_aggregates())?))
}

/// A point cloud plus the neighbor count used to set the similarity
/// scale.
#[derive(Debug, Clone)]
pub struct SimilaritySpec {
    pub points: Vec<Vec<f64>>,
    pub k_nearest: usize,
}

/// Random-walk chain over a point cloud with a Gaussian kernel.
///
/// The scale is the squared-distance mean to each point's `k` nearest
/// neighbors (the point itself excluded), averaged over all points.
/// Transition weights include the self term, so every row is strictly
/// positive and the chain is irreducible and aperiodic.
pub fn similarity_chain(spec: &SimilaritySpec) -> Result<MarkovChain> {
    let n = spec.points.len();
    if n < 2 {
        return Err(Error::InvalidSpec("need at least two points"));
    }
    if spec.k_nearest == 0 {
        return Err(Error::InvalidSpec("k_nearest must be positive"));
    }
    if spec.k_nearest > n {
        return Err(Error::InvalidSpec("k_nearest exceeds the number of points"));
    }
    let dim = spec.points[0].len();
    if spec.points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: spec
                .points
                .iter()
                .map(Vec::len)
                .find(|&l| l != dim)
                .unwrap_or(dim),
        });
    }

    let mut sq_dist = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = spec.points[i]
                .iter()
                .zip(&spec.points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sq_dist[(i, j)] = d2;
            sq_dist[(j, i)] = d2;
        }
    }

    // Neighbor sets exclude the point itself, so at most n - 1 are used.
    let k = spec.k_nearest.min(n - 1);
    let mut scale = 0.0;
    let mut others = vec![0.0; n - 1];
    for i in 0..n {
        let mut idx = 0;
        for j in 0..n {
            if j != i {
                others[idx] = sq_dist[(i, j)];
                idx += 1;
            }
        }
        others.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean_k: f64 = others[..k].iter().sum::<f64>() / k as f64;
        scale += mean_k;
    }
    scale /= n as f64;
    if scale <= 0.0 {
        return Err(Error::DegeneratePoints);
    }

    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        let row = p.row_mut(i);
        let mut sum = 0.0;
        for j in 0..n {
            let w = libm::exp(-sq_dist[(i, j)] / scale);
            row[j] = w;
            sum += w;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    MarkovChain::from_transition(p)
}

/// Character bigram chain of a text.
///
/// States are the distinct characters in sorted order; transition
/// probabilities are row-normalized bigram counts. A wraparound count
/// from the final character to the first guarantees every character has
/// outgoing mass, and makes the count graph one closed walk, hence
/// irreducible.
///
/// Text cleaning (line breaks, underscores, accent folding) is the
/// caller's business; the text is consumed as-is.
pub fn bigram_chain(text: &str) -> Result<(MarkovChain, Vec<char>)> {
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Err(Error::InvalidSpec("empty text"));
    }

    let mut alphabet: Vec<char> = chars.clone();
    alphabet.sort_unstable();
    alphabet.dedup();
    let index: BTreeMap<char, usize> = alphabet.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let n = alphabet.len();
    let mut counts = vec![0u64; n * n];
    for pair in chars.windows(2) {
        counts[index[&pair[0]] * n + index[&pair[1]]] += 1;
    }
    counts[index[chars.last().unwrap()] * n + index[&chars[0]]] += 1;

    if !strongly_connected(&counts, n) {
        return Err(Error::NotIrreducible);
    }

    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        let total: u64 = counts[i * n..(i + 1) * n].iter().sum();
        let row = p.row_mut(i);
        for j in 0..n {
            row[j] = counts[i * n + j] as f64 / total as f64;
        }
    }
    let labels = alphabet.iter().map(|c| c.to_string()).collect();
    let chain = MarkovChain::with_states(labels, p)?;
    Ok((chain, alphabet))
}

fn strongly_connected(counts: &[u64], n: usize) -> bool {
    let reached = |forward: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut total = 1;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let edge = if forward {
                    counts[i * n + j]
                } else {
                    counts[j * n + i]
                };
                if edge > 0 && !seen[j] {
                    seen[j] = true;
                    total += 1;
                    stack.push(j);
                }
            }
        }
        total
    };
    reached(true) == n && reached(false) == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{cost_beta, cost_lumpability};

    #[test]
    fn block_rows_are_stochastic_and_partition_matches_sizes() {
        let spec = BlockChainSpec::new(vec![3, 4, 5], 0.6, 0.2, 9);
        let mut rng = Rng::new(spec.seed);
        let draw = block_stochastic(&spec, &mut rng).unwrap();
        assert_eq!(draw.transition.rows(), 12);
        for s in draw.transition.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        for s in draw.mixing.row_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(draw.planted.sizes(), vec![3, 4, 5]);
    }

    #[test]
    fn noiseless_planted_partition_is_lumpable() {
        for seed in 0..5 {
            let spec = BlockChainSpec::new(vec![4, 3, 5], 0.3 + 0.1 * seed as f64, 0.0, seed);
            let (chain, planted) = spec.generate_chain().unwrap();
            assert!(cost_lumpability(&chain, &planted).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn noiseless_aggregate_equals_mixing_matrix() {
        let spec = BlockChainSpec::new(vec![4, 4], 0.7, 0.0, 33);
        let mut rng = Rng::new(spec.seed);
        let draw = block_stochastic(&spec, &mut rng).unwrap();
        let chain = MarkovChain::from_transition(draw.transition).unwrap();
        let agg = crate::chain::aggregate_chain(&chain, &draw.planted).unwrap();
        assert!(agg.q.max_abs_diff(&draw.mixing).unwrap() < 1e-12);
    }

    #[test]
    fn completely_decomposable_chain_is_reducible() {
        let spec = BlockChainSpec::new(vec![3, 3], 1.0, 0.0, 2);
        let mut rng = Rng::new(spec.seed);
        let draw = block_stochastic(&spec, &mut rng).unwrap();
        // Off-diagonal blocks vanish entirely.
        for i in 0..3 {
            for j in 3..6 {
                assert_eq!(draw.transition[(i, j)], 0.0);
                assert_eq!(draw.transition[(j, i)], 0.0);
            }
        }
        assert_eq!(
            MarkovChain::from_transition(draw.transition).unwrap_err(),
            crate::Error::Reducible
        );
    }

    #[test]
    fn identity_permutation_is_a_no_op() {
        let spec = BlockChainSpec::new(vec![2, 3], 0.5, 0.3, 1);
        let mut rng = Rng::new(spec.seed);
        let draw = block_stochastic(&spec, &mut rng).unwrap();
        let perm: Vec<usize> = (0..5).collect();
        let (p2, g2) = permute_chain(&draw.transition, &draw.planted, &perm).unwrap();
        assert_eq!(draw.transition.max_abs_diff(&p2).unwrap(), 0.0);
        assert_eq!(draw.planted.assignment(), g2.assignment());
    }

    #[test]
    fn permutation_preserves_costs() {
        let spec = BlockChainSpec::new(vec![3, 3], 0.4, 0.25, 17);
        let (chain, g) = spec.generate_chain().unwrap();
        let mut rng = Rng::new(5);
        let perm = rng.permutation(6);
        let (p2, g2) = permute_chain(chain.transition(), &g, &perm).unwrap();
        let chain2 = MarkovChain::from_transition(p2).unwrap();
        for &beta in &[0.0, 0.4, 1.0] {
            let a = cost_beta(&chain, &g, beta).unwrap();
            let b = cost_beta(&chain2, &g2, beta).unwrap();
            assert!((a.c_beta - b.c_beta).abs() < 1e-12);
            assert!((a.c_l - b.c_l).abs() < 1e-12);
            assert!((a.c_p - b.c_p).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_permutations_are_rejected() {
        let p = Matrix::identity(3);
        let g = AggregationMap::identity(3);
        assert_eq!(
            permute_chain(&p, &g, &[0, 0, 1]).unwrap_err(),
            Error::NotAPermutation
        );
        assert_eq!(
            permute_chain(&p, &g, &[0, 1]).unwrap_err(),
            Error::NotAPermutation
        );
    }

    #[test]
    fn two_point_similarity_closed_form() {
        let spec = SimilaritySpec {
            points: vec![vec![0.0], vec![2.0]],
            k_nearest: 1,
        };
        let chain = similarity_chain(&spec).unwrap();
        // Scale is the squared distance itself, so the off-diagonal
        // weight is exp(-1).
        let w = libm::exp(-1.0);
        let expect = w / (1.0 + w);
        assert!((chain.transition()[(0, 1)] - expect).abs() < 1e-12);
        assert!((chain.transition()[(1, 0)] - expect).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let spec = SimilaritySpec {
            points: vec![vec![1.0, 1.0]; 4],
            k_nearest: 2,
        };
        assert_eq!(
            similarity_chain(&spec).unwrap_err(),
            Error::DegeneratePoints
        );
    }

    #[test]
    fn similarity_rows_strictly_positive() {
        let mut rng = Rng::new(2);
        let points: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.normal(), rng.normal()]).collect();
        let chain = similarity_chain(&SimilaritySpec {
            points,
            k_nearest: 5,
        })
        .unwrap();
        assert!(chain.transition().data().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn alternating_text_gives_two_state_alternation() {
        let (chain, alphabet) = bigram_chain("ababababab").unwrap();
        assert_eq!(alphabet, vec!['a', 'b']);
        // Every a is followed by b; the wraparound adds one b -> a count.
        assert!((chain.transition()[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((chain.transition()[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wraparound_count_matches_hand_tally() {
        let (chain, alphabet) = bigram_chain("aabb").unwrap();
        assert_eq!(alphabet, vec!['a', 'b']);
        // Pairs aa, ab, bb plus wraparound b -> a: both rows (0.5, 0.5).
        for i in 0..2 {
            for j in 0..2 {
                assert!((chain.transition()[(i, j)] - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_text_is_rejected() {
        assert!(bigram_chain("").is_err());
    }
}
