#pragma once

#include "affinescope/core.hpp"

#include <string>
#include <vector>

namespace afs {

/// A martingale on the uniform dyadic tree of depth k. Level j holds the 2^j node values as
/// columns (m × 2^j); node i at level j has children 2i and 2i + 1, so the first step is the
/// most significant bit of a leaf index.
struct DyadicMartingale {
    int depth = 0;
    TargetNorm target;
    std::vector<Matrix> levels;  // depth + 1 entries

    /// Builds the martingale closing at the given leaves (m × 2^k) by averaging up the tree.
    static DyadicMartingale from_leaves(const Matrix& leaves, const TargetNorm& target);

    void validate() const;
    /// max over internal nodes of ‖parent − (left + right)/2‖_∞ (0 for an exact martingale).
    double martingale_defect() const;
    /// The same martingale seen at a larger depth, with every extra step trivial.
    DyadicMartingale padded(int new_depth) const;
    /// Node values along every leaf's path: entry j is m × 2^k with column ℓ = M_j(ancestor of ℓ).
    std::vector<Matrix> paths() const;
};

/// (E‖M₀ + Σ ε_j (M_j − M_{j−1})‖^p / E‖M_k‖^p)^{1/p} with exact averages over the 2^k leaves;
/// a trivial martingale (zero denominator) gives 1.
double umd_ratio(const DyadicMartingale& mart, const std::vector<int>& signs, double p);

struct ConstantEstimate {
    std::string kind;  // beta_p, cotype_q or type_p
    double exponent = 2.0;
    double value = 0.0;  // a lower bound for the constant
    int depth = 0;
    std::vector<int> signs;  // beta_p witness
    int martingale = -1;     // index of the witness in the family
    Matrix vectors;          // cotype/type witness, one vector per column
};

/// Sup of umd_ratio over every sign pattern (exhaustive up to depth 14, `sign_samples` seeded
/// patterns beyond) and every martingale of the family. The value is re-evaluated directly at
/// the witness.
ConstantEstimate beta_lower_bound(const std::vector<DyadicMartingale>& family, double p, int threads = 1,
                                  int sign_samples = 16384, std::uint64_t seed = 0);

struct BetaQuery {
    double p = 2.0;
    int depth = 6;
    TargetNorm target;
    int family_size = 8;         // random martingales per depth
    bool include_pisier = false;  // add the L_p(μ) product martingales (target must be ℓ_q^{2^K}, K ≥ depth)
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

/// Seeded random martingales with heavy-tailed increments at each depth 1..depth. Members keep
/// their own depth (a depth-d martingale is a depth-k one with trivial extra steps, see padded),
/// so the family for depth k contains the one for depth k − 1 bit for bit and estimates are
/// non-decreasing in depth.
std::vector<DyadicMartingale> martingale_family(const BetaQuery& query);
ConstantEstimate beta_lower_bound(const BetaQuery& query);

/// M_j(ε)(δ) = Π_{ℓ≤j}(1 + ε_ℓδ_ℓ) = 2^j·1{ε and δ share their first j coordinates}, valued in
/// L_p of the uniform measure on {−1, 1}^k (R^{2^k} with the normalized ℓ_p norm).
DyadicMartingale pisier_lp_martingale(int k, double p);

/// (Σ‖x_j‖^q)^{1/q} / E‖Σ ε_j x_j‖ by exact enumeration; columns are the vectors (at most 16).
ConstantEstimate cotype_constant(const Matrix& vectors, const TargetNorm& target, double q);
/// E‖Σ ε_j x_j‖ / (Σ‖x_j‖^p)^{1/p}.
ConstantEstimate type_constant(const Matrix& vectors, const TargetNorm& target, double p);

}  // namespace afs
