#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace tnkf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Rank-control knob applied by the TT-SVD and TT-rounding routines.
/// RelativeError bounds the relative Frobenius error of the truncation,
/// MaxRank caps every connecting rank, None keeps everything above
/// floating-point noise.
struct TruncationPolicy {
  enum class Mode { None, RelativeError, MaxRank };

  Mode mode = Mode::None;
  double epsilon = 0.0;
  Index max_rank = 1;

  static TruncationPolicy exact() { return {}; }

  // epsilon == 0 collapses to exact, so tables that list "eps = 0" behave
  // as intended.
  static TruncationPolicy relative(double eps) {
    TruncationPolicy p;
    if (eps > 0.0) {
      p.mode = Mode::RelativeError;
      p.epsilon = eps;
    }
    return p;
  }

  static TruncationPolicy rank(Index r) {
    TruncationPolicy p;
    p.mode = Mode::MaxRank;
    p.max_rank = r;
    return p;
  }
};

// A tensor-train core of shape (r_prev, mid, r_next) is stored column-major
// as an r_prev x (mid * r_next) matrix.  Entry (a, i, b) sits at column
// i + mid * b, so both standard unfoldings are zero-copy remaps:
//   right unfolding  (r_prev) x (mid * r_next)   = the matrix itself
//   left unfolding   (r_prev * mid) x (r_next)   = remap of the same buffer
// For TT-matrices the middle index fuses (row, col) as i + row_dim * j.

/// Tensor train of a vector: d cores with middle sizes dims[k].
class TTVector {
 public:
  TTVector() = default;
  TTVector(std::vector<Index> dims, std::vector<MatrixXd> cores);

  /// Rank-1 all-zero TT over the given dims.
  static TTVector zeros(const std::vector<Index>& dims);

  const std::vector<Index>& dims() const { return dims_; }
  const std::vector<MatrixXd>& cores() const { return cores_; }
  std::vector<MatrixXd>& cores() { return cores_; }
  Index order() const { return static_cast<Index>(dims_.size()); }
  Index size() const;  // product of dims

  /// Ranks r_0..r_d (boundary ranks are always 1).
  std::vector<Index> ranks() const;
  Index max_rank() const;

  /// Element at a linear index (first dim fastest, column-major).
  double element(Index linear) const;

  void validate() const;  // throws std::invalid_argument on broken structure

 private:
  std::vector<Index> dims_;
  std::vector<MatrixXd> cores_;
};

/// Tensor train of a matrix: core k carries the (row_dims[k], col_dims[k])
/// index pair fused into one middle index.
class TTMatrix {
 public:
  TTMatrix() = default;
  TTMatrix(std::vector<Index> row_dims, std::vector<Index> col_dims,
           std::vector<MatrixXd> cores);

  const std::vector<Index>& row_dims() const { return row_dims_; }
  const std::vector<Index>& col_dims() const { return col_dims_; }
  const std::vector<MatrixXd>& cores() const { return cores_; }
  std::vector<MatrixXd>& cores() { return cores_; }
  Index order() const { return static_cast<Index>(row_dims_.size()); }
  Index rows() const;
  Index cols() const;

  std::vector<Index> ranks() const;
  Index max_rank() const;

  double element(Index row, Index col) const;

  void validate() const;

 private:
  std::vector<Index> row_dims_;
  std::vector<Index> col_dims_;
  std::vector<MatrixXd> cores_;
};

inline constexpr Index kDefaultDenseCap = Index(1) << 20;

/// Builds a TT-vector from dense data by consecutive thin SVDs.
TTVector tt_svd_vector(const VectorXd& data, const std::vector<Index>& dims,
                       const TruncationPolicy& policy);

/// Builds a TT-matrix from a dense matrix; row and column indices are split
/// pairwise per core (interleaved tensorization).
TTMatrix tt_svd_matrix(const MatrixXd& data, const std::vector<Index>& row_dims,
                       const std::vector<Index>& col_dims,
                       const TruncationPolicy& policy);

/// Truncates TT ranks: a right-to-left orthogonalization sweep followed by a
/// left-to-right SVD truncation sweep.
TTVector tt_round(const TTVector& tt, const TruncationPolicy& policy);
TTMatrix tt_round(const TTMatrix& tt, const TruncationPolicy& policy);

/// Adds two TTs by core concatenation; interior ranks add.
TTVector tt_add(const TTVector& a, const TTVector& b);
TTMatrix tt_add(const TTMatrix& a, const TTMatrix& b);

/// Scales a TT by a scalar (first core scaled; ranks unchanged).
TTVector tt_scale(const TTVector& a, double s);
TTMatrix tt_scale(const TTMatrix& a, double s);

/// Matrix-vector product in TT form; interior ranks multiply.
TTVector tt_matvec(const TTMatrix& m, const TTVector& v);

/// Matrix-matrix product in TT form; interior ranks multiply.
TTMatrix tt_matmat(const TTMatrix& a, const TTMatrix& b);

/// Dot product of two TT-vectors.
double tt_inner(const TTVector& a, const TTVector& b);

/// Outer product u v^T as a TT-matrix; interior ranks multiply.
TTMatrix tt_outer(const TTVector& u, const TTVector& v);

/// value * identity as a rank-1 TT-matrix over square dims.
TTMatrix tt_rank1_diag(double value, const std::vector<Index>& dims);

/// Frobenius norm computed by self-contraction, no densification.
double tt_frobenius_norm(const TTVector& tt);
double tt_frobenius_norm(const TTMatrix& tt);

/// Dense reconstruction, guarded by an element-count cap.
VectorXd tt_full(const TTVector& tt, Index max_elements = kDefaultDenseCap);
MatrixXd tt_full(const TTMatrix& tt, Index max_elements = kDefaultDenseCap);

/// Transpose of a TT-matrix (row/col index swap per core; ranks unchanged).
TTMatrix tt_transpose(const TTMatrix& m);

/// Applies a TT-matrix to a TT-vector and truncates on the fly (zip-up
/// sweep, then a standard rounding pass).  Result approximates
/// scale * (m v) under the policy; much cheaper than tt_round(tt_matvec)
/// when the structural rank product is large.
TTVector tt_matvec_rounded(const TTMatrix& m, const TTVector& v, double scale,
                           const TruncationPolicy& policy);

/// Single-pass variant of tt_round that skips the orthogonalization sweep,
/// then cleans up with a reference rounding pass at the reduced rank.
/// Quasi-optimal; used on chains whose ranks make the reference sweep
/// expensive.
TTVector tt_round_fast(const TTVector& tt, const TruncationPolicy& policy);

}  // namespace tnkf
