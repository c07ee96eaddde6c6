#include "tnkf/tt.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tnkf/errors.hpp"

namespace tnkf {
namespace {

// Singular values at or below this fraction of the largest are treated as
// numerically zero when counting ranks.
constexpr double kNumericalZero = 1e-14;

using Eigen::Map;
using Eigen::OuterStride;

using ConstSlice = Map<const MatrixXd, 0, OuterStride<>>;

// Slice (:, i, :) of a core with middle size mid: an r_prev x r_next view.
ConstSlice core_slice(const MatrixXd& core, Index mid, Index i) {
  const Index r_prev = core.rows();
  const Index r_next = core.cols() / mid;
  return ConstSlice(core.data() + i * r_prev, r_prev, r_next,
                    OuterStride<>(r_prev * mid));
}

Index product(const std::vector<Index>& v) {
  Index p = 1;
  for (Index x : v) p *= x;
  return p;
}

// out += a (p x q) kron b (s x t), combined row index (a_row * s + b_row).
void kron_accumulate(MatrixXd& out, const ConstSlice& a, const ConstSlice& b) {
  const Index s = b.rows();
  const Index t = b.cols();
  for (Index col = 0; col < a.cols(); ++col)
    for (Index row = 0; row < a.rows(); ++row) {
      const double w = a(row, col);
      if (w != 0.0) out.block(row * s, col * t, s, t) += w * b;
    }
}

// Rank selection shared by TT-SVD and TT-rounding.  delta is the per-cut
// absolute error budget (RelativeError mode only); all modes drop singular
// values at floating-point-noise level.
Index select_rank(const VectorXd& sigma, const TruncationPolicy& policy,
                  double delta) {
  const Index n = sigma.size();
  if (n == 0) return 1;
  const double floor = kNumericalZero * sigma(0);
  Index rank = 0;
  for (Index i = 0; i < n; ++i)
    if (sigma(i) > floor) ++rank;
  if (policy.mode == TruncationPolicy::Mode::RelativeError && delta > 0.0) {
    double tail = 0.0;
    Index keep = rank;
    for (Index i = rank - 1; i >= 0; --i) {
      tail += sigma(i) * sigma(i);
      if (tail > delta * delta) break;
      keep = i;
    }
    rank = keep;
  } else if (policy.mode == TruncationPolicy::Mode::MaxRank) {
    rank = std::min(rank, policy.max_rank);
  }
  return std::max<Index>(rank, 1);
}

struct ThinSVD {
  MatrixXd u;
  VectorXd sigma;
  MatrixXd v;
};

ThinSVD thin_svd(const MatrixXd& m) {
  Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// ---------------------------------------------------------------------------
// Generic core-chain routines.  A chain is a list of cores plus the middle
// size of each; TTVector uses dims, TTMatrix the fused row*col sizes.
// ---------------------------------------------------------------------------

double chain_inner(const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b,
                   const std::vector<Index>& mids) {
  MatrixXd w = MatrixXd::Ones(1, 1);
  for (size_t k = 0; k < a.size(); ++k) {
    const Index mid = mids[k];
    const Index ra = a[k].rows(), rb = b[k].rows();
    const Index ra2 = a[k].cols() / mid, rb2 = b[k].cols() / mid;
    MatrixXd next = MatrixXd::Zero(ra2, rb2);
    for (Index i = 0; i < mid; ++i) {
      ConstSlice sa = core_slice(a[k], mid, i);
      ConstSlice sb = core_slice(b[k], mid, i);
      if (ra <= rb)
        next.noalias() += (sa.transpose() * w) * sb;
      else
        next.noalias() += sa.transpose() * (w * sb);
    }
    w = std::move(next);
  }
  return w(0, 0);
}

double chain_norm(const std::vector<MatrixXd>& cores, const std::vector<Index>& mids) {
  return std::sqrt(std::max(0.0, chain_inner(cores, cores, mids)));
}

// Right-to-left orthogonalization followed by a left-to-right truncating
// SVD sweep (the reference rounding procedure).  Rounds in place.
void chain_round(std::vector<MatrixXd>& cores, const std::vector<Index>& mids,
                 const TruncationPolicy& policy) {
  const Index d = static_cast<Index>(cores.size());
  if (d <= 1) return;

  // Orthogonalize so that every core but the first has orthonormal rows in
  // its right unfolding; the total norm collects in core 0.
  for (Index k = d - 1; k >= 1; --k) {
    MatrixXd rt = cores[k].transpose();  // (mid*r_next) x r_prev
    Eigen::HouseholderQR<MatrixXd> qr(rt);
    const Index q = std::min(rt.rows(), rt.cols());
    MatrixXd thin_q = qr.householderQ() * MatrixXd::Identity(rt.rows(), q);
    MatrixXd r_factor = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
    cores[k] = thin_q.transpose();
    // Fold R^T into the previous core's trailing rank.
    const Index r_prev = cores[k - 1].rows();
    const Index mid_prev = mids[k - 1];
    Map<const MatrixXd> left(cores[k - 1].data(), r_prev * mid_prev,
                             cores[k - 1].cols() / mid_prev);
    MatrixXd folded = left * r_factor.transpose();  // (r_prev*mid) x q
    cores[k - 1] = Map<MatrixXd>(folded.data(), r_prev, mid_prev * q);
  }

  const double norm = cores[0].norm();
  double delta = 0.0;
  if (policy.mode == TruncationPolicy::Mode::RelativeError)
    delta = policy.epsilon * norm / std::sqrt(static_cast<double>(d - 1));

  for (Index k = 0; k + 1 < d; ++k) {
    const Index r_prev = cores[k].rows();
    const Index mid = mids[k];
    const Index r_next = cores[k].cols() / mid;
    Map<const MatrixXd> left(cores[k].data(), r_prev * mid, r_next);
    ThinSVD svd = thin_svd(left);
    const Index r = select_rank(svd.sigma, policy, delta);
    MatrixXd u = svd.u.leftCols(r);
    cores[k] = Map<MatrixXd>(u.data(), r_prev, mid * r);
    MatrixXd carry =
        svd.sigma.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
    cores[k + 1] = carry * cores[k + 1];
  }
}

// Left-to-right truncating sweep without the preliminary orthogonalization.
// Local singular values overestimate the global ones, so this truncates
// conservatively; a reference pass afterwards (cheap at the reduced rank)
// restores near-optimal ranks.
void chain_round_fast(std::vector<MatrixXd>& cores, const std::vector<Index>& mids,
                      const TruncationPolicy& policy) {
  const Index d = static_cast<Index>(cores.size());
  if (d <= 1) return;
  const double norm = chain_norm(cores, mids);
  double delta = 0.0;
  if (policy.mode == TruncationPolicy::Mode::RelativeError)
    delta = policy.epsilon * norm / std::sqrt(static_cast<double>(d - 1));
  for (Index k = 0; k + 1 < d; ++k) {
    const Index r_prev = cores[k].rows();
    const Index mid = mids[k];
    const Index r_next = cores[k].cols() / mid;
    Map<const MatrixXd> left(cores[k].data(), r_prev * mid, r_next);
    ThinSVD svd = thin_svd(left);
    const Index r = select_rank(svd.sigma, policy, delta);
    MatrixXd u = svd.u.leftCols(r);
    cores[k] = Map<MatrixXd>(u.data(), r_prev, mid * r);
    MatrixXd carry =
        svd.sigma.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
    cores[k + 1] = carry * cores[k + 1];
  }
  chain_round(cores, mids, policy);
}

std::vector<MatrixXd> chain_svd(const VectorXd& data, const std::vector<Index>& mids,
                                const TruncationPolicy& policy) {
  const Index d = static_cast<Index>(mids.size());
  const double norm = data.norm();
  double delta = 0.0;
  if (policy.mode == TruncationPolicy::Mode::RelativeError && d > 1)
    delta = policy.epsilon * norm / std::sqrt(static_cast<double>(d - 1));

  std::vector<MatrixXd> cores(d);
  VectorXd work = data;
  Index r_prev = 1;
  Index rest = data.size();
  for (Index k = 0; k + 1 < d; ++k) {
    const Index mid = mids[k];
    rest /= mid;
    Map<const MatrixXd> m(work.data(), r_prev * mid, rest);
    ThinSVD svd = thin_svd(m);
    const Index r = select_rank(svd.sigma, policy, delta);
    MatrixXd u = svd.u.leftCols(r);
    cores[k] = Map<MatrixXd>(u.data(), r_prev, mid * r);
    MatrixXd carry =
        svd.sigma.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
    work = Map<VectorXd>(carry.data(), r * rest);
    r_prev = r;
  }
  cores[d - 1] = Map<const MatrixXd>(work.data(), r_prev, mids[d - 1]);
  return cores;
}

VectorXd chain_full(const std::vector<MatrixXd>& cores, const std::vector<Index>& mids) {
  MatrixXd acc = Map<const MatrixXd>(cores[0].data(), mids[0],
                                     cores[0].cols() / mids[0]);
  for (size_t k = 1; k < cores.size(); ++k) {
    MatrixXd next = acc * cores[k];  // (P x r)(r x mid*r') -> (P x mid*r')
    const Index r_next = cores[k].cols() / mids[k];
    acc = Map<MatrixXd>(next.data(), next.rows() * mids[k], r_next);
  }
  return Map<VectorXd>(acc.data(), acc.rows());
}

std::vector<MatrixXd> chain_add(const std::vector<MatrixXd>& a,
                                const std::vector<MatrixXd>& b,
                                const std::vector<Index>& mids) {
  const Index d = static_cast<Index>(a.size());
  if (d == 1) {
    std::vector<MatrixXd> out(1);
    out[0] = a[0] + b[0];
    return out;
  }
  std::vector<MatrixXd> out(d);
  for (Index k = 0; k < d; ++k) {
    const Index mid = mids[k];
    const Index ra = a[k].rows(), ra2 = a[k].cols() / mid;
    const Index rb = b[k].rows(), rb2 = b[k].cols() / mid;
    const Index r_prev = (k == 0) ? 1 : ra + rb;
    const Index r_next = (k == d - 1) ? 1 : ra2 + rb2;
    MatrixXd core = MatrixXd::Zero(r_prev, mid * r_next);
    for (Index i = 0; i < mid; ++i) {
      ConstSlice sa = core_slice(a[k], mid, i);
      ConstSlice sb = core_slice(b[k], mid, i);
      Map<MatrixXd, 0, OuterStride<>> so(core.data() + i * r_prev, r_prev,
                                         r_next, OuterStride<>(r_prev * mid));
      if (k == 0) {
        so.leftCols(ra2) = sa;
        so.rightCols(rb2) = sb;
      } else if (k == d - 1) {
        so.topRows(ra) = sa;
        so.bottomRows(rb) = sb;
      } else {
        so.topLeftCorner(ra, ra2) = sa;
        so.bottomRightCorner(rb, rb2) = sb;
      }
    }
    out[k] = std::move(core);
  }
  return out;
}

std::vector<Index> fused_mids(const TTMatrix& m) {
  std::vector<Index> mids(m.order());
  for (Index k = 0; k < m.order(); ++k)
    mids[k] = m.row_dims()[k] * m.col_dims()[k];
  return mids;
}

void check_same_dims(const std::vector<Index>& a, const std::vector<Index>& b,
                     const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": dims mismatch");
}

}  // namespace

// ---------------------------------------------------------------------------
// TTVector / TTMatrix
// ---------------------------------------------------------------------------

TTVector::TTVector(std::vector<Index> dims, std::vector<MatrixXd> cores)
    : dims_(std::move(dims)), cores_(std::move(cores)) {
  validate();
}

TTVector TTVector::zeros(const std::vector<Index>& dims) {
  std::vector<MatrixXd> cores;
  cores.reserve(dims.size());
  for (Index n : dims) cores.push_back(MatrixXd::Zero(1, n));
  return TTVector(dims, std::move(cores));
}

Index TTVector::size() const { return product(dims_); }

std::vector<Index> TTVector::ranks() const {
  std::vector<Index> r(dims_.size() + 1, 1);
  for (size_t k = 0; k < cores_.size(); ++k) r[k] = cores_[k].rows();
  return r;
}

Index TTVector::max_rank() const {
  Index m = 1;
  for (const auto& c : cores_) m = std::max(m, c.rows());
  return m;
}

double TTVector::element(Index linear) const {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Ones(1);
  for (size_t k = 0; k < cores_.size(); ++k) {
    const Index i = linear % dims_[k];
    linear /= dims_[k];
    acc = acc * core_slice(cores_[k], dims_[k], i);
  }
  return acc(0);
}

void TTVector::validate() const {
  if (dims_.empty() || dims_.size() != cores_.size())
    throw std::invalid_argument("TTVector: empty or inconsistent dims");
  Index r = 1;
  for (size_t k = 0; k < cores_.size(); ++k) {
    if (dims_[k] < 1) throw std::invalid_argument("TTVector: dims must be positive");
    if (cores_[k].rows() != r || cores_[k].cols() % dims_[k] != 0)
      throw std::invalid_argument("TTVector: core shape breaks rank adjacency");
    r = cores_[k].cols() / dims_[k];
  }
  if (r != 1) throw std::invalid_argument("TTVector: trailing rank must be 1");
}

TTMatrix::TTMatrix(std::vector<Index> row_dims, std::vector<Index> col_dims,
                   std::vector<MatrixXd> cores)
    : row_dims_(std::move(row_dims)),
      col_dims_(std::move(col_dims)),
      cores_(std::move(cores)) {
  validate();
}

Index TTMatrix::rows() const { return product(row_dims_); }
Index TTMatrix::cols() const { return product(col_dims_); }

std::vector<Index> TTMatrix::ranks() const {
  std::vector<Index> r(row_dims_.size() + 1, 1);
  for (size_t k = 0; k < cores_.size(); ++k) r[k] = cores_[k].rows();
  return r;
}

Index TTMatrix::max_rank() const {
  Index m = 1;
  for (const auto& c : cores_) m = std::max(m, c.rows());
  return m;
}

double TTMatrix::element(Index row, Index col) const {
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Ones(1);
  for (size_t k = 0; k < cores_.size(); ++k) {
    const Index i = row % row_dims_[k];
    const Index j = col % col_dims_[k];
    row /= row_dims_[k];
    col /= col_dims_[k];
    const Index mid = row_dims_[k] * col_dims_[k];
    acc = acc * core_slice(cores_[k], mid, i + row_dims_[k] * j);
  }
  return acc(0);
}

void TTMatrix::validate() const {
  if (row_dims_.empty() || row_dims_.size() != col_dims_.size() ||
      row_dims_.size() != cores_.size())
    throw std::invalid_argument("TTMatrix: empty or inconsistent dims");
  Index r = 1;
  for (size_t k = 0; k < cores_.size(); ++k) {
    if (row_dims_[k] < 1 || col_dims_[k] < 1)
      throw std::invalid_argument("TTMatrix: dims must be positive");
    const Index mid = row_dims_[k] * col_dims_[k];
    if (cores_[k].rows() != r || cores_[k].cols() % mid != 0)
      throw std::invalid_argument("TTMatrix: core shape breaks rank adjacency");
    r = cores_[k].cols() / mid;
  }
  if (r != 1) throw std::invalid_argument("TTMatrix: trailing rank must be 1");
}

// ---------------------------------------------------------------------------
// Construction from dense data
// ---------------------------------------------------------------------------

TTVector tt_svd_vector(const VectorXd& data, const std::vector<Index>& dims,
                       const TruncationPolicy& policy) {
  if (dims.empty()) throw std::invalid_argument("tt_svd_vector: dims empty");
  if (product(dims) != data.size())
    throw std::invalid_argument("tt_svd_vector: data length != product of dims");
  return TTVector(dims, chain_svd(data, dims, policy));
}

TTMatrix tt_svd_matrix(const MatrixXd& data, const std::vector<Index>& row_dims,
                       const std::vector<Index>& col_dims,
                       const TruncationPolicy& policy) {
  if (row_dims.empty() || row_dims.size() != col_dims.size())
    throw std::invalid_argument("tt_svd_matrix: row/col dims length mismatch");
  if (product(row_dims) != data.rows() || product(col_dims) != data.cols())
    throw std::invalid_argument("tt_svd_matrix: shape != product of dims");

  const Index d = static_cast<Index>(row_dims.size());
  std::vector<Index> mids(d);
  for (Index k = 0; k < d; ++k) mids[k] = row_dims[k] * col_dims[k];

  // Permute M(row, col) into a vector indexed by the fused per-core digits
  // f_k = i_k + m_k * j_k, f_1 fastest.
  const Index total = data.size();
  VectorXd t(total);
  std::vector<Index> digit(d, 0);
  for (Index lin = 0; lin < total; ++lin) {
    Index row = 0, col = 0, rs = 1, cs = 1;
    for (Index k = 0; k < d; ++k) {
      const Index i = digit[k] % row_dims[k];
      const Index j = digit[k] / row_dims[k];
      row += i * rs;
      col += j * cs;
      rs *= row_dims[k];
      cs *= col_dims[k];
    }
    t(lin) = data(row, col);
    for (Index k = 0; k < d; ++k) {
      if (++digit[k] < mids[k]) break;
      digit[k] = 0;
    }
  }
  return TTMatrix(row_dims, col_dims, chain_svd(t, mids, policy));
}

// ---------------------------------------------------------------------------
// Rounding
// ---------------------------------------------------------------------------

TTVector tt_round(const TTVector& tt, const TruncationPolicy& policy) {
  std::vector<MatrixXd> cores = tt.cores();
  chain_round(cores, tt.dims(), policy);
  return TTVector(tt.dims(), std::move(cores));
}

TTMatrix tt_round(const TTMatrix& tt, const TruncationPolicy& policy) {
  std::vector<MatrixXd> cores = tt.cores();
  chain_round(cores, fused_mids(tt), policy);
  return TTMatrix(tt.row_dims(), tt.col_dims(), std::move(cores));
}

TTVector tt_round_fast(const TTVector& tt, const TruncationPolicy& policy) {
  std::vector<MatrixXd> cores = tt.cores();
  chain_round_fast(cores, tt.dims(), policy);
  return TTVector(tt.dims(), std::move(cores));
}

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

TTVector tt_add(const TTVector& a, const TTVector& b) {
  check_same_dims(a.dims(), b.dims(), "tt_add");
  return TTVector(a.dims(), chain_add(a.cores(), b.cores(), a.dims()));
}

TTMatrix tt_add(const TTMatrix& a, const TTMatrix& b) {
  check_same_dims(a.row_dims(), b.row_dims(), "tt_add");
  check_same_dims(a.col_dims(), b.col_dims(), "tt_add");
  return TTMatrix(a.row_dims(), a.col_dims(),
                  chain_add(a.cores(), b.cores(), fused_mids(a)));
}

TTVector tt_scale(const TTVector& a, double s) {
  std::vector<MatrixXd> cores = a.cores();
  cores[0] *= s;
  return TTVector(a.dims(), std::move(cores));
}

TTMatrix tt_scale(const TTMatrix& a, double s) {
  std::vector<MatrixXd> cores = a.cores();
  cores[0] *= s;
  return TTMatrix(a.row_dims(), a.col_dims(), std::move(cores));
}

TTVector tt_matvec(const TTMatrix& m, const TTVector& v) {
  check_same_dims(m.col_dims(), v.dims(), "tt_matvec");
  const Index d = m.order();
  std::vector<MatrixXd> cores(d);
  for (Index k = 0; k < d; ++k) {
    const Index mr = m.row_dims()[k], mc = m.col_dims()[k];
    const Index mid = mr * mc;
    const Index rm = m.cores()[k].rows(), rm2 = m.cores()[k].cols() / mid;
    const Index rv = v.cores()[k].rows(), rv2 = v.cores()[k].cols() / mc;
    MatrixXd core = MatrixXd::Zero(rm * rv, mr * rm2 * rv2);
    for (Index i = 0; i < mr; ++i) {
      MatrixXd acc = MatrixXd::Zero(rm * rv, rm2 * rv2);
      for (Index j = 0; j < mc; ++j)
        kron_accumulate(acc, core_slice(m.cores()[k], mid, i + mr * j),
                        core_slice(v.cores()[k], mc, j));
      Map<MatrixXd, 0, OuterStride<>>(core.data() + i * rm * rv, rm * rv,
                                      rm2 * rv2, OuterStride<>(rm * rv * mr)) =
          acc;
    }
    cores[k] = std::move(core);
  }
  return TTVector(m.row_dims(), std::move(cores));
}

TTMatrix tt_matmat(const TTMatrix& a, const TTMatrix& b) {
  check_same_dims(a.col_dims(), b.row_dims(), "tt_matmat");
  const Index d = a.order();
  std::vector<MatrixXd> cores(d);
  for (Index k = 0; k < d; ++k) {
    const Index mr = a.row_dims()[k], ms = a.col_dims()[k], mc = b.col_dims()[k];
    const Index mida = mr * ms, midb = ms * mc;
    const Index ra = a.cores()[k].rows(), ra2 = a.cores()[k].cols() / mida;
    const Index rb = b.cores()[k].rows(), rb2 = b.cores()[k].cols() / midb;
    const Index mid = mr * mc;
    MatrixXd core = MatrixXd::Zero(ra * rb, mid * ra2 * rb2);
    for (Index j = 0; j < mc; ++j)
      for (Index i = 0; i < mr; ++i) {
        MatrixXd acc = MatrixXd::Zero(ra * rb, ra2 * rb2);
        for (Index s = 0; s < ms; ++s)
          kron_accumulate(acc, core_slice(a.cores()[k], mida, i + mr * s),
                          core_slice(b.cores()[k], midb, s + ms * j));
        Map<MatrixXd, 0, OuterStride<>>(core.data() + (i + mr * j) * ra * rb,
                                        ra * rb, ra2 * rb2,
                                        OuterStride<>(ra * rb * mid)) = acc;
      }
    cores[k] = std::move(core);
  }
  return TTMatrix(a.row_dims(), b.col_dims(), std::move(cores));
}

double tt_inner(const TTVector& a, const TTVector& b) {
  check_same_dims(a.dims(), b.dims(), "tt_inner");
  return chain_inner(a.cores(), b.cores(), a.dims());
}

TTMatrix tt_outer(const TTVector& u, const TTVector& v) {
  const Index d = u.order();
  if (v.order() != d)
    throw std::invalid_argument("tt_outer: operand orders differ");
  std::vector<MatrixXd> cores(d);
  for (Index k = 0; k < d; ++k) {
    const Index mr = u.dims()[k], mc = v.dims()[k];
    const Index ru = u.cores()[k].rows(), ru2 = u.cores()[k].cols() / mr;
    const Index rv = v.cores()[k].rows(), rv2 = v.cores()[k].cols() / mc;
    MatrixXd core(ru * rv, mr * mc * ru2 * rv2);
    for (Index j = 0; j < mc; ++j)
      for (Index i = 0; i < mr; ++i) {
        MatrixXd acc = MatrixXd::Zero(ru * rv, ru2 * rv2);
        kron_accumulate(acc, core_slice(u.cores()[k], mr, i),
                        core_slice(v.cores()[k], mc, j));
        Map<MatrixXd, 0, OuterStride<>>(core.data() + (i + mr * j) * ru * rv,
                                        ru * rv, ru2 * rv2,
                                        OuterStride<>(ru * rv * mr * mc)) = acc;
      }
    cores[k] = std::move(core);
  }
  return TTMatrix(u.dims(), v.dims(), std::move(cores));
}

TTMatrix tt_rank1_diag(double value, const std::vector<Index>& dims) {
  if (dims.empty()) throw std::invalid_argument("tt_rank1_diag: dims empty");
  std::vector<MatrixXd> cores;
  cores.reserve(dims.size());
  for (Index n : dims) {
    MatrixXd core = MatrixXd::Zero(1, n * n);
    for (Index i = 0; i < n; ++i) core(0, i + n * i) = 1.0;
    cores.push_back(std::move(core));
  }
  cores[0] *= value;
  return TTMatrix(dims, dims, std::move(cores));
}

double tt_frobenius_norm(const TTVector& tt) {
  return chain_norm(tt.cores(), tt.dims());
}

double tt_frobenius_norm(const TTMatrix& tt) {
  return chain_norm(tt.cores(), fused_mids(tt));
}

// ---------------------------------------------------------------------------
// Densification
// ---------------------------------------------------------------------------

VectorXd tt_full(const TTVector& tt, Index max_elements) {
  if (tt.size() > max_elements)
    throw ResourceLimitError("tt_full: vector of " + std::to_string(tt.size()) +
                             " elements exceeds cap " + std::to_string(max_elements));
  return chain_full(tt.cores(), tt.dims());
}

MatrixXd tt_full(const TTMatrix& tt, Index max_elements) {
  const Index rows = tt.rows(), cols = tt.cols();
  if (rows * cols > max_elements)
    throw ResourceLimitError("tt_full: matrix of " + std::to_string(rows * cols) +
                             " elements exceeds cap " + std::to_string(max_elements));
  VectorXd fused = chain_full(tt.cores(), fused_mids(tt));
  MatrixXd out(rows, cols);
  const Index d = tt.order();
  std::vector<Index> digit(d, 0);
  for (Index lin = 0; lin < fused.size(); ++lin) {
    Index row = 0, col = 0, rs = 1, cs = 1;
    for (Index k = 0; k < d; ++k) {
      row += (digit[k] % tt.row_dims()[k]) * rs;
      col += (digit[k] / tt.row_dims()[k]) * cs;
      rs *= tt.row_dims()[k];
      cs *= tt.col_dims()[k];
    }
    out(row, col) = fused(lin);
    for (Index k = 0; k < d; ++k) {
      if (++digit[k] < tt.row_dims()[k] * tt.col_dims()[k]) break;
      digit[k] = 0;
    }
  }
  return out;
}

TTMatrix tt_transpose(const TTMatrix& m) {
  const Index d = m.order();
  std::vector<MatrixXd> cores(d);
  for (Index k = 0; k < d; ++k) {
    const Index mr = m.row_dims()[k], mc = m.col_dims()[k];
    const Index r = m.cores()[k].rows();
    const Index r2 = m.cores()[k].cols() / (mr * mc);
    MatrixXd core(r, mr * mc * r2);
    for (Index j = 0; j < mc; ++j)
      for (Index i = 0; i < mr; ++i)
        Map<MatrixXd, 0, OuterStride<>>(core.data() + (j + mc * i) * r, r, r2,
                                        OuterStride<>(r * mr * mc)) =
            core_slice(m.cores()[k], mr * mc, i + mr * j);
    cores[k] = std::move(core);
  }
  return TTMatrix(m.col_dims(), m.row_dims(), std::move(cores));
}

// ---------------------------------------------------------------------------
// Fused matvec + rounding (zip-up sweep)
// ---------------------------------------------------------------------------

TTVector tt_matvec_rounded(const TTMatrix& m, const TTVector& v, double scale,
                           const TruncationPolicy& policy) {
  check_same_dims(m.col_dims(), v.dims(), "tt_matvec_rounded");
  const Index d = m.order();

  std::vector<MatrixXd> cores(d);
  MatrixXd carry = MatrixXd::Constant(1, 1, scale);
  for (Index k = 0; k < d; ++k) {
    const Index mr = m.row_dims()[k], mc = m.col_dims()[k];
    const Index mid = mr * mc;
    const Index rm = m.cores()[k].rows(), rm2 = m.cores()[k].cols() / mid;
    const Index rv = v.cores()[k].rows(), rv2 = v.cores()[k].cols() / mc;
    // Exact product core for this site.
    MatrixXd site = MatrixXd::Zero(rm * rv, mr * rm2 * rv2);
    for (Index i = 0; i < mr; ++i) {
      MatrixXd acc = MatrixXd::Zero(rm * rv, rm2 * rv2);
      for (Index j = 0; j < mc; ++j)
        kron_accumulate(acc, core_slice(m.cores()[k], mid, i + mr * j),
                        core_slice(v.cores()[k], mc, j));
      Map<MatrixXd, 0, OuterStride<>>(site.data() + i * rm * rv, rm * rv,
                                      rm2 * rv2, OuterStride<>(rm * rv * mr)) =
          acc;
    }
    MatrixXd w = carry * site;  // (rg x mr * R')
    if (k == d - 1) {
      cores[k] = std::move(w);
      break;
    }
    const Index rg = w.rows();
    const Index rr = rm2 * rv2;
    Map<const MatrixXd> wl(w.data(), rg * mr, rr);
    ThinSVD svd = thin_svd(wl);
    // Per-site budget against the local norm; the trailing chain is not
    // orthonormal so this is quasi-optimal, and the cleanup pass below
    // enforces the policy against the zipped result.
    double delta = 0.0;
    if (policy.mode == TruncationPolicy::Mode::RelativeError)
      delta = policy.epsilon * svd.sigma.norm() /
              std::sqrt(static_cast<double>(d - 1));
    const Index r = select_rank(svd.sigma, policy, delta);
    MatrixXd u = svd.u.leftCols(r);
    cores[k] = Map<MatrixXd>(u.data(), rg, mr * r);
    carry = svd.sigma.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
  }
  chain_round(cores, m.row_dims(), policy);
  return TTVector(m.row_dims(), std::move(cores));
}

}  // namespace tnkf
