#pragma once

// Symmetric eigensolvers: implicit QL on tridiagonal matrices, and a Lanczos
// iteration with full reorthogonalisation and locking for a few extreme
// eigenpairs of a large sparse operator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "nac/common.hpp"

namespace nac {

/// Eigen-decomposes the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (e[i] couples i and i+1; e.size() == d.size()-1 or
/// d.size()). On return `d` holds the eigenvalues (unsorted) and column j of
/// the row-major n×n `z` the matching unit eigenvector.
inline void tridiagonal_eigen(std::vector<double>& d, std::vector<double> e, std::vector<double>& z) {
  const int n = static_cast<int>(d.size());
  e.resize(static_cast<std::size_t>(n), 0.0);
  if (n > 0) e[static_cast<std::size_t>(n - 1)] = 0.0;
  z.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i * n + i)] = 1.0;
  auto Z = [&](int r, int c) -> double& { return z[static_cast<std::size_t>(r * n + c)]; };
  auto D = [&](int i) -> double& { return d[static_cast<std::size_t>(i)]; };
  auto E = [&](int i) -> double& { return e[static_cast<std::size_t>(i)]; };

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(D(m)) + std::abs(D(m + 1));
        if (std::abs(E(m)) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == 100) throw ConvergenceError("tridiagonal QL failed to converge");
        double g = (D(l + 1) - D(l)) / (2.0 * E(l));
        double r = std::hypot(g, 1.0);
        g = D(m) - D(l) + E(l) / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * E(i);
          double b = c * E(i);
          r = std::hypot(f, g);
          E(i + 1) = r;
          if (r == 0.0) {
            D(i + 1) -= p;
            E(m) = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = D(i + 1) - p;
          r = (D(i) - g) * s + 2.0 * c * b;
          p = s * r;
          D(i + 1) = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = Z(k, i + 1);
            Z(k, i + 1) = s * Z(k, i) + c * f;
            Z(k, i) = c * Z(k, i) - s * f;
          }
        }
        if (r == 0.0 && i >= l) continue;
        D(l) -= p;
        E(l) = g;
        E(m) = 0.0;
      }
    } while (m != l);
  }
}

enum class Spectrum { kSmallest, kLargest, kLargestMagnitude };

struct EigenPairs {
  std::size_t n = 0;
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // unit norm
  std::vector<double> residuals;             // ‖Av − λv‖₂
  std::size_t matvecs = 0;
};

struct LanczosOptions {
  double tol = 1e-8;             // residual bound relative to max(1, ‖A‖ estimate)
  std::size_t max_matvecs = 10000;
  std::uint64_t seed = 0x5eed;
  // With `skip_null`, Ritz values with |λ| <= null_threshold·max(1, ‖A‖)
  // end the search instead of being returned (largest-end spectra only).
  double null_threshold = 1e-9;
  bool skip_null = false;
};

/// Lanczos with full reorthogonalisation, explicit restarts and locking.
/// `apply(x, y)` must write A·x into y for a symmetric A of order n.
/// Throws ConvergenceError if the wanted pairs do not reach `tol` within the
/// matvec budget.
class LanczosSolver {
 public:
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;

  LanczosSolver(std::size_t n, Apply apply, LanczosOptions opt = {}) : n_(n), apply_(std::move(apply)), opt_(opt) {}

  EigenPairs solve(std::size_t count, Spectrum which) {
    EigenPairs out;
    out.n = n_;
    count = std::min(count, n_);
    if (count == 0) return out;
    Rng rng(opt_.seed);
    locked_.clear();
    locked_values_.clear();
    locked_res_.clear();
    matvecs_ = 0;
    norm_estimate_ = 0.0;

    std::vector<double> start = random_vector(rng);
    std::size_t basis = std::min(n_, std::max<std::size_t>(2 * count + 20, 40));
    bool probing = false;
    while (true) {
      const std::size_t free_dim = n_ - locked_.size();
      if (free_dim == 0) break;
      if (locked_.size() >= count && !probing) {
        // confirm nothing more extreme hides in the deflated space (e.g. a
        // second copy of a repeated eigenvalue)
        probing = true;
        start = random_vector(rng);
        basis = std::min(free_dim, std::max<std::size_t>(basis / 2, 30));
      }
      auto cycle = run_cycle(start, std::min(basis, free_dim), rng);
      if (cycle.values.empty()) break;
      const double scale = std::max(1.0, norm_estimate_);
      const double bound = opt_.tol * scale;
      auto order = wanted_order(cycle.values, which);

      std::size_t newly = 0;
      bool exhausted = false;
      for (auto idx : order) {
        if (cycle.residuals[idx] > bound) break;
        if (which != Spectrum::kSmallest && opt_.skip_null && is_null(cycle.values[idx])) {
          // everything left in the wanted direction is null as well
          exhausted = true;
          break;
        }
        if (probing) {
          // only accept the probe's pair if it beats the least extreme kept pair
          auto kept = ranked_locked(which, count);
          if (kept.size() >= count &&
              !more_extreme(cycle.values[idx], locked_values_[kept.back()], which, bound))
            break;
        }
        lock(cycle.vectors[idx], cycle.values[idx], cycle.residuals[idx]);
        ++newly;
        if (!probing && locked_.size() >= count) break;
      }
      if (exhausted) break;
      if (probing) {
        if (newly == 0) break;
        probing = false;
        continue;
      }
      if (locked_.size() >= count) continue;
      if (matvecs_ >= opt_.max_matvecs)
        throw ConvergenceError(concat("Lanczos: ", locked_.size(), " of ", count,
                                      " eigenpairs converged within ", opt_.max_matvecs, " matvecs"));
      // restart from the unconverged wanted Ritz vectors plus a little noise
      start.assign(n_, 0.0);
      std::size_t used = 0;
      for (auto idx : order) {
        if (cycle.residuals[idx] <= bound) continue;
        for (std::size_t i = 0; i < n_; ++i) start[i] += cycle.vectors[idx][i];
        if (++used == count) break;
      }
      auto noise = random_vector(rng);
      for (std::size_t i = 0; i < n_; ++i) start[i] += 1e-3 * noise[i];
      if (newly == 0) basis = std::min(free_dim, basis + basis / 2 + 10);
    }

    auto kept = ranked_locked(which, count);
    for (auto i : kept) {
      out.values.push_back(locked_values_[i]);
      out.vectors.push_back(locked_[i]);
      out.residuals.push_back(locked_res_[i]);
    }
    out.matvecs = matvecs_;
    return out;
  }

 private:
  struct Cycle {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
    std::vector<double> residuals;
  };

  std::vector<double> random_vector(Rng& rng) const {
    std::normal_distribution<double> nd;
    std::vector<double> v(n_);
    for (auto& x : v) x = nd(rng);
    return v;
  }

  static double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  }

  // Orthogonalise v against locked vectors and the current basis (twice).
  void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) const {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : locked_) {
        double c = dot(v, q);
        for (std::size_t i = 0; i < n_; ++i) v[i] -= c * q[i];
      }
      for (const auto& q : basis) {
        double c = dot(v, q);
        for (std::size_t i = 0; i < n_; ++i) v[i] -= c * q[i];
      }
    }
  }

  Cycle run_cycle(std::vector<double> start, std::size_t m, Rng& rng) {
    std::vector<std::vector<double>> Q;
    std::vector<double> alpha, beta;  // beta[j] couples j and j+1
    std::vector<double> w(n_);
    orthogonalize(start, Q);
    double nrm = std::sqrt(dot(start, start));
    for (int attempt = 0; nrm < 1e-12 && attempt < 8; ++attempt) {
      start = random_vector(rng);
      orthogonalize(start, Q);
      nrm = std::sqrt(dot(start, start));
    }
    if (nrm < 1e-12) return {};
    for (auto& x : start) x /= nrm;
    Q.push_back(std::move(start));

    while (true) {
      const auto& q = Q.back();
      apply_(q, w);
      ++matvecs_;
      double a = dot(w, q);
      alpha.push_back(a);
      orthogonalize(w, Q);
      if (Q.size() >= m) break;
      double b = std::sqrt(dot(w, w));
      if (b < 1e-10 * std::max(1.0, std::abs(a))) {
        // invariant subspace found; continue with a fresh direction
        std::vector<double> fresh = random_vector(rng);
        orthogonalize(fresh, Q);
        double fn = std::sqrt(dot(fresh, fresh));
        if (fn < 1e-12) break;
        for (auto& x : fresh) x /= fn;
        beta.push_back(0.0);
        Q.push_back(std::move(fresh));
      } else {
        for (auto& x : w) x /= b;
        beta.push_back(b);
        Q.push_back(w);
      }
    }

    const std::size_t k = alpha.size();
    std::vector<double> d = alpha, z;
    tridiagonal_eigen(d, beta, z);
    for (double v : d) norm_estimate_ = std::max(norm_estimate_, std::abs(v));

    Cycle c;
    c.values = d;
    c.vectors.assign(k, std::vector<double>(n_, 0.0));
    c.residuals.assign(k, 0.0);
    std::vector<double> Ax(n_);
    for (std::size_t j = 0; j < k; ++j) {
      auto& x = c.vectors[j];
      for (std::size_t i = 0; i < k; ++i) {
        double y = z[i * k + j];
        if (y == 0.0) continue;
        for (std::size_t t = 0; t < n_; ++t) x[t] += y * Q[i][t];
      }
      double xn = std::sqrt(dot(x, x));
      for (auto& t : x) t /= xn;
    }
    // exact residuals only for the pairs a caller could lock this cycle
    for (std::size_t j = 0; j < k; ++j) {
      apply_(c.vectors[j], Ax);
      ++matvecs_;
      double r2 = 0.0;
      for (std::size_t t = 0; t < n_; ++t) {
        double r = Ax[t] - d[j] * c.vectors[j][t];
        r2 += r * r;
      }
      c.residuals[j] = std::sqrt(r2);
    }
    return c;
  }

  static bool more_extreme(double a, double b, Spectrum which, double slack) {
    switch (which) {
      case Spectrum::kSmallest: return a < b - slack;
      case Spectrum::kLargest: return a > b + slack;
      case Spectrum::kLargestMagnitude: return std::abs(a) > std::abs(b) + slack;
    }
    return false;
  }

  static std::vector<std::size_t> wanted_order(const std::vector<double>& vals, Spectrum which) {
    std::vector<std::size_t> idx(vals.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      switch (which) {
        case Spectrum::kSmallest: return vals[a] < vals[b];
        case Spectrum::kLargest: return vals[a] > vals[b];
        case Spectrum::kLargestMagnitude: return std::abs(vals[a]) > std::abs(vals[b]);
      }
      return false;
    });
    return idx;
  }

  std::vector<std::size_t> ranked_locked(Spectrum which, std::size_t count) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < locked_values_.size(); ++i)
      if (!(opt_.skip_null && is_null(locked_values_[i]))) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const double x = locked_values_[a], y = locked_values_[b];
      switch (which) {
        case Spectrum::kSmallest: return x < y;
        case Spectrum::kLargest: return x > y;
        case Spectrum::kLargestMagnitude: return std::abs(x) > std::abs(y);
      }
      return false;
    });
    if (idx.size() > count) idx.resize(count);
    return idx;
  }

  void lock(std::vector<double> v, double value, double residual) {
    orthogonalize(v, {});
    double nv = std::sqrt(dot(v, v));
    for (auto& x : v) x /= nv;
    locked_.push_back(std::move(v));
    locked_values_.push_back(value);
    locked_res_.push_back(residual);
  }

  bool is_null(double value) const {
    return opt_.skip_null && std::abs(value) <= opt_.null_threshold * std::max(1.0, norm_estimate_);
  }

  std::size_t n_;
  Apply apply_;
  LanczosOptions opt_;
  std::vector<std::vector<double>> locked_;
  std::vector<double> locked_values_;
  std::vector<double> locked_res_;
  std::size_t matvecs_ = 0;
  double norm_estimate_ = 0.0;
};

}  // namespace nac
