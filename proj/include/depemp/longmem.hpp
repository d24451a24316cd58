#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "depemp/empirical.hpp"
#include "depemp/processes.hpp"

namespace depemp {

/// r-th elementary symmetric function of b by the prefix recursion
/// E[j][r] = E[j-1][r] + b_j E[j-1][r-1] with compensated accumulation.
/// Returns 0 when r exceeds the length of b.
double elem_sym_u(std::span<const double> b, int r);

/// E[len][0..p] in one pass.
std::vector<double> elem_sym_all(std::span<const double> b, int p);

/// Derivatives at 0 of K_inf(x) = E K(X_1 + x) and the marginal CDF
/// derivatives F^(i), for a Gaussian linear process with marginal N(0, sigma^2).
struct MarginalDerivs {
    double sigma = 1.0;
    std::vector<double> kinf;  ///< K_inf^(j)(0), j = 0..p

    /// F^(i)(y); F^(0) is the CDF and F^(i) = phi_sigma^(i-1) for i >= 1.
    [[nodiscard]] double F_deriv(int i, double y) const;
};

/// Throws ConfigError for non-Gaussian innovations or non-linear models.
MarginalDerivs marginal_derivs(const ProcessModel& model, const TestFunction& K, int p);

/// U_{i,r} for i = 1..n (rows) and r = 0..p (columns), row-major.
struct ExpansionTerms {
    std::size_t n = 0;
    int p = 0;
    std::vector<double> u;

    [[nodiscard]] double at(std::size_t i, int r) const { return u[(i - 1) * static_cast<std::size_t>(p + 1) + static_cast<std::size_t>(r)]; }
};

/// b_j = a_j eps_{i-j}, j = 0..L, for each i; the full window recursion.
ExpansionTerms expansion_terms(const Path& path, std::span<const double> a, int p);

/// S_n(K; p) = sum_i [K(X_i) - sum_{j<=p} K_inf^(j)(0) U_{i,j}].
/// U_{i,0} = 1 and U_{i,1} = X_i are used directly; higher orders come from
/// the window recursion.
double expansion_residual(const Path& path, std::span<const double> a, const TestFunction& K, int p,
                          const MarginalDerivs& md);

/// S_m(K; p) for every prefix length m in `prefix_lengths` (each <= n), from
/// one pass over the path.
std::vector<double> expansion_residual_prefixes(const Path& path, std::span<const double> a, const TestFunction& K, int p,
                                                const MarginalDerivs& md, const std::vector<std::size_t>& prefix_lengths);

/// The point version S_n(y; p) = sum_i [1{X_i <= y} - sum_{r<=p} (-1)^r F^(r)(y) U_{i,r}]
/// and its split into the martingale part sum_i [1{X_i <= y} - F_eps(y - Y_{i-1})]
/// and the remainder sum_i [F_eps(y - Y_{i-1}) - sum_r (-1)^r F^(r)(y) U_{i,r}].
struct PointExpansion {
    double total = 0.0;
    double martingale = 0.0;
    double remainder = 0.0;
};
PointExpansion expansion_point(const ProcessModel& model, const Path& path, const ExpansionTerms& terms,
                               const MarginalDerivs& md, double y);

struct SigmaNorm {
    double value = 0.0;
    bool degenerate = false;
    std::string warning;
};

/// sigma_{n,p} = n^{(2 - p(2 beta - 1)) / 2}; requires 1/2 < beta < 1.
SigmaNorm sigma_np_norm(std::size_t n, int p, double beta);

}  // namespace depemp
