#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tcv/core.hpp"
#include "tcv/rng.hpp"

namespace tcv {

// A data-generating process: random predictors, a known regression function,
// and additive Gaussian noise.
class Dgp {
 public:
  virtual ~Dgp() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> column_names() const = 0;
  // The region of interest used by the experiment's targeted weight.
  virtual Region local_region() const = 0;
  virtual double noise_sd() const = 0;

  virtual Eigen::MatrixXd sample_x(Index n, Engine& engine) const = 0;
  virtual Eigen::VectorXd mean(const Eigen::MatrixXd& x) const = 0;

  // x first, then the noise, both from the one engine of `rng`.
  Dataset sample(Index n, const RngSpec& rng) const;
  double mean_at(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
};

using DgpPtr = std::shared_ptr<const Dgp>;

// Y = X0 + (1 - I)(X1 + ... + X100) + e. Columns X0..X{p_extra}, I.
struct Sim1Config {
  Index n = 800;
  double sigma = 25.0;
  int p_extra = 100;
  double var_x0 = 20.0;
  double var_extra = 0.1;
  double cov_extra = 0.1;
  double bernoulli_p = 0.1;
  Index eval_n = 5000;
};

// Quadratic 250(x + 0.1)^2 on (0, break], linear 100x above. Column X.
struct Sim2Config {
  Index n = 200;
  double break_point = 0.1;
  double sigma = 1.0;
};

// 2 exp(-5 x1^2) + 2 x1 + x2 + 0.5 x3 + 0.1 x4 with V_ij = rho^|i-j|.
// Columns X1..X{p}.
struct Sim3Config {
  Index n = 200;
  int p = 1000;
  double rho = 0.1;
  double sigma = 1.0;
  double local_half_width = 0.5;
};

// f = sum_{j <= j_max} beta_j phi_j on U(0, 1). Column X.
struct FourierDgpConfig {
  int j_max = 64;
  double sigma = 1.0;
};

// f(x) = x^2 on U(0, 1); the targeted window is [0, n^(-1/8)]. Column X.
struct RateToyConfig {
  Index n = 10000;
  double sigma = 1.0;
};

DgpPtr make_sim1(const Sim1Config& cfg);
DgpPtr make_sim2(const Sim2Config& cfg);
DgpPtr make_sim3(const Sim3Config& cfg);
DgpPtr make_fourier_dgp(const FourierDgpConfig& cfg);
DgpPtr make_rate_toy(const RateToyConfig& cfg);

// Coefficient of phi_j in the alternating-ranking Fourier function: 0 when j
// falls in [2^(3^(q-1)), 2^(3^q)] for an odd q (the integer parts of
// nu^(1/12) and nu^(1/4) for nu = 2^(12 * 3^(q-1))), else 1/j^2.
double beta_schedule(std::uint64_t j);
// Upper bound on sum_{j > j_max} beta_j^2, namely j_max^-3 / 3.
double fourier_tail_bound(int j_max);

struct RateToyLosses {
  double loss1 = 0.0;  // oracle-shape model: (mean noise)^2
  double loss2 = 0.0;  // zero model: n^(-1/2) / 5
};
RateToyLosses rate_toy_losses(Index n, Index n1, double eps_bar);

// Header row then one row per observation: predictors, then y.
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace tcv
