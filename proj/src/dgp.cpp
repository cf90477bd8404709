#include "tcv/dgp.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

Dataset Dgp::sample(Index n, const RngSpec& rng) const {
  if (n < 1) throw Error(ErrorCode::invalid_config, "sample size must be >= 1");
  Engine engine = rng.engine();
  Eigen::MatrixXd x = sample_x(n, engine);
  Eigen::VectorXd y = mean(x);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sd = noise_sd();
  for (Index i = 0; i < n; ++i) y[i] += sd * noise(engine);
  return Dataset(std::move(x), std::move(y), column_names());
}

double Dgp::mean_at(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  const Eigen::MatrixXd x = row;
  return mean(x)[0];
}

namespace {

std::vector<std::string> numbered(const std::string& prefix, int from, int to) {
  std::vector<std::string> out;
  for (int k = from; k <= to; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

// Uniform on the open interval (0, 1).
double open_uniform(Engine& engine) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = 0.0;
  while (v == 0.0) v = u(engine);
  return v;
}

class Sim1 final : public Dgp {
 public:
  explicit Sim1(Sim1Config cfg) : cfg_(cfg) {
    if (cfg.p_extra < 1 || !(cfg.var_x0 > 0) || cfg.cov_extra < 0 || cfg.var_extra < cfg.cov_extra ||
        !(cfg.bernoulli_p >= 0 && cfg.bernoulli_p <= 1) || !(cfg.sigma >= 0)) {
      throw Error(ErrorCode::invalid_config, "invalid simulation-1 configuration");
    }
  }
  std::string name() const override { return "sim1"; }
  std::vector<std::string> column_names() const override {
    auto names = numbered("X", 0, cfg_.p_extra);
    names.push_back("I");
    return names;
  }
  Region local_region() const override {
    return Region::where("I", cfg_.p_extra + 1, Region::Op::eq, 1.0);
  }
  double noise_sd() const override { return cfg_.sigma; }

  // Equicorrelated block as sqrt(c) Z0 + sqrt(d - c) Zk; with d = c the block
  // is a single shared normal, which is what the covariance prescribes.
  Eigen::MatrixXd sample_x(Index n, Engine& engine) const override {
    const Index p = cfg_.p_extra;
    Eigen::MatrixXd x(n, p + 2);
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution indicator(cfg_.bernoulli_p);
    const double s0 = std::sqrt(cfg_.var_x0);
    const double shared = std::sqrt(cfg_.cov_extra);
    const double own = std::sqrt(cfg_.var_extra - cfg_.cov_extra);
    for (Index i = 0; i < n; ++i) {
      x(i, 0) = s0 * z(engine);
      const double common = z(engine);
      for (Index k = 1; k <= p; ++k) x(i, k) = shared * common + own * z(engine);
      x(i, p + 1) = indicator(engine) ? 1.0 : 0.0;
    }
    return x;
  }

  Eigen::VectorXd mean(const Eigen::MatrixXd& x) const override {
    const Index p = cfg_.p_extra;
    Eigen::VectorXd out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      const double block = x.row(i).segment(1, p).sum();
      out[i] = x(i, 0) + (1.0 - x(i, p + 1)) * block;
    }
    return out;
  }

 private:
  Sim1Config cfg_;
};

class Sim2 final : public Dgp {
 public:
  explicit Sim2(Sim2Config cfg) : cfg_(cfg) {
    if (!(cfg.break_point > 0 && cfg.break_point < 1) || !(cfg.sigma >= 0)) {
      throw Error(ErrorCode::invalid_config, "invalid simulation-2 configuration");
    }
  }
  std::string name() const override { return "sim2"; }
  std::vector<std::string> column_names() const override { return {"X"}; }
  Region local_region() const override { return Region::where("X", 0, Region::Op::lt, cfg_.break_point); }
  double noise_sd() const override { return cfg_.sigma; }

  Eigen::MatrixXd sample_x(Index n, Engine& engine) const override {
    Eigen::MatrixXd x(n, 1);
    for (Index i = 0; i < n; ++i) x(i, 0) = open_uniform(engine);
    return x;
  }

  Eigen::VectorXd mean(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, 0);
      out[i] = v <= cfg_.break_point ? 250.0 * (v + 0.1) * (v + 0.1) : 100.0 * v;
    }
    return out;
  }

 private:
  Sim2Config cfg_;
};

class Sim3 final : public Dgp {
 public:
  explicit Sim3(Sim3Config cfg) : cfg_(cfg) {
    if (cfg.p < 4 || !(std::abs(cfg.rho) < 1) || !(cfg.sigma >= 0) || !(cfg.local_half_width > 0)) {
      throw Error(ErrorCode::invalid_config, "invalid simulation-3 configuration");
    }
  }
  std::string name() const override { return "sim3"; }
  std::vector<std::string> column_names() const override { return numbered("X", 1, cfg_.p); }
  Region local_region() const override {
    const double h = cfg_.local_half_width;
    return Region::where("X1", 0, Region::Op::gt, -h)
        .and_where("X1", 0, Region::Op::lt, h)
        .and_where("X2", 1, Region::Op::gt, -h)
        .and_where("X2", 1, Region::Op::lt, h);
  }
  double noise_sd() const override { return cfg_.sigma; }

  // Stationary AR(1) recursion, which has exactly V_ij = rho^|i-j|.
  Eigen::MatrixXd sample_x(Index n, Engine& engine) const override {
    Eigen::MatrixXd x(n, cfg_.p);
    std::normal_distribution<double> z(0.0, 1.0);
    const double innovation = std::sqrt(1.0 - cfg_.rho * cfg_.rho);
    for (Index i = 0; i < n; ++i) {
      double prev = z(engine);
      x(i, 0) = prev;
      for (Index j = 1; j < cfg_.p; ++j) {
        prev = cfg_.rho * prev + innovation * z(engine);
        x(i, j) = prev;
      }
    }
    return x;
  }

  Eigen::VectorXd mean(const Eigen::MatrixXd& x) const override {
    const Eigen::ArrayXd x1 = x.col(0);
    return (2.0 * (-5.0 * x1.square()).exp() + 2.0 * x1 + x.col(1).array() + 0.5 * x.col(2).array() +
            0.1 * x.col(3).array())
        .matrix();
  }

 private:
  Sim3Config cfg_;
};

class FourierDgp final : public Dgp {
 public:
  explicit FourierDgp(FourierDgpConfig cfg) : cfg_(cfg) {
    if (cfg.j_max < 1 || !(cfg.sigma >= 0)) throw Error(ErrorCode::invalid_config, "invalid Fourier DGP");
    for (int j = 1; j <= cfg.j_max; ++j) beta_.push_back(beta_schedule(static_cast<std::uint64_t>(j)));
  }
  std::string name() const override { return "fourier"; }
  std::vector<std::string> column_names() const override { return {"X"}; }
  Region local_region() const override { return Region::everything(); }
  double noise_sd() const override { return cfg_.sigma; }

  Eigen::MatrixXd sample_x(Index n, Engine& engine) const override {
    Eigen::MatrixXd x(n, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index i = 0; i < n; ++i) x(i, 0) = u(engine);
    return x;
  }

  Eigen::VectorXd mean(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out(x.rows());
    std::vector<double> phis(beta_.size());
    for (Index i = 0; i < x.rows(); ++i) {
      fourier_phis(x(i, 0), phis);
      double s = 0.0;
      for (std::size_t j = 0; j < beta_.size(); ++j) s += beta_[j] * phis[j];
      out[i] = s;
    }
    return out;
  }

 private:
  FourierDgpConfig cfg_;
  std::vector<double> beta_;
};

class RateToy final : public Dgp {
 public:
  explicit RateToy(RateToyConfig cfg) : cfg_(cfg) {
    if (cfg.n < 1 || !(cfg.sigma >= 0)) throw Error(ErrorCode::invalid_config, "invalid rate-toy DGP");
  }
  std::string name() const override { return "rate_toy"; }
  std::vector<std::string> column_names() const override { return {"X"}; }
  Region local_region() const override {
    return Region::where("X", 0, Region::Op::le, std::pow(static_cast<double>(cfg_.n), -0.125));
  }
  double noise_sd() const override { return cfg_.sigma; }

  Eigen::MatrixXd sample_x(Index n, Engine& engine) const override {
    Eigen::MatrixXd x(n, 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index i = 0; i < n; ++i) x(i, 0) = u(engine);
    return x;
  }

  Eigen::VectorXd mean(const Eigen::MatrixXd& x) const override { return x.col(0).array().square(); }

 private:
  RateToyConfig cfg_;
};

}  // namespace

DgpPtr make_sim1(const Sim1Config& cfg) { return std::make_shared<Sim1>(cfg); }
DgpPtr make_sim2(const Sim2Config& cfg) { return std::make_shared<Sim2>(cfg); }
DgpPtr make_sim3(const Sim3Config& cfg) { return std::make_shared<Sim3>(cfg); }
DgpPtr make_fourier_dgp(const FourierDgpConfig& cfg) { return std::make_shared<FourierDgp>(cfg); }
DgpPtr make_rate_toy(const RateToyConfig& cfg) { return std::make_shared<RateToy>(cfg); }

double beta_schedule(std::uint64_t j) {
  if (j < 1) throw Error(ErrorCode::invalid_config, "coefficient index must be >= 1");
  // Odd q gives nu = 2^(12 * 3^(q-1)); the zero block runs from
  // nu^(1/12) = 2^(3^(q-1)) to nu^(1/4) = 2^(3^q).
  std::uint64_t e = 1;  // 3^(q-1)
  for (;;) {
    if (e >= 64) break;  // left end 2^e exceeds every 64-bit index
    const std::uint64_t left = std::uint64_t{1} << e;
    if (left > j) break;
    const std::uint64_t e_right = 3 * e;
    const bool below_right = e_right >= 64 || j <= (std::uint64_t{1} << e_right);
    if (below_right) return 0.0;
    e *= 9;  // next odd q
  }
  const double jd = static_cast<double>(j);
  return 1.0 / (jd * jd);
}

double fourier_tail_bound(int j_max) {
  const double j = j_max;
  return 1.0 / (3.0 * j * j * j);
}

RateToyLosses rate_toy_losses(Index n, Index n1, double eps_bar) {
  if (n < 1 || n1 < 1) throw Error(ErrorCode::invalid_config, "rate-toy sizes must be >= 1");
  return {eps_bar * eps_bar, 0.2 / std::sqrt(static_cast<double>(n))};
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (const auto& name : data.column_names()) out << name << ',';
  out << "y\n";
  char buf[32];
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x()(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", data.y()[i]);
    out << buf << '\n';
  }
}

}  // namespace tcv
