#include <cmath>
#include <regex>

#include "tcv/error.hpp"
#include "tcv/estimators.hpp"

namespace tcv {

std::string Term::label() const {
  switch (kind) {
    case Kind::intercept: return "1";
    case Kind::raw: return name;
    case Kind::square: return "sq(" + name + ")";
    case Kind::log: return "log(" + name + ")";
    case Kind::product: return name + "*" + name2;
  }
  return "?";
}

namespace {

Term parse_single(const std::string& spec) {
  if (spec == "1") return Term::intercept();
  auto inner = [&](std::size_t prefix) {
    if (spec.back() != ')') throw Error(ErrorCode::schema, "malformed term '" + spec + "'");
    return spec.substr(prefix, spec.size() - prefix - 1);
  };
  if (spec.rfind("sq(", 0) == 0) return Term{Term::Kind::square, -1, -1, inner(3), {}};
  if (spec.rfind("log(", 0) == 0) return Term{Term::Kind::log, -1, -1, inner(4), {}};
  if (const auto star = spec.find('*'); star != std::string::npos) {
    return Term{Term::Kind::product, -1, -1, spec.substr(0, star), spec.substr(star + 1)};
  }
  if (spec.empty()) throw Error(ErrorCode::schema, "empty design term");
  return Term::raw(spec);
}

}  // namespace

std::vector<Term> parse_terms(const std::vector<std::string>& specs) {
  static const std::regex range(R"(\{(\d+)\.\.(\d+)\})");
  std::vector<Term> out;
  for (const auto& spec : specs) {
    std::smatch m;
    if (std::regex_search(spec, m, range)) {
      const long lo = std::stol(m[1].str());
      const long hi = std::stol(m[2].str());
      if (hi < lo) throw Error(ErrorCode::schema, "empty term range in '" + spec + "'");
      for (long k = lo; k <= hi; ++k) {
        out.push_back(parse_single(m.prefix().str() + std::to_string(k) + m.suffix().str()));
      }
    } else {
      out.push_back(parse_single(spec));
    }
  }
  return out;
}

std::vector<Term> bind_terms(std::vector<Term> terms, const std::vector<std::string>& column_names) {
  auto lookup = [&](const std::string& name) -> Index {
    for (std::size_t j = 0; j < column_names.size(); ++j) {
      if (column_names[j] == name) return static_cast<Index>(j);
    }
    throw Error(ErrorCode::invalid_config, "design term references unknown column '" + name + "'");
  };
  for (auto& t : terms) {
    if (t.kind == Term::Kind::intercept) continue;
    t.column = lookup(t.name);
    if (t.kind == Term::Kind::product) t.column2 = lookup(t.name2);
  }
  return terms;
}

Eigen::MatrixXd build_design(const std::vector<Term>& terms, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d(x.rows(), static_cast<Index>(terms.size()));
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const Term& t = terms[k];
    auto col = d.col(static_cast<Index>(k));
    if (t.kind != Term::Kind::intercept && (t.column < 0 || t.column >= x.cols())) {
      throw Error(ErrorCode::invalid_config, "design term '" + t.label() + "' is not bound");
    }
    switch (t.kind) {
      case Term::Kind::intercept: col.setOnes(); break;
      case Term::Kind::raw: col = x.col(t.column); break;
      case Term::Kind::square: col = x.col(t.column).array().square().matrix(); break;
      case Term::Kind::log:
        if ((x.col(t.column).array() <= 0.0).any()) {
          throw Error(ErrorCode::domain, "log term '" + t.label() + "' needs positive inputs");
        }
        col = x.col(t.column).array().log().matrix();
        break;
      case Term::Kind::product:
        if (t.column2 < 0 || t.column2 >= x.cols()) {
          throw Error(ErrorCode::invalid_config, "design term '" + t.label() + "' is not bound");
        }
        col = x.col(t.column).cwiseProduct(x.col(t.column2));
        break;
    }
  }
  return d;
}

LeastSquaresFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                              bool rank_fallback) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  LeastSquaresFit fit;
  fit.rank = qr.rank();
  fit.dropped = design.cols() - fit.rank;
  if (fit.dropped > 0 && !rank_fallback) {
    throw Error(ErrorCode::singular_design,
                "design of " + std::to_string(design.rows()) + "x" + std::to_string(design.cols()) +
                    " has rank " + std::to_string(fit.rank));
  }
  if (fit.rank == 0) {
    throw Error(ErrorCode::singular_design, "design matrix has rank 0");
  }
  fit.coefficients = qr.solve(y);
  return fit;
}

namespace {

class LinearModel final : public PredictorModel {
 public:
  LinearModel(std::vector<Term> terms, LeastSquaresFit fit)
      : terms_(std::move(terms)), fit_(std::move(fit)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return build_design(terms_, x) * fit_.coefficients;
  }

  FitSummary summary() const override {
    FitSummary s;
    s.kind = "ols";
    s.values["rank"] = static_cast<double>(fit_.rank);
    s.values["dropped_columns"] = static_cast<double>(fit_.dropped);
    s.coefficients.assign(fit_.coefficients.data(),
                          fit_.coefficients.data() + fit_.coefficients.size());
    if (fit_.dropped > 0) {
      s.warnings.push_back("rank deficient design: dropped " + std::to_string(fit_.dropped) +
                           " column(s)");
    }
    return s;
  }

 private:
  std::vector<Term> terms_;
  LeastSquaresFit fit_;
};

}  // namespace

Predictor fit_ols(const OlsConfig& cfg, const Dataset& data, std::span<const Index> train) {
  if (cfg.design.empty()) throw Error(ErrorCode::invalid_config, "OLS design is empty");
  const Eigen::MatrixXd design = build_design(cfg.design, data.rows_x(train));
  auto fit = least_squares(design, data.rows_y(train), cfg.rank_fallback);
  return Predictor(std::make_shared<LinearModel>(cfg.design, std::move(fit)), -1,
                   static_cast<Index>(train.size()));
}

}  // namespace tcv
