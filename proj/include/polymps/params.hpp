#pragma once

// Physical coefficients and penalty parameters.

#include "polymps/faces.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace polymps {

struct Compartment {
  std::string name;
  double mu = 1.0;        // fluid viscosity [Pa s]
  double alpha = 0.5;     // Biot-Willis coefficient
  double c = 1.0;         // storage coefficient [m^2/N]
  double k = 1.0;         // isotropic permeability [m^2]
  double beta_ext = 0.0;  // external discharge [m^2/(N s)]
  double zeta_bar = 10.0;
};

struct PhysicalParams {
  double rho_el = 1.0;
  double rho_f = 1.0;
  double mu_el = 1.0;
  double lambda = 1.0;
  double mu_f = 1.0;
  std::vector<Compartment> compartments{Compartment{"E"}};
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(1, 1);  // beta(j, k): transfer j <-> k, zero diagonal
  double eta_bar = 10.0;
  double gamma_v_bar = 10.0;
  double gamma_p_bar = 10.0;
  bool degree_scaled_penalties = true;

  std::size_t n_compartments() const { return compartments.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : compartments) out.push_back(c.name);
    return out;
  }

  /// Index of the compartment exchanging with the fluid domain (named "E").
  std::optional<std::size_t> index_E() const {
    for (std::size_t j = 0; j < compartments.size(); ++j)
      if (compartments[j].name == "E") return j;
    return std::nullopt;
  }

  void validate() const {
    auto positive = [](double v, const std::string& what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError(what + " must be positive (got " + std::to_string(v) + ")");
    };
    positive(rho_el, "rho_el");
    positive(rho_f, "rho_f");
    positive(mu_el, "mu_el");
    positive(lambda, "lambda");
    positive(mu_f, "mu_f");
    positive(eta_bar, "eta_bar");
    positive(gamma_v_bar, "gamma_v_bar");
    positive(gamma_p_bar, "gamma_p_bar");
    if (compartments.empty()) throw InputError("at least one pressure compartment is required");
    std::set<std::string> seen;
    for (const auto& c : compartments) {
      if (!seen.insert(c.name).second) throw InputError("duplicate compartment '" + c.name + "'");
      positive(c.mu, "mu_" + c.name);
      positive(c.c, "c_" + c.name);
      positive(c.k, "k_" + c.name);
      positive(c.zeta_bar, "zeta_bar_" + c.name);
      if (!(c.alpha >= 0.0 && c.alpha < 1.0)) throw InputError("alpha_" + c.name + " must lie in [0,1)");
      if (!(c.beta_ext >= 0.0)) throw InputError("beta_ext_" + c.name + " must be >= 0");
    }
    const auto n = static_cast<Eigen::Index>(compartments.size());
    if (beta.rows() != n || beta.cols() != n) throw InputError("beta matrix must be J x J");
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        if (!(beta(j, k) >= 0.0)) throw InputError("beta entries must be >= 0");
  }

  /// All coefficients 1, one compartment E with alpha = 0.5: the verification set.
  static PhysicalParams unit() { return PhysicalParams{}; }

  /// Physiological tissue and CSF values with a single extracellular
  /// compartment E (alpha 0.49, no external discharge).
  static PhysicalParams physiological() {
    PhysicalParams p;
    p.rho_el = 1e3;
    p.rho_f = 1e3;
    p.mu_el = 216.0;
    p.lambda = 505.0;
    p.mu_f = 3.5e-3;
    p.compartments = {{"E", 3.5e-3, 0.49, 1e-6, 1e-11, 0.0, 10.0}};
    p.beta = Eigen::MatrixXd::Zero(1, 1);
    return p;
  }
};

inline void to_json(nlohmann::json& j, const Compartment& c) {
  j = {{"name", c.name}, {"mu", c.mu}, {"alpha", c.alpha}, {"c", c.c},
       {"k", c.k}, {"beta_ext", c.beta_ext}, {"zeta_bar", c.zeta_bar}};
}

inline void to_json(nlohmann::json& j, const PhysicalParams& p) {
  std::vector<std::vector<double>> beta;
  for (Eigen::Index r = 0; r < p.beta.rows(); ++r) {
    beta.emplace_back();
    for (Eigen::Index c = 0; c < p.beta.cols(); ++c) beta.back().push_back(p.beta(r, c));
  }
  j = {{"rho_el", p.rho_el}, {"rho_f", p.rho_f}, {"mu_el", p.mu_el}, {"lambda", p.lambda},
       {"mu_f", p.mu_f}, {"compartments", p.compartments}, {"beta", beta},
       {"eta_bar", p.eta_bar}, {"gamma_v_bar", p.gamma_v_bar}, {"gamma_p_bar", p.gamma_p_bar},
       {"degree_scaled_penalties", p.degree_scaled_penalties}};
}

/// Reads parameters on top of `base`; keys absent from `j` keep their value.
inline PhysicalParams params_from_json(const nlohmann::json& j, PhysicalParams base = {}) {
  try {
    base.rho_el = j.value("rho_el", base.rho_el);
    base.rho_f = j.value("rho_f", base.rho_f);
    base.mu_el = j.value("mu_el", base.mu_el);
    base.lambda = j.value("lambda", base.lambda);
    base.mu_f = j.value("mu_f", base.mu_f);
    base.eta_bar = j.value("eta_bar", base.eta_bar);
    base.gamma_v_bar = j.value("gamma_v_bar", base.gamma_v_bar);
    base.gamma_p_bar = j.value("gamma_p_bar", base.gamma_p_bar);
    base.degree_scaled_penalties = j.value("degree_scaled_penalties", base.degree_scaled_penalties);
    if (j.contains("compartments")) {
      base.compartments.clear();
      for (const auto& c : j.at("compartments")) {
        Compartment comp;
        comp.name = c.at("name").get<std::string>();
        comp.mu = c.value("mu", comp.mu);
        comp.alpha = c.value("alpha", comp.alpha);
        comp.c = c.value("c", comp.c);
        comp.k = c.value("k", comp.k);
        comp.beta_ext = c.value("beta_ext", comp.beta_ext);
        comp.zeta_bar = c.value("zeta_bar", comp.zeta_bar);
        base.compartments.push_back(comp);
      }
      const auto n = static_cast<Eigen::Index>(base.compartments.size());
      base.beta = Eigen::MatrixXd::Zero(n, n);
    }
    if (j.contains("beta")) {
      const auto rows = j.at("beta").get<std::vector<std::vector<double>>>();
      const auto n = static_cast<Eigen::Index>(rows.size());
      base.beta = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
          throw InputError("beta matrix must be square");
        for (Eigen::Index c = 0; c < n; ++c) base.beta(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid parameters: ") + e.what());
  }
  base.validate();
  return base;
}

/// Penalty values on one face.
struct PenaltyValues {
  double eta = 0.0;
  std::vector<double> zeta;
  double gamma_v = 0.0;
  double gamma_p = 0.0;
};

/// Norm of the isotropic elasticity tensor acting on symmetric matrices,
/// i.e. its largest eigenvalue 2 mu + 2 lambda in 2D.
inline double elasticity_tensor_norm(double mu, double lambda) { return 2.0 * mu + 2.0 * lambda; }

/// Penalties on a face for polynomial degree m. Coefficients are uniform per
/// subdomain here, so the max over the two neighbours reduces to the
/// subdomain value. With degree scaling on, the 1/h penalties carry a factor
/// m^2 and the pressure stabilization h/m; without it they are degree-blind.
inline PenaltyValues penalty_coefficients(const Face& face, const PhysicalParams& p, int degree = 1) {
  PenaltyValues v;
  const double h = face.harmonic_h;
  const double m = p.degree_scaled_penalties ? static_cast<double>(degree) : 1.0;
  v.eta = p.eta_bar * m * m * elasticity_tensor_norm(p.mu_el, p.lambda) / h;
  for (const auto& c : p.compartments) v.zeta.push_back(c.zeta_bar * m * m * c.k / (std::sqrt(c.mu) * h));
  v.gamma_v = p.gamma_v_bar * m * m * p.mu_f / h;
  v.gamma_p = p.gamma_p_bar * h / m;
  return v;
}

}  // namespace polymps
