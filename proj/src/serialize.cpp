#include "exitbsde/serialize.hpp"

#include "exitbsde/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace exitbsde {

std::string format_double(double x) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json candidate_to_json(const CandidateFunction& u) {
  json doc;
  doc["schema"] = "candidate/v1";
  doc["dimension"] = u.dimension();
  if (const auto* poly = dynamic_cast<const Polynomial*>(&u)) {
    doc["type"] = "polynomial";
    json terms = json::array();
    for (const auto& t : poly->terms()) {
      json jt;
      json exps = json::array();
      for (int i = 0; i < poly->dimension(); ++i) exps.push_back(t.exponents[i]);
      jt["exponents"] = exps;
      jt["coeff"] = t.coeff;
      terms.push_back(jt);
    }
    doc["terms"] = terms;
    return doc;
  }
  if (const auto* net = dynamic_cast<const SingleHiddenLayerNet*>(&u)) {
    doc["type"] = "net";
    doc["hidden"] = net->width();
    doc["activation"] = "tanh";
    json w1 = json::array();
    for (int j = 0; j < net->width(); ++j) {
      json row = json::array();
      for (int i = 0; i < net->dimension(); ++i) row.push_back(net->w1()(j, i));
      w1.push_back(row);
    }
    doc["w1"] = w1;
    json b1 = json::array(), w2 = json::array();
    for (int j = 0; j < net->width(); ++j) {
      b1.push_back(net->b1()(j));
      w2.push_back(net->w2()(j));
    }
    doc["b1"] = b1;
    doc["w2"] = w2;
    doc["b2"] = net->b2();
    return doc;
  }
  throw std::invalid_argument(std::string("candidate_to_json: variant '") + u.kind() +
                              "' is not serializable");
}

CandidatePtr candidate_from_json(const json& doc) {
  if (!doc.contains("schema") || doc["schema"] != "candidate/v1")
    throw ConfigError("candidate document: missing or unsupported schema");
  const int dim = doc.at("dimension").get<int>();
  const std::string type = doc.at("type").get<std::string>();
  if (type == "polynomial") {
    std::vector<Polynomial::Term> terms;
    for (const auto& jt : doc.at("terms")) {
      Polynomial::Term t;
      const auto& exps = jt.at("exponents");
      if (static_cast<int>(exps.size()) != dim)
        throw ConfigError("candidate document: exponent arity != dimension");
      for (int i = 0; i < dim; ++i) t.exponents[static_cast<std::size_t>(i)] = exps[i];
      t.coeff = jt.at("coeff").get<double>();
      terms.push_back(t);
    }
    return std::make_shared<Polynomial>(dim, std::move(terms));
  }
  if (type == "net") {
    if (doc.at("activation") != "tanh")
      throw ConfigError("candidate document: unsupported activation");
    const int m = doc.at("hidden").get<int>();
    Eigen::MatrixXd w1(m, dim);
    Eigen::VectorXd b1(m), w2(m);
    const auto& jw1 = doc.at("w1");
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < dim; ++i) w1(j, i) = jw1[j][i].get<double>();
    for (int j = 0; j < m; ++j) {
      b1(j) = doc.at("b1")[j].get<double>();
      w2(j) = doc.at("w2")[j].get<double>();
    }
    return std::make_shared<SingleHiddenLayerNet>(std::move(w1), std::move(b1), std::move(w2),
                                                  doc.at("b2").get<double>());
  }
  throw ConfigError("candidate document: unknown type '" + type + "'");
}

json loss_report_to_json(const LossReport& rep) {
  json doc;
  doc["n_paths"] = rep.n_paths;
  doc["n_censored"] = rep.n_censored;
  doc["boundary_mean"] = rep.boundary_mean;
  doc["boundary_se"] = rep.boundary_se;
  doc["dynamical_mean"] = rep.dynamical_mean;
  doc["dynamical_se"] = rep.dynamical_se;
  doc["weighted_total_mean"] = rep.weighted_total_mean;
  doc["weighted_total_se"] = rep.weighted_total_se;
  return doc;
}

json rate_table_to_json(const RateTable& table, const std::string& quantity) {
  json doc;
  doc["quantity"] = quantity;
  doc["slope"] = table.slope;
  doc["intercept"] = table.intercept;
  doc["r_squared"] = table.r_squared;
  doc["target_exponent"] = table.target_exponent;
  doc["degenerate_zero"] = table.degenerate_zero;
  doc["verdict"] = table.verdict;
  json rows = json::array();
  for (const auto& r : table.rows) {
    json jr;
    jr["h"] = r.h;
    jr["mean"] = r.mean;
    jr["se"] = r.se;
    jr["n_paths"] = r.n_paths;
    jr["n_censored"] = r.n_censored;
    jr["used_in_fit"] = r.used_in_fit;
    rows.push_back(jr);
  }
  doc["rows"] = rows;
  return doc;
}

std::string rate_table_to_csv(const RateTable& table) {
  std::ostringstream out;
  out << "h,mean,se,n_paths,n_censored,used_in_fit\n";
  for (const auto& r : table.rows)
    out << format_double(r.h) << ',' << format_double(r.mean) << ',' << format_double(r.se)
        << ',' << r.n_paths << ',' << r.n_censored << ',' << (r.used_in_fit ? 1 : 0) << '\n';
  return out.str();
}

json exit_table_to_json(const ExitTable& table) {
  json doc;
  doc["n_paths"] = table.n_paths;
  doc["n_censored"] = table.n_censored;
  json moms = json::array();
  for (const auto& m : table.tau_error) {
    json jm;
    jm["p"] = m.p;
    jm["mean"] = m.mean;
    jm["se"] = m.se;
    moms.push_back(jm);
  }
  doc["tau_error"] = moms;
  doc["space_mean"] = table.space_mean;
  doc["space_se"] = table.space_se;
  doc["theta_gap_mean"] = table.theta_gap_mean;
  doc["theta_gap_se"] = table.theta_gap_se;
  return doc;
}

json validation_to_json(const ValidationReport& rep) {
  json doc;
  doc["n_samples"] = rep.n_samples;
  doc["all_pass"] = rep.all_pass;
  json entries = json::array();
  for (const auto& e : rep.entries) {
    json je;
    je["quantity"] = e.quantity;
    je["declared"] = e.declared;
    je["measured"] = e.measured;
    je["pass"] = e.pass;
    entries.push_back(je);
  }
  doc["entries"] = entries;
  return doc;
}

json wald_to_json(const WaldReport& rep) {
  json doc;
  doc["lhs_mean"] = rep.lhs_mean;
  doc["rhs_mean"] = rep.rhs_mean;
  doc["combined_se"] = rep.combined_se;
  doc["z_score"] = rep.z_score;
  doc["n_paths"] = rep.n_paths;
  doc["pass"] = rep.pass;
  return doc;
}

json plateau_to_json(const PlateauTable& table) {
  json doc;
  doc["baseline"] = table.baseline;
  json rows = json::array();
  for (const auto& r : table.rows) {
    json jr;
    jr["eps"] = r.eps;
    jr["loss_mean"] = r.loss_mean;
    jr["loss_se"] = r.loss_se;
    jr["dnorm"] = r.dnorm;
    jr["ratio_to_prev"] = r.ratio_to_prev;
    rows.push_back(jr);
  }
  doc["rows"] = rows;
  return doc;
}

std::string plateau_to_csv(const PlateauTable& table) {
  std::ostringstream out;
  out << "eps,loss_mean,loss_se,dnorm,ratio_to_prev\n";
  for (const auto& r : table.rows)
    out << format_double(r.eps) << ',' << format_double(r.loss_mean) << ','
        << format_double(r.loss_se) << ',' << format_double(r.dnorm) << ','
        << format_double(r.ratio_to_prev) << '\n';
  return out.str();
}

std::string history_to_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream out;
  out << "iteration,loss,grad_norm,rate,sup_err,dnorm,c2_norm\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm)
        << ',' << format_double(r.rate) << ',' << format_double(r.sup_err) << ','
        << format_double(r.dnorm) << ',' << format_double(r.c2_norm) << '\n';
  return out.str();
}

std::string per_path_to_csv(const std::vector<PerPathRecord>& recs) {
  std::ostringstream out;
  out << "path_id,tau_bar,boundary,dynamical,psi,censored\n";
  for (const auto& r : recs)
    out << r.path_id << ',' << format_double(r.tau_bar) << ',' << format_double(r.boundary)
        << ',' << format_double(r.dynamical) << ',' << format_double(r.psi) << ','
        << (r.censored ? 1 : 0) << '\n';
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_file: cannot open " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace exitbsde
