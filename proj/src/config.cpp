#include "exitbsde/config.hpp"

#include "exitbsde/errors.hpp"

namespace exitbsde {

json load_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("version") || doc["version"] != 1)
    throw ConfigError("config: missing or unsupported \"version\" (expected 1)");
  return doc;
}

void require_keys(const json& obj, const std::vector<std::string>& allowed,
                  const std::string& context) {
  if (!obj.is_object()) throw ConfigError("config section '" + context + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || it.key() == k;
    if (!ok)
      throw ConfigError("config: unknown key '" + it.key() + "' in section '" + context + "'");
  }
}

Domain domain_from_json(const json& doc) {
  require_keys(doc, {"type", "center", "radius", "lo", "hi"}, "domain");
  const std::string type = doc.at("type").get<std::string>();
  if (type == "ball") {
    const auto& c = doc.at("center");
    Vec center(static_cast<int>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) center[static_cast<int>(i)] = c[i].get<double>();
    return Domain::ball(center, doc.at("radius").get<double>());
  }
  if (type == "interval")
    return Domain::interval(doc.at("lo").get<double>(), doc.at("hi").get<double>());
  throw ConfigError("domain: unknown type '" + type + "'");
}

json domain_to_json(const Domain& domain) {
  json doc;
  if (domain.kind() == Domain::Kind::Ball) {
    doc["type"] = "ball";
    json c = json::array();
    for (int i = 0; i < domain.dimension(); ++i) c.push_back(domain.center()[i]);
    doc["center"] = c;
    doc["radius"] = domain.radius();
  } else {
    doc["type"] = "interval";
    doc["lo"] = domain.lo();
    doc["hi"] = domain.hi();
  }
  return doc;
}

namespace {

std::shared_ptr<Polynomial> poly_from_table(const json& doc, int dim,
                                            const std::string& context) {
  require_keys(doc, {"terms"}, context);
  std::vector<Polynomial::Term> terms;
  for (const auto& jt : doc.at("terms")) {
    require_keys(jt, {"exponents", "coeff"}, context + ".terms");
    Polynomial::Term t;
    const auto& exps = jt.at("exponents");
    if (static_cast<int>(exps.size()) != dim)
      throw ConfigError("config: " + context + " exponent arity != dimension");
    for (int i = 0; i < dim; ++i) t.exponents[static_cast<std::size_t>(i)] = exps[i].get<int>();
    t.coeff = jt.at("coeff").get<double>();
    terms.push_back(t);
  }
  return std::make_shared<Polynomial>(dim, std::move(terms));
}

DeclaredConstants constants_from_json(const json& doc) {
  DeclaredConstants c;
  if (doc.is_null()) return c;
  require_keys(doc,
               {"lipschitz_mu", "lipschitz_sigma", "lipschitz_f_y", "lipschitz_f_z",
                "ellipticity_lower", "elliptic_radius", "sup_mu", "sup_sigma", "tail_rho",
                "tail_alpha", "tail_beta"},
               "constants");
  auto g = [&doc](const char* k, double& slot) {
    if (doc.contains(k)) slot = doc.at(k).get<double>();
  };
  g("lipschitz_mu", c.lipschitz_mu);
  g("lipschitz_sigma", c.lipschitz_sigma);
  g("lipschitz_f_y", c.lipschitz_f_y);
  g("lipschitz_f_z", c.lipschitz_f_z);
  g("ellipticity_lower", c.ellipticity_lower);
  g("elliptic_radius", c.elliptic_radius);
  g("sup_mu", c.sup_mu);
  g("sup_sigma", c.sup_sigma);
  g("tail_rho", c.tail_rho);
  g("tail_alpha", c.tail_alpha);
  g("tail_beta", c.tail_beta);
  return c;
}

ProblemPtr manufactured_from_json(const json& doc) {
  require_keys(doc, {"name", "domain", "u", "mu", "sigma", "nu", "g", "constants"},
               "manufactured");
  const Domain domain = domain_from_json(doc.at("domain"));
  const int dim = domain.dimension();
  CandidatePtr u = poly_from_table(doc.at("u"), dim, "manufactured.u");

  std::function<void(const Vec&, Vec&)> mu;
  if (doc.contains("mu") && doc.at("mu").is_array()) {
    std::vector<std::shared_ptr<Polynomial>> comps;
    for (const auto& entry : doc.at("mu"))
      comps.push_back(poly_from_table(entry, dim, "manufactured.mu"));
    if (static_cast<int>(comps.size()) != dim)
      throw ConfigError("manufactured.mu: needs one polynomial per dimension");
    mu = [comps, dim](const Vec& x, Vec& out) {
      out.resize(dim);
      for (int i = 0; i < dim; ++i) out[i] = comps[static_cast<std::size_t>(i)]->value(x);
    };
  } else if (!doc.contains("mu") || doc.at("mu") == "zero") {
    mu = [dim](const Vec&, Vec& out) { out = Vec::Zero(dim); };
  } else {
    throw ConfigError("manufactured.mu: expected \"zero\" or an array of tables");
  }

  std::function<void(const Vec&, Mat&)> sigma;
  if (!doc.contains("sigma") || doc.at("sigma") == "identity") {
    sigma = [dim](const Vec&, Mat& out) { out = Mat::Identity(dim, dim); };
  } else if (doc.at("sigma").is_object() && doc.at("sigma").contains("isotropic")) {
    require_keys(doc.at("sigma"), {"isotropic"}, "manufactured.sigma");
    auto s = poly_from_table(doc.at("sigma").at("isotropic"), dim, "manufactured.sigma");
    sigma = [s, dim](const Vec& x, Mat& out) { out = s->value(x) * Mat::Identity(dim, dim); };
  } else {
    throw ConfigError("manufactured.sigma: expected \"identity\" or {\"isotropic\": table}");
  }

  Nonlinearity nu = Nonlinearity::none();
  if (doc.contains("nu")) {
    const std::string name = doc.at("nu").get<std::string>();
    if (name == "sin_y")
      nu = Nonlinearity::sin_y();
    else if (name != "none")
      throw ConfigError("manufactured.nu: unknown nonlinearity '" + name + "'");
  }

  std::function<double(const Vec&)> g_override;
  if (doc.contains("g")) {
    auto gp = poly_from_table(doc.at("g"), dim, "manufactured.g");
    g_override = [gp](const Vec& x) { return gp->value(x); };
  }

  DeclaredConstants constants =
      constants_from_json(doc.contains("constants") ? doc.at("constants") : json());
  const std::string name = doc.contains("name") ? doc.at("name").get<std::string>()
                                                : std::string("manufactured");
  return manufactured(u, mu, sigma, nu, domain, g_override, constants, name);
}

}  // namespace

ProblemPtr problem_from_json(const json& doc) {
  require_keys(doc, {"name", "dimension", "manufactured"}, "problem");
  if (doc.contains("manufactured")) return manufactured_from_json(doc.at("manufactured"));
  if (!doc.contains("name")) throw ConfigError("problem: needs \"name\" or \"manufactured\"");
  const int dim = doc.contains("dimension") ? doc.at("dimension").get<int>() : 0;
  return library_problem(doc.at("name").get<std::string>(), dim);
}

CandidatePtr candidate_from_config(const json& doc, const ProblemPtr& problem) {
  require_keys(doc,
               {"type", "terms", "file", "eps", "base", "bump", "hidden", "w1", "b1", "w2",
                "b2", "width", "seed"},
               "candidate");
  const std::string type = doc.at("type").get<std::string>();
  if (type == "exact") {
    if (!problem || !problem->exact_solution)
      throw ConfigError("candidate: \"exact\" requested but the problem has no exact solution");
    return problem->exact_solution;
  }
  if (type == "zero") return Polynomial::zero(problem ? problem->dim : 1);
  if (type == "file")
    return candidate_from_json(json::parse(read_file(doc.at("file").get<std::string>())));
  if (type == "polynomial") {
    json v1 = doc;
    v1["schema"] = "candidate/v1";
    v1["dimension"] = problem ? problem->dim : 1;
    v1.erase("file");
    return candidate_from_json(v1);
  }
  if (type == "net") {
    if (doc.contains("file"))
      return candidate_from_json(
          json::parse(read_file(doc.at("file").get<std::string>())));
    if (doc.contains("width")) {
      const std::uint64_t seed = doc.contains("seed") ? doc.at("seed").get<std::uint64_t>() : 0;
      return SingleHiddenLayerNet::random_init(problem ? problem->dim : 1,
                                               doc.at("width").get<int>(), seed);
    }
    json v1 = doc;
    v1["schema"] = "candidate/v1";
    v1["dimension"] = problem ? problem->dim : 1;
    if (!v1.contains("activation")) v1["activation"] = "tanh";
    return candidate_from_json(v1);
  }
  if (type == "perturbed") {
    CandidatePtr base = candidate_from_config(doc.at("base"), problem);
    CandidatePtr bump = candidate_from_config(doc.at("bump"), problem);
    return std::make_shared<Perturbed>(base, doc.at("eps").get<double>(), bump);
  }
  throw ConfigError("candidate: unknown type '" + type + "'");
}

PathWeight weight_from_json(const json& doc) {
  require_keys(doc, {"type", "rate", "cap", "ell", "coeff"}, "weight");
  const std::string type = doc.at("type").get<std::string>();
  if (type == "unit") return PathWeight::unit();
  if (type == "exp_exit_clamped")
    return PathWeight::exp_exit_clamped(doc.at("rate").get<double>(),
                                        doc.at("cap").get<double>());
  if (type == "constant_plus")
    return PathWeight::constant_plus(doc.at("ell").get<double>(),
                                     doc.contains("coeff") ? doc.at("coeff").get<double>() : 0.0,
                                     doc.contains("cap") ? doc.at("cap").get<double>() : 1.0);
  throw ConfigError("weight: unknown type '" + type + "'");
}

json weight_to_json(const PathWeight& w) {
  json doc;
  switch (w.kind) {
    case PathWeight::Kind::Unit:
      doc["type"] = "unit";
      break;
    case PathWeight::Kind::ExpExitClamped:
      doc["type"] = "exp_exit_clamped";
      doc["rate"] = w.rate;
      doc["cap"] = w.cap;
      break;
    case PathWeight::Kind::ConstantPlus:
      doc["type"] = "constant_plus";
      doc["ell"] = w.ell;
      doc["coeff"] = w.coeff;
      doc["cap"] = w.cap;
      break;
  }
  return doc;
}

}  // namespace exitbsde
