#include "mnarel/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mnar {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

int column_index(const std::vector<std::string>& columns,
                 const std::string& name) {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json interval_json(const IntervalEstimate& ci) {
  return json{{"estimate", ci.estimate},
              {"lower", ci.lower},
              {"upper", ci.upper},
              {"level", ci.level},
              {"se", ci.se},
              {"method", ci.method == VarianceSource::WaldPlugin
                             ? "wald_plugin"
                             : "wald_bootstrap"},
              {"bootstrap_failures", ci.bootstrap_failures}};
}

}  // namespace

Feature parse_term(const std::string& term,
                   const std::vector<std::string>& columns) {
  std::string t = trim(term);
  if (t.empty()) throw ParseError(0, "empty basis term");
  if (t == "1") return feature_const();

  Feature f;
  f.name = t;
  for (const std::string& raw : split(t, '*')) {
    std::string factor = trim(raw);
    if (factor == "1") continue;
    int power = 1;
    size_t caret = factor.find('^');
    std::string col = factor;
    if (caret != std::string::npos) {
      col = trim(factor.substr(0, caret));
      std::string exp = trim(factor.substr(caret + 1));
      size_t pos = 0;
      try {
        power = std::stoi(exp, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != exp.size() || power < 1)
        throw ParseError(0, "bad exponent in basis term '" + t + "'");
    }
    int idx = column_index(columns, col);
    if (idx < 0)
      throw ParseError(0, "basis term '" + t + "' references undeclared column '" +
                              col + "'");
    f.powers.emplace_back(idx, power);
  }
  if (f.powers.empty()) return feature_const();
  return f;
}

SpecConfig parse_spec_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("model spec is not valid JSON: ") + e.what());
  }
  SpecConfig cfg;
  try {
    cfg.columns = j.at("columns").get<std::vector<std::string>>();
    cfg.response = j.at("response").get<std::string>();
    cfg.propensity = j.at("propensity").get<std::vector<std::string>>();
    cfg.mean_basis = j.at("mean_basis").get<std::vector<std::string>>();
    cfg.logvar_basis = j.at("logvar_basis").get<std::vector<std::string>>();
    if (j.contains("family")) cfg.family = j.at("family").get<std::string>();
    if (j.contains("instrument"))
      cfg.instrument = j.at("instrument").get<std::string>();
    if (j.contains("recode")) {
      for (const auto& r : j.at("recode")) {
        SpecConfig::Recode rec;
        rec.column = r.at("column").get<std::string>();
        rec.from = r.at("from").get<double>();
        rec.to = r.at("to").get<double>();
        cfg.recodes.push_back(rec);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("model spec: ") + e.what());
  }
  return cfg;
}

SpecConfig read_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open model spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec_json(ss.str());
}

ModelSpec build_model_spec(const SpecConfig& config) {
  if (config.columns.empty()) throw ParseError(0, "no covariate columns declared");
  if (config.response.empty()) throw ParseError(0, "no response column declared");
  if (column_index(config.columns, config.response) >= 0)
    throw ParseError(0, "response column '" + config.response +
                            "' also declared as a covariate");
  if (config.family != "normal")
    throw ParseError(0, "unsupported family '" + config.family + "'");
  if (config.mean_basis.empty())
    throw ParseError(0, "outcome mean basis is empty");
  if (config.logvar_basis.empty())
    throw ParseError(0, "outcome log-variance basis is empty");

  ModelSpec spec;
  spec.columns = config.columns;
  for (const std::string& p : config.propensity) {
    int idx = column_index(config.columns, p);
    if (idx < 0)
      throw ParseError(0, "propensity covariate '" + p + "' is not declared");
    spec.propensity.push_back(idx);
  }
  spec.outcome.kind = Family::NormalBasis;
  for (const std::string& t : config.mean_basis)
    spec.outcome.mean_basis.push_back(parse_term(t, config.columns));
  for (const std::string& t : config.logvar_basis)
    spec.outcome.logvar_basis.push_back(parse_term(t, config.columns));
  if (config.instrument) {
    int idx = column_index(config.columns, *config.instrument);
    if (idx < 0)
      throw ParseError(0, "instrument '" + *config.instrument + "' is not declared");
    spec.instrument = idx;
  }
  for (const auto& r : config.recodes)
    if (column_index(config.columns, r.column) < 0)
      throw ParseError(0, "recode column '" + r.column + "' is not declared");
  return spec;
}

Dataset read_dataset_csv(const std::string& path, const SpecConfig& config) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open data file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  std::vector<std::string> header = split(line, ',');
  for (auto& h : header) h = trim(h);

  std::vector<int> cov_pos(config.columns.size());
  for (size_t c = 0; c < config.columns.size(); ++c) {
    cov_pos[c] = column_index(header, config.columns[c]);
    if (cov_pos[c] < 0)
      throw ParseError(1, "missing covariate column '" + config.columns[c] + "'");
  }
  int y_pos = column_index(header, config.response);
  if (y_pos < 0)
    throw ParseError(1, "missing response column '" + config.response + "'");

  std::vector<VectorXd> rows;
  std::vector<double> ys;
  std::vector<int> ds;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) +
                                   " fields, got " + std::to_string(fields.size()));
    VectorXd x(config.columns.size());
    for (size_t c = 0; c < config.columns.size(); ++c) {
      std::string v = trim(fields[cov_pos[c]]);
      size_t pos = 0;
      double val;
      try {
        val = std::stod(v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (v.empty() || pos != v.size())
        throw ParseError(lineno, "bad value '" + v + "' in column '" +
                                     config.columns[c] + "'");
      for (const auto& r : config.recodes)
        if (r.column == config.columns[c] && val == r.from) val = r.to;
      x(c) = val;
    }
    std::string yv = trim(fields[y_pos]);
    if (yv.empty() || yv == "NA") {
      ds.push_back(0);
      ys.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      size_t pos = 0;
      double val;
      try {
        val = std::stod(yv, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != yv.size())
        throw ParseError(lineno, "bad response value '" + yv + "'");
      ds.push_back(1);
      ys.push_back(val);
    }
    rows.push_back(x);
  }
  if (rows.empty()) throw ParseError(lineno, "no data rows");

  Dataset data;
  const int n = static_cast<int>(rows.size());
  data.x.resize(n, rows[0].size());
  data.d.resize(n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.x.row(i) = rows[i].transpose();
    data.d(i) = ds[i];
    data.y(i) = ys[i];
  }
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::vector<std::string>& columns,
                       const std::string& response) {
  if (static_cast<int>(columns.size()) != data.x.cols())
    throw std::invalid_argument("write_dataset_csv: column-name count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (const auto& c : columns) out << c << ',';
  out << response << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int c = 0; c < data.x.cols(); ++c) out << g17(data.x(i, c)) << ',';
    if (data.d(i) == 1) out << g17(data.y(i));
    out << '\n';
  }
}

OutFormat parse_format(const std::string& name) {
  if (name == "table") return OutFormat::Table;
  if (name == "json") return OutFormat::Json;
  if (name == "csv") return OutFormat::Csv;
  throw ParseError(0, "unknown output format '" + name + "'");
}

FitReport make_fit_report(const FitResult& fit, const Dataset& data,
                          const ModelSpec& spec,
                          const IdentifiabilityVerdict& ident, double level,
                          const std::optional<IntervalEstimate>& boot_ci) {
  FitReport rep;
  rep.param_names.push_back("alpha");
  for (int j = 0; j < spec.d_beta(); ++j)
    rep.param_names.push_back("beta_" + spec.columns[spec.propensity[j]]);
  rep.param_names.push_back("gamma");
  for (const auto& f : spec.outcome.mean_basis)
    rep.param_names.push_back("xi_mean[" + f.name + "]");
  for (const auto& f : spec.outcome.logvar_basis)
    rep.param_names.push_back("xi_logvar[" + f.name + "]");

  rep.theta = fit.theta_hat.pack();
  rep.alpha_star = alpha_star(fit.theta_hat, fit.eta_hat);
  rep.eta = fit.eta_hat;
  rep.lambda = fit.lambda_hat;
  rep.mu = fit.mu_hat;
  rep.sigma2 = fit.sigma2_hat;
  rep.mu_se = fit.mu_se;
  rep.theta_se = VectorXd::Constant(rep.theta.size(),
                                    std::numeric_limits<double>::quiet_NaN());
  if (fit.theta_cov) {
    const int n = data.n();
    for (int j = 0; j < rep.theta.size(); ++j) {
      double v = (*fit.theta_cov)(j, j);
      if (v > 0) rep.theta_se(j) = std::sqrt(v / n);
    }
  }
  rep.mu_ci = wald_ci_mu(fit, level, VarianceSource::WaldPlugin);
  rep.mu_ci_boot = boot_ci;
  rep.ell1 = fit.ell1;
  rep.ell2 = fit.ell2;
  rep.bic = bic(fit, data);
  rep.converged = fit.converged;
  rep.grad_norm = fit.grad_norm;
  rep.iterations = fit.iterations;
  rep.ident = ident;
  return rep;
}

std::string format_fit_report(const FitReport& report, OutFormat format) {
  if (format == OutFormat::Json) {
    json j;
    j["schema"] = "fit-report/1";
    json params = json::array();
    for (int i = 0; i < report.theta.size(); ++i)
      params.push_back(json{{"name", report.param_names[i]},
                            {"estimate", report.theta(i)},
                            {"se", std::isnan(report.theta_se(i))
                                       ? json()
                                       : json(report.theta_se(i))}});
    j["theta"] = params;
    j["alpha_star"] = report.alpha_star;
    j["eta"] = report.eta;
    j["lambda"] = report.lambda;
    j["mu"] = report.mu;
    j["sigma2"] = report.sigma2;
    j["mu_se"] = report.mu_se;
    j["mu_ci"] = interval_json(report.mu_ci);
    if (report.mu_ci_boot) j["mu_ci_bootstrap"] = interval_json(*report.mu_ci_boot);
    j["ell1"] = report.ell1;
    j["ell2"] = report.ell2;
    j["bic"] = report.bic;
    j["converged"] = report.converged;
    j["grad_norm"] = report.grad_norm;
    j["iterations"] = report.iterations;
    j["identifiability"] = json{{"status", to_string(report.ident.status)},
                                {"rule", to_string(report.ident.rule)},
                                {"explanation", report.ident.explanation}};
    return j.dump(2) + "\n";
  }
  if (format == OutFormat::Csv) {
    std::ostringstream out;
    out << "field,value\n";
    for (int i = 0; i < report.theta.size(); ++i) {
      out << report.param_names[i] << ',' << g17(report.theta(i)) << '\n';
      if (!std::isnan(report.theta_se(i)))
        out << "se_" << report.param_names[i] << ',' << g17(report.theta_se(i))
            << '\n';
    }
    out << "alpha_star," << g17(report.alpha_star) << '\n';
    out << "eta," << g17(report.eta) << '\n';
    out << "lambda," << g17(report.lambda) << '\n';
    out << "mu," << g17(report.mu) << '\n';
    out << "sigma2," << g17(report.sigma2) << '\n';
    out << "mu_se," << g17(report.mu_se) << '\n';
    out << "mu_ci_lower," << g17(report.mu_ci.lower) << '\n';
    out << "mu_ci_upper," << g17(report.mu_ci.upper) << '\n';
    if (report.mu_ci_boot) {
      out << "mu_ci_boot_lower," << g17(report.mu_ci_boot->lower) << '\n';
      out << "mu_ci_boot_upper," << g17(report.mu_ci_boot->upper) << '\n';
      out << "mu_se_boot," << g17(report.mu_ci_boot->se) << '\n';
    }
    out << "ell1," << g17(report.ell1) << '\n';
    out << "ell2," << g17(report.ell2) << '\n';
    out << "bic," << g17(report.bic) << '\n';
    out << "converged," << (report.converged ? 1 : 0) << '\n';
    out << "grad_norm," << g17(report.grad_norm) << '\n';
    out << "iterations," << report.iterations << '\n';
    out << "ident_status," << to_string(report.ident.status) << '\n';
    out << "ident_rule," << to_string(report.ident.rule) << '\n';
    return out.str();
  }
  std::ostringstream out;
  out << "Fit report\n==========\n";
  char buf[160];
  for (int i = 0; i < report.theta.size(); ++i) {
    if (std::isnan(report.theta_se(i)))
      std::snprintf(buf, sizeof(buf), "  %-22s %12.6f\n",
                    report.param_names[i].c_str(), report.theta(i));
    else
      std::snprintf(buf, sizeof(buf), "  %-22s %12.6f  (se %.6f)\n",
                    report.param_names[i].c_str(), report.theta(i),
                    report.theta_se(i));
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "  %-22s %12.6f\n", "alpha_star",
                report.alpha_star);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  %-22s %12.6f\n", "eta", report.eta);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  %-22s %12.6f  (se %.6f)\n", "mu", report.mu,
                report.mu_se);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "  mu %.1f%% CI (plug-in)   [%.6f, %.6f]\n",
                100 * report.mu_ci.level, report.mu_ci.lower, report.mu_ci.upper);
  out << buf;
  if (report.mu_ci_boot) {
    std::snprintf(buf, sizeof(buf),
                  "  mu %.1f%% CI (bootstrap) [%.6f, %.6f]  (se %.6f, %d failed)\n",
                  100 * report.mu_ci_boot->level, report.mu_ci_boot->lower,
                  report.mu_ci_boot->upper, report.mu_ci_boot->se,
                  report.mu_ci_boot->bootstrap_failures);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "  ell1 %.6f  ell2 %.6f  BIC %.6f\n", report.ell1, report.ell2,
                report.bic);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "  converged %s  |grad| %.3e  iterations %d\n",
                report.converged ? "yes" : "no", report.grad_norm,
                report.iterations);
  out << buf;
  out << "  identifiability " << to_string(report.ident.status) << " ("
      << to_string(report.ident.rule) << "): " << report.ident.explanation
      << "\n";
  return out.str();
}

std::string format_mc_report(const std::vector<MCReport>& rows,
                             OutFormat format) {
  if (format == OutFormat::Json) {
    json arr = json::array();
    for (const auto& r : rows) {
      json j{{"estimator", r.estimator}, {"reps", r.reps},
             {"rb_pct", r.rb_pct},       {"mse_x100", r.mse_x100},
             {"failures", r.failures},   {"seed", r.seed}};
      j["coverage_pct"] =
          std::isnan(r.coverage_pct) ? json() : json(r.coverage_pct);
      arr.push_back(j);
    }
    return json{{"schema", "mc-report/1"}, {"rows", arr}}.dump(2) + "\n";
  }
  if (format == OutFormat::Csv) {
    std::ostringstream out;
    out << "estimator,reps,rb_pct,mse_x100,coverage_pct,failures,seed\n";
    for (const auto& r : rows) {
      out << r.estimator << ',' << r.reps << ',' << g17(r.rb_pct) << ','
          << g17(r.mse_x100) << ','
          << (std::isnan(r.coverage_pct) ? std::string("NA") : g17(r.coverage_pct))
          << ',' << r.failures << ',' << r.seed << '\n';
    }
    return out.str();
  }
  std::ostringstream out;
  out << "estimator       reps    rb_pct  mse_x100  coverage_pct  failures\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-14s %5d %9.3f %9.3f  ", r.estimator.c_str(),
                  r.reps, r.rb_pct, r.mse_x100);
    out << buf;
    if (std::isnan(r.coverage_pct))
      out << "          NA";
    else {
      std::snprintf(buf, sizeof(buf), "%12.1f", r.coverage_pct);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "  %8d\n", r.failures);
    out << buf;
  }
  return out.str();
}

std::string format_ident_report(const IdentifiabilityVerdict& verdict,
                                OutFormat format) {
  if (format == OutFormat::Json) {
    return json{{"schema", "ident-report/1"},
                {"status", to_string(verdict.status)},
                {"rule", to_string(verdict.rule)},
                {"explanation", verdict.explanation}}
               .dump(2) +
           "\n";
  }
  if (format == OutFormat::Csv) {
    std::ostringstream out;
    out << "status,rule,explanation\n"
        << to_string(verdict.status) << ',' << to_string(verdict.rule) << ",\""
        << verdict.explanation << "\"\n";
    return out.str();
  }
  std::ostringstream out;
  out << "identifiability: " << to_string(verdict.status) << " ("
      << to_string(verdict.rule) << ")\n  " << verdict.explanation << "\n";
  return out.str();
}

}  // namespace mnar
