#include "msd/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace msd {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("field '" + path + "': " + msg);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

std::vector<double> vector_of(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// Nested rows. A flat array is read as one row or one column as `flat_as_column` says.
Matrix matrix_of(const json& j, const std::string& path, bool flat_as_column = false) {
  if (j.is_number()) return Matrix::Constant(1, 1, number(j, path));
  if (!j.is_array()) fail(path, "expected a matrix (array of rows)");
  if (j.empty()) return Matrix(0, 0);
  if (!j[0].is_array()) {
    const std::vector<double> v = vector_of(j, path);
    const auto n = static_cast<Eigen::Index>(v.size());
    Matrix M = flat_as_column ? Matrix(n, 1) : Matrix(1, n);
    for (Eigen::Index i = 0; i < n; ++i) M(flat_as_column ? i : 0, flat_as_column ? 0 : i) = v[static_cast<std::size_t>(i)];
    return M;
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const std::vector<double> row = vector_of(j[static_cast<std::size_t>(r)], rp);
    if (static_cast<Eigen::Index>(row.size()) != cols) fail(rp, "ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<std::size_t>(c)];
  }
  return M;
}

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json optional_round(const std::optional<double>& v) { return v ? json(round4(*v)) : json(nullptr); }

}  // namespace

StateSpace parse_system(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object with 'state_space' or 'transfer_function'");
  const bool has_ss = j.contains("state_space");
  const bool has_tf = j.contains("transfer_function");
  if (has_ss == has_tf) fail(path, "exactly one of 'state_space' and 'transfer_function' is required");
  try {
    if (has_ss) {
      const std::string p = child(path, "state_space");
      const json& s = j["state_space"];
      Matrix A = matrix_of(require(s, "A", p), child(p, "A"));
      Matrix B = matrix_of(require(s, "B", p), child(p, "B"), true);
      Matrix C = matrix_of(require(s, "C", p), child(p, "C"));
      Matrix D = s.contains("D") ? matrix_of(s["D"], child(p, "D")) : Matrix::Zero(1, 1);
      if (A.size() == 0) {
        A = Matrix(0, 0);
        B = Matrix(0, D.cols());
        C = Matrix(D.rows(), 0);
      }
      StateSpace ss(std::move(A), std::move(B), std::move(C), std::move(D));
      ss.validate();
      return ss;
    }
    const std::string p = child(path, "transfer_function");
    const json& t = j["transfer_function"];
    const std::vector<double> num = vector_of(require(t, "num", p), child(p, "num"));
    const std::vector<double> den = vector_of(require(t, "den", p), child(p, "den"));
    if (den.empty() || den[0] == 0.0) fail(child(p, "den"), "leading coefficient must be nonzero");
    return ss_from_tf(RationalTF(Polynomial(num), Polynomial(den)));
  } catch (const ConfigError&) {
    throw;
  } catch (const InputError& e) {
    fail(path, e.what());
  }
}

ProblemConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON at " + position(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  try {
    if (!root.is_object()) fail("", "top level must be an object");
    ProblemConfig cfg;
    cfg.plant = parse_system(require(root, "plant", ""), "plant");
    if (root.contains("controller") && !root["controller"].is_null())
      cfg.controller = parse_system(root["controller"], "controller");

    const json& ch = require(root, "channel", "");
    std::vector<double> pmf = vector_of(require(ch, "pmf", "channel"), "channel.pmf");
    std::vector<double> w = vector_of(require(ch, "weights", "channel"), "channel.weights");
    try {
      cfg.channel = ChannelSpec(std::move(pmf), std::move(w));
    } catch (const InputError& e) {
      fail("channel", e.what());
    }

    if (root.contains("input")) {
      const json& in = root["input"];
      if (!in.is_object()) fail("input", "expected an object");
      if (in.contains("sigma_v_sq")) {
        const double s = number(in["sigma_v_sq"], "input.sigma_v_sq");
        if (s < 0.0) fail("input.sigma_v_sq", "must be nonnegative");
        cfg.sigma_v_sq = s;
      }
      if (in.contains("initial_covariance"))
        cfg.initial_covariance = matrix_of(in["initial_covariance"], "input.initial_covariance");
      if (!cfg.sigma_v_sq && !cfg.initial_covariance)
        fail("input", "expected 'sigma_v_sq' or 'initial_covariance'");
    }
    if (root.contains("seed")) {
      const json& s = root["seed"];
      if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
        fail("seed", "expected a nonnegative integer");
      cfg.seed = s.get<std::uint64_t>();
    }
    return cfg;
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

json to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Polynomial& p) { return json(p.coeffs()); }

json to_json(const StateSpace& ss) {
  return {{"A", to_json(ss.A)}, {"B", to_json(ss.B)}, {"C", to_json(ss.C)}, {"D", to_json(ss.D)}};
}

json to_json(const RationalTF& tf) { return {{"num", to_json(tf.num)}, {"den", to_json(tf.den)}}; }

json to_json(const AnalysisReport& r) {
  json j;
  j["mean_channel"] = to_json(r.H);
  j["spectral_factor"] = to_json(r.Phi);
  j["degenerate_channel"] = r.degenerate_channel;
  j["nominal_loop"] = to_json(r.G);
  j["nominal_stable"] = r.nominal_stable;
  j["spectral_radius"] = r.spectral_radius;
  j["J"] = optional_json(r.J);
  j["g_norm_sq"] = optional_json(r.g_norm_sq);
  j["ms_stable"] = r.ms_stable;
  j["sigma_u_inf"] = optional_json(r.sigma_u_inf);
  j["rounded"] = {{"J", optional_round(r.J)},
                  {"sigma_u_inf", optional_round(r.sigma_u_inf)},
                  {"spectral_factor", json::array()}};
  for (double c : r.Phi.coeffs()) j["rounded"]["spectral_factor"].push_back(round4(c));
  return j;
}

json to_json(const SynthesisResult& r) {
  json j;
  j["controller"] = {{"state_space", to_json(r.K)}, {"transfer_function", to_json(r.K_tf)}};
  j["J_star"] = r.J_star;
  j["J_general_plant"] = r.J_plant;
  j["ms_stabilizable"] = r.ms_stabilizable;
  j["closed_loop_spectral_radius"] = r.closed_loop_radius;
  j["gains"] = {{"F", to_json(r.F)}, {"L", to_json(r.L)}, {"L0", to_json(r.L0)}};
  j["riccati"] = {{"X", to_json(r.X)},
                  {"Y", to_json(r.Y)},
                  {"x_residual", r.x_residual},
                  {"y_residual", r.y_residual}};
  j["degenerate"] = r.degenerate;
  if (!r.note.empty()) j["note"] = r.note;
  json rounded_num = json::array(), rounded_den = json::array();
  for (double c : r.K_tf.num.coeffs()) rounded_num.push_back(round4(c));
  for (double c : r.K_tf.den.coeffs()) rounded_den.push_back(round4(c));
  j["rounded"] = {{"J_star", round4(r.J_star)}, {"num", rounded_num}, {"den", rounded_den}};
  return j;
}

void write_trace_csv(std::ostream& os, const VarianceTrace& t) {
  os << "k,sigma_sq\n" << std::setprecision(17);
  for (std::size_t k = 0; k < t.sigma_sq.size(); ++k) os << k << ',' << t.sigma_sq[k] << '\n';
}

}  // namespace msd
