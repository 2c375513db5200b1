#include "smpm/instance_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "smpm/errors.hpp"

namespace smpm {
namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorCode::kIo,
          "matrix payload has the wrong length");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[i * cols + j2].get<double>();
  return m;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json smoothness_json(Smoothness L) {
  if (!L.is_finite()) return "inf";
  return L.value();
}

Smoothness smoothness_from(const json& j) {
  if (j.is_string()) {
    require(j.get<std::string>() == "inf", ErrorCode::kIo, "smoothness must be a number or \"inf\"");
    return Smoothness::infinite();
  }
  return Smoothness::finite(j.get<double>());
}

json form_json(const QuadraticForm& q) {
  json out = {{"lam", vector_json(q.lam)}, {"b", vector_json(q.b)}};
  if (!q.is_diagonal()) out["Q"] = matrix_json(q.Q);
  return out;
}

QuadraticForm form_from(const json& j) {
  Vector lam = vector_from(j.at("lam"));
  Vector b = vector_from(j.at("b"));
  if (j.contains("Q")) return QuadraticForm::spectral(matrix_from(j.at("Q")), std::move(lam), std::move(b));
  return QuadraticForm::diagonal(std::move(lam), std::move(b));
}

json prox_json(const ProxOracle& oracle) {
  json out = {{"mu", oracle.mu()}, {"L", smoothness_json(oracle.L())}};
  std::visit(
      [&](const auto& fn) {
        using T = std::decay_t<decltype(fn)>;
        if constexpr (std::is_same_v<T, ZeroFunction>) {
          out["type"] = "zero";
        } else if constexpr (std::is_same_v<T, QuadraticForm>) {
          out["type"] = "quadratic";
          out["form"] = form_json(fn);
        } else if constexpr (std::is_same_v<T, ScaledSqNorm>) {
          out["type"] = "scaled_sqnorm";
        } else if constexpr (std::is_same_v<T, HyperplaneRidge>) {
          out["type"] = "hyperplane_ridge";
          out["w"] = vector_json(fn.w);
          out["b"] = fn.b;
        } else {
          out["type"] = "box";
          out["lo"] = fn.lo;
          out["hi"] = fn.hi;
        }
      },
      oracle.function());
  return out;
}

ProxOracle prox_from(const json& j) {
  const auto type = j.at("type").get<std::string>();
  const double mu = j.at("mu").get<double>();
  if (type == "zero") return ProxOracle::zero();
  if (type == "quadratic") return ProxOracle::quadratic(form_from(j.at("form")), mu, smoothness_from(j.at("L")));
  if (type == "scaled_sqnorm") return ProxOracle::scaled_sqnorm(mu);
  if (type == "hyperplane_ridge") return ProxOracle::hyperplane_ridge(vector_from(j.at("w")), j.at("b").get<double>(), mu);
  if (type == "box") return ProxOracle::box(j.at("lo").get<double>(), j.at("hi").get<double>());
  fail(ErrorCode::kIo, "unknown prox oracle type: " + type);
}

}  // namespace

std::string instance_to_json(const ProblemInstance& inst) {
  json out;
  out["format"] = "smpm-instance";
  out["version"] = 1;
  out["kind"] = to_string(inst.kind);
  out["n"] = inst.n;
  out["d"] = inst.d;
  if (inst.f.is_zero()) {
    out["f"] = {{"type", "zero"}};
  } else {
    out["f"] = {{"type", "quadratic"}, {"L", inst.f.L()}, {"mu", inst.f.mu()}, {"form", form_json(*inst.f.form())}};
  }
  out["g"] = prox_json(inst.g);
  json h = json::array();
  for (const auto& hi : inst.h) h.push_back(prox_json(hi));
  out["h"] = std::move(h);
  out["x_star"] = vector_json(inst.x_star);
  out["u_star"] = matrix_json(inst.u_star);
  if (inst.delta) out["delta"] = *inst.delta;
  return out.dump();
}

ProblemInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("instance JSON: ") + e.what());
  }
  try {
    require(j.value("format", "") == "smpm-instance", ErrorCode::kIo, "not an smpm instance document");
    ProblemInstance inst;
    inst.kind = problem_kind_from_string(j.at("kind").get<std::string>());
    inst.n = j.at("n").get<int>();
    inst.d = j.at("d").get<int>();
    const auto& f = j.at("f");
    if (f.at("type").get<std::string>() == "quadratic") {
      inst.f = SmoothOracle::quadratic(form_from(f.at("form")), f.at("L").get<double>(), f.at("mu").get<double>());
    }
    inst.g = prox_from(j.at("g"));
    for (const auto& hi : j.at("h")) inst.h.push_back(prox_from(hi));
    inst.x_star = vector_from(j.at("x_star"));
    inst.u_star = matrix_from(j.at("u_star"));
    if (j.contains("delta")) inst.delta = j.at("delta").get<double>();
    require(static_cast<int>(inst.h.size()) == inst.n && inst.x_star.size() == inst.d &&
                inst.u_star.rows() == inst.d && inst.u_star.cols() == inst.n,
            ErrorCode::kIo, "instance JSON: inconsistent dimensions");
    return inst;
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("instance JSON: ") + e.what());
  }
}

void save_instance(const ProblemInstance& instance, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open for writing: " + path);
  out << instance_to_json(instance) << '\n';
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path);
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open for reading: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

}  // namespace smpm
