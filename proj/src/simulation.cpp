#include "geompc/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace geompc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError(fmt::format("config: '{}' is not a number for key '{}'", value, key));
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(fmt::format("config: '{}' is not a count for key '{}'", value, key));
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(fmt::format("config: '{}' is not a boolean for key '{}'", value, key));
}

using Setter = std::function<void(SimConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> setters = [] {
    std::map<std::string, Setter> m;
    auto real = [&m](const char* key, auto member) {
      m[key] = [member](SimConfig& c, const std::string& k, const std::string& v) {
        member(c) = parse_double(k, v);
      };
    };
    auto count = [&m](const char* key, auto member) {
      m[key] = [member](SimConfig& c, const std::string& k, const std::string& v) {
        member(c) = static_cast<std::size_t>(parse_count(k, v));
      };
    };
    real("dt", [](SimConfig& c) -> double& { return c.dt; });
    real("p_stop", [](SimConfig& c) -> double& { return c.p_stop; });
    real("c_u", [](SimConfig& c) -> double& { return c.params.c_u; });
    real("r_u", [](SimConfig& c) -> double& { return c.params.r_u; });
    real("w_s", [](SimConfig& c) -> double& { return c.params.w_s; });
    real("x0", [](SimConfig& c) -> double& { return c.params.x0; });
    real("y0", [](SimConfig& c) -> double& { return c.params.y0; });
    real("x_f", [](SimConfig& c) -> double& { return c.params.x_f; });
    real("y_f", [](SimConfig& c) -> double& { return c.params.y_f; });
    real("fd_step", [](SimConfig& c) -> double& { return c.solver.fd_step; });
    real("gmres_abs_tol", [](SimConfig& c) -> double& { return c.solver.gmres.abs_tol; });
    real("precond_period", [](SimConfig& c) -> double& { return c.solver.precond_period; });
    real("init_tol", [](SimConfig& c) -> double& { return c.solver.init_tol; });
    real("p_min", [](SimConfig& c) -> double& { return c.solver.p_min; });
    count("N", [](SimConfig& c) -> std::size_t& { return c.horizon_steps; });
    count("max_samples", [](SimConfig& c) -> std::size_t& { return c.max_samples; });
    count("gmres_max_iters", [](SimConfig& c) -> std::size_t& { return c.solver.gmres.max_iters; });
    count("newton_iters_per_sample",
          [](SimConfig& c) -> std::size_t& { return c.solver.newton_iters_per_sample; });
    count("init_max_iters", [](SimConfig& c) -> std::size_t& { return c.solver.init_max_iters; });
    m["t_max"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      if (v == "none" || v.empty()) {
        c.t_max.reset();
      } else {
        c.t_max = parse_double(k, v);
      }
    };
    m["precond_enabled"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.solver.precond_enabled = parse_flag(k, v);
    };
    m["output_dir"] = [](SimConfig& c, const std::string&, const std::string& v) {
      c.output_dir = v;
    };
    m["seed"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.seed = parse_count(k, v);
    };
    return m;
  }();
  return setters;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::ofstream open_csv(const std::filesystem::path& path, std::string_view header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open '{}' for writing", path.string()));
  out << header << '\n';
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("config: dt must be positive");
  if (horizon_steps < 2) throw ConfigError("config: N must be at least 2");
  if (!(p_stop > 0.0)) throw ConfigError("config: p_stop must be positive");
  if (max_samples < 1) throw ConfigError("config: max_samples must be at least 1");
  if (t_max && !(*t_max >= 0.0)) throw ConfigError("config: t_max must be non-negative");
  params.validate();
  solver.validate();
}

SimConfig parse_config(const std::string& text, SimConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  const auto& setters = config_setters();
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("config line {}: expected 'key = value'", line_no));
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
    it->second(base, key, value);
  }
  return base;
}

SimConfig load_config(const std::filesystem::path& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

double SimulationResult::initial_p() const {
  if (!init) return std::nan("");
  return init->solution.parameters()[0];
}

SimulationResult run_simulation(const SimConfig& cfg) {
  cfg.validate();
  SimulationResult result;
  const ControlProblem problem = hemisphere::make_control_problem(cfg.params, cfg.horizon_steps);

  Vector plant = hemisphere::lift(cfg.params.start());
  result.final_state = plant;
  try {
    result.init = initialize(problem, plant, 0.0, cfg.solver);
  } catch (const Error& e) {
    result.failed = true;
    result.error = e.what();
    result.stop_reason = "initialization failed";
    return result;
  }

  ControllerState controller = ControllerState::warm_started(result.init->solution);
  const std::size_t p_index = problem.layout.parameter_index(0);

  for (std::size_t k = 0; k < cfg.max_samples; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (cfg.t_max && t > *cfg.t_max + 1e-12) {
      result.stop_reason = "t_max reached";
      return result;
    }
    SampleResult sample;
    try {
      sample = sample_update(controller, problem, plant, t, cfg.solver);
    } catch (const Error& e) {
      result.failed = true;
      result.error = fmt::format("controller failed at t = {}: {}", t, e.what());
      result.stop_reason = "controller error";
      return result;
    }

    const SampleTelemetry& tel = sample.telemetry;
    SampleRecord rec;
    rec.t = t;
    rec.x = plant[0];
    rec.y = plant[1];
    rec.z = plant[2];
    rec.u = sample.u_apply[0];
    rec.u_s0 = sample.u_apply[1];
    rec.p = controller.u.values()[p_index];
    rec.residual_norm = tel.residual_norm;
    rec.gmres_iters = tel.gmres_iters;
    rec.gmres_converged = tel.gmres_converged;
    rec.precond_age = tel.precond_age;
    rec.precond_refreshed = tel.precond_refreshed;
    rec.precond_fallback = tel.precond_fallback;
    rec.sphere_defect = std::abs(dot(plant, plant) - 1.0);
    result.records.push_back(rec);

    try {
      // The plant runs in physical time, so the time scale is 1.
      plant = local_coordinates_step(hemisphere::hemisphere_chart(rec.u, 1.0),
                                     OneStepMethod::explicit_euler, t, plant, cfg.dt);
    } catch (const Error& e) {
      result.failed = true;
      result.error = fmt::format("plant step failed at t = {}: {}", t, e.what());
      result.stop_reason = "plant error";
      return result;
    }
    result.final_state = plant;

    if (rec.p <= cfg.p_stop) {
      result.stop_reason = "p <= p_stop";
      return result;
    }
  }
  result.stop_reason = "max_samples reached";
  return result;
}

double mean_gmres_iters(const std::vector<SampleRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) sum += static_cast<double>(r.gmres_iters);
  return sum / static_cast<double>(records.size());
}

PrecondComparison compare_preconditioning(const SimConfig& cfg) {
  SimConfig on = cfg;
  on.solver.precond_enabled = true;
  SimConfig off = cfg;
  off.solver.precond_enabled = false;

  PrecondComparison cmp;
  cmp.with_precond = run_simulation(on);
  cmp.without_precond = run_simulation(off);
  cmp.mean_iters_with = mean_gmres_iters(cmp.with_precond.records);
  cmp.mean_iters_without = mean_gmres_iters(cmp.without_precond.records);
  for (const auto& r : cmp.with_precond.records)
    cmp.max_iters_with = std::max(cmp.max_iters_with, r.gmres_iters);
  for (const auto& r : cmp.without_precond.records)
    cmp.max_iters_without = std::max(cmp.max_iters_without, r.gmres_iters);

  const std::size_t shared =
      std::min(cmp.with_precond.records.size(), cmp.without_precond.records.size());
  for (std::size_t k = 0; k < shared; ++k) {
    const auto& a = cmp.with_precond.records[k];
    const auto& b = cmp.without_precond.records[k];
    cmp.max_state_gap = std::max(cmp.max_state_gap, std::hypot(a.x - b.x, a.y - b.y));
  }
  return cmp;
}

void emit_plot_data(const std::vector<SampleRecord>& records,
                    const std::filesystem::path& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) {
    throw Error(fmt::format("cannot create output directory '{}': {}", output_dir.string(),
                            ec.message()));
  }

  auto trajectory = open_csv(output_dir / "trajectory.csv", "t,x,y,z,p");
  auto control = open_csv(output_dir / "control.csv", "t,u,u_s0");
  auto gmres = open_csv(output_dir / "gmres.csv", "t,iters,precond_age");
  auto residual = open_csv(output_dir / "residual.csv", "t,normF");
  auto trajectory3d = open_csv(output_dir / "trajectory3d.csv", "t,x,y,z");

  for (const auto& r : records) {
    trajectory << num(r.t) << ',' << num(r.x) << ',' << num(r.y) << ',' << num(r.z) << ','
               << num(r.p) << '\n';
    control << num(r.t) << ',' << num(r.u) << ',' << num(r.u_s0) << '\n';
    gmres << num(r.t) << ',' << r.gmres_iters << ',' << num(r.precond_age) << '\n';
    residual << num(r.t) << ',' << num(r.residual_norm) << '\n';
    trajectory3d << num(r.t) << ',' << num(r.x) << ',' << num(r.y) << ',' << num(r.z) << '\n';
  }

  for (auto* out : {&trajectory, &control, &gmres, &residual, &trajectory3d}) {
    out->flush();
    if (!*out) throw Error(fmt::format("write failed under '{}'", output_dir.string()));
  }
}

}  // namespace geompc
