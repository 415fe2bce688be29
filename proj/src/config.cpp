#include "rangecert/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rangecert {

namespace {

using nlohmann::json;

// Weights are irrelevant for exact data, but the noise model needs positive values.
constexpr double kNoiselessSigma = 1e-3;

void reject_unknown(const json& section, const std::string& name, const std::set<std::string>& known) {
  if (!section.is_object()) throw ValidationError("config section '" + name + "' must be an object");
  for (const auto& item : section.items())
    if (!known.count(item.key())) throw ValidationError("unknown config key '" + name + "." + item.key() + "'");
}

template <class T>
void read(const json& section, const char* key, T& value) {
  const auto it = section.find(key);
  if (it == section.end() || it->is_null()) return;
  try {
    value = it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string policy_name(VariancePolicy p) {
  return p == VariancePolicy::propagated ? "propagated" : "squared-constant";
}

VariancePolicy policy_from_string(const std::string& s) {
  if (s == "squared-constant") return VariancePolicy::squared_constant;
  if (s == "propagated") return VariancePolicy::propagated;
  throw ValidationError("unknown variance policy '" + s + "'");
}

}  // namespace

NoiseModel RunConfig::noise_for(double sigma_d) const {
  NoiseModel out = noise;
  if (noise_sigma_d_from_sim) out.sigma_d = sigma_d > 0.0 ? sigma_d : kNoiselessSigma;
  return out;
}

void RunConfig::resolve() {
  sim.rng_seed = seed;
  solve.rng_seed = seed;
  noise = noise_for(sim.sigma_d);
  sim.validate();
  noise.validate();
  prior(sim.dim).validate();
  solve.validate();
  cert.validate();
  if (bench.grid.empty() || bench.repeats < 1 || bench.gn_iterations < 1)
    throw ValidationError("bench needs a nonempty grid and positive repeat counts");
  for (std::size_t n : bench.grid)
    if (n < 2) throw ValidationError("bench grid sizes must be at least 2");
  if (sweep.setups < 1 || sweep.noise_grid.empty()) throw ValidationError("sweep needs setups and a noise grid");
  for (double s : sweep.noise_grid)
    if (!(s >= 0.0)) throw ValidationError("sweep noise levels must be nonnegative");
  if (!(sweep.cluster_tolerance >= 0.0)) throw ValidationError("cluster_tolerance must be nonnegative");
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (root.is_null()) root = json::object();
  reject_unknown(root, "config", {"seed", "sim", "noise", "prior", "solve", "cert", "bench", "sweep"});

  RunConfig c;
  read(root, "seed", c.seed);

  if (root.contains("sim")) {
    const json& s = root["sim"];
    reject_unknown(s, "sim",
                   {"num_times", "num_anchors", "dim", "sigma_a", "sigma_d", "dt", "position_range", "velocity_range",
                    "schedule", "placement", "colinear_eps"});
    read(s, "num_times", c.sim.num_times);
    read(s, "num_anchors", c.sim.num_anchors);
    read(s, "dim", c.sim.dim);
    read(s, "sigma_a", c.sim.sigma_a);
    read(s, "sigma_d", c.sim.sigma_d);
    read(s, "dt", c.sim.dt);
    read(s, "position_range", c.sim.position_range);
    read(s, "velocity_range", c.sim.velocity_range);
    std::string name;
    read(s, "schedule", name);
    if (!name.empty()) c.sim.schedule = schedule_from_string(name);
    name.clear();
    read(s, "placement", name);
    if (!name.empty()) c.sim.placement = placement_from_string(name);
    read(s, "colinear_eps", c.sim.colinear_eps);
  }

  if (root.contains("noise")) {
    const json& s = root["noise"];
    reject_unknown(s, "noise", {"policy", "sigma_d", "sigma_squared"});
    std::string name;
    read(s, "policy", name);
    if (!name.empty()) c.noise.policy = policy_from_string(name);
    if (s.contains("sigma_d") && !s["sigma_d"].is_null()) {
      read(s, "sigma_d", c.noise.sigma_d);
      c.noise_sigma_d_from_sim = false;
    }
    if (s.contains("sigma_squared") && !(s["sigma_squared"].is_string() && s["sigma_squared"] == "auto")) {
      read(s, "sigma_squared", c.noise.sigma_squared);
      c.noise.sigma_squared_auto = false;
    }
  }

  if (root.contains("prior")) {
    const json& s = root["prior"];
    reject_unknown(s, "prior", {"kind", "sigma_a"});
    std::string name;
    read(s, "kind", name);
    if (!name.empty()) c.prior_kind = prior_kind_from_string(name);
    read(s, "sigma_a", c.prior_sigma_a);
  }

  if (root.contains("solve")) {
    const json& s = root["solve"];
    reject_unknown(s, "solve",
                   {"max_iterations", "step_tolerance", "n_restarts", "init", "init_box_scale", "init_per_time",
                    "gap_tolerance", "gap_floor"});
    read(s, "max_iterations", c.solve.max_iterations);
    read(s, "step_tolerance", c.solve.step_tolerance);
    read(s, "n_restarts", c.solve.n_restarts);
    std::string name;
    read(s, "init", name);
    if (!name.empty()) c.solve.init = init_strategy_from_string(name);
    read(s, "init_box_scale", c.solve.init_box_scale);
    read(s, "init_per_time", c.solve.init_per_time);
    read(s, "gap_tolerance", c.solve.gap_tolerance);
    read(s, "gap_floor", c.solve.gap_floor);
  }

  if (root.contains("cert")) {
    const json& s = root["cert"];
    reject_unknown(s, "cert", {"beta", "stationarity_threshold", "pivot_tolerance"});
    read(s, "beta", c.cert.beta);
    read(s, "stationarity_threshold", c.cert.stationarity_threshold);
    read(s, "pivot_tolerance", c.cert.pivot_tolerance);
  }

  if (root.contains("bench")) {
    const json& s = root["bench"];
    reject_unknown(s, "bench", {"grid", "repeats", "gn_iterations"});
    read(s, "grid", c.bench.grid);
    read(s, "repeats", c.bench.repeats);
    read(s, "gn_iterations", c.bench.gn_iterations);
  }

  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    reject_unknown(s, "sweep", {"setups", "noise_grid", "cluster_tolerance"});
    read(s, "setups", c.sweep.setups);
    read(s, "noise_grid", c.sweep.noise_grid);
    read(s, "cluster_tolerance", c.sweep.cluster_tolerance);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["sim"] = {{"num_times", c.sim.num_times},
                 {"num_anchors", c.sim.num_anchors},
                 {"dim", c.sim.dim},
                 {"sigma_a", c.sim.sigma_a},
                 {"sigma_d", c.sim.sigma_d},
                 {"dt", c.sim.dt},
                 {"position_range", c.sim.position_range},
                 {"velocity_range", c.sim.velocity_range},
                 {"schedule", to_string(c.sim.schedule)},
                 {"placement", to_string(c.sim.placement)},
                 {"colinear_eps", c.sim.colinear_eps}};
  root["noise"] = {{"policy", policy_name(c.noise.policy)},
                   {"sigma_d", c.noise.sigma_d},
                   {"sigma_squared", c.noise.sigma_squared_auto ? json("auto") : json(c.noise.sigma_squared)}};
  root["prior"] = {{"kind", to_string(c.prior_kind)}, {"sigma_a", c.prior_sigma_a}};
  root["solve"] = {{"max_iterations", c.solve.max_iterations},
                   {"step_tolerance", c.solve.step_tolerance},
                   {"n_restarts", c.solve.n_restarts},
                   {"init", to_string(c.solve.init)},
                   {"init_box_scale", c.solve.init_box_scale},
                   {"init_per_time", c.solve.init_per_time},
                   {"gap_tolerance", c.solve.gap_tolerance},
                   {"gap_floor", c.solve.gap_floor}};
  root["cert"] = {{"beta", c.cert.beta},
                  {"stationarity_threshold", c.cert.stationarity_threshold},
                  {"pivot_tolerance", c.cert.pivot_tolerance}};
  root["bench"] = {{"grid", c.bench.grid}, {"repeats", c.bench.repeats}, {"gn_iterations", c.bench.gn_iterations}};
  root["sweep"] = {{"setups", c.sweep.setups},
                   {"noise_grid", c.sweep.noise_grid},
                   {"cluster_tolerance", c.sweep.cluster_tolerance}};
  return root.dump(2);
}

}  // namespace rangecert
