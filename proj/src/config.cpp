#include "dpvi/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace dpvi {

namespace {

Mechanism mechanism_from_string(const std::string& s) {
  if (s == "none") return Mechanism::None;
  if (s == "laplace") return Mechanism::Laplace;
  if (s == "gaussian") return Mechanism::Gaussian;
  throw ValidationError("config: unknown mechanism '" + s + "'");
}

std::string mechanism_to_string(Mechanism m) {
  switch (m) {
    case Mechanism::None:
      return "none";
    case Mechanism::Laplace:
      return "laplace";
    case Mechanism::Gaussian:
      return "gaussian";
  }
  return "none";
}

template <typename T>
T field(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  RunConfig cfg;
  cfg.mode = field<std::string>(j, "mode", cfg.mode);
  if (j.contains("problem")) {
    cfg.problem = j.at("problem");
    if (!cfg.problem.is_object()) throw ValidationError("config: 'problem' must be an object");
  } else {
    cfg.problem = nlohmann::json{{"name", "reference10"}};
  }

  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    cfg.schedule.alpha_bar = field<double>(s, "alpha_bar", cfg.schedule.alpha_bar);
    cfg.schedule.gamma_bar = field<double>(s, "gamma_bar", cfg.schedule.gamma_bar);
    cfg.schedule.c1 = field<double>(s, "c1", cfg.schedule.c1);
    cfg.schedule.c2 = field<double>(s, "c2", cfg.schedule.c2);
  }

  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    cfg.policy.mechanism = mechanism_from_string(field<std::string>(p, "mechanism", "none"));
    cfg.policy.epsilon = field<double>(p, "epsilon", 0.0);
    cfg.policy.delta = field<double>(p, "delta", 0.0);
    cfg.policy.B = field<double>(p, "B", 1.0);
    const int default_p = cfg.policy.mechanism == Mechanism::Gaussian ? 2 : 1;
    cfg.policy.p = field<int>(p, "p", default_p);
  }

  cfg.iterations = field<std::int64_t>(j, "iterations", cfg.iterations);
  cfg.seeds = field<std::vector<std::uint64_t>>(j, "seeds", cfg.seeds);
  cfg.record_every = field<std::int64_t>(j, "record_every", cfg.record_every);
  cfg.dense_until = field<std::int64_t>(j, "dense_until", cfg.dense_until);
  cfg.kkt_every = field<std::int64_t>(j, "kkt_every", cfg.kkt_every);
  cfg.fixed_point_tol = field<double>(j, "fixed_point_tol", cfg.fixed_point_tol);
  cfg.noisy_mu = field<bool>(j, "noisy_mu", cfg.noisy_mu);
  cfg.output_dir = field<std::string>(j, "output_dir", cfg.output_dir);
  cfg.reference_file = field<std::string>(j, "reference_file", cfg.reference_file);
  cfg.reference_tol = field<double>(j, "reference_tol", cfg.reference_tol);

  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    cfg.analysis_kmax = field<std::int64_t>(a, "kmax", cfg.analysis_kmax);
    cfg.checkpoints = field<std::vector<std::int64_t>>(a, "checkpoints", cfg.checkpoints);
    cfg.eps_ball = field<double>(a, "eps_ball", cfg.eps_ball);
    cfg.tradeoff_epsilons =
        field<std::vector<double>>(a, "tradeoff_epsilons", cfg.tradeoff_epsilons);
    cfg.lipschitz_samples = field<long>(a, "lipschitz_samples", cfg.lipschitz_samples);
    cfg.analysis_record_every =
        field<std::int64_t>(a, "record_every", cfg.analysis_record_every);
    cfg.run_dir = field<std::string>(a, "run_dir", cfg.run_dir);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: parse failure in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

// The hash identifies the experiment, so the verb (mode) and the output
// destination stay out of it: a run and a simulation of the same
// configuration must produce traces with the same hash.
std::string canonical_dump(const RunConfig& cfg) {
  nlohmann::json j;
  j["problem"] = cfg.problem;
  j["schedule"] = {{"alpha_bar", cfg.schedule.alpha_bar},
                   {"gamma_bar", cfg.schedule.gamma_bar},
                   {"c1", cfg.schedule.c1},
                   {"c2", cfg.schedule.c2}};
  j["policy"] = {{"mechanism", mechanism_to_string(cfg.policy.mechanism)},
                 {"epsilon", cfg.policy.epsilon},
                 {"delta", cfg.policy.delta},
                 {"B", cfg.policy.B},
                 {"p", cfg.policy.p}};
  j["iterations"] = cfg.iterations;
  j["seeds"] = cfg.seeds;
  j["record_every"] = cfg.record_every;
  j["dense_until"] = cfg.dense_until;
  j["kkt_every"] = cfg.kkt_every;
  j["fixed_point_tol"] = cfg.fixed_point_tol;
  j["noisy_mu"] = cfg.noisy_mu;
  j["reference_file"] = cfg.reference_file;
  j["reference_tol"] = cfg.reference_tol;
  j["analysis"] = {{"kmax", cfg.analysis_kmax},
                   {"checkpoints", cfg.checkpoints},
                   {"eps_ball", cfg.eps_ball},
                   {"tradeoff_epsilons", cfg.tradeoff_epsilons},
                   {"lipschitz_samples", cfg.lipschitz_samples},
                   {"record_every", cfg.analysis_record_every},
                   {"run_dir", cfg.run_dir}};
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
  const std::string bytes = canonical_dump(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

ProblemSpec build_scalar_problem() {
  ProblemSpec spec;
  spec.objectives.push_back(make_quadratic_distance_objective(1, {0.0}));
  spec.boxes.push_back(BoxSet{{-10.0}, {10.0}});
  ConstraintRow row;
  row.lin = {LinTerm{1, {0}, {-1.0}}};
  row.offset = 1.0;
  spec.constraint = make_sum_of_squares_constraints({row}, {1});
  spec.constraint.lipschitz_g = {{1, 1.0}, {2, 1.0}};
  spec.constraint.lipschitz_blocks = {{{1, 1}, 0.0}, {{1, 2}, 0.0}};
  spec.slater_point = {5.0};
  spec.validate();
  return spec;
}

namespace {

Vec json_vec(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError("config: '" + what + "' must be an array");
  Vec v;
  for (const auto& e : j) {
    if (!e.is_number()) throw ValidationError("config: '" + what + "' must hold numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

std::vector<int> json_ivec(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError("config: '" + what + "' must be an array");
  std::vector<int> v;
  for (const auto& e : j) v.push_back(e.get<int>());
  return v;
}

ObjectiveTerm parse_objective_part(int agent_id, const nlohmann::json& part) {
  const std::string type = field<std::string>(part, "type", "");
  if (type == "linear")
    return make_linear_objective(agent_id, json_vec(part.at("coeff"), "coeff"),
                                 field<double>(part, "offset", 0.0));
  if (type == "quadratic_distance")
    return make_quadratic_distance_objective(agent_id, json_vec(part.at("target"), "target"),
                                             field<double>(part, "weight", 1.0));
  if (type == "fourth_power_distance")
    return make_fourth_power_distance_objective(agent_id, json_vec(part.at("target"), "target"),
                                                field<double>(part, "weight", 1.0));
  throw ValidationError("config: unknown objective type '" + type + "'");
}

ProblemSpec parse_composed_problem(const nlohmann::json& j, std::vector<std::string>* notes) {
  ProblemSpec spec;
  if (!j.contains("agents") || !j.at("agents").is_array() || j.at("agents").empty())
    throw ValidationError("config: composed problem needs a nonempty 'agents' array");

  std::vector<int> agent_dims;
  int agent_id = 0;
  for (const auto& a : j.at("agents")) {
    ++agent_id;
    if (!a.contains("box")) throw ValidationError("config: agent missing 'box'");
    BoxSet box{json_vec(a.at("box").at("lower"), "box.lower"),
               json_vec(a.at("box").at("upper"), "box.upper")};
    box.validate();

    if (!a.contains("objective")) throw ValidationError("config: agent missing 'objective'");
    const auto& obj = a.at("objective");
    ObjectiveTerm term;
    if (obj.is_array()) {
      std::vector<ObjectiveTerm> parts;
      for (const auto& part : obj) parts.push_back(parse_objective_part(agent_id, part));
      term = parts.size() == 1 ? std::move(parts.front())
                               : sum_objectives(agent_id, std::move(parts));
    } else {
      term = parse_objective_part(agent_id, obj);
    }
    if (term.dim != box.dim())
      throw ValidationError("config: agent objective/box dimension mismatch");
    spec.objectives.push_back(std::move(term));
    spec.boxes.push_back(std::move(box));
    agent_dims.push_back(spec.boxes.back().dim());
  }

  if (!j.contains("constraints") || !j.at("constraints").is_array() ||
      j.at("constraints").empty())
    throw ValidationError("config: composed problem needs a nonempty 'constraints' array");
  std::vector<ConstraintRow> rows;
  for (const auto& rj : j.at("constraints")) {
    ConstraintRow row;
    row.offset = field<double>(rj, "offset", 0.0);
    if (rj.contains("quad"))
      for (const auto& qj : rj.at("quad")) {
        QuadTerm q;
        q.agent_id = qj.at("agent").get<int>();
        q.coords = json_ivec(qj.at("coords"), "coords");
        q.center = qj.contains("center") ? json_vec(qj.at("center"), "center")
                                         : Vec(q.coords.size(), 0.0);
        q.weight = field<double>(qj, "weight", 1.0);
        row.quad.push_back(std::move(q));
      }
    if (rj.contains("lin"))
      for (const auto& lj : rj.at("lin")) {
        LinTerm l;
        l.agent_id = lj.at("agent").get<int>();
        l.coords = json_ivec(lj.at("coords"), "coords");
        l.coeff = json_vec(lj.at("coeff"), "coeff");
        row.lin.push_back(std::move(l));
      }
    rows.push_back(std::move(row));
  }
  spec.constraint = make_sum_of_squares_constraints(rows, agent_dims);

  if (j.contains("lipschitz_g"))
    for (const auto& [key, val] : j.at("lipschitz_g").items())
      spec.constraint.lipschitz_g[std::stoi(key)] = val.get<double>();
  if (j.contains("lipschitz_blocks"))
    for (const auto& bj : j.at("lipschitz_blocks"))
      spec.constraint.lipschitz_blocks[{bj.at("agent").get<int>(), bj.at("p").get<int>()}] =
          bj.at("value").get<double>();

  if (!j.contains("slater_point"))
    throw ValidationError("config: composed problem needs 'slater_point'");
  spec.slater_point = json_vec(j.at("slater_point"), "slater_point");

  spec.validate();
  if (notes) {
    std::ostringstream os;
    os << "composed problem with " << spec.num_agents() << " agents and "
       << spec.constraint.m << " constraints";
    notes->push_back(os.str());
  }
  return spec;
}

}  // namespace

ProblemSpec build_problem(const nlohmann::json& problem, std::vector<std::string>* notes) {
  if (!problem.is_object()) throw ValidationError("config: 'problem' must be an object");
  const std::string name = field<std::string>(problem, "name", "");
  if (name == "reference10") return build_reference_problem();
  if (name == "scalar") return build_scalar_problem();
  if (problem.contains("agents")) return parse_composed_problem(problem, notes);
  throw ValidationError("config: unknown problem '" + name +
                        "' (expected reference10, scalar, or a composition)");
}

}  // namespace dpvi
