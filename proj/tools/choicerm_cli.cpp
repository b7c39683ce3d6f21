// choicerm: experiment driver for constrained MNL pricing.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "choicerm/choicerm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace choicerm;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string seconds2(double s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << s;
  return out.str();
}

std::string num(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

/// Where an instance comes from: a file, or generation dimensions and a seed.
struct InstanceSource {
  std::string path;
  std::size_t n = 3, m = 2, T = 200, cap = 60, price_rows = 3;
  std::uint64_t seed = 0;

  void bind(CLI::App* cmd) {
    cmd->add_option("--instance", path, "instance JSON file (otherwise generated)");
    cmd->add_option("--n", n, "products")->capture_default_str();
    cmd->add_option("--m", m, "resources")->capture_default_str();
    cmd->add_option("--T", T, "periods")->capture_default_str();
    cmd->add_option("--cap", cap, "capacity per resource")->capture_default_str();
    cmd->add_option("--seed", seed, "generator seed")->capture_default_str();
    cmd->add_option("--price-rows", price_rows, "price constraint rows")->capture_default_str();
  }
  [[nodiscard]] GeneratorSpec spec() const { return {n, m, T, cap, seed, price_rows}; }
  [[nodiscard]] Instance load_or_generate() const { return path.empty() ? generate(spec()) : load(path); }
  [[nodiscard]] json describe() const {
    if (!path.empty()) return {{"path", path}};
    return {{"n", n}, {"m", m}, {"T", T}, {"cap", cap}, {"seed", seed}, {"price_rows", price_rows}};
  }
};

struct Common {
  std::size_t K = 15;
  double xi = 1e-3;
  std::size_t runs = 20;
  std::string backend;
  std::string out = "out";

  void bind(CLI::App* cmd, bool with_runs = false) {
    cmd->add_option("--K", K, "PWLA segments")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--xi", xi, "bisection tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    if (with_runs) cmd->add_option("--runs", runs, "simulation runs")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--backend", backend, "solver backend (default: $CHOICERM_BACKEND or bundled)");
    cmd->add_option("--out", out, "output directory")->capture_default_str();
  }
  [[nodiscard]] SolverConfig solver() const {
    SolverConfig cfg;
    cfg.K = K;
    cfg.xi = xi;
    cfg.backend = backend;
    return cfg;
  }
  [[nodiscard]] json describe() const {
    return {{"K", K}, {"xi", xi}, {"runs", runs}, {"backend", backend.empty() ? lp::backend().name : backend}};
  }
};

/// Serialized writes of every output file plus one manifest per command.
class Output {
 public:
  Output(std::string dir, std::string command, json config)
      : dir_(std::move(dir)), manifest_{{"command", std::move(command)}, {"config", std::move(config)}} {
    fs::create_directories(dir_);
    manifest_["outputs"] = json::array();
  }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  void write(const std::string& name, const std::string& text) {
    detail::write_file(path(name), text);
    manifest_["outputs"].push_back(name);
  }
  json& manifest() { return manifest_; }
  void finish(const std::string& stem) {
    manifest_["manifest"] = stem + ".manifest.json";
    detail::write_file(path(stem + ".manifest.json"), manifest_.dump(2) + "\n");
    std::cout << manifest_["outputs"].dump() << "\n";
  }

 private:
  std::string dir_;
  json manifest_;
};

std::string csv_join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t k = 0; k < cells.size(); ++k) s += (k ? "," : "") + cells[k];
  return s + "\n";
}

std::string prices_cell(const std::vector<double>& r) {
  std::string s;
  for (std::size_t j = 0; j < r.size(); ++j) s += (j ? " " : "") + (is_null_price(r[j]) ? std::string("null") : num(r[j]));
  return s;
}

struct StaticRow {
  std::string method;
  PricingSolution sol;
};

std::vector<StaticRow> run_static(const Instance& inst, const std::vector<std::string>& methods, const Common& c,
                                  double scale, std::size_t starts, std::uint64_t seed) {
  std::vector<StaticRow> rows;
  for (const auto& method : methods) {
    if (method == "sp-dmip") {
      auto cfg = c.solver();
      rows.push_back({method, solve_pricing(sp_problem(inst, scale), cfg)});
    } else if (method == "sp-trans") {
      TransformOptions opt;
      opt.backend = c.backend;
      rows.push_back({method, solve_sp_trans(inst, scale, opt)});
    } else if (method == "sp-localsearch") {
      rows.push_back({method, solve_sp_localsearch(inst, starts, seed, scale)});
    } else {
      throw UsageError("unknown static method '" + method + "' (sp-dmip, sp-trans, sp-localsearch)");
    }
  }
  return rows;
}

double demand_scale(const Instance& inst, const std::string& model) {
  if (model == "star") return inst.lambda * static_cast<double>(inst.T);
  if (model == "single") return 1.0;
  throw UsageError("unknown model '" + model + "' (single, star)");
}

ValueFunctionSet run_dynamic(const Instance& inst, const std::string& method, const Common& c,
                             const std::vector<double>& pi) {
  if (method == "dp-dmip") return solve_dpd(inst, c.K, c.xi, pi, c.solver());
  if (method == "dp-trans") {
    TransformOptions opt;
    opt.backend = c.backend;
    return solve_dp_trans(inst, c.K, c.xi, pi, {}, opt);
  }
  throw UsageError("unknown dynamic method '" + method + "' (dp-dmip, dp-trans)");
}

std::vector<double> multipliers(const Instance& inst, const Common& c) {
  const auto star = solve_pricing(sp_problem(inst, inst.lambda * static_cast<double>(inst.T)), c.solver());
  return extract_duals(inst, star, c.solver());
}

/// Keeps a policy object alive behind a std::function.
template <class P>
Policy share_policy(std::shared_ptr<P> p) {
  return [p](std::size_t t, const std::vector<std::size_t>& x) { return p->prices(t, x); };
}

Policy dynamic_policy(const Instance& inst, const ValueFunctionSet& vfs, const Common& c) {
  if (vfs.method == "dp-trans") {
    TransformOptions opt;
    opt.backend = c.backend;
    return share_policy(std::make_shared<DecompositionPolicy>(trans_policy(inst, vfs, opt)));
  }
  return share_policy(std::make_shared<DmipPolicy>(inst, vfs, c.solver()));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

/// "m,n,T,cap" size classes separated by ';'.
std::vector<GeneratorSpec> parse_sizes(const std::string& text) {
  std::vector<GeneratorSpec> out;
  for (const auto& cls : split(text, ';')) {
    const auto parts = split(cls, ',');
    if (parts.size() != 4) throw UsageError("size class '" + cls + "' must be m,n,T,cap");
    GeneratorSpec g;
    try {
      g.m = std::stoul(parts[0]);
      g.n = std::stoul(parts[1]);
      g.T = std::stoul(parts[2]);
      g.capacity = std::stoul(parts[3]);
    } catch (const std::exception&) {
      throw UsageError("size class '" + cls + "' must hold four positive integers");
    }
    out.push_back(g);
  }
  return out;
}

std::string size_label(const GeneratorSpec& g) {
  return "(" + std::to_string(g.m) + "," + std::to_string(g.n) + "," + std::to_string(g.T) + ")";
}

int fail(const std::string& type, const std::string& message, int code) {
  json err{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained MNL pricing: static and dynamic solvers, baselines and simulation"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a random instance");
  InstanceSource gsrc;
  std::string gen_out = "instance.json";
  gsrc.bind(gen);
  gen->add_option("--output,-o", gen_out, "instance file")->capture_default_str();

  // solve-static
  auto* ss = app.add_subcommand("solve-static", "static pricing with SP-DMIP and baselines");
  InstanceSource ssrc;
  Common sc;
  std::string s_methods = "sp-dmip", s_model = "single";
  std::size_t starts = 10;
  std::uint64_t ls_seed = 0;
  ssrc.bind(ss);
  sc.bind(ss);
  ss->add_option("--methods", s_methods, "comma list of sp-dmip, sp-trans, sp-localsearch")->capture_default_str();
  ss->add_option("--model", s_model, "single (one arrival) or star (demand lambda T)")->capture_default_str();
  ss->add_option("--starts", starts, "local-search starts")->capture_default_str();
  ss->add_option("--search-seed", ls_seed, "local-search seed")->capture_default_str();

  // solve-dynamic
  auto* sd = app.add_subcommand("solve-dynamic", "dynamic programming decomposition");
  InstanceSource dsrc;
  Common dc;
  std::string d_method = "dp-dmip";
  std::vector<double> d_pi;
  dsrc.bind(sd);
  dc.bind(sd);
  sd->add_option("--method", d_method, "dp-dmip or dp-trans")->capture_default_str();
  sd->add_option("--pi", d_pi, "resource multipliers (default: duals of the deterministic model)")->delimiter(',');

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo evaluation under common random numbers");
  InstanceSource msrc;
  Common mc;
  std::string m_methods = "sp-dmip";
  std::vector<std::string> vf_files;
  std::uint64_t sim_seed = 0;
  msrc.bind(sim);
  mc.bind(sim, true);
  sim->add_option("--methods", m_methods,
                  "comma list of sp-dmip, sp-trans, sp-localsearch, dp-dmip, dp-trans")->capture_default_str();
  sim->add_option("--value-functions", vf_files, "serialized value function sets to simulate");
  sim->add_option("--sim-seed", sim_seed, "simulation seed")->capture_default_str();

  // sweep-k
  auto* sk = app.add_subcommand("sweep-k", "revenue gap and time against the number of segments");
  std::size_t k_n = 80, k_m = 16, k_T = 200, k_cap = 120, k_seeds = 5;
  std::uint64_t k_seed0 = 0;
  std::vector<std::size_t> k_list{2, 3, 5, 8, 10, 15, 20, 30, 50, 100};
  Common kc;
  kc.bind(sk);
  sk->add_option("--n", k_n)->capture_default_str();
  sk->add_option("--m", k_m)->capture_default_str();
  sk->add_option("--T", k_T)->capture_default_str();
  sk->add_option("--cap", k_cap)->capture_default_str();
  sk->add_option("--seeds", k_seeds, "instances (seeds seed0..seed0+seeds-1)")->capture_default_str();
  sk->add_option("--seed0", k_seed0)->capture_default_str();
  sk->add_option("--Ks", k_list, "segment counts; the largest is the reference")->delimiter(',')->capture_default_str();

  // report
  auto* rp = app.add_subcommand("report", "Table 1/2/3-shaped comparison CSVs");
  std::string r_sizes = "2,3,200,60;4,8,50,30";
  std::string r_tables = "1,2,3";
  std::size_t r_instances = 1, r_starts = 10;
  std::uint64_t r_seed0 = 0;
  Common rc;
  rc.bind(rp, true);
  rp->add_option("--sizes", r_sizes, "size classes m,n,T,cap separated by ';'")->capture_default_str();
  rp->add_option("--tables", r_tables, "tables to build")->capture_default_str();
  rp->add_option("--instances", r_instances, "instances per size class")->capture_default_str();
  rp->add_option("--seed0", r_seed0)->capture_default_str();
  rp->add_option("--starts", r_starts, "local-search starts")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (const char* env = std::getenv("CHOICERM_BACKEND"); env && *env) lp::select_backend(env);

    if (gen->parsed()) {
      const Instance inst = generate(gsrc.spec());
      const fs::path target(gen_out);
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      save(inst, gen_out);
      json manifest{{"command", "generate"}, {"config", gsrc.describe()}, {"outputs", {gen_out}},
                    {"instance_hash", instance_hash(inst)}};
      detail::write_file(gen_out + ".manifest.json", manifest.dump(2) + "\n");
      std::cout << json{gen_out}.dump() << "\n";
      return 0;
    }

    if (ss->parsed()) {
      const Instance inst = ssrc.load_or_generate();
      const double scale = demand_scale(inst, s_model);
      json cfg = sc.describe();
      cfg["instance"] = ssrc.describe();
      cfg["methods"] = s_methods;
      cfg["model"] = s_model;
      cfg["starts"] = starts;
      cfg["search_seed"] = ls_seed;
      Output out(sc.out, "solve-static", cfg);
      out.manifest()["instance_hash"] = instance_hash(inst);
      std::string csv = "method,revenue,approx_objective,feasible,max_resource_excess,feasibility_bound,gap_bound_per_arrival,time,prices\n";
      for (const auto& row : run_static(inst, split(s_methods, ','), sc, scale, starts, ls_seed)) {
        const auto& s = row.sol;
        csv += csv_join({row.method, num(s.exact_objective), num(s.approx_objective), s.feasible ? "1" : "0",
                         num(s.report.max_resource_excess), num(s.feasibility_bound), num(s.gap_bound),
                         seconds2(s.seconds), prices_cell(s.prices)});
      }
      out.write("static.csv", csv);
      out.finish("static");
      return 0;
    }

    if (sd->parsed()) {
      const Instance inst = dsrc.load_or_generate();
      json cfg = dc.describe();
      cfg["instance"] = dsrc.describe();
      cfg["method"] = d_method;
      Output out(dc.out, "solve-dynamic", cfg);
      const auto pi = d_pi.empty() ? multipliers(inst, dc) : d_pi;
      if (pi.size() != inst.m) throw UsageError("--pi needs one value per resource");
      const auto vfs = run_dynamic(inst, d_method, dc, pi);
      const auto inv = check_invariants(vfs);
      out.manifest()["instance_hash"] = instance_hash(inst);
      out.manifest()["pi"] = pi;
      out.write(d_method + ".vfs.json", to_json(vfs).dump() + "\n");
      std::string csv = "method,resource,objective,bound,fallback_stages,time\n";
      for (std::size_t i = 0; i < vfs.m; ++i)
        csv += csv_join({d_method, std::to_string(i), num(vfs.objective(i)), num(vfs.bound()),
                         std::to_string(vfs.fallback_stages), seconds2(vfs.seconds)});
      out.write("dynamic.csv", csv);
      out.manifest()["invariants"] = {{"boundary", inv.worst_boundary}, {"capacity", inv.worst_capacity},
                                      {"time", inv.worst_time}};
      out.finish("dynamic");
      return 0;
    }

    if (sim->parsed()) {
      const Instance inst = msrc.load_or_generate();
      json cfg = mc.describe();
      cfg["instance"] = msrc.describe();
      cfg["methods"] = m_methods;
      cfg["value_functions"] = vf_files;
      cfg["sim_seed"] = sim_seed;
      Output out(mc.out, "simulate", cfg);
      out.manifest()["instance_hash"] = instance_hash(inst);
      std::vector<std::pair<std::string, Policy>> policies;
      std::optional<std::vector<double>> pi;
      const double star = inst.lambda * static_cast<double>(inst.T);
      for (const auto& method : split(m_methods, ',')) {
        if (method.rfind("sp-", 0) == 0) {
          auto rows = run_static(inst, {method}, mc, star, 10, 0);
          if (rows[0].sol.prices.empty()) throw std::runtime_error(method + ": no static prices found");
          // infeasible static prices are still simulated; sales stop when capacity runs out
          out.manifest()["static_feasible"][method] = rows[0].sol.feasible;
          policies.emplace_back(method, fixed_price_policy(rows[0].sol.prices));
        } else {
          if (!pi) pi = multipliers(inst, mc);
          policies.emplace_back(method, dynamic_policy(inst, run_dynamic(inst, method, mc, *pi), mc));
        }
      }
      for (const auto& file : vf_files) {
        const auto vfs = load_value_functions(file);
        policies.emplace_back(vfs.method + ":" + fs::path(file).filename().string(), dynamic_policy(inst, vfs, mc));
      }
      const auto reps = evaluate_policies(inst, policies, mc.runs, sim_seed);
      out.write("simulation.csv", reports_csv(reps));
      std::string summary = "policy,mean,std,runs\n";
      for (const auto& r : reps)
        summary += csv_join({r.policy, num(r.mean), num(r.stddev), std::to_string(r.revenue.size())});
      out.write("simulation_summary.csv", summary);
      json seeds = json::object();
      for (const auto& r : reps) seeds[r.policy] = r.seeds;
      out.manifest()["run_streams"] = seeds;
      out.finish("simulation");
      return 0;
    }

    if (sk->parsed()) {
      if (k_list.empty()) throw UsageError("--Ks must not be empty");
      std::sort(k_list.begin(), k_list.end());
      const std::size_t ref = k_list.back();
      json cfg = kc.describe();
      cfg["dims"] = {{"n", k_n}, {"m", k_m}, {"T", k_T}, {"cap", k_cap}};
      cfg["seeds"] = k_seeds;
      cfg["seed0"] = k_seed0;
      cfg["Ks"] = k_list;
      Output out(kc.out, "sweep-k", cfg);
      std::string gap = "seed,K,revenue,reference,gap_pct\n", time = "seed,K,time\n";
      std::map<std::size_t, double> gap_sum, time_sum;
      for (std::size_t s = 0; s < k_seeds; ++s) {
        const Instance inst = generate({k_n, k_m, k_T, k_cap, k_seed0 + s});
        std::map<std::size_t, PricingSolution> sols;
        for (auto K : k_list) {
          auto cfgK = kc.solver();
          cfgK.K = K;
          sols[K] = solve_pricing(sp_problem(inst, inst.lambda * static_cast<double>(inst.T)), cfgK);
        }
        const double reference = sols[ref].exact_objective;
        for (auto K : k_list) {
          const double g = 100.0 * (reference - sols[K].exact_objective) / reference;
          gap += csv_join({std::to_string(k_seed0 + s), std::to_string(K), num(sols[K].exact_objective), num(reference), num(g)});
          time += csv_join({std::to_string(k_seed0 + s), std::to_string(K), seconds2(sols[K].seconds)});
          gap_sum[K] += g;
          time_sum[K] += sols[K].seconds;
        }
      }
      for (auto K : k_list) {
        gap += csv_join({"mean", std::to_string(K), "", "", num(gap_sum[K] / static_cast<double>(k_seeds))});
        time += csv_join({"mean", std::to_string(K), seconds2(time_sum[K] / static_cast<double>(k_seeds))});
      }
      out.write("gap_vs_k.csv", gap);
      out.write("time_vs_k.csv", time);
      out.finish("sweep_k");
      return 0;
    }

    if (rp->parsed()) {
      const auto sizes = parse_sizes(r_sizes);
      const auto tables = split(r_tables, ',');
      auto want = [&](const std::string& t) { return std::find(tables.begin(), tables.end(), t) != tables.end(); };
      json cfg = rc.describe();
      cfg["sizes"] = r_sizes;
      cfg["tables"] = r_tables;
      cfg["instances"] = r_instances;
      cfg["seed0"] = r_seed0;
      cfg["starts"] = r_starts;
      Output out(rc.out, "report", cfg);
      std::string t1 = "instance_set,instance,method,revenue,feasible,time\n";
      std::string t2 = "instance_set,instance,method,revenue,feasible,time\n";
      std::string t3 = "instance_set,instance,method,mean,std\n";
      for (const auto& g0 : sizes) {
        for (std::size_t k = 0; k < r_instances; ++k) {
          GeneratorSpec g = g0;
          g.seed = r_seed0 + k;
          const Instance inst = generate(g);
          const std::string set = size_label(g), id = std::to_string(g.seed);
          const double star = inst.lambda * static_cast<double>(inst.T);
          std::vector<StaticRow> stat;
          if (want("1") || want("2") || want("3"))
            stat = run_static(inst, {"sp-dmip", "sp-localsearch", "sp-trans"}, rc, star, r_starts, 0);
          if (want("1"))
            for (const auto& row : stat)
              t1 += csv_join({set, id, row.method, num(row.sol.exact_objective), row.sol.feasible ? "1" : "0",
                              seconds2(row.sol.seconds)});
          if (!want("2") && !want("3")) continue;
          const auto pi = extract_duals(inst, stat[0].sol, rc.solver());
          std::vector<std::pair<std::string, Policy>> policies;
          for (const std::string method : {"dp-dmip", "dp-trans"}) {
            const auto vfs = run_dynamic(inst, method, rc, pi);
            t2 += csv_join({set, id, method, num(vfs.bound()), "1", seconds2(vfs.seconds)});
            policies.emplace_back(method, dynamic_policy(inst, vfs, rc));
          }
          for (const auto& row : stat) {
            t2 += csv_join({set, id, row.method, num(row.sol.exact_objective), row.sol.feasible ? "1" : "0",
                            seconds2(row.sol.seconds)});
            if (!row.sol.prices.empty()) policies.emplace_back(row.method, fixed_price_policy(row.sol.prices));
          }
          if (want("3"))
            for (const auto& r : evaluate_policies(inst, policies, rc.runs, g.seed))
              t3 += csv_join({set, id, r.policy, num(r.mean), num(r.stddev)});
        }
      }
      if (want("1")) out.write("table1.csv", t1);
      if (want("2")) out.write("table2.csv", t2);
      if (want("3")) out.write("table3.csv", t3);
      out.finish("report");
      return 0;
    }
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const lp::UnknownBackend& e) {
    return fail("backend", e.what(), 2);
  } catch (const SchemaError& e) {
    return fail("schema", e.what(), 3);
  } catch (const InstanceError& e) {
    return fail("instance", e.what(), 3);
  } catch (const SimulationError& e) {
    return fail("simulation", e.what(), 4);
  } catch (const lp::SolverError& e) {
    return fail("solver", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
