#include "dcftp/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dcftp/batch.hpp"
#include "dcftp/config.hpp"
#include "dcftp/error.hpp"
#include "dcftp/oracle_stats.hpp"

namespace dcftp {

namespace {

using ojson = nlohmann::ordered_json;

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

Level log_level() {
  const char* v = std::getenv("DCFTP_LOG_LEVEL");
  if (!v) return Level::Info;
  std::string s(v);
  if (s == "quiet" || s == "error") return Level::Quiet;
  if (s == "debug") return Level::Debug;
  return Level::Info;
}

// Opens `path` for writing, or returns `fallback` for "-".
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
    os_ = file_.get();
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

std::string vec_str(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << std::setprecision(6) << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ']';
  return os.str();
}

int cmd_validate(const std::string& path, std::ostream& out) {
  RunConfig cfg = load_config(path);
  const auto& spec = cfg.network;
  auto flow = solve_flow(spec);
  auto st = check_stability(spec, flow);
  out << "stations: " << spec.d << '\n';
  for (int i = 0; i < spec.d; ++i)
    out << "  " << i + 1 << ": arrival " << (spec.arrivals[i] ? spec.arrivals[i]->to_string() : "none") << ", service "
        << spec.services[i].to_string() << '\n';
  out << "phi: " << vec_str(flow.phi) << '\n';
  out << "rho: " << vec_str(flow.rho) << '\n';
  if (!st.stable) {
    out << "stable: no\n";
    for (int i : st.violating)
      out << "  station " << i + 1 << ": phi = " << flow.phi(i) << " >= mu = " << spec.service_rates()(i)
          << '\n';
    return 1;
  }
  out << "stable: yes\n";
  auto ctx = SamplerContext::make(spec, cfg.sampler);
  const auto& aux = ctx->qm->aux;
  out << "delta: " << aux.delta << '\n';
  out << "deltabar: " << aux.deltabar << '\n';
  out << "a: " << vec_str(aux.a) << '\n';
  out << "milestone_m: " << ctx->qm->tilt.m << '\n';
  out << "ct_initial: " << ctx->ct_initial << '\n';
  return 0;
}

ojson sample_json(const SampleResult& r) {
  ojson j;
  j["y"] = r.state.y;
  j["residual_service"] = r.state.residual_service;
  ojson ra = ojson::array();
  for (const auto& v : r.state.residual_arrival) ra.push_back(v ? ojson(*v) : ojson(nullptr));
  j["residual_arrival"] = ra;
  j["tau"] = r.record.tau;
  j["rounds"] = r.record.rounds;
  j["draws"] = r.record.draws;
  return j;
}

struct SampleArgs {
  std::string config, out = "-", trace, dump_walk, dump_queue;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

int cmd_sample(const SampleArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.config);
  std::size_t n = a.n.value_or(cfg.batch.n);
  if (!a.seed && !cfg.batch.seed_given)
    throw Error(ErrorCode::InvalidArgument, "a seed is required: pass --seed or set [batch] seed");
  std::uint64_t seed = a.seed.value_or(cfg.batch.seed);
  int workers = a.workers.value_or(cfg.batch.workers);
  auto ctx = SamplerContext::make(cfg.network, cfg.sampler);
  const Level lv = log_level();

  if (!a.trace.empty() || !a.dump_walk.empty() || !a.dump_queue.empty()) {
    // diagnostics of sample 0 only
    PerfectSampler ps(ctx, sample_seed(seed, 0));
    std::ofstream tr;
    if (!a.trace.empty()) {
      tr.open(a.trace);
      tr << "t,station,kind";
      for (int i = 0; i < cfg.network.d; ++i) tr << ",y" << i + 1;
      tr << '\n';
      ps.trace = &tr;
    }
    if (ps.run() == PerfectSampler::Status::BudgetExceeded)
      throw Error(ErrorCode::ResourceBudgetExceeded, "sample 0 did not coalesce within the caps");
    if (!a.dump_walk.empty()) {
      std::ofstream w(a.dump_walk);
      ps.queue().walk().dump_csv(w);
    }
    if (!a.dump_queue.empty()) {
      std::ofstream q(a.dump_queue);
      auto path = ps.queue().compute_y_prime(ps.horizon());
      ps.queue().dump_csv(q, path);
    }
  }

  std::size_t done = 0;
  auto progress = [&](std::size_t) {
    ++done;
    if (lv >= Level::Info && (done % 1000 == 0 || done == n)) err << "sampled " << done << "/" << n << '\n';
  };
  auto results = run_batch(ctx, n, seed, workers, progress);
  Output o(a.out, out);
  for (const auto& r : results) *o << sample_json(r).dump() << '\n';
  return 0;
}

std::vector<std::vector<long>> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::vector<std::vector<long>> ys;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ys.push_back(j.at("y").get<std::vector<long>>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
  return ys;
}

int cmd_analyze(const std::string& in, const std::string& config, const std::string& out_path,
                const std::string& hist, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(config);
  auto ys = read_jsonl(in);
  for (const auto& y : ys)
    if (static_cast<int>(y.size()) != cfg.network.d)
      throw Error(ErrorCode::InvalidArgument, "sample dimension does not match the config");
  std::optional<ProductFormOracle> oracle;
  try {
    oracle.emplace(cfg.network);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotMarkovian) throw;
    if (log_level() >= Level::Info) err << "no closed-form oracle for this network; reporting moments only\n";
  }
  SampleSummary s = summarize(ys, oracle ? &*oracle : nullptr);
  Output o(out_path, out);
  write_summary_csv(*o, s);
  if (!hist.empty()) {
    std::ofstream h(hist);
    if (!h) throw Error(ErrorCode::InvalidArgument, "cannot write " + hist);
    write_histogram_csv(h, ys);
  }
  return 0;
}

int cmd_table1(std::size_t n, std::uint64_t seed, int workers, const std::string& out_path, std::ostream& out) {
  auto rep = reproduce_table1(n, seed, workers);
  Output o(out_path, out);
  print_table1(*o, rep);
  return 0;
}

int cmd_baseline(const std::string& config, double burn_in, double horizon, double spacing,
                 std::optional<std::uint64_t> seed, const std::string& out_path, const std::string& samples_path,
                 std::ostream& out) {
  RunConfig cfg = load_config(config);
  if (!seed && !cfg.batch.seed_given)
    throw Error(ErrorCode::InvalidArgument, "a seed is required: pass --seed or set [batch] seed");
  auto ys = naive_steady_state_sim(cfg.network, burn_in, horizon, seed.value_or(cfg.batch.seed), spacing);
  std::optional<ProductFormOracle> oracle;
  if (cfg.network.is_markovian()) oracle.emplace(cfg.network);
  SampleSummary s = summarize(ys, oracle ? &*oracle : nullptr);
  Output o(out_path, out);
  *o << "# biased baseline: forward simulation from empty, burn-in " << burn_in << ", correlated snapshots every "
     << spacing << '\n';
  write_summary_csv(*o, s);
  if (!samples_path.empty()) {
    std::ofstream f(samples_path);
    for (const auto& y : ys) f << ojson{{"y", y}}.dump() << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perfect sampling of generalized Jackson network steady states", "dcftp"};
  app.require_subcommand(1);

  std::string v_config;
  auto* validate = app.add_subcommand("validate", "Check stability and print the flow and auxiliary rates");
  validate->add_option("--config", v_config, "Network config file")->required()->check(CLI::ExistingFile);

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Draw exact samples of the stationary state");
  sample->add_option("--config", sa.config, "Network config file")->required()->check(CLI::ExistingFile);
  sample->add_option("--n", sa.n, "Number of samples");
  sample->add_option("--seed", sa.seed, "Master seed");
  sample->add_option("--workers", sa.workers, "Worker threads (0: all cores)")->check(CLI::Range(0, 1024));
  sample->add_option("--out", sa.out, "Output JSON lines ('-' for stdout)");
  sample->add_option("--trace", sa.trace, "Per-event trace CSV of the dominating system for sample 0");
  sample->add_option("--dump-walk", sa.dump_walk, "Walk diagnostics CSV for sample 0");
  sample->add_option("--dump-queue", sa.dump_queue, "Stationary queue diagnostics CSV for sample 0");

  std::string a_in, a_config, a_out = "-", a_hist;
  auto* analyze = app.add_subcommand("analyze", "Summarize samples and test them against the oracle");
  analyze->add_option("--in", a_in, "Samples (JSON lines)")->required()->check(CLI::ExistingFile);
  analyze->add_option("--config", a_config, "Network config file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", a_out, "Summary CSV ('-' for stdout)");
  analyze->add_option("--hist", a_hist, "Joint histogram CSV");

  std::size_t t_n = 10000;
  std::uint64_t t_seed = 1;
  int t_workers = 1;
  std::string t_out = "-";
  auto* table1 = app.add_subcommand("table1", "Reproduce the five-column two-station table");
  table1->add_option("--n", t_n, "Samples per column");
  table1->add_option("--seed", t_seed, "Master seed");
  table1->add_option("--workers", t_workers, "Worker threads (0: all cores)")->check(CLI::Range(0, 1024));
  table1->add_option("--out", t_out, "Report file ('-' for stdout)");

  std::string b_config, b_out = "-", b_samples;
  double b_burn = 1000, b_horizon = 100000, b_spacing = 1;
  std::optional<std::uint64_t> b_seed;
  auto* baseline = app.add_subcommand("baseline", "Biased forward simulation for cross-checking");
  baseline->add_option("--config", b_config, "Network config file")->required()->check(CLI::ExistingFile);
  baseline->add_option("--burn-in", b_burn, "Discarded initial period")->check(CLI::NonNegativeNumber);
  baseline->add_option("--horizon", b_horizon, "Observed period")->check(CLI::PositiveNumber);
  baseline->add_option("--spacing", b_spacing, "Time between snapshots")->check(CLI::PositiveNumber);
  baseline->add_option("--seed", b_seed, "Seed");
  baseline->add_option("--out", b_out, "Summary CSV ('-' for stdout)");
  baseline->add_option("--samples", b_samples, "Snapshots as JSON lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*validate) return cmd_validate(v_config, out);
    if (*sample) return cmd_sample(sa, out, err);
    if (*analyze) return cmd_analyze(a_in, a_config, a_out, a_hist, out, err);
    if (*table1) return cmd_table1(t_n, t_seed, t_workers, t_out, out);
    if (*baseline) return cmd_baseline(b_config, b_burn, b_horizon, b_spacing, b_seed, b_out, b_samples, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace dcftp
