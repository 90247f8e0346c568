#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dcftp/batch.hpp"
#include "dcftp/config.hpp"
#include "dcftp/error.hpp"
#include "dcftp/oracle_stats.hpp"

namespace py = pybind11;
using namespace dcftp;

namespace {

std::vector<double> to_list(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

py::dict validate(const RunConfig& cfg) {
  const auto& spec = cfg.network;
  auto flow = solve_flow(spec);
  auto st = check_stability(spec, flow);
  py::dict out;
  out["phi"] = to_list(flow.phi);
  out["rho"] = to_list(flow.rho);
  out["stable"] = st.stable;
  std::vector<int> bad;
  for (int i : st.violating) bad.push_back(i + 1);
  out["violating"] = bad;
  if (st.stable) {
    auto aux = build_auxiliary(spec, flow, cfg.sampler.aux);
    out["delta"] = aux.delta;
    out["deltabar"] = aux.deltabar;
    out["a"] = to_list(aux.a);
    out["mu0"] = to_list(aux.mu0);
  }
  return out;
}

py::dict sample(const RunConfig& cfg, std::optional<std::size_t> n, std::optional<std::uint64_t> seed,
                std::optional<int> workers) {
  if (!seed && !cfg.batch.seed_given)
    throw Error(ErrorCode::InvalidArgument, "a seed is required: pass seed= or set [batch] seed");
  std::size_t count = n.value_or(cfg.batch.n);
  auto ctx = SamplerContext::make(cfg.network, cfg.sampler);
  std::vector<SampleResult> rs;
  {
    py::gil_scoped_release unlock;
    rs = run_batch(ctx, count, seed.value_or(cfg.batch.seed), workers.value_or(cfg.batch.workers));
  }
  const auto d = static_cast<py::ssize_t>(cfg.network.d);
  py::array_t<long> y({static_cast<py::ssize_t>(count), d});
  py::array_t<double> tau(static_cast<py::ssize_t>(count));
  py::array_t<long> rounds(static_cast<py::ssize_t>(count));
  auto yy = y.mutable_unchecked<2>();
  auto tt = tau.mutable_unchecked<1>();
  auto rr = rounds.mutable_unchecked<1>();
  for (std::size_t k = 0; k < count; ++k) {
    for (py::ssize_t i = 0; i < d; ++i) yy(k, i) = rs[k].state.y[i];
    tt(k) = rs[k].record.tau;
    rr(k) = static_cast<long>(rs[k].record.rounds);
  }
  py::dict out;
  out["y"] = y;
  out["tau"] = tau;
  out["rounds"] = rounds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact stationary samples of open single-server queueing networks";

  static py::exception<Error> exc(m, "DcftpError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(exc.ptr())(e.what());
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(exc.ptr(), inst.ptr());
    }
  });

  py::class_<RunConfig>(m, "Config")
      .def_property_readonly("d", [](const RunConfig& c) { return c.network.d; })
      .def_property_readonly("n", [](const RunConfig& c) { return c.batch.n; })
      .def_property_readonly("seed",
                             [](const RunConfig& c) -> std::optional<std::uint64_t> {
                               if (!c.batch.seed_given) return std::nullopt;
                               return c.batch.seed;
                             })
      .def_property_readonly("workers", [](const RunConfig& c) { return c.batch.workers; })
      .def_property_readonly("markovian", [](const RunConfig& c) { return c.network.is_markovian(); });

  m.def("parse_config", &parse_config, py::arg("text"), "Parse INI-style or JSON config text.");
  m.def("load_config", &load_config, py::arg("path"), "Read a config file.");
  m.def("validate", &validate, py::arg("config"), "Flow, utilizations, stability and auxiliary rates.");
  m.def("sample", &sample, py::arg("config"), py::arg("n") = py::none(), py::arg("seed") = py::none(),
        py::arg("workers") = py::none(),
        "Draw n exact stationary samples. Returns a dict with y (n x d), tau and rounds.");
  m.def(
      "oracle_means",
      [](const RunConfig& c) {
        ProductFormOracle o(c.network);
        std::vector<double> v;
        for (int i = 0; i < o.d(); ++i) v.push_back(oracle_mean(o, i));
        return v;
      },
      py::arg("config"), "Closed-form means of an exponential network.");
  m.def("table1_true_means", [] {
    std::vector<std::vector<double>> out;
    for (const auto& c : table1_columns()) {
      ProductFormOracle o(table1_spec(c));
      out.push_back({oracle_mean(o, 0), oracle_mean(o, 1)});
    }
    return out;
  });
}
