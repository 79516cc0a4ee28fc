#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "memsat/baseline.hpp"
#include "memsat/bench.hpp"
#include "memsat/dmm.hpp"
#include "memsat/formula.hpp"
#include "memsat/gen.hpp"
#include "memsat/integrator.hpp"
#include "memsat/version.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace memsat;

namespace {

using Formula = std::shared_ptr<CnfFormula>;

Formula from_lists(std::uint32_t n, const std::vector<std::vector<int>>& clauses,
                   const std::vector<std::uint64_t>& weights) {
  if (!weights.empty() && weights.size() != clauses.size())
    throw std::invalid_argument("weights must match the number of clauses");
  std::vector<Clause> cs;
  cs.reserve(clauses.size());
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    Clause c;
    for (int d : clauses[i]) {
      if (d == 0) throw std::invalid_argument("literal 0 is not allowed");
      c.literals.push_back({static_cast<std::uint32_t>(std::abs(d) - 1), d < 0});
    }
    if (!weights.empty()) c.weight = weights[i];
    cs.push_back(std::move(c));
  }
  return std::make_shared<CnfFormula>(n, std::move(cs));
}

std::vector<std::vector<int>> to_lists(const CnfFormula& f) {
  std::vector<std::vector<int>> out;
  out.reserve(f.num_clauses());
  for (const auto& c : f.clauses()) {
    auto& row = out.emplace_back();
    for (const auto& l : c.literals) row.push_back(l.dimacs());
  }
  return out;
}

py::dict trace_dict(const SolverTrace& t) {
  std::vector<double> mt, wall;
  std::vector<std::uint64_t> steps, unsat;
  for (const auto& s : t.samples) {
    mt.push_back(s.machine_time);
    wall.push_back(s.wall_s);
    steps.push_back(s.steps);
    unsat.push_back(s.best_unsat_count);
  }
  return py::dict("machine_time"_a = mt, "wall_s"_a = wall, "steps"_a = steps, "unsat_count"_a = unsat,
                  "num_clauses"_a = t.num_clauses);
}

py::dict record_dict(const BenchRecord& r) {
  return py::dict("family"_a = to_string(r.family), "n"_a = r.n, "instance_seed"_a = r.instance_seed,
                  "repeat"_a = r.repeat, "solver"_a = to_string(r.solver), "timeout_k"_a = r.timeout_k,
                  "status"_a = r.status, "met"_a = r.met, "steps_to_threshold"_a = r.steps_to_threshold,
                  "wall_to_threshold"_a = r.wall_to_threshold, "best_unsat_count"_a = r.best_unsat_count,
                  "num_clauses"_a = r.num_clauses, "best_unsat_fraction"_a = r.best_unsat_fraction,
                  "bound_violations"_a = r.bound_violations);
}

}  // namespace

PYBIND11_MODULE(_memsat, m) {
  m.doc() = "Digital memcomputing Max-SAT solver, instance generators and baselines";
  m.attr("__version__") = kVersion;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<FormulaError>(m, "FormulaError", PyExc_ValueError);

  py::class_<CnfFormula, Formula>(m, "Formula")
      .def(py::init(&from_lists), "num_variables"_a, "clauses"_a, "weights"_a = std::vector<std::uint64_t>{})
      .def_property_readonly("num_variables", &CnfFormula::num_variables)
      .def_property_readonly("num_clauses", &CnfFormula::num_clauses)
      .def_property_readonly("num_literals", &CnfFormula::num_literals)
      .def_property_readonly("density", &CnfFormula::density)
      .def_property_readonly("weighted", &CnfFormula::is_weighted)
      .def("clauses", &to_lists)
      .def("count_unsat",
           [](const CnfFormula& f, const Assignment& a) { return count_unsat(f, a).count; }, "assignment"_a)
      .def("unsat_weight",
           [](const CnfFormula& f, const Assignment& a) { return count_unsat(f, a).weight; }, "assignment"_a)
      .def("to_dimacs", [](const CnfFormula& f) { return write_dimacs(f); })
      .def("__repr__", [](const CnfFormula& f) {
        std::ostringstream s;
        s << "<Formula n=" << f.num_variables() << " m=" << f.num_clauses() << ">";
        return s.str();
      });

  m.def("parse_dimacs", [](const std::string& text) { return std::make_shared<CnfFormula>(parse_dimacs(text)); },
        "text"_a);
  m.def("read_dimacs", [](const std::string& path) { return std::make_shared<CnfFormula>(read_dimacs_file(path)); },
        "path"_a);

  m.def(
      "generate",
      [](const std::string& family, std::uint32_t n, double density, std::uint64_t seed) {
        return std::make_shared<CnfFormula>(generate_cnf({family_from_string(family), n, density, seed}));
      },
      "family"_a, "n"_a, "density"_a, "seed"_a = 0, "Generate a 3-SAT instance (random, hyper, delta or xorsat).");
  m.def(
      "xor_satisfiable",
      [](const std::string& family, std::uint32_t n, double density, std::uint64_t seed) -> py::object {
        const auto sys = generate_xor({family_from_string(family), n, density, seed});
        if (!sys) return py::none();
        return py::bool_(gf2_solve(*sys).sat);
      },
      "family"_a, "n"_a, "density"_a, "seed"_a = 0);
  m.def("brute_force_optimum", [](const CnfFormula& f) { return brute_force_optimum(f).min_unsat_weight; },
        "formula"_a);

  py::class_<DmmParams>(m, "DmmParams")
      .def(py::init<>())
      .def_readwrite("alpha", &DmmParams::alpha)
      .def_readwrite("beta", &DmmParams::beta)
      .def_readwrite("gamma", &DmmParams::gamma)
      .def_readwrite("delta", &DmmParams::delta)
      .def_readwrite("epsilon", &DmmParams::epsilon)
      .def_readwrite("zeta", &DmmParams::zeta)
      .def_readwrite("xl_max", &DmmParams::xl_max)
      .def("to_dict", &DmmParams::to_kv);

  m.def(
      "solve",
      [](const Formula& f, double threshold, std::uint64_t max_steps, double max_wall_s, std::uint64_t seed,
         const DmmParams& params, double max_dv) {
        IntegratorConfig cfg;
        cfg.stop.threshold = threshold;
        cfg.stop.max_steps = max_steps;
        cfg.stop.max_wall_s = max_wall_s;
        if (max_dv > 0) cfg.max_dv = max_dv;
        SolveResult r;
        {
          py::gil_scoped_release release;
          r = solve(f, params, cfg, seed);
        }
        return py::dict("assignment"_a = r.best, "unsat_count"_a = r.best_unsat.count,
                        "unsat_weight"_a = r.best_unsat.weight, "status"_a = to_string(r.status), "steps"_a = r.steps,
                        "machine_time"_a = r.machine_time, "wall_s"_a = r.wall_s,
                        "bound_violations"_a = r.bound_violations, "trace"_a = trace_dict(r.trace));
      },
      "formula"_a, "threshold"_a = 0.0, "max_steps"_a = 100'000, "max_wall_s"_a = 60.0, "seed"_a = 0,
      "params"_a = DmmParams{}, "max_dv"_a = 0.0, "Integrate the memcomputing dynamics on a formula.");

  m.def(
      "walksat",
      [](const Formula& f, double threshold, std::uint64_t max_flips, double noise, bool cc, std::uint64_t seed) {
        LsConfig cfg;
        cfg.threshold = threshold;
        cfg.max_flips = max_flips;
        cfg.noise = noise;
        cfg.cc_enabled = cc;
        cfg.seed = seed;
        LsResult r;
        {
          py::gil_scoped_release release;
          r = walksat(f, cfg);
        }
        return py::dict("assignment"_a = r.best, "unsat_count"_a = r.best_unsat.count,
                        "unsat_weight"_a = r.best_unsat.weight, "status"_a = to_string(r.status), "flips"_a = r.flips,
                        "wall_s"_a = r.wall_s, "trace"_a = trace_dict(r.trace));
      },
      "formula"_a, "threshold"_a = 0.0, "max_flips"_a = 1'000'000, "noise"_a = 0.5, "cc"_a = false, "seed"_a = 0);

  m.def(
      "run_experiment",
      [](const KeyValues& kv, const std::string& out_dir) {
        const Experiment e = Experiment::from_kv(kv);
        RunOutput out;
        {
          py::gil_scoped_release release;
          out = run_experiment(e, out_dir);
        }
        py::list recs;
        for (const auto& r : out.records) recs.append(record_dict(r));
        return recs;
      },
      "config"_a, "out_dir"_a = std::string{},
      "Run a benchmark experiment described by key-value settings and return its records.");
}
