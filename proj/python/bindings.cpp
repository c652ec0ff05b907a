#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rwre/config.hpp"
#include "rwre/error.hpp"
#include "rwre/fleet.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/runner.hpp"
#include "rwre/serialize.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"

namespace py = pybind11;
using namespace rwre;

namespace {

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& e : fleet::all()) out.push_back(e.name);
  return out;
}

py::tuple site_tuple(const Site& z, int d) {
  py::tuple t(d);
  for (int i = 0; i < d; ++i) t[i] = z.c[i];
  return t;
}

SlabStreamOptions stream_opts(std::int64_t horizon, std::int64_t margin, int workers) {
  SlabStreamOptions o;
  o.horizon = horizon;
  o.margin = margin;
  o.par.workers = workers;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random walk in random environment lab";
  static py::exception<LabError> lab_error(m, "LabError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const LabError& e) {
      py::object err = lab_error;
      py::object inst = err(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(lab_error.ptr(), inst.ptr());
    }
  });

  m.attr("CONFIG_SCHEMA") = kConfigSchema;
  m.def("presets", &preset_names, "Names of the built-in site laws.");
  m.def("law", [](const std::string& name) { return law_to_json(*fleet::by_name(name)).dump(); }, py::arg("name"),
        "Law of a preset as a JSON string.");
  m.def("subcommands", &pipeline_names);

  m.def(
      "run",
      [](const std::string& subcommand, const std::string& config_json, int workers) {
        const auto cfg = parse_config(nlohmann::json::parse(config_json));
        RunOutput out;
        {
          py::gil_scoped_release release;
          out = run_pipeline(subcommand, cfg, Parallelism{workers});
        }
        return out.report.dump();
      },
      py::arg("subcommand"), py::arg("config_json"), py::arg("workers") = 1,
      "Runs one pipeline and returns its report as a JSON string.");

  m.def(
      "velocity",
      [](const std::string& name, std::int64_t steps, std::size_t reps, std::uint64_t seed, std::size_t slab_count,
         std::int64_t horizon, std::int64_t margin, int workers) {
        VelocityOptions o;
        o.slab_count = slab_count;
        o.stream = stream_opts(horizon, margin, workers);
        VelocityReport r;
        {
          py::gil_scoped_release release;
          r = velocity_estimate(fleet::by_name(name), steps, reps, RngKey{seed}, o);
        }
        py::dict d;
        d["direct"] = r.direct;
        d["direct_radius"] = r.direct_radius;
        d["renewal"] = r.renewal;
        d["renewal_radius"] = r.renewal_radius;
        d["agree"] = r.agree;
        return d;
      },
      py::arg("preset"), py::arg("steps") = 10000, py::arg("reps") = 1000, py::arg("seed") = 1,
      py::arg("slab_count") = 10000, py::arg("horizon") = 10000, py::arg("margin") = 1000, py::arg("workers") = 1);

  m.def(
      "slab_summary",
      [](const std::string& name, std::size_t count, std::uint64_t seed, std::int64_t horizon, std::int64_t margin,
         int workers) {
        SlabStream s;
        {
          py::gil_scoped_release release;
          s = sample_slab_stream(fleet::by_name(name), count, RngKey{seed}, stream_opts(horizon, margin, workers));
        }
        std::vector<std::int64_t> widths, durations;
        std::size_t valid = 0;
        for (const auto& sl : s.slabs) {
          widths.push_back(sl.width);
          durations.push_back(sl.duration());
          valid += sl.valid() ? 1 : 0;
        }
        const auto iid = slab_iid_test(widths, durations);
        py::dict d;
        d["count"] = s.slabs.size();
        d["runs"] = s.runs;
        d["valid"] = valid;
        d["widths"] = widths;
        d["durations"] = durations;
        d["velocity"] = renewal_velocity(s).first;
        d["lag1_width"] = iid.lag1_width;
        d["lag1_duration"] = iid.lag1_duration;
        d["iid_pass"] = iid.pass;
        return d;
      },
      py::arg("preset"), py::arg("count"), py::arg("seed") = 1, py::arg("horizon") = 10000, py::arg("margin") = 1000,
      py::arg("workers") = 1);

  m.def(
      "find_regenerations",
      [](const std::vector<std::int64_t>& levels, std::int64_t margin) {
        return find_regenerations(levels, margin).times;
      },
      py::arg("levels"), py::arg("margin"));

  m.def(
      "enumerate_exact",
      [](const std::string& name, std::uint64_t env_seed, int horizon) {
        const auto law = fleet::by_name(name);
        const auto ex = enumerate_exact(Environment(law, env_seed), Site{}, horizon);
        py::dict endpoints, visits;
        for (const auto& [z, p] : ex.endpoints) endpoints[site_tuple(z, law->dim())] = p;
        for (const auto& [z, p] : ex.visits) visits[site_tuple(z, law->dim())] = p;
        py::dict d;
        d["endpoints"] = endpoints;
        d["visits"] = visits;
        d["stay_positive"] = ex.stay_positive;
        d["stay_below_start"] = ex.stay_below_start;
        return d;
      },
      py::arg("preset"), py::arg("env_seed"), py::arg("horizon"));
}
