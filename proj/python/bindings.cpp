#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "dcdyn/dcdyn.hpp"

namespace py = pybind11;
using namespace dcdyn;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

std::size_t bus_index(const SimLog& log, const std::string& name) {
  for (std::size_t i = 0; i < log.bus_names.size(); ++i)
    if (log.bus_names[i] == name) return i;
  throw py::key_error("unknown bus '" + name + "'");
}

const DcTrace& dc_trace(const SimLog& log, const std::string& id) {
  for (std::size_t i = 0; i < log.dc_ids.size(); ++i)
    if (log.dc_ids[i] == id) return log.dcs[i];
  throw py::key_error("unknown data center '" + id + "'");
}

Scenario resolve(const std::optional<std::string>& scenario, const std::optional<std::string>& text) {
  if (scenario.has_value() == text.has_value())
    throw py::value_error("give exactly one of `scenario` (builtin name or path) or `text`");
  return scenario ? load_scenario(*scenario) : parse_scenario_text(*text);
}

}  // namespace

PYBIND11_MODULE(_dcdyn, m) {
  m.doc() = "Data-center dynamic load simulator";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception<ModelError>(m, "ModelError", error.ptr());
  py::register_exception<SolverError>(m, "SolverError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  py::class_<SimLog>(m, "SimLog")
      .def_property_readonly("rows", &SimLog::rows)
      .def_property_readonly("bus_names", [](const SimLog& l) { return l.bus_names; })
      .def_property_readonly("dc_ids", [](const SimLog& l) { return l.dc_ids; })
      .def_property_readonly("t_s", [](const SimLog& l) { return to_array(l.t_s); })
      .def_property_readonly("f_gen_hz", [](const SimLog& l) { return to_array(l.f_gen_hz); })
      .def("v_pu", [](const SimLog& l, const std::string& b) { return to_array(l.v_pu[bus_index(l, b)]); })
      .def("f_hz", [](const SimLog& l, const std::string& b) { return to_array(l.f_hz[bus_index(l, b)]); })
      .def("rocof_hz_s",
           [](const SimLog& l, const std::string& b) { return to_array(l.rocof_hz_s[bus_index(l, b)]); })
      .def("p_grid_mw", [](const SimLog& l, const std::string& d) { return to_array(dc_trace(l, d).p_grid_mw); })
      .def("q_grid_mvar",
           [](const SimLog& l, const std::string& d) { return to_array(dc_trace(l, d).q_grid_mvar); })
      .def("e_mwh", [](const SimLog& l, const std::string& d) { return to_array(dc_trace(l, d).e_mwh); })
      .def("p_it_mw", [](const SimLog& l, const std::string& d) { return to_array(dc_trace(l, d).p_it_mw); })
      .def("p_cooling_mw",
           [](const SimLog& l, const std::string& d) { return to_array(dc_trace(l, d).p_cooling_mw); })
      .def("p_gpu_mw", [](const SimLog& l, const std::string& d) { return to_array(dc_trace(l, d).p_gpu_mw); })
      .def("mode",
           [](const SimLog& l, const std::string& d) {
             std::vector<std::string> out;
             for (UpsMode md : dc_trace(l, d).mode) out.emplace_back(to_string(md));
             return out;
           })
      .def_property_readonly("events", [](const SimLog& l) {
        py::list out;
        for (const EventRecord& e : l.events) {
          py::dict d;
          d["t_s"] = e.t_s;
          d["kind"] = e.kind;
          d["dc_id"] = e.dc_id;
          d["segment"] = e.segment;
          d["from"] = e.from;
          d["to"] = e.to;
          d["cause"] = e.cause;
          d["detail"] = e.detail;
          out.append(d);
        }
        return out;
      });

  m.def(
      "run",
      [](std::optional<std::string> scenario, std::optional<std::string> text,
         std::optional<std::uint64_t> seed, std::optional<double> dt_s, std::optional<double> duration_s) {
        Scenario sc = resolve(scenario, text);
        if (seed) sc.seed = *seed;
        if (dt_s) sc.dt_s = *dt_s;
        if (duration_s) sc.duration_s = *duration_s;
        py::gil_scoped_release release;
        return run(sc);
      },
      py::arg("scenario") = py::none(), py::kw_only(), py::arg("text") = py::none(),
      py::arg("seed") = py::none(), py::arg("dt_s") = py::none(), py::arg("duration_s") = py::none(),
      "Run a builtin scenario, a scenario file, or a scenario document given as text.");

  m.def(
      "validate",
      [](std::optional<std::string> scenario, std::optional<std::string> text) {
        const Scenario sc = resolve(scenario, text);
        py::dict d;
        d["name"] = sc.name;
        d["buses"] = sc.grid.network.bus_count();
        py::list dcs;
        for (const DcDefinition& dc : sc.dcs) {
          py::dict x;
          x["id"] = dc.id;
          x["pattern"] = to_string(dc.params.pattern);
          x["scheme"] = to_string(dc.ups.reconnection.scheme);
          x["t_delay_s"] = dc.ups.reconnection.t_delay_s;
          x["segments"] = dc.effective_segments().size();
          dcs.append(x);
        }
        d["dcs"] = dcs;
        d["events"] = sc.events.size();
        return d;
      },
      py::arg("scenario") = py::none(), py::kw_only(), py::arg("text") = py::none(),
      "Parse and check a scenario; raises ConfigError with the offending line.");

  m.def(
      "serialize_scenario",
      [](std::optional<std::string> scenario, std::optional<std::string> text) {
        return serialize_scenario(resolve(scenario, text));
      },
      py::arg("scenario") = py::none(), py::kw_only(), py::arg("text") = py::none());

  m.def("builtin_names", &builtin_names);
  m.def("builtin_text", &builtin_text, py::arg("name"));
  m.def("timeseries_csv", &timeseries_csv, py::arg("log"));
  m.def("events_csv", &events_csv, py::arg("log"));
  m.def("emit_csv", &emit_csv, py::arg("log"), py::arg("out_dir"));

  m.def("pulse_value",
        [](double t, double period, double width, double high, double low, double phase_offset) {
          return pulse_value(t, PulseParams{period, width, high, low, phase_offset});
        },
        py::arg("t"), py::arg("period"), py::arg("width"), py::arg("high") = 1.0,
        py::arg("low") = 0.0, py::arg("phase_offset") = 0.0);
  m.def("zip_power",
        [](double v, double p0, double q0, std::array<double, 3> p_coef, std::array<double, 3> q_coef) {
          ZipParams z{p0, q0, p_coef[0], p_coef[1], p_coef[2], q_coef[0], q_coef[1], q_coef[2]};
          z.validate();
          const PowerPair pq = zip_power(v, z);
          return std::make_pair(pq.p_mw, pq.q_mvar);
        },
        py::arg("v"), py::arg("p0_mw"), py::arg("q0_mvar") = 0.0,
        py::arg("p_coef") = std::array<double, 3>{1.0, 0.0, 0.0},
        py::arg("q_coef") = std::array<double, 3>{1.0, 0.0, 0.0});
  m.def("it_power",
        [](double p_cpu, double p_gpu, double eta) { return it_power(ItState{0.0, p_cpu, p_gpu, eta}); },
        py::arg("p_cpu_mw"), py::arg("p_gpu_mw"), py::arg("eta_mw") = 0.0);
  m.def("check_disconnect",
        [](double f_dev_hz, double v_dev_pu, double f_min, double f_max, double v_min, double v_max) {
          UpsConfig c;
          c.f_min_hz = f_min;
          c.f_max_hz = f_max;
          c.v_min_pu = v_min;
          c.v_max_pu = v_max;
          GridMeasurement g;
          g.f_dev = f_dev_hz;
          g.v_dev = v_dev_pu;
          g.v = 1.0 + v_dev_pu;
          return check_disconnect(g, c);
        },
        py::arg("f_dev_hz"), py::arg("v_dev_pu"), py::arg("f_min_hz") = -0.3,
        py::arg("f_max_hz") = 0.3, py::arg("v_min_pu") = -0.1, py::arg("v_max_pu") = 0.1);
  m.def("motor_equilibrium_slip",
        [](double v, double t_mech) {
          MotorParams p;
          p.t_mech = t_mech;
          return motor_equilibrium(Phasor(v, 0.0), p).slip;
        },
        py::arg("v_pu") = 1.0, py::arg("t_mech_pu") = 0.8,
        "Steady-state slip of the default cooling motor.");
}
