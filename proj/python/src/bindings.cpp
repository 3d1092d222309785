#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "g2lab/config.hpp"
#include "g2lab/detectors.hpp"
#include "g2lab/io.hpp"
#include "g2lab/pipeline.hpp"

namespace py = pybind11;
using namespace g2lab;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<std::uint64_t> ticks_array(const std::vector<Tick>& v) {
  py::array_t<std::uint64_t> out(static_cast<py::ssize_t>(v.size()));
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i].value();
  return out;
}

std::vector<Tick> ticks_from(const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& a) {
  std::vector<Tick> out(static_cast<std::size_t>(a.size()));
  const auto* p = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Tick(p[i]);
  return out;
}

py::array_t<std::uint8_t> provenance_array(const std::vector<ClickOrigin>& v) {
  py::array_t<std::uint8_t> out(static_cast<py::ssize_t>(v.size()));
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = static_cast<std::uint8_t>(v[i]);
  return out;
}

py::dict curve_dict(const G2Curve& c) {
  std::vector<double> tau(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) tau[i] = c.tau_ns(i);
  py::dict d;
  d["mode"] = std::string(to_string(c.mode));
  d["tau_ns"] = to_array(tau);
  d["counts"] = to_array(c.counts);
  d["g2"] = to_array(c.g2);
  d["g2_err"] = to_array(c.g2_err);
  d["n_start_events"] = c.n_start_events;
  d["stop_rate_hz"] = c.stop_rate_hz;
  d["rate_corrected"] = c.rate_corrected;
  return d;
}

HistogramGeometry geometry_ps(std::int64_t tau_min, std::int64_t tau_max, std::int64_t bin) {
  HistogramGeometry g{Delay(tau_min), Delay(tau_max), Delay(bin)};
  g.validate();
  return g;
}

}  // namespace

PYBIND11_MODULE(_g2lab, m) {
  m.doc() = "Monte Carlo photon-statistics lab (integer picosecond ticks)";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error(m, "G2LabError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<PhotonStream>(m, "PhotonStream")
      .def(py::init([](py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> events,
                       std::uint64_t duration_ps, std::string label) {
             PhotonStream s{ticks_from(events), Tick(duration_ps), std::move(label)};
             if (auto v = validate_stream(s)) fail(ErrorCode::invalid_argument, describe(*v));
             return s;
           }),
           py::arg("events"), py::arg("duration_ps"), py::arg("label") = "")
      .def_property_readonly("events", [](const PhotonStream& s) { return ticks_array(s.events); })
      .def_property_readonly("duration_ps", [](const PhotonStream& s) { return s.duration.value(); })
      .def_readonly("label", &PhotonStream::label)
      .def("__len__", [](const PhotonStream& s) { return s.events.size(); })
      .def("__eq__", [](const PhotonStream& a, const PhotonStream& b) { return a == b; });

  py::class_<ClickStream>(m, "ClickStream")
      .def_property_readonly("events", [](const ClickStream& s) { return ticks_array(s.events); })
      .def_property_readonly("provenance", [](const ClickStream& s) { return provenance_array(s.provenance); })
      .def_property_readonly("duration_ps", [](const ClickStream& s) { return s.duration.value(); })
      .def_readonly("detector_id", &ClickStream::detector_id)
      .def("__len__", [](const ClickStream& s) { return s.events.size(); })
      .def("__eq__", [](const ClickStream& a, const ClickStream& b) { return a == b; });

  py::class_<ThreeLevelParams>(m, "ThreeLevelParams")
      .def(py::init([](double k12, double k21, double k23, double k31) {
             ThreeLevelParams p{k12, k21, k23, k31};
             p.validate();
             return p;
           }),
           py::arg("k12"), py::arg("k21"), py::arg("k23"), py::arg("k31"))
      .def_static("nv_default", &ThreeLevelParams::nv_default)
      .def_readonly("k12", &ThreeLevelParams::k12)
      .def_readonly("k21", &ThreeLevelParams::k21)
      .def_readonly("k23", &ThreeLevelParams::k23)
      .def_readonly("k31", &ThreeLevelParams::k31);

  py::class_<G2Model>(m, "G2Model")
      .def(py::init<double, double, double>(), py::arg("a"), py::arg("lambda1"), py::arg("lambda2"))
      .def_readonly("a", &G2Model::a)
      .def_readonly("lambda1", &G2Model::lambda1)
      .def_readonly("lambda2", &G2Model::lambda2)
      .def(
          "__call__",
          [](const G2Model& model, py::array_t<double, py::array::c_style | py::array::forcecast> tau_ns) {
            py::array_t<double> out(tau_ns.request().shape);
            const auto* in = tau_ns.data();
            auto* p = out.mutable_data();
            for (py::ssize_t i = 0; i < tau_ns.size(); ++i) p[i] = eval_g2_ns(model, in[i]);
            return out;
          },
          py::arg("tau_ns"));

  py::class_<DetectorParams>(m, "DetectorParams")
      .def_readwrite("efficiency", &DetectorParams::efficiency)
      .def_readwrite("dark_rate_hz", &DetectorParams::dark_rate_hz)
      .def_readwrite("afterpulse_prob", &DetectorParams::afterpulse_prob)
      .def_property(
          "dead_time_ps", [](const DetectorParams& p) { return p.dead_time.value(); },
          [](DetectorParams& p, std::uint64_t v) { p.dead_time = Tick(v); })
      .def_property(
          "jitter_fwhm_ps", [](const DetectorParams& p) { return p.jitter_fwhm.value(); },
          [](DetectorParams& p, std::uint64_t v) { p.jitter_fwhm = Tick(v); })
      .def_property(
          "afterpulse_delay_ps",
          [](const DetectorParams& p) {
            return std::make_pair(p.afterpulse_delay.min.value(), p.afterpulse_delay.max.value());
          },
          [](DetectorParams& p, std::pair<std::uint64_t, std::uint64_t> w) {
            p.afterpulse_delay = {Tick(w.first), Tick(w.second)};
          });

  m.def("detector_preset", [](const std::string& name) {
    auto p = detector_preset(name);
    if (!p) fail(ErrorCode::invalid_argument, "unknown detector preset \"" + name + "\"");
    return *p;
  });

  m.def("analytic_g2", &analytic_g2, py::arg("params"));
  m.def("steady_state_excited", &steady_state_excited, py::arg("params"));

  m.def(
      "simulate_poisson",
      [](double rate_hz, std::uint64_t duration_ps, std::uint64_t seed, std::uint64_t stream_id) {
        py::gil_scoped_release release;
        return simulate_poisson(rate_hz, Tick(duration_ps), {seed, stream_id});
      },
      py::arg("rate_hz"), py::arg("duration_ps"), py::arg("seed"), py::arg("stream_id") = 0);
  m.def(
      "simulate_fock",
      [](std::uint32_t n, std::uint64_t mode_duration_ps, std::uint64_t n_modes, std::uint64_t seed,
         std::uint64_t stream_id) {
        py::gil_scoped_release release;
        return simulate_fock_modes({n, Tick(mode_duration_ps), n_modes}, {seed, stream_id});
      },
      py::arg("n"), py::arg("mode_duration_ps"), py::arg("n_modes"), py::arg("seed"), py::arg("stream_id") = 0);
  m.def(
      "simulate_three_level",
      [](const ThreeLevelParams& p, std::uint64_t duration_ps, std::uint64_t seed, std::uint64_t stream_id) {
        py::gil_scoped_release release;
        return simulate_three_level(p, Tick(duration_ps), {seed, stream_id});
      },
      py::arg("params"), py::arg("duration_ps"), py::arg("seed"), py::arg("stream_id") = 0);

  m.def(
      "detect",
      [](const PhotonStream& s, const DetectorParams& p, std::uint64_t seed, std::uint64_t stream_id,
         std::uint8_t detector_id) {
        py::gil_scoped_release release;
        return detect(s, p, {seed, stream_id}, detector_id);
      },
      py::arg("stream"), py::arg("params"), py::arg("seed"), py::arg("stream_id") = 0,
      py::arg("detector_id") = 0);
  m.def(
      "beam_splitter",
      [](const PhotonStream& s, double transmittance, std::uint64_t seed, std::uint64_t stream_id) {
        return beam_splitter(s, transmittance, {seed, stream_id});
      },
      py::arg("stream"), py::arg("transmittance"), py::arg("seed"), py::arg("stream_id") = 0);

  m.def(
      "correlate",
      [](const ClickStream& c, const std::string& estimator, std::int64_t tau_min_ps, std::int64_t tau_max_ps,
         std::int64_t bin_width_ps, bool rate_correction) {
        const auto mode = parse_correlation_mode(estimator);
        if (!mode || *mode == CorrelationMode::cross_two_channel)
          fail(ErrorCode::invalid_argument, "estimator must be all_pairs or start_stop_first");
        const auto g = geometry_ps(tau_min_ps, tau_max_ps, bin_width_ps);
        const auto h = *mode == CorrelationMode::all_pairs_forward ? correlate_all_pairs(c, g) : start_stop_first(c, g);
        return curve_dict(normalize_g2(h, rate_correction));
      },
      py::arg("clicks"), py::arg("estimator"), py::arg("tau_min_ps"), py::arg("tau_max_ps"),
      py::arg("bin_width_ps"), py::arg("rate_correction") = false);
  m.def(
      "correlate_cross",
      [](const ClickStream& a, const ClickStream& b, std::int64_t tau_max_ps, std::int64_t bin_width_ps, bool fold) {
        auto h = correlate_cross(a, b, Delay(tau_max_ps), Delay(bin_width_ps));
        if (fold) h = fold_cross(h);
        return curve_dict(normalize_g2(h));
      },
      py::arg("a"), py::arg("b"), py::arg("tau_max_ps"), py::arg("bin_width_ps"), py::arg("fold") = true);

  m.def(
      "fit_g2_csv",
      [](const std::string& text, double tau_min_ns, double tau_max_ns) {
        const FitResult f = fit_g2(parse_curve_csv(text).slice(tau_min_ns, tau_max_ns));
        py::dict d;
        d["model"] = f.model;
        d["errors"] = f.param_errors;
        d["residual_sum"] = f.residual_sum;
        d["n_points"] = f.n_points;
        d["converged"] = f.converged;
        return d;
      },
      py::arg("csv_text"), py::arg("tau_min_ns") = 0.0, py::arg("tau_max_ns") = 1e300);

  m.def("write_stream", [](const std::filesystem::path& path, const PhotonStream& s) { write_stream(path, s); });
  m.def("write_stream", [](const std::filesystem::path& path, const ClickStream& s) { write_stream(path, s); });
  m.def("read_stream", [](const std::filesystem::path& path) -> py::object {
    auto s = read_stream(path);
    if (auto* p = std::get_if<PhotonStream>(&s)) return py::cast(std::move(*p));
    return py::cast(std::move(std::get<ClickStream>(s)));
  });

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed,
         std::optional<unsigned> workers) {
        ExperimentConfig cfg = load_config(config);
        if (seed) cfg.seed.seed = *seed;
        if (workers) cfg.workers = std::max(1u, *workers);
        PipelineOutputs out;
        {
          py::gil_scoped_release release;
          out = run_pipeline(cfg, out_dir);
        }
        py::dict d;
        d["curve"] = out.curve;
        d["summary"] = out.summary;
        d["fit"] = out.fit ? py::cast(*out.fit) : py::none();
        return d;
      },
      py::arg("config"), py::arg("out_dir"), py::arg("seed") = py::none(), py::arg("workers") = py::none());
}
