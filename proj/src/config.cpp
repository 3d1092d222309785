#include "g2lab/config.hpp"

#include <cmath>
#include <iterator>
#include <map>
#include <set>

#include "g2lab/io.hpp"
#include "json.hpp"

namespace g2lab {

using nlohmann::json;

std::string_view to_string(Configuration c) {
  return c == Configuration::hbt ? "hbt" : "single_detector";
}

std::string_view to_string(FitModel m) {
  switch (m) {
    case FitModel::none: return "none";
    case FitModel::g2: return "g2";
    case FitModel::linear: return "linear";
  }
  return "none";
}

namespace {

// Forward iterator over the raw text that counts the newlines it has passed.
// The SAX pass below reads the counter to learn where each key sits.
class LineCountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  LineCountingIterator(const char* p, std::size_t* line) : p_(p), line_(line) {}
  reference operator*() const { return *p_; }
  LineCountingIterator& operator++() {
    if (*p_ == '\n') ++*line_;
    ++p_;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  friend bool operator==(const LineCountingIterator& x, const LineCountingIterator& y) {
    return x.p_ == y.p_;
  }

 private:
  const char* p_;
  std::size_t* line_;
};

// Records the source line of every object key, keyed by JSON pointer.
class KeyLineRecorder : public nlohmann::json_sax<json> {
 public:
  KeyLineRecorder(const std::size_t* line, std::map<std::string, std::size_t>* lines)
      : line_(line), lines_(lines) {}

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override { return open(false); }
  bool end_object() override { return close(); }
  bool start_array(std::size_t) override { return open(true); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    frames_.back().key = escape(k);
    (*lines_)[frames_.back().pointer + "/" + frames_.back().key] = *line_;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  struct Frame {
    bool array;
    std::string pointer;
    std::size_t index = 0;
    std::string key;
  };

  static std::string escape(const std::string& k) {
    std::string out;
    for (char c : k) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  std::string child_pointer() {
    if (frames_.empty()) return "";
    auto& top = frames_.back();
    if (top.array) {
      const std::string p = top.pointer + "/" + std::to_string(top.index++);
      lines_->emplace(p, *line_);
      return p;
    }
    return top.pointer + "/" + top.key;
  }
  bool value() {
    child_pointer();
    return true;
  }
  bool open(bool array) {
    frames_.push_back(Frame{array, child_pointer(), 0, {}});
    return true;
  }
  bool close() {
    frames_.pop_back();
    return true;
  }

  const std::size_t* line_;
  std::map<std::string, std::size_t>* lines_;
  std::vector<Frame> frames_;
};

class Reader {
 public:
  Reader(std::string origin, std::map<std::string, std::size_t> lines)
      : origin_(std::move(origin)), lines_(std::move(lines)) {}

  [[noreturn]] void error(const std::string& pointer, const std::string& what) const {
    std::string p = pointer;
    std::size_t line = 1;
    while (true) {
      if (auto it = lines_.find(p); it != lines_.end()) {
        line = it->second;
        break;
      }
      const auto slash = p.rfind('/');
      if (slash == std::string::npos) break;
      p = p.substr(0, slash);
    }
    fail(ErrorCode::config, origin_ + ":" + std::to_string(line) + ": " +
                                (pointer.empty() ? std::string("/") : pointer) + ": " + what);
  }

  const json& object(const json& parent, const std::string& ptr) const {
    if (!parent.is_object()) error(ptr, "expected an object");
    return parent;
  }

  void only_keys(const json& obj, const std::string& ptr, std::set<std::string> allowed) const {
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) error(ptr + "/" + k, "unknown key \"" + k + "\"");
  }

  const json* find(const json& obj, const std::string& key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  const json& require(const json& obj, const std::string& ptr, const std::string& key) const {
    const json* v = find(obj, key);
    if (!v) error(ptr, "missing required key \"" + key + "\"");
    return *v;
  }

  double number(const json& v, const std::string& ptr) const {
    if (!v.is_number()) error(ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) error(ptr, "expected a finite number");
    return d;
  }

  double positive(const json& v, const std::string& ptr) const {
    const double d = number(v, ptr);
    if (!(d > 0.0)) error(ptr, "must be positive");
    return d;
  }

  double non_negative(const json& v, const std::string& ptr) const {
    const double d = number(v, ptr);
    if (d < 0.0) error(ptr, "must be >= 0");
    return d;
  }

  std::uint64_t unsigned_int(const json& v, const std::string& ptr) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      error(ptr, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const json& v, const std::string& ptr) const {
    if (!v.is_string()) error(ptr, "expected a string");
    return v.get<std::string>();
  }

  bool flag(const json& v, const std::string& ptr) const {
    if (!v.is_boolean()) error(ptr, "expected true or false");
    return v.get<bool>();
  }

  template <typename Fn>
  auto guarded(const std::string& ptr, Fn&& fn) const {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::config) throw;
      error(ptr, e.what());
    }
  }

 private:
  std::string origin_;
  std::map<std::string, std::size_t> lines_;
};

SourceSpec read_source(const Reader& r, const json& j) {
  const std::string ptr = "/source";
  r.object(j, ptr);
  const std::string kind = r.text(r.require(j, ptr, "kind"), ptr + "/kind");
  if (kind == "poisson") {
    r.only_keys(j, ptr, {"kind", "rate_hz"});
    return PoissonSource{r.positive(r.require(j, ptr, "rate_hz"), ptr + "/rate_hz")};
  }
  if (kind == "fock") {
    r.only_keys(j, ptr, {"kind", "n", "mode_duration_ns"});
    const auto n = r.unsigned_int(r.require(j, ptr, "n"), ptr + "/n");
    if (n < 1 || n > 1'000'000) r.error(ptr + "/n", "must be between 1 and 1000000");
    const double width = r.positive(r.require(j, ptr, "mode_duration_ns"), ptr + "/mode_duration_ns");
    FockSource f{static_cast<std::uint32_t>(n),
                 r.guarded(ptr + "/mode_duration_ns", [&] { return ticks_from_ns(width); })};
    r.guarded(ptr, [&] { FockModeSpec{f.n, f.mode_duration, 1}.validate(); return 0; });
    return f;
  }
  if (kind == "three_level") {
    r.only_keys(j, ptr, {"kind", "preset", "k12_hz", "k21_hz", "k23_hz", "k31_hz"});
    ThreeLevelParams p;
    if (const json* preset = r.find(j, "preset")) {
      const auto name = r.text(*preset, ptr + "/preset");
      if (name != "nv-default") r.error(ptr + "/preset", "unknown three-level preset \"" + name + "\"");
      p = ThreeLevelParams::nv_default();
    }
    auto rate = [&](const char* key, double& out) {
      if (const json* v = r.find(j, key)) out = r.non_negative(*v, ptr + "/" + key);
    };
    rate("k12_hz", p.k12);
    rate("k21_hz", p.k21);
    rate("k23_hz", p.k23);
    rate("k31_hz", p.k31);
    r.guarded(ptr, [&] { p.validate(); return 0; });
    if (p.k12 == 0.0) r.error(ptr, "k12_hz must be positive (no pumping, no photons)");
    return ThreeLevelSource{p};
  }
  r.error(ptr + "/kind", "unknown source kind \"" + kind + "\" (poisson, fock, three_level)");
}

DetectorSpec read_detector(const Reader& r, const json& j, const std::string& ptr) {
  r.object(j, ptr);
  r.only_keys(j, ptr, {"preset", "efficiency", "dead_time_ns", "dark_rate_hz", "jitter_fwhm_ps",
                       "afterpulse_prob", "afterpulse_delay_ns"});
  DetectorSpec d;
  if (const json* preset = r.find(j, "preset")) {
    d.preset = r.text(*preset, ptr + "/preset");
    auto p = detector_preset(d.preset);
    if (!p) r.error(ptr + "/preset", "unknown detector preset \"" + d.preset + "\" (apd-paper, sspd-paper, ideal)");
    d.params = *p;
  }
  if (const json* v = r.find(j, "efficiency")) d.params.efficiency = r.number(*v, ptr + "/efficiency");
  if (const json* v = r.find(j, "dead_time_ns"))
    d.params.dead_time = ticks_from_ns(r.non_negative(*v, ptr + "/dead_time_ns"));
  if (const json* v = r.find(j, "dark_rate_hz")) d.params.dark_rate_hz = r.non_negative(*v, ptr + "/dark_rate_hz");
  if (const json* v = r.find(j, "jitter_fwhm_ps"))
    d.params.jitter_fwhm = Tick(r.unsigned_int(*v, ptr + "/jitter_fwhm_ps"));
  if (const json* v = r.find(j, "afterpulse_prob")) d.params.afterpulse_prob = r.number(*v, ptr + "/afterpulse_prob");
  if (const json* v = r.find(j, "afterpulse_delay_ns")) {
    const std::string p = ptr + "/afterpulse_delay_ns";
    if (!v->is_array() || v->size() != 2) r.error(p, "expected [min_ns, max_ns]");
    d.params.afterpulse_delay = {ticks_from_ns(r.non_negative((*v)[0], p + "/0")),
                                 ticks_from_ns(r.non_negative((*v)[1], p + "/1"))};
  }
  r.guarded(ptr, [&] { d.params.validate(); return 0; });
  return d;
}

CorrelationSpec read_correlation(const Reader& r, const json& j) {
  const std::string ptr = "/correlation";
  r.object(j, ptr);
  r.only_keys(j, ptr, {"estimator", "tau_min_ns", "tau_max_ns", "bin_width_ns", "rate_correction", "fold"});
  CorrelationSpec c;
  const auto name = r.text(r.require(j, ptr, "estimator"), ptr + "/estimator");
  const auto mode = parse_correlation_mode(name);
  if (!mode) r.error(ptr + "/estimator", "unknown estimator \"" + name + "\" (all_pairs, start_stop_first, cross)");
  c.estimator = *mode;
  const double tau_max = r.positive(r.require(j, ptr, "tau_max_ns"), ptr + "/tau_max_ns");
  const double bin = r.positive(r.require(j, ptr, "bin_width_ns"), ptr + "/bin_width_ns");
  double tau_min = 0.0;
  if (const json* v = r.find(j, "tau_min_ns")) tau_min = r.number(*v, ptr + "/tau_min_ns");
  if (c.estimator == CorrelationMode::cross_two_channel) {
    if (r.find(j, "tau_min_ns")) r.error(ptr + "/tau_min_ns", "cross histograms span [-tau_max, tau_max)");
    tau_min = -tau_max;
  } else if (tau_min < 0.0) {
    r.error(ptr + "/tau_min_ns", "single-channel estimators need tau_min_ns >= 0");
  }
  c.geometry = {delay_from_ns(tau_min), delay_from_ns(tau_max), delay_from_ns(bin)};
  r.guarded(ptr, [&] { c.geometry.validate(); return 0; });
  if (const json* v = r.find(j, "rate_correction")) c.rate_correction = r.flag(*v, ptr + "/rate_correction");
  if (const json* v = r.find(j, "fold")) c.fold = r.flag(*v, ptr + "/fold");
  return c;
}

FitSpec read_fit(const Reader& r, const json& j) {
  const std::string ptr = "/fit";
  r.object(j, ptr);
  r.only_keys(j, ptr, {"model", "tau_min_ns", "tau_max_ns", "k21_hz"});
  FitSpec f;
  const auto model = r.text(r.require(j, ptr, "model"), ptr + "/model");
  if (model == "g2") f.model = FitModel::g2;
  else if (model == "linear") f.model = FitModel::linear;
  else if (model == "none") f.model = FitModel::none;
  else r.error(ptr + "/model", "unknown fit model \"" + model + "\" (g2, linear, none)");
  if (const json* v = r.find(j, "tau_min_ns")) f.tau_min_ns = r.number(*v, ptr + "/tau_min_ns");
  if (const json* v = r.find(j, "tau_max_ns")) f.tau_max_ns = r.number(*v, ptr + "/tau_max_ns");
  if (f.tau_max_ns <= f.tau_min_ns) r.error(ptr, "tau_max_ns must exceed tau_min_ns");
  if (const json* v = r.find(j, "k21_hz")) f.k21_hz = r.positive(*v, ptr + "/k21_hz");
  return f;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    fail(ErrorCode::config, origin + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  std::map<std::string, std::size_t> lines;
  std::size_t line = 1;
  KeyLineRecorder recorder(&line, &lines);
  json::sax_parse(LineCountingIterator(text.data(), &line),
                  LineCountingIterator(text.data() + text.size(), &line), &recorder);
  const Reader r(origin, std::move(lines));

  r.object(doc, "");
  r.only_keys(doc, "", {"$schema", "name", "description", "source", "configuration", "detectors",
                        "beam_splitter", "duration_s", "segment_s", "workers", "seed", "stream_id",
                        "correlation", "fit", "output"});
  ExperimentConfig cfg;
  if (const json* v = r.find(doc, "name")) cfg.name = r.text(*v, "/name");
  cfg.source = read_source(r, r.require(doc, "", "source"));

  const auto conf = r.text(r.require(doc, "", "configuration"), "/configuration");
  if (conf == "single_detector") cfg.configuration = Configuration::single_detector;
  else if (conf == "hbt") cfg.configuration = Configuration::hbt;
  else r.error("/configuration", "expected \"single_detector\" or \"hbt\"");

  const json& dets = r.require(doc, "", "detectors");
  if (!dets.is_array()) r.error("/detectors", "expected an array of detectors");
  for (std::size_t i = 0; i < dets.size(); ++i)
    cfg.detectors.push_back(read_detector(r, dets[i], "/detectors/" + std::to_string(i)));
  const std::size_t wanted = cfg.configuration == Configuration::hbt ? 2 : 1;
  if (cfg.detectors.size() != wanted)
    r.error("/detectors", std::string(to_string(cfg.configuration)) + " needs exactly " +
                              std::to_string(wanted) + " detector(s)");

  if (const json* bs = r.find(doc, "beam_splitter")) {
    r.object(*bs, "/beam_splitter");
    r.only_keys(*bs, "/beam_splitter", {"transmittance"});
    cfg.transmittance = r.number(r.require(*bs, "/beam_splitter", "transmittance"),
                                 "/beam_splitter/transmittance");
    if (cfg.transmittance < 0.0 || cfg.transmittance > 1.0)
      r.error("/beam_splitter/transmittance", "must lie in [0, 1]");
  }

  const double duration_s = r.positive(r.require(doc, "", "duration_s"), "/duration_s");
  cfg.duration = r.guarded("/duration_s", [&] { return ticks_from_seconds(duration_s); });
  if (const json* v = r.find(doc, "segment_s"))
    cfg.segment_length = r.guarded("/segment_s", [&] { return ticks_from_seconds(r.positive(*v, "/segment_s")); });
  if (cfg.segment_length.value() == 0) r.error("/segment_s", "must be at least one tick");
  cfg.segment_length = align_segment_length(cfg.source, cfg.segment_length);
  if (const auto* f = std::get_if<FockSource>(&cfg.source);
      f && cfg.duration.value() % f->mode_duration.value() != 0)
    r.error("/duration_s", "Fock sources need a whole number of modes");
  if (const json* v = r.find(doc, "workers")) {
    const auto w = r.unsigned_int(*v, "/workers");
    if (w < 1 || w > 256) r.error("/workers", "must be between 1 and 256");
    cfg.workers = static_cast<unsigned>(w);
  }
  cfg.seed.seed = r.unsigned_int(r.require(doc, "", "seed"), "/seed");
  if (const json* v = r.find(doc, "stream_id")) cfg.seed.stream_id = r.unsigned_int(*v, "/stream_id");

  cfg.correlation = read_correlation(r, r.require(doc, "", "correlation"));
  const bool cross = cfg.correlation.estimator == CorrelationMode::cross_two_channel;
  if (cross != (cfg.configuration == Configuration::hbt))
    r.error("/correlation/estimator", cross ? "the cross estimator needs the hbt configuration"
                                            : "the hbt configuration needs the cross estimator");
  if (cfg.correlation.rate_correction && cfg.correlation.estimator != CorrelationMode::start_stop_first)
    r.error("/correlation/rate_correction", "only meaningful for start_stop_first");

  if (const json* v = r.find(doc, "fit")) cfg.fit = read_fit(r, *v);

  if (const json* out = r.find(doc, "output")) {
    r.object(*out, "/output");
    r.only_keys(*out, "/output", {"curve", "fit", "summary"});
    if (const json* v = r.find(*out, "curve")) cfg.output.curve = r.text(*v, "/output/curve");
    if (const json* v = r.find(*out, "fit")) cfg.output.fit = r.text(*v, "/output/fit");
    if (const json* v = r.find(*out, "summary")) cfg.output.summary = r.text(*v, "/output/summary");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path), path.string());
}

}  // namespace g2lab
