// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/app/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "baggagedet/core/rng.hpp"

namespace baggagedet::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class N>
N parse_number(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  N out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(key, key + ": '" + value + "' is not a valid number");
  if constexpr (std::is_floating_point_v<N>)
    if (!std::isfinite(out)) throw ConfigError(key, key + ": value must be finite");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key, key + ": expected on/off, got '" + value + "'");
}

// "8-16-32-64", "8,16,32,64" or "8 16 32 64"; '-' is not a separator when values may carry
// exponents (learning rates)
template <class N>
std::vector<N> parse_list(const std::string& key, const std::string& value, bool dash_separates = true) {
  std::string v = value;
  const char sep = dash_separates ? '-' : ',';
  for (char& ch : v)
    if (ch == ',' || ch == ' ') ch = sep;
  std::vector<N> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto next = v.find(sep, pos);
    const std::string item = v.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!item.empty()) out.push_back(parse_number<N>(key, item));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (out.empty()) throw ConfigError(key, key + ": empty list");
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class N>
std::string join(const std::vector<N>& xs, char sep = '-') {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << sep;
    if constexpr (std::is_floating_point_v<N>) os << fmt_double(xs[i]);
    else os << xs[i];
  }
  return os.str();
}

// "48" or "48x40x32"
Dims3 parse_dims(const std::string& key, const std::string& value) {
  std::string v = value;
  std::replace(v.begin(), v.end(), 'x', '-');
  const auto xs = parse_list<int>(key, v);
  if (xs.size() == 1) return {xs[0], xs[0], xs[0]};
  if (xs.size() == 3) return {xs[0], xs[1], xs[2]};
  throw ConfigError(key, key + ": expected N or DxHxW");
}

// Table-style augmentation setting: a bare probability sets p only; "off" disables both kinds;
// "<flip>/<rotation>" with each side a probability or "off" also sets the enable flags. Both
// enabled kinds share a single p.
void apply_aug_p(augment::AugmentConfig& aug, const std::string& value) {
  const std::string key = "aug.p";
  const auto slash = value.find('/');
  if (slash == std::string::npos) {
    if (trim(value) == "off") {
      aug.enabled_flips = aug.enabled_rotations = false;
      return;
    }
    aug.p = parse_number<double>(key, value);
    return;
  }
  const std::string f = trim(value.substr(0, slash)), r = trim(value.substr(slash + 1));
  aug.enabled_flips = f != "off";
  aug.enabled_rotations = r != "off";
  std::vector<double> ps;
  if (aug.enabled_flips) ps.push_back(parse_number<double>(key, f));
  if (aug.enabled_rotations) ps.push_back(parse_number<double>(key, r));
  if (ps.size() == 2 && ps[0] != ps[1])
    throw ConfigError(key, "aug.p: flip and rotation must share one probability, got " + value);
  if (!ps.empty()) aug.p = ps[0];
}

struct KeyDef {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    auto add = [&](std::string k, auto set, auto get) { t.push_back({std::move(k), set, get}); };
    add("seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); });
    add("split", [](ExperimentConfig& c, const std::string& v) { c.split = parse_number<int>("split", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.split); });
    add("manifest", [](ExperimentConfig& c, const std::string& v) { c.manifest = trim(v); },
        [](const ExperimentConfig& c) { return c.manifest.string(); });
    add("out", [](ExperimentConfig& c, const std::string& v) { c.out = trim(v); },
        [](const ExperimentConfig& c) { return c.out.string(); });
    add("channels",
        [](ExperimentConfig& c, const std::string& v) {
          try {
            c.detector.channels = parse_channel_mode(trim(v));
          } catch (const std::exception&) {
            throw ConfigError("channels", "channels: expected low, high or dual, got '" + v + "'");
          }
        },
        [](const ExperimentConfig& c) { return to_string(c.detector.channels); });
    add("scale.s", [](ExperimentConfig& c, const std::string& v) { c.detector.scale.s = parse_number<int>("scale.s", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.detector.scale.s); });
    add("anchors.sizes",
        [](ExperimentConfig& c, const std::string& v) { c.detector.anchors.base_sizes = parse_list<double>("anchors.sizes", v); },
        [](const ExperimentConfig& c) { return join(c.detector.anchors.base_sizes); });
    add("anchors.multipliers",
        [](ExperimentConfig& c, const std::string& v) {
          c.detector.anchors.scale_multipliers = parse_list<double>("anchors.multipliers", v);
        },
        [](const ExperimentConfig& c) { return join(c.detector.anchors.scale_multipliers, ','); });
    add("anchors.levels",
        [](ExperimentConfig& c, const std::string& v) { c.detector.anchors.levels = parse_list<int>("anchors.levels", v); },
        [](const ExperimentConfig& c) { return join(c.detector.anchors.levels, ','); });
    add("match.iou",
        [](ExperimentConfig& c, const std::string& v) { c.detector.match_iou = parse_number<double>("match.iou", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.detector.match_iou); });
    add("aug.p", [](ExperimentConfig& c, const std::string& v) { apply_aug_p(c.aug, v); },
        [](const ExperimentConfig& c) { return fmt_double(c.aug.p); });
    add("aug.flips", [](ExperimentConfig& c, const std::string& v) { c.aug.enabled_flips = parse_bool("aug.flips", v); },
        [](const ExperimentConfig& c) { return std::string(c.aug.enabled_flips ? "on" : "off"); });
    add("aug.rotations",
        [](ExperimentConfig& c, const std::string& v) { c.aug.enabled_rotations = parse_bool("aug.rotations", v); },
        [](const ExperimentConfig& c) { return std::string(c.aug.enabled_rotations ? "on" : "off"); });
    add("model.depth",
        [](ExperimentConfig& c, const std::string& v) { c.detector.model.depth = parse_number<int>("model.depth", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.detector.model.depth); });
    add("model.widths",
        [](ExperimentConfig& c, const std::string& v) {
          const auto w = parse_list<int>("model.widths", v);
          if (w.size() != 4) throw ConfigError("model.widths", "model.widths: expected 4 stage widths");
          std::copy(w.begin(), w.end(), c.detector.model.widths.begin());
        },
        [](const ExperimentConfig& c) {
          return join(std::vector<int>(c.detector.model.widths.begin(), c.detector.model.widths.end()));
        });
    add("model.fpn_width",
        [](ExperimentConfig& c, const std::string& v) { c.detector.model.fpn_width = parse_number<int>("model.fpn_width", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.detector.model.fpn_width); });
    add("model.head_convs",
        [](ExperimentConfig& c, const std::string& v) { c.detector.model.head_convs = parse_number<int>("model.head_convs", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.detector.model.head_convs); });
    add("model.groups",
        [](ExperimentConfig& c, const std::string& v) { c.detector.model.norm_groups = parse_number<int>("model.groups", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.detector.model.norm_groups); });
    add("train.lrs",
        [](ExperimentConfig& c, const std::string& v) {
          const auto lrs = parse_list<double>("train.lrs", v, false);
          auto& s = c.train.schedule;
          const int last = s.empty() ? 1 : s.back().epochs;
          s.resize(lrs.size(), net3d::LrStage{0.0, last});
          for (std::size_t i = 0; i < lrs.size(); ++i) s[i].lr = lrs[i];
        },
        [](const ExperimentConfig& c) {
          std::vector<std::string> xs;
          for (const auto& st : c.train.schedule) xs.push_back(fmt_double(st.lr));
          return join(xs, ',');
        });
    add("train.epochs",
        [](ExperimentConfig& c, const std::string& v) {
          const auto eps = parse_list<int>("train.epochs", v);
          auto& s = c.train.schedule;
          if (eps.size() == 1) {
            for (auto& st : s) st.epochs = eps[0];
          } else {
            if (eps.size() != s.size())
              throw ConfigError("train.epochs", "train.epochs: give one count, or one per train.lrs stage");
            for (std::size_t i = 0; i < s.size(); ++i) s[i].epochs = eps[i];
          }
        },
        [](const ExperimentConfig& c) {
          std::vector<int> xs;
          for (const auto& st : c.train.schedule) xs.push_back(st.epochs);
          return join(xs, ',');
        });
    add("train.batch_size",
        [](ExperimentConfig& c, const std::string& v) { c.train.batch_size = parse_number<int>("train.batch_size", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.train.batch_size); });
    add("train.neg_ratio",
        [](ExperimentConfig& c, const std::string& v) { c.train.loss.neg_ratio = parse_number<double>("train.neg_ratio", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.train.loss.neg_ratio); });
    add("train.focal", [](ExperimentConfig& c, const std::string& v) { c.train.loss.focal = parse_bool("train.focal", v); },
        [](const ExperimentConfig& c) { return std::string(c.train.loss.focal ? "on" : "off"); });
    add("train.focal_gamma",
        [](ExperimentConfig& c, const std::string& v) { c.train.loss.focal_gamma = parse_number<double>("train.focal_gamma", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.train.loss.focal_gamma); });
    add("eval.tp_iou", [](ExperimentConfig& c, const std::string& v) { c.eval.tp_iou = parse_number<double>("eval.tp_iou", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.eval.tp_iou); });
    add("eval.score_threshold",
        [](ExperimentConfig& c, const std::string& v) { c.eval.score_threshold = parse_number<double>("eval.score_threshold", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.eval.score_threshold); });
    add("eval.nms_iou", [](ExperimentConfig& c, const std::string& v) { c.eval.nms_iou = parse_number<double>("eval.nms_iou", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.eval.nms_iou); });
    add("eval.max_detections",
        [](ExperimentConfig& c, const std::string& v) { c.eval.max_detections = parse_number<int>("eval.max_detections", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.eval.max_detections); });
    add("eval.score_floor",
        [](ExperimentConfig& c, const std::string& v) { c.eval.score_floor = parse_number<double>("eval.score_floor", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.eval.score_floor); });
    add("eval.pr_mode",
        [](ExperimentConfig& c, const std::string& v) {
          const std::string m = trim(v);
          if (m == "fixed") c.eval.pr_mode = evalkit::PrMode::FixedThreshold;
          else if (m == "max_f1") c.eval.pr_mode = evalkit::PrMode::MaxF1;
          else throw ConfigError("eval.pr_mode", "eval.pr_mode: expected fixed or max_f1, got '" + v + "'");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.eval.pr_mode == evalkit::PrMode::FixedThreshold ? "fixed" : "max_f1");
        });
    add("synth.count", [](ExperimentConfig& c, const std::string& v) { c.synth.count = parse_number<int>("synth.count", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.synth.count); });
    add("synth.dims", [](ExperimentConfig& c, const std::string& v) { c.synth.dataset.base.dims = parse_dims("synth.dims", v); },
        [](const ExperimentConfig& c) {
          const auto& d = c.synth.dataset.base.dims;
          return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
        });
    add("synth.channels",
        [](ExperimentConfig& c, const std::string& v) { c.synth.dataset.base.channels = parse_number<int>("synth.channels", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.synth.dataset.base.channels); });
    add("synth.objects",
        [](ExperimentConfig& c, const std::string& v) {
          const auto xs = parse_list<int>("synth.objects", v);
          if (xs.size() > 2) throw ConfigError("synth.objects", "synth.objects: expected N or MIN-MAX");
          c.synth.dataset.objects_min = xs.front();
          c.synth.dataset.objects_max = xs.back();
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.synth.dataset.objects_min) + "-" + std::to_string(c.synth.dataset.objects_max);
        });
    add("synth.classes",
        [](ExperimentConfig& c, const std::string& v) { c.synth.dataset.classes = parse_list<int>("synth.classes", v); },
        [](const ExperimentConfig& c) { return join(c.synth.dataset.classes, ','); });
    add("synth.tip_fraction",
        [](ExperimentConfig& c, const std::string& v) {
          c.synth.dataset.tip_fraction = parse_number<double>("synth.tip_fraction", v);
        },
        [](const ExperimentConfig& c) { return fmt_double(c.synth.dataset.tip_fraction); });
    add("synth.clutter",
        [](ExperimentConfig& c, const std::string& v) {
          const auto xs = parse_list<int>("synth.clutter", v);
          if (xs.size() > 2) throw ConfigError("synth.clutter", "synth.clutter: expected N or MIN-MAX");
          c.synth.dataset.base.clutter_min = xs.front();
          c.synth.dataset.base.clutter_max = xs.back();
        },
        [](const ExperimentConfig& c) {
          return std::to_string(c.synth.dataset.base.clutter_min) + "-" + std::to_string(c.synth.dataset.base.clutter_max);
        });
    add("synth.noise_sigma",
        [](ExperimentConfig& c, const std::string& v) {
          c.synth.dataset.base.noise_sigma = parse_number<float>("synth.noise_sigma", v);
        },
        [](const ExperimentConfig& c) { return fmt_double(c.synth.dataset.base.noise_sigma); });
    add("split.ratio", [](ExperimentConfig& c, const std::string& v) { c.split_cfg.ratio = parse_number<double>("split.ratio", v); },
        [](const ExperimentConfig& c) { return fmt_double(c.split_cfg.ratio); });
    add("split.count", [](ExperimentConfig& c, const std::string& v) { c.split_cfg.count = parse_number<int>("split.count", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.split_cfg.count); });
    return t;
  }();
  return table;
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.detector.scale.s = 3;
  c.synth.dataset.base.channels = 2;
  return c;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "config line " + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& def : key_table())
    if (def.key == key) {
      def.set(cfg, value);
      return;
    }
  throw ConfigError(key, "unknown config key '" + key + "'");
}

void validate(const ExperimentConfig& cfg) {
  // sub-config validators prefix their messages with the key they check
  auto wrap = [](const std::string& fallback, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      std::string msg = e.what();
      std::string key = msg.substr(0, msg.find(' '));
      const bool known = std::any_of(key_table().begin(), key_table().end(), [&](const KeyDef& d) { return d.key == key; });
      if (!known) {
        key = fallback;
        msg = fallback + ": " + msg;
      }
      throw ConfigError(key, msg);
    }
  };
  wrap("scale.s", [&] { baggagedet::validate(cfg.detector.scale); });
  wrap("anchors.sizes", [&] { anchors::validate(cfg.detector.anchors); });
  if (!(cfg.detector.match_iou > 0 && cfg.detector.match_iou < 1))
    throw ConfigError("match.iou", "match.iou must lie in (0,1)");
  wrap("aug.p", [&] { augment::validate(cfg.aug); });
  wrap("model.depth", [&] {
    auto m = cfg.detector.model;
    m.in_channels = channel_count(cfg.detector.channels);
    net3d::validate(m);
  });
  wrap("train.lrs", [&] { net3d::validate(cfg.train); });
  wrap("eval.tp_iou", [&] { evalkit::validate(cfg.eval); });
  wrap("synth.dims", [&] { synth::validate(cfg.synth.dataset.base); });
  if (cfg.synth.count < 1) throw ConfigError("synth.count", "synth.count must be >= 1");
  const auto& ds = cfg.synth.dataset;
  if (ds.objects_min < 0 || ds.objects_max < ds.objects_min)
    throw ConfigError("synth.objects", "synth.objects must satisfy 0 <= min <= max");
  if (ds.classes.empty()) throw ConfigError("synth.classes", "synth.classes must not be empty");
  for (int c : ds.classes)
    if (c < 0 || c >= kDefaultNumClasses) throw ConfigError("synth.classes", "synth.classes entries must be 0..4");
  if (!(ds.tip_fraction >= 0 && ds.tip_fraction <= 1))
    throw ConfigError("synth.tip_fraction", "synth.tip_fraction must lie in [0,1]");
  if (!(cfg.split_cfg.ratio > 0 && cfg.split_cfg.ratio < 1)) throw ConfigError("split.ratio", "split.ratio must lie in (0,1)");
  if (cfg.split_cfg.count < 1 || cfg.split_cfg.count > 3) throw ConfigError("split.count", "split.count must be 1..3");
  if (cfg.split < 1 || cfg.split > cfg.split_cfg.count)
    throw ConfigError("split", "split must lie in 1.." + std::to_string(cfg.split_cfg.count));
  if (cfg.detector.channels != ChannelMode::Low && cfg.synth.dataset.base.channels < 2)
    throw ConfigError("channels", "channels '" + to_string(cfg.detector.channels) + "' needs synth.channels=2");
}

std::string to_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (const auto& def : key_table()) os << def.key << '=' << def.get(cfg) << '\n';
  return os.str();
}

std::uint64_t train_seed(const ExperimentConfig& cfg) {
  return derive_seed(cfg.seed, {0x7a1, static_cast<std::uint64_t>(cfg.split)});
}

}  // namespace baggagedet::app
