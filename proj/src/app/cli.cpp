// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/app/cli.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "baggagedet/app/config.hpp"
#include "baggagedet/app/experiment.hpp"
#include "baggagedet/app/render.hpp"
#include "baggagedet/app/sweep.hpp"
#include "baggagedet/evalkit/detections_io.hpp"
#include "baggagedet/synthtip/synth.hpp"
#include "baggagedet/volcore/bvox.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace baggagedet::app {

namespace fs = std::filesystem;

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / ".baggagedet.lock") {
  fs::create_directories(dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      const bool ok = ::write(fd, pid.data(), pid.size()) == static_cast<ssize_t>(pid.size());
      ::close(fd);
      if (!ok) throw std::runtime_error("cannot write lockfile " + path_.string());
      return;
    }
    if (errno != EEXIST) throw std::runtime_error("cannot create lockfile " + path_.string());
    long owner = 0;
    std::ifstream(path_) >> owner;
    const bool alive = owner > 0 && (::kill(static_cast<pid_t>(owner), 0) == 0 || errno == EPERM);
    if (alive) throw std::runtime_error("output directory " + dir.string() + " is in use by process " + std::to_string(owner));
    fs::remove(path_);  // stale
  }
  throw std::runtime_error("cannot acquire lockfile " + path_.string());
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

void apply_workers_env() {
  const char* w = std::getenv("BAGGAGEDET_WORKERS");
  if (!w || !*w) return;
  char* end = nullptr;
  const long n = std::strtol(w, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096)
    throw ConfigError("BAGGAGEDET_WORKERS", "BAGGAGEDET_WORKERS must be a positive integer, got '" + std::string(w) + "'");
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

struct Options {
  std::string config;
  std::vector<std::string> sets;
  // named flags, applied on top of the config file and --set
  std::optional<std::string> seed, split, scale, anchors, aug_p, depth, channels, out, manifest;
  // subcommand specific
  std::optional<std::string> count, dims, ratio, seeds;
  std::string table;
  std::string checkpoint, detections;
  bool extract = false;
  std::string volume, sigs, name, target, output, volume_id;
  float threshold = 0.05f;
  int zoom = 4;
};

ExperimentConfig build_config(const Options& o) {
  ExperimentConfig cfg = default_experiment_config();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("config", "config: cannot read '" + o.config + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (const auto& [k, v] : parse_key_values(text)) apply_setting(cfg, k, v);
  }
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto flag = [&](const std::optional<std::string>& v, const char* key) {
    if (v) apply_setting(cfg, key, *v);
  };
  flag(o.seed, "seed");
  flag(o.split, "split");
  flag(o.scale, "scale.s");
  flag(o.anchors, "anchors.sizes");
  flag(o.aug_p, "aug.p");
  flag(o.depth, "model.depth");
  flag(o.channels, "channels");
  flag(o.out, "out");
  flag(o.manifest, "manifest");
  flag(o.count, "synth.count");
  flag(o.dims, "synth.dims");
  flag(o.ratio, "split.ratio");
  flag(o.seeds, "split.count");
  validate(cfg);
  return cfg;
}

int cmd_tip(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  if (o.sigs.empty()) throw ConfigError("sigs", "tip: --sigs <dir> is required");
  if (o.extract) {
    if (o.volume.empty()) throw ConfigError("volume", "tip --extract: --volume is required");
    const auto [v, anns] = load_volume(o.volume);
    const std::string stem = fs::path(o.volume).stem().string();
    for (std::size_t i = 0; i < anns.size(); ++i) {
      const auto sig =
          synth::extract_signature(v, anns[i].box, o.threshold, anns[i].class_id, stem + "#" + std::to_string(i));
      const std::string name = stem + "_" + std::to_string(i);
      synth::save_signature(sig, o.sigs, name);
      out << name << ' ' << class_name(sig.class_id) << ' ' << sig.occupied() << " voxels\n";
    }
    return kExitOk;
  }
  if (o.target.empty() || o.output.empty()) throw ConfigError("target", "tip: --target and --output are required");
  const auto names = o.name.empty() ? synth::list_signatures(o.sigs) : std::vector<std::string>{o.name};
  if (names.empty()) throw std::runtime_error("no signatures in " + o.sigs);
  auto [v, anns] = load_volume(o.target);
  Rng rng = make_rng(cfg.seed, {0x719});
  for (const auto& n : names) {
    auto res = synth::project_signature(v, synth::load_signature(o.sigs, n), rng);
    v = std::move(res.volume);
    anns.push_back(res.annotation);
  }
  save_volume(v, o.output, anns);
  out << "wrote " << o.output << " with " << names.size() << " projected signature(s)\n";
  return kExitOk;
}

int cmd_render(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  if (o.volume.empty()) throw ConfigError("volume", "render: --volume is required");
  const auto [v, anns] = load_volume(o.volume);
  std::vector<evalkit::Detection> dets;
  if (!o.detections.empty()) {
    const auto all = evalkit::read_detections(o.detections);
    std::string id = o.volume_id;
    if (id.empty()) {
      // a manifest entry is usually the file name relative to the manifest directory
      for (const std::string& cand : {o.volume, fs::path(o.volume).filename().string()})
        if (all.count(cand)) {
          id = cand;
          break;
        }
    }
    if (const auto it = all.find(id); it != all.end())
      for (const auto& d : it->second)
        if (d.score >= cfg.eval.score_threshold) dets.push_back(d);
  }
  for (const auto& p : render_volume(v, anns, dets, cfg.out, fs::path(o.volume).stem().string(), o.zoom))
    out << "wrote " << p.string() << '\n';
  return kExitOk;
}

int dispatch(const std::string& cmd, const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  DirectoryLock lock(cfg.out);
  if (cmd == "synth") {
    const auto m = run_synth(cfg);
    out << "wrote " << m.entries.size() << " volumes and " << (cfg.out / "manifest.txt").string() << '\n';
  } else if (cmd == "tip") {
    return cmd_tip(cfg, o, out);
  } else if (cmd == "split") {
    const auto m = run_split(cfg);
    for (int s = 1; s <= cfg.split_cfg.count; ++s)
      out << "split " << s << ": " << m.select(SplitRole::Train, s).size() << " train / "
          << m.select(SplitRole::Test, s).size() << " test\n";
  } else if (cmd == "train") {
    const auto res = run_train(cfg);
    const auto& last = res.log.epochs.back();
    out << "trained " << res.log.epochs.size() << " epochs, final loss " << last.total << "; wrote "
        << (cfg.out / "model.bdck").string() << '\n';
  } else if (cmd == "detect") {
    const fs::path ckpt = o.checkpoint.empty() ? cfg.out / "model.bdck" : fs::path(o.checkpoint);
    const fs::path dst = o.detections.empty() ? cfg.out / "detections.txt" : fs::path(o.detections);
    const auto dets = run_detect(cfg, ckpt);
    evalkit::write_detections(dets, dst);
    std::size_t n = 0;
    for (const auto& [k, v] : dets) n += v.size();
    out << "wrote " << n << " detections for " << dets.size() << " volumes to " << dst.string() << '\n';
  } else if (cmd == "eval") {
    const fs::path src = o.detections.empty() ? cfg.out / "detections.txt" : fs::path(o.detections);
    const auto m = run_eval(cfg, evalkit::read_detections(src));
    out << metrics_text(m);
  } else if (cmd == "sweep") {
    out << run_sweep(cfg, o.table).text;
  } else if (cmd == "render") {
    return cmd_render(cfg, o, out);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-class 3D object detection for volumetric baggage imagery", "baggagedet"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "flat key=value config file")->check(CLI::ExistingFile);
  app.add_option("--set", o.sets, "override one config key (key=value), repeatable");
  app.add_option("--seed", o.seed, "experiment seed");
  app.add_option("--split", o.split, "split index (1..3)");
  app.add_option("--scale", o.scale, "down-sampling factor s");
  app.add_option("--anchors", o.anchors, "anchor sizes per pyramid level, e.g. 8-16-32-64");
  app.add_option("--aug-p", o.aug_p, "augmentation probability: p, or flip/rotation with 'off'");
  app.add_option("--depth", o.depth, "backbone depth (10, 18, 34, 50, 101)");
  app.add_option("--channels", o.channels, "low | high | dual");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--manifest", o.manifest, "dataset manifest");
  app.fallthrough();

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--count", o.count, "number of volumes");
  synth->add_option("--dims", o.dims, "volume extent, N or DxHxW");
  auto* tip = app.add_subcommand("tip", "extract signatures or project them into a volume");
  tip->add_flag("--extract", o.extract, "extract one signature per annotation of --volume");
  tip->add_option("--volume", o.volume, "source volume for --extract");
  tip->add_option("--sigs", o.sigs, "signature directory");
  tip->add_option("--threshold", o.threshold, "extraction threshold");
  tip->add_option("--target", o.target, "target volume to project into");
  tip->add_option("--name", o.name, "signature name (default: all in --sigs)");
  tip->add_option("--output", o.output, "composited output volume");
  auto* split = app.add_subcommand("split", "assign train/test splits");
  split->add_option("--ratio", o.ratio, "train fraction");
  split->add_option("--seeds", o.seeds, "number of random splits");
  app.add_subcommand("train", "train a detector on a split");
  auto* detect = app.add_subcommand("detect", "run a trained detector on the test volumes of a split");
  detect->add_option("--checkpoint", o.checkpoint, "checkpoint (default <out>/model.bdck)");
  detect->add_option("--detections", o.detections, "output file (default <out>/detections.txt)");
  auto* eval = app.add_subcommand("eval", "evaluate detections against the test split");
  eval->add_option("--detections", o.detections, "detections file (default <out>/detections.txt)");
  auto* sweep = app.add_subcommand("sweep", "run an ablation grid over all splits");
  sweep->add_option("--table", o.table, "backbone | aug | scale | energy")->required();
  auto* render = app.add_subcommand("render", "write mid-slice images with boxes");
  render->add_option("--volume", o.volume, "volume to render")->required();
  render->add_option("--detections", o.detections, "detections file to overlay");
  render->add_option("--volume-id", o.volume_id, "volume id inside the detections file");
  render->add_option("--zoom", o.zoom, "pixel magnification")->check(CLI::Range(1, 32));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    apply_workers_env();
    const ExperimentConfig cfg = build_config(o);
    return dispatch(cmd, cfg, o, out);
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace baggagedet::app
