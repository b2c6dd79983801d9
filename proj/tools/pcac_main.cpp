#include <cmath>
#include <cstdio>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcac/chamfer.hpp"
#include "pcac/codec.hpp"
#include "pcac/dataset.hpp"
#include "pcac/errors.hpp"
#include "pcac/factorized_density.hpp"
#include "pcac/geometry_io.hpp"
#include "pcac/gradcheck.hpp"
#include "pcac/metrics.hpp"
#include "pcac/model_io.hpp"
#include "pcac/network.hpp"
#include "pcac/quantization.hpp"
#include "pcac/sampling.hpp"
#include "pcac/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pcac;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json manifest_base(const std::string& command, int argc, char** argv) {
  json j;
  j["tool"] = "pcac";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["argv"] = json::array();
  for (int i = 0; i < argc; ++i) j["argv"].push_back(argv[i]);
  j["started_utc"] = utc_now();
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError(path.string() + ": write failed");
}

void finish_manifest(json& j, const fs::path& path) {
  j["finished_utc"] = utc_now();
  write_text(path, j.dump(2) + "\n");
}

/// Training view of a dataset: each cloud normalized to the unit sphere,
/// farthest-point sampled down to the tier size, then expanded.
std::vector<DatasetEntry> prepare_training_items(const std::vector<DatasetEntry>& raw,
                                                 std::size_t tier_points, double expansion) {
  std::vector<DatasetEntry> items;
  items.reserve(raw.size());
  for (const DatasetEntry& entry : raw) {
    try {
      PointCloud normalized;
      normalize_unit_sphere(entry.cloud, normalized);
      SampleSpec spec;
      spec.target_count = tier_points;
      PointCloud sampled = farthest_point_sample(normalized, spec).second;
      items.push_back({entry.name, apply_expansion(sampled, expansion)});
    } catch (const DataError& e) {
      throw DataError(entry.name + ": " + e.what());
    }
  }
  return items;
}

CloudFormat parse_output_format(const std::string& name) {
  if (name == "ply") return CloudFormat::kPlyBinaryLE;
  if (name == "ply-ascii") return CloudFormat::kPlyAscii;
  if (name == "xyz") return CloudFormat::kXyzText;
  throw UsageError("unknown output format: " + name);
}

bool is_cloud_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".ply" || ext == ".xyz" || ext == ".txt";
}

/// Returns the files a file-or-directory input stands for, sorted by name.
std::vector<fs::path> expand_inputs(const fs::path& in, bool (*accept)(const fs::path&),
                                    const char* what) {
  if (fs::is_directory(in)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in)) {
      if (e.is_regular_file() && accept(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError(in.string() + ": no " + what + " files found");
    return files;
  }
  if (!fs::exists(in)) throw DataError(in.string() + ": no such file or directory");
  return {in};
}

// ---------------------------------------------------------------- synth ----

struct SynthOpts {
  std::string kind = "mixed";
  std::size_t count = 10;
  std::size_t points = 2048;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthOpts& o, int argc, char** argv) {
  json manifest = manifest_base("synth", argc, argv);
  manifest["flags"] = {{"kind", o.kind}, {"count", o.count}, {"points", o.points},
                       {"seed", o.seed}, {"out", o.out}};
  SynthSpec spec;
  spec.kind = o.kind;
  spec.count = o.count;
  spec.points = o.points;
  spec.seed = o.seed;
  const SynthSummary summary = synthesize_dataset(o.out, spec);
  manifest["artifacts"] = {{"dataset", o.out},
                           {"split_manifest", (fs::path(o.out) / "dataset.json").string()}};
  manifest["result"] = {{"train_clouds", summary.n_train}, {"test_clouds", summary.n_test}};
  finish_manifest(manifest, fs::path(o.out) / "manifest.json");
  std::printf("synthesized %zu train / %zu test clouds under %s\n", summary.n_train,
              summary.n_test, o.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainOpts {
  std::string data;
  std::string out;
  std::size_t tier = 2048;
  double lambda = 1e4;
  std::size_t epochs = 0;  // 0 = auto by entropy setting
  double lr = 5e-4;
  std::size_t batch = 8;
  std::string entropy = "on";
  std::string quantizer = "noise";
  bool chamfer_sums = false;
  double expansion = 1023.0;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 100;
};

int run_train(const TrainOpts& o, int argc, char** argv) {
  const bool entropy_on = o.entropy == "on";
  const ArchitectureConfig arch = tier_config(o.tier);

  TrainConfig cfg;
  cfg.epochs = o.epochs != 0 ? o.epochs : (entropy_on ? 1200 : 500);
  cfg.batch_size = o.batch;
  cfg.learning_rate = o.lr;
  cfg.lambda = o.lambda;
  cfg.entropy_model = entropy_on;
  cfg.quantizer = parse_quantizer_mode(o.quantizer);
  cfg.chamfer_per_point = !o.chamfer_sums;
  cfg.seed = o.seed;
  cfg.checkpoint_every = o.checkpoint_every;

  fs::create_directories(o.out);
  const fs::path model_path = fs::path(o.out) / "model.pcae";
  const fs::path log_path = fs::path(o.out) / "train_log.csv";
  cfg.log_path = log_path.string();
  cfg.checkpoint_path = model_path.string();

  json manifest = manifest_base("train", argc, argv);
  manifest["flags"] = {{"data", o.data},           {"out", o.out},
                       {"tier", o.tier},           {"lambda", o.lambda},
                       {"epochs", cfg.epochs},     {"lr", cfg.learning_rate},
                       {"batch", cfg.batch_size},  {"entropy", o.entropy},
                       {"quantizer", o.quantizer}, {"chamfer_sums", o.chamfer_sums},
                       {"expansion", o.expansion}, {"seed", o.seed},
                       {"checkpoint_every", o.checkpoint_every}};
  manifest["seed"] = o.seed;

  ModelParameters model = init_parameters(arch, o.seed);
  const std::vector<DatasetEntry> raw = load_split(o.data, "train");
  const std::vector<DatasetEntry> items =
      prepare_training_items(raw, arch.input_points, o.expansion);
  const TrainLog log = train(model, items, cfg);

  manifest["artifacts"] = {{"model", model_path.string()}, {"log", log_path.string()}};
  const EpochStats& last = log.epochs.back();
  manifest["result"] = {{"epochs_run", log.epochs.size()},
                        {"final_loss", last.loss},
                        {"final_distortion", last.distortion},
                        {"final_rate_bits", last.rate_bits}};
  finish_manifest(manifest, fs::path(o.out) / "manifest.json");
  std::printf("trained tier %zu on %zu clouds for %zu epochs: loss %.6g, distortion %.6g, "
              "rate %.6g bits\n",
              o.tier, items.size(), log.epochs.size(), last.loss, last.distortion,
              last.rate_bits);
  return 0;
}

// ------------------------------------------------------------- compress ----

struct CompressOpts {
  std::string model;
  std::string in;
  std::string out;
  std::size_t tier = 0;  // 0 = take the model's tier
  double expansion = 1023.0;
  bool include_header = false;
};

int run_compress(const CompressOpts& o, int argc, char** argv) {
  ModelParameters model = load_model(o.model);
  if (o.tier != 0 && o.tier != model.config.input_points) {
    throw UsageError("--tier " + std::to_string(o.tier) + " does not match the model's tier " +
                     std::to_string(model.config.input_points));
  }
  const std::vector<fs::path> inputs = expand_inputs(o.in, is_cloud_file, "point-cloud");
  const bool batch = fs::is_directory(o.in);
  if (batch) fs::create_directories(o.out);

  json manifest = manifest_base("compress", argc, argv);
  manifest["flags"] = {{"model", o.model},       {"in", o.in},
                       {"out", o.out},           {"tier", model.config.input_points},
                       {"expansion", o.expansion}, {"include_header", o.include_header}};
  json files = json::array();

  for (const fs::path& path : inputs) {
    const PointCloud cloud = read_point_cloud(path);
    CompressStats stats;
    const CompressedObject obj = compress(cloud, model, o.expansion, &stats);
    const fs::path out_path =
        batch ? fs::path(o.out) / path.filename().replace_extension(".pcc") : fs::path(o.out);
    save_bitstream(obj, out_path.string());
    const double bpp = measure_bpp(obj, cloud.size(), o.include_header);
    std::printf("%s: %zu points -> %zu payload bytes, %.4f bpp (table estimate %.1f bits)\n",
                path.filename().string().c_str(), cloud.size(), stats.payload_bytes, bpp,
                stats.table_bits);
    files.push_back({{"in", path.string()},
                     {"out", out_path.string()},
                     {"points", cloud.size()},
                     {"payload_bytes", stats.payload_bytes},
                     {"bpp", bpp}});
  }
  manifest["artifacts"] = {{"files", files}};
  const fs::path manifest_path =
      batch ? fs::path(o.out) / "manifest.json" : fs::path(o.out + ".manifest.json");
  finish_manifest(manifest, manifest_path);
  return 0;
}

// ----------------------------------------------------------- decompress ----

struct DecompressOpts {
  std::string model;
  std::string in;
  std::string out;
  std::string format = "ply";
  bool source_units = false;
};

bool is_pcc_file(const fs::path& p) { return p.extension() == ".pcc"; }

int run_decompress(const DecompressOpts& o, int argc, char** argv) {
  ModelParameters model = load_model(o.model);
  const CloudFormat format = parse_output_format(o.format);
  const std::vector<fs::path> inputs = expand_inputs(o.in, is_pcc_file, "bitstream");
  const bool batch = fs::is_directory(o.in);
  if (batch) fs::create_directories(o.out);
  const char* ext = format == CloudFormat::kXyzText ? ".xyz" : ".ply";

  json manifest = manifest_base("decompress", argc, argv);
  manifest["flags"] = {{"model", o.model},
                       {"in", o.in},
                       {"out", o.out},
                       {"format", o.format},
                       {"source_units", o.source_units}};
  json files = json::array();

  for (const fs::path& path : inputs) {
    const CompressedObject obj = load_bitstream(path.string());
    PointCloud cloud = decompress(obj, model);
    if (o.source_units) cloud = to_source_units(cloud, obj.transform);
    const fs::path out_path =
        batch ? fs::path(o.out) / path.filename().replace_extension(ext) : fs::path(o.out);
    write_point_cloud(cloud, out_path, format);
    std::printf("%s: %u points -> %s\n", path.filename().string().c_str(), obj.point_count,
                out_path.string().c_str());
    files.push_back({{"in", path.string()}, {"out", out_path.string()}});
  }
  manifest["artifacts"] = {{"files", files}};
  const fs::path manifest_path =
      batch ? fs::path(o.out) / "manifest.json" : fs::path(o.out + ".manifest.json");
  finish_manifest(manifest, manifest_path);
  return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalOpts {
  std::vector<std::string> model_sets;  // label=path[@lambda],path[@lambda],...
  std::string data;
  std::string split = "test";
  std::string baseline = "none";
  std::vector<std::size_t> grid_cells = {16, 32, 64, 128};
  double expansion = 1023.0;
  bool include_header = false;
  bool per_point_bpp = false;
  bool distortion_mean = false;
  std::string out;
};

struct ParsedSet {
  std::string label;
  std::vector<std::pair<std::string, double>> entries;  // path, lambda
};

ParsedSet parse_model_set(const std::string& text) {
  const std::size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size()) {
    throw UsageError("--model-set needs the form label=path[@lambda][,path[@lambda]...]: " +
                     text);
  }
  ParsedSet set;
  set.label = text.substr(0, eq);
  std::size_t pos = eq + 1;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(pos, comma - pos);
    if (item.empty()) throw UsageError("--model-set has an empty entry: " + text);
    double lambda = 0.0;
    const std::size_t at = item.rfind('@');
    if (at != std::string::npos) {
      try {
        lambda = std::stod(item.substr(at + 1));
      } catch (const std::exception&) {
        throw UsageError("--model-set: bad lambda in '" + item + "'");
      }
      item = item.substr(0, at);
    }
    set.entries.emplace_back(item, lambda);
    pos = comma + 1;
  }
  return set;
}

int run_eval(const EvalOpts& o, int argc, char** argv) {
  if (o.model_sets.empty() && o.baseline == "none") {
    throw UsageError("eval needs at least one --model-set or --baseline grid");
  }
  const std::vector<DatasetEntry> clouds = load_split(o.data, o.split);

  SweepOptions opt;
  opt.expansion = o.expansion;
  opt.include_header = o.include_header;
  opt.per_reconstructed_point = o.per_point_bpp;
  opt.distortion_mean = o.distortion_mean;

  json manifest = manifest_base("eval", argc, argv);
  manifest["flags"] = {{"model_sets", o.model_sets},
                       {"data", o.data},
                       {"split", o.split},
                       {"baseline", o.baseline},
                       {"grid_cells", o.grid_cells},
                       {"expansion", o.expansion},
                       {"include_header", o.include_header},
                       {"per_point_bpp", o.per_point_bpp},
                       {"distortion_mean", o.distortion_mean},
                       {"out", o.out}};

  // Loaded models must outlive the sweep; a deque keeps pointers stable.
  std::deque<ModelParameters> loaded;
  std::vector<RDCurve> curves;
  std::vector<std::string> warnings;
  for (const std::string& text : o.model_sets) {
    const ParsedSet set = parse_model_set(text);
    std::vector<SweepModel> models;
    for (const auto& [path, lambda] : set.entries) {
      loaded.push_back(load_model(path));
      models.push_back({lambda, &loaded.back()});
    }
    curves.push_back(rd_sweep(set.label, models, clouds, opt, &warnings));
  }
  if (o.baseline == "grid") {
    curves.push_back(grid_baseline_curve("grid", o.grid_cells, clouds, opt));
  } else if (o.baseline != "none") {
    throw UsageError("--baseline must be grid or none, got " + o.baseline);
  }
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  const std::string csv = rd_csv(curves);
  write_text(o.out, csv);
  std::printf("wrote %s (%zu curves over %zu clouds)\n", o.out.c_str(), curves.size(),
              clouds.size());

  json bd = json::array();
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t j = 0; j < curves.size(); ++j) {
      if (i == j) continue;
      try {
        const double rate = bd_rate(curves[i], curves[j]);
        std::printf("BD-rate %s vs %s: %+.2f%%\n", curves[j].label.c_str(),
                    curves[i].label.c_str(), rate);
        bd.push_back({{"anchor", curves[i].label}, {"test", curves[j].label}, {"percent", rate}});
      } catch (const DataError&) {
        // Too few points or disjoint quality ranges; nothing to report.
      }
    }
  }
  manifest["artifacts"] = {{"csv", o.out}};
  manifest["result"] = {{"bd_rate", bd}, {"warnings", warnings}};
  finish_manifest(manifest, fs::path(o.out + ".manifest.json"));
  return 0;
}

// -------------------------------------------------------------- fdcheck ----

struct FdCheckOpts {
  std::uint64_t seed = 0;
  std::string out;  // optional report + manifest directory
};

Tensor random_tensor(const std::vector<std::size_t>& shape, std::mt19937_64& rng, double lo,
                     double hi) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.data) v = u(rng);
  return t;
}

struct FdRow {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t excluded = 0;
};

/// Checks d(weighted sum of op(x))/dx against central differences. `build`
/// maps a tape and the input Var to the op's output Var.
FdRow check_primitive(const std::string& name, const Tensor& x0, const Tensor& weights,
                      const std::function<Var(Tape&, Var)>& build, double step = 1e-6) {
  const auto value_fn = [&](const Tensor& x) {
    Tape t;
    const Var out = build(t, t.input(x));
    const Var w = t.constant(weights);
    return t.value(t.sum(t.mul(out, w))).data[0];
  };
  Tape t;
  const Var in = t.input(x0);
  const Var out = build(t, in);
  const Var loss = t.sum(t.mul(out, t.constant(weights)));
  t.backward(loss);
  const FdResult r = finite_difference_check(value_fn, t.grad(in), x0, step);
  return {name, r.max_rel_err, r.excluded.size()};
}

/// Like check_primitive but compares the directional derivative along one
/// random direction instead of per-coordinate slopes. Long compositions have
/// coordinates whose true gradient sits below the finite-difference noise
/// floor; the projection keeps the comparison at the gradient's typical scale.
FdRow check_directional(const std::string& name, const Tensor& x0, const Tensor& weights,
                        const std::function<Var(Tape&, Var)>& build, std::mt19937_64& rng,
                        double step = 1e-6) {
  Tensor dir(x0.shape);
  std::normal_distribution<double> n(0.0, 1.0);
  double norm = 0.0;
  for (double& v : dir.data) {
    v = n(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : dir.data) v /= norm;

  const auto value_at = [&](double s) {
    Tensor x = x0;
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] += s * dir.data[i];
    Tape t;
    const Var out = build(t, t.input(x));
    return t.value(t.sum(t.mul(out, t.constant(weights)))).data[0];
  };

  Tape t;
  const Var in = t.input(x0);
  const Var out = build(t, in);
  t.backward(t.sum(t.mul(out, t.constant(weights))));
  const Tensor& g = t.grad(in);
  double analytic = 0.0;
  for (std::size_t i = 0; i < g.data.size(); ++i) analytic += g.data[i] * dir.data[i];

  const auto value_fn = [&](const Tensor& sv) { return value_at(sv.data[0]); };
  const FdResult r = finite_difference_check(value_fn, Tensor({1}, {analytic}),
                                             Tensor({1}, {0.0}), step);
  return {name, r.max_rel_err, r.excluded.size()};
}

int run_fdcheck(const FdCheckOpts& o, int argc, char** argv) {
  std::mt19937_64 rng(o.seed);
  std::vector<FdRow> rows;

  {
    const Tensor x = random_tensor({12}, rng, -2.0, 2.0);
    const Tensor w = random_tensor({12}, rng, -1.0, 1.0);
    rows.push_back(check_primitive("relu", x, w, [](Tape& t, Var v) { return t.relu(v); }));
    rows.push_back(check_primitive("tanh", x, w, [](Tape& t, Var v) { return t.tanh(v); }));
    rows.push_back(
        check_primitive("softplus", x, w, [](Tape& t, Var v) { return t.softplus(v); }));
    rows.push_back(
        check_primitive("sigmoid", x, w, [](Tape& t, Var v) { return t.sigmoid(v); }));
    const Tensor other = random_tensor({12}, rng, -2.0, 2.0);
    rows.push_back(check_primitive("add/sub/mul", x, w, [&](Tape& t, Var v) {
      const Var c = t.constant(other);
      return t.mul(t.add(v, c), t.sub(v, c));
    }));
    rows.push_back(check_primitive("scale/reshape", x, w, [](Tape& t, Var v) {
      return t.reshape(t.scale(t.reshape(v, {3, 4}), 1.7, 0.3), {12});
    }));
  }
  {
    const Tensor x = random_tensor({4, 3}, rng, -2.0, 2.0);
    const Tensor lw = random_tensor({3, 5}, rng, -1.0, 1.0);
    const Tensor lb = random_tensor({5}, rng, -1.0, 1.0);
    const Tensor w = random_tensor({4, 5}, rng, -1.0, 1.0);
    rows.push_back(check_primitive("linear(x)", x, w, [&](Tape& t, Var v) {
      return t.linear(v, t.constant(lw), t.constant(lb));
    }));
    rows.push_back(check_primitive("linear(w)", lw, w, [&](Tape& t, Var v) {
      return t.linear(t.constant(x), v, t.constant(lb));
    }));
  }
  {
    const Tensor x = random_tensor({6, 4}, rng, -2.0, 2.0);
    const Tensor gamma = random_tensor({4}, rng, 0.5, 1.5);
    const Tensor beta = random_tensor({4}, rng, -0.5, 0.5);
    const Tensor w = random_tensor({6, 4}, rng, -1.0, 1.0);
    // Fresh running stats per evaluation, kept alive past the tape's forward
    // pass (batch_norm updates them through a reference).
    std::deque<std::pair<Tensor, Tensor>> stats;
    rows.push_back(check_primitive("batch_norm(x)", x, w, [&](Tape& t, Var v) {
      stats.emplace_back(Tensor({4}), Tensor({4}, std::vector<double>(4, 1.0)));
      return t.batch_norm(v, t.constant(gamma), t.constant(beta), stats.back().first,
                          stats.back().second, true);
    }));
    rows.push_back(check_primitive("max_pool(x)", x,
                                   random_tensor({4}, rng, -1.0, 1.0),
                                   [](Tape& t, Var v) { return t.max_pool_points(v); }));
  }
  {
    const Tensor cw = random_tensor({6, 2, 3}, rng, -1.0, 1.0);
    const Tensor cx = random_tensor({6, 3}, rng, -2.0, 2.0);
    const Tensor w = random_tensor({6, 2}, rng, -1.0, 1.0);
    rows.push_back(check_primitive("channel_linear(x)", cx, w, [&](Tape& t, Var v) {
      return t.channel_linear(t.constant(cw), v);
    }));
    const Tensor pos = random_tensor({10}, rng, 0.05, 3.0);
    rows.push_back(check_primitive("log(clamp_min)", pos,
                                   random_tensor({10}, rng, -1.0, 1.0), [](Tape& t, Var v) {
                                     return t.log(t.clamp_min(v, 1e-3));
                                   }));
  }
  {
    const Tensor a = random_tensor({8, 3}, rng, -1.0, 1.0);
    const Tensor b = random_tensor({7, 3}, rng, -1.0, 1.0);
    rows.push_back(check_primitive("chamfer(a)", a, Tensor({1}, {1.0}), [&](Tape& t, Var v) {
      return chamfer_op(t, v, t.constant(b));
    }));
  }
  {
    std::mt19937_64 drng(o.seed + 1);
    FactorizedDensity density(6, drng);
    const Tensor zhat = random_tensor({6}, rng, -4.0, 4.0);
    rows.push_back(
        check_primitive("rate_bits(zhat)", zhat, Tensor({1}, {1.0}),
                        [&](Tape& t, Var v) { return density.rate_bits_op(t, v); }));
  }
  {
    // End-to-end analysis/synthesis composite on a small architecture.
    ArchitectureConfig cfg;
    cfg.input_points = 12;
    cfg.latent_dim = 4;
    cfg.encoder_widths = {8, 4};
    cfg.decoder_widths = {8, 36};
    const ModelParameters proto = init_parameters(cfg, o.seed + 2);
    const Tensor pts = random_tensor({12, 3}, rng, -1.0, 1.0);
    const Tensor target = random_tensor({12, 3}, rng, -1.0, 1.0);
    // One fresh model copy per evaluation (clean running stats), stored where
    // it outlives the tape that references its parameters.
    std::deque<ModelParameters> copies;
    for (const bool train_mode : {false, true}) {
      const std::string label = train_mode ? "encoder-decoder(train)" : "encoder-decoder(infer)";
      const auto build = [&, train_mode](Tape& t, Var v) {
        copies.push_back(proto);
        const Var z = encode_op(t, copies.back(), v, train_mode);
        const Var rec = decode_op(t, copies.back(), z, train_mode);
        return chamfer_op(t, t.reshape(rec, {12, 3}), t.constant(target));
      };
      rows.push_back(train_mode
                         ? check_directional(label, pts, Tensor({1}, {1.0}), build, rng)
                         : check_primitive(label, pts, Tensor({1}, {1.0}), build));
    }
  }

  constexpr double kThreshold = 1e-4;
  std::string report = "primitive                    max_rel_err  excluded  status\n";
  bool all_ok = true;
  for (const FdRow& row : rows) {
    const bool ok = row.max_rel_err < kThreshold;
    all_ok = all_ok && ok;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-28s %11.3e  %8zu  %s\n", row.name.c_str(),
                  row.max_rel_err, row.excluded, ok ? "pass" : "FAIL");
    report += buf;
  }
  report += all_ok ? "all gradients match finite differences below 1e-4\n"
                   : "gradient check FAILED\n";
  std::fputs(report.c_str(), stdout);

  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "fdcheck_report.txt", report);
    json manifest = manifest_base("fdcheck", argc, argv);
    manifest["flags"] = {{"seed", o.seed}, {"out", o.out}};
    manifest["artifacts"] = {{"report", (fs::path(o.out) / "fdcheck_report.txt").string()}};
    json jrows = json::array();
    for (const FdRow& row : rows) {
      jrows.push_back({{"name", row.name},
                       {"max_rel_err", row.max_rel_err},
                       {"excluded", row.excluded}});
    }
    manifest["result"] = {{"rows", jrows}, {"pass", all_ok}};
    finish_manifest(manifest, fs::path(o.out) / "manifest.json");
  }
  if (!all_ok) throw NumericError("fdcheck: at least one primitive exceeded 1e-4");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rate-distortion optimized point-cloud geometry codec"};
  app.require_subcommand(1);

  SynthOpts synth;
  CLI::App* cmd_synth = app.add_subcommand("synth", "generate a synthetic shape dataset");
  cmd_synth->add_option("--kind", synth.kind, "sphere|box|torus|composite|mixed")
      ->capture_default_str();
  cmd_synth->add_option("--count", synth.count, "number of clouds")->capture_default_str();
  cmd_synth->add_option("--points", synth.points, "points per cloud")->capture_default_str();
  cmd_synth->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  cmd_synth->add_option("--out", synth.out, "dataset directory")->required();

  TrainOpts train_o;
  CLI::App* cmd_train = app.add_subcommand("train", "train a codec model");
  cmd_train->add_option("--data", train_o.data, "dataset directory (train/ split)")->required();
  cmd_train->add_option("--out", train_o.out, "output directory")->required();
  cmd_train->add_option("--tier", train_o.tier, "input point tier: 2048|1024|512|256|128")
      ->capture_default_str();
  cmd_train->add_option("--lambda", train_o.lambda, "distortion weight")->capture_default_str();
  cmd_train->add_option("--epochs", train_o.epochs,
                        "0 = auto (1200 with entropy model, 500 without)")
      ->capture_default_str();
  cmd_train->add_option("--lr", train_o.lr, "Adam learning rate")->capture_default_str();
  cmd_train->add_option("--batch", train_o.batch, "mini-batch size")->capture_default_str();
  cmd_train->add_option("--entropy", train_o.entropy, "on|off: model the latent rate")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cmd_train->add_option("--quantizer", train_o.quantizer, "noise|ste|round")
      ->capture_default_str();
  cmd_train->add_flag("--chamfer-sums", train_o.chamfer_sums,
                      "use raw Chamfer sums instead of per-point means");
  cmd_train->add_option("--expansion", train_o.expansion, "post-normalization scale")
      ->capture_default_str();
  cmd_train->add_option("--seed", train_o.seed, "init/shuffle/noise seed")
      ->capture_default_str();
  cmd_train->add_option("--checkpoint-every", train_o.checkpoint_every,
                        "epochs between checkpoint writes")
      ->capture_default_str();

  CompressOpts comp;
  CLI::App* cmd_compress = app.add_subcommand("compress", "encode clouds to .pcc bitstreams");
  cmd_compress->add_option("--model", comp.model, "model file")->required();
  cmd_compress->add_option("--in", comp.in, "cloud file or directory")->required();
  cmd_compress->add_option("--out", comp.out, "output file or directory")->required();
  cmd_compress->add_option("--tier", comp.tier, "cross-check against the model's tier")
      ->capture_default_str();
  cmd_compress->add_option("--expansion", comp.expansion, "post-normalization scale")
      ->capture_default_str();
  cmd_compress->add_flag("--include-header", comp.include_header,
                         "charge header bytes in reported bpp");

  DecompressOpts dec;
  CLI::App* cmd_decompress =
      app.add_subcommand("decompress", "decode .pcc bitstreams to clouds");
  cmd_decompress->add_option("--model", dec.model, "model file")->required();
  cmd_decompress->add_option("--in", dec.in, "bitstream file or directory")->required();
  cmd_decompress->add_option("--out", dec.out, "output file or directory")->required();
  cmd_decompress->add_option("--format", dec.format, "ply|ply-ascii|xyz")
      ->capture_default_str();
  cmd_decompress->add_flag("--source-units", dec.source_units,
                           "map output back to the input's units");

  EvalOpts eval_o;
  CLI::App* cmd_eval = app.add_subcommand("eval", "rate-distortion evaluation");
  cmd_eval->add_option("--model-set", eval_o.model_sets,
                       "label=path[@lambda],... (repeatable; one curve per set)");
  cmd_eval->add_option("--data", eval_o.data, "dataset directory")->required();
  cmd_eval->add_option("--split", eval_o.split, "dataset split to use")->capture_default_str();
  cmd_eval->add_option("--baseline", eval_o.baseline, "grid|none")->capture_default_str();
  cmd_eval->add_option("--grid-cells", eval_o.grid_cells, "grid baseline cell sweep")
      ->capture_default_str();
  cmd_eval->add_option("--expansion", eval_o.expansion, "post-normalization scale")
      ->capture_default_str();
  cmd_eval->add_flag("--include-header", eval_o.include_header,
                     "charge header bytes in bpp");
  cmd_eval->add_flag("--per-point-bpp", eval_o.per_point_bpp,
                     "divide bits by reconstructed instead of original points");
  cmd_eval->add_flag("--distortion-mean", eval_o.distortion_mean,
                     "average MSE before the dB conversion");
  cmd_eval->add_option("--out", eval_o.out, "CSV output path")->required();

  FdCheckOpts fd;
  CLI::App* cmd_fdcheck =
      app.add_subcommand("fdcheck", "finite-difference check of every gradient primitive");
  cmd_fdcheck->add_option("--seed", fd.seed, "probe seed")->capture_default_str();
  cmd_fdcheck->add_option("--out", fd.out, "optional report/manifest directory");

  int threads = 1;
  app.add_option("--threads", threads,
                 "worker cap (reserved; current pipeline is single-threaded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(cmd_synth)) return run_synth(synth, argc, argv);
    if (app.got_subcommand(cmd_train)) return run_train(train_o, argc, argv);
    if (app.got_subcommand(cmd_compress)) return run_compress(comp, argc, argv);
    if (app.got_subcommand(cmd_decompress)) return run_decompress(dec, argc, argv);
    if (app.got_subcommand(cmd_eval)) return run_eval(eval_o, argc, argv);
    if (app.got_subcommand(cmd_fdcheck)) return run_fdcheck(fd, argc, argv);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
