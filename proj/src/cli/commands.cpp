#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "pelab/atw.hpp"
#include "pelab/corpora.hpp"
#include "pelab/encodings.hpp"
#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"
#include "pelab/metrics.hpp"
#include "pelab/posattn.hpp"
#include "pelab/probes.hpp"
#include "pelab/shuffler.hpp"

namespace pelab::cli {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void emit(const std::string& path, const std::string& text, Context& ctx) {
  if (path.empty()) {
    ctx.out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(' ');
    const auto last = item.find_last_not_of(' ');
    if (first == std::string::npos) throw ValidationError(flag + ": empty list item");
    const std::string trimmed = item.substr(first, last - first + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
    if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
      throw ValidationError(flag + ": cannot parse '" + trimmed + "' as a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(flag + ": empty list");
  return out;
}

ordered_json report_json(const metrics::MetricReport& r) {
  ordered_json j;
  j["n"] = r.n;
  j["scope"] = r.scope;
  if (r.layer) j["layer"] = *r.layer;
  if (r.head) j["head"] = *r.head;
  j["locality"] = r.locality;
  j["symmetry"] = r.symmetry;
  j["per_row_locality"] = r.per_row_locality;
  auto rows = ordered_json::array();
  for (const auto& [i, v] : r.per_row_symmetry) rows.push_back(ordered_json::array({i, v}));
  j["per_row_symmetry"] = std::move(rows);
  j["flat_nonzero_rows"] = r.flat_nonzero_rows;
  return j;
}

void warn_flat(const metrics::MetricReport& r, Context& ctx) {
  if (r.flat_nonzero_rows > 0) {
    ctx.err << "warning: " << r.flat_nonzero_rows
            << " row(s) have equal nonzero mirrored discrepancies; scored as symmetry 1\n";
  }
}

std::vector<AttentionTensor> load_tensors(const std::vector<std::string>& inputs,
                                          const std::string& index) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  if (!index.empty()) {
    auto listed = load_atw_index(index);
    paths.insert(paths.end(), listed.begin(), listed.end());
  }
  if (paths.empty()) throw ValidationError("no attention dumps given (--input or --index)");
  std::vector<AttentionTensor> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_atw(p));
  return out;
}

ordered_json config_json(const posattn::EncoderConfig& c) {
  ordered_json j;
  j["w"] = c.w;
  j["s"] = c.s;
  j["max_len"] = c.max_len;
  j["dropout_rate"] = c.dropout_rate;
  j["trainable_delta"] = c.trainable_delta;
  j["pool"] = "mean";
  j["num_classes"] = c.num_classes;
  j["lr"] = c.lr;
  j["lr_decay"] = c.lr_decay;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["runs"] = c.runs;
  j["optimizer"] = "adam(0.9, 0.999, 1e-8)";
  j["oov"] = "zero vector";
  return j;
}

ordered_json train_json(const posattn::TrainResult& r) {
  ordered_json j;
  j["config"] = config_json(r.config);
  j["locality"] = r.locality;
  j["symmetry"] = r.symmetry;
  auto runs = ordered_json::array();
  for (const auto& run : r.runs) {
    ordered_json e;
    e["seed"] = run.seed;
    e["best_dev_accuracy"] = run.best_dev_accuracy;
    e["best_epoch"] = run.best_epoch;
    e["test_accuracy"] = run.test_accuracy;
    runs.push_back(std::move(e));
  }
  j["runs"] = std::move(runs);
  j["mean_test_accuracy"] = r.mean_test_accuracy;
  j["std_test_accuracy"] = r.std_test_accuracy;
  return j;
}

struct EncoderData {
  posattn::Splits splits;
  int num_classes = 2;
  std::string source;
};

int max_label(const LabeledDataset& d) {
  int m = -1;
  for (const auto& e : d.examples) m = std::max(m, e.label);
  return m;
}

EncoderData load_encoder_data(const EncoderOptions& o) {
  LabeledDataset train, dev, test;
  EmbeddingTable table;
  std::string source;
  if (o.synthetic) {
    auto task = posattn::make_synthetic_task({});
    if (!o.synthetic_out.empty()) {
      const fs::path dir(o.synthetic_out);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
      save_dataset(task.train, dir / "train.tsv");
      save_dataset(task.dev, dir / "dev.tsv");
      save_dataset(task.test, dir / "test.tsv");
      save_embeddings(task.embeddings, dir / "embeddings.txt");
    }
    train = std::move(task.train);
    dev = std::move(task.dev);
    test = std::move(task.test);
    table = std::move(task.embeddings);
    source = "synthetic";
  } else {
    if (o.train.empty() || o.dev.empty() || o.test.empty() || o.embeddings.empty()) {
      throw ValidationError("need --train, --dev, --test and --embeddings, or --synthetic");
    }
    train = load_dataset(o.train);
    dev = load_dataset(o.dev);
    test = load_dataset(o.test);
    std::unordered_set<std::string> vocab;
    for (const auto* d : {&train, &dev, &test}) {
      for (const auto& e : d->examples) vocab.insert(e.tokens.begin(), e.tokens.end());
    }
    table = load_glove(o.embeddings, &vocab);
    source = o.train;
  }
  EncoderData data;
  data.num_classes = std::max({max_label(train), max_label(dev), max_label(test), 1}) + 1;
  data.splits.train = posattn::embed_dataset(train, table, o.max_len, data.num_classes);
  data.splits.dev = posattn::embed_dataset(dev, table, o.max_len, data.num_classes);
  data.splits.test = posattn::embed_dataset(test, table, o.max_len, data.num_classes);
  data.source = source;
  return data;
}

posattn::EncoderConfig encoder_config(const EncoderOptions& o, int num_classes, Context& ctx) {
  posattn::EncoderConfig c;
  c.w = o.w;
  c.s = o.s;
  c.max_len = o.max_len;
  c.dropout_rate = o.dropout;
  c.trainable_delta = o.trainable_delta;
  c.num_classes = num_classes;
  c.lr = o.lr;
  c.lr_decay = o.lr_decay;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.seed = ctx.seed;
  c.runs = o.runs;
  return c;
}

}  // namespace

int cmd_metrics(const MetricsOptions& o, Context& ctx) {
  const AttentionTensor t = load_atw(o.input);
  const auto reports = metrics::metric_report(t, metrics::parse_scope(o.scope), ctx.jobs);
  for (const auto& r : reports) warn_flat(r, ctx);
  ordered_json j;
  if (reports.size() == 1 && metrics::parse_scope(o.scope) == metrics::Scope::kModelAverage) {
    j = report_json(reports.front());
  } else {
    j = ordered_json::array();
    for (const auto& r : reports) j.push_back(report_json(r));
  }
  emit(o.out, j.dump(2) + "\n", ctx);
  return 0;
}

int cmd_genpe(const GenpeOptions& o, Context& ctx) {
  (void)ctx;
  if (o.out.empty()) throw ValidationError("genpe needs --out");
  WeightMatrix m;
  std::string name;
  if (o.kind == "attenuated") {
    m = encodings::attenuated_weights({o.w, o.s, o.n});
    name = "attenuated w=" + fmt(o.w) + " s=" + fmt(o.s);
  } else {
    encodings::FixedEncodingSpec spec;
    spec.kind = encodings::parse_fixed_kind(o.kind);
    spec.n = o.n;
    spec.d = o.d;
    spec.slope = o.m;
    m = encodings::fixed_weight_matrix(spec);
    name = encodings::to_string(spec.kind);
  }
  save_atw(tensor_from_matrix(m, name), o.out);
  return 0;
}

int cmd_calibrate(const CalibrateOptions& o, Context& ctx) {
  const auto cal = encodings::calibrate_w(o.target_locality, o.s, o.n, o.tol);
  ctx.out << "w=" << fmt(cal.w) << " achieved=" << fmt(cal.achieved)
          << " iterations=" << cal.iterations << "\n";
  if (!o.out.empty()) {
    ordered_json j;
    j["target_locality"] = o.target_locality;
    j["s"] = o.s;
    j["n"] = o.n;
    j["tol"] = o.tol;
    j["w"] = cal.w;
    j["achieved"] = cal.achieved;
    j["iterations"] = cal.iterations;
    write_text_file(o.out, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_probe_identical(const ProbeIdenticalOptions& o, Context& ctx) {
  const auto dumps = load_tensors(o.inputs, o.index);
  const WeightMatrix m = probes::identical_word_aggregate(dumps, ctx.jobs);
  const auto report = metrics::report_for_matrix(m, "model-average");
  warn_flat(report, ctx);
  ordered_json j = report_json(report);
  j["model_name"] = dumps.front().model_name;
  j["dumps"] = dumps.size();
  emit(o.out, j.dump(2) + "\n", ctx);
  if (!o.matrix_out.empty()) save_atw(tensor_from_matrix(m, dumps.front().model_name), o.matrix_out);
  if (!o.heatmap.empty()) probes::render_heatmap(m, o.heatmap, o.scale);
  return 0;
}

int cmd_probe_deps(const ProbeDepsOptions& o, Context& ctx) {
  if (o.conllu.empty()) throw ValidationError("probe-deps needs --conllu");
  const auto tensors = load_tensors(o.inputs, o.index);
  const DepCorpus corpus = load_conllu(o.conllu);
  const auto report = probes::dep_probe(tensors, corpus, o.top_k, ctx.jobs);
  ctx.out << probes::format_table(report);
  if (!o.out.empty()) {
    ordered_json j;
    j["layers"] = report.layers;
    j["heads"] = report.heads;
    j["distance_threshold"] = report.distance_threshold;
    auto rels = ordered_json::array();
    for (const auto& r : report.relations) {
      ordered_json e;
      e["relation"] = r.relation;
      e["best_head"] = ordered_json::array({r.best_layer, r.best_head});
      e["accuracy"] = r.accuracy;
      e["mean_distance"] = r.mean_distance;
      e["support"] = r.support;
      rels.push_back(std::move(e));
    }
    j["per_relation"] = std::move(rels);
    auto opt = [](const std::optional<double>& v) {
      return v ? ordered_json(*v) : ordered_json(nullptr);
    };
    j["short_avg"] = opt(report.short_avg);
    j["long_avg"] = opt(report.long_avg);
    j["macro_avg"] = opt(report.macro_avg);
    write_text_file(o.out, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_shuffle(const ShuffleOptions& o, Context& ctx) {
  if (o.nli.empty()) throw ValidationError("shuffle needs --nli");
  shuffler::ShuffleConfig cfg;
  cfg.mode = shuffler::parse_mode(o.mode);
  cfg.x = o.x;
  cfg.seed = ctx.seed;
  if (!o.tags.empty()) {
    cfg.phrase_tags.clear();
    std::istringstream ss(o.tags);
    std::string tag;
    while (std::getline(ss, tag, ',')) {
      if (!tag.empty()) cfg.phrase_tags.insert(tag);
    }
  }
  if (!o.aux_file.empty()) cfg.aux_verbs = shuffler::load_word_list(o.aux_file);
  if (!o.case_map_file.empty()) cfg.case_map = shuffler::CaseMap::load(o.case_map_file);
  cfg.validate();

  const auto lines = shuffler::load_nli_jsonl(o.nli);
  shuffler::Annotations ann;
  if (cfg.mode == shuffler::Mode::kConstituency) {
    if (o.trees.empty()) throw ValidationError("constituency mode needs --trees");
    ann.premise_trees = load_tree_file(o.trees);
  } else {
    if (o.srl.empty()) throw ValidationError("semantic-role mode needs --srl");
    ann.premise_srl = load_srl_jsonl(o.srl);
    if (!o.srl_hyp.empty()) ann.hypothesis_srl = load_srl_jsonl(o.srl_hyp);
  }
  const auto result = shuffler::build_dataset(lines, ann, cfg, ctx.jobs);
  emit(o.out, shuffler::to_jsonl(result.pairs), ctx);
  if (!o.stats.empty()) write_text_file(o.stats, shuffler::stats_json(result.stats));
  ctx.err << "emitted " << result.stats.emitted << ", skipped " << result.stats.skipped << "\n";
  return 0;
}

int cmd_train_encoder(const EncoderOptions& o, Context& ctx) {
  EncoderData data = load_encoder_data(o);
  posattn::EncoderConfig cfg = encoder_config(o, data.num_classes, ctx);
  ordered_json calibration;
  if (o.target_locality >= 0.0) {
    const auto cal = encodings::calibrate_w(o.target_locality, o.s, o.max_len, 1e-3);
    cfg.w = cal.w;
    calibration["target_locality"] = o.target_locality;
    calibration["w"] = cal.w;
    calibration["achieved"] = cal.achieved;
  }
  const auto result = posattn::train(cfg, data.splits, ctx.jobs);
  ordered_json j = train_json(result);
  j["data"] = data.source;
  if (!calibration.is_null()) j["calibration"] = calibration;
  emit(o.out, j.dump(2) + "\n", ctx);
  if (!o.out.empty()) {
    ctx.out << "mean test accuracy " << fmt(result.mean_test_accuracy) << " (locality "
            << fmt(result.locality) << ", symmetry " << fmt(result.symmetry) << ")\n";
  }
  return 0;
}

int cmd_sweep(const SweepOptions& o, Context& ctx) {
  if (o.w_grid.empty() == o.target_localities.empty()) {
    throw ValidationError("sweep needs exactly one of --w-grid or --target-localities");
  }
  EncoderData data = load_encoder_data(o.base);
  const posattn::EncoderConfig base = encoder_config(o.base, data.num_classes, ctx);
  const auto s_values = parse_numbers(o.s_grid, "--s-grid");
  std::vector<posattn::SweepPoint> grid;
  if (!o.w_grid.empty()) {
    const auto ws = parse_numbers(o.w_grid, "--w-grid");
    for (double s : s_values) {
      for (double w : ws) grid.push_back({w, s});
    }
  } else {
    const auto targets = parse_numbers(o.target_localities, "--target-localities");
    for (double s : s_values) {
      for (double target : targets) {
        grid.push_back({encodings::calibrate_w(target, s, base.max_len, 1e-3).w, s});
      }
    }
  }
  const auto rows = posattn::sweep(base, grid, data.splits, ctx.jobs);
  emit(o.out_csv, posattn::sweep_csv(rows), ctx);
  if (!o.base.out.empty()) {
    ordered_json j;
    j["data"] = data.source;
    auto arr = ordered_json::array();
    for (const auto& r : rows) arr.push_back(train_json(r.result));
    j["points"] = std::move(arr);
    write_text_file(o.base.out, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_render(const RenderOptions& o, Context& ctx) {
  (void)ctx;
  if (o.out.empty()) throw ValidationError("render needs --out");
  const AttentionTensor t = load_atw(o.input);
  WeightMatrix m;
  if (o.layer >= 0 || o.head >= 0) {
    if (o.layer < 0 || o.head < 0) throw ValidationError("give both --layer and --head");
    const auto l = static_cast<std::size_t>(o.layer);
    const auto h = static_cast<std::size_t>(o.head);
    if (l >= t.layers || h >= t.heads) throw ValidationError("layer/head outside the tensor");
    m = t.masked_slice(l, h);
  } else {
    m = metrics::average_slices(t, 0, t.layers, 0, t.heads);
  }
  probes::render_heatmap(m, o.out, o.scale);
  return 0;
}

}  // namespace pelab::cli
