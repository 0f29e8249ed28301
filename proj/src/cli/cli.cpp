#include "pelab/cli.hpp"

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "pelab/errors.hpp"
#include "pelab/fileio.hpp"

#ifndef PELAB_VERSION
#define PELAB_VERSION "0.0.0"
#endif

namespace pelab::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

void add_encoder_options(CLI::App* sub, EncoderOptions& o) {
  sub->add_option("--train", o.train, "Training TSV (label<TAB>text)");
  sub->add_option("--dev", o.dev, "Validation TSV");
  sub->add_option("--test", o.test, "Test TSV");
  sub->add_option("--embeddings", o.embeddings, "Word vectors, 'word v1 ... vd' per line");
  sub->add_flag("--synthetic", o.synthetic, "Use the bundled synthetic task");
  sub->add_option("--synthetic-out", o.synthetic_out, "Also write the synthetic task to this directory");
  sub->add_option("--s", o.s, "Forward attenuation factor");
  sub->add_option("--max-len", o.max_len, "Positions in the positional weight matrix");
  sub->add_option("--dropout", o.dropout, "Dropout rate on the pooled vector");
  sub->add_option("--epochs", o.epochs);
  sub->add_option("--lr", o.lr, "Initial Adam learning rate");
  sub->add_option("--lr-decay", o.lr_decay, "Per-epoch learning rate multiplier");
  sub->add_option("--batch-size", o.batch_size);
  sub->add_option("--runs", o.runs, "Seeds per configuration (seed, seed+1, ...)");
  sub->add_flag("--trainable-delta", o.trainable_delta, "Train the positional logits too");
  sub->add_option("--out", o.out, "Result JSON (stdout if omitted)");
}

// Every option of the chosen subcommand, as given or defaulted.
ordered_json resolved_options(const CLI::App* sub) {
  ordered_json j = ordered_json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_expected_max() == 0) {
        j[name] = true;
      } else if (res.size() == 1) {
        j[name] = res.front();
      } else {
        j[name] = res;
      }
    } else if (opt->get_expected_max() == 0) {
      j[name] = false;
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

std::filesystem::path run_json_dir(const CLI::App* sub) {
  for (const char* flag : {"--out", "--out-csv"}) {
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt != nullptr && opt->count() > 0 && !opt->results().empty()) {
      const std::filesystem::path parent = std::filesystem::path(opt->results().front()).parent_path();
      return parent.empty() ? std::filesystem::path(".") : parent;
    }
  }
  return ".";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Positional-encoding analysis toolkit", "pelab"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", PELAB_VERSION);
  app.set_config("--config", "", "TOML/INI file with option values");
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx{out, err};
  long jobs = 0;
  app.add_option("--seed", ctx.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads (default 1)")
      ->envname("PE_LAB_JOBS")
      ->check(CLI::NonNegativeNumber);

  MetricsOptions metrics;
  auto* m = app.add_subcommand("metrics", "Locality and symmetry of an ATW tensor");
  m->add_option("--input", metrics.input, "ATW manifest")->required();
  m->add_option("--scope", metrics.scope, "per-head | per-layer | model-average");
  m->add_option("--out", metrics.out, "Report JSON (stdout if omitted)");

  GenpeOptions genpe;
  auto* g = app.add_subcommand("genpe", "Generate a positional weight matrix as a 1x1 ATW tensor");
  g->add_option("--kind", genpe.kind,
                "attenuated | sinusoidal | rotary | alibi-symmetric | alibi-causal");
  g->add_option("--w", genpe.w, "Attenuated: locality strength");
  g->add_option("--s", genpe.s, "Attenuated: forward attenuation factor");
  g->add_option("--n", genpe.n, "Positions");
  g->add_option("--d", genpe.d, "Sinusoidal/rotary: model dimension");
  g->add_option("--m", genpe.m, "ALiBi slope");
  g->add_option("--out", genpe.out, "ATW manifest to write")->required();

  CalibrateOptions cal;
  auto* c = app.add_subcommand("calibrate", "Solve w for a target locality");
  c->add_option("--target-locality", cal.target_locality)->required();
  c->add_option("--s", cal.s);
  c->add_option("--n", cal.n);
  c->add_option("--tol", cal.tol);
  c->add_option("--out", cal.out, "Also write the result as JSON");

  ProbeIdenticalOptions pid;
  auto* pi = app.add_subcommand("probe-identical", "Aggregate repeated-word attention dumps");
  pi->add_option("--input", pid.inputs, "ATW manifests");
  pi->add_option("--index", pid.index, "Index JSON listing the dumps");
  pi->add_option("--out", pid.out, "Metric report JSON (stdout if omitted)");
  pi->add_option("--matrix-out", pid.matrix_out, "Write the aggregate matrix as ATW");
  pi->add_option("--heatmap", pid.heatmap, "Write the aggregate as a PPM heatmap");
  pi->add_option("--scale", pid.scale, "Heatmap pixels per cell");

  ProbeDepsOptions pdo;
  auto* pd = app.add_subcommand("probe-deps", "Per-head dependency relation probing");
  pd->add_option("--input", pdo.inputs, "ATW manifests, one per sentence");
  pd->add_option("--index", pdo.index, "Index JSON listing the per-sentence dumps");
  pd->add_option("--conllu", pdo.conllu, "Dependency annotations")->required();
  pd->add_option("--top-k", pdo.top_k, "Report the k most frequent relations (0 = all)");
  pd->add_option("--out", pdo.out, "Report JSON");

  ShuffleOptions sh;
  auto* s = app.add_subcommand("shuffle", "Build constituency or semantic-role shuffled NLI sets");
  s->add_option("--mode", sh.mode, "constituency | semantic-role");
  s->add_option("--nli", sh.nli, "NLI JSONL {premise, hypothesis, label}")->required();
  s->add_option("--trees", sh.trees, "Premise trees, one per line");
  s->add_option("--srl", sh.srl, "Premise SRL JSONL");
  s->add_option("--srl-hyp", sh.srl_hyp, "Hypothesis SRL JSONL");
  s->add_option("--x", sh.x, "Phrase length");
  s->add_option("--tags", sh.tags, "Comma-separated phrase tags");
  s->add_option("--aux-file", sh.aux_file, "Auxiliary verb list");
  s->add_option("--case-map-file", sh.case_map_file, "Subject/object pronoun pairs");
  s->add_option("--out", sh.out, "Output JSONL (stdout if omitted)");
  s->add_option("--stats", sh.stats, "Stats JSON");

  EncoderOptions enc;
  auto* t = app.add_subcommand("train-encoder", "Train the positional-attention classifier");
  add_encoder_options(t, enc);
  t->add_option("--w", enc.w, "Locality strength");
  t->add_option("--target-locality", enc.target_locality, "Calibrate w to this locality instead");

  SweepOptions sw;
  auto* sp = app.add_subcommand("sweep", "Train over a grid of (w, s)");
  add_encoder_options(sp, sw.base);
  sp->add_option("--w-grid", sw.w_grid, "Comma-separated w values");
  sp->add_option("--target-localities", sw.target_localities, "Comma-separated locality targets");
  sp->add_option("--s-grid", sw.s_grid, "Comma-separated s values");
  sp->add_option("--out-csv", sw.out_csv, "CSV table (stdout if omitted)");

  RenderOptions rd;
  auto* r = app.add_subcommand("render", "Render an ATW tensor as a PPM heatmap");
  r->add_option("--input", rd.input, "ATW manifest")->required();
  r->add_option("--layer", rd.layer, "Layer (default: average of all slices)");
  r->add_option("--head", rd.head, "Head");
  r->add_option("--scale", rd.scale, "Pixels per cell");
  r->add_option("--out", rd.out, "PPM file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }
  ctx.jobs = jobs > 0 ? static_cast<std::size_t>(jobs) : 1;

  CLI::App* sub = app.get_subcommands().front();
  try {
    const std::string name = sub->get_name();
    if (name == "metrics") cmd_metrics(metrics, ctx);
    else if (name == "genpe") cmd_genpe(genpe, ctx);
    else if (name == "calibrate") cmd_calibrate(cal, ctx);
    else if (name == "probe-identical") cmd_probe_identical(pid, ctx);
    else if (name == "probe-deps") cmd_probe_deps(pdo, ctx);
    else if (name == "shuffle") cmd_shuffle(sh, ctx);
    else if (name == "train-encoder") cmd_train_encoder(enc, ctx);
    else if (name == "sweep") cmd_sweep(sw, ctx);
    else if (name == "render") cmd_render(rd, ctx);

    ordered_json echo;
    echo["tool"] = "pelab";
    echo["version"] = PELAB_VERSION;
    echo["subcommand"] = name;
    echo["seed"] = ctx.seed;
    echo["jobs"] = ctx.jobs;
    echo["options"] = resolved_options(sub);
    write_text_file(run_json_dir(sub) / "run.json", echo.dump(2) + "\n");
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("pelab");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pelab::cli
