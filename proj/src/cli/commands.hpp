#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pelab::cli {

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::size_t jobs = 1;
  std::uint64_t seed = 42;
};

struct MetricsOptions {
  std::string input;
  std::string scope = "model-average";
  std::string out;
};

struct GenpeOptions {
  std::string kind = "attenuated";
  double w = 0.0;
  double s = 1.0;
  std::size_t n = 128;
  std::size_t d = 64;
  double m = 0.125;
  std::string out;
};

struct CalibrateOptions {
  double target_locality = 0.17;
  double s = 1.0;
  std::size_t n = 512;
  double tol = 1e-3;
  std::string out;
};

struct ProbeIdenticalOptions {
  std::vector<std::string> inputs;  // manifests
  std::string index;                // or an index file
  std::string out;
  std::string matrix_out;
  std::string heatmap;
  std::size_t scale = 4;
};

struct ProbeDepsOptions {
  std::vector<std::string> inputs;
  std::string index;
  std::string conllu;
  std::size_t top_k = 0;
  std::string out;
};

struct ShuffleOptions {
  std::string mode = "constituency";
  std::string nli;
  std::string trees;
  std::string srl;
  std::string srl_hyp;
  std::size_t x = 3;
  std::string tags;  // comma separated; empty = defaults
  std::string aux_file;
  std::string case_map_file;
  std::string out;
  std::string stats;
};

struct EncoderOptions {
  std::string train;
  std::string dev;
  std::string test;
  std::string embeddings;
  bool synthetic = false;
  std::string synthetic_out;
  double w = 0.0;
  double s = 1.0;
  double target_locality = -1.0;  // < 0: use w as given
  std::size_t max_len = 160;
  double dropout = 0.5;
  int epochs = 5;
  double lr = 0.002;
  double lr_decay = 0.9;
  std::size_t batch_size = 8;
  int runs = 5;
  bool trainable_delta = false;
  std::string out;
};

struct SweepOptions {
  EncoderOptions base;
  std::string w_grid;              // comma separated
  std::string target_localities;   // comma separated, calibrated per s
  std::string s_grid = "1";
  std::string out_csv;
};

struct RenderOptions {
  std::string input;
  long layer = -1;
  long head = -1;
  std::size_t scale = 4;
  std::string out;
};

int cmd_metrics(const MetricsOptions& o, Context& ctx);
int cmd_genpe(const GenpeOptions& o, Context& ctx);
int cmd_calibrate(const CalibrateOptions& o, Context& ctx);
int cmd_probe_identical(const ProbeIdenticalOptions& o, Context& ctx);
int cmd_probe_deps(const ProbeDepsOptions& o, Context& ctx);
int cmd_shuffle(const ShuffleOptions& o, Context& ctx);
int cmd_train_encoder(const EncoderOptions& o, Context& ctx);
int cmd_sweep(const SweepOptions& o, Context& ctx);
int cmd_render(const RenderOptions& o, Context& ctx);

}  // namespace pelab::cli
