#include "revolver/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "revolver/approx.hpp"
#include "revolver/data_io.hpp"
#include "revolver/loss_study.hpp"
#include "revolver/matmul.hpp"
#include "revolver/pipeline.hpp"

namespace revolver::cli {

namespace {

namespace fs = std::filesystem;
using approx::Activation;

struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const std::string& flag) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) {
    std::istringstream in(item);
    T v{};
    if (!(in >> v) || !in.eof()) throw FlagError(flag + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw FlagError(flag + ": empty list");
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

/// Flag values after parsing, with `resolved` replacing keys whose value was
/// derived from other flags.
void write_resolved_config(const CLI::App& cmd, const fs::path& dir,
                           const std::map<std::string, std::string>& resolved = {}) {
  auto out = open_out(dir / "resolved_config.txt");
  out << "# " << cmd.get_name() << "\n";
  std::istringstream in(cmd.config_to_str(true, false));
  for (std::string line; std::getline(in, line);) {
    const auto key = line.substr(0, line.find('='));
    const auto it = resolved.find(key);
    out << (it == resolved.end() ? line : key + "=" + it->second) << "\n";
  }
}

void write_weights_csv(const fs::path& path, const nn::Weights& w) {
  auto out = open_out(path);
  out.precision(17);
  out << "layer,row,col,value\n";
  for (std::size_t l = 0; l < w.size(); ++l)
    for (Eigen::Index i = 0; i < w[l].rows(); ++i)
      for (Eigen::Index j = 0; j < w[l].cols(); ++j) out << l << ',' << i << ',' << j << ',' << w[l](i, j) << '\n';
}

data::Dataset head(data::Dataset ds, std::size_t n) {
  if (n == 0 || n >= ds.size()) return ds;
  ds.X.conservativeResize(static_cast<Eigen::Index>(n), Eigen::NoChange);
  ds.y.resize(n);
  return ds;
}

fs::path require_file(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("missing input file: " + p.string());
  return p;
}

void add_config_flag(CLI::App* c) {
  c->add_option("--config")->description("File of `key = value` lines (# comments); flags override it");
}

bool mentions(const std::vector<std::string>& args, const std::string& key) {
  for (const auto& a : args) {
    if (a == "--" + key || a == "--no-" + key || a.rfind("--" + key + "=", 0) == 0) return true;
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r"), e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

/// Splices the entries of a --config file in front of the command's own
/// flags. Keys given on the command line are skipped, so flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path);
  std::vector<std::string> injected;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FlagError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key == "config" || mentions(args, key)) continue;
    if (value == "true") {
      injected.push_back("--" + key);
    } else if (value == "false") {
      injected.push_back("--no-" + key);
    } else {
      injected.insert(injected.end(), {"--" + key, value});
    }
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

// prepare-mnist ------------------------------------------------------------

struct PrepareArgs {
  std::string in_dir;
  std::string out_dir;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t train_limit = 0, test_limit = 0;
};

void add_prepare(CLI::App& app, PrepareArgs& a) {
  auto* c = app.add_subcommand("prepare-mnist", "Convert MNIST IDX files into 8x8 feature CSVs");
  c->add_option("--in", a.in_dir, "Directory with the four standard MNIST IDX files");
  c->add_option("--out", a.out_dir, "Output directory for train.csv and test.csv")->required();
  c->add_option("--train-images", a.train_images, "Override the training image file");
  c->add_option("--train-labels", a.train_labels, "Override the training label file");
  c->add_option("--test-images", a.test_images, "Override the test image file");
  c->add_option("--test-labels", a.test_labels, "Override the test label file");
  c->add_option("--train-limit", a.train_limit, "Keep the first N training samples (0 = all)");
  c->add_option("--test-limit", a.test_limit, "Keep the first N test samples (0 = all)");
  add_config_flag(c);
}

int cmd_prepare(const CLI::App& cmd, const PrepareArgs& a) {
  auto pick = [&](const std::string& given, const char* standard) {
    if (!given.empty()) return require_file(given);
    if (a.in_dir.empty()) throw FlagError(std::string("--in or an explicit file is needed for ") + standard);
    return require_file(fs::path(a.in_dir) / standard);
  };
  const auto train = data::downsample_8x8(head(
      data::load_mnist_idx(pick(a.train_images, "train-images-idx3-ubyte"), pick(a.train_labels, "train-labels-idx1-ubyte")),
      a.train_limit));
  const auto test = data::downsample_8x8(head(
      data::load_mnist_idx(pick(a.test_images, "t10k-images-idx3-ubyte"), pick(a.test_labels, "t10k-labels-idx1-ubyte")),
      a.test_limit));
  fs::create_directories(a.out_dir);
  data::write_feature_csv(fs::path(a.out_dir) / "train.csv", train, "MNIST 8x8, " + std::to_string(train.size()) + " samples");
  data::write_feature_csv(fs::path(a.out_dir) / "test.csv", test, "MNIST 8x8, " + std::to_string(test.size()) + " samples");
  write_resolved_config(cmd, a.out_dir);
  std::cout << "wrote " << train.size() << " training and " << test.size() << " test rows to " << a.out_dir << "\n";
  return kOk;
}

// train --------------------------------------------------------------------

struct TrainArgs {
  std::string mode = "encrypted-sim";
  std::string loss = "bce";
  std::string arch = "mlr";
  std::string activations;
  int iters = 2;
  double lr = 1.0;
  bool bootstrap = false;
  bool precondition = true;
  std::string schedule = "decaying";
  std::string data = "synthetic";
  std::size_t samples = 128;
  std::size_t features = 400;
  int classes = 10;
  std::size_t slots = 32768;
  std::uint64_t seed = 1;
  std::string out = ".";
  CLI::Option* bootstrap_opt = nullptr;
  CLI::Option* precondition_opt = nullptr;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Train in plaintext or under the encryption simulator");
  c->add_option("--mode", a.mode, "plain | encrypted-sim")->check(CLI::IsMember({"plain", "encrypted-sim"}));
  c->add_option("--loss", a.loss, "bce | sle | msle | softmax-ce")
      ->check(CLI::IsMember({"bce", "sle", "msle", "softmax-ce"}));
  c->add_option("--arch", a.arch, "mlr, nn4, or comma-separated layer sizes starting with the feature count");
  c->add_option("--activations", a.activations,
                "Comma-separated per-layer activations (quadratic, cubic, extended_sigmoid, sigmoid)");
  c->add_option("--iters", a.iters, "Training iterations")->check(CLI::NonNegativeNumber);
  c->add_option("--lr", a.lr, "Learning rate");
  a.bootstrap_opt = c->add_flag("--bootstrap,!--no-bootstrap", a.bootstrap,
                                "Refresh exhausted ciphertexts (default: on for hidden layers, off for mlr)");
  a.precondition_opt = c->add_flag("--precondition,!--no-precondition", a.precondition,
                                   "Scale first-layer gradients by B-bar (default: on for mlr)");
  c->add_option("--schedule", a.schedule, "constant | decaying")->check(CLI::IsMember({"constant", "decaying"}));
  c->add_option("--data", a.data, "Feature CSV, or 'synthetic'");
  c->add_option("--samples", a.samples, "Use the first N samples (0 = all)");
  c->add_option("--features", a.features, "Feature count of the synthetic batch");
  c->add_option("--classes", a.classes, "Number of classes")->check(CLI::PositiveNumber);
  c->add_option("--slots", a.slots, "Slots per ciphertext (power of two)");
  c->add_option("--seed", a.seed, "Seed for weights and synthetic data");
  c->add_option("--out", a.out, "Output directory");
  add_config_flag(c);
}

nn::NetworkConfig train_config(TrainArgs& a, std::size_t d) {
  nn::NetworkConfig cfg;
  const auto classes = static_cast<std::size_t>(a.classes);
  if (a.arch == "mlr") {
    cfg.layer_dims = {d, classes};
  } else if (a.arch == "nn4") {
    cfg.layer_dims = {d, 32, 16, classes};
  } else {
    cfg.layer_dims = parse_list<std::size_t>(a.arch, "--arch");
    if (cfg.layer_dims.size() < 2) throw FlagError("--arch needs at least two sizes");
    if (cfg.layer_dims.front() != d) {
      throw FlagError("--arch starts with " + std::to_string(cfg.layer_dims.front()) + " but the data has " +
                      std::to_string(d) + " features");
    }
    if (cfg.layer_dims.back() != classes) throw FlagError("--arch must end with --classes");
  }
  const bool single = cfg.layer_dims.size() == 2;
  if (!a.activations.empty()) {
    for (const auto& name : split(a.activations, ',')) cfg.activations.push_back(approx::parse_activation(name));
  } else {
    for (std::size_t l = 0; l + 2 < cfg.layer_dims.size(); ++l)
      cfg.activations.push_back(l % 2 == 0 ? Activation::quadratic : Activation::cubic);
    cfg.activations.push_back(single ? Activation::cubic : Activation::extended_sigmoid);
  }
  cfg.loss = nn::parse_loss(a.loss);
  cfg.learning_rate = a.lr;
  cfg.iterations = a.iters;
  cfg.seed = a.seed;
  cfg.schedule = a.schedule == "decaying" ? nn::StepSchedule::decaying : nn::StepSchedule::constant;
  if (a.precondition_opt->count() == 0) a.precondition = single;
  if (a.bootstrap_opt->count() == 0) a.bootstrap = !single;
  cfg.use_preconditioner = a.precondition;
  cfg.validate();
  if (a.mode == "encrypted-sim") {
    if (cfg.loss == nn::Loss::softmax_ce) throw FlagError("--loss softmax-ce needs --mode plain");
    for (auto act : cfg.activations)
      if (act == Activation::sigmoid) throw FlagError("the exact sigmoid needs --mode plain");
  }
  return cfg;
}

int cmd_train(const CLI::App& cmd, TrainArgs& a) {
  data::Dataset ds;
  if (a.data == "synthetic") {
    ds = data::synthetic_features(a.samples, a.features, a.classes, a.seed);
  } else {
    ds = head(data::load_feature_csv(require_file(a.data)), a.samples);
  }
  const Matrix x = ds.has_bias ? ds.features() : ds.X;
  for (int label : ds.y)
    if (label >= a.classes) throw LabelOutOfRange("label " + std::to_string(label) + " >= --classes");
  const auto cfg = train_config(a, static_cast<std::size_t>(x.cols()));

  fs::create_directories(a.out);
  std::string acts;
  for (auto act : cfg.activations) acts += (acts.empty() ? "" : ",") + approx::to_string(act);
  write_resolved_config(cmd, a.out,
                        {{"activations", '"' + acts + '"'},
                         {"bootstrap", a.bootstrap ? "true" : "false"},
                         {"precondition", a.precondition ? "true" : "false"}});
  pipeline::TrainOptions opts;
  opts.bootstrap = a.bootstrap;
  opts.report = pipeline::batch_reporter(cfg, x, ds.y);

  pipeline::TrainHistory h;
  int code = kOk;
  if (a.mode == "plain") {
    h = pipeline::train_plain(cfg, x, ds.y, opts);
  } else {
    he::HEParams params;
    try {
      params = he::HEParams::with_slots(a.slots);
    } catch (const std::exception& e) {
      throw FlagError(std::string("--slots: ") + e.what());
    }
    he::Evaluator ev(params);
    auto state = pipeline::pack_batch(ev, x, ds.y, cfg);
    try {
      h = pipeline::train_encrypted_sim(ev, state, cfg, opts);
    } catch (const LevelExhausted& e) {
      std::cerr << "level budget exhausted: " << e.what() << "\n";
      h.records = state.history;
      h.weights = pipeline::decrypt_weights(ev, state.V);
      code = kLevelExhausted;
    }
  }
  pipeline::write_history_csv((fs::path(a.out) / "history.csv").string(), h);
  write_weights_csv(fs::path(a.out) / "weights.csv", h.weights);
  for (const auto& r : h.records) {
    std::cout << "iter " << r.iter << "  loss " << r.loss << "  precision " << r.precision;
    if (r.min_level >= 0) std::cout << "  min_level " << r.min_level;
    std::cout << "  " << r.wall_ms << " ms\n";
  }
  return code;
}

// compare-losses -----------------------------------------------------------

struct CompareArgs {
  std::string data;
  std::string depths = "1,3";
  std::string losses = "bce,sle,msle";
  int seeds = 20;
  int epochs = 30;
  std::size_t batch = 128;
  std::string lr_grid = "0.001,0.003,0.01,0.03,0.1,0.3,1,3";
  int tune_seeds = 5;
  std::string out = ".";
};

void add_compare(CLI::App& app, CompareArgs& a) {
  auto* c = app.add_subcommand("compare-losses", "Initial gradients and trained accuracy per loss and depth");
  c->add_option("--data", a.data, "Directory with train.csv and test.csv (see prepare-mnist)")->required();
  c->add_option("--depths", a.depths, "Comma-separated weight-layer counts");
  c->add_option("--losses", a.losses, "Comma-separated losses");
  c->add_option("--seeds", a.seeds, "Seeds per (depth, loss)")->check(CLI::PositiveNumber);
  c->add_option("--epochs", a.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  c->add_option("--batch", a.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  c->add_option("--lr-grid", a.lr_grid, "Candidate learning rates");
  c->add_option("--tune-seeds", a.tune_seeds, "Seeds used to pick the learning rate")->check(CLI::PositiveNumber);
  c->add_option("--out", a.out, "Output directory");
  add_config_flag(c);
}

int cmd_compare(const CLI::App& cmd, const CompareArgs& a) {
  pipeline::LossStudyOptions o;
  o.depths = parse_list<std::size_t>(a.depths, "--depths");
  o.losses.clear();
  for (const auto& name : split(a.losses, ',')) o.losses.push_back(nn::parse_loss(name));
  o.seeds = a.seeds;
  o.epochs = a.epochs;
  o.batch = a.batch;
  o.lr_grid = parse_list<double>(a.lr_grid, "--lr-grid");
  o.tune_seeds = a.tune_seeds;
  const auto train = data::load_feature_csv(require_file(fs::path(a.data) / "train.csv"));
  const auto test = data::load_feature_csv(require_file(fs::path(a.data) / "test.csv"));
  if (o.batch > train.size()) throw FlagError("--batch exceeds the training set");

  const auto rows = pipeline::loss_study(o, train, test);
  fs::create_directories(a.out);
  write_resolved_config(cmd, a.out);
  pipeline::write_loss_study_csv((fs::path(a.out) / "loss_study.csv").string(), rows);

  std::map<std::pair<std::size_t, std::string>, std::array<double, 3>> mean;
  for (const auto& r : rows) {
    auto& m = mean[{r.depth, nn::to_string(r.loss)}];
    m[0] = r.lr;
    m[1] += r.init_grad / o.seeds;
    m[2] += r.test_acc / o.seeds;
  }
  for (const auto& [key, m] : mean) {
    std::cout << "depth " << key.first << "  " << key.second << "  lr " << m[0] << "  mean |grad| " << m[1]
              << "  test acc " << m[2] << "\n";
  }
  return kOk;
}

// approx-sigmoid -----------------------------------------------------------

struct ApproxArgs {
  int degree = 9;
  int n_ext = 3;
  std::size_t grid = 10001;
  double half_width = 8.0;
  std::string out = "-";
};

void add_approx(CLI::App& app, ApproxArgs& a) {
  auto* c = app.add_subcommand("approx-sigmoid", "Tabulate the extended sigmoid against the exact one");
  c->add_option("--degree", a.degree, "Base polynomial degree")->check(CLI::PositiveNumber);
  c->add_option("--n-ext", a.n_ext, "Number of domain-extension maps")->check(CLI::NonNegativeNumber);
  c->add_option("--grid", a.grid, "Evaluation points on the target interval")->check(CLI::Range(2, 10000000));
  c->add_option("--half-width", a.half_width, "Half-width of the base interval");
  c->add_option("--out", a.out, "Output CSV, or - for stdout");
  add_config_flag(c);
}

int cmd_approx(const ApproxArgs& a) {
  approx::ExtendedSigmoid s;
  try {
    s = approx::build_extended_sigmoid(a.n_ext, a.degree, a.half_width);
  } catch (const DomainNotCovered& e) {
    throw FlagError(e.what());
  }
  std::ofstream file;
  if (a.out != "-") file = open_out(a.out);
  std::ostream& out = a.out == "-" ? std::cout : file;
  out.precision(12);
  out << "x,exact,approx,abs_err\n";
  const double lo = s.target_domain.lo, hi = s.target_domain.hi;
  double max_err = 0.0;
  for (std::size_t i = 0; i < a.grid; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(a.grid - 1);
    const double exact = approx::sigmoid(x), v = s(x), err = std::abs(v - exact);
    max_err = std::max(max_err, err);
    out << x << ',' << exact << ',' << v << ',' << err << '\n';
  }
  out << "# max_err," << max_err << '\n';
  if (a.out != "-") std::cout << "max_err " << max_err << "  depth " << s.depth() << "\n";
  return kOk;
}

// bench-matmul -------------------------------------------------------------

struct BenchArgs {
  std::string shapes = "4x2x2,128x401x10,100x60x40";
  std::size_t slots = 32768;
  int widths = 3;
  bool serial = false;
  std::uint64_t seed = 1;
  std::string out = "-";
};

void add_bench(CLI::App& app, BenchArgs& a) {
  auto* c = app.add_subcommand("bench-matmul", "Time, op counts and ciphertext counts per layout");
  c->add_option("--shapes", a.shapes, "Comma-separated MxNxP products");
  c->add_option("--slots", a.slots, "Slots per ciphertext");
  c->add_option("--widths", a.widths, "Padded widths tried per shape, doubling from the smallest")
      ->check(CLI::PositiveNumber);
  c->add_flag("--serial,!--no-serial", a.serial, "Use the serial kernels");
  c->add_option("--seed", a.seed, "Operand seed");
  c->add_option("--out", a.out, "Output CSV, or - for stdout");
  add_config_flag(c);
}

int cmd_bench(const BenchArgs& a) {
  he::HEParams params;
  try {
    params = he::HEParams::with_slots(a.slots);
  } catch (const std::exception& e) {
    throw FlagError(std::string("--slots: ") + e.what());
  }
  std::ofstream file;
  if (a.out != "-") file = open_out(a.out);
  std::ostream& out = a.out == "-" ? std::cout : file;
  out << "m,n,p,slots,padded_cols,team_a,team_b,n_add,n_mult,n_cmult,n_rot,peak_cts,levels,max_abs_err,wall_ms\n";
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& shape : split(a.shapes, ',')) {
    const auto dims = split(shape, 'x');
    std::vector<std::size_t> mnp;
    for (const auto& d : dims) mnp.push_back(parse_list<std::size_t>(d, "--shapes").front());
    if (mnp.size() != 3 || mnp[0] * mnp[1] * mnp[2] == 0) throw FlagError("--shapes: bad shape '" + shape + "'");
    Matrix A(static_cast<Eigen::Index>(mnp[0]), static_cast<Eigen::Index>(mnp[1]));
    Matrix B(static_cast<Eigen::Index>(mnp[1]), static_cast<Eigen::Index>(mnp[2]));
    for (auto* m : {&A, &B})
      for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = u(rng);
    const Matrix want = A * B;
    const auto plan = mm::plan_matmul(params, mnp[0], mnp[1], mnp[2]);
    for (int k = 0; k < a.widths; ++k) {
      const std::size_t pc = plan.padded_cols << k;
      if (pc > a.slots) break;
      he::Evaluator ev(params);
      he::reset_peak_ciphertexts();
      const auto base_live = he::live_ciphertexts();
      const auto pa = enc::pack_row_major(ev, A, pc);
      const auto pb = enc::pack_replicated(ev, B.transpose(), pc);
      const auto start = std::chrono::steady_clock::now();
      const auto c = mm::dvr_mult(ev, pa, pb, {.exec = a.serial ? mm::Exec::serial : mm::Exec::parallel});
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      const auto n = ev.counts();
      const double err = (enc::unpack(ev, c) - want).cwiseAbs().maxCoeff();
      out << mnp[0] << ',' << mnp[1] << ',' << mnp[2] << ',' << a.slots << ',' << pc << ',' << pa.team_size() << ','
          << pb.team_size() << ',' << n.n_add << ',' << n.n_mult << ',' << n.n_cmult << ',' << n.n_rot << ','
          << he::peak_ciphertexts() - base_live << ',' << ev.max_level() - c.min_level() << ',' << err << ','
          << ms << '\n';
    }
  }
  return kOk;
}

void apply_thread_env() {
  const char* env = std::getenv("REVOLVER_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n <= 0) throw FlagError(std::string("REVOLVER_THREADS must be a positive integer, got '") + env + "'");
  omp_set_num_threads(static_cast<int>(n));
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Neural-network training under a simulated CKKS scheme", "revolver"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  PrepareArgs prepare;
  TrainArgs train;
  CompareArgs compare;
  ApproxArgs approx_args;
  BenchArgs bench;
  add_prepare(app, prepare);
  add_train(app, train);
  add_compare(app, compare);
  add_approx(app, approx_args);
  add_bench(app, bench);

  try {
    const auto expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const FlagError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFlagError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFlagError;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    apply_thread_env();
    const std::string name = cmd->get_name();
    if (name == "prepare-mnist") return cmd_prepare(*cmd, prepare);
    if (name == "train") return cmd_train(*cmd, train);
    if (name == "compare-losses") return cmd_compare(*cmd, compare);
    if (name == "approx-sigmoid") return cmd_approx(approx_args);
    return cmd_bench(bench);
  } catch (const FlagError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << cmd->help();
    return kFlagError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n\n" << cmd->help();
    return kFlagError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const LevelExhausted& e) {
    std::cerr << "level budget exhausted: " << e.what() << "\n";
    return kLevelExhausted;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFlagError;
  }
}

}  // namespace revolver::cli
