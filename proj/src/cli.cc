#include "dlbac/cli.h"

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dlbac/csv_ingest.h"
#include "dlbac/dataset.h"
#include "dlbac/distill.h"
#include "dlbac/encoding.h"
#include "dlbac/engine.h"
#include "dlbac/error.h"
#include "dlbac/interpret.h"
#include "dlbac/metrics.h"
#include "dlbac/neuralnet.h"
#include "dlbac/server.h"
#include "dlbac/synth.h"
#include "dlbac/train.h"

namespace dlbac::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kModelFile = "model.dlbac";
constexpr const char* kEncoderFile = "encoder.dlbac";
constexpr const char* kStoreFile = "store.dlbac";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> number_list(const std::string& text, const char* what) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
      if constexpr (std::is_integral_v<T>) {
        if (static_cast<double>(out.back()) != v) throw std::invalid_argument(item);
      }
    } catch (const std::logic_error&) {
      throw ConfigError(std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  return out;
}

// Model, encoder and store paths; --model may name the directory `train`
// wrote to.
struct ModelPaths {
  std::string model;
  std::string encoder;
  std::string store;
  std::string dir;

  void add_options(CLI::App* app, bool with_store) {
    app->add_option("--model", model, "model file or training output directory")
        ->required();
    app->add_option("--encoder", encoder, "encoder file (default: next to the model)");
    if (with_store) {
      app->add_option("--store", store, "metadata store or dataset file");
    }
  }

  void resolve() {
    if (fs::is_directory(model)) {
      dir = model;
      model = (fs::path(dir) / kModelFile).string();
    } else {
      dir = fs::path(model).parent_path().string();
    }
    if (encoder.empty()) encoder = (fs::path(dir) / kEncoderFile).string();
    if (store.empty()) store = (fs::path(dir) / kStoreFile).string();
  }
};

struct Loaded {
  Network net;
  Encoder encoder;
};

Loaded load(ModelPaths& paths) {
  paths.resolve();
  Loaded l{load_model(paths.model), load_encoder(paths.encoder)};
  if (l.encoder.width() != l.net.input_width()) {
    throw ShapeError("encoder " + paths.encoder + " does not match model " + paths.model);
  }
  return l;
}

void emit(std::ostream& out, const std::string& path, const std::string& contents,
          const char* label) {
  if (path.empty() || path == "-") {
    out << contents;
    return;
  }
  write_file(path, contents);
  out << label << ": " << path << "\n";
}

Dataset project_for(const Dataset& data, const Encoder& encoder) {
  if (data.num_user_meta() == encoder.num_user_meta() &&
      data.num_res_meta() == encoder.num_res_meta()) {
    return data;
  }
  return project_visible(data, encoder.num_user_meta(), encoder.num_res_meta());
}

ClassWeights parse_weights(const std::string& text) {
  const auto w = number_list<double>(text, "weight");
  if (w.size() != 2) throw ConfigError("--weights expects 'grant,deny'");
  return {w[0], w[1]};
}

std::size_t parse_depth(const std::string& text) {
  if (text == "unlimited" || text == "none") return kUnlimitedDepth;
  const auto v = number_list<std::size_t>(text, "depth");
  if (v.size() != 1) throw ConfigError("bad --max-depth '" + text + "'");
  return v[0];
}

DecisionClass parse_class(const std::string& text) {
  if (text == "grant") return DecisionClass::kGrant;
  if (text == "deny") return DecisionClass::kDeny;
  throw ConfigError("--class must be grant or deny");
}

// Command-line front end. Each subcommand registers its options and a
// handler run after parsing.
class Program {
 public:
  Program(std::ostream& out, std::ostream& err) : out_(out), err_(err) {
    app_.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app_.require_subcommand(1);
    app_.fallthrough(false);
    add_synth();
    add_ingest();
    add_train();
    add_eval();
    add_decide();
    add_serve();
    add_explain();
    add_flip_study();
    add_distill();
  }

  int run(const std::vector<std::string>& args);

 private:
  CLI::App* sub(const std::string& name, const std::string& help) {
    CLI::App* app = app_.add_subcommand(name, help);
    app->add_option("--config", config_path_, "key = value file; flags override it");
    return app;
  }

  void add_synth();
  void add_ingest();
  void add_train();
  void add_eval();
  void add_decide();
  void add_serve();
  void add_explain();
  void add_flip_study();
  void add_distill();

  std::vector<std::string> expand_config(const std::vector<std::string>& args);

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"Deep-learning access control toolkit", "dlbac"};
  std::string config_path_;
  std::function<void()> action_;
  std::map<CLI::App*, std::function<void()>> handlers_;

  // Option storage; each subcommand reads only its own fields.
  SynthConfig synth_;
  TrainConfig train_;
  NetworkConfig net_;
  ModelPaths paths_;
  std::string out_path_, data_path_, csv_path_, rules_out_;
  std::string value_distribution_ = "uniform", user_sets_, res_sets_;
  bool keep_hidden_ = false;
  CsvSchema schema_;
  std::string user_cols_, res_cols_, label_cols_;
  std::string encoding_ = "one-hot", hidden_ = "256,128,64,32", weights_ = "1,1";
  double test_fraction_ = 0.2;
  std::optional<std::uint64_t> split_seed_;
  std::uint64_t seed_ = 1;
  double threshold_ = 0.5;
  EntityId uid_ = 0, rid_ = 0;
  std::optional<EntityId> donor_uid_, donor_rid_;
  std::size_t op_ = 0;
  std::string listen_ = "127.0.0.1:7070";
  bool local_ = false, global_ = false, full_ = false;
  std::size_t steps_ = kDefaultIgSteps, samples_ = 50, min_samples_leaf_ = 5;
  std::string class_ = "grant", order_, max_depth_ = "8";
  std::optional<EntityId> rule_uid_, rule_rid_;
};

void Program::add_synth() {
  auto* s = sub("synth", "generate a rule-driven synthetic dataset");
  s->add_option("--out", out_path_, "dataset file to write")->required();
  s->add_option("--rules-out", rules_out_, "also write the generating rules");
  s->add_option("--seed", synth_.seed);
  s->add_option("--num-users", synth_.num_users);
  s->add_option("--num-resources", synth_.num_resources);
  s->add_option("--num-user-meta", synth_.num_user_meta);
  s->add_option("--num-res-meta", synth_.num_res_meta);
  s->add_option("--num-ops", synth_.num_ops);
  s->add_option("--num-rules", synth_.num_rules);
  s->add_option("--visible-user-meta", synth_.visible_user_meta);
  s->add_option("--visible-res-meta", synth_.visible_res_meta);
  s->add_option("--user-value-sets", user_sets_, "comma-separated sizes");
  s->add_option("--res-value-sets", res_sets_, "comma-separated sizes");
  s->add_option("--constraint-prob", synth_.constraint_prob);
  s->add_option("--min-conditions", synth_.min_conditions);
  s->add_option("--max-conditions", synth_.max_conditions);
  s->add_option("--max-condition-values", synth_.max_condition_values);
  s->add_option("--max-rule-coverage", synth_.max_rule_coverage);
  s->add_option("--users-per-rule", synth_.users_per_rule);
  s->add_option("--resources-per-rule", synth_.resources_per_rule);
  s->add_option("--negative-ratio", synth_.negative_ratio);
  s->add_option("--value-distribution", value_distribution_, "uniform or zipf");
  s->add_flag("--keep-hidden", keep_hidden_, "write hidden metadata too");
  handlers_[s] = [this] {
    if (value_distribution_ == "zipf") {
      synth_.value_distribution = ValueDistribution::kZipf;
    } else if (value_distribution_ != "uniform") {
      throw ConfigError("--value-distribution must be uniform or zipf");
    }
    synth_.user_value_set_sizes = number_list<std::uint32_t>(user_sets_, "value set");
    synth_.res_value_set_sizes = number_list<std::uint32_t>(res_sets_, "value set");
    const SynthResult result = synthesize(synth_);
    const Dataset data =
        keep_hidden_ ? result.dataset
                     : project_visible(result.dataset, synth_.visible_user_meta,
                                       synth_.visible_res_meta);
    save_dataset(data, out_path_);
    out_ << "dataset: " << out_path_ << " (" << data.size() << " tuples)\n";
    if (!rules_out_.empty()) {
      std::string text;
      for (const auto& r : result.rules) text += describe_rule(r) + "\n";
      write_file(rules_out_, text);
      out_ << "rules: " << rules_out_ << "\n";
    }
  };
}

void Program::add_ingest() {
  auto* s = sub("ingest", "convert a CSV export into a dataset");
  s->add_option("--csv", csv_path_)->required();
  s->add_option("--out", out_path_)->required();
  s->add_option("--user-columns", user_cols_, "comma-separated")->required();
  s->add_option("--resource-columns", res_cols_, "comma-separated");
  s->add_option("--resource-id", schema_.resource_id_column)->required();
  s->add_option("--user-id", schema_.user_id_column);
  s->add_option("--labels", label_cols_, "comma-separated operation columns")
      ->required();
  handlers_[s] = [this] {
    schema_.user_meta_columns = split_list(user_cols_);
    schema_.res_meta_columns = split_list(res_cols_);
    schema_.label_columns = split_list(label_cols_);
    const Dataset data = ingest_csv(read_file(csv_path_), schema_);
    save_dataset(data, out_path_);
    out_ << "dataset: " << out_path_ << " (" << data.size() << " tuples)\n";
  };
}

void Program::add_train() {
  auto* s = sub("train", "split a dataset and train a network");
  s->add_option("--data", data_path_)->required();
  s->add_option("--out", out_path_, "output directory")->required();
  s->add_option("--test-fraction", test_fraction_);
  s->add_option("--split-seed", split_seed_, "default: --seed");
  s->add_option("--seed", seed_, "initialization and shuffling seed");
  s->add_option("--encoding", encoding_, "one-hot or binary");
  s->add_option("--hidden", hidden_, "comma-separated hidden widths");
  s->add_option("--epochs", train_.epochs);
  s->add_option("--batch-size", train_.batch_size);
  s->add_option("--lr", train_.lr0);
  s->add_option("--lr-decay-every", train_.lr_decay_every);
  s->add_option("--lr-decay-factor", train_.lr_decay_factor);
  s->add_option("--patience", train_.early_stop_patience);
  s->add_option("--val-fraction", train_.val_fraction);
  s->add_option("--weights", weights_, "grant,deny loss weights");
  s->add_option("--threshold", threshold_);
  handlers_[s] = [this] {
    const Dataset data = load_dataset(data_path_);
    if (!(test_fraction_ > 0.0 && test_fraction_ < 1.0)) {
      throw ConfigError("--test-fraction must lie in (0, 1)");
    }
    const auto [train_set, test_set] =
        split_dataset(data, test_fraction_, split_seed_.value_or(seed_));
    train_.class_weights = parse_weights(weights_);
    train_.threshold = threshold_;
    train_.shuffle_seed = seed_;
    const Encoder encoder = build_encoder(train_set, parse_scheme(encoding_));
    net_.input_width = encoder.width();
    net_.num_ops = data.num_ops();
    net_.hidden_layers = number_list<std::size_t>(hidden_, "hidden width");
    net_.init_seed = seed_;
    const TrainResult result = train(init_network(net_), train_set, encoder, train_);

    fs::create_directories(out_path_);
    const fs::path dir(out_path_);
    const auto path = [&](const char* name) { return (dir / name).string(); };
    save_model(result.network, path(kModelFile));
    save_encoder(encoder, path(kEncoderFile));
    save_store(build_store(data), path(kStoreFile));
    save_dataset(train_set, path("train.ds"));
    save_dataset(test_set, path("test.ds"));
    write_file(path("train_report.csv"), report_csv(result.report));
    for (const char* name : {kModelFile, kEncoderFile, kStoreFile, "train.ds", "test.ds",
                             "train_report.csv"}) {
      out_ << "wrote: " << path(name) << "\n";
    }
    out_ << "epochs run: " << result.report.stopped_epoch + 1
         << ", best epoch: " << result.report.best_epoch << "\n";
  };
}

void Program::add_eval() {
  auto* s = sub("eval", "score a model on a dataset");
  paths_.add_options(s, false);
  s->add_option("--data", data_path_)->required();
  s->add_option("--threshold", threshold_);
  s->add_option("--out", out_path_, "metrics CSV (default: stdout)");
  handlers_[s] = [this] {
    const Loaded m = load(paths_);
    const Dataset data = project_for(load_dataset(data_path_), m.encoder);
    emit(out_, out_path_, metrics_csv(evaluate(m.net, m.encoder, data, threshold_)),
         "metrics");
  };
}

void Program::add_decide() {
  auto* s = sub("decide", "answer one access request");
  paths_.add_options(s, true);
  s->add_option("--uid", uid_)->required();
  s->add_option("--rid", rid_)->required();
  s->add_option("--op", op_)->required();
  s->add_option("--threshold", threshold_);
  handlers_[s] = [this] {
    const Loaded m = load(paths_);
    const MetadataStore store = load_store(paths_.store);
    out_ << format_decision(decide(m.net, m.encoder, store, uid_, rid_, op_, threshold_))
         << "\n";
  };
}

void Program::add_serve() {
  auto* s = sub("serve", "serve decisions over TCP until interrupted");
  paths_.add_options(s, true);
  s->add_option("--listen", listen_, "HOST:PORT");
  s->add_option("--threshold", threshold_);
  handlers_[s] = [this] {
    Loaded m = load(paths_);
    const auto engine = std::make_shared<const DecisionEngine>(
        std::move(m.net), std::move(m.encoder), load_store(paths_.store), threshold_);
    const auto [host, port] = parse_endpoint(listen_);
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    LineServer server([engine](std::string_view line) {
      return engine->handle_request(line);
    });
    const auto bound = server.bind(host, port);
    out_ << "listening: " << host << ":" << bound << std::endl;
    server.start();
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  };
}

void Program::add_explain() {
  auto* s = sub("explain", "integrated-gradients attribution per metadata");
  paths_.add_options(s, true);
  auto* local = s->add_flag("--local", local_, "one (uid, rid) pair");
  auto* global = s->add_flag("--global", global_, "mean over sampled tuples");
  local->excludes(global);
  s->add_option("--uid", uid_);
  s->add_option("--rid", rid_);
  s->add_option("--data", data_path_, "dataset sampled by --global");
  s->add_option("--op", op_);
  s->add_option("--steps", steps_);
  s->add_option("--samples", samples_);
  s->add_option("--class", class_, "grant or deny (--global)");
  s->add_option("--seed", seed_);
  s->add_option("--out", out_path_, "CSV (default: stdout)");
  handlers_[s] = [this] {
    if (local_ == global_) throw ConfigError("pass exactly one of --local and --global");
    const Loaded m = load(paths_);
    Attribution a;
    if (local_) {
      a = local_explain(m.net, m.encoder, load_store(paths_.store), uid_, rid_, op_, steps_);
    } else {
      if (data_path_.empty()) throw ConfigError("--global needs --data");
      const Dataset data = project_for(load_dataset(data_path_), m.encoder);
      a = global_explain(m.net, m.encoder, data, op_, parse_class(class_), samples_, seed_,
                         steps_);
    }
    emit(out_, out_path_, attribution_csv(a, m.encoder.num_user_meta()), "attribution");
  };
}

void Program::add_flip_study() {
  auto* s = sub("flip-study", "replace metadata of denied tuples with a donor's");
  paths_.add_options(s, false);
  s->add_option("--data", data_path_)->required();
  s->add_option("--op", op_);
  s->add_option("--donor-uid", donor_uid_);
  s->add_option("--donor-rid", donor_rid_);
  s->add_option("--order", order_, "comma-separated metadata names");
  s->add_option("--steps", steps_);
  s->add_option("--samples", samples_);
  s->add_option("--seed", seed_);
  s->add_option("--threshold", threshold_);
  s->add_option("--out", out_path_, "CSV (default: stdout)");
  handlers_[s] = [this] {
    const Loaded m = load(paths_);
    const Dataset data = project_for(load_dataset(data_path_), m.encoder);
    const AuthorizationTuple* donor = nullptr;
    if (donor_uid_ || donor_rid_) {
      if (!donor_uid_ || !donor_rid_) {
        throw ConfigError("--donor-uid and --donor-rid go together");
      }
      for (const auto& t : data.tuples()) {
        if (t.uid == *donor_uid_ && t.rid == *donor_rid_) donor = &t;
      }
      if (!donor) throw NotFoundError("donor pair is not in the dataset");
    } else {
      const auto probs = soft_labels(m.net, m.encoder, data, op_);
      for (std::size_t i = 0; i < data.size() && !donor; ++i) {
        if (data[i].ops[op_] && grants(probs[i], threshold_)) donor = &data[i];
      }
      if (!donor) throw Error("no tuple is granted op" + std::to_string(op_));
      out_ << "donor: " << donor->uid << " " << donor->rid << "\n";
    }
    std::vector<std::size_t> order;
    if (order_.empty()) {
      order = significance_order(global_explain(m.net, m.encoder, data, op_,
                                                DecisionClass::kGrant, samples_, seed_,
                                                steps_));
    } else {
      for (const auto& name : split_list(order_)) {
        order.push_back(
            metadata_index(name, m.encoder.num_user_meta(), m.encoder.num_res_meta()));
      }
    }
    const FlipCurve curve =
        flip_study(m.net, m.encoder, data, op_, *donor, order, threshold_);
    emit(out_, out_path_, flip_curve_csv(curve), "curve");
  };
}

void Program::add_distill() {
  auto* s = sub("distill", "fit a regression tree to the network's probabilities");
  paths_.add_options(s, true);
  s->add_option("--data", data_path_, "default: train.ds next to the model");
  s->add_flag("--full", full_, "fit on train.ds and test.ds together");
  s->add_option("--op", op_);
  s->add_option("--max-depth", max_depth_, "integer or 'unlimited'");
  s->add_option("--min-samples-leaf", min_samples_leaf_);
  s->add_option("--threshold", threshold_);
  s->add_option("--rule-uid", rule_uid_, "print the rule for this pair");
  s->add_option("--rule-rid", rule_rid_);
  s->add_option("--out", out_path_, "tree file")->required();
  handlers_[s] = [this] {
    const Loaded m = load(paths_);
    Dataset data = [&] {
      if (!data_path_.empty()) return load_dataset(data_path_);
      Dataset train_set = load_dataset((fs::path(paths_.dir) / "train.ds").string());
      if (!full_) return train_set;
      const Dataset test_set = load_dataset((fs::path(paths_.dir) / "test.ds").string());
      auto tuples = train_set.tuples();
      tuples.insert(tuples.end(), test_set.tuples().begin(), test_set.tuples().end());
      return Dataset(train_set.num_user_meta(), train_set.num_res_meta(),
                     train_set.num_ops(), std::move(tuples));
    }();
    data = project_for(data, m.encoder);
    const DistilledTree tree = distill(m.net, m.encoder, data, op_,
                                       parse_depth(max_depth_), min_samples_leaf_);
    save_tree(tree, out_path_);
    char buf[128];
    std::snprintf(buf, sizeof buf, "training_mse: %.9f\nfidelity: %.6f\n",
                  tree.training_mse,
                  fidelity(tree, m.net, m.encoder, data, op_, threshold_));
    out_ << "tree: " << out_path_ << "\n" << buf;
    if (rule_uid_ || rule_rid_) {
      if (!rule_uid_ || !rule_rid_) throw ConfigError("--rule-uid and --rule-rid go together");
      const MetadataStore store = load_store(paths_.store);
      const auto& um = store.user(*rule_uid_);
      const auto& rm = store.resource(*rule_rid_);
      const ExtractedRule rule = extract_rule(
          tree, std::span<const MetaValue>(um.data(), tree.num_user_meta),
          std::span<const MetaValue>(rm.data(), tree.num_res_meta));
      std::snprintf(buf, sizeof buf, "%.6f", rule.value);
      out_ << "rule: " << rule.text << " -> " << buf << "\n";
    }
  };
}

// Turns `--config FILE` entries into flags placed ahead of the explicit ones,
// so explicit flags win (options keep their last value). Keys the
// subcommand does not know are skipped, letting one file serve several
// subcommands.
std::vector<std::string> Program::expand_config(const std::vector<std::string>& args) {
  if (args.empty()) return args;
  CLI::App* target = nullptr;
  for (auto* s : app_.get_subcommands([](CLI::App*) { return true; })) {
    if (s->get_name() == args[0]) target = s;
  }
  if (!target) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<std::string> expanded{args[0]};
  for (const auto& [key, value] : parse_config(read_file(path))) {
    const CLI::Option* opt = target->get_option_no_throw("--" + key);
    if (!opt || key == "config") continue;
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1" || value == "yes") expanded.push_back("--" + key);
    } else {
      expanded.push_back("--" + key);
      expanded.push_back(value);
    }
  }
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

int Program::run(const std::vector<std::string>& args) {
  if (!args.empty() && !args[0].starts_with("-") &&
      !app_.get_subcommand_no_throw(args[0])) {
    err_ << "error: unknown subcommand '" << args[0] << "'\n" << app_.help();
    return 2;
  }
  try {
    std::vector<std::string> argv_storage{"dlbac"};
    const auto expanded = expand_config(args);
    argv_storage.insert(argv_storage.end(), expanded.begin(), expanded.end());
    std::vector<std::string> reversed(argv_storage.rbegin(), argv_storage.rend() - 1);
    try {
      app_.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out_ << app_.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app_.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n";
      bool known = false;
      for (auto* s : app_.get_subcommands([](CLI::App*) { return true; })) {
        if (!args.empty() && s->get_name() == args[0]) {
          err_ << s->help();
          known = true;
        }
      }
      if (!known) err_ << app_.help();
      return 2;
    }
    for (auto& [app, handler] : handlers_) {
      if (app->parsed()) handler();
    }
    return 0;
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t ln = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++ln;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(ln, "expected 'key = value'");
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(ln, "empty key");
    for (auto& c : key) {
      if (c == '_') c = '-';
    }
    out[key] = value;
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Program program(out, err);
  return program.run(args);
}

}  // namespace dlbac::cli
