#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "onn/checkpoint.hpp"
#include "onn/datapipe.hpp"
#include "onn/errors.hpp"
#include "onn/gradcheck.hpp"
#include "onn/modelcheck.hpp"
#include "onn/modelzoo.hpp"
#include "onn/synth.hpp"
#include "onn/trainer.hpp"

namespace onn::cli {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

const std::string& require(const RunConfig& c, const std::string& key) {
  const std::string& v = c.str(key);
  if (v.empty()) throw ConfigError("missing required key '" + key + "'");
  return v;
}

char parse_delimiter(const std::string& d) {
  if (d == "tab" || d == "\\t") return '\t';
  if (d == "comma") return ',';
  if (d == "space") return ' ';
  if (d.size() == 1) return d[0];
  throw ConfigError("delimiter must be tab, comma, space or one character, got '" + d + "'");
}

// Commented so that a report file can be fed back as a config file.
std::string commented(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  f.flush();
  if (!f) throw DataError("failed writing " + path);
}

ModelConfig model_config(const RunConfig& c) {
  ModelConfig m;
  m.kind = parse_model_kind(c.str("model"));
  m.variant = parse_product_variant(c.str("variant"));
  m.embed_dim = c.count("embed_dim");
  m.copy_dim = c.count("copy_dim");
  m.subnet_width = c.count("subnet_width");
  m.init_scale = c.real("init_scale");
  if (!(m.init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
  m.shallow_terms = c.flag("shallow_terms");
  m.pairwise = c.flag("pairwise");
  m.mlp.hidden = c.counts("hidden");
  const std::size_t depth = c.count("depth");
  if (depth > 0) {
    if (m.mlp.hidden.empty()) throw ConfigError("depth needs at least one width in hidden");
    m.mlp.hidden.resize(depth, m.mlp.hidden.back());
  }
  for (auto h : m.mlp.hidden) {
    if (h == 0) throw ConfigError("hidden widths must be positive");
  }
  m.mlp.batch_norm = c.flag("batch_norm");
  m.mlp.dropout = c.real("dropout");
  m.mlp.bn_momentum = c.real("bn_momentum");
  m.mlp.bn_epsilon = c.real("bn_eps");
  return m;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  const std::string& mode = c.str("mode");
  if (mode == "offline") {
    t.mode = StreamMode::Offline;
  } else if (mode == "online") {
    t.mode = StreamMode::Online;
  } else {
    throw ConfigError("mode must be offline or online, got '" + mode + "'");
  }
  t.epochs = c.count("epochs");
  t.batch_size = c.count("batch_size");
  if (t.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  t.adam.lr = c.real("lr");
  t.adam.beta1 = c.real("beta1");
  t.adam.beta2 = c.real("beta2");
  t.adam.epsilon = c.real("adam_eps");
  if (!(t.adam.lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0 && t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0)) {
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  }
  t.seed = static_cast<std::uint64_t>(c.integer("seed"));
  t.eval_interval = c.count("eval_interval");
  if (t.eval_interval == 0) throw ConfigError("eval_interval must be at least 1");
  t.eval_batch_size = c.count("eval_batch");
  if (t.eval_batch_size == 0) throw ConfigError("eval_batch must be at least 1");
  return t;
}

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string cardinality_list(const FeatureSchema& s) {
  std::string out;
  for (auto c : s.cardinalities()) out += (out.empty() ? "" : ",") + std::to_string(c);
  return out;
}

}  // namespace

int cmd_prepare(const RunConfig& c, std::ostream& out) {
  const std::string& input = require(c, "input");
  const std::string& out_path = require(c, "out");
  const char delim = parse_delimiter(c.str("delimiter"));
  const ColumnSpec spec = load_column_spec(require(c, "colspec"));

  RawTable table = read_delimited_file(input, delim, spec.column_count());
  FeatureSchema schema;
  if (!c.str("schema_from").empty()) {
    schema = load_dataset(c.str("schema_from")).schema;
    if (schema.column_count() != spec.column_count()) {
      throw ConfigError("schema_from has " + std::to_string(schema.column_count()) + " columns, the column spec " +
                        std::to_string(spec.column_count()));
    }
  } else {
    schema = build_schema(table, spec);
  }
  EncodeSummary summary;
  Dataset data = encode_table(table, schema, &summary);

  std::vector<RejectedRow> rejected = table.rejected;
  rejected.insert(rejected.end(), summary.rejected.begin(), summary.rejected.end());
  std::sort(rejected.begin(), rejected.end(), [](const auto& a, const auto& b) { return a.line < b.line; });

  out << "fields (m) = " << schema.field_count() << "\n";
  out << "cardinalities = " << cardinality_list(schema) << "\n";
  out << "rows read = " << table.rows.size() + table.rejected.size() << "\n";
  out << "rows accepted = " << data.samples.size() << "\n";
  out << "rows rejected = " << rejected.size() << "\n";
  constexpr std::size_t kShown = 20;
  for (std::size_t k = 0; k < rejected.size() && k < kShown; ++k) {
    out << "  line " << rejected[k].line << ": " << rejected[k].reason << "\n";
  }
  if (rejected.size() > kShown) out << "  ... " << rejected.size() - kShown << " more\n";
  if (data.samples.empty()) throw DataError("no valid rows in " + input);
  save_dataset(data, out_path);
  out << "wrote " << out_path << "\n";
  return kOk;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  const ModelConfig mcfg = model_config(c);
  TrainConfig tcfg = train_config(c);
  std::vector<double> grid = c.reals("lr_grid");
  for (double lr : grid) {
    if (!(lr > 0.0)) throw ConfigError("lr_grid entries must be positive");
  }

  out << "# effective config\n" << c.echo(kTrain);
  const Dataset train_set = load_dataset(require(c, "train"));
  const Dataset test_set = load_dataset(require(c, "test"));
  if (!(train_set.schema == test_set.schema)) {
    throw ConfigError("train and test caches were prepared with different schemas; use schema_from when preparing");
  }

  struct Run {
    double lr;
    ModelGraph graph;
    TrainResult result;
    EvalReport report;
  };
  const bool use_grid = !grid.empty();
  if (!use_grid) grid.push_back(tcfg.adam.lr);

  std::optional<Run> best;
  std::string runs_text;
  for (double lr : grid) {
    TrainConfig run_cfg = tcfg;
    run_cfg.adam.lr = lr;
    run_cfg.curve_path = use_grid ? "" : c.str("curve");
    SeededRng init_rng(tcfg.seed);
    Run run{lr, ModelGraph::build(train_set.schema, mcfg, init_rng), {}, {}};
    run.result = train(run.graph, train_set.samples, test_set.samples, run_cfg);
    run.report = evaluate_model(run.graph, test_set.samples, tcfg.eval_batch_size);
    std::string line = "run lr=" + fmt("%.6g", lr) + " steps=" + std::to_string(run.result.steps) +
                       " test_logloss=" + fmt("%.8f", run.report.logloss) + " test_auc=" + fmt("%.8f", run.report.auc);
    out << line << "\n";
    for (const CurvePoint& p : run.result.curve) out << "  curve " << format_curve_point(p) << "\n";
    runs_text += line + "\n";
    if (!best || run.report.logloss < best->report.logloss) best = std::move(run);
  }

  if (use_grid && !c.str("curve").empty()) {
    CurveWriter writer(c.str("curve"));
    for (const CurvePoint& p : best->result.curve) writer.write(p);
  }
  if (!c.str("checkpoint").empty()) {
    save_checkpoint(best->graph, train_set.schema.hash(), c.str("checkpoint"));
    out << "wrote checkpoint " << c.str("checkpoint") << "\n";
  }
  const std::string summary = "model=" + std::string(to_string(mcfg.kind)) + " variant=" +
                              std::string(to_string(mcfg.variant)) + " lr=" + fmt("%.6g", best->lr) +
                              " steps=" + std::to_string(best->result.steps) + "\n" + best->report.record() + "\n" +
                              best->report.table();
  out << "# final report\n" << summary;
  if (!c.str("report").empty()) {
    RunConfig echoed = c;
    if (use_grid) echoed.set("lr", fmt("%.17g", best->lr));
    write_text(c.str("report"), echoed.echo(kTrain) + commented(runs_text) + commented(summary));
  }
  return kOk;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  const Dataset test_set = load_dataset(require(c, "test"));
  const ModelGraph graph = load_checkpoint(require(c, "checkpoint"), test_set.schema);
  const EvalReport report = evaluate_model(graph, test_set.samples, c.count("eval_batch"));
  const std::string summary = "model=" + std::string(to_string(graph.kind())) + " variant=" +
                              std::string(to_string(graph.config().variant)) + "\n" + report.record() + "\n" +
                              report.table();
  out << summary;
  if (!c.str("report").empty()) write_text(c.str("report"), c.echo(kEval) + commented(summary));
  return kOk;
}

int cmd_gradcheck(const RunConfig& c, std::ostream& out) {
  ModelCheckSetup base;
  base.fields = c.count("gc_fields");
  base.max_cardinality = c.count("gc_cardinality");
  base.dim = c.count("gc_dim");
  base.hidden = c.counts("gc_hidden");
  base.batch = c.count("gc_batch");
  base.epsilon = c.real("gc_eps");
  base.seed = static_cast<std::uint64_t>(c.integer("seed"));
  const double tol = c.real("gc_tol");
  if (base.fields < 2 || base.max_cardinality < 2 || base.dim == 0 || base.batch < 2) {
    throw ConfigError("gradcheck needs gc_fields >= 2, gc_cardinality >= 2, gc_dim >= 1 and gc_batch >= 2");
  }
  if (!(base.epsilon > 0.0)) throw ConfigError("gc_eps must be positive");

  std::vector<ModelKind> kinds;
  for (const auto& name : split_names(c.str("gc_models"))) kinds.push_back(parse_model_kind(name));
  std::vector<ProductVariant> variants;
  for (const auto& name : split_names(c.str("gc_variants"))) variants.push_back(parse_product_variant(name));

  out << "# effective config\n" << c.echo(kGradcheck);
  bool all_passed = true;
  for (ModelKind kind : kinds) {
    const bool has_variants = kind == ModelKind::PNN || kind == ModelKind::ONN;
    const std::vector<ProductVariant> vs = has_variants ? variants : std::vector<ProductVariant>{ProductVariant::Inner};
    for (ProductVariant variant : vs) {
      ModelCheckSetup setup = base;
      setup.kind = kind;
      setup.variant = variant;
      const std::string label = std::string(to_string(kind)) + "/" + std::string(to_string(variant));
      try {
        const GradCheckReport report = run_model_gradcheck(setup);
        const bool ok = report.passed(tol);
        all_passed = all_passed && ok;
        out << (ok ? "PASS " : "FAIL ") << label << " max_relative_error=" << fmt("%.3e", report.max_relative_error())
            << "\n";
        for (const GroupError& g : report.groups) {
          out << "  " << g.name << " n=" << g.count << " rel=" << fmt("%.3e", g.relative_error)
              << " abs=" << fmt("%.3e", g.max_abs_error) << (g.relative_error < tol ? "" : "  <-- exceeds tolerance")
              << "\n";
        }
      } catch (const GradCheckError& e) {
        all_passed = false;
        out << "FAIL " << label << " non-finite probe at " << e.parameter() << "[" << e.index() << "]: " << e.what()
            << "\n";
      }
    }
  }
  out << (all_passed ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return all_passed ? kOk : kCheckFailed;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
  SynthConfig sc;
  sc.fields = c.count("fields");
  sc.cardinality = c.count("cardinality");
  sc.strength = c.real("strength");
  sc.seed = static_cast<std::uint64_t>(c.integer("seed"));
  const std::size_t n = c.count("n");
  if (n == 0) throw ConfigError("n must be at least 1");
  const std::string& out_path = require(c, "out");

  SynthGenerator gen(sc);
  std::vector<double> logits;
  Dataset train_set = gen.sample(n, &logits);
  save_dataset(train_set, out_path);
  write_logits(logits, out_path + ".logits");
  std::size_t positives = 0;
  for (const Sample& s : train_set.samples) positives += s.label;
  out << "wrote " << out_path << " (" << n << " rows, positive rate "
      << fmt("%.4f", static_cast<double>(positives) / static_cast<double>(n)) << ")\n";
  if (!c.str("test_out").empty()) {
    const std::size_t test_n = c.count("test_n");
    if (test_n == 0) throw ConfigError("test_n must be at least 1");
    Dataset test_set = gen.sample(test_n, &logits);
    save_dataset(test_set, c.str("test_out"));
    write_logits(logits, c.str("test_out") + ".logits");
    out << "wrote " << c.str("test_out") << " (" << test_n << " rows)\n";
  }
  return kOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Click-response models with operation-aware embeddings"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  struct Sub {
    CLI::App* app;
    unsigned scope;
    int (*run)(const RunConfig&, std::ostream&);
    std::string config_path;
    std::map<std::string, std::string> overrides;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto add = [&](const char* name, const char* description, unsigned scope, int (*run)(const RunConfig&, std::ostream&)) {
    auto sub = std::make_unique<Sub>();
    sub->app = app.add_subcommand(name, description);
    sub->scope = scope;
    sub->run = run;
    sub->app->add_option("--config", sub->config_path, "flat `key = value` file; --key flags override it");
    for (const KeySpec& k : config_keys()) {
      if (!(k.scopes & scope)) continue;
      std::string help(k.help);
      help += " [default: " + (k.default_value.empty() ? std::string("none") : std::string(k.default_value)) + "]";
      if (!k.reference_value.empty()) help += " [reference setting: " + std::string(k.reference_value) + "]";
      const std::string key(k.key);
      sub->options[key] = sub->app->add_option("--" + key, sub->overrides[key], help);
    }
    subs.push_back(std::move(sub));
  };
  add("prepare", "Discretize and encode a raw delimited file into a dataset cache", kPrepare, cmd_prepare);
  add("train", "Train a model; writes curve CSV, checkpoint and report", kTrain, cmd_train);
  add("eval", "Evaluate a checkpoint on a dataset cache", kEval, cmd_eval);
  add("gradcheck", "Compare hand-written gradients with central differences", kGradcheck, cmd_gradcheck);
  add("synth", "Generate a synthetic pairwise-interaction dataset", kSynth, cmd_synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  for (auto& sub : subs) {
    if (!sub->app->parsed()) continue;
    try {
      RunConfig config;
      if (!sub->config_path.empty()) config.merge_file(sub->config_path);
      for (auto& [key, opt] : sub->options) {
        if (opt->count() > 0) config.set(key, sub->overrides[key]);
      }
      return sub->run(config, out);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << "\n";
      return kUsageError;
    } catch (const DataError& e) {
      err << "data error: " << e.what() << "\n";
      return kRuntimeError;
    } catch (const TrainingError& e) {
      err << "training error: " << e.what() << "\n";
      return kRuntimeError;
    } catch (const MetricError& e) {
      err << "metric error: " << e.what() << "\n";
      return kRuntimeError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kRuntimeError;
    }
  }
  return kUsageError;
}

}  // namespace onn::cli
