#include "netforge/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "netforge/analysis.hpp"
#include "netforge/architectures.hpp"
#include "netforge/checkpoint.hpp"
#include "netforge/dataset.hpp"
#include "netforge/error.hpp"
#include "netforge/gradcheck.hpp"
#include "netforge/graph_io.hpp"
#include "netforge/training.hpp"

namespace fs = std::filesystem;

namespace netforge::cli {

namespace {

ActShape parse_shape(const std::string& text) {
  ActShape shape;
  char x1 = 0, x2 = 0, extra = 0;
  std::istringstream in(text);
  if (!(in >> shape.c >> x1 >> shape.h >> x2 >> shape.w) || x1 != 'x' || x2 != 'x' || (in >> extra)) {
    throw InputError("expected CxHxW, got '" + text + "'");
  }
  return shape;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

fs::path config_path_for(const fs::path& checkpoint) {
  return fs::path(checkpoint.string() + ".config.json");
}

Graph build_named(const std::string& name, std::size_t classes) {
  if (name == "vgg16") return build_vgg16(classes);
  if (name == "res-squ-vgg16") return build_res_squ_vgg16(classes);
  if (name == "res-squ-vgg16-skeleton") return build_conv_skeleton(res_squ_vgg16_layout(), classes);
  if (name == "mini-res-squ") return build_residual_squeeze(mini_res_squ_layout(), classes);
  if (name == "mini-res-squ-skeleton") return build_conv_skeleton(mini_res_squ_layout(), classes);
  if (name == "gradcheck-net") return build_residual_squeeze(gradcheck_layout(), classes);
  throw InputError("unknown architecture '" + name +
                   "' (expected vgg16, res-squ-vgg16, res-squ-vgg16-skeleton, mini-res-squ, "
                   "mini-res-squ-skeleton or gradcheck-net)");
}

SqueezeVggLayout layout_for_skeleton(const std::string& name) {
  if (name == "res-squ-vgg16-skeleton") return res_squ_vgg16_layout();
  if (name == "mini-res-squ-skeleton") return mini_res_squ_layout();
  throw InputError("--plan-out applies only to skeleton builds");
}

void print_plans(std::ostream& out, const std::vector<ShortcutPlan>& plans) {
  out << "shortcuts " << plans.size() << "\n";
  for (const auto& plan : plans) {
    out << "  " << plan.source << " -> " << plan.join << " (bypasses through " << plan.target << ")  ";
    if (plan.projection_channels) {
      out << "projection 1x1 to " << *plan.projection_channels << " channels";
    } else {
      out << "identity";
    }
    out << "\n";
  }
}

std::string describe(const Graph& graph) {
  const auto shapes = infer_shapes(graph, graph.input);
  std::ostringstream out;
  out << "network " << graph.name << "  input " << to_string(graph.input) << "  classes " << graph.classes
      << "\n";
  std::map<std::string, std::size_t> census;
  for (std::size_t i : topological_order(graph)) {
    const NodeSpec& node = graph.nodes[i];
    std::string inputs;
    for (const auto& in : node.inputs) inputs += (inputs.empty() ? "" : ",") + in;
    out << std::left << std::setw(16) << node.id << std::setw(16) << to_string(node.kind) << std::setw(16)
        << to_string(shapes.at(node.id)) << std::setw(28) << inputs << params_to_json(node).dump() << "\n";
    ++census[std::string(to_string(node.kind))];
  }
  out << "census";
  for (const auto& [kind, count] : census) out << " " << kind << "=" << count;
  out << "\n";
  return out.str();
}

struct TrainFlags {
  std::string arch, data, out, history;
  std::size_t epochs = 50, batch = 128, batch_val = 64, crop = 227, resize = 256, step_epochs = 10;
  double lr = 0.01, momentum = 0.9, decay = 5.0, pixel_scale = 1.0, weight_decay = 0.0;
  bool no_mirror = false, halve_weight_decay = false;
  std::uint64_t seed = 1;
};

int cmd_train(const TrainFlags& f, std::ostream& out) {
  const Graph graph = load_graph(f.arch);
  TrainConfig cfg;
  cfg.lr0 = f.lr;
  cfg.decay_factor = f.decay;
  cfg.step_epochs = f.step_epochs;
  cfg.epochs = f.epochs;
  cfg.batch_train = f.batch;
  cfg.batch_val = f.batch_val;
  cfg.momentum = f.momentum;
  cfg.resize = f.resize;
  cfg.crop = f.crop;
  cfg.mirror = !f.no_mirror;
  cfg.pixel_scale = static_cast<float>(f.pixel_scale);
  cfg.weight_decay = f.weight_decay;
  cfg.halve_weight_decay = f.halve_weight_decay;
  cfg.seed = f.seed;
  check_config(cfg);

  const LoadedDataset loaded = load_dataset(f.data, cfg.resize);
  for (const auto& w : loaded.train_index.warnings) out << "warning: " << w << "\n";
  for (const auto& w : loaded.val_index.warnings) out << "warning: " << w << "\n";
  if (loaded.data.classes != graph.classes) {
    throw InputError("dataset has " + std::to_string(loaded.data.classes) + " classes, network '" + graph.name +
                     "' has " + std::to_string(graph.classes));
  }
  for (std::size_t c = 0; c < 3; ++c) cfg.mean[c] = static_cast<float>(loaded.train_index.means[c]);

  const fs::path history_path = f.history.empty() ? fs::path(f.out + ".history.csv") : fs::path(f.history);
  out << "training " << graph.name << " on " << loaded.data.train.size() << " images ("
      << loaded.data.val.size() << " validation), " << cfg.epochs << " epochs\n";
  const TrainResult result = train_loop(graph, loaded.data, cfg, [&](const EpochStats& row) {
    char line[200];
    std::snprintf(line, sizeof line, "epoch %3zu  lr %.3g  loss %.4f  top1 %.4f  top5 %.4f  val_top1 %.4f\n",
                  row.epoch, row.lr, row.train.loss, row.train.top1, row.train.top5, row.val.top1);
    out << line << std::flush;
  });

  std::string csv = history_header() + "\n";
  for (const auto& row : result.history) csv += history_row(row) + "\n";
  write_file_atomic(history_path, csv);
  write_file_atomic(config_path_for(f.out), config_to_json(cfg).dump(2) + "\n");
  save_checkpoint(result.checkpoint, f.out);
  out << "wrote " << f.out << " and " << history_path.string() << "\n";
  return kOk;
}

int cmd_eval(const std::string& arch, const std::string& ckpt_path, const std::string& data,
             const std::string& config_override, std::ostream& out) {
  const Graph graph = load_graph(arch);
  const Checkpoint ckpt = load_checkpoint(ckpt_path, graph);
  const fs::path config_path = config_override.empty() ? config_path_for(ckpt_path) : fs::path(config_override);
  std::ifstream in(config_path);
  if (!in) throw InputError("missing training config '" + config_path.string() + "'");
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(config_path.string() + ": " + e.what());
  }
  const TrainConfig cfg = config_from_json(doc);
  const LoadedDataset loaded = load_dataset(data, cfg.resize);
  if (loaded.data.val.size() == 0) throw InputError("dataset '" + data + "' has no validation split");
  const EvalStats stats = evaluate(graph, ckpt.weights, loaded.data.val, cfg);
  out << "val_loss " << format_double(stats.loss) << "\n";
  out << "val_top1 " << format_double(stats.top1) << "\n";
  out << "val_top5 " << format_double(stats.top5) << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"netforge: build, analyze, transform and train squeezed residual VGG networks"};
  app.require_subcommand(1);
  int status = kOk;

  // build
  std::string build_name, build_out, build_plan_out;
  std::size_t build_classes = 365;
  auto* build_cmd = app.add_subcommand("build", "write an architecture file");
  build_cmd->add_option("name", build_name, "vgg16 | res-squ-vgg16 | res-squ-vgg16-skeleton | mini-res-squ | ...")
      ->required();
  build_cmd->add_option("--classes", build_classes, "output classes")->check(CLI::PositiveNumber);
  build_cmd->add_option("--out", build_out, "architecture file to write")->required();
  build_cmd->add_option("--plan-out", build_plan_out, "also write the squeeze plan of a skeleton build");
  build_cmd->callback([&] {
    const Graph graph = build_named(build_name, build_classes);
    save_graph(graph, build_out);
    if (!build_plan_out.empty()) {
      write_file_atomic(build_plan_out, plan_to_json(squeeze_plan(layout_for_skeleton(build_name))).dump(2) + "\n");
    }
    out << "wrote " << build_out << " (" << graph.nodes.size() << " nodes)\n";
  });

  // describe
  std::string describe_arch;
  auto* describe_cmd = app.add_subcommand("describe", "list nodes with output shapes");
  describe_cmd->add_option("arch", describe_arch, "architecture file")->required();
  describe_cmd->callback([&] { out << describe(load_graph(describe_arch)); });

  // analyze
  std::string analyze_arch, analyze_input, analyze_compare, analyze_out;
  auto* analyze_cmd = app.add_subcommand("analyze", "parameter, size and receptive-field report");
  analyze_cmd->add_option("arch", analyze_arch, "architecture file")->required();
  analyze_cmd->add_option("--input", analyze_input, "input shape CxHxW (default: the file's)");
  analyze_cmd->add_option("--compare", analyze_compare, "second architecture to compare against");
  analyze_cmd->add_option("--out", analyze_out, "also write the report as JSON");
  analyze_cmd->callback([&] {
    const Graph graph = load_graph(analyze_arch);
    const ActShape input = analyze_input.empty() ? graph.input : parse_shape(analyze_input);
    const AnalysisReport report = analyze(graph, input);
    nlohmann::ordered_json doc;
    if (analyze_compare.empty()) {
      out << render_text(report);
      doc = to_json(report);
    } else {
      const Comparison cmp = compare(graph, load_graph(analyze_compare));
      out << render_text(cmp);
      doc = to_json(cmp);
    }
    if (!analyze_out.empty()) write_file_atomic(analyze_out, doc.dump(2) + "\n");
  });

  // transform
  std::string transform_arch, transform_plan, transform_out;
  bool transform_residualize = false;
  auto* transform_cmd = app.add_subcommand("transform", "apply the squeeze and/or residualize transforms");
  transform_cmd->add_option("arch", transform_arch, "architecture file")->required();
  transform_cmd->add_option("--plan", transform_plan, "squeeze plan (JSON map conv id -> [s1x1,e1x1,e3x3])");
  transform_cmd->add_flag("--residualize", transform_residualize, "insert pool-to-block shortcuts");
  transform_cmd->add_option("--out", transform_out, "architecture file to write")->required();
  transform_cmd->callback([&] {
    Graph graph = load_graph(transform_arch);
    if (!transform_plan.empty()) {
      const SqueezePlan plan = load_plan(transform_plan);
      graph = squeeze_transform(graph, plan);
      out << "squeezed " << plan.size() << " convolutions\n";
    }
    if (transform_residualize) {
      ResidualizeResult result = residualize(graph);
      print_plans(out, result.plans);
      graph = std::move(result.graph);
    }
    require_valid(graph);
    save_graph(graph, transform_out);
    out << "wrote " << transform_out << "\n";
  });

  // gradcheck
  GradcheckOptions grad_options;
  std::string perturb_check;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference check of every backward kernel");
  gradcheck_cmd->add_option("--seed", grad_options.seed, "random seed");
  gradcheck_cmd->add_option("--perturb", perturb_check, "scale one check's analytic gradient by 1.01 (fault injection)")
      ->group("");
  gradcheck_cmd->callback([&] {
    if (!perturb_check.empty()) {
      grad_options.perturb = [&](const std::string& check, Tensor<double>& grad) {
        if (check == perturb_check) {
          for (auto& v : grad.data()) v *= 1.01;
        }
      };
    }
    const auto results = run_gradcheck(grad_options);
    out << render_gradcheck(results);
    for (const auto& r : results) {
      if (!r.passed()) {
        err << "gradient check failed: " << r.name << " (max relative error " << r.max_rel_error << ")\n";
        status = kCheckFailed;
      }
    }
  });

  // synth
  SynthSpec synth_spec;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic oriented-bar dataset");
  synth_cmd->add_option("--out", synth_out, "dataset root")->required();
  synth_cmd->add_option("--classes", synth_spec.classes, "classes");
  synth_cmd->add_option("--per-class", synth_spec.per_class, "images per class (10% go to val)");
  synth_cmd->add_option("--extent", synth_spec.extent, "image width and height");
  synth_cmd->add_option("--noise", synth_spec.noise, "noise amplitude in [0,1)");
  synth_cmd->add_option("--seed", synth_spec.seed, "random seed");
  synth_cmd->callback([&] {
    const SynthCounts counts = make_synth(synth_spec, synth_out);
    out << "wrote " << counts.train << " train and " << counts.val << " val images to " << synth_out << "\n";
  });

  // train
  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "train a network on a folder dataset");
  train_cmd->add_option("arch", tf.arch, "architecture file")->required();
  train_cmd->add_option("data", tf.data, "dataset root holding train/ and val/")->required();
  train_cmd->add_option("--out", tf.out, "checkpoint to write")->required();
  train_cmd->add_option("--history", tf.history, "history CSV (default: <out>.history.csv)");
  train_cmd->add_option("--epochs", tf.epochs, "epochs");
  train_cmd->add_option("--lr", tf.lr, "initial learning rate");
  train_cmd->add_option("--batch", tf.batch, "training batch size");
  train_cmd->add_option("--batch-val", tf.batch_val, "validation batch size");
  train_cmd->add_option("--momentum", tf.momentum, "SGD momentum");
  train_cmd->add_option("--decay", tf.decay, "learning-rate divisor per step");
  train_cmd->add_option("--step-epochs", tf.step_epochs, "epochs per learning-rate step");
  train_cmd->add_option("--resize", tf.resize, "extent images are resized to");
  train_cmd->add_option("--crop", tf.crop, "crop extent");
  train_cmd->add_flag("--no-mirror", tf.no_mirror, "disable horizontal reflection");
  train_cmd->add_option("--pixel-scale", tf.pixel_scale, "multiplier applied after mean subtraction");
  train_cmd->add_option("--weight-decay", tf.weight_decay, "L2 weight decay");
  train_cmd->add_flag("--halve-weight-decay", tf.halve_weight_decay, "halve weight decay at every step");
  train_cmd->add_option("--seed", tf.seed, "random seed");
  train_cmd->callback([&] { status = cmd_train(tf, out); });

  // eval
  std::string eval_arch, eval_ckpt, eval_data, eval_config;
  auto* eval_cmd = app.add_subcommand("eval", "top-1/top-5 of a checkpoint on the validation split");
  eval_cmd->add_option("arch", eval_arch, "architecture file")->required();
  eval_cmd->add_option("checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("data", eval_data, "dataset root")->required();
  eval_cmd->add_option("--config", eval_config, "training config (default: <checkpoint>.config.json)");
  eval_cmd->callback([&] { status = cmd_eval(eval_arch, eval_ckpt, eval_data, eval_config, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return status;
}

}  // namespace netforge::cli
