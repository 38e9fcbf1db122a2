#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "wmr/errors.hpp"
#include "wmr/feature_extractor.hpp"
#include "wmr/procedural.hpp"

namespace wmr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string format(const char* fmt, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

void require_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".wmr_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("directory not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FileNotFoundError("directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Image center_square(const Image& img) {
  const int side = std::min(img.height(), img.width());
  const int top = (img.height() - side) / 2;
  const int left = (img.width() - side) / 2;
  Image out(side, side, img.channels());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) out.at(c, y, x) = img.at(c, top + y, left + x);
  return out;
}

/// Every file a split refers to must exist before training or scoring starts.
void check_split_files(const DatasetManifest& m, Split split) {
  const auto rows = m.rows_in(split);
  if (rows.empty()) throw DataError(to_string(split) + " split of the manifest is empty");
  for (const auto& r : rows) {
    for (const auto& rel : {r.x_path, r.y_path}) {
      if (!fs::is_regular_file(m.resolve(rel))) {
        throw FileNotFoundError("manifest refers to missing file " + m.resolve(rel).string());
      }
    }
  }
}

DatasetManifest load_checked_manifest(const RunConfig& cfg, Split split) {
  DatasetManifest m = read_manifest(cfg.manifest_path());
  check_split_files(m, split);
  return m;
}

void print_epoch(std::ostream& out, const std::string& prefix, const EpochMetrics& e) {
  out << prefix << "epoch " << e.epoch << ": l1 " << format("%.5f", e.mean_l1) << "  perceptual "
      << format("%.5g", e.mean_perceptual) << "  total " << format("%.5f", e.mean_total_g);
  if (e.mean_d_loss) out << "  d " << format("%.5f", *e.mean_d_loss);
  out << '\n';
}

std::string slug(const std::string& s) {
  std::string out;
  for (char ch : s) out += (ch == '+' || ch == ' ') ? '_' : ch;
  return out;
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) != nullptr) return kExitData;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kExitNumeric;
  if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) return kExitData;
  return kExitFailure;
}

DatasetManifest cmd_synthesize(const RunConfig& cfg, std::ostream& out) {
  const SynthesisConfig& s = cfg.synthesis;
  const fs::path root = cfg.dataset_dir;
  const int side = s.base_side > 0 ? s.base_side : cfg.train.generator.input_side;
  const RngStream rng(cfg.seed);

  // Inputs are checked before anything is written.
  std::vector<fs::path> sources;
  if (!s.bases_dir.empty()) {
    sources = sorted_files(s.bases_dir);
    if (sources.empty()) throw DataError("no base images in " + s.bases_dir.string());
  }
  std::vector<WatermarkAsset> wms;
  if (!s.watermarks_dir.empty()) {
    wms = load_watermarks(s.watermarks_dir);
    if (wms.empty()) throw DataError("no watermarks in " + s.watermarks_dir.string());
  } else {
    for (int i = 0; i < s.procedural_watermarks; ++i) {
      char id[16];
      std::snprintf(id, sizeof id, "wm%02d", i);
      wms.push_back(procedural_watermark(rng.derive("watermarks").derive(static_cast<std::uint64_t>(i)),
                                         id, s.watermark_height, s.watermark_width));
    }
  }
  if (wms.empty()) throw ConfigError("synthesis needs at least one watermark");
  require_writable_dir(root);

  std::vector<fs::path> bases;
  const fs::path base_dir = root / "bases";
  fs::create_directories(base_dir);
  if (!sources.empty()) {
    for (const auto& p : sources) {
      Image img;
      try {
        img = load_image(p);
      } catch (const DataError& e) {
        std::clog << "skipping base " << p.string() << ": " << e.what() << '\n';
        continue;
      }
      char name[32];
      std::snprintf(name, sizeof name, "base_%04zu.png", bases.size());
      bases.push_back(base_dir / name);
      save_image(resize(center_square(to_rgb(img)), side, side), bases.back());
    }
    if (bases.empty()) throw DataError("no decodable base images in " + s.bases_dir.string());
  } else {
    for (int i = 0; i < s.procedural_bases; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "base_%04d.png", i);
      bases.push_back(base_dir / name);
      save_image(procedural_base(rng.derive("bases").derive(static_cast<std::uint64_t>(i)), side, side),
                 bases.back());
    }
  }
  fs::create_directories(root / "watermarks");
  for (const auto& wm : wms) save_image(wm.image, root / "watermarks" / (wm.id + ".png"));

  BuildOptions o;
  o.output_root = root;
  o.per_watermark = s.per_watermark;
  o.split_ratio = s.split_ratio;
  o.seed = cfg.seed;
  o.ranges = s.ranges;
  o.workers = s.workers;
  o.max_retries = s.max_retries;
  DatasetManifest m = build_dataset(bases, wms, o);

  const auto train_ids = m.watermark_ids(Split::train);
  const auto test_ids = m.watermark_ids(Split::test);
  auto join = [](const std::set<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : ",") + id;
    return s;
  };
  const fs::path manifest = root / "manifest.txt";
  out << "pairs: " << m.rows.size() << " (train " << m.rows_in(Split::train).size() << ", test "
      << m.rows_in(Split::test).size() << ")\n"
      << "watermarks: train " << train_ids.size() << " [" << join(train_ids) << "], test "
      << test_ids.size() << " [" << join(test_ids) << "]\n"
      << "bases: " << bases.size() << " at " << side << "x" << side << '\n'
      << "manifest: " << manifest.string() << '\n'
      << "manifest sha256: " << sha256_file(manifest) << '\n';
  return m;
}

TrainResult cmd_train(const RunConfig& cfg, const TrainArgs& args, std::ostream& out) {
  std::optional<Checkpoint> resume;
  if (args.resume) resume = load_checkpoint(*args.resume);
  const TrainConfig tc = resume ? resume->config : cfg.train;
  tc.validate();
  const DatasetManifest m = load_checked_manifest(cfg, Split::train);
  (void)FeatureExtractor::from_config(tc.extractor);
  require_writable_dir(cfg.output_dir);
  if (resume && to_json(resume->config) != to_json(cfg.train)) {
    out << "note: resuming with the checkpoint's training config, not the config file's\n";
  }
  write_text(cfg.output_dir / "run_config.json", to_json(cfg).dump(2) + "\n");

  TrainOptions o;
  o.output_dir = cfg.output_dir;
  o.resume = std::move(resume);
  o.max_steps = args.max_steps;
  o.on_epoch = [&out](const EpochMetrics& e) { print_epoch(out, "", e); };
  out << "training " << to_string(tc.loss) << " (" << to_string(tc.discriminator_kind)
      << " discriminator) on " << m.rows_in(Split::train).size() << " pairs, " << tc.epochs
      << " epochs, seed " << tc.seed << '\n';
  TrainResult r = train(m, tc, o);
  out << "steps: " << r.final_checkpoint.step << (r.completed ? " (complete)" : " (stopped early)")
      << '\n'
      << "checkpoint: " << (cfg.output_dir / (r.completed ? "final.ckpt" : "latest.ckpt")).string()
      << '\n';
  return r;
}

RemoveSummary cmd_remove(const fs::path& checkpoint, const fs::path& input, const fs::path& output,
                         std::ostream& out, std::ostream& err) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (!fs::exists(input)) throw FileNotFoundError("input not found: " + input.string());
  RemoveSummary summary;

  if (!fs::is_directory(input)) {
    fs::path dest = output;
    if (fs::is_directory(output)) dest = output / (input.stem().string() + ".png");
    const Image x = load_image(input);
    if (!dest.parent_path().empty()) fs::create_directories(dest.parent_path());
    save_image(remove_watermark_resized(ckpt.generator, x), dest);
    summary.written.push_back(dest);
    out << "wrote " << dest.string() << '\n';
    return summary;
  }

  require_writable_dir(output);
  std::set<std::string> used;
  for (const auto& p : sorted_files(input)) {
    Image x;
    try {
      x = load_image(p);
    } catch (const DataError& e) {
      err << "skipped " << p.string() << ": " << e.what() << '\n';
      summary.skipped.push_back(p);
      continue;
    }
    // Inputs sharing a stem keep their extension in the name.
    std::string name = p.stem().string();
    if (!used.insert(name).second) name = p.filename().string();
    used.insert(name);
    const fs::path dest = output / (name + ".png");
    save_image(remove_watermark_resized(ckpt.generator, x), dest);
    summary.written.push_back(dest);
  }
  out << "wrote " << summary.written.size() << " image(s) to " << output.string() << ", skipped "
      << summary.skipped.size() << '\n';
  return summary;
}

std::vector<EvalReport> cmd_evaluate(const RunConfig& cfg, const EvaluateArgs& args,
                                     std::ostream& out) {
  if (!args.checkpoint && !args.identity) {
    throw ConfigError("evaluate needs --checkpoint or --identity");
  }
  std::optional<Checkpoint> ckpt;
  if (args.checkpoint) ckpt = load_checkpoint(*args.checkpoint);
  const DatasetManifest m = load_checked_manifest(cfg, args.split);
  const fs::path dir = args.output_dir.empty() ? cfg.output_dir / "evaluation" : args.output_dir;
  require_writable_dir(dir);

  EvalOptions o;
  o.split = args.split;
  o.workers = cfg.eval_workers;
  std::vector<EvalReport> reports;
  if (args.identity) reports.push_back(evaluate_identity(m, o));
  if (ckpt) {
    o.label = args.checkpoint->stem().string();
    reports.push_back(evaluate(*ckpt, m, o));
  }

  json j = {{"split", to_string(args.split)},
            {"manifest", cfg.manifest_path().string()},
            {"conventions", metric_conventions()},
            {"reports", json::array()}};
  for (const auto& r : reports) j["reports"].push_back(to_json(r));
  const std::string table = format_table(reports, "Evaluation (" + to_string(args.split) + " split)");
  write_text(dir / "evaluation.json", j.dump(2) + "\n");
  write_text(dir / "evaluation.txt", table);
  out << table << "reports: " << (dir / "evaluation.json").string() << '\n';
  return reports;
}

std::vector<AblationVariant> ablation_plan(const RunConfig& cfg) {
  std::vector<AblationVariant> plan;
  for (LossConfig l : cfg.ablation_losses) {
    plan.push_back({"loss-" + slug(to_string(l)), table_label(l), l, DiscriminatorKind::patch});
  }
  for (DiscriminatorKind k : cfg.ablation_discriminators) {
    const std::string label = to_string(k) + "-based";
    plan.push_back({"disc-" + to_string(k), label, LossConfig::cgan, k});
  }
  return plan;
}

AblationResult cmd_ablate(const RunConfig& cfg, const fs::path& output_dir, std::ostream& out) {
  const DatasetManifest m = load_checked_manifest(cfg, Split::train);
  check_split_files(m, Split::test);
  const std::vector<AblationVariant> plan = ablation_plan(cfg);
  for (const auto& v : plan) {
    TrainConfig tc = cfg.train;
    tc.loss = v.loss;
    tc.discriminator_kind = v.kind;
    tc.validate();
    (void)FeatureExtractor::from_config(tc.extractor);
  }
  require_writable_dir(output_dir);
  const std::string manifest_sha = sha256_file(cfg.manifest_path());

  json rows = json::array();
  std::map<std::string, EvalReport> reports;  // by variant name
  std::map<std::string, std::string> trained_as;  // shared runs
  AblationResult result;

  auto write_report = [&](const std::string& status, const std::string& error) {
    json audit = json::array();
    bool pass = !rows.empty();
    for (const auto& r : rows) {
      const json& a = r.at("audit");
      const json& ref = rows.front().at("audit");
      for (const char* key : {"seed", "epochs", "batch_size", "learning_rate", "adam_beta1",
                              "adam_beta2", "data_order_hash", "manifest_sha256",
                              "generator_init_hash", "generator", "steps"}) {
        pass = pass && a.at(key) == ref.at(key);
      }
      audit.push_back(a);
    }
    result.audit_passed = pass;
    result.report = {{"status", status},
                     {"manifest", cfg.manifest_path().string()},
                     {"seed", cfg.seed},
                     {"conventions", metric_conventions()},
                     {"fairness_audit", {{"passed", pass}, {"variants", audit}}},
                     {"rows", rows},
                     {"note",
                      "Rows are trained at toy scale; their ordering is not expected to match "
                      "full-scale results. Mean opinion scores need human raters and are not "
                      "reported."}};
    if (!error.empty()) result.report["error"] = error;

    std::vector<EvalReport> loss_rows, disc_rows;
    for (const auto& v : plan) {
      auto it = reports.find(v.name);
      if (it == reports.end()) continue;
      EvalReport r = it->second;
      r.label = v.label;
      (v.name.rfind("loss-", 0) == 0 ? loss_rows : disc_rows).push_back(r);
    }
    std::string table;
    if (!loss_rows.empty()) table += format_table(loss_rows, "Loss functions") + "\n";
    if (!disc_rows.empty()) table += format_table(disc_rows, "Discriminators") + "\n";
    table += std::string("Fairness audit: ") + (pass ? "passed" : "FAILED") + "\n";
    table += result.report.at("note").get<std::string>() + "\n";
    result.table = table;
    write_text(output_dir / "ablation.json", result.report.dump(2) + "\n");
    write_text(output_dir / "ablation.txt", table);
  };

  for (const auto& v : plan) {
    // The patch-based cGAN discriminator row is the cGAN loss row.
    std::string shared;
    for (const auto& prev : plan) {
      if (&prev == &v) break;
      if (prev.loss == v.loss && prev.kind == v.kind && reports.count(prev.name)) shared = prev.name;
    }
    if (!shared.empty()) {
      reports[v.name] = reports.at(shared);
      json row = *std::find_if(rows.begin(), rows.end(),
                               [&](const json& r) { return r.at("name") == shared; });
      row["name"] = v.name;
      row["label"] = v.label;
      row["shared_run"] = shared;
      row["audit"]["variant"] = v.name;
      rows.push_back(row);
      out << v.label << ": reuses " << shared << '\n';
      write_report("partial", "");
      continue;
    }

    TrainConfig tc = cfg.train;
    tc.loss = v.loss;
    tc.discriminator_kind = v.kind;
    const fs::path dir = output_dir / v.name;
    out << "== " << v.label << " (" << v.name << ")\n";
    try {
      TrainOptions o;
      o.output_dir = dir;
      o.on_epoch = [&out](const EpochMetrics& e) { print_epoch(out, "  ", e); };
      const TrainResult tr = train(m, tc, o);
      EvalOptions eo;
      eo.workers = cfg.eval_workers;
      eo.label = v.label;
      const EvalReport rep = evaluate(tr.final_checkpoint, m, eo);
      reports[v.name] = rep;
      const auto g_init = init_generator(tc.generator, RngStream(tc.seed).derive("generator"));
      rows.push_back({{"name", v.name},
                      {"label", v.label},
                      {"loss_config", to_string(v.loss)},
                      {"discriminator_kind", to_string(v.kind)},
                      {"checkpoint", (dir / "final.ckpt").string()},
                      {"evaluation", to_json(rep)},
                      {"audit",
                       {{"variant", v.name},
                        {"seed", tc.seed},
                        {"epochs", tc.epochs},
                        {"batch_size", tc.batch_size},
                        {"learning_rate", tc.learning_rate},
                        {"adam_beta1", tc.adam_beta1},
                        {"adam_beta2", tc.adam_beta2},
                        {"data_order_hash", tr.data_order_hash},
                        {"manifest_sha256", manifest_sha},
                        {"generator_init_hash", g_init.tensors.hash()},
                        {"generator", to_json(tc.generator)},
                        {"steps", tr.final_checkpoint.step}}}});
      out << "  test PSNR " << format("%.2f", rep.overall.output_psnr) << " dB, DSSIM "
          << format("%.4f", rep.overall.output_dssim) << '\n';
      write_report("partial", "");
    } catch (const std::exception& e) {
      write_report("failed", v.name + ": " + e.what());
      throw;
    }
  }
  write_report("complete", "");
  out << result.table;
  return result;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visible watermark removal with a conditional GAN"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string manifest;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)");
    sub->add_option("--seed", seed, "Overrides the configured seed");
    sub->add_option("--manifest", manifest, "Overrides the dataset manifest");
  };

  CLI::App* synth = app.add_subcommand("synthesize", "Build a paired watermark dataset");
  common(synth);
  synth->add_option("--output", output, "Dataset directory (overrides dataset_dir)");

  TrainArgs train_args;
  std::string resume;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the generator and discriminator");
  common(train_cmd);
  train_cmd->add_option("--output", output, "Run directory (overrides output_dir)");
  train_cmd->add_option("--resume", resume, "Checkpoint to continue from");
  train_cmd->add_option("--max-steps", train_args.max_steps, "Stop after this many total steps");

  std::string checkpoint, input;
  CLI::App* remove_cmd = app.add_subcommand("remove", "Remove watermarks from images");
  remove_cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  remove_cmd->add_option("--input", input, "Image file or directory")->required();
  remove_cmd->add_option("--output", output, "Output file or directory")->required();

  bool identity = false;
  std::string split = "test";
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a dataset split");
  common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint");
  eval_cmd->add_flag("--identity", identity, "Also score output = input (the input baseline)");
  eval_cmd->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  eval_cmd->add_option("--output", output, "Report directory");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Train and compare every loss and discriminator variant");
  common(ablate_cmd);
  ablate_cmd->add_option("--output", output, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!manifest.empty()) cfg.manifest = manifest;
    apply_environment(cfg);
    cfg.finalize();

    if (*synth) {
      if (!output.empty()) cfg.dataset_dir = output;
      (void)cmd_synthesize(cfg, out);
    } else if (*train_cmd) {
      if (!output.empty()) cfg.output_dir = output;
      if (!resume.empty()) train_args.resume = resume;
      (void)cmd_train(cfg, train_args, out);
    } else if (*remove_cmd) {
      (void)cmd_remove(checkpoint, input, output, out, err);
    } else if (*eval_cmd) {
      EvaluateArgs a;
      if (!checkpoint.empty()) a.checkpoint = checkpoint;
      a.identity = identity;
      a.split = split == "train" ? Split::train : Split::test;
      a.output_dir = output;
      (void)cmd_evaluate(cfg, a, out);
    } else if (*ablate_cmd) {
      const fs::path dir = output.empty() ? cfg.output_dir / "ablation" : fs::path(output);
      const AblationResult r = cmd_ablate(cfg, dir, out);
      if (!r.audit_passed) {
        err << "error: fairness audit failed\n";
        return kExitFailure;
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace wmr::cli
