// Command-line front end for the dense supervision engine:
//   generate   synthesize paired teacher/student prediction files
//   supervise  derive training labels and losses from a teacher/student pair
//   compare    tabulate label disagreement between the two paradigms
//   gradcheck  verify analytic loss gradients against finite differences

#include <array>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtg/compare.hpp"
#include "dtg/config.hpp"
#include "dtg/errors.hpp"
#include "dtg/gradcheck.hpp"
#include "dtg/io.hpp"
#include "dtg/parallel.hpp"
#include "dtg/scene.hpp"
#include "dtg/supervision.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInvariant = 2;

struct ConfigFlags {
  dtg::RunConfig cfg;
  std::string regression_target = "reserved";
  std::string paradigm = "dtg";

  void add_to(CLI::App& app) {
    app.add_option("--tau-rpn", cfg.tau_rpn, "Score threshold ahead of RPN NMS");
    app.add_option("--tau-rcnn", cfg.tau_rcnn, "Score threshold ahead of R-CNN NMS");
    app.add_option("--nms-iou-rpn", cfg.nms_iou_rpn, "NMS IoU threshold, RPN stage");
    app.add_option("--nms-iou-rcnn", cfg.nms_iou_rcnn, "NMS IoU threshold, R-CNN stage");
    app.add_option("-T,--temperature", cfg.temperature, "Rank softmax temperature");
    app.add_option("--beta", cfg.beta, "Rank matching loss weight");
    app.add_option("--alpha", cfg.alpha, "Unlabeled loss weight");
    app.add_option("--gamma", cfg.gamma, "Focal loss focusing parameter");
    app.add_option("--alpha-f", cfg.alpha_f, "Focal loss alpha balance");
    app.add_option("--smooth-l1-beta", cfg.smooth_l1_beta, "Smooth-L1 transition point");
    app.add_option("--regression-target", regression_target,
                   "Regression target per cluster: reserved|all")
        ->check(CLI::IsMember({"reserved", "all"}));
    app.add_option("--paradigm", paradigm, "Label derivation: dtg|baseline")
        ->check(CLI::IsMember({"dtg", "baseline"}));
    app.add_option("--baseline-score-thresh", cfg.baseline_score_thresh,
                   "Pseudo label score threshold (baseline)");
    app.add_option("--baseline-pos-iou", cfg.baseline_pos_iou, "Positive IoU (baseline)");
    app.add_option("--baseline-neg-iou", cfg.baseline_neg_iou, "Background IoU (baseline)");
    app.add_option("--max-active", cfg.max_active, "Pre-NMS candidate cap, 0 = unlimited");
    app.add_option("--fpn-levels", cfg.fpn.num_levels, "Pyramid levels for anchor matching");
    app.add_option("--fpn-base-anchor", cfg.fpn.base_anchor_size, "Base anchor size (pixels)");
    app.add_option("--seed", cfg.seed, "Random seed");
  }

  dtg::RunConfig resolve() {
    cfg.regression_target = regression_target == "all" ? dtg::RegressionTargetMode::kAllBoxes
                                                       : dtg::RegressionTargetMode::kReservedBox;
    cfg.paradigm =
        paradigm == "baseline" ? dtg::Paradigm::kSparseToDense : dtg::Paradigm::kDenseToDense;
    cfg.validate();
    return cfg;
  }
};

struct SceneFlags {
  dtg::SceneSpec spec;
  std::string stage = "rcnn";

  void add_to(CLI::App& app) {
    app.add_option("--objects", spec.num_objects, "Number of ground-truth objects");
    app.add_option("--classes", spec.num_classes, "Number of foreground classes");
    app.add_option("--view-width", spec.view_width, "Image width in pixels");
    app.add_option("--view-height", spec.view_height, "Image height in pixels");
    app.add_option("--jitter", spec.noise.box_jitter_sigma, "Box jitter sigma (pixels)");
    app.add_option("--score-noise", spec.noise.score_noise_sigma, "Score noise sigma");
    app.add_option("--fp-rate", spec.noise.fp_rate, "False positives per duplicate");
    app.add_option("--dups", spec.dups_per_object, "Duplicated candidates per object");
    app.add_option("--background", spec.background_samples, "Clear background samples");
    app.add_option("--stage", stage, "Prediction stage: rpn|rcnn")
        ->check(CLI::IsMember({"rpn", "rcnn"}));
    app.add_option("--anchor-levels", spec.fpn_levels, "Anchor grid levels (rpn scenes)");
  }

  dtg::SceneSpec resolve(std::uint64_t seed) {
    spec.seed = seed;
    spec.stage = stage == "rpn" ? dtg::Stage::kRpn : dtg::Stage::kRcnn;
    return spec;
  }
};

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw dtg::ValidationError("cannot write: " + path);
  out << content;
}

int cmd_generate(const SceneFlags& scene_flags, ConfigFlags& config_flags,
                 const std::string& out_dir) {
  dtg::RunConfig cfg = config_flags.resolve();
  SceneFlags flags = scene_flags;
  const dtg::Scene scene = dtg::generate_scene(flags.resolve(cfg.seed));

  dtg::write_prediction_file(out_dir + "/teacher.jsonl", {scene.teacher});
  dtg::write_prediction_file(out_dir + "/student.jsonl", {scene.student});
  const dtg::json gt = dtg::ground_truth_file_to_json(
      {dtg::ground_truth_to_json(scene.teacher.image_id, scene.ground_truth)});
  write_text_file(out_dir + "/ground_truth.json", gt.dump(2) + "\n");
  std::cout << "wrote " << out_dir << "/{teacher.jsonl,student.jsonl,ground_truth.json} ("
            << scene.teacher.samples.size() << " teacher samples, "
            << scene.student.samples.size() << " student samples)\n";
  return kExitOk;
}

int cmd_supervise(const std::string& teacher_path, const std::string& student_path,
                  const std::string& out_path, ConfigFlags& config_flags) {
  const dtg::RunConfig cfg = config_flags.resolve();
  const std::vector<dtg::DensePrediction> teachers = dtg::read_prediction_file(teacher_path);
  const std::vector<dtg::DensePrediction> students = dtg::read_prediction_file(student_path);

  if (teachers.size() != students.size())
    throw dtg::ValidationError("teacher and student files hold different image counts");
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    if (teachers[i].image_id != students[i].image_id)
      throw dtg::ValidationError("image_id mismatch at line " + std::to_string(i + 1) + ": '" +
                                 teachers[i].image_id + "' vs '" + students[i].image_id + "'");
    if (teachers[i].stage != students[i].stage)
      throw dtg::ValidationError("stage mismatch for image '" + teachers[i].image_id + "'");
  }

  std::vector<dtg::ImageSupervision> results(teachers.size());
  dtg::parallel_for(teachers.size(),
                    [&](std::size_t i) { results[i] = supervise_image(teachers[i], students[i], cfg); });

  dtg::json images = dtg::json::array();
  double sum_cls = 0.0, sum_reg = 0.0, sum_rm = 0.0, sum_unlabeled = 0.0, sum_total = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    dtg::json labels = dtg::json::array();
    for (std::size_t s = 0; s < results[i].labels.size(); ++s)
      labels.push_back(dtg::label_to_json(results[i].labels[s], students[i].samples[s].sample_id));
    images.push_back(dtg::json{{"image_id", teachers[i].image_id},
                               {"stage", dtg::stage_name(teachers[i].stage)},
                               {"labels", std::move(labels)},
                               {"losses", dtg::loss_report_to_json(results[i].losses)}});
    sum_cls += results[i].losses.l_cls;
    sum_reg += results[i].losses.l_reg;
    sum_rm += results[i].losses.l_rm;
    sum_unlabeled += results[i].losses.l_unlabeled;
    sum_total += results[i].losses.l_total;
  }
  const double n = results.empty() ? 1.0 : static_cast<double>(results.size());
  const dtg::json out{{"schema_version", dtg::kSchemaVersion},
                      {"config", dtg::run_config_to_json(cfg)},
                      {"images", std::move(images)},
                      {"summary",
                       {{"num_images", results.size()},
                        {"l_cls", sum_cls / n},
                        {"l_reg", sum_reg / n},
                        {"l_rm", sum_rm / n},
                        {"l_unlabeled", sum_unlabeled / n},
                        {"l_total", sum_total / n}}}};
  write_text_file(out_path, out.dump(2) + "\n");
  std::cout << "wrote " << out_path << " (" << results.size() << " images)\n";
  return kExitOk;
}

int cmd_compare(const SceneFlags& scene_flags, ConfigFlags& config_flags,
                const std::string& scenario, const std::string& out_path) {
  const dtg::RunConfig cfg = config_flags.resolve();
  dtg::Scene scene;
  if (scenario == "misleading") {
    scene = dtg::make_misleading_positive_scene();
  } else if (scenario == "ambiguous") {
    scene = dtg::make_ambiguous_negative_scene();
  } else {
    SceneFlags flags = scene_flags;
    scene = dtg::generate_scene(flags.resolve(cfg.seed));
  }
  const dtg::DisagreementReport report = dtg::compare_paradigms(scene, cfg);
  const dtg::json out{
      {"schema_version", dtg::kSchemaVersion},
      {"scenario", scenario},
      {"seed", cfg.seed},
      {"num_samples", report.num_samples},
      {"counts",
       {{"agreements", report.agreements},
        {"misleading_positive", report.misleading_positive.size()},
        {"ambiguous_negative", report.ambiguous_negative.size()}}},
      {"misleading_indices", report.misleading_positive},
      {"ambiguous_indices", report.ambiguous_negative}};
  const std::string text = out.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
  return kExitOk;
}

int cmd_gradcheck(ConfigFlags& config_flags, double eps, int trials, bool inject_error) {
  const dtg::RunConfig cfg = config_flags.resolve();
  constexpr double kTolerance = 1e-4;
  std::cout << "gradient check: central differences, eps=" << eps << ", trials=" << trials
            << ", tolerance=" << kTolerance << "\n";
  const std::array<dtg::LossId, 3> losses = {dtg::LossId::kFocal, dtg::LossId::kSmoothL1,
                                             dtg::LossId::kRankMatching};
  bool ok = true;
  for (dtg::LossId id : losses) {
    dtg::Rng rng(cfg.seed + static_cast<std::uint64_t>(id));
    const double err = dtg::grad_check(id, rng, trials, eps, inject_error ? 1e-2 : 0.0);
    const bool pass = err < kTolerance;
    ok = ok && pass;
    std::cout << std::left << std::setw(14) << dtg::loss_name(id) << " max_rel_err="
              << std::scientific << std::setprecision(3) << err << (pass ? "  PASS" : "  FAIL")
              << std::defaultfloat << "\n";
  }
  return ok ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense teacher guidance supervision engine"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "Synthesize a paired teacher/student scene");
  SceneFlags gen_scene;
  ConfigFlags gen_cfg;
  std::string out_dir = ".";
  gen_scene.add_to(*generate);
  gen_cfg.add_to(*generate);
  generate->add_option("--out-dir", out_dir, "Output directory");

  // supervise
  auto* supervise = app.add_subcommand("supervise", "Derive labels and losses for a file pair");
  ConfigFlags sup_cfg;
  std::string teacher_path, student_path, sup_out = "supervision.json";
  supervise->add_option("--teacher", teacher_path, "Teacher prediction file")->required();
  supervise->add_option("--student", student_path, "Student prediction file")->required();
  supervise->add_option("--out", sup_out, "Output JSON path");
  sup_cfg.add_to(*supervise);

  // compare
  auto* compare = app.add_subcommand("compare", "Compare baseline and dense paradigm labels");
  SceneFlags cmp_scene;
  ConfigFlags cmp_cfg;
  std::string scenario = "random";
  std::string cmp_out;
  cmp_scene.add_to(*compare);
  cmp_cfg.add_to(*compare);
  compare->add_option("--scenario", scenario, "random|misleading|ambiguous")
      ->check(CLI::IsMember({"random", "misleading", "ambiguous"}));
  compare->add_option("--out", cmp_out, "Write the report here instead of stdout");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients of every loss");
  ConfigFlags gc_cfg;
  double eps = 1e-5;
  int trials = 100;
  bool inject_error = false;
  gc_cfg.add_to(*gradcheck);
  gradcheck->add_option("--eps", eps, "Finite difference step");
  gradcheck->add_option("--trials", trials, "Random instances per loss");
  gradcheck->add_flag("--inject-gradient-error", inject_error)->group("");  // test hook

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(gen_scene, gen_cfg, out_dir);
    if (supervise->parsed()) return cmd_supervise(teacher_path, student_path, sup_out, sup_cfg);
    if (compare->parsed()) return cmd_compare(cmp_scene, cmp_cfg, scenario, cmp_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_cfg, eps, trials, inject_error);
  } catch (const dtg::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const dtg::InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}
