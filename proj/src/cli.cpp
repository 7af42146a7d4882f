#include "sfdet/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "sfdet/anchors.hpp"
#include "sfdet/costmodel.hpp"
#include "sfdet/dota.hpp"
#include "sfdet/error.hpp"
#include "sfdet/proposals.hpp"
#include "sfdet/report.hpp"
#include "sfdet/scoremap.hpp"
#include "sfdet/tensor_io.hpp"

namespace fs = std::filesystem;

namespace sfdet {

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string output_path;
  std::string format = "json";
  std::uint64_t seed = 0;
};

struct Context {
  GlobalOptions global;
  Json file_config = Json::object();
  std::ostream& out;

  // Config section from the --config file, or an empty object.
  Json section(const char* name) const {
    if (file_config.contains(name)) return file_config.at(name);
    return Json::object();
  }
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Json load_json(const fs::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

void emit(const Context& ctx, const std::string& text) {
  if (ctx.global.output_path.empty()) {
    ctx.out << text;
    return;
  }
  std::ofstream f(ctx.global.output_path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + ctx.global.output_path);
  f << text;
}

void emit_json(const Context& ctx, const Json& j) { emit(ctx, j.dump(2) + "\n"); }

Json envelope(const Context& ctx, const char* command, Json config) {
  config["format"] = ctx.global.format;
  config["seed"] = ctx.global.seed;
  return Json{{"tool", {{"name", "sfdet"}, {"version", kToolVersion}}}, {"command", command}, {"config", config}};
}

void require_format(const Context& ctx, std::initializer_list<const char*> allowed) {
  for (const char* f : allowed) {
    if (ctx.global.format == f) return;
  }
  throw Error("format '" + ctx.global.format + "' is not supported by this command");
}

std::vector<fs::path> annotation_files(const std::string& where) {
  const fs::path p(where);
  if (!fs::exists(p)) throw Error("no such file or directory: " + where);
  if (fs::is_regular_file(p)) return {p};
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(p)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no annotation files in " + where);
  return files;
}

std::vector<OBox> to_boxes(const std::vector<Annotation>& annos) {
  std::vector<OBox> boxes;
  boxes.reserve(annos.size());
  for (const Annotation& a : annos) boxes.push_back(quad_to_obox(a));
  return boxes;
}

// Smallest integer extent holding every annotation vertex.
std::pair<int, int> annotation_extent(const std::vector<Annotation>& annos) {
  double max_x = 1.0;
  double max_y = 1.0;
  for (const Annotation& a : annos) {
    for (const Point& p : a.quad) {
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
    }
  }
  return {static_cast<int>(std::ceil(max_x)), static_cast<int>(std::ceil(max_y))};
}

IouMode parse_iou_mode(const std::string& s) {
  if (s == "hbox") return IouMode::EnclosingHBox;
  if (s == "obb") return IouMode::ExactObb;
  throw Error("unknown IoU mode '" + s + "' (expected hbox or obb)");
}

// ---------------------------------------------------------------- coverage

struct CoverageArgs {
  std::string annotations;
  std::string anchors = "adjusted";
  bool compare = false;
  double threshold = 0.5;
  std::string iou_mode = "hbox";
  std::vector<int> image_size;
  unsigned threads = 1;
};

void cmd_coverage(const Context& ctx, const CoverageArgs& args) {
  require_format(ctx, {"json", "csv", "table"});
  const IouMode mode = parse_iou_mode(args.iou_mode);
  if (!(args.threshold > 0.0 && args.threshold < 1.0)) throw Error("threshold must lie in (0, 1)");

  std::vector<std::pair<std::string, AnchorSpec>> specs;
  if (args.compare) {
    specs = {{"original", AnchorSpec::original()}, {"adjusted", AnchorSpec::adjusted()}};
  } else if (args.anchors == "original" || args.anchors == "adjusted") {
    AnchorSpec base = args.anchors == "original" ? AnchorSpec::original() : AnchorSpec::adjusted();
    if (ctx.file_config.contains("anchors")) base = anchor_spec_from_json(ctx.file_config.at("anchors"), base);
    specs = {{args.anchors, base}};
  } else {
    throw Error("unknown anchor set '" + args.anchors + "'");
  }
  for (const auto& [name, spec] : specs) spec.validate();

  std::vector<std::vector<Annotation>> per_file;
  std::size_t total = 0;
  for (const fs::path& f : annotation_files(args.annotations)) {
    per_file.push_back(load_annotation_file(f.string()));
    total += per_file.back().size();
  }
  if (total == 0) throw Error("no annotations parsed from " + args.annotations);

  std::vector<std::pair<std::string, CoverageReport>> results;
  for (const auto& [name, spec] : specs) {
    std::vector<CoverageReport> parts;
    for (const auto& annos : per_file) {
      if (annos.empty()) continue;
      auto [w, h] = annotation_extent(annos);
      if (args.image_size.size() == 2) {
        w = args.image_size[0];
        h = args.image_size[1];
      }
      parts.push_back(coverage_report(to_boxes(annos), spec, w, h, args.threshold, mode, args.threads));
    }
    results.emplace_back(name, merge_coverage(parts));
  }

  if (ctx.global.format == "csv") {
    std::string text;
    if (results.size() == 1) {
      text = coverage_csv(results.front().second);
    } else {
      text = "anchor_set,level,matched_count,matched_fraction\n";
      for (const auto& [name, rep] : results) {
        std::istringstream rows(coverage_csv(rep));
        std::string row;
        std::getline(rows, row);  // header
        while (std::getline(rows, row)) text += name + "," + row + "\n";
      }
    }
    emit(ctx, text);
    return;
  }
  if (ctx.global.format == "table") {
    std::string text;
    for (const auto& [name, rep] : results) {
      text += fmt::format("anchor set: {} ({} objects, IoU >= {:.2f})\n", name, rep.object_count, args.threshold);
      text += fmt::format("{:>6} {:>7} {:>10} {:>9} {:>9}\n", "level", "stride", "base_size", "matched", "fraction");
      for (const LevelCoverage& l : rep.levels) {
        text += fmt::format("{:>6} {:>7g} {:>10g} {:>9} {:>9}\n", l.level, l.stride, l.base_size, l.matched_count,
                            fixed6(l.matched_fraction));
      }
      text += fmt::format("{:>6} {:>7} {:>10} {:>9} {:>9}\n", "none", "-", "-", rep.unmatched_count,
                          fixed6(rep.unmatched_fraction));
    }
    emit(ctx, text);
    return;
  }

  Json cfg{{"annotations", args.annotations},
           {"threshold", args.threshold},
           {"iou_mode", args.iou_mode},
           {"image_size", args.image_size.empty() ? Json("from-annotations") : Json(args.image_size)},
           {"threads", args.threads}};
  Json sets = Json::array();
  for (std::size_t n = 0; n < specs.size(); ++n) {
    sets.push_back(Json{{"name", specs[n].first}, {"anchors", to_json(specs[n].second)}});
  }
  cfg["anchor_sets"] = sets;
  Json doc = envelope(ctx, "coverage", cfg);
  Json reports = Json::array();
  for (const auto& [name, rep] : results) {
    Json r = to_json(rep);
    r["anchor_set"] = name;
    reports.push_back(r);
  }
  doc["reports"] = reports;
  emit_json(ctx, doc);
}

// --------------------------------------------------------------- worstcase

struct WorstcaseArgs {
  std::vector<double> anchor_sizes;
  std::vector<double> strides;
  std::vector<double> object_sizes;
  double threshold = 0.5;
  bool verify = false;
  std::size_t samples = 2000;
};

// Lowest best-anchor IoU seen over random object offsets; brute force over
// the anchors around the object.
double sampled_worst_iou(double a, double s, double o, std::size_t samples, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> offset(0.0, s);
  const int reach = static_cast<int>(std::ceil((a + o) / (2.0 * s))) + 1;
  double worst = 1.0;
  for (std::size_t n = 0; n < samples; ++n) {
    const double ox = offset(rng);
    const double oy = offset(rng);
    const HBox obj{ox - o / 2.0, oy - o / 2.0, ox + o / 2.0, oy + o / 2.0};
    double best = 0.0;
    for (int i = -reach; i <= reach; ++i) {
      for (int j = -reach; j <= reach; ++j) {
        const double ax = j * s;
        const double ay = i * s;
        best = std::max(best, iou_hbb(obj, HBox{ax - a / 2.0, ay - a / 2.0, ax + a / 2.0, ay + a / 2.0}));
      }
    }
    worst = std::min(worst, best);
  }
  return worst;
}

void cmd_worstcase(const Context& ctx, WorstcaseArgs args) {
  require_format(ctx, {"json", "csv", "table"});
  if (args.anchor_sizes.empty() || args.strides.empty() || args.object_sizes.empty()) {
    throw Error("worstcase needs non-empty anchor, stride and object size lists");
  }
  for (auto* list : {&args.anchor_sizes, &args.strides, &args.object_sizes}) {
    std::sort(list->begin(), list->end());
    list->erase(std::unique(list->begin(), list->end()), list->end());
  }

  struct Row {
    double anchor, stride, object, iou;
    bool below;
    std::optional<double> sampled;
  };
  std::mt19937_64 rng(ctx.global.seed);
  std::vector<Row> rows;
  for (double a : args.anchor_sizes) {
    for (double s : args.strides) {
      for (double o : args.object_sizes) {
        Row r{a, s, o, worst_case_iou(a, s, o), false, std::nullopt};
        r.below = r.iou < args.threshold;
        if (args.verify) {
          r.sampled = sampled_worst_iou(a, s, o, args.samples, rng);
          if (*r.sampled < r.iou - 1e-9) {
            throw Error(fmt::format("verification failed at anchor {} stride {} object {}: sampled {} < {}", a, s, o,
                                    *r.sampled, r.iou));
          }
        }
        rows.push_back(r);
      }
    }
  }

  if (ctx.global.format == "csv") {
    std::string text = args.verify ? "anchor_size,stride,object_size,worst_iou,below_threshold,sampled_min_iou\n"
                                   : "anchor_size,stride,object_size,worst_iou,below_threshold\n";
    for (const Row& r : rows) {
      text += fmt::format("{},{},{},{},{}", fixed6(r.anchor), fixed6(r.stride), fixed6(r.object), fixed6(r.iou),
                          r.below ? 1 : 0);
      if (r.sampled) text += "," + fixed6(*r.sampled);
      text += "\n";
    }
    emit(ctx, text);
    return;
  }
  if (ctx.global.format == "table") {
    std::string text = fmt::format("{:>8} {:>8} {:>8} {:>10}  {}\n", "anchor", "stride", "object", "worst_iou", "flag");
    for (const Row& r : rows) {
      text += fmt::format("{:>8g} {:>8g} {:>8g} {:>10}  {}\n", r.anchor, r.stride, r.object, fixed6(r.iou),
                          r.below ? fmt::format("below {:.2f}", args.threshold) : "");
    }
    emit(ctx, text);
    return;
  }

  Json cfg{{"anchor_sizes", args.anchor_sizes},
           {"strides", args.strides},
           {"object_sizes", args.object_sizes},
           {"threshold", args.threshold},
           {"verify", args.verify}};
  if (args.verify) cfg["samples"] = args.samples;
  Json doc = envelope(ctx, "worstcase", cfg);
  Json table = Json::array();
  for (const Row& r : rows) {
    Json row{{"anchor_size", round6(r.anchor)},
             {"stride", round6(r.stride)},
             {"object_size", round6(r.object)},
             {"worst_iou", round6(r.iou)},
             {"below_threshold", r.below}};
    if (r.sampled) row["sampled_min_iou"] = round6(*r.sampled);
    table.push_back(row);
  }
  doc["rows"] = table;
  emit_json(ctx, doc);
}

// ----------------------------------------------------------------- propose

struct ProposeArgs {
  std::string scores;
  std::string deltas;
  std::optional<double> stride;
  std::optional<std::size_t> k_pre;
  std::optional<std::size_t> k_post;
  std::optional<double> nms_threshold;
  std::optional<std::string> hpf;
  std::optional<std::string> kernel;
  std::optional<int> kernel_size;
  std::vector<std::string> sweep;  // a bare --sweep yields one empty value
  bool sweep_requested = false;
  unsigned threads = 1;
};

void cmd_propose(const Context& ctx, const ProposeArgs& args) {
  require_format(ctx, {"json", "csv"});
  AnchorSpec spec = AnchorSpec::adjusted();
  if (ctx.file_config.contains("anchors")) spec = anchor_spec_from_json(ctx.file_config.at("anchors"), spec);
  PipelineConfig cfg;
  if (ctx.file_config.contains("pipeline")) cfg = pipeline_config_from_json(ctx.file_config.at("pipeline"));
  double stride = kSimplifiedStride;
  const Json lattice_sec = ctx.section("lattice");
  if (lattice_sec.contains("stride")) stride = lattice_sec.at("stride").get<double>();

  if (args.stride) stride = *args.stride;
  if (args.k_pre) cfg.k_pre = *args.k_pre;
  if (args.k_post) cfg.k_post = *args.k_post;
  if (args.nms_threshold) cfg.nms_iou_threshold = *args.nms_threshold;
  if (args.hpf) {
    if (*args.hpf != "on" && *args.hpf != "off") throw Error("--hpf expects on or off");
    cfg.hpf_enabled = *args.hpf == "on";
  }
  if (args.kernel || args.kernel_size) {
    cfg.hpf_kernel = make_kernel(args.kernel ? parse_kernel_kind(*args.kernel) : cfg.hpf_kernel.kind,
                                 args.kernel_size ? *args.kernel_size : cfg.hpf_kernel.size);
  }
  cfg.validate();

  const ScoreMap logits = tensor_to_map(load_tensor(args.scores));
  const DeltaMap deltas = tensor_to_map(load_tensor(args.deltas));
  const AnchorLattice lattice = multi_anchor_lattice(spec, stride, logits.height(), logits.width());

  Json resolved{{"scores", args.scores}, {"deltas", args.deltas},   {"stride", stride},
                {"anchors", to_json(spec)}, {"pipeline", to_json(cfg)}, {"threads", args.threads}};

  if (args.sweep_requested) {
    std::vector<std::size_t> budgets;
    for (const std::string& b : args.sweep) {
      if (b.empty()) continue;
      std::size_t value = 0;
      const auto [end, ec] = std::from_chars(b.data(), b.data() + b.size(), value);
      if (ec != std::errc{} || end != b.data() + b.size() || value == 0) {
        throw Error("--sweep budgets must be positive integers, got '" + b + "'");
      }
      budgets.push_back(value);
    }
    if (budgets.empty()) budgets = {2000, 6000, 10000};
    const std::vector<BudgetRow> rows = roi_budget_sweep(logits, deltas, lattice, budgets, cfg, args.threads);
    if (ctx.global.format == "csv") {
      emit(ctx, budget_csv(rows));
      return;
    }
    resolved["sweep"] = budgets;
    Json doc = envelope(ctx, "propose", resolved);
    doc["sweep"] = to_json(rows);
    emit_json(ctx, doc);
    return;
  }

  const std::vector<Proposal> props = rpn_postprocess(logits, deltas, lattice, cfg, args.threads);
  if (ctx.global.format == "csv") {
    emit(ctx, proposals_csv(props));
    return;
  }
  Json doc = envelope(ctx, "propose", resolved);
  doc["proposal_count"] = props.size();
  doc["proposals"] = to_json(props);
  emit_json(ctx, doc);
}

// ------------------------------------------------------------------ filter

struct FilterArgs {
  std::string input;
  std::string kind = "unsharp";
  int size = 5;
  bool sigmoid = false;
  unsigned threads = 1;
};

void cmd_filter(const Context& ctx, const FilterArgs& args) {
  if (ctx.global.output_path.empty()) throw Error("filter writes an SFT1 tensor and needs --output");
  Kernel k = make_kernel(parse_kernel_kind(args.kind), args.size);
  if (ctx.file_config.contains("kernel")) {
    Json kj = ctx.file_config.at("kernel");
    if (!kj.contains("kind")) kj["kind"] = args.kind;
    if (!kj.contains("size")) kj["size"] = args.size;
    k = kernel_from_json(kj);
  }
  ScoreMap m = tensor_to_map(load_tensor(args.input));
  if (args.sigmoid) m = sigmoid_map(m);
  save_tensor(ctx.global.output_path, map_to_tensor(apply_hpf(m, k, args.threads)));
}

// --------------------------------------------------------------------- nms

struct NmsArgs {
  std::string input;
  double threshold = 0.8;
};

void cmd_nms(const Context& ctx, const NmsArgs& args) {
  require_format(ctx, {"json", "csv"});
  if (!(args.threshold > 0.0 && args.threshold < 1.0)) throw Error("IoU threshold must lie in (0, 1)");
  const std::vector<Proposal> in = parse_proposals_csv(read_text(args.input));
  const std::vector<Proposal> kept = rotated_nms(in, args.threshold);
  if (ctx.global.format == "csv") {
    emit(ctx, proposals_csv(kept));
    return;
  }
  Json doc = envelope(ctx, "nms", Json{{"input", args.input}, {"iou_threshold", args.threshold}});
  doc["input_count"] = in.size();
  doc["kept_count"] = kept.size();
  doc["proposals"] = to_json(kept);
  emit_json(ctx, doc);
}

// ------------------------------------------------------------------- flops

struct FlopsArgs {
  std::string model = "oriented-rcnn";
  bool no_hpf = false;
};

ModelConfig resolve_model(const Context& ctx, const std::string& model) {
  if (ctx.file_config.contains("model")) return model_config_from_json(ctx.file_config.at("model"));
  for (const ModelConfig& m : bundled_models()) {
    if (m.name == model) return m;
  }
  if (fs::exists(model)) {
    ModelConfig m = model_config_from_json(load_json(model));
    if (m.name.empty()) m.name = fs::path(model).stem().string();
    return m;
  }
  throw Error("unknown model '" + model + "' (not a bundled name or a readable file)");
}

void cmd_flops(const Context& ctx, const FlopsArgs& args) {
  require_format(ctx, {"json", "csv", "table"});
  const ModelConfig m = resolve_model(ctx, args.model);
  const bool hpf = !args.no_hpf;
  const CostBreakdown base = detector_cost(m.backbone_gflops, m.neck, m.rpn, m.roi_head, false, false);
  const CostBreakdown simp =
      detector_cost(m.backbone_gflops, m.neck, m.rpn, m.roi_head, true, hpf, m.hpf_kernel_side);

  if (ctx.global.format == "table") {
    emit(ctx, cost_table(m.name, base, simp));
    return;
  }
  if (ctx.global.format == "csv") {
    std::string text = "variant,backbone,neck,rpn,high_pass_filter,roi_head,total\n";
    for (const auto& [name, c] : {std::pair{"baseline", base}, std::pair{"simplified", simp}}) {
      text += fmt::format("{},{},{},{},{},{},{}\n", name, fixed6(c.backbone_gflops), fixed6(c.neck_gflops),
                          fixed6(c.rpn_gflops), fixed6(c.filter_gflops), fixed6(c.roi_head_gflops),
                          fixed6(c.total_gflops));
    }
    emit(ctx, text);
    return;
  }
  Json doc = envelope(ctx, "flops", Json{{"model", to_json(m)}, {"hpf", hpf}});
  doc["baseline"] = to_json(base);
  doc["simplified"] = to_json(simp);
  doc["reduction"] = {{"neck", round6(1.0 - simp.neck_gflops / base.neck_gflops)},
                      {"rpn", round6(1.0 - simp.rpn_gflops / base.rpn_gflops)},
                      {"total", round6(reduction_fraction(base, simp))}};
  emit_json(ctx, doc);
}

// -------------------------------------------------------------------- tile

struct TileArgs {
  std::vector<int> image_size;
  std::string annotations;
  int patch = 1024;
  std::optional<int> overlap;
  std::optional<int> step;
  double min_area_fraction = 0.5;
  std::string output_dir;
};

void cmd_tile(const Context& ctx, const TileArgs& args) {
  require_format(ctx, {"json", "csv"});
  if (args.overlap && args.step) throw Error("give either --overlap or --step, not both");
  if (args.image_size.empty() && args.annotations.empty()) throw Error("tile needs --image-size or --annotations");
  const int overlap = args.step ? args.patch - *args.step : args.overlap.value_or(200);
  if (args.step && (*args.step <= 0 || *args.step > args.patch)) throw Error("need 0 < step <= patch");
  if (args.patch <= overlap || overlap < 0) throw Error("need patch > overlap >= 0");

  const auto plan_for = [&](int w, int h) { return tile_plan(w, h, args.patch, overlap); };

  Json cfg{{"patch", args.patch},
           {"overlap", overlap},
           {"min_area_fraction", args.min_area_fraction},
           {"image_size", args.image_size.empty() ? Json("from-annotations") : Json(args.image_size)}};

  if (args.annotations.empty()) {
    const auto plan = plan_for(args.image_size[0], args.image_size[1]);
    if (ctx.global.format == "csv") {
      emit(ctx, tiles_csv(plan));
      return;
    }
    Json doc = envelope(ctx, "tile", cfg);
    doc["windows"] = to_json(plan);
    emit_json(ctx, doc);
    return;
  }

  if (!args.output_dir.empty()) fs::create_directories(args.output_dir);
  cfg["annotations"] = args.annotations;
  cfg["output_dir"] = args.output_dir;
  Json images = Json::array();
  std::string csv = "image,x_offset,y_offset,width,height,objects\n";
  for (const fs::path& f : annotation_files(args.annotations)) {
    const std::vector<Annotation> annos = load_annotation_file(f.string());
    auto [w, h] = annotation_extent(annos);
    if (args.image_size.size() == 2) {
      w = args.image_size[0];
      h = args.image_size[1];
    }
    Json windows = Json::array();
    for (const TileWindow& win : plan_for(w, h)) {
      const std::vector<Annotation> kept = clip_annotations(annos, win, args.min_area_fraction);
      const std::string name = fmt::format("{}__{}__{}", f.stem().string(), static_cast<long>(win.x_offset),
                                           static_cast<long>(win.y_offset));
      if (!args.output_dir.empty()) {
        std::ofstream o(fs::path(args.output_dir) / (name + ".txt"), std::ios::binary | std::ios::trunc);
        if (!o) throw Error("cannot write tile annotations for " + name);
        o << serialize_annotations(kept);
      }
      windows.push_back(Json{{"name", name},
                             {"x_offset", win.x_offset},
                             {"y_offset", win.y_offset},
                             {"width", win.width},
                             {"height", win.height},
                             {"objects", kept.size()}});
      csv += fmt::format("{},{},{},{},{},{}\n", f.stem().string(), fixed6(win.x_offset), fixed6(win.y_offset),
                         fixed6(win.width), fixed6(win.height), kept.size());
    }
    images.push_back(Json{{"image", f.stem().string()}, {"width", w}, {"height", h}, {"windows", windows}});
  }
  if (ctx.global.format == "csv") {
    emit(ctx, csv);
    return;
  }
  Json doc = envelope(ctx, "tile", cfg);
  doc["images"] = images;
  emit_json(ctx, doc);
}

// ------------------------------------------------------------------- stats

struct StatsArgs {
  std::string annotations;
  std::vector<double> bins{0, 8, 16, 32, 64, 128, 256, 512, 1024};
};

void cmd_stats(const Context& ctx, const StatsArgs& args) {
  require_format(ctx, {"json", "csv"});
  std::vector<Annotation> all;
  for (const fs::path& f : annotation_files(args.annotations)) {
    auto annos = load_annotation_file(f.string());
    all.insert(all.end(), annos.begin(), annos.end());
  }
  const SizeHistogram hist = size_histogram(all, args.bins);
  if (ctx.global.format == "csv") {
    emit(ctx, histogram_csv(hist));
    return;
  }
  std::map<std::string, std::size_t> categories;
  std::size_t tiny = 0;
  for (const Annotation& a : all) {
    ++categories[a.category];
    if (std::sqrt(quad_to_obox(a).area()) < 10.0) ++tiny;
  }
  Json doc = envelope(ctx, "stats", Json{{"annotations", args.annotations}, {"bins", args.bins}});
  doc["object_count"] = all.size();
  doc["categories"] = categories;
  doc["smaller_than_10px"] = tiny;
  doc["histogram"] = to_json(hist);
  emit_json(ctx, doc);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-feature two-stage detector analysis toolkit", "sfdet"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--output,-o", global.output_path, "Write the report here instead of stdout");
  app.add_option("--format", global.format, "Report format")->check(CLI::IsMember({"json", "csv", "table"}));
  app.add_option("--seed", global.seed, "Seed for sampling-based self checks");

  CoverageArgs cov;
  auto* coverage = app.add_subcommand("coverage", "Per-level anchor match ratios over DOTA annotations");
  coverage->add_option("--annotations", cov.annotations, "Annotation file or directory")->required();
  coverage->add_option("--anchors", cov.anchors, "Anchor set: original or adjusted");
  coverage->add_flag("--compare", cov.compare, "Report both anchor sets");
  coverage->add_option("--threshold", cov.threshold, "Positive IoU threshold");
  coverage->add_option("--iou-mode", cov.iou_mode, "hbox or obb");
  coverage->add_option("--image-size", cov.image_size, "Image width and height")->expected(2);
  coverage->add_option("--threads", cov.threads, "Worker threads");

  WorstcaseArgs wc;
  auto* worstcase = app.add_subcommand("worstcase", "Worst-case anchor IoU over a stride lattice");
  worstcase->add_option("--anchor-sizes", wc.anchor_sizes)->required()->expected(1, -1);
  worstcase->add_option("--strides", wc.strides)->required()->expected(1, -1);
  worstcase->add_option("--object-sizes", wc.object_sizes)->required()->expected(1, -1);
  worstcase->add_option("--threshold", wc.threshold, "Positive IoU threshold");
  worstcase->add_flag("--verify", wc.verify, "Cross-check against random object placements (uses --seed)");
  worstcase->add_option("--samples", wc.samples, "Placements per cell for --verify");

  ProposeArgs pr;
  auto* propose = app.add_subcommand("propose", "Single-feature RPN post-processing");
  propose->add_option("--scores", pr.scores, "Score logits (SFT1 H x W x A)")->required();
  propose->add_option("--deltas", pr.deltas, "Box deltas (SFT1 H x W x 5A)")->required();
  propose->add_option("--stride", pr.stride, "Feature stride in pixels");
  propose->add_option("--k-pre", pr.k_pre);
  propose->add_option("--k-post", pr.k_post);
  propose->add_option("--nms-threshold", pr.nms_threshold);
  propose->add_option("--hpf", pr.hpf, "on or off");
  propose->add_option("--kernel", pr.kernel, "High-pass kernel kind");
  propose->add_option("--kernel-size", pr.kernel_size);
  auto* sweep_opt = propose->add_option("--sweep", pr.sweep, "RoI budgets (default 2000 6000 10000)")
                        ->expected(0, -1);
  propose->add_option("--threads", pr.threads);

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "Apply a high-pass kernel to a score tensor");
  filter->add_option("--input", fa.input, "SFT1 or CSV tensor")->required();
  filter->add_option("--kind", fa.kind, "unsharp, gaussian, laplacian, log or identity");
  filter->add_option("--size", fa.size, "Kernel size");
  filter->add_flag("--sigmoid", fa.sigmoid, "Apply a sigmoid before filtering");
  filter->add_option("--threads", fa.threads);

  NmsArgs na;
  auto* nms = app.add_subcommand("nms", "Rotated greedy NMS over a proposal CSV");
  nms->add_option("--input", na.input, "CSV with cx,cy,w,h,theta,score")->required();
  nms->add_option("--iou-threshold", na.threshold);

  FlopsArgs fl;
  auto* flops = app.add_subcommand("flops", "Baseline vs simplified FLOPs breakdown");
  flops->add_option("--model", fl.model, "Bundled model name or JSON config path");
  flops->add_flag("--no-hpf", fl.no_hpf, "Leave the score-map filter out of the simplified cost");

  TileArgs ta;
  auto* tile = app.add_subcommand("tile", "Tiling plan and annotation transfer");
  tile->add_option("--image-size", ta.image_size, "Image width and height")->expected(2);
  tile->add_option("--annotations", ta.annotations, "Annotation file or directory");
  tile->add_option("--patch", ta.patch);
  tile->add_option("--overlap", ta.overlap);
  tile->add_option("--step", ta.step);
  tile->add_option("--min-area-fraction", ta.min_area_fraction);
  tile->add_option("--output-dir", ta.output_dir, "Directory for per-window annotation files");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Object count and size statistics");
  stats->add_option("--annotations", st.annotations)->required();
  stats->add_option("--bins", st.bins, "Ascending sqrt(area) bin edges")->expected(2, -1);

  std::vector<std::string> argv_store{"sfdet"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "sfdet: error: " << msg << "\n";
    return 2;
  }

  try {
    Context ctx{global, Json::object(), out};
    if (!global.config_path.empty()) {
      ctx.file_config = load_json(global.config_path);
      if (!ctx.file_config.is_object()) throw Error("config root must be a JSON object");
    }
    if (*coverage) cmd_coverage(ctx, cov);
    if (*worstcase) cmd_worstcase(ctx, wc);
    if (*propose) {
      pr.sweep_requested = sweep_opt->count() > 0;
      cmd_propose(ctx, pr);
    }
    if (*filter) cmd_filter(ctx, fa);
    if (*nms) cmd_nms(ctx, na);
    if (*flops) cmd_flops(ctx, fl);
    if (*tile) cmd_tile(ctx, ta);
    if (*stats) cmd_stats(ctx, st);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "sfdet: error: " << msg << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sfdet
