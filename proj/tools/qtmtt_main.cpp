// Command-line front end: split-log ingestion, tree reconstruction from
// predicted maps, the gating simulator, raster warping, and metrics.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <qtmtt/qtmtt.hpp>

namespace fs = std::filesystem;
using namespace qtmtt;

namespace {

std::string fmt4(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string> split_fields(std::string_view line, char sep)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = line.find(sep, start);
    out.emplace_back(detail::trim(line.substr(start, p == std::string_view::npos ? p : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

int to_int(const std::string& s, const std::string& context)
{
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != s.size()) throw std::runtime_error(context + ": bad integer '" + s + "'");
  return v;
}

double to_double(const std::string& s, const std::string& context)
{
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != s.size()) throw std::runtime_error(context + ": bad number '" + s + "'");
  return v;
}

// Line-oriented key=value file, '#' comments.
std::map<std::string, std::string> parse_kv_file(const fs::path& path)
{
  std::map<std::string, std::string> kv;
  const std::string text = read_file_to_string(path);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected key=value");
    const std::string key{detail::trim(stripped.substr(0, eq))};
    const std::string value{detail::trim(stripped.substr(eq + 1))};
    if (!kv.insert({key, value}).second)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": duplicate key '" + key + "'");
  }
  return kv;
}

PartitionRules load_rules(const std::string& path)
{
  PartitionRules r;
  if (path.empty()) return r;
  for (const auto& [key, value] : parse_kv_file(path)) {
    const std::string ctx = path + ": " + key;
    if (key == "min_cu_side")
      r.min_cu_side = to_int(value, ctx);
    else if (key == "max_qt_depth")
      r.max_qt_depth = to_int(value, ctx);
    else if (key == "max_mtt_stage")
      r.max_mtt_stage = to_int(value, ctx);
    else if (key == "max_bt_side")
      r.max_bt_side = to_int(value, ctx);
    else if (key == "max_tt_side")
      r.max_tt_side = to_int(value, ctx);
    else if (key == "allow_qt_after_mtt") {
      if (value == "true" || value == "1")
        r.allow_qt_after_mtt = true;
      else if (value == "false" || value == "0")
        r.allow_qt_after_mtt = false;
      else
        throw std::runtime_error(ctx + ": expected true/false");
    } else {
      throw std::runtime_error(path + ": unknown rules key '" + key + "'");
    }
  }
  return r;
}

// Lines `qp,bitrate_kbps,psnr_db`; one header line is tolerated.
std::vector<RdPoint> read_rd_csv(const fs::path& path)
{
  std::vector<RdPoint> pts;
  const std::string text = read_file_to_string(path);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto fields = split_fields(stripped, ',');
    if (fields.size() != 3)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected `qp,bitrate_kbps,psnr_db`");
    if (line_no == 1 && !fields[0].empty() && !std::isdigit((unsigned char)fields[0][0]))
      continue;  // header
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    (void)to_int(fields[0], ctx);
    pts.push_back({to_double(fields[1], ctx), to_double(fields[2], ctx)});
  }
  return pts;
}

// Lines `qp,value`.
std::map<int, double> read_qp_value_csv(const fs::path& path)
{
  std::map<int, double> out;
  const std::string text = read_file_to_string(path);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto fields = split_fields(stripped, ',');
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw std::runtime_error(ctx + ": expected `qp,value`");
    const int qp = to_int(fields[0], ctx);
    if (!out.insert({qp, to_double(fields[1], ctx)}).second)
      throw std::runtime_error(ctx + ": duplicate QP " + std::to_string(qp));
  }
  return out;
}

// ---- convert ----

struct ConvertArgs {
  std::string log_path;
  int width = 0;
  int height = 0;
  int frames = -1;
  std::string rules_path;
  std::string out_dir;
};

int run_convert(const ConvertArgs& a)
{
  const PartitionRules rules = load_rules(a.rules_path);
  std::vector<CtuTreeEntry> entries;
  try {
    entries = parse_split_log(read_file_to_string(a.log_path), rules);
  } catch (const SplitLogParseError& e) {
    throw std::runtime_error(a.log_path + ":" + e.what());
  }
  const auto frames = split_log_to_frames(entries, a.width, a.height, a.frames);
  fs::create_directories(a.out_dir);
  for (const FramePartition& f : frames) {
    char name[32];
    std::snprintf(name, sizeof name, "pmap_%04d.txt", f.poc);
    write_pmap_file(fs::path(a.out_dir) / name, f);
  }
  std::cout << "frames=" << frames.size() << "\n";
  return 0;
}

// ---- reconstruct ----

struct ReconstructArgs {
  std::string pmap_path;
  int th_qt = 0;
  double th_mtt = std::numeric_limits<double>::infinity();
  int dmax = 7;
  long budget = 1'000'000;
  std::string rules_path;
  std::string out_path;
};

int run_reconstruct(const ReconstructArgs& a)
{
  PostConfig cfg;
  cfg.th_qt = a.th_qt;
  cfg.th_mtt = a.th_mtt;
  cfg.max_tree_depth = a.dmax;
  cfg.node_budget = std::size_t(a.budget);
  cfg.rules = load_rules(a.rules_path);

  const FramePartition f = read_pmap_file(a.pmap_path);
  std::vector<SplitLogRecord> records;
  int failures = 0;
  for (int r = 0; r < f.ctu_rows(); ++r)
    for (int c = 0; c < f.ctu_cols(); ++c) {
      try {
        const SplitTree t = reconstruct(f.at(r, c), cfg);
        append_tree_records(t, f.poc, c * kCtuSize, r * kCtuSize, records);
      } catch (const BudgetExceededError& e) {
        std::cerr << "CTU (" << r << "," << c << "): " << e.what() << "\n";
        ++failures;
      }
    }
  write_file_atomic(a.out_path, split_log_to_string(records));
  return failures == 0 ? 0 : 1;
}

// ---- gate ----

struct GateArgs {
  std::string label_path;
  std::string pred_path;
  std::string pmask_path;
  double th1 = 0.2;
  double th2 = 0.9;
  int dmax = 7;
  int level = 3;
  std::string rules_path;
  std::string out_path;
};

int run_gate(const GateArgs& a)
{
  GatingConfig cfg;
  cfg.th1 = a.th1;
  cfg.th2 = a.th2;
  cfg.d_max = a.dmax;
  cfg.level = a.level;
  cfg.rules = load_rules(a.rules_path);

  const FramePartition labels = read_pmap_file(a.label_path);
  const FramePartition preds = read_pmap_file(a.pred_path);
  if (labels.width != preds.width || labels.height != preds.height)
    throw std::runtime_error("label/prediction frame size mismatch");

  const int rows = labels.ctu_rows(), cols = labels.ctu_cols();
  std::vector<bool> seen(std::size_t(rows) * cols, false);
  std::vector<CtuPrediction> ctu_preds(std::size_t(rows) * cols);

  const std::string text = read_file_to_string(a.pmask_path);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (nl == std::string::npos ? text.size() : nl) - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view stripped = detail::trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto fields = split_fields(stripped, ',');
    const std::string ctx = a.pmask_path + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw std::runtime_error(ctx + ": expected `row,col,p_mask`");
    const int r = to_int(fields[0], ctx);
    const int c = to_int(fields[1], ctx);
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw std::runtime_error(ctx + ": CTU (" + fields[0] + "," + fields[1] +
                               ") outside frame grid");
    const std::size_t i = std::size_t(r) * cols + c;
    if (seen[i]) throw std::runtime_error(ctx + ": duplicate CTU entry");
    seen[i] = true;
    ctu_preds[i] = CtuPrediction{preds.at(r, c), to_double(fields[2], ctx), r, c};
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!seen[std::size_t(r) * cols + c])
        throw std::runtime_error(a.pmask_path + ": missing p_mask for CTU (" +
                                 std::to_string(r) + "," + std::to_string(c) + ")");

  const GatingReport rep = simulate_frame(labels, ctu_preds, cfg);
  std::vector<double> pmasks;
  for (const CtuPrediction& p : ctu_preds) pmasks.push_back(p.p_mask);

  std::vector<std::pair<std::string, std::string>> stats{
      {"n_et", std::to_string(rep.n_et)},
      {"n_rdo", std::to_string(rep.n_rdo)},
      {"n_nn", std::to_string(rep.n_nn)},
      {"et_ratio", fmt4(et_ratio(pmasks, cfg))},
      {"nodes_full", std::to_string(rep.nodes_full)},
      {"nodes_gated", std::to_string(rep.nodes_gated)},
      {"skip_ratio", fmt4(rep.skip_ratio)},
      {"level", std::to_string(rep.level)},
  };
  for (const auto& [k, v] : stats) std::cout << k << "=" << v << "\n";
  if (!a.out_path.empty()) {
    std::string csv = "stat,value\n";
    for (const auto& [k, v] : stats) csv += k + "," + v + "\n";
    write_file_atomic(a.out_path, csv);
  }
  return 0;
}

// ---- pwarp ----

struct PwarpArgs {
  std::string cur_path;
  std::string ref_path;
  std::string flow_path;
  std::string depth_path;
  std::string out_prefix;
};

int run_pwarp(const PwarpArgs& a)
{
  const LumaRaster cur = read_pgm_file(a.cur_path);
  const LumaRaster ref = read_pgm_file(a.ref_path);
  const FlowField flow = read_flo_file(a.flow_path);
  const DepthField depth = read_depth_grid_file(a.depth_path);

  if (ref.width != cur.width || ref.height != cur.height)
    throw std::runtime_error("reference frame size differs from current frame");
  if (flow.width != cur.width || flow.height != cur.height)
    throw std::runtime_error("flow field size differs from frame");
  const int cells_w = (cur.width + kCellSize - 1) / kCellSize;
  const int cells_h = (cur.height + kCellSize - 1) / kCellSize;
  if (depth.width != cells_w || depth.height != cells_h)
    throw std::runtime_error("depth grid must be " + std::to_string(cells_w) + "x" +
                             std::to_string(cells_h) + " cells for this frame");

  // The warping numerics want whole CTUs; pad by edge replication, then
  // crop the padding back off.
  const FlowField vp_pad =
      adaptive_flow(replicate_pad(flow, kCtuSize), replicate_pad(depth, kCtuSize / kCellSize));
  const RealPlane pred_pad = warp(replicate_pad(ref, kCtuSize), vp_pad);

  RealPlane residual(cur.width, cur.height);
  for (int y = 0; y < cur.height; ++y)
    for (int x = 0; x < cur.width; ++x)
      residual.at(x, y) = double(cur.at(x, y)) - pred_pad.at(x, y);

  write_file_atomic(a.out_prefix + ".res16", residual_to_string(residual));
  write_flo_file(a.out_prefix + ".flo", crop(vp_pad, cur.width, cur.height));
  return 0;
}

// ---- metrics ----

struct MetricsArgs {
  double t_anchor = 0, t_test = 0;
  double ets_value = 0;
  double t_enc = 0, t_net = 0, t_post = 0;
  std::string anchor_csv, test_csv;
  std::string interp = "auto";
  std::string ets_total_csv, ets_basic_csv;
  double bdbr_total = 0, bdbr_basic = 0;
  std::string series_path;
};

int run_metrics_bdrate(const MetricsArgs& a)
{
  BdInterp interp;
  if (a.interp == "auto")
    interp = BdInterp::Auto;
  else if (a.interp == "natural")
    interp = BdInterp::NaturalCubic;
  else if (a.interp == "monotone")
    interp = BdInterp::MonotoneCubic;
  else
    throw std::runtime_error("--interp must be auto, natural, or monotone");
  std::cout << fmt4(bd_rate(read_rd_csv(a.anchor_csv), read_rd_csv(a.test_csv), interp)) << "\n";
  return 0;
}

int run_metrics_delta(const MetricsArgs& a)
{
  const DeltaMetrics d = delta_metrics(read_qp_value_csv(a.ets_total_csv),
                                       read_qp_value_csv(a.ets_basic_csv), a.bdbr_total,
                                       a.bdbr_basic);
  std::cout << "delta_ets=" << fmt4(d.delta_ets) << "\n";
  std::cout << "delta_bdbr=" << fmt4(d.delta_bdbr) << "\n";
  return 0;
}

int run_metrics_timestats(const MetricsArgs& a)
{
  TimingSeries series;
  const std::string text = read_file_to_string(a.series_path);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace((unsigned char)text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace((unsigned char)text[j])) ++j;
    series.measurements.push_back(
        to_double(text.substr(i, j - i), a.series_path));
    i = j;
  }
  const RobustMeanResult r = robust_mean_time(series);
  std::cout << "mean=" << fmt4(r.mean) << "\n";
  std::cout << "m=" << r.measurements_taken << "\n";
  std::cout << "retained=" << r.retained << "\n";
  std::cout << "converged=" << (r.converged ? 1 : 0) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Partition-map tooling for QT+MTT fast block partitioning"};
  app.require_subcommand(1);

  ConvertArgs ca;
  CLI::App* convert = app.add_subcommand(
      "convert", "Build partition-map files from a split-decision log");
  convert->add_option("log", ca.log_path, "split-decision CSV")->required();
  convert->add_option("--width", ca.width, "frame width in pixels")->required();
  convert->add_option("--height", ca.height, "frame height in pixels")->required();
  convert->add_option("--frames", ca.frames, "frame count (default: highest POC + 1)");
  convert->add_option("--rules", ca.rules_path, "partitioning rules key=value file");
  convert->add_option("--out", ca.out_dir, "output directory")->required();

  ReconstructArgs ra;
  CLI::App* reconstruct = app.add_subcommand(
      "reconstruct", "Project a predicted partition map onto legal split decisions");
  reconstruct->add_option("pmap", ra.pmap_path, "partition-map file")->required();
  reconstruct->add_option("--thqt", ra.th_qt, "QT overshoot tolerance in cells");
  reconstruct->add_option("--thmtt", ra.th_mtt, "per-decision layer error tolerance");
  reconstruct->add_option("--dmax", ra.dmax, "split depth cap during the search");
  reconstruct->add_option("--budget", ra.budget, "search node budget per CTU");
  reconstruct->add_option("--rules", ra.rules_path, "partitioning rules key=value file");
  reconstruct->add_option("--out", ra.out_path, "output split-decision CSV")->required();

  GateArgs ga;
  CLI::App* gate = app.add_subcommand(
      "gate", "Simulate dual-threshold search gating against label partitions");
  gate->add_option("labels", ga.label_path, "label partition-map file")->required();
  gate->add_option("pred", ga.pred_path, "predicted partition-map file")->required();
  gate->add_option("pmask", ga.pmask_path, "p_mask sidecar CSV `row,col,p_mask`")->required();
  gate->add_option("--th1", ga.th1, "early-termination threshold");
  gate->add_option("--th2", ga.th2, "prediction-following threshold");
  gate->add_option("--dmax", ga.dmax, "decision depth cap");
  gate->add_option("--level", ga.level, "acceleration level (MTT layers used, 0..3)");
  gate->add_option("--rules", ga.rules_path, "partitioning rules key=value file");
  gate->add_option("--out", ga.out_path, "also write stats as `stat,value` CSV");

  PwarpArgs pa;
  CLI::App* pwarp = app.add_subcommand(
      "pwarp", "Warp a reference frame with partition-adaptive flow pooling");
  pwarp->add_option("cur", pa.cur_path, "current frame PGM")->required();
  pwarp->add_option("ref", pa.ref_path, "reference frame PGM")->required();
  pwarp->add_option("flow", pa.flow_path, "dense flow .flo")->required();
  pwarp->add_option("depth", pa.depth_path, "QT depth grid (cell granularity)")->required();
  pwarp->add_option("--out", pa.out_prefix, "output prefix (.res16 and .flo appended)")
      ->required();

  MetricsArgs ma;
  CLI::App* metrics = app.add_subcommand("metrics", "Evaluation metrics");
  metrics->require_subcommand(1);
  CLI::App* m_ets = metrics->add_subcommand("ets", "encoding-time saving");
  m_ets->add_option("t_anchor", ma.t_anchor, "anchor seconds")->required();
  m_ets->add_option("t_test", ma.t_test, "test seconds")->required();
  CLI::App* m_eta = metrics->add_subcommand("eta", "acceleration factor from a time saving");
  m_eta->add_option("ets", ma.ets_value, "time saving in [0,1)")->required();
  CLI::App* m_rho = metrics->add_subcommand("rho", "pipeline overhead share");
  m_rho->add_option("t_enc", ma.t_enc, "encoder seconds")->required();
  m_rho->add_option("t_net", ma.t_net, "inference seconds")->required();
  m_rho->add_option("t_post", ma.t_post, "post-processing seconds")->required();
  CLI::App* m_bd = metrics->add_subcommand("bdrate", "average bitrate difference");
  m_bd->add_option("anchor", ma.anchor_csv, "anchor RD CSV")->required();
  m_bd->add_option("test", ma.test_csv, "test RD CSV")->required();
  m_bd->add_option("--interp", ma.interp, "auto|natural|monotone");
  CLI::App* m_delta = metrics->add_subcommand("delta", "QP-set robustness deltas");
  m_delta->add_option("ets_total", ma.ets_total_csv, "full-set `qp,ets` CSV")->required();
  m_delta->add_option("ets_basic", ma.ets_basic_csv, "basic-set `qp,ets` CSV")->required();
  m_delta->add_option("--bdbr-total", ma.bdbr_total, "full-set BD-rate")->required();
  m_delta->add_option("--bdbr-basic", ma.bdbr_basic, "basic-set BD-rate")->required();
  CLI::App* m_time = metrics->add_subcommand("timestats", "robust mean of a timing series");
  m_time->add_option("series", ma.series_path, "whitespace-separated seconds")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (convert->parsed()) return run_convert(ca);
    if (reconstruct->parsed()) return run_reconstruct(ra);
    if (gate->parsed()) return run_gate(ga);
    if (pwarp->parsed()) return run_pwarp(pa);
    if (metrics->parsed()) {
      if (m_ets->parsed()) {
        std::cout << fmt4(ets(ma.t_anchor, ma.t_test)) << "\n";
        return 0;
      }
      if (m_eta->parsed()) {
        std::cout << fmt4(eta(ma.ets_value)) << "\n";
        return 0;
      }
      if (m_rho->parsed()) {
        std::cout << fmt4(overhead_rho({ma.t_enc, ma.t_net, ma.t_post})) << "\n";
        return 0;
      }
      if (m_bd->parsed()) return run_metrics_bdrate(ma);
      if (m_delta->parsed()) return run_metrics_delta(ma);
      if (m_time->parsed()) return run_metrics_timestats(ma);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}
